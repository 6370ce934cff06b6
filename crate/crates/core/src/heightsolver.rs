//! Finite-difference discretization of the height equation on the half
//! period [0, π] × [p₀, 0], Newton's method with a bordered banded solver,
//! discrete bifurcation data, and pseudo-arclength continuation.
//!
//! Unknowns are h at every node above the bed; h = 0 on p = p₀ is imposed by
//! elimination. Even symmetry in q is built in through reflected ghost
//! values, which also removes translation invariance.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::laminar::{solve_laminar, FixedPoint};
use crate::numerics::band::{BandLu, BandMatrix};
use crate::numerics::roots::brent;
use crate::profiles::{PGrid, Physics};
use crate::spectral::{BifurcationPoint, Classification, EigenMode};

/// Format tag of the text field dump.
pub const DUMP_TAG: &str = "heightfield v1";

/// Values of h on the (N_q + 1) × (N_p + 1) node grid, row-major in q.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    pub nq: usize,
    pub grid: PGrid,
    pub q: f64,
    pub h: Vec<f64>,
    /// Sup-norm of the residual when the field was accepted, NaN otherwise.
    pub residual: f64,
    pub physics_hash: u64,
    pub provenance: String,
}

impl HeightField {
    pub fn zeros(nq: usize, grid: PGrid, q: f64) -> Result<Self> {
        if nq < 4 || nq % 2 != 0 {
            return Err(Error::Invalid(format!("N_q must be even and at least 4, got {nq}")));
        }
        Ok(HeightField {
            nq,
            grid,
            q,
            h: vec![0.0; (nq + 1) * grid.len()],
            residual: f64::NAN,
            physics_hash: 0,
            provenance: String::new(),
        })
    }

    /// The q-independent field h(q, p) = column(p).
    pub fn from_column(nq: usize, grid: PGrid, q: f64, column: &[f64]) -> Result<Self> {
        if column.len() != grid.len() {
            return Err(Error::Shape(format!("column of {} values for {} nodes", column.len(), grid.len())));
        }
        let mut hf = HeightField::zeros(nq, grid, q)?;
        for i in 0..=nq {
            for (k, &v) in column.iter().enumerate() {
                hf.h[i * grid.len() + k] = v;
            }
        }
        hf.h.iter_mut().step_by(grid.len()).for_each(|v| *v = 0.0);
        Ok(hf)
    }

    pub fn np(&self) -> usize {
        self.grid.intervals()
    }

    #[inline]
    pub fn idx(&self, i: usize, k: usize) -> usize {
        i * (self.np() + 1) + k
    }

    #[inline]
    pub fn at(&self, i: usize, k: usize) -> f64 {
        self.h[self.idx(i, k)]
    }

    pub fn dq(&self) -> f64 {
        PI / self.nq as f64
    }

    pub fn q_node(&self, i: usize) -> f64 {
        i as f64 * self.dq()
    }

    pub fn top_row(&self) -> Vec<f64> {
        (0..=self.nq).map(|i| self.at(i, self.np())).collect()
    }

    /// (h(0, 0) − h(π, 0)) / 2.
    pub fn amplitude(&self) -> f64 {
        0.5 * (self.at(0, self.np()) - self.at(self.nq, self.np()))
    }

    /// Trapezoid mean of the top row over the half period.
    pub fn depth(&self) -> f64 {
        mean_half_period(&self.top_row())
    }

    /// Number of unknowns (nodes above the bed).
    pub fn n_unknowns(&self) -> usize {
        (self.nq + 1) * self.np()
    }

    pub fn unknowns(&self) -> Vec<f64> {
        let np = self.np();
        let mut x = Vec::with_capacity(self.n_unknowns());
        for i in 0..=self.nq {
            x.extend_from_slice(&self.h[self.idx(i, 1)..=self.idx(i, np)]);
        }
        x
    }

    pub fn set_unknowns(&mut self, x: &[f64]) {
        let np = self.np();
        for i in 0..=self.nq {
            let base = self.idx(i, 1);
            self.h[base..base + np].copy_from_slice(&x[i * np..(i + 1) * np]);
        }
    }

    /// Cosine coefficients of the top row, c_m = (2/N_q) Σ'' h_i cos(m q_i).
    pub fn top_fourier(&self, m_max: usize) -> Vec<f64> {
        cosine_coefficients(&self.top_row(), m_max)
    }

    /// Largest deviation of any p-row from its q-mean; zero for laminar fields.
    pub fn laminar_distance(&self) -> f64 {
        let mut d = 0.0f64;
        for k in 1..=self.np() {
            let row: Vec<f64> = (0..=self.nq).map(|i| self.at(i, k)).collect();
            let m = mean_half_period(&row);
            d = row.iter().fold(d, |acc, v| acc.max((v - m).abs()));
        }
        d
    }

    /// Writes the text dump: header line, then one row of h per q-node.
    pub fn to_dump(&self) -> String {
        let mut s = format!("{DUMP_TAG} {} {} {:.16e} {:.16e}\n", self.nq, self.np(), self.grid.p0(), self.q);
        for i in 0..=self.nq {
            let row: Vec<String> = (0..=self.np()).map(|k| format!("{:.16e}", self.at(i, k))).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty dump".into()))?;
        let rest = header
            .strip_prefix(DUMP_TAG)
            .ok_or_else(|| Error::Format(format!("bad header {header:?}")))?;
        let parts: Vec<&str> = rest.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(Error::Format(format!("header needs Nq Np p0 Q, got {rest:?}")));
        }
        let bad = |what: &str| Error::Format(format!("cannot parse {what}"));
        let nq: usize = parts[0].parse().map_err(|_| bad("Nq"))?;
        let np: usize = parts[1].parse().map_err(|_| bad("Np"))?;
        let p0: f64 = parts[2].parse().map_err(|_| bad("p0"))?;
        let q: f64 = parts[3].parse().map_err(|_| bad("Q"))?;
        let grid = PGrid::new(p0, np).map_err(|e| Error::Format(e.to_string()))?;
        let mut hf = HeightField::zeros(nq, grid, q).map_err(|e| Error::Format(e.to_string()))?;
        let mut vals = Vec::with_capacity(hf.h.len());
        for line in lines.filter(|l| !l.trim().is_empty()) {
            for tok in line.split_whitespace() {
                vals.push(tok.parse::<f64>().map_err(|_| bad(tok))?);
            }
        }
        if vals.len() != hf.h.len() {
            return Err(Error::Format(format!("expected {} values, found {}", hf.h.len(), vals.len())));
        }
        hf.h = vals;
        Ok(hf)
    }
}

/// Trapezoid mean over [0, π] of equally spaced samples.
pub fn mean_half_period(v: &[f64]) -> f64 {
    let n = v.len() - 1;
    let inner: f64 = v[1..n].iter().sum();
    (inner + 0.5 * (v[0] + v[n])) / n as f64
}

/// Cosine coefficients of an even function sampled on [0, π].
pub fn cosine_coefficients(v: &[f64], m_max: usize) -> Vec<f64> {
    let n = v.len() - 1;
    (0..=m_max)
        .map(|m| {
            let mut s = 0.0;
            for (i, &x) in v.iter().enumerate() {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                s += w * x * (m as f64 * i as f64 * PI / n as f64).cos();
            }
            let c = 2.0 * s / n as f64;
            if m == 0 || m == n {
                0.5 * c
            } else {
                c
            }
        })
        .collect()
}

/// FNV-1a fingerprint of the physical data, recorded on fields.
pub fn physics_hash(phys: &Physics) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |x: f64| {
        for b in x.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    eat(phys.g);
    eat(phys.c);
    eat(phys.p0);
    eat(phys.sigma);
    for j in 0..=16 {
        let p = phys.p0 * (1.0 - j as f64 / 16.0);
        eat(phys.rho.value(p));
        eat(phys.beta_at(p));
    }
    h
}

/// Per-row coefficients sampled once per grid.
struct Coefs {
    rho_p: Vec<f64>,
    beta: Vec<f64>,
    rho0: f64,
    g: f64,
    sigma: f64,
}

impl Coefs {
    fn new(phys: &Physics, grid: &PGrid) -> Self {
        let nodes = grid.nodes();
        Coefs {
            rho_p: nodes.iter().map(|&p| phys.rho_p(p)).collect(),
            beta: nodes.iter().map(|&p| phys.beta_at(p)).collect(),
            rho0: phys.rho0(),
            g: phys.g,
            sigma: phys.sigma,
        }
    }
}

/// Local derivative values at a node.
#[derive(Clone, Copy)]
struct Local {
    h: f64,
    hq: f64,
    hqq: f64,
    hp: f64,
    hpp: f64,
    hpq: f64,
}

fn reflect(i: isize, nq: usize) -> usize {
    if i < 0 {
        (-i) as usize
    } else if i as usize > nq {
        2 * nq - i as usize
    } else {
        i as usize
    }
}

/// Stencil weights: (q offset, p offset, weight) for each derivative.
struct Stencils {
    dq: f64,
    dp: f64,
}

impl Stencils {
    fn hq(&self) -> [(isize, isize, f64); 2] {
        let w = 0.5 / self.dq;
        [(1, 0, w), (-1, 0, -w)]
    }
    fn hqq(&self) -> [(isize, isize, f64); 3] {
        let w = 1.0 / (self.dq * self.dq);
        [(1, 0, w), (0, 0, -2.0 * w), (-1, 0, w)]
    }
    fn hp_central(&self) -> [(isize, isize, f64); 2] {
        let w = 0.5 / self.dp;
        [(0, 1, w), (0, -1, -w)]
    }
    fn hp_top(&self) -> [(isize, isize, f64); 3] {
        let w = 0.5 / self.dp;
        [(0, 0, 3.0 * w), (0, -1, -4.0 * w), (0, -2, w)]
    }
    fn hpp(&self) -> [(isize, isize, f64); 3] {
        let w = 1.0 / (self.dp * self.dp);
        [(0, 1, w), (0, 0, -2.0 * w), (0, -1, w)]
    }
    fn hpq(&self) -> [(isize, isize, f64); 4] {
        let w = 0.25 / (self.dq * self.dp);
        [(1, 1, w), (1, -1, -w), (-1, 1, -w), (-1, -1, w)]
    }
}

fn apply(hf: &HeightField, i: usize, k: usize, st: &[(isize, isize, f64)]) -> f64 {
    st.iter()
        .map(|&(di, dk, w)| {
            let ii = reflect(i as isize + di, hf.nq);
            let kk = (k as isize + dk) as usize;
            w * hf.at(ii, kk)
        })
        .sum()
}

fn local(hf: &HeightField, st: &Stencils, i: usize, k: usize) -> Local {
    let top = k == hf.np();
    Local {
        h: hf.at(i, k),
        hq: apply(hf, i, k, &st.hq()),
        hqq: apply(hf, i, k, &st.hqq()),
        hp: if top { apply(hf, i, k, &st.hp_top()) } else { apply(hf, i, k, &st.hp_central()) },
        hpp: if top { 0.0 } else { apply(hf, i, k, &st.hpp()) },
        hpq: if top { 0.0 } else { apply(hf, i, k, &st.hpq()) },
    }
}

fn stencils(hf: &HeightField) -> Stencils {
    Stencils { dq: hf.dq(), dp: hf.grid.step() }
}

/// Discrete h_p at every node (one-sided at the bed and the surface).
pub fn hp_field(hf: &HeightField) -> Vec<f64> {
    let st = stencils(hf);
    let np = hf.np();
    let mut out = vec![0.0; hf.h.len()];
    let w = 0.5 / st.dp;
    for i in 0..=hf.nq {
        for k in 0..=np {
            out[hf.idx(i, k)] = if k == 0 {
                w * (-3.0 * hf.at(i, 0) + 4.0 * hf.at(i, 1) - hf.at(i, 2))
            } else if k == np {
                apply(hf, i, k, &st.hp_top())
            } else {
                apply(hf, i, k, &st.hp_central())
            };
        }
    }
    out
}

fn check_ellipticity(hf: &HeightField) -> Result<()> {
    let hp = hp_field(hf);
    for i in 0..=hf.nq {
        for k in 0..=hf.np() {
            let v = hp[hf.idx(i, k)];
            if !(v > 0.0) {
                return Err(Error::EllipticityLoss { i, k, hp: v });
            }
        }
    }
    Ok(())
}

fn curvature(l: &Local) -> f64 {
    -l.hqq / (1.0 + l.hq * l.hq).powf(1.5)
}

/// Residual of the height equation at every unknown, in unknown order.
///
/// Interior rows carry the quasilinear equation, top rows the Venttsel
/// condition; the bed row h = 0 is eliminated.
pub fn residual(phys: &Physics, hf: &HeightField) -> Result<Vec<f64>> {
    check_ellipticity(hf)?;
    let c = Coefs::new(phys, &hf.grid);
    let st = stencils(hf);
    let np = hf.np();
    let d = hf.depth();
    let mut r = vec![0.0; hf.n_unknowns()];
    for i in 0..=hf.nq {
        for k in 1..=np {
            let l = local(hf, &st, i, k);
            r[i * np + k - 1] = if k < np {
                let hp3 = l.hp.powi(3);
                (1.0 + l.hq * l.hq) * l.hpp + l.hqq * l.hp * l.hp - 2.0 * l.hq * l.hp * l.hpq
                    - c.g * (l.h - d) * c.rho_p[k] * hp3
                    + hp3 * c.beta[k]
            } else {
                1.0 + l.hq * l.hq + l.hp * l.hp * (2.0 * c.sigma * curvature(&l) + 2.0 * c.g * c.rho0 * l.h - hf.q)
            };
        }
    }
    Ok(r)
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// The Jacobian J = A + c wᵀ in unknown order, plus the Q column.
#[derive(Debug, Clone)]
pub struct Linearization {
    /// Banded stencil part.
    pub band: BandMatrix,
    /// Rank-one column from the d(h) dependence of interior rows.
    pub c: Vec<f64>,
    /// Mean weights of d(h) on the top unknowns.
    pub w: Vec<f64>,
    /// ∂R/∂Q (nonzero on top rows only).
    pub jq: Vec<f64>,
}

impl Linearization {
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.band.matvec(x);
        let wx: f64 = self.w.iter().zip(x).map(|(a, b)| a * b).sum();
        for (yi, ci) in y.iter_mut().zip(&self.c) {
            *yi += ci * wx;
        }
        y
    }

    /// Dense copy, for small grids and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.c.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.band.get(i, j) + self.c[i] * self.w[j]).collect())
            .collect()
    }

    pub fn factor(self) -> Result<Factored> {
        let Linearization { band, c, w, jq } = self;
        let lu = band.factor()?;
        let mut ainv_c = c.clone();
        lu.solve(&mut ainv_c);
        let denom = 1.0 + w.iter().zip(&ainv_c).map(|(a, b)| a * b).sum::<f64>();
        if denom.abs() < 1e-14 {
            return Err(Error::SingularSystem("rank-one update of the height Jacobian".into()));
        }
        Ok(Factored { lu, w, ainv_c, denom, jq })
    }
}

/// LU of the band part with the Sherman–Morrison data for the rank-one term.
pub struct Factored {
    lu: BandLu,
    w: Vec<f64>,
    ainv_c: Vec<f64>,
    denom: f64,
    pub jq: Vec<f64>,
}

impl Factored {
    /// Solves J x = b in place.
    pub fn solve(&self, b: &mut [f64]) {
        self.lu.solve(b);
        let t = self.w.iter().zip(b.iter()).map(|(a, x)| a * x).sum::<f64>() / self.denom;
        for (x, a) in b.iter_mut().zip(&self.ainv_c) {
            *x -= t * a;
        }
    }
}

/// Analytic Jacobian of [`residual`] with respect to the unknowns and Q.
pub fn jacobian(phys: &Physics, hf: &HeightField) -> Result<Linearization> {
    check_ellipticity(hf)?;
    let c = Coefs::new(phys, &hf.grid);
    let st = stencils(hf);
    let np = hf.np();
    let n = hf.n_unknowns();
    let d = hf.depth();
    let mut band = BandMatrix::zeros(n, np + 1, np + 1);
    let mut cvec = vec![0.0; n];
    let mut jq = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..=hf.nq {
        let wi = if i == 0 || i == hf.nq { 0.5 } else { 1.0 };
        w[i * np + np - 1] = wi / hf.nq as f64;
    }
    let mut add = |row: usize, i: usize, k: usize, sten: &[(isize, isize, f64)], coef: f64| {
        if coef == 0.0 {
            return;
        }
        for &(di, dk, wt) in sten {
            let kk = (k as isize + dk) as usize;
            if kk == 0 {
                continue;
            }
            let ii = reflect(i as isize + di, hf.nq);
            band.add(row, ii * np + kk - 1, coef * wt);
        }
    };
    for i in 0..=hf.nq {
        for k in 1..=np {
            let row = i * np + k - 1;
            let l = local(hf, &st, i, k);
            if k < np {
                let hp2 = l.hp * l.hp;
                let y = l.h - d;
                let r_hq = 2.0 * l.hq * l.hpp - 2.0 * l.hp * l.hpq;
                let r_hqq = hp2;
                let r_hp = 2.0 * l.hqq * l.hp - 2.0 * l.hq * l.hpq + 3.0 * hp2 * (c.beta[k] - c.g * y * c.rho_p[k]);
                let r_hpp = 1.0 + l.hq * l.hq;
                let r_hpq = -2.0 * l.hq * l.hp;
                let r_h = -c.g * c.rho_p[k] * hp2 * l.hp;
                add(row, i, k, &st.hq(), r_hq);
                add(row, i, k, &st.hqq(), r_hqq);
                add(row, i, k, &st.hp_central(), r_hp);
                add(row, i, k, &st.hpp(), r_hpp);
                add(row, i, k, &st.hpq(), r_hpq);
                add(row, i, k, &[(0, 0, 1.0)], r_h);
                cvec[row] = -r_h;
            } else {
                let s = 1.0 + l.hq * l.hq;
                let kap = curvature(&l);
                let kap_hqq = -s.powf(-1.5);
                let kap_hq = 3.0 * l.hq * l.hqq * s.powf(-2.5);
                let hp2 = l.hp * l.hp;
                let r_hq = 2.0 * l.hq + 2.0 * c.sigma * hp2 * kap_hq;
                let r_hqq = 2.0 * c.sigma * hp2 * kap_hqq;
                let r_hp = 2.0 * l.hp * (2.0 * c.sigma * kap + 2.0 * c.g * c.rho0 * l.h - hf.q);
                let r_h = 2.0 * c.g * c.rho0 * hp2;
                add(row, i, k, &st.hq(), r_hq);
                add(row, i, k, &st.hqq(), r_hqq);
                add(row, i, k, &st.hp_top(), r_hp);
                add(row, i, k, &[(0, 0, 1.0)], r_h);
                jq[row] = -hp2;
            }
        }
    }
    Ok(Linearization { band, c: cvec, w, jq })
}

/// Which extra condition closes the system.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// Q is a parameter; only h is solved for.
    FrozenQ,
    /// Q is unknown and ℓᵀh + ℓ_Q Q = target is appended.
    Linear { l: Vec<f64>, lq: f64, target: f64 },
}

impl Constraint {
    /// Fixes the amplitude (h(0,0) − h(π,0))/2.
    pub fn frozen_amplitude(hf: &HeightField, target: f64) -> Constraint {
        let np = hf.np();
        let mut l = vec![0.0; hf.n_unknowns()];
        l[np - 1] = 0.5;
        l[hf.nq * np + np - 1] = -0.5;
        Constraint::Linear { l, lq: 0.0, target }
    }

    /// Fixes the projection of h on a direction (a mode shape in unknown
    /// order) at its value on `hf`.
    pub fn frozen_projection(hf: &HeightField, direction: &[f64]) -> Constraint {
        let target = dot(direction, &hf.unknowns());
        Constraint::Linear { l: direction.to_vec(), lq: 0.0, target }
    }

    fn value(&self, x: &[f64], q: f64) -> f64 {
        match self {
            Constraint::FrozenQ => 0.0,
            Constraint::Linear { l, lq, target } => dot(l, x) + lq * q - target,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iter: 25, max_halvings: 8 }
    }
}

/// Residual sup-norms, one per iterate (the first is the initial guess).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonReport {
    pub iterations: usize,
    pub history: Vec<f64>,
}

fn merit(phys: &Physics, hf: &HeightField, cons: &Constraint) -> Result<f64> {
    let r = residual(phys, hf)?;
    Ok(sup_norm(&r).max(cons.value(&hf.unknowns(), hf.q).abs()))
}

/// Newton's method on the height equation closed by `cons`, with step
/// halving as damping.
pub fn newton(phys: &Physics, start: &HeightField, cons: &Constraint, opts: NewtonOptions) -> Result<(HeightField, NewtonReport)> {
    let mut hf = start.clone();
    let mut r = residual(phys, &hf)?;
    let mut norm = sup_norm(&r).max(cons.value(&hf.unknowns(), hf.q).abs());
    if !norm.is_finite() {
        return Err(Error::NewtonFailure { iterations: 0, residual: norm });
    }
    let mut history = vec![norm];
    let mut it = 0;
    while norm >= opts.tol {
        if it == opts.max_iter {
            return Err(Error::NewtonFailure { iterations: it, residual: norm });
        }
        it += 1;
        let fac = jacobian(phys, &hf)?.factor()?;
        let x = hf.unknowns();
        let (dx, dq) = match cons {
            Constraint::FrozenQ => {
                let mut b = r.clone();
                fac.solve(&mut b);
                (b, 0.0)
            }
            Constraint::Linear { l, lq, .. } => {
                let e = cons.value(&x, hf.q);
                let mut x1 = r.clone();
                fac.solve(&mut x1);
                let mut x2 = fac.jq.clone();
                fac.solve(&mut x2);
                let den = lq - dot(l, &x2);
                if den == 0.0 || !den.is_finite() {
                    return Err(Error::SingularSystem("bordered Newton system".into()));
                }
                let dq = (dot(l, &x1) - e) / den;
                let dx: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + b * dq).collect();
                (dx, dq)
            }
        };
        // The update is (x − α dx, Q + α dq).
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let mut trial = hf.clone();
            let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a - alpha * b).collect();
            trial.set_unknowns(&xt);
            trial.q = hf.q + alpha * dq;
            if let Ok(m) = merit(phys, &trial, cons) {
                if m.is_finite() && (m < norm || m < opts.tol) {
                    accepted = Some((trial, m));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((trial, m)) => {
                hf = trial;
                norm = m;
                history.push(m);
                r = residual(phys, &hf)?;
            }
            None => return Err(Error::NewtonFailure { iterations: it, residual: norm }),
        }
    }
    hf.residual = sup_norm(&r);
    Ok((hf, NewtonReport { iterations: it, history }))
}

// ---------------------------------------------------------------------------
// Discrete laminar columns and discrete onset of bifurcation.

/// Eigenvalue of the reflected second difference on cos(n q): the squared
/// effective wavenumber (4/Δq²) sin²(nΔq/2).
pub fn effective_wavenumber_sq(n: usize, nq: usize) -> f64 {
    let dq = PI / nq as f64;
    let s = (0.5 * n as f64 * dq).sin();
    4.0 * s * s / (dq * dq)
}

/// Residual and Fourier-block Jacobian of a q-independent column. Blocks
/// n ≥ 1 act on perturbations v(p) cos(nq); for n = 0 the d(h) coupling is
/// left out and added by the caller as a rank-one term.
fn column_system(c: &Coefs, grid: &PGrid, col: &[f64], q: f64, neff2: f64) -> (Vec<f64>, BandMatrix) {
    let np = grid.intervals();
    let dp = grid.step();
    let mut r = vec![0.0; np];
    let mut a = BandMatrix::zeros(np, np.min(2), np.min(2));
    let d = col[np];
    for k in 1..=np {
        let row = k - 1;
        if k < np {
            let hp = (col[k + 1] - col[k - 1]) / (2.0 * dp);
            let hpp = (col[k + 1] - 2.0 * col[k] + col[k - 1]) / (dp * dp);
            let hp2 = hp * hp;
            let y = col[k] - d;
            r[row] = hpp + hp2 * hp * (c.beta[k] - c.g * y * c.rho_p[k]);
            let r_hp = 3.0 * hp2 * (c.beta[k] - c.g * y * c.rho_p[k]);
            let r_h = -c.g * c.rho_p[k] * hp2 * hp;
            let wpp = 1.0 / (dp * dp);
            let wp = 0.5 / dp;
            a.add(row, row, -2.0 * wpp + r_h - neff2 * hp2);
            if k + 1 <= np {
                a.add(row, row + 1, wpp + r_hp * wp);
            }
            if k > 1 {
                a.add(row, row - 1, wpp - r_hp * wp);
            }
        } else {
            let hp = (3.0 * col[k] - 4.0 * col[k - 1] + col[k - 2]) / (2.0 * dp);
            let hp2 = hp * hp;
            r[row] = 1.0 + hp2 * (2.0 * c.g * c.rho0 * col[k] - q);
            let r_hp = 2.0 * hp * (2.0 * c.g * c.rho0 * col[k] - q);
            let wp = 0.5 / dp;
            a.add(row, row, 3.0 * wp * r_hp + 2.0 * c.g * c.rho0 * hp2 + 2.0 * c.sigma * hp2 * neff2);
            a.add(row, row - 1, -4.0 * wp * r_hp);
            if k >= 2 && k - 2 >= 1 {
                a.add(row, row - 2, wp * r_hp);
            }
        }
    }
    (r, a)
}

/// Dense Newton solve for the column problem (the d coupling makes the mean
/// block dense in its last column).
fn column_newton(c: &Coefs, grid: &PGrid, guess: &[f64], q: f64, tol: f64) -> Result<Vec<f64>> {
    let np = grid.intervals();
    let dp = grid.step();
    let mut col = guess.to_vec();
    col[0] = 0.0;
    let mut norm = f64::NAN;
    for _ in 0..50 {
        let (r, a) = column_system(c, grid, &col, q, 0.0);
        norm = sup_norm(&r);
        if norm < tol {
            return Ok(col);
        }
        // Band part plus the dense last column from d(h) = h_top.
        let mut u: Vec<f64> = vec![0.0; np];
        for k in 1..np {
            let hp = (col[k + 1] - col[k - 1]) / (2.0 * dp);
            u[k - 1] = c.g * c.rho_p[k] * hp.powi(3);
        }
        let lu = a.factor()?;
        let mut x = r.clone();
        lu.solve(&mut x);
        let mut z = u.clone();
        lu.solve(&mut z);
        let den = 1.0 + z[np - 1];
        let t = x[np - 1] / den;
        let mut step = 0.0f64;
        for k in 0..np {
            let dk = x[k] - t * z[k];
            col[k + 1] -= dk;
            step = step.max(dk.abs());
        }
        // Rounding floor of the second-difference stencil reached.
        if step < 1e-14 * (1.0 + col[np].abs()) && norm < 1e3 * tol {
            return Ok(col);
        }
    }
    Err(Error::NewtonFailure { iterations: 50, residual: norm })
}

/// The discrete laminar column with the given Q, started from the
/// continuous laminar flow at λ.
pub fn discrete_laminar(phys: &Physics, grid: &PGrid, lambda: f64, fp: FixedPoint) -> Result<(Vec<f64>, f64)> {
    let flow = solve_laminar(phys, lambda, grid, fp)?;
    let c = Coefs::new(phys, grid);
    let col = column_newton(&c, grid, &flow.h, flow.q, 1e-12)?;
    Ok((col, flow.q))
}

/// Bifurcation data of the discretized problem for wavenumber n.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteOnset {
    pub n: usize,
    /// Continuous λ whose Q(λ) makes the n-block singular.
    pub lambda: f64,
    pub q: f64,
    /// Laminar column, bed value included.
    pub column: Vec<f64>,
    /// Null vector of the n-block, bed value included, top value 1.
    pub mode: Vec<f64>,
}

fn block_det(phys: &Physics, grid: &PGrid, n: usize, nq: usize, lambda: f64, fp: FixedPoint) -> Result<(f64, f64, Vec<f64>, f64)> {
    let (col, q) = discrete_laminar(phys, grid, lambda, fp)?;
    let c = Coefs::new(phys, grid);
    let (_, a) = column_system(&c, grid, &col, q, effective_wavenumber_sq(n, nq));
    // A zero pivot means the block is singular to working precision.
    let (s, l) = a.factor().map(|lu| lu.log_det()).unwrap_or((0.0, 0.0));
    Ok((s, l, col, q))
}

/// Locates the discrete onset near `lambda_guess` (typically the
/// continuous λ_*) by a sign change of det of the n-block.
pub fn discrete_onset(
    phys: &Physics,
    grid: &PGrid,
    nq: usize,
    n: usize,
    lambda_guess: f64,
    fp: FixedPoint,
) -> Result<DiscreteOnset> {
    let (s0, l0, _, _) = block_det(phys, grid, n, nq, lambda_guess, fp)?;
    let f = |lam: f64| -> Result<f64> {
        let (s, l, _, _) = block_det(phys, grid, n, nq, lam, fp)?;
        Ok(if s == 0.0 { 0.0 } else { s * (l - l0).exp() })
    };
    let f0 = s0;
    let mut bracket = None;
    let mut step = 1e-3 * lambda_guess.abs().max(1e-3);
    for _ in 0..40 {
        for cand in [lambda_guess - step, lambda_guess + step] {
            if let Ok(v) = f(cand) {
                if v.signum() != f0.signum() {
                    bracket = Some(if cand < lambda_guess { (cand, lambda_guess) } else { (lambda_guess, cand) });
                    break;
                }
            }
        }
        if bracket.is_some() {
            break;
        }
        step *= 1.6;
        if step > 0.5 * lambda_guess.abs() {
            break;
        }
    }
    let (a, b) = bracket.ok_or_else(|| Error::RootNotFound(format!("discrete onset for n = {n} near {lambda_guess}")))?;
    let lam = brent(f, a, b, 1e-14 * lambda_guess.abs().max(1.0), 200)?;
    let (_, _, col, q) = block_det(phys, grid, n, nq, lam, fp)?;
    let c = Coefs::new(phys, grid);
    let (_, mut a) = column_system(&c, grid, &col, q, effective_wavenumber_sq(n, nq));
    // Inverse iteration from a smooth start, with a tiny shift so the
    // factorization exists even when the block is exactly singular.
    let np = grid.intervals();
    let diag = (0..np).fold(0.0f64, |m, k| m.max(a.get(k, k).abs()));
    for k in 0..np {
        a.add(k, k, 1e-13 * diag);
    }
    let lu = a.factor()?;
    let mut v: Vec<f64> = (1..=np).map(|k| k as f64 / np as f64).collect();
    for _ in 0..3 {
        lu.solve(&mut v);
        let top = v[np - 1];
        v.iter_mut().for_each(|x| *x /= top);
    }
    let mut mode = vec![0.0];
    mode.extend(v);
    Ok(DiscreteOnset { n, lambda: lam, q, column: col, mode })
}

/// σ at which the discrete onsets for wavenumbers 1 and n₂ coincide, found
/// by a secant-bracketed Brent search started from the continuous σ_d.
pub fn discrete_double_sigma(
    phys: &Physics,
    grid: &PGrid,
    nq: usize,
    n2: usize,
    sigma_guess: f64,
    lambda_guess: f64,
    fp: FixedPoint,
) -> Result<(f64, f64)> {
    let gap = |s: f64| -> Result<f64> {
        let ph = phys.with_sigma(s);
        let a = discrete_onset(&ph, grid, nq, 1, lambda_guess, fp)?;
        let b = discrete_onset(&ph, grid, nq, n2, lambda_guess, fp)?;
        Ok(a.lambda - b.lambda)
    };
    let g0 = gap(sigma_guess)?;
    let mut step = 1e-3 * sigma_guess.max(1e-3);
    for _ in 0..30 {
        for cand in [sigma_guess - step, sigma_guess + step] {
            if cand <= 0.0 {
                continue;
            }
            if let Ok(v) = gap(cand) {
                if v.signum() != g0.signum() {
                    let (a, b) = if cand < sigma_guess { (cand, sigma_guess) } else { (sigma_guess, cand) };
                    let s = brent(gap, a, b, 1e-15 * sigma_guess.max(1.0), 200)?;
                    let on = discrete_onset(&phys.with_sigma(s), grid, nq, 1, lambda_guess, fp)?;
                    return Ok((s, on.lambda));
                }
            }
        }
        step *= 2.0;
    }
    Err(Error::RootNotFound(format!("discrete double point for n2 = {n2}")))
}

/// A starting field on a local branch together with the direction that
/// defines its projection constraint.
#[derive(Debug, Clone)]
pub struct Germ {
    pub field: HeightField,
    /// Base (laminar) field at the discrete onset.
    pub base: HeightField,
    /// Mode direction in unknown order.
    pub direction: Vec<f64>,
    pub eps: f64,
    /// Exponent relating ε to |Q − Q_*| (½ cubic, 1 quadratic).
    pub scaling: f64,
    pub q_star: f64,
}

impl Germ {
    /// The same germ at another ε.
    pub fn at(&self, eps: f64) -> Germ {
        let mut field = self.base.clone();
        let x: Vec<f64> = self.base.unknowns().iter().zip(&self.direction).map(|(b, d)| b + eps * d).collect();
        field.set_unknowns(&x);
        field.provenance = format!("germ eps={eps:e}");
        Germ { field, eps, ..self.clone() }
    }
}

/// h = H(·; λ_*) + ε Σ ξ_j M_j(p) cos(n_j q) on an N_q × N_p grid.
///
/// H, λ_* and M_j are taken from the discretized problem (discrete laminar
/// column and null vectors of the Fourier blocks) so that the germ is exact
/// to first order in ε for the discrete equations. `xi` is expressed in the
/// normalization of `bp.modes`; the components are mapped to surface
/// amplitudes ξ_j M_j(0).
pub fn germ(phys: &Physics, bp: &BifurcationPoint, eps: f64, xi: [f64; 2], nq: usize, fp: FixedPoint) -> Result<Germ> {
    let grid = bp.flow.grid;
    if bp.class == Classification::ZeroMode {
        return Err(Error::Invalid("germs are built at Simple or Double points".into()));
    }
    let modes: Vec<&EigenMode> = bp.modes.iter().filter(|m| m.n >= 1).collect();
    let first = discrete_onset(phys, &grid, nq, modes[0].n, bp.lambda_star, fp)?;
    let mut base = HeightField::from_column(nq, grid, first.q, &first.column)?;
    base.physics_hash = physics_hash(phys);
    base.residual = f64::NAN;
    let mut dir_field = HeightField::zeros(nq, grid, 0.0)?;
    for (j, m) in modes.iter().enumerate().take(2) {
        if xi[j] == 0.0 {
            continue;
        }
        let onset = if j == 0 { first.clone() } else { discrete_onset(phys, &grid, nq, m.n, bp.lambda_star, fp)? };
        let amp = xi[j] * m.m[grid.intervals()] * m.log_scale.exp();
        for i in 0..=nq {
            let cq = (m.n as f64 * i as f64 * PI / nq as f64).cos();
            for k in 0..=grid.intervals() {
                let id = dir_field.idx(i, k);
                dir_field.h[id] += amp * onset.mode[k] * cq;
            }
        }
    }
    let scaling = if matches!(bp.class, Classification::Double(n2) if n2 == 2 * modes[0].n) { 1.0 } else { 0.5 };
    let g = Germ {
        field: base.clone(),
        direction: dir_field.unknowns(),
        base,
        eps,
        scaling,
        q_star: first.q,
    };
    Ok(g.at(eps))
}

// ---------------------------------------------------------------------------
// Continuation.

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Controls {
    pub max_steps: usize,
    pub ds_max: f64,
    pub ds_min: f64,
    pub delta_stop: f64,
    pub kappa_stop: f64,
    pub q_stop: f64,
    pub tol_loop: f64,
    pub newton: NewtonOptions,
}

impl Default for Controls {
    fn default() -> Self {
        Controls {
            max_steps: 500,
            ds_max: 0.02,
            ds_min: 1e-9,
            delta_stop: 1e-3,
            kappa_stop: 1e3,
            q_stop: 1e6,
            tol_loop: 1e-6,
            newton: NewtonOptions { tol: 1e-10, max_iter: 10, max_halvings: 8 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    MaxSteps,
    StagnationApproach,
    VelocityBlowup,
    CurvatureBlowup,
    EllipticityLoss,
    ClosedLoop,
    NewtonFailure,
    QLimit,
}

/// M1..M6 of an accepted point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monitors {
    pub max_hp: f64,
    pub min_hp: f64,
    pub min_venttsel: f64,
    pub min_curvature: f64,
    pub q: f64,
    pub amplitude: f64,
}

pub fn monitors(phys: &Physics, hf: &HeightField) -> Monitors {
    let hp = hp_field(hf);
    let st = stencils(hf);
    let np = hf.np();
    let mut min_v = f64::INFINITY;
    let mut min_k = f64::INFINITY;
    for i in 0..=hf.nq {
        let l = local(hf, &st, i, np);
        let kap = curvature(&l);
        min_k = min_k.min(kap);
        min_v = min_v.min(hf.q - 2.0 * phys.sigma * kap - 2.0 * phys.g * phys.rho0() * l.h);
    }
    Monitors {
        max_hp: hp.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_hp: hp.iter().copied().fold(f64::INFINITY, f64::min),
        min_venttsel: min_v,
        min_curvature: min_k,
        q: hf.q,
        amplitude: hf.amplitude(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchPoint {
    pub step: usize,
    pub s: f64,
    pub q: f64,
    pub amplitude: f64,
    pub monitors: Monitors,
    pub residual: f64,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub fields: Vec<HeightField>,
    pub termination: Termination,
    pub q_star: f64,
    /// Smallest distance to the laminar family over points after the first.
    pub min_laminar_distance: f64,
}

impl Branch {
    /// CSV with columns s, Q, amplitude, M1..M6, residual, step.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("s,Q,amplitude,M1,M2,M3,M4,M5,M6,residual,step\n");
        for p in &self.points {
            let m = &p.monitors;
            let vals = [p.s, p.q, p.amplitude, m.max_hp, m.min_hp, m.min_venttsel, m.min_curvature, m.q, m.amplitude, p.residual];
            let row: Vec<String> = vals.iter().map(|v| format!("{v:.16e}")).collect();
            s.push_str(&format!("{},{}\n", row.join(","), p.step));
        }
        s
    }
}

fn weighted_norm(dx: &[f64], dq: f64) -> f64 {
    (dot(dx, dx) / dx.len() as f64 + dq * dq).sqrt()
}

fn check_stop(m: &Monitors, c: &Controls) -> Option<Termination> {
    if m.max_hp > 1.0 / c.delta_stop {
        Some(Termination::StagnationApproach)
    } else if m.min_hp < c.delta_stop {
        Some(Termination::VelocityBlowup)
    } else if m.min_venttsel < c.delta_stop {
        Some(Termination::EllipticityLoss)
    } else if m.min_curvature < -c.kappa_stop {
        Some(Termination::CurvatureBlowup)
    } else if m.q > c.q_stop {
        Some(Termination::QLimit)
    } else {
        None
    }
}

/// Pseudo-arclength continuation from a germ.
///
/// The first two points are the germ corrected at ε and 2ε with its
/// projection frozen; from there a secant predictor and the arclength
/// corrector on (h, Q) follow, with the weighted norm ‖δh‖²/N + |δQ|².
pub fn continue_branch(phys: &Physics, germ: &Germ, controls: &Controls) -> Branch {
    let mut pts: Vec<BranchPoint> = Vec::new();
    let mut fields: Vec<HeightField> = Vec::new();
    let push = |hf: &HeightField, s: f64, it: usize, pts: &mut Vec<BranchPoint>, fields: &mut Vec<HeightField>| {
        let m = monitors(phys, hf);
        pts.push(BranchPoint {
            step: pts.len(),
            s,
            q: hf.q,
            amplitude: hf.amplitude(),
            monitors: m,
            residual: hf.residual,
            newton_iterations: it,
        });
        fields.push(hf.clone());
        m
    };
    let done = |pts: Vec<BranchPoint>, fields: Vec<HeightField>, t: Termination| {
        let min_d = fields.iter().skip(1).map(|f| f.laminar_distance()).fold(f64::INFINITY, f64::min);
        Branch { points: pts, fields, termination: t, q_star: germ.q_star, min_laminar_distance: min_d }
    };
    let hash = physics_hash(phys);
    let corr = |g: &Germ| -> Result<(HeightField, NewtonReport)> {
        let cons = Constraint::frozen_projection(&g.field, &germ.direction);
        let mut opts = controls.newton;
        opts.max_iter = opts.max_iter.max(25);
        newton(phys, &g.field, &cons, opts)
    };
    let first = match corr(germ) {
        Ok(r) => r,
        Err(_) => return done(pts, fields, Termination::NewtonFailure),
    };
    let mut f0 = first.0;
    f0.physics_hash = hash;
    f0.provenance = "germ".into();
    let m0 = push(&f0, 0.0, first.1.iterations, &mut pts, &mut fields);
    if let Some(t) = check_stop(&m0, controls) {
        return done(pts, fields, t);
    }
    if controls.max_steps == 0 {
        return done(pts, fields, Termination::MaxSteps);
    }
    let second = match corr(&germ.at(2.0 * germ.eps)) {
        Ok(r) => r,
        Err(_) => return done(pts, fields, Termination::NewtonFailure),
    };
    let mut f1 = second.0;
    f1.physics_hash = hash;
    f1.provenance = "continuation step 1".into();
    let x0 = f0.unknowns();
    let mut x_prev = f1.unknowns();
    let mut q_prev = f1.q;
    let dx: Vec<f64> = x_prev.iter().zip(&x0).map(|(a, b)| a - b).collect();
    let dq0 = q_prev - f0.q;
    let mut ds = weighted_norm(&dx, dq0);
    let mut s = ds;
    let mut tan: Vec<f64> = dx.iter().map(|v| v / ds).collect();
    let mut tan_q = dq0 / ds;
    let m1 = push(&f1, s, second.1.iterations, &mut pts, &mut fields);
    if let Some(t) = check_stop(&m1, controls) {
        return done(pts, fields, t);
    }
    let n = x_prev.len() as f64;
    let q_start = f0.q;
    let mut current = f1;
    ds = ds.min(controls.ds_max);
    while pts.len() <= controls.max_steps {
        let mut trial = current.clone();
        let xp: Vec<f64> = x_prev.iter().zip(&tan).map(|(a, t)| a + ds * t).collect();
        trial.set_unknowns(&xp);
        trial.q = q_prev + ds * tan_q;
        let l: Vec<f64> = tan.iter().map(|t| t / n).collect();
        let target = dot(&l, &x_prev) + tan_q * q_prev + ds;
        let cons = Constraint::Linear { l, lq: tan_q, target };
        match newton(phys, &trial, &cons, controls.newton) {
            Ok((mut hf, rep)) => {
                let x = hf.unknowns();
                let d: Vec<f64> = x.iter().zip(&x_prev).map(|(a, b)| a - b).collect();
                let dq = hf.q - q_prev;
                let nrm = weighted_norm(&d, dq);
                if nrm == 0.0 {
                    return done(pts, fields, Termination::NewtonFailure);
                }
                tan = d.iter().map(|v| v / nrm).collect();
                tan_q = dq / nrm;
                s += nrm;
                hf.physics_hash = hash;
                hf.provenance = format!("continuation step {}", pts.len());
                let m = push(&hf, s, rep.iterations, &mut pts, &mut fields);
                if let Some(t) = check_stop(&m, controls) {
                    return done(pts, fields, t);
                }
                let back: Vec<f64> = x.iter().zip(&x0).map(|(a, b)| a - b).collect();
                if s > 10.0 * ds && weighted_norm(&back, hf.q - q_start) < controls.tol_loop {
                    return done(pts, fields, Termination::ClosedLoop);
                }
                x_prev = x;
                q_prev = hf.q;
                current = hf;
                if rep.iterations <= 3 {
                    ds = (2.0 * ds).min(controls.ds_max);
                } else if rep.iterations >= 7 {
                    ds *= 0.5;
                }
            }
            Err(_) => {
                ds *= 0.5;
                if ds < controls.ds_min {
                    return done(pts, fields, Termination::NewtonFailure);
                }
            }
        }
    }
    done(pts, fields, Termination::MaxSteps)
}

// ---------------------------------------------------------------------------
// Nodal pattern.

/// Outcome of [`nodal_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Nodal {
    pub ok: bool,
    /// The top row is flat to rounding (laminar); counted as ok.
    pub flat: bool,
}

/// True iff, over one minimal period [0, π/n_min], the surface decreases
/// strictly from a crest at q = 0 to a trough at q = π/n_min.
pub fn nodal_check(hf: &HeightField, n_min: usize) -> Nodal {
    let top = hf.top_row();
    let scale = top.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let last = hf.nq / n_min.max(1);
    let diffs: Vec<f64> = (0..last).map(|i| top[i + 1] - top[i]).collect();
    let flat = diffs.iter().all(|d| d.abs() <= 1e-13 * scale);
    if flat {
        return Nodal { ok: true, flat: true };
    }
    Nodal { ok: diffs.iter().all(|&d| d < 0.0), flat: false }
}
