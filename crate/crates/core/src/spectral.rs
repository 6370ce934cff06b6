//! The linearized Sturm-Liouville problem
//!
//! ```text
//! (a³M′)′ = (n²a + gρ_p) M,   M(p₀) = 0,   λ^{3/2} M′(0) = (n²σ + gρ(0)) M(0),
//! ```
//!
//! with a = H_p^{-1}, solved by shooting; the dispersion function D, the
//! bifurcation parameter λ_*, an independent Rayleigh-quotient evaluation and
//! the Σ₁/Σ₂/Σ₃ classification.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::laminar::{lambda_floor, solve_laminar, FixedPoint, LaminarFlow, LAMBDA_CAP};
use crate::numerics::roots::brent;
use crate::profiles::{PGrid, Physics};

/// Relative tolerance below which a wavenumber counts as resonant.
pub const RESONANCE_TOL: f64 = 1e-6;

/// Default highest wavenumber scanned by [`classify`].
pub const N_MAX: usize = 64;

/// Growth factor of the geometric bracket scan for λ_*.
const SCAN_RATIO: f64 = 1.15;

/// Rescale threshold used while shooting at large n/√λ.
const RENORM: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// M′(p₀) = 1.
    Shooting,
    /// M(0) = 1.
    Surface,
    /// M′(p₀) = n / a(p₀), matching sinh(n(p − p₀)/√λ) for irrotational flow.
    SinhMatched,
    /// Any other scale.
    Custom,
}

/// A solution of the linearized problem on the grid of its flow.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenMode {
    pub n: usize,
    pub lambda: f64,
    pub m: Vec<f64>,
    pub mp: Vec<f64>,
    pub normalization: Normalization,
    /// The mode in its nominal normalization is `exp(log_scale)` times the
    /// stored samples; nonzero only when shooting had to rescale.
    pub log_scale: f64,
}

impl EigenMode {
    /// Copy with samples multiplied by `t`.
    pub fn scaled(&self, t: f64) -> EigenMode {
        EigenMode {
            m: self.m.iter().map(|v| v * t).collect(),
            mp: self.mp.iter().map(|v| v * t).collect(),
            normalization: Normalization::Custom,
            log_scale: 0.0,
            ..self.clone()
        }
    }

    /// Copy with M(0) = 1.
    pub fn surface_normalized(&self) -> EigenMode {
        let mut out = self.scaled(1.0 / *self.m.last().unwrap());
        out.normalization = Normalization::Surface;
        out
    }

    /// Copy with M′(p₀) = n / a(p₀).
    pub fn sinh_matched(&self, flow: &LaminarFlow) -> EigenMode {
        let target = self.n as f64 / flow.a(0);
        let mut out = self.scaled(target / self.mp[0]);
        out.normalization = Normalization::SinhMatched;
        out
    }

    /// M″ from the differential equation.
    pub fn mpp(&self, phys: &Physics, flow: &LaminarFlow) -> Vec<f64> {
        let n2 = (self.n * self.n) as f64;
        (0..self.m.len())
            .map(|k| {
                let a = flow.a(k);
                let ap = flow.gp[k] / (2.0 * a);
                let p = flow.grid.node(k);
                ((n2 * a + phys.g * phys.rho_p(p)) * self.m[k] - 3.0 * a * a * ap * self.mp[k]) / a.powi(3)
            })
            .collect()
    }
}

/// a at p: exact at nodes, Hermite-interpolated between them.
fn coeffs(flow: &LaminarFlow, k: usize, p: f64, at_node: bool) -> f64 {
    if at_node {
        flow.a(k)
    } else {
        flow.a_at(p)
    }
}

struct Shot {
    m: Vec<f64>,
    mp: Vec<f64>,
    log_scale: f64,
}

/// RK4 on (M, w = a³M′) for (a³M′)′ = (n²a + gρ_p)M − f·gρ_p.
fn integrate(phys: &Physics, flow: &LaminarFlow, n2: f64, forcing: f64, mp0: f64) -> Shot {
    let grid = flow.grid;
    let h = grid.step();
    let len = grid.len();
    let mut m = vec![0.0; len];
    let mut mp = vec![0.0; len];
    let mut log_scale = 0.0;
    let a0 = flow.a(0);
    let mut y = [0.0, a0.powi(3) * mp0];
    mp[0] = mp0;
    let rhs = |p: f64, a: f64, y: [f64; 2]| -> [f64; 2] {
        let grp = phys.g * phys.rho_p(p);
        [y[1] / a.powi(3), (n2 * a + grp) * y[0] - forcing * grp]
    };
    for k in 0..grid.intervals() {
        let p = grid.node(k);
        let pn = grid.node(k + 1);
        let pm = 0.5 * (p + pn);
        let a1 = coeffs(flow, k, p, true);
        let am = coeffs(flow, k, pm, false);
        let a2 = coeffs(flow, k + 1, pn, true);
        let k1 = rhs(p, a1, y);
        let k2 = rhs(pm, am, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs(pm, am, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs(pn, a2, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        m[k + 1] = y[0];
        mp[k + 1] = y[1] / a2.powi(3);
        if forcing == 0.0 && (y[0].abs() > RENORM || y[1].abs() > RENORM) {
            let s = 1.0 / RENORM;
            y[0] *= s;
            y[1] *= s;
            for v in m[..=k + 1].iter_mut().chain(mp[..=k + 1].iter_mut()) {
                *v *= s;
            }
            log_scale += RENORM.ln();
        }
    }
    Shot { m, mp, log_scale }
}

/// Mode with M(p₀) = 0, M′(p₀) = 1 for wavenumber n ≥ 1.
pub fn shoot_mode(phys: &Physics, flow: &LaminarFlow, n: usize) -> Result<EigenMode> {
    if n == 0 {
        return Err(Error::Invalid("shoot_mode needs n >= 1; use shoot_zero_mode".into()));
    }
    let s = integrate(phys, flow, (n * n) as f64, 0.0, 1.0);
    Ok(EigenMode {
        n,
        lambda: flow.lambda,
        m: s.m,
        mp: s.mp,
        normalization: Normalization::Shooting,
        log_scale: s.log_scale,
    })
}

/// Boundary mismatch and its natural scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dispersion {
    pub n: usize,
    pub lambda: f64,
    /// D in the stored scale of the mode.
    pub d: f64,
    /// λ^{3/2}|M′(0)| + (n²σ + gρ(0))|M(0)| in the same scale.
    pub scale: f64,
    /// log of the factor relating stored and nominal scale.
    pub log_scale: f64,
}

impl Dispersion {
    /// D / scale, a dimensionless number in [−1, 1].
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.d / self.scale
        }
    }

    /// ln|D| in the nominal normalization.
    pub fn log_abs(&self) -> f64 {
        self.d.abs().ln() + self.log_scale
    }
}

/// D = λ^{3/2}M′(0) − (n²σ + gρ(0))M(0) with σ taken from `phys`.
pub fn dispersion_d(phys: &Physics, flow: &LaminarFlow, mode: &EigenMode) -> Dispersion {
    let lam32 = flow.lambda.powf(1.5);
    let coef = (mode.n * mode.n) as f64 * phys.sigma + phys.g * phys.rho0();
    let m0 = *mode.m.last().unwrap();
    let mp0 = *mode.mp.last().unwrap();
    Dispersion {
        n: mode.n,
        lambda: flow.lambda,
        d: lam32 * mp0 - coef * m0,
        scale: lam32 * mp0.abs() + coef * m0.abs(),
        log_scale: mode.log_scale,
    }
}

/// The n = 0 mode with its nonlocal term, (a³M′)′ = gρ_p(M − M(0)).
pub fn shoot_zero_mode(phys: &Physics, flow: &LaminarFlow) -> Result<(EigenMode, Dispersion)> {
    let u1 = integrate(phys, flow, 0.0, 0.0, 1.0);
    let u2 = integrate(phys, flow, 0.0, 1.0, 0.0);
    let den = 1.0 - u2.m.last().unwrap();
    if den.abs() < 1e-12 {
        return Err(Error::SuperpositionDegenerate(den.abs()));
    }
    let m0 = u1.m.last().unwrap() / den;
    let m: Vec<f64> = u1.m.iter().zip(&u2.m).map(|(a, b)| a + m0 * b).collect();
    let mp: Vec<f64> = u1.mp.iter().zip(&u2.mp).map(|(a, b)| a + m0 * b).collect();
    let mode = EigenMode {
        n: 0,
        lambda: flow.lambda,
        m,
        mp,
        normalization: Normalization::Shooting,
        log_scale: 0.0,
    };
    let d = dispersion_d(phys, flow, &mode);
    Ok((mode, d))
}

/// D(n, λ) for a fresh laminar flow at λ.
pub fn dispersion_at(phys: &Physics, grid: &PGrid, n: usize, lambda: f64, fp: FixedPoint) -> Result<Dispersion> {
    let flow = solve_laminar(phys, lambda, grid, fp)?;
    if n == 0 {
        return Ok(shoot_zero_mode(phys, &flow)?.1);
    }
    let mode = shoot_mode(phys, &flow, n)?;
    Ok(dispersion_d(phys, &flow, &mode))
}

/// Smallest root of λ ↦ D(n, λ) above the floor.
pub fn find_root_n(phys: &Physics, grid: &PGrid, n: usize, fp: FixedPoint) -> Result<f64> {
    let floor = lambda_floor(phys);
    let base = floor.abs().max(1.0);
    let mut step = 1e-6 * base;
    let mut lo = floor + step;
    let mut dlo = dispersion_at(phys, grid, n, lo, fp)?.relative();
    if dlo >= 0.0 {
        return Err(Error::LbViolated { cap: lo });
    }
    loop {
        step *= SCAN_RATIO;
        let hi = floor + step;
        if hi > LAMBDA_CAP {
            return Err(Error::LbViolated { cap: LAMBDA_CAP });
        }
        let dhi = dispersion_at(phys, grid, n, hi, fp)?.relative();
        if dhi >= 0.0 {
            let f = |lam: f64| Ok(dispersion_at(phys, grid, n, lam, fp)?.relative());
            return brent(f, lo, hi, 1e-15 * hi.abs().max(1.0), 200);
        }
        lo = hi;
        dlo = dhi;
        debug_assert!(dlo < 0.0);
    }
}

/// λ_*: the smallest root of D(1, ·).
pub fn find_lambda_star(phys: &Physics, grid: &PGrid, fp: FixedPoint) -> Result<f64> {
    find_root_n(phys, grid, 1, fp)
}

/// Root of λ = ((n²σ + gρ₀)/n) tanh(n|p₀|/√λ) for irrotational flow of
/// constant density.
pub fn irrotational_root(n: usize, sigma: f64, g: f64, rho0: f64, p0: f64) -> Result<f64> {
    let nf = n as f64;
    let c = (nf * nf * sigma + g * rho0) / nf;
    if !(c > 0.0) {
        return Err(Error::RootNotFound("no positive irrotational root".into()));
    }
    let f = |lam: f64| Ok(lam - c * (nf * p0.abs() / lam.sqrt()).tanh());
    brent(f, 1e-300, c, 1e-15 * c, 400)
}

/// Assembles the tridiagonal P1 forms of the Rayleigh quotient on `grid`
/// with φ(p₀) = 0 eliminated. Returns (K diag, K off, M diag, M off).
fn rayleigh_forms(phys: &Physics, flow: &LaminarFlow) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let grid = flow.grid;
    let n = grid.intervals();
    let h = grid.step();
    let mut kd = vec![0.0; n + 1];
    let mut ko = vec![0.0; n + 1];
    let mut md = vec![0.0; n + 1];
    let mut mo = vec![0.0; n + 1];
    // Three-point Gauss on each element.
    let gx = [-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()];
    let gw = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    for e in 0..n {
        let (pl, pr) = (grid.node(e), grid.node(e + 1));
        let mut stiff = 0.0;
        let mut mass = [0.0; 3];
        for (x, w) in gx.iter().zip(&gw) {
            let p = 0.5 * (pl + pr) + 0.5 * h * x;
            let a = flow.a_at(p);
            let dens = a + phys.g * phys.rho_p(p);
            if !(dens > 0.0) {
                return Err(Error::IndefiniteForm);
            }
            let t = 0.5 * (1.0 + x);
            let wq = 0.5 * h * w;
            stiff += wq * a.powi(3);
            mass[0] += wq * dens * (1.0 - t) * (1.0 - t);
            mass[1] += wq * dens * (1.0 - t) * t;
            mass[2] += wq * dens * t * t;
        }
        let k = stiff / (h * h);
        kd[e] += k;
        kd[e + 1] += k;
        ko[e] -= k;
        md[e] += mass[0];
        md[e + 1] += mass[2];
        mo[e] += mass[1];
    }
    kd[n] -= phys.g * phys.rho0() + phys.sigma;
    // Drop node 0 (φ(p₀) = 0).
    Ok((kd[1..].to_vec(), ko[1..n].to_vec(), md[1..].to_vec(), mo[1..n].to_vec()))
}

/// Number of generalized eigenvalues below `mu` (inertia of K − μM).
fn count_below(kd: &[f64], ko: &[f64], md: &[f64], mo: &[f64], mu: f64) -> usize {
    let mut count = 0;
    let mut d = 0.0;
    for i in 0..kd.len() {
        let diag = kd[i] - mu * md[i];
        d = if i == 0 {
            diag
        } else {
            let off = ko[i - 1] - mu * mo[i - 1];
            diag - off * off / d
        };
        if d == 0.0 {
            d = -f64::EPSILON * diag.abs().max(1e-300);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest generalized eigenvalue of the discretized Rayleigh quotient on
/// an existing flow.
pub fn rayleigh_mu_on(phys: &Physics, flow: &LaminarFlow) -> Result<f64> {
    let (kd, ko, md, mo) = rayleigh_forms(phys, flow)?;
    let mut lo = -1.0;
    while count_below(&kd, &ko, &md, &mo, lo) > 0 {
        lo *= 2.0;
        if lo < -1e300 {
            return Err(Error::RootNotFound("Rayleigh lower bound".into()));
        }
    }
    let mut hi = 1.0;
    while count_below(&kd, &ko, &md, &mo, hi) == 0 {
        hi = if hi > 0.0 { hi * 2.0 } else { 1.0 };
        if hi > 1e300 {
            return Err(Error::RootNotFound("Rayleigh upper bound".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if count_below(&kd, &ko, &md, &mo, mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// μ(λ): minimum of the Rayleigh quotient, discretized by linear finite
/// elements on a fresh N-interval grid.
pub fn rayleigh_mu(phys: &Physics, lambda: f64, n: usize, fp: FixedPoint) -> Result<f64> {
    let grid = PGrid::new(phys.p0, n)?;
    rayleigh_mu_on(phys, &solve_laminar(phys, lambda, &grid, fp)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Simple,
    Double(usize),
    ZeroMode,
}

impl Classification {
    pub fn label(&self) -> String {
        match self {
            Classification::Simple => "Simple".into(),
            Classification::Double(n) => format!("Double({n})"),
            Classification::ZeroMode => "ZeroMode".into(),
        }
    }
}

/// A classified bifurcation point.
#[derive(Debug, Clone)]
pub struct BifurcationPoint {
    pub lambda_star: f64,
    pub q_star: f64,
    pub flow: LaminarFlow,
    /// n = 1 first, then the resonant n₂ if any.
    pub modes: Vec<EigenMode>,
    pub class: Classification,
    pub resonant: Vec<usize>,
    pub residuals: Vec<Dispersion>,
    pub resonance_tol: f64,
}

/// Locates λ_* and classifies the point by scanning n = 0 and n = 2..n_max.
pub fn classify(phys: &Physics, grid: &PGrid, n_max: usize, fp: FixedPoint) -> Result<BifurcationPoint> {
    let lambda_star = find_lambda_star(phys, grid, fp)?;
    let flow = solve_laminar(phys, lambda_star, grid, fp)?;
    let m1 = shoot_mode(phys, &flow, 1)?;
    let mut residuals = vec![dispersion_d(phys, &flow, &m1)];
    let mut resonant = Vec::new();
    let mut zero_mode = false;
    match shoot_zero_mode(phys, &flow) {
        Ok((_, d0)) => {
            if d0.relative().abs() < RESONANCE_TOL {
                zero_mode = true;
            }
            residuals.push(d0);
        }
        Err(Error::SuperpositionDegenerate(_)) => {}
        Err(e) => return Err(e),
    }
    let mut modes = vec![m1];
    let mut rising = 0;
    let mut prev: Option<f64> = None;
    for n in 2..=n_max {
        let mode = shoot_mode(phys, &flow, n)?;
        let d = dispersion_d(phys, &flow, &mode);
        residuals.push(d);
        if d.relative().abs() < RESONANCE_TOL {
            resonant.push(n);
            modes.push(mode);
        }
        if d.d > 0.0 {
            let cur = d.log_abs();
            rising = match prev {
                Some(p) if cur > p => rising + 1,
                _ => 1,
            };
            prev = Some(cur);
        } else {
            rising = 0;
            prev = None;
        }
        if rising >= 3 && phys.sigma > 0.0 {
            break;
        }
    }
    if resonant.len() >= 2 {
        return Err(Error::MultiplicityExceeded(resonant));
    }
    let class = if zero_mode {
        Classification::ZeroMode
    } else if let Some(&n2) = resonant.first() {
        Classification::Double(n2)
    } else {
        Classification::Simple
    };
    Ok(BifurcationPoint {
        lambda_star,
        q_star: flow.q,
        flow,
        modes,
        class,
        resonant,
        residuals,
        resonance_tol: RESONANCE_TOL,
    })
}

/// σ at which the irrotational relations for n = 1 and n₂ share a root.
fn irrotational_double(n2: usize, g: f64, rho0: f64, p0: f64) -> Result<(f64, f64)> {
    let gap = |s: f64| -> Result<f64> {
        Ok(irrotational_root(1, s, g, rho0, p0)? - irrotational_root(n2, s, g, rho0, p0)?)
    };
    let lo = 1e-10;
    let mut hi = 1.0;
    while gap(hi)? > 0.0 {
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::RootNotFound("no irrotational double point".into()));
        }
    }
    let s = brent(gap, lo, hi, 1e-14, 200)?;
    Ok((s, irrotational_root(1, s, g, rho0, p0)?))
}

/// (σ_d, λ_d) with D(1, λ_d; σ_d) = D(n₂, λ_d; σ_d) = 0.
pub fn find_double_sigma(phys: &Physics, grid: &PGrid, n2: usize, fp: FixedPoint) -> Result<(f64, f64)> {
    if n2 < 2 {
        return Err(Error::Invalid("n2 must be at least 2".into()));
    }
    let (mut s, mut lam) = irrotational_double(n2, phys.g, phys.rho0(), phys.p0)?;
    let floor = lambda_floor(phys);
    let resid = |s: f64, lam: f64| -> Result<[f64; 2]> {
        let ph = phys.with_sigma(s);
        let flow = solve_laminar(&ph, lam, grid, fp)?;
        let d1 = dispersion_d(&ph, &flow, &shoot_mode(&ph, &flow, 1)?).relative();
        let d2 = dispersion_d(&ph, &flow, &shoot_mode(&ph, &flow, n2)?).relative();
        Ok([d1, d2])
    };
    for _ in 0..60 {
        let f = resid(s, lam)?;
        let norm = f[0].abs().max(f[1].abs());
        if norm < 1e-14 {
            return Ok((s, lam));
        }
        let hs = 1e-7 * s.abs().max(1e-3);
        let hl = 1e-7 * lam.abs().max(1e-3);
        let fs = resid(s + hs, lam)?;
        let fl = resid(s, lam + hl)?;
        let j = [
            [(fs[0] - f[0]) / hs, (fl[0] - f[0]) / hl],
            [(fs[1] - f[1]) / hs, (fl[1] - f[1]) / hl],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let ds = (f[0] * j[1][1] - f[1] * j[0][1]) / det;
        let dl = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
        let mut t = 1.0;
        while s - t * ds <= 0.0 || lam - t * dl <= floor {
            t *= 0.5;
            if t < 1e-6 {
                return Err(Error::RootNotFound("double point left the admissible range".into()));
            }
        }
        s -= t * ds;
        lam -= t * dl;
        if (t * ds).abs() < 1e-15 * s.abs() && (t * dl).abs() < 1e-15 * lam.abs() {
            return Ok((s, lam));
        }
    }
    let f = resid(s, lam)?;
    if f[0].abs().max(f[1].abs()) < 1e-10 {
        return Ok((s, lam));
    }
    Err(Error::RootNotFound(format!("Newton for the double point stalled at sigma {s}, lambda {lam}")))
}
