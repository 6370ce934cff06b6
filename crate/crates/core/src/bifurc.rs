//! Lyapunov-Schmidt coefficients Ψ, Φ, Θ of the reduced bifurcation
//! equation, the non-degeneracy conditions, and the local branch germs.
//!
//! All p-integrals use composite Simpson on the grid shared by the flow and
//! the modes; boundary terms are read at the p = 0 node. The q-integrals are
//! evaluated exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::laminar::LaminarFlow;
use crate::profiles::{quad, Physics};
use crate::spectral::{BifurcationPoint, Classification, EigenMode, Normalization};

/// Relative tolerance used when testing the non-degeneracy inequalities.
pub const ND_TOL: f64 = 1e-8;

/// ∫_0^{2π} Π_k f_k(n_k q) dq with each f_k either cos (false) or sin (true),
/// computed exactly from the exponential expansion.
pub fn trig_integral(factors: &[(bool, usize)]) -> f64 {
    let m = factors.len();
    let mut total_re = 0.0;
    let mut total_im = 0.0;
    for mask in 0..(1u32 << m) {
        let mut freq: i64 = 0;
        // Coefficient as a complex number (re, im).
        let (mut re, mut im) = (1.0f64, 0.0f64);
        for (k, &(is_sin, n)) in factors.iter().enumerate() {
            let plus = mask & (1 << k) == 0;
            freq += if plus { n as i64 } else { -(n as i64) };
            // cos: ½ for both signs; sin: ∓i/2 for ±.
            let (cr, ci) = if !is_sin {
                (0.5, 0.0)
            } else if plus {
                (0.0, -0.5)
            } else {
                (0.0, 0.5)
            };
            let (nr, ni) = (re * cr - im * ci, re * ci + im * cr);
            re = nr;
            im = ni;
        }
        if freq == 0 {
            total_re += re;
            total_im += im;
        }
    }
    debug_assert!(total_im.abs() < 1e-12);
    2.0 * std::f64::consts::PI * total_re
}

/// Nodal data shared by the coefficient quadratures.
struct Fields<'a> {
    phys: &'a Physics,
    flow: &'a LaminarFlow,
    a: Vec<f64>,
    hpp: Vec<f64>,
    rho_p: Vec<f64>,
    beta: Vec<f64>,
    y: Vec<f64>,
}

impl<'a> Fields<'a> {
    fn new(phys: &'a Physics, flow: &'a LaminarFlow) -> Self {
        let nodes = flow.grid.nodes();
        Fields {
            phys,
            flow,
            a: (0..flow.len()).map(|k| flow.a(k)).collect(),
            hpp: (0..flow.len()).map(|k| flow.hpp(k)).collect(),
            rho_p: nodes.iter().map(|&p| phys.rho_p(p)).collect(),
            beta: nodes.iter().map(|&p| phys.beta_at(p)).collect(),
            y: (0..flow.len()).map(|k| flow.y(k)).collect(),
        }
    }

    fn int(&self, f: impl Fn(usize) -> f64) -> f64 {
        let v: Vec<f64> = (0..self.flow.len()).map(f).collect();
        quad(&self.flow.grid, &v).expect("nodal samples")
    }

    fn top(&self) -> usize {
        self.flow.len() - 1
    }
}

/// Nodal view of a mode: M, M′, M″ and its wavenumber.
struct ModeData {
    n: f64,
    nn: usize,
    m: Vec<f64>,
    mp: Vec<f64>,
    mpp: Vec<f64>,
}

impl ModeData {
    fn new(f: &Fields, mode: &EigenMode) -> Self {
        ModeData {
            n: mode.n as f64,
            nn: mode.n,
            m: mode.m.clone(),
            mp: mode.mp.clone(),
            mpp: mode.mpp(f.phys, f.flow),
        }
    }
}

fn check_modes(flow: &LaminarFlow, modes: &[&EigenMode]) -> Result<()> {
    for m in modes {
        if m.m.len() != flow.len() || m.mp.len() != flow.len() {
            return Err(Error::Shape(format!(
                "mode n = {} has {} samples, flow has {}",
                m.n,
                m.m.len(),
                flow.len()
            )));
        }
        if (m.lambda - flow.lambda).abs() > 1e-12 * flow.lambda.abs().max(1.0) {
            return Err(Error::Shape(format!("mode n = {} belongs to a different lambda", m.n)));
        }
    }
    Ok(())
}

/// Ψ_ij including its q-integral ∫cos(n_i q)cos(n_j q) dq.
pub fn compute_psi_ij(phys: &Physics, flow: &LaminarFlow, mi: &EigenMode, mj: &EigenMode) -> Result<f64> {
    check_modes(flow, &[mi, mj])?;
    if flow.ydot.len() != flow.len() || flow.gdot.len() != flow.len() {
        return Err(Error::Shape("flow carries no lambda derivatives".into()));
    }
    let f = Fields::new(phys, flow);
    let g = phys.g;
    let nj2 = (mj.n * mj.n) as f64;
    let (ydot, gdot) = (&flow.ydot, &flow.gdot);
    let (m_i, m_j, mp_j) = (&mi.m, &mj.m, &mj.mp);
    let inner = f.int(|k| {
        let a = f.a[k];
        let one_g = 1.0 + gdot[k];
        nj2 / a * one_g * m_i[k] * m_j[k] - 3.0 * one_g / a * f.beta[k] * m_i[k] * mp_j[k]
            - 3.0 * g * ydot[k] * a * f.rho_p[k] * m_i[k] * mp_j[k]
            + 3.0 * g * f.y[k] * one_g / a * f.rho_p[k] * m_i[k] * mp_j[k]
            + 1.5 * g * one_g / (a * a) * f.rho_p[k] * m_i[k] * m_j[k]
    });
    let t = f.top();
    let lam = flow.lambda;
    let boundary = -0.5
        * (2.0 * g * phys.rho0() / lam * m_i[t] * m_j[t]
            + lam.sqrt() * m_i[t] * mp_j[t]
            + 2.0 * phys.sigma / lam * nj2 * m_i[t] * m_j[t]);
    let c = trig_integral(&[(false, mi.n), (false, mj.n)]);
    Ok((inner + boundary) * c)
}

/// Ψ_ii.
pub fn compute_psi(phys: &Physics, flow: &LaminarFlow, mode: &EigenMode) -> Result<f64> {
    compute_psi_ij(phys, flow, mode, mode)
}

/// Φ_ijk assembled from the general trigonometric bracket, for any triple of
/// modes. Used to confirm cancellation when n₂ ≠ 2n₁.
pub fn compute_phi_assembled(
    phys: &Physics,
    flow: &LaminarFlow,
    mi: &EigenMode,
    mj: &EigenMode,
    mk: &EigenMode,
) -> Result<f64> {
    check_modes(flow, &[mi, mj, mk])?;
    let f = Fields::new(phys, flow);
    let (i, j, k) = (ModeData::new(&f, mi), ModeData::new(&f, mj), ModeData::new(&f, mk));
    let g = phys.g;
    let c1 = trig_integral(&[(false, i.nn), (true, j.nn), (true, k.nn)]);
    let c2 = trig_integral(&[(false, i.nn), (false, j.nn), (false, k.nn)]);
    let c3 = trig_integral(&[(false, i.nn), (false, j.nn), (true, k.nn)]);
    let c4 = trig_integral(&[(false, i.nn), (true, j.nn), (false, k.nn)]);
    let jk_p = |r: usize| j.mp[r] * k.m[r] + j.m[r] * k.mp[r];
    let interior = c1
        * (j.n * k.n * f.int(|r| f.a[r].powi(3) * f.hpp[r] * i.m[r] * j.m[r] * k.m[r])
            - 2.0 * j.n * k.n * f.int(|r| f.a[r].powi(2) * i.m[r] * jk_p(r)))
        - c2 * (2.0 * j.n * j.n * f.int(|r| f.a[r].powi(2) * i.m[r] * j.m[r] * k.mp[r])
            + 2.0 * k.n * k.n * f.int(|r| f.a[r].powi(2) * i.m[r] * j.mp[r] * k.m[r])
            + 3.0 * g * f.int(|r| f.a[r] * f.rho_p[r] * i.m[r] * jk_p(r))
            - 6.0 * f.int(|r| f.a[r].powi(2) * f.beta[r] * i.m[r] * j.mp[r] * k.mp[r])
            + 6.0 * g * f.int(|r| f.a[r].powi(2) * f.rho_p[r] * f.y[r] * i.m[r] * j.mp[r] * k.mp[r]));
    let t = f.top();
    let lam = flow.lambda;
    let s = phys.sigma;
    let grho = g * phys.rho0();
    let (mi0, mj0, mk0) = (i.m[t], j.m[t], k.m[t]);
    let boundary = c3 * (j.n * k.n * lam * mi0 * mj0 * mk0 + 3.0 * j.n * j.n * k.n * s * mi0 * mj0 * mk0)
        + c2 * (lam.sqrt() * (2.0 * grho + 2.0 * s * k.n * k.n) * mi0 * j.mp[t] * mk0
            + lam.sqrt() * (2.0 * grho + 2.0 * s * j.n * j.n) * mi0 * mj0 * k.mp[t]
            - lam * lam * mi0 * j.mp[t] * k.mp[t])
        + 3.0 * c4 * s * j.n * k.n * k.n * mi0 * mj0 * mk0;
    Ok(0.5 * interior + boundary)
}

/// (Φ₁₁₂, Φ₁₂₁, Φ₂₁₁). Zero unless n₂ = 2n₁, in which case the resonant
/// quadrature formulas are used.
pub fn compute_phi(phys: &Physics, flow: &LaminarFlow, m1: &EigenMode, m2: &EigenMode) -> Result<(f64, f64, f64)> {
    check_modes(flow, &[m1, m2])?;
    if m2.n != 2 * m1.n {
        return Ok((0.0, 0.0, 0.0));
    }
    let f = Fields::new(phys, flow);
    let (a1, a2) = (ModeData::new(&f, m1), ModeData::new(&f, m2));
    let g = phys.g;
    let (n1, n2) = (a1.n, a2.n);
    let lam = flow.lambda;
    let s = phys.sigma;
    let grho = g * phys.rho0();
    let t = f.top();
    let sq1p = |r: usize| 2.0 * a1.m[r] * a1.mp[r];
    let m12p = |r: usize| a1.mp[r] * a2.m[r] + a1.m[r] * a2.mp[r];
    let phi211 = -n1 * n1 * f.int(|r| f.a[r].powi(3) * f.hpp[r] * a2.m[r] * a1.m[r] * a1.m[r])
        - 3.0 * g * f.int(|r| f.a[r] * f.rho_p[r] * a2.m[r] * sq1p(r))
        - 6.0 * g * f.int(|r| f.a[r].powi(2) * f.rho_p[r] * f.y[r] * a2.m[r] * a1.mp[r] * a1.mp[r])
        + 6.0 * f.int(|r| f.a[r].powi(2) * f.beta[r] * a2.m[r] * a1.mp[r] * a1.mp[r])
        + (4.0 * lam.sqrt() * (2.0 * grho + 2.0 * s * n1 * n1) * a2.m[t] * a1.m[t] * a1.mp[t]
            - lam * n1 * n1 * a2.m[t] * a1.m[t] * a1.m[t]
            - lam * lam * a2.m[t] * a1.mp[t] * a1.mp[t]);
    let phi112 = n1 * n2 * f.int(|r| f.a[r].powi(3) * f.hpp[r] * a2.m[r] * a1.m[r] * a1.m[r])
        - 2.0 * n1 * n1 * f.int(|r| f.a[r].powi(2) * a1.m[r] * a1.m[r] * a2.mp[r])
        - n2 * n2 * f.int(|r| f.a[r].powi(2) * a2.m[r] * sq1p(r))
        - 3.0 * g * f.int(|r| f.a[r] * f.rho_p[r] * a1.m[r] * m12p(r))
        - 3.0 * g * f.int(|r| f.a[r].powi(2) * f.rho_p[r] * f.y[r] * a2.mp[r] * sq1p(r))
        + 3.0 * f.int(|r| f.a[r].powi(2) * f.beta[r] * a2.mp[r] * sq1p(r))
        - 2.0 * n1 * n2 * f.int(|r| f.a[r].powi(2) * a1.m[r] * m12p(r))
        + (lam * n1 * n2 * a1.m[t] * a1.m[t] * a2.m[t]
            + lam.sqrt() * (2.0 * grho + 2.0 * s * n2 * n2) * a1.m[t] * a1.mp[t] * a2.m[t]
            + lam.sqrt() * (2.0 * grho + 2.0 * s * n1 * n1) * a1.m[t] * a1.m[t] * a2.mp[t]
            - lam * lam * a1.m[t] * a1.mp[t] * a2.mp[t]);
    let h = 0.5 * std::f64::consts::PI;
    Ok((h * phi112, h * phi112, h * phi211))
}

/// Θ_ijkℓ for an arbitrary index quadruple of modes.
///
/// The interior is the sin-sin bracket weighted by ∫cos cos sin sin plus the
/// cos⁴ bracket; the two mixed sin-cos brackets are treated as vanishing, as
/// in the derivation of the Θ_iiii / Θ_iijj quadratures. With that convention
/// the irrotational closed form for Θ_iiii is reproduced exactly.
pub fn compute_theta_general(phys: &Physics, flow: &LaminarFlow, modes: [&EigenMode; 4]) -> Result<f64> {
    check_modes(flow, &modes)?;
    let f = Fields::new(phys, flow);
    let [i, j, k, l] = modes.map(|m| ModeData::new(&f, m));
    let g = phys.g;
    let c1 = trig_integral(&[(false, i.nn), (false, j.nn), (true, k.nn), (true, l.nn)]);
    let c4 = trig_integral(&[(false, i.nn), (false, j.nn), (false, k.nn), (false, l.nn)]);
    let a3 = |r: usize| f.a[r].powi(3);
    let mut interior = 0.0;
    if c1 != 0.0 {
        let kl_p = |r: usize| k.mp[r] * l.m[r] + k.m[r] * l.mp[r];
        interior += k.n
            * l.n
            * c1
            * (f.int(|r| a3(r) * i.m[r] * j.mpp[r] * k.m[r] * l.m[r]) - f.int(|r| a3(r) * i.m[r] * j.mp[r] * kl_p(r)));
    }
    if c4 != 0.0 {
        let kl_p = |r: usize| k.mp[r] * l.m[r] + k.m[r] * l.mp[r];
        interior -= c4
            * (j.n * j.n * f.int(|r| a3(r) * i.m[r] * j.m[r] * k.mp[r] * l.mp[r])
                + k.n * k.n * f.int(|r| a3(r) * i.m[r] * j.mp[r] * k.m[r] * l.mp[r])
                + l.n * l.n * f.int(|r| a3(r) * i.m[r] * j.mp[r] * k.mp[r] * l.m[r])
                + 3.0 * g * f.int(|r| f.rho_p[r] * f.a[r].powi(2) * i.m[r] * j.mp[r] * kl_p(r))
                + 3.0 * g * f.int(|r| f.rho_p[r] * f.a[r].powi(2) * i.m[r] * j.m[r] * k.mp[r] * l.mp[r])
                + 3.0 * f.int(|r| f.a[r].powi(6) * f.hpp[r] * i.m[r] * j.mp[r] * k.mp[r] * l.mp[r]));
    }
    let t = f.top();
    let boundary = c4 * f.a[t].powi(2) * i.m[t] * j.mp[t] * k.mp[t] * l.mp[t];
    Ok(interior + boundary)
}

/// Θ_iiii for a single mode.
pub fn compute_theta(phys: &Physics, flow: &LaminarFlow, mi: &EigenMode) -> Result<f64> {
    compute_theta_general(phys, flow, [mi, mi, mi, mi])
}

/// Θ_iijj for a pair of modes.
pub fn compute_theta_cross(phys: &Physics, flow: &LaminarFlow, mi: &EigenMode, mj: &EigenMode) -> Result<f64> {
    compute_theta_general(phys, flow, [mi, mi, mj, mj])
}

/// Non-degeneracy flags of a double point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Flags {
    pub nd1: bool,
    pub nd2: bool,
    pub regular_value: bool,
}

/// Coefficients of the reduced bifurcation equation at a double point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSet {
    pub n1: usize,
    pub n2: usize,
    pub lambda_star: f64,
    pub psi11: f64,
    pub psi22: f64,
    pub phi112: f64,
    pub phi121: f64,
    pub phi211: f64,
    pub theta1111: f64,
    pub theta2222: f64,
    pub theta1122: f64,
    pub theta2211: f64,
    pub normalization: Normalization,
    pub flags: Flags,
}

impl CoefficientSet {
    /// A set given directly by its entries (Φ = 0), with flags evaluated.
    pub fn from_values(psi: [f64; 2], theta_diag: [f64; 2], theta_cross: [f64; 2], n2: usize) -> Self {
        let mut c = CoefficientSet {
            n1: 1,
            n2,
            lambda_star: f64::NAN,
            psi11: psi[0],
            psi22: psi[1],
            phi112: 0.0,
            phi121: 0.0,
            phi211: 0.0,
            theta1111: theta_diag[0],
            theta2222: theta_diag[1],
            theta1122: theta_cross[0],
            theta2211: theta_cross[1],
            normalization: Normalization::Custom,
            flags: Flags { nd1: false, nd2: false, regular_value: false },
        };
        c.flags = check_nondegeneracy(&c, n2);
        c
    }
}

/// Evaluates every coefficient at a Double(n₂) point, with modes rescaled to
/// the requested normalization.
pub fn compute_coefficients(phys: &Physics, bp: &BifurcationPoint, norm: Normalization) -> Result<CoefficientSet> {
    let n2 = match bp.class {
        Classification::Double(n) => n,
        _ => return Err(Error::Invalid(format!("coefficients need a double point, got {}", bp.class.label()))),
    };
    let flow = &bp.flow;
    let rescale = |m: &EigenMode| match norm {
        Normalization::Surface => m.surface_normalized(),
        Normalization::SinhMatched => m.sinh_matched(flow),
        _ => m.clone(),
    };
    let m1 = rescale(&bp.modes[0]);
    let m2 = rescale(&bp.modes[1]);
    let (phi112, phi121, phi211) = compute_phi(phys, flow, &m1, &m2)?;
    let mut c = CoefficientSet {
        n1: m1.n,
        n2,
        lambda_star: bp.lambda_star,
        psi11: compute_psi(phys, flow, &m1)?,
        psi22: compute_psi(phys, flow, &m2)?,
        phi112,
        phi121,
        phi211,
        theta1111: compute_theta(phys, flow, &m1)?,
        theta2222: compute_theta(phys, flow, &m2)?,
        theta1122: compute_theta_cross(phys, flow, &m1, &m2)?,
        theta2211: compute_theta_cross(phys, flow, &m2, &m1)?,
        normalization: norm,
        flags: Flags { nd1: false, nd2: false, regular_value: false },
    };
    c.flags = check_nondegeneracy(&c, n2);
    Ok(c)
}

fn differ(a: f64, b: f64) -> bool {
    (a - b).abs() > ND_TOL * a.abs().max(b.abs())
}

/// nd1: n₂ ≥ 3. nd2: 0 ≠ Θ₁₁₁₁Θ₂₂₂₂ ≠ Θ₁₁₂₂Θ₂₂₁₁ together with the two
/// regular-value inequalities.
pub fn check_nondegeneracy(c: &CoefficientSet, n2: usize) -> Flags {
    let diag = c.theta1111 * c.theta2222;
    let regular_value =
        differ(c.theta1111 * c.psi22, c.theta2211 * c.psi11) && differ(c.theta2222 * c.psi11, c.theta1122 * c.psi22);
    let nd2 = diag != 0.0 && differ(diag, c.theta1122 * c.theta2211) && regular_value;
    Flags { nd1: n2 >= 3, nd2, regular_value }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    Cubic,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GermKind {
    Pure(usize),
    Mixed,
}

/// First-order tangent of a local branch: ξ = ±ε θ on the given side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchGerm {
    pub kind: GermKind,
    pub side: Side,
    pub theta: [f64; 2],
    /// ε = |λ − λ_*|^scaling.
    pub scaling: f64,
}

/// Roots of the reduced equation at ε = 0 in closed form.
pub fn predict_branches(c: &CoefficientSet, case: Case) -> Result<Vec<BranchGerm>> {
    match case {
        Case::Cubic => predict_cubic(c),
        Case::Quadratic => predict_quadratic(c),
    }
}

fn predict_cubic(c: &CoefficientSet) -> Result<Vec<BranchGerm>> {
    let det = c.theta1111 * c.theta2222 - c.theta1122 * c.theta2211;
    if det == 0.0 || !differ(c.theta1111 * c.theta2222, c.theta1122 * c.theta2211) {
        return Err(Error::SingularSystem("Theta matrix of the cubic reduced equation".into()));
    }
    let mut out = Vec::new();
    for side in [Side::Plus, Side::Minus] {
        let s = side.sign();
        // ±Ψ_ii + θ_i² Θ_iiii = 0.
        let sq1 = -s * c.psi11 / c.theta1111;
        if sq1 > 0.0 {
            for sg in [1.0, -1.0] {
                out.push(BranchGerm { kind: GermKind::Pure(c.n1), side, theta: [sg * sq1.sqrt(), 0.0], scaling: 0.5 });
            }
        }
        let sq2 = -s * c.psi22 / c.theta2222;
        if sq2 > 0.0 {
            for sg in [1.0, -1.0] {
                out.push(BranchGerm { kind: GermKind::Pure(c.n2), side, theta: [0.0, sg * sq2.sqrt()], scaling: 0.5 });
            }
        }
        // A (θ₁², θ₂²) = ∓(Ψ₁₁, Ψ₂₂).
        let r1 = -s * c.psi11;
        let r2 = -s * c.psi22;
        let x1 = (r1 * c.theta2222 - c.theta1122 * r2) / det;
        let x2 = (c.theta1111 * r2 - c.theta2211 * r1) / det;
        if x1 > 0.0 && x2 > 0.0 {
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    out.push(BranchGerm {
                        kind: GermKind::Mixed,
                        side,
                        theta: [s1 * x1.sqrt(), s2 * x2.sqrt()],
                        scaling: 0.5,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn predict_quadratic(c: &CoefficientSet) -> Result<Vec<BranchGerm>> {
    if c.phi112 == 0.0 || c.phi211 == 0.0 {
        return Err(Error::SingularSystem("quadratic case needs nonzero Phi112 and Phi211".into()));
    }
    let mut out = Vec::new();
    for side in [Side::Plus, Side::Minus] {
        let s = side.sign();
        if c.phi112 * c.phi211 > 0.0 {
            let t2 = -s * c.psi11 / (2.0 * c.phi112);
            let t1 = (c.psi11 * c.psi22 / (2.0 * c.phi112 * c.phi211)).sqrt();
            for sg in [1.0, -1.0] {
                out.push(BranchGerm { kind: GermKind::Mixed, side, theta: [sg * t1, t2], scaling: 1.0 });
            }
        }
    }
    // The pure n₂ branch is the simple bifurcation of the 2π/n₂-periodic
    // problem; its tangent is the n₂ mode alone.
    out.push(BranchGerm { kind: GermKind::Pure(c.n2), side: Side::Plus, theta: [0.0, 1.0], scaling: 1.0 });
    Ok(out)
}

/// Residual of the reduced equation at ε = 0.
pub fn reduced_residual(c: &CoefficientSet, case: Case, side: Side, t: [f64; 2]) -> [f64; 2] {
    let s = side.sign();
    match case {
        Case::Cubic => [
            s * t[0] * c.psi11 + t[0].powi(3) * c.theta1111 + t[0] * t[1] * t[1] * c.theta1122,
            s * t[1] * c.psi22 + t[1].powi(3) * c.theta2222 + t[1] * t[0] * t[0] * c.theta2211,
        ],
        Case::Quadratic => [
            s * t[0] * c.psi11 + t[0] * t[1] * (c.phi112 + c.phi121),
            s * t[1] * c.psi22 + t[0] * t[0] * c.phi211,
        ],
    }
}

fn reduced_jacobian(c: &CoefficientSet, case: Case, side: Side, t: [f64; 2]) -> [[f64; 2]; 2] {
    let s = side.sign();
    match case {
        Case::Cubic => [
            [
                s * c.psi11 + 3.0 * t[0] * t[0] * c.theta1111 + t[1] * t[1] * c.theta1122,
                2.0 * t[0] * t[1] * c.theta1122,
            ],
            [
                2.0 * t[0] * t[1] * c.theta2211,
                s * c.psi22 + 3.0 * t[1] * t[1] * c.theta2222 + t[0] * t[0] * c.theta2211,
            ],
        ],
        Case::Quadratic => [
            [s * c.psi11 + t[1] * (c.phi112 + c.phi121), t[0] * (c.phi112 + c.phi121)],
            [2.0 * t[0] * c.phi211, s * c.psi22],
        ],
    }
}

/// Nontrivial roots of the reduced equation found by multi-start Newton on a
/// 21 × 21 grid of starts, deduplicated at 10⁻⁸.
pub fn oracle_roots(c: &CoefficientSet, case: Case, side: Side) -> Vec<[f64; 2]> {
    let pure = match case {
        Case::Cubic => (c.psi11 / c.theta1111).abs().sqrt().max((c.psi22 / c.theta2222).abs().sqrt()),
        Case::Quadratic => {
            let t2 = (c.psi11 / (2.0 * c.phi112)).abs();
            let t1 = (c.psi11 * c.psi22 / (2.0 * c.phi112 * c.phi211)).abs().sqrt();
            t1.max(t2)
        }
    };
    let box_half = 3.0 * if pure.is_finite() && pure > 0.0 { pure } else { 1.0 };
    let mut roots: Vec<[f64; 2]> = Vec::new();
    for a in 0..21 {
        for b in 0..21 {
            let mut t = [
                -box_half + 2.0 * box_half * a as f64 / 20.0,
                -box_half + 2.0 * box_half * b as f64 / 20.0,
            ];
            let mut ok = false;
            for _ in 0..100 {
                let f = reduced_residual(c, case, side, t);
                let j = reduced_jacobian(c, case, side, t);
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                if det == 0.0 || !det.is_finite() {
                    break;
                }
                let d0 = (f[0] * j[1][1] - f[1] * j[0][1]) / det;
                let d1 = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
                t = [t[0] - d0, t[1] - d1];
                if !(t[0].is_finite() && t[1].is_finite()) {
                    break;
                }
                if d0.abs().max(d1.abs()) < 1e-14 * (1.0 + t[0].abs().max(t[1].abs())) {
                    ok = true;
                    break;
                }
            }
            if !ok {
                continue;
            }
            let scale = 1.0 + t[0].abs().max(t[1].abs());
            if t[0].abs().max(t[1].abs()) < 1e-8 {
                continue;
            }
            if roots.iter().any(|r| (r[0] - t[0]).abs().max((r[1] - t[1]).abs()) < 1e-8 * scale) {
                continue;
            }
            roots.push(t);
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}
