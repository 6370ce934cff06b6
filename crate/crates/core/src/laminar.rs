//! The one-parameter family of laminar flows H(·; λ), the parametrization
//! Q(λ), the λ-derivatives Ẏ, Ġ, Q̇ and the thresholds ε₀, λ₀, λ_c, σ_c.

use crate::error::{Error, Result};
use crate::numerics::interp::hermite;
use crate::numerics::quad::{cumulative, cumulative_from_right};
use crate::numerics::roots::{bisect, brent, golden};
use crate::profiles::{b_nodes, quad, PGrid, Physics};

/// Largest λ probed when bracketing λ₀ or λ_c.
pub const LAMBDA_CAP: f64 = 1e6;

/// Tolerance in λ for golden-section and bisection searches.
pub const LAMBDA_TOL: f64 = 1e-10;

/// Picard iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPoint {
    fn default() -> Self {
        FixedPoint { tol: 1e-12, max_iter: 200 }
    }
}

/// A laminar flow sampled on a p-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LaminarFlow {
    pub lambda: f64,
    pub grid: PGrid,
    pub h: Vec<f64>,
    pub hp: Vec<f64>,
    /// G(p; λ).
    pub g: Vec<f64>,
    /// G_p(p; λ) = 2β(−p) − 2g Y ρ_p.
    pub gp: Vec<f64>,
    pub q: f64,
    pub ydot: Vec<f64>,
    pub gdot: Vec<f64>,
    pub qdot: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LaminarFlow {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// H(0), which equals the depth d(H) of a laminar flow.
    pub fn h_top(&self) -> f64 {
        *self.h.last().unwrap()
    }

    /// Y = H − d(H) at node k.
    pub fn y(&self, k: usize) -> f64 {
        self.h[k] - self.h_top()
    }

    /// a = H_p^{-1} at node k.
    pub fn a(&self, k: usize) -> f64 {
        1.0 / self.hp[k]
    }

    /// H_pp = −½ H_p³ G_p at node k.
    pub fn hpp(&self, k: usize) -> f64 {
        -0.5 * self.hp[k].powi(3) * self.gp[k]
    }

    /// G and G_p at an arbitrary p by cubic Hermite interpolation.
    pub fn g_at(&self, p: f64) -> (f64, f64) {
        let h = self.grid.step();
        let n = self.grid.intervals();
        let t = ((p - self.grid.p0()) / h).floor();
        let k = (t.max(0.0) as usize).min(n - 1);
        hermite(
            self.grid.node(k),
            self.grid.node(k + 1),
            self.g[k],
            self.g[k + 1],
            self.gp[k],
            self.gp[k + 1],
            p,
        )
    }

    /// a = (λ + G)^{1/2} at an arbitrary p.
    pub fn a_at(&self, p: f64) -> f64 {
        (self.lambda + self.g_at(p).0).sqrt()
    }
}

/// ε₀ = (max{2g‖ρ′‖p₀²e^{|p₀|}, (2g‖ρ′‖)³, (4‖ρ′‖)³, 8g|p₀|ρ(0)})^{2/3}.
pub fn epsilon0(phys: &Physics) -> f64 {
    let s = phys.rho_sup_slope();
    let g = phys.g;
    let p0 = phys.p0;
    let entries = [
        2.0 * g * s * p0 * p0 * p0.abs().exp(),
        (2.0 * g * s).powi(3),
        (4.0 * s).powi(3),
        8.0 * g * p0.abs() * phys.rho0(),
    ];
    entries.iter().copied().fold(0.0, f64::max).powf(2.0 / 3.0)
}

/// Margin above −2B_min that defines the admissible laminar range: ε₀ for
/// stratified density, the configurable homogeneous margin otherwise.
pub fn floor_margin(phys: &Physics) -> f64 {
    if phys.homogeneous_density() {
        phys.floor_hom
    } else {
        epsilon0(phys)
    }
}

/// Lower end of the admissible λ range.
pub fn lambda_floor(phys: &Physics) -> f64 {
    -2.0 * phys.b_min() + floor_margin(phys)
}

/// Lower end of the range searched for λ₀ and λ_c: −2B_min plus the
/// homogeneous margin, for any density.
///
/// For stratified density the ε₀ floor always exceeds the minimizer of Q
/// (ε₀ ≥ (8g|p₀|ρ(0))^{2/3}), so the threshold searches run on the range where
/// the laminar fixed point exists rather than on the range where its
/// contraction estimates are proven.
pub fn search_floor(phys: &Physics) -> f64 {
    -2.0 * phys.b_min() + phys.floor_hom
}

/// Laminar flow at λ by Picard iteration on G.
pub fn solve_laminar(phys: &Physics, lambda: f64, grid: &PGrid, fp: FixedPoint) -> Result<LaminarFlow> {
    solve_above(phys, lambda, grid, fp, lambda_floor(phys))
}

/// As [`solve_laminar`] but admitting every λ above [`search_floor`].
pub fn solve_laminar_extended(phys: &Physics, lambda: f64, grid: &PGrid, fp: FixedPoint) -> Result<LaminarFlow> {
    solve_above(phys, lambda, grid, fp, search_floor(phys))
}

fn solve_above(phys: &Physics, lambda: f64, grid: &PGrid, fp: FixedPoint, floor: f64) -> Result<LaminarFlow> {
    if !(lambda > floor) {
        return Err(Error::BelowFloor { lambda, floor });
    }
    if grid.p0() != phys.p0 {
        return Err(Error::Shape("grid p0 differs from physics p0".into()));
    }
    let h = grid.step();
    let nodes = grid.nodes();
    let b = b_nodes(&phys.beta, grid);
    let rho_p: Vec<f64> = nodes.iter().map(|&p| phys.rho_p(p)).collect();
    let mut gv: Vec<f64> = b.iter().map(|v| 2.0 * v).collect();
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < fp.max_iter {
        iterations += 1;
        if gv.iter().any(|&v| !(lambda + v > 0.0)) {
            return Err(Error::IterationFailure { op: "solve_laminar", iterations, residual });
        }
        let hp: Vec<f64> = gv.iter().map(|&v| (lambda + v).powf(-0.5)).collect();
        let hv = cumulative(h, &hp);
        let top = *hv.last().unwrap();
        let w: Vec<f64> = hv.iter().zip(&rho_p).map(|(hh, r)| (hh - top) * r).collect();
        let tail = cumulative_from_right(h, &w);
        let next: Vec<f64> = b.iter().zip(&tail).map(|(bb, t)| 2.0 * bb + 2.0 * phys.g * t).collect();
        residual = next.iter().zip(&gv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        gv = next;
        if residual < fp.tol {
            break;
        }
    }
    if !(residual < fp.tol) {
        return Err(Error::IterationFailure { op: "solve_laminar", iterations, residual });
    }
    // H from the final G so that H_p = (λ + G)^{-1/2} holds exactly at nodes.
    let hp: Vec<f64> = gv.iter().map(|&v| (lambda + v).powf(-0.5)).collect();
    let hv = cumulative(h, &hp);
    let top = *hv.last().unwrap();
    let gp: Vec<f64> = nodes
        .iter()
        .zip(&hv)
        .zip(&rho_p)
        .map(|((&p, &hh), &r)| 2.0 * phys.beta_at(p) - 2.0 * phys.g * (hh - top) * r)
        .collect();
    let q = lambda + 2.0 * phys.g * phys.rho0() * top;
    let mut flow = LaminarFlow {
        lambda,
        grid: *grid,
        h: hv,
        hp,
        g: gv,
        gp,
        q,
        ydot: Vec::new(),
        gdot: Vec::new(),
        qdot: f64::NAN,
        iterations,
        converged: true,
    };
    let d = lambda_derivatives(phys, &flow, fp)?;
    flow.ydot = d.ydot;
    flow.gdot = d.gdot;
    flow.qdot = d.qdot;
    Ok(flow)
}

/// Q = λ + 2gρ(0)H(0).
pub fn q_of_lambda(phys: &Physics, flow: &LaminarFlow) -> f64 {
    flow.lambda + 2.0 * phys.g * phys.rho0() * flow.h_top()
}

/// λ-derivatives of a laminar flow.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaDerivatives {
    pub ydot: Vec<f64>,
    pub gdot: Vec<f64>,
    pub qdot: f64,
    pub iterations: usize,
}

/// Coupled fixed point Ġ = 2g∫_p^0 Ẏρ_p, Ẏ = ½∫_p^0 (1 + Ġ)(λ + G)^{-3/2}.
pub fn lambda_derivatives(phys: &Physics, flow: &LaminarFlow, fp: FixedPoint) -> Result<LambdaDerivatives> {
    let grid = flow.grid;
    let h = grid.step();
    let nodes = grid.nodes();
    let rho_p: Vec<f64> = nodes.iter().map(|&p| phys.rho_p(p)).collect();
    let base: Vec<f64> = flow.g.iter().map(|&v| (flow.lambda + v).powf(-1.5)).collect();
    let mut gdot = vec![0.0; nodes.len()];
    let mut ydot;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let w: Vec<f64> = base.iter().zip(&gdot).map(|(b, gd)| 0.5 * (1.0 + gd) * b).collect();
        ydot = cumulative_from_right(h, &w);
        if phys.homogeneous_density() || phys.g == 0.0 {
            break;
        }
        let s: Vec<f64> = ydot.iter().zip(&rho_p).map(|(y, r)| y * r).collect();
        let next: Vec<f64> = cumulative_from_right(h, &s).iter().map(|v| 2.0 * phys.g * v).collect();
        let residual = next.iter().zip(&gdot).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        gdot = next;
        if residual < fp.tol {
            let w: Vec<f64> = base.iter().zip(&gdot).map(|(b, gd)| 0.5 * (1.0 + gd) * b).collect();
            ydot = cumulative_from_right(h, &w);
            break;
        }
        if iterations >= fp.max_iter {
            return Err(Error::IterationFailure { op: "lambda_derivatives", iterations, residual });
        }
    }
    let qdot = 1.0 - 2.0 * phys.g * phys.rho0() * ydot[0];
    Ok(LambdaDerivatives { ydot, gdot, qdot, iterations })
}

fn lower_probe(phys: &Physics) -> f64 {
    let f = search_floor(phys);
    f + 1e-9 * f.abs().max(1.0)
}

/// Doubles `λ = floor + 2^k` until `pred` holds.
fn expand_bracket(phys: &Physics, mut pred: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
    let floor = search_floor(phys);
    let mut step = 1.0;
    loop {
        let lam = floor + step;
        if lam > LAMBDA_CAP {
            return Err(Error::RootNotFound(format!("bracket exceeded the cap {LAMBDA_CAP}")));
        }
        if pred(lam)? {
            return Ok(lam);
        }
        step *= 2.0;
    }
}

/// Unique minimizer λ₀ of the convex map λ ↦ Q(λ).
///
/// Golden-section search brackets the minimum; the final digits come from a
/// root solve of Q̇ inside that bracket, since Q is flat to second order at
/// its minimum.
pub fn find_lambda0(phys: &Physics, grid: &PGrid, fp: FixedPoint) -> Result<f64> {
    if phys.g == 0.0 {
        return Err(Error::NoMinimum);
    }
    let qdot = |lam: f64| -> Result<f64> { Ok(solve_laminar_extended(phys, lam, grid, fp)?.qdot) };
    let lo = lower_probe(phys);
    if qdot(lo)? >= 0.0 {
        return Err(Error::NoMinimum);
    }
    let hi = expand_bracket(phys, |lam| Ok(qdot(lam)? > 0.0))?;
    let (a, b) = golden(|lam| Ok(solve_laminar_extended(phys, lam, grid, fp)?.q), lo, hi, 1e-6 * (1.0 + hi))?;
    let width = (b - a).max(1e-8);
    let (mut a, mut b) = ((a - width).max(lo), (b + width).min(hi));
    if qdot(a)? > 0.0 {
        a = lo;
    }
    if qdot(b)? < 0.0 {
        b = hi;
    }
    brent(qdot, a, b, LAMBDA_TOL * 1e-3, 200)
}

/// λ_c: for constant density the root of ∫H_p³ = 1/(gρ(0)); otherwise the
/// smallest λ ≥ λ₀ with 4Ẏ(p₀; λ) = 1/(gρ(0) + g‖ρ_p‖|p₀|).
pub fn find_lambda_c(phys: &Physics, grid: &PGrid, fp: FixedPoint) -> Result<f64> {
    if phys.g == 0.0 {
        return Err(Error::Undefined("lambda_c"));
    }
    let ydot0 = |lam: f64| -> Result<f64> { Ok(solve_laminar_extended(phys, lam, grid, fp)?.ydot[0]) };
    if phys.homogeneous_density() {
        // Ẏ(p₀) = ½∫H_p³ when Ġ ≡ 0.
        let target = 1.0 / (phys.g * phys.rho0());
        let f = |lam: f64| -> Result<f64> { Ok(2.0 * ydot0(lam)? - target) };
        let lo = lower_probe(phys);
        if f(lo)? <= 0.0 {
            return Err(Error::RootNotFound("lambda_c lies below the floor".into()));
        }
        let hi = expand_bracket(phys, |lam| Ok(f(lam)? < 0.0))?;
        return bisect(f, lo, hi, LAMBDA_TOL);
    }
    let lam0 = find_lambda0(phys, grid, fp)?;
    let target = 1.0 / (phys.g * phys.rho0() + phys.g * phys.rho_sup_slope() * phys.p0.abs());
    let f = |lam: f64| -> Result<f64> { Ok(4.0 * ydot0(lam)? - target) };
    if f(lam0)? <= 0.0 {
        return Ok(lam0);
    }
    let hi = expand_bracket(phys, |lam| Ok(lam > lam0 && f(lam)? < 0.0))?;
    bisect(f, lam0, hi, LAMBDA_TOL)
}

/// σ_c = (gρ(0))² ∫ (H_p^{-1} + gρ_p)(∫_{p₀}^p H_p³)² dp at λ = λ_c.
pub fn sigma_c(phys: &Physics, grid: &PGrid, fp: FixedPoint) -> Result<f64> {
    if phys.g == 0.0 {
        return Err(Error::Undefined("sigma_c"));
    }
    let lam_c = find_lambda_c(phys, grid, fp)?;
    let flow = solve_laminar_extended(phys, lam_c, grid, fp)?;
    Ok(sigma_c_of_flow(phys, &flow))
}

/// The σ_c integral evaluated on a given flow.
pub fn sigma_c_of_flow(phys: &Physics, flow: &LaminarFlow) -> f64 {
    let grid = flow.grid;
    let cubes: Vec<f64> = flow.hp.iter().map(|v| v.powi(3)).collect();
    let inner = cumulative(grid.step(), &cubes);
    let f: Vec<f64> = (0..grid.len())
        .map(|k| (flow.a(k) + phys.g * phys.rho_p(grid.node(k))) * inner[k] * inner[k])
        .collect();
    let grho = phys.g * phys.rho0();
    grho * grho * quad(&grid, &f).expect("grid-aligned samples")
}

/// Outcome of the explicit size condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeCondition {
    pub satisfied: bool,
    pub margin: f64,
}

/// Explicit sufficient condition for local bifurcation (period 2π):
/// (gρ(0)+σ)p₀² > ∫{(2B − 2B_min + 2ε)^{3/2} + (p−p₀)²((2B − 2B_min + 2ε)^{1/2} + gρ′)} dp,
/// with ε the floor margin.
pub fn check_size_condition(phys: &Physics, grid: &PGrid) -> SizeCondition {
    check_size_condition_with(phys, grid, floor_margin(phys))
}

/// Size condition with an explicit margin ε.
pub fn check_size_condition_with(phys: &Physics, grid: &PGrid, eps: f64) -> SizeCondition {
    let b = b_nodes(&phys.beta, grid);
    let bmin = phys.b_min();
    let p0 = phys.p0;
    let f: Vec<f64> = (0..grid.len())
        .map(|k| {
            let p = grid.node(k);
            let base = (2.0 * b[k] - 2.0 * bmin + 2.0 * eps).max(0.0);
            base.powf(1.5) + (p - p0).powi(2) * (base.sqrt() + phys.g * phys.rho_p(p))
        })
        .collect();
    let rhs = quad(grid, &f).expect("grid-aligned samples");
    let lhs = (phys.g * phys.rho0() + phys.sigma) * p0 * p0;
    let margin = lhs - rhs;
    SizeCondition { satisfied: margin > 0.0, margin }
}
