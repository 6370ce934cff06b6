//! Given data of the problem: the streamline density ρ(p), the Bernoulli
//! function β, the antiderivative B(p) = ∫_0^p β(−s) ds, and the uniform
//! p-grid with its Simpson quadrature.
//!
//! ρ lives on `[p₀, 0]`. β is a function of the stream value ψ = −p and
//! therefore lives on `[0, |p₀|]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::interp::Pchip;
use crate::numerics::quad;

/// Relative slack allowed when checking that a coordinate lies in a domain.
const DOMAIN_SLACK: f64 = 1e-12;

/// Profile description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileSpec {
    Poly { coeffs: Vec<f64> },
    Table { p: Vec<f64>, v: Vec<f64> },
}

impl ProfileSpec {
    pub fn constant(v: f64) -> Self {
        ProfileSpec::Poly { coeffs: vec![v] }
    }

    /// Builds the profile on `[lo, hi]`.
    pub fn build(&self, lo: f64, hi: f64) -> Result<ProfileFn> {
        match self {
            ProfileSpec::Poly { coeffs } => ProfileFn::poly(coeffs.clone(), lo, hi),
            ProfileSpec::Table { p, v } => {
                let f = ProfileFn::table(p.clone(), v.clone())?;
                let tol = DOMAIN_SLACK * (1.0 + lo.abs().max(hi.abs()));
                if (f.lo - lo).abs() > tol || (f.hi - hi).abs() > tol {
                    return Err(Error::Invalid(format!(
                        "table nodes must span [{lo}, {hi}], got [{}, {}]",
                        f.lo, f.hi
                    )));
                }
                Ok(f)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Poly(Vec<f64>),
    Table(Pchip),
}

/// A scalar function on a closed interval, given by polynomial coefficients
/// (ascending powers) or by a monotone cubic table.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileFn {
    kind: Kind,
    lo: f64,
    hi: f64,
}

impl ProfileFn {
    pub fn poly(coeffs: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Invalid("polynomial needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("polynomial coefficients must be finite".into()));
        }
        if !(lo < hi) {
            return Err(Error::Invalid(format!("empty domain [{lo}, {hi}]")));
        }
        Ok(ProfileFn { kind: Kind::Poly(coeffs), lo, hi })
    }

    pub fn constant(v: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::poly(vec![v], lo, hi)
    }

    pub fn table(p: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let t = Pchip::new(p, v)?;
        let lo = t.nodes()[0];
        let hi = *t.nodes().last().unwrap();
        Ok(ProfileFn { kind: Kind::Table(t), lo, hi })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn check(&self, p: f64) -> Result<()> {
        let tol = DOMAIN_SLACK * (1.0 + self.lo.abs().max(self.hi.abs()));
        if p.is_nan() || p < self.lo - tol || p > self.hi + tol {
            Err(Error::Domain { p, lo: self.lo, hi: self.hi })
        } else {
            Ok(())
        }
    }

    /// Checked evaluation.
    pub fn eval(&self, p: f64) -> Result<f64> {
        self.check(p)?;
        Ok(self.value(p))
    }

    /// Checked derivative (one-sided at the endpoints).
    pub fn deriv(&self, p: f64) -> Result<f64> {
        self.check(p)?;
        Ok(self.slope(p))
    }

    /// Unchecked evaluation, clamped to the domain.
    pub fn value(&self, p: f64) -> f64 {
        let p = p.clamp(self.lo, self.hi);
        match &self.kind {
            Kind::Poly(c) => c.iter().rev().fold(0.0, |acc, &a| acc * p + a),
            Kind::Table(t) => t.eval(p),
        }
    }

    /// Unchecked derivative, clamped to the domain.
    pub fn slope(&self, p: f64) -> f64 {
        let p = p.clamp(self.lo, self.hi);
        match &self.kind {
            Kind::Poly(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &a)| acc * p + k as f64 * a),
            Kind::Table(t) => t.deriv(p),
        }
    }

    /// True when the function is identically constant.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            Kind::Poly(c) => c.iter().skip(1).all(|&a| a == 0.0),
            Kind::Table(t) => t.values().windows(2).all(|w| w[0] == w[1]),
        }
    }

    /// Sample points used for sup-norm and sign checks: a fine uniform
    /// sampling plus the table nodes.
    pub fn probe_points(&self, n: usize) -> Vec<f64> {
        let mut pts: Vec<f64> = (0..=n)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / n as f64)
            .collect();
        if let Kind::Table(t) = &self.kind {
            pts.extend_from_slice(t.nodes());
        }
        pts
    }
}

/// Uniform grid `p_k = p₀ + k |p₀| / N` on `[p₀, 0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PGrid {
    p0: f64,
    n: usize,
}

impl PGrid {
    pub fn new(p0: f64, n: usize) -> Result<Self> {
        if !(p0 < 0.0) || !p0.is_finite() {
            return Err(Error::Invalid(format!("p0 must be negative, got {p0}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::Invalid(format!("N_p must be even and at least 8, got {n}")));
        }
        Ok(PGrid { p0, n })
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// Number of intervals `N_p`.
    pub fn intervals(&self) -> usize {
        self.n
    }

    /// Number of nodes `N_p + 1`.
    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        -self.p0 / self.n as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.n {
            0.0
        } else {
            self.p0 + k as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|k| self.node(k)).collect()
    }

    /// The grid with twice as many intervals.
    pub fn refined(&self) -> PGrid {
        PGrid { p0: self.p0, n: 2 * self.n }
    }
}

/// Composite Simpson approximation of `∫_{p₀}^0` from nodal samples.
pub fn quad(grid: &PGrid, samples: &[f64]) -> Result<f64> {
    if samples.len() != grid.len() {
        return Err(Error::Shape(format!(
            "{} samples for a grid of {} nodes",
            samples.len(),
            grid.len()
        )));
    }
    Ok(quad::simpson(grid.step(), samples))
}

/// Nodal values of B(p) = ∫_0^p β(−s) ds, integrated cell by cell with
/// five-point Gauss–Legendre.
pub fn b_nodes(beta: &ProfileFn, grid: &PGrid) -> Vec<f64> {
    let nodes = grid.nodes();
    let mut out = vec![0.0; nodes.len()];
    for k in (0..grid.intervals()).rev() {
        let cell = quad::gauss5(nodes[k], nodes[k + 1], |s| beta.value(-s));
        out[k] = out[k + 1] - cell;
    }
    out
}

/// B as a table on the grid nodes.
pub fn build_b(beta: &ProfileFn, grid: &PGrid) -> Result<ProfileFn> {
    ProfileFn::table(grid.nodes(), b_nodes(beta, grid))
}

/// Minimum of B over `[p₀, 0]`, taken over a fourfold refinement of its
/// table plus the endpoints.
pub fn b_min(b: &ProfileFn) -> f64 {
    let (lo, hi) = b.domain();
    let n = match &b.kind {
        Kind::Table(t) => 4 * (t.nodes().len() - 1),
        Kind::Poly(_) => 1024,
    };
    (0..=n)
        .map(|k| b.value(lo + (hi - lo) * k as f64 / n as f64))
        .fold(f64::INFINITY, f64::min)
}

/// Physical parameters of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Physics {
    pub g: f64,
    pub c: f64,
    pub p0: f64,
    pub sigma: f64,
    pub rho: ProfileFn,
    pub beta: ProfileFn,
    /// Margin above −2B_min used as the laminar floor when ρ is constant.
    pub floor_hom: f64,
    b_min: f64,
    rho_sup_slope: f64,
    rho_constant: bool,
}

/// Serializable physics block of a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSpec {
    pub g: f64,
    #[serde(default = "default_c")]
    pub c: f64,
    pub p0: f64,
    pub sigma: f64,
    pub rho: ProfileSpec,
    #[serde(default = "default_beta")]
    pub beta: ProfileSpec,
    #[serde(default = "default_floor_hom")]
    pub floor_hom: f64,
}

fn default_c() -> f64 {
    1.0
}

fn default_beta() -> ProfileSpec {
    ProfileSpec::constant(0.0)
}

fn default_floor_hom() -> f64 {
    1e-6
}

impl PhysicsSpec {
    pub fn build(&self) -> Result<Physics> {
        if !(self.p0 < 0.0) {
            return Err(Error::Invalid(format!("p0 must be negative, got {}", self.p0)));
        }
        let rho = self.rho.build(self.p0, 0.0)?;
        let beta = self.beta.build(0.0, -self.p0)?;
        Physics::new(self.g, self.c, self.p0, self.sigma, rho, beta, self.floor_hom)
    }
}

impl Physics {
    pub fn new(
        g: f64,
        c: f64,
        p0: f64,
        sigma: f64,
        rho: ProfileFn,
        beta: ProfileFn,
        floor_hom: f64,
    ) -> Result<Self> {
        if !(p0 < 0.0) || !p0.is_finite() {
            return Err(Error::Invalid(format!("p0 must be negative, got {p0}")));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Invalid(format!("c must be positive, got {c}")));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::Invalid(format!("sigma must be nonnegative, got {sigma}")));
        }
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::Invalid(format!("g must be nonnegative, got {g}")));
        }
        if !(floor_hom > 0.0) {
            return Err(Error::Invalid("floor_hom must be positive".into()));
        }
        let (rlo, rhi) = rho.domain();
        let tol = DOMAIN_SLACK * (1.0 + p0.abs());
        if (rlo - p0).abs() > tol || rhi.abs() > tol {
            return Err(Error::Invalid(format!("rho must be defined on [{p0}, 0]")));
        }
        let (blo, bhi) = beta.domain();
        if blo.abs() > tol || (bhi + p0).abs() > tol {
            return Err(Error::Invalid(format!("beta must be defined on [0, {}]", -p0)));
        }
        let pts = rho.probe_points(2048);
        let mut sup = 0.0f64;
        for &p in &pts {
            let r = rho.value(p);
            if !(r > 0.0) {
                return Err(Error::Invalid(format!("rho must be positive, rho({p}) = {r}")));
            }
            let s = rho.slope(p);
            if s > 1e-12 * (1.0 + r.abs()) {
                return Err(Error::Invalid(format!(
                    "rho must be nonincreasing in p (stable stratification), rho_p({p}) = {s}"
                )));
            }
            sup = sup.max(s.abs());
        }
        let rho_constant = rho.is_constant();
        let fine = PGrid::new(p0, 2048)?;
        let b = b_nodes(&beta, &fine);
        let b_min = b.iter().copied().fold(0.0f64, f64::min);
        Ok(Physics {
            g,
            c,
            p0,
            sigma,
            rho,
            beta,
            floor_hom,
            b_min,
            rho_sup_slope: if rho_constant { 0.0 } else { sup },
            rho_constant,
        })
    }

    /// The canonical irrotational test case scaled by `g`, `p₀` and ρ₀.
    pub fn homogeneous(g: f64, rho0: f64, p0: f64, sigma: f64) -> Result<Self> {
        Physics::new(
            g,
            1.0,
            p0,
            sigma,
            ProfileFn::constant(rho0, p0, 0.0)?,
            ProfileFn::constant(0.0, 0.0, -p0)?,
            1e-6,
        )
    }

    /// Copy with a different surface-tension coefficient.
    pub fn with_sigma(&self, sigma: f64) -> Self {
        let mut out = self.clone();
        out.sigma = sigma;
        out
    }

    pub fn rho0(&self) -> f64 {
        self.rho.value(0.0)
    }

    pub fn rho_p(&self, p: f64) -> f64 {
        if self.rho_constant {
            0.0
        } else {
            self.rho.slope(p)
        }
    }

    /// β evaluated at ψ = −p.
    pub fn beta_at(&self, p: f64) -> f64 {
        self.beta.value(-p)
    }

    /// True when ρ_p ≡ 0.
    pub fn homogeneous_density(&self) -> bool {
        self.rho_constant
    }

    /// ‖ρ_p‖_∞ over a fine sampling of `[p₀, 0]`.
    pub fn rho_sup_slope(&self) -> f64 {
        self.rho_sup_slope
    }

    pub fn b_min(&self) -> f64 {
        self.b_min
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_table_evaluation() {
        let f = ProfileFn::poly(vec![0.0, 0.0, 1.0], -1.0, 0.0).unwrap();
        assert_eq!(f.eval(-0.5).unwrap(), 0.25);
        assert_eq!(f.deriv(-1.0).unwrap(), -2.0);
        assert!(f.eval(0.5).is_err());
        let t = ProfileFn::table(vec![-1.0, 0.0], vec![2.0, 3.0]).unwrap();
        assert_eq!(t.eval(-1.0).unwrap(), 2.0);
    }

    #[test]
    fn antiderivative_examples() {
        let grid = PGrid::new(-1.0, 16).unwrap();
        let one = ProfileFn::constant(1.0, 0.0, 1.0).unwrap();
        let b = build_b(&one, &grid).unwrap();
        assert!((b.value(-0.5) + 0.5).abs() < 1e-14);
        assert!((b_min(&b) + 1.0).abs() < 1e-14);
        let lin = ProfileFn::poly(vec![0.0, 1.0], 0.0, 1.0).unwrap();
        let b = build_b(&lin, &grid).unwrap();
        assert!((b.value(-1.0) + 0.5).abs() < 1e-14);
        assert!((b_min(&b) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn physics_rejects_unstable_stratification() {
        let rho = ProfileFn::poly(vec![1.0, 0.1], -1.0, 0.0).unwrap();
        let beta = ProfileFn::constant(0.0, 0.0, 1.0).unwrap();
        assert!(Physics::new(1.0, 1.0, -1.0, 0.0, rho, beta, 1e-6).is_err());
    }
}
