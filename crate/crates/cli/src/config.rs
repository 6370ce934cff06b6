//! Run configuration: one JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use capgrav::heightsolver::{Controls, NewtonOptions};
use capgrav::laminar::FixedPoint;
use capgrav::profiles::{PGrid, Physics, PhysicsSpec};
use capgrav::spectral::Normalization;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub physics: PhysicsSpec,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub laminar: LaminarOptions,
    #[serde(default)]
    pub dispersion: DispersionOptions,
    #[serde(default)]
    pub branch: BranchOptions,
    #[serde(default)]
    pub verify: VerifyOptions,
    /// Height-field dump read by `eulerian` and `verify`.
    #[serde(default)]
    pub field: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    pub np: usize,
    pub nq: usize,
    pub n_max: usize,
    pub fixed_point_tol: f64,
    pub fixed_point_max_iter: usize,
    pub normalization: NormalizationName,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            np: 64,
            nq: 64,
            n_max: 64,
            fixed_point_tol: 1e-12,
            fixed_point_max_iter: 200,
            normalization: NormalizationName::SinhMatched,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationName {
    Shooting,
    Surface,
    SinhMatched,
}

impl From<NormalizationName> for Normalization {
    fn from(n: NormalizationName) -> Self {
        match n {
            NormalizationName::Shooting => Normalization::Shooting,
            NormalizationName::Surface => Normalization::Surface,
            NormalizationName::SinhMatched => Normalization::SinhMatched,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaminarOptions {
    pub lambdas: Vec<f64>,
}

impl Default for LaminarOptions {
    fn default() -> Self {
        LaminarOptions { lambdas: vec![2.0, 4.0] }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionOptions {
    pub n: Vec<usize>,
    /// Table range; the lower end defaults to just above the laminar floor.
    pub lambda_min: Option<f64>,
    pub lambda_max: f64,
    pub samples: usize,
}

impl Default for DispersionOptions {
    fn default() -> Self {
        DispersionOptions { n: vec![1, 2, 3, 4], lambda_min: None, lambda_max: 10.0, samples: 50 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BranchOptions {
    pub eps: f64,
    pub max_steps: usize,
    pub ds_max: f64,
    pub ds_min: f64,
    pub delta_stop: f64,
    pub kappa_stop: f64,
    pub q_stop: f64,
    pub tol_loop: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Write a field dump every this many accepted points (0: none).
    pub dump_every: usize,
}

impl Default for BranchOptions {
    fn default() -> Self {
        let c = Controls::default();
        BranchOptions {
            eps: 1e-3,
            max_steps: 40,
            ds_max: c.ds_max,
            ds_min: c.ds_min,
            delta_stop: c.delta_stop,
            kappa_stop: c.kappa_stop,
            q_stop: c.q_stop,
            tol_loop: c.tol_loop,
            newton_tol: c.newton.tol,
            newton_max_iter: c.newton.max_iter,
            dump_every: 1,
        }
    }
}

/// Pass thresholds of `verify`. The Eulerian checks are discretization
/// errors, so their thresholds scale with h² where h is the larger of Δq and
/// Δp.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyOptions {
    pub residual_tol: f64,
    pub eta_mean_tol: f64,
    pub flux_const: f64,
    pub bernoulli_const: f64,
    pub yih_const: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { residual_tol: 1e-8, eta_mean_tol: 1e-12, flux_const: 200.0, bernoulli_const: 200.0, yih_const: 200.0 }
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
    pub n2: Option<usize>,
    pub steps: Option<usize>,
    pub field: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path, ov: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(o) = &ov.out {
            cfg.output = o.clone();
        }
        if let Some(l) = ov.lambda {
            cfg.laminar.lambdas = vec![l];
        }
        if let Some(s) = ov.sigma {
            cfg.physics.sigma = s;
        }
        if let Some(n) = ov.steps {
            cfg.branch.max_steps = n;
        }
        if let Some(f) = &ov.field {
            cfg.field = Some(f.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let n = &self.numerics;
        for (name, v) in [("np", n.np), ("nq", n.nq)] {
            if v < 16 || !v.is_power_of_two() {
                return bad(format!("numerics.{name} must be a power of two >= 16, got {v}"));
            }
        }
        if n.n_max < 2 {
            return bad("numerics.n_max must be at least 2".into());
        }
        let b = &self.branch;
        let v = &self.verify;
        let tols = [
            ("numerics.fixed_point_tol", n.fixed_point_tol),
            ("branch.eps", b.eps),
            ("branch.ds_max", b.ds_max),
            ("branch.ds_min", b.ds_min),
            ("branch.delta_stop", b.delta_stop),
            ("branch.kappa_stop", b.kappa_stop),
            ("branch.q_stop", b.q_stop),
            ("branch.tol_loop", b.tol_loop),
            ("branch.newton_tol", b.newton_tol),
            ("verify.residual_tol", v.residual_tol),
            ("verify.eta_mean_tol", v.eta_mean_tol),
            ("verify.flux_const", v.flux_const),
            ("verify.bernoulli_const", v.bernoulli_const),
            ("verify.yih_const", v.yih_const),
        ];
        for (name, t) in tols {
            if !(t > 0.0) || !t.is_finite() {
                return bad(format!("{name} must be positive and finite, got {t}"));
            }
        }
        if b.ds_min > b.ds_max {
            return bad("branch.ds_min exceeds branch.ds_max".into());
        }
        if self.laminar.lambdas.iter().any(|l| !l.is_finite()) {
            return bad("laminar.lambdas must be finite".into());
        }
        let d = &self.dispersion;
        if d.samples < 2 || d.n.is_empty() {
            return bad("dispersion needs at least two samples and one wavenumber".into());
        }
        Ok(())
    }

    pub fn physics(&self) -> Result<Physics, CliError> {
        Ok(self.physics.build()?)
    }

    pub fn grid(&self) -> Result<PGrid, CliError> {
        Ok(PGrid::new(self.physics.p0, self.numerics.np)?)
    }

    pub fn fixed_point(&self) -> FixedPoint {
        FixedPoint { tol: self.numerics.fixed_point_tol, max_iter: self.numerics.fixed_point_max_iter }
    }

    pub fn controls(&self) -> Controls {
        let b = &self.branch;
        Controls {
            max_steps: b.max_steps,
            ds_max: b.ds_max,
            ds_min: b.ds_min,
            delta_stop: b.delta_stop,
            kappa_stop: b.kappa_stop,
            q_stop: b.q_stop,
            tol_loop: b.tol_loop,
            newton: NewtonOptions { tol: b.newton_tol, max_iter: b.newton_max_iter, ..Controls::default().newton },
        }
    }
}
