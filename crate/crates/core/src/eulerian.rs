//! Physical variables recovered from a height field, and residual checks
//! that do not reuse the height-equation discretization.
//!
//! With y = h − d the change of variables gives u = c − 1/(√ρ h_p) and
//! v = −h_q/(√ρ h_p); the pseudo-stream function is ψ = −p. Three
//! independent oracles then probe an accepted field: the mass flux through
//! each vertical line, the Bernoulli condition on the free surface, and Yih's
//! equation on a Cartesian grid.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::heightsolver::{hp_field, HeightField};
use crate::numerics::interp::lagrange4;
use crate::numerics::quad::simpson;
use crate::par;
use crate::profiles::Physics;

/// Velocity, density and surface data on the mapped grid over a full period.
///
/// Column `i` sits at x_i = i·Δx, i = 0..2N_q − 1, with Δx = π/N_q; within a
/// column, entry `k` is the streamline p_k = p₀ + kΔp (bed first).
#[derive(Debug, Clone, PartialEq)]
pub struct EulerianWave {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// y(x_i, p_k), column-major in x.
    pub y: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    /// ρ on each streamline (constant along p-rows).
    pub rho: Vec<f64>,
    pub eta: Vec<f64>,
    pub d: f64,
    pub q: f64,
    pub c: f64,
    pub p0: f64,
}

impl EulerianWave {
    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.nx() as f64
    }

    /// ψ = −p on each streamline.
    pub fn psi(&self) -> Vec<f64> {
        self.p.iter().map(|p| -p).collect()
    }

    /// Mean of η over the period.
    pub fn eta_mean(&self) -> f64 {
        self.eta.iter().sum::<f64>() / self.nx() as f64
    }

    /// Largest value of u − c; negative on every valid wave.
    pub fn max_u_minus_c(&self) -> f64 {
        self.u
            .iter()
            .flatten()
            .fold(f64::NEG_INFINITY, |m, &u| m.max(u - self.c))
    }

    /// Surface curvature κ = −η″/(1 + η′²)^{3/2}, fourth-order periodic stencils.
    pub fn curvature(&self) -> Vec<f64> {
        let n = self.nx();
        let dx = self.dx();
        let e = |i: isize| self.eta[i.rem_euclid(n as isize) as usize];
        (0..n as isize)
            .map(|i| {
                let d1 = (-e(i + 2) + 8.0 * e(i + 1) - 8.0 * e(i - 1) + e(i - 2)) / (12.0 * dx);
                let d2 = (-e(i + 2) + 16.0 * e(i + 1) - 30.0 * e(i) + 16.0 * e(i - 1) - e(i - 2)) / (12.0 * dx * dx);
                -d2 / (1.0 + d1 * d1).powf(1.5)
            })
            .collect()
    }

    /// Wave dump: `x,y,u,v,rho,psi`, one line per node.
    pub fn to_csv(&self) -> String {
        let psi = self.psi();
        let mut s = String::from("x,y,u,v,rho,psi\n");
        for i in 0..self.nx() {
            for k in 0..self.p.len() {
                s.push_str(&format!(
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    self.x[i], self.y[i][k], self.u[i][k], self.v[i][k], self.rho[k], psi[k]
                ));
            }
        }
        s
    }

    /// Surface dump: `x,eta,kappa`.
    pub fn surface_csv(&self) -> String {
        let kappa = self.curvature();
        let mut s = String::from("x,eta,kappa\n");
        for i in 0..self.nx() {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", self.x[i], self.eta[i], kappa[i]));
        }
        s
    }
}

/// Index on the half-period grid of full-period column `i`, and whether the
/// column lies on the reflected half.
fn fold(i: usize, nq: usize) -> (usize, bool) {
    if i <= nq {
        (i, false)
    } else {
        (2 * nq - i, true)
    }
}

/// Fourth-order h_q on the half-period grid, using the even reflection.
fn hq_field(hf: &HeightField) -> Vec<f64> {
    let nq = hf.nq as isize;
    let dq = hf.dq();
    let r = |i: isize| -> usize {
        let j = i.rem_euclid(2 * nq);
        (if j > nq { 2 * nq - j } else { j }) as usize
    };
    let mut out = vec![0.0; hf.h.len()];
    for i in 0..=nq {
        for k in 0..=hf.np() {
            let h = |j: isize| hf.at(r(j), k);
            out[hf.idx(i as usize, k)] = (8.0 * (h(i + 1) - h(i - 1)) - (h(i + 2) - h(i - 2))) / (12.0 * dq);
        }
    }
    out
}

/// Maps a height field to (u, v, ρ, η) over the full period.
pub fn reconstruct(phys: &Physics, hf: &HeightField) -> Result<EulerianWave> {
    let hp = hp_field(hf);
    for i in 0..=hf.nq {
        for k in 0..=hf.np() {
            let v = hp[hf.idx(i, k)];
            if !(v > 0.0) {
                return Err(Error::EllipticityLoss { i, k, hp: v });
            }
        }
    }
    let hq = hq_field(hf);
    let np = hf.np();
    let p = hf.grid.nodes();
    let rho: Vec<f64> = p.iter().map(|&pk| phys.rho.value(pk)).collect();
    let sq: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
    let d = hf.depth();
    let nx = 2 * hf.nq;
    let dx = hf.dq();
    let mut wave = EulerianWave {
        x: (0..nx).map(|i| i as f64 * dx).collect(),
        p,
        y: Vec::with_capacity(nx),
        u: Vec::with_capacity(nx),
        v: Vec::with_capacity(nx),
        rho,
        eta: Vec::with_capacity(nx),
        d,
        q: hf.q,
        c: phys.c,
        p0: hf.grid.p0(),
    };
    for i in 0..nx {
        let (j, mirrored) = fold(i, hf.nq);
        let sign = if mirrored { -1.0 } else { 1.0 };
        let mut y = Vec::with_capacity(np + 1);
        let mut u = Vec::with_capacity(np + 1);
        let mut v = Vec::with_capacity(np + 1);
        for k in 0..=np {
            let n = hf.idx(j, k);
            let w = 1.0 / (sq[k] * hp[n]);
            y.push(hf.h[n] - d);
            u.push(phys.c - w);
            v.push(-sign * hq[n] * w);
        }
        wave.eta.push(y[np]);
        wave.y.push(y);
        wave.u.push(u);
        wave.v.push(v);
    }
    Ok(wave)
}

/// Flux ∫ √ρ (u − c) dy through the vertical line at column `i`, by cubic
/// resampling onto a uniform y-grid and Simpson's rule. Approximates p₀.
pub fn flux(wave: &EulerianWave, i: usize) -> f64 {
    let ys = &wave.y[i];
    let f: Vec<f64> = (0..ys.len())
        .map(|k| wave.rho[k].sqrt() * (wave.u[i][k] - wave.c))
        .collect();
    let n = ys.len() - 1;
    let m = n + n % 2;
    let (lo, hi) = (ys[0], ys[ys.len() - 1]);
    let h = (hi - lo) / m as f64;
    let samples: Vec<f64> = (0..=m).map(|j| lagrange4(ys, &f, lo + j as f64 * h)).collect();
    simpson(h, &samples)
}

/// max over columns of |flux − p₀|.
pub fn flux_error(wave: &EulerianWave) -> f64 {
    let cols: Vec<usize> = (0..wave.nx()).collect();
    par::map(&cols, |&i| (flux(wave, i) - wave.p0).abs())
        .into_iter()
        .fold(0.0, f64::max)
}

/// Surface Bernoulli residual ρ((u−c)² + v²) + 2gρ(η + d) + 2σκ − Q, max-abs
/// over the surface nodes.
pub fn surface_bernoulli_residual(phys: &Physics, wave: &EulerianWave) -> f64 {
    let kappa = wave.curvature();
    let top = wave.p.len() - 1;
    let rho = wave.rho[top];
    (0..wave.nx())
        .map(|i| {
            let du = wave.u[i][top] - wave.c;
            let v = wave.v[i][top];
            rho * (du * du + v * v) + 2.0 * phys.g * rho * (wave.eta[i] + wave.d) + 2.0 * phys.sigma * kappa[i]
                - wave.q
        })
        .fold(0.0, |m, r: f64| m.max(r.abs()))
}

/// Residual of Yih's equation Δψ − g y ρ′(−ψ) + β(ψ) on a Cartesian grid.
///
/// ψ is interpolated column by column from the mapped grid (cubic in y) onto
/// y_j = −d + jΔy, with Δx the column spacing and Δy the mean streamline
/// spacing. Only points at least two cells inside the fluid are scored.
pub fn yih_residual(phys: &Physics, wave: &EulerianWave) -> f64 {
    let nx = wave.nx();
    let np = wave.p.len() - 1;
    let dx = wave.dx();
    let eta_max = wave.eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dy = (eta_max + wave.d) / np as f64;
    let ny = np + 1;
    let ys: Vec<f64> = (0..ny).map(|j| -wave.d + j as f64 * dy).collect();
    let cols: Vec<usize> = (0..nx).collect();
    // ψ and the interpolated streamline label at every (x_i, y_j) inside the fluid.
    let grid: Vec<Vec<Option<f64>>> = par::map(&cols, |&i| {
        let yc = &wave.y[i];
        ys.iter()
            .map(|&y| (y <= wave.eta[i]).then(|| lagrange4(yc, &wave.p, y)))
            .collect()
    });
    let mut worst = 0.0f64;
    for i in 0..nx {
        let il = (i + nx - 1) % nx;
        let ir = (i + 1) % nx;
        let lim = wave.eta[il].min(wave.eta[i]).min(wave.eta[ir]);
        for j in 2..ny.saturating_sub(1) {
            if ys[j] + 2.0 * dy > lim {
                break;
            }
            let pv = |ii: usize, jj: usize| grid[ii][jj].expect("interior point");
            let p = pv(i, j);
            // ψ = −p, so Δψ = −Δp.
            let lap = -((pv(ir, j) - 2.0 * p + pv(il, j)) / (dx * dx) + (pv(i, j + 1) - 2.0 * p + pv(i, j - 1)) / (dy * dy));
            let r = lap - phys.g * ys[j] * phys.rho_p(p) + phys.beta_at(p);
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// All Eulerian checks for one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    pub flux_error: f64,
    pub bernoulli: f64,
    pub yih: f64,
    pub eta_mean: f64,
    pub max_u_minus_c: f64,
}

pub fn verify_wave(phys: &Physics, wave: &EulerianWave) -> Verification {
    Verification {
        flux_error: flux_error(wave),
        bernoulli: surface_bernoulli_residual(phys, wave),
        yih: yih_residual(phys, wave),
        eta_mean: wave.eta_mean().abs(),
        max_u_minus_c: wave.max_u_minus_c(),
    }
}
