//! Subcommand implementations. Each writes its artifacts under the output
//! directory and a short summary on standard output.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use capgrav::bifurc::{
    compute_coefficients, compute_psi, compute_theta, predict_branches, BranchGerm, Case, CoefficientSet, GermKind,
    Side,
};
use capgrav::eulerian::{reconstruct, verify_wave};
use capgrav::heightsolver::{
    continue_branch, discrete_double_sigma, discrete_laminar, germ, physics_hash, residual, sup_norm, Branch,
    HeightField,
};
use capgrav::laminar::solve_laminar;
use capgrav::par;
use capgrav::profiles::{PGrid, Physics};
use capgrav::spectral::{
    classify as classify_point, dispersion_at, find_double_sigma, find_root_n, BifurcationPoint, Classification,
    EigenMode, Normalization,
};
use serde_json::{json, Value};

use crate::config::{Overrides, RunConfig};
use crate::json::{self, float};
use crate::svg::{bifurcation_diagram, Series};
use crate::CliError;

fn log(msg: impl AsRef<str>) {
    if std::env::var("CAPGRAV_LOG").map(|v| !v.is_empty() && v != "0" && v != "off").unwrap_or(false) {
        eprintln!("[capgrav] {}", msg.as_ref());
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn csv_row(vals: &[f64]) -> String {
    let cells: Vec<String> = vals.iter().map(|&v| float(v)).collect();
    cells.join(",") + "\n"
}

/// Physics with σ moved to the continuous double point when `--n2` is given.
fn physics_for(cfg: &RunConfig, ov: &Overrides, grid: &PGrid) -> Result<Physics, CliError> {
    let phys = cfg.physics()?;
    match ov.n2 {
        Some(n2) => {
            let (s, _) = find_double_sigma(&phys, grid, n2, cfg.fixed_point())?;
            log(format!("double point n2 = {n2}: sigma = {s}"));
            Ok(phys.with_sigma(s))
        }
        None => Ok(phys),
    }
}

fn rescale(mode: &EigenMode, bp: &BifurcationPoint, norm: Normalization) -> EigenMode {
    match norm {
        Normalization::Surface => mode.surface_normalized(),
        Normalization::SinhMatched => mode.sinh_matched(&bp.flow),
        _ => mode.clone(),
    }
}

pub fn laminar(cfg: &RunConfig, _ov: &Overrides) -> Result<(), CliError> {
    let phys = cfg.physics()?;
    let grid = cfg.grid()?;
    let fp = cfg.fixed_point();
    let mut summary = String::from("lambda,Q,Qdot,depth\n");
    for (j, &lambda) in cfg.laminar.lambdas.iter().enumerate() {
        let flow = solve_laminar(&phys, lambda, &grid, fp)?;
        let mut s = String::from("p,H,Hp,G,Ydot,Gdot\n");
        for k in 0..flow.len() {
            s.push_str(&csv_row(&[grid.node(k), flow.h[k], flow.hp[k], flow.g[k], flow.ydot[k], flow.gdot[k]]));
        }
        write(&cfg.output.join(format!("laminar_{j}.csv")), &s)?;
        // The same flow as a solution of the discretized height equation.
        let (col, q) = discrete_laminar(&phys, &grid, lambda, fp)?;
        let mut hf = HeightField::from_column(cfg.numerics.nq, grid, q, &col)?;
        hf.residual = sup_norm(&residual(&phys, &hf)?);
        write(&cfg.output.join(format!("laminar_{j}.dump")), &hf.to_dump())?;
        summary.push_str(&csv_row(&[lambda, flow.q, flow.qdot, flow.h_top()]));
        println!("lambda {} Q {} depth {}", float(lambda), float(flow.q), float(flow.h_top()));
    }
    write(&cfg.output.join("laminar.csv"), &summary)
}

pub fn dispersion(cfg: &RunConfig, _ov: &Overrides) -> Result<(), CliError> {
    let phys = cfg.physics()?;
    let grid = cfg.grid()?;
    let fp = cfg.fixed_point();
    let d = &cfg.dispersion;
    let floor = capgrav::laminar::lambda_floor(&phys);
    let lo = d.lambda_min.unwrap_or(floor + 1e-3 * floor.abs().max(1.0));
    if !(d.lambda_max > lo) {
        return Err(CliError::Config(format!("dispersion.lambda_max must exceed {lo}")));
    }
    let mut jobs = Vec::new();
    for &n in &d.n {
        for i in 0..d.samples {
            jobs.push((n, lo + (d.lambda_max - lo) * i as f64 / (d.samples - 1) as f64));
        }
    }
    let rows = par::map(&jobs, |&(n, lam)| dispersion_at(&phys, &grid, n, lam, fp));
    let mut table = String::from("n,lambda,D,scale\n");
    for (&(n, lam), r) in jobs.iter().zip(rows) {
        let r = r?;
        table.push_str(&format!("{n},{},{},{}\n", float(lam), float(r.d), float(r.scale)));
    }
    write(&cfg.output.join("dispersion.csv"), &table)?;
    let mut roots = String::from("n,lambda\n");
    for &n in &d.n {
        match find_root_n(&phys, &grid, n, fp) {
            Ok(r) => {
                roots.push_str(&format!("{n},{}\n", float(r)));
                println!("n {n} root {}", float(r));
            }
            Err(e) => {
                roots.push_str(&format!("{n},nan\n"));
                println!("n {n} no root ({})", e.name());
            }
        }
    }
    write(&cfg.output.join("dispersion_roots.csv"), &roots)
}

fn classify_report(bp: &BifurcationPoint, sigma: f64) -> Value {
    let residuals: Vec<Value> = bp
        .residuals
        .iter()
        .map(|d| json!({"n": d.n, "lambda": d.lambda, "D": d.d, "scale": d.scale, "relative": d.relative()}))
        .collect();
    json!({
        "sigma": sigma,
        "lambda_star": bp.lambda_star,
        "Q_star": bp.q_star,
        "class": bp.class.label(),
        "resonant_n": bp.resonant,
        "residuals": residuals,
    })
}

pub fn classify(cfg: &RunConfig, ov: &Overrides) -> Result<(), CliError> {
    let grid = cfg.grid()?;
    let phys = physics_for(cfg, ov, &grid)?;
    let bp = classify_point(&phys, &grid, cfg.numerics.n_max, cfg.fixed_point())?;
    let text = json::to_string(&classify_report(&bp, phys.sigma));
    write(&cfg.output.join("classify.json"), &text)?;
    print!("{text}");
    Ok(())
}

fn germ_json(g: &BranchGerm) -> Value {
    let kind = match g.kind {
        GermKind::Pure(n) => format!("pure-{n}"),
        GermKind::Mixed => "mixed".into(),
    };
    let side = match g.side {
        Side::Plus => "plus",
        Side::Minus => "minus",
    };
    json!({"kind": kind, "side": side, "theta": g.theta, "scaling": g.scaling})
}

/// Coefficients and germs at the configured point. A simple point has only
/// Ψ₁₁ and Θ₁₁₁₁ and a pair of pure germs on one side.
fn analyse(cfg: &RunConfig, ov: &Overrides) -> Result<(Physics, BifurcationPoint, Value, Vec<BranchGerm>), CliError> {
    let grid = cfg.grid()?;
    let phys = physics_for(cfg, ov, &grid)?;
    let bp = classify_point(&phys, &grid, cfg.numerics.n_max, cfg.fixed_point())?;
    let norm: Normalization = cfg.numerics.normalization.into();
    match bp.class {
        Classification::Double(n2) => {
            let c: CoefficientSet = compute_coefficients(&phys, &bp, norm)?;
            let case = if n2 == 2 * c.n1 { Case::Quadratic } else { Case::Cubic };
            let germs = predict_branches(&c, case)?;
            let report = json!({
                "class": bp.class.label(),
                "sigma": phys.sigma,
                "lambda_star": c.lambda_star,
                "normalization": serde_json::to_value(c.normalization).unwrap_or(Value::Null),
                "psi11": c.psi11,
                "psi22": c.psi22,
                "phi": {"112": c.phi112, "121": c.phi121, "211": c.phi211},
                "theta": {"1111": c.theta1111, "2222": c.theta2222, "1122": c.theta1122, "2211": c.theta2211},
                "flags": {"nd1": c.flags.nd1, "nd2": c.flags.nd2, "regular_value": c.flags.regular_value},
                "germs": germs.iter().map(germ_json).collect::<Vec<_>>(),
            });
            Ok((phys, bp, report, germs))
        }
        Classification::Simple => {
            let m = rescale(&bp.modes[0], &bp, norm);
            let psi = compute_psi(&phys, &bp.flow, &m)?;
            let theta = compute_theta(&phys, &bp.flow, &m)?;
            let mut germs = Vec::new();
            for side in [Side::Plus, Side::Minus] {
                let t2 = -side.sign() * psi / theta;
                if t2 > 0.0 {
                    for sg in [1.0, -1.0] {
                        germs.push(BranchGerm { kind: GermKind::Pure(1), side, theta: [sg * t2.sqrt(), 0.0], scaling: 0.5 });
                    }
                }
            }
            let report = json!({
                "class": bp.class.label(),
                "sigma": phys.sigma,
                "lambda_star": bp.lambda_star,
                "normalization": serde_json::to_value(m.normalization).unwrap_or(Value::Null),
                "psi11": psi,
                "theta": {"1111": theta},
                "germs": germs.iter().map(germ_json).collect::<Vec<_>>(),
            });
            Ok((phys, bp, report, germs))
        }
        Classification::ZeroMode => Err(CliError::Config(
            "the zero-mode point has no coefficient analysis; choose another sigma".into(),
        )),
    }
}

pub fn coeffs(cfg: &RunConfig, ov: &Overrides) -> Result<(), CliError> {
    let (_, _, report, _) = analyse(cfg, ov)?;
    let text = json::to_string(&report);
    write(&cfg.output.join("coeffs.json"), &text)?;
    print!("{text}");
    Ok(())
}

pub fn predict(cfg: &RunConfig, ov: &Overrides) -> Result<(), CliError> {
    let (_, _, _, germs) = analyse(cfg, ov)?;
    let text = json::to_string(&Value::Array(germs.iter().map(germ_json).collect()));
    write(&cfg.output.join("germs.json"), &text)?;
    print!("{text}");
    Ok(())
}

/// One germ per geometrically distinct branch: the sign of the n₁ component
/// is fixed by the symmetry q ↦ q + π/n₁ (for odd n₂ it flips both
/// components), leaving pure-1, pure-n₂ and the two relative signs of a
/// mixed germ.
fn representatives(germs: &[BranchGerm]) -> Vec<(String, BranchGerm)> {
    let mut out: Vec<(String, BranchGerm)> = Vec::new();
    for g in germs {
        let (label, ok) = match g.kind {
            GermKind::Pure(n) if g.theta[0] != 0.0 => (format!("pure-{n}"), g.theta[0] > 0.0),
            GermKind::Pure(n) => (format!("pure-{n}"), g.theta[1] > 0.0),
            GermKind::Mixed => {
                let rel = if g.theta[1] > 0.0 { "plus" } else { "minus" };
                (format!("mixed-{rel}"), g.theta[0] > 0.0)
            }
        };
        if ok && !out.iter().any(|(l, _)| *l == label) {
            out.push((label, *g));
        }
    }
    out
}

pub fn branch(cfg: &RunConfig, ov: &Overrides) -> Result<(), CliError> {
    let grid = cfg.grid()?;
    let fp = cfg.fixed_point();
    let nq = cfg.numerics.nq;
    let (phys_c, bp, _, germs) = analyse(cfg, ov)?;
    let norm: Normalization = cfg.numerics.normalization.into();
    let mut bp_scaled = bp.clone();
    bp_scaled.modes = bp.modes.iter().map(|m| rescale(m, &bp, norm)).collect();
    // At a double point the discretized problem has its own double point
    // nearby; continuation runs there so that both modes are critical.
    let phys = match bp.class {
        Classification::Double(n2) => {
            let (s, _) = discrete_double_sigma(&phys_c, &grid, nq, n2, phys_c.sigma, bp.lambda_star, fp)?;
            log(format!("discrete double point: sigma = {s}"));
            phys_c.with_sigma(s)
        }
        _ => phys_c.clone(),
    };
    let picks = representatives(&germs);
    let controls = cfg.controls();
    let eps = cfg.branch.eps;
    log(format!("continuing {} branches", picks.len()));
    let runs: Vec<Result<Branch, capgrav::Error>> = par::map(&picks, |(_, g)| {
        let gm = germ(&phys, &bp_scaled, eps, g.theta, nq, fp)?;
        Ok(continue_branch(&phys, &gm, &controls))
    });
    let mut series = Vec::new();
    let mut summary = Vec::new();
    for ((label, g), run) in picks.iter().zip(runs) {
        let br = run?;
        let dir = cfg.output.join(format!("branch_{label}"));
        write(&dir.join("branch.csv"), &br.to_csv())?;
        if cfg.branch.dump_every > 0 {
            for (p, f) in br.points.iter().zip(&br.fields) {
                if p.step % cfg.branch.dump_every == 0 {
                    write(&dir.join(format!("field_{:04}.dump", p.step)), &f.to_dump())?;
                }
            }
        }
        println!("branch {label}: {} points, termination {:?}", br.points.len(), br.termination);
        series.push(Series { label: label.clone(), points: br.points.iter().map(|p| (p.q, p.amplitude)).collect() });
        summary.push(json!({
            "label": label,
            "germ": germ_json(g),
            "points": br.points.len(),
            "termination": format!("{:?}", br.termination),
            "Q_star": br.q_star,
            "min_laminar_distance": br.min_laminar_distance,
        }));
    }
    write(&cfg.output.join("branches.svg"), &bifurcation_diagram(&series))?;
    let report = json!({"sigma": phys.sigma, "class": bp.class.label(), "branches": summary});
    write(&cfg.output.join("branches.json"), &json::to_string(&report))
}

/// The field named in the config, or the discrete laminar field at the
/// first configured λ.
fn load_field(cfg: &RunConfig, phys: &Physics) -> Result<HeightField, CliError> {
    match &cfg.field {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            let hf = HeightField::from_dump(&text)?;
            if (hf.grid.p0() - phys.p0).abs() > 1e-12 * phys.p0.abs() {
                return Err(CliError::Config(format!(
                    "field has p0 = {} but the configuration has {}",
                    hf.grid.p0(),
                    phys.p0
                )));
            }
            Ok(hf)
        }
        None => {
            let grid = cfg.grid()?;
            let lambda = *cfg
                .laminar
                .lambdas
                .first()
                .ok_or_else(|| CliError::Config("no field given and laminar.lambdas is empty".into()))?;
            let (col, q) = discrete_laminar(phys, &grid, lambda, cfg.fixed_point())?;
            let mut hf = HeightField::from_column(cfg.numerics.nq, grid, q, &col)?;
            hf.physics_hash = physics_hash(phys);
            Ok(hf)
        }
    }
}

pub fn eulerian(cfg: &RunConfig, _ov: &Overrides) -> Result<(), CliError> {
    let phys = cfg.physics()?;
    let hf = load_field(cfg, &phys)?;
    let wave = reconstruct(&phys, &hf)?;
    let v = verify_wave(&phys, &wave);
    write(&cfg.output.join("wave.csv"), &wave.to_csv())?;
    write(&cfg.output.join("surface.csv"), &wave.surface_csv())?;
    let report = json!({
        "depth": wave.d,
        "Q": wave.q,
        "flux_error": v.flux_error,
        "bernoulli": v.bernoulli,
        "yih": v.yih,
        "eta_mean": v.eta_mean,
        "max_u_minus_c": v.max_u_minus_c,
    });
    let text = json::to_string(&report);
    write(&cfg.output.join("eulerian.json"), &text)?;
    print!("{text}");
    Ok(())
}

struct Check {
    name: &'static str,
    value: f64,
    limit: f64,
}

pub fn verify(cfg: &RunConfig, _ov: &Overrides) -> Result<(), CliError> {
    let phys = cfg.physics()?;
    if cfg.field.is_none() {
        return Err(CliError::Config("verify needs a field dump (--field or `field`)".into()));
    }
    let hf = load_field(cfg, &phys)?;
    let vo = &cfg.verify;
    let h = (PI / hf.nq as f64).max(phys.p0.abs() / hf.np() as f64);
    let h2 = h * h;
    let wave = match reconstruct(&phys, &hf) {
        Ok(w) => w,
        Err(e) => {
            println!("FAIL ellipticity ({e})");
            return Err(CliError::CheckFailed { name: "ellipticity".into(), detail: e.to_string() });
        }
    };
    println!("pass ellipticity");
    let res = sup_norm(&residual(&phys, &hf)?);
    let v = verify_wave(&phys, &wave);
    let checks = [
        Check { name: "height-residual", value: res, limit: vo.residual_tol },
        Check { name: "eta-mean", value: v.eta_mean, limit: vo.eta_mean_tol },
        Check { name: "u-below-c", value: v.max_u_minus_c, limit: 0.0 },
        Check { name: "mass-flux", value: v.flux_error, limit: vo.flux_const * h2 },
        Check { name: "surface-bernoulli", value: v.bernoulli, limit: vo.bernoulli_const * h2 },
        Check { name: "yih", value: v.yih, limit: vo.yih_const * h2 },
    ];
    let mut first: Option<&Check> = None;
    for c in &checks {
        let ok = c.value < c.limit;
        println!("{} {} {} (limit {})", if ok { "pass" } else { "FAIL" }, c.name, float(c.value), float(c.limit));
        if !ok && first.is_none() {
            first = Some(c);
        }
    }
    match first {
        Some(c) => Err(CliError::CheckFailed {
            name: c.name.into(),
            detail: format!("{} >= {}", float(c.value), float(c.limit)),
        }),
        None => Ok(()),
    }
}
