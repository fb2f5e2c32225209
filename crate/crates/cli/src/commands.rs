//! One function per subcommand. Each writes its outputs under `cfg.out` and
//! returns the text to print on stdout.

use std::fs;
use std::path::Path;

use geocount::density::{check_equivariance, ps_density_in};
use geocount::dynlab::{counting_suite, equidistribution_profile, mixing_correlations, write_rows_csv, ProbeBox};
use geocount::fuchsian::enumerate_ball;
use geocount::hypgeom::DiskPoint;
use geocount::jacobi::{
    random_start, trajectory_rows, write_trajectory_csv, ConformalMetric, DEFAULT_DT, DEFAULT_HORIZON,
};
use geocount::mme::{liouville_measure, KnieperSampler, PhaseSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::battery::{self, Context, VerifyReport, DENSITY_BINS, PS_EXPONENT};
use crate::cache::load_or_build;
use crate::config::RunConfig;
use crate::error::CliError;

fn write_json(path: &Path, v: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, CliError> {
    fs::create_dir_all(&cfg.out)?;
    Ok(&cfg.out)
}

pub fn spectrum(cfg: &RunConfig) -> Result<String, CliError> {
    let s = cfg.load_surface()?;
    let (t, status) = load_or_build(&s, cfg.radius, &cfg.cache_dir)?;
    let v = json!({
        "surface": s.name,
        "radius": cfg.radius,
        "classes": t.classes.len(),
        "primitive": t.classes.iter().filter(|c| c.primitive).count(),
        "length_groups": t.groups.len(),
        "systole": t.systole(),
        "cache": status,
    });
    Ok(serde_json::to_string_pretty(&v)?)
}

/// `count.csv` holds `t, P_t, predicted, ratio` with `predicted = e^{ht}/(ht)`.
pub fn count(cfg: &RunConfig) -> Result<String, CliError> {
    let s = cfg.load_surface()?;
    let (t, _) = load_or_build(&s, cfg.radius, &cfg.cache_dir)?;
    let probe = cfg
        .phase_box
        .map(|b| ProbeBox { phase_box: b, measure: liouville_measure(&s, &b, cfg.samples as usize, cfg.seed).value });
    let suite = counting_suite(&s, &t, &cfg.t_grid, cfg.epsilon, probe.as_ref())?;
    let dir = out_dir(cfg)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "P_t", "predicted", "ratio"])?;
    for r in suite.rows.iter().filter(|r| r.law == "cumulative") {
        w.write_record([r.t.to_string(), r.observed.to_string(), r.predicted.to_string(), r.ratio.to_string()])?;
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.to_string()))?)
        .map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(dir.join("count.csv"), &text)?;
    write_rows_csv(&suite.rows, &dir.join("count_rows.csv"))?;
    write_json(&dir.join("count.json"), &suite)?;
    Ok(text.trim_end().to_string())
}

pub fn density(cfg: &RunConfig) -> Result<String, CliError> {
    let s = cfg.load_surface()?;
    let dir = out_dir(cfg)?;
    let mut ctx = Context::new(cfg, false)?;
    let report = battery::run(&mut ctx, &[6], |_| {})?;
    let ball = enumerate_ball(&s, cfg.profile.ball_radius)?;
    let p = DiskPoint::origin();
    ps_density_in(&ball, &p, PS_EXPONENT)?.export(DENSITY_BINS, &dir.join("density.csv"), &dir.join("density.json"))?;
    let gamma = s.generators[0];
    let eq = check_equivariance(&s, &gamma, &p, PS_EXPONENT, cfg.profile.equivariance_radius, DENSITY_BINS)?;
    let v = json!({ "transformation": report.criteria[0].detail, "equivariance": eq });
    write_json(&dir.join("density_checks.json"), &v)?;
    Ok(serde_json::to_string_pretty(&v)?)
}

pub fn mme(cfg: &RunConfig) -> Result<String, CliError> {
    let s = cfg.load_surface()?;
    let dir = out_dir(cfg)?;
    let mut ctx = Context::new(cfg, false)?;
    let report = battery::run(&mut ctx, &[7, 8], |_| {})?;
    let mut v = json!({ "measure": report.criteria[0].detail, "conditionals": report.criteria[1].detail });
    if let Some(b) = cfg.phase_box {
        let ball = enumerate_ball(&s, cfg.profile.ball_radius)?;
        let mu =
            geocount::density::ps_density_shell(&ball, &DiskPoint::origin(), PS_EXPONENT, cfg.profile.shell_inner)?;
        let n = cfg.samples as usize;
        let k = KnieperSampler::new(&s, &mu)?.estimate(&[PhaseSet::Box(b)], n, cfg.seed, 0);
        let l = liouville_measure(&s, &b, n, cfg.seed);
        v["box"] = json!({ "box": b, "knieper": k.estimates[0], "liouville": l });
    }
    write_json(&dir.join("mme.json"), &v)?;
    Ok(serde_json::to_string_pretty(&v)?)
}

pub fn cube(cfg: &RunConfig) -> Result<String, CliError> {
    let s = cfg.load_surface()?;
    let dir = out_dir(cfg)?;
    let mut ctx = Context::new(cfg, true)?;
    let report = battery::run(&mut ctx, &[9, 10], |_| {})?;
    let mut v = json!({ "mixing": report.criteria[0].detail, "equidistribution": report.criteria[1].detail });
    if let Some(b) = cfg.phase_box {
        let n = cfg.samples as usize;
        let m = liouville_measure(&s, &b, n, cfg.seed);
        let mix = mixing_correlations(&s, &b, &b, &cfg.t_grid, n, cfg.seed)?;
        ctx.ensure_table()?;
        let mu = equidistribution_profile(&s, ctx.table(), &[b], &cfg.t_grid, 0.05)?;
        v["box"] = json!({ "box": b, "m": m, "t": cfg.t_grid, "self_correlation": mix, "mu_t": mu[0] });
    }
    write_json(&dir.join("cube.json"), &v)?;
    Ok(serde_json::to_string_pretty(&v)?)
}

/// Jacobi classifier suites; with `dump`, one trajectory CSV per preset.
pub fn rank(cfg: &RunConfig, dump: bool) -> Result<String, CliError> {
    let dir = out_dir(cfg)?;
    let mut ctx = Context::new(cfg, false)?;
    let report = battery::run(&mut ctx, &[14], |_| {})?;
    let mut v = report.criteria[0].detail.clone();
    if dump {
        let mut files = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for m in ConformalMetric::presets() {
            let s0 = random_start(&m, &mut rng, 1);
            let rows = trajectory_rows(&m, &s0, DEFAULT_HORIZON, DEFAULT_DT)?;
            let path = dir.join(format!("trajectory_{}.csv", m.name()));
            write_trajectory_csv(&rows, &path)?;
            files.push(Value::String(path.display().to_string()));
        }
        v["trajectories"] = Value::Array(files);
    }
    write_json(&dir.join("rank.json"), &v)?;
    Ok(serde_json::to_string_pretty(&v)?)
}

/// Runs the full battery, writes `verify_report.json` and fails with the
/// list of failed criteria.
pub fn verify_all(cfg: &RunConfig) -> Result<(VerifyReport, String), CliError> {
    let dir = out_dir(cfg)?;
    let mut ctx = Context::new(cfg, true)?;
    let ids: Vec<u8> = battery::CRITERIA.iter().map(|c| c.0).collect();
    let report = battery::run(&mut ctx, &ids, |r| println!("{}", r.line()))?;
    write_json(&dir.join("verify_report.json"), &report)?;
    let summary = format!("{} of {} criteria passed", ids.len() - report.failed.len(), ids.len());
    Ok((report, summary))
}
