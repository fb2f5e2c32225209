//! Acceptance battery at the full profile. Prints one line per criterion.
//! Criteria listed in `KNOWN_FAILURES` are reported as FAIL but do not fail
//! the run; any other failure does.

use std::path::PathBuf;
use std::process::{Command, ExitCode};

use geocount_cli::battery::{self, Context, CriterionResult};
use geocount_cli::config::{Overrides, RunConfig};

/// Window-law monotonicity over t = 8, 10, 12 does not hold on the Bolza
/// spectrum (ratios 1.052, 1.093, 1.028); see the README.
const KNOWN_FAILURES: [u8; 1] = [11];

fn cache_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("geocount-cache")
}

fn determinism() -> CriterionResult {
    let work = tempfile::tempdir().expect("temp dir");
    let cache = cache_dir();
    let mut reports = Vec::new();
    let mut codes = Vec::new();
    for run in ["a", "b"] {
        let out = work.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_geocount"))
            .args(["verify-all", "--seed", "7"])
            .arg("--out")
            .arg(&out)
            .arg("--cache-dir")
            .arg(&cache)
            .stdout(std::process::Stdio::null())
            .stderr(std::process::Stdio::null())
            .status()
            .expect("run geocount");
        codes.push(status.code());
        reports.push(std::fs::read(out.join("verify_report.json")).unwrap_or_default());
    }
    let ran = codes.iter().all(|c| matches!(c, Some(0) | Some(1)));
    let same = !reports[0].is_empty() && reports[0] == reports[1];
    let digest = geocount_cli::sha256_hex(&reports[0]);
    CriterionResult {
        id: 15,
        name: battery::CRITERIA[14].1,
        pass: ran && same,
        summary: format!(
            "two `verify-all --seed 7` runs: reports {} (sha256 {}), exit codes {:?}",
            if same { "byte-identical" } else { "differ" },
            &digest[..16],
            codes
        ),
        detail: serde_json::Value::Null,
    }
}

fn main() -> ExitCode {
    let o = Overrides { seed: Some(7), cache_dir: Some(cache_dir()), ..Overrides::default() };
    let cfg = RunConfig::resolve(&o, None).expect("default configuration");
    let mut ctx = Context::new(&cfg, true).expect("surface");
    let ids: Vec<u8> = (1..=14).collect();
    let mut results = match battery::run(&mut ctx, &ids, |r| println!("{}", r.line())) {
        Ok(r) => r.criteria,
        Err(e) => {
            println!("acceptance battery aborted: {e}");
            return ExitCode::FAILURE;
        }
    };
    let det = determinism();
    println!("{}", det.line());
    results.push(det);

    let failed: Vec<u8> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    let unexpected: Vec<u8> = failed.iter().copied().filter(|id| !KNOWN_FAILURES.contains(id)).collect();
    for id in KNOWN_FAILURES.iter().filter(|id| !failed.contains(id)) {
        println!("note: criterion {id} is listed as a known failure but passed");
    }
    println!(
        "acceptance: {} passed, {} failed {:?} (known {:?}, unexpected {:?})",
        results.len() - failed.len(),
        failed.len(),
        failed,
        KNOWN_FAILURES,
        unexpected
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
