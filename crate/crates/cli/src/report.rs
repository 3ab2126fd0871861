//! Output files of a scenario run.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so the CSV
//! files reproduce the computed values exactly and reruns are byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use windgame_core::StatsReport;

use crate::error::{CliError, Stage};
use crate::scenario::{RunMetadata, ScenarioResult, SweepSummary};

pub const EQUILIBRIA: &str = "equilibria.csv";
pub const PER_REALISATION: &str = "per_realisation.csv";
pub const CONVERGENCE: &str = "convergence.csv";
pub const RUN_JSON: &str = "run.json";

pub fn equilibria_csv(result: &ScenarioResult) -> String {
    let mut out = String::from("sweep_value,stat,P_N1,P_N2,Pi1,Pi2\n");
    for point in &result.sweep {
        for (stat, o) in [("mean", point.mean), ("min", point.min), ("max", point.max)] {
            let _ = writeln!(
                out,
                "{},{stat},{},{},{},{}",
                point.value, o.p_n1, o.p_n2, o.pi1, o.pi2
            );
        }
    }
    out
}

pub fn per_realisation_csv(result: &ScenarioResult) -> String {
    let mut out = String::from("realisation,sweep_value,P_N1,P_N2,Pi1,Pi2,tables_checksum\n");
    for r in &result.realisations {
        for (point, o) in result.sweep.iter().zip(&r.outcomes) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:016x}",
                r.realisation, point.value, o.p_n1, o.p_n2, o.pi1, o.pi2, r.tables_checksum
            );
        }
    }
    out
}

/// One row per variable: historic mean, ensemble mean, sigma, WCI and ME.
pub fn convergence_csv(stats: Option<&StatsReport>) -> String {
    let mut out = String::from(
        "variable,realisations,retained_samples,historic_mean,mean,sigma,wci,max_error_pct\n",
    );
    if let Some(s) = stats {
        for (name, v) in s.variables() {
            let _ = writeln!(
                out,
                "{name},{},{},{},{},{},{},{}",
                s.realisations,
                s.retained_samples,
                v.historic_mean,
                v.mean,
                v.sigma,
                v.wci,
                v.max_error_pct
            );
        }
    }
    out
}

#[derive(Serialize)]
struct RunJson<'a> {
    metadata: &'a RunMetadata,
    convergence: Option<&'a StatsReport>,
    sweep: &'a [SweepSummary],
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| {
        CliError::new(Stage::Report, format!("cannot write {}: {e}", path.display()))
    })?;
    Ok(path)
}

/// Writes the four report files into `out_dir`, creating it if needed.
pub fn emit_report(result: &ScenarioResult, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| {
        CliError::new(Stage::Report, format!("cannot create {}: {e}", out_dir.display()))
    })?;
    let json = serde_json::to_string_pretty(&RunJson {
        metadata: &result.metadata,
        convergence: result.stats.as_ref(),
        sweep: &result.sweep,
    })
    .map_err(|e| CliError::new(Stage::Report, e.to_string()))?;
    Ok(vec![
        write(out_dir, EQUILIBRIA, &equilibria_csv(result))?,
        write(out_dir, PER_REALISATION, &per_realisation_csv(result))?,
        write(out_dir, CONVERGENCE, &convergence_csv(result.stats.as_ref()))?,
        write(out_dir, RUN_JSON, &(json + "\n"))?,
    ])
}
