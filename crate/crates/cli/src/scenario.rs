//! End-to-end scenario runs: data preparation, the chain ensemble, and the
//! equilibrium at every sweep point for every realisation.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use windgame_core::{
    align_series, build_demand_conditional, build_energy_tables, build_joint_wind_table,
    fit_sigmoid, load_series_csv, normalize_demand, profit_surfaces, read_curve_points, run_chain,
    stackelberg, CostParams, GapReport, JointSeries, PowerCurve, SamplerTables, StatsReport,
};

use crate::config::{CurveConfig, ScenarioConfig};
use crate::error::{CliError, Stage, StageExt};

/// Historic data and sampling tables shared by every realisation.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub historic: JointSeries,
    pub tables: SamplerTables,
    pub gaps: Vec<GapReport>,
    pub curve: PowerCurve,
}

pub fn load_curve(curve: &CurveConfig) -> Result<PowerCurve, CliError> {
    match (&curve.points, curve.alpha, curve.beta) {
        (Some(path), _, _) => {
            let points = read_curve_points(path).stage(Stage::Sim)?;
            let fit = fit_sigmoid(&points).stage(Stage::Sim)?;
            log::info!(
                "fitted power curve to {}: alpha {:.4}, beta {:.4}, rms {:.4}",
                path.display(),
                fit.curve.alpha,
                fit.curve.beta,
                fit.rms
            );
            Ok(fit.curve)
        }
        (None, Some(alpha), Some(beta)) => PowerCurve::new(alpha, beta).stage(Stage::Config),
        _ => Ok(PowerCurve::e82_default()),
    }
}

/// Loads, cleans and aligns the data and builds the merged sampling tables.
pub fn prepare(config: &ScenarioConfig) -> Result<Prepared, CliError> {
    let clock = Instant::now();
    let data = &config.data;
    let (w1, g1) = load_series_csv(&data.w1.path, &data.w1.columns()).stage(Stage::Ingest)?;
    let (w2, g2) = load_series_csv(&data.w2.path, &data.w2.columns()).stage(Stage::Ingest)?;
    let (demand, g3) =
        load_series_csv(&data.demand.path, &data.demand.columns()).stage(Stage::Ingest)?;
    let gaps = vec![g1, g2, g3];
    for g in &gaps {
        log::info!("{g}");
    }
    let demand = normalize_demand(&demand, data.demand_mean).stage(Stage::Ingest)?;
    let historic = align_series(&w1, &w2, &demand).stage(Stage::Ingest)?;
    log::info!(
        "ingest: {} aligned hourly records ({:.2}s)",
        historic.len(),
        clock.elapsed().as_secs_f64()
    );

    let clock = Instant::now();
    let wind = config.bins.wind_spec().stage(Stage::Config)?;
    let demand_spec = config.bins.demand_spec().stage(Stage::Config)?;
    let joint = build_joint_wind_table(&historic, wind, wind)
        .and_then(|t| t.merge_sparse_bins(config.bins.min_count))
        .stage(Stage::Dist)?;
    let conditional = build_demand_conditional(&historic, wind, demand_spec)
        .and_then(|c| c.merge_sparse_rows(config.bins.min_count))
        .stage(Stage::Dist)?;
    let tables = SamplerTables::new(joint, conditional);
    tables.check_ergodicity().stage(Stage::Dist)?;
    log::info!(
        "dist: {}x{} merged wind bins, {} demand rows ({:.2}s)",
        tables.joint().bins(windgame_core::Axis::W1),
        tables.joint().bins(windgame_core::Axis::W2),
        tables.demand().rows(),
        clock.elapsed().as_secs_f64()
    );

    let curve = load_curve(&config.curve)?;
    Ok(Prepared {
        historic,
        tables,
        gaps,
        curve,
    })
}

/// Equilibrium capacities (MW) and profits of one game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Outcome {
    pub p_n1: f64,
    pub p_n2: f64,
    pub pi1: f64,
    pub pi2: f64,
}

impl Outcome {
    fn fields(&self) -> [f64; 4] {
        [self.p_n1, self.p_n2, self.pi1, self.pi2]
    }

    fn from_fields(f: [f64; 4]) -> Self {
        Self {
            p_n1: f[0],
            p_n2: f[1],
            pi1: f[2],
            pi2: f[3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealisationResult {
    pub realisation: usize,
    /// Checksum of the energy tables, shared by all sweep points.
    pub tables_checksum: u64,
    pub retained_hours: usize,
    /// Sample means of `(w1, w2, demand)`.
    pub means: [f64; 3],
    /// One outcome per sweep point.
    pub outcomes: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub value: f64,
    pub costs: CostParams,
    pub mean: Outcome,
    pub min: Outcome,
    pub max: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub name: Option<String>,
    pub version: &'static str,
    pub seed: u64,
    pub samples: usize,
    pub realisations: usize,
    pub burn_in_fraction: f64,
    pub retained_samples: usize,
    pub grid_step: f64,
    pub p_n_max: f64,
    pub sweep_param: &'static str,
    pub curve: PowerCurve,
    pub historic_records: usize,
    pub gaps: Vec<GapReport>,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub sweep: Vec<SweepSummary>,
    pub realisations: Vec<RealisationResult>,
    /// Absent with a single realisation.
    pub stats: Option<StatsReport>,
    pub metadata: RunMetadata,
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult, CliError> {
    config.validate()?;
    let prepared = prepare(config)?;
    run_prepared(config, &prepared)
}

/// Runs the ensemble and the sweep on already prepared data.
pub fn run_prepared(config: &ScenarioConfig, prepared: &Prepared) -> Result<ScenarioResult, CliError> {
    let clock = Instant::now();
    let chain = config.chain_config().stage(Stage::Config)?;
    let grid = config.strategy_grid().stage(Stage::Config)?;
    let sweep = config.sweep.values();
    log::info!(
        "running {} realisations of {} states, {}x{} grid, {} sweep points",
        chain.realisations,
        chain.samples,
        grid.len(),
        grid.len(),
        sweep.len()
    );

    let realisations: Vec<RealisationResult> = (0..chain.realisations)
        .into_par_iter()
        .map(|k| -> Result<RealisationResult, CliError> {
            let realisation = run_chain(&chain, &prepared.tables, k as u64).stage(Stage::Gibbs)?;
            let energy =
                build_energy_tables(&realisation, &prepared.curve, &grid).stage(Stage::Sim)?;
            let outcomes = sweep
                .iter()
                .map(|&v| {
                    let costs = config.costs_at(v, realisation.len());
                    let surfaces = profit_surfaces(&energy, &costs).stage(Stage::Game)?;
                    let eq = stackelberg(&surfaces, &grid).stage(Stage::Game)?;
                    Ok(Outcome {
                        p_n1: eq.p_n1_star,
                        p_n2: eq.p_n2_star,
                        pi1: eq.pi1_star,
                        pi2: eq.pi2_star,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            log::debug!("realisation {k} done");
            Ok(RealisationResult {
                realisation: k,
                tables_checksum: energy.checksum(),
                retained_hours: realisation.len(),
                means: realisation.means(),
                outcomes,
            })
        })
        .collect::<Result<_, _>>()?;
    log::info!(
        "ensemble and equilibria: {:.2}s",
        clock.elapsed().as_secs_f64()
    );

    let retained = chain.retained();
    let summaries = sweep
        .iter()
        .enumerate()
        .map(|(s, &value)| {
            let outcomes: Vec<Outcome> = realisations.iter().map(|r| r.outcomes[s]).collect();
            let (mean, min, max) = aggregate(&outcomes);
            SweepSummary {
                value,
                costs: config.costs_at(value, retained),
                mean,
                min,
                max,
            }
        })
        .collect();

    let stats = if realisations.len() >= 2 {
        let means: Vec<[f64; 3]> = realisations.iter().map(|r| r.means).collect();
        Some(StatsReport::from_means(&means, prepared.historic.means(), retained).stage(Stage::Gibbs)?)
    } else {
        None
    };

    Ok(ScenarioResult {
        sweep: summaries,
        realisations,
        stats,
        metadata: RunMetadata {
            name: config.name.clone(),
            version: env!("CARGO_PKG_VERSION"),
            seed: chain.seed,
            samples: chain.samples,
            realisations: chain.realisations,
            burn_in_fraction: chain.burn_in_fraction,
            retained_samples: retained,
            grid_step: grid.step(),
            p_n_max: grid.p_n_max(),
            sweep_param: config.sweep.param.name(),
            curve: prepared.curve,
            historic_records: prepared.historic.len(),
            gaps: prepared.gaps.clone(),
            elapsed_secs: clock.elapsed().as_secs_f64(),
        },
    })
}

/// Field-wise mean, min and max over realisations.
///
/// The mean is clamped into `[min, max]`, which rounding in the sum can
/// otherwise leave by one ulp when all values are equal.
pub fn aggregate(outcomes: &[Outcome]) -> (Outcome, Outcome, Outcome) {
    let n = outcomes.len() as f64;
    let mut sum = [0.0; 4];
    let mut lo = [f64::INFINITY; 4];
    let mut hi = [f64::NEG_INFINITY; 4];
    for o in outcomes {
        for (k, v) in o.fields().into_iter().enumerate() {
            sum[k] += v;
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    let mean = std::array::from_fn(|k| (sum[k] / n).clamp(lo[k], hi[k]));
    (
        Outcome::from_fields(mean),
        Outcome::from_fields(lo),
        Outcome::from_fields(hi),
    )
}

/// Per-realisation sample means only, for convergence studies.
pub fn ensemble_stats(config: &ScenarioConfig, prepared: &Prepared) -> Result<StatsReport, CliError> {
    let chain = config.chain_config().stage(Stage::Config)?;
    let means: Vec<[f64; 3]> = (0..chain.realisations)
        .into_par_iter()
        .map(|k| run_chain(&chain, &prepared.tables, k as u64).map(|r| r.means()))
        .collect::<windgame_core::Result<_>>()
        .stage(Stage::Gibbs)?;
    StatsReport::from_means(&means, prepared.historic.means(), chain.retained()).stage(Stage::Gibbs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(p_n1: f64, p_n2: f64, pi1: f64, pi2: f64) -> Outcome {
        Outcome { p_n1, p_n2, pi1, pi2 }
    }

    #[test]
    fn aggregate_matches_hand_values() {
        let (mean, min, max) = aggregate(&[o(10.0, 0.0, -5.0, 1.0), o(20.0, 5.0, 5.0, 3.0)]);
        assert_eq!(mean, o(15.0, 2.5, 0.0, 2.0));
        assert_eq!(min, o(10.0, 0.0, -5.0, 1.0));
        assert_eq!(max, o(20.0, 5.0, 5.0, 3.0));
    }

    #[test]
    fn aggregate_of_equal_values_is_exact() {
        let x = o(0.1, 0.1, 0.1, 0.1);
        let (mean, min, max) = aggregate(&[x, x, x]);
        assert_eq!(mean, x);
        assert_eq!(min, x);
        assert_eq!(max, x);
    }
}
