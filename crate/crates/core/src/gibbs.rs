//! Three-variable Gibbs sampler over the empirical wind and demand tables.
//!
//! Each sweep redraws `w1 | w2`, then `w2 | w1`, then demand given the mean
//! of the two new wind speeds. Every draw is a raw historic value.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{Axis, DemandConditional, JointTable};
use crate::error::{Error, Result};
use crate::ingest::JointSeries;
use crate::stats::{confidence_width, sample_std};

/// Sampling-ready view of the merged tables.
///
/// Conditional slices are materialised once so that a step is three uniform
/// index draws.
#[derive(Debug, Clone)]
pub struct SamplerTables {
    joint: JointTable,
    demand: DemandConditional,
    w1_given_w2: Vec<Vec<f64>>,
    w2_given_w1: Vec<Vec<f64>>,
}

impl SamplerTables {
    pub fn new(joint: JointTable, demand: DemandConditional) -> Self {
        let w1_given_w2 = (0..joint.bins(Axis::W2))
            .map(|j| joint.slice_members(Axis::W2, j))
            .collect();
        let w2_given_w1 = (0..joint.bins(Axis::W1))
            .map(|i| joint.slice_members(Axis::W1, i))
            .collect();
        Self {
            joint,
            demand,
            w1_given_w2,
            w2_given_w1,
        }
    }

    pub fn joint(&self) -> &JointTable {
        &self.joint
    }

    pub fn demand(&self) -> &DemandConditional {
        &self.demand
    }

    /// Checks that the chain can reach every retained state from any start:
    /// the nonempty wind cells are connected and every mean-wind row the chain
    /// can land in holds demand observations.
    pub fn check_ergodicity(&self) -> Result<()> {
        self.joint.check_connectivity()?;
        let points = self.joint.points();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let first = self.demand.row_of(0.5 * (lo[0] + lo[1]))?;
        let last = self.demand.row_of(0.5 * (hi[0] + hi[1]))?;
        if let Some(row) = (first..=last).find(|&r| self.demand.row_total(r) == 0) {
            return Err(Error::Ergodicity(format!(
                "mean-wind row {row} has no demand observations"
            )));
        }
        Ok(())
    }

    fn draw_demand<R: Rng>(&self, w1: f64, w2: f64, rng: &mut R) -> Result<f64> {
        let mean = 0.5 * (w1 + w2);
        let row = self.demand.row_of(mean)?;
        pick(self.demand.row_members(row), rng).ok_or_else(|| {
            Error::Ergodicity(format!("no demand observations for mean wind {mean}"))
        })
    }
}

fn pick<R: Rng>(members: &[f64], rng: &mut R) -> Option<f64> {
    if members.is_empty() {
        None
    } else {
        Some(members[rng.random_range(0..members.len())])
    }
}

/// Sampling parameters for one ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// States generated per chain, burn-in included.
    pub samples: usize,
    /// Number of independent chains.
    pub realisations: usize,
    pub burn_in_fraction: f64,
    pub seed: u64,
}

impl ChainConfig {
    pub fn new(samples: usize, realisations: usize, burn_in_fraction: f64, seed: u64) -> Result<Self> {
        let config = Self {
            samples,
            realisations,
            burn_in_fraction,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.realisations == 0 {
            return Err(Error::InvalidParameter(
                "samples and realisations must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return Err(Error::InvalidParameter(format!(
                "burn-in fraction must lie in [0, 1), got {}",
                self.burn_in_fraction
            )));
        }
        if self.retained() == 0 {
            return Err(Error::InvalidParameter(
                "burn-in discards every sample".into(),
            ));
        }
        Ok(())
    }

    pub fn burn_in(&self) -> usize {
        (self.burn_in_fraction * self.samples as f64).floor() as usize
    }

    pub fn retained(&self) -> usize {
        self.samples.saturating_sub(self.burn_in())
    }

    /// Generator for chain `chain_index`: the master seed picks the key, the
    /// index picks one of ChaCha's 2^64 independent streams.
    pub fn rng_for(&self, chain_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(chain_index);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub w1: f64,
    pub w2: f64,
    pub demand: f64,
}

/// Draws a starting state: a uniformly chosen historic wind pair plus a demand
/// drawn for its mean wind speed.
pub fn init_chain<R: Rng>(tables: &SamplerTables, rng: &mut R) -> Result<ChainState> {
    let points = tables.joint.points();
    if points.is_empty() {
        return Err(Error::Empty("joint table"));
    }
    let [w1, w2] = points[rng.random_range(0..points.len())];
    let demand = tables.draw_demand(w1, w2, rng)?;
    Ok(ChainState { w1, w2, demand })
}

/// One systematic sweep: `w1 | w2`, then `w2 | w1`, then demand.
pub fn gibbs_step<R: Rng>(state: &ChainState, tables: &SamplerTables, rng: &mut R) -> Result<ChainState> {
    let j = tables.joint.bin_of(Axis::W2, state.w2)?;
    let w1 = pick(&tables.w1_given_w2[j], rng)
        .ok_or_else(|| Error::Ergodicity(format!("empty slice w1 | w2 bin {j}")))?;
    let i = tables.joint.bin_of(Axis::W1, w1)?;
    let w2 = pick(&tables.w2_given_w1[i], rng)
        .ok_or_else(|| Error::Ergodicity(format!("empty slice w2 | w1 bin {i}")))?;
    let demand = tables.draw_demand(w1, w2, rng)?;
    Ok(ChainState { w1, w2, demand })
}

/// One chain after burn-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realisation {
    pub chain_index: u64,
    /// Master seed; the generator stream is `chain_index`.
    pub seed: u64,
    pub samples: Vec<ChainState>,
}

impl Realisation {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn means(&self) -> [f64; 3] {
        let n = self.samples.len() as f64;
        let mut sum = [0.0; 3];
        for s in &self.samples {
            sum[0] += s.w1;
            sum[1] += s.w2;
            sum[2] += s.demand;
        }
        sum.map(|s| s / n)
    }
}

/// Runs one chain of `config.samples` states (the initial state counts as the
/// first) and drops the burn-in prefix.
pub fn run_chain(config: &ChainConfig, tables: &SamplerTables, chain_index: u64) -> Result<Realisation> {
    config.validate()?;
    tables.check_ergodicity()?;
    let mut rng = config.rng_for(chain_index);
    let burn_in = config.burn_in();
    let mut samples = Vec::with_capacity(config.retained());
    let mut state = init_chain(tables, &mut rng)?;
    for t in 0..config.samples {
        if t > 0 {
            state = gibbs_step(&state, tables, &mut rng)?;
        }
        if t >= burn_in {
            samples.push(state);
        }
    }
    Ok(Realisation {
        chain_index,
        seed: config.seed,
        samples,
    })
}

/// Runs `config.realisations` chains in parallel; output is ordered by chain
/// index and identical to running them one by one.
pub fn run_ensemble(config: &ChainConfig, tables: &SamplerTables) -> Result<Vec<Realisation>> {
    config.validate()?;
    tables.check_ergodicity()?;
    (0..config.realisations as u64)
        .into_par_iter()
        .map(|k| run_chain(config, tables, k))
        .collect()
}

/// Ensemble statistics for one variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariableStats {
    /// Mean of the per-realisation means.
    pub mean: f64,
    /// Sample standard deviation of the per-realisation means.
    pub sigma: f64,
    /// Width of the 95% Student-t confidence interval of the mean.
    pub wci: f64,
    /// Largest relative deviation of a realisation mean from the historic mean, in percent.
    pub max_error_pct: f64,
    pub historic_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub realisations: usize,
    pub retained_samples: usize,
    pub w1: VariableStats,
    pub w2: VariableStats,
    pub demand: VariableStats,
}

impl StatsReport {
    /// Builds the report from per-realisation `(w1, w2, demand)` means.
    pub fn from_means(means: &[[f64; 3]], historic: [f64; 3], retained_samples: usize) -> Result<Self> {
        if means.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "convergence statistics need at least 2 realisations, got {}",
                means.len()
            )));
        }
        let n = means.len();
        let var = |k: usize| -> VariableStats {
            let m: Vec<f64> = means.iter().map(|row| row[k]).collect();
            let mean = m.iter().sum::<f64>() / n as f64;
            let sigma = sample_std(&m);
            let mu = historic[k];
            let max_error_pct = m
                .iter()
                .map(|x| (x - mu).abs() / mu * 100.0)
                .fold(0.0, f64::max);
            VariableStats {
                mean,
                sigma,
                wci: confidence_width(sigma, n),
                max_error_pct,
                historic_mean: mu,
            }
        };
        Ok(Self {
            realisations: n,
            retained_samples,
            w1: var(0),
            w2: var(1),
            demand: var(2),
        })
    }

    pub fn variables(&self) -> [(&'static str, &VariableStats); 3] {
        [("w1", &self.w1), ("w2", &self.w2), ("P_D", &self.demand)]
    }

    pub fn table_header() -> String {
        let mut s = format!("{:<14}", "run");
        for v in ["w1", "w2", "P_D"] {
            s.push_str(&format!(
                " {:>10} {:>8} {:>8} {:>7}",
                format!("mean {v}"),
                "sigma",
                "WCI",
                "ME%"
            ));
        }
        s
    }

    /// One aligned row in the layout of [`StatsReport::table_header`].
    pub fn table_row(&self, label: &str) -> String {
        let mut s = format!("{label:<14}");
        for (_, v) in self.variables() {
            s.push_str(&format!(
                " {:>10.4} {:>8.4} {:>8.4} {:>6.2}%",
                v.mean, v.sigma, v.wci, v.max_error_pct
            ));
        }
        s
    }
}

pub fn convergence_stats(realisations: &[Realisation], historic: &JointSeries) -> Result<StatsReport> {
    let means: Vec<[f64; 3]> = realisations.iter().map(Realisation::means).collect();
    let retained = realisations.first().map_or(0, Realisation::len);
    StatsReport::from_means(&means, historic.means(), retained)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{build_demand_conditional, build_joint_wind_table, BinSpec};
    use crate::ingest::JointRecord;
    use chrono::NaiveDate;

    fn series(triples: &[(f64, f64, f64)]) -> JointSeries {
        let t0 = NaiveDate::from_ymd_opt(2012, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        JointSeries::from_records(
            triples
                .iter()
                .enumerate()
                .map(|(k, &(w1, w2, demand))| JointRecord {
                    timestamp: t0 + chrono::Duration::hours(k as i64),
                    w1,
                    w2,
                    demand,
                })
                .collect(),
        )
        .unwrap()
    }

    fn tables(s: &JointSeries, min_count: u64) -> SamplerTables {
        let spec = BinSpec::new(1.0, 0.0, 30.0).unwrap();
        let dspec = BinSpec::new(5.0, 0.0, 300.0).unwrap();
        let joint = build_joint_wind_table(s, spec, spec)
            .unwrap()
            .merge_sparse_bins(min_count)
            .unwrap();
        let demand = build_demand_conditional(s, spec, dspec)
            .unwrap()
            .merge_sparse_rows(min_count)
            .unwrap();
        SamplerTables::new(joint, demand)
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn single_record_init_is_point_mass() {
        let t = tables(&series(&[(10.0, 14.0, 100.0)]), 1);
        let mut r = rng(1);
        for _ in 0..10 {
            let s = init_chain(&t, &mut r).unwrap();
            assert_eq!(s, ChainState { w1: 10.0, w2: 14.0, demand: 100.0 });
            let next = gibbs_step(&s, &t, &mut r).unwrap();
            assert_eq!(next, s);
        }
    }

    #[test]
    fn init_picks_records_uniformly() {
        // two records in one cell, so the only thing distinguishing them is the draw
        let t = tables(&series(&[(10.2, 10.2, 100.0), (10.7, 10.7, 100.0)]), 1);
        let mut r = rng(2);
        let hits = (0..10_000)
            .filter(|_| init_chain(&t, &mut r).unwrap().w1 == 10.2)
            .count();
        let frac = hits as f64 / 10_000.0;
        assert!((frac - 0.5).abs() <= 0.02, "frac = {frac}");
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let t = tables(&series(&[(5.1, 5.3, 90.0), (5.4, 5.2, 110.0), (6.5, 5.5, 95.0)]), 1);
        let state = ChainState { w1: 5.1, w2: 5.3, demand: 90.0 };
        let a = gibbs_step(&state, &t, &mut rng(9)).unwrap();
        let b = gibbs_step(&state, &t, &mut rng(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(init_chain(&t, &mut rng(4)).unwrap(), init_chain(&t, &mut rng(4)).unwrap());
    }

    #[test]
    fn symmetric_table_marginal_is_one_half() {
        // 2x2 independent table: w1 in {1.5, 2.5}, w2 in {1.5, 2.5}, one record per cell
        let s = series(&[(1.5, 1.5, 50.0), (1.5, 2.5, 50.0), (2.5, 1.5, 50.0), (2.5, 2.5, 50.0)]);
        let t = tables(&s, 1);
        let mut r = rng(5);
        let mut state = init_chain(&t, &mut r).unwrap();
        let steps = 50_000;
        let mut low = 0usize;
        for _ in 0..steps {
            state = gibbs_step(&state, &t, &mut r).unwrap();
            if state.w1 == 1.5 {
                low += 1;
            }
        }
        // independent table: every w1 draw is a fair coin, so the binomial bound is exact
        let sd = (0.25 / steps as f64).sqrt();
        let frac = low as f64 / steps as f64;
        assert!((frac - 0.5).abs() <= 3.0 * sd, "frac = {frac}");
    }

    #[test]
    fn burn_in_arithmetic() {
        let t = tables(&series(&[(5.1, 5.3, 90.0), (5.4, 5.2, 110.0)]), 1);
        let c = ChainConfig::new(10, 1, 0.2, 3).unwrap();
        assert_eq!(run_chain(&c, &t, 0).unwrap().len(), 8);
        let c = ChainConfig::new(50_000, 1, 0.2, 3).unwrap();
        assert_eq!(c.burn_in(), 10_000);
        assert_eq!(run_chain(&c, &t, 0).unwrap().len(), 40_000);
        assert!(ChainConfig::new(1, 1, 0.99, 0).is_ok());
        assert!(ChainConfig::new(1, 1, 1.0, 0).is_err());
        assert!(ChainConfig::new(0, 1, 0.2, 0).is_err());
    }

    fn spread_series() -> JointSeries {
        let triples: Vec<_> = (0..400)
            .map(|k| {
                let base = 3.0 + (k % 17) as f64;
                let w1 = base + 0.1 * (k % 7) as f64;
                let w2 = base + 0.1 * (k % 5) as f64 + if k % 3 == 0 { 1.0 } else { 0.0 };
                (w1, w2, 80.0 + (k % 41) as f64)
            })
            .collect();
        series(&triples)
    }

    #[test]
    fn ensemble_matches_sequential_chains() {
        let s = spread_series();
        let t = tables(&s, 10);
        let c = ChainConfig::new(500, 4, 0.2, 77).unwrap();
        let ens = run_ensemble(&c, &t).unwrap();
        assert_eq!(ens.len(), 4);
        for (k, r) in ens.iter().enumerate() {
            assert_eq!(*r, run_chain(&c, &t, k as u64).unwrap());
        }
        for a in 0..4 {
            for b in (a + 1)..4 {
                assert_ne!(ens[a].samples, ens[b].samples);
            }
        }
        let one = ChainConfig { realisations: 1, ..c };
        assert_eq!(run_ensemble(&one, &t).unwrap()[0], run_chain(&c, &t, 0).unwrap());
    }

    #[test]
    fn samples_stay_within_historic_support() {
        let s = spread_series();
        let t = tables(&s, 10);
        let c = ChainConfig::new(2000, 2, 0.2, 1).unwrap();
        for r in run_ensemble(&c, &t).unwrap() {
            for st in &r.samples {
                assert!(s.records().iter().any(|x| x.w1 == st.w1));
                assert!(s.records().iter().any(|x| x.w2 == st.w2));
                assert!(s.records().iter().any(|x| x.demand == st.demand));
            }
        }
    }

    #[test]
    fn disconnected_tables_fail_before_sampling() {
        let mut triples = vec![(1.5, 1.5, 10.0); 10];
        triples.extend(vec![(20.5, 20.5, 10.0); 10]);
        let t = tables(&series(&triples), 10);
        let c = ChainConfig::new(100, 1, 0.2, 0).unwrap();
        let err = run_chain(&c, &t, 0).unwrap_err();
        assert!(matches!(err, Error::Ergodicity(_)));
        assert!(err.to_string().contains("increase min_count"));
    }

    #[test]
    fn stats_degenerate_ensemble() {
        let means = vec![[12.0, 12.5, 108.0]; 5];
        let r = StatsReport::from_means(&means, [12.0, 12.5, 108.0], 100).unwrap();
        for (_, v) in r.variables() {
            assert_eq!(v.sigma, 0.0);
            assert_eq!(v.wci, 0.0);
            assert_eq!(v.max_error_pct, 0.0);
        }
        assert!(StatsReport::from_means(&means[..1], [1.0; 3], 1).is_err());
    }

    #[test]
    fn stats_hand_computed() {
        let means = vec![[10.0, 1.0, 100.0], [12.0, 1.0, 100.0], [14.0, 1.0, 100.0]];
        let r = StatsReport::from_means(&means, [11.0, 1.0, 100.0], 10).unwrap();
        assert_eq!(r.w1.mean, 12.0);
        assert!((r.w1.sigma - 2.0).abs() < 1e-12);
        // t(0.975, 2) = 4.302652729749464
        let expected = 2.0 * 4.302_652_729_696_142 * 2.0 / 3f64.sqrt();
        assert!((r.w1.wci - expected).abs() < 1e-6);
        assert!((r.w1.max_error_pct - 300.0 / 11.0).abs() < 1e-12);
        assert!(r.table_row("x").contains("12.0000"));
    }
}
