//! Inputs for the benchmarks in `benches/`, built from the synthetic generator
//! and seeded random draws so that every run measures the same work.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use windgame_core::synth::{generate, SyntheticConfig};
use windgame_core::{
    align_series, build_demand_conditional, build_joint_wind_table, normalize_demand, BinSpec,
    JointSeries, PerUnitSeries, ProfitSurfaces, SamplerTables, DEFAULT_DEMAND_MEAN,
};

/// One synthetic year, aligned and normalised.
pub fn synthetic_year(seed: u64) -> JointSeries {
    let config = SyntheticConfig {
        wind_start: NaiveDate::from_ymd_opt(2014, 1, 1).unwrap(),
        wind_end: NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(),
        demand_start: NaiveDate::from_ymd_opt(2014, 1, 1).unwrap(),
        demand_end: NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(),
        seed,
        ..SyntheticConfig::default()
    };
    let data = generate(&config).expect("synthetic config is valid");
    let demand = normalize_demand(&data.demand, DEFAULT_DEMAND_MEAN).expect("demand is positive");
    align_series(&data.w1, &data.w2, &demand).expect("series share a period")
}

/// Merged sampling tables with the default bins and `min_count = 10`.
pub fn sampler_tables(seed: u64) -> SamplerTables {
    let series = synthetic_year(seed);
    let wind = BinSpec::new(1.0, 0.0, 50.0).unwrap();
    let demand = BinSpec::new(5.0, 0.0, 1000.0).unwrap();
    let joint = build_joint_wind_table(&series, wind, wind)
        .and_then(|t| t.merge_sparse_bins(10))
        .expect("synthetic joint table");
    let cond = build_demand_conditional(&series, wind, demand)
        .and_then(|c| c.merge_sparse_rows(10))
        .expect("synthetic demand table");
    SamplerTables::new(joint, cond)
}

/// `len` timesteps of uniform per-unit outputs and demand in [40, 180] MW.
pub fn per_unit_series(len: usize, seed: u64) -> PerUnitSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |lo: f64, hi: f64| (0..len).map(|_| rng.random_range(lo..hi)).collect();
    PerUnitSeries {
        x1: draw(0.0, 1.0),
        x2: draw(0.0, 1.0),
        demand: draw(40.0, 180.0),
    }
}

/// Square profit surfaces with independent uniform entries.
pub fn random_surfaces(n: usize, seed: u64) -> ProfitSurfaces {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pi1 = (0..n * n).map(|_| rng.random_range(-1e6..1e6)).collect();
    let pi2 = (0..n * n).map(|_| rng.random_range(-1e6..1e6)).collect();
    ProfitSurfaces::new(n, n, pi1, pi2).expect("dimensions match")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        assert_eq!(per_unit_series(50, 1), per_unit_series(50, 1));
        assert_eq!(random_surfaces(5, 2), random_surfaces(5, 2));
        assert_ne!(random_surfaces(5, 2), random_surfaces(5, 3));
    }

    #[test]
    fn per_unit_series_ranges() {
        let s = per_unit_series(1000, 9);
        assert_eq!(s.len(), 1000);
        assert!(s.x1.iter().chain(&s.x2).all(|x| (0.0..1.0).contains(x)));
        assert!(s.demand.iter().all(|d| (40.0..180.0).contains(d)));
    }
}
