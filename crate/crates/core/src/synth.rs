//! Synthetic stand-in for the historic station and demand records.
//!
//! Two wind sites share a persistent, cross-correlated Gaussian driver mapped
//! onto Weibull marginals; winter is windier. Demand follows seasonal and daily
//! cycles plus a modest wind-linked term and AR(1) noise, in national-scale
//! MW (normalise it before use).

use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::ingest::TimeSeries;

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub wind_start: NaiveDate,
    /// Exclusive.
    pub wind_end: NaiveDate,
    pub demand_start: NaiveDate,
    /// Exclusive.
    pub demand_end: NaiveDate,
    /// Hour-to-hour persistence of the wind driver.
    pub persistence: f64,
    /// Correlation between the two sites' innovations.
    pub site_correlation: f64,
    /// Weibull (shape, scale) per site.
    pub weibull: [(f64, f64); 2],
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            wind_start: NaiveDate::from_ymd_opt(2012, 1, 1).unwrap(),
            wind_end: NaiveDate::from_ymd_opt(2016, 1, 1).unwrap(),
            demand_start: NaiveDate::from_ymd_opt(2013, 1, 1).unwrap(),
            demand_end: NaiveDate::from_ymd_opt(2016, 1, 1).unwrap(),
            persistence: 0.97,
            site_correlation: 0.8,
            weibull: [(2.1, 13.6), (2.1, 13.75)],
            seed: 2017,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub w1: TimeSeries,
    pub w2: TimeSeries,
    pub demand: TimeSeries,
}

fn hours(start: NaiveDate, end: NaiveDate) -> Vec<NaiveDateTime> {
    let mut t = start.and_hms_opt(0, 0, 0).unwrap();
    let end = end.and_hms_opt(0, 0, 0).unwrap();
    let mut out = Vec::new();
    while t < end {
        out.push(t);
        t += chrono::Duration::hours(1);
    }
    out
}

fn season(t: &NaiveDateTime) -> f64 {
    // +1 in mid-January, -1 in mid-July
    let day = t.ordinal() as f64 - 15.0;
    (2.0 * std::f64::consts::PI * day / 365.25).cos()
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticData> {
    if config.wind_end <= config.wind_start || config.demand_end <= config.demand_start {
        return Err(Error::InvalidParameter("synthetic periods are empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::standard();
    let phi = config.persistence;
    let rho = config.site_correlation;
    let innovation = (1.0 - phi * phi).sqrt();

    let wind_times = hours(config.wind_start, config.wind_end);
    let mut z = [0.0f64; 2];
    let mut w1 = Vec::with_capacity(wind_times.len());
    let mut w2 = Vec::with_capacity(wind_times.len());
    let mut driver = Vec::with_capacity(wind_times.len());
    for t in &wind_times {
        let e0: f64 = rng.sample(StandardNormal);
        let e1: f64 = rng.sample(StandardNormal);
        let e1 = rho * e0 + (1.0 - rho * rho).sqrt() * e1;
        z[0] = phi * z[0] + innovation * e0;
        z[1] = phi * z[1] + innovation * e1;
        let shift = 0.25 * season(t);
        let speed = |zk: f64, (shape, scale): (f64, f64)| -> f64 {
            let u = normal.cdf(zk + shift).clamp(1e-12, 1.0 - 1e-12);
            let w = scale * (-(1.0 - u).ln()).powf(1.0 / shape);
            (w.min(49.9) * 10.0).round() / 10.0
        };
        w1.push(speed(z[0], config.weibull[0]));
        w2.push(speed(z[1], config.weibull[1]));
        driver.push(0.5 * (z[0] + z[1]));
    }

    let demand_times = hours(config.demand_start, config.demand_end);
    let mut noise = 0.0f64;
    let demand: Vec<f64> = demand_times
        .iter()
        .map(|t| {
            let e: f64 = rng.sample(StandardNormal);
            noise = 0.9 * noise + (1.0 - 0.81f64).sqrt() * e;
            let h = t.hour() as f64;
            let daily = -(2.0 * std::f64::consts::PI * (h - 4.0) / 24.0).cos()
                + 0.3 * (4.0 * std::f64::consts::PI * (h - 18.0) / 24.0).cos();
            let wind_term = wind_times
                .binary_search(t)
                .map(|k| driver[k])
                .unwrap_or(0.0);
            let d = 32_000.0 + 6_000.0 * season(t) + 5_000.0 * daily + 800.0 * wind_term + 1_200.0 * noise;
            d.round().max(1.0)
        })
        .collect();

    Ok(SyntheticData {
        w1: TimeSeries::new("w1", wind_times.clone(), w1)?,
        w2: TimeSeries::new("w2", wind_times, w2)?,
        demand: TimeSeries::new("demand", demand_times, demand)?,
    })
}

/// Writes the three series as CSV files (`wind_site1.csv`, `wind_site2.csv`,
/// `demand.csv`) and blanks a small fraction of cells and repeats a few rows,
/// so that the files look like real station exports.
pub fn write_fixture(data: &SyntheticData, dir: &Path, seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (series, file, column) in [
        (&data.w1, "wind_site1.csv", "wind_speed"),
        (&data.w2, "wind_site2.csv", "wind_speed"),
        (&data.demand, "demand.csv", "demand_mw"),
    ] {
        let path = dir.join(file);
        let mut out = format!("timestamp,{column}\n");
        for (t, v) in series.timestamps().iter().zip(series.values()) {
            let stamp = t.format("%Y-%m-%dT%H:%M:%S");
            let roll: f64 = rng.random();
            if roll < 0.004 {
                out.push_str(&format!("{stamp},\n"));
                continue;
            }
            out.push_str(&format!("{stamp},{v}\n"));
            if roll > 0.9995 {
                out.push_str(&format!("{stamp},{v}\n"));
            }
        }
        std::fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
