//! Wind-to-power conversion and aggregate generation/curtailment tables.

use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::Realisation;

/// Logistic power curve `1 / (1 + exp(-alpha (w - beta)))`, output per unit of rated capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    /// Steepness, per m/s.
    pub alpha: f64,
    /// Midpoint wind speed, m/s.
    pub beta: f64,
}

const E82_CSV: &str = include_str!("../data/e82_power_curve.csv");

impl PowerCurve {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power curve needs alpha > 0 and beta > 0, got ({alpha}, {beta})"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Published Enercon E-82 (2.05 MW) power curve as `(wind m/s, per-unit output)`.
    pub fn e82_points() -> Vec<(f64, f64)> {
        E82_CSV
            .lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let cols: Vec<&str> = l.split(',').collect();
                let w: f64 = cols[0].parse().expect("e82 fixture wind column");
                let kw: f64 = cols[1].parse().expect("e82 fixture power column");
                (w, kw / 2050.0)
            })
            .collect()
    }

    /// Sigmoid fitted to the E-82 curve.
    pub fn e82_default() -> PowerCurve {
        static CURVE: OnceLock<PowerCurve> = OnceLock::new();
        *CURVE.get_or_init(|| {
            fit_sigmoid(&Self::e82_points())
                .expect("e82 fixture is a valid curve")
                .curve
        })
    }

    pub fn per_unit_output(&self, wind: f64) -> f64 {
        per_unit_output(wind, self)
    }
}

pub fn per_unit_output(wind: f64, curve: &PowerCurve) -> f64 {
    1.0 / (1.0 + (-curve.alpha * (wind - curve.beta)).exp())
}

/// Reads `(wind, per-unit output)` points from a CSV file with `wind_ms` and
/// `per_unit` columns.
pub fn read_curve_points(path: &Path) -> Result<Vec<(f64, f64)>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
            available: headers.iter().collect::<Vec<_>>().join(", "),
        })
    };
    let (w_col, y_col) = (find("wind_ms")?, find("per_unit")?);
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let parse = |col: usize| -> Result<f64> {
            let raw = record.get(col).unwrap_or("");
            raw.parse().map_err(|_| {
                Error::InvalidParameter(format!(
                    "{}: row {}: `{raw}` is not a number",
                    path.display(),
                    row + 2
                ))
            })
        };
        points.push((parse(w_col)?, parse(y_col)?));
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmoidFit {
    pub curve: PowerCurve,
    /// Sum of squared residuals at the optimum.
    pub sse: f64,
    pub rms: f64,
}

fn sse(points: &[(f64, f64)], alpha: f64, beta: f64) -> f64 {
    points
        .iter()
        .map(|&(w, y)| {
            let r = 1.0 / (1.0 + (-alpha * (w - beta)).exp()) - y;
            r * r
        })
        .sum()
}

const ALPHA_MIN: f64 = 1e-3;
const ALPHA_MAX: f64 = 20.0;

/// Least-squares fit of `(alpha, beta)` by a coarse grid followed by
/// repeatedly shrinking a local grid around the best point.
pub fn fit_sigmoid(points: &[(f64, f64)]) -> Result<SigmoidFit> {
    if points.len() < 3 {
        return Err(Error::Degenerate(format!(
            "need at least 3 points to fit a power curve, got {}",
            points.len()
        )));
    }
    if let Some(&(w, y)) = points
        .iter()
        .find(|(w, y)| !w.is_finite() || !(0.0..=1.0).contains(y))
    {
        return Err(Error::InvalidParameter(format!(
            "point ({w}, {y}) is not a per-unit output in [0, 1]"
        )));
    }
    let first = points[0].1;
    if points.iter().all(|p| p.1 == first) {
        return Err(Error::Degenerate(
            "all outputs are equal; the curve has no midpoint".into(),
        ));
    }

    let w_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let w_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let beta_lo = w_min.max(1e-6);
    let beta_hi = w_max.max(beta_lo + 1e-6);

    // coarse pass: alpha log-spaced, beta linear
    const COARSE: usize = 120;
    let mut best = (f64::INFINITY, 1.0, 0.5 * (beta_lo + beta_hi));
    for a in 0..=COARSE {
        let alpha = ALPHA_MIN * (ALPHA_MAX / ALPHA_MIN).powf(a as f64 / COARSE as f64);
        for b in 0..=COARSE {
            let beta = beta_lo + (beta_hi - beta_lo) * b as f64 / COARSE as f64;
            let e = sse(points, alpha, beta);
            if e < best.0 {
                best = (e, alpha, beta);
            }
        }
    }

    // local refinement
    const LOCAL: i32 = 10;
    let mut h_alpha = best.1 * 0.25;
    let mut h_beta = (beta_hi - beta_lo) / COARSE as f64 * 2.0;
    for _ in 0..200 {
        let (_, ca, cb) = best;
        for a in -LOCAL..=LOCAL {
            let alpha = (ca + h_alpha * a as f64 / LOCAL as f64).clamp(ALPHA_MIN, ALPHA_MAX);
            for b in -LOCAL..=LOCAL {
                let beta = (cb + h_beta * b as f64 / LOCAL as f64).clamp(beta_lo, beta_hi);
                let e = sse(points, alpha, beta);
                if e < best.0 {
                    best = (e, alpha, beta);
                }
            }
        }
        if (best.1, best.2) == (ca, cb) {
            h_alpha *= 0.5;
            h_beta *= 0.5;
        }
        if h_alpha < 1e-12 && h_beta < 1e-12 {
            break;
        }
    }

    let (sse, alpha, beta) = best;
    Ok(SigmoidFit {
        curve: PowerCurve::new(alpha, beta)?,
        sse,
        rms: (sse / points.len() as f64).sqrt(),
    })
}

/// Curtailed power of each generator at one timestep.
///
/// Curtailment is the generation in excess of demand, shared in proportion to
/// output. Returns `(0, 0)` when generation does not exceed demand.
pub fn curtailment_timestep(p_g1: f64, p_g2: f64, p_d: f64) -> (f64, f64) {
    let total = p_g1 + p_g2;
    let curtailed = total - p_d;
    if curtailed > 0.0 {
        (p_g1 * curtailed / total, p_g2 * curtailed / total)
    } else {
        (0.0, 0.0)
    }
}

/// Rated-capacity strategy space `0, step, 2 step, ..., p_n_max` (MW).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyGrid {
    step: f64,
    values: Vec<f64>,
}

impl StrategyGrid {
    pub fn new(p_n_max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || !(p_n_max >= 0.0 && p_n_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "strategy grid needs step > 0 and p_n_max >= 0, got step {step}, max {p_n_max}"
            )));
        }
        let k = (p_n_max / step).round();
        if ((k * step) - p_n_max).abs() > 1e-9 * p_n_max.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "p_n_max {p_n_max} is not a multiple of step {step}"
            )));
        }
        let values = (0..=k as usize).map(|i| i as f64 * step).collect();
        Ok(Self { step, values })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn p_n_max(&self) -> f64 {
        *self.values.last().expect("grid holds at least 0")
    }
}

/// Per-unit outputs and demand of one realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct PerUnitSeries {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub demand: Vec<f64>,
}

impl PerUnitSeries {
    pub fn from_realisation(realisation: &Realisation, curve: &PowerCurve) -> Self {
        let s = &realisation.samples;
        Self {
            x1: s.iter().map(|st| per_unit_output(st.w1, curve)).collect(),
            x2: s.iter().map(|st| per_unit_output(st.w2, curve)).collect(),
            demand: s.iter().map(|st| st.demand).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }
}

/// Generated and curtailed energy (MWh) over the strategy grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTables {
    grid: StrategyGrid,
    pub e_g1: Vec<f64>,
    pub e_g2: Vec<f64>,
    /// Row-major by (P_N1 index, P_N2 index).
    pub e_c1: Vec<f64>,
    pub e_c2: Vec<f64>,
    pub timestep_hours: f64,
}

impl EnergyTables {
    pub fn grid(&self) -> &StrategyGrid {
        &self.grid
    }

    pub fn size(&self) -> usize {
        self.grid.len()
    }

    pub fn e_c1_at(&self, i: usize, j: usize) -> f64 {
        self.e_c1[i * self.size() + j]
    }

    pub fn e_c2_at(&self, i: usize, j: usize) -> f64 {
        self.e_c2[i * self.size() + j]
    }

    /// FNV-1a over the bit patterns of every entry.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let all = self
            .e_g1
            .iter()
            .chain(&self.e_g2)
            .chain(&self.e_c1)
            .chain(&self.e_c2);
        for v in all {
            for byte in v.to_bits().to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }

    /// Writes `generation.csv` and `curtailment.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        let n = self.size();
        if n * n > 1_000_000 {
            log::warn!(
                "dumping {} curtailment cells; the file will be large",
                n * n
            );
        }
        let gen_path = dir.join("generation.csv");
        let mut out = String::from("k,p_n,e_g1,e_g2\n");
        for k in 0..n {
            out.push_str(&format!(
                "{k},{},{},{}\n",
                self.grid.values()[k],
                self.e_g1[k],
                self.e_g2[k]
            ));
        }
        std::fs::write(&gen_path, out).map_err(|e| Error::io(&gen_path, e))?;

        let path = dir.join("curtailment.csv");
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = std::io::BufWriter::new(file);
        writeln!(w, "i,j,e_c1,e_c2").map_err(|e| Error::io(&path, e))?;
        for i in 0..n {
            for j in 0..n {
                writeln!(w, "{i},{j},{},{}", self.e_c1_at(i, j), self.e_c2_at(i, j))
                    .map_err(|e| Error::io(&path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))
    }
}

/// Aggregates generation and curtailment of one realisation over every
/// capacity pair of `grid`, with one-hour timesteps.
pub fn build_energy_tables(
    realisation: &Realisation,
    curve: &PowerCurve,
    grid: &StrategyGrid,
) -> Result<EnergyTables> {
    if realisation.is_empty() {
        return Err(Error::Empty("realisation"));
    }
    energy_tables_from_series(&PerUnitSeries::from_realisation(realisation, curve), grid, 1.0)
}

/// Smallest index in `0..n` where a monotone predicate turns true, or `n`.
fn first_true(n: usize, pred: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Core accumulation behind [`build_energy_tables`].
///
/// Every cell is summed over timesteps in order, so the result is the same as a
/// plain per-timestep double loop regardless of how rows are spread over
/// threads. Timesteps where a cell sees no curtailment are skipped; adding
/// zero would not change the sum.
pub fn energy_tables_from_series(
    series: &PerUnitSeries,
    grid: &StrategyGrid,
    timestep_hours: f64,
) -> Result<EnergyTables> {
    if series.is_empty() {
        return Err(Error::Empty("per-unit series"));
    }
    if series.x2.len() != series.len() || series.demand.len() != series.len() {
        return Err(Error::Dimension("per-unit series lengths differ".into()));
    }
    if !(timestep_hours > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "timestep must be positive, got {timestep_hours}"
        )));
    }
    let values = grid.values();
    let n = values.len();

    let generation = |x: &[f64]| -> Vec<f64> {
        values
            .iter()
            .map(|&p| {
                let mut acc = 0.0;
                for &xt in x {
                    acc += xt * p * timestep_hours;
                }
                acc
            })
            .collect()
    };
    let e_g1 = generation(&series.x1);
    let e_g2 = generation(&series.x2);

    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p1 = values[i];
            let mut c1 = vec![0.0; n];
            let mut c2 = vec![0.0; n];
            for t in 0..series.len() {
                let g1 = series.x1[t] * p1;
                let x2 = series.x2[t];
                let d = series.demand[t];
                // first column where this timestep curtails; the test is monotone in j
                let curtails = |j: usize| (g1 + x2 * values[j]) - d > 0.0;
                let first = first_true(n, curtails);
                for j in first..n {
                    let (pc1, pc2) = curtailment_timestep(g1, x2 * values[j], d);
                    c1[j] += pc1 * timestep_hours;
                    c2[j] += pc2 * timestep_hours;
                }
            }
            (c1, c2)
        })
        .collect();

    let mut e_c1 = Vec::with_capacity(n * n);
    let mut e_c2 = Vec::with_capacity(n * n);
    for (c1, c2) in rows {
        e_c1.extend(c1);
        e_c2.extend(c2);
    }
    Ok(EnergyTables {
        grid: grid.clone(),
        e_g1,
        e_g2,
        e_c1,
        e_c2,
        timestep_hours,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::ChainState;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn curve() -> PowerCurve {
        PowerCurve::new(0.8, 9.0).unwrap()
    }

    #[test]
    fn sigmoid_closed_forms() {
        let c = curve();
        assert!((per_unit_output(9.0, &c) - 0.5).abs() < 1e-12);
        let far = per_unit_output(9.0 + 10.0 / 0.8, &c);
        assert!((far - 1.0 / (1.0 + (-10f64).exp())).abs() < 1e-15);
        assert!((far - 0.9999546).abs() < 1e-7);
        let mut prev = 0.0;
        for k in 0..300 {
            let y = per_unit_output(k as f64 * 0.1, &c);
            assert!(y > prev && y < 1.0);
            prev = y;
        }
    }

    #[test]
    fn fit_recovers_exact_sigmoid() {
        let pts: Vec<_> = (0..=50)
            .map(|k| {
                let w = k as f64 * 0.5;
                (w, per_unit_output(w, &curve()))
            })
            .collect();
        let fit = fit_sigmoid(&pts).unwrap();
        assert!((fit.curve.alpha - 0.8).abs() < 1e-3, "{fit:?}");
        assert!((fit.curve.beta - 9.0).abs() < 1e-3, "{fit:?}");
        assert!(fit.sse < 1e-10);
    }

    #[test]
    fn fit_step_data_matches_brute_force_beta() {
        let pts: Vec<_> = (0..=40)
            .map(|k| {
                let w = k as f64 * 0.5;
                (w, if w < 8.0 { 0.0 } else { 1.0 })
            })
            .collect();
        let fit = fit_sigmoid(&pts).unwrap();
        // independent oracle: exhaustive (alpha, beta) grid
        let mut best = (f64::INFINITY, 0.0);
        for a in 1..=200 {
            let alpha = a as f64 * 0.1;
            for b in 0..=2000 {
                let beta = b as f64 * 0.01;
                let e: f64 = pts
                    .iter()
                    .map(|&(w, y)| (1.0 / (1.0 + (-alpha * (w - beta)).exp()) - y).powi(2))
                    .sum();
                if e < best.0 {
                    best = (e, beta);
                }
            }
        }
        assert!((fit.curve.beta - best.1).abs() <= 0.05, "{} vs {}", fit.curve.beta, best.1);
        assert!((fit.curve.beta - 7.75).abs() <= 0.05);
    }

    #[test]
    fn fit_noisy_points_locates_midpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let pts: Vec<_> = (0..=50)
                .map(|k| {
                    let w = k as f64 * 0.5;
                    let y = per_unit_output(w, &curve()) + rng.random_range(-0.01..0.01);
                    (w, y.clamp(0.0, 1.0))
                })
                .collect();
            let fit = fit_sigmoid(&pts).unwrap();
            worst = worst.max((fit.curve.beta - 9.0).abs());
        }
        assert!(worst < 0.2, "worst beta error {worst}");
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(matches!(
            fit_sigmoid(&[(1.0, 0.5), (2.0, 0.5), (3.0, 0.5)]),
            Err(Error::Degenerate(_))
        ));
        assert!(fit_sigmoid(&[(1.0, 0.1), (2.0, 0.9)]).is_err());
        assert!(fit_sigmoid(&[(1.0, 0.1), (2.0, 1.5), (3.0, 0.2)]).is_err());
    }

    #[test]
    fn curve_points_read_from_fixture() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/e82_power_curve.csv");
        let pts = read_curve_points(&path).unwrap();
        assert_eq!(pts.len(), 26);
        for ((w, y), (w0, y0)) in pts.iter().zip(PowerCurve::e82_points()) {
            assert_eq!(*w, w0);
            assert!((y - y0).abs() < 1e-6);
        }
        assert!(matches!(
            read_curve_points(Path::new("/nonexistent.csv")),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn e82_fit_residual_is_small() {
        let pts = PowerCurve::e82_points();
        assert_eq!(pts.len(), 26);
        let fit = fit_sigmoid(&pts).unwrap();
        assert_eq!(fit.curve, PowerCurve::e82_default());
        assert!(fit.rms < 0.03, "{fit:?}");
        let (a, b) = (fit.curve.alpha, fit.curve.beta);
        assert!((0.5..1.5).contains(&a) && (8.0..10.0).contains(&b), "{fit:?}");
        // each published point within a few residual widths of the curve
        for (w, y) in pts {
            assert!((per_unit_output(w, &fit.curve) - y).abs() < 5.0 * fit.rms);
        }
    }

    #[test]
    fn curtailment_examples() {
        assert_eq!(curtailment_timestep(10.0, 10.0, 30.0), (0.0, 0.0));
        assert_eq!(curtailment_timestep(60.0, 40.0, 80.0), (12.0, 8.0));
        assert_eq!(curtailment_timestep(0.0, 0.0, 50.0), (0.0, 0.0));
        assert_eq!(curtailment_timestep(0.0, 0.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn grid_values() {
        let g = StrategyGrid::new(500.5, 0.5).unwrap();
        assert_eq!(g.len(), 1002);
        assert_eq!(g.values()[0], 0.0);
        assert_eq!(g.p_n_max(), 500.5);
        assert!(g.values().windows(2).all(|w| w[0] < w[1]));
        assert!(StrategyGrid::new(10.0, 3.0).is_err());
        assert!(StrategyGrid::new(10.0, 0.0).is_err());
        assert_eq!(StrategyGrid::new(0.0, 1.0).unwrap().values(), &[0.0]);
    }

    fn realisation(states: &[(f64, f64, f64)]) -> Realisation {
        Realisation {
            chain_index: 0,
            seed: 0,
            samples: states
                .iter()
                .map(|&(w1, w2, demand)| ChainState { w1, w2, demand })
                .collect(),
        }
    }

    fn random_realisation(len: usize, seed: u64) -> Realisation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states: Vec<_> = (0..len)
            .map(|_| {
                (
                    rng.random_range(0.0..25.0),
                    rng.random_range(0.0..25.0),
                    rng.random_range(20.0..150.0),
                )
            })
            .collect();
        realisation(&states)
    }

    #[test]
    fn zero_grid_gives_zero_tables() {
        let g = StrategyGrid::new(0.0, 1.0).unwrap();
        let t = build_energy_tables(&random_realisation(10, 1), &curve(), &g).unwrap();
        assert_eq!(t.e_g1, vec![0.0]);
        assert_eq!(t.e_g2, vec![0.0]);
        assert_eq!(t.e_c1, vec![0.0]);
        assert_eq!(t.e_c2, vec![0.0]);
    }

    #[test]
    fn small_case_matches_hand_loop() {
        let r = realisation(&[
            (9.0, 9.0, 10.0),
            (12.0, 6.0, 40.0),
            (3.0, 15.0, 25.0),
            (20.0, 20.0, 100.0),
            (0.0, 9.0, 0.0),
        ]);
        let g = StrategyGrid::new(100.0, 50.0).unwrap();
        let t = build_energy_tables(&r, &curve(), &g).unwrap();
        for (i, &p1) in g.values().iter().enumerate() {
            for (j, &p2) in g.values().iter().enumerate() {
                let (mut c1, mut c2) = (0.0, 0.0);
                for s in &r.samples {
                    let g1 = 1.0 / (1.0 + (-0.8 * (s.w1 - 9.0)).exp()) * p1;
                    let g2 = 1.0 / (1.0 + (-0.8 * (s.w2 - 9.0)).exp()) * p2;
                    let excess = g1 + g2 - s.demand;
                    if excess > 0.0 {
                        c1 += g1 * excess / (g1 + g2);
                        c2 += g2 * excess / (g1 + g2);
                    }
                }
                assert_eq!(t.e_c1_at(i, j), c1, "({i},{j})");
                assert_eq!(t.e_c2_at(i, j), c2, "({i},{j})");
            }
        }
        // (P_N1, P_N2) = (100, 0), first timestep: x1 = 0.5, so 50 MW against 10 MW demand
        assert!(t.e_c1_at(2, 0) >= 40.0);
    }

    #[test]
    fn generation_is_linear_in_capacity() {
        let g = StrategyGrid::new(40.0, 2.5).unwrap();
        let t = build_energy_tables(&random_realisation(200, 2), &curve(), &g).unwrap();
        for k in 0..=8 {
            assert_eq!(t.e_g1[2 * k], 2.0 * t.e_g1[k]);
            assert_eq!(t.e_g2[2 * k], 2.0 * t.e_g2[k]);
        }
    }

    #[test]
    fn table_invariants_hold() {
        let r = random_realisation(300, 3);
        let g = StrategyGrid::new(200.0, 10.0).unwrap();
        let t = build_energy_tables(&r, &curve(), &g).unwrap();
        let n = g.len();
        let pu = PerUnitSeries::from_realisation(&r, &curve());
        for i in 0..n {
            assert_eq!(t.e_c2_at(i, 0), 0.0);
            assert_eq!(t.e_c1_at(0, i), 0.0);
            for j in 0..n {
                let (c1, c2) = (t.e_c1_at(i, j), t.e_c2_at(i, j));
                assert!(c1 >= 0.0 && c2 >= 0.0);
                let tol = 1e-9 * (t.e_g1[i] + t.e_g2[j]).max(1.0);
                assert!(c1 + c2 <= t.e_g1[i] + t.e_g2[j] + tol);
                if i + 1 < n {
                    assert!(t.e_c1_at(i + 1, j) + tol >= c1);
                    assert!(t.e_c2_at(i + 1, j) + tol >= c2);
                }
                if j + 1 < n {
                    assert!(t.e_c1_at(i, j + 1) + tol >= c1);
                    assert!(t.e_c2_at(i, j + 1) + tol >= c2);
                }
                // delivered energy equals the demand-capped generation
                let (p1, p2) = (g.values()[i], g.values()[j]);
                let capped: f64 = (0..pu.len())
                    .map(|k| (pu.x1[k] * p1 + pu.x2[k] * p2).min(pu.demand[k]))
                    .sum();
                let delivered = (t.e_g1[i] - c1) + (t.e_g2[j] - c2);
                assert!((delivered - capped).abs() <= 1e-9 * capped.max(1.0));
            }
        }
    }

    #[test]
    fn rejects_empty_realisation() {
        let g = StrategyGrid::new(10.0, 5.0).unwrap();
        assert!(build_energy_tables(&realisation(&[]), &curve(), &g).is_err());
    }

    #[test]
    fn checksum_distinguishes_tables() {
        let g = StrategyGrid::new(20.0, 5.0).unwrap();
        let a = build_energy_tables(&random_realisation(50, 4), &curve(), &g).unwrap();
        let b = build_energy_tables(&random_realisation(50, 5), &curve(), &g).unwrap();
        assert_eq!(a.checksum(), a.clone().checksum());
        assert_ne!(a.checksum(), b.checksum());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn curtailment_split_is_proportional(g1 in 0.0f64..500.0, g2 in 0.0f64..500.0, d in 0.0f64..800.0) {
                let (c1, c2) = curtailment_timestep(g1, g2, d);
                let excess = (g1 + g2 - d).max(0.0);
                prop_assert!(c1 >= 0.0 && c2 >= 0.0);
                prop_assert!(c1 <= g1 * (1.0 + 1e-15) && c2 <= g2 * (1.0 + 1e-15));
                prop_assert!((c1 + c2 - excess).abs() <= 4.0 * f64::EPSILON * (g1 + g2).max(1.0));
                if g1 > 0.0 && g2 > 0.0 && excess > 0.0 {
                    prop_assert!((c1 / g1 - c2 / g2).abs() <= 1e-12);
                }
            }
        }
    }
}
