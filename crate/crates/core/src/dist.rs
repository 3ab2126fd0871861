//! Binned empirical distributions built from historic records.
//!
//! Tables keep every raw observation, so conditional draws reproduce observed
//! values rather than bin midpoints. Sparse bins are folded into neighbours
//! along each axis until every retained bin carries at least `min_count`
//! observations, and the nonempty cells are then checked for connectivity.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::JointSeries;

/// Uniform binning of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    width: f64,
    origin: f64,
    max_edge: f64,
}

impl BinSpec {
    pub fn new(width: f64, origin: f64, max_edge: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bin width must be positive, got {width}"
            )));
        }
        if !(max_edge > origin) || !origin.is_finite() || !max_edge.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "bin range [{origin}, {max_edge}] is empty"
            )));
        }
        Ok(Self {
            width,
            origin,
            max_edge,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn max_edge(&self) -> f64 {
        self.max_edge
    }

    pub fn count(&self) -> usize {
        // the small offset keeps e.g. 0.7 / 0.1 from rounding up to 8 bins
        (((self.max_edge - self.origin) / self.width) - 1e-9).ceil().max(1.0) as usize
    }

    /// Bin holding `value`; the upper edge belongs to the last bin.
    pub fn index_of(&self, value: f64) -> Option<usize> {
        if !(value >= self.origin && value <= self.max_edge) {
            return None;
        }
        let idx = ((value - self.origin) / self.width).floor() as usize;
        Some(idx.min(self.count() - 1))
    }

    fn checked_index(&self, value: f64, what: &'static str) -> Result<usize> {
        self.index_of(value).ok_or(Error::OutOfRange {
            what,
            value,
            origin: self.origin,
            max_edge: self.max_edge,
        })
    }

    pub fn lower_edge(&self, bin: usize) -> f64 {
        self.origin + bin as f64 * self.width
    }
}

/// Names one of the two wind axes of a [`JointTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    W1,
    W2,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::W1 => Axis::W2,
            Axis::W2 => Axis::W1,
        }
    }
}

/// Finite distribution over observed values.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    /// Collapses a multiset of observations into distinct values weighted by multiplicity.
    pub fn from_members(members: &[f64]) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty("distribution members"));
        }
        let mut sorted = members.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut support: Vec<f64> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for v in sorted {
            match support.last() {
                Some(last) if *last == v => *counts.last_mut().unwrap() += 1,
                _ => {
                    support.push(v);
                    counts.push(1);
                }
            }
        }
        let total = members.len() as f64;
        let weights = counts.into_iter().map(|c| c as f64 / total).collect();
        Ok(Self { support, weights })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_of(&self, value: f64) -> f64 {
        self.support
            .iter()
            .position(|v| *v == value)
            .map_or(0.0, |i| self.weights[i])
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

/// Groups adjacent bins so that every group holds at least `min_count`.
///
/// Returns the group index of every input bin. The sparsest group is merged
/// first, into its more populated neighbour (the lower one on a tie); groups at
/// either end can only fold inward.
pub fn merge_axis(marginal: &[u64], min_count: u64) -> Result<Vec<usize>> {
    if min_count == 0 {
        return Err(Error::InvalidParameter("min_count must be at least 1".into()));
    }
    let total: u64 = marginal.iter().sum();
    if total < min_count {
        return Err(Error::InvalidParameter(format!(
            "min_count {min_count} exceeds the total count {total}"
        )));
    }
    // (first bin, last bin, count)
    let mut groups: Vec<(usize, usize, u64)> =
        marginal.iter().enumerate().map(|(i, &c)| (i, i, c)).collect();
    while groups.len() > 1 {
        let Some((g, _)) = groups
            .iter()
            .enumerate()
            .filter(|(_, grp)| grp.2 < min_count)
            .min_by_key(|(i, grp)| (grp.2, *i))
        else {
            break;
        };
        let target = if g == 0 {
            1
        } else if g == groups.len() - 1 {
            g - 1
        } else if groups[g + 1].2 > groups[g - 1].2 {
            g + 1
        } else {
            g - 1
        };
        let (lo, hi) = (g.min(target), g.max(target));
        groups[lo] = (groups[lo].0, groups[hi].1, groups[lo].2 + groups[hi].2);
        groups.remove(hi);
    }
    let mut map = vec![0; marginal.len()];
    for (gi, (first, last, _)) in groups.iter().enumerate() {
        map[*first..=*last].fill(gi);
    }
    Ok(map)
}

fn retained_count(map: &[usize]) -> usize {
    map.last().map_or(0, |&m| m + 1)
}

/// Joint histogram of the two wind speeds with raw members kept per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    spec1: BinSpec,
    spec2: BinSpec,
    map1: Vec<usize>,
    map2: Vec<usize>,
    n1: usize,
    n2: usize,
    counts: Vec<u64>,
    points: Vec<[f64; 2]>,
    raw_bins: Vec<[usize; 2]>,
}

impl JointTable {
    fn from_parts(
        spec1: BinSpec,
        spec2: BinSpec,
        map1: Vec<usize>,
        map2: Vec<usize>,
        points: Vec<[f64; 2]>,
        raw_bins: Vec<[usize; 2]>,
    ) -> Self {
        let n1 = retained_count(&map1);
        let n2 = retained_count(&map2);
        let mut counts = vec![0u64; n1 * n2];
        for b in &raw_bins {
            counts[map1[b[0]] * n2 + map2[b[1]]] += 1;
        }
        Self {
            spec1,
            spec2,
            map1,
            map2,
            n1,
            n2,
            counts,
            points,
            raw_bins,
        }
    }

    pub fn spec(&self, axis: Axis) -> &BinSpec {
        match axis {
            Axis::W1 => &self.spec1,
            Axis::W2 => &self.spec2,
        }
    }

    /// Original bin to retained bin along `axis`.
    pub fn merged_map(&self, axis: Axis) -> &[usize] {
        match axis {
            Axis::W1 => &self.map1,
            Axis::W2 => &self.map2,
        }
    }

    /// Number of retained bins along `axis`.
    pub fn bins(&self, axis: Axis) -> usize {
        match axis {
            Axis::W1 => self.n1,
            Axis::W2 => self.n2,
        }
    }

    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.n2 + j]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Raw `(w1, w2)` observations in source order.
    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn marginal(&self, axis: Axis) -> Vec<u64> {
        let mut out = vec![0u64; self.bins(axis)];
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                let c = self.count(i, j);
                match axis {
                    Axis::W1 => out[i] += c,
                    Axis::W2 => out[j] += c,
                }
            }
        }
        out
    }

    /// Retained bin along `axis` for a raw value.
    pub fn bin_of(&self, axis: Axis, value: f64) -> Result<usize> {
        let (spec, what) = match axis {
            Axis::W1 => (&self.spec1, "w1"),
            Axis::W2 => (&self.spec2, "w2"),
        };
        let raw = spec.checked_index(value, what)?;
        Ok(self.merged_map(axis)[raw])
    }

    /// Raw values of the other variable among records whose `given` variable
    /// falls in retained bin `bin`, in source order.
    pub fn slice_members(&self, given: Axis, bin: usize) -> Vec<f64> {
        let (g, o) = match given {
            Axis::W1 => (0, 1),
            Axis::W2 => (1, 0),
        };
        let map = self.merged_map(given);
        self.points
            .iter()
            .zip(&self.raw_bins)
            .filter(|(_, b)| map[b[g]] == bin)
            .map(|(p, _)| p[o])
            .collect()
    }

    /// Distribution of the other variable given that `given` lies in retained bin `bin`.
    pub fn conditional_slice(&self, given: Axis, bin: usize) -> Result<DiscreteDistribution> {
        if bin >= self.bins(given) {
            return Err(Error::InvalidParameter(format!(
                "bin {bin} out of range for {given:?} ({} retained bins)",
                self.bins(given)
            )));
        }
        let members = self.slice_members(given, bin);
        if members.is_empty() {
            return Err(Error::Ergodicity(format!(
                "conditional slice {given:?} bin {bin} is empty"
            )));
        }
        DiscreteDistribution::from_members(&members)
    }

    /// Folds sparse bins on both axes; see [`merge_axis`].
    pub fn merge_sparse_bins(&self, min_count: u64) -> Result<JointTable> {
        let g1 = merge_axis(&self.marginal(Axis::W1), min_count)?;
        let g2 = merge_axis(&self.marginal(Axis::W2), min_count)?;
        let map1 = self.map1.iter().map(|&m| g1[m]).collect();
        let map2 = self.map2.iter().map(|&m| g2[m]).collect();
        Ok(Self::from_parts(
            self.spec1,
            self.spec2,
            map1,
            map2,
            self.points.clone(),
            self.raw_bins.clone(),
        ))
    }

    /// Number of connected components among nonempty cells, where two cells are
    /// linked when they share a row or a column.
    pub fn components(&self) -> usize {
        let mut dsu = DisjointSet::new(self.n1 + self.n2);
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                if self.count(i, j) > 0 {
                    dsu.union(i, self.n1 + j);
                }
            }
        }
        let m1 = self.marginal(Axis::W1);
        let m2 = self.marginal(Axis::W2);
        let mut roots: Vec<usize> = (0..self.n1)
            .filter(|&i| m1[i] > 0)
            .chain((0..self.n2).filter(|&j| m2[j] > 0).map(|j| self.n1 + j))
            .map(|node| dsu.find(node))
            .collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }

    pub fn check_connectivity(&self) -> Result<()> {
        match self.components() {
            1 => Ok(()),
            k => Err(Error::Ergodicity(format!(
                "joint wind table splits into {k} disconnected groups of cells"
            ))),
        }
    }

    /// Writes the nonzero cells as `bin_i,bin_j,count`.
    pub fn write_counts_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("bin_i,bin_j,count\n");
        for i in 0..self.n1 {
            for j in 0..self.n2 {
                let c = self.count(i, j);
                if c > 0 {
                    out.push_str(&format!("{i},{j},{c}\n"));
                }
            }
        }
        write_file(path, &out)
    }

    /// Writes `axis,original_bin,merged_bin` rows for both axes.
    pub fn write_merged_map_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("axis,original_bin,merged_bin\n");
        for (name, map) in [("w1", &self.map1), ("w2", &self.map2)] {
            for (orig, merged) in map.iter().enumerate() {
                out.push_str(&format!("{name},{orig},{merged}\n"));
            }
        }
        write_file(path, &out)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| Error::io(path, e))
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Histograms `(w1, w2)` over the two bin specs.
pub fn build_joint_wind_table(
    series: &JointSeries,
    spec1: BinSpec,
    spec2: BinSpec,
) -> Result<JointTable> {
    if series.is_empty() {
        return Err(Error::Empty("joint series"));
    }
    let mut points = Vec::with_capacity(series.len());
    let mut raw_bins = Vec::with_capacity(series.len());
    for r in series.records() {
        let i = spec1.checked_index(r.w1, "w1")?;
        let j = spec2.checked_index(r.w2, "w2")?;
        points.push([r.w1, r.w2]);
        raw_bins.push([i, j]);
    }
    let map1 = (0..spec1.count()).collect();
    let map2 = (0..spec2.count()).collect();
    Ok(JointTable::from_parts(
        spec1, spec2, map1, map2, points, raw_bins,
    ))
}

/// Demand observations grouped by the bin of mean wind speed `(w1 + w2) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandConditional {
    wind_spec: BinSpec,
    demand_spec: BinSpec,
    row_map: Vec<usize>,
    rows: usize,
    counts: Vec<u64>,
    members: Vec<Vec<f64>>,
    // (raw mean-wind bin, demand bin, demand) per record
    raw: Vec<(usize, usize, f64)>,
}

impl DemandConditional {
    fn from_parts(
        wind_spec: BinSpec,
        demand_spec: BinSpec,
        row_map: Vec<usize>,
        raw: Vec<(usize, usize, f64)>,
    ) -> Self {
        let rows = retained_count(&row_map);
        let cols = demand_spec.count();
        let mut counts = vec![0u64; rows * cols];
        let mut members = vec![Vec::new(); rows];
        for &(r, d, v) in &raw {
            let row = row_map[r];
            counts[row * cols + d] += 1;
            members[row].push(v);
        }
        Self {
            wind_spec,
            demand_spec,
            row_map,
            rows,
            counts,
            members,
            raw,
        }
    }

    pub fn wind_spec(&self) -> &BinSpec {
        &self.wind_spec
    }

    pub fn demand_spec(&self) -> &BinSpec {
        &self.demand_spec
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn row_map(&self) -> &[usize] {
        &self.row_map
    }

    pub fn count(&self, row: usize, demand_bin: usize) -> u64 {
        self.counts[row * self.demand_spec.count() + demand_bin]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_total(&self, row: usize) -> u64 {
        self.members[row].len() as u64
    }

    /// Raw demand values of a retained row.
    pub fn row_members(&self, row: usize) -> &[f64] {
        &self.members[row]
    }

    /// Retained row for a mean wind speed.
    pub fn row_of(&self, mean_wind: f64) -> Result<usize> {
        let raw = self.wind_spec.checked_index(mean_wind, "mean wind")?;
        Ok(self.row_map[raw])
    }

    /// Demand distribution given mean wind speed.
    pub fn conditional(&self, mean_wind: f64) -> Result<DiscreteDistribution> {
        let row = self.row_of(mean_wind)?;
        if self.members[row].is_empty() {
            return Err(Error::Ergodicity(format!(
                "no demand observations for mean wind {mean_wind}"
            )));
        }
        DiscreteDistribution::from_members(&self.members[row])
    }

    /// Folds sparse mean-wind rows into neighbours, as [`JointTable::merge_sparse_bins`] does.
    pub fn merge_sparse_rows(&self, min_count: u64) -> Result<DemandConditional> {
        let marginal: Vec<u64> = (0..self.rows).map(|r| self.row_total(r)).collect();
        let groups = merge_axis(&marginal, min_count)?;
        let row_map = self.row_map.iter().map(|&m| groups[m]).collect();
        Ok(Self::from_parts(
            self.wind_spec,
            self.demand_spec,
            row_map,
            self.raw.clone(),
        ))
    }

    /// Writes the nonzero cells as `wind_bin,demand_bin,count`.
    pub fn write_counts_csv(&self, path: &Path) -> Result<()> {
        let cols = self.demand_spec.count();
        let mut out = String::from("wind_bin,demand_bin,count\n");
        for r in 0..self.rows {
            for d in 0..cols {
                let c = self.count(r, d);
                if c > 0 {
                    out.push_str(&format!("{r},{d},{c}\n"));
                }
            }
        }
        write_file(path, &out)
    }
}

pub fn build_demand_conditional(
    series: &JointSeries,
    wind_spec: BinSpec,
    demand_spec: BinSpec,
) -> Result<DemandConditional> {
    if series.is_empty() {
        return Err(Error::Empty("joint series"));
    }
    let raw = series
        .records()
        .iter()
        .map(|r| {
            let row = wind_spec.checked_index(0.5 * (r.w1 + r.w2), "mean wind")?;
            let d = demand_spec.checked_index(r.demand, "demand")?;
            Ok((row, d, r.demand))
        })
        .collect::<Result<Vec<_>>>()?;
    let row_map = (0..wind_spec.count()).collect();
    Ok(DemandConditional::from_parts(
        wind_spec,
        demand_spec,
        row_map,
        raw,
    ))
}
