//! Profit surfaces of the line investor (leader) and the local generators
//! (follower), and the leader-follower equilibrium found by backward induction.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{EnergyTables, StrategyGrid};

/// Prices and costs entering both profit functions.
///
/// `p_g`, `p_t`, `c_g1` and `c_g2` are per MWh; `c_t` is the total cost of the
/// line (investment plus maintenance).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Generation tariff.
    pub p_g: f64,
    /// Transmission fee paid by the follower per delivered MWh.
    pub p_t: f64,
    pub c_g1: f64,
    pub c_g2: f64,
    pub c_t: f64,
}

impl CostParams {
    pub const DEFAULT_TARIFF: f64 = 74.3;

    pub fn validate(&self) -> Result<()> {
        if !(self.p_g > 0.0 && self.p_g.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tariff p_g must be positive, got {}",
                self.p_g
            )));
        }
        for (name, v) in [
            ("p_t", self.p_t),
            ("c_g1", self.c_g1),
            ("c_g2", self.c_g2),
            ("c_t", self.c_t),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Leader and follower profit at every capacity pair, row-major by
/// (P_N1 index, P_N2 index).
#[derive(Debug, Clone, PartialEq)]
pub struct ProfitSurfaces {
    rows: usize,
    cols: usize,
    pi1: Vec<f64>,
    pi2: Vec<f64>,
}

impl ProfitSurfaces {
    pub fn new(rows: usize, cols: usize, pi1: Vec<f64>, pi2: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty("profit surface"));
        }
        if pi1.len() != rows * cols || pi2.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {rows}x{cols} surfaces, got {} and {} entries",
                pi1.len(),
                pi2.len()
            )));
        }
        if pi1.iter().chain(&pi2).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("profit surface has non-finite entries".into()));
        }
        Ok(Self {
            rows,
            cols,
            pi1,
            pi2,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pi1(&self, i: usize, j: usize) -> f64 {
        self.pi1[i * self.cols + j]
    }

    pub fn pi2(&self, i: usize, j: usize) -> f64 {
        self.pi2[i * self.cols + j]
    }
}

/// Evaluates both profit functions at every cell of the energy tables.
pub fn profit_surfaces(tables: &EnergyTables, costs: &CostParams) -> Result<ProfitSurfaces> {
    costs.validate()?;
    let n = tables.size();
    let CostParams {
        p_g,
        p_t,
        c_g1,
        c_g2,
        c_t,
    } = *costs;
    let mut pi1 = Vec::with_capacity(n * n);
    let mut pi2 = Vec::with_capacity(n * n);
    for i in 0..n {
        let e_g1 = tables.e_g1[i];
        for j in 0..n {
            let e_g2 = tables.e_g2[j];
            let e_c1 = tables.e_c1_at(i, j);
            let e_c2 = tables.e_c2_at(i, j);
            pi1.push((e_g1 - e_c1) * p_g - e_g1 * c_g1 + (e_g2 - e_c2) * p_t - c_t);
            pi2.push((e_g2 - e_c2) * (p_g - p_t) - e_g2 * c_g2);
        }
    }
    ProfitSurfaces::new(n, n, pi1, pi2)
}

/// Follower's profit-maximising reply to one leader capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestResponse {
    pub index: usize,
    pub capacity: f64,
    pub profit: f64,
}

/// Argmax of `pi2` along each row; ties go to the smallest capacity.
pub fn follower_best_response(surfaces: &ProfitSurfaces, grid: &StrategyGrid) -> Result<Vec<BestResponse>> {
    check_grid(surfaces, grid)?;
    Ok((0..surfaces.rows)
        .map(|i| {
            let mut best = 0;
            for j in 1..surfaces.cols {
                if surfaces.pi2(i, j) > surfaces.pi2(i, best) {
                    best = j;
                }
            }
            BestResponse {
                index: best,
                capacity: grid.values()[best],
                profit: surfaces.pi2(i, best),
            }
        })
        .collect())
}

fn check_grid(surfaces: &ProfitSurfaces, grid: &StrategyGrid) -> Result<()> {
    if surfaces.rows != grid.len() || surfaces.cols != grid.len() {
        return Err(Error::Dimension(format!(
            "surfaces are {}x{} but the grid has {} values",
            surfaces.rows,
            surfaces.cols,
            grid.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    pub i_star: usize,
    pub j_star: usize,
    pub p_n1_star: f64,
    pub p_n2_star: f64,
    pub pi1_star: f64,
    pub pi2_star: f64,
    /// Follower reply for every leader capacity, indexed like the grid.
    pub best_response: Vec<BestResponse>,
}

/// Leader picks the capacity maximising its profit along the follower's
/// best-response curve; ties go to the smallest capacity.
pub fn stackelberg(surfaces: &ProfitSurfaces, grid: &StrategyGrid) -> Result<Equilibrium> {
    let best_response = follower_best_response(surfaces, grid)?;
    let leader_profit = |i: usize| surfaces.pi1(i, best_response[i].index);
    let mut i_star = 0;
    for i in 1..surfaces.rows {
        if leader_profit(i) > leader_profit(i_star) {
            i_star = i;
        }
    }
    let j_star = best_response[i_star].index;
    Ok(Equilibrium {
        i_star,
        j_star,
        p_n1_star: grid.values()[i_star],
        p_n2_star: grid.values()[j_star],
        pi1_star: surfaces.pi1(i_star, j_star),
        pi2_star: surfaces.pi2(i_star, j_star),
        best_response,
    })
}

impl Equilibrium {
    /// Best-response curve as CSV, followed by the equilibrium row marked `*`.
    pub fn to_csv(&self, surfaces: &ProfitSurfaces, grid: &StrategyGrid) -> String {
        let mut out = String::from("marker,p_n1,br_p_n2,pi1,pi2\n");
        for (i, br) in self.best_response.iter().enumerate() {
            let _ = writeln!(
                out,
                ",{},{},{},{}",
                grid.values()[i],
                br.capacity,
                surfaces.pi1(i, br.index),
                br.profit
            );
        }
        let _ = writeln!(
            out,
            "*,{},{},{},{}",
            self.p_n1_star, self.p_n2_star, self.pi1_star, self.pi2_star
        );
        out
    }

    pub fn write_csv(&self, surfaces: &ProfitSurfaces, grid: &StrategyGrid, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv(surfaces, grid)).map_err(|e| Error::io(path, e))
    }
}
