use std::collections::HashSet;

use chrono::NaiveDate;
use windgame_core::synth::{generate, write_fixture, SyntheticConfig};
use windgame_core::{
    align_series, build_demand_conditional, build_energy_tables, build_joint_wind_table,
    convergence_stats, curtailment_timestep, load_series_csv, normalize_demand, profit_surfaces,
    run_ensemble, stackelberg, Axis, BinSpec, ChainConfig, ColumnMap, CostParams, JointSeries,
    PowerCurve, SamplerTables, StrategyGrid,
};

fn one_year() -> SyntheticConfig {
    SyntheticConfig {
        wind_start: NaiveDate::from_ymd_opt(2014, 1, 1).unwrap(),
        wind_end: NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(),
        demand_start: NaiveDate::from_ymd_opt(2014, 3, 1).unwrap(),
        demand_end: NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(),
        seed: 99,
        ..SyntheticConfig::default()
    }
}

fn historic_from_files() -> JointSeries {
    let dir = tempfile::tempdir().unwrap();
    let data = generate(&one_year()).unwrap();
    write_fixture(&data, dir.path(), 7).unwrap();
    let wind = ColumnMap::new("timestamp", "wind_speed");
    let (w1, g1) = load_series_csv(&dir.path().join("wind_site1.csv"), &wind).unwrap();
    let (w2, _) = load_series_csv(&dir.path().join("wind_site2.csv"), &wind).unwrap();
    let (d, _) = load_series_csv(
        &dir.path().join("demand.csv"),
        &ColumnMap::new("timestamp", "demand_mw"),
    )
    .unwrap();
    // blanked cells are dropped and counted, duplicates collapse
    assert!(g1.missing_values > 0);
    assert_eq!(g1.rows_kept + g1.dropped(), g1.rows_read);
    assert!(w1.len() <= data.w1.len());

    let d = normalize_demand(&d, 108.1830).unwrap();
    let joint = align_series(&w1, &w2, &d).unwrap();
    assert!(joint.len() <= d.len());
    assert!(joint.records()[0].timestamp >= d.timestamps()[0]);
    joint
}

fn tables(historic: &JointSeries) -> SamplerTables {
    let wind = BinSpec::new(1.0, 0.0, 50.0).unwrap();
    let demand = BinSpec::new(5.0, 0.0, 1000.0).unwrap();
    let joint = build_joint_wind_table(historic, wind, wind)
        .unwrap()
        .merge_sparse_bins(10)
        .unwrap();
    let cond = build_demand_conditional(historic, wind, demand)
        .unwrap()
        .merge_sparse_rows(10)
        .unwrap();
    SamplerTables::new(joint, cond)
}

#[test]
fn files_to_equilibrium() {
    let historic = historic_from_files();
    let tables = tables(&historic);
    tables.check_ergodicity().unwrap();
    assert_eq!(tables.joint().total(), historic.len() as u64);
    for axis in [Axis::W1, Axis::W2] {
        assert!(tables.joint().marginal(axis).iter().all(|c| *c >= 10));
    }

    let config = ChainConfig::new(3000, 4, 0.2, 11).unwrap();
    let ensemble = run_ensemble(&config, &tables).unwrap();
    assert_eq!(ensemble.len(), 4);
    assert!(ensemble.iter().all(|r| r.len() == 2400));

    // every sampled value was observed
    let seen = |f: fn(&windgame_core::JointRecord) -> f64| -> HashSet<u64> {
        historic.records().iter().map(|r| f(r).to_bits()).collect()
    };
    let (s1, s2, sd) = (seen(|r| r.w1), seen(|r| r.w2), seen(|r| r.demand));
    for r in &ensemble {
        for s in &r.samples {
            assert!(s1.contains(&s.w1.to_bits()));
            assert!(s2.contains(&s.w2.to_bits()));
            assert!(sd.contains(&s.demand.to_bits()));
        }
    }

    let stats = convergence_stats(&ensemble, &historic).unwrap();
    for (name, v) in stats.variables() {
        assert!(
            (v.mean - v.historic_mean).abs() < 0.05 * v.historic_mean,
            "{name}: {v:?}"
        );
        assert!(v.wci > 0.0 && v.sigma > 0.0);
    }

    let grid = StrategyGrid::new(200.0, 10.0).unwrap();
    let curve = PowerCurve::e82_default();
    let energy = build_energy_tables(&ensemble[0], &curve, &grid).unwrap();

    // delivered energy equals served demand, cell by cell
    let n = grid.len();
    for i in (0..n).step_by(5) {
        for j in (0..n).step_by(5) {
            let mut served = 0.0;
            for s in &ensemble[0].samples {
                let g = curve.per_unit_output(s.w1) * grid.values()[i]
                    + curve.per_unit_output(s.w2) * grid.values()[j];
                served += g.min(s.demand);
            }
            let delivered = energy.e_g1[i] - energy.e_c1_at(i, j) + energy.e_g2[j] - energy.e_c2_at(i, j);
            assert!((delivered - served).abs() <= 1e-9 * served.max(1.0), "({i},{j})");
        }
    }

    let costs = CostParams {
        p_g: 74.3,
        p_t: 0.26 * 74.3,
        c_g1: 0.3 * 74.3,
        c_g2: 0.28 * 74.3,
        c_t: 1.0e6,
    };
    let surfaces = profit_surfaces(&energy, &costs).unwrap();
    let eq = stackelberg(&surfaces, &grid).unwrap();
    assert_eq!(eq.p_n2_star, eq.best_response[eq.i_star].capacity);
    for j in 0..n {
        assert!(surfaces.pi2(eq.i_star, j) <= eq.pi2_star);
    }
    for (i, br) in eq.best_response.iter().enumerate() {
        assert!(surfaces.pi1(i, br.index) <= eq.pi1_star);
    }
    // with curtailment in play, nobody builds the whole grid for free
    assert!(eq.p_n1_star > 0.0);
}

#[test]
fn proportional_split_holds_on_sampled_states() {
    let historic = historic_from_files();
    let tables = tables(&historic);
    let config = ChainConfig::new(500, 1, 0.2, 3).unwrap();
    let r = &run_ensemble(&config, &tables).unwrap()[0];
    let curve = PowerCurve::e82_default();
    for s in &r.samples {
        let g1 = curve.per_unit_output(s.w1) * 120.0;
        let g2 = curve.per_unit_output(s.w2) * 80.0;
        let (c1, c2) = curtailment_timestep(g1, g2, s.demand);
        assert!(c1 <= g1 && c2 <= g2);
        if c1 > 0.0 {
            assert!((c1 / g1 - c2 / g2).abs() < 1e-12);
        }
    }
}
