use windgame_bench::{random_surfaces, sampler_tables, synthetic_year};
use windgame_core::{run_chain, stackelberg, ChainConfig, StrategyGrid};

#[test]
fn synthetic_year_is_one_year_of_hours() {
    let s = synthetic_year(1);
    assert_eq!(s.len(), 8760);
    let means = s.means();
    assert!((means[2] - 108.1830).abs() < 1e-9);
}

#[test]
fn sampler_tables_are_ergodic() {
    let tables = sampler_tables(1);
    tables.check_ergodicity().unwrap();
    let config = ChainConfig::new(200, 1, 0.2, 1).unwrap();
    assert_eq!(run_chain(&config, &tables, 0).unwrap().len(), 160);
}

#[test]
fn random_surfaces_fit_a_grid() {
    let grid = StrategyGrid::new(10.0, 0.5).unwrap();
    let s = random_surfaces(grid.len(), 4);
    let eq = stackelberg(&s, &grid).unwrap();
    assert!(eq.i_star < grid.len());
}
