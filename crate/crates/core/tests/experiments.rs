use dictcs::experiments::{
    compare_grids, grid_to_csv, parse_csv, run_phase_transition, run_phase_transition_with_workers, CoeffModel,
    DictionarySource, ExperimentConfig, PhaseCell, PhaseGrid,
};
use dictcs::recovery::Algorithm;
use proptest::prelude::*;

fn desk_config(dictionary: DictionarySource) -> ExperimentConfig {
    ExperimentConfig {
        d: 32,
        dictionary,
        n_list: vec![8, 12, 16, 20, 24],
        s_list: vec![1, 2, 3, 4, 6, 8],
        trials: 20,
        seed: 17,
        ..ExperimentConfig::paper_default(Algorithm::Omp)
    }
}

#[test]
fn dirac_basis_needs_fewer_measurements() {
    let dirac = run_phase_transition(&desk_config(DictionarySource::Dirac)).unwrap();
    let redundant = run_phase_transition(&desk_config(DictionarySource::DiracDct)).unwrap();
    let cmp = compare_grids(&dirac, &redundant).unwrap();
    assert!(cmp.fraction_a_at_least_b >= 0.9, "{}", cmp.fraction_a_at_least_b);
}

#[test]
fn grids_do_not_depend_on_worker_count() {
    let config = ExperimentConfig {
        trials: 6,
        ..desk_config(DictionarySource::DiracDct)
    };
    let one = run_phase_transition_with_workers(&config, 1).unwrap().without_timing();
    let three = run_phase_transition_with_workers(&config, 3).unwrap().without_timing();
    assert_eq!(grid_to_csv(&one), grid_to_csv(&three));
    assert_eq!(one.digest, Some(config.digest()));
}

#[test]
fn thresholding_grid_uses_unit_signs() {
    let config = ExperimentConfig::paper_default(Algorithm::Thresholding);
    assert_eq!(config.coeff_model, CoeffModel::UnitSign);
    assert_eq!(config.s_list.last(), Some(&32));
}

proptest! {
    #[test]
    fn csv_round_trip(rows in prop::collection::vec((1usize..300, 1usize..70, 1usize..200, any::<u32>(), 0.0f64..10.0), 0..12)) {
        let cells = rows
            .into_iter()
            .map(|(n, s, trials, raw, runtime)| {
                let successes = raw as usize % (trials + 1);
                PhaseCell::new(Algorithm::BasisPursuit, "dirac-dct".into(), "gaussian".into(), n, s, trials, successes, runtime)
            })
            .collect();
        let grid = PhaseGrid { digest: None, cells };
        let text = grid_to_csv(&grid);
        let back = parse_csv(&text).unwrap();
        prop_assert_eq!(&back, &grid);
        prop_assert_eq!(grid_to_csv(&back), text);
    }
}
