use stealthsim_core::channel::{ArrayGeometry, Terminal};
use stealthsim_core::scenario::{
    run_campaign, run_trial, Detector, FixedDrop, Mode, ScenarioConfig, TrialContext,
};

fn small(detectors: Vec<Detector>) -> ScenarioConfig {
    ScenarioConfig {
        detectors,
        n_trials: 2,
        ..ScenarioConfig::default()
    }
}

#[test]
fn colocated_eve_sees_what_the_ue_sees() {
    let cfg = ScenarioConfig {
        eve_colocated: true,
        ..small(vec![Detector::Correlator])
    };
    let ctx = TrialContext::new(&cfg).unwrap();
    for trial in 0..3 {
        let r = run_trial(&ctx, trial, Mode::Csi).unwrap();
        let ue = r.ue_stat_h1().unwrap();
        let eve = r.eve_corr_h1().unwrap();
        let gap_db = 10.0 * (eve / ue).log10();
        assert!(gap_db.abs() <= 3.0, "trial {trial}: ue {ue}, eve {eve}");
    }
}

#[test]
fn degenerate_geometry_pools_every_trial() {
    let cfg = ScenarioConfig {
        fixed_drop: Some(FixedDrop {
            ue: [50.0, 0.0],
            eve: [50.0, 1.0],
        }),
        ..small(vec![Detector::Energy])
    };
    let result = run_campaign(&cfg, &[Mode::Baseline], Some(1)).unwrap();
    let curve = result.curve(Mode::Baseline, Detector::Energy, Terminal::Eve).unwrap();
    assert_eq!((curve.n_h0, curve.n_h1), (2, 2));
    assert_eq!(result.trials.len(), 2);
    assert!(result.trials.iter().all(|t| t[0].drop.ue == [50.0, 0.0]));
}

#[test]
fn paired_modes_share_drops_and_noise_floor() {
    let cfg = ScenarioConfig {
        gnb_array: ArrayGeometry::GNB_128,
        tx_power_dbm: 19.0,
        ..small(vec![Detector::Energy])
    };
    let result = run_campaign(&cfg, &Mode::ALL, Some(1)).unwrap();
    for pair in &result.trials {
        assert_eq!(pair[0].mode, Mode::Baseline);
        assert_eq!(pair[1].mode, Mode::Csi);
        assert_eq!(pair[0].drop, pair[1].drop);
        assert_eq!(pair[0].eve_energy_h0(), pair[1].eve_energy_h0());
        assert_eq!(pair[0].burst_transmissions(0), 24);
        assert_eq!(pair[1].transmissions.len(), 1);
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let cfg = ScenarioConfig {
        n_trials: 3,
        ..small(vec![Detector::Energy])
    };
    let one = run_campaign(&cfg, &Mode::ALL, Some(1)).unwrap();
    let three = run_campaign(&cfg, &Mode::ALL, Some(3)).unwrap();
    assert_eq!(one.trials, three.trials);
    assert_eq!(one.curves, three.curves);
}
