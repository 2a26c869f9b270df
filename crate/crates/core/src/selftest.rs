//! Fast property checks runnable from the command line.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::beamforming::{ls_estimate, principal_eigvec, receive_ul_pilot, spatial_covariance, EigenOptions, UplinkPilotConfig};
use crate::channel::ChannelRealization;
use crate::detection::roc_curve;
use crate::ofdm::{Numerology, OfdmEngine, ResourceGrid};
use crate::sync_signals::{gen_pss, gen_sss, CellIdentity, SEQ_LEN};
use crate::Cf64;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn gaussian(rng: &mut ChaCha8Rng) -> Cf64 {
    Cf64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * std::f64::consts::FRAC_1_SQRT_2
}

fn periodic_autocorrelation(seq: &[i8]) -> Vec<i32> {
    let n = seq.len();
    (0..n)
        .map(|tau| (0..n).map(|i| seq[i] as i32 * seq[(i + tau) % n] as i32).sum())
        .collect()
}

fn check_sequences() -> CheckOutcome {
    let mut worst_side = i32::MIN;
    for n2 in 0..3 {
        let ac = periodic_autocorrelation(&gen_pss(n2).expect("valid"));
        if ac[0] != SEQ_LEN as i32 {
            return outcome("pss-sss-sequences", false, format!("PSS {n2} peak {}", ac[0]));
        }
        worst_side = worst_side.max(*ac[1..].iter().max().expect("nonempty"));
        if ac[1..].iter().any(|&v| v != -1) {
            return outcome("pss-sss-sequences", false, format!("PSS {n2} sidelobe not -1"));
        }
    }
    let sss = gen_sss(CellIdentity::new(0, 0).expect("valid"));
    let balanced = sss.iter().all(|&v| v == 1 || v == -1);
    outcome("pss-sss-sequences", balanced, format!("PSS periodic sidelobes {worst_side}"))
}

fn check_ofdm(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let num = Numerology::NR_30KHZ;
    let engine = OfdmEngine::new(num);
    let mut grid = ResourceGrid::zeros(240, 4);
    grid.first_symbol = 4;
    grid.data_mut().iter_mut().for_each(|v| *v = gaussian(rng));
    let ok = engine.modulate(&grid, 136).and_then(|t| engine.demodulate(&t, 4, 4)).map(|back| {
        let sub = back.sub_band(136, 240);
        sub.data().iter().zip(grid.data()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    });
    match ok {
        Ok(err) => outcome("ofdm-round-trip", err < 1e-10, format!("max error {err:.2e}")),
        Err(e) => outcome("ofdm-round-trip", false, e.to_string()),
    }
}

fn check_ls(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let h: Vec<DMatrix<Cf64>> = (0..12).map(|_| DMatrix::from_fn(16, 4, |_, _| gaussian(rng))).collect();
    let ch = ChannelRealization {
        h: h.clone(),
        pathloss_db: 0.0,
        clusters: vec![],
    };
    let result = UplinkPilotConfig::dft(4, 12, 0.37, 0.0)
        .and_then(|cfg| receive_ul_pilot(&ch, &cfg, rng).and_then(|y| ls_estimate(&y, &cfg)));
    match result {
        Ok(est) => {
            let err = est.iter().zip(&h).map(|(a, b)| (a - b).norm() / b.norm()).fold(0.0, f64::max);
            outcome("ls-noiseless", err < 1e-12, format!("relative error {err:.2e}"))
        }
        Err(e) => outcome("ls-noiseless", false, e.to_string()),
    }
}

fn check_eigen(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut worst = 0.0f64;
    for m in [4usize, 16] {
        let a: Vec<DMatrix<Cf64>> = (0..3).map(|_| DMatrix::from_fn(m, 2, |_, _| gaussian(rng))).collect();
        let r = match spatial_covariance(&a) {
            Ok(r) => r,
            Err(e) => return outcome("principal-eigenpair", false, e.to_string()),
        };
        let dense = r.matrix().clone().symmetric_eigen();
        let top = dense.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
        match principal_eigvec(&r, &EigenOptions::default(), rng) {
            Ok(e) => worst = worst.max((e.value - top).abs() / top),
            Err(e) => return outcome("principal-eigenpair", false, e.to_string()),
        }
    }
    outcome("principal-eigenpair", worst < 1e-6, format!("worst relative error {worst:.2e}"))
}

fn check_roc(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let n = 20_000;
    let h0: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let h1: Vec<f64> = (0..n).map(|_| 2.0 + rng.sample::<f64, _>(StandardNormal)).collect();
    match roc_curve(&h0, &h1) {
        Ok(c) => {
            let pd = c.pd_at_pfa(0.1);
            let auc = c.auc();
            let ok = (pd - 0.7616).abs() < 0.03 && (auc - 0.9214).abs() < 0.015;
            outcome("gaussian-roc", ok, format!("pd@0.1 {pd:.4}, auc {auc:.4}"))
        }
        Err(e) => outcome("gaussian-roc", false, e.to_string()),
    }
}

/// Runs every check with a fixed seed.
pub fn run_selftest() -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    vec![
        check_sequences(),
        check_ofdm(&mut rng),
        check_ls(&mut rng),
        check_eigen(&mut rng),
        check_roc(&mut rng),
    ]
}
