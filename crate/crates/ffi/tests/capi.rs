use std::ffi::{c_char, CStr, CString};
use std::process::Command;
use std::ptr;

use stealthsim::*;

fn last_error() -> String {
    let p = sts_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn sequences_match_core() {
    let mut buf = [0i8; STS_SEQ_LEN];
    unsafe {
        assert_eq!(sts_gen_pss(2, buf.as_mut_ptr()), StsStatus::Ok);
        assert_eq!(buf, stealthsim_core::sync_signals::gen_pss(2).unwrap());
        assert_eq!(sts_gen_sss(1007, buf.as_mut_ptr()), StsStatus::Ok);
        let cell = stealthsim_core::sync_signals::CellIdentity::from_pci(1007).unwrap();
        assert_eq!(buf, stealthsim_core::sync_signals::gen_sss(cell));

        assert_eq!(sts_gen_pss(3, buf.as_mut_ptr()), StsStatus::InvalidArgument);
        assert!(last_error().contains("n_id_2"));
        assert_eq!(sts_gen_sss(1008, buf.as_mut_ptr()), StsStatus::InvalidArgument);
        assert_eq!(sts_gen_pss(0, ptr::null_mut()), StsStatus::NullPointer);
    }
}

#[test]
fn pathloss() {
    let mut pl = 0.0;
    unsafe {
        assert_eq!(sts_pathloss_db(100.0, 3.5, &mut pl), StsStatus::Ok);
        assert_eq!(pl, stealthsim_core::channel::pathloss_db(100.0, 3.5).unwrap());
        assert_eq!(sts_pathloss_db(0.5, 3.5, &mut pl), StsStatus::InvalidArgument);
    }
}

#[test]
fn config_handles() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(sts_config_default(&mut cfg), StsStatus::Ok);
        assert_eq!(sts_config_set_gnb_array(cfg, 8, 8, 2), StsStatus::Ok);
        assert_eq!(sts_config_set_gnb_array(cfg, 0, 8, 2), StsStatus::InvalidConfig);
        let mut json: *mut c_char = ptr::null_mut();
        assert_eq!(sts_config_to_json(cfg, &mut json), StsStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        sts_string_free(json);
        let compact: String = text.split_whitespace().collect();
        assert!(compact.contains(r#""tx_power_dbm":19.0"#), "{text}");
        sts_config_free(cfg);

        let mut back = ptr::null_mut();
        let c_text = CString::new(text.clone()).unwrap();
        assert_eq!(sts_config_from_json(c_text.as_ptr(), &mut back), StsStatus::Ok);
        let mut again: *mut c_char = ptr::null_mut();
        assert_eq!(sts_config_to_json(back, &mut again), StsStatus::Ok);
        assert_eq!(CStr::from_ptr(again).to_str().unwrap(), text);
        sts_string_free(again);
        sts_config_free(back);

        let bad = CString::new(r#"{"n_trials": -1}"#).unwrap();
        let mut none = ptr::null_mut();
        assert_eq!(sts_config_from_json(bad.as_ptr(), &mut none), StsStatus::InvalidConfig);
        assert!(none.is_null());
        assert!(last_error().contains("n_trials"));
        assert_eq!(sts_config_from_json(ptr::null(), &mut none), StsStatus::NullPointer);
        assert_eq!(sts_config_set_seed(ptr::null_mut(), 1), StsStatus::NullPointer);
        sts_config_free(ptr::null_mut());
    }
}

#[test]
fn small_campaign() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let json = CString::new(r#"{"detectors": ["energy"], "n_trials": 2}"#).unwrap();
        let mut cfg = ptr::null_mut();
        assert_eq!(sts_config_from_json(json.as_ptr(), &mut cfg), StsStatus::Ok);
        let mut run = ptr::null_mut();
        assert_eq!(sts_campaign_run(cfg, StsMode::Baseline, 1, &mut run), StsStatus::Ok);

        let (mut pd, mut auc) = (-1.0, -1.0);
        assert_eq!(
            sts_campaign_pd_at_pfa(run, StsMode::Baseline, StsDetector::Energy, StsObserver::Eve, 0.1, &mut pd),
            StsStatus::Ok
        );
        assert_eq!(sts_campaign_auc(run, StsMode::Baseline, StsDetector::Energy, StsObserver::Ue, &mut auc), StsStatus::Ok);
        assert!((0.0..=1.0).contains(&pd) && (0.0..=1.0).contains(&auc));
        assert_eq!(
            sts_campaign_auc(run, StsMode::Csi, StsDetector::Energy, StsObserver::Ue, &mut auc),
            StsStatus::InvalidArgument
        );
        assert_eq!(
            sts_campaign_auc(run, StsMode::Baseline, StsDetector::Correlator, StsObserver::Ue, &mut auc),
            StsStatus::InvalidArgument
        );
        assert_eq!(
            sts_campaign_pd_at_pfa(run, StsMode::Baseline, StsDetector::Energy, StsObserver::Eve, 1.5, &mut pd),
            StsStatus::InvalidArgument
        );

        let csv = CString::new(dir.path().join("roc.csv").to_str().unwrap()).unwrap();
        assert_eq!(sts_campaign_write_roc_csv(run, csv.as_ptr()), StsStatus::Ok);
        let text = std::fs::read_to_string(dir.path().join("roc.csv")).unwrap();
        assert!(text.starts_with("mode,detector,observer,antennas,pfa,pd,n_h0,n_h1"));
        let missing = CString::new(dir.path().join("no/roc.csv").to_str().unwrap()).unwrap();
        assert_eq!(sts_campaign_write_roc_csv(run, missing.as_ptr()), StsStatus::Io);

        sts_campaign_free(run);
        assert_eq!(sts_config_set_trials(cfg, 1), StsStatus::Ok);
        let mut none = ptr::null_mut();
        assert_eq!(sts_campaign_run(cfg, StsMode::Both, 1, &mut none), StsStatus::InvalidConfig);
        assert!(last_error().contains("n_trials"));
        sts_config_free(cfg);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/stealthsim.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in [
        "sts_last_error",
        "sts_config_default",
        "sts_config_from_json",
        "sts_campaign_run",
        "sts_campaign_pd_at_pfa",
        "sts_campaign_auc",
        "sts_campaign_write_roc_csv",
        "sts_gen_pss",
        "STS_STATUS_NULL_POINTER",
        "typedef struct StsConfig StsConfig",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"stealthsim.h\"\nint main(void) { int8_t seq[STS_SEQ_LEN]; StsConfig *c = 0; sts_gen_pss(0, seq); StsStatus s = sts_config_default(&c); sts_config_free(c); return (int)s; }\n",
    )
    .unwrap();
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .status()
        .expect("a C compiler is required for this test");
    assert!(status.success());
}
