//! C ABI over `stealthsim-core`.
//!
//! Every function returns an [`StsStatus`]; results go through out-pointers.
//! On failure the message is kept per thread and read with [`sts_last_error`].
//! Handles are opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use stealthsim_core::channel::{pathloss_db, ArrayGeometry, Terminal};
use stealthsim_core::io::{config_to_json, emit_roc_csv, parse_config_str, series_of};
use stealthsim_core::scenario::{self, CampaignResult, Detector, Mode, ScenarioConfig};
use stealthsim_core::sync_signals::{gen_pss, gen_sss, CellIdentity, SEQ_LEN};
use stealthsim_core::Error;

/// Length of the PSS and SSS sequences.
pub const STS_SEQ_LEN: usize = 127;

const _: () = assert!(STS_SEQ_LEN == SEQ_LEN);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Io = 4,
    Numerical = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StsMode {
    Baseline = 0,
    Csi = 1,
    Both = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StsDetector {
    Energy = 0,
    Correlator = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StsObserver {
    Ue = 0,
    Eve = 1,
}

/// Scenario configuration handle.
pub struct StsConfig {
    inner: ScenarioConfig,
}

/// Finished campaign handle.
pub struct StsCampaign {
    inner: CampaignResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(StsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config(_) | Error::InvalidKey { .. } | Error::Parse { .. } => StsStatus::InvalidConfig,
            Error::Io { .. } => StsStatus::Io,
            Error::NotConverged { .. } => StsStatus::Numerical,
            _ => StsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard<F>(f: F) -> StsStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            StsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(StsStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(StsStatus::InvalidArgument, msg.into())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn config_mut<'a>(cfg: *mut StsConfig) -> Result<&'a mut ScenarioConfig, Failure> {
    cfg.as_mut().map(|c| &mut c.inner).ok_or_else(|| null("config"))
}

unsafe fn campaign_ref<'a>(c: *const StsCampaign) -> Result<&'a CampaignResult, Failure> {
    c.as_ref().map(|c| &c.inner).ok_or_else(|| null("campaign"))
}

fn modes_of(mode: StsMode) -> Vec<Mode> {
    match mode {
        StsMode::Baseline => vec![Mode::Baseline],
        StsMode::Csi => vec![Mode::Csi],
        StsMode::Both => Mode::ALL.to_vec(),
    }
}

fn single_mode(mode: StsMode) -> Result<Mode, Failure> {
    match mode {
        StsMode::Baseline => Ok(Mode::Baseline),
        StsMode::Csi => Ok(Mode::Csi),
        StsMode::Both => Err(invalid("a curve belongs to a single mode")),
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sts_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration (16-port gNB, 28 dBm).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sts_config_default(out: *mut *mut StsConfig) -> StsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = Box::into_raw(Box::new(StsConfig {
            inner: ScenarioConfig::default(),
        }));
        Ok(())
    })
}

/// Parses a JSON configuration; absent keys take their defaults.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sts_config_from_json(json: *const c_char, out: *mut *mut StsConfig) -> StsStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let inner = parse_config_str(text, Path::new("<ffi>"))?;
        *out = Box::into_raw(Box::new(StsConfig { inner }));
        Ok(())
    })
}

/// Serializes the configuration to JSON. Release `*out` with [`sts_string_free`].
///
/// # Safety
/// `cfg` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sts_config_to_json(cfg: *const StsConfig, out: *mut *mut c_char) -> StsStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("config"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let text = CString::new(config_to_json(&cfg.inner)).map_err(|e| invalid(e.to_string()))?;
        *out = text.into_raw();
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn sts_config_set_trials(cfg: *mut StsConfig, n_trials: usize) -> StsStatus {
    guard(|| {
        config_mut(cfg)?.n_trials = n_trials;
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn sts_config_set_seed(cfg: *mut StsConfig, seed: u64) -> StsStatus {
    guard(|| {
        config_mut(cfg)?.seed = seed;
        Ok(())
    })
}

/// Sets the gNB panel and, when known for that panel, its default transmit power.
///
/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn sts_config_set_gnb_array(cfg: *mut StsConfig, rows: usize, cols: usize, pols: usize) -> StsStatus {
    guard(|| {
        let cfg = config_mut(cfg)?;
        let array = ArrayGeometry::upa(rows, cols, pols);
        array.validate()?;
        cfg.gnb_array = array;
        if let Some(p) = scenario::default_tx_power_dbm(&array) {
            cfg.tx_power_dbm = p;
        }
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn sts_config_set_tx_power_dbm(cfg: *mut StsConfig, dbm: f64) -> StsStatus {
    guard(|| {
        config_mut(cfg)?.tx_power_dbm = dbm;
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn sts_config_free(cfg: *mut StsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs a campaign. `threads` = 0 uses the environment or all cores.
///
/// # Safety
/// `cfg` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sts_campaign_run(
    cfg: *const StsConfig,
    mode: StsMode,
    threads: usize,
    out: *mut *mut StsCampaign,
) -> StsStatus {
    guard(|| {
        let cfg = cfg.as_ref().ok_or_else(|| null("config"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let threads = (threads > 0).then_some(threads);
        let inner = scenario::run_campaign(&cfg.inner, &modes_of(mode), threads)?;
        *out = Box::into_raw(Box::new(StsCampaign { inner }));
        Ok(())
    })
}

fn curve_metric(
    c: *const StsCampaign,
    mode: StsMode,
    detector: StsDetector,
    observer: StsObserver,
    out: *mut f64,
    metric: impl FnOnce(&stealthsim_core::detection::RocCurve) -> f64,
) -> StsStatus {
    guard(|| {
        let result = unsafe { campaign_ref(c)? };
        let out = unsafe { out.as_mut() }.ok_or_else(|| null("out"))?;
        let detector = match detector {
            StsDetector::Energy => Detector::Energy,
            StsDetector::Correlator => Detector::Correlator,
        };
        let observer = match observer {
            StsObserver::Ue => Terminal::Ue,
            StsObserver::Eve => Terminal::Eve,
        };
        let curve = result
            .curve(single_mode(mode)?, detector, observer)
            .ok_or_else(|| invalid("no such curve in this campaign"))?;
        *out = metric(curve);
        Ok(())
    })
}

/// Detection probability at a false-alarm target.
///
/// # Safety
/// `c` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sts_campaign_pd_at_pfa(
    c: *const StsCampaign,
    mode: StsMode,
    detector: StsDetector,
    observer: StsObserver,
    pfa: f64,
    out: *mut f64,
) -> StsStatus {
    if !(0.0..=1.0).contains(&pfa) {
        set_last_error(format!("pfa {pfa} outside [0, 1]"));
        return StsStatus::InvalidArgument;
    }
    curve_metric(c, mode, detector, observer, out, |curve| curve.pd_at_pfa(pfa))
}

/// Area under the ROC curve.
///
/// # Safety
/// `c` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sts_campaign_auc(
    c: *const StsCampaign,
    mode: StsMode,
    detector: StsDetector,
    observer: StsObserver,
    out: *mut f64,
) -> StsStatus {
    curve_metric(c, mode, detector, observer, out, |curve| curve.auc())
}

/// Writes the ROC CSV of a campaign.
///
/// # Safety
/// `c` must come from this library; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sts_campaign_write_roc_csv(c: *const StsCampaign, path: *const c_char) -> StsStatus {
    guard(|| {
        let result = campaign_ref(c)?;
        let path = str_arg(path, "path")?;
        emit_roc_csv(&series_of(result), path)?;
        Ok(())
    })
}

/// # Safety
/// `c` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn sts_campaign_free(c: *mut StsCampaign) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn sts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// PSS for `n_id_2` into `out[STS_SEQ_LEN]`, entries +1/-1.
///
/// # Safety
/// `out` must point to `STS_SEQ_LEN` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sts_gen_pss(n_id_2: u8, out: *mut i8) -> StsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let seq = gen_pss(n_id_2)?;
        std::ptr::copy_nonoverlapping(seq.as_ptr(), out, SEQ_LEN);
        Ok(())
    })
}

/// SSS for a physical cell identity (0..=1007) into `out[STS_SEQ_LEN]`.
///
/// # Safety
/// `out` must point to `STS_SEQ_LEN` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sts_gen_sss(pci: u16, out: *mut i8) -> StsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let seq = gen_sss(CellIdentity::from_pci(pci)?);
        std::ptr::copy_nonoverlapping(seq.as_ptr(), out, SEQ_LEN);
        Ok(())
    })
}

/// UMi LOS path loss in dB.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sts_pathloss_db(distance_m: f64, carrier_ghz: f64, out: *mut f64) -> StsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = pathloss_db(distance_m, carrier_ghz)?;
        Ok(())
    })
}
