//! Monte Carlo campaigns: drops, link budgets, baseline and on-demand SSB
//! transmission plans, receive-stream synthesis and ROC pooling.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beamforming::{
    eigen_precoder, gob_codebook, ls_estimate, receive_ul_pilot, select_sector, spatial_covariance,
    EigenOptions, Precoder, PrecoderLabel, UplinkPilotConfig,
};
use crate::channel::{
    draw_clusters, draw_drop, realize, ArrayGeometry, ChannelParams, ChannelRealization, DropGeometry, Link,
    Terminal,
};
use crate::detection::{
    energy_statistic, roc_curve, Correlator, CorrelatorSearchSpec, EnergyWindowSpec, RocCurve,
};
use crate::ofdm::{Numerology, OfdmEngine};
use crate::rng::{trial_stream, Stream};
use crate::sync_signals::{
    build_burst_schedule, build_ssb_grid, BurstConfig, CellIdentity, SsbGrid, SS_FIRST_SUBCARRIER, SSB_SUBCARRIERS,
    SSB_SYMBOLS,
};
use crate::{Cf64, Error, Result};

/// Thermal noise density in dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

/// RSRP reported for a channel with no energy.
pub const RSRP_FLOOR_DBM: f64 = -250.0;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "STEALTHSIM_THREADS";

/// SSB transmission strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every sector sweeps the full grid-of-beams burst.
    Baseline,
    /// One eigenbeamformed SSB from the sector with the best uplink RSRP.
    Csi,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Baseline, Mode::Csi];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Csi => "csi",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "csi" => Ok(Mode::Csi),
            _ => Err(Error::Config(format!("unknown mode `{s}` (expected baseline or csi)"))),
        }
    }
}

/// Modes a campaign runs. `Both` pairs them on identical drops and channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    Baseline,
    Csi,
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeSelection::Baseline => vec![Mode::Baseline],
            ModeSelection::Csi => vec![Mode::Csi],
            ModeSelection::Both => Mode::ALL.to_vec(),
        }
    }
}

impl std::str::FromStr for ModeSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(ModeSelection::Baseline),
            "csi" => Ok(ModeSelection::Csi),
            "both" => Ok(ModeSelection::Both),
            _ => Err(Error::Config(format!(
                "unknown mode `{s}` (expected baseline, csi or both)"
            ))),
        }
    }
}

/// Where the gNB's covariance comes from in csi mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsiSource {
    /// True uplink channel.
    Genie,
    /// Least-squares estimate from a noisy uplink pilot.
    Ls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    Energy,
    Correlator,
}

impl Detector {
    pub fn as_str(self) -> &'static str {
        match self {
            Detector::Energy => "energy",
            Detector::Correlator => "correlator",
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn observer_name(t: Terminal) -> &'static str {
    match t {
        Terminal::Ue => "ue",
        Terminal::Eve => "eve",
    }
}

/// Fixed positions (meters, gNB at the origin) replacing the random drop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedDrop {
    pub ue: [f64; 2],
    pub eve: [f64; 2],
}

/// Campaign configuration. Powers in dBm, distances in meters, frequencies
/// in Hz, times in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_sectors: usize,
    pub sector_width_deg: f64,
    pub gnb_array: ArrayGeometry,
    pub ue_array: ArrayGeometry,
    pub eve_array: ArrayGeometry,
    pub scs_hz: f64,
    pub ssb_period_ms: f64,
    pub eve_bandwidth_hz: f64,
    pub eve_obs_time_ms: f64,
    pub tx_power_dbm: f64,
    pub carrier_hz: f64,
    pub isd_m: f64,
    pub min_distance_m: f64,
    pub mode: ModeSelection,
    pub csi_source: CsiSource,
    pub ul_pilot_power_dbm: f64,
    pub detectors: Vec<Detector>,
    /// Add the best SSS correlation to the PSS peak.
    pub correlator_sss: bool,
    pub noise_figure_db: f64,
    pub n_trials: usize,
    pub seed: u64,
    pub pci: u16,
    /// Band index of the first SSB subcarrier inside the observed band.
    pub ssb_offset_subcarriers: usize,
    pub rice_k_db: f64,
    pub delay_spread_ns: f64,
    pub angle_spread_deg: f64,
    pub sector_hpbw_deg: f64,
    pub sector_pattern: bool,
    pub fixed_drop: Option<FixedDrop>,
    /// The eavesdropper sits at the UE and sees the UE's channel.
    pub eve_colocated: bool,
}

/// Transmit power paired with the array size when none is configured.
pub fn default_tx_power_dbm(arr: &ArrayGeometry) -> Option<f64> {
    match arr.ports() {
        16 => Some(28.0),
        128 => Some(19.0),
        _ => None,
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_sectors: 3,
            sector_width_deg: 120.0,
            gnb_array: ArrayGeometry::GNB_16,
            ue_array: ArrayGeometry::TERMINAL,
            eve_array: ArrayGeometry::TERMINAL,
            scs_hz: 30_000.0,
            ssb_period_ms: 20.0,
            eve_bandwidth_hz: 15.36e6,
            eve_obs_time_ms: 25.0,
            tx_power_dbm: 28.0,
            carrier_hz: 3.5e9,
            isd_m: 200.0,
            min_distance_m: 10.0,
            mode: ModeSelection::Both,
            csi_source: CsiSource::Ls,
            ul_pilot_power_dbm: 23.0,
            detectors: vec![Detector::Energy, Detector::Correlator],
            correlator_sss: true,
            noise_figure_db: 7.0,
            n_trials: 200,
            seed: 1,
            pci: 0,
            ssb_offset_subcarriers: 136,
            rice_k_db: 10.0,
            delay_spread_ns: 100.0,
            angle_spread_deg: 10.0,
            sector_hpbw_deg: 70.0,
            sector_pattern: true,
            fixed_drop: None,
            eve_colocated: false,
        }
    }
}

impl ScenarioConfig {
    /// Default configuration for `gnb_array` with its paired transmit power.
    pub fn with_array(gnb_array: ArrayGeometry) -> Result<Self> {
        let tx_power_dbm = default_tx_power_dbm(&gnb_array).ok_or_else(|| Error::InvalidKey {
            key: "tx_power_dbm".into(),
            reason: format!("no default for a {}-port array; set it explicitly", gnb_array.ports()),
        })?;
        Ok(Self {
            gnb_array,
            tx_power_dbm,
            ..Self::default()
        })
    }

    pub fn numerology(&self) -> Numerology {
        Numerology::NR_30KHZ
    }

    pub fn cell_radius_m(&self) -> f64 {
        self.isd_m / 2.0
    }

    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams {
            n_clusters: 6,
            rice_k_db: self.rice_k_db,
            delay_spread_s: self.delay_spread_ns * 1e-9,
            angle_spread_deg: self.angle_spread_deg,
            sector_hpbw_deg: self.sector_hpbw_deg,
            sector_pattern: self.sector_pattern,
            scs_hz: self.scs_hz,
            carrier_hz: self.carrier_hz,
        }
    }

    pub fn burst_config(&self) -> BurstConfig {
        BurstConfig {
            scs_hz: self.scs_hz.round() as u32,
            carrier_hz: self.carrier_hz,
            period_ms: self.ssb_period_ms.round() as u32,
            ..BurstConfig::default()
        }
    }

    pub fn cell(&self) -> Result<CellIdentity> {
        CellIdentity::from_pci(self.pci).map_err(|e| Error::InvalidKey {
            key: "pci".into(),
            reason: e.to_string(),
        })
    }

    /// Checks every invariant; the error names the offending key.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| Err(Error::InvalidKey { key: key.into(), reason });
        let num = self.numerology();
        if self.n_sectors != 3 {
            return bad("n_sectors", format!("{} sectors requested; the site has 3", self.n_sectors));
        }
        if !(self.sector_width_deg > 0.0 && self.sector_width_deg <= 360.0) {
            return bad("sector_width_deg", format!("{} is outside (0, 360]", self.sector_width_deg));
        }
        for (key, arr) in [("gnb_array", &self.gnb_array), ("ue_array", &self.ue_array), ("eve_array", &self.eve_array)] {
            if let Err(e) = arr.validate() {
                return bad(key, e.to_string());
            }
        }
        if self.scs_hz != num.scs_hz {
            return bad("scs_hz", format!("{} Hz unsupported; only {} Hz", self.scs_hz, num.scs_hz));
        }
        if self.eve_bandwidth_hz != num.sample_rate_hz {
            return bad(
                "eve_bandwidth_hz",
                format!("{} Hz unsupported; the receiver samples at {} Hz", self.eve_bandwidth_hz, num.sample_rate_hz),
            );
        }
        if self.ssb_period_ms.fract() != 0.0 {
            return bad("ssb_period_ms", format!("{} is not a whole number of ms", self.ssb_period_ms));
        }
        if let Err(e) = build_burst_schedule(&self.burst_config()) {
            let key = if self.carrier_hz != BurstConfig::default().carrier_hz
                && !(410e6..=7.125e9).contains(&self.carrier_hz)
            {
                "carrier_hz"
            } else {
                "ssb_period_ms"
            };
            return bad(key, e.to_string());
        }
        let burst_ms = self.burst_duration_samples()? as f64 / num.samples_per_ms() as f64;
        if !(self.eve_obs_time_ms >= self.ssb_period_ms + burst_ms) {
            return bad(
                "eve_obs_time_ms",
                format!(
                    "{} ms cannot hold a full burst; need at least {:.3} ms",
                    self.eve_obs_time_ms,
                    self.ssb_period_ms + burst_ms
                ),
            );
        }
        for (key, v) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("ul_pilot_power_dbm", self.ul_pilot_power_dbm),
            ("noise_figure_db", self.noise_figure_db),
            ("rice_k_db", self.rice_k_db),
        ] {
            if !v.is_finite() {
                return bad(key, format!("{v} is not finite"));
            }
        }
        if !(self.isd_m > 0.0) || !self.isd_m.is_finite() {
            return bad("isd_m", format!("{} must be positive", self.isd_m));
        }
        if !(self.min_distance_m > 0.0 && self.min_distance_m < self.cell_radius_m()) {
            return bad(
                "min_distance_m",
                format!("{} must lie in (0, {})", self.min_distance_m, self.cell_radius_m()),
            );
        }
        if self.detectors.is_empty() {
            return bad("detectors", "at least one detector is required".into());
        }
        if self.n_trials < 2 {
            return bad("n_trials", format!("{} trials; at least 2 are needed", self.n_trials));
        }
        self.cell()?;
        if self.ssb_offset_subcarriers + SSB_SUBCARRIERS > num.fft_size {
            return bad(
                "ssb_offset_subcarriers",
                format!("SSB at {} overruns the {}-bin band", self.ssb_offset_subcarriers, num.fft_size),
            );
        }
        if !(self.delay_spread_ns >= 0.0) {
            return bad("delay_spread_ns", format!("{} must be nonnegative", self.delay_spread_ns));
        }
        if !(self.angle_spread_deg >= 0.0) {
            return bad("angle_spread_deg", format!("{} must be nonnegative", self.angle_spread_deg));
        }
        if !(self.sector_hpbw_deg > 0.0 && self.sector_hpbw_deg < 180.0) {
            return bad("sector_hpbw_deg", format!("{} is outside (0, 180)", self.sector_hpbw_deg));
        }
        if let Some(d) = &self.fixed_drop {
            if let Err(e) = DropGeometry::new(d.ue, d.eve).validate(self.cell_radius_m(), self.min_distance_m) {
                return bad("fixed_drop", e.to_string());
            }
        }
        if self.eve_colocated && self.eve_array != self.ue_array {
            return bad("eve_colocated", "co-location needs identical UE and eavesdropper arrays".into());
        }
        Ok(())
    }

    fn burst_duration_samples(&self) -> Result<usize> {
        let num = self.numerology();
        let sched = build_burst_schedule(&self.burst_config())?;
        let last = *sched.ssb_start_symbols.last().expect("schedule has beams");
        Ok(num.symbol_start(last + SSB_SYMBOLS))
    }
}

/// Per-RE energy and per-sample noise for a link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub rx_power_dbm: f64,
    pub noise_power_dbm: f64,
    /// Energy per SSB resource element in unitary-FFT grid units (mW).
    pub re_energy: f64,
    /// Complex noise variance per time-domain sample (mW).
    pub noise_variance: f64,
}

fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Received power after `pathloss_db` spread evenly over the 240 SSB
/// subcarriers, and thermal noise over `bandwidth_hz`.
pub fn link_budget(tx_power_dbm: f64, pathloss_db: f64, noise_figure_db: f64, bandwidth_hz: f64) -> LinkBudget {
    let rx_power_dbm = tx_power_dbm - pathloss_db;
    let noise_power_dbm = THERMAL_NOISE_DBM_HZ + noise_figure_db + 10.0 * bandwidth_hz.log10();
    let fft = Numerology::NR_30KHZ.fft_size as f64;
    LinkBudget {
        rx_power_dbm,
        noise_power_dbm,
        re_energy: dbm_to_mw(rx_power_dbm) * fft / SSB_SUBCARRIERS as f64,
        noise_variance: dbm_to_mw(noise_power_dbm),
    }
}

/// Uplink RSRP `eta * mean_n ||H[n]||_F^2 / (M K)` in dBm, floored at [`RSRP_FLOOR_DBM`].
pub fn compute_ul_rsrp(h: &ChannelRealization, eta: f64) -> f64 {
    let (m, k) = h.h.first().map_or((1, 1), |x| x.shape());
    let p = eta * h.mean_frobenius_sqr() / (m * k).max(1) as f64;
    if p > 0.0 {
        (10.0 * p.log10()).max(RSRP_FLOOR_DBM)
    } else {
        RSRP_FLOOR_DBM
    }
}

/// One SSB put on the air.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    /// Burst index relative to the burst that starts inside `[0, period)`.
    pub burst: i32,
    pub sector: usize,
    pub precoder: PrecoderLabel,
    /// First OFDM symbol within the half-frame.
    pub symbol: usize,
    /// First sample (cyclic prefix included) in the observation window.
    pub start_sample: usize,
}

/// Detector outputs for one observer under both hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatPair {
    pub observer: Terminal,
    pub detector: Detector,
    pub h1: Option<f64>,
    pub h0: Option<f64>,
}

/// Outcome of one trial in one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub mode: Mode,
    pub stats: Vec<StatPair>,
    pub drop: DropGeometry,
    pub ul_rsrp_dbm: Vec<f64>,
    pub chosen_sector: Option<usize>,
    pub precoder: Option<PrecoderLabel>,
    pub transmissions: Vec<Transmission>,
}

impl TrialResult {
    pub fn stat(&self, observer: Terminal, detector: Detector) -> Option<&StatPair> {
        self.stats.iter().find(|s| s.observer == observer && s.detector == detector)
    }

    pub fn ue_stat_h1(&self) -> Option<f64> {
        self.stat(Terminal::Ue, Detector::Correlator).and_then(|s| s.h1)
    }

    pub fn ue_stat_h0(&self) -> Option<f64> {
        self.stat(Terminal::Ue, Detector::Correlator).and_then(|s| s.h0)
    }

    pub fn eve_energy_h1(&self) -> Option<f64> {
        self.stat(Terminal::Eve, Detector::Energy).and_then(|s| s.h1)
    }

    pub fn eve_energy_h0(&self) -> Option<f64> {
        self.stat(Terminal::Eve, Detector::Energy).and_then(|s| s.h0)
    }

    pub fn eve_corr_h1(&self) -> Option<f64> {
        self.stat(Terminal::Eve, Detector::Correlator).and_then(|s| s.h1)
    }

    pub fn eve_corr_h0(&self) -> Option<f64> {
        self.stat(Terminal::Eve, Detector::Correlator).and_then(|s| s.h0)
    }

    /// Transmissions belonging to burst `burst`.
    pub fn burst_transmissions(&self, burst: i32) -> usize {
        self.transmissions.iter().filter(|t| t.burst == burst).count()
    }
}

/// Campaign-invariant state shared by all trials.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub cfg: ScenarioConfig,
    pub num: Numerology,
    pub engine: OfdmEngine,
    pub correlator: Correlator,
    pub ssb_symbols: Vec<usize>,
    pub codebook: Vec<Precoder>,
    pub energy_spec: EnergyWindowSpec,
    pub cell: CellIdentity,
    /// Downlink per-RE energy before path loss (grid units).
    pub tx_re_energy: f64,
    /// Uplink pilot per-RE energy before path loss.
    pub ul_eta: f64,
    pub noise_variance: f64,
    pub window_samples: usize,
    pub period_samples: usize,
    pub eigen: EigenOptions,
}

impl TrialContext {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let num = cfg.numerology();
        let dl = link_budget(cfg.tx_power_dbm, 0.0, cfg.noise_figure_db, num.sample_rate_hz);
        let ul = link_budget(cfg.ul_pilot_power_dbm, 0.0, cfg.noise_figure_db, num.sample_rate_hz);
        let sched = build_burst_schedule(&cfg.burst_config())?;
        Ok(Self {
            cfg: cfg.clone(),
            num,
            engine: OfdmEngine::new(num),
            correlator: Correlator::new(num),
            ssb_symbols: sched.ssb_start_symbols.clone(),
            codebook: gob_codebook(&cfg.gnb_array, cfg.sector_width_deg, sched.n_beams)?,
            energy_spec: EnergyWindowSpec::default(),
            cell: cfg.cell()?,
            tx_re_energy: dl.re_energy,
            ul_eta: ul.re_energy,
            noise_variance: dl.noise_variance,
            window_samples: num.ms_to_samples(cfg.eve_obs_time_ms),
            period_samples: num.ms_to_samples(cfg.ssb_period_ms),
            eigen: EigenOptions {
                tol: 1e-9,
                max_iter: 5000,
                accept_unconverged: true,
            },
        })
    }

    /// Band index of the PSS's first subcarrier.
    pub fn pss_offset(&self) -> usize {
        self.cfg.ssb_offset_subcarriers + SS_FIRST_SUBCARRIER
    }

    fn terminal_array(&self, t: Terminal) -> &ArrayGeometry {
        match t {
            Terminal::Ue => &self.cfg.ue_array,
            Terminal::Eve => &self.cfg.eve_array,
        }
    }

    fn eve_search(&self) -> CorrelatorSearchSpec {
        let spec = CorrelatorSearchSpec::blind(&self.num);
        if self.cfg.correlator_sss {
            spec
        } else {
            spec.pss_only()
        }
    }

    fn ue_search(&self) -> CorrelatorSearchSpec {
        let spec = CorrelatorSearchSpec::known(&self.num, self.pss_offset(), &[self.cell]);
        if self.cfg.correlator_sss {
            spec
        } else {
            spec.pss_only()
        }
    }
}

/// Random state of one trial shared by every mode.
#[derive(Debug, Clone)]
pub struct TrialSetup {
    pub trial: usize,
    pub drop: DropGeometry,
    /// Uplink channels indexed `[sector][terminal]` (UE first).
    pub ul: Vec<[ChannelRealization; 2]>,
    /// Downlink channels `K x M`, same indexing.
    pub dl: Vec<[ChannelRealization; 2]>,
    /// Burst start within `[0, period)` samples.
    pub burst_phase: usize,
    /// Spectrogram start offset of the energy detectors.
    pub energy_offset: usize,
    pub ssb: SsbGrid,
}

fn terminal_index(t: Terminal) -> usize {
    match t {
        Terminal::Ue => 0,
        Terminal::Eve => 1,
    }
}

impl TrialSetup {
    pub fn draw(ctx: &TrialContext, trial: usize) -> Result<Self> {
        let cfg = &ctx.cfg;
        let seed = cfg.seed;
        let t = trial as u64;
        let drop = match &cfg.fixed_drop {
            Some(d) => DropGeometry::new(d.ue, d.eve),
            None => {
                let mut rng = trial_stream(seed, t, Stream::Geometry);
                draw_drop(cfg.cell_radius_m(), cfg.min_distance_m, &mut rng)
            }
        };
        let mut drop = drop;
        if cfg.eve_colocated {
            drop.eve = drop.ue;
        }
        let params = cfg.channel_params();
        let mut rng = trial_stream(seed, t, Stream::Channel);
        let mut ul = Vec::with_capacity(cfg.n_sectors);
        for sector in 0..cfg.n_sectors {
            let mut pair = Vec::with_capacity(2);
            for terminal in [Terminal::Ue, Terminal::Eve] {
                let (clusters, pl) = draw_clusters(&drop, Link { sector, terminal }, &params, &mut rng)?;
                pair.push((clusters, pl));
            }
            if cfg.eve_colocated {
                pair[1] = pair[0].clone();
            }
            let realized: Vec<ChannelRealization> = [Terminal::Ue, Terminal::Eve]
                .iter()
                .zip(&pair)
                .map(|(&term, (clusters, pl))| {
                    realize(clusters, *pl, &cfg.gnb_array, ctx.terminal_array(term), SSB_SUBCARRIERS, params.scs_hz)
                })
                .collect();
            let [u, e]: [ChannelRealization; 2] = realized.try_into().expect("two terminals");
            ul.push([u, e]);
        }
        let dl = ul
            .iter()
            .map(|pair| pair.clone().map(|ch| crate::channel::downlink_of(&ch)))
            .collect();
        let mut timing = trial_stream(seed, t, Stream::Timing);
        let burst_phase = timing.random_range(0..ctx.period_samples);
        let energy_offset = timing.random_range(0..ctx.energy_spec.hop);
        let ssb = build_ssb_grid(ctx.cell, &mut trial_stream(seed, t, Stream::Content));
        Ok(Self {
            trial,
            drop,
            ul,
            dl,
            burst_phase,
            energy_offset,
            ssb,
        })
    }

    /// Uplink RSRP per sector in dBm.
    pub fn ul_rsrp_dbm(&self, ctx: &TrialContext) -> Vec<f64> {
        self.ul.iter().map(|pair| compute_ul_rsrp(&pair[0], ctx.ul_eta)).collect()
    }

    /// Eigen-precoder for `sector` built from the configured CSI source.
    pub fn csi_precoder(&self, ctx: &TrialContext, sector: usize) -> Result<Precoder> {
        let t = self.trial as u64;
        let h = &self.ul[sector][0];
        let r = match ctx.cfg.csi_source {
            CsiSource::Genie => spatial_covariance(&h.h)?,
            CsiSource::Ls => {
                let k = ctx.cfg.ue_array.ports();
                let pilot = UplinkPilotConfig::dft(k, h.n_subcarriers(), ctx.ul_eta, ctx.noise_variance)?;
                let y = receive_ul_pilot(h, &pilot, &mut trial_stream(ctx.cfg.seed, t, Stream::UlNoise))?;
                spatial_covariance(&ls_estimate(&y, &pilot)?)?
            }
        };
        eigen_precoder(&r, &ctx.eigen, &mut trial_stream(ctx.cfg.seed, t, Stream::Eigen))
    }

    fn window_start(&self, ctx: &TrialContext, burst: i32, symbol: usize) -> Option<usize> {
        let start = self.burst_phase as i64
            + burst as i64 * ctx.period_samples as i64
            + ctx.num.symbol_start(symbol) as i64;
        let len = ctx.num.symbol_start(symbol + SSB_SYMBOLS) - ctx.num.symbol_start(symbol);
        (start >= 0 && start as usize + len <= ctx.window_samples).then_some(start as usize)
    }

    /// Transmissions of `mode` and the precoder of each.
    pub fn plan(&self, ctx: &TrialContext, mode: Mode) -> Result<Plan> {
        let rsrp = self.ul_rsrp_dbm(ctx);
        match mode {
            Mode::Baseline => {
                let mut transmissions = Vec::new();
                let bursts = ctx.window_samples.div_ceil(ctx.period_samples) as i32;
                for burst in -1..=bursts {
                    for sector in 0..ctx.cfg.n_sectors {
                        for (b, &symbol) in ctx.ssb_symbols.iter().enumerate() {
                            if let Some(start_sample) = self.window_start(ctx, burst, symbol) {
                                transmissions.push(Transmission {
                                    burst,
                                    sector,
                                    precoder: PrecoderLabel::Beam(b),
                                    symbol,
                                    start_sample,
                                });
                            }
                        }
                    }
                }
                Ok(Plan {
                    transmissions,
                    precoders: ctx.codebook.clone(),
                    ul_rsrp_dbm: rsrp,
                    chosen_sector: None,
                })
            }
            Mode::Csi => {
                let sector = select_sector(&rsrp)?;
                let precoder = self.csi_precoder(ctx, sector)?;
                let symbol = ctx.ssb_symbols[0];
                let start_sample = self
                    .window_start(ctx, 0, symbol)
                    .ok_or_else(|| Error::Config("on-demand SSB does not fit the observation window".into()))?;
                Ok(Plan {
                    transmissions: vec![Transmission {
                        burst: 0,
                        sector,
                        precoder: PrecoderLabel::Eigen,
                        symbol,
                        start_sample,
                    }],
                    precoders: vec![precoder],
                    ul_rsrp_dbm: rsrp,
                    chosen_sector: Some(sector),
                })
            }
        }
    }

    /// Noiseless receive streams at `observer` for the planned transmissions.
    pub fn synthesize(&self, ctx: &TrialContext, plan: &Plan, observer: Terminal) -> Result<Vec<Vec<Cf64>>> {
        let k_ports = ctx.terminal_array(observer).ports();
        let mut streams = vec![vec![Cf64::new(0.0, 0.0); ctx.window_samples]; k_ports];
        let amp = Cf64::new(ctx.tx_re_energy.sqrt(), 0.0);
        let x = &self.ssb.grid;
        for tx in &plan.transmissions {
            let p = plan.precoder(tx.precoder)?;
            let h = &self.dl[tx.sector][terminal_index(observer)];
            // Effective per-subcarrier channel g[n] = H_dl[n] p, K entries each.
            let g: Vec<DVector<Cf64>> = h.h.iter().map(|hn: &DMatrix<Cf64>| hn * &p.weights).collect();
            for (k, stream) in streams.iter_mut().enumerate() {
                let mut grid = x.clone();
                grid.first_symbol = tx.symbol;
                for l in 0..SSB_SYMBOLS {
                    for (n, v) in grid.column_mut(l).iter_mut().enumerate() {
                        *v *= g[n][k] * amp;
                    }
                }
                let samples = ctx.engine.modulate(&grid, ctx.cfg.ssb_offset_subcarriers)?;
                for (dst, src) in stream[tx.start_sample..].iter_mut().zip(&samples) {
                    *dst += src;
                }
            }
        }
        Ok(streams)
    }
}

/// Transmission plan of one trial in one mode.
#[derive(Debug, Clone)]
pub struct Plan {
    pub transmissions: Vec<Transmission>,
    pub precoders: Vec<Precoder>,
    pub ul_rsrp_dbm: Vec<f64>,
    pub chosen_sector: Option<usize>,
}

impl Plan {
    fn precoder(&self, label: PrecoderLabel) -> Result<&Precoder> {
        self.precoders
            .iter()
            .find(|p| p.label == label)
            .ok_or_else(|| Error::Config(format!("plan has no precoder {label}")))
    }
}

/// Complex white Gaussian noise on `ports` streams.
pub fn noise_streams<R: Rng + ?Sized>(ports: usize, len: usize, variance: f64, rng: &mut R) -> Vec<Vec<Cf64>> {
    let s = (variance / 2.0).sqrt();
    (0..ports)
        .map(|_| {
            (0..len)
                .map(|_| Cf64::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s))
                .collect()
        })
        .collect()
}

fn add_streams(a: &mut [Vec<Cf64>], b: &[Vec<Cf64>]) {
    for (x, y) in a.iter_mut().zip(b) {
        for (u, v) in x.iter_mut().zip(y) {
            *u += v;
        }
    }
}

fn detect(ctx: &TrialContext, observer: Terminal, detector: Detector, streams: &[Vec<Cf64>], energy_offset: usize) -> Result<f64> {
    match detector {
        Detector::Energy => energy_statistic(streams, &ctx.energy_spec, &ctx.num, energy_offset),
        Detector::Correlator => {
            let spec = match observer {
                Terminal::Ue => ctx.ue_search(),
                Terminal::Eve => ctx.eve_search(),
            };
            ctx.correlator.statistic(streams, &spec, ctx.noise_variance)
        }
    }
}

/// Runs trial `trial` in every mode of `modes` on shared drop, channels and noise.
pub fn run_paired_trial(ctx: &TrialContext, trial: usize, modes: &[Mode]) -> Result<Vec<TrialResult>> {
    let setup = TrialSetup::draw(ctx, trial)?;
    let seed = ctx.cfg.seed;
    let t = trial as u64;
    let plans: Vec<Plan> = modes.iter().map(|&m| setup.plan(ctx, m)).collect::<Result<_>>()?;
    let mut stats: Vec<Vec<StatPair>> = vec![Vec::new(); modes.len()];
    for observer in [Terminal::Ue, Terminal::Eve] {
        let ports = ctx.terminal_array(observer).ports();
        let (h0_purpose, h1_purpose) = match observer {
            Terminal::Ue => (Stream::UeNoiseH0, Stream::UeNoiseH1),
            Terminal::Eve => (Stream::EveNoiseH0, Stream::EveNoiseH1),
        };
        let h0 = noise_streams(ports, ctx.window_samples, ctx.noise_variance, &mut trial_stream(seed, t, h0_purpose));
        let h0_stats: Vec<(Detector, f64)> = ctx
            .cfg
            .detectors
            .iter()
            .map(|&d| detect(ctx, observer, d, &h0, setup.energy_offset).map(|v| (d, v)))
            .collect::<Result<_>>()?;
        drop(h0);
        let noise = noise_streams(ports, ctx.window_samples, ctx.noise_variance, &mut trial_stream(seed, t, h1_purpose));
        for (mi, plan) in plans.iter().enumerate() {
            let mut rx = setup.synthesize(ctx, plan, observer)?;
            add_streams(&mut rx, &noise);
            for &(d, v0) in &h0_stats {
                let v1 = detect(ctx, observer, d, &rx, setup.energy_offset)?;
                stats[mi].push(StatPair {
                    observer,
                    detector: d,
                    h1: Some(v1),
                    h0: Some(v0),
                });
            }
        }
    }
    Ok(modes
        .iter()
        .zip(plans)
        .zip(stats)
        .map(|((&mode, plan), stats)| TrialResult {
            trial,
            mode,
            stats,
            drop: setup.drop.clone(),
            ul_rsrp_dbm: plan.ul_rsrp_dbm,
            chosen_sector: plan.chosen_sector,
            precoder: (mode == Mode::Csi).then_some(PrecoderLabel::Eigen),
            transmissions: plan.transmissions,
        })
        .collect())
}

/// Runs trial `trial` in a single mode.
pub fn run_trial(ctx: &TrialContext, trial: usize, mode: Mode) -> Result<TrialResult> {
    Ok(run_paired_trial(ctx, trial, &[mode])?.remove(0))
}

/// Identifies one pooled ROC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CurveKey {
    pub mode: Mode,
    pub detector: Detector,
    pub observer: Terminal,
}

/// Output of a campaign.
#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub config: ScenarioConfig,
    pub modes: Vec<Mode>,
    /// `trials[i]` holds trial `i` in every mode, in the order of `modes`.
    pub trials: Vec<Vec<TrialResult>>,
    pub curves: BTreeMap<CurveKey, RocCurve>,
}

impl CampaignResult {
    pub fn curve(&self, mode: Mode, detector: Detector, observer: Terminal) -> Option<&RocCurve> {
        self.curves.get(&CurveKey { mode, detector, observer })
    }

    /// gNB antenna ports of the campaign.
    pub fn antennas(&self) -> usize {
        self.config.gnb_array.ports()
    }
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Pools per-trial statistics into one ROC per (mode, detector, observer).
pub fn pool_curves(trials: &[Vec<TrialResult>]) -> Result<BTreeMap<CurveKey, RocCurve>> {
    let mut pooled: BTreeMap<CurveKey, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for result in trials.iter().flatten() {
        for s in &result.stats {
            let key = CurveKey {
                mode: result.mode,
                detector: s.detector,
                observer: s.observer,
            };
            let entry = pooled.entry(key).or_default();
            entry.0.extend(s.h0);
            entry.1.extend(s.h1);
        }
    }
    pooled
        .into_iter()
        .map(|(k, (h0, h1))| roc_curve(&h0, &h1).map(|c| (k, c)))
        .collect()
}

/// Runs `cfg.n_trials` paired trials. `threads` caps the worker pool; when
/// `None`, [`THREADS_ENV`] applies. Results do not depend on the worker count.
pub fn run_campaign(cfg: &ScenarioConfig, modes: &[Mode], threads: Option<usize>) -> Result<CampaignResult> {
    run_campaign_with_progress(cfg, modes, threads, |_| {})
}

/// [`run_campaign`] with a callback invoked after each finished trial.
pub fn run_campaign_with_progress<F>(
    cfg: &ScenarioConfig,
    modes: &[Mode],
    threads: Option<usize>,
    progress: F,
) -> Result<CampaignResult>
where
    F: Fn(usize) + Sync,
{
    if modes.is_empty() {
        return Err(Error::Config("no modes selected".into()));
    }
    let ctx = Arc::new(TrialContext::new(cfg)?);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads.or_else(threads_from_env) {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let trials: Vec<Vec<TrialResult>> = pool.install(|| {
        (0..cfg.n_trials)
            .into_par_iter()
            .map(|t| {
                let r = run_paired_trial(&ctx, t, modes);
                progress(t);
                r
            })
            .collect::<Result<_>>()
    })?;
    let curves = pool_curves(&trials)?;
    Ok(CampaignResult {
        config: cfg.clone(),
        modes: modes.to_vec(),
        trials,
        curves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config() -> ScenarioConfig {
        ScenarioConfig {
            detectors: vec![Detector::Energy],
            n_trials: 2,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn link_budget_examples() {
        let lb = link_budget(28.0, 85.28, 7.0, 15.36e6);
        assert!((lb.noise_power_dbm + 95.14).abs() < 0.01, "{}", lb.noise_power_dbm);
        assert!((lb.rx_power_dbm + 57.28).abs() < 0.01);
        assert_eq!(link_budget(23.0, 0.0, 7.0, 15.36e6).rx_power_dbm, 23.0);
        let total = lb.re_energy * SSB_SUBCARRIERS as f64 / 512.0;
        assert!((10.0 * total.log10() - lb.rx_power_dbm).abs() < 1e-9);
    }

    #[test]
    fn rsrp_examples() {
        let m = 4;
        let k = 2;
        let pl: f64 = 1e-9;
        let flat = ChannelRealization {
            h: vec![DMatrix::from_element(m, k, Cf64::new(pl.sqrt(), 0.0)); 3],
            pathloss_db: 90.0,
            clusters: vec![],
        };
        let eta = 0.2;
        assert!((compute_ul_rsrp(&flat, eta) - 10.0 * (eta * pl).log10()).abs() < 1e-9);
        let doubled = ChannelRealization {
            h: flat.h.iter().map(|x| x * Cf64::new(2.0, 0.0)).collect(),
            ..flat.clone()
        };
        let diff = compute_ul_rsrp(&doubled, eta) - compute_ul_rsrp(&flat, eta);
        assert!((diff - 6.0206).abs() < 1e-3);
        let zero = ChannelRealization {
            h: vec![DMatrix::zeros(m, k); 3],
            ..flat
        };
        assert_eq!(compute_ul_rsrp(&zero, eta), RSRP_FLOOR_DBM);
    }

    #[test]
    fn tx_power_pairs_with_array() {
        assert_eq!(ScenarioConfig::with_array(ArrayGeometry::GNB_128).unwrap().tx_power_dbm, 19.0);
        assert_eq!(ScenarioConfig::with_array(ArrayGeometry::GNB_16).unwrap().tx_power_dbm, 28.0);
        assert!(matches!(
            ScenarioConfig::with_array(ArrayGeometry::upa(2, 2, 2)),
            Err(Error::InvalidKey { key, .. }) if key == "tx_power_dbm"
        ));
    }

    #[test]
    fn validation_names_keys() {
        let key_of = |cfg: ScenarioConfig| match cfg.validate() {
            Err(Error::InvalidKey { key, .. }) => key,
            other => panic!("expected key error, got {other:?}"),
        };
        assert_eq!(key_of(ScenarioConfig { n_trials: 1, ..Default::default() }), "n_trials");
        assert_eq!(key_of(ScenarioConfig { eve_obs_time_ms: 20.5, ..Default::default() }), "eve_obs_time_ms");
        assert_eq!(key_of(ScenarioConfig { pci: 1008, ..Default::default() }), "pci");
        assert_eq!(key_of(ScenarioConfig { scs_hz: 15e3, ..Default::default() }), "scs_hz");
        assert_eq!(key_of(ScenarioConfig { detectors: vec![], ..Default::default() }), "detectors");
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn transmission_counts() {
        let ctx = TrialContext::new(&quick_config()).unwrap();
        for trial in 0..20 {
            let setup = TrialSetup::draw(&ctx, trial).unwrap();
            let base = setup.plan(&ctx, Mode::Baseline).unwrap();
            let in_first = base.transmissions.iter().filter(|t| t.burst == 0).count();
            assert_eq!(in_first, 24);
            let mut per_sector = [0; 3];
            base.transmissions.iter().filter(|t| t.burst == 0).for_each(|t| per_sector[t.sector] += 1);
            assert_eq!(per_sector, [8, 8, 8]);
            let csi = setup.plan(&ctx, Mode::Csi).unwrap();
            assert_eq!(csi.transmissions.len(), 1);
            assert_eq!(csi.chosen_sector, Some(csi.transmissions[0].sector));
            let best = setup.ul_rsrp_dbm(&ctx);
            assert_eq!(csi.chosen_sector, Some(select_sector(&best).unwrap()));
        }
    }

    #[test]
    fn synthesized_power_matches_budget() {
        // Single-port, flat unit channel: time-domain power over the SSB equals the
        // transmit power scaled by the occupied fraction of the grid.
        let cfg = quick_config();
        let ctx = TrialContext::new(&cfg).unwrap();
        let mut setup = TrialSetup::draw(&ctx, 0).unwrap();
        let csi = setup.plan(&ctx, Mode::Csi).unwrap();
        let m = cfg.gnb_array.ports();
        let k = cfg.eve_array.ports();
        let s = csi.transmissions[0].sector;
        let mut h = DMatrix::zeros(k, m);
        h[(0, 0)] = Cf64::new(1.0, 0.0);
        setup.dl[s][1].h = vec![h; SSB_SUBCARRIERS];
        let mut plan = csi.clone();
        let mut w = DVector::zeros(m);
        w[0] = Cf64::new(1.0, 0.0);
        plan.precoders = vec![Precoder::new(w, PrecoderLabel::Eigen).unwrap()];
        let rx = setup.synthesize(&ctx, &plan, Terminal::Eve).unwrap();
        // Parseval over each symbol's useful part.
        let t = &plan.transmissions[0];
        let base = ctx.num.symbol_start(t.symbol);
        for l in 0..SSB_SYMBOLS {
            let pos = t.start_sample + ctx.num.symbol_start(t.symbol + l) - base + ctx.num.cp_len(t.symbol + l);
            let energy: f64 = rx[0][pos..pos + 512].iter().map(|v| v.norm_sqr()).sum();
            let col: f64 = setup.ssb.grid.column(l).iter().map(|v| v.norm_sqr()).sum();
            let expected = col * ctx.tx_re_energy;
            assert!((energy / expected - 1.0).abs() < 1e-9, "{energy} vs {expected}");
        }
        let total: f64 = rx[0].iter().map(|v| v.norm_sqr()).sum();
        let span = ctx.num.symbol_start(t.symbol + SSB_SYMBOLS) - base;
        let outside: f64 = rx[0].iter().enumerate()
            .filter(|(n, _)| *n < t.start_sample || *n >= t.start_sample + span)
            .map(|(_, v)| v.norm_sqr())
            .sum();
        assert!(total > 0.0 && outside == 0.0);
        assert!(rx[1..].iter().all(|s| s.iter().all(|v| v.norm() == 0.0)));
    }

    #[test]
    fn csi_mode_leaves_other_sectors_silent() {
        let ctx = TrialContext::new(&quick_config()).unwrap();
        let setup = TrialSetup::draw(&ctx, 3).unwrap();
        let plan = setup.plan(&ctx, Mode::Csi).unwrap();
        let chosen = plan.chosen_sector.unwrap();
        let with_all = setup.synthesize(&ctx, &plan, Terminal::Eve).unwrap();
        let mut muted = setup.clone();
        for (s, pair) in muted.dl.iter_mut().enumerate() {
            if s != chosen {
                for ch in pair.iter_mut() {
                    ch.h.iter_mut().for_each(|m| m.fill(Cf64::new(0.0, 0.0)));
                }
            }
        }
        let without = muted.synthesize(&ctx, &plan, Terminal::Eve).unwrap();
        assert_eq!(with_all, without);
    }

    #[test]
    fn trials_are_deterministic() {
        let ctx = TrialContext::new(&quick_config()).unwrap();
        let a = run_paired_trial(&ctx, 5, &Mode::ALL).unwrap();
        let b = run_paired_trial(&ctx, 5, &Mode::ALL).unwrap();
        assert_eq!(a, b);
        // H0 is shared across modes.
        assert_eq!(a[0].eve_energy_h0(), a[1].eve_energy_h0());
        assert_eq!(a[0].drop, a[1].drop);
        for r in &a {
            for s in &r.stats {
                assert!(s.h0.unwrap().is_finite() && s.h0.unwrap() >= 0.0);
                assert!(s.h1.unwrap().is_finite() && s.h1.unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn fixed_drop_and_colocation() {
        let cfg = ScenarioConfig {
            fixed_drop: Some(FixedDrop {
                ue: [40.0, 10.0],
                eve: [-30.0, 50.0],
            }),
            eve_colocated: true,
            ..quick_config()
        };
        let ctx = TrialContext::new(&cfg).unwrap();
        let setup = TrialSetup::draw(&ctx, 0).unwrap();
        assert_eq!(setup.drop.eve, [40.0, 10.0]);
        for pair in &setup.dl {
            assert_eq!(pair[0].h, pair[1].h);
        }
    }
}
