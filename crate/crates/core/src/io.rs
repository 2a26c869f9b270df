//! Configuration parsing and result emission: ROC CSV, per-trial CSV, run
//! manifest and SVG plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channel::{ArrayGeometry, Terminal};
use crate::scenario::{
    default_tx_power_dbm, observer_name, CampaignResult, Detector, Mode, ScenarioConfig,
};
use crate::{Error, Result};

/// Header of the ROC CSV.
pub const ROC_HEADER: [&str; 8] = ["mode", "detector", "observer", "antennas", "pfa", "pd", "n_h0", "n_h1"];

fn key_error(key: &str, reason: impl Into<String>) -> Error {
    Error::InvalidKey {
        key: key.into(),
        reason: reason.into(),
    }
}

fn field<T: DeserializeOwned>(key: &str, v: &Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| key_error(key, e.to_string()))
}

/// Accepts `{"rows": 4, "cols": 2, "pols": 2}` or the shorthand `"4x2x2"`.
fn array_field(key: &str, v: &Value) -> Result<ArrayGeometry> {
    if let Some(s) = v.as_str() {
        let dims: Vec<usize> = s
            .split(['x', 'X', '×'])
            .map(|d| d.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| key_error(key, format!("`{s}` is not of the form ROWSxCOLSxPOLS")))?;
        return match dims[..] {
            [r, c, p] => Ok(ArrayGeometry::upa(r, c, p)),
            _ => Err(key_error(key, format!("`{s}` is not of the form ROWSxCOLSxPOLS"))),
        };
    }
    field(key, v)
}

/// Parses a JSON config. Absent keys (or `null`) take the defaults; the
/// transmit power follows the gNB array unless given.
pub fn parse_config_str(text: &str, origin: &Path) -> Result<ScenarioConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        reason: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| Error::Parse {
        path: origin.to_path_buf(),
        reason: "top level must be a JSON object".into(),
    })?;
    let mut cfg = ScenarioConfig::default();
    let mut tx_power = None;
    for (key, v) in obj {
        if v.is_null() {
            continue;
        }
        let k = key.as_str();
        match k {
            "n_sectors" => cfg.n_sectors = field(k, v)?,
            "sector_width_deg" => cfg.sector_width_deg = field(k, v)?,
            "gnb_array" => cfg.gnb_array = array_field(k, v)?,
            "ue_array" => cfg.ue_array = array_field(k, v)?,
            "eve_array" => cfg.eve_array = array_field(k, v)?,
            "scs_hz" => cfg.scs_hz = field(k, v)?,
            "ssb_period_ms" => cfg.ssb_period_ms = field(k, v)?,
            "eve_bandwidth_hz" => cfg.eve_bandwidth_hz = field(k, v)?,
            "eve_obs_time_ms" => cfg.eve_obs_time_ms = field(k, v)?,
            "tx_power_dbm" => tx_power = Some(field::<f64>(k, v)?),
            "carrier_hz" => cfg.carrier_hz = field(k, v)?,
            "isd_m" => cfg.isd_m = field(k, v)?,
            "min_distance_m" => cfg.min_distance_m = field(k, v)?,
            "mode" => cfg.mode = field(k, v)?,
            "csi_source" => cfg.csi_source = field(k, v)?,
            "ul_pilot_power_dbm" => cfg.ul_pilot_power_dbm = field(k, v)?,
            "detectors" => cfg.detectors = field(k, v)?,
            "correlator_sss" => cfg.correlator_sss = field(k, v)?,
            "noise_figure_db" => cfg.noise_figure_db = field(k, v)?,
            "n_trials" => {
                let n: i64 = field(k, v)?;
                if n < 0 {
                    return Err(key_error(k, format!("{n} is negative")));
                }
                cfg.n_trials = n as usize;
            }
            "seed" => cfg.seed = field(k, v)?,
            "pci" => cfg.pci = field(k, v)?,
            "ssb_offset_subcarriers" => cfg.ssb_offset_subcarriers = field(k, v)?,
            "rice_k_db" => cfg.rice_k_db = field(k, v)?,
            "delay_spread_ns" => cfg.delay_spread_ns = field(k, v)?,
            "angle_spread_deg" => cfg.angle_spread_deg = field(k, v)?,
            "sector_hpbw_deg" => cfg.sector_hpbw_deg = field(k, v)?,
            "sector_pattern" => cfg.sector_pattern = field(k, v)?,
            "fixed_drop" => cfg.fixed_drop = Some(field(k, v)?),
            "eve_colocated" => cfg.eve_colocated = field(k, v)?,
            _ => return Err(key_error(k, "unknown key")),
        }
    }
    cfg.tx_power_dbm = match tx_power {
        Some(p) => p,
        None => default_tx_power_dbm(&cfg.gnb_array).ok_or_else(|| {
            key_error(
                "tx_power_dbm",
                format!("no default for a {}-port gNB array; set it explicitly", cfg.gnb_array.ports()),
            )
        })?,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, path)
}

/// Full JSON snapshot of a config; parsing it gives the same config back.
pub fn config_to_json(cfg: &ScenarioConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}

/// Provenance record written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub modes: Vec<Mode>,
    pub engine_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<PathBuf>,
}

pub fn write_manifest(manifest: &RunManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<RunManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// One ROC curve with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RocSeries {
    pub mode: Mode,
    pub detector: Detector,
    pub observer: Terminal,
    pub antennas: usize,
    pub n_h0: usize,
    pub n_h1: usize,
    pub points: Vec<(f64, f64)>,
}

impl RocSeries {
    pub fn label(&self) -> String {
        format!("{} {} {} M={}", self.mode, self.detector, observer_name(self.observer), self.antennas)
    }

    fn sort_key(&self) -> (&'static str, &'static str, &'static str, usize) {
        (self.mode.as_str(), self.detector.as_str(), observer_name(self.observer), self.antennas)
    }
}

/// Every pooled curve of `result`.
pub fn series_of(result: &CampaignResult) -> Vec<RocSeries> {
    result
        .curves
        .iter()
        .map(|(k, c)| RocSeries {
            mode: k.mode,
            detector: k.detector,
            observer: k.observer,
            antennas: result.antennas(),
            n_h0: c.n_h0,
            n_h1: c.n_h1,
            points: c.points.clone(),
        })
        .collect()
}

/// Formats `x` in plain decimal notation with six significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".into();
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else if (exp as usize) < digits.len() - 1 {
        let (int, frac) = digits.split_at(exp as usize + 1);
        format!("{int}.{frac}")
    } else {
        format!("{}{}", digits, "0".repeat(exp as usize + 1 - digits.len()))
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// Writes the ROC CSV, rows sorted by mode, detector, observer, antennas,
/// then pfa and pd.
pub fn emit_roc_csv(series: &[RocSeries], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if series.is_empty() {
        return Err(Error::Domain("no ROC curves to write".into()));
    }
    let mut rows: Vec<(&RocSeries, f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().map(move |&(f, d)| (s, f, d)))
        .collect();
    rows.sort_by(|a, b| {
        a.0.sort_key()
            .cmp(&b.0.sort_key())
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
    });
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(ROC_HEADER).map_err(|e| csv_error(path, e))?;
    for (s, pfa, pd) in rows {
        w.write_record([
            s.mode.as_str().to_string(),
            s.detector.as_str().to_string(),
            observer_name(s.observer).to_string(),
            s.antennas.to_string(),
            format_sig6(pfa),
            format_sig6(pd),
            s.n_h0.to_string(),
            s.n_h1.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            reason: format!("{other:?}"),
        },
    }
}

fn parse_observer(s: &str) -> Option<Terminal> {
    match s {
        "ue" => Some(Terminal::Ue),
        "eve" => Some(Terminal::Eve),
        _ => None,
    }
}

fn parse_detector(s: &str) -> Option<Detector> {
    match s {
        "energy" => Some(Detector::Energy),
        "correlator" => Some(Detector::Correlator),
        _ => None,
    }
}

#[derive(Debug, Deserialize)]
struct RocRecord {
    mode: String,
    detector: String,
    observer: String,
    antennas: usize,
    pfa: f64,
    pd: f64,
    n_h0: usize,
    n_h1: usize,
}

/// Reads a ROC CSV back into curves, grouped by their label columns.
pub fn read_roc_csv(path: impl AsRef<Path>) -> Result<Vec<RocSeries>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out: Vec<RocSeries> = Vec::new();
    for (i, rec) in r.deserialize::<RocRecord>().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let bad = |what: &str| Error::Parse {
            path: path.to_path_buf(),
            reason: format!("row {}: unknown {what}", i + 1),
        };
        let mode: Mode = rec.mode.parse().map_err(|_| bad("mode"))?;
        let detector = parse_detector(&rec.detector).ok_or_else(|| bad("detector"))?;
        let observer = parse_observer(&rec.observer).ok_or_else(|| bad("observer"))?;
        match out.iter_mut().find(|s| {
            s.mode == mode && s.detector == detector && s.observer == observer && s.antennas == rec.antennas
        }) {
            Some(s) => s.points.push((rec.pfa, rec.pd)),
            None => out.push(RocSeries {
                mode,
                detector,
                observer,
                antennas: rec.antennas,
                n_h0: rec.n_h0,
                n_h1: rec.n_h1,
                points: vec![(rec.pfa, rec.pd)],
            }),
        }
    }
    Ok(out)
}

/// Writes per-trial statistics, one row per (trial, mode, observer, detector).
pub fn emit_trials_csv(result: &CampaignResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record([
        "trial", "mode", "observer", "detector", "h0", "h1", "chosen_sector", "transmissions", "ue_x", "ue_y",
        "eve_x", "eve_y",
    ])
    .map_err(|e| csv_error(path, e))?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in result.trials.iter().flatten() {
        for s in &r.stats {
            w.write_record([
                r.trial.to_string(),
                r.mode.as_str().to_string(),
                observer_name(s.observer).to_string(),
                s.detector.as_str().to_string(),
                opt(s.h0),
                opt(s.h1),
                r.chosen_sector.map(|c| c.to_string()).unwrap_or_default(),
                r.transmissions.len().to_string(),
                r.drop.ue[0].to_string(),
                r.drop.ue[1].to_string(),
                r.drop.eve[0].to_string(),
                r.drop.eve[1].to_string(),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const PLOT_WIDTH: f64 = 640.0;
const PLOT_HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 220.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Maps a point of the unit square to SVG coordinates.
pub fn plot_coords(pfa: f64, pd: f64) -> (f64, f64) {
    let w = PLOT_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let h = PLOT_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    (MARGIN_LEFT + pfa * w, MARGIN_TOP + (1.0 - pd) * h)
}

/// Inverse of [`plot_coords`].
pub fn data_coords(x: f64, y: f64) -> (f64, f64) {
    let w = PLOT_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let h = PLOT_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    ((x - MARGIN_LEFT) / w, 1.0 - (y - MARGIN_TOP) / h)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the curves as a standalone SVG document.
pub fn render_plot(series: &[RocSeries]) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Domain("no ROC curves to plot".into()));
    }
    let mut sorted: Vec<&RocSeries> = series.iter().collect();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_WIDTH}" height="{PLOT_HEIGHT}" viewBox="0 0 {PLOT_WIDTH} {PLOT_HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0) = plot_coords(0.0, 0.0);
    let (x1, y1) = plot_coords(1.0, 1.0);
    let _ = writeln!(
        svg,
        r#"<rect class="axes" x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let (x, _) = plot_coords(t, 0.0);
        let (_, y) = plot_coords(0.0, t);
        let _ = writeln!(svg, r##"<line x1="{x}" y1="{y0}" x2="{x}" y2="{y1}" stroke="#dddddd"/>"##);
        let _ = writeln!(svg, r##"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#dddddd"/>"##);
        let _ = writeln!(svg, r#"<text x="{x}" y="{}" text-anchor="middle">{t:.1}</text>"#, y0 + 18.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{t:.1}</text>"#, x0 - 8.0, y + 4.0);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">Probability of false alarm</text>"#,
        (x0 + x1) / 2.0,
        PLOT_HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(18 {}) rotate(-90)" text-anchor="middle">Probability of detection</text>"#,
        (y0 + y1) / 2.0
    );
    let _ = writeln!(svg, r#"<g class="curves" fill="none" stroke-width="1.8">"#);
    for (i, s) in sorted.iter().enumerate() {
        let mut pts: Vec<(f64, f64)> = s.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let coords: Vec<String> = pts
            .iter()
            .map(|&(f, d)| {
                let (x, y) = plot_coords(f.clamp(0.0, 1.0), d.clamp(0.0, 1.0));
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let dash = if s.mode == Mode::Csi { r#" stroke-dasharray="6 3""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline data-label="{}" stroke="{}"{dash} points="{}"/>"#,
            escape(&s.label()),
            PALETTE[i % PALETTE.len()],
            coords.join(" ")
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (i, s) in sorted.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 20.0 * i as f64;
        let x = x1 + 15.0;
        let dash = if s.mode == Mode::Csi { r#" stroke-dasharray="6 3""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="1.8"{dash}/>"#,
            x + 24.0,
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(
            svg,
            r#"<text class="legend-entry" x="{}" y="{}">{}</text>"#,
            x + 30.0,
            y + 4.0,
            escape(&s.label())
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes [`render_plot`] output to `path`. Nothing is written on error.
pub fn emit_plot(series: &[RocSeries], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let svg = render_plot(series)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0.00000");
        assert_eq!(format_sig6(1.0), "1.00000");
        assert_eq!(format_sig6(0.5), "0.500000");
        assert_eq!(format_sig6(1.0 / 3.0), "0.333333");
        assert_eq!(format_sig6(0.9999996), "1.00000");
        assert_eq!(format_sig6(0.0123456789), "0.0123457");
        assert_eq!(format_sig6(123456.7), "123457");
        assert_eq!(format_sig6(12.5), "12.5000");
        assert_eq!(format_sig6(-0.25), "-0.250000");
    }

    #[test]
    fn empty_config_is_default() {
        let cfg = parse_config_str("{}", Path::new("mem")).unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.gnb_array.ports(), 16);
        assert_eq!(cfg.tx_power_dbm, 28.0);
        assert_eq!(cfg.isd_m, 200.0);
    }

    #[test]
    fn large_array_gets_its_power() {
        let cfg = parse_config_str(r#"{"gnb_array": "8x8x2"}"#, Path::new("mem")).unwrap();
        assert_eq!(cfg.gnb_array, ArrayGeometry::GNB_128);
        assert_eq!(cfg.tx_power_dbm, 19.0);
        let cfg = parse_config_str(r#"{"gnb_array": {"rows": 8, "cols": 8, "pols": 2}, "tx_power_dbm": 30}"#, Path::new("mem")).unwrap();
        assert_eq!(cfg.tx_power_dbm, 30.0);
    }

    #[test]
    fn errors_name_keys() {
        let key = |text: &str| match parse_config_str(text, Path::new("mem")) {
            Err(Error::InvalidKey { key, .. }) => key,
            other => panic!("{text}: {other:?}"),
        };
        assert_eq!(key(r#"{"n_trials": -5}"#), "n_trials");
        assert_eq!(key(r#"{"n_trials": "many"}"#), "n_trials");
        assert_eq!(key(r#"{"gnb_array": "8x8"}"#), "gnb_array");
        assert_eq!(key(r#"{"mode": "sometimes"}"#), "mode");
        assert_eq!(key(r#"{"colour": 1}"#), "colour");
        assert_eq!(key(r#"{"gnb_array": "2x2x2"}"#), "tx_power_dbm");
        assert_eq!(key(r#"{"eve_obs_time_ms": 10}"#), "eve_obs_time_ms");
        assert!(matches!(parse_config_str("{", Path::new("mem")), Err(Error::Parse { .. })));
        assert!(matches!(parse_config_str("[]", Path::new("mem")), Err(Error::Parse { .. })));
        assert!(matches!(parse_config("/nonexistent/cfg.json"), Err(Error::Io { .. })));
    }

    #[test]
    fn snapshot_round_trip() {
        let cfg = ScenarioConfig {
            gnb_array: ArrayGeometry::GNB_128,
            tx_power_dbm: 21.5,
            n_trials: 7,
            seed: 99,
            mode: crate::scenario::ModeSelection::Csi,
            fixed_drop: Some(crate::scenario::FixedDrop {
                ue: [30.0, 5.0],
                eve: [-20.0, 40.0],
            }),
            ..ScenarioConfig::default()
        };
        let once = parse_config_str(&config_to_json(&cfg), Path::new("mem")).unwrap();
        assert_eq!(once, cfg);
        let twice = parse_config_str(&config_to_json(&once), Path::new("mem")).unwrap();
        assert_eq!(twice, once);
    }

    fn diag(mode: Mode) -> RocSeries {
        RocSeries {
            mode,
            detector: Detector::Energy,
            observer: Terminal::Eve,
            antennas: 16,
            n_h0: 2,
            n_h1: 2,
            points: vec![(0.0, 0.0), (0.5, 0.5), (1.0, 1.0)],
        }
    }

    #[test]
    fn plot_of_diagonal() {
        let svg = render_plot(&[diag(Mode::Baseline)]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        let coords: Vec<(f64, f64)> = pts
            .split(' ')
            .map(|p| {
                let (x, y) = p.split_once(',').unwrap();
                data_coords(x.parse().unwrap(), y.parse().unwrap())
            })
            .collect();
        let (f0, d0) = coords[0];
        let (f1, d1) = *coords.last().unwrap();
        assert!(f0.abs() < 1e-3 && d0.abs() < 1e-3);
        assert!((f1 - 1.0).abs() < 1e-3 && (d1 - 1.0).abs() < 1e-3);
        assert!(render_plot(&[]).is_err());
    }

    #[test]
    fn legend_has_one_entry_per_curve() {
        let mut a = diag(Mode::Baseline);
        let b = diag(Mode::Csi);
        let mut c = diag(Mode::Baseline);
        c.detector = Detector::Correlator;
        let mut d = diag(Mode::Baseline);
        d.observer = Terminal::Ue;
        a.antennas = 128;
        let svg = render_plot(&[a, b, c, d]).unwrap();
        assert_eq!(svg.matches("class=\"legend-entry\"").count(), 4);
    }
}
