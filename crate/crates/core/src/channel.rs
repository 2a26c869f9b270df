//! MIMO channels between the three gNB sectors and the two terminals.
//!
//! The propagation model is a six-cluster ray model: one LOS ray with a
//! 10 dB Rice factor plus five scattered clusters with exponential delays
//! and Laplacian angle offsets, scaled by UMi street-canyon LOS path loss and
//! a cosine sector pattern. Uplink channels are `M x K` (gNB ports x terminal
//! ports); the downlink follows from TDD reciprocity.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Cf64, Error, Result};

/// Uniform planar array, `rows` (vertical) x `cols` (horizontal) x `pols`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub rows: usize,
    pub cols: usize,
    pub pols: usize,
    /// Element spacing in wavelengths.
    #[serde(default = "half_wavelength")]
    pub spacing: f64,
}

fn half_wavelength() -> f64 {
    0.5
}

impl ArrayGeometry {
    pub const GNB_16: ArrayGeometry = ArrayGeometry::upa(4, 2, 2);
    pub const GNB_128: ArrayGeometry = ArrayGeometry::upa(8, 8, 2);
    pub const TERMINAL: ArrayGeometry = ArrayGeometry::upa(2, 1, 2);

    pub const fn upa(rows: usize, cols: usize, pols: usize) -> Self {
        Self {
            rows,
            cols,
            pols,
            spacing: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || !(1..=2).contains(&self.pols) {
            return Err(Error::Config(format!(
                "array {}x{}x{} needs nonzero rows/cols and 1 or 2 polarizations",
                self.rows, self.cols, self.pols
            )));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::Config(format!("element spacing {} must be positive", self.spacing)));
        }
        Ok(())
    }

    /// Spatial elements per polarization.
    pub fn elements(&self) -> usize {
        self.rows * self.cols
    }

    /// Total antenna ports (`M` or `K`).
    pub fn ports(&self) -> usize {
        self.elements() * self.pols
    }
}

/// Array response toward (`azimuth`, `elevation`), in radians from broadside.
///
/// Ports are polarization-major: port `p * rows * cols + r * cols + c`. Both
/// polarizations carry the same spatial phase profile.
pub fn steering_vector(arr: &ArrayGeometry, azimuth: f64, elevation: f64) -> DVector<Cf64> {
    let spatial = spatial_response(arr, azimuth, elevation);
    DVector::from_fn(arr.ports(), |i, _| spatial[i % arr.elements()])
}

fn spatial_response(arr: &ArrayGeometry, azimuth: f64, elevation: f64) -> Vec<Cf64> {
    let v = elevation.sin();
    let h = elevation.cos() * azimuth.sin();
    let mut out = Vec::with_capacity(arr.elements());
    for r in 0..arr.rows {
        for c in 0..arr.cols {
            let phase = 2.0 * PI * arr.spacing * (r as f64 * v + c as f64 * h);
            out.push(Cf64::from_polar(1.0, phase));
        }
    }
    out
}

/// UMi street-canyon LOS path loss in dB for a 2-D distance `d_m` and carrier in GHz.
pub fn pathloss_db(d_m: f64, fc_ghz: f64) -> Result<f64> {
    if !(d_m >= 1.0) || !d_m.is_finite() {
        return Err(Error::Domain(format!("distance {d_m} m is below 1 m")));
    }
    if !(fc_ghz > 0.0) || !fc_ghz.is_finite() {
        return Err(Error::Domain(format!("carrier {fc_ghz} GHz must be positive")));
    }
    Ok(32.4 + 21.0 * d_m.log10() + 20.0 * fc_ghz.log10())
}

/// Which terminal a link reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Terminal {
    Ue,
    Eve,
}

/// Sector-to-terminal link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub sector: usize,
    pub terminal: Terminal,
}

/// Single-site, three-sector geometry with one UE and one eavesdropper (meters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropGeometry {
    pub gnb: [f64; 2],
    pub sector_boresights_rad: [f64; 3],
    pub ue: [f64; 2],
    pub eve: [f64; 2],
}

pub const CELL_RADIUS_M: f64 = 100.0;
pub const MIN_DISTANCE_M: f64 = 10.0;

impl DropGeometry {
    pub fn new(ue: [f64; 2], eve: [f64; 2]) -> Self {
        Self {
            gnb: [0.0, 0.0],
            sector_boresights_rad: [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0],
            ue,
            eve,
        }
    }

    pub fn position(&self, terminal: Terminal) -> [f64; 2] {
        match terminal {
            Terminal::Ue => self.ue,
            Terminal::Eve => self.eve,
        }
    }

    /// Distance and global azimuth from the gNB to `terminal`.
    pub fn polar(&self, terminal: Terminal) -> (f64, f64) {
        let p = self.position(terminal);
        let (dx, dy) = (p[0] - self.gnb[0], p[1] - self.gnb[1]);
        (dx.hypot(dy), dy.atan2(dx))
    }

    pub fn validate(&self, radius: f64, min_distance: f64) -> Result<()> {
        for t in [Terminal::Ue, Terminal::Eve] {
            let (d, _) = self.polar(t);
            if d < min_distance || d > radius {
                return Err(Error::Config(format!(
                    "{t:?} at {d:.1} m lies outside the [{min_distance}, {radius}] m ring"
                )));
            }
        }
        Ok(())
    }
}

fn draw_position<R: Rng + ?Sized>(radius: f64, min_distance: f64, rng: &mut R) -> [f64; 2] {
    let r2 = rng.random_range(min_distance * min_distance..radius * radius);
    let phi = rng.random_range(-PI..PI);
    let r = r2.sqrt();
    [r * phi.cos(), r * phi.sin()]
}

/// Uniform drop of UE and eavesdropper over the cell disc, outside `min_distance`.
pub fn draw_drop<R: Rng + ?Sized>(radius: f64, min_distance: f64, rng: &mut R) -> DropGeometry {
    let ue = draw_position(radius, min_distance, rng);
    let eve = draw_position(radius, min_distance, rng);
    DropGeometry::new(ue, eve)
}

/// Parameters of the clustered ray model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub n_clusters: usize,
    pub rice_k_db: f64,
    pub delay_spread_s: f64,
    pub angle_spread_deg: f64,
    /// Half-power beamwidth of the sector pattern.
    pub sector_hpbw_deg: f64,
    pub sector_pattern: bool,
    pub scs_hz: f64,
    pub carrier_hz: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            n_clusters: 6,
            rice_k_db: 10.0,
            delay_spread_s: 100e-9,
            angle_spread_deg: 10.0,
            sector_hpbw_deg: 70.0,
            sector_pattern: true,
            scs_hz: 30_000.0,
            carrier_hz: 3.5e9,
        }
    }
}

/// Power gain of the cosine sector pattern at `phi` radians off boresight.
///
/// `cos(phi)^n` with `n` chosen for half power at `hpbw / 2`; zero behind the panel.
pub fn sector_gain(phi: f64, hpbw_deg: f64) -> f64 {
    let phi = wrap_angle(phi);
    if phi.abs() >= PI / 2.0 {
        return 0.0;
    }
    let n = 0.5f64.ln() / (hpbw_deg.to_radians() / 2.0).cos().ln();
    phi.cos().powf(n)
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = (a + PI) % (2.0 * PI);
    if a < 0.0 {
        a += 2.0 * PI;
    }
    a - PI
}

fn laplacian<R: Rng + ?Sized>(rms: f64, rng: &mut R) -> f64 {
    let b = rms / std::f64::consts::SQRT_2;
    let u: f64 = rng.random_range(-0.5..0.5);
    -b * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

/// One propagation cluster. Angles in radians; departure azimuth is in the
/// sector's local frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub delay_s: f64,
    pub az_dep: f64,
    pub el_dep: f64,
    pub az_arr: f64,
    pub el_arr: f64,
    /// Normalized power (all clusters sum to one) before the sector pattern.
    pub power: f64,
    pub pattern_gain: f64,
    /// Unit-modulus polarization gains, row-major `[gnb pol][terminal pol]`.
    pub pol_gains: [Cf64; 4],
}

/// Per-subcarrier uplink channel matrices plus the large-scale parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<DMatrix<Cf64>>,
    pub pathloss_db: f64,
    pub clusters: Vec<Cluster>,
}

impl ChannelRealization {
    pub fn n_subcarriers(&self) -> usize {
        self.h.len()
    }

    /// Mean of `||H[n]||_F^2` over subcarriers.
    pub fn mean_frobenius_sqr(&self) -> f64 {
        if self.h.is_empty() {
            return 0.0;
        }
        self.h.iter().map(|m| m.norm_squared()).sum::<f64>() / self.h.len() as f64
    }
}

/// Draws the cluster set for `link`. The random draws do not depend on the
/// array sizes, so channels for different arrays share their propagation.
pub fn draw_clusters<R: Rng + ?Sized>(
    geom: &DropGeometry,
    link: Link,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<(Vec<Cluster>, f64)> {
    if params.n_clusters == 0 {
        return Err(Error::Config("channel needs at least one cluster".into()));
    }
    let (distance, azimuth) = geom.polar(link.terminal);
    let pl = pathloss_db(distance, params.carrier_hz / 1e9)?;
    let los_az = wrap_angle(azimuth - geom.sector_boresights_rad[link.sector]);
    let arrival_az = wrap_angle(azimuth + PI);
    let spread = params.angle_spread_deg.to_radians();

    let rice = 10f64.powf(params.rice_k_db / 10.0);
    let n_nlos = params.n_clusters - 1;
    let mut delays: Vec<f64> = (0..n_nlos)
        .map(|_| -params.delay_spread_s * (1.0 - rng.random::<f64>()).ln())
        .collect();
    delays.sort_by(f64::total_cmp);
    let raw: Vec<f64> = delays
        .iter()
        .map(|&tau| if params.delay_spread_s > 0.0 { (-tau / params.delay_spread_s).exp() } else { 1.0 })
        .collect();
    let raw_sum: f64 = raw.iter().sum();
    let los_power = if n_nlos == 0 { 1.0 } else { rice / (rice + 1.0) };

    let mut clusters = Vec::with_capacity(params.n_clusters);
    for l in 0..params.n_clusters {
        let (delay_s, power, az_dep, el_dep, az_arr, el_arr) = if l == 0 {
            (0.0, los_power, los_az, 0.0, arrival_az, 0.0)
        } else {
            (
                delays[l - 1],
                (1.0 - los_power) * raw[l - 1] / raw_sum,
                wrap_angle(los_az + laplacian(spread, rng)),
                laplacian(spread, rng),
                wrap_angle(arrival_az + laplacian(spread, rng)),
                laplacian(spread, rng),
            )
        };
        let pol_gains = std::array::from_fn(|_| Cf64::from_polar(1.0, rng.random_range(-PI..PI)));
        let pattern_gain = if params.sector_pattern {
            sector_gain(az_dep, params.sector_hpbw_deg)
        } else {
            1.0
        };
        clusters.push(Cluster {
            delay_s,
            az_dep,
            el_dep,
            az_arr,
            el_arr,
            power,
            pattern_gain,
            pol_gains,
        });
    }
    Ok((clusters, pl))
}

/// Builds `H[n]` for `n_subcarriers` subcarriers from a cluster set.
pub fn realize(
    clusters: &[Cluster],
    pathloss_db: f64,
    arr_gnb: &ArrayGeometry,
    arr_term: &ArrayGeometry,
    n_subcarriers: usize,
    scs_hz: f64,
) -> ChannelRealization {
    let (m, k) = (arr_gnb.ports(), arr_term.ports());
    let amplitude = 10f64.powf(-pathloss_db / 20.0);
    let components: Vec<DMatrix<Cf64>> = clusters
        .iter()
        .map(|c| {
            let ag = spatial_response(arr_gnb, c.az_dep, c.el_dep);
            let at = spatial_response(arr_term, c.az_arr, c.el_arr);
            let scale = amplitude * (c.power * c.pattern_gain).sqrt();
            DMatrix::from_fn(m, k, |i, j| {
                let (p, q) = (i / arr_gnb.elements(), j / arr_term.elements());
                let g = c.pol_gains[2 * p + q];
                g * ag[i % arr_gnb.elements()] * at[j % arr_term.elements()].conj() * scale
            })
        })
        .collect();
    let h = (0..n_subcarriers)
        .map(|n| {
            let mut acc = DMatrix::zeros(m, k);
            for (c, comp) in clusters.iter().zip(&components) {
                let rot = Cf64::from_polar(1.0, -2.0 * PI * n as f64 * scs_hz * c.delay_s);
                acc += comp * rot;
            }
            acc
        })
        .collect();
    ChannelRealization {
        h,
        pathloss_db,
        clusters: clusters.to_vec(),
    }
}

/// Draws an uplink channel realization for `link`.
pub fn draw_channel<R: Rng + ?Sized>(
    geom: &DropGeometry,
    link: Link,
    arr_gnb: &ArrayGeometry,
    arr_term: &ArrayGeometry,
    n_subcarriers: usize,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let (clusters, pl) = draw_clusters(geom, link, params, rng)?;
    Ok(realize(&clusters, pl, arr_gnb, arr_term, n_subcarriers, params.scs_hz))
}

/// Downlink channel under TDD reciprocity: `H_dl[n] = H_ul[n]^T`.
pub fn downlink_of(ul: &ChannelRealization) -> ChannelRealization {
    ChannelRealization {
        h: ul.h.iter().map(|m| m.transpose()).collect(),
        pathloss_db: ul.pathloss_db,
        clusters: ul.clusters.clone(),
    }
}

const CHANNEL_MAGIC: &[u8; 4] = b"SSCH";

/// Writes `h` as: magic `SSCH`, u32 version, u32 N, u32 rows, u32 cols,
/// f64 path loss (dB), then N row-major matrices of little-endian f32 I/Q.
pub fn write_channel(path: impl AsRef<Path>, ch: &ChannelRealization) -> Result<()> {
    let path = path.as_ref();
    let (rows, cols) = ch.h.first().map_or((0, 0), |m| m.shape());
    let mut bytes = Vec::with_capacity(28 + ch.h.len() * rows * cols * 8);
    bytes.extend_from_slice(CHANNEL_MAGIC);
    for v in [1u32, ch.h.len() as u32, rows as u32, cols as u32] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes.extend_from_slice(&ch.pathloss_db.to_le_bytes());
    for m in &ch.h {
        for i in 0..rows {
            for j in 0..cols {
                bytes.extend_from_slice(&(m[(i, j)].re as f32).to_le_bytes());
                bytes.extend_from_slice(&(m[(i, j)].im as f32).to_le_bytes());
            }
        }
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`write_channel`]; cluster metadata is not stored.
pub fn read_channel(path: impl AsRef<Path>) -> Result<ChannelRealization> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: &str| Error::Parse {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 28 || &bytes[..4] != CHANNEL_MAGIC {
        return Err(bad("missing channel header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    if word(0) != 1 {
        return Err(bad("unsupported channel format version"));
    }
    let (n, rows, cols) = (word(1), word(2), word(3));
    let pathloss_db = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let payload = &bytes[28..];
    if payload.len() != n * rows * cols * 8 {
        return Err(bad("payload length does not match header"));
    }
    let mut values = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64);
    let h = (0..n)
        .map(|_| {
            let data: Vec<Cf64> = (0..rows * cols)
                .map(|_| Cf64::new(values.next().unwrap(), values.next().unwrap()))
                .collect();
            DMatrix::from_row_slice(rows, cols, &data)
        })
        .collect();
    Ok(ChannelRealization {
        h,
        pathloss_db,
        clusters: Vec::new(),
    })
}
