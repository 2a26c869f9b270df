//! NR synchronization signals: PSS/SSS sequences, the SSB resource grid and
//! the Case B burst schedule.
//!
//! Sequence generators follow TS 38.211 7.4.2; RE mapping follows
//! TS 38.211 Table 7.4.3.1-1 and burst positions TS 38.213 4.1.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::ofdm::ResourceGrid;
use crate::{Cf64, Error, Result};

/// PSS/SSS length.
pub const SEQ_LEN: usize = 127;
/// SSB width in subcarriers (20 RBs).
pub const SSB_SUBCARRIERS: usize = 240;
/// SSB duration in OFDM symbols.
pub const SSB_SYMBOLS: usize = 4;
/// First subcarrier of the PSS/SSS within the SSB.
pub const SS_FIRST_SUBCARRIER: usize = 56;
/// Number of nonzero resource elements in an SSB.
pub const SSB_OCCUPIED_RES: usize = 830;

pub const N_ID_1_COUNT: u16 = 336;
pub const N_ID_2_COUNT: u8 = 3;

/// A length-127 BPSK synchronization sequence with entries in {+1, -1}.
pub type SyncSequence = [i8; SEQ_LEN];

/// Physical cell identity split into its SSS (`n_id_1`) and PSS (`n_id_2`) parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIdentity {
    n_id_1: u16,
    n_id_2: u8,
}

impl CellIdentity {
    pub fn new(n_id_1: u16, n_id_2: u8) -> Result<Self> {
        if n_id_1 >= N_ID_1_COUNT {
            return Err(Error::Domain(format!("n_id_1 = {n_id_1} outside [0, 335]")));
        }
        check_n_id_2(n_id_2)?;
        Ok(Self { n_id_1, n_id_2 })
    }

    pub fn from_pci(pci: u16) -> Result<Self> {
        if pci > 1007 {
            return Err(Error::Domain(format!("PCI {pci} outside [0, 1007]")));
        }
        Ok(Self {
            n_id_1: pci / 3,
            n_id_2: (pci % 3) as u8,
        })
    }

    pub fn pci(&self) -> u16 {
        3 * self.n_id_1 + self.n_id_2 as u16
    }

    pub fn n_id_1(&self) -> u16 {
        self.n_id_1
    }

    pub fn n_id_2(&self) -> u8 {
        self.n_id_2
    }
}

fn check_n_id_2(n_id_2: u8) -> Result<()> {
    if n_id_2 >= N_ID_2_COUNT {
        return Err(Error::Domain(format!("n_id_2 = {n_id_2} outside {{0, 1, 2}}")));
    }
    Ok(())
}

/// Runs the 7-stage binary recurrence `x(i+7) = (x(i+tap) + x(i)) mod 2`
/// from `init = [x(0), ..., x(6)]`.
fn m_sequence(init: [u8; 7], tap: usize) -> [u8; SEQ_LEN] {
    let mut x = [0u8; SEQ_LEN];
    x[..7].copy_from_slice(&init);
    for i in 0..SEQ_LEN - 7 {
        x[i + 7] = (x[i + tap] + x[i]) % 2;
    }
    x
}

fn bpsk(bit: u8) -> i8 {
    1 - 2 * bit as i8
}

// x(6..0) = 1110110
const PSS_INIT: [u8; 7] = [0, 1, 1, 0, 1, 1, 1];
// x(6..0) = 0000001
const SSS_INIT: [u8; 7] = [1, 0, 0, 0, 0, 0, 0];

/// Primary synchronization sequence for `n_id_2`.
pub fn gen_pss(n_id_2: u8) -> Result<SyncSequence> {
    check_n_id_2(n_id_2)?;
    let x = m_sequence(PSS_INIT, 4);
    let shift = 43 * n_id_2 as usize;
    Ok(std::array::from_fn(|n| bpsk(x[(n + shift) % SEQ_LEN])))
}

/// Cyclic shifts `(m0, m1)` applied to the two SSS m-sequences.
pub fn sss_shifts(cell: CellIdentity) -> (usize, usize) {
    let n1 = cell.n_id_1 as usize;
    let m0 = 15 * (n1 / 112) + 5 * cell.n_id_2 as usize;
    let m1 = n1 % 112;
    (m0, m1)
}

/// Secondary synchronization sequence for `cell`.
pub fn gen_sss(cell: CellIdentity) -> SyncSequence {
    let x0 = m_sequence(SSS_INIT, 4);
    let x1 = m_sequence(SSS_INIT, 1);
    let (m0, m1) = sss_shifts(cell);
    std::array::from_fn(|n| bpsk(x0[(n + m0) % SEQ_LEN]) * bpsk(x1[(n + m1) % SEQ_LEN]))
}

/// Resource-element role inside an SSB.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsbRe {
    Pss,
    Sss,
    Pbch,
    Empty,
}

/// Role of subcarrier `k` (0..240) in SSB symbol `l` (0..4).
pub fn ssb_re_role(k: usize, l: usize) -> SsbRe {
    let ss = (SS_FIRST_SUBCARRIER..SS_FIRST_SUBCARRIER + SEQ_LEN).contains(&k);
    match l {
        0 if ss => SsbRe::Pss,
        1 | 3 => SsbRe::Pbch,
        2 if ss => SsbRe::Sss,
        2 if !(48..192).contains(&k) => SsbRe::Pbch,
        _ => SsbRe::Empty,
    }
}

/// One synchronization signal block on its 240 x 4 grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SsbGrid {
    pub grid: ResourceGrid,
    pub cell: CellIdentity,
}

/// Maps PSS, SSS and unit-power QPSK PBCH filler onto a 240 x 4 grid.
pub fn build_ssb_grid<R: Rng + ?Sized>(cell: CellIdentity, rng: &mut R) -> SsbGrid {
    let pss = gen_pss(cell.n_id_2).expect("CellIdentity holds a valid n_id_2");
    let sss = gen_sss(cell);
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    let mut grid = ResourceGrid::zeros(SSB_SUBCARRIERS, SSB_SYMBOLS);
    for l in 0..SSB_SYMBOLS {
        for k in 0..SSB_SUBCARRIERS {
            let value = match ssb_re_role(k, l) {
                SsbRe::Pss => Cf64::new(pss[k - SS_FIRST_SUBCARRIER] as f64, 0.0),
                SsbRe::Sss => Cf64::new(sss[k - SS_FIRST_SUBCARRIER] as f64, 0.0),
                SsbRe::Pbch => {
                    let (i, q): (bool, bool) = (rng.random(), rng.random());
                    Cf64::new(if i { amp } else { -amp }, if q { amp } else { -amp })
                }
                SsbRe::Empty => continue,
            };
            grid.set(k, l, value);
        }
    }
    SsbGrid { grid, cell }
}

/// SSB time-domain pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SsbCase {
    A,
    B,
    C,
    D,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstConfig {
    pub case: SsbCase,
    pub scs_hz: u32,
    pub carrier_hz: f64,
    pub n_beams: usize,
    pub period_ms: u32,
}

impl Default for BurstConfig {
    fn default() -> Self {
        Self {
            case: SsbCase::B,
            scs_hz: 30_000,
            carrier_hz: 3.5e9,
            n_beams: 8,
            period_ms: 20,
        }
    }
}

/// SSB positions inside the half-frame and the burst repetition period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BurstSchedule {
    /// First OFDM symbol of each SSB, counted from the start of the half-frame.
    pub ssb_start_symbols: Vec<usize>,
    pub period_ms: u32,
    pub n_beams: usize,
}

/// OFDM symbols in a 5 ms half-frame at 30 kHz SCS.
pub const HALF_FRAME_SYMBOLS: usize = 140;

pub fn build_burst_schedule(config: &BurstConfig) -> Result<BurstSchedule> {
    if config.case != SsbCase::B || config.scs_hz != 30_000 {
        return Err(Error::Config(format!(
            "unsupported SSB pattern: case {:?} at {} Hz SCS (only case B at 30 kHz)",
            config.case, config.scs_hz
        )));
    }
    if !(410e6..=7.125e9).contains(&config.carrier_hz) {
        return Err(Error::Config(format!(
            "carrier {} Hz is outside FR1",
            config.carrier_hz
        )));
    }
    if ![5, 10, 20, 40, 80, 160].contains(&config.period_ms) {
        return Err(Error::Config(format!(
            "SSB period {} ms is not a valid NR burst period",
            config.period_ms
        )));
    }
    let l_max = if config.carrier_hz <= 3e9 { 4 } else { 8 };
    if config.n_beams == 0 || config.n_beams > l_max {
        return Err(Error::Config(format!(
            "{} SSB beams requested, carrier supports 1..={l_max}",
            config.n_beams
        )));
    }
    let ssb_start_symbols: Vec<usize> = (0..l_max / 4)
        .flat_map(|n| [4, 8, 16, 20].map(|s| s + 28 * n))
        .take(config.n_beams)
        .collect();
    Ok(BurstSchedule {
        ssb_start_symbols,
        period_ms: config.period_ms,
        n_beams: config.n_beams,
    })
}

/// Writes sequences as lines of space-separated `1`/`-1` integers.
pub fn write_sequences(path: impl AsRef<Path>, sequences: &[SyncSequence]) -> Result<()> {
    let mut out = String::new();
    for seq in sequences {
        let line: Vec<String> = seq.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(" ")).expect("writing to a String cannot fail");
    }
    std::fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
}

/// Reads a golden-vector file written by [`write_sequences`].
pub fn read_sequences(path: impl AsRef<Path>) -> Result<Vec<SyncSequence>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |reason: String| Error::Parse {
        path: path.to_path_buf(),
        reason,
    };
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            let values = line
                .split_whitespace()
                .map(|tok| match tok {
                    "1" | "+1" => Ok(1i8),
                    "-1" => Ok(-1i8),
                    other => Err(parse_err(format!("line {}: bad entry {other:?}", i + 1))),
                })
                .collect::<Result<Vec<i8>>>()?;
            <SyncSequence>::try_from(values.as_slice()).map_err(|_| {
                parse_err(format!("line {}: expected {SEQ_LEN} entries, got {}", i + 1, values.len()))
            })
        })
        .collect()
}
