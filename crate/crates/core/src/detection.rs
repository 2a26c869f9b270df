//! Eavesdropper and UE detectors plus empirical ROC construction.
//!
//! The energy detector slides a 20-RB x 4-symbol window over an
//! unsynchronized spectrogram. The correlator searches PSS hypotheses at
//! every sample offset and every RB-aligned frequency offset with FFT-based
//! overlap-save correlation, then adds the best SSS correlation two symbols
//! after the strongest PSS peaks.

use std::sync::Arc;

use num_complex::Complex32;
use rustfft::{Fft, FftPlanner};

use crate::ofdm::{Numerology, OfdmEngine};
use crate::sync_signals::{gen_pss, gen_sss, CellIdentity, SyncSequence, N_ID_1_COUNT, SEQ_LEN};
use crate::{Cf64, Error, Result};

/// Sliding-window geometry of the energy detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyWindowSpec {
    pub width_subcarriers: usize,
    pub width_symbols: usize,
    pub freq_step: usize,
    pub time_step: usize,
    /// Spectrogram hop in samples.
    pub hop: usize,
}

impl Default for EnergyWindowSpec {
    fn default() -> Self {
        Self {
            width_subcarriers: 240,
            width_symbols: 4,
            freq_step: 12,
            time_step: 1,
            hop: 548,
        }
    }
}

/// Maximum windowed energy over a per-antenna spectrogram, combined
/// non-coherently across antennas.
///
/// Spectrogram columns start at `start_offset + c * hop`; the detector has no
/// symbol timing, so `start_offset` is arbitrary.
pub fn energy_statistic(
    streams: &[Vec<Cf64>],
    spec: &EnergyWindowSpec,
    num: &Numerology,
    start_offset: usize,
) -> Result<f64> {
    let n = num.fft_size;
    if spec.freq_step == 0 || spec.time_step == 0 || spec.hop == 0 || spec.width_symbols == 0 {
        return Err(Error::Config("energy window steps must be at least 1".into()));
    }
    if spec.width_subcarriers == 0 || spec.width_subcarriers > n {
        return Err(Error::Config(format!(
            "energy window of {} subcarriers does not fit {n} bins",
            spec.width_subcarriers
        )));
    }
    let len = streams.first().map_or(0, Vec::len);
    let needed = start_offset + (spec.width_symbols - 1) * spec.hop + n;
    if streams.is_empty() || len < needed {
        return Err(Error::Length {
            needed,
            available: len,
        });
    }
    if streams.iter().any(|s| s.len() != len) {
        return Err(Error::Dimension("antenna streams differ in length".into()));
    }
    let n_cols = (len - start_offset - n) / spec.hop + 1;
    let engine = OfdmEngine::new(*num);

    // Per-column prefix sums over band-ordered bins.
    let mut prefix = vec![0.0f64; n_cols * (n + 1)];
    for stream in streams {
        for c in 0..n_cols {
            let pos = start_offset + c * spec.hop;
            let col = engine.analyze_symbol(&stream[pos..pos + n]);
            let row = &mut prefix[c * (n + 1)..(c + 1) * (n + 1)];
            let mut acc = 0.0;
            for (b, v) in col.iter().enumerate() {
                acc += v.norm_sqr();
                row[b + 1] += acc;
            }
        }
    }
    let band = |c: usize, b0: usize| {
        let row = &prefix[c * (n + 1)..];
        row[b0 + spec.width_subcarriers] - row[b0]
    };
    let mut best = 0.0f64;
    for b0 in (0..=n - spec.width_subcarriers).step_by(spec.freq_step) {
        let col_energy: Vec<f64> = (0..n_cols).map(|c| band(c, b0)).collect();
        for c0 in (0..=n_cols - spec.width_symbols).step_by(spec.time_step) {
            let e: f64 = col_energy[c0..c0 + spec.width_symbols].iter().sum();
            best = best.max(e);
        }
    }
    Ok(best)
}

/// Which SSS hypotheses accompany each PSS hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub enum SssSearch {
    /// PSS-only statistic.
    Off,
    /// Every `n_id_1` with the PSS hypothesis' `n_id_2`.
    All,
    /// Only the listed cells whose `n_id_2` matches the PSS hypothesis.
    Cells(Vec<CellIdentity>),
}

/// Hypothesis set of the correlator. Time is always searched at every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorSearchSpec {
    pub pss_candidates: Vec<u8>,
    /// Band index of the first PSS subcarrier for each frequency hypothesis.
    pub freq_offsets: Vec<usize>,
    pub sss: SssSearch,
    /// Samples between the PSS and SSS useful parts (two short-CP symbols).
    pub sss_lag: usize,
    /// Strongest PSS peaks per antenna at which the SSS term is evaluated.
    pub top_k: usize,
}

pub const RB_SUBCARRIERS: usize = 12;

impl CorrelatorSearchSpec {
    /// Blind search: all PSS, every RB offset across the band, all 336 SSS.
    pub fn blind(num: &Numerology) -> Self {
        Self {
            pss_candidates: vec![0, 1, 2],
            freq_offsets: (0..=num.fft_size - SEQ_LEN).step_by(RB_SUBCARRIERS).collect(),
            sss: SssSearch::All,
            sss_lag: 2 * (num.fft_size + num.cp_short),
            top_k: 8,
        }
    }

    /// Search restricted to a known PSS position and a known set of cells.
    pub fn known(num: &Numerology, pss_offset: usize, cells: &[CellIdentity]) -> Self {
        let mut pss: Vec<u8> = cells.iter().map(|c| c.n_id_2()).collect();
        pss.sort_unstable();
        pss.dedup();
        Self {
            pss_candidates: pss,
            freq_offsets: vec![pss_offset],
            sss: SssSearch::Cells(cells.to_vec()),
            sss_lag: 2 * (num.fft_size + num.cp_short),
            top_k: 8,
        }
    }

    pub fn pss_only(mut self) -> Self {
        self.sss = SssSearch::Off;
        self
    }

    fn validate(&self, num: &Numerology) -> Result<()> {
        if self.pss_candidates.is_empty() || self.freq_offsets.is_empty() {
            return Err(Error::Config("correlator hypothesis set is empty".into()));
        }
        if let Some(&k) = self.pss_candidates.iter().find(|&&k| k > 2) {
            return Err(Error::Domain(format!("PSS candidate {k} outside {{0, 1, 2}}")));
        }
        if let Some(&f) = self.freq_offsets.iter().find(|&&f| f + SEQ_LEN > num.fft_size) {
            return Err(Error::Config(format!("frequency offset {f} places the PSS outside the band")));
        }
        if self.top_k == 0 && self.sss != SssSearch::Off {
            return Err(Error::Config("SSS search needs top_k >= 1".into()));
        }
        Ok(())
    }
}

/// A PSS hypothesis peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PssPeak {
    pub value: f64,
    pub time: usize,
    pub n_id_2: u8,
    pub freq_offset: usize,
}

/// FFT overlap-save PSS/SSS correlator.
///
/// Statistics are normalized as `|<rx, ref>|^2 / (||ref||^2 * noise_variance)`.
#[derive(Clone)]
pub struct Correlator {
    num: Numerology,
    block_fft: usize,
    fwd: Arc<dyn Fft<f32>>,
    inv: Arc<dyn Fft<f32>>,
    /// Conjugated length-`block_fft` spectra of the zero-offset PSS references.
    ref_spectra: Vec<Vec<Complex32>>,
    ofdm: OfdmEngine,
}

impl std::fmt::Debug for Correlator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Correlator")
            .field("num", &self.num)
            .field("block_fft", &self.block_fft)
            .finish()
    }
}

impl Correlator {
    pub fn new(num: Numerology) -> Self {
        let block_fft = 4 * num.fft_size;
        let mut planner = FftPlanner::<f32>::new();
        let fwd = planner.plan_fft_forward(block_fft);
        let inv = planner.plan_fft_inverse(block_fft);
        let ofdm = OfdmEngine::new(num);
        let pss = [0u8, 1, 2].map(|k| gen_pss(k).expect("valid n_id_2"));
        let ref_spectra = pss
            .iter()
            .map(|seq| {
                let mut band = vec![Cf64::new(0.0, 0.0); num.fft_size];
                for (i, &d) in seq.iter().enumerate() {
                    band[i] = Cf64::new(d as f64, 0.0);
                }
                let time = ofdm.synthesize_symbol(&band);
                let mut buf = vec![Complex32::new(0.0, 0.0); block_fft];
                for (b, t) in buf.iter_mut().zip(&time) {
                    *b = Complex32::new(t.re as f32, t.im as f32);
                }
                fwd.process(&mut buf);
                buf.iter().map(|v| v.conj()).collect()
            })
            .collect();
        Self {
            num,
            block_fft,
            fwd,
            inv,
            ref_spectra,
            ofdm,
        }
    }

    pub fn numerology(&self) -> &Numerology {
        &self.num
    }

    /// Runs every `(n_id_2, freq_offset)` hypothesis over all sample offsets of
    /// `r` (already scaled to unit noise variance). `visit` receives the
    /// hypothesis index, the first time offset and the normalized statistics
    /// for a run of consecutive offsets.
    fn scan<F>(&self, r: &[Complex32], hyps: &[(u8, usize)], mut visit: F)
    where
        F: FnMut(usize, usize, &mut dyn Iterator<Item = f64>),
    {
        let n = self.num.fft_size;
        let l = self.block_fft;
        if r.len() < n {
            return;
        }
        let positions = r.len() - n + 1;
        let step = l - n + 1;
        let norm = 1.0 / ((l * l) as f64 * SEQ_LEN as f64);
        let mut x = vec![Complex32::new(0.0, 0.0); l];
        let mut z = vec![Complex32::new(0.0, 0.0); l];
        let mut scratch = vec![Complex32::new(0.0, 0.0); self.inv.get_inplace_scratch_len().max(self.fwd.get_inplace_scratch_len())];
        for start in (0..positions).step_by(step) {
            let end = (start + l).min(r.len());
            x[..end - start].copy_from_slice(&r[start..end]);
            x[end - start..].fill(Complex32::new(0.0, 0.0));
            self.fwd.process_with_scratch(&mut x, &mut scratch);
            let valid = step.min(positions - start);
            for (hi, &(h, k0)) in hyps.iter().enumerate() {
                let spec = &self.ref_spectra[h as usize];
                let shift = k0 * l / n;
                for (zm, (xm, sm)) in z[shift..]
                    .iter_mut()
                    .zip(x[shift..].iter().zip(&spec[..l - shift]))
                {
                    *zm = xm * sm;
                }
                for (zm, (xm, sm)) in z[..shift]
                    .iter_mut()
                    .zip(x[..shift].iter().zip(&spec[l - shift..]))
                {
                    *zm = xm * sm;
                }
                self.inv.process_with_scratch(&mut z, &mut scratch);
                let mut values = z[..valid].iter().map(|v| v.norm_sqr() as f64 * norm);
                visit(hi, start, &mut values);
            }
        }
    }

    /// Normalized PSS correlation at every sample offset for one hypothesis.
    pub fn pss_surface(
        &self,
        samples: &[Cf64],
        n_id_2: u8,
        freq_offset: usize,
        noise_variance: f64,
    ) -> Result<Vec<f64>> {
        let r = self.prepare(samples, noise_variance)?;
        let mut out = Vec::with_capacity(r.len() + 1 - self.num.fft_size);
        self.scan(&r, &[(n_id_2, freq_offset)], |_, _, values| out.extend(values));
        Ok(out)
    }

    fn prepare(&self, samples: &[Cf64], noise_variance: f64) -> Result<Vec<Complex32>> {
        if !(noise_variance > 0.0) {
            return Err(Error::Domain(format!("noise variance {noise_variance} must be positive")));
        }
        if samples.len() < self.num.fft_size {
            return Err(Error::Length {
                needed: self.num.fft_size,
                available: samples.len(),
            });
        }
        let s = 1.0 / noise_variance.sqrt();
        Ok(samples
            .iter()
            .map(|v| Complex32::new((v.re * s) as f32, (v.im * s) as f32))
            .collect())
    }

    /// Best SSS correlation for a PSS peak; zero when the SSS window runs past the stream.
    fn sss_term(&self, samples: &[Cf64], scale: f64, peak: &PssPeak, spec: &CorrelatorSearchSpec) -> f64 {
        let n = self.num.fft_size;
        let pos = peak.time + spec.sss_lag;
        if pos + n > samples.len() {
            return 0.0;
        }
        let band = self.ofdm.analyze_symbol(&samples[pos..pos + n]);
        let rx = &band[peak.freq_offset..peak.freq_offset + SEQ_LEN];
        let score = |seq: &SyncSequence| {
            let acc: Cf64 = rx.iter().zip(seq).map(|(y, &d)| y * d as f64).sum();
            acc.norm_sqr() * scale / SEQ_LEN as f64
        };
        match &spec.sss {
            SssSearch::Off => 0.0,
            SssSearch::All => (0..N_ID_1_COUNT)
                .map(|n1| score(&gen_sss(CellIdentity::new(n1, peak.n_id_2).expect("valid ids"))))
                .fold(0.0, f64::max),
            SssSearch::Cells(cells) => cells
                .iter()
                .filter(|c| c.n_id_2() == peak.n_id_2)
                .map(|c| score(&gen_sss(*c)))
                .fold(0.0, f64::max),
        }
    }

    /// Statistic of one antenna stream.
    pub fn antenna_statistic(
        &self,
        samples: &[Cf64],
        spec: &CorrelatorSearchSpec,
        noise_variance: f64,
    ) -> Result<f64> {
        spec.validate(&self.num)?;
        let r = self.prepare(samples, noise_variance)?;
        let hyps: Vec<(u8, usize)> = spec
            .pss_candidates
            .iter()
            .flat_map(|&h| spec.freq_offsets.iter().map(move |&f| (h, f)))
            .collect();
        let mut peaks: Vec<PssPeak> = Vec::new();
        self.scan(&r, &hyps, |hi, start, values| {
            let (mut best, mut at) = (f64::NEG_INFINITY, 0);
            for (i, v) in values.enumerate() {
                if v > best {
                    best = v;
                    at = i;
                }
            }
            peaks.push(PssPeak {
                value: best,
                time: start + at,
                n_id_2: hyps[hi].0,
                freq_offset: hyps[hi].1,
            });
        });
        // Stable order: value descending, then time, then hypothesis.
        peaks.sort_by(|a, b| {
            b.value
                .total_cmp(&a.value)
                .then(a.time.cmp(&b.time))
                .then(a.n_id_2.cmp(&b.n_id_2))
                .then(a.freq_offset.cmp(&b.freq_offset))
        });
        let best_pss = peaks.first().map_or(0.0, |p| p.value.max(0.0));
        if spec.sss == SssSearch::Off {
            return Ok(best_pss);
        }
        let scale = 1.0 / noise_variance;
        Ok(peaks
            .iter()
            .take(spec.top_k)
            .map(|p| p.value + self.sss_term(samples, scale, p, spec))
            .fold(0.0, f64::max))
    }

    /// Maximum over antennas of the per-antenna statistic.
    pub fn statistic(
        &self,
        streams: &[Vec<Cf64>],
        spec: &CorrelatorSearchSpec,
        noise_variance: f64,
    ) -> Result<f64> {
        if streams.is_empty() {
            return Err(Error::Dimension("no antenna streams".into()));
        }
        streams
            .iter()
            .map(|s| self.antenna_statistic(s, spec, noise_variance))
            .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v)))
    }
}

/// Blind or restricted correlator statistic, max over antennas.
pub fn correlator_statistic(
    streams: &[Vec<Cf64>],
    spec: &CorrelatorSearchSpec,
    num: &Numerology,
    noise_variance: f64,
) -> Result<f64> {
    Correlator::new(*num).statistic(streams, spec, noise_variance)
}

/// UE correlator: known PSS position and candidate cells, time searched at every sample.
pub fn ue_correlator_statistic(
    streams: &[Vec<Cf64>],
    pss_offset: usize,
    cells: &[CellIdentity],
    num: &Numerology,
    noise_variance: f64,
) -> Result<f64> {
    let spec = CorrelatorSearchSpec::known(num, pss_offset, cells);
    correlator_statistic(streams, &spec, num, noise_variance)
}

/// Empirical receiver operating characteristic.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(pfa, pd)` sorted by pfa then pd.
    pub points: Vec<(f64, f64)>,
    pub n_h0: usize,
    pub n_h1: usize,
}

/// Sweeps the threshold over every observed statistic (plus one above all of
/// them) and records `(P[h0 >= t], P[h1 >= t])`.
pub fn roc_curve(h0: &[f64], h1: &[f64]) -> Result<RocCurve> {
    if h0.is_empty() || h1.is_empty() {
        return Err(Error::Domain("ROC needs statistics under both hypotheses".into()));
    }
    if h0.iter().chain(h1).any(|v| v.is_nan()) {
        return Err(Error::Domain("NaN detection statistic".into()));
    }
    let mut s0 = h0.to_vec();
    let mut s1 = h1.to_vec();
    s0.sort_by(f64::total_cmp);
    s1.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = s0.iter().chain(&s1).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let frac_at_least = |sorted: &[f64], t: f64| {
        let below = sorted.partition_point(|&v| v < t);
        (sorted.len() - below) as f64 / sorted.len() as f64
    };
    let mut points: Vec<(f64, f64)> = thresholds
        .iter()
        .map(|&t| (frac_at_least(&s0, t), frac_at_least(&s1, t)))
        .collect();
    points.push((0.0, 0.0));
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    points.dedup();
    Ok(RocCurve {
        points,
        n_h0: h0.len(),
        n_h1: h1.len(),
    })
}

impl RocCurve {
    /// Detection probability of the best threshold whose false-alarm rate is at most `pfa`.
    pub fn pd_at_pfa(&self, pfa: f64) -> f64 {
        self.points
            .iter()
            .filter(|(f, _)| *f <= pfa + 1e-12)
            .map(|&(_, d)| d)
            .fold(0.0, f64::max)
    }

    /// Trapezoidal area under the curve.
    pub fn auc(&self) -> f64 {
        auc(self)
    }
}

pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::ResourceGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    const NUM: Numerology = Numerology::NR_30KHZ;

    fn noise(rng: &mut ChaCha8Rng, len: usize, var: f64) -> Vec<Cf64> {
        let s = (var / 2.0).sqrt();
        (0..len)
            .map(|_| Cf64::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s))
            .collect()
    }

    /// One PSS symbol (with CP) at band offset `k0`, amplitude `a` per RE.
    fn pss_symbol(n_id_2: u8, k0: usize, a: f64) -> Vec<Cf64> {
        let mut g = ResourceGrid::zeros(SEQ_LEN, 1);
        g.first_symbol = 1;
        for (i, &d) in gen_pss(n_id_2).unwrap().iter().enumerate() {
            g.set(i, 0, Cf64::new(a * d as f64, 0.0));
        }
        OfdmEngine::new(NUM).modulate(&g, k0).unwrap()
    }

    #[test]
    fn energy_zero_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = EnergyWindowSpec::default();
        let zero = vec![vec![Cf64::new(0.0, 0.0); 6000]; 2];
        assert_eq!(energy_statistic(&zero, &spec, &NUM, 0).unwrap(), 0.0);
        let x = vec![noise(&mut rng, 6000, 1.0), noise(&mut rng, 6000, 1.0)];
        let e = energy_statistic(&x, &spec, &NUM, 17).unwrap();
        let c = Cf64::new(1.5, -2.0);
        let xc: Vec<Vec<Cf64>> = x.iter().map(|s| s.iter().map(|v| v * c).collect()).collect();
        let ec = energy_statistic(&xc, &spec, &NUM, 17).unwrap();
        assert!((ec / e - c.norm_sqr()).abs() < 1e-9);
        assert!(matches!(
            energy_statistic(&[vec![Cf64::new(0.0, 0.0); 1000]], &spec, &NUM, 0),
            Err(Error::Length { .. })
        ));
    }

    #[test]
    fn energy_captures_ssb_footprint() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ssb = crate::sync_signals::build_ssb_grid(CellIdentity::new(0, 0).unwrap(), &mut rng);
        let mut g = ssb.grid.clone();
        g.first_symbol = 4;
        let tx = OfdmEngine::new(NUM).modulate(&g, 136).unwrap();
        let mut x = vec![Cf64::new(0.0, 0.0); 5000];
        for (i, v) in tx.iter().enumerate() {
            x[1000 + i] = *v;
        }
        let spec = EnergyWindowSpec::default();
        let best = (0..548)
            .step_by(37)
            .map(|o| energy_statistic(&[x.clone()], &spec, &NUM, o).unwrap())
            .fold(0.0, f64::max);
        // Unsynchronized columns catch most but not all of the 830 RE of energy.
        assert!(best > 0.6 * 830.0 && best <= 830.0 * (1.0 + 1e-9), "{best}");
    }

    #[test]
    fn scaling_up_never_lowers_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = EnergyWindowSpec::default();
        let x = noise(&mut rng, 4000, 1.0);
        let base = energy_statistic(std::slice::from_ref(&x), &spec, &NUM, 5).unwrap();
        for c in [1.0, 1.01, 2.0, 10.0] {
            let y: Vec<Cf64> = x.iter().map(|v| v * c).collect();
            assert!(energy_statistic(&[y], &spec, &NUM, 5).unwrap() >= base);
        }
    }

    #[test]
    fn surface_matches_direct_correlation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = noise(&mut rng, 3000, 0.5);
        let corr = Correlator::new(NUM);
        let k0 = 120;
        let surface = corr.pss_surface(&x, 2, k0, 0.5).unwrap();
        assert_eq!(surface.len(), 3000 - 511);
        let reference = pss_symbol(2, k0, 1.0);
        let useful = &reference[36..];
        for t in (0..surface.len()).step_by(97) {
            let c: Cf64 = (0..512).map(|n| x[t + n] * useful[n].conj()).sum();
            let direct = c.norm_sqr() / (127.0 * 0.5);
            assert!((surface[t] - direct).abs() < 1e-3 * direct.max(1.0), "t {t}: {} vs {direct}", surface[t]);
        }
    }

    #[test]
    fn clean_pss_peak() {
        let k0 = 192;
        let sym = pss_symbol(0, k0, 1.0);
        let mut x = vec![Cf64::new(0.0, 0.0); 4000];
        let t0 = 1500;
        for (i, v) in sym.iter().enumerate() {
            x[t0 + i] = *v;
        }
        let noise_scale = 0.01;
        let surface = Correlator::new(NUM).pss_surface(&x, 0, k0, noise_scale).unwrap();
        let peak_t = t0 + 36;
        let peak = surface[peak_t];
        assert!((peak - 127.0 / noise_scale).abs() < 1e-3 * peak);
        let far = surface
            .iter()
            .enumerate()
            .filter(|(t, _)| (*t as i64 - peak_t as i64).abs() > 64)
            .map(|(_, v)| *v)
            .fold(0.0, f64::max);
        // Aperiodic autocorrelation of the OFDM PSS for n_id_2 = 0 peaks 18.91 dB
        // below the main lobe (164 samples off), found by brute force.
        let psl = 10.0 * (peak / far).log10();
        assert!((psl - 18.913).abs() < 0.05, "peak {peak} far {far}");
    }

    #[test]
    fn shifted_pss_matches_other_hypothesis() {
        let k0 = 60;
        let mut g = ResourceGrid::zeros(SEQ_LEN, 1);
        g.first_symbol = 1;
        let p0 = gen_pss(0).unwrap();
        for i in 0..SEQ_LEN {
            g.set(i, 0, Cf64::new(p0[(i + 43) % SEQ_LEN] as f64, 0.0));
        }
        let shifted = OfdmEngine::new(NUM).modulate(&g, k0).unwrap();
        let plain = pss_symbol(0, k0, 1.0);
        let corr = Correlator::new(NUM);
        let a = corr.pss_surface(&shifted, 1, k0, 1.0).unwrap();
        let b = corr.pss_surface(&plain, 0, k0, 1.0).unwrap();
        let (ma, mb) = (a.iter().cloned().fold(0.0, f64::max), b.iter().cloned().fold(0.0, f64::max));
        assert!((ma - mb).abs() < 1e-4 * mb);
        assert!((ma - 127.0).abs() < 1e-3 * 127.0);
    }

    #[test]
    fn zero_input_gives_zero() {
        let zero = vec![vec![Cf64::new(0.0, 0.0); 3000]];
        let spec = CorrelatorSearchSpec::blind(&NUM);
        assert_eq!(correlator_statistic(&zero, &spec, &NUM, 1.0).unwrap(), 0.0);
        let cell = CellIdentity::new(5, 1).unwrap();
        assert_eq!(ue_correlator_statistic(&zero, 192, &[cell], &NUM, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn ue_equals_eve_on_same_hypotheses() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cell = CellIdentity::new(3, 0).unwrap();
        let ssb = crate::sync_signals::build_ssb_grid(cell, &mut rng);
        let mut g = ssb.grid.clone();
        g.first_symbol = 4;
        let tx = OfdmEngine::new(NUM).modulate(&g, 136).unwrap();
        let mut x = noise(&mut rng, 6000, 1.0);
        for (i, v) in tx.iter().enumerate() {
            x[2000 + i] += v * 0.5;
        }
        let streams = vec![x];
        let ue = ue_correlator_statistic(&streams, 192, &[cell], &NUM, 1.0).unwrap();
        let restricted = CorrelatorSearchSpec::known(&NUM, 192, &[cell]);
        let eve_same = correlator_statistic(&streams, &restricted, &NUM, 1.0).unwrap();
        assert!(ue >= eve_same - 1e-9);
        let blind = correlator_statistic(&streams, &CorrelatorSearchSpec::blind(&NUM), &NUM, 1.0).unwrap();
        assert!(blind >= ue - 1e-9);
    }

    #[test]
    fn bad_specs_rejected() {
        let x = vec![vec![Cf64::new(1.0, 0.0); 2000]];
        let mut spec = CorrelatorSearchSpec::blind(&NUM);
        spec.freq_offsets = vec![400];
        assert!(correlator_statistic(&x, &spec, &NUM, 1.0).is_err());
        spec.freq_offsets.clear();
        assert!(correlator_statistic(&x, &spec, &NUM, 1.0).is_err());
        let short = vec![vec![Cf64::new(1.0, 0.0); 100]];
        assert!(matches!(
            correlator_statistic(&short, &CorrelatorSearchSpec::blind(&NUM), &NUM, 1.0),
            Err(Error::Length { .. })
        ));
    }

    #[test]
    fn roc_examples() {
        let diag = roc_curve(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!(diag.points.iter().all(|(f, d)| (f - d).abs() < 1e-15));
        assert!((diag.auc() - 0.5).abs() <= 1.0 / 3.0);

        let sep = roc_curve(&[0.1, 0.2], &[0.5, 0.9]).unwrap();
        assert!(sep.points.contains(&(0.0, 1.0)));
        assert_eq!(sep.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(sep.points.last(), Some(&(1.0, 1.0)));
        assert!((sep.auc() - 1.0).abs() < 1e-15);
        assert_eq!(sep.pd_at_pfa(0.1), 1.0);

        assert!(roc_curve(&[], &[1.0]).is_err());
        assert!(roc_curve(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn roc_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h0: Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
        let h1: Vec<f64> = (0..200).map(|_| rng.random::<f64>() + 0.3).collect();
        let roc = roc_curve(&h0, &h1).unwrap();
        assert!(roc.points.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        assert_eq!(roc.points.last(), Some(&(1.0, 1.0)));
    }
}
