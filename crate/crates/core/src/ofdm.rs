//! OFDM modulation at the 30 kHz NR numerology with unitary FFT scaling.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::{Cf64, Error, Result};

/// Fixed NR numerology: 30 kHz SCS sampled at 15.36 MHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerology {
    pub scs_hz: f64,
    pub fft_size: usize,
    pub sample_rate_hz: f64,
    pub cp_long: usize,
    pub cp_short: usize,
}

impl Numerology {
    pub const NR_30KHZ: Numerology = Numerology {
        scs_hz: 30_000.0,
        fft_size: 512,
        sample_rate_hz: 15_360_000.0,
        cp_long: 44,
        cp_short: 36,
    };

    pub const SYMBOLS_PER_SUBFRAME: usize = 28;
    const SYMBOLS_PER_HALF_SUBFRAME: usize = 14;

    /// Cyclic prefix of absolute symbol `l`; long on symbols 0 and 14 of every subframe.
    pub fn cp_len(&self, l: usize) -> usize {
        if l.is_multiple_of(Self::SYMBOLS_PER_HALF_SUBFRAME) {
            self.cp_long
        } else {
            self.cp_short
        }
    }

    pub fn symbol_len(&self, l: usize) -> usize {
        self.fft_size + self.cp_len(l)
    }

    pub fn samples_per_half_subframe(&self) -> usize {
        self.cp_long + 13 * self.cp_short + 14 * self.fft_size
    }

    /// First sample (cyclic prefix included) of absolute symbol `l`.
    pub fn symbol_start(&self, l: usize) -> usize {
        let half = l / Self::SYMBOLS_PER_HALF_SUBFRAME;
        let within = l % Self::SYMBOLS_PER_HALF_SUBFRAME;
        let offset = if within == 0 {
            0
        } else {
            self.symbol_len(0) + (within - 1) * (self.fft_size + self.cp_short)
        };
        half * self.samples_per_half_subframe() + offset
    }

    pub fn samples_per_ms(&self) -> usize {
        (self.sample_rate_hz / 1000.0).round() as usize
    }

    pub fn ms_to_samples(&self, ms: f64) -> usize {
        (ms * self.sample_rate_hz / 1000.0).round() as usize
    }
}

impl Default for Numerology {
    fn default() -> Self {
        Self::NR_30KHZ
    }
}

/// Complex time-frequency grid, subcarriers x OFDM symbols.
///
/// `first_symbol` is the absolute symbol index (within a subframe) of the
/// first column; it selects the cyclic-prefix pattern when modulating.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    n_subcarriers: usize,
    n_symbols: usize,
    pub first_symbol: usize,
    data: Vec<Cf64>,
}

impl ResourceGrid {
    pub fn zeros(n_subcarriers: usize, n_symbols: usize) -> Self {
        Self {
            n_subcarriers,
            n_symbols,
            first_symbol: 0,
            data: vec![Cf64::new(0.0, 0.0); n_subcarriers * n_symbols],
        }
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn get(&self, k: usize, l: usize) -> Cf64 {
        self.data[l * self.n_subcarriers + k]
    }

    pub fn set(&mut self, k: usize, l: usize, v: Cf64) {
        self.data[l * self.n_subcarriers + k] = v;
    }

    /// Symbol-major storage: symbol `l` occupies `data[l*n_sc..(l+1)*n_sc]`.
    pub fn data(&self) -> &[Cf64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Cf64] {
        &mut self.data
    }

    pub fn column(&self, l: usize) -> &[Cf64] {
        &self.data[l * self.n_subcarriers..(l + 1) * self.n_subcarriers]
    }

    pub fn column_mut(&mut self, l: usize) -> &mut [Cf64] {
        &mut self.data[l * self.n_subcarriers..(l + 1) * self.n_subcarriers]
    }

    /// Rows `offset..offset + n` of every symbol.
    pub fn sub_band(&self, offset: usize, n: usize) -> ResourceGrid {
        let mut out = ResourceGrid::zeros(n, self.n_symbols);
        out.first_symbol = self.first_symbol;
        for l in 0..self.n_symbols {
            out.column_mut(l)
                .copy_from_slice(&self.column(l)[offset..offset + n]);
        }
        out
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Baseband samples, one vector per antenna port.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    pub ports: Vec<Vec<Cf64>>,
    pub rate_hz: f64,
    pub t0: usize,
}

impl SampleStream {
    pub fn new(ports: Vec<Vec<Cf64>>, rate_hz: f64) -> Result<Self> {
        if let Some(first) = ports.first() {
            if ports.iter().any(|p| p.len() != first.len()) {
                return Err(Error::Dimension(
                    "antenna-port streams differ in length".into(),
                ));
            }
        }
        Ok(Self {
            ports,
            rate_hz,
            t0: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.ports.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// OFDM modulator/demodulator with cached FFT plans.
#[derive(Clone)]
pub struct OfdmEngine {
    num: Numerology,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for OfdmEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OfdmEngine").field("num", &self.num).finish()
    }
}

impl OfdmEngine {
    pub fn new(num: Numerology) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            num,
            fft: planner.plan_fft_forward(num.fft_size),
            ifft: planner.plan_fft_inverse(num.fft_size),
            scale: 1.0 / (num.fft_size as f64).sqrt(),
        }
    }

    pub fn numerology(&self) -> &Numerology {
        &self.num
    }

    /// FFT bin holding band subcarrier `b`; band index 0 is the lowest frequency.
    pub fn band_to_bin(&self, b: usize) -> usize {
        (b + self.num.fft_size / 2) % self.num.fft_size
    }

    /// Unitary IFFT of one band-ordered column (length `fft_size`) into the useful part.
    pub fn synthesize_symbol(&self, band: &[Cf64]) -> Vec<Cf64> {
        let n = self.num.fft_size;
        let mut buf = vec![Cf64::new(0.0, 0.0); n];
        for (b, v) in band.iter().enumerate() {
            buf[self.band_to_bin(b)] = *v;
        }
        self.ifft.process(&mut buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
        buf
    }

    /// Unitary FFT of `fft_size` samples, returned in band order.
    pub fn analyze_symbol(&self, samples: &[Cf64]) -> Vec<Cf64> {
        let n = self.num.fft_size;
        let mut buf = samples[..n].to_vec();
        self.fft.process(&mut buf);
        (0..n).map(|b| buf[self.band_to_bin(b)] * self.scale).collect()
    }

    pub fn modulate(&self, grid: &ResourceGrid, subcarrier_offset: usize) -> Result<Vec<Cf64>> {
        let n = self.num.fft_size;
        if subcarrier_offset + grid.n_subcarriers() > n {
            return Err(Error::Config(format!(
                "grid of {} subcarriers at offset {subcarrier_offset} exceeds the {n}-bin band",
                grid.n_subcarriers()
            )));
        }
        let total: usize = (0..grid.n_symbols())
            .map(|l| self.num.symbol_len(grid.first_symbol + l))
            .sum();
        let mut out = Vec::with_capacity(total);
        let mut band = vec![Cf64::new(0.0, 0.0); n];
        for l in 0..grid.n_symbols() {
            band[subcarrier_offset..subcarrier_offset + grid.n_subcarriers()]
                .copy_from_slice(grid.column(l));
            let useful = self.synthesize_symbol(&band);
            let cp = self.num.cp_len(grid.first_symbol + l);
            out.extend_from_slice(&useful[n - cp..]);
            out.extend_from_slice(&useful);
        }
        Ok(out)
    }

    /// Demodulates `symbol_count` symbols starting at sample 0 of `samples`,
    /// returning a band-ordered `fft_size` x `symbol_count` grid.
    pub fn demodulate(
        &self,
        samples: &[Cf64],
        first_symbol: usize,
        symbol_count: usize,
    ) -> Result<ResourceGrid> {
        let needed: usize = (0..symbol_count)
            .map(|l| self.num.symbol_len(first_symbol + l))
            .sum();
        if samples.len() < needed {
            return Err(Error::Length {
                needed,
                available: samples.len(),
            });
        }
        let mut grid = ResourceGrid::zeros(self.num.fft_size, symbol_count);
        grid.first_symbol = first_symbol;
        let mut pos = 0;
        for l in 0..symbol_count {
            let cp = self.num.cp_len(first_symbol + l);
            let col = self.analyze_symbol(&samples[pos + cp..]);
            grid.column_mut(l).copy_from_slice(&col);
            pos += cp + self.num.fft_size;
        }
        Ok(grid)
    }
}

/// Modulates `grid` into a single-port stream; the grid occupies band
/// subcarriers `subcarrier_offset..subcarrier_offset + height`.
pub fn modulate(grid: &ResourceGrid, subcarrier_offset: usize, num: &Numerology) -> Result<SampleStream> {
    let samples = OfdmEngine::new(*num).modulate(grid, subcarrier_offset)?;
    SampleStream::new(vec![samples], num.sample_rate_hz)
}

/// Demodulates every port of `stream` from its first sample.
pub fn demodulate(
    stream: &SampleStream,
    num: &Numerology,
    first_symbol: usize,
    symbol_count: usize,
) -> Result<Vec<ResourceGrid>> {
    let engine = OfdmEngine::new(*num);
    stream
        .ports
        .iter()
        .map(|p| engine.demodulate(p, first_symbol, symbol_count))
        .collect()
}

/// Writes samples as little-endian interleaved f32 I/Q.
pub fn write_iq(path: impl AsRef<Path>, samples: &[Cf64]) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        bytes.extend_from_slice(&(s.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| Error::io(path, e))
}

pub fn read_iq(path: impl AsRef<Path>) -> Result<Vec<Cf64>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            reason: format!("{} bytes is not a whole number of I/Q pairs", bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Cf64::new(re as f64, im as f64)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_grid(rng: &mut ChaCha8Rng, n_sc: usize, n_sym: usize) -> ResourceGrid {
        let mut g = ResourceGrid::zeros(n_sc, n_sym);
        for v in g.data_mut() {
            *v = Cf64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
        g
    }

    #[test]
    fn numerology_fills_one_millisecond() {
        let num = Numerology::NR_30KHZ;
        assert_eq!(num.fft_size as f64 * num.scs_hz, num.sample_rate_hz);
        let total: usize = (0..28).map(|l| num.symbol_len(l)).sum();
        assert_eq!(total, 15_360);
        assert_eq!(num.symbol_start(28), 15_360);
        assert_eq!(num.symbol_start(14), 7_680);
        assert_eq!(num.symbol_start(1), 556);
        assert_eq!(num.symbol_start(4), 556 + 3 * 548);
    }

    #[test]
    fn zero_grid_gives_zero_samples() {
        let s = modulate(&ResourceGrid::zeros(240, 4), 136, &Numerology::NR_30KHZ).unwrap();
        assert!(s.ports[0].iter().all(|v| v.norm() == 0.0));
        assert_eq!(s.len(), 44 + 512 + 3 * 548);
    }

    #[test]
    fn single_tone_has_constant_modulus() {
        let mut g = ResourceGrid::zeros(240, 1);
        g.first_symbol = 1;
        g.set(10, 0, Cf64::new(1.0, 0.0));
        let s = modulate(&g, 136, &Numerology::NR_30KHZ).unwrap();
        let expected = 1.0 / 512f64.sqrt();
        for v in &s.ports[0][36..] {
            assert!((v.norm() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn round_trip_recovers_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let num = Numerology::NR_30KHZ;
        let mut g = random_grid(&mut rng, 240, 30);
        g.first_symbol = 3;
        let s = modulate(&g, 136, &num).unwrap();
        let back = demodulate(&s, &num, 3, 30).unwrap().remove(0).sub_band(136, 240);
        let err = g
            .data()
            .iter()
            .zip(back.data())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "max error {err}");
    }

    #[test]
    fn delay_within_cp_is_phase_ramp() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let num = Numerology::NR_30KHZ;
        let mut g = random_grid(&mut rng, 240, 1);
        g.first_symbol = 1;
        let s = modulate(&g, 136, &num).unwrap();
        let d = 20;
        let mut delayed = vec![Cf64::new(0.0, 0.0); d];
        delayed.extend_from_slice(&s.ports[0]);
        let engine = OfdmEngine::new(num);
        let band = engine.demodulate(&delayed, 1, 1).unwrap();
        for j in 0..240 {
            let b = 136 + j;
            let k = b as f64 - 256.0;
            let ramp = Cf64::from_polar(1.0, -2.0 * std::f64::consts::PI * k * d as f64 / 512.0);
            let expect = g.get(j, 0) * ramp;
            assert!((band.get(b, 0) - expect).norm() < 1e-9);
            assert!((band.get(b, 0).norm() - g.get(j, 0).norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_variance_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let num = Numerology::NR_30KHZ;
        let sigma2 = 2.5;
        let n_sym = 200;
        let len: usize = (0..n_sym).map(|l| num.symbol_len(l)).sum();
        let scale = (sigma2 / 2.0f64).sqrt();
        let samples: Vec<Cf64> = (0..len)
            .map(|_| {
                Cf64::new(
                    rng.sample::<f64, _>(StandardNormal) * scale,
                    rng.sample::<f64, _>(StandardNormal) * scale,
                )
            })
            .collect();
        let g = OfdmEngine::new(num).demodulate(&samples, 0, n_sym).unwrap();
        let var = g.energy() / g.data().len() as f64;
        assert!((var / sigma2 - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn parseval_and_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let num = Numerology::NR_30KHZ;
        let mut g1 = random_grid(&mut rng, 240, 1);
        g1.first_symbol = 2;
        let mut g2 = random_grid(&mut rng, 240, 1);
        g2.first_symbol = 2;
        let engine = OfdmEngine::new(num);
        let t1 = engine.modulate(&g1, 136).unwrap();
        let useful: f64 = t1[36..].iter().map(|v| v.norm_sqr()).sum();
        assert!((useful / g1.energy() - 1.0).abs() < 1e-9);

        let (a, b) = (Cf64::new(0.3, -1.2), Cf64::new(2.0, 0.5));
        let mut mix = g1.clone();
        for (m, (x, y)) in mix.data_mut().iter_mut().zip(g1.data().iter().zip(g2.data())) {
            *m = a * x + b * y;
        }
        let t2 = engine.modulate(&g2, 136).unwrap();
        let tm = engine.modulate(&mix, 136).unwrap();
        for i in 0..tm.len() {
            assert!((tm[i] - (a * t1[i] + b * t2[i])).norm() < 1e-10);
        }
    }

    #[test]
    fn errors_on_bad_dimensions() {
        let num = Numerology::NR_30KHZ;
        assert!(matches!(
            modulate(&ResourceGrid::zeros(240, 1), 300, &num),
            Err(Error::Config(_))
        ));
        let short = SampleStream::new(vec![vec![Cf64::new(0.0, 0.0); 100]], num.sample_rate_hz).unwrap();
        assert!(matches!(demodulate(&short, &num, 0, 1), Err(Error::Length { .. })));
        assert!(SampleStream::new(vec![vec![Cf64::new(0.0, 0.0); 2], vec![]], 1.0).is_err());
    }

    #[test]
    fn iq_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.iq");
        let samples = vec![Cf64::new(0.5, -0.25), Cf64::new(-1.0, 2.0)];
        write_iq(&path, &samples).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 16);
        assert_eq!(read_iq(&path).unwrap(), samples);
    }
}
