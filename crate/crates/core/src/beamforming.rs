//! Uplink-CSI eigenbeamforming and the grid-of-beams baseline.
//!
//! The gNB receives a unitary uplink pilot, forms the least-squares channel
//! estimate, averages `Ĥ Ĥ^H` over subcarriers into a spatial covariance and
//! precodes the SSB with the conjugate of its principal eigenvector.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{steering_vector, ArrayGeometry, ChannelRealization};
use crate::{Cf64, Error, Result};

const UNITARY_TOL: f64 = 1e-12;

/// Uplink pilot transmission parameters.
#[derive(Debug, Clone)]
pub struct UplinkPilotConfig {
    /// Pilot transmit power per resource element (linear).
    pub eta: f64,
    /// Unitary `K x K` pilot per subcarrier.
    pilots: Vec<DMatrix<Cf64>>,
    /// Receiver noise variance per element (linear).
    pub noise_variance: f64,
}

/// Unitary `k x k` DFT matrix.
pub fn dft_matrix(k: usize) -> DMatrix<Cf64> {
    let scale = 1.0 / (k as f64).sqrt();
    DMatrix::from_fn(k, k, |i, j| {
        Cf64::from_polar(scale, -2.0 * std::f64::consts::PI * (i * j) as f64 / k as f64)
    })
}

fn is_unitary(s: &DMatrix<Cf64>) -> bool {
    if !s.is_square() {
        return false;
    }
    let eye = DMatrix::<Cf64>::identity(s.nrows(), s.ncols());
    let g1 = s.adjoint() * s;
    let g2 = s * s.adjoint();
    (g1 - &eye).iter().all(|v| v.norm() <= UNITARY_TOL)
        && (g2 - &eye).iter().all(|v| v.norm() <= UNITARY_TOL)
}

impl UplinkPilotConfig {
    pub fn new(eta: f64, pilots: Vec<DMatrix<Cf64>>, noise_variance: f64) -> Result<Self> {
        if pilots.is_empty() {
            return Err(Error::Dimension("no pilot subcarriers".into()));
        }
        if let Some(n) = pilots.iter().position(|s| !is_unitary(s)) {
            return Err(Error::Domain(format!("pilot on subcarrier {n} is not unitary")));
        }
        if pilots.iter().any(|s| s.shape() != pilots[0].shape()) {
            return Err(Error::Dimension("pilot sizes differ across subcarriers".into()));
        }
        if !(noise_variance >= 0.0) || !(eta >= 0.0) {
            return Err(Error::Domain("pilot power and noise variance must be nonnegative".into()));
        }
        Ok(Self {
            eta,
            pilots,
            noise_variance,
        })
    }

    /// DFT pilot on every one of `n_subcarriers` subcarriers.
    pub fn dft(k: usize, n_subcarriers: usize, eta: f64, noise_variance: f64) -> Result<Self> {
        Self::new(eta, vec![dft_matrix(k); n_subcarriers], noise_variance)
    }

    pub fn pilots(&self) -> &[DMatrix<Cf64>] {
        &self.pilots
    }

    pub fn n_subcarriers(&self) -> usize {
        self.pilots.len()
    }
}

fn complex_gaussian<R: Rng + ?Sized>(variance: f64, rng: &mut R) -> Cf64 {
    let s = (variance / 2.0).sqrt();
    Cf64::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s)
}

/// `Y[n] = sqrt(eta) H[n] S[n] + W[n]` with circular Gaussian `W`.
pub fn receive_ul_pilot<R: Rng + ?Sized>(
    h: &ChannelRealization,
    cfg: &UplinkPilotConfig,
    rng: &mut R,
) -> Result<Vec<DMatrix<Cf64>>> {
    if h.h.len() != cfg.n_subcarriers() {
        return Err(Error::Dimension(format!(
            "channel has {} subcarriers, pilot config {}",
            h.h.len(),
            cfg.n_subcarriers()
        )));
    }
    let amp = cfg.eta.sqrt();
    h.h.iter()
        .zip(&cfg.pilots)
        .map(|(hn, sn)| {
            if hn.ncols() != sn.nrows() {
                return Err(Error::Dimension(format!(
                    "channel has {} terminal ports, pilot is {}x{}",
                    hn.ncols(),
                    sn.nrows(),
                    sn.ncols()
                )));
            }
            let mut y = hn * sn * Cf64::new(amp, 0.0);
            if cfg.noise_variance > 0.0 {
                y.iter_mut()
                    .for_each(|v| *v += complex_gaussian(cfg.noise_variance, rng));
            }
            Ok(y)
        })
        .collect()
}

/// Least-squares channel estimate `Ĥ[n] = Y[n] S[n]^H / sqrt(eta)`.
pub fn ls_estimate(y: &[DMatrix<Cf64>], cfg: &UplinkPilotConfig) -> Result<Vec<DMatrix<Cf64>>> {
    if !(cfg.eta > 0.0) {
        return Err(Error::Domain(format!("pilot power eta = {} must be positive", cfg.eta)));
    }
    if y.len() != cfg.n_subcarriers() {
        return Err(Error::Dimension(format!(
            "{} received matrices for {} pilot subcarriers",
            y.len(),
            cfg.n_subcarriers()
        )));
    }
    let inv = Cf64::new(1.0 / cfg.eta.sqrt(), 0.0);
    y.iter()
        .zip(&cfg.pilots)
        .map(|(yn, sn)| {
            if yn.ncols() != sn.ncols() {
                return Err(Error::Dimension("received matrix width differs from pilot".into()));
            }
            Ok(yn * sn.adjoint() * inv)
        })
        .collect()
}

/// Hermitian positive semidefinite `M x M` spatial covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialCovariance {
    r: DMatrix<Cf64>,
}

impl SpatialCovariance {
    /// Wraps `r` after checking it is square and Hermitian within `1e-10` (relative to its largest entry).
    pub fn from_matrix(r: DMatrix<Cf64>) -> Result<Self> {
        if !r.is_square() || r.nrows() == 0 {
            return Err(Error::Dimension(format!("covariance shape {:?} is not square", r.shape())));
        }
        let scale = r.iter().map(|v| v.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        if (&r - r.adjoint()).iter().any(|v| v.norm() > 1e-10 * scale) {
            return Err(Error::Domain("covariance is not Hermitian".into()));
        }
        Ok(Self { r })
    }

    pub fn matrix(&self) -> &DMatrix<Cf64> {
        &self.r
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.r.diagonal().iter().map(|v| v.re).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { r: &self.r * Cf64::new(c, 0.0) }
    }
}

/// `R = (1/N) sum_n Ĥ[n] Ĥ[n]^H`.
pub fn spatial_covariance(h_hat: &[DMatrix<Cf64>]) -> Result<SpatialCovariance> {
    let first = h_hat
        .first()
        .ok_or_else(|| Error::Degenerate("covariance of an empty channel set".into()))?;
    let m = first.nrows();
    let mut r = DMatrix::<Cf64>::zeros(m, m);
    for hn in h_hat {
        if hn.nrows() != m {
            return Err(Error::Dimension("channel estimates differ in row count".into()));
        }
        r.gemm(Cf64::new(1.0, 0.0), hn, &hn.adjoint(), Cf64::new(1.0, 0.0));
    }
    r /= Cf64::new(h_hat.len() as f64, 0.0);
    // Exact Hermitian symmetry regardless of summation rounding.
    let r = (&r + r.adjoint()) * Cf64::new(0.5, 0.0);
    Ok(SpatialCovariance { r })
}

/// Power-iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Return the last iterate instead of [`Error::NotConverged`].
    pub accept_unconverged: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 1000,
            accept_unconverged: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub vector: DVector<Cf64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn canonical_phase(v: &mut DVector<Cf64>) {
    let (idx, _) = v
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (i, x)| if x.norm() > best.1 { (i, x.norm()) } else { best });
    let pivot = v[idx];
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        v.iter_mut().for_each(|x| *x *= rot);
        v[idx] = Cf64::new(v[idx].norm(), 0.0);
    }
}

/// Principal eigenpair of `r` by power iteration.
///
/// Starts from the canonical basis vector at the largest diagonal entry. A
/// converged eigenvalue below that diagonal entry cannot be the largest one,
/// so the iteration restarts from a random vector drawn from `rng`. The
/// returned vector has unit norm and its largest-magnitude entry real and
/// nonnegative.
pub fn principal_eigvec<R: Rng + ?Sized>(
    r: &SpatialCovariance,
    opts: &EigenOptions,
    rng: &mut R,
) -> Result<Eigenpair> {
    let m = r.dim();
    let a = r.matrix();
    let diag: Vec<f64> = a.diagonal().iter().map(|v| v.re).collect();
    let (start, max_diag) = diag
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
    if !(max_diag > 0.0) || a.iter().all(|v| v.norm() == 0.0) {
        return Err(Error::Degenerate("covariance has no positive diagonal entry".into()));
    }

    let mut v0 = DVector::<Cf64>::zeros(m);
    v0[start] = Cf64::new(1.0, 0.0);
    let mut best = power_iterate(a, v0, opts, rng);
    // A canonical start can sit exactly on a minor eigenvector, so one random
    // start always runs as a cross-check.
    let mut runs = 0;
    while runs < 3 {
        runs += 1;
        let v = random_unit(m, rng);
        let other = power_iterate(a, v, opts, rng);
        let iterations = best.iterations + other.iterations;
        let better = (other.converged && !best.converged)
            || (other.converged == best.converged && other.value > best.value * (1.0 + 1e-9));
        if better {
            best = other;
        }
        best.iterations = iterations;
        if best.converged && best.value >= max_diag * (1.0 - 1e-9) {
            break;
        }
    }
    if best.converged || opts.accept_unconverged {
        canonical_phase(&mut best.vector);
        return Ok(Eigenpair {
            vector: best.vector,
            value: best.value,
            iterations: best.iterations,
            converged: best.converged,
        });
    }
    Err(Error::NotConverged {
        iterations: best.iterations,
        residual: best.residual / best.value.abs().max(f64::MIN_POSITIVE),
    })
}

fn random_unit<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DVector<Cf64> {
    let v = DVector::from_fn(m, |_, _| complex_gaussian(1.0, rng));
    let n = v.norm();
    v / Cf64::new(n, 0.0)
}

struct Iterate {
    vector: DVector<Cf64>,
    value: f64,
    iterations: usize,
    residual: f64,
    converged: bool,
}

fn power_iterate<R: Rng + ?Sized>(
    a: &DMatrix<Cf64>,
    mut v: DVector<Cf64>,
    opts: &EigenOptions,
    rng: &mut R,
) -> Iterate {
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let w = a * &v;
        lambda = v.dotc(&w).re;
        residual = (&w - &v * Cf64::new(lambda, 0.0)).norm();
        if residual <= opts.tol * lambda.abs() && lambda > 0.0 {
            return Iterate { vector: v, value: lambda, iterations, residual, converged: true };
        }
        let w_norm = w.norm();
        v = if w_norm == 0.0 { random_unit(a.nrows(), rng) } else { w / Cf64::new(w_norm, 0.0) };
    }
    Iterate { vector: v, value: lambda, iterations, residual, converged: false }
}

/// Identifies where a precoder came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecoderLabel {
    Beam(usize),
    Eigen,
}

impl fmt::Display for PrecoderLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecoderLabel::Beam(b) => write!(f, "beam{b}"),
            PrecoderLabel::Eigen => f.write_str("eigen"),
        }
    }
}

/// Unit-norm transmit weight vector over the gNB ports.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    pub weights: DVector<Cf64>,
    pub label: PrecoderLabel,
}

impl Precoder {
    pub fn new(weights: DVector<Cf64>, label: PrecoderLabel) -> Result<Self> {
        let norm = weights.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Degenerate("precoder has zero or non-finite norm".into()));
        }
        Ok(Self {
            weights: weights / Cf64::new(norm, 0.0),
            label,
        })
    }
}

/// Eigen-precoder `p = conj(u1)`.
pub fn eigen_precoder<R: Rng + ?Sized>(
    r: &SpatialCovariance,
    opts: &EigenOptions,
    rng: &mut R,
) -> Result<Precoder> {
    let pair = principal_eigvec(r, opts, rng)?;
    Precoder::new(pair.vector.map(|v| v.conj()), PrecoderLabel::Eigen)
}

/// Azimuths (radians, sector frame) of `n_beams` beams spanning `sector_width_deg`.
pub fn gob_azimuths(sector_width_deg: f64, n_beams: usize) -> Vec<f64> {
    let step = sector_width_deg / n_beams as f64;
    (0..n_beams)
        .map(|b| (-sector_width_deg / 2.0 + step * (b as f64 + 0.5)).to_radians())
        .collect()
}

/// Grid-of-beams codebook: conjugated steering vectors at 0° elevation.
pub fn gob_codebook(arr: &ArrayGeometry, sector_width_deg: f64, n_beams: usize) -> Result<Vec<Precoder>> {
    if n_beams == 0 {
        return Err(Error::Config("grid of beams needs at least one beam".into()));
    }
    gob_azimuths(sector_width_deg, n_beams)
        .into_iter()
        .enumerate()
        .map(|(b, az)| {
            let a = steering_vector(arr, az, 0.0).map(|v| v.conj());
            Precoder::new(a, PrecoderLabel::Beam(b))
        })
        .collect()
}

/// Index of the strongest sector; the lowest index wins ties.
pub fn select_sector(ul_rsrp_dbm: &[f64]) -> Result<usize> {
    if ul_rsrp_dbm.is_empty() {
        return Err(Error::Domain("no sector RSRP values".into()));
    }
    if ul_rsrp_dbm.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("sector RSRP is NaN".into()));
    }
    let mut best = 0;
    for (i, &v) in ul_rsrp_dbm.iter().enumerate().skip(1) {
        if v > ul_rsrp_dbm[best] {
            best = i;
        }
    }
    Ok(best)
}
