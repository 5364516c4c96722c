//! Flat Rayleigh channels, AWGN, and the two receive models.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::numerics::{svd, CMatrix, SvdFactors};

/// PRNG used everywhere in the simulator.
pub type SimRng = ChaCha8Rng;

/// Independent substream keyed on `(master, point, trial)`.
///
/// ChaCha's 64-bit stream id carries `point` in the top 24 bits and `trial`
/// in the low 40, so trials never share keystream regardless of how they are
/// scheduled across worker threads.
pub fn substream(master: u64, point: u64, trial: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream((point << 40) ^ (trial & ((1 << 40) - 1)));
    rng
}

/// Circularly-symmetric complex Gaussian with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h: CMatrix,
    pub svd: SvdFactors,
}

impl ChannelRealization {
    pub fn from_matrix(h: CMatrix) -> Result<Self> {
        let svd = svd(&h)?;
        Ok(Self { h, svd })
    }

    /// Singular values, decreasing.
    pub fn lambda(&self) -> &[f64] {
        &self.svd.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub n0: f64,
    pub snr: f64,
    pub d: usize,
}

impl NoiseModel {
    /// `N0 = D / SNR`.
    pub fn new(snr_linear: f64, d: usize) -> Result<Self> {
        if !(snr_linear > 0.0) || d == 0 {
            return invalid("SNR must be positive and D >= 1");
        }
        Ok(Self {
            n0: d as f64 / snr_linear,
            snr: snr_linear,
            d,
        })
    }

    pub fn from_db(snr_db: f64, d: usize) -> Result<Self> {
        Self::new(10f64.powf(snr_db / 10.0), d)
    }

    pub fn noiseless(d: usize) -> Self {
        Self {
            n0: 0.0,
            snr: f64::INFINITY,
            d,
        }
    }
}

/// `N_r x N_t` matrix with i.i.d. CN(0, 1) entries, SVD cached.
pub fn sample_channel<R: Rng + ?Sized>(nt: usize, nr: usize, rng: &mut R) -> Result<ChannelRealization> {
    if nt == 0 || nr == 0 {
        return invalid("channel needs at least one antenna on each side");
    }
    let h = CMatrix::from_fn(nr, nt, |_, _| complex_gaussian(rng, 1.0));
    ChannelRealization::from_matrix(h)
}

fn add_noise<R: Rng + ?Sized>(mut y: CMatrix, noise: &NoiseModel, rng: &mut R) -> CMatrix {
    if noise.n0 > 0.0 {
        for i in 0..y.rows() {
            for j in 0..y.cols() {
                y[(i, j)] += complex_gaussian(rng, noise.n0);
            }
        }
    }
    y
}

/// `Y = Lambda Z + N`.
pub fn received_pcmb<R: Rng + ?Sized>(lambda: &[f64], z: &CMatrix, noise: &NoiseModel, rng: &mut R) -> Result<CMatrix> {
    if lambda.len() != z.rows() {
        return invalid(format!("{} singular values for a codeword with {} rows", lambda.len(), z.rows()));
    }
    let y = CMatrix::from_fn(z.rows(), z.cols(), |i, j| z[(i, j)] * lambda[i]);
    Ok(add_noise(y, noise, rng))
}

/// `Y = H Z + N`.
pub fn received_pc<R: Rng + ?Sized>(h: &CMatrix, z: &CMatrix, noise: &NoiseModel, rng: &mut R) -> Result<CMatrix> {
    if h.cols() != z.rows() {
        return invalid("channel columns must match codeword rows");
    }
    let y = CMatrix::from_fn(h.rows(), z.cols(), |i, j| (0..h.cols()).map(|k| h[(i, k)] * z[(k, j)]).sum());
    Ok(add_noise(y, noise, rng))
}

/// `y = diag(lambda) s + n` for one channel use of a precoded stream.
pub fn received_streams<R: Rng + ?Sized>(lambda: &[f64], s: &[Complex64], noise: &NoiseModel, rng: &mut R) -> Result<Vec<Complex64>> {
    if lambda.len() != s.len() {
        return invalid("stream count mismatch");
    }
    Ok(s.iter()
        .zip(lambda)
        .map(|(&x, &l)| {
            let n = if noise.n0 > 0.0 { complex_gaussian(rng, noise.n0) } else { Complex64::new(0.0, 0.0) };
            x * l + n
        })
        .collect())
}
