//! Thread-wise ML decoding of perfect-code multibeamforming.
//!
//! With `Y = Lambda Z + N`, the entries of thread `v` satisfy
//! `y_v = Phi_v Lambda G x_v + n_v`. After `Lambda G = Q R` the rotated
//! observation `Q^H Phi_v^H y_v = R x_v + n'` is decoded on its own, and
//! because `R` turns out real for the supported codes the real and
//! imaginary parts of `x_v` are two independent PAM problems.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::modulation::Constellation;
use crate::numerics::{ops, qr, CMatrix, QrFactors};
use crate::pstbc::{dimension4_thetas, dimension4_row, gather_thread, golden_ratio_pair, phase_diagonal, PerfectCode, SymbolMatrix};
use crate::spheredec::{complex_sd, real_sd_with_levels, ComplexLattice, RealLattice};

/// Largest `|Im r_ij|` for which `R` is treated as real.
pub const REAL_R_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ThreadObservation {
    /// 1-based thread index.
    pub v: usize,
    pub y_breve: Vec<Complex64>,
    pub y_tilde: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct PcmbPrecomputation {
    pub qr: QrFactors,
    /// Diagonals of `Phi_1 .. Phi_D`.
    pub phases: Vec<Vec<Complex64>>,
    pub r_is_real: bool,
    real_lattice: Option<RealLattice>,
    complex_lattice: ComplexLattice,
}

impl PcmbPrecomputation {
    pub fn dimension(&self) -> usize {
        self.qr.r.rows()
    }

    pub fn real_lattice(&self) -> Option<&RealLattice> {
        self.real_lattice.as_ref()
    }

    pub fn complex_lattice(&self) -> &ComplexLattice {
        &self.complex_lattice
    }

    /// `Q^H Phi_v^H y_breve`, counted.
    pub fn rotate(&self, v: usize, y_breve: &[Complex64]) -> Result<Vec<Complex64>> {
        let d = self.dimension();
        if v == 0 || v > d || y_breve.len() != d {
            return invalid("thread observation does not match the precomputation");
        }
        let phase = &self.phases[v - 1];
        let derotated: Vec<Complex64> = y_breve
            .iter()
            .zip(phase)
            .map(|(&y, &p)| if p == Complex64::new(1.0, 0.0) { y } else { ops::cmul_conj(p, y) })
            .collect();
        let q = &self.qr.q;
        Ok((0..d)
            .map(|i| (0..d).map(|k| ops::cmul_conj(q[(k, i)], derotated[k])).sum())
            .collect())
    }
}

/// Result of decoding one thread.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreadDecision {
    pub indices: Vec<usize>,
    pub metric: f64,
    pub visited: u64,
}

/// QR of `Lambda G` plus everything a thread decode needs. Counted.
pub fn precompute(lambda: &[f64], code: &PerfectCode) -> Result<PcmbPrecomputation> {
    let d = code.dimension();
    if lambda.len() != d {
        return invalid(format!("{} singular values for dimension {d}", lambda.len()));
    }
    if let Some(l) = lambda.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return Err(Error::DegenerateChannel(format!("singular value {l} is not positive")));
    }
    let lg = code.g_matrix().scale_rows(lambda)?;
    let f = qr(&lg)?;
    let r_is_real = f.r.max_abs_imag() <= REAL_R_TOLERANCE;
    let phases = (1..=d).map(|v| phase_diagonal(code, v)).collect::<Result<Vec<_>>>()?;
    let complex_lattice = ComplexLattice::new(&f.r)?;
    let real_lattice = if r_is_real {
        Some(RealLattice::from_real_part(&f.r, vec![0.0])?)
    } else {
        None
    };
    Ok(PcmbPrecomputation {
        qr: f,
        phases,
        r_is_real,
        real_lattice,
        complex_lattice,
    })
}

/// Splits `y` into its `D` threads and rotates each.
pub fn extract_threads(y: &CMatrix, pre: &PcmbPrecomputation) -> Result<Vec<ThreadObservation>> {
    let d = pre.dimension();
    if y.rows() != d || y.cols() != d {
        return invalid(format!("received matrix is {}x{}, expected {d}x{d}", y.rows(), y.cols()));
    }
    (1..=d)
        .map(|v| {
            let y_breve = gather_thread(y, v)?;
            let y_tilde = pre.rotate(v, &y_breve)?;
            Ok(ThreadObservation { v, y_breve, y_tilde })
        })
        .collect()
}

/// ML decision for one thread. Uses two real searches when `R` is real.
pub fn decode_thread(obs: &ThreadObservation, pre: &PcmbPrecomputation, constellation: &Constellation) -> Result<ThreadDecision> {
    if obs.y_tilde.len() != pre.dimension() {
        return invalid("thread observation does not match the precomputation");
    }
    match pre.real_lattice() {
        Some(lat) if constellation.is_axis_separable() => decode_thread_split(obs, lat, constellation),
        _ => decode_thread_complex(obs, pre, constellation),
    }
}

fn decode_thread_split(obs: &ThreadObservation, lat: &RealLattice, constellation: &Constellation) -> Result<ThreadDecision> {
    let levels = constellation.level_values();
    let sets: Vec<&[f64]> = vec![&levels; lat.dim()];
    let re: Vec<f64> = obs.y_tilde.iter().map(|z| z.re).collect();
    let im: Vec<f64> = obs.y_tilde.iter().map(|z| z.im).collect();
    let a = real_sd_with_levels(&re, lat, &sets)?;
    let b = real_sd_with_levels(&im, lat, &sets)?;
    Ok(ThreadDecision {
        indices: a
            .point
            .iter()
            .zip(&b.point)
            .map(|(&p, &q)| constellation.index_from_levels(p, q))
            .collect(),
        metric: a.metric + b.metric,
        visited: a.visited + b.visited,
    })
}

/// ML decision for one thread without the real/imaginary split.
pub fn decode_thread_complex(obs: &ThreadObservation, pre: &PcmbPrecomputation, constellation: &Constellation) -> Result<ThreadDecision> {
    let res = complex_sd(&obs.y_tilde, pre.complex_lattice(), constellation)?;
    Ok(ThreadDecision {
        indices: res.point,
        metric: res.metric,
        visited: res.visited,
    })
}

/// Decodes a full received matrix.
pub fn decode_pcmb(y: &CMatrix, lambda: &[f64], code: &PerfectCode, constellation: &Constellation) -> Result<SymbolMatrix> {
    let pre = precompute(lambda, code)?;
    decode_with(y, &pre, constellation).map(|(x, _)| x)
}

/// Decodes with a shared precomputation; also returns the total visited count.
pub fn decode_with(y: &CMatrix, pre: &PcmbPrecomputation, constellation: &Constellation) -> Result<(SymbolMatrix, u64)> {
    let mut threads = Vec::with_capacity(pre.dimension());
    let mut visited = 0;
    for obs in extract_threads(y, pre)? {
        let dec = decode_thread(&obs, pre, constellation)?;
        visited += dec.visited;
        threads.push(dec.indices);
    }
    Ok((SymbolMatrix::from_threads(&threads)?, visited))
}

/// Decoder bound to a code and a constellation.
#[derive(Debug, Clone)]
pub struct PcmbDecoder {
    pub code: PerfectCode,
    pub constellation: Constellation,
}

impl PcmbDecoder {
    pub fn new(code: PerfectCode, constellation: Constellation) -> Self {
        Self { code, constellation }
    }

    pub fn prepare(&self, lambda: &[f64]) -> Result<PcmbPrecomputation> {
        precompute(lambda, &self.code)
    }

    pub fn decode(&self, y: &CMatrix, pre: &PcmbPrecomputation) -> Result<SymbolMatrix> {
        decode_with(y, pre, &self.constellation).map(|(x, _)| x)
    }
}

/// `R` of `Lambda G` from closed-form inner products of the columns
/// `f_v` of `Lambda G`. Uncounted; validation only.
pub fn closed_form_r(lambda: &[f64], code: &PerfectCode) -> Result<Vec<Vec<f64>>> {
    let d = code.dimension();
    if lambda.len() != d {
        return invalid("singular value count does not match the code");
    }
    if lambda.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::DegenerateChannel("singular values must be positive".into()));
    }
    match d {
        2 => Ok(closed_form_r2(lambda)),
        4 => Ok(cholesky_upper(&gram4(lambda))),
        other => Err(Error::UnsupportedDimension(other)),
    }
}

fn closed_form_r2(lambda: &[f64]) -> Vec<Vec<f64>> {
    let (alpha, beta) = golden_ratio_pair();
    let (l1, l2) = (lambda[0] * lambda[0], lambda[1] * lambda[1]);
    let f1_sqr = (l1 * (1.0 + beta * beta) + l2 * (1.0 + alpha * alpha)) / 5.0;
    let f2_sqr = (l1 * (1.0 + alpha * alpha) + l2 * (1.0 + beta * beta)) / 5.0;
    let f1 = f1_sqr.sqrt();
    let r12 = (alpha - beta) * (l1 - l2) / (5.0 * f1);
    let r22 = (f2_sqr - r12 * r12).max(0.0).sqrt();
    vec![vec![f1, r12], vec![0.0, r22]]
}

/// `15 * conj(g_a(theta)) g_b(theta)` for one dimension-4 row. The
/// imaginary part vanishes identically on the four conjugates.
fn row_gram4(t: f64, a: usize, b: usize) -> f64 {
    let row = dimension4_row(t);
    15.0 * (row[a].conj() * row[b]).re
}

/// `f_a^H f_b = sum_u lambda_u^2 conj(G_ua) G_ub`.
fn gram4(lambda: &[f64]) -> Vec<Vec<f64>> {
    let thetas = dimension4_thetas();
    (0..4)
        .map(|a| {
            (0..4)
                .map(|b| {
                    thetas
                        .iter()
                        .zip(lambda)
                        .map(|(&t, &l)| l * l * row_gram4(t, a, b))
                        .sum::<f64>()
                        / 15.0
                })
                .collect()
        })
        .collect()
}

/// Upper factor `R` with `R^T R = gram` (Gram–Schmidt on the columns).
fn cholesky_upper(gram: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = gram.len();
    let mut r = vec![vec![0.0; n]; n];
    for j in 0..n {
        for i in 0..=j {
            let s: f64 = (0..i).map(|k| r[k][i] * r[k][j]).sum();
            if i == j {
                r[i][j] = (gram[i][i] - s).max(0.0).sqrt();
            } else {
                r[i][j] = (gram[i][j] - s) / r[i][i];
            }
        }
    }
    r
}

/// Off-diagonal dimension-4 entries exactly as printed in closed form,
/// with each summand weighted by `lambda_u^2`. Returned as
/// `((i, j), value)` with 1-based indices; `None` for the diagonal entries.
pub fn printed_dimension4_entries(lambda: &[f64]) -> Result<Vec<((usize, usize), f64)>> {
    if lambda.len() != 4 {
        return Err(Error::UnsupportedDimension(lambda.len()));
    }
    let thetas = dimension4_thetas();
    let gram = gram4(lambda);
    let norm = |k: usize| gram[k][k].sqrt();
    let poly = |p: &dyn Fn(f64) -> f64| -> f64 { thetas.iter().zip(lambda).map(|(&t, &l)| l * l * p(t)).sum::<f64>() / 15.0 };
    Ok(vec![
        ((1, 2), poly(&|t| -1.0 + 5.0 * t - t.powi(3)) / norm(0)),
        ((1, 3), poly(&|t| 4.0 - 10.0 * t - t * t + 3.0 * t.powi(3)) / norm(0)),
        ((1, 4), poly(&|t| -4.0 - 3.0 * t + 2.0 * t * t + t.powi(3)) / norm(0)),
        ((2, 3), poly(&|t| -3.0 - 8.0 * t + 2.0 * t * t + 2.0 * t.powi(3)) / norm(1)),
        ((2, 4), poly(&|t| -1.0 - 8.0 * t + t * t + 3.0 * t.powi(3)) / norm(1)),
        ((3, 4), poly(&|t| -1.0 + 5.0 * t - t.powi(3)) / norm(2)),
    ])
}
