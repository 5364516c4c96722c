//! Householder QR with the real non-negative diagonal convention.

use num_complex::Complex64;

use super::{ops, CMatrix};
use crate::error::{Error, Result};

/// `a = q * r`, `q` unitary, `r` upper triangular with a real, non-negative diagonal.
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q: CMatrix,
    pub r: CMatrix,
}

impl QrFactors {
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.q.rows();
        let k = self.r.cols();
        CMatrix::from_fn(n, k, |i, j| (0..self.q.cols()).map(|s| self.q[(i, s)] * self.r[(s, j)]).sum())
    }
}

/// Counted Householder QR of a square (or tall) full-column-rank matrix.
///
/// Phases of the raw Householder diagonal are moved into `q`, so the
/// factorization is unique for full-rank inputs.
pub fn qr(a: &CMatrix) -> Result<QrFactors> {
    let m = a.rows();
    let n = a.cols();
    if m < n {
        return Err(Error::InvalidInput(format!("qr needs rows >= cols, got {m}x{n}")));
    }
    if !a.is_finite() {
        return Err(Error::InvalidInput("qr input contains NaN or Inf".into()));
    }
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Err(Error::DegenerateChannel("qr of the zero matrix".into()));
    }

    let mut r = a.clone();
    let mut reflectors: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for k in 0..n {
        let x: Vec<Complex64> = (k..m).map(|i| r[(i, k)]).collect();
        let xnorm = ops::cnorm_sqr(&x).sqrt();
        let mut v = x;
        if xnorm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let phase = if v[0].norm() > 0.0 {
            ops::cmul_re(v[0], ops::recip(v[0].norm()))
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = ops::cmul_re(phase, -xnorm);
        v[0] -= alpha;
        let vnorm_sqr = ops::cnorm_sqr(&v);
        if vnorm_sqr == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let inv = ops::recip(vnorm_sqr.sqrt());
        for z in v.iter_mut() {
            *z = ops::cmul_re(*z, inv);
        }
        // r[k.., j] -= 2 v (v^H r[k.., j])
        for j in k..n {
            let col: Vec<Complex64> = (k..m).map(|i| r[(i, j)]).collect();
            let w = ops::cmul_re(ops::cdot_conj(&v, &col), 2.0);
            for (off, vi) in v.iter().enumerate() {
                r[(k + off, j)] -= ops::cmul(*vi, w);
            }
        }
        reflectors.push(v);
    }

    // q = H_0 H_1 ... H_{n-1} applied to the first n columns of the identity.
    let mut q = CMatrix::from_fn(m, n, |i, j| {
        if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    for k in (0..n).rev() {
        let v = &reflectors[k];
        if v.is_empty() {
            continue;
        }
        for j in 0..n {
            let col: Vec<Complex64> = (k..m).map(|i| q[(i, j)]).collect();
            let w = ops::cmul_re(ops::cdot_conj(v, &col), 2.0);
            for (off, vi) in v.iter().enumerate() {
                q[(k + off, j)] -= ops::cmul(*vi, w);
            }
        }
    }

    let mut r_sq = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            r_sq[(i, j)] = r[(i, j)];
        }
    }

    let mut min_diag = f64::INFINITY;
    for i in 0..n {
        let d = r_sq[(i, i)];
        let mag = d.norm();
        min_diag = min_diag.min(mag);
        if mag > 0.0 {
            let ph = d / mag;
            let phc = ph.conj();
            for j in i..n {
                r_sq[(i, j)] = ops::cmul(r_sq[(i, j)], phc);
            }
            r_sq[(i, i)] = Complex64::new(mag, 0.0);
            for row in 0..m {
                q[(row, i)] = ops::cmul(q[(row, i)], ph);
            }
        }
    }
    if min_diag <= 1e-12 * scale {
        return Err(Error::DegenerateChannel(format!(
            "matrix is numerically rank deficient (min |r_ii| = {min_diag:.3e})"
        )));
    }
    Ok(QrFactors { q, r: r_sq })
}
