//! One-sided (Hestenes) Jacobi SVD for small complex matrices.

use num_complex::Complex64;

use super::CMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// `h = u * diag(sigma) * v^H` with `sigma` sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> CMatrix {
        let k = self.sigma.len();
        CMatrix::from_fn(self.u.rows(), self.v.rows(), |i, j| {
            (0..k)
                .map(|s| self.u[(i, s)] * self.sigma[s] * self.v[(j, s)].conj())
                .sum()
        })
    }
}

/// Thin SVD: for an `m x n` input, `u` is `m x k`, `v` is `n x k`, `k = min(m, n)`.
/// For square inputs both factors are unitary.
pub fn svd(h: &CMatrix) -> Result<SvdFactors> {
    if !h.is_finite() {
        return Err(Error::InvalidInput("svd input contains NaN or Inf".into()));
    }
    if h.rows() < h.cols() {
        let t = svd(&h.conj_transpose())?;
        return Ok(SvdFactors {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    let m = h.rows();
    let n = h.cols();
    let mut a: Vec<Vec<Complex64>> = (0..n).map(|j| h.col(j)).collect();
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = a[p].iter().map(Complex64::norm_sqr).sum();
                let beta: f64 = a[q].iter().map(Complex64::norm_sqr).sum();
                let gamma: Complex64 = a[p].iter().zip(&a[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let rot = |cols: &mut Vec<Vec<Complex64>>| {
                    for k in 0..cols[p].len() {
                        let xp = cols[p][k];
                        let xq = cols[q][k] * phase.conj();
                        cols[p][k] = xp * c - xq * s;
                        cols[q][k] = xp * s + xq * c;
                    }
                };
                rot(&mut a);
                rot(&mut v);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = a
        .iter()
        .enumerate()
        .map(|(j, col)| (col.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt(), j))
        .collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));

    let scale = order.first().map_or(0.0, |o| o.0);
    let mut u_cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    let mut v_sorted = CMatrix::zeros(n, n);
    for (slot, &(s, j)) in order.iter().enumerate() {
        v_sorted.set_col(slot, &v[j]);
        if s > 1e-14 * scale.max(f64::MIN_POSITIVE) {
            sigma.push(s);
            u_cols.push(a[j].iter().map(|z| z / s).collect());
        } else {
            sigma.push(0.0);
            u_cols.push(complete_basis(&u_cols, m));
        }
    }
    let mut u = CMatrix::zeros(m, n);
    for (j, col) in u_cols.iter().enumerate() {
        u.set_col(j, col);
    }
    Ok(SvdFactors { u, sigma, v: v_sorted })
}

/// A unit vector orthogonal to every column in `basis`.
fn complete_basis(basis: &[Vec<Complex64>], m: usize) -> Vec<Complex64> {
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for e in 0..m {
        let mut w = vec![Complex64::new(0.0, 0.0); m];
        w[e] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in basis {
                let proj: Complex64 = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                for (wk, bk) in w.iter_mut().zip(b) {
                    *wk -= proj * bk;
                }
            }
        }
        let nrm: f64 = w.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
        if best.as_ref().is_none_or(|(bn, _)| nrm > *bn) {
            best = Some((nrm, w));
        }
    }
    let (nrm, w) = best.expect("m >= 1");
    w.into_iter().map(|z| z / nrm).collect()
}
