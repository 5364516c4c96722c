//! Exhaustive reference decoders and bit metrics, computed in the
//! original (unrotated) coordinates. Used by tests and `validate`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modulation::Constellation;
use crate::numerics::CMatrix;
use crate::pstbc::{gather_thread, phase_diagonal, PerfectCode, SymbolMatrix};
use crate::spheredec::BRUTE_FORCE_LIMIT;

use crate::bicmb::BitLocation;

fn for_each_vector(m: usize, len: usize, mut f: impl FnMut(&[usize])) -> Result<()> {
    if (m as f64).powi(len as i32) > BRUTE_FORCE_LIMIT {
        return Err(Error::Infeasible(format!("{m}^{len} candidates exceed the exhaustive limit")));
    }
    let mut idx = vec![0usize; len];
    for count in 0..m.pow(len as u32) {
        let mut rem = count;
        for c in (0..len).rev() {
            idx[c] = rem % m;
            rem /= m;
        }
        f(&idx);
    }
    Ok(())
}

/// `min ||y_m - Phi_m Lambda G x||^2` over thread vectors `x` whose
/// position `n` carries bit `j = b`.
pub fn thread_metric(y: &CMatrix, lambda: &[f64], code: &PerfectCode, loc: BitLocation, b: u8, c: &Constellation) -> Result<f64> {
    let d = code.dimension();
    loc.validate(d, c)?;
    let yb = gather_thread(y, loc.m)?;
    let phase = phase_diagonal(code, loc.m)?;
    let g = code.g_matrix();
    let mut best = f64::INFINITY;
    for_each_vector(c.size(), d, |idx| {
        if c.bit(idx[loc.n - 1], loc.j) != b {
            return;
        }
        let mut metric = 0.0;
        for u in 0..d {
            let gx: Complex64 = (0..d).map(|s| g[(u, s)] * c.point(idx[s])).sum();
            metric += (yb[u] - phase[u] * lambda[u] * gx).norm_sqr();
        }
        best = best.min(metric);
    })?;
    Ok(best)
}

/// Unconstrained `min ||y_m - Phi_m Lambda G x||^2` for thread `m`.
pub fn thread_ml_metric(y: &CMatrix, lambda: &[f64], code: &PerfectCode, m: usize, c: &Constellation) -> Result<f64> {
    let a = thread_metric(y, lambda, code, BitLocation { k: 0, m, n: 1, j: 0 }, 0, c)?;
    let b = thread_metric(y, lambda, code, BitLocation { k: 0, m, n: 1, j: 0 }, 1, c)?;
    Ok(a.min(b))
}

/// `min ||Y - Lambda Z(X)||^2` over every symbol matrix whose bit at
/// `loc` equals `b`.
pub fn joint_metric(y: &CMatrix, lambda: &[f64], code: &PerfectCode, loc: BitLocation, b: u8, c: &Constellation) -> Result<f64> {
    let d = code.dimension();
    loc.validate(d, c)?;
    let target = (loc.m - 1) * d + (loc.n - 1);
    let mut best = f64::INFINITY;
    let mut err = None;
    for_each_vector(c.size(), d * d, |idx| {
        if c.bit(idx[target], loc.j) != b {
            return;
        }
        let x = CMatrix::from_fn(d, d, |u, v| c.point(idx[v * d + u]));
        match code.assemble_values(&x) {
            Ok(z) => {
                let mut metric = 0.0;
                for u in 0..d {
                    for v in 0..d {
                        metric += (y[(u, v)] - lambda[u] * z.z[(u, v)]).norm_sqr();
                    }
                }
                best = best.min(metric);
            }
            Err(e) => err = Some(e),
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(best),
    }
}

/// Joint ML over all `M^(D^2)` symbol matrices for `Y = Lambda Z(X) + N`.
/// Ties keep the first candidate in column-major lexicographic order.
pub fn joint_ml(y: &CMatrix, lambda: &[f64], code: &PerfectCode, c: &Constellation) -> Result<(SymbolMatrix, f64)> {
    let d = code.dimension();
    let mut best = (f64::INFINITY, Vec::new());
    let mut err = None;
    for_each_vector(c.size(), d * d, |idx| {
        let x = CMatrix::from_fn(d, d, |u, v| c.point(idx[v * d + u]));
        match code.assemble_values(&x) {
            Ok(z) => {
                let mut metric = 0.0;
                for u in 0..d {
                    for v in 0..d {
                        metric += (y[(u, v)] - lambda[u] * z.z[(u, v)]).norm_sqr();
                    }
                }
                if metric < best.0 {
                    best = (metric, idx.to_vec());
                }
            }
            Err(e) => err = Some(e),
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok((SymbolMatrix::from_columns(d, best.1)?, best.0))
}
