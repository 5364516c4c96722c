//! Counted scalar arithmetic. Additions and comparisons are free.

use num_complex::Complex64;

use super::opcount::add_real_mults;

#[inline(always)]
pub fn cmul(a: Complex64, b: Complex64) -> Complex64 {
    add_real_mults(4);
    a * b
}

/// `conj(a) * b`
#[inline(always)]
pub fn cmul_conj(a: Complex64, b: Complex64) -> Complex64 {
    add_real_mults(4);
    a.conj() * b
}

#[inline(always)]
pub fn cmul_re(a: Complex64, r: f64) -> Complex64 {
    add_real_mults(2);
    a * r
}

#[inline(always)]
pub fn rmul(a: f64, b: f64) -> f64 {
    add_real_mults(1);
    a * b
}

#[inline(always)]
pub fn square(a: f64) -> f64 {
    add_real_mults(1);
    a * a
}

/// `|a|^2`
#[inline(always)]
pub fn norm_sqr(a: Complex64) -> f64 {
    add_real_mults(2);
    a.norm_sqr()
}

/// Reciprocal of a real number, charged as one multiplication.
#[inline(always)]
pub fn recip(a: f64) -> f64 {
    add_real_mults(1);
    1.0 / a
}

/// `sum_k conj(a_k) b_k`
pub fn cdot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    add_real_mults(4 * a.len() as u64);
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `sum_k |a_k|^2`
pub fn cnorm_sqr(a: &[Complex64]) -> f64 {
    add_real_mults(2 * a.len() as u64);
    a.iter().map(Complex64::norm_sqr).sum()
}

/// `sum_k a_k b_k` over reals
pub fn rdot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    add_real_mults(a.len() as u64);
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
