//! Perfect space-time block codes in dimensions 2 and 4.
//!
//! A codeword is `Z = sum_v diag(G x_v) E^(v-1)`. Thread `v` (1-based)
//! occupies row `u`, column `((u + v - 2) mod D) + 1`, and picks up the
//! factor `g` wherever the cyclic shift wraps around.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::modulation::Constellation;
use crate::numerics::CMatrix;

#[derive(Debug, Clone)]
pub struct PerfectCode {
    d: usize,
    g_matrix: CMatrix,
    g_scalar: Complex64,
    e_matrix: CMatrix,
}

/// `D x D` matrix of constellation indices; column `v` is `x_v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolMatrix {
    d: usize,
    /// Column-major: entry `(u, v)` at `v * d + u`.
    indices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Codeword {
    pub z: CMatrix,
}

/// The four conjugates `2 cos(2 pi k / 15)` used by the dimension-4 code.
pub fn dimension4_thetas() -> [f64; 4] {
    [
        2.0 * (4.0 * PI / 15.0).cos(),
        2.0 * (2.0 * PI / 15.0).cos(),
        2.0 * (16.0 * PI / 15.0).cos(),
        2.0 * (8.0 * PI / 15.0).cos(),
    ]
}

/// Row `u` of the dimension-4 generation matrix as a function of `theta_u`.
pub fn dimension4_row(t: f64) -> [Complex64; 4] {
    let s = 1.0 / 15f64.sqrt();
    [
        Complex64::new(1.0, -3.0 + t * t) * s,
        Complex64::new(t, -3.0 * t + t.powi(3)) * s,
        Complex64::new(-3.0 * t + t.powi(3), -1.0 + 4.0 * t - t.powi(3)) * s,
        Complex64::new(-1.0 - 3.0 * t + t * t + t.powi(3), 1.0) * s,
    ]
}

pub fn golden_ratio_pair() -> (f64, f64) {
    let r5 = 5f64.sqrt();
    ((1.0 + r5) / 2.0, (1.0 - r5) / 2.0)
}

/// Builds the code of dimension `d`.
pub fn generation_matrix(d: usize) -> Result<PerfectCode> {
    let i = Complex64::new(0.0, 1.0);
    let g_matrix = match d {
        2 => {
            let (alpha, beta) = golden_ratio_pair();
            let s = 1.0 / 5f64.sqrt();
            CMatrix::from_rows(&[
                vec![Complex64::new(1.0, beta) * s, Complex64::new(alpha, -1.0) * s],
                vec![Complex64::new(1.0, alpha) * s, Complex64::new(beta, -1.0) * s],
            ])?
        }
        4 => {
            let rows: Vec<Vec<Complex64>> = dimension4_thetas().iter().map(|&t| dimension4_row(t).to_vec()).collect();
            CMatrix::from_rows(&rows)?
        }
        other => return Err(Error::UnsupportedDimension(other)),
    };
    PerfectCode::from_parts(g_matrix, i)
}

impl PerfectCode {
    /// Builds a code from an arbitrary generation matrix and wrap factor.
    /// Used for dimension plug-ins and for fault-injection tests.
    pub fn from_parts(g_matrix: CMatrix, g_scalar: Complex64) -> Result<Self> {
        if !g_matrix.is_square() {
            return invalid("generation matrix must be square");
        }
        let d = g_matrix.rows();
        let mut e_matrix = CMatrix::zeros(d, d);
        for u in 0..d.saturating_sub(1) {
            e_matrix[(u, u + 1)] = Complex64::new(1.0, 0.0);
        }
        e_matrix[(d - 1, 0)] = g_scalar;
        Ok(Self {
            d,
            g_matrix,
            g_scalar,
            e_matrix,
        })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn g_matrix(&self) -> &CMatrix {
        &self.g_matrix
    }

    pub fn g_scalar(&self) -> Complex64 {
        self.g_scalar
    }

    pub fn e_matrix(&self) -> &CMatrix {
        &self.e_matrix
    }

    /// Replaces one entry of `G`; for fault injection.
    pub fn with_g_entry(mut self, row: usize, col: usize, value: Complex64) -> Self {
        self.g_matrix[(row, col)] = value;
        self
    }

    /// `Z = sum_v diag(G x_v) E^(v-1)` evaluated literally.
    pub fn assemble_values(&self, x: &CMatrix) -> Result<Codeword> {
        let d = self.d;
        if x.rows() != d || x.cols() != d {
            return invalid(format!("symbol matrix must be {d}x{d}, got {}x{}", x.rows(), x.cols()));
        }
        let mut z = CMatrix::zeros(d, d);
        let mut e_pow = CMatrix::identity(d);
        for v in 0..d {
            let gx = self.g_matrix.mul_vec(&x.col(v))?;
            let term = CMatrix::diag(&gx).mul(&e_pow)?;
            z = z.add(&term)?;
            e_pow = e_pow.mul(&self.e_matrix)?;
        }
        Ok(Codeword { z })
    }

    pub fn assemble(&self, x: &SymbolMatrix, constellation: &Constellation) -> Result<Codeword> {
        if x.dimension() != self.d {
            return invalid(format!(
                "symbol matrix dimension {} does not match code dimension {}",
                x.dimension(),
                self.d
            ));
        }
        self.assemble_values(&x.values(constellation))
    }
}

/// Free-standing form of [`PerfectCode::assemble`].
pub fn assemble(x: &SymbolMatrix, code: &PerfectCode, constellation: &Constellation) -> Result<Codeword> {
    code.assemble(x, constellation)
}

/// 1-based `(row, col)` positions of thread `v`, ordered by row.
pub fn thread_positions(d: usize, v: usize) -> Result<Vec<(usize, usize)>> {
    if v == 0 || v > d {
        return invalid(format!("thread index {v} outside 1..={d}"));
    }
    Ok((1..=d).map(|u| (u, ((u + v - 2) % d) + 1)).collect())
}

/// Diagonal of `Phi_v`: 1 for rows `1..=D+1-v`, `g` below.
pub fn phase_diagonal(code: &PerfectCode, v: usize) -> Result<Vec<Complex64>> {
    let d = code.dimension();
    if v == 0 || v > d {
        return invalid(format!("thread index {v} outside 1..={d}"));
    }
    Ok((1..=d)
        .map(|k| if k <= d + 1 - v { Complex64::new(1.0, 0.0) } else { code.g_scalar() })
        .collect())
}

pub fn phase_matrix(code: &PerfectCode, v: usize) -> Result<CMatrix> {
    Ok(CMatrix::diag(&phase_diagonal(code, v)?))
}

/// Entries of `y` at the positions of thread `v`, ordered by row.
pub fn gather_thread(y: &CMatrix, v: usize) -> Result<Vec<Complex64>> {
    if !y.is_square() {
        return invalid("received matrix must be square");
    }
    Ok(thread_positions(y.rows(), v)?
        .into_iter()
        .map(|(r, c)| y[(r - 1, c - 1)])
        .collect())
}

impl SymbolMatrix {
    pub fn from_columns(d: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.len() != d * d {
            return invalid(format!("expected {} symbol indices, got {}", d * d, indices.len()));
        }
        Ok(Self { d, indices })
    }

    pub fn from_threads(threads: &[Vec<usize>]) -> Result<Self> {
        let d = threads.len();
        if threads.iter().any(|t| t.len() != d) {
            return invalid("every thread must carry D symbols");
        }
        Ok(Self {
            d,
            indices: threads.iter().flatten().copied().collect(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    /// 0-based entry `(u, v)`.
    pub fn get(&self, u: usize, v: usize) -> usize {
        self.indices[v * self.d + u]
    }

    /// Column `v` (0-based).
    pub fn thread(&self, v: usize) -> &[usize] {
        &self.indices[v * self.d..(v + 1) * self.d]
    }

    pub fn as_column_major(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self, constellation: &Constellation) -> CMatrix {
        CMatrix::from_fn(self.d, self.d, |u, v| constellation.point(self.get(u, v)))
    }

    pub fn validate(&self, constellation: &Constellation) -> Result<()> {
        if self.indices.iter().any(|&k| k >= constellation.size()) {
            return invalid("symbol index outside the constellation");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symbols(rng: &mut ChaCha8Rng, d: usize, m: usize) -> SymbolMatrix {
        SymbolMatrix::from_columns(d, (0..d * d).map(|_| rng.random_range(0..m)).collect()).unwrap()
    }

    #[test]
    fn golden_first_entry() {
        let code = generation_matrix(2).unwrap();
        let r5 = 5f64.sqrt();
        let want = Complex64::new(1.0, (1.0 - r5) / 2.0) / r5;
        assert!((code.g_matrix()[(0, 0)] - want).norm() < 1e-15);
    }

    #[test]
    fn generation_matrices_are_unitary_with_nonzero_first_row() {
        for d in [2, 4] {
            let code = generation_matrix(d).unwrap();
            assert!(code.g_matrix().unitarity_residual() < 1e-10, "D={d}");
            assert!(code.g_matrix().row(0).iter().all(|z| z.norm() > 1e-3));
            assert_eq!(code.g_scalar(), Complex64::new(0.0, 1.0));
        }
    }

    #[test]
    fn thetas_satisfy_minimal_polynomial() {
        for t in dimension4_thetas() {
            let p = t.powi(4) - t.powi(3) - 4.0 * t * t + 4.0 * t + 1.0;
            assert!(p.abs() < 1e-12, "{t}: {p}");
        }
    }

    #[test]
    fn unsupported_dimensions() {
        for d in [1, 3, 5, 6] {
            assert!(matches!(generation_matrix(d), Err(Error::UnsupportedDimension(x)) if x == d));
        }
    }

    #[test]
    fn shift_matrix_layout() {
        let code = generation_matrix(4).unwrap();
        let e = code.e_matrix();
        for r in 0..4 {
            for c in 0..4 {
                let want = if c == r + 1 {
                    Complex64::new(1.0, 0.0)
                } else if r == 3 && c == 0 {
                    Complex64::new(0.0, 1.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert_eq!(e[(r, c)], want);
            }
        }
    }

    #[test]
    fn thread_positions_examples() {
        assert_eq!(thread_positions(2, 1).unwrap(), vec![(1, 1), (2, 2)]);
        assert_eq!(thread_positions(2, 2).unwrap(), vec![(1, 2), (2, 1)]);
        assert!(thread_positions(2, 0).is_err());
        assert!(thread_positions(2, 3).is_err());
        let mut seen = std::collections::HashSet::new();
        for v in 1..=4 {
            for p in thread_positions(4, v).unwrap() {
                assert!(seen.insert(p));
            }
        }
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn phase_matrix_examples() {
        let c2 = generation_matrix(2).unwrap();
        let c4 = generation_matrix(4).unwrap();
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        assert_eq!(phase_diagonal(&c2, 1).unwrap(), vec![one, one]);
        assert_eq!(phase_diagonal(&c2, 2).unwrap(), vec![one, i]);
        assert_eq!(phase_diagonal(&c4, 3).unwrap(), vec![one, one, i, i]);
        assert!(phase_matrix(&c4, 5).is_err());
    }

    #[test]
    fn zero_input_gives_zero_codeword() {
        let code = generation_matrix(2).unwrap();
        let z = code.assemble_values(&CMatrix::zeros(2, 2)).unwrap().z;
        assert_eq!(z.frobenius_norm(), 0.0);
        assert!(code.assemble_values(&CMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn golden_layout_with_second_thread_silent() {
        let code = generation_matrix(2).unwrap();
        let mut x = CMatrix::zeros(2, 2);
        x[(0, 0)] = Complex64::new(0.3, -0.2);
        x[(1, 0)] = Complex64::new(-0.7, 0.4);
        let z = code.assemble_values(&x).unwrap().z;
        let gx = code.g_matrix().mul_vec(&x.col(0)).unwrap();
        assert!((z[(0, 0)] - gx[0]).norm() < 1e-15);
        assert!((z[(1, 1)] - gx[1]).norm() < 1e-15);
        assert_eq!(z[(0, 1)].norm(), 0.0);
        assert_eq!(z[(1, 0)].norm(), 0.0);
    }

    #[test]
    fn norm_preserved_and_threads_recoverable() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in [2, 4] {
            let code = generation_matrix(d).unwrap();
            let c = Constellation::qam(16).unwrap();
            for _ in 0..200 {
                let x = random_symbols(&mut rng, d, 16);
                let xv = x.values(&c);
                let z = code.assemble(&x, &c).unwrap().z;
                assert!((z.frobenius_norm_sqr() - xv.frobenius_norm_sqr()).abs() < 1e-10);
                for v in 1..=d {
                    let got = gather_thread(&z, v).unwrap();
                    let gx = code.g_matrix().mul_vec(&xv.col(v - 1)).unwrap();
                    let phi = phase_diagonal(&code, v).unwrap();
                    for k in 0..d {
                        assert!((got[k] - phi[k] * gx[k]).norm() < 1e-12);
                    }
                }
            }
        }
    }
}
