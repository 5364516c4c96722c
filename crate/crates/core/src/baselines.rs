//! Comparator systems: the raw perfect code over `H` with joint ML
//! decoding, and fully precoded multiple beamforming.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::modulation::Constellation;
use crate::numerics::{ops, qr, CMatrix};
use crate::pstbc::{PerfectCode, SymbolMatrix};
use crate::spheredec::{complex_sd, ComplexLattice, SearchResult};

/// Unitarity tolerance for precoders.
pub const UNITARY_TOLERANCE: f64 = 1e-10;

/// Joint ML decoder for `Y = H Z(X) + N`.
///
/// `vec(Y) = H_eff vec(X)` with column-major vectorisation; column `k` of
/// `H_eff` is `vec(H Z(e_k))`.
#[derive(Debug, Clone)]
pub struct PcDecoder {
    code: PerfectCode,
    constellation: Constellation,
    /// `Z(e_k)` for every unit symbol matrix, column-major order of `k`.
    basis: Vec<CMatrix>,
}

/// Channel-dependent part of the PC decoder.
#[derive(Debug, Clone)]
pub struct PcPrecomputation {
    pub q: CMatrix,
    pub lattice: ComplexLattice,
}

impl PcDecoder {
    /// Refuses sizes where the `M^(D^2)` search is out of reach.
    pub fn new(code: PerfectCode, constellation: Constellation) -> Result<Self> {
        let d = code.dimension();
        if d > 2 && constellation.size() > 4 {
            return Err(Error::Infeasible(format!(
                "joint ML over {}^{} symbol matrices is out of reach; use 4-QAM for dimension {d}",
                constellation.size(),
                d * d
            )));
        }
        let mut basis = Vec::with_capacity(d * d);
        for k in 0..d * d {
            let e = CMatrix::from_fn(d, d, |u, v| {
                if v * d + u == k {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            basis.push(code.assemble_values(&e)?.z);
        }
        Ok(Self {
            code,
            constellation,
            basis,
        })
    }

    pub fn code(&self) -> &PerfectCode {
        &self.code
    }

    /// `H_eff`, counting only the products with nonzero code entries.
    pub fn effective_matrix(&self, h: &CMatrix) -> Result<CMatrix> {
        let d = self.code.dimension();
        if h.cols() != d {
            return invalid(format!("channel has {} columns, code dimension is {d}", h.cols()));
        }
        let nr = h.rows();
        let mut heff = CMatrix::zeros(nr * d, d * d);
        for (k, zk) in self.basis.iter().enumerate() {
            let mut col = vec![Complex64::new(0.0, 0.0); nr * d];
            for c in 0..d {
                for s in 0..d {
                    let z = zk[(s, c)];
                    if z == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for r in 0..nr {
                        col[c * nr + r] += ops::cmul(h[(r, s)], z);
                    }
                }
            }
            heff.set_col(k, &col);
        }
        Ok(heff)
    }

    pub fn prepare(&self, h: &CMatrix) -> Result<PcPrecomputation> {
        let f = qr(&self.effective_matrix(h)?)?;
        Ok(PcPrecomputation {
            lattice: ComplexLattice::new(&f.r)?,
            q: f.q,
        })
    }

    pub fn decode(&self, y: &CMatrix, pre: &PcPrecomputation) -> Result<(SymbolMatrix, SearchResult)> {
        let d = self.code.dimension();
        if y.cols() != d || y.rows() * d != pre.q.rows() {
            return invalid("received matrix does not match the precomputation");
        }
        let nr = y.rows();
        let vec_y: Vec<Complex64> = (0..d * nr).map(|i| y[(i % nr, i / nr)]).collect();
        let q = &pre.q;
        let y_tilde: Vec<Complex64> = (0..q.cols())
            .map(|j| (0..q.rows()).map(|i| ops::cmul_conj(q[(i, j)], vec_y[i])).sum())
            .collect();
        let res = complex_sd(&y_tilde, &pre.lattice, &self.constellation)?;
        Ok((SymbolMatrix::from_columns(d, res.point.clone())?, res))
    }
}

/// Joint ML decision for one PC codeword.
pub fn decode_pc(y: &CMatrix, h: &CMatrix, code: &PerfectCode, constellation: &Constellation) -> Result<SymbolMatrix> {
    let dec = PcDecoder::new(code.clone(), constellation.clone())?;
    let pre = dec.prepare(h)?;
    dec.decode(y, &pre).map(|(x, _)| x)
}

#[derive(Debug, Clone)]
pub struct FpmbConfig {
    pub precoder: CMatrix,
    pub s: usize,
}

impl FpmbConfig {
    pub fn new(precoder: CMatrix) -> Result<Self> {
        if !precoder.is_square() {
            return invalid("precoder must be square");
        }
        if !precoder.is_finite() {
            return invalid("precoder contains NaN or Inf");
        }
        let res = precoder.unitarity_residual();
        if res > UNITARY_TOLERANCE {
            return invalid(format!("precoder is not unitary (residual {res:.3e})"));
        }
        Ok(Self {
            s: precoder.rows(),
            precoder,
        })
    }

    /// Default precoder: the perfect-code generation matrix.
    pub fn from_code(code: &PerfectCode) -> Result<Self> {
        Self::new(code.g_matrix().clone())
    }

    pub fn identity(s: usize) -> Self {
        Self {
            precoder: CMatrix::identity(s),
            s,
        }
    }
}

/// `Theta x`.
pub fn fpmb_encode(x: &[Complex64], config: &FpmbConfig) -> Result<Vec<Complex64>> {
    if x.len() != config.s {
        return invalid(format!("{} symbols for {} streams", x.len(), config.s));
    }
    config.precoder.mul_vec(x)
}

/// Decoder for `y = Lambda Theta x + n`.
#[derive(Debug, Clone)]
pub struct FpmbDecoder {
    pub config: FpmbConfig,
    pub constellation: Constellation,
}

#[derive(Debug, Clone)]
pub struct FpmbPrecomputation {
    pub q: CMatrix,
    pub lattice: ComplexLattice,
}

impl FpmbDecoder {
    pub fn new(config: FpmbConfig, constellation: Constellation) -> Self {
        Self { config, constellation }
    }

    pub fn prepare(&self, lambda: &[f64]) -> Result<FpmbPrecomputation> {
        if lambda.len() != self.config.s {
            return invalid("singular value count does not match the stream count");
        }
        if let Some(l) = lambda.iter().find(|l| !(**l > 0.0)) {
            return Err(Error::DegenerateChannel(format!("singular value {l} is not positive")));
        }
        let f = qr(&self.config.precoder.scale_rows(lambda)?)?;
        Ok(FpmbPrecomputation {
            lattice: ComplexLattice::new(&f.r)?,
            q: f.q,
        })
    }

    pub fn decode(&self, y: &[Complex64], pre: &FpmbPrecomputation) -> Result<SearchResult> {
        if y.len() != self.config.s {
            return invalid("received vector length does not match the stream count");
        }
        let q = &pre.q;
        let y_tilde: Vec<Complex64> = (0..q.cols())
            .map(|j| (0..q.rows()).map(|i| ops::cmul_conj(q[(i, j)], y[i])).sum())
            .collect();
        complex_sd(&y_tilde, &pre.lattice, &self.constellation)
    }
}

/// One-shot FPMB decision.
pub fn fpmb_decode(y: &[Complex64], lambda: &[f64], config: &FpmbConfig, constellation: &Constellation) -> Result<Vec<usize>> {
    let dec = FpmbDecoder::new(config.clone(), constellation.clone());
    let pre = dec.prepare(lambda)?;
    Ok(dec.decode(y, &pre)?.point)
}

/// Parses a precoder: one row per line, whitespace-separated `re,im` entries.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_precoder(text: &str) -> Result<FpmbConfig> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                let (re, im) = tok
                    .split_once(',')
                    .ok_or_else(|| Error::Config(format!("line {}: entry `{tok}` is not `re,im`", n + 1)))?;
                let parse = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Config(format!("line {}: `{s}`: {e}", n + 1)))
                };
                Ok(Complex64::new(parse(re)?, parse(im)?))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Config("precoder file has no rows".into()));
    }
    FpmbConfig::new(CMatrix::from_rows(&rows)?)
}

pub fn load_precoder(path: &Path) -> Result<FpmbConfig> {
    parse_precoder(&std::fs::read_to_string(path)?)
}

/// Writes a precoder in the format read by [`parse_precoder`].
pub fn format_precoder(theta: &CMatrix) -> String {
    let mut out = String::new();
    for i in 0..theta.rows() {
        let row: Vec<String> = theta.row(i).iter().map(|z| format!("{:e},{:e}", z.re, z.im)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_gaussian, received_pc, received_streams, substream, NoiseModel};
    use crate::numerics::counted_context;
    use crate::pstbc::generation_matrix;
    use crate::spheredec::brute_force_ml;
    use rand::Rng;

    #[test]
    fn pc_noiseless_recovery() {
        let mut rng = substream(21, 0, 0);
        for (d, m) in [(2, 4), (2, 16), (4, 4)] {
            let code = generation_matrix(d).unwrap();
            let c = Constellation::qam(m).unwrap();
            let dec = PcDecoder::new(code.clone(), c.clone()).unwrap();
            for _ in 0..20 {
                let h = CMatrix::from_fn(d, d, |_, _| complex_gaussian(&mut rng, 1.0));
                let x = SymbolMatrix::from_columns(d, (0..d * d).map(|_| rng.random_range(0..m)).collect()).unwrap();
                let z = code.assemble(&x, &c).unwrap();
                let y = received_pc(&h, &z.z, &NoiseModel::noiseless(d), &mut rng).unwrap();
                let pre = dec.prepare(&h).unwrap();
                assert_eq!(dec.decode(&y, &pre).unwrap().0, x);
            }
        }
    }

    #[test]
    fn pc_effective_matrix_is_linear_model() {
        let mut rng = substream(22, 0, 0);
        let code = generation_matrix(2).unwrap();
        let c = Constellation::qam(16).unwrap();
        let dec = PcDecoder::new(code.clone(), c.clone()).unwrap();
        let h = CMatrix::from_fn(2, 2, |_, _| complex_gaussian(&mut rng, 1.0));
        let x = SymbolMatrix::from_columns(2, vec![3, 7, 11, 0]).unwrap();
        let z = code.assemble(&x, &c).unwrap();
        let hz = h.mul(&z.z).unwrap();
        let heff = dec.effective_matrix(&h).unwrap();
        let xv: Vec<Complex64> = x.as_column_major().iter().map(|&k| c.point(k)).collect();
        let y = heff.mul_vec(&xv).unwrap();
        for i in 0..4 {
            assert!((y[i] - hz[(i % 2, i / 2)]).norm() < 1e-12);
        }
    }

    #[test]
    fn pc_matches_exhaustive() {
        let mut rng = substream(23, 0, 0);
        let code = generation_matrix(2).unwrap();
        let c = Constellation::qam(4).unwrap();
        let dec = PcDecoder::new(code.clone(), c.clone()).unwrap();
        let noise = NoiseModel::from_db(3.0, 2).unwrap();
        for _ in 0..300 {
            let h = CMatrix::from_fn(2, 2, |_, _| complex_gaussian(&mut rng, 1.0));
            let x = SymbolMatrix::from_columns(2, (0..4).map(|_| rng.random_range(0..4)).collect()).unwrap();
            let z = code.assemble(&x, &c).unwrap();
            let y = received_pc(&h, &z.z, &noise, &mut rng).unwrap();
            let pre = dec.prepare(&h).unwrap();
            let (_, res) = dec.decode(&y, &pre).unwrap();
            let heff = dec.effective_matrix(&h).unwrap();
            let vec_y: Vec<Complex64> = (0..4).map(|i| y[(i % 2, i / 2)]).collect();
            let bf = brute_force_ml(&vec_y, &heff, &c, 4).unwrap();
            assert_eq!(res.point, bf.point);
        }
    }

    #[test]
    fn pc_refuses_large_search() {
        let code = generation_matrix(4).unwrap();
        let c = Constellation::qam(16).unwrap();
        assert!(matches!(PcDecoder::new(code, c), Err(Error::Infeasible(_))));
    }

    #[test]
    fn pc_cost_falls_with_snr() {
        let code = generation_matrix(2).unwrap();
        let c = Constellation::qam(16).unwrap();
        let dec = PcDecoder::new(code.clone(), c.clone()).unwrap();
        let mut cost = Vec::new();
        for snr in [0.0, 20.0] {
            let mut rng = substream(24, 0, 0);
            let noise = NoiseModel::from_db(snr, 2).unwrap();
            let scope = counted_context("pc-test").unwrap();
            for _ in 0..200 {
                let h = CMatrix::from_fn(2, 2, |_, _| complex_gaussian(&mut rng, 1.0));
                let x = SymbolMatrix::from_columns(2, (0..4).map(|_| rng.random_range(0..16)).collect()).unwrap();
                let z = code.assemble(&x, &c).unwrap();
                let y = received_pc(&h, &z.z, &noise, &mut rng).unwrap();
                let pre = dec.prepare(&h).unwrap();
                dec.decode(&y, &pre).unwrap();
            }
            cost.push(scope.real_mults());
        }
        assert!(cost[0] > cost[1], "{cost:?}");
    }

    #[test]
    fn fpmb_identity_is_per_stream_slicing() {
        let mut rng = substream(25, 0, 0);
        let c = Constellation::qam(16).unwrap();
        let cfg = FpmbConfig::identity(3);
        let noise = NoiseModel::from_db(5.0, 3).unwrap();
        for _ in 0..200 {
            let lambda = [1.7, 1.1, 0.4];
            let idx: Vec<usize> = (0..3).map(|_| rng.random_range(0..16)).collect();
            let x: Vec<Complex64> = idx.iter().map(|&k| c.point(k)).collect();
            let s = fpmb_encode(&x, &cfg).unwrap();
            let y = received_streams(&lambda, &s, &noise, &mut rng).unwrap();
            let got = fpmb_decode(&y, &lambda, &cfg, &c).unwrap();
            let want: Vec<usize> = y.iter().zip(&lambda).map(|(z, l)| c.demap_hard(z / l)).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn fpmb_noiseless_and_exhaustive() {
        let mut rng = substream(26, 0, 0);
        let code = generation_matrix(2).unwrap();
        let cfg = FpmbConfig::from_code(&code).unwrap();
        let c = Constellation::qam(16).unwrap();
        let noise = NoiseModel::from_db(6.0, 2).unwrap();
        for _ in 0..300 {
            let lambda = [rng.random_range(0.5..2.5), rng.random_range(0.05..0.5)];
            let idx: Vec<usize> = (0..2).map(|_| rng.random_range(0..16)).collect();
            let x: Vec<Complex64> = idx.iter().map(|&k| c.point(k)).collect();
            let s = fpmb_encode(&x, &cfg).unwrap();
            let clean = received_streams(&lambda, &s, &NoiseModel::noiseless(2), &mut rng).unwrap();
            assert_eq!(fpmb_decode(&clean, &lambda, &cfg, &c).unwrap(), idx);
            let y = received_streams(&lambda, &s, &noise, &mut rng).unwrap();
            let a = cfg.precoder.scale_rows(&lambda).unwrap();
            let bf = brute_force_ml(&y, &a, &c, 2).unwrap();
            assert_eq!(fpmb_decode(&y, &lambda, &cfg, &c).unwrap(), bf.point);
        }
    }

    #[test]
    fn precoder_file_roundtrip_and_rejection() {
        let code = generation_matrix(4).unwrap();
        let text = format_precoder(code.g_matrix());
        let cfg = parse_precoder(&text).unwrap();
        assert_eq!(cfg.s, 4);
        assert!(parse_precoder("1,0 0,0\n0,0 2,0\n").is_err());
        assert!(parse_precoder("1 0\n").is_err());
        assert!(parse_precoder("").is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("theta.txt");
        std::fs::write(&path, "# identity\n1,0 0,0\n0,0 1,0\n").unwrap();
        assert_eq!(load_precoder(&path).unwrap().s, 2);
    }
}
