//! Depth-first Schnorr–Euchner sphere decoders and exhaustive oracles.
//!
//! Both decoders start with an infinite radius, visit children of a node in
//! order of increasing distance to the layer's centre, and resolve the
//! deepest layer by quantising to the nearest admissible value. Because the
//! deepest layer only contributes its own squared distance, that quantiser
//! is exact, so the result is always the ML point.
//!
//! Multiplications are charged through [`crate::numerics::ops`]:
//! one centre costs `(n-1-k)` multiply-accumulates plus one scaling, one
//! child costs two real multiplications per axis.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::modulation::Constellation;
use crate::numerics::{ops, CMatrix};

/// Leaf count above which the exhaustive oracle refuses to run.
pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Per coordinate: position in that coordinate's candidate list
    /// (real search) or constellation index (complex search and oracle).
    pub point: Vec<usize>,
    /// `||y - R x||^2` at `point`.
    pub metric: f64,
    /// Tree nodes whose partial distance was evaluated.
    pub visited: u64,
}

/// Real upper-triangular system with per-coordinate level sets.
#[derive(Debug, Clone)]
pub struct RealLattice {
    n: usize,
    r: Vec<f64>,
    inv_diag: Vec<f64>,
    diag_sqr: Vec<f64>,
    levels: Vec<f64>,
}

impl RealLattice {
    /// `r` is row-major `n x n`; entries below the diagonal are ignored.
    pub fn new(n: usize, r: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if n == 0 || r.len() != n * n {
            return invalid("real lattice needs an n x n matrix with n >= 1");
        }
        if levels.is_empty() {
            return invalid("empty level set");
        }
        if levels.windows(2).any(|w| w[0] > w[1]) {
            return invalid("levels must be sorted ascending");
        }
        let mut inv_diag = Vec::with_capacity(n);
        let mut diag_sqr = Vec::with_capacity(n);
        for k in 0..n {
            let d = r[k * n + k];
            if !(d > 0.0) {
                return Err(Error::DegenerateChannel(format!("r[{k}][{k}] = {d} is not positive")));
            }
            inv_diag.push(ops::recip(d));
            diag_sqr.push(ops::square(d));
        }
        Ok(Self {
            n,
            r,
            inv_diag,
            diag_sqr,
            levels,
        })
    }

    /// Real part of a complex upper-triangular matrix.
    pub fn from_real_part(r: &CMatrix, levels: Vec<f64>) -> Result<Self> {
        let n = r.rows();
        Self::new(n, r.as_slice().iter().map(|z| z.re).collect(), levels)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.n + j]
    }

    /// `||y - R x||^2`, uncounted.
    pub fn metric(&self, y: &[f64], x: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| {
                let rx: f64 = (i..self.n).map(|j| self.r(i, j) * x[j]).sum();
                (y[i] - rx).powi(2)
            })
            .sum()
    }
}

/// Ascending candidates visited outward from the one nearest to `c`.
struct ZigZag {
    c: f64,
    lo: isize,
    hi: usize,
    first: Option<usize>,
}

impl ZigZag {
    fn new(values: &[f64], c: f64) -> Self {
        let p = nearest(values, c);
        Self {
            c,
            lo: p as isize - 1,
            hi: p + 1,
            first: Some(p),
        }
    }

    fn next(&mut self, values: &[f64]) -> Option<usize> {
        if let Some(p) = self.first.take() {
            return Some(p);
        }
        let lo_ok = self.lo >= 0;
        let hi_ok = self.hi < values.len();
        let take_lo = match (lo_ok, hi_ok) {
            (false, false) => return None,
            (true, false) => true,
            (false, true) => false,
            (true, true) => (self.c - values[self.lo as usize]) <= (values[self.hi] - self.c),
        };
        if take_lo {
            self.lo -= 1;
            Some((self.lo + 1) as usize)
        } else {
            self.hi += 1;
            Some(self.hi - 1)
        }
    }
}

fn nearest(values: &[f64], x: f64) -> usize {
    let p = values.partition_point(|&v| v < x);
    if p == 0 {
        0
    } else if p == values.len() {
        p - 1
    } else if (x - values[p - 1]) <= (values[p] - x) {
        p - 1
    } else {
        p
    }
}

/// Real sphere decoder over the lattice's default level set.
pub fn real_sd(y: &[f64], lattice: &RealLattice) -> Result<SearchResult> {
    let sets: Vec<&[f64]> = vec![lattice.levels(); lattice.dim()];
    real_sd_with_levels(y, lattice, &sets)
}

/// Real sphere decoder with an explicit ascending candidate list per coordinate.
pub fn real_sd_with_levels(y: &[f64], lattice: &RealLattice, levels: &[&[f64]]) -> Result<SearchResult> {
    let n = lattice.n;
    if y.len() != n || levels.len() != n {
        return invalid(format!("dimension mismatch: lattice {n}, y {}, level sets {}", y.len(), levels.len()));
    }
    if levels.iter().any(|l| l.is_empty()) {
        return invalid("empty level set");
    }

    let mut best = f64::INFINITY;
    let mut best_x = vec![0usize; n];
    let mut x = vec![0usize; n];
    let mut xv = vec![0f64; n];
    let mut centre = vec![0f64; n];
    let mut above = vec![0f64; n];
    let mut zig: Vec<Option<ZigZag>> = (0..n).map(|_| None).collect();
    let mut visited = 0u64;

    let top = n - 1;
    centre[top] = ops::rmul(y[top], lattice.inv_diag[top]);
    above[top] = 0.0;
    let mut k = top;
    if k > 0 {
        zig[k] = Some(ZigZag::new(levels[k], centre[k]));
    }

    loop {
        if k == 0 {
            let p = nearest(levels[0], centre[0]);
            let e = centre[0] - levels[0][p];
            let d = above[0] + ops::rmul(lattice.diag_sqr[0], ops::square(e));
            visited += 1;
            if d < best {
                best = d;
                x[0] = p;
                best_x.copy_from_slice(&x);
            }
            if n == 1 {
                break;
            }
            k = 1;
            continue;
        }
        let next = zig[k].as_mut().and_then(|z| z.next(levels[k]));
        let Some(p) = next else {
            k += 1;
            if k == n {
                break;
            }
            continue;
        };
        let e = centre[k] - levels[k][p];
        let d = above[k] + ops::rmul(lattice.diag_sqr[k], ops::square(e));
        visited += 1;
        if d >= best {
            k += 1;
            if k == n {
                break;
            }
            continue;
        }
        x[k] = p;
        xv[k] = levels[k][p];
        above[k - 1] = d;
        k -= 1;
        let row = &lattice.r[k * n..(k + 1) * n];
        let interference = ops::rdot(&row[k + 1..], &xv[k + 1..]);
        centre[k] = ops::rmul(y[k] - interference, lattice.inv_diag[k]);
        if k > 0 {
            zig[k] = Some(ZigZag::new(levels[k], centre[k]));
        }
    }

    Ok(SearchResult {
        point: best_x,
        metric: best,
        visited,
    })
}

/// Complex upper-triangular system.
#[derive(Debug, Clone)]
pub struct ComplexLattice {
    n: usize,
    r: Vec<Complex64>,
    inv_diag: Vec<f64>,
    diag_sqr: Vec<f64>,
}

/// Candidate set of one complex coordinate: the product of two ascending
/// axis level lists.
#[derive(Debug, Clone, Copy)]
pub struct AxisSet<'a> {
    pub re: &'a [f64],
    pub im: &'a [f64],
}

impl ComplexLattice {
    /// `r` must be upper triangular with a real positive diagonal.
    pub fn new(r: &CMatrix) -> Result<Self> {
        if !r.is_square() {
            return invalid("complex lattice needs a square matrix");
        }
        let n = r.rows();
        let mut inv_diag = Vec::with_capacity(n);
        let mut diag_sqr = Vec::with_capacity(n);
        for k in 0..n {
            let d = r[(k, k)];
            if !(d.re > 0.0) || d.im.abs() > 1e-12 * d.re {
                return Err(Error::DegenerateChannel(format!("r[{k}][{k}] = {d} is not real positive")));
            }
            inv_diag.push(ops::recip(d.re));
            diag_sqr.push(ops::square(d.re));
        }
        Ok(Self {
            n,
            r: r.as_slice().to_vec(),
            inv_diag,
            diag_sqr,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn metric(&self, y: &[Complex64], x: &[Complex64]) -> f64 {
        (0..self.n)
            .map(|i| {
                let rx: Complex64 = (i..self.n).map(|j| self.r[i * self.n + j] * x[j]).sum();
                (y[i] - rx).norm_sqr()
            })
            .sum()
    }
}

struct Children {
    list: Vec<(f64, usize, usize)>,
    cursor: usize,
}

/// Complex sphere decoder over per-coordinate product sets. Returned points
/// are `(re position, im position)` pairs within each coordinate's set.
pub fn complex_sd_axes(y: &[Complex64], lattice: &ComplexLattice, sets: &[AxisSet<'_>]) -> Result<(Vec<(usize, usize)>, f64, u64)> {
    let n = lattice.n;
    if y.len() != n || sets.len() != n {
        return invalid(format!("dimension mismatch: lattice {n}, y {}, sets {}", y.len(), sets.len()));
    }
    if sets.iter().any(|s| s.re.is_empty() || s.im.is_empty()) {
        return invalid("empty candidate set");
    }

    let mut best = f64::INFINITY;
    let mut best_x = vec![(0usize, 0usize); n];
    let mut x = vec![(0usize, 0usize); n];
    let mut xv = vec![Complex64::new(0.0, 0.0); n];
    let mut centre = vec![Complex64::new(0.0, 0.0); n];
    let mut above = vec![0f64; n];
    let mut children: Vec<Children> = (0..n)
        .map(|_| Children {
            list: Vec::new(),
            cursor: 0,
        })
        .collect();
    let mut visited = 0u64;

    let expand = |k: usize, c: Complex64, ch: &mut Children| {
        let s = sets[k];
        let w = lattice.diag_sqr[k];
        let dre: Vec<f64> = s.re.iter().map(|&a| ops::rmul(w, ops::square(c.re - a))).collect();
        let dim: Vec<f64> = s.im.iter().map(|&b| ops::rmul(w, ops::square(c.im - b))).collect();
        ch.list.clear();
        ch.cursor = 0;
        for (i, &a) in dre.iter().enumerate() {
            for (j, &b) in dim.iter().enumerate() {
                ch.list.push((a + b, i, j));
            }
        }
        ch.list.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));
    };

    let top = n - 1;
    centre[top] = ops::cmul_re(y[top], lattice.inv_diag[top]);
    let mut k = top;
    if k > 0 {
        expand(k, centre[k], &mut children[k]);
    }

    loop {
        if k == 0 {
            let s = sets[0];
            let pr = nearest(s.re, centre[0].re);
            let pi = nearest(s.im, centre[0].im);
            let w = lattice.diag_sqr[0];
            let d = above[0]
                + ops::rmul(w, ops::square(centre[0].re - s.re[pr]))
                + ops::rmul(w, ops::square(centre[0].im - s.im[pi]));
            visited += 1;
            if d < best {
                best = d;
                x[0] = (pr, pi);
                best_x.copy_from_slice(&x);
            }
            if n == 1 {
                break;
            }
            k = 1;
            continue;
        }
        let ch = &mut children[k];
        if ch.cursor >= ch.list.len() {
            k += 1;
            if k == n {
                break;
            }
            continue;
        }
        let (inc, pr, pi) = ch.list[ch.cursor];
        ch.cursor += 1;
        let d = above[k] + inc;
        visited += 1;
        if d >= best {
            k += 1;
            if k == n {
                break;
            }
            continue;
        }
        x[k] = (pr, pi);
        xv[k] = Complex64::new(sets[k].re[pr], sets[k].im[pi]);
        above[k - 1] = d;
        k -= 1;
        let row = &lattice.r[k * n..(k + 1) * n];
        let mut interference = Complex64::new(0.0, 0.0);
        for j in (k + 1)..n {
            interference += ops::cmul(row[j], xv[j]);
        }
        centre[k] = ops::cmul_re(y[k] - interference, lattice.inv_diag[k]);
        if k > 0 {
            expand(k, centre[k], &mut children[k]);
        }
    }

    Ok((best_x, best, visited))
}

/// Exact ML over `constellation^n` for a complex triangular system.
pub fn complex_sd(y: &[Complex64], lattice: &ComplexLattice, constellation: &Constellation) -> Result<SearchResult> {
    let levels = constellation.level_values();
    let sets = vec![
        AxisSet {
            re: &levels,
            im: &levels,
        };
        lattice.dim()
    ];
    let (pts, metric, visited) = complex_sd_axes(y, lattice, &sets)?;
    Ok(SearchResult {
        point: pts.iter().map(|&(a, b)| constellation.index_from_levels(a, b)).collect(),
        metric,
        visited,
    })
}

/// Exhaustive `argmin_x ||y - A x||^2` over `constellation^dim`.
///
/// Candidates are enumerated in canonical order (coordinate 0 most
/// significant, constellation index order within a coordinate) and the
/// first minimiser wins.
pub fn brute_force_ml(y: &[Complex64], a: &CMatrix, constellation: &Constellation, dim: usize) -> Result<SearchResult> {
    if a.cols() != dim || a.rows() != y.len() {
        return invalid("effective matrix does not match y and dim");
    }
    let m = constellation.size();
    if (m as f64).powi(dim as i32) > BRUTE_FORCE_LIMIT {
        return Err(Error::Infeasible(format!(
            "exhaustive search over {m}^{dim} candidates exceeds the {BRUTE_FORCE_LIMIT:e} limit"
        )));
    }
    let total = m.pow(dim as u32);
    let mut idx = vec![0usize; dim];
    let mut best = f64::INFINITY;
    let mut best_idx = idx.clone();
    let mut x = vec![Complex64::new(0.0, 0.0); dim];
    for count in 0..total {
        let mut rem = count;
        for c in (0..dim).rev() {
            idx[c] = rem % m;
            rem /= m;
            x[c] = constellation.point(idx[c]);
        }
        let mut metric = 0.0;
        for i in 0..a.rows() {
            let ax: Complex64 = a.row(i).iter().zip(&x).map(|(p, q)| p * q).sum();
            metric += (y[i] - ax).norm_sqr();
        }
        if metric < best {
            best = metric;
            best_idx.copy_from_slice(&idx);
        }
    }
    Ok(SearchResult {
        point: best_idx,
        metric: best,
        visited: total as u64,
    })
}

/// Exhaustive oracle for a real system `y = R x` with per-coordinate level lists.
pub fn brute_force_real(y: &[f64], lattice: &RealLattice, levels: &[&[f64]]) -> Result<SearchResult> {
    let n = lattice.dim();
    if levels.len() != n || y.len() != n {
        return invalid("dimension mismatch");
    }
    let sizes: Vec<usize> = levels.iter().map(|l| l.len()).collect();
    let total: f64 = sizes.iter().map(|&s| s as f64).product();
    if total > BRUTE_FORCE_LIMIT {
        return Err(Error::Infeasible("real exhaustive search too large".into()));
    }
    let total = total as usize;
    let mut best = f64::INFINITY;
    let mut best_idx = vec![0; n];
    let mut idx = vec![0; n];
    let mut xv = vec![0.0; n];
    for count in 0..total {
        let mut rem = count;
        for c in (0..n).rev() {
            idx[c] = rem % sizes[c];
            rem /= sizes[c];
            xv[c] = levels[c][idx[c]];
        }
        let m = lattice.metric(y, &xv);
        if m < best {
            best = m;
            best_idx.copy_from_slice(&idx);
        }
    }
    Ok(SearchResult {
        point: best_idx,
        metric: best,
        visited: total as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{complex_gaussian, substream};
    use crate::numerics::qr;
    use rand::Rng;

    fn random_upper(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        let mut r = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                r[i * n + j] = if i == j { rng.random_range(0.2..2.0) } else { rng.random_range(-1.5..1.5) };
            }
        }
        r
    }

    #[test]
    fn noiseless_real_recovery() {
        let mut rng = substream(1, 0, 0);
        let levels = vec![-3.0, -1.0, 1.0, 3.0];
        for n in 1..=4 {
            let lat = RealLattice::new(n, random_upper(&mut rng, n), levels.clone()).unwrap();
            for _ in 0..50 {
                let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
                let x: Vec<f64> = idx.iter().map(|&i| levels[i]).collect();
                let y: Vec<f64> = (0..n).map(|i| (i..n).map(|j| lat.r(i, j) * x[j]).sum()).collect();
                let res = real_sd(&y, &lat).unwrap();
                assert_eq!(res.point, idx);
                assert!(res.metric < 1e-20);
            }
        }
    }

    #[test]
    fn identity_lattice_is_sign_quantisation() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let lat = RealLattice::new(3, vec![1., 0., 0., 0., 1., 0., 0., 0., 1.], vec![-h, h]).unwrap();
        let res = real_sd(&[0.3, -2.0, 0.01], &lat).unwrap();
        assert_eq!(res.point, vec![1, 0, 1]);
    }

    #[test]
    fn real_matches_exhaustive() {
        let mut rng = substream(2, 0, 0);
        let levels = vec![-0.7, -0.2, 0.4, 1.1, 1.3];
        for n in 1..=4 {
            for _ in 0..400 {
                let lat = RealLattice::new(n, random_upper(&mut rng, n), levels.clone()).unwrap();
                let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                let sets: Vec<&[f64]> = vec![&levels; n];
                let sd = real_sd(&y, &lat).unwrap();
                let bf = brute_force_real(&y, &lat, &sets).unwrap();
                assert!((sd.metric - bf.metric).abs() < 1e-9);
                let xv: Vec<f64> = sd.point.iter().map(|&i| levels[i]).collect();
                assert!((lat.metric(&y, &xv) - sd.metric).abs() < 1e-9);
                assert!(sd.visited <= levels.len().pow(n as u32) as u64 * n as u64);
            }
        }
    }

    #[test]
    fn restricted_levels_respected() {
        let mut rng = substream(3, 0, 0);
        let full = vec![-3.0, -1.0, 1.0, 3.0];
        let half = vec![-3.0, 3.0];
        let lat = RealLattice::new(3, random_upper(&mut rng, 3), full.clone()).unwrap();
        for coord in 0..3 {
            for _ in 0..200 {
                let y: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
                let mut sets: Vec<&[f64]> = vec![&full; 3];
                sets[coord] = &half;
                let sd = real_sd_with_levels(&y, &lat, &sets).unwrap();
                let bf = brute_force_real(&y, &lat, &sets).unwrap();
                assert!((sd.metric - bf.metric).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn complex_matches_exhaustive() {
        let mut rng = substream(4, 0, 0);
        let c = Constellation::qam(4).unwrap();
        for _ in 0..2000 {
            let a = CMatrix::from_fn(2, 2, |_, _| complex_gaussian(&mut rng, 1.0));
            let f = qr(&a).unwrap();
            let y: Vec<Complex64> = (0..2).map(|_| complex_gaussian(&mut rng, 2.0)).collect();
            let lat = ComplexLattice::new(&f.r).unwrap();
            let sd = complex_sd(&y, &lat, &c).unwrap();
            let bf = brute_force_ml(&y, &f.r, &c, 2).unwrap();
            assert!((sd.metric - bf.metric).abs() < 1e-9);
            assert!(sd.visited <= 16 + 4 + 1);
        }
    }

    #[test]
    fn complex_noiseless_recovery() {
        let mut rng = substream(5, 0, 0);
        let c = Constellation::qam(16).unwrap();
        for _ in 0..200 {
            let a = CMatrix::from_fn(3, 3, |_, _| complex_gaussian(&mut rng, 1.0));
            let f = qr(&a).unwrap();
            let idx: Vec<usize> = (0..3).map(|_| rng.random_range(0..16)).collect();
            let x: Vec<Complex64> = idx.iter().map(|&i| c.point(i)).collect();
            let y = f.r.mul_vec(&x).unwrap();
            let lat = ComplexLattice::new(&f.r).unwrap();
            let sd = complex_sd(&y, &lat, &c).unwrap();
            assert_eq!(sd.point, idx);
            assert!(sd.metric < 1e-20);
        }
    }

    #[test]
    fn brute_force_tie_takes_canonical_first() {
        let c = Constellation::qam(4).unwrap();
        let a = CMatrix::from_rows(&[vec![Complex64::new(1.0, 0.0)]]).unwrap();
        let res = brute_force_ml(&[Complex64::new(0.0, 0.0)], &a, &c, 1).unwrap();
        assert_eq!(res.point, vec![0]);
        let res = brute_force_ml(&[c.point(2)], &a, &c, 1).unwrap();
        assert_eq!(res.point, vec![2]);
        assert_eq!(res.metric, 0.0);
    }

    #[test]
    fn brute_force_guard() {
        let c = Constellation::qam(16).unwrap();
        let a = CMatrix::identity(5);
        let y = vec![Complex64::new(0.0, 0.0); 5];
        assert!(matches!(brute_force_ml(&y, &a, &c, 5), Err(Error::Infeasible(_))));
    }

    #[test]
    fn empty_levels_rejected() {
        assert!(RealLattice::new(1, vec![1.0], vec![]).is_err());
        let lat = RealLattice::new(1, vec![1.0], vec![0.0]).unwrap();
        let empty: &[f64] = &[];
        assert!(real_sd_with_levels(&[0.0], &lat, &[empty]).is_err());
    }
}
