//! Per-bit metrics `Gamma(b) = min ||y~ - R x||^2` over the symbol vectors
//! of one group whose labelled bit equals `b`.
//!
//! With a real `R` and square QAM, a bit on the real axis only involves
//! `Re y~` and the real parts of the group, and likewise for the imaginary
//! axis. The split metric drops the other axis' unconstrained minimum,
//! which is the same for both values of `b`.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::modulation::Constellation;
use crate::pcmb_decoder::{PcmbPrecomputation, ThreadObservation};
use crate::spheredec::{complex_sd_axes, real_sd_with_levels, AxisSet, ComplexLattice, RealLattice};

/// Coded bit `k' -> (k, (m, n), j)`: codeword `k`, thread `m` (column of
/// the symbol matrix), position `n` within the thread (row), label bit `j`.
/// `m` and `n` are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitLocation {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub j: usize,
}

impl BitLocation {
    pub fn validate(&self, d: usize, constellation: &Constellation) -> Result<()> {
        if self.m == 0 || self.m > d || self.n == 0 || self.n > d || self.j >= constellation.bits_per_symbol() {
            return invalid(format!("bit location {self:?} outside D={d}, {} bits", constellation.bits_per_symbol()));
        }
        Ok(())
    }
}

/// Triangular system a group is decoded on.
#[derive(Debug, Clone, Copy)]
pub enum GroupLattice<'a> {
    /// Real `R`: each axis is searched on its own.
    Split(&'a RealLattice),
    Complex(&'a ComplexLattice),
}

impl<'a> GroupLattice<'a> {
    pub fn of(pre: &'a PcmbPrecomputation) -> Self {
        match pre.real_lattice() {
            Some(r) => Self::Split(r),
            None => Self::Complex(pre.complex_lattice()),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Self::Split(r) => r.dim(),
            Self::Complex(c) => c.dim(),
        }
    }
}

fn axis_part(y: &[Complex64], real: bool) -> Vec<f64> {
    y.iter().map(|z| if real { z.re } else { z.im }).collect()
}

/// Axis-only metric: bit `j` of position `n` (0-based) restricted to `b`.
pub fn bit_metric_split(y_tilde: &[Complex64], lattice: &RealLattice, n: usize, j: usize, b: u8, c: &Constellation) -> Result<f64> {
    let levels = c.level_values();
    let subset = c.axis_subset(j, b);
    let mut sets: Vec<&[f64]> = vec![&levels; lattice.dim()];
    if n >= sets.len() {
        return invalid("position outside the group");
    }
    sets[n] = &subset;
    let y = axis_part(y_tilde, c.bit_on_real_axis(j));
    Ok(real_sd_with_levels(&y, lattice, &sets)?.metric)
}

/// Full complex metric over the group with bit `j` of position `n` fixed.
pub fn bit_metric_unsplit(y_tilde: &[Complex64], lattice: &ComplexLattice, n: usize, j: usize, b: u8, c: &Constellation) -> Result<f64> {
    let levels = c.level_values();
    let subset = c.axis_subset(j, b);
    let full = AxisSet { re: &levels, im: &levels };
    let mut sets = vec![full; lattice.dim()];
    if n >= sets.len() {
        return invalid("position outside the group");
    }
    sets[n] = if c.bit_on_real_axis(j) {
        AxisSet { re: &subset, im: &levels }
    } else {
        AxisSet { re: &levels, im: &subset }
    };
    Ok(complex_sd_axes(y_tilde, lattice, &sets)?.1)
}

/// Metric of one coded bit from its thread observation.
pub fn bit_metric(obs: &ThreadObservation, pre: &PcmbPrecomputation, loc: BitLocation, b: u8, c: &Constellation) -> Result<f64> {
    loc.validate(pre.dimension(), c)?;
    if obs.v != loc.m {
        return invalid(format!("observation of thread {} supplied for thread {}", obs.v, loc.m));
    }
    if b > 1 {
        return invalid("bit value must be 0 or 1");
    }
    match GroupLattice::of(pre) {
        GroupLattice::Split(r) => bit_metric_split(&obs.y_tilde, r, loc.n - 1, loc.j, b, c),
        GroupLattice::Complex(l) => bit_metric_unsplit(&obs.y_tilde, l, loc.n - 1, loc.j, b, c),
    }
}

/// Both metrics of every bit in a group, ordered by position then label bit.
///
/// The unconstrained optimum supplies `Gamma` for the bit values it
/// carries; only the complementary values need a constrained search.
pub fn group_bit_metrics(y_tilde: &[Complex64], lattice: GroupLattice<'_>, c: &Constellation) -> Result<Vec<[f64; 2]>> {
    let d = lattice.dim();
    if y_tilde.len() != d {
        return invalid("observation length does not match the lattice");
    }
    let bps = c.bits_per_symbol();
    let mut out = vec![[0.0; 2]; d * bps];
    match lattice {
        GroupLattice::Split(r) => {
            let levels = c.level_values();
            let sets: Vec<&[f64]> = vec![&levels; d];
            let yr = axis_part(y_tilde, true);
            let yi = axis_part(y_tilde, false);
            let ml_re = real_sd_with_levels(&yr, r, &sets)?;
            let ml_im = real_sd_with_levels(&yi, r, &sets)?;
            for n in 0..d {
                let sym = c.index_from_levels(ml_re.point[n], ml_im.point[n]);
                for j in 0..bps {
                    let real = c.bit_on_real_axis(j);
                    let ml = if real { ml_re.metric } else { ml_im.metric };
                    let bhat = c.bit(sym, j);
                    let other = bit_metric_split(y_tilde, r, n, j, 1 - bhat, c)?;
                    out[n * bps + j][bhat as usize] = ml;
                    out[n * bps + j][1 - bhat as usize] = other;
                }
            }
        }
        GroupLattice::Complex(l) => {
            let levels = c.level_values();
            let sets = vec![AxisSet { re: &levels, im: &levels }; d];
            let (pts, ml, _) = complex_sd_axes(y_tilde, l, &sets)?;
            for n in 0..d {
                let sym = c.index_from_levels(pts[n].0, pts[n].1);
                for j in 0..bps {
                    let bhat = c.bit(sym, j);
                    let other = bit_metric_unsplit(y_tilde, l, n, j, 1 - bhat, c)?;
                    out[n * bps + j][bhat as usize] = ml;
                    out[n * bps + j][1 - bhat as usize] = other;
                }
            }
        }
    }
    Ok(out)
}
