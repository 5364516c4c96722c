//! Square M-QAM with per-axis binary-reflected Gray labels.
//!
//! A label has `log2(M)` bits. The first half selects the real PAM level and
//! the second half the imaginary one, each most-significant bit first. On an
//! axis the all-zeros label sits on the most positive level, so 4-QAM maps
//! `00` to `(1 + i)/sqrt(2)`. Point `k` of a constellation is the point whose
//! label, read as an integer, equals `k`; this is the canonical order.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// One PAM level on an axis together with its Gray label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PamLevel {
    pub value: f64,
    pub label: u32,
}

#[derive(Debug, Clone)]
pub struct Constellation {
    m: usize,
    bits_per_symbol: usize,
    bits_per_axis: usize,
    points: Vec<Complex64>,
    /// Ascending levels on one axis; shared by both axes.
    levels: Vec<PamLevel>,
    /// `level_of_label[label]` = position of that label in `levels`.
    level_of_label: Vec<usize>,
}

/// Points of `constellation` whose bit `j` equals `b` (the set written χ_b^j).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitSubset {
    pub j: usize,
    pub b: u8,
}

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

impl Constellation {
    pub fn qam(m: usize) -> Result<Self> {
        if !matches!(m, 4 | 16 | 64 | 256) {
            return Err(Error::UnsupportedModulation(m));
        }
        let bits_per_symbol = m.trailing_zeros() as usize;
        let bits_per_axis = bits_per_symbol / 2;
        let side = 1usize << bits_per_axis;
        let scale = (3.0 / (2.0 * (m as f64 - 1.0))).sqrt();
        let levels: Vec<PamLevel> = (0..side)
            .map(|p| PamLevel {
                value: (2.0 * p as f64 - (side as f64 - 1.0)) * scale,
                label: gray((side - 1 - p) as u32),
            })
            .collect();
        let mut level_of_label = vec![0; side];
        for (p, l) in levels.iter().enumerate() {
            level_of_label[l.label as usize] = p;
        }
        let points = (0..m)
            .map(|k| {
                let re_label = k >> bits_per_axis;
                let im_label = k & (side - 1);
                Complex64::new(
                    levels[level_of_label[re_label]].value,
                    levels[level_of_label[im_label]].value,
                )
            })
            .collect();
        Ok(Self {
            m,
            bits_per_symbol,
            bits_per_axis,
            points,
            levels,
            level_of_label,
        })
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn bits_per_axis(&self) -> usize {
        self.bits_per_axis
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Square QAM always splits into two independent PAM axes. A hexagonal
    /// alphabet would report `false` and be decoded with complex searches.
    pub fn is_axis_separable(&self) -> bool {
        true
    }

    /// Ascending PAM levels with their per-axis labels.
    pub fn pam_levels(&self) -> &[PamLevel] {
        &self.levels
    }

    pub fn level_values(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.value).collect()
    }

    /// Bits of symbol `index`, most significant first.
    pub fn label(&self, index: usize) -> Vec<u8> {
        (0..self.bits_per_symbol)
            .map(|j| ((index >> (self.bits_per_symbol - 1 - j)) & 1) as u8)
            .collect()
    }

    pub fn bit(&self, index: usize, j: usize) -> u8 {
        ((index >> (self.bits_per_symbol - 1 - j)) & 1) as u8
    }

    pub fn index_of_bits(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != self.bits_per_symbol {
            return invalid(format!(
                "{}-QAM needs {} bits per symbol, got {}",
                self.m,
                self.bits_per_symbol,
                bits.len()
            ));
        }
        let mut k = 0usize;
        for &b in bits {
            if b > 1 {
                return invalid("bits must be 0 or 1");
            }
            k = (k << 1) | b as usize;
        }
        Ok(k)
    }

    pub fn map_bits(&self, bits: &[u8]) -> Result<Complex64> {
        Ok(self.points[self.index_of_bits(bits)?])
    }

    /// Positions in `pam_levels()` of the real and imaginary parts of a symbol.
    pub fn axis_levels(&self, index: usize) -> (usize, usize) {
        let side = 1usize << self.bits_per_axis;
        (
            self.level_of_label[index >> self.bits_per_axis],
            self.level_of_label[index & (side - 1)],
        )
    }

    /// Inverse of [`Self::axis_levels`].
    pub fn index_from_levels(&self, re_level: usize, im_level: usize) -> usize {
        ((self.levels[re_level].label as usize) << self.bits_per_axis) | self.levels[im_level].label as usize
    }

    /// Nearest-point demapper (exact ML for a single symbol in AWGN).
    pub fn demap_hard(&self, z: Complex64) -> usize {
        let re = nearest_level(&self.levels, z.re);
        let im = nearest_level(&self.levels, z.im);
        self.index_from_levels(re, im)
    }

    /// Whether bit `j` lives on the real axis.
    pub fn bit_on_real_axis(&self, j: usize) -> bool {
        j < self.bits_per_axis
    }

    /// Ascending level values on the axis of bit `j` whose axis label has
    /// that bit equal to `b`.
    pub fn axis_subset(&self, j: usize, b: u8) -> Vec<f64> {
        let axis_bit = if self.bit_on_real_axis(j) { j } else { j - self.bits_per_axis };
        let shift = self.bits_per_axis - 1 - axis_bit;
        self.levels
            .iter()
            .filter(|l| ((l.label >> shift) & 1) as u8 == b)
            .map(|l| l.value)
            .collect()
    }

    /// Indices of χ_b^j in canonical order.
    pub fn subset(&self, s: BitSubset) -> Result<Vec<usize>> {
        if s.j >= self.bits_per_symbol || s.b > 1 {
            return invalid(format!("bit subset ({}, {}) out of range", s.j, s.b));
        }
        Ok((0..self.m).filter(|&k| self.bit(k, s.j) == s.b).collect())
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(Complex64::norm_sqr).sum::<f64>() / self.m as f64
    }
}

/// Position of the level nearest to `x` in an ascending list.
pub(crate) fn nearest_level(levels: &[PamLevel], x: f64) -> usize {
    let p = levels.partition_point(|l| l.value < x);
    if p == 0 {
        0
    } else if p == levels.len() {
        p - 1
    } else if (x - levels[p - 1].value) <= (levels[p].value - x) {
        p - 1
    } else {
        p
    }
}
