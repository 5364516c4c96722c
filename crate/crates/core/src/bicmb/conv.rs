//! Rate-1/2, constraint-length-7 convolutional code (octal 133/171) with
//! puncturing, and a soft-input Viterbi decoder.

use crate::error::{invalid, Error, Result};

pub const CONSTRAINT_LENGTH: usize = 7;
pub const MEMORY: usize = CONSTRAINT_LENGTH - 1;
pub const GENERATORS: [u32; 2] = [0o133, 0o171];
const STATES: usize = 1 << MEMORY;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeRate {
    Half,
    TwoThirds,
    FourFifths,
}

impl CodeRate {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "1/2" => Ok(Self::Half),
            "2/3" => Ok(Self::TwoThirds),
            "4/5" => Ok(Self::FourFifths),
            other => Err(Error::Config(format!("unsupported code rate `{other}`; use 1/2, 2/3 or 4/5"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Half => "1/2",
            Self::TwoThirds => "2/3",
            Self::FourFifths => "4/5",
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Self::Half => 0.5,
            Self::TwoThirds => 2.0 / 3.0,
            Self::FourFifths => 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvCode {
    pub rate: CodeRate,
    /// `pattern[g][t]`: whether output `g` at period position `t` is sent.
    pattern: [Vec<bool>; 2],
}

impl ConvCode {
    pub fn new(rate: CodeRate) -> Self {
        let p = |v: &[u8]| v.iter().map(|&x| x == 1).collect::<Vec<_>>();
        let pattern = match rate {
            CodeRate::Half => [p(&[1]), p(&[1])],
            CodeRate::TwoThirds => [p(&[1, 1]), p(&[1, 0])],
            CodeRate::FourFifths => [p(&[1, 1, 1, 1]), p(&[1, 0, 0, 0])],
        };
        Self { rate, pattern }
    }

    pub fn period(&self) -> usize {
        self.pattern[0].len()
    }

    fn kept(&self, t: usize, g: usize) -> bool {
        self.pattern[g][t % self.period()]
    }

    /// Transmitted bits for `n` trellis steps (information plus tail).
    pub fn punctured_len(&self, n: usize) -> usize {
        (0..n).map(|t| (0..2).filter(|&g| self.kept(t, g)).count()).sum()
    }

    /// Largest information length whose zero-tailed codeword fits in `capacity` bits.
    pub fn info_len_for(&self, capacity: usize) -> usize {
        let mut lo = 0;
        while self.punctured_len(lo + 1 + MEMORY) <= capacity {
            lo += 1;
        }
        lo
    }
}

fn parity(x: u32) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Outputs of both generators for `state` (last `MEMORY` inputs, newest in
/// the high bit) and input `bit`.
fn branch(state: usize, bit: u8) -> ([u8; 2], usize) {
    let reg = ((bit as u32) << MEMORY) | state as u32;
    ([parity(reg & GENERATORS[0]), parity(reg & GENERATORS[1])], (reg >> 1) as usize)
}

/// Zero-tailed, punctured encoding.
pub fn conv_encode(info: &[u8], code: &ConvCode) -> Result<Vec<u8>> {
    if info.is_empty() {
        return invalid("empty information block");
    }
    if info.iter().any(|&b| b > 1) {
        return invalid("bits must be 0 or 1");
    }
    let mut out = Vec::with_capacity(code.punctured_len(info.len() + MEMORY));
    let mut state = 0;
    for (t, &bit) in info.iter().chain(std::iter::repeat(&0).take(MEMORY)).enumerate() {
        let (o, next) = branch(state, bit);
        state = next;
        for (g, &ob) in o.iter().enumerate() {
            if code.kept(t, g) {
                out.push(ob);
            }
        }
    }
    Ok(out)
}

/// Minimises the summed bit metrics over all zero-tailed codewords.
///
/// `metrics[i] = [cost of bit 0, cost of bit 1]` for the `i`-th
/// transmitted bit. Returns `info_len` information bits.
pub fn viterbi_decode(metrics: &[[f64; 2]], code: &ConvCode, info_len: usize) -> Result<Vec<u8>> {
    let steps = info_len + MEMORY;
    if info_len == 0 || metrics.len() != code.punctured_len(steps) {
        return invalid(format!(
            "{} metrics do not match a {info_len}-bit message ({} expected)",
            metrics.len(),
            code.punctured_len(steps)
        ));
    }
    let mut cost = vec![f64::INFINITY; STATES];
    cost[0] = 0.0;
    let mut next_cost = vec![f64::INFINITY; STATES];
    let mut survivors: Vec<Vec<(u16, u8)>> = Vec::with_capacity(steps);
    let mut pos = 0;
    for t in 0..steps {
        let m0 = if code.kept(t, 0) { pos += 1; Some(metrics[pos - 1]) } else { None };
        let m1 = if code.kept(t, 1) { pos += 1; Some(metrics[pos - 1]) } else { None };
        next_cost.fill(f64::INFINITY);
        let mut surv = vec![(0u16, 0u8); STATES];
        let inputs: &[u8] = if t < info_len { &[0, 1] } else { &[0] };
        for s in 0..STATES {
            if !cost[s].is_finite() {
                continue;
            }
            for &bit in inputs {
                let (o, ns) = branch(s, bit);
                let mut c = cost[s];
                if let Some(m) = m0 {
                    c += m[o[0] as usize];
                }
                if let Some(m) = m1 {
                    c += m[o[1] as usize];
                }
                // Ties keep the lower predecessor state.
                if c < next_cost[ns] {
                    next_cost[ns] = c;
                    surv[ns] = (s as u16, bit);
                }
            }
        }
        std::mem::swap(&mut cost, &mut next_cost);
        survivors.push(surv);
    }
    let mut state = 0usize;
    let mut bits = vec![0u8; steps];
    for t in (0..steps).rev() {
        let (prev, bit) = survivors[t][state];
        bits[t] = bit;
        state = prev as usize;
    }
    bits.truncate(info_len);
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::substream;
    use rand::Rng;

    fn hard_metrics(bits: &[u8]) -> Vec<[f64; 2]> {
        bits.iter().map(|&b| if b == 0 { [0.0, 1.0] } else { [1.0, 0.0] }).collect()
    }

    #[test]
    fn zero_in_zero_out() {
        for rate in [CodeRate::Half, CodeRate::TwoThirds, CodeRate::FourFifths] {
            let code = ConvCode::new(rate);
            assert!(conv_encode(&[0; 20], &code).unwrap().iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn output_length_matches_rate() {
        let info = vec![1u8; 120];
        for (rate, n) in [(CodeRate::Half, 252), (CodeRate::TwoThirds, 189), (CodeRate::FourFifths, 158)] {
            let code = ConvCode::new(rate);
            assert_eq!(conv_encode(&info, &code).unwrap().len(), n);
        }
    }

    #[test]
    fn info_len_fits_capacity() {
        let code = ConvCode::new(CodeRate::TwoThirds);
        let l = code.info_len_for(128);
        assert!(code.punctured_len(l + MEMORY) <= 128);
        assert!(code.punctured_len(l + 1 + MEMORY) > 128);
    }

    #[test]
    fn noiseless_roundtrip() {
        let mut rng = substream(31, 0, 0);
        for rate in [CodeRate::Half, CodeRate::TwoThirds, CodeRate::FourFifths] {
            let code = ConvCode::new(rate);
            for _ in 0..300 {
                let len = rng.random_range(1..80);
                let info: Vec<u8> = (0..len).map(|_| rng.random_range(0..2)).collect();
                let c = conv_encode(&info, &code).unwrap();
                assert_eq!(viterbi_decode(&hard_metrics(&c), &code, len).unwrap(), info);
            }
        }
    }

    #[test]
    fn free_distances() {
        // Minimum weight of an error event starting at any puncturing phase.
        for (rate, dfree) in [(CodeRate::Half, 10), (CodeRate::TwoThirds, 6), (CodeRate::FourFifths, 4)] {
            let code = ConvCode::new(rate);
            let mut best = usize::MAX;
            for phase in 0..code.period() {
                for tail in 0..(1u32 << 9) {
                    let mut info = vec![0u8; phase];
                    info.push(1);
                    info.extend((0..9).map(|i| ((tail >> i) & 1) as u8));
                    let w = conv_encode(&info, &code).unwrap().iter().filter(|&&b| b == 1).count();
                    best = best.min(w);
                }
            }
            assert_eq!(best, dfree, "{rate:?}");
        }
    }

    #[test]
    fn viterbi_matches_exhaustive_search() {
        let mut rng = substream(32, 0, 0);
        for rate in [CodeRate::Half, CodeRate::TwoThirds, CodeRate::FourFifths] {
            let code = ConvCode::new(rate);
            for len in [4usize, 8, 12] {
                for _ in 0..5 {
                    let n = code.punctured_len(len + MEMORY);
                    let metrics: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)]).collect();
                    let score = |info: &[u8]| -> f64 {
                        conv_encode(info, &code).unwrap().iter().zip(&metrics).map(|(&b, m)| m[b as usize]).sum()
                    };
                    let mut best = (f64::INFINITY, 0u32);
                    for w in 0..(1u32 << len) {
                        let info: Vec<u8> = (0..len).map(|i| ((w >> i) & 1) as u8).collect();
                        let s = score(&info);
                        if s < best.0 {
                            best = (s, w);
                        }
                    }
                    let got = viterbi_decode(&metrics, &code, len).unwrap();
                    assert!((score(&got) - best.0).abs() < 1e-9);
                    assert_eq!(viterbi_decode(&metrics, &code, len).unwrap(), got);
                }
            }
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let code = ConvCode::new(CodeRate::Half);
        assert!(viterbi_decode(&[[0.0, 1.0]; 5], &code, 4).is_err());
        assert!(conv_encode(&[], &code).is_err());
        assert!(CodeRate::parse("3/4").is_err());
    }
}
