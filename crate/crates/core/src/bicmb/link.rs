//! End-to-end coded links over one quasi-static channel per frame.

use num_complex::Complex64;
use rand::Rng;

use crate::baselines::{fpmb_encode, FpmbConfig, FpmbDecoder};
use crate::channel::{received_pcmb, received_streams, sample_channel, ChannelRealization, NoiseModel};
use crate::error::{invalid, Result};
use crate::modulation::Constellation;
use crate::numerics::opcount::current_tally;
use crate::pcmb_decoder::{extract_threads, precompute};
use crate::pstbc::{generation_matrix, PerfectCode, SymbolMatrix};

use super::conv::{conv_encode, viterbi_decode, ConvCode, MEMORY};
use super::interleave::Interleaver;
use super::metric::{group_bit_metrics, GroupLattice};

/// Transmission format of the coded bits.
#[derive(Debug, Clone)]
pub enum CodedScheme {
    /// Perfect-code symbol matrices over the beamformed channel.
    PerfectCode,
    /// Groups of `D` symbols precoded by `Theta`.
    FullyPrecoded(FpmbConfig),
}

#[derive(Debug, Clone)]
pub struct BicmbLink {
    pub scheme: CodedScheme,
    pub code: PerfectCode,
    pub constellation: Constellation,
    pub conv: ConvCode,
    pub codewords_per_frame: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameOutcome {
    pub info_bits: u64,
    pub bit_errors: u64,
    /// Number of `Gamma` values computed (two per coded bit position).
    pub metrics: u64,
    pub real_mults: u64,
}

impl FrameOutcome {
    pub fn accumulate(&mut self, other: &FrameOutcome) {
        self.info_bits += other.info_bits;
        self.bit_errors += other.bit_errors;
        self.metrics += other.metrics;
        self.real_mults += other.real_mults;
    }
}

impl BicmbLink {
    /// Default frame: `2 log2(M) D^2` codewords.
    pub fn new(scheme: CodedScheme, d: usize, constellation: Constellation, conv: ConvCode) -> Result<Self> {
        let code = generation_matrix(d)?;
        if let CodedScheme::FullyPrecoded(cfg) = &scheme {
            if cfg.s != d {
                return invalid(format!("precoder has {} streams, dimension is {d}", cfg.s));
            }
        }
        let codewords_per_frame = 2 * constellation.bits_per_symbol() * d * d;
        Ok(Self {
            scheme,
            code,
            constellation,
            conv,
            codewords_per_frame,
        })
    }

    pub fn with_frame_codewords(mut self, k: usize) -> Result<Self> {
        if k == 0 {
            return invalid("a frame needs at least one codeword");
        }
        self.codewords_per_frame = k;
        if self.info_len() == 0 {
            return invalid("frame too short for the code tail");
        }
        Ok(self)
    }

    pub fn dimension(&self) -> usize {
        self.code.dimension()
    }

    pub fn bits_per_codeword(&self) -> usize {
        self.dimension() * self.dimension() * self.constellation.bits_per_symbol()
    }

    pub fn capacity(&self) -> usize {
        self.codewords_per_frame * self.bits_per_codeword()
    }

    pub fn info_len(&self) -> usize {
        self.conv.info_len_for(self.capacity())
    }

    /// One frame with a fresh random message and channel.
    pub fn run_frame<R: Rng + ?Sized>(&self, noise: &NoiseModel, rng: &mut R) -> Result<FrameOutcome> {
        let d = self.dimension();
        let message: Vec<u8> = (0..self.info_len()).map(|_| rng.random_range(0..2u8)).collect();
        let channel = sample_channel(d, d, rng)?;
        self.transmit(&message, &channel, noise, rng).map(|(_, o)| o)
    }

    /// Encodes, transmits and decodes `message` over `channel`.
    pub fn transmit<R: Rng + ?Sized>(&self, message: &[u8], channel: &ChannelRealization, noise: &NoiseModel, rng: &mut R) -> Result<(Vec<u8>, FrameOutcome)> {
        if message.len() != self.info_len() {
            return invalid(format!("message has {} bits, frame carries {}", message.len(), self.info_len()));
        }
        let d = self.dimension();
        let c = &self.constellation;
        let bps = c.bits_per_symbol();
        let lambda = &channel.lambda()[..d];

        let coded = conv_encode(message, &self.conv)?;
        let il = Interleaver::new(coded.len(), rng.random());
        let mut bits = il.interleave(&coded)?;
        bits.resize(self.capacity(), 0);

        let mut metrics = vec![[0.0; 2]; self.capacity()];
        let mut mults = 0u64;
        let per_cw = self.bits_per_codeword();

        match &self.scheme {
            CodedScheme::PerfectCode => {
                let t0 = current_tally();
                let pre = precompute(lambda, &self.code)?;
                mults += current_tally() - t0;
                for k in 0..self.codewords_per_frame {
                    let chunk = &bits[k * per_cw..(k + 1) * per_cw];
                    let idx = chunk.chunks(bps).map(|s| c.index_of_bits(s)).collect::<Result<Vec<_>>>()?;
                    let x = SymbolMatrix::from_columns(d, idx)?;
                    let z = self.code.assemble(&x, c)?;
                    let y = received_pcmb(lambda, &z.z, noise, rng)?;
                    let t0 = current_tally();
                    for obs in extract_threads(&y, &pre)? {
                        let g = group_bit_metrics(&obs.y_tilde, GroupLattice::of(&pre), c)?;
                        let base = k * per_cw + (obs.v - 1) * d * bps;
                        metrics[base..base + d * bps].copy_from_slice(&g);
                    }
                    mults += current_tally() - t0;
                }
            }
            CodedScheme::FullyPrecoded(cfg) => {
                let dec = FpmbDecoder::new(cfg.clone(), c.clone());
                let t0 = current_tally();
                let pre = dec.prepare(lambda)?;
                mults += current_tally() - t0;
                for (g_idx, chunk) in bits.chunks(d * bps).enumerate() {
                    let x: Vec<Complex64> = chunk.chunks(bps).map(|s| c.map_bits(s)).collect::<Result<_>>()?;
                    let s = fpmb_encode(&x, cfg)?;
                    let y = received_streams(lambda, &s, noise, rng)?;
                    let t0 = current_tally();
                    let q = &pre.q;
                    let y_tilde: Vec<Complex64> = (0..d)
                        .map(|j| (0..d).map(|i| crate::numerics::ops::cmul_conj(q[(i, j)], y[i])).sum())
                        .collect();
                    let g = group_bit_metrics(&y_tilde, GroupLattice::Complex(&pre.lattice), c)?;
                    metrics[g_idx * d * bps..(g_idx + 1) * d * bps].copy_from_slice(&g);
                    mults += current_tally() - t0;
                }
            }
        }

        metrics.truncate(coded.len());
        let deinterleaved = il.deinterleave(&metrics)?;
        let decoded = viterbi_decode(&deinterleaved, &self.conv, message.len())?;
        let errors = decoded.iter().zip(message).filter(|(a, b)| a != b).count() as u64;
        debug_assert!(coded.len() == self.conv.punctured_len(message.len() + MEMORY));
        Ok((
            decoded,
            FrameOutcome {
                info_bits: message.len() as u64,
                bit_errors: errors,
                metrics: 2 * self.capacity() as u64,
                real_mults: mults,
            },
        ))
    }
}
