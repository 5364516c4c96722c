//! Monte Carlo sweeps, CSV output and the invariant self-check.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{fpmb_encode, load_precoder, FpmbConfig, FpmbDecoder, PcDecoder};
use crate::bicmb::{BicmbLink, CodeRate, CodedScheme, ConvCode};
use crate::channel::{complex_gaussian, received_pc, received_pcmb, received_streams, sample_channel, substream, NoiseModel, SimRng};
use crate::error::{Error, Result};
use crate::modulation::Constellation;
use crate::numerics::opcount::current_tally;
use crate::numerics::CMatrix;
use crate::pcmb_decoder::{decode_with, precompute};
use crate::pstbc::{generation_matrix, PerfectCode, SymbolMatrix};

mod validate;

pub use validate::{validate, validate_with, Check, ValidationInputs, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Perfect code over `H`, joint ML.
    Pc,
    /// Perfect code over the beamformed channel, thread-wise ML.
    Pcmb,
    Fpmb,
    BicmbPc,
    BicmbFp,
    /// Beamforming without precoding.
    UncodedMb,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pc" | "gc" => Ok(Self::Pc),
            "pcmb" | "gcmb" => Ok(Self::Pcmb),
            "fpmb" => Ok(Self::Fpmb),
            "bicmb-pc" | "bicmb-gc" => Ok(Self::BicmbPc),
            "bicmb-fp" => Ok(Self::BicmbFp),
            "uncoded-mb" => Ok(Self::UncodedMb),
            other => Err(Error::Config(format!(
                "unknown scheme `{other}`; expected pc, gcmb, pcmb, fpmb, bicmb-pc, bicmb-gc, bicmb-fp or uncoded-mb"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pc => "pc",
            Self::Pcmb => "pcmb",
            Self::Fpmb => "fpmb",
            Self::BicmbPc => "bicmb-pc",
            Self::BicmbFp => "bicmb-fp",
            Self::UncodedMb => "uncoded-mb",
        }
    }

    pub fn is_coded(self) -> bool {
        matches!(self, Self::BicmbPc | Self::BicmbFp)
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub scheme: Scheme,
    pub d: usize,
    pub m: usize,
    pub snr_db: Vec<f64>,
    /// BER sweeps stop a point once this many bit errors are seen.
    pub target_errors: u64,
    pub max_trials: u64,
    pub seed: u64,
    pub rate: CodeRate,
    /// Precoder file for the precoded schemes; `None` uses the code's `G`.
    pub precoder: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Trials per stopping-rule check.
    pub batch: u64,
    /// Codewords per coded frame; `None` uses `2 log2(M) D^2`.
    pub frame_codewords: Option<usize>,
    /// Record wall-clock time; off gives byte-stable CSVs.
    pub timing: bool,
}

impl SimConfig {
    pub fn new(scheme: Scheme, d: usize, m: usize, snr_db: Vec<f64>) -> Self {
        Self {
            scheme,
            d,
            m,
            snr_db,
            target_errors: 200,
            max_trials: 100_000,
            seed: 1,
            rate: CodeRate::TwoThirds,
            precoder: None,
            out: None,
            batch: 64,
            frame_codewords: None,
            timing: true,
        }
    }

    /// Rejects unsupported scheme/dimension/modulation combinations.
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.d, 2 | 4) {
            return Err(Error::UnsupportedDimension(self.d));
        }
        Constellation::qam(self.m)?;
        if self.scheme == Scheme::Pc && self.d == 4 && self.m > 4 {
            return Err(Error::Infeasible(format!(
                "pc with D=4 needs joint ML over {}^16 symbol matrices; only 4-QAM is supported",
                self.m
            )));
        }
        if self.snr_db.is_empty() {
            return Err(Error::Config("no SNR points given".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR values must be finite".into()));
        }
        if self.max_trials == 0 || self.batch == 0 {
            return Err(Error::Config("max-trials and batch must be positive".into()));
        }
        if self.precoder.is_some() && !matches!(self.scheme, Scheme::Fpmb | Scheme::BicmbFp) {
            return Err(Error::Config(format!("a precoder file does not apply to {}", self.scheme.as_str())));
        }
        Ok(())
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub scheme: String,
    pub d: usize,
    pub m: usize,
    pub snr_db: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub ber: f64,
    /// Per vector symbol (uncoded) or per bit metric (coded).
    pub avg_real_mults: f64,
    pub wall_ms: u64,
}

pub const CSV_HEADER: &str = "scheme,d,m,snr_db,trials,bit_errors,ber,avg_real_mults,wall_ms";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    trials: u64,
    bits: u64,
    errors: u64,
    units: u64,
    mults: u64,
}

impl Tally {
    fn add(mut self, o: Tally) -> Tally {
        self.trials += o.trials;
        self.bits += o.bits;
        self.errors += o.errors;
        self.units += o.units;
        self.mults += o.mults;
        self
    }
}

enum Engine {
    Pc(PcDecoder),
    Pcmb(PerfectCode),
    Precoded(FpmbDecoder),
    Coded(BicmbLink),
}

/// A configured simulator; one trial is one codeword (uncoded) or one frame (coded).
pub struct Simulator {
    config: SimConfig,
    constellation: Constellation,
    engine: Engine,
}

fn symbol_bit_errors(a: &[usize], b: &[usize]) -> u64 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones() as u64).sum()
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let d = config.d;
        let constellation = Constellation::qam(config.m)?;
        let code = generation_matrix(d)?;
        let precoder = |cfg: &SimConfig| -> Result<FpmbConfig> {
            let p = match &cfg.precoder {
                Some(path) => load_precoder(path)?,
                None => FpmbConfig::from_code(&code)?,
            };
            if p.s != d {
                return Err(Error::Config(format!("precoder has {} streams, dimension is {d}", p.s)));
            }
            Ok(p)
        };
        let engine = match config.scheme {
            Scheme::Pc => Engine::Pc(PcDecoder::new(code.clone(), constellation.clone())?),
            Scheme::Pcmb => Engine::Pcmb(code.clone()),
            Scheme::Fpmb => Engine::Precoded(FpmbDecoder::new(precoder(&config)?, constellation.clone())),
            Scheme::UncodedMb => Engine::Precoded(FpmbDecoder::new(FpmbConfig::identity(d), constellation.clone())),
            Scheme::BicmbPc | Scheme::BicmbFp => {
                let scheme = if config.scheme == Scheme::BicmbPc {
                    CodedScheme::PerfectCode
                } else {
                    CodedScheme::FullyPrecoded(precoder(&config)?)
                };
                let mut link = BicmbLink::new(scheme, d, constellation.clone(), ConvCode::new(config.rate))?;
                if let Some(k) = config.frame_codewords {
                    link = link.with_frame_codewords(k)?;
                }
                Engine::Coded(link)
            }
        };
        Ok(Self {
            config,
            constellation,
            engine,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    fn trial(&self, noise: &NoiseModel, rng: &mut SimRng) -> Result<Tally> {
        let d = self.config.d;
        let c = &self.constellation;
        let m = c.size();
        let bps = c.bits_per_symbol() as u64;
        let random_symbols = |rng: &mut SimRng, n: usize| -> Vec<usize> { (0..n).map(|_| rng.random_range(0..m)).collect() };
        match &self.engine {
            Engine::Pc(dec) => {
                let x = SymbolMatrix::from_columns(d, random_symbols(rng, d * d))?;
                let z = dec.code().assemble(&x, c)?;
                let h = CMatrix::from_fn(d, d, |_, _| complex_gaussian(rng, 1.0));
                let y = received_pc(&h, &z.z, noise, rng)?;
                let t0 = current_tally();
                let pre = dec.prepare(&h)?;
                let (xhat, _) = dec.decode(&y, &pre)?;
                let mults = current_tally() - t0;
                Ok(Tally {
                    trials: 1,
                    bits: (d * d) as u64 * bps,
                    errors: symbol_bit_errors(x.as_column_major(), xhat.as_column_major()),
                    units: d as u64,
                    mults,
                })
            }
            Engine::Pcmb(code) => {
                let x = SymbolMatrix::from_columns(d, random_symbols(rng, d * d))?;
                let z = code.assemble(&x, c)?;
                let ch = sample_channel(d, d, rng)?;
                let lambda = &ch.lambda()[..d];
                let y = received_pcmb(lambda, &z.z, noise, rng)?;
                let t0 = current_tally();
                let pre = precompute(lambda, code)?;
                let (xhat, _) = decode_with(&y, &pre, c)?;
                let mults = current_tally() - t0;
                Ok(Tally {
                    trials: 1,
                    bits: (d * d) as u64 * bps,
                    errors: symbol_bit_errors(x.as_column_major(), xhat.as_column_major()),
                    units: d as u64,
                    mults,
                })
            }
            Engine::Precoded(dec) => {
                let ch = sample_channel(d, d, rng)?;
                let lambda = &ch.lambda()[..d];
                let mut sent = Vec::with_capacity(d);
                let mut received = Vec::with_capacity(d);
                for _ in 0..d {
                    let idx = random_symbols(rng, d);
                    let x: Vec<Complex64> = idx.iter().map(|&k| c.point(k)).collect();
                    let s = fpmb_encode(&x, &dec.config)?;
                    received.push(received_streams(lambda, &s, noise, rng)?);
                    sent.push(idx);
                }
                let t0 = current_tally();
                let pre = dec.prepare(lambda)?;
                let mut errors = 0;
                for (idx, y) in sent.iter().zip(&received) {
                    errors += symbol_bit_errors(idx, &dec.decode(y, &pre)?.point);
                }
                let mults = current_tally() - t0;
                Ok(Tally {
                    trials: 1,
                    bits: (d * d) as u64 * bps,
                    errors,
                    units: d as u64,
                    mults,
                })
            }
            Engine::Coded(link) => {
                let o = link.run_frame(noise, rng)?;
                Ok(Tally {
                    trials: 1,
                    bits: o.info_bits,
                    errors: o.bit_errors,
                    units: o.metrics,
                    mults: o.real_mults,
                })
            }
        }
    }

    fn run_point(&self, idx: usize, snr_db: f64, stop_on_errors: bool) -> Result<SweepRecord> {
        let start = Instant::now();
        let noise = NoiseModel::from_db(snr_db, self.config.d)?;
        let mut total = Tally::default();
        let mut next = 0u64;
        while next < self.config.max_trials {
            let end = (next + self.config.batch).min(self.config.max_trials);
            let batch = (next..end)
                .into_par_iter()
                .map(|t| self.trial(&noise, &mut substream(self.config.seed, idx as u64, t)))
                .collect::<Result<Vec<_>>>()?;
            total = batch.into_iter().fold(total, Tally::add);
            next = end;
            if stop_on_errors && total.errors >= self.config.target_errors {
                break;
            }
        }
        Ok(SweepRecord {
            scheme: self.config.scheme.as_str().to_string(),
            d: self.config.d,
            m: self.config.m,
            snr_db,
            trials: total.trials,
            bit_errors: total.errors,
            ber: if total.bits == 0 { 0.0 } else { total.errors as f64 / total.bits as f64 },
            avg_real_mults: if total.units == 0 { 0.0 } else { total.mults as f64 / total.units as f64 },
            wall_ms: if self.config.timing { start.elapsed().as_millis() as u64 } else { 0 },
        })
    }

    /// Per point: trials until the error target or the trial cap.
    pub fn run_ber_sweep(&self) -> Result<Vec<SweepRecord>> {
        self.config
            .snr_db
            .iter()
            .enumerate()
            .map(|(i, &s)| self.run_point(i, s, true))
            .collect()
    }

    /// Per point: exactly `max_trials` trials.
    pub fn run_complexity_sweep(&self) -> Result<Vec<SweepRecord>> {
        self.config
            .snr_db
            .iter()
            .enumerate()
            .map(|(i, &s)| self.run_point(i, s, false))
            .collect()
    }
}

pub fn run_ber_sweep(config: &SimConfig) -> Result<Vec<SweepRecord>> {
    Simulator::new(config.clone())?.run_ber_sweep()
}

pub fn run_complexity_sweep(config: &SimConfig) -> Result<Vec<SweepRecord>> {
    Simulator::new(config.clone())?.run_complexity_sweep()
}

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(records: &[SweepRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Parses `0,5,10` or `start:step:stop` (inclusive).
pub fn parse_snr_list(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("bad SNR value `{t}`: {e}")))
    };
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect(),
        3 => {
            let (a, step, b) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if !(step > 0.0) || b < a {
                return Err(Error::Config(format!("bad SNR range `{s}`")));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + step * i as f64).collect())
        }
        _ => Err(Error::Config(format!("bad SNR list `{s}`"))),
    }
}
