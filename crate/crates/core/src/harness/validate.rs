//! Self-check of the structural invariants the decoders rely on.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::bicmb::{bit_metric_split, bit_metric_unsplit, BitLocation};
use crate::channel::{complex_gaussian, received_pcmb, substream, NoiseModel};
use crate::error::Result;
use crate::modulation::Constellation;
use crate::numerics::{qr, CMatrix};
use crate::oracle;
use crate::pcmb_decoder::{closed_form_r, decode_with, extract_threads, precompute};
use crate::pstbc::{gather_thread, generation_matrix, phase_diagonal, PerfectCode, SymbolMatrix};
use crate::spheredec::{brute_force_ml, complex_sd, ComplexLattice};

/// Codes and phase factors under test. Replacing either lets fault
/// injection show up in the report.
#[derive(Debug, Clone)]
pub struct ValidationInputs {
    pub codes: Vec<PerfectCode>,
    /// `(D, v, diagonal)`: replaces `Phi_v` for the code of dimension `D`.
    pub phase_override: Option<(usize, usize, Vec<Complex64>)>,
    pub seed: u64,
    /// Random instances per check.
    pub instances: usize,
}

impl ValidationInputs {
    pub fn standard() -> Result<Self> {
        Ok(Self {
            codes: vec![generation_matrix(2)?, generation_matrix(4)?],
            phase_override: None,
            seed: 2024,
            instances: 300,
        })
    }

    fn phases(&self, code: &PerfectCode, v: usize) -> Result<Vec<Complex64>> {
        match &self.phase_override {
            Some((d, w, p)) if *d == code.dimension() && *w == v => Ok(p.clone()),
            _ => phase_diagonal(code, v),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            writeln!(f, "{:<width$}  {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail)?;
        }
        Ok(())
    }
}

fn random_lambda(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let mut l: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..3.0)).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    l
}

fn push(checks: &mut Vec<Check>, name: String, outcome: Result<(bool, String)>) {
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    checks.push(Check { name, passed, detail });
}

/// Runs every check on the built-in codes.
pub fn validate() -> Result<ValidationReport> {
    validate_with(&ValidationInputs::standard()?)
}

pub fn validate_with(inputs: &ValidationInputs) -> Result<ValidationReport> {
    let mut checks = Vec::new();
    let n = inputs.instances;
    for code in &inputs.codes {
        let d = code.dimension();
        let mut rng = substream(inputs.seed, d as u64, 0);

        push(&mut checks, format!("unitarity D={d}"), {
            let r = code.g_matrix().unitarity_residual();
            Ok((r <= 1e-10, format!("residual {r:.2e}")))
        });

        push(&mut checks, format!("energy uniformity D={d}"), (|| {
            let g = code.g_matrix();
            let rows = (0..d)
                .map(|u| (g.row(u).iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs())
                .fold(0.0, f64::max);
            let c = Constellation::qam(4)?;
            let mut worst = rows.max((code.g_scalar().norm() - 1.0).abs());
            for _ in 0..n {
                let x = SymbolMatrix::from_columns(d, (0..d * d).map(|_| rng.random_range(0..4)).collect())?;
                let z = code.assemble(&x, &c)?;
                worst = worst.max((z.z.frobenius_norm_sqr() - x.values(&c).frobenius_norm_sqr()).abs());
            }
            Ok((worst <= 1e-10, format!("max deviation {worst:.2e}")))
        })());

        push(&mut checks, format!("thread round-trip D={d}"), (|| {
            let c = Constellation::qam(16)?;
            let mut worst: f64 = 0.0;
            for _ in 0..n {
                let lambda = random_lambda(&mut rng, d);
                let x = SymbolMatrix::from_columns(d, (0..d * d).map(|_| rng.random_range(0..16)).collect())?;
                let z = code.assemble(&x, &c)?;
                let y = received_pcmb(&lambda, &z.z, &NoiseModel::noiseless(d), &mut rng)?;
                for v in 1..=d {
                    let got = gather_thread(&y, v)?;
                    let phase = inputs.phases(code, v)?;
                    let xv: Vec<Complex64> = x.thread(v - 1).iter().map(|&k| c.point(k)).collect();
                    let gx = code.g_matrix().mul_vec(&xv)?;
                    for u in 0..d {
                        worst = worst.max((got[u] - phase[u] * lambda[u] * gx[u]).norm());
                    }
                }
            }
            Ok((worst <= 1e-10, format!("max deviation {worst:.2e}")))
        })());

        push(&mut checks, format!("real R D={d}"), (|| {
            let mut worst: f64 = 0.0;
            for _ in 0..n {
                let lambda = random_lambda(&mut rng, d);
                let f = qr(&code.g_matrix().scale_rows(&lambda)?)?;
                worst = worst.max(f.r.max_abs_imag());
            }
            Ok((worst <= 1e-10, format!("max |Im r| {worst:.2e}")))
        })());

        push(&mut checks, format!("closed-form R D={d}"), (|| {
            let mut worst: f64 = 0.0;
            for _ in 0..n {
                let lambda = random_lambda(&mut rng, d);
                let f = qr(&code.g_matrix().scale_rows(&lambda)?)?;
                let r = closed_form_r(&lambda, code)?;
                for i in 0..d {
                    for j in i..d {
                        worst = worst.max((r[i][j] - f.r[(i, j)].re).abs());
                    }
                }
            }
            Ok((worst <= 1e-9, format!("max deviation {worst:.2e}")))
        })());

        push(&mut checks, format!("sphere decoder = exhaustive D={d}"), (|| {
            let c = Constellation::qam(4)?;
            let mut worst: f64 = 0.0;
            for _ in 0..n {
                let a = CMatrix::from_fn(d, d, |_, _| complex_gaussian(&mut rng, 1.0));
                let f = qr(&a)?;
                let y: Vec<Complex64> = (0..d).map(|_| complex_gaussian(&mut rng, 2.0)).collect();
                let sd = complex_sd(&y, &ComplexLattice::new(&f.r)?, &c)?;
                let bf = brute_force_ml(&y, &f.r, &c, d)?;
                worst = worst.max((sd.metric - bf.metric).abs());
            }
            Ok((worst <= 1e-9, format!("max metric gap {worst:.2e}")))
        })());

        push(&mut checks, format!("metric chain D={d}"), (|| {
            let c = Constellation::qam(4)?;
            let noise = NoiseModel::from_db(3.0, d)?;
            let mut worst: f64 = 0.0;
            for _ in 0..n {
                let lambda = random_lambda(&mut rng, d);
                let pre = precompute(&lambda, code)?;
                let Some(lr) = pre.real_lattice() else {
                    return Ok((false, "R is not real".into()));
                };
                let x = SymbolMatrix::from_columns(d, (0..d * d).map(|_| rng.random_range(0..4)).collect())?;
                let z = code.assemble(&x, &c)?;
                let y = received_pcmb(&lambda, &z.z, &noise, &mut rng)?;
                let threads = extract_threads(&y, &pre)?;
                let loc = BitLocation {
                    k: 0,
                    m: rng.random_range(1..=d),
                    n: rng.random_range(1..=d),
                    j: rng.random_range(0..2),
                };
                let obs = &threads[loc.m - 1];
                let other: Vec<f64> = obs.y_tilde.iter().map(|z| if loc.j == 0 { z.im } else { z.re }).collect();
                let levels = c.level_values();
                let sets: Vec<&[f64]> = vec![&levels; d];
                let other_ml = crate::spheredec::real_sd_with_levels(&other, lr, &sets)?.metric;
                for b in 0..2 {
                    let split = bit_metric_split(&obs.y_tilde, lr, loc.n - 1, loc.j, b, &c)?;
                    let unsplit = bit_metric_unsplit(&obs.y_tilde, pre.complex_lattice(), loc.n - 1, loc.j, b, &c)?;
                    let exhaustive = oracle::thread_metric(&y, &lambda, code, loc, b, &c)?;
                    worst = worst.max((split + other_ml - unsplit).abs()).max((unsplit - exhaustive).abs());
                }
            }
            Ok((worst <= 1e-9, format!("max gap {worst:.2e}")))
        })());

        if d == 2 {
            push(&mut checks, "thread ML = joint ML D=2".into(), (|| {
                let c = Constellation::qam(4)?;
                let noise = NoiseModel::from_db(2.0, d)?;
                let mut worst: f64 = 0.0;
                for _ in 0..n.min(200) {
                    let lambda = random_lambda(&mut rng, d);
                    let pre = precompute(&lambda, code)?;
                    let x = SymbolMatrix::from_columns(d, (0..d * d).map(|_| rng.random_range(0..4)).collect())?;
                    let z = code.assemble(&x, &c)?;
                    let y = received_pcmb(&lambda, &z.z, &noise, &mut rng)?;
                    let (xhat, _) = decode_with(&y, &pre, &c)?;
                    let (_, joint) = oracle::joint_ml(&y, &lambda, code, &c)?;
                    let zhat = code.assemble(&xhat, &c)?;
                    let mut metric = 0.0;
                    for u in 0..d {
                        for v in 0..d {
                            metric += (y[(u, v)] - lambda[u] * zhat.z[(u, v)]).norm_sqr();
                        }
                    }
                    worst = worst.max((metric - joint).abs());
                }
                Ok((worst <= 1e-9, format!("max metric gap {worst:.2e}")))
            })());
        }
    }
    Ok(ValidationReport { checks })
}
