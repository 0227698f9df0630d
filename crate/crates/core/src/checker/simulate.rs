//! Monte Carlo estimation of conditional values by rejection sampling.
//!
//! Runs are executed big-step directly on the statement tree, sharing no
//! code with the small-step successor function, so agreement between the
//! two is a meaningful check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::semantics::{CompiledProgram, Int, Node, NodeId, RewardFn, SemanticsError, MAX_UNIFORM_WIDTH};
use crate::Rational;

const CHUNK: u64 = 4096;
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimulationConfig {
    pub runs: u64,
    pub seed: u64,
    /// Statements a run may execute before it counts as diverged.
    pub max_steps: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            runs: 100_000,
            seed: 0,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SimulationError {
    #[error("programs with nondeterministic choice cannot be simulated")]
    Nondeterministic,
    #[error("programs with symbolic probabilities cannot be simulated")]
    Parametric,
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// Estimate of `E[f | not bad]`, counting diverged runs as accepted with
/// reward zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimulationEstimate {
    pub runs: u64,
    pub terminated: u64,
    pub rejected: u64,
    pub diverged: u64,
    /// `None` if every run was rejected.
    pub mean: Option<f64>,
    pub std_error: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

impl SimulationEstimate {
    pub fn accepted(&self) -> u64 {
        self.runs - self.rejected
    }

    /// Whether `v` lies within the 95% interval, widened by `slack`.
    pub fn covers(&self, v: f64, slack: f64) -> bool {
        match (self.ci_low, self.ci_high) {
            (Some(lo), Some(hi)) => lo - slack <= v && v <= hi + slack,
            _ => false,
        }
    }
}

enum RunEnd {
    Done,
    Rejected,
    Diverged,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    terminated: u64,
    rejected: u64,
    diverged: u64,
    sum: f64,
    sum_sq: f64,
}

struct Runner<'a> {
    program: &'a CompiledProgram,
    probs: Vec<f64>,
    max_steps: u64,
}

impl Runner<'_> {
    fn exec(&self, id: NodeId, sigma: &mut [Int], rng: &mut ChaCha8Rng, steps: &mut u64) -> Result<RunEnd, SemanticsError> {
        *steps += 1;
        if *steps > self.max_steps {
            return Ok(RunEnd::Diverged);
        }
        match self.program.node(id) {
            Node::Skip => {}
            Node::Abort => return Ok(RunEnd::Diverged),
            Node::Assign(x, e) => sigma[*x] = e.eval_fast(sigma),
            Node::Uniform(x, lo, hi) => {
                let lo = lo.eval_fast(sigma);
                let hi = hi.eval_fast(sigma);
                if lo > hi {
                    return Err(SemanticsError::EmptyRange { lo, hi });
                }
                let width = hi.sub(&lo).to_i64().map(|w| w as u64 + 1);
                match width {
                    Some(n) if n <= MAX_UNIFORM_WIDTH => {
                        let k = rng.gen_range(0..n);
                        sigma[*x] = lo.add(&Int::Small(k as i64));
                    }
                    _ => return Err(SemanticsError::RangeTooWide { lo, hi }),
                }
            }
            Node::Block(body) => {
                for &s in body {
                    match self.exec(s, sigma, rng, steps)? {
                        RunEnd::Done => {}
                        end => return Ok(end),
                    }
                }
            }
            Node::If(g, t, e) => {
                let next = if g.eval(sigma) { *t } else { *e };
                return self.exec(next, sigma, rng, steps);
            }
            Node::Prob { left, right, weight, .. } => {
                let next = if rng.gen::<f64>() < self.probs[*weight as usize] {
                    *left
                } else {
                    *right
                };
                return self.exec(next, sigma, rng, steps);
            }
            Node::Nondet(..) => unreachable!("rejected before sampling"),
            Node::While(g, body) => {
                while g.eval(sigma) {
                    match self.exec(*body, sigma, rng, steps)? {
                        RunEnd::Done => {}
                        end => return Ok(end),
                    }
                    *steps += 1;
                    if *steps > self.max_steps {
                        return Ok(RunEnd::Diverged);
                    }
                }
            }
            Node::Observe(g) => {
                if !g.eval(sigma) {
                    return Ok(RunEnd::Rejected);
                }
            }
        }
        Ok(RunEnd::Done)
    }
}

fn to_f64(r: &Rational) -> f64 {
    crate::scalar::rational_to_f64(r)
}

/// Samples `cfg.runs` runs. Results depend only on `cfg`, not on the
/// number of worker threads.
pub fn simulate(
    program: &CompiledProgram,
    reward: &RewardFn,
    cfg: &SimulationConfig,
) -> Result<SimulationEstimate, SimulationError> {
    if program.has_nondeterminism() {
        return Err(SimulationError::Nondeterministic);
    }
    let probs = program
        .weight_table()
        .iter()
        .map(|p| p.constant_value().map(|c| to_f64(&c)))
        .collect::<Option<Vec<f64>>>()
        .ok_or(SimulationError::Parametric)?;
    let runner = Runner {
        program,
        probs,
        max_steps: cfg.max_steps,
    };
    let chunks = cfg.runs.div_ceil(CHUNK);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<Tally, SemanticsError> {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(chunk);
            let n = CHUNK.min(cfg.runs - chunk * CHUNK);
            let mut t = Tally::default();
            let mut sigma: Vec<Int> = Vec::new();
            for _ in 0..n {
                sigma.clear();
                sigma.extend_from_slice(program.initial_valuation().as_slice());
                let mut steps = 0;
                match runner.exec(program.root(), &mut sigma, &mut rng, &mut steps)? {
                    RunEnd::Done => {
                        t.terminated += 1;
                        let v = to_f64(&reward.eval(&crate::semantics::Valuation::new(sigma.clone()))?);
                        t.sum += v;
                        t.sum_sq += v * v;
                    }
                    RunEnd::Rejected => t.rejected += 1,
                    RunEnd::Diverged => t.diverged += 1,
                }
            }
            Ok(t)
        })
        .collect::<Result<_, _>>()?;
    let total = tallies.iter().fold(Tally::default(), |a, t| Tally {
        terminated: a.terminated + t.terminated,
        rejected: a.rejected + t.rejected,
        diverged: a.diverged + t.diverged,
        sum: a.sum + t.sum,
        sum_sq: a.sum_sq + t.sum_sq,
    });
    let accepted = total.terminated + total.diverged;
    let (mean, std_error) = if accepted == 0 {
        (None, None)
    } else {
        let n = accepted as f64;
        let mean = total.sum / n;
        let var = if accepted > 1 {
            ((total.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        (Some(mean), Some((var / n).sqrt()))
    };
    Ok(SimulationEstimate {
        runs: cfg.runs,
        terminated: total.terminated,
        rejected: total.rejected,
        diverged: total.diverged,
        mean,
        std_error,
        ci_low: mean.zip(std_error).map(|(m, s)| m - Z95 * s),
        ci_high: mean.zip(std_error).map(|(m, s)| m + Z95 * s),
    })
}
