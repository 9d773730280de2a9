//! Monte Carlo simulation of the guessing strategies as explicit local
//! hidden-variable protocols.
//!
//! Trials run in blocks of [`SIMULATION_BLOCK`]; block `k` draws from a
//! ChaCha8 stream `k` of the master seed, so results do not depend on the
//! number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{require_g_function, StrategyKind, StrategyParams};
use crate::distribution::{Distribution, Scenario};
use crate::error::{Error, Result};
use crate::rational::to_f64;
use crate::vertices::GFunction;

pub const SIMULATION_BLOCK: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Leader {
    Alexa,
    Boris,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Value(usize),
    Fail,
}

/// Shared randomness of one round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HiddenVariable {
    pub abort: bool,
    pub leader: Leader,
    /// Guessed input(s) of the leader: one for single-guess, an ordered
    /// distinct pair for two-guess.
    pub guess: Vec<usize>,
    /// Leader's output on the first guessed input.
    pub output: usize,
    /// Two-guess only: guessed parity `G(·, g0) ⊕ G(·, g1)` of the guessed
    /// inputs' columns (rows when Boris leads).
    pub parity: bool,
}

/// Floating-point view of a box for sampling.
struct Model {
    s: Scenario,
    table: Vec<f64>,
    g: Option<GFunction>,
}

impl Model {
    fn p(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        self.table[self.s.index(x, y, a, b)]
    }

    fn marginal_a(&self, a: usize, x: usize) -> f64 {
        (0..self.s.nb).map(|b| self.p(x, 0, a, b)).sum()
    }

    fn marginal_b(&self, b: usize, y: usize) -> f64 {
        (0..self.s.na).map(|a| self.p(0, y, a, b)).sum()
    }
}

fn pick(rng: &mut impl Rng, weights: impl Iterator<Item = f64>) -> usize {
    let w: Vec<f64> = weights.collect();
    let total: f64 = w.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, v) in w.iter().enumerate() {
        if u < *v {
            return i;
        }
        u -= v;
    }
    w.iter().rposition(|v| *v > 0.0).unwrap_or(0)
}

fn distinct_pair(rng: &mut impl Rng, m: usize) -> Vec<usize> {
    let i = rng.random_range(0..m);
    let mut j = rng.random_range(0..m - 1);
    if j >= i {
        j += 1;
    }
    vec![i, j]
}

impl HiddenVariable {
    fn sample(kind: StrategyKind, model: &Model, alpha: f64, beta: f64, rng: &mut impl Rng) -> Self {
        let s = model.s;
        let abort = rng.random_bool(beta);
        let leader = if rng.random_bool(alpha) { Leader::Alexa } else { Leader::Boris };
        let m = match leader {
            Leader::Alexa => s.ma,
            Leader::Boris => s.mb,
        };
        let guess = match kind {
            StrategyKind::SingleGuess => vec![rng.random_range(0..m)],
            StrategyKind::TwoGuess => distinct_pair(rng, m),
        };
        let output = match leader {
            Leader::Alexa => pick(rng, (0..s.na).map(|a| model.marginal_a(a, guess[0]))),
            Leader::Boris => pick(rng, (0..s.nb).map(|b| model.marginal_b(b, guess[0]))),
        };
        let parity = kind == StrategyKind::TwoGuess && rng.random_bool(0.5);
        HiddenVariable { abort, leader, guess, output, parity }
    }
}

/// Outputs of both devices for inputs `(x, y)` given the hidden variable.
///
/// The follower's local randomness comes from `rng`.
fn respond_model(
    kind: StrategyKind,
    model: &Model,
    lambda: &HiddenVariable,
    x: usize,
    y: usize,
    rng: &mut impl Rng,
) -> (Outcome, Outcome) {
    if lambda.abort {
        return (Outcome::Fail, Outcome::Fail);
    }
    let s = model.s;
    let r = lambda.output;
    match (kind, lambda.leader) {
        (StrategyKind::SingleGuess, Leader::Alexa) => {
            let x0 = lambda.guess[0];
            let b = pick(rng, (0..s.nb).map(|b| model.p(x0, y, r, b)));
            let a = if x == x0 { Outcome::Value(r) } else { Outcome::Fail };
            (a, Outcome::Value(b))
        }
        (StrategyKind::SingleGuess, Leader::Boris) => {
            let y0 = lambda.guess[0];
            let a = pick(rng, (0..s.na).map(|a| model.p(x, y0, a, r)));
            let b = if y == y0 { Outcome::Value(r) } else { Outcome::Fail };
            (Outcome::Value(a), b)
        }
        (StrategyKind::TwoGuess, leader) => {
            let g = model.g.as_ref().expect("two-guess needs a G-function box");
            let (g0, g1) = (lambda.guess[0], lambda.guess[1]);
            let s_bit = lambda.parity as usize;
            let (own, other) = match leader {
                Leader::Alexa => (x, y),
                Leader::Boris => (y, x),
            };
            let column = |i: usize| match leader {
                Leader::Alexa => g.get(i, other),
                Leader::Boris => g.get(other, i),
            };
            let lead = if own == g0 {
                Outcome::Value(r)
            } else if own == g1 {
                Outcome::Value(r ^ s_bit)
            } else {
                Outcome::Fail
            };
            let follow = if (column(g0) ^ column(g1)) == lambda.parity {
                Outcome::Value(r ^ column(g0) as usize)
            } else {
                Outcome::Fail
            };
            match leader {
                Leader::Alexa => (lead, follow),
                Leader::Boris => (follow, lead),
            }
        }
    }
}

/// Public single-round response, for inspection and testing.
pub fn respond(
    kind: StrategyKind,
    p: &Distribution,
    lambda: &HiddenVariable,
    x: usize,
    y: usize,
    rng: &mut impl Rng,
) -> Result<(Outcome, Outcome)> {
    let model = build_model(kind, p)?;
    Ok(respond_model(kind, &model, lambda, x, y, rng))
}

fn build_model(kind: StrategyKind, p: &Distribution) -> Result<Model> {
    p.validate()?;
    let g = match kind {
        StrategyKind::TwoGuess => Some(require_g_function(p)?),
        StrategyKind::SingleGuess => None,
    };
    Ok(Model { s: p.scenario(), table: p.to_f64_vector(), g })
}

/// Empirical outcome counts of a simulated protocol.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationResult {
    /// Scenario of the output table (one extra outcome per party).
    #[serde(skip)]
    pub scenario: Scenario,
    pub trials: u64,
    pub seed: u64,
    /// Outcome counts over the flat `(x, y, a, b)` coordinates.
    pub counts: Vec<u64>,
    /// Number of rounds with each input pair, indexed `x·mB + y`.
    pub input_counts: Vec<u64>,
}

impl SimulationResult {
    /// Conditional frequencies `count(ab|xy) / count(xy)`.
    pub fn frequencies(&self) -> Vec<f64> {
        let s = self.scenario;
        (0..s.len())
            .map(|i| {
                let (x, y, _, _) = s.coords(i);
                let n = self.input_counts[x * s.mb + y];
                if n == 0 {
                    0.0
                } else {
                    self.counts[i] as f64 / n as f64
                }
            })
            .collect()
    }

    /// Binomial standard errors `sqrt(f(1-f)/n)` of each frequency.
    pub fn std_errors(&self) -> Vec<f64> {
        let s = self.scenario;
        self.frequencies()
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let (x, y, _, _) = s.coords(i);
                let n = self.input_counts[x * s.mb + y].max(1) as f64;
                (f * (1.0 - f) / n).sqrt()
            })
            .collect()
    }
}

fn run_block(
    kind: StrategyKind,
    model: &Model,
    params: (f64, f64, f64),
    seed: u64,
    block: u64,
    len: u64,
) -> (Vec<u64>, Vec<u64>) {
    let s = model.s;
    let t = s.with_failure();
    let (alpha, beta, keep) = params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let mut counts = vec![0u64; t.len()];
    let mut inputs = vec![0u64; s.ma * s.mb];
    for _ in 0..len {
        let x = rng.random_range(0..s.ma);
        let y = rng.random_range(0..s.mb);
        let lambda = HiddenVariable::sample(kind, model, alpha, beta, &mut rng);
        let (mut a, mut b) = respond_model(kind, model, &lambda, x, y, &mut rng);
        if keep < 1.0 {
            if matches!(a, Outcome::Value(_)) && !rng.random_bool(keep) {
                a = Outcome::Fail;
            }
            if matches!(b, Outcome::Value(_)) && !rng.random_bool(keep) {
                b = Outcome::Fail;
            }
        }
        let ai = match a {
            Outcome::Value(v) => v,
            Outcome::Fail => s.na,
        };
        let bi = match b {
            Outcome::Value(v) => v,
            Outcome::Fail => s.nb,
        };
        counts[t.index(x, y, ai, bi)] += 1;
        inputs[x * s.mb + y] += 1;
    }
    (counts, inputs)
}

/// Runs `trials` rounds with uniformly random inputs.
pub fn simulate_protocol(
    kind: StrategyKind,
    p: &Distribution,
    params: &StrategyParams,
    trials: u64,
    seed: u64,
) -> Result<SimulationResult> {
    if trials == 0 {
        return Err(Error::Range("trials must be positive".into()));
    }
    let model = build_model(kind, p)?;
    let fparams = (to_f64(&params.alpha), to_f64(&params.beta), to_f64(&params.keep));
    let t = model.s.with_failure();
    let blocks = trials.div_ceil(SIMULATION_BLOCK);
    let (counts, input_counts) = (0..blocks)
        .into_par_iter()
        .map(|k| {
            let len = SIMULATION_BLOCK.min(trials - k * SIMULATION_BLOCK);
            run_block(kind, &model, fparams, seed, k, len)
        })
        .reduce(
            || (vec![0; t.len()], vec![0; model.s.ma * model.s.mb]),
            |(mut c1, mut i1), (c2, i2)| {
                c1.iter_mut().zip(c2).for_each(|(a, b)| *a += b);
                i1.iter_mut().zip(i2).for_each(|(a, b)| *a += b);
                (c1, i1)
            },
        );
    Ok(SimulationResult { scenario: t, trials, seed, counts, input_counts })
}

/// Agreement between simulated frequencies and an exact table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationComparison {
    /// Largest `|frequency - exact|` over all entries.
    pub max_deviation: f64,
    /// Largest total-variation distance over input pairs.
    pub max_tv: f64,
    /// Largest deviation in units of the exact binomial standard error;
    /// infinite if an impossible outcome was observed.
    pub max_z: f64,
}

pub fn compare_tables(sim: &SimulationResult, exact: &Distribution) -> Result<SimulationComparison> {
    let s = sim.scenario;
    if exact.scenario() != s {
        return Err(Error::Dimension(format!("scenario {} vs {}", exact.scenario(), s)));
    }
    let freq = sim.frequencies();
    let p = exact.to_f64_vector();
    let mut max_deviation = 0.0f64;
    let mut max_z = 0.0f64;
    let mut tv = vec![0.0f64; s.ma * s.mb];
    for i in 0..s.len() {
        let (x, y, _, _) = s.coords(i);
        let d = (freq[i] - p[i]).abs();
        max_deviation = max_deviation.max(d);
        tv[x * s.mb + y] += d / 2.0;
        let n = sim.input_counts[x * s.mb + y] as f64;
        let sd = (p[i] * (1.0 - p[i]) / n).sqrt();
        if sd > 0.0 {
            max_z = max_z.max(d / sd);
        } else if d > 0.0 {
            max_z = f64::INFINITY;
        }
    }
    let max_tv = tv.into_iter().fold(0.0, f64::max);
    Ok(SimulationComparison { max_deviation, max_tv, max_z })
}
