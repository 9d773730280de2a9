//! The detection-efficiency map and the local hidden-variable strategies that
//! reproduce it.
//!
//! Every statistic in this module has the same shape: for each input pair the
//! table is `joint·p(ab|xy)` on valid outcomes, `alice_fail·p(b|y)` on
//! `(F, b)`, `bob_fail·p(a|x)` on `(a, F)` and `both_fail` on `(F, F)`. The
//! four numbers are collected in [`Coefficients`]; the detection map and
//! both strategies differ only in how they are computed.

mod simulate;

pub use simulate::{
    compare_tables, respond, simulate_protocol, HiddenVariable, Leader, Outcome, SimulationComparison,
    SimulationResult, SIMULATION_BLOCK,
};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::distribution::{Distribution, Scenario};
use crate::error::{Error, Result};
use crate::rational::{self, fmt_rational, int, is_probability, Rational};
use crate::vertices::GFunction;

/// Per-party detection efficiency `η ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Efficiency(Rational);

impl Efficiency {
    pub fn new(eta: Rational) -> Result<Self> {
        if !is_probability(&eta) {
            return Err(Error::Range(format!("efficiency {} outside [0,1]", fmt_rational(&eta))));
        }
        Ok(Efficiency(eta))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }
}

/// The four block weights of a detection-map-shaped statistic.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Coefficients {
    #[serde(with = "rational::serde_str")]
    pub joint: Rational,
    /// Weight of `(F, b)`, multiplying Bob's marginal.
    #[serde(with = "rational::serde_str")]
    pub alice_fail: Rational,
    /// Weight of `(a, F)`, multiplying Alice's marginal.
    #[serde(with = "rational::serde_str")]
    pub bob_fail: Rational,
    #[serde(with = "rational::serde_str")]
    pub both_fail: Rational,
}

impl Coefficients {
    pub fn detection(eta: &Efficiency) -> Self {
        let e = eta.value();
        let f = Rational::one() - e;
        Coefficients { joint: e * e, alice_fail: e * &f, bob_fail: e * &f, both_fail: &f * &f }
    }

    /// Guessing-strategy weights with no joint abort and no extra losses.
    pub fn strategy(kind: StrategyKind, ma: usize, mb: usize, alpha: &Rational) -> Self {
        let one = Rational::one();
        let (ma_r, mb_r) = (int(ma as i64), int(mb as i64));
        let bob_led = &one - alpha;
        let joint = alpha / &ma_r + &bob_led / &mb_r;
        match kind {
            StrategyKind::SingleGuess => Coefficients {
                joint,
                alice_fail: alpha * (&ma_r - &one) / &ma_r,
                bob_fail: &bob_led * (&mb_r - &one) / &mb_r,
                both_fail: Rational::zero(),
            },
            StrategyKind::TwoGuess => {
                let a_miss = alpha * (&ma_r - int(2)) / (int(2) * &ma_r);
                let b_miss = &bob_led * (&mb_r - int(2)) / (int(2) * &mb_r);
                Coefficients {
                    joint,
                    alice_fail: &a_miss + &bob_led / &mb_r,
                    bob_fail: alpha / &ma_r + &b_miss,
                    both_fail: a_miss + b_miss,
                }
            }
        }
    }

    /// Mixes in the all-`FF` point with weight `beta`.
    pub fn with_abort(&self, beta: &Rational) -> Self {
        let keep = Rational::one() - beta;
        Coefficients {
            joint: &self.joint * &keep,
            alice_fail: &self.alice_fail * &keep,
            bob_fail: &self.bob_fail * &keep,
            both_fail: &self.both_fail * &keep + beta,
        }
    }

    /// Each party independently replaces a valid output by `F` with
    /// probability `1 - keep`.
    pub fn with_losses(&self, keep: &Rational) -> Self {
        if keep.is_one() {
            return self.clone();
        }
        let lose = Rational::one() - keep;
        let joint = keep * keep * &self.joint;
        let spill = keep * &lose * &self.joint;
        let alice_fail = keep * &self.alice_fail + &spill;
        let bob_fail = keep * &self.bob_fail + &spill;
        let both_fail = Rational::one() - &joint - &alice_fail - &bob_fail;
        Coefficients { joint, alice_fail, bob_fail, both_fail }
    }

    fn scaled_sum(terms: &[(Rational, Coefficients)]) -> Self {
        let mut out = Coefficients {
            joint: Rational::zero(),
            alice_fail: Rational::zero(),
            bob_fail: Rational::zero(),
            both_fail: Rational::zero(),
        };
        for (w, c) in terms {
            out.joint += w * &c.joint;
            out.alice_fail += w * &c.alice_fail;
            out.bob_fail += w * &c.bob_fail;
            out.both_fail += w * &c.both_fail;
        }
        out
    }

    /// Builds the `(nA+1, nB+1)`-output table for a valid `p`.
    pub fn apply(&self, p: &Distribution) -> Result<Distribution> {
        let s = p.scenario();
        let t = s.with_failure();
        let (fa, fb) = (s.na, s.nb);
        let ma: Vec<Vec<Rational>> =
            (0..s.ma).map(|x| (0..s.na).map(|a| p.marginal_a_at(a, x, 0)).collect()).collect();
        let mb: Vec<Vec<Rational>> =
            (0..s.mb).map(|y| (0..s.nb).map(|b| p.marginal_b_at(b, y, 0)).collect()).collect();
        Distribution::from_fn(t, |x, y, a, b| match (a == fa, b == fb) {
            (false, false) => &self.joint * p.get(x, y, a, b),
            (true, false) => &self.alice_fail * &mb[y][b],
            (false, true) => &self.bob_fail * &ma[x][a],
            (true, true) => self.both_fail.clone(),
        })
    }
}

/// `D_η(p)`: adjoins the failure outcome `F` (last index) to both parties.
pub fn apply_detection_map(p: &Distribution, eta: &Efficiency) -> Result<Distribution> {
    p.validate()?;
    Coefficients::detection(eta).apply(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    /// The leader's device guesses one input; a wrong guess outputs `F`.
    SingleGuess,
    /// The leader guesses two inputs and whether their columns of `G` match.
    TwoGuess,
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single-guess" | "single" => Ok(StrategyKind::SingleGuess),
            "two-guess" | "two" => Ok(StrategyKind::TwoGuess),
            _ => Err(Error::Parse(format!("unknown strategy {s:?}"))),
        }
    }
}

/// Strategy parameters: leader bias towards Alexa, joint-abort probability,
/// and the probability that each device keeps a valid output (1 for the
/// plain strategies).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrategyParams {
    #[serde(with = "rational::serde_str")]
    pub alpha: Rational,
    #[serde(with = "rational::serde_str")]
    pub beta: Rational,
    #[serde(with = "rational::serde_str")]
    pub keep: Rational,
}

impl StrategyParams {
    pub fn new(alpha: Rational, beta: Rational) -> Result<Self> {
        StrategyParams::with_keep(alpha, beta, Rational::one())
    }

    pub fn with_keep(alpha: Rational, beta: Rational, keep: Rational) -> Result<Self> {
        for (name, v) in [("alpha", &alpha), ("beta", &beta), ("keep", &keep)] {
            if !is_probability(v) {
                return Err(Error::Range(format!("{name} = {} outside [0,1]", fmt_rational(v))));
            }
        }
        Ok(StrategyParams { alpha, beta, keep })
    }

    pub fn coefficients(&self, kind: StrategyKind, ma: usize, mb: usize) -> Coefficients {
        Coefficients::strategy(kind, ma, mb, &self.alpha)
            .with_abort(&self.beta)
            .with_losses(&self.keep)
    }
}

/// Rejects boxes that are not of the form `1/2 iff a ⊕ b = G(x, y)`.
///
/// For such boxes any two Alice inputs give conditional tables that match
/// or anti-match column by column, which the two-guess strategy relies on.
pub fn require_g_function(p: &Distribution) -> Result<GFunction> {
    GFunction::from_distribution(p).ok_or_else(|| {
        Error::Precondition("two-guess statistics need a binary box of G-function form".into())
    })
}

/// Closed-form output statistics of a guessing strategy run on `p`.
pub fn strategy_statistics(kind: StrategyKind, p: &Distribution, params: &StrategyParams) -> Result<Distribution> {
    p.validate()?;
    if kind == StrategyKind::TwoGuess {
        require_g_function(p)?;
    }
    let s = p.scenario();
    params.coefficients(kind, s.ma, s.mb).apply(p)
}

/// The unique `(α, β, η)` at which the strategy's statistics equal `D_η`
/// coefficient by coefficient, when it exists inside `[0,1]²`.
fn exact_match(kind: StrategyKind, ma: usize, mb: usize) -> Option<(Rational, Rational, Rational)> {
    let (ma_i, mb_i) = (ma as i64, mb as i64);
    // α equalizing the (F, b) and (a, F) weights
    let alpha = match kind {
        StrategyKind::SingleGuess => {
            let num = (mb_i - 1) * ma_i;
            Rational::new(num.into(), (num + (ma_i - 1) * mb_i).into())
        }
        StrategyKind::TwoGuess => {
            let num = (4 - mb_i) * ma_i;
            let den = 4 * ma_i + 4 * mb_i - 2 * ma_i * mb_i;
            match (num, den) {
                (0, 0) => rational::half(),
                (_, 0) => return None,
                (n, d) => Rational::new(n.into(), d.into()),
            }
        }
    };
    if !is_probability(&alpha) {
        return None;
    }
    let c = Coefficients::strategy(kind, ma, mb, &alpha);
    debug_assert_eq!(c.alice_fail, c.bob_fail);
    let total = &c.joint + &c.alice_fail;
    if total.is_zero() {
        return None;
    }
    let eta = &c.joint / &total;
    let beta = Rational::one() - &eta * &eta / &c.joint;
    if !is_probability(&eta) || eta.is_zero() || !is_probability(&beta) {
        return None;
    }
    Some((alpha, beta, eta))
}

/// Largest `η` at which the strategy reproduces `D_η` of every admissible box.
///
/// `None` when no parameters in `[0,1]²` match the detection map, e.g. for
/// the two-guess strategy at `mA·mB = 16` with `mA ≠ mB`.
pub fn strategy_threshold(kind: StrategyKind, ma: usize, mb: usize) -> Option<Rational> {
    if ma < 2 || mb < 2 {
        return None;
    }
    exact_match(kind, ma, mb).map(|(_, _, eta)| eta)
}

/// Parameters whose strategy statistics equal `D_η(p)` for every admissible
/// `p`, or `None` if `η` exceeds the strategy threshold.
///
/// At the threshold itself `keep = 1`; below it the same `(α, β)` are used
/// and each device additionally drops valid outputs, using
/// `D_t ∘ D_η = D_{tη}`.
pub fn solve_params_for_eta(kind: StrategyKind, ma: usize, mb: usize, eta: &Rational) -> Option<StrategyParams> {
    if !eta.is_positive() || *eta > Rational::one() || ma < 2 || mb < 2 {
        return None;
    }
    let (alpha, beta, top) = exact_match(kind, ma, mb)?;
    if *eta > top {
        return None;
    }
    let keep = eta / &top;
    let params = StrategyParams::with_keep(alpha, beta, keep).ok()?;
    debug_assert_eq!(
        params.coefficients(kind, ma, mb),
        Coefficients::detection(&Efficiency::new(eta.clone()).ok()?)
    );
    Some(params)
}

/// One strategy in a mixture: its weight, kind and leader bias.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixtureComponent {
    pub weight: Rational,
    pub kind: StrategyKind,
    pub alpha: Rational,
}

/// Mixes strategies without abort, then applies one shared abort `beta`.
pub fn mixture_statistics(p: &Distribution, components: &[MixtureComponent], beta: &Rational) -> Result<Distribution> {
    p.validate()?;
    if components.is_empty() {
        return Err(Error::Weights("no components".into()));
    }
    if !is_probability(beta) {
        return Err(Error::Range(format!("beta = {} outside [0,1]", fmt_rational(beta))));
    }
    let s = p.scenario();
    let mut total = Rational::zero();
    let mut terms = Vec::with_capacity(components.len());
    for c in components {
        if c.weight.is_negative() {
            return Err(Error::Weights("negative weight".into()));
        }
        if !is_probability(&c.alpha) {
            return Err(Error::Range(format!("alpha = {} outside [0,1]", fmt_rational(&c.alpha))));
        }
        if c.kind == StrategyKind::TwoGuess {
            require_g_function(p)?;
        }
        total += &c.weight;
        terms.push((c.weight.clone(), Coefficients::strategy(c.kind, s.ma, s.mb, &c.alpha)));
    }
    if !total.is_one() {
        return Err(Error::Weights(format!("weights sum to {}", fmt_rational(&total))));
    }
    Coefficients::scaled_sum(&terms).with_abort(beta).apply(p)
}

/// Success probability `n / (mA · 2^(n-1))` of an `n`-prediction strategy.
pub fn n_guess_success_scaling(n: usize, ma: usize) -> Result<Rational> {
    if n < 1 || n > ma {
        return Err(Error::Range(format!("n = {n} must lie in 1..={ma}")));
    }
    let den = num_bigint::BigInt::from(ma) << (n - 1);
    Ok(Rational::new(n.into(), den))
}

/// Appends Bob inputs `y ≥ mB`, each a copy of column `y mod mB`.
pub fn extend_inputs(p: &Distribution, mb_new: usize) -> Result<Distribution> {
    p.validate()?;
    require_g_function(p)?;
    let s = p.scenario();
    if mb_new <= s.mb {
        return Err(Error::Precondition(format!("mB_new = {mb_new} must exceed mB = {}", s.mb)));
    }
    let t = Scenario::new(s.ma, mb_new, s.na, s.nb)?;
    Distribution::from_fn(t, |x, y, a, b| p.get(x, y % s.mb, a, b).clone())
}
