//! Scenarios, conditional distributions `p(ab|xy)` and their validators.
//!
//! Tables are stored flat in `(x, y, a, b)` order with `b` fastest, so the
//! vector of a distribution reads `p(00|00), p(01|00), ..., p(nA-1 nB-1|mA-1 mB-1)`.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, fmt_rational, is_probability, Rational};

/// Input and output counts `(mA, mB, nA, nB)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawScenario", into = "RawScenario")]
pub struct Scenario {
    pub ma: usize,
    pub mb: usize,
    pub na: usize,
    pub nb: usize,
}

#[derive(Serialize, Deserialize)]
struct RawScenario {
    #[serde(rename = "mA")]
    ma: usize,
    #[serde(rename = "mB")]
    mb: usize,
    #[serde(rename = "nA")]
    na: usize,
    #[serde(rename = "nB")]
    nb: usize,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;
    fn try_from(r: RawScenario) -> Result<Self> {
        Scenario::new(r.ma, r.mb, r.na, r.nb)
    }
}

impl From<Scenario> for RawScenario {
    fn from(s: Scenario) -> Self {
        RawScenario { ma: s.ma, mb: s.mb, na: s.na, nb: s.nb }
    }
}

impl Scenario {
    pub fn new(ma: usize, mb: usize, na: usize, nb: usize) -> Result<Self> {
        if ma < 2 || mb < 2 || na < 2 || nb < 2 {
            return Err(Error::Scenario(format!(
                "all counts must be >= 2, got ({ma},{mb},{na},{nb})"
            )));
        }
        Ok(Scenario { ma, mb, na, nb })
    }

    /// Binary-output scenario `(mA, mB, 2, 2)`.
    pub fn binary(ma: usize, mb: usize) -> Result<Self> {
        Scenario::new(ma, mb, 2, 2)
    }

    /// The scenario after adjoining the failure outcome to both parties.
    pub fn with_failure(&self) -> Scenario {
        Scenario { na: self.na + 1, nb: self.nb + 1, ..*self }
    }

    pub fn len(&self) -> usize {
        self.ma * self.mb * self.na * self.nb
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, a: usize, b: usize) -> usize {
        ((x * self.mb + y) * self.na + a) * self.nb + b
    }

    /// Inverse of [`Scenario::index`].
    pub fn coords(&self, i: usize) -> (usize, usize, usize, usize) {
        let b = i % self.nb;
        let a = (i / self.nb) % self.na;
        let y = (i / (self.nb * self.na)) % self.mb;
        let x = i / (self.nb * self.na * self.mb);
        (x, y, a, b)
    }

    /// Number of Alice (resp. Bob) deterministic strategies.
    pub fn alice_assignments(&self) -> u128 {
        (self.na as u128).pow(self.ma as u32)
    }

    pub fn bob_assignments(&self) -> u128 {
        (self.nb as u128).pow(self.mb as u32)
    }

    /// `nA^mA * nB^mB`, saturating.
    pub fn deterministic_count(&self) -> u128 {
        self.alice_assignments().saturating_mul(self.bob_assignments())
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.ma, self.mb, self.na, self.nb)
    }
}

/// A conditional probability table over a scenario.
///
/// Construction checks the table length and that entries lie in `[0, 1]`;
/// normalization and no-signalling are checked by the validators so that
/// malformed inputs can be reported rather than rejected outright.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct Distribution {
    scenario: Scenario,
    table: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    scenario: Scenario,
    #[serde(with = "rational::serde_vec")]
    table: Vec<Rational>,
}

impl TryFrom<RawDistribution> for Distribution {
    type Error = Error;
    fn try_from(r: RawDistribution) -> Result<Self> {
        Distribution::from_vector(r.scenario, r.table)
    }
}

impl From<Distribution> for RawDistribution {
    fn from(d: Distribution) -> Self {
        RawDistribution { scenario: d.scenario, table: d.table }
    }
}

impl Distribution {
    pub fn from_vector(scenario: Scenario, table: Vec<Rational>) -> Result<Self> {
        if table.len() != scenario.len() {
            return Err(Error::Dimension(format!(
                "scenario {scenario} needs {} entries, got {}",
                scenario.len(),
                table.len()
            )));
        }
        if let Some(i) = table.iter().position(|v| !is_probability(v)) {
            let (x, y, a, b) = scenario.coords(i);
            return Err(Error::Range(format!(
                "p({a}{b}|{x}{y}) = {} outside [0,1]",
                fmt_rational(&table[i])
            )));
        }
        Ok(Distribution { scenario, table })
    }

    /// Builds from a closure over `(x, y, a, b)`.
    pub fn from_fn(scenario: Scenario, mut f: impl FnMut(usize, usize, usize, usize) -> Rational) -> Result<Self> {
        let table = (0..scenario.len())
            .map(|i| {
                let (x, y, a, b) = scenario.coords(i);
                f(x, y, a, b)
            })
            .collect();
        Distribution::from_vector(scenario, table)
    }

    pub fn uniform(scenario: Scenario) -> Self {
        let v = Rational::new(1.into(), ((scenario.na * scenario.nb) as i64).into());
        Distribution { scenario, table: vec![v; scenario.len()] }
    }

    /// `p(ab|xy) = δ(a, alice[x]) δ(b, bob[y])`.
    pub fn deterministic(scenario: Scenario, alice: &[usize], bob: &[usize]) -> Result<Self> {
        if alice.len() != scenario.ma || bob.len() != scenario.mb {
            return Err(Error::Dimension("assignment length does not match inputs".into()));
        }
        if alice.iter().any(|&a| a >= scenario.na) || bob.iter().any(|&b| b >= scenario.nb) {
            return Err(Error::Index("deterministic output out of range".into()));
        }
        Ok(Distribution::from_support(scenario, alice, bob))
    }

    pub(crate) fn from_support(scenario: Scenario, alice: &[usize], bob: &[usize]) -> Self {
        let mut table = vec![Rational::zero(); scenario.len()];
        for (x, &a) in alice.iter().enumerate() {
            for (y, &b) in bob.iter().enumerate() {
                table[scenario.index(x, y, a, b)] = Rational::one();
            }
        }
        Distribution { scenario, table }
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> &Rational {
        &self.table[self.scenario.index(x, y, a, b)]
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.table
    }

    pub fn to_vector(&self) -> Vec<Rational> {
        self.table.clone()
    }

    pub fn into_vector(self) -> Vec<Rational> {
        self.table
    }

    pub fn to_f64_vector(&self) -> Vec<f64> {
        self.table.iter().map(rational::to_f64).collect()
    }

    fn check_x(&self, x: usize) -> Result<()> {
        if x >= self.scenario.ma {
            return Err(Error::Index(format!("x = {x} >= mA = {}", self.scenario.ma)));
        }
        Ok(())
    }

    fn check_y(&self, y: usize) -> Result<()> {
        if y >= self.scenario.mb {
            return Err(Error::Index(format!("y = {y} >= mB = {}", self.scenario.mb)));
        }
        Ok(())
    }

    /// `p(a|x)`, read off at Bob's input 0.
    pub fn marginal_a(&self, a: usize, x: usize) -> Result<Rational> {
        self.check_x(x)?;
        if a >= self.scenario.na {
            return Err(Error::Index(format!("a = {a} >= nA = {}", self.scenario.na)));
        }
        Ok(self.marginal_a_at(a, x, 0))
    }

    /// `p(b|y)`, read off at Alice's input 0.
    pub fn marginal_b(&self, b: usize, y: usize) -> Result<Rational> {
        self.check_y(y)?;
        if b >= self.scenario.nb {
            return Err(Error::Index(format!("b = {b} >= nB = {}", self.scenario.nb)));
        }
        Ok(self.marginal_b_at(b, y, 0))
    }

    /// `Σ_b p(ab|xy)` at an explicit Bob input.
    pub fn marginal_a_at(&self, a: usize, x: usize, y: usize) -> Rational {
        (0..self.scenario.nb).map(|b| self.get(x, y, a, b)).sum()
    }

    /// `Σ_a p(ab|xy)` at an explicit Alice input.
    pub fn marginal_b_at(&self, b: usize, y: usize, x: usize) -> Rational {
        (0..self.scenario.na).map(|a| self.get(x, y, a, b)).sum()
    }

    pub fn validate_normalization(&self) -> NormalizationReport {
        let s = self.scenario;
        let mut violations = Vec::new();
        for x in 0..s.ma {
            for y in 0..s.mb {
                let start = s.index(x, y, 0, 0);
                let sum: Rational = self.table[start..start + s.na * s.nb].iter().sum();
                if !sum.is_one() {
                    let deficit = Rational::one() - &sum;
                    violations.push(NormalizationViolation { x, y, sum, deficit });
                }
            }
        }
        NormalizationReport { violations }
    }

    pub fn validate_no_signalling(&self) -> NoSignallingReport {
        let s = self.scenario;
        for x in 0..s.ma {
            for a in 0..s.na {
                let reference = self.marginal_a_at(a, x, 0);
                for y in 1..s.mb {
                    let value = self.marginal_a_at(a, x, y);
                    if value != reference {
                        return NoSignallingReport {
                            first_violation: Some(SignallingViolation {
                                party: Party::Alice,
                                output: a,
                                own_input: x,
                                other_input: y,
                                reference,
                                value,
                            }),
                        };
                    }
                }
            }
        }
        for y in 0..s.mb {
            for b in 0..s.nb {
                let reference = self.marginal_b_at(b, y, 0);
                for x in 1..s.ma {
                    let value = self.marginal_b_at(b, y, x);
                    if value != reference {
                        return NoSignallingReport {
                            first_violation: Some(SignallingViolation {
                                party: Party::Bob,
                                output: b,
                                own_input: y,
                                other_input: x,
                                reference,
                                value,
                            }),
                        };
                    }
                }
            }
        }
        NoSignallingReport { first_violation: None }
    }

    /// Runs both validators and turns the first failure into an error.
    pub fn validate(&self) -> Result<()> {
        let n = self.validate_normalization();
        if let Some(v) = n.violations.first() {
            return Err(Error::Normalization(v.to_string()));
        }
        if let Some(v) = self.validate_no_signalling().first_violation {
            return Err(Error::Signalling(v.to_string()));
        }
        Ok(())
    }

    /// Exact inner product with a coefficient vector in canonical order.
    pub fn dot(&self, coeffs: &[Rational]) -> Rational {
        debug_assert_eq!(coeffs.len(), self.table.len());
        self.table
            .iter()
            .zip(coeffs)
            .filter(|(p, _)| !p.is_zero())
            .map(|(p, c)| p * c)
            .sum()
    }

    pub fn is_zero_one(&self) -> bool {
        self.table.iter().all(|v| v.is_zero() || v.is_one())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NormalizationViolation {
    pub x: usize,
    pub y: usize,
    #[serde(with = "rational::serde_str")]
    pub sum: Rational,
    #[serde(with = "rational::serde_str")]
    pub deficit: Rational,
}

impl fmt::Display for NormalizationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "block (x={}, y={}) sums to {} (deficit {})",
            self.x,
            self.y,
            fmt_rational(&self.sum),
            fmt_rational(&self.deficit)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NormalizationReport {
    pub violations: Vec<NormalizationViolation>,
}

impl NormalizationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A party's marginal that changes with the other party's input: the value at
/// `other_input` differs from the reference taken at other input 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignallingViolation {
    pub party: Party,
    pub output: usize,
    pub own_input: usize,
    pub other_input: usize,
    #[serde(with = "rational::serde_str")]
    pub reference: Rational,
    #[serde(with = "rational::serde_str")]
    pub value: Rational,
}

impl fmt::Display for SignallingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (who, o, i, other) = match self.party {
            Party::Alice => ("p(a|x)", "a", "x", "y"),
            Party::Bob => ("p(b|y)", "b", "y", "x"),
        };
        write!(
            f,
            "{who} with {o}={}, {i}={} is {} at {other}=0 but {} at {other}={}",
            self.output,
            self.own_input,
            fmt_rational(&self.reference),
            fmt_rational(&self.value),
            self.other_input
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NoSignallingReport {
    pub first_violation: Option<SignallingViolation>,
}

impl NoSignallingReport {
    pub fn is_ok(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Entrywise weighted sum of distributions over one scenario.
pub fn convex_combine(terms: &[(Rational, Distribution)]) -> Result<Distribution> {
    let Some((_, first)) = terms.first() else {
        return Err(Error::Weights("no terms".into()));
    };
    let scenario = first.scenario;
    if terms.iter().any(|(_, d)| d.scenario != scenario) {
        return Err(Error::Dimension("scenario mismatch between terms".into()));
    }
    if terms.iter().any(|(w, _)| w.is_negative()) {
        return Err(Error::Weights("negative weight".into()));
    }
    let total: Rational = terms.iter().map(|(w, _)| w).sum();
    if !total.is_one() {
        return Err(Error::Weights(format!("weights sum to {}", fmt_rational(&total))));
    }
    let mut table = vec![Rational::zero(); scenario.len()];
    for (w, d) in terms {
        if w.is_zero() {
            continue;
        }
        for (t, v) in table.iter_mut().zip(&d.table) {
            if !v.is_zero() {
                *t += w * v;
            }
        }
    }
    Distribution::from_vector(scenario, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn s2() -> Scenario {
        Scenario::binary(2, 2).unwrap()
    }

    fn pr() -> Distribution {
        Distribution::from_fn(s2(), |x, y, a, b| {
            if (a ^ b) == (x & y) {
                rat(1, 2)
            } else {
                Rational::zero()
            }
        })
        .unwrap()
    }

    #[test]
    fn scenario_counts_at_least_two() {
        assert!(Scenario::new(1, 2, 2, 2).is_err());
        assert!(Scenario::new(2, 2, 2, 1).is_err());
        assert_eq!(Scenario::new(3, 4, 2, 2).unwrap().len(), 48);
    }

    #[test]
    fn index_round_trip() {
        let s = Scenario::new(3, 4, 2, 3).unwrap();
        for i in 0..s.len() {
            let (x, y, a, b) = s.coords(i);
            assert_eq!(s.index(x, y, a, b), i);
        }
    }

    #[test]
    fn pr_box_is_valid() {
        let p = pr();
        assert!(p.validate_normalization().is_ok());
        assert!(p.validate_no_signalling().is_ok());
        assert_eq!(p.marginal_a(0, 0).unwrap(), rat(1, 2));
        assert_eq!(&p.to_vector()[..4], &[rat(1, 2), rat(0, 1), rat(0, 1), rat(1, 2)]);
    }

    #[test]
    fn single_spike_block_is_normalized() {
        let mut v = pr().to_vector();
        v[0] = Rational::one();
        v[3] = Rational::zero();
        let p = Distribution::from_vector(s2(), v).unwrap();
        assert!(p.validate_normalization().is_ok());
    }

    #[test]
    fn zero_table_violates_every_block() {
        let p = Distribution::from_vector(s2(), vec![Rational::zero(); 16]).unwrap();
        let r = p.validate_normalization();
        assert_eq!(r.violations.len(), 4);
        assert!(r.violations.iter().all(|v| v.deficit.is_one()));
        assert!(matches!(p.validate(), Err(Error::Normalization(_))));
    }

    #[test]
    fn deterministic_points_are_no_signalling() {
        let s = Scenario::new(3, 2, 3, 2).unwrap();
        let d = Distribution::deterministic(s, &[2, 0, 1], &[1, 1]).unwrap();
        assert!(d.validate().is_ok());
        assert_eq!(d.marginal_a(2, 0).unwrap(), Rational::one());
        assert_eq!(d.marginal_a(1, 0).unwrap(), Rational::zero());
    }

    #[test]
    fn signalling_counterexample() {
        // p(00|00) = p(01|01) = p(00|10) = p(00|11) = 1
        let s = s2();
        let mut v = vec![Rational::zero(); 16];
        v[s.index(0, 0, 0, 0)] = Rational::one();
        v[s.index(0, 1, 0, 1)] = Rational::one();
        v[s.index(1, 0, 0, 0)] = Rational::one();
        v[s.index(1, 1, 0, 0)] = Rational::one();
        let p = Distribution::from_vector(s, v).unwrap();
        assert!(p.validate_normalization().is_ok());
        let r = p.validate_no_signalling();
        let v = r.first_violation.expect("signalling");
        assert_eq!(v.party, Party::Bob);
        assert_eq!((v.own_input, v.other_input), (1, 1));
    }

    #[test]
    fn vector_length_and_range_errors() {
        assert!(matches!(
            Distribution::from_vector(s2(), vec![Rational::zero(); 15]),
            Err(Error::Dimension(_))
        ));
        let mut v = vec![Rational::zero(); 16];
        v[3] = rat(3, 2);
        assert!(matches!(Distribution::from_vector(s2(), v), Err(Error::Range(_))));
    }

    #[test]
    fn vector_round_trip() {
        let p = pr();
        assert_eq!(Distribution::from_vector(s2(), p.to_vector()).unwrap(), p);
    }

    #[test]
    fn marginal_index_errors() {
        let p = pr();
        assert!(p.marginal_a(2, 0).is_err());
        assert!(p.marginal_a(0, 2).is_err());
        assert!(p.marginal_b(0, 5).is_err());
    }

    #[test]
    fn convex_combinations() {
        let p = pr();
        assert_eq!(convex_combine(&[(Rational::one(), p.clone())]).unwrap(), p);

        let anti = Distribution::from_fn(s2(), |x, y, a, b| {
            if (a ^ b) == 1 - (x & y) {
                rat(1, 2)
            } else {
                Rational::zero()
            }
        })
        .unwrap();
        let mix = convex_combine(&[(rat(1, 2), p.clone()), (rat(1, 2), anti)]).unwrap();
        assert_eq!(mix, Distribution::uniform(s2()));

        let mix = convex_combine(&[(rat(3, 4), p.clone()), (rat(1, 4), Distribution::uniform(s2()))]).unwrap();
        assert_eq!(mix.get(0, 0, 0, 0), &rat(7, 16));

        assert!(matches!(
            convex_combine(&[(rat(1, 2), p.clone())]),
            Err(Error::Weights(_))
        ));
        let other = Distribution::uniform(Scenario::binary(2, 3).unwrap());
        assert!(matches!(
            convex_combine(&[(rat(1, 2), p), (rat(1, 2), other)]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn json_shape() {
        let p = pr();
        let j = serde_json::to_value(&p).unwrap();
        assert_eq!(j["scenario"]["mA"], 2);
        assert_eq!(j["table"][0], "1/2");
        assert_eq!(j["table"][1], "0/1");
        let back: Distribution = serde_json::from_value(j).unwrap();
        assert_eq!(back, p);

        let txt = r#"{"scenario":{"mA":2,"mB":2,"nA":2,"nB":2},"table":["1","0","0","0","1","0","0","0","1","0","0","0","1","0","0","0"]}"#;
        let d: Distribution = serde_json::from_str(txt).unwrap();
        assert!(d.validate().is_ok());
        let short = r#"{"scenario":{"mA":2,"mB":2,"nA":2,"nB":2},"table":["1"]}"#;
        assert!(serde_json::from_str::<Distribution>(short).is_err());
    }
}
