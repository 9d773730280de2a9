//! Detection thresholds of single points by exact bisection on the locality
//! of `D_η(p)`, and scenario thresholds as minima over points.

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::detect::{apply_detection_map, Efficiency};
use crate::distribution::Distribution;
use crate::error::{Error, Result};
use crate::lp::{local_weight_with, LocalWeightResult, Solver};
use crate::rational::{self, fmt_rational, half, is_probability, rat, Rational};

/// `true` iff the local weight of `q` is exactly one.
pub fn is_local(q: &Distribution) -> Result<bool> {
    Ok(local_weight_with(q, Solver::Auto)?.is_local())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ThresholdMode {
    /// Plain bisection.
    Bracket,
    /// Also tests `D_η̂` for locality and `D_{η̂+ε}` for nonlocality.
    Candidate { eta: Rational, eps: Rational },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdOptions {
    pub gap: Rational,
    pub mode: ThresholdMode,
    pub solver: Solver,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions { gap: default_gap(), mode: ThresholdMode::Bracket, solver: Solver::Auto }
    }
}

impl ThresholdOptions {
    pub fn candidate(eta: Rational, eps: Rational) -> Self {
        ThresholdOptions { mode: ThresholdMode::Candidate { eta, eps }, ..Default::default() }
    }
}

/// `2^-12`.
pub fn default_gap() -> Rational {
    rat(1, 4096)
}

/// `1/1000`.
pub fn default_eps() -> Rational {
    rat(1, 1000)
}

/// One locality test in a bisection trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Sample {
    #[serde(with = "rational::serde_str")]
    pub eta: Rational,
    #[serde(with = "rational::serde_str")]
    pub w: Rational,
}

impl Sample {
    pub fn is_local(&self) -> bool {
        self.w.is_one()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CandidateReport {
    #[serde(with = "rational::serde_str")]
    pub eta: Rational,
    #[serde(with = "rational::serde_str")]
    pub eps: Rational,
    pub local_at_eta: bool,
    pub nonlocal_above: bool,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThresholdResult {
    /// Largest tested `η` with `D_η(p)` local.
    #[serde(with = "rational::serde_str")]
    pub lower: Rational,
    /// Smallest tested `η` with `D_η(p)` nonlocal; `None` if `D_1(p)` is local.
    #[serde(with = "rational::serde_opt")]
    pub upper: Option<Rational>,
    pub certificate_local: LocalWeightResult,
    pub certificate_nonlocal: Option<LocalWeightResult>,
    pub candidate: Option<CandidateReport>,
    /// Every sample, in the order tested.
    pub trace: Vec<Sample>,
}

impl ThresholdResult {
    pub fn gap(&self) -> Option<Rational> {
        self.upper.as_ref().map(|u| u - &self.lower)
    }
}

struct Bisection<'a> {
    p: &'a Distribution,
    solver: Solver,
    trace: Vec<Sample>,
    lower: Option<(Rational, LocalWeightResult)>,
    upper: Option<(Rational, LocalWeightResult)>,
}

impl Bisection<'_> {
    fn test(&mut self, eta: &Rational) -> Result<bool> {
        let q = apply_detection_map(self.p, &Efficiency::new(eta.clone())?)?;
        let r = local_weight_with(&q, self.solver)?;
        let local = r.is_local();
        self.trace.push(Sample { eta: eta.clone(), w: r.w.clone() });
        self.audit()?;
        if local {
            if self.lower.as_ref().is_none_or(|(l, _)| eta > l) {
                self.lower = Some((eta.clone(), r));
            }
        } else if self.upper.as_ref().is_none_or(|(u, _)| eta < u) {
            self.upper = Some((eta.clone(), r));
        }
        Ok(local)
    }

    /// Every local sample must lie below every nonlocal one.
    fn audit(&self) -> Result<()> {
        let max_local = self.trace.iter().filter(|s| s.is_local()).map(|s| &s.eta).max();
        let min_nonlocal = self.trace.iter().filter(|s| !s.is_local()).map(|s| &s.eta).min();
        if let (Some(l), Some(n)) = (max_local, min_nonlocal) {
            if l > n {
                return Err(Error::NonMonotone { local: fmt_rational(l), nonlocal: fmt_rational(n) });
            }
        }
        Ok(())
    }
}

/// Brackets the detection threshold of `p` to within `opts.gap`.
pub fn point_threshold(p: &Distribution, opts: &ThresholdOptions) -> Result<ThresholdResult> {
    if !opts.gap.is_positive() {
        return Err(Error::Range(format!("gap must be positive, got {}", fmt_rational(&opts.gap))));
    }
    p.validate()?;
    let mut b = Bisection { p, solver: opts.solver, trace: Vec::new(), lower: None, upper: None };
    let one = Rational::one();
    if b.test(&one)? {
        let (lower, cert) = b.lower.expect("local sample recorded");
        return Ok(ThresholdResult {
            lower,
            upper: None,
            certificate_local: cert,
            certificate_nonlocal: None,
            candidate: None,
            trace: b.trace,
        });
    }
    b.test(&Rational::zero())?;
    let candidate = match &opts.mode {
        ThresholdMode::Bracket => None,
        ThresholdMode::Candidate { eta, eps } => {
            if !is_probability(eta) || !eps.is_positive() {
                return Err(Error::Range("candidate must lie in [0,1] and eps must be positive".into()));
            }
            let local_at_eta = b.test(eta)?;
            let above = eta + eps;
            let nonlocal_above = above <= one && !b.test(&above)?;
            Some(CandidateReport {
                eta: eta.clone(),
                eps: eps.clone(),
                local_at_eta,
                nonlocal_above,
                certified: local_at_eta && nonlocal_above,
            })
        }
    };
    loop {
        let lo = &b.lower.as_ref().expect("η = 0 is local").0;
        let hi = &b.upper.as_ref().expect("η = 1 is nonlocal").0;
        if hi - lo <= opts.gap {
            break;
        }
        let mid = (lo + hi) * half();
        b.test(&mid)?;
    }
    let (lower, certificate_local) = b.lower.expect("η = 0 is local");
    let (upper, certificate_nonlocal) = b.upper.expect("η = 1 is nonlocal");
    Ok(ThresholdResult {
        lower,
        upper: Some(upper),
        certificate_local,
        certificate_nonlocal: Some(certificate_nonlocal),
        candidate,
        trace: b.trace,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScenarioThreshold {
    /// `min_j lower_j`.
    #[serde(with = "rational::serde_str")]
    pub lower: Rational,
    /// `min_j upper_j`, treating a missing upper end as 1.
    #[serde(with = "rational::serde_str")]
    pub upper: Rational,
    /// Index of the point with the smallest upper end.
    pub argmin: usize,
    pub points: Vec<ThresholdResult>,
}

/// Thresholds of every point, computed in parallel, and their minimum.
pub fn scenario_threshold(points: &[Distribution], opts: &ThresholdOptions) -> Result<ScenarioThreshold> {
    let first = points.first().ok_or_else(|| Error::Precondition("no points given".into()))?;
    if let Some(bad) = points.iter().find(|p| p.scenario() != first.scenario()) {
        return Err(Error::Dimension(format!("mixed scenarios {} and {}", first.scenario(), bad.scenario())));
    }
    let results: Vec<ThresholdResult> =
        points.par_iter().map(|p| point_threshold(p, opts)).collect::<Result<_>>()?;
    let one = Rational::one();
    let upper_of = |r: &ThresholdResult| r.upper.clone().unwrap_or_else(|| one.clone());
    let argmin = (0..results.len())
        .min_by(|&i, &j| {
            upper_of(&results[i])
                .cmp(&upper_of(&results[j]))
                .then_with(|| results[i].lower.cmp(&results[j].lower))
                .then(i.cmp(&j))
        })
        .expect("nonempty");
    let lower = results.iter().map(|r| r.lower.clone()).min().expect("nonempty");
    Ok(ScenarioThreshold { lower, upper: upper_of(&results[argmin]), argmin, points: results })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::Scenario;
    use crate::vertices::{generalized_pr_box, GFunction};

    #[test]
    fn locality_examples() {
        let s = Scenario::binary(2, 2).unwrap();
        assert!(is_local(&Distribution::uniform(s)).unwrap());
        let pr = generalized_pr_box(2, 2).unwrap();
        assert!(!is_local(&pr).unwrap());
        let q = apply_detection_map(&pr, &Efficiency::new(rat(2, 3)).unwrap()).unwrap();
        assert!(is_local(&q).unwrap());
    }

    #[test]
    fn candidate_pr22() {
        let pr = generalized_pr_box(2, 2).unwrap();
        let r = point_threshold(&pr, &ThresholdOptions::candidate(rat(2, 3), default_eps())).unwrap();
        let c = r.candidate.as_ref().unwrap();
        assert!(c.certified);
        assert!(r.lower >= rat(2, 3));
        assert!(r.upper.as_ref().unwrap() <= &(rat(2, 3) + default_eps()));
        assert!(r.gap().unwrap() <= default_gap());
        assert!(r.certificate_local.is_local());
        assert!(!r.certificate_nonlocal.as_ref().unwrap().is_local());
    }

    #[test]
    fn wrong_candidate_is_not_certified() {
        let pr = generalized_pr_box(2, 2).unwrap();
        let r = point_threshold(&pr, &ThresholdOptions::candidate(rat(7, 10), default_eps())).unwrap();
        assert!(!r.candidate.unwrap().certified);
        let r = point_threshold(&pr, &ThresholdOptions::candidate(rat(3, 5), default_eps())).unwrap();
        assert!(!r.candidate.unwrap().certified);
    }

    #[test]
    fn bracket_pr22() {
        let pr = generalized_pr_box(2, 2).unwrap();
        let r = point_threshold(&pr, &ThresholdOptions::default()).unwrap();
        let up = r.upper.clone().unwrap();
        assert!(r.lower <= rat(2, 3) && rat(2, 3) <= up);
        assert!(&up - &r.lower <= default_gap());
        // 0, 1 and then halving steps only
        assert_eq!(r.trace.len(), 2 + 12);
    }

    #[test]
    fn bisection_halves() {
        let pr = generalized_pr_box(2, 2).unwrap();
        for k in 1..8 {
            let opts = ThresholdOptions { gap: rat(1, 1 << k), ..Default::default() };
            let r = point_threshold(&pr, &opts).unwrap();
            assert_eq!(r.trace.len(), 2 + k as usize);
            assert!(r.gap().unwrap() <= rat(1, 1 << k));
        }
    }

    #[test]
    fn local_point_has_threshold_one() {
        let s = Scenario::binary(2, 2).unwrap();
        let d = Distribution::deterministic(s, &[0, 1], &[1, 1]).unwrap();
        let r = point_threshold(&d, &ThresholdOptions::default()).unwrap();
        assert_eq!(r.lower, Rational::one());
        assert_eq!(r.upper, None);
    }

    #[test]
    fn gap_must_be_positive() {
        let pr = generalized_pr_box(2, 2).unwrap();
        let opts = ThresholdOptions { gap: Rational::zero(), ..Default::default() };
        assert!(matches!(point_threshold(&pr, &opts), Err(Error::Range(_))));
    }

    #[test]
    fn relabeling_invariance() {
        let base = GFunction::generalized_pr(2, 3).unwrap();
        let reference = point_threshold(&base.to_distribution(), &ThresholdOptions::default()).unwrap();
        let variants = [
            GFunction::from_fn(2, 3, |x, y| base.get(x, y) ^ (x == 1)).unwrap(),
            GFunction::from_fn(2, 3, |x, y| base.get(1 - x, y)).unwrap(),
            GFunction::from_fn(2, 3, |x, y| base.get(x, (y + 1) % 3) ^ (y == 0)).unwrap(),
        ];
        for g in variants {
            let r = point_threshold(&g.to_distribution(), &ThresholdOptions::default()).unwrap();
            assert_eq!((r.lower, r.upper), (reference.lower.clone(), reference.upper.clone()));
        }
    }

    #[test]
    fn scenario_minimum() {
        let s = Scenario::binary(2, 2).unwrap();
        let local = Distribution::uniform(s);
        let pr = generalized_pr_box(2, 2).unwrap();
        let r = scenario_threshold(&[local.clone(), pr], &ThresholdOptions::default()).unwrap();
        assert_eq!(r.argmin, 1);
        assert!(r.lower <= rat(2, 3) && rat(2, 3) <= r.upper);
        let only_local = scenario_threshold(&[local], &ThresholdOptions::default()).unwrap();
        assert_eq!(only_local.upper, Rational::one());
        assert!(matches!(scenario_threshold(&[], &ThresholdOptions::default()), Err(Error::Precondition(_))));
    }
}
