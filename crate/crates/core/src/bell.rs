//! Bell inequalities: evaluation, local bounds, lifting, the block matrix
//! file format and exact threshold proofs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::detect::{apply_detection_map, Efficiency};
use crate::distribution::{Distribution, Scenario};
use crate::error::{Error, Result};
use crate::rational::{self, fmt_rational, half, is_probability, parse_rational, rat, Rational};
use crate::vertices::DeterministicVertex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Direction {
    /// Local points satisfy `value ≥ bound`.
    Geq,
    /// Local points satisfy `value ≤ bound`.
    Leq,
}

impl std::str::FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "GEQ" => Ok(Direction::Geq),
            "LEQ" => Ok(Direction::Leq),
            _ => Err(Error::Parse(format!("unknown direction {s:?}"))),
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Geq => "GEQ",
            Direction::Leq => "LEQ",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BellInequality {
    pub scenario: Scenario,
    /// Coefficients over the flat `(x, y, a, b)` coordinates.
    #[serde(with = "rational::serde_vec")]
    pub coeffs: Vec<Rational>,
    #[serde(with = "rational::serde_str")]
    pub bound: Rational,
    pub direction: Direction,
}

impl BellInequality {
    pub fn new(scenario: Scenario, coeffs: Vec<Rational>, bound: Rational, direction: Direction) -> Result<Self> {
        if coeffs.len() != scenario.len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for scenario {scenario} ({} needed)",
                coeffs.len(),
                scenario.len()
            )));
        }
        Ok(BellInequality { scenario, coeffs, bound, direction })
    }

    pub fn zero(scenario: Scenario) -> Self {
        BellInequality {
            scenario,
            coeffs: vec![Rational::zero(); scenario.len()],
            bound: Rational::zero(),
            direction: Direction::Geq,
        }
    }

    /// A dual certificate read as `b·p ≥ 1`.
    pub fn from_dual(scenario: Scenario, dual: Vec<Rational>) -> Result<Self> {
        BellInequality::new(scenario, dual, Rational::one(), Direction::Geq)
    }

    /// CHSH as the summed losing probability `Σ p(a ⊕ b ≠ xy) ≥ 1`.
    pub fn chsh() -> Self {
        let s = Scenario::binary(2, 2).expect("valid scenario");
        let coeffs = (0..s.len())
            .map(|i| {
                let (x, y, a, b) = s.coords(i);
                if (a ^ b) != (x & y) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .collect();
        BellInequality { scenario: s, coeffs, bound: Rational::one(), direction: Direction::Geq }
    }

    pub fn coeff(&self, x: usize, y: usize, a: usize, b: usize) -> &Rational {
        &self.coeffs[self.scenario.index(x, y, a, b)]
    }

    pub fn evaluate(&self, p: &Distribution) -> Result<Rational> {
        if p.scenario() != self.scenario {
            return Err(Error::Dimension(format!(
                "inequality on {} evaluated at a point of {}",
                self.scenario,
                p.scenario()
            )));
        }
        Ok(p.dot(&self.coeffs))
    }

    /// Whether `value` lies strictly on the nonlocal side of `bound`.
    pub fn violates(&self, value: &Rational, bound: &Rational) -> bool {
        match self.direction {
            Direction::Geq => value < bound,
            Direction::Leq => value > bound,
        }
    }

    /// Exact optimum over deterministic vertices, with an optimal vertex.
    ///
    /// Enumerates the party with fewer assignments and lets the other party
    /// respond optimally per input, in parallel over assignments.
    pub fn local_optimum(&self, cap: u128) -> Result<(Rational, DeterministicVertex)> {
        let s = self.scenario;
        let count = s.deterministic_count();
        if count > cap {
            return Err(Error::CapExceeded { needed: count, cap });
        }
        let minimize = self.direction == Direction::Geq;
        let alice_side = s.alice_assignments() <= s.bob_assignments();
        let total = if alice_side { s.alice_assignments() } else { s.bob_assignments() };
        let better = |a: &Rational, b: &Rational| if minimize { a < b } else { a > b };
        let best = (0..total as u64)
            .into_par_iter()
            .map(|code| {
                let v = self.best_response(code as u128, alice_side, minimize);
                let value = self.value_at(&v);
                (value, v.index(s), v)
            })
            .reduce_with(|l, r| {
                if better(&r.0, &l.0) || (r.0 == l.0 && r.1 < l.1) {
                    r
                } else {
                    l
                }
            })
            .expect("at least one assignment");
        Ok((best.0, best.2))
    }

    pub fn local_bound(&self, cap: u128) -> Result<Rational> {
        self.local_optimum(cap).map(|(v, _)| v)
    }

    fn value_at(&self, v: &DeterministicVertex) -> Rational {
        let s = self.scenario;
        let mut total = Rational::zero();
        for x in 0..s.ma {
            for y in 0..s.mb {
                total += self.coeff(x, y, v.alice[x], v.bob[y]);
            }
        }
        total
    }

    fn best_response(&self, code: u128, alice_side: bool, minimize: bool) -> DeterministicVertex {
        let s = self.scenario;
        let (m_enum, n_enum, m_resp, n_resp) = if alice_side {
            (s.ma, s.na, s.mb, s.nb)
        } else {
            (s.mb, s.nb, s.ma, s.na)
        };
        let mut assign = vec![0usize; m_enum];
        let mut c = code;
        for i in (0..m_enum).rev() {
            assign[i] = (c % n_enum as u128) as usize;
            c /= n_enum as u128;
        }
        let response: Vec<usize> = (0..m_resp)
            .map(|j| {
                let mut best: Option<(Rational, usize)> = None;
                for out in 0..n_resp {
                    let v: Rational = assign
                        .iter()
                        .enumerate()
                        .map(|(i, &o)| if alice_side { self.coeff(i, j, o, out) } else { self.coeff(j, i, out, o) })
                        .sum();
                    let improves = match &best {
                        None => true,
                        Some((bv, _)) => {
                            if minimize {
                                v < *bv
                            } else {
                                v > *bv
                            }
                        }
                    };
                    if improves {
                        best = Some((v, out));
                    }
                }
                best.expect("at least two outputs").1
            })
            .collect();
        if alice_side {
            DeterministicVertex { alice: assign, bob: response }
        } else {
            DeterministicVertex { alice: response, bob: assign }
        }
    }
}

/// Lifts a two-outcome inequality to three outcomes, `F` (index 2) copying
/// outcome `alice_as[x]` for Alice and `bob_as[y]` for Bob.
pub fn lift_two_outcome(s2: &BellInequality, alice_as: &[usize], bob_as: &[usize]) -> Result<BellInequality> {
    let s = s2.scenario;
    if s.na != 2 || s.nb != 2 {
        return Err(Error::Dimension(format!("lifting needs a two-outcome inequality, got {s}")));
    }
    if alice_as.len() != s.ma || bob_as.len() != s.mb {
        return Err(Error::Dimension("one designated outcome per input is needed".into()));
    }
    if alice_as.iter().chain(bob_as).any(|&o| o > 1) {
        return Err(Error::Index("designated outcomes must be 0 or 1".into()));
    }
    let t = Scenario::new(s.ma, s.mb, 3, 3)?;
    let coeffs = (0..t.len())
        .map(|i| {
            let (x, y, a, b) = t.coords(i);
            let a = if a == 2 { alice_as[x] } else { a };
            let b = if b == 2 { bob_as[y] } else { b };
            s2.coeff(x, y, a, b).clone()
        })
        .collect();
    BellInequality::new(t, coeffs, s2.bound.clone(), s2.direction)
}

/// Parses the block matrix format: rows `(x, a)` with `a` fastest, columns
/// `(y, b)` with `b` fastest, after `# scenario`, `# bound` and
/// `# direction` header lines. Other `#` lines are comments.
pub fn parse_matrix(text: &str) -> Result<BellInequality> {
    let mut scenario = None;
    let mut bound = None;
    let mut direction = None;
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            let words: Vec<&str> = header.split_whitespace().collect();
            match words.first().copied() {
                Some("scenario") => {
                    let dims: Vec<usize> = words[1..]
                        .iter()
                        .map(|w| w.parse().map_err(|_| Error::Parse(format!("line {}: bad dimension {w:?}", lineno + 1))))
                        .collect::<Result<_>>()?;
                    if dims.len() != 4 {
                        return Err(Error::Parse(format!("line {}: scenario needs four numbers", lineno + 1)));
                    }
                    scenario = Some(Scenario::new(dims[0], dims[1], dims[2], dims[3])?);
                }
                Some("bound") if words.len() == 2 => bound = Some(parse_rational(words[1])?),
                Some("direction") if words.len() == 2 => direction = Some(words[1].parse()?),
                _ => {}
            }
            continue;
        }
        let row = line.split_whitespace().map(parse_rational).collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let s = scenario.ok_or_else(|| Error::Parse("missing '# scenario' header".into()))?;
    let bound = bound.ok_or_else(|| Error::Parse("missing '# bound' header".into()))?;
    let direction = direction.ok_or_else(|| Error::Parse("missing '# direction' header".into()))?;
    let (h, w) = (s.ma * s.na, s.mb * s.nb);
    if rows.len() != h || rows.iter().any(|r| r.len() != w) {
        return Err(Error::Dimension(format!(
            "scenario {s} needs a {h}x{w} matrix, got {} rows of lengths {:?}",
            rows.len(),
            rows.iter().map(Vec::len).collect::<std::collections::BTreeSet<_>>()
        )));
    }
    let mut coeffs = vec![Rational::zero(); s.len()];
    for (r, row) in rows.into_iter().enumerate() {
        for (c, v) in row.into_iter().enumerate() {
            coeffs[s.index(r / s.na, c / s.nb, r % s.na, c % s.nb)] = v;
        }
    }
    BellInequality::new(s, coeffs, bound, direction)
}

pub fn format_matrix(ineq: &BellInequality) -> String {
    let s = ineq.scenario;
    let mut out = String::new();
    let _ = writeln!(out, "# scenario {} {} {} {}", s.ma, s.mb, s.na, s.nb);
    let _ = writeln!(out, "# bound {}", fmt_rational(&ineq.bound));
    let _ = writeln!(out, "# direction {}", ineq.direction);
    for r in 0..s.ma * s.na {
        let row: Vec<String> = (0..s.mb * s.nb)
            .map(|c| fmt_rational(ineq.coeff(r / s.na, c / s.nb, r % s.na, c % s.nb)))
            .collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn load_matrix(path: &Path) -> Result<BellInequality> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn save_matrix(ineq: &BellInequality, path: &Path) -> Result<()> {
    std::fs::write(path, format_matrix(ineq))?;
    Ok(())
}

/// Environment variable overriding the bundled inequality directory.
pub const DATA_DIR_ENV: &str = "LOOPHOLE_DATA_DIR";

const BUNDLED: [(&str, &str); 4] = [
    ("appendix_b1", include_str!("../data/appendix_b1.ineq")),
    ("appendix_b2", include_str!("../data/appendix_b2.ineq")),
    ("appendix_b3", include_str!("../data/appendix_b3.ineq")),
    ("appendix_b4", include_str!("../data/appendix_b4.ineq")),
];

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from)
}

/// Loads a bundled inequality by name (`appendix_b1` .. `appendix_b4`),
/// reading `<name>.ineq` from the override directory when it is set.
pub fn bundled(name: &str) -> Result<BellInequality> {
    let name = name.strip_suffix(".ineq").unwrap_or(name);
    if let Some(dir) = data_dir() {
        return load_matrix(&dir.join(format!("{name}.ineq")));
    }
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Parse(format!("no bundled inequality named {name:?}")))?;
    parse_matrix(text)
}

/// Loads `path` if it exists, else falls back to the bundled inequality of
/// the same file name.
pub fn resolve_matrix(path: &Path) -> Result<BellInequality> {
    if path.exists() {
        return load_matrix(path);
    }
    match path.file_name().and_then(|n| n.to_str()) {
        Some(name) if bundled_names().any(|b| name.strip_suffix(".ineq") == Some(b)) => bundled(name),
        _ => load_matrix(path),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Exact proof that an inequality witnesses a detection threshold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThresholdProof {
    pub verdict: Verdict,
    /// Bound over deterministic vertices, computed by enumeration.
    #[serde(with = "rational::serde_str")]
    pub local_bound: Rational,
    #[serde(with = "rational::serde_str")]
    pub declared_bound: Rational,
    pub direction: Direction,
    #[serde(with = "rational::serde_str")]
    pub eta_star: Rational,
    /// `v(η) = c0 + c1·η + c2·η²` with `v(η) = s·D_η(p)`.
    #[serde(with = "rational::serde_vec")]
    pub polynomial: Vec<Rational>,
    #[serde(with = "rational::serde_str")]
    pub value_at_eta_star: Rational,
    /// The fitted polynomial reproduces the direct evaluation at `η = 1/4`.
    pub quadratic_checked: bool,
    pub reason: String,
}

fn poly_at(c: &[Rational], x: &Rational) -> Rational {
    &c[0] + &c[1] * x + &c[2] * x * x
}

/// Decides exactly whether `s` is tight on `D_{η*}(p)` and violated by
/// `D_η(p)` for every `η ∈ (η*, 1]`.
pub fn verify_threshold(s: &BellInequality, p: &Distribution, eta_star: &Rational, cap: u128) -> Result<ThresholdProof> {
    if !is_probability(eta_star) {
        return Err(Error::Range(format!("eta* = {} outside [0,1]", fmt_rational(eta_star))));
    }
    p.validate()?;
    if p.scenario().with_failure() != s.scenario {
        return Err(Error::Dimension(format!(
            "inequality on {} but D_eta of the point lives on {}",
            s.scenario,
            p.scenario().with_failure()
        )));
    }
    let k = s.local_bound(cap)?;
    let v = |eta: Rational| -> Result<Rational> { s.evaluate(&apply_detection_map(p, &Efficiency::new(eta)?)?) };
    let (v0, vh, v1) = (v(Rational::zero())?, v(half())?, v(Rational::one())?);
    // v0 + c1/2 + c2/4 = vh, v0 + c1 + c2 = v1
    let c2 = (&v1 - &v0) * rat(2, 1) - (&vh - &v0) * rat(4, 1);
    let c1 = &v1 - &v0 - &c2;
    let poly = vec![v0, c1, c2];
    let quarter = rat(1, 4);
    let quadratic_checked = poly_at(&poly, &quarter) == v(quarter)?;
    let at_star = poly_at(&poly, eta_star);

    // f < 0 exactly where the inequality is violated
    let sign = if s.direction == Direction::Geq { Rational::one() } else { -Rational::one() };
    let f: Vec<Rational> = vec![(&poly[0] - &k) * &sign, &poly[1] * &sign, &poly[2] * &sign];
    let (verdict, reason) = if !quadratic_checked {
        (Verdict::Fail, "v(eta) is not quadratic; the point or map is inconsistent".to_string())
    } else if !poly_at(&f, eta_star).is_zero() {
        (Verdict::Fail, format!("v(eta*) = {} differs from the local bound {}", fmt_rational(&at_star), fmt_rational(&k)))
    } else if eta_star.is_one() {
        (Verdict::Pass, "tight at eta* = 1; the violation interval is empty".to_string())
    } else {
        // f(η) = (η - η*)·g(η) with g linear
        let g = |eta: &Rational| &f[2] * (eta + eta_star) + &f[1];
        let (g_star, g_one) = (g(eta_star), g(&Rational::one()));
        if g_one.is_negative() && !g_star.is_positive() {
            (Verdict::Pass, "tight at eta* and violated on (eta*, 1]".to_string())
        } else {
            (Verdict::Fail, "not violated on all of (eta*, 1]".to_string())
        }
    };
    Ok(ThresholdProof {
        verdict,
        local_bound: k,
        declared_bound: s.bound.clone(),
        direction: s.direction,
        eta_star: eta_star.clone(),
        polynomial: poly,
        value_at_eta_star: at_star,
        quadratic_checked,
        reason,
    })
}
