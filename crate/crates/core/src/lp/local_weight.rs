//! Local weight of a distribution, with its dual Bell certificate.
//!
//! Primal: `maximize Σ α_i` subject to `Σ α_i d_i ≤ q` entrywise and
//! `α ≥ 0`, where `d_i` ranges over the deterministic local points. The row
//! duals `b` of an optimal basis satisfy `b·d_i ≥ 1` for every `i` and
//! `b·q = Σ α_i`, so when the optimum is below one, `b` is a Bell
//! inequality (`≥ 1` on local points) that `q` violates.

use std::collections::{BTreeMap, HashSet};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::distribution::{Distribution, Scenario};
use crate::error::{Error, Result};
use crate::lp::float::{self, FloatColumn};
use crate::lp::simplex::{RevisedSimplex, SparseColumn};
use crate::rational::{self, Rational};
use crate::vertices::DeterministicVertex;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalWeightResult {
    #[serde(with = "rational::serde_str")]
    pub w: Rational,
    /// Deterministic-vertex index (lexicographic in `(a_0.., b_0..)`) to weight.
    #[serde(serialize_with = "ser_decomposition")]
    pub decomposition: BTreeMap<u128, Rational>,
    /// Row duals over the flat coordinates of `q`.
    #[serde(with = "rational::serde_vec")]
    pub dual: Vec<Rational>,
    /// `q - Σ α_i d_i`, a sub-normalised no-signalling table of mass `1 - w`.
    #[serde(with = "rational::serde_vec")]
    pub residual: Vec<Rational>,
    #[serde(skip)]
    pub scenario: Scenario,
    pub pivots: usize,
    /// Columns present in the final master problem.
    pub columns: usize,
}

fn ser_decomposition<S: serde::Serializer>(m: &BTreeMap<u128, Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k.to_string(), rational::fmt_rational(v))))
}

impl LocalWeightResult {
    pub fn is_local(&self) -> bool {
        self.w.is_one()
    }

    /// The residual rescaled to a normalised distribution, when `w < 1`.
    pub fn residual_distribution(&self) -> Option<Result<Distribution>> {
        if self.w.is_one() {
            return None;
        }
        let scale = (Rational::one() - &self.w).recip();
        Some(Distribution::from_vector(
            self.scenario,
            self.residual.iter().map(|v| v * &scale).collect(),
        ))
    }

    pub fn dual_value(&self, d: &Distribution) -> Rational {
        d.dot(&self.dual)
    }
}

fn vertex_column(scenario: Scenario, v: &DeterministicVertex) -> SparseColumn {
    let mut col: SparseColumn = v.support(scenario).into_iter().map(|i| (i, Rational::one())).collect();
    col.sort_by_key(|(i, _)| *i);
    col
}

/// Slack columns `0..N` followed by the given vertex columns.
fn master(q: &Distribution, vertices: &[DeterministicVertex]) -> RevisedSimplex {
    let s = q.scenario();
    let n = s.len();
    let mut cols: Vec<SparseColumn> = (0..n).map(|i| vec![(i, Rational::one())]).collect();
    let mut cost = vec![Rational::zero(); n];
    for v in vertices {
        cols.push(vertex_column(s, v));
        cost.push(Rational::one());
    }
    RevisedSimplex::new(q.to_vector(), cols, cost, (0..n).collect())
}

fn finish(q: &Distribution, lp: &RevisedSimplex, vertices: &[DeterministicVertex]) -> LocalWeightResult {
    let s = q.scenario();
    let n = s.len();
    let x = lp.primal();
    let mut decomposition = BTreeMap::new();
    let mut residual = q.to_vector();
    let mut w = Rational::zero();
    for (k, v) in vertices.iter().enumerate() {
        let alpha = &x[n + k];
        if alpha.is_zero() {
            continue;
        }
        for i in v.support(s) {
            residual[i] -= alpha;
        }
        w += alpha;
        *decomposition.entry(v.index(s)).or_insert_with(Rational::zero) += alpha;
    }
    LocalWeightResult {
        w,
        decomposition,
        dual: lp.duals(),
        residual,
        scenario: s,
        pivots: lp.pivots(),
        columns: vertices.len(),
    }
}

fn check_input(q: &Distribution) -> Result<()> {
    q.validate()?;
    Ok(())
}

/// Solves the full primal over every deterministic vertex of `q`'s scenario.
pub fn local_weight(q: &Distribution) -> Result<LocalWeightResult> {
    local_weight_capped(q, 1 << 20)
}

pub fn local_weight_capped(q: &Distribution, cap: u128) -> Result<LocalWeightResult> {
    check_input(q)?;
    let s = q.scenario();
    let count = s.deterministic_count();
    if count > cap {
        return Err(Error::CapExceeded { needed: count, cap });
    }
    let vertices: Vec<DeterministicVertex> = (0..count).map(|i| DeterministicVertex::from_index(s, i)).collect();
    let basis = float_master(q, &vertices, None).map(|(b, _)| b);
    let lp = solve_master(q, &vertices, basis.as_deref())?;
    Ok(finish(q, &lp, &vertices))
}

fn float_master(
    q: &Distribution,
    vertices: &[DeterministicVertex],
    start: Option<&[usize]>,
) -> Option<(Vec<usize>, Vec<f64>)> {
    let s = q.scenario();
    let n = s.len();
    let mut cols: Vec<FloatColumn> = (0..n).map(|i| vec![(i, 1.0)]).collect();
    cols.extend(vertices.iter().map(|v| v.support(s).into_iter().map(|i| (i, 1.0)).collect()));
    let mut cost = vec![0.0; n];
    cost.resize(cols.len(), 1.0);
    let slack: Vec<usize> = (0..n).collect();
    float::optimal_basis(&q.to_f64_vector(), &cols, &cost, start.unwrap_or(&slack))
}

/// Exact optimum of the master over `vertices`, warm-started from `basis`
/// when that basis is exactly primal feasible.
fn solve_master(q: &Distribution, vertices: &[DeterministicVertex], basis: Option<&[usize]>) -> Result<RevisedSimplex> {
    let mut lp = master(q, vertices);
    if let Some(basis) = basis {
        let mut warm = lp.clone();
        if warm.crash(basis) && warm.is_primal_feasible() {
            warm.optimize()?;
            return Ok(warm);
        }
    }
    lp.optimize()?;
    Ok(lp)
}

/// A column found by pricing: a deterministic vertex and its dual value `b·d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PricedColumn {
    pub vertex: DeterministicVertex,
    pub value: Rational,
}

/// Finds deterministic vertices with `b·d < 1`, most violated first.
///
/// Enumerates every assignment of the party with fewer assignments; the
/// other party's best response is then separable per input. At most `limit`
/// columns are returned, ordered by `(value, vertex index)`.
pub fn price_columns(scenario: Scenario, dual: &[Rational], limit: usize) -> Vec<PricedColumn> {
    price_with(scenario, dual, &Rational::one(), limit)
        .into_iter()
        .map(|(vertex, value)| PricedColumn { vertex, value })
        .collect()
}

fn price_with<T>(s: Scenario, dual: &[T], threshold: &T, limit: usize) -> Vec<(DeterministicVertex, T)>
where
    T: Clone + PartialOrd + Zero + for<'a> std::ops::AddAssign<&'a T>,
{
    let alice_side = s.alice_assignments() <= s.bob_assignments();
    let (m_enum, n_enum, m_resp, n_resp) = if alice_side {
        (s.ma, s.na, s.mb, s.nb)
    } else {
        (s.mb, s.nb, s.ma, s.na)
    };
    let coeff = |enum_in: usize, resp_in: usize, enum_out: usize, resp_out: usize| -> &T {
        if alice_side {
            &dual[s.index(enum_in, resp_in, enum_out, resp_out)]
        } else {
            &dual[s.index(resp_in, enum_in, resp_out, enum_out)]
        }
    };
    let total = (n_enum as u128).pow(m_enum as u32);
    let mut found: Vec<(DeterministicVertex, T)> = Vec::new();
    let mut assign = vec![0usize; m_enum];
    for code in 0..total {
        let mut c = code;
        for i in (0..m_enum).rev() {
            assign[i] = (c % n_enum as u128) as usize;
            c /= n_enum as u128;
        }
        let mut value = T::zero();
        let mut response = vec![0usize; m_resp];
        for (j, r) in response.iter_mut().enumerate() {
            let mut best: Option<(T, usize)> = None;
            for out in 0..n_resp {
                let mut v = T::zero();
                for (i, &o) in assign.iter().enumerate() {
                    v += coeff(i, j, o, out);
                }
                if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                    best = Some((v, out));
                }
            }
            let (v, out) = best.expect("at least two outputs");
            value += &v;
            *r = out;
        }
        if value < *threshold {
            let vertex = if alice_side {
                DeterministicVertex { alice: assign.clone(), bob: response }
            } else {
                DeterministicVertex { alice: response, bob: assign.clone() }
            };
            found.push((vertex, value));
        }
    }
    found.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.index(s).cmp(&b.0.index(s)))
    });
    found.truncate(limit);
    found
}

/// Columns added per pricing round.
const COLUMNS_PER_ROUND: usize = 32;

/// Float pricing accepts columns with `b·d < 1 - FLOAT_PRICE_TOL`.
const FLOAT_PRICE_TOL: f64 = 1e-9;
const FLOAT_ROUNDS: usize = 10_000;

/// Same optimum as [`local_weight`], by column generation.
///
/// A floating-point column-generation pass proposes columns and a basis;
/// the exact pass then re-solves from that basis and keeps pricing exactly
/// until no deterministic vertex has `b·d < 1`.
pub fn local_weight_cg(q: &Distribution) -> Result<LocalWeightResult> {
    check_input(q)?;
    let s = q.scenario();
    let mut vertices: Vec<DeterministicVertex> = Vec::new();
    let mut seen: HashSet<u128> = HashSet::new();
    let mut basis: Option<Vec<usize>> = None;
    for _ in 0..FLOAT_ROUNDS {
        let Some((b, y)) = float_master(q, &vertices, basis.as_deref()) else {
            basis = None;
            break;
        };
        basis = Some(b);
        let mut added = 0;
        for (v, _) in price_with(s, &y, &(1.0 - FLOAT_PRICE_TOL), COLUMNS_PER_ROUND) {
            if seen.insert(v.index(s)) {
                vertices.push(v);
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
    }
    let mut lp = solve_master(q, &vertices, basis.as_deref())?;
    loop {
        let dual = lp.duals();
        let priced = price_columns(s, &dual, COLUMNS_PER_ROUND);
        let mut added = 0;
        for col in priced {
            if !seen.insert(col.vertex.index(s)) {
                continue;
            }
            lp.add_column(vertex_column(s, &col.vertex), Rational::one());
            vertices.push(col.vertex);
            added += 1;
        }
        if added == 0 {
            break;
        }
        lp.optimize()?;
    }
    debug_assert!(lp.duals().iter().all(|v| !v.is_negative()));
    Ok(finish(q, &lp, &vertices))
}

/// Which local-weight solver to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Full,
    ColumnGeneration,
    /// Full LP up to [`AUTO_FULL_LIMIT`] deterministic vertices, else column generation.
    #[default]
    Auto,
}

pub const AUTO_FULL_LIMIT: u128 = 1000;

pub fn local_weight_with(q: &Distribution, solver: Solver) -> Result<LocalWeightResult> {
    match solver {
        Solver::Full => local_weight(q),
        Solver::ColumnGeneration => local_weight_cg(q),
        Solver::Auto if q.scenario().deterministic_count() <= AUTO_FULL_LIMIT => local_weight(q),
        Solver::Auto => local_weight_cg(q),
    }
}
