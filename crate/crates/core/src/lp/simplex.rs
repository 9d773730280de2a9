//! Exact revised simplex over `BigRational`.
//!
//! The engine works on a standard-form maximisation `max cᵀx, Ax = b, x ≥ 0`
//! whose starting basis is made of unit columns (slacks or artificials), so
//! `B⁻¹` starts as the identity. Columns are sparse and can be appended
//! between solves, which is what column generation needs. The pivot
//! sequence depends only on the input.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub type SparseColumn = Vec<(usize, Rational)>;

#[derive(Clone, Debug)]
pub(crate) struct RevisedSimplex {
    m: usize,
    cols: Vec<SparseColumn>,
    cost: Vec<Rational>,
    blocked: Vec<bool>,
    basis: Vec<usize>,
    row_of: Vec<Option<usize>>,
    binv: Vec<Vec<Rational>>,
    xb: Vec<Rational>,
    pivots: usize,
}

impl RevisedSimplex {
    /// `basis[i]` must name a column equal to the `i`-th unit vector and
    /// `rhs` must be nonnegative.
    pub fn new(rhs: Vec<Rational>, cols: Vec<SparseColumn>, cost: Vec<Rational>, basis: Vec<usize>) -> Self {
        let m = rhs.len();
        assert_eq!(basis.len(), m);
        assert_eq!(cols.len(), cost.len());
        assert!(rhs.iter().all(|v| !v.is_negative()), "initial basis must be feasible");
        let mut row_of = vec![None; cols.len()];
        for (i, &j) in basis.iter().enumerate() {
            debug_assert!(cols[j].len() == 1 && cols[j][0].0 == i && cols[j][0].1.is_one());
            row_of[j] = Some(i);
        }
        let binv = (0..m)
            .map(|i| {
                let mut row = vec![Rational::zero(); m];
                row[i] = Rational::one();
                row
            })
            .collect();
        let blocked = vec![false; cols.len()];
        RevisedSimplex { m, cols, cost, blocked, basis, row_of, binv, xb: rhs, pivots: 0 }
    }

    pub fn add_column(&mut self, col: SparseColumn, cost: Rational) -> usize {
        self.cols.push(col);
        self.cost.push(cost);
        self.blocked.push(false);
        self.row_of.push(None);
        self.cols.len() - 1
    }

    pub fn set_costs(&mut self, cost: Vec<Rational>) {
        assert_eq!(cost.len(), self.cols.len());
        self.cost = cost;
    }

    pub fn block(&mut self, j: usize) {
        self.blocked[j] = true;
    }

    pub fn pivots(&self) -> usize {
        self.pivots
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    pub fn row_of(&self, j: usize) -> Option<usize> {
        self.row_of[j]
    }

    /// `yᵀ = c_Bᵀ B⁻¹`.
    pub fn duals(&self) -> Vec<Rational> {
        let mut y = vec![Rational::zero(); self.m];
        for (i, &j) in self.basis.iter().enumerate() {
            let c = &self.cost[j];
            if c.is_zero() {
                continue;
            }
            for (yk, bik) in y.iter_mut().zip(&self.binv[i]) {
                if !bik.is_zero() {
                    *yk += c * bik;
                }
            }
        }
        y
    }

    pub fn reduced_cost(&self, j: usize, y: &[Rational]) -> Rational {
        let mut d = self.cost[j].clone();
        for (r, v) in &self.cols[j] {
            if !y[*r].is_zero() {
                d -= &y[*r] * v;
            }
        }
        d
    }

    pub fn objective(&self) -> Rational {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(_, v)| !v.is_zero())
            .map(|(&j, v)| &self.cost[j] * v)
            .sum()
    }

    pub fn primal(&self) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); self.cols.len()];
        for (i, &j) in self.basis.iter().enumerate() {
            x[j] = self.xb[i].clone();
        }
        x
    }

    /// `B⁻¹ a_j`.
    pub fn ftran(&self, j: usize) -> Vec<Rational> {
        let mut u = vec![Rational::zero(); self.m];
        for (r, v) in &self.cols[j] {
            for (ui, row) in u.iter_mut().zip(&self.binv) {
                let b = &row[*r];
                if !b.is_zero() {
                    *ui += b * v;
                }
            }
        }
        u
    }

    /// Pivots column `j` into the basis at row `r`.
    pub fn pivot(&mut self, r: usize, j: usize, u: &[Rational]) {
        let pivot = u[r].clone();
        debug_assert!(!pivot.is_zero());
        let inv = pivot.recip();
        let nz: Vec<usize> = (0..self.m).filter(|&k| !self.binv[r][k].is_zero()).collect();
        for &k in &nz {
            self.binv[r][k] *= &inv;
        }
        self.xb[r] *= &inv;
        let prow: Vec<(usize, Rational)> = nz.iter().map(|&k| (k, self.binv[r][k].clone())).collect();
        let xr = self.xb[r].clone();
        for i in 0..self.m {
            if i == r || u[i].is_zero() {
                continue;
            }
            let f = &u[i];
            let row = &mut self.binv[i];
            for (k, v) in &prow {
                row[*k] -= f * v;
            }
            if !xr.is_zero() {
                self.xb[i] -= f * &xr;
            }
        }
        let leaving = self.basis[r];
        self.row_of[leaving] = None;
        self.row_of[j] = Some(r);
        self.basis[r] = j;
        self.pivots += 1;
    }

    /// Pivots every column of `target` into the basis, ignoring
    /// feasibility. Returns `false` if the columns are linearly dependent.
    pub fn crash(&mut self, target: &[usize]) -> bool {
        let mut wanted = vec![false; self.cols.len()];
        for &j in target {
            wanted[j] = true;
        }
        for &j in target {
            if self.row_of[j].is_some() {
                continue;
            }
            let u = self.ftran(j);
            let Some(r) = (0..self.m).find(|&i| !u[i].is_zero() && !wanted[self.basis[i]]) else {
                return false;
            };
            self.pivot(r, j, &u);
        }
        true
    }

    pub fn is_primal_feasible(&self) -> bool {
        self.xb.iter().all(|v| !v.is_negative())
    }

    /// Pivots to optimality.
    ///
    /// Entering columns follow Dantzig's rule (largest reduced cost, lowest
    /// index on ties). After [`DEGENERATE_RUN`] consecutive degenerate
    /// pivots the solver switches to Bland's rule until the objective moves,
    /// which rules out cycling.
    pub fn optimize(&mut self) -> Result<()> {
        let mut degenerate = 0usize;
        loop {
            let y = self.duals();
            let bland = degenerate >= DEGENERATE_RUN;
            let mut entering: Option<(usize, Rational)> = None;
            for j in 0..self.cols.len() {
                if self.row_of[j].is_some() || self.blocked[j] {
                    continue;
                }
                let d = self.reduced_cost(j, &y);
                if !d.is_positive() {
                    continue;
                }
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.as_ref().is_none_or(|(_, bd)| d > *bd) {
                    entering = Some((j, d));
                }
            }
            let Some((j, _)) = entering else {
                return Ok(());
            };
            let u = self.ftran(j);
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.m {
                if !u[i].is_positive() {
                    continue;
                }
                let ratio = &self.xb[i] / &u[i];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = best else {
                return Err(Error::Unbounded);
            };
            if ratio.is_zero() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, j, &u);
        }
    }
}

/// Consecutive degenerate pivots tolerated before falling back to Bland's rule.
const DEGENERATE_RUN: usize = 50;

/// Constraint sense of one LP row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub sense: Sense,
    pub rhs: Rational,
}

/// Variable bounds; `None` is infinite.
#[derive(Clone, Debug)]
pub struct VarBounds {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl Default for VarBounds {
    fn default() -> Self {
        VarBounds { lower: Some(Rational::zero()), upper: None }
    }
}

impl VarBounds {
    pub fn free() -> Self {
        VarBounds { lower: None, upper: None }
    }
}

/// `maximize objective·x` subject to the rows and bounds.
#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<VarBounds>,
}

impl LpProblem {
    pub fn new(objective: Vec<Rational>) -> Self {
        let n = objective.len();
        LpProblem { objective, constraints: Vec::new(), bounds: vec![VarBounds::default(); n] }
    }

    pub fn constraint(mut self, coeffs: Vec<(usize, Rational)>, sense: Sense, rhs: Rational) -> Self {
        self.constraints.push(Constraint { coeffs, sense, rhs });
        self
    }

    pub fn bound(mut self, var: usize, bounds: VarBounds) -> Self {
        self.bounds[var] = bounds;
        self
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub value: Rational,
    pub x: Vec<Rational>,
    /// One multiplier per constraint row: nonnegative on `≤` rows,
    /// nonpositive on `≥` rows, with `c_j - Σ_i y_i a_ij` of the right sign
    /// for every variable.
    pub duals: Vec<Rational>,
    pub pivots: usize,
}

/// How an original variable maps onto standard-form columns.
enum VarMap {
    Shifted { col: usize, offset: Rational },
    Mirrored { col: usize, offset: Rational },
    Split { pos: usize, neg: usize },
}

/// Solves an LP exactly by two-phase revised simplex.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    let n = problem.objective.len();
    if problem.bounds.len() != n {
        return Err(Error::Dimension("one bound per variable required".into()));
    }
    for c in &problem.constraints {
        if c.coeffs.iter().any(|(j, _)| *j >= n) {
            return Err(Error::Index("constraint references unknown variable".into()));
        }
    }

    // variable substitution into nonnegative columns
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut extra_rows: Vec<Constraint> = Vec::new();
    for (j, b) in problem.bounds.iter().enumerate() {
        match (&b.lower, &b.upper) {
            (Some(l), u) => {
                if let Some(u) = u {
                    if u < l {
                        return Err(Error::Infeasible);
                    }
                    extra_rows.push(Constraint { coeffs: vec![(j, Rational::one())], sense: Sense::Le, rhs: u.clone() });
                }
                maps.push(VarMap::Shifted { col: ncols, offset: l.clone() });
                ncols += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap::Mirrored { col: ncols, offset: u.clone() });
                ncols += 1;
            }
            (None, None) => {
                maps.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
                ncols += 2;
            }
        }
    }
    let rows: Vec<&Constraint> = problem.constraints.iter().chain(extra_rows.iter()).collect();
    let m = rows.len();

    let mut structural: Vec<SparseColumn> = vec![Vec::new(); ncols];
    let mut cost: Vec<Rational> = vec![Rational::zero(); ncols];
    for (j, map) in maps.iter().enumerate() {
        let c = &problem.objective[j];
        match map {
            VarMap::Shifted { col, .. } => cost[*col] = c.clone(),
            VarMap::Mirrored { col, .. } => cost[*col] = -c,
            VarMap::Split { pos, neg } => {
                cost[*pos] = c.clone();
                cost[*neg] = -c;
            }
        }
    }
    let mut rhs = Vec::with_capacity(m);
    let mut flipped = Vec::with_capacity(m);
    let mut senses = Vec::with_capacity(m);
    for (i, row) in rows.iter().enumerate() {
        let mut b = row.rhs.clone();
        let mut entries: Vec<(usize, Rational)> = Vec::new();
        for (j, a) in &row.coeffs {
            if a.is_zero() {
                continue;
            }
            match &maps[*j] {
                VarMap::Shifted { col, offset } => {
                    b -= a * offset;
                    entries.push((*col, a.clone()));
                }
                VarMap::Mirrored { col, offset } => {
                    b -= a * offset;
                    entries.push((*col, -a));
                }
                VarMap::Split { pos, neg } => {
                    entries.push((*pos, a.clone()));
                    entries.push((*neg, -a));
                }
            }
        }
        let flip = b.is_negative();
        let mut sense = row.sense;
        if flip {
            b = -b;
            sense = match sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
        for (col, a) in entries {
            let v = if flip { -a } else { a };
            match structural[col].last_mut() {
                Some((r, acc)) if *r == i => *acc += v,
                _ => structural[col].push((i, v)),
            }
        }
        rhs.push(b);
        flipped.push(flip);
        senses.push(sense);
    }
    for col in structural.iter_mut() {
        col.retain(|(_, v)| !v.is_zero());
    }

    // slacks, surpluses and artificials
    let mut cols = structural;
    let mut basis = vec![usize::MAX; m];
    let mut artificials = Vec::new();
    for i in 0..m {
        match senses[i] {
            Sense::Le => {
                cols.push(vec![(i, Rational::one())]);
                cost.push(Rational::zero());
                basis[i] = cols.len() - 1;
            }
            Sense::Ge => {
                cols.push(vec![(i, -Rational::one())]);
                cost.push(Rational::zero());
            }
            Sense::Eq => {}
        }
    }
    for i in 0..m {
        if basis[i] == usize::MAX {
            cols.push(vec![(i, Rational::one())]);
            cost.push(Rational::zero());
            basis[i] = cols.len() - 1;
            artificials.push(cols.len() - 1);
        }
    }

    let phase2_cost = cost.clone();
    let mut phase1_cost = vec![Rational::zero(); cols.len()];
    for &a in &artificials {
        phase1_cost[a] = -Rational::one();
    }
    let mut lp = RevisedSimplex::new(rhs, cols, phase1_cost, basis);
    if !artificials.is_empty() {
        lp.optimize()?;
        if lp.objective().is_negative() {
            return Err(Error::Infeasible);
        }
        // drive zero-valued artificials out of the basis where possible
        let is_art = |j: usize| artificials.contains(&j);
        for r in 0..m {
            let j = lp.basis()[r];
            if !is_art(j) {
                continue;
            }
            let binv_row: Vec<Rational> = (0..m).map(|k| lp.binv[r][k].clone()).collect();
            let candidate = (0..lp.num_cols()).find(|&c| {
                lp.row_of(c).is_none() && !is_art(c) && {
                    let dot: Rational = lp.cols[c].iter().map(|(k, v)| &binv_row[*k] * v).sum();
                    !dot.is_zero()
                }
            });
            if let Some(c) = candidate {
                let u = lp.ftran(c);
                lp.pivot(r, c, &u);
            }
        }
        for &a in &artificials {
            lp.block(a);
        }
    }
    lp.set_costs(phase2_cost);
    lp.optimize()?;

    let raw = lp.primal();
    let mut x = Vec::with_capacity(n);
    let mut value = Rational::zero();
    for (j, map) in maps.iter().enumerate() {
        let v = match map {
            VarMap::Shifted { col, offset } => offset + &raw[*col],
            VarMap::Mirrored { col, offset } => offset - &raw[*col],
            VarMap::Split { pos, neg } => &raw[*pos] - &raw[*neg],
        };
        value += &problem.objective[j] * &v;
        x.push(v);
    }
    let y = lp.duals();
    let duals = (0..problem.constraints.len())
        .map(|i| if flipped[i] { -&y[i] } else { y[i].clone() })
        .collect();
    Ok(LpSolution { value, x, duals, pivots: lp.pivots() })
}
