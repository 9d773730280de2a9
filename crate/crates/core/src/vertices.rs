//! Extremal points of the local and no-signalling polytopes.

use std::collections::HashSet;
use std::fmt;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::distribution::{Distribution, Scenario};
use crate::error::{Error, Result};
use crate::lp::local_weight;
use crate::rational::{half, Rational};

/// A deterministic local strategy: Alice answers `alice[x]`, Bob `bob[y]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DeterministicVertex {
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
}

impl DeterministicVertex {
    /// Decodes the `i`-th vertex in lexicographic order of `(a_0.., b_0..)`.
    pub fn from_index(s: Scenario, mut i: u128) -> Self {
        let mut bob = vec![0; s.mb];
        for y in (0..s.mb).rev() {
            bob[y] = (i % s.nb as u128) as usize;
            i /= s.nb as u128;
        }
        let mut alice = vec![0; s.ma];
        for x in (0..s.ma).rev() {
            alice[x] = (i % s.na as u128) as usize;
            i /= s.na as u128;
        }
        DeterministicVertex { alice, bob }
    }

    pub fn index(&self, s: Scenario) -> u128 {
        let mut i = 0u128;
        for &a in &self.alice {
            i = i * s.na as u128 + a as u128;
        }
        for &b in &self.bob {
            i = i * s.nb as u128 + b as u128;
        }
        i
    }

    /// Flat indices of the `mA·mB` entries equal to one.
    pub fn support(&self, s: Scenario) -> Vec<usize> {
        let mut out = Vec::with_capacity(s.ma * s.mb);
        for (x, &a) in self.alice.iter().enumerate() {
            for (y, &b) in self.bob.iter().enumerate() {
                out.push(s.index(x, y, a, b));
            }
        }
        out
    }

    pub fn to_distribution(&self, s: Scenario) -> Distribution {
        Distribution::from_support(s, &self.alice, &self.bob)
    }
}

/// All `nA^mA · nB^mB` deterministic local points, in lexicographic order.
pub fn local_deterministic_vertices(s: Scenario) -> impl Iterator<Item = Distribution> {
    (0..s.deterministic_count()).map(move |i| DeterministicVertex::from_index(s, i).to_distribution(s))
}

/// A binary matrix `G(x, y)`; its box has `p(ab|xy) = 1/2` iff `a ⊕ b = G(x, y)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GFunction {
    ma: usize,
    mb: usize,
    bits: Vec<bool>,
}

impl GFunction {
    pub fn new(rows: Vec<Vec<bool>>) -> Result<Self> {
        let ma = rows.len();
        let mb = rows.first().map_or(0, Vec::len);
        if ma < 2 || mb < 2 {
            return Err(Error::Dimension(format!("G must be at least 2x2, got {ma}x{mb}")));
        }
        if rows.iter().any(|r| r.len() != mb) {
            return Err(Error::Dimension("ragged G matrix".into()));
        }
        Ok(GFunction { ma, mb, bits: rows.concat() })
    }

    pub fn from_fn(ma: usize, mb: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        GFunction::new((0..ma).map(|x| (0..mb).map(|y| f(x, y)).collect()).collect())
    }

    /// `G(x, y) = x₂ · y₂ mod 2` over binary digits.
    pub fn generalized_pr(ma: usize, mb: usize) -> Result<Self> {
        GFunction::from_fn(ma, mb, |x, y| (x & y).count_ones() % 2 == 1)
    }

    /// Bit `x·mB + y` of `code` is `G(x, y)`.
    pub fn from_code(ma: usize, mb: usize, code: u64) -> Result<Self> {
        GFunction::from_fn(ma, mb, |x, y| (code >> (x * mb + y)) & 1 == 1)
    }

    /// Whitespace-separated `0`/`1` rows, one line per `x`. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|t| match t {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    _ => Err(Error::Parse(format!("G entries must be 0 or 1, got {t:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        GFunction::new(rows)
    }

    pub fn ma(&self) -> usize {
        self.ma
    }

    pub fn mb(&self) -> usize {
        self.mb
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[x * self.mb + y]
    }

    pub fn column(&self, y: usize) -> Vec<bool> {
        (0..self.ma).map(|x| self.get(x, y)).collect()
    }

    /// Pairs `y < y'` whose columns are identical.
    pub fn duplicate_columns(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.mb {
            for y2 in y + 1..self.mb {
                if self.column(y) == self.column(y2) {
                    out.push((y, y2));
                }
            }
        }
        out
    }

    /// Pairs `y < y'` whose columns agree up to complementing one of them,
    /// i.e. whose conditional tables coincide after relabeling Bob's
    /// outputs at `y'`.
    pub fn equivalent_columns(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.mb {
            let c = self.column(y);
            for y2 in y + 1..self.mb {
                let d = self.column(y2);
                if c == d || c.iter().zip(&d).all(|(u, v)| u != v) {
                    out.push((y, y2));
                }
            }
        }
        out
    }

    pub fn to_distribution(&self) -> Distribution {
        let s = Scenario::binary(self.ma, self.mb).expect("G is at least 2x2");
        Distribution::from_fn(s, |x, y, a, b| {
            if ((a ^ b) == 1) == self.get(x, y) {
                half()
            } else {
                Rational::zero()
            }
        })
        .expect("entries are 0 or 1/2")
    }

    /// Recovers `G` from a table of the form `1/2 iff a ⊕ b = G(x, y)`.
    pub fn from_distribution(p: &Distribution) -> Option<Self> {
        let s = p.scenario();
        if s.na != 2 || s.nb != 2 {
            return None;
        }
        let h = half();
        let mut bits = Vec::with_capacity(s.ma * s.mb);
        for x in 0..s.ma {
            for y in 0..s.mb {
                let even = p.get(x, y, 0, 0) == &h && p.get(x, y, 1, 1) == &h;
                let odd = p.get(x, y, 0, 1) == &h && p.get(x, y, 1, 0) == &h;
                match (even, odd) {
                    (true, false) => bits.push(false),
                    (false, true) => bits.push(true),
                    _ => return None,
                }
            }
        }
        Some(GFunction { ma: s.ma, mb: s.mb, bits })
    }
}

impl GFunction {
    /// Canonical representative under output relabelings (complementing a
    /// row or column), input permutations and, for square `G`, swapping the
    /// parties. Equivalent boxes have equal detection thresholds.
    pub fn canonical(&self) -> GFunction {
        let mut best: Option<Vec<bool>> = None;
        let transposes: &[bool] = if self.ma == self.mb { &[false, true] } else { &[false] };
        let rows = permutations(self.ma);
        let cols = permutations(self.mb);
        for &t in transposes {
            let at = |x: usize, y: usize| if t { self.get(y, x) } else { self.get(x, y) };
            for sigma in &rows {
                for tau in &cols {
                    let g = |x: usize, y: usize| at(sigma[x], tau[y]);
                    // flips making row 0 and column 0 all zero
                    let bits: Vec<bool> = (0..self.ma)
                        .flat_map(|x| (0..self.mb).map(move |y| (x, y)))
                        .map(|(x, y)| g(x, y) ^ g(0, y) ^ g(x, 0) ^ g(0, 0))
                        .collect();
                    if best.as_ref().is_none_or(|b| bits < *b) {
                        best = Some(bits);
                    }
                }
            }
        }
        GFunction { ma: self.ma, mb: self.mb, bits: best.expect("at least one permutation") }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).expect("successor exists");
        p.swap(i, j);
        p[i + 1..].reverse();
    }
}

/// Distinct canonical forms among `gs`, each with its orbit size in `gs`,
/// in order of first appearance.
pub fn orbit_representatives(gs: &[GFunction]) -> Vec<(GFunction, usize)> {
    let mut out: Vec<(GFunction, usize)> = Vec::new();
    for g in gs {
        let c = g.canonical();
        match out.iter_mut().find(|(r, _)| *r == c) {
            Some((_, n)) => *n += 1,
            None => out.push((c, 1)),
        }
    }
    out
}

impl fmt::Display for GFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in 0..self.ma {
            let row: Vec<&str> = (0..self.mb).map(|y| if self.get(x, y) { "1" } else { "0" }).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

pub fn from_g_function(g: &GFunction) -> Distribution {
    g.to_distribution()
}

pub fn generalized_pr_box(ma: usize, mb: usize) -> Result<Distribution> {
    Ok(GFunction::generalized_pr(ma, mb)?.to_distribution())
}

/// Layout of a binary-output extremal box built from 2x2 blocks.
///
/// The last `h` Alice inputs and last `g` Bob inputs are deterministic
/// (output 0). The remaining `(mA-h) x (mB-g)` region uses `S` on its first
/// row and column and `core[x-1][y-1]` (`false` = S, `true` = A) elsewhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSpec {
    pub g: usize,
    pub h: usize,
    pub core: Vec<Vec<bool>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    S,
    A,
    K,
    L,
    M,
}

impl Block {
    /// `p(ab)` entries of the block, row `a`, column `b`.
    fn entries(self) -> [[Rational; 2]; 2] {
        let h = half;
        let z = Rational::zero;
        match self {
            Block::S => [[h(), z()], [z(), h()]],
            Block::A => [[z(), h()], [h(), z()]],
            Block::K => [[h(), h()], [z(), z()]],
            Block::L => [[h(), z()], [h(), z()]],
            Block::M => [[Rational::one(), z()], [z(), z()]],
        }
    }
}

impl BlockSpec {
    pub fn layout(&self, s: Scenario) -> Result<Vec<Vec<Block>>> {
        if s.na != 2 || s.nb != 2 {
            return Err(Error::Scenario("block layout needs binary outputs".into()));
        }
        if self.g > s.mb - 2 || self.h > s.ma - 2 {
            return Err(Error::Dimension(format!(
                "g = {} must be <= mB-2 = {} and h = {} <= mA-2 = {}",
                self.g,
                s.mb - 2,
                self.h,
                s.ma - 2
            )));
        }
        let rows = s.ma - 1 - self.h;
        let cols = s.mb - 1 - self.g;
        if self.core.len() != rows || self.core.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension(format!("core must be {rows}x{cols}")));
        }
        let (cr, cc) = (s.ma - self.h, s.mb - self.g);
        Ok((0..s.ma)
            .map(|x| {
                (0..s.mb)
                    .map(|y| match (x < cr, y < cc) {
                        (true, true) if x == 0 || y == 0 => Block::S,
                        (true, true) if self.core[x - 1][y - 1] => Block::A,
                        (true, true) => Block::S,
                        (true, false) => Block::L,
                        (false, true) => Block::K,
                        (false, false) => Block::M,
                    })
                    .collect()
            })
            .collect())
    }
}

pub fn block_extremal(s: Scenario, spec: &BlockSpec) -> Result<Distribution> {
    let layout = spec.layout(s)?;
    let blocks: Vec<Vec<[[Rational; 2]; 2]>> =
        layout.iter().map(|r| r.iter().map(|b| b.entries()).collect()).collect();
    Distribution::from_fn(s, |x, y, a, b| blocks[x][y][a][b].clone())
}

/// Rank of a rational matrix by Gaussian elimination.
pub(crate) fn rank(mut rows: Vec<Vec<Rational>>) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r][c].clone();
        let prow: Vec<(usize, Rational)> = (c..ncols)
            .filter(|&k| !rows[r][k].is_zero())
            .map(|k| (k, &rows[r][k] / &pivot))
            .collect();
        for i in r + 1..rows.len() {
            if rows[i][c].is_zero() {
                continue;
            }
            let f = rows[i][c].clone();
            for (k, v) in &prow {
                rows[i][*k] -= &f * v;
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}

/// Extremality in the no-signalling polytope by the tight-constraint rank test.
///
/// The entries equal to zero are fixed; `p` is a vertex iff normalization and
/// the no-signalling equalities pin down the remaining entries uniquely.
/// Tables failing either validator are not vertices.
pub fn is_vertex(p: &Distribution) -> bool {
    if p.validate().is_err() {
        return false;
    }
    let s = p.scenario();
    let free: Vec<usize> = (0..s.len()).filter(|&i| !p.as_slice()[i].is_zero()).collect();
    let mut col_of = vec![usize::MAX; s.len()];
    for (c, &i) in free.iter().enumerate() {
        col_of[i] = c;
    }
    let nfree = free.len();
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut push = |terms: &[(usize, i64)]| {
        let mut row = vec![Rational::zero(); nfree];
        let mut any = false;
        for &(i, sign) in terms {
            if col_of[i] != usize::MAX {
                row[col_of[i]] += Rational::from_integer(sign.into());
                any = true;
            }
        }
        if any {
            rows.push(row);
        }
    };
    for x in 0..s.ma {
        for y in 0..s.mb {
            let t: Vec<(usize, i64)> = (0..s.na)
                .flat_map(|a| (0..s.nb).map(move |b| (s.index(x, y, a, b), 1)))
                .collect();
            push(&t);
        }
    }
    for x in 0..s.ma {
        for a in 0..s.na {
            for y in 1..s.mb {
                let mut t: Vec<(usize, i64)> = (0..s.nb).map(|b| (s.index(x, y, a, b), 1)).collect();
                t.extend((0..s.nb).map(|b| (s.index(x, 0, a, b), -1)));
                push(&t);
            }
        }
    }
    for y in 0..s.mb {
        for b in 0..s.nb {
            for x in 1..s.ma {
                let mut t: Vec<(usize, i64)> = (0..s.na).map(|a| (s.index(x, y, a, b), 1)).collect();
                t.extend((0..s.na).map(|a| (s.index(0, y, a, b), -1)));
                push(&t);
            }
        }
    }
    rank(rows) == nfree
}

/// Every nonlocal G-function box of a binary scenario that is an NS vertex.
///
/// Candidates are the `2^(mA·mB)` G matrices in increasing code order; the
/// output keeps that order.
pub fn enumerate_binary_extremals(s: Scenario, cap: u128) -> Result<Vec<Distribution>> {
    if s.na != 2 || s.nb != 2 {
        return Err(Error::Scenario("enumeration needs binary outputs".into()));
    }
    let cells = s.ma * s.mb;
    if cells >= 64 {
        return Err(Error::CapExceeded { needed: u128::MAX, cap });
    }
    let count = 1u128 << cells;
    if count > cap {
        return Err(Error::CapExceeded { needed: count, cap });
    }
    let found: Vec<Option<Distribution>> = (0..count as u64)
        .into_par_iter()
        .map(|code| -> Result<Option<Distribution>> {
            let p = GFunction::from_code(s.ma, s.mb, code)?.to_distribution();
            if !is_vertex(&p) {
                return Ok(None);
            }
            let w = local_weight(&p)?.w;
            Ok((!w.is_one()).then_some(p))
        })
        .collect::<Result<_>>()?;
    let mut seen = HashSet::new();
    Ok(found.into_iter().flatten().filter(|p| seen.insert(p.clone())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::convex_combine;
    use crate::rational::rat;

    #[test]
    fn deterministic_counts_and_order() {
        let s = Scenario::binary(2, 2).unwrap();
        let all: Vec<_> = local_deterministic_vertices(s).collect();
        assert_eq!(all.len(), 16);
        for x in 0..2 {
            for y in 0..2 {
                assert!(all[0].get(x, y, 0, 0).is_one());
            }
        }
        let distinct: HashSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), 16);
        let s3 = Scenario::new(3, 3, 3, 3).unwrap();
        assert_eq!(local_deterministic_vertices(s3).count(), 729);
        for i in [0u128, 17, 728] {
            assert_eq!(DeterministicVertex::from_index(s3, i).index(s3), i);
        }
        // a_0 is the most significant digit
        assert_eq!(DeterministicVertex::from_index(s, 8).alice, vec![1, 0]);
    }

    #[test]
    fn g_function_boxes() {
        let zero = GFunction::from_fn(2, 2, |_, _| false).unwrap().to_distribution();
        for x in 0..2 {
            for y in 0..2 {
                assert_eq!(zero.get(x, y, 0, 0), &rat(1, 2));
                assert_eq!(zero.get(x, y, 1, 1), &rat(1, 2));
            }
        }
        let xy = GFunction::from_fn(2, 2, |x, y| x * y == 1).unwrap().to_distribution();
        let explicit = GFunction::parse("0 0\n0 1\n").unwrap().to_distribution();
        let pr = generalized_pr_box(2, 2).unwrap();
        assert_eq!(xy, pr);
        assert_eq!(explicit, pr);
        assert_eq!(pr.get(1, 1, 0, 0), &Rational::zero());
        assert_eq!(pr.get(1, 1, 0, 1), &rat(1, 2));
    }

    #[test]
    fn generalized_pr_digits() {
        let p3 = generalized_pr_box(3, 3).unwrap();
        assert_eq!(p3.get(2, 2, 0, 1), &rat(1, 2));
        assert_eq!(p3.get(2, 2, 0, 0), &Rational::zero());
        let p4 = generalized_pr_box(4, 4).unwrap();
        assert_eq!(p4.get(3, 3, 0, 0), &rat(1, 2));
        for p in [p3, p4, generalized_pr_box(3, 5).unwrap()] {
            p.validate().unwrap();
        }
    }

    #[test]
    fn g_parse_errors() {
        assert!(GFunction::parse("0 1\n1").is_err());
        assert!(GFunction::parse("0 2\n1 1").is_err());
        assert!(GFunction::parse("0 1").is_err());
        let g = GFunction::parse("# pr\n0 0\n0 1 # last\n").unwrap();
        assert_eq!(GFunction::parse(&g.to_string()).unwrap(), g);
    }

    #[test]
    fn g_recovered_from_table() {
        let g = GFunction::generalized_pr(3, 4).unwrap();
        assert_eq!(GFunction::from_distribution(&g.to_distribution()), Some(g));
        assert_eq!(GFunction::from_distribution(&Distribution::uniform(Scenario::binary(2, 2).unwrap())), None);
    }

    #[test]
    fn block_form_pr_box() {
        let s = Scenario::binary(2, 2).unwrap();
        let spec = BlockSpec { g: 0, h: 0, core: vec![vec![true]] };
        assert_eq!(block_extremal(s, &spec).unwrap(), generalized_pr_box(2, 2).unwrap());
    }

    #[test]
    fn block_form_appended_inputs() {
        let s = Scenario::binary(3, 3).unwrap();
        let spec = BlockSpec { g: 1, h: 1, core: vec![vec![true]] };
        let layout = spec.layout(s).unwrap();
        assert_eq!(layout[2][2], Block::M);
        assert_eq!(layout[2][0], Block::K);
        assert_eq!(layout[0][2], Block::L);
        assert_eq!(layout[1][1], Block::A);
        let p = block_extremal(s, &spec).unwrap();
        p.validate().unwrap();
        assert!(p.get(2, 2, 0, 0).is_one());
        assert!(is_vertex(&p));
    }

    #[test]
    fn block_spec_errors() {
        let s = Scenario::binary(3, 3).unwrap();
        assert!(block_extremal(s, &BlockSpec { g: 2, h: 0, core: vec![] }).is_err());
        assert!(block_extremal(s, &BlockSpec { g: 0, h: 0, core: vec![vec![true]] }).is_err());
        let s4 = Scenario::new(3, 3, 3, 2).unwrap();
        assert!(block_extremal(s4, &BlockSpec { g: 1, h: 1, core: vec![vec![true]] }).is_err());
    }

    #[test]
    fn all_s_block_is_the_correlated_local_box() {
        // half/half mixture of the all-0 and all-1 deterministic points
        let s = Scenario::binary(2, 2).unwrap();
        let p = block_extremal(s, &BlockSpec { g: 0, h: 0, core: vec![vec![false]] }).unwrap();
        let d0 = Distribution::deterministic(s, &[0, 0], &[0, 0]).unwrap();
        let d1 = Distribution::deterministic(s, &[1, 1], &[1, 1]).unwrap();
        assert_eq!(convex_combine(&[(rat(1, 2), d0), (rat(1, 2), d1)]).unwrap(), p);
        assert!(!is_vertex(&p));
        assert!(local_weight(&p).unwrap().w.is_one());
    }

    #[test]
    fn vertex_test() {
        let s = Scenario::binary(2, 2).unwrap();
        assert!(is_vertex(&generalized_pr_box(2, 2).unwrap()));
        assert!(!is_vertex(&Distribution::uniform(s)));
        assert!(!is_vertex(&Distribution::uniform(Scenario::new(2, 3, 3, 2).unwrap())));
        for d in local_deterministic_vertices(s) {
            assert!(is_vertex(&d));
        }
        let s3 = Scenario::new(2, 2, 3, 3).unwrap();
        assert!(local_deterministic_vertices(s3).all(|d| is_vertex(&d)));
    }

    #[test]
    fn midpoints_of_vertex_pairs_are_not_vertices() {
        let s = Scenario::binary(2, 2).unwrap();
        let mut verts: Vec<Distribution> = local_deterministic_vertices(s).collect();
        verts.extend(enumerate_binary_extremals(s, 1 << 20).unwrap());
        for i in 0..verts.len() {
            for j in i + 1..verts.len() {
                let mid = convex_combine(&[(rat(1, 2), verts[i].clone()), (rat(1, 2), verts[j].clone())]).unwrap();
                assert!(!is_vertex(&mid), "{i} {j}");
            }
        }
    }

    #[test]
    fn enumeration_two_by_two() {
        let s = Scenario::binary(2, 2).unwrap();
        let found = enumerate_binary_extremals(s, 16).unwrap();
        assert_eq!(found.len(), 8);
        assert_eq!(found.len() + local_deterministic_vertices(s).count(), 24);
        for p in &found {
            for x in 0..2 {
                for a in 0..2 {
                    assert_eq!(p.marginal_a(a, x).unwrap(), rat(1, 2));
                    assert_eq!(p.marginal_b(a, x).unwrap(), rat(1, 2));
                }
            }
        }
        assert!(matches!(
            enumerate_binary_extremals(s, 15),
            Err(Error::CapExceeded { needed: 16, cap: 15 })
        ));
    }

    #[test]
    fn enumeration_three_by_three_runs() {
        let s = Scenario::binary(3, 3).unwrap();
        let found = enumerate_binary_extremals(s, 1_000_000).unwrap();
        assert!(!found.is_empty());
        assert!(found.contains(&generalized_pr_box(3, 3).unwrap()));
    }

    #[test]
    fn pigeonhole_columns() {
        // three Alice inputs give four column classes up to complement
        for code in 0..(1u64 << 15) {
            let g = GFunction::from_code(3, 5, code).unwrap();
            assert!(!g.equivalent_columns().is_empty());
        }
        let distinct = GFunction::parse("0 0 0 0 1\n0 0 1 1 0\n0 1 0 1 0").unwrap();
        assert!(distinct.duplicate_columns().is_empty());
        assert_eq!(distinct.equivalent_columns(), vec![(3, 4)]);
    }

    #[test]
    fn rank_basics() {
        let m = vec![vec![rat(1, 1), rat(2, 1)], vec![rat(2, 1), rat(4, 1)], vec![rat(0, 1), rat(1, 3)]];
        assert_eq!(rank(m), 2);
        assert_eq!(rank(vec![vec![Rational::zero(); 3]; 2]), 0);
    }

    #[test]
    fn canonical_forms() {
        let pr = GFunction::generalized_pr(3, 3).unwrap();
        let flipped = GFunction::from_fn(3, 3, |x, y| pr.get(2 - x, (y + 1) % 3) ^ (y == 1) ^ (x == 0)).unwrap();
        assert_eq!(pr.canonical(), flipped.canonical());
        let transposed = GFunction::from_fn(3, 3, |x, y| pr.get(y, x)).unwrap();
        assert_eq!(pr.canonical(), transposed.canonical());
        let chsh = GFunction::generalized_pr(2, 2).unwrap();
        assert_eq!(chsh.canonical(), GFunction::from_code(2, 2, 0b1000).unwrap());
        assert_eq!(permutations(3).len(), 6);
    }

    #[test]
    fn three_three_orbits() {
        let pts = enumerate_binary_extremals(Scenario::binary(3, 3).unwrap(), 1 << 20).unwrap();
        let gs: Vec<GFunction> = pts.iter().map(|p| GFunction::from_distribution(p).unwrap()).collect();
        let orbits = orbit_representatives(&gs);
        assert_eq!(orbits.iter().map(|(_, n)| n).sum::<usize>(), 480);
        assert!(orbits.iter().any(|(g, _)| *g == GFunction::generalized_pr(3, 3).unwrap().canonical()));
    }
}
