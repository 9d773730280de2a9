//! Floating-point revised simplex used only to propose a starting basis for
//! the exact solver. Nothing it returns is trusted without exact checks.

pub(crate) type FloatColumn = Vec<(usize, f64)>;

const PRICE_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;

/// Small deterministic rhs perturbation that breaks degenerate ties.
fn perturbation(i: usize) -> f64 {
    1e-7 * (1.0 + ((i as u64).wrapping_mul(2654435761) % 1000) as f64 / 1000.0)
}

struct Dense {
    m: usize,
    binv: Vec<f64>,
}

impl Dense {
    /// Gauss-Jordan inverse of the basis matrix with partial pivoting.
    fn factor(m: usize, cols: &[FloatColumn], basis: &[usize]) -> Option<Dense> {
        let w = 2 * m;
        let mut a = vec![0.0; m * w];
        for (k, &j) in basis.iter().enumerate() {
            for &(r, v) in &cols[j] {
                a[r * w + k] = v;
            }
        }
        for i in 0..m {
            a[i * w + m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m).max_by(|&x, &y| a[x * w + c].abs().total_cmp(&a[y * w + c].abs()))?;
            if a[p * w + c].abs() < 1e-12 {
                return None;
            }
            if p != c {
                for k in 0..w {
                    a.swap(p * w + k, c * w + k);
                }
            }
            let inv = 1.0 / a[c * w + c];
            for k in 0..w {
                a[c * w + k] *= inv;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = a[r * w + c];
                if f == 0.0 {
                    continue;
                }
                for k in 0..w {
                    a[r * w + k] -= f * a[c * w + k];
                }
            }
        }
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m..(i + 1) * m].copy_from_slice(&a[i * w + m..(i + 1) * w]);
        }
        Some(Dense { m, binv })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.binv[i * self.m..(i + 1) * self.m]
    }
}

/// Runs Dantzig's rule from the feasible basis `start` and returns a basis
/// that is optimal up to tolerances with its row duals, or `None` if the
/// float solve fails.
pub(crate) fn optimal_basis(
    rhs: &[f64],
    cols: &[FloatColumn],
    cost: &[f64],
    start: &[usize],
) -> Option<(Vec<usize>, Vec<f64>)> {
    let m = rhs.len();
    let n = cols.len();
    let b: Vec<f64> = rhs.iter().enumerate().map(|(i, v)| v + perturbation(i)).collect();
    let mut basis = start.to_vec();
    let mut in_basis = vec![false; n];
    for &j in &basis {
        in_basis[j] = true;
    }
    let limit = 20 * (m + n) + 1000;
    let mut dense = Dense::factor(m, cols, &basis)?;
    let mut xb: Vec<f64> = (0..m).map(|i| dense.row(i).iter().zip(&b).map(|(x, y)| x * y).sum()).collect();
    for iter in 0..limit {
        if iter > 0 && iter % REFACTOR_EVERY == 0 {
            dense = Dense::factor(m, cols, &basis)?;
            xb = (0..m).map(|i| dense.row(i).iter().zip(&b).map(|(x, y)| x * y).sum()).collect();
        }
        let mut y = vec![0.0; m];
        for (i, &j) in basis.iter().enumerate() {
            let c = cost[j];
            if c != 0.0 {
                for (yk, bik) in y.iter_mut().zip(dense.row(i)) {
                    *yk += c * bik;
                }
            }
        }
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..n {
            if in_basis[j] {
                continue;
            }
            let d = cost[j] - cols[j].iter().map(|&(r, v)| y[r] * v).sum::<f64>();
            if d > PRICE_TOL && entering.is_none_or(|(_, bd)| d > bd) {
                entering = Some((j, d));
            }
        }
        let Some((j, _)) = entering else {
            return Some((basis, y));
        };
        let u: Vec<f64> = (0..m).map(|i| cols[j].iter().map(|&(r, v)| dense.binv[i * m + r] * v).sum()).collect();
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if u[i] <= PIVOT_TOL {
                continue;
            }
            let ratio = xb[i].max(0.0) / u[i];
            let better = match leave {
                None => true,
                Some((li, lr)) => ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && u[i] > u[li]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        let (r, _) = leave?;
        let inv = 1.0 / u[r];
        let prow: Vec<f64> = dense.row(r).iter().map(|v| v * inv).collect();
        let xr = xb[r] * inv;
        for i in 0..m {
            if i == r || u[i] == 0.0 {
                continue;
            }
            let f = u[i];
            for (k, pv) in prow.iter().enumerate() {
                dense.binv[i * m + k] -= f * pv;
            }
            xb[i] -= f * xr;
        }
        dense.binv[r * m..(r + 1) * m].copy_from_slice(&prow);
        xb[r] = xr;
        in_basis[basis[r]] = false;
        in_basis[j] = true;
        basis[r] = j;
    }
    None
}
