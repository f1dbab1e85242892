//! Ridge regression of lineup plus-minus on group indicator variables.
//!
//! Every group of 1..=k players gets a binary column that is 1 on the
//! lineups containing it. With p ≫ N the fit is done in dual form: the
//! centered N×N Gram matrix is eigendecomposed once and any penalty is then
//! a diagonal rescaling, which also makes cross-validation over a grid cheap.

use faer::{Mat, Side};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{all_masks, binomial, rank_mask, unrank_subset, Group, LineupIndex};
use crate::error::{Error, Result};

/// Sparse binary design matrix with an optional unpenalized intercept.
#[derive(Clone, Debug)]
pub struct DesignMatrix {
    num_cols: usize,
    /// Sorted column indices of the ones in each row.
    rows: Vec<Vec<u32>>,
    /// Group behind each column, when the matrix came from a roster.
    column_groups: Vec<Group>,
    intercept: bool,
}

fn design_offsets(n: usize, k: usize) -> Vec<usize> {
    let mut offsets = vec![0; k + 2];
    for order in 1..=k {
        offsets[order + 1] = offsets[order] + binomial(n, order);
    }
    offsets
}

impl DesignMatrix {
    /// Intercept plus one indicator column per group of sizes 1..=k, one
    /// row per lineup of J(n, k) in colex order.
    pub fn for_roster(n: usize, k: usize) -> Result<Self> {
        Self::for_lineups(n, k, &(0..binomial(n, k)).collect::<Vec<_>>())
    }

    /// Same columns as [`DesignMatrix::for_roster`], restricted to the
    /// given lineup rows.
    pub fn for_lineups(n: usize, k: usize, lineups: &[usize]) -> Result<Self> {
        if n > 20 {
            return Err(Error::InvalidArgument(format!(
                "design for n = {n} is too large (max 20)"
            )));
        }
        if k == 0 || k > n - k {
            return Err(Error::UnsupportedSpace {
                n,
                k,
                reason: "requires 1 <= k <= n - k".into(),
            });
        }
        let offsets = design_offsets(n, k);
        let masks = all_masks(n, k);
        let mut rows = Vec::with_capacity(lineups.len());
        for &l in lineups {
            let lineup = *masks.get(l).ok_or_else(|| {
                Error::OutOfRange(format!("lineup {l} outside 0..{}", masks.len()))
            })?;
            let members: Vec<u64> = (0..n)
                .filter(|i| lineup >> i & 1 == 1)
                .map(|i| 1u64 << i)
                .collect();
            let mut cols: Vec<u32> = (1u32..(1 << k))
                .map(|sel| {
                    let sub = members
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| sel >> b & 1 == 1)
                        .fold(0u64, |m, (_, bit)| m | bit);
                    (offsets[sub.count_ones() as usize] + rank_mask(sub)) as u32
                })
                .collect();
            cols.sort_unstable();
            rows.push(cols);
        }
        let column_groups = (1..=k)
            .flat_map(|order| {
                (0..binomial(n, order)).map(move |i| unrank_subset(LineupIndex(i), n, order))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DesignMatrix {
            num_cols: offsets[k + 1],
            rows,
            column_groups,
            intercept: true,
        })
    }

    /// Arbitrary dense 0/1 design, for small hand-built systems.
    pub fn from_binary_rows(rows: &[Vec<u8>], intercept: bool) -> Result<Self> {
        let num_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_cols) {
            return Err(Error::InvalidArgument("ragged design rows".into()));
        }
        let rows = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &x)| x != 0)
                    .map(|(i, _)| i as u32)
                    .collect()
            })
            .collect();
        Ok(DesignMatrix {
            num_cols,
            rows,
            column_groups: Vec::new(),
            intercept,
        })
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Number of non-intercept columns `p`.
    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    pub fn column_groups(&self) -> &[Group] {
        &self.column_groups
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.rows[r]
    }

    /// Dense copy of the non-intercept block.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut dense = vec![0.0; self.num_cols];
                for &c in r {
                    dense[c as usize] = 1.0;
                }
                dense
            })
            .collect()
    }

    /// Number of ones in each column.
    pub fn column_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.num_cols];
        for r in &self.rows {
            for &c in r {
                sums[c as usize] += 1;
            }
        }
        sums
    }

    /// Inner product of two indicator columns.
    pub fn column_dot(&self, a: usize, b: usize) -> usize {
        self.rows
            .iter()
            .filter(|r| {
                r.binary_search(&(a as u32)).is_ok() && r.binary_search(&(b as u32)).is_ok()
            })
            .count()
    }

    /// Column index range of the order-`order` block.
    pub fn block(&self, order: usize) -> std::ops::Range<usize> {
        let start = self.column_groups.iter().position(|g| g.len() == order);
        match start {
            Some(s) => {
                let len = self.column_groups[s..]
                    .iter()
                    .take_while(|g| g.len() == order)
                    .count();
                s..s + len
            }
            None => 0..0,
        }
    }

    /// Count of column pairs, one from each block, with a nonzero inner
    /// product. Zero would mean the two blocks are orthogonal.
    pub fn cross_block_overlaps(&self, order_a: usize, order_b: usize) -> usize {
        let (ra, rb) = (self.block(order_a), self.block(order_b));
        ra.into_par_iter()
            .map(|a| rb.clone().filter(|&b| self.column_dot(a, b) > 0).count())
            .sum()
    }

    fn select_rows(&self, idx: &[usize]) -> DesignMatrix {
        DesignMatrix {
            num_cols: self.num_cols,
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            column_groups: self.column_groups.clone(),
            intercept: self.intercept,
        }
    }

    fn column_means(&self) -> Vec<f64> {
        let n = self.num_rows() as f64;
        self.column_sums()
            .into_iter()
            .map(|s| s as f64 / n)
            .collect()
    }

    fn gram(&self) -> Vec<Vec<f64>> {
        let rows = &self.rows;
        rows.par_iter()
            .map(|a| {
                rows.iter()
                    .map(|b| sorted_intersection(a, b) as f64)
                    .collect()
            })
            .collect()
    }
}

fn sorted_intersection(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RidgeFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub lambda: f64,
}

impl RidgeFit {
    pub fn predict(&self, x: &DesignMatrix) -> Vec<f64> {
        (0..x.num_rows())
            .map(|r| {
                self.intercept
                    + x.row(r)
                        .iter()
                        .map(|&c| self.coefficients[c as usize])
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn coefficient_norm(&self) -> f64 {
        self.coefficients.iter().map(|b| b * b).sum::<f64>().sqrt()
    }
}

/// Eigendecomposition of the (centered) Gram matrix of one design, reusable
/// across penalties and responses.
pub struct DualSolver<'a> {
    design: &'a DesignMatrix,
    means: Vec<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<f64>,
}

impl<'a> DualSolver<'a> {
    pub fn new(design: &'a DesignMatrix) -> Result<Self> {
        let n = design.num_rows();
        if n == 0 {
            return Err(Error::InvalidArgument("design has no rows".into()));
        }
        let mut gram = design.gram();
        let means = if design.intercept {
            design.column_means()
        } else {
            vec![0.0; design.num_cols]
        };
        if design.intercept {
            // H K H with H = I - 11ᵀ/N
            let row_means: Vec<f64> = gram
                .iter()
                .map(|r| r.iter().sum::<f64>() / n as f64)
                .collect();
            let grand = row_means.iter().sum::<f64>() / n as f64;
            for (r, row) in gram.iter_mut().enumerate() {
                for (s, v) in row.iter_mut().enumerate() {
                    *v += grand - row_means[r] - row_means[s];
                }
            }
        }
        let k = Mat::<f64>::from_fn(n, n, |i, j| gram[i][j]);
        let eig = k
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Numerical(format!("Gram eigendecomposition failed: {e:?}")))?;
        let s = eig.S().column_vector();
        let eigenvalues = (0..n).map(|i| s[i]).collect();
        Ok(DualSolver {
            design,
            means,
            eigenvalues,
            eigenvectors: eig.U().to_owned(),
        })
    }

    /// Ridge fit for response `y` at penalty `lambda`. `lambda = 0` gives
    /// the minimum-norm least-squares solution.
    pub fn solve(&self, y: &[f64], lambda: f64) -> Result<RidgeFit> {
        let n = self.design.num_rows();
        if y.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: y.len(),
            });
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "penalty must be finite and >= 0, got {lambda}"
            )));
        }
        let y_mean = if self.design.intercept {
            y.iter().sum::<f64>() / n as f64
        } else {
            0.0
        };
        let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

        let u = &self.eigenvectors;
        let top = self.eigenvalues.iter().fold(0.0f64, |m, &t| m.max(t.abs()));
        let cutoff = top * n as f64 * f64::EPSILON * 16.0;
        // α = U diag(w) Uᵀ y_c
        let weights: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|j| {
                let theta = self.eigenvalues[j].max(0.0);
                let w = if lambda == 0.0 {
                    if theta > cutoff {
                        1.0 / theta
                    } else {
                        0.0
                    }
                } else {
                    1.0 / (theta + lambda)
                };
                if w == 0.0 {
                    return 0.0;
                }
                w * (0..n).map(|i| u[(i, j)] * yc[i]).sum::<f64>()
            })
            .collect();
        let alpha: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| u[(i, j)] * weights[j]).sum())
            .collect();

        // β = X_cᵀ α = Xᵀα − μ Σα
        let alpha_sum: f64 = alpha.iter().sum();
        let mut beta: Vec<f64> = self.means.iter().map(|m| -m * alpha_sum).collect();
        for (r, a) in alpha.iter().enumerate() {
            for &c in self.design.row(r) {
                beta[c as usize] += a;
            }
        }
        let intercept = if self.design.intercept {
            y_mean
                - self
                    .means
                    .iter()
                    .zip(&beta)
                    .map(|(m, b)| m * b)
                    .sum::<f64>()
        } else {
            0.0
        };
        Ok(RidgeFit {
            intercept,
            coefficients: beta,
            lambda,
        })
    }
}

/// Minimizer of `‖y − Xβ‖² + λ Σ β_i²`, intercept unpenalized.
pub fn fit_ridge(x: &DesignMatrix, y: &[f64], lambda: f64) -> Result<RidgeFit> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "penalty must be >= 0, got {lambda}"
        )));
    }
    DualSolver::new(x)?.solve(y, lambda)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossValidation {
    pub best_lambda: f64,
    /// `(lambda, mean held-out squared error)` in grid order.
    pub cv_errors: Vec<(f64, f64)>,
}

/// K-fold cross-validation over `lambda_grid`. Rows are shuffled with
/// `seed` and cut into contiguous folds; the lowest mean held-out error
/// wins and near-ties go to the larger penalty.
pub fn cross_validate_lambda(
    x: &DesignMatrix,
    y: &[f64],
    lambda_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CrossValidation> {
    let n = x.num_rows();
    if lambda_grid.is_empty() {
        return Err(Error::InvalidArgument("empty penalty grid".into()));
    }
    if lambda_grid.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(Error::InvalidArgument(
            "penalties must be finite and >= 0".into(),
        ));
    }
    if folds < 2 || folds > n {
        return Err(Error::InvalidArgument(format!(
            "need 2 <= folds <= {n}, got {folds}"
        )));
    }
    if y.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut fold_errors = vec![0.0; lambda_grid.len()];
    for f in 0..folds {
        let (lo, hi) = (f * n / folds, (f + 1) * n / folds);
        let test_idx = &order[lo..hi];
        let train_idx: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
        let train = x.select_rows(&train_idx);
        let test = x.select_rows(test_idx);
        let y_train: Vec<f64> = train_idx.iter().map(|&i| y[i]).collect();
        let solver = DualSolver::new(&train)?;
        for (slot, &lambda) in fold_errors.iter_mut().zip(lambda_grid) {
            let fit = solver.solve(&y_train, lambda)?;
            let pred = fit.predict(&test);
            let mse = test_idx
                .iter()
                .zip(&pred)
                .map(|(&i, p)| (y[i] - p).powi(2))
                .sum::<f64>()
                / test_idx.len() as f64;
            *slot += mse / folds as f64;
        }
    }

    let best_err = fold_errors.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = best_err.abs() * 1e-10;
    let best_lambda = lambda_grid
        .iter()
        .zip(&fold_errors)
        .filter(|(_, &e)| e <= best_err + tol)
        .map(|(&l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(CrossValidation {
        best_lambda,
        cv_errors: lambda_grid.iter().copied().zip(fold_errors).collect(),
    })
}

/// `(group, order, coefficient)` rows, ascending by order and descending by
/// coefficient within an order.
pub fn coefficient_table(x: &DesignMatrix, fit: &RidgeFit) -> Vec<(Group, usize, f64)> {
    let mut rows: Vec<(Group, usize, f64)> = x
        .column_groups()
        .iter()
        .zip(&fit.coefficients)
        .map(|(g, &b)| (g.clone(), g.len(), b))
        .collect();
    rows.sort_by(|a, b| {
        a.1.cmp(&b.1)
            .then(b.2.partial_cmp(&a.2).unwrap_or(std::cmp::Ordering::Equal))
            .then_with(|| a.0.cmp(&b.0))
    });
    rows
}
