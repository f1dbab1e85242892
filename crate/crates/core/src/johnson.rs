//! The Johnson graph J(n, k) and the orthogonal splitting of lineup
//! functions into its k + 1 eigenspaces.
//!
//! For k ≤ n/2 the adjacency operator A of J(n, k) has exactly k + 1
//! distinct eigenvalues `λ_j = (k - j)(n - k - j) - j`, and the λ_j
//! eigenspace is the space V_j of pure order-j effects. Projection onto V_j
//! is the Lagrange interpolation polynomial
//!
//! ```text
//! P_j = Π_{i ≠ j} (A - λ_i I) / (λ_j - λ_i)
//! ```
//!
//! evaluated with k sparse applications of A, so no eigenbasis is ever
//! stored.

use std::sync::Arc;

use rayon::prelude::*;

use crate::combinatorics::{all_masks, binomial, rank_mask};
use crate::error::{Error, Result};

/// Upper bound on the cached neighbor table (entries).
const MAX_NEIGHBOR_ENTRIES: usize = 64 << 20;

/// Operator context for J(n, k): eigenvalues, eigenspace dimensions and a
/// cached neighbor table. Cloning is cheap.
#[derive(Clone, Debug)]
pub struct JohnsonSpace {
    n: usize,
    k: usize,
    num_lineups: usize,
    eigenvalues: Vec<f64>,
    dims: Vec<usize>,
    masks: Arc<[u64]>,
    neighbors: Arc<[u32]>,
}

/// Closed-form eigenvalue of the order-`j` eigenspace.
fn johnson_eigenvalue(n: usize, k: usize, j: usize) -> f64 {
    ((k - j) * (n - k - j)) as f64 - j as f64
}

impl JohnsonSpace {
    /// Builds J(n, k). Requires `1 <= k <= n - k` so all k + 1 eigenvalues
    /// are distinct.
    pub fn new(n: usize, k: usize) -> Result<Self> {
        let unsupported = |reason: &str| Error::UnsupportedSpace {
            n,
            k,
            reason: reason.to_string(),
        };
        if k == 0 {
            return Err(unsupported("lineup size must be at least 1"));
        }
        if k > n.saturating_sub(k) {
            return Err(unsupported("requires k <= n - k"));
        }
        if n > 63 {
            return Err(unsupported("roster larger than 63 players"));
        }
        let num_lineups = binomial(n, k);
        let degree = k * (n - k);
        if num_lineups.saturating_mul(degree) > MAX_NEIGHBOR_ENTRIES {
            return Err(unsupported("neighbor table too large"));
        }

        let eigenvalues = (0..=k).map(|j| johnson_eigenvalue(n, k, j)).collect();
        let dims = (0..=k)
            .map(|j| {
                if j == 0 {
                    1
                } else {
                    binomial(n, j) - binomial(n, j - 1)
                }
            })
            .collect();

        let masks: Arc<[u64]> = all_masks(n, k).into();
        let full = (1u64 << n) - 1;
        let neighbors: Vec<u32> = masks
            .par_iter()
            .flat_map_iter(|&mask| {
                let mut row = Vec::with_capacity(degree);
                let mut ins = mask;
                while ins != 0 {
                    let i = ins & ins.wrapping_neg();
                    let mut outs = full & !mask;
                    while outs != 0 {
                        let o = outs & outs.wrapping_neg();
                        row.push(rank_mask((mask ^ i) | o) as u32);
                        outs &= outs - 1;
                    }
                    ins &= ins - 1;
                }
                row
            })
            .collect();

        Ok(JohnsonSpace {
            n,
            k,
            num_lineups,
            eigenvalues,
            dims,
            masks,
            neighbors: neighbors.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_lineups(&self) -> usize {
        self.num_lineups
    }

    /// Eigenvalues λ_0 > λ_1 > ... > λ_k.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `dims[j] = dim V_j`.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Vertex degree `k(n - k)`.
    pub fn degree(&self) -> usize {
        self.k * (self.n - self.k)
    }

    /// Lineup bitmasks in colex order.
    pub fn lineup_masks(&self) -> &[u64] {
        &self.masks
    }

    /// Indices of the lineups sharing exactly k - 1 players with `lineup`.
    pub fn neighbors(&self, lineup: usize) -> &[u32] {
        let d = self.degree();
        &self.neighbors[lineup * d..(lineup + 1) * d]
    }

    pub fn eigenvalue_of_order(&self, j: usize) -> Result<f64> {
        self.eigenvalues
            .get(j)
            .copied()
            .ok_or_else(|| Error::OutOfRange(format!("order {j} outside 0..={}", self.k)))
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.num_lineups {
            return Err(Error::LengthMismatch {
                expected: self.num_lineups,
                actual: v.len(),
            });
        }
        Ok(())
    }

    fn check_order(&self, j: usize) -> Result<()> {
        if j > self.k {
            return Err(Error::OutOfRange(format!(
                "order {j} outside 0..={}",
                self.k
            )));
        }
        Ok(())
    }

    /// `out[L] = Σ_{L' ~ L} v[L']` over Johnson-graph neighbors.
    pub fn adjacency_apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let mut out = vec![0.0; self.num_lineups];
        self.adjacency_into(v, &mut out);
        Ok(out)
    }

    fn adjacency_into(&self, v: &[f64], out: &mut [f64]) {
        let d = self.degree();
        for (row, o) in self.neighbors.chunks_exact(d).zip(out.iter_mut()) {
            *o = row.iter().map(|&i| v[i as usize]).sum();
        }
    }

    /// Orthogonal projection of `v` onto V_j.
    pub fn project_onto_order(&self, v: &[f64], j: usize) -> Result<Vec<f64>> {
        self.check_len(v)?;
        self.check_order(j)?;
        Ok(self.project_unchecked(v, j))
    }

    fn project_unchecked(&self, v: &[f64], j: usize) -> Vec<f64> {
        let lj = self.eigenvalues[j];
        let mut cur = v.to_vec();
        let mut next = vec![0.0; v.len()];
        for (i, &li) in self.eigenvalues.iter().enumerate() {
            if i == j {
                continue;
            }
            self.adjacency_into(&cur, &mut next);
            let scale = 1.0 / (lj - li);
            for (nx, &c) in next.iter_mut().zip(cur.iter()) {
                *nx = (*nx - li * c) * scale;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Splits `v` into its k + 1 pure-order components.
    pub fn decompose(&self, v: &[f64]) -> Result<SpectralDecomposition> {
        self.check_len(v)?;
        let components = (0..=self.k)
            .into_par_iter()
            .map(|j| self.project_unchecked(v, j))
            .collect();
        Ok(SpectralDecomposition {
            components,
            space: self.clone(),
        })
    }
}

/// The components `f_0, ..., f_k` of a lineup function, `f = Σ_j f_j`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    components: Vec<Vec<f64>>,
    space: JohnsonSpace,
}

impl SpectralDecomposition {
    pub fn space(&self) -> &JohnsonSpace {
        &self.space
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// Component `f_j`.
    pub fn component(&self, j: usize) -> Option<&[f64]> {
        self.components.get(j).map(Vec::as_slice)
    }

    /// `Σ_j f_j`, which recovers the decomposed function.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.space.num_lineups()];
        for c in &self.components {
            for (o, x) in out.iter_mut().zip(c) {
                *o += x;
            }
        }
        out
    }

    /// Squared Euclidean norm of each component.
    pub fn squared_norms(&self) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().map(|x| x * x).sum())
            .collect()
    }
}
