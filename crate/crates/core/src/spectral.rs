//! Group contributions (Mallows' method), possession-normalized scores and
//! squared-norm mass diagnostics on a decomposed success function.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::{binomial, supersets_of, unrank_subset, Group, LineupIndex};
use crate::error::{Error, Result};
use crate::johnson::{JohnsonSpace, SpectralDecomposition};

/// One row of a contribution table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupContribution {
    pub group: Group,
    pub order: usize,
    pub spectral_value: f64,
    /// Undefined when the group played fewer than two possessions.
    pub sclp: Option<f64>,
    pub plus_minus: f64,
    pub possessions: u64,
}

impl GroupContribution {
    /// Raw plus-minus per log possession.
    pub fn pm_per_log_poss(&self) -> Option<f64> {
        sclp(self.plus_minus, self.possessions)
    }
}

/// Fraction of `‖f‖²` carried by each effect space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassDistribution {
    pub fractions: Vec<f64>,
}

/// Which score orders a contribution table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankBy {
    Sclp,
    SpectralValue,
}

fn check_group(space: &JohnsonSpace, group: &Group) -> Result<()> {
    if group.len() > space.k() {
        return Err(Error::InvalidGroup(format!(
            "group of size {} exceeds lineup size {}",
            group.len(),
            space.k()
        )));
    }
    Ok(())
}

/// `φ_g`: 1 on lineups containing `group`, 0 elsewhere.
pub fn group_indicator(space: &JohnsonSpace, group: &Group) -> Result<Vec<f64>> {
    check_group(space, group)?;
    let mut out = vec![0.0; space.num_lineups()];
    for LineupIndex(i) in supersets_of(group, space.n(), space.k())? {
        out[i] = 1.0;
    }
    Ok(out)
}

/// Sum of `values` over every lineup containing `group`.
pub(crate) fn sum_over_supersets(
    space: &JohnsonSpace,
    values: &[f64],
    group: &Group,
) -> Result<f64> {
    Ok(supersets_of(group, space.n(), space.k())?
        .into_iter()
        .map(|LineupIndex(i)| values[i])
        .sum())
}

/// Pure-order contribution of `group`: `Σ_{L ⊇ g} f_{|g|}(L)`.
///
/// This is the unnormalized dot product of `φ_g` with `f_{|g|}`, which
/// equals `⟨P_{|g|} φ_g, f_{|g|}⟩` because the projector is symmetric and
/// idempotent.
pub fn group_contribution(decomp: &SpectralDecomposition, group: &Group) -> Result<f64> {
    let space = decomp.space();
    check_group(space, group)?;
    let component = &decomp.components()[group.len()];
    sum_over_supersets(space, component, group)
}

/// Spectral contribution per log possession.
pub fn sclp(spectral_value: f64, possessions: u64) -> Option<f64> {
    (possessions >= 2).then(|| spectral_value / (possessions as f64).ln())
}

pub fn mass_distribution(decomp: &SpectralDecomposition) -> Result<MassDistribution> {
    let norms = decomp.squared_norms();
    let total: f64 = norms.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok(MassDistribution {
        fractions: norms.into_iter().map(|x| x / total).collect(),
    })
}

/// Expected mass of a random unit vector: `dim V_j / C(n, k)`.
pub fn null_mass(space: &JohnsonSpace) -> MassDistribution {
    let total = space.num_lineups() as f64;
    MassDistribution {
        fractions: space.dims().iter().map(|&d| d as f64 / total).collect(),
    }
}

/// Mean mass distribution of `f` after shuffling its values over lineups.
///
/// Trial `t` draws its shuffle from a generator seeded with `seed + t`, so
/// results do not depend on how trials are scheduled.
pub fn permutation_null_mass(
    space: &JohnsonSpace,
    f: &[f64],
    trials: usize,
    seed: u64,
) -> Result<MassDistribution> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if f.len() != space.num_lineups() {
        return Err(Error::LengthMismatch {
            expected: space.num_lineups(),
            actual: f.len(),
        });
    }
    if f.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroFunction);
    }
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
            let mut shuffled = f.to_vec();
            shuffled.shuffle(&mut rng);
            let d = space.decompose(&shuffled)?;
            Ok(mass_distribution(&d)?.fractions)
        })
        .collect::<Result<_>>()?;
    let mut mean = vec![0.0; space.k() + 1];
    for fr in &per_trial {
        for (m, x) in mean.iter_mut().zip(fr) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= trials as f64;
    }
    Ok(MassDistribution { fractions: mean })
}

/// Builds the contribution table for every group of `order` that played at
/// least `min_possessions`, sorted best first.
///
/// `lineup_possessions` is lineup-indexed. Under [`RankBy::Sclp`] groups
/// with undefined SCLP are dropped. Ties fall back to possessions
/// (descending) and then to the member list.
pub fn rank_groups(
    decomp: &SpectralDecomposition,
    lineup_possessions: &[u64],
    order: usize,
    min_possessions: u64,
    rank_by: RankBy,
) -> Result<Vec<GroupContribution>> {
    let space = decomp.space();
    if order == 0 || order > space.k() {
        return Err(Error::OutOfRange(format!(
            "order {order} outside 1..={}",
            space.k()
        )));
    }
    if lineup_possessions.len() != space.num_lineups() {
        return Err(Error::LengthMismatch {
            expected: space.num_lineups(),
            actual: lineup_possessions.len(),
        });
    }
    let f = decomp.reconstruct();
    let component = &decomp.components()[order];
    let count = binomial(space.n(), order);
    let mut rows: Vec<GroupContribution> = (0..count)
        .into_par_iter()
        .filter_map(|idx| {
            let group = unrank_subset(LineupIndex(idx), space.n(), order).ok()?;
            let lineups = supersets_of(&group, space.n(), space.k()).ok()?;
            let possessions: u64 = lineups.iter().map(|l| lineup_possessions[l.0]).sum();
            if possessions < min_possessions {
                return None;
            }
            let spectral_value: f64 = lineups.iter().map(|l| component[l.0]).sum();
            let plus_minus: f64 = lineups.iter().map(|l| f[l.0]).sum();
            let row = GroupContribution {
                order,
                spectral_value,
                sclp: sclp(spectral_value, possessions),
                plus_minus,
                possessions,
                group,
            };
            match rank_by {
                RankBy::Sclp if row.sclp.is_none() => None,
                _ => Some(row),
            }
        })
        .collect();
    let key = |r: &GroupContribution| match rank_by {
        RankBy::Sclp => r.sclp.unwrap_or(f64::NEG_INFINITY),
        RankBy::SpectralValue => r.spectral_value,
    };
    rows.sort_by(|a, b| {
        key(b)
            .partial_cmp(&key(a))
            .unwrap_or(Ordering::Equal)
            .then(b.possessions.cmp(&a.possessions))
            .then_with(|| a.group.cmp(&b.group))
    });
    Ok(rows)
}
