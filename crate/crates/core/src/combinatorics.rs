//! Colexicographic indexing of k-subsets and the permutation action on
//! subset-indexed vectors.
//!
//! Every lineup-indexed vector in this crate is laid out in colex order:
//! the subset `{c_0 < c_1 < ... < c_{k-1}}` sits at `sum_i C(c_i, i + 1)`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Binomial coefficient `C(n, r)`, zero when `r > n`.
pub fn binomial(n: usize, r: usize) -> usize {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// A player's position in the roster, `0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlayerId(pub usize);

/// A set of players stored as a strictly increasing list of ids.
///
/// Lineups are groups whose size equals the lineup size `k`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Group(Vec<usize>);

impl Group {
    /// Builds a group from arbitrary ids; sorts them and rejects duplicates
    /// and empty input.
    pub fn new(mut members: Vec<usize>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidGroup("group must not be empty".into()));
        }
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGroup(format!(
                "duplicate member in {members:?}"
            )));
        }
        Ok(Group(members))
    }

    pub fn from_players(players: &[PlayerId]) -> Result<Self> {
        Group::new(players.iter().map(|p| p.0).collect())
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, player: usize) -> bool {
        self.0.binary_search(&player).is_ok()
    }

    pub fn is_subset_of(&self, other: &Group) -> bool {
        self.0.iter().all(|m| other.contains(*m))
    }

    /// Bitmask with bit `i` set for every member `i`. Requires ids < 64.
    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0u64, |m, &i| m | (1u64 << i))
    }

    /// Members rendered with 1-based labels, e.g. `{1,5}`.
    pub fn one_based(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|m| (m + 1).to_string()).collect();
        format!("{{{}}}", parts.join(","))
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|m| m.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Position of a lineup in the colex ordering of all k-subsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LineupIndex(pub usize);

/// Colex rank of a k-subset of `0..n`.
pub fn rank_subset(subset: &Group, n: usize, k: usize) -> Result<LineupIndex> {
    if subset.len() != k {
        return Err(Error::InvalidGroup(format!(
            "expected a subset of size {k}, got {}",
            subset.len()
        )));
    }
    if let Some(&m) = subset.members().last() {
        if m >= n {
            return Err(Error::InvalidGroup(format!(
                "member {m} outside roster of size {n}"
            )));
        }
    }
    Ok(LineupIndex(rank_sorted(subset.members())))
}

/// Colex rank of an already-validated sorted slice.
#[inline]
pub(crate) fn rank_sorted(members: &[usize]) -> usize {
    members
        .iter()
        .enumerate()
        .map(|(i, &c)| binomial(c, i + 1))
        .sum()
}

/// Colex rank of a subset given as a bitmask.
#[inline]
pub(crate) fn rank_mask(mut mask: u64) -> usize {
    let mut rank = 0;
    let mut i = 1;
    while mask != 0 {
        let c = mask.trailing_zeros() as usize;
        rank += binomial(c, i);
        i += 1;
        mask &= mask - 1;
    }
    rank
}

/// Inverse of [`rank_subset`].
pub fn unrank_subset(index: LineupIndex, n: usize, k: usize) -> Result<Group> {
    let total = binomial(n, k);
    if index.0 >= total {
        return Err(Error::OutOfRange(format!(
            "lineup index {} outside 0..{total}",
            index.0
        )));
    }
    let mut members = vec![0; k];
    let mut rest = index.0;
    let mut upper = n;
    for slot in (0..k).rev() {
        // largest c < upper with C(c, slot + 1) <= rest
        let mut c = upper - 1;
        while binomial(c, slot + 1) > rest {
            c -= 1;
        }
        members[slot] = c;
        rest -= binomial(c, slot + 1);
        upper = c;
    }
    Ok(Group(members))
}

/// All k-subsets of `0..n` in colex order, as bitmasks.
pub(crate) fn all_masks(n: usize, k: usize) -> Vec<u64> {
    let total = binomial(n, k);
    let mut out = Vec::with_capacity(total);
    if k == 0 {
        out.push(0);
        return out;
    }
    // Gosper's hack enumerates masks with k bits in increasing numeric order,
    // which is colex order.
    let mut m: u64 = (1u64 << k) - 1;
    let limit: u64 = 1u64 << n;
    while m < limit {
        out.push(m);
        let c = m & m.wrapping_neg();
        let r = m + c;
        m = (((r ^ m) >> 2) / c) | r;
    }
    out
}

/// Indices of every k-subset that contains `group`, in increasing order.
pub fn supersets_of(group: &Group, n: usize, k: usize) -> Result<Vec<LineupIndex>> {
    if group.len() > k {
        return Err(Error::InvalidGroup(format!(
            "group of size {} exceeds lineup size {k}",
            group.len()
        )));
    }
    if group.members().iter().any(|&m| m >= n) {
        return Err(Error::InvalidGroup(format!(
            "{group} has a member outside 0..{n}"
        )));
    }
    let rest: Vec<usize> = (0..n).filter(|p| !group.contains(*p)).collect();
    let base = group.mask();
    let mut out: Vec<LineupIndex> = all_masks(rest.len(), k - group.len())
        .into_iter()
        .map(|sub| {
            let mut mask = base;
            let mut bits = sub;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                mask |= 1u64 << rest[b];
                bits &= bits - 1;
            }
            LineupIndex(rank_mask(mask))
        })
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// A bijection on `0..n`; `mapping[i]` is the image of player `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &m in &mapping {
            if m >= n || seen[m] {
                return Err(Error::InvalidPermutation(format!(
                    "{mapping:?} is not a bijection"
                )));
            }
            seen[m] = true;
        }
        Ok(Permutation { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            mapping: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn apply_to(&self, player: usize) -> usize {
        self.mapping[player]
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.mapping.len()];
        for (i, &m) in self.mapping.iter().enumerate() {
            inv[m] = i;
        }
        Permutation { mapping: inv }
    }

    /// The product `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        if self.len() != other.len() {
            return Err(Error::InvalidPermutation(
                "permutations of different degree".into(),
            ));
        }
        Ok(Permutation {
            mapping: other.mapping.iter().map(|&i| self.mapping[i]).collect(),
        })
    }

    /// Image of a subset given as a bitmask.
    pub(crate) fn image_mask(&self, mut mask: u64) -> u64 {
        let mut out = 0u64;
        while mask != 0 {
            let b = mask.trailing_zeros() as usize;
            out |= 1u64 << self.mapping[b];
            mask &= mask - 1;
        }
        out
    }
}

/// The left action `(π·v)(L) = v(π⁻¹L)` on a lineup-indexed vector.
pub fn apply_permutation(perm: &Permutation, v: &[f64], n: usize, k: usize) -> Result<Vec<f64>> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "permutation of degree {} on a roster of {n}",
            perm.len()
        )));
    }
    let total = binomial(n, k);
    if v.len() != total {
        return Err(Error::LengthMismatch {
            expected: total,
            actual: v.len(),
        });
    }
    let mut out = vec![0.0; total];
    for (idx, mask) in all_masks(n, k).into_iter().enumerate() {
        out[rank_mask(perm.image_mask(mask))] = v[idx];
    }
    Ok(out)
}
