#![allow(dead_code)]

use lineup_spectral::ridge::DesignMatrix;
use lineup_spectral::{Group, JohnsonSpace, Stint};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Toy success function, 1-based pairs with their values.
pub const TOY: [((usize, usize), f64); 10] = [
    ((1, 2), 22.0),
    ((1, 3), 18.0),
    ((1, 4), 3.0),
    ((1, 5), 58.0),
    ((2, 3), 93.0),
    ((2, 4), 35.0),
    ((2, 5), 26.0),
    ((3, 4), 84.0),
    ((3, 5), 25.0),
    ((4, 5), 2.0),
];

/// Reference f_1 and f_2 columns, in the same pair order as `TOY`.
pub const TOY_F1: [f64; 10] = [
    -5.27, 9.40, -22.60, -26.93, 34.40, 2.40, -1.93, 17.07, 12.73, -19.27,
];
pub const TOY_F2: [f64; 10] = [
    -9.33, -28.00, -11.00, 48.33, 22.00, -4.00, -8.67, 30.33, -24.33, -15.33,
];

/// Reference individual spectral values for players 1..=5.
pub const TOY_INDIVIDUAL_SPEC: [f64; 5] = [-45.4, 29.6, 73.6, -22.4, -35.4];
/// Reference pair spectral values, same order as `TOY`.
pub const TOY_PAIR_SPEC: [f64; 10] = [
    -9.3, -28.0, -11.0, 48.3, 22.0, -4.0, -8.7, 30.3, -24.3, -24.0,
];
/// Reference individual raw plus-minus for players 1..=5.
pub const TOY_RAW_PM: [f64; 5] = [101.0, 176.0, 220.0, 124.0, 111.0];

pub fn pair(i: usize, j: usize) -> Group {
    Group::new(vec![i - 1, j - 1]).unwrap()
}

/// Colex position of a 1-based pair by counting the k-subsets that
/// precede it: masks with two bits in increasing numeric order.
pub fn colex_position(n: usize, k: usize, members: &[usize]) -> usize {
    let target: u64 = members.iter().fold(0, |m, &i| m | 1 << i);
    (0u64..(1 << n))
        .filter(|m| m.count_ones() as usize == k)
        .position(|m| m == target)
        .unwrap()
}

pub fn toy_vector() -> Vec<f64> {
    let mut v = vec![0.0; 10];
    for ((i, j), val) in TOY {
        v[colex_position(5, 2, &[i - 1, j - 1])] = val;
    }
    v
}

/// Ten stints, one per lineup, each realizing that lineup's toy value.
pub fn toy_stints() -> Vec<Stint> {
    TOY.iter()
        .enumerate()
        .map(|(s, ((i, j), val))| Stint {
            game_id: format!("toy{s}"),
            lineup: vec![i.to_string(), j.to_string()],
            opp_lineup: vec!["a".into(), "b".into()],
            pts_for: *val as u32 + 10,
            pts_against: 10,
            poss_for: 1,
            poss_against: 1,
        })
        .collect()
}

pub fn toy_roster() -> Vec<String> {
    (1..=5).map(|i| i.to_string()).collect()
}

pub fn random_vector(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Brute-force adjacency matrix of J(n, k): lineups in numeric mask order,
/// adjacent when they share k - 1 players.
pub fn dense_adjacency(n: usize, k: usize) -> DMatrix<f64> {
    let masks: Vec<u64> = (0u64..(1 << n))
        .filter(|m| m.count_ones() as usize == k)
        .collect();
    let size = masks.len();
    DMatrix::from_fn(size, size, |a, b| {
        if (masks[a] & masks[b]).count_ones() as usize == k - 1 {
            1.0
        } else {
            0.0
        }
    })
}

/// Eigenspace projectors of the dense adjacency, ordered by decreasing
/// eigenvalue, with the distinct eigenvalues found.
pub fn dense_projectors(n: usize, k: usize) -> (Vec<f64>, Vec<DMatrix<f64>>) {
    let a = dense_adjacency(n, k);
    let size = a.nrows();
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].partial_cmp(&eig.eigenvalues[x]).unwrap());
    let mut values: Vec<f64> = Vec::new();
    let mut projectors: Vec<DMatrix<f64>> = Vec::new();
    for i in order {
        let lam = eig.eigenvalues[i];
        let u = eig.eigenvectors.column(i);
        let outer = &u * u.transpose();
        match values.last() {
            Some(&last) if (last - lam).abs() < 1e-6 => {
                *projectors.last_mut().unwrap() += outer;
            }
            _ => {
                values.push(lam);
                projectors.push(outer);
            }
        }
    }
    (values, projectors)
}

pub fn space(n: usize, k: usize) -> JohnsonSpace {
    JohnsonSpace::new(n, k).unwrap()
}

/// The toy season as a play CSV: per lineup, one scoring play for and one
/// 10-point play against, both in the same game so they form one stint.
pub fn toy_play_csv() -> String {
    let mut s = String::from(
        "game_id,sequence,team_players,opp_players,pts_for,pts_against,poss_for,poss_against\n",
    );
    for (g, ((i, j), val)) in TOY.iter().enumerate() {
        s.push_str(&format!(
            "toy{g},0,{i};{j},a;b,{},0,1,0\n",
            *val as u32 + 10
        ));
        s.push_str(&format!("toy{g},1,{i};{j},a;b,0,10,0,1\n"));
    }
    s
}

/// Centered primal closed form: β = (XcᵀXc + λI)⁻¹ Xcᵀ yc.
pub fn primal_ridge(x: &DesignMatrix, y: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let dense = x.to_dense();
    let (n, p) = (dense.len(), x.num_cols());
    let mut m = DMatrix::from_fn(n, p, |r, c| dense[r][c]);
    let mut yv = DVector::from_column_slice(y);
    let col_means: Vec<f64> = (0..p).map(|c| m.column(c).mean()).collect();
    let y_mean = yv.mean();
    if x.has_intercept() {
        for c in 0..p {
            m.column_mut(c).add_scalar_mut(-col_means[c]);
        }
        yv.add_scalar_mut(-y_mean);
    }
    let lhs = m.transpose() * &m + DMatrix::identity(p, p) * lambda;
    let beta = lhs
        .cholesky()
        .expect("positive definite")
        .solve(&(m.transpose() * yv));
    let intercept = if x.has_intercept() {
        y_mean - (0..p).map(|c| col_means[c] * beta[c]).sum::<f64>()
    } else {
        0.0
    };
    (intercept, beta.iter().copied().collect())
}
