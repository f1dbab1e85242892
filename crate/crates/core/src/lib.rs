//! Spectral analysis of lineup success functions.
//!
//! A team's success function assigns each k-player lineup of an n-player
//! roster its aggregate plus-minus. The Johnson graph J(n, k) splits that
//! function into orthogonal components of pure order 0 (mean), 1
//! (individuals), 2 (pairs) and so on up to full lineups. This crate builds
//! the success function from play-by-play data, performs the split, scores
//! player groups within each order and provides stability, mass and
//! regression diagnostics around it.

pub mod bootstrap;
pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod ingest;
pub mod johnson;
pub mod ridge;
pub mod spectral;

pub use bootstrap::{bootstrap_group_stats, pearson_r, resample_plays, BootstrapReport};
pub use combinatorics::{
    apply_permutation, binomial, rank_subset, supersets_of, unrank_subset, Group, LineupIndex,
    Permutation, PlayerId,
};
pub use error::{Error, Result};
pub use ingest::{
    build_stints, build_success_function, generate_synthetic_season, parse_play_csv, select_roster,
    stint_plus_minus, PlantedEffect, PlayRecord, Stint, SuccessFunction, SyntheticConfig,
};
pub use johnson::{JohnsonSpace, SpectralDecomposition};
pub use ridge::{cross_validate_lambda, fit_ridge, CrossValidation, DesignMatrix, RidgeFit};
pub use spectral::{
    group_contribution, group_indicator, mass_distribution, null_mass, permutation_null_mass,
    rank_groups, sclp, GroupContribution, MassDistribution, RankBy,
};
