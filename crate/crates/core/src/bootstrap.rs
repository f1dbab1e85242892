//! Bootstrapped seasons: resample plays with replacement, rebuild the
//! success function, and track how each group's contribution moves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::combinatorics::Group;
use crate::error::{Error, Result};
use crate::ingest::{build_stints, build_success_function, PlayRecord, SuccessFunction};
use crate::johnson::{JohnsonSpace, SpectralDecomposition};
use crate::spectral::group_contribution;

/// Per-group stability statistics over `B` bootstrapped seasons.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BootstrapReport {
    pub group: Group,
    pub actual_pm: f64,
    pub actual_poss: u64,
    pub pm_mean: f64,
    pub pm_sd: f64,
    pub poss_mean: f64,
    pub poss_sd: f64,
    /// One entry per trial; NaN where the group had fewer than 2 possessions.
    pub sclp_values: Vec<f64>,
    /// One entry per trial; NaN where the group had fewer than 2 possessions.
    pub pm_per_log_poss_values: Vec<f64>,
    pub frac_pm_negative: f64,
    pub frac_sclp_negative: f64,
    /// `None` when either series has no variance.
    pub pearson_r: Option<f64>,
    /// Set when the group never played in the actual season; the
    /// statistics are then NaN.
    pub flagged: bool,
}

/// Draws `plays.len()` plays uniformly with replacement, in draw order.
pub fn resample_plays(plays: &[PlayRecord], seed: u64) -> Result<Vec<PlayRecord>> {
    if plays.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot resample an empty season".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..plays.len())
        .map(|_| plays[rng.random_range(0..plays.len())].clone())
        .collect())
}

/// Sample Pearson correlation; `None` for fewer than two points, unequal
/// lengths or a constant series.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Orders plays by `(game_id, sequence)` so stints can be re-formed.
fn chronological(mut plays: Vec<PlayRecord>) -> Vec<PlayRecord> {
    plays.sort_by(|a, b| a.game_id.cmp(&b.game_id).then(a.sequence.cmp(&b.sequence)));
    plays
}

/// Everything computed for one bootstrapped season.
pub struct TrialOutcome {
    pub success_function: SuccessFunction,
    pub decomposition: SpectralDecomposition,
}

/// Runs trial `trial` of a bootstrap seeded with `seed`: resample, restore
/// chronological order, re-stint, aggregate and decompose.
///
/// `plays` must already be restricted to `roster`.
pub fn bootstrap_trial(
    plays: &[PlayRecord],
    roster: &[String],
    space: &JohnsonSpace,
    seed: u64,
    trial: u64,
) -> Result<TrialOutcome> {
    let sample = chronological(resample_plays(plays, seed.wrapping_add(trial))?);
    let stints = build_stints(&sample);
    let success_function = build_success_function(&stints, roster, space.k())?;
    let decomposition = space.decompose(&success_function.values)?;
    Ok(TrialOutcome {
        success_function,
        decomposition,
    })
}

struct GroupDraw {
    pm: f64,
    poss: u64,
    spectral: f64,
}

/// Bootstraps `trials` seasons from `plays` (already restricted to
/// `roster`) and summarizes each requested group.
pub fn bootstrap_group_stats(
    plays: &[PlayRecord],
    roster: &[String],
    k: usize,
    groups: &[Group],
    trials: usize,
    seed: u64,
) -> Result<Vec<BootstrapReport>> {
    if trials == 0 {
        return Err(Error::InvalidArgument(
            "need at least one bootstrap trial".into(),
        ));
    }
    if plays.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot bootstrap an empty season".into(),
        ));
    }
    let space = JohnsonSpace::new(roster.len(), k)?;
    let actual = build_success_function(&build_stints(&chronological(plays.to_vec())), roster, k)?;
    for g in groups {
        if g.len() > k || g.members().iter().any(|&m| m >= roster.len()) {
            return Err(Error::InvalidGroup(format!(
                "{g} does not fit J({},{k})",
                roster.len()
            )));
        }
    }

    let draws: Vec<Vec<GroupDraw>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let outcome = bootstrap_trial(plays, roster, &space, seed, t)?;
            groups
                .iter()
                .map(|g| {
                    Ok(GroupDraw {
                        pm: outcome.success_function.group_plus_minus(g)?,
                        poss: outcome.success_function.group_possessions(g)?,
                        spectral: group_contribution(&outcome.decomposition, g)?,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    groups
        .iter()
        .enumerate()
        .map(|(gi, group)| {
            let actual_poss = actual.group_possessions(group)?;
            let actual_pm = actual.group_plus_minus(group)?;
            let column: Vec<&GroupDraw> = draws.iter().map(|d| &d[gi]).collect();
            let per_log = |x: f64, poss: u64| {
                if poss >= 2 {
                    x / (poss as f64).ln()
                } else {
                    f64::NAN
                }
            };
            let pms: Vec<f64> = column.iter().map(|d| d.pm).collect();
            let poss: Vec<f64> = column.iter().map(|d| d.poss as f64).collect();
            let sclp_values: Vec<f64> =
                column.iter().map(|d| per_log(d.spectral, d.poss)).collect();
            let pm_per_log_poss_values: Vec<f64> =
                column.iter().map(|d| per_log(d.pm, d.poss)).collect();

            let flagged = actual_poss == 0;
            let (pm_mean, pm_sd) = mean_sd(&pms);
            let (poss_mean, poss_sd) = mean_sd(&poss);
            let b = trials as f64;
            let frac_pm_negative = pms.iter().filter(|&&x| x < 0.0).count() as f64 / b;
            let defined: Vec<(f64, f64)> = sclp_values
                .iter()
                .zip(&pm_per_log_poss_values)
                .filter(|(s, p)| s.is_finite() && p.is_finite())
                .map(|(s, p)| (*s, *p))
                .collect();
            let frac_sclp_negative = if defined.is_empty() {
                f64::NAN
            } else {
                defined.iter().filter(|(s, _)| *s < 0.0).count() as f64 / defined.len() as f64
            };
            let (xs, ys): (Vec<f64>, Vec<f64>) = defined.into_iter().unzip();
            let pearson = pearson_r(&xs, &ys);

            let nan_if = |x: f64| if flagged { f64::NAN } else { x };
            Ok(BootstrapReport {
                group: group.clone(),
                actual_pm,
                actual_poss,
                pm_mean: nan_if(pm_mean),
                pm_sd: nan_if(pm_sd),
                poss_mean: nan_if(poss_mean),
                poss_sd: nan_if(poss_sd),
                sclp_values,
                pm_per_log_poss_values,
                frac_pm_negative: nan_if(frac_pm_negative),
                frac_sclp_negative: nan_if(frac_sclp_negative),
                pearson_r: if flagged { None } else { pearson },
                flagged,
            })
        })
        .collect()
}
