mod common;

use std::collections::BTreeMap;

use lineup_spectral::ingest::{
    build_stints, build_success_function, generate_synthetic_season, parse_play_csv, select_roster,
    stint_plus_minus, write_play_csv, PlantedEffect, PlayRecord, Stint, SuccessFunction,
    SyntheticConfig,
};
use lineup_spectral::{unrank_subset, Group, LineupIndex};
use proptest::prelude::*;

fn season(seed: u64) -> Vec<PlayRecord> {
    let mut cfg = SyntheticConfig::new(15, 5, 6000, seed);
    cfg.extra_players = 4;
    cfg.extra_rate = 0.25;
    generate_synthetic_season(&cfg).unwrap()
}

#[test]
fn roster_recovers_generator_top_players() {
    for seed in 0..3 {
        let plays = season(seed);
        assert!(plays
            .iter()
            .any(|p| p.team_players.iter().any(|x| x.starts_with('X'))));
        let sel = select_roster(&plays, 15);
        let expected: Vec<String> = (0..15).map(SyntheticConfig::player_name).collect();
        assert_eq!(sel.roster, expected);
        assert!(sel.dropped_plays > 0);
        assert_eq!(sel.plays.len() + sel.dropped_plays, plays.len());
        assert!(sel
            .plays
            .iter()
            .all(|p| p.team_players.iter().all(|x| x.starts_with('P'))));
    }
}

#[test]
fn group_possessions_match_direct_counts() {
    let plays = season(1);
    let (sf, sel) = SuccessFunction::from_plays(&plays, 15, 5).unwrap();
    for names in [
        vec!["P01"],
        vec!["P02", "P05"],
        vec!["P01", "P03", "P04"],
        vec!["P01", "P02", "P03", "P04", "P05"],
    ] {
        let direct: u64 = sel
            .plays
            .iter()
            .filter(|p| names.iter().all(|n| p.team_players.iter().any(|x| x == n)))
            .map(|p| p.poss_for as u64)
            .sum();
        let g = sf.group_of(&names).unwrap();
        assert_eq!(sf.group_possessions(&g).unwrap(), direct, "{names:?}");
    }
}

#[test]
fn group_possessions_shrink_under_inclusion() {
    let plays = season(2);
    let (sf, _) = SuccessFunction::from_plays(&plays, 15, 5).unwrap();
    for idx in (0..3003).step_by(37) {
        let lineup = unrank_subset(LineupIndex(idx), 15, 5).unwrap();
        let members = lineup.members().to_vec();
        let mut prev = u64::MAX;
        for size in 1..=5 {
            let g = Group::new(members[..size].to_vec()).unwrap();
            let poss = sf.group_possessions(&g).unwrap();
            assert!(poss <= prev);
            prev = poss;
        }
        assert_eq!(prev, sf.lineup_possessions[idx]);
    }
}

#[test]
fn total_plus_minus_is_conserved() {
    let plays = season(3);
    let (sf, sel) = SuccessFunction::from_plays(&plays, 15, 5).unwrap();
    let stints = build_stints(&sel.plays);
    let direct: f64 = stints.iter().filter_map(stint_plus_minus).sum();
    assert!((sf.total_plus_minus() - direct).abs() < 1e-9 * direct.abs().max(1.0));
    let skipped = stints
        .iter()
        .filter(|s| stint_plus_minus(s).is_none())
        .count();
    assert_eq!(skipped, sf.skipped_stints);
}

#[test]
fn toy_individual_plus_minus() {
    let sf = build_success_function(&common::toy_stints(), &common::toy_roster(), 2).unwrap();
    for (p, expected) in common::TOY_RAW_PM.iter().enumerate() {
        let g = Group::new(vec![p]).unwrap();
        assert_eq!(sf.group_plus_minus(&g).unwrap(), *expected);
    }
    assert_eq!(
        sf.total_plus_minus(),
        common::TOY.iter().map(|(_, v)| v).sum::<f64>()
    );
}

#[test]
fn empty_season_is_zero_function() {
    let sf = build_success_function(&[], &common::toy_roster(), 2).unwrap();
    assert!(sf.values.iter().all(|&v| v == 0.0));
    assert_eq!(
        sf.group_possessions(&Group::new(vec![0]).unwrap()).unwrap(),
        0
    );
}

#[test]
fn zero_effect_generator_is_unbiased() {
    let mut cfg = SyntheticConfig::new(10, 5, 60_000, 17);
    cfg.usage_decay = 1.0;
    let plays = generate_synthetic_season(&cfg).unwrap();
    let stints = build_stints(&plays);
    let (mut pm, mut poss) = (0.0, 0.0);
    for s in &stints {
        if let Some(x) = stint_plus_minus(s) {
            pm += x;
            poss += s.poss_for as f64;
        }
    }
    // net points per possession; scoring sd per possession is about 1.3
    let per_poss = pm / poss;
    assert!(per_poss.abs() < 0.05, "{per_poss}");
}

#[test]
fn planted_pair_outscores_rest() {
    let mut cfg = SyntheticConfig::new(10, 5, 30_000, 4);
    cfg.usage_decay = 1.0;
    cfg.planted = vec![PlantedEffect {
        members: vec![0, 1],
        effect: 1.0,
    }];
    let plays = generate_synthetic_season(&cfg).unwrap();
    let (sf, _) = SuccessFunction::from_plays(&plays, 10, 5).unwrap();
    let with = sf.group_of(&["P01", "P02"]).unwrap();
    let rate = sf.group_plus_minus(&with).unwrap() / sf.group_possessions(&with).unwrap() as f64;
    assert!((rate - 1.0).abs() < 0.25, "{rate}");
}

#[test]
fn csv_round_trip_of_synthetic_season() {
    let plays = season(5);
    let mut buf = Vec::new();
    write_play_csv(&plays, &mut buf).unwrap();
    assert_eq!(parse_play_csv(buf.as_slice(), 5).unwrap(), plays);
}

/// Splits a stint into one-possession plays, scoring on the first play of
/// each side.
fn split(s: &Stint) -> Vec<PlayRecord> {
    let mut out = Vec::new();
    let mut seq = 0;
    let mut push = |pf: u32, pa: u32, possf: u32, possa: u32| {
        out.push(PlayRecord {
            game_id: s.game_id.clone(),
            sequence: seq,
            team_players: s.lineup.clone(),
            opp_players: s.opp_lineup.clone(),
            pts_for: pf,
            pts_against: pa,
            poss_for: possf,
            poss_against: possa,
        });
        seq += 1;
    };
    for i in 0..s.poss_for {
        push(if i == 0 { s.pts_for } else { 0 }, 0, 1, 0);
    }
    for i in 0..s.poss_against {
        push(0, if i == 0 { s.pts_against } else { 0 }, 0, 1);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_then_merge_recovers_stints(
        raw in prop::collection::vec((0usize..3, 0u32..20, 0u32..20, 1u32..6, 1u32..6), 1..12)
    ) {
        let lineups = [["a", "b"], ["a", "c"], ["b", "c"]];
        let mut stints: Vec<Stint> = Vec::new();
        for (g, (l, pf, pa, possf, possa)) in raw.into_iter().enumerate() {
            stints.push(Stint {
                game_id: format!("g{g:03}"),
                lineup: lineups[l].iter().map(|s| s.to_string()).collect(),
                opp_lineup: vec!["x".into(), "y".into()],
                pts_for: pf,
                pts_against: pa,
                poss_for: possf,
                poss_against: possa,
            });
        }
        let plays: Vec<PlayRecord> = stints.iter().flat_map(split).collect();
        prop_assert_eq!(build_stints(&plays), stints);
    }

    #[test]
    fn possessions_monotone_on_random_seasons(seed in 0u64..500) {
        let cfg = SyntheticConfig::new(8, 3, 400, seed);
        let plays = generate_synthetic_season(&cfg).unwrap();
        let (sf, _) = SuccessFunction::from_plays(&plays, 8, 3).unwrap();
        let mut per_player = BTreeMap::new();
        for i in 0..sf.n {
            per_player.insert(i, sf.group_possessions(&Group::new(vec![i]).unwrap()).unwrap());
        }
        for a in 0..sf.n {
            for b in a + 1..sf.n {
                let pair = sf.group_possessions(&Group::new(vec![a, b]).unwrap()).unwrap();
                prop_assert!(pair <= per_player[&a].min(per_player[&b]));
            }
        }
        let total: u64 = sf.lineup_possessions.iter().sum();
        prop_assert_eq!(per_player.values().sum::<u64>(), total * 3);
    }
}
