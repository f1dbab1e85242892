//! Play-by-play ingestion: CSV parsing, stint aggregation, roster selection
//! and construction of the lineup success function.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    binomial, rank_subset, supersets_of, unrank_subset, Group, LineupIndex,
};
use crate::error::{Error, Result, RowError};

/// Column names of the play CSV, in file order.
pub const PLAY_COLUMNS: [&str; 8] = [
    "game_id",
    "sequence",
    "team_players",
    "opp_players",
    "pts_for",
    "pts_against",
    "poss_for",
    "poss_against",
];

/// One possession-level play. Player lists are kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayRecord {
    pub game_id: String,
    pub sequence: u64,
    pub team_players: Vec<String>,
    pub opp_players: Vec<String>,
    pub pts_for: u32,
    pub pts_against: u32,
    pub poss_for: u32,
    pub poss_against: u32,
}

/// A maximal run of plays with no substitution on either side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Stint {
    pub game_id: String,
    pub lineup: Vec<String>,
    pub opp_lineup: Vec<String>,
    pub pts_for: u32,
    pub pts_against: u32,
    pub poss_for: u32,
    pub poss_against: u32,
}

fn split_players(field: &str) -> Vec<String> {
    let mut names: Vec<String> = field
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    names.sort();
    names
}

fn parse_row(
    rec: &csv::StringRecord,
    cols: &[usize; 8],
    lineup_size: usize,
) -> std::result::Result<PlayRecord, String> {
    let field = |i: usize| rec.get(cols[i]).unwrap_or("").trim();
    let num = |i: usize| -> std::result::Result<u64, String> {
        field(i).parse::<u64>().map_err(|_| {
            format!(
                "`{}` is not a non-negative integer: `{}`",
                PLAY_COLUMNS[i],
                field(i)
            )
        })
    };
    let team_players = split_players(field(2));
    let opp_players = split_players(field(3));
    for (name, side) in [
        ("team_players", &team_players),
        ("opp_players", &opp_players),
    ] {
        if side.len() != lineup_size {
            return Err(format!(
                "{name} has {} players, expected {lineup_size}",
                side.len()
            ));
        }
        if side.windows(2).any(|w| w[0] == w[1]) {
            return Err(format!("{name} lists a player twice"));
        }
    }
    let poss_for = num(6)?;
    let poss_against = num(7)?;
    if poss_for > 1 || poss_against > 1 {
        return Err("possession flags must be 0 or 1".into());
    }
    if poss_for + poss_against == 0 {
        return Err("play carries no possession".into());
    }
    Ok(PlayRecord {
        game_id: field(0).to_string(),
        sequence: num(1)?,
        team_players,
        opp_players,
        pts_for: num(4)? as u32,
        pts_against: num(5)? as u32,
        poss_for: poss_for as u32,
        poss_against: poss_against as u32,
    })
}

/// Parses a play CSV with the [`PLAY_COLUMNS`] header.
///
/// A missing column fails immediately. Malformed rows are collected and
/// returned together as [`Error::MalformedRows`].
pub fn parse_play_csv<R: Read>(source: R, lineup_size: usize) -> Result<Vec<PlayRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let mut cols = [0usize; 8];
    for (slot, name) in cols.iter_mut().zip(PLAY_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let mut plays = Vec::new();
    let mut errors = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&rec, &cols, lineup_size) {
            Ok(p) => plays.push(p),
            Err(message) => errors.push(RowError { line, message }),
        }
    }
    if errors.is_empty() {
        Ok(plays)
    } else {
        Err(Error::MalformedRows(errors))
    }
}

pub fn write_play_csv<W: Write>(plays: &[PlayRecord], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(PLAY_COLUMNS)?;
    for p in plays {
        w.write_record([
            p.game_id.clone(),
            p.sequence.to_string(),
            p.team_players.join(";"),
            p.opp_players.join(";"),
            p.pts_for.to_string(),
            p.pts_against.to_string(),
            p.poss_for.to_string(),
            p.poss_against.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Merges consecutive plays with identical game and lineups.
///
/// Expects plays ordered by `(game_id, sequence)`; a lineup that returns
/// later starts a new stint.
pub fn build_stints(plays: &[PlayRecord]) -> Vec<Stint> {
    let mut stints: Vec<Stint> = Vec::new();
    for p in plays {
        match stints.last_mut() {
            Some(s)
                if s.game_id == p.game_id
                    && s.lineup == p.team_players
                    && s.opp_lineup == p.opp_players =>
            {
                s.pts_for += p.pts_for;
                s.pts_against += p.pts_against;
                s.poss_for += p.poss_for;
                s.poss_against += p.poss_against;
            }
            _ => stints.push(Stint {
                game_id: p.game_id.clone(),
                lineup: p.team_players.clone(),
                opp_lineup: p.opp_players.clone(),
                pts_for: p.pts_for,
                pts_against: p.pts_against,
                poss_for: p.poss_for,
                poss_against: p.poss_against,
            }),
        }
    }
    stints
}

/// `(pts_for/poss_for − pts_against/poss_against) · poss_for`, or `None`
/// when either side has no possessions.
pub fn stint_plus_minus(stint: &Stint) -> Option<f64> {
    if stint.poss_for == 0 || stint.poss_against == 0 {
        return None;
    }
    let rate_for = stint.pts_for as f64 / stint.poss_for as f64;
    let rate_against = stint.pts_against as f64 / stint.poss_against as f64;
    Some((rate_for - rate_against) * stint.poss_for as f64)
}

/// The opponent's view of a stint.
pub fn flip_stint(stint: &Stint) -> Stint {
    Stint {
        game_id: stint.game_id.clone(),
        lineup: stint.opp_lineup.clone(),
        opp_lineup: stint.lineup.clone(),
        pts_for: stint.pts_against,
        pts_against: stint.pts_for,
        poss_for: stint.poss_against,
        poss_against: stint.poss_for,
    }
}

/// Result of restricting a season to its most-used players.
#[derive(Clone, Debug)]
pub struct RosterSelection {
    /// Selected names, sorted ascending; a name's position is its player id.
    pub roster: Vec<String>,
    /// Plays whose team side is entirely on the roster, in input order.
    pub plays: Vec<PlayRecord>,
    pub dropped_plays: usize,
}

/// Possessions on the floor (both ends) per team player.
pub fn player_possessions(plays: &[PlayRecord]) -> BTreeMap<String, u64> {
    let mut usage: BTreeMap<String, u64> = BTreeMap::new();
    for p in plays {
        for name in &p.team_players {
            *usage.entry(name.clone()).or_default() += (p.poss_for + p.poss_against) as u64;
        }
    }
    usage
}

/// Keeps the `max_players` team players with the most possessions on the
/// floor (ties by name) and drops plays involving anyone else. With fewer
/// distinct players than `max_players`, everyone is kept.
pub fn select_roster(plays: &[PlayRecord], max_players: usize) -> RosterSelection {
    let usage = player_possessions(plays);
    let mut ranked: Vec<(&String, &u64)> = usage.iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    let mut roster: Vec<String> = ranked
        .into_iter()
        .take(max_players)
        .map(|(name, _)| name.clone())
        .collect();
    roster.sort();
    let kept: Vec<PlayRecord> = plays
        .iter()
        .filter(|p| {
            p.team_players
                .iter()
                .all(|name| roster.binary_search(name).is_ok())
        })
        .cloned()
        .collect();
    RosterSelection {
        dropped_plays: plays.len() - kept.len(),
        roster,
        plays: kept,
    }
}

/// Aggregate plus-minus and possessions for every lineup of the roster.
#[derive(Clone, Debug, PartialEq)]
pub struct SuccessFunction {
    pub n: usize,
    pub k: usize,
    /// Lineup-indexed aggregate plus-minus (colex order).
    pub values: Vec<f64>,
    /// Lineup-indexed team possessions.
    pub lineup_possessions: Vec<u64>,
    pub roster: Vec<String>,
    /// Stints with zero possessions on one side; counted in possessions but
    /// contribute nothing to `values`.
    pub skipped_stints: usize,
}

/// Sums stint plus-minus and team possessions per lineup.
pub fn build_success_function(
    stints: &[Stint],
    roster: &[String],
    k: usize,
) -> Result<SuccessFunction> {
    let n = roster.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "lineup size {k} does not fit a roster of {n}"
        )));
    }
    let ids: HashMap<&str, usize> = roster
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let total = binomial(n, k);
    let mut values = vec![0.0; total];
    let mut lineup_possessions = vec![0u64; total];
    let mut skipped_stints = 0;
    for s in stints {
        let members = s
            .lineup
            .iter()
            .map(|name| {
                ids.get(name.as_str())
                    .copied()
                    .ok_or_else(|| Error::UnknownPlayer(name.clone()))
            })
            .collect::<Result<Vec<usize>>>()?;
        let group = Group::new(members)?;
        let idx = rank_subset(&group, n, k)?.0;
        lineup_possessions[idx] += s.poss_for as u64;
        match stint_plus_minus(s) {
            Some(pm) => values[idx] += pm,
            None => skipped_stints += 1,
        }
    }
    Ok(SuccessFunction {
        n,
        k,
        values,
        lineup_possessions,
        roster: roster.to_vec(),
        skipped_stints,
    })
}

impl SuccessFunction {
    /// Runs roster selection, stint aggregation and lineup accumulation.
    pub fn from_plays(
        plays: &[PlayRecord],
        max_players: usize,
        k: usize,
    ) -> Result<(Self, RosterSelection)> {
        let selection = select_roster(plays, max_players);
        let stints = build_stints(&selection.plays);
        let sf = build_success_function(&stints, &selection.roster, k)?;
        Ok((sf, selection))
    }

    pub fn player_id(&self, name: &str) -> Option<usize> {
        self.roster.iter().position(|r| r == name)
    }

    /// Group from player names.
    pub fn group_of(&self, names: &[&str]) -> Result<Group> {
        let ids = names
            .iter()
            .map(|n| {
                self.player_id(n)
                    .ok_or_else(|| Error::UnknownPlayer(n.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Group::new(ids)
    }

    /// Semicolon-joined member names.
    pub fn group_label(&self, group: &Group) -> String {
        group
            .members()
            .iter()
            .map(|&m| self.roster[m].as_str())
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn total_plus_minus(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Team possessions summed over lineups containing `group`.
    pub fn group_possessions(&self, group: &Group) -> Result<u64> {
        Ok(supersets_of(group, self.n, self.k)?
            .into_iter()
            .map(|LineupIndex(i)| self.lineup_possessions[i])
            .sum())
    }

    /// Raw plus-minus of `group`: Σ values over lineups containing it.
    pub fn group_plus_minus(&self, group: &Group) -> Result<f64> {
        Ok(supersets_of(group, self.n, self.k)?
            .into_iter()
            .map(|LineupIndex(i)| self.values[i])
            .sum())
    }

    /// Writes `lineup,pm,possessions`, one row per lineup in colex order.
    pub fn write_csv<W: Write>(&self, sink: W, fmt_num: impl Fn(f64) -> String) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["lineup", "pm", "possessions"])?;
        for (i, (&pm, &poss)) in self.values.iter().zip(&self.lineup_possessions).enumerate() {
            let lineup = unrank_subset(LineupIndex(i), self.n, self.k)?;
            w.write_record([self.group_label(&lineup), fmt_num(pm), poss.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A group effect planted into a synthetic season, in net points per
/// team possession whenever the whole group is on the floor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedEffect {
    pub members: Vec<usize>,
    pub effect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n: usize,
    pub k: usize,
    pub num_plays: usize,
    pub planted: Vec<PlantedEffect>,
    pub seed: u64,
    /// Player `i` is picked with weight `usage_decay^i`; 1.0 is uniform.
    pub usage_decay: f64,
    /// Bench players outside the top `n`, used rarely.
    pub extra_players: usize,
    /// Per-stint probability that one slot goes to a bench player.
    pub extra_rate: f64,
    /// Plays per stint are drawn uniformly from `2..=max_stint_plays`.
    pub max_stint_plays: usize,
    pub plays_per_game: usize,
}

impl SyntheticConfig {
    pub fn new(n: usize, k: usize, num_plays: usize, seed: u64) -> Self {
        SyntheticConfig {
            n,
            k,
            num_plays,
            planted: Vec::new(),
            seed,
            usage_decay: 0.88,
            extra_players: 0,
            extra_rate: 0.0,
            max_stint_plays: 16,
            plays_per_game: 200,
        }
    }

    pub fn player_name(i: usize) -> String {
        format!("P{:02}", i + 1)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("synthetic config: {m}")));
        if self.k == 0 || self.k > self.n {
            return bad("need 1 <= k <= n");
        }
        if self.num_plays == 0 {
            return bad("num_plays must be positive");
        }
        if !(self.usage_decay > 0.0 && self.usage_decay <= 1.0) {
            return bad("usage_decay must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.extra_rate) {
            return bad("extra_rate must be in [0, 1]");
        }
        if self.extra_rate > 0.0 && self.extra_players == 0 {
            return bad("extra_rate set without extra players");
        }
        if self.max_stint_plays < 2 || self.plays_per_game == 0 {
            return bad("stints need at least 2 plays and games at least 1");
        }
        for p in &self.planted {
            if p.members.is_empty()
                || p.members.len() > self.k
                || p.members.iter().any(|&m| m >= self.n)
            {
                return bad("planted group outside the roster or larger than a lineup");
            }
            if !p.effect.is_finite() {
                return bad("planted effect must be finite");
            }
        }
        Ok(())
    }
}

const POINTS_PER_POSSESSION: f64 = 1.05;
const POINTS_PER_SCORE: f64 = 2.3;

fn score<R: Rng>(rng: &mut R, p: f64) -> u32 {
    if rng.random::<f64>() < p.clamp(0.02, 0.98) {
        if rng.random::<f64>() < 0.3 {
            3
        } else {
            2
        }
    } else {
        0
    }
}

/// Deterministic synthetic season. Lineups are drawn with usage skew and
/// each possession's scoring is shifted by the planted effects of every
/// planted group on the floor.
pub fn generate_synthetic_season(config: &SyntheticConfig) -> Result<Vec<PlayRecord>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let weights: Vec<f64> = (0..config.n)
        .map(|i| config.usage_decay.powi(i as i32))
        .collect();
    let planted: Vec<(u64, f64)> = config
        .planted
        .iter()
        .map(|p| (p.members.iter().fold(0u64, |m, &i| m | 1 << i), p.effect))
        .collect();
    let opponents: Vec<String> = (0..config.n.max(config.k))
        .map(|i| format!("O{:02}", i + 1))
        .collect();
    let base = POINTS_PER_POSSESSION / POINTS_PER_SCORE;

    let mut plays = Vec::with_capacity(config.num_plays);
    let mut game = 0usize;
    let mut in_game = 0usize;
    let mut sequence = 0u64;
    while plays.len() < config.num_plays {
        let mut slots: Vec<usize> =
            rand::seq::index::sample_weighted(&mut rng, config.n, |i| weights[i], config.k)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .into_iter()
                .collect();
        let mut names: Vec<String> = slots
            .iter()
            .map(|&i| SyntheticConfig::player_name(i))
            .collect();
        if config.extra_rate > 0.0 && rng.random::<f64>() < config.extra_rate {
            let slot = rng.random_range(0..config.k);
            slots.remove(slot);
            names[slot] = format!("X{:02}", rng.random_range(0..config.extra_players) + 1);
        }
        names.sort();
        let mask = slots.iter().fold(0u64, |m, &i| m | 1 << i);
        let effect: f64 = planted
            .iter()
            .filter(|(g, _)| g & mask == *g)
            .map(|(_, e)| e)
            .sum();
        let shift = effect / 2.0 / POINTS_PER_SCORE;
        let mut opp: Vec<String> = opponents
            .choose_multiple(&mut rng, config.k)
            .cloned()
            .collect();
        opp.sort();

        let length = rng.random_range(2..=config.max_stint_plays);
        let mut ours = rng.random::<bool>();
        for _ in 0..length {
            if plays.len() == config.num_plays {
                break;
            }
            if in_game == config.plays_per_game {
                game += 1;
                in_game = 0;
                sequence = 0;
            }
            let (pts_for, pts_against) = if ours {
                (score(&mut rng, base + shift), 0)
            } else {
                (0, score(&mut rng, base - shift))
            };
            plays.push(PlayRecord {
                game_id: format!("G{game:05}"),
                sequence,
                team_players: names.clone(),
                opp_players: opp.clone(),
                pts_for,
                pts_against,
                poss_for: ours as u32,
                poss_against: (!ours) as u32,
            });
            ours = !ours;
            sequence += 1;
            in_game += 1;
        }
    }
    Ok(plays)
}
