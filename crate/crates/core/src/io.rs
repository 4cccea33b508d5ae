//! Text formats for strategies, root counterfactual values and CSV traces.
//!
//! Strategy lines are `<player> <key> <action>=<prob> ...` and value lines
//! are `<player> <key> <value>`, both sorted by key. Numbers are written
//! with 17 significant digits, which reads back to the identical `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::decomposition::RootValues;
use crate::error::{Error, Result};
use crate::game::{Game, InfosetKey, Player};
use crate::profile::StrategyProfile;

fn number(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_number(s: &str, line: usize) -> Result<f64> {
    s.parse().map_err(|_| Error::Parse {
        line,
        reason: format!("'{s}' is not a number"),
    })
}

fn parse_player(s: &str, line: usize) -> Result<Player> {
    s.parse().ok().and_then(Player::from_number).ok_or_else(|| Error::Parse {
        line,
        reason: format!("'{s}' is not a player (expected 1 or 2)"),
    })
}

/// Lines sorted by key, then player.
fn sorted<T>(mut lines: Vec<(&InfosetKey, Player, T)>) -> Vec<(&InfosetKey, Player, T)> {
    lines.sort_by(|a, b| a.0.cmp(b.0).then(a.1.index().cmp(&b.1.index())));
    lines
}

/// Renders `profile` using `game`'s action labels.
pub fn format_strategy(game: &Game, profile: &StrategyProfile) -> Result<String> {
    let mut out = String::new();
    for (key, player, dist) in sorted(profile.iter().map(|(p, k, d)| (k, p, d)).collect()) {
        let i = game.infoset_index(player, key).ok_or_else(|| Error::MissingInfoset {
            player: player.number(),
            key: key.to_string(),
        })?;
        let actions = &game.infoset(i).actions;
        if actions.len() != dist.len() {
            return Err(Error::InvalidDistribution {
                key: key.to_string(),
                reason: format!("expected {} actions, found {}", actions.len(), dist.len()),
            });
        }
        write!(out, "{player} {key}").unwrap();
        for (a, p) in actions.iter().zip(dist) {
            write!(out, " {a}={}", number(*p)).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parses a strategy file against `game`; every listed action must belong
/// to the information set and every action must be listed once.
pub fn parse_strategy(game: &Game, text: &str) -> Result<StrategyProfile> {
    let mut profile = StrategyProfile::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let mut fields = raw.split_whitespace();
        let Some(first) = fields.next() else { continue };
        let player = parse_player(first, line)?;
        let key = InfosetKey::from_raw(fields.next().ok_or_else(|| Error::Parse {
            line,
            reason: "missing information-set key".into(),
        })?);
        let i = game.infoset_index(player, &key).ok_or_else(|| Error::Parse {
            line,
            reason: format!("unknown information set {key} of player {player}"),
        })?;
        let actions = &game.infoset(i).actions;
        let mut dist = vec![f64::NAN; actions.len()];
        for field in fields {
            let (label, prob) = field.split_once('=').ok_or_else(|| Error::Parse {
                line,
                reason: format!("expected <action>=<prob>, found '{field}'"),
            })?;
            let a = actions.iter().position(|x| x == label).ok_or_else(|| Error::Parse {
                line,
                reason: format!("unknown action '{label}' at {key}"),
            })?;
            if !dist[a].is_nan() {
                return Err(Error::Parse {
                    line,
                    reason: format!("action '{label}' listed twice"),
                });
            }
            dist[a] = parse_number(prob, line)?;
        }
        if let Some(a) = dist.iter().position(|p| p.is_nan()) {
            return Err(Error::Parse {
                line,
                reason: format!("missing action '{}' at {key}", actions[a]),
            });
        }
        if profile.get(player, &key).is_some() {
            return Err(Error::Parse {
                line,
                reason: format!("information set {key} listed twice"),
            });
        }
        profile.insert(player, key, dist);
    }
    profile.validate()?;
    Ok(profile)
}

pub fn format_values(values: &RootValues) -> String {
    let mut out = String::new();
    for (key, player, v) in sorted(values.iter().map(|(p, k, v)| (k, p, v)).collect()) {
        writeln!(out, "{player} {key} {}", number(v)).unwrap();
    }
    out
}

pub fn parse_values(text: &str) -> Result<RootValues> {
    let mut values = RootValues::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let [p, key, v] = fields[..] else {
            return Err(Error::Parse {
                line,
                reason: "expected <player> <key> <value>".into(),
            });
        };
        let player = parse_player(p, line)?;
        let key = InfosetKey::from_raw(key);
        if values.get(player, &key).is_some() {
            return Err(Error::Parse {
                line,
                reason: format!("information set {key} listed twice"),
            });
        }
        values.insert(player, key, parse_number(v, line)?);
    }
    Ok(values)
}

pub fn save_strategy(path: &Path, game: &Game, profile: &StrategyProfile) -> Result<()> {
    Ok(fs::write(path, format_strategy(game, profile)?)?)
}

pub fn load_strategy(path: &Path, game: &Game) -> Result<StrategyProfile> {
    parse_strategy(game, &fs::read_to_string(path)?)
}

pub fn save_values(path: &Path, values: &RootValues) -> Result<()> {
    Ok(fs::write(path, format_values(values))?)
}

pub fn load_values(path: &Path) -> Result<RootValues> {
    parse_values(&fs::read_to_string(path)?)
}

/// A CSV table with a fixed header, written in full on [`Csv::save`].
#[derive(Clone, Debug)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            text: header.join(",") + "\n",
            columns: header.len(),
        }
    }

    /// Appends a row of already formatted cells.
    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    /// Appends a trailing `# ...` comment line.
    pub fn comment(&mut self, text: &str) {
        writeln!(self.text, "# {text}").unwrap();
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(fs::write(path, &self.text)?)
    }
}

/// Numeric CSV cell; integers print without a fraction.
pub fn cell(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        number(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::build_game;
    use crate::profile::Policy;

    #[test]
    fn strategy_round_trips_exactly() {
        let game = build_game("kuhn", false).unwrap();
        let mut policy = Policy::uniform(&game);
        policy.dist_mut(0).copy_from_slice(&[0.1 + 0.2, 1.0 - (0.1 + 0.2)]);
        let profile = StrategyProfile::from_policy(&game, &policy);
        let text = format_strategy(&game, &profile).unwrap();
        assert_eq!(parse_strategy(&game, &text).unwrap(), profile);
        assert_eq!(text.lines().count(), game.num_infosets());
    }

    #[test]
    fn values_round_trip_exactly() {
        let mut v = RootValues::new();
        v.insert(Player::Two, InfosetKey::from_raw("a:x|b"), -1.0 / 3.0);
        v.insert(Player::One, InfosetKey::from_raw("~"), 1e-300);
        assert_eq!(parse_values(&format_values(&v)).unwrap(), v);
    }

    #[test]
    fn rejects_bad_lines() {
        let game = build_game("rps", false).unwrap();
        let good = format_strategy(&game, &StrategyProfile::from_policy(&game, &Policy::uniform(&game))).unwrap();
        assert!(parse_strategy(&game, &good.replacen("1 ", "3 ", 1)).is_err());
        assert!(parse_strategy(&game, &good.replace("=3.", "=4.")).is_err());
        assert!(parse_strategy(&game, &format!("{good}{good}")).is_err());
        assert!(parse_values("1 ~").is_err());
    }
}
