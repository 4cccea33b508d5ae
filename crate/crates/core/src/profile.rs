//! Strategies: a flat [`Policy`] aligned to one game's layout for numerical
//! work, and a keyed [`StrategyProfile`] that can move between games.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::game::{Game, InfosetKey, Player};

/// Tolerance on `Σ_a σ(I, a) = 1`.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// Behaviour strategies for both players, stored as one flat vector with the
/// same `(information set, action)` layout as the game it was built for.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    offsets: Arc<[usize]>,
    probs: Vec<f64>,
}

impl Policy {
    pub fn uniform(game: &Game) -> Policy {
        let offsets = game.offsets().clone();
        let mut probs = vec![0.0; game.num_infoset_actions()];
        for w in offsets.windows(2) {
            let n = (w[1] - w[0]) as f64;
            probs[w[0]..w[1]].fill(1.0 / n);
        }
        Policy { offsets, probs }
    }

    /// Wraps a flat probability vector laid out like `game`.
    pub fn from_flat(game: &Game, probs: Vec<f64>) -> Policy {
        assert_eq!(probs.len(), game.num_infoset_actions());
        Policy {
            offsets: game.offsets().clone(),
            probs,
        }
    }

    #[inline]
    pub fn dist(&self, infoset: usize) -> &[f64] {
        &self.probs[self.offsets[infoset]..self.offsets[infoset + 1]]
    }

    #[inline]
    pub fn dist_mut(&mut self, infoset: usize) -> &mut [f64] {
        &mut self.probs[self.offsets[infoset]..self.offsets[infoset + 1]]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn num_infosets(&self) -> usize {
        self.offsets.len() - 1
    }
}

/// Per-player association from information-set key to an action distribution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StrategyProfile {
    players: [BTreeMap<InfosetKey, Vec<f64>>; 2],
}

impl StrategyProfile {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_policy(game: &Game, policy: &Policy) -> Self {
        let mut profile = StrategyProfile::new();
        for (i, info) in game.infosets().iter().enumerate() {
            profile.insert(info.player, info.key.clone(), policy.dist(i).to_vec());
        }
        profile
    }

    pub fn insert(&mut self, player: Player, key: InfosetKey, dist: Vec<f64>) {
        self.players[player.index()].insert(key, dist);
    }

    pub fn get(&self, player: Player, key: &InfosetKey) -> Option<&[f64]> {
        self.players[player.index()].get(key).map(Vec::as_slice)
    }

    pub fn player(&self, player: Player) -> &BTreeMap<InfosetKey, Vec<f64>> {
        &self.players[player.index()]
    }

    pub fn player_mut(&mut self, player: Player) -> &mut BTreeMap<InfosetKey, Vec<f64>> {
        &mut self.players[player.index()]
    }

    pub fn len(&self) -> usize {
        self.players[0].len() + self.players[1].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All entries in (player, key) order.
    pub fn iter(&self) -> impl Iterator<Item = (Player, &InfosetKey, &[f64])> {
        Player::BOTH
            .into_iter()
            .flat_map(move |p| self.players[p.index()].iter().map(move |(k, d)| (p, k, d.as_slice())))
    }

    /// Checks every distribution is non-negative and sums to one.
    pub fn validate(&self) -> Result<()> {
        for (_, key, dist) in self.iter() {
            check_distribution(key, dist)?;
        }
        Ok(())
    }

    /// Flat policy for `game`; every information set must be present.
    pub fn to_policy(&self, game: &Game) -> Result<Policy> {
        let mut policy = Policy::uniform(game);
        for (i, info) in game.infosets().iter().enumerate() {
            let dist = self.get(info.player, &info.key).ok_or_else(|| Error::MissingInfoset {
                player: info.player.number(),
                key: info.key.to_string(),
            })?;
            if dist.len() != info.num_actions() {
                return Err(Error::InvalidDistribution {
                    key: info.key.to_string(),
                    reason: format!("expected {} actions, found {}", info.num_actions(), dist.len()),
                });
            }
            policy.dist_mut(i).copy_from_slice(dist);
        }
        Ok(policy)
    }

    /// Flat policy for `game`, taking missing information sets from `fallback`.
    pub fn to_policy_or(&self, game: &Game, fallback: &Policy) -> Policy {
        let mut policy = fallback.clone();
        for (i, info) in game.infosets().iter().enumerate() {
            if let Some(dist) = self.get(info.player, &info.key) {
                if dist.len() == info.num_actions() {
                    policy.dist_mut(i).copy_from_slice(dist);
                }
            }
        }
        policy
    }
}

pub(crate) fn check_distribution(key: &InfosetKey, dist: &[f64]) -> Result<()> {
    if dist.is_empty() {
        return Err(Error::InvalidDistribution {
            key: key.to_string(),
            reason: "empty distribution".into(),
        });
    }
    if let Some(p) = dist.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidDistribution {
            key: key.to_string(),
            reason: format!("entry {p} is not a probability"),
        });
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(Error::InvalidDistribution {
            key: key.to_string(),
            reason: format!("sums to {sum}"),
        });
    }
    Ok(())
}
