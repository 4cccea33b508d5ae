//! Counterfactual values, counterfactual best responses and exploitability.

use std::collections::BTreeMap;

use crate::cfr::tree::{self, CompiledTree, Workspace};
use crate::game::{Game, InfosetKey, Player, ReachProbabilities};
use crate::profile::{Policy, StrategyProfile};

#[derive(Clone, Debug, PartialEq)]
pub struct CfvEntry {
    /// `v_p(I, a)` per action.
    pub action_values: Vec<f64>,
    /// `v_p(I) = Σ_a σ(I, a) v_p(I, a)`.
    pub value: f64,
}

/// Counterfactual values of one player at each of their information sets.
#[derive(Clone, Debug, PartialEq)]
pub struct CfvVector {
    pub player: Player,
    pub entries: BTreeMap<InfosetKey, CfvEntry>,
}

impl CfvVector {
    pub fn get(&self, key: &InfosetKey) -> Option<&CfvEntry> {
        self.entries.get(key)
    }
}

/// A pure counterfactual best response of one player.
#[derive(Clone, Debug)]
pub struct CounterfactualBestResponse {
    pub player: Player,
    /// Expected utility of the responder against the fixed opponent.
    pub value: f64,
    /// Chosen action per game information set of the responder.
    pub choices: Vec<(usize, usize)>,
    /// Counterfactual values with the response played below each set.
    pub values: CfvVector,
}

impl CounterfactualBestResponse {
    /// `policy` with the responder's part replaced by the response.
    pub fn apply(&self, policy: &Policy) -> Policy {
        let mut out = policy.clone();
        for &(i, a) in &self.choices {
            let d = out.dist_mut(i);
            d.fill(0.0);
            d[a] = 1.0;
        }
        out
    }

    /// The response as a profile holding only the responder's sets.
    pub fn fragment(&self, game: &Game) -> StrategyProfile {
        let mut profile = StrategyProfile::new();
        for &(i, a) in &self.choices {
            let info = game.infoset(i);
            let mut d = vec![0.0; info.num_actions()];
            d[a] = 1.0;
            profile.insert(self.player, info.key.clone(), d);
        }
        profile
    }
}

/// Precompiled whole-game tree for repeated evaluation.
#[derive(Clone, Debug)]
pub struct Evaluator<'g> {
    game: &'g Game,
    tree: CompiledTree,
}

impl<'g> Evaluator<'g> {
    pub fn new(game: &'g Game) -> Self {
        Evaluator {
            game,
            tree: CompiledTree::whole(game),
        }
    }

    pub fn counterfactual_values(&self, policy: &Policy, player: Player) -> CfvVector {
        let sigma = self.tree.localize(policy);
        let mut ws = Workspace::new(self.tree.len());
        ws.forward(&self.tree, &sigma);
        ws.backward(&self.tree, &sigma, &[], None);
        let w = ws.w(player);
        let mut entries = BTreeMap::new();
        for info in self.tree.infosets.iter().filter(|i| i.player == player) {
            let mut action_values = vec![0.0; info.len];
            for &m in &info.members {
                let first = self.tree.slots[m as usize].first_child as usize;
                for (a, v) in action_values.iter_mut().enumerate() {
                    *v += w[first + a];
                }
            }
            let dist = &sigma[info.offset..info.offset + info.len];
            let value = dist.iter().zip(&action_values).map(|(p, v)| p * v).sum();
            entries.insert(
                self.game.infoset(info.global).key.clone(),
                CfvEntry { action_values, value },
            );
        }
        CfvVector { player, entries }
    }

    pub fn best_response(&self, policy: &Policy, player: Player) -> CounterfactualBestResponse {
        let sigma = self.tree.localize(policy);
        let br = tree::best_response(&self.tree, &sigma, &[ReachProbabilities::ONE], &[], player);
        let mut choices = Vec::new();
        let mut entries = BTreeMap::new();
        for (i, info) in self.tree.infosets.iter().enumerate() {
            if info.player != player {
                continue;
            }
            let a = br.choice[i].expect("every responder set is decided");
            choices.push((info.global, a));
            let action_values = br.action_values[info.offset..info.offset + info.len].to_vec();
            entries.insert(
                self.game.infoset(info.global).key.clone(),
                CfvEntry {
                    value: action_values[a],
                    action_values,
                },
            );
        }
        choices.sort_unstable();
        CounterfactualBestResponse {
            player,
            value: br.value(&self.tree),
            choices,
            values: CfvVector { player, entries },
        }
    }

    pub fn best_response_value(&self, policy: &Policy, player: Player) -> f64 {
        let sigma = self.tree.localize(policy);
        tree::best_response(&self.tree, &sigma, &[ReachProbabilities::ONE], &[], player).value(&self.tree)
    }

    /// Average best-response gain `(BR_1(σ_2) + BR_2(σ_1)) / 2`, zero exactly
    /// at a Nash equilibrium of a zero-sum game.
    pub fn exploitability(&self, policy: &Policy) -> f64 {
        let sigma = self.tree.localize(policy);
        let b1 = tree::best_response(&self.tree, &sigma, &[ReachProbabilities::ONE], &[], Player::One).value(&self.tree);
        let b2 = tree::best_response(&self.tree, &sigma, &[ReachProbabilities::ONE], &[], Player::Two).value(&self.tree);
        (b1 + b2) / 2.0
    }
}

/// `v_p(I, a)` and `v_p(I)` at every information set of `player`, including
/// sets the player never reaches under `policy`.
pub fn counterfactual_values(game: &Game, policy: &Policy, player: Player) -> CfvVector {
    Evaluator::new(game).counterfactual_values(policy, player)
}

/// Pure strategy for `player` that maximizes counterfactual value at every
/// one of their information sets; ties go to the lowest action index.
pub fn counterfactual_best_response(game: &Game, policy: &Policy, player: Player) -> CounterfactualBestResponse {
    Evaluator::new(game).best_response(policy, player)
}

pub fn best_response_value(game: &Game, policy: &Policy, player: Player) -> f64 {
    Evaluator::new(game).best_response_value(policy, player)
}

/// Exploitability in chips per hand.
pub fn exploitability(game: &Game, policy: &Policy) -> f64 {
    Evaluator::new(game).exploitability(policy)
}
