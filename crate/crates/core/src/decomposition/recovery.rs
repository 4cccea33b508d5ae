use std::sync::Arc;

use super::{RootValues, SubgamePartition};
use crate::cfr::{CfrSolver, MemoryMeter, TableRole};
use crate::error::{Error, Result};
use crate::game::{Game, NodeId, Player, TreeNode};
use crate::profile::{Policy, StrategyProfile};

/// Gadget game for safely re-solving one subgame for `player`.
///
/// A chance event picks a copy of each subgame root `r` with probability
/// `π_{-o}(r) / k`, where `o` is the opponent and `k` the sum of those
/// weights. The opponent then chooses `T`, ending the game with the stored
/// counterfactual value of their root information set (rescaled), or `F`,
/// playing the copied subgame with every utility multiplied by `k`.
#[derive(Clone, Debug)]
pub struct RecoveryGame {
    pub game: Game,
    pub subgame: usize,
    /// The player whose subgame strategy is being recovered.
    pub player: Player,
    pub k: f64,
    /// Chance probability of each gadget root copy, in subgame root order.
    pub chance: Vec<f64>,
    /// Opponent utility after `T`, per opponent root information set.
    pub t_utilities: Vec<f64>,
    /// Opponent root-set index of each gadget root copy.
    pub root_set: Vec<usize>,
    /// Original history of each gadget history inside an `F` subtree.
    back: Vec<Option<NodeId>>,
    /// Original information set of each gadget information set, `None` for
    /// the `T`/`F` choices.
    infoset_back: Vec<Option<usize>>,
}

impl RecoveryGame {
    /// Original history corresponding to gadget history `h`.
    pub fn original(&self, h: NodeId) -> Option<NodeId> {
        self.back[h]
    }

    pub fn original_infoset(&self, gadget_infoset: usize) -> Option<usize> {
        self.infoset_back[gadget_infoset]
    }

    /// Gadget history of the `T`/`F` choice at root copy `i`.
    pub fn choice_node(&self, i: usize) -> NodeId {
        1 + i
    }
}

/// Builds the recovery gadget for subgame `index`, recovering `recover_for`'s
/// strategy. Only the trunk part of `policy` is read. `cfvs` must hold the
/// opponent's value at each of their root information sets.
pub fn build_recovery_game(
    game: &Game,
    partition: &SubgamePartition,
    index: usize,
    policy: &Policy,
    recover_for: Player,
    cfvs: &RootValues,
) -> Result<RecoveryGame> {
    let sub = partition.subgame(index)?;
    let opp = recover_for.opponent();
    let weights: Vec<f64> = sub.roots.iter().map(|&r| game.reach(policy, r).excluding(opp)).collect();
    let k: f64 = weights.iter().sum();
    if !(k > 0.0) {
        return Err(Error::UnreachableSubgame(index));
    }
    let values = cfvs.for_subgame(sub, opp)?;
    let sets = sub.root_infosets(opp);
    let t_utilities: Vec<f64> = sets
        .iter()
        .zip(&values)
        .map(|(set, v)| {
            let denom: f64 = set.roots.iter().map(|&i| weights[i]).sum();
            if denom > 0.0 {
                k * v / denom
            } else {
                0.0
            }
        })
        .collect();
    let mut root_set = vec![0; sub.roots.len()];
    for (j, set) in sets.iter().enumerate() {
        for &i in &set.roots {
            root_set[i] = j;
        }
    }

    let scale = move |u: [f64; 2]| [k * u[0], k * u[1]];
    let copies = sub
        .roots
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let t = t_utilities[root_set[i]];
            let mut leaf = [0.0; 2];
            leaf[opp.index()] = t;
            leaf[recover_for.index()] = -t;
            let choice = TreeNode::decision(
                opp,
                format!("tf#{}", root_set[i]),
                vec![("T".into(), TreeNode::Terminal(leaf)), ("F".into(), game.subtree(r, &scale))],
            );
            (format!("r{i}"), weights[i] / k, choice)
        })
        .collect();
    let gadget = Game::from_tree(
        format!("{}-recovery-{index}-{recover_for}", game.name()),
        TreeNode::Chance(copies),
    )?;
    gadget.validate()?;

    let mut back = vec![None; gadget.num_nodes()];
    for (i, &r) in sub.roots.iter().enumerate() {
        let choice = 1 + i;
        game.pair_subtrees(r, &gadget, gadget.child(choice, 1), &mut back);
    }
    let infoset_back = gadget
        .infosets()
        .iter()
        .map(|info| back[info.histories[0]].and_then(|h| game.infoset_of(h)))
        .collect();

    Ok(RecoveryGame {
        game: gadget,
        subgame: index,
        player: recover_for,
        k,
        chance: weights.iter().map(|w| w / k).collect(),
        t_utilities,
        root_set,
        back,
        infoset_back,
    })
}

/// Incremental CFR solve of a recovery game.
#[derive(Debug)]
pub struct RecoverySolver<'r> {
    recovery: &'r RecoveryGame,
    solver: CfrSolver,
}

impl<'r> RecoverySolver<'r> {
    pub fn new(recovery: &'r RecoveryGame) -> Self {
        Self::with_meter(recovery, None)
    }

    pub fn with_meter(recovery: &'r RecoveryGame, meter: Option<&Arc<MemoryMeter>>) -> Self {
        let g = &recovery.game;
        RecoverySolver {
            recovery,
            solver: CfrSolver::region(g, &[g.root()], |_| false, TableRole::Subgame, meter),
        }
    }

    pub fn run(&mut self, iterations: u64) {
        self.solver.run(iterations);
    }

    pub fn iterations(&self) -> u64 {
        self.solver.iterations()
    }

    /// Average gadget strategy for both players.
    pub fn gadget_policy(&self) -> Policy {
        self.solver.average_policy(&self.recovery.game)
    }

    /// The recovered player's average strategy, keyed by the original
    /// game's information sets.
    pub fn fragment(&self, original: &Game) -> StrategyProfile {
        let policy = self.gadget_policy();
        let mut fragment = StrategyProfile::new();
        for (i, info) in self.recovery.game.infosets().iter().enumerate() {
            if info.player != self.recovery.player {
                continue;
            }
            if let Some(orig) = self.recovery.infoset_back[i] {
                let key = original.infoset(orig).key.clone();
                fragment.insert(info.player, key, policy.dist(i).to_vec());
            }
        }
        fragment
    }
}

/// Solves the gadget with CFR for `iterations` and returns the recovered
/// player's subgame strategy keyed by the original information sets.
pub fn resolve_subgame(original: &Game, recovery: &RecoveryGame, iterations: u64) -> Result<StrategyProfile> {
    if iterations == 0 {
        return Err(Error::ZeroIterations);
    }
    let mut solver = RecoverySolver::new(recovery);
    solver.run(iterations);
    Ok(solver.fragment(original))
}
