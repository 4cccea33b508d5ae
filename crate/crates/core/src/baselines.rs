//! Unsafe fixed-trunk re-solving, the Leduc card abstraction, and root
//! values from a best response.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::cfr::tree::{self, CompiledTree};
use crate::cfr::{CfrSolver, TableRole};
use crate::cfrd::{CardKernel, CardSolver};
use crate::decomposition::{RootValues, SubgamePartition};
use crate::error::{Error, Result};
use crate::game::{Game, InfosetKey, Player, ReachProbabilities};
use crate::games::{leduc, GameId};
use crate::profile::{Policy, StrategyProfile};

/// Incremental solve of a subgame with both players' trunk reach folded
/// into a chance event over the roots (probability proportional to the
/// joint reach `π^σ(r)`) and the original utilities below.
pub struct UnsafeSolver {
    solver: Engine,
}

enum Engine {
    Generic(CfrSolver),
    Cards(CardSolver),
}

impl UnsafeSolver {
    pub fn new(game: &Game, partition: &SubgamePartition, index: usize, policy: &Policy) -> Result<Self> {
        let sub = partition.subgame(index)?;
        let trunk: Vec<ReachProbabilities> = sub.roots.iter().map(|&r| game.reach(policy, r)).collect();
        match CardKernel::try_new(game, sub).and_then(|k| Arc::new(k).fixed_trunk(&trunk)) {
            Some(solver) => Ok(UnsafeSolver {
                solver: Engine::Cards(solver),
            }),
            None => Self::generic(game, partition, index, policy),
        }
    }

    /// Always uses the generic tree engine.
    pub fn generic(game: &Game, partition: &SubgamePartition, index: usize, policy: &Policy) -> Result<Self> {
        let sub = partition.subgame(index)?;
        let joint: Vec<f64> = sub.roots.iter().map(|&r| game.reach(policy, r).joint()).collect();
        let total: f64 = joint.iter().sum();
        if !(total > 0.0) {
            return Err(Error::ZeroJointReach(index));
        }
        let reach: Vec<ReachProbabilities> = joint
            .iter()
            .map(|j| ReachProbabilities {
                player_one: 1.0,
                player_two: 1.0,
                chance: j / total,
            })
            .collect();
        let mut solver = CfrSolver::region(game, &sub.roots, |_| false, TableRole::Subgame, None);
        solver.set_root_reach(&reach);
        Ok(UnsafeSolver {
            solver: Engine::Generic(solver),
        })
    }

    pub fn run(&mut self, iterations: u64) {
        match &mut self.solver {
            Engine::Generic(s) => s.run(iterations),
            Engine::Cards(s) => s.run(iterations),
        }
    }

    pub fn iterations(&self) -> u64 {
        match &self.solver {
            Engine::Generic(s) => s.iterations(),
            Engine::Cards(s) => s.iterations(),
        }
    }

    /// Writes both players' average subgame strategies into `policy`.
    pub fn write_average(&self, policy: &mut Policy) {
        match &self.solver {
            Engine::Generic(s) => s.write_average(policy),
            Engine::Cards(s) => s.write_average(None, policy),
        }
    }
}

/// Re-solves subgame `index` assuming the trunk part of `policy` is fixed
/// and returns both players' subgame strategies.
pub fn unsafe_resolve(game: &Game, partition: &SubgamePartition, index: usize, policy: &Policy, iterations: u64) -> Result<StrategyProfile> {
    if iterations == 0 {
        return Err(Error::ZeroIterations);
    }
    let mut solver = UnsafeSolver::new(game, partition, index, policy)?;
    solver.run(iterations);
    let mut out = policy.clone();
    solver.write_average(&mut out);
    let sub = partition.subgame(index)?;
    let mut fragment = StrategyProfile::new();
    for &i in &sub.infosets {
        let info = game.infoset(i);
        fragment.insert(info.player, info.key.clone(), out.dist(i).to_vec());
    }
    Ok(fragment)
}

/// Map from real information sets to abstract ones.
#[derive(Clone, Debug, PartialEq)]
pub struct AbstractionMap {
    /// Abstract information-set index of each real information set.
    to_abstract: Vec<usize>,
    keys: [BTreeMap<InfosetKey, InfosetKey>; 2],
}

impl AbstractionMap {
    pub fn abstract_of(&self, player: Player, real: &InfosetKey) -> Option<&InfosetKey> {
        self.keys[player.index()].get(real)
    }

    pub fn abstract_index(&self, real_infoset: usize) -> usize {
        self.to_abstract[real_infoset]
    }

    /// Copies each abstract distribution to every real set in its bucket.
    pub fn lift(&self, real: &Game, abstract_policy: &Policy) -> Policy {
        let mut out = Policy::uniform(real);
        for (i, &a) in self.to_abstract.iter().enumerate() {
            out.dist_mut(i).copy_from_slice(abstract_policy.dist(a));
        }
        out
    }
}

/// The card-abstracted Leduc game and the map from `game`'s information
/// sets into it. Both trees share their node numbering.
pub fn build_abstraction(game: &Game) -> Result<(Game, AbstractionMap)> {
    if game.name().parse::<GameId>().ok() != Some(GameId::Leduc) {
        return Err(Error::UnsupportedGame(game.name().to_string()));
    }
    let abs = leduc(true);
    abs.validate()?;
    let mut to_abstract = Vec::with_capacity(game.num_infosets());
    let mut keys: [BTreeMap<InfosetKey, InfosetKey>; 2] = [BTreeMap::new(), BTreeMap::new()];
    for info in game.infosets() {
        let a = abs.infoset_of(info.histories[0]).expect("same tree shape");
        if info.histories.iter().any(|&h| abs.infoset_of(h) != Some(a)) || abs.infoset(a).actions != info.actions {
            return Err(Error::UnsupportedGame(format!("{} does not refine its abstraction", game.name())));
        }
        to_abstract.push(a);
        keys[info.player.index()].insert(info.key.clone(), abs.infoset(a).key.clone());
    }
    Ok((abs, AbstractionMap { to_abstract, keys }))
}

/// Values at the root information sets of subgame `index` when each
/// player's opponent counterfactually best-responds to `policy`: entry
/// `(o, I)` is `v_o(I)` under `⟨σ_{-o}, CBR(σ_{-o})⟩`. These are the
/// values a recovery game for `o`'s opponent needs.
pub fn cfvs_from_best_response(game: &Game, policy: &Policy, partition: &SubgamePartition, index: usize) -> Result<RootValues> {
    partition.subgame(index)?;
    Ok(root_values_under_best_response(game, policy, partition, &[index]))
}

/// [`cfvs_from_best_response`] for every subgame.
pub fn all_cfvs_from_best_response(game: &Game, policy: &Policy, partition: &SubgamePartition) -> RootValues {
    let all: Vec<usize> = (0..partition.len()).collect();
    root_values_under_best_response(game, policy, partition, &all)
}

fn root_values_under_best_response(game: &Game, policy: &Policy, partition: &SubgamePartition, subgames: &[usize]) -> RootValues {
    // The whole-game tree keeps the game's own node numbering.
    let tree = CompiledTree::whole(game);
    let sigma = tree.localize(policy);
    let mut out = RootValues::new();
    for o in Player::BOTH {
        let br = tree::best_response(&tree, &sigma, &[ReachProbabilities::ONE], &[], o);
        for &s in subgames {
            let sub = &partition.subgames()[s];
            for set in sub.root_infosets(o) {
                let v: f64 = set.roots.iter().map(|&i| br.w[sub.roots[i]]).sum();
                out.insert(o, set.key.clone(), v);
            }
        }
    }
    out
}
