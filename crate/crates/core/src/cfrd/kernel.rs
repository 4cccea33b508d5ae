use std::sync::Arc;

use crate::cfr::tree::{self, CompiledTree, Workspace};
use crate::cfr::{CfrSolver, MemoryMeter, TableRole};
use crate::decomposition::Subgame;
use crate::game::{Game, Player, ReachProbabilities};
use crate::profile::Policy;

/// Result of one subgame solve inside CFR-D.
#[derive(Clone, Debug, PartialEq)]
pub struct SubgameSolution {
    /// Per player, the counterfactual value at each root information set
    /// (in [`Subgame::root_infosets`] order) under the average strategy.
    pub values: [Vec<f64>; 2],
    /// Largest counterfactual regret of either player at a root information
    /// set: how much a counterfactual best response would gain there.
    pub eps: f64,
    /// Average subgame strategy in the kernel's own layout, when requested.
    pub strategy: Option<Vec<f64>>,
}

/// Solves one subgame with CFR from given root reach probabilities.
pub(crate) trait SubgameKernel: Send + Sync {
    fn solve(&self, reach: &[ReachProbabilities], iterations: u64, meter: Option<&Arc<MemoryMeter>>, keep_strategy: bool)
        -> SubgameSolution;

    /// Writes a kept strategy into a game-wide policy.
    fn write_strategy(&self, solution: &SubgameSolution, policy: &mut Policy);
}

/// Kernel running the general tree engine on the subgame.
pub(crate) struct GenericKernel {
    pub(crate) tree: CompiledTree,
    sets: [Vec<Vec<usize>>; 2],
}

impl GenericKernel {
    pub fn new(game: &Game, sub: &Subgame) -> Self {
        let sets = [0, 1].map(|p| sub.root_infosets[p].iter().map(|s| s.roots.clone()).collect());
        GenericKernel {
            tree: CompiledTree::region(game, &sub.roots, |_| false),
            sets,
        }
    }
}

impl SubgameKernel for GenericKernel {
    fn solve(&self, reach: &[ReachProbabilities], iterations: u64, meter: Option<&Arc<MemoryMeter>>, keep_strategy: bool) -> SubgameSolution {
        let mut solver = CfrSolver::from_tree(self.tree.clone(), TableRole::Subgame, meter);
        solver.set_root_reach(reach);
        solver.run(iterations);
        let avg = solver.average_local();
        drop(solver);
        let (values, eps) = self.evaluate(reach, &avg);
        SubgameSolution {
            values,
            eps,
            strategy: keep_strategy.then_some(avg),
        }
    }

    fn write_strategy(&self, solution: &SubgameSolution, policy: &mut Policy) {
        if let Some(s) = &solution.strategy {
            for info in &self.tree.infosets {
                policy.dist_mut(info.global).copy_from_slice(&s[info.offset..info.offset + info.len]);
            }
        }
    }
}

impl GenericKernel {
    /// Root-set values of both players under `avg` (local layout) and the
    /// largest root-set gain of a best response.
    pub fn evaluate(&self, reach: &[ReachProbabilities], avg: &[f64]) -> ([Vec<f64>; 2], f64) {
        let mut ws = Workspace::new(self.tree.len());
        ws.set_roots(reach);
        ws.forward(&self.tree, avg);
        ws.backward(&self.tree, avg, &[], None);

        let mut values: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut eps: f64 = 0.0;
        for p in Player::BOTH {
            let w = ws.w(p);
            let br = tree::best_response(&self.tree, avg, reach, &[], p);
            for set in &self.sets[p.index()] {
                let v: f64 = set.iter().map(|&r| w[r]).sum();
                let b: f64 = set.iter().map(|&r| br.w[r]).sum();
                eps = eps.max(b - v);
                values[p.index()].push(v);
            }
        }
        (values, eps)
    }
}
