use std::sync::Arc;
use std::time::Instant;

use super::table::{AccumulatorTable, MemoryMeter, TableRole};
use super::tree::{CompiledTree, Workspace};
use super::regret_matching_into;
use crate::best_response::Evaluator;
use crate::error::{Error, Result};
use crate::game::{Game, Infoset, NodeId, Player, ReachProbabilities};
use crate::profile::{Policy, StrategyProfile};

/// Vanilla CFR over a region of a game, with simultaneous updates for both
/// players.
///
/// An iteration is split in two halves so that callers can compute the
/// values of external leaves from the reach probabilities of the current
/// policy: [`CfrSolver::begin_iteration`] runs regret matching, the forward
/// pass and the average-strategy update; [`CfrSolver::finish_iteration`]
/// runs the backward pass and the regret update.
#[derive(Debug)]
pub struct CfrSolver {
    pub(crate) tree: CompiledTree,
    table: AccumulatorTable,
    sigma: Vec<f64>,
    ws: Workspace,
    root_reach: Vec<ReachProbabilities>,
    /// Local information sets whose strategy is held fixed.
    frozen: Vec<bool>,
    iterations: u64,
}

impl CfrSolver {
    /// Solver for the whole game.
    pub fn new(game: &Game) -> Self {
        Self::from_tree(CompiledTree::whole(game), TableRole::Full, None)
    }

    /// Solver for the histories below `roots`; histories matching
    /// `external` become leaves valued by the caller.
    pub fn region(
        game: &Game,
        roots: &[NodeId],
        external: impl Fn(NodeId) -> bool,
        role: TableRole,
        meter: Option<&Arc<MemoryMeter>>,
    ) -> Self {
        Self::from_tree(CompiledTree::region(game, roots, external), role, meter)
    }

    pub(crate) fn from_tree(tree: CompiledTree, role: TableRole, meter: Option<&Arc<MemoryMeter>>) -> Self {
        let table = AccumulatorTable::new(tree.infosets.iter().map(|i| i.global).collect(), tree.offsets(), role, meter);
        let mut sigma = vec![0.0; tree.num_pairs];
        for info in &tree.infosets {
            sigma[info.offset..info.offset + info.len].fill(1.0 / info.len as f64);
        }
        CfrSolver {
            ws: Workspace::new(tree.len()),
            root_reach: vec![ReachProbabilities::ONE; tree.num_roots],
            frozen: vec![false; tree.infosets.len()],
            table,
            sigma,
            tree,
            iterations: 0,
        }
    }

    /// Holds every information set rejected by `learn` at `base`'s strategy.
    pub fn freeze_except(&mut self, game: &Game, base: &Policy, learn: impl Fn(&Infoset) -> bool) {
        for (i, info) in self.tree.infosets.iter().enumerate() {
            if !learn(game.infoset(info.global)) {
                self.frozen[i] = true;
                self.sigma[info.offset..info.offset + info.len].copy_from_slice(base.dist(info.global));
            }
        }
    }

    /// Reach probabilities injected at the region roots.
    pub fn set_root_reach(&mut self, reach: &[ReachProbabilities]) {
        assert_eq!(reach.len(), self.tree.num_roots);
        self.root_reach.copy_from_slice(reach);
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn table(&self) -> &AccumulatorTable {
        &self.table
    }

    pub fn num_external(&self) -> usize {
        self.tree.externals.len()
    }

    /// Game history of external leaf `j`.
    pub fn external_node(&self, j: usize) -> NodeId {
        self.tree.externals[j]
    }

    pub fn begin_iteration(&mut self) {
        let tree = &self.tree;
        for (i, info) in tree.infosets.iter().enumerate() {
            if !self.frozen[i] {
                let r = info.offset..info.offset + info.len;
                regret_matching_into(&self.table.regret[r.clone()], &mut self.sigma[r]);
            }
        }
        self.ws.set_roots(&self.root_reach);
        self.ws.forward(tree, &self.sigma);
        for (i, info) in tree.infosets.iter().enumerate() {
            if self.frozen[i] {
                continue;
            }
            let rep = info.members[0] as usize;
            let own = match info.player {
                Player::One => self.ws.r1[rep],
                Player::Two => self.ws.r2[rep],
            };
            if own == 0.0 {
                continue;
            }
            for a in 0..info.len {
                self.table.weight[info.offset + a] += own * self.sigma[info.offset + a];
            }
        }
    }

    /// Reach probabilities of external leaf `j` under the current iteration's
    /// policy. Valid between `begin_iteration` and `finish_iteration`.
    pub fn external_reach(&self, j: usize) -> ReachProbabilities {
        let slot = self.tree.externals_local[j];
        self.ws.reach(slot)
    }

    /// Backward pass and regret update; `external[j]` holds both players'
    /// counterfactual contributions `w_p` of external leaf `j`.
    pub fn finish_iteration(&mut self, external: &[[f64; 2]]) {
        self.ws.backward(&self.tree, &self.sigma, external, Some(&mut self.table.regret));
        self.iterations += 1;
    }

    pub fn iterate(&mut self) {
        self.begin_iteration();
        self.finish_iteration(&[]);
    }

    pub fn run(&mut self, iterations: u64) {
        for _ in 0..iterations {
            self.iterate();
        }
    }

    /// `Σ_{roots} w_p` from the last backward pass (the current policy's
    /// counterfactual value summed over the region roots).
    pub fn last_root_value(&self, player: Player) -> f64 {
        self.ws.w(player)[..self.tree.num_roots].iter().sum()
    }

    /// `w_p` at each region root from the last backward pass.
    pub fn last_root_contributions(&self, player: Player) -> &[f64] {
        &self.ws.w(player)[..self.tree.num_roots]
    }

    /// Normalized average strategy in local layout.
    pub(crate) fn average_local(&self) -> Vec<f64> {
        let mut out = self.sigma.clone();
        for (i, info) in self.tree.infosets.iter().enumerate() {
            if self.frozen[i] {
                continue;
            }
            let r = info.offset..info.offset + info.len;
            let w = &self.table.weight[r.clone()];
            let sum: f64 = w.iter().sum();
            if sum > 0.0 {
                for (o, x) in out[r].iter_mut().zip(w) {
                    *o = x / sum;
                }
            } else {
                out[r].fill(1.0 / info.len as f64);
            }
        }
        out
    }

    /// Writes a local-layout strategy into `policy` for the region's
    /// information sets.
    pub(crate) fn write_local(&self, local: &[f64], policy: &mut Policy) {
        for info in &self.tree.infosets {
            policy.dist_mut(info.global).copy_from_slice(&local[info.offset..info.offset + info.len]);
        }
    }

    pub fn write_average(&self, policy: &mut Policy) {
        let avg = self.average_local();
        self.write_local(&avg, policy);
    }

    pub fn write_current(&self, policy: &mut Policy) {
        self.write_local(&self.sigma, policy);
    }

    /// Average strategy of the whole game; only meaningful for whole-game
    /// solvers.
    pub fn average_policy(&self, game: &Game) -> Policy {
        let mut policy = Policy::uniform(game);
        self.write_average(&mut policy);
        policy
    }
}

/// When to evaluate exploitability during a solve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Checkpoints {
    Never,
    /// Iterations 1, 2, 4, 8, ...
    PowersOfTwo,
    Every(u64),
    At(Vec<u64>),
}

impl Checkpoints {
    /// Whether iteration `t` (1-based) is a checkpoint; the final iteration
    /// of a traced run always is.
    pub fn contains(&self, t: u64, last: u64) -> bool {
        match self {
            Checkpoints::Never => false,
            Checkpoints::PowersOfTwo => t.is_power_of_two() || t == last,
            Checkpoints::Every(n) => t.is_multiple_of(*n.max(&1)) || t == last,
            Checkpoints::At(list) => list.contains(&t) || t == last,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub iteration: u64,
    pub exploitability: f64,
    pub elapsed_seconds: f64,
}

#[derive(Debug)]
pub struct CfrOutput {
    pub policy: Policy,
    pub profile: StrategyProfile,
    pub table: AccumulatorTable,
    pub trace: Vec<TracePoint>,
}

/// Runs vanilla CFR on the whole game. With `subset`, only information sets
/// accepted by the filter are learned; the others keep the uniform strategy.
pub fn cfr_solve(game: &Game, iterations: u64, subset: Option<&dyn Fn(&Infoset) -> bool>) -> Result<CfrOutput> {
    cfr_solve_traced(game, iterations, subset, &Checkpoints::Never)
}

pub fn cfr_solve_traced(
    game: &Game,
    iterations: u64,
    subset: Option<&dyn Fn(&Infoset) -> bool>,
    checkpoints: &Checkpoints,
) -> Result<CfrOutput> {
    if iterations == 0 {
        return Err(Error::ZeroIterations);
    }
    let mut solver = CfrSolver::new(game);
    if let Some(filter) = subset {
        solver.freeze_except(game, &Policy::uniform(game), filter);
    }
    let evaluator = Evaluator::new(game);
    let start = Instant::now();
    let mut trace = Vec::new();
    for t in 1..=iterations {
        solver.iterate();
        if checkpoints.contains(t, iterations) {
            let policy = solver.average_policy(game);
            let expl = evaluator.exploitability(&policy);
            let elapsed = start.elapsed().as_secs_f64();
            log::info!("cfr iteration {t}: exploitability {expl:.6} ({elapsed:.1}s)");
            trace.push(TracePoint {
                iteration: t,
                exploitability: expl,
                elapsed_seconds: elapsed,
            });
        }
    }
    let policy = solver.average_policy(game);
    Ok(CfrOutput {
        profile: StrategyProfile::from_policy(game, &policy),
        policy,
        table: solver.table,
        trace,
    })
}
