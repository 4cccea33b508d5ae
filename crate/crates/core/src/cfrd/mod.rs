//! CFR-D: CFR on the trunk only, with every subgame re-solved from scratch
//! each iteration and only root counterfactual values kept.

mod cards;
mod kernel;

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::cfr::{AccumulatorTable, CfrSolver, MemoryMeter, MeterGuard, TableRole};
use crate::decomposition::{build_recovery_game, stitch_policy, RecoverySolver, RootValues, Subgame, SubgamePartition};
use crate::error::{Error, Result};
use crate::game::{Game, Player, ReachProbabilities};
use crate::profile::{Policy, StrategyProfile};

pub(crate) use cards::{CardKernel, CardSolver};
pub use kernel::SubgameSolution;
pub(crate) use kernel::{GenericKernel, SubgameKernel};

/// Regret bound `N_TR·√(A·T)/T + N_S·ε_S` on the full-game average regret.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegretBoundReport {
    pub trunk_infosets: usize,
    pub root_infosets: usize,
    pub max_trunk_actions: usize,
    pub iterations: u64,
    /// Largest subgame counterfactual regret measured at any iteration.
    pub eps_s: f64,
    pub bound: f64,
}

impl RegretBoundReport {
    pub fn new(trunk_infosets: usize, root_infosets: usize, max_trunk_actions: usize, iterations: u64, eps_s: f64) -> Self {
        let t = iterations as f64;
        let bound = trunk_infosets as f64 * (max_trunk_actions as f64 * t).sqrt() / t + root_infosets as f64 * eps_s;
        RegretBoundReport {
            trunk_infosets,
            root_infosets,
            max_trunk_actions,
            iterations,
            eps_s,
            bound,
        }
    }
}

/// Persistent CFR-D state: the trunk tables, running sums of the root
/// counterfactual values and the iteration count.
#[derive(Debug)]
pub struct TrunkState {
    solver: CfrSolver,
    /// Per subgame and player, sums of root-set values over iterations.
    cfv_sums: Vec<[Vec<f64>; 2]>,
    _cfv_guard: MeterGuard,
}

impl TrunkState {
    pub fn iterations(&self) -> u64 {
        self.solver.iterations()
    }

    pub fn table(&self) -> &AccumulatorTable {
        self.solver.table()
    }

    /// Average trunk strategy; subgame information sets are uniform.
    pub fn average_policy(&self, game: &Game) -> Policy {
        let mut policy = Policy::uniform(game);
        self.solver.write_average(&mut policy);
        policy
    }

    /// Running means of the root counterfactual values.
    pub fn average_cfvs(&self, partition: &SubgamePartition) -> RootValues {
        let t = self.iterations().max(1) as f64;
        let mut out = RootValues::new();
        for (sub, sums) in partition.subgames().iter().zip(&self.cfv_sums) {
            for p in Player::BOTH {
                for (set, s) in sub.root_infosets(p).iter().zip(&sums[p.index()]) {
                    out.insert(p, set.key.clone(), s / t);
                }
            }
        }
        out
    }
}

/// What the observer sees after each trunk iteration.
#[derive(Debug)]
pub struct IterationReport<'a> {
    pub iteration: u64,
    /// Per subgame, the solution found at this iteration.
    pub solutions: &'a [SubgameSolution],
    /// Expected value of each player under this iteration's combined profile.
    pub values: [f64; 2],
    /// This iteration's combined profile (trunk σ^t plus every subgame's
    /// solution), when requested.
    pub profile: Option<&'a Policy>,
    pub state: &'a TrunkState,
}

pub struct CfrdOptions<'a> {
    pub trunk_iterations: u64,
    pub subgame_iterations: u64,
    pub workers: usize,
    pub meter: Option<Arc<MemoryMeter>>,
    pub record_profiles: bool,
    pub observer: Option<&'a mut dyn FnMut(&IterationReport<'_>)>,
}

impl CfrdOptions<'_> {
    pub fn new(trunk_iterations: u64, subgame_iterations: u64) -> Self {
        CfrdOptions {
            trunk_iterations,
            subgame_iterations,
            workers: 1,
            meter: None,
            record_profiles: false,
            observer: None,
        }
    }
}

#[derive(Debug)]
pub struct CfrdOutput {
    /// Average trunk strategy; subgame information sets are uniform.
    pub trunk_policy: Policy,
    pub cfvs: RootValues,
    pub report: RegretBoundReport,
    pub state: TrunkState,
}

fn pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
}

/// Solves subgame `index` under the trunk part of `policy` with CFR and
/// returns both players' values at the root information sets under the
/// average subgame strategy. The subgame strategy itself is discarded.
pub fn solve_subgame_mutual_cbr(
    game: &Game,
    partition: &SubgamePartition,
    index: usize,
    policy: &Policy,
    iterations: u64,
) -> Result<RootValues> {
    if iterations == 0 {
        return Err(Error::ZeroIterations);
    }
    let sub = partition.subgame(index)?;
    let kernel = kernel_for(game, sub);
    let reach: Vec<ReachProbabilities> = sub.roots.iter().map(|&r| game.reach(policy, r)).collect();
    let sol = kernel.solve(&reach, iterations, None, false);
    let mut out = RootValues::new();
    for p in Player::BOTH {
        for (set, v) in sub.root_infosets(p).iter().zip(&sol.values[p.index()]) {
            out.insert(p, set.key.clone(), *v);
        }
    }
    Ok(out)
}

/// The card-vectorized kernel when the subgame has that structure, the
/// generic one otherwise.
pub(crate) fn kernel_for(game: &Game, sub: &Subgame) -> Box<dyn SubgameKernel> {
    match CardKernel::try_new(game, sub) {
        Some(k) => Box::new(Arc::new(k)),
        None => Box::new(GenericKernel::new(game, sub)),
    }
}

pub(crate) fn kernels(game: &Game, partition: &SubgamePartition) -> Vec<Box<dyn SubgameKernel>> {
    partition.subgames().iter().map(|sub| kernel_for(game, sub)).collect()
}

/// Runs CFR-D for `options.trunk_iterations` trunk iterations.
pub fn cfr_d(game: &Game, partition: &SubgamePartition, mut options: CfrdOptions<'_>) -> Result<CfrdOutput> {
    let kernels = kernels(game, partition);
    cfr_d_with(game, partition, &kernels, &mut options)
}

pub(crate) fn cfr_d_with(
    game: &Game,
    partition: &SubgamePartition,
    kernels: &[Box<dyn SubgameKernel>],
    options: &mut CfrdOptions<'_>,
) -> Result<CfrdOutput> {
    if options.trunk_iterations == 0 || (options.subgame_iterations == 0 && !partition.is_empty()) {
        return Err(Error::ZeroIterations);
    }
    let meter = options.meter.clone();
    let trunk = CfrSolver::region(game, &[game.root()], |h| partition.is_root(h), TableRole::Trunk, meter.as_ref());

    // External leaf j of the trunk corresponds to root `leaf_root[j]` of
    // subgame `leaf_sub[j]`; `slots[s][i]` is the reverse map.
    let mut slots: Vec<Vec<usize>> = partition.subgames().iter().map(|s| vec![0; s.roots.len()]).collect();
    for j in 0..trunk.num_external() {
        let h = trunk.external_node(j);
        let s = partition.owner(h).expect("external leaves are subgame roots");
        let i = partition.subgames()[s].roots.binary_search(&h).expect("root");
        slots[s][i] = j;
    }

    let cfv_entries = partition.num_root_infosets();
    let mut state = TrunkState {
        cfv_sums: partition
            .subgames()
            .iter()
            .map(|s| [vec![0.0; s.root_infosets[0].len()], vec![0.0; s.root_infosets[1].len()]])
            .collect(),
        _cfv_guard: MeterGuard::new(meter.as_ref(), TableRole::RootValues, cfv_entries),
        solver: trunk,
    };

    let pool = pool(options.workers);
    let mut external = vec![[0.0; 2]; state.solver.num_external()];
    let mut eps_s: f64 = 0.0;
    let start = Instant::now();
    let subgame_iterations = options.subgame_iterations;
    let record = options.record_profiles;
    let mut combined = if record { Some(Policy::uniform(game)) } else { None };

    for t in 1..=options.trunk_iterations {
        state.solver.begin_iteration();
        let reaches: Vec<Vec<ReachProbabilities>> = slots
            .iter()
            .map(|js| js.iter().map(|&j| state.solver.external_reach(j)).collect())
            .collect();
        let solutions: Vec<SubgameSolution> = pool.install(|| {
            kernels
                .par_iter()
                .zip(reaches.par_iter())
                .map(|(k, reach)| k.solve(reach, subgame_iterations, meter.as_ref(), record))
                .collect()
        });

        for (s, (sub, sol)) in partition.subgames().iter().zip(&solutions).enumerate() {
            eps_s = eps_s.max(sol.eps);
            for p in Player::BOTH {
                let sums = &mut state.cfv_sums[s][p.index()];
                for (acc, v) in sums.iter_mut().zip(&sol.values[p.index()]) {
                    *acc += v;
                }
                for &j in &slots[s] {
                    external[j][p.index()] = 0.0;
                }
                // Each root set's value is carried by its first root.
                for (set, v) in sub.root_infosets(p).iter().zip(&sol.values[p.index()]) {
                    external[slots[s][set.roots[0]]][p.index()] = *v;
                }
            }
        }
        if let Some(policy) = combined.as_mut() {
            state.solver.write_current(policy);
            for (k, sol) in kernels.iter().zip(&solutions) {
                k.write_strategy(sol, policy);
            }
        }
        state.solver.finish_iteration(&external);

        if let Some(observer) = options.observer.as_mut() {
            observer(&IterationReport {
                iteration: t,
                solutions: &solutions,
                values: [state.solver.last_root_value(Player::One), state.solver.last_root_value(Player::Two)],
                profile: combined.as_ref(),
                state: &state,
            });
        }
        if t.is_power_of_two() {
            log::debug!("cfr-d iteration {t} ({:.1}s)", start.elapsed().as_secs_f64());
        }
    }

    let trunk_policy = state.average_policy(game);
    let max_trunk_actions = partition
        .trunk_infosets()
        .iter()
        .map(|&i| game.infoset(i).num_actions())
        .max()
        .unwrap_or(1);
    let report = RegretBoundReport::new(
        partition.trunk_infosets().len(),
        partition.num_root_infosets(),
        max_trunk_actions,
        options.trunk_iterations,
        eps_s,
    );
    Ok(CfrdOutput {
        cfvs: state.average_cfvs(partition),
        trunk_policy,
        report,
        state,
    })
}

/// Options for rebuilding subgame strategies from trunk strategy and root
/// values.
#[derive(Clone, Debug)]
pub struct RecoveryOptions {
    pub workers: usize,
    /// Iteration counts at which the checkpoint callback fires; the last
    /// entry is the total budget.
    pub checkpoints: Vec<u64>,
}

/// Builds a complete strategy from `trunk` by recovering every subgame for
/// both players against the stored `cfvs`. Subgames the opponent cannot
/// reach get uniform play for the recovering player.
pub fn recover_full(
    game: &Game,
    partition: &SubgamePartition,
    trunk: &Policy,
    cfvs: &RootValues,
    recovery_iterations: u64,
) -> Result<Policy> {
    let mut result = None;
    recover_full_traced(
        game,
        partition,
        trunk,
        cfvs,
        &RecoveryOptions {
            workers: 1,
            checkpoints: vec![recovery_iterations],
        },
        |_, policy| result = Some(policy.clone()),
    )?;
    Ok(result.expect("one checkpoint"))
}

/// [`recover_full`] with the stitched strategy reported at every checkpoint.
pub fn recover_full_traced(
    game: &Game,
    partition: &SubgamePartition,
    trunk: &Policy,
    cfvs: &RootValues,
    options: &RecoveryOptions,
    mut on_checkpoint: impl FnMut(u64, &Policy),
) -> Result<()> {
    if options.checkpoints.is_empty() || options.checkpoints.contains(&0) {
        return Err(Error::ZeroIterations);
    }
    let mut base = trunk.clone();
    let mut recoveries = Vec::new();
    for (s, sub) in partition.subgames().iter().enumerate() {
        for p in Player::BOTH {
            match build_recovery_game(game, partition, s, trunk, p, cfvs) {
                Ok(r) => recoveries.push(r),
                Err(Error::UnreachableSubgame(_)) => {
                    log::warn!("subgame {s} is unreachable for the opponent of player {p}; using uniform play");
                    for &i in &sub.infosets {
                        if game.infoset(i).player == p {
                            let d = base.dist_mut(i);
                            let n = d.len() as f64;
                            d.fill(1.0 / n);
                        }
                    }
                }
                Err(e) => return Err(e),
            }
        }
    }
    let pool = pool(options.workers);
    let card_kernels: Vec<Option<Arc<CardKernel>>> =
        partition.subgames().iter().map(|sub| CardKernel::try_new(game, sub).map(Arc::new)).collect();
    let mut solvers: Vec<GadgetSolver<'_>> = recoveries
        .iter()
        .map(|rec| match card_kernels[rec.subgame].as_ref().and_then(|k| k.gadget(rec)) {
            Some(s) => GadgetSolver::Cards(s, rec.player),
            None => GadgetSolver::Generic(RecoverySolver::new(rec)),
        })
        .collect();
    let mut checkpoints = options.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    for c in checkpoints {
        pool.install(|| {
            solvers.par_iter_mut().for_each(|s| {
                let todo = c - s.iterations();
                s.run(todo);
            })
        });
        let mut policy = base.clone();
        for (solver, rec) in solvers.iter().zip(&recoveries) {
            stitch_policy(game, &mut policy, partition, rec.subgame, &solver.fragment(game))?;
        }
        on_checkpoint(c, &policy);
    }
    Ok(())
}

enum GadgetSolver<'r> {
    Generic(RecoverySolver<'r>),
    Cards(CardSolver, Player),
}

impl GadgetSolver<'_> {
    fn iterations(&self) -> u64 {
        match self {
            GadgetSolver::Generic(s) => s.iterations(),
            GadgetSolver::Cards(s, _) => s.iterations(),
        }
    }

    fn run(&mut self, iterations: u64) {
        match self {
            GadgetSolver::Generic(s) => s.run(iterations),
            GadgetSolver::Cards(s, _) => s.run(iterations),
        }
    }

    fn fragment(&self, game: &Game) -> StrategyProfile {
        match self {
            GadgetSolver::Generic(s) => s.fragment(game),
            GadgetSolver::Cards(s, p) => s.fragment(game, *p),
        }
    }
}
