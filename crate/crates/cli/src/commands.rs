use std::fs;
use std::path::Path;
use std::time::Instant;

use cfrd_core::baselines::{all_cfvs_from_best_response, build_abstraction, UnsafeSolver};
use cfrd_core::best_response::{best_response_value, exploitability};
use cfrd_core::cfr::{cfr_solve_traced, Checkpoints, MemoryMeter, TableRole};
use cfrd_core::cfrd::{cfr_d, recover_full_traced, CfrdOptions, IterationReport, RecoveryOptions};
use cfrd_core::decomposition::{partition_game, Frontier, RootValues, SubgamePartition};
use cfrd_core::game::{Game, Player};
use cfrd_core::games::build_game;
use cfrd_core::io::{cell, load_strategy, load_values, save_strategy, save_values, Csv};
use cfrd_core::profile::{Policy, StrategyProfile};
use cfrd_core::seqform::solve_equilibrium;
use cfrd_core::Error;

use crate::{
    CfrdArgs, Cli, ExploitArgs, Failure, FrontierArg, Method, RecoverArgs, ResolveAbstractArgs, SolveArgs, ValidateArgs,
};

type Outcome = Result<(), Failure>;

fn game(name: &str) -> Result<Game, Failure> {
    Ok(build_game(name, false)?)
}

fn partition(game: &Game, frontier: FrontierArg) -> Result<SubgamePartition, Failure> {
    let frontier = match frontier {
        FrontierArg::Natural => Frontier::Natural,
        FrontierArg::None => Frontier::None,
    };
    Ok(partition_game(game, &frontier)?)
}

fn out_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(|e| Failure::Config(format!("cannot create {}: {e}", path.display())))
}

fn positive(name: &str, n: Option<u64>) -> Result<(), Failure> {
    match n {
        Some(0) => Err(Failure::Config(format!("--{name} must be at least 1"))),
        _ => Ok(()),
    }
}

/// Recovery iteration counts to evaluate: multiples of `every`, or powers
/// of two, always ending at `total`.
fn checkpoints(total: u64, every: Option<u64>) -> Result<Vec<u64>, Failure> {
    positive("eval-every", every)?;
    if total == 0 {
        return Err(Error::ZeroIterations.into());
    }
    let mut out: Vec<u64> = match every {
        Some(k) => (1..=total / k).map(|i| i * k).collect(),
        None => (0..64).map(|i| 1u64 << i).take_while(|&c| c <= total).collect(),
    };
    if out.last() != Some(&total) {
        out.push(total);
    }
    Ok(out)
}

fn recover_all(game: &Game, partition: &SubgamePartition, trunk: &Policy, cfvs: &RootValues, iterations: u64, workers: usize) -> Result<Policy, Error> {
    let mut out = None;
    recover_full_traced(
        game,
        partition,
        trunk,
        cfvs,
        &RecoveryOptions {
            workers,
            checkpoints: vec![iterations],
        },
        |_, p| out = Some(p.clone()),
    )?;
    Ok(out.expect("one checkpoint"))
}

/// Safe recovery and the unsafe baseline at every checkpoint.
fn compare(
    game: &Game,
    partition: &SubgamePartition,
    policy: &Policy,
    cfvs: &RootValues,
    checkpoints: &[u64],
    workers: usize,
) -> Result<Vec<(u64, Policy, Policy)>, Failure> {
    let mut safe = Vec::new();
    recover_full_traced(
        game,
        partition,
        policy,
        cfvs,
        &RecoveryOptions {
            workers,
            checkpoints: checkpoints.to_vec(),
        },
        |c, p| safe.push((c, p.clone())),
    )?;

    let mut solvers = Vec::new();
    for s in 0..partition.len() {
        match UnsafeSolver::new(game, partition, s, policy) {
            Ok(solver) => solvers.push(solver),
            Err(Error::ZeroJointReach(_)) => log::warn!("subgame {s} has zero joint reach; the unsafe baseline keeps the input strategy there"),
            Err(e) => return Err(e.into()),
        }
    }
    let mut out = Vec::new();
    for (c, safe) in safe {
        let mut unsafe_policy = policy.clone();
        for solver in &mut solvers {
            solver.run(c - solver.iterations());
            solver.write_average(&mut unsafe_policy);
        }
        out.push((c, safe, unsafe_policy));
    }
    Ok(out)
}

/// `½[u_1(σ'_1, σ_2) + u_2(σ_1, σ'_2)]`: how the re-solved strategy does
/// against the original one, averaged over both seats.
fn versus(game: &Game, resolved: &Policy, original: &Policy) -> f64 {
    let mut total = 0.0;
    for p in Player::BOTH {
        let mut mixed = original.clone();
        for (i, info) in game.infosets().iter().enumerate() {
            if info.player == p {
                mixed.dist_mut(i).copy_from_slice(resolved.dist(i));
            }
        }
        total += game.expected_value(&mixed)[p.index()];
    }
    total / 2.0
}

fn trunk_profile(game: &Game, partition: &SubgamePartition, policy: &Policy) -> StrategyProfile {
    let mut out = StrategyProfile::new();
    for &i in partition.trunk_infosets() {
        let info = game.infoset(i);
        out.insert(info.player, info.key.clone(), policy.dist(i).to_vec());
    }
    out
}

fn save(path: &Path, game: &Game, policy: &Policy) -> Result<(), Failure> {
    Ok(save_strategy(path, game, &StrategyProfile::from_policy(game, policy))?)
}

pub fn solve(_cli: &Cli, a: &SolveArgs) -> Outcome {
    let game = game(&a.game.game)?;
    positive("eval-every", a.eval_every)?;
    out_dir(&a.out)?;
    let mut trace = Csv::new(&["iteration", "exploitability_chips", "elapsed_seconds"]);
    let policy = match a.method {
        Method::Cfr => {
            let checkpoints = a.eval_every.map_or(Checkpoints::PowersOfTwo, Checkpoints::Every);
            let out = cfr_solve_traced(&game, a.iters, None, &checkpoints)?;
            for t in &out.trace {
                trace.row(&[cell(t.iteration as f64), cell(t.exploitability), cell(t.elapsed_seconds)]);
            }
            out.policy
        }
        Method::Lp => {
            let start = Instant::now();
            let eq = solve_equilibrium(&game)?;
            trace.row(&[cell(0.0), cell(exploitability(&game, &eq.policy)), cell(start.elapsed().as_secs_f64())]);
            eq.policy
        }
    };
    let value = game.expected_value(&policy);
    let expl = exploitability(&game, &policy);
    trace.comment(&format!("value_player1 {}", cell(value[0])));
    trace.comment(&format!("exploitability {}", cell(expl)));
    save(&a.out.join("strategy.txt"), &game, &policy)?;
    trace.save(&a.out.join("trace.csv"))?;
    println!("exploitability {expl:.9}");
    println!("value_player1 {:.9}", value[0]);
    Ok(())
}

pub fn recover(cli: &Cli, a: &RecoverArgs) -> Outcome {
    let game = game(&a.game.game)?;
    let partition = partition(&game, a.frontier)?;
    let checkpoints = checkpoints(a.recovery_iters, a.eval_every)?;
    let profile = load_strategy(&a.strategy, &game)?;
    let missing = game.num_infosets() - profile.len();
    if missing > 0 {
        log::warn!("{missing} information sets missing from {}; they play uniformly", a.strategy.display());
    }
    let policy = profile.to_policy_or(&game, &Policy::uniform(&game));
    let cfvs = match &a.cfvs {
        Some(path) => load_values(path)?,
        None => all_cfvs_from_best_response(&game, &policy, &partition),
    };
    out_dir(&a.out)?;

    let rows = compare(&game, &partition, &policy, &cfvs, &checkpoints, cli.workers)?;
    let mut csv = Csv::new(&["iterations", "safe_expl", "unsafe_expl"]);
    for (c, safe, unsafe_policy) in &rows {
        csv.row(&[cell(*c as f64), cell(exploitability(&game, safe)), cell(exploitability(&game, unsafe_policy))]);
    }
    let original = exploitability(&game, &policy);
    csv.comment(&format!("original_exploitability {}", cell(original)));
    let (_, safe, unsafe_policy) = rows.last().expect("at least one checkpoint");
    save(&a.out.join("strategy.txt"), &game, safe)?;
    save(&a.out.join("unsafe_strategy.txt"), &game, unsafe_policy)?;
    csv.save(&a.out.join("recovery.csv"))?;
    println!("original_exploitability {original:.9}");
    println!("safe_exploitability {:.9}", exploitability(&game, safe));
    println!("unsafe_exploitability {:.9}", exploitability(&game, unsafe_policy));
    Ok(())
}


pub fn cfrd(cli: &Cli, a: &CfrdArgs) -> Outcome {
    let game = game(&a.game.game)?;
    let partition = partition(&game, a.frontier)?;
    positive("eval-every", a.eval_every)?;
    if a.recovery_iters == 0 {
        return Err(Error::ZeroIterations.into());
    }
    out_dir(&a.out)?;

    let meter = MemoryMeter::new();
    let start = Instant::now();
    let mut trace = Csv::new(&["iteration", "subgame_iters", "exploitability_chips", "elapsed_seconds"]);
    let mut failure = None;
    let mut observer = |r: &IterationReport<'_>| {
        let Some(k) = a.eval_every else { return };
        if !r.iteration.is_multiple_of(k) && r.iteration != a.trunk_iters {
            return;
        }
        let trunk = r.state.average_policy(&game);
        let cfvs = r.state.average_cfvs(&partition);
        match recover_all(&game, &partition, &trunk, &cfvs, a.recovery_iters, cli.workers) {
            Ok(full) => trace.row(&[
                cell(r.iteration as f64),
                cell(a.subgame_iters as f64),
                cell(exploitability(&game, &full)),
                cell(start.elapsed().as_secs_f64()),
            ]),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    };
    let mut options = CfrdOptions::new(a.trunk_iters, a.subgame_iters);
    options.workers = cli.workers;
    options.meter = Some(meter.clone());
    if a.eval_every.is_some() {
        options.observer = Some(&mut observer);
    }
    let out = cfr_d(&game, &partition, options)?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let cfrd_seconds = start.elapsed().as_secs_f64();
    let full = recover_all(&game, &partition, &out.trunk_policy, &out.cfvs, a.recovery_iters, cli.workers)?;
    let expl = exploitability(&game, &full);

    save_strategy(&a.out.join("trunk.txt"), &game, &trunk_profile(&game, &partition, &out.trunk_policy))?;
    save_values(&a.out.join("cfvs.txt"), &out.cfvs)?;
    save(&a.out.join("strategy.txt"), &game, &full)?;
    if a.eval_every.is_some() {
        trace.save(&a.out.join("trace.csv"))?;
    }
    let r = &out.report;
    println!("exploitability {expl:.9}");
    println!("cfrd_seconds {cfrd_seconds:.3}");
    println!("eps_s {:.9}", r.eps_s);
    println!("regret_bound {:.9}", r.bound);
    println!("trunk_entries {}", out.state.table().num_entries());
    println!("peak_subgame_entries {}", meter.peak_for(TableRole::Subgame));
    println!("peak_entries {}", meter.peak());
    println!("vanilla_entries {}", 2 * game.num_infoset_actions());
    Ok(())
}

pub fn resolve_abstract(cli: &Cli, a: &ResolveAbstractArgs) -> Outcome {
    let game = game(&a.game.game)?;
    let partition = partition(&game, a.frontier)?;
    let checkpoints = checkpoints(a.recovery_iters, a.eval_every)?;
    let (abs, map) = build_abstraction(&game)?;
    let abstract_policy = match a.method {
        Method::Lp => solve_equilibrium(&abs)?.policy,
        Method::Cfr => cfr_solve_traced(&abs, a.iters, None, &Checkpoints::Never)?.policy,
    };
    let original = map.lift(&game, &abstract_policy);
    let cfvs = all_cfvs_from_best_response(&game, &original, &partition);
    out_dir(&a.out)?;

    let rows = compare(&game, &partition, &original, &cfvs, &checkpoints, cli.workers)?;
    let mut csv = Csv::new(&["iterations", "safe_expl", "unsafe_expl", "safe_vs_orig", "unsafe_vs_orig"]);
    for (c, safe, unsafe_policy) in &rows {
        csv.row(&[
            cell(*c as f64),
            cell(exploitability(&game, safe)),
            cell(exploitability(&game, unsafe_policy)),
            cell(versus(&game, safe, &original)),
            cell(versus(&game, unsafe_policy, &original)),
        ]);
    }
    let original_expl = exploitability(&game, &original);
    csv.comment(&format!("original_exploitability {}", cell(original_expl)));
    save(&a.out.join("abstract_lifted.txt"), &game, &original)?;
    csv.save(&a.out.join("comparison.csv"))?;
    println!("original_exploitability {original_expl:.9}");
    if let Some((_, safe, unsafe_policy)) = rows.last() {
        println!("safe_exploitability {:.9}", exploitability(&game, safe));
        println!("unsafe_exploitability {:.9}", exploitability(&game, unsafe_policy));
    }
    Ok(())
}

pub fn exploit(a: &ExploitArgs) -> Outcome {
    let game = game(&a.game.game)?;
    let policy = load_strategy(&a.strategy, &game)?.to_policy(&game)?;
    let value = game.expected_value(&policy);
    println!("exploitability {:.9}", exploitability(&game, &policy));
    println!("value_player1 {:.9}", value[0]);
    println!("best_response_player1 {:.9}", best_response_value(&game, &policy, Player::One));
    println!("best_response_player2 {:.9}", best_response_value(&game, &policy, Player::Two));
    Ok(())
}

pub fn validate(a: &ValidateArgs) -> Outcome {
    let game = game(&a.game.game)?;
    let partition = partition(&game, a.frontier)?;
    println!(
        "game {}: {} information sets, {} subgames, {} root information sets",
        game.name(),
        game.num_infosets(),
        partition.len(),
        partition.num_root_infosets()
    );
    if let Some(path) = &a.strategy {
        load_strategy(path, &game)?.to_policy(&game)?;
        println!("strategy ok");
    }
    if let Some(path) = &a.cfvs {
        let values = load_values(path)?;
        for sub in partition.subgames() {
            for p in Player::BOTH {
                values.for_subgame(sub, p)?;
            }
        }
        println!("cfvs ok");
    }
    Ok(())
}
