mod common;

use cfrd_core::best_response::{best_response_value, exploitability};
use cfrd_core::cfr::{CfrSolver, MemoryMeter, TableRole};
use cfrd_core::cfrd::{cfr_d, recover_full, CfrdOptions, IterationReport};
use cfrd_core::decomposition::{partition_game, Frontier};
use cfrd_core::game::Player;
use cfrd_core::games::build_game;
use cfrd_core::profile::Policy;

#[test]
fn empty_partition_reproduces_vanilla_cfr() {
    for name in ["kuhn", "leduc"] {
        let game = build_game(name, false).unwrap();
        let partition = partition_game(&game, &Frontier::None).unwrap();
        let out = cfr_d(&game, &partition, CfrdOptions::new(50, 0)).unwrap();
        let mut vanilla = CfrSolver::new(&game);
        vanilla.run(50);
        let (a, b) = (out.state.table(), vanilla.table());
        assert_eq!(a.num_rows(), b.num_rows());
        for row in a.rows() {
            let other = b.rows().find(|&r| b.infoset(r) == a.infoset(row)).unwrap();
            assert_eq!(a.regrets(row), b.regrets(other));
            assert_eq!(a.weights(row), b.weights(other));
        }
        assert_eq!(out.trunk_policy, vanilla.average_policy(&game));
    }
}

#[test]
fn averaged_root_values_are_arithmetic_means() {
    let game = build_game("leduc", false).unwrap();
    let partition = partition_game(&game, &Frontier::Natural).unwrap();
    let mut sums: Vec<[Vec<f64>; 2]> = partition
        .subgames()
        .iter()
        .map(|s| [vec![0.0; s.root_infosets(Player::One).len()], vec![0.0; s.root_infosets(Player::Two).len()]])
        .collect();
    let mut observer = |r: &IterationReport<'_>| {
        for (acc, sol) in sums.iter_mut().zip(r.solutions) {
            for p in 0..2 {
                for (a, v) in acc[p].iter_mut().zip(&sol.values[p]) {
                    *a += v;
                }
            }
        }
    };
    let mut options = CfrdOptions::new(30, 40);
    options.observer = Some(&mut observer);
    let out = cfr_d(&game, &partition, options).unwrap();
    for (sub, acc) in partition.subgames().iter().zip(&sums) {
        for p in Player::BOTH {
            for (set, total) in sub.root_infosets(p).iter().zip(&acc[p.index()]) {
                let mean = total / 30.0;
                assert!((out.cfvs.get(p, &set.key).unwrap() - mean).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn no_accumulators_inside_subgames() {
    let game = build_game("leduc", false).unwrap();
    let partition = partition_game(&game, &Frontier::Natural).unwrap();
    let meter = MemoryMeter::new();
    let mut options = CfrdOptions::new(5, 10);
    options.meter = Some(meter.clone());
    let out = cfr_d(&game, &partition, options).unwrap();
    let table = out.state.table();
    for row in table.rows() {
        assert!(partition.trunk_infosets().contains(&table.infoset(row)));
    }
    assert_eq!(table.num_rows(), partition.trunk_infosets().len());
    assert_eq!(meter.peak_for(TableRole::Full), 0);
    assert_eq!(meter.peak_for(TableRole::RootValues), partition.num_root_infosets());
    assert_eq!(meter.live_for(TableRole::Subgame), 0);
}

#[test]
fn average_regret_is_within_the_bound() {
    let game = build_game("kuhn", false).unwrap();
    let partition = partition_game(&game, &Frontier::Natural).unwrap();
    let t = 400;
    let mut weights = vec![0.0; game.num_infoset_actions()];
    let mut values = [0.0; 2];
    let mut observer = |r: &IterationReport<'_>| {
        let profile = r.profile.unwrap();
        for (i, info) in game.infosets().iter().enumerate() {
            let own = game.reach(profile, info.histories[0]).of(info.player);
            let offset = game.offsets()[i];
            for (a, p) in profile.dist(i).iter().enumerate() {
                weights[offset + a] += own * p;
            }
        }
        values[0] += r.values[0];
        values[1] += r.values[1];
    };
    let mut options = CfrdOptions::new(t, 50);
    options.record_profiles = true;
    options.observer = Some(&mut observer);
    let out = cfr_d(&game, &partition, options).unwrap();
    let mut average = Policy::uniform(&game);
    for i in 0..game.num_infosets() {
        let offset = game.offsets()[i];
        let d = &weights[offset..offset + game.infoset(i).num_actions()];
        let total: f64 = d.iter().sum();
        if total > 0.0 {
            let normalized: Vec<f64> = d.iter().map(|w| w / total).collect();
            average.dist_mut(i).copy_from_slice(&normalized);
        }
    }
    for p in Player::BOTH {
        let regret = best_response_value(&game, &average, p) - values[p.index()] / t as f64;
        assert!(regret <= out.report.bound, "player {p}: {regret} > {}", out.report.bound);
    }
    assert!(out.report.eps_s >= 0.0);
}

#[test]
fn recovered_strategy_is_close_to_equilibrium() {
    let game = build_game("kuhn", false).unwrap();
    let partition = partition_game(&game, &Frontier::Natural).unwrap();
    let out = cfr_d(&game, &partition, CfrdOptions::new(2000, 200)).unwrap();
    let full = recover_full(&game, &partition, &out.trunk_policy, &out.cfvs, 20_000).unwrap();
    let expl = exploitability(&game, &full);
    assert!(expl < 0.01, "exploitability {expl}");
    assert!((common::value(&game, &full)[0] + 1.0 / 18.0).abs() < 0.01);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let game = build_game("leduc", false).unwrap();
    let partition = partition_game(&game, &Frontier::Natural).unwrap();
    let run = |workers| {
        let mut options = CfrdOptions::new(10, 20);
        options.workers = workers;
        cfr_d(&game, &partition, options).unwrap()
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.trunk_policy, b.trunk_policy);
    assert_eq!(a.cfvs, b.cfvs);
}

#[test]
fn zero_iterations_are_rejected() {
    let game = build_game("kuhn", false).unwrap();
    let partition = partition_game(&game, &Frontier::Natural).unwrap();
    assert!(cfr_d(&game, &partition, CfrdOptions::new(0, 10)).is_err());
    assert!(cfr_d(&game, &partition, CfrdOptions::new(10, 0)).is_err());
    assert!(recover_full(&game, &partition, &Policy::uniform(&game), &Default::default(), 0).is_err());
}
