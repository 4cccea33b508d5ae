mod common;

use std::collections::HashMap;

use cfrd_core::decomposition::{
    build_recovery_game, partition_game, stitch_policy, subgame_fragment, Frontier, RecoverySolver, RootValues, SubgamePartition,
};
use cfrd_core::game::{Game, NodeKind, Player};
use cfrd_core::games::build_game;
use cfrd_core::seqform::solve_equilibrium;
use cfrd_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check_partition(game: &Game, partition: &SubgamePartition) -> Result<(), TestCaseError> {
    for (s, sub) in partition.subgames().iter().enumerate() {
        for &r in &sub.roots {
            prop_assert!(partition.is_root(r));
            for h in game.descendants(r) {
                prop_assert_eq!(partition.owner(h), Some(s));
            }
        }
        for p in Player::BOTH {
            let mut covered: Vec<usize> = sub.root_infosets(p).iter().flat_map(|set| set.roots.clone()).collect();
            covered.sort_unstable();
            prop_assert_eq!(covered, (0..sub.roots.len()).collect::<Vec<_>>());
            for set in sub.root_infosets(p) {
                for &i in &set.roots {
                    prop_assert_eq!(&game.augmented_infoset(sub.roots[i], p), &set.key);
                }
            }
        }
    }
    let nodes_in_subgames: usize = partition.subgames().iter().map(|s| s.num_nodes).sum();
    prop_assert_eq!(nodes_in_subgames + partition.num_trunk_nodes(), game.num_nodes());
    // No augmented set of any root is shared with another subgame.
    for p in Player::BOTH {
        let mut home: HashMap<_, usize> = HashMap::new();
        for (s, sub) in partition.subgames().iter().enumerate() {
            for set in sub.root_infosets(p) {
                prop_assert_eq!(*home.entry(set.key.clone()).or_insert(s), s);
            }
        }
    }
    for (i, info) in game.infosets().iter().enumerate() {
        let side = partition.owner(info.histories[0]);
        prop_assert!(info.histories.iter().all(|&h| partition.owner(h) == side));
        match side {
            None => prop_assert!(partition.trunk_infosets().contains(&i)),
            Some(s) => prop_assert!(partition.subgames()[s].infosets.contains(&i)),
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_frontiers_give_valid_partitions(leduc in any::<bool>(), depth in 1usize..7, seed in any::<u64>(), density in 0.1f64..1.0) {
        let game = build_game(if leduc { "leduc" } else { "kuhn" }, false).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let marked: Vec<bool> = (0..game.num_nodes()).map(|h| game.depth(h) == depth && rng.gen_bool(density)).collect();
        let frontier = Frontier::Custom(Box::new(move |_, h| marked[h]));
        match partition_game(&game, &frontier) {
            Ok(partition) => check_partition(&game, &partition)?,
            Err(Error::InfosetCrossesBoundary { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}

#[test]
fn natural_partitions_are_valid() {
    for name in ["rps", "kuhn", "leduc", "leduc-abstract"] {
        let game = build_game(name, false).unwrap();
        check_partition(&game, &partition_game(&game, &Frontier::Natural).unwrap()).unwrap();
    }
}

/// Opponent root values of `policy` itself, from the leaf-sum oracle.
fn own_values(game: &Game, partition: &SubgamePartition, policy: &cfrd_core::profile::Policy) -> RootValues {
    let mut cfvs = RootValues::new();
    for sub in partition.subgames() {
        for p in Player::BOTH {
            for set in sub.root_infosets(p) {
                let nodes: Vec<_> = set.roots.iter().map(|&i| sub.roots[i]).collect();
                cfvs.insert(p, set.key.clone(), common::counterfactual_value(game, policy, &nodes, p));
            }
        }
    }
    cfvs
}

#[test]
fn gadget_construction_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for name in ["rps", "kuhn", "leduc"] {
        let game = build_game(name, false).unwrap();
        let partition = partition_game(&game, &Frontier::Natural).unwrap();
        let policy = common::random_policy(&game, &mut rng);
        let cfvs = if name == "leduc" {
            cfrd_core::baselines::all_cfvs_from_best_response(&game, &policy, &partition)
        } else {
            own_values(&game, &partition, &policy)
        };
        for (s, sub) in partition.subgames().iter().enumerate() {
            for p in Player::BOTH {
                let o = p.opponent();
                let rec = build_recovery_game(&game, &partition, s, &policy, p, &cfvs).unwrap();
                let total: f64 = rec.chance.iter().sum();
                assert!((total - 1.0).abs() < 1e-12);
                let weights: Vec<f64> = sub.roots.iter().map(|&r| game.reach(&policy, r).excluding(o)).collect();
                assert!((rec.k - weights.iter().sum::<f64>()).abs() < 1e-12);
                // Choosing T at every copy in I is worth exactly v_o(I).
                for (j, set) in sub.root_infosets(o).iter().enumerate() {
                    let t: f64 = set.roots.iter().map(|&i| rec.chance[i] * rec.t_utilities[j]).sum();
                    let v = cfvs.get(o, &set.key).unwrap();
                    assert!((t - v).abs() <= 1e-12 * v.abs().max(1.0), "{name}: {t} vs {v}");
                }
                // F-subtrees mirror the subgame with utilities scaled by k.
                for (i, &r) in sub.roots.iter().enumerate() {
                    let f = rec.game.child(rec.choice_node(i), 1);
                    assert_eq!(rec.original(f), Some(r));
                    let copies = rec.game.descendants(f);
                    assert_eq!(copies.len(), game.descendants(r).len());
                    for g in copies {
                        let h = rec.original(g).unwrap();
                        match (rec.game.kind(g), game.kind(h)) {
                            (NodeKind::Terminal { payoffs: a }, NodeKind::Terminal { payoffs: b }) => {
                                assert!((a[0] - rec.k * b[0]).abs() < 1e-12);
                            }
                            (NodeKind::Chance { outcomes: a }, NodeKind::Chance { outcomes: b }) => assert_eq!(a, b),
                            (NodeKind::Decision { player: a, infoset }, NodeKind::Decision { player: b, .. }) => {
                                assert_eq!(a, b);
                                assert_eq!(rec.original_infoset(*infoset), game.infoset_of(h));
                            }
                            other => panic!("mismatched node kinds {other:?}"),
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn gadget_equilibrium_holds_opponent_to_stored_values() {
    let game = build_game("kuhn", false).unwrap();
    let partition = partition_game(&game, &Frontier::Natural).unwrap();
    let eq = solve_equilibrium(&game).unwrap();
    // Best-response values, which the equilibrium's subgame strategy attains.
    let cfvs = cfrd_core::baselines::all_cfvs_from_best_response(&game, &eq.policy, &partition);
    for (s, sub) in partition.subgames().iter().enumerate() {
        for p in Player::BOTH {
            let o = p.opponent();
            let rec = build_recovery_game(&game, &partition, s, &eq.policy, p, &cfvs).unwrap();
            let mut solver = RecoverySolver::new(&rec);
            solver.run(20_000);
            let gadget = solver.gadget_policy();
            let eps = 2.0 * common::exploitability(&rec.game, &gadget);
            let deviations = common::pure_strategies(&rec.game, &gadget, &common::infosets_of(&rec.game, o));
            for set in sub.root_infosets(o) {
                let copies: Vec<_> = set.roots.iter().map(|&i| rec.choice_node(i)).collect();
                let best = deviations
                    .iter()
                    .map(|d| common::counterfactual_value(&rec.game, d, &copies, o))
                    .fold(f64::NEG_INFINITY, f64::max);
                let v = cfvs.get(o, &set.key).unwrap();
                assert!(best >= v - 1e-9 && best <= v + eps + 1e-9, "{} vs {v} (eps {eps})", best);
            }
        }
    }
}

#[test]
fn stitching_replaces_only_the_subgame() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let game = build_game("rps", false).unwrap();
    let partition = partition_game(&game, &Frontier::Natural).unwrap();
    let base = common::random_policy(&game, &mut rng);
    let donor = common::random_policy(&game, &mut rng);
    let same = subgame_fragment(&game, &partition, 0, &base, Player::Two).unwrap();
    let mut identity = base.clone();
    stitch_policy(&game, &mut identity, &partition, 0, &same).unwrap();
    assert_eq!(identity, base);

    let fragment = subgame_fragment(&game, &partition, 0, &donor, Player::Two).unwrap();
    let mut stitched = base.clone();
    stitch_policy(&game, &mut stitched, &partition, 0, &fragment).unwrap();
    for i in 0..game.num_infosets() {
        let sum: f64 = stitched.dist(i).iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        let expected = if partition.trunk_infosets().contains(&i) { base.dist(i) } else { donor.dist(i) };
        assert_eq!(stitched.dist(i), expected);
    }
    // The value changes only through leaves below the subgame.
    let delta: f64 = common::leaves(&game)
        .into_iter()
        .filter(|&z| partition.owner(z).is_some())
        .map(|z| {
            let a = common::path_factors(&game, &stitched, game.root(), z);
            let b = common::path_factors(&game, &base, game.root(), z);
            (a[0] * a[1] * a[2] - b[0] * b[1] * b[2]) * game.payoffs(z).unwrap()[0]
        })
        .sum();
    assert!((common::value(&game, &stitched)[0] - common::value(&game, &base)[0] - delta).abs() < 1e-12);
}

#[test]
fn unreachable_subgame_is_reported() {
    let game = build_game("kuhn", false).unwrap();
    let partition = partition_game(&game, &Frontier::Natural).unwrap();
    let mut policy = cfrd_core::profile::Policy::uniform(&game);
    let sub = &partition.subgames()[0];
    // Player one never takes an action leading into the first subgame.
    for &root in &sub.roots {
        let parent = game.parent(root).unwrap();
        if let NodeKind::Decision { infoset, .. } = game.kind(parent) {
            let d = policy.dist_mut(*infoset);
            d.fill(0.0);
            d[1 - game.parent_action(root)] = 1.0;
        }
    }
    let cfvs = own_values(&game, &partition, &policy);
    assert!(matches!(
        build_recovery_game(&game, &partition, 0, &policy, Player::One, &cfvs),
        Err(Error::UnreachableSubgame(0))
    ));
}
