//! Brute-force reference computations that share no code with the solvers:
//! every quantity is a sum over leaves, with path probabilities recomputed
//! by walking parent links.

#![allow(dead_code)]

use cfrd_core::game::{Game, NodeId, NodeKind, Player};
use cfrd_core::profile::Policy;
use rand::Rng;

/// Probability factors `[player one, player two, chance]` of the actions on
/// the path from `top` (exclusive of anything above it) down to `h`.
pub fn path_factors(game: &Game, policy: &Policy, top: NodeId, h: NodeId) -> [f64; 3] {
    let mut f = [1.0; 3];
    let mut node = h;
    while node != top {
        let parent = game.parent(node).expect("top is an ancestor");
        let a = game.parent_action(node);
        match game.kind(parent) {
            NodeKind::Chance { outcomes } => f[2] *= outcomes[a].1,
            NodeKind::Decision { player, infoset } => f[player.index()] *= policy.dist(*infoset)[a],
            NodeKind::Terminal { .. } => unreachable!(),
        }
        node = parent;
    }
    f
}

pub fn is_ancestor(game: &Game, top: NodeId, mut h: NodeId) -> bool {
    loop {
        if h == top {
            return true;
        }
        match game.parent(h) {
            Some(p) => h = p,
            None => return false,
        }
    }
}

pub fn leaves(game: &Game) -> Vec<NodeId> {
    (0..game.num_nodes()).filter(|&h| game.payoffs(h).is_some()).collect()
}

/// Expected utilities of both players.
pub fn value(game: &Game, policy: &Policy) -> [f64; 2] {
    let mut v = [0.0; 2];
    for z in leaves(game) {
        let f = path_factors(game, policy, game.root(), z);
        let u = game.payoffs(z).unwrap();
        let p = f[0] * f[1] * f[2];
        v[0] += p * u[0];
        v[1] += p * u[1];
    }
    v
}

/// `Σ_{h ∈ set} Σ_{z ⊒ h} π_{-p}(z) π_p(h → z) u_p(z)`: the counterfactual
/// value of `player` at a set of histories, not normalized.
pub fn counterfactual_value(game: &Game, policy: &Policy, set: &[NodeId], player: Player) -> f64 {
    let mut total = 0.0;
    for z in leaves(game) {
        for &h in set {
            if is_ancestor(game, h, z) {
                let above = path_factors(game, policy, game.root(), h);
                let below = path_factors(game, policy, h, z);
                let opp = player.opponent().index();
                let reach = above[opp] * above[2] * below[0] * below[1] * below[2];
                total += reach * game.payoffs(z).unwrap()[player.index()];
            }
        }
    }
    total
}

/// Every pure assignment of actions to `infosets`, applied on top of `base`.
pub fn pure_strategies(game: &Game, base: &Policy, infosets: &[usize]) -> Vec<Policy> {
    let sizes: Vec<usize> = infosets.iter().map(|&i| game.infoset(i).num_actions()).collect();
    let mut choice = vec![0usize; infosets.len()];
    let mut out = Vec::new();
    loop {
        let mut p = base.clone();
        for (&i, &a) in infosets.iter().zip(&choice) {
            let d = p.dist_mut(i);
            d.fill(0.0);
            d[a] = 1.0;
        }
        out.push(p);
        let mut k = 0;
        loop {
            if k == choice.len() {
                return out;
            }
            choice[k] += 1;
            if choice[k] < sizes[k] {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

pub fn infosets_of(game: &Game, player: Player) -> Vec<usize> {
    (0..game.num_infosets()).filter(|&i| game.infoset(i).player == player).collect()
}

/// Best-response value of `player` against `policy`, by enumeration of
/// every pure strategy of `player`.
pub fn best_response_value(game: &Game, policy: &Policy, player: Player) -> f64 {
    pure_strategies(game, policy, &infosets_of(game, player))
        .iter()
        .map(|p| value(game, p)[player.index()])
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn exploitability(game: &Game, policy: &Policy) -> f64 {
    (best_response_value(game, policy, Player::One) + best_response_value(game, policy, Player::Two)) / 2.0
}

/// A random distribution; one draw in four is close to pure.
pub fn random_distribution(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let sharp = rng.gen_bool(0.25);
    let mut d: Vec<f64> = (0..n)
        .map(|_| {
            let x: f64 = rng.gen_range(1e-3..1.0);
            if sharp {
                x.powi(8)
            } else {
                -x.ln()
            }
        })
        .collect();
    let s: f64 = d.iter().sum();
    d.iter_mut().for_each(|x| *x /= s);
    d
}

pub fn random_policy(game: &Game, rng: &mut impl Rng) -> Policy {
    let mut p = Policy::uniform(game);
    for i in 0..game.num_infosets() {
        let d = random_distribution(rng, game.infoset(i).num_actions());
        p.dist_mut(i).copy_from_slice(&d);
    }
    p
}
