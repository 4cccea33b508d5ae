//! Exact equilibria of small games through the sequence-form linear program.

use std::collections::HashMap;

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};
use crate::game::{Game, NodeKind, Player};
use crate::profile::{Policy, StrategyProfile};

/// Sequence numbering of one player: sequence 0 is the empty sequence and
/// `(I, a)` maps to `1 + base[I] + a`.
struct Sequences {
    base: HashMap<usize, usize>,
    len: usize,
    /// (information set, parent sequence) for each of the player's sets.
    parents: Vec<(usize, usize)>,
}

impl Sequences {
    fn new(game: &Game, player: Player) -> Self {
        let mut base = HashMap::new();
        let mut len = 1;
        let mut parents = Vec::new();
        for (i, info) in game.infosets().iter().enumerate() {
            if info.player != player {
                continue;
            }
            base.insert(i, len - 1);
            len += info.num_actions();
        }
        for (i, info) in game.infosets().iter().enumerate() {
            if info.player == player {
                let seq = game.own_sequence(info.histories[0], player);
                parents.push((i, seq.last().map_or(0, |&(j, a)| 1 + base[&j] + a)));
            }
        }
        Sequences { base, len, parents }
    }

    fn of(&self, game: &Game, h: usize, player: Player) -> usize {
        game.own_sequence(h, player).last().map_or(0, |&(i, a)| 1 + self.base[&i] + a)
    }
}

/// Solves for `player`'s maximin realization plan against the payoff
/// matrix `payoff[(own, opp)]` (entries are `player`'s expected utility).
fn solve_side(game: &Game, own: &Sequences, opp: &Sequences, payoff: &HashMap<(usize, usize), f64>) -> Result<(Vec<f64>, f64)> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let x: Vec<_> = (0..own.len).map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    // One dual variable per opponent constraint row: the root row first.
    let q: Vec<_> = (0..=opp.parents.len())
        .map(|row| lp.add_var(if row == 0 { 1.0 } else { 0.0 }, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();

    lp.add_constraint([(x[0], 1.0)], ComparisonOp::Eq, 1.0);
    for &(i, parent) in &own.parents {
        let b = own.base[&i];
        let mut expr = vec![(x[parent], -1.0)];
        expr.extend((0..game.infoset(i).num_actions()).map(|a| (x[1 + b + a], 1.0)));
        lp.add_constraint(expr, ComparisonOp::Eq, 0.0);
    }

    // Column s of the opponent's constraint matrix, dotted with q, must not
    // exceed the payoff of s against x.
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); opp.len];
    columns[0].push((0, 1.0));
    for (row, &(j, parent)) in opp.parents.iter().enumerate() {
        columns[parent].push((row + 1, -1.0));
        let b = opp.base[&j];
        for a in 0..game.infoset(j).num_actions() {
            columns[1 + b + a].push((row + 1, 1.0));
        }
    }
    let mut by_opp: Vec<Vec<(usize, f64)>> = vec![Vec::new(); opp.len];
    for (&(s, t), &v) in payoff {
        by_opp[t].push((s, v));
    }
    for (t, column) in columns.iter().enumerate() {
        let mut expr: Vec<_> = column.iter().map(|&(row, c)| (q[row], c)).collect();
        expr.extend(by_opp[t].iter().map(|&(s, v)| (x[s], -v)));
        lp.add_constraint(expr, ComparisonOp::Le, 0.0);
    }

    let solution = lp
        .solve()
        .map_err(|e| Error::LinearProgram(e.to_string()))?
        .into_solution()
        .map_err(|_| Error::LinearProgram("solve interrupted".into()))?;
    Ok((x.iter().map(|&v| solution.var_value(v).max(0.0)).collect(), solution.objective()))
}

/// Equilibrium of a two-player zero-sum game with its value for player one.
#[derive(Clone, Debug)]
pub struct Equilibrium {
    pub policy: Policy,
    pub profile: StrategyProfile,
    pub value: f64,
}

/// Computes an equilibrium by solving one sequence-form linear program per
/// player. Information sets that a plan never reaches play uniformly.
pub fn solve_equilibrium(game: &Game) -> Result<Equilibrium> {
    let seqs = [Sequences::new(game, Player::One), Sequences::new(game, Player::Two)];
    let mut a: HashMap<(usize, usize), f64> = HashMap::new();
    let mut chance = vec![1.0; game.num_nodes()];
    for h in 0..game.num_nodes() {
        match game.kind(h) {
            NodeKind::Chance { outcomes } => {
                for (k, c) in game.children(h).enumerate() {
                    chance[c] = chance[h] * outcomes[k].1;
                }
            }
            NodeKind::Decision { .. } => {
                for c in game.children(h) {
                    chance[c] = chance[h];
                }
            }
            NodeKind::Terminal { payoffs } => {
                let key = (seqs[0].of(game, h, Player::One), seqs[1].of(game, h, Player::Two));
                *a.entry(key).or_default() += chance[h] * payoffs[0];
            }
        }
    }
    let transposed: HashMap<(usize, usize), f64> = a.iter().map(|(&(s, t), &v)| ((t, s), -v)).collect();

    let (x1, value) = solve_side(game, &seqs[0], &seqs[1], &a)?;
    let (x2, _) = solve_side(game, &seqs[1], &seqs[0], &transposed)?;

    let mut policy = Policy::uniform(game);
    for (p, x) in [(0, &x1), (1, &x2)] {
        for &(i, parent) in &seqs[p].parents {
            let b = seqs[p].base[&i];
            let n = game.infoset(i).num_actions();
            let plan = &x[1 + b..1 + b + n];
            let total: f64 = plan.iter().sum();
            if x[parent] > 1e-12 && total > 0.0 {
                for (d, v) in policy.dist_mut(i).iter_mut().zip(plan) {
                    *d = v / total;
                }
            }
        }
    }
    Ok(Equilibrium {
        profile: StrategyProfile::from_policy(game, &policy),
        policy,
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::best_response::exploitability;
    use crate::games::build_game;

    #[test]
    fn kuhn_equilibrium_is_exact() {
        let game = build_game("kuhn", false).unwrap();
        let eq = solve_equilibrium(&game).unwrap();
        assert!((eq.value + 1.0 / 18.0).abs() < 1e-9, "{}", eq.value);
        assert!(exploitability(&game, &eq.policy) < 1e-9);
    }

    #[test]
    fn rps_equilibrium_is_uniform() {
        let game = build_game("rps", false).unwrap();
        let eq = solve_equilibrium(&game).unwrap();
        for d in eq.policy.as_slice() {
            assert!((d - 1.0 / 3.0).abs() < 1e-9);
        }
    }
}
