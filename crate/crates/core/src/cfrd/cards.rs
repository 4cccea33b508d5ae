//! CFR for subgames that start with a public board card and then have
//! public betting over one private card per player, vectorized over every
//! (board, private card) pair at once.
//!
//! The structure is read off the game tree and checked: every subgame root
//! is a deal `(c1, c2)` of two distinct cards, each root is a chance node
//! over the remaining cards with equal probability, the betting tree below
//! each board has the same shape, each information set holds exactly one
//! history per board and owner card, and every leaf either pays a fixed
//! amount or is a showdown decided by an ordering of the cards given the
//! board. Subgames that fail any check are solved with the generic engine.
//!
//! Reach probabilities at the roots must factor into per-card terms, which
//! holds for trunk reach (each player's trunk reach depends only on their
//! own card) and for the gadget and fixed-trunk variants built here.

use std::collections::HashMap;
use std::sync::Arc;

use wide::f64x4;

use super::kernel::{GenericKernel, SubgameKernel, SubgameSolution};
use crate::cfr::{regret_matching_into, MemoryMeter, MeterGuard, TableRole};
use crate::decomposition::{RecoveryGame, Subgame};
use crate::game::{Game, NodeKind, Player, ReachProbabilities};
use crate::profile::{Policy, StrategyProfile};

/// Largest number of distinct cards supported.
const N: usize = 6;
/// Lane stride per board, padded for whole-vector arithmetic.
const S: usize = 8;
/// One lane per (board, card), board-major.
const L: usize = N * S;

/// Vectors per lane array and per board.
const W: usize = L / 4;
const VB: usize = S / 4;

type Cards = [f64; N];
type Lanes = [f64x4; W];
type Row = [f64x4; VB];

fn lanes(f: impl Fn(usize) -> f64) -> Lanes {
    std::array::from_fn(|v| f64x4::new(std::array::from_fn(|j| f(4 * v + j))))
}

fn lane(x: &Lanes, i: usize) -> f64 {
    x[i / 4].as_array()[i % 4]
}

/// `v[c]` in every board's lane for card `c`, zero in the padding.
fn spread(v: &Cards) -> Lanes {
    lanes(|i| v.get(i % S).copied().unwrap_or(0.0))
}

#[derive(Clone, Copy, Debug)]
enum Node {
    /// Index into the decision table.
    Decision(usize),
    /// Index into the leaf table.
    Leaf(usize),
}

#[derive(Clone, Copy, Debug)]
struct Decision {
    player: Player,
    /// Template index of the first child; children are contiguous.
    first: usize,
    len: usize,
    /// First strategy row of this decision.
    row: usize,
}

#[derive(Clone, Debug)]
enum Leaf {
    /// Player one wins a fixed amount per board whatever the cards.
    Fixed(Lanes),
    /// Player one wins the board's stake when their card ranks higher and
    /// loses it when lower: `table[b][c'][c]` is the amount the holder of
    /// card `c` wins against card `c'` on board `b`.
    Showdown { table: Box<[[Row; N]; N]> },
}

/// Payoff structure of one leaf on one board.
enum BoardLeaf {
    Fixed(f64),
    Showdown { stake: f64, class: [usize; N] },
}

/// Where a subgame information set lives in the dense layout.
#[derive(Clone, Copy, Debug)]
struct Slot {
    player: Player,
    /// Offset and length in the generic subgame layout.
    offset: usize,
    len: usize,
    row: usize,
    lane: usize,
}

pub(crate) struct CardKernel {
    generic: GenericKernel,
    nodes: Vec<Node>,
    decisions: Vec<Decision>,
    /// Total action count of the template.
    rows: usize,
    leaves: Vec<Leaf>,
    /// One for the (board, card) pairs a player can hold, zero otherwise.
    mask: Lanes,
    slots: Vec<Slot>,
    num_pairs: usize,
    /// Probability of each board card.
    board_chance: f64,
    root_cards: Vec<[usize; 2]>,
}

impl CardKernel {
    pub fn try_new(game: &Game, sub: &Subgame) -> Option<CardKernel> {
        let generic = GenericKernel::new(game, sub);
        let NodeKind::Chance { outcomes } = game.kind(game.root()) else {
            return None;
        };
        if outcomes.len() > N {
            return None;
        }
        let card_of: HashMap<&str, usize> = outcomes.iter().enumerate().map(|(i, (l, _))| (l.as_str(), i)).collect();
        let ncards = outcomes.len();

        let mut root_cards = Vec::with_capacity(sub.roots.len());
        let mut seen = [[false; N]; N];
        for &r in &sub.roots {
            let path = game.path(r);
            if path.len() < 2 {
                return None;
            }
            let (c1, c2) = (*card_of.get(path[0])?, *card_of.get(path[1])?);
            if c1 == c2 || seen[c1][c2] {
                return None;
            }
            seen[c1][c2] = true;
            root_cards.push([c1, c2]);
        }
        if root_cards.len() != ncards * (ncards - 1) {
            return None;
        }

        // Template betting tree, from the first board of the first root.
        let NodeKind::Chance { outcomes: first_boards } = game.kind(sub.roots[0]) else {
            return None;
        };
        let board_chance = first_boards.first()?.1;
        let mut template = vec![game.children(sub.roots[0]).start];
        let mut nodes = Vec::new();
        let mut decisions = Vec::new();
        let mut rows = 0;
        let mut num_leaves = 0;
        let mut i = 0;
        while i < template.len() {
            let h = template[i];
            match game.kind(h) {
                NodeKind::Decision { player, .. } => {
                    let first = template.len();
                    template.extend(game.children(h));
                    let len = template.len() - first;
                    nodes.push(Node::Decision(decisions.len()));
                    decisions.push(Decision {
                        player: *player,
                        first,
                        len,
                        row: rows,
                    });
                    rows += len;
                }
                NodeKind::Terminal { .. } => {
                    nodes.push(Node::Leaf(num_leaves));
                    num_leaves += 1;
                }
                NodeKind::Chance { .. } => return None,
            }
            i += 1;
        }
        if !matches!(nodes[0], Node::Decision(_)) {
            return None;
        }

        let local: HashMap<usize, usize> = generic.tree.infosets.iter().enumerate().map(|(i, info)| (info.global, i)).collect();
        let mut boards = [false; N];
        let mut payoffs = vec![vec![[[None; N]; N]; num_leaves]; N];
        let mut placed: Vec<Option<(usize, usize)>> = vec![None; local.len()];
        let mut owner: HashMap<(usize, usize), usize> = HashMap::new();

        for (r, &[c1, c2]) in sub.roots.iter().zip(&root_cards) {
            let NodeKind::Chance { outcomes: deals } = game.kind(*r) else {
                return None;
            };
            if deals.len() != ncards - 2 {
                return None;
            }
            for (a, child) in game.children(*r).enumerate() {
                let (label, p) = &deals[a];
                let b = *card_of.get(label.as_str())?;
                if b == c1 || b == c2 || *p != board_chance {
                    return None;
                }
                boards[b] = true;
                let mut map = vec![child];
                for (t, node) in nodes.iter().enumerate() {
                    let h = map[t];
                    match *node {
                        Node::Decision(k) => {
                            let d = decisions[k];
                            let NodeKind::Decision { player: q, infoset } = *game.kind(h) else {
                                return None;
                            };
                            if q != d.player || game.children(h).len() != d.len {
                                return None;
                            }
                            let li = *local.get(&infoset)?;
                            let card = if q == Player::One { c1 } else { c2 };
                            let at = (d.row, b * S + card);
                            if *placed[li].get_or_insert(at) != at || *owner.entry(at).or_insert(li) != li {
                                return None;
                            }
                            map.extend(game.children(h));
                        }
                        Node::Leaf(l) => {
                            let NodeKind::Terminal { payoffs: u } = *game.kind(h) else {
                                return None;
                            };
                            if u[1] != -u[0] {
                                return None;
                            }
                            payoffs[b][l][c1][c2] = Some(u[0]);
                        }
                    }
                }
            }
        }

        let mut leaves = Vec::with_capacity(num_leaves);
        for l in 0..num_leaves {
            let per_board: Vec<(usize, BoardLeaf)> = (0..N)
                .filter(|&b| boards[b])
                .map(|b| classify(&payoffs[b][l], b, ncards).map(|leaf| (b, leaf)))
                .collect::<Option<_>>()?;
            let leaf = if per_board.iter().all(|(_, x)| matches!(x, BoardLeaf::Fixed(_))) {
                let mut u = [0.0; L];
                for (b, x) in &per_board {
                    if let BoardLeaf::Fixed(v) = x {
                        u[b * S..b * S + N].fill(*v);
                    }
                }
                Leaf::Fixed(lanes(|i| u[i]))
            } else {
                let mut table = Box::new([[[0.0; S]; N]; N]);
                for (b, x) in per_board {
                    let BoardLeaf::Showdown { stake, class } = x else {
                        return None;
                    };
                    for c in (0..ncards).filter(|&c| c != b) {
                        for o in (0..ncards).filter(|&o| o != b && o != c) {
                            table[b][o][c] = match class[c].cmp(&class[o]) {
                                std::cmp::Ordering::Greater => stake,
                                std::cmp::Ordering::Less => -stake,
                                std::cmp::Ordering::Equal => 0.0,
                            };
                        }
                    }
                }
                let table = Box::new(table.map(|board| board.map(|r| std::array::from_fn(|v| f64x4::new(std::array::from_fn(|j| r[4 * v + j]))))));
                Leaf::Showdown { table }
            };
            leaves.push(leaf);
        }

        let mut slots = Vec::with_capacity(local.len());
        for (li, info) in generic.tree.infosets.iter().enumerate() {
            let (row, lane) = placed[li]?;
            slots.push(Slot {
                player: info.player,
                offset: info.offset,
                len: info.len,
                row,
                lane,
            });
        }
        let mut mask = [0.0; L];
        for b in (0..N).filter(|&b| boards[b]) {
            for c in (0..ncards).filter(|&c| c != b) {
                mask[b * S + c] = 1.0;
            }
        }
        Some(CardKernel {
            num_pairs: generic.tree.num_pairs,
            generic,
            nodes,
            decisions,
            rows,
            leaves,
            mask: lanes(|i| mask[i]),
            slots,
            board_chance,
            root_cards,
        })
    }

    /// Per-card trunk reach of each player and the chance reach, when the
    /// root reach factors that way.
    fn factor(&self, reach: &[ReachProbabilities]) -> Option<([Cards; 2], f64)> {
        let mut own = [[f64::NAN; N]; 2];
        let chance = reach.first()?.chance;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        for (r, cards) in reach.iter().zip(&self.root_cards) {
            if !close(r.chance, chance) {
                return None;
            }
            for (p, v) in [(0, r.player_one), (1, r.player_two)] {
                let slot = &mut own[p][cards[p]];
                if slot.is_nan() {
                    *slot = v;
                } else if !close(*slot, v) {
                    return None;
                }
            }
        }
        Some((own.map(|v| v.map(|x| if x.is_nan() { 0.0 } else { x })), chance))
    }

    fn solver(self: &Arc<Self>, alpha: [Cards; 2], beta: [Cards; 2], scale: f64, tf: Option<TfLayer>) -> CardSolver {
        CardSolver {
            kernel: Arc::clone(self),
            alpha: [spread(&alpha[0]), spread(&alpha[1])],
            beta: [spread(&beta[0]), spread(&beta[1])],
            scale,
            tf,
            regret: vec![[f64x4::ZERO; W]; self.rows],
            weight: vec![[f64x4::ZERO; W]; self.rows],
            sigma: vec![[f64x4::ZERO; W]; self.rows],
            reach: vec![[[f64x4::ZERO; W]; 2]; self.nodes.len()],
            value: vec![[[f64x4::ZERO; W]; 2]; self.nodes.len()],
            iterations: 0,
        }
    }

    /// Solver for the gadget of `recovery`, which must be built on this
    /// kernel's subgame.
    pub fn gadget(self: &Arc<Self>, recovery: &RecoveryGame) -> Option<CardSolver> {
        let p = recovery.player.index();
        let o = 1 - p;
        let mut own = [f64::NAN; N];
        let mut t_value = [0.0; N];
        let mut present = [false; N];
        for (i, cards) in self.root_cards.iter().enumerate() {
            // The copy's chance weight times k is the recovering player's
            // trunk reach times chance.
            let x = recovery.chance[i] * recovery.k;
            let slot = &mut own[cards[p]];
            if slot.is_nan() {
                *slot = x;
            } else if (*slot - x).abs() > 1e-12 * x.abs().max(slot.abs()) {
                return None;
            }
            t_value[cards[o]] += recovery.chance[i] * recovery.t_utilities[recovery.root_set[i]];
            present[cards[o]] = true;
        }
        let own = own.map(|v| if v.is_nan() { 0.0 } else { v });
        let mut alpha = [[1.0; N]; 2];
        let mut beta = [[1.0; N]; 2];
        alpha[p] = own;
        beta[p] = own;
        let tf = TfLayer {
            player: recovery.player.opponent(),
            t_value,
            present,
            regret: [[0.0; 2]; N],
            sigma: [[0.5; 2]; N],
        };
        Some(self.solver(alpha, beta, self.board_chance, Some(tf)))
    }

    /// Solver for the subgame with both players' trunk reach folded into a
    /// chance event over the roots, normalized by the total joint reach.
    pub fn fixed_trunk(self: &Arc<Self>, reach: &[ReachProbabilities]) -> Option<CardSolver> {
        let (own, chance) = self.factor(reach)?;
        let total: f64 = reach.iter().map(|r| r.joint()).sum();
        if !(total > 0.0) {
            return None;
        }
        Some(self.solver(own, own, self.board_chance * chance / total, None))
    }
}

impl SubgameKernel for Arc<CardKernel> {
    fn solve(&self, reach: &[ReachProbabilities], iterations: u64, meter: Option<&Arc<MemoryMeter>>, keep_strategy: bool) -> SubgameSolution {
        let Some((own, chance)) = self.factor(reach) else {
            return self.generic.solve(reach, iterations, meter, keep_strategy);
        };
        let avg = {
            let _guard = MeterGuard::new(meter, TableRole::Subgame, 2 * self.num_pairs);
            let mut solver = self.solver([[1.0; N]; 2], own, self.board_chance * chance, None);
            solver.run(iterations);
            solver.average()
        };
        let (values, eps) = self.generic.evaluate(reach, &avg);
        SubgameSolution {
            values,
            eps,
            strategy: keep_strategy.then_some(avg),
        }
    }

    fn write_strategy(&self, solution: &SubgameSolution, policy: &mut Policy) {
        self.generic.write_strategy(solution, policy);
    }
}

/// Splits a leaf's payoff table on one board into a fixed amount or a
/// showdown.
fn classify(pay: &[[Option<f64>; N]; N], board: usize, ncards: usize) -> Option<BoardLeaf> {
    let valid = |c: usize| c < ncards && c != board;
    let mut entries = Vec::new();
    for c1 in (0..N).filter(|&c| valid(c)) {
        for c2 in (0..N).filter(|&c| valid(c) && c != c1) {
            entries.push((c1, c2, pay[c1][c2]?));
        }
    }
    let first = entries.first()?.2;
    if entries.iter().all(|e| e.2 == first) {
        return Some(BoardLeaf::Fixed(first));
    }
    let stake = entries.iter().map(|e| e.2.abs()).fold(0.0, f64::max);
    let mut wins = [0usize; N];
    for &(c1, _, u) in &entries {
        if u > 0.0 {
            wins[c1] += 1;
        }
    }
    let mut levels: Vec<usize> = (0..N).filter(|&c| valid(c)).map(|c| wins[c]).collect();
    levels.sort_unstable();
    levels.dedup();
    let mut class = [0; N];
    for c in (0..N).filter(|&c| valid(c)) {
        class[c] = levels.binary_search(&wins[c]).ok()?;
    }
    for &(c1, c2, u) in &entries {
        let expected = match class[c1].cmp(&class[c2]) {
            std::cmp::Ordering::Greater => stake,
            std::cmp::Ordering::Less => -stake,
            std::cmp::Ordering::Equal => 0.0,
        };
        if u != expected {
            return None;
        }
    }
    Some(BoardLeaf::Showdown { stake, class })
}

/// The opponent's terminate-or-follow choice at the gadget roots, one
/// information set per opponent card.
#[derive(Clone, Debug)]
struct TfLayer {
    player: Player,
    /// Counterfactual value of terminating, per card.
    t_value: Cards,
    present: [bool; N],
    regret: [[f64; 2]; N],
    sigma: [[f64; 2]; N],
}

/// Incremental CFR state of one subgame solve.
///
/// Player `p`'s counterfactual value in lane `(b, c)` is
/// `scale · alpha[p] · Σ_{c'} beta[o] · ρ_o · u_p` over the opponent's cards
/// `c'`, where `ρ_o` is the opponent's reach inside the subgame.
pub(crate) struct CardSolver {
    kernel: Arc<CardKernel>,
    alpha: [Lanes; 2],
    beta: [Lanes; 2],
    scale: f64,
    tf: Option<TfLayer>,
    /// Per strategy row.
    regret: Vec<Lanes>,
    weight: Vec<Lanes>,
    sigma: Vec<Lanes>,
    /// Per template node, both players' own reach.
    reach: Vec<[Lanes; 2]>,
    /// Per template node, both players' counterfactual values.
    value: Vec<[Lanes; 2]>,
    iterations: u64,
}

impl CardSolver {
    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn run(&mut self, iterations: u64) {
        for _ in 0..iterations {
            self.iterate();
        }
    }

    fn iterate(&mut self) {
        let kernel = Arc::clone(&self.kernel);
        let k = &*kernel;
        let CardSolver {
            alpha,
            beta,
            scale,
            tf,
            regret,
            weight,
            sigma,
            reach,
            value,
            ..
        } = self;
        let scale = *scale;

        let zero = f64x4::ZERO;
        for d in &k.decisions {
            let rows = d.row..d.row + d.len;
            let mut total = [zero; W];
            for r in &regret[rows.clone()] {
                for i in 0..W {
                    total[i] += r[i].max(zero);
                }
            }
            let uniform = f64x4::splat(1.0 / d.len as f64);
            let mut positive = [zero; W];
            let mut inv = [zero; W];
            for i in 0..W {
                positive[i] = total[i].simd_gt(zero);
                inv[i] = positive[i].select(f64x4::splat(1.0) / total[i], zero);
            }
            for (r, s) in regret[rows.clone()].iter().zip(&mut sigma[rows]) {
                for i in 0..W {
                    s[i] = positive[i].select(r[i].max(zero) * inv[i], uniform);
                }
            }
        }

        let mut initial = [[1.0; N]; 2];
        if let Some(tf) = tf.as_mut() {
            let o = tf.player.index();
            for c in 0..N {
                if tf.present[c] {
                    regret_matching_into(&tf.regret[c], &mut tf.sigma[c]);
                    initial[o][c] = tf.sigma[c][1];
                }
            }
        }
        for (p, init) in initial.iter().enumerate() {
            let init = spread(init);
            for i in 0..W {
                reach[0][p][i] = k.mask[i] * init[i];
            }
        }

        for (t, node) in k.nodes.iter().enumerate() {
            let Node::Decision(di) = *node else { continue };
            let d = k.decisions[di];
            let p = d.player.index();
            let o = 1 - p;
            let (lo, hi) = reach.split_at_mut(d.first);
            let here = &lo[t];
            for (a, child) in hi[..d.len].iter_mut().enumerate() {
                let s = &sigma[d.row + a];
                let w = &mut weight[d.row + a];
                child[o] = here[o];
                let c = &mut child[p];
                for i in 0..W {
                    c[i] = here[p][i] * s[i];
                    w[i] += c[i];
                }
            }
        }

        let scale_v = f64x4::splat(scale);
        for (t, node) in k.nodes.iter().enumerate().rev() {
            match *node {
                Node::Leaf(l) => {
                    let here = &reach[t];
                    let out = &mut value[t];
                    let mut y = [[zero; W]; 2];
                    for p in 0..2 {
                        for i in 0..W {
                            y[p][i] = here[p][i] * beta[p][i];
                        }
                    }
                    match &k.leaves[l] {
                        Leaf::Fixed(u) => {
                            for (p, sign) in [(0, scale_v), (1, -scale_v)] {
                                let o = 1 - p;
                                for b in 0..N {
                                    let board = b * VB..(b + 1) * VB;
                                    let total = f64x4::splat(y[o][board.clone()].iter().fold(zero, |s, &x| s + x).reduce_add());
                                    for i in board {
                                        out[p][i] = sign * alpha[p][i] * u[i] * (total - y[o][i]) * k.mask[i];
                                    }
                                }
                            }
                        }
                        Leaf::Showdown { table } => {
                            for p in 0..2 {
                                let o = 1 - p;
                                for (b, rows) in table.iter().enumerate() {
                                    let mut acc = [zero; VB];
                                    for (c, row) in rows.iter().enumerate() {
                                        let yc = f64x4::splat(lane(&y[o], b * S + c));
                                        for j in 0..VB {
                                            acc[j] += row[j] * yc;
                                        }
                                    }
                                    for j in 0..VB {
                                        out[p][b * VB + j] = scale_v * alpha[p][b * VB + j] * acc[j];
                                    }
                                }
                            }
                        }
                    }
                }
                Node::Decision(di) => {
                    let d = k.decisions[di];
                    let p = d.player.index();
                    let o = 1 - p;
                    let (lo, hi) = value.split_at_mut(d.first);
                    let children = &hi[..d.len];
                    let mut vp = [zero; W];
                    let mut vo = [zero; W];
                    for (a, child) in children.iter().enumerate() {
                        let s = &sigma[d.row + a];
                        for i in 0..W {
                            vp[i] += s[i] * child[p][i];
                            vo[i] += child[o][i];
                        }
                    }
                    for (a, child) in children.iter().enumerate() {
                        let r = &mut regret[d.row + a];
                        for i in 0..W {
                            r[i] += child[p][i] - vp[i];
                        }
                    }
                    lo[t][p] = vp;
                    lo[t][o] = vo;
                }
            }
        }

        if let Some(tf) = tf.as_mut() {
            let o = tf.player.index();
            for c in 0..N {
                if !tf.present[c] {
                    continue;
                }
                let follow: f64 = (0..N).map(|b| lane(&value[0][o], b * S + c)).sum();
                let stop = tf.t_value[c];
                let v = tf.sigma[c][0] * stop + tf.sigma[c][1] * follow;
                tf.regret[c][0] += stop - v;
                tf.regret[c][1] += follow - v;
            }
        }
        self.iterations += 1;
    }

    /// Normalized average strategy in the generic subgame layout.
    pub fn average(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.kernel.num_pairs];
        for s in &self.kernel.slots {
            let sum: f64 = (0..s.len).map(|a| lane(&self.weight[s.row + a], s.lane)).sum();
            for a in 0..s.len {
                out[s.offset + a] = if sum > 0.0 {
                    lane(&self.weight[s.row + a], s.lane) / sum
                } else {
                    1.0 / s.len as f64
                };
            }
        }
        out
    }

    /// Writes the average strategy of `player`'s subgame information sets,
    /// or of both players when `None`.
    pub fn write_average(&self, player: Option<Player>, policy: &mut Policy) {
        let avg = self.average();
        for (s, local) in self.kernel.slots.iter().zip(&self.kernel.generic.tree.infosets) {
            if player.is_none_or(|p| p == s.player) {
                policy.dist_mut(local.global).copy_from_slice(&avg[s.offset..s.offset + s.len]);
            }
        }
    }

    /// `player`'s average strategy keyed by the game's information sets.
    pub fn fragment(&self, game: &Game, player: Player) -> StrategyProfile {
        let avg = self.average();
        let mut out = StrategyProfile::new();
        for (s, local) in self.kernel.slots.iter().zip(&self.kernel.generic.tree.infosets) {
            if s.player == player {
                let key = game.infoset(local.global).key.clone();
                out.insert(player, key, avg[s.offset..s.offset + s.len].to_vec());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::UnsafeSolver;
    use crate::decomposition::{build_recovery_game, partition_game, Frontier, RecoverySolver, RootValues};
    use crate::games::build_game;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_policy(game: &Game, seed: u64) -> Policy {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut policy = Policy::uniform(game);
        for i in 0..game.num_infosets() {
            let d = policy.dist_mut(i);
            let raw: Vec<f64> = d.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            for (x, r) in d.iter_mut().zip(raw) {
                *x = r / total;
            }
        }
        policy
    }

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{x} vs {y}");
        }
    }

    #[test]
    fn leduc_subgames_are_vectorized() {
        let game = build_game("leduc", false).unwrap();
        let part = partition_game(&game, &Frontier::Natural).unwrap();
        for sub in part.subgames() {
            assert!(CardKernel::try_new(&game, sub).is_some());
        }
        // Boards merged into one information set are left to the generic engine.
        let abs = build_game("leduc-abstract", false).unwrap();
        let part = partition_game(&abs, &Frontier::Natural).unwrap();
        assert!(CardKernel::try_new(&abs, &part.subgames()[0]).is_none());
        let kuhn = build_game("kuhn", false).unwrap();
        let part = partition_game(&kuhn, &Frontier::Natural).unwrap();
        assert!(CardKernel::try_new(&kuhn, &part.subgames()[0]).is_none());
    }

    #[test]
    fn matches_generic_subgame_solve() {
        {
            let game = build_game("leduc", false).unwrap();
            let part = partition_game(&game, &Frontier::Natural).unwrap();
            let policy = random_policy(&game, 7);
            for (s, sub) in part.subgames().iter().enumerate() {
                let fast = Arc::new(CardKernel::try_new(&game, sub).unwrap());
                let generic = GenericKernel::new(&game, sub);
                let reach: Vec<_> = sub.roots.iter().map(|&r| game.reach(&policy, r)).collect();
                let a = fast.solve(&reach, 150, None, true);
                let b = generic.solve(&reach, 150, None, true);
                close(a.strategy.as_ref().unwrap(), b.strategy.as_ref().unwrap(), 1e-9);
                for p in 0..2 {
                    close(&a.values[p], &b.values[p], 1e-9);
                }
                assert!((a.eps - b.eps).abs() < 1e-9, "subgame {s}");
            }
        }
    }

    #[test]
    fn matches_generic_gadget() {
        let game = build_game("leduc", false).unwrap();
        let part = partition_game(&game, &Frontier::Natural).unwrap();
        let policy = random_policy(&game, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cfvs = RootValues::new();
        for sub in part.subgames() {
            for p in Player::BOTH {
                for set in sub.root_infosets(p) {
                    cfvs.insert(p, set.key.clone(), rng.gen_range(-0.05..0.05));
                }
            }
        }
        for s in [0, 3] {
            let fast = Arc::new(CardKernel::try_new(&game, &part.subgames()[s]).unwrap());
            for p in Player::BOTH {
                let rec = build_recovery_game(&game, &part, s, &policy, p, &cfvs).unwrap();
                let mut generic = RecoverySolver::new(&rec);
                generic.run(120);
                let mut vector = fast.gadget(&rec).unwrap();
                vector.run(120);
                let a = generic.fragment(&game);
                let b = vector.fragment(&game, p);
                assert_eq!(a.len(), b.len());
                for (q, key, dist) in a.iter() {
                    close(dist, b.get(q, key).unwrap(), 1e-9);
                }
            }
        }
    }

    #[test]
    fn matches_generic_fixed_trunk() {
        let game = build_game("leduc", false).unwrap();
        let part = partition_game(&game, &Frontier::Natural).unwrap();
        let policy = random_policy(&game, 5);
        for s in [1, 4] {
            let sub = &part.subgames()[s];
            let fast = Arc::new(CardKernel::try_new(&game, sub).unwrap());
            let reach: Vec<_> = sub.roots.iter().map(|&r| game.reach(&policy, r)).collect();
            let mut vector = fast.fixed_trunk(&reach).unwrap();
            vector.run(120);
            let mut generic = UnsafeSolver::generic(&game, &part, s, &policy).unwrap();
            generic.run(120);
            let mut a = Policy::uniform(&game);
            let mut b = Policy::uniform(&game);
            generic.write_average(&mut a);
            vector.write_average(None, &mut b);
            close(a.as_slice(), b.as_slice(), 1e-9);
        }
    }
}
