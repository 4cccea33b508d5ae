//! Flat, breadth-first view of a region of a [`Game`] that the CFR passes,
//! evaluation passes and best-response passes run over.
//!
//! A region is a set of root histories and everything below them. Histories
//! flagged as external are cut off and treated as leaves whose per-player
//! counterfactual contributions are supplied by the caller (CFR-D uses them
//! for subgame roots seen from the trunk).

use std::collections::HashMap;

use crate::game::{Game, NodeId, NodeKind, Player, ReachProbabilities};
use crate::profile::Policy;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Tag {
    Terminal,
    Chance,
    One,
    Two,
    External,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Slot {
    pub tag: Tag,
    pub first_child: u32,
    pub num_children: u32,
    /// Local information set for decisions, leaf index for externals.
    pub data: u32,
    /// First `(information set, action)` entry of a decision's set.
    pub offset: u32,
    pub payoffs: [f64; 2],
}

#[derive(Clone, Debug)]
pub(crate) struct LocalInfoset {
    pub global: usize,
    pub player: Player,
    pub offset: usize,
    pub len: usize,
    pub members: Vec<u32>,
}

#[derive(Clone, Debug)]
pub(crate) struct CompiledTree {
    pub slots: Vec<Slot>,
    /// Chance probability of the edge leading into each node (1 otherwise).
    pub edge: Vec<f64>,
    pub infosets: Vec<LocalInfoset>,
    pub num_roots: usize,
    pub num_pairs: usize,
    /// Global node of each external leaf, in leaf-index order.
    pub externals: Vec<NodeId>,
    /// Local node of each external leaf.
    pub externals_local: Vec<usize>,
}

impl CompiledTree {
    pub fn whole(game: &Game) -> CompiledTree {
        Self::region(game, &[game.root()], |_| false)
    }

    /// Region below `roots`; histories for which `external` holds become
    /// externally valued leaves.
    pub fn region(game: &Game, roots: &[NodeId], external: impl Fn(NodeId) -> bool) -> CompiledTree {
        let mut nodes: Vec<NodeId> = roots.to_vec();
        let mut slots = Vec::new();
        let mut edge = vec![1.0; roots.len()];
        let mut infosets: Vec<LocalInfoset> = Vec::new();
        let mut local_of: HashMap<usize, usize> = HashMap::new();
        let mut externals = Vec::new();
        let mut externals_local = Vec::new();
        let mut num_pairs = 0;

        let mut i = 0;
        while i < nodes.len() {
            let h = nodes[i];
            let is_root = i < roots.len();
            let mut slot = Slot {
                tag: Tag::Terminal,
                first_child: nodes.len() as u32,
                num_children: 0,
                data: 0,
                offset: 0,
                payoffs: [0.0; 2],
            };
            if !is_root && external(h) {
                slot.tag = Tag::External;
                slot.data = externals.len() as u32;
                externals.push(h);
                externals_local.push(i);
            } else {
                match game.kind(h) {
                    NodeKind::Terminal { payoffs } => slot.payoffs = *payoffs,
                    NodeKind::Chance { outcomes } => {
                        slot.tag = Tag::Chance;
                        slot.num_children = outcomes.len() as u32;
                        for (c, (_, p)) in game.children(h).zip(outcomes) {
                            nodes.push(c);
                            edge.push(*p);
                        }
                    }
                    NodeKind::Decision { player, infoset } => {
                        slot.tag = match player {
                            Player::One => Tag::One,
                            Player::Two => Tag::Two,
                        };
                        let local = *local_of.entry(*infoset).or_insert_with(|| {
                            let len = game.infoset(*infoset).num_actions();
                            infosets.push(LocalInfoset {
                                global: *infoset,
                                player: *player,
                                offset: num_pairs,
                                len,
                                members: Vec::new(),
                            });
                            num_pairs += len;
                            infosets.len() - 1
                        });
                        infosets[local].members.push(i as u32);
                        slot.data = local as u32;
                        slot.offset = infosets[local].offset as u32;
                        let children = game.children(h);
                        slot.num_children = children.len() as u32;
                        for c in children {
                            nodes.push(c);
                            edge.push(1.0);
                        }
                    }
                }
            }
            slots.push(slot);
            i += 1;
        }

        CompiledTree {
            slots,
            edge,
            infosets,
            num_roots: roots.len(),
            num_pairs,
            externals,
            externals_local,
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    /// Copies the region's part of a game-wide policy into local layout.
    pub fn localize(&self, policy: &Policy) -> Vec<f64> {
        let mut out = vec![0.0; self.num_pairs];
        for info in &self.infosets {
            out[info.offset..info.offset + info.len].copy_from_slice(policy.dist(info.global));
        }
        out
    }

    /// Local `(information set, action)` layout as a flat offset table.
    pub fn offsets(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.infosets.iter().map(|i| i.offset).collect();
        out.push(self.num_pairs);
        out
    }
}

/// Scratch buffers for passes over one [`CompiledTree`].
///
/// `r1`, `r2` are each player's own reach measured from the region roots;
/// `e1`, `e2` carry the remaining factors of `π_{-1}` and `π_{-2}` (chance
/// plus whatever was injected at the roots), so that
/// `π_{-1}(h) = r2(h) · e1(h)` and `π_{-2}(h) = r1(h) · e2(h)`.
#[derive(Clone, Debug)]
pub(crate) struct Workspace {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl Workspace {
    pub fn new(n: usize) -> Self {
        Workspace {
            r1: vec![1.0; n],
            r2: vec![1.0; n],
            e1: vec![1.0; n],
            e2: vec![1.0; n],
            w1: vec![0.0; n],
            w2: vec![0.0; n],
        }
    }

    /// Injects the reach of each region root from outside the region. Own
    /// reach restarts at 1, the injected factors go into `e1`, `e2`.
    pub fn set_roots(&mut self, reach: &[ReachProbabilities]) {
        for (i, r) in reach.iter().enumerate() {
            self.r1[i] = 1.0;
            self.r2[i] = 1.0;
            self.e1[i] = r.player_two * r.chance;
            self.e2[i] = r.player_one * r.chance;
        }
    }

    /// Absolute reach of node `n`, for regions whose roots were not injected.
    pub fn reach(&self, n: usize) -> ReachProbabilities {
        ReachProbabilities {
            player_one: self.r1[n],
            player_two: self.r2[n],
            chance: self.e1[n],
        }
    }

    /// Propagates reach probabilities from the roots under the local strategy
    /// `sigma`.
    pub fn forward(&mut self, tree: &CompiledTree, sigma: &[f64]) {
        let (r1, r2, e1, e2) = (&mut self.r1, &mut self.r2, &mut self.e1, &mut self.e2);
        for (n, slot) in tree.slots.iter().enumerate() {
            let start = slot.first_child as usize;
            let end = start + slot.num_children as usize;
            let (p1, p2, x1, x2) = (r1[n], r2[n], e1[n], e2[n]);
            match slot.tag {
                Tag::Terminal | Tag::External => {}
                Tag::Chance => {
                    for c in start..end {
                        let q = tree.edge[c];
                        r1[c] = p1;
                        r2[c] = p2;
                        e1[c] = x1 * q;
                        e2[c] = x2 * q;
                    }
                }
                Tag::One => {
                    let off = slot.offset as usize;
                    for (a, c) in (start..end).enumerate() {
                        r1[c] = p1 * sigma[off + a];
                        r2[c] = p2;
                        e1[c] = x1;
                        e2[c] = x2;
                    }
                }
                Tag::Two => {
                    let off = slot.offset as usize;
                    for (a, c) in (start..end).enumerate() {
                        r1[c] = p1;
                        r2[c] = p2 * sigma[off + a];
                        e1[c] = x1;
                        e2[c] = x2;
                    }
                }
            }
        }
    }

    /// Bottom-up pass computing each node's counterfactual contribution
    /// `w_p(h) = π_{-p}(h) · u_p(h)` for both players. When `regrets` is given,
    /// the acting player's instantaneous counterfactual regrets are added.
    pub fn backward(&mut self, tree: &CompiledTree, sigma: &[f64], external: &[[f64; 2]], mut regrets: Option<&mut [f64]>) {
        let (w1, w2) = (&mut self.w1, &mut self.w2);
        for n in (0..tree.slots.len()).rev() {
            let slot = &tree.slots[n];
            let start = slot.first_child as usize;
            let end = start + slot.num_children as usize;
            match slot.tag {
                Tag::Terminal => {
                    w1[n] = self.r2[n] * self.e1[n] * slot.payoffs[0];
                    w2[n] = self.r1[n] * self.e2[n] * slot.payoffs[1];
                }
                Tag::External => {
                    let v = external[slot.data as usize];
                    w1[n] = v[0];
                    w2[n] = v[1];
                }
                Tag::Chance => {
                    let (mut a, mut b) = (0.0, 0.0);
                    for c in start..end {
                        a += w1[c];
                        b += w2[c];
                    }
                    w1[n] = a;
                    w2[n] = b;
                }
                Tag::One | Tag::Two => {
                    let off = slot.offset as usize;
                    let (own, other) = if slot.tag == Tag::One {
                        (&mut *w1, &mut *w2)
                    } else {
                        (&mut *w2, &mut *w1)
                    };
                    let mut v = 0.0;
                    let mut o = 0.0;
                    for (a, c) in (start..end).enumerate() {
                        v += sigma[off + a] * own[c];
                        o += other[c];
                    }
                    if let Some(reg) = regrets.as_deref_mut() {
                        for (a, c) in (start..end).enumerate() {
                            reg[off + a] += own[c] - v;
                        }
                    }
                    own[n] = v;
                    other[n] = o;
                }
            }
        }
    }

    pub fn w(&self, player: Player) -> &[f64] {
        match player {
            Player::One => &self.w1,
            Player::Two => &self.w2,
        }
    }
}

/// Result of a counterfactual best-response pass for one player.
#[derive(Clone, Debug)]
pub(crate) struct BestResponse {
    /// Chosen action per local information set of the responder.
    pub choice: Vec<Option<usize>>,
    /// Counterfactual action values `v_p(I, a)` with the responder playing
    /// the best response below, laid out like the local offsets.
    pub action_values: Vec<f64>,
    /// `w_p(h)` under the best response, per local node.
    pub w: Vec<f64>,
}

impl BestResponse {
    pub fn value(&self, tree: &CompiledTree) -> f64 {
        self.w[..tree.num_roots].iter().sum()
    }
}

struct BrPass<'a> {
    tree: &'a CompiledTree,
    player: Player,
    external: &'a [[f64; 2]],
    opp_reach: &'a [f64],
    w: Vec<f64>,
    done: Vec<bool>,
    choice: Vec<Option<usize>>,
    action_values: Vec<f64>,
}

impl BrPass<'_> {
    fn value(&mut self, n: usize) -> f64 {
        if self.done[n] {
            return self.w[n];
        }
        let slot = self.tree.slots[n];
        let start = slot.first_child as usize;
        let end = start + slot.num_children as usize;
        let own_tag = match self.player {
            Player::One => Tag::One,
            Player::Two => Tag::Two,
        };
        let v = match slot.tag {
            Tag::Terminal => self.opp_reach[n] * slot.payoffs[self.player.index()],
            Tag::External => self.external[slot.data as usize][self.player.index()],
            tag if tag == own_tag => {
                let info = slot.data as usize;
                if self.choice[info].is_none() {
                    self.decide(info);
                }
                self.w[start + self.choice[info].unwrap()]
            }
            _ => (start..end).map(|c| self.value(c)).sum(),
        };
        self.w[n] = v;
        self.done[n] = true;
        v
    }

    fn decide(&mut self, info: usize) {
        let tree = self.tree;
        let local = &tree.infosets[info];
        let off = local.offset;
        for &m in &local.members {
            let slot = tree.slots[m as usize];
            for a in 0..slot.num_children as usize {
                let v = self.value(slot.first_child as usize + a);
                self.action_values[off + a] += v;
            }
        }
        let values = &self.action_values[off..off + local.len];
        let mut best = 0;
        for (a, &v) in values.iter().enumerate() {
            if v > values[best] {
                best = a;
            }
        }
        self.choice[info] = Some(best);
    }
}

/// Counterfactual best response of `player` against the other player's
/// part of the local strategy `sigma`, evaluated at every information set
/// (reachable or not) with ties going to the lowest action index.
pub(crate) fn best_response(
    tree: &CompiledTree,
    sigma: &[f64],
    root_reach: &[ReachProbabilities],
    external: &[[f64; 2]],
    player: Player,
) -> BestResponse {
    let mut ws = Workspace::new(tree.len());
    ws.set_roots(root_reach);
    ws.forward(tree, sigma);
    let opp_reach: Vec<f64> = match player {
        Player::One => ws.r2.iter().zip(&ws.e1).map(|(a, b)| a * b).collect(),
        Player::Two => ws.r1.iter().zip(&ws.e2).map(|(a, b)| a * b).collect(),
    };
    let mut pass = BrPass {
        tree,
        player,
        external,
        opp_reach: &opp_reach,
        w: vec![0.0; tree.len()],
        done: vec![false; tree.len()],
        choice: vec![None; tree.infosets.len()],
        action_values: vec![0.0; tree.num_pairs],
    };
    for n in 0..tree.len() {
        pass.value(n);
    }
    // Information sets of the responder that were never visited still get a
    // decision so the response is defined everywhere.
    for (i, info) in tree.infosets.iter().enumerate() {
        if info.player == player && pass.choice[i].is_none() {
            pass.decide(i);
        }
    }
    BestResponse {
        choice: pass.choice,
        action_values: pass.action_values,
        w: pass.w,
    }
}
