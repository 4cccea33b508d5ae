//! Extensive-form game trees.
//!
//! A [`Game`] is an immutable tree of histories laid out in breadth-first
//! order, so the children of every node occupy a contiguous index range.
//! Decision nodes are grouped into information sets by `(player, label)`;
//! the canonical [`InfosetKey`] of a set is derived from the acting player's
//! own observation sequence.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::profile::Policy;

/// Index of a history (node) in a [`Game`].
pub type NodeId = usize;

/// One of the two non-chance players.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Player::One => 0,
            Player::Two => 1,
        }
    }

    #[inline]
    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_number(n: u8) -> Option<Player> {
        match n {
            1 => Some(Player::One),
            2 => Some(Player::Two),
            _ => None,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Canonical identifier of a (possibly augmented) information set.
///
/// The string is the player's observation sequence: `<label>:<action>`
/// segments joined by `|`, followed by `|<label>` of the current set when the
/// player is the one acting. An empty observation sequence is written `~`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InfosetKey(String);

impl InfosetKey {
    pub const EMPTY: &'static str = "~";

    pub fn from_observations<'a, I>(sequence: I, current: Option<&str>) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut parts: Vec<String> = sequence
            .into_iter()
            .map(|(label, action)| format!("{label}:{action}"))
            .collect();
        if let Some(label) = current {
            parts.push(label.to_string());
        }
        if parts.is_empty() {
            InfosetKey(Self::EMPTY.to_string())
        } else {
            InfosetKey(parts.join("|"))
        }
    }

    /// Wraps an already-canonical key string (as read from a file).
    pub fn from_raw(raw: impl Into<String>) -> Self {
        InfosetKey(raw.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for InfosetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Who moves at a history.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Actor {
    Player(Player),
    Chance,
    Leaf,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    /// Leaf with utilities for player one and player two, in chips.
    Terminal { payoffs: [f64; 2] },
    Chance { outcomes: Vec<(String, f64)> },
    Decision { player: Player, infoset: usize },
}

/// Owned recursive description of a game, consumed by [`Game::from_tree`].
#[derive(Clone, Debug)]
pub enum TreeNode {
    Terminal([f64; 2]),
    Chance(Vec<(String, f64, TreeNode)>),
    Decision {
        player: Player,
        label: String,
        actions: Vec<(String, TreeNode)>,
    },
}

impl TreeNode {
    /// Zero-sum leaf paying `payoff` to player one.
    pub fn leaf(payoff: f64) -> Self {
        TreeNode::Terminal([payoff, -payoff])
    }

    pub fn decision(player: Player, label: impl Into<String>, actions: Vec<(String, TreeNode)>) -> Self {
        TreeNode::Decision {
            player,
            label: label.into(),
            actions,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Infoset {
    pub player: Player,
    pub label: String,
    pub key: InfosetKey,
    pub actions: Vec<String>,
    /// Member histories in breadth-first order.
    pub histories: Vec<NodeId>,
}

impl Infoset {
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }
}

/// Reach probability factors of a history.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReachProbabilities {
    pub player_one: f64,
    pub player_two: f64,
    pub chance: f64,
}

impl ReachProbabilities {
    pub const ONE: ReachProbabilities = ReachProbabilities {
        player_one: 1.0,
        player_two: 1.0,
        chance: 1.0,
    };

    pub fn joint(&self) -> f64 {
        self.player_one * self.player_two * self.chance
    }

    pub fn of(&self, player: Player) -> f64 {
        match player {
            Player::One => self.player_one,
            Player::Two => self.player_two,
        }
    }

    /// Product of every factor except `player`'s own (opponent and chance).
    pub fn excluding(&self, player: Player) -> f64 {
        self.of(player.opponent()) * self.chance
    }
}

/// Immutable extensive-form game.
#[derive(Clone, Debug)]
pub struct Game {
    name: String,
    kinds: Vec<NodeKind>,
    parents: Vec<Option<NodeId>>,
    parent_action: Vec<usize>,
    child_start: Vec<usize>,
    child_len: Vec<usize>,
    depth: Vec<usize>,
    infosets: Vec<Infoset>,
    offsets: Arc<[usize]>,
    index: HashMap<(Player, InfosetKey), usize>,
}

fn check_label(label: &str) -> Result<()> {
    if label.is_empty() || label == InfosetKey::EMPTY || label.contains(|c: char| c.is_whitespace() || c == ':' || c == '|' || c == '=') {
        Err(Error::InvalidLabel(label.to_string()))
    } else {
        Ok(())
    }
}

impl Game {
    /// Lays out a tree breadth-first and groups decision nodes into
    /// information sets. Structural checks (zero-sum, chance sums, perfect
    /// recall) are left to [`Game::validate`].
    pub fn from_tree(name: impl Into<String>, root: TreeNode) -> Result<Game> {
        let mut kinds = Vec::new();
        let mut parents = Vec::new();
        let mut parent_action = Vec::new();
        let mut child_start = Vec::new();
        let mut child_len = Vec::new();
        let mut depth = Vec::new();
        let mut infosets: Vec<Infoset> = Vec::new();
        let mut by_label: HashMap<(Player, String), usize> = HashMap::new();

        let mut queue: VecDeque<(TreeNode, Option<NodeId>, usize, usize)> = VecDeque::new();
        queue.push_back((root, None, 0, 0));
        let mut enqueued = 1usize;

        while let Some((node, parent, action, d)) = queue.pop_front() {
            let id = kinds.len();
            parents.push(parent);
            parent_action.push(action);
            depth.push(d);
            match node {
                TreeNode::Terminal(payoffs) => {
                    kinds.push(NodeKind::Terminal { payoffs });
                    child_start.push(enqueued);
                    child_len.push(0);
                }
                TreeNode::Chance(outcomes) => {
                    if outcomes.is_empty() {
                        return Err(Error::EmptyNode { history: format!("#{id}") });
                    }
                    child_start.push(enqueued);
                    child_len.push(outcomes.len());
                    enqueued += outcomes.len();
                    let mut labels = Vec::with_capacity(outcomes.len());
                    for (a, (label, prob, child)) in outcomes.into_iter().enumerate() {
                        check_label(&label)?;
                        labels.push((label, prob));
                        queue.push_back((child, Some(id), a, d + 1));
                    }
                    kinds.push(NodeKind::Chance { outcomes: labels });
                }
                TreeNode::Decision { player, label, actions } => {
                    check_label(&label)?;
                    if actions.is_empty() {
                        return Err(Error::EmptyNode { history: format!("#{id}") });
                    }
                    let names: Vec<String> = actions.iter().map(|(a, _)| a.clone()).collect();
                    for a in &names {
                        check_label(a)?;
                    }
                    let infoset = match by_label.get(&(player, label.clone())) {
                        Some(&i) => {
                            if infosets[i].actions != names {
                                return Err(Error::ActionMismatch {
                                    label,
                                    history: format!("#{id}"),
                                });
                            }
                            infosets[i].histories.push(id);
                            i
                        }
                        None => {
                            let i = infosets.len();
                            by_label.insert((player, label.clone()), i);
                            infosets.push(Infoset {
                                player,
                                label,
                                key: InfosetKey(String::new()),
                                actions: names,
                                histories: vec![id],
                            });
                            i
                        }
                    };
                    child_start.push(enqueued);
                    child_len.push(actions.len());
                    enqueued += actions.len();
                    for (a, (_, child)) in actions.into_iter().enumerate() {
                        queue.push_back((child, Some(id), a, d + 1));
                    }
                    kinds.push(NodeKind::Decision { player, infoset });
                }
            }
        }

        let mut offsets = Vec::with_capacity(infosets.len() + 1);
        let mut total = 0;
        for info in &infosets {
            offsets.push(total);
            total += info.actions.len();
        }
        offsets.push(total);

        let mut game = Game {
            name: name.into(),
            kinds,
            parents,
            parent_action,
            child_start,
            child_len,
            depth,
            infosets,
            offsets: offsets.into(),
            index: HashMap::new(),
        };
        for i in 0..game.infosets.len() {
            let rep = game.infosets[i].histories[0];
            let player = game.infosets[i].player;
            let seq = game.own_sequence(rep, player);
            let key = game.key_for(&seq, Some(&game.infosets[i].label));
            game.index.insert((player, key.clone()), i);
            game.infosets[i].key = key;
        }
        Ok(game)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn num_nodes(&self) -> usize {
        self.kinds.len()
    }

    #[inline]
    pub fn kind(&self, h: NodeId) -> &NodeKind {
        &self.kinds[h]
    }

    pub fn actor(&self, h: NodeId) -> Actor {
        match &self.kinds[h] {
            NodeKind::Terminal { .. } => Actor::Leaf,
            NodeKind::Chance { .. } => Actor::Chance,
            NodeKind::Decision { player, .. } => Actor::Player(*player),
        }
    }

    pub fn is_leaf(&self, h: NodeId) -> bool {
        matches!(self.kinds[h], NodeKind::Terminal { .. })
    }

    #[inline]
    pub fn parent(&self, h: NodeId) -> Option<NodeId> {
        self.parents[h]
    }

    /// Index of the action at the parent that leads to `h`.
    #[inline]
    pub fn parent_action(&self, h: NodeId) -> usize {
        self.parent_action[h]
    }

    #[inline]
    pub fn children(&self, h: NodeId) -> Range<NodeId> {
        self.child_start[h]..self.child_start[h] + self.child_len[h]
    }

    #[inline]
    pub fn child(&self, h: NodeId, action: usize) -> NodeId {
        debug_assert!(action < self.child_len[h]);
        self.child_start[h] + action
    }

    pub fn depth(&self, h: NodeId) -> usize {
        self.depth[h]
    }

    pub fn payoffs(&self, h: NodeId) -> Option<[f64; 2]> {
        match self.kinds[h] {
            NodeKind::Terminal { payoffs } => Some(payoffs),
            _ => None,
        }
    }

    pub fn infoset_of(&self, h: NodeId) -> Option<usize> {
        match self.kinds[h] {
            NodeKind::Decision { infoset, .. } => Some(infoset),
            _ => None,
        }
    }

    pub fn infosets(&self) -> &[Infoset] {
        &self.infosets
    }

    pub fn infoset(&self, i: usize) -> &Infoset {
        &self.infosets[i]
    }

    pub fn num_infosets(&self) -> usize {
        self.infosets.len()
    }

    pub fn num_infosets_of(&self, player: Player) -> usize {
        self.infosets.iter().filter(|i| i.player == player).count()
    }

    /// Total number of (information set, action) pairs.
    pub fn num_infoset_actions(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn offsets(&self) -> &Arc<[usize]> {
        &self.offsets
    }

    pub fn infoset_index(&self, player: Player, key: &InfosetKey) -> Option<usize> {
        self.index.get(&(player, key.clone())).copied()
    }

    /// Label of action `a` taken at history `h`.
    pub fn action_label(&self, h: NodeId, a: usize) -> &str {
        match &self.kinds[h] {
            NodeKind::Chance { outcomes } => &outcomes[a].0,
            NodeKind::Decision { infoset, .. } => &self.infosets[*infoset].actions[a],
            NodeKind::Terminal { .. } => panic!("leaf has no actions"),
        }
    }

    /// Action labels from the root to `h`.
    pub fn path(&self, h: NodeId) -> Vec<&str> {
        let mut labels = Vec::with_capacity(self.depth[h]);
        let mut cur = h;
        while let Some(p) = self.parents[cur] {
            labels.push(self.action_label(p, self.parent_action[cur]));
            cur = p;
        }
        labels.reverse();
        labels
    }

    /// Human-readable history, e.g. `Js.Qh.c.r`; the empty history is `∅`.
    pub fn history_string(&self, h: NodeId) -> String {
        let path = self.path(h);
        if path.is_empty() {
            "∅".to_string()
        } else {
            path.join(".")
        }
    }

    /// Follows action labels from the root.
    pub fn find_history(&self, path: &[&str]) -> Option<NodeId> {
        let mut cur = self.root();
        for label in path {
            let a = self
                .children(cur)
                .map(|c| c - self.child_start[cur])
                .find(|&a| self.action_label(cur, a) == *label)?;
            cur = self.child(cur, a);
        }
        Some(cur)
    }

    /// `player`'s (information set, action) pairs on the path to `h`,
    /// excluding `h` itself.
    pub fn own_sequence(&self, h: NodeId, player: Player) -> Vec<(usize, usize)> {
        let mut seq = Vec::new();
        let mut cur = h;
        while let Some(p) = self.parents[cur] {
            if let NodeKind::Decision { player: q, infoset } = self.kinds[p] {
                if q == player {
                    seq.push((infoset, self.parent_action[cur]));
                }
            }
            cur = p;
        }
        seq.reverse();
        seq
    }

    fn key_for(&self, seq: &[(usize, usize)], current: Option<&str>) -> InfosetKey {
        InfosetKey::from_observations(
            seq.iter()
                .map(|&(i, a)| (self.infosets[i].label.as_str(), self.infosets[i].actions[a].as_str())),
            current,
        )
    }

    /// Augmented information set of `player` containing `h`: the standard set
    /// when `player` acts at `h`, otherwise the class of histories sharing
    /// `player`'s observation sequence.
    pub fn augmented_infoset(&self, h: NodeId, player: Player) -> InfosetKey {
        match self.kinds[h] {
            NodeKind::Decision { player: q, infoset } if q == player => self.infosets[infoset].key.clone(),
            _ => {
                let seq = self.own_sequence(h, player);
                self.key_for(&seq, None)
            }
        }
    }

    /// Reach probabilities of `h` by walking the path from the root.
    pub fn reach(&self, policy: &Policy, h: NodeId) -> ReachProbabilities {
        let mut r = ReachProbabilities::ONE;
        let mut cur = h;
        while let Some(p) = self.parents[cur] {
            let a = self.parent_action[cur];
            match &self.kinds[p] {
                NodeKind::Chance { outcomes } => r.chance *= outcomes[a].1,
                NodeKind::Decision { player: Player::One, infoset } => r.player_one *= policy.dist(*infoset)[a],
                NodeKind::Decision { player: Player::Two, infoset } => r.player_two *= policy.dist(*infoset)[a],
                NodeKind::Terminal { .. } => unreachable!(),
            }
            cur = p;
        }
        r
    }

    /// Reach probabilities of every history in one forward pass.
    pub fn reach_all(&self, policy: &Policy) -> Vec<ReachProbabilities> {
        let mut reach = vec![ReachProbabilities::ONE; self.num_nodes()];
        for h in 0..self.num_nodes() {
            let r = reach[h];
            match &self.kinds[h] {
                NodeKind::Terminal { .. } => {}
                NodeKind::Chance { outcomes } => {
                    for (a, c) in self.children(h).enumerate() {
                        reach[c] = ReachProbabilities {
                            chance: r.chance * outcomes[a].1,
                            ..r
                        };
                    }
                }
                NodeKind::Decision { player, infoset } => {
                    let dist = policy.dist(*infoset);
                    for (a, c) in self.children(h).enumerate() {
                        let mut rc = r;
                        match player {
                            Player::One => rc.player_one *= dist[a],
                            Player::Two => rc.player_two *= dist[a],
                        }
                        reach[c] = rc;
                    }
                }
            }
        }
        reach
    }

    /// Exact expected utility of both players: `Σ_z π(z) u_p(z)`.
    pub fn expected_value(&self, policy: &Policy) -> [f64; 2] {
        let reach = self.reach_all(policy);
        let mut value = [0.0; 2];
        for (h, kind) in self.kinds.iter().enumerate() {
            if let NodeKind::Terminal { payoffs } = kind {
                let pi = reach[h].joint();
                value[0] += pi * payoffs[0];
                value[1] += pi * payoffs[1];
            }
        }
        value
    }

    /// Checks the zero-sum, chance-distribution and perfect-recall assumptions,
    /// reporting the first violation found.
    pub fn validate(&self) -> Result<()> {
        for (h, kind) in self.kinds.iter().enumerate() {
            match kind {
                NodeKind::Terminal { payoffs } => {
                    let sum = payoffs[0] + payoffs[1];
                    if sum.abs() > 1e-9 || !sum.is_finite() {
                        return Err(Error::ZeroSum {
                            history: self.history_string(h),
                            sum,
                        });
                    }
                }
                NodeKind::Chance { outcomes } => {
                    let sum: f64 = outcomes.iter().map(|o| o.1).sum();
                    if (sum - 1.0).abs() > 1e-9 || outcomes.iter().any(|o| !(o.1 >= 0.0)) {
                        return Err(Error::ChanceDistribution {
                            history: self.history_string(h),
                            sum,
                        });
                    }
                }
                NodeKind::Decision { .. } => {}
            }
        }
        for info in &self.infosets {
            let first = info.histories[0];
            let seq = self.own_sequence(first, info.player);
            for &h in &info.histories[1..] {
                if self.own_sequence(h, info.player) != seq {
                    return Err(Error::PerfectRecall {
                        label: info.label.clone(),
                        first: self.history_string(first),
                        second: self.history_string(h),
                    });
                }
            }
        }
        Ok(())
    }

    /// Copies the subtree rooted at `h` into an owned [`TreeNode`], mapping leaf
    /// payoffs through `payoff`.
    pub fn subtree(&self, h: NodeId, payoff: &dyn Fn([f64; 2]) -> [f64; 2]) -> TreeNode {
        match &self.kinds[h] {
            NodeKind::Terminal { payoffs } => TreeNode::Terminal(payoff(*payoffs)),
            NodeKind::Chance { outcomes } => TreeNode::Chance(
                outcomes
                    .iter()
                    .zip(self.children(h))
                    .map(|((label, p), c)| (label.clone(), *p, self.subtree(c, payoff)))
                    .collect(),
            ),
            NodeKind::Decision { player, infoset } => {
                let info = &self.infosets[*infoset];
                TreeNode::Decision {
                    player: *player,
                    label: info.label.clone(),
                    actions: info
                        .actions
                        .iter()
                        .zip(self.children(h))
                        .map(|(a, c)| (a.clone(), self.subtree(c, payoff)))
                        .collect(),
                }
            }
        }
    }

    /// Pairs every node below `h` with the structurally identical node below
    /// `other_h` in `other`, writing `map[other node] = node of self`.
    pub(crate) fn pair_subtrees(&self, h: NodeId, other: &Game, other_h: NodeId, map: &mut [Option<NodeId>]) {
        map[other_h] = Some(h);
        for (c, oc) in self.children(h).zip(other.children(other_h)) {
            self.pair_subtrees(c, other, oc, map);
        }
    }

    /// Histories in the subtree rooted at `h`, including `h`.
    pub fn descendants(&self, h: NodeId) -> Vec<NodeId> {
        let mut out = vec![h];
        let mut i = 0;
        while i < out.len() {
            let n = out[i];
            out.extend(self.children(n));
            i += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn forgetful_game() -> TreeNode {
        // Player one acts twice but the second set merges both earlier actions.
        TreeNode::decision(
            Player::One,
            "a",
            vec![
                ("x".into(), TreeNode::decision(Player::One, "b", vec![("l".into(), TreeNode::leaf(1.0)), ("r".into(), TreeNode::leaf(0.0))])),
                ("y".into(), TreeNode::decision(Player::One, "b", vec![("l".into(), TreeNode::leaf(0.0)), ("r".into(), TreeNode::leaf(1.0))])),
            ],
        )
    }

    #[test]
    fn perfect_recall_violation_is_reported() {
        let game = Game::from_tree("forgetful", forgetful_game()).unwrap();
        match game.validate() {
            Err(Error::PerfectRecall { label, first, second }) => {
                assert_eq!(label, "b");
                assert_eq!(first, "x");
                assert_eq!(second, "y");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_sum_violation_is_reported() {
        let tree = TreeNode::Chance(vec![
            ("h".into(), 0.5, TreeNode::leaf(1.0)),
            ("t".into(), 0.5, TreeNode::Terminal([1.0, 0.0])),
        ]);
        let game = Game::from_tree("bad", tree).unwrap();
        match game.validate() {
            Err(Error::ZeroSum { history, sum }) => {
                assert_eq!(history, "t");
                assert_eq!(sum, 1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn chance_must_sum_to_one() {
        let tree = TreeNode::Chance(vec![("h".into(), 0.5, TreeNode::leaf(1.0)), ("t".into(), 0.4, TreeNode::leaf(0.0))]);
        let game = Game::from_tree("bad", tree).unwrap();
        assert!(matches!(game.validate(), Err(Error::ChanceDistribution { .. })));
    }

    #[test]
    fn labels_are_checked() {
        let tree = TreeNode::decision(Player::One, "a b", vec![("x".into(), TreeNode::leaf(0.0))]);
        assert_eq!(Game::from_tree("t", tree).unwrap_err(), Error::InvalidLabel("a b".into()));
        let tree = TreeNode::decision(Player::One, "a", vec![("x=1".into(), TreeNode::leaf(0.0))]);
        assert!(Game::from_tree("t", tree).is_err());
    }

    #[test]
    fn mismatched_actions_rejected() {
        let tree = TreeNode::Chance(vec![
            ("h".into(), 0.5, TreeNode::decision(Player::One, "a", vec![("x".into(), TreeNode::leaf(0.0))])),
            ("t".into(), 0.5, TreeNode::decision(Player::One, "a", vec![("y".into(), TreeNode::leaf(0.0))])),
        ]);
        assert!(matches!(Game::from_tree("t", tree), Err(Error::ActionMismatch { .. })));
    }

    #[test]
    fn breadth_first_children_are_contiguous() {
        let game = Game::from_tree("forgetful", forgetful_game()).unwrap();
        assert_eq!(game.children(0), 1..3);
        assert_eq!(game.children(1), 3..5);
        assert_eq!(game.children(2), 5..7);
        assert_eq!(game.find_history(&["y", "r"]), Some(6));
        assert_eq!(game.history_string(6), "y.r");
        assert_eq!(game.history_string(0), "∅");
    }

    #[test]
    fn key_format() {
        let key = InfosetKey::from_observations([("a", "x"), ("b", "l")], Some("c"));
        assert_eq!(key.as_str(), "a:x|b:l|c");
        assert_eq!(InfosetKey::from_observations([], None).as_str(), "~");
        assert_eq!(InfosetKey::from_observations([], Some("c")).as_str(), "c");
    }
}
