//! Trunk/subgame decomposition, recovery games and strategy stitching.

mod recovery;

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::game::{Game, InfosetKey, NodeId, NodeKind, Player};
use crate::games::GameId;
use crate::profile::{check_distribution, Policy, StrategyProfile};

pub use recovery::{build_recovery_game, resolve_subgame, RecoveryGame, RecoverySolver};

/// Where subgames begin.
pub enum Frontier {
    /// The built-in split of each game: player two's decisions in RPS,
    /// player two's first decision in Kuhn, and the public-card deal in Leduc.
    Natural,
    /// No subgames; the trunk is the whole game.
    None,
    Custom(Box<dyn Fn(&Game, NodeId) -> bool + Send + Sync>),
}

impl Frontier {
    pub fn contains(&self, game: &Game, h: NodeId) -> bool {
        match self {
            Frontier::None => false,
            Frontier::Custom(f) => f(game, h),
            Frontier::Natural => match game.name().parse::<GameId>() {
                Ok(GameId::Rps) | Ok(GameId::Kuhn) => {
                    matches!(game.kind(h), NodeKind::Decision { player: Player::Two, .. }) && game.depth(h) <= 3
                }
                Ok(GameId::Leduc) | Ok(GameId::LeducAbstract) => {
                    matches!(game.kind(h), NodeKind::Chance { .. }) && game.depth(h) > 2
                }
                Err(_) => false,
            },
        }
    }
}

/// An augmented information set at the roots of a subgame.
#[derive(Clone, Debug, PartialEq)]
pub struct RootInfoset {
    pub key: InfosetKey,
    /// Indices into [`Subgame::roots`].
    pub roots: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Subgame {
    /// A grouped set of root histories, in breadth-first order.
    pub roots: Vec<NodeId>,
    /// Per player, the augmented information sets partitioning the roots.
    pub root_infosets: [Vec<RootInfoset>; 2],
    /// Game information sets inside the subgame.
    pub infosets: Vec<usize>,
    pub num_nodes: usize,
}

impl Subgame {
    pub fn root_infosets(&self, player: Player) -> &[RootInfoset] {
        &self.root_infosets[player.index()]
    }

    /// Index of the root information set of `player` containing root `r`.
    pub fn root_infoset_of(&self, player: Player, r: usize) -> usize {
        self.root_infosets[player.index()]
            .iter()
            .position(|s| s.roots.contains(&r))
            .expect("roots are partitioned")
    }
}

/// Trunk plus a list of disjoint subgames covering every history.
#[derive(Clone, Debug, PartialEq)]
pub struct SubgamePartition {
    /// Subgame index of each history, `None` for the trunk.
    owner: Vec<Option<usize>>,
    subgames: Vec<Subgame>,
    trunk_infosets: Vec<usize>,
}

impl SubgamePartition {
    pub fn subgames(&self) -> &[Subgame] {
        &self.subgames
    }

    pub fn subgame(&self, index: usize) -> Result<&Subgame> {
        self.subgames.get(index).ok_or(Error::NoSuchSubgame(index))
    }

    pub fn len(&self) -> usize {
        self.subgames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subgames.is_empty()
    }

    pub fn owner(&self, h: NodeId) -> Option<usize> {
        self.owner[h]
    }

    pub fn in_trunk(&self, h: NodeId) -> bool {
        self.owner[h].is_none()
    }

    pub fn is_root(&self, h: NodeId) -> bool {
        self.owner[h].is_some_and(|s| self.subgames[s].roots.binary_search(&h).is_ok())
    }

    pub fn trunk_infosets(&self) -> &[usize] {
        &self.trunk_infosets
    }

    pub fn num_trunk_nodes(&self) -> usize {
        self.owner.iter().filter(|o| o.is_none()).count()
    }

    /// Number of root information sets over all subgames and both players.
    pub fn num_root_infosets(&self) -> usize {
        self.subgames
            .iter()
            .map(|s| s.root_infosets[0].len() + s.root_infosets[1].len())
            .sum()
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.0[a.max(b)] = a.min(b);
        }
    }
}

/// Splits `game` at the histories accepted by `frontier`. Roots sharing an
/// augmented information set of either player are grouped (transitively)
/// into the same subgame.
pub fn partition_game(game: &Game, frontier: &Frontier) -> Result<SubgamePartition> {
    let roots: Vec<NodeId> = (0..game.num_nodes())
        .filter(|&h| !game.is_leaf(h) && frontier.contains(game, h))
        .collect();
    let mut is_root = vec![false; game.num_nodes()];
    for &r in &roots {
        is_root[r] = true;
    }
    for &r in &roots {
        let mut cur = game.parent(r);
        while let Some(a) = cur {
            if is_root[a] {
                return Err(Error::NestedFrontier {
                    ancestor: game.history_string(a),
                    descendant: game.history_string(r),
                });
            }
            cur = game.parent(a);
        }
    }

    let mut uf = UnionFind((0..roots.len()).collect());
    let mut keys: [Vec<InfosetKey>; 2] = [Vec::new(), Vec::new()];
    for p in Player::BOTH {
        let mut first: HashMap<InfosetKey, usize> = HashMap::new();
        for (i, &r) in roots.iter().enumerate() {
            let key = game.augmented_infoset(r, p);
            match first.get(&key) {
                Some(&j) => uf.union(i, j),
                None => {
                    first.insert(key.clone(), i);
                }
            }
            keys[p.index()].push(key);
        }
    }

    let mut cluster_of: BTreeMap<usize, usize> = BTreeMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..roots.len() {
        let c = uf.find(i);
        let idx = *cluster_of.entry(c).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[idx].push(i);
    }

    let mut owner = vec![None; game.num_nodes()];
    let mut subgames = Vec::with_capacity(members.len());
    for (s, group) in members.iter().enumerate() {
        let sub_roots: Vec<NodeId> = group.iter().map(|&i| roots[i]).collect();
        let mut root_infosets: [Vec<RootInfoset>; 2] = [Vec::new(), Vec::new()];
        for p in Player::BOTH {
            let sets = &mut root_infosets[p.index()];
            for (local, &i) in group.iter().enumerate() {
                let key = &keys[p.index()][i];
                match sets.iter_mut().find(|s| &s.key == key) {
                    Some(set) => set.roots.push(local),
                    None => sets.push(RootInfoset {
                        key: key.clone(),
                        roots: vec![local],
                    }),
                }
            }
        }
        let mut num_nodes = 0;
        for &r in &sub_roots {
            for h in game.descendants(r) {
                owner[h] = Some(s);
                num_nodes += 1;
            }
        }
        subgames.push(Subgame {
            roots: sub_roots,
            root_infosets,
            infosets: Vec::new(),
            num_nodes,
        });
    }

    let mut trunk_infosets = Vec::new();
    for (i, info) in game.infosets().iter().enumerate() {
        let side = owner[info.histories[0]];
        if info.histories.iter().any(|&h| owner[h] != side) {
            return Err(Error::InfosetCrossesBoundary {
                player: info.player.number(),
                key: info.key.to_string(),
            });
        }
        match side {
            None => trunk_infosets.push(i),
            Some(s) => subgames[s].infosets.push(i),
        }
    }

    Ok(SubgamePartition {
        owner,
        subgames,
        trunk_infosets,
    })
}

/// Counterfactual values at the root information sets of subgames, per
/// player and augmented key.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RootValues {
    values: [BTreeMap<InfosetKey, f64>; 2],
}

impl RootValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, player: Player, key: InfosetKey, value: f64) {
        self.values[player.index()].insert(key, value);
    }

    pub fn get(&self, player: Player, key: &InfosetKey) -> Option<f64> {
        self.values[player.index()].get(key).copied()
    }

    pub fn player(&self, player: Player) -> &BTreeMap<InfosetKey, f64> {
        &self.values[player.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Player, &InfosetKey, f64)> {
        Player::BOTH
            .into_iter()
            .flat_map(move |p| self.values[p.index()].iter().map(move |(k, v)| (p, k, *v)))
    }

    pub fn len(&self) -> usize {
        self.values[0].len() + self.values[1].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Adds another set of values entry by entry.
    pub fn extend(&mut self, other: RootValues) {
        for p in Player::BOTH {
            self.values[p.index()].extend(other.values[p.index()].clone());
        }
    }

    /// Value of `player` at every root set of `subgame`, or the first
    /// missing key.
    pub fn for_subgame(&self, subgame: &Subgame, player: Player) -> Result<Vec<f64>> {
        subgame
            .root_infosets(player)
            .iter()
            .map(|s| {
                self.get(player, &s.key).ok_or_else(|| Error::MissingCfv {
                    player: player.number(),
                    key: s.key.to_string(),
                })
            })
            .collect()
    }
}

/// The part of `policy` belonging to `player` inside subgame `index`.
pub fn subgame_fragment(game: &Game, partition: &SubgamePartition, index: usize, policy: &Policy, player: Player) -> Result<StrategyProfile> {
    let sub = partition.subgame(index)?;
    let mut fragment = StrategyProfile::new();
    for &i in &sub.infosets {
        let info = game.infoset(i);
        if info.player == player {
            fragment.insert(player, info.key.clone(), policy.dist(i).to_vec());
        }
    }
    Ok(fragment)
}

/// Replaces the subgame strategy of every player present in `fragment`,
/// leaving the rest of `profile` untouched. The fragment must cover exactly
/// that player's information sets in the subgame.
pub fn stitch(
    game: &Game,
    profile: &StrategyProfile,
    partition: &SubgamePartition,
    index: usize,
    fragment: &StrategyProfile,
) -> Result<StrategyProfile> {
    let sub = partition.subgame(index)?;
    let mut out = profile.clone();
    for p in Player::BOTH {
        let part = fragment.player(p);
        if part.is_empty() {
            continue;
        }
        let expected: Vec<&InfosetKey> = sub
            .infosets
            .iter()
            .map(|&i| game.infoset(i))
            .filter(|info| info.player == p)
            .map(|info| &info.key)
            .collect();
        if expected.len() != part.len() {
            return Err(Error::FragmentMismatch {
                subgame: index,
                reason: format!("player {p} has {} information sets, fragment has {}", expected.len(), part.len()),
            });
        }
        for key in expected {
            let dist = part.get(key).ok_or_else(|| Error::FragmentMismatch {
                subgame: index,
                reason: format!("missing {key}"),
            })?;
            check_distribution(key, dist)?;
            out.insert(p, key.clone(), dist.clone());
        }
    }
    Ok(out)
}

/// [`stitch`] on flat policies.
pub fn stitch_policy(game: &Game, policy: &mut Policy, partition: &SubgamePartition, index: usize, fragment: &StrategyProfile) -> Result<()> {
    let base = StrategyProfile::from_policy(game, policy);
    let stitched = stitch(game, &base, partition, index, fragment)?;
    *policy = stitched.to_policy(game)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::build_game;

    #[test]
    fn rps_natural_split() {
        let game = build_game("rps", false).unwrap();
        let part = partition_game(&game, &Frontier::Natural).unwrap();
        assert_eq!(part.len(), 1);
        assert_eq!(part.subgames()[0].roots.len(), 3);
        assert_eq!(part.num_trunk_nodes(), 1);
        assert_eq!(part.subgames()[0].root_infosets(Player::One).len(), 3);
        assert_eq!(part.subgames()[0].root_infosets(Player::Two).len(), 1);
    }

    #[test]
    fn leduc_has_five_subgames() {
        let game = build_game("leduc", false).unwrap();
        let part = partition_game(&game, &Frontier::Natural).unwrap();
        assert_eq!(part.len(), 5);
        for sub in part.subgames() {
            assert_eq!(sub.roots.len(), 30);
            assert_eq!(sub.root_infosets(Player::One).len(), 6);
            assert_eq!(sub.root_infosets(Player::Two).len(), 6);
        }
        assert_eq!(part.trunk_infosets().len(), 36);
    }

    #[test]
    fn nested_frontier_rejected() {
        let game = build_game("kuhn", false).unwrap();
        let frontier = Frontier::Custom(Box::new(|g: &Game, h| !g.is_leaf(h) && g.depth(h) >= 2));
        assert!(matches!(partition_game(&game, &frontier), Err(Error::NestedFrontier { .. })));
    }

    #[test]
    fn empty_frontier_is_all_trunk() {
        let game = build_game("kuhn", false).unwrap();
        let part = partition_game(&game, &Frontier::None).unwrap();
        assert!(part.is_empty());
        assert_eq!(part.trunk_infosets().len(), 12);
    }
}
