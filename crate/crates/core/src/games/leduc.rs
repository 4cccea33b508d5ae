//! Leduc Hold'em: six cards (two suits of J, Q, K), a one-chip ante, two
//! betting rounds with at most one bet and one raise each (sizes 2 then 4),
//! one private card per player and one public card before round two.

use crate::game::{Game, Player, TreeNode};

pub const LEDUC_CARDS: [&str; 6] = ["Js", "Jh", "Qs", "Qh", "Ks", "Kh"];

const BET_SIZES: [f64; 2] = [2.0, 4.0];
const MAX_RAISES: u32 = 2;

fn rank(card: usize) -> usize {
    card / 2
}

struct Deal {
    cards: [usize; 2],
    board: Option<usize>,
    abstracted: bool,
}

impl Deal {
    /// What `player` observes about the board.
    fn board_view(&self, player: Player) -> String {
        let board = self.board.expect("round two has a board");
        let own = rank(self.cards[player.index()]);
        if self.abstracted {
            match (own, rank(board)) {
                (0, 1) | (0, 2) => return "QK".into(),
                (2, 0) | (2, 1) => return "JQ".into(),
                _ => {}
            }
        }
        LEDUC_CARDS[board].into()
    }

    fn label(&self, player: Player, round_one: &str, current: &str) -> String {
        let card = LEDUC_CARDS[self.cards[player.index()]];
        match self.board {
            None => format!("{card}/{current}"),
            Some(_) => format!("{card}/{round_one}/{}/{current}", self.board_view(player)),
        }
    }

    /// Net chips won by player one at showdown.
    fn showdown(&self, stake: f64) -> f64 {
        let board = rank(self.board.expect("showdown after round two"));
        let strength = |c: usize| {
            let r = rank(c);
            if r == board {
                10 + r
            } else {
                r
            }
        };
        let (a, b) = (strength(self.cards[0]), strength(self.cards[1]));
        match a.cmp(&b) {
            std::cmp::Ordering::Greater => stake,
            std::cmp::Ordering::Less => -stake,
            std::cmp::Ordering::Equal => 0.0,
        }
    }
}

struct Betting<'a> {
    deal: &'a Deal,
    round_one: String,
    history: String,
    contrib: [f64; 2],
    raises: u32,
    actor: Player,
}

impl Betting<'_> {
    fn round(&self) -> usize {
        if self.deal.board.is_some() {
            1
        } else {
            0
        }
    }

    fn next(&self, action: char, contrib: [f64; 2], raises: u32) -> Betting<'_> {
        let mut history = self.history.clone();
        history.push(action);
        Betting {
            deal: self.deal,
            round_one: self.round_one.clone(),
            history,
            contrib,
            raises,
            actor: self.actor.opponent(),
        }
    }

    fn end_of_round(&self, action: char, contrib: [f64; 2]) -> TreeNode {
        let mut history = self.history.clone();
        history.push(action);
        if self.round() == 1 {
            return TreeNode::leaf(self.deal.showdown(contrib[0]));
        }
        let dealt = [self.deal.cards[0], self.deal.cards[1]];
        TreeNode::Chance(
            (0..LEDUC_CARDS.len())
                .filter(|c| !dealt.contains(c))
                .map(|board| {
                    let deal = Deal {
                        cards: self.deal.cards,
                        board: Some(board),
                        abstracted: self.deal.abstracted,
                    };
                    let node = Betting {
                        deal: &deal,
                        round_one: history.clone(),
                        history: String::new(),
                        contrib,
                        raises: 0,
                        actor: Player::One,
                    }
                    .tree();
                    (LEDUC_CARDS[board].to_string(), 0.25, node)
                })
                .collect(),
        )
    }

    fn tree(&self) -> TreeNode {
        let me = self.actor.index();
        let other = 1 - me;
        let facing = self.contrib[other] > self.contrib[me];
        let bet = BET_SIZES[self.round()];
        let mut actions = Vec::with_capacity(3);
        if facing {
            let folded = if self.actor == Player::One {
                -self.contrib[0]
            } else {
                self.contrib[1]
            };
            actions.push(("f".to_string(), TreeNode::leaf(folded)));
            let mut called = self.contrib;
            called[me] = called[other];
            actions.push(("c".to_string(), self.end_of_round('c', called)));
        } else if self.history.is_empty() {
            actions.push(("c".to_string(), self.next('c', self.contrib, self.raises).tree()));
        } else {
            actions.push(("c".to_string(), self.end_of_round('c', self.contrib)));
        }
        if self.raises < MAX_RAISES {
            let mut raised = self.contrib;
            raised[me] = raised[other] + bet;
            actions.push(("r".to_string(), self.next('r', raised, self.raises + 1).tree()));
        }
        TreeNode::decision(self.actor, self.deal.label(self.actor, &self.round_one, &self.history), actions)
    }
}

/// Leduc Hold'em; with `abstracted`, round-two observations are merged so a
/// Jack cannot tell a Queen board from a King board and a King cannot tell a
/// Jack board from a Queen board.
pub fn leduc(abstracted: bool) -> Game {
    let n = LEDUC_CARDS.len();
    let root = TreeNode::Chance(
        (0..n)
            .map(|c1| {
                let second = TreeNode::Chance(
                    (0..n)
                        .filter(|&c2| c2 != c1)
                        .map(|c2| {
                            let deal = Deal {
                                cards: [c1, c2],
                                board: None,
                                abstracted,
                            };
                            let tree = Betting {
                                deal: &deal,
                                round_one: String::new(),
                                history: String::new(),
                                contrib: [1.0, 1.0],
                                raises: 0,
                                actor: Player::One,
                            }
                            .tree();
                            (LEDUC_CARDS[c2].to_string(), 1.0 / (n - 1) as f64, tree)
                        })
                        .collect(),
                );
                (LEDUC_CARDS[c1].to_string(), 1.0 / n as f64, second)
            })
            .collect(),
    );
    let name = if abstracted { "leduc-abstract" } else { "leduc" };
    Game::from_tree(name, root).expect("leduc tree is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deal(c1: usize, c2: usize, board: usize) -> Deal {
        Deal {
            cards: [c1, c2],
            board: Some(board),
            abstracted: false,
        }
    }

    #[test]
    fn pair_beats_high_card() {
        // Js vs Ks with a Jh board: the pair wins.
        assert_eq!(deal(0, 4, 1).showdown(3.0), 3.0);
        // Qs vs Ks with a Jh board: king high wins.
        assert_eq!(deal(2, 4, 1).showdown(3.0), -3.0);
        // Qs vs Qh: split.
        assert_eq!(deal(2, 3, 0).showdown(3.0), 0.0);
    }

    #[test]
    fn abstract_board_views() {
        let d = Deal {
            cards: [0, 4],
            board: Some(2),
            abstracted: true,
        };
        assert_eq!(d.board_view(Player::One), "QK");
        assert_eq!(d.board_view(Player::Two), "JQ");
        let d = Deal {
            cards: [2, 4],
            board: Some(0),
            abstracted: true,
        };
        assert_eq!(d.board_view(Player::One), "Js");
        assert_eq!(d.board_view(Player::Two), "JQ");
        let d = Deal {
            cards: [0, 5],
            board: Some(4),
            abstracted: true,
        };
        assert_eq!(d.board_view(Player::One), "QK");
        assert_eq!(d.board_view(Player::Two), "Ks");
    }
}
