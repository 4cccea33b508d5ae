use crate::game::{Game, Player, TreeNode};

const CARDS: [&str; 3] = ["J", "Q", "K"];

fn showdown(cards: [usize; 2], stake: f64) -> TreeNode {
    TreeNode::leaf(if cards[0] > cards[1] { stake } else { -stake })
}

fn label(cards: [usize; 2], player: Player, history: &str) -> String {
    format!("{}/{}", CARDS[cards[player.index()]], history)
}

fn betting(cards: [usize; 2]) -> TreeNode {
    let node = |player: Player, history: &str, actions: Vec<(&str, TreeNode)>| {
        TreeNode::decision(
            player,
            label(cards, player, history),
            actions.into_iter().map(|(a, t)| (a.to_string(), t)).collect(),
        )
    };
    let after_pass = node(
        Player::Two,
        "p",
        vec![
            ("p", showdown(cards, 1.0)),
            (
                "b",
                node(Player::One, "pb", vec![("p", TreeNode::leaf(-1.0)), ("b", showdown(cards, 2.0))]),
            ),
        ],
    );
    let after_bet = node(Player::Two, "b", vec![("p", TreeNode::leaf(1.0)), ("b", showdown(cards, 2.0))]);
    node(Player::One, "", vec![("p", after_pass), ("b", after_bet)])
}

/// Three-card Kuhn poker: ante 1, one betting round with a single bet of 1.
pub fn kuhn() -> Game {
    let root = TreeNode::Chance(
        (0..3)
            .map(|c1| {
                let second = TreeNode::Chance(
                    (0..3)
                        .filter(|&c2| c2 != c1)
                        .map(|c2| (CARDS[c2].to_string(), 0.5, betting([c1, c2])))
                        .collect(),
                );
                (CARDS[c1].to_string(), 1.0 / 3.0, second)
            })
            .collect(),
    );
    Game::from_tree("kuhn", root).expect("kuhn tree is well formed")
}
