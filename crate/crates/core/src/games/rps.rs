use crate::game::{Game, Player, TreeNode};

const MOVES: [&str; 3] = ["R", "P", "S"];

/// Payoff to the first player: rock beats scissors, scissors beats paper,
/// paper beats rock.
fn payoff(first: usize, second: usize) -> f64 {
    match (first + 3 - second) % 3 {
        0 => 0.0,
        1 => 1.0,
        _ => -1.0,
    }
}

/// Rock-paper-scissors as a sequential game: player two moves without
/// seeing player one's choice.
pub fn rps() -> Game {
    let root = TreeNode::decision(
        Player::One,
        "p1",
        (0..3)
            .map(|a| {
                let reply = TreeNode::decision(
                    Player::Two,
                    "p2",
                    (0..3).map(|b| (MOVES[b].to_string(), TreeNode::leaf(payoff(a, b)))).collect(),
                );
                (MOVES[a].to_string(), reply)
            })
            .collect(),
    );
    Game::from_tree("rps", root).expect("rps tree is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_beats_rock() {
        assert_eq!(payoff(0, 1), -1.0);
        assert_eq!(payoff(1, 0), 1.0);
        assert_eq!(payoff(0, 2), 1.0);
        assert_eq!(payoff(2, 1), 1.0);
        assert_eq!(payoff(2, 2), 0.0);
    }
}
