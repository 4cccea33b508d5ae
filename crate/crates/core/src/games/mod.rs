//! Built-in benchmark games.

mod kuhn;
mod leduc;
mod rps;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::game::Game;

pub use kuhn::kuhn;
pub use leduc::{leduc, LEDUC_CARDS};
pub use rps::rps;

/// Identifier of a built-in game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GameId {
    Rps,
    Kuhn,
    Leduc,
    LeducAbstract,
}

impl GameId {
    pub fn as_str(self) -> &'static str {
        match self {
            GameId::Rps => "rps",
            GameId::Kuhn => "kuhn",
            GameId::Leduc => "leduc",
            GameId::LeducAbstract => "leduc-abstract",
        }
    }
}

impl FromStr for GameId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rps" => Ok(GameId::Rps),
            "kuhn" => Ok(GameId::Kuhn),
            "leduc" => Ok(GameId::Leduc),
            "leduc-abstract" => Ok(GameId::LeducAbstract),
            other => Err(Error::UnknownGame(other.to_string())),
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Builds and validates a built-in game. `abstraction` turns `leduc` into
/// its card-abstracted variant and is ignored by the other games.
pub fn build_game(name: &str, abstraction: bool) -> Result<Game> {
    let id: GameId = name.parse()?;
    let game = match id {
        GameId::Rps => rps(),
        GameId::Kuhn => kuhn(),
        GameId::Leduc => leduc(abstraction),
        GameId::LeducAbstract => leduc(true),
    };
    game.validate()?;
    Ok(game)
}
