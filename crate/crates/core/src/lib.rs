pub mod baselines;
pub mod best_response;
pub mod cfr;
pub mod cfrd;
pub mod decomposition;
pub mod error;
pub mod game;
pub mod games;
pub mod io;
pub mod profile;
pub mod seqform;

pub use error::{Error, Result};
