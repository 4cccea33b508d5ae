//! Vanilla counterfactual regret minimization.

mod solver;
mod table;
pub(crate) mod tree;

pub use solver::{cfr_solve, cfr_solve_traced, CfrOutput, CfrSolver, Checkpoints, TracePoint};
pub use table::{AccumulatorTable, MemoryMeter, MeterGuard, TableRole};

/// Strategy proportional to the positive parts of `regrets`, or uniform when
/// no entry is positive.
pub fn regret_matching(regrets: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; regrets.len()];
    regret_matching_into(regrets, &mut out);
    out
}

#[inline]
pub(crate) fn regret_matching_into(regrets: &[f64], out: &mut [f64]) {
    let total: f64 = regrets.iter().map(|r| r.max(0.0)).sum();
    if total > 0.0 {
        for (o, r) in out.iter_mut().zip(regrets) {
            *o = r.max(0.0) / total;
        }
    } else {
        out.fill(1.0 / regrets.len() as f64);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regret_matching_examples() {
        assert_eq!(regret_matching(&[3.0, 1.0, 0.0]), vec![0.75, 0.25, 0.0]);
        assert_eq!(regret_matching(&[-1.0, -2.0, -3.0]), vec![1.0 / 3.0; 3]);
        assert_eq!(regret_matching(&[0.0, 0.0, 5.0]), vec![0.0, 0.0, 1.0]);
    }
}
