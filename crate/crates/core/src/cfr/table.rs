use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

/// What a block of persistent storage is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableRole {
    /// Whole-game (or gadget-game) solver tables.
    Full,
    Trunk,
    /// Transient tables of one subgame solve.
    Subgame,
    /// Running sums of root counterfactual values.
    RootValues,
}

impl TableRole {
    fn index(self) -> usize {
        self as usize
    }
}

/// Counts live and peak storage entries across every table registered
/// with it. One entry is one stored real (a regret, a strategy weight or a
/// root value).
#[derive(Debug, Default)]
pub struct MemoryMeter {
    live: AtomicUsize,
    peak: AtomicUsize,
    by_role: [AtomicUsize; 4],
    peak_by_role: [AtomicUsize; 4],
}

impl MemoryMeter {
    pub fn new() -> Arc<MemoryMeter> {
        Arc::new(MemoryMeter::default())
    }

    fn add(&self, role: TableRole, n: usize) {
        let live = self.live.fetch_add(n, Ordering::SeqCst) + n;
        self.peak.fetch_max(live, Ordering::SeqCst);
        let r = self.by_role[role.index()].fetch_add(n, Ordering::SeqCst) + n;
        self.peak_by_role[role.index()].fetch_max(r, Ordering::SeqCst);
    }

    fn remove(&self, role: TableRole, n: usize) {
        self.live.fetch_sub(n, Ordering::SeqCst);
        self.by_role[role.index()].fetch_sub(n, Ordering::SeqCst);
    }

    pub fn live(&self) -> usize {
        self.live.load(Ordering::SeqCst)
    }

    pub fn peak(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }

    pub fn live_for(&self, role: TableRole) -> usize {
        self.by_role[role.index()].load(Ordering::SeqCst)
    }

    pub fn peak_for(&self, role: TableRole) -> usize {
        self.peak_by_role[role.index()].load(Ordering::SeqCst)
    }
}

/// Registration of `entries` stored reals with a meter, released on drop.
#[derive(Debug)]
pub struct MeterGuard {
    meter: Option<Arc<MemoryMeter>>,
    role: TableRole,
    entries: usize,
}

impl MeterGuard {
    pub fn new(meter: Option<&Arc<MemoryMeter>>, role: TableRole, entries: usize) -> Self {
        if let Some(m) = meter {
            m.add(role, entries);
        }
        MeterGuard {
            meter: meter.cloned(),
            role,
            entries,
        }
    }
}

impl Drop for MeterGuard {
    fn drop(&mut self) {
        if let Some(m) = &self.meter {
            m.remove(self.role, self.entries);
        }
    }
}

/// Cumulative regrets and cumulative reach-weighted strategy sums for a set
/// of `(information set, action)` pairs.
#[derive(Debug)]
pub struct AccumulatorTable {
    /// Game information-set index of each row.
    infosets: Vec<usize>,
    offsets: Vec<usize>,
    pub(crate) regret: Vec<f64>,
    pub(crate) weight: Vec<f64>,
    _guard: MeterGuard,
}

impl AccumulatorTable {
    pub(crate) fn new(infosets: Vec<usize>, offsets: Vec<usize>, role: TableRole, meter: Option<&Arc<MemoryMeter>>) -> Self {
        let n = *offsets.last().unwrap_or(&0);
        AccumulatorTable {
            infosets,
            offsets,
            regret: vec![0.0; n],
            weight: vec![0.0; n],
            _guard: MeterGuard::new(meter, role, 2 * n),
        }
    }

    pub fn num_rows(&self) -> usize {
        self.infosets.len()
    }

    /// Number of stored reals (two per pair).
    pub fn num_entries(&self) -> usize {
        2 * self.regret.len()
    }

    /// Game information-set index of row `row`.
    pub fn infoset(&self, row: usize) -> usize {
        self.infosets[row]
    }

    pub fn regrets(&self, row: usize) -> &[f64] {
        &self.regret[self.offsets[row]..self.offsets[row + 1]]
    }

    pub fn weights(&self, row: usize) -> &[f64] {
        &self.weight[self.offsets[row]..self.offsets[row + 1]]
    }

    /// Normalized average strategy of a row; uniform when no weight has been
    /// accumulated.
    pub fn average(&self, row: usize) -> Vec<f64> {
        let w = self.weights(row);
        let sum: f64 = w.iter().sum();
        if sum > 0.0 {
            w.iter().map(|x| x / sum).collect()
        } else {
            vec![1.0 / w.len() as f64; w.len()]
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = usize> + '_ {
        0..self.infosets.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meter_tracks_peak() {
        let meter = MemoryMeter::new();
        let a = AccumulatorTable::new(vec![0], vec![0, 3], TableRole::Trunk, Some(&meter));
        {
            let _b = AccumulatorTable::new(vec![0, 1], vec![0, 2, 4], TableRole::Subgame, Some(&meter));
            assert_eq!(meter.live(), 14);
        }
        assert_eq!(meter.live(), 6);
        assert_eq!(meter.peak(), 14);
        assert_eq!(meter.peak_for(TableRole::Subgame), 8);
        assert_eq!(meter.live_for(TableRole::Subgame), 0);
        assert_eq!(a.average(0), vec![1.0 / 3.0; 3]);
    }
}
