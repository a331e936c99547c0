//! Gate counts per circuit block, averaged over a set of circuits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::GateSet;
use crate::circuit::{Block, Circuit};

/// Name used for measurements in the per-kind tables.
pub const MEASURE: &str = "measure";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockCounts {
    pub block: Block,
    /// Mean count per gate kind (measurements counted under `measure`).
    pub by_kind: BTreeMap<String, f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateCountReport {
    pub gateset: GateSet,
    pub points: usize,
    pub blocks: Vec<BlockCounts>,
    pub by_kind: BTreeMap<String, f64>,
    pub total: f64,
}

/// Average gate counts of `circuits` (one per grid point), split by block and kind.
///
/// Measurements belong to the measurement block; barriers are not counted.
pub fn count_report(circuits: &[Circuit], gateset: GateSet) -> GateCountReport {
    let points = circuits.len();
    let scale = if points == 0 { 0.0 } else { 1.0 / points as f64 };
    let mut sums: BTreeMap<Block, BTreeMap<String, f64>> =
        Block::ALL.iter().map(|&b| (b, BTreeMap::new())).collect();
    for c in circuits {
        for g in c.gates().iter().filter(|g| !g.is_barrier()) {
            *sums
                .get_mut(&g.block)
                .unwrap()
                .entry(g.kind.name().to_string())
                .or_default() += scale;
        }
        if !c.measurements().is_empty() {
            *sums
                .get_mut(&Block::Measurement)
                .unwrap()
                .entry(MEASURE.to_string())
                .or_default() += scale * c.measurements().len() as f64;
        }
    }
    let mut by_kind: BTreeMap<String, f64> = BTreeMap::new();
    let blocks: Vec<BlockCounts> = Block::ALL
        .iter()
        .map(|&block| {
            let kinds = sums.remove(&block).unwrap_or_default();
            for (k, v) in &kinds {
                *by_kind.entry(k.clone()).or_default() += v;
            }
            BlockCounts {
                block,
                total: kinds.values().fold(0.0, |a, b| a + b),
                by_kind: kinds,
            }
        })
        .collect();
    GateCountReport {
        gateset,
        points,
        total: blocks.iter().map(|b| b.total).fold(0.0, |a, b| a + b),
        blocks,
        by_kind,
    }
}

impl GateCountReport {
    pub fn block(&self, block: Block) -> &BlockCounts {
        self.blocks
            .iter()
            .find(|b| b.block == block)
            .expect("every block is present")
    }

    /// Mean count of one gate kind over all blocks.
    pub fn kind(&self, name: &str) -> f64 {
        self.by_kind.get(name).copied().unwrap_or(0.0)
    }

    /// Rows `block,gate_kind,mean_count`, with a `total` row per block and an `all` block.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("block,gate_kind,mean_count\n");
        let mut row = |block: &str, kind: &str, v: f64| {
            let _ = writeln!(out, "{block},{kind},{v}");
        };
        for b in &self.blocks {
            for (k, v) in &b.by_kind {
                row(b.block.name(), k, *v);
            }
            row(b.block.name(), "total", b.total);
        }
        for (k, v) in &self.by_kind {
            row("all", k, *v);
        }
        row("all", "total", self.total);
        out
    }

    pub fn to_table(&self) -> String {
        let kinds: Vec<&String> = self.by_kind.keys().collect();
        let mut out = String::new();
        let _ = write!(out, "{:<18}", format!("{} ({} pts)", self.gateset, self.points));
        for k in &kinds {
            let _ = write!(out, "{k:>9}");
        }
        let _ = writeln!(out, "{:>10}", "total");
        let mut line = |name: &str, get: &dyn Fn(&str) -> f64, total: f64| {
            let _ = write!(out, "{name:<18}");
            for k in &kinds {
                let _ = write!(out, "{:>9.1}", get(k));
            }
            let _ = writeln!(out, "{total:>10.1}");
        };
        for b in &self.blocks {
            line(
                b.block.name(),
                &|k| b.by_kind.get(k).copied().unwrap_or(0.0),
                b.total,
            );
        }
        line("all", &|k| self.kind(k), self.total);
        out
    }
}
