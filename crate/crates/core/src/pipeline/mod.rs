//! The three-step construction connecting a permutation close to the identity
//! to the identity.
//!
//! 1. [`step1_localize`]: tokens displaced by more than `δ^ε` are gathered
//!    into one coarse cell, redistributed along the coarse grid and put home.
//! 2. [`step2_blockify`]: slab by slab, tokens crossing a coarse boundary are
//!    swapped with partners found along their orbits until every token sits
//!    in its home coarse cell.
//! 3. [`step3_finish`]: the coarse permutation is routed with whole-cell
//!    translations, then each cell is routed independently.

mod config;
mod experiment;
mod generator;
mod orbits;
mod step1;
mod step2;
mod step3;

pub use config::{choose_epsilon, coarse_side, Constants, PipelineConfig};
pub use experiment::{exponent_experiment, loglog_slope, write_csv, ExperimentRow};
pub use generator::random_near_identity;
pub use orbits::{compute_orbits, OrbitRecord, OrbitReport};
pub use step1::step1_localize;
pub use step2::step2_blockify;
pub use step3::{coarse_permutation, is_block_constant, step3_finish};

use crate::error::Result;
use crate::lattice::{Permutation, RegionSpec, Tiling};
use crate::movements::DiscreteFlow;

/// A named post-condition measured on a step's output.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    pub fn new(name: &'static str, value: f64, limit: f64) -> Self {
        Check { name, value, limit }
    }

    pub fn pass(&self) -> bool {
        self.value <= self.limit
    }
}

/// Output of one step.
#[derive(Clone, Debug)]
pub struct StepReport {
    pub flow: DiscreteFlow,
    pub result: Permutation,
    pub cost: f64,
    /// The step's cost bound with the ledger constant.
    pub bound: f64,
    pub checks: Vec<Check>,
    /// Informational measurements without a pinned limit.
    pub metrics: Vec<(&'static str, f64)>,
}

impl StepReport {
    pub(crate) fn new(flow: DiscreteFlow, result: Permutation, bound: f64, checks: Vec<Check>) -> Self {
        StepReport { cost: flow.total_cost(), flow, result, bound, checks, metrics: Vec::new() }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.0 == name).map(|m| m.1)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.cost <= self.bound && self.checks.iter().all(Check::pass)
    }
}

/// Per-step results of [`connect_to_identity`].
#[derive(Clone, Debug)]
pub struct Ledger {
    pub config: PipelineConfig,
    pub steps: Vec<StepReport>,
}

#[derive(Clone, Debug)]
pub struct Connection {
    pub flow: DiscreteFlow,
    pub cost: f64,
    pub ledger: Ledger,
}

/// Runs the three steps with δ measured as `‖p − Id‖₂`.
pub fn connect_to_identity(p: &Permutation) -> Result<Connection> {
    let cfg = PipelineConfig::for_permutation(p, None)?;
    connect_with(p, &cfg)
}

pub fn connect_with(p: &Permutation, cfg: &PipelineConfig) -> Result<Connection> {
    let r1 = step1_localize(p, cfg)?;
    let r2 = step2_blockify(&r1.result, cfg)?;
    let r3 = step3_finish(&r2.result, cfg)?;
    let mut flow = DiscreteFlow::new(*p.tiling());
    for r in [&r1, &r2, &r3] {
        flow.extend(r.flow.clone())?;
    }
    Ok(Connection { cost: flow.total_cost(), flow, ledger: Ledger { config: cfg.clone(), steps: vec![r1, r2, r3] } })
}

/// Coarse cell geometry: `s^ν` cells of `w^ν` cubes each.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Cells {
    pub t: Tiling,
    pub s: usize,
    pub w: usize,
}

impl Cells {
    pub fn new(t: Tiling, s: usize) -> Self {
        Cells { t, s, w: t.n() / s }
    }

    pub fn cell_coords(&self, x: usize) -> Vec<usize> {
        self.t.coords(x).into_iter().map(|c| c / self.w).collect()
    }

    pub fn cell_index(&self, x: usize) -> usize {
        self.cell_coords(x).iter().fold(0, |acc, &c| acc * self.s + c)
    }

    /// Coarse coordinate of `x` on one axis.
    pub fn slab(&self, x: usize, axis: usize) -> usize {
        (x / self.t.stride(axis)) % self.t.n() / self.w
    }

    pub fn coarse(&self) -> Tiling {
        Tiling::new(self.t.nu(), self.s).expect("coarse tiling is valid")
    }

    pub fn cell_box(&self, cell: &[usize]) -> RegionSpec {
        let lo: Vec<usize> = cell.iter().map(|&c| c * self.w).collect();
        let hi: Vec<usize> = cell.iter().map(|&c| c * self.w + self.w - 1).collect();
        RegionSpec { lo, hi }
    }

    /// Box spanning cell `cell` and its neighbour `cell + e_axis`.
    pub fn pair_box(&self, cell: &[usize], axis: usize) -> RegionSpec {
        let mut r = self.cell_box(cell);
        r.hi[axis] += self.w;
        r
    }

    pub fn cells(&self) -> Vec<Vec<usize>> {
        let c = self.coarse();
        (0..c.len()).map(|k| c.coords(k)).collect()
    }
}

/// Greedy nearest-first matching of `sources` to `targets` by squared center distance.
pub(crate) fn nearest_matching(t: &Tiling, sources: &[usize], targets: &[usize]) -> Vec<(usize, usize)> {
    let mut cand: Vec<(u64, usize, usize)> = Vec::with_capacity(sources.len() * targets.len());
    let n2 = (t.n() * t.n()) as f64;
    for (i, &a) in sources.iter().enumerate() {
        for (j, &b) in targets.iter().enumerate() {
            cand.push(((t.dist2(a, b) * n2).round() as u64, i, j));
        }
    }
    cand.sort_unstable();
    let mut used_s = vec![false; sources.len()];
    let mut used_t = vec![false; targets.len()];
    let mut out = Vec::with_capacity(sources.len());
    for (_, i, j) in cand {
        if !used_s[i] && !used_t[j] {
            used_s[i] = true;
            used_t[j] = true;
            out.push((sources[i], targets[j]));
        }
    }
    out
}
