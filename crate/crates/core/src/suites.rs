//! Acceptance suites shared by the integration tests and `cubeflow verify`.
//!
//! Each suite runs one acceptance criterion and returns one [`Line`] per
//! sub-check. A suite passes when all of its lines pass.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::contflow::{
    build_swap_field, bump_battery, discrete_swap_l2, l1l2_norm, verify_swap_map, weak_divergence_residual, FrameParams,
};
use crate::error::{Error, Result};
use crate::lattice::{Coloring, Permutation, RegionSpec, Tiling};
use crate::movements::{flow_apply_and_cost, unit_cost, DiscreteFlow};
use crate::oracle::{equivalence_report, CayleyGraph, Limits, Mode};
use crate::pipeline::{connect_to_identity, exponent_experiment, loglog_slope, random_near_identity, ExperimentRow};
use crate::routing::{color_array_flow, color_cube_flow, route_array, route_rectangle, C_COL, C_CUBE, C_IMPL};

/// One sub-check of a suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Line {
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub pass: bool,
    pub lines: Vec<Line>,
}

impl SuiteReport {
    fn new(suite: &'static str, lines: Vec<Line>) -> Self {
        SuiteReport { suite, pass: lines.iter().all(|l| l.pass), lines }
    }

    pub fn line(&self, check: &str) -> Option<&Line> {
        self.lines.iter().find(|l| l.check == check)
    }
}

fn line(check: &str, pass: bool, detail: String) -> Line {
    Line { check: check.into(), pass, detail }
}

/// Suite ids in criterion order.
pub const SUITES: [&str; 10] = [
    "exactness",
    "oracle-equivalence",
    "oracle-sandwich",
    "duration",
    "coloring",
    "step-bounds",
    "exponent",
    "appendix-norm",
    "appendix-swap",
    "appendix-divergence",
];

pub fn run_suite(name: &str) -> Result<SuiteReport> {
    match name {
        "exactness" => exactness(),
        "oracle-equivalence" => oracle_equivalence(),
        "oracle-sandwich" => oracle_sandwich(),
        "duration" => duration(),
        "coloring" => coloring(),
        "step-bounds" => step_bounds(),
        "exponent" => exponent().map(|r| r.0),
        "appendix-norm" => appendix_norm(),
        "appendix-swap" => appendix_swap(),
        "appendix-divergence" => appendix_divergence(),
        _ => Err(Error::Unsupported(format!("unknown suite {name:?}; known: {}", SUITES.join(", ")))),
    }
}

/// Random near-identity instances across the exactness grid: `(ν, N, δ, seed)`.
fn exactness_instances() -> Vec<(usize, usize, f64, u64)> {
    let shapes = [(2, 16), (2, 32), (2, 64), (3, 8), (3, 16)];
    let deltas = [0.02, 0.05, 0.1, 0.2];
    let mut out = Vec::new();
    for (k, &(nu, n)) in shapes.iter().enumerate() {
        for seed in 0..40u64 {
            out.push((nu, n, deltas[seed as usize % deltas.len()], 1000 * k as u64 + seed));
        }
    }
    out
}

/// 200 pipeline runs whose flows must bring `P` to the identity exactly.
pub fn exactness() -> Result<SuiteReport> {
    let inst = exactness_instances();
    let res: Vec<(usize, usize, u64, bool)> = inst
        .par_iter()
        .map(|&(nu, n, delta, seed)| {
            let t = Tiling::new(nu, n)?;
            let p = random_near_identity(&t, delta, seed);
            let c = connect_to_identity(&p)?;
            Ok((nu, n, seed, c.flow.apply(&p)?.is_identity()))
        })
        .collect::<Result<_>>()?;
    let failed: Vec<String> = res.iter().filter(|r| !r.3).map(|r| format!("nu={} N={} seed={}", r.0, r.1, r.2)).collect();
    let detail = format!("{} instances, {} not at Id {:?}", res.len(), failed.len(), failed);
    Ok(SuiteReport::new("exactness", vec![line("flow(P) == Id", failed.is_empty(), detail)]))
}

/// The 2×2 tiling and the length-4 array.
fn tiny_tilings() -> [Tiling; 2] {
    [Tiling::new(2, 2).expect("2x2"), Tiling::new(1, 4).expect("1x4")]
}

fn tiny_name(t: &Tiling) -> String {
    format!("nu={} N={}", t.nu(), t.n())
}

/// `dist_E ≤ 2·dist_S` on every permutation of the tiny tilings.
pub fn oracle_equivalence() -> Result<SuiteReport> {
    let mut lines = Vec::new();
    for t in tiny_tilings() {
        let rep = equivalence_report(&t, None, Limits::default())?;
        let worst = rep.rows.iter().map(|r| if r.dist_s > 0.0 { r.dist_e / r.dist_s } else { 0.0 }).fold(0.0, f64::max);
        lines.push(line(
            &format!("dist_E <= 2 dist_S ({})", tiny_name(&t)),
            rep.holds && rep.rows.len() == 24,
            format!("{} permutations, max dist_E/dist_S = {worst:.6}, max dist_S/dist_E = {:.6}", rep.rows.len(), rep.max_ratio),
        ));
    }
    Ok(SuiteReport::new("oracle-equivalence", lines))
}

fn all_from_identity(t: &Tiling, mode: Mode) -> Result<HashMap<Vec<usize>, f64>> {
    Ok(CayleyGraph::new(*t, mode, Limits::default())?
        .all_from_identity()?
        .into_iter()
        .map(|(p, d)| (p.into_table(), d))
        .collect())
}

/// Constructive flows cost at least the oracle distance, and the oracle
/// distance dominates the L² chord.
///
/// The chord check fails on the nose: one adjacent swap has
/// `‖P − Id‖₂ = √2·N^{−1−ν/2}` but costs `N^{−1−ν/2}`. The line reports the
/// worst ratio `l2 / dist`, which is `√2`.
pub fn oracle_sandwich() -> Result<SuiteReport> {
    let mut lines = Vec::new();
    let mut chord_ratio: f64 = 0.0;
    for t in tiny_tilings() {
        let ds = all_from_identity(&t, Mode::S)?;
        let de = all_from_identity(&t, Mode::E)?;
        let dm = all_from_identity(&t, Mode::Mixed)?;
        let full = t.full();
        let (mut worst_gap, mut bad) = (f64::INFINITY, 0usize);
        for (table, &d_s) in &ds {
            let p = Permutation::from_table(t, table.clone())?;
            // constructive: bounded-duration routing, S-costed
            let f = if t.nu() == 1 { route_array(&full, &p)? } else { route_rectangle(&full, &p)? };
            let (q, cost) = flow_apply_and_cost(&p, &f)?;
            let d_m = dm[table];
            let gap = cost - d_s.max(d_m);
            worst_gap = worst_gap.min(gap);
            bad += usize::from(!q.is_identity() || gap < -1e-12 || d_m > d_s.min(de[table]) + 1e-12);
            let l2 = p.l2_to_identity();
            if d_m > 0.0 {
                chord_ratio = chord_ratio.max(l2 / d_m);
            }
        }
        lines.push(line(
            &format!("constructive cost >= oracle ({})", tiny_name(&t)),
            bad == 0,
            format!("{} permutations, min(cost - dist) = {worst_gap:.3e}, failures {bad}", ds.len()),
        ));
    }
    lines.push(line(
        "l2 <= oracle distance",
        chord_ratio <= 1.0 + 1e-12,
        format!("max l2/dist = {chord_ratio:.12} (a single adjacent swap gives sqrt(2))"),
    ));
    Ok(SuiteReport::new("oracle-sandwich", lines))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

/// `route_array` within `ℓ` rounds for all permutations with `ℓ ≤ 6`, and
/// `route_rectangle` within `C_impl·(side sum)` on random 4×4 instances.
pub fn duration() -> Result<SuiteReport> {
    let mut count = 0;
    let mut worst = 0.0f64;
    let mut ok = true;
    for l in 1..=6 {
        let t = Tiling::new(1, l)?;
        for table in permutations(l) {
            let p = Permutation::from_table(t, table)?;
            let f = route_array(&t.full(), &p)?;
            ok &= f.apply(&p)?.is_identity() && f.duration() <= l;
            worst = worst.max(f.duration() as f64 / l as f64);
            count += 1;
        }
    }
    let arrays = line("route_array duration <= l", ok, format!("{count} permutations, max duration/l = {worst:.3}"));

    let t = Tiling::new(2, 4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x4a4);
    let (mut ok, mut worst) = (true, 0.0f64);
    for _ in 0..100 {
        let mut table: Vec<usize> = (0..16).collect();
        table.shuffle(&mut rng);
        let p = Permutation::from_table(t, table)?;
        let f = route_rectangle(&t.full(), &p)?;
        let c = f.duration() as f64 / 8.0;
        ok &= f.apply(&p)?.is_identity() && c <= C_IMPL;
        worst = worst.max(c);
    }
    let rect = line(
        "route_rectangle duration <= C_impl (side sum)",
        ok && C_IMPL <= 3.0,
        format!("100 random 4x4, max duration/(side sum) = {worst:.3}, C_impl = {C_IMPL}"),
    );
    Ok(SuiteReport::new("duration", vec![arrays, rect]))
}

fn random_coloring(t: Tiling, r: &RegionSpec, b: usize, rng: &mut ChaCha8Rng) -> Result<Coloring> {
    let mut colors = vec![0u8; r.len()];
    colors[..b].fill(1);
    colors.shuffle(rng);
    Coloring::new(t, r.clone(), colors)
}

/// Replays `f` from `from`; `None` if the black count changes at some step.
fn replay_colors(from: &Coloring, f: &DiscreteFlow) -> Result<Option<Coloring>> {
    let b = from.count(1);
    let mut c = from.clone();
    for m in f.steps() {
        c.transport(&m.cube_pairs())?;
        if c.count(1) != b {
            return Ok(None);
        }
    }
    Ok(Some(c))
}

/// Largest `cost / (size·√min(b, tot − b)·unit)` over 100 random pairs, and whether
/// every flow reached its target with the black count conserved.
fn coloring_family(
    t: Tiling,
    r: &RegionSpec,
    size: usize,
    seed: u64,
    flow: impl Fn(&Coloring, &Coloring) -> Result<DiscreteFlow>,
) -> Result<(f64, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tot = r.len();
    let (mut worst, mut ok) = (0.0f64, true);
    for _ in 0..100 {
        let b = rng.gen_range(0..=tot);
        let from = random_coloring(t, r, b, &mut rng)?;
        let to = random_coloring(t, r, b, &mut rng)?;
        let f = flow(&from, &to)?;
        ok &= replay_colors(&from, &f)?.as_ref() == Some(&to);
        let m = b.min(tot - b);
        if m == 0 {
            ok &= f.total_cost() == 0.0;
        } else {
            worst = worst.max(f.total_cost() / (size as f64 * (m as f64).sqrt() * unit_cost(&t)));
        }
    }
    Ok((worst, ok))
}

/// Coloring flows on arrays and square blocks stay under one constant per family.
pub fn coloring() -> Result<SuiteReport> {
    let mut lines = Vec::new();
    let t = Tiling::new(2, 16)?;
    let mut fams: Vec<(&str, f64, Vec<(usize, f64, bool)>)> = Vec::new();

    let mut arrays = Vec::new();
    for l in [8usize, 16] {
        let a = RegionSpec::array(vec![3, 0], 1, l)?;
        let (c, ok) = coloring_family(t, &a, l, 40 + l as u64, |x, y| color_array_flow(&a, x, y))?;
        arrays.push((l, c, ok));
    }
    fams.push(("array", C_COL, arrays));

    let mut cubes = Vec::new();
    for s in [4usize, 8, 16] {
        let k = RegionSpec::new(vec![0, 0], vec![s - 1, s - 1])?;
        let (c, ok) = coloring_family(t, &k, s, 80 + s as u64, |x, y| Ok(color_cube_flow(&k, x, y)?.flow))?;
        cubes.push((s, c, ok));
    }
    fams.push(("cube", C_CUBE, cubes));

    for (name, bound, rows) in fams {
        let max = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        let min = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let sizes: Vec<String> = rows.iter().map(|r| format!("{}:{:.3}", r.0, r.1)).collect();
        lines.push(line(
            &format!("{name} cost <= C size sqrt(min(b, tot-b)) unit"),
            max <= bound,
            format!("C = {bound:.3}, measured per size {}", sizes.join(" ")),
        ));
        lines.push(line(
            &format!("{name} constant stable within x4"),
            min > 0.0 && max / min <= 4.0,
            format!("max/min = {:.3}", max / min),
        ));
        lines.push(line(
            &format!("{name} black count conserved"),
            rows.iter().all(|r| r.2),
            "every step of 100 pairs per size".into(),
        ));
    }
    Ok(SuiteReport::new("coloring", lines))
}

/// Post-conditions of the three steps on 50 random planar instances.
pub fn step_bounds() -> Result<SuiteReport> {
    let t = Tiling::new(2, 64)?;
    let runs: Vec<_> = (0..50u64)
        .into_par_iter()
        .map(|k| {
            let delta = 0.02 + 0.18 * k as f64 / 49.0;
            let p = random_near_identity(&t, delta, 500 + k);
            connect_to_identity(&p).map(|c| (k, c))
        })
        .collect::<Result<_>>()?;
    let mut lines = Vec::new();
    for (step, names) in [(0usize, &["max_displacement", "l2", "colored_count"][..]), (1, &["block_violations"][..]), (2, &["residual_moved"][..])] {
        for &name in names {
            let mut worst = f64::NEG_INFINITY;
            let mut fails = Vec::new();
            for (k, c) in &runs {
                let ch = c.ledger.steps[step].check(name).ok_or_else(|| Error::Numerical(format!("missing check {name}")))?;
                let rel = if ch.limit > 0.0 { ch.value / ch.limit } else { ch.value };
                worst = worst.max(rel);
                if !ch.pass() {
                    fails.push(*k);
                }
            }
            lines.push(line(
                &format!("step{} {name}", step + 1),
                fails.is_empty(),
                format!("50 instances, worst value/limit = {worst:.4}, failing seeds {fails:?}"),
            ));
        }
    }
    Ok(SuiteReport::new("step-bounds", lines))
}

pub const EXPONENT_NS: [usize; 2] = [32, 64];
/// Geometric from `0.005` to `0.075`. The top stays below `2^{-7/2}` with room
/// for the generator's 10% spread, so every instance has at least two coarse
/// cells per axis; above it the construction degenerates to routing the
/// whole tiling at once.
pub const EXPONENT_DELTAS: [f64; 6] = [0.005, 0.0086, 0.0148, 0.0254, 0.0436, 0.075];
pub const EXPONENT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// Runs the exponent experiment and checks `l2 ≤ cost ≤ C_total·l2^{2/7}`
/// with `C_total` fitted at the largest `δ`. Returns the rows with the report.
pub fn exponent() -> Result<(SuiteReport, Vec<ExperimentRow>)> {
    let rows = exponent_experiment(2, &EXPONENT_NS, &EXPONENT_DELTAS, &EXPONENT_SEEDS)?;
    let alpha = 2.0 / 7.0;
    let top = EXPONENT_DELTAS[EXPONENT_DELTAS.len() - 1];
    let c_total = rows.iter().filter(|r| r.delta == top).map(|r| r.total / r.l2.powf(alpha)).fold(0.0, f64::max);
    let below = rows.iter().filter(|r| r.total < r.l2).count();
    let min_ratio = rows.iter().map(|r| r.total / r.l2).fold(f64::INFINITY, f64::min);
    let above: Vec<String> = rows
        .iter()
        .filter(|r| r.total > c_total * r.l2.powf(alpha) * (1.0 + 1e-12))
        .map(|r| format!("N={} delta={} seed={}", r.n, r.delta, r.seed))
        .collect();
    let slope = loglog_slope(&rows);
    let lines = vec![
        line("cost >= l2", below == 0, format!("{} rows, {below} below, min cost/l2 = {min_ratio:.12}", rows.len())),
        line(
            "cost >= l2/sqrt(2)",
            min_ratio >= std::f64::consts::FRAC_1_SQRT_2 - 1e-12,
            format!("min cost/l2 = {min_ratio:.4} against 1/sqrt(2) = 0.7071"),
        ),
        line(
            "cost <= C_total l2^(2/7)",
            above.is_empty(),
            format!("C_total = {c_total:.4} fitted at delta = {top}, rows above {above:?}"),
        ),
        line(
            "log-log slope (informational)",
            true,
            format!("slope = {}", slope.map_or("n/a".into(), |s| format!("{s:.4}"))),
        ),
    ];
    Ok((SuiteReport::new("exponent", lines), rows))
}

/// The frame grid `(N, M) ∈ {4, 8, 16} × {2..8}`.
pub fn appendix_grid() -> Vec<FrameParams> {
    [4usize, 8, 16]
        .into_iter()
        .flat_map(|n| (2..=8).map(move |m| FrameParams::new(n, m).expect("m >= 2")))
        .collect()
}

/// `‖v‖_{L¹L²} ≤ 20·M·N⁻²` and within `×4` of the discrete swap's l2.
pub fn appendix_norm() -> Result<SuiteReport> {
    let rows: Vec<(FrameParams, f64)> = appendix_grid()
        .into_par_iter()
        .map(|p| Ok((p, l1l2_norm(&build_swap_field(p)?, 64)?)))
        .collect::<Result<_>>()?;
    let bound = |p: &FrameParams| 20.0 * p.m as f64 * p.h * p.h;
    let max_a = rows.iter().map(|(p, v)| v / bound(p)).fold(0.0, f64::max);
    let ratios: Vec<f64> = rows.iter().map(|(p, v)| v / discrete_swap_l2(p)).collect();
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    Ok(SuiteReport::new(
        "appendix-norm",
        vec![
            line("norm <= 20 M N^-2", max_a <= 1.0, format!("{} frames, max norm/bound = {max_a:.4}", rows.len())),
            line(
                "norm within x4 of discrete l2",
                lo >= 0.25 && hi <= 4.0,
                format!("norm/l2 in [{lo:.4}, {hi:.4}]"),
            ),
        ],
    ))
}

/// The time-1 map swaps the end cubes and fixes the rest, to `10⁻³·N⁻¹`, at step `10⁻⁴`.
pub fn appendix_swap() -> Result<SuiteReport> {
    let reps: Vec<_> = appendix_grid()
        .into_iter()
        .enumerate()
        .map(|(k, p)| verify_swap_map(p, 16, 1e-4, k as u64).map(|r| (p, r)))
        .collect::<Result<_>>()?;
    let fails: Vec<String> = reps.iter().filter(|(_, r)| !r.pass()).map(|(p, _)| format!("N={} M={}", p.n, p.m)).collect();
    let worst = reps.iter().map(|(p, r)| r.translation_error.max(r.fixed_error) * p.n as f64).fold(0.0, f64::max);
    let samples: usize = reps.iter().map(|r| r.1.samples).sum();
    Ok(SuiteReport::new(
        "appendix-swap",
        vec![line(
            "time-1 map error <= 1e-3 / N",
            fails.is_empty(),
            format!("{samples} samples, max error*N = {worst:.3e}, failing frames {fails:?}"),
        )],
    ))
}

/// Weak divergence below `10⁻⁶` on the battery, and above `10⁻³` once `ε` is perturbed.
pub fn appendix_divergence() -> Result<SuiteReport> {
    let rows: Vec<(FrameParams, f64, f64)> = appendix_grid()
        .into_iter()
        .map(|p| {
            let good = weak_divergence_residual(&build_swap_field(p)?, &bump_battery(&p))?;
            let q = FrameParams::with_epsilon(p.n, p.m, 1.5 * p.eps)?;
            let bad = weak_divergence_residual(&build_swap_field(q)?, &bump_battery(&q))?;
            Ok((p, good, bad))
        })
        .collect::<Result<_>>()?;
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let weakest = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    Ok(SuiteReport::new(
        "appendix-divergence",
        vec![
            line("weak divergence <= 1e-6", worst <= 1e-6, format!("{} frames x 10 bumps, max = {worst:.3e}", rows.len())),
            line("perturbed control >= 1e-3", weakest >= 1e-3, format!("eps x 1.5, min = {weakest:.3e}")),
        ],
    ))
}
