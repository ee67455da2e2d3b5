use crate::error::{Error, Result};
use crate::lattice::{Permutation, RegionSpec, Tiling};
use crate::movements::{DiscreteFlow, Placement};
use crate::routing::route_parallel;

use super::orbits::compute_orbits;
use super::step1::{check_tiling, play};
use super::step3::block_violations;
use super::{nearest_matching, Cells, Check, PipelineConfig, StepReport};

/// Pairs red positions with black positions.
///
/// Each red position follows the cycle of `want` (position to the home of
/// the token it holds) and takes the first free black met in `upper`; the
/// ones left over take the nearest free black.
fn pair_by_orbit(t: &Tiling, want: impl Fn(usize) -> usize, red: &[usize], black: &[usize]) -> Vec<(usize, usize)> {
    let is_black: std::collections::HashSet<usize> = black.iter().copied().collect();
    let mut taken = std::collections::HashSet::new();
    let mut pairs = Vec::new();
    let mut left = Vec::new();
    for &x in red {
        let mut y = want(x);
        let mut hit = None;
        while y != x {
            if is_black.contains(&y) && !taken.contains(&y) {
                hit = Some(y);
                break;
            }
            y = want(y);
        }
        match hit {
            Some(y) => {
                taken.insert(y);
                pairs.push((x, y));
            }
            None => left.push(x),
        }
    }
    let free: Vec<usize> = black.iter().copied().filter(|y| !taken.contains(y)).collect();
    pairs.extend(nearest_matching(t, &left, &free));
    pairs.truncate(red.len().min(black.len()));
    pairs
}

/// Box of slabs `i, i+1` along `axis`, restricted to the group's cells on later axes.
fn slab_box(cells: &Cells, axis: usize, i: usize, group: &[usize]) -> RegionSpec {
    let (n, w) = (cells.t.n(), cells.w);
    let mut lo = vec![0; cells.t.nu()];
    let mut hi = vec![n - 1; cells.t.nu()];
    lo[axis] = i * w;
    hi[axis] = (i + 2) * w - 1;
    for (b, &g) in (axis + 1..cells.t.nu()).zip(group) {
        lo[b] = g * w;
        hi[b] = g * w + w - 1;
    }
    RegionSpec { lo, hi }
}

/// All `dim`-tuples over `0..s`, lexicographically.
fn coarse_tuples(s: usize, dim: usize) -> Vec<Vec<usize>> {
    (0..dim).fold(vec![Vec::new()], |acc, _| {
        acc.into_iter().flat_map(|v| (0..s).map(move |c| [v.as_slice(), &[c]].concat())).collect()
    })
}

fn group_box(cells: &Cells, axis: usize, group: &[usize]) -> RegionSpec {
    let mut r = slab_box(cells, axis, 0, group);
    r.hi[axis] = cells.t.n() - 1;
    r
}

fn misplaced(pl: &Placement, cells: &Cells, axis: usize) -> usize {
    (0..cells.t.len()).filter(|&x| cells.slab(x, axis) != cells.slab(pl.token(x), axis)).count()
}

/// Puts every token into its home coarse cell.
///
/// Axes are handled from last to first. For one axis the cube is split into
/// groups sharing their coarse cell on the later axes; tokens never leave
/// their group. Within a group, the positions of slab `i` holding tokens
/// bound for a higher slab (red) are paired with positions of slab `i+1`
/// holding tokens bound for slab `i` or lower (black), and each pair is
/// swapped. Pairs in different cells are routed in the box of both slabs
/// (phase A), the others in the box of their two cells (phase B). Even
/// boundaries go first, then odd ones, so the boxes of one batch are
/// disjoint. Passes repeat until every token is in its home slab.
pub fn step2_blockify(p: &Permutation, cfg: &PipelineConfig) -> Result<StepReport> {
    let t = check_tiling(p, cfg)?;
    let k = &cfg.constants;
    let tau = cfg.tau();
    let l2 = p.l2_to_identity();
    let l2_limit = k.c_l2 * cfg.delta.powf(1.0 - cfg.epsilon / 2.0);
    if l2 > l2_limit * (1.0 + 1e-9) + 1e-15 {
        return Err(Error::Precondition(format!("‖P − Id‖₂ = {l2} exceeds {l2_limit}")));
    }
    if p.max_displacement() > k.d * tau * (1.0 + 1e-9) + 1e-15 {
        return Err(Error::Precondition(format!("displacement {} exceeds {}", p.max_displacement(), k.d * tau)));
    }
    let cells = Cells::new(t, cfg.coarse_side);
    let (s, nu) = (cells.s, t.nu());
    let mut pl = Placement::new(p);
    let mut flow = DiscreteFlow::new(t);
    let mut metrics = Vec::new();

    if let Ok(rep) = compute_orbits(p, cfg, nu - 1) {
        let n = rep.records.len();
        metrics.push(("orbits", n as f64));
        metrics.push(("max_n_bar", rep.records.iter().map(|r| r.n_bar).max().unwrap_or(0) as f64));
        let mean = if n > 0 { rep.records.iter().map(|r| r.n_bar).sum::<usize>() as f64 / n as f64 } else { 0.0 };
        metrics.push(("mean_n_bar", mean));
    }

    let mut first_a = true;
    let mut fallbacks = 0usize;
    for axis in (0..nu).rev() {
        let groups = coarse_tuples(s, nu - 1 - axis);
        let group_of = |x: usize| -> Vec<usize> { (axis + 1..nu).map(|b| cells.slab(x, b)).collect() };
        let mut remaining = misplaced(&pl, &cells, axis);
        while remaining > 0 {
            for parity in 0..2 {
                let mut phase_a = Vec::new();
                let mut phase_b = Vec::new();
                for g in &groups {
                    for i in (parity..s.saturating_sub(1)).step_by(2) {
                        let bx = slab_box(&cells, axis, i, g);
                        let mut red = Vec::new();
                        let mut black = Vec::new();
                        for x in bx.indices(&t) {
                            let (here, home) = (cells.slab(x, axis), cells.slab(pl.token(x), axis));
                            if here == i && home > i {
                                red.push(x);
                            } else if here == i + 1 && home <= i {
                                black.push(x);
                            }
                        }
                        if red.is_empty() || black.is_empty() {
                            continue;
                        }
                        let pairs = pair_by_orbit(&t, |x| pl.token(x), &red, &black);
                        let (near, far): (Vec<_>, Vec<_>) = pairs.into_iter().partition(|&(x, y)| {
                            (0..nu).all(|b| b == axis || cells.slab(x, b) == cells.slab(y, b))
                        });
                        let swaps = |v: &[(usize, usize)]| v.iter().flat_map(|&(x, y)| [(x, y), (y, x)]).collect::<Vec<_>>();
                        if !far.is_empty() {
                            phase_a.push((bx, swaps(&far)));
                        }
                        for pair in near {
                            phase_b.push((cells.pair_box(&cells.cell_coords(pair.0), axis), swaps(&[pair])));
                        }
                    }
                }
                let rounds = route_parallel(&t, &phase_a)?;
                play(&mut pl, &mut flow, rounds)?;
                if first_a {
                    first_a = false;
                    let vol = misplaced(&pl, &cells, axis) as f64 / t.len() as f64;
                    metrics.push(("volume_after_a", vol));
                    metrics.push(("l2_after_a", pl.to_permutation().l2_to_identity()));
                }
                phase_b.sort_by(|a, b| a.0.lo.cmp(&b.0.lo));
                let mut merged: Vec<(RegionSpec, Vec<(usize, usize)>)> = Vec::new();
                for (bx, m) in phase_b {
                    match merged.last_mut() {
                        Some(last) if last.0 == bx => last.1.extend(m),
                        _ => merged.push((bx, m)),
                    }
                }
                let rounds = route_parallel(&t, &merged)?;
                play(&mut pl, &mut flow, rounds)?;
            }
            let now = misplaced(&pl, &cells, axis);
            if now >= remaining {
                fallbacks += 1;
                let mut tasks = Vec::new();
                for g in &groups {
                    let bx = group_box(&cells, axis, g);
                    let mut moves = Vec::new();
                    for j in 0..s {
                        let (src, dst): (Vec<usize>, Vec<usize>) = {
                            let wrong: Vec<usize> = bx
                                .indices(&t)
                                .into_iter()
                                .filter(|&x| cells.slab(x, axis) != cells.slab(pl.token(x), axis))
                                .collect();
                            let src = wrong.iter().copied().filter(|&x| cells.slab(pl.token(x), axis) == j).collect();
                            let dst = wrong.iter().copied().filter(|&x| cells.slab(x, axis) == j).collect();
                            (src, dst)
                        };
                        moves.extend(nearest_matching(&t, &src, &dst));
                    }
                    debug_assert!(moves.iter().all(|&(x, _)| group_of(x) == *g));
                    if !moves.is_empty() {
                        tasks.push((bx, moves));
                    }
                }
                let rounds = route_parallel(&t, &tasks)?;
                play(&mut pl, &mut flow, rounds)?;
                break;
            }
            remaining = now;
        }
    }
    if first_a {
        metrics.push(("volume_after_a", 0.0));
        metrics.push(("l2_after_a", l2));
    }
    metrics.push(("fallbacks", fallbacks as f64));
    let result = pl.into_permutation();
    let l2_a = metrics.iter().find(|m| m.0 == "l2_after_a").map_or(0.0, |m| m.1);
    let checks = vec![
        Check::new("block_violations", block_violations(&result, cells.s) as f64, 0.0),
        Check::new("l2_after_phase_a", l2_a, k.c_l2 * cfg.delta.powf(0.5 - cfg.epsilon / 4.0)),
    ];
    let mut rep = StepReport::new(flow, result, cfg.bound2(), checks);
    rep.metrics = metrics;
    Ok(rep)
}
