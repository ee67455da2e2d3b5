use crate::error::{Error, Result};
use crate::lattice::{Permutation, Tiling};
use crate::movements::{DiscreteFlow, Placement};
use crate::routing::{route_parallel, Rounds};

use super::{nearest_matching, Cells, Check, PipelineConfig, StepReport};

pub(crate) fn check_tiling(p: &Permutation, cfg: &PipelineConfig) -> Result<Tiling> {
    let t = *p.tiling();
    if t.nu() != cfg.nu || t.n() != cfg.n {
        return Err(Error::DimensionMismatch(format!("permutation on {t}, config for nu={} N={}", cfg.nu, cfg.n)));
    }
    Ok(t)
}

pub(crate) fn play(pl: &mut Placement, flow: &mut DiscreteFlow, rounds: Rounds) -> Result<()> {
    for r in rounds {
        pl.apply(&r);
        flow.push_swaps(r)?;
    }
    Ok(())
}

/// Swaps each mover in `src` with the unused token of `dst` nearest to its
/// translate by `shift` (a signed index offset), skipping tokens for which `keep` holds.
fn mirror_pairs(t: &Tiling, movers: &[usize], dst: &[usize], shift: isize, keep: impl Fn(usize) -> bool) -> Vec<(usize, usize)> {
    let mut free: Vec<usize> = dst.iter().copied().filter(|&y| !keep(y)).collect();
    let mut moves = Vec::with_capacity(2 * movers.len());
    for &x in movers {
        let m = (x as isize + shift) as usize;
        let (k, _) = free
            .iter()
            .enumerate()
            .min_by(|a, b| t.dist2(*a.1, m).total_cmp(&t.dist2(*b.1, m)).then(a.1.cmp(b.1)))
            .expect("the receiving cell has room");
        let y = free.swap_remove(k);
        moves.push((x, y));
        moves.push((y, x));
    }
    moves
}

/// Moves every token displaced by more than `δ^ε` to its home.
///
/// The displaced tokens are gathered into the last coarse cell one axis at a
/// time, then walked back down the coarse grid one axis at a time until each
/// sits in its home cell, and finally placed home inside the cell. Tokens
/// they displace are only ever shifted by about one cell.
pub fn step1_localize(p: &Permutation, cfg: &PipelineConfig) -> Result<StepReport> {
    let t = check_tiling(p, cfg)?;
    let l2 = p.l2_to_identity();
    if l2 > cfg.delta * (1.0 + 1e-9) + 1e-15 {
        return Err(Error::Precondition(format!("‖P − Id‖₂ = {l2} exceeds δ = {}", cfg.delta)));
    }
    let tau = cfg.tau();
    let colored: Vec<bool> = (0..t.len()).map(|k| p.displacement(k) > tau).collect();
    let count = colored.iter().filter(|&&c| c).count();
    let cells = Cells::new(t, cfg.coarse_side);
    let capacity = cells.w.pow(t.nu() as u32);
    if count > capacity {
        return Err(Error::Precondition(format!("{count} displaced cubes do not fit in one coarse cell of {capacity}")));
    }
    let mut pl = Placement::new(p);
    let mut flow = DiscreteFlow::new(t);
    if count > 0 {
        let s = cells.s;
        let all = cells.cells();
        for a in 0..t.nu() {
            for j in 0..s.saturating_sub(1) {
                let tasks: Vec<_> = all
                    .iter()
                    .filter(|c| c[a] == j && c[..a].iter().all(|&x| x == s - 1))
                    .filter_map(|c| {
                        let src: Vec<usize> = cells.cell_box(c).indices(&t).into_iter().filter(|&x| colored[pl.token(x)]).collect();
                        if src.is_empty() {
                            return None;
                        }
                        let mut d = c.clone();
                        d[a] += 1;
                        let dst = cells.cell_box(&d).indices(&t);
                        let shift = (cells.w * t.stride(a)) as isize;
                        Some((cells.pair_box(c, a), mirror_pairs(&t, &src, &dst, shift, |y| colored[pl.token(y)])))
                    })
                    .collect();
                let rounds = route_parallel(&t, &tasks)?;
                play(&mut pl, &mut flow, rounds)?;
            }
        }
        for a in 0..t.nu() {
            for j in (1..s).rev() {
                let tasks: Vec<_> = all
                    .iter()
                    .filter(|c| c[a] == j && c[a + 1..].iter().all(|&x| x == s - 1))
                    .filter_map(|c| {
                        let src: Vec<usize> = cells
                            .cell_box(c)
                            .indices(&t)
                            .into_iter()
                            .filter(|&x| {
                                let k = pl.token(x);
                                colored[k] && cells.slab(k, a) < j
                            })
                            .collect();
                        if src.is_empty() {
                            return None;
                        }
                        let mut d = c.clone();
                        d[a] -= 1;
                        let dst = cells.cell_box(&d).indices(&t);
                        let shift = -((cells.w * t.stride(a)) as isize);
                        Some((cells.pair_box(&d, a), mirror_pairs(&t, &src, &dst, shift, |y| colored[pl.token(y)])))
                    })
                    .collect();
                let rounds = route_parallel(&t, &tasks)?;
                play(&mut pl, &mut flow, rounds)?;
            }
        }
        let tasks: Vec<_> = all
            .iter()
            .filter_map(|c| {
                let bx = cells.cell_box(c);
                let here: Vec<usize> = bx.indices(&t).into_iter().filter(|&x| colored[pl.token(x)]).collect();
                if here.is_empty() {
                    return None;
                }
                let mut moves: Vec<(usize, usize)> = here.iter().map(|&x| (x, pl.token(x))).collect();
                debug_assert!(moves.iter().all(|&(_, k)| bx.contains_index(&t, k)));
                let homes: Vec<usize> = moves.iter().map(|m| m.1).collect();
                let blocked: Vec<usize> = homes.iter().copied().filter(|&k| !colored[pl.token(k)]).collect();
                let freed: Vec<usize> = here.iter().copied().filter(|x| !homes.contains(x)).collect();
                moves.extend(nearest_matching(&t, &blocked, &freed));
                Some((bx, moves))
            })
            .collect();
        let rounds = route_parallel(&t, &tasks)?;
        play(&mut pl, &mut flow, rounds)?;
    }
    let result = pl.into_permutation();
    let nu = t.nu() as f64;
    let k = &cfg.constants;
    let checks = vec![
        Check::new("max_displacement", result.max_displacement(), k.d * tau),
        Check::new("l2", result.l2_to_identity(), k.c_l2 * cfg.delta.powf(1.0 - cfg.epsilon / 2.0)),
        Check::new("colored_count", count as f64, cfg.delta.powf(2.0 - 2.0 * cfg.epsilon) * (t.n() as f64).powf(nu)),
    ];
    Ok(StepReport::new(flow, result, cfg.bound1(), checks))
}
