use crate::error::{Error, Result};
use crate::lattice::{Permutation, RegionSpec};
use crate::movements::{CoupleSequence, DiscreteFlow, EMovement, Placement};
use crate::routing::{route_box, route_parallel};

use super::step1::{check_tiling, play};
use super::{Cells, Check, PipelineConfig, StepReport};

/// Number of cubes whose coarse image differs from that of the first cube of their coarse cell.
pub(crate) fn block_violations(p: &Permutation, s: usize) -> usize {
    let t = *p.tiling();
    let cells = Cells::new(t, s);
    let mut image = vec![usize::MAX; s.pow(t.nu() as u32)];
    let mut bad = 0;
    for k in 0..t.len() {
        let (c, d) = (cells.cell_index(k), cells.cell_index(p.get(k)));
        if image[c] == usize::MAX {
            image[c] = d;
        } else if image[c] != d {
            bad += 1;
        }
    }
    bad
}

/// Whether every coarse cell of side `N/s` is sent into a single coarse cell.
pub fn is_block_constant(p: &Permutation, s: usize) -> bool {
    s > 0 && p.tiling().n() % s == 0 && block_violations(p, s) == 0
}

/// The permutation induced on the `s^ν` coarse cells.
pub fn coarse_permutation(p: &Permutation, s: usize) -> Result<Permutation> {
    let t = *p.tiling();
    if s == 0 || t.n() % s != 0 {
        return Err(Error::Precondition(format!("coarse side {s} does not divide N={}", t.n())));
    }
    let bad = block_violations(p, s);
    if bad > 0 {
        return Err(Error::NotBlockConstant(format!("{bad} cubes leave the image block of their coarse cell")));
    }
    let cells = Cells::new(t, s);
    let coarse = cells.coarse();
    let table = (0..coarse.len())
        .map(|c| {
            let corner: Vec<usize> = coarse.coords(c).iter().map(|&x| x * cells.w).collect();
            cells.cell_index(p.get(t.index_of(&corner)))
        })
        .collect();
    Permutation::from_table(coarse, table)
}

/// The two E-movements exchanging the contents of each pair of adjacent
/// cells: reverse every line through both cells, then each half of it.
fn translate_cells(cells: &Cells, pairs: &[(usize, usize)]) -> Result<Vec<EMovement>> {
    let (t, w) = (cells.t, cells.w);
    let coarse = cells.coarse();
    let mut whole = Vec::new();
    let mut halves = Vec::new();
    for &(a, b) in pairs {
        let lo = a.min(b);
        let c = coarse.coords(lo);
        let axis = (0..t.nu())
            .find(|&ax| coarse.coords(a.max(b))[ax] != c[ax])
            .ok_or_else(|| Error::Numerical("coarse swap of a cell with itself".into()))?;
        let mut face = cells.cell_box(&c);
        face.hi[axis] = face.lo[axis];
        for x in face.indices(&t) {
            let start = t.coords(x);
            whole.push(CoupleSequence::new(RegionSpec::array(start.clone(), axis, 2 * w)?, (0..2 * w).collect()));
            if w > 1 {
                let idx: Vec<usize> = (0..w).filter(|&i| w % 2 == 0 || i != w / 2).collect();
                let mut second = start.clone();
                second[axis] += w;
                halves.push(CoupleSequence::new(RegionSpec::array(start, axis, w)?, idx.clone()));
                halves.push(CoupleSequence::new(RegionSpec::array(second, axis, w)?, idx));
            }
        }
    }
    let mut out = vec![EMovement::new(t, whole)];
    if !halves.is_empty() {
        out.push(EMovement::new(t, halves));
    }
    Ok(out)
}

/// Routes a block-constant permutation to the identity.
///
/// The coarse permutation is routed with adjacent cell swaps, each round
/// realized by translating whole cells with two E-movements; then every cell
/// is routed on its own.
pub fn step3_finish(p: &Permutation, cfg: &PipelineConfig) -> Result<StepReport> {
    let t = check_tiling(p, cfg)?;
    let sigma = coarse_permutation(p, cfg.coarse_side)?;
    let cells = Cells::new(t, cfg.coarse_side);
    let mut pl = Placement::new(p);
    let mut flow = DiscreteFlow::new(t);

    let coarse = cells.coarse();
    let cp = Placement::new(&sigma);
    let moves: Vec<(usize, usize)> = (0..coarse.len()).map(|x| (x, cp.token(x))).filter(|m| m.0 != m.1).collect();
    let rounds = if moves.is_empty() { Vec::new() } else { route_box(&coarse, &coarse.full(), &moves)? };
    let coarse_rounds = rounds.len();
    for r in rounds {
        for m in translate_cells(&cells, &r)? {
            pl.apply(&m.cube_pairs());
            flow.push(m.into())?;
        }
    }
    let coarse_cost = flow.total_cost();

    let tasks: Vec<_> = cells
        .cells()
        .into_iter()
        .filter_map(|c| {
            let bx = cells.cell_box(&c);
            let moves: Vec<(usize, usize)> =
                bx.indices(&t).into_iter().map(|x| (x, pl.token(x))).filter(|m| m.0 != m.1).collect();
            (!moves.is_empty()).then_some((bx, moves))
        })
        .collect();
    let rounds = route_parallel(&t, &tasks)?;
    play(&mut pl, &mut flow, rounds)?;

    let result = pl.into_permutation();
    let residual = result.moved() as f64;
    let mut rep = StepReport::new(flow, result, cfg.bound3(), vec![Check::new("residual_moved", residual, 0.0)]);
    rep.metrics = vec![("coarse_rounds", coarse_rounds as f64), ("coarse_cost", coarse_cost)];
    if cfg.delta > 0.0 {
        rep.metrics.push(("c3", rep.cost / cfg.tau()));
    }
    Ok(rep)
}
