//! Bounded-duration routing of permutations and coloring flows.
//!
//! Arrays are routed by odd-even transposition sort. Boxes with several long
//! axes use the row-column-row scheme: the longest axis carries the middle
//! phase, and the other two phases recurse into the slabs orthogonal to it.
//! Tokens are spread over the slab positions by edge-coloring the
//! row-to-destination-row multigraph, one min-cost perfect matching per color.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{Coloring, Permutation, RegionSpec, Tiling};
use crate::movements::{odd_even_rounds, unit_cost, CoupleSequence, DiscreteFlow, EMovement};

/// Rounds of simultaneous adjacent swaps, as cube index pairs.
pub type Rounds = Vec<Vec<(usize, usize)>>;

/// Duration constant of [`route_rectangle`]: duration ≤ `C_IMPL` × (sum of side lengths).
///
/// The scheme needs `2^k - 1` passes of the longest side in `k` dimensions,
/// which fits under 3 × (side sum) up to `k = 3`.
pub const C_IMPL: f64 = 3.0;

/// Measured cost constant of [`color_array_flow`]; each of the two sorting passes contributes at most 1.
pub const C_COL: f64 = 2.0;

/// Cost constant of [`color_rect_flow`] for the two-dimensional construction.
///
/// One canonicalization costs at most `4` side lengths per `√b` when `b ≤ h`,
/// and `3√2 + 4` when yellow cubes are needed; the flow runs two of them.
pub const C_CUBE: f64 = 2.0 * (4.0 + 3.0 * std::f64::consts::SQRT_2);

/// Merges independent round lists that act on disjoint cubes.
pub fn merge_rounds(parts: impl IntoIterator<Item = Rounds>) -> Rounds {
    let mut out: Rounds = Vec::new();
    for part in parts {
        for (r, round) in part.into_iter().enumerate() {
            if out.len() <= r {
                out.push(Vec::new());
            }
            out[r].extend(round);
        }
    }
    out
}

/// Routes tokens inside `region`: the token at `from` ends at `to` for every
/// listed move, all other tokens stay. The moves must form a bijection of the region.
pub fn route_box(t: &Tiling, region: &RegionSpec, moves: &[(usize, usize)]) -> Result<Rounds> {
    region.check_within(t)?;
    let len = region.len();
    let mut dest: Vec<usize> = (0..len).collect();
    let outside = |c: usize| Error::InvalidRegion(format!("cube {} lies outside {}", t.cube(c), region));
    for &(from, to) in moves {
        let a = region.local_index(t, from).ok_or_else(|| outside(from))?;
        let b = region.local_index(t, to).ok_or_else(|| outside(to))?;
        dest[a] = b;
    }
    let mut seen = vec![false; len];
    for &d in &dest {
        if std::mem::replace(&mut seen[d], true) {
            return Err(Error::NotBijection(d));
        }
    }
    let cells = region.indices(t);
    let local = route_local(&region.extents(), &dest);
    Ok(local.into_iter().map(|r| r.into_iter().map(|(a, b)| (cells[a], cells[b])).collect()).collect())
}

/// Routes independent tasks on disjoint regions concurrently and merges their rounds.
pub fn route_parallel(t: &Tiling, tasks: &[(RegionSpec, Vec<(usize, usize)>)]) -> Result<Rounds> {
    let parts = tasks.par_iter().map(|(r, m)| route_box(t, r, m)).collect::<Result<Vec<_>>>()?;
    Ok(merge_rounds(parts))
}

pub fn rounds_to_flow(t: &Tiling, rounds: Rounds) -> Result<DiscreteFlow> {
    let mut f = DiscreteFlow::new(*t);
    for r in rounds {
        f.push_swaps(r)?;
    }
    Ok(f)
}

fn route_local(ext: &[usize], dest: &[usize]) -> Rounds {
    if dest.iter().enumerate().all(|(x, &d)| x == d) {
        return Vec::new();
    }
    let ext: Vec<usize> = ext.iter().copied().filter(|&e| e > 1).collect();
    if ext.len() == 1 {
        let mut keys = dest.to_vec();
        return odd_even_rounds(&mut keys).into_iter().map(|r| r.into_iter().map(|i| (i, i + 1)).collect()).collect();
    }
    let r = (0..ext.len()).fold(0, |best, a| if ext[a] > ext[best] { a } else { best });
    let m = ext[r];
    let stride: usize = ext[r + 1..].iter().product();
    let slab_ext: Vec<usize> = ext.iter().enumerate().filter(|&(a, _)| a != r).map(|(_, &e)| e).collect();
    let ns = dest.len() / m;
    let split = |x: usize| ((x / stride) % m, (x / (stride * m)) * stride + x % stride);
    let join = |row: usize, q: usize| (q / stride) * stride * m + row * stride + q % stride;

    let loc: Vec<(usize, usize)> = (0..dest.len()).map(split).collect();
    let dloc: Vec<(usize, usize)> = dest.iter().map(|&d| split(d)).collect();

    let in_rows = |sub: Vec<Vec<usize>>| -> Rounds {
        let parts: Vec<Rounds> = sub
            .into_par_iter()
            .enumerate()
            .map(|(row, d)| {
                route_local(&slab_ext, &d).into_iter().map(|rd| rd.into_iter().map(|(a, b)| (join(row, a), join(row, b))).collect()).collect()
            })
            .collect();
        merge_rounds(parts)
    };
    let in_cols = |keys: Vec<Vec<usize>>| -> Rounds {
        let parts: Vec<Rounds> = keys
            .into_iter()
            .enumerate()
            .map(|(q, mut k)| {
                odd_even_rounds(&mut k).into_iter().map(|rd| rd.into_iter().map(|i| (join(i, q), join(i + 1, q))).collect()).collect()
            })
            .collect();
        merge_rounds(parts)
    };

    if loc.iter().zip(&dloc).all(|(a, b)| a.0 == b.0) {
        let mut sub = vec![vec![0; ns]; m];
        for (x, &(row, q)) in loc.iter().enumerate() {
            sub[row][q] = dloc[x].1;
        }
        return in_rows(sub);
    }
    if loc.iter().zip(&dloc).all(|(a, b)| a.1 == b.1) {
        let mut keys = vec![vec![0; m]; ns];
        for (x, &(row, q)) in loc.iter().enumerate() {
            keys[q][row] = dloc[x].0;
        }
        return in_cols(keys);
    }

    let color = spread_colors(&slab_ext, m, ns, &loc, &dloc);
    let mut sub1 = vec![vec![0; ns]; m];
    let mut keys = vec![vec![0; m]; ns];
    let mut sub3 = vec![vec![0; ns]; m];
    for (x, &(row, q)) in loc.iter().enumerate() {
        let c = color[x];
        let (drow, dq) = dloc[x];
        sub1[row][q] = c;
        keys[c][row] = drow;
        sub3[drow][c] = dq;
    }
    let mut out = in_rows(sub1);
    out.extend(in_cols(keys));
    out.extend(in_rows(sub3));
    out
}

/// Assigns each token a slab position so that tokens sharing a row, or a
/// destination row, get distinct positions.
fn spread_colors(slab_ext: &[usize], m: usize, ns: usize, loc: &[(usize, usize)], dloc: &[(usize, usize)]) -> Vec<usize> {
    const FORBID: i64 = 1 << 40;
    let coords: Vec<Vec<usize>> = (0..ns)
        .map(|mut q| {
            let mut c = vec![0; slab_ext.len()];
            for a in (0..slab_ext.len()).rev() {
                c[a] = q % slab_ext[a];
                q /= slab_ext[a];
            }
            c
        })
        .collect();
    let d1 = |a: usize, b: usize| -> i64 { coords[a].iter().zip(&coords[b]).map(|(x, y)| x.abs_diff(*y) as i64).sum() };
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); m * m];
    for (x, &(row, _)) in loc.iter().enumerate() {
        buckets[row * m + dloc[x].0].push(x);
    }
    let token_cost = |x: usize, c: usize| d1(loc[x].1, c) + d1(c, dloc[x].1);
    let mut color = vec![usize::MAX; loc.len()];
    let mut cost = vec![0i64; m * m];
    for c in 0..ns {
        for (k, b) in buckets.iter().enumerate() {
            cost[k] = b.iter().map(|&x| token_cost(x, c)).min().unwrap_or(FORBID);
        }
        let assign = hungarian(m, &cost);
        for (i, &j) in assign.iter().enumerate() {
            let b = &mut buckets[i * m + j];
            let (k, _) = b
                .iter()
                .enumerate()
                .min_by_key(|&(_, &x)| token_cost(x, c))
                .expect("a regular bipartite multigraph has a perfect matching");
            color[b.remove(k)] = c;
        }
    }
    color
}

/// Minimum-cost perfect assignment of an `n × n` row-major cost matrix; returns the column of each row.
pub fn hungarian(n: usize, cost: &[i64]) -> Vec<usize> {
    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut ans = vec![0; n];
    for j in 1..=n {
        if p[j] != 0 {
            ans[p[j] - 1] = j - 1;
        }
    }
    ans
}

fn routing_moves(p: &Permutation, r: &RegionSpec) -> Result<Vec<(usize, usize)>> {
    let t = p.tiling();
    r.check_within(t)?;
    if !p.acts_within(r) {
        return Err(Error::InvalidRegion(format!("permutation moves cubes outside {r}")));
    }
    let inv = p.inverse();
    Ok(r.indices(t).into_iter().map(|x| (x, inv.get(x))).filter(|(a, b)| a != b).collect())
}

/// S-flow taking `p` to the identity inside an array, by odd-even transposition; duration ≤ ℓ.
pub fn route_array(a: &RegionSpec, p: &Permutation) -> Result<DiscreteFlow> {
    if a.array_axis().is_none() {
        return Err(Error::InvalidRegion(format!("{a} is not an array")));
    }
    route_rectangle(a, p)
}

/// S-flow taking `p` to the identity inside a rectangle; duration ≤ [`C_IMPL`] × (side sum) for ν ≤ 3.
pub fn route_rectangle(r: &RegionSpec, p: &Permutation) -> Result<DiscreteFlow> {
    let t = p.tiling();
    let moves = routing_moves(p, r)?;
    rounds_to_flow(t, route_box(t, r, &moves)?)
}

/// A coloring flow and the number of auxiliary yellow cubes it used.
#[derive(Clone, Debug)]
pub struct ColoringFlow {
    pub flow: DiscreteFlow,
    pub yellow: usize,
}

fn check_colorings(t: &Tiling, r: &RegionSpec, from: &Coloring, to: &Coloring) -> Result<usize> {
    r.check_within(t)?;
    for c in [from, to] {
        if c.tiling() != t || c.region() != r {
            return Err(Error::DimensionMismatch(format!("coloring on {} does not match region {r}", c.region())));
        }
        if c.colors().iter().any(|&x| x > 1) {
            return Err(Error::Unsupported("coloring flows need two colors".into()));
        }
    }
    let (b, b2) = (from.count(1), to.count(1));
    if b != b2 {
        return Err(Error::ColorCount { from: b, to: b2 });
    }
    Ok(b)
}

/// Carries `from` to `to` inside an array by sorting both to the canonical
/// coloring (blacks last) and undoing the second sort. Every round swaps a
/// black cube with the white cube to its right.
pub fn color_array_flow(a: &RegionSpec, from: &Coloring, to: &Coloring) -> Result<DiscreteFlow> {
    let t = *from.tiling();
    check_colorings(&t, a, from, to)?;
    if a.array_axis().is_none() {
        return Err(Error::InvalidRegion(format!("{a} is not an array")));
    }
    let cells = a.indices(&t);
    let sort = |c: &Coloring| -> Result<DiscreteFlow> {
        let mut keys: Vec<usize> = c.colors().iter().map(|&x| x as usize).collect();
        let rounds = odd_even_rounds(&mut keys).into_iter().map(|r| r.into_iter().map(|i| (cells[i], cells[i + 1])).collect());
        rounds_to_flow(&t, rounds.collect())
    };
    let mut flow = sort(from)?;
    flow.extend(sort(to)?.reversed())?;
    Ok(flow)
}

/// Coloring flow inside a two-dimensional rectangle; arrays fall back to [`color_array_flow`].
pub fn color_rect_flow(r: &RegionSpec, from: &Coloring, to: &Coloring) -> Result<ColoringFlow> {
    let t = *from.tiling();
    check_colorings(&t, r, from, to)?;
    if r.array_axis().is_some() {
        return Ok(ColoringFlow { flow: color_array_flow(r, from, to)?, yellow: 0 });
    }
    if t.nu() != 2 {
        return Err(Error::Unsupported(format!("rectangle coloring flows are built for nu=2, got nu={}", t.nu())));
    }
    let plane = Plane::new(t, r);
    let (mut flow, yellow) = plane.canonicalize(from.colors())?;
    let (back, _) = plane.canonicalize(to.colors())?;
    flow.extend(back.reversed())?;
    Ok(ColoringFlow { flow, yellow })
}

/// Coloring flow inside a square block of cubes.
pub fn color_cube_flow(k: &RegionSpec, from: &Coloring, to: &Coloring) -> Result<ColoringFlow> {
    let ext = k.extents();
    if ext.iter().any(|&e| e != ext[0]) {
        return Err(Error::InvalidRegion(format!("{k} is not a cube block")));
    }
    color_rect_flow(k, from, to)
}

/// Upper bound `C · size · N^{-1-ν/2} · √min(b, tot − b)` shared by the coloring flows.
pub fn coloring_bound(t: &Tiling, c: f64, size: usize, b: usize, tot: usize) -> f64 {
    c * size as f64 * unit_cost(t) * (b.min(tot - b) as f64).sqrt()
}

#[derive(Clone, Copy)]
enum Line {
    Row(usize),
    Col(usize),
}

/// Moves the marked positions `from` of a line segment ending at `hi` to the positions `to`.
struct Job {
    line: Line,
    hi: usize,
    from: Vec<usize>,
    to: Vec<usize>,
}

/// A rectangle of a planar tiling with rows along axis 1 and columns along axis 0.
struct Plane {
    t: Tiling,
    h: usize,
    w: usize,
    cells: Vec<usize>,
}

impl Plane {
    fn new(t: Tiling, r: &RegionSpec) -> Self {
        let ext = r.extents();
        Plane { t, h: ext[0], w: ext[1], cells: r.indices(&t) }
    }

    fn at(&self, line: Line, k: usize) -> usize {
        match line {
            Line::Row(i) => i * self.w + k,
            Line::Col(j) => k * self.w + j,
        }
    }

    /// Couple sequence moving the marks at `z` into the suffix `s` of the same size.
    fn nest(&self, line: Line, z: &[usize], s: &[usize]) -> Option<(CoupleSequence, Vec<(usize, usize)>)> {
        let x: Vec<usize> = z.iter().copied().filter(|p| !s.contains(p)).collect();
        let y: Vec<usize> = s.iter().copied().filter(|p| !z.contains(p)).collect();
        if x.is_empty() {
            return None;
        }
        let (lo, hi) = (x[0], *y.last().unwrap());
        let array = RegionSpec::new(
            self.t.coords(self.cells[self.at(line, lo)]),
            self.t.coords(self.cells[self.at(line, hi)]),
        )
        .expect("segment of a line is an array");
        let idx: Vec<usize> = x.iter().chain(&y).map(|p| p - lo).collect();
        let local = x.iter().zip(y.iter().rev()).map(|(&a, &b)| (self.at(line, a), self.at(line, b))).collect();
        Some((CoupleSequence::new(array, idx), local))
    }

    /// Two E-movements: marks to the segment suffix, then suffix to the targets.
    fn rearrange(&self, jobs: &[Job], marks: &mut [u8], flow: &mut DiscreteFlow) -> Result<()> {
        for pass in 0..2 {
            let mut seqs = Vec::new();
            let mut local = Vec::new();
            for job in jobs {
                let s: Vec<usize> = (job.hi + 1 - job.from.len()..=job.hi).collect();
                let z = if pass == 0 { &job.from } else { &job.to };
                if let Some((q, l)) = self.nest(job.line, z, &s) {
                    seqs.push(q);
                    local.extend(l);
                }
            }
            flow.push(EMovement::new(self.t, seqs).into())?;
            for (a, b) in local {
                marks.swap(a, b);
            }
        }
        Ok(())
    }

    fn marked_on(&self, marks: &[u8], line: Line, range: std::ops::RangeInclusive<usize>, pred: impl Fn(u8) -> bool) -> Vec<usize> {
        range.filter(|&k| pred(marks[self.at(line, k)])).collect()
    }

    /// At most `h` marked cubes in columns `c0..w`: one per row, pushed to the last column, then to its bottom rows.
    fn few(&self, marks: &mut [u8], pred: impl Fn(u8) -> bool + Copy, c0: usize, flow: &mut DiscreteFlow) -> Result<()> {
        let (h, w) = (self.h, self.w);
        let mut taken = vec![false; h];
        let mut jobs = Vec::new();
        for j in c0..w {
            let b = self.marked_on(marks, Line::Col(j), 0..=h - 1, pred);
            let (stay, clash): (Vec<usize>, Vec<usize>) = b.iter().partition(|&&i| !taken[i]);
            for &i in &stay {
                taken[i] = true;
            }
            if clash.is_empty() {
                continue;
            }
            let mut to = stay;
            for i in (0..h).filter(|&i| !taken[i]).take(clash.len()).collect::<Vec<_>>() {
                taken[i] = true;
                to.push(i);
            }
            to.sort_unstable();
            jobs.push(Job { line: Line::Col(j), hi: h - 1, from: b, to });
        }
        self.rearrange(&jobs, marks, flow)?;

        let jobs: Vec<Job> = (0..h)
            .filter_map(|i| {
                let b = self.marked_on(marks, Line::Row(i), c0..=w - 1, pred);
                debug_assert!(b.len() <= 1);
                (b.first().is_some_and(|&j| j != w - 1)).then(|| Job { line: Line::Row(i), hi: w - 1, from: b, to: vec![w - 1] })
            })
            .collect();
        self.rearrange(&jobs, marks, flow)?;

        let b = self.marked_on(marks, Line::Col(w - 1), 0..=h - 1, pred);
        let to: Vec<usize> = (h - b.len()..h).collect();
        self.rearrange(&[Job { line: Line::Col(w - 1), hi: h - 1, from: b, to }], marks, flow)
    }

    /// A multiple of `h` marked cubes: equal counts per row, then pushed right.
    fn many(&self, marks: &mut [u8], pred: impl Fn(u8) -> bool + Copy, flow: &mut DiscreteFlow) -> Result<()> {
        let (h, w) = (self.h, self.w);
        let mut p = 0;
        let mut jobs = Vec::new();
        for j in 0..w {
            let b = self.marked_on(marks, Line::Col(j), 0..=h - 1, pred);
            let mut to: Vec<usize> = (0..b.len()).map(|k| (p + k) % h).collect();
            to.sort_unstable();
            p = (p + b.len()) % h;
            if to != b {
                jobs.push(Job { line: Line::Col(j), hi: h - 1, from: b, to });
            }
        }
        self.rearrange(&jobs, marks, flow)?;
        let jobs: Vec<Job> = (0..h)
            .map(|i| {
                let b = self.marked_on(marks, Line::Row(i), 0..=w - 1, pred);
                let to = (w - b.len()..w).collect();
                Job { line: Line::Row(i), hi: w - 1, from: b, to }
            })
            .collect();
        self.rearrange(&jobs, marks, flow)
    }

    /// Flow from a two-coloring to the canonical coloring with the same black count.
    fn canonicalize(&self, colors: &[u8]) -> Result<(DiscreteFlow, usize)> {
        let (h, w) = (self.h, self.w);
        let tot = h * w;
        let mut marks = colors.to_vec();
        let mut b = marks.iter().filter(|&&c| c == 1).count();
        if 2 * b > tot {
            for c in marks.iter_mut() {
                *c ^= 1;
            }
            b = tot - b;
        }
        let mut flow = DiscreteFlow::new(self.t);
        let mut yellow = 0;
        if b == 0 {
            return Ok((flow, 0));
        }
        if b <= h {
            self.few(&mut marks, |c| c == 1, 0, &mut flow)?;
        } else if b % h == 0 {
            self.many(&mut marks, |c| c != 0, &mut flow)?;
        } else {
            let cols = b / h + 1;
            yellow = h * cols - b;
            for x in marks.iter_mut().filter(|c| **c == 0).take(yellow) {
                *x = 2;
            }
            self.many(&mut marks, |c| c != 0, &mut flow)?;
            self.few(&mut marks, |c| c == 2, w - cols, &mut flow)?;
        }
        debug_assert_eq!(marks.iter().filter(|&&c| c != 0).count(), b + yellow);
        Ok((flow, yellow))
    }
}
