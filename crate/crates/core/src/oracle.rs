//! Exact flow distances on small tilings.
//!
//! The states are the `n!` permutations of the cubes and the edges are the
//! elementary movements, weighted by their cost. Dijkstra's search returns
//! the exact minimum together with a witness flow.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::lattice::{Permutation, RegionSpec, Tiling};
use crate::movements::{CoupleSequence, DiscreteFlow, EMovement, Movement, SMovement};

/// Which movements may be used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Disjoint adjacent swaps.
    S,
    /// Couple sequences on disjoint arrays.
    E,
    /// Both kinds, each costed by its own formula.
    Mixed,
}

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_states: u128,
    /// Longest array allowed in E generators.
    pub max_array: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 3_628_800, max_array: usize::MAX }
    }
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub distance: f64,
    pub witness: DiscreteFlow,
}

/// A generator: its movement, its cost and its action as a cube table.
struct Generator {
    movement: Movement,
    cost: f64,
    table: Vec<u8>,
}

type State = Box<[u8]>;

/// The Cayley graph of a small tiling.
pub struct CayleyGraph {
    tiling: Tiling,
    gens: Vec<Generator>,
}

fn factorial_capped(n: usize) -> u128 {
    (1..=n as u128).try_fold(1u128, |acc, k| acc.checked_mul(k)).unwrap_or(u128::MAX)
}

impl CayleyGraph {
    pub fn new(t: Tiling, mode: Mode, limits: Limits) -> Result<Self> {
        let states = factorial_capped(t.len());
        if states > limits.max_states || t.len() > 64 {
            return Err(Error::Capacity { states, limit: limits.max_states });
        }
        let mut movements: Vec<Movement> = Vec::new();
        if matches!(mode, Mode::S | Mode::Mixed) {
            movements.extend(s_generators(&t).into_iter().map(Movement::S));
        }
        if matches!(mode, Mode::E | Mode::Mixed) {
            movements.extend(e_generators(&t, limits.max_array).into_iter().map(Movement::E));
        }
        // keep the cheapest movement per induced permutation, first found on ties
        let mut best: HashMap<Vec<u8>, usize> = HashMap::new();
        let mut gens: Vec<Generator> = Vec::new();
        for m in movements {
            let mut table: Vec<u8> = (0..t.len() as u8).collect();
            for (a, b) in m.cube_pairs() {
                table.swap(a, b);
            }
            let cost = m.cost();
            match best.get(&table) {
                Some(&k) if gens[k].cost <= cost => {}
                Some(&k) => gens[k] = Generator { movement: m, cost, table },
                None => {
                    best.insert(table.clone(), gens.len());
                    gens.push(Generator { movement: m, cost, table });
                }
            }
        }
        Ok(CayleyGraph { tiling: t, gens })
    }

    pub fn generator_count(&self) -> usize {
        self.gens.len()
    }

    fn step(&self, s: &[u8], g: &Generator) -> State {
        s.iter().map(|&x| g.table[x as usize]).collect()
    }

    fn state_of(&self, p: &Permutation) -> Result<State> {
        if *p.tiling() != self.tiling {
            return Err(Error::DimensionMismatch(format!("{} vs {}", p.tiling(), self.tiling)));
        }
        Ok(p.table().iter().map(|&x| x as u8).collect())
    }

    /// Dijkstra from `p`; stops at `q` when given, otherwise explores everything.
    fn search(&self, p: &State, q: Option<&State>) -> HashMap<State, (f64, usize, Option<(State, usize)>)> {
        let mut dist: HashMap<State, (f64, usize, Option<(State, usize)>)> = HashMap::new();
        let mut heap = BinaryHeap::new();
        dist.insert(p.clone(), (0.0, 0, None));
        heap.push(Reverse((OrderedFloat(0.0), 0usize, p.clone())));
        while let Some(Reverse((OrderedFloat(d), steps, s))) = heap.pop() {
            let &(best, best_steps, _) = &dist[&s];
            if d > best || (d == best && steps > best_steps) {
                continue;
            }
            if q == Some(&s) {
                break;
            }
            for (k, g) in self.gens.iter().enumerate() {
                let next = self.step(&s, g);
                let nd = d + g.cost;
                let better = match dist.get(&next) {
                    None => true,
                    Some(&(od, os, _)) => nd < od || (nd == od && steps + 1 < os),
                };
                if better {
                    dist.insert(next.clone(), (nd, steps + 1, Some((s.clone(), k))));
                    heap.push(Reverse((OrderedFloat(nd), steps + 1, next)));
                }
            }
        }
        dist
    }

    fn witness(&self, dist: &HashMap<State, (f64, usize, Option<(State, usize)>)>, q: &State) -> Result<DiscreteFlow> {
        let mut gens = Vec::new();
        let mut cur = q.clone();
        while let Some((prev, k)) = &dist[&cur].2 {
            gens.push(*k);
            cur = prev.clone();
        }
        let mut flow = DiscreteFlow::new(self.tiling);
        for k in gens.into_iter().rev() {
            flow.push(self.gens[k].movement.clone())?;
        }
        Ok(flow)
    }

    pub fn distance(&self, p: &Permutation, q: &Permutation) -> Result<OracleResult> {
        let (sp, sq) = (self.state_of(p)?, self.state_of(q)?);
        let dist = self.search(&sp, Some(&sq));
        if !dist.contains_key(&sq) {
            return Err(Error::Numerical("target unreachable with the given generators".into()));
        }
        let witness = self.witness(&dist, &sq)?;
        Ok(OracleResult { distance: witness.total_cost(), witness })
    }

    /// Distance from the identity to every permutation, in lexicographic table order.
    pub fn all_from_identity(&self) -> Result<Vec<(Permutation, f64)>> {
        let id: State = (0..self.tiling.len() as u8).collect();
        let dist = self.search(&id, None);
        let mut out: Vec<(Permutation, f64)> = dist
            .into_iter()
            .map(|(s, (d, _, _))| Ok((Permutation::from_table(self.tiling, s.iter().map(|&x| x as usize).collect())?, d)))
            .collect::<Result<_>>()?;
        out.sort_by(|a, b| a.0.table().cmp(b.0.table()));
        Ok(out)
    }
}

/// All nonempty sets of disjoint adjacent pairs.
pub fn s_generators(t: &Tiling) -> Vec<SMovement> {
    let mut edges = Vec::new();
    for a in 0..t.len() {
        for axis in 0..t.nu() {
            let b = a + t.stride(axis);
            if t.coords(a)[axis] + 1 < t.n() {
                edges.push((a, b));
            }
        }
    }
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    matchings(&edges, 0, 0, &mut chosen, &mut |pairs| out.push(SMovement::new(*t, pairs.to_vec())));
    out
}

fn matchings(edges: &[(usize, usize)], from: usize, used: u64, chosen: &mut Vec<(usize, usize)>, emit: &mut impl FnMut(&[(usize, usize)])) {
    for k in from..edges.len() {
        let (a, b) = edges[k];
        let mask = (1u64 << a) | (1u64 << b);
        if used & mask == 0 {
            chosen.push((a, b));
            emit(chosen);
            matchings(edges, k + 1, used | mask, chosen, emit);
            chosen.pop();
        }
    }
}

/// All E-movements built from arrays of length `2..=max_array`, before deduplication.
pub fn e_generators(t: &Tiling, max_array: usize) -> Vec<EMovement> {
    let mut pieces: Vec<(u64, CoupleSequence)> = Vec::new();
    for start in 0..t.len() {
        let c = t.coords(start);
        for axis in 0..t.nu() {
            for len in 2..=max_array.min(t.n() - c[axis]) {
                let array = RegionSpec::array(c.clone(), axis, len).expect("array fits");
                let mask = array.indices(t).iter().fold(0u64, |m, &x| m | (1u64 << x));
                for sub in 1u32..(1 << len) {
                    if sub.count_ones() % 2 == 0 {
                        let idx: Vec<usize> = (0..len).filter(|&i| sub >> i & 1 == 1).collect();
                        pieces.push((mask, CoupleSequence::new(array.clone(), idx)));
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    combine(&pieces, 0, 0, &mut chosen, &mut |seqs| out.push(EMovement::new(*t, seqs.to_vec())));
    out
}

fn combine(
    pieces: &[(u64, CoupleSequence)],
    from: usize,
    used: u64,
    chosen: &mut Vec<CoupleSequence>,
    emit: &mut impl FnMut(&[CoupleSequence]),
) {
    for k in from..pieces.len() {
        let (mask, seq) = &pieces[k];
        if used & mask == 0 {
            chosen.push(seq.clone());
            emit(chosen);
            combine(pieces, k + 1, used | mask, chosen, emit);
            chosen.pop();
        }
    }
}

/// Exact `dist(p, q)` under the chosen movements, with a witness flow.
pub fn exact_distance(p: &Permutation, q: &Permutation, mode: Mode, limits: Limits) -> Result<OracleResult> {
    CayleyGraph::new(*p.tiling(), mode, limits)?.distance(p, q)
}

#[derive(Clone, Debug)]
pub struct EquivalenceRow {
    pub permutation: Permutation,
    pub dist_s: f64,
    pub dist_e: f64,
    /// `dist_S / dist_E`, absent for the identity.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub rows: Vec<EquivalenceRow>,
    /// Whether `dist_E ≤ 2 dist_S` held on every row.
    pub holds: bool,
    pub max_ratio: f64,
}

/// Compares both distances to the identity on `sample` (all permutations when `None`).
pub fn equivalence_report(t: &Tiling, sample: Option<&[Permutation]>, limits: Limits) -> Result<EquivalenceReport> {
    let ds = CayleyGraph::new(*t, Mode::S, limits)?.all_from_identity()?;
    let de = CayleyGraph::new(*t, Mode::E, limits)?.all_from_identity()?;
    let es: HashMap<Vec<usize>, f64> = de.into_iter().map(|(p, d)| (p.into_table(), d)).collect();
    let chosen: Vec<Permutation> = match sample {
        Some(s) => s.to_vec(),
        None => ds.iter().map(|(p, _)| p.clone()).collect(),
    };
    let sd: HashMap<&[usize], f64> = ds.iter().map(|(p, d)| (p.table(), *d)).collect();
    let mut rows = Vec::new();
    let mut holds = true;
    let mut max_ratio: f64 = 0.0;
    for p in chosen {
        let (dist_s, dist_e) = (sd[p.table()], es[p.table()]);
        holds &= dist_e <= 2.0 * dist_s;
        let ratio = (dist_e > 0.0).then(|| dist_s / dist_e);
        if let Some(r) = ratio {
            max_ratio = max_ratio.max(r);
        }
        rows.push(EquivalenceRow { permutation: p, dist_s, dist_e, ratio });
    }
    Ok(EquivalenceReport { rows, holds, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_counts_on_small_tilings() {
        let t = Tiling::new(2, 2).unwrap();
        assert_eq!(s_generators(&t).len(), 6);
        let a = Tiling::new(1, 4).unwrap();
        assert_eq!(s_generators(&a).len(), 4);
    }

    #[test]
    fn capacity_is_enforced() {
        let t = Tiling::new(2, 4).unwrap();
        assert!(matches!(CayleyGraph::new(t, Mode::S, Limits::default()), Err(Error::Capacity { .. })));
    }
}
