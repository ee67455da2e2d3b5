//! Elementary movements and discrete flows.
//!
//! An [`SMovement`] swaps disjoint pairs of adjacent cubes. An [`EMovement`]
//! acts on disjoint arrays, each carrying a nested sequence of swapping
//! couples. Both are involutions on the cube set. A movement `m` acts on a
//! permutation `p` by composition, `p ↦ m ∘ p`.

use std::fmt;

use thiserror::Error;

use crate::error::{Error, Result};
use crate::lattice::{join, parse_coords, parse_header, CubeId, Permutation, RegionSpec, Tiling};

/// The first violated clause of a movement's validity rules.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("movement built on {found}, expected {expected}")]
    TilingMismatch { expected: Tiling, found: Tiling },
    #[error("cube index {0} is outside the tiling")]
    CubeOutOfRange(usize),
    #[error("cubes {0} and {1} are not adjacent")]
    NotAdjacent(CubeId, CubeId),
    #[error("cube {0} appears in two couples")]
    SharedCube(CubeId),
    #[error("region {0} is not an array")]
    NotArray(RegionSpec),
    #[error("region {0} leaves the tiling")]
    RegionOutOfBounds(RegionSpec),
    #[error("indices {indices:?} on {region} are not strictly increasing")]
    IndicesNotStrict { region: RegionSpec, indices: Vec<usize> },
    #[error("index {index} exceeds the length {len} of {region}")]
    IndexOutOfArray { region: RegionSpec, index: usize, len: usize },
    #[error("{count} indices on {region}; a couple sequence needs an even number")]
    OddIndexCount { region: RegionSpec, count: usize },
    #[error("arrays {0} and {1} overlap")]
    ArraysOverlap(RegionSpec, RegionSpec),
}

/// `N^{-1-ν/2}`, the cost of one swap.
pub fn unit_cost(t: &Tiling) -> f64 {
    (t.n() as f64).powf(-1.0 - t.nu() as f64 / 2.0)
}

/// Simultaneous swaps of disjoint adjacent cubes, stored as index pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SMovement {
    tiling: Tiling,
    pairs: Vec<(usize, usize)>,
}

impl SMovement {
    /// Builds without validating; see [`SMovement::validate`].
    pub fn new(t: Tiling, pairs: Vec<(usize, usize)>) -> Self {
        SMovement { tiling: t, pairs }
    }

    pub fn from_cubes(t: Tiling, pairs: &[(CubeId, CubeId)]) -> Result<Self> {
        let pairs = pairs.iter().map(|(a, b)| Ok((t.index(a)?, t.index(b)?))).collect::<Result<_>>()?;
        Ok(SMovement { tiling: t, pairs })
    }

    pub fn tiling(&self) -> &Tiling {
        &self.tiling
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn swap_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let t = &self.tiling;
        let mut used = vec![false; t.len()];
        for &(a, b) in &self.pairs {
            for c in [a, b] {
                if c >= t.len() {
                    return Err(Violation::CubeOutOfRange(c));
                }
            }
            if !t.adjacent(a, b) {
                return Err(Violation::NotAdjacent(t.cube(a), t.cube(b)));
            }
            for c in [a, b] {
                if std::mem::replace(&mut used[c], true) {
                    return Err(Violation::SharedCube(t.cube(c)));
                }
            }
        }
        Ok(())
    }

    /// `N^{-1-ν/2} √swap(S)`.
    pub fn cost(&self) -> f64 {
        unit_cost(&self.tiling) * (self.pairs.len() as f64).sqrt()
    }
}

/// Positions `i_1 < … < i_{2M}` along an array; couple `j` is `(i_j, i_{2M+1-j})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoupleSequence {
    pub array: RegionSpec,
    pub indices: Vec<usize>,
}

impl CoupleSequence {
    pub fn new(array: RegionSpec, indices: Vec<usize>) -> Self {
        CoupleSequence { array, indices }
    }

    /// Number of couples `h`.
    pub fn couple_count(&self) -> usize {
        self.indices.len() / 2
    }

    /// Couples as positions along the array, outermost first.
    pub fn couples(&self) -> Vec<(usize, usize)> {
        let m = self.indices.len();
        (0..m / 2).map(|j| (self.indices[j], self.indices[m - 1 - j])).collect()
    }

    /// Couples as cube indices of the tiling.
    pub fn cube_pairs(&self, t: &Tiling) -> Vec<(usize, usize)> {
        let cubes = self.array.indices(t);
        self.couples().into_iter().map(|(i, j)| (cubes[i], cubes[j])).collect()
    }

    pub fn validate(&self, t: &Tiling) -> std::result::Result<(), Violation> {
        if self.array.check_within(t).is_err() {
            return Err(Violation::RegionOutOfBounds(self.array.clone()));
        }
        if self.array.array_axis().is_none() {
            return Err(Violation::NotArray(self.array.clone()));
        }
        if self.indices.len() % 2 == 1 {
            return Err(Violation::OddIndexCount { region: self.array.clone(), count: self.indices.len() });
        }
        if self.indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Violation::IndicesNotStrict { region: self.array.clone(), indices: self.indices.clone() });
        }
        let len = self.array.len();
        if let Some(&last) = self.indices.last() {
            if last >= len {
                return Err(Violation::IndexOutOfArray { region: self.array.clone(), index: last, len });
            }
        }
        Ok(())
    }
}

/// Couple sequences acting simultaneously on pairwise disjoint arrays.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EMovement {
    tiling: Tiling,
    sequences: Vec<CoupleSequence>,
}

impl EMovement {
    pub fn new(t: Tiling, sequences: Vec<CoupleSequence>) -> Self {
        EMovement { tiling: t, sequences }
    }

    pub fn tiling(&self) -> &Tiling {
        &self.tiling
    }

    pub fn sequences(&self) -> &[CoupleSequence] {
        &self.sequences
    }

    pub fn couple_count(&self) -> usize {
        self.sequences.iter().map(CoupleSequence::couple_count).sum()
    }

    pub fn max_len(&self) -> usize {
        self.sequences.iter().map(|s| s.array.len()).max().unwrap_or(0)
    }

    pub fn cube_pairs(&self) -> Vec<(usize, usize)> {
        self.sequences.iter().flat_map(|s| s.cube_pairs(&self.tiling)).collect()
    }

    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let t = &self.tiling;
        let mut owner = vec![usize::MAX; t.len()];
        for (k, s) in self.sequences.iter().enumerate() {
            s.validate(t)?;
            for c in s.array.indices(t) {
                let prev = std::mem::replace(&mut owner[c], k);
                if prev != usize::MAX {
                    return Err(Violation::ArraysOverlap(self.sequences[prev].array.clone(), s.array.clone()));
                }
            }
        }
        Ok(())
    }

    /// `max_i ℓ(A_i) · N^{-1-ν/2} · √(Σ_i h(i))`.
    pub fn cost(&self) -> f64 {
        let h = self.couple_count();
        if h == 0 {
            return 0.0;
        }
        self.max_len() as f64 * unit_cost(&self.tiling) * (h as f64).sqrt()
    }
}

/// Either kind of elementary movement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Movement {
    S(SMovement),
    E(EMovement),
}

impl Movement {
    pub fn tiling(&self) -> &Tiling {
        match self {
            Movement::S(s) => s.tiling(),
            Movement::E(e) => e.tiling(),
        }
    }

    pub fn validate(&self) -> std::result::Result<(), Violation> {
        match self {
            Movement::S(s) => s.validate(),
            Movement::E(e) => e.validate(),
        }
    }

    pub fn cost(&self) -> f64 {
        match self {
            Movement::S(s) => s.cost(),
            Movement::E(e) => e.cost(),
        }
    }

    /// The transpositions making up the movement, as cube indices.
    pub fn cube_pairs(&self) -> Vec<(usize, usize)> {
        match self {
            Movement::S(s) => s.pairs().to_vec(),
            Movement::E(e) => e.cube_pairs(),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Movement::S(s) => s.pairs.is_empty(),
            Movement::E(e) => e.couple_count() == 0,
        }
    }
}

impl From<SMovement> for Movement {
    fn from(s: SMovement) -> Self {
        Movement::S(s)
    }
}

impl From<EMovement> for Movement {
    fn from(e: EMovement) -> Self {
        Movement::E(e)
    }
}

pub fn validate_movement(m: &Movement) -> std::result::Result<(), Violation> {
    m.validate()
}

pub fn movement_cost(m: &Movement) -> Result<f64> {
    m.validate().map_err(Error::InvalidMovement)?;
    Ok(m.cost())
}

/// `m ∘ p`.
pub fn apply_movement(p: &Permutation, m: &Movement) -> Result<Permutation> {
    if m.tiling() != p.tiling() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", m.tiling(), p.tiling())));
    }
    m.validate().map_err(Error::InvalidMovement)?;
    let mut pl = Placement::new(p);
    pl.apply(&m.cube_pairs());
    Ok(pl.into_permutation())
}

/// A permutation together with its inverse, for applying long flows in place.
///
/// Reading the permutation as tokens, the token with home `κ` sits at
/// position `p(κ)`; a swap of positions `a, b` exchanges their tokens.
#[derive(Clone, Debug)]
pub struct Placement {
    tiling: Tiling,
    pos: Vec<usize>,
    token: Vec<usize>,
}

impl Placement {
    pub fn new(p: &Permutation) -> Self {
        let pos = p.table().to_vec();
        let mut token = vec![0; pos.len()];
        for (k, &x) in pos.iter().enumerate() {
            token[x] = k;
        }
        Placement { tiling: *p.tiling(), pos, token }
    }

    pub fn tiling(&self) -> &Tiling {
        &self.tiling
    }

    /// Position of the token whose home is `k`, i.e. `p(k)`.
    pub fn pos(&self, k: usize) -> usize {
        self.pos[k]
    }

    /// Home of the token sitting at position `x`, i.e. `p^{-1}(x)`.
    pub fn token(&self, x: usize) -> usize {
        self.token[x]
    }

    pub fn tokens(&self) -> &[usize] {
        &self.token
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        let (ka, kb) = (self.token[a], self.token[b]);
        self.pos[ka] = b;
        self.pos[kb] = a;
        self.token.swap(a, b);
    }

    pub fn apply(&mut self, pairs: &[(usize, usize)]) {
        for &(a, b) in pairs {
            self.swap(a, b);
        }
    }

    pub fn is_identity(&self) -> bool {
        self.pos.iter().enumerate().all(|(k, &x)| k == x)
    }

    pub fn to_permutation(&self) -> Permutation {
        Permutation::from_table(self.tiling, self.pos.clone()).expect("placement stays a bijection")
    }

    pub fn into_permutation(self) -> Permutation {
        Permutation::from_table(self.tiling, self.pos).expect("placement stays a bijection")
    }
}

/// Each adjacent pair becomes a length-2 array with one couple.
pub fn embed_s_as_e(s: &SMovement) -> EMovement {
    let t = s.tiling;
    let sequences = s
        .pairs
        .iter()
        .map(|&(a, b)| {
            let (a, b) = (a.min(b), a.max(b));
            let array = RegionSpec::new(t.coords(a), t.coords(b)).expect("adjacent cubes bound an array");
            CoupleSequence::new(array, vec![0, 1])
        })
        .collect();
    EMovement::new(t, sequences)
}

/// Odd-even transposition sort of `keys`, even pairs first.
///
/// Returns, per round, the left positions of the swapped pairs; the last
/// rounds may be empty only if the input is already sorted. At most
/// `keys.len()` rounds are produced.
pub fn odd_even_rounds(keys: &mut [usize]) -> Vec<Vec<usize>> {
    let n = keys.len();
    let mut rounds = Vec::new();
    let mut quiet = 0;
    let mut parity = 0;
    while quiet < 2 && n > 1 {
        let mut swaps = Vec::new();
        let mut i = parity;
        while i + 1 < n {
            if keys[i] > keys[i + 1] {
                keys.swap(i, i + 1);
                swaps.push(i);
            }
            i += 2;
        }
        if swaps.is_empty() {
            quiet += 1;
        } else {
            quiet = 0;
        }
        rounds.push(swaps);
        parity ^= 1;
    }
    while rounds.last().is_some_and(|r| r.is_empty()) {
        rounds.pop();
    }
    rounds
}

/// Realizes an E-movement by adjacent swaps.
///
/// Each sequence is sorted by odd-even transposition over the span
/// `[i_1, i_{2M}]`, keyed by destination; cubes outside the couples are
/// already mutually ordered and never swap with each other, so a round holds
/// at most `2M` swaps of that sequence. Rounds of different arrays run in
/// parallel.
pub fn lower_e_to_s(e: &EMovement) -> Result<DiscreteFlow> {
    e.validate().map_err(Error::InvalidMovement)?;
    let t = e.tiling;
    let mut merged: Vec<Vec<(usize, usize)>> = Vec::new();
    for s in &e.sequences {
        let (Some(&lo), Some(&hi)) = (s.indices.first(), s.indices.last()) else { continue };
        let cubes = s.array.indices(&t);
        let mut keys: Vec<usize> = (lo..=hi).collect();
        for (i, j) in s.couples() {
            keys[i - lo] = j;
            keys[j - lo] = i;
        }
        for (r, round) in odd_even_rounds(&mut keys).into_iter().enumerate() {
            if merged.len() <= r {
                merged.push(Vec::new());
            }
            merged[r].extend(round.into_iter().map(|i| (cubes[lo + i], cubes[lo + i + 1])));
        }
    }
    let mut flow = DiscreteFlow::new(t);
    for round in merged {
        flow.push(SMovement::new(t, round).into())?;
    }
    Ok(flow)
}

/// An ordered list of movements with its cached total cost.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteFlow {
    tiling: Tiling,
    steps: Vec<Movement>,
    total: f64,
}

impl DiscreteFlow {
    pub fn new(t: Tiling) -> Self {
        DiscreteFlow { tiling: t, steps: Vec::new(), total: 0.0 }
    }

    pub fn tiling(&self) -> &Tiling {
        &self.tiling
    }

    /// Validates and appends a movement; movements without couples are dropped.
    pub fn push(&mut self, m: Movement) -> Result<()> {
        if *m.tiling() != self.tiling {
            let violation = Violation::TilingMismatch { expected: self.tiling, found: *m.tiling() };
            return Err(Error::InvalidStep { index: self.steps.len(), violation });
        }
        m.validate().map_err(|violation| Error::InvalidStep { index: self.steps.len(), violation })?;
        if !m.is_empty() {
            self.total += m.cost();
            self.steps.push(m);
        }
        Ok(())
    }

    pub fn push_swaps(&mut self, pairs: Vec<(usize, usize)>) -> Result<()> {
        self.push(SMovement::new(self.tiling, pairs).into())
    }

    pub fn extend(&mut self, other: DiscreteFlow) -> Result<()> {
        for m in other.steps {
            self.push(m)?;
        }
        Ok(())
    }

    pub fn steps(&self) -> &[Movement] {
        &self.steps
    }

    /// Number of steps.
    pub fn duration(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_cost(&self) -> f64 {
        self.total
    }

    /// The same steps in reverse order; the composite map is inverted.
    pub fn reversed(&self) -> DiscreteFlow {
        let steps: Vec<Movement> = self.steps.iter().rev().cloned().collect();
        let total = steps.iter().map(Movement::cost).sum();
        DiscreteFlow { tiling: self.tiling, steps, total }
    }

    /// Applies the steps in order to a placement, without revalidating.
    pub fn apply_to(&self, pl: &mut Placement) {
        for m in &self.steps {
            pl.apply(&m.cube_pairs());
        }
    }

    pub fn apply(&self, p: &Permutation) -> Result<Permutation> {
        flow_apply_and_cost(p, self).map(|(q, _)| q)
    }

    pub fn to_text(&self) -> String {
        let t = &self.tiling;
        let mut s = format!("{t}\n");
        for m in &self.steps {
            match m {
                Movement::S(sm) => {
                    let body: Vec<String> =
                        sm.pairs.iter().map(|&(a, b)| format!("{}-{}", t.cube(a), t.cube(b))).collect();
                    s.push_str(&format!("S: {}\n", body.join("; ")));
                }
                Movement::E(em) => {
                    let body: Vec<String> = em
                        .sequences
                        .iter()
                        .map(|q| {
                            let axis = q.array.array_axis().unwrap_or(0);
                            format!("[{} axis={}] idx={}", q.array, axis, join(&q.indices))
                        })
                        .collect();
                    s.push_str(&format!("E: {}\n", body.join(" | ")));
                }
            }
        }
        s.push_str(&format!("total={}\n", self.total));
        s
    }

    /// Parses the text form. A `total=` line, if present, must match the recomputed cost.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or(Error::Format { line: 1, msg: "missing header".into() })?;
        let t = parse_header(header, hl + 1)?;
        let mut flow = DiscreteFlow::new(t);
        let mut claimed = None;
        for (i, line) in lines {
            let ln = i + 1;
            let line = line.trim();
            let m: Movement = if let Some(body) = line.strip_prefix("S:") {
                let mut pairs = Vec::new();
                for item in body.split(';').map(str::trim).filter(|x| !x.is_empty()) {
                    let (a, b) = item
                        .split_once(")-(")
                        .ok_or_else(|| Error::Format { line: ln, msg: format!("bad swap {item:?}") })?;
                    let (a, b) = (parse_coords(a, ln)?, parse_coords(b, ln)?);
                    pairs.push((index_at(&t, &a, ln)?, index_at(&t, &b, ln)?));
                }
                SMovement::new(t, pairs).into()
            } else if let Some(body) = line.strip_prefix("E:") {
                let mut seqs = Vec::new();
                for item in body.split('|').map(str::trim).filter(|x| !x.is_empty()) {
                    seqs.push(parse_sequence(item, ln)?);
                }
                EMovement::new(t, seqs).into()
            } else if let Some(v) = line.strip_prefix("total=") {
                let v: f64 = v.trim().parse().map_err(|_| Error::Format { line: ln, msg: format!("bad total {v:?}") })?;
                claimed = Some((v, ln));
                continue;
            } else {
                return Err(Error::Format { line: ln, msg: format!("unrecognized line {line:?}") });
            };
            flow.push(m).map_err(|e| Error::Format { line: ln, msg: e.to_string() })?;
        }
        if let Some((v, ln)) = claimed {
            let tol = 1e-12 * flow.total.abs().max(1e-300);
            if (v - flow.total).abs() > tol {
                return Err(Error::Format { line: ln, msg: format!("stated total {v} but steps cost {}", flow.total) });
            }
        }
        Ok(flow)
    }
}

fn index_at(t: &Tiling, c: &CubeId, ln: usize) -> Result<usize> {
    t.index(c).map_err(|e| Error::Format { line: ln, msg: e.to_string() })
}

fn parse_sequence(item: &str, ln: usize) -> Result<CoupleSequence> {
    let bad = |m: &str| Error::Format { line: ln, msg: format!("{m} in {item:?}") };
    let rest = item.strip_prefix('[').ok_or_else(|| bad("expected `[`"))?;
    let (region, rest) = rest.split_once(']').ok_or_else(|| bad("expected `]`"))?;
    let (bounds, axis) = region.rsplit_once("axis=").ok_or_else(|| bad("missing axis"))?;
    let axis: usize = axis.trim().parse().map_err(|_| bad("bad axis"))?;
    let (lo, hi) = bounds.trim().split_once("..").ok_or_else(|| bad("expected `lo..hi`"))?;
    let array = RegionSpec::new(parse_coords(lo, ln)?.0, parse_coords(hi, ln)?.0).map_err(|_| bad("bad region"))?;
    if array.len() > 1 && array.array_axis() != Some(axis) {
        return Err(bad("axis does not match the array"));
    }
    let idx = rest.trim().strip_prefix("idx=").ok_or_else(|| bad("missing idx="))?;
    let indices = idx
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<usize>().map_err(|_| bad("bad index")))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoupleSequence::new(array, indices))
}

impl fmt::Display for DiscreteFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Applies every step in order and sums the costs; an invalid step aborts with its index.
pub fn flow_apply_and_cost(p: &Permutation, f: &DiscreteFlow) -> Result<(Permutation, f64)> {
    if p.tiling() != f.tiling() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", p.tiling(), f.tiling())));
    }
    let mut pl = Placement::new(p);
    let mut cost = 0.0;
    for (index, m) in f.steps.iter().enumerate() {
        m.validate().map_err(|violation| Error::InvalidStep { index, violation })?;
        pl.apply(&m.cube_pairs());
        cost += m.cost();
    }
    Ok((pl.into_permutation(), cost))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t22() -> Tiling {
        Tiling::new(2, 2).unwrap()
    }

    #[test]
    fn shared_cube_is_reported() {
        let t = t22();
        let m = SMovement::from_cubes(
            t,
            &[(CubeId::new([0, 0]), CubeId::new([0, 1])), (CubeId::new([0, 1]), CubeId::new([1, 1]))],
        )
        .unwrap();
        assert_eq!(m.validate(), Err(Violation::SharedCube(CubeId::new([0, 1]))));
    }

    #[test]
    fn reversal_of_four_lowers_to_two_one_two_one() {
        let t = Tiling::new(2, 4).unwrap();
        let arr = RegionSpec::array(vec![0, 0], 1, 4).unwrap();
        let e = EMovement::new(t, vec![CoupleSequence::new(arr, vec![0, 1, 2, 3])]);
        let f = lower_e_to_s(&e).unwrap();
        let counts: Vec<usize> = f.steps().iter().map(|m| m.cube_pairs().len()).collect();
        assert_eq!(counts, vec![2, 1, 2, 1]);
        let expected = (2.0 * 2f64.sqrt() + 2.0) * unit_cost(&t);
        assert!((f.total_cost() - expected).abs() < 1e-15);
    }

    #[test]
    fn odd_even_sorts_short_inputs() {
        let mut k = vec![1, 0];
        assert_eq!(odd_even_rounds(&mut k), vec![vec![0]]);
        let mut k = vec![0, 2, 1];
        assert_eq!(odd_even_rounds(&mut k), vec![vec![], vec![1]]);
        let mut k = vec![0, 1, 2];
        assert!(odd_even_rounds(&mut k).is_empty());
    }

    #[test]
    fn text_roundtrip_keeps_steps() {
        let t = Tiling::new(2, 4).unwrap();
        let mut f = DiscreteFlow::new(t);
        f.push_swaps(vec![(0, 1), (4, 8)]).unwrap();
        let arr = RegionSpec::array(vec![1, 0], 1, 4).unwrap();
        f.push(EMovement::new(t, vec![CoupleSequence::new(arr, vec![0, 3])]).into()).unwrap();
        let g = DiscreteFlow::from_text(&f.to_text()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn tampered_total_is_rejected() {
        let t = t22();
        let mut f = DiscreteFlow::new(t);
        f.push_swaps(vec![(0, 1)]).unwrap();
        let text = f.to_text().replace("total=0.25", "total=0.3");
        assert!(matches!(DiscreteFlow::from_text(&text), Err(Error::Format { .. })));
    }
}
