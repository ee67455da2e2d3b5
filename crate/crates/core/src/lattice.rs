//! Tilings of `[0,1]^ν` by `N^ν` cubes, cube identifiers, rectangular regions,
//! cube permutations and colorings.
//!
//! Cubes are addressed by 0-based multi-indices and stored densely in
//! lexicographic order, coordinate 0 being the most significant digit.

use std::fmt;

use crate::error::{Error, Result};

/// The tiling `R_N` of the unit cube in dimension `ν` into `N^ν` cubes of side `1/N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Tiling {
    nu: usize,
    n: usize,
    len: usize,
}

impl Tiling {
    pub fn new(nu: usize, n: usize) -> Result<Self> {
        if nu == 0 || n == 0 {
            return Err(Error::InvalidTiling(format!("need nu >= 1 and N >= 1, got nu={nu}, N={n}")));
        }
        let len = u32::try_from(nu)
            .ok()
            .and_then(|e| n.checked_pow(e))
            .filter(|&l| l <= u32::MAX as usize)
            .ok_or_else(|| Error::InvalidTiling(format!("N^nu overflows for nu={nu}, N={n}")))?;
        Ok(Tiling { nu, n, len })
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of cubes, `N^ν`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Side length `1/N` of a cube.
    pub fn side(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Lexicographic index of in-range coordinates.
    pub fn index_of(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.nu);
        coords.iter().fold(0, |acc, &c| {
            debug_assert!(c < self.n);
            acc * self.n + c
        })
    }

    pub fn index(&self, k: &CubeId) -> Result<usize> {
        self.check(k)?;
        Ok(self.index_of(&k.0))
    }

    pub fn coords_into(&self, mut idx: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = idx % self.n;
            idx /= self.n;
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<usize> {
        let mut c = vec![0; self.nu];
        self.coords_into(idx, &mut c);
        c
    }

    pub fn cube(&self, idx: usize) -> CubeId {
        CubeId(self.coords(idx))
    }

    /// Index distance between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.nu - 1 - axis) as u32)
    }

    pub fn check(&self, k: &CubeId) -> Result<()> {
        if k.0.len() != self.nu || k.0.iter().any(|&c| c >= self.n) {
            return Err(Error::InvalidCube { coords: k.0.clone(), nu: self.nu, n: self.n });
        }
        Ok(())
    }

    pub fn center(&self, k: &CubeId) -> Result<Vec<f64>> {
        self.check(k)?;
        Ok(k.0.iter().map(|&c| (c as f64 + 0.5) / self.n as f64).collect())
    }

    pub fn center_of(&self, idx: usize) -> Vec<f64> {
        self.coords(idx).iter().map(|&c| (c as f64 + 0.5) / self.n as f64).collect()
    }

    /// Squared Euclidean distance between the centers of two cubes.
    pub fn dist2(&self, i: usize, j: usize) -> f64 {
        let (mut a, mut b) = (i, j);
        let mut s = 0i64;
        for _ in 0..self.nu {
            let d = (a % self.n) as i64 - (b % self.n) as i64;
            s += d * d;
            a /= self.n;
            b /= self.n;
        }
        s as f64 / (self.n * self.n) as f64
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist2(i, j).sqrt()
    }

    /// Face adjacency on indices: coordinates differ by one on exactly one axis.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        let (mut a, mut b) = (i, j);
        let mut diff = 0;
        for _ in 0..self.nu {
            let (x, y) = (a % self.n, b % self.n);
            if x != y {
                if x.abs_diff(y) != 1 {
                    return false;
                }
                diff += 1;
            }
            a /= self.n;
            b /= self.n;
        }
        diff == 1
    }

    pub fn are_adjacent(&self, k1: &CubeId, k2: &CubeId) -> Result<bool> {
        Ok(self.adjacent(self.index(k1)?, self.index(k2)?))
    }

    /// The region covering the whole tiling.
    pub fn full(&self) -> RegionSpec {
        RegionSpec { lo: vec![0; self.nu], hi: vec![self.n - 1; self.nu] }
    }
}

impl fmt::Display for Tiling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "nu={} N={}", self.nu, self.n)
    }
}

/// A cube of a tiling, as a 0-based multi-index.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CubeId(pub Vec<usize>);

impl CubeId {
    pub fn new(coords: impl Into<Vec<usize>>) -> Self {
        CubeId(coords.into())
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for CubeId {
    fn from(v: Vec<usize>) -> Self {
        CubeId(v)
    }
}

impl fmt::Display for CubeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", join(&self.0))
    }
}

pub(crate) fn join(v: &[usize]) -> String {
    v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

/// Center of a cube: component `i` is `(k_i + 1/2)/N`.
pub fn cube_center(t: &Tiling, k: &CubeId) -> Result<Vec<f64>> {
    t.center(k)
}

pub fn are_adjacent(t: &Tiling, k1: &CubeId, k2: &CubeId) -> Result<bool> {
    t.are_adjacent(k1, k2)
}

/// Whether a region is a general rectangle or an array (extent > 1 on at most one axis).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionKind {
    Rectangle,
    /// `axis` is the long axis; a single cube reports axis 0.
    Array { axis: usize },
}

/// An axis-aligned box of cubes with inclusive bounds `lo..=hi`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RegionSpec {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl RegionSpec {
    pub fn new(lo: Vec<usize>, hi: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidRegion(format!("bounds {lo:?}..{hi:?} have different or zero length")));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::InvalidRegion(format!("lo {lo:?} exceeds hi {hi:?}")));
        }
        Ok(RegionSpec { lo, hi })
    }

    /// The array of `len` cubes starting at `start` and running along `axis`.
    pub fn array(start: Vec<usize>, axis: usize, len: usize) -> Result<Self> {
        if axis >= start.len() || len == 0 {
            return Err(Error::InvalidRegion(format!("bad array axis {axis} or length {len}")));
        }
        let mut hi = start.clone();
        hi[axis] += len - 1;
        RegionSpec::new(start, hi)
    }

    pub fn single(coords: Vec<usize>) -> Self {
        RegionSpec { hi: coords.clone(), lo: coords }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn extents(&self) -> Vec<usize> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a + 1).collect()
    }

    /// Number of cubes; for an array this is its length `ℓ(A)`.
    pub fn len(&self) -> usize {
        self.extents().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn kind(&self) -> RegionKind {
        let long: Vec<usize> = self.extents().iter().enumerate().filter(|(_, &e)| e > 1).map(|(i, _)| i).collect();
        match long.as_slice() {
            [] => RegionKind::Array { axis: 0 },
            [a] => RegionKind::Array { axis: *a },
            _ => RegionKind::Rectangle,
        }
    }

    pub fn array_axis(&self) -> Option<usize> {
        match self.kind() {
            RegionKind::Array { axis } => Some(axis),
            RegionKind::Rectangle => None,
        }
    }

    pub fn contains(&self, coords: &[usize]) -> bool {
        coords.len() == self.dim() && coords.iter().zip(self.lo.iter().zip(&self.hi)).all(|(c, (a, b))| a <= c && c <= b)
    }

    pub fn contains_index(&self, t: &Tiling, idx: usize) -> bool {
        let mut a = idx;
        for axis in (0..t.nu()).rev() {
            let c = a % t.n();
            if c < self.lo[axis] || c > self.hi[axis] {
                return false;
            }
            a /= t.n();
        }
        true
    }

    pub fn intersects(&self, other: &RegionSpec) -> bool {
        self.lo.iter().zip(&self.hi).zip(other.lo.iter().zip(&other.hi)).all(|((a, b), (c, d))| a <= d && c <= b)
    }

    pub fn check_within(&self, t: &Tiling) -> Result<()> {
        if self.dim() != t.nu() {
            return Err(Error::InvalidRegion(format!("region has dimension {}, tiling has {}", self.dim(), t.nu())));
        }
        if self.hi.iter().any(|&h| h >= t.n()) {
            return Err(Error::InvalidRegion(format!("region {self} exceeds N={}", t.n())));
        }
        Ok(())
    }

    /// Cube indices of the region in lexicographic order (along the long axis for arrays).
    pub fn indices(&self, t: &Tiling) -> Vec<usize> {
        let ext = self.extents();
        let mut out = Vec::with_capacity(self.len());
        let mut c = self.lo.clone();
        loop {
            out.push(t.index_of(&c));
            let mut axis = ext.len();
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                if c[axis] < self.hi[axis] {
                    c[axis] += 1;
                    break;
                }
                c[axis] = self.lo[axis];
            }
        }
    }

    /// Position of a cube inside the region's lexicographic order.
    pub fn local_index(&self, t: &Tiling, idx: usize) -> Option<usize> {
        let coords = t.coords(idx);
        if !self.contains(&coords) {
            return None;
        }
        let ext = self.extents();
        Some(coords.iter().zip(&self.lo).zip(&ext).fold(0, |acc, ((c, l), e)| acc * e + (c - l)))
    }
}

impl fmt::Display for RegionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})..({})", join(&self.lo), join(&self.hi))
    }
}

/// Cubes of `r` in canonical order.
pub fn region_cubes(t: &Tiling, r: &RegionSpec) -> Result<Vec<CubeId>> {
    r.check_within(t)?;
    Ok(r.indices(t).into_iter().map(|i| t.cube(i)).collect())
}

/// A bijection of the cubes of a tiling, stored as a dense target table.
///
/// The induced point map translates each cube onto its image; only the
/// cube-level table is stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    tiling: Tiling,
    target: Vec<usize>,
}

impl Permutation {
    pub fn identity(t: Tiling) -> Self {
        Permutation { tiling: t, target: (0..t.len()).collect() }
    }

    pub fn from_table(t: Tiling, target: Vec<usize>) -> Result<Self> {
        if target.len() != t.len() {
            return Err(Error::DimensionMismatch(format!("table has {} entries, tiling has {}", target.len(), t.len())));
        }
        let mut seen = vec![false; t.len()];
        for &j in &target {
            if j >= t.len() {
                return Err(Error::InvalidCube { coords: vec![j], nu: t.nu(), n: t.n() });
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(Error::NotBijection(j));
            }
        }
        Ok(Permutation { tiling: t, target })
    }

    /// Identity except for the listed `cube -> image` entries.
    pub fn from_pairs(t: Tiling, pairs: &[(CubeId, CubeId)]) -> Result<Self> {
        let mut target: Vec<usize> = (0..t.len()).collect();
        let mut set = vec![false; t.len()];
        for (a, b) in pairs {
            let i = t.index(a)?;
            if std::mem::replace(&mut set[i], true) {
                return Err(Error::NotBijection(i));
            }
            target[i] = t.index(b)?;
        }
        Self::from_table(t, target)
    }

    pub fn transposition(t: Tiling, a: usize, b: usize) -> Self {
        let mut p = Self::identity(t);
        p.target.swap(a, b);
        p
    }

    pub fn tiling(&self) -> &Tiling {
        &self.tiling
    }

    pub fn table(&self) -> &[usize] {
        &self.target
    }

    pub fn into_table(self) -> Vec<usize> {
        self.target
    }

    pub fn get(&self, i: usize) -> usize {
        self.target[i]
    }

    pub fn image(&self, k: &CubeId) -> Result<CubeId> {
        Ok(self.tiling.cube(self.target[self.tiling.index(k)?]))
    }

    fn same_tiling(&self, q: &Permutation) -> Result<()> {
        if self.tiling != q.tiling {
            return Err(Error::DimensionMismatch(format!("{} vs {}", self.tiling, q.tiling)));
        }
        Ok(())
    }

    /// `self ∘ q`, i.e. `κ ↦ self(q(κ))`.
    pub fn compose(&self, q: &Permutation) -> Result<Permutation> {
        self.same_tiling(q)?;
        Ok(Permutation { tiling: self.tiling, target: q.target.iter().map(|&j| self.target[j]).collect() })
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.target.len()];
        for (i, &j) in self.target.iter().enumerate() {
            inv[j] = i;
        }
        Permutation { tiling: self.tiling, target: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.target.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Number of cubes not fixed.
    pub fn moved(&self) -> usize {
        self.target.iter().enumerate().filter(|(i, &j)| *i != j).count()
    }

    /// `|c(P(κ)) - c(κ)|` for the cube with index `i`.
    pub fn displacement(&self, i: usize) -> f64 {
        self.tiling.dist(i, self.target[i])
    }

    pub fn max_displacement(&self) -> f64 {
        (0..self.target.len()).map(|i| self.tiling.dist2(i, self.target[i])).fold(0.0, f64::max).sqrt()
    }

    /// `sqrt(Σ_κ N^{-ν} |c(p(κ)) - c(q(κ))|²)`.
    pub fn l2_distance(&self, q: &Permutation) -> Result<f64> {
        self.same_tiling(q)?;
        let vol = (self.tiling.len() as f64).recip();
        let s: f64 = self.target.iter().zip(&q.target).map(|(&a, &b)| self.tiling.dist2(a, b)).sum();
        Ok((s * vol).sqrt())
    }

    pub fn l2_to_identity(&self) -> f64 {
        let vol = (self.tiling.len() as f64).recip();
        let s: f64 = self.target.iter().enumerate().map(|(i, &j)| self.tiling.dist2(i, j)).sum();
        (s * vol).sqrt()
    }

    /// True when the permutation fixes every cube outside `r` and maps `r` into itself.
    pub fn acts_within(&self, r: &RegionSpec) -> bool {
        self.target.iter().enumerate().all(|(i, &j)| {
            let inside = r.contains_index(&self.tiling, i);
            if inside {
                r.contains_index(&self.tiling, j)
            } else {
                i == j
            }
        })
    }

    /// Text form: a `nu=<ν> N=<N>` header, then `i1,..,iν -> j1,..,jν` for every moved cube.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.tiling);
        for (i, &j) in self.target.iter().enumerate() {
            if i != j {
                s.push_str(&format!("{} -> {}\n", join(&self.tiling.coords(i)), join(&self.tiling.coords(j))));
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or(Error::Format { line: 1, msg: "missing header".into() })?;
        let t = parse_header(header, hl + 1)?;
        let mut pairs = Vec::new();
        for (ln, line) in lines {
            let (a, b) = line
                .split_once("->")
                .ok_or_else(|| Error::Format { line: ln + 1, msg: format!("expected `a -> b`, got {line:?}") })?;
            pairs.push((parse_coords(a, ln + 1)?, parse_coords(b, ln + 1)?));
        }
        Self::from_pairs(t, &pairs).map_err(|e| match e {
            Error::Format { .. } => e,
            other => Error::Format { line: 0, msg: other.to_string() },
        })
    }
}

pub(crate) fn parse_header(line: &str, ln: usize) -> Result<Tiling> {
    let bad = || Error::Format { line: ln, msg: format!("expected `nu=<ν> N=<N>`, got {line:?}") };
    let mut nu = None;
    let mut n = None;
    for tok in line.split_whitespace() {
        match tok.split_once('=') {
            Some(("nu", v)) => nu = Some(v.parse::<usize>().map_err(|_| bad())?),
            Some(("N", v)) => n = Some(v.parse::<usize>().map_err(|_| bad())?),
            _ => return Err(bad()),
        }
    }
    Tiling::new(nu.ok_or_else(bad)?, n.ok_or_else(bad)?).map_err(|e| Error::Format { line: ln, msg: e.to_string() })
}

pub(crate) fn parse_coords(s: &str, ln: usize) -> Result<CubeId> {
    let s = s.trim().trim_start_matches('(').trim_end_matches(')');
    s.split(',')
        .map(|c| c.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(CubeId)
        .map_err(|_| Error::Format { line: ln, msg: format!("bad coordinates {s:?}") })
}

pub fn l2_distance(p: &Permutation, q: &Permutation) -> Result<f64> {
    p.l2_distance(q)
}

pub fn compose(p: &Permutation, q: &Permutation) -> Result<Permutation> {
    p.compose(q)
}

pub fn invert(p: &Permutation) -> Permutation {
    p.inverse()
}

/// A coloring of the cubes of a region; color 0 is white.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    tiling: Tiling,
    region: RegionSpec,
    colors: Vec<u8>,
}

impl Coloring {
    /// `colors` lists the colors in the region's canonical order.
    pub fn new(t: Tiling, region: RegionSpec, colors: Vec<u8>) -> Result<Self> {
        region.check_within(&t)?;
        if colors.len() != region.len() {
            return Err(Error::DimensionMismatch(format!("{} colors for a region of {} cubes", colors.len(), region.len())));
        }
        Ok(Coloring { tiling: t, region, colors })
    }

    /// Builds a coloring from a function of the region-local coordinates.
    pub fn from_fn(t: Tiling, region: RegionSpec, f: impl Fn(&[usize]) -> u8) -> Result<Self> {
        region.check_within(&t)?;
        let colors = region
            .indices(&t)
            .into_iter()
            .map(|i| {
                let c: Vec<usize> = t.coords(i).iter().zip(&region.lo).map(|(a, b)| a - b).collect();
                f(&c)
            })
            .collect();
        Ok(Coloring { tiling: t, region, colors })
    }

    pub fn tiling(&self) -> &Tiling {
        &self.tiling
    }

    pub fn region(&self) -> &RegionSpec {
        &self.region
    }

    pub fn colors(&self) -> &[u8] {
        &self.colors
    }

    pub fn color_of(&self, idx: usize) -> Option<u8> {
        self.region.local_index(&self.tiling, idx).map(|l| self.colors[l])
    }

    pub fn count(&self, color: u8) -> usize {
        self.colors.iter().filter(|&&c| c == color).count()
    }

    /// Number of non-white cubes.
    pub fn colored(&self) -> usize {
        self.colors.iter().filter(|&&c| c != 0).count()
    }

    /// Moves colors along with the cubes: the color at `a` travels to `b` for every swapped pair.
    pub fn transport(&mut self, pairs: &[(usize, usize)]) -> Result<()> {
        for &(a, b) in pairs {
            match (self.region.local_index(&self.tiling, a), self.region.local_index(&self.tiling, b)) {
                (Some(x), Some(y)) => self.colors.swap(x, y),
                (None, None) => {}
                _ => {
                    return Err(Error::InvalidRegion(format!(
                        "swap {}-{} crosses the boundary of {}",
                        self.tiling.cube(a),
                        self.tiling.cube(b),
                        self.region
                    )))
                }
            }
        }
        Ok(())
    }
}
