use crate::error::{Error, Result};
use crate::lattice::Permutation;

use super::step1::check_tiling;
use super::{Cells, PipelineConfig};

/// A red cube, its reduced orbit and the black cube that ends it.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub seed: usize,
    /// `P(κ), P²(κ), …` restricted to the slab above the seed's, ending at the first black cube.
    pub orbit: Vec<usize>,
    /// `n̄(κ)`, the length of the reduced orbit.
    pub n_bar: usize,
    /// Distance between the centers of the seed and the black cube.
    pub displacement: f64,
}

impl OrbitRecord {
    pub fn partner(&self) -> usize {
        *self.orbit.last().expect("orbits end at a black cube")
    }
}

#[derive(Clone, Debug)]
pub struct OrbitReport {
    pub axis: usize,
    /// Per cube: 0 stays in its slab, 1 drops one slab (black), 2 climbs one slab (red).
    pub colors: Vec<u8>,
    pub records: Vec<OrbitRecord>,
    /// Whether the number of black cubes of every slab equals the number of red cubes of the slab below.
    pub balanced: bool,
}

/// Three-colors the cubes by how `p` moves them across the coarse slabs
/// along `axis` and follows the orbit of every red cube of slab `i` through
/// slab `i+1` until its first black cube.
///
/// Along a cycle the crossings of one slab boundary alternate up and down,
/// so the partners are distinct and every red cube gets one.
pub fn compute_orbits(p: &Permutation, cfg: &PipelineConfig, axis: usize) -> Result<OrbitReport> {
    let t = check_tiling(p, cfg)?;
    if axis >= t.nu() {
        return Err(Error::DimensionMismatch(format!("axis {axis} in dimension {}", t.nu())));
    }
    let cells = Cells::new(t, cfg.coarse_side);
    let s = cells.s;
    let slab = |x: usize| cells.slab(x, axis);
    let mut colors = vec![0u8; t.len()];
    for k in 0..t.len() {
        let (a, b) = (slab(k), slab(p.get(k)));
        colors[k] = match b as isize - a as isize {
            0 => 0,
            -1 => 1,
            1 => 2,
            _ => {
                return Err(Error::Precondition(format!("cube {} is sent {} slabs away", t.cube(k), a.abs_diff(b))));
            }
        };
    }
    let mut red = vec![0usize; s];
    let mut black = vec![0usize; s];
    for k in 0..t.len() {
        match colors[k] {
            1 => black[slab(k)] += 1,
            2 => red[slab(k)] += 1,
            _ => {}
        }
    }
    let balanced = (1..s).all(|i| black[i] == red[i - 1]) && black[0] == 0 && red[s - 1] == 0;

    let mut records = Vec::new();
    for k in 0..t.len() {
        if colors[k] != 2 {
            continue;
        }
        let lower = slab(k) + 1;
        let mut orbit = Vec::new();
        let mut x = p.get(k);
        loop {
            if x == k {
                return Err(Error::Numerical(format!("orbit of {} closed without a black cube", t.cube(k))));
            }
            if slab(x) == lower {
                orbit.push(x);
                if colors[x] == 1 {
                    break;
                }
            }
            x = p.get(x);
        }
        let end = *orbit.last().unwrap();
        records.push(OrbitRecord { seed: k, n_bar: orbit.len(), displacement: t.dist(k, end), orbit });
    }
    Ok(OrbitReport { axis, colors, records, balanced })
}
