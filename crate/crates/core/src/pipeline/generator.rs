use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lattice::{Permutation, Tiling};
use crate::movements::Placement;

/// A random permutation with `‖P − Id‖₂` close to `delta`.
///
/// Random S-movements are composed one after another: each picks an axis and
/// a parity and keeps every candidate swap along that axis with probability
/// `ρ`, tuned so a movement adds roughly `δ²/40` to the squared norm. The
/// prefix whose norm first lands in `[0.9δ, 1.1δ]` is returned, or the
/// closest one seen within the step budget.
pub fn random_near_identity(t: &Tiling, delta: f64, seed: u64) -> Permutation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = Permutation::identity(*t);
    if delta <= 0.0 || t.len() < 2 {
        return id;
    }
    let nu = t.nu() as f64;
    let n = t.n() as f64;
    let candidates = (t.len() / 2).max(1) as f64;
    let target = (delta * delta * n.powf(nu + 2.0) / 40.0).max(1.0);
    let rho = (target / candidates).min(1.0);
    let mut pl = Placement::new(&id);
    let mut best = (f64::INFINITY, id);
    for _ in 0..20_000 {
        let axis = rng.gen_range(0..t.nu());
        let parity = rng.gen_range(0..2usize);
        let stride = t.stride(axis);
        let mut pairs = Vec::new();
        for x in 0..t.len() {
            let c = (x / stride) % t.n();
            if c % 2 == parity && c + 1 < t.n() && rng.gen_bool(rho) {
                pairs.push((x, x + stride));
            }
        }
        pl.apply(&pairs);
        let p = pl.to_permutation();
        let l2 = p.l2_to_identity();
        let gap = (l2 - delta).abs();
        if gap <= 0.1 * delta {
            return p;
        }
        if gap < best.0 {
            best = (gap, p);
        }
        if l2 > 1.5 * delta {
            break;
        }
    }
    best.1
}
