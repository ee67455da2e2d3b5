use crate::error::{Error, Result};
use crate::lattice::{Permutation, Tiling};

/// `2/7` in the plane, `1/(ν+1)` otherwise.
pub fn choose_epsilon(nu: usize) -> f64 {
    if nu == 2 {
        2.0 / 7.0
    } else {
        1.0 / (nu as f64 + 1.0)
    }
}

/// Largest power of two dividing `n` and not exceeding `δ^{-ε}` (at least 1).
pub fn coarse_side(n: usize, delta: f64, epsilon: f64) -> usize {
    let cap = if delta > 0.0 { delta.powf(-epsilon) } else { f64::INFINITY };
    let mut s = 1;
    while n % (2 * s) == 0 && (2 * s) as f64 <= cap {
        s *= 2;
    }
    s
}

/// Constants of the step bounds.
///
/// `d` and `c_l2` bound the displacement and the L² norm after Step 1; they
/// follow from the construction. `c1`, `c2`, `c3` multiply the cost bounds and
/// were measured on random instances, then fixed with a safety margin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants {
    pub d: f64,
    pub c_l2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Constants {
    pub fn for_dimension(nu: usize) -> Self {
        let k = 2.0 * nu as f64 + 1.0;
        // a white token moves at most 2ν times, each time by under two cell
        // diagonals, and cells are at most twice as wide as δ^ε
        let d = 1.0 + 2.0 * k * (nu as f64 + 3.0).sqrt();
        let c_l2 = (1.0 + k * d * d).sqrt();
        Constants { d, c_l2, c1: 4.0, c2: 8.0, c3: 8.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub nu: usize,
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    /// Coarse cells per axis, `s`.
    pub coarse_side: usize,
    pub constants: Constants,
}

impl PipelineConfig {
    pub fn new(t: &Tiling, delta: f64, epsilon: Option<f64>) -> Result<Self> {
        let nu = t.nu();
        let epsilon = epsilon.unwrap_or_else(|| choose_epsilon(nu));
        if !(epsilon > 0.0 && epsilon <= 2.0 / (2.0 + nu as f64) + 1e-12) {
            return Err(Error::Precondition(format!("epsilon {epsilon} outside (0, 2/(2+nu)]")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::Precondition(format!("delta {delta} must be finite and nonnegative")));
        }
        Ok(PipelineConfig {
            nu,
            n: t.n(),
            delta,
            epsilon,
            coarse_side: coarse_side(t.n(), delta, epsilon),
            constants: Constants::for_dimension(nu),
        })
    }

    /// Configuration with `δ = ‖p − Id‖₂`.
    pub fn for_permutation(p: &Permutation, epsilon: Option<f64>) -> Result<Self> {
        Self::new(p.tiling(), p.l2_to_identity(), epsilon)
    }

    /// Overrides the coarse side; it must divide `N`.
    pub fn with_coarse_side(mut self, s: usize) -> Result<Self> {
        if s == 0 || self.n % s != 0 {
            return Err(Error::Precondition(format!("coarse side {s} does not divide N={}", self.n)));
        }
        self.coarse_side = s;
        Ok(self)
    }

    pub fn tiling(&self) -> Tiling {
        Tiling::new(self.nu, self.n).expect("config holds a valid tiling")
    }

    /// Displacement threshold `δ^ε`.
    pub fn tau(&self) -> f64 {
        self.delta.powf(self.epsilon)
    }

    /// Cubes per coarse cell side, `N / s`.
    pub fn cell_width(&self) -> usize {
        self.n / self.coarse_side
    }

    pub fn bound1(&self) -> f64 {
        self.constants.c1 * self.delta.powf(1.0 - self.epsilon)
    }

    pub fn bound2(&self) -> f64 {
        let e = self.epsilon;
        let a = self.delta.powf(0.5 - 0.75 * e);
        let b = self.delta.powf(1.0 / 6.0 + 7.0 * e / 12.0);
        self.constants.c2 * a.max(b)
    }

    pub fn bound3(&self) -> f64 {
        self.constants.c3 * self.tau()
    }
}
