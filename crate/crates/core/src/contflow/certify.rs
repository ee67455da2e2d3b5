use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::field::{FrameParams, Phase, PiecewiseField};
use super::geometry::{Point, Polygon};
use super::integrate::time1_image;

/// `‖v‖_{L¹_t L²_x}` by midpoint quadrature on a grid of `resolution`
/// points per cube side over the frame's bounding box.
pub fn l1l2_norm(field: &PiecewiseField, resolution: usize) -> Result<f64> {
    if resolution < 64 {
        return Err(Error::Precondition(format!("resolution {resolution} below 64 points per cube side")));
    }
    let p = &field.params;
    let (nx, ny) = (resolution * p.m, resolution);
    let dx = p.h / resolution as f64;
    let total = field
        .phases
        .par_iter()
        .map(|ph| {
            let mut sum = 0.0;
            for i in 0..nx {
                for j in 0..ny {
                    let x = [(i as f64 + 0.5) * dx, (j as f64 + 0.5) * dx];
                    // grid points on a diagonal belong to either neighbouring piece
                    if let Some(k) = ph.locate_nearest(x, 1e-9 * p.h) {
                        let v = ph.pieces[k].velocity.eval(x);
                        sum += v[0] * v[0] + v[1] * v[1];
                    }
                }
            }
            (ph.end - ph.start) * ph.speed * (sum * dx * dx).sqrt()
        })
        .sum();
    Ok(total)
}

/// `‖P − Id‖₂` of the discrete swap of the first and last cube of the array.
pub fn discrete_swap_l2(p: &FrameParams) -> f64 {
    std::f64::consts::SQRT_2 * (p.m as f64 - 1.0) * p.h * p.h
}

/// The bump `exp(1 − 1/(1 − |x − center|²/radius²))` (peak value 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: Point,
    pub radius: f64,
}

impl Bump {
    pub fn value(&self, x: Point) -> f64 {
        let s = ((x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2)) / (self.radius * self.radius);
        if s >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - s)).exp()
        }
    }

    pub fn gradient(&self, x: Point) -> Point {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        let r2 = self.radius * self.radius;
        let s = (dx * dx + dy * dy) / r2;
        if s >= 1.0 {
            return [0.0, 0.0];
        }
        let g = -(1.0 - 1.0 / (1.0 - s)).exp() / ((1.0 - s) * (1.0 - s)) * 2.0 / r2;
        [g * dx, g * dy]
    }

    fn square(&self) -> Polygon {
        let (c, r) = (self.center, self.radius);
        Polygon::rect(c[0] - r, c[1] - r, c[0] + r, c[1] + r)
    }
}

/// Ten bumps across the frame: on the four diagonals, in the cube centers
/// and corners, and over the thin strips.
pub fn bump_battery(p: &FrameParams) -> Vec<Bump> {
    let (h, l, s) = (p.h, p.length(), p.a * p.h);
    let r = 0.45 * h;
    [
        [l - h / 2.0, s / 2.0],
        [h / 2.0, s / 2.0],
        [l - h / 2.0, h - s / 2.0],
        [h / 2.0, h - s / 2.0],
        [h, s],
        [l / 2.0, 0.1 * h],
        [l / 2.0, h / 2.0],
        [h / 2.0, h / 2.0],
        [0.3 * h, 0.7 * h],
        [l - 0.35 * h, 0.2 * h],
    ]
    .into_iter()
    .map(|center| Bump { center, radius: r })
    .collect()
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push(((1.0 - x) / 2.0, 1.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `∫_T f` over a triangle through the collapsed-square map, on `4^level` subtriangles.
fn triangle_integral(tri: [Point; 3], level: u32, rule: &[(f64, f64)], f: &impl Fn(Point) -> f64) -> f64 {
    if level > 0 {
        let mid = |a: Point, b: Point| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let [a, b, c] = tri;
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        return [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
            .into_iter()
            .map(|t| triangle_integral(t, level - 1, rule, f))
            .sum();
    }
    let [p0, p1, p2] = tri;
    let area2 = ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1])).abs();
    let mut sum = 0.0;
    for &(u, wu) in rule {
        for &(v, wv) in rule {
            let x = [
                p0[0] + u * (p1[0] - p0[0]) + u * v * (p2[0] - p1[0]),
                p0[1] + u * (p1[1] - p0[1]) + u * v * (p2[1] - p1[1]),
            ];
            sum += wu * wv * u * f(x);
        }
    }
    sum * area2
}

fn polygon_integral(poly: &Polygon, level: u32, rule: &[(f64, f64)], f: &impl Fn(Point) -> f64) -> f64 {
    poly.triangles().into_iter().map(|t| triangle_integral(t, level, rule, f)).sum()
}

/// `(∫ v·∇φ, ∫ |v||∇φ|)` over one phase, piece by piece. Where pieces
/// overlap the first one counts, as in evaluation.
fn weak_divergence_one(ph: &Phase, bump: &Bump, level: u32, rule: &[(f64, f64)]) -> (f64, f64) {
    let window = bump.square();
    let mut signed = 0.0;
    let mut scale = 0.0;
    for (k, pc) in ph.pieces.iter().enumerate() {
        let clipped = Polygon::clipped(&pc.region, &window.edges());
        if clipped.is_degenerate(0.0) {
            continue;
        }
        let owned = ph.pieces[..k].iter().fold(vec![clipped], |parts, q| {
            parts.into_iter().flat_map(|part| part.difference(&q.region)).collect()
        });
        for part in owned {
            signed += polygon_integral(&part, level, rule, &|x| {
                let (v, g) = (pc.velocity.eval(x), bump.gradient(x));
                v[0] * g[0] + v[1] * g[1]
            });
            scale += polygon_integral(&part, level, rule, &|x| {
                let (v, g) = (pc.velocity.eval(x), bump.gradient(x));
                v[0].hypot(v[1]) * g[0].hypot(g[1])
            });
        }
    }
    (signed, scale)
}

/// Relative weak divergence `|∫ v·∇φ| / ∫ |v||∇φ|` of one phase against one bump,
/// refined until two successive levels agree to `10⁻⁸` of the scale or `10⁻³` of the value.
pub fn weak_divergence(ph: &Phase, bump: &Bump) -> Result<f64> {
    let rule = gauss_legendre(12);
    let mut prev = weak_divergence_one(ph, bump, 1, &rule);
    for level in 2..=5 {
        let cur = weak_divergence_one(ph, bump, level, &rule);
        if cur.1 == 0.0 {
            return Ok(0.0);
        }
        if (cur.0 - prev.0).abs() <= 1e-8 * cur.1 + 1e-3 * cur.0.abs() {
            return Ok(cur.0.abs() / cur.1);
        }
        prev = cur;
    }
    Err(Error::Numerical(format!("weak divergence quadrature did not settle around {:?}", bump.center)))
}

/// The largest relative weak divergence over all phases and bumps.
pub fn weak_divergence_residual(field: &PiecewiseField, tests: &[Bump]) -> Result<f64> {
    let jobs: Vec<(&Phase, &Bump)> = field.phases.iter().flat_map(|ph| tests.iter().map(move |b| (ph, b))).collect();
    let vals: Vec<f64> = jobs.into_par_iter().map(|(ph, b)| weak_divergence(ph, b)).collect::<Result<_>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwapReport {
    pub samples: usize,
    /// Samples starting on a region boundary, left out of the checks.
    pub excluded: usize,
    pub tol: f64,
    /// Largest deviation of an end cube sample from its translated position.
    pub translation_error: f64,
    /// Largest displacement of an intermediate cube sample.
    pub fixed_error: f64,
    /// Fraction of end cube samples landing in the opposite end cube.
    pub volume_fraction: f64,
    pub worst_sample: Option<Point>,
}

impl SwapReport {
    pub fn pass(&self) -> bool {
        self.translation_error <= self.tol && self.fixed_error <= self.tol && self.volume_fraction >= 1.0 - self.tol
    }
}

fn on_boundary(field: &PiecewiseField, x: Point) -> bool {
    field.phases.iter().any(|ph| ph.value(x, field.params.h).boundary)
}

/// Checks the time-1 map on `points`: `κ_1` and `κ_m` trade places by
/// translation and every other cube of the array is fixed.
pub fn check_points(field: &PiecewiseField, points: &[Point], h: f64) -> Result<SwapReport> {
    let p = &field.params;
    let (side, shift) = (p.h, p.length() - p.h);
    let tol = 1e-3 * side;
    let kept: Vec<Point> = points.iter().copied().filter(|&x| !on_boundary(field, x)).collect();
    let images: Vec<Point> = kept.par_iter().map(|&x| time1_image(field, x, h)).collect::<Result<_>>()?;
    let (mut trans, mut fixed) = (0.0f64, 0.0f64);
    let (mut ends, mut landed) = (0usize, 0usize);
    let mut worst: Option<(f64, Point)> = None;
    for (&x, &y) in kept.iter().zip(&images) {
        let (expected, is_end) = if x[0] < side {
            ([x[0] + shift, x[1]], true)
        } else if x[0] > p.length() - side {
            ([x[0] - shift, x[1]], true)
        } else {
            (x, false)
        };
        let err = (y[0] - expected[0]).hypot(y[1] - expected[1]);
        if is_end {
            trans = trans.max(err);
            ends += 1;
            let target = if x[0] < side { p.m } else { 1 };
            landed += usize::from(p.cube(target).depth(y) > 0.0);
        } else {
            fixed = fixed.max(err);
        }
        if worst.is_none_or(|w| err > w.0) {
            worst = Some((err, x));
        }
    }
    Ok(SwapReport {
        samples: kept.len(),
        excluded: points.len() - kept.len(),
        tol,
        translation_error: trans,
        fixed_error: fixed,
        volume_fraction: if ends == 0 { 1.0 } else { landed as f64 / ends as f64 },
        worst_sample: worst.map(|w| w.1),
    })
}

/// Integrates `samples` random points of every cube of the array to time 1
/// and checks the swap.
pub fn verify_swap_map(params: FrameParams, samples: usize, h: f64, seed: u64) -> Result<SwapReport> {
    let field = super::field::build_swap_field(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = params.h;
    let points: Vec<Point> = (0..params.m)
        .flat_map(|j| (0..samples).map(move |_| j))
        .map(|j| [(j as f64 + rng.gen::<f64>()) * side, rng.gen::<f64>() * side])
        .collect();
    check_points(&field, &points, h)
}
