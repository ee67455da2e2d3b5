use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::geometry::{norm, Affine, HalfPlane, Point, Polygon};

/// Geometry of the swap of the first and last cube of a horizontal array of
/// `m` cubes of side `h = 1/n` starting at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameParams {
    pub n: usize,
    pub m: usize,
    pub h: f64,
    pub eps: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl FrameParams {
    /// Parameters with the incompressible choice `ε = h/(m−1)`.
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Precondition(format!("array length {m} < 2; adjacent cubes use a plain rotation")));
        }
        if n == 0 {
            return Err(Error::InvalidTiling(format!("N={n}")));
        }
        let h = 1.0 / n as f64;
        Self::with_epsilon(n, m, h / (m as f64 - 1.0))
    }

    /// Parameters derived from an arbitrary `ε`.
    pub fn with_epsilon(n: usize, m: usize, eps: f64) -> Result<Self> {
        if m < 2 || n == 0 || !(eps > 0.0) {
            return Err(Error::Precondition(format!("invalid frame n={n} m={m} eps={eps}")));
        }
        let h = 1.0 / n as f64;
        let a = eps / (eps + h);
        let b = a * m as f64 * h;
        Ok(FrameParams { n, m, h, eps, a, b, c: h - b })
    }

    /// `m·h`, the length of the array.
    pub fn length(&self) -> f64 {
        self.m as f64 * self.h
    }

    pub fn fits_unit_square(&self) -> bool {
        self.m <= self.n
    }

    /// The cube `κ_j`, `1 ≤ j ≤ m`.
    pub fn cube(&self, j: usize) -> Polygon {
        let x0 = (j - 1) as f64 * self.h;
        Polygon::rect(x0, 0.0, x0 + self.h, self.h)
    }

    pub fn frame_box(&self) -> Polygon {
        Polygon::rect(0.0, 0.0, self.length(), self.h)
    }
}

/// A region with an affine velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub label: String,
    pub region: Polygon,
    pub velocity: Affine,
}

/// One time interval of the schedule with its pieces and speed multiplier.
#[derive(Clone, Debug, PartialEq)]
pub struct Phase {
    pub name: &'static str,
    pub start: f64,
    pub end: f64,
    pub speed: f64,
    pub pieces: Vec<Piece>,
}

/// Velocity at a point, flagged when the point lies on a region boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Velocity {
    pub v: Point,
    pub boundary: bool,
}

impl Phase {
    fn tol(&self, h: f64) -> f64 {
        1e-12 * h
    }

    /// Index of the piece whose interior contains `x`.
    pub fn locate(&self, x: Point, h: f64) -> Option<usize> {
        let tol = self.tol(h);
        self.pieces.iter().position(|p| p.region.depth(x) > tol)
    }

    /// The piece `x` is deepest in, accepting points slightly outside.
    pub(crate) fn locate_nearest(&self, x: Point, slack: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (k, p) in self.pieces.iter().enumerate() {
            let d = p.region.depth(x);
            if d > -slack && best.is_none_or(|b| d > b.1) {
                best = Some((k, d));
            }
        }
        best.map(|b| b.0)
    }

    /// Field value without the speed multiplier.
    pub fn value(&self, x: Point, h: f64) -> Velocity {
        match self.locate(x, h) {
            Some(k) => Velocity { v: self.pieces[k].velocity.eval(x), boundary: false },
            None => {
                let tol = self.tol(h);
                let boundary = self.pieces.iter().any(|p| p.region.depth(x) >= -tol);
                Velocity { v: [0.0, 0.0], boundary }
            }
        }
    }

    /// `sup |v|` without the speed multiplier.
    pub fn sup_norm(&self) -> f64 {
        self.pieces
            .iter()
            .flat_map(|p| p.region.vertices.iter().map(move |&v| norm(p.velocity.eval(v))))
            .fold(0.0, f64::max)
    }
}

/// A time-dependent field, piecewise affine in space and piecewise constant in time.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseField {
    pub params: FrameParams,
    pub phases: Vec<Phase>,
}

impl PiecewiseField {
    pub fn phase_at(&self, t: f64) -> Result<&Phase> {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::Precondition(format!("time {t} outside [0, 1)")));
        }
        self.phases
            .iter()
            .find(|p| p.start <= t && t < p.end)
            .ok_or_else(|| Error::Numerical(format!("no phase covers t={t}")))
    }

    /// `v(t, x)`: zero outside every region and on region boundaries.
    pub fn evaluate(&self, t: f64, x: Point) -> Result<Velocity> {
        let ph = self.phase_at(t)?;
        let v = ph.value(x, self.params.h);
        Ok(Velocity { v: [ph.speed * v.v[0], ph.speed * v.v[1]], boundary: v.boundary })
    }

    /// `sup_{t,x} |v|`.
    pub fn sup_norm(&self) -> f64 {
        self.phases.iter().map(|p| p.speed * p.sup_norm()).fold(0.0, f64::max)
    }

    /// Regions as vertex lists with their affine coefficients, phase by phase.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = format!("N={} M={} eps={} a={} b={} c={}\n", p.n, p.m, p.eps, p.a, p.b, p.c);
        for ph in &self.phases {
            let _ = writeln!(s, "phase {} [{}, {}) speed={}", ph.name, ph.start, ph.end, ph.speed);
            for pc in &ph.pieces {
                let verts: Vec<String> = pc.region.vertices.iter().map(|v| format!("({}, {})", v[0], v[1])).collect();
                let (m, c) = (pc.velocity.m, pc.velocity.c);
                let _ = writeln!(
                    s,
                    "  {}: {} | v = ({} x + {} y + {}, {} x + {} y + {})",
                    pc.label,
                    verts.join(" "),
                    m[0][0],
                    m[0][1],
                    c[0],
                    m[1][0],
                    m[1][1],
                    c[1]
                );
            }
        }
        s
    }
}

/// The four trapezoids `A, B, C, D` of the frame, cut at `depth` from the
/// outer boundary, with their shear fields. With `depth = ε` these are the
/// sets of the construction exactly as their inequalities read.
pub fn shear_pieces(p: &FrameParams, depth: f64) -> Vec<Piece> {
    let (a, b, c, h, l) = (p.a, p.b, p.c, p.h, p.length());
    let pad = 2.0 * (l + h + depth / a);
    let world = Polygon::rect(-pad, -pad, pad, pad);
    let hp = HalfPlane::new;
    let regions = [
        (
            "A",
            vec![hp(0.0, -1.0, 0.0), hp(0.0, 1.0, depth), hp(-a, 1.0, 0.0), hp(a, 1.0, b)],
            Affine { m: [[0.0, -2.0 / a], [0.0, 0.0]], c: [b / a, 0.0] },
        ),
        (
            "B",
            vec![hp(-1.0, 0.0, -(l - depth / a)), hp(1.0, 0.0, l), hp(-a, -1.0, -b), hp(-a, 1.0, h - b)],
            Affine { m: [[0.0, 0.0], [2.0 * a, 0.0]], c: [0.0, h - 2.0 * b] },
        ),
        (
            "C",
            vec![hp(0.0, -1.0, -(h - depth)), hp(0.0, 1.0, h), hp(-a, -1.0, -h), hp(a, -1.0, -c)],
            Affine { m: [[0.0, -2.0 / a], [0.0, 0.0]], c: [(h + c) / a, 0.0] },
        ),
        (
            "D",
            vec![hp(-1.0, 0.0, 0.0), hp(1.0, 0.0, depth / a), hp(a, -1.0, 0.0), hp(a, 1.0, h)],
            Affine { m: [[0.0, 0.0], [2.0 * a, 0.0]], c: [0.0, -h] },
        ),
    ];
    regions
        .into_iter()
        .map(|(label, planes, velocity)| Piece { label: label.into(), region: Polygon::clipped(&world, &planes), velocity })
        .filter(|pc| !pc.region.is_degenerate(1e-18 * h * h))
        .collect()
}

/// The rotation field of a rectangle: four triangles meeting at its center,
/// with the vertical shear on the left and right ones and the horizontal
/// shear on the top and bottom ones. It turns the rectangle by `π/2` per unit time.
pub fn rotation_pieces(label: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Piece> {
    let (w, ht) = (x1 - x0, y1 - y0);
    if w <= 0.0 || ht <= 0.0 {
        return Vec::new();
    }
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let vert = Affine { m: [[0.0, 0.0], [2.0 * ht / w, 0.0]], c: [0.0, -2.0 * ht / w * cx] };
    let horiz = Affine { m: [[0.0, -2.0 * w / ht], [0.0, 0.0]], c: [2.0 * w / ht * cy, 0.0] };
    let c = [cx, cy];
    [
        ("right", [[x1, y0], [x1, y1], c], vert),
        ("top", [[x1, y1], [x0, y1], c], horiz),
        ("left", [[x0, y1], [x0, y0], c], vert),
        ("bottom", [[x0, y0], [x1, y0], c], horiz),
    ]
    .into_iter()
    .map(|(side, v, velocity)| Piece { label: format!("{label}.{side}"), region: Polygon { vertices: v.to_vec() }, velocity })
    .collect()
}

/// The four-phase field exchanging `κ_1` and `κ_m` and fixing the cubes between them.
///
/// 1. The frame shear restricted to the loops meeting `κ_1`, which turns that
///    ring by `π` and point-reflects it.
/// 2. Rotations by `π` of `κ_1`, `κ_m` and the two thin strips along the
///    array, which undo the reflection.
/// 3. Rotations by `π` of each intermediate cube.
/// 4. Rotations by `π` of the bottom strip, top strip and middle of each
///    intermediate cube, which put their strips back in place.
///
/// Each phase lasts `1/4` at speed 8, i.e. two units of its own time.
pub fn build_swap_field(params: FrameParams) -> Result<PiecewiseField> {
    if params.m < 2 {
        return Err(Error::Precondition("array length < 2".into()));
    }
    let p = &params;
    let (h, l) = (p.h, p.length());
    let strip = p.a * h;

    let v1 = shear_pieces(p, strip);
    let mut v2 = rotation_pieces("k1", 0.0, 0.0, h, h);
    v2.extend(rotation_pieces("kM", l - h, 0.0, l, h));
    v2.extend(rotation_pieces("A'", h, 0.0, l - h, strip));
    v2.extend(rotation_pieces("C'", h, h - strip, l - h, h));
    let mut v3 = Vec::new();
    let mut v4 = Vec::new();
    for j in 2..p.m {
        let x0 = (j - 1) as f64 * h;
        v3.extend(rotation_pieces(&format!("k{j}"), x0, 0.0, x0 + h, h));
        v4.extend(rotation_pieces(&format!("k{j}A"), x0, 0.0, x0 + h, strip));
        v4.extend(rotation_pieces(&format!("k{j}C"), x0, h - strip, x0 + h, h));
        v4.extend(rotation_pieces(&format!("k{j}mid"), x0, strip, x0 + h, h - strip));
    }
    let phases = [("v1", v1), ("v2", v2), ("v3", v3), ("v4", v4)]
        .into_iter()
        .enumerate()
        .map(|(k, (name, pieces))| Phase { name, start: k as f64 / 4.0, end: (k + 1) as f64 / 4.0, speed: 8.0, pieces })
        .collect();
    Ok(PiecewiseField { params, phases })
}

/// A single-phase field on `[0, 1)` made of the full frame shear at the params' `ε`.
pub fn shear_field(params: FrameParams) -> PiecewiseField {
    let pieces = shear_pieces(&params, params.eps);
    PiecewiseField { params, phases: vec![Phase { name: "shear", start: 0.0, end: 1.0, speed: 1.0, pieces }] }
}
