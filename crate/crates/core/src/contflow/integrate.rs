use crate::error::{Error, Result};

use super::field::{Phase, PiecewiseField};
use super::geometry::{Affine, Point};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IntegratorStats {
    pub steps: usize,
    pub crossings: usize,
    /// Largest step-doubling estimate of the local error.
    pub max_local_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrace {
    pub initial: Point,
    /// `(t, x(t))` after every accepted step, times strictly increasing.
    pub points: Vec<(f64, Point)>,
    pub terminal: Point,
    pub stats: IntegratorStats,
}

impl FlowTrace {
    /// `t,x,y` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,y\n");
        s.push_str(&format!("0,{},{}\n", self.initial[0], self.initial[1]));
        for (t, p) in &self.points {
            s.push_str(&format!("{t},{},{}\n", p[0], p[1]));
        }
        s
    }
}

fn rk4(v: &Affine, speed: f64, x: Point, dt: f64) -> Point {
    let f = |p: Point| {
        let w = v.eval(p);
        [speed * w[0], speed * w[1]]
    };
    let add = |p: Point, k: Point, s: f64| [p[0] + s * k[0], p[1] + s * k[1]];
    let k1 = f(x);
    let k2 = f(add(x, k1, dt / 2.0));
    let k3 = f(add(x, k2, dt / 2.0));
    let k4 = f(add(x, k3, dt));
    [
        x[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

const CROSSING_TOL: f64 = 1e-12;

struct Run<'a> {
    field: &'a PiecewiseField,
    h: f64,
    record: bool,
    points: Vec<(f64, Point)>,
    stats: IntegratorStats,
    limit: f64,
}

impl Run<'_> {
    fn check_bounds(&self, x: Point) -> Result<()> {
        let p = &self.field.params;
        let (l, side) = (p.length(), p.h);
        let out = (-x[0]).max(x[0] - l).max(-x[1]).max(x[1] - side);
        if out > self.limit || !x[0].is_finite() || !x[1].is_finite() {
            return Err(Error::Numerical(format!("trajectory left the frame at ({}, {})", x[0], x[1])));
        }
        Ok(())
    }

    fn phase(&mut self, ph: &Phase, mut x: Point) -> Result<Point> {
        let side = self.field.params.h;
        let slack = 1e-9 * side;
        let mut t = ph.start;
        let mut cur = ph.locate_nearest(x, slack);
        let mut stalls = 0usize;
        while t < ph.end {
            let dt = self.h.min(ph.end - t);
            let Some(k) = cur else {
                // outside the support the field vanishes
                if self.record {
                    self.points.push((ph.end, x));
                }
                return Ok(x);
            };
            let piece = &ph.pieces[k];
            let y = rk4(&piece.velocity, ph.speed, x, dt);
            let step = if piece.region.depth(y) >= -slack {
                if self.record {
                    let half = rk4(&piece.velocity, ph.speed, rk4(&piece.velocity, ph.speed, x, dt / 2.0), dt / 2.0);
                    let err = ((half[0] - y[0]).hypot(half[1] - y[1])) / 15.0;
                    self.stats.max_local_error = self.stats.max_local_error.max(err);
                }
                x = y;
                stalls = 0;
                dt
            } else {
                let (mut lo, mut hi) = (0.0, dt);
                while hi - lo > CROSSING_TOL {
                    let mid = 0.5 * (lo + hi);
                    if piece.region.depth(rk4(&piece.velocity, ph.speed, x, mid)) >= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                x = rk4(&piece.velocity, ph.speed, x, hi);
                cur = ph.locate_nearest(x, slack);
                self.stats.crossings += 1;
                stalls = if hi < 1e3 * CROSSING_TOL { stalls + 1 } else { 0 };
                if stalls > 1000 {
                    return Err(Error::Numerical(format!("integration stalled at ({}, {})", x[0], x[1])));
                }
                hi
            };
            t = if ph.end - t - step < 1e-15 { ph.end } else { t + step };
            self.stats.steps += 1;
            self.check_bounds(x)?;
            if self.record {
                self.points.push((t, x));
            }
        }
        Ok(x)
    }
}

fn run(field: &PiecewiseField, x0: Point, h: f64, record: bool) -> Result<(Point, Vec<(f64, Point)>, IntegratorStats)> {
    if !(h > 0.0) {
        return Err(Error::Precondition(format!("step size {h} must be positive")));
    }
    let limit = 10.0 * h * field.sup_norm() + 1e-12;
    let mut r = Run { field, h, record, points: Vec::new(), stats: IntegratorStats::default(), limit };
    let mut x = x0;
    for ph in &field.phases {
        x = r.phase(ph, x)?;
    }
    Ok((x, r.points, r.stats))
}

/// Integrates `ẋ = v(t, x)` over `[0, 1]` with fixed-step RK4.
///
/// A step that leaves the current region is shortened by bisection to the
/// crossing time and the integration resumes with the next region's field.
pub fn integrate_time1_map(field: &PiecewiseField, x0: Point, h: f64) -> Result<FlowTrace> {
    let (terminal, mut points, stats) = run(field, x0, h, true)?;
    points.dedup_by(|a, b| a.0 <= b.0);
    Ok(FlowTrace { initial: x0, points, terminal, stats })
}

/// The time-1 image of `x0` without recording the trajectory.
pub fn time1_image(field: &PiecewiseField, x0: Point, h: f64) -> Result<Point> {
    run(field, x0, h, false).map(|r| r.0)
}
