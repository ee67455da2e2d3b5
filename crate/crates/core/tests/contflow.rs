use approx::assert_abs_diff_eq;
use cubeflow::contflow::{
    build_swap_field, bump_battery, check_points, discrete_swap_l2, integrate_time1_map, l1l2_norm, rotation_pieces,
    shear_field, time1_image, verify_swap_map, weak_divergence, weak_divergence_residual, Bump, FrameParams, Phase,
    PiecewiseField, Polygon,
};
use proptest::prelude::*;

fn frame(n: usize, m: usize) -> FrameParams {
    FrameParams::new(n, m).unwrap()
}

/// `∫|v|²` of the rotation field of a `w × ht` rectangle: `w·ht·(w² + ht²)/4`.
fn rotation_energy(w: f64, ht: f64) -> f64 {
    w * ht * (w * w + ht * ht) / 4.0
}

/// `‖v‖_{L¹L²}` of the four-phase field from closed forms: each phase lasts
/// `1/4` at speed 8, the frame shear restricted to depth `h/M` has energy
/// `(M³ + M)(h⁴ − (h − 2h/M)⁴)/4`, and rotation pieces contribute [`rotation_energy`].
fn norm_oracle(p: &FrameParams) -> f64 {
    let (h, m) = (p.h, p.m as f64);
    let s = h / m;
    let l = m * h;
    let e1 = (m.powi(3) + m) * (h.powi(4) - (h - 2.0 * s).powi(4)) / 4.0;
    let e2 = 2.0 * rotation_energy(h, h) + 2.0 * rotation_energy(l - 2.0 * h, s);
    let inner = m - 2.0;
    let e3 = inner * rotation_energy(h, h);
    let e4 = inner * (2.0 * rotation_energy(h, s) + rotation_energy(h, h - 2.0 * s));
    [e1, e2, e3, e4].iter().map(|e| 2.0 * e.sqrt()).sum()
}

#[test]
fn parameter_examples() {
    let p = frame(4, 3);
    assert_abs_diff_eq!(p.eps, 0.125, epsilon = 1e-15);
    assert_abs_diff_eq!(p.a, 1.0 / 3.0, epsilon = 1e-15);
    assert_abs_diff_eq!(p.b, 0.25, epsilon = 1e-15);
    assert_abs_diff_eq!(p.c, 0.0, epsilon = 1e-15);
    let q = frame(8, 5);
    assert_abs_diff_eq!(q.eps, 1.0 / 32.0, epsilon = 1e-15);
    assert_abs_diff_eq!(q.a, 0.2, epsilon = 1e-15);
    assert_abs_diff_eq!(q.b, 0.125, epsilon = 1e-15);
    assert_abs_diff_eq!(q.c, 0.0, epsilon = 1e-15);
    assert!(FrameParams::new(4, 1).is_err());
}

#[test]
fn two_cube_frame_has_empty_correction_phases() {
    let f = build_swap_field(frame(4, 2)).unwrap();
    assert_eq!(f.phases.len(), 4);
    assert!(f.phases[2].pieces.is_empty());
    assert!(f.phases[3].pieces.is_empty());
    assert!(!f.phases[0].pieces.is_empty());
}

fn overlap_area(a: &Polygon, b: &Polygon) -> f64 {
    Polygon::clipped(a, &b.edges()).area()
}

fn check_structure(f: &PiecewiseField) {
    let h = f.params.h;
    assert_eq!(f.phases.first().unwrap().start, 0.0);
    assert_eq!(f.phases.last().unwrap().end, 1.0);
    for w in f.phases.windows(2) {
        assert_eq!(w[0].end, w[1].start);
    }
    for ph in &f.phases {
        for (i, p) in ph.pieces.iter().enumerate() {
            assert_eq!(p.velocity.divergence(), 0.0, "{}", p.label);
            assert!(p.region.area() > 0.0);
            for q in &ph.pieces[i + 1..] {
                assert!(overlap_area(&p.region, &q.region) <= 1e-12 * h * h, "{} / {} overlap", p.label, q.label);
            }
        }
    }
}

#[test]
fn regions_are_disjoint_and_pieces_divergence_free() {
    for n in [4, 8, 16] {
        for m in 2..=8 {
            check_structure(&build_swap_field(frame(n, m)).unwrap());
        }
    }
}

#[test]
fn evaluation_examples() {
    let p = frame(4, 3);
    let f = build_swap_field(p).unwrap();
    let h = p.h;
    // untouched middle of the intermediate cube during the shear
    assert_eq!(f.evaluate(0.1, [1.5 * h, 0.5 * h]).unwrap().v, [0.0, 0.0]);
    // inside B the shear reads (0, 2ax + h − 2b)
    let x = [p.length() - 0.2 * h, 0.5 * h];
    let v = f.phases[0].value(x, h);
    assert!(!v.boundary);
    assert_abs_diff_eq!(v.v[0], 0.0);
    assert_abs_diff_eq!(v.v[1], 2.0 * p.a * x[0] + h - 2.0 * p.b, epsilon = 1e-15);
    assert_abs_diff_eq!(f.evaluate(0.1, x).unwrap().v[1], 8.0 * v.v[1], epsilon = 1e-14);
    // rotation centers are stagnation points
    let c = f.evaluate(0.3, [0.5 * h, 0.5 * h]).unwrap();
    assert!(c.v[0].abs() < 1e-15 && c.v[1].abs() < 1e-15);
    assert!(f.evaluate(1.0, x).is_err());
    assert!(f.evaluate(-0.1, x).is_err());
}

#[test]
fn time1_map_examples() {
    let p = frame(4, 3);
    let f = build_swap_field(p).unwrap();
    let h = p.h;
    let shift = (p.m as f64 - 1.0) * h;
    let mid = [1.5 * h + 0.013, 0.5 * h - 0.007];
    let tr = integrate_time1_map(&f, mid, 1e-4).unwrap();
    assert!((tr.terminal[0] - mid[0]).hypot(tr.terminal[1] - mid[1]) < 1e-6);
    assert!(tr.points.windows(2).all(|w| w[0].0 < w[1].0));
    assert!(tr.to_csv().starts_with("t,x,y\n0,"));

    let c1 = [0.5 * h + 1e-3, 0.5 * h + 2e-3];
    let y = time1_image(&f, c1, 1e-4).unwrap();
    assert_abs_diff_eq!(y[0], c1[0] + shift, epsilon = 1e-3 * h);
    assert_abs_diff_eq!(y[1], c1[1], epsilon = 1e-3 * h);
    let cm = [p.length() - 0.5 * h - 1e-3, 0.5 * h + 3e-3];
    let y = time1_image(&f, cm, 1e-4).unwrap();
    assert_abs_diff_eq!(y[0], cm[0] - shift, epsilon = 1e-3 * h);
    assert_abs_diff_eq!(y[1], cm[1], epsilon = 1e-3 * h);
    assert!(time1_image(&f, c1, 0.0).is_err());
}

#[test]
fn swap_map_reports() {
    let rep = verify_swap_map(frame(4, 3), 200, 1e-4, 17).unwrap();
    assert!(rep.pass(), "{rep:?}");
    assert_eq!(rep.samples + rep.excluded, 600);
    let rep2 = verify_swap_map(frame(4, 2), 50, 1e-4, 3).unwrap();
    assert!(rep2.pass(), "{rep2:?}");

    let p = frame(4, 3);
    let f = build_swap_field(p).unwrap();
    let h = p.h;
    // a cube edge and a shear diagonal are boundaries of some phase
    let pts = [[h, 0.5 * h], [0.1 * p.h, 0.1 * p.h * p.a], [1.5 * h + 0.01, 0.5 * h]];
    let r = check_points(&f, &pts, 1e-4).unwrap();
    assert_eq!((r.samples, r.excluded), (1, 2));
}

#[test]
fn norm_matches_closed_form_and_bound() {
    let p = frame(4, 3);
    let f = build_swap_field(p).unwrap();
    let v = l1l2_norm(&f, 64).unwrap();
    assert!(v <= 3.75);
    // thin strips do not sit on the quadrature grid, hence the loose match
    assert_abs_diff_eq!(v, norm_oracle(&p), epsilon = 2e-2 * v);
    let fine = l1l2_norm(&f, 512).unwrap();
    assert_abs_diff_eq!(fine, norm_oracle(&p), epsilon = 1e-3 * fine);
    for (n, m) in [(8, 5), (4, 2), (16, 8)] {
        let p = frame(n, m);
        let v = l1l2_norm(&build_swap_field(p).unwrap(), 64).unwrap();
        assert_abs_diff_eq!(v, norm_oracle(&p), epsilon = 2e-2 * v);
        assert!(v <= 20.0 * m as f64 / (n * n) as f64);
        let r = v / discrete_swap_l2(&p);
        assert!((0.25..=4.0).contains(&r), "{r}");
    }
    assert!(l1l2_norm(&f, 32).is_err());
}

#[test]
fn zero_field_has_zero_norm() {
    let p = frame(4, 3);
    let f = PiecewiseField { params: p, phases: vec![Phase { name: "rest", start: 0.0, end: 1.0, speed: 1.0, pieces: vec![] }] };
    assert_eq!(l1l2_norm(&f, 64).unwrap(), 0.0);
}

#[test]
fn rotation_energy_by_quadrature() {
    let p = frame(4, 3);
    let (x0, y0, x1, y1) = (0.1, 0.05, 0.6, 0.2);
    let f = PiecewiseField {
        params: p,
        phases: vec![Phase { name: "rot", start: 0.0, end: 1.0, speed: 1.0, pieces: rotation_pieces("r", x0, y0, x1, y1) }],
    };
    let v = l1l2_norm(&f, 256).unwrap();
    assert_abs_diff_eq!(v, rotation_energy(x1 - x0, y1 - y0).sqrt(), epsilon = 5e-3 * v);
    assert!(rotation_pieces("flat", 0.0, 0.0, 0.0, 1.0).is_empty());
}

#[test]
fn norm_scales_like_n_to_the_minus_two() {
    for m in [3, 5] {
        let a = l1l2_norm(&build_swap_field(frame(4, m)).unwrap(), 64).unwrap();
        let b = l1l2_norm(&build_swap_field(frame(8, m)).unwrap(), 64).unwrap();
        assert_abs_diff_eq!(b / a, 0.25, epsilon = 0.05 * 0.25);
    }
}

#[test]
fn bump_inside_one_piece_sees_no_divergence() {
    let p = frame(4, 3);
    let f = build_swap_field(p).unwrap();
    let h = p.h;
    // incircle of the right triangle of κ₂'s rotation
    let r = h / (2.0 * (1.0 + 2f64.sqrt()));
    let bump = Bump { center: [2.0 * h - r, 0.5 * h], radius: 0.9 * r };
    assert!(weak_divergence(&f.phases[2], &bump).unwrap() <= 1e-8);
}

#[test]
fn frame_shear_corner_certifies_epsilon() {
    let p = frame(4, 3);
    let d = p.eps / p.a;
    let corner = Bump { center: [p.length() - d / 2.0, p.eps / 2.0], radius: 0.06 };
    let good = weak_divergence(&shear_field(p).phases[0], &corner).unwrap();
    assert!(good <= 1e-6, "{good}");
    let q = FrameParams::with_epsilon(4, 3, 1.5 * p.eps).unwrap();
    let corner = Bump { center: [q.length() - q.eps / q.a / 2.0, q.eps / 2.0], radius: 0.06 };
    let bad = weak_divergence(&shear_field(q).phases[0], &corner).unwrap();
    assert!(bad > 1e-3, "{bad}");
}

#[test]
fn battery_residual_small_field() {
    let p = frame(4, 3);
    let good = weak_divergence_residual(&build_swap_field(p).unwrap(), &bump_battery(&p)).unwrap();
    assert!(good <= 1e-6, "{good}");
    let q = FrameParams::with_epsilon(4, 3, 1.5 * p.eps).unwrap();
    let bad = weak_divergence_residual(&build_swap_field(q).unwrap(), &bump_battery(&q)).unwrap();
    assert!(bad > 1e-3, "{bad}");
}

#[test]
fn bump_gradient_matches_finite_differences() {
    let b = Bump { center: [0.3, 0.2], radius: 0.1 };
    let x = [0.33, 0.17];
    let g = b.gradient(x);
    let e = 1e-7;
    let fd = [(b.value([x[0] + e, x[1]]) - b.value([x[0] - e, x[1]])) / (2.0 * e), (b.value([x[0], x[1] + e]) - b.value([x[0], x[1] - e])) / (2.0 * e)];
    assert_abs_diff_eq!(g[0], fd[0], epsilon = 1e-6);
    assert_abs_diff_eq!(g[1], fd[1], epsilon = 1e-6);
    assert_eq!(b.value([0.5, 0.5]), 0.0);
    assert_abs_diff_eq!(b.value(b.center), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn intermediate_cubes_are_fixed(n in prop::sample::select(vec![4usize, 8, 16]), m in 3usize..9, u in 0.02f64..0.98, v in 0.02f64..0.98, j in 0usize..6) {
        let p = frame(n, m);
        let f = build_swap_field(p).unwrap();
        let k = 1 + j % (m - 2);
        let x = [(k as f64 + u) * p.h, v * p.h];
        prop_assume!(!f.phases.iter().any(|ph| ph.value(x, p.h).boundary));
        let y = time1_image(&f, x, 1e-3).unwrap();
        prop_assert!((y[0] - x[0]).hypot(y[1] - x[1]) <= 1e-3 * p.h);
    }

    #[test]
    fn end_cubes_trade_places(n in prop::sample::select(vec![4usize, 8, 16]), m in 2usize..9, u in 0.02f64..0.98, v in 0.02f64..0.98, last in any::<bool>()) {
        let p = frame(n, m);
        let f = build_swap_field(p).unwrap();
        let shift = (m as f64 - 1.0) * p.h;
        let (x, want) = if last {
            ([shift + u * p.h, v * p.h], [u * p.h, v * p.h])
        } else {
            ([u * p.h, v * p.h], [shift + u * p.h, v * p.h])
        };
        prop_assume!(!f.phases.iter().any(|ph| ph.value(x, p.h).boundary));
        let y = time1_image(&f, x, 1e-3).unwrap();
        prop_assert!((y[0] - want[0]).hypot(y[1] - want[1]) <= 1e-3 * p.h);
    }
}
