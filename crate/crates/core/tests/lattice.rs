use approx::assert_abs_diff_eq;
use cubeflow::lattice::{are_adjacent, compose, cube_center, invert, l2_distance, region_cubes};
use cubeflow::{CubeId, Error, Permutation, RegionKind, RegionSpec, Tiling};
use proptest::prelude::*;

fn c(v: &[usize]) -> CubeId {
    CubeId::new(v.to_vec())
}

/// Direct summation over cube coordinates, independent of the index arithmetic.
fn l2_oracle(t: &Tiling, p: &[usize], q: &[usize]) -> f64 {
    let n = t.n() as f64;
    let mut s = 0.0;
    for k in 0..t.len() {
        let (a, b) = (t.coords(p[k]), t.coords(q[k]));
        s += a.iter().zip(&b).map(|(&x, &y)| ((x as f64 - y as f64) / n).powi(2)).sum::<f64>();
    }
    (s / n.powi(t.nu() as i32)).sqrt()
}

fn all_perms(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_perms(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn centers() {
    let t = Tiling::new(2, 2).unwrap();
    assert_eq!(cube_center(&t, &c(&[0, 0])).unwrap(), vec![0.25, 0.25]);
    assert_eq!(cube_center(&t, &c(&[1, 1])).unwrap(), vec![0.75, 0.75]);
    let t3 = Tiling::new(3, 4).unwrap();
    assert_eq!(cube_center(&t3, &c(&[3, 0, 2])).unwrap(), vec![0.875, 0.125, 0.625]);
    assert!(matches!(cube_center(&t, &c(&[2, 0])), Err(Error::InvalidCube { .. })));
    assert!(matches!(cube_center(&t, &c(&[0])), Err(Error::InvalidCube { .. })));
}

#[test]
fn adjacency() {
    let t = Tiling::new(2, 2).unwrap();
    assert!(are_adjacent(&t, &c(&[0, 0]), &c(&[0, 1])).unwrap());
    assert!(!are_adjacent(&t, &c(&[0, 0]), &c(&[1, 1])).unwrap());
    assert!(!are_adjacent(&t, &c(&[0, 0]), &c(&[0, 0])).unwrap());
}

#[test]
fn tiling_rejects_degenerate_and_overflowing_sizes() {
    assert!(Tiling::new(0, 4).is_err());
    assert!(Tiling::new(2, 0).is_err());
    assert!(Tiling::new(8, 1 << 10).is_err());
    assert_eq!(Tiling::new(3, 5).unwrap().len(), 125);
}

#[test]
fn l2_examples() {
    let t = Tiling::new(2, 2).unwrap();
    let id = Permutation::identity(t);
    assert_eq!(l2_distance(&id, &id).unwrap(), 0.0);
    let swap = Permutation::transposition(t, 0, 1);
    assert_abs_diff_eq!(l2_distance(&swap, &id).unwrap(), 0.125f64.sqrt(), epsilon = 1e-15);

    let t4 = Tiling::new(2, 4).unwrap();
    let ends = Permutation::from_pairs(t4, &[(c(&[0, 0]), c(&[0, 3])), (c(&[0, 3]), c(&[0, 0]))]).unwrap();
    assert_abs_diff_eq!(ends.l2_to_identity(), 0.265165, epsilon = 1e-6);
    assert_abs_diff_eq!(ends.l2_to_identity(), l2_oracle(&t4, ends.table(), Permutation::identity(t4).table()), epsilon = 1e-15);
}

#[test]
fn adjacent_swap_family_scales_in_closed_form() {
    for nu in 1..=3 {
        for n in [2usize, 4, 8] {
            let t = Tiling::new(nu, n).unwrap();
            let p = Permutation::transposition(t, 0, 1);
            let expected = (2.0 * (n as f64).powf(-(nu as f64) - 2.0)).sqrt();
            assert_abs_diff_eq!(p.l2_to_identity(), expected, epsilon = 1e-15);
        }
    }
}

#[test]
fn compose_and_invert() {
    let t = Tiling::new(2, 4).unwrap();
    let id = Permutation::identity(t);
    let p = Permutation::from_table(t, (0..16).rev().collect()).unwrap();
    assert_eq!(compose(&id, &p).unwrap(), p);
    assert_eq!(compose(&p, &invert(&p)).unwrap(), id);
    let a = Permutation::transposition(t, 0, 1);
    let b = Permutation::transposition(t, 5, 9);
    assert_eq!(compose(&a, &b).unwrap().moved(), 4);
}

#[test]
fn regions() {
    let t = Tiling::new(2, 4).unwrap();
    assert_eq!(region_cubes(&t, &RegionSpec::single(vec![2, 3])).unwrap(), vec![c(&[2, 3])]);
    let a = RegionSpec::new(vec![0, 0], vec![3, 0]).unwrap();
    assert_eq!(a.kind(), RegionKind::Array { axis: 0 });

    assert_eq!(region_cubes(&t, &a).unwrap(), vec![c(&[0, 0]), c(&[1, 0]), c(&[2, 0]), c(&[3, 0])]);
    let r = RegionSpec::new(vec![1, 1], vec![2, 2]).unwrap();
    assert_eq!(r.kind(), RegionKind::Rectangle);
    assert_eq!(region_cubes(&t, &r).unwrap(), vec![c(&[1, 1]), c(&[1, 2]), c(&[2, 1]), c(&[2, 2])]);
    assert!(RegionSpec::new(vec![2, 0], vec![1, 0]).is_err());
    assert!(region_cubes(&t, &RegionSpec::new(vec![0, 0], vec![4, 0]).unwrap()).is_err());
}

#[test]
fn text_roundtrip() {
    let t = Tiling::new(3, 3).unwrap();
    let p = Permutation::from_table(t, (0..27).map(|i| (i * 5) % 27).collect()).unwrap();
    assert_eq!(Permutation::from_text(&p.to_text()).unwrap(), p);
    assert!(Permutation::from_text("nu=2 N=2\n0,0 -> 0,1\n").is_err());
}

#[test]
fn l2_is_a_left_invariant_metric_on_two_by_two() {
    let t = Tiling::new(2, 2).unwrap();
    let perms: Vec<Permutation> = all_perms(4).into_iter().map(|v| Permutation::from_table(t, v).unwrap()).collect();
    let id = Permutation::identity(t);
    for p in &perms {
        for q in &perms {
            let d = l2_distance(p, q).unwrap();
            assert_abs_diff_eq!(d, l2_distance(q, p).unwrap(), epsilon = 1e-15);
            assert_abs_diff_eq!(d, l2_oracle(&t, p.table(), q.table()), epsilon = 1e-15);
            assert_abs_diff_eq!(d, l2_distance(&compose(p, &invert(q)).unwrap(), &id).unwrap(), epsilon = 1e-15);
            for r in &perms {
                assert!(d <= l2_distance(p, r).unwrap() + l2_distance(r, q).unwrap() + 1e-15);
            }
        }
    }
}

proptest! {
    #[test]
    fn table_validation_matches_duplicate_check(table in prop::collection::vec(0usize..9, 9)) {
        let t = Tiling::new(2, 3).unwrap();
        let mut sorted = table.clone();
        sorted.sort_unstable();
        let bijective = sorted == (0..9).collect::<Vec<_>>();
        prop_assert_eq!(Permutation::from_table(t, table).is_ok(), bijective);
    }

    #[test]
    fn index_and_coords_are_inverse(nu in 1usize..4, n in 1usize..7, seed in any::<u32>()) {
        let t = Tiling::new(nu, n).unwrap();
        let idx = seed as usize % t.len();
        let k = t.cube(idx);
        prop_assert_eq!(t.index(&k).unwrap(), idx);
        prop_assert!(k.coords().iter().all(|&x| x < n));
    }

    #[test]
    fn l2_matches_direct_summation(perm in Just((0..16).collect::<Vec<usize>>()).prop_shuffle()) {
        let t = Tiling::new(2, 4).unwrap();
        let p = Permutation::from_table(t, perm).unwrap();
        let id: Vec<usize> = (0..16).collect();
        prop_assert!((p.l2_to_identity() - l2_oracle(&t, p.table(), &id)).abs() < 1e-15);
        prop_assert!((p.inverse().l2_to_identity() - p.l2_to_identity()).abs() < 1e-15);
    }
}
