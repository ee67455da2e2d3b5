use std::collections::HashMap;

use approx::assert_abs_diff_eq;
use cubeflow::oracle::{equivalence_report, exact_distance, CayleyGraph, Limits, Mode};
use cubeflow::{Permutation, Tiling};

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

/// Floyd–Warshall over the 24 states of the 2×2 tiling with the six S generators
/// written out by hand.
fn floyd_2x2() -> HashMap<(Vec<usize>, Vec<usize>), f64> {
    let u = 0.25;
    let gens: [(&[(usize, usize)], f64); 6] = [
        (&[(0, 1)], u),
        (&[(2, 3)], u),
        (&[(0, 2)], u),
        (&[(1, 3)], u),
        (&[(0, 1), (2, 3)], u * 2f64.sqrt()),
        (&[(0, 2), (1, 3)], u * 2f64.sqrt()),
    ];
    let states = all_perms(4);
    let ix: HashMap<&Vec<usize>, usize> = states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let n = states.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, s) in states.iter().enumerate() {
        d[i][i] = 0.0;
        for (pairs, w) in gens {
            // swap the tokens at the two positions: relabel images
            let t: Vec<usize> = s
                .iter()
                .map(|&x| pairs.iter().fold(x, |x, &(a, b)| if x == a { b } else if x == b { a } else { x }))
                .collect();
            let j = ix[&t];
            d[i][j] = d[i][j].min(w);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let mut out = HashMap::new();
    for i in 0..n {
        for j in 0..n {
            out.insert((states[i].clone(), states[j].clone()), d[i][j]);
        }
    }
    out
}

#[test]
fn trivial_distances() {
    let t = Tiling::new(2, 2).unwrap();
    let p = Permutation::from_table(t, vec![1, 3, 0, 2]).unwrap();
    assert_eq!(exact_distance(&p, &p, Mode::S, Limits::default()).unwrap().distance, 0.0);
    let swap = Permutation::transposition(t, 0, 1);
    let r = exact_distance(&swap, &Permutation::identity(t), Mode::S, Limits::default()).unwrap();
    assert_abs_diff_eq!(r.distance, 0.25, epsilon = 1e-15);
    assert_eq!(r.witness.duration(), 1);
}

#[test]
fn s_distances_match_floyd_warshall() {
    let t = Tiling::new(2, 2).unwrap();
    let fw = floyd_2x2();
    let g = CayleyGraph::new(t, Mode::S, Limits::default()).unwrap();
    assert_eq!(g.generator_count(), 6);
    let rot = vec![1, 3, 0, 2];
    let id = vec![0, 1, 2, 3];
    let p = Permutation::from_table(t, rot.clone()).unwrap();
    let r = g.distance(&p, &Permutation::identity(t)).unwrap();
    assert_abs_diff_eq!(r.distance, fw[&(rot, id)], epsilon = 1e-15);
    for a in all_perms(4) {
        for b in all_perms(4) {
            let (p, q) = (Permutation::from_table(t, a.clone()).unwrap(), Permutation::from_table(t, b.clone()).unwrap());
            let r = g.distance(&p, &q).unwrap();
            assert_abs_diff_eq!(r.distance, fw[&(a.clone(), b.clone())], epsilon = 1e-14);
            // the witness carries p to q at exactly the reported cost
            let (end, cost) = cubeflow::movements::flow_apply_and_cost(&p, &r.witness).unwrap();
            assert_eq!(end, q);
            assert_eq!(cost, r.distance);
        }
    }
}

#[test]
fn distances_are_symmetric_and_dominate_a_scaled_chord() {
    for t in [Tiling::new(2, 2).unwrap(), Tiling::new(1, 4).unwrap()] {
        for mode in [Mode::S, Mode::E, Mode::Mixed] {
            let g = CayleyGraph::new(t, mode, Limits::default()).unwrap();
            for a in all_perms(4) {
                let p = Permutation::from_table(t, a).unwrap();
                let id = Permutation::identity(t);
                let d = g.distance(&p, &id).unwrap().distance;
                assert_abs_diff_eq!(d, g.distance(&id, &p).unwrap().distance, epsilon = 1e-14);
                // one adjacent swap attains l2 = sqrt(2)·dist, so only the relaxed chord holds
                assert!(p.l2_to_identity() <= 2f64.sqrt() * d + 1e-14);
            }
        }
    }
}

#[test]
fn equivalence_reports() {
    let t = Tiling::new(2, 2).unwrap();
    let id_only = [Permutation::identity(t)];
    let rep = equivalence_report(&t, Some(&id_only), Limits::default()).unwrap();
    assert_eq!(rep.rows.len(), 1);
    assert!(rep.rows[0].ratio.is_none());
    for t in [Tiling::new(2, 2).unwrap(), Tiling::new(1, 4).unwrap()] {
        let rep = equivalence_report(&t, None, Limits::default()).unwrap();
        assert_eq!(rep.rows.len(), 24);
        assert!(rep.holds);
        assert!(rep.rows.iter().all(|r| r.dist_e <= 2.0 * r.dist_s + 1e-15));
    }
}

#[test]
fn array_limit_shrinks_the_generator_set() {
    let t = Tiling::new(1, 4).unwrap();
    let all = CayleyGraph::new(t, Mode::E, Limits::default()).unwrap().generator_count();
    let short = CayleyGraph::new(t, Mode::E, Limits { max_array: 2, ..Limits::default() }).unwrap().generator_count();
    assert!(short < all);
    // with arrays of length two the E graph is the S graph with doubled weights
    let p = Permutation::from_table(t, vec![3, 2, 1, 0]).unwrap();
    let id = Permutation::identity(t);
    let de = exact_distance(&p, &id, Mode::E, Limits { max_array: 2, ..Limits::default() }).unwrap().distance;
    let ds = exact_distance(&p, &id, Mode::S, Limits::default()).unwrap().distance;
    assert_abs_diff_eq!(de, 2.0 * ds, epsilon = 1e-14);
}
