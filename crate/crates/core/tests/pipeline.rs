use approx::assert_abs_diff_eq;
use cubeflow::movements::unit_cost;
use cubeflow::oracle::{exact_distance, Limits, Mode};
use cubeflow::pipeline::{
    choose_epsilon, coarse_permutation, compute_orbits, connect_to_identity, connect_with, exponent_experiment,
    is_block_constant, loglog_slope, random_near_identity, step1_localize, step2_blockify, step3_finish, write_csv,
    ExperimentRow, PipelineConfig,
};
use cubeflow::{Permutation, Tiling};
use proptest::prelude::*;

fn idx(t: &Tiling, c: &[usize]) -> usize {
    t.index_of(c)
}

#[test]
fn epsilon_choices() {
    assert_abs_diff_eq!(choose_epsilon(2), 2.0 / 7.0);
    assert_abs_diff_eq!(choose_epsilon(3), 0.25);
    assert_abs_diff_eq!(choose_epsilon(5), 1.0 / 6.0);
}

#[test]
fn config_rejects_bad_parameters() {
    let t = Tiling::new(2, 64).unwrap();
    assert!(PipelineConfig::new(&t, 0.05, Some(0.6)).is_err());
    assert!(PipelineConfig::new(&t, -1.0, None).is_err());
    assert!(PipelineConfig::new(&t, 0.05, None).unwrap().with_coarse_side(3).is_err());
    let cfg = PipelineConfig::new(&t, 0.05, None).unwrap();
    assert_eq!(t.n() % cfg.coarse_side, 0);
}

#[test]
fn identity_gives_empty_steps() {
    let t = Tiling::new(2, 16).unwrap();
    let id = Permutation::identity(t);
    let cfg = PipelineConfig::new(&t, 0.05, None).unwrap();
    for r in [step1_localize(&id, &cfg).unwrap(), step2_blockify(&id, &cfg).unwrap(), step3_finish(&id, &cfg).unwrap()] {
        assert!(r.flow.is_empty());
        assert!(r.result.is_identity());
    }
    let c = connect_to_identity(&id).unwrap();
    assert!(c.flow.is_empty());
    assert_eq!(c.cost, 0.0);
    let rep = compute_orbits(&id, &cfg, 1).unwrap();
    assert!(rep.records.is_empty());
    assert!(rep.colors.iter().all(|&x| x == 0));
}

#[test]
fn step1_leaves_short_moves_alone() {
    let t = Tiling::new(2, 32).unwrap();
    let p = Permutation::transposition(t, 0, 1);
    let cfg = PipelineConfig::for_permutation(&p, None).unwrap();
    let r = step1_localize(&p, &cfg).unwrap();
    assert!(r.flow.is_empty());
    assert_eq!(r.result, p);
}

#[test]
fn step1_restores_a_far_transposition() {
    let t = Tiling::new(2, 64).unwrap();
    let (a, b) = (idx(&t, &[0, 0]), idx(&t, &[32, 0]));
    let p = Permutation::transposition(t, a, b);
    assert_abs_diff_eq!(p.displacement(a), 0.5);
    let cfg = PipelineConfig::for_permutation(&p, None).unwrap().with_coarse_side(8).unwrap();
    let r = step1_localize(&p, &cfg).unwrap();
    assert_eq!((r.result.get(a), r.result.get(b)), (a, b));
    let count = r.check("colored_count").unwrap();
    assert_eq!(count.value, 2.0);
    assert!(count.pass());
    assert!(r.all_pass(), "{:?} cost {} bound {}", r.checks, r.cost, r.bound);
}

#[test]
fn orbit_of_a_swap_across_a_slab_boundary() {
    let t = Tiling::new(2, 16).unwrap();
    let (a, b) = (idx(&t, &[3, 7]), idx(&t, &[3, 8]));
    let p = Permutation::transposition(t, a, b);
    let cfg = PipelineConfig::for_permutation(&p, None).unwrap().with_coarse_side(2).unwrap();
    let rep = compute_orbits(&p, &cfg, 1).unwrap();
    assert_eq!((rep.colors[a], rep.colors[b]), (2, 1));
    assert_eq!(rep.records.len(), 1);
    assert_eq!(rep.records[0].n_bar, 1);
    assert_eq!(rep.records[0].partner(), b);
    assert!(rep.balanced);
    // the other axis sees nothing
    assert!(compute_orbits(&p, &cfg, 0).unwrap().records.is_empty());
}

#[test]
fn orbits_of_random_instances_balance_and_end_black() {
    let t = Tiling::new(2, 64).unwrap();
    for seed in 0..10 {
        let p = random_near_identity(&t, 0.05, seed);
        let cfg = PipelineConfig::for_permutation(&p, None).unwrap().with_coarse_side(8).unwrap();
        for axis in 0..2 {
            let rep = compute_orbits(&p, &cfg, axis).unwrap();
            assert!(rep.balanced);
            let reds = rep.colors.iter().filter(|&&c| c == 2).count();
            assert_eq!(rep.records.len(), reds);
            let mut partners: Vec<usize> = rep.records.iter().map(|r| r.partner()).collect();
            partners.sort_unstable();
            partners.dedup();
            assert_eq!(partners.len(), reds, "partners are distinct");
            for r in &rep.records {
                assert_eq!(rep.colors[r.partner()], 1);
                assert!(r.orbit[..r.n_bar - 1].iter().all(|&x| rep.colors[x] != 1));
                let mut seen = r.orbit.clone();
                seen.sort_unstable();
                seen.dedup();
                assert_eq!(seen.len(), r.n_bar);
            }
        }
    }
}

#[test]
fn step2_blockifies_with_eight_cells() {
    let t = Tiling::new(2, 64).unwrap();
    for seed in 0..5 {
        let p = random_near_identity(&t, 0.05, 100 + seed);
        let cfg = PipelineConfig::for_permutation(&p, None).unwrap().with_coarse_side(8).unwrap();
        let r1 = step1_localize(&p, &cfg).unwrap();
        let r2 = step2_blockify(&r1.result, &cfg).unwrap();
        assert!(is_block_constant(&r2.result, 8));
        assert!(r2.all_pass(), "seed {seed}: {:?} cost {} bound {}", r2.checks, r2.cost, r2.bound);
    }
}

#[test]
fn step2_colored_volume_estimates() {
    let t = Tiling::new(2, 64).unwrap();
    for seed in 0..10 {
        let p = random_near_identity(&t, 0.02 + 0.02 * (seed % 5) as f64, 200 + seed);
        let cfg = PipelineConfig::for_permutation(&p, None).unwrap();
        let r1 = step1_localize(&p, &cfg).unwrap();
        let e = cfg.epsilon;
        let rep = compute_orbits(&r1.result, &cfg, 1).unwrap();
        let colored = rep.colors.iter().filter(|&&c| c != 0).count() as f64;
        assert!(colored <= cfg.delta.powf(1.0 - 1.5 * e) * t.len() as f64, "seed {seed}: {colored}");
        let r2 = step2_blockify(&r1.result, &cfg).unwrap();
        let vol = r2.metric("volume_after_a").unwrap();
        assert!(vol <= cfg.delta.powf(1.0 / 3.0 - 5.0 * e / 6.0), "seed {seed}: {vol}");
    }
}

#[test]
fn step2_skips_block_constant_input() {
    let t = Tiling::new(2, 16).unwrap();
    let p = Permutation::transposition(t, 0, 1);
    let cfg = PipelineConfig::for_permutation(&p, None).unwrap().with_coarse_side(2).unwrap();
    assert!(is_block_constant(&p, 2));
    assert!(step2_blockify(&p, &cfg).unwrap().flow.is_empty());
}

/// Exchanges the contents of two coarse cells by translation.
fn coarse_swap(t: Tiling, s: usize, a: &[usize], b: &[usize]) -> Permutation {
    let w = t.n() / s;
    let mut table: Vec<usize> = (0..t.len()).collect();
    for k in 0..t.len() {
        let c = t.coords(k);
        let cell: Vec<usize> = c.iter().map(|&x| x / w).collect();
        let to = if cell == a { b } else if cell == b { a } else { continue };
        let img: Vec<usize> = c.iter().zip(to).map(|(&x, &q)| q * w + x % w).collect();
        table[k] = t.index_of(&img);
    }
    Permutation::from_table(t, table).unwrap()
}

#[test]
fn step3_translates_a_coarse_swap() {
    let t = Tiling::new(2, 16).unwrap();
    let p = coarse_swap(t, 4, &[1, 2], &[1, 3]);
    let q = coarse_permutation(&p, 4).unwrap();
    assert_eq!(q.moved(), 2);
    let cfg = PipelineConfig::for_permutation(&p, None).unwrap().with_coarse_side(4).unwrap();
    let r = step3_finish(&p, &cfg).unwrap();
    assert!(r.result.is_identity());
    assert_eq!(r.flow.duration(), 2);
    assert!(r.flow.apply(&p).unwrap().is_identity());
}

#[test]
fn step3_routes_within_cells_only() {
    let t = Tiling::new(2, 32).unwrap();
    // a transposition inside each of several cells
    let mut p = Permutation::identity(t);
    for (a, b) in [([0, 0], [1, 1]), ([9, 9], [10, 12]), ([20, 3], [23, 0])] {
        p = Permutation::transposition(t, idx(&t, &a), idx(&t, &b)).compose(&p).unwrap();
    }
    let cfg = PipelineConfig::for_permutation(&p, None).unwrap().with_coarse_side(4).unwrap();
    let r = step3_finish(&p, &cfg).unwrap();
    assert!(r.result.is_identity());
    assert_eq!(r.metric("coarse_cost"), Some(0.0));
    assert!(r.cost <= r.bound);
}

#[test]
fn step3_rejects_non_block_constant_input() {
    let t = Tiling::new(2, 16).unwrap();
    let p = Permutation::transposition(t, idx(&t, &[0, 7]), idx(&t, &[0, 8]));
    let cfg = PipelineConfig::for_permutation(&p, None).unwrap().with_coarse_side(2).unwrap();
    assert!(step3_finish(&p, &cfg).is_err());
}

#[test]
fn single_swap_connects_above_the_oracle_distance() {
    let t = Tiling::new(2, 3).unwrap();
    let p = Permutation::transposition(t, 4, 5);
    let c = connect_to_identity(&p).unwrap();
    assert!(c.flow.apply(&p).unwrap().is_identity());
    let d = exact_distance(&p, &Permutation::identity(t), Mode::S, Limits::default()).unwrap().distance;
    assert_abs_diff_eq!(d, unit_cost(&t), epsilon = 1e-15);
    assert!(c.cost >= d - 1e-15);
    for r in &c.ledger.steps {
        assert!(r.cost <= r.bound);
    }
}

#[test]
fn random_instance_at_n64() {
    let t = Tiling::new(2, 64).unwrap();
    let p = random_near_identity(&t, 0.05, 7);
    let c = connect_to_identity(&p).unwrap();
    assert!(c.flow.apply(&p).unwrap().is_identity());
    let bound: f64 = c.ledger.steps.iter().map(|r| r.bound).sum();
    assert!(c.cost <= bound);
    for r in &c.ledger.steps {
        assert!(r.all_pass(), "{:?}", r.checks);
    }
}

#[test]
fn generator_hits_the_target_band() {
    let t = Tiling::new(2, 32).unwrap();
    for (delta, seed) in [(0.02, 1), (0.05, 2), (0.1, 3)] {
        let p = random_near_identity(&t, delta, seed);
        let l2 = p.l2_to_identity();
        assert!((0.9 * delta..=1.1 * delta).contains(&l2), "{delta} -> {l2}");
        assert_eq!(random_near_identity(&t, delta, seed), p);
    }
    assert!(random_near_identity(&t, 0.0, 1).is_identity());
}

#[test]
fn experiment_rows_and_csv() {
    assert!(exponent_experiment(2, &[16], &[], &[1]).unwrap().is_empty());
    let mut buf = Vec::new();
    write_csv(&[], &mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("nu,N,seed,delta"));

    let rows = exponent_experiment(2, &[32], &[0.01, 0.03, 0.06], &[1, 2]).unwrap();
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert!(r.cost1 <= r.bound1 && r.cost2 <= r.bound2 && r.cost3 <= r.bound3, "{r:?}");
        assert!(r.total >= r.l2 / 2f64.sqrt());
    }
    assert!(loglog_slope(&rows).unwrap() >= 0.0);

    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let back: Vec<ExperimentRow> = csv::Reader::from_reader(buf.as_slice()).deserialize().collect::<Result<_, _>>().unwrap();
    assert_eq!(back, rows);
}

#[test]
fn slope_of_a_power_law() {
    let row = |l2: f64| ExperimentRow {
        nu: 2,
        n: 32,
        seed: 0,
        delta: l2,
        epsilon: 2.0 / 7.0,
        l2,
        cost1: 0.0,
        bound1: 0.0,
        cost2: 0.0,
        bound2: 0.0,
        cost3: 0.0,
        bound3: 0.0,
        total: 3.0 * l2.powf(0.4),
        alpha_ref: 2.0 / 7.0,
    };
    let rows: Vec<_> = [0.01, 0.02, 0.05, 0.1].into_iter().map(row).collect();
    assert_abs_diff_eq!(loglog_slope(&rows).unwrap(), 0.4, epsilon = 1e-12);
    assert!(loglog_slope(&rows[..1]).is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn connect_reaches_the_identity(n_log in 3u32..6, delta in 0.005f64..0.2, seed in any::<u64>()) {
        let t = Tiling::new(2, 1 << n_log).unwrap();
        let p = random_near_identity(&t, delta, seed);
        let cfg = PipelineConfig::for_permutation(&p, None).unwrap();
        let c = connect_with(&p, &cfg).unwrap();
        prop_assert!(c.flow.apply(&p).unwrap().is_identity());
        prop_assert!((c.cost - c.ledger.steps.iter().map(|r| r.cost).sum::<f64>()).abs() <= 1e-12 * c.cost.max(1.0));
        let r1 = &c.ledger.steps[0];
        prop_assert!(r1.check("l2").unwrap().pass());
        prop_assert!(r1.check("colored_count").unwrap().pass());
        prop_assert!(c.ledger.steps[1].check("l2_after_phase_a").unwrap().pass());
    }
}
