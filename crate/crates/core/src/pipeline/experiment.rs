use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::Tiling;

use super::{choose_epsilon, connect_with, random_near_identity, PipelineConfig};

/// One `(N, δ, seed)` instance of the experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub nu: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub delta: f64,
    pub epsilon: f64,
    pub l2: f64,
    pub cost1: f64,
    pub bound1: f64,
    pub cost2: f64,
    pub bound2: f64,
    pub cost3: f64,
    pub bound3: f64,
    pub total: f64,
    pub alpha_ref: f64,
}

/// Runs the pipeline on random instances, one per `(N, δ, seed)`, in parallel.
///
/// The configuration uses the measured norm of each instance as its `δ`;
/// `delta` records the requested one.
pub fn exponent_experiment(nu: usize, ns: &[usize], deltas: &[f64], seeds: &[u64]) -> Result<Vec<ExperimentRow>> {
    let jobs: Vec<(usize, f64, u64)> = ns
        .iter()
        .flat_map(|&n| deltas.iter().flat_map(move |&d| seeds.iter().map(move |&s| (n, d, s))))
        .collect();
    jobs.into_par_iter()
        .map(|(n, delta, seed)| {
            let t = Tiling::new(nu, n)?;
            let p = random_near_identity(&t, delta, seed);
            let cfg = PipelineConfig::for_permutation(&p, None)?;
            let c = connect_with(&p, &cfg)?;
            let s = &c.ledger.steps;
            Ok(ExperimentRow {
                nu,
                n,
                seed,
                delta,
                epsilon: cfg.epsilon,
                l2: cfg.delta,
                cost1: s[0].cost,
                bound1: s[0].bound,
                cost2: s[1].cost,
                bound2: s[1].bound,
                cost3: s[2].cost,
                bound3: s[2].bound,
                total: c.cost,
                alpha_ref: choose_epsilon(nu),
            })
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["nu", "N", "seed", "delta", "epsilon", "l2", "cost1", "bound1", "cost2", "bound2", "cost3", "bound3", "total", "alpha_ref"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares slope of `ln total` against `ln l2` over rows with both positive.
pub fn loglog_slope(rows: &[ExperimentRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.l2 > 0.0 && r.total > 0.0).map(|r| (r.l2.ln(), r.total.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
