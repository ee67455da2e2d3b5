//! `cubeflow`: generate near-identity permutations, connect them to the
//! identity, cost flow files, query the exact oracle, run the acceptance
//! suites and work with the swapping vector field.
//!
//! Exit codes: 0 on success, 1 when a validation fails, 2 on usage errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cubeflow::contflow::{
    build_swap_field, bump_battery, discrete_swap_l2, integrate_time1_map, l1l2_norm, verify_swap_map,
    weak_divergence_residual, FrameParams,
};
use cubeflow::oracle::{exact_distance, Limits, Mode};
use cubeflow::pipeline::{connect_with, exponent_experiment, loglog_slope, random_near_identity, write_csv, PipelineConfig};
use cubeflow::suites::{run_suite, SUITES};
use cubeflow::{DiscreteFlow, Permutation, Tiling};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "cubeflow", version, about = "Discrete incompressible flows on cube tilings", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OracleMode {
    S,
    E,
    Mixed,
}

#[derive(Args)]
struct Instance {
    /// Read the permutation from this file instead of generating one.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    nu: usize,
    #[arg(long = "N", default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Random permutation with ‖P − Id‖₂ near the target δ.
    Gen {
        #[command(flatten)]
        inst: Instance,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the cost of a flow file; a stated total must match.
    Cost {
        #[arg(long = "in")]
        input: PathBuf,
        /// Also check that the flow brings this permutation to the identity.
        #[arg(long)]
        perm: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run the three-step construction and write the flow.
    Connect {
        #[command(flatten)]
        inst: Instance,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Exact distance to the identity by search over the movement graph.
    Oracle {
        #[command(flatten)]
        inst: Instance,
        #[arg(long, value_enum, default_value = "s")]
        mode: OracleMode,
        /// Write the witness flow here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run an acceptance suite, or `all`.
    Verify { suite: String },
    /// The field swapping the end cubes of an array.
    Field {
        #[command(subcommand)]
        cmd: FieldCmd,
    },
    /// Pipeline costs over a grid of sizes, δ and seeds, as CSV.
    Exponent {
        #[arg(long, default_value_t = 2)]
        nu: usize,
        #[arg(long = "N", value_delimiter = ',', default_values_t = [32, 64])]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = cubeflow::suites::EXPONENT_DELTAS)]
        delta: Vec<f64>,
        /// Number of seeds, starting at `--seed`.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Frame {
    #[arg(long = "N", default_value_t = 4)]
    n: usize,
    #[arg(long = "M", default_value_t = 3)]
    m: usize,
    /// Override ε; the default `h/(M−1)` makes the field divergence free.
    #[arg(long)]
    epsilon: Option<f64>,
}

impl Frame {
    fn params(&self) -> cubeflow::Result<FrameParams> {
        match self.epsilon {
            Some(e) => FrameParams::with_epsilon(self.n, self.m, e),
            None => FrameParams::new(self.n, self.m),
        }
    }
}

#[derive(Subcommand)]
enum FieldCmd {
    /// Print the regions and affine coefficients of every phase.
    Build {
        #[command(flatten)]
        frame: Frame,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the time-1 map, the norm and the weak divergence.
    Verify {
        #[command(flatten)]
        frame: Frame,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Integrate one point to time 1 and write its trajectory as CSV.
    Dump {
        #[command(flatten)]
        frame: Frame,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Outcome of a command that did not succeed.
enum Failure {
    Usage(String),
    Invalid(String),
}

impl From<cubeflow::Error> for Failure {
    fn from(e: cubeflow::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display()))),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn print(format: Format, value: &Value, text: impl FnOnce() -> String) {
    match format {
        Format::Json => println!("{value}"),
        Format::Text => print!("{}", text()),
    }
}

fn instance(inst: &Instance) -> Result<Permutation, Failure> {
    if let Some(p) = &inst.input {
        return Ok(Permutation::from_text(&read(p)?)?);
    }
    let t = Tiling::new(inst.nu, inst.n)?;
    if !(inst.delta >= 0.0) {
        return Err(Failure::Usage(format!("--delta {} must be nonnegative", inst.delta)));
    }
    Ok(random_near_identity(&t, inst.delta, inst.seed))
}

fn gen(inst: &Instance, out: Option<&Path>) -> Outcome {
    let p = instance(inst)?;
    eprintln!("{} l2={} moved={}", p.tiling(), p.l2_to_identity(), p.moved());
    emit(out, &p.to_text())
}

fn cost(input: &Path, perm: Option<&Path>, format: Format) -> Outcome {
    let flow = DiscreteFlow::from_text(&read(input)?)?;
    let mut v = json!({ "tiling": flow.tiling().to_string(), "duration": flow.duration(), "total": flow.total_cost() });
    let mut reached = None;
    if let Some(pp) = perm {
        let p = Permutation::from_text(&read(pp)?)?;
        let id = flow.apply(&p)?.is_identity();
        v["reaches_identity"] = json!(id);
        reached = Some(id);
    }
    print(format, &v, || {
        let mut s = format!("{} duration={} total={}\n", flow.tiling(), flow.duration(), flow.total_cost());
        if let Some(id) = reached {
            s.push_str(&format!("reaches_identity={id}\n"));
        }
        s
    });
    match reached {
        Some(false) => Err(Failure::Invalid("flow does not bring the permutation to the identity".into())),
        _ => Ok(()),
    }
}

fn connect(inst: &Instance, epsilon: Option<f64>, out: Option<&Path>, format: Format) -> Outcome {
    let p = instance(inst)?;
    let cfg = PipelineConfig::for_permutation(&p, epsilon)?;
    let c = connect_with(&p, &cfg)?;
    let reached = c.flow.apply(&p)?.is_identity();
    if let Some(o) = out {
        emit(Some(o), &c.flow.to_text())?;
    }
    let steps: Vec<Value> = c
        .ledger
        .steps
        .iter()
        .enumerate()
        .map(|(k, r)| {
            json!({
                "step": k + 1,
                "cost": r.cost,
                "bound": r.bound,
                "duration": r.flow.duration(),
                "checks": r.checks.iter().map(|ch| json!({"name": ch.name, "value": ch.value, "limit": ch.limit, "pass": ch.pass()})).collect::<Vec<_>>(),
                "metrics": r.metrics.iter().map(|m| (m.0.to_string(), json!(m.1))).collect::<serde_json::Map<_, _>>(),
            })
        })
        .collect();
    let v = json!({
        "tiling": p.tiling().to_string(),
        "delta": cfg.delta,
        "epsilon": cfg.epsilon,
        "coarse_side": cfg.coarse_side,
        "total": c.cost,
        "duration": c.flow.duration(),
        "reaches_identity": reached,
        "steps": steps,
    });
    print(format, &v, || {
        let mut s = format!(
            "{} delta={} epsilon={} s={} total={} duration={} reaches_identity={reached}\n",
            p.tiling(),
            cfg.delta,
            cfg.epsilon,
            cfg.coarse_side,
            c.cost,
            c.flow.duration()
        );
        for (k, r) in c.ledger.steps.iter().enumerate() {
            s.push_str(&format!("step{} cost={} bound={}", k + 1, r.cost, r.bound));
            for ch in &r.checks {
                s.push_str(&format!(" {}={}/{}", ch.name, ch.value, ch.limit));
            }
            s.push('\n');
        }
        s
    });
    if reached {
        Ok(())
    } else {
        Err(Failure::Invalid("flow does not reach the identity".into()))
    }
}

fn oracle(inst: &Instance, mode: OracleMode, out: Option<&Path>, format: Format) -> Outcome {
    let p = instance(inst)?;
    let mode = match mode {
        OracleMode::S => Mode::S,
        OracleMode::E => Mode::E,
        OracleMode::Mixed => Mode::Mixed,
    };
    let id = Permutation::identity(*p.tiling());
    let r = exact_distance(&p, &id, mode, Limits::default())?;
    if let Some(o) = out {
        emit(Some(o), &r.witness.to_text())?;
    }
    let v = json!({ "mode": format!("{mode:?}"), "distance": r.distance, "l2": p.l2_to_identity(), "steps": r.witness.duration() });
    print(format, &v, || format!("mode={mode:?} distance={} l2={} steps={}\n", r.distance, p.l2_to_identity(), r.witness.duration()));
    Ok(())
}

fn verify(suite: &str) -> Outcome {
    let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite] };
    if let Some(bad) = names.iter().find(|n| !SUITES.contains(n)) {
        return Err(Failure::Usage(format!("unknown suite {bad:?}; known: all, {}", SUITES.join(", "))));
    }
    let mut pass = true;
    for name in names {
        let rep = run_suite(name)?;
        pass &= rep.pass;
        println!("{}", serde_json::to_string(&rep).map_err(|e| Failure::Invalid(e.to_string()))?);
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("suite {suite} failed")))
    }
}

fn field(cmd: &FieldCmd) -> Outcome {
    match cmd {
        FieldCmd::Build { frame, out } => {
            let f = build_swap_field(frame.params()?)?;
            emit(out.as_deref(), &f.to_text())
        }
        FieldCmd::Verify { frame, samples, step, seed, format } => {
            let p = frame.params()?;
            let f = build_swap_field(p)?;
            let rep = verify_swap_map(p, *samples, *step, *seed)?;
            let norm = l1l2_norm(&f, 64)?;
            let wd = weak_divergence_residual(&f, &bump_battery(&p))?;
            let l2 = discrete_swap_l2(&p);
            let v = json!({
                "N": p.n, "M": p.m, "epsilon": p.eps,
                "samples": rep.samples, "excluded": rep.excluded,
                "translation_error": rep.translation_error, "fixed_error": rep.fixed_error,
                "volume_fraction": rep.volume_fraction, "swap_pass": rep.pass(),
                "norm": norm, "discrete_l2": l2, "weak_divergence": wd,
            });
            print(*format, &v, || {
                format!(
                    "N={} M={} eps={}\nswap: samples={} translation_error={:.3e} fixed_error={:.3e} volume_fraction={} pass={}\nnorm={} discrete_l2={} ratio={:.4}\nweak_divergence={:.3e}\n",
                    p.n, p.m, p.eps, rep.samples, rep.translation_error, rep.fixed_error, rep.volume_fraction, rep.pass(), norm, l2, norm / l2, wd
                )
            });
            if rep.pass() {
                Ok(())
            } else {
                Err(Failure::Invalid("time-1 map is not the swap".into()))
            }
        }
        FieldCmd::Dump { frame, x, y, step, out } => {
            let f = build_swap_field(frame.params()?)?;
            let tr = integrate_time1_map(&f, [*x, *y], *step)?;
            emit(out.as_deref(), &tr.to_csv())
        }
    }
}

fn exponent(nu: usize, ns: &[usize], deltas: &[f64], seeds: u64, seed: u64, out: Option<&Path>) -> Outcome {
    let seeds: Vec<u64> = (seed..seed + seeds).collect();
    let rows = exponent_experiment(nu, ns, deltas, &seeds)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    emit(out, &String::from_utf8_lossy(&buf))?;
    match loglog_slope(&rows) {
        Some(s) => eprintln!("{} rows, log-log slope {s:.4}", rows.len()),
        None => eprintln!("{} rows, slope undefined", rows.len()),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Outcome {
    match &cli.cmd {
        Cmd::Gen { inst, out } => gen(inst, out.as_deref()),
        Cmd::Cost { input, perm, format } => cost(input, perm.as_deref(), *format),
        Cmd::Connect { inst, epsilon, out, format } => connect(inst, *epsilon, out.as_deref(), *format),
        Cmd::Oracle { inst, mode, out, format } => oracle(inst, *mode, out.as_deref(), *format),
        Cmd::Verify { suite } => verify(suite),
        Cmd::Field { cmd } => field(cmd),
        Cmd::Exponent { nu, ns, delta, seeds, seed, out } => exponent(*nu, ns, delta, *seeds, *seed, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
    }
}
