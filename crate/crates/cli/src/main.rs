use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nlslab::diagnostics::probes::{probe_inequality, Probe, ProbeConfig};
use nlslab::evolution::{evolve, EvolveConfig, Termination};
use nlslab::groundstate::{gradient_flow_ground_state, shoot_ground_state, GroundState};
use nlslab::spectral::snapshot::{sidecar_path, write_snapshot};
use nlslab::symmetry::{pseudoconformal, time_reverse, time_translate, transform_trajectory, GroupElement};
use nlslab_harness::experiment::GridSpec;
use nlslab_harness::store::{create_dir, load_trajectory, save_trajectory, write_atomic};
use nlslab_harness::{
    emit_report, ops, parse_op_list, run_experiment, DiagnosticOp, ExperimentSpec, HarnessError, InitialData, Result,
    RunManifest,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "nlslab",
    version,
    about = "Numerical laboratory for the radial cubic NLS in two dimensions"
)]
struct Cli {
    /// Number of radial nodes.
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Disc radius.
    #[arg(long = "grid-R", global = true)]
    grid_r: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GsMethod {
    Shooting,
    Flow,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TransformOp {
    Scale,
    Phase,
    Boost,
    Translate,
    TimeReverse,
    Pc,
}

#[derive(Subcommand)]
enum Command {
    /// Compute Q and write it as a snapshot plus a JSON report.
    Groundstate {
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, value_enum, default_value = "shooting")]
        method: GsMethod,
        /// Report path; defaults to the snapshot sidecar.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evolve one initial datum and store the trajectory.
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Apply a symmetry to a stored trajectory.
    Transform {
        #[arg(long, value_enum)]
        op: TransformOp,
        /// Comma separated key=value list, e.g. `lambda=2` or `theta=0.5`.
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Run diagnostics on a stored trajectory.
    Diagnose {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long, default_value = "mass,energy")]
        ops: String,
    },
    /// Evaluate an inequality probe over the seeded ensemble.
    Probe {
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 64)]
        ensemble: usize,
        /// Exponent of the Shao probe.
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        no_refine: bool,
    },
    /// Run an experiment spec (single run or sweep).
    Run {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Emit the consolidated report of a finished experiment.
    Report {
        /// Manifest file or experiment directory; defaults to `--out`.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

#[derive(Deserialize)]
struct EvolveFile {
    initial_data: InitialData,
    grid: Option<GridSpec>,
    #[serde(flatten)]
    evolve: EvolveConfig,
}

fn grid_of(cli: &Cli, file: Option<GridSpec>) -> GridSpec {
    let base = file.unwrap_or_default();
    GridSpec {
        n: cli.grid_n.unwrap_or(base.n),
        radius: cli.grid_r.unwrap_or(base.radius),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| HarnessError::Validation(format!("cannot read {}: {e}", path.display())))
}

// a closed pipe downstream is not an error of ours
fn say(line: &str) {
    let _ = writeln!(io::stdout().lock(), "{line}");
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    say(&serde_json::to_string_pretty(v)?);
    Ok(())
}

fn params(s: &str) -> Result<BTreeMap<String, f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| HarnessError::Validation(format!("parameter '{p}' is not key=value")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| HarnessError::Validation(format!("parameter {k} is not a number")))?;
            Ok((k.to_string(), v))
        })
        .collect()
}

fn take(p: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    match p.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(HarnessError::Validation(format!(
            "unexpected parameter '{k}' (expected {})",
            allowed.join(", ")
        ))),
        None => Ok(()),
    }
}

fn groundstate(cli: &Cli, tol: f64, method: GsMethod, report: Option<PathBuf>) -> Result<i32> {
    let grid = grid_of(cli, None).build()?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("q.nlsf"));
    let solve = |m: GsMethod| -> Result<GroundState> {
        Ok(match m {
            GsMethod::Flow => gradient_flow_ground_state(&grid, tol)?,
            _ => shoot_ground_state(&grid, tol)?,
        })
    };
    let primary = solve(method)?;
    let mut summary = serde_json::to_value(primary.report())?;
    let mut code = 0;
    if let GsMethod::Both = method {
        let flow = solve(GsMethod::Flow)?;
        let rel = (flow.mass - primary.mass).abs() / primary.mass;
        let distance = flow.profile.l2_distance(&primary.profile)?;
        summary["flow_mass"] = json!(flow.mass);
        summary["mass_agreement"] = json!(rel);
        summary["profile_distance"] = json!(distance);
        if rel > 1e-6 {
            eprintln!("shooting and flow masses differ by {rel:.2e} (relative)");
            code = 4;
        }
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_snapshot(&out, &primary.profile, None, summary.clone())?;
    let report = report.unwrap_or_else(|| sidecar_path(&out));
    if report == sidecar_path(&out) {
        // the report doubles as the sidecar: keep the snapshot metadata in it
        let meta: serde_json::Value = serde_json::from_slice(&read(&report)?)?;
        let mut merged = summary.clone();
        if let (Some(m), Some(obj)) = (meta.as_object(), merged.as_object_mut()) {
            for (k, v) in m {
                obj.entry(k.clone()).or_insert(v.clone());
            }
        }
        write_atomic(&report, &serde_json::to_vec_pretty(&merged)?)?;
    } else {
        write_atomic(&report, &serde_json::to_vec_pretty(&summary)?)?;
    }
    print_json(&summary)?;
    Ok(code)
}

fn evolve_cmd(cli: &Cli, config: &Path) -> Result<i32> {
    let file: EvolveFile = serde_json::from_slice(&read(config)?)?;
    file.initial_data.validate()?;
    file.evolve.validate()?;
    if let Some(t0) = file.initial_data.start_time() {
        if t0 != file.evolve.t_start {
            return Err(HarnessError::Validation(format!(
                "t_start = {} does not match the initial data time {t0}",
                file.evolve.t_start
            )));
        }
    }
    let grid = grid_of(cli, file.grid).build()?;
    let u0 = file.initial_data.build(&grid, cli.seed.unwrap_or(0))?;
    let traj = evolve(&u0, &file.evolve)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("traj"));
    let provenance = json!({"config": config.display().to_string()});
    let files = save_trajectory(&out, &traj, &provenance)?;
    print_json(&json!({
        "termination": traj.termination,
        "snapshots": traj.snapshots.len(),
        "files": files.len(),
        "out": out.display().to_string(),
    }))?;
    Ok(match traj.termination {
        Termination::NumericFailure { .. } => 3,
        _ => 0,
    })
}

fn transform_cmd(cli: &Cli, op: TransformOp, raw: &str, input: &Path) -> Result<i32> {
    let p = params(raw)?;
    let traj = load_trajectory(input)?;
    let get = |k: &str, d: f64| p.get(k).copied().unwrap_or(d);
    let out_traj = match op {
        TransformOp::Scale => {
            take(&p, &["lambda"])?;
            transform_trajectory(&GroupElement::radial(0.0, get("lambda", 1.0)), &traj)?
        }
        TransformOp::Phase => {
            take(&p, &["theta"])?;
            transform_trajectory(&GroupElement::radial(get("theta", 0.0), 1.0), &traj)?
        }
        TransformOp::Boost => {
            take(&p, &["xi", "xi_y"])?;
            let g = GroupElement {
                xi0: [get("xi", 0.0), get("xi_y", 0.0)],
                radial: false,
                ..GroupElement::identity()
            };
            transform_trajectory(&g, &traj)?
        }
        TransformOp::Translate => {
            take(&p, &["t0", "x", "y"])?;
            if p.contains_key("x") || p.contains_key("y") {
                let g = GroupElement {
                    x0: [get("x", 0.0), get("y", 0.0)],
                    radial: false,
                    ..GroupElement::identity()
                };
                transform_trajectory(&g, &traj)?
            } else {
                time_translate(&traj, get("t0", 0.0))
            }
        }
        TransformOp::TimeReverse => {
            take(&p, &[])?;
            time_reverse(&traj)
        }
        TransformOp::Pc => {
            take(&p, &[])?;
            pseudoconformal(&traj)?
        }
    };
    let out = cli
        .out
        .clone()
        .ok_or_else(|| HarnessError::Validation("transform needs --out".into()))?;
    let provenance = json!({"source": input.display().to_string(), "op": format!("{op:?}"), "params": p});
    save_trajectory(&out, &out_traj, &provenance)?;
    print_json(&json!({"out": out.display().to_string(), "snapshots": out_traj.snapshots.len()}))?;
    Ok(0)
}

fn diagnose_cmd(cli: &Cli, traj_dir: &Path, list: &str) -> Result<i32> {
    let op_list: Vec<DiagnosticOp> = parse_op_list(list)?;
    let traj = load_trajectory(traj_dir)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("report.json"));
    let dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    create_dir(&dir)?;
    let outcomes = ops::run_ops(&traj, &op_list, &dir);
    let report = json!({"trajectory": traj_dir.display().to_string(), "ops": outcomes});
    write_atomic(&out, &serde_json::to_vec_pretty(&report)?)?;
    for o in outcomes.iter().filter(|o| !o.ok) {
        eprintln!("{}: {}", o.op, o.error.as_deref().unwrap_or(""));
    }
    print_json(&report)?;
    Ok(outcomes.iter().find(|o| !o.ok).map(|o| o.exit_code).unwrap_or(0))
}

fn probe_cmd(cli: &Cli, name: &str, ensemble: usize, q: Option<f64>, no_refine: bool) -> Result<i32> {
    let probe: Probe = name.parse()?;
    let base = ProbeConfig::default();
    let cfg = ProbeConfig {
        n: cli.grid_n.unwrap_or(base.n),
        radius: cli.grid_r.unwrap_or(base.radius),
        seed: cli.seed.unwrap_or(base.seed),
        ensemble,
        q: q.unwrap_or(base.q),
        refine: !no_refine,
        ..base
    };
    let report = probe_inequality(probe, &cfg)?;
    if let Some(out) = &cli.out {
        write_atomic(out, &serde_json::to_vec_pretty(&report)?)?;
    }
    print_json(&report)?;
    let stable = report.worst_ratio.is_finite() && report.refinement.as_ref().map_or(true, |r| r.stable);
    Ok(if stable { 0 } else { 4 })
}

fn run_cmd(cli: &Cli, path: &Path) -> Result<i32> {
    let mut spec = ExperimentSpec::from_json(&read(path)?)?;
    if let Some(out) = &cli.out {
        spec.output = out.clone();
    }
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    spec.grid = grid_of(cli, Some(spec.grid));
    let manifest = run_experiment(&spec)?;
    for r in &manifest.runs {
        say(&format!(
            "{} mass_ratio={:?} mu={} status={:?} {:.1}s",
            r.point.id, r.point.mass_ratio, r.point.mu, r.status, r.wall_time_s
        ));
    }
    let code = manifest.failed_runs().next().map_or(0, |r| r.exit_code);
    Ok(code)
}

fn report_cmd(cli: &Cli, manifest: Option<PathBuf>) -> Result<i32> {
    let path = manifest
        .or_else(|| cli.out.clone())
        .ok_or_else(|| HarnessError::Validation("report needs --manifest or --out".into()))?;
    let m = RunManifest::load(&path)?;
    let root = if path.is_dir() {
        path.clone()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    };
    let outcome = emit_report(&m, &root)?;
    for f in &outcome.failures {
        eprintln!("{}: {}", f.file, f.error);
    }
    print_json(&outcome)?;
    Ok(if outcome.failures.is_empty() { 0 } else { 2 })
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Groundstate { tol, method, report } => groundstate(cli, *tol, *method, report.clone()),
        Command::Evolve { config } => evolve_cmd(cli, config),
        Command::Transform { op, params, input } => transform_cmd(cli, *op, params, input),
        Command::Diagnose { traj, ops } => diagnose_cmd(cli, traj, ops),
        Command::Probe {
            name,
            ensemble,
            q,
            no_refine,
        } => probe_cmd(cli, name, *ensemble, *q, *no_refine),
        Command::Run { spec } => run_cmd(cli, spec),
        Command::Report { manifest } => report_cmd(cli, manifest.clone()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
