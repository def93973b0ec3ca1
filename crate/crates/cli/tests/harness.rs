use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use nlslab::evolution::{EvolveConfig, Termination};
use nlslab::groundstate::MASS_Q;
use nlslab_harness::experiment::{MANIFEST_FILE, SPEC_FILE};
use nlslab_harness::report::{n_plot, REPORT_CSV, REPORT_JSON};
use nlslab_harness::store::{load_trajectory, save_trajectory};
use nlslab_harness::{
    emit_report, parse_op_list, run_experiment, DiagnosticOp, ExperimentSpec, GridSpec, HarnessError, InitialData,
    OpKind, RunManifest, RunStatus, Sweep,
};

fn gaussian_spec(out: &Path, diagnostics: &[&str]) -> ExperimentSpec {
    ExperimentSpec {
        name: "gauss".into(),
        initial_data: InitialData::Gaussian {
            amplitude: 1.5,
            width: 1.0,
            chirp: 0.0,
            mass_ratio: None,
        },
        evolve: EvolveConfig {
            mu: 1.0,
            dt0: 2e-3,
            t_end: 0.5,
            snapshot_stride: 5,
            ..Default::default()
        },
        grid: GridSpec { n: 256, radius: 30.0 },
        diagnostics: diagnostics.iter().map(|d| d.parse().unwrap()).collect(),
        sweep: Sweep::default(),
        seed: 11,
        output: out.to_path_buf(),
    }
}

fn pc_sweep(out: &Path) -> ExperimentSpec {
    ExperimentSpec {
        name: "pc-sweep".into(),
        initial_data: InitialData::PcSoliton {
            t0: -1.0,
            mass_ratio: 1.0,
        },
        evolve: EvolveConfig {
            mu: -1.0,
            dt0: 1e-3,
            t_start: -1.0,
            t_end: 0.5,
            adaptive: true,
            c_a: 5e-3,
            snapshot_stride: 10,
            ..Default::default()
        },
        grid: GridSpec { n: 512, radius: 20.0 },
        diagnostics: parse_op_list("mass,scales,concentration:c=10").unwrap(),
        sweep: Sweep {
            mass_ratio: vec![0.9, 1.1],
            mu: vec![],
        },
        seed: 1,
        output: out.to_path_buf(),
    }
}

fn files_under(root: &Path) -> BTreeSet<String> {
    fn walk(dir: &Path, root: &Path, acc: &mut BTreeSet<String>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, root, acc);
            } else {
                acc.insert(p.strip_prefix(root).unwrap().to_string_lossy().into_owned());
            }
        }
    }
    let mut acc = BTreeSet::new();
    walk(root, root, &mut acc);
    acc
}

fn listed(m: &RunManifest) -> BTreeSet<String> {
    m.files
        .iter()
        .chain(m.runs.iter().flat_map(|r| r.artifacts.iter()))
        .cloned()
        .collect()
}

#[test]
fn op_parsing() {
    let ops = parse_op_list("mass,energy,scales,classify,virial:R=20,concentration:c=10").unwrap();
    assert_eq!(ops.len(), 6);
    assert_eq!(ops[4].kind, OpKind::Virial);
    assert_eq!(ops[4].params["R"], 20.0);
    let ops = parse_op_list("virial:R=20,t=1.5,scattering:k=4,tol=1e-3").unwrap();
    assert_eq!(ops.len(), 2);
    assert_eq!(ops[0].params["t"], 1.5);
    assert_eq!(ops[1].params["tol"], 1e-3);
    for op in &ops {
        let back: DiagnosticOp = op.to_string().parse().unwrap();
        assert_eq!(&back, op);
    }
    for bad in ["nope", "virial:R", "virial:q=1", "virial:R=x", "mass:c=1"] {
        assert!(matches!(parse_op_list(bad), Err(HarnessError::Validation(_))), "{bad}");
    }
    let json = serde_json::to_string(&ops).unwrap();
    let back: Vec<DiagnosticOp> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, ops);
}

#[test]
fn spec_validation() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = gaussian_spec(dir.path(), &[]);
    spec.sweep.mass_ratio = vec![0.5, f64::NAN];
    assert!(matches!(spec.validate(), Err(HarnessError::Validation(_))));
    let mut spec = gaussian_spec(dir.path(), &[]);
    spec.sweep.mu = vec![0.5];
    assert!(matches!(spec.validate(), Err(HarnessError::Validation(_))));
    let mut spec = pc_sweep(dir.path());
    spec.evolve.t_start = 0.0;
    assert!(spec.validate().is_err());
    let mut spec = gaussian_spec(dir.path(), &[]);
    spec.name = " ".into();
    assert!(spec.validate().is_err());
}

#[test]
fn invalid_initial_path_is_rejected_before_any_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let mut spec = gaussian_spec(&out, &[]);
    spec.initial_data = InitialData::Snapshot {
        path: PathBuf::from("/nonexistent/q.nlsf"),
        mass_ratio: None,
    };
    let err = run_experiment(&spec).unwrap_err();
    assert!(matches!(err, HarnessError::Validation(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert!(!out.exists());
}

#[test]
fn empty_diagnostics_give_snapshots_only() {
    let dir = tempfile::tempdir().unwrap();
    let spec = gaussian_spec(dir.path(), &[]);
    let m = run_experiment(&spec).unwrap();
    assert!(m.complete);
    assert_eq!(m.runs.len(), 1);
    let run = &m.runs[0];
    assert_eq!(run.status, RunStatus::Completed);
    assert_eq!(run.termination, Some(Termination::ReachedEnd));
    assert!(run.diagnostics.is_empty());
    let on_disk = files_under(dir.path());
    assert_eq!(listed(&m), on_disk);
    assert!(on_disk
        .iter()
        .all(|f| !f.ends_with(".csv") || f.ends_with("series.csv")));
    assert_eq!(on_disk.iter().filter(|f| f.ends_with(".nlsf")).count(), 51);
}

#[test]
fn every_emitted_file_is_listed() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = gaussian_spec(dir.path(), &["mass", "energy", "scales", "virial:R=20", "duhamel"]);
    spec.sweep.mu = vec![1.0, -1.0];
    let m = run_experiment(&spec).unwrap();
    assert_eq!(m.runs.len(), 2);
    assert!(m.runs.iter().all(|r| r.status == RunStatus::Completed));
    assert!(m.runs.iter().all(|r| r.diagnostics.iter().all(|o| o.ok)));
    assert_eq!(listed(&m), files_under(dir.path()));
    let reread = RunManifest::load(dir.path()).unwrap();
    assert_eq!(reread, m);
}

#[test]
fn hash_reproducible_from_spec_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = gaussian_spec(dir.path(), &["mass"]);
    let m = run_experiment(&spec).unwrap();
    let stored = ExperimentSpec::load(&dir.path().join(SPEC_FILE)).unwrap();
    assert_eq!(stored, spec);
    assert_eq!(stored.hash().unwrap(), m.spec_hash);
    let mut other = spec.clone();
    other.seed += 1;
    assert_ne!(other.hash().unwrap(), m.spec_hash);
}

#[test]
fn csv_outputs_are_bit_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ops = ["mass", "energy", "scales", "virial:R=20"];
    let mut sa = gaussian_spec(a.path(), &ops);
    let mut sb = gaussian_spec(b.path(), &ops);
    for s in [&mut sa, &mut sb] {
        s.grid.n = 384;
        s.initial_data = InitialData::Ensemble {
            index: 3,
            mass_ratio: Some(0.5),
        };
    }
    let ma = run_experiment(&sa).unwrap();
    run_experiment(&sb).unwrap();
    assert_eq!(ma.runs[0].status, RunStatus::Completed, "{:?}", ma.runs[0].error);
    let csvs: Vec<&String> = ma.runs[0].artifacts.iter().filter(|f| f.ends_with(".csv")).collect();
    assert_eq!(csvs.len(), 5);
    for f in csvs.iter().chain(
        ma.runs[0]
            .artifacts
            .iter()
            .filter(|f| f.ends_with(".nlsf"))
            .take(3)
            .collect::<Vec<_>>()
            .iter(),
    ) {
        let x = fs::read(a.path().join(f)).unwrap();
        let y = fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
    let mut sc = sa.clone();
    sc.seed += 1;
    sc.output = tempfile::tempdir().unwrap().keep();
    let mc = run_experiment(&sc).unwrap();
    let x = fs::read(a.path().join(&ma.runs[0].artifacts[0])).unwrap();
    let y = fs::read(sc.output.join(&mc.runs[0].artifacts[0])).unwrap();
    assert_ne!(x, y, "a different seed picks a different ensemble member");
}

#[test]
fn sub_failures_are_recorded_and_manifest_still_written() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = gaussian_spec(dir.path(), &["mass"]);
    spec.initial_data = InitialData::Gaussian {
        amplitude: 3.0,
        width: 1.0,
        chirp: -2.0,
        mass_ratio: None,
    };
    spec.grid = GridSpec { n: 96, radius: 12.0 };
    spec.evolve.dt0 = 1e-3;
    spec.evolve.t_end = 1.0;
    spec.sweep.mu = vec![1.0];
    let m = run_experiment(&spec).unwrap();
    assert!(m.complete);
    let run = &m.runs[0];
    assert_eq!(run.status, RunStatus::Failed);
    assert_eq!(run.exit_code, 3);
    assert!(matches!(run.termination, Some(Termination::NumericFailure { .. })));
    assert!(run.error.as_deref().unwrap().contains("resolution lost"));
    // the partial trajectory is still on disk
    let traj = load_trajectory(&dir.path().join(&run.point.id)).unwrap();
    assert!(!traj.snapshots.is_empty());
    assert_eq!(listed(&m), files_under(dir.path()));

    let dir = tempfile::tempdir().unwrap();
    let mut spec = gaussian_spec(dir.path(), &[]);
    spec.initial_data = InitialData::PcSoliton {
        t0: -1e-3,
        mass_ratio: 1.0,
    };
    spec.evolve.t_start = -1e-3;
    spec.evolve.t_end = 1.0;
    spec.grid = GridSpec { n: 64, radius: 20.0 };
    let m = run_experiment(&spec).unwrap();
    assert_eq!(m.runs[0].status, RunStatus::Failed);
    assert_eq!(m.runs[0].exit_code, 2);
    assert!(RunManifest::load(&dir.path().join(MANIFEST_FILE)).unwrap().complete);
}

#[test]
fn interrupted_manifest_marks_pending_runs_and_blocks_report() {
    let dir = tempfile::tempdir().unwrap();
    let spec = gaussian_spec(dir.path(), &["mass"]);
    let mut m = run_experiment(&spec).unwrap();
    // what a sweep killed mid-way leaves behind
    m.complete = false;
    m.runs[0].status = RunStatus::Pending;
    m.write(dir.path()).unwrap();
    let back = RunManifest::load(dir.path()).unwrap();
    assert_eq!(back.failed_runs().count(), 1);
    assert!(matches!(
        emit_report(&back, dir.path()),
        Err(HarnessError::Validation(_))
    ));
    // per-run artifacts remain readable
    let traj = load_trajectory(&dir.path().join("run-000")).unwrap();
    assert_eq!(traj.snapshots.len(), 51);
}

#[test]
fn trajectory_store_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = gaussian_spec(dir.path(), &[]);
    run_experiment(&spec).unwrap();
    let traj = load_trajectory(&dir.path().join("run-000")).unwrap();
    let again = tempfile::tempdir().unwrap();
    save_trajectory(again.path(), &traj, &serde_json::Value::Null).unwrap();
    let back = load_trajectory(again.path()).unwrap();
    assert_eq!(back.termination, traj.termination);
    assert_eq!(back.snapshots.len(), traj.snapshots.len());
    for ((t1, u1), (t2, u2)) in back.snapshots.iter().zip(&traj.snapshots) {
        assert_eq!(t1, t2);
        assert_eq!(u1.values(), u2.values());
    }
    for (a, b) in back.series.iter().zip(&traj.series) {
        assert_eq!(
            (a.t, a.mass, a.energy, a.linf, a.l4_cum),
            (b.t, b.mass, b.energy, b.linf, b.l4_cum)
        );
    }
}

#[test]
fn empty_manifest_gives_empty_report() {
    let dir = tempfile::tempdir().unwrap();
    let m = RunManifest {
        name: "empty".into(),
        spec_hash: String::new(),
        code_version: "0".into(),
        grid: GridSpec::default(),
        seed: 0,
        wall_time_s: 0.0,
        complete: true,
        files: vec![],
        runs: vec![],
    };
    let out = emit_report(&m, dir.path()).unwrap();
    assert!(out.failures.is_empty());
    assert_eq!(out.files, vec![REPORT_JSON.to_string(), REPORT_CSV.to_string()]);
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join(REPORT_JSON)).unwrap()).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 0);
    let csv = fs::read_to_string(dir.path().join(REPORT_CSV)).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn soliton_run_plots_flat_frequency_scale() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec {
        name: "soliton".into(),
        initial_data: InitialData::Groundstate { mass_ratio: 1.0 },
        evolve: EvolveConfig {
            mu: -1.0,
            dt0: 1e-3,
            t_end: 1.0,
            snapshot_stride: 10,
            ..Default::default()
        },
        grid: GridSpec { n: 512, radius: 20.0 },
        diagnostics: parse_op_list("mass,energy,scales,classify").unwrap(),
        sweep: Sweep::default(),
        seed: 0,
        output: dir.path().to_path_buf(),
    };
    let m = run_experiment(&spec).unwrap();
    let run = &m.runs[0];
    assert_eq!(run.status, RunStatus::Completed);
    let classify = run.diagnostics.iter().find(|o| o.op == "classify").unwrap();
    assert_eq!(classify.result["scenario"], "soliton-like");
    let out = emit_report(&m, dir.path()).unwrap();
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    assert!(out.files.contains(&"plots/run-000_n.svg".to_string()));

    let mut rdr = csv::Reader::from_path(dir.path().join("run-000/scales.csv")).unwrap();
    let samples: Vec<(f64, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    let plot = n_plot("run-000", &samples, None);
    assert!(!plot.log_x);
    let ys: Vec<f64> = plot.lines[0].points.iter().map(|p| p.1).collect();
    assert!(ys.iter().all(|y| *y == ys[0]), "N(t) is not flat: {ys:?}");
    let svg = fs::read_to_string(dir.path().join("plots/run-000_n.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}

#[test]
fn mass_threshold_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_experiment(&pc_sweep(dir.path())).unwrap();
    assert_eq!(m.runs.len(), 2);
    let below = &m.runs[0];
    let above = &m.runs[1];
    assert_eq!(below.point.mass_ratio, Some(0.9));
    assert_eq!(above.point.mass_ratio, Some(1.1));

    assert_eq!(below.termination, Some(Termination::ReachedEnd));
    let fit = match &above.termination {
        Some(Termination::Blowup(b)) => b.clone(),
        other => panic!("1.1 run did not blow up: {other:?}"),
    };
    assert!(fit.t_star < 0.0, "supercritical pc data focus before t = 0");
    let conc = above.diagnostics.iter().find(|o| o.op == "concentration:c=10").unwrap();
    assert!(conc.ok);
    assert!(conc.result["running_max"].as_f64().unwrap() >= 0.9 * MASS_Q);
    // no blowup, so the concentration op has nothing to measure below threshold
    let conc_below = below.diagnostics.iter().find(|o| o.op == "concentration:c=10").unwrap();
    assert!(!conc_below.ok);

    let out = emit_report(&m, dir.path()).unwrap();
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    assert!(out.files.contains(&"plots/run-001_concentration.svg".to_string()));
    let mut rdr = csv::Reader::from_path(dir.path().join("run-001/scales.csv")).unwrap();
    let samples: Vec<(f64, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    let plot = n_plot("run-001", &samples, Some(fit.t_star));
    assert!(plot.log_x && plot.log_y);
    let guide = &plot.transformed()[1];
    let slope = (guide[1].1 - guide[0].1) / (guide[1].0 - guide[0].0);
    assert!((slope + 0.5).abs() < 1e-12, "{slope}");
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join(REPORT_JSON)).unwrap()).unwrap();
    assert_eq!(report["runs"][1]["termination"], "blowup");
    assert_eq!(report["runs"][0]["termination"], "reached_end");
}
