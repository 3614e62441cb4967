//! Run configuration and the `solve`, `baseline`, `verify` and `compare`
//! commands behind the `rann` binary.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{
    angular_trapezoid, benchmark_graph_norm_settings, graph_norm_check, manufactured_pincell, manufactured_slab,
    pointwise_benchmark_error, read_flux_csv, relative_l2_error, relative_l2_error_group, scalar_flux,
    slab_benchmark_errors, uniform_grid, write_flux_csv, zero_inflow_test_functions, ManufacturedCase,
    ScalarFluxField, DEFAULT_ANGULAR_NODES,
};
use crate::baseline::{normalized_benchmark_values, solve_pincell_sn, solve_slab_sn, SnConfig};
use crate::error::{RannError, Result};
use crate::geometry::{CollocationSpec, GeometryKind};
use crate::sketch::{SketchSpec, DEFAULT_NONZEROS, DEFAULT_OVERSAMPLING};
use crate::solver::{solve_problem, FluxSolution, NetworkLayout, SolveConfig};
use crate::transport::{builtin_problem, TransportProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Baseline,
    Verify,
    Compare,
}

impl Command {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "solve" => Ok(Self::Solve),
            "baseline" => Ok(Self::Baseline),
            "verify" => Ok(Self::Verify),
            "compare" => Ok(Self::Compare),
            _ => Err(cfg("run.command", format!("unknown command `{s}`"))),
        }
    }
}

/// Problems accepted besides the built-in benchmarks.
pub const MANUFACTURED_PROBLEMS: [&str; 2] = ["mms-slab", "mms-pincell"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisConfig {
    /// Test-grid points per spatial axis.
    pub grid: usize,
    pub angular_nodes: usize,
    /// Trapezoid nodes in `mu` for the slab benchmark table.
    pub benchmark_nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub quadrature: usize,
    pub slab: SolveConfig,
    pub slab_tolerance: f64,
    pub pincell: Option<SolveConfig>,
    pub pincell_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub problem: String,
    pub output: PathBuf,
    pub reference: Option<PathBuf>,
    pub predicted: Option<PathBuf>,
    pub desk: bool,
    pub method: SolveConfig,
    pub baseline: SnConfig,
    pub analysis: AnalysisConfig,
    pub verify: VerifyConfig,
}

fn cfg(key: &str, message: impl Into<String>) -> RannError {
    RannError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("run", &["command", "problem", "output", "reference", "predicted"]),
    (
        "method",
        &["neurons", "bounds", "seed", "layout", "interior", "boundary", "interface", "tikhonov"],
    ),
    ("sketch", &["enabled", "oversampling", "nonzeros", "seed"]),
    ("baseline", &["cells", "ordinates", "max_iterations", "tolerance"]),
    ("analysis", &["grid", "angular_nodes", "benchmark_nodes"]),
    (
        "verify",
        &[
            "quadrature",
            "slab_neurons",
            "slab_bound",
            "slab_interior",
            "slab_boundary",
            "slab_tolerance",
            "pincell",
            "pincell_neurons",
            "pincell_bound",
            "pincell_interior",
            "pincell_boundary",
            "pincell_tolerance",
        ],
    ),
];

/// `section.key -> value` after strict validation and desk overrides.
type Table = BTreeMap<String, String>;

fn check_key(section: &str, key: &str) -> Result<()> {
    let allowed = KEYS
        .iter()
        .find(|(s, _)| *s == section)
        .ok_or_else(|| cfg(section, "unknown section"))?;
    if !allowed.1.contains(&key) {
        return Err(cfg(&format!("{section}.{key}"), "unknown key"));
    }
    Ok(())
}

/// Parses the bracketed key=value text; unknown sections and keys are errors.
/// With `desk`, `[desk]` entries named `section.key` replace the base values.
pub fn parse_table(text: &str, desk: bool) -> Result<Table> {
    let ini = ini::Ini::load_from_str(text).map_err(|e| cfg("config", e.to_string()))?;
    let mut table = Table::new();
    let mut overrides = Table::new();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((k, _)) = props.iter().next() {
                return Err(cfg(k, "key outside any section"));
            }
            continue;
        };
        for (k, v) in props.iter() {
            if section == "desk" {
                let (s, key) = k
                    .split_once('.')
                    .ok_or_else(|| cfg(&format!("desk.{k}"), "desk keys are written section.key"))?;
                check_key(s, key)?;
                overrides.insert(k.to_string(), v.trim().to_string());
            } else {
                check_key(section, k)?;
                let full = format!("{section}.{k}");
                if table.insert(full.clone(), v.trim().to_string()).is_some() {
                    return Err(cfg(&full, "duplicate key"));
                }
            }
        }
    }
    if desk {
        table.extend(overrides);
    }
    Ok(table)
}

fn get<T: std::str::FromStr>(t: &Table, key: &str) -> Result<Option<T>> {
    t.get(key)
        .map(|v| v.parse::<T>().map_err(|_| cfg(key, format!("cannot parse `{v}`"))))
        .transpose()
}

fn get_list<T: std::str::FromStr>(t: &Table, key: &str) -> Result<Option<Vec<T>>> {
    t.get(key)
        .map(|v| {
            if v.is_empty() {
                return Ok(vec![]);
            }
            v.split([',', 'x'])
                .map(|p| p.trim().parse::<T>().map_err(|_| cfg(key, format!("cannot parse `{v}`"))))
                .collect()
        })
        .transpose()
}

fn positive(key: &str, values: &[usize]) -> Result<()> {
    if values.iter().any(|&v| v == 0) {
        return Err(cfg(key, "counts must be positive"));
    }
    Ok(())
}

/// Method settings at full scale, or reduced for `desk`.
pub fn method_preset(problem: &str, desk: bool, seed: u64) -> Result<SolveConfig> {
    let single = |neurons: usize, bound: f64, interior: Vec<usize>, boundary: Vec<usize>| SolveConfig {
        neurons: vec![neurons],
        bounds: vec![bound],
        seed,
        layout: NetworkLayout::Single,
        collocation: CollocationSpec {
            interior,
            boundary,
            interface: vec![],
        },
        sketch: None,
        tikhonov: 0.0,
    };
    let pin = |bound: f64| {
        if desk {
            single(1000, bound, vec![11; 4], vec![10; 3])
        } else {
            single(8000, bound, vec![31; 4], vec![30; 3])
        }
    };
    Ok(match problem {
        "slab-critical" => single(500, 10.0, vec![50, 50], vec![500]),
        "cylinder-case1" => {
            if desk {
                single(400, 2.0, vec![16; 3], vec![20, 20])
            } else {
                single(800, 2.0, vec![30; 3], vec![50, 50])
            }
        }
        "cylinder-case2" => {
            let (m, n) = if desk { (400, 16) } else { (2000, 30) };
            SolveConfig {
                neurons: vec![m, m],
                bounds: vec![2.0, 3.0],
                layout: NetworkLayout::PerRegion,
                collocation: CollocationSpec {
                    interior: vec![n; 3],
                    boundary: vec![n; 2],
                    interface: vec![n; 2],
                },
                ..single(m, 2.0, vec![], vec![])
            }
        }
        "pincell-vac-case1" | "pincell-vac-case2" | "pincell-vac-case3" | "pincell-refl-case2" => pin(2.0),
        "pincell-refl-case1" => pin(4.0),
        "pincell-refl-case3" => pin(3.0),
        "pincell-7g" => {
            let mut c = if desk {
                single(500, 2.0, vec![11; 4], vec![10; 3])
            } else {
                single(6000, 2.0, vec![31; 4], vec![30; 3])
            };
            c.sketch = Some(SketchSpec::with_seed(seed));
            c
        }
        "mms-slab" => single(400, 3.0, vec![50, 50], vec![500]),
        "mms-pincell" => single(2000, 2.0, vec![15; 4], vec![15; 3]),
        _ => {
            return Err(RannError::Unknown {
                kind: "problem",
                name: problem.into(),
            })
        }
    })
}

/// Problem by name: built-in benchmarks plus the manufactured cases.
pub fn load_problem(name: &str) -> Result<(TransportProblem, Option<ManufacturedCase>)> {
    match name {
        "mms-slab" => {
            let c = manufactured_slab()?;
            Ok((c.problem.clone(), Some(c)))
        }
        "mms-pincell" => {
            let c = manufactured_pincell()?;
            Ok((c.problem.clone(), Some(c)))
        }
        _ => Ok((builtin_problem(name)?, None)),
    }
}

fn default_grid(kind: GeometryKind) -> usize {
    match kind {
        GeometryKind::PinCell2d => 50,
        _ => 101,
    }
}

/// Flag values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub problem: Option<String>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub desk: bool,
    pub reference: Option<PathBuf>,
    pub predicted: Option<PathBuf>,
}

/// Resolves a configuration text into a fully populated [`RunConfig`].
pub fn resolve(command: Command, text: &str, flags: &Overrides) -> Result<RunConfig> {
    let t = parse_table(text, flags.desk)?;
    if let Some(c) = t.get("run.command") {
        if Command::parse(c)? != command {
            return Err(cfg("run.command", format!("config is for `{c}`")));
        }
    }
    let problem = flags
        .problem
        .clone()
        .or_else(|| t.get("run.problem").cloned())
        .unwrap_or_else(|| "slab-critical".into());
    let (p, _) = load_problem(&problem).map_err(|e| cfg("run.problem", e.to_string()))?;
    let kind = p.kind();
    let seed = match flags.seed {
        Some(s) => s,
        None => get(&t, "method.seed")?.unwrap_or(1),
    };

    let mut method = method_preset(&problem, flags.desk, seed)?;
    if let Some(v) = get_list::<usize>(&t, "method.neurons")? {
        positive("method.neurons", &v)?;
        method.neurons = v;
    }
    if let Some(v) = get_list::<f64>(&t, "method.bounds")? {
        if v.is_empty() || v.iter().any(|b| !(*b > 0.0)) {
            return Err(cfg("method.bounds", "bounds must be positive"));
        }
        method.bounds = v;
    }
    if let Some(v) = t.get("method.layout") {
        method.layout = match v.as_str() {
            "single" => NetworkLayout::Single,
            "per-region" => NetworkLayout::PerRegion,
            _ => return Err(cfg("method.layout", format!("unknown layout `{v}`"))),
        };
    }
    for (key, slot) in [
        ("method.interior", &mut method.collocation.interior),
        ("method.boundary", &mut method.collocation.boundary),
        ("method.interface", &mut method.collocation.interface),
    ] {
        if let Some(v) = get_list::<usize>(&t, key)? {
            positive(key, &v)?;
            *slot = v;
        }
    }
    if let Some(v) = get::<f64>(&t, "method.tikhonov")? {
        if !(v >= 0.0) {
            return Err(cfg("method.tikhonov", "must be >= 0"));
        }
        method.tikhonov = v;
    }
    let enabled = get::<bool>(&t, "sketch.enabled")?.unwrap_or(method.sketch.is_some());
    method.sketch = if enabled {
        let spec = SketchSpec::new(
            get(&t, "sketch.oversampling")?.unwrap_or(DEFAULT_OVERSAMPLING),
            get(&t, "sketch.nonzeros")?.unwrap_or(DEFAULT_NONZEROS),
            get(&t, "sketch.seed")?.unwrap_or(seed),
        )
        .map_err(|e| cfg("sketch", e.to_string()))?;
        Some(spec)
    } else {
        None
    };

    let mut baseline = match kind {
        GeometryKind::PinCell2d => SnConfig::pincell(50, 16, 16),
        _ => SnConfig::slab(300, 200),
    };
    if let Some(v) = get_list::<usize>(&t, "baseline.cells")? {
        baseline.cells = if v.len() == 1 && kind == GeometryKind::PinCell2d { vec![v[0], v[0]] } else { v };
    }
    if let Some(v) = get_list::<usize>(&t, "baseline.ordinates")? {
        baseline.ordinates = v;
    }
    if let Some(v) = get(&t, "baseline.max_iterations")? {
        baseline.max_iterations = v;
    }
    if let Some(v) = get(&t, "baseline.tolerance")? {
        baseline.tolerance = v;
    }
    positive("baseline", &baseline.cells)?;
    positive("baseline", &baseline.ordinates)?;

    let analysis = AnalysisConfig {
        grid: get(&t, "analysis.grid")?.unwrap_or(default_grid(kind)),
        angular_nodes: get(&t, "analysis.angular_nodes")?.unwrap_or(DEFAULT_ANGULAR_NODES),
        benchmark_nodes: get(&t, "analysis.benchmark_nodes")?.unwrap_or(1001),
    };
    positive("analysis", &[analysis.grid, analysis.angular_nodes, analysis.benchmark_nodes])?;

    let mut slab = method_preset("mms-slab", flags.desk, seed)?;
    let mut pin = method_preset("mms-pincell", flags.desk, seed)?;
    for (prefix, c) in [("verify.slab", &mut slab), ("verify.pincell", &mut pin)] {
        if let Some(v) = get_list::<usize>(&t, &format!("{prefix}_neurons"))? {
            positive(prefix, &v)?;
            c.neurons = v;
        }
        if let Some(v) = get_list::<f64>(&t, &format!("{prefix}_bound"))? {
            c.bounds = v;
        }
        if let Some(v) = get_list::<usize>(&t, &format!("{prefix}_interior"))? {
            positive(prefix, &v)?;
            c.collocation.interior = v;
        }
        if let Some(v) = get_list::<usize>(&t, &format!("{prefix}_boundary"))? {
            positive(prefix, &v)?;
            c.collocation.boundary = v;
        }
    }
    let verify = VerifyConfig {
        quadrature: get(&t, "verify.quadrature")?.unwrap_or(200),
        slab,
        slab_tolerance: get(&t, "verify.slab_tolerance")?.unwrap_or(1e-4),
        pincell: get::<bool>(&t, "verify.pincell")?.unwrap_or(!flags.desk).then_some(pin),
        pincell_tolerance: get(&t, "verify.pincell_tolerance")?.unwrap_or(1e-2),
    };
    if verify.quadrature < 200 {
        return Err(cfg("verify.quadrature", "graph-norm quadrature needs at least 200 nodes per axis"));
    }

    let output = flags
        .output
        .clone()
        .or_else(|| t.get("run.output").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("rann-output"));
    Ok(RunConfig {
        command,
        problem,
        output,
        reference: flags.reference.clone().or_else(|| t.get("run.reference").map(PathBuf::from)),
        predicted: flags.predicted.clone().or_else(|| t.get("run.predicted").map(PathBuf::from)),
        desk: flags.desk,
        method,
        baseline,
        analysis,
        verify,
    })
}

/// Exclusive claim on an output directory, released on drop.
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(".rann.lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(cfg(
                "output",
                format!("{} is in use by another run (remove {} if stale)", dir.display(), path.display()),
            )),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Result of a run: the report written to disk and whether every check passed.
#[derive(Debug)]
pub struct Outcome {
    pub report: Value,
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let f = File::create(path)?;
    serde_json::to_writer_pretty(f, v).map_err(|e| RannError::Io(e.into()))?;
    Ok(())
}

fn threads() -> Value {
    json!({
        "rayon_threads": rayon::current_num_threads(),
        "RAYON_NUM_THREADS": std::env::var("RAYON_NUM_THREADS").ok(),
    })
}

/// Scalar flux of a solution on the reference grid if one is given, else on
/// the configured test grid.
fn predicted_flux(solution: &FluxSolution, config: &RunConfig, reference: Option<&ScalarFluxField>) -> Result<ScalarFluxField> {
    let kind = solution.problem.kind();
    let grid = match reference {
        Some(r) => r.grid.clone(),
        None => uniform_grid(&solution.problem.domain, config.analysis.grid)?,
    };
    let rule = angular_trapezoid(kind, config.analysis.angular_nodes)?;
    scalar_flux(solution, &grid, &rule)
}

pub fn run(config: &RunConfig) -> Result<Outcome> {
    let _lock = OutputLock::acquire(&config.output)?;
    let started = Instant::now();
    let mut outcome = match config.command {
        Command::Solve => run_solve(config)?,
        Command::Baseline => run_baseline(config)?,
        Command::Verify => run_verify(config)?,
        Command::Compare => run_compare(config)?,
    };
    if let Value::Object(map) = &mut outcome.report {
        map.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
        map.insert("threads".into(), threads());
        map.insert("passed".into(), Value::Bool(outcome.passed));
        map.insert("wall_seconds".into(), json!(started.elapsed().as_secs_f64()));
    }
    let report = config.output.join("report.json");
    write_json(&report, &outcome.report)?;
    outcome.files.push(report);
    Ok(outcome)
}

fn run_solve(config: &RunConfig) -> Result<Outcome> {
    let (problem, manufactured) = load_problem(&config.problem)?;
    let solution = solve_problem(&problem, &config.method)?;
    let reference = config.reference.as_deref().map(read_flux_csv).transpose()?;
    let flux = predicted_flux(&solution, config, reference.as_ref())?;
    let path = config.output.join("flux.csv");
    write_flux_csv(&path, &flux)?;

    let mut report = json!({
        "command": "solve",
        "problem": problem.name,
        "seed": config.method.seed,
        "networks": solution.bases.iter().map(|b| json!({"neurons": b.len(), "bound": b.bound(), "seed": b.seed()})).collect::<Vec<_>>(),
        "diagnostics": solution.diagnostics,
        "residual": solution.diagnostics.residual(),
        "timings": {
            "collocation_seconds": solution.diagnostics.collocation_seconds,
            "assembly_seconds": solution.diagnostics.assembly_seconds(),
            "solve_seconds": solution.diagnostics.solve_seconds(),
            "total_seconds": solution.diagnostics.total_seconds,
        },
    });
    if problem.kind() == GeometryKind::Slab1d && problem.name == "slab-critical" {
        report["benchmark"] = json!(pointwise_benchmark_error(&solution, config.analysis.benchmark_nodes)?);
    }
    if let Some(r) = &reference {
        report["reference_error"] = reference_errors(&flux, r)?;
    }
    if let Some(case) = &manufactured {
        let exact = case.exact_scalar_flux(&flux.grid)?;
        report["manufactured_error"] = json!(relative_l2_error(&flux, &exact)?);
    }
    Ok(Outcome {
        report,
        passed: true,
        files: vec![path],
    })
}

fn reference_errors(pred: &ScalarFluxField, reference: &ScalarFluxField) -> Result<Value> {
    let per_group = (0..reference.groups)
        .map(|g| relative_l2_error_group(pred, reference, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(json!({"relative_l2": relative_l2_error(pred, reference)?, "per_group": per_group}))
}

fn run_baseline(config: &RunConfig) -> Result<Outcome> {
    let (problem, _) = load_problem(&config.problem)?;
    let sn = match problem.kind() {
        GeometryKind::Slab1d => solve_slab_sn(&problem, &config.baseline)?,
        GeometryKind::PinCell2d => solve_pincell_sn(&problem, &config.baseline)?,
        GeometryKind::Cylinder1d => {
            return Err(cfg("run.problem", "the S_N baseline covers slab and pin-cell problems"))
        }
    };
    let path = config.output.join("baseline_flux.csv");
    write_flux_csv(&path, &sn.flux)?;
    let mut report = json!({
        "command": "baseline",
        "problem": problem.name,
        "iterations": sn.iterations,
        "final_change": sn.history.last(),
        "cells": sn.flux.grid.len(),
    });
    if problem.name == "slab-critical" {
        let b = problem.domain.spatial_box[0].1;
        report["benchmark"] = json!(slab_benchmark_errors(&normalized_benchmark_values(&sn.flux, b)?));
    }
    if let Some(r) = config.reference.as_deref() {
        let r = read_flux_csv(r)?;
        report["reference_error"] = reference_errors(&sn.flux, &r)?;
    }
    Ok(Outcome {
        report,
        passed: true,
        files: vec![path],
    })
}

fn run_compare(config: &RunConfig) -> Result<Outcome> {
    let pred = config
        .predicted
        .as_deref()
        .ok_or_else(|| cfg("run.predicted", "compare needs a predicted flux CSV"))?;
    let refp = config
        .reference
        .as_deref()
        .ok_or_else(|| cfg("run.reference", "compare needs a reference flux CSV"))?;
    let (p, r) = (read_flux_csv(pred)?, read_flux_csv(refp)?);
    let errors = reference_errors(&p, &r)?;
    let table = config.output.join("pointwise.csv");
    let mut w = csv::Writer::from_path(&table)?;
    let mut header: Vec<&str> = if p.grid.dim() == 1 { vec!["x"] } else { vec!["x", "y"] };
    header.extend(["group", "predicted", "reference", "abs_error", "rel_error"]);
    w.write_record(&header)?;
    for i in 0..p.grid.len() {
        for g in 0..p.groups {
            let (a, b) = (p.value(i, g), r.value(i, g));
            let mut rec: Vec<String> = p.grid.point(i).iter().map(|v| format!("{v:.16e}")).collect();
            rec.push((g + 1).to_string());
            for v in [a, b, (a - b).abs(), if b != 0.0 { (a - b).abs() / b.abs() } else { f64::NAN }] {
                rec.push(format!("{v:.16e}"));
            }
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(Outcome {
        report: json!({"command": "compare", "predicted": pred, "reference": refp, "errors": errors}),
        passed: true,
        files: vec![table],
    })
}

fn run_verify(config: &RunConfig) -> Result<Outcome> {
    let mut checks = Vec::new();
    let mut passed = true;

    for setting in benchmark_graph_norm_settings()? {
        for test in zero_inflow_test_functions(setting.kind, &setting.spatial_box) {
            let r = graph_norm_check(&setting, &test, config.verify.quadrature)?;
            let ok = r.holds(1e-6) && r.lower_margin > 0.0 && r.upper_margin > 0.0;
            passed &= ok;
            checks.push(json!({"suite": "graph-norm", "passed": ok, "detail": r}));
        }
    }

    let mut mms = vec![("mms-slab", config.verify.slab.clone(), config.verify.slab_tolerance)];
    if let Some(p) = &config.verify.pincell {
        mms.push(("mms-pincell", p.clone(), config.verify.pincell_tolerance));
    }
    for (name, method, tol) in mms {
        let (problem, case) = load_problem(name)?;
        let case = case.expect("manufactured problem");
        let solution = solve_problem(&problem, &method)?;
        let grid = uniform_grid(&problem.domain, default_grid(problem.kind()))?;
        let rule = angular_trapezoid(problem.kind(), config.analysis.angular_nodes)?;
        let flux = scalar_flux(&solution, &grid, &rule)?;
        let err = relative_l2_error(&flux, &case.exact_scalar_flux(&grid)?)?;
        let ok = err <= tol;
        passed &= ok;
        checks.push(json!({
            "suite": "manufactured",
            "problem": name,
            "passed": ok,
            "relative_l2": err,
            "tolerance": tol,
            "neurons": method.neurons,
        }));
    }
    Ok(Outcome {
        report: json!({"command": "verify", "checks": checks}),
        passed,
        files: vec![],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_keys() {
        assert!(parse_table("[method]\nneurons = 5\n", false).is_ok());
        assert!(matches!(
            parse_table("[method]\nneuron = 5\n", false),
            Err(RannError::Config { .. })
        ));
        assert!(parse_table("[nope]\na = 1\n", false).is_err());
        assert!(parse_table("[desk]\nmethod.bogus = 1\n", true).is_err());
        assert!(parse_table("[desk]\nneurons = 1\n", true).is_err());
    }

    #[test]
    fn desk_overrides_apply_only_with_flag() {
        let text = "[method]\nneurons = 500\n[desk]\nmethod.neurons = 50\n";
        assert_eq!(parse_table(text, false).unwrap()["method.neurons"], "500");
        assert_eq!(parse_table(text, true).unwrap()["method.neurons"], "50");
    }

    #[test]
    fn resolved_defaults() {
        let c = resolve(Command::Solve, "[run]\nproblem = slab-critical\n", &Overrides::default()).unwrap();
        assert_eq!(c.method.neurons, vec![500]);
        assert_eq!(c.method.collocation.interior, vec![50, 50]);
        assert_eq!(c.analysis.grid, 101);
        let flags = Overrides {
            seed: Some(9),
            ..Default::default()
        };
        let c = resolve(Command::Solve, "[run]\nproblem = pincell-7g\n[sketch]\nenabled = true\n", &flags).unwrap();
        let s = c.method.sketch.unwrap();
        assert_eq!((s.oversampling, s.nonzeros, s.seed), (2, 8, 9));
        assert_eq!(c.baseline.ordinates, vec![16, 16]);
        assert!(resolve(Command::Solve, "[method]\nneurons = 0\n", &Overrides::default()).is_err());
        assert!(resolve(Command::Baseline, "[run]\ncommand = solve\n", &Overrides::default()).is_err());
    }

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let a = OutputLock::acquire(dir.path()).unwrap();
        assert!(OutputLock::acquire(dir.path()).is_err());
        drop(a);
        assert!(OutputLock::acquire(dir.path()).is_ok());
    }
}
