//! Batch command-line front end. Exit codes: 0 pass, 1 failed check,
//! 2 usage or configuration error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bq::{slice_csv, verify_bounds, verify_identities, BqConfig, BqEvaluator};
use crate::eigen::{default_lambda1, default_lambda_max, sandwich_violation, verify_hypothesis_h, EigenConfig, EigenFamily};
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::harmonic::{build_phi0, verify_log_equivalence};
use crate::lifespan::{
    dyadic_fractions, fit_lifespan, functional_monitor, grid_fingerprint, is_monotone, log_reference_curve, predicted_exponent, records_csv, sweep,
    FitResult, LifespanRecord, Model,
};
use crate::metric::{verify_decay, MetricSpec};
use crate::obstacle::{build_star_map, jacobian_certificate, pullback_flat_metric, radial_average, table_certificate, MapTable, StarObstacle};
use crate::svg::{loglog_plot, Curve};
use crate::wave::{simulate, WaveConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "exwave", version, about = "Test functions, wave simulations and lifespan sweeps on 2-D exterior domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (falls back to EXWAVE_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the planned work and exit.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Reject exponents outside the range covered by the predicted laws.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Build and verify φ₀, the φ_λ family and b_q.
    Testfn,
    /// Run one wave simulation.
    Simulate,
    /// Lifespan sweep over ε with fit and functional monitor.
    Sweep,
    /// Star-shaped obstacle map certificates and pulled-back metric.
    Obstacle,
    /// Summarize an output directory.
    Report,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Testfn => "testfn",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Obstacle => "obstacle",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestfnConfig {
    pub metric: MetricSpec,
    #[serde(default)]
    pub eigen: Option<EigenConfig>,
    #[serde(default = "default_lambda_min")]
    pub lambda_min: f64,
    #[serde(default)]
    pub lambda_max: Option<f64>,
    #[serde(default = "default_lambdas_per_decade")]
    pub lambdas_per_decade: f64,
    /// b_q exponents to verify; empty skips b_q.
    #[serde(default)]
    pub bq_q: Vec<f64>,
    /// Dyadic times for the b_q bound check; empty skips it.
    #[serde(default)]
    pub bq_times: Vec<f64>,
}

fn default_lambda_min() -> f64 {
    1e-3
}
fn default_lambdas_per_decade() -> f64 {
    4.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: WaveConfig,
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    /// Model to fit; defaults to the predicted one for p (power law otherwise).
    #[serde(default)]
    pub model: Option<Model>,
    /// Exit 0 regardless of the fit window.
    #[serde(default)]
    pub exploratory: bool,
    /// Run the functional monitor on the largest-ε blow-up.
    #[serde(default = "yes")]
    pub monitor: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableInput {
    /// CSV with columns r,theta,f (further columns ignored).
    pub path: PathBuf,
    pub r3: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleConfig {
    #[serde(default)]
    pub obstacle: Option<StarObstacle>,
    #[serde(default)]
    pub table: Option<TableInput>,
    #[serde(default = "default_cert_n")]
    pub certificate_n_r: usize,
    #[serde(default = "default_cert_n")]
    pub certificate_n_theta: usize,
    #[serde(default = "default_export_n_r")]
    pub export_n_r: usize,
    #[serde(default = "default_export_n_theta")]
    pub export_n_theta: usize,
}

fn default_cert_n() -> usize {
    1000
}
fn default_export_n_r() -> usize {
    200
}
fn default_export_n_theta() -> usize {
    64
}

/// One line of a command summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

impl Check {
    fn pass(name: &str, detail: Value) -> Self {
        Self {
            name: name.into(),
            pass: true,
            detail,
        }
    }

    fn fail(name: &str, err: &Error) -> Self {
        Self {
            name: name.into(),
            pass: false,
            detail: json!({ "error": error_kind(err), "message": err.to_string() }),
        }
    }
}

fn error_kind(err: &Error) -> String {
    let dbg = format!("{err:?}");
    dbg.split(['(', ' ']).next().unwrap_or("Error").to_string()
}

/// Collects written artifacts and their digests for the manifest.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, content: &str) -> Result<()> {
        fs::write(self.dir.join(name), content)?;
        self.files.push((name.to_string(), hex::encode(Sha256::digest(content.as_bytes()))));
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write(name, &text)
    }

    fn finish(mut self, command: Command, config_hash: &str, checks: &[Check]) -> Result<bool> {
        let ok = checks.iter().all(|c| c.pass);
        self.write_json("summary.json", &json!({ "command": command.name(), "pass": ok, "checks": checks }))?;
        let outputs: Vec<Value> = self.files.iter().map(|(f, h)| json!({ "file": f, "sha256": h })).collect();
        let modules: Vec<Value> = ["metric", "harmonic", "eigen", "bq", "wave", "lifespan", "obstacle"]
            .iter()
            .map(|m| json!({ "name": m, "version": env!("CARGO_PKG_VERSION") }))
            .collect();
        let manifest = json!({
            "command": command.name(),
            "config_hash": config_hash,
            "version": env!("CARGO_PKG_VERSION"),
            "modules": modules,
            "outputs": outputs,
        });
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(self.dir.join("manifest.json"), text)?;
        Ok(ok)
    }
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
        if !c.pass {
            eprintln!("  {}", c.detail);
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    match dispatch(&cli) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_CHECK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_check_failure() {
                EXIT_CHECK
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("EXWAVE_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| Error::InvalidInput(format!("EXWAVE_THREADS = {v:?} is not a count")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::InvalidInput("thread count must be positive".into()));
        }
        // a pool may already exist when run() is called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn read_config(cli: &Cli) -> Result<(String, String)> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("--config is required for this command".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let hash = hex::encode(Sha256::digest(text.as_bytes()));
    Ok((text, hash))
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))
}

fn dispatch(cli: &Cli) -> Result<bool> {
    match cli.command {
        Command::Testfn => {
            let (text, hash) = read_config(cli)?;
            cmd_testfn(&parse(&text)?, cli, &hash)
        }
        Command::Simulate => {
            let (text, hash) = read_config(cli)?;
            cmd_simulate(&parse(&text)?, cli, &hash)
        }
        Command::Sweep => {
            let (text, hash) = read_config(cli)?;
            cmd_sweep(&parse(&text)?, cli, &hash)
        }
        Command::Obstacle => {
            let (text, hash) = read_config(cli)?;
            cmd_obstacle(&parse(&text)?, cli, &hash)
        }
        Command::Report => cmd_report(cli),
    }
}

pub fn cmd_testfn(cfg: &TestfnConfig, cli: &Cli, config_hash: &str) -> Result<bool> {
    let metric = &cfg.metric;
    metric.validate()?;
    let eig = cfg.eigen.unwrap_or_default();
    let lambda_max = cfg.lambda_max.unwrap_or_else(|| default_lambda_max(metric));
    if !(cfg.lambda_min > 0.0 && cfg.lambda_min < lambda_max) {
        return Err(Error::InvalidInput(format!("need 0 < lambda_min < lambda_max = {lambda_max}")));
    }
    let lambdas = EigenFamily::geometric_lambdas(cfg.lambda_min, lambda_max, cfg.lambdas_per_decade);
    if cli.dry_run {
        println!("testfn: metric {} with {} eigenfunctions in [{:e}, {lambda_max:e}]", metric.hash(), lambdas.len(), cfg.lambda_min);
        for q in &cfg.bq_q {
            println!("testfn: b_q with q = {q}");
        }
        return Ok(true);
    }
    let mut out = Outputs::new(&cli.out)?;
    let mut checks = Vec::new();
    let big_r = metric.r_inner;

    let grid = RadialGrid::log_graded(big_r, 1e4 * big_r, eig.per_decade)?;
    match verify_decay(metric, &grid) {
        Ok(rep) => checks.push(Check::pass("decay", serde_json::to_value(rep)?)),
        Err(e) if e.is_check_failure() => {
            checks.push(Check::fail("decay", &e));
            print_checks(&checks);
            return out.finish(Command::Testfn, config_hash, &checks);
        }
        Err(e) => return Err(e),
    }

    let phi0 = build_phi0(metric, &grid)?;
    out.write("phi0.csv", &phi0.to_csv())?;
    checks.push(match verify_log_equivalence(&phi0) {
        Ok((lo, hi)) => Check::pass("phi0_log_equivalence", json!({ "inf": lo, "sup": hi })),
        Err(e) => Check::fail("phi0_log_equivalence", &e),
    });

    match EigenFamily::build(metric, &lambdas, lambda_max, &eig) {
        Ok(family) => {
            let worst = family.members.iter().map(sandwich_violation).fold(f64::NEG_INFINITY, f64::max);
            checks.push(if worst <= 1e-8 {
                Check::pass("sandwich", json!({ "max_violation": worst }))
            } else {
                Check {
                    name: "sandwich".into(),
                    pass: false,
                    detail: json!({ "error": "BoundViolation", "max_violation": worst }),
                }
            });
            match verify_hypothesis_h(&family) {
                Ok(rep) => {
                    out.write_json("hypothesis.json", &rep)?;
                    checks.push(Check::pass(
                        "hypothesis_h",
                        json!({ "max_inner_spread": rep.max_inner_spread, "max_outer_spread": rep.max_outer_spread }),
                    ));
                }
                Err(e) => checks.push(Check::fail("hypothesis_h", &e)),
            }
        }
        Err(e) => checks.push(Check::fail("eigen_family", &e)),
    }

    for &q in &cfg.bq_q {
        let name = format!("bq_q{q}");
        let cover = cfg.bq_times.iter().copied().fold(100.0, f64::max) * 3.0;
        let bcfg = BqConfig { cover, ..BqConfig::default() };
        let ev = match BqEvaluator::new(metric, q, default_lambda1(metric), &bcfg) {
            Ok(ev) => ev,
            Err(e) => {
                checks.push(Check::fail(&name, &e));
                continue;
            }
        };
        let samples = [(5.0, 1.5 * big_r), (10.0, 3.0 * big_r), (20.0, 8.0 * big_r), (50.0, 2.0 * big_r)];
        match verify_identities(&ev, &samples) {
            Ok(rep) => {
                let pass = rep.max_first < 1e-4 && rep.max_second < 1e-4 && rep.max_laplace.unwrap_or(0.0) < 1e-3;
                checks.push(Check {
                    name: format!("{name}_identities"),
                    pass,
                    detail: json!({ "max_first": rep.max_first, "max_second": rep.max_second, "max_laplace": rep.max_laplace }),
                });
            }
            Err(e) => checks.push(Check::fail(&format!("{name}_identities"), &e)),
        }
        let radii: Vec<f64> = (0..40).map(|i| big_r * 1.1f64.powi(i + 1)).collect();
        out.write(&format!("bq_q{q}_t10.csv"), &slice_csv(&ev, 10.0, &radii)?)?;
        if !cfg.bq_times.is_empty() {
            let phi0_b = ev.phi0().ok_or_else(|| Error::InvalidInput("b_q family lacks φ₀".into()))?;
            match verify_bounds(&ev, phi0_b, &cfg.bq_times, 2.0 * big_r) {
                Ok(rep) => {
                    let pass = rep.upper_spread <= 10.0 && rep.lower_spread <= 10.0;
                    out.write_json(&format!("bq_q{q}_bounds.json"), &rep)?;
                    checks.push(Check {
                        name: format!("{name}_bounds"),
                        pass,
                        detail: json!({ "upper_spread": rep.upper_spread, "lower_spread": rep.lower_spread, "tail_flag": rep.tail_flag }),
                    });
                }
                Err(e) => checks.push(Check::fail(&format!("{name}_bounds"), &e)),
            }
        }
    }
    print_checks(&checks);
    out.finish(Command::Testfn, config_hash, &checks)
}

pub fn cmd_simulate(cfg: &WaveConfig, cli: &Cli, config_hash: &str) -> Result<bool> {
    cfg.validate()?;
    if cli.dry_run {
        println!(
            "simulate: p = {} ε = {} t_max = {} grid {} (outer radius {:.3})",
            cfg.p,
            cfg.epsilon,
            cfg.t_max,
            grid_fingerprint(cfg),
            cfg.outer_radius()
        );
        return Ok(true);
    }
    let mut out = Outputs::new(&cli.out)?;
    let res = simulate(cfg)?;
    out.write("result.json", &(res.to_json() + "\n"))?;
    out.write("energy.csv", &res.energy_csv())?;
    let mut checks = vec![Check::pass(
        "simulation",
        json!({ "outcome": res.outcome.label(), "t": res.outcome.time(), "steps": res.steps }),
    )];
    if let Some(c) = res.confirmation {
        checks.push(Check {
            name: "confirmation".into(),
            pass: c.confirmed,
            detail: serde_json::to_value(c)?,
        });
    }
    if !cfg.source {
        checks.push(Check::pass("energy_drift", json!({ "drift": res.energy_drift() })));
    }
    print_checks(&checks);
    out.finish(Command::Simulate, config_hash, &checks)
}

/// The model fitted by default and whether p has a predicted law.
fn sweep_model(cfg: &SweepConfig, strict: bool) -> Result<Model> {
    match predicted_exponent(cfg.base.p) {
        Ok(pr) => Ok(cfg.model.unwrap_or(pr.model)),
        Err(e) if strict => Err(e),
        Err(_) => Ok(cfg.model.unwrap_or(Model::Power)),
    }
}

pub fn cmd_sweep(cfg: &SweepConfig, cli: &Cli, config_hash: &str) -> Result<bool> {
    cfg.base.validate()?;
    if cfg.epsilons.is_empty() || cfg.epsilons.windows(2).any(|w| !(w[1] < w[0])) || cfg.epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidInput("epsilons must be positive and strictly decreasing".into()));
    }
    let model = sweep_model(cfg, cli.strict)?;
    if cli.dry_run {
        for &eps in &cfg.epsilons {
            let run = WaveConfig { epsilon: eps, ..cfg.base.clone() };
            println!("sweep: p = {} ε = {eps} t_max = {} grid {}", run.p, run.t_max, grid_fingerprint(&run));
        }
        println!("sweep: fit model {model}");
        return Ok(true);
    }
    let mut out = Outputs::new(&cli.out)?;
    let records = sweep(&cfg.base, &cfg.epsilons)?;
    out.write("records.csv", &records_csv(&records))?;
    out.write_json("records.json", &records)?;
    let mut checks = vec![Check {
        name: "monotone".into(),
        pass: is_monotone(&records),
        detail: json!({ "usable": records.iter().filter(|r| r.usable()).count() }),
    }];

    let fit = fit_lifespan(&records, model);
    match &fit {
        Ok(f) => {
            out.write_json("fit.json", f)?;
            let in_window = f.agreement.unwrap_or(false);
            checks.push(Check {
                name: "fit_window".into(),
                pass: in_window || cfg.exploratory,
                detail: json!({ "slope": f.slope, "predicted": f.predicted, "agreement": f.agreement, "exploratory": cfg.exploratory }),
            });
            out.write("lifespan.svg", &lifespan_svg(&records, f))?;
        }
        Err(e) => checks.push(Check::fail("fit_window", e)),
    }

    if cfg.monitor {
        if let Some(first) = records.iter().find(|r| r.usable()) {
            let t = first.t_num;
            let run = WaveConfig {
                epsilon: first.epsilon,
                history_dt: Some(t / 64.0),
                confirm: false,
                ..cfg.base.clone()
            };
            let phi0 = build_phi0(&run.metric, &RadialGrid::log_graded(run.metric.r_inner, run.outer_radius().max(10.0 * run.metric.r_inner), 64.0)?)?;
            let report = simulate(&run).and_then(|res| functional_monitor(&res, &run, &phi0, None, &dyadic_fractions(t)));
            match report {
                Ok(rep) => {
                    out.write_json("functional.json", &rep)?;
                    checks.push(Check {
                        name: "functional_monitor".into(),
                        pass: rep.upper_spread <= 10.0 || cfg.exploratory,
                        detail: json!({ "epsilon": rep.epsilon, "upper_spread": rep.upper_spread }),
                    });
                }
                Err(e) => checks.push(Check::fail("functional_monitor", &e)),
            }
        }
    }
    print_checks(&checks);
    out.finish(Command::Sweep, config_hash, &checks)
}

fn lifespan_svg(records: &[LifespanRecord], fit: &FitResult) -> String {
    let pts: Vec<(f64, f64)> = records.iter().filter(|r| r.usable()).map(|r| (r.epsilon, r.t_num)).collect();
    let fitted = |e: f64| match fit.model {
        Model::Power => fit.constant * e.powf(fit.slope),
        Model::PowerLog => fit.constant * (e.recip() * e.recip().ln()).powf(fit.slope),
        Model::ExpPower => (fit.constant * e.powf(fit.slope)).exp(),
    };
    let mut curves = vec![Curve {
        label: "least-squares fit",
        color: "#c03030",
        dashed: false,
        f: &fitted,
    }];
    let predicted;
    if let (Some(a), Some(c)) = (fit.predicted, fit.envelope_constant) {
        predicted = move |e: f64| c * e.powf(a);
        curves.push(Curve {
            label: "predicted slope",
            color: "#3050c0",
            dashed: true,
            f: &predicted,
        });
    }
    let scale = pts.first().map(|&(e, t)| t / log_reference_curve(e)).unwrap_or(1.0);
    let reference = move |e: f64| scale * log_reference_curve(e);
    curves.push(Curve {
        label: "log reference",
        color: "#30a050",
        dashed: true,
        f: &reference,
    });
    loglog_plot("lifespan", "epsilon", "T_num", &pts, &curves)
}

pub fn cmd_obstacle(cfg: &ObstacleConfig, cli: &Cli, config_hash: &str) -> Result<bool> {
    if cfg.obstacle.is_none() && cfg.table.is_none() {
        return Err(Error::InvalidInput("config needs an obstacle or a map table".into()));
    }
    if cli.dry_run {
        if let Some(o) = &cfg.obstacle {
            println!("obstacle: star map δ₂ = {} on {}×{} samples", o.delta2, cfg.certificate_n_r, cfg.certificate_n_theta);
        }
        if let Some(t) = &cfg.table {
            println!("obstacle: map table {}", t.path.display());
        }
        return Ok(true);
    }
    let mut out = Outputs::new(&cli.out)?;
    let mut checks = Vec::new();
    if let Some(obs) = &cfg.obstacle {
        match build_star_map(obs) {
            Err(e) => checks.push(Check::fail("obstacle_bounds", &e)),
            Ok(map) => {
                checks.push(Check::pass("obstacle_bounds", serde_json::to_value(map.range)?));
                if !map.range.lower_margin_ok {
                    eprintln!("note: min R(θ) = {} is below 2δ₂; relying on the Jacobian certificate", map.range.min);
                }
                match jacobian_certificate(&map, cfg.certificate_n_r, cfg.certificate_n_theta) {
                    Err(e) => checks.push(Check::fail("jacobian", &e)),
                    Ok(cert) => {
                        out.write_json("certificate.json", &cert)?;
                        let boundary_ok = cert.boundary_error < 1e-12 && cert.far_identity_error == 0.0;
                        checks.push(Check {
                            name: "jacobian".into(),
                            pass: boundary_ok,
                            detail: serde_json::to_value(cert)?,
                        });
                        out.write("map.csv", &map.to_csv(cfg.export_n_r, cfg.export_n_theta))?;
                        match pullback_flat_metric(&map, cfg.export_n_r, cfg.export_n_theta) {
                            Err(e) => checks.push(Check::fail("pullback", &e)),
                            Ok(pb) => {
                                out.write("metric.csv", &pb.to_csv())?;
                                checks.push(Check {
                                    name: "pullback".into(),
                                    pass: pb.far_deviation < 1e-12,
                                    detail: json!({
                                        "eig_min": pb.eig_min,
                                        "eig_max": pb.eig_max,
                                        "far_deviation": pb.far_deviation,
                                        "max_round_trip": pb.max_round_trip,
                                        "delta0": pb.delta0,
                                    }),
                                });
                                let avg = radial_average(&map, cfg.export_n_r, cfg.export_n_theta)?;
                                let mut csv = String::from("# angular average of a nonradial metric; a modelling approximation\nrho,k_avg,angular_avg\n");
                                for [r, k, a] in avg {
                                    csv.push_str(&format!("{r:.17e},{k:.17e},{a:.17e}\n"));
                                }
                                out.write("radial_average.csv", &csv)?;
                            }
                        }
                    }
                }
            }
        }
    }
    if let Some(t) = &cfg.table {
        let text = fs::read_to_string(&t.path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", t.path.display())))?;
        let table = MapTable::from_csv(t.r3, &text)?;
        match table_certificate(&table) {
            Ok(cert) => {
                out.write_json("table_certificate.json", &cert)?;
                checks.push(Check {
                    name: "table".into(),
                    pass: cert.boundary_error < 1e-10,
                    detail: serde_json::to_value(cert)?,
                });
            }
            Err(e) if e.is_check_failure() => checks.push(Check::fail("table", &e)),
            Err(e) => return Err(e),
        }
    }
    print_checks(&checks);
    out.finish(Command::Obstacle, config_hash, &checks)
}

/// Prints the summary of every command directory under `--out` (or of
/// `--out` itself) and refits any lifespan records found.
pub fn cmd_report(cli: &Cli) -> Result<bool> {
    let root = &cli.out;
    if !root.is_dir() {
        return Err(Error::InvalidInput(format!("{} is not a directory", root.display())));
    }
    let mut dirs = vec![root.clone()];
    let mut children: Vec<PathBuf> = fs::read_dir(root)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    children.sort();
    dirs.extend(children);
    let mut all_pass = true;
    let mut found = 0;
    let mut text = String::from("# exwave report\n\n");
    for d in dirs {
        let Ok(s) = fs::read_to_string(d.join("summary.json")) else {
            continue;
        };
        found += 1;
        let v: Value = serde_json::from_str(&s)?;
        let pass = v["pass"].as_bool().unwrap_or(false);
        all_pass &= pass;
        text.push_str(&format!("## {} ({})\n\n", d.display(), v["command"].as_str().unwrap_or("?")));
        for c in v["checks"].as_array().into_iter().flatten() {
            text.push_str(&format!("- {} {}\n", if c["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" }, c["name"].as_str().unwrap_or("?")));
        }
        if let Ok(r) = fs::read_to_string(d.join("records.json")) {
            let records: Vec<LifespanRecord> = serde_json::from_str(&r)?;
            if let Some(p) = records.first().map(|r| r.p) {
                let model = predicted_exponent(p).map(|pr| pr.model).unwrap_or(Model::Power);
                if let Ok(f) = fit_lifespan(&records, model) {
                    text.push_str(&format!("\nfit ({model}): slope {:.4}, predicted {:?}\n", f.slope, f.predicted));
                }
            }
        }
        text.push('\n');
    }
    if found == 0 {
        return Err(Error::InvalidInput(format!("no summary.json under {}", root.display())));
    }
    print!("{text}");
    fs::write(root.join("report.md"), &text)?;
    Ok(all_pass)
}
