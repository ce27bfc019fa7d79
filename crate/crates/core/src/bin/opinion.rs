use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use opinion_core::axial::{self, oracle, AxialRecordJson, Mode};
use opinion_core::group::{check_equivariance, full_group_generators};
use opinion_core::linalg::Subspace;
use opinion_core::presets::{self, timeline, Figure, PresetOptions, SCHEMA_VERSION};
use opinion_core::scenario::Scenario;
use opinion_core::sim::{self, detect_switchiness, integrate, random_init, SimConfig};
use opinion_core::spectral::{self, BifurcationKind};
use opinion_core::state::DeviationState;
use opinion_core::{plot, Error, Result};

#[derive(Parser)]
#[command(name = "opinion", version, about = "Opinion dynamics on the simplex: analysis, axial catalogs, simulation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; defaults to the scenario's `out`, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Perturb the model by uniform noise of this size.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Linear analysis at the neutral point.
    Analyze(Common),
    /// Axial subgroup catalog, optionally checked against brute force.
    Axials {
        #[arg(long)]
        na: usize,
        #[arg(long)]
        no: usize,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// One integration run.
    Simulate(Common),
    /// Equilibria over a λ grid from several starting states.
    Sweep(Common),
    /// Figure protocols.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Consensus,
    Dissensus,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Consensus => Mode::Consensus,
            ModeArg::Dissensus => Mode::Dissensus,
        }
    }
}

type Files = Vec<(String, Vec<u8>)>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Schema(_) | Error::Json(_) => 2,
        Error::DegenerateDenominator { .. } => 3,
        Error::SizeExceeded { .. } | Error::GroupTooLarge { .. } => 4,
        Error::Diverged { .. } => 5,
        _ => 1,
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

fn write_all(dir: &Path, files: &Files) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        let p = dir.join(name);
        fs::write(&p, bytes)?;
        println!("{}", p.display());
    }
    Ok(())
}

fn load(c: &Common) -> Result<(Scenario, PathBuf, u64)> {
    let text = fs::read_to_string(&c.scenario)?;
    let s = Scenario::from_json(&text)?;
    let out = c.out.clone().or_else(|| s.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let seed = s.seed(c.seed);
    Ok((s, out, seed))
}

fn analyze(c: &Common) -> Result<()> {
    let (s, out, seed) = load(c)?;
    let m = s.model_with_epsilon(c.epsilon, seed).build()?;
    let (na, no) = (m.na(), m.no());
    let eq = check_equivariance(&m, &full_group_generators(na, no), s.analysis.equivariance_samples, s.analysis.equivariance_tol, seed)?;
    let (report, bt) = spectral::analyze(&m)?;
    let gains_pred = match s.model.gains() {
        Some([a, b, g, d]) if s.model.tensor.is_none() => Some(spectral::critical_lambdas(a, b, g, d, na)?),
        _ => None,
    };
    let bisection = match (report.kind, report.lambda_crit, s.analysis.bisect) {
        (BifurcationKind::Consensus, Some(l), true) => spectral::bisect_crossing(&m, Subspace::Consensus, 0.0, 2.0 * l, 1e-10).ok(),
        (BifurcationKind::Dissensus, Some(l), true) => spectral::bisect_crossing(&m, Subspace::Dissensus, 0.0, 2.0 * l, 1e-10).ok(),
        _ => None,
    };
    let warning = (report.kind == BifurcationKind::ModeInteraction)
        .then_some("gamma equals delta: consensus and dissensus modes destabilize together; no single critical value");
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "na": na,
        "no": no,
        "lambda": m.lambda(),
        "equivariance": eq,
        "balance_terms": bt,
        "c1": report.c1,
        "c2": report.c2,
        "eig_consensus": report.eig_consensus,
        "eig_dissensus": report.eig_dissensus,
        "block_residual": report.block_residual,
        "kind": report.kind,
        "lambda_crit": report.lambda_crit,
        "lambda_consensus": gains_pred.and_then(|p| p.lambda_consensus),
        "lambda_dissensus": gains_pred.and_then(|p| p.lambda_dissensus),
        "lambda_crit_bisection": bisection,
        "warning": warning,
    });
    if let Some(w) = warning {
        eprintln!("warning: {w}");
    }
    write_all(&out, &vec![("analysis.json".into(), json_bytes(&doc)?)])
}

fn axials(na: usize, no: usize, mode: Mode, with_oracle: bool, out: &Path) -> Result<()> {
    // Size errors come first so nothing is written on failure.
    let oracle = if with_oracle { Some(oracle::brute_force_axials(na, no, mode)?) } else { None };
    let records = axial::catalog(na, no, mode);
    let completeness = if records.iter().all(|r| r.completeness == axial::Completeness::Proven) {
        axial::Completeness::Proven
    } else {
        axial::Completeness::PossiblyIncomplete
    };
    let mut omitted = Vec::new();
    if mode == Mode::Dissensus && ((no == 3 && na % 2 == 1) || (na == 3 && no % 2 == 1)) {
        omitted.push("Sigma_Z2: needs an even number of agents (options)");
    }
    let oracle_doc = oracle.map(|o| {
        let cmp = oracle::compare(&records, &o);
        json!({
            "group_order": o.group_order,
            "classes": o.classes.iter().map(|c| json!({
                "fix_vector": DeviationState::from_flat(na, no, c.line.clone()).map(|z| z.rows()).unwrap_or_default(),
                "stabilizer_order": c.stabilizer_order.to_string(),
            })).collect::<Vec<_>>(),
            "comparison": cmp,
        })
    });
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "na": na,
        "no": no,
        "mode": mode,
        "completeness": completeness,
        "omitted": omitted,
        "records": records.iter().map(AxialRecordJson::from).collect::<Vec<_>>(),
        "oracle": oracle_doc,
    });
    if let Some(v) = doc["oracle"]["comparison"]["verdict"].as_str() {
        eprintln!("oracle verdict: {v}");
    }
    let name = format!("axials_{na}x{no}_{}.json", if mode == Mode::Consensus { "consensus" } else { "dissensus" });
    write_all(out, &vec![(name, json_bytes(&doc)?)])
}

fn sim_config(s: &Scenario, seed: u64) -> Result<SimConfig> {
    let mut c = s.sim.clone().ok_or_else(|| Error::Schema("this command needs a `sim` section".into()))?;
    c.seed = seed;
    Ok(c)
}

fn simulate(c: &Common) -> Result<()> {
    let (s, out, seed) = load(c)?;
    let m = s.model_with_epsilon(c.epsilon, seed).build()?;
    let cfg = sim_config(&s, seed)?;
    let z0 = match &s.init {
        Some(z) => DeviationState::try_from(z.clone())?,
        None => random_init(m.na(), m.no(), cfg.init_scale, seed),
    };
    let traj = integrate(&m, &z0, &cfg, s.ramp.as_ref())?;
    let mut csv = Vec::new();
    traj.write_csv(&mut csv, 1)?;
    let mut dat = Vec::new();
    plot::write_dat(&mut dat, &traj, 1)?;
    let z = traj.last();
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "t_end": traj.times.last(),
        "converged": traj.converged,
        "final_class": traj.classes.last().map(ToString::to_string),
        "final_norm": z.norm(),
        "max_row_sum": traj.max_row_sum(),
        "timeline": timeline(&traj),
        "switchiness": detect_switchiness(&traj),
    });
    let files = vec![
        ("trajectory.csv".into(), csv),
        ("trajectory.dat".into(), dat),
        ("trajectory.svg".into(), plot::svg_chart(&traj, "trajectory", 1).into_bytes()),
        ("summary.json".into(), json_bytes(&summary)?),
    ];
    write_all(&out, &files)
}

fn sweep(c: &Common) -> Result<()> {
    let (s, out, seed) = load(c)?;
    let grid = s.sweep.clone().ok_or_else(|| Error::Schema("sweep needs a `sweep` section".into()))?;
    let m = s.model_with_epsilon(c.epsilon, seed).build()?;
    let cfg = sim_config(&s, seed)?;
    let (na, no) = (m.na(), m.no());
    let mut cat = axial::catalog(na, no, Mode::Consensus);
    if na > 1 {
        cat.extend(axial::catalog(na, no, Mode::Dissensus));
    }
    let mut inits = sim::default_inits(&cat, na, no, grid.init_scale, grid.n_random, seed);
    if let Some(z) = &s.init {
        inits.push(("init".into(), DeviationState::try_from(z.clone())?));
    }
    let rows = sim::sweep_bifurcation(&m, &grid.lambdas(), &inits, &cfg, &cat)?;
    let mut csv = Vec::new();
    sim::write_sweep_csv(&mut csv, &rows)?;
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "lambdas": grid.lambdas(),
        "inits": inits.iter().map(|(id, _)| id.clone()).collect::<Vec<_>>(),
        "rows": rows,
    });
    write_all(&out, &vec![("sweep.csv".into(), csv), ("sweep.json".into(), json_bytes(&summary)?)])
}

fn reproduce(figure: Figure, out: &Path, seed: Option<u64>, epsilon: Option<f64>) -> Result<()> {
    let mut opts = PresetOptions::default();
    if let Some(s) = seed {
        opts.seed = s;
    }
    if let Some(e) = epsilon {
        opts.epsilon = e;
    }
    let res = presets::run(figure, &opts)?;
    for c in &res.summary.checks {
        eprintln!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    write_all(out, &res.files)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Analyze(c) => analyze(&c),
        Cmd::Axials { na, no, mode, oracle, out } => {
            if na == 0 || no < 2 {
                return Err(Error::Schema(format!("need na >= 1 and no >= 2, got {na}x{no}")));
            }
            axials(na, no, mode.into(), oracle, &out)
        }
        Cmd::Simulate(c) => simulate(&c),
        Cmd::Sweep(c) => sweep(&c),
        Cmd::Reproduce { figure, out, seed, epsilon } => reproduce(figure, &out, seed, epsilon),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
