//! Figure-reproduction protocols. Each preset builds its models from the
//! figure caption parameters, integrates, classifies and returns a summary
//! plus the files to write; nothing touches the filesystem here.
//!
//! Shared settings: `Na = 17`, every model perturbed by independent uniform
//! noise of size ε (seeded with `seed`), random initial deviations of radius
//! `init_scale` (seeded with `seed + 1`), RK4 at `dt` with one sample per
//! time unit.
//!
//! The fig5 λ(t) switches formula when δ(t) crosses γ. Both branches equal
//! `0.01 + 1/(α − β)` there, so the switch instant needs no convention; the
//! schedule evaluates the consensus branch at equality.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::axial::{catalog, AxialRecord, Mode};
use crate::error::{Error, Result};
use crate::model::{ModelInstance, ModelSpec, PerturbSpec};
use crate::plot;
use crate::sim::{detect_switchiness, integrate, nearest_axial, random_init, AxialMatch, RampSpec, Schedule, SimConfig, SwitchReport, Switchiness, Trajectory};
use crate::spectral::critical_lambdas;
use crate::state::{DissensusKind, GroupClass};
use crate::tol;

pub const SCHEMA_VERSION: u32 = 1;

const NA: usize = 17;
const CSV_SAMPLES: usize = 500;

pub const CONSENSUS_GAINS: [f64; 4] = [0.0, -1.5, 0.2, 0.1];
pub const DISSENSUS_GAINS: [f64; 4] = [0.0, -0.5, 0.1, 0.2];
pub const FIG5_GAINS: [f64; 3] = [1.1, -1.0, 0.05];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig4,
    Fig5,
    Fig6,
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        })
    }
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            "fig6" => Ok(Figure::Fig6),
            _ => Err(Error::InvalidArgument(format!("unknown figure {s:?}; expected fig4, fig5 or fig6"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetOptions {
    pub seed: u64,
    pub epsilon: f64,
    pub dt: f64,
    pub init_scale: f64,
    /// Time spent at λ(0) before a fig6 ramp starts.
    pub burn_in: f64,
}

impl Default for PresetOptions {
    fn default() -> Self {
        PresetOptions { seed: 1, epsilon: 0.01, dt: 0.05, init_scale: 0.01, burn_in: 500.0 }
    }
}

/// Which side of the critical value a fixed-λ run sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub class: String,
    pub start: f64,
    pub end: f64,
}

/// Consecutive samples with the same class, merged.
pub fn timeline(traj: &Trajectory) -> Vec<Phase> {
    let mut out: Vec<Phase> = Vec::new();
    for (t, c) in traj.times.iter().zip(&traj.classes) {
        let c = c.to_string();
        match out.last_mut() {
            Some(p) if p.class == c => p.end = *t,
            _ => out.push(Phase { class: c, start: *t, end: *t }),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModerateExtremistReport {
    pub detected: bool,
    pub phases: usize,
    pub total_duration: f64,
    /// False when every moderate/extremist phase gave way to another class.
    pub persists_at_end: bool,
    pub first_at: Option<f64>,
    /// Catalog match of the first moderate/extremist sample.
    pub nearest_axial: Option<AxialMatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub na: usize,
    pub no: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub lambda_crit: Option<f64>,
    pub protocol: String,
    pub t_end: f64,
    pub converged: bool,
    pub final_class: String,
    pub final_norm: f64,
    pub final_mean_norm: f64,
    pub timeline: Vec<Phase>,
    pub switchiness: SwitchReport,
    pub moderate_extremist: ModerateExtremistReport,
    pub nearest_axial: Option<AxialMatch>,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetSummary {
    pub schema_version: u32,
    pub figure: Figure,
    /// Where the parameters come from.
    pub source: String,
    pub seed: u64,
    pub epsilon: f64,
    pub dt: f64,
    pub init_scale: f64,
    pub runs: Vec<RunSummary>,
    pub checks: Vec<Check>,
}

/// A preset's summary and its output files as `(name, bytes)`.
#[derive(Debug, Clone)]
pub struct PresetOutput {
    pub summary: PresetSummary,
    pub files: Vec<(String, Vec<u8>)>,
}

fn model(no: usize, gains: [f64; 4], lambda: f64, opts: &PresetOptions) -> Result<ModelInstance> {
    let mut spec = ModelSpec::homogeneous(NA, no, gains, lambda);
    spec.perturb = Some(PerturbSpec { epsilon: opts.epsilon, seed: opts.seed });
    spec.build()
}

fn config(t_max: f64, opts: &PresetOptions) -> SimConfig {
    let mut c = SimConfig::new(t_max);
    c.dt = opts.dt;
    c.seed = opts.seed;
    c.init_scale = opts.init_scale;
    c
}

fn init(no: usize, opts: &PresetOptions) -> crate::state::DeviationState {
    random_init(NA, no, opts.init_scale, opts.seed.wrapping_add(1))
}

/// Critical λ of the leading branch for the given gains at `Na = 17`.
pub fn lambda_crit(gains: [f64; 4]) -> Result<f64> {
    let [a, b, g, d] = gains;
    let p = critical_lambdas(a, b, g, d, NA)?;
    p.critical_lambda.ok_or_else(|| Error::InvalidArgument("gains sit at mode interaction".into()))
}

fn me_report(traj: &Trajectory) -> Result<ModerateExtremistReport> {
    let me = GroupClass::Dissensus(DissensusKind::ModerateExtremist);
    let label = me.to_string();
    let tl = timeline(traj);
    let hits: Vec<&Phase> = tl.iter().filter(|p| p.class == label).collect();
    let first = traj.classes.iter().position(|c| *c == me);
    let nearest = match first {
        Some(i) => {
            let z = &traj.states[i];
            nearest_axial(z, &catalog(z.na(), z.no(), Mode::Dissensus))?
        }
        None => None,
    };
    Ok(ModerateExtremistReport {
        detected: !hits.is_empty(),
        phases: hits.len(),
        total_duration: hits.iter().fold(0.0, |a, p| a + (p.end - p.start)),
        persists_at_end: tl.last().is_some_and(|p| p.class == label),
        first_at: first.map(|i| traj.times[i]),
        nearest_axial: nearest,
    })
}

fn both_catalogs(na: usize, no: usize) -> Vec<AxialRecord> {
    let mut c = catalog(na, no, Mode::Consensus);
    c.extend(catalog(na, no, Mode::Dissensus));
    c
}

fn summarize(name: &str, m: &ModelInstance, gains: [f64; 4], lambda_crit: Option<f64>, protocol: String, traj: &Trajectory) -> Result<RunSummary> {
    let z = traj.last();
    let mean = z.mean_row();
    let nearest = match nearest_axial(z, &both_catalogs(m.na(), m.no())) {
        Ok(a) => a,
        Err(Error::ZeroState) => None,
        Err(e) => return Err(e),
    };
    Ok(RunSummary {
        name: name.to_string(),
        na: m.na(),
        no: m.no(),
        alpha: gains[0],
        beta: gains[1],
        gamma: gains[2],
        delta: gains[3],
        lambda_crit,
        protocol,
        t_end: *traj.times.last().unwrap_or(&0.0),
        converged: traj.converged,
        final_class: traj.classes.last().map(ToString::to_string).unwrap_or_default(),
        final_norm: z.norm(),
        final_mean_norm: mean.iter().map(|v| v * v).sum::<f64>().sqrt(),
        timeline: timeline(traj),
        switchiness: detect_switchiness(traj),
        moderate_extremist: me_report(traj)?,
        nearest_axial: nearest,
        csv: format!("{name}.csv"),
    })
}

fn emit(name: &str, title: &str, traj: &Trajectory, files: &mut Vec<(String, Vec<u8>)>) -> Result<()> {
    let stride = traj.times.len().div_ceil(CSV_SAMPLES).max(1);
    let mut csv = Vec::new();
    traj.write_csv(&mut csv, stride)?;
    let mut dat = Vec::new();
    plot::write_dat(&mut dat, traj, stride)?;
    files.push((format!("{name}.csv"), csv));
    files.push((format!("{name}.dat"), dat));
    files.push((format!("{name}.svg"), plot::svg_chart(traj, title, stride).into_bytes()));
    Ok(())
}

fn finish(figure: Figure, source: &str, opts: &PresetOptions, runs: Vec<RunSummary>, checks: Vec<Check>, mut files: Vec<(String, Vec<u8>)>) -> Result<PresetOutput> {
    let summary = PresetSummary {
        schema_version: SCHEMA_VERSION,
        figure,
        source: source.to_string(),
        seed: opts.seed,
        epsilon: opts.epsilon,
        dt: opts.dt,
        init_scale: opts.init_scale,
        runs,
        checks,
    };
    let mut json = serde_json::to_vec_pretty(&summary)?;
    json.push(b'\n');
    files.push(("summary.json".to_string(), json));
    Ok(PresetOutput { summary, files })
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.to_string(), passed, detail }
}

pub fn run(figure: Figure, opts: &PresetOptions) -> Result<PresetOutput> {
    match figure {
        Figure::Fig4 => fig4(opts),
        Figure::Fig5 => fig5(opts),
        Figure::Fig6 => fig6(opts),
    }
}

/// One fixed-λ run at `λ_c ± 0.05` with `No = 3`, relaxed to equilibrium
/// (or `t = 2000`).
pub fn fig4_fixed(mode: Mode, side: Side, opts: &PresetOptions) -> Result<(RunSummary, Trajectory)> {
    let gains = match mode {
        Mode::Consensus => CONSENSUS_GAINS,
        Mode::Dissensus => DISSENSUS_GAINS,
    };
    let lc = lambda_crit(gains)?;
    let lambda = match side {
        Side::Below => lc - 0.05,
        Side::Above => lc + 0.05,
    };
    let m = model(3, gains, lambda, opts)?;
    let traj = integrate(&m, &init(3, opts), &config(2000.0, opts), None)?;
    let name = format!("fig4_{}_{}", mode_name(mode), side_name(side));
    let s = summarize(&name, &m, gains, Some(lc), format!("fixed lambda = {lambda}"), &traj)?;
    Ok((s, traj))
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Consensus => "consensus",
        Mode::Dissensus => "dissensus",
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Below => "below",
        Side::Above => "above",
    }
}

fn fig4(opts: &PresetOptions) -> Result<PresetOutput> {
    let mut runs = Vec::new();
    let mut files = Vec::new();
    let mut checks = Vec::new();
    let theta = tol::THETA_SIM;
    for mode in [Mode::Consensus, Mode::Dissensus] {
        for side in [Side::Below, Side::Above] {
            let (s, traj) = fig4_fixed(mode, side, opts)?;
            let (ok, detail) = match (mode, side) {
                (_, Side::Below) => (s.final_norm <= theta, format!("final |z| = {}", s.final_norm)),
                (Mode::Consensus, Side::Above) => (s.final_class == "consensus", format!("final class {}", s.final_class)),
                (Mode::Dissensus, Side::Above) => (
                    s.final_class.starts_with("dissensus") && s.final_mean_norm <= theta,
                    format!("final class {}, |mean row| = {}", s.final_class, s.final_mean_norm),
                ),
            };
            checks.push(check(&s.name, ok, detail));
            emit(&s.name, &s.name, &traj, &mut files)?;
            runs.push(s);
        }
        let gains = if mode == Mode::Consensus { CONSENSUS_GAINS } else { DISSENSUS_GAINS };
        let lc = lambda_crit(gains)?;
        let ramp = RampSpec::lambda_only(Schedule::linear(0.0, lc - 0.2, 2000.0, lc + 0.2)?);
        let m = model(3, gains, lc - 0.2, opts)?;
        let traj = integrate(&m, &init(3, opts), &config(2000.0, opts), Some(&ramp))?;
        let name = format!("fig4_{}_ramp", mode_name(mode));
        let s = summarize(&name, &m, gains, Some(lc), "lambda(t) = lambda_c - 0.2 + 0.4 t / 2000".into(), &traj)?;
        emit(&name, &name, &traj, &mut files)?;
        runs.push(s);
    }
    finish(Figure::Fig4, "figure 4 caption", opts, runs, checks, files)
}

/// δ(t) of the fig5 protocol.
pub fn fig5_delta(t: f64) -> f64 {
    let g = FIG5_GAINS[2];
    1.25 * g - g * t / 8000.0
}

/// λ(t) of the fig5 protocol.
pub fn fig5_lambda(t: f64) -> f64 {
    let [a, b, g] = FIG5_GAINS;
    let d = fig5_delta(t);
    if g < d {
        0.01 + 1.0 / (a - b - g + d)
    } else {
        0.01 + 1.0 / (a - b + (NA as f64 - 1.0) * (g - d))
    }
}

/// Outcome of scanning a timeline for uniform dissensus, then a
/// transitional phase, then consensus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceCheck {
    pub uniform_start: Option<f64>,
    pub transitional: Vec<String>,
    pub consensus_start: Option<f64>,
    pub passed: bool,
}

pub fn fig5_sequence(tl: &[Phase]) -> SequenceCheck {
    let uniform = GroupClass::Dissensus(DissensusKind::Uniform).to_string();
    let consensus = GroupClass::Consensus.to_string();
    let u = tl.iter().position(|p| p.class == uniform);
    let c = u.and_then(|u| tl[u + 1..].iter().position(|p| p.class == consensus).map(|c| c + u + 1));
    let transitional: Vec<String> = match (u, c) {
        (Some(u), Some(c)) => tl[u + 1..c].iter().map(|p| p.class.clone()).filter(|k| *k != uniform).collect(),
        _ => Vec::new(),
    };
    SequenceCheck {
        uniform_start: u.map(|i| tl[i].start),
        passed: u.is_some() && c.is_some() && !transitional.is_empty(),
        transitional,
        consensus_start: c.map(|i| tl[i].start),
    }
}

fn fig5(opts: &PresetOptions) -> Result<PresetOutput> {
    let [a, b, g] = FIG5_GAINS;
    let t_end = 4000.0;
    let gains = [a, b, g, fig5_delta(0.0)];
    let m = model(3, gains, fig5_lambda(0.0), opts)?;
    let ramp = RampSpec {
        lambda: Schedule::sampled(0.0, t_end, t_end as usize, fig5_lambda)?,
        delta: Some(Schedule::linear(0.0, fig5_delta(0.0), t_end, fig5_delta(t_end))?),
    };
    let traj = integrate(&m, &init(3, opts), &config(t_end, opts), Some(&ramp))?;
    let name = "fig5";
    let protocol = "delta(t) = 5 gamma / 4 - gamma t / 8000; lambda(t) = 0.01 + critical value at delta(t)".to_string();
    let s = summarize(name, &m, gains, None, protocol, &traj)?;
    let seq = fig5_sequence(&s.timeline);
    let checks = vec![check(
        "uniform_then_transition_then_consensus",
        seq.passed,
        serde_json::to_string(&seq)?,
    )];
    let mut files = Vec::new();
    emit(name, name, &traj, &mut files)?;
    finish(Figure::Fig5, "figure 5 caption", opts, vec![s], checks, files)
}

/// One fig6 ramp: burn-in at λ(0), then λ(t) = λ_c − 0.2 + 0.4 t/10000.
pub fn fig6_run(mode: Mode, no: usize, opts: &PresetOptions) -> Result<(RunSummary, Trajectory)> {
    let gains = match mode {
        Mode::Consensus => CONSENSUS_GAINS,
        Mode::Dissensus => DISSENSUS_GAINS,
    };
    let lc = lambda_crit(gains)?;
    let t_end = 10_000.0;
    let m = model(no, gains, lc - 0.2, opts)?;
    let mut z0 = init(no, opts);
    if opts.burn_in > 0.0 {
        let mut c = config(opts.burn_in, opts);
        c.sample_interval = opts.burn_in;
        z0 = integrate(&m, &z0, &c, None)?.last().clone();
    }
    let ramp = RampSpec::lambda_only(Schedule::linear(0.0, lc - 0.2, t_end, lc + 0.2)?);
    let traj = integrate(&m, &z0, &config(t_end, opts), Some(&ramp))?;
    let name = format!("fig6_{}_no{no}", mode_name(mode));
    let protocol = format!("burn-in {} at lambda(0), then lambda(t) = lambda_c - 0.2 + 0.4 t / 10000", opts.burn_in);
    let s = summarize(&name, &m, gains, Some(lc), protocol, &traj)?;
    Ok((s, traj))
}

fn fig6(opts: &PresetOptions) -> Result<PresetOutput> {
    let mut runs = Vec::new();
    let mut files = Vec::new();
    for mode in [Mode::Consensus, Mode::Dissensus] {
        for no in [2, 3] {
            let (s, traj) = fig6_run(mode, no, opts)?;
            emit(&s.name, &s.name, &traj, &mut files)?;
            runs.push(s);
        }
    }
    let checks = fig6_checks(&runs);
    finish(Figure::Fig6, "figure 6 caption", opts, runs, checks, files)
}

/// Continuous for `No = 2`, switch-like for `No = 3`, and the smallest
/// `No = 3` metric at least five times the largest `No = 2` metric.
pub fn fig6_checks(runs: &[RunSummary]) -> Vec<Check> {
    let mut checks: Vec<Check> = runs
        .iter()
        .map(|r| {
            let want = if r.no == 2 { Switchiness::Continuous } else { Switchiness::SwitchLike };
            check(
                &r.name,
                r.switchiness.verdict == want,
                format!("{:?} (metric {}), expected {want:?}", r.switchiness.verdict, r.switchiness.metric),
            )
        })
        .collect();
    let cont = runs.iter().filter(|r| r.no == 2).map(|r| r.switchiness.metric).fold(0.0, f64::max);
    let sw = runs.iter().filter(|r| r.no != 2).map(|r| r.switchiness.metric).fold(f64::INFINITY, f64::min);
    checks.push(check("separation", sw >= 5.0 * cont, format!("min switch-like metric {sw}, max continuous metric {cont}")));
    checks
}
