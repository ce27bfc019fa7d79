//! Fixed-step RK4 integration on the tangent space, parameter ramps,
//! switchiness, λ sweeps and nearest-axial matching.

use std::io::Write;

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::axial::{next_permutation, AxialRecord};
use crate::error::{Error, Result};
use crate::model::ModelInstance;
use crate::state::{center_rows, classify_group_deviation, DeviationState, GroupClass};
use crate::tol;

fn default_dt() -> f64 {
    0.01
}
fn default_steady_tol() -> f64 {
    1e-9
}
fn default_init_scale() -> f64 {
    0.01
}
fn default_sample_interval() -> f64 {
    1.0
}
fn default_bound() -> f64 {
    tol::DIVERGENCE_BOUND
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_max: f64,
    /// Stop once `‖ż‖∞` falls below this while λ and δ are constant.
    #[serde(default = "default_steady_tol")]
    pub steady_tol: f64,
    #[serde(default)]
    pub seed: u64,
    /// Radius of the random initial deviation.
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    /// Time between recorded samples.
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
    #[serde(default = "default_bound")]
    pub divergence_bound: f64,
}

impl SimConfig {
    pub fn new(t_max: f64) -> Self {
        SimConfig {
            dt: default_dt(),
            t_max,
            steady_tol: default_steady_tol(),
            seed: 0,
            init_scale: default_init_scale(),
            sample_interval: default_sample_interval(),
            divergence_bound: default_bound(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos("dt", self.dt)?;
        pos("t_max", self.t_max)?;
        pos("steady_tol", self.steady_tol)?;
        pos("sample_interval", self.sample_interval)?;
        pos("divergence_bound", self.divergence_bound)?;
        if self.dt >= 1.0 {
            return Err(Error::InvalidArgument(format!("dt must be below 1, got {}", self.dt)));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("init_scale must be nonnegative, got {}", self.init_scale)));
        }
        Ok(())
    }
}

/// Piecewise-linear schedule through `(t, value)` knots, constant outside
/// the knot range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule(Vec<(f64, f64)>);

impl Schedule {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidArgument("schedule needs at least one knot".into()));
        }
        if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidArgument("schedule knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidArgument("schedule knot times must be strictly increasing".into()));
        }
        Ok(Schedule(knots))
    }

    /// Straight line from `(t0, v0)` to `(t1, v1)`.
    pub fn linear(t0: f64, v0: f64, t1: f64, v1: f64) -> Result<Self> {
        Schedule::new(vec![(t0, v0), (t1, v1)])
    }

    /// Samples `f` on a uniform grid of `n + 1` knots over `[t0, t1]`.
    pub fn sampled(t0: f64, t1: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = n.max(1);
        Schedule::new((0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).map(|t| (t, f(t))).collect())
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn end(&self) -> f64 {
        self.0.last().map_or(f64::NEG_INFINITY, |k| k.0)
    }

    /// Value at `t`; right-continuous at knots.
    pub fn at(&self, t: f64) -> f64 {
        let k = &self.0;
        if t <= k[0].0 {
            return k[0].1;
        }
        let i = k.partition_point(|&(tk, _)| tk <= t);
        if i >= k.len() {
            return k[k.len() - 1].1;
        }
        let (t0, v0) = k[i - 1];
        let (t1, v1) = k[i];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSpec {
    pub lambda: Schedule,
    /// Absolute δ over time; the model must carry nominal gains.
    #[serde(default)]
    pub delta: Option<Schedule>,
}

impl RampSpec {
    pub fn lambda_only(lambda: Schedule) -> Self {
        RampSpec { lambda, delta: None }
    }

    fn end(&self) -> f64 {
        self.delta.as_ref().map_or(self.lambda.end(), |d| d.end().max(self.lambda.end()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DeviationState>,
    pub lambdas: Vec<f64>,
    pub deltas: Option<Vec<f64>>,
    pub classes: Vec<GroupClass>,
    /// True when integration stopped at an equilibrium before `t_max`.
    pub converged: bool,
}

impl Trajectory {
    pub fn last(&self) -> &DeviationState {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn max_row_sum(&self) -> f64 {
        self.states.iter().map(DeviationState::max_row_sum).fold(0.0, f64::max)
    }

    /// CSV `t,lambda,agent,opt,x_value,group_class` with 1-based agent and
    /// option indices, keeping every `stride`-th sample plus the last.
    pub fn write_csv<W: Write>(&self, w: W, stride: usize) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "lambda", "agent", "opt", "x_value", "group_class"])?;
        let n = self.times.len();
        let stride = stride.max(1);
        for s in (0..n).filter(|&s| s % stride == 0 || s + 1 == n) {
            let z = &self.states[s];
            let o = 1.0 / z.no() as f64;
            let class = self.classes[s].to_string();
            for i in 0..z.na() {
                for j in 0..z.no() {
                    out.write_record([
                        fmt_num(self.times[s]),
                        fmt_num(self.lambdas[s]),
                        (i + 1).to_string(),
                        (j + 1).to_string(),
                        fmt_num(z.get(i, j) + o),
                        class.clone(),
                    ])?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Shortest round-trip formatting; byte-stable across runs.
pub(crate) fn fmt_num(x: f64) -> String {
    format!("{x}")
}

/// Uniform sample from the ball of radius `r` in the tangent space.
pub fn random_init(na: usize, no: usize, r: f64, seed: u64) -> DeviationState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data: Vec<f64> = (0..na * no).map(|_| StandardNormal.sample(&mut rng)).collect();
    center_rows(&mut data, no);
    let n = data.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dim = (na * (no - 1)) as f64;
    let u: f64 = Uniform::new(0.0, 1.0).expect("valid range").sample(&mut rng);
    let s = if n > 0.0 { r * u.powf(1.0 / dim) / n } else { 0.0 };
    data.iter_mut().for_each(|x| *x *= s);
    DeviationState::from_raw(na, no, data)
}

struct Stepper<'a> {
    m: &'a ModelInstance,
    no: usize,
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(m: &'a ModelInstance) -> Self {
        let n = m.na() * m.no();
        Stepper { m, no: m.no(), k: std::array::from_fn(|_| vec![0.0; n]), tmp: vec![0.0; n] }
    }

    fn field(m: &ModelInstance, no: usize, z: &[f64], lambda: f64, dshift: f64, out: &mut [f64]) {
        m.drift_into(z, lambda, dshift, out);
        center_rows(out, no);
    }

    /// One RK4 step; parameters are sampled at `t`, `t + dt/2`, `t + dt`.
    /// Returns `‖k1‖∞`, the drift at the start of the step.
    fn step(&mut self, z: &mut [f64], dt: f64, p0: (f64, f64), ph: (f64, f64), p1: (f64, f64)) -> f64 {
        let (m, no) = (self.m, self.no);
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        Self::field(m, no, z, p0.0, p0.1, k1);
        for ((t, a), b) in tmp.iter_mut().zip(z.iter()).zip(k1.iter()) {
            *t = a + 0.5 * dt * b;
        }
        Self::field(m, no, tmp, ph.0, ph.1, k2);
        for ((t, a), b) in tmp.iter_mut().zip(z.iter()).zip(k2.iter()) {
            *t = a + 0.5 * dt * b;
        }
        Self::field(m, no, tmp, ph.0, ph.1, k3);
        for ((t, a), b) in tmp.iter_mut().zip(z.iter()).zip(k3.iter()) {
            *t = a + dt * b;
        }
        Self::field(m, no, tmp, p1.0, p1.1, k4);
        for (i, x) in z.iter_mut().enumerate() {
            *x += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        center_rows(z, no);
        k1.iter().fold(0.0, |a, b| a.max(b.abs()))
    }
}

/// Integrate `ż = drift(z)` from `z0`, with λ (and δ) following `ramp` if
/// given, recording a sample every `cfg.sample_interval`.
pub fn integrate(m: &ModelInstance, z0: &DeviationState, cfg: &SimConfig, ramp: Option<&RampSpec>) -> Result<Trajectory> {
    cfg.validate()?;
    if z0.na() != m.na() || z0.no() != m.no() {
        return Err(Error::DimensionMismatch {
            expected: crate::error::dims(m.na(), m.no()),
            got: crate::error::dims(z0.na(), z0.no()),
        });
    }
    let nominal_delta = match ramp.and_then(|r| r.delta.as_ref()) {
        Some(_) => Some(
            m.nominal_gains()
                .ok_or_else(|| Error::InvalidArgument("a delta schedule needs a model with nominal gains".into()))?[3],
        ),
        None => None,
    };
    let params = |t: f64| -> (f64, f64) {
        match ramp {
            None => (m.lambda(), 0.0),
            Some(r) => {
                let ds = match (&r.delta, nominal_delta) {
                    (Some(d), Some(d0)) => d.at(t) - d0,
                    _ => 0.0,
                };
                (r.lambda.at(t), ds)
            }
        }
    };
    let ramp_end = ramp.map_or(f64::NEG_INFINITY, RampSpec::end);
    let (na, no) = (m.na(), m.no());
    let mut z = z0.as_slice().to_vec();
    center_rows(&mut z, no);

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        lambdas: Vec::new(),
        deltas: nominal_delta.map(|_| Vec::new()),
        classes: Vec::new(),
        converged: false,
    };
    let record = |traj: &mut Trajectory, t: f64, z: &[f64]| {
        let s = DeviationState::from_raw(na, no, z.to_vec());
        let (l, ds) = params(t);
        traj.times.push(t);
        traj.lambdas.push(l);
        if let (Some(d), Some(d0)) = (traj.deltas.as_mut(), nominal_delta) {
            d.push(d0 + ds);
        }
        traj.classes.push(classify_group_deviation(&s, tol::THETA_SIM));
        traj.states.push(s);
    };
    record(&mut traj, 0.0, &z);

    let mut stepper = Stepper::new(m);
    let steps = (cfg.t_max / cfg.dt).round() as u64;
    let per_sample = ((cfg.sample_interval / cfg.dt).round() as u64).max(1);
    for n in 0..steps {
        let t = n as f64 * cfg.dt;
        let t1 = (n + 1) as f64 * cfg.dt;
        let drift_norm = stepper.step(&mut z, cfg.dt, params(t), params(t + 0.5 * cfg.dt), params(t1));
        let norm = z.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if !(norm <= cfg.divergence_bound) {
            return Err(Error::Diverged { t: t1, norm });
        }
        if t >= ramp_end && drift_norm < cfg.steady_tol {
            traj.converged = true;
            record(&mut traj, t1, &z);
            break;
        }
        if (n + 1) % per_sample == 0 || n + 1 == steps {
            record(&mut traj, t1, &z);
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Switchiness {
    Continuous,
    SwitchLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchReport {
    pub verdict: Switchiness,
    /// Largest change of `‖z‖` per unit time over windows of one time unit.
    pub metric: f64,
    /// Time at the start of the window attaining the metric.
    pub at: f64,
}

pub fn detect_switchiness(traj: &Trajectory) -> SwitchReport {
    detect_switchiness_with(traj, tol::SWITCH_THRESHOLD)
}

pub fn detect_switchiness_with(traj: &Trajectory, threshold: f64) -> SwitchReport {
    let norms: Vec<f64> = traj.states.iter().map(DeviationState::norm).collect();
    let t = &traj.times;
    let mut best = (0.0, t.first().copied().unwrap_or(0.0));
    let mut j = 0;
    for i in 0..t.len() {
        while j < t.len() && t[j] < t[i] + 1.0 - 1e-9 {
            j += 1;
        }
        if j >= t.len() {
            break;
        }
        let rate = (norms[j] - norms[i]).abs() / (t[j] - t[i]);
        if rate > best.0 {
            best = (rate, t[i]);
        }
    }
    SwitchReport {
        verdict: if best.0 > threshold { Switchiness::SwitchLike } else { Switchiness::Continuous },
        metric: best.0,
        at: best.1,
    }
}

/// Best match of `z` against the group orbits of the catalog lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxialMatch {
    pub label: String,
    pub alignment: f64,
}

/// Maximizes `|⟨z/‖z‖, g·v⟩|` over catalog lines `v` and `g ∈ S_Na × S_No`.
/// Agent permutations are optimized exactly by assignment; option
/// permutations are enumerated, up to a fixed cap.
pub fn nearest_axial(z: &DeviationState, catalog: &[AxialRecord]) -> Result<Option<AxialMatch>> {
    let n = z.norm();
    if n == 0.0 {
        return Err(Error::ZeroState);
    }
    let (na, no) = (z.na(), z.no());
    let zu = z.scale(1.0 / n);
    let mut best: Option<AxialMatch> = None;
    for r in catalog {
        if r.na() != na || r.no() != no {
            return Err(Error::DimensionMismatch { expected: crate::error::dims(na, no), got: crate::error::dims(r.na(), r.no()) });
        }
        let v = &r.fix_generator;
        let mut perm: Vec<usize> = (0..no).collect();
        let mut tried = 0;
        loop {
            // w[a][b] = ⟨row a of v permuted by τ, row b of z⟩.
            let w: Vec<f64> = (0..na)
                .flat_map(|a| {
                    let (zu, perm) = (&zu, &perm);
                    (0..na).map(move |b| (0..no).map(|j| v.get(a, j) * zu.get(b, perm[j])).sum::<f64>())
                })
                .collect();
            for sign in [1.0, -1.0] {
                let ints = Matrix::from_fn(na, na, |(a, b)| (sign * w[a * na + b] * 1e12).round() as i64);
                let (_, assign) = kuhn_munkres(&ints);
                let score: f64 = sign * assign.iter().enumerate().map(|(a, &b)| w[a * na + b]).sum::<f64>();
                if best.as_ref().is_none_or(|m| score > m.alignment + 1e-12) {
                    best = Some(AxialMatch { label: r.label(), alignment: score.min(1.0) });
                }
            }
            tried += 1;
            if tried >= tol::NEAREST_AXIAL_PERM_CAP || !next_permutation(&mut perm) {
                break;
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub init_id: String,
    /// `None` when the cell diverged.
    pub eq_norm: Option<f64>,
    pub class: String,
    pub nearest_axial: String,
    pub alignment: Option<f64>,
}

/// Relax to equilibrium at each λ on the grid, once per initial state,
/// warm-starting from the previous λ's equilibrium plus the initial state
/// (the kick keeps a chain from resting on an equilibrium that has just
/// lost stability). Initial states run in parallel; rows come back ordered
/// by λ, then by init.
pub fn sweep_bifurcation(
    m: &ModelInstance,
    lambdas: &[f64],
    inits: &[(String, DeviationState)],
    cfg: &SimConfig,
    catalog: &[AxialRecord],
) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("sweep grid must be strictly increasing".into()));
    }
    let chains: Vec<Result<Vec<SweepRow>>> = std::thread::scope(|s| {
        let handles: Vec<_> = inits
            .iter()
            .map(|(id, z0)| s.spawn(move || sweep_chain(m, lambdas, id, z0, cfg, catalog)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let chains: Vec<Vec<SweepRow>> = chains.into_iter().collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(lambdas.len() * inits.len());
    for li in 0..lambdas.len() {
        rows.extend(chains.iter().map(|c| c[li].clone()));
    }
    Ok(rows)
}

fn sweep_chain(
    m: &ModelInstance,
    lambdas: &[f64],
    id: &str,
    z0: &DeviationState,
    cfg: &SimConfig,
    catalog: &[AxialRecord],
) -> Result<Vec<SweepRow>> {
    let mut z = z0.clone();
    let mut rows = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let mut c = cfg.clone();
        c.sample_interval = cfg.t_max;
        match integrate(&m.with_lambda(l), &z, &c, None) {
            Ok(tr) => {
                let eq = tr.last().clone();
                let (label, alignment) = match nearest_axial(&eq, catalog) {
                    Ok(Some(a)) => (a.label, Some(a.alignment)),
                    _ => (String::new(), None),
                };
                rows.push(SweepRow {
                    lambda: l,
                    init_id: id.to_string(),
                    eq_norm: Some(eq.norm()),
                    class: classify_group_deviation(&eq, tol::THETA_SIM).to_string(),
                    nearest_axial: label,
                    alignment,
                });
                z = eq.add(z0);
            }
            Err(Error::Diverged { .. }) => {
                rows.push(SweepRow {
                    lambda: l,
                    init_id: id.to_string(),
                    eq_norm: None,
                    class: "diverged".into(),
                    nearest_axial: String::new(),
                    alignment: None,
                });
                z = z0.clone();
            }
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

/// Default sweep starts: each catalog line scaled to `scale`, plus `n_random`
/// random states of the same radius.
pub fn default_inits(catalog: &[AxialRecord], na: usize, no: usize, scale: f64, n_random: usize, seed: u64) -> Vec<(String, DeviationState)> {
    let mut out: Vec<(String, DeviationState)> =
        catalog.iter().map(|r| (r.label(), r.fix_generator.scale(scale))).collect();
    for i in 0..n_random {
        out.push((format!("random{}", i + 1), random_init(na, no, scale, seed.wrapping_add(i as u64))));
    }
    out
}

/// CSV `lambda,init_id,eq_norm,class,nearest_axial,alignment`.
pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["lambda", "init_id", "eq_norm", "class", "nearest_axial", "alignment"])?;
    for r in rows {
        out.write_record([
            fmt_num(r.lambda),
            r.init_id.clone(),
            r.eq_norm.map(fmt_num).unwrap_or_default(),
            r.class.clone(),
            r.nearest_axial.clone(),
            r.alignment.map(fmt_num).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axial::{catalog, Mode};
    use crate::group::{act, GroupElement};
    use crate::state::project_consensus;

    fn lambda_a(a: f64, b: f64, g: f64, d: f64, na: usize) -> f64 {
        1.0 / (a - b + (na as f64 - 1.0) * (g - d))
    }

    fn fig4_consensus(lambda: f64) -> ModelInstance {
        ModelInstance::homogeneous(17, 3, 0.0, -1.5, 0.2, 0.1, lambda).unwrap()
    }

    #[test]
    fn schedule_interpolates() {
        let s = Schedule::new(vec![(0.0, 1.0), (2.0, 3.0), (4.0, 3.0)]).unwrap();
        assert_eq!(s.at(-1.0), 1.0);
        assert_eq!(s.at(1.0), 2.0);
        assert_eq!(s.at(2.0), 3.0);
        assert_eq!(s.at(9.0), 3.0);
        assert!(Schedule::new(vec![(0.0, 1.0), (0.0, 2.0)]).is_err());
        assert!(Schedule::new(vec![]).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = SimConfig::new(10.0);
        assert!(c.validate().is_ok());
        c.dt = 1.0;
        assert!(c.validate().is_err());
        let bad: std::result::Result<SimConfig, _> = serde_json::from_str(r#"{"t_max": 1, "step": 0.1}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn random_init_is_in_ball() {
        for seed in 0..20 {
            let z = random_init(5, 3, 0.01, seed);
            assert!(z.norm() <= 0.01 + 1e-15);
            assert!(z.max_row_sum() < 1e-15);
        }
        assert_eq!(random_init(4, 3, 0.1, 7), random_init(4, 3, 0.1, 7));
    }

    #[test]
    fn zero_lambda_decays() {
        let m = ModelInstance::homogeneous(4, 3, 1.0, -1.0, 0.5, 0.2, 0.0).unwrap();
        let z0 = random_init(4, 3, 0.5, 1);
        let tr = integrate(&m, &z0, &SimConfig::new(20.0), None).unwrap();
        assert!(tr.last().norm() < 1e-6);
        assert!(tr.max_row_sum() <= 1e-9);
    }

    #[test]
    fn fixed_lambda_fig4_consensus() {
        let la = lambda_a(0.0, -1.5, 0.2, 0.1, 17);
        let m = fig4_consensus(la + 0.05);
        let tr = integrate(&m, &random_init(17, 3, 0.01, 3), &SimConfig::new(400.0), None).unwrap();
        assert_eq!(*tr.classes.last().unwrap(), GroupClass::Consensus);
    }

    #[test]
    fn fixed_lambda_fig4_dissensus() {
        let ld = 1.0 / (0.5 - 0.1 + 0.2);
        let m = ModelInstance::homogeneous(17, 3, 0.0, -0.5, 0.1, 0.2, ld + 0.05).unwrap();
        let tr = integrate(&m, &random_init(17, 3, 0.01, 3), &SimConfig::new(600.0), None).unwrap();
        assert!(matches!(tr.classes.last().unwrap(), GroupClass::Dissensus(_)), "{:?}", tr.classes.last());
        assert!(project_consensus(tr.last()).norm() <= 0.05);
    }

    #[test]
    fn outcomes_commute_with_group_action() {
        let m = ModelInstance::homogeneous(5, 3, 0.3, -1.0, 0.4, 0.1, 0.9).unwrap();
        let z0 = random_init(5, 3, 0.2, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = GroupElement::random(5, 3, &mut rng);
        let cfg = SimConfig::new(30.0);
        let a = integrate(&m, &z0, &cfg, None).unwrap();
        let b = integrate(&m, &act(&g, &z0).unwrap(), &cfg, None).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            assert!(act(&g, x).unwrap().sub(y).norm_inf() <= 1e-8);
        }
    }

    #[test]
    fn halving_dt_converges() {
        let m = fig4_consensus(0.5);
        let z0 = random_init(17, 3, 0.05, 5);
        let mut c = SimConfig::new(60.0);
        c.steady_tol = 1e-300;
        let a = integrate(&m, &z0, &c, None).unwrap();
        c.dt = 0.005;
        let b = integrate(&m, &z0, &c, None).unwrap();
        assert!(a.last().sub(b.last()).norm_inf() <= 1e-6);
    }

    #[test]
    fn stable_neutral_is_continuous() {
        let m = fig4_consensus(0.1);
        let tr = integrate(&m, &random_init(17, 3, 0.01, 1), &SimConfig::new(50.0), None).unwrap();
        let s = detect_switchiness(&tr);
        assert_eq!(s.verdict, Switchiness::Continuous);
        assert!(s.metric < 1e-2);
    }

    #[test]
    fn nearest_axial_recovers_orbit() {
        let cat = catalog(5, 3, Mode::Dissensus);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for r in &cat {
            let m = nearest_axial(&r.fix_generator, &cat).unwrap().unwrap();
            assert_eq!(m.label, r.label());
            assert!((m.alignment - 1.0).abs() < 1e-12);
            let g = GroupElement::random(5, 3, &mut rng);
            let moved = act(&g, &r.fix_generator).unwrap().scale(-3.0);
            let m = nearest_axial(&moved, &cat).unwrap().unwrap();
            assert_eq!(m.label, r.label());
            assert!((m.alignment - 1.0).abs() < 1e-12);
        }
        assert!(matches!(nearest_axial(&DeviationState::zeros(5, 3), &cat), Err(Error::ZeroState)));
    }

    #[test]
    fn sweep_rows_and_csv() {
        let la = lambda_a(0.0, -1.5, 0.2, 0.1, 6);
        let m = ModelInstance::homogeneous(6, 2, 0.0, -1.5, 0.2, 0.1, la).unwrap();
        let cat = catalog(6, 2, Mode::Consensus);
        let inits = default_inits(&cat, 6, 2, 0.01, 1, 4);
        let mut c = SimConfig::new(300.0);
        c.steady_tol = 1e-8;
        let rows = sweep_bifurcation(&m, &[la - 0.1, la + 0.1], &inits, &c, &cat).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[..2].iter().all(|r| r.eq_norm.unwrap() < 1e-6));
        let past = &rows[2];
        assert_eq!(past.init_id, "Sigma_p[p=1]");
        assert!(past.eq_norm.unwrap() > 0.05);
        assert!(past.alignment.unwrap() > 0.9);
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("lambda,init_id,eq_norm,class,nearest_axial,alignment\n"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn trajectory_csv_layout() {
        let m = fig4_consensus(0.1);
        let tr = integrate(&m, &random_init(17, 3, 0.01, 1), &SimConfig::new(3.0), None).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, 1).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,lambda,agent,opt,x_value,group_class"));
        assert_eq!(text.lines().count(), 1 + tr.times.len() * 51);
    }

    #[test]
    fn delta_schedule_needs_nominal_gains() {
        let m = fig4_consensus(0.3);
        let g = ModelInstance::general(m.tensor(), m.bias().to_vec(), 0.3, 0.5).unwrap();
        let ramp = RampSpec { lambda: Schedule::linear(0.0, 0.3, 1.0, 0.3).unwrap(), delta: Some(Schedule::linear(0.0, 0.1, 1.0, 0.0).unwrap()) };
        assert!(integrate(&g, &DeviationState::zeros(17, 3), &SimConfig::new(1.0), Some(&ramp)).is_err());
        assert!(integrate(&m, &DeviationState::zeros(17, 3), &SimConfig::new(1.0), Some(&ramp)).is_ok());
    }

    #[test]
    fn delta_shift_matches_rebuilt_model() {
        let m = ModelInstance::homogeneous(4, 3, 0.5, -1.0, 0.2, 0.1, 0.7).unwrap();
        let p = m.perturb(0.0, 0).unwrap().to_general();
        let shifted = ModelInstance::homogeneous(4, 3, 0.5, -1.0, 0.2, 0.25, 0.7).unwrap();
        let ramp = RampSpec { lambda: Schedule::linear(0.0, 0.7, 5.0, 0.7).unwrap(), delta: Some(Schedule::linear(0.0, 0.25, 5.0, 0.25).unwrap()) };
        let z0 = random_init(4, 3, 0.3, 2);
        let c = SimConfig::new(5.0);
        for mm in [&m, &p] {
            let a = integrate(mm, &z0, &c, Some(&ramp)).unwrap();
            let b = integrate(&shifted, &z0, &c, None).unwrap();
            assert!(a.last().sub(b.last()).norm_inf() < 1e-12);
        }
    }
}
