//! Axial subgroups of `S_Na × S_No` on the consensus and dissensus spaces,
//! with fixed-point generators, plus the quadratic equivariant.
//!
//! Every record carries generators for its full isotropy subgroup, so the
//! subgroup they generate fixes exactly the line spanned by `fix_generator`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::group::{self, named, orbit_fixed_subspace, symmetric_generators, GroupElement, Perm, SubgroupSpec};
use crate::linalg::{self, Subspace};
use crate::state::{project_consensus, project_dissensus, DeviationState};
use crate::tol;

pub mod oracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Consensus,
    Dissensus,
}

impl Mode {
    pub fn subspace(self) -> Subspace {
        match self {
            Mode::Consensus => Subspace::Consensus,
            Mode::Dissensus => Subspace::Dissensus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completeness {
    Proven,
    PossiblyIncomplete,
}

/// Stability of the bifurcating branch near the bifurcation point, as
/// predicted by the classification theorems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StableHint {
    PotentiallyStable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxialRecord {
    pub name: String,
    pub mode: Mode,
    pub params: BTreeMap<String, usize>,
    pub generators: Vec<GroupElement>,
    /// Unit norm, first nonzero coordinate positive.
    pub fix_generator: DeviationState,
    pub stable_hint: StableHint,
    pub completeness: Completeness,
}

impl AxialRecord {
    fn new(
        name: &str,
        mode: Mode,
        params: &[(&str, usize)],
        generators: Vec<GroupElement>,
        rows: Vec<Vec<f64>>,
        stable_hint: StableHint,
    ) -> Self {
        let na = rows.len();
        let no = rows[0].len();
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        AxialRecord {
            name: name.to_string(),
            mode,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            generators,
            fix_generator: DeviationState::from_raw(na, no, normalize(data)),
            stable_hint,
            completeness: Completeness::Proven,
        }
    }

    pub fn na(&self) -> usize {
        self.fix_generator.na()
    }

    pub fn no(&self) -> usize {
        self.fix_generator.no()
    }

    /// Label with parameters, e.g. `Sigma_x_m[m=2]`.
    pub fn label(&self) -> String {
        if self.params.is_empty() {
            return self.name.clone();
        }
        let p: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("{}[{}]", self.name, p.join(","))
    }

    /// Swap the roles of agents and options.
    pub fn transposed(&self) -> AxialRecord {
        let (na, no) = (self.na(), self.no());
        let mut data = vec![0.0; na * no];
        for i in 0..na {
            for j in 0..no {
                data[j * na + i] = self.fix_generator.get(i, j);
            }
        }
        AxialRecord {
            name: self.name.clone(),
            mode: self.mode,
            params: self.params.clone(),
            generators: self.generators.iter().map(|g| GroupElement::new(g.tau.clone(), g.sigma.clone())).collect(),
            fix_generator: DeviationState::from_raw(no, na, normalize(data)),
            stable_hint: self.stable_hint,
            completeness: self.completeness,
        }
    }
}

/// Unit norm with the first nonzero coordinate positive.
pub fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let n = linalg::norm(&v);
    let sign = v.iter().find(|x| x.abs() > 1e-12).map_or(1.0, |x| x.signum());
    v.iter_mut().for_each(|x| *x *= sign / n);
    v
}

fn agents(no: usize, perms: Vec<Perm>) -> Vec<GroupElement> {
    perms.into_iter().map(|p| GroupElement::agents(p, no)).collect()
}

fn options(na: usize, perms: Vec<Perm>) -> Vec<GroupElement> {
    perms.into_iter().map(|p| GroupElement::options(na, p)).collect()
}

fn range(a: usize, b: usize) -> Vec<usize> {
    (a..b).collect()
}

/// `(1,…,1, l/(l−k),…)` with `l` leading ones.
fn split_vector(l: usize, k: usize) -> Vec<f64> {
    let tail = l as f64 / (l as f64 - k as f64);
    (0..k).map(|j| if j < l { 1.0 } else { tail }).collect()
}

/// Cycle the first `s` entries forward `times` times: `(x_s, x_1, …)`.
fn cycle_forward(v: &[f64], s: usize, times: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    for _ in 0..times {
        let prev = out.clone();
        for j in 0..s {
            out[(j + 1) % s] = prev[j];
        }
    }
    out
}

/// Consensus axials `Σ_p = S_p × S_{No−p}`, `1 ≤ p ≤ ⌊No/2⌋`.
pub fn consensus_axials(na: usize, no: usize) -> Vec<AxialRecord> {
    let hint = if no == 2 { StableHint::PotentiallyStable } else { StableHint::Unstable };
    (1..=no / 2)
        .map(|p| {
            let v: Vec<f64> = (0..no).map(|j| if j < p { (no - p) as f64 / p as f64 } else { -1.0 }).collect();
            let mut gens: Vec<GroupElement> = agents(no, symmetric_generators(na, &range(0, na)));
            gens.extend(options(na, symmetric_generators(no, &range(0, p))));
            gens.extend(options(na, symmetric_generators(no, &range(p, no))));
            AxialRecord::new("Sigma_p", Mode::Consensus, &[("p", p)], gens, vec![v; na], hint)
        })
        .collect()
}

/// Dissensus axials when one side has two elements: `Σ_k` and `T_l`.
/// `na == 2` or `no == 2` is required.
pub fn dissensus_axials_two(na: usize, no: usize) -> Vec<AxialRecord> {
    assert!(na == 2 || no == 2, "one of na, no must be 2");
    if no != 2 {
        return dissensus_axials_two(no, na).iter().map(AxialRecord::transposed).collect();
    }
    let n = na;
    let row = |u: f64| vec![u, -u];
    let mut out = Vec::new();
    for k in (1..n).filter(|&k| 2 * k < n) {
        let u = split_vector(k, n);
        let mut gens: Vec<GroupElement> = agents(2, symmetric_generators(n, &range(0, k)));
        gens.extend(agents(2, symmetric_generators(n, &range(k, n))));
        let hint = if 3 * k > n { StableHint::PotentiallyStable } else { StableHint::Unstable };
        out.push(AxialRecord::new("Sigma_k", Mode::Dissensus, &[("k", k)], gens, u.into_iter().map(row).collect(), hint));
    }
    for l in 1..=n / 2 {
        let u: Vec<f64> = (0..n).map(|i| if i < l { 1.0 } else if i < 2 * l { -1.0 } else { 0.0 }).collect();
        let mut gens: Vec<GroupElement> = agents(2, symmetric_generators(n, &range(0, l)));
        gens.extend(agents(2, symmetric_generators(n, &range(l, 2 * l))));
        gens.extend(agents(2, symmetric_generators(n, &range(2 * l, n))));
        gens.push(GroupElement::new(named::block_swap(n, l), named::kappa(2)));
        out.push(AxialRecord::new(
            "T_l",
            Mode::Dissensus,
            &[("l", l)],
            gens,
            u.into_iter().map(row).collect(),
            StableHint::Unstable,
        ));
    }
    out
}

/// Dissensus axials when one side has three elements: `Σ^×_m`, `Σ^{Z2}`
/// (even `n` only) and `Σ^{S3}_m`. `na == 3` or `no == 3` is required.
pub fn dissensus_axials_three(na: usize, no: usize) -> Vec<AxialRecord> {
    assert!(na == 3 || no == 3, "one of na, no must be 3");
    if no != 3 {
        return dissensus_axials_three(no, na).iter().map(AxialRecord::transposed).collect();
    }
    let n = na;
    let hint = if n >= 3 { StableHint::Unstable } else { StableHint::PotentiallyStable };
    let v0 = [1.0, -1.0, 0.0];
    let v1 = [1.0, -0.5, -0.5];
    let v2 = [-0.5, 1.0, -0.5];
    let v3 = [-0.5, -0.5, 1.0];
    let mut out = Vec::new();
    for m in (1..=n / 2).filter(|&m| m < n) {
        let f = m as f64 / (m as f64 - n as f64);
        let rows = (0..n).map(|i| if i < m { v3.to_vec() } else { v3.iter().map(|x| f * x).collect() }).collect();
        let mut gens: Vec<GroupElement> = agents(3, symmetric_generators(n, &range(0, m)));
        gens.extend(agents(3, symmetric_generators(n, &range(m, n))));
        gens.push(GroupElement::options(n, named::kappa(3)));
        out.push(AxialRecord::new("Sigma_x_m", Mode::Dissensus, &[("m", m)], gens, rows, hint));
    }
    if n % 2 == 0 {
        let h = n / 2;
        let rows = (0..n).map(|i| if i < h { v0.to_vec() } else { v0.iter().map(|x| -x).collect() }).collect();
        let mut gens: Vec<GroupElement> = agents(3, symmetric_generators(n, &range(0, h)));
        gens.extend(agents(3, symmetric_generators(n, &range(h, n))));
        gens.push(named::rho(n, 3, h));
        out.push(AxialRecord::new("Sigma_Z2", Mode::Dissensus, &[], gens, rows, hint));
    }
    for m in (1..=n / 3).filter(|&m| m >= 1) {
        let rows = (0..n)
            .map(|i| match i / m {
                0 => v1.to_vec(),
                1 => v2.to_vec(),
                2 => v3.to_vec(),
                _ => vec![0.0; 3],
            })
            .collect();
        let mut gens: Vec<GroupElement> = Vec::new();
        for b in 0..3 {
            gens.extend(agents(3, symmetric_generators(n, &range(b * m, (b + 1) * m))));
        }
        gens.extend(agents(3, symmetric_generators(n, &range(3 * m, n))));
        gens.push(named::rho(n, 3, m));
        gens.push(named::nu(n, m));
        out.push(AxialRecord::new("Sigma_S3_m", Mode::Dissensus, &[("m", m)], gens, rows, hint));
    }
    out
}

/// The list of the general classification theorem for `S_n × S_k` with the
/// first factor acting on agents, taken literally.
pub fn general_theorem_axials(n: usize, k: usize) -> Vec<AxialRecord> {
    let hint = if n >= 3 && k >= 3 { StableHint::Unstable } else { StableHint::PotentiallyStable };
    let mut out = Vec::new();
    // Products A ×̇ B.
    for m in (1..=n / 2).filter(|&m| m < n) {
        for l in (1..=k / 2).filter(|&l| l < k) {
            let vl = split_vector(l, k);
            let f = m as f64 / (m as f64 - n as f64);
            let rows = (0..n).map(|i| if i < m { vl.clone() } else { vl.iter().map(|x| f * x).collect() }).collect();
            let mut gens: Vec<GroupElement> = agents(k, symmetric_generators(n, &range(0, m)));
            gens.extend(agents(k, symmetric_generators(n, &range(m, n))));
            gens.extend(options(n, symmetric_generators(k, &range(0, l))));
            gens.extend(options(n, symmetric_generators(k, &range(l, k))));
            if 2 * m == n && 2 * l == k {
                gens.push(GroupElement::new(named::block_swap(n, m), named::block_swap(k, l)));
            }
            out.push(AxialRecord::new("AxB", Mode::Dissensus, &[("l", l), ("m", m)], gens, rows, hint));
        }
    }
    // Graph subgroups onto S_s, s < k, with n = s·m.
    for s in (2..k).filter(|s| n % s == 0) {
        let m = n / s;
        let mut v0 = vec![0.0; k];
        v0[0] = -(s as f64 - 1.0);
        v0[1..s].iter_mut().for_each(|x| *x = 1.0);
        let rows = (0..n).map(|i| cycle_forward(&v0, s, i / m)).collect();
        let mut gens: Vec<GroupElement> = Vec::new();
        for b in 0..s {
            gens.extend(agents(k, symmetric_generators(n, &range(b * m, (b + 1) * m))));
        }
        gens.extend(options(n, symmetric_generators(k, &range(s, k))));
        gens.push(GroupElement::new(named::block_swap(n, m), named::kappa(k)));
        gens.push(named::nu_s(n, k, m, s));
        out.push(AxialRecord::new("Sigma_Ss", Mode::Dissensus, &[("m", m), ("s", s)], gens, rows, hint));
    }
    // Graph subgroups onto S_k.
    for m in 1..=n / k {
        let mut v1 = vec![1.0; k];
        v1[0] = -(k as f64 - 1.0);
        let rows = (0..n).map(|i| if i < k * m { cycle_forward(&v1, k, i / m) } else { vec![0.0; k] }).collect();
        let mut gens: Vec<GroupElement> = Vec::new();
        for b in 0..k {
            gens.extend(agents(k, symmetric_generators(n, &range(b * m, (b + 1) * m))));
        }
        gens.extend(agents(k, symmetric_generators(n, &range(k * m, n))));
        gens.push(GroupElement::new(named::block_swap(n, m), named::kappa(k)));
        gens.push(named::nu_s(n, k, m, k));
        out.push(AxialRecord::new("Sigma_Sk_m", Mode::Dissensus, &[("m", m)], gens, rows, hint));
    }
    out
}

/// The theorem's list applied with either factor on agents, merged and
/// reduced to one record per conjugacy class.
pub fn general_theorem_axials_symmetrized(n: usize, k: usize) -> Vec<AxialRecord> {
    let mut all = general_theorem_axials(n, k);
    all.extend(general_theorem_axials(k, n).iter().map(AxialRecord::transposed));
    dedupe_by_class(all)
}

/// Dissensus axials for general sizes. Sizes with a side of two or three use
/// the complete specialized lists; otherwise the general list is returned
/// and marked possibly incomplete.
pub fn dissensus_axials_general(n: usize, k: usize) -> Vec<AxialRecord> {
    if n < 2 || k < 2 {
        return Vec::new();
    }
    if n == 2 || k == 2 {
        return dissensus_axials_two(n, k);
    }
    if n == 3 || k == 3 {
        return dissensus_axials_three(n, k);
    }
    let mut out = general_theorem_axials_symmetrized(n, k);
    out.iter_mut().for_each(|r| r.completeness = Completeness::PossiblyIncomplete);
    out
}

/// Catalog for the given mode and sizes.
pub fn catalog(na: usize, no: usize, mode: Mode) -> Vec<AxialRecord> {
    match mode {
        Mode::Consensus => consensus_axials(na, no),
        Mode::Dissensus => dissensus_axials_general(na, no),
    }
}

/// Canonical key of the Γ-orbit of the line spanned by `v`: the smallest
/// sorted row list over option permutations and both signs. Exhaustive in
/// the option permutations, so meant for `No ≤ 7`.
pub fn line_class_key(v: &DeviationState) -> Vec<Vec<i64>> {
    let (na, no) = (v.na(), v.no());
    let unit = normalize(v.as_slice().to_vec());
    let q = |x: f64| (x * 1e8).round() as i64;
    let mut best: Option<Vec<Vec<i64>>> = None;
    let mut perm: Vec<usize> = (0..no).collect();
    loop {
        for sign in [1.0, -1.0] {
            let mut rows: Vec<Vec<i64>> =
                (0..na).map(|i| perm.iter().map(|&j| q(sign * unit[i * no + j])).collect()).collect();
            rows.sort();
            if best.as_ref().is_none_or(|b| rows < *b) {
                best = Some(rows);
            }
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best.expect("at least one permutation")
}

pub(crate) fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Keep the first record of each conjugacy class.
pub fn dedupe_by_class(records: Vec<AxialRecord>) -> Vec<AxialRecord> {
    let mut seen: HashMap<Vec<Vec<i64>>, ()> = HashMap::new();
    records.into_iter().filter(|r| seen.insert(line_class_key(&r.fix_generator), ()).is_none()).collect()
}

/// Order of the isotropy subgroup of `v` in `S_Na × S_No`, counted by
/// option permutations and row multiplicities.
pub fn stabilizer_order(v: &DeviationState) -> u128 {
    let (na, no) = (v.na(), v.no());
    let q = |x: f64| (x * 1e9).round() as i64;
    let rows: Vec<Vec<i64>> = (0..na).map(|i| v.row(i).iter().map(|&x| q(x)).collect()).collect();
    let mut counts: HashMap<Vec<i64>, u128> = HashMap::new();
    for r in &rows {
        *counts.entry(r.clone()).or_default() += 1;
    }
    let fact = |c: u128| (1..=c).product::<u128>();
    let sigma_count: u128 = counts.values().map(|&c| fact(c)).product();
    let mut total = 0u128;
    let mut perm: Vec<usize> = (0..no).collect();
    loop {
        // Row r is sent to a row equal to τ·r, i.e. (τ·r)[τ(j)] = r[j].
        let ok = counts.iter().all(|(r, &c)| {
            let mut img = vec![0i64; no];
            for j in 0..no {
                img[perm[j]] = r[j];
            }
            counts.get(&img) == Some(&c)
        });
        if ok {
            total += sigma_count;
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    total
}

/// Outcome of the per-record checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordCheck {
    pub label: String,
    /// Largest `‖g·v − v‖∞` over the generators.
    pub generator_residual: f64,
    pub fix_dim: usize,
    /// True when the dimension came from the averaging projector over an
    /// enumerated subgroup, false when from coordinate orbits.
    pub reynolds: bool,
    /// Norm of the component outside the record's subspace.
    pub subspace_residual: f64,
    pub generated_order: u128,
    pub stabilizer_order: u128,
}

impl RecordCheck {
    pub fn passes(&self) -> bool {
        self.generator_residual <= 1e-12 && self.fix_dim == 1 && self.subspace_residual <= 1e-12
    }

    pub fn is_maximal(&self) -> bool {
        self.generated_order == self.stabilizer_order
    }
}

pub fn check_record(r: &AxialRecord) -> Result<RecordCheck> {
    let (na, no) = (r.na(), r.no());
    let v = &r.fix_generator;
    let generator_residual = r
        .generators
        .iter()
        .map(|g| {
            let gv = g.act_slice(v.as_slice());
            gv.iter().zip(v.as_slice()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        })
        .fold(0.0, f64::max);
    let generated_order = group::subgroup_order(na, no, &r.generators);
    let which = r.mode.subspace();
    let (fix_dim, reynolds) = if generated_order <= tol::GROUP_ELEMENT_CAP as u128 {
        let s = SubgroupSpec::new(na, no, r.generators.clone())?;
        (group::reynolds_fixed_subspace(&s, which).dim(), true)
    } else {
        (orbit_fixed_subspace(na, no, &r.generators, which).dim(), false)
    };
    let outside = match r.mode {
        Mode::Consensus => project_dissensus(v),
        Mode::Dissensus => project_consensus(v),
    };
    Ok(RecordCheck {
        label: r.label(),
        generator_residual,
        fix_dim,
        reynolds,
        subspace_residual: outside.norm(),
        generated_order,
        stabilizer_order: stabilizer_order(v),
    })
}

/// `Na·F_i − Σ_k F_k` with `F_i(Z_i)_j = No·z_ij² − Σ_l z_il²`.
pub fn quadratic_equivariant(z: &DeviationState) -> DeviationState {
    let (na, no) = (z.na(), z.no());
    let mut f = vec![0.0; na * no];
    for i in 0..na {
        let r = z.row(i);
        let sq: f64 = r.iter().map(|x| x * x).sum();
        for j in 0..no {
            f[i * no + j] = no as f64 * r[j] * r[j] - sq;
        }
    }
    let mut col = vec![0.0; no];
    for r in f.chunks(no) {
        col.iter_mut().zip(r).for_each(|(c, x)| *c += x);
    }
    let out = f.iter().enumerate().map(|(c, x)| na as f64 * x - col[c % no]).collect();
    DeviationState::from_raw(na, no, out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorJson {
    pub sigma: Perm,
    pub tau: Perm,
}

/// Catalog export layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxialRecordJson {
    pub name: String,
    pub mode: Mode,
    pub params: BTreeMap<String, usize>,
    pub generators: Vec<GeneratorJson>,
    pub fix_vector: Vec<Vec<f64>>,
    pub stable_hint: StableHint,
    pub completeness: Completeness,
}

impl From<&AxialRecord> for AxialRecordJson {
    fn from(r: &AxialRecord) -> Self {
        AxialRecordJson {
            name: r.name.clone(),
            mode: r.mode,
            params: r.params.clone(),
            generators: r.generators.iter().map(|g| GeneratorJson { sigma: g.sigma.clone(), tau: g.tau.clone() }).collect(),
            fix_vector: r.fix_generator.rows(),
            stable_hint: r.stable_hint,
            completeness: r.completeness,
        }
    }
}
