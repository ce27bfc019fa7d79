//! Opinion states on the product of simplices, deviations from the neutral
//! point, the consensus/dissensus splitting and the threshold classifiers.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::tol;

/// Row-major `na × no` matrix shared by both state types.
#[derive(Debug, Clone, PartialEq)]
struct Grid {
    na: usize,
    no: usize,
    data: Vec<f64>,
}

impl Grid {
    fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let na = rows.len();
        if na == 0 {
            return Err(Error::InvalidArgument("state needs at least one agent".into()));
        }
        let no = rows[0].len();
        if no < 2 {
            return Err(Error::InvalidArgument("state needs at least two options".into()));
        }
        let mut data = Vec::with_capacity(na * no);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != no {
                return Err(Error::DimensionMismatch {
                    expected: format!("row {i} of length {no}"),
                    got: r.len().to_string(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Grid { na, no, data })
    }

    fn from_flat(na: usize, no: usize, data: Vec<f64>) -> Result<Self> {
        if na == 0 || no < 2 {
            return Err(Error::InvalidArgument(format!(
                "need na >= 1 and no >= 2, got {}",
                dims(na, no)
            )));
        }
        if data.len() != na * no {
            return Err(Error::DimensionMismatch {
                expected: format!("{} values", na * no),
                got: data.len().to_string(),
            });
        }
        Ok(Grid { na, no, data })
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.no..(i + 1) * self.no]
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.no).map(<[f64]>::to_vec).collect()
    }
}

/// Na×No matrix of nonnegative opinion weights, each row summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionState(Grid);

/// Na×No matrix with zero row sums: a tangent vector at the neutral point.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationState(Grid);

impl OpinionState {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::validated(Grid::from_rows(rows)?, tol::ROW_SUM)
    }

    pub fn from_flat(na: usize, no: usize, data: Vec<f64>) -> Result<Self> {
        Self::validated(Grid::from_flat(na, no, data)?, tol::ROW_SUM)
    }

    /// Validate against a caller-chosen row-sum tolerance.
    pub fn from_rows_with_tol(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        Self::validated(Grid::from_rows(rows)?, tol)
    }

    /// The state that gives `1/no` to every option.
    pub fn neutral(na: usize, no: usize) -> Result<Self> {
        Self::from_flat(na, no, vec![1.0 / no as f64; na * no])
    }

    fn validated(g: Grid, tol: f64) -> Result<Self> {
        for i in 0..g.na {
            let r = g.row(i);
            let sum: f64 = r.iter().sum();
            let min = r.iter().copied().fold(f64::INFINITY, f64::min);
            if (sum - 1.0).abs() > tol || min < -tol || !sum.is_finite() {
                return Err(Error::NotOnSimplex { row: i, sum, min });
            }
        }
        Ok(OpinionState(g))
    }

    pub fn na(&self) -> usize {
        self.0.na
    }
    pub fn no(&self) -> usize {
        self.0.no
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.data[i * self.0.no + j]
    }
    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.0.data
    }
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows()
    }
}

impl DeviationState {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::validated(Grid::from_rows(rows)?, tol::ROW_SUM)
    }

    pub fn from_flat(na: usize, no: usize, data: Vec<f64>) -> Result<Self> {
        Self::validated(Grid::from_flat(na, no, data)?, tol::ROW_SUM)
    }

    pub fn from_rows_with_tol(rows: &[Vec<f64>], tol: f64) -> Result<Self> {
        Self::validated(Grid::from_rows(rows)?, tol)
    }

    /// Build from arbitrary values by subtracting each row's mean.
    pub fn centered(na: usize, no: usize, mut data: Vec<f64>) -> Result<Self> {
        Grid::from_flat(na, no, data.clone())?;
        center_rows(&mut data, no);
        Ok(DeviationState(Grid { na, no, data }))
    }

    pub fn zeros(na: usize, no: usize) -> Self {
        assert!(na >= 1 && no >= 2, "need na >= 1 and no >= 2");
        DeviationState(Grid { na, no, data: vec![0.0; na * no] })
    }

    fn validated(g: Grid, tol: f64) -> Result<Self> {
        for i in 0..g.na {
            let sum: f64 = g.row(i).iter().sum();
            if sum.abs() > tol || !sum.is_finite() {
                return Err(Error::NotTangent { row: i, sum });
            }
        }
        Ok(DeviationState(g))
    }

    /// Wrap data the caller guarantees is already centered.
    pub(crate) fn from_raw(na: usize, no: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), na * no);
        DeviationState(Grid { na, no, data })
    }

    pub fn na(&self) -> usize {
        self.0.na
    }
    pub fn no(&self) -> usize {
        self.0.no
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.data[i * self.0.no + j]
    }
    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }
    pub fn as_slice(&self) -> &[f64] {
        &self.0.data
    }
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows()
    }
    pub fn into_vec(self) -> Vec<f64> {
        self.0.data
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn dot(&self, other: &DeviationState) -> f64 {
        self.0.data.iter().zip(&other.0.data).map(|(a, b)| a * b).sum()
    }

    pub fn row_norm(&self, i: usize) -> f64 {
        self.row(i).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute row sum; zero up to rounding for a valid state.
    pub fn max_row_sum(&self) -> f64 {
        self.0
            .data
            .chunks(self.0.no)
            .map(|r| r.iter().sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> DeviationState {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &DeviationState) -> DeviationState {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DeviationState) -> DeviationState {
        self.zip(other, |a, b| a - b)
    }

    pub fn same_shape(&self, other: &DeviationState) -> bool {
        self.na() == other.na() && self.no() == other.no()
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> DeviationState {
        DeviationState::from_raw(self.na(), self.no(), self.0.data.iter().map(|&v| f(v)).collect())
    }

    fn zip(&self, other: &DeviationState, f: impl Fn(f64, f64) -> f64) -> DeviationState {
        assert!(self.same_shape(other), "shape mismatch");
        let data = self.0.data.iter().zip(&other.0.data).map(|(&a, &b)| f(a, b)).collect();
        DeviationState::from_raw(self.na(), self.no(), data)
    }

    /// Across-agent mean row.
    pub fn mean_row(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.no()];
        for r in self.0.data.chunks(self.no()) {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        let na = self.na() as f64;
        m.iter_mut().for_each(|v| *v /= na);
        m
    }
}

pub(crate) fn center_rows(data: &mut [f64], no: usize) {
    for r in data.chunks_mut(no) {
        let mean = r.iter().sum::<f64>() / no as f64;
        r.iter_mut().for_each(|v| *v -= mean);
    }
}

/// `x − O`, with `O` the neutral point.
pub fn to_deviation(x: &OpinionState) -> DeviationState {
    let o = 1.0 / x.no() as f64;
    let mut data: Vec<f64> = x.as_slice().iter().map(|v| v - o).collect();
    // Rows of x sum to 1 within tolerance; recentre so the result is exact.
    center_rows(&mut data, x.no());
    DeviationState::from_raw(x.na(), x.no(), data)
}

/// `z + O`; fails if any entry lands outside `[0, 1]`.
pub fn to_simplex(z: &DeviationState) -> Result<OpinionState> {
    to_simplex_with_tol(z, tol::ROW_SUM)
}

pub fn to_simplex_with_tol(z: &DeviationState, tol: f64) -> Result<OpinionState> {
    let o = 1.0 / z.no() as f64;
    let mut data = Vec::with_capacity(z.as_slice().len());
    for i in 0..z.na() {
        for j in 0..z.no() {
            let v = z.get(i, j) + o;
            if v < -tol || v > 1.0 + tol {
                return Err(Error::OutOfSimplex { row: i, col: j, value: v });
            }
            data.push(v.clamp(0.0, 1.0));
        }
    }
    Ok(OpinionState(Grid { na: z.na(), no: z.no(), data }))
}

/// Replace every row by the across-agent mean row.
pub fn project_consensus(z: &DeviationState) -> DeviationState {
    let m = z.mean_row();
    let data = (0..z.na()).flat_map(|_| m.iter().copied()).collect();
    DeviationState::from_raw(z.na(), z.no(), data)
}

/// `z − project_consensus(z)`.
pub fn project_dissensus(z: &DeviationState) -> DeviationState {
    z.sub(&project_consensus(z))
}

/// Per-agent opinion tag. Option indices are zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentClass {
    Unopinionated,
    Favors(usize),
    Conflicted(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DissensusKind {
    Uniform,
    ModerateExtremist,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupClass {
    Unopinionated,
    Consensus,
    Agreement,
    Dissensus(DissensusKind),
    Disagreement,
}

impl fmt::Display for AgentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentClass::Unopinionated => write!(f, "unopinionated"),
            AgentClass::Favors(j) => write!(f, "favors({})", j + 1),
            AgentClass::Conflicted(s) => {
                let labels: Vec<String> = s.iter().map(|j| (j + 1).to_string()).collect();
                write!(f, "conflicted({})", labels.join("|"))
            }
        }
    }
}

impl fmt::Display for GroupClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GroupClass::Unopinionated => "unopinionated",
            GroupClass::Consensus => "consensus",
            GroupClass::Agreement => "agreement",
            GroupClass::Dissensus(DissensusKind::Uniform) => "dissensus_uniform",
            GroupClass::Dissensus(DissensusKind::ModerateExtremist) => "dissensus_moderate_extremist",
            GroupClass::Dissensus(DissensusKind::Other) => "dissensus_other",
            GroupClass::Disagreement => "disagreement",
        };
        f.write_str(s)
    }
}

/// Classify one agent from its deviation row.
pub fn classify_deviation_row(z_row: &[f64], theta: f64) -> AgentClass {
    let norm = z_row.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= theta {
        return AgentClass::Unopinionated;
    }
    let max = z_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let favored: Vec<usize> = (0..z_row.len()).filter(|&j| z_row[j] >= max - theta).collect();
    if favored.len() == 1 {
        AgentClass::Favors(favored[0])
    } else {
        AgentClass::Conflicted(favored)
    }
}

/// Classify one agent from its simplex row.
pub fn classify_agent(x_row: &[f64], theta: f64) -> AgentClass {
    let o = 1.0 / x_row.len() as f64;
    let z: Vec<f64> = x_row.iter().map(|v| v - o).collect();
    classify_deviation_row(&z, theta)
}

pub fn classify_group(x: &OpinionState, theta: f64) -> GroupClass {
    classify_group_deviation(&to_deviation(x), theta)
}

/// Group classification working directly on deviations.
pub fn classify_group_deviation(z: &DeviationState, theta: f64) -> GroupClass {
    let na = z.na();
    let tags: Vec<AgentClass> = (0..na).map(|i| classify_deviation_row(z.row(i), theta)).collect();
    if tags.iter().all(|t| *t == AgentClass::Unopinionated) {
        return GroupClass::Unopinionated;
    }
    let all_agree = tags.iter().all(|t| *t == tags[0]);
    if all_agree {
        // tags[0] is opinionated here, so every agent is.
        let close = (0..na).all(|i| (i + 1..na).all(|j| row_dist(z, i, j) <= theta));
        return if close { GroupClass::Consensus } else { GroupClass::Agreement };
    }
    let mean = z.mean_row();
    let mean_norm = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
    if mean_norm <= theta {
        GroupClass::Dissensus(dissensus_kind(z, theta))
    } else {
        GroupClass::Disagreement
    }
}

fn row_dist(z: &DeviationState, i: usize, j: usize) -> f64 {
    z.row(i).iter().zip(z.row(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Single-linkage clusters of agents at link distance `theta`, in order of
/// their smallest member.
pub fn cluster_agents(z: &DeviationState, theta: f64) -> Vec<Vec<usize>> {
    let na = z.na();
    let mut label: Vec<usize> = (0..na).collect();
    fn find(l: &mut [usize], mut a: usize) -> usize {
        while l[a] != a {
            l[a] = l[l[a]];
            a = l[a];
        }
        a
    }
    for i in 0..na {
        for j in i + 1..na {
            if row_dist(z, i, j) <= theta {
                let (ri, rj) = (find(&mut label, i), find(&mut label, j));
                if ri != rj {
                    label[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; na];
    for i in 0..na {
        let r = find(&mut label, i);
        match root_of[r] {
            Some(c) => clusters[c].push(i),
            None => {
                root_of[r] = Some(clusters.len());
                clusters.push(vec![i]);
            }
        }
    }
    clusters
}

/// Size and centroid norm of each opinionated cluster.
pub fn opinionated_clusters(z: &DeviationState, theta: f64) -> Vec<(usize, f64)> {
    cluster_agents(z, theta)
        .into_iter()
        .filter_map(|c| {
            let mut centroid = vec![0.0; z.no()];
            for &i in &c {
                for (a, b) in centroid.iter_mut().zip(z.row(i)) {
                    *a += b;
                }
            }
            let n = c.len() as f64;
            let norm = centroid.iter().map(|v| (v / n) * (v / n)).sum::<f64>().sqrt();
            (norm > theta).then_some((c.len(), norm))
        })
        .collect()
}

fn dissensus_kind(z: &DeviationState, theta: f64) -> DissensusKind {
    let cl = opinionated_clusters(z, theta);
    if cl.len() >= 2 {
        let (smin, smax) = cl.iter().fold((usize::MAX, 0), |(a, b), c| (a.min(c.0), b.max(c.0)));
        let (nmin, nmax) = cl.iter().fold((f64::INFINITY, 0.0f64), |(a, b), c| (a.min(c.1), b.max(c.1)));
        if smax - smin <= 1 && nmax - nmin <= theta {
            return DissensusKind::Uniform;
        }
    }
    if cl.len() == 2 && cl[0].0 != cl[1].0 {
        let (small, large) = if cl[0].0 < cl[1].0 { (cl[0], cl[1]) } else { (cl[1], cl[0]) };
        if small.1 > large.1 {
            return DissensusKind::ModerateExtremist;
        }
    }
    DissensusKind::Other
}

/// JSON form `{na, no, values}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub na: usize,
    pub no: usize,
    pub values: Vec<Vec<f64>>,
}

impl StateJson {
    fn check(&self) -> Result<()> {
        if self.values.len() != self.na || self.values.iter().any(|r| r.len() != self.no) {
            return Err(Error::Schema(format!(
                "values do not match declared shape {}",
                dims(self.na, self.no)
            )));
        }
        Ok(())
    }
}

impl From<&DeviationState> for StateJson {
    fn from(z: &DeviationState) -> Self {
        StateJson { na: z.na(), no: z.no(), values: z.rows() }
    }
}

impl From<&OpinionState> for StateJson {
    fn from(x: &OpinionState) -> Self {
        StateJson { na: x.na(), no: x.no(), values: x.rows() }
    }
}

impl TryFrom<StateJson> for DeviationState {
    type Error = Error;
    fn try_from(s: StateJson) -> Result<Self> {
        s.check()?;
        DeviationState::from_rows(&s.values)
    }
}

impl TryFrom<StateJson> for OpinionState {
    type Error = Error;
    fn try_from(s: StateJson) -> Result<Self> {
        s.check()?;
        OpinionState::from_rows(&s.values)
    }
}

/// Write rows as CSV with header `agent,opt1..optNo`; agents are 1-based.
pub fn write_rows_csv<W: Write>(w: W, rows: &[Vec<f64>]) -> Result<()> {
    let no = rows.first().map_or(0, Vec::len);
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["agent".to_string()];
    header.extend((1..=no).map(|j| format!("opt{j}")));
    wr.write_record(&header)?;
    for (i, r) in rows.iter().enumerate() {
        let mut rec = vec![(i + 1).to_string()];
        rec.extend(r.iter().map(|v| format!("{v:e}")));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}

/// Read rows from the CSV layout produced by [`write_rows_csv`].
pub fn read_rows_csv<R: Read>(r: R) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let no = header.len().saturating_sub(1);
    if header.get(0) != Some("agent")
        || (1..=no).any(|j| header.get(j) != Some(format!("opt{j}").as_str()))
    {
        return Err(Error::Schema("expected header agent,opt1..optNo".into()));
    }
    let mut rows = Vec::new();
    for (n, rec) in rd.records().enumerate() {
        let rec = rec?;
        let idx: usize = rec[0].trim().parse().map_err(|_| Error::Schema(format!("bad agent index on line {}", n + 2)))?;
        if idx != n + 1 {
            return Err(Error::Schema(format!("agents must be listed in order; found {idx} at position {}", n + 1)));
        }
        let row = (1..=no)
            .map(|j| rec[j].trim().parse::<f64>().map_err(|_| Error::Schema(format!("bad number on line {}", n + 2))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dev(rows: &[&[f64]]) -> DeviationState {
        DeviationState::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn deviation_of_neutral_is_zero() {
        let x = OpinionState::from_rows(&[vec![0.5, 0.5]]).unwrap();
        assert!(to_deviation(&x).as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn deviation_of_vertex() {
        let x = OpinionState::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap();
        let z = to_deviation(&x);
        assert!(close(z.as_slice(), &[2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0], 1e-15));
    }

    #[test]
    fn deviation_two_agents() {
        let x = OpinionState::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let z = to_deviation(&x);
        assert!(close(z.as_slice(), &[0.4, -0.4, -0.3, 0.3], 1e-15));
    }

    #[test]
    fn rejects_off_simplex_rows() {
        assert!(matches!(
            OpinionState::from_rows(&[vec![0.7, 0.7]]),
            Err(Error::NotOnSimplex { row: 0, .. })
        ));
        assert!(OpinionState::from_rows(&[vec![1.1, -0.1]]).is_err());
    }

    #[test]
    fn simplex_round_trip() {
        let z = DeviationState::zeros(2, 4);
        let x = to_simplex(&z).unwrap();
        assert!(x.as_slice().iter().all(|v| (*v - 0.25).abs() < 1e-15));
        let z = dev(&[&[2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0]]);
        let x = to_simplex(&z).unwrap();
        assert!(close(x.as_slice(), &[1.0, 0.0, 0.0], 1e-15));
        assert!(close(to_deviation(&x).as_slice(), z.as_slice(), 1e-15));
    }

    #[test]
    fn to_simplex_out_of_range() {
        let z = dev(&[&[0.7, -0.7]]);
        assert!(matches!(to_simplex(&z), Err(Error::OutOfSimplex { .. })));
    }

    #[test]
    fn consensus_projection_examples() {
        let z = dev(&[&[0.1, -0.1], &[0.1, -0.1]]);
        assert_eq!(project_consensus(&z), z);
        let z = dev(&[&[0.3, -0.3], &[-0.3, 0.3]]);
        assert!(project_consensus(&z).norm() == 0.0);
        let z = dev(&[&[1.0, -1.0], &[0.0, 0.0], &[-1.0, 1.0]]);
        assert!(project_consensus(&z).norm() == 0.0);
    }

    #[test]
    fn dissensus_projection_examples() {
        let z = dev(&[&[0.1, -0.1], &[0.1, -0.1]]);
        assert!(project_dissensus(&z).norm() < 1e-16);
        let z = dev(&[&[0.3, -0.3], &[-0.3, 0.3]]);
        assert_eq!(project_dissensus(&z), z);
        let z = dev(&[&[0.3, -0.1, -0.2], &[0.0, 0.5, -0.5]]);
        let sum = project_consensus(&z).add(&project_dissensus(&z));
        assert!(close(sum.as_slice(), z.as_slice(), 1e-15));
    }

    #[test]
    fn agent_examples() {
        let t = 1.0 / 3.0;
        assert_eq!(classify_agent(&[t, t, t], 0.1), AgentClass::Unopinionated);
        assert_eq!(classify_agent(&[0.6, 0.2, 0.2], 0.1), AgentClass::Favors(0));
        assert_eq!(classify_agent(&[0.45, 0.45, 0.10], 0.05), AgentClass::Conflicted(vec![0, 1]));
    }

    #[test]
    fn agent_with_zero_threshold() {
        assert_eq!(classify_agent(&[0.5, 0.3, 0.2], 0.0), AgentClass::Favors(0));
        assert_eq!(classify_agent(&[0.4, 0.4, 0.2], 0.0), AgentClass::Conflicted(vec![0, 1]));
        assert_eq!(classify_agent(&[0.2, 0.4, 0.4], 0.0), AgentClass::Conflicted(vec![1, 2]));
    }

    #[test]
    fn group_consensus() {
        let z = dev(&[&[0.2, -0.2], &[0.2, -0.2], &[0.2, -0.2]]);
        assert_eq!(classify_group_deviation(&z, 0.05), GroupClass::Consensus);
    }

    #[test]
    fn group_agreement_without_consensus() {
        let z = dev(&[&[0.2, -0.2], &[0.45, -0.45]]);
        assert_eq!(classify_group_deviation(&z, 0.05), GroupClass::Agreement);
    }

    #[test]
    fn group_moderate_extremist() {
        let c = 0.2;
        let z = dev(&[&[c, -c], &[c, -c], &[-2.0 * c, 2.0 * c]]);
        assert_eq!(
            classify_group_deviation(&z, 0.05),
            GroupClass::Dissensus(DissensusKind::ModerateExtremist)
        );
    }

    #[test]
    fn group_uniform_dissensus() {
        let c = 0.2;
        let z = dev(&[&[c, -c], &[-c, c], &[0.0, 0.0]]);
        assert_eq!(classify_group_deviation(&z, 0.05), GroupClass::Dissensus(DissensusKind::Uniform));
    }

    #[test]
    fn group_disagreement_and_unopinionated() {
        let z = dev(&[&[0.3, -0.3], &[-0.1, 0.1]]);
        assert_eq!(classify_group_deviation(&z, 0.05), GroupClass::Disagreement);
        let z = dev(&[&[0.01, -0.01], &[-0.02, 0.02]]);
        assert_eq!(classify_group_deviation(&z, 0.05), GroupClass::Unopinionated);
    }

    #[test]
    fn json_and_csv_round_trip() {
        let z = dev(&[&[0.25, -0.125, -0.125], &[0.0, 0.5, -0.5]]);
        let js = serde_json::to_string(&StateJson::from(&z)).unwrap();
        let back: DeviationState = serde_json::from_str::<StateJson>(&js).unwrap().try_into().unwrap();
        assert_eq!(back, z);

        let mut buf = Vec::new();
        write_rows_csv(&mut buf, &z.rows()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("agent,opt1,opt2,opt3\n"));
        let rows = read_rows_csv(buf.as_slice()).unwrap();
        assert_eq!(DeviationState::from_rows(&rows).unwrap(), z);
    }

    #[test]
    fn json_shape_mismatch_is_schema_error() {
        let s = StateJson { na: 2, no: 2, values: vec![vec![0.0, 0.0]] };
        assert!(matches!(DeviationState::try_from(s), Err(Error::Schema(_))));
    }
}
