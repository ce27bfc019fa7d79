//! Exhaustive search for axial lines of `S_n × S_k` at small sizes.
//!
//! The fixed space of a subgroup depends only on its orbits on the `n·k`
//! coordinates, so subgroups are tracked as coordinate partitions. Starting
//! from one representative per conjugacy class and joining with every group
//! element reaches every subgroup fixed space up to conjugacy. Partitions
//! whose fixed space in the target subspace is a line give the axial
//! classes.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use super::{next_permutation, AxialRecord, Mode};
use crate::error::{Error, Result};
use crate::linalg;
use crate::tol;

type Key = Vec<i64>;

#[derive(Debug, Clone)]
pub struct OracleClass {
    /// Unit representative, row-major.
    pub line: Vec<f64>,
    /// Order of the isotropy subgroup of the line.
    pub stabilizer_order: u128,
    keys: HashSet<Key>,
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub na: usize,
    pub no: usize,
    pub mode: Mode,
    pub group_order: usize,
    pub classes: Vec<OracleClass>,
}

impl OracleResult {
    /// Index of the class containing the line spanned by `v`.
    pub fn class_of(&self, v: &[f64]) -> Option<usize> {
        let k = line_key(v);
        self.classes.iter().position(|c| c.keys.contains(&k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Match,
    Mismatch,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub verdict: Verdict,
    pub oracle_classes: usize,
    pub catalog_records: usize,
    /// Oracle class representatives with no catalog record.
    pub missing: Vec<Vec<f64>>,
    /// Records whose line is not axial according to the oracle.
    pub unmatched: Vec<String>,
    /// Records landing in a class already claimed by an earlier record.
    pub duplicates: Vec<String>,
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

fn all_perms(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = vec![p.clone()];
    while next_permutation(&mut p) {
        out.push(p.clone());
    }
    out
}

fn cycle_type(p: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; p.len()];
    let mut t = Vec::new();
    for s in 0..p.len() {
        let mut len = 0;
        let mut i = s;
        while !seen[i] {
            seen[i] = true;
            i = p[i];
            len += 1;
        }
        if len > 0 {
            t.push(len);
        }
    }
    t.sort_unstable();
    t
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Canonical block labels (numbered by first appearance).
fn canonical(parent: &mut [usize]) -> Vec<u16> {
    let mut label = HashMap::new();
    (0..parent.len())
        .map(|x| {
            let r = find(parent, x);
            let next = label.len() as u16;
            *label.entry(r).or_insert(next)
        })
        .collect()
}

fn perm_partition(p: &[usize]) -> Vec<u16> {
    let mut parent: Vec<usize> = (0..p.len()).collect();
    for (x, &y) in p.iter().enumerate() {
        let (a, b) = (find(&mut parent, x), find(&mut parent, y));
        parent[a] = b;
    }
    canonical(&mut parent)
}

fn join(a: &[u16], b: &[u16]) -> Vec<u16> {
    let mut parent: Vec<usize> = (0..a.len()).collect();
    let mut first_a: HashMap<u16, usize> = HashMap::new();
    let mut first_b: HashMap<u16, usize> = HashMap::new();
    for x in 0..a.len() {
        for (first, l) in [(&mut first_a, a[x]), (&mut first_b, b[x])] {
            let y = *first.entry(l).or_insert(x);
            let (ra, rb) = (find(&mut parent, x), find(&mut parent, y));
            parent[ra] = rb;
        }
    }
    canonical(&mut parent)
}

/// Projections onto the target subspace of the block indicators, reduced
/// to an orthonormal basis.
fn fixed_basis(p: &[u16], basis: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let blocks = *p.iter().max().unwrap_or(&0) as usize + 1;
    let ind: Vec<Vec<f64>> = (0..blocks)
        .map(|b| linalg::project(&p.iter().map(|&l| if l as usize == b { 1.0 } else { 0.0 }).collect::<Vec<_>>(), basis))
        .collect();
    linalg::gram_schmidt(&ind, 1e-9)
}

/// Unit vector, first nonzero coordinate positive, rounded.
fn line_key(v: &[f64]) -> Key {
    let n = linalg::norm(v);
    let sign = v.iter().find(|x| x.abs() > 1e-9 * n).map_or(1.0, |x| x.signum());
    v.iter().map(|x| (sign * x / n * 1e8).round() as i64).collect()
}

fn act(p: &[usize], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (x, &y) in p.iter().enumerate() {
        out[y] = v[x];
    }
    out
}

/// All axial classes of `S_na × S_no` on the chosen subspace.
pub fn brute_force_axials(na: usize, no: usize, mode: Mode) -> Result<OracleResult> {
    let cap = tol::ORACLE_ORDER_CAP;
    let order = factorial(na) * factorial(no);
    if order > cap as u128 {
        return Err(Error::SizeExceeded { n: na, k: no, order, cap });
    }
    let basis = linalg::subspace_basis(na, no, mode.subspace());
    let sp = all_perms(na);
    let tp = all_perms(no);
    let mut coord_perms = Vec::with_capacity(order as usize);
    let mut reps = Vec::new();
    let mut seen_types = HashSet::new();
    for s in &sp {
        for t in &tp {
            let p: Vec<usize> = (0..na * no).map(|c| s[c / no] * no + t[c % no]).collect();
            if seen_types.insert((cycle_type(s), cycle_type(t))) {
                reps.push(coord_perms.len());
            }
            coord_perms.push(p);
        }
    }

    let elem_parts: Vec<Vec<u16>> = {
        let mut set = HashSet::new();
        coord_perms.iter().map(|p| perm_partition(p)).filter(|q| set.insert(q.clone())).collect()
    };

    let mut lines: Vec<Vec<f64>> = Vec::new();
    let mut visited: HashSet<Vec<u16>> = HashSet::new();
    let mut frontier: Vec<Vec<u16>> = Vec::new();
    let mut visit = |q: Vec<u16>, frontier: &mut Vec<Vec<u16>>, lines: &mut Vec<Vec<f64>>| {
        if !visited.insert(q.clone()) {
            return;
        }
        let b = fixed_basis(&q, &basis);
        match b.len() {
            0 => {}
            1 => lines.push(b.into_iter().next().expect("one vector")),
            _ => frontier.push(q),
        }
    };
    for &r in &reps {
        visit(perm_partition(&coord_perms[r]), &mut frontier, &mut lines);
    }
    while let Some(q) = frontier.pop() {
        for e in &elem_parts {
            visit(join(&q, e), &mut frontier, &mut lines);
        }
    }

    let mut classes: Vec<OracleClass> = Vec::new();
    for v in lines {
        let k = line_key(&v);
        if classes.iter().any(|c| c.keys.contains(&k)) {
            continue;
        }
        let mut keys = HashSet::new();
        let mut stab = 0u128;
        for p in &coord_perms {
            let w = act(p, &v);
            if w.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-9) {
                stab += 1;
            }
            keys.insert(line_key(&w));
        }
        classes.push(OracleClass { line: v, stabilizer_order: stab, keys });
    }
    Ok(OracleResult { na, no, mode, group_order: order as usize, classes })
}

/// Checks that the records hit every oracle class exactly once.
pub fn compare(records: &[AxialRecord], oracle: &OracleResult) -> Comparison {
    let mut hit = vec![false; oracle.classes.len()];
    let mut unmatched = Vec::new();
    let mut duplicates = Vec::new();
    for r in records {
        match oracle.class_of(r.fix_generator.as_slice()) {
            None => unmatched.push(r.label()),
            Some(c) if hit[c] => duplicates.push(r.label()),
            Some(c) => hit[c] = true,
        }
    }
    let missing: Vec<Vec<f64>> =
        oracle.classes.iter().zip(&hit).filter(|(_, h)| !**h).map(|(c, _)| c.line.clone()).collect();
    let ok = missing.is_empty() && unmatched.is_empty() && duplicates.is_empty();
    Comparison {
        verdict: if ok { Verdict::Match } else { Verdict::Mismatch },
        oracle_classes: oracle.classes.len(),
        catalog_records: records.len(),
        missing,
        unmatched,
        duplicates,
    }
}
