//! Agent/option permutation pairs, their action on deviation states,
//! equivariance checks and fixed-point subspaces.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::linalg::{self, Subspace};
use crate::model::{drift, AdjacencyTensor, ModelInstance};
use crate::state::DeviationState;
use crate::tol;

/// A permutation of `{0, …, n−1}` stored by images.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm(Vec<usize>);

impl Perm {
    pub fn identity(n: usize) -> Self {
        Perm((0..n).collect())
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &v in &images {
            if v >= n || seen[v] {
                return Err(Error::InvalidArgument(format!("{images:?} is not a permutation")));
            }
            seen[v] = true;
        }
        Ok(Perm(images))
    }

    /// From one-line notation with 1-based images.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return Err(Error::InvalidArgument("1-based images cannot contain 0".into()));
        }
        Self::from_images(images.iter().map(|v| v - 1).collect())
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|v| v + 1).collect()
    }

    /// Swap of two points.
    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut p: Vec<usize> = (0..n).collect();
        p.swap(a, b);
        Perm(p)
    }

    /// Forward cycle `pts[0] → pts[1] → … → pts[0]`.
    pub fn cycle(n: usize, pts: &[usize]) -> Self {
        let mut p: Vec<usize> = (0..n).collect();
        for w in 0..pts.len() {
            p[pts[w]] = pts[(w + 1) % pts.len()];
        }
        Perm(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Perm) -> Perm {
        Perm(other.0.iter().map(|&i| self.0[i]).collect())
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.0.len()];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p] = i;
        }
        Perm(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        Perm(p)
    }
}

impl Serialize for Perm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Perm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Perm::from_one_based(&v).map_err(serde::de::Error::custom)
    }
}

/// Symmetric group on the listed points: an adjacent transposition and a
/// full cycle, or nothing for fewer than two points.
pub fn symmetric_generators(n: usize, pts: &[usize]) -> Vec<Perm> {
    match pts.len() {
        0 | 1 => Vec::new(),
        2 => vec![Perm::transposition(n, pts[0], pts[1])],
        _ => vec![Perm::transposition(n, pts[0], pts[1]), Perm::cycle(n, pts)],
    }
}

/// `(σ, τ) ∈ S_Na × S_No`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    pub sigma: Perm,
    pub tau: Perm,
}

impl GroupElement {
    pub fn new(sigma: Perm, tau: Perm) -> Self {
        GroupElement { sigma, tau }
    }

    pub fn identity(na: usize, no: usize) -> Self {
        GroupElement { sigma: Perm::identity(na), tau: Perm::identity(no) }
    }

    pub fn agents(sigma: Perm, no: usize) -> Self {
        GroupElement { sigma, tau: Perm::identity(no) }
    }

    pub fn options(na: usize, tau: Perm) -> Self {
        GroupElement { sigma: Perm::identity(na), tau }
    }

    pub fn na(&self) -> usize {
        self.sigma.len()
    }

    pub fn no(&self) -> usize {
        self.tau.len()
    }

    /// `self · other`, acting as `other` first.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        GroupElement { sigma: self.sigma.compose(&other.sigma), tau: self.tau.compose(&other.tau) }
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement { sigma: self.sigma.inverse(), tau: self.tau.inverse() }
    }

    pub fn is_identity(&self) -> bool {
        self.sigma.is_identity() && self.tau.is_identity()
    }

    /// Image of each flat coordinate `i·No + j` under the action.
    pub fn coord_perm(&self) -> Vec<usize> {
        let no = self.no();
        let mut p = Vec::with_capacity(self.na() * no);
        for i in 0..self.na() {
            for j in 0..no {
                p.push(self.sigma.apply(i) * no + self.tau.apply(j));
            }
        }
        p
    }

    /// Act on a flat row-major vector.
    pub fn act_slice(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        for (c, &p) in self.coord_perm().iter().enumerate() {
            out[p] = z[c];
        }
        out
    }

    pub fn random<R: Rng + ?Sized>(na: usize, no: usize, rng: &mut R) -> Self {
        GroupElement { sigma: Perm::random(na, rng), tau: Perm::random(no, rng) }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.sigma.to_one_based(), self.tau.to_one_based())
    }
}

/// `result[σ(i)][τ(j)] = z[i][j]`.
pub fn act(g: &GroupElement, z: &DeviationState) -> Result<DeviationState> {
    if g.na() != z.na() || g.no() != z.no() {
        return Err(Error::DimensionMismatch { expected: dims(g.na(), g.no()), got: dims(z.na(), z.no()) });
    }
    Ok(DeviationState::from_raw(z.na(), z.no(), g.act_slice(z.as_slice())))
}

/// Named elements used by the axial catalogs.
pub mod named {
    use super::{GroupElement, Perm};

    /// `κ = (1 2)`.
    pub fn kappa(k: usize) -> Perm {
        Perm::transposition(k, 0, 1)
    }

    /// `θ = (1 2 3)`.
    pub fn theta(k: usize) -> Perm {
        Perm::cycle(k, &[0, 1, 2])
    }

    /// Cycles the first `s` points forward.
    pub fn cycle_first(k: usize, s: usize) -> Perm {
        Perm::cycle(k, &(0..s).collect::<Vec<_>>())
    }

    /// `σ_m`: swaps the blocks `[0, m)` and `[m, 2m)` pointwise.
    pub fn block_swap(n: usize, m: usize) -> Perm {
        block_cycle(n, m, 2)
    }

    /// `μ_m^(s)`: cycles the first `s` blocks of size `m` forward.
    pub fn block_cycle(n: usize, m: usize, s: usize) -> Perm {
        let mut p: Vec<usize> = (0..n).collect();
        for b in 0..s {
            for t in 0..m {
                p[b * m + t] = ((b + 1) % s) * m + t;
            }
        }
        Perm::from_images(p).expect("block cycle is a permutation")
    }

    /// `ρ_m = (σ_m, κ)`.
    pub fn rho(n: usize, k: usize, m: usize) -> GroupElement {
        GroupElement::new(block_swap(n, m), kappa(k))
    }

    /// `ν_m = (μ_m, θ)`.
    pub fn nu(n: usize, m: usize) -> GroupElement {
        GroupElement::new(block_cycle(n, m, 3), theta(3))
    }

    /// `ν_m^(s) = (μ_m^(s), σ_(12⋯s))`.
    pub fn nu_s(n: usize, k: usize, m: usize, s: usize) -> GroupElement {
        GroupElement::new(block_cycle(n, m, s), cycle_first(k, s))
    }
}

/// A subgroup given by generators, with its elements enumerated once.
#[derive(Debug, Clone)]
pub struct SubgroupSpec {
    na: usize,
    no: usize,
    generators: Vec<GroupElement>,
    elements: Vec<GroupElement>,
}

impl SubgroupSpec {
    pub fn new(na: usize, no: usize, generators: Vec<GroupElement>) -> Result<Self> {
        Self::with_cap(na, no, generators, tol::GROUP_ELEMENT_CAP)
    }

    pub fn with_cap(na: usize, no: usize, generators: Vec<GroupElement>, cap: usize) -> Result<Self> {
        for g in &generators {
            if g.na() != na || g.no() != no {
                return Err(Error::DimensionMismatch { expected: dims(na, no), got: dims(g.na(), g.no()) });
            }
        }
        let elements = enumerate(na, no, &generators, cap)?;
        Ok(SubgroupSpec { na, no, generators, elements })
    }

    pub fn na(&self) -> usize {
        self.na
    }
    pub fn no(&self) -> usize {
        self.no
    }
    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }
    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }
    pub fn order(&self) -> usize {
        self.elements.len()
    }
}

fn enumerate(na: usize, no: usize, gens: &[GroupElement], cap: usize) -> Result<Vec<GroupElement>> {
    let id = GroupElement::identity(na, no);
    let mut seen: HashSet<GroupElement> = HashSet::from([id.clone()]);
    let mut order = vec![id.clone()];
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = g.compose(&x);
            if seen.insert(y.clone()) {
                if seen.len() > cap {
                    return Err(Error::GroupTooLarge { cap });
                }
                order.push(y.clone());
                queue.push_back(y);
            }
        }
    }
    Ok(order)
}

/// Orthonormal basis of a fixed-point subspace.
#[derive(Debug, Clone)]
pub struct FixedSpace {
    pub basis: Vec<Vec<f64>>,
    /// Trace of the averaging projector restricted to the target subspace.
    pub trace: f64,
}

impl FixedSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Fix(Σ) ∩ W through the group-averaging projector `P = (1/|Σ|) Σ_g ρ(g)`.
pub fn reynolds_fixed_subspace(s: &SubgroupSpec, which: Subspace) -> FixedSpace {
    let nn = s.na * s.no;
    // P[a][b] = fraction of elements sending coordinate b to a.
    let mut p = vec![0.0; nn * nn];
    let w = 1.0 / s.order() as f64;
    for g in &s.elements {
        for (b, a) in g.coord_perm().into_iter().enumerate() {
            p[a * nn + b] += w;
        }
    }
    let basis_w = linalg::subspace_basis(s.na, s.no, which);
    let images: Vec<Vec<f64>> = basis_w
        .iter()
        .map(|v| (0..nn).map(|a| linalg::dot(&p[a * nn..(a + 1) * nn], v)).collect())
        .collect();
    let trace = basis_w.iter().zip(&images).map(|(v, pv)| linalg::dot(v, pv)).sum();
    FixedSpace { basis: linalg::gram_schmidt(&images, tol::GRAM_SCHMIDT_PIVOT), trace }
}

/// Fix(H) ∩ W from generators alone. For a permutation representation the
/// fixed space is spanned by indicator vectors of coordinate orbits, so no
/// enumeration of `H` is needed.
pub fn orbit_fixed_subspace(na: usize, no: usize, generators: &[GroupElement], which: Subspace) -> FixedSpace {
    let nn = na * no;
    let mut parent: Vec<usize> = (0..nn).collect();
    fn find(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            p[a] = p[p[a]];
            a = p[a];
        }
        a
    }
    for g in generators {
        for (b, a) in g.coord_perm().into_iter().enumerate() {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut orbits: Vec<Vec<f64>> = Vec::new();
    let mut slot = vec![usize::MAX; nn];
    for c in 0..nn {
        let r = find(&mut parent, c);
        if slot[r] == usize::MAX {
            slot[r] = orbits.len();
            orbits.push(vec![0.0; nn]);
        }
        orbits[slot[r]][c] = 1.0;
    }
    let basis_w = linalg::subspace_basis(na, no, which);
    let projected: Vec<Vec<f64>> = orbits.iter().map(|o| linalg::project(o, &basis_w)).collect();
    let basis = linalg::gram_schmidt(&projected, tol::GRAM_SCHMIDT_PIVOT);
    let trace = basis.len() as f64;
    FixedSpace { basis, trace }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub max_violation: f64,
    pub pass: bool,
}

/// Sample random states and measure `‖g·drift(z) − drift(g·z)‖∞`.
pub fn check_equivariance(
    m: &ModelInstance,
    generators: &[GroupElement],
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> Result<EquivarianceReport> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let (na, no) = (m.na(), m.no());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_violation: f64 = 0.0;
    for _ in 0..n_samples {
        let data = (0..na * no).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z = DeviationState::centered(na, no, data)?;
        let fz = drift(&z, m)?;
        for g in generators {
            let lhs = act(g, &fz)?;
            let rhs = drift(&act(g, &z)?, m)?;
            max_violation = max_violation.max(lhs.sub(&rhs).norm_inf());
        }
    }
    Ok(EquivarianceReport { max_violation, pass: max_violation <= tol })
}

/// Generators of the full group `S_Na × S_No`.
pub fn full_group_generators(na: usize, no: usize) -> Vec<GroupElement> {
    let all_a: Vec<usize> = (0..na).collect();
    let all_o: Vec<usize> = (0..no).collect();
    let mut g: Vec<GroupElement> =
        symmetric_generators(na, &all_a).into_iter().map(|s| GroupElement::agents(s, no)).collect();
    g.extend(symmetric_generators(no, &all_o).into_iter().map(|t| GroupElement::options(na, t)));
    g
}

/// Where a homogeneity check failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Witness {
    /// Tensor index `(i, k, j, l)`.
    Tensor(usize, usize, usize, usize),
    /// Bias index `(i, j)`.
    Bias(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Homogeneity {
    /// γ and δ are reported as 0 when there is a single agent.
    Homogeneous { alpha: f64, beta: f64, gamma: f64, delta: f64, b: f64 },
    NotHomogeneous(Witness),
}

/// Check the four index-class constancy conditions and a constant bias.
pub fn check_tensor_homogeneity(a: &AdjacencyTensor, bias: &[f64]) -> Homogeneity {
    check_tensor_homogeneity_tol(a, bias, 1e-12)
}

pub fn check_tensor_homogeneity_tol(a: &AdjacencyTensor, bias: &[f64], tol: f64) -> Homogeneity {
    let (na, no) = (a.na(), a.no());
    let alpha = a.get(0, 0, 0, 0);
    let beta = a.get(0, 0, 0, 1);
    let (gamma, delta) = if na > 1 { (a.get(0, 1, 0, 0), a.get(0, 1, 0, 1)) } else { (0.0, 0.0) };
    for i in 0..na {
        for k in 0..na {
            for j in 0..no {
                for l in 0..no {
                    let want = match (i == k, j == l) {
                        (true, true) => alpha,
                        (true, false) => beta,
                        (false, true) => gamma,
                        (false, false) => delta,
                    };
                    if (a.get(i, k, j, l) - want).abs() > tol {
                        return Homogeneity::NotHomogeneous(Witness::Tensor(i, k, j, l));
                    }
                }
            }
        }
    }
    let b = bias.first().copied().unwrap_or(0.0);
    for (n, &v) in bias.iter().enumerate() {
        if (v - b).abs() > tol {
            return Homogeneity::NotHomogeneous(Witness::Bias(n / no, n % no));
        }
    }
    Homogeneity::Homogeneous { alpha, beta, gamma, delta, b }
}

/// Order of the permutation group on `degree` points generated by `gens`
/// (image vectors), by the incremental Schreier–Sims algorithm.
pub fn permutation_group_order(degree: usize, gens: &[Vec<usize>]) -> u128 {
    let compose = |a: &[usize], b: &[usize]| -> Vec<usize> { b.iter().map(|&i| a[i]).collect() };
    let inverse = |a: &[usize]| -> Vec<usize> {
        let mut inv = vec![0; a.len()];
        for (i, &p) in a.iter().enumerate() {
            inv[p] = i;
        }
        inv
    };
    let is_id = |a: &[usize]| a.iter().enumerate().all(|(i, &p)| i == p);

    let mut strong: Vec<Vec<usize>> = gens.iter().filter(|g| !is_id(g)).cloned().collect();
    let mut base: Vec<usize> = Vec::new();
    for g in &strong {
        if base.iter().all(|&b| g[b] == b) {
            base.push((0..degree).find(|&p| g[p] != p).expect("non-identity"));
        }
    }
    // Transversal at level l: point -> element mapping base[l] to it.
    let level_gens = |strong: &[Vec<usize>], base: &[usize], l: usize| -> Vec<Vec<usize>> {
        strong.iter().filter(|s| base[..l].iter().all(|&b| s[b] == b)).cloned().collect()
    };
    let orbit = |gs: &[Vec<usize>], b: usize| -> Vec<Option<Vec<usize>>> {
        let mut t: Vec<Option<Vec<usize>>> = vec![None; degree];
        t[b] = Some((0..degree).collect());
        let mut queue = VecDeque::from([b]);
        while let Some(p) = queue.pop_front() {
            for s in gs {
                let q = s[p];
                if t[q].is_none() {
                    t[q] = Some(compose(s, t[p].as_ref().unwrap()));
                    queue.push_back(q);
                }
            }
        }
        t
    };
    let mut sgens: Vec<Vec<Vec<usize>>> = (0..base.len()).map(|l| level_gens(&strong, &base, l)).collect();
    let mut trans: Vec<Vec<Option<Vec<usize>>>> = (0..base.len()).map(|l| orbit(&sgens[l], base[l])).collect();

    let mut i = base.len() as isize - 1;
    while i >= 0 {
        let li = i as usize;
        let mut jumped = None;
        'search: for b in 0..degree {
            let Some(ub) = trans[li][b].clone() else { continue };
            for s in sgens[li].clone() {
                let sb = s[b];
                let usb = trans[li][sb].as_ref().unwrap();
                let mut h = compose(&inverse(usb), &compose(&s, &ub));
                // Sift through the levels below.
                let mut j = li + 1;
                while j < base.len() {
                    let p = h[base[j]];
                    match &trans[j][p] {
                        Some(u) => h = compose(&inverse(u), &h),
                        None => break,
                    }
                    j += 1;
                }
                if !is_id(&h) {
                    if j == base.len() {
                        base.push((0..degree).find(|&p| h[p] != p).expect("non-identity"));
                        sgens.push(Vec::new());
                        trans.push(Vec::new());
                    }
                    strong.push(h);
                    for l in li + 1..=j {
                        sgens[l] = level_gens(&strong, &base, l);
                        trans[l] = orbit(&sgens[l], base[l]);
                    }
                    jumped = Some(j);
                    break 'search;
                }
            }
        }
        match jumped {
            Some(j) => i = j as isize,
            None => i -= 1,
        }
    }
    trans.iter().map(|t| t.iter().filter(|x| x.is_some()).count() as u128).product()
}

/// Order of the subgroup of `S_Na × S_No` generated by `gens`, without
/// enumerating it.
pub fn subgroup_order(na: usize, no: usize, gens: &[GroupElement]) -> u128 {
    let perms: Vec<Vec<usize>> = gens
        .iter()
        .map(|g| {
            let mut p = g.sigma.images().to_vec();
            p.extend(g.tau.images().iter().map(|t| t + na));
            p
        })
        .collect();
    permutation_group_order(na + no, &perms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{homogeneous_tensor, ModelParams};

    fn dev(rows: &[&[f64]]) -> DeviationState {
        DeviationState::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn identity_and_zero() {
        let z = dev(&[&[0.1, -0.1], &[0.3, -0.3]]);
        assert_eq!(act(&GroupElement::identity(2, 2), &z).unwrap(), z);
        let g = GroupElement::new(Perm::transposition(2, 0, 1), Perm::transposition(2, 0, 1));
        assert_eq!(act(&g, &DeviationState::zeros(2, 2)).unwrap().norm(), 0.0);
    }

    #[test]
    fn agent_swap_swaps_rows() {
        let (a, b) = (0.2, -0.4);
        let z = dev(&[&[a, -a], &[b, -b]]);
        let g = GroupElement::agents(Perm::transposition(2, 0, 1), 2);
        assert_eq!(act(&g, &z).unwrap(), dev(&[&[b, -b], &[a, -a]]));
    }

    #[test]
    fn option_action_convention() {
        // τZ_i = (x_{iτ⁻¹(1)}, …): cycling forward moves the last entry first.
        let z = dev(&[&[1.0, 2.0, -3.0]]);
        let g = GroupElement::options(1, named::cycle_first(3, 3));
        assert_eq!(act(&g, &z).unwrap(), dev(&[&[-3.0, 1.0, 2.0]]));
    }

    #[test]
    fn composition_is_an_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let g = GroupElement::random(4, 3, &mut rng);
            let h = GroupElement::random(4, 3, &mut rng);
            let data = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            let z = DeviationState::centered(4, 3, data).unwrap();
            let lhs = act(&g.compose(&h), &z).unwrap();
            let rhs = act(&g, &act(&h, &z).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
            assert_eq!(act(&g.inverse(), &act(&g, &z).unwrap()).unwrap(), z);
        }
    }

    #[test]
    fn named_elements() {
        assert_eq!(named::block_swap(5, 2).to_one_based(), vec![3, 4, 1, 2, 5]);
        assert_eq!(named::block_cycle(7, 2, 3).to_one_based(), vec![3, 4, 5, 6, 1, 2, 7]);
        assert_eq!(named::theta(3).to_one_based(), vec![2, 3, 1]);
        assert_eq!(named::kappa(4).to_one_based(), vec![2, 1, 3, 4]);
        let nu = named::nu(3, 1);
        let mut x = GroupElement::identity(3, 3);
        for _ in 0..3 {
            x = nu.compose(&x);
        }
        assert!(x.is_identity());
    }

    #[test]
    fn perm_serializes_one_based() {
        let p = Perm::cycle(3, &[0, 1, 2]);
        assert_eq!(serde_json::to_string(&p).unwrap(), "[2,3,1]");
        let back: Perm = serde_json::from_str("[2,3,1]").unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<Perm>("[1,1,2]").is_err());
    }

    #[test]
    fn enumeration_orders() {
        let s = SubgroupSpec::new(3, 3, full_group_generators(3, 3)).unwrap();
        assert_eq!(s.order(), 36);
        let s = SubgroupSpec::new(4, 2, vec![]).unwrap();
        assert_eq!(s.order(), 1);
        let err = SubgroupSpec::with_cap(5, 3, full_group_generators(5, 3), 100);
        assert!(matches!(err, Err(Error::GroupTooLarge { cap: 100 })));
    }

    #[test]
    fn full_group_fixes_nothing_trivial_group_fixes_everything() {
        let (na, no) = (3, 3);
        let full = SubgroupSpec::new(na, no, full_group_generators(na, no)).unwrap();
        let f = reynolds_fixed_subspace(&full, Subspace::Tangent);
        assert_eq!(f.dim(), 0);
        assert!(f.trace.abs() < 1e-9);
        let triv = SubgroupSpec::new(na, no, vec![]).unwrap();
        let f = reynolds_fixed_subspace(&triv, Subspace::Tangent);
        assert_eq!(f.dim(), na * (no - 1));
        assert!((f.trace - f.dim() as f64).abs() < 1e-9);
    }

    #[test]
    fn z2_kappa_fixed_line() {
        // Swapping agents 1 and 2 in the 3-agent, 2-option problem.
        let g = GroupElement::agents(Perm::transposition(3, 0, 1), 2);
        let s = SubgroupSpec::new(3, 2, vec![g.clone()]).unwrap();
        let f = reynolds_fixed_subspace(&s, Subspace::Dissensus);
        assert_eq!(f.dim(), 1);
        let v = &f.basis[0];
        let c = v[0];
        let want = [c, -c, c, -c, -2.0 * c, 2.0 * c];
        assert!(v.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12));
        let o = orbit_fixed_subspace(3, 2, &[g], Subspace::Dissensus);
        assert_eq!(o.dim(), 1);
    }

    #[test]
    fn reynolds_and_orbit_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let (na, no) = (rng.random_range(2..5), rng.random_range(2..4));
            let ngen = rng.random_range(0..3);
            let gens: Vec<GroupElement> = (0..ngen).map(|_| GroupElement::random(na, no, &mut rng)).collect();
            let s = SubgroupSpec::new(na, no, gens.clone()).unwrap();
            for w in [Subspace::Tangent, Subspace::Consensus, Subspace::Dissensus] {
                let r = reynolds_fixed_subspace(&s, w);
                let o = orbit_fixed_subspace(na, no, &gens, w);
                assert_eq!(r.dim(), o.dim());
                assert!((r.trace - r.dim() as f64).abs() < 1e-9);
                // Same span: each orbit vector lies in the Reynolds span.
                for v in &o.basis {
                    let p = linalg::project(v, &r.basis);
                    assert!(p.iter().zip(v).all(|(a, b)| (a - b).abs() < 1e-10));
                }
            }
        }
    }

    #[test]
    fn homogeneous_model_is_equivariant() {
        let m = ModelInstance::homogeneous(4, 3, 0.3, -1.1, 0.4, -0.2, 1.3).unwrap();
        let r = check_equivariance(&m, &full_group_generators(4, 3), 10, 1e-12, 1).unwrap();
        assert!(r.pass, "{r:?}");
        let r = check_equivariance(&m, &[GroupElement::identity(4, 3)], 3, 0.0, 1).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn perturbed_model_breaks_equivariance() {
        let m = ModelInstance::homogeneous(4, 3, 0.3, -1.1, 0.4, -0.2, 1.3).unwrap().perturb(0.01, 2).unwrap();
        let r = check_equivariance(&m, &full_group_generators(4, 3), 10, 1e-10, 1).unwrap();
        assert!(!r.pass);
        assert!(r.max_violation < 0.2, "{r:?}");
    }

    #[test]
    fn homogeneity_round_trip_and_witness() {
        let mut t = homogeneous_tensor(3, 3, 1.0, 2.0, 3.0, 4.0);
        assert_eq!(
            check_tensor_homogeneity(&t, &[0.5; 9]),
            Homogeneity::Homogeneous { alpha: 1.0, beta: 2.0, gamma: 3.0, delta: 4.0, b: 0.5 }
        );
        let old = t.get(2, 1, 0, 2);
        t.set(2, 1, 0, 2, old + 1e-3);
        assert_eq!(check_tensor_homogeneity(&t, &[0.5; 9]), Homogeneity::NotHomogeneous(Witness::Tensor(2, 1, 0, 2)));
        let t = homogeneous_tensor(1, 3, 1.0, 2.0, 3.0, 4.0);
        assert_eq!(check_tensor_homogeneity(&t, &[1.0, 2.0, 3.0]), Homogeneity::NotHomogeneous(Witness::Bias(0, 1)));
    }

    #[test]
    fn perturbed_tensor_is_not_homogeneous() {
        let p = ModelParams { alpha: 0.0, beta: -1.5, gamma: 0.2, delta: 0.1, lambda: 0.3, k_hto: 0.5, bias: vec![0.0; 12] };
        let m = ModelInstance::homogeneous_with(4, 3, p).unwrap().perturb(0.01, 7).unwrap();
        assert!(matches!(check_tensor_homogeneity(&m.tensor(), m.bias()), Homogeneity::NotHomogeneous(_)));
    }
    #[test]
    fn schreier_sims_orders() {
        for (na, no) in [(3, 3), (4, 2), (5, 4), (7, 3)] {
            let want: u128 = (1..=na as u128).product::<u128>() * (1..=no as u128).product::<u128>();
            assert_eq!(subgroup_order(na, no, &full_group_generators(na, no)), want);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let (na, no) = (rng.random_range(2..5), rng.random_range(2..4));
            let gens: Vec<GroupElement> = (0..rng.random_range(0..3)).map(|_| GroupElement::random(na, no, &mut rng)).collect();
            let s = SubgroupSpec::new(na, no, gens.clone()).unwrap();
            assert_eq!(subgroup_order(na, no, &gens), s.order() as u128);
        }
    }
}
