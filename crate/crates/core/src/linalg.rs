//! Small dense helpers: orthonormal bases of the tangent, consensus and
//! dissensus spaces, and modified Gram–Schmidt.

use serde::{Deserialize, Serialize};

use crate::tol;

/// Invariant subspaces of the tangent space at the neutral point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subspace {
    /// All of V (zero row sums).
    Tangent,
    /// W_c: all rows equal.
    Consensus,
    /// W_d: zero across-agent sum.
    Dissensus,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthonormal basis of `{x ∈ ℝⁿ : Σx = 0}` (Helmert vectors).
pub fn zero_sum_basis(n: usize) -> Vec<Vec<f64>> {
    (1..n)
        .map(|m| {
            let s = 1.0 / ((m * (m + 1)) as f64).sqrt();
            let mut v = vec![0.0; n];
            v[..m].iter_mut().for_each(|x| *x = s);
            v[m] = -(m as f64) * s;
            v
        })
        .collect()
}

/// Orthonormal basis of a subspace of row-major `na × no` matrices.
pub fn subspace_basis(na: usize, no: usize, which: Subspace) -> Vec<Vec<f64>> {
    let opt = zero_sum_basis(no);
    let agent: Vec<Vec<f64>> = match which {
        Subspace::Tangent => (0..na)
            .map(|i| {
                let mut e = vec![0.0; na];
                e[i] = 1.0;
                e
            })
            .collect(),
        Subspace::Consensus => vec![vec![1.0 / (na as f64).sqrt(); na]],
        Subspace::Dissensus => zero_sum_basis(na),
    };
    let mut out = Vec::with_capacity(agent.len() * opt.len());
    for a in &agent {
        for f in &opt {
            let mut v = vec![0.0; na * no];
            for i in 0..na {
                for j in 0..no {
                    v[i * no + j] = a[i] * f[j];
                }
            }
            out.push(v);
        }
    }
    out
}

/// Modified Gram–Schmidt; vectors whose residual norm falls below `pivot`
/// are dropped.
pub fn gram_schmidt(vectors: &[Vec<f64>], pivot: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        // Two passes keep the result orthogonal to working precision.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = norm(&w);
        if n > pivot {
            w.iter_mut().for_each(|x| *x /= n);
            basis.push(w);
        }
    }
    basis
}

/// Rank of a set of vectors at the default pivot tolerance.
pub fn rank(vectors: &[Vec<f64>]) -> usize {
    gram_schmidt(vectors, tol::GRAM_SCHMIDT_PIVOT).len()
}

/// Orthogonal projection of `v` onto the span of the orthonormal `basis`.
pub fn project(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for b in basis {
        let c = dot(v, b);
        out.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
    }
    out
}
