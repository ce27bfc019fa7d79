//! Linearization at the neutral point: balance terms, the Jacobian, its
//! restriction to W_c and W_d, and critical values of λ.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{subspace_basis, Subspace};
use crate::model::ModelInstance;
use crate::state::center_rows;
use crate::tol;

/// Partial derivatives of the un-projected field at the neutral point, one
/// per index class. `abar` carries the `+1` offset that removes the `−z_ij`
/// leak term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceTerms {
    pub abar: f64,
    pub bbar: f64,
    pub gbar: f64,
    pub dbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BifurcationKind {
    Consensus,
    Dissensus,
    ModeInteraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPrediction {
    pub kind: BifurcationKind,
    /// λ at which the leading branch appears; `None` under mode interaction.
    pub critical_lambda: Option<f64>,
    /// `1/(α−β+(Na−1)(γ−δ))` when the denominator is positive.
    pub lambda_consensus: Option<f64>,
    /// `1/(α−β−γ+δ)` when the denominator is positive.
    pub lambda_dissensus: Option<f64>,
}

fn partial(m: &ModelInstance, lambda: f64, h: f64, out: (usize, usize), wrt: (usize, usize)) -> f64 {
    let no = m.no();
    let n = m.na() * no;
    let mut z = vec![0.0; n];
    let c = wrt.0 * no + wrt.1;
    z[c] = h;
    let fp = m.raw_field(&z, lambda)[out.0 * no + out.1];
    z[c] = -h;
    let fm = m.raw_field(&z, lambda)[out.0 * no + out.1];
    (fp - fm) / (2.0 * h)
}

fn balance_at(m: &ModelInstance, lambda: f64, h: f64, i: usize, j: usize, k: usize, l: usize) -> BalanceTerms {
    let abar = partial(m, lambda, h, (i, j), (i, j)) + 1.0;
    let bbar = partial(m, lambda, h, (i, j), (i, l));
    let (gbar, dbar) = if m.na() > 1 {
        (partial(m, lambda, h, (i, j), (k, j)), partial(m, lambda, h, (i, j), (k, l)))
    } else {
        (0.0, 0.0)
    };
    BalanceTerms { abar, bbar, gbar, dbar }
}

/// Balance terms by central differences, checked at two index choices.
pub fn balance_terms(m: &ModelInstance, lambda: f64, h: f64) -> Result<BalanceTerms> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
    }
    let (na, no) = (m.na(), m.no());
    let first = balance_at(m, lambda, h, 0, 0, na.min(2) - 1, 1);
    let second = balance_at(m, lambda, h, na - 1, no - 1, 0, 0);
    let spread = [
        first.abar - second.abar,
        first.bbar - second.bbar,
        first.gbar - second.gbar,
        first.dbar - second.dbar,
    ]
    .iter()
    .fold(0.0f64, |a, d| a.max(d.abs()));
    let tol = 10.0 * h * h;
    if spread > tol {
        return Err(Error::IndexInconsistency { spread, tol });
    }
    Ok(first)
}

/// The consensus and dissensus eigenvalue expressions `c1`, `c2` with the
/// prefactors `(No−1)` and `(No−1)(Na−1)`.
pub fn eigenvalues_cd(bt: &BalanceTerms, na: usize, no: usize) -> (f64, f64) {
    let (na, no) = (na as f64, no as f64);
    let base = -1.0 + bt.abar - bt.bbar;
    let c1 = (no - 1.0) * (base + (na - 1.0) * (bt.gbar - bt.dbar));
    let c2 = (no - 1.0) * (na - 1.0) * (base - bt.gbar + bt.dbar);
    (c1, c2)
}

/// The actual Jacobian eigenvalues on W_c and W_d. They equal
/// `c1/(No−1)` and `c2/((No−1)(Na−1))`.
pub fn eigenvalues_exact(bt: &BalanceTerms, na: usize) -> (f64, f64) {
    let base = -1.0 + bt.abar - bt.bbar;
    (base + (na as f64 - 1.0) * (bt.gbar - bt.dbar), base - bt.gbar + bt.dbar)
}

/// Finite-difference Jacobian of the projected drift at the origin, as a
/// `(Na·No)²` matrix over row-major coordinates.
pub fn jacobian_at_neutral(m: &ModelInstance) -> DMatrix<f64> {
    jacobian_at_neutral_with(m, m.lambda(), tol::FD_STEP)
}

pub fn jacobian_at_neutral_with(m: &ModelInstance, lambda: f64, h: f64) -> DMatrix<f64> {
    let no = m.no();
    let n = m.na() * no;
    let mut jac = DMatrix::zeros(n, n);
    let mut z = vec![0.0; n];
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for c in 0..n {
        z[c] = h;
        m.drift_into(&z, lambda, 0.0, &mut fp);
        z[c] = -h;
        m.drift_into(&z, lambda, 0.0, &mut fm);
        z[c] = 0.0;
        center_rows(&mut fp, no);
        center_rows(&mut fm, no);
        for r in 0..n {
            jac[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    jac
}

/// Block form built from the balance terms: entries `a, b` within an agent,
/// `c, d` across agents.
pub fn analytic_jacobian(bt: &BalanceTerms, na: usize, no: usize) -> DMatrix<f64> {
    let nof = no as f64;
    let a = (nof - 1.0) / nof * (-1.0 + bt.abar - bt.bbar);
    let b = -a / (nof - 1.0);
    let c = (nof - 1.0) / nof * (bt.gbar - bt.dbar);
    let d = -c / (nof - 1.0);
    DMatrix::from_fn(na * no, na * no, |r, s| {
        let (i, j, k, l) = (r / no, r % no, s / no, s % no);
        match (i == k, j == l) {
            (true, true) => a,
            (true, false) => b,
            (false, true) => c,
            (false, false) => d,
        }
    })
}

fn basis_matrix(na: usize, no: usize, which: Subspace) -> DMatrix<f64> {
    let b = subspace_basis(na, no, which);
    DMatrix::from_fn(na * no, b.len(), |r, c| b[c][r])
}

/// `Bᵀ J B` for an orthonormal basis `B` of the subspace.
pub fn restrict(jac: &DMatrix<f64>, na: usize, no: usize, which: Subspace) -> DMatrix<f64> {
    let b = basis_matrix(na, no, which);
    b.transpose() * jac * b
}

/// Largest real part among the eigenvalues of `J` restricted to a subspace.
pub fn leading_eigenvalue(jac: &DMatrix<f64>, na: usize, no: usize, which: Subspace) -> f64 {
    let r = restrict(jac, na, no, which);
    if r.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    max_real_eigenvalue(r)
}

/// Symmetric input (the unperturbed model) goes through the symmetric
/// solver; the Schur iteration can stall on its repeated eigenvalues.
fn max_real_eigenvalue(r: DMatrix<f64>) -> f64 {
    let scale = r.amax().max(1.0);
    let asym = (&r - r.transpose()).amax();
    if asym <= 1e-9 * scale {
        let sym = (&r + r.transpose()) * 0.5;
        return sym.symmetric_eigenvalues().max();
    }
    let n = r.nrows();
    let schur = r.clone().try_schur(f64::EPSILON, 1000 * n).or_else(|| r.try_schur(1e-12 * scale, 10_000 * n));
    match schur {
        Some(s) => s.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max),
        None => f64::NAN,
    }
}

/// Largest off-diagonal block entry of `J` in a basis adapted to W_c ⊕ W_d.
pub fn block_residual(jac: &DMatrix<f64>, na: usize, no: usize) -> f64 {
    let bc = basis_matrix(na, no, Subspace::Consensus);
    let bd = basis_matrix(na, no, Subspace::Dissensus);
    let cd = bc.transpose() * jac * &bd;
    let dc = bd.transpose() * jac * &bc;
    cd.iter().chain(dc.iter()).fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Critical values from the gains, per the sign of `γ − δ`.
pub fn critical_lambdas(alpha: f64, beta: f64, gamma: f64, delta: f64, na: usize) -> Result<BifurcationPrediction> {
    let den_a = alpha - beta + (na as f64 - 1.0) * (gamma - delta);
    let den_d = alpha - beta - gamma + delta;
    let positive = |d: f64| (d > 0.0).then(|| 1.0 / d);
    let lambda_consensus = positive(den_a);
    let lambda_dissensus = positive(den_d);
    let (kind, critical_lambda) = if (gamma - delta).abs() <= tol::MODE_INTERACTION {
        (BifurcationKind::ModeInteraction, None)
    } else if gamma > delta {
        if den_a <= 0.0 {
            return Err(Error::DegenerateDenominator { branch: "consensus", denominator: den_a });
        }
        (BifurcationKind::Consensus, lambda_consensus)
    } else {
        if den_d <= 0.0 {
            return Err(Error::DegenerateDenominator { branch: "dissensus", denominator: den_d });
        }
        (BifurcationKind::Dissensus, lambda_dissensus)
    };
    Ok(BifurcationPrediction { kind, critical_lambda, lambda_consensus, lambda_dissensus })
}

/// Locate the λ at which the leading eigenvalue on `which` crosses zero, by
/// bisection on the numeric Jacobian. The eigenvalue must be negative at
/// `lo` and positive at `hi`.
pub fn bisect_crossing(m: &ModelInstance, which: Subspace, lo: f64, hi: f64, rel_tol: f64) -> Result<f64> {
    let (na, no) = (m.na(), m.no());
    let eig = |l: f64| leading_eigenvalue(&jacobian_at_neutral_with(m, l, tol::FD_STEP), na, no, which);
    let (mut lo, mut hi) = (lo, hi);
    let (flo, fhi) = (eig(lo), eig(hi));
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "no sign change on [{lo}, {hi}]: eigenvalues {flo} and {fhi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if eig(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * hi.abs().max(1e-300) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Whether the neutral point is linearly stable: both eigenvalues negative.
pub fn neutral_is_stable(bt: &BalanceTerms, na: usize) -> bool {
    let (e1, e2) = eigenvalues_exact(bt, na);
    e1 < 0.0 && e2 < 0.0
}

/// Summary written by the `analyze` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub kind: BifurcationKind,
    pub lambda_crit: Option<f64>,
    pub c1: f64,
    pub c2: f64,
    pub eig_consensus: f64,
    pub eig_dissensus: f64,
    pub block_residual: f64,
}

/// Linear analysis of `m` at its own λ. The bifurcation kind comes from the
/// numeric balance terms (per unit λ) so perturbed models are handled too.
pub fn analyze(m: &ModelInstance) -> Result<(AnalysisReport, BalanceTerms)> {
    let (na, no) = (m.na(), m.no());
    let lambda = m.lambda();
    let bt = balance_terms(m, lambda, tol::FD_STEP)?;
    let (c1, c2) = eigenvalues_cd(&bt, na, no);
    let jac = jacobian_at_neutral(m);
    let eig_consensus = leading_eigenvalue(&jac, na, no, Subspace::Consensus);
    let eig_dissensus = if na > 1 { leading_eigenvalue(&jac, na, no, Subspace::Dissensus) } else { f64::NEG_INFINITY };
    let residual = block_residual(&jac, na, no);
    let unit = balance_terms(m, 1.0, tol::FD_STEP)?;
    let pred = critical_lambdas(unit.abar, unit.bbar, unit.gbar, unit.dbar, na)?;
    Ok((
        AnalysisReport {
            kind: pred.kind,
            lambda_crit: pred.critical_lambda,
            c1,
            c2,
            eig_consensus,
            eig_dissensus,
            block_residual: residual,
        },
        bt,
    ))
}
