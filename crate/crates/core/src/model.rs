//! The opinion vector field: saturating nonlinearities, adjacency tensor,
//! biases and the simplex-preserving drift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};
use crate::state::{center_rows, DeviationState};

pub const DEFAULT_K_HTO: f64 = 0.5;

/// `tanh(x + k·tanh(x²))`.
pub fn sigmoid_s1(x: f64, k_hto: f64) -> f64 {
    (x + k_hto * (x * x).tanh()).tanh()
}

/// `½·tanh(2x + 2k·tanh(x²))`.
pub fn sigmoid_s2(x: f64, k_hto: f64) -> f64 {
    0.5 * (2.0 * x + 2.0 * k_hto * (x * x).tanh()).tanh()
}

/// Dense coupling tensor `A[i][k][j][l]`: agent `i` listening to agent `k`,
/// option `j` influenced by option `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyTensor {
    na: usize,
    no: usize,
    // Stored as [i][j][l][k] so the sum over k is contiguous.
    data: Vec<f64>,
}

impl AdjacencyTensor {
    pub fn zeros(na: usize, no: usize) -> Self {
        AdjacencyTensor { na, no, data: vec![0.0; na * na * no * no] }
    }

    pub fn na(&self) -> usize {
        self.na
    }
    pub fn no(&self) -> usize {
        self.no
    }

    #[inline]
    fn idx(&self, i: usize, k: usize, j: usize, l: usize) -> usize {
        ((i * self.no + j) * self.no + l) * self.na + k
    }

    pub fn get(&self, i: usize, k: usize, j: usize, l: usize) -> f64 {
        self.data[self.idx(i, k, j, l)]
    }

    pub fn set(&mut self, i: usize, k: usize, j: usize, l: usize, v: f64) {
        let n = self.idx(i, k, j, l);
        self.data[n] = v;
    }

    /// Nested `[i][k][j][l]` arrays.
    pub fn to_nested(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        (0..self.na)
            .map(|i| {
                (0..self.na)
                    .map(|k| (0..self.no).map(|j| (0..self.no).map(|l| self.get(i, k, j, l)).collect()).collect())
                    .collect()
            })
            .collect()
    }

    pub fn from_nested(a: &[Vec<Vec<Vec<f64>>>]) -> Result<Self> {
        let na = a.len();
        let no = a.first().and_then(|x| x.first()).map_or(0, Vec::len);
        if na == 0 || no < 2 {
            return Err(Error::InvalidArgument("tensor needs na >= 1 and no >= 2".into()));
        }
        let mut t = AdjacencyTensor::zeros(na, no);
        for (i, ai) in a.iter().enumerate() {
            if ai.len() != na {
                return Err(shape_err(na, no));
            }
            for (k, aik) in ai.iter().enumerate() {
                if aik.len() != no {
                    return Err(shape_err(na, no));
                }
                for (j, row) in aik.iter().enumerate() {
                    if row.len() != no {
                        return Err(shape_err(na, no));
                    }
                    for (l, &v) in row.iter().enumerate() {
                        if !v.is_finite() {
                            return Err(Error::InvalidArgument(format!("tensor entry ({i},{k},{j},{l}) is not finite")));
                        }
                        t.set(i, k, j, l, v);
                    }
                }
            }
        }
        Ok(t)
    }
}

fn shape_err(na: usize, no: usize) -> Error {
    Error::DimensionMismatch {
        expected: format!("tensor {na}x{na}x{no}x{no}"),
        got: "ragged nested array".into(),
    }
}

/// The all-to-all homogeneous tensor with gains α (self, same option),
/// β (self, other option), γ (other agent, same option), δ (other agent,
/// other option).
pub fn homogeneous_tensor(na: usize, no: usize, alpha: f64, beta: f64, gamma: f64, delta: f64) -> AdjacencyTensor {
    let mut t = AdjacencyTensor::zeros(na, no);
    for i in 0..na {
        for k in 0..na {
            for j in 0..no {
                for l in 0..no {
                    let v = match (i == k, j == l) {
                        (true, true) => alpha,
                        (true, false) => beta,
                        (false, true) => gamma,
                        (false, false) => delta,
                    };
                    t.set(i, k, j, l, v);
                }
            }
        }
    }
    t
}

/// Gains and bifurcation parameter of the homogeneous model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub lambda: f64,
    pub k_hto: f64,
    /// Row-major `na × no` bias.
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelInstance {
    HomogeneousAllToAll { na: usize, no: usize, params: ModelParams },
    GeneralTensor {
        tensor: AdjacencyTensor,
        bias: Vec<f64>,
        lambda: f64,
        k_hto: f64,
        /// Homogeneous gains the tensor was derived from, if any. Used to
        /// apply δ schedules to perturbed models.
        nominal: Option<[f64; 4]>,
    },
}

impl ModelInstance {
    /// Homogeneous model with zero bias.
    pub fn homogeneous(na: usize, no: usize, alpha: f64, beta: f64, gamma: f64, delta: f64, lambda: f64) -> Result<Self> {
        Self::homogeneous_with(
            na,
            no,
            ModelParams { alpha, beta, gamma, delta, lambda, k_hto: DEFAULT_K_HTO, bias: vec![0.0; na * no] },
        )
    }

    pub fn homogeneous_with(na: usize, no: usize, params: ModelParams) -> Result<Self> {
        check_dims(na, no)?;
        check_k(params.k_hto)?;
        if params.bias.len() != na * no {
            return Err(Error::DimensionMismatch { expected: format!("bias {}", dims(na, no)), got: params.bias.len().to_string() });
        }
        Ok(ModelInstance::HomogeneousAllToAll { na, no, params })
    }

    pub fn general(tensor: AdjacencyTensor, bias: Vec<f64>, lambda: f64, k_hto: f64) -> Result<Self> {
        check_k(k_hto)?;
        if bias.len() != tensor.na * tensor.no {
            return Err(Error::DimensionMismatch {
                expected: format!("bias {}", dims(tensor.na, tensor.no)),
                got: bias.len().to_string(),
            });
        }
        Ok(ModelInstance::GeneralTensor { tensor, bias, lambda, k_hto, nominal: None })
    }

    pub fn na(&self) -> usize {
        match self {
            ModelInstance::HomogeneousAllToAll { na, .. } => *na,
            ModelInstance::GeneralTensor { tensor, .. } => tensor.na,
        }
    }

    pub fn no(&self) -> usize {
        match self {
            ModelInstance::HomogeneousAllToAll { no, .. } => *no,
            ModelInstance::GeneralTensor { tensor, .. } => tensor.no,
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            ModelInstance::HomogeneousAllToAll { params, .. } => params.lambda,
            ModelInstance::GeneralTensor { lambda, .. } => *lambda,
        }
    }

    pub fn k_hto(&self) -> f64 {
        match self {
            ModelInstance::HomogeneousAllToAll { params, .. } => params.k_hto,
            ModelInstance::GeneralTensor { k_hto, .. } => *k_hto,
        }
    }

    pub fn bias(&self) -> &[f64] {
        match self {
            ModelInstance::HomogeneousAllToAll { params, .. } => &params.bias,
            ModelInstance::GeneralTensor { bias, .. } => bias,
        }
    }

    /// The (α, β, γ, δ) the model was built from, when known.
    pub fn nominal_gains(&self) -> Option<[f64; 4]> {
        match self {
            ModelInstance::HomogeneousAllToAll { params: p, .. } => Some([p.alpha, p.beta, p.gamma, p.delta]),
            ModelInstance::GeneralTensor { nominal, .. } => *nominal,
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        let mut m = self.clone();
        match &mut m {
            ModelInstance::HomogeneousAllToAll { params, .. } => params.lambda = lambda,
            ModelInstance::GeneralTensor { lambda: l, .. } => *l = lambda,
        }
        m
    }

    /// The full tensor, materialized for homogeneous models.
    pub fn tensor(&self) -> AdjacencyTensor {
        match self {
            ModelInstance::HomogeneousAllToAll { na, no, params: p } => {
                homogeneous_tensor(*na, *no, p.alpha, p.beta, p.gamma, p.delta)
            }
            ModelInstance::GeneralTensor { tensor, .. } => tensor.clone(),
        }
    }

    /// Same vector field expressed through the general tensor code path.
    pub fn to_general(&self) -> Self {
        match self {
            ModelInstance::HomogeneousAllToAll { params, .. } => ModelInstance::GeneralTensor {
                tensor: self.tensor(),
                bias: params.bias.clone(),
                lambda: params.lambda,
                k_hto: params.k_hto,
                nominal: self.nominal_gains(),
            },
            g => g.clone(),
        }
    }

    /// Evaluate the drift at `z` with the given λ, writing into `out`.
    /// `delta_shift` is added to every δ-class gain (other agent, other option).
    pub fn drift_into(&self, z: &[f64], lambda: f64, delta_shift: f64, out: &mut [f64]) {
        let (na, no) = (self.na(), self.no());
        debug_assert_eq!(z.len(), na * no);
        let mut col = vec![0.0; no];
        for r in z.chunks(no) {
            for (c, v) in col.iter_mut().zip(r) {
                *c += v;
            }
        }
        match self {
            ModelInstance::HomogeneousAllToAll { params: p, .. } => {
                let k = p.k_hto;
                let delta = p.delta + delta_shift;
                let mut s2 = vec![0.0; no];
                for i in 0..na {
                    let zi = &z[i * no..(i + 1) * no];
                    let mut total = 0.0;
                    for l in 0..no {
                        s2[l] = sigmoid_s2(p.beta * zi[l] + delta * (col[l] - zi[l]), k);
                        total += s2[l];
                    }
                    for j in 0..no {
                        let s1 = sigmoid_s1(p.alpha * zi[j] + p.gamma * (col[j] - zi[j]), k);
                        out[i * no + j] = -zi[j] + lambda * (s1 + total - s2[j]) + p.bias[i * no + j];
                    }
                }
            }
            ModelInstance::GeneralTensor { tensor, bias, k_hto, .. } => {
                let k = *k_hto;
                let mut zt = vec![0.0; na * no];
                for i in 0..na {
                    for l in 0..no {
                        zt[l * na + i] = z[i * no + l];
                    }
                }
                for i in 0..na {
                    for j in 0..no {
                        let mut acc = 0.0;
                        for l in 0..no {
                            let a = &tensor.data[tensor.idx(i, 0, j, l)..][..na];
                            let zl = &zt[l * na..(l + 1) * na];
                            let mut x: f64 = a.iter().zip(zl).map(|(p, q)| p * q).sum();
                            if l == j {
                                acc += sigmoid_s1(x, k);
                            } else {
                                if delta_shift != 0.0 {
                                    x += delta_shift * (col[l] - z[i * no + l]);
                                }
                                acc += sigmoid_s2(x, k);
                            }
                        }
                        out[i * no + j] = -z[i * no + j] + lambda * acc + bias[i * no + j];
                    }
                }
            }
        }
    }

    /// Un-projected `F(z)` as a flat row-major vector.
    pub fn raw_field(&self, z: &[f64], lambda: f64) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        self.drift_into(z, lambda, 0.0, &mut out);
        out
    }

    /// Perturb every tensor and bias entry by an independent uniform draw
    /// on `[−ε, ε]`. `ε = 0` returns the model unchanged.
    pub fn perturb(&self, epsilon: f64, seed: u64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!("epsilon must be a finite nonnegative number, got {epsilon}")));
        }
        if epsilon == 0.0 {
            return Ok(self.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensor = self.tensor();
        let (na, no) = (self.na(), self.no());
        for i in 0..na {
            for k in 0..na {
                for j in 0..no {
                    for l in 0..no {
                        let v = tensor.get(i, k, j, l) + rng.random_range(-epsilon..=epsilon);
                        tensor.set(i, k, j, l, v);
                    }
                }
            }
        }
        let bias = self.bias().iter().map(|b| b + rng.random_range(-epsilon..=epsilon)).collect();
        Ok(ModelInstance::GeneralTensor {
            tensor,
            bias,
            lambda: self.lambda(),
            k_hto: self.k_hto(),
            nominal: self.nominal_gains(),
        })
    }
}

fn check_dims(na: usize, no: usize) -> Result<()> {
    if na == 0 || no < 2 {
        return Err(Error::InvalidArgument(format!("need na >= 1 and no >= 2, got {}", dims(na, no))));
    }
    Ok(())
}

fn check_k(k: f64) -> Result<()> {
    if k == 0.0 || !k.is_finite() {
        return Err(Error::InvalidArgument(format!("k_hto must be finite and nonzero, got {k}")));
    }
    Ok(())
}

/// `ż = F(z) − row means of F(z)`.
pub fn drift(z: &DeviationState, m: &ModelInstance) -> Result<DeviationState> {
    drift_at(z, m, m.lambda())
}

/// Drift with λ overridden.
pub fn drift_at(z: &DeviationState, m: &ModelInstance, lambda: f64) -> Result<DeviationState> {
    if z.na() != m.na() || z.no() != m.no() {
        return Err(Error::DimensionMismatch { expected: dims(m.na(), m.no()), got: dims(z.na(), z.no()) });
    }
    let mut out = vec![0.0; z.as_slice().len()];
    m.drift_into(z.as_slice(), lambda, 0.0, &mut out);
    center_rows(&mut out, m.no());
    Ok(DeviationState::from_raw(m.na(), m.no(), out))
}

/// Bias as given in model files: one constant or a full matrix.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum BiasSpec {
    Uniform(f64),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PerturbSpec {
    pub epsilon: f64,
    pub seed: u64,
}

/// Model file layout.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub na: usize,
    pub no: usize,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    pub lambda: f64,
    #[serde(default = "default_k")]
    pub k_hto: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<BiasSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<Vec<Vec<Vec<Vec<f64>>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb: Option<PerturbSpec>,
}

fn default_k() -> f64 {
    DEFAULT_K_HTO
}

impl ModelSpec {
    pub fn homogeneous(na: usize, no: usize, gains: [f64; 4], lambda: f64) -> Self {
        ModelSpec {
            na,
            no,
            alpha: Some(gains[0]),
            beta: Some(gains[1]),
            gamma: Some(gains[2]),
            delta: Some(gains[3]),
            lambda,
            k_hto: DEFAULT_K_HTO,
            bias: None,
            tensor: None,
            perturb: None,
        }
    }

    pub fn gains(&self) -> Option<[f64; 4]> {
        Some([self.alpha?, self.beta?, self.gamma?, self.delta?])
    }

    fn bias_vec(&self) -> Result<Vec<f64>> {
        let (na, no) = (self.na, self.no);
        match &self.bias {
            None => Ok(vec![0.0; na * no]),
            Some(BiasSpec::Uniform(b)) => Ok(vec![*b; na * no]),
            Some(BiasSpec::Matrix(rows)) => {
                if rows.len() != na || rows.iter().any(|r| r.len() != no) {
                    return Err(Error::Schema(format!("bias matrix must be {}", dims(na, no))));
                }
                Ok(rows.iter().flatten().copied().collect())
            }
        }
    }

    /// Build the model, applying the perturbation if one is requested.
    pub fn build(&self) -> Result<ModelInstance> {
        check_dims(self.na, self.no).map_err(|e| Error::Schema(e.to_string()))?;
        let bias = self.bias_vec()?;
        let base = match (&self.tensor, self.gains()) {
            (Some(t), gains) => {
                let tensor = AdjacencyTensor::from_nested(t).map_err(|e| Error::Schema(e.to_string()))?;
                if tensor.na != self.na || tensor.no != self.no {
                    return Err(Error::Schema(format!("tensor shape does not match {}", dims(self.na, self.no))));
                }
                check_k(self.k_hto)?;
                ModelInstance::GeneralTensor { tensor, bias, lambda: self.lambda, k_hto: self.k_hto, nominal: gains }
            }
            (None, Some([alpha, beta, gamma, delta])) => ModelInstance::homogeneous_with(
                self.na,
                self.no,
                ModelParams { alpha, beta, gamma, delta, lambda: self.lambda, k_hto: self.k_hto, bias },
            )?,
            (None, None) => {
                return Err(Error::Schema("model needs alpha, beta, gamma and delta, or a tensor".into()));
            }
        };
        match self.perturb {
            Some(p) => base.perturb(p.epsilon, p.seed),
            None => Ok(base),
        }
    }
}
