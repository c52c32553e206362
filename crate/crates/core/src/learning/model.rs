//! Dense regressor `385 -> 64 -> 32 -> 1` with exact backpropagation.
//!
//! Parameters live in one flat vector: for each layer the weight matrix
//! (row-major, `out x in`) followed by its bias vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

use super::features::FEATURE_LEN;

pub const OUTPUT_SCALE: f64 = 1.2;
pub const DEFAULT_DIMS: [usize; 4] = [FEATURE_LEN, 64, 32, 1];

/// Which ratio a network predicts: `N` rectifies dead reckoning from the
/// commanded rate, `Pi` inverts the policy from the achieved rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "N")]
    N,
    #[serde(rename = "pi")]
    Pi,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::N => "N",
            Role::Pi => "pi",
        }
    }

    pub fn parse(s: &str) -> Result<Role> {
        match s {
            "N" => Ok(Role::N),
            "pi" => Ok(Role::Pi),
            other => Err(Error::Model(format!("unknown model role {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    /// Test-only linear variant.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// `1.2 * sigmoid(z)`, floored at the smallest positive double.
    ScaledSigmoid,
    /// Test-only linear output.
    Linear,
}

/// One training example: a full feature vector and its ratio label.
/// `command_omega` is the commanded rate the label was divided by, used to
/// drop frames whose ratio is ill-defined.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: f64,
    pub command_omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    role: Role,
    dims: Vec<usize>,
    params: Vec<f64>,
    hidden: Activation,
    head: Head,
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl ModelParams {
    /// All-zero parameters.
    pub fn zeros(role: Role, dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d == 0) || *dims.last().unwrap() != 1 {
            return Err(Error::Model(format!("invalid layer dims {dims:?}; need >= 2 positive sizes ending in 1")));
        }
        Ok(ModelParams {
            role,
            dims: dims.to_vec(),
            params: vec![0.0; param_count(dims)],
            hidden: Activation::Relu,
            head: Head::ScaledSigmoid,
        })
    }

    /// Weights and biases uniform in `+-1/sqrt(fan_in)` from `seed`.
    pub fn init(role: Role, dims: &[usize], seed: u64) -> Result<Self> {
        let mut m = Self::zeros(role, dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut off = 0;
        for w in dims.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            let n = w[0] * w[1] + w[1];
            for p in &mut m.params[off..off + n] {
                *p = rng.random_range(-bound..bound);
            }
            off += n;
        }
        Ok(m)
    }

    pub fn from_parts(role: Role, dims: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut m = Self::zeros(role, dims)?;
        if params.len() != m.params.len() {
            return Err(Error::Model(format!("expected {} parameters for dims {dims:?}, got {}", m.params.len(), params.len())));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Model("non-finite parameter".into()));
        }
        m.params = params;
        Ok(m)
    }

    pub fn with_variant(mut self, hidden: Activation, head: Head) -> Self {
        self.hidden = hidden;
        self.head = head;
        self
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn input_len(&self) -> usize {
        self.dims[0]
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dims[0] {
            return Err(Error::Dimension(format!("feature length {} but model expects {}", x.len(), self.dims[0])));
        }
        Ok(())
    }

    fn activate(&self, z: f64) -> f64 {
        match self.hidden {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    fn output(&self, z: f64) -> f64 {
        match self.head {
            Head::ScaledSigmoid => (OUTPUT_SCALE * sigmoid(z)).max(f64::MIN_POSITIVE),
            Head::Linear => z,
        }
    }

    /// Forward pass keeping every layer's pre-activations. Zero inputs are
    /// skipped, which leaves sums unchanged.
    fn forward_layers(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(self.dims.len() - 1);
        let mut input: Vec<f64> = x.to_vec();
        let mut off = 0;
        let last = self.dims.len() - 2;
        for (l, w) in self.dims.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &self.params[off..off + n_in * n_out];
            let bias = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let nz: Vec<usize> = (0..n_in).filter(|&i| input[i] != 0.0).collect();
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    bias[o] + nz.iter().map(|&i| row[i] * input[i]).sum::<f64>()
                })
                .collect();
            if l < last {
                input = z.iter().map(|&v| self.activate(v)).collect();
            }
            pre.push(z);
            off += n_in * n_out + n_out;
        }
        pre
    }

    /// Prediction for one feature vector.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        let pre = self.forward_layers(x);
        let y = self.output(pre.last().unwrap()[0]);
        if !y.is_finite() || pre.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Model("non-finite value in forward pass".into()));
        }
        Ok(y)
    }

    /// Adds `scale * d(loss)/d(params)` of one sample's squared error to
    /// `grad` and returns that squared error.
    pub(crate) fn accumulate(&self, x: &[f64], label: f64, scale: f64, grad: &mut [f64]) -> Result<f64> {
        self.check_input(x)?;
        let pre = self.forward_layers(x);
        let z_out = pre.last().unwrap()[0];
        let y = self.output(z_out);
        if !y.is_finite() || pre.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Model("non-finite value in forward pass".into()));
        }
        let err = y - label;
        let dy_dz = match self.head {
            Head::ScaledSigmoid => {
                let s = sigmoid(z_out);
                OUTPUT_SCALE * s * (1.0 - s)
            }
            Head::Linear => 1.0,
        };
        let mut delta = vec![scale * 2.0 * err * dy_dz];
        let offsets: Vec<usize> = self
            .dims
            .windows(2)
            .scan(0, |off, w| {
                let o = *off;
                *off += w[0] * w[1] + w[1];
                Some(o)
            })
            .collect();
        for l in (0..self.dims.len() - 1).rev() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let off = offsets[l];
            let input: Vec<f64> = if l == 0 {
                x.to_vec()
            } else {
                pre[l - 1].iter().map(|&v| self.activate(v)).collect()
            };
            let nz: Vec<usize> = (0..n_in).filter(|&i| input[i] != 0.0).collect();
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for &i in &nz {
                    row[i] += d * input[i];
                }
                grad[off + n_in * n_out + o] += d;
            }
            if l > 0 {
                let weights = &self.params[off..off + n_in * n_out];
                let mut next = vec![0.0; n_in];
                for o in 0..n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    for (n, w) in next.iter_mut().zip(row) {
                        *n += d * w;
                    }
                }
                for (n, &z) in next.iter_mut().zip(&pre[l - 1]) {
                    let g = match self.hidden {
                        Activation::Relu => {
                            if z > 0.0 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        Activation::Identity => 1.0,
                    };
                    *n *= g;
                }
                delta = next;
            }
        }
        Ok(err * err)
    }
}

/// Mean squared error over `batch` and its exact gradient.
pub fn loss_and_grad(model: &ModelParams, batch: &[Sample]) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Model("empty batch".into()));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut grad = vec![0.0; model.params.len()];
    let mut loss = 0.0;
    for s in batch {
        loss += model.accumulate(&s.features, s.label, scale, &mut grad)?;
    }
    Ok((loss * scale, grad))
}

/// Largest discrepancy between the analytic gradient and central differences
/// of step `eps`, over all parameters. Each discrepancy is divided by
/// `max(|analytic|, |numeric|, 1e-3)`, so gradients much smaller than the
/// floor are compared absolutely.
pub fn grad_check(model: &ModelParams, sample: &Sample, eps: f64) -> Result<f64> {
    if !(eps.is_finite() && eps > 0.0) {
        return domain(format!("finite-difference step must be > 0, got {eps}"));
    }
    let (_, analytic) = loss_and_grad(model, std::slice::from_ref(sample))?;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for i in 0..model.params.len() {
        let orig = model.params[i];
        probe.params[i] = orig + eps;
        let plus = (probe.forward(&sample.features)? - sample.label).powi(2);
        probe.params[i] = orig - eps;
        let minus = (probe.forward(&sample.features)? - sample.label).powi(2);
        probe.params[i] = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-3);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    Ok(worst)
}
