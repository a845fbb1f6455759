//! Fully connected networks with exact reverse-mode gradients, the actor and
//! critic heads built on them, input normalization and the Adam optimizer.
//!
//! Parameters of an [`Mlp`] live in one flat vector. Layer `l` stores its
//! weights row-major (`out x in`) followed by its biases.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::Rng as _;
use thiserror::Error;

use crate::Rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("length {got}, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite value in network input")]
    NonFiniteInput,
    #[error("non-finite gradient; update skipped")]
    NonFiniteGradient,
    #[error("invalid network shape: {0}")]
    InvalidShape(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(rename_all = "lowercase"))]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => libm::tanh(x),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// Cached layer outputs of the last forward pass plus backward scratch.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    carry: Vec<f64>,
}

impl Workspace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn input(&self) -> &[f64] {
        self.acts.first().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    activations: Vec<Activation>,
    params: Vec<f64>,
    offsets: Vec<usize>,
}

fn layer_offsets(sizes: &[usize]) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut off = 0;
    for w in sizes.windows(2) {
        offsets.push(off);
        off += w[1] * w[0] + w[1];
    }
    (offsets, off)
}

impl Mlp {
    /// Zero-initialized network; `hidden` is used on every layer but the last.
    pub fn new(sizes: &[usize], hidden: Activation, output: Activation) -> Result<Self, NeuralError> {
        if sizes.len() < 2 {
            return Err(NeuralError::InvalidShape("need at least input and output sizes"));
        }
        if sizes.contains(&0) {
            return Err(NeuralError::InvalidShape("zero-width layer"));
        }
        let layers = sizes.len() - 1;
        let mut activations = vec![hidden; layers];
        activations[layers - 1] = output;
        let (offsets, total) = layer_offsets(sizes);
        Ok(Self { sizes: sizes.to_vec(), activations, params: vec![0.0; total], offsets })
    }

    pub fn from_parts(sizes: Vec<usize>, activations: Vec<Activation>, params: Vec<f64>) -> Result<Self, NeuralError> {
        if sizes.len() < 2 || activations.len() != sizes.len() - 1 || sizes.contains(&0) {
            return Err(NeuralError::InvalidShape("sizes and activations do not chain"));
        }
        let (offsets, total) = layer_offsets(&sizes);
        if params.len() != total {
            return Err(NeuralError::ShapeMismatch { expected: total, got: params.len() });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(NeuralError::InvalidShape("non-finite parameter"));
        }
        Ok(Self { sizes, activations, params, offsets })
    }

    /// Uniform `+-1/sqrt(fan_in)` for every layer; the last layer uses
    /// `+-final_scale` when given.
    pub fn init_uniform(&mut self, rng: &mut Rng, final_scale: Option<f64>) {
        let layers = self.layers();
        for l in 0..layers {
            let bound = match final_scale {
                Some(s) if l + 1 == layers => s,
                _ => 1.0 / libm::sqrt(self.sizes[l] as f64),
            };
            let range = self.layer_range(l);
            for p in &mut self.params[range] {
                *p = rng.random_range(-bound..=bound);
            }
        }
    }

    pub fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn layer_range(&self, l: usize) -> Range<usize> {
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        self.offsets[l]..self.offsets[l] + o * i + o
    }

    /// Index ranges holding weights (biases excluded).
    pub fn weight_ranges(&self) -> Vec<Range<usize>> {
        (0..self.layers())
            .map(|l| self.offsets[l]..self.offsets[l] + self.sizes[l] * self.sizes[l + 1])
            .collect()
    }

    pub fn weight_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.params.len()];
        for r in self.weight_ranges() {
            mask[r].iter_mut().for_each(|m| *m = true);
        }
        mask
    }

    pub fn forward<'w>(&self, input: &[f64], ws: &'w mut Workspace) -> Result<&'w [f64], NeuralError> {
        if input.len() != self.input_len() {
            return Err(NeuralError::ShapeMismatch { expected: self.input_len(), got: input.len() });
        }
        if input.iter().any(|x| !x.is_finite()) {
            return Err(NeuralError::NonFiniteInput);
        }
        ws.acts.resize_with(self.sizes.len(), Vec::new);
        ws.acts[0].clear();
        ws.acts[0].extend_from_slice(input);
        for l in 0..self.layers() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[self.offsets[l]..self.offsets[l] + n_in * n_out];
            let b = &self.params[self.offsets[l] + n_in * n_out..self.offsets[l] + n_in * n_out + n_out];
            let act = self.activations[l];
            let (prev, rest) = ws.acts.split_at_mut(l + 1);
            let x = &prev[l];
            let y = &mut rest[0];
            y.clear();
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut z = b[o];
                for (wi, xi) in row.iter().zip(x.iter()) {
                    z += wi * xi;
                }
                y.push(act.apply(z));
            }
        }
        Ok(ws.output())
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>, NeuralError> {
        let mut ws = Workspace::default();
        Ok(self.forward(input, &mut ws)?.to_vec())
    }

    /// Backpropagates `grad_out` (dL/d output) through the cached forward
    /// pass. Parameter gradients are accumulated into `param_grad`; the input
    /// gradient overwrites `input_grad`.
    pub fn backward(
        &self,
        ws: &mut Workspace,
        grad_out: &[f64],
        mut param_grad: Option<&mut [f64]>,
        input_grad: Option<&mut [f64]>,
    ) -> Result<(), NeuralError> {
        if grad_out.len() != self.output_len() {
            return Err(NeuralError::ShapeMismatch { expected: self.output_len(), got: grad_out.len() });
        }
        if ws.acts.len() != self.sizes.len() || ws.acts[0].len() != self.input_len() {
            return Err(NeuralError::InvalidShape("backward without a matching forward pass"));
        }
        if let Some(g) = param_grad.as_deref() {
            if g.len() != self.params.len() {
                return Err(NeuralError::ShapeMismatch { expected: self.params.len(), got: g.len() });
            }
        }
        if let Some(g) = input_grad.as_deref() {
            if g.len() != self.input_len() {
                return Err(NeuralError::ShapeMismatch { expected: self.input_len(), got: g.len() });
            }
        }
        let last = self.layers() - 1;
        ws.delta.clear();
        ws.delta.extend(
            grad_out
                .iter()
                .zip(&ws.acts[last + 1])
                .map(|(g, y)| g * self.activations[last].derivative_from_output(*y)),
        );
        let need_input = input_grad.is_some();
        for l in (0..self.layers()).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w_off = self.offsets[l];
            let b_off = w_off + n_in * n_out;
            let x = &ws.acts[l];
            if let Some(g) = param_grad.as_deref_mut() {
                for o in 0..n_out {
                    let d = ws.delta[o];
                    if d != 0.0 {
                        let row = &mut g[w_off + o * n_in..w_off + (o + 1) * n_in];
                        for (gi, xi) in row.iter_mut().zip(x.iter()) {
                            *gi += d * xi;
                        }
                    }
                    g[b_off + o] += d;
                }
            }
            if l == 0 && !need_input {
                break;
            }
            ws.carry.clear();
            ws.carry.resize(n_in, 0.0);
            let w = &self.params[w_off..b_off];
            for o in 0..n_out {
                let d = ws.delta[o];
                if d != 0.0 {
                    for (c, wi) in ws.carry.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *c += d * wi;
                    }
                }
            }
            if l > 0 {
                let act = self.activations[l - 1];
                for (c, y) in ws.carry.iter_mut().zip(&ws.acts[l]) {
                    *c *= act.derivative_from_output(*y);
                }
            }
            core::mem::swap(&mut ws.delta, &mut ws.carry);
        }
        if let Some(g) = input_grad {
            g.copy_from_slice(&ws.delta);
        }
        Ok(())
    }

    /// `self <- tau * main + (1 - tau) * self`.
    pub fn soft_update_from(&mut self, main: &Mlp, tau: f64) -> Result<(), NeuralError> {
        if main.sizes != self.sizes {
            return Err(NeuralError::InvalidShape("soft update between different shapes"));
        }
        for (t, m) in self.params.iter_mut().zip(&main.params) {
            *t = tau * m + (1.0 - tau) * *t;
        }
        Ok(())
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), NeuralError> {
        if params.len() != self.params.len() {
            return Err(NeuralError::ShapeMismatch { expected: self.params.len(), got: params.len() });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }
}

/// Affine map of each component from `[lo, hi]` to `[-1, 1]`; degenerate
/// components map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Normalizer {
    pub fn new(bounds: &[(f64, f64)]) -> Self {
        Self { lo: bounds.iter().map(|b| b.0).collect(), hi: bounds.iter().map(|b| b.1).collect() }
    }

    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }

    /// `d normalized / d raw` of component `i`.
    pub fn scale(&self, i: usize) -> f64 {
        let span = self.hi[i] - self.lo[i];
        if span > 0.0 {
            2.0 / span
        } else {
            0.0
        }
    }

    pub fn normalize_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(x.iter().enumerate().map(|(i, v)| (v - self.lo[i]) * self.scale(i) - if self.scale(i) > 0.0 { 1.0 } else { 0.0 }));
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        self.normalize_into(x, &mut out);
        out
    }

    /// Inverse of [`normalize`](Self::normalize); degenerate components return `lo`.
    pub fn denormalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(i, v)| {
                let span = self.hi[i] - self.lo[i];
                if span > 0.0 {
                    self.lo[i] + (v + 1.0) * span / 2.0
                } else {
                    self.lo[i]
                }
            })
            .collect()
    }
}

/// Output range of one action channel. `max` is the clip ceiling; it is
/// below `high` when the interval is half-open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionBound {
    pub low: f64,
    pub high: f64,
    pub max: f64,
}

impl ActionBound {
    pub fn closed(low: f64, high: f64) -> Self {
        Self { low, high, max: high }
    }

    pub fn half_open(low: f64, high: f64) -> Self {
        Self { low, high, max: high.next_down() }
    }

    #[inline]
    pub fn clip(&self, a: f64) -> f64 {
        a.clamp(self.low, self.max)
    }
}

/// Policy network: hidden ReLU layers, tanh output, affine scaling to the
/// action bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorNet {
    pub mlp: Mlp,
    pub bounds: Vec<ActionBound>,
}

impl ActorNet {
    pub fn new(state_dim: usize, hidden: &[usize], bounds: Vec<ActionBound>, rng: &mut Rng) -> Result<Self, NeuralError> {
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(bounds.len());
        let mut mlp = Mlp::new(&sizes, Activation::Relu, Activation::Tanh)?;
        mlp.init_uniform(rng, Some(3e-3));
        Ok(Self { mlp, bounds })
    }

    pub fn from_mlp(mlp: Mlp, bounds: Vec<ActionBound>) -> Result<Self, NeuralError> {
        if mlp.output_len() != bounds.len() {
            return Err(NeuralError::ShapeMismatch { expected: bounds.len(), got: mlp.output_len() });
        }
        Ok(Self { mlp, bounds })
    }

    pub fn state_dim(&self) -> usize {
        self.mlp.input_len()
    }

    pub fn action_dim(&self) -> usize {
        self.bounds.len()
    }

    /// Action for a normalized state.
    pub fn forward(&self, state: &[f64], ws: &mut Workspace) -> Result<Vec<f64>, NeuralError> {
        let y = self.mlp.forward(state, ws)?;
        Ok(y.iter().zip(&self.bounds).map(|(y, b)| b.clip(b.low + (y + 1.0) * 0.5 * (b.high - b.low))).collect())
    }

    pub fn act(&self, state: &[f64]) -> Result<Vec<f64>, NeuralError> {
        self.forward(state, &mut Workspace::default())
    }

    /// Backpropagates `dL/d action`; the clip passes gradients through.
    pub fn backward(
        &self,
        ws: &mut Workspace,
        grad_action: &[f64],
        param_grad: Option<&mut [f64]>,
        input_grad: Option<&mut [f64]>,
    ) -> Result<(), NeuralError> {
        if grad_action.len() != self.bounds.len() {
            return Err(NeuralError::ShapeMismatch { expected: self.bounds.len(), got: grad_action.len() });
        }
        let g: Vec<f64> =
            grad_action.iter().zip(&self.bounds).map(|(g, b)| g * 0.5 * (b.high - b.low)).collect();
        self.mlp.backward(ws, &g, param_grad, input_grad)
    }
}

/// Q network on `normalized state ++ normalized action`, linear scalar head.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticNet {
    pub mlp: Mlp,
    pub action_norm: Normalizer,
}

impl CriticNet {
    pub fn new(state_dim: usize, hidden: &[usize], action_bounds: &[(f64, f64)], rng: &mut Rng) -> Result<Self, NeuralError> {
        let mut sizes = vec![state_dim + action_bounds.len()];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let mut mlp = Mlp::new(&sizes, Activation::Relu, Activation::Identity)?;
        mlp.init_uniform(rng, Some(3e-3));
        Ok(Self { mlp, action_norm: Normalizer::new(action_bounds) })
    }

    pub fn state_dim(&self) -> usize {
        self.mlp.input_len() - self.action_norm.len()
    }

    pub fn forward(&self, state: &[f64], action: &[f64], ws: &mut Workspace) -> Result<f64, NeuralError> {
        if action.len() != self.action_norm.len() {
            return Err(NeuralError::ShapeMismatch { expected: self.action_norm.len(), got: action.len() });
        }
        let mut input = Vec::with_capacity(self.mlp.input_len());
        input.extend_from_slice(state);
        input.extend(self.action_norm.normalize(action));
        Ok(self.mlp.forward(&input, ws)?[0])
    }

    pub fn q(&self, state: &[f64], action: &[f64]) -> Result<f64, NeuralError> {
        self.forward(state, action, &mut Workspace::default())
    }

    /// Backpropagates `dL/dQ`. `action_grad` receives `dL/d raw action`.
    pub fn backward(
        &self,
        ws: &mut Workspace,
        grad_q: f64,
        param_grad: Option<&mut [f64]>,
        action_grad: Option<&mut [f64]>,
    ) -> Result<(), NeuralError> {
        match action_grad {
            None => self.mlp.backward(ws, &[grad_q], param_grad, None),
            Some(ag) => {
                if ag.len() != self.action_norm.len() {
                    return Err(NeuralError::ShapeMismatch { expected: self.action_norm.len(), got: ag.len() });
                }
                let mut gin = vec![0.0; self.mlp.input_len()];
                self.mlp.backward(ws, &[grad_q], param_grad, Some(&mut gin))?;
                let sd = self.state_dim();
                for (i, g) in ag.iter_mut().enumerate() {
                    *g = gin[sd + i] * self.action_norm.scale(i);
                }
                Ok(())
            }
        }
    }
}

/// Adam with an L2 penalty `l2 * w` added to the gradient of weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub l2: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    mask: Vec<bool>,
}

impl Adam {
    pub fn new(net: &Mlp, lr: f64, l2: f64) -> Self {
        let n = net.param_count();
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, l2, m: vec![0.0; n], v: vec![0.0; n], t: 0, mask: net.weight_mask() }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One descent step. Non-finite gradients leave everything untouched.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), NeuralError> {
        if grads.len() != params.len() || params.len() != self.m.len() {
            return Err(NeuralError::ShapeMismatch { expected: self.m.len(), got: grads.len() });
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(NeuralError::NonFiniteGradient);
        }
        self.t += 1;
        let bc1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let bc2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        for i in 0..params.len() {
            let g = if self.mask[i] { grads[i] + self.l2 * params[i] } else { grads[i] };
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            params[i] -= self.lr * mh / (libm::sqrt(vh) + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng_from_seed;
    use core::f64::consts::TAU;
    use proptest::prelude::*;

    fn random_mlp(sizes: &[usize], hidden: Activation, out: Activation, seed: u64) -> Mlp {
        let mut m = Mlp::new(sizes, hidden, out).unwrap();
        m.init_uniform(&mut rng_from_seed(seed), None);
        m
    }

    /// Straight-line recomputation of the forward pass.
    fn oracle_forward(m: &Mlp, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        let p = m.params();
        let mut off = 0;
        for l in 0..m.layers() {
            let (ni, no) = (m.sizes()[l], m.sizes()[l + 1]);
            let mut next = vec![0.0; no];
            for o in 0..no {
                let mut z = p[off + no * ni + o];
                for i in 0..ni {
                    z += p[off + o * ni + i] * a[i];
                }
                next[o] = match m.activations()[l] {
                    Activation::Relu => if z > 0.0 { z } else { 0.0 },
                    Activation::Tanh => z.tanh(),
                    Activation::Identity => z,
                };
            }
            off += no * ni + no;
            a = next;
        }
        a
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
    }

    #[test]
    fn zero_net_outputs_zero() {
        let m = Mlp::new(&[3, 4, 2], Activation::Relu, Activation::Identity).unwrap();
        assert_eq!(m.predict(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn one_by_one_tanh() {
        let m = Mlp::from_parts(vec![1, 1], vec![Activation::Tanh], vec![1.0, 0.0]).unwrap();
        assert_eq!(m.predict(&[0.3]).unwrap()[0], libm::tanh(0.3));
    }

    #[test]
    fn forward_matches_oracle() {
        let mut rng = rng_from_seed(5);
        for seed in 0..10 {
            let m = random_mlp(&[5, 7, 6, 3], Activation::Relu, Activation::Tanh, seed);
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = m.predict(&x).unwrap();
            let b = oracle_forward(&m, &x);
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = random_mlp(&[2, 3, 1], Activation::Relu, Activation::Identity, 1);
        assert!(matches!(m.predict(&[1.0]), Err(NeuralError::ShapeMismatch { .. })));
        assert_eq!(m.predict(&[f64::NAN, 0.0]), Err(NeuralError::NonFiniteInput));
    }

    #[test]
    fn linear_layer_input_gradient_is_transpose() {
        let m = random_mlp(&[3, 2], Activation::Relu, Activation::Identity, 3);
        let mut ws = Workspace::default();
        m.forward(&[0.1, 0.2, 0.3], &mut ws).unwrap();
        let mut gi = vec![0.0; 3];
        m.backward(&mut ws, &[1.0, -2.0], None, Some(&mut gi)).unwrap();
        let p = m.params();
        for i in 0..3 {
            assert!((gi[i] - (p[i] - 2.0 * p[3 + i])).abs() < 1e-15);
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn mlp_gradients_match_finite_differences() {
        let mut rng = rng_from_seed(11);
        for seed in 0..5 {
            let m = random_mlp(&[4, 6, 5, 2], Activation::Tanh, Activation::Identity, seed);
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let up = [0.7, -1.3];
            let loss = |m: &Mlp, x: &[f64]| {
                let y = m.predict(x).unwrap();
                y[0] * up[0] + y[1] * up[1]
            };
            let mut ws = Workspace::default();
            m.forward(&x, &mut ws).unwrap();
            let mut pg = vec![0.0; m.param_count()];
            let mut ig = vec![0.0; 4];
            m.backward(&mut ws, &up, Some(&mut pg), Some(&mut ig)).unwrap();
            let h = 1e-5;
            for k in 0..m.param_count() {
                let mut a = m.clone();
                a.params_mut()[k] += h;
                let mut b = m.clone();
                b.params_mut()[k] -= h;
                let fd = (loss(&a, &x) - loss(&b, &x)) / (2.0 * h);
                assert!(rel_err(pg[k], fd) < 1e-5, "param {k}: {} vs {fd}", pg[k]);
            }
            for k in 0..4 {
                let mut a = x.clone();
                a[k] += h;
                let mut b = x.clone();
                b[k] -= h;
                let fd = (loss(&m, &a) - loss(&m, &b)) / (2.0 * h);
                assert!(rel_err(ig[k], fd) < 1e-5);
            }
        }
    }

    #[test]
    fn critic_action_gradient_includes_normalization() {
        let mut rng = rng_from_seed(2);
        let critic = CriticNet::new(3, &[8, 6], &[(0.0, TAU), (0.0, 1.0)], &mut rng).unwrap();
        let s = [0.1, -0.4, 0.9];
        let a = [2.0, 0.3];
        let mut ws = Workspace::default();
        critic.forward(&s, &a, &mut ws).unwrap();
        let mut ag = [0.0; 2];
        critic.backward(&mut ws, 1.0, None, Some(&mut ag)).unwrap();
        let h = 1e-5;
        for k in 0..2 {
            let mut p = a;
            p[k] += h;
            let mut m = a;
            m[k] -= h;
            let fd = (critic.q(&s, &p).unwrap() - critic.q(&s, &m).unwrap()) / (2.0 * h);
            assert!(rel_err(ag[k], fd) < 1e-5, "{} vs {fd}", ag[k]);
        }
    }

    #[test]
    fn normalizer_endpoints_and_midpoint() {
        let n = Normalizer::new(&[(0.0, 10.0), (150.0, 10000.0), (3.0, 3.0)]);
        assert_eq!(n.normalize(&[0.0, 150.0, 3.0]), vec![-1.0, -1.0, 0.0]);
        assert_eq!(n.normalize(&[10.0, 10000.0, 3.0])[..2], [1.0, 1.0]);
        assert!(n.normalize(&[5.0, 5075.0, 3.0])[1].abs() < 1e-15);
    }

    #[test]
    fn adam_zero_grad_zero_l2_is_noop() {
        let m = random_mlp(&[2, 3, 1], Activation::Relu, Activation::Identity, 4);
        let mut p = m.params().to_vec();
        let before = p.clone();
        let mut opt = Adam::new(&m, 1e-4, 0.0);
        let z = vec![0.0; p.len()];
        opt.step(&mut p, &z).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn adam_weight_decay_shrinks_weights_only() {
        let m = random_mlp(&[2, 3, 1], Activation::Relu, Activation::Identity, 4);
        let mut p = m.params().to_vec();
        let before = p.clone();
        let mut opt = Adam::new(&m, 1e-3, 1e-2);
        let z = vec![0.0; p.len()];
        opt.step(&mut p, &z).unwrap();
        let mask = m.weight_mask();
        for i in 0..p.len() {
            if mask[i] {
                assert!(p[i].abs() < before[i].abs());
            } else {
                assert_eq!(p[i], before[i]);
            }
        }
    }

    #[test]
    fn adam_solves_scalar_quadratic() {
        let m = Mlp::from_parts(vec![1, 1], vec![Activation::Identity], vec![0.0, 0.0]).unwrap();
        let mut p = vec![5.0, 0.0];
        let mut opt = Adam::new(&m, 1e-2, 0.0);
        for _ in 0..10_000 {
            let g = vec![2.0 * (p[0] - 1.5), 0.0];
            opt.step(&mut p, &g).unwrap();
        }
        assert!((p[0] - 1.5).abs() < 1e-3, "{}", p[0]);
    }

    #[test]
    fn adam_skips_non_finite() {
        let m = random_mlp(&[1, 1], Activation::Relu, Activation::Identity, 0);
        let mut p = m.params().to_vec();
        let before = p.clone();
        let mut opt = Adam::new(&m, 1e-3, 0.0);
        assert_eq!(opt.step(&mut p, &[f64::NAN, 0.0]), Err(NeuralError::NonFiniteGradient));
        assert_eq!(p, before);
        assert_eq!(opt.steps(), 0);
    }

    proptest! {
        #[test]
        fn actor_outputs_stay_in_bounds(state in proptest::collection::vec(-50.0f64..50.0, 4), seed in 0u64..50) {
            let mut rng = rng_from_seed(seed);
            let mut actor = ActorNet::new(4, &[6, 5], vec![ActionBound::half_open(0.0, TAU), ActionBound::closed(0.0, 1.0)], &mut rng).unwrap();
            // large weights push tanh into saturation
            for p in actor.mlp.params_mut() { *p *= 200.0; }
            let a = actor.act(&state).unwrap();
            prop_assert!(a[0] >= 0.0 && a[0] < TAU);
            prop_assert!(a[1] >= 0.0 && a[1] <= 1.0);
        }

        #[test]
        fn normalizer_round_trip(x in proptest::collection::vec(-100.0f64..100.0, 3)) {
            let n = Normalizer::new(&[(-100.0, 100.0), (0.0, 7.0), (-3.0, 50.0)]);
            let back = n.denormalize(&n.normalize(&x));
            for (a, b) in x.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
