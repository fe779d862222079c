//! Gated graph neural network over encoded instance graphs.
//!
//! Propagation runs `T` synchronous steps. At each step a node receives one
//! message per incident edge channel, `A_c·h_w + b_c`, and the summed message
//! drives a GRU update of its state. The readout gates every node with
//! `r_v = sig(i([h_v^T; h_v^0]))`, weights the node value
//! `tanh(j([h_v^T; h_v^0]))`, and squashes the sum into a score in `(0, 1)`.

mod backward;
mod check;
mod forward;
mod persist;

pub use backward::{backward, gradients, BatchGradients};
pub use check::{
    gradient_check, gradient_error, random_gradient_case, GradientCase, GRADIENT_EPSILON,
    GRADIENT_TOLERANCE,
};
pub use forward::{forward, loss, propagate, readout, ForwardResult, NodeStates};
pub use persist::{load_model, save_model};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::instance_graph::{EdgeType, NUM_CHANNELS};
use crate::numerics::{glorot_uniform, Matrix, Rng};

/// Final squashing of the readout sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReadoutMode {
    /// `sig(tanh(Σ r_v·value_v))`; scores stay within `[sig(-1), sig(1)]`.
    #[default]
    Literal,
    /// `sig(Σ r_v·value_v)`, full `(0, 1)` range.
    LinearOut,
}

impl ReadoutMode {
    pub fn name(self) -> &'static str {
        match self {
            ReadoutMode::Literal => "literal",
            ReadoutMode::LinearOut => "linear_out",
        }
    }
}

impl fmt::Display for ReadoutMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReadoutMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(ReadoutMode::Literal),
            "linear_out" => Ok(ReadoutMode::LinearOut),
            other => Err(Error::Config(format!("unknown readout mode {other:?}"))),
        }
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GgnnConfig {
    /// Hidden dimensions beyond the one-hot annotation.
    pub padding: usize,
    pub steps: usize,
    pub readout: ReadoutMode,
}

impl Default for GgnnConfig {
    fn default() -> Self {
        Self {
            padding: 8,
            steps: 5,
            readout: ReadoutMode::Literal,
        }
    }
}

/// All learnable weights. The same layout doubles as a gradient set.
#[derive(Debug, Clone, PartialEq)]
pub struct GgnnParams {
    pub hidden_dim: usize,
    pub steps: usize,
    pub readout: ReadoutMode,
    /// Per channel `D×D`.
    pub edge_weights: Vec<Matrix>,
    /// Per channel `D×1`.
    pub edge_biases: Vec<Matrix>,
    pub w_z: Matrix,
    pub w_r: Matrix,
    pub w_h: Matrix,
    pub u_z: Matrix,
    pub u_r: Matrix,
    pub u_h: Matrix,
    pub b_z: Matrix,
    pub b_r: Matrix,
    pub b_h: Matrix,
    /// Attention head `i`: `1×2D` weights and `1×1` bias.
    pub attention_w: Matrix,
    pub attention_b: Matrix,
    /// Value head `j`: `1×2D` weights and `1×1` bias.
    pub value_w: Matrix,
    pub value_b: Matrix,
}

const DIRECTIONS: [&str; 2] = ["out", "in"];

pub(crate) fn channel_name(c: usize) -> String {
    format!(
        "edge.{}.{}",
        EdgeType::ALL[c / 2].name().to_ascii_lowercase(),
        DIRECTIONS[c % 2]
    )
}

impl GgnnParams {
    /// All-zero parameters of the given shape.
    pub fn zeros(hidden_dim: usize, steps: usize, readout: ReadoutMode) -> Self {
        let d = hidden_dim;
        let sq = || Matrix::zeros(d, d);
        let col = || Matrix::zeros(d, 1);
        Self {
            hidden_dim,
            steps,
            readout,
            edge_weights: vec![sq(); NUM_CHANNELS],
            edge_biases: vec![col(); NUM_CHANNELS],
            w_z: sq(),
            w_r: sq(),
            w_h: sq(),
            u_z: sq(),
            u_r: sq(),
            u_h: sq(),
            b_z: col(),
            b_r: col(),
            b_h: col(),
            attention_w: Matrix::zeros(1, 2 * d),
            attention_b: Matrix::zeros(1, 1),
            value_w: Matrix::zeros(1, 2 * d),
            value_b: Matrix::zeros(1, 1),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.hidden_dim, self.steps, self.readout)
    }

    /// Named parameter blocks in a fixed order.
    pub fn blocks(&self) -> Vec<(String, &Matrix)> {
        let mut out: Vec<(String, &Matrix)> = Vec::with_capacity(2 * NUM_CHANNELS + 13);
        for (c, m) in self.edge_weights.iter().enumerate() {
            out.push((format!("{}.weight", channel_name(c)), m));
        }
        for (c, m) in self.edge_biases.iter().enumerate() {
            out.push((format!("{}.bias", channel_name(c)), m));
        }
        out.extend([
            ("gru.w_z".to_string(), &self.w_z),
            ("gru.w_r".to_string(), &self.w_r),
            ("gru.w_h".to_string(), &self.w_h),
            ("gru.u_z".to_string(), &self.u_z),
            ("gru.u_r".to_string(), &self.u_r),
            ("gru.u_h".to_string(), &self.u_h),
            ("gru.b_z".to_string(), &self.b_z),
            ("gru.b_r".to_string(), &self.b_r),
            ("gru.b_h".to_string(), &self.b_h),
            ("readout.attention.weight".to_string(), &self.attention_w),
            ("readout.attention.bias".to_string(), &self.attention_b),
            ("readout.value.weight".to_string(), &self.value_w),
            ("readout.value.bias".to_string(), &self.value_b),
        ]);
        out
    }

    /// Mutable blocks, same order as [`GgnnParams::blocks`].
    pub fn blocks_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out: Vec<&mut Matrix> = Vec::with_capacity(2 * NUM_CHANNELS + 13);
        out.extend(self.edge_weights.iter_mut());
        out.extend(self.edge_biases.iter_mut());
        out.extend([
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
            &mut self.attention_w,
            &mut self.attention_b,
            &mut self.value_w,
            &mut self.value_b,
        ]);
        out
    }

    pub fn num_params(&self) -> usize {
        self.blocks().iter().map(|(_, m)| m.as_slice().len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks()
            .iter()
            .flat_map(|(_, m)| m.as_slice().iter().copied())
            .collect()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::Dimension(format!(
                "{} values for {} parameters",
                values.len(),
                self.num_params()
            )));
        }
        let mut offset = 0;
        for m in self.blocks_mut() {
            let n = m.as_slice().len();
            m.as_mut_slice().copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// `self += factor·other`.
    pub fn add_scaled(&mut self, other: &GgnnParams, factor: f64) {
        for (a, (_, b)) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (x, y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *x += factor * y;
            }
        }
    }

    /// Name of the first block holding a non-finite entry.
    pub fn first_non_finite(&self) -> Option<String> {
        self.blocks()
            .into_iter()
            .find(|(_, m)| !m.all_finite())
            .map(|(name, _)| name)
    }
}

/// Glorot-uniform weights, zero biases.
///
/// Draw order: the ten edge matrices by channel, then `W_z, W_r, W_h,
/// U_z, U_r, U_h`, then the attention and value head weights.
pub fn init_params(
    vocab_size: usize,
    padding: usize,
    steps: usize,
    rng: &mut Rng,
) -> Result<GgnnParams> {
    if vocab_size < 2 {
        return Err(Error::Config(format!("vocabulary size {vocab_size} < 2")));
    }
    if steps < 1 {
        return Err(Error::Config("at least one propagation step is required".into()));
    }
    let d = vocab_size + padding;
    let mut p = GgnnParams::zeros(d, steps, ReadoutMode::Literal);
    for m in p.edge_weights.iter_mut() {
        *m = glorot_uniform(d, d, rng);
    }
    for m in [
        &mut p.w_z, &mut p.w_r, &mut p.w_h, &mut p.u_z, &mut p.u_r, &mut p.u_h,
    ] {
        *m = glorot_uniform(d, d, rng);
    }
    p.attention_w = glorot_uniform(1, 2 * d, rng);
    p.value_w = glorot_uniform(1, 2 * d, rng);
    Ok(p)
}

pub fn init_with_config(vocab_size: usize, cfg: &GgnnConfig, rng: &mut Rng) -> Result<GgnnParams> {
    let mut p = init_params(vocab_size, cfg.padding, cfg.steps, rng)?;
    p.readout = cfg.readout;
    Ok(p)
}
