//! Layer geometry, bit widths and neuron parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn one() -> usize {
    1
}

fn eight() -> u32 {
    8
}

/// A 2-D convolution layer. Tensors are laid out as (channel, height, width)
/// and weights as (co, ci, hk, wk).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvShape {
    pub ci: usize,
    pub hi: usize,
    pub wi: usize,
    pub co: usize,
    pub hk: usize,
    pub wk: usize,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub padding: usize,
    #[serde(default = "eight")]
    pub act_bits: u32,
    #[serde(default = "eight")]
    pub weight_bits: u32,
}

impl Default for ConvShape {
    /// 512x14x14 input, 512 output channels, 3x3 kernel, stride 1, no padding.
    fn default() -> Self {
        ConvShape { ci: 512, hi: 14, wi: 14, co: 512, hk: 3, wk: 3, stride: 1, padding: 0, act_bits: 8, weight_bits: 8 }
    }
}

fn out_extent(input: usize, kernel: usize, stride: usize, padding: usize, axis: &str) -> Result<usize> {
    let padded = input + 2 * padding;
    if padded < kernel {
        return Err(Error::shape(format!("{axis}: kernel {kernel} larger than padded input {padded}")));
    }
    let span = padded - kernel;
    if !span.is_multiple_of(stride) {
        return Err(Error::shape(format!(
            "{axis}: ({input} + 2*{padding} - {kernel}) is not a multiple of stride {stride}"
        )));
    }
    Ok(span / stride + 1)
}

impl ConvShape {
    /// Dense window shape `(ci, hk, wk)` on a `(ci, hk, wk)` input: exactly one output per channel.
    pub fn single_window(ci: usize, hk: usize, wk: usize) -> Self {
        ConvShape { ci, hi: hk, wi: wk, co: 1, hk, wk, ..ConvShape::default() }
    }

    pub fn with_act_bits(mut self, bits: u32) -> Self {
        self.act_bits = bits;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("ci", self.ci),
            ("hi", self.hi),
            ("wi", self.wi),
            ("co", self.co),
            ("hk", self.hk),
            ("wk", self.wk),
            ("stride", self.stride),
        ] {
            if v == 0 {
                return Err(Error::shape(format!("{name} must be >= 1")));
            }
        }
        if self.act_bits == 0 || self.weight_bits == 0 {
            return Err(Error::shape("bit widths must be >= 1"));
        }
        self.output_dims().map(|_| ())
    }

    /// `(co, ho, wo)`; fails unless the window tiles the padded input exactly.
    pub fn output_dims(&self) -> Result<(usize, usize, usize)> {
        if self.stride == 0 {
            return Err(Error::shape("stride must be >= 1"));
        }
        let ho = out_extent(self.hi, self.hk, self.stride, self.padding, "height")?;
        let wo = out_extent(self.wi, self.wk, self.stride, self.padding, "width")?;
        Ok((self.co, ho, wo))
    }

    /// Reads per output element: `ci * hk * wk`.
    pub fn n_rd(&self) -> usize {
        self.ci * self.hk * self.wk
    }

    /// Number of output elements, `co * ho * wo`, with overflow checking.
    pub fn windows(&self) -> Result<u64> {
        let (co, ho, wo) = self.output_dims()?;
        (co as u64)
            .checked_mul(ho as u64)
            .and_then(|x| x.checked_mul(wo as u64))
            .ok_or_else(|| Error::Overflow("output element count".into()))
    }

    pub fn input_len(&self) -> usize {
        self.ci * self.hi * self.wi
    }

    pub fn weight_len(&self) -> usize {
        self.co * self.n_rd()
    }
}

pub fn conv_output_dims(shape: &ConvShape) -> Result<(usize, usize, usize)> {
    shape.validate()?;
    shape.output_dims()
}

pub fn n_rd(shape: &ConvShape) -> usize {
    shape.n_rd()
}

/// A fully connected layer of `n_neurons`, each with `n_in` inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurrentShape {
    pub n_in: usize,
    pub n_neurons: usize,
    #[serde(default = "eight")]
    pub act_bits: u32,
    #[serde(default = "eight")]
    pub weight_bits: u32,
    #[serde(default = "eight")]
    pub state_bits: u32,
}

impl Default for RecurrentShape {
    fn default() -> Self {
        RecurrentShape { n_in: 1024, n_neurons: 512, act_bits: 8, weight_bits: 8, state_bits: 8 }
    }
}

impl RecurrentShape {
    pub fn new(n_in: usize, n_neurons: usize) -> Self {
        RecurrentShape { n_in, n_neurons, ..Default::default() }
    }

    pub fn with_act_bits(mut self, bits: u32) -> Self {
        self.act_bits = bits;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_in == 0 {
            return Err(Error::shape("n_in must be >= 1"));
        }
        if self.n_neurons == 0 {
            return Err(Error::shape("n_neurons must be >= 1"));
        }
        if self.act_bits == 0 || self.weight_bits == 0 || self.state_bits == 0 {
            return Err(Error::shape("bit widths must be >= 1"));
        }
        Ok(())
    }
}

/// Either layer type, as read from a layer config file:
/// `{"conv": {...}}` or `{"recurrent": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerShape {
    Conv(ConvShape),
    Recurrent(RecurrentShape),
}

impl LayerShape {
    pub fn validate(&self) -> Result<()> {
        match self {
            LayerShape::Conv(c) => c.validate(),
            LayerShape::Recurrent(r) => r.validate(),
        }
    }

    /// Output elements the per-window (per-neuron) energy is multiplied by.
    pub fn output_elements(&self) -> Result<u64> {
        match self {
            LayerShape::Conv(c) => c.windows(),
            LayerShape::Recurrent(r) => Ok(r.n_neurons as u64),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let shape: LayerShape =
            serde_json::from_str(s).map_err(|source| Error::Parse { what: "layer spec".into(), source })?;
        shape.validate()?;
        Ok(shape)
    }
}

pub fn load_layer(path: impl AsRef<Path>) -> Result<LayerShape> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    LayerShape::from_json_str(&text)
}

/// Where the threshold subtraction of a fired neuron lands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetMode {
    /// Subtract the threshold in the same step the neuron fires, before storing.
    #[default]
    ImmediateSubtract,
    /// Store the un-reset potential and subtract `theta * S[t-1]` (undecayed)
    /// at the start of the next step.
    DeferredSubtract,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronParams {
    pub beta: f64,
    pub theta: i32,
    #[serde(default)]
    pub reset_mode: ResetMode,
}

impl Default for NeuronParams {
    fn default() -> Self {
        NeuronParams { beta: 1.0, theta: 64, reset_mode: ResetMode::ImmediateSubtract }
    }
}

impl NeuronParams {
    pub fn new(beta: f64, theta: i32, reset_mode: ResetMode) -> Result<Self> {
        let p = NeuronParams { beta, theta, reset_mode };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::validation("beta must be within [0, 1]"));
        }
        // the state is an 8-bit signed value, so the threshold must be representable
        if !(1..=i8::MAX as i32).contains(&self.theta) {
            return Err(Error::validation("theta must be within [1, 127]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsityMode {
    /// Every energy component is multiplied by gamma.
    #[default]
    PaperFaithful,
    /// Only input-driven components (reads, accumulation) scale with gamma;
    /// per-output state and write terms are paid regardless.
    ComponentWise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsitySpec {
    pub gamma: f64,
    #[serde(default)]
    pub mode: SparsityMode,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SparsitySpec {
    fn default() -> Self {
        SparsitySpec { gamma: 1.0, mode: SparsityMode::PaperFaithful, seed: 0 }
    }
}

impl SparsitySpec {
    pub fn new(gamma: f64, mode: SparsityMode) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(SparsitySpec { gamma, mode, seed: 0 })
    }

    pub fn dense() -> Self {
        Self::default()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::validation(format!("gamma must be within (0, 1], got {gamma}")))
    }
}
