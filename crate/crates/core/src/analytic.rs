//! Closed-form energy decompositions for one output element (a convolution
//! window or a recurrent neuron), plus sparsity/timestep scaling and sweeps.
//!
//! All values are picojoules. The SNN variants read 1-bit spikes and 8-bit
//! weights, update a stateful neuron and write a 1-bit spike. The ANN
//! variants read 8-bit activations and weights, run a MAC per pair and
//! write an 8-bit activation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cost::{Access, CostTable};
use crate::error::{Error, Result};
use crate::network::{check_gamma, ConvShape, LayerShape, RecurrentShape, SparsityMode, SparsitySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyKind {
    SnnConv,
    AnnConv,
    SnnRecurrent,
    RnnRecurrent,
}

impl EnergyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnergyKind::SnnConv => "snn_conv",
            EnergyKind::AnnConv => "ann_conv",
            EnergyKind::SnnRecurrent => "snn_recurrent",
            EnergyKind::RnnRecurrent => "rnn_recurrent",
        }
    }

    pub fn is_spiking(&self) -> bool {
        matches!(self, EnergyKind::SnnConv | EnergyKind::SnnRecurrent)
    }
}

impl fmt::Display for EnergyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which network family a layer is evaluated as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    Snn,
    Ann,
}

impl NetKind {
    pub fn energy_kind(self, layer: &LayerShape) -> EnergyKind {
        match (self, layer) {
            (NetKind::Snn, LayerShape::Conv(_)) => EnergyKind::SnnConv,
            (NetKind::Ann, LayerShape::Conv(_)) => EnergyKind::AnnConv,
            (NetKind::Snn, LayerShape::Recurrent(_)) => EnergyKind::SnnRecurrent,
            (NetKind::Ann, LayerShape::Recurrent(_)) => EnergyKind::RnnRecurrent,
        }
    }
}

/// Energy split into reads, arithmetic, neuron state and output write.
///
/// `state_mem_pj` and `ofmap_mem_pj` record how much of the state and output
/// terms is memory traffic, so a breakdown can also be viewed as
/// memory-vs-arithmetic (see [`EnergyBreakdown::memory_pj`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kind: EnergyKind,
    pub e_rd_tot_pj: f64,
    pub e_compute_pj: f64,
    pub e_state_pj: f64,
    pub e_ofmap_pj: f64,
    pub total_pj: f64,
    pub state_mem_pj: f64,
    pub ofmap_mem_pj: f64,
}

impl EnergyBreakdown {
    pub fn new(
        kind: EnergyKind,
        e_rd_tot_pj: f64,
        e_compute_pj: f64,
        (e_state_pj, state_mem_pj): (f64, f64),
        (e_ofmap_pj, ofmap_mem_pj): (f64, f64),
    ) -> Self {
        EnergyBreakdown {
            kind,
            e_rd_tot_pj,
            e_compute_pj,
            e_state_pj,
            e_ofmap_pj,
            total_pj: e_rd_tot_pj + e_compute_pj + e_state_pj + e_ofmap_pj,
            state_mem_pj,
            ofmap_mem_pj,
        }
    }

    pub fn zero(kind: EnergyKind) -> Self {
        Self::new(kind, 0.0, 0.0, (0.0, 0.0), (0.0, 0.0))
    }

    pub fn components(&self) -> [(&'static str, f64); 5] {
        [
            ("e_rd_tot_pj", self.e_rd_tot_pj),
            ("e_compute_pj", self.e_compute_pj),
            ("e_state_pj", self.e_state_pj),
            ("e_ofmap_pj", self.e_ofmap_pj),
            ("total_pj", self.total_pj),
        ]
    }

    /// Memory traffic: operand reads plus state and output accesses.
    pub fn memory_pj(&self) -> f64 {
        self.e_rd_tot_pj + self.state_mem_pj + self.ofmap_mem_pj
    }

    /// Everything that is not memory traffic.
    pub fn arith_pj(&self) -> f64 {
        self.e_compute_pj + (self.e_state_pj - self.state_mem_pj) + (self.e_ofmap_pj - self.ofmap_mem_pj)
    }

    /// Multiplies the input-driven terms by `input_factor` and the fixed
    /// per-output terms by `fixed_factor`; the total is re-summed.
    fn rescale(&self, input_factor: f64, fixed_factor: f64) -> Self {
        Self::new(
            self.kind,
            self.e_rd_tot_pj * input_factor,
            self.e_compute_pj * input_factor,
            (self.e_state_pj * fixed_factor, self.state_mem_pj * fixed_factor),
            (self.e_ofmap_pj * fixed_factor, self.ofmap_mem_pj * fixed_factor),
        )
    }

    /// Input-driven terms at activity `density` (which may be 0), fixed terms unchanged.
    pub fn component_wise(&self, density: f64) -> Self {
        self.rescale(density, 1.0)
    }

    pub fn times(&self, factor: f64) -> Self {
        self.rescale(factor, factor)
    }
}

fn require_bits(actual: u32, expected: u32, what: &str) -> Result<()> {
    if actual == expected {
        Ok(())
    } else {
        Err(Error::shape(format!("{what} requires act_bits = {expected}, got {actual}")))
    }
}

/// Stateful neuron update: read state, decay (multiply), integrate (add),
/// threshold (compare), reset (subtract), write state.
fn lif_state_terms(table: &CostTable, state_bits: u32) -> (f64, f64) {
    let rd = table.mem_energy_unchecked(state_bits, Access::Read);
    let wr = table.mem_energy_unchecked(state_bits, Access::Write);
    let arith = table.e_mult_pj + table.e_add_pj + table.e_comp_pj + table.e_sub_pj;
    (rd + arith + wr, rd + wr)
}

fn snn_terms(
    kind: EnergyKind,
    reads: usize,
    act_bits: u32,
    weight_bits: u32,
    state_bits: u32,
    table: &CostTable,
) -> EnergyBreakdown {
    let n = reads as f64;
    let rd_w = table.mem_energy_unchecked(weight_bits, Access::Read);
    let rd_s = table.mem_energy_unchecked(act_bits, Access::Read);
    let wr_s = table.mem_energy_unchecked(act_bits, Access::Write);
    EnergyBreakdown::new(kind, n * (rd_w + rd_s), n * table.e_add_pj, lif_state_terms(table, state_bits), (wr_s, wr_s))
}

/// Dense single-window energy of a spiking convolution (one timestep).
pub fn snn_conv_window(shape: &ConvShape, table: &CostTable) -> Result<EnergyBreakdown> {
    shape.validate()?;
    require_bits(shape.act_bits, 1, "SNN convolution")?;
    Ok(snn_terms(EnergyKind::SnnConv, shape.n_rd(), shape.act_bits, shape.weight_bits, 8, table))
}

/// Dense single-window energy of an 8-bit ANN convolution. The activation
/// function is free; requantization is priced as one addition.
pub fn ann_conv_window(shape: &ConvShape, table: &CostTable) -> Result<EnergyBreakdown> {
    shape.validate()?;
    require_bits(shape.act_bits, 8, "ANN convolution")?;
    let n = shape.n_rd() as f64;
    let rd_w = table.mem_energy_unchecked(shape.weight_bits, Access::Read);
    let rd_a = table.mem_energy_unchecked(shape.act_bits, Access::Read);
    let wr_a = table.mem_energy_unchecked(shape.act_bits, Access::Write);
    Ok(EnergyBreakdown::new(
        EnergyKind::AnnConv,
        n * (rd_w + rd_a),
        n * (table.e_add_pj + table.e_mult_pj),
        (0.0, 0.0),
        (wr_a + table.e_add_pj, wr_a),
    ))
}

/// Dense per-neuron energy of a spiking fully connected layer (one timestep).
pub fn snn_recurrent_neuron(shape: &RecurrentShape, table: &CostTable) -> Result<EnergyBreakdown> {
    shape.validate()?;
    require_bits(shape.act_bits, 1, "SNN recurrent neuron")?;
    Ok(snn_terms(EnergyKind::SnnRecurrent, shape.n_in, shape.act_bits, shape.weight_bits, shape.state_bits, table))
}

/// Dense per-neuron energy of a vanilla RNN: `n_in` inputs and weights plus
/// the hidden state and its recurrent weight are read and multiplied-accumulated;
/// state and output are each written once.
pub fn rnn_recurrent_neuron(shape: &RecurrentShape, table: &CostTable) -> Result<EnergyBreakdown> {
    shape.validate()?;
    require_bits(shape.act_bits, 8, "RNN neuron")?;
    let pairs = (shape.n_in + 1) as f64;
    let rd_w = table.mem_energy_unchecked(shape.weight_bits, Access::Read);
    let rd_a = table.mem_energy_unchecked(shape.act_bits, Access::Read);
    let wr_s = table.mem_energy_unchecked(shape.state_bits, Access::Write);
    let wr_a = table.mem_energy_unchecked(shape.act_bits, Access::Write);
    Ok(EnergyBreakdown::new(
        EnergyKind::RnnRecurrent,
        pairs * (rd_w + rd_a),
        pairs * (table.e_add_pj + table.e_mult_pj),
        (wr_s, wr_s),
        (wr_a, wr_a),
    ))
}

/// Per-output-element dense energy of `layer` evaluated as `net`. The layer's
/// own `act_bits` is overridden with the family's width (1 for SNN, 8 for ANN).
pub fn element_energy(layer: &LayerShape, net: NetKind, table: &CostTable) -> Result<EnergyBreakdown> {
    match (layer, net) {
        (LayerShape::Conv(c), NetKind::Snn) => snn_conv_window(&c.with_act_bits(1), table),
        (LayerShape::Conv(c), NetKind::Ann) => ann_conv_window(&c.with_act_bits(8), table),
        (LayerShape::Recurrent(r), NetKind::Snn) => snn_recurrent_neuron(&r.with_act_bits(1), table),
        (LayerShape::Recurrent(r), NetKind::Ann) => rnn_recurrent_neuron(&r.with_act_bits(8), table),
    }
}

/// Applies activity density `gamma` and `timesteps`.
pub fn scale(breakdown: &EnergyBreakdown, sparsity: &SparsitySpec, timesteps: u32) -> Result<EnergyBreakdown> {
    check_gamma(sparsity.gamma)?;
    if timesteps == 0 {
        return Err(Error::validation("timesteps must be >= 1"));
    }
    let t = f64::from(timesteps);
    let g = sparsity.gamma;
    let scaled = match sparsity.mode {
        SparsityMode::PaperFaithful => breakdown.rescale(g, g),
        SparsityMode::ComponentWise => breakdown.rescale(g, 1.0),
    };
    Ok(scaled.times(t))
}

/// Whole-layer energy: the scaled per-element energy times the number of
/// output elements (`co * ho * wo` windows, or `n_neurons`).
pub fn layer_total(
    layer: &LayerShape,
    net: NetKind,
    table: &CostTable,
    sparsity: &SparsitySpec,
    timesteps: u32,
) -> Result<EnergyBreakdown> {
    let per = scale(&element_energy(layer, net, table)?, sparsity, timesteps)?;
    let count = layer.output_elements()?;
    Ok(per.times(count as f64))
}

/// Sums layer totals over a flat list of layers. An empty list costs nothing.
pub fn network_total(
    layers: &[LayerShape],
    net: NetKind,
    table: &CostTable,
    sparsity: &SparsitySpec,
    timesteps: u32,
) -> Result<f64> {
    layers.iter().map(|l| layer_total(l, net, table, sparsity, timesteps).map(|b| b.total_pj)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub snn: EnergyBreakdown,
    pub ann: EnergyBreakdown,
}

/// Layer energy for both network families at each activity density. Rows
/// are returned sorted by gamma, descending.
pub fn sweep_sparsity(
    layer: &LayerShape,
    table: &CostTable,
    gammas: &[f64],
    timesteps: u32,
    mode: SparsityMode,
) -> Result<Vec<SweepRow>> {
    if gammas.is_empty() {
        return Err(Error::validation("gamma list must not be empty"));
    }
    let mut rows = gammas
        .iter()
        .map(|&gamma| {
            let sp = SparsitySpec::new(gamma, mode)?;
            Ok(SweepRow {
                gamma,
                snn: layer_total(layer, NetKind::Snn, table, &sp, timesteps)?,
                ann: layer_total(layer, NetKind::Ann, table, &sp, timesteps)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.gamma.total_cmp(&a.gamma));
    Ok(rows)
}

/// Human-readable energy with three significant figures, switching unit
/// at each factor of 1000 (pJ, nJ, µJ, mJ, J).
pub fn format_energy(pj: f64) -> String {
    const UNITS: [(&str, f64); 5] = [("J", 1e12), ("mJ", 1e9), ("µJ", 1e6), ("nJ", 1e3), ("pJ", 1.0)];
    let (unit, div) = UNITS.iter().copied().find(|&(_, d)| pj.abs() >= d).unwrap_or(("pJ", 1.0));
    format!("{} {unit}", sig3(pj / div))
}

/// Rounds to three significant figures.
pub fn sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = |v: f64| (2 - v.abs().log10().floor() as i32).max(0);
    // round half away from zero, then re-check the digit count in case of carry
    let round = |v: f64, d: i32| (v * 10f64.powi(d)).round() / 10f64.powi(d);
    let mut d = decimals(x);
    let mut r = round(x, d);
    if decimals(r) < d {
        d = decimals(r);
        r = round(x, d);
    }
    let d = d as usize;
    format!("{r:.d$}")
}
