//! Runs a seeded functional simulation of a whole layer and sets the priced
//! counts beside the analytic prediction at the measured input density.

use serde::Serialize;

use crate::analytic::{element_energy, EnergyBreakdown, NetKind};
use crate::cost::CostTable;
use crate::error::{Error, Result};
use crate::network::{LayerShape, NeuronParams};
use crate::sim::conv::{ann_conv_layer, snn_conv_layer, AnnOptions, SnnOptions, SpikeReads, Traversal, ZeroSkip};
use crate::sim::counts::{counts_to_energy, OpCounts};
use crate::sim::lif::LifState;
use crate::sim::recurrent::{rnn_recurrent_step, snn_recurrent_step, Activation, RnnWeights};
use crate::sim::rng::{gen_sparse_activations, gen_sparse_spikes, gen_uniform_int8};
use crate::sim::tensor::QuantTensor;

/// Weights are drawn from an independent stream derived from the seed.
const WEIGHT_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    /// Probability that an input element is nonzero.
    pub density: f64,
    pub seed: u64,
    /// The same input is presented this many times.
    pub timesteps: u32,
    pub params: NeuronParams,
    pub traversal: Traversal,
    pub spike_reads: SpikeReads,
    pub ann_zero_skip: ZeroSkip,
    pub requant_shift: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            density: 1.0,
            seed: 42,
            timesteps: 1,
            params: NeuronParams::default(),
            traversal: Traversal::EventDriven,
            spike_reads: SpikeReads::ActiveOnly,
            ann_zero_skip: ZeroSkip::Compressed,
            requant_shift: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub net: NetKind,
    pub counts: OpCounts,
    pub simulated: EnergyBreakdown,
    pub analytic: EnergyBreakdown,
    /// Share of visited input slots that held a nonzero value.
    pub empirical_density: f64,
    pub output_nonzero: usize,
}

impl Comparison {
    /// `(component, simulated, analytic, relative deviation)` rows.
    pub fn rows(&self) -> Vec<(&'static str, f64, f64, f64)> {
        self.simulated
            .components()
            .iter()
            .zip(self.analytic.components())
            .map(|(&(name, s), (_, a))| (name, s, a, rel_dev(s, a)))
            .collect()
    }

    pub fn total_deviation(&self) -> f64 {
        rel_dev(self.simulated.total_pj, self.analytic.total_pj)
    }
}

/// `(sim - ref) / ref`; zero when both are zero.
pub fn rel_dev(sim: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        if sim == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (sim - reference) / reference
    }
}

/// Simulates one layer of the given family on seeded inputs of the given
/// density and prices the counts.
///
/// SNN weights are excitatory (uniform in `[1, 127]`); ANN and RNN weights are
/// uniform over the full signed range. The analytic reference is the
/// component-wise scaled energy at the measured density, times the number of
/// output elements and timesteps.
pub fn simulate_layer(layer: &LayerShape, net: NetKind, cfg: &SimConfig, table: &CostTable) -> Result<Comparison> {
    layer.validate()?;
    if cfg.timesteps == 0 {
        return Err(Error::validation("timesteps must be >= 1"));
    }
    let wseed = cfg.seed ^ WEIGHT_STREAM;
    let mut total: Option<OpCounts> = None;
    let mut add = |c: OpCounts| match total.as_mut() {
        Some(t) => *t += &c,
        None => total = Some(c),
    };
    let mut last_out: Option<QuantTensor> = None;

    match (layer, net) {
        (LayerShape::Conv(c), NetKind::Snn) => {
            let s = c.with_act_bits(1);
            let x = gen_sparse_spikes(&[s.ci, s.hi, s.wi], cfg.density, cfg.seed)?;
            let w = gen_uniform_int8(&[s.co, s.ci, s.hk, s.wk], 1, 127, wseed)?;
            let mut state = LifState::new(s.windows()? as usize, cfg.params)?;
            let opts = SnnOptions { traversal: cfg.traversal, spike_reads: cfg.spike_reads };
            for _ in 0..cfg.timesteps {
                let (o, counts) = snn_conv_layer(&x, &w, &s, &mut state, opts)?;
                add(counts);
                last_out = Some(o);
            }
        }
        (LayerShape::Conv(c), NetKind::Ann) => {
            let s = c.with_act_bits(8);
            let x = gen_sparse_activations(&[s.ci, s.hi, s.wi], cfg.density, cfg.seed)?;
            let w = gen_uniform_int8(&[s.co, s.ci, s.hk, s.wk], -128, 127, wseed)?;
            let opts =
                AnnOptions { traversal: cfg.traversal, zero_skip: cfg.ann_zero_skip, requant_shift: cfg.requant_shift };
            for _ in 0..cfg.timesteps {
                let (o, counts) = ann_conv_layer(&x, &w, None, &s, opts)?;
                add(counts);
                last_out = Some(o);
            }
        }
        (LayerShape::Recurrent(r), NetKind::Snn) => {
            let x = gen_sparse_spikes(&[r.n_in], cfg.density, cfg.seed)?;
            let w = gen_uniform_int8(&[r.n_neurons, r.n_in], 1, 127, wseed)?;
            let mut state = LifState::new(r.n_neurons, cfg.params)?;
            for _ in 0..cfg.timesteps {
                let (o, counts) = snn_recurrent_step(&x, &w, &mut state, cfg.spike_reads)?;
                add(counts);
                last_out = Some(o);
            }
        }
        (LayerShape::Recurrent(r), NetKind::Ann) => {
            let x = gen_sparse_activations(&[r.n_in], cfg.density, cfg.seed)?;
            let weights = RnnWeights {
                input: gen_uniform_int8(&[r.n_neurons, r.n_in], -128, 127, wseed)?,
                recurrent: gen_uniform_int8(&[r.n_neurons], -128, 127, wseed.wrapping_add(1))?,
                bias: None,
                activation: Activation::Relu,
                requant_shift: cfg.requant_shift,
                zero_skip: cfg.ann_zero_skip,
            };
            let mut hidden = vec![0i8; r.n_neurons];
            for _ in 0..cfg.timesteps {
                let (o, counts) = rnn_recurrent_step(&x, &weights, &mut hidden)?;
                add(counts);
                last_out = Some(o);
            }
        }
    }

    let counts = total.expect("at least one timestep ran");
    let density = counts.empirical_density();
    let per_element = element_energy(layer, net, table)?.component_wise(density);
    let analytic = per_element.times(f64::from(cfg.timesteps) * layer.output_elements()? as f64);
    Ok(Comparison {
        net,
        counts,
        simulated: counts_to_energy(&counts, table),
        analytic,
        empirical_density: density,
        output_nonzero: last_out.map_or(0, |o| o.count_nonzero()),
    })
}
