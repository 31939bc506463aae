//! Fully connected recurrent layers: a spiking layer (the recurrence is the
//! neuron's own leak) and a vanilla RNN with a per-neuron recurrent weight.

use serde::{Deserialize, Serialize};

use crate::analytic::EnergyKind;
use crate::error::{Error, Result};
use crate::sim::conv::{relu_requant, SpikeReads, ZeroSkip};
use crate::sim::counts::OpCounts;
use crate::sim::lif::LifState;
use crate::sim::tensor::QuantTensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// Saturate to `[-128, 127]` after the shift.
    Identity,
    /// Rectify, shift, saturate to 127.
    #[default]
    Relu,
}

/// Vanilla RNN parameters: `h' = act((U x + v ⊙ h + b) >> shift)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnWeights {
    /// `(n_neurons, n_in)`
    pub input: QuantTensor,
    /// `(n_neurons)`, one recurrent weight per neuron.
    pub recurrent: QuantTensor,
    pub bias: Option<QuantTensor>,
    pub activation: Activation,
    pub requant_shift: u32,
    /// Cost of zero input activations. The recurrent pair is always charged.
    pub zero_skip: ZeroSkip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecurrentKind {
    VanillaRnn,
    Snn,
}

/// One step of a spiking fully connected layer. Each neuron reads and adds
/// one weight per present input spike, then runs the LIF update and writes
/// a 1-bit spike.
pub fn snn_recurrent_step(
    x: &QuantTensor,
    weights: &QuantTensor,
    state: &mut LifState,
    spike_reads: SpikeReads,
) -> Result<(QuantTensor, OpCounts)> {
    let n_in = x.len();
    let n = state.len();
    x.expect(1, &[n_in], "input spikes")?;
    weights.expect(8, &[n, n_in], "weights")?;
    let active: Vec<usize> = x.data().iter().enumerate().filter_map(|(j, &s)| (s != 0).then_some(j)).collect();
    let nz = active.len() as u64;

    let mut counts = OpCounts::new(EnergyKind::SnnRecurrent, 1, 1);
    let mut out = Vec::with_capacity(n);
    let w = weights.data();
    for i in 0..n {
        let row = &w[i * n_in..(i + 1) * n_in];
        let current: i64 = active.iter().map(|&j| i64::from(row[j])).sum();
        counts.slots += n_in as u64;
        counts.active_slots += nz;
        counts.input_reads += match spike_reads {
            SpikeReads::ActiveOnly => nz,
            SpikeReads::EveryPosition => n_in as u64,
        };
        counts.weight_reads += nz;
        counts.mac_adds += nz;

        let step = state.step_neuron(i, current);
        counts.state_reads += 1;
        counts.state_mults += 1;
        counts.state_adds += 1;
        counts.compares += 1;
        counts.subs += u64::from(step.subtracted);
        counts.state_writes += 1;
        counts.output_writes += 1;
        out.push(i8::from(step.spike));
    }
    Ok((QuantTensor::spikes(vec![n], out)?, counts))
}

/// One step of a vanilla RNN layer, updating `hidden` in place.
///
/// Per neuron: `n_in` inputs and weights plus the previous hidden value and
/// its recurrent weight are read (8-bit each) and multiplied-accumulated;
/// the new hidden value is written as state and as output. A bias adds one
/// read and one addition. Activation and requantization are tallied under
/// `activations` (unpriced).
pub fn rnn_recurrent_step(x: &QuantTensor, layer: &RnnWeights, hidden: &mut [i8]) -> Result<(QuantTensor, OpCounts)> {
    let n_in = x.len();
    let n = hidden.len();
    x.expect(8, &[n_in], "input")?;
    layer.input.expect(8, &[n, n_in], "input weights")?;
    layer.recurrent.expect(8, &[n], "recurrent weights")?;
    if let Some(b) = &layer.bias {
        b.expect(8, &[n], "bias")?;
    }
    let with_bias = u64::from(layer.bias.is_some());
    let u = layer.input.data();
    let v = layer.recurrent.data();
    let xs = x.data();
    let nz = x.count_nonzero() as u64;

    let mut counts = OpCounts::new(EnergyKind::RnnRecurrent, 8, 8);
    let mut next = Vec::with_capacity(n);
    for i in 0..n {
        let row = &u[i * n_in..(i + 1) * n_in];
        let mut acc: i64 = row.iter().zip(xs).map(|(&w, &a)| i64::from(w) * i64::from(a)).sum();
        acc += i64::from(v[i]) * i64::from(hidden[i]);
        if let Some(b) = &layer.bias {
            acc += i64::from(b.data()[i]);
        }
        let (reads, macs) = layer.zero_skip.charges(n_in as u64, nz);
        let pairs = macs + 1;
        counts.slots += n_in as u64;
        counts.active_slots += nz;
        counts.input_reads += reads + 1;
        counts.weight_reads += pairs + with_bias;
        counts.mac_mults += pairs;
        counts.mac_adds += pairs + with_bias;
        counts.activations += 1;
        counts.state_writes += 1;
        counts.output_writes += 1;
        next.push(match layer.activation {
            Activation::Relu => relu_requant(acc, layer.requant_shift),
            Activation::Identity => (acc >> layer.requant_shift.min(63)).clamp(-128, 127) as i8,
        });
    }
    hidden.copy_from_slice(&next);
    Ok((QuantTensor::int8(vec![n], next)?, counts))
}

/// State carried between recurrent steps.
#[derive(Debug, Clone, PartialEq)]
pub enum RecurrentState {
    Snn(LifState),
    Rnn(Vec<i8>),
}

/// Parameters of either recurrent layer kind.
#[derive(Debug, Clone, PartialEq)]
pub enum RecurrentLayer {
    Snn { weights: QuantTensor, spike_reads: SpikeReads },
    Rnn(RnnWeights),
}

impl RecurrentLayer {
    pub fn kind(&self) -> RecurrentKind {
        match self {
            RecurrentLayer::Snn { .. } => RecurrentKind::Snn,
            RecurrentLayer::Rnn(_) => RecurrentKind::VanillaRnn,
        }
    }
}

/// Dispatches to [`snn_recurrent_step`] or [`rnn_recurrent_step`].
pub fn recurrent_step(
    x: &QuantTensor,
    layer: &RecurrentLayer,
    state: &mut RecurrentState,
) -> Result<(QuantTensor, OpCounts)> {
    match (layer, state) {
        (RecurrentLayer::Snn { weights, spike_reads }, RecurrentState::Snn(s)) => {
            snn_recurrent_step(x, weights, s, *spike_reads)
        }
        (RecurrentLayer::Rnn(w), RecurrentState::Rnn(h)) => rnn_recurrent_step(x, w, h),
        _ => Err(Error::dim("layer kind and state kind differ")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{NeuronParams, ResetMode};
    use crate::sim::rng::gen_uniform_int8;

    fn rnn(n: usize, n_in: usize, seed: u64) -> RnnWeights {
        RnnWeights {
            input: gen_uniform_int8(&[n, n_in], -128, 127, seed).unwrap(),
            recurrent: gen_uniform_int8(&[n], -128, 127, seed + 1).unwrap(),
            bias: None,
            activation: Activation::Relu,
            requant_shift: 10,
            zero_skip: ZeroSkip::Off,
        }
    }

    #[test]
    fn rnn_counts_per_neuron() {
        let x = gen_uniform_int8(&[1024], -128, 127, 1).unwrap();
        let mut h = vec![0i8; 2];
        let (_, c) = rnn_recurrent_step(&x, &rnn(2, 1024, 3), &mut h).unwrap();
        assert_eq!((c.input_reads, c.weight_reads), (2 * 1025, 2 * 1025));
        assert_eq!((c.mac_adds, c.mac_mults), (2 * 1025, 2 * 1025));
        assert_eq!((c.state_writes, c.output_writes, c.state_reads), (2, 2, 0));
    }

    #[test]
    fn rnn_bias_costs_one_read_and_add() {
        let x = gen_uniform_int8(&[8], -128, 127, 1).unwrap();
        let mut w = rnn(3, 8, 5);
        w.bias = Some(gen_uniform_int8(&[3], -128, 127, 9).unwrap());
        let (_, c) = rnn_recurrent_step(&x, &w, &mut [0; 3]).unwrap();
        assert_eq!((c.weight_reads, c.mac_adds, c.mac_mults), (3 * 10, 3 * 10, 3 * 9));
    }

    #[test]
    fn rnn_arithmetic() {
        let w = RnnWeights {
            input: QuantTensor::int8(vec![1, 2], vec![2, -1]).unwrap(),
            recurrent: QuantTensor::int8(vec![1], vec![3]).unwrap(),
            bias: Some(QuantTensor::int8(vec![1], vec![-4]).unwrap()),
            activation: Activation::Identity,
            requant_shift: 0,
            zero_skip: ZeroSkip::Off,
        };
        let x = QuantTensor::int8(vec![2], vec![10, 5]).unwrap();
        let mut h = vec![2i8];
        let (out, _) = rnn_recurrent_step(&x, &w, &mut h).unwrap();
        // 20 - 5 + 6 - 4
        assert_eq!(out.data(), &[17]);
        assert_eq!(h, vec![17]);
    }

    #[test]
    fn zero_weights_leave_state_alone() {
        let w = RnnWeights {
            input: QuantTensor::zeros(vec![1, 1], 8).unwrap(),
            recurrent: QuantTensor::zeros(vec![1], 8).unwrap(),
            bias: None,
            activation: Activation::Identity,
            requant_shift: 0,
            zero_skip: ZeroSkip::Off,
        };
        let mut h = vec![0i8];
        let (out, _) = rnn_recurrent_step(&QuantTensor::int8(vec![1], vec![55]).unwrap(), &w, &mut h).unwrap();
        assert_eq!((out.data(), h[0]), (&[0i8][..], 0));

        let p = NeuronParams::new(1.0, 10, ResetMode::ImmediateSubtract).unwrap();
        let mut s = LifState::with_potentials(vec![7], p).unwrap();
        let zeros = QuantTensor::zeros(vec![1, 1], 8).unwrap();
        let spike = QuantTensor::spikes(vec![1], vec![1]).unwrap();
        let (out, _) = snn_recurrent_step(&spike, &zeros, &mut s, SpikeReads::ActiveOnly).unwrap();
        assert_eq!((out.data(), s.potentials()), (&[0i8][..], &[7i8][..]));
    }

    #[test]
    fn snn_dense_counts() {
        let x = QuantTensor::spikes(vec![1024], vec![1; 1024]).unwrap();
        let w = gen_uniform_int8(&[4, 1024], 1, 127, 2).unwrap();
        let mut s = LifState::new(4, NeuronParams::default()).unwrap();
        let (out, c) = snn_recurrent_step(&x, &w, &mut s, SpikeReads::ActiveOnly).unwrap();
        assert_eq!(out.count_nonzero(), 4);
        assert_eq!((c.weight_reads, c.input_reads, c.mac_adds), (4096, 4096, 4096));
        assert_eq!((c.state_reads, c.subs, c.output_writes), (4, 4, 4));
    }

    #[test]
    fn dispatch_checks_state_kind() {
        let layer = RecurrentLayer::Rnn(rnn(2, 3, 1));
        let mut state = RecurrentState::Snn(LifState::new(2, NeuronParams::default()).unwrap());
        let x = QuantTensor::int8(vec![3], vec![1, 2, 3]).unwrap();
        assert!(recurrent_step(&x, &layer, &mut state).is_err());
        let mut state = RecurrentState::Rnn(vec![0; 2]);
        assert!(recurrent_step(&x, &layer, &mut state).is_ok());
        assert_eq!(layer.kind(), RecurrentKind::VanillaRnn);
    }

    #[test]
    fn shape_mismatch() {
        let x = QuantTensor::int8(vec![3], vec![1, 2, 3]).unwrap();
        assert!(rnn_recurrent_step(&x, &rnn(2, 4, 1), &mut [0; 2]).is_err());
    }
}
