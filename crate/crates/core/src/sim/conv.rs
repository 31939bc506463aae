//! Functional SNN/ANN convolution layers with operation counting.
//!
//! Layouts: input `(ci, hi, wi)`, weights `(co, ci, hk, wk)`, output
//! `(co, ho, wo)`, all row-major. Padded positions are not stored; they act
//! as zero inputs, so they count as window slots but are never active.

use serde::{Deserialize, Serialize};

use crate::analytic::EnergyKind;
use crate::error::Result;
use crate::network::ConvShape;
use crate::sim::counts::OpCounts;
use crate::sim::lif::LifState;
use crate::sim::tensor::QuantTensor;

/// Loop organisation. Both produce identical outputs and counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Traversal {
    /// Walk every window position and test each input for zero.
    #[default]
    Dense,
    /// Walk only nonzero inputs and scatter them into the windows they touch.
    EventDriven,
}

/// How spike reads are charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeReads {
    /// Only spikes that are present are fetched; zero entries cost nothing.
    #[default]
    ActiveOnly,
    /// One 1-bit read per window position, spike or not.
    EveryPosition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SnnOptions {
    pub traversal: Traversal,
    pub spike_reads: SpikeReads,
}

/// What an 8-bit zero activation costs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroSkip {
    /// Every activation is read, with its weight, and multiplied.
    #[default]
    Off,
    /// The activation is read and tested; the weight read and MAC are skipped.
    SkipMac,
    /// Activations arrive as a compressed stream: zeros cost nothing.
    Compressed,
}

impl ZeroSkip {
    /// `(input reads, weight reads and MACs)` for a window of `slots`
    /// positions holding `nz` nonzero activations.
    pub fn charges(self, slots: u64, nz: u64) -> (u64, u64) {
        match self {
            ZeroSkip::Off => (slots, slots),
            ZeroSkip::SkipMac => (slots, nz),
            ZeroSkip::Compressed => (nz, nz),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnOptions {
    pub traversal: Traversal,
    pub zero_skip: ZeroSkip,
    /// Requantization: the rectified accumulator is shifted right by this
    /// many bits and saturated to 127.
    pub requant_shift: u32,
}

impl Default for AnnOptions {
    fn default() -> Self {
        AnnOptions { traversal: Traversal::Dense, zero_skip: ZeroSkip::Off, requant_shift: 8 }
    }
}

/// Per-output-location geometry shared by both traversals.
struct Geometry {
    s: ConvShape,
    ho: usize,
    wo: usize,
}

impl Geometry {
    fn new(s: &ConvShape) -> Result<Self> {
        s.validate()?;
        let (_, ho, wo) = s.output_dims()?;
        Ok(Geometry { s: *s, ho, wo })
    }

    fn input_index(&self, c: usize, h: usize, w: usize) -> usize {
        (c * self.s.hi + h) * self.s.wi + w
    }

    fn weight_index(&self, co: usize, ci: usize, hk: usize, wk: usize) -> usize {
        ((co * self.s.ci + ci) * self.s.hk + hk) * self.s.wk + wk
    }

    fn out_index(&self, co: usize, oh: usize, ow: usize) -> usize {
        (co * self.ho + oh) * self.wo + ow
    }

    /// Input coordinate for output `o` and kernel tap `k`, if not padding.
    fn tap(&self, o: usize, k: usize, extent: usize) -> Option<usize> {
        (o * self.s.stride + k).checked_sub(self.s.padding).filter(|&x| x < extent)
    }

    /// Output coordinate that reads input `x` through kernel tap `k`.
    fn target(&self, x: usize, k: usize, out_extent: usize) -> Option<usize> {
        let num = (x + self.s.padding).checked_sub(k)?;
        (num % self.s.stride == 0).then_some(num / self.s.stride).filter(|&o| o < out_extent)
    }

    /// (input, weight) pairs per window. Padded taps count as
    /// zero-valued inputs.
    fn slots(&self) -> u64 {
        (self.s.ci * self.s.hk * self.s.wk) as u64
    }

    fn out_len(&self) -> usize {
        self.s.co * self.ho * self.wo
    }

    fn check(&self, ifmap: &QuantTensor, in_bits: u8, weights: &QuantTensor) -> Result<()> {
        ifmap.expect(in_bits, &[self.s.ci, self.s.hi, self.s.wi], "ifmap")?;
        weights.expect(8, &[self.s.co, self.s.ci, self.s.hk, self.s.wk], "weights")
    }
}

/// Accumulated sums per output element and nonzero-input count per spatial
/// output location. Spike inputs are 1, so their product is the gated weight.
fn accumulate(g: &Geometry, ifmap: &[i8], weights: &[i8], traversal: Traversal) -> (Vec<i64>, Vec<u64>) {
    let s = &g.s;
    let mut acc = vec![0i64; g.out_len()];
    let mut active = vec![0u64; g.ho * g.wo];
    match traversal {
        Traversal::Dense => {
            for co in 0..s.co {
                for oh in 0..g.ho {
                    for ow in 0..g.wo {
                        let mut sum = 0i64;
                        let mut nz = 0u64;
                        for ci in 0..s.ci {
                            for hk in 0..s.hk {
                                let Some(h) = g.tap(oh, hk, s.hi) else { continue };
                                for wk in 0..s.wk {
                                    let Some(w) = g.tap(ow, wk, s.wi) else { continue };
                                    let x = ifmap[g.input_index(ci, h, w)];
                                    if x != 0 {
                                        sum += i64::from(weights[g.weight_index(co, ci, hk, wk)]) * i64::from(x);
                                        nz += 1;
                                    }
                                }
                            }
                        }
                        acc[g.out_index(co, oh, ow)] = sum;
                        if co == 0 {
                            active[oh * g.wo + ow] = nz;
                        }
                    }
                }
            }
        }
        Traversal::EventDriven => {
            for ci in 0..s.ci {
                for h in 0..s.hi {
                    for w in 0..s.wi {
                        let x = ifmap[g.input_index(ci, h, w)];
                        if x == 0 {
                            continue;
                        }
                        for hk in 0..s.hk {
                            let Some(oh) = g.target(h, hk, g.ho) else { continue };
                            for wk in 0..s.wk {
                                let Some(ow) = g.target(w, wk, g.wo) else { continue };
                                active[oh * g.wo + ow] += 1;
                                for co in 0..s.co {
                                    acc[g.out_index(co, oh, ow)] +=
                                        i64::from(weights[g.weight_index(co, ci, hk, wk)]) * i64::from(x);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    (acc, active)
}

/// One timestep of a spiking convolution layer.
///
/// For each output element the nonzero spikes in its window gate one 8-bit
/// weight read and one addition each; the neuron then reads its state,
/// decays it, adds the current, compares against the threshold, subtracts
/// on reset and writes the state back, and finally writes its 1-bit spike.
pub fn snn_conv_layer(
    ifmap: &QuantTensor,
    weights: &QuantTensor,
    shape: &ConvShape,
    state: &mut LifState,
    opts: SnnOptions,
) -> Result<(QuantTensor, OpCounts)> {
    let g = Geometry::new(shape)?;
    g.check(ifmap, 1, weights)?;
    if state.len() != g.out_len() {
        return Err(crate::error::Error::dim(format!(
            "state holds {} neurons, layer has {} outputs",
            state.len(),
            g.out_len()
        )));
    }
    let (currents, active) = accumulate(&g, ifmap.data(), weights.data(), opts.traversal);

    let mut counts = OpCounts::new(EnergyKind::SnnConv, 1, 1);
    counts.weight_bits = shape.weight_bits;
    let mut out = vec![0i8; g.out_len()];
    for co in 0..shape.co {
        for oh in 0..g.ho {
            for ow in 0..g.wo {
                let idx = g.out_index(co, oh, ow);
                let nz = active[oh * g.wo + ow];
                let slots = g.slots();
                counts.slots += slots;
                counts.active_slots += nz;
                counts.input_reads += match opts.spike_reads {
                    SpikeReads::ActiveOnly => nz,
                    SpikeReads::EveryPosition => slots,
                };
                counts.weight_reads += nz;
                counts.mac_adds += nz;

                let step = state.step_neuron(idx, currents[idx]);
                counts.state_reads += 1;
                counts.state_mults += 1;
                counts.state_adds += 1;
                counts.compares += 1;
                counts.subs += u64::from(step.subtracted);
                counts.state_writes += 1;
                counts.output_writes += 1;
                out[idx] = i8::from(step.spike);
            }
        }
    }
    Ok((QuantTensor::spikes(vec![shape.co, g.ho, g.wo], out)?, counts))
}

/// Rectify then requantize an accumulator to an unsigned 7-bit activation.
pub(crate) fn relu_requant(acc: i64, shift: u32) -> i8 {
    let z = acc.max(0);
    (z >> shift.min(63)).min(i64::from(i8::MAX)) as i8
}

/// An 8-bit ANN convolution layer: MAC per (activation, weight) pair,
/// optional per-channel bias, rectifier, requantization, 8-bit write.
///
/// The bias is part of the arithmetic but is not charged.
pub fn ann_conv_layer(
    ifmap: &QuantTensor,
    weights: &QuantTensor,
    bias: Option<&[i8]>,
    shape: &ConvShape,
    opts: AnnOptions,
) -> Result<(QuantTensor, OpCounts)> {
    let g = Geometry::new(shape)?;
    g.check(ifmap, 8, weights)?;
    if let Some(b) = bias {
        if b.len() != shape.co {
            return Err(crate::error::Error::dim(format!("bias has {} entries for {} channels", b.len(), shape.co)));
        }
    }
    let (acc, active) = accumulate(&g, ifmap.data(), weights.data(), opts.traversal);

    let mut counts = OpCounts::new(EnergyKind::AnnConv, 8, 8);
    counts.weight_bits = shape.weight_bits;
    let mut out = vec![0i8; g.out_len()];
    for co in 0..shape.co {
        let b = bias.map_or(0, |b| i64::from(b[co]));
        for oh in 0..g.ho {
            for ow in 0..g.wo {
                let idx = g.out_index(co, oh, ow);
                let nz = active[oh * g.wo + ow];
                let slots = g.slots();
                let (reads, macs) = opts.zero_skip.charges(slots, nz);
                counts.slots += slots;
                counts.active_slots += nz;
                counts.input_reads += reads;
                counts.weight_reads += macs;
                counts.mac_adds += macs;
                counts.mac_mults += macs;
                counts.activations += 1;
                counts.quant_ops += 1;
                counts.output_writes += 1;
                out[idx] = relu_requant(acc[idx] + b, opts.requant_shift);
            }
        }
    }
    Ok((QuantTensor::int8(vec![shape.co, g.ho, g.wo], out)?, counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NeuronParams;
    use crate::sim::rng::{gen_sparse_activations, gen_sparse_spikes, gen_uniform_int8};
    use proptest::prelude::*;

    fn window(ci: usize, hk: usize, wk: usize) -> ConvShape {
        ConvShape::single_window(ci, hk, wk)
    }

    /// Direct per-output dot product with explicit padding checks.
    fn naive_ann(s: &ConvShape, x: &[i8], w: &[i8], shift: u32) -> Vec<i8> {
        let (co, ho, wo) = s.output_dims().unwrap();
        let mut out = Vec::new();
        for c in 0..co {
            for oh in 0..ho {
                for ow in 0..wo {
                    let mut a = 0i64;
                    for ci in 0..s.ci {
                        for kh in 0..s.hk {
                            for kw in 0..s.wk {
                                let h = (oh * s.stride + kh) as isize - s.padding as isize;
                                let ww = (ow * s.stride + kw) as isize - s.padding as isize;
                                if h < 0 || ww < 0 || h >= s.hi as isize || ww >= s.wi as isize {
                                    continue;
                                }
                                let xi = (ci * s.hi + h as usize) * s.wi + ww as usize;
                                let wi = ((c * s.ci + ci) * s.hk + kh) * s.wk + kw;
                                a += i64::from(x[xi]) * i64::from(w[wi]);
                            }
                        }
                    }
                    out.push((a.max(0) >> shift).min(127) as i8);
                }
            }
        }
        out
    }

    #[test]
    fn dense_spikes_count_every_pair() {
        let s = window(512, 3, 3).with_act_bits(1);
        let x = QuantTensor::spikes(vec![512, 3, 3], vec![1; 4608]).unwrap();
        let w = gen_uniform_int8(&[1, 512, 3, 3], 1, 127, 1).unwrap();
        let mut st = LifState::new(1, NeuronParams::default()).unwrap();
        let (out, c) = snn_conv_layer(&x, &w, &s, &mut st, SnnOptions::default()).unwrap();
        assert_eq!((c.weight_reads, c.mac_adds, c.input_reads), (4608, 4608, 4608));
        assert_eq!((c.state_reads, c.compares, c.state_writes, c.output_writes), (1, 1, 1, 1));
        assert_eq!(out.data(), &[1]);
        assert_eq!(c.subs, 1);
    }

    #[test]
    fn silent_input_still_updates_state() {
        let s = ConvShape { ci: 4, hi: 5, wi: 5, co: 3, hk: 3, wk: 3, ..Default::default() }.with_act_bits(1);
        let x = QuantTensor::zeros(vec![4, 5, 5], 1).unwrap();
        let w = gen_uniform_int8(&[3, 4, 3, 3], -128, 127, 2).unwrap();
        let mut st = LifState::new(27, NeuronParams::default()).unwrap();
        let (out, c) = snn_conv_layer(&x, &w, &s, &mut st, SnnOptions::default()).unwrap();
        assert_eq!((c.weight_reads, c.mac_adds, c.input_reads), (0, 0, 0));
        assert_eq!((c.state_reads, c.state_writes, c.output_writes), (27, 27, 27));
        assert_eq!(out.count_nonzero(), 0);
        let every = SnnOptions { spike_reads: SpikeReads::EveryPosition, ..Default::default() };
        let mut st = LifState::new(27, NeuronParams::default()).unwrap();
        let (_, c) = snn_conv_layer(&x, &w, &s, &mut st, every).unwrap();
        assert_eq!(c.input_reads, 27 * 36);
    }

    #[test]
    fn ann_dense_counts() {
        let s = window(512, 3, 3);
        let x = gen_uniform_int8(&[512, 3, 3], -128, 127, 3).unwrap();
        let w = gen_uniform_int8(&[1, 512, 3, 3], -128, 127, 4).unwrap();
        let (_, c) = ann_conv_layer(&x, &w, None, &s, AnnOptions::default()).unwrap();
        assert_eq!((c.input_reads, c.weight_reads, c.mac_adds, c.mac_mults), (4608, 4608, 4608, 4608));
        assert_eq!((c.quant_ops, c.output_writes), (1, 1));
    }

    #[test]
    fn ann_zero_skip_on_silent_input() {
        let s = ConvShape { ci: 2, hi: 4, wi: 4, co: 2, hk: 3, wk: 3, ..Default::default() };
        let x = QuantTensor::zeros(vec![2, 4, 4], 8).unwrap();
        let w = gen_uniform_int8(&[2, 2, 3, 3], -128, 127, 5).unwrap();
        let opts = |zero_skip| AnnOptions { zero_skip, ..Default::default() };
        let (_, c) = ann_conv_layer(&x, &w, None, &s, opts(ZeroSkip::SkipMac)).unwrap();
        assert_eq!((c.mac_mults, c.weight_reads), (0, 0));
        assert_eq!(c.input_reads, 8 * 18);
        let (_, c) = ann_conv_layer(&x, &w, None, &s, opts(ZeroSkip::Compressed)).unwrap();
        assert_eq!((c.input_reads, c.mac_mults), (0, 0));
        let (_, c) = ann_conv_layer(&x, &w, None, &s, opts(ZeroSkip::Off)).unwrap();
        assert_eq!((c.input_reads, c.mac_mults), (8 * 18, 8 * 18));
    }

    #[test]
    fn tiny_ann_matches_dot_product() {
        let s = ConvShape { ci: 1, hi: 3, wi: 3, co: 1, hk: 3, wk: 3, ..Default::default() };
        let x = QuantTensor::int8(vec![1, 3, 3], vec![1, 2, 3, 4, 5, 6, 7, 8, 9]).unwrap();
        let w = QuantTensor::int8(vec![1, 1, 3, 3], vec![1, 0, -1, 2, 0, -2, 3, 3, 3]).unwrap();
        let opts = AnnOptions { requant_shift: 0, ..Default::default() };
        let (out, _) = ann_conv_layer(&x, &w, None, &s, opts).unwrap();
        // 1 - 3 + 8 - 12 + 21 + 24 + 27
        assert_eq!(out.data(), &[66]);
        let (out, _) = ann_conv_layer(&x, &w, Some(&[-70]), &s, opts).unwrap();
        assert_eq!(out.data(), &[0]);
    }

    #[test]
    fn dimension_mismatch() {
        let s = window(2, 3, 3);
        let x = QuantTensor::zeros(vec![2, 3, 4], 8).unwrap();
        let w = QuantTensor::zeros(vec![1, 2, 3, 3], 8).unwrap();
        assert!(ann_conv_layer(&x, &w, None, &s, AnnOptions::default()).is_err());
        let spikes = QuantTensor::zeros(vec![2, 3, 3], 8).unwrap();
        let mut st = LifState::new(1, NeuronParams::default()).unwrap();
        assert!(snn_conv_layer(&spikes, &w, &s.with_act_bits(1), &mut st, SnnOptions::default()).is_err());
    }

    fn small_shape() -> impl Strategy<Value = ConvShape> {
        (1usize..5, 1usize..5, 1usize..4, 0usize..2, 1usize..3, 1usize..9, 1usize..9).prop_filter_map(
            "shape must tile",
            |(ci, co, k, padding, stride, hi, wi)| {
                let s = ConvShape { ci, hi, wi, co, hk: k, wk: k, stride, padding, ..Default::default() };
                s.validate().ok().map(|_| s)
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ann_matches_naive_oracle(s in small_shape(), seed: u64, shift in 0u32..10) {
            let x = gen_uniform_int8(&[s.ci, s.hi, s.wi], -128, 127, seed).unwrap();
            let w = gen_uniform_int8(&[s.co, s.ci, s.hk, s.wk], -128, 127, seed ^ 1).unwrap();
            let expect = naive_ann(&s, x.data(), w.data(), shift);
            for traversal in [Traversal::Dense, Traversal::EventDriven] {
                let opts = AnnOptions { traversal, zero_skip: ZeroSkip::Off, requant_shift: shift };
                let (out, _) = ann_conv_layer(&x, &w, None, &s, opts).unwrap();
                prop_assert_eq!(out.data(), &expect[..]);
            }
        }

        #[test]
        fn event_and_dense_agree(s in small_shape(), seed: u64, density in 0.05f64..1.0, theta in 1i32..127) {
            let s = s.with_act_bits(1);
            let x = gen_sparse_spikes(&[s.ci, s.hi, s.wi], density, seed).unwrap();
            let w = gen_uniform_int8(&[s.co, s.ci, s.hk, s.wk], -128, 127, seed ^ 2).unwrap();
            let n = s.windows().unwrap() as usize;
            let p = NeuronParams { theta, ..Default::default() };
            let mut a = LifState::new(n, p).unwrap();
            let mut b = LifState::new(n, p).unwrap();
            let dense = SnnOptions { traversal: Traversal::Dense, ..Default::default() };
            let event = SnnOptions { traversal: Traversal::EventDriven, ..Default::default() };
            let (oa, ca) = snn_conv_layer(&x, &w, &s, &mut a, dense).unwrap();
            let (ob, cb) = snn_conv_layer(&x, &w, &s, &mut b, event).unwrap();
            prop_assert_eq!(oa, ob);
            prop_assert_eq!(ca, cb);
            prop_assert_eq!(a, b);

            let xa = gen_sparse_activations(&[s.ci, s.hi, s.wi], density, seed).unwrap();
            for zero_skip in [ZeroSkip::Off, ZeroSkip::SkipMac, ZeroSkip::Compressed] {
                let opts = |traversal| AnnOptions { traversal, zero_skip, requant_shift: 6 };
                let ra = ann_conv_layer(&xa, &w, None, &s.with_act_bits(8), opts(Traversal::Dense)).unwrap();
                let rb = ann_conv_layer(&xa, &w, None, &s.with_act_bits(8), opts(Traversal::EventDriven)).unwrap();
                prop_assert_eq!(ra, rb);
            }
        }
    }
}
