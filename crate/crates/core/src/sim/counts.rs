//! Operation tallies from a functional run and their conversion to energy.

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::analytic::{EnergyBreakdown, EnergyKind};
use crate::cost::{Access, CostTable};
use crate::error::Result;

/// Exact per-run counts of memory accesses and arithmetic.
///
/// Counters are grouped by the energy term they feed:
///
/// * operand reads: `weight_reads`, `input_reads`
/// * synaptic accumulation / MAC: `mac_adds`, `mac_mults`
/// * neuron state: `state_reads`, `state_mults`, `state_adds`, `compares`,
///   `subs`, `state_writes`
/// * output: `output_writes`, `quant_ops`, `activations`
///
/// `activations` (rectifier evaluations) are tallied but priced at zero.
/// `slots` and `active_slots` are activity statistics, not priced: how many
/// in-bounds (input, weight) pairs the run visited and how many of those
/// carried a nonzero input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub kind: EnergyKind,
    pub weight_bits: u32,
    pub input_bits: u32,
    pub state_bits: u32,
    pub output_bits: u32,
    pub weight_reads: u64,
    pub input_reads: u64,
    pub mac_adds: u64,
    pub mac_mults: u64,
    pub state_reads: u64,
    pub state_mults: u64,
    pub state_adds: u64,
    pub compares: u64,
    pub subs: u64,
    pub state_writes: u64,
    pub output_writes: u64,
    pub quant_ops: u64,
    pub activations: u64,
    pub slots: u64,
    pub active_slots: u64,
}

impl OpCounts {
    pub fn new(kind: EnergyKind, input_bits: u32, output_bits: u32) -> Self {
        OpCounts {
            kind,
            weight_bits: 8,
            input_bits,
            state_bits: 8,
            output_bits,
            weight_reads: 0,
            input_reads: 0,
            mac_adds: 0,
            mac_mults: 0,
            state_reads: 0,
            state_mults: 0,
            state_adds: 0,
            compares: 0,
            subs: 0,
            state_writes: 0,
            output_writes: 0,
            quant_ops: 0,
            activations: 0,
            slots: 0,
            active_slots: 0,
        }
    }

    pub fn adds(&self) -> u64 {
        self.mac_adds + self.state_adds + self.quant_ops
    }

    pub fn mults(&self) -> u64 {
        self.mac_mults + self.state_mults
    }

    /// Fraction of visited input slots that were nonzero.
    pub fn empirical_density(&self) -> f64 {
        if self.slots == 0 {
            0.0
        } else {
            self.active_slots as f64 / self.slots as f64
        }
    }

    /// `(name, value)` pairs in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("weight_bits", self.weight_bits.into()),
            ("input_bits", self.input_bits.into()),
            ("state_bits", self.state_bits.into()),
            ("output_bits", self.output_bits.into()),
            ("weight_reads", self.weight_reads),
            ("input_reads", self.input_reads),
            ("mac_adds", self.mac_adds),
            ("mac_mults", self.mac_mults),
            ("state_reads", self.state_reads),
            ("state_mults", self.state_mults),
            ("state_adds", self.state_adds),
            ("compares", self.compares),
            ("subs", self.subs),
            ("state_writes", self.state_writes),
            ("output_writes", self.output_writes),
            ("quant_ops", self.quant_ops),
            ("activations", self.activations),
            ("slots", self.slots),
            ("active_slots", self.active_slots),
        ]
    }

    /// `counter,value` CSV.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["counter", "value"])?;
        w.write_record(["kind", self.kind.as_str()])?;
        for (name, value) in self.entries() {
            w.write_record([name, &value.to_string()])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("csv is utf-8"))
    }
}

impl AddAssign<&OpCounts> for OpCounts {
    fn add_assign(&mut self, o: &OpCounts) {
        self.weight_reads += o.weight_reads;
        self.input_reads += o.input_reads;
        self.mac_adds += o.mac_adds;
        self.mac_mults += o.mac_mults;
        self.state_reads += o.state_reads;
        self.state_mults += o.state_mults;
        self.state_adds += o.state_adds;
        self.compares += o.compares;
        self.subs += o.subs;
        self.state_writes += o.state_writes;
        self.output_writes += o.output_writes;
        self.quant_ops += o.quant_ops;
        self.activations += o.activations;
        self.slots += o.slots;
        self.active_slots += o.active_slots;
    }
}

/// Prices every counter with `table` into the four-term breakdown used by
/// the analytic model.
pub fn counts_to_energy(c: &OpCounts, table: &CostTable) -> EnergyBreakdown {
    let mem = |n: u64, bits: u32, access| n as f64 * table.mem_energy_unchecked(bits.max(1), access);
    let ops = |n: u64, price: f64| n as f64 * price;

    let rd_tot = mem(c.weight_reads, c.weight_bits, Access::Read) + mem(c.input_reads, c.input_bits, Access::Read);
    let compute = ops(c.mac_adds, table.e_add_pj) + ops(c.mac_mults, table.e_mult_pj);
    let state_mem = mem(c.state_reads, c.state_bits, Access::Read) + mem(c.state_writes, c.state_bits, Access::Write);
    let state = state_mem
        + ops(c.state_mults, table.e_mult_pj)
        + ops(c.state_adds, table.e_add_pj)
        + ops(c.compares, table.e_comp_pj)
        + ops(c.subs, table.e_sub_pj);
    let ofmap_mem = mem(c.output_writes, c.output_bits, Access::Write);
    let ofmap = ofmap_mem + ops(c.quant_ops, table.e_add_pj);
    EnergyBreakdown::new(c.kind, rd_tot, compute, (state, state_mem), (ofmap, ofmap_mem))
}
