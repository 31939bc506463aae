//! CSV emitters for sweeps. Numbers use Rust's `Display` for `f64`, which is
//! locale-independent and round-trips exactly.

use crate::analytic::{EnergyBreakdown, SweepRow};
use crate::error::Result;
use crate::sim::Comparison;

pub const SWEEP_HEADER: [&str; 7] =
    ["gamma", "kind", "e_rd_tot_pj", "e_compute_pj", "e_state_pj", "e_ofmap_pj", "total_pj"];
pub const SIM_HEADER: [&str; 3] = ["sim_density", "sim_total_pj", "sim_deviation"];

/// Simulator results for one sweep point, SNN then ANN.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSim {
    pub snn: Comparison,
    pub ann: Comparison,
}

fn breakdown_fields(gamma: f64, b: &EnergyBreakdown) -> Vec<String> {
    let mut v = vec![gamma.to_string(), b.kind.as_str().to_string()];
    v.extend(b.components().iter().map(|(_, x)| x.to_string()));
    v
}

/// One row per (gamma, kind). When `sim` is given it must match `rows` in
/// length and order; the deviation column compares the simulated total
/// against the analytic total at the measured density.
pub fn sweep_csv(rows: &[SweepRow], sim: Option<&[SweepSim]>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = SWEEP_HEADER.to_vec();
    if sim.is_some() {
        header.extend(SIM_HEADER);
    }
    w.write_record(&header)?;
    for (i, row) in rows.iter().enumerate() {
        let point = sim.map(|s| &s[i]);
        for (b, c) in [(&row.snn, point.map(|p| &p.snn)), (&row.ann, point.map(|p| &p.ann))] {
            let mut fields = breakdown_fields(row.gamma, b);
            if let Some(c) = c {
                fields.push(c.empirical_density.to_string());
                fields.push(c.simulated.total_pj.to_string());
                fields.push(c.total_deviation().to_string());
            }
            w.write_record(&fields)?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("csv is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::sweep_sparsity;
    use crate::cost::CostTable;
    use crate::network::{LayerShape, SparsityMode};

    #[test]
    fn dense_row_values() {
        let layer = LayerShape::Conv(Default::default());
        let rows = sweep_sparsity(&layer, &CostTable::default(), &[1.0], 1, SparsityMode::PaperFaithful).unwrap();
        let csv = sweep_csv(&rows, None).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER.join(","));
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,snn_conv,"));
        assert!(lines[2].starts_with("1,ann_conv,"));
    }
}
