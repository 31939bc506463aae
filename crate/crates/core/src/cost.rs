//! Per-operation energy prices for a technology node.
//!
//! Every energy figure produced elsewhere in the crate is a count multiplied by
//! one of the prices held in a [`CostTable`]. Memory is priced as an energy
//! density (pJ per byte); sub-byte accesses are charged pro-rata, so a single
//! spike bit costs one eighth of a byte access.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bundled 45 nm table (`data/cost_45nm.json`).
pub const BUNDLED_COST_45NM: &str = include_str!("../../../data/cost_45nm.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Access {
    Read,
    Write,
}

/// Unit energies in picojoules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCostTable")]
pub struct CostTable {
    pub e_add_pj: f64,
    pub e_mult_pj: f64,
    pub e_comp_pj: f64,
    pub e_sub_pj: f64,
    pub e_rd_pj_per_byte: f64,
    pub e_wr_pj_per_byte: f64,
    pub label: String,
}

/// On-disk form. Optional prices fall back to their documented defaults.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCostTable {
    #[serde(alias = "add")]
    e_add_pj: f64,
    #[serde(alias = "mult")]
    e_mult_pj: f64,
    #[serde(default, alias = "comp")]
    e_comp_pj: Option<f64>,
    #[serde(default, alias = "sub")]
    e_sub_pj: Option<f64>,
    #[serde(alias = "rd")]
    e_rd_pj_per_byte: f64,
    #[serde(default, alias = "wr")]
    e_wr_pj_per_byte: Option<f64>,
    #[serde(default)]
    label: Option<String>,
}

impl Default for CostTable {
    /// 45 nm CMOS: 8-bit add 0.03 pJ, 8-bit multiply 0.20 pJ, SRAM 2.50 pJ/B.
    fn default() -> Self {
        CostTable {
            e_add_pj: 0.03,
            e_mult_pj: 0.20,
            e_comp_pj: 0.03,
            e_sub_pj: 0.03,
            e_rd_pj_per_byte: 2.50,
            e_wr_pj_per_byte: 2.50,
            label: "45nm CMOS, on-chip SRAM (8 KB), integer arithmetic".to_string(),
        }
    }
}

impl TryFrom<RawCostTable> for CostTable {
    type Error = Error;

    fn try_from(raw: RawCostTable) -> Result<Self> {
        let table = CostTable {
            e_add_pj: raw.e_add_pj,
            e_mult_pj: raw.e_mult_pj,
            e_comp_pj: raw.e_comp_pj.unwrap_or(raw.e_add_pj),
            e_sub_pj: raw.e_sub_pj.unwrap_or(raw.e_add_pj),
            e_rd_pj_per_byte: raw.e_rd_pj_per_byte,
            e_wr_pj_per_byte: raw.e_wr_pj_per_byte.unwrap_or(raw.e_rd_pj_per_byte),
            label: raw.label.unwrap_or_default(),
        };
        table.validate()?;
        Ok(table)
    }
}

impl CostTable {
    /// The table shipped in `data/cost_45nm.json`.
    pub fn bundled_45nm() -> Self {
        Self::from_json_str(BUNDLED_COST_45NM).expect("bundled cost table is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("e_add_pj", self.e_add_pj),
            ("e_mult_pj", self.e_mult_pj),
            ("e_comp_pj", self.e_comp_pj),
            ("e_sub_pj", self.e_sub_pj),
            ("e_rd_pj_per_byte", self.e_rd_pj_per_byte),
            ("e_wr_pj_per_byte", self.e_wr_pj_per_byte),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::validation(format!("{name} must be finite")));
            }
            if value <= 0.0 {
                return Err(Error::validation(format!("{name} must be > 0")));
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: RawCostTable =
            serde_json::from_str(s).map_err(|source| Error::Parse { what: "cost table".to_string(), source })?;
        raw.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cost table serializes")
    }

    /// Energy density for the given access kind, pJ/byte.
    pub fn density(&self, access: Access) -> f64 {
        match access {
            Access::Read => self.e_rd_pj_per_byte,
            Access::Write => self.e_wr_pj_per_byte,
        }
    }

    /// Energy of one memory access of `bits` bits: `bits / 8 * density`.
    pub fn mem_energy(&self, bits: u32, access: Access) -> Result<f64> {
        if bits == 0 {
            return Err(Error::validation("access width must be >= 1 bit"));
        }
        Ok(self.mem_energy_unchecked(bits, access))
    }

    pub(crate) fn mem_energy_unchecked(&self, bits: u32, access: Access) -> f64 {
        f64::from(bits) / 8.0 * self.density(access)
    }
}

pub fn load_cost_table(path: impl AsRef<Path>) -> Result<CostTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    CostTable::from_json_str(&text)
}

pub fn mem_energy(table: &CostTable, bits: u32, access: Access) -> Result<f64> {
    table.mem_energy(bits, access)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn short_keys_fill_defaults() {
        let t = CostTable::from_json_str(r#"{"add": 0.03, "mult": 0.20, "rd": 2.50}"#).unwrap();
        assert_eq!(t.e_comp_pj, 0.03);
        assert_eq!(t.e_sub_pj, 0.03);
        assert_eq!(t.e_wr_pj_per_byte, 2.50);
    }

    #[test]
    fn unit_table_accepted() {
        let t = CostTable::from_json_str(
            r#"{"e_add_pj":1.0,"e_mult_pj":1.0,"e_comp_pj":1.0,"e_sub_pj":1.0,
                "e_rd_pj_per_byte":1.0,"e_wr_pj_per_byte":1.0}"#,
        )
        .unwrap();
        assert_eq!(t.e_mult_pj, 1.0);
        assert_eq!(t.label, "");
    }

    #[test]
    fn negative_price_names_field() {
        let err = CostTable::from_json_str(r#"{"e_add_pj":0.03,"e_mult_pj":-1,"e_rd_pj_per_byte":2.5}"#).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err:?}");
        assert_eq!(err.to_string(), "e_mult_pj must be > 0");
    }

    #[test]
    fn zero_price_rejected() {
        let err = CostTable::from_json_str(r#"{"e_add_pj":0,"e_mult_pj":0.2,"e_rd_pj_per_byte":2.5}"#).unwrap_err();
        assert_eq!(err.to_string(), "e_add_pj must be > 0");
    }

    #[test]
    fn garbage_is_parse_error() {
        let err = CostTable::from_json_str("{not json").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn bundled_matches_default() {
        assert_eq!(CostTable::bundled_45nm(), CostTable::default());
    }

    #[test]
    fn mem_energy_examples() {
        let t = CostTable::default();
        assert_eq!(t.mem_energy(8, Access::Read).unwrap(), 2.5);
        assert_eq!(t.mem_energy(1, Access::Read).unwrap(), 0.3125);
        assert_eq!(t.mem_energy(64, Access::Read).unwrap(), 20.0);
        assert!(t.mem_energy(0, Access::Write).is_err());
    }

    #[test]
    fn read_dominates_multiply() {
        let t = CostTable::default();
        assert!(t.mem_energy(8, Access::Read).unwrap() >= 12.0 * t.e_mult_pj);
    }

    #[test]
    fn load_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.json");
        std::fs::write(&p, CostTable::default().to_json()).unwrap();
        assert_eq!(load_cost_table(&p).unwrap(), CostTable::default());
        assert!(matches!(load_cost_table(dir.path().join("missing.json")), Err(Error::Io { .. })));
    }

    fn price() -> impl Strategy<Value = f64> {
        1e-6f64..1e3
    }

    proptest! {
        #[test]
        fn mem_energy_is_linear_in_bits(a in 1u32..4096, b in 1u32..4096, rd in price(), wr in price()) {
            let t = CostTable { e_rd_pj_per_byte: rd, e_wr_pj_per_byte: wr, ..CostTable::default() };
            for access in [Access::Read, Access::Write] {
                let lhs = t.mem_energy(a + b, access).unwrap();
                let rhs = t.mem_energy(a, access).unwrap() + t.mem_energy(b, access).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            }
        }

        #[test]
        fn json_round_trip(add in price(), mult in price(), comp in price(), sub in price(),
                           rd in price(), wr in price(), label in "[a-zA-Z0-9 ,.]{0,24}") {
            let t = CostTable { e_add_pj: add, e_mult_pj: mult, e_comp_pj: comp, e_sub_pj: sub,
                                e_rd_pj_per_byte: rd, e_wr_pj_per_byte: wr, label };
            let back = CostTable::from_json_str(&t.to_json()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
