//! Dominance and Pareto frontiers over (energy per inference, task error).
//!
//! `a` dominates `b` when it is no worse on both axes and strictly better on
//! at least one. Records of different tasks are never compared.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::survey::{AcceleratorRecord, Task};

pub fn dominates(a: &AcceleratorRecord, b: &AcceleratorRecord) -> Result<bool> {
    if a.task != b.task {
        return Err(Error::TaskMismatch {
            a: a.name.clone(),
            task_a: a.task.to_string(),
            b: b.name.clone(),
            task_b: b.task.to_string(),
        });
    }
    Ok(dominates_on((a.energy_per_inference_nj, a.task_error_pct), (b.energy_per_inference_nj, b.task_error_pct)))
}

fn dominates_on((ea, xa): (f64, f64), (eb, xb): (f64, f64)) -> bool {
    ea <= eb && xa <= xb && (ea < eb || xa < xb)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrontierResult {
    pub task: Task,
    /// Non-dominated records, by ascending error then name.
    pub frontier: Vec<String>,
    /// Every dominated record mapped to all records dominating it.
    pub dominated: BTreeMap<String, BTreeSet<String>>,
}

impl FrontierResult {
    pub fn is_on_frontier(&self, name: &str) -> bool {
        self.frontier.iter().any(|n| n == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("frontier serializes")
    }
}

fn by_error_then_name(a: &&AcceleratorRecord, b: &&AcceleratorRecord) -> std::cmp::Ordering {
    a.task_error_pct.total_cmp(&b.task_error_pct).then_with(|| a.name.cmp(&b.name))
}

/// Frontier of the records belonging to `task`, or of all records when
/// `task` is `None` (they must then share one task).
///
/// Sweeps records in ascending error; within a group of equal error only the
/// lowest energy can survive, and it does so if it beats every record with
/// strictly lower error.
pub fn frontier(records: &[AcceleratorRecord], task: Option<Task>) -> Result<FrontierResult> {
    let selected: Vec<&AcceleratorRecord> = records.iter().filter(|r| task.is_none_or(|t| r.task == t)).collect();
    let Some(first) = selected.first() else {
        let what = task.map(|t| format!(" for task {t}")).unwrap_or_default();
        return Err(Error::EmptySelection(what));
    };
    let task = first.task;
    if let Some(other) = selected.iter().find(|r| r.task != task) {
        return Err(Error::TaskMismatch {
            a: first.name.clone(),
            task_a: task.to_string(),
            b: other.name.clone(),
            task_b: other.task.to_string(),
        });
    }

    let mut sorted = selected.clone();
    sorted.sort_by(|a, b| {
        a.task_error_pct
            .total_cmp(&b.task_error_pct)
            .then(a.energy_per_inference_nj.total_cmp(&b.energy_per_inference_nj))
    });
    let mut on_frontier = BTreeSet::new();
    let mut best_energy = f64::INFINITY;
    let mut i = 0;
    while i < sorted.len() {
        let err = sorted[i].task_error_pct;
        let group_min = sorted[i].energy_per_inference_nj;
        let mut j = i;
        while j < sorted.len() && sorted[j].task_error_pct == err {
            if sorted[j].energy_per_inference_nj == group_min && group_min < best_energy {
                on_frontier.insert(sorted[j].name.as_str());
            }
            j += 1;
        }
        best_energy = best_energy.min(group_min);
        i = j;
    }

    let mut front: Vec<&AcceleratorRecord> =
        selected.iter().copied().filter(|r| on_frontier.contains(r.name.as_str())).collect();
    front.sort_by(by_error_then_name);

    let mut dominated = BTreeMap::new();
    for b in selected.iter().filter(|r| !on_frontier.contains(r.name.as_str())) {
        let by: BTreeSet<String> =
            selected.iter().filter(|a| dominates(a, b).unwrap_or(false)).map(|a| a.name.clone()).collect();
        dominated.insert(b.name.clone(), by);
    }

    Ok(FrontierResult { task, frontier: front.into_iter().map(|r| r.name.clone()).collect(), dominated })
}

/// One row of the scatter data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterRow {
    pub name: String,
    pub family: String,
    pub task: Task,
    pub error_pct: f64,
    pub energy_nj: f64,
    pub on_frontier: bool,
}

/// Scatter rows for `task` (or every task), sorted by error then name.
/// Frontier membership is computed within each task.
pub fn scatter_rows(records: &[AcceleratorRecord], task: Option<Task>) -> Result<Vec<ScatterRow>> {
    let mut rows = Vec::new();
    for t in Task::ALL {
        if task.is_some_and(|want| want != t) || !records.iter().any(|r| r.task == t) {
            continue;
        }
        let f = frontier(records, Some(t))?;
        rows.extend(records.iter().filter(|r| r.task == t).map(|r| ScatterRow {
            name: r.name.clone(),
            family: r.family.to_string(),
            task: t,
            error_pct: r.task_error_pct,
            energy_nj: r.energy_per_inference_nj,
            on_frontier: f.is_on_frontier(&r.name),
        }));
    }
    rows.sort_by(|a, b| a.error_pct.total_cmp(&b.error_pct).then_with(|| a.name.cmp(&b.name)));
    Ok(rows)
}

/// CSV with header `name,family,error_pct,energy_nj,on_frontier`.
pub fn emit_scatter(records: &[AcceleratorRecord], task: Option<Task>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "family", "error_pct", "energy_nj", "on_frontier"])?;
    for r in scatter_rows(records, task)? {
        w.write_record([
            r.name,
            r.family,
            r.error_pct.to_string(),
            r.energy_nj.to_string(),
            r.on_frontier.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("csv is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::survey::{bundled_audio, bundled_imagenet, Family};
    use proptest::prelude::*;

    fn rec(name: &str, task: Task, energy: f64, err: f64) -> AcceleratorRecord {
        AcceleratorRecord::new(name, Family::Ann, task, energy, err).unwrap()
    }

    fn get<'a>(rs: &'a [AcceleratorRecord], n: &str) -> &'a AcceleratorRecord {
        rs.iter().find(|r| r.name == n).unwrap()
    }

    /// O(n^2): a record is on the frontier iff nothing dominates it.
    fn brute_force(rs: &[AcceleratorRecord]) -> BTreeSet<String> {
        rs.iter().filter(|b| !rs.iter().any(|a| dominates(a, b).unwrap())).map(|r| r.name.clone()).collect()
    }

    #[test]
    fn dominance_examples() {
        let rs = bundled_imagenet();
        assert!(dominates(get(&rs, "C-DNN'23"), get(&rs, "Mo'21")).unwrap());
        assert!(!dominates(get(&rs, "Mo'21"), get(&rs, "Mo'21")).unwrap());
        let audio = bundled_audio();
        let shan = get(&audio, "Shan'23");
        let oh = get(&audio, "Oh'19");
        assert!(dominates(shan, oh).is_err());
        let oh_as_kws = AcceleratorRecord { task: Task::Kws, ..oh.clone() };
        assert!(!dominates(shan, &oh_as_kws).unwrap());
        assert!(!dominates(&oh_as_kws, shan).unwrap());
    }

    #[test]
    fn imagenet_frontier() {
        let rs = bundled_imagenet();
        let f = frontier(&rs, None).unwrap();
        assert_eq!(f.frontier, vec!["Keller'23", "C-DNN'23"]);
        assert_eq!(f.dominated["SNPU'23"].len(), 4);
        assert_eq!(brute_force(&rs), f.frontier.iter().cloned().collect());
    }

    #[test]
    fn kws_frontier() {
        let rs = bundled_audio();
        let f = frontier(&rs, Some(Task::Kws)).unwrap();
        assert_eq!(f.frontier, vec!["Gao'20", "Gao'18", "Shan'23"]);
        let kws: Vec<_> = rs.iter().filter(|r| r.task == Task::Kws).cloned().collect();
        assert_eq!(brute_force(&kws), f.frontier.iter().cloned().collect());
        assert!(frontier(&rs, None).is_err());
    }

    #[test]
    fn single_and_empty() {
        let one = vec![rec("a", Task::Vad, 1.0, 1.0)];
        assert_eq!(frontier(&one, None).unwrap().frontier, vec!["a"]);
        assert!(matches!(frontier(&one, Some(Task::Kws)), Err(Error::EmptySelection(_))));
        assert!(frontier(&[], None).is_err());
    }

    #[test]
    fn exact_ties_both_kept() {
        let rs = vec![rec("a", Task::Kws, 5.0, 2.0), rec("b", Task::Kws, 5.0, 2.0), rec("c", Task::Kws, 6.0, 2.0)];
        let f = frontier(&rs, None).unwrap();
        assert_eq!(f.frontier, vec!["a", "b"]);
        assert_eq!(f.dominated["c"], ["a", "b"].iter().map(|s| s.to_string()).collect());
    }

    #[test]
    fn scatter_csv() {
        let csv = emit_scatter(&bundled_imagenet(), None).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "name,family,error_pct,energy_nj,on_frontier");
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[1], "Keller'23,ANN,19.5,990000,true");
        assert_eq!(lines[5], "SNPU'23,SNN,33.2,1950000,false");
        assert_eq!(emit_scatter(&[], None).unwrap(), "name,family,error_pct,energy_nj,on_frontier\n");
        let audio = emit_scatter(&bundled_audio(), None).unwrap();
        assert_eq!(audio.lines().count(), 9);
        assert!(audio.contains("\nFrenkel'22,SNN,9.3,42,false\n"));
    }

    fn records(max: usize) -> impl Strategy<Value = Vec<AcceleratorRecord>> {
        // a coarse grid makes ties on either axis common
        proptest::collection::vec((1u32..40, 0u32..30), 1..max).prop_map(|pts| {
            pts.into_iter()
                .enumerate()
                .map(|(i, (e, x))| rec(&format!("r{i:03}"), Task::Kws, f64::from(e) * 0.5, f64::from(x) * 0.25))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(rs in records(100)) {
            let f = frontier(&rs, None).unwrap();
            let got: BTreeSet<String> = f.frontier.iter().cloned().collect();
            prop_assert_eq!(&got, &brute_force(&rs));
            for (name, by) in &f.dominated {
                prop_assert!(!by.is_empty());
                prop_assert!(by.iter().any(|d| got.contains(d)), "{} lacks a frontier dominator", name);
            }
            for a in &f.frontier {
                for b in &f.frontier {
                    prop_assert!(!dominates(get(&rs, a), get(&rs, b)).unwrap());
                }
            }
        }

        #[test]
        fn strict_partial_order(rs in records(12)) {
            for a in &rs {
                prop_assert!(!dominates(a, a).unwrap());
                for b in &rs {
                    let ab = dominates(a, b).unwrap();
                    prop_assert!(!(ab && dominates(b, a).unwrap()));
                    for c in &rs {
                        if ab && dominates(b, c).unwrap() {
                            prop_assert!(dominates(a, c).unwrap());
                        }
                    }
                }
            }
        }

        #[test]
        fn invariant_under_monotone_axis_transform(rs in records(60), k in 0.1f64..10.0) {
            let base = frontier(&rs, None).unwrap().frontier;
            let energy: Vec<_> = rs.iter().map(|r| AcceleratorRecord {
                energy_per_inference_nj: (r.energy_per_inference_nj * k).ln() + 100.0, ..r.clone() }).collect();
            let error: Vec<_> = rs.iter().map(|r| AcceleratorRecord {
                task_error_pct: r.task_error_pct.sqrt(), ..r.clone() }).collect();
            prop_assert_eq!(&frontier(&energy, None).unwrap().frontier, &base);
            prop_assert_eq!(&frontier(&error, None).unwrap().frontier, &base);
        }
    }
}
