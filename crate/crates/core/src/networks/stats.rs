use std::collections::BTreeMap;

use serde::Serialize;

use super::benchmark::repr_map;
use crate::dea::ReprResult;
use crate::ingest::{AnalysisPanel, IncomeGroup};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub group: IncomeGroup,
    pub count: usize,
    pub mean_eci: Option<f64>,
    pub mean_co2_pc: Option<f64>,
    pub mean_ef_pc: Option<f64>,
    pub mean_repr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub groups: Vec<GroupSummary>,
    /// Ranked countries with no income label.
    pub unlabeled: Vec<String>,
}

impl GroupStats {
    pub fn get(&self, group: IncomeGroup) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| g.group == group)
    }
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Per-income-group means over the ranked countries present in the panel.
pub fn group_stats(panel: &AnalysisPanel, eci: &BTreeMap<String, f64>, repr: &[ReprResult]) -> GroupStats {
    let scores = repr_map(repr);
    let mut cols: BTreeMap<IncomeGroup, [Vec<f64>; 4]> = BTreeMap::new();
    let mut unlabeled = Vec::new();

    for (country, &theta) in &scores {
        let Some(i) = panel.index_of(country) else { continue };
        let Some(group) = panel.income[i] else {
            unlabeled.push(country.to_string());
            continue;
        };
        let entry = cols.entry(group).or_default();
        if let Some(&e) = eci.get(*country) {
            entry[0].push(e);
        }
        entry[1].push(panel.co2_pc[i]);
        entry[2].push(panel.ef_pc[i]);
        entry[3].push(theta);
    }

    let groups = IncomeGroup::ALL
        .iter()
        .map(|&group| {
            let empty = Default::default();
            let c = cols.get(&group).unwrap_or(&empty);
            GroupSummary {
                group,
                count: c[3].len(),
                mean_eci: mean(&c[0]),
                mean_co2_pc: mean(&c[1]),
                mean_ef_pc: mean(&c[2]),
                mean_repr: mean(&c[3]),
            }
        })
        .collect();
    GroupStats { groups, unlabeled }
}
