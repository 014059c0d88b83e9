use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::NetworkError;
use crate::dea::{ReprResult, RANK_TIE_TOLERANCE};
use crate::similarity::CorrelationMatrix;

/// Denominator floor for relative gains of zero-score countries.
pub const RELATIVE_GAIN_FLOOR: f64 = 1e-4;

/// Ordering used to pick partners among eligible candidates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartnerRule {
    /// Largest REPR gain first, then correlation.
    #[default]
    MaxGain,
    /// Highest correlation first, then gain.
    MaxCorrelation,
}

impl std::str::FromStr for PartnerRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max-gain" => Ok(PartnerRule::MaxGain),
            "max-correlation" => Ok(PartnerRule::MaxCorrelation),
            other => Err(format!("unknown partner rule {other:?} (expected max-gain or max-correlation)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub rule: PartnerRule,
    /// Candidates need `ρ > 0` and `ρ ≥ min_rho`.
    pub min_rho: f64,
    pub max_partners: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self { rule: PartnerRule::MaxGain, min_rho: 0.0, max_partners: 2 }
    }
}

/// Directed edge from a country to a better-scoring similar partner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkEdge {
    pub focal: String,
    pub partner: String,
    pub rho: f64,
    pub delta_repr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkNetwork {
    pub nodes: Vec<String>,
    /// Grouped by focal country (sorted), partners in selection order.
    pub edges: Vec<BenchmarkEdge>,
}

impl BenchmarkNetwork {
    pub fn partners_of<'a>(&'a self, focal: &'a str) -> impl Iterator<Item = &'a BenchmarkEdge> + 'a {
        self.edges.iter().filter(move |e| e.focal == focal)
    }
}

pub(super) fn repr_map(repr: &[ReprResult]) -> BTreeMap<&str, f64> {
    repr.iter().map(|r| (r.country.as_str(), r.theta)).collect()
}

pub fn benchmark_network(
    corr: &CorrelationMatrix,
    repr: &[ReprResult],
    config: &BenchmarkConfig,
) -> Result<BenchmarkNetwork, NetworkError> {
    if corr.is_empty() {
        return Err(NetworkError::NoPartners);
    }
    let scores = repr_map(repr);
    let theta: Vec<f64> = corr
        .countries
        .iter()
        .map(|c| scores.get(c.as_str()).copied().ok_or_else(|| NetworkError::MissingRepr(c.clone())))
        .collect::<Result<_, _>>()?;

    let mut order: Vec<usize> = (0..corr.len()).collect();
    order.sort_by(|&a, &b| corr.countries[a].cmp(&corr.countries[b]));

    let mut edges = Vec::new();
    for &i in &order {
        let mut cands: Vec<BenchmarkEdge> = order
            .iter()
            .filter(|&&j| j != i)
            .filter_map(|&j| {
                let rho = corr.values[(i, j)];
                let delta = theta[j] - theta[i];
                (rho > 0.0 && rho >= config.min_rho && delta > RANK_TIE_TOLERANCE).then(|| BenchmarkEdge {
                    focal: corr.countries[i].clone(),
                    partner: corr.countries[j].clone(),
                    rho,
                    delta_repr: delta,
                })
            })
            .collect();
        cands.sort_by(|x, y| {
            let primary = match config.rule {
                PartnerRule::MaxGain => y.delta_repr.total_cmp(&x.delta_repr).then(y.rho.total_cmp(&x.rho)),
                PartnerRule::MaxCorrelation => y.rho.total_cmp(&x.rho).then(y.delta_repr.total_cmp(&x.delta_repr)),
            };
            primary.then_with(|| x.partner.cmp(&y.partner))
        });
        cands.truncate(config.max_partners);
        edges.extend(cands);
    }

    Ok(BenchmarkNetwork {
        nodes: order.iter().map(|&i| corr.countries[i].clone()).collect(),
        edges,
    })
}

/// Mean gain from adopting the best partner's score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovementSummary {
    pub countries_with_partners: usize,
    pub mean_absolute_gain: f64,
    pub mean_relative_gain: f64,
    pub per_country: Vec<CountryGain>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountryGain {
    pub country: String,
    pub repr: f64,
    pub best_partner: String,
    pub best_partner_repr: f64,
    pub absolute_gain: f64,
    pub relative_gain: f64,
}

pub fn improvement_potential(net: &BenchmarkNetwork, repr: &[ReprResult]) -> Result<ImprovementSummary, NetworkError> {
    let scores = repr_map(repr);
    let score = |c: &str| scores.get(c).copied().ok_or_else(|| NetworkError::MissingRepr(c.to_string()));

    let mut per_country = Vec::new();
    for focal in &net.nodes {
        let mut best: Option<(&str, f64)> = None;
        for e in net.partners_of(focal) {
            let r = score(&e.partner)?;
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((&e.partner, r));
            }
        }
        if let Some((partner, best_repr)) = best {
            let own = score(focal)?;
            let gain = best_repr - own;
            per_country.push(CountryGain {
                country: focal.clone(),
                repr: own,
                best_partner: partner.to_string(),
                best_partner_repr: best_repr,
                absolute_gain: gain,
                relative_gain: gain / own.max(RELATIVE_GAIN_FLOOR),
            });
        }
    }

    let n = per_country.len();
    let mean = |f: fn(&CountryGain) -> f64| {
        if n == 0 {
            0.0
        } else {
            per_country.iter().map(f).sum::<f64>() / n as f64
        }
    };
    Ok(ImprovementSummary {
        countries_with_partners: n,
        mean_absolute_gain: mean(|g| g.absolute_gain),
        mean_relative_gain: mean(|g| g.relative_gain),
        per_country,
    })
}
