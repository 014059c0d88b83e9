//! Revealed comparative advantage, its log transform, and the Economic
//! Complexity Index.
//!
//! ECI is the standardized eigenvector of the country–country matrix
//! `M̃ = D_c⁻¹ M D_p⁻¹ Mᵀ` belonging to its second-largest eigenvalue, where
//! `M` is the binary membership `[R_cp ≥ 1]`. `M̃` is similar to the symmetric
//! positive semidefinite matrix `S = D_c^{-1/2} M D_p⁻¹ Mᵀ D_c^{-1/2}`, which is
//! what gets diagonalized; right eigenvectors of `M̃` are `D_c^{-1/2}` times
//! eigenvectors of `S`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use log::{info, warn};
use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::ingest::{normalize_country, TradeMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum ComplexityError {
    #[error("country {country} has zero total exports")]
    ZeroCountryTotal { country: String },
    #[error("product {product} has zero world exports")]
    ZeroProductTotal { product: String },
    #[error("RCA matrix has no strictly positive entry")]
    AllZeroMatrix,
    #[error("membership matrix is degenerate after pruning ({countries} countries, {products} products; need at least 3 countries)")]
    DegenerateMembership { countries: usize, products: usize },
    #[error("complexity eigenvector has zero variance (second eigenvalue {eigenvalue:e})")]
    ZeroVariance { eigenvalue: f64 },
    #[error("ECI file line {line}: {message}")]
    MalformedEciFile { line: u64, message: String },
}

/// Threshold for a revealed comparative advantage.
pub const RCA_THRESHOLD: f64 = 1.0;

const EIGEN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RcaMatrix {
    pub countries: Vec<String>,
    pub products: Vec<String>,
    pub values: DMatrix<f64>,
}

/// `R̃ = log10(R + δ)` with a single global `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRcaMatrix {
    pub countries: Vec<String>,
    pub products: Vec<String>,
    pub values: DMatrix<f64>,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EciVector {
    /// Countries that received a score, in input order.
    pub countries: Vec<String>,
    pub scores: Vec<f64>,
    /// Number of products with `R_cp ≥ 1`, aligned with `countries`.
    pub diversity: Vec<usize>,
    /// Countries removed because they have no revealed advantage in any product.
    pub pruned: Vec<String>,
    /// Second-largest eigenvalue of `M̃`.
    pub eigenvalue: f64,
}

impl EciVector {
    pub fn get(&self, country: &str) -> Option<f64> {
        self.countries
            .iter()
            .position(|c| c == country)
            .map(|i| self.scores[i])
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.countries
            .iter()
            .cloned()
            .zip(self.scores.iter().copied())
            .collect()
    }
}

pub fn compute_rca(trade: &TradeMatrix) -> Result<RcaMatrix, ComplexityError> {
    let x = &trade.values;
    let (n, p) = x.shape();
    let country_totals: Vec<f64> = (0..n).map(|c| x.row(c).sum()).collect();
    let product_totals: Vec<f64> = (0..p).map(|j| x.column(j).sum()).collect();
    let world: f64 = country_totals.iter().sum();

    if let Some(c) = country_totals.iter().position(|&t| t <= 0.0) {
        return Err(ComplexityError::ZeroCountryTotal {
            country: trade.countries[c].clone(),
        });
    }
    if let Some(j) = product_totals.iter().position(|&t| t <= 0.0) {
        return Err(ComplexityError::ZeroProductTotal {
            product: trade.products[j].clone(),
        });
    }

    let values = DMatrix::from_fn(n, p, |c, j| {
        (x[(c, j)] / country_totals[c]) / (product_totals[j] / world)
    });
    Ok(RcaMatrix {
        countries: trade.countries.clone(),
        products: trade.products.clone(),
        values,
    })
}

pub fn log_rca(rca: &RcaMatrix) -> Result<LogRcaMatrix, ComplexityError> {
    let delta = rca
        .values
        .iter()
        .copied()
        .filter(|&v| v > 0.0)
        .min_by(f64::total_cmp)
        .ok_or(ComplexityError::AllZeroMatrix)?;
    Ok(LogRcaMatrix {
        countries: rca.countries.clone(),
        products: rca.products.clone(),
        values: rca.values.map(|r| (r + delta).log10()),
        delta,
    })
}

/// Binary membership `M_cp = [R_cp ≥ 1]`.
pub fn membership(rca: &RcaMatrix) -> DMatrix<f64> {
    rca.values
        .map(|r| if r >= RCA_THRESHOLD { 1.0 } else { 0.0 })
}

pub fn compute_eci(rca: &RcaMatrix) -> Result<EciVector, ComplexityError> {
    eci_from_membership(&rca.countries, &membership(rca))
}

/// ECI from an explicit 0/1 membership matrix (rows aligned with `countries`).
pub fn eci_from_membership(
    countries: &[String],
    m: &DMatrix<f64>,
) -> Result<EciVector, ComplexityError> {
    assert_eq!(m.nrows(), countries.len(), "membership rows");

    let kept_rows: Vec<usize> = (0..m.nrows()).filter(|&c| m.row(c).sum() > 0.0).collect();
    let kept_cols: Vec<usize> = (0..m.ncols()).filter(|&j| m.column(j).sum() > 0.0).collect();
    let pruned: Vec<String> = (0..m.nrows())
        .filter(|c| !kept_rows.contains(c))
        .map(|c| countries[c].clone())
        .collect();
    if !pruned.is_empty() {
        info!("{} countries have no revealed advantage and receive no ECI", pruned.len());
    }
    if kept_rows.len() < 3 || kept_cols.is_empty() {
        return Err(ComplexityError::DegenerateMembership {
            countries: kept_rows.len(),
            products: kept_cols.len(),
        });
    }

    let m = m.select_rows(&kept_rows).select_columns(&kept_cols);
    let n = m.nrows();
    let diversity: Vec<f64> = (0..n).map(|c| m.row(c).sum()).collect();
    let ubiquity: Vec<f64> = (0..m.ncols()).map(|j| m.column(j).sum()).collect();

    // A = D_c^{-1/2} M D_p^{-1/2};  S = A Aᵀ
    let a = DMatrix::from_fn(n, m.ncols(), |c, j| {
        m[(c, j)] / (diversity[c] * ubiquity[j]).sqrt()
    });
    let s = &a * a.transpose();
    let eigen = SymmetricEigen::new(s);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eigen.eigenvalues[j].total_cmp(&eigen.eigenvalues[i]));
    let lambda2 = eigen.eigenvalues[order[1]];
    if lambda2 <= EIGEN_TOLERANCE {
        return Err(ComplexityError::ZeroVariance { eigenvalue: lambda2 });
    }
    if n > 2 && (lambda2 - eigen.eigenvalues[order[2]]).abs() <= EIGEN_TOLERANCE {
        warn!("second eigenvalue of the complexity matrix is degenerate; ECI is not unique");
    }

    let v = eigen.eigenvectors.column(order[1]);
    let raw: Vec<f64> = (0..n).map(|c| v[c] / diversity[c].sqrt()).collect();
    let mut scores = standardize(&raw).ok_or(ComplexityError::ZeroVariance { eigenvalue: lambda2 })?;

    let mean_k = diversity.iter().sum::<f64>() / n as f64;
    let cov: f64 = scores
        .iter()
        .zip(&diversity)
        .map(|(s, k)| s * (k - mean_k))
        .sum();
    let spread: f64 = diversity.iter().map(|k| (k - mean_k).abs()).sum();
    let flip = if cov.abs() > 1e-9 * spread.max(1.0) {
        cov < 0.0
    } else {
        // sign undetermined by diversity: first country by name with a clear score is positive
        warn!("ECI is uncorrelated with diversity; sign fixed by country code");
        let names: Vec<&String> = kept_rows.iter().map(|&c| &countries[c]).collect();
        (0..n)
            .filter(|&c| scores[c].abs() > 1e-6)
            .min_by_key(|&c| names[c])
            .is_some_and(|c| scores[c] < 0.0)
    };
    if flip {
        scores.iter_mut().for_each(|s| *s = -*s);
    }

    Ok(EciVector {
        countries: kept_rows.iter().map(|&c| countries[c].clone()).collect(),
        scores,
        diversity: diversity.iter().map(|&k| k as usize).collect(),
        pruned,
        eigenvalue: lambda2,
    })
}

/// Mean 0, population standard deviation 1. `None` for a (numerically) constant vector.
fn standardize(x: &[f64]) -> Option<Vec<f64>> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let scale = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let sd = var.sqrt();
    if sd.is_nan() || sd <= EIGEN_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
        return None;
    }
    let mut z: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();
    // one refinement pass removes residual round-off in mean and scale
    let m2 = z.iter().sum::<f64>() / n;
    let s2 = (z.iter().map(|v| (v - m2).powi(2)).sum::<f64>() / n).sqrt();
    z.iter_mut().for_each(|v| *v = (*v - m2) / s2);
    Some(z)
}

/// Reads an external `country,eci` file.
pub fn load_eci<R: Read>(source: R) -> Result<BTreeMap<String, f64>, ComplexityError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let bad = |line: u64, message: String| ComplexityError::MalformedEciFile { line, message };
    let headers = reader.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| bad(1, format!("missing column `{name}`")))
    };
    let (ci, ei) = (find("country")?, find("eci")?);
    let mut out = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let country = normalize_country(rec.get(ci).unwrap_or(""));
        let raw = rec.get(ei).unwrap_or("");
        let eci: f64 = raw
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| bad(line, format!("cannot parse `{raw}` as a finite number")))?;
        if country.is_empty() {
            return Err(bad(line, "empty country code".into()));
        }
        if out.insert(country.clone(), eci).is_some() {
            return Err(bad(line, format!("duplicate country {country}")));
        }
    }
    Ok(out)
}

/// Long-form `country,product,rca` audit file.
pub fn write_rca<W: Write>(rca: &RcaMatrix, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["country", "product", "rca"])?;
    for (i, c) in rca.countries.iter().enumerate() {
        for (j, p) in rca.products.iter().enumerate() {
            w.write_record([c.as_str(), p.as_str(), &rca.values[(i, j)].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_eci<W: Write>(eci: &EciVector, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["country", "eci", "diversity"])?;
    for i in 0..eci.countries.len() {
        w.write_record([
            eci.countries[i].as_str(),
            &eci.scores[i].to_string(),
            &eci.diversity[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
