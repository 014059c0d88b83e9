//! Export-similarity vectors and their Pearson correlation matrix.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::complexity::LogRcaMatrix;
use crate::ingest::{DropEntry, ProductClass};

#[derive(Debug, Error, PartialEq)]
pub enum SimilarityError {
    #[error("no product is classified non-primary")]
    EmptySelection,
    #[error("only {0} non-primary product(s); vectors need at least 2 entries")]
    TooFewProducts(usize),
    #[error("product {0} has no classification")]
    UnclassifiedProduct(String),
    #[error("{0} countries left for the similarity stage; at least 2 are required")]
    TooFewCountries(usize),
    #[error("vector for {0} has zero variance")]
    ZeroVariance(String),
}

/// Log-RCA rows restricted to non-primary products.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityVectors {
    pub countries: Vec<String>,
    pub products: Vec<String>,
    /// countries × products
    pub values: DMatrix<f64>,
    /// Countries excluded because their filtered vector is constant.
    pub dropped: Vec<DropEntry>,
}

fn centered_sum_of_squares(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (sum, n) = v.clone().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    let mean = sum / n as f64;
    (mean, v.map(|x| (x - mean).powi(2)).sum())
}

fn is_constant(row: &[f64]) -> bool {
    let scale = row.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let (_, ss) = centered_sum_of_squares(row.iter().copied());
    ss <= (1e-12 * scale.max(1e-300)).powi(2) * row.len() as f64
}

pub fn build_similarity_vectors(
    logrca: &LogRcaMatrix,
    classes: &BTreeMap<String, ProductClass>,
) -> Result<SimilarityVectors, SimilarityError> {
    let mut cols = Vec::new();
    for (j, p) in logrca.products.iter().enumerate() {
        match classes.get(p) {
            Some(ProductClass::NonPrimary) => cols.push(j),
            Some(ProductClass::Primary) => {}
            None => return Err(SimilarityError::UnclassifiedProduct(p.clone())),
        }
    }
    if cols.is_empty() {
        return Err(SimilarityError::EmptySelection);
    }
    if cols.len() < 2 {
        return Err(SimilarityError::TooFewProducts(cols.len()));
    }

    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for (i, c) in logrca.countries.iter().enumerate() {
        let row: Vec<f64> = cols.iter().map(|&j| logrca.values[(i, j)]).collect();
        if is_constant(&row) {
            log::warn!("{c} has a constant non-primary log-RCA vector; excluded from similarity");
            dropped.push(DropEntry::new(c.clone(), "constant non-primary export vector"));
        } else {
            keep.push(i);
        }
    }
    if keep.len() < 2 {
        return Err(SimilarityError::TooFewCountries(keep.len()));
    }

    Ok(SimilarityVectors {
        countries: keep.iter().map(|&i| logrca.countries[i].clone()).collect(),
        products: cols.iter().map(|&j| logrca.products[j].clone()).collect(),
        values: logrca.values.select_rows(&keep).select_columns(&cols),
        dropped,
    })
}

/// Symmetric country × country Pearson correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub countries: Vec<String>,
    pub values: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// Builds a matrix from explicit pairs; unspecified off-diagonal entries are 0.
    pub fn from_pairs<'a, I>(countries: Vec<String>, pairs: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str, f64)>,
    {
        let idx: BTreeMap<&str, usize> = countries.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let n = countries.len();
        let mut values = DMatrix::identity(n, n);
        for (a, b, rho) in pairs {
            let (i, j) = (idx[a], idx[b]);
            values[(i, j)] = rho;
            values[(j, i)] = rho;
        }
        Self { countries, values }
    }

    pub fn len(&self) -> usize {
        self.countries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.countries.is_empty()
    }

    pub fn index_of(&self, country: &str) -> Option<usize> {
        self.countries.iter().position(|c| c == country)
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.values[(self.index_of(a)?, self.index_of(b)?)])
    }

    /// Sub-matrix over the countries accepted by `keep`, order preserved.
    pub fn restrict(&self, mut keep: impl FnMut(&str) -> bool) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(&self.countries[i])).collect();
        Self {
            countries: idx.iter().map(|&i| self.countries[i].clone()).collect(),
            values: self.values.select_rows(&idx).select_columns(&idx),
        }
    }
}

/// Pearson correlation with explicit mean subtraction.
pub fn correlation_matrix(vectors: &SimilarityVectors) -> Result<CorrelationMatrix, SimilarityError> {
    let n = vectors.countries.len();
    if n < 2 {
        return Err(SimilarityError::TooFewCountries(n));
    }
    let p = vectors.values.ncols();
    let mut centered = DMatrix::zeros(n, p);
    let mut norms = vec![0.0; n];
    for i in 0..n {
        let row: Vec<f64> = vectors.values.row(i).iter().copied().collect();
        if is_constant(&row) {
            return Err(SimilarityError::ZeroVariance(vectors.countries[i].clone()));
        }
        let (mean, ss) = centered_sum_of_squares(row.iter().copied());
        for (j, v) in row.iter().enumerate() {
            centered[(i, j)] = v - mean;
        }
        norms[i] = ss.sqrt();
    }

    let mut values = DMatrix::identity(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let dot: f64 = (0..p).map(|k| centered[(i, k)] * centered[(j, k)]).sum();
            let rho = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            values[(i, j)] = rho;
            values[(j, i)] = rho;
        }
    }
    Ok(CorrelationMatrix {
        countries: vectors.countries.clone(),
        values,
    })
}

/// Dense labeled matrix: header `country,<c1>,<c2>,...`.
pub fn write_correlation_dense<W: Write>(corr: &CorrelationMatrix, out: W, precision: Option<usize>) -> csv::Result<()> {
    let fmt = |v: f64| match precision {
        Some(p) => format!("{v:.p$}"),
        None => v.to_string(),
    };
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["country".to_string()];
    header.extend(corr.countries.iter().cloned());
    w.write_record(&header)?;
    for (i, c) in corr.countries.iter().enumerate() {
        let mut rec = vec![c.clone()];
        rec.extend((0..corr.len()).map(|j| fmt(corr.values[(i, j)])));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Long-form `country_a,country_b,rho` for every unordered pair.
pub fn write_correlation_long<W: Write>(corr: &CorrelationMatrix, out: W, precision: Option<usize>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["country_a", "country_b", "rho"])?;
    for i in 0..corr.len() {
        for j in i + 1..corr.len() {
            let v = corr.values[(i, j)];
            let s = match precision {
                Some(p) => format!("{v:.p$}"),
                None => v.to_string(),
            };
            w.write_record([corr.countries[i].as_str(), corr.countries[j].as_str(), &s])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logrca(rows: &[&[f64]], products: &[&str]) -> LogRcaMatrix {
        let n = rows.len();
        let p = products.len();
        LogRcaMatrix {
            countries: (0..n).map(|i| format!("C{i}")).collect(),
            products: products.iter().map(|s| s.to_string()).collect(),
            values: DMatrix::from_fn(n, p, |i, j| rows[i][j]),
            delta: 0.1,
        }
    }

    fn all_as(l: &LogRcaMatrix, c: ProductClass) -> BTreeMap<String, ProductClass> {
        l.products.iter().map(|p| (p.clone(), c)).collect()
    }

    fn classes(spec: &[(&str, ProductClass)]) -> BTreeMap<String, ProductClass> {
        spec.iter().map(|(p, c)| (p.to_string(), *c)).collect()
    }

    #[test]
    fn identity_filter_when_all_non_primary() {
        let l = logrca(&[&[0.1, 0.5, 0.2], &[0.3, 0.1, 0.9]], &["5", "6", "7"]);
        let cls = all_as(&l, ProductClass::NonPrimary);
        let v = build_similarity_vectors(&l, &cls).unwrap();
        assert_eq!(v.values, l.values);
    }

    #[test]
    fn all_primary_is_empty_selection() {
        let l = logrca(&[&[0.1, 0.5], &[0.3, 0.1]], &["0", "1"]);
        let cls = all_as(&l, ProductClass::Primary);
        assert_eq!(build_similarity_vectors(&l, &cls).unwrap_err(), SimilarityError::EmptySelection);
    }

    #[test]
    fn unclassified_product_rejected() {
        let l = logrca(&[&[0.1, 0.5], &[0.3, 0.1]], &["5", "6"]);
        let cls = classes(&[("5", ProductClass::NonPrimary)]);
        assert_eq!(
            build_similarity_vectors(&l, &cls).unwrap_err(),
            SimilarityError::UnclassifiedProduct("6".into())
        );
    }

    #[test]
    fn constant_vector_dropped_with_report() {
        let l = logrca(
            &[&[0.1, 0.5, 0.7, 9.0], &[0.3, 0.3, 0.3, 1.0], &[0.2, 0.1, 0.9, 2.0]],
            &["5", "6", "7", "0"],
        );
        let cls = classes(&[
            ("5", ProductClass::NonPrimary),
            ("6", ProductClass::NonPrimary),
            ("7", ProductClass::NonPrimary),
            ("0", ProductClass::Primary),
        ]);
        let v = build_similarity_vectors(&l, &cls).unwrap();
        assert_eq!(v.countries, vec!["C0", "C2"]);
        assert_eq!(v.products.len(), 3);
        assert_eq!(v.dropped[0].country, "C1");
    }

    #[test]
    fn self_and_anti_correlation() {
        let l = logrca(&[&[0.1, 0.5, 0.2, 0.8], &[1.9, 1.5, 1.8, 1.2]], &["5", "6", "7", "8"]);
        let cls = all_as(&l, ProductClass::NonPrimary);
        let c = correlation_matrix(&build_similarity_vectors(&l, &cls).unwrap()).unwrap();
        assert_eq!(c.values[(0, 0)], 1.0);
        assert!((c.values[(0, 1)] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_defensive() {
        let v = SimilarityVectors {
            countries: vec!["A".into(), "B".into()],
            products: vec!["1".into(), "2".into()],
            values: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            dropped: vec![],
        };
        assert_eq!(correlation_matrix(&v).unwrap_err(), SimilarityError::ZeroVariance("A".into()));
    }

    #[test]
    fn long_form_lists_each_pair_once() {
        let c = CorrelationMatrix::from_pairs(
            vec!["A".into(), "B".into(), "C".into()],
            [("A", "B", 0.5), ("B", "C", -0.25)],
        );
        let mut buf = Vec::new();
        write_correlation_long(&c, &mut buf, Some(4)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "country_a,country_b,rho\nA,B,0.5000\nA,C,0.0000\nB,C,-0.2500\n");
    }
}
