//! Loading and alignment of the three input tables.
//!
//! All inputs are UTF-8 CSV with a header row. Column lookup is by
//! (trimmed, case-insensitive) header name, so column order does not matter.
//! Country codes are trimmed and upper-cased; product codes are trimmed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;
use std::str::FromStr;

use log::{info, warn};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{source_name}: line {line}: {message}")]
    MalformedRow {
        source_name: String,
        line: u64,
        message: String,
    },
    #[error("{source_name}: missing required column `{column}`")]
    MissingColumn { source_name: String, column: String },
    #[error("line {line}: negative export value {value} for ({country}, {product})")]
    NegativeValue {
        line: u64,
        country: String,
        product: String,
        value: f64,
    },
    #[error("export table is empty")]
    EmptyTable,
    #[error("export table covers {countries} countries and {products} products; at least 2 of each are required")]
    InsufficientCoverage { countries: usize, products: usize },
    #[error("line {line}: non-positive indicator for {country} (co2_pc = {co2_pc}, ef_pc = {ef_pc})")]
    NonPositiveIndicator {
        line: u64,
        country: String,
        co2_pc: f64,
        ef_pc: f64,
    },
    #[error("{source_name}: duplicate country {country} at line {line}")]
    DuplicateCountry {
        source_name: String,
        country: String,
        line: u64,
    },
    #[error("line {line}: unknown income group label `{label}`")]
    UnknownGroupLabel { line: u64, label: String },
    #[error("line {line}: unknown product class label `{label}`")]
    UnknownClassLabel { line: u64, label: String },
    #[error("analysis panel has {countries} countries after intersecting exports and environment; at least 2 are required")]
    EmptyPanel { countries: usize },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

pub type Result<T> = std::result::Result<T, IngestError>;

/// Normalizes a country code: trim and upper-case.
pub fn normalize_country(code: &str) -> String {
    code.trim().to_uppercase()
}

/// A country excluded from the analysis, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DropEntry {
    pub country: String,
    pub reason: String,
}

impl DropEntry {
    pub fn new(country: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            country: country.into(),
            reason: reason.into(),
        }
    }
}

/// Minimal header-indexed CSV reader shared by the loaders.
struct Table {
    name: String,
    columns: Vec<usize>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn read<R: Read>(name: &str, source: R, required: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(source);
        let malformed = |line: u64, e: csv::Error| IngestError::MalformedRow {
            source_name: name.to_string(),
            line,
            message: e.to_string(),
        };
        let headers = reader.headers().map_err(|e| malformed(1, e))?.clone();
        let mut columns = Vec::with_capacity(required.len());
        for col in required {
            let idx = headers
                .iter()
                .position(|h| h.trim().trim_start_matches('\u{feff}').eq_ignore_ascii_case(col))
                .ok_or_else(|| IngestError::MissingColumn {
                    source_name: name.to_string(),
                    column: col.to_string(),
                })?;
            columns.push(idx);
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                malformed(line, e)
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            rows.push((line, record));
        }
        Ok(Self {
            name: name.to_string(),
            columns,
            rows,
        })
    }

    fn field<'a>(&self, record: &'a csv::StringRecord, line: u64, col: usize) -> Result<&'a str> {
        record
            .get(self.columns[col])
            .ok_or_else(|| IngestError::MalformedRow {
                source_name: self.name.clone(),
                line,
                message: format!("expected at least {} fields", self.columns[col] + 1),
            })
    }

    fn number(&self, record: &csv::StringRecord, line: u64, col: usize) -> Result<f64> {
        let raw = self.field(record, line, col)?;
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(IngestError::MalformedRow {
                source_name: self.name.clone(),
                line,
                message: format!("cannot parse `{raw}` as a finite number"),
            }),
        }
    }

    fn nonempty(&self, record: &csv::StringRecord, line: u64, col: usize) -> Result<String> {
        let raw = self.field(record, line, col)?;
        if raw.is_empty() {
            return Err(IngestError::MalformedRow {
                source_name: self.name.clone(),
                line,
                message: "empty identifier".to_string(),
            });
        }
        Ok(raw.to_string())
    }
}

// ---------------------------------------------------------------------------
// Exports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub country: String,
    pub product: String,
    pub value: f64,
}

/// Validated export records, unique per (country, product) and sorted by that key.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportTable {
    records: Vec<ExportRecord>,
    duplicates_merged: usize,
}

impl ExportTable {
    /// Validates and aggregates raw records. Duplicates are summed in sorted
    /// value order so the result does not depend on input row order.
    pub fn from_records<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = ExportRecord>,
    {
        let mut grouped: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
        for (i, rec) in records.into_iter().enumerate() {
            if rec.value < 0.0 || rec.value.is_nan() {
                return Err(IngestError::NegativeValue {
                    line: i as u64 + 2,
                    country: rec.country,
                    product: rec.product,
                    value: rec.value,
                });
            }
            grouped
                .entry((normalize_country(&rec.country), rec.product.trim().to_string()))
                .or_default()
                .push(rec.value);
        }
        Self::from_grouped(grouped)
    }

    fn from_grouped(grouped: BTreeMap<(String, String), Vec<f64>>) -> Result<Self> {
        if grouped.is_empty() {
            return Err(IngestError::EmptyTable);
        }
        let mut duplicates_merged = 0;
        let records: Vec<ExportRecord> = grouped
            .into_iter()
            .map(|((country, product), mut values)| {
                if values.len() > 1 {
                    warn!(
                        "aggregated {} rows for ({country}, {product}) by summation",
                        values.len()
                    );
                    duplicates_merged += values.len() - 1;
                    values.sort_by(f64::total_cmp);
                }
                ExportRecord {
                    country,
                    product,
                    value: values.iter().sum(),
                }
            })
            .collect();
        let table = Self {
            records,
            duplicates_merged,
        };
        let (countries, products) = (table.countries().len(), table.products().len());
        if countries < 2 || products < 2 {
            return Err(IngestError::InsufficientCoverage {
                countries,
                products,
            });
        }
        Ok(table)
    }

    pub fn records(&self) -> &[ExportRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of input rows folded into an existing (country, product) record.
    pub fn duplicates_merged(&self) -> usize {
        self.duplicates_merged
    }

    pub fn countries(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.records.iter().map(|r| r.country.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    pub fn products(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.records.iter().map(|r| r.product.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Dense country × product matrix over all countries and products in the table.
    pub fn to_matrix(&self) -> TradeMatrix {
        let countries = self.countries();
        let products = self.products();
        TradeMatrix::from_records(&countries, &products, &self.records)
    }
}

/// Loads `country,product,value` CSV.
pub fn load_exports<R: Read>(source: R) -> Result<ExportTable> {
    let table = Table::read("exports", source, &["country", "product", "value"])?;
    let mut grouped: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for (line, record) in &table.rows {
        let country = normalize_country(&table.nonempty(record, *line, 0)?);
        let product = table.nonempty(record, *line, 1)?;
        let value = table.number(record, *line, 2)?;
        if value < 0.0 {
            return Err(IngestError::NegativeValue {
                line: *line,
                country,
                product,
                value,
            });
        }
        grouped.entry((country, product)).or_default().push(value);
    }
    ExportTable::from_grouped(grouped)
}

// ---------------------------------------------------------------------------
// Environment

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvRecord {
    /// CO₂ emissions, metric tons per capita.
    pub co2_pc: f64,
    /// Ecological footprint of consumption, global hectares per capita.
    pub ef_pc: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnvTable {
    records: BTreeMap<String, EnvRecord>,
    rejected: Vec<DropEntry>,
}

impl EnvTable {
    pub fn get(&self, country: &str) -> Option<&EnvRecord> {
        self.records.get(country)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn countries(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &EnvRecord)> {
        self.records.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Countries removed at load time because an indicator was not strictly positive.
    pub fn rejected(&self) -> &[DropEntry] {
        &self.rejected
    }

    pub fn from_records<I, S>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, EnvRecord)>,
        S: AsRef<str>,
    {
        let mut out = BTreeMap::new();
        for (i, (country, rec)) in records.into_iter().enumerate() {
            let line = i as u64 + 2;
            let country = normalize_country(country.as_ref());
            if !(rec.co2_pc > 0.0 && rec.ef_pc > 0.0) {
                return Err(IngestError::NonPositiveIndicator {
                    line,
                    country,
                    co2_pc: rec.co2_pc,
                    ef_pc: rec.ef_pc,
                });
            }
            if out.insert(country.clone(), rec).is_some() {
                return Err(IngestError::DuplicateCountry {
                    source_name: "environment".to_string(),
                    country,
                    line,
                });
            }
        }
        Ok(Self {
            records: out,
            rejected: Vec::new(),
        })
    }
}

/// What to do with a country whose CO₂ or footprint value is not strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnvPolicy {
    /// Fail with [`IngestError::NonPositiveIndicator`].
    #[default]
    Strict,
    /// Drop the country and record it in [`EnvTable::rejected`].
    DropInvalid,
}

/// Loads `country,co2_pc,ef_pc` CSV, rejecting non-positive indicators.
pub fn load_environment<R: Read>(source: R) -> Result<EnvTable> {
    load_environment_with(source, EnvPolicy::Strict)
}

pub fn load_environment_with<R: Read>(source: R, policy: EnvPolicy) -> Result<EnvTable> {
    let table = Table::read("environment", source, &["country", "co2_pc", "ef_pc"])?;
    let mut records = BTreeMap::new();
    let mut rejected = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, record) in &table.rows {
        let country = normalize_country(&table.nonempty(record, *line, 0)?);
        let co2_pc = table.number(record, *line, 1)?;
        let ef_pc = table.number(record, *line, 2)?;
        if !seen.insert(country.clone()) {
            return Err(IngestError::DuplicateCountry {
                source_name: table.name.clone(),
                country,
                line: *line,
            });
        }
        if !(co2_pc > 0.0 && ef_pc > 0.0) {
            match policy {
                EnvPolicy::Strict => {
                    return Err(IngestError::NonPositiveIndicator {
                        line: *line,
                        country,
                        co2_pc,
                        ef_pc,
                    })
                }
                EnvPolicy::DropInvalid => {
                    warn!("dropping {country}: non-positive environmental indicator");
                    rejected.push(DropEntry::new(
                        country,
                        "non-positive environmental indicator",
                    ));
                    continue;
                }
            }
        }
        records.insert(country, EnvRecord { co2_pc, ef_pc });
    }
    Ok(EnvTable { records, rejected })
}

// ---------------------------------------------------------------------------
// Metadata

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncomeGroup {
    Low,
    LowerMiddle,
    UpperMiddle,
    High,
}

impl IncomeGroup {
    pub const ALL: [IncomeGroup; 4] = [
        IncomeGroup::Low,
        IncomeGroup::LowerMiddle,
        IncomeGroup::UpperMiddle,
        IncomeGroup::High,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IncomeGroup::Low => "low",
            IncomeGroup::LowerMiddle => "lower-middle",
            IncomeGroup::UpperMiddle => "upper-middle",
            IncomeGroup::High => "high",
        }
    }
}

impl fmt::Display for IncomeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accepts the short labels (`lower-middle`) as well as the World Bank
/// spelling (`Lower middle income`).
impl FromStr for IncomeGroup {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        let norm = s
            .trim()
            .to_lowercase()
            .replace(['-', '_'], " ")
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        let norm = norm.strip_suffix(" income").unwrap_or(&norm);
        match norm {
            "low" => Ok(IncomeGroup::Low),
            "lower middle" => Ok(IncomeGroup::LowerMiddle),
            "upper middle" => Ok(IncomeGroup::UpperMiddle),
            "high" => Ok(IncomeGroup::High),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProductClass {
    Primary,
    NonPrimary,
}

impl ProductClass {
    /// SITC sections 5–8 (chemicals, manufactured goods, machinery, misc.
    /// manufactures) are non-primary; everything else is primary.
    pub fn from_sitc_code(code: &str) -> Self {
        match code.trim().chars().next() {
            Some('5'..='8') => ProductClass::NonPrimary,
            _ => ProductClass::Primary,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProductClass::Primary => "primary",
            ProductClass::NonPrimary => "non-primary",
        }
    }
}

impl FromStr for ProductClass {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        let norm: String = s
            .trim()
            .to_lowercase()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect();
        match norm.as_str() {
            "primary" => Ok(ProductClass::Primary),
            "nonprimary" => Ok(ProductClass::NonPrimary),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetadataTable {
    pub income_groups: BTreeMap<String, IncomeGroup>,
    pub product_classes: BTreeMap<String, ProductClass>,
}

impl MetadataTable {
    /// Classification derived from SITC section prefixes for the given products.
    pub fn default_classification<'a, I>(products: I) -> BTreeMap<String, ProductClass>
    where
        I: IntoIterator<Item = &'a str>,
    {
        products
            .into_iter()
            .map(|p| (p.to_string(), ProductClass::from_sitc_code(p)))
            .collect()
    }

    pub fn income_group(&self, country: &str) -> Option<IncomeGroup> {
        self.income_groups.get(country).copied()
    }
}

/// Loads `country,group` CSV.
pub fn load_income_groups<R: Read>(source: R) -> Result<BTreeMap<String, IncomeGroup>> {
    let table = Table::read("income groups", source, &["country", "group"])?;
    let mut out = BTreeMap::new();
    for (line, record) in &table.rows {
        let country = normalize_country(&table.nonempty(record, *line, 0)?);
        let label = table.field(record, *line, 1)?;
        let group = label
            .parse::<IncomeGroup>()
            .map_err(|_| IngestError::UnknownGroupLabel {
                line: *line,
                label: label.to_string(),
            })?;
        if out.insert(country.clone(), group).is_some() {
            return Err(IngestError::DuplicateCountry {
                source_name: table.name.clone(),
                country,
                line: *line,
            });
        }
    }
    Ok(out)
}

/// Loads `product,class` CSV.
pub fn load_product_classes<R: Read>(source: R) -> Result<BTreeMap<String, ProductClass>> {
    let table = Table::read("product classes", source, &["product", "class"])?;
    let mut out = BTreeMap::new();
    for (line, record) in &table.rows {
        let product = table.nonempty(record, *line, 0)?;
        let label = table.field(record, *line, 1)?;
        let class = label
            .parse::<ProductClass>()
            .map_err(|_| IngestError::UnknownClassLabel {
                line: *line,
                label: label.to_string(),
            })?;
        out.insert(product, class);
    }
    Ok(out)
}

pub fn load_metadata<R1: Read, R2: Read>(income: R1, classes: R2) -> Result<MetadataTable> {
    Ok(MetadataTable {
        income_groups: load_income_groups(income)?,
        product_classes: load_product_classes(classes)?,
    })
}

// ---------------------------------------------------------------------------
// Trade matrix and panel

/// Dense country × product export matrix with row and column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeMatrix {
    pub countries: Vec<String>,
    pub products: Vec<String>,
    pub values: DMatrix<f64>,
}

impl TradeMatrix {
    pub fn new(countries: Vec<String>, products: Vec<String>, values: DMatrix<f64>) -> Self {
        assert_eq!(values.nrows(), countries.len(), "row labels");
        assert_eq!(values.ncols(), products.len(), "column labels");
        Self {
            countries,
            products,
            values,
        }
    }

    fn from_records(countries: &[String], products: &[String], records: &[ExportRecord]) -> Self {
        let row: BTreeMap<&str, usize> = countries
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let col: BTreeMap<&str, usize> = products
            .iter()
            .enumerate()
            .map(|(i, p)| (p.as_str(), i))
            .collect();
        let mut values = DMatrix::zeros(countries.len(), products.len());
        for rec in records {
            if let (Some(&i), Some(&j)) = (row.get(rec.country.as_str()), col.get(rec.product.as_str())) {
                values[(i, j)] = rec.value;
            }
        }
        Self::new(countries.to_vec(), products.to_vec(), values)
    }

    pub fn n_countries(&self) -> usize {
        self.countries.len()
    }

    pub fn n_products(&self) -> usize {
        self.products.len()
    }
}

/// Inputs aligned over the intersection of export and environment countries.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisPanel {
    /// Lexicographically sorted country codes; row order of every field below.
    pub countries: Vec<String>,
    pub trade: TradeMatrix,
    pub co2_pc: Vec<f64>,
    pub ef_pc: Vec<f64>,
    pub income: Vec<Option<IncomeGroup>>,
    pub dropped: Vec<DropEntry>,
}

impl AnalysisPanel {
    pub fn len(&self) -> usize {
        self.countries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.countries.is_empty()
    }

    pub fn index_of(&self, country: &str) -> Option<usize> {
        self.countries.binary_search_by(|c| c.as_str().cmp(country)).ok()
    }
}

/// Intersects the export and environment country sets. Products with no
/// exports among the retained countries are removed.
pub fn build_panel(exports: &ExportTable, env: &EnvTable, meta: &MetadataTable) -> Result<AnalysisPanel> {
    let export_countries: BTreeSet<String> = exports.countries().into_iter().collect();
    let env_countries: BTreeSet<String> = env.countries().map(str::to_string).collect();
    let rejected: BTreeMap<&str, &str> = env
        .rejected()
        .iter()
        .map(|d| (d.country.as_str(), d.reason.as_str()))
        .collect();

    let mut dropped = Vec::new();
    for c in export_countries.difference(&env_countries) {
        let reason = rejected
            .get(c.as_str())
            .copied()
            .unwrap_or("missing environmental indicators");
        dropped.push(DropEntry::new(c.clone(), reason));
    }
    for c in env_countries.difference(&export_countries) {
        dropped.push(DropEntry::new(c.clone(), "missing export data"));
    }
    dropped.sort();

    let countries: Vec<String> = export_countries
        .intersection(&env_countries)
        .cloned()
        .collect();
    if countries.len() < 2 {
        return Err(IngestError::EmptyPanel {
            countries: countries.len(),
        });
    }

    let keep: BTreeSet<&str> = countries.iter().map(String::as_str).collect();
    let mut totals: BTreeMap<&str, f64> = BTreeMap::new();
    for rec in exports.records() {
        if keep.contains(rec.country.as_str()) {
            *totals.entry(rec.product.as_str()).or_default() += rec.value;
        }
    }
    let products: Vec<String> = totals
        .iter()
        .filter(|(_, &t)| t > 0.0)
        .map(|(p, _)| p.to_string())
        .collect();
    let removed = totals.len() - products.len();
    if removed > 0 {
        info!("removed {removed} products with zero exports across the panel");
    }

    let trade = TradeMatrix::from_records(&countries, &products, exports.records());
    let mut co2_pc = Vec::with_capacity(countries.len());
    let mut ef_pc = Vec::with_capacity(countries.len());
    for c in &countries {
        let rec = env.get(c).expect("country in intersection");
        co2_pc.push(rec.co2_pc);
        ef_pc.push(rec.ef_pc);
    }
    let income = countries.iter().map(|c| meta.income_group(c)).collect();
    Ok(AnalysisPanel {
        countries,
        trade,
        co2_pc,
        ef_pc,
        income,
        dropped,
    })
}

// ---------------------------------------------------------------------------
// Panel emission

pub const PANEL_EXPORTS_FILE: &str = "panel_exports.csv";
pub const PANEL_ENVIRONMENT_FILE: &str = "panel_environment.csv";
pub const PANEL_INCOME_FILE: &str = "panel_income.csv";
pub const DROP_REPORT_FILE: &str = "drop_report.csv";

/// Long-form exports (nonzero cells only), full-precision floats.
pub fn write_panel_exports<W: Write>(panel: &AnalysisPanel, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["country", "product", "value"])?;
    let t = &panel.trade;
    for (i, c) in t.countries.iter().enumerate() {
        for (j, p) in t.products.iter().enumerate() {
            let v = t.values[(i, j)];
            if v != 0.0 {
                w.write_record([c.as_str(), p.as_str(), &v.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_panel_environment<W: Write>(panel: &AnalysisPanel, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["country", "co2_pc", "ef_pc"])?;
    for (i, c) in panel.countries.iter().enumerate() {
        w.write_record([c.as_str(), &panel.co2_pc[i].to_string(), &panel.ef_pc[i].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_panel_income<W: Write>(panel: &AnalysisPanel, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["country", "group"])?;
    for (c, g) in panel.countries.iter().zip(&panel.income) {
        if let Some(g) = g {
            w.write_record([c.as_str(), g.as_str()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_drop_report<W: Write>(entries: &[DropEntry], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["country", "reason"])?;
    for d in entries {
        w.write_record([d.country.as_str(), d.reason.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the four panel files into `dir`.
pub fn write_panel(panel: &AnalysisPanel, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let create = |name: &str| fs::File::create(dir.join(name));
    write_panel_exports(panel, create(PANEL_EXPORTS_FILE)?)?;
    write_panel_environment(panel, create(PANEL_ENVIRONMENT_FILE)?)?;
    write_panel_income(panel, create(PANEL_INCOME_FILE)?)?;
    write_drop_report(&panel.dropped, create(DROP_REPORT_FILE)?)?;
    Ok(())
}
