//! Reference country table and a seeded synthetic export generator.
//!
//! The generator ties each country's export breadth to its reference ECI so
//! that computed complexity and similarity structure are plausible. It is a
//! stand-in for real trade data, not a model of it.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::{ExportRecord, IncomeGroup, ProductClass};

/// One row of the reference table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub country: String,
    pub name: String,
    pub eci: f64,
    pub co2_pc: f64,
    pub ef_pc: f64,
    pub repr: f64,
    pub rank: usize,
    pub income_group: String,
}

impl ReferenceRow {
    pub fn income(&self) -> Option<IncomeGroup> {
        self.income_group.parse().ok()
    }
}

pub fn load_reference<R: Read>(source: R) -> csv::Result<Vec<ReferenceRow>> {
    csv::Reader::from_reader(source).deserialize().collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureSpec {
    pub seed: u64,
    pub primary_products: usize,
    pub non_primary_products: usize,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self { seed: 20190601, primary_products: 342, non_primary_products: 432 }
    }
}

/// 4-digit SITC-style codes: primary in sections 0–4 and 9, non-primary in 5–8.
pub fn product_codes(spec: &FixtureSpec) -> Vec<(String, ProductClass)> {
    fn spread(sections: &[u32], n: usize, class: ProductClass, out: &mut Vec<(String, ProductClass)>) {
        for k in 0..n {
            let s = sections[k % sections.len()];
            let item = k / sections.len();
            out.push((format!("{s}{item:03}"), class));
        }
    }
    let mut out = Vec::with_capacity(spec.primary_products + spec.non_primary_products);
    spread(&[0, 1, 2, 3, 4, 9], spec.primary_products, ProductClass::Primary, &mut out);
    spread(&[5, 6, 7, 8], spec.non_primary_products, ProductClass::NonPrimary, &mut out);
    out.sort();
    out
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Nonzero export records for `(country, capability)` pairs.
pub fn synthetic_exports(countries: &[(String, f64)], spec: &FixtureSpec) -> Vec<ExportRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let products = product_codes(spec);

    let complexity: Vec<f64> = products
        .iter()
        .map(|(_, class)| {
            let centre = match class {
                ProductClass::Primary => -0.7,
                ProductClass::NonPrimary => 0.5,
            };
            centre + 0.8 * std_normal.sample(&mut rng)
        })
        .collect();
    let scale: Vec<f64> = countries.iter().map(|_| (1.5 * std_normal.sample(&mut rng)).exp()).collect();

    let mut records = Vec::new();
    for (ci, (country, capability)) in countries.iter().enumerate() {
        for (pi, (product, _)) in products.iter().enumerate() {
            let p = sigmoid(2.5 * (capability - complexity[pi]) + 0.3);
            if rng.gen::<f64>() >= p {
                continue;
            }
            let value = (scale[ci] * (3.0 + 1.5 * std_normal.sample(&mut rng)).exp()).round().max(1.0);
            records.push(ExportRecord { country: country.clone(), product: product.clone(), value });
        }
    }
    records
}

pub fn write_exports<W: Write>(records: &[ExportRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["country", "product", "value"])?;
    for r in records {
        w.write_record([r.country.as_str(), r.product.as_str(), &r.value.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
