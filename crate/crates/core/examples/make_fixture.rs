//! Regenerates the files under `fixtures/reference/` from `reference.csv`.
//!
//! cargo run -p ecorank --example make_fixture

use std::fs::File;
use std::path::Path;

use ecorank::fixture::{self, FixtureSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/reference");
    let rows = fixture::load_reference(File::open(dir.join("reference.csv"))?)?;

    let caps: Vec<(String, f64)> = rows.iter().map(|r| (r.country.clone(), r.eci)).collect();
    let spec = FixtureSpec::default();
    fixture::write_exports(&fixture::synthetic_exports(&caps, &spec), File::create(dir.join("exports.csv"))?)?;

    let mut env = csv::Writer::from_path(dir.join("environment.csv"))?;
    env.write_record(["country", "co2_pc", "ef_pc"])?;
    let mut eci = csv::Writer::from_path(dir.join("eci.csv"))?;
    eci.write_record(["country", "eci"])?;
    let mut income = csv::Writer::from_path(dir.join("income.csv"))?;
    income.write_record(["country", "group"])?;
    for r in &rows {
        env.write_record([r.country.as_str(), &format!("{:.2}", r.co2_pc), &format!("{:.2}", r.ef_pc)])?;
        eci.write_record([r.country.as_str(), &format!("{:.2}", r.eci)])?;
        let group = r.income().ok_or_else(|| format!("{}: bad income label", r.country))?;
        income.write_record([r.country.as_str(), group.as_str()])?;
    }
    env.flush()?;
    eci.flush()?;
    income.flush()?;

    let mut classes = csv::Writer::from_path(dir.join("product_classes.csv"))?;
    classes.write_record(["product", "class"])?;
    for (code, class) in fixture::product_codes(&spec) {
        classes.write_record([code.as_str(), class.as_str()])?;
    }
    classes.flush()?;
    Ok(())
}
