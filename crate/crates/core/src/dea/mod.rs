//! Input-oriented variable-returns-to-scale DEA.
//!
//! Each unit `k0` is scored by the multiplier program
//!
//! ```text
//! max  Σ_i u_i y_i,k0 + w
//! s.t. Σ_j v_j x_j,k0 = 1
//!      Σ_i u_i y_ik − Σ_j v_j x_jk + w ≤ 0     for every unit k
//!      u, v ≥ 0,  w free
//! ```
//!
//! whose optimum is the efficiency score θ. The envelopment program
//! (its LP dual) is available as an independent cross-check.

pub mod lp;

use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

pub use lp::{solve_lp, Bounds, Constraint, LpError, LpProblem, LpSolution, LpStatus, Relation, Sense};

/// Scores closer than this are ranked as ties (then by unit label).
pub const RANK_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DeaError {
    #[error("instance has no units")]
    Empty,
    #[error("{0}")]
    Shape(String),
    #[error("unit {unit}: input {index} is {value}; inputs must be strictly positive")]
    NonPositiveInput { unit: String, index: usize, value: f64 },
    #[error("unit {unit}: output {index} is {value}; outputs must be strictly positive")]
    NonPositiveOutput { unit: String, index: usize, value: f64 },
    #[error("non-finite value at position {index}")]
    NonFiniteValue { index: usize },
    #[error("unit index {k0} out of range for {units} units")]
    UnitOutOfRange { k0: usize, units: usize },
    #[error("unit {unit}: {source}")]
    Solver {
        unit: String,
        #[source]
        source: LpError,
    },
    #[error("unit {unit}: LP status {status:?}")]
    NotOptimal { unit: String, status: LpStatus },
}

/// Units with `n` strictly positive inputs and `m` strictly positive outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct DeaInstance {
    units: Vec<String>,
    /// n × K
    inputs: DMatrix<f64>,
    /// m × K
    outputs: DMatrix<f64>,
}

impl DeaInstance {
    pub fn new(units: Vec<String>, inputs: DMatrix<f64>, outputs: DMatrix<f64>) -> Result<Self, DeaError> {
        let k = units.len();
        if k == 0 {
            return Err(DeaError::Empty);
        }
        if inputs.ncols() != k || outputs.ncols() != k {
            return Err(DeaError::Shape(format!(
                "{k} units but {} input columns and {} output columns",
                inputs.ncols(),
                outputs.ncols()
            )));
        }
        if inputs.nrows() == 0 || outputs.nrows() == 0 {
            return Err(DeaError::Shape("at least one input and one output required".into()));
        }
        for u in 0..k {
            for j in 0..inputs.nrows() {
                let v = inputs[(j, u)];
                if !(v > 0.0 && v.is_finite()) {
                    return Err(DeaError::NonPositiveInput { unit: units[u].clone(), index: j, value: v });
                }
            }
            for i in 0..outputs.nrows() {
                let v = outputs[(i, u)];
                if !(v > 0.0 && v.is_finite()) {
                    return Err(DeaError::NonPositiveOutput { unit: units[u].clone(), index: i, value: v });
                }
            }
        }
        Ok(Self { units, inputs, outputs })
    }

    /// Builds an instance from per-unit rows: `inputs[k]` and `outputs[k]` belong to `units[k]`.
    pub fn from_rows(units: Vec<String>, inputs: &[Vec<f64>], outputs: &[Vec<f64>]) -> Result<Self, DeaError> {
        let k = units.len();
        if inputs.len() != k || outputs.len() != k {
            return Err(DeaError::Shape("row count does not match unit count".into()));
        }
        let n = inputs.first().map_or(0, Vec::len);
        let m = outputs.first().map_or(0, Vec::len);
        if inputs.iter().any(|r| r.len() != n) || outputs.iter().any(|r| r.len() != m) {
            return Err(DeaError::Shape("ragged input or output rows".into()));
        }
        let x = DMatrix::from_fn(n, k, |j, u| inputs[u][j]);
        let y = DMatrix::from_fn(m, k, |i, u| outputs[u][i]);
        Self::new(units, x, y)
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn n_units(&self) -> usize {
        self.units.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.nrows()
    }

    pub fn input(&self, j: usize, k: usize) -> f64 {
        self.inputs[(j, k)]
    }

    pub fn output(&self, i: usize, k: usize) -> f64 {
        self.outputs[(i, k)]
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn outputs(&self) -> &DMatrix<f64> {
        &self.outputs
    }

    fn check_unit(&self, k0: usize) -> Result<(), DeaError> {
        if k0 >= self.n_units() {
            return Err(DeaError::UnitOutOfRange { k0, units: self.n_units() });
        }
        Ok(())
    }
}

/// Shifts a score vector so its minimum becomes 1: `y − min(y) + 1`.
pub fn translate_outputs(raw: &[f64]) -> Result<Vec<f64>, DeaError> {
    translate_outputs_to(raw, 1.0)
}

/// `y − min(y) + floor`; `floor` must be positive.
pub fn translate_outputs_to(raw: &[f64], floor: f64) -> Result<Vec<f64>, DeaError> {
    if raw.is_empty() {
        return Err(DeaError::Empty);
    }
    if let Some(index) = raw.iter().position(|v| !v.is_finite()) {
        return Err(DeaError::NonFiniteValue { index });
    }
    assert!(floor > 0.0, "translation floor must be positive");
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(raw.iter().map(|v| v - min + floor).collect())
}

/// Variables `[u_1..u_m, v_1..v_n, w]`.
pub fn build_multiplier_lp(instance: &DeaInstance, k0: usize) -> Result<LpProblem, DeaError> {
    instance.check_unit(k0)?;
    let (m, n) = (instance.n_outputs(), instance.n_inputs());
    let nv = m + n + 1;

    let mut objective = vec![0.0; nv];
    for i in 0..m {
        objective[i] = instance.output(i, k0);
    }
    objective[m + n] = 1.0;
    let mut lp = LpProblem::new(Sense::Maximize, objective);
    lp.set_free(m + n);

    let mut norm = vec![0.0; nv];
    for j in 0..n {
        norm[m + j] = instance.input(j, k0);
    }
    lp.add_constraint(norm, Relation::Eq, 1.0);

    for k in 0..instance.n_units() {
        let mut row = vec![0.0; nv];
        for i in 0..m {
            row[i] = instance.output(i, k);
        }
        for j in 0..n {
            row[m + j] = -instance.input(j, k);
        }
        row[m + n] = 1.0;
        lp.add_constraint(row, Relation::Le, 0.0);
    }
    Ok(lp)
}

/// Variables `[θ, λ_1..λ_K]`; minimizes θ.
pub fn build_envelopment_lp(instance: &DeaInstance, k0: usize) -> Result<LpProblem, DeaError> {
    instance.check_unit(k0)?;
    let k = instance.n_units();
    let nv = k + 1;
    let mut objective = vec![0.0; nv];
    objective[0] = 1.0;
    let mut lp = LpProblem::new(Sense::Minimize, objective);
    lp.set_free(0);

    for i in 0..instance.n_outputs() {
        let mut row = vec![0.0; nv];
        for u in 0..k {
            row[u + 1] = instance.output(i, u);
        }
        lp.add_constraint(row, Relation::Ge, instance.output(i, k0));
    }
    for j in 0..instance.n_inputs() {
        let mut row = vec![0.0; nv];
        row[0] = -instance.input(j, k0);
        for u in 0..k {
            row[u + 1] = instance.input(j, u);
        }
        lp.add_constraint(row, Relation::Le, 0.0);
    }
    let mut convex = vec![1.0; nv];
    convex[0] = 0.0;
    lp.add_constraint(convex, Relation::Eq, 1.0);
    Ok(lp)
}

/// Solver statistics for one unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitSolve {
    pub unit: String,
    pub theta: f64,
    pub iterations: usize,
    pub residual: f64,
}

fn solve_unit(instance: &DeaInstance, lp: &LpProblem, k0: usize) -> Result<LpSolution, DeaError> {
    let unit = || instance.units[k0].clone();
    let sol = solve_lp(lp).map_err(|source| DeaError::Solver { unit: unit(), source })?;
    if sol.status != LpStatus::Optimal {
        return Err(DeaError::NotOptimal { unit: unit(), status: sol.status });
    }
    Ok(sol)
}

/// θ from the multiplier program, clamped to `[0, 1]`.
pub fn multiplier_score(instance: &DeaInstance, k0: usize) -> Result<UnitSolve, DeaError> {
    let lp = build_multiplier_lp(instance, k0)?;
    let sol = solve_unit(instance, &lp, k0)?;
    Ok(UnitSolve {
        unit: instance.units[k0].clone(),
        theta: sol.objective.clamp(0.0, 1.0),
        iterations: sol.iterations,
        residual: sol.residual,
    })
}

/// θ from the envelopment program (unclamped, for cross-checks).
pub fn envelopment_score(instance: &DeaInstance, k0: usize) -> Result<f64, DeaError> {
    let lp = build_envelopment_lp(instance, k0)?;
    Ok(solve_unit(instance, &lp, k0)?.objective)
}

/// Unclamped multiplier optimum, for cross-checks.
pub fn multiplier_objective(instance: &DeaInstance, k0: usize) -> Result<f64, DeaError> {
    let lp = build_multiplier_lp(instance, k0)?;
    Ok(solve_unit(instance, &lp, k0)?.objective)
}

/// Efficiency score and rank of one unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReprResult {
    pub country: String,
    pub theta: f64,
    /// 1-based.
    pub rank: usize,
}

/// Orders by θ descending (ties within [`RANK_TIE_TOLERANCE`] by label) and assigns ranks.
pub fn rank_scores(units: &[String], thetas: &[f64]) -> Vec<ReprResult> {
    let key = |t: f64| (t / RANK_TIE_TOLERANCE).round() as i64;
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.sort_by(|&a, &b| {
        key(thetas[b])
            .cmp(&key(thetas[a]))
            .then_with(|| units[a].cmp(&units[b]))
    });
    order
        .into_iter()
        .enumerate()
        .map(|(pos, i)| ReprResult {
            country: units[i].clone(),
            theta: thetas[i],
            rank: pos + 1,
        })
        .collect()
}

/// Scores every unit and ranks them.
pub fn score_all(instance: &DeaInstance) -> Result<Vec<ReprResult>, DeaError> {
    Ok(score_all_with_stats(instance)?.0)
}

pub fn score_all_with_stats(instance: &DeaInstance) -> Result<(Vec<ReprResult>, Vec<UnitSolve>), DeaError> {
    let stats = (0..instance.n_units())
        .map(|k| multiplier_score(instance, k))
        .collect::<Result<Vec<_>, _>>()?;
    let thetas: Vec<f64> = stats.iter().map(|s| s.theta).collect();
    Ok((rank_scores(&instance.units, &thetas), stats))
}

/// Rescales θ to `[0, 1]` by min-max. Not used unless requested; ranks are unchanged.
pub fn min_max_normalize(results: &[ReprResult]) -> Vec<ReprResult> {
    let lo = results.iter().map(|r| r.theta).fold(f64::INFINITY, f64::min);
    let hi = results.iter().map(|r| r.theta).fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    results
        .iter()
        .map(|r| ReprResult {
            theta: if span > 0.0 { (r.theta - lo) / span } else { 1.0 },
            ..r.clone()
        })
        .collect()
}

pub fn write_lp_stats<W: Write>(stats: &[UnitSolve], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["country", "theta", "iterations", "residual"])?;
    for s in stats {
        w.write_record([
            s.unit.as_str(),
            &s.theta.to_string(),
            &s.iterations.to_string(),
            &format!("{:e}", s.residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}
