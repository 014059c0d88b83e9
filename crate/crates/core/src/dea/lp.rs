//! Small dense linear-programming solver.
//!
//! Two-phase tableau simplex. Pricing is Dantzig (most negative reduced
//! cost) until [`DEGENERATE_PIVOT_LIMIT`] consecutive degenerate pivots have
//! been made in a phase, after which the phase finishes with Bland's
//! smallest-index rule. Every optimal answer is certified against the
//! original rows before it is returned.

use std::fmt;

use thiserror::Error;

/// Entries at or below this magnitude are never used as pivots.
pub const PIVOT_TOLERANCE: f64 = 1e-11;
/// Maximum normalized row/bound violation accepted for an optimal point.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-8;
const OPTIMALITY_TOLERANCE: f64 = 1e-10;
const DEGENERATE_PIVOT_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Closed interval; infinite ends mean no bound on that side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const NON_NEGATIVE: Bounds = Bounds {
        lower: 0.0,
        upper: f64::INFINITY,
    };
    pub const FREE: Bounds = Bounds {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bounds>,
}

impl LpProblem {
    /// New problem with all variables non-negative.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            constraints: Vec::new(),
            bounds: vec![Bounds::NON_NEGATIVE; n],
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coefficients: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint {
            coefficients,
            relation,
            rhs,
        });
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.bounds[var] = Bounds { lower, upper };
        self
    }

    pub fn set_free(&mut self, var: usize) -> &mut Self {
        self.bounds[var] = Bounds::FREE;
        self
    }

    pub fn count(&self, relation: Relation) -> usize {
        self.constraints.iter().filter(|c| c.relation == relation).count()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if self.bounds.len() != n {
            return Err(LpError::Malformed(format!(
                "{} bounds for {n} variables",
                self.bounds.len()
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite objective coefficient".into()));
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coefficients.len() != n {
                return Err(LpError::Malformed(format!(
                    "row {i} has {} coefficients for {n} variables",
                    row.coefficients.len()
                )));
            }
            if !row.rhs.is_finite() || row.coefficients.iter().any(|a| !a.is_finite()) {
                return Err(LpError::Malformed(format!("row {i} has a non-finite entry")));
            }
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if b.lower.is_nan()
                || b.upper.is_nan()
                || b.lower > b.upper
                || b.lower == f64::INFINITY
                || b.upper == f64::NEG_INFINITY
            {
                return Err(LpError::EmptyBounds {
                    variable: j,
                    lower: b.lower,
                    upper: b.upper,
                });
            }
        }
        Ok(())
    }

    /// Largest normalized violation of rows and bounds at `x`. Each row is
    /// scaled by its largest absolute coefficient (at least 1).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.constraints {
            let lhs: f64 = row.coefficients.iter().zip(x).map(|(a, v)| a * v).sum();
            let scale = row.coefficients.iter().fold(1.0_f64, |m, a| m.max(a.abs()));
            let gap = lhs - row.rhs;
            let v = match row.relation {
                Relation::Le => gap.max(0.0),
                Relation::Ge => (-gap).max(0.0),
                Relation::Eq => gap.abs(),
            };
            worst = worst.max(v / scale);
        }
        for (b, v) in self.bounds.iter().zip(x) {
            worst = worst.max((b.lower - v).max(0.0)).max((v - b.upper).max(0.0));
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective in the problem's own sense; NaN unless optimal.
    pub objective: f64,
    /// Empty unless optimal.
    pub primal: Vec<f64>,
    /// One multiplier per constraint row when optimal. Sign convention:
    /// `∂objective/∂rhs`, so for a maximization `≤` rows have `y ≥ 0`.
    pub duals: Option<Vec<f64>>,
    pub iterations: usize,
    /// Normalized primal residual at the returned point (0 unless optimal).
    pub residual: f64,
}

impl LpSolution {
    fn status_only(status: LpStatus, iterations: usize) -> Self {
        Self {
            status,
            objective: f64::NAN,
            primal: Vec::new(),
            duals: None,
            iterations,
            residual: 0.0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("variable {variable} has empty bound interval [{lower}, {upper}]")]
    EmptyBounds { variable: usize, lower: f64, upper: f64 },
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}

/// How an original variable is expressed in non-negative tableau columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = lower + col
    Shift { col: usize, lower: f64 },
    /// x = upper - col
    Mirror { col: usize, upper: f64 },
    /// x = pos - neg
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// rows × (cols + 1); last column is the right-hand side.
    a: Vec<f64>,
    basis: Vec<usize>,
    /// z_j − c_j for every column, plus objective value in the last slot.
    cost_row: Vec<f64>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.cols + 1) + j]
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let w = self.cols + 1;
        let piv = self.a[p * w + q];
        for j in 0..w {
            self.a[p * w + j] /= piv;
        }
        self.a[p * w + q] = 1.0;
        let prow: Vec<f64> = self.a[p * w..(p + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == p {
                continue;
            }
            let f = self.a[i * w + q];
            if f != 0.0 {
                for j in 0..w {
                    self.a[i * w + j] -= f * prow[j];
                }
                self.a[i * w + q] = 0.0;
                let r = &mut self.a[i * w + self.cols];
                if *r < 0.0 && *r > -1e-12 {
                    *r = 0.0;
                }
            }
        }
        let f = self.cost_row[q];
        if f != 0.0 {
            for j in 0..w {
                self.cost_row[j] -= f * prow[j];
            }
            self.cost_row[q] = 0.0;
        }
        self.basis[p] = q;
    }

    /// Recomputes the cost row for column costs `c` from the current basis.
    fn set_costs(&mut self, c: &[f64]) {
        let w = self.cols + 1;
        let mut row = vec![0.0; w];
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = c[b];
            if cb != 0.0 {
                for (j, r) in row.iter_mut().enumerate() {
                    *r += cb * self.a[i * w + j];
                }
            }
        }
        for j in 0..self.cols {
            row[j] -= c[j];
        }
        self.cost_row = row;
    }
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

fn run_phase(
    t: &mut Tableau,
    allowed: &[bool],
    iterations: &mut usize,
    max_iterations: usize,
) -> Result<PhaseOutcome, LpError> {
    let mut degenerate_run = 0;
    let mut bland = false;
    loop {
        let entering = if bland {
            (0..t.cols).find(|&j| allowed[j] && t.cost_row[j] < -OPTIMALITY_TOLERANCE)
        } else {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..t.cols {
                let r = t.cost_row[j];
                if allowed[j] && r < -OPTIMALITY_TOLERANCE && best.is_none_or(|(_, b)| r < b) {
                    best = Some((j, r));
                }
            }
            best.map(|(j, _)| j)
        };
        let Some(q) = entering else {
            return Ok(PhaseOutcome::Optimal);
        };

        let mut min_ratio = f64::INFINITY;
        for i in 0..t.rows {
            let a = t.at(i, q);
            if a > PIVOT_TOLERANCE {
                min_ratio = min_ratio.min(t.rhs(i).max(0.0) / a);
            }
        }
        if min_ratio == f64::INFINITY {
            return Ok(PhaseOutcome::Unbounded);
        }
        let slack = 1e-12 * (1.0 + min_ratio);
        let mut leave: Option<usize> = None;
        for i in 0..t.rows {
            let a = t.at(i, q);
            if a <= PIVOT_TOLERANCE || t.rhs(i).max(0.0) / a > min_ratio + slack {
                continue;
            }
            leave = match leave {
                None => Some(i),
                Some(l) if bland => {
                    if t.basis[i] < t.basis[l] {
                        Some(i)
                    } else {
                        Some(l)
                    }
                }
                Some(l) => {
                    let (al, ai) = (t.at(l, q), a);
                    if ai > al || (ai == al && t.basis[i] < t.basis[l]) {
                        Some(i)
                    } else {
                        Some(l)
                    }
                }
            };
        }
        let p = leave.expect("a row attained the minimum ratio");

        if min_ratio <= 1e-12 {
            degenerate_run += 1;
            if degenerate_run >= DEGENERATE_PIVOT_LIMIT {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }

        t.pivot(p, q);
        *iterations += 1;
        if *iterations > max_iterations {
            return Err(LpError::NumericalBreakdown(format!(
                "iteration limit {max_iterations} exceeded"
            )));
        }
    }
}

/// Solves `problem`. Infeasibility and unboundedness are statuses, not errors.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution, LpError> {
    problem.validate()?;
    let n = problem.n_vars();

    // Map original variables onto non-negative columns.
    let mut maps = Vec::with_capacity(n);
    let mut n_std = 0;
    let mut upper_rows: Vec<(usize, f64)> = Vec::new();
    for b in &problem.bounds {
        let m = match (b.lower.is_finite(), b.upper.is_finite()) {
            (true, _) => {
                if b.upper.is_finite() {
                    upper_rows.push((n_std, b.upper - b.lower));
                }
                VarMap::Shift { col: n_std, lower: b.lower }
            }
            (false, true) => VarMap::Mirror { col: n_std, upper: b.upper },
            (false, false) => {
                n_std += 1;
                VarMap::Split { pos: n_std - 1, neg: n_std }
            }
        };
        n_std += 1;
        maps.push(m);
    }

    // Rows in standard columns, with rhs ≥ 0.
    struct Row {
        coef: Vec<f64>,
        relation: Relation,
        rhs: f64,
        flipped: bool,
    }
    let mut rows: Vec<Row> = Vec::with_capacity(problem.constraints.len() + upper_rows.len());
    for c in &problem.constraints {
        let mut coef = vec![0.0; n_std];
        let mut rhs = c.rhs;
        for (j, &a) in c.coefficients.iter().enumerate() {
            match maps[j] {
                VarMap::Shift { col, lower } => {
                    coef[col] += a;
                    rhs -= a * lower;
                }
                VarMap::Mirror { col, upper } => {
                    coef[col] -= a;
                    rhs -= a * upper;
                }
                VarMap::Split { pos, neg } => {
                    coef[pos] += a;
                    coef[neg] -= a;
                }
            }
        }
        rows.push(Row {
            coef,
            relation: c.relation,
            rhs,
            flipped: false,
        });
    }
    for &(col, width) in &upper_rows {
        let mut coef = vec![0.0; n_std];
        coef[col] = 1.0;
        rows.push(Row {
            coef,
            relation: Relation::Le,
            rhs: width,
            flipped: false,
        });
    }
    for r in &mut rows {
        if r.rhs < 0.0 {
            r.rhs = -r.rhs;
            r.coef.iter_mut().for_each(|a| *a = -*a);
            r.relation = match r.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
            r.flipped = true;
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.relation != Relation::Le).count();
    let cols = n_std + n_slack + n_art;
    let w = cols + 1;
    let mut a = vec![0.0; m * w];
    let mut basis = vec![0; m];
    let mut init_col = vec![0; m];
    let (mut next_slack, mut next_art) = (n_std, n_std + n_slack);
    for (i, r) in rows.iter().enumerate() {
        a[i * w..i * w + n_std].copy_from_slice(&r.coef);
        a[i * w + cols] = r.rhs;
        match r.relation {
            Relation::Le => {
                a[i * w + next_slack] = 1.0;
                basis[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                a[i * w + next_slack] = -1.0;
                next_slack += 1;
                a[i * w + next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                a[i * w + next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
        }
        init_col[i] = basis[i];
    }
    let is_art = |j: usize| j >= n_std + n_slack;

    let mut t = Tableau {
        rows: m,
        cols,
        a,
        basis,
        cost_row: vec![0.0; w],
    };
    let max_iterations = 50 * (m + cols) + 1000;
    let mut iterations = 0;

    // Phase 1: maximize −Σ artificials.
    if n_art > 0 {
        let c1: Vec<f64> = (0..cols).map(|j| if is_art(j) { -1.0 } else { 0.0 }).collect();
        t.set_costs(&c1);
        let allowed = vec![true; cols];
        run_phase(&mut t, &allowed, &mut iterations, max_iterations)?;
        let infeasibility = -t.cost_row[cols];
        let scale = rows.iter().fold(1.0_f64, |s, r| s.max(r.rhs));
        if infeasibility > 1e-9 * scale {
            return Ok(LpSolution::status_only(LpStatus::Infeasible, iterations));
        }
        // Drive remaining (zero-level) artificials out of the basis.
        for i in 0..m {
            if !is_art(t.basis[i]) {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n_std + n_slack {
                let v = t.at(i, j).abs();
                if v > 1e-9 && best.is_none_or(|(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            if let Some((j, _)) = best {
                t.pivot(i, j);
            }
        }
    }

    // Phase 2.
    let sign = match problem.sense {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let mut c2 = vec![0.0; cols];
    for (j, &c) in problem.objective.iter().enumerate() {
        let c = sign * c;
        match maps[j] {
            VarMap::Shift { col, .. } => c2[col] += c,
            VarMap::Mirror { col, .. } => c2[col] -= c,
            VarMap::Split { pos, neg } => {
                c2[pos] += c;
                c2[neg] -= c;
            }
        }
    }
    t.set_costs(&c2);
    let allowed: Vec<bool> = (0..cols).map(|j| !is_art(j)).collect();
    if let PhaseOutcome::Unbounded = run_phase(&mut t, &allowed, &mut iterations, max_iterations)? {
        return Ok(LpSolution::status_only(LpStatus::Unbounded, iterations));
    }

    if t.a.iter().chain(&t.cost_row).any(|v| !v.is_finite()) {
        return Err(LpError::NumericalBreakdown("non-finite tableau entry".into()));
    }

    let mut std_x = vec![0.0; cols];
    for (i, &b) in t.basis.iter().enumerate() {
        std_x[b] = t.rhs(i).max(0.0);
    }
    let primal: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shift { col, lower } => lower + std_x[col],
            VarMap::Mirror { col, upper } => upper - std_x[col],
            VarMap::Split { pos, neg } => std_x[pos] - std_x[neg],
        })
        .collect();

    let residual = problem.max_violation(&primal);
    if residual > FEASIBILITY_TOLERANCE {
        return Err(LpError::NumericalBreakdown(format!(
            "optimal basis violates constraints by {residual:e}"
        )));
    }

    // y_i = c_B B⁻¹ e_i, read from the cost row under the row's initial basic column.
    let duals: Vec<f64> = (0..problem.constraints.len())
        .map(|i| {
            let y = t.cost_row[init_col[i]] + if is_art(init_col[i]) { 0.0 } else { c2[init_col[i]] };
            let y = if rows[i].flipped { -y } else { y };
            sign * y
        })
        .collect();

    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: problem.objective_value(&primal),
        primal,
        duals: Some(duals),
        iterations,
        residual,
    })
}
