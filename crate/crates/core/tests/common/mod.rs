#![allow(dead_code)]

//! Fixtures and independent brute-force oracles shared by the integration tests.

use std::fs::File;
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ecorank::dea::lp::{LpProblem, Relation, Sense};
use ecorank::dea::{self, DeaInstance};
use ecorank::fixture::{self, ReferenceRow};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/reference")
}

pub fn reference() -> Vec<ReferenceRow> {
    fixture::load_reference(File::open(fixture_dir().join("reference.csv")).unwrap()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// CO₂ and footprint as inputs, ECI shifted to `min = floor` as the output.
pub fn reference_instance_with(rows: &[ReferenceRow], floor: f64, input_scale: f64) -> DeaInstance {
    let units: Vec<String> = rows.iter().map(|r| r.country.clone()).collect();
    let raw: Vec<f64> = rows.iter().map(|r| r.eci).collect();
    let y = dea::translate_outputs_to(&raw, floor).unwrap();
    let inputs: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.co2_pc * input_scale, r.ef_pc * input_scale]).collect();
    let outputs: Vec<Vec<f64>> = y.into_iter().map(|v| vec![v]).collect();
    DeaInstance::from_rows(units, &inputs, &outputs).unwrap()
}

pub fn reference_instance(rows: &[ReferenceRow]) -> DeaInstance {
    reference_instance_with(rows, 1.0, 1.0)
}

/// Random strictly positive instance with `K ≤ 10`, `n ≤ 3`, `m ≤ 2`.
pub fn random_dea_instance(rng: &mut ChaCha8Rng) -> DeaInstance {
    let k = rng.gen_range(2..=10);
    let n = rng.gen_range(1..=3);
    let m = rng.gen_range(1..=2);
    let units: Vec<String> = (0..k).map(|i| format!("U{i:02}")).collect();
    let inputs: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.gen_range(0.1..10.0)).collect()).collect();
    let outputs: Vec<Vec<f64>> = (0..k).map(|_| (0..m).map(|_| rng.gen_range(0.1..10.0)).collect()).collect();
    DeaInstance::from_rows(units, &inputs, &outputs).unwrap()
}

/// Average ranks (ties share the mean rank), 1-based.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&average_ranks(a), &average_ranks(b))
}

// ---------------------------------------------------------------------------
// LP vertex enumeration

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// Random LP: ≤ 6 variables, ≤ 6 constraints, integer data, mixed relations,
/// some free variables.
pub fn random_lp(rng: &mut ChaCha8Rng) -> LpProblem {
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(1..=6);
    let sense = if rng.gen_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    let objective: Vec<f64> = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
    let mut lp = LpProblem::new(sense, objective);
    for _ in 0..m {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
        let rel = match rng.gen_range(0..10) {
            0..=4 => Relation::Le,
            5..=7 => Relation::Ge,
            _ => Relation::Eq,
        };
        lp.add_constraint(a, rel, rng.gen_range(-6..=6) as f64);
    }
    for j in 0..n {
        if rng.gen_bool(0.25) {
            lp.set_free(j);
        }
    }
    lp
}

/// Best objective over vertices of the problem intersected with `|x_j| ≤ box_size`.
fn boxed_optimum(lp: &LpProblem, box_size: f64) -> Option<f64> {
    let n = lp.n_vars();
    // rows: (a, b, is_equality) meaning a·x ≤ b or a·x = b
    let mut rows: Vec<(Vec<f64>, f64, bool)> = Vec::new();
    for c in &lp.constraints {
        match c.relation {
            Relation::Le => rows.push((c.coefficients.clone(), c.rhs, false)),
            Relation::Ge => rows.push((c.coefficients.iter().map(|v| -v).collect(), -c.rhs, false)),
            Relation::Eq => rows.push((c.coefficients.clone(), c.rhs, true)),
        }
    }
    for (j, b) in lp.bounds.iter().enumerate() {
        let unit = |s: f64| (0..n).map(|k| if k == j { s } else { 0.0 }).collect::<Vec<f64>>();
        let lower = if b.lower.is_finite() { -b.lower } else { box_size };
        let upper = if b.upper.is_finite() { b.upper } else { box_size };
        rows.push((unit(-1.0), lower, false));
        rows.push((unit(1.0), upper, false));
    }

    let feasible = |x: &DVector<f64>| {
        rows.iter().all(|(a, b, eq)| {
            let ax: f64 = a.iter().zip(x.iter()).map(|(p, q)| p * q).sum();
            let tol = 1e-7 * (1.0 + b.abs());
            if *eq {
                (ax - b).abs() <= tol
            } else {
                ax <= b + tol
            }
        })
    };

    let mut best: Option<f64> = None;
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        let a = DMatrix::from_fn(n, n, |i, j| rows[subset[i]].0[j]);
        if a.determinant().abs() > 1e-9 {
            let b = DVector::from_fn(n, |i, _| rows[subset[i]].1);
            if let Some(x) = a.lu().solve(&b) {
                if feasible(&x) {
                    let v: f64 = lp.objective.iter().zip(x.iter()).map(|(c, x)| c * x).sum();
                    best = Some(match (best, lp.sense) {
                        (None, _) => v,
                        (Some(b), Sense::Maximize) => b.max(v),
                        (Some(b), Sense::Minimize) => b.min(v),
                    });
                }
            }
        }
        if !next_combination(&mut subset, rows.len()) {
            break;
        }
    }
    best
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Classifies the LP by enumerating vertices of two nested boxes: an optimum
/// that moves with the box means the original problem is unbounded.
pub fn vertex_enumeration(lp: &LpProblem) -> Outcome {
    const BOX: f64 = 1e6;
    match (boxed_optimum(lp, BOX), boxed_optimum(lp, 2.0 * BOX)) {
        (None, _) | (_, None) => Outcome::Infeasible,
        (Some(a), Some(b)) if (a - b).abs() > 1e-6 * a.abs().max(1.0) => Outcome::Unbounded,
        (Some(a), Some(_)) => Outcome::Optimal(a),
    }
}

// ---------------------------------------------------------------------------
// ECI by deflated power iteration on M̃ = D_c⁻¹ M D_p⁻¹ Mᵀ

/// Returns the standardized, diversity-signed second eigenvector, or `None`
/// if iteration does not settle.
pub fn eci_power_iteration(m: &DMatrix<f64>, seed: u64) -> Option<Vec<f64>> {
    let (n, p) = m.shape();
    let kc: Vec<f64> = (0..n).map(|c| m.row(c).sum()).collect();
    let kp: Vec<f64> = (0..p).map(|j| m.column(j).sum()).collect();
    let mut mt = DMatrix::zeros(n, n);
    for c in 0..n {
        for d in 0..n {
            let mut s = 0.0;
            for j in 0..p {
                s += m[(c, j)] * m[(d, j)] / kp[j];
            }
            mt[(c, d)] = s / kc[c];
        }
    }
    // Stationary distribution of the row-stochastic M̃ is proportional to diversity.
    let total: f64 = kc.iter().sum();
    let pi: Vec<f64> = kc.iter().map(|k| k / total).collect();
    let deflate = |x: &mut DVector<f64>| {
        let proj: f64 = pi.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        x.iter_mut().for_each(|v| *v -= proj);
        let norm = x.norm();
        x.iter_mut().for_each(|v| *v /= norm);
    };

    let mut r = rng(seed);
    let mut x = DVector::from_fn(n, |_, _| r.gen_range(-1.0..1.0));
    deflate(&mut x);
    let mut converged = false;
    for _ in 0..200_000 {
        let mut y = &mt * &x;
        deflate(&mut y);
        let diff = (&y - &x).norm();
        x = y;
        if diff < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }

    let mean = x.iter().sum::<f64>() / n as f64;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let mut z: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();
    let mk = kc.iter().sum::<f64>() / n as f64;
    if z.iter().zip(&kc).map(|(a, k)| a * (k - mk)).sum::<f64>() < 0.0 {
        z.iter_mut().for_each(|v| *v = -*v);
    }
    Some(z)
}

/// Random 0/1 membership matrix with a nested (diversity × ubiquity) bias.
pub fn random_membership(rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = rng.gen_range(5..=15);
    let p = rng.gen_range(8..=25);
    let cap: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let diff: Vec<f64> = (0..p).map(|_| rng.gen_range(0.0..1.0)).collect();
    DMatrix::from_fn(n, p, |c, j| {
        let prob = (0.15 + 0.8 * (cap[c] - diff[j] + 0.5)).clamp(0.05, 0.95);
        if rng.gen_bool(prob) {
            1.0
        } else {
            0.0
        }
    })
}

/// Eigen-gap and connectivity screen so that the second eigenvector is well defined.
pub fn well_conditioned(m: &DMatrix<f64>) -> bool {
    let (n, p) = m.shape();
    if (0..n).any(|c| m.row(c).sum() == 0.0) || (0..p).any(|j| m.column(j).sum() == 0.0) {
        return false;
    }
    let kc: Vec<f64> = (0..n).map(|c| m.row(c).sum()).collect();
    let kp: Vec<f64> = (0..p).map(|j| m.column(j).sum()).collect();
    let a = DMatrix::from_fn(n, p, |c, j| m[(c, j)] / (kc[c] * kp[j]).sqrt());
    let s = &a * a.transpose();
    let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    n >= 3 && ev[0] - ev[1] > 1e-2 && ev[1] - ev[2] > 1e-2 && ev[1] > 1e-6
}

// ---------------------------------------------------------------------------
// Spanning trees of K_n via Prüfer sequences

/// Every labeled spanning tree on `n ≥ 2` nodes as an edge list.
pub fn all_spanning_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n == 2 {
        return vec![vec![(0, 1)]];
    }
    let mut out = Vec::new();
    let len = n - 2;
    let total = n.pow(len as u32);
    for code in 0..total {
        let mut seq = Vec::with_capacity(len);
        let mut c = code;
        for _ in 0..len {
            seq.push(c % n);
            c /= n;
        }
        out.push(prufer_decode(&seq, n));
    }
    out
}

fn prufer_decode(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &s in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf.min(s), leaf.max(s)));
        degree[leaf] -= 1;
        degree[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}
