//! Numeric checks of the inequalities that certify an approximation factor
//! for the iterative rounding.

use crate::metric::pow;

const SLACK: f64 = 1e-9;

/// Facilities around one client: distances to the client, pairwise
/// distances, and openings.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    pub to_client: Vec<f64>,
    pub between: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

/// Both sides of
/// `Σ_{i,i'} y_i y_{i'} max{α d_i^p, (d_i + d(i,i'))^p} ≤ (2α−1) y(T) Σ_i y_i d_i^p`.
pub fn eq1_sides(nb: &Neighborhood, p: f64, alpha: f64) -> (f64, f64) {
    let n = nb.y.len();
    let mut lhs = 0.0;
    for a in 0..n {
        let da = nb.to_client[a];
        for b in 0..n {
            let term = (alpha * pow(da, p)).max(pow(da + nb.between[a][b], p));
            lhs += nb.y[a] * nb.y[b] * term;
        }
    }
    let mass: f64 = nb.y.iter().sum();
    let served: f64 = (0..n).map(|a| nb.y[a] * pow(nb.to_client[a], p)).sum();
    (lhs, (2.0 * alpha - 1.0) * mass * served)
}

pub fn verify_eq1(nb: &Neighborhood, p: f64, alpha: f64) -> bool {
    let (lhs, rhs) = eq1_sides(nb, p, alpha);
    lhs <= rhs + SLACK * lhs.abs().max(rhs.abs()) + 1e-300
}

/// How the pairwise Euclidean difference is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairForm {
    /// `max{α d_i², (d_i + |v_i − v_i'|)²}`, target `−2(α−1)·I`.
    Exact,
    /// `max{α d_i², 2d_i² + 2|v_i − v_i'|²}`, target `−6·I`.
    Relaxed,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn diff(vi: &[f64], vj: &[f64], alpha: f64, form: PairForm) -> f64 {
    let di2 = dot(vi, vi);
    let dj2 = dot(vj, vj);
    let gap2: f64 = vi.iter().zip(vj).map(|(x, y)| (x - y) * (x - y)).sum();
    let second = match form {
        PairForm::Exact => (di2.sqrt() + gap2.sqrt()).powi(2),
        PairForm::Relaxed => 2.0 * di2 + 2.0 * gap2,
    };
    (alpha * di2).max(second) - (alpha - 0.5) * (di2 + dj2)
}

/// `(diff(i,i') + diff(i',i), bound)` with the client at the origin.
pub fn euclid_pair_sides(vi: &[f64], vj: &[f64], alpha: f64, form: PairForm) -> (f64, f64) {
    let inner = dot(vi, vj);
    let sum = diff(vi, vj, alpha, form) + diff(vj, vi, alpha, form);
    let bound = match form {
        PairForm::Exact => -2.0 * (alpha - 1.0) * inner,
        PairForm::Relaxed => -6.0 * inner,
    };
    (sum, bound)
}

/// Pairwise certificate: `Exact` with α = 11/3 and `Relaxed` with α = 4 are
/// the two proven cases.
pub fn verify_euclid_pair(vi: &[f64], vj: &[f64], alpha: f64, form: PairForm) -> bool {
    let (sum, bound) = euclid_pair_sides(vi, vj, alpha, form);
    let scale = dot(vi, vi) + dot(vj, vj);
    sum <= bound + SLACK * scale.max(1e-300)
}
