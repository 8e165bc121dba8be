//! Distance between convex hulls of finite point sets.
//!
//! In one dimension the hulls are intervals and the gap is exact. In higher
//! dimensions the distance is the norm of the minimum-norm point of the
//! Minkowski difference `A - B`, found with Wolfe's active-set method
//! (support-point descent with exact affine corrections). The loop stops once
//! the Frank-Wolfe duality gap certifies the returned norm to within
//! [`HULL_TOLERANCE`].

use crate::error::{Error, Result};

pub const HULL_TOLERANCE: f64 = 1e-9;

const MAX_MAJOR_ITERATIONS: usize = 10_000;
const WEIGHT_FLOOR: f64 = 1e-14;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_sets(a: &[&[f64]], b: &[&[f64]]) -> Result<usize> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Usage("hull distance of an empty point set".into()));
    }
    let dim = a[0].len();
    if a.iter().chain(b).any(|p| p.len() != dim) {
        return Err(Error::Usage("hull distance between points of different dimension".into()));
    }
    Ok(dim)
}

/// Distance between `conv(a)` and `conv(b)`; zero when they intersect.
pub fn hull_distance(a: &[&[f64]], b: &[&[f64]]) -> Result<f64> {
    let dim = check_sets(a, b)?;
    if dim == 1 {
        let (amin, amax) = span(a);
        let (bmin, bmax) = span(b);
        return Ok((bmin - amax).max(amin - bmax).max(0.0));
    }
    let diffs: Vec<Vec<f64>> = a
        .iter()
        .flat_map(|p| b.iter().map(move |q| p.iter().zip(*q).map(|(x, y)| x - y).collect()))
        .collect();
    Ok(min_norm_point(&diffs).iter().map(|c| c * c).sum::<f64>().sqrt())
}

fn span(points: &[&[f64]]) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p[0]), hi.max(p[0]))
    })
}

/// Minimum-norm point of `conv(points)`.
pub fn min_norm_point(points: &[Vec<f64>]) -> Vec<f64> {
    let start = (0..points.len())
        .min_by(|&i, &j| dot(&points[i], &points[i]).total_cmp(&dot(&points[j], &points[j])))
        .expect("nonempty point set");
    let mut active = vec![start];
    let mut weights = vec![1.0];
    let mut x = points[start].clone();

    for _ in 0..MAX_MAJOR_ITERATIONS {
        let norm_sq = dot(&x, &x);
        if norm_sq.sqrt() <= HULL_TOLERANCE {
            break;
        }
        // support point of the hull in direction -x
        let (best, best_dot) = points
            .iter()
            .enumerate()
            .map(|(k, p)| (k, dot(&x, p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty point set");
        let gap = norm_sq - best_dot;
        // |x| - dist <= gap / |x|
        if gap <= HULL_TOLERANCE * norm_sq.sqrt() || active.contains(&best) {
            break;
        }
        active.push(best);
        weights.push(0.0);

        // minor cycles: move toward the affine minimizer of the active set,
        // dropping points whose weight reaches zero
        while let Some(mu) = affine_minimizer(points, &active) {
            if mu.iter().all(|&m| m > WEIGHT_FLOOR) {
                weights = mu;
                break;
            }
            let theta = weights
                .iter()
                .zip(&mu)
                .filter(|(_, &m)| m <= WEIGHT_FLOOR)
                .map(|(&w, &m)| w / (w - m))
                .fold(1.0f64, f64::min)
                .clamp(0.0, 1.0);
            for (w, m) in weights.iter_mut().zip(&mu) {
                *w = theta * m + (1.0 - theta) * *w;
            }
            let mut k = 0;
            while k < active.len() {
                if weights[k] <= WEIGHT_FLOOR {
                    active.remove(k);
                    weights.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            if active.len() == 1 {
                weights = vec![1.0];
                break;
            }
        }
        x = combine(points, &active, &weights);
    }
    x
}

fn combine(points: &[Vec<f64>], active: &[usize], weights: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; points[active[0]].len()];
    for (&k, &w) in active.iter().zip(weights) {
        for (xc, pc) in x.iter_mut().zip(&points[k]) {
            *xc += w * pc;
        }
    }
    x
}

/// Coefficients `mu` (summing to 1) of the minimum-norm point of the affine
/// hull of the active points. `None` if the active points are affinely
/// dependent.
fn affine_minimizer(points: &[Vec<f64>], active: &[usize]) -> Option<Vec<f64>> {
    let m = active.len();
    // [G 1; 1' 0] [mu; lambda] = [0; 1] with G the Gram matrix
    let size = m + 1;
    let mut a = vec![vec![0.0; size + 1]; size];
    for r in 0..m {
        for c in 0..m {
            a[r][c] = dot(&points[active[r]], &points[active[c]]);
        }
        a[r][m] = 1.0;
        a[m][r] = 1.0;
    }
    a[m][size] = 1.0;
    let solution = solve(a)?;
    Some(solution[..m].to_vec())
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    let scale = a
        .iter()
        .flat_map(|row| row[..n].iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-13 * scale.max(1.0) {
            return None;
        }
        a.swap(col, pivot);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for row in rest.iter_mut() {
            let f = row[col] / pivot_row[col];
            for (r, p) in row[col..=n].iter_mut().zip(&pivot_row[col..=n]) {
                *r -= f * p;
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (a[row][n] - s) / a[row][row];
    }
    Some(x)
}
