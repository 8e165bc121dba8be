#![allow(dead_code)]

use mhk::{OpinionState, StubbornnessAssignment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn line(xs: &[f64], eps: f64) -> OpinionState {
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    OpinionState::new(&rows, eps).unwrap()
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize, d: usize, eps: f64) -> OpinionState {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    OpinionState::new(&rows, eps).unwrap()
}

/// Per-agent stubbornness: a quarter exactly 0, a quarter exactly 1, the rest uniform.
pub fn random_alpha(rng: &mut ChaCha8Rng, n: usize) -> StubbornnessAssignment {
    let alphas = (0..n)
        .map(|_| match rng.random_range(0..4) {
            0 => 0.0,
            1 => 1.0,
            _ => rng.random_range(0.0..1.0),
        })
        .collect();
    StubbornnessAssignment::new(alphas).unwrap()
}

/// Plain synchronous Hegselmann-Krause step, written without the engine:
/// every agent moves to the average of the opinions within `eps`, summed in
/// index order. An agent whose neighbors all hold its exact opinion keeps it.
pub fn plain_hk_step(x: &[Vec<f64>], eps: f64) -> Vec<Vec<f64>> {
    let d = x[0].len();
    x.iter()
        .map(|xi| {
            let near: Vec<&Vec<f64>> = x
                .iter()
                .filter(|xj| xi.iter().zip(xj.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() <= eps)
                .collect();
            if near.iter().all(|xj| *xj == xi) {
                return xi.clone();
            }
            let mut sum = vec![0.0; d];
            for xj in &near {
                for k in 0..d {
                    sum[k] += xj[k];
                }
            }
            sum.iter().map(|s| s / near.len() as f64).collect()
        })
        .collect()
}
