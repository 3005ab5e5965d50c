#![allow(dead_code)]

use psglob::ext_model::TrialState;
use psglob::oracle::DenseMatrix;
use psglob::{ParallelPlan, Vector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| { let z: f64 = StandardNormal.sample(rng); scale * z }).collect::<Vec<f64>>()
}

/// Normal vector with a log-uniform scale in [0.1, 10].
pub fn scaled_normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let scale = log_uniform(rng, 0.1, 10.0);
    normal_vec(rng, n, scale)
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

pub fn vector(data: Vec<f64>) -> Vector {
    Vector::from_vec(data).unwrap()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Gradient `g`, trial step `sᵗ` with `gᵀsᵗ < 0` and an arbitrary gradient
/// difference `yᵗ`, at `x_k = 0`.
pub struct StepInstance {
    pub f_k: f64,
    pub g: Vector,
    pub trial: TrialState,
}

pub fn step_instance(rng: &mut ChaCha8Rng, n: usize) -> StepInstance {
    let plan = ParallelPlan::sequential();
    let g = scaled_normal_vec(rng, n);
    let mut s = scaled_normal_vec(rng, n);
    if dot(&g, &s) > 0.0 {
        s.iter_mut().for_each(|v| *v = -*v);
    }
    let y = scaled_normal_vec(rng, n);
    let g_t: Vec<f64> = g.iter().zip(&y).map(|(a, b)| a + b).collect();
    let g = vector(g);
    let x_k = Vector::zeros(n);
    let trial = TrialState::new(&x_k, &g, vector(s), rng.gen_range(-1.0..1.0), vector(g_t), &plan).unwrap();
    StepInstance { f_k: rng.gen_range(-1.0..1.0), g, trial }
}

/// Strictly convex quadratic `½xᵀAx + bᵀx + c`.
pub struct Quadratic {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub c: f64,
}

impl Quadratic {
    pub fn random(rng: &mut ChaCha8Rng, n: usize) -> Self {
        let m: Vec<Vec<f64>> = (0..n).map(|_| normal_vec(rng, n, 1.0)).collect();
        let shift = log_uniform(rng, 0.05, 2.0);
        let a = DenseMatrix::from_fn(n, |i, j| {
            let mtm: f64 = (0..n).map(|k| m[k][i] * m[k][j]).sum::<f64>() / n as f64;
            mtm + if i == j { shift } else { 0.0 }
        });
        Quadratic { a, b: normal_vec(rng, n, 1.0), c: rng.gen_range(-1.0..1.0) }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &self.a.matvec(x)) + dot(&self.b, x) + self.c
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.a.matvec(x).iter().zip(&self.b).map(|(u, v)| u + v).collect()
    }
}

/// Trial data from a convex quadratic: descent step `sᵗ` of random length,
/// so that `fᵗ` may exceed `f_k`.
pub struct ConvexInstance {
    pub q: Quadratic,
    pub f_k: f64,
    pub g: Vector,
    pub trial: TrialState,
}

pub fn convex_instance(rng: &mut ChaCha8Rng, n: usize) -> ConvexInstance {
    let plan = ParallelPlan::sequential();
    let q = Quadratic::random(rng, n);
    let x_k = normal_vec(rng, n, 1.0);
    let g = q.grad(&x_k);
    let tau = log_uniform(rng, 0.01, 10.0);
    let noise = normal_vec(rng, n, 0.3 * norm(&g));
    let mut s: Vec<f64> = g.iter().zip(&noise).map(|(gi, e)| tau * (-gi + e)).collect();
    if dot(&g, &s) > 0.0 {
        s.iter_mut().for_each(|v| *v = -*v);
    }
    let x_t: Vec<f64> = x_k.iter().zip(&s).map(|(a, b)| a + b).collect();
    let f_k = q.value(&x_k);
    let f_t = q.value(&x_t);
    let g_t = q.grad(&x_t);
    let g = vector(g);
    let trial = TrialState::new(&vector(x_k), &g, vector(s), f_t, vector(g_t), &plan).unwrap();
    ConvexInstance { q, f_k, g, trial }
}
