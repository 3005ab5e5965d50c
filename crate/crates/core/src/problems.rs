//! Built-in test objectives with analytic gradients.
//!
//! Function value and gradient come out of one chunked sweep: each chunk
//! writes its slice of the gradient and returns its share of `f`, and the
//! shares are summed in chunk order, so evaluation is thread-count invariant.

use crate::error::{Error, Result};
use crate::vec_engine::{ParallelPlan, Vector};

/// Differentiable objective `f: ℝⁿ → ℝ` evaluated together with its gradient.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;

    fn dimension(&self) -> usize;

    fn initial_point(&self) -> Vector;

    /// Writes ∇f(x) into `grad` and returns f(x).
    fn eval_into(&self, x: &Vector, grad: &mut Vector, plan: &ParallelPlan) -> Result<f64>;

    fn eval(&self, x: &Vector, plan: &ParallelPlan) -> Result<(f64, Vector)> {
        let mut grad = Vector::zeros(x.len());
        let f = self.eval_into(x, &mut grad, plan)?;
        Ok((f, grad))
    }
}

fn check_dims(n: usize, x: &Vector, grad: &Vector) -> Result<()> {
    for len in [x.len(), grad.len()] {
        if len != n {
            return Err(Error::LengthMismatch { left: n, right: len });
        }
    }
    Ok(())
}

/// Sums per-chunk `(f share, gradient finite)` partials.
fn finish(partials: Vec<(f64, bool)>) -> Result<f64> {
    let mut f = 0.0;
    let mut finite = true;
    for (share, ok) in partials {
        f += share;
        finite &= ok;
    }
    if !finite {
        return Err(Error::NonFinite("objective gradient"));
    }
    if !f.is_finite() {
        return Err(Error::NonFinite("objective value"));
    }
    Ok(f)
}

/// `f(x) = Σ_{i<n} cos(−x_{i+1}/2 + x_i²)`, started from all ones.
#[derive(Debug, Clone)]
pub struct Cosine {
    n: usize,
}

pub fn cosine(n: usize) -> Result<Cosine> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("cosine needs n >= 2, got {n}")));
    }
    Ok(Cosine { n })
}

impl Objective for Cosine {
    fn name(&self) -> &str {
        "cosine"
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn initial_point(&self) -> Vector {
        Vector::filled(self.n, 1.0)
    }

    fn eval_into(&self, x: &Vector, grad: &mut Vector, plan: &ParallelPlan) -> Result<f64> {
        check_dims(self.n, x, grad)?;
        let n = self.n;
        let arg = |i: usize| -0.5 * x[i + 1] + x[i] * x[i];
        let partials = plan.map_chunks_mut(grad, |off, chunk| {
            // sin of the term to the left of this chunk
            let mut prev_sin = if off > 0 { arg(off - 1).sin() } else { 0.0 };
            let mut f = 0.0;
            let mut ok = true;
            for (k, gi) in chunk.iter_mut().enumerate() {
                let i = off + k;
                let (sin_i, cos_i) = if i + 1 < n { arg(i).sin_cos() } else { (0.0, 0.0) };
                f += cos_i;
                *gi = -2.0 * x[i] * sin_i + 0.5 * prev_sin;
                ok &= gi.is_finite();
                prev_sin = sin_i;
            }
            (f, ok)
        });
        finish(partials)
    }
}

/// `f(x) = Σ x_i² + 4cos(x_i)`, started from `x_i = ln(1 + i)` (1-based i).
#[derive(Debug, Clone)]
pub struct Noncvxun {
    n: usize,
}

pub fn noncvxun(n: usize) -> Result<Noncvxun> {
    if n < 1 {
        return Err(Error::InvalidParameter("noncvxun needs n >= 1".into()));
    }
    Ok(Noncvxun { n })
}

impl Objective for Noncvxun {
    fn name(&self) -> &str {
        "noncvxun"
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn initial_point(&self) -> Vector {
        Vector::from_vec((1..=self.n).map(|i| (1.0 + i as f64).ln()).collect())
            .expect("n >= 1")
    }

    fn eval_into(&self, x: &Vector, grad: &mut Vector, plan: &ParallelPlan) -> Result<f64> {
        check_dims(self.n, x, grad)?;
        let partials = plan.map_chunks_mut(grad, |off, chunk| {
            let mut f = 0.0;
            let mut ok = true;
            for (k, gi) in chunk.iter_mut().enumerate() {
                let xi = x[off + k];
                let (s, c) = xi.sin_cos();
                f += xi * xi + 4.0 * c;
                *gi = 2.0 * xi - 4.0 * s;
                ok &= gi.is_finite();
            }
            (f, ok)
        });
        finish(partials)
    }
}

/// Chained Rosenbrock `Σ 100(x_{i+1} − x_i²)² + (1 − x_i)²`, started from 1.2.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    n: usize,
}

pub fn rosenbrock(n: usize) -> Result<Rosenbrock> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("rosenbrock needs n >= 2, got {n}")));
    }
    Ok(Rosenbrock { n })
}

impl Objective for Rosenbrock {
    fn name(&self) -> &str {
        "rosenbrock"
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn initial_point(&self) -> Vector {
        Vector::filled(self.n, 1.2)
    }

    fn eval_into(&self, x: &Vector, grad: &mut Vector, plan: &ParallelPlan) -> Result<f64> {
        check_dims(self.n, x, grad)?;
        let n = self.n;
        let partials = plan.map_chunks_mut(grad, |off, chunk| {
            let mut f = 0.0;
            let mut ok = true;
            for (k, gi) in chunk.iter_mut().enumerate() {
                let i = off + k;
                let mut g = 0.0;
                if i + 1 < n {
                    let r = x[i + 1] - x[i] * x[i];
                    let d = 1.0 - x[i];
                    f += 100.0 * r * r + d * d;
                    g += -400.0 * x[i] * r - 2.0 * d;
                }
                if i > 0 {
                    g += 200.0 * (x[i] - x[i - 1] * x[i - 1]);
                }
                *gi = g;
                ok &= g.is_finite();
            }
            (f, ok)
        });
        finish(partials)
    }
}

/// `f(x) = ½ xᵀDx` with diagonal D log-spaced in `[1, condition]`, started from all ones.
#[derive(Debug, Clone)]
pub struct Quadratic {
    diag: Vec<f64>,
}

pub fn quadratic(n: usize, condition: f64) -> Result<Quadratic> {
    if n < 1 {
        return Err(Error::InvalidParameter("quadratic needs n >= 1".into()));
    }
    if !(condition >= 1.0) || !condition.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "quadratic condition must be a finite number >= 1, got {condition}"
        )));
    }
    let log_c = condition.ln();
    let diag = (0..n)
        .map(|i| if n == 1 { 1.0 } else { (log_c * i as f64 / (n - 1) as f64).exp() })
        .collect();
    Ok(Quadratic { diag })
}

impl Quadratic {
    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }
}

impl Objective for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dimension(&self) -> usize {
        self.diag.len()
    }

    fn initial_point(&self) -> Vector {
        Vector::filled(self.diag.len(), 1.0)
    }

    fn eval_into(&self, x: &Vector, grad: &mut Vector, plan: &ParallelPlan) -> Result<f64> {
        check_dims(self.diag.len(), x, grad)?;
        let d = &self.diag;
        let partials = plan.map_chunks_mut(grad, |off, chunk| {
            let mut f = 0.0;
            let mut ok = true;
            for (k, gi) in chunk.iter_mut().enumerate() {
                let i = off + k;
                *gi = d[i] * x[i];
                f += 0.5 * x[i] * *gi;
                ok &= gi.is_finite();
            }
            (f, ok)
        });
        finish(partials)
    }
}

/// Names accepted by [`by_name`].
pub const PROBLEM_NAMES: [&str; 4] = ["cosine", "noncvxun", "rosenbrock", "quadratic"];

/// Registry lookup; `condition` is only used by `quadratic`.
pub fn by_name(name: &str, n: usize, condition: f64) -> Result<Box<dyn Objective>> {
    Ok(match name {
        "cosine" => Box::new(cosine(n)?),
        "noncvxun" => Box::new(noncvxun(n)?),
        "rosenbrock" => Box::new(rosenbrock(n)?),
        "quadratic" => Box::new(quadratic(n, condition)?),
        other => return Err(Error::UnknownProblem(other.to_string())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn eval(obj: &dyn Objective, x: &[f64]) -> (f64, Vec<f64>) {
        let (f, g) = obj.eval(&Vector::from_slice(x).unwrap(), &ParallelPlan::sequential()).unwrap();
        (f, g.into_inner())
    }

    #[test]
    fn cosine_values() {
        let obj = cosine(2).unwrap();
        let (f, _) = eval(&obj, &[1.0, 1.0]);
        assert!((f - 0.5f64.cos()).abs() < 1e-15);
        assert!((f - 0.877583).abs() < 1e-6);
        let (f, g) = eval(&obj, &[0.0, 0.0]);
        assert_eq!(f, 1.0);
        assert_eq!(g, vec![0.0, 0.0]);
        assert!(cosine(1).is_err());
    }

    #[test]
    fn noncvxun_values() {
        let obj = noncvxun(1).unwrap();
        assert_eq!(eval(&obj, &[0.0]), (4.0, vec![0.0]));
        let (f, g) = eval(&noncvxun(2).unwrap(), &[PI, PI]);
        assert!((f - (2.0 * PI * PI - 8.0)).abs() < 1e-12);
        assert!((f - 11.7392).abs() < 1e-4);
        for gi in g {
            assert!((gi - 2.0 * PI).abs() < 1e-12);
        }
        let x0 = noncvxun(10).unwrap().initial_point();
        assert!((x0[0] - 2f64.ln()).abs() < 1e-15);
        assert!(noncvxun(0).is_err());
    }

    #[test]
    fn rosenbrock_values() {
        let obj = rosenbrock(2).unwrap();
        assert_eq!(eval(&obj, &[1.0, 1.0]), (0.0, vec![0.0, 0.0]));
        let (f, g) = eval(&obj, &[1.2, 1.2]);
        assert!((f - 5.8).abs() < 1e-12);
        // -400·1.2·(1.2 − 1.44) − 2·(1 − 1.2) = 115.2 + 0.4
        assert!((g[0] - 115.6).abs() < 1e-10);
        assert!((g[1] + 48.0).abs() < 1e-10);
        let (f, _) = eval(&obj, &[-1.2, 1.0]);
        assert!((f - 24.2).abs() < 1e-12);
        assert!(rosenbrock(1).is_err());
    }

    #[test]
    fn quadratic_values() {
        let (f, g) = eval(&quadratic(3, 1.0).unwrap(), &[1.0, 1.0, 1.0]);
        assert_eq!((f, g), (1.5, vec![1.0, 1.0, 1.0]));
        let q = quadratic(2, 100.0).unwrap();
        assert_eq!(eval(&q, &[1.0, 0.0]).0, 0.5);
        assert!((q.diagonal()[1] - 100.0).abs() < 1e-12);
        for n in [1, 5, 9] {
            let (f, g) = eval(&quadratic(n, 30.0).unwrap(), &vec![0.0; n]);
            assert_eq!(f, 0.0);
            assert!(g.iter().all(|&v| v == 0.0));
        }
        assert!(quadratic(3, 0.5).is_err());
        assert!(quadratic(0, 2.0).is_err());
    }

    #[test]
    fn registry() {
        for name in PROBLEM_NAMES {
            let obj = by_name(name, 4, 10.0).unwrap();
            assert_eq!(obj.name(), name);
            assert_eq!(obj.dimension(), 4);
        }
        assert_eq!(
            by_name("nosuch", 4, 1.0).err(),
            Some(Error::UnknownProblem("nosuch".into()))
        );
    }

    #[test]
    fn dimension_mismatch() {
        let obj = cosine(3).unwrap();
        assert!(obj.eval(&Vector::zeros(4), &ParallelPlan::sequential()).is_err());
    }

    #[test]
    fn nonfinite_surfaces() {
        let obj = rosenbrock(2).unwrap();
        let x = Vector::from_slice(&[f64::NAN, 1.0]).unwrap();
        assert!(obj.eval(&x, &ParallelPlan::sequential()).is_err());
    }

    #[test]
    fn chunk_boundaries_do_not_change_gradient() {
        let n = 37;
        let x = Vector::from_vec((0..n).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        for obj in [
            Box::new(cosine(n).unwrap()) as Box<dyn Objective>,
            Box::new(rosenbrock(n).unwrap()),
        ] {
            let (_, g_ref) = obj.eval(&x, &ParallelPlan::sequential()).unwrap();
            let plan = ParallelPlan::sequential().with_chunk_size(5).unwrap();
            let (_, g) = obj.eval(&x, &plan).unwrap();
            assert_eq!(g, g_ref);
        }
    }
}
