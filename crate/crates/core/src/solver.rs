//! Outer/inner iteration driver.
//!
//! Each outer iteration starts from an initial trial step (scaled gradient or
//! L-BFGS direction) and evaluates `f, ∇f` once per inner iteration at
//! `x_k + sᵗ`. A trial is accepted under the Armijo test
//! `f_k − fᵗ ≥ −ρΔ` with `Δ = g_kᵀsᵗ`. Rejected trials are replaced either by
//! the regularized multi-point step ([`Strategy::Ps`]) or by halving
//! ([`Strategy::Bt`]); in both cases `Δ` is updated from scalars.

use std::collections::VecDeque;
use std::mem;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::problems::Objective;
use crate::ps_step::{self, DEFAULT_ETA};
use crate::vec_engine::{self, dot, norm, ParallelPlan, Vector};

/// Length reduction used by the backtracking baseline.
pub const BACKTRACK_FACTOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Multi-point strategy: direction and length change between trials.
    Ps,
    /// Armijo backtracking: trials are halved along a fixed direction.
    Bt,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Ps => "ps",
            Strategy::Bt => "bt",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ps" => Ok(Strategy::Ps),
            "bt" => Ok(Strategy::Bt),
            other => Err(Error::InvalidParameter(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStep {
    /// `s⁰ = −ε g_k`
    Gradient,
    /// Two-loop L-BFGS direction with the given memory.
    Lbfgs { memory: usize },
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub rho: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub strategy: Strategy,
    pub init_step: InitStep,
    pub plan: ParallelPlan,
    /// Keep every trial point in [`SolveResult::trace`].
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: 0.1,
            eta: DEFAULT_ETA,
            epsilon: 1.0,
            tol: 1e-5,
            max_outer: 100,
            max_inner: 100,
            strategy: Strategy::Ps,
            init_step: InitStep::Gradient,
            plan: ParallelPlan::sequential(),
            record_trace: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.rho) {
            return Err(Error::InvalidParameter(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if !open_unit(self.eta) {
            return Err(Error::InvalidParameter(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_inner == 0 {
            return Err(Error::InvalidParameter("max_inner must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Converged,
    MaxOuter,
    MaxInner,
    NumericalError,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxOuter => "max_outer",
            Status::MaxInner => "max_inner",
            Status::NumericalError => "numerical_error",
        }
    }
}

/// One accepted outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Index of the new iterate (1 for the first accepted step).
    pub k: usize,
    /// Index `t` of the accepted trial; the outer iteration used `t + 1` evaluations.
    pub inner_count: usize,
    pub f_k: f64,
    /// `‖g‖ / max(‖x‖, 1)` at the new iterate.
    pub gnorm_scaled: f64,
    pub fevals_cum: usize,
    pub step_norm: f64,
    pub wall_time: Duration,
}

/// An evaluated trial point `x_k + sᵗ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialPoint {
    /// Outer iteration the trial belongs to (0-based, the iterate it started from).
    pub k: usize,
    pub t: usize,
    pub x: Vector,
    pub f: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x_star: Vector,
    pub f_star: f64,
    pub gnorm_scaled: f64,
    pub status: Status,
    pub history: Vec<IterationRecord>,
    pub trace: Option<Vec<TrialPoint>>,
    /// Objective evaluations, including the one at the starting point.
    pub fevals: usize,
    /// Cause of a [`Status::NumericalError`].
    pub error: Option<Error>,
}

impl SolveResult {
    pub fn outer_iterations(&self) -> usize {
        self.history.len()
    }

    pub fn max_inner_count(&self) -> usize {
        self.history.iter().map(|r| r.inner_count).max().unwrap_or(0)
    }
}

/// `s⁰ = −ε g`
pub fn initial_step_gradient(g: &Vector, epsilon: f64, plan: &ParallelPlan) -> Vector {
    vec_engine::scale(-epsilon, g, plan)
}

/// Curvature pairs from accepted steps, newest last.
#[derive(Debug, Clone)]
pub struct LbfgsMemory {
    capacity: usize,
    pairs: VecDeque<(Vector, Vector, f64)>,
}

impl LbfgsMemory {
    pub fn new(capacity: usize) -> Self {
        LbfgsMemory { capacity, pairs: VecDeque::with_capacity(capacity) }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Stores `(s, y)` if `sᵀy > 0`; returns whether it was kept.
    pub fn push(&mut self, s: Vector, y: Vector, plan: &ParallelPlan) -> Result<bool> {
        if self.capacity == 0 {
            return Ok(false);
        }
        let sy = dot(&s, &y, plan)?;
        if !(sy > 0.0) {
            return Ok(false);
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
        Ok(true)
    }
}

/// `−H g` by the two-loop recursion with initial scaling `(sᵀy/yᵀy) I`.
/// Falls back to `−g` when the result is not a descent direction.
pub fn initial_step_lbfgs(memory: &LbfgsMemory, g: &Vector, plan: &ParallelPlan) -> Result<Vector> {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.pairs.iter().rev() {
        let a = rho * dot(s, &q, plan)?;
        q = vec_engine::axpy(-a, y, &q, plan)?;
        alphas.push(a);
    }
    let gamma = match memory.pairs.back() {
        Some((s, y, _)) => dot(s, y, plan)? / dot(y, y, plan)?,
        None => 1.0,
    };
    let mut r = vec_engine::scale(gamma, &q, plan);
    for ((s, y, rho), a) in memory.pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &r, plan)?;
        r = vec_engine::axpy(a - b, s, &r, plan)?;
    }
    let d = vec_engine::scale(-1.0, &r, plan);
    if dot(g, &d, plan)? >= 0.0 {
        return Ok(initial_step_gradient(g, 1.0, plan));
    }
    Ok(d)
}

fn scaled_gnorm(x: &Vector, g: &Vector, plan: &ParallelPlan) -> Result<(f64, f64)> {
    let gn = norm(g, plan)?;
    Ok((gn, gn / norm(x, plan)?.max(1.0)))
}

/// Runs the configured strategy from `x0`.
pub fn solve(obj: &dyn Objective, x0: &Vector, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    if x0.len() != obj.dimension() {
        return Err(Error::LengthMismatch { left: obj.dimension(), right: x0.len() });
    }
    let start = Instant::now();
    let plan = &cfg.plan;
    let n = x0.len();

    let mut x = x0.clone();
    let mut g = Vector::zeros(n);
    let mut history = Vec::new();
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut fevals = 1;

    let finish = |x: Vector, f: f64, gs: f64, status, history, trace, fevals, error| SolveResult {
        x_star: x,
        f_star: f,
        gnorm_scaled: gs,
        status,
        history,
        trace,
        fevals,
        error,
    };

    let mut f = match obj.eval_into(&x, &mut g, plan) {
        Ok(f) => f,
        Err(e) => return Ok(finish(x, f64::NAN, f64::NAN, Status::NumericalError, history, trace, fevals, Some(e))),
    };
    let (mut gnorm, mut gs) = match scaled_gnorm(&x, &g, plan) {
        Ok(v) => v,
        Err(e) => return Ok(finish(x, f, f64::NAN, Status::NumericalError, history, trace, fevals, Some(e))),
    };

    let memory_cap = match cfg.init_step {
        InitStep::Lbfgs { memory } => memory,
        InitStep::Gradient => 0,
    };
    let mut memory = LbfgsMemory::new(memory_cap);

    let mut s = Vector::zeros(n);
    let mut s_next = Vector::zeros(n);
    let mut x_t = Vector::zeros(n);
    let mut g_t = Vector::zeros(n);
    let mut y = Vector::zeros(n);

    let mut k = 0;
    loop {
        if gnorm == 0.0 || gs < cfg.tol {
            return Ok(finish(x, f, gs, Status::Converged, history, trace, fevals, None));
        }
        if k >= cfg.max_outer {
            return Ok(finish(x, f, gs, Status::MaxOuter, history, trace, fevals, None));
        }

        // One outer iteration; any kernel or evaluation failure ends the solve.
        let outcome: Result<Option<(f64, usize)>> = (|| {
            s = match cfg.init_step {
                InitStep::Gradient => initial_step_gradient(&g, cfg.epsilon, plan),
                InitStep::Lbfgs { .. } => initial_step_lbfgs(&memory, &g, plan)?,
            };
            let mut delta = dot(&g, &s, plan)?;
            let mut t = 0;
            loop {
                vec_engine::axpy_into(&mut x_t, 1.0, &s, &x, plan)?;
                let f_t = obj.eval_into(&x_t, &mut g_t, plan)?;
                fevals += 1;
                if let Some(tr) = trace.as_mut() {
                    tr.push(TrialPoint { k, t, x: x_t.clone(), f: f_t });
                }
                if f - f_t >= -cfg.rho * delta {
                    return Ok(Some((f_t, t)));
                }
                if t >= cfg.max_inner {
                    return Ok(None);
                }
                match cfg.strategy {
                    Strategy::Ps => {
                        vec_engine::axpy_into(&mut y, -1.0, &g, &g_t, plan)?;
                        let v = vec_engine::fused_products(&s, &y, &g, plan)?;
                        let step = ps_step::plan_step(&v, cfg.eta)?;
                        delta = step.dirdot;
                        vec_engine::combine3_into(&mut s_next, step.c_g, &g, step.c_y, &y, step.c_s, &s, plan)?;
                        mem::swap(&mut s, &mut s_next);
                    }
                    Strategy::Bt => {
                        s = vec_engine::scale(BACKTRACK_FACTOR, &s, plan);
                        delta *= BACKTRACK_FACTOR;
                    }
                }
                t += 1;
            }
        })();

        let (f_t, t) = match outcome {
            Ok(Some(acc)) => acc,
            Ok(None) => return Ok(finish(x, f, gs, Status::MaxInner, history, trace, fevals, None)),
            Err(e) => return Ok(finish(x, f, gs, Status::NumericalError, history, trace, fevals, Some(e))),
        };

        let accepted: Result<f64> = (|| {
            let step_norm = norm(&s, plan)?;
            if memory_cap > 0 {
                let y_acc = vec_engine::axpy(-1.0, &g, &g_t, plan)?;
                memory.push(s.clone(), y_acc, plan)?;
            }
            Ok(step_norm)
        })();
        let step_norm = match accepted {
            Ok(v) => v,
            Err(e) => return Ok(finish(x, f, gs, Status::NumericalError, history, trace, fevals, Some(e))),
        };
        mem::swap(&mut x, &mut x_t);
        mem::swap(&mut g, &mut g_t);
        f = f_t;
        k += 1;
        match scaled_gnorm(&x, &g, plan) {
            Ok((a, b)) => {
                gnorm = a;
                gs = b;
            }
            Err(e) => return Ok(finish(x, f, f64::NAN, Status::NumericalError, history, trace, fevals, Some(e))),
        }
        history.push(IterationRecord {
            k,
            inner_count: t,
            f_k: f,
            gnorm_scaled: gs,
            fevals_cum: fevals,
            step_norm,
            wall_time: start.elapsed(),
        });
    }
}

/// [`solve`] with the backtracking baseline regardless of `cfg.strategy`.
pub fn backtracking_solve(obj: &dyn Objective, x0: &Vector, cfg: &SolverConfig) -> Result<SolveResult> {
    let cfg = SolverConfig { strategy: Strategy::Bt, ..cfg.clone() };
    solve(obj, x0, &cfg)
}

/// Every trial point of the first `k_max` outer iterations.
pub fn trace_trials(
    obj: &dyn Objective,
    x0: &Vector,
    cfg: &SolverConfig,
    k_max: usize,
) -> Result<(Vec<TrialPoint>, SolveResult)> {
    let cfg = SolverConfig {
        max_outer: k_max,
        record_trace: true,
        ..cfg.clone()
    };
    let mut res = solve(obj, x0, &cfg)?;
    let trace = res.trace.take().unwrap_or_default();
    Ok((trace, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{quadratic, rosenbrock};

    fn v(d: &[f64]) -> Vector {
        Vector::from_slice(d).unwrap()
    }

    #[test]
    fn gradient_step_cases() {
        let plan = ParallelPlan::sequential();
        let g = v(&[2.0, 0.0]);
        assert_eq!(initial_step_gradient(&g, 1.0, &plan).as_slice(), &[-2.0, 0.0]);
        assert_eq!(initial_step_gradient(&g, 0.5, &plan).as_slice(), &[-1.0, 0.0]);
    }

    #[test]
    fn lbfgs_without_memory_is_negative_gradient() {
        let plan = ParallelPlan::sequential();
        let g = v(&[2.0, -1.0, 0.5]);
        let mem = LbfgsMemory::new(0);
        assert_eq!(initial_step_lbfgs(&mem, &g, &plan).unwrap(), initial_step_gradient(&g, 1.0, &plan));
    }

    #[test]
    fn lbfgs_single_pair_hand_value() {
        let plan = ParallelPlan::sequential();
        let mut mem = LbfgsMemory::new(3);
        assert!(mem.push(v(&[1.0, 0.0, 0.0]), v(&[1.0, 0.0, 0.0]), &plan).unwrap());
        let d = initial_step_lbfgs(&mem, &v(&[1.0, 0.0, 0.0]), &plan).unwrap();
        assert_eq!(d.as_slice(), &[-1.0, 0.0, 0.0]);
    }

    #[test]
    fn lbfgs_skips_negative_curvature_pairs() {
        let plan = ParallelPlan::sequential();
        let mut mem = LbfgsMemory::new(2);
        assert!(!mem.push(v(&[1.0, 0.0]), v(&[-1.0, 0.0]), &plan).unwrap());
        assert!(mem.is_empty());
    }

    #[test]
    fn quadratic_one_step() {
        let obj = quadratic(2, 1.0).unwrap();
        let res = solve(&obj, &v(&[1.0, 1.0]), &SolverConfig::default()).unwrap();
        assert_eq!(res.status, Status::Converged);
        assert_eq!(res.outer_iterations(), 1);
        assert_eq!(res.fevals, 2);
        assert_eq!(res.f_star, 0.0);
        assert_eq!(res.history[0].inner_count, 0);
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let obj = rosenbrock(2).unwrap();
        let res = solve(&obj, &v(&[1.0, 1.0]), &SolverConfig::default()).unwrap();
        assert_eq!(res.status, Status::Converged);
        assert_eq!(res.outer_iterations(), 0);
        assert_eq!(res.fevals, 1);
    }

    #[test]
    fn config_validation() {
        let bad = [
            SolverConfig { rho: 0.0, ..Default::default() },
            SolverConfig { rho: 1.0, ..Default::default() },
            SolverConfig { eta: 1.0, ..Default::default() },
            SolverConfig { epsilon: 0.0, ..Default::default() },
            SolverConfig { epsilon: 1.5, ..Default::default() },
            SolverConfig { tol: 0.0, ..Default::default() },
            SolverConfig { max_inner: 0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert!(SolverConfig { epsilon: 1.0, ..Default::default() }.validate().is_ok());
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let obj = rosenbrock(3).unwrap();
        assert!(solve(&obj, &v(&[1.0, 1.0]), &SolverConfig::default()).is_err());
    }

    #[test]
    fn nonfinite_start_is_numerical_error() {
        let obj = rosenbrock(2).unwrap();
        let res = solve(&obj, &v(&[f64::NAN, 1.0]), &SolverConfig::default()).unwrap();
        assert_eq!(res.status, Status::NumericalError);
        assert!(res.error.is_some());
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("PS".parse::<Strategy>().unwrap(), Strategy::Ps);
        assert_eq!("bt".parse::<Strategy>().unwrap(), Strategy::Bt);
        assert!("mt".parse::<Strategy>().is_err());
    }
}
