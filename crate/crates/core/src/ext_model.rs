//! Extended two-point model.
//!
//! Around the current iterate `x_k` and a trial point `x_k + sᵗ` the model
//! blends the two linearizations
//!
//! ```text
//! l⁰(s)      = f_k + g_kᵀ s
//! lᵗ(s − sᵗ) = fᵗ + (gᵗ)ᵀ(s − sᵗ)
//! m(s)       = α⁰(s) l⁰(s) + αᵗ(s) lᵗ(s − sᵗ)
//! ```
//!
//! with projection weights `α⁰(s) = (s − sᵗ)ᵀ(−sᵗ)/‖sᵗ‖²` and
//! `αᵗ(s) = sᵀsᵗ/‖sᵗ‖²`. Inside the region `‖s‖² + ‖s − sᵗ‖² ≤ ‖sᵗ‖²` the
//! weights are a convex combination, so `m` interpolates between the two
//! linear models.
//!
//! This module also carries the convex-case subproblem solver (minimize `m`
//! over that region). It is a verified reference path; the production solver
//! uses the regularized step in [`crate::ps_step`].

use crate::error::{Error, Result};
use crate::vec_engine::{self, dot, fused_products, ParallelPlan, Vector};

/// Absolute slack used by [`constraint_holds`].
pub const CONSTRAINT_SLACK: f64 = 1e-12;

/// Curvature `(yᵗ)ᵀsᵗ` below this is treated as non-convex data.
pub const CONVEXITY_TOL: f64 = -1e-12;

/// Function value and gradient at the current iterate.
#[derive(Debug, Clone, Copy)]
pub struct Anchor<'a> {
    pub f: f64,
    pub g: &'a Vector,
}

impl<'a> Anchor<'a> {
    pub fn new(f: f64, g: &'a Vector) -> Self {
        Anchor { f, g }
    }
}

/// One inner iteration's data: trial step, trial point, value, gradient and
/// gradient difference `yᵗ = gᵗ − g_k`.
#[derive(Debug, Clone)]
pub struct TrialState {
    pub s_t: Vector,
    pub x_t: Vector,
    pub f_t: f64,
    pub g_t: Vector,
    pub y_t: Vector,
}

impl TrialState {
    /// Builds the state from the current point `x_k`, its gradient and the
    /// evaluation `(fᵗ, gᵗ)` at `x_k + sᵗ`.
    pub fn new(
        x_k: &Vector,
        g_k: &Vector,
        s_t: Vector,
        f_t: f64,
        g_t: Vector,
        plan: &ParallelPlan,
    ) -> Result<Self> {
        if dot(&s_t, &s_t, plan)? <= 0.0 {
            return Err(Error::ZeroTrialStep);
        }
        let x_t = vec_engine::axpy(1.0, &s_t, x_k, plan)?;
        let y_t = vec_engine::axpy(-1.0, g_k, &g_t, plan)?;
        Ok(TrialState { s_t, x_t, f_t, g_t, y_t })
    }

    /// Max elementwise deviation of the stored `yᵗ` from `gᵗ − g_k`.
    pub fn y_deviation(&self, g_k: &Vector) -> f64 {
        self.y_t
            .iter()
            .zip(self.g_t.iter().zip(g_k.iter()))
            .map(|(y, (gt, g))| (y - (gt - g)).abs())
            .fold(0.0, f64::max)
    }
}

/// Model value, gradient and the two weights at a point `s`.
#[derive(Debug, Clone)]
pub struct ModelEval {
    pub value: f64,
    pub gradient: Vector,
    pub alpha0: f64,
    pub alphat: f64,
}

/// Solution of the convex-case subproblem together with its multiplier.
#[derive(Debug, Clone)]
pub struct ConvexKkt {
    /// Multiplier of the region constraint, `β ≥ 0`.
    pub beta: f64,
    /// `fᵗ − f_k − (gᵗ)ᵀsᵗ − β`
    pub delta: f64,
    /// `((yᵗ)ᵀsᵗ + 2β)² − ‖sᵗ‖²‖yᵗ‖²`
    pub theta_beta: f64,
    pub step: Vector,
    /// Step lies strictly inside the region (`β = 0`).
    pub interior: bool,
    /// `g_kᵀ step > 0`: the step is not a descent direction for f at `x_k`.
    /// Convex-case steps can lose descent even when `sᵗ` had it.
    pub ascent: bool,
}

fn seq() -> ParallelPlan {
    ParallelPlan::sequential()
}

pub fn weights(s: &Vector, s_t: &Vector) -> Result<(f64, f64)> {
    let plan = seq();
    let nt = dot(s_t, s_t, &plan)?;
    if nt <= 0.0 {
        return Err(Error::ZeroTrialStep);
    }
    let diff = vec_engine::axpy(-1.0, s_t, s, &plan)?;
    let alpha0 = -dot(&diff, s_t, &plan)? / nt;
    let alphat = dot(s, s_t, &plan)? / nt;
    Ok((alpha0, alphat))
}

/// `‖s‖² + ‖s − sᵗ‖² ≤ ‖sᵗ‖²` up to [`CONSTRAINT_SLACK`]. Vectors of different
/// lengths or with non-finite entries never satisfy the constraint.
pub fn constraint_holds(s: &Vector, s_t: &Vector) -> bool {
    if s.len() != s_t.len() {
        return false;
    }
    let (mut ss, mut dd, mut tt) = (0.0, 0.0, 0.0);
    for (a, b) in s.iter().zip(s_t.iter()) {
        ss += a * a;
        dd += (a - b) * (a - b);
        tt += b * b;
    }
    let lhs = ss + dd;
    lhs.is_finite() && lhs <= tt + CONSTRAINT_SLACK
}

pub fn model_eval(s: &Vector, cur: Anchor<'_>, trial: &TrialState) -> Result<ModelEval> {
    let plan = seq();
    let (alpha0, alphat) = weights(s, &trial.s_t)?;
    let l0 = cur.f + dot(cur.g, s, &plan)?;
    let diff = vec_engine::axpy(-1.0, &trial.s_t, s, &plan)?;
    let lt = trial.f_t + dot(&trial.g_t, &diff, &plan)?;
    let value = alpha0 * l0 + alphat * lt;

    let nt = dot(&trial.s_t, &trial.s_t, &plan)?;
    let offset = trial.f_t - dot(&trial.g_t, &trial.s_t, &plan)? - cur.f;
    let ys = dot(&trial.y_t, s, &plan)?;
    let ts = dot(&trial.s_t, s, &plan)?;
    // g + (offset + yᵀs)/‖sᵗ‖² · sᵗ + (sᵗᵀs)/‖sᵗ‖² · y
    let gradient = vec_engine::combine3(
        1.0,
        cur.g,
        ts / nt,
        &trial.y_t,
        (offset + ys) / nt,
        &trial.s_t,
        &plan,
    )?;
    Ok(ModelEval { value, gradient, alpha0, alphat })
}

/// Model value through the simplified quadratic form `f_k + ḡᵀs + sᵀBs` with
/// `ḡ = g_k + (fᵗ − (gᵗ)ᵀsᵗ − f_k)/‖sᵗ‖² · sᵗ` and `B = sᵗ(yᵗ)ᵀ/‖sᵗ‖²`.
pub fn model_value_quadratic(s: &Vector, cur: Anchor<'_>, trial: &TrialState) -> Result<f64> {
    let plan = seq();
    let nt = dot(&trial.s_t, &trial.s_t, &plan)?;
    if nt <= 0.0 {
        return Err(Error::ZeroTrialStep);
    }
    let offset = trial.f_t - dot(&trial.g_t, &trial.s_t, &plan)? - cur.f;
    let ts = dot(&trial.s_t, s, &plan)?;
    let ys = dot(&trial.y_t, s, &plan)?;
    Ok(cur.f + dot(cur.g, s, &plan)? + offset * ts / nt + ts * ys / nt)
}

/// Minimizer of `α ↦ m(α sᵗ)` over `[0, 1]` for convex data.
pub fn convex_alpha_star(cur: Anchor<'_>, trial: &TrialState) -> Result<f64> {
    let plan = seq();
    let gs = dot(cur.g, &trial.s_t, &plan)?;
    if gs > 0.0 {
        return Err(Error::NotDescent(gs));
    }
    let curv = dot(&trial.y_t, &trial.s_t, &plan)?;
    if curv <= 0.0 {
        return Err(Error::NonConvex(curv));
    }
    let alpha = (curv - trial.f_t + cur.f) / (2.0 * curv);
    Ok(alpha.clamp(0.0, 1.0))
}

/// Multiplier-parameterized step `s(β) = c_g g + c_y y + c_s sᵗ` solving
/// `(2βI + sᵗyᵀ + y(sᵗ)ᵀ) s = −(δ₀ − β) sᵗ − ‖sᵗ‖² g`.
#[derive(Debug, Clone, Copy)]
struct BetaStep {
    cg: f64,
    cy: f64,
    cs: f64,
    delta: f64,
    theta: f64,
}

#[derive(Debug, Clone, Copy)]
struct ConvexData {
    v1: f64,
    v2: f64,
    v3: f64,
    v4: f64,
    v5: f64,
    v6: f64,
    /// `fᵗ − f_k − (gᵗ)ᵀsᵗ`
    offset: f64,
}

impl ConvexData {
    fn step(&self, beta: f64) -> BetaStep {
        let delta = self.offset - beta;
        let p = self.v1 + 2.0 * beta;
        let root = (self.v2 * self.v3).sqrt();
        let theta = (p - root) * (p + root);
        let cg = -self.v2 / (2.0 * beta);
        let rhs_s = -delta - cg * self.v4;
        let rhs_y = -cg * self.v6;
        let cs = (p * rhs_s - self.v3 * rhs_y) / theta;
        let cy = (p * rhs_y - self.v2 * rhs_s) / theta;
        BetaStep { cg, cy, cs, delta, theta }
    }

    /// Complementarity residual `(s(β) − sᵗ)ᵀ s(β)` from the Gram scalars.
    fn residual(&self, beta: f64) -> f64 {
        let BetaStep { cg: a, cy: b, cs: c, .. } = self.step(beta);
        let ss = a * a * self.v5
            + b * b * self.v3
            + c * c * self.v2
            + 2.0 * (a * b * self.v4 + a * c * self.v6 + b * c * self.v1);
        let st = a * self.v6 + b * self.v1 + c * self.v2;
        ss - st
    }

    fn collinear(&self) -> bool {
        let tol = 1e-12;
        self.v2 * self.v5 - self.v6 * self.v6 <= tol * self.v2 * self.v5
            && self.v2 * self.v3 - self.v1 * self.v1 <= tol * self.v2 * self.v3
    }
}

/// Solves `min m(s)` subject to `‖s‖² + ‖s − sᵗ‖² ≤ ‖sᵗ‖²` for convex data.
///
/// The interior (`β = 0`) candidate is tried first. Otherwise the multiplier
/// is located by bisection on the complementarity residual over
/// `β > max(0, (‖sᵗ‖‖yᵗ‖ − (yᵗ)ᵀsᵗ)/2)`, where the KKT matrix is positive
/// definite and the residual is strictly decreasing.
pub fn convex_subproblem(cur: Anchor<'_>, trial: &TrialState) -> Result<ConvexKkt> {
    let plan = seq();
    let v = fused_products(&trial.s_t, &trial.y_t, cur.g, &plan)?;
    if v.v2 <= 0.0 {
        return Err(Error::ZeroTrialStep);
    }
    if v.v6 > 0.0 {
        return Err(Error::NotDescent(v.v6));
    }
    if v.v1 < CONVEXITY_TOL {
        return Err(Error::NonConvex(v.v1));
    }
    let data = ConvexData {
        v1: v.v1,
        v2: v.v2,
        v3: v.v3,
        v4: v.v4,
        v5: v.v5,
        v6: v.v6,
        offset: trial.f_t - cur.f - dot(&trial.g_t, &trial.s_t, &plan)?,
    };

    if data.v1 > 0.0 && data.collinear() {
        // m(α sᵗ) − f_k = α(fᵗ − f_k) − α(1 − α)v1 with fᵗ − f_k = offset + v1 + v6
        let alpha = (-(data.offset + data.v6) / (2.0 * data.v1)).max(0.0);
        if alpha <= 1.0 {
            let step = vec_engine::scale(alpha, &trial.s_t, &plan);
            let gd = alpha * data.v6;
            return Ok(ConvexKkt {
                beta: 0.0,
                delta: data.offset,
                theta_beta: data.v1 * data.v1 - data.v2 * data.v3,
                step,
                interior: true,
                ascent: gd > 0.0,
            });
        }
        // the model is flat across sᵗ, so the minimizer is the far end sᵗ itself
        let beta = -(data.offset + data.v6 + 2.0 * data.v1);
        return Ok(ConvexKkt {
            beta,
            delta: data.offset - beta,
            theta_beta: 4.0 * beta * (data.v1 + beta),
            step: trial.s_t.clone(),
            interior: false,
            ascent: data.v6 > 0.0,
        });
    }

    let beta_floor = (0.5 * ((data.v2 * data.v3).sqrt() - data.v1)).max(0.0);
    let scale = data
        .offset
        .abs()
        .max((data.v2 * data.v3).sqrt())
        .max((data.v2 * data.v5).sqrt())
        .max(f64::MIN_POSITIVE);
    let mut lo = beta_floor + 1e-12 * scale;
    if !(data.residual(lo) > 0.0) {
        return Err(Error::NoSignChange);
    }
    let mut hi = None;
    let mut width = 1e-12 * scale;
    while width <= 1e12 * scale {
        let b = beta_floor + width;
        if data.residual(b) < 0.0 {
            hi = Some(b);
            break;
        }
        lo = lo.max(b);
        width *= 10.0;
    }
    let mut hi = hi.ok_or(Error::NoSignChange)?;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = data.residual(mid);
        if r > 0.0 {
            lo = mid;
        } else if r < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            hi = mid;
        }
    }
    let mut beta = hi;
    let mut bs = data.step(beta);
    if bs.theta.abs() < 1e-14 * data.v2 * data.v3 {
        beta += 1e-10 * scale;
        bs = data.step(beta);
        if bs.theta.abs() < 1e-14 * data.v2 * data.v3 {
            return Err(Error::NoSignChange);
        }
    }
    let mut step = vec_engine::combine3(bs.cg, cur.g, bs.cy, &trial.y_t, bs.cs, &trial.s_t, &plan)?;
    let mut shrink = 1e-15;
    while !constraint_holds(&step, &trial.s_t) && shrink <= 1e-9 {
        // pull a boundary point whose rounding overshoots the slack towards the centre sᵗ/2
        step = vec_engine::axpy(0.5 * shrink, &trial.s_t, &vec_engine::scale(1.0 - shrink, &step, &plan), &plan)?;
        shrink *= 4.0;
    }
    let gd = bs.cg * data.v5 + bs.cy * data.v4 + bs.cs * data.v6;
    Ok(ConvexKkt {
        beta,
        delta: bs.delta,
        theta_beta: bs.theta,
        step,
        interior: false,
        ascent: gd > 0.0,
    })
}

/// `‖∇m(s) + (β/‖sᵗ‖²)(2s − sᵗ)‖`: stationarity residual of the subproblem
/// Lagrangian scaled by `1/‖sᵗ‖²`.
pub fn kkt_residual(s: &Vector, beta: f64, cur: Anchor<'_>, trial: &TrialState) -> Result<f64> {
    let plan = seq();
    let m = model_eval(s, cur, trial)?;
    let nt = dot(&trial.s_t, &trial.s_t, &plan)?;
    let cons_grad = vec_engine::axpy(2.0, s, &vec_engine::scale(-1.0, &trial.s_t, &plan), &plan)?;
    let r = vec_engine::axpy(beta / nt, &cons_grad, &m.gradient, &plan)?;
    vec_engine::norm(&r, &plan)
}

/// `(step − sᵗ)ᵀ step`, zero on the region boundary.
pub fn boundary_residual(step: &Vector, s_t: &Vector) -> Result<f64> {
    let plan = seq();
    let diff = vec_engine::axpy(-1.0, s_t, step, &plan)?;
    dot(&diff, step, &plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(d: &[f64]) -> Vector {
        Vector::from_slice(d).unwrap()
    }

    /// 1-D f(x) = x², x_k = 1, sᵗ = −2.
    fn parabola_trial() -> (f64, Vector, TrialState) {
        let plan = seq();
        let x_k = v(&[1.0]);
        let g_k = v(&[2.0]);
        let trial = TrialState::new(&x_k, &g_k, v(&[-2.0]), 1.0, v(&[-2.0]), &plan).unwrap();
        (1.0, g_k, trial)
    }

    #[test]
    fn weights_cases() {
        let st = v(&[2.0, -1.0, 0.5]);
        assert_eq!(weights(&Vector::zeros(3), &st).unwrap(), (1.0, 0.0));
        assert_eq!(weights(&st, &st).unwrap(), (0.0, 1.0));
        let half = v(&[1.0, -0.5, 0.25]);
        let (a0, at) = weights(&half, &st).unwrap();
        assert!((a0 - 0.5).abs() < 1e-15 && (at - 0.5).abs() < 1e-15);
        assert_eq!(weights(&st, &Vector::zeros(3)), Err(Error::ZeroTrialStep));
    }

    #[test]
    fn constraint_cases() {
        let st = v(&[1.0, 2.0]);
        assert!(constraint_holds(&v(&[0.5, 1.0]), &st));
        assert!(!constraint_holds(&v(&[2.0, 4.0]), &st));
        // s = −ξ g with ξ = −gᵀsᵗ/‖g‖² lies on the boundary
        let g = v(&[-1.0, -0.5]);
        let gs = g[0] * st[0] + g[1] * st[1];
        assert!(gs < 0.0);
        let xi = -gs / (g[0] * g[0] + g[1] * g[1]);
        assert!(constraint_holds(&v(&[-xi * g[0], -xi * g[1]]), &st));
        assert!(!constraint_holds(&v(&[1.0]), &st));
    }

    #[test]
    fn model_at_endpoints() {
        let plan = seq();
        let x_k = v(&[0.3, -0.2]);
        let g_k = v(&[1.0, 2.0]);
        let s_t = v(&[-0.5, -0.7]);
        let trial = TrialState::new(&x_k, &g_k, s_t.clone(), 0.7, v(&[0.4, -0.1]), &plan).unwrap();
        let cur = Anchor::new(1.3, &g_k);
        let m0 = model_eval(&Vector::zeros(2), cur, &trial).unwrap();
        assert!((m0.value - 1.3).abs() < 1e-15);
        let nt = 0.25 + 0.49;
        let gts = 0.4 * -0.5 + -0.1 * -0.7;
        let c = (0.7 - gts - 1.3) / nt;
        assert!((m0.gradient[0] - (1.0 + c * -0.5)).abs() < 1e-14);
        assert!((m0.gradient[1] - (2.0 + c * -0.7)).abs() < 1e-14);
        let mt = model_eval(&s_t, cur, &trial).unwrap();
        assert!((mt.value - 0.7).abs() < 1e-15);
        assert_eq!((mt.alpha0, mt.alphat), (0.0, 1.0));
    }

    #[test]
    fn trial_state_rejects_zero_step() {
        let plan = seq();
        let z = Vector::zeros(2);
        assert!(matches!(
            TrialState::new(&z, &z, z.clone(), 0.0, z.clone(), &plan),
            Err(Error::ZeroTrialStep)
        ));
    }

    #[test]
    fn alpha_star_parabola() {
        let (f_k, g_k, trial) = parabola_trial();
        let a = convex_alpha_star(Anchor::new(f_k, &g_k), &trial).unwrap();
        assert!((a - 0.5).abs() < 1e-15);
    }

    #[test]
    fn alpha_star_clamps_at_one() {
        // fᵗ = f_k − yᵀs makes the unclamped ratio exactly 1
        let plan = seq();
        let x_k = v(&[0.0, 0.0]);
        let g_k = v(&[-1.0, 0.0]);
        let s_t = v(&[1.0, 0.0]);
        let g_t = v(&[1.0, 0.0]);
        let trial = TrialState::new(&x_k, &g_k, s_t, 5.0 - 2.0, g_t, &plan).unwrap();
        let a = convex_alpha_star(Anchor::new(5.0, &g_k), &trial).unwrap();
        assert_eq!(a, 1.0);
    }

    #[test]
    fn alpha_star_errors() {
        let plan = seq();
        let x_k = v(&[0.0]);
        let g_k = v(&[1.0]);
        let trial = TrialState::new(&x_k, &g_k, v(&[1.0]), 2.0, v(&[2.0]), &plan).unwrap();
        assert!(matches!(
            convex_alpha_star(Anchor::new(0.0, &g_k), &trial),
            Err(Error::NotDescent(_))
        ));
        let trial = TrialState::new(&x_k, &g_k, v(&[-1.0]), 2.0, v(&[2.0]), &plan).unwrap();
        assert!(matches!(
            convex_alpha_star(Anchor::new(0.0, &g_k), &trial),
            Err(Error::NonConvex(_))
        ));
    }

    #[test]
    fn subproblem_interior_is_alpha_star_step() {
        let (f_k, g_k, trial) = parabola_trial();
        let cur = Anchor::new(f_k, &g_k);
        let kkt = convex_subproblem(cur, &trial).unwrap();
        assert!(kkt.interior);
        assert_eq!(kkt.beta, 0.0);
        assert!((kkt.step[0] + 1.0).abs() < 1e-15);
        assert!(!kkt.ascent);
    }

    #[test]
    fn subproblem_boundary_hits_global_min_of_sphere() {
        // f = ½‖x‖², x_k = (1, 0), sᵗ = (−1, 0) lands on the minimizer
        let plan = seq();
        let x_k = v(&[1.0, 0.0]);
        let g_k = v(&[1.0, 0.0]);
        let trial = TrialState::new(&x_k, &g_k, v(&[-1.0, 0.0]), 0.0, v(&[0.0, 0.0]), &plan).unwrap();
        let cur = Anchor::new(0.5, &g_k);
        let kkt = convex_subproblem(cur, &trial).unwrap();
        assert!(constraint_holds(&kkt.step, &trial.s_t));
        let best_line = model_eval(
            &vec_engine::scale(convex_alpha_star(cur, &trial).unwrap(), &trial.s_t, &plan),
            cur,
            &trial,
        )
        .unwrap()
        .value;
        let val = model_eval(&kkt.step, cur, &trial).unwrap().value;
        assert!(val <= best_line + 1e-12);
        assert!(kkt_residual(&kkt.step, kkt.beta, cur, &trial).unwrap() <= 1e-8 * 2.0);
    }

    #[test]
    fn subproblem_errors() {
        let plan = seq();
        let x_k = v(&[0.0, 0.0]);
        let g_k = v(&[1.0, 0.0]);
        let up = TrialState::new(&x_k, &g_k, v(&[1.0, 0.0]), 1.0, v(&[2.0, 0.0]), &plan).unwrap();
        assert!(matches!(
            convex_subproblem(Anchor::new(0.0, &g_k), &up),
            Err(Error::NotDescent(_))
        ));
        let bent = TrialState::new(&x_k, &g_k, v(&[-1.0, 0.0]), 1.0, v(&[2.0, 0.0]), &plan).unwrap();
        assert!(matches!(
            convex_subproblem(Anchor::new(0.0, &g_k), &bent),
            Err(Error::NonConvex(_))
        ));
    }

    #[test]
    fn y_deviation_is_zero_for_constructed_state() {
        let (_, g_k, trial) = parabola_trial();
        assert_eq!(trial.y_deviation(&g_k), 0.0);
    }
}
