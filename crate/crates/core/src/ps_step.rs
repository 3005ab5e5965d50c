//! Regularized trial-step update for general objectives.
//!
//! With `σ = ½(‖sᵗ‖(‖yᵗ‖ + ‖g‖/η) − (yᵗ)ᵀsᵗ)` the matrix
//! `B̄ = 2σI + sᵗ(yᵗ)ᵀ + yᵗ(sᵗ)ᵀ` is positive definite with smallest
//! eigenvalue `‖sᵗ‖‖g‖/η`, and the next trial step
//!
//! ```text
//! sᵗ⁺¹ = −‖sᵗ‖² B̄⁻¹ g = c_g g + c_y yᵗ + c_s sᵗ
//! ```
//!
//! is no longer than `η‖sᵗ‖`. The coefficients come from the six inner
//! products alone; no matrix is ever formed outside [`dfp_identity_check`].

use crate::error::{Error, Result};
use crate::ext_model::{Anchor, TrialState};
use crate::oracle::DenseMatrix;
use crate::vec_engine::{self, fused_products, InnerProducts, ParallelPlan, Vector};

pub const DEFAULT_ETA: f64 = 0.5;

/// Relative excess over `η‖sᵗ‖` tolerated before falling back to a scaled
/// gradient step.
const CONTRACTION_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepCoefficients {
    pub sigma: f64,
    pub theta: f64,
    pub c_g: f64,
    pub c_s: f64,
    pub c_y: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Scalar-only coefficient block: no vector is touched.
pub fn coefficients(v: &InnerProducts, eta: f64) -> Result<StepCoefficients> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1), got {eta}")));
    }
    if !(v.v2 > 0.0) {
        return Err(Error::ZeroTrialStep);
    }
    if !(v.v5 > 0.0) {
        return Err(Error::StationaryPoint);
    }
    let root_s = v.v2.sqrt();
    // ‖s‖‖y‖ and ‖s‖‖g‖/η
    let sy = root_s * v.v3.sqrt();
    let sg = root_s * v.v5.sqrt() / eta;
    let sigma = 0.5 * (sy + sg - v.v1);
    // v1 + 2σ = sy + sg exactly, so θ = (v1 + 2σ)² − v2·v3 = sg·(2·sy + sg)
    let p = sy + sg;
    let theta = sg * (2.0 * sy + sg);
    let c_g = -v.v2 / (2.0 * sigma);
    let c_y = c_g * (-(p / theta) * v.v6 + (v.v2 / theta) * v.v4);
    let c_s = c_g * (-(p / theta) * v.v4 + (v.v3 / theta) * v.v6);
    let (lambda_min, lambda_max, _) = bbar_eigenvalues(v, sigma);
    Ok(StepCoefficients { sigma, theta, c_g, c_s, c_y, lambda_min, lambda_max })
}

/// `(λ_min, λ_max, λ_bulk)` of `2σI + sᵗ(yᵗ)ᵀ + yᵗ(sᵗ)ᵀ`; the bulk value has
/// multiplicity n − 2.
pub fn bbar_eigenvalues(v: &InnerProducts, sigma: f64) -> (f64, f64, f64) {
    let root = (v.v2 * v.v3).sqrt();
    (2.0 * sigma - root + v.v1, 2.0 * sigma + root + v.v1, 2.0 * sigma)
}

/// Coefficients plus the directional derivative `g_kᵀsᵗ⁺¹` obtained from scalars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPlan {
    pub coeffs: StepCoefficients,
    pub c_g: f64,
    pub c_y: f64,
    pub c_s: f64,
    pub dirdot: f64,
    /// The contraction guard replaced the closed-form step by `−η‖sᵗ‖/‖g‖ · g`.
    pub fallback: bool,
}

/// Plans the next trial step from the six inner products.
pub fn plan_step(v: &InnerProducts, eta: f64) -> Result<StepPlan> {
    let coeffs = coefficients(v, eta)?;
    let (a, b, c) = (coeffs.c_g, coeffs.c_y, coeffs.c_s);
    // ‖a g + b y + c s‖² from the Gram scalars
    let len2 = a * a * v.v5
        + b * b * v.v3
        + c * c * v.v2
        + 2.0 * (a * b * v.v4 + a * c * v.v6 + b * c * v.v1);
    let bound = eta * v.v2.sqrt();
    let dirdot = a * v.v5 + b * v.v4 + c * v.v6;
    if len2.sqrt() > bound * (1.0 + CONTRACTION_GUARD) || !(dirdot < 0.0) {
        let gn = v.v5.sqrt();
        let a = -bound / gn;
        return Ok(StepPlan {
            coeffs,
            c_g: a,
            c_y: 0.0,
            c_s: 0.0,
            dirdot: a * v.v5,
            fallback: true,
        });
    }
    Ok(StepPlan { coeffs, c_g: a, c_y: b, c_s: c, dirdot, fallback: false })
}

#[derive(Debug, Clone)]
pub struct GeneralStep {
    pub s_next: Vector,
    pub coeffs: StepCoefficients,
    /// `g_kᵀ s_next`
    pub dirdot: f64,
    pub fallback: bool,
}

pub fn general_step(
    cur: Anchor<'_>,
    trial: &TrialState,
    eta: f64,
    plan: &ParallelPlan,
) -> Result<GeneralStep> {
    let v = fused_products(&trial.s_t, &trial.y_t, cur.g, plan)?;
    let sp = plan_step(&v, eta)?;
    let s_next = vec_engine::combine3(sp.c_g, cur.g, sp.c_y, &trial.y_t, sp.c_s, &trial.s_t, plan)?;
    Ok(GeneralStep {
        s_next,
        coeffs: sp.coeffs,
        dirdot: sp.dirdot,
        fallback: sp.fallback,
    })
}

/// Largest dimension accepted by [`dfp_identity_check`].
pub const MAX_DFP_DIM: usize = 50;

/// Max entrywise deviation between the model Hessian
/// `H = (2σI + sᵗyᵀ + y(sᵗ)ᵀ)/‖sᵗ‖²` and the DFP update of
/// `D = −((yᵗ)ᵀsᵗ/‖sᵗ‖²) I` shifted by `((‖yᵗ‖ + ‖g‖/η)/‖sᵗ‖) I`.
pub fn dfp_identity_check(cur: Anchor<'_>, trial: &TrialState, eta: f64) -> Result<f64> {
    let s = trial.s_t.as_slice();
    let y = trial.y_t.as_slice();
    let g = cur.g.as_slice();
    let n = s.len();
    if n > MAX_DFP_DIM {
        return Err(Error::InvalidParameter(format!("dense check limited to n <= {MAX_DFP_DIM}")));
    }
    if y.len() != n || g.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y.len().max(g.len()) });
    }
    let dotp = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, z)| x * z).sum::<f64>();
    let ss = dotp(s, s);
    if ss <= 0.0 {
        return Err(Error::ZeroTrialStep);
    }
    let ys = dotp(y, s);
    if ys == 0.0 {
        return Err(Error::ZeroCurvature);
    }
    let (sn, yn, gn) = (ss.sqrt(), dotp(y, y).sqrt(), dotp(g, g).sqrt());

    let eye = DenseMatrix::identity(n);
    let d_k = eye.scaled(-ys / ss);
    let left = eye.sub(&DenseMatrix::outer(y, s).scaled(1.0 / ys));
    let right = eye.sub(&DenseMatrix::outer(s, y).scaled(1.0 / ys));
    let d_next = left.matmul(&d_k).matmul(&right).add(&DenseMatrix::outer(y, y).scaled(1.0 / ys));

    let sigma = 0.5 * (sn * (yn + gn / eta) - ys);
    let h = DenseMatrix::bbar(s, y, sigma).scaled(1.0 / ss);
    let shift = (yn + gn / eta) / sn;
    let diff = h.sub(&d_next).sub(&eye.scaled(shift));
    Ok(diff.max_abs())
}
