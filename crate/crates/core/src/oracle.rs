//! Brute-force reference computations for small instances.
//!
//! Nothing here calls into the kernels or step formulas it is used to check:
//! every routine works on plain slices with textbook loops. Single-threaded,
//! meant for n up to a few hundred.

use crate::error::{Error, Result};

/// Largest dimension accepted by the dense solvers.
pub const MAX_DENSE_DIM: usize = 200;

/// Row-major n×n matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::LengthMismatch { left: n, right: r.len() });
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    /// `u vᵀ`
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        Self::from_fn(u.len(), |i, j| u[i] * v[j])
    }

    /// `2σI + s yᵀ + y sᵀ`
    pub fn bbar(s: &[f64], y: &[f64], sigma: f64) -> Self {
        Self::from_fn(s.len(), |i, j| {
            let d = if i == j { 2.0 * sigma } else { 0.0 };
            d + s[i] * y[j] + y[i] * s[j]
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(i, j) + other.get(i, j))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(i, j) - other.get(i, j))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::from_fn(self.n, |i, j| a * self.get(i, j))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn check_symmetric(&self) -> Result<()> {
        let asym = self.max_asymmetry();
        if asym > 1e-14 * self.max_abs().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(())
    }

    /// Lower Cholesky factor, or an error if the matrix is not positive definite.
    pub fn cholesky(&self) -> Result<DenseMatrix> {
        let n = self.n;
        let mut l = Self::zeros(n);
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l.get(j, k) * l.get(j, k);
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite);
            }
            let d = d.sqrt();
            l.set(j, j, d);
            for i in j + 1..n {
                let mut v = self.get(i, j);
                for k in 0..j {
                    v -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, v / d);
            }
        }
        Ok(l)
    }

    /// Solves `A x = b` for symmetric positive definite `A`.
    pub fn solve_spd(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::LengthMismatch { left: self.n, right: b.len() });
        }
        let l = self.cholesky()?;
        let n = self.n;
        let mut z = vec![0.0; n];
        for i in 0..n {
            let mut v = b[i];
            for k in 0..i {
                v -= l.get(i, k) * z[k];
            }
            z[i] = v / l.get(i, i);
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut v = z[i];
            for k in i + 1..n {
                v -= l.get(k, i) * x[k];
            }
            x[i] = v / l.get(i, i);
        }
        Ok(x)
    }
}

/// Solves `(2σI + sᵗyᵀ + y(sᵗ)ᵀ) x = −‖sᵗ‖² g` by Cholesky factorization.
pub fn dense_bbar_solve(s_t: &[f64], y_t: &[f64], g: &[f64], sigma: f64) -> Result<Vec<f64>> {
    let n = s_t.len();
    if y_t.len() != n || g.len() != n {
        return Err(Error::LengthMismatch { left: n, right: y_t.len().max(g.len()) });
    }
    if n > MAX_DENSE_DIM {
        return Err(Error::InvalidParameter(format!("dense oracle limited to n <= {MAX_DENSE_DIM}")));
    }
    let a = DenseMatrix::bbar(s_t, y_t, sigma);
    let ss: f64 = s_t.iter().map(|v| v * v).sum();
    let rhs: Vec<f64> = g.iter().map(|v| -ss * v).collect();
    a.solve_spd(&rhs)
}

/// Eigenvalues (ascending) and matching unit eigenvectors of a symmetric
/// matrix, by cyclic Jacobi rotations. `vectors[k]` pairs with `values[k]`.
pub fn dense_eigen_pairs(a: &DenseMatrix) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    a.check_symmetric()?;
    let n = a.dim();
    if n > MAX_DENSE_DIM {
        return Err(Error::InvalidParameter(format!("dense oracle limited to n <= {MAX_DENSE_DIM}")));
    }
    let mut m = a.clone();
    // symmetrize exactly so rotations see one value per pair
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set(i, j, avg);
            m.set(j, i, avg);
        }
    }
    let mut v = DenseMatrix::identity(n);
    let scale = m.max_abs().max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..i {
                off += m.get(i, j) * m.get(i, j);
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                m.set(p, q, 0.0);
                m.set(q, p, 0.0);
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).total_cmp(&m.get(j, j)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v.get(k, i)).collect())
        .collect();
    Ok((values, vectors))
}

/// Full spectrum of a symmetric matrix, ascending.
pub fn dense_eigs(a: &DenseMatrix) -> Result<Vec<f64>> {
    dense_eigen_pairs(a).map(|(values, _)| values)
}

/// Central differences `(f(x + h eᵢ) − f(x − h eᵢ)) / 2h` with a per-coordinate
/// step `h(i)`.
pub fn finite_diff_grad_with(
    f: impl Fn(&[f64]) -> f64,
    x: &[f64],
    h: impl Fn(usize) -> f64,
) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let hi = h(i);
        if !(hi > 0.0) {
            return Err(Error::InvalidParameter(format!("finite-difference step must be positive, got {hi}")));
        }
        probe[i] = x[i] + hi;
        let fp = f(&probe);
        probe[i] = x[i] - hi;
        let fm = f(&probe);
        probe[i] = x[i];
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFinite("finite difference"));
        }
        grad.push((fp - fm) / (2.0 * hi));
    }
    Ok(grad)
}

pub fn finite_diff_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Result<Vec<f64>> {
    finite_diff_grad_with(f, x, |_| h)
}

/// Compensated (Neumaier) sum.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn kahan_dot(a: &[f64], b: &[f64]) -> f64 {
    kahan_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Plain left-to-right dot product.
pub fn sequential_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Golden-section search for the minimizer of a unimodal `f` on `[lo, hi]`.
///
/// Values only need a partial order, so `f` may return a [`DoubleDouble`]
/// when `f64` comparisons cannot resolve the minimizer to `tol`.
pub fn golden_section_min<T: PartialOrd>(f: impl Fn(f64) -> T, lo: f64, hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    // compare the bracket ends too, so boundary minimizers are returned exactly
    let mid = 0.5 * (a + b);
    [(lo, f(lo)), (hi, f(hi)), (mid, f(mid))]
        .into_iter()
        .reduce(|best, p| if p.1 < best.1 { p } else { best })
        .map(|p| p.0)
        .unwrap_or(mid)
}

/// Unevaluated sum `hi + lo` carrying roughly 106 significant bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> DoubleDouble {
    let s = a + b;
    DoubleDouble { hi: s, lo: b - (s - a) }
}

impl DoubleDouble {
    pub fn new(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble::new(x)
    }
}

impl std::ops::Add for DoubleDouble {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let r = quick_two_sum(s, e + t);
        quick_two_sum(r.hi, r.lo + f)
    }
}

impl std::ops::Neg for DoubleDouble {
    type Output = Self;

    fn neg(self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl std::ops::Sub for DoubleDouble {
    type Output = Self;

    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl std::ops::Mul for DoubleDouble {
    type Output = Self;

    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        quick_two_sum(p, e)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        match self.hi.partial_cmp(&o.hi) {
            Some(std::cmp::Ordering::Equal) => self.lo.partial_cmp(&o.lo),
            ord => ord,
        }
    }
}

/// Orthonormal basis (modified Gram–Schmidt) of the span of `vectors`,
/// dropping directions that are numerically dependent.
fn orthonormalize(vectors: &[&[f64]]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if scale == 0.0 {
            continue;
        }
        let mut w = v.to_vec();
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let nrm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 1e-10 * scale {
            basis.push(w.into_iter().map(|x| x / nrm).collect());
        }
    }
    basis
}

/// Exhaustive minimization of `model` over the span of up to three vectors.
///
/// The span is orthonormalized and sampled on a `resolution`-per-axis grid
/// covering `[−half_width, half_width]` in each coordinate. Points failing
/// `feasible` are skipped. One refinement pass (21 points per axis spanning
/// ±1 coarse spacing) is run around the incumbent.
pub fn subspace_grid_min(
    model: &dyn Fn(&[f64]) -> f64,
    basis: &[&[f64]],
    feasible: &dyn Fn(&[f64]) -> bool,
    half_width: f64,
    resolution: usize,
) -> Result<(Vec<f64>, f64)> {
    if !(2..=201).contains(&resolution) {
        return Err(Error::InvalidParameter(format!("grid resolution must be in 2..=201, got {resolution}")));
    }
    let n = basis.first().map(|b| b.len()).unwrap_or(0);
    if n == 0 || basis.len() > 3 || basis.iter().any(|b| b.len() != n) {
        return Err(Error::InvalidParameter("basis must hold 1 to 3 vectors of equal length".into()));
    }
    let q = orthonormalize(basis);
    let dim = q.len();
    let mut point = vec![0.0; n];
    let mut best: Option<(Vec<f64>, f64)> = None;

    let mut scan = |center: &[f64; 3], width: f64, res: usize, best: &mut Option<(Vec<f64>, f64)>| {
        let step = 2.0 * width / (res - 1) as f64;
        let axis = |c: f64, k: usize| c - width + step * k as f64;
        let counts = [res, if dim > 1 { res } else { 1 }, if dim > 2 { res } else { 1 }];
        for i in 0..counts[0] {
            for j in 0..counts[1] {
                for k in 0..counts[2] {
                    let z = [axis(center[0], i), axis(center[1], j), axis(center[2], k)];
                    point.iter_mut().for_each(|p| *p = 0.0);
                    for (d, qd) in q.iter().enumerate() {
                        for (p, qv) in point.iter_mut().zip(qd) {
                            *p += z[d] * qv;
                        }
                    }
                    if !feasible(&point) {
                        continue;
                    }
                    let val = model(&point);
                    if best.as_ref().is_none_or(|(_, b)| val < *b) {
                        *best = Some((point.clone(), val));
                    }
                }
            }
        }
        step
    };

    if dim == 0 {
        let zero = vec![0.0; n];
        if feasible(&zero) {
            let v = model(&zero);
            return Ok((zero, v));
        }
        return Err(Error::EmptyGrid);
    }
    let spacing = scan(&[0.0; 3], half_width, resolution, &mut best);
    let (coarse, _) = best.clone().ok_or(Error::EmptyGrid)?;
    let mut center = [0.0; 3];
    for (d, qd) in q.iter().enumerate() {
        center[d] = coarse.iter().zip(qd).map(|(a, b)| a * b).sum();
    }
    scan(&center, spacing, 21, &mut best);
    best.ok_or(Error::EmptyGrid)
}
