//! Deterministic data-parallel dense-vector kernels.
//!
//! Every reduction splits its input into fixed-size chunks (the chunk size is
//! part of the [`ParallelPlan`], the thread count is not), computes one partial
//! per chunk, and adds the partials sequentially in chunk order. Inside a chunk
//! the accumulation pattern is fixed as well (four interleaved lanes followed by
//! the scalar tail), so a reduction returns the same bits for any thread count.

use std::fmt;
use std::ops::{Deref, DerefMut, Range};
use std::sync::Arc;

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{Error, Result};

/// Default number of elements per reduction block.
pub const DEFAULT_CHUNK_SIZE: usize = 4096;

/// Dense point or direction in ℝⁿ, n ≥ 1.
#[derive(Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyVector);
        }
        Ok(Vector(data))
    }

    pub fn from_slice(data: &[f64]) -> Result<Self> {
        Self::from_vec(data.to_vec())
    }

    /// # Panics
    /// If `n == 0`.
    pub fn zeros(n: usize) -> Self {
        Self::filled(n, 0.0)
    }

    /// # Panics
    /// If `n == 0`.
    pub fn filled(n: usize, value: f64) -> Self {
        assert!(n > 0, "vector dimension must be positive");
        Vector(vec![value; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() <= 8 {
            write!(f, "Vector({:?})", self.0)
        } else {
            write!(
                f,
                "Vector(n={}, [{}, {}, …, {}])",
                self.0.len(),
                self.0[0],
                self.0[1],
                self.0[self.0.len() - 1]
            )
        }
    }
}

/// The six inner products needed for one trial-step update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerProducts {
    /// sᵗ·yᵗ
    pub v1: f64,
    /// sᵗ·sᵗ
    pub v2: f64,
    /// yᵗ·yᵗ
    pub v3: f64,
    /// yᵗ·g
    pub v4: f64,
    /// g·g
    pub v5: f64,
    /// sᵗ·g
    pub v6: f64,
}

/// Thread count and reduction block size for the kernels.
///
/// Chunk boundaries depend only on the vector length and `chunk_size`.
#[derive(Clone)]
pub struct ParallelPlan {
    threads: usize,
    chunk_size: usize,
    pool: Option<Arc<ThreadPool>>,
}

impl fmt::Debug for ParallelPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParallelPlan")
            .field("threads", &self.threads)
            .field("chunk_size", &self.chunk_size)
            .finish()
    }
}

impl Default for ParallelPlan {
    fn default() -> Self {
        Self::sequential()
    }
}

impl ParallelPlan {
    /// Single-threaded plan; runs the same chunked reductions on the caller's thread.
    pub fn sequential() -> Self {
        ParallelPlan {
            threads: 1,
            chunk_size: DEFAULT_CHUNK_SIZE,
            pool: None,
        }
    }

    pub fn new(threads: usize) -> Result<Self> {
        if threads == 0 {
            return Err(Error::InvalidParameter("thread count must be positive".into()));
        }
        if threads == 1 {
            return Ok(Self::sequential());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot build thread pool: {e}")))?;
        Ok(ParallelPlan {
            threads,
            chunk_size: DEFAULT_CHUNK_SIZE,
            pool: Some(Arc::new(pool)),
        })
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Result<Self> {
        if chunk_size == 0 {
            return Err(Error::InvalidParameter("chunk size must be positive".into()));
        }
        self.chunk_size = chunk_size;
        Ok(self)
    }

    pub fn threads(&self) -> usize {
        self.threads
    }

    pub fn chunk_size(&self) -> usize {
        self.chunk_size
    }

    fn chunk_count(&self, n: usize) -> usize {
        n.div_ceil(self.chunk_size)
    }

    /// Evaluates `f` on every chunk range of `0..n`, returning partials in chunk order.
    pub fn map_ranges<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(Range<usize>) -> T + Sync + Send,
    {
        let cs = self.chunk_size;
        let range = |c: usize| c * cs..((c + 1) * cs).min(n);
        match &self.pool {
            Some(pool) => pool.install(|| {
                (0..self.chunk_count(n))
                    .into_par_iter()
                    .map(|c| f(range(c)))
                    .collect()
            }),
            None => (0..self.chunk_count(n)).map(|c| f(range(c))).collect(),
        }
    }

    /// Hands each chunk of `out` (with its starting offset) to `f`, collecting
    /// the per-chunk return values in chunk order.
    pub fn map_chunks_mut<T, F>(&self, out: &mut [f64], f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &mut [f64]) -> T + Sync + Send,
    {
        let cs = self.chunk_size;
        match &self.pool {
            Some(pool) => pool.install(|| {
                out.par_chunks_mut(cs)
                    .enumerate()
                    .map(|(c, chunk)| f(c * cs, chunk))
                    .collect()
            }),
            None => out
                .chunks_mut(cs)
                .enumerate()
                .map(|(c, chunk)| f(c * cs, chunk))
                .collect(),
        }
    }

    /// Sum of per-chunk partials, added in ascending chunk order.
    pub fn reduce_sum<F>(&self, n: usize, f: F) -> f64
    where
        F: Fn(Range<usize>) -> f64 + Sync + Send,
    {
        self.map_ranges(n, f).into_iter().fold(0.0, |acc, p| acc + p)
    }
}

fn check_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Dot product of one chunk with the fixed four-lane accumulation order.
#[inline]
fn lane_dot(a: &[f64], b: &[f64]) -> f64 {
    let quads = a.len() / 4 * 4;
    let mut acc = [0.0f64; 4];
    for (ca, cb) in a[..quads].chunks_exact(4).zip(b[..quads].chunks_exact(4)) {
        for j in 0..4 {
            acc[j] += ca[j] * cb[j];
        }
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in quads..a.len() {
        sum += a[i] * b[i];
    }
    sum
}

/// Six products of one chunk, each with exactly the accumulation order of [`lane_dot`].
#[inline]
fn lane_fused(s: &[f64], y: &[f64], g: &[f64]) -> [f64; 6] {
    let quads = s.len() / 4 * 4;
    let mut acc = [[0.0f64; 4]; 6];
    for q in (0..quads).step_by(4) {
        for j in 0..4 {
            let (si, yi, gi) = (s[q + j], y[q + j], g[q + j]);
            acc[0][j] += si * yi;
            acc[1][j] += si * si;
            acc[2][j] += yi * yi;
            acc[3][j] += yi * gi;
            acc[4][j] += gi * gi;
            acc[5][j] += si * gi;
        }
    }
    let mut out = [0.0f64; 6];
    for (o, a) in out.iter_mut().zip(acc.iter()) {
        *o = (a[0] + a[1]) + (a[2] + a[3]);
    }
    for i in quads..s.len() {
        let (si, yi, gi) = (s[i], y[i], g[i]);
        out[0] += si * yi;
        out[1] += si * si;
        out[2] += yi * yi;
        out[3] += yi * gi;
        out[4] += gi * gi;
        out[5] += si * gi;
    }
    out
}

pub fn dot(a: &Vector, b: &Vector, plan: &ParallelPlan) -> Result<f64> {
    check_len(a, b)?;
    let sum = plan.reduce_sum(a.len(), |r| lane_dot(&a[r.clone()], &b[r]));
    if !sum.is_finite() {
        return Err(Error::NonFinite("dot"));
    }
    Ok(sum)
}

pub fn norm(a: &Vector, plan: &ParallelPlan) -> Result<f64> {
    dot(a, a, plan).map(f64::sqrt)
}

/// All six products of `(sᵗ, yᵗ, g)` in a single pass over the data.
pub fn fused_products(
    s_t: &Vector,
    y_t: &Vector,
    g: &Vector,
    plan: &ParallelPlan,
) -> Result<InnerProducts> {
    check_len(s_t, y_t)?;
    check_len(s_t, g)?;
    let partials = plan.map_ranges(s_t.len(), |r| {
        lane_fused(&s_t[r.clone()], &y_t[r.clone()], &g[r])
    });
    let mut v = [0.0f64; 6];
    for p in partials {
        for (acc, x) in v.iter_mut().zip(p) {
            *acc += x;
        }
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("fused_products"));
    }
    Ok(InnerProducts {
        v1: v[0],
        v2: v[1],
        v3: v[2],
        v4: v[3],
        v5: v[4],
        v6: v[5],
    })
}

/// `out ← cg·g + cy·y + cs·s`
#[allow(clippy::too_many_arguments)]
pub fn combine3_into(
    out: &mut Vector,
    cg: f64,
    g: &Vector,
    cy: f64,
    y: &Vector,
    cs: f64,
    s: &Vector,
    plan: &ParallelPlan,
) -> Result<()> {
    check_len(g, y)?;
    check_len(g, s)?;
    check_len(g, out)?;
    plan.map_chunks_mut(out, |off, chunk| {
        for (i, o) in chunk.iter_mut().enumerate() {
            let j = off + i;
            *o = cg * g[j] + cy * y[j] + cs * s[j];
        }
    });
    Ok(())
}

pub fn combine3(
    cg: f64,
    g: &Vector,
    cy: f64,
    y: &Vector,
    cs: f64,
    s: &Vector,
    plan: &ParallelPlan,
) -> Result<Vector> {
    let mut out = Vector::zeros(g.len());
    combine3_into(&mut out, cg, g, cy, y, cs, s, plan)?;
    Ok(out)
}

/// `out ← alpha·x + y`
pub fn axpy_into(
    out: &mut Vector,
    alpha: f64,
    x: &Vector,
    y: &Vector,
    plan: &ParallelPlan,
) -> Result<()> {
    check_len(x, y)?;
    check_len(x, out)?;
    plan.map_chunks_mut(out, |off, chunk| {
        for (i, o) in chunk.iter_mut().enumerate() {
            *o = alpha * x[off + i] + y[off + i];
        }
    });
    Ok(())
}

pub fn axpy(alpha: f64, x: &Vector, y: &Vector, plan: &ParallelPlan) -> Result<Vector> {
    let mut out = Vector::zeros(x.len());
    axpy_into(&mut out, alpha, x, y, plan)?;
    Ok(out)
}

/// `alpha·x`
pub fn scale(alpha: f64, x: &Vector, plan: &ParallelPlan) -> Vector {
    let mut out = x.clone();
    plan.map_chunks_mut(&mut out, |_, chunk| {
        for o in chunk.iter_mut() {
            *o *= alpha;
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(data: &[f64]) -> Vector {
        Vector::from_slice(data).unwrap()
    }

    #[test]
    fn dot_small_cases() {
        let plan = ParallelPlan::sequential();
        assert_eq!(dot(&v(&[1.0, 0.0]), &v(&[0.0, 1.0]), &plan).unwrap(), 0.0);
        assert_eq!(dot(&v(&[3.0, 4.0]), &v(&[3.0, 4.0]), &plan).unwrap(), 25.0);
    }

    #[test]
    fn dot_rejects_mismatch_and_nan() {
        let plan = ParallelPlan::sequential();
        assert!(matches!(
            dot(&v(&[1.0, 2.0]), &v(&[1.0]), &plan),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
        assert_eq!(
            dot(&v(&[f64::NAN, 2.0]), &v(&[1.0, 1.0]), &plan),
            Err(Error::NonFinite("dot"))
        );
        assert!(dot(&v(&[f64::INFINITY]), &v(&[1.0]), &plan).is_err());
    }

    #[test]
    fn empty_vector_rejected() {
        assert_eq!(Vector::from_vec(vec![]), Err(Error::EmptyVector));
    }

    #[test]
    fn fused_hand_values() {
        let plan = ParallelPlan::sequential();
        let p = fused_products(&v(&[1.0, 0.0]), &v(&[0.0, 1.0]), &v(&[-1.0, 0.0]), &plan).unwrap();
        assert_eq!(
            p,
            InnerProducts { v1: 0.0, v2: 1.0, v3: 1.0, v4: 0.0, v5: 1.0, v6: -1.0 }
        );
        let z = Vector::zeros(7);
        let p = fused_products(&z, &z, &z, &plan).unwrap();
        assert_eq!([p.v1, p.v2, p.v3, p.v4, p.v5, p.v6], [0.0; 6]);
    }

    #[test]
    fn combine3_cases() {
        let plan = ParallelPlan::sequential();
        let g = v(&[-1.0, 0.0]);
        let y = v(&[0.0, 1.0]);
        let s = v(&[1.0, 0.0]);
        let out = combine3(-1.0 / 3.0, &g, -1.0 / 8.0, &y, 1.0 / 24.0, &s, &plan).unwrap();
        assert!((out[0] - 0.375).abs() < 1e-15);
        assert!((out[1] + 0.125).abs() < 1e-15);
        let out = combine3(0.0, &g, 0.0, &y, 0.0, &s, &plan).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0]);
        let out = combine3(1.0, &g, 0.0, &y, 0.0, &s, &plan).unwrap();
        assert_eq!(out, g);
        assert!(combine3(1.0, &g, 0.0, &v(&[1.0]), 0.0, &s, &plan).is_err());
    }

    #[test]
    fn axpy_cases() {
        let plan = ParallelPlan::sequential();
        let x = v(&[1.0, 2.0]);
        let y = v(&[3.0, 4.0]);
        assert_eq!(axpy(1.0, &x, &y, &plan).unwrap().as_slice(), &[4.0, 6.0]);
        assert_eq!(axpy(0.0, &x, &y, &plan).unwrap(), y);
        assert_eq!(axpy(-1.0, &x, &x, &plan).unwrap().as_slice(), &[0.0, 0.0]);
        assert!(axpy(1.0, &x, &v(&[1.0]), &plan).is_err());
    }

    #[test]
    fn plan_validation() {
        assert!(ParallelPlan::new(0).is_err());
        assert!(ParallelPlan::sequential().with_chunk_size(0).is_err());
        let p = ParallelPlan::new(3).unwrap().with_chunk_size(16).unwrap();
        assert_eq!((p.threads(), p.chunk_size()), (3, 16));
    }

    #[test]
    fn chunk_partials_cover_tail() {
        let plan = ParallelPlan::sequential().with_chunk_size(3).unwrap();
        let ranges = plan.map_ranges(8, |r| (r.start, r.end));
        assert_eq!(ranges, vec![(0, 3), (3, 6), (6, 8)]);
    }
}
