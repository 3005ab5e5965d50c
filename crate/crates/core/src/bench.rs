//! Experiment runners behind the command-line front end: single solves,
//! thread-scaling sweeps, PS-vs-BT comparisons and trial-point traces.
//!
//! All tabular output is CSV with a fixed header.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{by_name, Objective};
use crate::solver::{self, InitStep, SolveResult, SolverConfig, Status, Strategy, TrialPoint};
use crate::vec_engine::{ParallelPlan, Vector};

pub const REPORT_HEADER: &str =
    "problem,n,strategy,p,status,outer_iters,total_fevals,f_star,gnorm_scaled,wall_seconds";

/// Condition number used for `quadratic` when none is given.
pub const DEFAULT_CONDITION: f64 = 1e3;

/// Everything needed to reproduce one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub problem: String,
    pub n: usize,
    pub condition: f64,
    pub strategy: Strategy,
    pub init: InitStep,
    pub threads: usize,
    pub rho: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Reserved for randomized fixtures; the built-in problems are deterministic.
    pub seed: u64,
    pub repeat: usize,
    /// Starting point; the problem's standard start when `None`.
    pub x0: Option<Vec<f64>>,
}

impl RunSpec {
    pub fn new(problem: impl Into<String>, n: usize) -> Self {
        let d = SolverConfig::default();
        RunSpec {
            problem: problem.into(),
            n,
            condition: DEFAULT_CONDITION,
            strategy: d.strategy,
            init: d.init_step,
            threads: 1,
            rho: d.rho,
            eta: d.eta,
            epsilon: d.epsilon,
            tol: d.tol,
            max_outer: d.max_outer,
            max_inner: d.max_inner,
            seed: 0,
            repeat: 1,
            x0: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if self.repeat == 0 {
            return Err(Error::InvalidParameter("repeat must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::InvalidParameter("threads must be at least 1".into()));
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != self.n {
                return Err(Error::InvalidParameter(format!(
                    "x0 has {} entries, expected {}",
                    x0.len(),
                    self.n
                )));
            }
        }
        self.config_with(ParallelPlan::sequential()).validate()
    }

    fn config_with(&self, plan: ParallelPlan) -> SolverConfig {
        SolverConfig {
            rho: self.rho,
            eta: self.eta,
            epsilon: self.epsilon,
            tol: self.tol,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            strategy: self.strategy,
            init_step: self.init,
            plan,
            record_trace: false,
        }
    }

    /// Validated solver configuration with a thread pool of `self.threads`.
    pub fn config(&self) -> Result<SolverConfig> {
        self.validate()?;
        Ok(self.config_with(ParallelPlan::new(self.threads)?))
    }

    pub fn objective(&self) -> Result<Box<dyn Objective>> {
        by_name(&self.problem, self.n, self.condition)
    }

    pub fn start(&self, obj: &dyn Objective) -> Result<Vector> {
        match &self.x0 {
            Some(x0) => Vector::from_slice(x0),
            None => Ok(obj.initial_point()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub problem: String,
    pub n: usize,
    pub strategy: String,
    pub p: usize,
    pub status: String,
    pub outer_iters: usize,
    pub total_fevals: usize,
    pub f_star: f64,
    pub gnorm_scaled: f64,
    pub wall_seconds: f64,
}

impl ReportRow {
    pub fn from_result(spec: &RunSpec, res: &SolveResult, wall_seconds: f64) -> Self {
        ReportRow {
            problem: spec.problem.clone(),
            n: spec.n,
            strategy: spec.strategy.as_str().to_string(),
            p: spec.threads,
            status: res.status.as_str().to_string(),
            outer_iters: res.outer_iterations(),
            total_fevals: res.fevals,
            f_star: res.f_star,
            gnorm_scaled: res.gnorm_scaled,
            wall_seconds,
        }
    }
}

/// Median of a non-empty sample.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Runs `spec.repeat` identical solves; the row carries the median wall time.
pub fn run_solve(spec: &RunSpec) -> Result<(ReportRow, SolveResult)> {
    let cfg = spec.config()?;
    let obj = spec.objective()?;
    let x0 = spec.start(obj.as_ref())?;
    let mut times = Vec::with_capacity(spec.repeat);
    let mut last = None;
    for _ in 0..spec.repeat {
        let t0 = Instant::now();
        let res = solver::solve(obj.as_ref(), &x0, &cfg)?;
        times.push(t0.elapsed().as_secs_f64());
        last = Some(res);
    }
    let res = last.expect("repeat >= 1");
    Ok((ReportRow::from_result(spec, &res, median(&times)), res))
}

pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read, T: for<'de> Deserialize<'de>>(input: R) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// One cell of a scaling sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub problem: String,
    pub n: usize,
    pub strategy: String,
    pub p: usize,
    pub status: String,
    pub outer_iters: usize,
    pub total_fevals: usize,
    pub f_star: f64,
    pub gnorm_scaled: f64,
    pub wall_seconds: f64,
    /// Baseline wall time over this cell's; the baseline is `p = 1`, or the
    /// smallest `p` in the sweep when 1 is absent.
    pub speedup: f64,
}

/// Cartesian sweep over problems × sizes × thread counts.
pub fn run_scaling(
    problems: &[String],
    sizes: &[usize],
    threads: &[usize],
    base: &RunSpec,
) -> Result<Vec<ScalingRow>> {
    if threads.is_empty() {
        return Err(Error::InvalidParameter("empty thread list".into()));
    }
    let base_p = if threads.contains(&1) { 1 } else { *threads.iter().min().expect("non-empty") };
    let mut rows = Vec::new();
    for problem in problems {
        for &n in sizes {
            let mut group = Vec::with_capacity(threads.len());
            for &p in threads {
                let spec = RunSpec { problem: problem.clone(), n, threads: p, ..base.clone() };
                let row = match run_solve(&spec) {
                    Ok((row, _)) => row,
                    Err(e @ (Error::UnknownProblem(_) | Error::InvalidParameter(_))) => return Err(e),
                    Err(_) => ReportRow {
                        problem: problem.clone(),
                        n,
                        strategy: spec.strategy.as_str().to_string(),
                        p,
                        status: Status::NumericalError.as_str().to_string(),
                        outer_iters: 0,
                        total_fevals: 0,
                        f_star: f64::NAN,
                        gnorm_scaled: f64::NAN,
                        wall_seconds: 0.0,
                    },
                };
                group.push(row);
            }
            let base_time = group
                .iter()
                .find(|r| r.p == base_p)
                .map(|r| r.wall_seconds)
                .unwrap_or(f64::NAN);
            for r in group {
                let speedup = if r.wall_seconds == base_time { 1.0 } else { base_time / r.wall_seconds };
                rows.push(ScalingRow {
                    problem: r.problem,
                    n: r.n,
                    strategy: r.strategy,
                    p: r.p,
                    status: r.status,
                    outer_iters: r.outer_iters,
                    total_fevals: r.total_fevals,
                    f_star: r.f_star,
                    gnorm_scaled: r.gnorm_scaled,
                    wall_seconds: r.wall_seconds,
                    speedup,
                });
            }
        }
    }
    Ok(rows)
}

/// One problem instance of a comparison suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub problem: String,
    pub n: usize,
    pub condition: f64,
}

impl SuiteEntry {
    fn new(problem: &str, n: usize, condition: f64) -> Self {
        SuiteEntry { problem: problem.to_string(), n, condition }
    }

    /// Suite label, e.g. `quadratic_c100` or `rosenbrock`.
    pub fn label(&self) -> String {
        if self.problem == "quadratic" {
            format!("quadratic_c{}", self.condition)
        } else {
            self.problem.clone()
        }
    }
}

/// Quadratic (n = 100, three conditionings), Rosenbrock at 2/10/100,
/// COSINE and NONCVXUN at 1000.
pub fn builtin_suite() -> Vec<SuiteEntry> {
    vec![
        SuiteEntry::new("quadratic", 100, 10.0),
        SuiteEntry::new("quadratic", 100, 100.0),
        SuiteEntry::new("quadratic", 100, 1000.0),
        SuiteEntry::new("rosenbrock", 2, DEFAULT_CONDITION),
        SuiteEntry::new("rosenbrock", 10, DEFAULT_CONDITION),
        SuiteEntry::new("rosenbrock", 100, DEFAULT_CONDITION),
        SuiteEntry::new("cosine", 1000, DEFAULT_CONDITION),
        SuiteEntry::new("noncvxun", 1000, DEFAULT_CONDITION),
    ]
}

/// Relative tolerance on `f` for the same-solution rule.
pub const SAME_F_RTOL: f64 = 1e-6;
/// Absolute tolerance on the first two solution components.
pub const SAME_X_ATOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    PsBetter,
    Tie,
    BtBetter,
    ExcludedNotConverged,
    ExcludedDifferentMinima,
}

impl Outcome {
    pub fn is_excluded(&self) -> bool {
        matches!(self, Outcome::ExcludedNotConverged | Outcome::ExcludedDifferentMinima)
    }
}

/// Per-instance comparison. Columns of a strategy that was not run are empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub problem: String,
    pub n: usize,
    pub init: String,
    pub ps_status: Option<String>,
    pub ps_outer_iters: Option<usize>,
    pub ps_fevals: Option<usize>,
    pub ps_f_star: Option<f64>,
    pub bt_status: Option<String>,
    pub bt_outer_iters: Option<usize>,
    pub bt_fevals: Option<usize>,
    pub bt_f_star: Option<f64>,
    pub outcome: Option<Outcome>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareSummary {
    pub ps_better: usize,
    pub tie: usize,
    pub bt_better: usize,
    pub excluded: usize,
}

impl CompareSummary {
    pub fn included(&self) -> usize {
        self.ps_better + self.tie + self.bt_better
    }

    /// `(ps_better, tie, bt_better)` as percentages of included rows.
    pub fn percentages(&self) -> (f64, f64, f64) {
        let total = self.included();
        if total == 0 {
            return (0.0, 0.0, 0.0);
        }
        let pct = |c: usize| 100.0 * c as f64 / total as f64;
        (pct(self.ps_better), pct(self.tie), pct(self.bt_better))
    }
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// `None` unless both strategies were run.
    pub summary: Option<CompareSummary>,
}

fn init_label(init: InitStep) -> String {
    match init {
        InitStep::Gradient => "grad".to_string(),
        InitStep::Lbfgs { memory } => format!("lbfgs{memory}"),
    }
}

/// Same-solution rule: `f` within [`SAME_F_RTOL`] relative and the first two
/// components within [`SAME_X_ATOL`].
pub fn same_solution(a: &SolveResult, b: &SolveResult) -> bool {
    let scale = a.f_star.abs().max(b.f_star.abs()).max(1.0);
    if !((a.f_star - b.f_star).abs() <= SAME_F_RTOL * scale) {
        return false;
    }
    a.x_star
        .iter()
        .zip(b.x_star.iter())
        .take(2)
        .all(|(x, y)| (x - y).abs() <= SAME_X_ATOL)
}

pub fn classify(ps: &SolveResult, bt: &SolveResult) -> Outcome {
    if ps.status != Status::Converged || bt.status != Status::Converged {
        Outcome::ExcludedNotConverged
    } else if !same_solution(ps, bt) {
        Outcome::ExcludedDifferentMinima
    } else if ps.fevals < bt.fevals {
        Outcome::PsBetter
    } else if ps.fevals == bt.fevals {
        Outcome::Tie
    } else {
        Outcome::BtBetter
    }
}

/// Runs every requested strategy on every suite entry from the standard start.
/// `base` supplies the solver settings; its problem, size and strategy are ignored.
pub fn run_compare(entries: &[SuiteEntry], strategies: &[Strategy], base: &RunSpec) -> Result<CompareReport> {
    let run_ps = strategies.contains(&Strategy::Ps);
    let run_bt = strategies.contains(&Strategy::Bt);
    let mut rows = Vec::with_capacity(entries.len());
    let mut summary = CompareSummary { ps_better: 0, tie: 0, bt_better: 0, excluded: 0 };
    for e in entries {
        let spec = RunSpec { problem: e.problem.clone(), n: e.n, condition: e.condition, x0: None, ..base.clone() };
        let run = |strategy| -> Result<SolveResult> {
            let spec = RunSpec { strategy, ..spec.clone() };
            Ok(run_solve(&spec)?.1)
        };
        let ps = if run_ps { Some(run(Strategy::Ps)?) } else { None };
        let bt = if run_bt { Some(run(Strategy::Bt)?) } else { None };
        let outcome = match (&ps, &bt) {
            (Some(a), Some(b)) => Some(classify(a, b)),
            _ => None,
        };
        match outcome {
            Some(Outcome::PsBetter) => summary.ps_better += 1,
            Some(Outcome::Tie) => summary.tie += 1,
            Some(Outcome::BtBetter) => summary.bt_better += 1,
            Some(_) => summary.excluded += 1,
            None => {}
        }
        rows.push(CompareRow {
            problem: e.label(),
            n: e.n,
            init: init_label(base.init),
            ps_status: ps.as_ref().map(|r| r.status.as_str().to_string()),
            ps_outer_iters: ps.as_ref().map(|r| r.outer_iterations()),
            ps_fevals: ps.as_ref().map(|r| r.fevals),
            ps_f_star: ps.as_ref().map(|r| r.f_star),
            bt_status: bt.as_ref().map(|r| r.status.as_str().to_string()),
            bt_outer_iters: bt.as_ref().map(|r| r.outer_iterations()),
            bt_fevals: bt.as_ref().map(|r| r.fevals),
            bt_f_star: bt.as_ref().map(|r| r.f_star),
            outcome,
        });
    }
    Ok(CompareReport { rows, summary: (run_ps && run_bt).then_some(summary) })
}

/// Settings of the comparison runs behind the committed golden file.
pub fn builtin_compare_spec() -> RunSpec {
    RunSpec { max_outer: 1000, ..RunSpec::new("quadratic", 1) }
}

/// Trial points of one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyTrace {
    pub strategy: Strategy,
    pub x0: Vector,
    pub points: Vec<TrialPoint>,
}

impl StrategyTrace {
    /// `x0` followed by every accepted trial point.
    pub fn iterates(&self) -> Vec<&[f64]> {
        let mut path: Vec<&[f64]> = vec![self.x0.as_slice()];
        for (i, p) in self.points.iter().enumerate() {
            let last_of_k = self.points.get(i + 1).is_none_or(|q| q.k != p.k);
            if last_of_k {
                path.push(p.x.as_slice());
            }
        }
        path
    }
}

pub fn run_trace(
    obj: &dyn Objective,
    x0: &Vector,
    strategies: &[Strategy],
    cfg: &SolverConfig,
    k_max: usize,
) -> Result<Vec<StrategyTrace>> {
    strategies
        .iter()
        .map(|&strategy| {
            let cfg = SolverConfig { strategy, ..cfg.clone() };
            let (points, _) = solver::trace_trials(obj, x0, &cfg, k_max)?;
            Ok(StrategyTrace { strategy, x0: x0.clone(), points })
        })
        .collect()
}

/// Header `strategy,k,t,x1..xn,f`.
pub fn write_trace_csv<W: Write>(out: W, traces: &[StrategyTrace]) -> Result<()> {
    let n = traces.first().map_or(0, |t| t.x0.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["strategy".to_string(), "k".into(), "t".into()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.push("f".into());
    w.write_record(&header)?;
    for tr in traces {
        for p in &tr.points {
            let mut rec = vec![tr.strategy.as_str().to_string(), p.k.to_string(), p.t.to_string()];
            rec.extend(p.x.iter().map(|v| v.to_string()));
            rec.push(p.f.to_string());
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A parsed trace CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub strategy: Strategy,
    pub k: usize,
    pub t: usize,
    pub x: Vec<f64>,
    pub f: f64,
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRecord>> {
    let bad = |msg: &str| Error::Io(format!("malformed trace csv: {msg}"));
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() < 5 {
            return Err(bad("too few columns"));
        }
        let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(&rec[i]));
        let idx = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(&rec[i]));
        let last = rec.len() - 1;
        out.push(TraceRecord {
            strategy: rec[0].parse()?,
            k: idx(1)?,
            t: idx(2)?,
            x: (3..last).map(num).collect::<Result<_>>()?,
            f: num(last)?,
        });
    }
    Ok(out)
}

const SVG_SIZE: f64 = 640.0;
const SVG_MARGIN: f64 = 40.0;
const CONTOUR_GRID: usize = 160;
const CONTOUR_LEVELS: usize = 18;
const STRATEGY_COLORS: [&str; 2] = ["#c0392b", "#2471a3"];

struct Window {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Window {
    fn around(points: &[&[f64]]) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        let pad = |lo: f64, hi: f64| {
            let w = (hi - lo).max(1e-3 * lo.abs().max(hi.abs()).max(1.0));
            (lo - 0.1 * w, hi + 0.1 * w)
        };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        Window { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        SVG_MARGIN + (x - self.x0) / (self.x1 - self.x0) * (SVG_SIZE - 2.0 * SVG_MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        SVG_SIZE - SVG_MARGIN - (y - self.y0) / (self.y1 - self.y0) * (SVG_SIZE - 2.0 * SVG_MARGIN)
    }
}

/// Line segments of the level set `values = level` on a regular grid
/// (marching squares), in grid coordinates.
fn level_segments(values: &[f64], m: usize, level: f64) -> Vec<[(f64, f64); 2]> {
    let at = |i: usize, j: usize| values[j * m + i];
    let cross = |a: f64, b: f64| (level - a) / (b - a);
    let mut segs = Vec::new();
    for j in 0..m - 1 {
        for i in 0..m - 1 {
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
            let mut pts = Vec::with_capacity(4);
            for e in 0..4 {
                let (a, b) = (c[e], c[(e + 1) % 4]);
                if (a < level) != (b < level) {
                    let s = cross(a, b);
                    let (pa, pb) = (corners[e], corners[(e + 1) % 4]);
                    pts.push((i as f64 + pa.0 + s * (pb.0 - pa.0), j as f64 + pa.1 + s * (pb.1 - pa.1)));
                }
            }
            match pts.len() {
                2 => segs.push([pts[0], pts[1]]),
                4 => {
                    segs.push([pts[0], pts[1]]);
                    segs.push([pts[2], pts[3]]);
                }
                _ => {}
            }
        }
    }
    segs
}

/// Contour plot of a 2-D objective with the traced trial points.
pub fn trace_svg(obj: &dyn Objective, traces: &[StrategyTrace]) -> Result<String> {
    if obj.dimension() != 2 {
        return Err(Error::InvalidParameter(format!(
            "svg output needs a 2-dimensional problem, got n = {}",
            obj.dimension()
        )));
    }
    let plan = ParallelPlan::sequential();
    let mut all: Vec<&[f64]> = Vec::new();
    for tr in traces {
        all.push(tr.x0.as_slice());
        all.extend(tr.points.iter().map(|p| p.x.as_slice()));
    }
    if all.is_empty() {
        return Err(Error::InvalidParameter("nothing to plot".into()));
    }
    let win = Window::around(&all);

    let m = CONTOUR_GRID;
    let mut values = Vec::with_capacity(m * m);
    let mut grad = Vector::zeros(2);
    for j in 0..m {
        for i in 0..m {
            let x = win.x0 + (win.x1 - win.x0) * i as f64 / (m - 1) as f64;
            let y = win.y0 + (win.y1 - win.y0) * j as f64 / (m - 1) as f64;
            let v = obj.eval_into(&Vector::from_slice(&[x, y])?, &mut grad, &plan).unwrap_or(f64::NAN);
            values.push(v);
        }
    }
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let fmin = finite.clone().fold(f64::INFINITY, f64::min);
    let fmax = finite.fold(f64::NEG_INFINITY, f64::max);
    let shift: Vec<f64> = values.iter().map(|v| if v.is_finite() { v - fmin } else { fmax - fmin }).collect();
    let top = (fmax - fmin).max(f64::MIN_POSITIVE);
    let bottom = (top * 1e-6).max(f64::MIN_POSITIVE);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r##"<g fill="none" stroke="#999" stroke-width="0.7">"##);
    let gx = |u: f64| win.px(win.x0 + (win.x1 - win.x0) * u / (m - 1) as f64);
    let gy = |u: f64| win.py(win.y0 + (win.y1 - win.y0) * u / (m - 1) as f64);
    for l in 0..CONTOUR_LEVELS {
        let level = bottom * (top / bottom).powf((l as f64 + 0.5) / CONTOUR_LEVELS as f64);
        let mut d = String::new();
        for [a, b] in level_segments(&shift, m, level) {
            let _ = write!(d, "M{:.2} {:.2}L{:.2} {:.2}", gx(a.0), gy(a.1), gx(b.0), gy(b.1));
        }
        if !d.is_empty() {
            let _ = writeln!(svg, r#"<path d="{d}"/>"#);
        }
    }
    let _ = writeln!(svg, "</g>");

    for (idx, tr) in traces.iter().enumerate() {
        let color = STRATEGY_COLORS[idx % STRATEGY_COLORS.len()];
        let _ = writeln!(svg, r#"<g class="{}" stroke="{color}" fill="{color}">"#, tr.strategy.as_str());
        let path: Vec<String> = tr
            .iterates()
            .iter()
            .map(|p| format!("{:.2},{:.2}", win.px(p[0]), win.py(p[1])))
            .collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        for p in &tr.points {
            let (cx, cy) = (win.px(p.x[0]), win.py(p.x[1]));
            let _ = writeln!(svg, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2.5"/>"#);
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-size="10" stroke="none">{}</text>"#,
                cx + 4.0,
                cy - 4.0,
                p.t
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.0}" y="{:.0}" font-size="13" stroke="none">{}</text>"#,
            SVG_MARGIN,
            18.0 + 16.0 * idx as f64,
            tr.strategy.as_str().to_uppercase()
        );
        let _ = writeln!(svg, "</g>");
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}
