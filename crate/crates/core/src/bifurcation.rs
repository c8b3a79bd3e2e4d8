//! Real one-parameter maps that govern single nodes of the self-drive family,
//! their bifurcation diagrams, boundedness windows, and fixed-point branches.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{MultiState, Network};

pub const DEFAULT_TRANSIENT: usize = 1000;
pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_BOUND: f64 = 100.0;
pub const DEFAULT_STEPS: usize = 2000;

/// A real map `xi -> f(p, xi)` with one varying parameter `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RealMapFamily {
    /// Four consecutive steps of node 3 in the self-drive network with `a = -1`, `c = -1`,
    /// as a function of `b`: `f3 ∘ f3 ∘ f2 ∘ f1` with `f1 = b²ξ² - 1`,
    /// `f2 = (bξ - 2)² - 1`, `f3 = (bξ - 1)² - 1`.
    Z3Batch4,
    /// Two steps of node 2 of the self-drive network at `c = -1`, as a function of `a`:
    /// `(ξ² - 1 - a)² - 1`.
    Z2Even,
    /// Node 3 once nodes 1 and 2 have settled on a fixed value `xi0`: `(xi0 + bξ)² - 1`.
    Z3Limit { xi0: f64 },
}

/// Value and first partial derivatives of a family member.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d_xi: f64,
    pub d_p: f64,
}

impl RealMapFamily {
    pub fn eval(&self, p: f64, xi: f64) -> f64 {
        match *self {
            RealMapFamily::Z3Batch4 => {
                let x = p * p * xi * xi - 1.0;
                let x = (p * x - 2.0).powi(2) - 1.0;
                let x = (p * x - 1.0).powi(2) - 1.0;
                (p * x - 1.0).powi(2) - 1.0
            }
            RealMapFamily::Z2Even => (xi * xi - 1.0 - p).powi(2) - 1.0,
            RealMapFamily::Z3Limit { xi0 } => (xi0 + p * xi).powi(2) - 1.0,
        }
    }

    /// Analytic value, `df/dxi` and `df/dp` by the chain rule.
    pub fn jet(&self, p: f64, xi: f64) -> Jet {
        match *self {
            RealMapFamily::Z3Batch4 => {
                let b = p;
                let mut x = b * b * xi * xi - 1.0;
                let mut dx = 2.0 * b * b * xi;
                let mut dp = 2.0 * b * xi * xi;
                for shift in [2.0, 1.0, 1.0] {
                    let u = b * x - shift;
                    let (nx, ndx, ndp) = (u * u - 1.0, 2.0 * u * b * dx, 2.0 * u * (x + b * dp));
                    x = nx;
                    dx = ndx;
                    dp = ndp;
                }
                Jet { value: x, d_xi: dx, d_p: dp }
            }
            RealMapFamily::Z2Even => {
                let u = xi * xi - 1.0 - p;
                Jet { value: u * u - 1.0, d_xi: 4.0 * xi * u, d_p: -2.0 * u }
            }
            RealMapFamily::Z3Limit { xi0 } => {
                let u = xi0 + p * xi;
                Jet { value: u * u - 1.0, d_xi: 2.0 * p * u, d_p: 2.0 * xi * u }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RealMapFamily::Z3Batch4 => "z3_batch4",
            RealMapFamily::Z2Even => "z2_even",
            RealMapFamily::Z3Limit { .. } => "z3_limit",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepSettings {
    pub transient: usize,
    pub samples: usize,
    pub x0: f64,
    pub bound: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings { transient: DEFAULT_TRANSIENT, samples: DEFAULT_SAMPLES, x0: 0.0, bound: DEFAULT_BOUND }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub p: f64,
    pub escaped: bool,
    /// Empty when `escaped`.
    pub samples: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BifurcationSweep {
    pub family: RealMapFamily,
    pub settings: SweepSettings,
    pub records: Vec<SweepRecord>,
}

impl BifurcationSweep {
    pub fn param_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.p).collect()
    }

    /// One row per parameter: `p,escaped,s1,...,sS`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,escaped,samples\n");
        for r in &self.records {
            write!(out, "{},{}", r.p, u8::from(r.escaped)).unwrap();
            for s in &r.samples {
                write!(out, ",{s}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// `steps` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    let h = (hi - lo) / (steps - 1) as f64;
    (0..steps).map(|i| if i + 1 == steps { hi } else { lo + i as f64 * h }).collect()
}

fn out_of_bounds(x: f64, bound: f64) -> bool {
    !(x.abs() <= bound)
}

// whether the orbit of x0 stays within the bound for `iters` steps
fn stays_bounded(family: &RealMapFamily, p: f64, x0: f64, iters: usize, bound: f64) -> bool {
    if out_of_bounds(x0, bound) {
        return false;
    }
    let mut x = x0;
    for _ in 0..iters {
        x = family.eval(p, x);
        if out_of_bounds(x, bound) {
            return false;
        }
    }
    true
}

fn sweep_one(family: &RealMapFamily, p: f64, s: &SweepSettings) -> SweepRecord {
    let escaped = SweepRecord { p, escaped: true, samples: Vec::new() };
    if out_of_bounds(s.x0, s.bound) {
        return escaped;
    }
    let mut x = s.x0;
    for _ in 0..s.transient {
        x = family.eval(p, x);
        if out_of_bounds(x, s.bound) {
            return escaped;
        }
    }
    let mut samples = Vec::with_capacity(s.samples);
    for _ in 0..s.samples {
        x = family.eval(p, x);
        if out_of_bounds(x, s.bound) {
            return escaped;
        }
        samples.push(x);
    }
    SweepRecord { p, escaped: false, samples }
}

pub fn sweep(family: RealMapFamily, p_min: f64, p_max: f64, steps: usize, settings: SweepSettings) -> Result<BifurcationSweep> {
    if steps < 2 || settings.transient < 1 || settings.samples < 1 || !(settings.bound > 0.0) {
        return Err(Error::InvalidArgument("sweep needs steps >= 2, T >= 1, S >= 1 and B > 0".into()));
    }
    check_range(p_min, p_max)?;
    let records = linspace(p_min, p_max, steps).into_par_iter().map(|p| sweep_one(&family, p, &settings)).collect();
    Ok(BifurcationSweep { family, settings, records })
}

fn check_range(p_min: f64, p_max: f64) -> Result<()> {
    if !(p_min < p_max) || !p_min.is_finite() || !p_max.is_finite() {
        return Err(Error::InvalidArgument(format!("parameter range [{p_min}, {p_max}] is empty or not finite")));
    }
    Ok(())
}

/// Settings for [`bounded_windows`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowSettings {
    pub coarse_steps: usize,
    pub refine_tol: f64,
    pub x0: f64,
    pub t_max: usize,
    pub bound: f64,
}

impl Default for WindowSettings {
    fn default() -> Self {
        WindowSettings { coarse_steps: DEFAULT_STEPS, refine_tol: 1e-6, x0: 0.0, t_max: DEFAULT_TRANSIENT, bound: DEFAULT_BOUND }
    }
}

/// Maximal parameter intervals on which the orbit of `x0` stays bounded for `t_max` steps.
///
/// Bounded runs are located on a coarse grid; each interior endpoint is then bisected
/// between the last bounded and first escaping grid value down to `refine_tol`.
pub fn bounded_windows(family: RealMapFamily, p_min: f64, p_max: f64, s: WindowSettings) -> Result<Vec<(f64, f64)>> {
    if !(s.refine_tol > 0.0) || s.coarse_steps < 2 || !(s.bound > 0.0) {
        return Err(Error::InvalidArgument("bounded_windows needs refine_tol > 0, coarse_steps >= 2, B > 0".into()));
    }
    check_range(p_min, p_max)?;
    let ps = linspace(p_min, p_max, s.coarse_steps);
    let inside: Vec<bool> = ps.par_iter().map(|&p| stays_bounded(&family, p, s.x0, s.t_max, s.bound)).collect();
    let refine = |mut good: f64, mut bad: f64| {
        while (good - bad).abs() > s.refine_tol {
            let mid = 0.5 * (good + bad);
            if stays_bounded(&family, mid, s.x0, s.t_max, s.bound) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };

    let mut windows = Vec::new();
    let mut i = 0;
    while i < ps.len() {
        if !inside[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < ps.len() && inside[i + 1] {
            i += 1;
        }
        let lo = if start == 0 { ps[0] } else { refine(ps[start], ps[start - 1]) };
        let hi = if i + 1 == ps.len() { ps[i] } else { refine(ps[i], ps[i + 1]) };
        windows.push((lo, hi));
        i += 1;
    }
    Ok(windows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    /// Saddle-node: `f'` crosses `+1`.
    LP,
    /// Period doubling: `f'` crosses `-1`.
    PD,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointRecord {
    pub branch: usize,
    pub p: f64,
    pub xi: f64,
    pub slope: f64,
    pub stable: bool,
    pub event: Option<Event>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchEnd {
    /// Left the parameter range or the `xi` box.
    LeftDomain,
    /// Came back to its starting point.
    Closed,
    /// The Newton corrector did not converge even at the minimum step.
    NewtonFailed,
    StepLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchInfo {
    pub id: usize,
    /// Termination of the two continuation directions.
    pub ends: [BranchEnd; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointScan {
    pub family: RealMapFamily,
    /// Points along each branch in arclength order, with refined event points inserted.
    pub records: Vec<FixedPointRecord>,
    pub branches: Vec<BranchInfo>,
}

impl FixedPointScan {
    pub fn events(&self) -> impl Iterator<Item = &FixedPointRecord> {
        self.records.iter().filter(|r| r.event.is_some())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("branch,p,xi,slope,stable,event\n");
        for r in &self.records {
            let ev = match r.event {
                Some(Event::LP) => "LP",
                Some(Event::PD) => "PD",
                None => "",
            };
            writeln!(out, "{},{},{},{},{},{}", r.branch, r.p, r.xi, r.slope, u8::from(r.stable), ev).unwrap();
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanSettings {
    /// Coarse parameter values used to seed branches.
    pub steps: usize,
    pub newton_tol: f64,
    /// Fixed points are sought with `|xi| <= xi_max`.
    pub xi_max: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings { steps: 200, newton_tol: 1e-12, xi_max: 3.0 }
    }
}

const MAX_BRANCH_POINTS: usize = 200_000;

struct Tracer<'a> {
    family: &'a RealMapFamily,
    p_range: (f64, f64),
    xi_max: f64,
    tol: f64,
}

// H(p, xi) = f(p, xi) - xi; returns (H, H_p, H_xi)
fn residual(family: &RealMapFamily, p: f64, xi: f64) -> (f64, f64, f64) {
    let j = family.jet(p, xi);
    (j.value - xi, j.d_p, j.d_xi - 1.0)
}

impl Tracer<'_> {
    fn inside(&self, p: f64, xi: f64) -> bool {
        p >= self.p_range.0 && p <= self.p_range.1 && xi.abs() <= self.xi_max
    }

    /// Newton on `H = 0` together with the hyperplane `(y - anchor) · dir = 0`.
    fn correct(&self, mut y: (f64, f64), anchor: (f64, f64), dir: (f64, f64)) -> Option<(f64, f64)> {
        for _ in 0..50 {
            let (h, hp, hx) = residual(self.family, y.0, y.1);
            let g = (y.0 - anchor.0) * dir.0 + (y.1 - anchor.1) * dir.1;
            let det = hp * dir.1 - hx * dir.0;
            if !det.is_finite() || det == 0.0 {
                return None;
            }
            let dp = (h * dir.1 - hx * g) / det;
            let dx = (hp * g - h * dir.0) / det;
            y = (y.0 - dp, y.1 - dx);
            if !(y.0.is_finite() && y.1.is_finite()) {
                return None;
            }
            if dp.abs().max(dx.abs()) <= self.tol {
                let (h, _, _) = residual(self.family, y.0, y.1);
                return (h.abs() <= 1e-11).then_some(y);
            }
        }
        None
    }

    fn tangent(&self, y: (f64, f64), prev: (f64, f64)) -> (f64, f64) {
        let (_, hp, hx) = residual(self.family, y.0, y.1);
        let (tp, tx) = (hx, -hp);
        let norm = tp.hypot(tx);
        let t = (tp / norm, tx / norm);
        if t.0 * prev.0 + t.1 * prev.1 < 0.0 {
            (-t.0, -t.1)
        } else {
            t
        }
    }

    /// Projects a point just outside the domain onto the boundary it crossed, along the branch.
    fn clip(&self, y: (f64, f64)) -> Option<(f64, f64)> {
        let (anchor, dir) = if y.0 < self.p_range.0 {
            ((self.p_range.0, y.1), (1.0, 0.0))
        } else if y.0 > self.p_range.1 {
            ((self.p_range.1, y.1), (1.0, 0.0))
        } else {
            ((y.0, self.xi_max.copysign(y.1)), (0.0, 1.0))
        };
        let e = self.correct(anchor, anchor, dir)?;
        let e = (e.0.clamp(self.p_range.0, self.p_range.1), e.1.clamp(-self.xi_max, self.xi_max));
        (residual(self.family, e.0, e.1).0.abs() <= 1e-10).then_some(e)
    }

    /// Pseudo-arclength continuation from `start` in direction `dir0`.
    fn trace(&self, start: (f64, f64), dir0: (f64, f64), ds: f64) -> (Vec<(f64, f64)>, BranchEnd) {
        let mut pts = vec![start];
        let mut t = self.tangent(start, dir0);
        let mut h = ds;
        let min_h = ds * 1e-4;
        let loop_tol = 0.5 * ds;
        while pts.len() < MAX_BRANCH_POINTS {
            let y = *pts.last().unwrap();
            let pred = (y.0 + h * t.0, y.1 + h * t.1);
            match self.correct(pred, pred, t) {
                Some(next) if (next.0 - y.0).hypot(next.1 - y.1) < 2.0 * h => {
                    if !self.inside(next.0, next.1) {
                        if let Some(edge) = self.clip(next) {
                            pts.push(edge);
                        }
                        return (pts, BranchEnd::LeftDomain);
                    }
                    if pts.len() > 3 && (next.0 - start.0).hypot(next.1 - start.1) < loop_tol {
                        return (pts, BranchEnd::Closed);
                    }
                    t = self.tangent(next, t);
                    pts.push(next);
                    h = (h * 1.5).min(ds);
                }
                _ => {
                    h *= 0.5;
                    if h < min_h {
                        return (pts, BranchEnd::NewtonFailed);
                    }
                }
            }
        }
        (pts, BranchEnd::StepLimit)
    }

    /// Bisects along the chord between `a` and `b` (each projected onto the branch)
    /// for the zero of `indicator(f_xi)`.
    fn refine_event(&self, a: (f64, f64), b: (f64, f64), indicator: impl Fn(f64) -> f64) -> Option<(f64, f64)> {
        let dir = (b.0 - a.0, b.1 - a.1);
        let slope = |y: (f64, f64)| self.family.jet(y.0, y.1).d_xi;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let sign_lo = indicator(slope(a)).signum();
        let mut best = a;
        for _ in 0..200 {
            let s = 0.5 * (lo + hi);
            let anchor = (a.0 + s * dir.0, a.1 + s * dir.1);
            let y = self.correct(anchor, anchor, dir)?;
            best = y;
            if indicator(slope(y)).signum() == sign_lo {
                lo = s;
            } else {
                hi = s;
            }
            if (hi - lo) * dir.0.hypot(dir.1) <= self.tol {
                break;
            }
        }
        Some(best)
    }

    fn covered(branches: &[Vec<(f64, f64)>], p: f64, xi: f64, tol: f64) -> bool {
        branches.iter().any(|pts| {
            pts.windows(2).any(|w| {
                let ((p0, x0), (p1, x1)) = (w[0], w[1]);
                let (lo, hi) = if p0 <= p1 { (p0, p1) } else { (p1, p0) };
                if p < lo - 1e-12 || p > hi + 1e-12 {
                    return false;
                }
                let x = if hi - lo < 1e-15 { x0 } else { x0 + (p - p0) / (p1 - p0) * (x1 - x0) };
                (x - xi).abs() < tol
            }) || pts.iter().any(|&(pp, xx)| (pp - p).abs() < 1e-12 && (xx - xi).abs() < tol)
        })
    }
}

/// Roots of `f(p, .) - id` in `[-xi_max, xi_max]`, bracketed on a fine grid then bisected.
pub fn fixed_points_at(family: &RealMapFamily, p: f64, xi_max: f64) -> Vec<f64> {
    let h = |x: f64| family.eval(p, x) - x;
    let n = 3000;
    let xs = linspace(-xi_max, xi_max, n + 1);
    let mut roots = Vec::new();
    for w in xs.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (ha, hb) = (h(a), h(b));
        if ha == 0.0 {
            roots.push(a);
            continue;
        }
        if ha * hb >= 0.0 {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if (h(m) < 0.0) == (ha < 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots
}

/// Fixed-point branches of `family` over `[p_min, p_max]` with LP / PD events.
pub fn fixed_point_scan(family: RealMapFamily, p_min: f64, p_max: f64, settings: ScanSettings) -> Result<FixedPointScan> {
    check_range(p_min, p_max)?;
    if settings.steps < 2 || !(settings.newton_tol > 0.0) || !(settings.xi_max > 0.0) {
        return Err(Error::InvalidArgument("fixed_point_scan needs steps >= 2, newton_tol > 0, xi_max > 0".into()));
    }
    let tracer = Tracer { family: &family, p_range: (p_min, p_max), xi_max: settings.xi_max, tol: settings.newton_tol };
    let ds = ((p_max - p_min) / settings.steps as f64).min(0.01);

    let mut traced: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut infos = Vec::new();
    for p in linspace(p_min, p_max, settings.steps) {
        for xi in fixed_points_at(&family, p, settings.xi_max) {
            if Tracer::covered(&traced, p, xi, 2.0 * ds) {
                continue;
            }
            let Some(seed) = tracer.correct((p, xi), (p, xi), (1.0, 0.0)) else { continue };
            let (mut back, end_back) = tracer.trace(seed, (-1.0, 0.0), ds);
            let (fwd, end_fwd) =
                if end_back == BranchEnd::Closed { (vec![seed], BranchEnd::Closed) } else { tracer.trace(seed, (1.0, 0.0), ds) };
            back.reverse();
            back.extend_from_slice(&fwd[1..]);
            infos.push(BranchInfo { id: traced.len(), ends: [end_back, end_fwd] });
            traced.push(back);
        }
    }

    let records = traced
        .par_iter()
        .enumerate()
        .map(|(id, pts)| {
            let mut out = Vec::with_capacity(pts.len());
            let record = |y: (f64, f64), event| {
                let slope = family.jet(y.0, y.1).d_xi;
                FixedPointRecord { branch: id, p: y.0, xi: y.1, slope, stable: slope.abs() < 1.0, event }
            };
            for (k, &y) in pts.iter().enumerate() {
                out.push(record(y, None));
                let Some(&z) = pts.get(k + 1) else { break };
                let (sy, sz) = (family.jet(y.0, y.1).d_xi, family.jet(z.0, z.1).d_xi);
                for (event, level) in [(Event::LP, 1.0), (Event::PD, -1.0)] {
                    if (sy - level) * (sz - level) < 0.0 {
                        if let Some(e) = tracer.refine_event(y, z, |s| s - level) {
                            out.push(record(e, Some(event)));
                        }
                    }
                }
            }
            out
        })
        .collect::<Vec<_>>()
        .concat();
    Ok(FixedPointScan { family, records, branches: infos })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrbitKind {
    Periodic { period: usize },
    Preperiodic { preperiod: usize, period: usize },
    Neither,
}

pub const SUPERATTRACTING_TOL: f64 = 1e-9;
pub const SUPERATTRACTING_MAX_ITER: usize = 200;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Classifies the sequence `observe(state_t)` of an orbit whose full state first repeats
/// (within `tol`) at some step. The observed component's minimal period divides the full one.
fn classify<S>(mut state: Vec<f64>, step: S, observe: usize, max_iter: usize, tol: f64) -> OrbitKind
where
    S: Fn(&[f64]) -> Vec<f64>,
{
    let mut history = vec![state.clone()];
    let mut repeat = None;
    'outer: for t in 1..=max_iter {
        state = step(&state);
        if state.iter().any(|v| !v.is_finite()) {
            return OrbitKind::Neither;
        }
        for (i, past) in history.iter().enumerate() {
            if close(&state, past, tol) {
                repeat = Some((i, t - i));
                history.push(state);
                break 'outer;
            }
        }
        history.push(state.clone());
    }
    let Some((pre, full_period)) = repeat else { return OrbitKind::Neither };
    // extend so every candidate period can be checked over a whole cycle
    while history.len() < pre + 3 * full_period + 1 {
        let next = step(history.last().unwrap());
        history.push(next);
    }
    let x: Vec<f64> = history.iter().map(|s| s[observe]).collect();
    let period = (1..=full_period)
        .filter(|d| full_period % d == 0)
        .find(|&d| (pre..pre + full_period).all(|t| (x[t + d] - x[t]).abs() <= tol))
        .unwrap_or(full_period);
    let preperiod = (0..=pre).find(|&q| (q..pre + full_period).all(|t| (x[t + period] - x[t]).abs() <= tol)).unwrap_or(pre);
    if preperiod == 0 {
        OrbitKind::Periodic { period }
    } else {
        OrbitKind::Preperiodic { preperiod, period }
    }
}

/// (Pre)periodicity of node `node` (0-based) along the critical orbit of a real network.
pub fn superattracting_check(net: &Network, node: usize, max_iter: usize, tol: f64) -> Result<OrbitKind> {
    if node >= net.n() {
        return Err(Error::IndexOutOfRange { index: node, n: net.n() });
    }
    if net.params().iter().any(|c| c.im != 0.0) {
        return Err(Error::Precondition("superattracting check needs real node parameters".into()));
    }
    let step = |s: &[f64]| {
        let state = MultiState::from_values(s.iter().map(|&v| v.into()).collect());
        let next = net.step(&state).expect("state length matches network");
        if next.any_overflowed() {
            return vec![f64::INFINITY; s.len()];
        }
        next.values.iter().map(|z| z.re).collect::<Vec<f64>>()
    };
    Ok(classify(vec![0.0; net.n()], step, node, max_iter, tol))
}

/// (Pre)periodicity of the orbit of `x0` under `family` at parameter `p`.
pub fn superattracting_check_map(family: RealMapFamily, p: f64, x0: f64, max_iter: usize, tol: f64) -> OrbitKind {
    classify(vec![x0], |s| vec![family.eval(p, s[0])], 0, max_iter, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::FamilySpec;
    use crate::netcore::Complex;

    // independent oracle: compose the self-drive node-3 update with explicit node-1/2 values
    fn node3_batch(b: f64, xi: f64) -> f64 {
        let (z1, z2) = ([0.0, -1.0, 0.0, -1.0], [0.0, -1.0, -1.0, 0.0]);
        let mut z3 = xi;
        for t in 0..4 {
            z3 = (z1[t] + z2[t] + b * z3).powi(2) - 1.0;
        }
        z3
    }

    #[test]
    fn batch_map_matches_the_network() {
        for &(b, xi) in &[(0.3, 0.1), (-1.0, 0.5), (-2.0, -0.7), (0.6, 1.2)] {
            assert!((RealMapFamily::Z3Batch4.eval(b, xi) - node3_batch(b, xi)).abs() < 1e-12);
        }
    }

    #[test]
    fn even_map_matches_the_network() {
        // node 2 at c = -1 with node 1 alternating 0, -1
        for &(a, xi) in &[(-1.0f64, 0.3f64), (0.2, -0.4), (-1.7, 1.1)] {
            let once = (a * 0.0 + xi).powi(2) - 1.0;
            let twice = (once - a).powi(2) - 1.0;
            assert!((RealMapFamily::Z2Even.eval(a, xi) - twice).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let fams = [RealMapFamily::Z3Batch4, RealMapFamily::Z2Even, RealMapFamily::Z3Limit { xi0: -0.4 }];
        for fam in fams {
            for &(p, xi) in &[(0.37, -0.81), (-1.3, 0.45), (0.9, 1.3)] {
                let j = fam.jet(p, xi);
                let h = 1e-6;
                let fx = (fam.eval(p, xi + h) - fam.eval(p, xi - h)) / (2.0 * h);
                let fp = (fam.eval(p + h, xi) - fam.eval(p - h, xi)) / (2.0 * h);
                assert!((j.value - fam.eval(p, xi)).abs() == 0.0);
                assert!((j.d_xi - fx).abs() <= 1e-6 * fx.abs().max(1.0), "{fam:?} {p} {xi}");
                assert!((j.d_p - fp).abs() <= 1e-6 * fp.abs().max(1.0), "{fam:?} {p} {xi}");
            }
        }
    }

    #[test]
    fn sweep_examples() {
        let s = sweep(RealMapFamily::Z2Even, -2.1, -1.0, 2, SweepSettings::default()).unwrap();
        assert!(s.records[0].escaped && s.records[0].samples.is_empty());
        let at_minus_one = &s.records[1];
        assert!(!at_minus_one.escaped);
        // xi^4 - 1 maps 0 -> -1 -> 0: the even-step samples of node 2 at a = -1
        assert!(at_minus_one.samples.iter().all(|&x| x == 0.0 || x == -1.0), "{:?}", &at_minus_one.samples[..4]);

        let s = sweep(RealMapFamily::Z3Batch4, -0.5, 0.0, 3, SweepSettings::default()).unwrap();
        let last = s.records.last().unwrap();
        assert_eq!(last.p, 0.0);
        assert!(!last.escaped && last.samples.iter().all(|&x| x == 0.0));
        assert!(sweep(RealMapFamily::Z2Even, 0.0, 1.0, 1, SweepSettings::default()).is_err());
    }

    #[test]
    fn csv_shape() {
        let s = sweep(RealMapFamily::Z2Even, -1.0, 0.0, 2, SweepSettings { samples: 3, ..Default::default() }).unwrap();
        let csv = s.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').count(), 5);
    }

    #[test]
    fn windows_of_an_always_escaping_orbit() {
        let w = bounded_windows(RealMapFamily::Z3Limit { xi0: 0.0 }, 0.0, 1.0, WindowSettings { x0: 500.0, ..Default::default() }).unwrap();
        assert!(w.is_empty());
    }

    #[test]
    fn windows_of_the_limit_map() {
        // (b*xi)^2 - 1 is conjugate to x^2 - b^2, bounded iff b^2 <= 2
        let w = bounded_windows(RealMapFamily::Z3Limit { xi0: 0.0 }, -2.0, 2.0, WindowSettings { coarse_steps: 400, ..Default::default() })
            .unwrap();
        assert_eq!(w.len(), 1);
        assert!((w[0].0 + 2f64.sqrt()).abs() < 1e-3 && (w[0].1 - 2f64.sqrt()).abs() < 1e-3, "{w:?}");
    }

    #[test]
    fn logistic_like_scan() {
        // xi^2 - 1 + ... : for z3_limit with xi0 = 0 the fixed points of b^2 xi^2 - 1 are known in closed form
        let scan = fixed_point_scan(RealMapFamily::Z3Limit { xi0: 0.0 }, 0.2, 2.0, ScanSettings::default()).unwrap();
        for r in &scan.records {
            let f = RealMapFamily::Z3Limit { xi0: 0.0 }.eval(r.p, r.xi);
            assert!((f - r.xi).abs() <= 1e-10);
        }
        // the fixed point (1 - sqrt(1 + 4 b^2)) / (2 b^2) has slope 1 - sqrt(1 + 4 b^2): PD at b^2 = 3/4
        let pd: Vec<_> = scan.events().filter(|r| r.event == Some(Event::PD)).collect();
        assert_eq!(pd.len(), 1, "{pd:?}");
        assert!((pd[0].p - 0.75f64.sqrt()).abs() < 1e-9, "{}", pd[0].p);
        assert!(scan.events().all(|r| r.event != Some(Event::LP)));
    }

    #[test]
    fn fold_is_detected() {
        // x^2 + p has a saddle node at p = 1/4, xi = 1/2; as z3_limit that is b = 1, xi0 shifts ... use
        // the even map instead: (xi^2 - 1 - a)^2 - 1 folds where a fixed point pair is born
        let scan = fixed_point_scan(RealMapFamily::Z2Even, -2.5, 1.0, ScanSettings::default()).unwrap();
        let lps: Vec<_> = scan.events().filter(|r| r.event == Some(Event::LP)).collect();
        assert!(!lps.is_empty());
        for e in lps {
            let j = RealMapFamily::Z2Even.jet(e.p, e.xi);
            assert!((j.value - e.xi).abs() <= 1e-10);
            assert!((j.d_xi - 1.0).abs() <= 1e-6, "{e:?}");
        }
    }

    #[test]
    fn superattracting_examples() {
        let minus_one = Complex::new(-1.0, 0.0);
        let sd = FamilySpec::SelfDrive { a: -1.0, b: -1.0 }.build_with_c(minus_one).unwrap();
        assert_eq!(superattracting_check(&sd, 1, 200, 1e-9).unwrap(), OrbitKind::Periodic { period: 4 });
        assert_eq!(superattracting_check(&sd, 0, 200, 1e-9).unwrap(), OrbitKind::Periodic { period: 2 });
        assert_eq!(superattracting_check(&sd, 2, 200, 1e-9).unwrap(), OrbitKind::Periodic { period: 4 });

        let half = FamilySpec::SelfDrive { a: -0.5, b: -1.0 }.build_with_c(minus_one).unwrap();
        assert!(matches!(superattracting_check(&half, 1, 200, 1e-9).unwrap(), OrbitKind::Preperiodic { .. }));

        let zero = FamilySpec::SelfDrive { a: 0.3, b: -0.7 }.build().unwrap();
        for k in 0..3 {
            assert_eq!(superattracting_check(&zero, k, 200, 1e-9).unwrap(), OrbitKind::Periodic { period: 1 });
        }
        assert!(superattracting_check(&sd.with_equi_param(Complex::new(-1.0, 0.1)), 1, 200, 1e-9).is_err());
        let escaping = sd.with_equi_param(Complex::new(1.0, 0.0));
        assert_eq!(superattracting_check(&escaping, 0, 200, 1e-9).unwrap(), OrbitKind::Neither);
    }

    #[test]
    fn map_check() {
        assert_eq!(superattracting_check_map(RealMapFamily::Z2Even, -1.0, 0.0, 200, 1e-9), OrbitKind::Periodic { period: 2 });
        assert_eq!(superattracting_check_map(RealMapFamily::Z3Limit { xi0: 0.0 }, 1.0, 0.0, 200, 1e-9), OrbitKind::Periodic { period: 2 });
    }
}
