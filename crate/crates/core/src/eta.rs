//! The level function
//!
//! ```text
//! eta(r) = sup_{y ∈ B_rho} (rho - ‖y‖²) / (r - J(y)),   r > beta_rho,
//! ```
//!
//! its argmax set `Gamma(r)`, curve tabulation and inversion.
//!
//! `eta(r)` is computed by Dinkelbach iteration. For a trial multiplier `t`
//! the subproblem `min_{B_rho} ‖x‖² - t·J(x)` yields `x_t` and
//! `F(t) = (rho - ‖x_t‖²) - t·(r - J(x_t))`; the update is
//! `t ← (rho - ‖x_t‖²)/(r - J(x_t))`. Starting from the origin's ratio
//! `rho/r` the iterates increase monotonically to `eta(r)`, and at the root
//! the minimizers of the subproblem are exactly `Gamma(r)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solvers::{delta_rho, max_on_ball, min_shifted_runs, SolveResult};
use crate::space::{ExtendedReal, InstanceDescriptor, Point, ProblemInstance, Tolerances};
use crate::theorems::fixed_point_residual;

const DINKELBACH_MAX_ITERS: usize = 100;
/// Minimizers whose penalized value lies within this fraction of `tol_val`
/// (relative) of the best are members of `Gamma(r)`.
const GAMMA_VALUE_FRACTION: f64 = 0.5;

/// Outcome of the feasibility gate `beta_rho / rho < delta_rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub holds: bool,
    pub beta: f64,
    pub delta: ExtendedReal,
    pub rho: f64,
}

impl Condition {
    /// Right end of the working interval, `rho·delta_rho`.
    pub fn upper_level(&self) -> ExtendedReal {
        self.delta.scale_endpoint(self.rho).unwrap_or(ExtendedReal::PositiveInfinity)
    }

    /// `beta_rho < r < rho·delta_rho`.
    pub fn in_working_interval(&self, r: f64) -> bool {
        r > self.beta && self.upper_level().exceeds(r)
    }

    fn infeasible(&self, r: f64) -> Error {
        Error::InfeasibleLevel { r, beta: self.beta, upper: self.upper_level() }
    }
}

/// Computes `beta_rho`, `delta_rho` and whether `beta_rho/rho < delta_rho`.
/// The strict inequality must hold with a margin of `tol_val` (relative).
pub fn check_condition(inst: &ProblemInstance) -> Result<Condition> {
    let beta = max_on_ball(inst)?.value;
    let delta = delta_rho(inst).map_err(|e| match e {
        Error::SolverFailure { context, best } => {
            Error::SolverFailure { context: format!("{context} while computing delta_rho (beta_rho = {beta})"), best }
        }
        other => other,
    })?;
    let ratio = beta / inst.rho;
    let margin = inst.tolerances.tol_val * (1.0 + ratio.abs());
    Ok(Condition { holds: delta.exceeds(ratio + margin), beta, delta, rho: inst.rho })
}

/// One cluster of `Gamma(r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCluster {
    pub representative: Point,
    /// `J(representative)`
    pub j_value: f64,
    pub members: usize,
    /// The cluster is a whole sphere (radial functional); `representative`
    /// stands for every point of it.
    pub manifold: bool,
}

/// Greedy clustering of solver results ordered best first. Radial
/// functionals are clustered by squared norm, since their argmax sets are
/// unions of spheres.
pub fn cluster_points(inst: &ProblemInstance, candidates: &[SolveResult], radius: f64) -> Vec<GammaCluster> {
    let radial = inst.functional.radial();
    let mut clusters: Vec<GammaCluster> = Vec::new();
    for c in candidates {
        let p = &c.point;
        let hit = clusters.iter_mut().find(|k| {
            if radial {
                (k.representative.norm_sq() - p.norm_sq()).abs() <= radius
            } else {
                k.representative.dist(p) <= radius
            }
        });
        match hit {
            Some(k) => k.members += 1,
            None => clusters.push(GammaCluster {
                representative: p.clone(),
                j_value: inst.functional.value_at(p),
                members: 1,
                manifold: radial && inst.n >= 2 && p.norm_sq() > radius,
            }),
        }
    }
    clusters
}

/// Representative `v_r`: largest `J`, ties (within `tol`) broken by the
/// lexicographically smallest coordinates.
pub fn choose_representative(gamma: &[GammaCluster], tol: f64) -> Option<&GammaCluster> {
    let best_j = gamma.iter().map(|c| c.j_value).fold(f64::NEG_INFINITY, f64::max);
    gamma.iter().filter(|c| c.j_value >= best_j - tol * (1.0 + best_j.abs())).min_by(|a, b| {
        let (x, y) = (a.representative.coords(), b.representative.coords());
        x.iter().zip(y).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DinkelbachStep {
    pub t: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaSample {
    pub r: f64,
    pub eta: f64,
    pub gamma: Vec<GammaCluster>,
    /// `v_r`, the chosen element of `Gamma(r)`.
    pub representative: Point,
    /// `psi(r) = ‖v_r‖²`
    pub psi: f64,
    pub dinkelbach_iters: usize,
    /// Fixed-point residual of `v_r` with multiplier `eta/2`; NaN when the
    /// gradient is undefined at `v_r`.
    pub residual: f64,
    pub in_working_interval: bool,
    pub trace: Vec<DinkelbachStep>,
}

impl EtaSample {
    pub fn is_singleton(&self) -> bool {
        self.gamma.len() == 1
    }
}

/// `eta(r)` and `Gamma(r)` for `r > beta_rho`.
///
/// Levels at or beyond `rho·delta_rho` are still evaluated (the level
/// function is defined on all of `]beta_rho, +inf[`) but are flagged as
/// outside the working interval.
pub fn compute_eta(inst: &ProblemInstance, cond: &Condition, r: f64) -> Result<EtaSample> {
    if !(r.is_finite() && r > cond.beta) {
        return Err(cond.infeasible(r));
    }
    let tol = &inst.tolerances;
    let rho = inst.rho;
    let j = &inst.functional;
    let mut t = rho / r;
    let mut trace = Vec::new();
    for _ in 0..DINKELBACH_MAX_ITERS {
        let runs = min_shifted_runs(inst, t)?;
        let x = &runs[0].point;
        let num = rho - x.norm_sq();
        let den = r - j.value_at(x);
        if den <= 0.0 {
            return Err(cond.infeasible(r));
        }
        let f = num - t * den;
        trace.push(DinkelbachStep { t, f });
        if f.abs() <= tol.tol_val * rho {
            return Ok(assemble(inst, cond, r, t, runs, trace));
        }
        t = num / den;
    }
    Err(Error::SolverFailure {
        context: format!("Dinkelbach iteration at r = {r} did not converge in {DINKELBACH_MAX_ITERS} steps"),
        best: None,
    })
}

fn assemble(
    inst: &ProblemInstance,
    cond: &Condition,
    r: f64,
    eta: f64,
    runs: Vec<SolveResult>,
    trace: Vec<DinkelbachStep>,
) -> EtaSample {
    let tol = &inst.tolerances;
    let best = runs[0].value;
    let cutoff = best + GAMMA_VALUE_FRACTION * tol.tol_val * (1.0 + best.abs());
    let near: Vec<SolveResult> = runs.into_iter().filter(|c| c.value <= cutoff).collect();
    let gamma = cluster_points(inst, &near, tol.tol_cluster);
    let representative =
        choose_representative(&gamma, tol.tol_val).expect("at least the best run is in gamma").representative.clone();
    let residual = fixed_point_residual(inst, &representative, eta / 2.0).unwrap_or(f64::NAN);
    EtaSample {
        r,
        eta,
        psi: representative.norm_sq(),
        representative,
        gamma,
        dinkelbach_iters: trace.len(),
        residual,
        in_working_interval: cond.in_working_interval(r),
        trace,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub r: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaCurve {
    pub instance: InstanceDescriptor,
    pub tolerances: Tolerances,
    pub rho: f64,
    pub beta: f64,
    pub delta: ExtendedReal,
    pub r_lo: f64,
    pub r_hi: f64,
    /// Successful samples, strictly increasing in `r`.
    pub samples: Vec<EtaSample>,
    /// `|Gamma(r)| = 1` per sample.
    pub singleton_flags: Vec<bool>,
    /// Levels whose evaluation failed; the curve has gaps there.
    pub failures: Vec<SampleFailure>,
    /// Shape invariants that did not hold.
    pub violations: Vec<String>,
}

impl EtaCurve {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn eta_range(&self) -> Option<(f64, f64)> {
        Some((self.samples.last()?.eta, self.samples.first()?.eta))
    }

    pub fn psi_range(&self) -> Option<(f64, f64)> {
        let it = self.samples.iter().map(|s| s.psi);
        let lo = it.clone().fold(f64::INFINITY, f64::min);
        let hi = it.fold(f64::NEG_INFINITY, f64::max);
        (!self.samples.is_empty()).then_some((lo, hi))
    }

    /// Every step of `eta` drops by more than `tol_val`, i.e. the decrease is
    /// resolved by the solver accuracy.
    pub fn eta_strictly_decreasing(&self) -> bool {
        let tol = self.tolerances.tol_val;
        self.samples.windows(2).all(|w| w[0].eta - w[1].eta > tol)
    }
}

/// `r_lo · (r_hi/r_lo)^{i/(count-1)}`, `i = 0..count`.
pub fn geometric_levels(r_lo: f64, r_hi: f64, count: usize) -> Vec<f64> {
    let ratio = r_hi / r_lo;
    (0..count)
        .map(|i| match i {
            0 => r_lo,
            _ if i == count - 1 => r_hi,
            _ => r_lo * ratio.powf(i as f64 / (count - 1) as f64),
        })
        .collect()
}

/// Tabulates `eta` on a geometric grid of `[r_lo, r_hi]` inside the working
/// interval and certifies the curve's shape. Per-level failures (including
/// levels outside the working interval) are recorded, not raised.
pub fn tabulate_curve(
    inst: &ProblemInstance,
    cond: &Condition,
    r_lo: f64,
    r_hi: f64,
    count: usize,
) -> Result<EtaCurve> {
    if count < 3 {
        return Err(Error::Precondition(format!("need at least 3 samples, got {count}")));
    }
    if !(r_lo.is_finite() && r_hi.is_finite() && r_lo > 0.0 && r_lo < r_hi) {
        return Err(Error::Precondition(format!("need 0 < r_lo < r_hi < +inf, got [{r_lo}, {r_hi}]")));
    }
    let levels = geometric_levels(r_lo, r_hi, count);
    let results: Vec<(f64, Result<EtaSample>)> = levels
        .par_iter()
        .map(|&r| {
            let res = if cond.holds && cond.in_working_interval(r) {
                compute_eta(inst, cond, r)
            } else {
                Err(cond.infeasible(r))
            };
            (r, res)
        })
        .collect();
    let mut samples = Vec::new();
    let mut failures = Vec::new();
    for (r, res) in results {
        match res {
            Ok(s) => samples.push(s),
            Err(e) => failures.push(SampleFailure { r, error: e.to_string() }),
        }
    }
    let mut curve = EtaCurve {
        instance: inst.descriptor(),
        tolerances: inst.tolerances,
        rho: inst.rho,
        beta: cond.beta,
        delta: cond.delta,
        r_lo,
        r_hi,
        singleton_flags: samples.iter().map(EtaSample::is_singleton).collect(),
        samples,
        failures,
        violations: Vec::new(),
    };
    curve.violations = shape_violations(&curve);
    Ok(curve)
}

/// Chord test for three ordered samples: `eta(r_mid)` may not exceed the
/// linear interpolant of its neighbours by more than the tolerance.
pub fn convexity_excess(a: &EtaSample, m: &EtaSample, b: &EtaSample) -> f64 {
    let w = (m.r - a.r) / (b.r - a.r);
    m.eta - ((1.0 - w) * a.eta + w * b.eta)
}

/// `eta(r) <= rho/(r - beta_rho)`; returns the bound.
pub fn level_bound(rho: f64, beta: f64, r: f64) -> f64 {
    rho / (r - beta)
}

fn shape_violations(curve: &EtaCurve) -> Vec<String> {
    let tol = curve.tolerances.tol_val;
    let s = &curve.samples;
    let mut out = Vec::new();
    for (k, w) in s.windows(2).enumerate() {
        if w[1].eta >= w[0].eta {
            out.push(format!("eta not decreasing between r = {} and r = {}", w[0].r, w[1].r));
        }
        if w[1].psi > w[0].psi + tol {
            out.push(format!("psi increases between r = {} and r = {}", w[0].r, w[1].r));
        }
        if curve.singleton_flags[k] && curve.singleton_flags[k + 1] && w[1].psi >= w[0].psi - tol {
            out.push(format!("psi not strictly decreasing between singleton levels r = {} and r = {}", w[0].r, w[1].r));
        }
    }
    for w in s.windows(3) {
        let excess = convexity_excess(&w[0], &w[1], &w[2]);
        if excess > tol {
            out.push(format!("convexity fails at r = {} (excess {excess:e})", w[1].r));
        }
    }
    for x in s {
        let bound = level_bound(curve.rho, curve.beta, x.r);
        if x.eta > bound + tol {
            out.push(format!("eta({}) = {} exceeds rho/(r - beta) = {bound}", x.r, x.eta));
        }
    }
    out
}

/// Finds `r*` with `|eta(r*) - target| <= tol_val·(1 + target)` by bisection
/// on `r`, re-evaluating `eta` at every probe. Returns the sample at `r*`.
pub fn invert_eta(inst: &ProblemInstance, cond: &Condition, curve: &EtaCurve, target: f64) -> Result<EtaSample> {
    let (lo_eta, hi_eta) = curve
        .eta_range()
        .filter(|_| curve.samples.len() >= 2)
        .ok_or_else(|| Error::Precondition("curve needs at least two samples".into()))?;
    if !(target > lo_eta && target < hi_eta) {
        return Err(Error::OutOfRange { target, lo: lo_eta, hi: hi_eta });
    }
    let tol = inst.tolerances.tol_val * (1.0 + target);
    // tightest sampled bracket: eta(a) > target > eta(b)
    let k = curve
        .samples
        .windows(2)
        .position(|w| w[0].eta >= target && w[1].eta <= target)
        .ok_or_else(|| Error::Precondition("curve is not monotone around the target".into()))?;
    let (mut a, mut b) = (curve.samples[k].clone(), curve.samples[k + 1].clone());
    for s in [&a, &b] {
        if (s.eta - target).abs() <= tol {
            return Ok(s.clone());
        }
    }
    loop {
        let mid = 0.5 * (a.r + b.r);
        if mid <= a.r || mid >= b.r {
            let best = if (a.eta - target).abs() <= (b.eta - target).abs() { a } else { b };
            return Ok(best);
        }
        let s = compute_eta(inst, cond, mid)?;
        if (s.eta - target).abs() <= tol {
            return Ok(s);
        }
        if s.eta > target {
            a = s;
        } else {
            b = s;
        }
    }
}

/// Default tabulation range: `[1.05·beta + 0.05, 4·beta + 1]`, clipped into
/// the working interval when `delta_rho` is finite.
pub fn auto_range(cond: &Condition) -> Result<(f64, f64)> {
    let beta = cond.beta;
    let mut lo = 1.05 * beta + 0.05;
    let mut hi = 4.0 * beta + 1.0;
    if let ExtendedReal::Finite(upper) = cond.upper_level() {
        if upper <= beta {
            return Err(cond.infeasible(lo));
        }
        let span = upper - beta;
        hi = hi.min(beta + 0.95 * span);
        lo = lo.min(beta + 0.05 * span);
        if lo >= hi {
            lo = beta + 0.05 * span;
        }
    }
    Ok((lo, hi))
}

/// Indices `k` where the step `psi_k -> psi_{k+1}` exceeds ten times the
/// largest of the (up to) three preceding steps.
pub fn psi_jumps(curve: &EtaCurve) -> Vec<usize> {
    let gaps: Vec<f64> = curve.samples.windows(2).map(|w| (w[1].psi - w[0].psi).abs()).collect();
    let floor = curve.tolerances.tol_val;
    (0..gaps.len())
        .filter(|&k| {
            if k == 0 {
                return false;
            }
            let local = gaps[k.saturating_sub(3)..k].iter().copied().fold(0.0, f64::max);
            gaps[k] > 10.0 * local.max(floor)
        })
        .collect()
}

/// Refinement probe for continuity of `r -> Gamma(r)` on singleton levels.
/// A heuristic: singleton detection is itself tolerance-dependent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuityProbe {
    /// Largest displacement between consecutive singleton representatives
    /// with `steps` uniform intervals.
    pub coarse: f64,
    /// Same with `2·steps` intervals.
    pub fine: f64,
}

impl ContinuityProbe {
    pub fn ratio(&self) -> f64 {
        self.fine / self.coarse
    }
}

pub fn continuity_probe(
    inst: &ProblemInstance,
    cond: &Condition,
    r_lo: f64,
    r_hi: f64,
    steps: usize,
) -> Result<ContinuityProbe> {
    let displacement = |intervals: usize| -> Result<f64> {
        let levels: Vec<f64> = (0..=intervals).map(|i| r_lo + (r_hi - r_lo) * i as f64 / intervals as f64).collect();
        let samples = levels.par_iter().map(|&r| compute_eta(inst, cond, r)).collect::<Result<Vec<_>>>()?;
        Ok(samples
            .windows(2)
            .filter(|w| w[0].is_singleton() && w[1].is_singleton())
            .map(|w| w[0].representative.dist(&w[1].representative))
            .fold(0.0, f64::max))
    };
    Ok(ContinuityProbe { coarse: displacement(steps)?, fine: displacement(2 * steps)? })
}
