//! Constrained optimization primitives on `S_r` and `B_rho`.
//!
//! Every solve is a multi-start projected gradient method with Armijo
//! backtracking. Restarts run in parallel and are seeded from
//! `(instance.seed, call-site salt, restart index)`, so results are
//! reproducible regardless of thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::functionals::radial_profile;
use crate::space::{dot, norm_sq, project_ball, retract_sphere, ExtendedReal, Point, ProblemInstance};

const MAX_ITER: usize = 10_000;
const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 80;
/// Local runs keep iterating past `tol_opt` down to this fraction of it, so
/// fixed-point residuals built on top of them have margin to spare.
const POLISH_FACTOR: f64 = 1e-5;

const SALT_SPHERE: u64 = 0x5348_4552;
const SALT_BALL: u64 = 0x4241_4c4c;
const SALT_SHIFTED: u64 = 0x5348_4946;

/// Restarts reaching fewer agreeing values than this are low-confidence.
pub const MIN_AGREEING: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub point: Point,
    pub value: f64,
    /// Norm of the projected gradient at `point`.
    pub stationarity: f64,
    /// Number of restarts that reached `value` within `tol_val`.
    pub restarts_agreeing: usize,
}

impl SolveResult {
    pub fn low_confidence(&self) -> bool {
        self.restarts_agreeing < MIN_AGREEING
    }
}

#[derive(Debug, Clone, Copy)]
enum Domain {
    /// `‖x‖² = r`
    Sphere(f64),
    /// `‖x‖² ≤ rho`
    Ball(f64),
}

impl Domain {
    fn project(self, x: &mut [f64]) {
        match self {
            Domain::Sphere(r) => retract_sphere(x, r),
            Domain::Ball(rho) => project_ball(x, rho),
        }
    }

    /// Norm of the projected gradient of the minimized objective.
    fn stationarity(self, x: &[f64], g: &[f64]) -> f64 {
        match self {
            Domain::Sphere(_) => {
                let ns = norm_sq(x);
                if ns == 0.0 {
                    return norm_sq(g).sqrt();
                }
                let c = dot(g, x) / ns;
                x.iter().zip(g).map(|(xi, gi)| (gi - c * xi).powi(2)).sum::<f64>().sqrt()
            }
            Domain::Ball(rho) => {
                let mut y: Vec<f64> = x.iter().zip(g).map(|(xi, gi)| xi - gi).collect();
                project_ball(&mut y, rho);
                x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
            }
        }
    }

    /// Search direction: the tangent part of `g` on spheres, `g` itself on balls.
    fn direction(self, x: &[f64], g: &[f64], out: &mut [f64]) {
        out.copy_from_slice(g);
        if let Domain::Sphere(_) = self {
            let ns = norm_sq(x);
            if ns > 0.0 {
                let c = dot(g, x) / ns;
                out.iter_mut().zip(x).for_each(|(o, xi)| *o -= c * xi);
            }
        }
    }
}

#[derive(Debug, Clone)]
struct LocalRun {
    x: Vec<f64>,
    value: f64,
    stationarity: f64,
}

/// Projected gradient descent with Armijo backtracking. Near a minimizer the
/// Armijo test is drowned by rounding; a step is then still accepted when the
/// value stays within rounding noise and the stationarity measure drops.
fn local_minimize<F, G>(f: &F, grad: &G, domain: Domain, mut x: Vec<f64>, tol_opt: f64) -> LocalRun
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], &mut [f64]),
{
    let n = x.len();
    domain.project(&mut x);
    let mut fx = f(&x);
    let mut g = vec![0.0; n];
    grad(&x, &mut g);
    let mut stat = domain.stationarity(&x, &g);
    let target = tol_opt * POLISH_FACTOR;
    let mut alpha = 1.0_f64;
    let mut d = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut gy = vec![0.0; n];

    for _ in 0..MAX_ITER {
        if !stat.is_finite() || !fx.is_finite() || stat <= target {
            break;
        }
        domain.direction(&x, &g, &mut d);
        let noise = 16.0 * f64::EPSILON * (1.0 + fx.abs());
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            y.iter_mut().zip(&x).zip(&d).for_each(|((yi, xi), di)| *yi = xi - alpha * di);
            domain.project(&mut y);
            if y == x {
                break;
            }
            let fy = f(&y);
            if fy.is_finite() {
                let slope = match domain {
                    Domain::Sphere(_) => -alpha * norm_sq(&d),
                    Domain::Ball(_) => g.iter().zip(&y).zip(&x).map(|((gi, yi), xi)| gi * (yi - xi)).sum(),
                };
                if fy <= fx + ARMIJO_C * slope {
                    grad(&y, &mut gy);
                    // grow on good agreement with the linear model, shrink
                    // when the step overshoots (zigzag across the minimizer)
                    let ratio = (fy - fx) / slope;
                    if ratio > 0.5 {
                        alpha = (alpha * 2.0).min(1e8);
                    } else if ratio < 0.1 {
                        alpha *= 0.5;
                    }
                    accepted = true;
                } else if -ARMIJO_C * slope <= noise && fy <= fx + noise {
                    grad(&y, &mut gy);
                    let stat_y = domain.stationarity(&y, &gy);
                    accepted = stat_y < stat;
                }
                if accepted {
                    std::mem::swap(&mut x, &mut y);
                    std::mem::swap(&mut g, &mut gy);
                    fx = fy;
                    stat = domain.stationarity(&x, &g);
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    LocalRun { x, value: fx, stationarity: stat }
}

fn rng_for(seed: u64, salt: u64, k: usize) -> ChaCha8Rng {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (k as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

fn gaussian_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let ns = norm_sq(&v);
        if ns > 1e-20 {
            let s = ns.sqrt();
            return v.into_iter().map(|c| c / s).collect();
        }
    }
}

/// Uniform point on `S_r`.
fn sphere_start(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    let s = r.sqrt();
    gaussian_direction(rng, n).into_iter().map(|c| c * s).collect()
}

/// Uniform point in `B_rho`.
fn ball_start(rng: &mut ChaCha8Rng, n: usize, rho: f64) -> Vec<f64> {
    let u: f64 = Uniform::new(0.0, 1.0).expect("valid range").sample(rng);
    let s = rho.sqrt() * u.powf(1.0 / n as f64);
    gaussian_direction(rng, n).into_iter().map(|c| c * s).collect()
}

fn multistart<R>(inst: &ProblemInstance, salt: u64, run: R) -> Vec<LocalRun>
where
    R: Fn(usize, &mut ChaCha8Rng) -> LocalRun + Sync,
{
    (0..inst.tolerances.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(inst.seed, salt, k);
            run(k, &mut rng)
        })
        .collect()
}

fn agree(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Turns local runs (of a minimized objective) into results with the sign
/// restored, ordered best first. Non-converged runs are dropped; if none
/// converged the best iterate is returned inside the error.
fn collect_runs(inst: &ProblemInstance, runs: Vec<LocalRun>, sign: f64, context: &str) -> Result<Vec<SolveResult>> {
    let tol = &inst.tolerances;
    let mut all: Vec<SolveResult> = runs
        .into_iter()
        .filter(|r| r.value.is_finite() && r.x.iter().all(|v| v.is_finite()))
        .map(|r| SolveResult {
            point: Point::from_finite(r.x),
            value: sign * r.value,
            stationarity: r.stationarity,
            restarts_agreeing: 0,
        })
        .collect();
    // best first: largest for maximization, smallest for minimization
    all.sort_by(|a, b| (sign * a.value).total_cmp(&(sign * b.value)));
    let (converged, failed): (Vec<_>, Vec<_>) =
        all.into_iter().partition(|r| r.stationarity.is_finite() && r.stationarity <= tol.tol_opt);
    if converged.is_empty() {
        return Err(Error::SolverFailure {
            context: context.to_string(),
            best: failed.into_iter().next().map(Box::new),
        });
    }
    let values: Vec<f64> = converged.iter().map(|r| r.value).collect();
    Ok(converged
        .into_iter()
        .map(|mut r| {
            r.restarts_agreeing = values.iter().filter(|&&v| agree(v, r.value, tol.tol_val)).count();
            r
        })
        .collect())
}

fn check_sphere_level(inst: &ProblemInstance, r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) || r > inst.rho * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("sphere level must satisfy 0 < r <= rho = {}, got {r}", inst.rho)));
    }
    Ok(())
}

/// Every converged local maximum of `J` on `S_r`, best first.
pub fn max_on_sphere_runs(inst: &ProblemInstance, r: f64) -> Result<Vec<SolveResult>> {
    check_sphere_level(inst, r)?;
    let j = &inst.functional;
    let f = |x: &[f64]| -j.value(x);
    let g = |x: &[f64], out: &mut [f64]| {
        j.gradient_into(x, out);
        out.iter_mut().for_each(|v| *v = -*v);
    };
    let n = inst.n;
    let tol_opt = inst.tolerances.tol_opt;
    let runs = multistart(inst, SALT_SPHERE, |_, rng| {
        local_minimize(&f, &g, Domain::Sphere(r), sphere_start(rng, n, r), tol_opt)
    });
    collect_runs(inst, runs, -1.0, &format!("max_on_sphere(r = {r})"))
}

/// Approximates `sup_{S_r} J` from below.
pub fn max_on_sphere(inst: &ProblemInstance, r: f64) -> Result<SolveResult> {
    Ok(max_on_sphere_runs(inst, r)?.swap_remove(0))
}

/// Approximates `beta_rho = sup_{B_rho} J`.
pub fn max_on_ball(inst: &ProblemInstance) -> Result<SolveResult> {
    let j = &inst.functional;
    let f = |x: &[f64]| -j.value(x);
    let g = |x: &[f64], out: &mut [f64]| {
        j.gradient_into(x, out);
        out.iter_mut().for_each(|v| *v = -*v);
    };
    let (n, rho) = (inst.n, inst.rho);
    let tol_opt = inst.tolerances.tol_opt;
    let mut runs = multistart(inst, SALT_BALL, |_, rng| {
        local_minimize(&f, &g, Domain::Ball(rho), ball_start(rng, n, rho), tol_opt)
    });
    if let Some(origin) = origin_run(inst, Domain::Ball(rho), &g) {
        runs.push(origin);
    }
    let interior = collect_runs(inst, runs, -1.0, "max_on_ball");
    let boundary = max_on_sphere(inst, rho);
    match (interior, boundary) {
        (Ok(mut a), Ok(b)) => {
            let a = a.swap_remove(0);
            Ok(if b.value > a.value { b } else { a })
        }
        (Ok(mut a), Err(_)) => Ok(a.swap_remove(0)),
        (Err(_), Ok(b)) => Ok(b),
        (Err(e), Err(_)) => Err(e),
    }
}

/// The origin as an exact candidate, when the minimized objective has a
/// finite gradient there.
fn origin_run<G>(inst: &ProblemInstance, domain: Domain, grad: &G) -> Option<LocalRun>
where
    G: Fn(&[f64], &mut [f64]),
{
    let x = vec![0.0; inst.n];
    let mut g = vec![0.0; inst.n];
    grad(&x, &mut g);
    if g.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let stationarity = domain.stationarity(&x, &g);
    Some(LocalRun { x, value: 0.0, stationarity })
}

const DELTA_PROBES: i32 = 8;
const DELTA_DIVERGENCE: f64 = 1e6;
const DELTA_SWEEP: usize = 49;

/// Ratio `sup_{S_t} J / t`.
fn sphere_ratio(inst: &ProblemInstance, t: f64) -> Result<f64> {
    Ok(max_on_sphere(inst, t)?.value / t)
}

/// Approximates `delta_rho = sup_{B_rho \ {0}} J(x)/‖x‖²`.
///
/// Declares `+inf` when the best ratio on the spheres `‖x‖² = rho·10^{-2k}`,
/// `k = 1..8`, increases strictly with `k` and ends above `1e6`. Otherwise the
/// ratio is maximized over a log-spaced sweep of sphere levels followed by a
/// golden-section refinement around the best level.
pub fn delta_rho(inst: &ProblemInstance) -> Result<ExtendedReal> {
    let rho = inst.rho;
    let probes =
        (1..=DELTA_PROBES).map(|k| sphere_ratio(inst, rho * 10f64.powi(-2 * k))).collect::<Result<Vec<_>>>()?;
    let increasing = probes.windows(2).all(|w| w[1] > w[0]);
    if increasing && probes[probes.len() - 1] > DELTA_DIVERGENCE {
        return Ok(ExtendedReal::PositiveInfinity);
    }
    // log10(t / rho) from -16 to 0
    let lo = -2.0 * DELTA_PROBES as f64;
    let logs: Vec<f64> = (0..DELTA_SWEEP).map(|i| lo + (0.0 - lo) * i as f64 / (DELTA_SWEEP - 1) as f64).collect();
    let ratio_at = |l: f64| sphere_ratio(inst, rho * 10f64.powf(l));
    let sweep = logs.iter().map(|&l| ratio_at(l)).collect::<Result<Vec<_>>>()?;
    let (best_i, &best_sweep) = sweep.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty sweep");
    let a = logs[best_i.saturating_sub(1)];
    let b = logs[(best_i + 1).min(DELTA_SWEEP - 1)];
    let refined = golden_max(|l| ratio_at(l).unwrap_or(f64::NEG_INFINITY), a, b, 40);
    let best = probes.iter().copied().chain([best_sweep, refined.1]).fold(f64::NEG_INFINITY, f64::max);
    ExtendedReal::finite(best)
}

/// Every converged local minimum of `‖x‖² - t·J(x)` on `B_rho`, best first.
/// The origin is included as a candidate when the objective is differentiable
/// there.
pub fn min_shifted_runs(inst: &ProblemInstance, t: f64) -> Result<Vec<SolveResult>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("penalty weight must be nonnegative, got {t}")));
    }
    let j = &inst.functional;
    let f = |x: &[f64]| norm_sq(x) - t * j.value(x);
    let g = |x: &[f64], out: &mut [f64]| {
        if t == 0.0 {
            out.fill(0.0);
        } else {
            j.gradient_into(x, out);
        }
        out.iter_mut().zip(x).for_each(|(o, xi)| *o = 2.0 * xi - t * *o);
    };
    let (n, rho) = (inst.n, inst.rho);
    let tol_opt = inst.tolerances.tol_opt;
    let mut runs = multistart(inst, SALT_SHIFTED, |k, rng| {
        // alternate interior starts with starts on the boundary sphere
        let start = if k % 2 == 0 { ball_start(rng, n, rho) } else { sphere_start(rng, n, rho) };
        local_minimize(&f, &g, Domain::Ball(rho), start, tol_opt)
    });
    if let Some(origin) = origin_run(inst, Domain::Ball(rho), &g) {
        runs.push(origin);
    }
    collect_runs(inst, runs, 1.0, &format!("min_shifted(t = {t})"))
}

/// Approximate global minimum of `‖x‖² - t·J(x)` over `B_rho`.
pub fn min_shifted(inst: &ProblemInstance, t: f64) -> Result<SolveResult> {
    Ok(min_shifted_runs(inst, t)?.swap_remove(0))
}

/// Golden-section search for a maximum of `f` on `[a, b]`; returns `(x, f(x))`.
pub(crate) fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc > fd {
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
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Polar/spherical parameterization of `B_rho` for `n <= 3`:
/// `(s, θ)` for the disk and `(s, θ, φ)` with `θ ∈ [0, π]` for the ball.
fn polar_to_cartesian(params: &[f64], n: usize) -> Vec<f64> {
    match n {
        1 => vec![params[0]],
        2 => vec![params[0] * params[1].cos(), params[0] * params[1].sin()],
        _ => {
            let (s, th, ph) = (params[0], params[1], params[2]);
            vec![s * th.sin() * ph.cos(), s * th.sin() * ph.sin(), s * th.cos()]
        }
    }
}

/// Brute-force evaluation of `sup_{B_rho} (rho - ‖y‖²)/(r - J(y))`.
///
/// Radial functionals reduce to a grid over `t = ‖y‖² ∈ [0, rho]` refined by
/// golden-section search; otherwise a polar (n = 2) or spherical (n = 3) grid
/// with `grid_points` nodes per coordinate is scanned and the best node is
/// refined by compass search. Independent of the gradient-based solvers.
pub fn grid_oracle_max_ratio(inst: &ProblemInstance, r: f64) -> Result<f64> {
    let n = inst.n;
    if n > 3 {
        return Err(Error::OracleUnsupported(n));
    }
    let rho = inst.rho;
    let j = &inst.functional;
    let grid = inst.tolerances.grid_points;
    let infeasible = |jy: f64| Error::InfeasibleLevel { r, beta: jy, upper: ExtendedReal::PositiveInfinity };
    let ratio = |y: &[f64]| -> Result<f64> {
        let jy = j.value(y);
        if r - jy <= 0.0 {
            return Err(infeasible(jy));
        }
        Ok((rho - norm_sq(y)) / (r - jy))
    };

    if j.radial() {
        let ratio_t = |t: f64| -> Result<f64> {
            let jt = radial_profile(j, t)?;
            if r - jt <= 0.0 {
                return Err(infeasible(jt));
            }
            Ok((rho - t) / (r - jt))
        };
        let ts: Vec<f64> = (0..grid).map(|i| rho * i as f64 / (grid - 1) as f64).collect();
        let vals = ts.iter().map(|&t| ratio_t(t)).collect::<Result<Vec<_>>>()?;
        let (i, &best) = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty grid");
        let a = ts[i.saturating_sub(1)];
        let b = ts[(i + 1).min(grid - 1)];
        let (_, refined) = golden_max(|t| ratio_t(t).unwrap_or(f64::NEG_INFINITY), a, b, 80);
        return Ok(best.max(refined));
    }

    let s_max = rho.sqrt();
    // (lower, upper, periodic) per polar coordinate
    let axes: Vec<(f64, f64, bool)> = match n {
        1 => vec![(-s_max, s_max, false)],
        2 => vec![(0.0, s_max, false), (0.0, 2.0 * std::f64::consts::PI, true)],
        _ => vec![(0.0, s_max, false), (0.0, std::f64::consts::PI, false), (0.0, 2.0 * std::f64::consts::PI, true)],
    };
    let node = |axis: usize, i: usize| {
        let (lo, hi, periodic) = axes[axis];
        let steps = if periodic { grid } else { grid - 1 };
        lo + (hi - lo) * i as f64 / steps as f64
    };
    let total = grid.pow(n as u32);
    let best = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut params = [0.0; 3];
            for (axis, p) in params.iter_mut().enumerate().take(n) {
                *p = node(axis, idx % grid);
                idx /= grid;
            }
            let y = polar_to_cartesian(&params, n);
            ratio(&y).map(|v| (v, params))
        })
        .try_reduce(
            || (f64::NEG_INFINITY, [0.0; 3]),
            |a, b| Ok(if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
        )?;

    // compass search from the best node, starting at one grid cell
    let (mut value, mut params) = best;
    let mut step: Vec<f64> =
        axes.iter().map(|&(lo, hi, periodic)| (hi - lo) / if periodic { grid } else { grid - 1 } as f64).collect();
    let clamp = |axis: usize, v: f64| {
        let (lo, hi, periodic) = axes[axis];
        if periodic {
            v
        } else {
            v.clamp(lo, hi)
        }
    };
    while step.iter().any(|&s| s > 1e-13) {
        let mut improved = false;
        for axis in 0..n {
            for dir in [1.0, -1.0] {
                let mut trial = params;
                trial[axis] = clamp(axis, trial[axis] + dir * step[axis]);
                let v = ratio(&polar_to_cartesian(&trial, n))?;
                if v > value {
                    value = v;
                    params = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::functionals::zoo_get;
    use crate::space::Tolerances;

    fn inst(name: &str, kv: &[(&str, f64)], n: usize, rho: f64) -> ProblemInstance {
        let params: BTreeMap<String, f64> = kv.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        ProblemInstance::new(zoo_get(name, &params, n).unwrap(), rho, Tolerances::default()).unwrap()
    }

    #[test]
    fn runs_are_ordered_best_first() {
        let c = inst("COORD_POWER", &[], 2, 1.0);
        let runs = min_shifted_runs(&c, 0.8).unwrap();
        assert!((runs[0].value + 0.0432).abs() < 1e-10);
        assert!(runs.windows(2).all(|w| w[0].value <= w[1].value));
        let runs = max_on_sphere_runs(&c, 0.5).unwrap();
        assert!(runs.windows(2).all(|w| w[0].value >= w[1].value));
    }

    #[test]
    fn linear_tilt_on_small_sphere_converges() {
        // regression: overshooting steps used to bounce across the maximizer
        let p = inst("NORM_PLUS_LINEAR", &[], 2, 1.0);
        for r in [1e-2, 1e-3, 1e-6] {
            let s = max_on_sphere(&p, r).unwrap();
            assert!(s.point.coords()[0] > 0.0 && s.stationarity <= 1e-8, "r = {r}: {s:?}");
        }
    }

    #[test]
    fn sphere_max_examples() {
        let p = inst("NORM_POWER", &[("q", 1.0)], 2, 1.0);
        let s = max_on_sphere(&p, 0.25).unwrap();
        assert!((s.value - 0.5).abs() < 1e-12);
        assert!((s.point.norm_sq() - 0.25).abs() < 1e-12);
        assert!(s.stationarity <= 1e-8);

        let c = inst("COORD_POWER", &[], 2, 1.0);
        let s = max_on_sphere(&c, 1.0).unwrap();
        assert!((s.value - 1.0).abs() < 1e-10);
        assert!((s.point.coords()[0].abs() - 1.0).abs() < 1e-6);
        assert!(s.point.coords()[1].abs() < 1e-5);
        assert!(!s.low_confidence());

        let z = inst("ZERO", &[], 2, 1.0);
        assert_eq!(max_on_sphere(&z, 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn sphere_level_outside_ball_rejected() {
        let p = inst("ZERO", &[], 2, 1.0);
        assert!(max_on_sphere(&p, 2.0).is_err());
        assert!(max_on_sphere(&p, 0.0).is_err());
    }

    #[test]
    fn ball_max_examples() {
        let p = inst("NORM_POWER", &[("q", 1.0)], 2, 1.0);
        assert!((max_on_ball(&p).unwrap().value - 1.0).abs() < 1e-12);
        let q = inst("QUADRATIC", &[("c", 2.0)], 2, 1.0);
        assert!((max_on_ball(&q).unwrap().value - 2.0).abs() < 1e-12);
        let c = inst("COORD_POWER", &[], 2, 1.0);
        let b = max_on_ball(&c).unwrap();
        assert!((b.value - 1.0).abs() < 1e-10);
        assert!((b.point.coords()[0].abs() - 1.0).abs() < 1e-6);
        let neg = inst("QUADRATIC", &[("c", -1.0)], 2, 1.0);
        let b = max_on_ball(&neg).unwrap();
        assert!(b.value.abs() < 1e-12);
    }

    #[test]
    fn delta_examples() {
        let q = inst("QUADRATIC", &[("c", 2.0)], 2, 1.0);
        let d = delta_rho(&q).unwrap();
        assert!((d.value().unwrap() - 2.0).abs() < 1e-12);
        let p = inst("NORM_POWER", &[("q", 1.0)], 2, 1.0);
        assert!(delta_rho(&p).unwrap().is_infinite());
        let z = inst("ZERO", &[], 2, 1.0);
        assert_eq!(delta_rho(&z).unwrap(), ExtendedReal::Finite(0.0));
    }

    #[test]
    fn min_shifted_examples() {
        let z = inst("ZERO", &[], 2, 1.0);
        let m = min_shifted(&z, 3.0).unwrap();
        assert_eq!(m.value, 0.0);
        assert!(m.point.is_origin());

        let p = inst("NORM_POWER", &[("q", 1.0)], 2, 1.0);
        let m = min_shifted(&p, 1.0).unwrap();
        assert!((m.value + 0.25).abs() < 1e-12);
        assert!((m.point.norm() - 0.5).abs() < 1e-10);

        let q = inst("QUADRATIC", &[("c", 1.0)], 2, 1.0);
        let m = min_shifted(&q, 0.5).unwrap();
        assert!(m.value.abs() < 1e-12);
        assert!(m.point.norm() < 1e-6);
    }

    #[test]
    fn min_shifted_rejects_negative_weight() {
        let z = inst("ZERO", &[], 2, 1.0);
        assert!(min_shifted(&z, -1.0).is_err());
    }

    #[test]
    fn grid_oracle_examples() {
        let z = inst("ZERO", &[], 2, 1.0);
        assert!((grid_oracle_max_ratio(&z, 2.0).unwrap() - 0.5).abs() < 1e-12);
        let p = inst("NORM_POWER", &[("q", 1.0)], 2, 1.0);
        assert!((grid_oracle_max_ratio(&p, 1.25).unwrap() - 1.0).abs() < 1e-9);
        let expect = 4.0 - 2.0 * 3f64.sqrt();
        assert!((grid_oracle_max_ratio(&p, 2.0).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn grid_oracle_errors() {
        let p = inst("ZERO", &[], 4, 1.0);
        assert!(matches!(grid_oracle_max_ratio(&p, 2.0), Err(Error::OracleUnsupported(4))));
        let c = inst("COORD_POWER", &[], 2, 1.0);
        assert!(matches!(grid_oracle_max_ratio(&c, 0.5), Err(Error::InfeasibleLevel { .. })));
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let c = inst("NORM_PLUS_LINEAR", &[], 3, 1.0).with_seed(7);
        let a = min_shifted_runs(&c, 1.3).unwrap();
        let b = min_shifted_runs(&c, 1.3).unwrap();
        assert_eq!(a, b);
    }
}
