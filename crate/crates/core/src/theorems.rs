//! Executable checks of the spherical-maximum results: the inclusion chain
//! `Gamma(r) ⊆ spherical maxima ⊆ penalized minima ⊆ fixed points`, radius
//! monotonicity, the two auxiliary propositions, the multiplier map `phi`
//! and the multiplicity detector.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eta::{
    check_condition, cluster_points, compute_eta, convexity_excess, invert_eta, level_bound, psi_jumps, Condition,
    EtaCurve, EtaSample,
};
use crate::solvers::{max_on_ball, max_on_sphere, max_on_sphere_runs, min_shifted, min_shifted_runs, SolveResult};
use crate::space::{dot, InstanceDescriptor, Point, ProblemInstance};

/// `‖x - lambda·J'(x)‖ / (1 + ‖x‖)`.
pub fn fixed_point_residual(inst: &ProblemInstance, x: &Point, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Precondition(format!("multiplier must be positive, got {lambda}")));
    }
    inst.check_point(x)?;
    let g = inst.functional.gradient_at(x)?;
    let diff: f64 = x.coords().iter().zip(&g).map(|(xi, gi)| (xi - lambda * gi).powi(2)).sum::<f64>().sqrt();
    Ok(diff / (1.0 + x.norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub id: String,
    pub status: Status,
    #[serde(with = "ext_float")]
    pub measured: f64,
    #[serde(with = "ext_float")]
    pub threshold: f64,
    pub witness: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Clause {
    fn check(id: impl Into<String>, pass: bool, measured: f64, threshold: f64) -> Self {
        Self {
            id: id.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            measured,
            threshold,
            witness: None,
            note: None,
        }
    }

    fn skip(id: impl Into<String>, note: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            status: Status::Skip,
            measured: 0.0,
            threshold: 0.0,
            witness: None,
            note: Some(note.into()),
        }
    }

    fn with_witness(mut self, pts: Vec<Point>) -> Self {
        self.witness = Some(pts);
        self
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Floats that may be infinite serialize as numbers or the strings
/// `"+inf"` / `"-inf"`.
mod ext_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("+inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a float: {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub instance: InstanceDescriptor,
    pub clauses: Vec<Clause>,
    pub overall: bool,
}

impl VerificationReport {
    pub fn new(instance: InstanceDescriptor) -> Self {
        Self { instance, clauses: Vec::new(), overall: true }
    }

    pub fn push(&mut self, clause: Clause) {
        self.overall &= clause.status != Status::Fail;
        self.clauses.push(clause);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        other.clauses.into_iter().for_each(|c| self.push(c));
    }

    pub fn failures(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn count(&self, status: Status) -> usize {
        self.clauses.iter().filter(|c| c.status == status).count()
    }
}

/// Checks, for every cluster representative `x` of `Gamma(r)`:
/// (a) `0 < ‖x‖² < rho`; (b) `x` maximizes `J` on its own sphere;
/// (c) `‖x‖² - eta·J(x) = rho - r·eta` and no point of `B_rho` does better;
/// (d) `x = (eta/2)·J'(x)` up to `tol_res`.
pub fn verify_theorem1_chain(inst: &ProblemInstance, sample: &EtaSample) -> VerificationReport {
    let mut report = VerificationReport::new(inst.descriptor());
    let ids = ["chain.a.norm_bounds", "chain.b.spherical_max", "chain.c.penalized_min", "chain.d.fixed_point"];
    if !sample.in_working_interval {
        let note = format!("r = {} is outside the working interval; the chain is not asserted there", sample.r);
        for id in ids {
            report.push(Clause::skip(id, note.clone()));
        }
        return report;
    }
    let tol = &inst.tolerances;
    let (rho, r, eta) = (inst.rho, sample.r, sample.eta);
    let target = rho - r * eta;
    let min_value = min_shifted(inst, eta).map(|m| m.value);

    let clauses: Vec<Vec<Clause>> = sample
        .gamma
        .par_iter()
        .enumerate()
        .map(|(k, cluster)| {
            let x = &cluster.representative;
            let ns = x.norm_sq();
            let jx = inst.functional.value_at(x);
            let tag = |id: &str| format!("{id}[{k}]");
            let witness = vec![x.clone()];
            let mut out = Vec::with_capacity(5);

            let upper = rho - tol.tol_val;
            out.push(Clause::check(tag(ids[0]), ns > 0.0 && ns < upper, ns, upper).with_witness(witness.clone()));

            out.push(if ns > 0.0 {
                match max_on_sphere(inst, ns) {
                    Ok(m) => {
                        let gap = m.value - jx;
                        Clause::check(tag(ids[1]), gap <= tol.tol_val, gap, tol.tol_val)
                            .with_witness(vec![x.clone(), m.point])
                    }
                    Err(e) => Clause::check(tag(ids[1]), false, f64::INFINITY, tol.tol_val)
                        .with_witness(witness.clone())
                        .with_note(e.to_string()),
                }
            } else {
                Clause::check(tag(ids[1]), false, ns, 0.0)
                    .with_witness(witness.clone())
                    .with_note("representative is the origin")
            });

            let identity = (ns - eta * jx - target).abs();
            let id_tol = tol.tol_val * (1.0 + rho + target.abs());
            out.push(
                Clause::check(format!("{}.identity", tag(ids[2])), identity <= id_tol, identity, id_tol)
                    .with_witness(witness.clone()),
            );
            let min_tol = tol.tol_val * (1.0 + target.abs());
            out.push(match &min_value {
                Ok(m) => {
                    let shortfall = target - m;
                    Clause::check(format!("{}.global", tag(ids[2])), shortfall <= min_tol, shortfall, min_tol)
                }
                Err(e) => Clause::check(format!("{}.global", tag(ids[2])), false, f64::INFINITY, min_tol)
                    .with_note(e.to_string()),
            });

            out.push(match fixed_point_residual(inst, x, eta / 2.0) {
                Ok(res) => Clause::check(tag(ids[3]), res <= tol.tol_res, res, tol.tol_res).with_witness(witness),
                Err(e) => Clause::check(tag(ids[3]), false, f64::INFINITY, tol.tol_res)
                    .with_witness(witness)
                    .with_note(e.to_string()),
            });
            if cluster.manifold {
                out.iter_mut().for_each(|c| {
                    c.note.get_or_insert_with(|| "representative of a whole sphere (radial functional)".into());
                });
            }
            out
        })
        .collect();
    clauses.into_iter().flatten().for_each(|c| report.push(c));
    report
}

/// Shape checks of a tabulated curve, one clause per adjacent pair or triple:
/// `eta` decreasing, `psi` nonincreasing (strictly between singleton levels),
/// the radius ordering derived from the two-level minimization lemma, the
/// bound `eta <= rho/(r - beta)`, and chord convexity.
pub fn verify_monotonicity(curve: &EtaCurve) -> VerificationReport {
    let mut report = VerificationReport::new(curve.instance.clone());
    let s = &curve.samples;
    if s.len() < 2 {
        report.push(Clause::skip("monotonicity", "fewer than two samples; nothing to compare"));
        return report;
    }
    let tol = curve.tolerances.tol_val;
    for (k, w) in s.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        let d_eta = b.eta - a.eta;
        report.push(Clause::check(format!("eta.decreasing[{k}]"), d_eta < 0.0, d_eta, 0.0));
        let d_psi = b.psi - a.psi;
        report.push(Clause::check(format!("psi.nonincreasing[{k}]"), d_psi <= tol, d_psi, tol));
        if curve.singleton_flags[k] && curve.singleton_flags[k + 1] {
            report.push(
                Clause::check(format!("psi.strict[{k}]"), d_psi < -tol, d_psi, -tol)
                    .with_witness(vec![a.representative.clone(), b.representative.clone()]),
            );
        } else {
            report.push(Clause::skip(format!("psi.strict[{k}]"), "argmax set is not a singleton"));
        }
        report.push(radius_order_clause(curve, k, a, b));
    }
    for (k, x) in s.iter().enumerate() {
        let bound = level_bound(curve.rho, curve.beta, x.r) + tol;
        report.push(Clause::check(format!("eta.bound[{k}]"), x.eta <= bound, x.eta, bound));
    }
    for (k, w) in s.windows(3).enumerate() {
        let excess = convexity_excess(&w[0], &w[1], &w[2]);
        report.push(Clause::check(format!("eta.convex[{}]", k + 1), excess <= tol, excess, tol));
    }
    report
}

/// `1/eta(r) = inf (r - J)/(rho - ‖x‖²) = inf f + r·g` with
/// `f = -J/(rho - ‖x‖²)` and `g = 1/(rho - ‖x‖²)`; the lemma applied to the
/// two representatives orders their radii.
fn radius_order_clause(curve: &EtaCurve, k: usize, a: &EtaSample, b: &EtaSample) -> Clause {
    let id = format!("prop1.radius_order[{k}]");
    let rho = curve.rho;
    let pts = [&a.representative, &b.representative];
    if pts.iter().any(|p| p.norm_sq() >= rho) {
        return Clause::skip(id, "representative on the boundary of the ball");
    }
    let g: Vec<f64> = pts.iter().map(|p| 1.0 / (rho - p.norm_sq())).collect();
    // J at the representatives is recovered from the level identity
    // (rho - ‖x‖²)/(r - J) = eta
    let j_vals = [a.r - (rho - pts[0].norm_sq()) / a.eta, b.r - (rho - pts[1].norm_sq()) / b.eta];
    let f: Vec<f64> = j_vals.iter().zip(&g).map(|(j, gi)| -j * gi).collect();
    let tol = curve.tolerances.tol_val;
    match proposition1_check(&f, &g, a.r, b.r, 0, 1, tol) {
        Ok(ok) => Clause::check(id, ok, g[1] - g[0], tol).with_witness(vec![pts[0].clone(), pts[1].clone()]),
        Err(e) => Clause::check(id, false, g[1] - g[0], tol).with_note(e.to_string()),
    }
}

/// With `y_a` minimizing `f + a·g` and `y_b` minimizing `f + b·g` over the
/// same finite sample, `a < b` forces `g(y_b) <= g(y_a)`. The argmins are
/// validated first (within `tol`, relative).
pub fn proposition1_check(
    f_values: &[f64],
    g_values: &[f64],
    a: f64,
    b: f64,
    argmin_a: usize,
    argmin_b: usize,
    tol: f64,
) -> Result<bool> {
    if f_values.len() != g_values.len() || f_values.is_empty() {
        return Err(Error::Precondition("f and g samples must be non-empty and of equal length".into()));
    }
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(Error::Precondition(format!("need a < b, got a = {a}, b = {b}")));
    }
    let n = f_values.len();
    if argmin_a >= n || argmin_b >= n {
        return Err(Error::InvalidCertificate("argmin index out of range".into()));
    }
    let certify = |t: f64, idx: usize, label: &str| -> Result<()> {
        let obj = |i: usize| f_values[i] + t * g_values[i];
        let claimed = obj(idx);
        let (best_i, best) = (0..n).map(|i| (i, obj(i))).min_by(|x, y| x.1.total_cmp(&y.1)).expect("non-empty");
        if claimed > best + tol * (1.0 + best.abs()) {
            return Err(Error::InvalidCertificate(format!(
                "index {idx} is not a minimizer of f + {label}·g: value {claimed} > {best} at index {best_i}"
            )));
        }
        Ok(())
    };
    certify(a, argmin_a, "a")?;
    certify(b, argmin_b, "b")?;
    Ok(g_values[argmin_b] <= g_values[argmin_a] + tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposition2Outcome {
    /// `⟨J'(x), x⟩ < 2·J(x)` at the maximizer `x` of `J` on `B_s`.
    pub applies: bool,
    /// `‖x‖²`
    pub rho_star: f64,
    pub maximizer: Point,
    pub inner: f64,
    pub two_j: f64,
    /// `omega'(1)` for `omega(t) = J(t·x)/‖t·x‖²`, by central differences.
    pub omega_prime_fd: f64,
    /// `(⟨J'(x), x⟩ - 2·J(x)) / ‖x‖²`
    pub omega_prime_exact: f64,
    /// The gate re-run on `B_{rho_star}` when the test applies.
    pub condition_at_rho_star: Option<Condition>,
}

/// Sufficient test for the gate: if the maximizer `x` of `J` on `B_s`
/// satisfies `⟨J'(x), x⟩ < 2·J(x)`, the gate holds with `rho = ‖x‖²`.
pub fn proposition2_check(inst: &ProblemInstance, s: f64) -> Result<Proposition2Outcome> {
    let tol = inst.tolerances;
    let on_s = inst.with_rho(s)?;
    let best = max_on_ball(&on_s)?;
    let x = best.point;
    let jx = inst.functional.value_at(&x);
    if x.norm_sq() <= tol.tol_cluster.powi(2) || jx <= tol.tol_val {
        return Err(Error::DegenerateMaximum);
    }
    let g = inst.functional.gradient_at(&x)?;
    let inner = dot(&g, x.coords());
    let ns = x.norm_sq();
    let applies = inner < 2.0 * jx - tol.tol_val;

    let omega = |t: f64| {
        let y: Vec<f64> = x.coords().iter().map(|v| t * v).collect();
        inst.functional.value(&y) / (t * t * ns)
    };
    let h = 1e-5;
    let omega_prime_fd = (omega(1.0 + h) - omega(1.0 - h)) / (2.0 * h);

    let condition_at_rho_star = if applies { Some(check_condition(&inst.with_rho(ns)?)?) } else { None };
    Ok(Proposition2Outcome {
        applies,
        rho_star: ns,
        maximizer: x,
        inner,
        two_j: 2.0 * jx,
        omega_prime_fd,
        omega_prime_exact: (inner - 2.0 * jx) / ns,
        condition_at_rho_star,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiEntry {
    /// `eta(r*)/2` at the level actually reached by the inversion.
    pub lambda: f64,
    /// Grid value requested.
    pub lambda_target: f64,
    pub r: f64,
    /// `psi(r*)`
    pub phi: f64,
    /// Largest fixed-point residual over the spherical maxima found on
    /// `S_phi` with multiplier `lambda`.
    pub residual_max: f64,
    pub maxima_found: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiMap {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub table: Vec<PhiEntry>,
    pub strictly_increasing: bool,
    pub in_range: bool,
    pub residuals_ok: bool,
}

impl PhiMap {
    pub fn certified(&self) -> bool {
        self.strictly_increasing && self.in_range && self.residuals_ok
    }
}

/// `phi(lambda) = psi(eta^{-1}(2·lambda))` at one multiplier, together with
/// the fixed-point check of every spherical maximum on `S_phi`.
pub fn phi_at(inst: &ProblemInstance, cond: &Condition, curve: &EtaCurve, lambda: f64) -> Result<PhiEntry> {
    let sample = invert_eta(inst, cond, curve, 2.0 * lambda)?;
    let phi = sample.psi;
    let achieved = sample.eta / 2.0;
    let maxima = spherical_maxima(inst, phi)?;
    let residual_max = maxima
        .iter()
        .map(|m| fixed_point_residual(inst, &m.point, achieved).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    Ok(PhiEntry { lambda: achieved, lambda_target: lambda, r: sample.r, phi, residual_max, maxima_found: maxima.len() })
}

/// Converged sphere maximizations whose value is within `tol_val` of the best.
fn spherical_maxima(inst: &ProblemInstance, r: f64) -> Result<Vec<SolveResult>> {
    let runs = max_on_sphere_runs(inst, r)?;
    let best = runs[0].value;
    let tol = inst.tolerances.tol_val * (1.0 + best.abs());
    Ok(runs.into_iter().filter(|m| m.value >= best - tol).collect())
}

/// Tabulates `phi` on `points` uniformly spaced multipliers strictly inside
/// `I = eta([r_lo, r_hi])/2`.
pub fn build_phi(inst: &ProblemInstance, cond: &Condition, curve: &EtaCurve, points: usize) -> Result<PhiMap> {
    if curve.samples.len() < 3 {
        return Err(Error::Precondition(format!(
            "phi needs a curve with at least 3 samples, got {}",
            curve.samples.len()
        )));
    }
    if !curve.eta_strictly_decreasing() {
        return Err(Error::Precondition("eta is not certified decreasing on the curve".into()));
    }
    if points == 0 {
        return Err(Error::Precondition("need at least one multiplier".into()));
    }
    let (eta_lo, eta_hi) = curve.eta_range().expect("non-empty curve");
    let (lambda_lo, lambda_hi) = (eta_lo / 2.0, eta_hi / 2.0);
    let lambdas: Vec<f64> =
        (1..=points).map(|i| lambda_lo + (lambda_hi - lambda_lo) * i as f64 / (points + 1) as f64).collect();
    let table = lambdas.par_iter().map(|&l| phi_at(inst, cond, curve, l)).collect::<Result<Vec<_>>>()?;
    let strictly_increasing = table.windows(2).all(|w| w[1].phi > w[0].phi);
    let in_range = table.iter().all(|e| e.phi > 0.0 && e.phi < inst.rho);
    let residuals_ok = table.iter().all(|e| e.maxima_found > 0 && e.residual_max <= inst.tolerances.tol_res);
    Ok(PhiMap { lambda_lo, lambda_hi, table, strictly_increasing, in_range, residuals_ok })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplicityCase {
    /// `psi` attains `rho_tilde`; `S_{rho_tilde}` carries two global maxima.
    SharedSphere,
    /// `psi` jumps across `rho_tilde`; `Gamma(r*)` has two elements.
    PsiJump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multiplicity {
    pub case: MultiplicityCase,
    pub r: f64,
    pub lambda_star: f64,
    pub solutions: Vec<Point>,
    pub residuals: Vec<f64>,
    /// `½‖x‖² - lambda_star·J(x)` per solution.
    pub penalized_values: Vec<f64>,
    pub bracket: (f64, f64),
    /// The bracket was flagged by the sampled jump detector.
    pub jump_flagged: bool,
}

const JUMP_RESOLUTION: f64 = 1e-8;

/// Looks for `lambda > 0` with two distinct nonzero solutions of
/// `x = lambda·J'(x)` that minimize `½‖·‖² - lambda·J` on `int(B_rho)`.
pub fn detect_multiplicity(
    inst: &ProblemInstance,
    cond: &Condition,
    curve: &EtaCurve,
    rho_tilde: f64,
) -> Result<Multiplicity> {
    let tol = inst.tolerances;
    let (psi_lo, psi_hi) = curve.psi_range().ok_or_else(|| Error::Precondition("curve has no samples".into()))?;
    if !(rho_tilde > psi_lo && rho_tilde < psi_hi) {
        return Err(Error::Precondition(format!(
            "rho_tilde = {rho_tilde} must lie strictly inside the achieved psi range ]{psi_lo}, {psi_hi}["
        )));
    }
    let s = &curve.samples;
    if let Some(hit) = s.iter().find(|x| (x.psi - rho_tilde).abs() <= tol.tol_val) {
        return shared_sphere(inst, hit, rho_tilde, (hit.r, hit.r), false);
    }
    let k = s.windows(2).position(|w| w[0].psi > rho_tilde && w[1].psi < rho_tilde).ok_or_else(|| {
        Error::MultiplicityNotFound {
            bracket: (curve.r_lo, curve.r_hi),
            detail: "psi does not cross rho_tilde between adjacent samples".into(),
            radial: inst.functional.radial(),
        }
    })?;
    let jump_flagged = psi_jumps(curve).contains(&k);
    let (mut a, mut b) = (s[k].clone(), s[k + 1].clone());
    let mut closest: Option<EtaSample> = None;
    while b.r - a.r > JUMP_RESOLUTION {
        let mid = 0.5 * (a.r + b.r);
        let m = compute_eta(inst, cond, mid)?;
        let miss = (m.psi - rho_tilde).abs();
        if closest.as_ref().is_none_or(|c| miss < (c.psi - rho_tilde).abs()) {
            closest = Some(m.clone());
        }
        if miss <= 1e-2 * tol.tol_val {
            break;
        }
        if m.psi > rho_tilde {
            a = m;
        } else {
            b = m;
        }
    }
    let bracket = (a.r, b.r);
    if let Some(c) = closest.filter(|c| (c.psi - rho_tilde).abs() <= tol.tol_val) {
        return shared_sphere(inst, &c, rho_tilde, bracket, jump_flagged);
    }
    psi_jump(inst, cond, rho_tilde, bracket, jump_flagged)
}

fn penalized(inst: &ProblemInstance, x: &Point, lambda: f64) -> f64 {
    0.5 * x.norm_sq() - lambda * inst.functional.value_at(x)
}

fn certify_pair(
    inst: &ProblemInstance,
    case: MultiplicityCase,
    r: f64,
    lambda_star: f64,
    solutions: Vec<Point>,
    bracket: (f64, f64),
    jump_flagged: bool,
) -> Result<Multiplicity> {
    let tol = inst.tolerances;
    let residuals = solutions.iter().map(|x| fixed_point_residual(inst, x, lambda_star)).collect::<Result<Vec<_>>>()?;
    let penalized_values: Vec<f64> = solutions.iter().map(|x| penalized(inst, x, lambda_star)).collect();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    let spread = penalized_values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - penalized_values.iter().copied().fold(f64::INFINITY, f64::min);
    if worst > tol.tol_res || spread > tol.tol_val {
        return Err(Error::MultiplicityNotFound {
            bracket,
            detail: format!(
                "candidate pair failed certification: max residual {worst:e} (limit {:e}), penalized spread {spread:e} (limit {:e})",
                tol.tol_res, tol.tol_val
            ),
            radial: inst.functional.radial(),
        });
    }
    Ok(Multiplicity { case, r, lambda_star, solutions, residuals, penalized_values, bracket, jump_flagged })
}

fn shared_sphere(
    inst: &ProblemInstance,
    sample: &EtaSample,
    rho_tilde: f64,
    bracket: (f64, f64),
    jump_flagged: bool,
) -> Result<Multiplicity> {
    let tol = inst.tolerances;
    let maxima = spherical_maxima(inst, rho_tilde)?;
    let clusters = cluster_points(inst, &maxima, tol.tol_cluster);
    let lambda_star = sample.eta / 2.0;
    if clusters.len() >= 2 {
        let solutions = clusters.into_iter().map(|c| c.representative).collect();
        return certify_pair(
            inst,
            MultiplicityCase::SharedSphere,
            sample.r,
            lambda_star,
            solutions,
            bracket,
            jump_flagged,
        );
    }
    let only = &clusters[0];
    let detail = if only.manifold {
        "degenerate multiplicity: the global maxima on S_rho_tilde form a whole sphere (radial functional), no isolated pair".to_string()
    } else {
        let g = inst.functional.gradient(only.representative.coords());
        let gn = dot(&g, &g).sqrt();
        if gn <= tol.tol_opt {
            format!("hypothesis met but degenerate: J' vanishes at the unique maximum (|J'| = {gn:e}); no second point recoverable")
        } else {
            "a single spherical maximum was found on S_rho_tilde".to_string()
        }
    };
    Err(Error::MultiplicityNotFound { bracket, detail, radial: only.manifold })
}

/// At the jump both shells minimize the shifted functional only up to the
/// bisection resolution, so clusters are gathered within the full `tol_val`
/// band used by the equal-value certification.
fn psi_jump(
    inst: &ProblemInstance,
    cond: &Condition,
    rho_tilde: f64,
    bracket: (f64, f64),
    jump_flagged: bool,
) -> Result<Multiplicity> {
    let r_star = 0.5 * (bracket.0 + bracket.1);
    let sample = compute_eta(inst, cond, r_star)?;
    let runs = min_shifted_runs(inst, sample.eta)?;
    let best = runs[0].value;
    let cutoff = best + inst.tolerances.tol_val * (1.0 + best.abs());
    let near: Vec<SolveResult> = runs.into_iter().filter(|c| c.value <= cutoff && !c.point.is_origin()).collect();
    let clusters = cluster_points(inst, &near, inst.tolerances.tol_cluster);
    let pick = |above: bool| {
        clusters
            .iter()
            .filter(|c| (c.representative.norm_sq() > rho_tilde) == above)
            .max_by(|a, b| a.j_value.total_cmp(&b.j_value))
    };
    match (pick(true), pick(false)) {
        (Some(hi), Some(lo)) => certify_pair(
            inst,
            MultiplicityCase::PsiJump,
            r_star,
            sample.eta / 2.0,
            vec![hi.representative.clone(), lo.representative.clone()],
            bracket,
            jump_flagged,
        ),
        _ => Err(Error::MultiplicityNotFound {
            bracket,
            detail: format!(
                "psi jumps across rho_tilde but the near-optimal set at r* = {r_star} has {} cluster(s), none straddling it",
                clusters.len()
            ),
            radial: inst.functional.radial(),
        }),
    }
}
