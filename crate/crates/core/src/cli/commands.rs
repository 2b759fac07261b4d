use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{ConfigError, RunConfig};
use super::output::{eta_curve_csv, fmt_g, phi_map_csv, write_atomic};
use super::plot::{render, Panel, Series};
use crate::error::Error;
use crate::eta::{auto_range, check_condition, tabulate_curve, Condition, EtaCurve};
use crate::space::{InstanceDescriptor, ProblemInstance};
use crate::theorems::{
    build_phi, detect_multiplicity, proposition2_check, verify_monotonicity, verify_theorem1_chain, Clause,
    Multiplicity, Status, VerificationReport,
};

/// Sample count when the config has no `r_range`.
pub const AUTO_COUNT: usize = 12;
pub const PHI_POINTS: usize = 10;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Solver(#[from] Error),
    #[error("feasibility condition beta_rho/rho < delta_rho fails: beta_rho/rho = {ratio}, delta_rho = {delta}")]
    Condition { ratio: f64, delta: String },
    #[error("{0}")]
    NotCertified(String),
    #[error("{0}")]
    MultiplicityNotFound(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Condition { .. } => 2,
            CliError::MultiplicityNotFound(_) => 3,
            _ => 1,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

struct Setup {
    inst: ProblemInstance,
    cond: Condition,
    out: PathBuf,
}

fn setup(cfg: &RunConfig) -> CliResult<Setup> {
    let inst = cfg.instance()?;
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(io_err(&out))?;
    let probe = out.join(".spherimax-write-check");
    std::fs::write(&probe, b"").map_err(io_err(&out))?;
    let _ = std::fs::remove_file(&probe);
    let cond = check_condition(&inst)?;
    Ok(Setup { inst, cond, out })
}

fn require_condition(cond: &Condition) -> CliResult {
    if cond.holds {
        Ok(())
    } else {
        Err(CliError::Condition { ratio: cond.beta / cond.rho, delta: cond.delta.to_string() })
    }
}

fn curve_for(cfg: &RunConfig, s: &Setup) -> CliResult<EtaCurve> {
    let (lo, hi, count) = match cfg.r_range {
        Some(r) => (r.lo, r.hi, r.count),
        None => {
            let (lo, hi) = auto_range(&s.cond)?;
            (lo, hi, AUTO_COUNT)
        }
    };
    Ok(tabulate_curve(&s.inst, &s.cond, lo, hi, count)?)
}

fn write(path: &Path, bytes: &[u8]) -> CliResult {
    write_atomic(path, bytes).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report");
    text.push('\n');
    write(path, text.as_bytes())
}

fn curve_plot(curve: &EtaCurve) -> String {
    let pts = |f: fn(&crate::eta::EtaSample) -> f64| curve.samples.iter().map(|s| (s.r, f(s))).collect();
    render(&[
        Panel {
            title: "level function",
            x_label: "r",
            series: vec![Series { label: "eta(r)", points: pts(|s| s.eta) }],
        },
        Panel {
            title: "squared radius of the representative",
            x_label: "r",
            series: vec![Series { label: "psi(r)", points: pts(|s| s.psi) }],
        },
    ])
}

pub fn cmd_eta(cfg: &RunConfig) -> CliResult {
    let s = setup(cfg)?;
    require_condition(&s.cond)?;
    let curve = curve_for(cfg, &s)?;
    write(&s.out.join("eta_curve.csv"), &eta_curve_csv(&curve))?;
    write(&s.out.join("eta_curve.svg"), curve_plot(&curve).as_bytes())?;
    println!(
        "eta: {} samples on [{}, {}], beta_rho = {}, delta_rho = {}",
        curve.samples.len(),
        fmt_g(curve.r_lo),
        fmt_g(curve.r_hi),
        fmt_g(curve.beta),
        curve.delta
    );
    for v in &curve.violations {
        println!("warning: {v}");
    }
    if let Some(f) = curve.failures.first() {
        return Err(CliError::Solver(Error::SolverFailure {
            context: format!(
                "{} of the requested levels failed (first r = {}: {}); eta_curve.csv is incomplete",
                curve.failures.len(),
                fmt_g(f.r),
                f.error
            ),
            best: None,
        }));
    }
    Ok(())
}

fn skip_clause(id: &str, note: String) -> Clause {
    Clause { id: id.into(), status: Status::Skip, measured: 0.0, threshold: 0.0, witness: None, note: Some(note) }
}

fn clause(id: String, pass: bool, measured: f64, threshold: f64, note: Option<String>) -> Clause {
    Clause { id, status: if pass { Status::Pass } else { Status::Fail }, measured, threshold, witness: None, note }
}

/// Condition gate, chain per sample, curve shape and the sufficient test
/// for the gate at `s = rho`.
pub fn verification_report(inst: &ProblemInstance, cond: &Condition, curve: Option<&EtaCurve>) -> VerificationReport {
    let mut report = VerificationReport::new(inst.descriptor());
    let ratio = cond.beta / cond.rho;
    report.push(clause(
        "condition.gate".into(),
        cond.holds,
        ratio,
        cond.delta.to_f64(),
        Some(format!("beta_rho = {}, delta_rho = {}", fmt_g(cond.beta), cond.delta)),
    ));
    if let Some(curve) = curve {
        for f in &curve.failures {
            report.push(clause(format!("curve.sample[r={}]", fmt_g(f.r)), false, f.r, 0.0, Some(f.error.clone())));
        }
        for (k, sample) in curve.samples.iter().enumerate() {
            let n = sample.gamma.len();
            let manifold = sample.gamma.iter().any(|c| c.manifold);
            let note = format!(
                "{n} cluster(s) at r = {}{}",
                fmt_g(sample.r),
                if manifold { ", argmax set contains whole spheres" } else { "" }
            );
            report.push(clause(format!("r[{k}].gamma.nonempty"), n >= 1, n as f64, 1.0, Some(note)));
            for mut c in verify_theorem1_chain(inst, sample).clauses {
                c.id = format!("r[{k}].{}", c.id);
                report.push(c);
            }
        }
        report.extend(verify_monotonicity(curve));
    }
    match proposition2_check(inst, inst.rho) {
        Ok(o) if o.applies => {
            let holds = o.condition_at_rho_star.as_ref().is_some_and(|c| c.holds);
            report.push(clause(
                "prop2.gate".into(),
                holds,
                o.inner,
                o.two_j,
                Some(format!("gate holds at rho* = {}", fmt_g(o.rho_star))),
            ));
            let gap = (o.omega_prime_fd - o.omega_prime_exact).abs();
            let tol = 1e-4 * (1.0 + o.omega_prime_exact.abs());
            report.push(clause("prop2.omega_prime".into(), gap <= tol, gap, tol, None));
        }
        Ok(o) => report.push(skip_clause(
            "prop2.gate",
            format!("sufficient test does not apply: <J'(x), x> = {} >= 2 J(x) = {}", fmt_g(o.inner), fmt_g(o.two_j)),
        )),
        Err(Error::DegenerateMaximum) => report.push(skip_clause("prop2.gate", Error::DegenerateMaximum.to_string())),
        Err(e) => report.push(clause("prop2.gate".into(), false, f64::NAN, 0.0, Some(e.to_string()))),
    }
    report
}

pub fn cmd_verify(cfg: &RunConfig) -> CliResult {
    let s = setup(cfg)?;
    let curve = if s.cond.holds { Some(curve_for(cfg, &s)?) } else { None };
    let report = verification_report(&s.inst, &s.cond, curve.as_ref());
    write_json(&s.out.join("report.json"), &report)?;
    println!(
        "verify: {} PASS, {} FAIL, {} SKIP, overall {}",
        report.count(Status::Pass),
        report.count(Status::Fail),
        report.count(Status::Skip),
        if report.overall { "PASS" } else { "FAIL" }
    );
    require_condition(&s.cond)?;
    if report.overall {
        Ok(())
    } else {
        let ids: Vec<&str> = report.failures().map(|c| c.id.as_str()).take(5).collect();
        Err(CliError::NotCertified(format!("verification failed: {}", ids.join(", "))))
    }
}

pub fn cmd_phi(cfg: &RunConfig) -> CliResult {
    let s = setup(cfg)?;
    require_condition(&s.cond)?;
    let curve = curve_for(cfg, &s)?;
    let phi = build_phi(&s.inst, &s.cond, &curve, PHI_POINTS)?;
    write(&s.out.join("phi_map.csv"), &phi_map_csv(&phi))?;
    let svg = render(&[Panel {
        title: "multiplier to squared radius",
        x_label: "lambda",
        series: vec![Series { label: "phi(lambda)", points: phi.table.iter().map(|e| (e.lambda, e.phi)).collect() }],
    }]);
    write(&s.out.join("phi_map.svg"), svg.as_bytes())?;
    println!(
        "phi: {} points on ]{}, {}[, increasing = {}, in range = {}, residuals ok = {}",
        phi.table.len(),
        fmt_g(phi.lambda_lo),
        fmt_g(phi.lambda_hi),
        phi.strictly_increasing,
        phi.in_range,
        phi.residuals_ok
    );
    if phi.certified() {
        Ok(())
    } else {
        Err(CliError::NotCertified("phi map is not certified increasing with valid residuals".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum MultiplicityOutcome {
    Certified(Multiplicity),
    NotFound { bracket: (f64, f64), detail: String, radial: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub instance: InstanceDescriptor,
    pub rho_tilde: f64,
    #[serde(flatten)]
    pub outcome: MultiplicityOutcome,
}

pub fn cmd_multiplicity(cfg: &RunConfig) -> CliResult {
    let rho_tilde = cfg.rho_tilde.ok_or_else(|| ConfigError::Invalid {
        key: "rho_tilde".into(),
        detail: "required by the multiplicity command".into(),
    })?;
    let s = setup(cfg)?;
    require_condition(&s.cond)?;
    let curve = curve_for(cfg, &s)?;
    let path = s.out.join("multiplicity.json");
    let report = |outcome| MultiplicityReport { instance: s.inst.descriptor(), rho_tilde, outcome };
    match detect_multiplicity(&s.inst, &s.cond, &curve, rho_tilde) {
        Ok(m) => {
            println!("multiplicity: {:?}, lambda* = {}, {} solutions", m.case, fmt_g(m.lambda_star), m.solutions.len());
            write_json(&path, &report(MultiplicityOutcome::Certified(m)))
        }
        Err(Error::MultiplicityNotFound { bracket, detail, radial }) => {
            let outcome = MultiplicityOutcome::NotFound { bracket, detail: detail.clone(), radial };
            write_json(&path, &report(outcome))?;
            Err(CliError::MultiplicityNotFound(Error::MultiplicityNotFound { bracket, detail, radial }))
        }
        Err(e) => Err(e.into()),
    }
}
