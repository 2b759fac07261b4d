//! Functionals `J: R^n -> R` with `J(0) = 0` and closed-form gradients.
//!
//! The zoo covers both sides of the feasibility gate `beta_rho / rho < delta_rho`:
//!
//! | name               | J(x)                                   | gate      | argmax set   |
//! |--------------------|----------------------------------------|-----------|--------------|
//! | `NORM_POWER`       | `‖x‖^q`, `0 < q < 2`                   | holds     | whole sphere |
//! | `QUADRATIC`        | `c‖x‖²`                                | fails     | origin       |
//! | `ZERO`             | `0`                                    | fails     | origin       |
//! | `COORD_POWER`      | `|x₁|^{3/2}`                           | holds     | two points   |
//! | `NORM_PLUS_LINEAR` | `‖x‖^{3/2} + eps⟨b, x⟩`                | holds     | one point    |
//! | `TWO_BUMP`         | `h₁ B((‖x‖²-c₁)/w₁) + h₂ B((‖x‖²-c₂)/w₂)` | holds  | one or two spheres |
//!
//! `TWO_BUMP` uses the compactly supported bump `B(u) = exp(1 - 1/(1-u²))` for
//! `|u| < 1` (zero elsewhere, `B(0) = 1`), placed in the squared norm
//! `t = ‖x‖²`: bump `i` is supported on `]cᵢ - wᵢ, cᵢ + wᵢ[` and peaks with
//! height `hᵢ` at `t = cᵢ`. Parameters `c1, w1, h1, c2, w2, h2` default to
//! `0.2, 0.1, 0.5, 0.7, 0.2, 1.0`; supports must lie in `]0, +inf[` and be
//! disjoint. With `rho = 1` the defaults give `beta_rho = 1` and
//! `delta_rho ≈ 2.5`, and the argmax of the level ratio switches from the
//! outer shell to the inner one as `r` grows.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{dot, norm_sq, Point};

/// Value and gradient oracles. Implementations must be pure and reentrant.
pub trait Functional: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    /// Writes `J'(x)` into `out` (same length as `x`).
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

#[derive(Clone)]
pub struct FunctionalSpec {
    name: String,
    params: BTreeMap<String, f64>,
    dim: usize,
    oracle: Arc<dyn Functional>,
    smooth_at_origin: bool,
    radial: bool,
}

impl fmt::Debug for FunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionalSpec")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("dim", &self.dim)
            .field("smooth_at_origin", &self.smooth_at_origin)
            .field("radial", &self.radial)
            .finish()
    }
}

impl FunctionalSpec {
    /// Wraps a user-supplied functional. `radial` must only be set when the
    /// value depends on `‖x‖²` alone.
    pub fn custom(
        name: impl Into<String>,
        dim: usize,
        oracle: Arc<dyn Functional>,
        smooth_at_origin: bool,
        radial: bool,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        Ok(Self { name: name.into(), params: BTreeMap::new(), dim, oracle, smooth_at_origin, radial })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn smooth_at_origin(&self) -> bool {
        self.smooth_at_origin
    }

    pub fn radial(&self) -> bool {
        self.radial
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.oracle.value(x)
    }

    pub fn value_at(&self, p: &Point) -> f64 {
        self.oracle.value(p.coords())
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.oracle.gradient(x, out)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.oracle.gradient(x, &mut g);
        g
    }

    /// `J'(p)`, failing at the origin when the gradient is not defined there.
    pub fn gradient_at(&self, p: &Point) -> Result<Vec<f64>> {
        if p.is_origin() && !self.smooth_at_origin {
            return Err(Error::GradientUndefined(self.name.clone()));
        }
        let g = self.gradient(p.coords());
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::GradientUndefined(self.name.clone()));
        }
        Ok(g)
    }
}

struct NormPower {
    q: f64,
}

impl Functional for NormPower {
    fn value(&self, x: &[f64]) -> f64 {
        norm_sq(x).powf(0.5 * self.q)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let ns = norm_sq(x);
        if ns == 0.0 {
            let v = if self.q > 1.0 { 0.0 } else { f64::NAN };
            out.iter_mut().for_each(|o| *o = v);
            return;
        }
        // q ‖x‖^{q-2} x
        let s = self.q * ns.powf(0.5 * self.q - 1.0);
        out.iter_mut().zip(x).for_each(|(o, v)| *o = s * v);
    }
}

struct Quadratic {
    c: f64,
}

impl Functional for Quadratic {
    fn value(&self, x: &[f64]) -> f64 {
        self.c * norm_sq(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().zip(x).for_each(|(o, v)| *o = 2.0 * self.c * v);
    }
}

struct Zero;

impl Functional for Zero {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn gradient(&self, _x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

struct CoordPower;

impl Functional for CoordPower {
    fn value(&self, x: &[f64]) -> f64 {
        x[0].abs().powf(1.5)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        out[0] = 1.5 * x[0].abs().sqrt() * x[0].signum();
    }
}

struct NormPlusLinear {
    eps: f64,
    b: Vec<f64>,
}

impl Functional for NormPlusLinear {
    fn value(&self, x: &[f64]) -> f64 {
        norm_sq(x).powf(0.75) + self.eps * dot(&self.b, x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let ns = norm_sq(x);
        // 1.5 ‖x‖^{-1/2} x, continuous with limit 0 at the origin
        let s = if ns == 0.0 { 0.0 } else { 1.5 * ns.powf(-0.25) };
        for ((o, v), b) in out.iter_mut().zip(x).zip(&self.b) {
            *o = s * v + self.eps * b;
        }
    }
}

#[derive(Clone, Copy)]
struct Bump {
    center: f64,
    half_width: f64,
    height: f64,
}

impl Bump {
    /// Value and derivative with respect to `t = ‖x‖²`.
    fn eval(&self, t: f64) -> (f64, f64) {
        let u = (t - self.center) / self.half_width;
        let d = 1.0 - u * u;
        if d <= 0.0 {
            return (0.0, 0.0);
        }
        let b = (1.0 - 1.0 / d).exp();
        let db_du = b * (-2.0 * u / (d * d));
        (self.height * b, self.height * db_du / self.half_width)
    }
}

struct TwoBump {
    bumps: [Bump; 2],
}

impl Functional for TwoBump {
    fn value(&self, x: &[f64]) -> f64 {
        let t = norm_sq(x);
        self.bumps.iter().map(|b| b.eval(t).0).sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let t = norm_sq(x);
        let dt: f64 = self.bumps.iter().map(|b| b.eval(t).1).sum();
        out.iter_mut().zip(x).for_each(|(o, v)| *o = 2.0 * dt * v);
    }
}

pub const ZOO_NAMES: [&str; 6] = ["NORM_POWER", "QUADRATIC", "ZERO", "COORD_POWER", "NORM_PLUS_LINEAR", "TWO_BUMP"];

struct ParamReader<'a> {
    functional: &'static str,
    given: &'a BTreeMap<String, f64>,
    used: BTreeMap<String, f64>,
}

impl<'a> ParamReader<'a> {
    fn new(functional: &'static str, given: &'a BTreeMap<String, f64>) -> Self {
        Self { functional, given, used: BTreeMap::new() }
    }

    fn domain_err(&self, param: &str, detail: impl Into<String>) -> Error {
        Error::ParameterDomain {
            functional: self.functional.to_string(),
            param: param.to_string(),
            detail: detail.into(),
        }
    }

    fn get(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        let v = match (self.given.get(key), default) {
            (Some(&v), _) => v,
            (None, Some(d)) => d,
            (None, None) => return Err(self.domain_err(key, "required parameter missing")),
        };
        if !v.is_finite() {
            return Err(self.domain_err(key, format!("must be finite, got {v}")));
        }
        self.used.insert(key.to_string(), v);
        Ok(v)
    }

    fn finish(self) -> Result<BTreeMap<String, f64>> {
        if let Some(extra) = self.given.keys().find(|k| !self.used.contains_key(*k)) {
            return Err(self.domain_err(extra, "unknown parameter"));
        }
        Ok(self.used)
    }
}

/// Builds a zoo functional on R^n. Missing parameters take their defaults,
/// which are recorded in the returned spec.
pub fn zoo_get(name: &str, params: &BTreeMap<String, f64>, n: usize) -> Result<FunctionalSpec> {
    if n == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    let key = name.trim().to_ascii_uppercase();
    let (canonical, oracle, smooth_at_origin, radial, used): (
        &'static str,
        Arc<dyn Functional>,
        bool,
        bool,
        BTreeMap<String, f64>,
    ) = match key.as_str() {
        "NORM_POWER" => {
            let mut p = ParamReader::new("NORM_POWER", params);
            let q = p.get("q", Some(1.0))?;
            if !(q > 0.0 && q < 2.0) {
                return Err(p.domain_err("q", format!("requires 0 < q < 2, got {q}")));
            }
            ("NORM_POWER", Arc::new(NormPower { q }), false, true, p.finish()?)
        }
        "QUADRATIC" => {
            let mut p = ParamReader::new("QUADRATIC", params);
            let c = p.get("c", Some(1.0))?;
            ("QUADRATIC", Arc::new(Quadratic { c }), true, true, p.finish()?)
        }
        "ZERO" => {
            let p = ParamReader::new("ZERO", params);
            ("ZERO", Arc::new(Zero), true, true, p.finish()?)
        }
        "COORD_POWER" => {
            let p = ParamReader::new("COORD_POWER", params);
            ("COORD_POWER", Arc::new(CoordPower), true, false, p.finish()?)
        }
        "NORM_PLUS_LINEAR" => {
            let mut p = ParamReader::new("NORM_PLUS_LINEAR", params);
            let eps = p.get("eps", Some(0.1))?;
            let b = (0..n)
                .map(|i| p.get(&format!("b{}", i + 1), Some(if i == 0 { 1.0 } else { 0.0 })))
                .collect::<Result<Vec<_>>>()?;
            let radial = eps == 0.0 || b.iter().all(|&v| v == 0.0);
            ("NORM_PLUS_LINEAR", Arc::new(NormPlusLinear { eps, b }), false, radial, p.finish()?)
        }
        "TWO_BUMP" => {
            let mut p = ParamReader::new("TWO_BUMP", params);
            let mut bumps = [Bump { center: 0.0, half_width: 0.0, height: 0.0 }; 2];
            let defaults = [(0.2, 0.1, 0.5), (0.7, 0.2, 1.0)];
            for (i, (c, w, h)) in defaults.into_iter().enumerate() {
                let k = i + 1;
                let center = p.get(&format!("c{k}"), Some(c))?;
                let half_width = p.get(&format!("w{k}"), Some(w))?;
                let height = p.get(&format!("h{k}"), Some(h))?;
                if half_width <= 0.0 {
                    return Err(p.domain_err(&format!("w{k}"), "half-width must be positive"));
                }
                if center - half_width <= 0.0 {
                    return Err(
                        p.domain_err(&format!("c{k}"), "bump support must stay away from the origin (c - w > 0)")
                    );
                }
                if height <= 0.0 {
                    return Err(p.domain_err(&format!("h{k}"), "height must be positive"));
                }
                bumps[i] = Bump { center, half_width, height };
            }
            let (a, b) = (bumps[0], bumps[1]);
            let disjoint = a.center + a.half_width <= b.center - b.half_width
                || b.center + b.half_width <= a.center - a.half_width;
            if !disjoint {
                return Err(p.domain_err("c2", "bump supports must be disjoint"));
            }
            ("TWO_BUMP", Arc::new(TwoBump { bumps }), true, true, p.finish()?)
        }
        _ => return Err(Error::UnknownFunctional(name.to_string())),
    };
    Ok(FunctionalSpec { name: canonical.to_string(), params: used, dim: n, oracle, smooth_at_origin, radial })
}

/// Maximum coordinate discrepancy between the gradient oracle and a central
/// finite difference with step `h`.
pub fn gradient_check(f: &FunctionalSpec, p: &Point, h: f64) -> Result<f64> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Precondition(format!("step must be positive, got {h}")));
    }
    if p.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: p.dim() });
    }
    let g = f.gradient_at(p)?;
    let mut x = p.coords().to_vec();
    let mut worst = 0.0_f64;
    for i in 0..x.len() {
        let xi = x[i];
        x[i] = xi + h;
        let fp = f.value(&x);
        x[i] = xi - h;
        let fm = f.value(&x);
        x[i] = xi;
        let fd = (fp - fm) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs());
    }
    Ok(worst)
}

/// `J(x)` for any `x` with `‖x‖² = t`; only defined for radial functionals.
pub fn radial_profile(f: &FunctionalSpec, t: f64) -> Result<f64> {
    if !f.radial() {
        return Err(Error::NotRadial(f.name().to_string()));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("squared norm must be nonnegative, got {t}")));
    }
    let mut x = vec![0.0; f.dim()];
    x[0] = t.sqrt();
    Ok(f.value(&x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn zoo_values() {
        let f = zoo_get("NORM_POWER", &params(&[("q", 1.0)]), 2).unwrap();
        assert_eq!(f.value(&[3.0, 4.0]), 5.0);
        let z = zoo_get("ZERO", &BTreeMap::new(), 3).unwrap();
        assert_eq!(z.value(&[1.0, -2.0, 7.0]), 0.0);
        let c = zoo_get("COORD_POWER", &BTreeMap::new(), 2).unwrap();
        assert_eq!(c.value(&[-4.0, 1.0]), 8.0);
    }

    #[test]
    fn zoo_rejects_bad_input() {
        assert!(matches!(zoo_get("NOPE", &BTreeMap::new(), 2), Err(Error::UnknownFunctional(_))));
        assert!(matches!(zoo_get("NORM_POWER", &params(&[("q", 2.0)]), 2), Err(Error::ParameterDomain { .. })));
        assert!(matches!(zoo_get("QUADRATIC", &params(&[("k", 2.0)]), 2), Err(Error::ParameterDomain { .. })));
        assert!(zoo_get("TWO_BUMP", &params(&[("c2", 0.3)]), 2).is_err());
        assert!(zoo_get("TWO_BUMP", &params(&[("c1", 0.05)]), 2).is_err());
    }

    #[test]
    fn defaults_are_recorded() {
        let f = zoo_get("norm_plus_linear", &BTreeMap::new(), 3).unwrap();
        assert_eq!(f.name(), "NORM_PLUS_LINEAR");
        assert_eq!(f.params()["eps"], 0.1);
        assert_eq!(f.params()["b1"], 1.0);
        assert_eq!(f.params()["b3"], 0.0);
        assert!(!f.radial());
    }

    #[test]
    fn gradient_check_examples() {
        let f = zoo_get("NORM_POWER", &params(&[("q", 1.0)]), 2).unwrap();
        assert_eq!(f.gradient(&[1.0, 0.0]), vec![1.0, 0.0]);
        assert!(gradient_check(&f, &pt(&[1.0, 0.0]), 1e-4).unwrap() <= 1e-7);

        let f = zoo_get("QUADRATIC", &params(&[("c", 1.0)]), 2).unwrap();
        assert_eq!(f.gradient(&[1.0, 2.0]), vec![2.0, 4.0]);
        assert!(gradient_check(&f, &pt(&[1.0, 2.0]), 1e-4).unwrap() <= 1e-7);

        let f = zoo_get("COORD_POWER", &BTreeMap::new(), 2).unwrap();
        assert_eq!(f.gradient(&[4.0, 1.0]), vec![3.0, 0.0]);
        assert!(gradient_check(&f, &pt(&[4.0, 1.0]), 1e-4).unwrap() <= 1e-6);
    }

    #[test]
    fn gradient_undefined_at_origin() {
        let f = zoo_get("NORM_POWER", &params(&[("q", 1.0)]), 2).unwrap();
        assert!(matches!(gradient_check(&f, &Point::origin(2), 1e-4), Err(Error::GradientUndefined(_))));
        let q = zoo_get("QUADRATIC", &BTreeMap::new(), 2).unwrap();
        assert_eq!(gradient_check(&q, &Point::origin(2), 1e-4).unwrap(), 0.0);
    }

    #[test]
    fn radial_profile_examples() {
        let f = zoo_get("NORM_POWER", &params(&[("q", 1.0)]), 2).unwrap();
        assert_eq!(radial_profile(&f, 0.25).unwrap(), 0.5);
        let f = zoo_get("NORM_POWER", &params(&[("q", 1.5)]), 2).unwrap();
        assert_eq!(radial_profile(&f, 1.0).unwrap(), 1.0);
        let f = zoo_get("QUADRATIC", &params(&[("c", 2.0)]), 2).unwrap();
        assert!((radial_profile(&f, 0.5).unwrap() - 1.0).abs() < 1e-15);
        let f = zoo_get("COORD_POWER", &BTreeMap::new(), 2).unwrap();
        assert!(matches!(radial_profile(&f, 0.5), Err(Error::NotRadial(_))));
    }

    #[test]
    fn two_bump_shape() {
        let f = zoo_get("TWO_BUMP", &BTreeMap::new(), 2).unwrap();
        assert_eq!(f.value(&[0.0, 0.0]), 0.0);
        assert!((radial_profile(&f, 0.2).unwrap() - 0.5).abs() < 1e-15);
        assert!((radial_profile(&f, 0.7).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(radial_profile(&f, 0.4).unwrap(), 0.0);
        assert_eq!(radial_profile(&f, 0.95).unwrap(), 0.0);
    }
}
