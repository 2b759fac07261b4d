//! Domain types shared by every module: points of R^n with the Euclidean
//! inner product, extended reals, the tolerance policy and problem instances.
//!
//! Balls and spheres are parameterized by squared norm throughout:
//! `B_rho = { ‖x‖² ≤ rho }` and `S_r = { ‖x‖² = r }`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::FunctionalSpec;

/// A finite point of R^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        if let Some((index, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidPoint { index, value });
        }
        Ok(Self(coords))
    }

    pub fn origin(n: usize) -> Self {
        Self(vec![0.0; n.max(1)])
    }

    /// Wraps coordinates that are already known to be finite.
    pub(crate) fn from_finite(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|v| v.is_finite()));
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn dist(&self, other: &Point) -> f64 {
        dist(&self.0, &other.0)
    }

    pub fn scaled(&self, alpha: f64) -> Result<Point> {
        Point::new(self.0.iter().map(|v| alpha * v).collect())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Point::new(coords)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Radial retraction onto `S_r`: returns `p · sqrt(r / ‖p‖²)`.
pub fn project_to_sphere(p: &Point, r: f64) -> Result<Point> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Precondition(format!("sphere parameter must be positive and finite, got {r}")));
    }
    if p.is_origin() {
        return Err(Error::DegenerateProjection);
    }
    let scale = (r / p.norm_sq()).sqrt();
    p.scaled(scale)
}

/// In-place variant used by the solvers; leaves the origin untouched.
pub(crate) fn retract_sphere(x: &mut [f64], r: f64) {
    let ns = norm_sq(x);
    if ns > 0.0 {
        let s = (r / ns).sqrt();
        x.iter_mut().for_each(|v| *v *= s);
    }
}

/// Euclidean projection onto `B_rho`.
pub(crate) fn project_ball(x: &mut [f64], rho: f64) {
    let ns = norm_sq(x);
    if ns > rho {
        let s = (rho / ns).sqrt();
        x.iter_mut().for_each(|v| *v *= s);
    }
}

/// A real number or `+inf`. NaN is never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PositiveInfinity,
}

impl ExtendedReal {
    pub fn finite(value: f64) -> Result<Self> {
        if value.is_nan() {
            return Err(Error::InfinityArithmetic("NaN is not an extended real"));
        }
        if value == f64::INFINITY {
            return Ok(Self::PositiveInfinity);
        }
        if value == f64::NEG_INFINITY {
            return Err(Error::InfinityArithmetic("-inf is not representable"));
        }
        Ok(Self::Finite(value))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::PositiveInfinity)
    }

    /// The finite value; using `+inf` as a number is an error.
    pub fn value(&self) -> Result<f64> {
        match *self {
            Self::Finite(v) => Ok(v),
            Self::PositiveInfinity => Err(Error::InfinityArithmetic("+inf used where a finite value is required")),
        }
    }

    /// Scales an interval endpoint by a positive factor.
    pub fn scale_endpoint(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InfinityArithmetic("endpoint scaling requires a positive finite factor"));
        }
        Ok(match *self {
            Self::Finite(v) => Self::Finite(v * factor),
            Self::PositiveInfinity => Self::PositiveInfinity,
        })
    }

    /// `x < self`, with every finite `x` below `+inf`.
    pub fn exceeds(&self, x: f64) -> bool {
        match *self {
            Self::Finite(v) => x < v,
            Self::PositiveInfinity => x.is_finite(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match *self {
            Self::Finite(v) => v,
            Self::PositiveInfinity => f64::INFINITY,
        }
    }
}

impl Eq for ExtendedReal {}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => a.total_cmp(b),
            (Self::Finite(_), Self::PositiveInfinity) => Ordering::Less,
            (Self::PositiveInfinity, Self::Finite(_)) => Ordering::Greater,
            (Self::PositiveInfinity, Self::PositiveInfinity) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(v) => write!(f, "{v}"),
            Self::PositiveInfinity => write!(f, "+inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(v) => s.serialize_f64(*v),
            Self::PositiveInfinity => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => ExtendedReal::finite(v).map_err(serde::de::Error::custom),
            Repr::Str(s) if s == "+inf" || s == "inf" => Ok(ExtendedReal::PositiveInfinity),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("expected a number or \"+inf\", got {s:?}"))),
        }
    }
}

/// Numerical tolerance policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Solver stationarity.
    pub tol_opt: f64,
    /// Fixed-point residual.
    pub tol_res: f64,
    /// Value comparisons.
    pub tol_val: f64,
    /// Clustering radius for argmax points.
    pub tol_cluster: f64,
    /// Grid oracle resolution per dimension.
    pub grid_points: usize,
    /// Multi-start count.
    pub restarts: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { tol_opt: 1e-8, tol_res: 1e-6, tol_val: 1e-7, tol_cluster: 1e-4, grid_points: 512, restarts: 32 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_opt", self.tol_opt),
            ("tol_res", self.tol_res),
            ("tol_val", self.tol_val),
            ("tol_cluster", self.tol_cluster),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidTolerance { name, detail: format!("must be positive and finite, got {v}") });
            }
        }
        if self.grid_points < 16 {
            return Err(Error::InvalidTolerance {
                name: "grid_points",
                detail: format!("must be at least 16, got {}", self.grid_points),
            });
        }
        if self.restarts < 8 {
            return Err(Error::InvalidTolerance {
                name: "restarts",
                detail: format!("must be at least 8, got {}", self.restarts),
            });
        }
        Ok(())
    }
}

/// Serializable identity of a problem instance, carried by curves and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub functional: String,
    pub params: BTreeMap<String, f64>,
    pub n: usize,
    pub rho: f64,
    pub seed: u64,
}

/// A functional on R^n together with the ball `B_rho` it is studied on.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub functional: FunctionalSpec,
    pub n: usize,
    pub rho: f64,
    pub tolerances: Tolerances,
    /// Base seed for the multi-start solvers; restart `k` uses a stream
    /// derived from `(seed, k)`.
    pub seed: u64,
}

impl ProblemInstance {
    pub fn new(functional: FunctionalSpec, rho: f64, tolerances: Tolerances) -> Result<Self> {
        let n = functional.dim();
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidInstance(format!("rho must be positive and finite, got {rho}")));
        }
        tolerances.validate()?;
        let at_origin = functional.value(&vec![0.0; n]);
        if at_origin != 0.0 {
            return Err(Error::InvalidInstance(format!("J(0) must be 0, got {at_origin}")));
        }
        Ok(Self { functional, n, rho, tolerances, seed: 0 })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Same functional and tolerances on a different ball.
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Ok(Self::new(self.functional.clone(), rho, self.tolerances)?.with_seed(self.seed))
    }

    pub fn descriptor(&self) -> InstanceDescriptor {
        InstanceDescriptor {
            functional: self.functional.name().to_string(),
            params: self.functional.params().clone(),
            n: self.n,
            rho: self.rho,
            seed: self.seed,
        }
    }

    pub fn check_point(&self, p: &Point) -> Result<()> {
        if p.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: p.dim() });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn norm_sq_examples() {
        assert_eq!(pt(&[0.0, 0.0]).norm_sq(), 0.0);
        assert_eq!(pt(&[3.0, 4.0]).norm_sq(), 25.0);
        assert_eq!(pt(&[1.0, 1.0, 1.0]).norm_sq(), 3.0);
    }

    #[test]
    fn non_finite_coordinates_rejected() {
        assert!(matches!(Point::new(vec![1.0, f64::NAN]), Err(Error::InvalidPoint { index: 1, .. })));
        assert!(Point::new(vec![f64::INFINITY]).is_err());
        assert!(Point::new(vec![]).is_err());
    }

    #[test]
    fn projection_examples() {
        let p = project_to_sphere(&pt(&[2.0, 0.0]), 1.0).unwrap();
        assert_eq!(p.coords(), &[1.0, 0.0]);
        let p = project_to_sphere(&pt(&[1.0, 1.0]), 2.0).unwrap();
        assert!((p.coords()[0] - 1.0).abs() < 1e-15 && (p.coords()[1] - 1.0).abs() < 1e-15);
        let p = project_to_sphere(&pt(&[3.0, 4.0]), 25.0).unwrap();
        assert_eq!(p.coords(), &[3.0, 4.0]);
    }

    #[test]
    fn projection_of_origin_is_degenerate() {
        assert!(matches!(project_to_sphere(&Point::origin(3), 1.0), Err(Error::DegenerateProjection)));
        assert!(project_to_sphere(&pt(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn extended_real_order() {
        let inf = ExtendedReal::PositiveInfinity;
        let a = ExtendedReal::Finite(1e300);
        assert!(a < inf);
        assert!(inf.exceeds(1e308));
        assert!(!ExtendedReal::Finite(1.0).exceeds(1.0));
        assert!(inf.value().is_err());
        assert_eq!(inf.scale_endpoint(2.0).unwrap(), inf);
        assert!(inf.scale_endpoint(-1.0).is_err());
        assert!(ExtendedReal::finite(f64::NAN).is_err());
    }

    #[test]
    fn extended_real_serde() {
        let s = serde_json::to_string(&ExtendedReal::PositiveInfinity).unwrap();
        assert_eq!(s, "\"+inf\"");
        let back: ExtendedReal = serde_json::from_str(&s).unwrap();
        assert!(back.is_infinite());
        let f: ExtendedReal = serde_json::from_str("2.5").unwrap();
        assert_eq!(f, ExtendedReal::Finite(2.5));
    }

    #[test]
    fn default_tolerances_are_valid() {
        Tolerances::default().validate().unwrap();
        let bad = Tolerances { restarts: 4, ..Default::default() };
        assert!(matches!(bad.validate(), Err(Error::InvalidTolerance { name: "restarts", .. })));
    }
}
