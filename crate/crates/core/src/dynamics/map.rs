use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::density::Density;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Shared scalar function.
pub type RealFn<S> = Arc<dyn Fn(S) -> S + Send + Sync>;

/// Closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<S> {
    pub lo: S,
    pub hi: S,
}

impl<S: Real> Interval<S> {
    /// Interval spanned by two points in either order.
    pub fn new(a: S, b: S) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub fn width(&self) -> S {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> S {
        (self.lo + self.hi) * S::half()
    }

    pub fn contains(&self, x: S) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn contains_with_tol(&self, x: S, tol: S) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    /// Point at relative position `t ∈ [0, 1]`.
    pub fn lerp(&self, t: S) -> S {
        self.lo + (self.hi - self.lo) * t
    }

    /// Intersection with non-empty interior.
    pub fn intersect(&self, other: &Self) -> Option<Self> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (hi > lo).then_some(Self { lo, hi })
    }

    pub fn clamp(&self, x: S) -> S {
        x.max(self.lo).min(self.hi)
    }

    pub fn approx_eq(&self, other: &Self, tol: S) -> bool {
        (self.lo - other.lo).abs() <= tol && (self.hi - other.hi).abs() <= tol
    }
}

/// One monotone branch of a piecewise map.
#[derive(Clone)]
pub struct Branch<S> {
    domain: Interval<S>,
    image: Interval<S>,
    increasing: bool,
    forward: RealFn<S>,
    derivative: RealFn<S>,
    inverse: RealFn<S>,
}

impl<S: Real> Branch<S> {
    pub fn new(domain: Interval<S>, forward: RealFn<S>, derivative: RealFn<S>, inverse: RealFn<S>) -> Self {
        let a = forward(domain.lo);
        let b = forward(domain.hi);
        Self { domain, image: Interval::new(a, b), increasing: b >= a, forward, derivative, inverse }
    }

    pub fn domain(&self) -> Interval<S> {
        self.domain
    }

    pub fn image(&self) -> Interval<S> {
        self.image
    }

    pub fn is_increasing(&self) -> bool {
        self.increasing
    }

    #[inline]
    pub fn forward(&self, x: S) -> S {
        (self.forward)(x)
    }

    #[inline]
    pub fn derivative(&self, x: S) -> S {
        (self.derivative)(x)
    }

    /// Inverse branch; the argument is clamped into the branch image.
    #[inline]
    pub fn inverse(&self, y: S) -> S {
        self.domain.clamp((self.inverse)(self.image.clamp(y)))
    }

    /// Preimage of an interval under this branch (`J ∩ image` pulled back).
    pub fn pull_back(&self, j: &Interval<S>) -> Option<Interval<S>> {
        let k = j.intersect(&self.image)?;
        Some(Interval::new(self.inverse(k.lo), self.inverse(k.hi)))
    }

    /// Image of a sub-interval of the domain.
    pub fn push_forward(&self, i: &Interval<S>) -> Interval<S> {
        Interval::new(self.forward(i.lo), self.forward(i.hi))
    }
}

impl<S: Real> fmt::Debug for Branch<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Branch")
            .field("domain", &self.domain)
            .field("image", &self.image)
            .field("increasing", &self.increasing)
            .finish()
    }
}

/// Built-in one-dimensional maps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Builtin {
    /// `x ↦ 2x mod 1` on `[0, 1)`.
    Doubling,
    /// `x ↦ s·min(x, 1 - x)` on `[0, 1]`, `s ∈ (1, 2]`.
    Tent { slope: f64 },
    /// `x ↦ 1 - a x²` on `[-1, 1]`, `a ∈ (0, 2]`.
    Quadratic { a: f64 },
    /// Manneville–Pomeau map with a neutral fixed point at 0, `p ≥ 0`.
    MannevillePomeau { p: f64 },
    /// The slope-2 tent `min(2x, 2(1 - x))`.
    ChebyshevTent,
}

impl Builtin {
    /// Parses `doubling`, `tent`, `quadratic`, `manneville_pomeau` (alias `mp`)
    /// or `chebyshev_tent` with the given parameter.
    pub fn parse(name: &str, param: Option<f64>) -> Result<Self> {
        let need = |what: &str| param.ok_or_else(|| Error::ParameterOutOfRange(format!("map `{name}` needs parameter {what}")));
        match name {
            "doubling" => Ok(Builtin::Doubling),
            "tent" => Ok(Builtin::Tent { slope: param.unwrap_or(2.0) }),
            "quadratic" => Ok(Builtin::Quadratic { a: need("a")? }),
            "manneville_pomeau" | "mp" => Ok(Builtin::MannevillePomeau { p: need("p")? }),
            "chebyshev_tent" => Ok(Builtin::ChebyshevTent),
            other => Err(Error::InvalidMap(format!("unknown builtin map `{other}`"))),
        }
    }
}

/// JSON description of a map: `{ name, params, branchEndpoints }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(rename = "branchEndpoints", default)]
    pub branch_endpoints: Vec<f64>,
}

/// Interval map with labelled monotone branches.
#[derive(Clone)]
pub struct PiecewiseMap<S> {
    name: String,
    params: BTreeMap<String, f64>,
    phase: Interval<S>,
    branches: Vec<Branch<S>>,
    critical: Vec<S>,
    critical_order: Option<u32>,
    density: Option<Density<S>>,
    circle: bool,
}

impl<S: Real> fmt::Debug for PiecewiseMap<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PiecewiseMap")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("phase", &self.phase)
            .field("branches", &self.branches.len())
            .field("density", &self.density.is_some())
            .finish()
    }
}

/// Tolerance for locating points relative to branch endpoints.
const LOCATE_TOL: f64 = 1e-12;

impl<S: Real> PiecewiseMap<S> {
    /// Assembles a map from branches ordered left to right.
    pub fn new(name: impl Into<String>, branches: Vec<Branch<S>>, critical: Vec<S>) -> Result<Self> {
        let name = name.into();
        if branches.is_empty() {
            return Err(Error::InvalidMap(format!("map `{name}` has no branches")));
        }
        let phase = Interval { lo: branches[0].domain.lo, hi: branches[branches.len() - 1].domain.hi };
        for w in branches.windows(2) {
            let gap = (w[1].domain.lo - w[0].domain.hi).abs();
            if gap > S::tol(1e-9) * phase.width() {
                return Err(Error::InvalidMap(format!(
                    "branch domains of `{name}` do not tile the phase interval (gap {gap})"
                )));
            }
        }
        Ok(Self {
            name,
            params: BTreeMap::new(),
            phase,
            branches,
            critical,
            critical_order: None,
            density: None,
            circle: false,
        })
    }

    pub fn builtin(which: Builtin) -> Result<Self> {
        super::builtin::build(which)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    pub(crate) fn with_params(mut self, params: BTreeMap<String, f64>) -> Self {
        self.params = params;
        self
    }

    pub fn phase(&self) -> Interval<S> {
        self.phase
    }

    pub fn branches(&self) -> &[Branch<S>] {
        &self.branches
    }

    pub fn branch(&self, i: usize) -> &Branch<S> {
        &self.branches[i]
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    pub fn critical_points(&self) -> &[S] {
        &self.critical
    }

    pub fn critical_order(&self) -> Option<u32> {
        self.critical_order
    }

    pub(crate) fn with_critical_order(mut self, order: u32) -> Self {
        self.critical_order = Some(order);
        self
    }

    /// `true` when the phase interval is a circle (`0 ≡ 1`).
    pub fn is_circle(&self) -> bool {
        self.circle
    }

    pub(crate) fn as_circle(mut self) -> Self {
        self.circle = true;
        self
    }

    pub fn density(&self) -> Option<&Density<S>> {
        self.density.as_ref()
    }

    pub fn with_density(mut self, density: Density<S>) -> Self {
        self.density = Some(density);
        self
    }

    pub fn require_density(&self) -> Result<&Density<S>> {
        self.density.as_ref().ok_or_else(|| Error::DensityUnavailable(self.name.clone()))
    }

    /// Index of the branch whose domain contains `x`: half-open `[lo, hi)`
    /// except for the last branch. Points within round-off of the phase
    /// interval are snapped onto it.
    pub fn branch_index(&self, x: S) -> Option<usize> {
        let tol = S::tol(LOCATE_TOL) * self.phase.width();
        if !self.phase.contains_with_tol(x, tol) {
            return None;
        }
        let x = self.phase.clamp(x);
        let last = self.branches.len() - 1;
        // binary search over left endpoints
        let idx = self.branches.partition_point(|b| b.domain.lo <= x);
        Some(idx.saturating_sub(1).min(last))
    }

    pub fn forward(&self, x: S) -> S {
        let i = self.branch_index(x).unwrap_or_else(|| if x < self.phase.lo { 0 } else { self.branches.len() - 1 });
        self.branches[i].forward(self.phase.clamp(x))
    }

    pub fn derivative(&self, x: S) -> S {
        let i = self.branch_index(x).unwrap_or_else(|| if x < self.phase.lo { 0 } else { self.branches.len() - 1 });
        self.branches[i].derivative(self.phase.clamp(x))
    }

    /// Inverse of branch `b` at `y`; `y` must lie in the branch image up to 1e-9.
    pub fn inverse(&self, b: usize, y: S) -> Result<S> {
        let br = self.branches.get(b).ok_or_else(|| Error::InvalidMap(format!("no branch {b}")))?;
        if !br.image.contains_with_tol(y, S::tol(1e-9)) {
            return Err(Error::NotInBranchImage { branch: b, x: y.as_f64() });
        }
        Ok(br.inverse(y))
    }

    /// All preimages `(branch, y)` of `x`.
    pub fn preimages(&self, x: S) -> Vec<(usize, S)> {
        let tol = S::tol(LOCATE_TOL) * self.phase.width();
        self.branches
            .iter()
            .enumerate()
            .filter(|(_, b)| b.image.contains_with_tol(x, tol))
            .map(|(i, b)| (i, b.inverse(x)))
            .collect()
    }

    /// Interior breakpoints between consecutive branches.
    pub fn breakpoints(&self) -> Vec<S> {
        self.branches.iter().skip(1).map(|b| b.domain.lo).collect()
    }

    /// All branch endpoints, including the ends of the phase interval.
    pub fn partition_endpoints(&self) -> Vec<S> {
        let mut pts: Vec<S> = self.branches.iter().map(|b| b.domain.lo).collect();
        pts.push(self.phase.hi);
        pts
    }

    /// Distance from `x` to the nearest interior breakpoint.
    pub fn distance_to_breakpoint(&self, x: S) -> S {
        self.breakpoints().into_iter().map(|c| (x - c).abs()).fold(S::infinity(), S::min)
    }

    /// JSON-ready description.
    pub fn spec(&self) -> MapSpec {
        let mut endpoints: Vec<f64> = self.branches.iter().map(|b| b.domain.lo.as_f64()).collect();
        endpoints.push(self.phase.hi.as_f64());
        MapSpec { name: self.name.clone(), params: self.params.clone(), branch_endpoints: endpoints }
    }

    /// Rebuilds a builtin map from its description.
    pub fn from_spec(spec: &MapSpec) -> Result<Self> {
        let param = ["a", "p", "slope"].iter().find_map(|k| spec.params.get(*k).copied());
        let map = Self::builtin(Builtin::parse(&spec.name, param)?)?;
        if !spec.branch_endpoints.is_empty() {
            let own = map.spec().branch_endpoints;
            let matches = own.len() == spec.branch_endpoints.len()
                && own.iter().zip(&spec.branch_endpoints).all(|(a, b)| (a - b).abs() < 1e-12);
            if !matches {
                return Err(Error::InvalidMap(format!(
                    "branch endpoints {:?} do not match builtin `{}` ({:?})",
                    spec.branch_endpoints, spec.name, own
                )));
            }
        }
        Ok(map)
    }

    /// Checks tiling, strict monotonicity on a grid and the inverse round
    /// trip on `grid` points per branch.
    pub fn validate(&self, grid: usize) -> Result<()> {
        let grid = grid.max(3);
        for (i, b) in self.branches.iter().enumerate() {
            let mut prev: Option<S> = None;
            for k in 0..grid {
                let t = S::lit((k as f64 + 0.5) / grid as f64);
                let x = b.domain.lerp(t);
                let y = b.forward(x);
                if let Some(p) = prev {
                    let ok = if b.increasing { y > p } else { y < p };
                    if !ok {
                        return Err(Error::InvalidMap(format!("branch {i} of `{}` is not strictly monotone near {x}", self.name)));
                    }
                }
                prev = Some(y);
                let back = b.inverse(y);
                let defect = (back - x).abs();
                if defect > S::tol(1e-10) {
                    return Err(Error::InvalidMap(format!(
                        "inverse round trip of branch {i} of `{}` fails at {x} (defect {defect})",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}
