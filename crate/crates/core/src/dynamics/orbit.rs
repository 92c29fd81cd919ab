//! Finite prefixes of natural-extension points `x̂ = (x₀, x₁, …)` with `f(xᵢ₊₁) = xᵢ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::map::PiecewiseMap;
use crate::error::{Error, Result};
use crate::regression::fit_line;
use crate::scalar::Real;

/// Defect allowed in `f(xᵢ₊₁) = xᵢ`, relative to the phase width.
pub const ORBIT_TOL: f64 = 1e-10;

/// Cylinder widths below this fraction of the phase width are continued
/// through the derivative instead of through endpoints.
const LOG_WIDTH_SWITCH: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct BackwardOrbit<S> {
    /// `x₀, x₁, …, x_N`.
    pub points: Vec<S>,
    /// `labels[i]` is the branch containing `points[i + 1]`.
    pub labels: Vec<usize>,
    /// Empirical `K(x̂)`: largest distortion of `fⁿ` on `𝓟ₙ[xₙ]`.
    pub contraction_constant: S,
    /// Empirical `C(x̂)` in `diam 𝓟ₙ[xₙ] ≤ C λ̂⁻ⁿ`.
    pub distortion_constant: S,
}

impl<S: Real> BackwardOrbit<S> {
    /// Follows a prescribed branch word backwards from `x0`.
    pub fn from_word(map: &PiecewiseMap<S>, x0: S, labels: &[usize]) -> Result<Self> {
        let mut points = Vec::with_capacity(labels.len() + 1);
        points.push(x0);
        let mut x = x0;
        for &b in labels {
            x = map.inverse(b, x)?;
            points.push(x);
        }
        Ok(Self { points, labels: labels.to_vec(), contraction_constant: S::one(), distortion_constant: S::one() })
    }

    /// Number of backward steps `N`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn x0(&self) -> S {
        self.points[0]
    }

    /// Checks `f(xᵢ₊₁) = xᵢ` and that every point lies in its labelled branch.
    pub fn validate(&self, map: &PiecewiseMap<S>) -> Result<()> {
        let tol = S::tol(ORBIT_TOL) * map.phase().width();
        for (i, &b) in self.labels.iter().enumerate() {
            let br = map.branch(b);
            let y = self.points[i + 1];
            if !br.domain().contains_with_tol(y, tol) {
                return Err(Error::OrbitInconsistent { index: i + 1, defect: (br.domain().clamp(y) - y).abs().as_f64() });
            }
            let defect = (br.forward(y) - self.points[i]).abs();
            let circle_defect = if map.is_circle() { (map.phase().width() - defect).abs() } else { defect };
            if defect.min(circle_defect) > tol {
                return Err(Error::OrbitInconsistent { index: i + 1, defect: defect.as_f64() });
            }
        }
        Ok(())
    }

    /// Fills in the empirical constants from the first `depth` cylinders.
    pub fn with_estimated_constants(mut self, map: &PiecewiseMap<S>, depth: usize) -> Result<Self> {
        let (k, c) = estimate_constants(map, &self, depth)?;
        self.contraction_constant = k;
        self.distortion_constant = c;
        Ok(self)
    }
}

/// Draws the preimage branch with probability `h(y) / (h(x)|f′(y)|)`.
fn choose_preimage<S: Real, R: Rng + ?Sized>(
    map: &PiecewiseMap<S>,
    x: S,
    density: &dyn Fn(S) -> S,
    rng: &mut R,
) -> Option<(usize, S)> {
    let pre = map.preimages(x);
    if pre.is_empty() {
        return None;
    }
    let weights: Vec<f64> = pre
        .iter()
        .map(|&(_, y)| {
            let w = (density(y) / map.derivative(y).abs()).as_f64();
            if w.is_finite() && w > 0.0 {
                w
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Some(pre[rng.gen_range(0..pre.len())]);
    }
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return Some(pre[i]);
        }
        u -= w;
    }
    pre.last().copied()
}

/// Samples `N` backward steps from `x0` under the natural-extension law of
/// the map's invariant density.
pub fn sample_backward_orbit<S: Real>(map: &PiecewiseMap<S>, x0: S, n: usize, seed: u64) -> Result<BackwardOrbit<S>> {
    let density = map.density().ok_or_else(|| {
        Error::DensityUnavailable(format!("map `{}` has no invariant density; run estimate_density and attach it", map.name()))
    })?;
    sample_backward_orbit_with(map, x0, n, seed, &|x| density.pdf(x))
}

/// As [`sample_backward_orbit`] with an explicit (possibly unnormalised) density.
pub fn sample_backward_orbit_with<S: Real>(
    map: &PiecewiseMap<S>,
    x0: S,
    n: usize,
    seed: u64,
    density: &dyn Fn(S) -> S,
) -> Result<BackwardOrbit<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n + 1);
    let mut labels = Vec::with_capacity(n);
    points.push(x0);
    let mut x = x0;
    for step in 0..n {
        let (b, y) = choose_preimage(map, x, density, &mut rng).ok_or(Error::OrbitEscaped { step, x: x.as_f64() })?;
        labels.push(b);
        points.push(y);
        x = y;
    }
    Ok(BackwardOrbit { points, labels, contraction_constant: S::one(), distortion_constant: S::one() })
}

/// `log diam 𝓟ₙ[xₙ]` for `n = 1..=depth`.
///
/// `𝓟ₙ₊₁[xₙ₊₁]` is the pull-back of `𝓟ₙ[xₙ]` through the branch of
/// `xₙ₊₁`; once the cylinder is below round-off scale its width is carried
/// by `|f′(xₙ₊₁)|`.
pub fn backward_cylinder_log_widths<S: Real>(map: &PiecewiseMap<S>, orbit: &BackwardOrbit<S>, depth: usize) -> Result<Vec<S>> {
    let depth = depth.min(orbit.len());
    if depth == 0 {
        return Ok(vec![]);
    }
    let switch = S::lit(LOG_WIDTH_SWITCH) * map.phase().width();
    let mut out = Vec::with_capacity(depth);
    let mut cyl = Some(map.branch(orbit.labels[0]).domain());
    let mut lw = map.branch(orbit.labels[0]).domain().width().ln();
    out.push(lw);
    for n in 1..depth {
        let b = orbit.labels[n];
        let br = map.branch(b);
        let y = orbit.points[n + 1];
        cyl = match cyl {
            Some(c) if c.width() > switch => {
                let next = br.pull_back(&c).ok_or_else(|| Error::EmptyCylinder(orbit.labels[..=n].to_vec()))?;
                lw = next.width().ln();
                Some(next)
            }
            _ => {
                lw -= br.derivative(y).abs().ln();
                None
            }
        };
        out.push(lw);
    }
    Ok(out)
}

/// `log|Dfⁿ(y)|` along a branch word.
pub(crate) fn log_derivative_along<S: Real>(map: &PiecewiseMap<S>, word: &[usize], y: S) -> S {
    let mut total = S::zero();
    let mut x = y;
    for &b in word {
        let br = map.branch(b);
        let x_in = br.domain().clamp(x);
        total += br.derivative(x_in).abs().ln();
        x = br.forward(x_in);
    }
    total
}

/// Estimates `(K̂, Ĉ)` from the first `depth` backward cylinders.
pub fn estimate_constants<S: Real>(map: &PiecewiseMap<S>, orbit: &BackwardOrbit<S>, depth: usize) -> Result<(S, S)> {
    let widths = backward_cylinder_log_widths(map, orbit, depth)?;
    if widths.len() < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 backward steps, have {}", widths.len())));
    }
    let ns: Vec<S> = (1..=widths.len()).map(|n| S::lit(n as f64)).collect();
    let fit = fit_line(&ns, &widths).ok_or_else(|| Error::InsufficientData("degenerate cylinder widths".into()))?;
    let log_lambda = -fit.slope;
    let c = widths.iter().zip(&ns).map(|(&w, &n)| w + n * log_lambda).fold(S::neg_infinity(), S::max).exp();
    // distortion of fⁿ on 𝓟ₙ[xₙ], sampled at a few interior points
    let mut k = S::one();
    for n in 1..=widths.len().min(24) {
        let word: Vec<usize> = orbit.labels[..n].iter().rev().copied().collect();
        if let Ok(cyl) = super::cylinder::cylinder_from_word(map, &word) {
            if cyl.interval.width() <= S::zero() {
                continue;
            }
            let vals: Vec<S> = (0..9)
                .map(|j| log_derivative_along(map, &word, cyl.interval.lerp(S::lit((j as f64 + 0.5) / 9.0))))
                .collect();
            let spread = vals.iter().copied().fold(S::neg_infinity(), S::max) - vals.iter().copied().fold(S::infinity(), S::min);
            if spread.is_finite() {
                k = k.max(spread.exp());
            }
        }
    }
    Ok((k, c))
}
