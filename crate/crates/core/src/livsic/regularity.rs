//! Regularity diagnostics: the (PH) inequality, Hölder fits, effective
//! exponents of singular cocycles, shrinking-target sums and the density
//! point check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::reconstruct::sample_anchor;
use crate::cocycle::{EpsSequence, Singularity};
use crate::dynamics::{cylinder, Interval, PiecewiseMap};
use crate::error::{Error, Result};
use crate::regression::fit_line;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhCheck<S> {
    pub ok: bool,
    /// `λ^α − μ_u`.
    pub margin: S,
}

/// `1 ≤ μ_u < λ^α`.
pub fn ph_check<S: Real>(mu_u: S, lambda: S, alpha: S) -> Result<PhCheck<S>> {
    if !(lambda > S::one()) {
        return Err(Error::ParameterOutOfRange(format!("lambda = {lambda} must exceed 1")));
    }
    if !(alpha > S::zero() && alpha <= S::one()) {
        return Err(Error::ParameterOutOfRange(format!("alpha = {alpha} not in (0, 1]")));
    }
    if !(mu_u >= S::one()) {
        return Err(Error::ParameterOutOfRange(format!("mu_u = {mu_u} must be at least 1")));
    }
    let margin = lambda.powf(alpha) - mu_u;
    Ok(PhCheck { ok: margin > S::zero(), margin })
}

/// Tower form `1 ≤ μ_u < λ₀^{α/𝓡}`.
pub fn ph_check_tower<S: Real>(mu_u: S, lambda0: S, kac: S, alpha: S) -> Result<PhCheck<S>> {
    if !(kac >= S::one()) || !kac.is_finite() {
        return Err(Error::ParameterOutOfRange(format!("return-time sum {kac} must be finite and at least 1")));
    }
    ph_check(mu_u, lambda0.powf(kac.recip()), alpha)
}

/// `α > p / (1 + p)`.
pub fn mp_regularity_gate<S: Real>(p: S, alpha: S) -> Result<bool> {
    if !(p >= S::zero()) {
        return Err(Error::ParameterOutOfRange(format!("p = {p} must be non-negative")));
    }
    if !(alpha > S::zero() && alpha <= S::one()) {
        return Err(Error::ParameterOutOfRange(format!("alpha = {alpha} not in (0, 1]")));
    }
    Ok(alpha > p / (S::one() + p))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolderEstimate<S> {
    pub alpha_hat: S,
    /// Smallest `C` with `d ≤ C |x − y|^α̂` on every sample.
    pub coefficient: S,
    pub r2: S,
    /// Fewer than 200 pairs or fewer than three decades of separation.
    pub low_confidence: bool,
}

/// Log-log fit of `d(ψx, ψy)` against `|x − y|`, slope clipped to `(0, 1.2]`.
pub fn holder_exponent_estimate<S: Real>(samples: &[(S, S, S)]) -> Result<HolderEstimate<S>> {
    let (lx, ly): (Vec<S>, Vec<S>) = samples
        .iter()
        .filter_map(|&(x, y, d)| {
            let r = (x - y).abs();
            (r > S::zero() && d > S::zero() && d.is_finite()).then(|| (r.ln(), d.ln()))
        })
        .unzip();
    let fit = fit_line(&lx, &ly).ok_or_else(|| Error::InsufficientData("Hölder fit needs at least two distinct separations".into()))?;
    let lo = lx.iter().copied().fold(S::infinity(), S::min);
    let hi = lx.iter().copied().fold(S::neg_infinity(), S::max);
    let decades = (hi - lo) / S::LN_10();
    let alpha_hat = fit.slope.max(S::lit(1e-6)).min(S::lit(1.2));
    let coefficient = lx.iter().zip(&ly).map(|(&r, &d)| (d - alpha_hat * r).exp()).fold(S::zero(), S::max);
    Ok(HolderEstimate {
        alpha_hat,
        coefficient,
        r2: fit.r2,
        low_confidence: lx.len() < 200 || decades < S::lit(3.0),
    })
}

/// Window over which the finite-data limsup is taken.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimsupWindow {
    /// Closed-form sequences are sampled on `[horizon/2, horizon]`.
    pub horizon: f64,
    /// Sample count for closed forms.
    pub points: usize,
    /// Fraction of a sample list that forms the tail.
    pub tail_fraction: f64,
}

impl Default for LimsupWindow {
    fn default() -> Self {
        Self { horizon: 2f64.powi(40), points: 64, tail_fraction: 0.5 }
    }
}

fn limsup_ratio<S: Real>(eps: &EpsSequence<S>, lambda: S, window: &LimsupWindow) -> Result<S> {
    let log_lambda = lambda.ln();
    let term = |n: usize, v: S| v / (S::lit(n as f64) * log_lambda);
    match eps {
        EpsSequence::ClosedForm { .. } => {
            let (a, b) = ((window.horizon / 2.0).ln(), window.horizon.ln());
            let m = window.points.max(2);
            let mut best = S::neg_infinity();
            for i in 0..m {
                let n = (a + (b - a) * i as f64 / (m - 1) as f64).exp().round() as usize;
                let v = eps.neg_log(n).expect("closed form is total");
                best = best.max(term(n, v));
            }
            Ok(best)
        }
        EpsSequence::Samples(v) => {
            if v.len() < 50 {
                return Err(Error::InsufficientData(format!("epsilon sequence has {} terms, need at least 50", v.len())));
            }
            let start = ((1.0 - window.tail_fraction) * v.len() as f64).floor() as usize;
            Ok((start.max(1)..=v.len()).map(|n| term(n, eps.neg_log(n).expect("in range"))).fold(S::neg_infinity(), S::max))
        }
    }
}

/// `α̃ = limsup (q · log εₙ⁻¹) / (n log λ)` with `q = 1` for a logarithmic
/// singularity and `q = p + 1` for a pole of order `p`.
pub fn alpha_tilde<S: Real>(sing: &Singularity<S>, lambda: S, window: &LimsupWindow) -> Result<S> {
    if !(lambda > S::one()) {
        return Err(Error::ParameterOutOfRange(format!("lambda = {lambda} must exceed 1")));
    }
    let raw = match sing {
        Singularity::None | Singularity::BoundedDiscontinuity { .. } => return Ok(S::zero()),
        Singularity::Log { eps, .. } => limsup_ratio(eps, lambda, window)?,
        Singularity::Pole { order, eps, .. } => (*order + S::one()) * limsup_ratio(eps, lambda, window)?,
    };
    Ok(raw.max(S::zero()))
}

/// Effective Hölder exponent `1 − α̃ − ι` of the transfer function.
pub fn singular_effective_exponent<S: Real>(sing: &Singularity<S>, lambda: S, iota: S) -> Result<S> {
    singular_effective_exponent_with(sing, lambda, iota, &LimsupWindow::default())
}

pub fn singular_effective_exponent_with<S: Real>(sing: &Singularity<S>, lambda: S, iota: S, window: &LimsupWindow) -> Result<S> {
    if !(iota > S::zero()) {
        return Err(Error::ParameterOutOfRange(format!("iota = {iota} must be positive")));
    }
    let a = alpha_tilde(sing, lambda, window)?;
    if a >= S::one() {
        return Err(Error::HypothesisViolated { alpha_tilde: a.as_f64() });
    }
    Ok(S::one() - a - iota)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BorelCantelliReport<S> {
    /// `Σ_{k ≤ n} μ(B(c, ε_k))` for `n = 1..=length`.
    pub partial_sums: Vec<S>,
    /// Sums over the dyadic blocks `[2ᵏ, 2ᵏ⁺¹)` that fit in the horizon.
    pub block_sums: Vec<S>,
    /// Ratio of the last two complete blocks.
    pub block_ratio: S,
    /// Blocks shrink geometrically (ratio below 0.95).
    pub summable: bool,
    /// Extrapolated `Σ_{n > length} μ(Bₙ)`, infinite when not summable.
    pub tail_estimate: S,
    /// `partial_sums[length-1] + tail_estimate`.
    pub summable_estimate: S,
    /// Per sampled orbit, the last `n` with `xₙ ∈ Bₙ` (0 if none).
    pub avoidance_depth: Vec<usize>,
}

impl<S: Real> BorelCantelliReport<S> {
    /// `counts[n]` = number of orbits whose last visit was at step `n`.
    pub fn depth_histogram(&self) -> Vec<usize> {
        let max = self.avoidance_depth.iter().copied().max().unwrap_or(0);
        let mut counts = vec![0; max + 1];
        for &d in &self.avoidance_depth {
            counts[d] += 1;
        }
        counts
    }

    /// Fraction of orbits with `N(x̂) ≤ n`.
    pub fn fraction_within(&self, n: usize) -> f64 {
        if self.avoidance_depth.is_empty() {
            return 1.0;
        }
        self.avoidance_depth.iter().filter(|&&d| d <= n).count() as f64 / self.avoidance_depth.len() as f64
    }
}

fn ball_mass<S: Real>(map: &PiecewiseMap<S>, c: S, eps: S) -> S {
    match map.density() {
        Some(d) => d.mass(c - eps, c + eps),
        None => {
            let phase = map.phase();
            (phase.clamp(c + eps) - phase.clamp(c - eps)) / phase.width()
        }
    }
}

/// Sums of a series over the dyadic blocks `[2ᵏ, 2ᵏ⁺¹)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicBlocks<S> {
    /// Complete blocks only.
    pub sums: Vec<S>,
    /// Ratio of the last two complete blocks.
    pub ratio: S,
    /// `ratio < 0.95`: the partial sums look Cauchy.
    pub cauchy: bool,
}

/// Dyadic block test on `terms[n-1] = aₙ`, `n ≥ 1`.
pub fn dyadic_block_test<S: Real>(terms: &[S]) -> DyadicBlocks<S> {
    let mut sums = Vec::new();
    let mut k = 0u32;
    while (1usize << (k + 1)) - 1 <= terms.len() {
        let (a, b) = (1usize << k, 1usize << (k + 1));
        sums.push(terms[a - 1..b - 1].iter().copied().sum());
        k += 1;
    }
    let nb = sums.len();
    let ratio = if nb >= 2 && sums[nb - 2] > S::zero() { sums[nb - 1] / sums[nb - 2] } else { S::zero() };
    DyadicBlocks { cauchy: ratio < S::lit(0.95), sums, ratio }
}

/// Shrinking-target sums `Σ μ(B(c, εₙ))` and last-visit depths of sampled
/// backward orbits.
pub fn borel_cantelli_avoidance<S: Real>(
    map: &PiecewiseMap<S>,
    c: S,
    eps: &EpsSequence<S>,
    seed: u64,
    orbits: usize,
    length: usize,
) -> Result<BorelCantelliReport<S>> {
    let phase = map.phase();
    if !phase.contains(c) {
        return Err(Error::ParameterOutOfRange(format!("target {c} outside the phase interval")));
    }
    if length < 4 {
        return Err(Error::InsufficientData("need at least 4 terms".into()));
    }
    let radii: Vec<S> = (1..=length)
        .map(|n| eps.eps(n).ok_or_else(|| Error::InsufficientData(format!("epsilon sequence ends before n = {n}"))))
        .collect::<Result<_>>()?;
    let masses: Vec<S> = radii.iter().map(|&e| ball_mass(map, c, e)).collect();
    let mut partial_sums = Vec::with_capacity(length);
    let mut acc = S::zero();
    for &m in &masses {
        acc += m;
        partial_sums.push(acc);
    }
    let DyadicBlocks { sums: block_sums, ratio: block_ratio, cauchy: summable } = dyadic_block_test(&masses);
    let nb = block_sums.len();
    let tail_estimate = if summable {
        // geometric continuation from the first incomplete block
        let full_end = (1usize << nb) - 1;
        let from_full: S = block_sums[nb - 1] * block_ratio / (S::one() - block_ratio);
        let covered: S = masses[full_end..].iter().copied().sum();
        (from_full - covered).max(S::zero())
    } else {
        S::infinity()
    };

    let avoidance_depth: Vec<usize> = (0..orbits)
        .into_par_iter()
        .map(|i| -> Result<usize> {
            let s = seed.wrapping_add(i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let x0 = match map.density() {
                Some(d) => d.sample(&mut rng)?,
                None => phase.lerp(S::lit(rng.gen::<f64>())),
            };
            let orbit = sample_anchor(map, x0, length, s ^ 0x5DEE_CE66)?;
            Ok((1..=length).filter(|&n| (orbit.points[n] - c).abs() < radii[n - 1]).max().unwrap_or(0))
        })
        .collect::<Result<_>>()?;

    Ok(BorelCantelliReport {
        summable_estimate: acc + tail_estimate,
        partial_sums,
        block_sums,
        block_ratio,
        summable,
        tail_estimate,
        avoidance_depth,
    })
}

/// Partition used by [`martingale_density_check`].
#[derive(Clone, Copy)]
pub enum Partition<'a, S> {
    /// Dyadic subintervals of the given interval.
    Dyadic(Interval<S>),
    /// Cylinders `𝓟ₙ` of a map.
    Cylinders(&'a PiecewiseMap<S>),
}

impl<S: Real> Partition<'_, S> {
    fn domain(&self) -> Interval<S> {
        match self {
            Partition::Dyadic(i) => *i,
            Partition::Cylinders(m) => m.phase(),
        }
    }

    fn cell(&self, x: S, depth: usize) -> Result<Interval<S>> {
        match self {
            Partition::Dyadic(i) => {
                let cells = S::lit(2f64.powi(depth as i32));
                let k = ((x - i.lo) / i.width() * cells).floor().max(S::zero()).min(cells - S::one());
                Ok(Interval::new(i.lerp(k / cells), i.lerp((k + S::one()) / cells)))
            }
            Partition::Cylinders(m) => Ok(cylinder(m, x, depth)?.interval),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleCheck {
    /// `(depth, proportion of sampled x whose fraction exceeds 1 − η)`.
    pub per_depth: Vec<(usize, f64)>,
    /// Proportion at the deepest level.
    pub proportion: f64,
}

/// Points per cell used to estimate the conditional fraction.
pub const MARTINGALE_CELL_GRID: usize = 64;

/// Share of sampled `x` at which `{y ∈ 𝓟ₙ[x] : |φ(x) − φ(y)| < η}` fills more
/// than `1 − η` of the cell, at each requested depth.
///
/// Points are sampled uniformly and the cell fraction is taken on a uniform
/// grid, so the reference measure is Lebesgue.
pub fn martingale_density_check<S: Real>(
    phi: impl Fn(S) -> S + Sync,
    partition: Partition<'_, S>,
    depths: &[usize],
    eta: S,
    samples: usize,
    seed: u64,
) -> Result<MartingaleCheck> {
    if depths.is_empty() || samples == 0 {
        return Err(Error::InsufficientData("need at least one depth and one sample".into()));
    }
    let dom = partition.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<S> = (0..samples).map(|_| dom.lerp(S::lit(rng.gen::<f64>()))).collect();
    let threshold = S::one() - eta;
    let mut per_depth = Vec::with_capacity(depths.len());
    for &depth in depths {
        let good = xs
            .par_iter()
            .map(|&x| -> Result<bool> {
                let cell = match partition.cell(x, depth) {
                    Ok(c) => c,
                    // sample on a cylinder boundary: no defined cell, counted as failure
                    Err(Error::BoundaryOrbit { .. }) => return Ok(false),
                    Err(e) => return Err(e),
                };
                let fx = phi(x);
                let m = MARTINGALE_CELL_GRID;
                let hits = (0..m)
                    .filter(|&j| (phi(cell.lerp(S::lit((j as f64 + 0.5) / m as f64))) - fx).abs() < eta)
                    .count();
                Ok(S::lit(hits as f64 / m as f64) > threshold)
            })
            .collect::<Result<Vec<bool>>>()?
            .into_iter()
            .filter(|&g| g)
            .count();
        per_depth.push((depth, good as f64 / samples as f64));
    }
    let deepest = depths.iter().copied().max().expect("non-empty");
    let proportion = per_depth.iter().filter(|(d, _)| *d == deepest).map(|&(_, p)| p).next().unwrap_or(0.0);
    Ok(MartingaleCheck { per_depth, proportion })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::dynamics::Builtin;

    #[test]
    fn ph_examples() {
        let c = ph_check(1.0, 2.0, 0.5).unwrap();
        assert!(c.ok && (c.margin - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        let lam: f64 = 3.0;
        assert!(!ph_check(lam.powf(0.7), lam, 0.7).unwrap().ok);
        let t = ph_check_tower(1.0f64, 2.0, 2.0, 1.0).unwrap();
        assert!(t.ok && (t.margin - 0.41421356).abs() < 1e-6);
        assert!(ph_check(0.5, 2.0, 0.5).is_err());
        assert!(ph_check(1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn mp_gate_threshold() {
        assert!(mp_regularity_gate(1.0, 0.6).unwrap());
        assert!(!mp_regularity_gate(1.0, 0.4).unwrap());
        assert!(!mp_regularity_gate(1.0, 0.5).unwrap());
        assert!(mp_regularity_gate(0.0, 1e-3).unwrap());
    }

    fn anchored_pairs(psi: impl Fn(f64) -> f64, x0: f64, span: f64) -> Vec<(f64, f64, f64)> {
        (0..400)
            .map(|i| {
                let r = span * 10f64.powf(-5.0 * i as f64 / 399.0);
                (x0, x0 + r, (psi(x0 + r) - psi(x0)).abs())
            })
            .collect()
    }

    #[test]
    fn holder_fit_examples() {
        let e = holder_exponent_estimate(&anchored_pairs(f64::sqrt, 0.0, 1.0)).unwrap();
        assert!((e.alpha_hat - 0.5).abs() < 0.05 && !e.low_confidence);
        let e = holder_exponent_estimate(&anchored_pairs(|x| 3.0 * x - 1.0, 0.2, 0.7)).unwrap();
        assert!((e.alpha_hat - 1.0).abs() < 0.05);
        let few = holder_exponent_estimate(&anchored_pairs(f64::sqrt, 0.0, 1.0)[..50]).unwrap();
        assert!(few.low_confidence);
    }

    #[test]
    fn chebyshev_transfer_is_smooth_inside() {
        let psi = |x: f64| (PI * (1.0 - x * x).sqrt()).ln();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let samples: Vec<(f64, f64, f64)> = (0..1000)
            .map(|_| {
                let x = rng.gen_range(-0.9..0.9);
                let r: f64 = 10f64.powf(rng.gen_range(-6.0..-1.0));
                let y = if x + r <= 0.9 { x + r } else { x - r };
                (x, y, (psi(x) - psi(y)).abs())
            })
            .collect();
        let e = holder_exponent_estimate(&samples).unwrap();
        assert!(e.alpha_hat >= 0.95, "{}", e.alpha_hat);
        for &(x, y, d) in &samples {
            assert!(d <= e.coefficient * (x - y).abs().powf(e.alpha_hat) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn effective_exponents() {
        let (lambda, beta, iota) = (2.0f64, 0.3f64, 0.01f64);
        let log = Singularity::Log { points: vec![0.5], eps: EpsSequence::geometric(lambda, beta) };
        assert!((alpha_tilde(&log, lambda, &LimsupWindow::default()).unwrap() - beta).abs() < 1e-12);
        assert!((singular_effective_exponent(&log, lambda, iota).unwrap() - (1.0 - beta - iota)).abs() < 1e-12);

        let power = Singularity::Log { points: vec![0.5], eps: EpsSequence::power(2.0) };
        let a = alpha_tilde(&power, 3.0, &LimsupWindow::default()).unwrap();
        assert!(a < 1e-10, "{a}");

        let pole = Singularity::Pole { points: vec![0.5], order: 1.0, eps: EpsSequence::geometric(lambda, beta) };
        assert!((alpha_tilde(&pole, lambda, &LimsupWindow::default()).unwrap() - 2.0 * beta).abs() < 1e-12);

        let too_fast = Singularity::Pole { points: vec![0.5], order: 1.0, eps: EpsSequence::geometric(lambda, 0.6) };
        assert!(matches!(singular_effective_exponent(&too_fast, lambda, iota), Err(Error::HypothesisViolated { .. })));

        let jump = Singularity::BoundedDiscontinuity { points: vec![0.5] };
        assert_eq!(singular_effective_exponent(&jump, lambda, iota).unwrap(), 1.0 - iota);
    }

    #[test]
    fn sampled_eps_sequences() {
        let v: Vec<f64> = (1..=100).map(|n| 2f64.powf(-0.25 * n as f64)).collect();
        let s = Singularity::Log { points: vec![], eps: EpsSequence::samples(v).unwrap() };
        assert!((alpha_tilde(&s, 2.0, &LimsupWindow::default()).unwrap() - 0.25).abs() < 1e-12);
        let short = Singularity::Log { points: vec![], eps: EpsSequence::samples(vec![0.5; 10]).unwrap() };
        assert!(alpha_tilde(&short, 2.0, &LimsupWindow::default()).is_err());
    }

    #[test]
    fn borel_cantelli_examples() {
        let q = PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 2.0 }).unwrap();
        let r = borel_cantelli_avoidance(&q, 0.0, &EpsSequence::power(2.0), 1, 10, 1000).unwrap();
        assert!(r.summable && r.tail_estimate < 1e-3, "{} {}", r.block_ratio, r.tail_estimate);
        // tail oracle: μ(B(0, ε)) ≈ 2ε/π, Σ_{n>1000} n⁻² ≈ 1/1000
        assert!((r.tail_estimate - 2.0 / (PI * 1000.5)).abs() < 5e-5);

        let r = borel_cantelli_avoidance(&q, 0.0, &EpsSequence::inverse_log(), 2, 4, 1000).unwrap();
        assert!(!r.summable && r.tail_estimate.is_infinite());

        let r = borel_cantelli_avoidance(&q, 0.0, &EpsSequence::power(4.0), 3, 1000, 200).unwrap();
        assert!(r.summable);
        assert!(r.fraction_within(50) >= 0.99, "{}", r.fraction_within(50));
        assert_eq!(r.depth_histogram().iter().sum::<usize>(), 1000);
    }

    #[test]
    fn martingale_examples() {
        let unit = Partition::Dyadic(Interval::new(0.0, 1.0));
        let c = martingale_density_check(|x: f64| (2.0 * PI * x).sin(), unit, &[4, 8, 12], 0.1, 2000, 1).unwrap();
        assert!(c.proportion >= 0.99);
        let c = martingale_density_check(|_: f64| 1.0, unit, &[1, 6], 0.1, 500, 2).unwrap();
        assert!(c.per_depth.iter().all(|&(_, p)| p == 1.0));
        let c = martingale_density_check(|x: f64| if x < 0.5 { 1.0 } else { 0.0 }, unit, &[12], 0.1, 2000, 3).unwrap();
        assert_eq!(c.proportion, 1.0);
        let d = PiecewiseMap::<f64>::builtin(Builtin::Doubling).unwrap();
        let c = martingale_density_check(|x: f64| (2.0 * PI * x).sin(), Partition::Cylinders(&d), &[10], 0.1, 500, 4).unwrap();
        assert!(c.proportion >= 0.99);
    }
}
