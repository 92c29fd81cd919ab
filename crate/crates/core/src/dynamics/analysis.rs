//! Distortion, Lyapunov exponents and backward contraction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cylinder::{cylinder_from_word, CylinderSet};
use super::map::PiecewiseMap;
use super::orbit::{backward_cylinder_log_widths, log_derivative_along, BackwardOrbit};
use crate::error::{Error, Result};
use crate::regression::fit_line;
use crate::scalar::Real;

/// Points per cylinder used by the distortion estimates.
pub const DISTORTION_GRID: usize = 33;

fn interior_grid<S: Real>(cyl: &CylinderSet<S>, m: usize) -> Vec<S> {
    (0..m).map(|j| cyl.interval.lerp(S::lit((j as f64 + 0.5) / m as f64))).collect()
}

fn check_critical<S: Real>(map: &PiecewiseMap<S>, cyl: &CylinderSet<S>) -> Result<()> {
    // a critical point of fⁿ inside the cylinder is a critical point of f
    // hit by some fⁱ(y), which forces an endpoint at that spot
    let mut x = cyl.interval;
    for &b in &cyl.word {
        let br = map.branch(b);
        // pushed-forward endpoints carry round-off
        let margin = S::tol(1e-9) * x.width();
        for &c in map.critical_points() {
            if c > x.lo + margin && c < x.hi - margin {
                return Err(Error::CriticalCylinder(c.as_f64()));
            }
        }
        x = br.push_forward(&x);
    }
    Ok(())
}

/// `max |Dfⁿ(y)| / |Dfⁿ(z)|` over interior grid pairs of the cylinder, where
/// `n` is the length of its branch word.
pub fn distortion_ratio<S: Real>(map: &PiecewiseMap<S>, cyl: &CylinderSet<S>) -> Result<S> {
    check_critical(map, cyl)?;
    let logs: Vec<S> = interior_grid(cyl, DISTORTION_GRID).into_iter().map(|y| log_derivative_along(map, &cyl.word, y)).collect();
    if logs.iter().any(|v| !v.is_finite()) {
        return Err(Error::CriticalCylinder(cyl.interval.midpoint().as_f64()));
    }
    let hi = logs.iter().copied().fold(S::neg_infinity(), S::max);
    let lo = logs.iter().copied().fold(S::infinity(), S::min);
    Ok((hi - lo).exp())
}

/// Reference measure for the Jacobian in [`jacobian_distortion_bound`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JacobianReference {
    /// `J_μ = |f′| h∘f / h` for the map's invariant density `h`.
    InvariantDensity,
    /// `J = |f′|`.
    Lebesgue,
}

/// Empirical `B` in `Jⁿ(yₙ)/Jⁿ(zₙ) ≤ 1 + B ρ(y₀, z₀)^γ`, over grid pairs in
/// the cylinders `𝓟ₙ[xₙ]`, `n = 1..=depth`, of a backward orbit.
pub fn jacobian_distortion_bound<S: Real>(
    map: &PiecewiseMap<S>,
    orbit: &BackwardOrbit<S>,
    gamma: S,
    depth: usize,
    reference: JacobianReference,
) -> Result<S> {
    let density = match reference {
        JacobianReference::InvariantDensity => Some(map.require_density()?),
        JacobianReference::Lebesgue => None,
    };
    let depth = depth.min(orbit.len());
    let mut bound = S::zero();
    for n in 1..=depth {
        let word: Vec<usize> = orbit.labels[..n].iter().rev().copied().collect();
        let cyl = cylinder_from_word(map, &word)?;
        check_critical(map, &cyl)?;
        let pts = interior_grid(&cyl, 17);
        let data: Vec<(S, S)> = pts
            .iter()
            .map(|&y| {
                let mut x = y;
                for &b in &word {
                    let br = map.branch(b);
                    x = br.forward(br.domain().clamp(x));
                }
                let mut log_j = log_derivative_along(map, &word, y);
                if let Some(d) = density {
                    log_j += d.pdf(x).ln() - d.pdf(y).ln();
                }
                (x, log_j)
            })
            .collect();
        for (i, &(y0, jy)) in data.iter().enumerate() {
            for &(z0, jz) in &data[i + 1..] {
                let rho = (y0 - z0).abs();
                if rho <= S::zero() {
                    continue;
                }
                let ratio = (jy - jz).abs().exp();
                let b = (ratio - S::one()) / rho.powf(gamma);
                if b.is_finite() {
                    bound = bound.max(b);
                }
            }
        }
    }
    Ok(bound)
}

/// Birkhoff average of `log|f′|` along a forward orbit started from the
/// invariant density (uniform if none is attached).
///
/// In floating point, maps such as doubling collapse onto a fixed point after
/// a few dozen steps; when the orbit lands exactly on a fixed point it is
/// restarted from a fresh random point.
pub fn lyapunov_exponent<S: Real>(map: &PiecewiseMap<S>, burn_in: u64, n: u64, seed: u64) -> Result<S> {
    if n == 0 {
        return Err(Error::InsufficientData("Lyapunov average needs at least one iterate".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase = map.phase();
    let fresh = |rng: &mut ChaCha8Rng| -> Result<S> {
        match map.density() {
            Some(d) => d.sample(rng),
            None => Ok(phase.lerp(S::lit(rng.gen::<f64>()))),
        }
    };
    let tol = S::tol(1e-9) * phase.width();
    let mut x = fresh(&mut rng)?;
    let step = |x: S, rng: &mut ChaCha8Rng, i: u64| -> Result<S> {
        let y = map.forward(x);
        if !y.is_finite() || !phase.contains_with_tol(y, tol) {
            return Err(Error::OrbitEscaped { step: i as usize, x: y.as_f64() });
        }
        if y == x {
            return fresh(rng);
        }
        Ok(y)
    };
    for i in 0..burn_in {
        x = step(x, &mut rng, i)?;
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for i in 0..n {
        let term = map.derivative(x).abs().ln().as_f64();
        if !term.is_finite() {
            return Err(Error::OrbitEscaped { step: i as usize, x: x.as_f64() });
        }
        // Kahan summation keeps 10⁸-term averages at full precision
        let yk = term - comp;
        let t = sum + yk;
        comp = (t - sum) - yk;
        sum = t;
        x = step(x, &mut rng, burn_in + i)?;
    }
    Ok(S::lit(sum / n as f64))
}

/// `∫ log|f′| dμ` by quadrature against the attached invariant density.
pub fn mean_log_derivative<S: Real>(map: &PiecewiseMap<S>) -> Result<S> {
    let d = map.require_density()?;
    let mut breaks = map.breakpoints();
    breaks.extend_from_slice(map.critical_points());
    Ok(d.expectation(|x| map.derivative(x).abs().ln(), &breaks))
}

/// Result of [`contraction_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionCheck<S> {
    /// Fitted expansion `λ̂` in `diam 𝓟ₙ[xₙ] ≈ Ĉ λ̂⁻ⁿ`.
    pub lambda_hat: S,
    /// Fitted constant `Ĉ`.
    pub khat: S,
    pub r2: S,
    /// Set when the widths are not exponential in `n`.
    pub non_exponential: bool,
}

/// Log-linear fit of the backward cylinder diameters.
///
/// The fit is flagged as non-exponential when its `r²` is below 0.98, when
/// the rates fitted on the two halves of the range differ by more than 25%,
/// or when the diameters fail to shrink.
pub fn contraction_check<S: Real>(map: &PiecewiseMap<S>, orbit: &BackwardOrbit<S>) -> Result<ContractionCheck<S>> {
    if orbit.len() < 20 {
        return Err(Error::InsufficientData(format!("contraction check needs ≥ 20 backward steps, got {}", orbit.len())));
    }
    let widths = backward_cylinder_log_widths(map, orbit, orbit.len())?;
    let ns: Vec<S> = (1..=widths.len()).map(|n| S::lit(n as f64)).collect();
    let fit = fit_line(&ns, &widths).ok_or_else(|| Error::InsufficientData("degenerate fit".into()))?;
    let half = widths.len() / 2;
    let first = fit_line(&ns[..half], &widths[..half]);
    let second = fit_line(&ns[half..], &widths[half..]);
    let split = match (first, second) {
        (Some(a), Some(b)) => {
            let (ra, rb) = (-a.slope, -b.slope);
            (ra - rb).abs() > S::lit(0.25) * ra.abs().max(rb.abs())
        }
        _ => true,
    };
    let lambda_hat = (-fit.slope).exp();
    Ok(ContractionCheck {
        lambda_hat,
        khat: fit.intercept.exp(),
        r2: fit.r2,
        non_exponential: fit.r2 < S::lit(0.98) || split || lambda_hat <= S::one(),
    })
}
