//! Preimage diameters of `J = [1/2, 1]` under the Manneville–Pomeau left branch.

use super::config::ExperimentConfig;
use super::{Check, ExperimentReport};
use crate::dynamics::{Builtin, PiecewiseMap};
use crate::error::{Error, Result};
use crate::livsic::{dyadic_block_test, mp_regularity_gate};
use crate::regression::fit_line;
use crate::report::{fmt_real, Table};

/// Relative tolerance on the fitted exponent.
pub const EXPONENT_TOL: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct MpScalingOptions {
    pub p: f64,
    pub alphas: Vec<f64>,
    pub depth: usize,
}

impl From<&ExperimentConfig> for MpScalingOptions {
    fn from(c: &ExperimentConfig) -> Self {
        Self { p: c.p, alphas: c.alphas.clone(), depth: c.depth }
    }
}

impl MpScalingOptions {
    /// `α = p/(1+p) ± 0.1` at depth `10⁴`.
    pub fn new(p: f64) -> Self {
        let t = p / (1.0 + p);
        Self { p, alphas: vec![t + 0.1, t - 0.1], depth: 10_000 }
    }
}

/// `diam(T⁻ⁿJ)` for `n = 1..=depth`, where `T⁻ⁿJ = [xₙ, xₙ₋₁]` with `x₀ = 1/2`
/// and `xₙ` the left-branch preimage of `xₙ₋₁`.
///
/// The width is taken as `T(xₙ) − xₙ`, which keeps full relative precision
/// when `xₙ` is tiny.
pub fn mp_preimage_diameters(p: f64, depth: usize) -> Result<Vec<f64>> {
    if !(p > 0.0) {
        return Err(Error::ParameterOutOfRange(format!("p = {p} must be positive")));
    }
    let map = PiecewiseMap::<f64>::builtin(Builtin::MannevillePomeau { p })?;
    let mut x = 0.5;
    let mut out = Vec::with_capacity(depth);
    for _ in 0..depth {
        x = map.inverse(0, x)?;
        out.push(map.branch(0).forward(x) - x);
    }
    Ok(out)
}

pub fn mp_scaling_experiment(opts: &MpScalingOptions) -> Result<ExperimentReport> {
    if opts.depth < 100 {
        return Err(Error::ParameterOutOfRange(format!("depth {} too small for a tail fit", opts.depth)));
    }
    let diam = mp_preimage_diameters(opts.p, opts.depth)?;
    let lo = opts.depth / 10;
    let xs: Vec<f64> = (lo..=opts.depth).map(|n| (n as f64).ln()).collect();
    let ys: Vec<f64> = (lo..=opts.depth).map(|n| diam[n - 1].ln()).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| Error::InsufficientData("degenerate diameter fit".into()))?;
    let expected = -(1.0 + opts.p) / opts.p;
    let rel = ((fit.slope - expected) / expected).abs();

    let threshold = opts.p / (1.0 + opts.p);
    let mut table = Table::new(["n", "diameter"]);
    let mut n = 1usize;
    while n <= opts.depth {
        table.push(vec![n.to_string(), fmt_real(diam[n - 1])]);
        n = if n < 16 { n + 1 } else { n + n / 16 };
    }
    let mut checks = vec![Check::below(format!("fitted_exponent_rel_error_expected_{expected}"), rel, EXPONENT_TOL)];
    let mut verdicts = Vec::new();
    for &alpha in &opts.alphas {
        let gate = mp_regularity_gate(opts.p, alpha)?;
        let terms: Vec<f64> = diam.iter().map(|d| d.powf(alpha)).collect();
        let blocks = dyadic_block_test(&terms);
        verdicts.push((alpha, blocks.cauchy));
        let name = format!("holder_sum_alpha={alpha:.4}_{}", if gate { "cauchy" } else { "non_cauchy" });
        checks.push(if gate { Check::below(name, blocks.ratio, 0.95) } else { Check::above(name, blocks.ratio, 0.95) });
    }
    let above = verdicts.iter().filter(|(a, _)| *a > threshold).all(|(_, c)| *c);
    let below = verdicts.iter().filter(|(a, _)| *a <= threshold).all(|(_, c)| !*c);
    let both_sides = verdicts.iter().any(|(a, _)| *a > threshold) && verdicts.iter().any(|(a, _)| *a <= threshold);
    checks.push(Check::holds(format!("cauchy_flip_at_alpha={threshold:.4}"), above && below && both_sides));
    let metrics = vec![("fitted_exponent".into(), fit.slope), ("expected_exponent".into(), expected), ("fit_r2".into(), fit.r2)];
    Ok(ExperimentReport { name: "mp_scaling".into(), table, checks, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diameters_match_closed_form_recursion() {
        // oracle: xₙ₋₁ = xₙ + 2ᵖxₙ^{1+p}, so consecutive points differ by the diameter
        let p = 1.0;
        let d = mp_preimage_diameters(p, 50).unwrap();
        let mut x = 0.5f64;
        let mut xs = vec![x];
        for _ in 0..50 {
            // quadratic x + 2x² = y solved directly
            x = (-1.0 + (1.0 + 8.0 * x).sqrt()) / 4.0;
            xs.push(x);
        }
        for n in 1..=50 {
            assert!((d[n - 1] - (xs[n - 1] - xs[n])).abs() < 1e-12 * xs[n - 1].max(1e-3));
        }
    }

    #[test]
    fn small_depth_exponent() {
        let r = mp_scaling_experiment(&MpScalingOptions { depth: 2000, ..MpScalingOptions::new(1.0) }).unwrap();
        assert!(r.checks[0].passed, "{:?}", r.checks[0]);
        assert!(mp_preimage_diameters(0.0, 10).is_err());
    }
}
