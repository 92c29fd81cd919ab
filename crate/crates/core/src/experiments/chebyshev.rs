//! The Chebyshev parameter `a = 2`: `log|f′| − log 2` is an explicit coboundary.

use std::f64::consts::PI;

use super::config::ExperimentConfig;
use super::{Check, ExperimentReport};
use crate::cocycle::Cocycle;
use crate::dynamics::{mean_log_derivative, Builtin, PiecewiseMap};
use crate::error::{Error, Result};
use crate::livsic::{periodic_obstruction, reconstruct_coboundary_on_grid, OrbitSelection, ReconstructionOptions};
use crate::report::{fmt_real, Table};

#[derive(Clone, Debug, PartialEq)]
pub struct ChebyshevOptions {
    pub grid_size: usize,
    pub tol: f64,
    pub deviation_tol: f64,
    pub max_period: usize,
    pub anchor_length: usize,
    pub seed: u64,
}

impl Default for ChebyshevOptions {
    fn default() -> Self {
        Self::from(&ExperimentConfig::defaults(super::ExperimentKind::Chebyshev))
    }
}

impl From<&ExperimentConfig> for ChebyshevOptions {
    fn from(c: &ExperimentConfig) -> Self {
        Self {
            grid_size: c.grid_size,
            tol: c.tol,
            deviation_tol: c.deviation_tol,
            max_period: c.max_period,
            anchor_length: c.anchor_length,
            seed: c.seed,
        }
    }
}

/// `h(t) = −cos πt`, from the slope-2 tent on `[0, 1]` to `1 − 2x²` on `[−1, 1]`.
fn h(t: f64) -> f64 {
    -(PI * t).cos()
}

/// `ψ = log|h′∘h⁻¹| = log(π√(1 − x²))`, which satisfies `ψ∘f − ψ = log|f′| − log 2`.
pub(crate) fn explicit_psi(x: f64) -> f64 {
    (PI * (1.0 - x * x).sqrt()).ln()
}

/// `max |h(T t) − f(h t)|` over a uniform grid of `[0, 1]`.
pub fn conjugacy_defect(points: usize) -> Result<f64> {
    let tent = PiecewiseMap::<f64>::builtin(Builtin::Tent { slope: 2.0 })?;
    let quad = PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 2.0 })?;
    Ok((0..=points)
        .map(|k| {
            let t = k as f64 / points as f64;
            (h(tent.forward(t)) - quad.forward(h(t))).abs()
        })
        .fold(0.0, f64::max))
}

pub fn chebyshev_case(opts: &ChebyshevOptions) -> Result<ExperimentReport> {
    let defect = conjugacy_defect(4096)?;
    if !(defect < 1e-12) {
        return Err(Error::Experiment(format!("conjugacy h(t) = -cos(pi t) fails its self-check: max |h∘T - f∘h| = {defect:e}")));
    }
    let map = PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 2.0 })?;
    let phi = Cocycle::log_derivative(&map, 2f64.ln());

    let obstruction = periodic_obstruction(&phi, &map, opts.max_period, opts.tol, OrbitSelection::Interior)?;

    let n = opts.grid_size;
    let grid: Vec<f64> = (0..n).map(|k| -0.9 + 1.8 * k as f64 / (n - 1) as f64).collect();
    let reference = grid[n / 2];
    let rec = reconstruct_coboundary_on_grid(&phi, &map, reference, &grid, &ReconstructionOptions::default(), opts.anchor_length, opts.seed)?;
    let values: Vec<f64> = rec.values.iter().map(|v| v.as_real_vec().expect("scalar cocycle")[0]).collect();
    let offsets: Vec<f64> = grid.iter().zip(&values).map(|(&x, &v)| v - explicit_psi(x)).collect();
    let hi = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = offsets.iter().copied().fold(f64::INFINITY, f64::min);
    // best additive constant in the sup norm is the midrange
    let shift = 0.5 * (hi + lo);
    let deviation = 0.5 * (hi - lo);

    let mean = (mean_log_derivative(&map)? - 2f64.ln()).abs();

    let mut table = Table::new(["x", "psi_reconstructed", "psi_explicit_shifted", "deviation", "iterations", "tolerance"]);
    for (k, &x) in grid.iter().enumerate() {
        let exact = explicit_psi(x) + shift;
        table.push(vec![
            fmt_real(x),
            fmt_real(values[k]),
            fmt_real(exact),
            fmt_real((values[k] - exact).abs()),
            rec.iterations[k].to_string(),
            fmt_real(opts.deviation_tol),
        ]);
    }
    let checks = vec![
        Check::below("conjugacy_defect", defect, 1e-12),
        Check::below(format!("obstruction_max_residual_period_{}", opts.max_period), obstruction.max_residual, opts.tol),
        Check::below("sup_deviation_up_to_constant", deviation, opts.deviation_tol),
        Check::below("telescoping_excess", rec.telescoping_excess, 1e-9),
        Check::below("mean_of_phi_arcsine", mean, 1e-4),
    ];
    let metrics = vec![
        ("sup_deviation".into(), deviation),
        ("obstruction_max_residual".into(), obstruction.max_residual),
        ("conjugacy_defect".into(), defect),
    ];
    Ok(ExperimentReport { name: "chebyshev".into(), table, checks, metrics })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_psi_solves_the_equation() {
        // ψ(f x) − ψ(x) = log|f′(x)| − log 2 pointwise, away from ±1 and 0
        for k in 1..50 {
            let x = -0.95 + 1.9 * k as f64 / 50.0;
            if x.abs() < 1e-3 {
                continue;
            }
            let fx = 1.0 - 2.0 * x * x;
            let lhs = explicit_psi(fx) - explicit_psi(x);
            let rhs = (4.0 * x.abs()).ln() - 2f64.ln();
            assert!((lhs - rhs).abs() < 1e-12, "x = {x}");
        }
        assert!(conjugacy_defect(1000).unwrap() < 1e-12);
    }

    #[test]
    fn small_grid_case() {
        let opts = ChebyshevOptions { grid_size: 17, max_period: 5, ..ChebyshevOptions::default() };
        let r = chebyshev_case(&opts).unwrap();
        assert!(r.passed(), "{:?}", r.checks);
        assert_eq!(r.table.rows.len(), 17);
    }
}
