//! Backward-orbit reconstruction `Φ(y₀) = lim φₙ(yₙ) φₙ(xₙ)⁻¹`.

use rayon::prelude::*;

use crate::cocycle::Cocycle;
use crate::dynamics::{sample_backward_orbit_with, BackwardOrbit, PiecewiseMap};
use crate::error::{Error, Result};
use crate::group::{ad_norm, distance, GroupElement};
use crate::regression::fit_line;
use crate::report::{fmt_real, Table};
use crate::scalar::Real;

/// Stopping rule for [`reconstruct_transfer`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconstructionOptions<S> {
    /// Successive differences must fall below this.
    pub tol: S,
    /// Number of trailing differences in the geometric fit.
    pub window: usize,
    /// The fitted ratio over the window must be below this.
    pub max_ratio: S,
}

impl<S: Real> Default for ReconstructionOptions<S> {
    fn default() -> Self {
        Self { tol: S::tol(1e-8), window: 10, max_ratio: S::lit(0.95) }
    }
}

impl<S: Real> ReconstructionOptions<S> {
    pub fn with_tol(tol: S) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult<S> {
    pub value: GroupElement<S>,
    pub iterations_used: usize,
    /// `d(Ψₙ, Ψₙ₋₁)` for `n = 1..=iterations_used`.
    pub successive_diffs: Vec<S>,
    /// `‖Ad(φₙ₋₁(yₙ₋₁))‖ d(φ(yₙ), φ(xₙ))`, the bound on each difference.
    pub step_bounds: Vec<S>,
    /// Fitted geometric rate `κ̂` of the differences (0 when they vanish).
    pub certified_rate: S,
}

impl<S: Real> ReconstructionResult<S> {
    /// Largest `diffₙ - boundₙ`; non-positive when every step obeys the
    /// telescoping inequality.
    pub fn telescoping_excess(&self) -> S {
        self.successive_diffs.iter().zip(&self.step_bounds).map(|(&d, &b)| d - b).fold(S::neg_infinity(), S::max)
    }
}

/// Geometric ratio fitted to the positive entries of `diffs`.
fn fitted_ratio<S: Real>(diffs: &[S]) -> Option<S> {
    let (xs, ys): (Vec<S>, Vec<S>) =
        diffs.iter().enumerate().filter(|(_, &d)| d > S::zero()).map(|(i, &d)| (S::lit(i as f64), d.ln())).unzip();
    if xs.len() < 3 {
        return None;
    }
    fit_line(&xs, &ys).map(|f| f.slope.exp())
}

/// Follows `y₀` backwards through the anchor's branch word and returns the
/// Cauchy limit of `Ψₙ = φₙ(yₙ) φₙ(xₙ)⁻¹`.
///
/// `φₙ(yₙ) = φ(y₁) ⋯ φ(yₙ)` is accumulated by right multiplication. The run
/// stops once a difference is below `tol` and either the last `window`
/// differences fit a ratio below `max_ratio` or they are all exactly zero.
pub fn reconstruct_transfer<S: Real>(
    phi: &Cocycle<S>,
    map: &PiecewiseMap<S>,
    anchor: &BackwardOrbit<S>,
    y0: S,
    opts: &ReconstructionOptions<S>,
) -> Result<ReconstructionResult<S>> {
    let kind = phi.kind();
    let mut a = GroupElement::identity(kind);
    let mut b = GroupElement::identity(kind);
    let mut psi = GroupElement::identity(kind);
    let mut y = y0;
    let mut diffs = Vec::new();
    let mut bounds = Vec::new();
    let window = opts.window.max(3);
    for (n, &label) in anchor.labels.iter().enumerate() {
        let br = map.branch(label);
        let tol = S::tol(1e-9) * map.phase().width();
        if !br.image().contains_with_tol(y, tol) {
            return Err(Error::BranchWordMismatch(format!("y = {} at step {} is outside the image of branch {label}", y.as_f64(), n + 1)));
        }
        y = br.inverse(y);
        let x = anchor.points[n + 1];
        let (py, px) = (phi.eval(y), phi.eval(x));
        bounds.push(ad_norm(&a) * distance(&py, &px)?);
        a = a.mul(&py)?;
        b = b.mul(&px)?;
        let next = a.mul(&b.inverse())?;
        let d = distance(&next, &psi)?;
        psi = next;
        diffs.push(d);
        if !d.is_finite() {
            return Err(Error::NonGeometric(format!("non-finite difference at step {}", n + 1)));
        }
        if d < opts.tol {
            let tail = &diffs[diffs.len().saturating_sub(window)..];
            if tail.iter().all(|&t| t == S::zero()) {
                return Ok(ReconstructionResult {
                    value: psi,
                    iterations_used: n + 1,
                    successive_diffs: diffs,
                    step_bounds: bounds,
                    certified_rate: S::zero(),
                });
            }
            if tail.len() >= window {
                if let Some(r) = fitted_ratio(tail) {
                    if r < opts.max_ratio {
                        let half = diffs.len() / 2;
                        let rate = fitted_ratio(&diffs[half..]).unwrap_or(r);
                        return Ok(ReconstructionResult {
                            value: psi,
                            iterations_used: n + 1,
                            successive_diffs: diffs,
                            step_bounds: bounds,
                            certified_rate: rate,
                        });
                    }
                }
            }
        }
    }
    Err(Error::NonGeometric(format!("no geometric tail below {:e} within {} steps", opts.tol.as_f64(), anchor.labels.len())))
}

/// `ψ̂` on a grid, normalised by `ψ̂(reference) = e`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridReconstruction<S> {
    pub reference: S,
    pub points: Vec<S>,
    pub values: Vec<GroupElement<S>>,
    pub iterations: Vec<usize>,
    /// Largest telescoping excess over all grid points.
    pub telescoping_excess: S,
    /// Outcome of a periodic-orbit check run beforehand, if any.
    pub obstruction_consistent: Option<bool>,
}

impl<S: Real> GridReconstruction<S> {
    /// CSV with columns `x, psi_1, …, psi_k` (chart coordinates).
    pub fn to_table(&self) -> Result<Table> {
        let width = self.values.first().map(|v| v.log_coordinates()).transpose()?.map_or(0, |c| c.len());
        let mut header = vec!["x".to_string()];
        header.extend((1..=width).map(|i| format!("psi_{i}")));
        let mut t = Table::new(header);
        for (x, v) in self.points.iter().zip(&self.values) {
            let mut row = vec![fmt_real(x.as_f64())];
            row.extend(v.log_coordinates()?.iter().map(|c| fmt_real(c.as_f64())));
            t.push(row);
        }
        Ok(t)
    }
}

/// Anchor orbit from `reference` under the natural-extension law of the
/// map's density, or of Lebesgue measure when none is attached.
pub fn sample_anchor<S: Real>(map: &PiecewiseMap<S>, reference: S, length: usize, seed: u64) -> Result<BackwardOrbit<S>> {
    match map.density() {
        Some(d) => sample_backward_orbit_with(map, reference, length, seed, &|x| d.pdf(x)),
        None => sample_backward_orbit_with(map, reference, length, seed, &|_| S::one()),
    }
}

/// Reconstructs `ψ` at every grid point along one shared anchor orbit.
pub fn reconstruct_coboundary_on_grid<S: Real>(
    phi: &Cocycle<S>,
    map: &PiecewiseMap<S>,
    reference: S,
    grid: &[S],
    opts: &ReconstructionOptions<S>,
    anchor_length: usize,
    seed: u64,
) -> Result<GridReconstruction<S>> {
    let anchor = sample_anchor(map, reference, anchor_length, seed)?;
    reconstruct_on_grid_with_anchor(phi, map, &anchor, grid, opts)
}

/// As [`reconstruct_coboundary_on_grid`] with a caller-supplied anchor.
pub fn reconstruct_on_grid_with_anchor<S: Real>(
    phi: &Cocycle<S>,
    map: &PiecewiseMap<S>,
    anchor: &BackwardOrbit<S>,
    grid: &[S],
    opts: &ReconstructionOptions<S>,
) -> Result<GridReconstruction<S>> {
    let results: Vec<ReconstructionResult<S>> =
        grid.par_iter().map(|&y| reconstruct_transfer(phi, map, anchor, y, opts)).collect::<Result<_>>()?;
    let telescoping_excess = results.iter().map(|r| r.telescoping_excess()).fold(S::neg_infinity(), S::max);
    Ok(GridReconstruction {
        reference: anchor.x0(),
        points: grid.to_vec(),
        iterations: results.iter().map(|r| r.iterations_used).collect(),
        values: results.into_iter().map(|r| r.value).collect(),
        telescoping_excess,
        obstruction_consistent: None,
    })
}

/// `ψ̂(x)` by chart interpolation between the neighbouring grid values, or
/// `None` outside the grid hull. The grid must be sorted.
pub fn interpolate<S: Real>(grid: &GridReconstruction<S>, x: S) -> Result<Option<GroupElement<S>>> {
    let pts = &grid.points;
    if pts.is_empty() || x < pts[0] || x > pts[pts.len() - 1] {
        return Ok(None);
    }
    let i = pts.partition_point(|&p| p <= x);
    if i == 0 {
        return Ok(Some(grid.values[0].clone()));
    }
    let lo = i - 1;
    if pts[lo] == x || lo + 1 == pts.len() {
        return Ok(Some(grid.values[lo].clone()));
    }
    let t = (x - pts[lo]) / (pts[lo + 1] - pts[lo]);
    Ok(Some(grid.values[lo].interpolate(&grid.values[lo + 1], t)?))
}

/// Residual of the cohomological equation on the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residual<S> {
    /// `sup d(ψ̂(fx), φ(x) ψ̂(x))` over grid points whose image is interpolable.
    pub sup: S,
    /// Mean of the same distances.
    pub mean: S,
    /// Grid points skipped because `f(x)` left the grid hull.
    pub skipped: usize,
}

/// `sup_x d(ψ̂(fx), φ(x) ψ̂(x))` over the grid.
pub fn coboundary_residual<S: Real>(phi: &Cocycle<S>, psi: &GridReconstruction<S>, map: &PiecewiseMap<S>) -> Result<Residual<S>> {
    let mut sup = S::zero();
    let mut total = S::zero();
    let mut used = 0usize;
    let mut skipped = 0usize;
    for (&x, v) in psi.points.iter().zip(&psi.values) {
        let Some(lhs) = interpolate(psi, map.forward(x))? else {
            skipped += 1;
            continue;
        };
        let d = distance(&lhs, &phi.eval(x).mul(v)?)?;
        sup = sup.max(d);
        total += d;
        used += 1;
    }
    let mean = if used > 0 { total / S::lit(used as f64) } else { S::zero() };
    Ok(Residual { sup, mean, skipped })
}
