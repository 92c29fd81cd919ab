//! Periodic-orbit obstruction: a coboundary has trivial products over every
//! periodic orbit.

use crate::cocycle::{cocycle_product, Cocycle};
use crate::dynamics::{periodic_points, PiecewiseMap};
use crate::error::{Error, Result};
use crate::group::{distance, GroupElement};
use crate::report::{fmt_real, Table};
use crate::scalar::Real;

/// Largest period accepted by [`periodic_obstruction`].
pub const MAX_OBSTRUCTION_PERIOD: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct ObstructionRow<S> {
    pub period: usize,
    pub representative: S,
    /// `d(φₙ(p), e)`.
    pub residual: S,
    pub on_boundary: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    CoboundaryConsistent,
    Obstructed,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::CoboundaryConsistent => "coboundary-consistent",
            Verdict::Obstructed => "obstructed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObstructionReport<S> {
    /// Orbits that enter the verdict.
    pub rows: Vec<ObstructionRow<S>>,
    /// Orbits through partition endpoints, reported but not judged.
    pub boundary_rows: Vec<ObstructionRow<S>>,
    pub max_residual: S,
    pub tolerance: S,
    pub verdict: Verdict,
}

impl<S: Real> ObstructionReport<S> {
    /// Largest residual among orbits of period at most `n`.
    pub fn max_residual_up_to(&self, n: usize) -> S {
        self.rows.iter().filter(|r| r.period <= n).map(|r| r.residual).fold(S::zero(), S::max)
    }

    /// Columns `period, representative, residual, on_boundary, tolerance`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["period", "representative", "residual", "on_boundary", "tolerance"]);
        for r in self.rows.iter().chain(&self.boundary_rows) {
            t.push(vec![
                r.period.to_string(),
                fmt_real(r.representative.as_f64()),
                fmt_real(r.residual.as_f64()),
                r.on_boundary.to_string(),
                fmt_real(self.tolerance.as_f64()),
            ]);
        }
        t
    }
}

/// Which periodic orbits are judged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OrbitSelection {
    /// Orbits avoiding the partition endpoints.
    #[default]
    Interior,
    All,
}

/// Products of `φ` over all orbits of period `1..=max_period`.
pub fn periodic_obstruction<S: Real>(
    phi: &Cocycle<S>,
    map: &PiecewiseMap<S>,
    max_period: usize,
    tol: S,
    selection: OrbitSelection,
) -> Result<ObstructionReport<S>> {
    if max_period == 0 || max_period > MAX_OBSTRUCTION_PERIOD {
        return Err(Error::ParameterOutOfRange(format!("max period {max_period} not in 1..={MAX_OBSTRUCTION_PERIOD}")));
    }
    let e = GroupElement::identity(phi.kind());
    let mut rows = Vec::new();
    let mut boundary_rows = Vec::new();
    for n in 1..=max_period {
        for orbit in periodic_points(map, n)? {
            let product = cocycle_product(phi, map, &orbit.points)?;
            let row = ObstructionRow {
                period: n,
                representative: orbit.representative(),
                residual: distance(&product, &e)?,
                on_boundary: orbit.on_boundary,
            };
            if orbit.on_boundary && selection == OrbitSelection::Interior {
                boundary_rows.push(row);
            } else {
                rows.push(row);
            }
        }
    }
    let max_residual = rows.iter().map(|r| r.residual).fold(S::zero(), S::max);
    let verdict = if max_residual < tol { Verdict::CoboundaryConsistent } else { Verdict::Obstructed };
    Ok(ObstructionReport { rows, boundary_rows, max_residual, tolerance: tol, verdict })
}
