//! Cylinder sets `𝓟ₙ[x]` of the branch partition.
//!
//! Depth `n ≥ 1` means the first `n` branch labels of the forward orbit are
//! fixed; depth 0 is the branch domain itself, so `𝓟₀[x] = 𝓟₁[x]`.

use super::map::{Interval, PiecewiseMap};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Relative distance to a breakpoint below which an orbit counts as boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Widths below this fraction of the phase interval are tracked in log form.
const LOG_WIDTH_SWITCH: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct CylinderSet<S> {
    pub depth: usize,
    pub word: Vec<usize>,
    pub interval: Interval<S>,
    /// `log` of the width, accurate even when the endpoints have merged in
    /// floating point.
    pub log_width: S,
}

impl<S: Real> CylinderSet<S> {
    pub fn width(&self) -> S {
        self.log_width.exp()
    }

    pub fn contains(&self, x: S) -> bool {
        self.interval.contains(x)
    }
}

fn word_len(n: usize) -> usize {
    n.max(1)
}

/// Pulls `target` back through branch `b`, tracking the log width.
fn pull<S: Real>(map: &PiecewiseMap<S>, b: usize, target: &Interval<S>, log_width: S) -> Option<(Interval<S>, S)> {
    let br = map.branch(b);
    let clipped = target.intersect(&br.image())?;
    let next = br.pull_back(&clipped)?;
    let lw = if clipped.width() >= S::lit(LOG_WIDTH_SWITCH) * map.phase().width() {
        next.width().ln()
    } else {
        let shrink = if clipped == *target { S::zero() } else { (clipped.width() / target.width()).ln().min(S::zero()) };
        log_width + shrink - br.derivative(next.midpoint()).abs().ln()
    };
    Some((next, lw))
}

/// The cylinder with a given branch word (first letter = branch of the point itself).
pub fn cylinder_from_word<S: Real>(map: &PiecewiseMap<S>, word: &[usize]) -> Result<CylinderSet<S>> {
    let last = *word.last().ok_or_else(|| Error::EmptyCylinder(vec![]))?;
    if word.iter().any(|&b| b >= map.branch_count()) {
        return Err(Error::EmptyCylinder(word.to_vec()));
    }
    let mut j = map.branch(last).domain();
    let mut lw = j.width().ln();
    for &b in word.iter().rev().skip(1) {
        let (next, next_lw) = pull(map, b, &j, lw).ok_or_else(|| Error::EmptyCylinder(word.to_vec()))?;
        j = next;
        lw = next_lw;
    }
    Ok(CylinderSet { depth: word.len(), word: word.to_vec(), interval: j, log_width: lw })
}

/// Branch word of length `n` along the forward orbit of `x`; fails if the
/// orbit comes within round-off of a breakpoint.
pub fn itinerary<S: Real>(map: &PiecewiseMap<S>, x: S, n: usize) -> Result<Vec<usize>> {
    let tol = S::tol(BOUNDARY_TOL) * map.phase().width();
    let mut word = Vec::with_capacity(n);
    let mut y = x;
    for step in 0..n {
        if map.distance_to_breakpoint(y) < tol {
            return Err(Error::BoundaryOrbit { step, x: y.as_f64() });
        }
        let b = map.branch_index(y).ok_or(Error::OrbitEscaped { step, x: y.as_f64() })?;
        word.push(b);
        y = map.branch(b).forward(y);
    }
    Ok(word)
}

/// `𝓟ₙ[x]`.
pub fn cylinder<S: Real>(map: &PiecewiseMap<S>, x: S, n: usize) -> Result<CylinderSet<S>> {
    let word = itinerary(map, x, word_len(n))?;
    let mut c = cylinder_from_word(map, &word)?;
    c.depth = n;
    Ok(c)
}

/// All non-empty cylinders of depth `n`, ordered left to right.
pub fn enumerate_cylinders<S: Real>(map: &PiecewiseMap<S>, n: usize) -> Vec<CylinderSet<S>> {
    let mut level: Vec<CylinderSet<S>> = map
        .branches()
        .iter()
        .enumerate()
        .map(|(b, br)| CylinderSet { depth: 1, word: vec![b], interval: br.domain(), log_width: br.domain().width().ln() })
        .collect();
    for _ in 1..word_len(n) {
        let mut next = Vec::with_capacity(level.len() * map.branch_count());
        for c in &level {
            for b in 0..map.branch_count() {
                if let Some((interval, log_width)) = pull(map, b, &c.interval, c.log_width) {
                    let mut word = Vec::with_capacity(c.word.len() + 1);
                    word.push(b);
                    word.extend_from_slice(&c.word);
                    next.push(CylinderSet { depth: word.len(), word, interval, log_width });
                }
            }
        }
        level = next;
    }
    level.sort_by(|a, b| a.interval.lo.partial_cmp(&b.interval.lo).unwrap());
    for c in &mut level {
        c.depth = n;
    }
    level
}

/// Largest distance from `f^len(endpoint)` to the partition endpoints, for
/// the Markov check. Uses the branch word so endpoints stay on their branch.
pub fn markov_defect<S: Real>(map: &PiecewiseMap<S>, cyl: &CylinderSet<S>) -> S {
    let ends = map.partition_endpoints();
    let mut worst = S::zero();
    for x0 in [cyl.interval.lo, cyl.interval.hi] {
        let mut x = x0;
        for &b in &cyl.word {
            x = map.branch(b).forward(map.branch(b).domain().clamp(x));
        }
        let d = ends.iter().map(|&e| (x - e).abs()).fold(S::infinity(), S::min);
        worst = worst.max(d);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Builtin;

    fn doubling() -> PiecewiseMap<f64> {
        PiecewiseMap::builtin(Builtin::Doubling).unwrap()
    }

    #[test]
    fn doubling_depth_two() {
        let c = cylinder(&doubling(), 0.3, 2).unwrap();
        assert_eq!(c.word, vec![0, 1]);
        assert_eq!(c.interval, Interval { lo: 0.25, hi: 0.5 });
    }

    #[test]
    fn depth_zero_is_branch_domain() {
        let m = PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 1.8 }).unwrap();
        let c = cylinder(&m, 0.4, 0).unwrap();
        assert_eq!(c.interval, m.branch(1).domain());
    }

    #[test]
    fn doubling_width_halves() {
        let c = cylinder(&doubling(), 0.3, 10).unwrap();
        assert!((c.interval.width() - 2f64.powi(-10)).abs() < 1e-16);
        let deep = cylinder(&doubling(), 0.3, 40).unwrap();
        assert!((deep.log_width + 40.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn boundary_orbit_is_rejected() {
        assert!(matches!(cylinder(&doubling(), 0.25, 3), Err(Error::BoundaryOrbit { step: 1, .. })));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_cylinders(&doubling(), 5).len(), 32);
        let m = PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 1.5 }).unwrap();
        let cs = enumerate_cylinders(&m, 4);
        let total: f64 = cs.iter().map(|c| c.interval.width()).sum();
        assert!((total - 2.0).abs() < 1e-12);
        assert!(cs.len() < 16);
    }

    #[test]
    fn full_branch_cylinders_are_markov() {
        let m = PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 2.0 }).unwrap();
        for c in enumerate_cylinders(&m, 8) {
            assert!(markov_defect(&m, &c) < 1e-9);
        }
    }
}
