//! Periodic orbits by bisection inside branch-word cylinders.

use super::cylinder::{enumerate_cylinders, CylinderSet};
use super::map::PiecewiseMap;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest period accepted by [`periodic_points`].
pub const MAX_PERIOD: usize = 14;

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicOrbit<S> {
    pub period: usize,
    /// Orbit points starting from the representative, in forward order.
    pub points: Vec<S>,
    /// Branch word of the representative.
    pub word: Vec<usize>,
    /// `Σ log|f′|` over the orbit.
    pub log_multiplier: S,
    /// Some orbit point sits on a partition endpoint.
    pub on_boundary: bool,
}

impl<S: Real> PeriodicOrbit<S> {
    pub fn representative(&self) -> S {
        self.points[0]
    }

    pub fn multiplier(&self) -> S {
        self.log_multiplier.exp()
    }
}

fn along<S: Real>(map: &PiecewiseMap<S>, word: &[usize], x: S) -> S {
    let mut y = x;
    for &b in word {
        let br = map.branch(b);
        y = br.forward(br.domain().clamp(y));
    }
    y
}

/// Smallest rotation period of the word.
fn word_period(word: &[usize]) -> usize {
    let n = word.len();
    (1..=n).find(|&d| n % d == 0 && (0..n).all(|i| word[i] == word[(i + d) % n])).unwrap_or(n)
}

fn is_min_rotation(word: &[usize]) -> bool {
    let n = word.len();
    (1..n).all(|r| {
        let rotated = (0..n).map(|i| word[(i + r) % n]);
        word.iter().copied().cmp(rotated) != std::cmp::Ordering::Greater
    })
}

fn solve_in_cylinder<S: Real>(map: &PiecewiseMap<S>, cyl: &CylinderSet<S>) -> Option<S> {
    let g = |x: S| along(map, &cyl.word, x) - x;
    let (mut lo, mut hi) = (cyl.interval.lo, cyl.interval.hi);
    let (glo, ghi) = (g(lo), g(hi));
    if glo == S::zero() {
        return Some(lo);
    }
    if ghi == S::zero() {
        return Some(hi);
    }
    if (glo > S::zero()) == (ghi > S::zero()) {
        return None;
    }
    let lo_positive = glo > S::zero();
    for _ in 0..200 {
        let mid = (lo + hi) * S::half();
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == S::zero() {
            return Some(mid);
        }
        if (gm > S::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (gl, gh) = (g(lo).abs(), g(hi).abs());
    Some(if gl <= gh { lo } else { hi })
}

/// Orbits of prime period `n`, one per cyclic class of branch words.
///
/// For circle maps the two ends of the phase interval are the same point, so
/// an orbit through the right end is reported once, at the left end.
pub fn periodic_points<S: Real>(map: &PiecewiseMap<S>, n: usize) -> Result<Vec<PeriodicOrbit<S>>> {
    if n == 0 || n > MAX_PERIOD {
        return Err(Error::ParameterOutOfRange(format!("period {n} not in 1..={MAX_PERIOD}")));
    }
    let ends = map.partition_endpoints();
    let tol = S::tol(1e-12) * map.phase().width();
    let phase = map.phase();
    let mut out: Vec<PeriodicOrbit<S>> = Vec::new();
    for cyl in enumerate_cylinders(map, n) {
        if word_period(&cyl.word) != n || !is_min_rotation(&cyl.word) {
            continue;
        }
        let Some(x) = solve_in_cylinder(map, &cyl) else { continue };
        let mut points = Vec::with_capacity(n);
        let mut log_multiplier = S::zero();
        let mut y = x;
        for &b in &cyl.word {
            let br = map.branch(b);
            let yc = br.domain().clamp(y);
            points.push(yc);
            log_multiplier += br.derivative(yc).abs().ln();
            y = br.forward(yc);
        }
        let on_boundary = points.iter().any(|&p| ends.iter().any(|&e| (p - e).abs() <= tol));
        let canon = |p: S| if map.is_circle() && (p - phase.hi).abs() <= tol { phase.lo } else { p };
        let duplicate = out.iter().any(|o| {
            o.points.len() == points.len()
                && points.iter().all(|&p| o.points.iter().any(|&q| (canon(p) - canon(q)).abs() <= tol * S::lit(1e3)))
        });
        if duplicate {
            continue;
        }
        let points = points.into_iter().map(canon).collect();
        out.push(PeriodicOrbit { period: n, points, word: cyl.word.clone(), log_multiplier, on_boundary });
    }
    Ok(out)
}

/// All orbits with prime period `1..=max_period`.
pub fn periodic_orbits_up_to<S: Real>(map: &PiecewiseMap<S>, max_period: usize) -> Result<Vec<PeriodicOrbit<S>>> {
    let mut all = Vec::new();
    for n in 1..=max_period {
        all.extend(periodic_points(map, n)?);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Builtin;

    #[test]
    fn doubling_fixed_point() {
        let m = PiecewiseMap::<f64>::builtin(Builtin::Doubling).unwrap();
        let fixed = periodic_points(&m, 1).unwrap();
        assert_eq!(fixed.len(), 1);
        assert_eq!(fixed[0].representative(), 0.0);
        assert!((fixed[0].multiplier() - 2.0).abs() < 1e-14);
        assert!(fixed[0].on_boundary);
        // 2ⁿ − (orbits of smaller period) points, n per orbit
        assert_eq!(periodic_points(&m, 4).unwrap().len(), 3);
    }

    #[test]
    fn quadratic_fixed_point_formula() {
        for a in [1.2, 1.6, 2.0] {
            let m = PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a }).unwrap();
            let p = (-1.0 + (1.0 + 4.0 * a).sqrt()) / (2.0 * a);
            let fixed = periodic_points(&m, 1).unwrap();
            assert!(fixed.iter().any(|o| (o.representative() - p).abs() < 1e-12), "a={a}");
        }
    }

    #[test]
    fn quadratic_period_two_multiplier() {
        for a in [1.2, 1.6, 2.0] {
            let m = PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a }).unwrap();
            let two = periodic_points(&m, 2).unwrap();
            assert_eq!(two.len(), 1, "a={a}");
            assert!((two[0].multiplier() - 4.0 * (1.0 - a).abs()).abs() < 1e-9);
        }
    }

    #[test]
    fn chebyshev_counts() {
        // 1 − 2x² is conjugate to the full tent map: 2ⁿ points of period dividing n
        let m = PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 2.0 }).unwrap();
        let count: usize = (1..=6).filter(|d| 6 % d == 0).map(|d| periodic_points(&m, d).unwrap().len() * d).sum();
        assert_eq!(count, 64);
    }

    #[test]
    fn period_bounds() {
        let m = PiecewiseMap::<f64>::builtin(Builtin::Doubling).unwrap();
        assert!(periodic_points(&m, 0).is_err());
        assert!(periodic_points(&m, 15).is_err());
    }
}
