use std::collections::BTreeMap;
use std::sync::Arc;

use super::density::Density;
use super::map::{Branch, Builtin, Interval, PiecewiseMap, RealFn};
use crate::error::{Error, Result};
use crate::scalar::Real;

fn f<S: Real>(g: impl Fn(S) -> S + Send + Sync + 'static) -> RealFn<S> {
    Arc::new(g)
}

pub(crate) fn build<S: Real>(which: Builtin) -> Result<PiecewiseMap<S>> {
    let map = match which {
        Builtin::Doubling => doubling(),
        Builtin::Tent { slope } => tent(slope, "tent")?,
        Builtin::ChebyshevTent => tent(2.0, "chebyshev_tent")?,
        Builtin::Quadratic { a } => quadratic(a)?,
        Builtin::MannevillePomeau { p } => manneville_pomeau(p)?,
    };
    map.validate(1000)?;
    Ok(map)
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn doubling<S: Real>() -> PiecewiseMap<S> {
    let half = S::half();
    let two = S::two();
    let left = Branch::new(
        Interval { lo: S::zero(), hi: half },
        f(move |x| two * x),
        f(move |_| two),
        f(move |y| y * half),
    );
    let right = Branch::new(
        Interval { lo: half, hi: S::one() },
        f(move |x| two * x - S::one()),
        f(move |_| two),
        f(move |y| (y + S::one()) * half),
    );
    PiecewiseMap::new("doubling", vec![left, right], vec![])
        .expect("doubling branches tile [0,1]")
        .as_circle()
        .with_density(Density::uniform(Interval { lo: S::zero(), hi: S::one() }))
}

fn tent<S: Real>(slope: f64, name: &str) -> Result<PiecewiseMap<S>> {
    if !(slope > 1.0 && slope <= 2.0) {
        return Err(Error::ParameterOutOfRange(format!("tent slope {slope} not in (1, 2]")));
    }
    let s = S::lit(slope);
    let half = S::half();
    let left = Branch::new(Interval { lo: S::zero(), hi: half }, f(move |x| s * x), f(move |_| s), f(move |y| y / s));
    let right = Branch::new(
        Interval { lo: half, hi: S::one() },
        f(move |x| s * (S::one() - x)),
        f(move |_| -s),
        f(move |y| S::one() - y / s),
    );
    let map = PiecewiseMap::new(name, vec![left, right], vec![half])?
        .with_params(params(&[("slope", slope)]))
        .with_critical_order(1);
    Ok(if slope == 2.0 { map.with_density(Density::uniform(Interval { lo: S::zero(), hi: S::one() })) } else { map })
}

fn quadratic<S: Real>(a: f64) -> Result<PiecewiseMap<S>> {
    if !(a > 0.0 && a <= 2.0) {
        return Err(Error::ParameterOutOfRange(format!("quadratic parameter a = {a} not in (0, 2]")));
    }
    let av = S::lit(a);
    let two = S::two();
    let fwd = move |x: S| S::one() - av * x * x;
    let der = move |x: S| -two * av * x;
    let left = Branch::new(
        Interval { lo: -S::one(), hi: S::zero() },
        f(fwd),
        f(der),
        f(move |y: S| -((S::one() - y).max(S::zero()) / av).sqrt()),
    );
    let right = Branch::new(
        Interval { lo: S::zero(), hi: S::one() },
        f(fwd),
        f(der),
        f(move |y: S| ((S::one() - y).max(S::zero()) / av).sqrt()),
    );
    let map = PiecewiseMap::new("quadratic", vec![left, right], vec![S::zero()])?
        .with_params(params(&[("a", a)]))
        .with_critical_order(2);
    Ok(if a == 2.0 { map.with_density(Density::arcsine()) } else { map })
}

/// Inverse of `x ↦ x + c x^{1+p}` on `[0, 1/2]`: bracketed bisection to a
/// relative width of 1e-12, then two Newton steps kept inside the bracket.
pub(crate) fn mp_left_inverse<S: Real>(y: S, c: S, p: S) -> S {
    if y <= S::zero() {
        return S::zero();
    }
    let g = |x: S| x + c * x.powf(S::one() + p) - y;
    // x(1 + c x^p) = y with x ≤ y gives y / (1 + c y^p) ≤ x ≤ y
    let mut lo = y / (S::one() + c * y.powf(p));
    let mut hi = y.min(S::half());
    if lo > hi {
        lo = hi;
    }
    let rel = S::tol(1e-12);
    for _ in 0..200 {
        if hi - lo <= rel * hi {
            break;
        }
        let mid = (lo + hi) * S::half();
        if g(mid) > S::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut x = (lo + hi) * S::half();
    for _ in 0..2 {
        let d = S::one() + c * (S::one() + p) * x.powf(p);
        let next = x - g(x) / d;
        if next >= lo && next <= hi {
            x = next;
        }
    }
    x
}

fn manneville_pomeau<S: Real>(p: f64) -> Result<PiecewiseMap<S>> {
    if !(p >= 0.0 && p.is_finite()) {
        return Err(Error::ParameterOutOfRange(format!("Manneville–Pomeau exponent p = {p} must be ≥ 0")));
    }
    let pv = S::lit(p);
    let c = S::lit(2f64.powf(p));
    let half = S::half();
    let two = S::two();
    let left = Branch::new(
        Interval { lo: S::zero(), hi: half },
        f(move |x: S| x + c * x.powf(S::one() + pv)),
        f(move |x: S| S::one() + c * (S::one() + pv) * x.powf(pv)),
        f(move |y: S| mp_left_inverse(y, c, pv)),
    );
    let right = Branch::new(
        Interval { lo: half, hi: S::one() },
        f(move |x| two * x - S::one()),
        f(move |_| two),
        f(move |y| (y + S::one()) * half),
    );
    Ok(PiecewiseMap::new("manneville_pomeau", vec![left, right], vec![])?.with_params(params(&[("p", p)])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mp_forward_value() {
        let m = PiecewiseMap::<f64>::builtin(Builtin::MannevillePomeau { p: 1.0 }).unwrap();
        assert!((m.forward(0.25) - 0.375).abs() < 1e-15);
        assert!((m.forward(0.75) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quadratic_forward_and_inverse() {
        let m = PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 2.0 }).unwrap();
        assert_eq!(m.forward(0.0), 1.0);
        let y = m.inverse(0, 0.5).unwrap();
        assert!((y + 0.5).abs() < 1e-15);
        assert!(m.density().is_some());
        assert!(PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 1.7 }).unwrap().density().is_none());
    }

    #[test]
    fn doubling_inverse_halves() {
        let m = PiecewiseMap::<f64>::builtin(Builtin::Doubling).unwrap();
        assert_eq!(m.inverse(0, 0.5).unwrap(), 0.25);
        assert_eq!(m.inverse(1, 0.5).unwrap(), 0.75);
    }

    #[test]
    fn parameter_ranges() {
        assert!(matches!(PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 2.5 }), Err(Error::ParameterOutOfRange(_))));
        assert!(matches!(PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 0.0 }), Err(Error::ParameterOutOfRange(_))));
        assert!(matches!(PiecewiseMap::<f64>::builtin(Builtin::Tent { slope: 1.0 }), Err(Error::ParameterOutOfRange(_))));
        assert!(matches!(
            PiecewiseMap::<f64>::builtin(Builtin::MannevillePomeau { p: -0.1 }),
            Err(Error::ParameterOutOfRange(_))
        ));
    }

    #[test]
    fn mp_inverse_has_full_relative_precision() {
        let c = 2f64.powf(0.5);
        for &y in &[1e-14, 3e-9, 1e-4, 0.3, 0.999] {
            let x = mp_left_inverse(y, c, 0.5);
            let back = x + c * x.powf(1.5);
            assert!(((back - y) / y).abs() < 1e-14, "y={y} back={back}");
        }
    }

    #[test]
    fn inverse_round_trip_on_grid() {
        for which in [
            Builtin::Doubling,
            Builtin::Tent { slope: 1.7 },
            Builtin::Quadratic { a: 1.3 },
            Builtin::MannevillePomeau { p: 0.5 },
            Builtin::MannevillePomeau { p: 0.0 },
        ] {
            let m = PiecewiseMap::<f64>::builtin(which).unwrap();
            for b in m.branches() {
                for k in 0..1000 {
                    let x = b.domain().lerp((k as f64 + 0.5) / 1000.0);
                    assert!((b.inverse(b.forward(x)) - x).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn spec_round_trip() {
        let m = PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 1.6 }).unwrap();
        let json = serde_json::to_string(&m.spec()).unwrap();
        assert!(json.contains("branchEndpoints"));
        let back: super::super::map::MapSpec = serde_json::from_str(&json).unwrap();
        let rebuilt = PiecewiseMap::<f64>::from_spec(&back).unwrap();
        assert_eq!(rebuilt.spec(), m.spec());
    }
}
