//! Ordinary least squares on a single regressor.

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit<S> {
    pub slope: S,
    pub intercept: S,
    pub r2: S,
    pub n: usize,
}

/// Fits `y ≈ intercept + slope·x`. Returns `None` with fewer than two
/// distinct abscissae.
pub fn fit_line<S: Real>(xs: &[S], ys: &[S]) -> Option<LineFit<S>> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let nn = S::lit(n as f64);
    let mx = xs[..n].iter().copied().sum::<S>() / nn;
    let my = ys[..n].iter().copied().sum::<S>() / nn;
    let mut sxx = S::zero();
    let mut sxy = S::zero();
    let mut syy = S::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx <= S::zero() {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy > S::zero() { (sxy * sxy) / (sxx * syy) } else { S::one() };
    Some(LineFit { slope, intercept, r2, n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [0.0f64, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate() {
        assert!(fit_line(&[1.0f64, 1.0], &[0.0, 2.0]).is_none());
        assert!(fit_line(&[1.0f64], &[0.0]).is_none());
    }
}
