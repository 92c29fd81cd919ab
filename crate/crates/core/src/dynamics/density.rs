//! Invariant densities: closed-form where known, otherwise a histogram
//! estimated from a long orbit.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::map::{Interval, PiecewiseMap, RealFn};
use crate::error::{Error, Result};
use crate::quadrature::tanh_sinh;
use crate::scalar::Real;

/// Histogram density on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram<S> {
    support: Interval<S>,
    values: Vec<S>,
    cumulative: Vec<S>,
}

impl<S: Real> Histogram<S> {
    /// Builds a normalised histogram from raw bin counts.
    pub fn from_counts(support: Interval<S>, counts: &[u64]) -> Self {
        let total: u64 = counts.iter().sum();
        let width = support.width() / S::lit(counts.len() as f64);
        let values: Vec<S> = counts
            .iter()
            .map(|&c| if total == 0 { S::zero() } else { S::lit(c as f64 / total as f64) / width })
            .collect();
        let mut cumulative = Vec::with_capacity(values.len() + 1);
        let mut acc = S::zero();
        cumulative.push(acc);
        for &v in &values {
            acc += v * width;
            cumulative.push(acc);
        }
        Self { support, values, cumulative }
    }

    pub fn bins(&self) -> usize {
        self.values.len()
    }

    pub fn support(&self) -> Interval<S> {
        self.support
    }

    pub fn bin_width(&self) -> S {
        self.support.width() / S::lit(self.values.len() as f64)
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    fn bin_of(&self, x: S) -> usize {
        let t = ((x - self.support.lo) / self.bin_width()).floor();
        t.to_usize().unwrap_or(0).min(self.values.len() - 1)
    }

    pub fn pdf(&self, x: S) -> S {
        if !self.support.contains(x) {
            return S::zero();
        }
        self.values[self.bin_of(x)]
    }

    pub fn cdf(&self, x: S) -> S {
        if x <= self.support.lo {
            return S::zero();
        }
        if x >= self.support.hi {
            return self.cumulative[self.values.len()];
        }
        let i = self.bin_of(x);
        let left = self.support.lo + self.bin_width() * S::lit(i as f64);
        self.cumulative[i] + self.values[i] * (x - left)
    }

    pub fn quantile(&self, u: S) -> S {
        let total = self.cumulative[self.values.len()];
        let target = u * total;
        let i = self.cumulative.partition_point(|&c| c <= target).clamp(1, self.values.len()) - 1;
        let left = self.support.lo + self.bin_width() * S::lit(i as f64);
        if self.values[i] > S::zero() {
            (left + (target - self.cumulative[i]) / self.values[i]).min(left + self.bin_width())
        } else {
            left
        }
    }

    /// Writes `bin_left,bin_right,density` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_left", "bin_right", "density"])?;
        let width = self.bin_width();
        for (i, v) in self.values.iter().enumerate() {
            let left = self.support.lo + width * S::lit(i as f64);
            w.write_record([
                crate::report::fmt_real(left.as_f64()),
                crate::report::fmt_real((left + width).as_f64()),
                crate::report::fmt_real(v.as_f64()),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Clone)]
enum Kind<S> {
    Analytic { label: String, pdf: RealFn<S>, cdf: Option<RealFn<S>>, quantile: Option<RealFn<S>> },
    Histogram(Histogram<S>),
}

/// Invariant probability density of a map.
#[derive(Clone)]
pub struct Density<S> {
    support: Interval<S>,
    kind: Kind<S>,
}

impl<S: Real> fmt::Debug for Density<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Analytic { label, .. } => write!(f, "Density::Analytic({label})"),
            Kind::Histogram(h) => write!(f, "Density::Histogram({} bins)", h.bins()),
        }
    }
}

impl<S: Real> Density<S> {
    pub fn uniform(support: Interval<S>) -> Self {
        let w = support.width();
        let lo = support.lo;
        Self {
            support,
            kind: Kind::Analytic {
                label: "uniform".into(),
                pdf: Arc::new(move |x| if support.contains(x) { S::one() / w } else { S::zero() }),
                cdf: Some(Arc::new(move |x| (support.clamp(x) - lo) / w)),
                quantile: Some(Arc::new(move |u| lo + u * w)),
            },
        }
    }

    /// Arcsine law `1 / (π √(1 - x²))` on `[-1, 1]`, the invariant density of `1 - 2x²`.
    pub fn arcsine() -> Self {
        let support = Interval { lo: -S::one(), hi: S::one() };
        Self {
            support,
            kind: Kind::Analytic {
                label: "arcsine".into(),
                pdf: Arc::new(|x: S| {
                    if x.abs() < S::one() {
                        S::one() / (S::PI() * (S::one() - x * x).sqrt())
                    } else {
                        S::zero()
                    }
                }),
                cdf: Some(Arc::new(|x: S| (-x.max(-S::one()).min(S::one())).acos() / S::PI())),
                quantile: Some(Arc::new(|u: S| -(S::PI() * u).cos())),
            },
        }
    }

    pub fn analytic(
        label: impl Into<String>,
        support: Interval<S>,
        pdf: RealFn<S>,
        cdf: Option<RealFn<S>>,
        quantile: Option<RealFn<S>>,
    ) -> Self {
        Self { support, kind: Kind::Analytic { label: label.into(), pdf, cdf, quantile } }
    }

    pub fn from_histogram(h: Histogram<S>) -> Self {
        Self { support: h.support(), kind: Kind::Histogram(h) }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.kind, Kind::Analytic { .. })
    }

    pub fn histogram(&self) -> Option<&Histogram<S>> {
        match &self.kind {
            Kind::Histogram(h) => Some(h),
            _ => None,
        }
    }

    pub fn support(&self) -> Interval<S> {
        self.support
    }

    pub fn pdf(&self, x: S) -> S {
        match &self.kind {
            Kind::Analytic { pdf, .. } => pdf(x),
            Kind::Histogram(h) => h.pdf(x),
        }
    }

    /// `μ([a, b])`.
    pub fn mass(&self, a: S, b: S) -> S {
        let (a, b) = (self.support.clamp(a.min(b)), self.support.clamp(a.max(b)));
        if b <= a {
            return S::zero();
        }
        match &self.kind {
            Kind::Histogram(h) => h.cdf(b) - h.cdf(a),
            Kind::Analytic { pdf, cdf, .. } => {
                // tiny intervals: midpoint rule avoids cancellation in the cdf difference
                if b - a < S::lit(1e-7) * self.support.width() {
                    return pdf((a + b) * S::half()) * (b - a);
                }
                match cdf {
                    Some(c) => c(b) - c(a),
                    None => tanh_sinh(|x| pdf(x), a, b),
                }
            }
        }
    }

    /// Draws a point distributed according to the density.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<S> {
        let u = S::lit(rng.gen::<f64>());
        match &self.kind {
            Kind::Histogram(h) => Ok(h.quantile(u)),
            Kind::Analytic { quantile: Some(q), .. } => Ok(q(u)),
            Kind::Analytic { cdf: Some(c), .. } => {
                let (mut lo, mut hi) = (self.support.lo, self.support.hi);
                for _ in 0..80 {
                    let mid = (lo + hi) * S::half();
                    if c(mid) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok((lo + hi) * S::half())
            }
            Kind::Analytic { label, .. } => Err(Error::DensityUnavailable(format!("density `{label}` cannot be sampled"))),
        }
    }

    /// `∫ g dμ` by quadrature, splitting at the given points.
    ///
    /// With a closed-form quantile the integral is taken in the uniform
    /// variable, `∫₀¹ g(q(u)) du`, which removes density singularities.
    pub fn expectation<F: Fn(S) -> S>(&self, g: F, breaks: &[S]) -> S {
        match &self.kind {
            Kind::Histogram(h) => {
                let width = h.bin_width();
                let mut total = S::zero();
                for (i, &v) in h.values().iter().enumerate() {
                    if v == S::zero() {
                        continue;
                    }
                    let lo = h.support().lo + width * S::lit(i as f64);
                    total += v * crate::quadrature::tanh_sinh_split(&g, lo, lo + width, breaks);
                }
                total
            }
            Kind::Analytic { quantile: Some(q), cdf: Some(c), .. } => {
                let cuts: Vec<S> = breaks.iter().map(|&b| c(b)).collect();
                crate::quadrature::tanh_sinh_split(|u| g(q(u)), S::zero(), S::one(), &cuts)
            }
            Kind::Analytic { pdf, .. } => {
                crate::quadrature::tanh_sinh_split(|x| g(x) * pdf(x), self.support.lo, self.support.hi, breaks)
            }
        }
    }
}

/// Settings for [`estimate_density`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityEstimate {
    pub bins: usize,
    pub iterates: u64,
    pub burn_in: u64,
    pub seed: u64,
}

impl Default for DensityEstimate {
    fn default() -> Self {
        Self { bins: 4096, iterates: 10_000_000, burn_in: 1_000, seed: 0x5eed }
    }
}

/// Histogram of a long forward orbit started from a uniformly random point.
pub fn estimate_density<S: Real>(map: &PiecewiseMap<S>, cfg: DensityEstimate) -> Result<Histogram<S>> {
    if cfg.bins == 0 || cfg.iterates == 0 {
        return Err(Error::InsufficientData("density estimate needs bins and iterates".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let phase = map.phase();
    let mut x = phase.lerp(S::lit(rng.gen::<f64>()));
    let tol = S::tol(1e-9) * phase.width();
    for step in 0..cfg.burn_in {
        x = map.forward(x);
        if !phase.contains_with_tol(x, tol) || !x.is_finite() {
            return Err(Error::OrbitEscaped { step: step as usize, x: x.as_f64() });
        }
    }
    let mut counts = vec![0u64; cfg.bins];
    let scale = S::lit(cfg.bins as f64) / phase.width();
    for step in 0..cfg.iterates {
        x = map.forward(x);
        if !x.is_finite() || !phase.contains_with_tol(x, tol) {
            return Err(Error::OrbitEscaped { step: step as usize, x: x.as_f64() });
        }
        let i = ((x - phase.lo) * scale).floor().to_usize().unwrap_or(0).min(cfg.bins - 1);
        counts[i] += 1;
    }
    Ok(Histogram::from_counts(phase, &counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Builtin;

    #[test]
    fn arcsine_cdf_and_quantile_agree() {
        let d = Density::<f64>::arcsine();
        for &u in &[0.1, 0.3, 0.5, 0.9] {
            let x = match &d.kind {
                Kind::Analytic { quantile: Some(q), .. } => q(u),
                _ => unreachable!(),
            };
            assert!((d.mass(-1.0, x) - u).abs() < 1e-12);
        }
        assert!((d.mass(-1.0, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn histogram_of_quadratic_two_matches_arcsine() {
        let map = PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 2.0 }).unwrap();
        let h = estimate_density(&map, DensityEstimate { bins: 64, iterates: 2_000_000, burn_in: 1000, seed: 4 }).unwrap();
        let exact = Density::<f64>::arcsine();
        let w = h.bin_width();
        for i in 4..60 {
            let lo = -1.0 + w * i as f64;
            let expect = exact.mass(lo, lo + w) / w;
            assert!((h.values()[i] - expect).abs() / expect < 0.03, "bin {i}");
        }
    }

    #[test]
    fn arcsine_mean_log_derivative_is_log_two() {
        let d = Density::<f64>::arcsine();
        let v = d.expectation(|x| (4.0 * x.abs()).ln(), &[0.0]);
        assert!((v - 2f64.ln()).abs() < 1e-13, "{v}");
        assert!((d.expectation(|_| 1.0, &[]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn histogram_csv_has_header() {
        let h = Histogram::<f64>::from_counts(Interval { lo: 0.0, hi: 1.0 }, &[1, 3]);
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("bin_left,bin_right,density\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn histogram_quantile_inverts_cdf() {
        let h = Histogram::<f64>::from_counts(Interval { lo: 0.0, hi: 2.0 }, &[1, 0, 3, 4]);
        for &u in &[0.05, 0.2, 0.5, 0.95] {
            assert!((h.cdf(h.quantile(u)) - u).abs() < 1e-12);
        }
    }
}
