//! Group-valued cocycles over interval maps, their products and the
//! reductions of the transfer and twisted equations to coboundary form.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::PiecewiseMap;
use crate::error::{Error, Result};
use crate::group::{ad_norm, GroupElement, GroupKind, TwistSpec};
use crate::linalg::CMatrix;
use crate::scalar::Real;

/// Per-step orbit consistency tolerance for [`cocycle_product`].
pub const ORBIT_CONSISTENCY_TOL: f64 = 1e-9;

pub type CocycleFn<S> = Arc<dyn Fn(S) -> GroupElement<S> + Send + Sync>;

/// Radii `εₙ` of the shrinking balls around a singular point.
#[derive(Clone)]
pub enum EpsSequence<S> {
    /// `n ↦ -log εₙ` in closed form, for real `n ≥ 1`.
    ClosedForm { label: String, neg_log: Arc<dyn Fn(S) -> S + Send + Sync> },
    /// `ε₁, ε₂, …`.
    Samples(Vec<S>),
}

impl<S: fmt::Debug> fmt::Debug for EpsSequence<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsSequence::ClosedForm { label, .. } => write!(f, "EpsSequence({label})"),
            EpsSequence::Samples(v) => write!(f, "EpsSequence({} samples)", v.len()),
        }
    }
}

impl<S: Real> EpsSequence<S> {
    /// `εₙ = λ^{-βn}`.
    pub fn geometric(lambda: S, beta: S) -> Self {
        let rate = beta * lambda.ln();
        Self::ClosedForm { label: format!("lambda^(-{beta} n), lambda = {lambda}"), neg_log: Arc::new(move |n| rate * n) }
    }

    /// `εₙ = n^{-k}`.
    pub fn power(k: S) -> Self {
        Self::ClosedForm { label: format!("n^(-{k})"), neg_log: Arc::new(move |n: S| k * n.ln()) }
    }

    /// `εₙ = 1 / log(n + 1)`, shifted so that every term is finite.
    pub fn inverse_log() -> Self {
        Self::ClosedForm { label: "1/log(n+1)".into(), neg_log: Arc::new(|n: S| (n + S::one()).ln().ln()) }
    }

    pub fn samples(values: Vec<S>) -> Result<Self> {
        if values.iter().any(|&e| !(e > S::zero())) {
            return Err(Error::InsufficientData("epsilon sequence must be positive".into()));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InsufficientData("epsilon sequence must be non-increasing".into()));
        }
        Ok(Self::Samples(values))
    }

    /// `-log εₙ` for `n ≥ 1`, or `None` past the end of a sample list.
    pub fn neg_log(&self, n: usize) -> Option<S> {
        match self {
            EpsSequence::ClosedForm { neg_log, .. } => Some(neg_log(S::lit(n as f64))),
            EpsSequence::Samples(v) => v.get(n.checked_sub(1)?).map(|e| -e.ln()),
        }
    }

    pub fn eps(&self, n: usize) -> Option<S> {
        self.neg_log(n).map(|v| (-v).exp())
    }

    pub fn is_closed_form(&self) -> bool {
        matches!(self, EpsSequence::ClosedForm { .. })
    }
}

/// How the cocycle fails to be Hölder.
#[derive(Clone, Debug)]
pub enum Singularity<S> {
    None,
    BoundedDiscontinuity { points: Vec<S> },
    Log { points: Vec<S>, eps: EpsSequence<S> },
    Pole { points: Vec<S>, order: S, eps: EpsSequence<S> },
}

/// `φ: M → G` with its regularity data.
#[derive(Clone)]
pub struct Cocycle<S> {
    eval: CocycleFn<S>,
    kind: GroupKind,
    pub holder_exponent: S,
    pub holder_coefficient: S,
    pub singularity: Singularity<S>,
    pub label: String,
}

impl<S: Real> fmt::Debug for Cocycle<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Cocycle")
            .field("label", &self.label)
            .field("kind", &self.kind)
            .field("holder_exponent", &self.holder_exponent)
            .field("holder_coefficient", &self.holder_coefficient)
            .field("singularity", &self.singularity)
            .finish()
    }
}

impl<S: Real> Cocycle<S> {
    pub fn new(label: impl Into<String>, kind: GroupKind, eval: CocycleFn<S>) -> Self {
        Self {
            eval,
            kind,
            holder_exponent: S::one(),
            holder_coefficient: S::infinity(),
            singularity: Singularity::None,
            label: label.into(),
        }
    }

    pub fn from_fn(label: impl Into<String>, kind: GroupKind, f: impl Fn(S) -> GroupElement<S> + Send + Sync + 'static) -> Self {
        Self::new(label, kind, Arc::new(f))
    }

    /// Real-valued cocycle `x ↦ f(x)` in `ℝ¹`.
    pub fn scalar(label: impl Into<String>, f: impl Fn(S) -> S + Send + Sync + 'static) -> Self {
        Self::from_fn(label, GroupKind::RealVec(1), move |x| GroupElement::scalar(f(x)))
    }

    pub fn constant(g: GroupElement<S>) -> Self {
        let kind = g.kind();
        Self::from_fn("constant", kind, move |_| g.clone()).with_holder(S::one(), S::zero())
    }

    pub fn identity(kind: GroupKind) -> Self {
        Self::constant(GroupElement::identity(kind)).labelled("identity")
    }

    /// `x ↦ log|f′(x)| - shift`.
    pub fn log_derivative(map: &PiecewiseMap<S>, shift: S) -> Self {
        let m = map.clone();
        let c = Self::scalar(format!("log|f'| - {shift}"), move |x| m.derivative(x).abs().ln() - shift);
        if map.critical_points().is_empty() {
            c
        } else {
            c.with_holder(S::one(), S::infinity())
        }
    }

    /// Coboundary `x ↦ ψ(fx) ψ(x)⁻¹` of a transfer function.
    pub fn coboundary_of(map: &PiecewiseMap<S>, kind: GroupKind, psi: impl Fn(S) -> GroupElement<S> + Send + Sync + 'static) -> Self {
        let m = map.clone();
        Self::from_fn("coboundary", kind, move |x| {
            psi(m.forward(x)).mul(&psi(x).inverse()).expect("transfer function stays in one group")
        })
    }

    /// Additive coboundary `u∘f - u` in `ℝ¹`.
    pub fn scalar_coboundary(map: &PiecewiseMap<S>, u: impl Fn(S) -> S + Send + Sync + 'static) -> Self {
        let m = map.clone();
        Self::scalar("u(fx) - u(x)", move |x| u(m.forward(x)) - u(x))
    }

    pub fn with_holder(mut self, exponent: S, coefficient: S) -> Self {
        self.holder_exponent = exponent;
        self.holder_coefficient = coefficient;
        self
    }

    pub fn with_singularity(mut self, s: Singularity<S>) -> Self {
        self.singularity = s;
        self
    }

    pub fn labelled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    #[inline]
    pub fn eval(&self, x: S) -> GroupElement<S> {
        (self.eval)(x)
    }

    /// Largest `d(φ(x), φ(y)) / (C |x - y|^α)` over the given pairs; at most
    /// `1 + slack` when the stated Hölder data hold.
    pub fn holder_ratio(&self, pairs: &[(S, S)]) -> Result<S> {
        let mut worst = S::zero();
        for &(x, y) in pairs {
            let r = (x - y).abs();
            if r <= S::zero() {
                continue;
            }
            let d = crate::group::distance(&self.eval(x), &self.eval(y))?;
            worst = worst.max(d / (self.holder_coefficient * r.powf(self.holder_exponent)));
        }
        Ok(worst)
    }
}

fn orbit_step_defect<S: Real>(map: &PiecewiseMap<S>, x: S, next: S) -> S {
    let d = (map.forward(x) - next).abs();
    if map.is_circle() {
        d.min((map.phase().width() - d).abs())
    } else {
        d
    }
}

/// `φₙ(x) = φ(f^{n-1}x) ⋯ φ(fx) φ(x)` for `orbit = [x, fx, …, f^{n-1}x]`.
pub fn cocycle_product<S: Real>(phi: &Cocycle<S>, map: &PiecewiseMap<S>, orbit: &[S]) -> Result<GroupElement<S>> {
    let tol = S::tol(ORBIT_CONSISTENCY_TOL);
    for (i, w) in orbit.windows(2).enumerate() {
        let defect = orbit_step_defect(map, w[0], w[1]);
        if !(defect <= tol) {
            return Err(Error::OrbitInconsistent { index: i + 1, defect: defect.as_f64() });
        }
    }
    let mut acc = GroupElement::identity(phi.kind());
    for &x in orbit {
        acc = phi.eval(x).mul(&acc)?;
    }
    Ok(acc)
}

/// `φₙ(x)` along the computed forward orbit.
pub fn forward_product<S: Real>(phi: &Cocycle<S>, map: &PiecewiseMap<S>, x: S, n: usize) -> Result<GroupElement<S>> {
    let mut acc = GroupElement::identity(phi.kind());
    let mut y = x;
    for _ in 0..n {
        acc = phi.eval(y).mul(&acc)?;
        y = map.forward(y);
    }
    Ok(acc)
}

/// Empirical `μ_u` with its convergence sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthRate<S> {
    /// `max_x ‖Ad(φ_N(x))‖^{1/N}` over the sample.
    pub estimate: S,
    /// The same maximum for `n = 1..=N`.
    pub sequence: Vec<S>,
}

/// Sampled estimate of `μ_u = lim (sup_x ‖Ad(φₙ(x))‖)^{1/n}`.
pub fn growth_rate_mu_u<S: Real>(
    phi: &Cocycle<S>,
    map: &PiecewiseMap<S>,
    sample_count: usize,
    n: usize,
    seed: u64,
) -> Result<GrowthRate<S>> {
    if n < 8 || sample_count < 100 {
        return Err(Error::InsufficientData(format!("growth rate needs N ≥ 8 and ≥ 100 samples (got N = {n}, {sample_count})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<S> = (0..sample_count)
        .map(|_| match map.density() {
            Some(d) => d.sample(&mut rng),
            None => Ok(map.phase().lerp(S::lit(rng.gen::<f64>()))),
        })
        .collect::<Result<_>>()?;
    let per_sample: Vec<Vec<S>> = starts
        .par_iter()
        .map(|&x0| -> Result<Vec<S>> {
            let mut acc = GroupElement::identity(phi.kind());
            let mut x = x0;
            let mut out = Vec::with_capacity(n);
            for k in 1..=n {
                acc = phi.eval(x).mul(&acc)?;
                x = map.forward(x);
                out.push(ad_norm(&acc).powf(S::one() / S::lit(k as f64)));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let sequence: Vec<S> =
        (0..n).map(|k| per_sample.iter().map(|v| v[k]).fold(S::zero(), S::max)).collect();
    Ok(GrowthRate { estimate: sequence[n - 1], sequence })
}

/// `θ(x): A ↦ φ₂(x) A φ₁(x)*` as a unitary on row-major `d × d` matrices,
/// `θ = φ₂ ⊗ conj(φ₁)`.
pub fn reduce_transfer_to_coboundary<S: Real>(phi1: &Cocycle<S>, phi2: &Cocycle<S>) -> Result<Cocycle<S>> {
    let d = match (phi1.kind(), phi2.kind()) {
        (GroupKind::Unitary(a), GroupKind::Unitary(b)) if a == b => a,
        (a, b) => return Err(Error::GroupMismatch(format!("transfer reduction needs two unitary cocycles of one dimension, got {a:?} and {b:?}"))),
    };
    let (p1, p2) = (phi1.clone(), phi2.clone());
    Ok(Cocycle::from_fn("theta", GroupKind::Unitary(d * d), move |x| {
        let a = p1.eval(x);
        let b = p2.eval(x);
        let m: CMatrix<S> = b.as_matrix().expect("unitary").kron(&a.as_matrix().expect("unitary").conj());
        GroupElement::unitary(m).expect("Kronecker product of unitaries is unitary")
    })
    .with_holder(phi1.holder_exponent.min(phi2.holder_exponent), S::infinity()))
}

/// Circle cocycle `x ↦ α + χ(φ(x))` turning `ψ(fx) = e^{iα} χ(φ(x)) ψ(x)`
/// into a coboundary equation.
pub fn twisted_cocycle<S: Real>(phi: &Cocycle<S>, twist: &TwistSpec<S>) -> Cocycle<S> {
    let (p, t) = (phi.clone(), twist.clone());
    Cocycle::from_fn("twisted", GroupKind::Circle, move |x| {
        let chi = t.character.apply(&p.eval(x)).expect("cocycle values lie in the character's domain");
        GroupElement::circle(t.phase + chi)
    })
    .with_holder(phi.holder_exponent, phi.holder_coefficient)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Builtin;
    use crate::group::{distance, Character};
    use num_complex::Complex;

    fn doubling() -> PiecewiseMap<f64> {
        PiecewiseMap::builtin(Builtin::Doubling).unwrap()
    }

    #[test]
    fn empty_product_is_identity() {
        let phi = Cocycle::scalar("x", |x: f64| x);
        assert_eq!(cocycle_product(&phi, &doubling(), &[]).unwrap(), GroupElement::scalar(0.0));
        assert_eq!(cocycle_product(&phi, &doubling(), &[0.3]).unwrap(), GroupElement::scalar(0.3));
    }

    #[test]
    fn log_derivative_of_doubling() {
        let m = doubling();
        let phi = Cocycle::log_derivative(&m, 0.0);
        let v = cocycle_product(&phi, &m, &[0.3, 0.6, 0.2]).unwrap();
        assert!((v.as_real_vec().unwrap()[0] - 3.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn inconsistent_orbit_names_index() {
        let m = doubling();
        let phi = Cocycle::identity(GroupKind::Circle);
        assert!(matches!(cocycle_product(&phi, &m, &[0.3, 0.6, 0.25]), Err(Error::OrbitInconsistent { index: 2, .. })));
    }

    #[test]
    fn cocycle_law() {
        let m = PiecewiseMap::<f64>::builtin(Builtin::Quadratic { a: 1.8 }).unwrap();
        let phi = Cocycle::from_fn("rot", GroupKind::Unitary(2), |x: f64| {
            let gen = CMatrix::from_rows(&[
                vec![Complex::new(0.0, x), Complex::new(0.3 * x, 0.0)],
                vec![Complex::new(-0.3 * x, 0.0), Complex::new(0.0, -0.5)],
            ]);
            GroupElement::unitary_exp(&gen)
        });
        for &x in &[0.13, -0.41, 0.77] {
            for mm in 0..=5 {
                for n in 0..=5 {
                    let lhs = forward_product(&phi, &m, x, mm + n).unwrap();
                    let mut fx = x;
                    for _ in 0..n {
                        fx = m.forward(fx);
                    }
                    let rhs = forward_product(&phi, &m, fx, mm).unwrap().mul(&forward_product(&phi, &m, x, n).unwrap()).unwrap();
                    assert!(distance(&lhs, &rhs).unwrap() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn growth_rates_are_one_for_compact_and_abelian() {
        let m = doubling();
        let phi = Cocycle::log_derivative(&m, 0.0);
        assert_eq!(growth_rate_mu_u(&phi, &m, 100, 8, 1).unwrap().estimate, 1.0);
        let u = Cocycle::from_fn("u", GroupKind::Unitary(2), |x: f64| {
            GroupElement::unitary_exp(&CMatrix::from_rows(&[
                vec![Complex::new(0.0, 1.0), Complex::new(x, 0.0)],
                vec![Complex::new(-x, 0.0), Complex::new(0.0, 2.0 * x)],
            ]))
        });
        let g = growth_rate_mu_u(&u, &m, 100, 10, 2).unwrap();
        assert!((g.estimate - 1.0).abs() < 1e-6);
        assert_eq!(g.sequence.len(), 10);
        assert!(growth_rate_mu_u(&u, &m, 10, 10, 2).is_err());
    }

    #[test]
    fn transfer_reduction_fixes_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = GroupElement::<f64>::random(GroupKind::Unitary(2), &mut rng);
        let phi = Cocycle::constant(g.clone());
        let theta = reduce_transfer_to_coboundary(&phi, &phi).unwrap();
        let t = theta.eval(0.4);
        let m = t.as_matrix().unwrap();
        // vec(I) = (1, 0, 0, 1)
        let v = [1.0, 0.0, 0.0, 1.0];
        for i in 0..4 {
            let img: Complex<f64> = (0..4).map(|j| m[(i, j)] * v[j]).sum();
            assert!((img - Complex::new(v[i], 0.0)).norm() < 1e-12);
        }
        assert!(m.unitarity_defect() < 1e-10);
        let bad = Cocycle::identity(GroupKind::Unitary(3));
        assert!(reduce_transfer_to_coboundary(&phi, &bad).is_err());
    }

    #[test]
    fn twist_of_circle_cocycle() {
        let phi = Cocycle::from_fn("angle", GroupKind::Circle, |x: f64| GroupElement::circle(x));
        let tw = twisted_cocycle(&phi, &TwistSpec::new(0.25, Character::Winding(1)));
        assert!((tw.eval(0.5).as_circle().unwrap() - 0.75).abs() < 1e-15);
        assert!((tw.eval(0.9).as_circle().unwrap() - 0.15).abs() < 1e-15);
        let trivial = twisted_cocycle(&phi, &TwistSpec::new(0.0, Character::Trivial));
        assert_eq!(trivial.eval(0.3), GroupElement::circle(0.0));
    }

    #[test]
    fn eps_sequences() {
        let e = EpsSequence::<f64>::geometric(2.0, 0.5);
        assert!((e.eps(4).unwrap() - 0.25).abs() < 1e-15);
        assert!(EpsSequence::samples(vec![0.5, 0.6]).is_err());
        let s = EpsSequence::samples(vec![0.5, 0.25]).unwrap();
        assert_eq!(s.eps(3), None);
    }
}
