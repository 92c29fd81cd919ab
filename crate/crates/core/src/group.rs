//! Concrete Lie groups carrying cocycle values: real vector spaces, the
//! circle (in turn units) and unitary matrix groups.
//!
//! Every group here comes with a right-invariant metric:
//!
//! * `RealVec`: Euclidean distance of `g - h`;
//! * `Circle`: arc length `min(|a - b|, 1 - |a - b|)` in turns;
//! * `Unitary`: Frobenius norm of the principal logarithm of `g h⁻¹`.
//!
//! The unitary metric is in fact bi-invariant, so `‖Ad(g)‖ = 1` for every
//! element in scope; [`ad_norm`] still computes the operator norm of the
//! adjoint action from scratch so the inequality
//! `d(gh, gk) ≤ ‖Ad(g)‖ d(h, k)` can be tested rather than assumed.

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{eig_normal, qr, symmetric_eigenvalues, CMatrix};
use crate::scalar::Real;

/// Number of unitary multiplications between re-orthonormalisations.
pub const DEFAULT_REORTHO_CADENCE: u32 = 64;

/// Eigenvalues closer than this to `-1` make the principal logarithm ill-defined.
pub const ANTIPODAL_TOLERANCE: f64 = 1e-12;

/// Tolerance for accepting a matrix as unitary (Frobenius norm of `M Mᴴ - I`).
pub const UNITARY_TOLERANCE: f64 = 1e-12;

/// Which group an element lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    RealVec(usize),
    Circle,
    Unitary(usize),
}

/// A unitary matrix together with the number of products taken since it was
/// last re-orthonormalised.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix<S> {
    matrix: CMatrix<S>,
    pending: u32,
}

impl<S: Real> UnitaryMatrix<S> {
    pub fn matrix(&self) -> &CMatrix<S> {
        &self.matrix
    }

    pub fn pending_products(&self) -> u32 {
        self.pending
    }
}

/// Value of a cocycle or transfer function.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupElement<S> {
    RealVec(Vec<S>),
    /// Angle in turns, always reduced to `[0, 1)`.
    Circle(S),
    Unitary(UnitaryMatrix<S>),
}

fn reduce_turns<S: Real>(a: S) -> S {
    let r = a - a.floor();
    if r >= S::one() {
        S::zero()
    } else {
        r
    }
}

/// Signed representative of a turn difference in `[-1/2, 1/2)`.
pub fn wrap_turns<S: Real>(a: S) -> S {
    let r = reduce_turns(a + S::half()) - S::half();
    r
}

impl<S: Real> GroupElement<S> {
    pub fn real_vec(entries: Vec<S>) -> Self {
        GroupElement::RealVec(entries)
    }

    /// One-dimensional real element.
    pub fn scalar(x: S) -> Self {
        GroupElement::RealVec(vec![x])
    }

    pub fn circle(turns: S) -> Self {
        GroupElement::Circle(reduce_turns(turns))
    }

    /// Wraps a matrix as a unitary element, checking `M Mᴴ = I`.
    pub fn unitary(matrix: CMatrix<S>) -> Result<Self> {
        let defect = matrix.unitarity_defect();
        if defect > S::tol(UNITARY_TOLERANCE) * S::lit(matrix.dim() as f64).max(S::one()) * S::lit(16.0) {
            return Err(Error::GroupMismatch(format!("matrix is not unitary (defect {:e})", defect.as_f64())));
        }
        Ok(GroupElement::Unitary(UnitaryMatrix { matrix, pending: 0 }))
    }

    /// Exponential of a skew-Hermitian generator.
    pub fn unitary_exp(generator: &CMatrix<S>) -> Self {
        GroupElement::Unitary(UnitaryMatrix { matrix: generator.expm(), pending: 0 })
    }

    pub fn identity(kind: GroupKind) -> Self {
        match kind {
            GroupKind::RealVec(d) => GroupElement::RealVec(vec![S::zero(); d]),
            GroupKind::Circle => GroupElement::Circle(S::zero()),
            GroupKind::Unitary(d) => GroupElement::Unitary(UnitaryMatrix { matrix: CMatrix::identity(d), pending: 0 }),
        }
    }

    pub fn kind(&self) -> GroupKind {
        match self {
            GroupElement::RealVec(v) => GroupKind::RealVec(v.len()),
            GroupElement::Circle(_) => GroupKind::Circle,
            GroupElement::Unitary(u) => GroupKind::Unitary(u.matrix.dim()),
        }
    }

    pub fn identity_like(&self) -> Self {
        Self::identity(self.kind())
    }

    pub fn as_real_vec(&self) -> Option<&[S]> {
        match self {
            GroupElement::RealVec(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_circle(&self) -> Option<S> {
        match self {
            GroupElement::Circle(a) => Some(*a),
            _ => None,
        }
    }

    pub fn as_matrix(&self) -> Option<&CMatrix<S>> {
        match self {
            GroupElement::Unitary(u) => Some(&u.matrix),
            _ => None,
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            GroupElement::RealVec(v) => GroupElement::RealVec(v.iter().map(|&x| -x).collect()),
            GroupElement::Circle(a) => GroupElement::circle(-*a),
            GroupElement::Unitary(u) => {
                GroupElement::Unitary(UnitaryMatrix { matrix: u.matrix.adjoint(), pending: u.pending })
            }
        }
    }

    /// Group product `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        multiply_with_cadence(self, rhs, DEFAULT_REORTHO_CADENCE)
    }

    /// Distance to the identity.
    pub fn norm(&self) -> Result<S> {
        distance(self, &self.identity_like())
    }

    /// Coordinates of the principal logarithm: entries for `RealVec`, the
    /// signed angle for `Circle`, and the real and imaginary parts of the
    /// skew-Hermitian logarithm (row-major) for `Unitary`.
    pub fn log_coordinates(&self) -> Result<Vec<S>> {
        match self {
            GroupElement::RealVec(v) => Ok(v.clone()),
            GroupElement::Circle(a) => Ok(vec![wrap_turns(*a)]),
            GroupElement::Unitary(u) => {
                let l = unitary_log(&u.matrix)?;
                Ok(l.as_slice().iter().flat_map(|z| [z.re, z.im]).collect())
            }
        }
    }

    /// Geodesic interpolation `exp(t log(h g⁻¹)) g` from `self` (t = 0) to `other` (t = 1).
    pub fn interpolate(&self, other: &Self, t: S) -> Result<Self> {
        check_same_kind(self, other)?;
        match (self, other) {
            (GroupElement::RealVec(a), GroupElement::RealVec(b)) => {
                Ok(GroupElement::RealVec(a.iter().zip(b).map(|(&x, &y)| x + t * (y - x)).collect()))
            }
            (GroupElement::Circle(a), GroupElement::Circle(b)) => Ok(GroupElement::circle(*a + t * wrap_turns(*b - *a))),
            (GroupElement::Unitary(a), GroupElement::Unitary(b)) => {
                let rel = b.matrix.mul(&a.matrix.adjoint());
                let step = unitary_log(&rel)?.scale(Complex::new(t, S::zero())).expm();
                Ok(GroupElement::Unitary(UnitaryMatrix { matrix: step.mul(&a.matrix), pending: 0 }))
            }
            _ => unreachable!(),
        }
    }

    /// Draws a random element: standard normal entries, uniform angle, or
    /// the unitary factor of a random complex matrix.
    pub fn random<R: Rng + ?Sized>(kind: GroupKind, rng: &mut R) -> Self {
        match kind {
            GroupKind::RealVec(d) => GroupElement::RealVec((0..d).map(|_| S::lit(gaussian(rng))).collect()),
            GroupKind::Circle => GroupElement::circle(S::lit(rng.gen::<f64>())),
            GroupKind::Unitary(d) => {
                let mut m = CMatrix::zeros(d);
                for i in 0..d {
                    for j in 0..d {
                        m[(i, j)] = Complex::new(S::lit(gaussian(rng)), S::lit(gaussian(rng)));
                    }
                }
                let (q, _) = qr(&m);
                GroupElement::Unitary(UnitaryMatrix { matrix: q, pending: 0 })
            }
        }
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn check_same_kind<S: Real>(g: &GroupElement<S>, h: &GroupElement<S>) -> Result<()> {
    if g.kind() != h.kind() {
        return Err(Error::GroupMismatch(format!("{:?} vs {:?}", g.kind(), h.kind())));
    }
    Ok(())
}

/// Group product.
pub fn multiply<S: Real>(g: &GroupElement<S>, h: &GroupElement<S>) -> Result<GroupElement<S>> {
    multiply_with_cadence(g, h, DEFAULT_REORTHO_CADENCE)
}

/// Group product; unitary results are re-orthonormalised once `cadence`
/// products have accumulated since the last clean-up.
pub fn multiply_with_cadence<S: Real>(g: &GroupElement<S>, h: &GroupElement<S>, cadence: u32) -> Result<GroupElement<S>> {
    check_same_kind(g, h)?;
    Ok(match (g, h) {
        (GroupElement::RealVec(a), GroupElement::RealVec(b)) => {
            GroupElement::RealVec(a.iter().zip(b).map(|(&x, &y)| x + y).collect())
        }
        (GroupElement::Circle(a), GroupElement::Circle(b)) => GroupElement::circle(*a + *b),
        (GroupElement::Unitary(a), GroupElement::Unitary(b)) => {
            let mut matrix = a.matrix.mul(&b.matrix);
            let mut pending = a.pending.max(b.pending) + 1;
            if pending >= cadence.max(1) {
                matrix = matrix.orthonormalize_columns();
                pending = 0;
            }
            GroupElement::Unitary(UnitaryMatrix { matrix, pending })
        }
        _ => unreachable!(),
    })
}

/// Principal logarithm of a unitary matrix (skew-Hermitian).
pub fn unitary_log<S: Real>(u: &CMatrix<S>) -> Result<CMatrix<S>> {
    let (vals, q) = eig_normal(u);
    let tol = S::tol(ANTIPODAL_TOLERANCE);
    let mut logs = Vec::with_capacity(vals.len());
    for z in vals {
        if (z + Complex::new(S::one(), S::zero())).norm() < tol {
            return Err(Error::Antipodal { tolerance: ANTIPODAL_TOLERANCE });
        }
        logs.push(Complex::new(S::zero(), z.arg()));
    }
    Ok(q.mul(&CMatrix::diagonal(&logs)).mul(&q.adjoint()))
}

/// Right-invariant distance between two elements of the same group.
pub fn distance<S: Real>(g: &GroupElement<S>, h: &GroupElement<S>) -> Result<S> {
    check_same_kind(g, h)?;
    match (g, h) {
        (GroupElement::RealVec(a), GroupElement::RealVec(b)) => {
            Ok(a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<S>().sqrt())
        }
        (GroupElement::Circle(a), GroupElement::Circle(b)) => {
            let d = (*a - *b).abs();
            Ok(d.min(S::one() - d))
        }
        (GroupElement::Unitary(a), GroupElement::Unitary(b)) => {
            let rel = a.matrix.mul(&b.matrix.adjoint());
            let (vals, _) = eig_normal(&rel);
            let tol = S::tol(ANTIPODAL_TOLERANCE);
            let mut acc = S::zero();
            for z in vals {
                if (z + Complex::new(S::one(), S::zero())).norm() < tol {
                    return Err(Error::Antipodal { tolerance: ANTIPODAL_TOLERANCE });
                }
                let theta = z.arg();
                acc += theta * theta;
            }
            Ok(acc.sqrt())
        }
        _ => unreachable!(),
    }
}

/// Operator norm of `Ad(g)` on the Lie algebra with the metric's inner product.
pub fn ad_norm<S: Real>(g: &GroupElement<S>) -> S {
    match g {
        GroupElement::RealVec(_) | GroupElement::Circle(_) => S::one(),
        GroupElement::Unitary(u) => {
            let basis = skew_hermitian_basis::<S>(u.matrix.dim());
            let ginv = u.matrix.adjoint();
            let images: Vec<CMatrix<S>> = basis.iter().map(|b| u.matrix.mul(b).mul(&ginv)).collect();
            let n = basis.len();
            let mut m = vec![S::zero(); n * n];
            for (a, ba) in basis.iter().enumerate() {
                for (b, img) in images.iter().enumerate() {
                    m[a * n + b] = ba.real_inner(img);
                }
            }
            // MᵀM
            let mut mtm = vec![S::zero(); n * n];
            for i in 0..n {
                for j in 0..n {
                    mtm[i * n + j] = (0..n).map(|k| m[k * n + i] * m[k * n + j]).sum();
                }
            }
            let top = symmetric_eigenvalues(&mtm, n).into_iter().fold(S::zero(), S::max);
            top.sqrt()
        }
    }
}

/// Orthonormal basis of the skew-Hermitian `d × d` matrices under `Re tr(XᴴY)`.
fn skew_hermitian_basis<S: Real>(d: usize) -> Vec<CMatrix<S>> {
    let mut out = Vec::with_capacity(d * d);
    let i = Complex::new(S::zero(), S::one());
    let r = Complex::new(S::one() / S::two().sqrt(), S::zero());
    for k in 0..d {
        let mut m = CMatrix::zeros(d);
        m[(k, k)] = i;
        out.push(m);
    }
    for k in 0..d {
        for l in (k + 1)..d {
            let mut m = CMatrix::zeros(d);
            m[(k, l)] = r;
            m[(l, k)] = -r;
            out.push(m);
            let mut m = CMatrix::zeros(d);
            m[(k, l)] = i * r;
            m[(l, k)] = i * r;
            out.push(m);
        }
    }
    out
}

/// Right-invariant metric for one concrete group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupMetric<S> {
    pub kind: GroupKind,
    pub tolerance: S,
}

impl<S: Real> GroupMetric<S> {
    pub fn new(kind: GroupKind) -> Self {
        let tolerance = match kind {
            GroupKind::Unitary(_) => S::tol(1e-10),
            _ => S::zero(),
        };
        Self { kind, tolerance }
    }

    pub fn distance(&self, g: &GroupElement<S>, h: &GroupElement<S>) -> Result<S> {
        if g.kind() != self.kind {
            return Err(Error::GroupMismatch(format!("metric for {:?} applied to {:?}", self.kind, g.kind())));
        }
        distance(g, h)
    }

    /// `|d(gk, hk) - d(g, h)|` for one triple.
    pub fn right_invariance_defect(&self, g: &GroupElement<S>, h: &GroupElement<S>, k: &GroupElement<S>) -> Result<S> {
        Ok((self.distance(&g.mul(k)?, &h.mul(k)?)? - self.distance(g, h)?).abs())
    }

    /// `d(gh, gk) - ‖Ad(g)‖ d(h, k)`; non-positive when the Ad inequality holds.
    pub fn ad_inequality_excess(&self, g: &GroupElement<S>, h: &GroupElement<S>, k: &GroupElement<S>) -> Result<S> {
        Ok(self.distance(&g.mul(h)?, &g.mul(k)?)? - ad_norm(g) * self.distance(h, k)?)
    }
}

/// One-dimensional representation `G → S¹`, values in turns.
#[derive(Clone, Debug, PartialEq)]
pub enum Character<S> {
    Trivial,
    /// `θ ↦ kθ` on the circle.
    Winding(i64),
    /// `v ↦ w·v mod 1` on a real vector group.
    Linear(Vec<S>),
    /// `U ↦ arg det U / 2π` on a unitary group.
    Determinant,
}

impl<S: Real> Character<S> {
    pub fn apply(&self, g: &GroupElement<S>) -> Result<S> {
        match (self, g) {
            (Character::Trivial, _) => Ok(S::zero()),
            (Character::Winding(k), GroupElement::Circle(a)) => Ok(reduce_turns(S::lit(*k as f64) * *a)),
            (Character::Linear(w), GroupElement::RealVec(v)) if w.len() == v.len() => {
                Ok(reduce_turns(w.iter().zip(v).map(|(&a, &b)| a * b).sum()))
            }
            (Character::Determinant, GroupElement::Unitary(u)) => {
                let (vals, _) = eig_normal(&u.matrix);
                let total: S = vals.iter().map(|z| z.arg()).sum();
                Ok(reduce_turns(total / (S::two() * S::PI())))
            }
            (c, g) => Err(Error::GroupMismatch(format!("character {c:?} undefined on {:?}", g.kind()))),
        }
    }
}

/// Data of the twisted equation `ψ(fx) = e^{iα} χ(φ(x)) ψ(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistSpec<S> {
    /// Twist phase `α` in turns.
    pub phase: S,
    pub character: Character<S>,
    pub representation_dim: usize,
}

impl<S: Real> TwistSpec<S> {
    pub fn new(phase: S, character: Character<S>) -> Self {
        Self { phase: reduce_turns(phase), character, representation_dim: 1 }
    }

    /// Largest homomorphism defect `d(χ(gh), χ(g)χ(h))` over the given pairs.
    pub fn homomorphism_defect(&self, pairs: &[(GroupElement<S>, GroupElement<S>)]) -> Result<S> {
        let mut worst = S::zero();
        for (g, h) in pairs {
            let lhs = self.character.apply(&g.mul(h)?)?;
            let rhs = self.character.apply(g)? + self.character.apply(h)?;
            let d = wrap_turns(lhs - rhs).abs();
            worst = worst.max(d);
        }
        Ok(worst)
    }
}
