//! Small dense complex linear algebra used by the unitary group.
//!
//! Matrices here are tiny (dimension at most a few dozen), so the routines
//! favour robustness over asymptotic speed: modified Gram–Schmidt QR,
//! Wilkinson-shifted QR iteration for normal matrices, and cyclic Jacobi
//! for real symmetric eigenproblems.

use num_complex::Complex;

use crate::scalar::Real;

/// Square complex matrix in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<S> {
    n: usize,
    data: Vec<Complex<S>>,
}

impl<S: Real> CMatrix<S> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex::new(S::zero(), S::zero()); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex::new(S::one(), S::zero());
        }
        m
    }

    pub fn diagonal(entries: &[Complex<S>]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from rows; panics if the rows are not square.
    pub fn from_rows(rows: &[Vec<Complex<S>>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self { n, data: rows.iter().flatten().copied().collect() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex<S>] {
        &self.data
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == S::zero() && a.im == S::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self { n: self.n, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, s: Complex<S>) -> Self {
        Self { n: self.n, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn frobenius_norm(&self) -> S {
        self.data.iter().map(|z| z.norm_sqr()).sum::<S>().sqrt()
    }

    /// Real Frobenius inner product `Re tr(selfᴴ rhs)`.
    pub fn real_inner(&self, rhs: &Self) -> S {
        self.data.iter().zip(&rhs.data).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Kronecker product; with row-major vectorisation `vec(P A Q) = (P ⊗ Qᵀ) vec(A)`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.n, rhs.n);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * rhs.data[k * m + l];
                    }
                }
            }
        }
        out
    }

    /// `‖M Mᴴ − I‖_F`.
    pub fn unitarity_defect(&self) -> S {
        self.mul(&self.adjoint()).sub(&Self::identity(self.n)).frobenius_norm()
    }

    /// Replaces the columns by an orthonormal basis of their span (modified Gram–Schmidt).
    pub fn orthonormalize_columns(&self) -> Self {
        qr(self).0
    }

    pub fn trace(&self) -> Complex<S> {
        (0..self.n).map(|i| self.data[i * self.n + i]).fold(Complex::new(S::zero(), S::zero()), |a, b| a + b)
    }

    fn column(&self, j: usize) -> Vec<Complex<S>> {
        (0..self.n).map(|i| self.data[i * self.n + j]).collect()
    }

    fn set_column(&mut self, j: usize, col: &[Complex<S>]) {
        for (i, &v) in col.iter().enumerate() {
            self.data[i * self.n + j] = v;
        }
    }

    /// Matrix exponential by scaling and squaring of a degree-18 Taylor polynomial.
    pub fn expm(&self) -> Self {
        let norm = self.frobenius_norm().as_f64();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let scale = S::lit(0.5f64.powi(squarings as i32));
        let b = self.scale(Complex::new(scale, S::zero()));
        let mut term = Self::identity(self.n);
        let mut acc = Self::identity(self.n);
        for k in 1..=18 {
            term = term.mul(&b).scale(Complex::new(S::one() / S::lit(k as f64), S::zero()));
            acc = acc.add(&term);
        }
        for _ in 0..squarings {
            acc = acc.mul(&acc);
        }
        acc
    }
}

impl<S> std::ops::Index<(usize, usize)> for CMatrix<S> {
    type Output = Complex<S>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<S> {
        &self.data[i * self.n + j]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for CMatrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<S> {
        &mut self.data[i * self.n + j]
    }
}

fn dot<S: Real>(a: &[Complex<S>], b: &[Complex<S>]) -> Complex<S> {
    a.iter().zip(b).fold(Complex::new(S::zero(), S::zero()), |acc, (x, y)| acc + x.conj() * y)
}

fn norm<S: Real>(a: &[Complex<S>]) -> S {
    a.iter().map(|z| z.norm_sqr()).sum::<S>().sqrt()
}

/// QR factorisation by modified Gram–Schmidt. Rank-deficient columns are
/// replaced by unit vectors orthogonal to the ones already produced, so `Q`
/// is always unitary.
pub fn qr<S: Real>(a: &CMatrix<S>) -> (CMatrix<S>, CMatrix<S>) {
    let n = a.dim();
    let scale = a.frobenius_norm().max(S::min_positive_value());
    let mut q = CMatrix::zeros(n);
    let mut r = CMatrix::zeros(n);
    for j in 0..n {
        let mut v = a.column(j);
        for _ in 0..2 {
            for k in 0..j {
                let qk = q.column(k);
                let c = dot(&qk, &v);
                r[(k, j)] = r[(k, j)] + c;
                for (vi, qi) in v.iter_mut().zip(&qk) {
                    *vi = *vi - *qi * c;
                }
            }
        }
        let mut nv = norm(&v);
        if nv <= scale * S::epsilon() * S::lit(64.0) {
            // rank deficient: pick the standard basis vector with the largest residual
            nv = S::zero();
            let mut best = Vec::new();
            let mut best_norm = S::zero();
            for e in 0..n {
                let mut cand = vec![Complex::new(S::zero(), S::zero()); n];
                cand[e] = Complex::new(S::one(), S::zero());
                for _ in 0..2 {
                    for k in 0..j {
                        let qk = q.column(k);
                        let c = dot(&qk, &cand);
                        for (vi, qi) in cand.iter_mut().zip(&qk) {
                            *vi = *vi - *qi * c;
                        }
                    }
                }
                let cn = norm(&cand);
                if cn > best_norm {
                    best_norm = cn;
                    best = cand;
                }
            }
            v = best.into_iter().map(|z| z / best_norm).collect();
        } else {
            v = v.into_iter().map(|z| z / nv).collect();
        }
        r[(j, j)] = Complex::new(nv, S::zero());
        q.set_column(j, &v);
    }
    (q, r)
}

/// Unitary diagonalisation of a normal matrix: returns `(eigenvalues, Q)`
/// with `A ≈ Q diag(eigenvalues) Qᴴ`.
pub fn eig_normal<S: Real>(a: &CMatrix<S>) -> (Vec<Complex<S>>, CMatrix<S>) {
    let n = a.dim();
    let mut t = a.clone();
    let mut z = CMatrix::identity(n);
    let scale = a.frobenius_norm().max(S::one());
    let eps = S::epsilon() * S::lit(8.0) * scale;
    let mut active = n;
    let mut iter_on_block = 0usize;
    while active > 1 {
        let last = active - 1;
        let off: S = (0..last).map(|j| t[(last, j)].norm()).fold(S::zero(), S::max);
        if off <= eps {
            active -= 1;
            iter_on_block = 0;
            continue;
        }
        iter_on_block += 1;
        let shift = if iter_on_block % 11 == 0 {
            // exceptional shift breaks rare symmetric stalls
            t[(last, last)] + Complex::new(off * S::lit(0.75), off * S::lit(0.3))
        } else {
            wilkinson_shift(&t, last)
        };
        let mut block = CMatrix::zeros(active);
        for i in 0..active {
            for j in 0..active {
                block[(i, j)] = t[(i, j)];
            }
            block[(i, i)] = block[(i, i)] - shift;
        }
        let (qb, _) = qr(&block);
        let mut qf = CMatrix::identity(n);
        for i in 0..active {
            for j in 0..active {
                qf[(i, j)] = qb[(i, j)];
            }
        }
        t = qf.adjoint().mul(&t).mul(&qf);
        z = z.mul(&qf);
        if iter_on_block > 500 {
            break;
        }
    }
    let vals = (0..n).map(|i| t[(i, i)]).collect();
    (vals, z)
}

fn wilkinson_shift<S: Real>(t: &CMatrix<S>, last: usize) -> Complex<S> {
    let a = t[(last - 1, last - 1)];
    let b = t[(last - 1, last)];
    let c = t[(last, last - 1)];
    let d = t[(last, last)];
    let half = Complex::new(S::half(), S::zero());
    let tr = (a + d) * half;
    let det = a * d - b * c;
    let disc = (tr * tr - det).sqrt();
    let l1 = tr + disc;
    let l2 = tr - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Eigenvalues of a real symmetric matrix (row-major, `n × n`) by cyclic Jacobi.
pub fn symmetric_eigenvalues<S: Real>(m: &[S], n: usize) -> Vec<S> {
    let mut a = m.to_vec();
    for _sweep in 0..100 {
        let off: S = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let diag: S = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum();
        if off <= S::epsilon() * S::epsilon() * (diag + off) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == S::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (S::two() * apq);
                let sign = if theta >= S::zero() { S::one() } else { -S::one() };
                let t = sign / (theta.abs() + (theta * theta + S::one()).sqrt());
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn eig_of_diagonal_unitary() {
        let m = CMatrix::diagonal(&[c(0.0, 1.0), c(-1.0, 0.0), c(1.0, 0.0)]);
        let (vals, q) = eig_normal(&m);
        let recon = q.mul(&CMatrix::diagonal(&vals)).mul(&q.adjoint());
        assert!(recon.sub(&m).frobenius_norm() < 1e-12);
    }

    #[test]
    fn eig_reconstructs_rotation() {
        let (s, co) = (0.7f64.sin(), 0.7f64.cos());
        let m = CMatrix::from_rows(&[vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]]);
        let (vals, q) = eig_normal(&m);
        let mut args: Vec<f64> = vals.iter().map(|z| z.arg()).collect();
        args.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((args[0] + 0.7).abs() < 1e-12 && (args[1] - 0.7).abs() < 1e-12);
        let recon = q.mul(&CMatrix::diagonal(&vals)).mul(&q.adjoint());
        assert!(recon.sub(&m).frobenius_norm() < 1e-12);
    }

    #[test]
    fn expm_of_skew_generator() {
        let x = CMatrix::from_rows(&[vec![c(0.0, 0.0), c(-2.0, 0.0)], vec![c(2.0, 0.0), c(0.0, 0.0)]]);
        let e = x.expm();
        assert!((e[(0, 0)].re - 2f64.cos()).abs() < 1e-13);
        assert!((e[(1, 0)].re - 2f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        let m = [2.0f64, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0];
        let mut ev = symmetric_eigenvalues(&m, 3);
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12 && (ev[2] - 5.0).abs() < 1e-12);
    }
}
