//! Real polynomials in the monomial basis, with Sturm-sequence root isolation.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// Polynomial `Σ c[i] x^i`, coefficients in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly {
    coeffs: Vec<f64>,
}

/// Real-root isolation failed because the polynomial has a multiple root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultipleRoot {
    pub near: f64,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Self::new(vec![0.0, 1.0])
    }

    fn trim(&mut self) {
        while self.coeffs.last() == Some(&0.0) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `x^i`, zero beyond the degree.
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    /// Degree, with the zero polynomial reported as `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect())
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Self {
        let mut c = Vec::with_capacity(self.coeffs.len() + 1);
        c.push(0.0);
        c.extend(self.coeffs.iter().enumerate().map(|(i, c)| c / (i + 1) as f64));
        Self::new(c)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// `p(a x + b)`.
    pub fn compose_affine(&self, a: f64, b: f64) -> Self {
        let lin = Self::new(vec![b, a]);
        self.coeffs.iter().rev().fold(Self::zero(), |acc, &c| &(&acc * &lin) + &Self::constant(c))
    }

    fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Euclidean division, returning `(quotient, remainder)`.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.coeffs[dd];
        let mut rem = self.coeffs.clone();
        let nq = rem.len().saturating_sub(dd);
        let mut q = vec![0.0; nq];
        for i in (0..nq).rev() {
            let f = rem[i + dd] / lead;
            q[i] = f;
            for (j, dc) in divisor.coeffs.iter().enumerate() {
                rem[i + j] -= f * dc;
            }
            rem[i + dd] = 0.0;
        }
        rem.truncate(dd);
        (Self::new(q), Self::new(rem))
    }

    /// Sturm sequence `p, p', -rem(p, p'), ...`.
    ///
    /// Remainders whose coefficients are below `1e-10` relative to the
    /// previous element are treated as zero, which terminates the sequence.
    pub fn sturm_sequence(&self) -> Vec<Self> {
        let mut seq = vec![self.clone(), self.derivative()];
        loop {
            let n = seq.len();
            if seq[n - 1].is_zero() {
                seq.pop();
                break;
            }
            if seq[n - 1].degree() == Some(0) {
                break;
            }
            let (_, r) = seq[n - 2].div_rem(&seq[n - 1]);
            let scale = seq[n - 2].max_abs().max(seq[n - 1].max_abs());
            if r.max_abs() <= 1e-10 * scale {
                break;
            }
            seq.push(-&r);
        }
        seq
    }

    fn sign_changes(seq: &[Self], x: f64) -> usize {
        let mut changes = 0;
        let mut last = 0.0_f64;
        for p in seq {
            let v = p.eval(x);
            if v != 0.0 {
                if last != 0.0 && (v > 0.0) != (last > 0.0) {
                    changes += 1;
                }
                last = v;
            }
        }
        changes
    }

    /// All real roots in the open interval `(lo, hi)`, sorted, refined by
    /// bisection to absolute width `tol`.
    ///
    /// Refuses polynomials with a multiple root anywhere on the real line
    /// (detected by a Sturm sequence ending in a nonconstant element).
    pub fn real_roots(&self, lo: f64, hi: f64, tol: f64) -> Result<Vec<f64>, MultipleRoot> {
        if self.degree().unwrap_or(0) == 0 {
            return Ok(Vec::new());
        }
        let seq = self.sturm_sequence();
        if seq.last().and_then(Poly::degree).unwrap_or(0) > 0 {
            let g = seq.last().unwrap();
            let near = g.real_roots_simple_bisection(lo, hi).unwrap_or(0.5 * (lo + hi));
            return Err(MultipleRoot { near });
        }
        let count = |a: f64, b: f64| Self::sign_changes(&seq, a) - Self::sign_changes(&seq, b);
        let mut roots = Vec::new();
        let mut stack = vec![(lo, hi)];
        while let Some((a, b)) = stack.pop() {
            let n = count(a, b);
            if n == 0 {
                continue;
            }
            if n == 1 && (self.eval(a) * self.eval(b) < 0.0 || b - a < tol) {
                roots.push(self.bisect(a, b, tol));
                continue;
            }
            if b - a < tol {
                roots.push(0.5 * (a + b));
                continue;
            }
            let mid = 0.5 * (a + b);
            if self.eval(mid) == 0.0 {
                roots.push(mid);
                let eps = tol.max(1e-14);
                stack.push((a, mid - eps));
                stack.push((mid + eps, b));
            } else {
                stack.push((a, mid));
                stack.push((mid, b));
            }
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(roots)
    }

    fn real_roots_simple_bisection(&self, lo: f64, hi: f64) -> Option<f64> {
        let n = 4096;
        let h = (hi - lo) / n as f64;
        (0..n)
            .map(|i| lo + (i as f64 + 0.5) * h)
            .min_by(|a, b| self.eval(*a).abs().partial_cmp(&self.eval(*b).abs()).unwrap())
    }

    fn bisect(&self, mut a: f64, mut b: f64, tol: f64) -> f64 {
        let mut fa = self.eval(a);
        while b - a > tol {
            let m = 0.5 * (a + b);
            let fm = self.eval(m);
            if fm == 0.0 {
                return m;
            }
            if (fm > 0.0) == (fa > 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }

    /// `max` of the polynomial over `[lo, hi]`, attained at an endpoint or a
    /// critical point.
    pub fn max_on(&self, lo: f64, hi: f64) -> f64 {
        let mut best = self.eval(lo).max(self.eval(hi));
        for c in self.critical_points(lo, hi) {
            best = best.max(self.eval(c));
        }
        best
    }

    /// `max |p|` over `[lo, hi]`.
    pub fn max_abs_on(&self, lo: f64, hi: f64) -> f64 {
        self.max_on(lo, hi).max(-self.min_on(lo, hi))
    }

    pub fn min_on(&self, lo: f64, hi: f64) -> f64 {
        -self.scale(-1.0).max_on(lo, hi)
    }

    /// Sign changes of `p'` inside `(lo, hi)`; roots of even multiplicity are
    /// skipped since they are not extrema.
    fn critical_points(&self, lo: f64, hi: f64) -> Vec<f64> {
        let d = self.derivative();
        if d.degree().unwrap_or(0) == 0 {
            return Vec::new();
        }
        let n = 64 * (d.degree().unwrap() + 1);
        let h = (hi - lo) / n as f64;
        let mut out = Vec::new();
        let mut a = lo;
        let mut fa = d.eval(a);
        for i in 1..=n {
            let b = lo + i as f64 * h;
            let fb = d.eval(b);
            if fa == 0.0 {
                out.push(a);
            } else if fa * fb < 0.0 {
                out.push(d.bisect(a, b, 1e-14));
            }
            a = b;
            fa = fb;
        }
        out
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut c = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_roots(roots: &[f64]) -> Poly {
        roots.iter().fold(Poly::constant(1.0), |acc, r| &acc * &Poly::new(vec![-r, 1.0]))
    }

    #[test]
    fn roots_of_product_of_linear_factors() {
        let p = from_roots(&[0.1, 0.5, 0.9]).scale(-3.0);
        let roots = p.real_roots(0.0, 1.0, 1e-13).unwrap();
        assert_eq!(roots.len(), 3);
        for (r, e) in roots.iter().zip([0.1, 0.5, 0.9]) {
            assert!((r - e).abs() < 1e-12);
        }
    }

    #[test]
    fn double_root_is_refused() {
        let p = from_roots(&[0.3, 0.3, 0.8]);
        assert!(p.real_roots(0.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn roots_outside_interval_are_ignored() {
        let p = from_roots(&[-2.0, 0.25, 3.0]);
        assert_eq!(p.real_roots(0.0, 1.0, 1e-12).unwrap().len(), 1);
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let p = Poly::new(vec![1.0, -2.0, 0.5, 4.0]);
        let q = p.antiderivative().derivative();
        assert_eq!(p, q);
    }

    #[test]
    fn affine_composition() {
        // (2x - 1)^2 = 4x^2 - 4x + 1
        let sq = Poly::new(vec![0.0, 0.0, 1.0]).compose_affine(2.0, -1.0);
        assert_eq!(sq.coeffs(), &[1.0, -4.0, 4.0]);
    }

    #[test]
    fn extrema_on_interval() {
        let p = Poly::new(vec![0.0, 1.0, -1.0]); // x - x^2, max 1/4 at 1/2
        assert!((p.max_on(0.0, 1.0) - 0.25).abs() < 1e-14);
        assert!(p.min_on(0.0, 1.0).abs() < 1e-14);
    }
}
