//! Macroscopic reaction ingredients derived from a cylinder rate.
//!
//! `B(ρ) = E_ρ[(1 - η(0)) c]` and `D(ρ) = E_ρ[η(0) c]` under the Bernoulli
//! product measure of density `ρ`; `F = B - D` drives the hydrodynamic
//! equation and `V` with `V' = -F` is its potential.

use num_traits::Num;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::model::CylinderRate;
use crate::poly::Poly;
use crate::{Error, Result};

/// Tolerance to which roots of `F` are located.
pub const ROOT_TOL: f64 = 1e-12;

fn poly_mul<T: Num + Clone>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}

fn poly_add_assign<T: Num + Clone>(acc: &mut Vec<T>, p: &[T]) {
    if acc.len() < p.len() {
        acc.resize(p.len(), T::zero());
    }
    for (a, b) in acc.iter_mut().zip(p) {
        *a = a.clone() + b.clone();
    }
}

/// `ρ^ones (1 - ρ)^zeros` in the monomial basis.
fn bernstein_monomial<T: Num + Clone>(ones: usize, zeros: usize) -> Vec<T> {
    let mut p = vec![T::one()];
    for _ in 0..ones {
        p = poly_mul(&p, &[T::zero(), T::one()]);
    }
    for _ in 0..zeros {
        p = poly_mul(&p, &[T::one(), T::zero() - T::one()]);
    }
    p
}

/// Birth and death polynomials in any numeric type, by enumeration of the
/// `2^(2r+1)` local patterns weighted by `ρ^{#ones} (1-ρ)^{#zeros}`.
///
/// Returns ascending coefficient vectors `(B, D)`.
pub fn pattern_polynomials<T: Num + Clone>(radius: usize, table: &[T]) -> (Vec<T>, Vec<T>) {
    let (b, d, _, _) = pattern_polynomials_factored(radius, table);
    (b, d)
}

/// Like [`pattern_polynomials`], additionally returning `B̂` and `D̂` with
/// `B = (1-ρ) B̂` and `D = ρ D̂`.
pub fn pattern_polynomials_factored<T: Num + Clone>(radius: usize, table: &[T]) -> (Vec<T>, Vec<T>, Vec<T>, Vec<T>) {
    let w = 2 * radius + 1;
    assert_eq!(table.len(), 1 << w, "table size does not match radius");
    let centre_bit = radius; // bit position of η(0) counted from the least significant end
    let mut b = vec![T::zero()];
    let mut d = vec![T::zero()];
    let mut b_hat = vec![T::zero()];
    let mut d_hat = vec![T::zero()];
    for (idx, c) in table.iter().enumerate() {
        let ones = idx.count_ones() as usize;
        let zeros = w - ones;
        let occupied = (idx >> centre_bit) & 1 == 1;
        let scaled = |p: Vec<T>| p.into_iter().map(|x| x * c.clone()).collect::<Vec<T>>();
        if occupied {
            poly_add_assign(&mut d, &scaled(bernstein_monomial(ones, zeros)));
            poly_add_assign(&mut d_hat, &scaled(bernstein_monomial(ones - 1, zeros)));
        } else {
            poly_add_assign(&mut b, &scaled(bernstein_monomial(ones, zeros)));
            poly_add_assign(&mut b_hat, &scaled(bernstein_monomial(ones, zeros - 1)));
        }
    }
    (b, d, b_hat, d_hat)
}

/// Rate table of a nearest-neighbour triple in any numeric type, in the
/// pattern order used by [`CylinderRate`].
pub fn triple_table<T: Num + Clone>(a0: T, a1: T, a2: T) -> Vec<T> {
    (0..8)
        .map(|idx| {
            let (l, c, r) = ((idx >> 2) & 1, (idx >> 1) & 1, idx & 1);
            if l != r {
                a2.clone()
            } else if l == c {
                a1.clone()
            } else {
                a0.clone()
            }
        })
        .collect()
}

/// `(a0, a1, a2)` realizing the cubic `(𝔟-𝔞)(2ρ-1) - 𝔟(2ρ-1)³` with the
/// smallest admissible `a2 = 𝔞 + 2𝔟`.
pub fn chafee_infante_triple<T: Num + Clone>(frak_a: T, frak_b: T) -> (T, T, T) {
    let two = T::one() + T::one();
    let a2 = frak_a.clone() + two.clone() * frak_b.clone();
    let a0 = two.clone() * a2.clone() + two.clone() * two * frak_b - frak_a.clone();
    (a0, frak_a, a2)
}

/// `B`, `D`, `F = B - D`, the potential `V` and related data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionPolynomials {
    pub b: Poly,
    pub d: Poly,
    pub f: Poly,
    /// `V' = -F`, normalized by `V(1/2) = 0`.
    pub v: Poly,
    pub b_hat: Poly,
    pub d_hat: Poly,
    /// `C_F = max_{[0,1]} |F'|`.
    pub lipschitz_f: f64,
}

impl ReactionPolynomials {
    /// Builds the polynomials directly from `B` and `D`, with `B̂`, `D̂`
    /// obtained by exact division by `1 - ρ` and `ρ`.
    pub fn from_bd(b: Poly, d: Poly) -> Result<Self> {
        let (b_hat, rb) = b.div_rem(&Poly::new(vec![1.0, -1.0]));
        let (d_hat, rd) = d.div_rem(&Poly::x());
        let scale = b.coeffs().iter().chain(d.coeffs()).fold(1.0_f64, |m, c| m.max(c.abs()));
        if rb.coeffs().iter().chain(rd.coeffs()).any(|c| c.abs() > 1e-12 * scale) {
            return Err(Error::Structure("B(1) and D(0) must vanish".into()));
        }
        Self::assemble(b, d, b_hat, d_hat)
    }

    fn assemble(b: Poly, d: Poly, b_hat: Poly, d_hat: Poly) -> Result<Self> {
        let f = &b - &d;
        let prim = f.antiderivative().scale(-1.0);
        let v = &prim - &Poly::constant(prim.eval(0.5));
        let lipschitz_f = f.derivative().max_abs_on(0.0, 1.0);
        let p = Self { b, d, f, v, b_hat, d_hat, lipschitz_f };
        p.validate()?;
        Ok(p)
    }

    /// Checks `B̂, D̂ > 0` on `[0,1]` and `F(0) > 0 > F(1)`.
    pub fn validate(&self) -> Result<()> {
        let min_b = self.b_hat.min_on(0.0, 1.0);
        let min_d = self.d_hat.min_on(0.0, 1.0);
        if !(min_b > 0.0) {
            return Err(Error::Structure(format!("B̂ is not positive on [0,1] (min {min_b})")));
        }
        if !(min_d > 0.0) {
            return Err(Error::Structure(format!("D̂ is not positive on [0,1] (min {min_d})")));
        }
        let (f0, f1) = (self.f.eval(0.0), self.f.eval(1.0));
        if !(f0 > 0.0 && f1 < 0.0) {
            return Err(Error::Structure(format!("need F(0) > 0 > F(1), got {f0}, {f1}")));
        }
        Ok(())
    }

    pub fn b(&self, rho: f64) -> f64 {
        self.b.eval(rho)
    }

    pub fn d(&self, rho: f64) -> f64 {
        self.d.eval(rho)
    }

    pub fn f(&self, rho: f64) -> f64 {
        self.f.eval(rho)
    }

    pub fn v(&self, rho: f64) -> f64 {
        self.v.eval(rho)
    }

    /// `F'`.
    pub fn f_prime(&self) -> Poly {
        self.f.derivative()
    }
}

/// Exact polynomial expectations of the flip rate under product measures.
pub fn bd_polynomials(rates: &CylinderRate) -> Result<ReactionPolynomials> {
    let (b, d, b_hat, d_hat) = pattern_polynomials_factored(rates.radius(), rates.table());
    ReactionPolynomials::assemble(Poly::new(b), Poly::new(d), Poly::new(b_hat), Poly::new(d_hat))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalKind {
    /// Local minimum of `V`: `F' < 0`, an attractor of `ẋ = F(x)`.
    Minimum,
    /// Local maximum of `V`: `F' > 0`, a repeller.
    Maximum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub value: f64,
    pub kind: CriticalKind,
    /// `F'` at the root, i.e. `-V''`.
    pub slope: f64,
}

impl CriticalPoint {
    pub fn is_attractor(&self) -> bool {
        self.kind == CriticalKind::Minimum
    }
}

/// Roots of `F` in `[0,1]`, classified into wells and barriers of `V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellStructure {
    pub points: Vec<CriticalPoint>,
}

impl WellStructure {
    pub fn roots(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// `m_1 < ... < m_n`.
    pub fn minima(&self) -> Vec<f64> {
        self.points.iter().filter(|p| p.kind == CriticalKind::Minimum).map(|p| p.value).collect()
    }

    /// `M_1 < ... < M_{n-1}`.
    pub fn maxima(&self) -> Vec<f64> {
        self.points.iter().filter(|p| p.kind == CriticalKind::Maximum).map(|p| p.value).collect()
    }

    pub fn attractors(&self) -> Vec<bool> {
        self.points.iter().map(CriticalPoint::is_attractor).collect()
    }
}

/// Finds and classifies all roots of `F` in `[0,1]`.
pub fn classify_wells(poly: &ReactionPolynomials) -> Result<WellStructure> {
    if poly.f.degree().unwrap_or(0) < 1 {
        return Err(Error::InvalidArgument("F must have degree at least one".into()));
    }
    let roots = poly.f.real_roots(0.0, 1.0, ROOT_TOL).map_err(|e| Error::DegenerateRoot(e.near))?;
    let fp = poly.f_prime();
    let mut points = Vec::with_capacity(roots.len());
    for r in roots {
        let r = polish_root(&poly.f, &fp, r);
        let slope = fp.eval(r);
        let kind = if slope < 0.0 {
            CriticalKind::Minimum
        } else if slope > 0.0 {
            CriticalKind::Maximum
        } else {
            return Err(Error::DegenerateRoot(r));
        };
        points.push(CriticalPoint { value: r, kind, slope });
    }
    let ws = WellStructure { points };
    let alternates = ws.points.windows(2).all(|w| w[0].kind != w[1].kind);
    let ends_in_wells = ws.points.first().map(|p| p.kind) == Some(CriticalKind::Minimum)
        && ws.points.last().map(|p| p.kind) == Some(CriticalKind::Minimum);
    if !alternates || !ends_in_wells {
        return Err(Error::Structure("minima and maxima of V do not interlace".into()));
    }
    Ok(ws)
}

/// A few Newton steps, kept only while they do not increase `|F|`.
fn polish_root(f: &Poly, fp: &Poly, mut r: f64) -> f64 {
    for _ in 0..4 {
        let d = fp.eval(r);
        if d == 0.0 {
            break;
        }
        let next = r - f.eval(r) / d;
        if f.eval(next).abs() <= f.eval(r).abs() && (next - r).abs() < 10.0 * ROOT_TOL {
            r = next;
        } else {
            break;
        }
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concavity {
    pub b_concave: bool,
    pub d_concave: bool,
    /// `3a1 + a0 ≤ 4a2 ≤ 4a0`, available when the rate is a nearest-neighbour
    /// triple.
    pub triple_criterion: Option<bool>,
}

/// Recovers `(a0, a1, a2)` when the table has the nearest-neighbour triple
/// structure.
pub fn as_triple(rates: &CylinderRate) -> Option<(f64, f64, f64)> {
    if rates.radius() != 1 {
        return None;
    }
    let t = rates.table();
    let (a0, a1, a2) = (t[0b010], t[0b000], t[0b001]);
    (triple_table(a0, a1, a2) == t).then_some((a0, a1, a2))
}

fn concave_on_unit(p: &Poly) -> bool {
    let second = p.derivative().derivative();
    let scale = p.coeffs().iter().fold(1.0_f64, |m, c| m.max(c.abs()));
    second.max_on(0.0, 1.0) <= 1e-12 * scale
}

pub fn concavity_check(poly: &ReactionPolynomials, rates: Option<&CylinderRate>) -> Concavity {
    let triple_criterion =
        rates.and_then(as_triple).map(|(a0, a1, a2)| 3.0 * a1 + a0 <= 4.0 * a2 && 4.0 * a2 <= 4.0 * a0);
    Concavity { b_concave: concave_on_unit(&poly.b), d_concave: concave_on_unit(&poly.d), triple_criterion }
}

/// Chafee–Infante data: jump rates and the potential `(b/4)(2ρ-1)⁴ - (a/2)(2ρ-1)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChafeeInfante {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a: f64,
    pub b: f64,
    /// `32 π² a`, the bifurcation parameter of the rescaled equation.
    pub lambda: f64,
}

impl ChafeeInfante {
    pub fn rates(&self) -> Result<CylinderRate> {
        CylinderRate::from_triple(self.a0, self.a1, self.a2)
    }

    /// Minima `ρ± = (1 ± √(a/b)) / 2`, returned as `(ρ-, ρ+)`.
    pub fn wells(&self) -> (f64, f64) {
        let s = (self.a / self.b).sqrt();
        (0.5 * (1.0 - s), 0.5 * (1.0 + s))
    }
}

/// The cubic `(𝔟-𝔞)(2ρ-1) - 𝔟(2ρ-1)³`.
pub fn chafee_infante_cubic(frak_a: f64, frak_b: f64) -> Poly {
    let u = Poly::new(vec![-1.0, 2.0]);
    let u3 = &(&u * &u) * &u;
    &u.scale(frak_b - frak_a) - &u3.scale(frak_b)
}

pub fn chafee_infante_params(frak_a: f64, frak_b: f64, a2_choice: Option<f64>) -> Result<ChafeeInfante> {
    if !(0.0 < frak_a && frak_a < frak_b) {
        return Err(Error::InvalidArgument(format!("need 0 < 𝔞 < 𝔟, got ({frak_a}, {frak_b})")));
    }
    let floor = frak_a + 2.0 * frak_b;
    let a2 = a2_choice.unwrap_or(floor);
    if a2 < floor {
        return Err(Error::InvalidArgument(format!("a2 = {a2} is below 𝔞 + 2𝔟 = {floor}")));
    }
    let a0 = 2.0 * a2 + 4.0 * frak_b - frak_a;
    let a = (frak_b - frak_a) / 2.0;
    let params = ChafeeInfante { a0, a1: frak_a, a2, a, b: frak_b / 2.0, lambda: 32.0 * PI * PI * a };
    let poly = bd_polynomials(&params.rates()?)?;
    let target = chafee_infante_cubic(frak_a, frak_b);
    let scale = a0.max(a2);
    for i in 0..=3 {
        if (poly.f.coeff(i) - target.coeff(i)).abs() > 1e-12 * scale {
            return Err(Error::Structure(format!(
                "F coefficient {i} is {} instead of {}",
                poly.f.coeff(i),
                target.coeff(i)
            )));
        }
    }
    Ok(params)
}
