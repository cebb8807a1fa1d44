//! The dynamical rate functional on discretized paths.
//!
//! Space uses the periodic grid with forward differences `∇`, the symmetric
//! second difference `Δ = -∇ᵀ∇` and face mobilities
//! `χ_{j+½} = (χ(ρ_j) + χ(ρ_{j+1})) / 2`. Time is staggered: test fields
//! and `H` live on the intervals of the path, the time derivative is the
//! increment over an interval and every other term is evaluated at the
//! interval midpoint `(ρ_k + ρ_{k+1}) / 2`. A centred derivative on the
//! nodes would be blind to odd-even oscillations in time, which a path
//! optimizer exploits. With these choices the discrete `J_{T,G}` is concave
//! in `G`, its maximizer solves the discrete `H`-equation and its maximum
//! equals the discrete closed formula for `I_T`.

use serde::{Deserialize, Serialize};

use crate::linalg::{periodic_laplacian, CyclicTridiagonal};
use crate::pde::DensityPath;
use crate::reaction::ReactionPolynomials;
use crate::{Error, Result};

/// A real field on the intervals of a path, sampled at their midpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestField {
    dt: f64,
    values: Vec<Vec<f64>>,
}

impl TestField {
    pub fn new(dt: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|s| s.len() != values[0].len()) {
            return Err(Error::Mismatch("test field slices differ in length".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("test field has non-finite values".into()));
        }
        Ok(Self { dt, values })
    }

    pub fn zeros_like(path: &DensityPath) -> Self {
        Self { dt: path.dt(), values: vec![vec![0.0; path.grid_size()]; path.n_intervals()] }
    }

    pub fn from_fn(path: &DensityPath, f: impl Fn(f64, f64) -> f64) -> Self {
        let m = path.grid_size();
        let values = (0..path.n_intervals())
            .map(|k| (0..m).map(|j| f((k as f64 + 0.5) * path.dt(), j as f64 / m as f64)).collect())
            .collect();
        Self { dt: path.dt(), values }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn check(&self, path: &DensityPath) -> Result<()> {
        if self.values.len() != path.n_intervals()
            || self.values[0].len() != path.grid_size()
            || (self.dt - path.dt()).abs() > 1e-12 * path.dt()
        {
            return Err(Error::Mismatch("test field and path have different discretizations".into()));
        }
        Ok(())
    }
}

/// Trapezoid weight of slice `k` out of `0..=n`.
fn time_weight(k: usize, n: usize, dt: f64) -> f64 {
    if k == 0 || k == n {
        0.5 * dt
    } else {
        dt
    }
}

/// `(ρ_k + ρ_{k+1}) / 2` for every interval.
fn midpoints(path: &DensityPath) -> Vec<Vec<f64>> {
    path.slices()
        .windows(2)
        .map(|w| w[0].values().iter().zip(w[1].values()).map(|(a, b)| 0.5 * (a + b)).collect())
        .collect()
}

fn forward_diff(x: &[f64]) -> Vec<f64> {
    let m = x.len();
    (0..m).map(|j| (x[(j + 1) % m] - x[j]) * m as f64).collect()
}

fn face_mobility(rho: &[f64]) -> Vec<f64> {
    let m = rho.len();
    let chi = |r: f64| r * (1.0 - r);
    (0..m).map(|j| 0.5 * (chi(rho[j]) + chi(rho[(j + 1) % m]))).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

/// `w = ∂_t ρ - ½ Δρ` on every interval.
pub fn drift_defect(path: &DensityPath) -> Vec<Vec<f64>> {
    let dt = path.dt();
    path.slices()
        .windows(2)
        .zip(midpoints(path))
        .map(|(w, mid)| {
            let lap = periodic_laplacian(&mid);
            w[1].values().iter().zip(w[0].values()).zip(&lap).map(|((b, a), l)| (b - a) / dt - 0.5 * l).collect()
        })
        .collect()
}

/// `Q_T = ∫₀ᵀ ‖∇ρ_t‖₂² dt`.
pub fn energy_qt(path: &DensityPath) -> f64 {
    let n = path.n_intervals();
    path.slices()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let g = forward_diff(s.values());
            time_weight(k, n, path.dt()) * dot(&g, &g)
        })
        .sum()
}

/// `∫₀ᵀ ∫ |∇ρ|² / χ(ρ)`, with face mobilities; infinite when a face
/// mobility vanishes next to a nonzero gradient.
pub fn energy_e(path: &DensityPath) -> f64 {
    let n = path.n_intervals();
    path.slices()
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let g = forward_diff(s.values());
            let chi = face_mobility(s.values());
            let e: f64 = g
                .iter()
                .zip(&chi)
                .map(|(g, c)| {
                    if *g == 0.0 {
                        0.0
                    } else if *c <= 0.0 {
                        f64::INFINITY
                    } else {
                        g * g / c
                    }
                })
                .sum::<f64>()
                / g.len() as f64;
            time_weight(k, n, path.dt()) * e
        })
        .sum()
}

/// `J_{T,G}` evaluated literally, with the time derivative moved onto `G`
/// by summation by parts:
/// `⟨ρ_T, G_T⟩ - ⟨ρ_0, G_0⟩ - ∫⟨ρ, ∂_t G⟩ - ∫⟨ρ, ½ΔG⟩ - ½∫⟨χ(ρ), (∇G)²⟩
///  - ∫⟨B(ρ), e^G - 1⟩ - ∫⟨D(ρ), e^{-G} - 1⟩`.
pub fn j_functional(path: &DensityPath, g: &TestField, poly: &ReactionPolynomials) -> Result<f64> {
    g.check(path)?;
    let n = path.n_intervals();
    let rho: Vec<&[f64]> = path.slices().iter().map(|s| s.values()).collect();
    let gs: Vec<&[f64]> = g.values.iter().map(Vec::as_slice).collect();
    let mut total = dot(rho[n], gs[n - 1]) - dot(rho[0], gs[0]);
    for k in 1..n {
        let dg: Vec<f64> = gs[k].iter().zip(gs[k - 1]).map(|(a, b)| a - b).collect();
        total -= dot(rho[k], &dg);
    }
    for (k, mid) in midpoints(path).iter().enumerate() {
        let lap = periodic_laplacian(gs[k]);
        let grad = forward_diff(gs[k]);
        let chi = face_mobility(mid);
        let quad: f64 = chi.iter().zip(&grad).map(|(c, d)| c * d * d).sum::<f64>() / grad.len() as f64;
        let react: f64 =
            mid.iter().zip(gs[k]).map(|(&r, &h)| poly.b(r) * h.exp_m1() + poly.d(r) * (-h).exp_m1()).sum::<f64>()
                / grad.len() as f64;
        total -= path.dt() * (0.5 * dot(mid, &lap) + 0.5 * quad + react);
    }
    Ok(total)
}

/// `G(w, ρ) = log[(w + √(w² + 4BD)) / (2B)]`, the maximizer of
/// `wG - B(e^G - 1) - D(e^{-G} - 1)`.
pub fn pointwise_maximizer(w: f64, rho: f64, poly: &ReactionPolynomials) -> f64 {
    pointwise_maximizer_bd(w, poly.b(rho), poly.d(rho))
}

pub fn pointwise_maximizer_bd(w: f64, b: f64, d: f64) -> f64 {
    let s = (w * w + 4.0 * b * d).sqrt();
    if w >= 0.0 {
        ((w + s) / (2.0 * b)).ln()
    } else {
        // w + s = 4BD / (s - w) avoids cancellation.
        (2.0 * d / (s - w)).ln()
    }
}

/// `wG - B(e^G - 1) - D(e^{-G} - 1)`.
pub fn pointwise_objective(w: f64, b: f64, d: f64, g: f64) -> f64 {
    w * g - b * g.exp_m1() - d * (-g).exp_m1()
}

/// Newton settings for the `H`-equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100, max_halvings: 60 }
    }
}

/// Solution of the `H`-equation with its largest residual.
#[derive(Debug, Clone, PartialEq)]
pub struct HSolution {
    pub h: TestField,
    pub max_residual: f64,
}

fn check_interior(path: &DensityPath) -> Result<()> {
    for (k, s) in path.slices().iter().enumerate() {
        if let Some((j, v)) = s.values().iter().enumerate().find(|(_, v)| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::InvalidArgument(format!("path touches the boundary: slice {k}, node {j}, value {v}")));
        }
    }
    Ok(())
}

struct SliceProblem<'a> {
    w: &'a [f64],
    b: Vec<f64>,
    d: Vec<f64>,
    chi: Vec<f64>,
}

impl SliceProblem<'_> {
    fn m(&self) -> usize {
        self.w.len()
    }

    /// `w - [-div(χ∇H) + B e^H - D e^{-H}]`, the gradient of the concave
    /// slice objective up to the factor `1/M`.
    fn residual(&self, h: &[f64]) -> Vec<f64> {
        let m = self.m();
        let grad = forward_diff(h);
        let flux: Vec<f64> = self.chi.iter().zip(&grad).map(|(c, g)| c * g).collect();
        (0..m)
            .map(|j| {
                let div = (flux[j] - flux[(j + m - 1) % m]) * m as f64;
                self.w[j] + div - self.b[j] * h[j].exp() + self.d[j] * (-h[j]).exp()
            })
            .collect()
    }

    fn objective(&self, h: &[f64]) -> f64 {
        let grad = forward_diff(h);
        let quad: f64 = self.chi.iter().zip(&grad).map(|(c, g)| c * g * g).sum();
        let rest: f64 = (0..self.m()).map(|j| pointwise_objective(self.w[j], self.b[j], self.d[j], h[j])).sum();
        (rest - 0.5 * quad) / self.m() as f64
    }

    fn solve(&self, opts: &NewtonOptions) -> Result<(Vec<f64>, f64)> {
        let m = self.m();
        let m2 = (m * m) as f64;
        let mut h: Vec<f64> = (0..m).map(|j| pointwise_maximizer_bd(self.w[j], self.b[j], self.d[j])).collect();
        let scale = self.w.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        let tol = opts.tol * scale;
        let mut res = self.residual(&h);
        let mut norm = res.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let mut trace = Vec::new();
        for _ in 0..opts.max_iter {
            if norm < tol {
                return Ok((h, norm));
            }
            // Negative Hessian: -div(χ∇·) + diag(B e^H + D e^{-H}).
            let mut lower = vec![0.0; m];
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            for j in 0..m {
                let cl = self.chi[(j + m - 1) % m] * m2;
                let cr = self.chi[j] * m2;
                lower[j] = -cl;
                upper[j] = -cr;
                diag[j] = cl + cr + self.b[j] * h[j].exp() + self.d[j] * (-h[j]).exp();
            }
            let step = CyclicTridiagonal::new(&lower, &diag, &upper)?.solve(&res);
            let f0 = self.objective(&h);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..=opts.max_halvings {
                let trial: Vec<f64> = h.iter().zip(&step).map(|(a, s)| a + t * s).collect();
                let f1 = self.objective(&trial);
                let r = self.residual(&trial);
                let n1 = r.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                // Near the optimum objective increments drown in rounding;
                // a smaller residual is then the better witness.
                if f1.is_finite() && n1.is_finite() && (f1 > f0 || n1 < norm) {
                    h = trial;
                    res = r;
                    norm = n1;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            trace.push(t);
            if !accepted {
                break;
            }
        }
        if norm < tol {
            return Ok((h, norm));
        }
        Err(Error::NoConvergence {
            iterations: trace.len(),
            detail: format!("H-equation residual {norm:e}; damping factors {trace:?}"),
        })
    }
}

/// Solves `-∇(χ∇H) + B e^H - D e^{-H} = ∂_t ρ - ½ Δρ` interval by interval.
pub fn solve_h(path: &DensityPath, poly: &ReactionPolynomials, opts: &NewtonOptions) -> Result<HSolution> {
    check_interior(path)?;
    let w = drift_defect(path);
    let mut values = Vec::with_capacity(w.len());
    let mut max_residual = 0.0_f64;
    for (k, rho) in midpoints(path).iter().enumerate() {
        let prob = SliceProblem {
            w: &w[k],
            b: rho.iter().map(|&r| poly.b(r)).collect(),
            d: rho.iter().map(|&r| poly.d(r)).collect(),
            chi: face_mobility(rho),
        };
        let (h, r) = prob.solve(opts)?;
        max_residual = max_residual.max(r);
        values.push(h);
    }
    Ok(HSolution { h: TestField { dt: path.dt(), values }, max_residual })
}

/// Integrand of the closed formula on one slice.
fn rate_density(rho: &[f64], h: &[f64], poly: &ReactionPolynomials) -> f64 {
    let grad = forward_diff(h);
    let chi = face_mobility(rho);
    let quad: f64 = chi.iter().zip(&grad).map(|(c, g)| c * g * g).sum();
    let react: f64 = rho
        .iter()
        .zip(h)
        .map(|(&r, &x)| {
            let (e, ei) = (x.exp(), (-x).exp());
            poly.b(r) * (1.0 - e + x * e) + poly.d(r) * (1.0 - ei - x * ei)
        })
        .sum();
    (0.5 * quad + react) / rho.len() as f64
}

/// `I_T` with its optimal `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEvaluation {
    pub value: f64,
    pub h: Option<HSolution>,
}

/// `I_T(ρ) = ½∫⟨χ(ρ), (∇H)²⟩ + ∫⟨B, 1 - e^H + He^H⟩ + ∫⟨D, 1 - e^{-H} - He^{-H}⟩`.
///
/// Paths touching `{0, 1}` get `+∞`.
pub fn rate_i(path: &DensityPath, poly: &ReactionPolynomials) -> Result<RateEvaluation> {
    rate_i_with(path, poly, &NewtonOptions::default())
}

pub fn rate_i_with(path: &DensityPath, poly: &ReactionPolynomials, opts: &NewtonOptions) -> Result<RateEvaluation> {
    if check_interior(path).is_err() {
        return Ok(RateEvaluation { value: f64::INFINITY, h: None });
    }
    let sol = solve_h(path, poly, opts)?;
    let value = midpoints(path).iter().zip(sol.h.values()).map(|(mid, h)| path.dt() * rate_density(mid, h, poly)).sum();
    Ok(RateEvaluation { value, h: Some(sol) })
}

/// `∂I_T / ∂ρ_{k,j}` for every slice, by the envelope theorem: the partial
/// derivatives of `J_{T,G}` in `ρ` at `G = H`.
pub fn rate_gradient(path: &DensityPath, h: &TestField, poly: &ReactionPolynomials) -> Result<Vec<Vec<f64>>> {
    h.check(path)?;
    let n = path.n_intervals();
    let m = path.grid_size();
    let dt = path.dt();
    let hs = h.values();
    let bp = poly.b.derivative();
    let dp = poly.d.derivative();
    let mut grad = vec![vec![0.0; m]; n + 1];
    let inv_m = 1.0 / m as f64;
    for (k, mid) in midpoints(path).iter().enumerate() {
        let lap = periodic_laplacian(&hs[k]);
        let g = forward_diff(&hs[k]);
        for j in 0..m {
            // Increment term ⟨ρ_{k+1} - ρ_k, H_k⟩.
            grad[k + 1][j] += inv_m * hs[k][j];
            grad[k][j] -= inv_m * hs[k][j];
            let r = mid[j];
            let x = hs[k][j];
            let chi_p = 1.0 - 2.0 * r;
            let g2 = g[j] * g[j] + g[(j + m - 1) % m] * g[(j + m - 1) % m];
            let local =
                dt * inv_m * (-0.5 * lap[j] - 0.25 * chi_p * g2 - bp.eval(r) * x.exp_m1() - dp.eval(r) * (-x).exp_m1());
            grad[k][j] += 0.5 * local;
            grad[k + 1][j] += 0.5 * local;
        }
    }
    Ok(grad)
}

/// Rate evaluation report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct RateReport {
    pub T: f64,
    pub dt: f64,
    pub M: usize,
    pub I_T: f64,
    pub Q_T: f64,
    pub max_residual: f64,
}

pub fn rate_report(path: &DensityPath, poly: &ReactionPolynomials) -> Result<RateReport> {
    let eval = rate_i(path, poly)?;
    Ok(RateReport {
        T: path.horizon(),
        dt: path.dt(),
        M: path.grid_size(),
        I_T: eval.value,
        Q_T: energy_qt(path),
        max_residual: eval.h.map_or(f64::NAN, |h| h.max_residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CylinderRate;
    use crate::pde::{hydro_solve, DensityField, HydroOptions};
    use crate::reaction::bd_polynomials;
    use std::f64::consts::PI;

    fn ci() -> ReactionPolynomials {
        bd_polynomials(&CylinderRate::from_triple(17.0, 1.0, 5.0).unwrap()).unwrap()
    }

    fn wavy_path() -> DensityPath {
        DensityPath::from_fn(0.5, 20, 32, |t, th| {
            0.5 + 0.2 * (2.0 * PI * th).sin() * (1.0 - t) + 0.1 * t * (4.0 * PI * th).cos()
        })
        .unwrap()
    }

    #[test]
    fn zero_test_field_gives_zero() {
        let path = wavy_path();
        assert_eq!(j_functional(&path, &TestField::zeros_like(&path), &ci()).unwrap(), 0.0);
    }

    #[test]
    fn energy_of_single_mode() {
        let eps = 0.1;
        let m = 256;
        let path = DensityPath::from_fn(2.0, 4, m, |_, th| 0.5 + eps * 2f64.sqrt() * (2.0 * PI * th).cos()).unwrap();
        let exact = 2.0 * eps * eps * (2.0 * PI).powi(2);
        assert!((energy_qt(&path) - exact).abs() < 1e-3 * exact);
        let flat = DensityPath::from_fn(1.0, 4, m, |t, _| 0.3 + 0.1 * t).unwrap();
        assert_eq!(energy_qt(&flat), 0.0);
    }

    #[test]
    fn maximizer_examples() {
        let p = ci();
        for r in [0.1, 0.3, 0.5, 0.77] {
            assert!(pointwise_maximizer(p.f(r), r, &p).abs() < 1e-12);
        }
        let (b, d) = (0.7, 0.7);
        for w in [-3.0, -0.2, 0.4, 5.0] {
            assert!((pointwise_maximizer_bd(-w, b, d) + pointwise_maximizer_bd(w, b, d)).abs() < 1e-14);
        }
    }

    #[test]
    fn duality_holds_at_h() {
        let p = ci();
        let path = wavy_path();
        let eval = rate_i(&path, &p).unwrap();
        let h = eval.h.unwrap();
        let j = j_functional(&path, &h.h, &p).unwrap();
        assert!((j - eval.value).abs() < 1e-9 * eval.value.max(1.0), "{j} vs {}", eval.value);
        let g = TestField::from_fn(&path, |t, th| 0.3 * (2.0 * PI * th).cos() + t);
        assert!(j_functional(&path, &g, &p).unwrap() <= eval.value);
    }

    #[test]
    fn hydro_path_has_zero_cost_and_h() {
        let p = ci();
        let g = DensityField::from_fn(64, |th| 0.5 + 0.3 * (2.0 * PI * th).sin()).unwrap();
        let opts = HydroOptions { save_every: 10, ..HydroOptions::with_dt(1e-4) };
        let path = hydro_solve(&g, 0.5, &p, &opts).unwrap();
        let eval = rate_i(&path, &p).unwrap();
        assert!(eval.value < 1e-5 * 0.5, "I = {}", eval.value);
    }

    #[test]
    fn boundary_paths_are_infinite() {
        let path = DensityPath::from_fn(1.0, 4, 16, |t, _| t).unwrap();
        assert_eq!(rate_i(&path, &ci()).unwrap().value, f64::INFINITY);
        assert!(solve_h(&path, &ci(), &NewtonOptions::default()).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = ci();
        let path = DensityPath::from_fn(0.4, 8, 16, |t, th| 0.45 + 0.2 * (2.0 * PI * (th + t)).sin()).unwrap();
        let eval = rate_i(&path, &p).unwrap();
        let grad = rate_gradient(&path, &eval.h.unwrap().h, &p).unwrap();
        let eps = 1e-6;
        for (k, j) in [(0, 3), (3, 0), (4, 7), (8, 15)] {
            let perturb = |s: f64| {
                let slices = path
                    .slices()
                    .iter()
                    .enumerate()
                    .map(|(kk, f)| {
                        let mut v = f.values().to_vec();
                        if kk == k {
                            v[j] += s;
                        }
                        DensityField::new(v).unwrap()
                    })
                    .collect();
                rate_i(&DensityPath::new(path.dt(), slices).unwrap(), &p).unwrap().value
            };
            let fd = (perturb(eps) - perturb(-eps)) / (2.0 * eps);
            assert!((fd - grad[k][j]).abs() < 1e-6 * (1.0 + fd.abs()), "({k},{j}): {fd} vs {}", grad[k][j]);
        }
    }
}
