//! Stationary solutions of `½ φ'' + F(φ) = 0` on the unit torus.
//!
//! Constant solutions are the roots of `F`. Non-constant solutions are
//! periodic orbits of the Hamiltonian system `ρ'' = 2 V'(ρ)` around a local
//! maximum `M_j` of `V`, with period `1/m`. They are found by inverting the
//! time map and polished by Newton's method on a Fourier pseudo-spectral
//! discretization, where the linearized spectrum is exact for constant
//! profiles.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::linalg::{periodic_laplacian, solve_dense};
use crate::pde::{relax_to_stationary, DensityField, RelaxOptions};
use crate::poly::Poly;
use crate::reaction::{classify_wells, CriticalKind, ReactionPolynomials, WellStructure};
use crate::{fourier, Error, Result};

/// Residual bound every returned profile satisfies.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Default number of grid nodes for stationary profiles.
pub const DEFAULT_GRID: usize = 256;

/// Discretization of `Δ` a profile was computed with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Laplacian {
    /// Periodic second difference, as used by the time-dependent solvers.
    FiniteDifference,
    /// Fourier pseudo-spectral second derivative.
    Spectral,
}

impl Laplacian {
    pub fn apply(self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::FiniteDifference => periodic_laplacian(x),
            Self::Spectral => fourier::laplacian(x),
        }
    }

    pub fn matrix(self, m: usize) -> DMatrix<f64> {
        match self {
            Self::Spectral => fourier::laplacian_matrix(m),
            Self::FiniteDifference => {
                let h2 = (m * m) as f64;
                DMatrix::from_fn(m, m, |i, j| {
                    let d = (i + m - j) % m;
                    if d == 0 {
                        -2.0 * h2
                    } else if d == 1 || d == m - 1 {
                        h2
                    } else {
                        0.0
                    }
                })
            }
        }
    }

    fn gradient(self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Spectral => fourier::derivative(x),
            Self::FiniteDifference => {
                let m = x.len();
                (0..m).map(|j| 0.5 * m as f64 * (x[(j + 1) % m] - x[(j + m - 1) % m])).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    StableConstant,
    UnstableConstant,
    Nonconstant,
}

/// A stationary profile representing one translation family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryProfile {
    pub field: DensityField,
    pub kind: ProfileKind,
    /// Number of periods on the torus, 0 for constants.
    pub periods: usize,
    pub family_id: usize,
    pub laplacian: Laplacian,
    /// Index of the local maximum of `V` the orbit winds around.
    pub well: Option<usize>,
}

impl StationaryProfile {
    pub fn is_constant(&self) -> bool {
        self.kind != ProfileKind::Nonconstant
    }

    /// `‖½ Δφ + F(φ)‖_∞` with the profile's own discretization.
    pub fn residual(&self, poly: &ReactionPolynomials) -> f64 {
        stationary_residual(self.field.values(), poly, self.laplacian)
    }

    /// Largest `δ` with `δ ≤ φ ≤ 1 - δ`.
    pub fn delta(&self) -> f64 {
        self.field.min().min(1.0 - self.field.max())
    }

    /// The same family on an `m`-node finite-difference grid: resampled and
    /// re-polished so it is an exact discrete equilibrium of the
    /// time-dependent solvers.
    pub fn on_fd_grid(&self, m: usize, poly: &ReactionPolynomials) -> Result<Self> {
        if self.laplacian == Laplacian::FiniteDifference && self.field.grid_size() == m {
            return Ok(self.clone());
        }
        let values = if self.is_constant() {
            vec![self.field.values()[0]; m]
        } else {
            newton_polish(fourier::resample(self.field.values(), m), poly, Laplacian::FiniteDifference)?
        };
        Ok(Self { field: DensityField::new(values)?, laplacian: Laplacian::FiniteDifference, ..self.clone() })
    }
}

pub fn stationary_residual(values: &[f64], poly: &ReactionPolynomials, lap: Laplacian) -> f64 {
    lap.apply(values).iter().zip(values).fold(0.0, |m, (d, &v)| m.max((0.5 * d + poly.f(v)).abs()))
}

/// One constant profile per root of `F`; minima of `V` are stable.
pub fn constant_solutions(poly: &ReactionPolynomials, m: usize) -> Result<Vec<StationaryProfile>> {
    let wells = classify_wells(poly)?;
    wells
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            Ok(StationaryProfile {
                field: DensityField::constant(m, p.value)?,
                kind: match p.kind {
                    CriticalKind::Minimum => ProfileKind::StableConstant,
                    CriticalKind::Maximum => ProfileKind::UnstableConstant,
                },
                periods: 0,
                family_id: i,
                laplacian: Laplacian::Spectral,
                well: None,
            })
        })
        .collect()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// A closed orbit of `½ ρ'' + F(ρ) = 0` inside one well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub p_min: f64,
    pub p_max: f64,
    /// Period `T(E)`.
    pub period: f64,
}

/// The well around the `j`-th local maximum of `V`: `(m_j, M_j, m_{j+1})`.
fn well_bounds(wells: &WellStructure, j: usize) -> Result<(f64, f64, f64)> {
    let maxima = wells.maxima();
    let minima = wells.minima();
    if j >= maxima.len() {
        return Err(Error::InvalidArgument(format!("there are only {} maxima of V", maxima.len())));
    }
    Ok((minima[j], maxima[j], minima[j + 1]))
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// `∫₀ᴸ dx / √(x Q(x))` with `x = L (1 - cos φ)`, which removes the
/// square-root singularity at the turning point.
fn half_period(q: &Poly, length: f64) -> f64 {
    const PANELS: usize = 8;
    let (x, w) = gauss_legendre(24);
    let width = 0.5 * PI / PANELS as f64;
    let mut sum = 0.0;
    for p in 0..PANELS {
        let a = p as f64 * width;
        for (xi, wi) in x.iter().zip(&w) {
            let phi = a + 0.5 * width * (xi + 1.0);
            let xx = length * (1.0 - phi.cos());
            sum += 0.5 * width * wi * (2.0 * length).sqrt() * (0.5 * phi).cos() / q.eval(xx).sqrt();
        }
    }
    sum
}

/// `W(x) / x` for `W(x) = V(p + s x) - V(p)`.
fn quotient(v: &Poly, p: f64, s: f64) -> Poly {
    let shifted = v.compose_affine(s, p);
    Poly::new(shifted.coeffs().iter().skip(1).copied().collect())
}

/// Orbit with energy fraction `s ∈ (0, 1)` between the centre `M_j`
/// (`s → 0`) and the separatrix (`s → 1`).
pub fn orbit(poly: &ReactionPolynomials, wells: &WellStructure, j: usize, s: f64) -> Result<Orbit> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("energy fraction {s} must lie in (0, 1)")));
    }
    let (lo, centre, hi) = well_bounds(wells, j)?;
    let v = |x: f64| poly.v(x);
    let top = v(centre);
    let level = top - s * (top - v(lo).max(v(hi)));
    let p_min = bisect(|x| v(x) - level, lo, centre);
    let level = v(p_min);
    let p_max = bisect(|x| v(x) - level, centre, hi);
    let period = half_period(&quotient(&poly.v, p_min, 1.0), centre - p_min)
        + half_period(&quotient(&poly.v, p_max, -1.0), p_max - centre);
    Ok(Orbit { p_min, p_max, period })
}

/// Period `T(E)` of the orbit with energy fraction `s`.
pub fn time_map(poly: &ReactionPolynomials, wells: &WellStructure, j: usize, s: f64) -> Result<f64> {
    orbit(poly, wells, j, s).map(|o| o.period)
}

/// Zero-amplitude limit `π √2 / √F'(M_j)` of the time map.
pub fn harmonic_period(poly: &ReactionPolynomials, wells: &WellStructure, j: usize) -> Result<f64> {
    let (_, centre, _) = well_bounds(wells, j)?;
    Ok(PI * 2f64.sqrt() / poly.f_prime().eval(centre).sqrt())
}

/// Number of `m ≥ 1` with `m · T_min < 1`.
pub fn admissible_periods(poly: &ReactionPolynomials, wells: &WellStructure, j: usize) -> Result<Vec<usize>> {
    let t_min = harmonic_period(poly, wells, j)?;
    Ok((1..).take_while(|&m| m as f64 * t_min < 1.0).collect())
}

/// `#{m ≥ 1 : m² < λ}` with `λ = 32 π² a`, the literal reading of the
/// rescaled bifurcation condition.
pub fn literal_branch_count(a: f64) -> usize {
    let lambda = 32.0 * PI * PI * a;
    (1..).take_while(|&m| ((m * m) as f64) < lambda).count()
}

/// `#{k ≥ 1 : 4a - 2π²k² > 0}`, the unstable Fourier modes at `1/2`.
pub fn linear_instability_count(a: f64) -> usize {
    (1..).take_while(|&k| 4.0 * a - 2.0 * PI * PI * ((k * k) as f64) > 0.0).count()
}

/// Energy fractions where `T(s) = target`, by scanning and bisection.
fn invert_time_map(poly: &ReactionPolynomials, wells: &WellStructure, j: usize, target: f64) -> Result<Vec<f64>> {
    const SCAN: usize = 400;
    let t0 = harmonic_period(poly, wells, j)?;
    let grid: Vec<f64> = (1..SCAN).map(|i| i as f64 / SCAN as f64).collect();
    let mut out = Vec::new();
    let mut prev = (0.0_f64, t0 - target);
    for &s in &grid {
        let g = time_map(poly, wells, j, s)? - target;
        if (g > 0.0) != (prev.1 > 0.0) {
            let root =
                bisect(|x| time_map(poly, wells, j, x).map(|t| t - target).unwrap_or(f64::NAN), prev.0.max(1e-12), s);
            out.push(root);
        }
        prev = (s, g);
    }
    Ok(out)
}

/// Integrates `ρ'' = -2 F(ρ)` from a maximum at `θ = 0` and samples it on
/// the `m`-node grid.
fn shoot(poly: &ReactionPolynomials, p_max: f64, m: usize) -> Vec<f64> {
    const SUB: usize = 32;
    let h = 1.0 / (m * SUB) as f64;
    let rhs = |y: [f64; 2]| [y[1], -2.0 * poly.f(y[0])];
    let mut y = [p_max, 0.0];
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        out.push(y[0]);
        for _ in 0..SUB {
            let k1 = rhs(y);
            let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
            let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
            let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }
    out
}

/// Newton's method for `½ Δφ + F(φ) = 0`, bordered by `⟨δ, ∇φ⟩ = 0` to fix
/// the translation phase.
pub fn newton_polish(mut phi: Vec<f64>, poly: &ReactionPolynomials, lap: Laplacian) -> Result<Vec<f64>> {
    let m = phi.len();
    let fp = poly.f_prime();
    let base = lap.matrix(m) * 0.5;
    for _ in 0..30 {
        let lphi = lap.apply(&phi);
        let g: Vec<f64> = lphi.iter().zip(&phi).map(|(l, &p)| 0.5 * l + poly.f(p)).collect();
        let res = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if res < 1e-11 {
            return Ok(phi);
        }
        let grad = lap.gradient(&phi);
        let norm = grad.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let mut a = DMatrix::zeros(m + 1, m + 1);
        a.view_mut((0, 0), (m, m)).copy_from(&base);
        for i in 0..m {
            a[(i, i)] += fp.eval(phi[i]);
            a[(i, m)] = grad[i] / norm;
            a[(m, i)] = grad[i] / norm;
        }
        let mut rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        rhs.push(0.0);
        let delta = solve_dense(a, &rhs)?;
        for (p, d) in phi.iter_mut().zip(&delta) {
            *p += d;
        }
    }
    let res = stationary_residual(&phi, poly, lap);
    if res < RESIDUAL_TOL {
        Ok(phi)
    } else {
        Err(Error::NoConvergence { iterations: 30, detail: format!("stationary residual {res:e}") })
    }
}

/// Rotates `x` continuously so that its maximum sits at `θ = 0`.
fn canonicalize(x: &[f64]) -> Vec<f64> {
    let m = x.len();
    let j = (0..m).fold(0, |b, i| if x[i] > x[b] { i } else { b });
    let mut s = j as f64 / m as f64;
    // Refine the location of the maximum on the trigonometric interpolant.
    for _ in 0..20 {
        let d = fourier::shift(&fourier::derivative(x), s)[0];
        let dd = fourier::shift(&fourier::laplacian(x), s)[0];
        if dd >= 0.0 {
            break;
        }
        let step = d / dd;
        s -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    fourier::shift(x, s)
}

/// Non-constant stationary profiles: one representative per admissible
/// `(well, m)` branch.
pub fn nonconstant_solutions(poly: &ReactionPolynomials, m: usize) -> Result<Vec<StationaryProfile>> {
    let wells = classify_wells(poly)?;
    let mut out = Vec::new();
    for j in 0..wells.maxima().len() {
        let (lo, centre, hi) = well_bounds(&wells, j)?;
        for periods in admissible_periods(poly, &wells, j)? {
            if 2 * periods * 4 > m {
                return Err(Error::InvalidArgument(format!("grid of {m} nodes cannot resolve {periods} periods")));
            }
            for s in invert_time_map(poly, &wells, j, 1.0 / periods as f64)? {
                let o = orbit(poly, &wells, j, s)?;
                let guess = shoot(poly, o.p_max, m);
                let phi = canonicalize(&newton_polish(guess, poly, Laplacian::Spectral)?);
                let phi = newton_polish(phi, poly, Laplacian::Spectral)?;
                let field = DensityField::new(phi)?;
                if !(field.min() > lo && field.min() < centre && field.max() > centre && field.max() < hi) {
                    return Err(Error::Structure(format!(
                        "branch m = {periods} left its well: range [{}, {}]",
                        field.min(),
                        field.max()
                    )));
                }
                out.push(StationaryProfile {
                    field,
                    kind: ProfileKind::Nonconstant,
                    periods,
                    family_id: 0,
                    laplacian: Laplacian::Spectral,
                    well: Some(j),
                });
            }
        }
    }
    Ok(out)
}

/// All stationary families: constants in increasing order, then branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub profiles: Vec<StationaryProfile>,
}

impl Census {
    pub fn compute(poly: &ReactionPolynomials, m: usize) -> Result<Self> {
        let mut profiles = constant_solutions(poly, m)?;
        profiles.extend(nonconstant_solutions(poly, m)?);
        for (i, p) in profiles.iter_mut().enumerate() {
            p.family_id = i;
        }
        Ok(Self { profiles })
    }

    /// Total number of families `l`.
    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn stable(&self) -> Vec<usize> {
        self.profiles.iter().filter(|p| p.kind == ProfileKind::StableConstant).map(|p| p.family_id).collect()
    }

    /// Census on a finite-difference grid of `m` nodes.
    pub fn on_fd_grid(&self, m: usize, poly: &ReactionPolynomials) -> Result<Self> {
        Ok(Self { profiles: self.profiles.iter().map(|p| p.on_fd_grid(m, poly)).collect::<Result<_>>()? })
    }

    /// Family closest to `field` in sup norm, minimized over grid rotations,
    /// with the distance.
    pub fn nearest_family(&self, field: &DensityField) -> Result<(usize, f64)> {
        let m = field.grid_size();
        let mut best = (usize::MAX, f64::INFINITY);
        for p in &self.profiles {
            let rep = if p.field.grid_size() == m { p.field.clone() } else { p.field.resampled(m) };
            let d = if p.is_constant() {
                field.sup_distance(&rep)?
            } else {
                (0..m)
                    .map(|s| field.sup_distance(&rep.rotated(s)))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(f64::INFINITY, f64::min)
            };
            if d < best.1 {
                best = (p.family_id, d);
            }
        }
        if best.0 == usize::MAX {
            return Err(Error::InvalidArgument("empty census".into()));
        }
        Ok(best)
    }
}

/// Eigenpairs of `𝓛_φ h = ½ Δh + F'(φ) h`, eigenvalues in descending order
/// and eigenvectors as columns in the same order.
pub fn linearization_eigen(profile: &StationaryProfile, poly: &ReactionPolynomials) -> (Vec<f64>, DMatrix<f64>) {
    let m = profile.field.grid_size();
    let fp = poly.f_prime();
    let mut a = profile.laplacian.matrix(m) * 0.5;
    for (i, &v) in profile.field.values().iter().enumerate() {
        a[(i, i)] += fp.eval(v);
    }
    // Symmetrize against rounding in the spectral matrix.
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// The `n_modes` largest eigenvalues of the linearization.
pub fn linearization_spectrum(profile: &StationaryProfile, poly: &ReactionPolynomials, n_modes: usize) -> Vec<f64> {
    let (values, _) = linearization_eigen(profile, poly);
    values.into_iter().take(n_modes).collect()
}

/// Analytic spectrum `F'(r) - 2π²k²` of a constant profile, each `k ≥ 1`
/// counted twice.
pub fn constant_spectrum(slope: f64, n_modes: usize) -> Vec<f64> {
    let mut out = vec![slope];
    let mut k = 1;
    while out.len() < n_modes {
        let v = slope - 2.0 * PI * PI * (k * k) as f64;
        out.push(v);
        out.push(v);
        k += 1;
    }
    out.truncate(n_modes);
    out
}

/// `|cos|` of the angle between the eigenvector of the eigenvalue closest to
/// zero and `∇φ`, with that eigenvalue.
pub fn translation_mode(profile: &StationaryProfile, poly: &ReactionPolynomials) -> (f64, f64) {
    let (values, vectors) = linearization_eigen(profile, poly);
    let i = (0..values.len()).fold(0, |b, i| if values[i].abs() < values[b].abs() { i } else { b });
    let grad = profile.laplacian.gradient(profile.field.values());
    let v = vectors.column(i);
    let dot: f64 = v.iter().zip(&grad).map(|(a, b)| a * b).sum();
    let ng = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    (values[i], (dot / (v.norm() * ng)).abs())
}

/// A traced connection from an unstable family to its relaxation limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub from: usize,
    pub to: usize,
    pub sign: f64,
    pub limit: DensityField,
    /// Sup distance between the limit and the matched family.
    pub match_distance: f64,
    pub time: f64,
}

/// Perturbs `φ` by `± ε` times its principal eigenfunction and integrates
/// the hydrodynamic equation to rest.
///
/// `census` must already live on the finite-difference grid used for the
/// evolution (see [`Census::on_fd_grid`]).
pub fn heteroclinic_trace(
    census: &Census,
    from: usize,
    sign: f64,
    eps: f64,
    poly: &ReactionPolynomials,
    relax: &RelaxOptions,
) -> Result<Connection> {
    let phi = &census.profiles[from];
    let (values, vectors) = linearization_eigen(phi, poly);
    if !(values[0] > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "family {from} is linearly stable (top eigenvalue {:e})",
            values[0]
        )));
    }
    let e = vectors.column(0);
    // The principal eigenfunction has one sign; orient it positively.
    let orient = if e.sum() >= 0.0 { 1.0 } else { -1.0 };
    let scale = e.amax();
    let start: Vec<f64> =
        phi.field.values().iter().zip(e.iter()).map(|(p, v)| p + sign.signum() * eps * orient * v / scale).collect();
    let relaxed = relax_to_stationary(&DensityField::new(start)?, poly, relax)?;
    let (to, match_distance) = census.nearest_family(&relaxed.field)?;
    Ok(Connection { from, to, sign: sign.signum(), limit: relaxed.field, match_distance, time: relaxed.time })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CylinderRate;
    use crate::reaction::{bd_polynomials, chafee_infante_params};

    fn ci(frak_a: f64, frak_b: f64) -> ReactionPolynomials {
        let p = chafee_infante_params(frak_a, frak_b, None).unwrap();
        bd_polynomials(&p.rates().unwrap()).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let int: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((int - 2.0 / 19.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn time_map_tends_to_harmonic_period_and_increases() {
        let p = ci(1.0, 2.0);
        let w = classify_wells(&p).unwrap();
        let t0 = harmonic_period(&p, &w, 0).unwrap();
        assert!((t0 - PI).abs() < 1e-12);
        let small = time_map(&p, &w, 0, 1e-8).unwrap();
        assert!((small - t0).abs() < 1e-6, "{small} vs {t0}");
        let mut last = small;
        for i in 1..20 {
            let t = time_map(&p, &w, 0, i as f64 / 20.0).unwrap();
            assert!(t > last);
            last = t;
        }
        assert!(time_map(&p, &w, 0, 1.0 - 1e-12).unwrap() > 3.0 * t0);
        assert!(time_map(&p, &w, 0, 1.5).is_err());
    }

    #[test]
    fn census_counts() {
        let c = Census::compute(&ci(1.0, 2.0), 64).unwrap();
        assert_eq!(c.len(), 3);
        let c = Census::compute(&ci(1.0, 12.0), 128).unwrap();
        assert_eq!(c.len(), 4);
        let phi = &c.profiles[3];
        assert_eq!(phi.periods, 1);
        assert!(phi.residual(&ci(1.0, 12.0)) < RESIDUAL_TOL);
        let v = phi.field.values();
        assert!(v.iter().all(|&x| x <= v[0]));
        let lin = bd_polynomials(&CylinderRate::constant(1, 1.0).unwrap()).unwrap();
        assert_eq!(Census::compute(&lin, 32).unwrap().len(), 1);
    }

    #[test]
    fn spectrum_of_constants() {
        let p = ci(1.0, 2.0);
        let c = Census::compute(&p, 64).unwrap();
        let half = &c.profiles[1];
        assert_eq!(half.kind, ProfileKind::UnstableConstant);
        let got = linearization_spectrum(half, &p, 11);
        for (g, e) in got.iter().zip(constant_spectrum(2.0, 11)) {
            assert!((g - e).abs() < 1e-8, "{g} vs {e}");
        }
        let top = linearization_spectrum(&c.profiles[0], &p, 1)[0];
        assert!((top + 4.0).abs() < 1e-9);
    }

    #[test]
    fn nonconstant_branch_has_translation_mode() {
        let p = ci(1.0, 12.0);
        let c = Census::compute(&p, 128).unwrap();
        let phi = &c.profiles[3];
        let (lambda, cos) = translation_mode(phi, &p);
        assert!(lambda.abs() < 1e-6);
        assert!(cos > 1.0 - 1e-8);
        assert!(linearization_spectrum(phi, &p, 1)[0] > 0.0);
    }

    #[test]
    fn fd_regrid_keeps_residual_small() {
        let p = ci(1.0, 12.0);
        let c = Census::compute(&p, 128).unwrap().on_fd_grid(64, &p).unwrap();
        for prof in &c.profiles {
            assert!(prof.residual(&p) < RESIDUAL_TOL);
            assert_eq!(prof.laplacian, Laplacian::FiniteDifference);
        }
    }

    #[test]
    fn threshold_counts() {
        assert_eq!(linear_instability_count(0.5), 0);
        assert_eq!(linear_instability_count(5.5), 1);
        assert_eq!(literal_branch_count(0.5), 12);
    }
}
