//! The hydrodynamic equation `∂_t ρ = ½ Δρ + F(ρ)` on the unit torus, the
//! comparison ODE `ẋ = F(x)` and the heat semigroup generated by `½ Δ`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::linalg::{l2_norm, CyclicTridiagonal};
use crate::model::{profile_measure, MeasureCoords};
use crate::reaction::ReactionPolynomials;
use crate::{fourier, Error, Result};

/// Smallest grid accepted by the solvers.
pub const MIN_GRID: usize = 16;

/// A density profile on the uniform grid `θ_j = j / M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    values: Vec<f64>,
}

impl DensityField {
    /// Checked constructor: every value must lie in `[0, 1]`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty density field".into()));
        }
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("density {v} at node {j} is outside [0, 1]")));
        }
        Ok(Self { values })
    }

    /// Constructor for intermediate data not required to be a density
    /// (increments, heat-semigroup images of signed data, ...).
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..m).map(|j| f(j as f64 / m as f64)).collect())
    }

    pub fn constant(m: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; m])
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn in_unit_interval(&self) -> bool {
        self.values.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// `‖self - other‖₂` with grid quadrature.
    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        let diff: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(l2_norm(&diff))
    }

    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>() / self.values.len() as f64)
    }

    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub(crate) fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid_size() != other.grid_size() {
            return Err(Error::Mismatch(format!("grid sizes differ: {} vs {}", self.grid_size(), other.grid_size())));
        }
        Ok(())
    }

    /// `ρ(θ + j/M)`.
    pub fn rotated(&self, shift: usize) -> Self {
        let m = self.values.len();
        Self { values: (0..m).map(|j| self.values[(j + shift) % m]).collect() }
    }

    /// Coordinates of `ρ(θ) dθ` in the metric basis.
    pub fn measure(&self, truncation: usize) -> MeasureCoords {
        profile_measure(&self.values, truncation)
    }

    /// Trigonometric resampling onto `m` nodes.
    pub fn resampled(&self, m: usize) -> Self {
        Self { values: fourier::resample(&self.values, m) }
    }
}

/// A discretized trajectory `ρ(t_k, θ_j)`, `t_k = k dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityPath {
    dt: f64,
    slices: Vec<DensityField>,
}

impl DensityPath {
    pub fn new(dt: f64, slices: Vec<DensityField>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
        }
        if slices.len() < 2 {
            return Err(Error::InvalidArgument("a path needs at least two slices".into()));
        }
        let m = slices[0].grid_size();
        if slices.iter().any(|s| s.grid_size() != m) {
            return Err(Error::Mismatch("slices have different grid sizes".into()));
        }
        Ok(Self { dt, slices })
    }

    /// Path with `K + 1` slices on `[0, T]`, `ρ(t, θ) = f(t, θ)`.
    pub fn from_fn(horizon: f64, k: usize, m: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let dt = horizon / k as f64;
        let slices = (0..=k)
            .map(|i| DensityField::new((0..m).map(|j| f(i as f64 * dt, j as f64 / m as f64)).collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dt, slices)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn slices(&self) -> &[DensityField] {
        &self.slices
    }

    pub fn into_slices(self) -> Vec<DensityField> {
        self.slices
    }

    pub fn n_intervals(&self) -> usize {
        self.slices.len() - 1
    }

    pub fn grid_size(&self) -> usize {
        self.slices[0].grid_size()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_intervals() as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.dt * k as f64
    }

    pub fn first(&self) -> &DensityField {
        &self.slices[0]
    }

    pub fn last(&self) -> &DensityField {
        self.slices.last().expect("paths have at least two slices")
    }

    /// `π(t) = ρ(T - t)`.
    pub fn reversed(&self) -> Self {
        Self { dt: self.dt, slices: self.slices.iter().rev().cloned().collect() }
    }

    /// Joins `other` after `self`; the junction slices must coincide and the
    /// time steps must agree.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if (self.dt - other.dt).abs() > 1e-12 * self.dt {
            return Err(Error::Mismatch("time steps differ".into()));
        }
        if self.last().sup_distance(other.first())? > 1e-12 {
            return Err(Error::Mismatch("paths do not join continuously".into()));
        }
        let mut slices = self.slices.clone();
        slices.extend(other.slices.iter().skip(1).cloned());
        Self::new(self.dt, slices)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let m = self.grid_size();
        let header: Vec<String> =
            std::iter::once("t".to_string()).chain((0..m).map(|j| format!("theta_{j}"))).collect();
        writeln!(w, "{}", header.join(","))?;
        for (k, s) in self.slices.iter().enumerate() {
            let row: Vec<String> =
                std::iter::once(self.time(k).to_string()).chain(s.values.iter().map(f64::to_string)).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads a CSV written by [`DensityPath::write_csv`]; times must be
    /// uniformly spaced.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::InvalidArgument("empty CSV".into()))??;
        let m = header.split(',').count() - 1;
        let mut times = Vec::new();
        let mut slices = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let nums = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            if nums.len() != m + 1 {
                return Err(Error::InvalidArgument(format!("row has {} fields, expected {}", nums.len(), m + 1)));
            }
            times.push(nums[0]);
            slices.push(DensityField::new(nums[1..].to_vec())?);
        }
        if times.len() < 2 {
            return Err(Error::InvalidArgument("a path needs at least two rows".into()));
        }
        let dt = times[1] - times[0];
        if times.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1e-300)) {
            return Err(Error::InvalidArgument("time column is not uniformly spaced".into()));
        }
        Self::new(dt, slices)
    }
}

/// Settings of the split-step hydrodynamic solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HydroOptions {
    pub dt: f64,
    /// Keep every `save_every`-th step in the returned path.
    pub save_every: usize,
    pub check_max_principle: bool,
    /// Admissible excess over the ODE comparison bounds, per unit time.
    pub max_principle_tol: f64,
}

impl Default for HydroOptions {
    fn default() -> Self {
        Self { dt: 1e-4, save_every: 1, check_max_principle: true, max_principle_tol: 1e-8 }
    }
}

impl HydroOptions {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    /// `min(1e-4, 1 / (2 C_F))`.
    pub fn scaled_default(poly: &ReactionPolynomials) -> Self {
        Self::with_dt(1e-4_f64.min(0.5 / poly.lipschitz_f.max(f64::MIN_POSITIVE)))
    }

    /// Options saving exactly `frames` equally spaced slices after the start.
    /// The step is shrunk from `max_dt` so that the frames divide `horizon`.
    pub fn for_frames(max_dt: f64, horizon: f64, frames: usize) -> Result<Self> {
        if !(max_dt > 0.0 && horizon > 0.0 && max_dt.is_finite() && horizon.is_finite()) || frames == 0 {
            return Err(Error::InvalidArgument("need dt > 0, horizon > 0 and at least one frame".into()));
        }
        let per_frame = (horizon / (frames as f64 * max_dt)).ceil().max(1.0) as usize;
        Ok(Self { dt: horizon / (frames * per_frame) as f64, save_every: per_frame, ..Self::default() })
    }
}

fn rk4_step(poly: &ReactionPolynomials, x: f64, h: f64) -> f64 {
    let k1 = poly.f(x);
    let k2 = poly.f(x + 0.5 * h * k1);
    let k3 = poly.f(x + 0.5 * h * k2);
    let k4 = poly.f(x + h * k3);
    x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// One step of the hydrodynamic solver, reusable across steps.
///
/// Strang splitting: half a step of the pointwise reaction flow (classical
/// Runge–Kutta), a backward-Euler diffusion step `(I - dt/2 Δ_M)^{-1}` with
/// the periodic second difference, and another half reaction step.
#[derive(Debug, Clone)]
pub struct HydroStepper<'a> {
    poly: &'a ReactionPolynomials,
    dt: f64,
    diffusion: CyclicTridiagonal,
}

impl<'a> HydroStepper<'a> {
    pub fn new(poly: &'a ReactionPolynomials, m: usize, dt: f64) -> Result<Self> {
        if m < MIN_GRID {
            return Err(Error::InvalidArgument(format!("grid size {m} is below {MIN_GRID}")));
        }
        if !(dt > 0.0) || dt > 0.5 / poly.lipschitz_f {
            return Err(Error::InvalidArgument(format!(
                "time step {dt} must lie in (0, 1/(2 C_F)] = (0, {}]",
                0.5 / poly.lipschitz_f
            )));
        }
        let r = 0.5 * dt * (m * m) as f64;
        let diffusion = CyclicTridiagonal::new(&vec![-r; m], &vec![1.0 + 2.0 * r; m], &vec![-r; m])?;
        Ok(Self { poly, dt, diffusion })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Scalar part of the step applied to a spatially constant value.
    pub fn reaction_half(&self, x: f64) -> f64 {
        rk4_step(self.poly, x, 0.5 * self.dt)
    }

    pub fn step(&self, values: &mut [f64]) {
        for v in values.iter_mut() {
            *v = self.reaction_half(*v);
        }
        self.diffusion.solve_in_place(values);
        for v in values.iter_mut() {
            *v = self.reaction_half(*v);
        }
    }
}

/// Solves the hydrodynamic equation on `[0, T]` from `γ`.
///
/// The time step is shrunk so that it divides `T`. When enabled, every step
/// checks `min ρ^{k+1} ≥ x_{min ρ^k}(dt) - tol·dt` and the symmetric upper
/// bound, with `x_a` the ODE flow, and aborts on a breach.
pub fn hydro_solve(
    gamma: &DensityField,
    horizon: f64,
    poly: &ReactionPolynomials,
    opts: &HydroOptions,
) -> Result<DensityPath> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    if opts.save_every == 0 {
        return Err(Error::InvalidArgument("save_every must be at least 1".into()));
    }
    // The relative slack keeps rounding in `horizon / dt` from adding a step.
    let steps = ((horizon / opts.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let steps = steps.div_ceil(opts.save_every) * opts.save_every;
    let dt = horizon / steps as f64;
    let stepper = HydroStepper::new(poly, gamma.grid_size(), dt)?;
    let mut cur = gamma.values.clone();
    let mut slices = vec![gamma.clone()];
    for k in 0..steps {
        let (lo, hi) = if opts.check_max_principle {
            let (mn, mx) = min_max(&cur);
            (ode_flow(mn, dt, poly), ode_flow(mx, dt, poly))
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        stepper.step(&mut cur);
        if opts.check_max_principle {
            let (mn, mx) = min_max(&cur);
            let tol = opts.max_principle_tol * dt;
            if mn < lo - tol || mx > hi + tol {
                return Err(Error::InvariantBreach {
                    step: k + 1,
                    time: (k + 1) as f64 * dt,
                    detail: format!("range [{mn:.17e}, {mx:.17e}] leaves the comparison bounds [{lo:.17e}, {hi:.17e}]"),
                });
            }
        }
        if (k + 1) % opts.save_every == 0 {
            slices.push(DensityField::new(cur.clone()).map_err(|e| Error::InvariantBreach {
                step: k + 1,
                time: (k + 1) as f64 * dt,
                detail: e.to_string(),
            })?);
        }
    }
    DensityPath::new(dt * opts.save_every as f64, slices)
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
}

/// `x_{x0}(t)` for `ẋ = F(x)` with an adaptive Dormand–Prince 5(4) scheme,
/// absolute tolerance `1e-12`.
pub fn ode_flow(x0: f64, t: f64, poly: &ReactionPolynomials) -> f64 {
    ode_flow_tol(x0, t, poly, 1e-12)
}

pub fn ode_flow_tol(x0: f64, t: f64, poly: &ReactionPolynomials, tol: f64) -> f64 {
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] =
        [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];
    if t <= 0.0 {
        return x0;
    }
    let mut x = x0;
    let mut s = 0.0;
    let mut h = (0.1 / poly.lipschitz_f.max(1e-12)).min(t);
    while s < t {
        h = h.min(t - s);
        let mut k = [0.0; 7];
        for i in 0..7 {
            let xi = x + h * (0..i).map(|j| A[i][j] * k[j]).sum::<f64>();
            k[i] = poly.f(xi);
        }
        let x5 = x + h * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
        let x4 = x + h * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
        let err = (x5 - x4).abs();
        if err <= tol || h < 1e-14 {
            s += h;
            x = x5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    x
}

/// Result of integrating the hydrodynamic equation to rest.
#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    pub field: DensityField,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions {
    pub dt: f64,
    /// Stop once `‖ρ^{k+1} - ρ^k‖₂ < tol · dt`.
    pub tol: f64,
    pub max_time: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self { dt: 1e-3, tol: 1e-8, max_time: 500.0 }
    }
}

/// Integrates until the discrete time derivative falls below `tol` in `L²`.
pub fn relax_to_stationary(
    gamma: &DensityField,
    poly: &ReactionPolynomials,
    opts: &RelaxOptions,
) -> Result<Relaxation> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {} must be positive", opts.tol)));
    }
    let dt = opts.dt.min(0.5 / poly.lipschitz_f);
    let stepper = HydroStepper::new(poly, gamma.grid_size(), dt)?;
    let mut cur = gamma.values.clone();
    let mut next = cur.clone();
    let max_steps = (opts.max_time / dt).ceil() as usize;
    for k in 0..max_steps {
        next.copy_from_slice(&cur);
        stepper.step(&mut next);
        let diff: Vec<f64> = next.iter().zip(&cur).map(|(a, b)| a - b).collect();
        std::mem::swap(&mut cur, &mut next);
        if l2_norm(&diff) < opts.tol * dt {
            return Ok(Relaxation { field: DensityField::new(cur)?, time: (k + 1) as f64 * dt });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_steps,
        detail: format!("no stationary state reached by t = {}", opts.max_time),
    })
}

/// `P_t γ` for the semigroup generated by `½ Δ`: Fourier mode `k` is damped
/// by `e^{-2π²k²t}`.
pub fn heat_semigroup(gamma: &DensityField, t: f64) -> Result<DensityField> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time {t} must be nonnegative")));
    }
    if t == 0.0 {
        return Ok(gamma.clone());
    }
    let values = fourier::apply_even_symbol(&gamma.values, |k| (-2.0 * PI * PI * (k * k) as f64 * t).exp());
    Ok(DensityField::from_values(values))
}

/// `‖ρ_T - P_T γ - ∫₀ᵀ P_{T-s} F(ρ_s) ds‖₂` along a solver path, with the
/// trapezoid rule in time.
pub fn mild_residual(path: &DensityPath, poly: &ReactionPolynomials) -> Result<f64> {
    let n = path.n_intervals();
    let horizon = path.horizon();
    let free = heat_semigroup(path.first(), horizon)?;
    let mut duhamel = vec![0.0; path.grid_size()];
    for (k, slice) in path.slices().iter().enumerate() {
        let w = if k == 0 || k == n { 0.5 } else { 1.0 } * path.dt();
        let reaction = DensityField::from_values(slice.values().iter().map(|&r| poly.f(r)).collect());
        let pushed = heat_semigroup(&reaction, horizon - path.time(k))?;
        for (acc, v) in duhamel.iter_mut().zip(pushed.values()) {
            *acc += w * v;
        }
    }
    let resid: Vec<f64> =
        path.last().values().iter().zip(free.values()).zip(&duhamel).map(|((r, p), d)| r - p - d).collect();
    Ok(l2_norm(&resid))
}
