//! Quasi-potential estimates: constructive upper bounds, a minimum-action
//! path optimizer and the inter-family cost matrix `v_ij`.
//!
//! Every value here is the discrete rate functional of an explicit path, so
//! each one is an upper estimate of the infimal cost. Zero entries obtained
//! from traced heteroclinics are the only certified values.

pub mod lbfgs;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::{heteroclinic_trace, linearization_eigen, Census, Connection, ProfileKind, StationaryProfile};
use crate::ldp::{rate_gradient, rate_i_with, NewtonOptions};
use crate::pde::{hydro_solve, DensityField, DensityPath, HydroOptions, HydroStepper, RelaxOptions};
use crate::reaction::ReactionPolynomials;
use crate::{Error, Result};

pub use lbfgs::{LbfgsOptions, LbfgsResult};

/// Threshold below which a cost counts as zero.
pub const ZERO_COST: f64 = 1e-3;

/// How an entry of the cost matrix was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    HeteroclinicZero,
    Mam,
    UpperBound,
}

/// `v_ij` with one provenance tag per off-diagonal entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    pub v: Vec<Vec<f64>>,
    pub provenance: Vec<Vec<Option<Provenance>>>,
    /// Minimum-action value of every off-diagonal entry, traced edges
    /// included, when it was computed.
    pub mam: Vec<Vec<Option<f64>>>,
    /// Best interpolation bound of every off-diagonal entry.
    pub upper_bound: Vec<Vec<Option<f64>>>,
    /// Traced heteroclinic edges `(from, to)`.
    pub connections: Vec<(usize, usize)>,
}

impl CostMatrix {
    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `ψ_b(x) = (x + b) log(1 + x/b) - x`, the Legendre transform of
/// `g ↦ b(e^g - 1 - g)`; `+∞` for `x ≤ -b`.
pub fn psi_b(x: f64, b: f64) -> f64 {
    if x <= -b {
        return f64::INFINITY;
    }
    (x + b) * (x / b).ln_1p() - x
}

/// Bound on the cost of the straight path `ρ̄ + a t`, `t ∈ [0, 1]`:
/// `max_± ψ_b((1 ± C_F) a)` with `b = inf B` over `[δ/2, 1 - δ/2]`.
///
/// Requires `|a| ≤ δ/2` and `(1 ± C_F) a > -b`.
pub fn shift_bound(source: &DensityField, a: f64, poly: &ReactionPolynomials) -> Result<f64> {
    let delta = source.min().min(1.0 - source.max());
    if !(delta > 0.0) || a.abs() > 0.5 * delta {
        return Err(Error::InvalidArgument(format!("shift {a} exceeds half the distance {delta} to the boundary")));
    }
    let b = poly.b.min_on(0.5 * delta, 1.0 - 0.5 * delta);
    let c = poly.lipschitz_f;
    let (lo, hi) = ((1.0 - c) * a, (1.0 + c) * a);
    if lo.min(hi) <= -b {
        return Err(Error::InvalidArgument(format!("shift {a} too large for b = {b} and C_F = {c}")));
    }
    Ok(psi_b(lo, b).max(psi_b(hi, b)))
}

/// Increasing reparametrization `α` of `[0, 1]` in the interpolation path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    Linear,
    Quadratic,
}

impl Schedule {
    pub const ALL: [Schedule; 2] = [Schedule::Linear, Schedule::Quadratic];

    pub fn eval(self, t: f64) -> f64 {
        match self {
            Schedule::Linear => t,
            Schedule::Quadratic => t * t,
        }
    }
}

/// `ρ_t = (1 - α(t)) ρ̄ + α(t) ρ` on `[0, horizon]` with `k` intervals.
pub fn interpolation_path(
    source: &DensityField,
    target: &DensityField,
    schedule: Schedule,
    horizon: f64,
    k: usize,
) -> Result<DensityPath> {
    source.check_grid(target)?;
    if k == 0 {
        return Err(Error::InvalidArgument("at least one time interval is required".into()));
    }
    let slices = (0..=k)
        .map(|i| {
            let al = schedule.eval(i as f64 / k as f64);
            DensityField::from_values(
                source.values().iter().zip(target.values()).map(|(s, t)| (1.0 - al) * s + al * t).collect(),
            )
        })
        .collect();
    DensityPath::new(horizon / k as f64, slices)
}

/// Settings shared by the constructive bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    /// Time intervals of the interpolation path on `[0, 1]`.
    pub slices: usize,
    /// Hydrodynamic smoothing time for targets touching `{0, 1}`.
    pub smoothing_time: f64,
    pub hydro: HydroOptions,
    pub newton: NewtonOptions,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            slices: 64,
            smoothing_time: 0.01,
            hydro: HydroOptions { dt: 1e-3, save_every: 1, ..HydroOptions::default() },
            newton: NewtonOptions::default(),
        }
    }
}

fn rate(path: &DensityPath, poly: &ReactionPolynomials, newton: &NewtonOptions) -> Result<f64> {
    Ok(rate_i_with(path, poly, newton)?.value)
}

/// Cost of the interpolation path from `source` to `target`.
///
/// A target outside `(0, 1)` is first smoothed by the hydrodynamic flow for
/// `opts.smoothing_time`; the result is the cost to reach the smoothed
/// profile plus the cost of the reversed relaxation back to the target.
pub fn interpolation_cost(
    source: &DensityField,
    target: &DensityField,
    schedule: Schedule,
    poly: &ReactionPolynomials,
    opts: &BoundOptions,
) -> Result<f64> {
    if target.values().iter().all(|v| *v > 0.0 && *v < 1.0) {
        let path = interpolation_path(source, target, schedule, 1.0, opts.slices)?;
        return rate(&path, poly, &opts.newton);
    }
    let smooth = hydro_solve(target, opts.smoothing_time, poly, &opts.hydro)?;
    let reach = interpolation_path(source, smooth.last(), schedule, 1.0, opts.slices)?;
    Ok(rate(&reach, poly, &opts.newton)? + rate(&smooth.reversed(), poly, &opts.newton)?)
}

/// Minimum over both schedules, with the minimizing schedule.
pub fn best_interpolation_cost(
    source: &DensityField,
    target: &DensityField,
    poly: &ReactionPolynomials,
    opts: &BoundOptions,
) -> Result<(f64, Schedule)> {
    let mut best = (f64::INFINITY, Schedule::Linear);
    for s in Schedule::ALL {
        let c = interpolation_cost(source, target, s, poly, opts)?;
        if c < best.0 {
            best = (c, s);
        }
    }
    Ok(best)
}

/// Cost of the time-reversed hydrodynamic path from `γ`, with the terms of
/// the linear envelope `C₀ (T + ‖ρ_T - ρ̄‖₁ + ‖ρ_0 - ρ̄‖₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReversedRelaxation {
    pub cost: f64,
    pub horizon: f64,
    pub l1_start: f64,
    pub l1_end: f64,
}

impl ReversedRelaxation {
    pub fn envelope(&self) -> f64 {
        self.horizon + self.l1_start + self.l1_end
    }

    /// The smallest `C₀` for which the envelope holds.
    pub fn fitted_c0(&self) -> f64 {
        self.cost / self.envelope()
    }
}

/// Runs the hydrodynamic equation from `γ` for `T`, reverses the path in time
/// and evaluates its cost. `reference` is the stationary profile `ρ̄` the
/// envelope is measured against.
pub fn reversed_relaxation_cost(
    gamma: &DensityField,
    horizon: f64,
    reference: &DensityField,
    poly: &ReactionPolynomials,
    opts: &BoundOptions,
) -> Result<ReversedRelaxation> {
    let path = hydro_solve(gamma, horizon, poly, &opts.hydro)?;
    let cost = rate(&path.reversed(), poly, &opts.newton)?;
    Ok(ReversedRelaxation {
        cost,
        horizon,
        l1_start: gamma.l1_distance(reference)?,
        l1_end: path.last().l1_distance(reference)?,
    })
}

/// Minimum-action settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MamOptions {
    pub t_grid: Vec<f64>,
    /// Time intervals per path.
    pub slices: usize,
    /// Spatial grid of the optimized paths.
    pub grid: usize,
    pub lbfgs: LbfgsOptions,
    pub newton: NewtonOptions,
}

impl Default for MamOptions {
    fn default() -> Self {
        Self {
            t_grid: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            slices: 64,
            grid: 32,
            lbfgs: LbfgsOptions { max_iter: 400, grad_tol: 1e-12, rel_tol: 1e-10, ..LbfgsOptions::default() },
            newton: NewtonOptions::default(),
        }
    }
}

/// Outcome of one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MamRun {
    pub horizon: f64,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Best path over the horizon grid, with every run.
#[derive(Debug, Clone, PartialEq)]
pub struct MamResult {
    pub path: DensityPath,
    pub value: f64,
    pub horizon: f64,
    pub converged: bool,
    pub runs: Vec<MamRun>,
}

fn objective(
    x: &[f64],
    ends: (&DensityField, &DensityField),
    dt: f64,
    poly: &ReactionPolynomials,
    newton: &NewtonOptions,
) -> Option<(f64, Vec<f64>)> {
    if x.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
        return None;
    }
    let path = assemble(x, ends, dt).ok()?;
    let eval = rate_i_with(&path, poly, newton).ok()?;
    let h = eval.h?;
    let grad = rate_gradient(&path, &h.h, poly).ok()?;
    let n = path.n_intervals();
    Some((eval.value, grad[1..n].concat()))
}

fn assemble(x: &[f64], (a, b): (&DensityField, &DensityField), dt: f64) -> Result<DensityPath> {
    let m = a.grid_size();
    let mut slices = vec![a.clone()];
    slices.extend(x.chunks(m).map(|c| DensityField::from_values(c.to_vec())));
    slices.push(b.clone());
    DensityPath::new(dt, slices)
}

fn interior(path: &DensityPath) -> Vec<f64> {
    let n = path.n_intervals();
    path.slices()[1..n].iter().flat_map(|s| s.values().iter().copied()).collect()
}

/// Minimizes the discrete rate functional over paths from `source` to
/// `target` for every horizon in the grid and keeps the best.
///
/// Each horizon starts from the cheapest of the straight interpolation, the
/// same interpolation after one hydrodynamic smoothing step of its interior
/// slices, and the optimum of the previous horizon. The source is moved onto
/// the optimizer grid first, the target is resampled onto it.
pub fn mam_minimize(
    source: &StationaryProfile,
    target: &DensityField,
    poly: &ReactionPolynomials,
    opts: &MamOptions,
) -> Result<MamResult> {
    let m = opts.grid;
    if opts.slices < 2 || opts.t_grid.is_empty() || opts.t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("need at least two slices and a nonempty positive horizon grid".into()));
    }
    let src = source.on_fd_grid(m, poly)?.field;
    let tgt = if target.grid_size() == m { target.clone() } else { target.resampled(m) };
    if !tgt.values().iter().all(|v| *v > 0.0 && *v < 1.0) {
        return Err(Error::InvalidArgument("target must lie strictly inside (0, 1)".into()));
    }
    let k = opts.slices;
    let straight = interior(&interpolation_path(&src, &tgt, Schedule::Linear, 1.0, k)?);
    let mut best: Option<MamResult> = None;
    let mut runs = Vec::new();
    let mut previous: Option<Vec<f64>> = None;
    for &horizon in &opts.t_grid {
        let dt = horizon / k as f64;
        let f = |x: &[f64]| objective(x, (&src, &tgt), dt, poly, &opts.newton);
        let mut smoothed = straight.clone();
        let stepper = HydroStepper::new(poly, m, dt.min(0.5 / poly.lipschitz_f))?;
        for c in smoothed.chunks_mut(m) {
            stepper.step(c);
        }
        let mut start: Option<(f64, Vec<f64>)> = None;
        for cand in [Some(straight.clone()), Some(smoothed), previous.clone()].into_iter().flatten() {
            if let Some((v, _)) = f(&cand) {
                if start.as_ref().is_none_or(|(b, _)| v < *b) {
                    start = Some((v, cand));
                }
            }
        }
        let (_, x0) =
            start.ok_or_else(|| Error::NoConvergence { iterations: 0, detail: "no feasible initial path".into() })?;
        let res = lbfgs::minimize(x0, f, &opts.lbfgs)
            .ok_or_else(|| Error::NoConvergence { iterations: 0, detail: "initial path became infeasible".into() })?;
        // The discrete functional is nonnegative up to rounding.
        let res = LbfgsResult { value: res.value.max(0.0), ..res };
        runs.push(MamRun { horizon, value: res.value, iterations: res.iterations, converged: res.converged });
        if best.as_ref().is_none_or(|b| res.value < b.value) {
            best = Some(MamResult {
                path: assemble(&res.x, (&src, &tgt), dt)?,
                value: res.value,
                horizon,
                converged: res.converged,
                runs: Vec::new(),
            });
        }
        previous = Some(res.x);
    }
    let mut best = best.expect("nonempty horizon grid");
    best.runs = runs;
    Ok(best)
}

/// Settings of the cost-matrix assembly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VMatrixOptions {
    pub mam: MamOptions,
    pub bounds: BoundOptions,
    /// Grid on which connections are traced.
    pub trace_grid: usize,
    /// Size of the perturbation along the principal eigenfunction.
    pub trace_eps: f64,
    pub relax: RelaxOptions,
    /// Also run the optimizer on traced edges, for reporting.
    pub mam_on_traced: bool,
}

impl Default for VMatrixOptions {
    fn default() -> Self {
        Self {
            mam: MamOptions::default(),
            bounds: BoundOptions::default(),
            trace_grid: 128,
            trace_eps: 1e-3,
            relax: RelaxOptions::default(),
            mam_on_traced: true,
        }
    }
}

/// Traces both signs of the principal direction out of every unstable family.
pub fn trace_connections(
    census: &Census,
    poly: &ReactionPolynomials,
    opts: &VMatrixOptions,
) -> Result<Vec<Connection>> {
    let fd = census.on_fd_grid(opts.trace_grid, poly)?;
    let mut out = Vec::new();
    for p in &fd.profiles {
        let (values, _) = linearization_eigen(p, poly);
        if values[0] > 0.0 {
            for sign in [-1.0, 1.0] {
                out.push(heteroclinic_trace(&fd, p.family_id, sign, opts.trace_eps, poly, &opts.relax)?);
            }
        }
    }
    Ok(out)
}

/// Assembles `v_ij`: zero on traced heteroclinic edges, otherwise the best of
/// the optimizer and the interpolation bounds.
///
/// Fails if a cost out of a stable constant falls below [`ZERO_COST`].
pub fn v_matrix(census: &Census, poly: &ReactionPolynomials, opts: &VMatrixOptions) -> Result<CostMatrix> {
    let l = census.len();
    if l == 0 {
        return Err(Error::InvalidArgument("empty census".into()));
    }
    let mut connections: Vec<(usize, usize)> =
        trace_connections(census, poly, opts)?.into_iter().filter(|c| c.from != c.to).map(|c| (c.from, c.to)).collect();
    connections.sort_unstable();
    connections.dedup();
    let fd = census.on_fd_grid(opts.mam.grid, poly)?;
    let pairs: Vec<(usize, usize)> = (0..l).flat_map(|i| (0..l).map(move |j| (i, j))).filter(|(i, j)| i != j).collect();
    let entries = pairs
        .par_iter()
        .map(|&(i, j)| {
            let traced = connections.contains(&(i, j));
            let (src, tgt) = (&fd.profiles[i], &fd.profiles[j].field);
            let ub = if traced { None } else { Some(best_interpolation_cost(&src.field, tgt, poly, &opts.bounds)?.0) };
            let mam =
                if !traced || opts.mam_on_traced { Some(mam_minimize(src, tgt, poly, &opts.mam)?.value) } else { None };
            Ok((i, j, traced, mam, ub))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = CostMatrix {
        v: vec![vec![0.0; l]; l],
        provenance: vec![vec![None; l]; l],
        mam: vec![vec![None; l]; l],
        upper_bound: vec![vec![None; l]; l],
        connections,
    };
    for (i, j, traced, mam, ub) in entries {
        out.mam[i][j] = mam;
        out.upper_bound[i][j] = ub;
        let (v, tag) = if traced {
            (0.0, Provenance::HeteroclinicZero)
        } else {
            let m = mam.unwrap_or(f64::INFINITY);
            let u = ub.unwrap_or(f64::INFINITY);
            if m <= u {
                (m, Provenance::Mam)
            } else {
                (u, Provenance::UpperBound)
            }
        };
        if census.profiles[i].kind == ProfileKind::StableConstant && !(v > ZERO_COST) {
            return Err(Error::Structure(format!(
                "cost {v:e} out of the stable family {i} towards {j} is not positive"
            )));
        }
        out.v[i][j] = v;
        out.provenance[i][j] = Some(tag);
    }
    Ok(out)
}

/// Cost of rotating a non-constant profile through half the torus at speed
/// `a`, one grid cell per time step: `ρ(t, θ) = φ(θ + a t)`.
///
/// `φ` must be an equilibrium of the finite-difference scheme, see
/// [`StationaryProfile::on_fd_grid`].
pub fn translation_cost(profile: &StationaryProfile, a: f64, poly: &ReactionPolynomials) -> Result<f64> {
    if profile.is_constant() {
        return Err(Error::InvalidArgument("rotating a constant profile is a constant path".into()));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("speed {a} must be positive")));
    }
    let m = profile.field.grid_size();
    if !m.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("grid size {m} must be even")));
    }
    let k = m / 2;
    let slices = (0..=k).map(|s| profile.field.rotated(s)).collect();
    let path = DensityPath::new(1.0 / (a * m as f64), slices)?;
    rate(&path, poly, &NewtonOptions::default())
}

/// Translation costs at each speed with the Richardson estimate of the
/// `a → 0` limit from the quadratic through the last three points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationCheck {
    pub speeds: Vec<f64>,
    pub costs: Vec<f64>,
    pub limit: f64,
}

pub fn translation_cost_check(
    profile: &StationaryProfile,
    speeds: &[f64],
    poly: &ReactionPolynomials,
) -> Result<TranslationCheck> {
    if speeds.len() < 3 {
        return Err(Error::InvalidArgument("need at least three speeds".into()));
    }
    let costs = speeds.iter().map(|&a| translation_cost(profile, a, poly)).collect::<Result<Vec<_>>>()?;
    let n = speeds.len();
    let (x, y) = (&speeds[n - 3..], &costs[n - 3..]);
    // Lagrange interpolation evaluated at 0.
    let limit = (0..3)
        .map(|i| {
            let w: f64 = (0..3).filter(|&j| j != i).map(|j| x[j] / (x[j] - x[i])).product();
            w * y[i]
        })
        .sum();
    Ok(TranslationCheck { speeds: speeds.to_vec(), costs, limit })
}
