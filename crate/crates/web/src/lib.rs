//! Browser bindings: hydrodynamic frames, the stationary census and particle
//! snapshots, each returned as a JSON string for the static page in `www/`.
//!
//! The `*_json` functions are plain Rust and carry the logic; the exported
//! wrappers only convert errors.

use rdld::elliptic::{linearization_spectrum, Census};
use rdld::model::{kmc_run, replica_rng, LatticeConfig};
use rdld::pde::{hydro_solve, DensityField, HydroOptions};
use rdld::reaction::{bd_polynomials, chafee_infante_params, ReactionPolynomials};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn model(frak_a: f64, frak_b: f64) -> Result<(rdld::model::CylinderRate, ReactionPolynomials), String> {
    let rates = chafee_infante_params(frak_a, frak_b, None).and_then(|p| p.rates()).map_err(|e| e.to_string())?;
    let poly = bd_polynomials(&rates).map_err(|e| e.to_string())?;
    Ok((rates, poly))
}

#[derive(Serialize)]
struct Frames {
    times: Vec<f64>,
    frames: Vec<Vec<f64>>,
}

/// Hydrodynamic solution from `mean + amplitude · cos(2π mode θ)`.
#[allow(clippy::too_many_arguments)]
pub fn hydro_frames_json(
    frak_a: f64,
    frak_b: f64,
    mean: f64,
    amplitude: f64,
    mode: u32,
    grid: usize,
    horizon: f64,
    frames: usize,
) -> Result<String, String> {
    let (_, poly) = model(frak_a, frak_b)?;
    let gamma =
        DensityField::from_fn(grid, |t| mean + amplitude * (2.0 * std::f64::consts::PI * mode as f64 * t).cos())
            .map_err(|e| e.to_string())?;
    let opts = HydroOptions::for_frames(HydroOptions::scaled_default(&poly).dt, horizon, frames)
        .map_err(|e| e.to_string())?;
    let path = hydro_solve(&gamma, horizon, &poly, &opts).map_err(|e| e.to_string())?;
    let out = Frames {
        times: (0..path.slices().len()).map(|k| path.time(k)).collect(),
        frames: path.slices().iter().map(|s| s.values().to_vec()).collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Family {
    kind: String,
    periods: usize,
    top_eigenvalue: f64,
    profile: Vec<f64>,
}

/// Stationary families for `(𝔞, 𝔟) = (1, 1 + 2a)`.
pub fn census_json(a: f64, grid: usize) -> Result<String, String> {
    let (_, poly) = model(1.0, 1.0 + 2.0 * a)?;
    let census = Census::compute(&poly, grid).map_err(|e| e.to_string())?;
    let out: Vec<Family> = census
        .profiles
        .iter()
        .map(|p| Family {
            kind: format!("{:?}", p.kind),
            periods: p.periods,
            top_eigenvalue: linearization_spectrum(p, &poly, 1)[0],
            profile: p.field.values().to_vec(),
        })
        .collect();
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Snapshots {
    times: Vec<f64>,
    /// Occupation strings, one character per site.
    configs: Vec<String>,
    densities: Vec<f64>,
}

/// Particle snapshots from the product measure at density `density`.
pub fn kmc_json(
    frak_a: f64,
    frak_b: f64,
    n: usize,
    density: f64,
    horizon: f64,
    frames: usize,
    seed: u64,
) -> Result<String, String> {
    let (rates, _) = model(frak_a, frak_b)?;
    if !(0.0..=1.0).contains(&density) {
        return Err(format!("density {density} must lie in [0, 1]"));
    }
    let init = LatticeConfig::sample_product(n, |_| density, &mut replica_rng(seed, u64::MAX));
    let times: Vec<f64> = (0..=frames.max(1)).map(|k| horizon * k as f64 / frames.max(1) as f64).collect();
    let snaps = kmc_run(&init, &rates, horizon, seed, &times).map_err(|e| e.to_string())?;
    let out = Snapshots {
        times,
        configs: snaps.iter().map(|s| s.config.to_bits()).collect(),
        densities: snaps.iter().map(|s| s.config.particles() as f64 / n as f64).collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn hydro_frames(
    frak_a: f64,
    frak_b: f64,
    mean: f64,
    amplitude: f64,
    mode: u32,
    grid: usize,
    horizon: f64,
    frames: usize,
) -> Result<String, JsError> {
    hydro_frames_json(frak_a, frak_b, mean, amplitude, mode, grid, horizon, frames).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn census(a: f64, grid: usize) -> Result<String, JsError> {
    census_json(a, grid).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn kmc_snapshots(
    frak_a: f64,
    frak_b: f64,
    n: usize,
    density: f64,
    horizon: f64,
    frames: usize,
    seed: u64,
) -> Result<String, JsError> {
    kmc_json(frak_a, frak_b, n, density, horizon, frames, seed).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hydro_frames_stay_in_unit_interval() {
        let s = hydro_frames_json(1.0, 2.0, 0.5, 0.4, 1, 64, 0.5, 10).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        let frames = v["frames"].as_array().unwrap();
        assert_eq!(frames.len(), 11);
        assert!(frames.iter().flat_map(|f| f.as_array().unwrap()).all(|x| (0.0..=1.0).contains(&x.as_f64().unwrap())));
    }

    #[test]
    fn census_counts_families() {
        let v: serde_json::Value = serde_json::from_str(&census_json(0.5, 64).unwrap()).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 3);
        let v: serde_json::Value = serde_json::from_str(&census_json(5.5, 128).unwrap()).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 4);
    }

    #[test]
    fn kmc_is_reproducible_and_rejects_bad_input() {
        let a = kmc_json(1.0, 2.0, 32, 0.5, 0.2, 4, 7).unwrap();
        assert_eq!(a, kmc_json(1.0, 2.0, 32, 0.5, 0.2, 4, 7).unwrap());
        assert!(kmc_json(1.0, 2.0, 32, 1.5, 0.2, 4, 7).is_err());
        assert!(kmc_json(2.0, 1.0, 32, 0.5, 0.2, 4, 7).is_err());
    }
}
