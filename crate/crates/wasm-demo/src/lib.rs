//! Browser front end: three small computations exposed through
//! `wasm-bindgen`, each returning a JSON string for the page to draw.
//!
//! The work happens in plain functions so the native test suite covers it.

use infolattice::dense::{dense_entropy_provider, haar_random_state};
use infolattice::gaussian::{gaussian_entropy_provider, ground_covariance};
use infolattice::kitaev::{sample_disorder, KitaevRealization};
use infolattice::lengths::{critical_alpha_fit, triangle_average, LengthSummary, SummaryRecord};
use infolattice::{info_per_scale, local_information, InformationLattice};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub const MAX_CHAIN: usize = 160;
pub const MAX_HAAR: usize = 12;

/// Lattice rows plus the per-scale curve and its length summary.
#[derive(Debug, Serialize)]
pub struct LatticeView {
    #[serde(rename = "L")]
    pub sites: usize,
    /// `rows[ell][m]`, in bits.
    pub rows: Vec<Vec<f64>>,
    pub per_scale: Vec<f64>,
    pub summary: SummaryRecord,
    pub near_zero_modes: usize,
}

#[derive(Debug, Serialize)]
pub struct AlphaView {
    #[serde(rename = "L")]
    pub sites: usize,
    /// Central-triangle averages by scale (`null` past the apex).
    pub averages: Vec<Option<f64>>,
    pub ell_min: usize,
    pub ell_max: usize,
    pub alpha: f64,
    pub stderr: f64,
}

fn view(lattice: &InformationLattice, near_zero_modes: usize) -> LatticeView {
    let profile = info_per_scale(lattice);
    LatticeView {
        sites: lattice.num_sites(),
        rows: lattice.rows().to_vec(),
        per_scale: profile.totals.clone(),
        summary: LengthSummary::from_profile(&profile).to_record(),
        near_zero_modes,
    }
}

fn check_size(sites: usize, lo: usize, hi: usize) -> Result<(), String> {
    if (lo..=hi).contains(&sites) {
        Ok(())
    } else {
        Err(format!("L must be between {lo} and {hi}"))
    }
}

fn gaussian_view(r: &KitaevRealization) -> Result<LatticeView, String> {
    let ground = ground_covariance(&r.coupling().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let lattice = local_information(&mut gaussian_entropy_provider(&ground.covariance)).map_err(|e| e.to_string())?;
    Ok(view(&lattice, ground.near_zero_modes))
}

/// Ground state of a disordered free Kitaev chain.
pub fn kitaev_lattice(sites: usize, delta: f64, seed: u64) -> Result<LatticeView, String> {
    check_size(sites, 2, MAX_CHAIN)?;
    gaussian_view(&sample_disorder(sites, delta, 0.0, seed).map_err(|e| e.to_string())?)
}

/// Haar-random pure state of qubits.
pub fn haar_lattice(sites: usize, seed: u64) -> Result<LatticeView, String> {
    check_size(sites, 2, MAX_HAAR)?;
    let state = haar_random_state(sites, seed).map_err(|e| e.to_string())?;
    let mut provider = dense_entropy_provider(&state).map_err(|e| e.to_string())?;
    Ok(view(&local_information(&mut provider).map_err(|e| e.to_string())?, 0))
}

/// Critical clean chain (all hoppings 1) and its `alpha / ell^2` fit.
pub fn critical_alpha(sites: usize, ell_min: usize, ell_max: usize) -> Result<AlphaView, String> {
    check_size(sites, 16, MAX_CHAIN)?;
    let r = KitaevRealization::clean(sites, 1.0, 1.0, 0.0).map_err(|e| e.to_string())?;
    let ground = ground_covariance(&r.coupling().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let lattice = local_information(&mut gaussian_entropy_provider(&ground.covariance)).map_err(|e| e.to_string())?;
    let fit = critical_alpha_fit(&lattice, ell_min, ell_max).map_err(|e| e.to_string())?;
    Ok(AlphaView {
        sites,
        averages: triangle_average(&lattice).map_err(|e| e.to_string())?,
        ell_min,
        ell_max,
        alpha: fit.alpha,
        stderr: fit.stderr,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

// seeds cross the boundary as f64 so the page can pass plain numbers
fn seed(x: f64) -> u64 {
    x.max(0.0) as u64
}

#[wasm_bindgen(js_name = kitaevLattice)]
pub fn js_kitaev_lattice(sites: usize, delta: f64, seed_value: f64) -> Result<String, JsValue> {
    to_js(kitaev_lattice(sites, delta, seed(seed_value)))
}

#[wasm_bindgen(js_name = haarLattice)]
pub fn js_haar_lattice(sites: usize, seed_value: f64) -> Result<String, JsValue> {
    to_js(haar_lattice(sites, seed(seed_value)))
}

#[wasm_bindgen(js_name = criticalAlpha)]
pub fn js_critical_alpha(sites: usize, ell_min: usize, ell_max: usize) -> Result<String, JsValue> {
    to_js(critical_alpha(sites, ell_min, ell_max))
}
