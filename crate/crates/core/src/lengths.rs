//! Characteristic length scales read off the information per scale.
//!
//! With `h = floor(L/2)`:
//!
//! * `xi`: the `I(ell)`-weighted mean of `ell` over `0..=h`.
//! * `lambda`: `-1/s`, where `s` is the least-squares slope of `ln I(ell)`
//!   against `ell` on `floor(L/4)..=ceil(L/2)`. Negative for states whose
//!   information grows towards half the system size.
//! * `gamma`: total information on scales `h..L`.
//! * `tau`: distance of the `I(ell)`-weighted mean scale over `h..L` from the
//!   apex `L - 1`.
//! * `alpha`: amplitude of the scale-invariant profile `i(ell) = alpha / ell^2`,
//!   fitted on position averages taken inside a central triangle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{InformationLattice, ScaleProfile};

/// Entries at or below this are left out of the logarithmic fit.
pub const FIT_FLOOR: f64 = 1e-14;
/// Below this much large-scale information `tau` is undefined.
pub const GAMMA_MIN: f64 = 1e-6;
const XI_MIN_WEIGHT: f64 = 1e-12;
const FLAT_SLOPE: f64 = 1e-12;

fn clamped(profile: &ScaleProfile, ell: usize) -> f64 {
    profile.at(ell).max(0.0)
}

pub fn expected_correlation_length(profile: &ScaleProfile) -> Option<f64> {
    let h = profile.sites / 2;
    let (mut num, mut den) = (0.0, 0.0);
    for ell in 0..=h.min(profile.sites - 1) {
        let v = clamped(profile, ell);
        num += ell as f64 * v;
        den += v;
    }
    (den > XI_MIN_WEIGHT).then(|| num / den)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DecayLength {
    Finite(f64),
    /// Flat profile over the fit range.
    Infinite,
    /// Fewer than three usable points.
    Undefined,
}

impl DecayLength {
    pub fn value(&self) -> Option<f64> {
        match self {
            DecayLength::Finite(v) => Some(*v),
            _ => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            DecayLength::Finite(_) => "finite",
            DecayLength::Infinite => "infinite",
            DecayLength::Undefined => "undefined",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    pub lambda: DecayLength,
    /// Slope of `ln I(ell)` per unit scale, when the fit ran.
    pub slope: Option<f64>,
    pub points: usize,
}

/// Fit range `floor(L/4)..=ceil(L/2)`, capped at `L - 1`.
pub fn decay_fit_range(sites: usize) -> (usize, usize) {
    (sites / 4, sites.div_ceil(2).min(sites - 1))
}

pub fn correlation_decay_length(profile: &ScaleProfile) -> DecayFit {
    let (lo, hi) = decay_fit_range(profile.sites);
    decay_fit_over(profile, lo, hi)
}

/// Log-linear least-squares fit of `I(ell)` on `lo..=hi`.
pub fn decay_fit_over(profile: &ScaleProfile, lo: usize, hi: usize) -> DecayFit {
    let points: Vec<(f64, f64)> = (lo..=hi)
        .filter_map(|ell| {
            let v = profile.at(ell);
            (v > FIT_FLOOR).then(|| (ell as f64, v.ln()))
        })
        .collect();
    if points.len() < 3 {
        return DecayFit {
            lambda: DecayLength::Undefined,
            slope: None,
            points: points.len(),
        };
    }
    let slope = ols_slope(&points);
    let lambda = if slope.abs() < FLAT_SLOPE {
        DecayLength::Infinite
    } else {
        DecayLength::Finite(-1.0 / slope)
    };
    DecayFit {
        lambda,
        slope: Some(slope),
        points: points.len(),
    }
}

fn ols_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn large_scale_information(profile: &ScaleProfile) -> f64 {
    (profile.sites / 2..profile.sites)
        .map(|ell| clamped(profile, ell))
        .sum()
}

pub fn expected_edge_correlation_length(profile: &ScaleProfile) -> Option<f64> {
    let l = profile.sites;
    let (mut num, mut den) = (0.0, 0.0);
    for ell in l / 2..l {
        let v = clamped(profile, ell);
        num += ell as f64 * v;
        den += v;
    }
    (den >= GAMMA_MIN).then(|| (l - 1) as f64 - num / den)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaFit {
    pub alpha: f64,
    pub stderr: f64,
    /// `(ell, averaged i(ell))` pairs that entered the fit.
    pub points: Vec<(usize, f64)>,
}

/// Central window of `floor(L/4)` sites, `(first site, width)`.
///
/// The window is centred on the chain; when that is not possible on whole
/// sites it sits half a site to the left.
pub fn central_window(sites: usize) -> (usize, usize) {
    let width = sites / 4;
    ((sites - width) / 2, width)
}

/// Average of `i(ell, m)` over subsystems inside the central window, for
/// each `ell` below the window width (`None` past the lattice's range).
pub fn triangle_average(lattice: &InformationLattice) -> Result<Vec<Option<f64>>> {
    let (start, width) = central_window(lattice.num_sites());
    if width == 0 {
        return Err(Error::InvalidInput(format!(
            "central window empty for {} sites",
            lattice.num_sites()
        )));
    }
    Ok((0..width)
        .map(|ell| {
            if ell > lattice.max_scale() {
                return None;
            }
            let ms = start..start + width - ell;
            let n = ms.len() as f64;
            Some(ms.map(|m| lattice.get(ell, m)).sum::<f64>() / n)
        })
        .collect())
}

/// Least-squares fit of the constant `alpha = i(ell) * ell^2` on
/// `ell_min..=ell_max`, skipping non-positive averages.
pub fn fit_alpha(averages: &[Option<f64>], ell_min: usize, ell_max: usize) -> Result<AlphaFit> {
    if ell_min < 2 || ell_max < ell_min {
        return Err(Error::InvalidInput(format!(
            "alpha fit range {ell_min}..={ell_max} must start at ell >= 2"
        )));
    }
    if ell_max >= averages.len() {
        return Err(Error::InvalidInput(format!(
            "alpha fit needs ell_max <= {}, got {ell_max}",
            averages.len() as isize - 1
        )));
    }
    let points: Vec<(usize, f64)> = (ell_min..=ell_max)
        .filter_map(|ell| averages[ell].filter(|&v| v > 0.0).map(|v| (ell, v)))
        .collect();
    if points.is_empty() {
        return Err(Error::InvalidInput(
            "no positive averages in the alpha fit range".into(),
        ));
    }
    let ys: Vec<f64> = points.iter().map(|&(ell, v)| v * (ell * ell) as f64).collect();
    let n = ys.len() as f64;
    let alpha = ys.iter().sum::<f64>() / n;
    let stderr = if ys.len() > 1 {
        let var = ys.iter().map(|y| (y - alpha).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(AlphaFit { alpha, stderr, points })
}

pub fn critical_alpha_fit(lattice: &InformationLattice, ell_min: usize, ell_max: usize) -> Result<AlphaFit> {
    let (_, width) = central_window(lattice.num_sites());
    if ell_max + 1 > width {
        return Err(Error::InvalidInput(format!(
            "ell_max={ell_max} exceeds the central triangle apex {}",
            width as isize - 1
        )));
    }
    fit_alpha(&triangle_average(lattice)?, ell_min, ell_max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LengthSummary {
    pub xi: Option<f64>,
    pub decay: DecayFit,
    pub gamma: f64,
    pub tau: Option<f64>,
    pub alpha: Option<AlphaFit>,
}

impl LengthSummary {
    pub fn from_profile(profile: &ScaleProfile) -> Self {
        LengthSummary {
            xi: expected_correlation_length(profile),
            decay: correlation_decay_length(profile),
            gamma: large_scale_information(profile),
            tau: expected_edge_correlation_length(profile),
            alpha: None,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        self.decay.lambda.value()
    }

    pub fn to_record(&self) -> SummaryRecord {
        SummaryRecord {
            xi: self.xi,
            lambda: self.decay.lambda.value(),
            tau: self.tau,
            gamma: Some(self.gamma),
            alpha: self.alpha.as_ref().map(|a| a.alpha),
            alpha_stderr: self.alpha.as_ref().map(|a| a.stderr),
            fit_points: self.decay.points,
            lambda_slope: self.decay.slope,
            lambda_status: self.decay.lambda.status().to_string(),
        }
    }
}

/// Serialized form of a `LengthSummary`; undefined values are `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub xi: Option<f64>,
    pub lambda: Option<f64>,
    pub tau: Option<f64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub alpha_stderr: Option<f64>,
    pub fit_points: usize,
    #[serde(default)]
    pub lambda_slope: Option<f64>,
    #[serde(default = "default_status")]
    pub lambda_status: String,
}

fn default_status() -> String {
    "undefined".into()
}

impl SummaryRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
