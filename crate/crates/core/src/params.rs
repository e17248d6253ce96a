//! Numerical constants and grid settings, with the rules that fill in the
//! derived ones (`c1`, `c7`, `c8`, `c9`, `c10`, `N`) from a working alphabet.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ifs::{IfsSpec, PartitionRule};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    pub rho: f64,
    pub epsilon: f64,
    /// Working ratios must lie in `(c0⁻¹ ρ^{1/2}, c0 ρ^{1/2})`.
    pub c0: f64,
    /// Shift scale: `γ` moves a square by `γ c1 ρ`. `None` picks the largest
    /// value that keeps every perturbed map ε-close, times 0.9.
    pub c1: Option<f64>,
    pub c2: f64,
    pub c3: f64,
    /// L² threshold for the direction set; `None` selects it automatically.
    pub c5: Option<f64>,
    pub c6: f64,
    pub c7: Option<f64>,
    pub c8: Option<f64>,
    /// Cylinder regularity constant; `None` measures it.
    pub c9: Option<f64>,
    pub c10: Option<f64>,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            rho: 4f64.powi(-4),
            epsilon: 0.3,
            c0: 2.0,
            c1: None,
            c2: 1.0,
            c3: 16.0,
            c5: None,
            c6: 0.05,
            c7: None,
            c8: None,
            c9: None,
            c10: None,
        }
    }
}

impl Constants {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(invalid("constants.rho", format!("{} is not in (0, 1)", self.rho)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < PI / 2.0) {
            return Err(invalid(
                "constants.epsilon",
                format!("{} is not in (0, π/2)", self.epsilon),
            ));
        }
        let named = [
            ("constants.c0", Some(self.c0)),
            ("constants.c1", self.c1),
            ("constants.c2", Some(self.c2)),
            ("constants.c3", Some(self.c3)),
            ("constants.c5", self.c5),
            ("constants.c6", Some(self.c6)),
            ("constants.c7", self.c7),
            ("constants.c8", self.c8),
            ("constants.c9", self.c9),
            ("constants.c10", self.c10),
        ];
        for (name, v) in named {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(name, format!("{v} is not positive")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Every attempt draws a fresh assignment.
    #[default]
    Fresh,
    /// Later attempts redraw only the symbols near failing lines.
    ResampleFailing,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Pitch of the direction grid; defaults to `ρ/4`.
    pub theta_pitch: Option<f64>,
    /// Pitch of the offset grid; defaults to `ρ/4`.
    pub t_pitch: Option<f64>,
    /// Histogram bin width; defaults to `ρ^{1/2}/8`.
    pub delta: Option<f64>,
    /// Number of rotation angles sampled in `(-ε, ε)` per slice word.
    pub phi_samples: usize,
    /// Scale of the working alphabet; defaults to `ρ^{1/2}`.
    pub working_scale: Option<f64>,
    pub partition: PartitionRule,
    pub certify_depth: usize,
    pub certify_resolution: f64,
    /// Number of directions in the direction set sampled for certification.
    pub certify_samples: usize,
    pub stopping_budget: u64,
    /// Cap on stopping words streamed per certified direction (no storage).
    pub certify_budget: u64,
    pub level_budget: u64,
    pub search_budget: u64,
    pub search_mode: SearchMode,
    /// Cap on failure and witness lists in reports.
    pub report_limit: usize,
    /// Samples used for the Monte Carlo failure estimate.
    pub probability_samples: usize,
    pub raster_size: usize,
    /// Directions evaluated by a standalone scan; defaults to the direction
    /// count of the line grid.
    pub scan_directions: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            theta_pitch: None,
            t_pitch: None,
            delta: None,
            phi_samples: 32,
            working_scale: None,
            partition: PartitionRule::Interior,
            certify_depth: 10,
            certify_resolution: 1e-3,
            certify_samples: 10,
            stopping_budget: 5_000_000,
            certify_budget: 50_000_000,
            level_budget: 5_000_000,
            search_budget: 10_000,
            search_mode: SearchMode::Fresh,
            report_limit: 100,
            probability_samples: 64,
            raster_size: 512,
            scan_directions: None,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("grid.theta_pitch", self.theta_pitch),
            ("grid.t_pitch", self.t_pitch),
            ("grid.delta", self.delta),
            ("grid.working_scale", self.working_scale),
            ("grid.certify_resolution", Some(self.certify_resolution)),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(name, format!("{v} is not positive")));
                }
            }
        }
        if self.phi_samples == 0 {
            return Err(invalid("grid.phi_samples", "must be at least 1"));
        }
        if self.scan_directions.is_some_and(|n| n < 2) {
            return Err(invalid("grid.scan_directions", "need at least two directions"));
        }
        if self.raster_size == 0 {
            return Err(invalid("grid.raster_size", "must be at least 1"));
        }
        Ok(())
    }

    pub fn theta_pitch(&self, rho: f64) -> f64 {
        self.theta_pitch.unwrap_or(rho / 4.0)
    }

    pub fn t_pitch(&self, rho: f64) -> f64 {
        self.t_pitch.unwrap_or(rho / 4.0)
    }

    pub fn delta(&self, rho: f64) -> f64 {
        self.delta.unwrap_or(rho.sqrt() / 8.0)
    }

    pub fn working_scale(&self, rho: f64) -> f64 {
        self.working_scale.unwrap_or(rho.sqrt())
    }

    pub fn theta_count(&self, rho: f64) -> usize {
        ((PI / self.theta_pitch(rho)).ceil() as usize).max(2)
    }
}

/// Every constant after defaults and measurements are applied.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub rho: f64,
    pub epsilon: f64,
    pub dimension: f64,
    pub c0: f64,
    pub c0_holds: bool,
    pub c1: f64,
    pub c1_max_close: f64,
    pub c2: f64,
    pub c3: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
    pub c10: f64,
    /// Required number of distinct slice words, `max(1, round(c6² ρ^{-(d-1)/2}))`.
    pub n_words: usize,
    /// Worst-case `sup |f^ω - f| / r` over all admissible perturbations.
    pub closeness_bound: f64,
    /// `c3 ρ⁻⁵ exp(-c2 ρ^{-(d-1)/2})`
    pub union_bound: f64,
}

/// `max(1, round(c6² ρ^{-(d-1)/2}))`. The clamp keeps coarse scales usable;
/// only a non-finite count is rejected.
pub fn required_words(c6: f64, rho: f64, d: f64) -> Result<usize> {
    let n = (c6 * c6 * rho.powf(-(d - 1.0) / 2.0)).round();
    if !n.is_finite() {
        return Err(Error::RhoTooLarge { d });
    }
    Ok(n.max(1.0) as usize)
}

/// Largest `c1` for which every perturbation of a map with ratio `r_min` stays
/// strictly ε-close: `√2 sin(ε/2) + √2 c1 ρ / r_min < ε`.
pub fn max_close_c1(epsilon: f64, rho: f64, r_min: f64) -> f64 {
    ((epsilon - SQRT_2 * (epsilon / 2.0).sin()) * r_min / (SQRT_2 * rho)).max(0.0)
}

pub fn closeness_bound(epsilon: f64, c1: f64, rho: f64, r_min: f64) -> f64 {
    SQRT_2 * (epsilon / 2.0).sin() + SQRT_2 * c1 * rho / r_min
}

/// Measured cylinder regularity: the smallest `c` (times 1.01) with
/// `c⁻¹ ρ^{d/2} < μ(f_a(I)) < c ρ^{d/2}` and `c⁻¹ ρ^{1/2} < |𝒥(a)| < c ρ^{1/2}`
/// over the working alphabet and all directions.
pub fn measure_c9(working: &IfsSpec, rho: f64) -> f64 {
    let d = working.dimension();
    let mass_scale = rho.powf(d / 2.0);
    let len_scale = rho.sqrt();
    let mut worst: f64 = 1.0;
    for a in 0..working.len() {
        let r = working.ratio(a);
        let mass = r.powf(d);
        // a square of side r projects to lengths between r and √2 r
        worst = worst
            .max(mass / mass_scale)
            .max(mass_scale / mass)
            .max(SQRT_2 * r / len_scale)
            .max(len_scale / r);
    }
    1.01 * worst
}

pub fn resolve(constants: &Constants, working: &IfsSpec) -> Result<Resolved> {
    constants.validate()?;
    let rho = constants.rho;
    let epsilon = constants.epsilon;
    let d = working.dimension();
    let ratios: Vec<f64> = (0..working.len()).map(|a| working.ratio(a)).collect();
    let r_min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let sq = rho.sqrt();
    let c0 = constants.c0;
    let c0_holds = ratios.iter().all(|&r| r > sq / c0 && r < c0 * sq);
    let c1_max_close = max_close_c1(epsilon, rho, r_min);
    let c1 = constants.c1.unwrap_or(0.9 * c1_max_close);
    if !(c1 > 0.0) {
        return Err(invalid("constants.c1", "no positive shift scale keeps the maps ε-close"));
    }
    let c9 = constants.c9.unwrap_or_else(|| measure_c9(working, rho));
    let c10 = constants.c10.unwrap_or(c9.powi(-2) / 16.0);
    let c6 = constants.c6;
    let c7 = constants.c7.unwrap_or(0.5 * c6 * c10 / c9 * 0.5 * epsilon);
    let c8 = constants.c8.unwrap_or(c6 * c10 / c9 * c6 / 16.0);
    Ok(Resolved {
        rho,
        epsilon,
        dimension: d,
        c0,
        c0_holds,
        c1,
        c1_max_close,
        c2: constants.c2,
        c3: constants.c3,
        c6,
        c7,
        c8,
        c9,
        c10,
        n_words: required_words(c6, rho, d)?,
        closeness_bound: closeness_bound(epsilon, c1, rho, r_min),
        union_bound: constants.c3 * rho.powi(-5) * (-constants.c2 * rho.powf(-(d - 1.0) / 2.0)).exp(),
    })
}
