//! The candidate `𝓛⁰ = {(θ, t) : θ ∈ E, t ∈ L(θ)}`, its thickenings by `ρ/2`
//! (`𝓛`) and `ρ` (`𝓛¹`), and a covering net `Δ` of `𝓛¹`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::recurrence::grid::{GridSet, LineGrid};
use crate::recurrence::slice::SliceSet;

#[derive(Debug, Clone, Serialize)]
pub struct CandidateSummary {
    pub zero_points: usize,
    pub core_points: usize,
    pub one_points: usize,
    pub delta_points: usize,
    pub delta_bound: f64,
    pub delta_step_theta: usize,
    pub delta_step_t: usize,
}

#[derive(Debug, Clone)]
pub struct RecurrentCandidate {
    pub grid: LineGrid,
    pub rho: f64,
    pub zero: GridSet,
    pub core: GridSet,
    pub one: GridSet,
    /// `𝓛⁰` widened by one grid step: target of the `Ω⁰` test.
    pub zero_hit: GridSet,
    /// `𝓛` widened by `ρ/2`: target of the recurrence check.
    pub core_hit: GridSet,
    /// Grid indices of the net points, increasing.
    pub delta: Vec<u32>,
    delta_steps: (usize, usize),
}

impl RecurrentCandidate {
    pub fn from_zero_set(grid: LineGrid, zero: GridSet, rho: f64) -> Result<Self> {
        if zero.count() == 0 {
            return Err(Error::EmptyCandidate);
        }
        let (pth, pt) = (grid.theta_pitch(), grid.t_pitch);
        let half = (LineGrid::steps(pth, rho / 2.0), LineGrid::steps(pt, rho / 2.0));
        let full = (LineGrid::steps(pth, rho), LineGrid::steps(pt, rho));
        let core = zero.dilate(&grid, half.0, half.1);
        let one = zero.dilate(&grid, full.0, full.1);
        let zero_hit = zero.dilate(&grid, 1, 1);
        let core_hit = core.dilate(&grid, half.0, half.1);
        let spacing = rho.powf(2.5);
        let delta_steps = (cover_radius(spacing, pth), cover_radius(spacing, pt));
        let delta = greedy_net(&grid, &one, delta_steps);
        Ok(RecurrentCandidate {
            grid,
            rho,
            zero,
            core,
            one,
            zero_hit,
            core_hit,
            delta,
            delta_steps,
        })
    }

    pub fn summary(&self, c3: f64) -> CandidateSummary {
        CandidateSummary {
            zero_points: self.zero.count(),
            core_points: self.core.count(),
            one_points: self.one.count(),
            delta_points: self.delta.len(),
            delta_bound: c3 * self.rho.powi(-5),
            delta_step_theta: self.delta_steps.0,
            delta_step_t: self.delta_steps.1,
        }
    }
}

/// Stacks the slices into `𝓛⁰` and thickens it.
pub fn build_candidate(grid: LineGrid, slices: &[SliceSet], rho: f64) -> Result<RecurrentCandidate> {
    let mut zero = GridSet::empty(&grid);
    for s in slices {
        for (j, &m) in s.member.iter().enumerate() {
            if m {
                zero.bits[grid.index(s.theta_index, j)] = true;
            }
        }
    }
    RecurrentCandidate::from_zero_set(grid, zero, rho)
}

// Index radius r with r·pitch < spacing, so net points end up `spacing` apart
// and never closer than one grid step.
fn cover_radius(spacing: f64, pitch: f64) -> usize {
    ((spacing / pitch - 1e-9).ceil() as usize).saturating_sub(1)
}

fn greedy_net(grid: &LineGrid, set: &GridSet, (kth, kt): (usize, usize)) -> Vec<u32> {
    if kth == 0 && kt == 0 {
        return set.iter().map(|k| k as u32).collect();
    }
    let mut covered = vec![false; grid.len()];
    let mut net = Vec::new();
    for k in set.iter() {
        if covered[k] {
            continue;
        }
        net.push(k as u32);
        let (i, j) = grid.split(k);
        for ii in i.saturating_sub(kth)..=(i + kth).min(grid.n_theta - 1) {
            for jj in j.saturating_sub(kt)..=(j + kt).min(grid.n_t - 1) {
                covered[grid.index(ii, jj)] = true;
            }
        }
    }
    net
}
