//! End-to-end orchestration: direction set, slices, candidate, search,
//! recurrence and certificates, with serializable reports.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::ifs::{check_osc_unit_square, IfsSpec, OscReport};
use crate::measure::{build_direction_set, DirectionSet};
use crate::params::{resolve, Resolved};
use crate::perturb::{build_perturbed_ifs, OmegaAssignment, PerturbationFile, PerturbationLaw};
use crate::recurrence::candidate::{build_candidate, CandidateSummary, RecurrentCandidate};
use crate::recurrence::certify::{certify_projection_intervals, ProjectionCertificate};
use crate::recurrence::check::{check_recurrence, RecurrenceReport};
use crate::recurrence::grid::LineGrid;
use crate::recurrence::slice::{SliceBuilder, SliceParams, SliceSet};
use crate::search::{estimate_failure_prob, revalidate, search_omega0, FailureEstimate, SearchConfig, SearchOutcome};

/// Loaded system, working alphabet and resolved constants.
#[derive(Debug, Clone)]
pub struct Setup {
    pub config: RunConfig,
    pub base: IfsSpec,
    pub osc: OscReport,
    pub working: IfsSpec,
    pub constants: Resolved,
}

impl Setup {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let base = config.ifs_spec()?;
        let d = base.dimension();
        if d <= 1.0 {
            return Err(Error::DimensionTooSmall(d));
        }
        let osc = check_osc_unit_square(&base);
        let rho = config.constants.rho;
        let working = base.refine(
            config.grid.working_scale(rho),
            config.grid.partition,
            config.grid.stopping_budget,
        )?;
        let constants = resolve(&config.constants, &working)?;
        Ok(Setup {
            config,
            base,
            osc,
            working,
            constants,
        })
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn law(&self) -> PerturbationLaw {
        PerturbationLaw {
            epsilon: self.constants.epsilon,
            c1: self.constants.c1,
            rho: self.constants.rho,
        }
    }

    pub fn line_grid(&self) -> Result<LineGrid> {
        let rho = self.constants.rho;
        let g = &self.config.grid;
        LineGrid::new(g.theta_count(rho), g.t_pitch(rho), 1.0 + 2.0 * rho)
    }

    pub fn direction_set(&self, grid_size: usize) -> Result<DirectionSet> {
        let rho = self.constants.rho;
        build_direction_set(
            &self.base,
            grid_size,
            rho,
            self.config.grid.delta(rho),
            self.config.constants.c5,
            self.constants.epsilon,
            self.config.grid.stopping_budget,
        )
    }
}

/// Direction scan of the base system. Unlike [`Setup::new`] this does not
/// require `d > 1`.
pub fn scan(config: &RunConfig) -> Result<DirectionSet> {
    config.validate()?;
    let base = config.ifs_spec()?;
    let c = &config.constants;
    let g = &config.grid;
    build_direction_set(
        &base,
        g.scan_directions.unwrap_or_else(|| g.theta_count(c.rho)),
        c.rho,
        g.delta(c.rho),
        c.c5,
        c.epsilon,
        g.stopping_budget,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectionSummary {
    pub grid_size: usize,
    pub c5: f64,
    pub members: usize,
    pub excluded_fraction: f64,
    pub excluded_measure: f64,
    pub mean_l2: f64,
}

impl DirectionSummary {
    pub fn of(e: &DirectionSet) -> Self {
        DirectionSummary {
            grid_size: e.len(),
            c5: e.c5,
            members: e.member_count(),
            excluded_fraction: e.excluded_fraction,
            excluded_measure: e.excluded_measure,
            mean_l2: e.mean_l2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SliceSummary {
    pub directions: usize,
    pub empty_directions: usize,
    /// Smallest `|L(θ)|` over the grid directions of the direction set.
    pub min_measure: f64,
    pub min_theta: f64,
    pub mean_measure: f64,
}

/// The direction set, slices and thickened candidate.
pub struct Built {
    pub grid: LineGrid,
    pub directions: DirectionSet,
    pub slices: Vec<SliceSet>,
    pub candidate: RecurrentCandidate,
}

impl Built {
    pub fn slice_summary(&self) -> SliceSummary {
        let in_e: Vec<&SliceSet> = self
            .slices
            .iter()
            .filter(|s| self.directions.member[s.theta_index])
            .collect();
        let measures: Vec<f64> = in_e.iter().map(|s| s.measure(&self.grid)).collect();
        let (min_k, min_measure) = measures
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, &m)| if m < acc.1 { (k, m) } else { acc });
        SliceSummary {
            directions: in_e.len(),
            empty_directions: measures.iter().filter(|&&m| m == 0.0).count(),
            min_measure: if in_e.is_empty() { 0.0 } else { min_measure },
            min_theta: in_e.get(min_k).map_or(0.0, |s| s.theta),
            mean_measure: measures.iter().sum::<f64>() / measures.len().max(1) as f64,
        }
    }

    /// `count` directions of the set, evenly spread through its members.
    pub fn sample_directions(&self, count: usize) -> Vec<f64> {
        let members: Vec<usize> = (0..self.grid.n_theta)
            .filter(|&i| self.directions.member[i])
            .collect();
        let n = members.len();
        (0..count.min(n))
            .map(|k| self.grid.theta(members[(2 * k + 1) * n / (2 * count.min(n))]))
            .collect()
    }
}

pub fn build(setup: &Setup) -> Result<Built> {
    let grid = setup.line_grid()?;
    // the direction set lives on the same direction grid as the lines
    let directions = setup.direction_set(grid.n_theta)?;
    let c = &setup.constants;
    let builder = SliceBuilder::new(
        &setup.working,
        grid,
        SliceParams {
            epsilon: c.epsilon,
            c7: c.c7,
            n_words: c.n_words,
            phi_samples: setup.config.grid.phi_samples,
        },
    )?;
    let slices: Vec<SliceSet> = (0..grid.n_theta)
        .into_par_iter()
        .map(|i| builder.build(i, &directions))
        .collect();
    let candidate = build_candidate(grid, &slices, c.rho)?;
    Ok(Built {
        grid,
        directions,
        slices,
        candidate,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildReport {
    pub dimension: f64,
    pub osc: OscReport,
    pub working_alphabet: usize,
    pub part_one: usize,
    pub constants: Resolved,
    pub grid: LineGrid,
    pub directions: DirectionSummary,
    pub slices: SliceSummary,
    pub candidate: CandidateSummary,
}

pub fn build_report(setup: &Setup, built: &Built) -> BuildReport {
    BuildReport {
        dimension: setup.base.dimension(),
        osc: setup.osc.clone(),
        working_alphabet: setup.working.len(),
        part_one: setup.working.part_one().len(),
        constants: setup.constants.clone(),
        grid: built.grid,
        directions: DirectionSummary::of(&built.directions),
        slices: built.slice_summary(),
        candidate: built.candidate.summary(setup.constants.c3),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbedSummary {
    pub epsilon_distance: f64,
    pub epsilon_close: bool,
    pub escaping: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub seed: u64,
    pub status: &'static str,
    pub attempts: u64,
    pub accepted_attempt: Option<u64>,
    pub delta_size: usize,
    pub covered: usize,
    pub best_coverage: f64,
    pub full_passes: usize,
    pub estimated_failure: FailureEstimate,
    pub union_bound: f64,
    pub revalidated: Option<bool>,
    /// Which assignment the perturbed summary and recurrence describe:
    /// "omega0" when accepted, otherwise "best coverage".
    pub assessed: Option<&'static str>,
    pub perturbed: Option<PerturbedSummary>,
    pub recurrence: Option<RecurrenceReport>,
}

/// Search plus everything derived from its outcome.
pub struct Searched {
    pub outcome: SearchOutcome,
    /// The accepted assignment, or the best one when none was accepted.
    pub omega: Option<OmegaAssignment>,
    pub perturbed: Option<IfsSpec>,
    pub recurrence: Option<RecurrenceReport>,
    pub report: SearchReport,
}

fn perturbed_summary(setup: &Setup, omega: &OmegaAssignment) -> Result<(IfsSpec, PerturbedSummary)> {
    let c = &setup.constants;
    let p = build_perturbed_ifs(&setup.working, omega, c.c1, c.rho)?;
    Ok((
        p.spec,
        PerturbedSummary {
            epsilon_distance: p.epsilon_distance,
            epsilon_close: p.epsilon_distance < c.epsilon,
            escaping: p.escaping,
        },
    ))
}

pub fn search(setup: &Setup, built: &Built) -> Result<Searched> {
    let g = &setup.config.grid;
    let law = setup.law();
    let outcome = search_omega0(
        &setup.working,
        &built.candidate,
        &law,
        &SearchConfig {
            budget: g.search_budget,
            seed: setup.seed(),
            mode: g.search_mode,
            priority_cap: 4096,
        },
    );
    let estimated_failure = estimate_failure_prob(
        &setup.working,
        &built.candidate,
        &law,
        64,
        g.probability_samples,
        setup.seed(),
    );
    let mut report = SearchReport {
        seed: setup.seed(),
        status: "no omega0 found",
        attempts: outcome.attempts,
        accepted_attempt: outcome.accepted_attempt,
        delta_size: outcome.delta_size,
        covered: outcome.covered(),
        best_coverage: outcome.best_coverage,
        full_passes: outcome.history.iter().filter(|h| h.full_pass).count(),
        estimated_failure,
        union_bound: setup.constants.union_bound,
        revalidated: None,
        assessed: None,
        perturbed: None,
        recurrence: None,
    };
    let mut searched = Searched {
        omega: outcome.omega0.clone().or_else(|| outcome.best.clone()),
        outcome,
        perturbed: None,
        recurrence: None,
        report: report.clone(),
    };
    if let Some(omega) = &searched.omega {
        let (spec, summary) = perturbed_summary(setup, omega)?;
        let rec = check_recurrence(&spec, &built.candidate, g.report_limit);
        if searched.outcome.omega0.is_some() {
            report.status = "omega0 found";
            report.assessed = Some("omega0");
            report.revalidated = Some(revalidate(&setup.working, &built.candidate, &law, omega));
        } else {
            report.assessed = Some("best coverage");
        }
        report.perturbed = Some(summary);
        report.recurrence = Some(rec.clone());
        searched.perturbed = Some(spec);
        searched.recurrence = Some(rec);
    }
    searched.report = report;
    Ok(searched)
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyReport {
    pub seed: u64,
    pub dimension: f64,
    pub osc_verified: bool,
    pub constants: Resolved,
    pub directions: DirectionSummary,
    pub slices: SliceSummary,
    pub candidate: CandidateSummary,
    pub search: SearchReport,
    pub certificates: Vec<ProjectionCertificate>,
    pub certified: usize,
    pub certified_fraction: f64,
}

/// Certificates at the given directions under the assessed perturbation.
pub fn certify(
    setup: &Setup,
    built: &Built,
    searched: &Searched,
    thetas: &[f64],
) -> Result<Vec<ProjectionCertificate>> {
    let (Some(spec), Some(rec)) = (&searched.perturbed, &searched.recurrence) else {
        return Ok(Vec::new());
    };
    let g = &setup.config.grid;
    certify_projection_intervals(
        spec,
        &built.candidate,
        rec,
        thetas,
        g.certify_resolution,
        g.certify_budget,
    )
}

pub fn certify_report(
    setup: &Setup,
    built: &Built,
    searched: &Searched,
    certificates: Vec<ProjectionCertificate>,
) -> CertifyReport {
    let certified = certificates.iter().filter(|c| c.certified()).count();
    CertifyReport {
        seed: setup.seed(),
        dimension: setup.base.dimension(),
        osc_verified: setup.osc.verified,
        constants: setup.constants.clone(),
        directions: DirectionSummary::of(&built.directions),
        slices: built.slice_summary(),
        candidate: built.candidate.summary(setup.constants.c3),
        search: searched.report.clone(),
        certified,
        certified_fraction: if certificates.is_empty() {
            0.0
        } else {
            certified as f64 / certificates.len() as f64
        },
        certificates,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub perturbed: PerturbedSummary,
    pub omega_zero_on_net: bool,
    pub recurrence: RecurrenceReport,
    pub certificates: Vec<ProjectionCertificate>,
}

/// Checks a stored assignment against a freshly built candidate.
pub fn verify(setup: &Setup, built: &Built, file: &PerturbationFile, thetas: &[f64]) -> Result<VerifyReport> {
    let omega = file.assignment(&setup.working)?;
    let law = file.law();
    let p = build_perturbed_ifs(&setup.working, &omega, law.c1, law.rho)?;
    let g = &setup.config.grid;
    let recurrence = check_recurrence(&p.spec, &built.candidate, g.report_limit);
    let certificates = certify_projection_intervals(
        &p.spec,
        &built.candidate,
        &recurrence,
        thetas,
        g.certify_resolution,
        g.certify_budget,
    )?;
    Ok(VerifyReport {
        perturbed: PerturbedSummary {
            epsilon_distance: p.epsilon_distance,
            epsilon_close: p.epsilon_distance < law.epsilon,
            escaping: p.escaping,
        },
        omega_zero_on_net: revalidate(&setup.working, &built.candidate, &law, &omega),
        recurrence,
        certificates,
    })
}

/// Normalizes a user-supplied direction into `[0, π)`.
pub fn normalize_theta(theta: f64) -> f64 {
    theta.rem_euclid(PI)
}
