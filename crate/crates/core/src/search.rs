//! Randomized search for an assignment under which every net line has a
//! two-letter renormalization landing in `𝓛⁰`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::ifs::{IfsSpec, Symbol};
use crate::line::Line;
use crate::params::SearchMode;
use crate::perturb::{perturbed_spec, OmegaAssignment, PerturbationLaw};
use crate::recurrence::candidate::RecurrentCandidate;
use crate::recurrence::check::{grid_bound, in_omega_zero, Renormalizer};

/// Fraction of `samples` draws for which `u` has a witness.
pub fn estimate_success_prob(
    ifs: &IfsSpec,
    u: &Line,
    cand: &RecurrentCandidate,
    law: &PerturbationLaw,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(invalid("samples", "must be at least 1"));
    }
    if !cand.one.contains_line(&cand.grid, u) {
        return Err(invalid("u", "line is not a grid member of the ρ-thickened candidate"));
    }
    let hits = (0..samples as u64)
        .into_par_iter()
        .filter(|&k| {
            let spec = perturbed_spec(ifs, &law.sample(ifs, seed, k), law.c1, law.rho);
            in_omega_zero(&Renormalizer::new(&spec), cand, u)
        })
        .count();
    Ok(hits as f64 / samples as f64)
}

#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    pub budget: u64,
    pub seed: u64,
    pub mode: SearchMode,
    /// Lines remembered from failed attempts and tried first.
    pub priority_cap: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttemptRecord {
    pub attempt: u64,
    /// Net lines evaluated before the attempt was decided.
    pub evaluated: usize,
    pub failures: usize,
    pub full_pass: bool,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub omega0: Option<OmegaAssignment>,
    /// The fully evaluated assignment with the highest coverage.
    pub best: Option<OmegaAssignment>,
    pub attempts: u64,
    pub accepted_attempt: Option<u64>,
    pub delta_size: usize,
    /// Per net line: witness found under the reported assignment (the
    /// accepted one, or the best fully evaluated one).
    pub success: Vec<bool>,
    pub best_coverage: f64,
    pub history: Vec<AttemptRecord>,
}

impl SearchOutcome {
    pub fn covered(&self) -> usize {
        self.success.iter().filter(|&&s| s).count()
    }
}

fn line_of(cand: &RecurrentCandidate, k: u32) -> Line {
    cand.grid.line(k as usize)
}

fn evaluate_all(renorm: &Renormalizer, cand: &RecurrentCandidate) -> Vec<bool> {
    cand.delta
        .par_iter()
        .map(|&k| in_omega_zero(renorm, cand, &line_of(cand, k)))
        .collect()
}

/// Draws assignments from the seeded stream until one passes every net line.
/// Lines that failed earlier attempts are tried first so that most
/// rejections are cheap.
pub fn search_omega0(
    ifs: &IfsSpec,
    cand: &RecurrentCandidate,
    law: &PerturbationLaw,
    config: &SearchConfig,
) -> SearchOutcome {
    let mut outcome = SearchOutcome {
        omega0: None,
        best: None,
        attempts: 0,
        accepted_attempt: None,
        delta_size: cand.delta.len(),
        success: vec![false; cand.delta.len()],
        best_coverage: 0.0,
        history: Vec::new(),
    };
    if cand.delta.is_empty() {
        return outcome;
    }
    let mut priority: Vec<usize> = Vec::new();
    let mut current: Option<(OmegaAssignment, Vec<usize>)> = None;
    for attempt in 0..config.budget {
        outcome.attempts = attempt + 1;
        let omega = match (config.mode, &current) {
            (SearchMode::ResampleFailing, Some((base, fails))) => {
                resample_failing(ifs, cand, law, base, fails, config.seed, attempt)
            }
            _ => law.sample(ifs, config.seed, attempt),
        };
        let spec = perturbed_spec(ifs, &omega, law.c1, law.rho);
        let renorm = Renormalizer::new(&spec);
        if let Some(pos) = priority
            .iter()
            .position(|&n| !in_omega_zero(&renorm, cand, &line_of(cand, cand.delta[n])))
        {
            // bring the killer to the front for the next attempt
            let n = priority.remove(pos);
            priority.insert(0, n);
            outcome.history.push(AttemptRecord {
                attempt,
                evaluated: pos + 1,
                failures: 1,
                full_pass: false,
            });
            continue;
        }
        let table = evaluate_all(&renorm, cand);
        let fails: Vec<usize> = table
            .iter()
            .enumerate()
            .filter_map(|(n, &ok)| (!ok).then_some(n))
            .collect();
        outcome.history.push(AttemptRecord {
            attempt,
            evaluated: table.len(),
            failures: fails.len(),
            full_pass: true,
        });
        let coverage = 1.0 - fails.len() as f64 / table.len() as f64;
        if coverage > outcome.best_coverage || outcome.history.iter().filter(|h| h.full_pass).count() == 1 {
            outcome.best_coverage = coverage;
            outcome.success = table;
            outcome.best = Some(omega.clone());
        }
        if fails.is_empty() {
            outcome.omega0 = Some(omega);
            outcome.accepted_attempt = Some(attempt);
            return outcome;
        }
        for &n in &fails {
            if priority.len() >= config.priority_cap {
                break;
            }
            if !priority.contains(&n) {
                priority.push(n);
            }
        }
        let better = current.as_ref().is_none_or(|(_, f)| fails.len() <= f.len());
        if better {
            current = Some((omega, fails));
        }
    }
    outcome
}

/// Symbols that may start a witness word for `u`.
fn nearby_first_part(ifs: &IfsSpec, renorm: &Renormalizer, cand: &RecurrentCandidate, u: &Line) -> Vec<Symbol> {
    renorm
        .first_letters(u, grid_bound(&cand.grid))
        .filter(|&b| ifs.in_part_one(b))
        .collect()
}

fn resample_failing(
    ifs: &IfsSpec,
    cand: &RecurrentCandidate,
    law: &PerturbationLaw,
    base: &OmegaAssignment,
    fails: &[usize],
    seed: u64,
    attempt: u64,
) -> OmegaAssignment {
    let spec = perturbed_spec(ifs, base, law.c1, law.rho);
    let renorm = Renormalizer::new(&spec);
    let mut redraw = vec![false; ifs.len()];
    for &n in fails.iter().take(256) {
        for b in nearby_first_part(ifs, &renorm, cand, &line_of(cand, cand.delta[n])) {
            redraw[b] = true;
        }
    }
    let fresh = law.sample(ifs, seed, attempt);
    let mut out = base.clone();
    for (k, &a) in base.symbols.iter().enumerate() {
        if redraw[a] {
            out.values[k] = fresh.values[k];
        }
    }
    out
}

/// Re-runs the `Ω⁰` test for every net line under `omega`.
pub fn revalidate(ifs: &IfsSpec, cand: &RecurrentCandidate, law: &PerturbationLaw, omega: &OmegaAssignment) -> bool {
    let spec = perturbed_spec(ifs, omega, law.c1, law.rho);
    evaluate_all(&Renormalizer::new(&spec), cand).iter().all(|&ok| ok)
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureEstimate {
    pub points: usize,
    pub samples: usize,
    /// Largest Monte Carlo failure fraction over the probed net lines.
    pub max_failure: f64,
    pub mean_failure: f64,
}

/// Monte Carlo failure rates at up to `points` evenly spread net lines, each
/// from the first `samples` draws of the seeded stream.
pub fn estimate_failure_prob(
    ifs: &IfsSpec,
    cand: &RecurrentCandidate,
    law: &PerturbationLaw,
    points: usize,
    samples: usize,
    seed: u64,
) -> FailureEstimate {
    let n = cand.delta.len();
    let picks: Vec<Line> = (0..points.min(n))
        .map(|k| line_of(cand, cand.delta[k * n / points.min(n)]))
        .collect();
    let renorms: Vec<Renormalizer> = (0..samples as u64)
        .map(|s| Renormalizer::new(&perturbed_spec(ifs, &law.sample(ifs, seed, s), law.c1, law.rho)))
        .collect();
    let rates: Vec<f64> = picks
        .par_iter()
        .map(|u| {
            let fails = renorms.iter().filter(|r| !in_omega_zero(r, cand, u)).count();
            fails as f64 / samples.max(1) as f64
        })
        .collect();
    FailureEstimate {
        points: rates.len(),
        samples,
        max_failure: rates.iter().cloned().fold(0.0, f64::max),
        mean_failure: if rates.is_empty() {
            0.0
        } else {
            rates.iter().sum::<f64>() / rates.len() as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{Similarity, Square};
    use crate::line::line_square_intersects;
    use crate::recurrence::grid::{GridSet, LineGrid};

    fn four_corner() -> IfsSpec {
        let maps = vec![
            Similarity::scaling(0.5, 0.0, 0.0).unwrap(),
            Similarity::scaling(0.5, 0.5, 0.0).unwrap(),
            Similarity::scaling(0.5, 0.0, 0.5).unwrap(),
            Similarity::scaling(0.5, 0.5, 0.5).unwrap(),
        ];
        IfsSpec::new(["a", "b", "c", "d"].map(String::from).to_vec(), maps, None).unwrap()
    }

    // Perturbations far below the grid resolution: the square K = I is
    // effectively unperturbed and every line meeting it has a witness.
    fn tiny_law() -> PerturbationLaw {
        PerturbationLaw {
            epsilon: 1e-5,
            c1: 1.0,
            rho: 1e-5,
        }
    }

    fn all_lines() -> RecurrentCandidate {
        let grid = LineGrid::new(96, 1.0 / 48.0, 1.5).unwrap();
        let zero = GridSet::from_fn(&grid, |u| line_square_intersects(u, &Square::unit()));
        RecurrentCandidate::from_zero_set(grid, zero, 1e-9).unwrap()
    }

    fn config(budget: u64) -> SearchConfig {
        SearchConfig {
            budget,
            seed: 11,
            mode: SearchMode::Fresh,
            priority_cap: 64,
        }
    }

    #[test]
    fn all_lines_candidate_is_always_hit() {
        let ifs = four_corner();
        let cand = all_lines();
        let u = Line::new(0.4, 0.3);
        let p = estimate_success_prob(&ifs, &u, &cand, &tiny_law(), 20, 5).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(p, estimate_success_prob(&ifs, &u, &cand, &tiny_law(), 20, 5).unwrap());
    }

    #[test]
    fn far_candidate_is_never_hit() {
        let ifs = four_corner();
        let grid = LineGrid::new(32, 1.0 / 16.0, 4.0).unwrap();
        let mut zero = GridSet::empty(&grid);
        zero.bits[grid.nearest(&Line::new(1.0, 3.9)).unwrap()] = true;
        let cand = RecurrentCandidate::from_zero_set(grid, zero, 1e-9).unwrap();
        let u = Line::new(1.0, 3.9);
        let p = estimate_success_prob(&ifs, &u, &cand, &tiny_law(), 10, 0).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn search_accepts_the_first_draw() {
        let ifs = four_corner();
        let cand = all_lines();
        let out = search_omega0(&ifs, &cand, &tiny_law(), &config(5));
        assert_eq!(out.accepted_attempt, Some(0));
        assert_eq!(out.attempts, 1);
        assert!(out.success.iter().all(|&s| s));
        assert!(revalidate(&ifs, &cand, &tiny_law(), out.omega0.as_ref().unwrap()));
    }

    #[test]
    fn zero_budget_finds_nothing() {
        let out = search_omega0(&four_corner(), &all_lines(), &tiny_law(), &config(0));
        assert!(out.omega0.is_none());
        assert_eq!(out.attempts, 0);
    }
}
