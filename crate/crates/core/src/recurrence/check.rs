//! Two-letter renormalizations `T_{b1 b2} = T_{b2} ∘ T_{b1}` with pruning, and
//! the recurrence check of a candidate under a (perturbed) system.

use rayon::prelude::*;
use serde::Serialize;

use crate::ifs::{IfsSpec, Point, SimilarityMap, Symbol};
use crate::line::Line;
use crate::recurrence::candidate::RecurrentCandidate;
use crate::recurrence::grid::{GridSet, LineGrid};

/// The maps `T_b` of a system with the data needed to discard words early.
///
/// `|T_b(u).t|` is the distance from `f_b(0)` to `u` divided by `r_b`, so a
/// first letter can only lead to an image with `|t| <= bound` when
/// `dist(f_{b1}(0), u) <= r_{b1} (R + r_max bound)`, `R = max |f_b(0)|`.
#[derive(Debug, Clone)]
pub struct Renormalizer {
    inv: Vec<SimilarityMap>,
    origins: Vec<Point>,
    ratios: Vec<f64>,
    reach: f64,
    r_max: f64,
}

impl Renormalizer {
    pub fn new(ifs: &IfsSpec) -> Self {
        let maps: Vec<SimilarityMap> = ifs.maps().iter().map(|m| m.as_map()).collect();
        let origins: Vec<Point> = maps.iter().map(|m| m.translation).collect();
        let ratios: Vec<f64> = maps.iter().map(|m| m.scale).collect();
        Renormalizer {
            inv: maps.iter().map(SimilarityMap::inverse).collect(),
            reach: origins.iter().map(|p| p.norm()).fold(0.0, f64::max),
            r_max: ratios.iter().cloned().fold(0.0, f64::max),
            origins,
            ratios,
        }
    }

    /// Letters `b1` that may start a word with image offset within `bound`.
    pub fn first_letters<'a>(&'a self, u: &'a Line, bound: f64) -> impl Iterator<Item = Symbol> + 'a {
        let (s, c) = u.theta.sin_cos();
        let reach = self.reach + self.r_max * bound;
        (0..self.inv.len()).filter(move |&b| {
            let p = self.origins[b];
            (-p.x * s + p.y * c - u.t).abs() <= self.ratios[b] * reach + 1e-12
        })
    }

    /// The first word `b1 b2` (in lexicographic order) whose image is accepted.
    pub fn find(
        &self,
        u: &Line,
        bound: f64,
        mut accept: impl FnMut(&Line) -> bool,
    ) -> Option<(Symbol, Symbol, Line)> {
        for b1 in self.first_letters(u, bound) {
            let u1 = self.inv[b1].map_line(u);
            let (s, c) = u1.theta.sin_cos();
            for (b2, p) in self.origins.iter().enumerate() {
                if (-p.x * s + p.y * c - u1.t).abs() > self.ratios[b2] * bound + 1e-12 {
                    continue;
                }
                let u2 = self.inv[b2].map_line(&u1);
                if accept(&u2) {
                    return Some((b1, b2, u2));
                }
            }
        }
        None
    }

    /// `T_{b1 b2}(u)` without pruning.
    pub fn apply(&self, b1: Symbol, b2: Symbol, u: &Line) -> Line {
        self.inv[b2].map_line(&self.inv[b1].map_line(u))
    }
}

/// Offset bound for images that can land on the grid.
pub fn grid_bound(grid: &LineGrid) -> f64 {
    grid.t_max + grid.t_pitch
}

/// Whether some `b ∈ 𝒜²` maps `u` within one grid step of `𝓛⁰`.
pub fn in_omega_zero(renorm: &Renormalizer, cand: &RecurrentCandidate, u: &Line) -> bool {
    renorm
        .find(u, grid_bound(&cand.grid), |v| cand.zero_hit.contains_line(&cand.grid, v))
        .is_some()
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceWitness {
    pub theta: f64,
    pub t: f64,
    pub word: String,
    pub image: Line,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceReport {
    pub total: usize,
    pub recurred: usize,
    pub fraction: f64,
    pub failure_count: usize,
    pub failures: Vec<Line>,
    pub witnesses: Vec<RecurrenceWitness>,
    #[serde(skip)]
    pub recurred_set: GridSet,
}

impl RecurrenceReport {
    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }
}

/// For every grid point of `𝓛`, searches `b ∈ 𝒜²` with `T_b(u)` within `ρ/2`
/// of `𝓛`. Lists in the report keep the first `limit` entries in grid order.
pub fn check_recurrence(ifs: &IfsSpec, cand: &RecurrentCandidate, limit: usize) -> RecurrenceReport {
    let renorm = Renormalizer::new(ifs);
    let grid = &cand.grid;
    let bound = grid_bound(grid);
    let found: Vec<Option<(Symbol, Symbol, Line)>> = cand
        .core
        .bits
        .par_chunks(grid.n_t)
        .enumerate()
        .flat_map_iter(|(i, row)| {
            let renorm = &renorm;
            row.iter().enumerate().filter(|(_, &m)| m).map(move |(j, _)| {
                let u = grid.line(grid.index(i, j));
                renorm.find(&u, bound, |v| cand.core_hit.contains_line(grid, v))
            })
        })
        .collect();
    let mut recurred_set = GridSet::empty(grid);
    let mut failures = Vec::new();
    let mut witnesses = Vec::new();
    let mut failure_count = 0;
    for (k, hit) in cand.core.iter().zip(&found) {
        let u = grid.line(k);
        match hit {
            Some((b1, b2, img)) => {
                recurred_set.bits[k] = true;
                if witnesses.len() < limit {
                    witnesses.push(RecurrenceWitness {
                        theta: u.theta,
                        t: u.t,
                        word: format!("{}{}", ifs.symbols()[*b1], ifs.symbols()[*b2]),
                        image: *img,
                    });
                }
            }
            None => {
                failure_count += 1;
                if failures.len() < limit {
                    failures.push(u);
                }
            }
        }
    }
    let total = found.len();
    RecurrenceReport {
        total,
        recurred: total - failure_count,
        fraction: if total == 0 { 1.0 } else { (total - failure_count) as f64 / total as f64 },
        failure_count,
        failures,
        witnesses,
        recurred_set,
    }
}

/// Re-derives each reported witness image from the word and tests it against `𝓛`.
pub fn recheck_witnesses(ifs: &IfsSpec, cand: &RecurrentCandidate, report: &RecurrenceReport) -> bool {
    let renorm = Renormalizer::new(ifs);
    report.witnesses.iter().all(|w| {
        let (b1, b2) = match split_pair(ifs, &w.word) {
            Some(p) => p,
            None => return false,
        };
        let img = renorm.apply(b1, b2, &Line { theta: w.theta, t: w.t });
        cand.core_hit.contains_line(&cand.grid, &img)
    })
}

fn split_pair(ifs: &IfsSpec, word: &str) -> Option<(Symbol, Symbol)> {
    for (a, name) in ifs.symbols().iter().enumerate() {
        if let Some(rest) = word.strip_prefix(name.as_str()) {
            if let Ok(b) = ifs.symbol_index(rest) {
                return Some((a, b));
            }
        }
    }
    None
}
