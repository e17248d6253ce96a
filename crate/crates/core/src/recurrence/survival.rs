//! Deciding that a line misses the attractor by descending the cylinder tree.

use serde::Serialize;

use crate::error::Error;
use crate::ifs::{IfsSpec, SimilarityMap, Square};
use crate::line::{line_square_intersects, Line};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "depth")]
pub enum Verdict {
    /// No cylinder square of this depth meets the line, so the line misses
    /// the attractor.
    CertifiedEmpty(usize),
    /// Squares meeting the line survive at every level up to this depth.
    SurvivingAtDepth(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct SurvivalReport {
    pub line: Line,
    pub depth: usize,
    /// Number of words of each length whose square meets the line.
    pub surviving_counts: Vec<u64>,
    pub verdict: Verdict,
}

impl SurvivalReport {
    pub fn is_empty(&self) -> bool {
        matches!(self.verdict, Verdict::CertifiedEmpty(_))
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("survival level {level} holds {count} squares, budget {budget}")]
pub struct SurvivalBudgetExceeded {
    pub level: usize,
    pub count: u64,
    pub budget: u64,
    pub partial: SurvivalReport,
}

impl From<SurvivalBudgetExceeded> for Error {
    fn from(e: SurvivalBudgetExceeded) -> Self {
        Error::BudgetExceeded {
            what: "survival level",
            count: e.count,
            budget: e.budget,
        }
    }
}

/// Breadth-first descent keeping the words whose squares meet `u`. Children
/// lie inside their parents, so the first empty level settles the question.
pub fn certify_line(
    ifs: &IfsSpec,
    u: &Line,
    max_depth: usize,
    budget: u64,
) -> Result<SurvivalReport, SurvivalBudgetExceeded> {
    let maps: Vec<SimilarityMap> = ifs.maps().iter().map(|m| m.as_map()).collect();
    let mut counts = Vec::with_capacity(max_depth + 1);
    let mut level = vec![SimilarityMap::identity()];
    let report = |counts: Vec<u64>, depth, verdict| SurvivalReport {
        line: *u,
        depth,
        surviving_counts: counts,
        verdict,
    };
    if !line_square_intersects(u, &Square::unit()) {
        counts.push(0);
        return Ok(report(counts, 0, Verdict::CertifiedEmpty(0)));
    }
    counts.push(1);
    for depth in 1..=max_depth {
        let mut next = Vec::new();
        for m in &level {
            for f in &maps {
                let c = m.compose(f);
                if line_square_intersects(u, &Square::image_of(&c)) {
                    next.push(c);
                }
            }
            if next.len() as u64 > budget {
                let count = next.len() as u64;
                counts.push(count);
                return Err(SurvivalBudgetExceeded {
                    level: depth,
                    count,
                    budget,
                    partial: report(counts, depth - 1, Verdict::SurvivingAtDepth(depth - 1)),
                });
            }
        }
        counts.push(next.len() as u64);
        if next.is_empty() {
            return Ok(report(counts, depth, Verdict::CertifiedEmpty(depth)));
        }
        level = next;
    }
    Ok(report(counts, max_depth, Verdict::SurvivingAtDepth(max_depth)))
}
