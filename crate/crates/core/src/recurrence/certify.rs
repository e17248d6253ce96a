//! Numerical certificates that a projection contains an interval.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::ifs::{IfsSpec, Point};
use crate::line::{project_point, Interval};
use crate::measure::visit_centers;
use crate::recurrence::candidate::RecurrentCandidate;
use crate::recurrence::check::RecurrenceReport;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplingOutcome {
    Interval { interval: Interval, largest_gap: f64 },
    NoInterval { largest_gap: f64 },
}

impl SamplingOutcome {
    pub fn interval(&self) -> Option<Interval> {
        match self {
            SamplingOutcome::Interval { interval, .. } => Some(*interval),
            SamplingOutcome::NoInterval { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionCertificate {
    pub theta: f64,
    pub resolution: f64,
    /// Longest run of consecutive grid offsets at `theta` that lie in `𝓛`
    /// and recur.
    pub recurrence: Option<Interval>,
    /// Widest stretch of projected cylinder centers without a gap above the
    /// resolution.
    pub sampling: SamplingOutcome,
    pub label: &'static str,
}

impl ProjectionCertificate {
    pub fn certified(&self) -> bool {
        self.recurrence.is_some() && self.sampling.interval().is_some()
    }
}

/// Longest run of recurring `𝓛` members on the grid row nearest to `theta`.
pub fn recurrence_interval(cand: &RecurrentCandidate, report: &RecurrenceReport, theta: f64) -> Option<Interval> {
    let grid = &cand.grid;
    let i = grid
        .nearest(&crate::line::Line::new(theta, 0.0))
        .map(|k| grid.split(k).0)?;
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for j in 0..=grid.n_t {
        let ok = j < grid.n_t && {
            let k = grid.index(i, j);
            cand.core.contains(k) && report.recurred_set.contains(k)
        };
        match (ok, start) {
            (true, None) => start = Some(j),
            (false, Some(s)) => {
                if best.is_none_or(|(bs, be)| j - 1 - s > be - bs) {
                    best = Some((s, j - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    best.map(|(s, e)| Interval::new(grid.t(s), grid.t(e)))
}

/// Radius of a ball about the center `c` of `I` holding every cylinder
/// center: `|f_a(x) − c| <= r_a |x − c| + |f_a(c) − c|`.
fn center_radius(ifs: &IfsSpec) -> f64 {
    let c = Point::new(0.5, 0.5);
    ifs.maps()
        .iter()
        .map(|m| (m.as_map().apply(c) - c).norm() / (1.0 - m.ratio))
        .fold(0.0, f64::max)
}

/// Projected stopping-word centers at scale `resolution`, binned at width
/// `resolution` with the extreme positions per occupied bin, for each
/// direction in one walk. Points in one bin are within `resolution` of each
/// other, so the gaps above the resolution are exactly the gaps between
/// consecutive occupied bins.
fn occupied_bins(ifs: &IfsSpec, thetas: &[f64], resolution: f64, budget: u64) -> Result<Vec<Vec<Interval>>> {
    let radius = center_radius(ifs) + resolution;
    let c = Point::new(0.5, 0.5);
    let frames: Vec<(f64, f64, f64)> = thetas
        .iter()
        .map(|&th| {
            let (s, co) = th.sin_cos();
            (s, co, project_point(th, c) - radius)
        })
        .collect();
    let n = (2.0 * radius / resolution).ceil() as usize + 1;
    // empty bins are inverted intervals until a point lands
    let empty = Interval {
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
    };
    let mut bins = vec![vec![empty; n]; thetas.len()];
    visit_centers(ifs, resolution.min(0.5), budget, &mut |p| {
        for ((s, co, origin), row) in frames.iter().zip(bins.iter_mut()) {
            let x = -p.x * s + p.y * co;
            let b = &mut row[(((x - origin) / resolution) as usize).min(n - 1)];
            b.lo = b.lo.min(x);
            b.hi = b.hi.max(x);
        }
    })?;
    Ok(bins
        .into_iter()
        .map(|row| row.into_iter().filter(|b| b.lo <= b.hi).collect())
        .collect())
}

/// The widest run of projected centers whose consecutive gaps are at most
/// `resolution`; a run shorter than `resolution` does not count. The
/// reported largest gap is taken between occupied bins.
fn widest_run(bins: &[Interval], resolution: f64) -> SamplingOutcome {
    let mut largest_gap: f64 = 0.0;
    let mut best = bins[0];
    let mut run = bins[0];
    for w in bins.windows(2) {
        let gap = w[1].lo - w[0].hi;
        largest_gap = largest_gap.max(gap);
        if gap > resolution {
            run = w[1];
        } else {
            run.hi = w[1].hi;
        }
        if run.length() > best.length() {
            best = run;
        }
    }
    if best.length() >= resolution {
        SamplingOutcome::Interval {
            interval: best,
            largest_gap,
        }
    } else {
        SamplingOutcome::NoInterval { largest_gap }
    }
}

pub fn sampling_intervals(ifs: &IfsSpec, thetas: &[f64], resolution: f64, budget: u64) -> Result<Vec<SamplingOutcome>> {
    check_resolution(resolution)?;
    Ok(occupied_bins(ifs, thetas, resolution, budget)?
        .iter()
        .map(|bins| widest_run(bins, resolution))
        .collect())
}

pub fn sampling_interval(ifs: &IfsSpec, theta: f64, resolution: f64, budget: u64) -> Result<SamplingOutcome> {
    Ok(sampling_intervals(ifs, &[theta], resolution, budget)?.remove(0))
}

/// Gaps wider than `resolution` between consecutive projected centers, per
/// direction in increasing order of position.
pub fn projection_gaps(ifs: &IfsSpec, thetas: &[f64], resolution: f64, budget: u64) -> Result<Vec<Vec<Interval>>> {
    check_resolution(resolution)?;
    Ok(occupied_bins(ifs, thetas, resolution, budget)?
        .iter()
        .map(|bins| {
            bins.windows(2)
                .filter(|w| w[1].lo - w[0].hi > resolution)
                .map(|w| Interval::new(w[0].hi, w[1].lo))
                .collect()
        })
        .collect())
}

fn check_resolution(resolution: f64) -> Result<()> {
    if resolution > 0.0 && resolution.is_finite() {
        Ok(())
    } else {
        Err(invalid("resolution", "must be positive"))
    }
}

/// Both certificates at each direction; the sampling walk is shared.
pub fn certify_projection_intervals(
    ifs: &IfsSpec,
    cand: &RecurrentCandidate,
    report: &RecurrenceReport,
    thetas: &[f64],
    resolution: f64,
    budget: u64,
) -> Result<Vec<ProjectionCertificate>> {
    let sampling = sampling_intervals(ifs, thetas, resolution, budget)?;
    Ok(thetas
        .iter()
        .zip(sampling)
        .map(|(&theta, sampling)| ProjectionCertificate {
            theta,
            resolution,
            recurrence: recurrence_interval(cand, report, theta),
            sampling,
            label: "numerical certificate",
        })
        .collect())
}

pub fn certify_projection_interval(
    ifs: &IfsSpec,
    cand: &RecurrentCandidate,
    report: &RecurrenceReport,
    theta: f64,
    resolution: f64,
    budget: u64,
) -> Result<ProjectionCertificate> {
    Ok(certify_projection_intervals(ifs, cand, report, &[theta], resolution, budget)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::Similarity;

    fn corners(r: f64) -> IfsSpec {
        let s = 1.0 - r;
        let maps = vec![
            Similarity::scaling(r, 0.0, 0.0).unwrap(),
            Similarity::scaling(r, s, 0.0).unwrap(),
            Similarity::scaling(r, 0.0, s).unwrap(),
            Similarity::scaling(r, s, s).unwrap(),
        ];
        IfsSpec::new(["a", "b", "c", "d"].map(String::from).to_vec(), maps, None).unwrap()
    }

    fn sierpinski() -> IfsSpec {
        let maps = vec![
            Similarity::scaling(0.5, 0.0, 0.0).unwrap(),
            Similarity::scaling(0.5, 0.5, 0.0).unwrap(),
            Similarity::scaling(0.5, 0.25, 0.5).unwrap(),
        ];
        IfsSpec::new(["a", "b", "c"].map(String::from).to_vec(), maps, None).unwrap()
    }

    #[test]
    fn full_square_projects_onto_unit_interval() {
        let out = sampling_interval(&corners(0.5), 0.0, 1e-3, 1 << 22).unwrap();
        let iv = out.interval().unwrap();
        assert!(iv.lo.abs() < 1e-3 && (iv.hi - 1.0).abs() < 1e-3);
    }

    #[test]
    fn cantor_dust_has_a_middle_gap() {
        match sampling_interval(&corners(0.25), 0.0, 1e-3, 1 << 22).unwrap() {
            SamplingOutcome::NoInterval { largest_gap } => assert!((largest_gap - 0.5).abs() < 2e-3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dust_gaps_include_the_middle() {
        let gaps = projection_gaps(&corners(0.25), &[0.0], 1e-3, 1 << 22).unwrap().remove(0);
        assert!(gaps.iter().any(|g| g.lo < 0.5 && g.hi > 0.5 && g.length() > 0.49));
        assert!(gaps.windows(2).all(|w| w[0].hi <= w[1].lo));
        assert!(projection_gaps(&corners(0.5), &[0.0, 1.0], 1e-3, 1 << 22).unwrap().iter().all(Vec::is_empty));
    }

    #[test]
    fn gasket_projects_onto_an_interval() {
        let iv = sampling_interval(&sierpinski(), 0.0, 1e-3, 1 << 22)
            .unwrap()
            .interval()
            .unwrap();
        assert!(iv.length() >= 0.9);
    }
}
