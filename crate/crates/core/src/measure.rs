//! The uniform self-similar measure `μ = Σ r_a^d f_a μ`, histograms of its
//! projections, their L² norms, the set of good directions, and the
//! crowding classification of cylinder words.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::ifs::{count_stopping_words, IfsSpec, Point, SimilarityMap, Word};
use crate::line::{project_point, project_square, union_length, Interval};

/// Atoms of `μ` at scale `rho`: the centers of the stopping-word squares with
/// weights `r_w^d`.
#[derive(Debug, Clone)]
pub struct MeasureAtoms {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

/// Calls `visit` with the center of `f_w(I)` for every stopping word `w` at
/// scale `rho`, without storing them. Returns the number of words.
pub fn visit_centers(ifs: &IfsSpec, rho: f64, budget: u64, visit: &mut dyn FnMut(Point)) -> Result<u64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid("rho", format!("{rho} is not in (0, 1)")));
    }
    let count = count_stopping_words(ifs, rho);
    if count > budget {
        return Err(Error::BudgetExceeded {
            what: "stopping-word",
            count,
            budget,
        });
    }
    fn walk(maps: &[SimilarityMap], rho: f64, m: &SimilarityMap, visit: &mut dyn FnMut(Point)) {
        if m.scale <= rho {
            visit(m.apply(Point::new(0.5, 0.5)));
            return;
        }
        for f in maps {
            walk(maps, rho, &m.compose(f), visit);
        }
    }
    let maps: Vec<SimilarityMap> = ifs.maps().iter().map(|m| m.as_map()).collect();
    walk(&maps, rho, &SimilarityMap::identity(), visit);
    Ok(count)
}

impl MeasureAtoms {
    pub fn new(ifs: &IfsSpec, rho: f64, budget: u64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(invalid("rho", format!("{rho} is not in (0, 1)")));
        }
        let count = count_stopping_words(ifs, rho);
        if count > budget {
            return Err(Error::BudgetExceeded {
                what: "stopping-word",
                count,
                budget,
            });
        }
        let d = ifs.dimension();
        let maps: Vec<SimilarityMap> = ifs.maps().iter().map(|m| m.as_map()).collect();
        let mut atoms = MeasureAtoms {
            points: Vec::with_capacity(count as usize),
            weights: Vec::with_capacity(count as usize),
        };
        atoms.walk(&maps, rho, d, &SimilarityMap::identity());
        Ok(atoms)
    }

    fn walk(&mut self, maps: &[SimilarityMap], rho: f64, d: f64, m: &SimilarityMap) {
        if m.scale <= rho {
            self.points.push(m.apply(Point::new(0.5, 0.5)));
            self.weights.push(m.scale.powf(d));
            return;
        }
        for f in maps {
            self.walk(maps, rho, d, &m.compose(f));
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn histogram(&self, theta: f64, delta: f64) -> ProjectedHistogram {
        let origin = (-SQRT_2 / delta).floor() * delta;
        let bins = ((2.0 * SQRT_2) / delta).ceil() as usize + 2;
        let mut masses = vec![0.0; bins];
        for (p, w) in self.points.iter().zip(&self.weights) {
            let x = project_point(theta, *p);
            let k = (((x - origin) / delta).floor().max(0.0) as usize).min(bins - 1);
            masses[k] += w;
        }
        ProjectedHistogram {
            theta,
            bin_width: delta,
            origin,
            masses,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectedHistogram {
    pub theta: f64,
    pub bin_width: f64,
    pub origin: f64,
    pub masses: Vec<f64>,
}

impl ProjectedHistogram {
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn bin_interval(&self, k: usize) -> Interval {
        let lo = self.origin + k as f64 * self.bin_width;
        Interval::new(lo, lo + self.bin_width)
    }
}

/// Deposits `r_w^d` at the projected center of each stopping-word square.
pub fn projected_histogram(
    ifs: &IfsSpec,
    theta: f64,
    rho: f64,
    delta: f64,
    budget: u64,
) -> Result<ProjectedHistogram> {
    if !(delta > 0.0) {
        return Err(invalid("delta", "bin width must be positive"));
    }
    Ok(MeasureAtoms::new(ifs, rho, budget)?.histogram(theta, delta))
}

/// `Σ mass² / δ`, the squared L² norm of the piecewise-constant density.
pub fn l2_norm_estimate(h: &ProjectedHistogram) -> f64 {
    h.masses.iter().map(|m| m * m).sum::<f64>() / h.bin_width
}

/// Directions on a uniform grid of `[0, π)` with their L² estimates; a
/// direction belongs to the set when its estimate is below `c5`.
#[derive(Debug, Clone, Serialize)]
pub struct DirectionSet {
    pub theta_grid: Vec<f64>,
    pub l2: Vec<f64>,
    pub member: Vec<bool>,
    pub c5: f64,
    pub excluded_fraction: f64,
    /// Lebesgue measure of the excluded directions, `excluded_fraction · π`.
    pub excluded_measure: f64,
    /// Grid average of the L² estimates (a stand-in for `∫ ‖χ_θ‖² dθ / π`).
    pub mean_l2: f64,
}

impl DirectionSet {
    /// Builds the set from precomputed estimates on the grid `k π / n`.
    pub fn from_estimates(l2: Vec<f64>, c5: f64) -> Self {
        let n = l2.len();
        let theta_grid = (0..n).map(|k| PI * k as f64 / n as f64).collect();
        let member: Vec<bool> = l2.iter().map(|&v| v < c5).collect();
        let excluded = member.iter().filter(|&&m| !m).count();
        let excluded_fraction = excluded as f64 / n as f64;
        DirectionSet {
            theta_grid,
            mean_l2: l2.iter().sum::<f64>() / n as f64,
            l2,
            member,
            c5,
            excluded_fraction,
            excluded_measure: excluded_fraction * PI,
        }
    }

    pub fn all(n: usize) -> Self {
        Self::from_estimates(vec![0.0; n], 1.0)
    }

    pub fn none(n: usize) -> Self {
        Self::from_estimates(vec![1.0; n], 0.0)
    }

    pub fn len(&self) -> usize {
        self.member.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member.is_empty()
    }

    pub fn pitch(&self) -> f64 {
        PI / self.len() as f64
    }

    pub fn nearest_index(&self, theta: f64) -> usize {
        let n = self.len();
        let k = (theta.rem_euclid(PI) / self.pitch()).round() as usize;
        k % n
    }

    /// Membership of an arbitrary angle, read at the nearest grid direction.
    pub fn contains(&self, theta: f64) -> bool {
        self.member[self.nearest_index(theta)]
    }

    pub fn member_count(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }
}

/// Relative accuracy of the histogram L² estimate; refining `δ` and `ρ`
/// moves bounded-density estimates by less than this.
pub const L2_TOLERANCE: f64 = 0.05;

/// Threshold from the largest grid quantile whose excluded measure stays
/// below `epsilon / 2`, raised by [`L2_TOLERANCE`] so that directions within
/// estimator noise of the quantile are kept. Raising the threshold only
/// shrinks the excluded set.
pub fn auto_c5(l2: &[f64], epsilon: f64) -> f64 {
    let n = l2.len();
    let pitch = PI / n as f64;
    // largest k with k·pitch < ε/2
    let mut k = ((epsilon / 2.0) / pitch).ceil() as usize;
    while k > 0 && k as f64 * pitch >= epsilon / 2.0 {
        k -= 1;
    }
    let k = k.min(n - 1);
    let mut sorted = l2.to_vec();
    sorted.sort_by(f64::total_cmp);
    let kept_max = sorted[n - 1 - k];
    kept_max * (1.0 + L2_TOLERANCE) + 1e-12
}

/// Evaluates the L² estimate on `grid_size` directions and thresholds it.
/// With `c5 = None` the threshold is chosen by [`auto_c5`].
pub fn build_direction_set(
    ifs: &IfsSpec,
    grid_size: usize,
    rho: f64,
    delta: f64,
    c5: Option<f64>,
    epsilon: f64,
    budget: u64,
) -> Result<DirectionSet> {
    if grid_size < 2 {
        return Err(invalid("grid_size", "need at least two directions"));
    }
    if !(delta > 0.0) {
        return Err(invalid("delta", "bin width must be positive"));
    }
    let atoms = MeasureAtoms::new(ifs, rho, budget)?;
    let l2: Vec<f64> = (0..grid_size)
        .into_par_iter()
        .map(|k| {
            let theta = PI * k as f64 / grid_size as f64;
            l2_norm_estimate(&atoms.histogram(theta, delta))
        })
        .collect();
    let c5 = c5.unwrap_or_else(|| auto_c5(&l2, epsilon));
    Ok(DirectionSet::from_estimates(l2, c5))
}

/// Crowding classification of a word family at one direction.
#[derive(Debug, Clone, Serialize)]
pub struct WordClassification {
    pub words: Vec<String>,
    pub centers: Vec<f64>,
    pub good: Vec<bool>,
    pub rho: f64,
    pub c6: f64,
    pub c9: f64,
    /// `c6⁻¹ ρ^{-(d-1)/2}`
    pub cap: f64,
    /// `c9⁻¹ ρ^{1/2}`
    pub radius: f64,
}

impl WordClassification {
    pub fn bad_count(&self) -> usize {
        self.good.iter().filter(|&&g| !g).count()
    }
}

/// Upper bound `6 c5 c6 c9³ ρ^{-d/2}` on the number of crowded words.
pub fn bad_word_bound(c5: f64, c6: f64, c9: f64, rho: f64, d: f64) -> f64 {
    6.0 * c5 * c6 * c9.powi(3) * rho.powf(-d / 2.0)
}

/// For each center, the number of centers (itself included) at distance
/// strictly less than `radius`. Sorted sweep, `O(n log n)`.
pub fn neighbor_counts(centers: &[f64], radius: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..centers.len()).collect();
    order.sort_by(|&a, &b| centers[a].total_cmp(&centers[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| centers[i]).collect();
    let mut counts = vec![0; centers.len()];
    let (mut lo, mut hi) = (0, 0);
    for (k, &x) in sorted.iter().enumerate() {
        while x - sorted[lo] >= radius {
            lo += 1;
        }
        if hi < k {
            hi = k;
        }
        while hi + 1 < sorted.len() && sorted[hi + 1] - x < radius {
            hi += 1;
        }
        counts[order[k]] = hi - lo + 1;
    }
    counts
}

/// A word is good when at most `c6⁻¹ ρ^{-(d-1)/2}` projected interval centers
/// (its own included) lie within `c9⁻¹ ρ^{1/2}` of its center.
pub fn classify_good_words(
    ifs: &IfsSpec,
    theta: f64,
    words: &[Word],
    rho: f64,
    c6: f64,
    c9: f64,
) -> Result<WordClassification> {
    if words.is_empty() {
        return Err(invalid("words", "word family is empty"));
    }
    for w in words {
        ifs.check_word(w)?;
    }
    let mut sorted: Vec<&Word> = words.iter().collect();
    sorted.sort();
    if sorted.windows(2).any(|p| p[0].is_prefix_of(p[1])) {
        return Err(invalid("words", "word family is not prefix-free"));
    }
    let d = ifs.dimension();
    let cap = rho.powf(-(d - 1.0) / 2.0) / c6;
    let radius = rho.sqrt() / c9;
    let centers: Vec<f64> = words
        .iter()
        .map(|w| project_square(theta, &ifs.cylinder_square(w)).center())
        .collect();
    let good = neighbor_counts(&centers, radius)
        .into_iter()
        .map(|c| c as f64 <= cap)
        .collect();
    Ok(WordClassification {
        words: words.iter().map(|w| ifs.word_name(w)).collect(),
        centers,
        good,
        rho,
        c6,
        c9,
        cap,
        radius,
    })
}

/// Exact measure of `⋃ Π_θ f_w(I)`.
pub fn union_projection_length(ifs: &IfsSpec, words: &[Word], theta: f64) -> f64 {
    let ivs: Vec<Interval> = words
        .iter()
        .map(|w| project_square(theta, &ifs.cylinder_square(w)))
        .collect();
    union_length(&ivs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{stopping_words, Similarity};

    fn four_corner() -> IfsSpec {
        let maps = vec![
            Similarity::scaling(0.5, 0.0, 0.0).unwrap(),
            Similarity::scaling(0.5, 0.5, 0.0).unwrap(),
            Similarity::scaling(0.5, 0.0, 0.5).unwrap(),
            Similarity::scaling(0.5, 0.5, 0.5).unwrap(),
        ];
        IfsSpec::new(["a", "b", "c", "d"].map(String::from).to_vec(), maps, None).unwrap()
    }

    #[test]
    fn atoms_match_stopping_words() {
        let ifs = four_corner();
        let atoms = MeasureAtoms::new(&ifs, 1.0 / 16.0, 1000).unwrap();
        let words = stopping_words(&ifs, 1.0 / 16.0);
        assert_eq!(atoms.len(), words.len());
        for (p, w) in atoms.points.iter().zip(&words) {
            assert!((p - ifs.cylinder_square(w).center).norm() < 1e-14);
        }
    }

    #[test]
    fn four_corner_histogram_is_uniform() {
        let ifs = four_corner();
        let delta = 1.0 / 64.0;
        let h = projected_histogram(&ifs, 0.0, 1.0 / 256.0, delta, 1 << 20).unwrap();
        assert!((h.total_mass() - 1.0).abs() < 1e-9);
        for (k, m) in h.masses.iter().enumerate() {
            let iv = h.bin_interval(k);
            if iv.lo >= -1e-12 && iv.hi <= 1.0 + 1e-12 {
                assert!((m - delta).abs() < 0.05 * delta, "bin {k}: {m}");
            } else {
                assert_eq!(*m, 0.0);
            }
        }
    }

    #[test]
    fn coarse_histogram_has_four_atoms() {
        let ifs = four_corner();
        let atoms = MeasureAtoms::new(&ifs, 0.6, 10).unwrap();
        assert_eq!(atoms.weights, vec![0.25; 4]);
    }

    #[test]
    fn histogram_budget() {
        let err = projected_histogram(&four_corner(), 0.0, 1.0 / 256.0, 0.01, 100).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { count: 65536, .. }));
    }

    #[test]
    fn l2_examples() {
        let uniform = ProjectedHistogram {
            theta: 0.0,
            bin_width: 0.125,
            origin: 0.0,
            masses: vec![0.125; 8],
        };
        assert!((l2_norm_estimate(&uniform) - 1.0).abs() < 1e-12);
        let spike = ProjectedHistogram {
            theta: 0.0,
            bin_width: 1.0 / 64.0,
            origin: 0.0,
            masses: vec![1.0],
        };
        assert!((l2_norm_estimate(&spike) - 64.0).abs() < 1e-12);
    }

    #[test]
    fn direction_set_examples() {
        let ifs = four_corner();
        let e = build_direction_set(&ifs, 16, 1.0 / 256.0, 1.0 / 128.0, Some(3.0), 0.3, 1 << 20).unwrap();
        assert_eq!(e.excluded_fraction, 0.0);
        let min = e.l2.iter().cloned().fold(f64::INFINITY, f64::min);
        let none = DirectionSet::from_estimates(e.l2.clone(), min * 0.5);
        assert_eq!(none.excluded_fraction, 1.0);
        assert!(none.member.iter().all(|&m| !m));
    }

    #[test]
    fn auto_threshold_respects_budget() {
        let l2: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let eps = 0.3;
        let c5 = auto_c5(&l2, eps);
        let e = DirectionSet::from_estimates(l2.clone(), c5);
        assert!(e.excluded_measure < eps / 2.0);
        // four exclusions fit the budget, so 95 is kept and 99 < 95 · 1.05 too
        assert!(e.member.iter().all(|&m| m));
        let steep: Vec<f64> = (0..100).map(|k| 1.2f64.powi(k)).collect();
        let c5 = auto_c5(&steep, eps);
        assert_eq!(DirectionSet::from_estimates(steep, c5).member_count(), 96);
    }

    #[test]
    fn bounded_density_keeps_every_direction() {
        let e = build_direction_set(&four_corner(), 64, 1.0 / 256.0, 1.0 / 128.0, None, 0.3, 1 << 20).unwrap();
        assert_eq!(e.excluded_fraction, 0.0);
    }

    #[test]
    fn nearest_direction_wraps() {
        let e = DirectionSet::all(8);
        assert_eq!(e.nearest_index(PI - 1e-9), 0);
        assert_eq!(e.nearest_index(PI / 8.0 + 1e-9), 1);
    }

    #[test]
    fn classification_examples() {
        let ifs = four_corner();
        let words: Vec<Word> = (0..4).map(|a| Word(vec![a])).collect();
        // radius = 0.5 / 20, cap = c6⁻¹ ρ^{-1/2} = 2
        let cls = classify_good_words(&ifs, 0.0, &words, 0.25, 1.0, 20.0).unwrap();
        for (c, e) in cls.centers.iter().zip([0.25, 0.25, 0.75, 0.75]) {
            assert!((c - e).abs() < 1e-12);
        }
        assert!((cls.cap - 2.0).abs() < 1e-12);
        assert!(cls.good.iter().all(|&g| g));
        let none = classify_good_words(&ifs, 0.0, &words, 0.25, 1e6, 20.0).unwrap();
        assert_eq!(none.bad_count(), 4);
        let not_free = vec![Word(vec![0]), Word(vec![0, 1])];
        assert!(classify_good_words(&ifs, 0.0, &not_free, 0.25, 1.0, 1.0).is_err());
    }

    #[test]
    fn union_projection_examples() {
        let ifs = four_corner();
        let words: Vec<Word> = (0..4).map(|a| Word(vec![a])).collect();
        assert!((union_projection_length(&ifs, &words, 0.0) - 1.0).abs() < 1e-15);
    }
}
