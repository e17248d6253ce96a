//! Planar contracting similarities, words over an alphabet, cylinder squares,
//! similarity dimension, the unit-square open set test, stopping words and
//! the distance used for closeness of two systems.

use std::collections::{HashMap, HashSet};
use std::f64::consts::{PI, SQRT_2, TAU};
use std::fmt;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;

pub const GEOM_TOL: f64 = 1e-12;

/// Corners of the unit square `I = [0,1]^2`, counter-clockwise from the origin.
pub fn unit_corners() -> [Point; 4] {
    [
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, 1.0),
        Point::new(0.0, 1.0),
    ]
}

pub(crate) fn wrap_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// A similarity of the plane `p -> scale * R(angle) * M * p + translation`
/// with `M` the mirror in the x-axis when `reflect` is set. The scale is any
/// positive number, so this also holds compositions and inverses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityMap {
    pub scale: f64,
    pub angle: f64,
    pub translation: Point,
    pub reflect: bool,
}

impl SimilarityMap {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            angle: 0.0,
            translation: Point::zeros(),
            reflect: false,
        }
    }

    #[inline]
    pub fn linear(&self, p: Point) -> Point {
        let y = if self.reflect { -p.y } else { p.y };
        let (s, c) = self.angle.sin_cos();
        Point::new(
            self.scale * (c * p.x - s * y),
            self.scale * (s * p.x + c * y),
        )
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        self.linear(p) + self.translation
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &SimilarityMap) -> SimilarityMap {
        let angle = if self.reflect {
            self.angle - other.angle
        } else {
            self.angle + other.angle
        };
        SimilarityMap {
            scale: self.scale * other.scale,
            angle: wrap_angle(angle),
            translation: self.apply(other.translation),
            reflect: self.reflect != other.reflect,
        }
    }

    pub fn inverse(&self) -> SimilarityMap {
        let angle = if self.reflect { self.angle } else { -self.angle };
        let mut inv = SimilarityMap {
            scale: 1.0 / self.scale,
            angle: wrap_angle(angle),
            translation: Point::zeros(),
            reflect: self.reflect,
        };
        inv.translation = -inv.linear(self.translation);
        inv
    }
}

/// Expanding inverse of a map.
pub fn invert_map(m: &SimilarityMap) -> SimilarityMap {
    m.inverse()
}

/// A strictly contracting similarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    #[serde(rename = "r")]
    pub ratio: f64,
    pub angle: f64,
    pub tx: f64,
    pub ty: f64,
    #[serde(default)]
    pub reflect: bool,
}

impl Similarity {
    pub fn new(ratio: f64, angle: f64, translation: Point, reflect: bool) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::BadRatioValue(ratio));
        }
        Ok(Self {
            ratio,
            angle: wrap_angle(angle),
            tx: translation.x,
            ty: translation.y,
            reflect,
        })
    }

    pub fn scaling(ratio: f64, tx: f64, ty: f64) -> Result<Self> {
        Self::new(ratio, 0.0, Point::new(tx, ty), false)
    }

    pub fn translation(&self) -> Point {
        Point::new(self.tx, self.ty)
    }

    pub fn as_map(&self) -> SimilarityMap {
        SimilarityMap {
            scale: self.ratio,
            angle: self.angle,
            translation: self.translation(),
            reflect: self.reflect,
        }
    }

    pub(crate) fn from_map(m: &SimilarityMap) -> Result<Self> {
        Self::new(m.scale, m.angle, m.translation, m.reflect)
    }
}

pub fn apply_similarity(s: &Similarity, p: Point) -> Point {
    s.as_map().apply(p)
}

pub type Symbol = usize;

/// A finite word over the alphabet of an [`IfsSpec`], stored as symbol indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }
}

impl From<Vec<Symbol>> for Word {
    fn from(v: Vec<Symbol>) -> Self {
        Word(v)
    }
}

/// The oriented square `f_w(I)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square {
    pub center: Point,
    pub half_diag: f64,
    pub angle: f64,
    pub reflect: bool,
}

impl Square {
    pub fn unit() -> Self {
        Self::image_of(&SimilarityMap::identity())
    }

    pub fn image_of(m: &SimilarityMap) -> Self {
        Square {
            center: m.apply(Point::new(0.5, 0.5)),
            half_diag: m.scale * SQRT_2 / 2.0,
            angle: m.angle,
            reflect: m.reflect,
        }
    }

    pub fn side(&self) -> f64 {
        self.half_diag * SQRT_2
    }

    /// Images of the corners of `I` in the order of [`unit_corners`].
    pub fn corners(&self) -> [Point; 4] {
        let m = SimilarityMap {
            scale: self.side(),
            angle: self.angle,
            translation: self.center,
            reflect: self.reflect,
        };
        unit_corners().map(|c| m.apply(c - Point::new(0.5, 0.5)))
    }

    /// Unit normals of the two edge directions.
    pub fn edge_normals(&self) -> [Point; 2] {
        let c = self.corners();
        let e1 = (c[1] - c[0]).normalize();
        let e2 = (c[3] - c[0]).normalize();
        [Point::new(-e1.y, e1.x), Point::new(-e2.y, e2.x)]
    }

    pub fn contained_in_unit(&self, tol: f64) -> bool {
        self.corners()
            .iter()
            .all(|p| p.x >= -tol && p.x <= 1.0 + tol && p.y >= -tol && p.y <= 1.0 + tol)
    }

    /// Interiors overlap (separating axis test; touching counts as disjoint).
    pub fn interiors_overlap(&self, other: &Square, tol: f64) -> bool {
        let a = self.corners();
        let b = other.corners();
        for axis in self.edge_normals().into_iter().chain(other.edge_normals()) {
            let (amin, amax) = extent(&a, &axis);
            let (bmin, bmax) = extent(&b, &axis);
            if amax <= bmin + tol || bmax <= amin + tol {
                return false;
            }
        }
        true
    }
}

fn extent(pts: &[Point; 4], axis: &Point) -> (f64, f64) {
    pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let v = p.dot(axis);
        (lo.min(v), hi.max(v))
    })
}

/// Solves `sum r_a^d = 1` by bisection on `[1e-9, 64]`.
pub fn similarity_dimension(ratios: &[f64]) -> Result<f64> {
    if ratios.len() < 2 {
        return Err(Error::TooFewMaps(ratios.len()));
    }
    if let Some(&r) = ratios.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::BadRatioValue(r));
    }
    let pressure = |d: f64| ratios.iter().map(|r| r.powf(d)).sum::<f64>() - 1.0;
    let (mut lo, mut hi) = (1e-9, 64.0);
    if pressure(hi) > 0.0 {
        return Err(Error::DimensionOutOfBracket);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pressure(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// How the working alphabet is split into the perturbed part and the fixed part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PartitionRule {
    /// First `ceil(n/2)` symbols in alphabet order.
    #[default]
    Leading,
    /// Even positions in alphabet order.
    Interleaved,
    /// Symbols whose cylinder square stays strictly inside the hull of the
    /// union of all cylinder squares (at most `ceil(n/2)`, deepest first).
    Interior,
}

/// An IFS of planar similarities with its partition into `part_one`
/// (perturbed) and the complement (kept fixed).
#[derive(Debug, Clone, PartialEq)]
pub struct IfsSpec {
    symbols: Vec<String>,
    maps: Vec<Similarity>,
    part_one: Vec<bool>,
    dimension: f64,
}

impl IfsSpec {
    /// Builds a spec. `part_one` lists symbol indices; `None` puts the first
    /// `ceil(n/2)` symbols in the perturbed part.
    pub fn new(
        symbols: Vec<String>,
        maps: Vec<Similarity>,
        part_one: Option<Vec<Symbol>>,
    ) -> Result<Self> {
        let n = symbols.len();
        if n < 2 {
            return Err(Error::TooFewMaps(n));
        }
        if maps.len() != n {
            return Err(invalid_len(n, maps.len()));
        }
        let mut seen = HashSet::new();
        for s in &symbols {
            if s.is_empty() || !seen.insert(s.as_str()) {
                return Err(Error::DuplicateSymbol(s.clone()));
            }
        }
        for (s, m) in symbols.iter().zip(&maps) {
            if !(m.ratio > 0.0 && m.ratio < 1.0) {
                return Err(Error::BadRatio {
                    symbol: s.clone(),
                    ratio: m.ratio,
                });
            }
        }
        let mut mask = vec![false; n];
        match part_one {
            Some(idx) => {
                for i in idx {
                    if i >= n {
                        return Err(Error::SymbolOutOfRange(i));
                    }
                    mask[i] = true;
                }
            }
            None => mask.iter_mut().take(n.div_ceil(2)).for_each(|m| *m = true),
        }
        let ones = mask.iter().filter(|&&m| m).count();
        if ones == 0 || ones == n {
            return Err(Error::BadPartition);
        }
        let ratios: Vec<f64> = maps.iter().map(|m| m.ratio).collect();
        let dimension = similarity_dimension(&ratios)?;
        Ok(Self {
            symbols,
            maps,
            part_one: mask,
            dimension,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn maps(&self) -> &[Similarity] {
        &self.maps
    }

    pub fn map(&self, a: Symbol) -> &Similarity {
        &self.maps[a]
    }

    pub fn ratio(&self, a: Symbol) -> f64 {
        self.maps[a].ratio
    }

    pub fn dimension(&self) -> f64 {
        self.dimension
    }

    pub fn in_part_one(&self, a: Symbol) -> bool {
        self.part_one[a]
    }

    pub fn part_one(&self) -> Vec<Symbol> {
        (0..self.len()).filter(|&a| self.part_one[a]).collect()
    }

    pub fn part_two(&self) -> Vec<Symbol> {
        (0..self.len()).filter(|&a| !self.part_one[a]).collect()
    }

    pub fn symbol_index(&self, name: &str) -> Result<Symbol> {
        self.symbols
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        match w.0.iter().find(|&&a| a >= self.len()) {
            Some(&a) => Err(Error::SymbolOutOfRange(a)),
            None => Ok(()),
        }
    }

    /// Concatenated symbol names.
    pub fn word_name(&self, w: &Word) -> String {
        w.0.iter().map(|&a| self.symbols[a].as_str()).collect()
    }

    pub fn word_ratio(&self, w: &Word) -> f64 {
        w.0.iter().map(|&a| self.maps[a].ratio).product()
    }

    /// `f_{w_1} ∘ ... ∘ f_{w_n}`; the empty word gives the identity.
    pub fn compose_word(&self, w: &Word) -> SimilarityMap {
        w.0.iter().fold(SimilarityMap::identity(), |acc, &a| {
            acc.compose(&self.maps[a].as_map())
        })
    }

    pub fn cylinder_square(&self, w: &Word) -> Square {
        Square::image_of(&self.compose_word(w))
    }

    /// Symbols whose square `f_a(I)` is not inside `I`.
    pub fn escaping_symbols(&self) -> Vec<Symbol> {
        (0..self.len())
            .filter(|&a| !Square::image_of(&self.maps[a].as_map()).contained_in_unit(GEOM_TOL))
            .collect()
    }

    pub fn require_in_unit_square(&self) -> Result<()> {
        match self.escaping_symbols().first() {
            Some(&a) => Err(Error::LeavesUnitSquare(self.symbols[a].clone())),
            None => Ok(()),
        }
    }

    pub(crate) fn with_maps(&self, maps: Vec<Similarity>) -> IfsSpec {
        IfsSpec {
            symbols: self.symbols.clone(),
            maps,
            part_one: self.part_one.clone(),
            dimension: self.dimension,
        }
    }

    /// The system generated by the stopping words at `scale`, used as the
    /// working alphabet whose ratios are all comparable to `scale`. Symbol
    /// names are the concatenated names of the original letters.
    pub fn refine(&self, scale: f64, rule: PartitionRule, budget: u64) -> Result<IfsSpec> {
        let words = stopping_words_bounded(self, scale, budget)?;
        if words.len() < 2 {
            return Err(crate::error::invalid(
                "working_scale",
                "refinement produced fewer than two words",
            ));
        }
        let symbols: Vec<String> = words.iter().map(|w| self.word_name(w)).collect();
        let maps = words
            .iter()
            .map(|w| Similarity::from_map(&self.compose_word(w)))
            .collect::<Result<Vec<_>>>()?;
        let n = words.len();
        if words.iter().all(|w| w.len() == 1) && rule == PartitionRule::Leading {
            // unrefined: keep the caller's partition
            let part = words.iter().filter(|w| self.part_one[w.0[0]]).map(|w| w.0[0]);
            let idx: Vec<Symbol> = part.collect();
            return IfsSpec::new(symbols, maps, Some(idx));
        }
        let part = match rule {
            PartitionRule::Leading => (0..n.div_ceil(2)).collect(),
            PartitionRule::Interleaved => (0..n).step_by(2).collect(),
            PartitionRule::Interior => interior_partition(&maps),
        };
        IfsSpec::new(symbols, maps, Some(part))
    }
}

fn invalid_len(n: usize, m: usize) -> Error {
    crate::error::invalid("maps", format!("{m} maps for {n} symbols"))
}

fn interior_partition(maps: &[Similarity]) -> Vec<Symbol> {
    let squares: Vec<[Point; 4]> = maps
        .iter()
        .map(|m| Square::image_of(&m.as_map()).corners())
        .collect();
    let dirs = 720;
    let mut depth = vec![f64::INFINITY; maps.len()];
    for k in 0..dirs {
        let ang = TAU * k as f64 / dirs as f64;
        let n = Point::new(ang.cos(), ang.sin());
        let support = |c: &[Point; 4]| c.iter().map(|p| p.dot(&n)).fold(f64::NEG_INFINITY, f64::max);
        let hull = squares.iter().map(support).fold(f64::NEG_INFINITY, f64::max);
        for (d, sq) in depth.iter_mut().zip(&squares) {
            *d = d.min(hull - support(sq));
        }
    }
    let mut order: Vec<Symbol> = (0..maps.len()).filter(|&a| depth[a] > 1e-9).collect();
    order.sort_by(|&a, &b| depth[b].total_cmp(&depth[a]).then(a.cmp(&b)));
    order.truncate(maps.len().div_ceil(2));
    if order.is_empty() {
        order.push(0);
    }
    order.sort_unstable();
    order
}

/// Report of the sufficient open set test with `O` the interior of `I`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscReport {
    pub verified: bool,
    pub escaping: Vec<String>,
    pub overlapping_pairs: Vec<(String, String)>,
}

/// Checks `f_a(I°) ⊆ I°` and pairwise disjointness of the `f_a(I°)`.
/// A false result only means the test with `O = I°` did not succeed.
pub fn check_osc_unit_square(ifs: &IfsSpec) -> OscReport {
    let squares: Vec<Square> = ifs.maps.iter().map(|m| Square::image_of(&m.as_map())).collect();
    let escaping: Vec<String> = ifs
        .escaping_symbols()
        .into_iter()
        .map(|a| ifs.symbols[a].clone())
        .collect();
    let mut overlapping_pairs = Vec::new();
    for i in 0..squares.len() {
        for j in i + 1..squares.len() {
            if squares[i].interiors_overlap(&squares[j], GEOM_TOL) {
                overlapping_pairs.push((ifs.symbols[i].clone(), ifs.symbols[j].clone()));
            }
        }
    }
    OscReport {
        verified: escaping.is_empty() && overlapping_pairs.is_empty(),
        escaping,
        overlapping_pairs,
    }
}

/// Minimal words `w` with `ratio(w) <= rho < ratio(parent)`, in
/// lexicographic order. They form a prefix-free cover of the attractor.
pub fn stopping_words(ifs: &IfsSpec, rho: f64) -> Vec<Word> {
    let mut out = Vec::new();
    let mut stack = Vec::new();
    visit_stopping(ifs, rho, &mut stack, 1.0, &mut |w| {
        out.push(Word(w.to_vec()));
        true
    });
    out
}

/// As [`stopping_words`], failing once more than `budget` words would be
/// produced. The error carries the exact count.
pub fn stopping_words_bounded(ifs: &IfsSpec, rho: f64, budget: u64) -> Result<Vec<Word>> {
    let count = count_stopping_words(ifs, rho);
    if count > budget {
        return Err(Error::BudgetExceeded {
            what: "stopping-word",
            count,
            budget,
        });
    }
    Ok(stopping_words(ifs, rho))
}

/// Number of stopping words at scale `rho`. Words are grouped by how often
/// each distinct ratio occurs, so the cost grows with the number of such
/// multisets rather than with the number of words.
pub fn count_stopping_words(ifs: &IfsSpec, rho: f64) -> u64 {
    if rho >= 1.0 {
        return 1;
    }
    let mut ratios: Vec<f64> = ifs.maps.iter().map(|m| m.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    ratios.dedup();
    let mult: Vec<u64> = ratios
        .iter()
        .map(|&r| ifs.maps.iter().filter(|m| m.ratio == r).count() as u64)
        .collect();

    fn count(
        ratios: &[f64],
        mult: &[u64],
        rho: f64,
        ratio: f64,
        state: &mut Vec<u32>,
        memo: &mut HashMap<Vec<u32>, u64>,
    ) -> u64 {
        if let Some(&n) = memo.get(state) {
            return n;
        }
        let mut total = 0u64;
        for (c, (&r, &m)) in ratios.iter().zip(mult).enumerate() {
            let child = ratio * r;
            let n = if child <= rho {
                1
            } else {
                state[c] += 1;
                let n = count(ratios, mult, rho, child, state, memo);
                state[c] -= 1;
                n
            };
            total = total.saturating_add(m.saturating_mul(n));
        }
        memo.insert(state.clone(), total);
        total
    }
    let mut state = vec![0; ratios.len()];
    count(&ratios, &mult, rho, 1.0, &mut state, &mut HashMap::new())
}

/// Depth-first walk over stopping words, calling `emit` on each; the walk
/// stops early when `emit` returns false.
pub(crate) fn visit_stopping(
    ifs: &IfsSpec,
    rho: f64,
    stack: &mut Vec<Symbol>,
    ratio: f64,
    emit: &mut dyn FnMut(&[Symbol]) -> bool,
) -> bool {
    if ratio <= rho {
        return emit(stack);
    }
    for a in 0..ifs.len() {
        stack.push(a);
        let go_on = visit_stopping(ifs, rho, stack, ratio * ifs.maps[a].ratio, emit);
        stack.pop();
        if !go_on {
            return false;
        }
    }
    true
}

/// `max_a sup_{x in I} |f_a(x) - g_a(x)| / r_a`, evaluated at the corners of
/// `I` where the supremum of an affine difference is attained.
pub fn epsilon_distance(ifs: &IfsSpec, other: &IfsSpec) -> Result<f64> {
    if ifs.symbols != other.symbols {
        return Err(Error::NotComparable("alphabets differ".into()));
    }
    let mut worst: f64 = 0.0;
    for (a, (f, g)) in ifs.maps.iter().zip(&other.maps).enumerate() {
        if (f.ratio - g.ratio).abs() > GEOM_TOL {
            return Err(Error::NotComparable(format!(
                "ratios of '{}' differ",
                ifs.symbols[a]
            )));
        }
        let (fm, gm) = (f.as_map(), g.as_map());
        for c in unit_corners() {
            worst = worst.max((fm.apply(c) - gm.apply(c)).norm() / f.ratio);
        }
    }
    Ok(worst)
}

impl fmt::Display for IfsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "IFS with {} maps, d = {:.12}, |A1| = {}",
            self.len(),
            self.dimension,
            self.part_one().len()
        )
    }
}

/// Normalizes an angle to `[0, π)`.
pub(crate) fn wrap_half_turn(angle: f64) -> f64 {
    let a = angle.rem_euclid(PI);
    if a >= PI {
        0.0
    } else {
        a
    }
}
