//! Lines of the plane in `(theta, t)` coordinates, orthogonal projections and
//! the renormalization operators `T_a(u) = f_a^{-1}(u)`.
//!
//! A line `(theta, t)` has direction `(cos theta, sin theta)` and meets the
//! axis `t -> t(-sin theta, cos theta)` at parameter `t`. `theta` is kept in
//! `[0, π)`; `(theta + π, -t)` describes the same line.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{wrap_half_turn, IfsSpec, Point, SimilarityMap, Square, Symbol, Word, GEOM_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub theta: f64,
    pub t: f64,
}

impl Line {
    /// Normalizes `theta` into `[0, π)`, flipping `t` for each half turn removed.
    pub fn new(theta: f64, t: f64) -> Self {
        let turns = (theta / PI).floor();
        let mut th = theta - turns * PI;
        let mut t = if (turns as i64).rem_euclid(2) == 1 { -t } else { t };
        if th >= PI {
            th -= PI;
            t = -t;
        }
        if th < 0.0 {
            th = 0.0;
        }
        Line { theta: th, t }
    }

    pub fn direction(&self) -> Point {
        Point::new(self.theta.cos(), self.theta.sin())
    }

    pub fn normal(&self) -> Point {
        Point::new(-self.theta.sin(), self.theta.cos())
    }

    /// The point `t(-sin theta, cos theta)`.
    pub fn carrier(&self) -> Point {
        self.normal() * self.t
    }

    pub fn signed_distance(&self, p: Point) -> f64 {
        project_point(self.theta, p) - self.t
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.signed_distance(p).abs() <= tol
    }

    /// Sup-metric distance in `(theta, t)` coordinates, aware of the wrap
    /// `(theta, t) ~ (theta - π, -t)`.
    pub fn coord_distance(&self, other: &Line) -> f64 {
        let direct = (self.theta - other.theta).abs().max((self.t - other.t).abs());
        let wrapped = (PI - (self.theta - other.theta).abs()).max((self.t + other.t).abs());
        direct.min(wrapped)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Measure of a finite union of intervals by sort-and-merge.
pub fn union_length(intervals: &[Interval]) -> f64 {
    merge_intervals(intervals.to_vec())
        .iter()
        .map(Interval::length)
        .sum()
}

/// Sorts and merges overlapping or touching intervals.
pub fn merge_intervals(mut v: Vec<Interval>) -> Vec<Interval> {
    v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out: Vec<Interval> = Vec::with_capacity(v.len());
    for iv in v {
        match out.last_mut() {
            Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
            _ => out.push(iv),
        }
    }
    out
}

/// Parameter on `l_theta` of the orthogonal projection of `p`.
#[inline]
pub fn project_point(theta: f64, p: Point) -> f64 {
    let (s, c) = theta.sin_cos();
    -p.x * s + p.y * c
}

pub fn project_square(theta: f64, sq: &Square) -> Interval {
    let (lo, hi) = sq
        .corners()
        .iter()
        .map(|&p| project_point(theta, p))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Interval::new(lo, hi)
}

pub fn line_from_two_points(p: Point, q: Point) -> Result<Line> {
    let d = q - p;
    if d.norm() <= f64::EPSILON * p.norm().max(q.norm()).max(1.0) {
        return Err(Error::DegenerateLine);
    }
    let theta = wrap_half_turn(d.y.atan2(d.x));
    Ok(Line {
        theta,
        t: project_point(theta, p),
    })
}

impl SimilarityMap {
    /// Image of a line. The image direction is `angle ± theta`; the offset is
    /// recomputed from the image of the carrier point, so reflections need no
    /// sign bookkeeping.
    #[inline]
    pub fn map_line(&self, u: &Line) -> Line {
        let dir = if self.reflect {
            self.angle - u.theta
        } else {
            self.angle + u.theta
        };
        let theta = wrap_half_turn(dir);
        Line {
            theta,
            t: project_point(theta, self.apply(u.carrier())),
        }
    }
}

/// `T_a(u) = f_a^{-1}(u)`.
pub fn renormalize(ifs: &IfsSpec, a: Symbol, u: &Line) -> Line {
    ifs.map(a).as_map().inverse().map_line(u)
}

/// `T_{w_1 ... w_n} = T_{w_n} ∘ ... ∘ T_{w_1}`.
pub fn renormalize_word(ifs: &IfsSpec, w: &Word, u: &Line) -> Line {
    w.symbols()
        .iter()
        .fold(*u, |acc, &a| renormalize(ifs, a, &acc))
}

/// True unless all four corners lie strictly on one side (a band of
/// `1e-12` counts as touching).
pub fn line_square_intersects(u: &Line, sq: &Square) -> bool {
    let mut above = false;
    let mut below = false;
    for p in sq.corners() {
        let s = u.signed_distance(p);
        if s.abs() <= GEOM_TOL {
            return true;
        }
        if s > 0.0 {
            above = true;
        } else {
            below = true;
        }
    }
    above && below
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::Similarity;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    #[test]
    fn projection_examples() {
        assert!((project_point(0.0, Point::new(0.3, 0.7)) - 0.7).abs() < 1e-15);
        assert!((project_point(FRAC_PI_2, Point::new(0.3, 0.7)) + 0.3).abs() < 1e-15);
        assert!(project_point(FRAC_PI_4, Point::new(1.0, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn project_square_examples() {
        let iv = project_square(0.0, &Square::unit());
        assert!((iv.lo - 0.0).abs() < 1e-15 && (iv.hi - 1.0).abs() < 1e-15);
        let iv = project_square(FRAC_PI_4, &Square::unit());
        assert!((iv.lo + SQRT_2 / 2.0).abs() < 1e-12 && (iv.hi - SQRT_2 / 2.0).abs() < 1e-12);
        let half = Square::image_of(&Similarity::scaling(0.5, 0.0, 0.0).unwrap().as_map());
        let iv = project_square(0.0, &half);
        assert!(iv.lo.abs() < 1e-15 && (iv.hi - 0.5).abs() < 1e-15);
    }

    #[test]
    fn line_from_points_examples() {
        let u = line_from_two_points(Point::new(0.0, 0.5), Point::new(1.0, 0.5)).unwrap();
        assert!(u.theta.abs() < 1e-15 && (u.t - 0.5).abs() < 1e-15);
        let u = line_from_two_points(Point::new(0.5, 0.0), Point::new(0.5, 1.0)).unwrap();
        assert!((u.theta - FRAC_PI_2).abs() < 1e-15 && (u.t + 0.5).abs() < 1e-15);
        let u = line_from_two_points(Point::new(0.0, 0.0), Point::new(1.0, 1.0)).unwrap();
        assert!((u.theta - FRAC_PI_4).abs() < 1e-15 && u.t.abs() < 1e-15);
        let p = Point::new(0.2, 0.2);
        assert!(matches!(line_from_two_points(p, p), Err(Error::DegenerateLine)));
    }

    #[test]
    fn normalization_flips_offset() {
        let u = Line::new(0.3 + PI, 0.4);
        assert!((u.theta - 0.3).abs() < 1e-12 && (u.t + 0.4).abs() < 1e-15);
        let v = Line::new(0.3 - 3.0 * PI, 0.4);
        assert!((v.theta - 0.3).abs() < 1e-12 && (v.t + 0.4).abs() < 1e-15);
        let w = Line::new(0.3 + 2.0 * PI, 0.4);
        assert!((w.t - 0.4).abs() < 1e-15);
    }

    fn scaled(r: f64, angle: f64) -> IfsSpec {
        let maps = vec![
            Similarity::new(r, angle, Point::zeros(), false).unwrap(),
            Similarity::scaling(0.5, 0.5, 0.5).unwrap(),
        ];
        IfsSpec::new(vec!["a".into(), "b".into()], maps, None).unwrap()
    }

    #[test]
    fn renormalize_examples() {
        let ifs = scaled(0.5, 0.0);
        let v = renormalize(&ifs, 0, &Line::new(0.0, 0.3));
        assert!(v.theta.abs() < 1e-15 && (v.t - 0.6).abs() < 1e-15);

        // f = rotate(π/2) ∘ scale(1/2): f⁻¹ maps y = 0.5 to x = 1
        let ifs = scaled(0.5, FRAC_PI_2);
        let v = renormalize(&ifs, 0, &Line::new(0.0, 0.5));
        assert!((v.theta - FRAC_PI_2).abs() < 1e-12 && (v.t + 1.0).abs() < 1e-12);
    }

    #[test]
    fn renormalize_word_examples() {
        let o = 0.5;
        let maps = vec![
            Similarity::scaling(0.5, 0.0, 0.0).unwrap(),
            Similarity::scaling(0.5, o, 0.0).unwrap(),
            Similarity::scaling(0.5, 0.0, o).unwrap(),
            Similarity::scaling(0.5, o, o).unwrap(),
        ];
        let ifs = IfsSpec::new(["a", "b", "c", "d"].map(String::from).to_vec(), maps, None).unwrap();
        let u = Line::new(0.0, 0.1);
        let v = renormalize_word(&ifs, &Word(vec![0, 0]), &u);
        assert!(v.theta.abs() < 1e-15 && (v.t - 0.4).abs() < 1e-14);
        let single = renormalize_word(&ifs, &Word(vec![2]), &u);
        assert_eq!(single, renormalize(&ifs, 2, &u));
    }

    #[test]
    fn reflected_map_moves_lines_consistently() {
        let maps = vec![
            Similarity::new(0.4, 0.9, Point::new(0.3, 0.2), true).unwrap(),
            Similarity::scaling(0.5, 0.5, 0.5).unwrap(),
        ];
        let ifs = IfsSpec::new(vec!["a".into(), "b".into()], maps, None).unwrap();
        let u = Line::new(1.2, 0.35);
        let v = renormalize(&ifs, 0, &u);
        let inv = ifs.map(0).as_map().inverse();
        for s in [-1.0, 0.0, 2.5] {
            let p = u.carrier() + u.direction() * s;
            assert!(v.contains(inv.apply(p), 1e-12));
        }
    }

    #[test]
    fn intersection_examples() {
        assert!(line_square_intersects(&Line::new(0.0, 0.5), &Square::unit()));
        assert!(!line_square_intersects(&Line::new(0.0, 2.0), &Square::unit()));
        assert!(line_square_intersects(&Line::new(FRAC_PI_4, 0.70), &Square::unit()));
        assert!(!line_square_intersects(&Line::new(FRAC_PI_4, 0.71), &Square::unit()));
        assert!(line_square_intersects(&Line::new(0.0, 1.0), &Square::unit()));
    }

    #[test]
    fn union_length_examples() {
        let v = [Interval::new(0.0, 1.0), Interval::new(2.0, 3.0)];
        assert!((union_length(&v) - 2.0).abs() < 1e-15);
        let nested = [Interval::new(0.0, 1.0), Interval::new(0.2, 0.4), Interval::new(0.5, 0.9)];
        assert!((union_length(&nested) - 1.0).abs() < 1e-15);
        assert_eq!(union_length(&[]), 0.0);
    }
}
