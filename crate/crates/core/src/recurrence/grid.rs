//! Product grids in line coordinates and boolean sets on them.
//!
//! Directions are `θ_i = i π / n_θ`; offsets are symmetric, `t_j = -T + j h`
//! with `T` a multiple of `h`, so that the wrap `(θ + π, t) = (θ, -t)` maps
//! the grid onto itself with `j -> n_t - 1 - j`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::line::Line;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineGrid {
    pub n_theta: usize,
    pub n_t: usize,
    pub t_pitch: f64,
    pub t_max: f64,
}

impl LineGrid {
    /// Offsets cover at least `[-t_extent, t_extent]`.
    pub fn new(n_theta: usize, t_pitch: f64, t_extent: f64) -> Result<Self> {
        if n_theta < 2 {
            return Err(invalid("n_theta", "need at least two directions"));
        }
        if !(t_pitch > 0.0) || !(t_extent > 0.0) {
            return Err(invalid("t_pitch", "pitch and extent must be positive"));
        }
        let half = (t_extent / t_pitch - 1e-9).ceil() as usize;
        Ok(LineGrid {
            n_theta,
            n_t: 2 * half + 1,
            t_pitch,
            t_max: half as f64 * t_pitch,
        })
    }

    pub fn theta_pitch(&self) -> f64 {
        PI / self.n_theta as f64
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_t
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn theta(&self, i: usize) -> f64 {
        i as f64 * self.theta_pitch()
    }

    pub fn t(&self, j: usize) -> f64 {
        -self.t_max + j as f64 * self.t_pitch
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_t + j
    }

    pub fn split(&self, k: usize) -> (usize, usize) {
        (k / self.n_t, k % self.n_t)
    }

    pub fn line(&self, k: usize) -> Line {
        let (i, j) = self.split(k);
        Line {
            theta: self.theta(i),
            t: self.t(j),
        }
    }

    /// Nearest grid point of a line, or `None` outside the offset range.
    #[inline]
    pub fn nearest(&self, u: &Line) -> Option<usize> {
        let mut i = (u.theta / self.theta_pitch()).round() as usize;
        let mut t = u.t;
        if i >= self.n_theta {
            i -= self.n_theta;
            t = -t;
        }
        let jf = ((t + self.t_max) / self.t_pitch).round();
        if jf < 0.0 || jf >= self.n_t as f64 {
            return None;
        }
        Some(self.index(i, jf as usize))
    }

    /// Index radius of a coordinate distance: grid steps `k` with `k h <= r`.
    pub fn steps(pitch: f64, r: f64) -> usize {
        (r / pitch + 1e-9).floor() as usize
    }
}

/// A subset of a [`LineGrid`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSet {
    pub bits: Vec<bool>,
}

impl GridSet {
    pub fn empty(grid: &LineGrid) -> Self {
        GridSet {
            bits: vec![false; grid.len()],
        }
    }

    pub fn from_fn(grid: &LineGrid, f: impl Fn(&Line) -> bool) -> Self {
        GridSet {
            bits: (0..grid.len()).map(|k| f(&grid.line(k))).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.bits[k]
    }

    /// Membership of the nearest grid point.
    #[inline]
    pub fn contains_line(&self, grid: &LineGrid, u: &Line) -> bool {
        grid.nearest(u).is_some_and(|k| self.bits[k])
    }

    pub fn is_subset(&self, other: &GridSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
    }

    /// Sup-metric dilation by `k_theta` direction steps and `k_t` offset
    /// steps, closed (boundary points included). Rows past either end of the
    /// direction range wrap with mirrored offsets.
    pub fn dilate(&self, grid: &LineGrid, k_theta: usize, k_t: usize) -> GridSet {
        let (n, m) = (grid.n_theta, grid.n_t);
        let mut rows = vec![false; grid.len()];
        for i in 0..n {
            let src = &self.bits[i * m..(i + 1) * m];
            let dst = &mut rows[i * m..(i + 1) * m];
            // running count of members in the window [j - k_t, j + k_t]
            let mut count: usize = src[..=k_t.min(m - 1)].iter().map(|&b| b as usize).sum();
            for j in 0..m {
                dst[j] = count > 0;
                if j + k_t + 1 < m {
                    count += src[j + k_t + 1] as usize;
                }
                if j >= k_t {
                    count -= src[j - k_t] as usize;
                }
            }
        }
        let mut out = vec![false; grid.len()];
        for i in 0..n {
            let dst = &mut out[i * m..(i + 1) * m];
            for d in -(k_theta as i64)..=(k_theta as i64) {
                let r = i as i64 + d;
                let (row, mirror) = if r < 0 {
                    ((r + n as i64) as usize, true)
                } else if r >= n as i64 {
                    ((r - n as i64) as usize, true)
                } else {
                    (r as usize, false)
                };
                let src = &rows[row * m..(row + 1) * m];
                for j in 0..m {
                    dst[j] |= if mirror { src[m - 1 - j] } else { src[j] };
                }
            }
        }
        GridSet { bits: out }
    }
}
