//! Slices `L(θ)`: offsets `t ∈ (-1, 1)` for which enough perturbed-word
//! squares `f^{φ,0}_{a1} ∘ f_{a2}(I)` see the line `(θ, t)` at a good direction
//! and at renormalized offset at most 1.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::ifs::{IfsSpec, Point, SimilarityMap, Symbol};
use crate::measure::DirectionSet;
use crate::recurrence::grid::LineGrid;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SliceParams {
    pub epsilon: f64,
    pub c7: f64,
    pub n_words: usize,
    pub phi_samples: usize,
}

/// Rotation of a square about its center composed after the square's map.
pub fn rotate_about_center(f: &SimilarityMap, phi: f64) -> SimilarityMap {
    let center = f.apply(Point::new(0.5, 0.5));
    let (s, c) = phi.sin_cos();
    let d = f.translation - center;
    SimilarityMap {
        scale: f.scale,
        angle: f.angle + phi,
        translation: center + Point::new(c * d.x - s * d.y, s * d.x + c * d.y),
        reflect: f.reflect,
    }
}

#[derive(Debug, Clone)]
struct KernelMap {
    inv: SimilarityMap,
    sin_a: f64,
    cos_a: f64,
}

impl KernelMap {
    fn new(inv: SimilarityMap) -> Self {
        let (sin_a, cos_a) = inv.angle.sin_cos();
        KernelMap { inv, sin_a, cos_a }
    }

    /// Image direction and the affine offset map `t -> A + B t` of the lines
    /// `(θ, t)` under `inv`, given `sin θ`, `cos θ`.
    #[inline]
    fn image(&self, theta: f64, s: f64, c: f64) -> (f64, f64, f64) {
        let h = &self.inv;
        let (raw, mut sd, mut cd) = if h.reflect {
            (h.angle - theta, self.sin_a * c - self.cos_a * s, self.cos_a * c + self.sin_a * s)
        } else {
            (h.angle + theta, self.sin_a * c + self.cos_a * s, self.cos_a * c - self.sin_a * s)
        };
        let k = (raw / std::f64::consts::PI).floor();
        let mut th = raw - k * std::f64::consts::PI;
        if th >= std::f64::consts::PI {
            th -= std::f64::consts::PI;
        }
        if (k as i64).rem_euclid(2) == 1 {
            sd = -sd;
            cd = -cd;
        }
        let a = -h.translation.x * sd + h.translation.y * cd;
        let n = h.linear(Point::new(-s, c));
        let b = -n.x * sd + n.y * cd;
        (th.max(0.0), a, b)
    }
}

/// One perturbed word's contribution at a slice point.
#[derive(Debug, Clone, Serialize)]
pub struct SliceWitness {
    pub word: String,
    pub angles: Vec<f64>,
    pub measure: f64,
}

/// `L(θ)` on the offset grid of a [`LineGrid`].
#[derive(Debug, Clone, Serialize)]
pub struct SliceSet {
    pub theta_index: usize,
    pub theta: f64,
    /// Per offset index: number of words `a1` whose angle set has measure above `c7`.
    pub passing: Vec<u16>,
    pub member: Vec<bool>,
}

impl SliceSet {
    pub fn count(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn measure(&self, grid: &LineGrid) -> f64 {
        self.count() as f64 * grid.t_pitch
    }

    pub fn member_offsets<'a>(&'a self, grid: &'a LineGrid) -> impl Iterator<Item = f64> + 'a {
        self.member
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(j, _)| grid.t(j))
    }
}

/// Precomputed inverse maps of `f^{φ,0}_{a1} ∘ f_{a2}` over the rotation grid.
pub struct SliceBuilder<'a> {
    ifs: &'a IfsSpec,
    grid: LineGrid,
    params: SliceParams,
    part_one: Vec<Symbol>,
    phis: Vec<f64>,
    // [a1][phi][a2]
    kernel: Vec<Vec<Vec<KernelMap>>>,
    // offset indices with |t| < 1
    j_lo: usize,
    j_hi: usize,
}

impl<'a> SliceBuilder<'a> {
    pub fn new(ifs: &'a IfsSpec, grid: LineGrid, params: SliceParams) -> Result<Self> {
        if params.phi_samples == 0 {
            return Err(invalid("phi_samples", "must be at least 1"));
        }
        if params.n_words == 0 {
            return Err(invalid("n_words", "must be at least 1"));
        }
        let part_one = ifs.part_one();
        let part_two = ifs.part_two();
        let n_phi = params.phi_samples;
        let phis: Vec<f64> = (0..n_phi)
            .map(|p| params.epsilon * (-1.0 + (2.0 * p as f64 + 1.0) / n_phi as f64))
            .collect();
        let maps: Vec<SimilarityMap> = ifs.maps().iter().map(|m| m.as_map()).collect();
        let kernel = part_one
            .iter()
            .map(|&a1| {
                phis.iter()
                    .map(|&phi| {
                        let f1 = rotate_about_center(&maps[a1], phi);
                        part_two
                            .iter()
                            .map(|&a2| KernelMap::new(f1.compose(&maps[a2]).inverse()))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let inside: Vec<usize> = (0..grid.n_t).filter(|&j| grid.t(j).abs() < 1.0).collect();
        let (j_lo, j_hi) = match (inside.first(), inside.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(invalid("t_pitch", "offset grid has no point in (-1, 1)")),
        };
        Ok(SliceBuilder {
            ifs,
            grid,
            params,
            part_one,
            phis,
            kernel,
            j_lo,
            j_hi,
        })
    }

    pub fn grid(&self) -> &LineGrid {
        &self.grid
    }

    pub fn phi_weight(&self) -> f64 {
        2.0 * self.params.epsilon / self.params.phi_samples as f64
    }

    /// Offset-index range `[lo, hi]` where `|A + B t| <= 1`.
    fn passing_range(&self, a: f64, b: f64) -> Option<(usize, usize)> {
        if b.abs() < 1e-300 {
            return (a.abs() <= 1.0 + 1e-12).then_some((self.j_lo, self.j_hi));
        }
        let tol = 1e-12;
        let (mut lo, mut hi) = ((-1.0 - tol - a) / b, (1.0 + tol - a) / b);
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        let g = &self.grid;
        let jlo = ((lo + g.t_max) / g.t_pitch - 1e-9).ceil().max(self.j_lo as f64);
        let jhi = ((hi + g.t_max) / g.t_pitch + 1e-9).floor().min(self.j_hi as f64);
        (jlo <= jhi).then_some((jlo as usize, jhi as usize))
    }

    /// Per word `a1` and offset index, the number of rotation samples with a
    /// passing second letter.
    fn phi_counts(&self, theta: f64, e: &DirectionSet, mut visit: impl FnMut(usize, &[u32])) {
        let (s, c) = theta.sin_cos();
        let n = self.grid.n_t;
        let mut counts = vec![0u32; n];
        let mut diff = vec![0i32; n + 1];
        let mut ranges: Vec<(usize, usize)> = Vec::new();
        for (k1, per_phi) in self.kernel.iter().enumerate() {
            diff.iter_mut().for_each(|d| *d = 0);
            for row in per_phi {
                ranges.clear();
                for km in row {
                    let (th, a, b) = km.image(theta, s, c);
                    if !e.contains(th) {
                        continue;
                    }
                    if let Some(r) = self.passing_range(a, b) {
                        ranges.push(r);
                    }
                }
                ranges.sort_unstable();
                let mut cur: Option<(usize, usize)> = None;
                for &(lo, hi) in &ranges {
                    match cur {
                        Some((clo, chi)) if lo <= chi + 1 => cur = Some((clo, chi.max(hi))),
                        _ => {
                            if let Some((clo, chi)) = cur {
                                diff[clo] += 1;
                                diff[chi + 1] -= 1;
                            }
                            cur = Some((lo, hi));
                        }
                    }
                }
                if let Some((clo, chi)) = cur {
                    diff[clo] += 1;
                    diff[chi + 1] -= 1;
                }
            }
            let mut run = 0i32;
            for j in 0..n {
                run += diff[j];
                counts[j] = run as u32;
            }
            visit(k1, &counts);
        }
    }

    pub fn build(&self, theta_index: usize, e: &DirectionSet) -> SliceSet {
        let theta = self.grid.theta(theta_index);
        let n = self.grid.n_t;
        let mut passing = vec![0u16; n];
        if e.contains(theta) {
            let w = self.phi_weight();
            self.phi_counts(theta, e, |_, counts| {
                for j in 0..n {
                    if counts[j] as f64 * w > self.params.c7 {
                        passing[j] += 1;
                    }
                }
            });
        }
        let member = passing
            .iter()
            .map(|&p| p as usize >= self.params.n_words)
            .collect();
        SliceSet {
            theta_index,
            theta,
            passing,
            member,
        }
    }

    /// `|Φ_{a1,t}|` per word `a1` (rows) and offset index (columns).
    pub fn phi_measure_table(&self, theta_index: usize, e: &DirectionSet) -> Vec<Vec<f64>> {
        let theta = self.grid.theta(theta_index);
        let w = self.phi_weight();
        let mut table = vec![vec![0.0; self.grid.n_t]; self.part_one.len()];
        self.phi_counts(theta, e, |k1, counts| {
            for (dst, &c) in table[k1].iter_mut().zip(counts) {
                *dst = c as f64 * w;
            }
        });
        table
    }

    /// The words and angle sets behind a slice point, recomputed directly.
    pub fn witnesses(&self, theta_index: usize, j: usize, e: &DirectionSet) -> Vec<SliceWitness> {
        let theta = self.grid.theta(theta_index);
        let t = self.grid.t(j);
        let (s, c) = theta.sin_cos();
        let mut out = Vec::new();
        if !e.contains(theta) || j < self.j_lo || j > self.j_hi {
            return out;
        }
        for (k1, per_phi) in self.kernel.iter().enumerate() {
            let angles: Vec<f64> = per_phi
                .iter()
                .zip(&self.phis)
                .filter(|(row, _)| {
                    row.iter().any(|km| {
                        let (th, a, b) = km.image(theta, s, c);
                        e.contains(th) && (a + b * t).abs() <= 1.0 + 1e-12
                    })
                })
                .map(|(_, &phi)| phi)
                .collect();
            let measure = angles.len() as f64 * self.phi_weight();
            if measure > self.params.c7 {
                out.push(SliceWitness {
                    word: self.ifs.symbols()[self.part_one[k1]].clone(),
                    angles,
                    measure,
                });
            }
        }
        out
    }
}
