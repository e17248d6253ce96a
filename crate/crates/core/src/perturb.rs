//! Rotations and shifts of the first-part maps, and the product law on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ifs::{epsilon_distance, IfsSpec, Point, Similarity, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub phi: f64,
    pub gamma: [f64; 2],
}

impl Perturbation {
    pub const IDENTITY: Perturbation = Perturbation {
        phi: 0.0,
        gamma: [0.0, 0.0],
    };
}

/// A perturbation for each symbol of the first part, in alphabet order.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaAssignment {
    pub symbols: Vec<Symbol>,
    pub values: Vec<Perturbation>,
}

impl OmegaAssignment {
    pub fn identity(ifs: &IfsSpec) -> Self {
        let symbols = ifs.part_one();
        OmegaAssignment {
            values: vec![Perturbation::IDENTITY; symbols.len()],
            symbols,
        }
    }

    pub fn get(&self, a: Symbol) -> Option<&Perturbation> {
        self.symbols.iter().position(|&s| s == a).map(|k| &self.values[k])
    }
}

/// Uniform law on `((-ε, ε) × (-1, 1)²)^{𝒜₁}` with shift scale `c1 ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationLaw {
    pub epsilon: f64,
    pub c1: f64,
    pub rho: f64,
}

fn open_uniform(rng: &mut ChaCha8Rng, half_width: f64) -> f64 {
    loop {
        let x = rng.random_range(-half_width..half_width);
        if x != -half_width {
            return x;
        }
    }
}

impl PerturbationLaw {
    /// The deterministic generator of sample `index` under `seed`.
    pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        rng
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> Perturbation {
        let phi = open_uniform(rng, self.epsilon);
        let gamma = [open_uniform(rng, 1.0), open_uniform(rng, 1.0)];
        Perturbation { phi, gamma }
    }

    pub fn sample(&self, ifs: &IfsSpec, seed: u64, index: u64) -> OmegaAssignment {
        let mut rng = Self::stream(seed, index);
        let symbols = ifs.part_one();
        OmegaAssignment {
            values: symbols.iter().map(|_| self.draw(&mut rng)).collect(),
            symbols,
        }
    }

    pub fn shift(&self) -> f64 {
        self.c1 * self.rho
    }
}

/// `f_a(I)` rotated by `φ` about its center, then moved by `γ c1 ρ`.
pub fn perturb_map(f: &Similarity, w: &Perturbation, c1: f64, rho: f64) -> Similarity {
    let m = f.as_map();
    let center = m.apply(Point::new(0.5, 0.5));
    let d = m.translation - center;
    let (s, c) = w.phi.sin_cos();
    let turn = Point::new(c * d.x - s * d.y - d.x, s * d.x + c * d.y - d.y);
    let shift = Point::new(w.gamma[0], w.gamma[1]) * (c1 * rho);
    Similarity {
        ratio: f.ratio,
        angle: (f.angle + w.phi).rem_euclid(std::f64::consts::TAU),
        tx: f.tx + turn.x + shift.x,
        ty: f.ty + turn.y + shift.y,
        reflect: f.reflect,
    }
}

#[derive(Debug, Clone)]
pub struct PerturbedIfs {
    pub spec: IfsSpec,
    /// Symbols whose perturbed square leaves the unit square.
    pub escaping: Vec<String>,
    pub epsilon_distance: f64,
}

pub fn build_perturbed_ifs(ifs: &IfsSpec, omega: &OmegaAssignment, c1: f64, rho: f64) -> Result<PerturbedIfs> {
    if omega.symbols != ifs.part_one() {
        return Err(invalid("omega", "assignment does not cover exactly the first part"));
    }
    let spec = perturbed_spec(ifs, omega, c1, rho);
    let escaping = spec
        .escaping_symbols()
        .into_iter()
        .map(|a| spec.symbols()[a].clone())
        .collect();
    let epsilon_distance = epsilon_distance(ifs, &spec)?;
    Ok(PerturbedIfs {
        spec,
        escaping,
        epsilon_distance,
    })
}

/// The perturbed system alone, without the closeness and containment checks.
pub fn perturbed_spec(ifs: &IfsSpec, omega: &OmegaAssignment, c1: f64, rho: f64) -> IfsSpec {
    let mut maps = ifs.maps().to_vec();
    for (&a, w) in omega.symbols.iter().zip(&omega.values) {
        maps[a] = perturb_map(&maps[a], w, c1, rho);
    }
    ifs.with_maps(maps)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationEntry {
    pub symbol: String,
    pub phi: f64,
    pub gamma: [f64; 2],
}

/// Standalone file form of an assignment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationFile {
    pub epsilon: f64,
    pub c1: f64,
    pub rho: f64,
    pub seed: Option<u64>,
    pub omega: Vec<PerturbationEntry>,
}

impl PerturbationFile {
    pub fn new(ifs: &IfsSpec, omega: &OmegaAssignment, law: &PerturbationLaw, seed: Option<u64>) -> Self {
        PerturbationFile {
            epsilon: law.epsilon,
            c1: law.c1,
            rho: law.rho,
            seed,
            omega: omega
                .symbols
                .iter()
                .zip(&omega.values)
                .map(|(&a, w)| PerturbationEntry {
                    symbol: ifs.symbols()[a].clone(),
                    phi: w.phi,
                    gamma: w.gamma,
                })
                .collect(),
        }
    }

    pub fn law(&self) -> PerturbationLaw {
        PerturbationLaw {
            epsilon: self.epsilon,
            c1: self.c1,
            rho: self.rho,
        }
    }

    /// Resolves symbol names against `ifs` and checks the ranges.
    pub fn assignment(&self, ifs: &IfsSpec) -> Result<OmegaAssignment> {
        let mut omega = OmegaAssignment::identity(ifs);
        let mut seen = vec![false; omega.symbols.len()];
        for e in &self.omega {
            let a = ifs.symbol_index(&e.symbol)?;
            let k = omega
                .symbols
                .iter()
                .position(|&s| s == a)
                .ok_or_else(|| invalid("omega", format!("symbol '{}' is not in the first part", e.symbol)))?;
            if !(e.phi.abs() < self.epsilon) || e.gamma.iter().any(|g| !(g.abs() < 1.0)) {
                return Err(invalid("omega", format!("perturbation of '{}' is out of range", e.symbol)));
            }
            if seen[k] {
                return Err(Error::DuplicateSymbol(e.symbol.clone()));
            }
            seen[k] = true;
            omega.values[k] = Perturbation {
                phi: e.phi,
                gamma: e.gamma,
            };
        }
        if let Some(k) = seen.iter().position(|&s| !s) {
            return Err(Error::MissingMap(ifs.symbols()[omega.symbols[k]].clone()));
        }
        Ok(omega)
    }
}
