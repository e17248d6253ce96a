//! End-to-end invariants of the build, search and certification stages.

mod common;

use std::f64::consts::PI;

use proj_interior::ifs::epsilon_distance;
use proj_interior::measure::{l2_norm_estimate, projected_histogram};
use proj_interior::params::SearchMode;
use proj_interior::perturb::perturbed_spec;
use proj_interior::pipeline::{self, Built, Setup};
use proj_interior::recurrence::check::{check_recurrence, recheck_witnesses};
use proj_interior::search::{search_omega0, SearchConfig, SearchOutcome};

fn setup(name: &str, rho: f64, budget: u64) -> Setup {
    let mut cfg = common::config(name);
    cfg.constants.rho = rho;
    cfg.grid.search_budget = budget;
    Setup::new(cfg).unwrap()
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

fn run_search(s: &Setup, b: &Built, mode: SearchMode, budget: u64) -> SearchOutcome {
    let config = SearchConfig {
        budget,
        seed: s.seed(),
        mode,
        priority_cap: 4096,
    };
    search_omega0(&s.working, &b.candidate, &s.law(), &config)
}

#[test]
fn thickenings_nest() {
    let s = setup("sierpinski.json", 1.0 / 64.0, 1);
    let b = pipeline::build(&s).unwrap();
    let c = &b.candidate;
    assert!(c.zero.count() > 0);
    assert!(c.zero.is_subset(&c.zero_hit));
    assert!(c.zero.is_subset(&c.core));
    assert!(c.core.is_subset(&c.one));
    assert!(c.core.is_subset(&c.core_hit));
    assert!(c.delta.iter().all(|&k| c.one.contains(k as usize)));
}

#[test]
fn witnesses_land_in_the_candidate() {
    for name in ["four-corner.json", "sierpinski.json"] {
        let s = setup(name, 1.0 / 64.0, 1);
        let b = pipeline::build(&s).unwrap();
        let omega = s.law().sample(&s.working, s.seed(), 0);
        let spec = perturbed_spec(&s.working, &omega, s.constants.c1, s.constants.rho);
        let report = check_recurrence(&spec, &b.candidate, usize::MAX);
        assert_eq!(report.witnesses.len(), report.recurred, "{name}");
        assert!(recheck_witnesses(&spec, &b.candidate, &report), "{name}");
    }
}

#[test]
fn random_perturbations_stay_close() {
    let s = setup("sierpinski.json", 1.0 / 256.0, 1);
    let law = s.law();
    for k in 0..100 {
        let omega = law.sample(&s.working, 7, k);
        let spec = perturbed_spec(&s.working, &omega, law.c1, law.rho);
        let d = epsilon_distance(&s.working, &spec).unwrap();
        assert!(d < law.epsilon, "sample {k}: distance {d}");
    }
}

#[test]
fn search_ignores_worker_count() {
    let s = setup("four-corner.json", 1.0 / 64.0, 1);
    let b = pipeline::build(&s).unwrap();
    for mode in [SearchMode::Fresh, SearchMode::ResampleFailing] {
        let one = pool(1).install(|| run_search(&s, &b, mode, 50));
        let many = pool(4).install(|| run_search(&s, &b, mode, 50));
        assert_eq!(format!("{one:?}"), format!("{many:?}"));
    }
}

#[test]
fn direction_scan_ignores_worker_count() {
    let s = setup("sierpinski.json", 1.0 / 64.0, 1);
    let one = pool(1).install(|| s.direction_set(257).unwrap());
    let many = pool(4).install(|| s.direction_set(257).unwrap());
    assert_eq!(format!("{one:?}"), format!("{many:?}"));
}

#[test]
fn acceptance_implies_coverage() {
    let s = setup("four-corner.json", 1.0 / 64.0, 1);
    let b = pipeline::build(&s).unwrap();
    let out = run_search(&s, &b, SearchMode::Fresh, 20);
    assert!(out.omega0.is_some());
    assert!(out.success.iter().all(|&x| x));
    assert_eq!(out.best_coverage, 1.0);

    // a search that gives up reports the best coverage without an assignment
    let s = setup("sierpinski.json", 1.0 / 64.0, 1);
    let b = pipeline::build(&s).unwrap();
    let out = run_search(&s, &b, SearchMode::Fresh, 2);
    if out.omega0.is_none() {
        assert!(out.best.is_some());
        assert!(out.covered() < out.delta_size);
        assert_eq!(out.covered() as f64 / out.delta_size as f64, out.best_coverage);
    }
}

#[test]
fn four_corner_density_is_refinement_stable() {
    let ifs = common::corners(0.5);
    for k in 0..8 {
        let theta = k as f64 * PI / 8.0 + 0.1;
        let l2 = |rho: f64| {
            let h = projected_histogram(&ifs, theta, rho, rho.sqrt() / 8.0, 1 << 24).unwrap();
            l2_norm_estimate(&h)
        };
        let (coarse, fine) = (l2(1.0 / 256.0), l2(1.0 / 512.0));
        assert!((fine - coarse).abs() < 0.05 * coarse, "theta {theta}: {coarse} vs {fine}");
    }
}
