#![allow(dead_code)]

use std::path::PathBuf;

use proj_interior::config::RunConfig;
use proj_interior::{IfsSpec, Similarity};

pub fn spec(maps: Vec<Similarity>) -> IfsSpec {
    let names = (0..maps.len()).map(|k| ((b'a' + k as u8) as char).to_string()).collect();
    IfsSpec::new(names, maps, None).unwrap()
}

pub fn sierpinski() -> IfsSpec {
    spec(vec![
        Similarity::scaling(0.5, 0.0, 0.0).unwrap(),
        Similarity::scaling(0.5, 0.5, 0.0).unwrap(),
        Similarity::scaling(0.5, 0.25, 0.5).unwrap(),
    ])
}

/// Four maps of ratio `r` in the corners of the unit square.
pub fn corners(r: f64) -> IfsSpec {
    let s = 1.0 - r;
    spec(vec![
        Similarity::scaling(r, 0.0, 0.0).unwrap(),
        Similarity::scaling(r, s, 0.0).unwrap(),
        Similarity::scaling(r, 0.0, s).unwrap(),
        Similarity::scaling(r, s, s).unwrap(),
    ])
}

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn config(name: &str) -> RunConfig {
    RunConfig::load(&repo_root().join("configs").join(name)).unwrap()
}
