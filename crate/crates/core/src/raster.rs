//! Point-cloud rasters of an attractor as binary PGM images.

use std::io::Write;

use crate::error::{invalid, Result};
use crate::ifs::IfsSpec;
use crate::measure::MeasureAtoms;

/// Square 8-bit raster of the unit square, row 0 at the top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub size: usize,
    pub pixels: Vec<u8>,
}

impl Raster {
    /// Marks the pixel under every stopping-word center at the pixel scale.
    pub fn attractor(ifs: &IfsSpec, size: usize, budget: u64) -> Result<Self> {
        if size == 0 {
            return Err(invalid("size", "raster needs at least one pixel"));
        }
        let scale = (1.0 / size as f64).min(0.5);
        let atoms = MeasureAtoms::new(ifs, scale, budget)?;
        let mut pixels = vec![0u8; size * size];
        let n = size as f64;
        for p in &atoms.points {
            if !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y) {
                continue;
            }
            let col = ((p.x * n) as usize).min(size - 1);
            let row = (((1.0 - p.y) * n) as usize).min(size - 1);
            pixels[row * size + col] = 255;
        }
        Ok(Raster { size, pixels })
    }

    pub fn lit(&self) -> usize {
        self.pixels.iter().filter(|&&v| v > 0).count()
    }

    pub fn write_pgm(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "P5 {} {} 255", self.size, self.size)?;
        out.write_all(&self.pixels)
    }
}
