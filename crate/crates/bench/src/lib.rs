//! Fixtures shared by the benchmarks under `benches/`.

use std::f64::consts::TAU;

use elastica_core::{ingest, PolyCurve, Vec2};

/// An `n`-gon resampled from a 2:1 ellipse.
pub fn ellipse(n: usize) -> PolyCurve {
    let pts: Vec<Vec2> = (0..400)
        .map(|i| {
            let t = TAU * i as f64 / 400.0;
            Vec2::new(2.0 * t.cos(), t.sin())
        })
        .collect();
    ingest(&pts, n).expect("ellipse resamples")
}
