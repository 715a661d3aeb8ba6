#![allow(dead_code)]

use std::f64::consts::TAU;

use elastica_core::Vec2;

pub struct Seed {
    pub name: &'static str,
    pub index: i64,
    pub points: Vec<Vec2>,
}

fn param(m: usize, turns: f64, f: impl Fn(f64) -> (f64, f64)) -> Vec<Vec2> {
    (0..m)
        .map(|i| {
            let (x, y) = f(turns * TAU * i as f64 / m as f64);
            Vec2::new(x, y)
        })
        .collect()
}

fn reversed(mut pts: Vec<Vec2>) -> Vec<Vec2> {
    pts.reverse();
    pts
}

/// Two half circles of radius `r` joined by straight sides of length `len`.
fn stadium(len: f64, r: f64, m: usize) -> Vec<Vec2> {
    let mut pts = Vec::with_capacity(2 * m);
    for (cx, start) in [(len, -0.5), (0.0, 0.5)] {
        for i in 0..=m {
            let t = std::f64::consts::PI * (start + i as f64 / m as f64);
            pts.push(Vec2::new(cx + r * t.cos(), r * t.sin()));
        }
    }
    pts
}

/// Twelve seed curves, three for each index in {-1, 0, 1, 2}.
pub fn corpus() -> Vec<Seed> {
    vec![
        Seed {
            name: "ellipse-2to1",
            index: 1,
            points: param(400, 1.0, |t| (2.0 * t.cos(), t.sin())),
        },
        Seed {
            name: "rounded-triangle",
            index: 1,
            points: param(300, 1.0, |t| {
                let r = 1.0 + 0.25 * (3.0 * t).cos();
                (r * t.cos(), r * t.sin())
            }),
        },
        Seed {
            name: "stadium-3x1",
            index: 1,
            points: stadium(3.0, 0.5, 200),
        },
        Seed {
            name: "ellipse-3to1-cw",
            index: -1,
            points: reversed(param(400, 1.0, |t| (3.0 * t.cos(), t.sin()))),
        },
        Seed {
            name: "kidney-cw",
            index: -1,
            points: reversed(param(400, 1.0, |t| {
                let r = 1.0 + 0.35 * t.cos() - 0.25 * (2.0 * t).cos();
                (r * t.cos(), 0.8 * r * t.sin())
            })),
        },
        Seed {
            name: "rounded-square-cw",
            index: -1,
            points: reversed(param(400, 1.0, |t| {
                let r = 1.0 + 0.12 * (4.0 * t).cos();
                (r * t.cos(), r * t.sin())
            })),
        },
        Seed {
            name: "gerono-lemniscate",
            index: 0,
            points: param(400, 1.0, |t| (t.cos(), t.sin() * t.cos())),
        },
        Seed {
            name: "bean-one-crossing",
            index: 0,
            points: param(400, 1.0, |t| {
                (1.3 * t.sin() + 0.3 * t.cos(), 0.7 * (2.0 * t).sin() + 0.25 * t.cos())
            }),
        },
        Seed {
            name: "lopsided-eight",
            index: 0,
            points: param(400, 1.0, |t| {
                let s = 1.0 + 0.4 * t.sin();
                (s * 2.0 * t.sin(), s * (2.0 * t).sin())
            }),
        },
        Seed {
            name: "limacon-inner-loop",
            index: 2,
            points: param(400, 1.0, |t| {
                let r = 0.5 + t.cos();
                (r * t.cos(), r * t.sin())
            }),
        },
        Seed {
            name: "trefoil-projection",
            index: 2,
            points: param(600, 1.0, |t| {
                (t.sin() + 2.0 * (2.0 * t).sin(), t.cos() - 2.0 * (2.0 * t).cos())
            }),
        },
        Seed {
            name: "double-loop-spiral",
            index: 2,
            points: param(600, 2.0, |t| {
                let r = 1.0 + 0.3 * (0.5 * t).cos();
                (1.3 * r * t.cos(), r * t.sin())
            }),
        },
    ]
}
