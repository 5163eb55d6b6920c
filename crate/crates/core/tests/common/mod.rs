#![allow(dead_code)]

use msc_core::data::{Categorical, Column, PointTable};
use msc_core::index::Extent;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform points in the unit square; a few share coordinates so duplicate
/// handling gets exercised.
pub fn random_table(rng: &mut impl Rng, n: usize) -> PointTable {
    let mut xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut ys: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    for i in (7..n).step_by(97) {
        xs[i] = xs[i - 7];
        ys[i] = ys[i - 7];
    }
    PointTable::from_xy(xs, ys).unwrap()
}

pub fn random_table_with_columns(rng: &mut impl Rng, n: usize, labels: usize) -> PointTable {
    let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
    let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1e6..1e6)).collect();
    let names: Vec<String> = (0..n).map(|_| format!("label-{}", rng.gen_range(0..labels))).collect();
    PointTable::new(
        "x",
        "y",
        vec![
            ("x".into(), Column::real(xs)),
            ("y".into(), Column::real(ys)),
            ("v".into(), Column::real(v)),
            ("c".into(), Column::Categorical(Categorical::from_values(&names))),
        ],
    )
    .unwrap()
}

/// Extent with random corners in `[-0.2, 1.2]`, sometimes degenerate.
pub fn random_extent(rng: &mut impl Rng) -> Extent {
    let mut a = [rng.gen_range(-0.2..1.2), rng.gen_range(-0.2..1.2)];
    let mut b = [rng.gen_range(-0.2..1.2), rng.gen_range(-0.2..1.2)];
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    if rng.gen_ratio(1, 20) {
        a[1] = a[0];
    }
    Extent::new(a[0], a[1], b[0], b[1]).unwrap()
}

/// Star-shaped simple polygon: sorted angles with random radii around a
/// random center.
pub fn random_star_polygon(rng: &mut impl Rng, vertices: usize) -> Vec<(f64, f64)> {
    let cx = rng.gen_range(0.2..0.8);
    let cy = rng.gen_range(0.2..0.8);
    let mut angles: Vec<f64> = (0..vertices)
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
        .into_iter()
        .map(|a| {
            let r = rng.gen_range(0.05..0.5);
            (cx + r * a.cos(), cy + r * a.sin())
        })
        .collect()
}

/// Even-odd crossing count, written independently of the library's test.
pub fn brute_force_inside(poly: &[(f64, f64)], px: f64, py: f64) -> bool {
    let n = poly.len();
    let mut crossings = 0;
    for k in 0..n {
        let (ax, ay) = poly[k];
        let (bx, by) = poly[(k + 1) % n];
        let (lo, hi) = if ay < by { (ay, by) } else { (by, ay) };
        if py < lo || py >= hi {
            continue;
        }
        let t = (py - ay) / (by - ay);
        let x_cross = ax + t * (bx - ax);
        if x_cross > px {
            crossings += 1;
        }
    }
    crossings % 2 == 1
}
