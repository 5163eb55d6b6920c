mod common;

use std::collections::HashMap;

use common::*;
use msc_core::data::{bin_index, Categorical, Column, PointTable};
use msc_core::wire::{decode_points_chunk, encode_points_chunk};
use proptest::prelude::*;
use rand::Rng;

/// Per-value binning computed independently of `bin_index`: walks the bin
/// edges instead of dividing.
fn oracle_bin(v: f64, min: f64, max: f64, bins: usize) -> usize {
    let w = (max - min) / bins as f64;
    if w == 0.0 {
        return bins - 1;
    }
    for i in 0..bins - 1 {
        let hi = min + (i + 1) as f64 * w;
        if v < hi {
            return i;
        }
    }
    bins - 1
}

#[test]
fn histogram_matches_per_value_binning() {
    let mut rng = rng(20);
    let values: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
    let n = values.len();
    let table = PointTable::new(
        "x",
        "y",
        vec![
            ("x".into(), Column::real(vec![0.0; n])),
            ("y".into(), Column::real(vec![0.0; n])),
            ("v".into(), Column::real(values.clone())),
        ],
    )
    .unwrap();
    let counts = table.histogram("v", 10).unwrap();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut expected = vec![0u64; 10];
    for &v in &values {
        expected[oracle_bin(v, min, max, 10)] += 1;
    }
    assert_eq!(counts, expected);
    assert_eq!(counts.iter().sum::<u64>(), 1000);
}

#[test]
fn category_frequencies_match_hash_count() {
    let mut rng = rng(21);
    let t = random_table_with_columns(&mut rng, 5000, 13);
    let cat = t.column("c").unwrap().as_categorical().unwrap().clone();
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for row in 0..t.row_count() {
        *counts.entry(cat.label_of(row)).or_default() += 1;
    }
    let got = t.category_frequencies("c").unwrap();
    assert_eq!(got.len(), counts.len());
    for (label, count) in &got {
        assert_eq!(counts[label.as_str()], *count, "label {label}");
    }
    assert!(got.windows(2).all(|w| w[0].0 < w[1].0));
}

#[test]
fn ingest_roundtrips_through_points_chunk() {
    let mut rng = rng(22);
    let t = random_table_with_columns(&mut rng, 1000, 300);
    let frame = encode_points_chunk(&t, None, &["x", "y", "v", "c"]).unwrap();
    let chunk = decode_points_chunk(&frame).unwrap();
    let labels = t.column("c").unwrap().as_categorical().unwrap().labels().to_vec();
    let back = chunk
        .to_table("x", "y", &|name| (name == "c").then(|| labels.clone()))
        .unwrap();
    assert_eq!(back, t);
    for i in 0..t.row_count() {
        assert_eq!(chunk.x()[i], t.x()[i] as f32);
        assert_eq!(chunk.y()[i], t.y()[i] as f32);
    }
}

#[test]
fn csv_ingest_matches_generated_values() {
    let mut rng = rng(23);
    let mut csv = String::from("x,y,pop,region\n");
    let mut rows = Vec::new();
    for _ in 0..500 {
        let x: f64 = rng.gen_range(-180.0..180.0);
        let y: f64 = rng.gen_range(-90.0..90.0);
        let pop: f64 = rng.gen_range(0.0..1e7f64).round();
        let region = ["north", "south", "east", "west"][rng.gen_range(0..4)];
        csv.push_str(&format!("{x},{y},{pop},{region}\n"));
        rows.push((x, y, pop, region));
    }
    let t = msc_core::ingest_csv(csv.as_bytes(), "x", "y").unwrap();
    assert_eq!(t.row_count(), 500);
    let pop = t.column("pop").unwrap().as_real().unwrap();
    let region = t.column("region").unwrap().as_categorical().unwrap();
    for (i, (x, y, p, r)) in rows.iter().enumerate() {
        assert_eq!(t.x()[i], *x);
        assert_eq!(t.y()[i], *y);
        assert_eq!(pop[i], *p);
        assert_eq!(region.label_of(i), *r);
    }
}

proptest! {
    #[test]
    fn histogram_sums_to_row_count(values in prop::collection::vec(-1e6..1e6f64, 1..300), bins in 1usize..40) {
        let n = values.len();
        let t = PointTable::new("x", "y", vec![
            ("x".into(), Column::real(vec![0.0; n])),
            ("y".into(), Column::real(vec![0.0; n])),
            ("v".into(), Column::real(values.clone())),
        ]).unwrap();
        let counts = t.histogram("v", bins).unwrap();
        prop_assert_eq!(counts.len(), bins);
        prop_assert_eq!(counts.iter().sum::<u64>(), n as u64);
        let s = t.column_stats("v").unwrap();
        for &v in &values {
            prop_assert_eq!(bin_index(v, s.min, s.max, bins), oracle_bin(v, s.min, s.max, bins));
        }
    }

    #[test]
    fn categorical_codes_stay_in_range(values in prop::collection::vec("[a-e]{0,3}", 1..200)) {
        let cat = Categorical::from_values(&values);
        prop_assert!(cat.codes().iter().all(|&c| (c as usize) < cat.label_count()));
        prop_assert!(cat.labels().windows(2).all(|w| w[0] < w[1]));
        for (i, v) in values.iter().enumerate() {
            prop_assert_eq!(cat.label_of(i), v.as_str());
        }
        let n = values.len();
        let t = PointTable::new("x", "y", vec![
            ("x".into(), Column::real(vec![0.0; n])),
            ("y".into(), Column::real(vec![0.0; n])),
            ("c".into(), Column::Categorical(cat)),
        ]).unwrap();
        let total: u64 = t.category_frequencies("c").unwrap().iter().map(|(_, c)| c).sum();
        prop_assert_eq!(total, n as u64);
    }
}
