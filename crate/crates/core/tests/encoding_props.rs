use msc_core::data::{Categorical, Column, PointTable};
use msc_core::encoding::{
    default_encoding, resolve_size, ColorEncoding, ColorMap, ContinuousMap, NormKind, Normalizer, Rgba,
    SizeEncoding, SizeMap, OKABE_ITO,
};
use proptest::prelude::*;

fn arb_normalizer() -> impl Strategy<Value = Normalizer> {
    (0usize..3, 1e-3..1e3f64, 1e-3..1e4f64, 0.01..100.0f64).prop_map(|(k, lo, span, width)| match k {
        0 => Normalizer::linear(lo - 500.0, lo - 500.0 + span).unwrap(),
        1 => Normalizer::log(lo, lo + span).unwrap(),
        _ => Normalizer::asinh(lo - 500.0, lo - 500.0 + span, width).unwrap(),
    })
}

proptest! {
    #[test]
    fn normalize_is_monotone_and_clamped(n in arb_normalizer(), a in -1e5..1e5f64, b in -1e5..1e5f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (tl, th) = (n.normalize(lo), n.normalize(hi));
        prop_assert!((0.0..=1.0).contains(&tl) && (0.0..=1.0).contains(&th));
        prop_assert!(tl <= th);
    }

    #[test]
    fn normalize_maps_endpoints(n in arb_normalizer()) {
        let (lo, hi) = n.domain();
        prop_assert!(n.normalize(lo).abs() <= 1e-12);
        prop_assert!((n.normalize(hi) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn log_midpoint_over_random_domains(lo_exp in -6.0..6.0f64, span_exp in 0.1..8.0f64) {
        let lo = 10f64.powf(lo_exp);
        let hi = 10f64.powf(lo_exp + span_exp);
        let n = Normalizer::log(lo, hi).unwrap();
        let mid = (lo * hi).sqrt();
        prop_assert!((n.normalize(mid) - 0.5).abs() <= 1e-9);
    }

    #[test]
    fn reverse_equals_forward_at_complement(t in 0.0..=1.0f64) {
        for table in [ContinuousMap::Viridis, ContinuousMap::Magma] {
            let fwd = ColorMap::continuous(table);
            let rev = ColorMap::continuous(table).reversed();
            prop_assert_eq!(rev.color_at(t), fwd.color_at(1.0 - t));
        }
    }

    #[test]
    fn resolve_size_is_bounded_and_monotone(min in 0.5..10.0f64, extra in 0.0..20.0f64, steps in 1u32..40, a in -2.0..3.0f64, b in -2.0..3.0f64) {
        let map = SizeMap::new(min, min + extra, steps).unwrap();
        let spec = SizeEncoding::Column {
            column: "v".into(),
            normalizer: Normalizer::linear(0.0, 1.0).unwrap(),
            map,
        };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (sl, sh) = (resolve_size(&spec, lo), resolve_size(&spec, hi));
        prop_assert!(sl >= min && sh <= min + extra);
        prop_assert!(sl <= sh);
    }

    #[test]
    fn categorical_colors_ignore_row_order(values in prop::collection::vec(0u8..12, 1..100), seed in any::<u64>()) {
        let labels: Vec<String> = values.iter().map(|v| format!("k{v}")).collect();
        let mut shuffled = labels.clone();
        // Deterministic shuffle derived from the seed.
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let legend = |vals: &[String]| {
            let n = vals.len();
            let t = PointTable::new("x", "y", vec![
                ("x".into(), Column::real(vec![0.0; n])),
                ("y".into(), Column::real(vec![0.0; n])),
                ("c".into(), Column::Categorical(Categorical::from_values(vals))),
            ]).unwrap();
            let enc = default_encoding(&t, "c").unwrap();
            let mut by_row: Vec<(String, Rgba)> = (0..n)
                .map(|r| (vals[r].clone(), enc.color_of_row(&t, r).unwrap()))
                .collect();
            by_row.sort_by(|a, b| a.0.cmp(&b.0));
            by_row.dedup();
            (enc.legend(&t).unwrap(), by_row)
        };
        let (la, ra) = legend(&labels);
        let (lb, rb) = legend(&shuffled);
        prop_assert_eq!(&la, &lb);
        prop_assert_eq!(&ra, &la);
        prop_assert_eq!(ra, rb);
    }
}

#[test]
fn seven_categories_get_okabe_ito_in_sorted_order() {
    let continents = ["Europe", "Asia", "Africa", "Oceania", "North America", "South America", "Antarctica"];
    let values: Vec<&str> = (0..70).map(|i| continents[i * 3 % 7]).collect();
    let n = values.len();
    let t = PointTable::new("x", "y", vec![
        ("x".into(), Column::real(vec![0.0; n])),
        ("y".into(), Column::real(vec![0.0; n])),
        ("Continent".into(), Column::Categorical(Categorical::from_values(&values))),
    ])
    .unwrap();
    let enc = default_encoding(&t, "Continent").unwrap();
    let mut sorted = continents.to_vec();
    sorted.sort();
    let legend = enc.legend(&t).unwrap();
    for (i, (label, color)) in legend.iter().enumerate() {
        assert_eq!(label, sorted[i]);
        assert_eq!(*color, OKABE_ITO[i]);
    }
    assert!(matches!(enc, ColorEncoding::Categorical { cycling: false, .. }));
}

#[test]
fn numeric_defaults_to_linear_viridis() {
    let pop = vec![10.0, 5000.0, 2e7];
    let t = PointTable::new("x", "y", vec![
        ("x".into(), Column::real(vec![0.0; 3])),
        ("y".into(), Column::real(vec![0.0; 3])),
        ("Population".into(), Column::real(pop)),
    ])
    .unwrap();
    match default_encoding(&t, "Population").unwrap() {
        ColorEncoding::Continuous { normalizer, map, .. } => {
            assert_eq!(normalizer.kind(), NormKind::Linear);
            assert_eq!(normalizer.domain(), (10.0, 2e7));
            assert_eq!(map, ColorMap::continuous(ContinuousMap::Viridis));
        }
        other => panic!("unexpected {other:?}"),
    }
}
