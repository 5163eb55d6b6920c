mod common;

use common::*;
use msc_core::index::{Extent, SpatialIndex};
use msc_core::selection::SelectionSet;
use msc_core::view::{
    dynamic_opacity, fit_camera_to_points, Camera, ComposeGroup, EventKind, SyncFlags, ViewEvent,
    ViewportPx, MIN_ALPHA,
};
use msc_core::PointTable;
use proptest::prelude::*;
use rand::Rng;

fn all_flags() -> impl Iterator<Item = SyncFlags> {
    (0u8..16).map(|b| SyncFlags {
        sync_selection: b & 1 != 0,
        sync_hover: b & 2 != 0,
        sync_view: b & 4 != 0,
        zoom_on_selection: b & 8 != 0,
    })
}

fn random_event(rng: &mut impl Rng, t: &PointTable, ids: &[&str]) -> ViewEvent {
    let origin = ids[rng.gen_range(0..ids.len())].to_owned();
    let kind = match rng.gen_range(0..3) {
        0 => {
            let k = rng.gen_range(0..20);
            let raw: Vec<u32> = (0..k).map(|_| rng.gen_range(0..t.row_count() as u32)).collect();
            EventKind::Selection {
                selection: SelectionSet::from_unsorted(raw),
            }
        }
        1 => {
            let x = rng.gen_range(-1.0..1.0);
            let y = rng.gen_range(-1.0..1.0);
            let camera = Camera::new(
                Extent::new(x, x + rng.gen_range(0.01..2.0), y, y + rng.gen_range(0.01..2.0)).unwrap(),
            )
            .unwrap();
            EventKind::Camera { camera }
        }
        _ => EventKind::Hover {
            row: rng.gen_bool(0.8).then(|| rng.gen_range(0..t.row_count() as u32)),
        },
    };
    ViewEvent { origin, kind }
}

fn aspect_error(cam: &Camera, vp: ViewportPx) -> f64 {
    let e = cam.extent();
    (e.width() / e.height() - vp.aspect()).abs() / vp.aspect()
}

#[test]
fn random_event_sequences_preserve_sync_invariants() {
    let mut rng = rng(30);
    let t = random_table(&mut rng, 500);
    let ids = ["a", "b", "c", "d"];
    let vps = [(400, 400), (800, 300), (250, 600), (1, 1)];
    for flags in all_flags() {
        let views = ids
            .iter()
            .zip(vps)
            .map(|(id, (w, h))| (id.to_string(), ViewportPx::new(w, h).unwrap()))
            .collect();
        let mut group = ComposeGroup::new(&t, views, flags).unwrap();
        for _ in 0..1000 {
            let ev = random_event(&mut rng, &t, &ids);
            let (next, deltas) = group.apply_event(&t, &ev).unwrap();
            next.check_invariants().unwrap_or_else(|e| panic!("{flags:?}: {e}"));
            if let EventKind::Selection { selection } = &ev.kind {
                if flags.zoom_on_selection && !selection.is_empty() {
                    for v in next.views() {
                        if v.selection != *selection {
                            continue;
                        }
                        for &r in selection.indices() {
                            assert!(v.camera.extent().contains(t.x()[r as usize], t.y()[r as usize]));
                        }
                        if !flags.sync_view {
                            assert!(aspect_error(&v.camera, v.viewport) < 1e-9);
                        }
                    }
                }
                // Idempotence.
                let (again, _) = next.apply_event(&t, &ev).unwrap();
                assert_eq!(again, next);
            }
            if !(flags.sync_selection || flags.sync_view || flags.sync_hover || flags.zoom_on_selection) {
                assert!(deltas.is_empty());
            }
            assert!(deltas.iter().all(|(id, _)| *id != ev.origin || flags.zoom_on_selection));
            group = next;
        }
    }
}

#[test]
fn opacity_is_non_increasing_over_sweeps() {
    let mut rng = rng(31);
    for _ in 0..200 {
        let vp = ViewportPx::new(rng.gen_range(1..2000), rng.gen_range(1..2000)).unwrap();
        let size = rng.gen_range(0.5..20.0);
        let mut prev = 1.0;
        let mut n = 0usize;
        while n < 50_000_000 {
            let a = dynamic_opacity(n, size, vp);
            assert!(a <= prev && (MIN_ALPHA..=1.0).contains(&a));
            let rho = n as f64 * size * size / (vp.width() as f64 * vp.height() as f64);
            assert_eq!(a == 1.0, rho <= 1.0);
            prev = a;
            n = n * 2 + rng.gen_range(1..100);
        }
    }
}

#[test]
fn zooming_in_never_lowers_opacity() {
    let mut rng = rng(32);
    let t = random_table(&mut rng, 20_000);
    let idx = SpatialIndex::build(&t);
    let vp = ViewportPx::new(300, 300).unwrap();
    for _ in 0..100 {
        let outer = random_extent(&mut rng);
        let f = rng.gen_range(0.0..0.5);
        let inner = Extent::new(
            outer.x_min + f * outer.width(),
            outer.x_max - f * outer.width(),
            outer.y_min + f * outer.height(),
            outer.y_max - f * outer.height(),
        )
        .unwrap();
        let a_out = dynamic_opacity(idx.count_extent(&outer), 4.0, vp);
        let a_in = dynamic_opacity(idx.count_extent(&inner), 4.0, vp);
        assert!(a_in >= a_out);
    }
}

proptest! {
    #[test]
    fn fit_contains_selection_with_viewport_aspect(
        seed in any::<u64>(),
        k in 1usize..50,
        w in 1u32..3000,
        h in 1u32..3000,
        padding in 0.0..0.5f64,
    ) {
        let mut rng = rng(seed);
        let t = random_table(&mut rng, 200);
        let raw: Vec<u32> = (0..k).map(|_| rng.gen_range(0..200)).collect();
        let sel = SelectionSet::from_unsorted(raw);
        let vp = ViewportPx::new(w, h).unwrap();
        let cam = fit_camera_to_points(&t, &sel, vp, padding).unwrap();
        for &r in sel.indices() {
            prop_assert!(cam.extent().contains(t.x()[r as usize], t.y()[r as usize]));
        }
        prop_assert!(aspect_error(&cam, vp) < 1e-9);
    }
}
