use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use trackmark_core::descriptor::{
    box_at, descriptor_at, interpolate_descriptor, nearest_descriptor_location, Descriptor,
};
use trackmark_core::geom::{box_from_extreme_points, sample_bilinear, BBox, GridMap, Point};
use trackmark_core::metrics::{generate_fixture, FixtureSpec, StylePreset};
use trackmark_core::session::{JumpKind, ManualClock, Session};
use trackmark_core::store::{DescriptorCache, SessionFile};
use trackmark_core::track::{compute_sparklines, refresh_track, smartjump_target, Annotation, TrackEntry};

fn unit() -> impl Strategy<Value = f64> {
    0.0f64..=1.0
}

fn point() -> impl Strategy<Value = Point<f64>> {
    (unit(), unit()).prop_map(|(x, y)| Point::new(x, y).unwrap())
}

fn bbox() -> impl Strategy<Value = BBox<f64>> {
    (unit(), unit(), unit(), unit()).prop_map(|(a, b, c, d)| BBox::new(a.min(b), c.min(d), a.max(b), c.max(d)).unwrap())
}

fn grid(max_side: usize, max_channels: usize) -> impl Strategy<Value = GridMap<f32>> {
    (1..=max_side, 1..=max_side, 1..=max_channels).prop_flat_map(|(h, w, c)| {
        prop::collection::vec(-10.0f32..10.0, h * w * c).prop_map(move |v| GridMap::new(h, w, c, v).unwrap())
    })
}

fn cache(frames: usize) -> impl Strategy<Value = DescriptorCache> {
    (1..=6usize, 1..=6usize, 1..=4usize).prop_flat_map(move |(h, w, c)| {
        let desc = prop::collection::vec(prop::collection::vec(-1.0f32..1.0, h * w * c), frames);
        let boxes = prop::collection::vec(prop::collection::vec(-0.05f32..0.3, h * w * 4), frames);
        (desc, boxes).prop_map(move |(d, b)| {
            DescriptorCache::new(
                d.into_iter().map(|v| GridMap::new(h, w, c, v).unwrap()).collect(),
                b.into_iter().map(|v| GridMap::new(h, w, 4, v).unwrap()).collect(),
                "prop",
            )
            .unwrap()
        })
    })
}

proptest! {
    #[test]
    fn iou_symmetric_and_bounded(a in bbox(), b in bbox()) {
        let ab = a.iou(&b);
        prop_assert_eq!(ab, b.iou(&a));
        prop_assert!((0.0..=1.0).contains(&ab));
        if a.area() > 0.0 {
            prop_assert_eq!(a.iou(&a), 1.0);
        }
    }

    #[test]
    fn extreme_box_ignores_click_order(pts in prop::array::uniform4(point()), perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
        let shuffled: Vec<_> = perm.iter().map(|&i| pts[i]).collect();
        prop_assert_eq!(box_from_extreme_points(&pts).unwrap(), box_from_extreme_points(&shuffled).unwrap());
    }

    #[test]
    fn bilinear_stays_within_neighbours(map in grid(6, 3), p in point()) {
        let got: Vec<f64> = sample_bilinear(&map, &p).unwrap();
        let (h, w) = (map.height(), map.width());
        let u = (p.x * w as f64 - 0.5).clamp(0.0, (w - 1) as f64);
        let v = (p.y * h as f64 - 0.5).clamp(0.0, (h - 1) as f64);
        let (c0, r0) = (u.floor() as usize, v.floor() as usize);
        let cols = [c0, (c0 + 1).min(w - 1)];
        let rows = [r0, (r0 + 1).min(h - 1)];
        for (k, g) in got.iter().enumerate() {
            let corner = |r: usize, c: usize| f64::from(map.cell(r, c)[k]);
            let vals = [corner(rows[0], cols[0]), corner(rows[0], cols[1]), corner(rows[1], cols[0]), corner(rows[1], cols[1])];
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(*g >= lo && *g <= hi, "{} not in [{}, {}]", g, lo, hi);
        }
    }

    #[test]
    fn interpolation_stays_between_endpoints(
        a in prop::collection::vec(-5.0f64..5.0, 6),
        b in prop::collection::vec(-5.0f64..5.0, 6),
        span in 2usize..400,
        at in 0.0f64..1.0,
    ) {
        let tau = 1 + ((span - 2) as f64 * at) as usize;
        let d = interpolate_descriptor(&Descriptor(a.clone()), &Descriptor(b.clone()), 0, span, tau).unwrap();
        for ((v, x), y) in d.0.iter().zip(&a).zip(&b) {
            prop_assert!(*v >= x.min(*y) && *v <= x.max(*y));
        }
    }

    #[test]
    fn nearest_distance_is_minimal(map in grid(5, 4), seed in any::<u64>()) {
        let target: Vec<f64> = (0..map.channels()).map(|k| ((seed >> (k % 60)) & 0xff) as f64 / 25.0 - 5.0).collect();
        let (_, dist) = nearest_descriptor_location(&map, &Descriptor(target.clone())).unwrap();
        for i in 0..map.cell_count() {
            let cell: Vec<f64> = map.cell_by_index(i).iter().map(|&v| f64::from(v)).collect();
            let d = Descriptor(cell).distance(&Descriptor(target.clone())).unwrap();
            prop_assert!(dist <= d);
        }
    }

    #[test]
    fn unique_cell_descriptor_finds_itself(map in grid(5, 4), r in 0usize..5, c in 0usize..5) {
        let (r, c) = (r % map.height(), c % map.width());
        let stored = map.cell(r, c);
        let unique = (0..map.cell_count()).filter(|&i| map.cell_by_index(i) == stored).count() == 1;
        prop_assume!(unique);
        let center = map.cell_center(r, c);
        let d: Descriptor<f64> = descriptor_at(&map, &center).unwrap();
        let (p, dist) = nearest_descriptor_location(&map, &d).unwrap();
        prop_assert_eq!(p, center);
        prop_assert_eq!(dist, 0.0);
    }

    #[test]
    fn predicted_box_contains_query(offsets in prop::array::uniform4(-0.2f32..0.6), p in point()) {
        let map = GridMap::filled(3, 3, &offsets).unwrap();
        prop_assert!(box_at(&map, &p).unwrap().contains(&p));
    }

    #[test]
    fn refresh_properties(cache in cache(8), picks in prop::collection::btree_map(0usize..8, point(), 1..4), extra in (0usize..8, point())) {
        let anns: Vec<Annotation<f64>> = picks.iter().map(|(&f, &p)| Annotation::click(f, p, 0)).collect();
        let a = refresh_track(&cache, &anns).unwrap();
        let b = refresh_track(&cache, &anns).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), 8);
        for ann in &anns {
            prop_assert_eq!(a[ann.frame].point, ann.point);
        }
        if !picks.contains_key(&extra.0) {
            let mut more = anns.clone();
            more.push(Annotation::click(extra.0, extra.1, 0));
            let c = refresh_track(&cache, &more).unwrap();
            for ann in &anns {
                prop_assert_eq!(&c[ann.frame], &a[ann.frame]);
            }
        }
        let s = compute_sparklines(&a).unwrap();
        for v in s.location_delta.iter() {
            prop_assert!(*v >= 0.0 && *v <= 2f64.sqrt());
        }
        prop_assert!(s.area_delta.iter().all(|v| *v >= 0.0));
        let annotated: BTreeSet<usize> = picks.keys().copied().collect();
        if let Some(f) = smartjump_target(&a, &annotated) {
            prop_assert!(!annotated.contains(&f));
        }
    }

    #[test]
    fn cache_bytes_roundtrip(cache in cache(3)) {
        let bytes = cache.to_bytes();
        let back = DescriptorCache::from_bytes(&bytes, "prop").unwrap();
        prop_assert_eq!(&back, &cache);
        prop_assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn session_roundtrip_keeps_order_and_time(clicks in prop::collection::vec((0usize..30, point(), 0u64..5000), 0..40)) {
        let fixture = generate_fixture(&FixtureSpec::linear(30, 4, 2), 1).unwrap();
        let mut s = Session::with_clock(StylePreset::Autotrack.style(), Arc::clone(&fixture.cache), "f.dtc", 3, ManualClock::default());
        for (frame, p, dt) in clicks {
            s.clock_mut().advance(dt);
            s.click(frame, p).unwrap();
            if dt % 3 == 0 {
                s.jump(JumpKind::Step { delta: -1 }).unwrap();
            }
        }
        let file = s.into_file();
        let back = SessionFile::from_json(&file.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, file);
    }
}

#[test]
fn track_entries_serialize_with_box_key() {
    let e = TrackEntry {
        frame: 0,
        point: Point::new(0.5, 0.5).unwrap(),
        bbox: BBox::new(0.4, 0.4, 0.6, 0.6).unwrap(),
        provenance: trackmark_core::track::Provenance::Predicted,
        match_distance: 0.25,
    };
    let v = serde_json::to_value(&e).unwrap();
    assert_eq!(v["box"]["x_min"], 0.4);
    assert_eq!(v["provenance"], "predicted");
}
