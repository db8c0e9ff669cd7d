use nearfield::decision::{
    decide, Action, ActionTable, DetectionEvent, ObjectCategory, SizeClass, LARGE_OBJECT_MM,
};
use proptest::prelude::*;

use Action::*;
use ObjectCategory::*;

// The reference action table transcribed cell by cell; "---" cells read as the row action.
fn reference_action(cat: ObjectCategory, size: SizeClass) -> Action {
    use SizeClass::*;
    match (cat, size) {
        (Human, _) => Stop,
        (Tools, Small) => Continue,
        (Tools, Large) => StopOrReroute,
        (Materials, Small) => Continue,
        (Materials, Large) => Stop,
        (Parts, _) => Stop,
        (Vehicles, _) => StopOrReroute,
        (Environment, _) => Stop,
        (SafetyPpe, _) => StopOrReroute,
        (Unknown, _) => Stop,
    }
}

fn height_for(size: SizeClass) -> f64 {
    match size {
        SizeClass::Small => 20.0,
        SizeClass::Large => 80.0,
    }
}

fn event(tier: u8, cat: ObjectCategory, size: SizeClass, confidence: f64) -> DetectionEvent {
    match tier {
        1 => DetectionEvent::presence('C', 0),
        2 => DetectionEvent::sized('C', height_for(size), 0),
        _ => DetectionEvent::classified('C', cat, confidence, Some(height_for(size)), 0),
    }
}

#[test]
fn cross_product_matches_table_one() {
    let table = ActionTable::default();
    let mut n = 0;
    for tier in 1..=3u8 {
        for cat in ObjectCategory::ALL {
            for size in SizeClass::ALL {
                for conf in [0.1, 0.49, 0.5, 0.99] {
                    let got = decide(&event(tier, cat, size, conf), &table).unwrap();
                    let size_rule = match size {
                        SizeClass::Small => Continue,
                        SizeClass::Large => Stop,
                    };
                    let want = match tier {
                        1 => Stop,
                        2 => size_rule,
                        _ if cat == Human => Stop,
                        _ if conf < 0.5 => size_rule,
                        _ => reference_action(cat, size),
                    };
                    assert_eq!(got, want, "tier {tier} {cat} {size:?} conf {conf}");
                    n += 1;
                }
            }
        }
    }
    assert_eq!(n, 3 * 8 * 2 * 4);
}

#[test]
fn size_boundary() {
    let t = ActionTable::default();
    let at = |h| decide(&DetectionEvent::classified('A', Tools, 0.9, Some(h), 0), &t).unwrap();
    assert_eq!(at(LARGE_OBJECT_MM), StopOrReroute);
    assert_eq!(at(49.9), Continue);
    assert_eq!(at(0.0), Continue);
}

fn any_category() -> impl Strategy<Value = ObjectCategory> {
    prop::sample::select(ObjectCategory::ALL.to_vec())
}

proptest! {
    #[test]
    fn human_always_stops(
        tier in 1u8..=3,
        h in prop::option::of(0.0f64..500.0),
        conf in prop::option::of(0.0f64..=1.0),
        thr in 0.0f64..=1.0,
    ) {
        let table = ActionTable::default().with_threshold(thr).unwrap();
        let ev = DetectionEvent {
            tier,
            zone: 'A',
            height_mm: h.or(if tier == 2 { Some(10.0) } else { None }),
            category: Some(Human),
            confidence: conf.or(if tier == 3 { Some(0.0) } else { None }),
            ts_ms: 0,
        };
        prop_assert_eq!(decide(&ev, &table).unwrap(), Stop);
    }

    #[test]
    fn large_never_weaker_than_small(
        tier in 1u8..=3,
        cat in any_category(),
        conf in 0.0f64..=1.0,
        small in 0.0f64..LARGE_OBJECT_MM,
        large in LARGE_OBJECT_MM..1000.0,
    ) {
        let table = ActionTable::default();
        let mk = |h| match tier {
            1 => DetectionEvent::presence('D', 0),
            2 => DetectionEvent::sized('D', h, 0),
            _ => DetectionEvent::classified('D', cat, conf, Some(h), 0),
        };
        let (s, l) = (decide(&mk(small), &table).unwrap(), decide(&mk(large), &table).unwrap());
        prop_assert!(l >= s, "{cat}: small {s:?} large {l:?}");
    }

    #[test]
    fn low_confidence_degrades_to_tier_two(
        cat in any_category().prop_filter("human dominates", |c| *c != Human),
        h in 0.0f64..500.0,
        thr in 0.01f64..=1.0,
        frac in 0.0f64..1.0,
    ) {
        let table = ActionTable::default().with_threshold(thr).unwrap();
        let conf = thr * frac;
        prop_assume!(conf < thr);
        let t3 = DetectionEvent::classified('G', cat, conf, Some(h), 5);
        let t2 = DetectionEvent::sized('G', h, 5);
        prop_assert_eq!(decide(&t3, &table).unwrap(), decide(&t2, &table).unwrap());
    }
}
