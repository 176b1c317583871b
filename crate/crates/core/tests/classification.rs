use std::collections::BTreeSet;

use bootstrap_lab::{
    classify, closure, difficulty, stable_set, Budget, DifficultyValue, Geometry, Kind,
    LatticeState, RationalDirection, Rect, Site, UpdateFamily,
};

fn fam(name: &str) -> UpdateFamily {
    UpdateFamily::by_name(name).unwrap()
}

fn dir(a: i64, b: i64) -> RationalDirection {
    RationalDirection::new(a, b).unwrap()
}

fn sample_directions() -> Vec<RationalDirection> {
    let mut v = Vec::new();
    for a in -7i64..=7 {
        for b in -7i64..=7 {
            if (a, b) != (0, 0) {
                v.push(dir(a, b));
            }
        }
    }
    v.sort();
    v.dedup();
    v
}

#[test]
fn duarte_difficulties() {
    let d = fam("duarte");
    let e = difficulty(&d, dir(1, 0), Budget::default());
    assert_eq!(e.value, DifficultyValue::Finite(1));
    assert_eq!(e.plus, DifficultyValue::Finite(1));
    assert_eq!(e.minus, DifficultyValue::Finite(1));
    assert_eq!(e.witness, Some(vec![Site::new(0, 0)]));
    assert_eq!(
        difficulty(&d, dir(0, 1), Budget::default()).value,
        DifficultyValue::Infinite
    );
    assert_eq!(
        difficulty(&d, dir(-1, 0), Budget::default()).value,
        DifficultyValue::Infinite
    );
    assert_eq!(
        difficulty(&d, dir(1, 1), Budget::default()).value,
        DifficultyValue::Finite(0)
    );
}

#[test]
fn duarte_witness_replays_along_the_line() {
    // Left half-plane plus the origin fills the whole column x = 0 in a plain window.
    let r = 12;
    let window = Rect::from_corners(-3 * r, -3 * r, 3 * r, 3 * r);
    let st =
        LatticeState::from_fn(Geometry::Window(window), |s| s.x < 0 || s == Site::ORIGIN).unwrap();
    let c = closure(&st, &fam("duarte"));
    for y in -r..=r {
        assert!(c.contains(Site::new(0, y)), "(0, {y})");
    }
    let without = LatticeState::from_fn(Geometry::Window(window), |s| s.x < 0).unwrap();
    assert!(!closure(&without, &fam("duarte")).contains(Site::new(0, 0)));
}

#[test]
fn two_neighbour_difficulty_is_one() {
    for u in [dir(1, 0), dir(0, 1), dir(-1, 0), dir(0, -1)] {
        assert_eq!(
            difficulty(&fam("r2"), u, Budget::default()).value,
            DifficultyValue::Finite(1)
        );
    }
}

#[test]
fn exhausted_budget_is_reported_as_a_lower_bound() {
    let b = Budget {
        max_helpers: 0,
        window_radius: 12,
    };
    assert_eq!(
        difficulty(&fam("duarte"), dir(1, 0), b).value,
        DifficultyValue::UnknownAtLeast { at_least: 1 }
    );
    let c = classify(&fam("duarte"), b);
    assert_eq!(c.kind, Kind::Critical);
    assert!(!c.family_difficulty.is_finite());
}

#[test]
fn neighbour_family_stable_sets() {
    assert!(stable_set(&fam("r1")).is_empty());
    let s2 = stable_set(&fam("r2"));
    assert!(s2.arcs.is_empty());
    let pts: BTreeSet<RationalDirection> = s2.points.iter().copied().collect();
    let want: BTreeSet<RationalDirection> = [dir(1, 0), dir(0, 1), dir(-1, 0), dir(0, -1)].into();
    assert_eq!(pts, want);
    let s3 = stable_set(&fam("r3"));
    assert!(s3.full_circle || !s3.arcs.is_empty());
}

/// The eight symmetries of the square acting on a site.
type Symmetry = fn(i64, i64) -> (i64, i64);

fn symmetries() -> Vec<Symmetry> {
    vec![
        |x, y| (x, y),
        |x, y| (-y, x),
        |x, y| (-x, -y),
        |x, y| (y, -x),
        |x, y| (-x, y),
        |x, y| (x, -y),
        |x, y| (y, x),
        |x, y| (-y, -x),
    ]
}

#[test]
fn neighbour_stable_sets_are_symmetric() {
    for name in ["r1", "r2", "r3", "r4"] {
        let f = fam(name);
        let s = stable_set(&f);
        for g in symmetries() {
            for u in sample_directions() {
                let (a, b) = g(u.a(), u.b());
                assert_eq!(s.contains(u), s.contains(dir(a, b)), "{name} {u:?}");
            }
        }
    }
}

#[test]
fn transformed_families_have_transformed_stable_sets() {
    let f = fam("duarte");
    let s = stable_set(&f);
    for g in symmetries() {
        let rules: Vec<Vec<(i64, i64)>> = f
            .rules()
            .iter()
            .map(|r| r.offsets().iter().map(|o| g(o.x, o.y)).collect())
            .collect();
        let refs: Vec<&[(i64, i64)]> = rules.iter().map(Vec::as_slice).collect();
        let t = stable_set(&UpdateFamily::from_offsets(None, &refs).unwrap());
        for u in sample_directions() {
            let (a, b) = g(u.a(), u.b());
            assert_eq!(s.contains(u), t.contains(dir(a, b)));
        }
    }
}

#[test]
fn report_json_shape() {
    let f = fam("duarte");
    let r = classify(&f, Budget::default()).report(&f);
    let v = serde_json::to_value(&r).unwrap();
    assert_eq!(v["kind"], "critical");
    assert_eq!(v["balance"], "unbalanced");
    assert_eq!(v["alpha"], 1);
    assert_eq!(
        v["stable_set"]["arcs"],
        serde_json::json!([[[0, 1], [0, -1]]])
    );
    assert_eq!(v["stable_set"]["points"], serde_json::json!([[1, 0]]));
    assert_eq!(v["budget"]["max_helpers"], 3);
    let inf = serde_json::to_value(DifficultyValue::Infinite).unwrap();
    assert_eq!(inf, "infinite");
    let back: DifficultyValue = serde_json::from_value(inf).unwrap();
    assert_eq!(back, DifficultyValue::Infinite);
}
