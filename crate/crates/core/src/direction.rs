//! Rational directions on the unit circle and the exact stable set of an update family.
//!
//! No angle is ever stored as a float. Directions are compared by half-plane and
//! cross-product sign, always in `i128`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Site, UpdateFamily};

/// A direction `(a, b) / |(a, b)|` with `(a, b)` primitive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(i64, i64)", into = "(i64, i64)")]
pub struct RationalDirection {
    a: i64,
    b: i64,
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl RationalDirection {
    /// Canonicalises any nonzero vector to its primitive multiple.
    pub fn new(a: i64, b: i64) -> Result<Self> {
        if a == 0 && b == 0 {
            return Err(Error::InvalidParameter("direction (0,0)".into()));
        }
        let g = gcd(a, b);
        Ok(RationalDirection { a: a / g, b: b / g })
    }

    pub(crate) fn of(a: i64, b: i64) -> Self {
        RationalDirection::new(a, b).expect("nonzero direction")
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn b(&self) -> i64 {
        self.b
    }

    pub fn neg(self) -> Self {
        RationalDirection {
            a: -self.a,
            b: -self.b,
        }
    }

    /// Rotation by a quarter turn counterclockwise.
    pub fn perp(self) -> Self {
        RationalDirection {
            a: -self.b,
            b: self.a,
        }
    }

    pub fn dot(self, s: Site) -> i128 {
        self.a as i128 * s.x as i128 + self.b as i128 * s.y as i128
    }

    pub fn cross(self, other: RationalDirection) -> i128 {
        self.a as i128 * other.b as i128 - self.b as i128 * other.a as i128
    }

    pub fn dot_dir(self, other: RationalDirection) -> i128 {
        self.a as i128 * other.a as i128 + self.b as i128 * other.b as i128
    }

    /// Order by angle in `[0, 2pi)` measured from `(1, 0)`.
    pub fn angle_cmp(&self, other: &Self) -> Ordering {
        angle_cmp_vec(
            (self.a as i128, self.b as i128),
            (other.a as i128, other.b as i128),
        )
    }

    /// Order by counterclockwise angle from `base`, in `[0, 2pi)`.
    pub fn angle_cmp_from(base: Self, u: Self, v: Self) -> Ordering {
        angle_cmp_vec(base.relative(u), base.relative(v))
    }

    /// `u` expressed in the frame whose first axis is `self` (scaled, exact).
    fn relative(self, u: Self) -> (i128, i128) {
        (self.dot_dir(u), self.cross(u))
    }

    /// A direction strictly inside the counterclockwise open arc from `self` to `next`
    /// (the full turn when they coincide).
    pub fn between(self, next: Self) -> Self {
        let c = self.cross(next);
        if self == next {
            self.neg()
        } else if c > 0 {
            RationalDirection::of(self.a + next.a, self.b + next.b)
        } else if c < 0 {
            RationalDirection::of(-(self.a + next.a), -(self.b + next.b))
        } else {
            self.perp()
        }
    }
}

fn half(v: (i128, i128)) -> u8 {
    if v.1 > 0 || (v.1 == 0 && v.0 > 0) {
        0
    } else {
        1
    }
}

fn angle_cmp_vec(u: (i128, i128), v: (i128, i128)) -> Ordering {
    half(u).cmp(&half(v)).then_with(|| {
        let c = u.0 * v.1 - u.1 * v.0;
        0.cmp(&c)
    })
}

impl TryFrom<(i64, i64)> for RationalDirection {
    type Error = Error;
    fn try_from((a, b): (i64, i64)) -> Result<Self> {
        RationalDirection::new(a, b)
    }
}

impl From<RationalDirection> for (i64, i64) {
    fn from(d: RationalDirection) -> Self {
        (d.a, d.b)
    }
}

impl fmt::Display for RationalDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

impl PartialOrd for RationalDirection {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RationalDirection {
    fn cmp(&self, other: &Self) -> Ordering {
        self.angle_cmp(other)
    }
}

/// Closed arc swept counterclockwise from `start` to `end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "[RationalDirection; 2]", from = "[RationalDirection; 2]")]
pub struct Arc {
    pub start: RationalDirection,
    pub end: RationalDirection,
}

impl From<Arc> for [RationalDirection; 2] {
    fn from(a: Arc) -> Self {
        [a.start, a.end]
    }
}

impl From<[RationalDirection; 2]> for Arc {
    fn from([start, end]: [RationalDirection; 2]) -> Self {
        Arc { start, end }
    }
}

impl Arc {
    pub fn contains(&self, u: RationalDirection) -> bool {
        RationalDirection::angle_cmp_from(self.start, u, self.end) != Ordering::Greater
    }

    /// True when `u` is one of the two endpoints.
    pub fn is_endpoint(&self, u: RationalDirection) -> bool {
        u == self.start || u == self.end
    }
}

/// The stable set as disjoint closed arcs plus isolated points, both sorted by angle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StableSetDescription {
    pub arcs: Vec<Arc>,
    pub points: Vec<RationalDirection>,
    /// Every direction is stable.
    #[serde(default)]
    pub full_circle: bool,
}

impl StableSetDescription {
    pub fn contains(&self, u: RationalDirection) -> bool {
        self.full_circle || self.points.contains(&u) || self.arcs.iter().any(|a| a.contains(u))
    }

    pub fn in_arc(&self, u: RationalDirection) -> bool {
        self.full_circle || self.arcs.iter().any(|a| a.contains(u))
    }

    pub fn is_empty(&self) -> bool {
        !self.full_circle && self.arcs.is_empty() && self.points.is_empty()
    }

    /// Arc endpoints and isolated points, with antipodes, sorted and deduplicated.
    pub fn critical_angles(&self) -> Vec<RationalDirection> {
        let mut q: Vec<RationalDirection> = Vec::new();
        for a in &self.arcs {
            q.extend([a.start, a.end]);
        }
        q.extend(self.points.iter().copied());
        let anti: Vec<_> = q.iter().map(|d| d.neg()).collect();
        q.extend(anti);
        q.sort();
        q.dedup();
        q
    }
}

/// `u` is stable iff no rule lies entirely inside the open half-plane `<x, u> < 0`.
pub fn is_stable(family: &UpdateFamily, u: RationalDirection) -> bool {
    !family
        .rules()
        .iter()
        .any(|r| r.offsets().iter().all(|&x| u.dot(x) < 0))
}

/// Directions where the stability of some rule can change: the normals of rule sites.
fn critical_directions(family: &UpdateFamily) -> Vec<RationalDirection> {
    let mut out = Vec::new();
    for r in family.rules() {
        for s in r.offsets() {
            out.push(RationalDirection::of(-s.y, s.x));
            out.push(RationalDirection::of(s.y, -s.x));
        }
    }
    out.sort();
    out.dedup();
    out
}

pub fn stable_set(family: &UpdateFamily) -> StableSetDescription {
    let crit = critical_directions(family);
    let m = crit.len();
    let point: Vec<bool> = crit.iter().map(|&c| is_stable(family, c)).collect();
    // gap[i] is the open arc from crit[i] to crit[i + 1].
    let gap: Vec<bool> = (0..m)
        .map(|i| is_stable(family, crit[i].between(crit[(i + 1) % m])))
        .collect();

    if point.iter().all(|&p| p) && gap.iter().all(|&g| g) {
        return StableSetDescription {
            arcs: Vec::new(),
            points: Vec::new(),
            full_circle: true,
        };
    }

    let mut arcs = Vec::new();
    let mut points = Vec::new();
    for i in 0..m {
        let prev = gap[(i + m - 1) % m];
        if point[i] && !prev && !gap[i] {
            points.push(crit[i]);
        }
        if gap[i] && !prev {
            let mut j = i;
            while gap[j] {
                j = (j + 1) % m;
            }
            arcs.push(Arc {
                start: crit[i],
                end: crit[j],
            });
        }
    }
    arcs.sort_by_key(|x| x.start);
    StableSetDescription {
        arcs,
        points,
        full_circle: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(a: i64, b: i64) -> RationalDirection {
        RationalDirection::of(a, b)
    }

    #[test]
    fn canonical_form() {
        assert_eq!(d(4, -6), d(2, -3));
        assert!(RationalDirection::new(0, 0).is_err());
        assert_eq!(d(0, 5), d(0, 1));
    }

    #[test]
    fn angle_order() {
        let mut v = vec![d(0, -1), d(-1, 0), d(1, 1), d(1, 0), d(0, 1), d(1, -1)];
        v.sort();
        assert_eq!(
            v,
            vec![d(1, 0), d(1, 1), d(0, 1), d(-1, 0), d(0, -1), d(1, -1)]
        );
    }

    #[test]
    fn between_is_strictly_inside() {
        let pairs = [
            (d(1, 0), d(0, 1)),
            (d(0, 1), d(1, 0)),
            (d(1, 0), d(-1, 0)),
            (d(1, 2), d(1, 2)),
        ];
        for (a, b) in pairs {
            let m = a.between(b);
            assert_ne!(m, a);
            assert_ne!(m, b);
            if a != b {
                assert_eq!(RationalDirection::angle_cmp_from(a, m, b), Ordering::Less);
            }
        }
    }

    #[test]
    fn duarte_stable_set() {
        let f = UpdateFamily::by_name("duarte").unwrap();
        let s = stable_set(&f);
        assert_eq!(
            s.arcs,
            vec![Arc {
                start: d(0, 1),
                end: d(0, -1)
            }]
        );
        assert_eq!(s.points, vec![d(1, 0)]);
        assert!(is_stable(&f, d(1, 0)));
        assert!(!is_stable(&f, d(1, 1)));
        assert!(is_stable(&f, d(-1, 0)));
    }

    #[test]
    fn neighbour_families() {
        let one = stable_set(&UpdateFamily::by_name("r_neighbour(1)").unwrap());
        assert!(one.is_empty());
        let two = stable_set(&UpdateFamily::by_name("r_neighbour(2)").unwrap());
        assert!(two.arcs.is_empty());
        assert_eq!(two.points, vec![d(1, 0), d(0, 1), d(-1, 0), d(0, -1)]);
        let three = stable_set(&UpdateFamily::by_name("r_neighbour(3)").unwrap());
        assert!(three.full_circle);
    }

    #[test]
    fn modified_duarte_stable_set() {
        let s = stable_set(&UpdateFamily::by_name("modified_duarte").unwrap());
        assert_eq!(
            s.arcs,
            vec![Arc {
                start: d(-1, 0),
                end: d(1, 0)
            }]
        );
        assert_eq!(s.points, vec![d(0, 1)]);
    }

    #[test]
    fn json_shape() {
        let s = stable_set(&UpdateFamily::by_name("duarte").unwrap());
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["arcs"], serde_json::json!([[[0, 1], [0, -1]]]));
        assert_eq!(v["points"], serde_json::json!([[1, 0]]));
    }
}
