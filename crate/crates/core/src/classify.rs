//! Direction difficulties and the supercritical / critical / subcritical trichotomy.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::direction::{stable_set, Arc, RationalDirection, StableSetDescription};
use crate::error::Result;
use crate::family::{Site, UpdateFamily};
use crate::lattice::{closure, Geometry, LatticeState, Rect};

/// Limits for the helper-set search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_helpers: u32,
    pub window_radius: i64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_helpers: 3,
            window_radius: 12,
        }
    }
}

/// Helper subsets examined per size before the search gives up.
const MAX_SUBSETS_PER_SIZE: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
    Both,
}

/// A difficulty: exact, infinite, or only bounded below by an exhausted search.
///
/// Serialises as a bare integer, the string `"infinite"`, or `{"at_least": k}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DifficultyValue {
    Finite(u32),
    #[serde(with = "infinite_tag")]
    Infinite,
    UnknownAtLeast {
        at_least: u32,
    },
}

mod infinite_tag {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("infinite")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let t = String::deserialize(d)?;
        if t == "infinite" {
            Ok(())
        } else {
            Err(serde::de::Error::custom("expected \"infinite\""))
        }
    }
}

/// Extended naturals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Ext {
    Fin(u32),
    Inf,
}

/// The set of values a difficulty may take given what the search resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Interval {
    lo: Ext,
    hi: Ext,
}

impl Interval {
    fn exact(e: Ext) -> Self {
        Interval { lo: e, hi: e }
    }

    fn max(self, o: Self) -> Self {
        Interval {
            lo: self.lo.max(o.lo),
            hi: self.hi.max(o.hi),
        }
    }

    fn min(self, o: Self) -> Self {
        Interval {
            lo: self.lo.min(o.lo),
            hi: self.hi.min(o.hi),
        }
    }

    fn value(self) -> DifficultyValue {
        match (self.lo, self.hi) {
            (Ext::Inf, _) => DifficultyValue::Infinite,
            (Ext::Fin(a), Ext::Fin(b)) if a == b => DifficultyValue::Finite(a),
            (Ext::Fin(a), _) => DifficultyValue::UnknownAtLeast { at_least: a },
        }
    }
}

impl DifficultyValue {
    fn interval(self) -> Interval {
        match self {
            DifficultyValue::Finite(k) => Interval::exact(Ext::Fin(k)),
            DifficultyValue::Infinite => Interval::exact(Ext::Inf),
            DifficultyValue::UnknownAtLeast { at_least } => Interval {
                lo: Ext::Fin(at_least),
                hi: Ext::Inf,
            },
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, DifficultyValue::Finite(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifficultyEstimate {
    pub direction: RationalDirection,
    pub side: Side,
    pub value: DifficultyValue,
    pub plus: DifficultyValue,
    pub minus: DifficultyValue,
    /// Helper set realising `value` when it is finite.
    pub witness: Option<Vec<Site>>,
    pub witness_plus: Option<Vec<Site>>,
    pub witness_minus: Option<Vec<Site>>,
    /// How the value was obtained: `unstable`, `stable_arc` or `search`.
    pub method: String,
    pub budget: Budget,
}

enum SideResult {
    Found(u32, Vec<Site>),
    Exhausted(u32),
}

impl SideResult {
    fn value(&self) -> DifficultyValue {
        match self {
            SideResult::Found(k, _) => DifficultyValue::Finite(*k),
            SideResult::Exhausted(k) => DifficultyValue::UnknownAtLeast { at_least: *k },
        }
    }
}

/// Difficulty of a direction.
///
/// Unstable directions have difficulty 0. Directions in a stable arc, endpoints included,
/// are infinite: one side of the line is always blocked. Isolated stable directions are
/// searched: helper sets of growing size near the origin are added to the half-plane,
/// the closure is computed in a padded window, and a side counts as spanned when every
/// line site on that side, beyond the helpers and more than `window_radius / 2` from all
/// of them, is infected.
pub fn difficulty(
    family: &UpdateFamily,
    u: RationalDirection,
    budget: Budget,
) -> DifficultyEstimate {
    let stable = stable_set(family);
    difficulty_with(family, &stable, u, budget)
}

fn difficulty_with(
    family: &UpdateFamily,
    stable: &StableSetDescription,
    u: RationalDirection,
    budget: Budget,
) -> DifficultyEstimate {
    let fixed = |v: DifficultyValue, method: &str| DifficultyEstimate {
        direction: u,
        side: Side::Both,
        value: v,
        plus: v,
        minus: v,
        witness: v.is_finite().then(Vec::new),
        witness_plus: v.is_finite().then(Vec::new),
        witness_minus: v.is_finite().then(Vec::new),
        method: method.into(),
        budget,
    };
    if !stable.contains(u) {
        return fixed(DifficultyValue::Finite(0), "unstable");
    }
    if stable.in_arc(u) {
        return fixed(DifficultyValue::Infinite, "stable_arc");
    }

    let (plus, minus) = search(family, u, budget);
    let value = match (&plus, &minus) {
        (SideResult::Found(a, _), SideResult::Found(b, _)) => DifficultyValue::Finite(*a.min(b)),
        _ => {
            let lo = [&plus, &minus]
                .iter()
                .map(|r| match r {
                    SideResult::Found(k, _) | SideResult::Exhausted(k) => *k,
                })
                .min()
                .unwrap_or(0);
            DifficultyValue::UnknownAtLeast { at_least: lo }
        }
    };
    let witness = match (&plus, &minus) {
        (SideResult::Found(a, za), SideResult::Found(b, zb)) => {
            Some(if a <= b { za.clone() } else { zb.clone() })
        }
        _ => None,
    };
    let wit = |r: &SideResult| match r {
        SideResult::Found(_, z) => Some(z.clone()),
        SideResult::Exhausted(_) => None,
    };
    DifficultyEstimate {
        direction: u,
        side: Side::Both,
        value,
        plus: plus.value(),
        minus: minus.value(),
        witness,
        witness_plus: wit(&plus),
        witness_minus: wit(&minus),
        method: "search".into(),
        budget,
    }
}

/// The window and line used by the helper search for one direction.
pub struct SearchSetup {
    pub window: Rect,
    /// Unit step along the line `<x, u> = 0`; the plus side is `j > 0`.
    pub tangent: Site,
    pub radius: i64,
    base: LatticeState,
    line: Vec<(i64, Site)>,
}

impl SearchSetup {
    pub fn new(family: &UpdateFamily, u: RationalDirection, budget: Budget) -> Result<Self> {
        let radius = budget.window_radius.max(1);
        let guard = 2 * family.diameter().max(1);
        let m = radius + guard;
        let window = Rect::from_corners(-m, -m, m, m);
        let base = LatticeState::from_sites(
            Geometry::Window(window),
            window.sites().filter(|&s| u.dot(s) < 0),
        )?;
        let tangent = Site::new(u.b(), -u.a());
        let line = (-radius..=radius)
            .map(|j| (j, Site::new(j * tangent.x, j * tangent.y)))
            .filter(|(_, s)| s.x.abs() <= radius && s.y.abs() <= radius)
            .collect();
        Ok(SearchSetup {
            window,
            tangent,
            radius,
            base,
            line,
        })
    }

    /// Closure of the half-plane slice plus `helpers`.
    pub fn run(&self, family: &UpdateFamily, helpers: &[Site]) -> LatticeState {
        let start = self
            .base
            .with_sites(helpers.iter().copied().filter(|s| self.window.contains(*s)))
            .expect("helpers are filtered to the window");
        closure(&start, family)
    }

    /// Whether the plus and minus sides of the line are spanned in `state`.
    pub fn spanned(&self, state: &LatticeState, helpers: &[Site]) -> (bool, bool) {
        let proj = |s: Site| s.x * self.tangent.x + s.y * self.tangent.y;
        let hi = helpers.iter().map(|&z| proj(z)).max().unwrap_or(0);
        let lo = helpers.iter().map(|&z| proj(z)).min().unwrap_or(0);
        let far = |s: Site| helpers.iter().all(|&z| 2 * s.chebyshev(z) > self.radius);
        let side = |pick: &dyn Fn(i64) -> bool| {
            let mut any = false;
            for &(_, s) in &self.line {
                if pick(proj(s)) && far(s) {
                    any = true;
                    if !state.contains(s) {
                        return false;
                    }
                }
            }
            any
        };
        (side(&|p| p > hi), side(&|p| p < lo))
    }
}

fn search(family: &UpdateFamily, u: RationalDirection, budget: Budget) -> (SideResult, SideResult) {
    let setup = match SearchSetup::new(family, u, budget) {
        Ok(s) => s,
        Err(_) => return (SideResult::Exhausted(0), SideResult::Exhausted(0)),
    };
    let c = (setup.radius / 4).max(1);
    let mut candidates: Vec<Site> = Rect::from_corners(-c, -c, c, c)
        .sites()
        .filter(|&s| u.dot(s) >= 0)
        .collect();
    candidates.sort_by_key(|s| (s.x * s.x + s.y * s.y, s.x, s.y));

    let mut plus: Option<SideResult> = None;
    let mut minus: Option<SideResult> = None;
    for k in 0..=budget.max_helpers {
        let subsets: Vec<Vec<Site>> = candidates
            .iter()
            .copied()
            .combinations(k as usize)
            .take(MAX_SUBSETS_PER_SIZE + 1)
            .collect();
        if subsets.len() > MAX_SUBSETS_PER_SIZE {
            plus.get_or_insert(SideResult::Exhausted(k));
            minus.get_or_insert(SideResult::Exhausted(k));
            break;
        }
        let outcomes: Vec<(bool, bool)> = subsets
            .par_iter()
            .map(|z| setup.spanned(&setup.run(family, z), z))
            .collect();
        if plus.is_none() {
            if let Some(i) = outcomes.iter().position(|o| o.0) {
                plus = Some(SideResult::Found(k, subsets[i].clone()));
            }
        }
        if minus.is_none() {
            if let Some(i) = outcomes.iter().position(|o| o.1) {
                minus = Some(SideResult::Found(k, subsets[i].clone()));
            }
        }
        if plus.is_some() && minus.is_some() {
            break;
        }
    }
    let next = budget.max_helpers + 1;
    (
        plus.unwrap_or(SideResult::Exhausted(next)),
        minus.unwrap_or(SideResult::Exhausted(next)),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Supercritical,
    Critical,
    Subcritical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Balance {
    Balanced,
    Unbalanced,
    NotApplicable,
    /// The answer depends on difficulties the search could not pin down.
    Indeterminate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyClassification {
    pub kind: Kind,
    pub balance: Balance,
    pub family_difficulty: DifficultyValue,
    pub stable_set: StableSetDescription,
    /// Difficulties of the isolated stable directions.
    pub point_difficulties: Vec<DifficultyEstimate>,
    pub budget: Budget,
}

/// JSON report printed by the `classify` subcommand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub family: String,
    pub kind: Kind,
    pub balance: Balance,
    pub alpha: DifficultyValue,
    pub stable_set: StableSetDescription,
    pub budget: Budget,
    pub witnesses: Vec<DifficultyEstimate>,
}

impl FamilyClassification {
    pub fn report(&self, family: &UpdateFamily) -> ClassificationReport {
        ClassificationReport {
            family: family.label().to_string(),
            kind: self.kind,
            balance: self.balance,
            alpha: self.family_difficulty,
            stable_set: self.stable_set.clone(),
            budget: self.budget,
            witnesses: self.point_difficulties.clone(),
        }
    }
}

/// Stable arcs and points as closed intervals `(start, end)`, sorted by start angle.
fn elements(s: &StableSetDescription) -> Vec<(RationalDirection, RationalDirection)> {
    let mut v: Vec<_> = s.arcs.iter().map(|a| (a.start, a.end)).collect();
    v.extend(s.points.iter().map(|&p| (p, p)));
    v.sort_by_key(|x| x.0);
    v
}

/// Whether some gap between consecutive intervals spans at least a half turn, i.e.
/// whether some open semicircle avoids all of them.
fn has_half_turn_gap(items: &[(RationalDirection, RationalDirection)]) -> bool {
    match items.len() {
        0 => true,
        1 => {
            let (s, e) = items[0];
            s == e || e.cross(s) <= 0
        }
        n => (0..n).any(|i| {
            let e = items[i].1;
            let s = items[(i + 1) % n].0;
            e.cross(s) <= 0
        }),
    }
}

fn open_meets_arc(s: RationalDirection, a: &Arc) -> bool {
    s.cross(a.start) > 0 || s.cross(a.end) > 0 || a.contains(s.perp())
}

fn closed_meets_arc(s: RationalDirection, a: &Arc) -> bool {
    s.cross(a.start) >= 0 || s.cross(a.end) >= 0 || a.contains(s.perp())
}

/// Directions `s` whose semicircles `{cross(s, u) > 0}` realise every combinatorial
/// type: the critical angles and one direction strictly between each consecutive pair.
fn semicircle_bases(stable: &StableSetDescription) -> Vec<RationalDirection> {
    let q = stable.critical_angles();
    let mut out = q.clone();
    for i in 0..q.len() {
        out.push(q[i].between(q[(i + 1) % q.len()]));
    }
    if out.is_empty() {
        out.push(RationalDirection::of(1, 0));
    }
    out.sort();
    out.dedup();
    out
}

pub fn classify(family: &UpdateFamily, budget: Budget) -> FamilyClassification {
    let stable = stable_set(family);
    let kind = if stable.full_circle {
        Kind::Subcritical
    } else if has_half_turn_gap(&elements(&stable)) {
        Kind::Supercritical
    } else {
        let arcs: Vec<_> = stable.arcs.iter().map(|a| (a.start, a.end)).collect();
        if has_half_turn_gap(&arcs) {
            Kind::Critical
        } else {
            Kind::Subcritical
        }
    };

    let point_difficulties: Vec<DifficultyEstimate> = stable
        .points
        .iter()
        .map(|&p| difficulty_with(family, &stable, p, budget))
        .collect();
    let alpha_of = |p: RationalDirection| -> Interval {
        point_difficulties
            .iter()
            .find(|d| d.direction == p)
            .map(|d| d.value.interval())
            .unwrap_or(Interval::exact(Ext::Fin(0)))
    };

    let bases = semicircle_bases(&stable);
    let family_iv = if stable.full_circle {
        Interval::exact(Ext::Inf)
    } else {
        bases
            .iter()
            .filter(|&&s| !stable.arcs.iter().any(|a| open_meets_arc(s, a)))
            .map(|&s| {
                stable
                    .points
                    .iter()
                    .filter(|&&p| s.cross(p) > 0)
                    .fold(Interval::exact(Ext::Fin(0)), |acc, &p| acc.max(alpha_of(p)))
            })
            .fold(Interval::exact(Ext::Inf), Interval::min)
    };

    let balance = if kind != Kind::Critical {
        Balance::NotApplicable
    } else {
        let mut sure = false;
        let mut possible = false;
        for &s in &bases {
            if stable.arcs.iter().any(|a| closed_meets_arc(s, a)) {
                continue;
            }
            let pts: Vec<Interval> = stable
                .points
                .iter()
                .filter(|&&p| s.cross(p) >= 0)
                .map(|&p| alpha_of(p))
                .collect();
            if pts.iter().all(|iv| iv.hi <= family_iv.lo) {
                sure = true;
            }
            if pts.iter().all(|iv| iv.lo <= family_iv.hi) {
                possible = true;
            }
        }
        if sure {
            Balance::Balanced
        } else if !possible {
            Balance::Unbalanced
        } else {
            Balance::Indeterminate
        }
    };

    FamilyClassification {
        kind,
        balance,
        family_difficulty: family_iv.value(),
        stable_set: stable,
        point_difficulties,
        budget,
    }
}
