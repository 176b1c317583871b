//! Update families: the finite rule sets that drive a monotone cellular automaton.
//!
//! A site `x` becomes infected when, for some rule `X` of the family, every site
//! of the translate `x + X` is already infected.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the integer lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(i64, i64)", into = "(i64, i64)")]
pub struct Site {
    pub x: i64,
    pub y: i64,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Site { x, y }
    }

    pub fn offset(self, dx: i64, dy: i64) -> Self {
        Site::new(self.x + dx, self.y + dy)
    }

    /// Chebyshev (l-infinity) distance.
    pub fn chebyshev(self, other: Site) -> i64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

impl std::ops::Add for Site {
    type Output = Site;
    fn add(self, rhs: Site) -> Site {
        Site::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Site {
    type Output = Site;
    fn sub(self, rhs: Site) -> Site {
        Site::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl From<(i64, i64)> for Site {
    fn from((x, y): (i64, i64)) -> Self {
        Site { x, y }
    }
}

impl From<Site> for (i64, i64) {
    fn from(s: Site) -> Self {
        (s.x, s.y)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// One rule of an update family: a nonempty finite set of offsets, none of them the origin.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct UpdateRule {
    offsets: Vec<Site>,
}

impl UpdateRule {
    pub fn new<I: IntoIterator<Item = Site>>(offsets: I) -> Result<Self> {
        let offsets: BTreeSet<Site> = offsets.into_iter().collect();
        if offsets.is_empty() {
            return Err(Error::InvalidFamily("update rule has no offsets".into()));
        }
        if offsets.contains(&Site::ORIGIN) {
            return Err(Error::InvalidFamily(
                "update rule contains the origin".into(),
            ));
        }
        Ok(UpdateRule {
            offsets: offsets.into_iter().collect(),
        })
    }

    /// Offsets in sorted order.
    pub fn offsets(&self) -> &[Site] {
        &self.offsets
    }

    /// Largest Chebyshev norm among the offsets.
    pub fn reach(&self) -> i64 {
        self.offsets
            .iter()
            .map(|s| s.x.abs().max(s.y.abs()))
            .max()
            .unwrap_or(0)
    }
}

impl<'de> Deserialize<'de> for UpdateRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let offsets = Vec::<Site>::deserialize(d)?;
        UpdateRule::new(offsets).map_err(serde::de::Error::custom)
    }
}

/// A finite nonempty collection of update rules.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UpdateFamily {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    rules: Vec<UpdateRule>,
}

#[derive(Deserialize)]
struct RawFamily {
    #[serde(default)]
    name: Option<String>,
    rules: Vec<UpdateRule>,
}

impl<'de> Deserialize<'de> for UpdateFamily {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawFamily::deserialize(d)?;
        UpdateFamily::new(raw.name, raw.rules).map_err(serde::de::Error::custom)
    }
}

/// Which built-in family to construct.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinFamily {
    Duarte,
    ModifiedDuarte,
    RNeighbour(u8),
}

impl std::str::FromStr for BuiltinFamily {
    type Err = Error;

    /// Accepts `duarte`, `modified_duarte`, `r_neighbour(r)` and the shorthand `r<r>`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase().replace('-', "_");
        match t.as_str() {
            "duarte" => return Ok(BuiltinFamily::Duarte),
            "modified_duarte" => return Ok(BuiltinFamily::ModifiedDuarte),
            _ => {}
        }
        let r = t
            .strip_prefix("r_neighbour(")
            .or_else(|| t.strip_prefix("r_neighbor("))
            .and_then(|rest| rest.strip_suffix(')'))
            .or_else(|| t.strip_prefix("r_neighbour_"))
            .or_else(|| t.strip_suffix("_neighbour"))
            .or_else(|| {
                t.strip_prefix('r')
                    .filter(|n| n.bytes().all(|b| b.is_ascii_digit()))
            })
            .and_then(|n| n.parse::<u8>().ok());
        match r {
            Some(r) => Ok(BuiltinFamily::RNeighbour(r)),
            None => Err(Error::UnknownFamily(s.to_string())),
        }
    }
}

const NEIGHBOURS: [Site; 4] = [
    Site::new(1, 0),
    Site::new(0, 1),
    Site::new(-1, 0),
    Site::new(0, -1),
];

impl UpdateFamily {
    pub fn new(name: Option<String>, rules: Vec<UpdateRule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::InvalidFamily("update family has no rules".into()));
        }
        let mut seen = BTreeSet::new();
        let rules = rules
            .into_iter()
            .filter(|r| seen.insert(r.clone()))
            .collect();
        Ok(UpdateFamily { name, rules })
    }

    /// Builds a family from raw offset lists, e.g. `[[(-1, 0), (0, 1)], ...]`.
    pub fn from_offsets(name: Option<&str>, rules: &[&[(i64, i64)]]) -> Result<Self> {
        let rules = rules
            .iter()
            .map(|r| UpdateRule::new(r.iter().map(|&p| Site::from(p))))
            .collect::<Result<Vec<_>>>()?;
        UpdateFamily::new(name.map(str::to_string), rules)
    }

    pub fn builtin(which: BuiltinFamily) -> Result<Self> {
        match which {
            BuiltinFamily::Duarte => UpdateFamily::from_offsets(
                Some("duarte"),
                &[&[(-1, 0), (0, 1)], &[(-1, 0), (0, -1)], &[(0, 1), (0, -1)]],
            ),
            BuiltinFamily::ModifiedDuarte => UpdateFamily::from_offsets(
                Some("modified_duarte"),
                &[&[(-1, 0), (0, -1)], &[(1, 0), (0, -1)]],
            ),
            BuiltinFamily::RNeighbour(r) => {
                if !(1..=4).contains(&r) {
                    return Err(Error::UnknownFamily(format!("r_neighbour({r})")));
                }
                let rules = k_subsets(&NEIGHBOURS, r as usize)
                    .into_iter()
                    .map(UpdateRule::new)
                    .collect::<Result<Vec<_>>>()?;
                UpdateFamily::new(Some(format!("r_neighbour({r})")), rules)
            }
        }
    }

    /// Looks up a built-in family by name.
    pub fn by_name(name: &str) -> Result<Self> {
        UpdateFamily::builtin(name.parse()?)
    }

    /// Parses `{"name": ..., "rules": [[[dx,dy],...],...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidFamily(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("family serialisation is infallible")
    }

    pub fn rules(&self) -> &[UpdateRule] {
        &self.rules
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or("custom")
    }

    /// Largest Chebyshev norm of any offset in any rule.
    pub fn reach(&self) -> i64 {
        self.rules.iter().map(UpdateRule::reach).max().unwrap_or(0)
    }

    /// Largest Chebyshev distance between two sites of one translated rule, counting the
    /// updated site itself.
    pub fn diameter(&self) -> i64 {
        self.rules
            .iter()
            .map(|r| {
                let mut pts = r.offsets().to_vec();
                pts.push(Site::ORIGIN);
                let mut d = 0;
                for a in &pts {
                    for b in &pts {
                        d = d.max(a.chebyshev(*b));
                    }
                }
                d
            })
            .max()
            .unwrap_or(0)
    }
}

fn k_subsets(items: &[Site], k: usize) -> Vec<Vec<Site>> {
    fn go(items: &[Site], k: usize, start: usize, cur: &mut Vec<Site>, out: &mut Vec<Vec<Site>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            go(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(items, k, 0, &mut Vec::new(), &mut out);
    out
}
