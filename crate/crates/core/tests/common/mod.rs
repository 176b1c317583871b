//! Reference implementations shared by the integration tests. None of them call into the
//! algorithms they are used to check.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use bootstrap_lab::{GrowthParams, Site, UpdateFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn duarte() -> UpdateFamily {
    UpdateFamily::by_name("duarte").unwrap()
}

/// Parameters under which droplet heights grow visibly over a few dozen columns.
pub fn steep() -> GrowthParams {
    GrowthParams::new(1.0, 0.01).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Synchronous updates inside the rectangle `[x0, x1] x [y0, y1]` until nothing changes.
pub fn naive_closure(seeds: &[Site], family: &UpdateFamily, lo: Site, hi: Site) -> BTreeSet<Site> {
    let mut set: BTreeSet<Site> = seeds.iter().copied().collect();
    loop {
        let mut add = Vec::new();
        for y in lo.y..=hi.y {
            for x in lo.x..=hi.x {
                let v = Site::new(x, y);
                if set.contains(&v) {
                    continue;
                }
                let fires = family
                    .rules()
                    .iter()
                    .any(|r| r.offsets().iter().all(|o| set.contains(&(v + *o))));
                if fires {
                    add.push(v);
                }
            }
        }
        if add.is_empty() {
            return set;
        }
        set.extend(add);
    }
}

/// Closure of a finite set under a family whose closures stay in the bounding box, such
/// as Duarte.
pub fn bbox_closure(seeds: &[Site], family: &UpdateFamily) -> BTreeSet<Site> {
    let lo = Site::new(
        seeds.iter().map(|s| s.x).min().unwrap(),
        seeds.iter().map(|s| s.y).min().unwrap(),
    );
    let hi = Site::new(
        seeds.iter().map(|s| s.x).max().unwrap(),
        seeds.iter().map(|s| s.y).max().unwrap(),
    );
    naive_closure(seeds, family, lo, hi)
}

/// Components under `|da| <= 1, |da| + |db| <= 2`, by breadth-first search.
pub fn strong_components(sites: &BTreeSet<Site>) -> Vec<Vec<Site>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &s in sites {
        if !seen.insert(s) {
            continue;
        }
        let mut comp = vec![s];
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for dx in -1..=1i64 {
                for dy in -2..=2i64 {
                    if dx.abs() + dy.abs() > 2 || (dx, dy) == (0, 0) {
                        continue;
                    }
                    let v = Site::new(u.x + dx, u.y + dy);
                    if sites.contains(&v) && seen.insert(v) {
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Components under ordinary nearest-neighbour adjacency.
pub fn z2_components(sites: &BTreeSet<Site>) -> Vec<Vec<Site>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for &s in sites {
        if !seen.insert(s) {
            continue;
        }
        let mut comp = vec![s];
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let v = Site::new(u.x + dx, u.y + dy);
                if sites.contains(&v) && seen.insert(v) {
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Each site of `[0, side)^2` independently with probability `p`; never empty.
pub fn random_seeds(rng: &mut ChaCha8Rng, side: i64, p: f64) -> Vec<Site> {
    let mut v: Vec<Site> = (0..side)
        .flat_map(|y| (0..side).map(move |x| Site::new(x, y)))
        .filter(|_| rng.random_bool(p))
        .collect();
    if v.is_empty() {
        v.push(Site::new(
            rng.random_range(0..side),
            rng.random_range(0..side),
        ));
    }
    v
}

/// Sorted region parameters, for comparing droplet multisets.
pub fn region_keys(ds: &[bootstrap_lab::Droplet]) -> Vec<(f64, f64, f64)> {
    let mut v: Vec<(f64, f64, f64)> = ds
        .iter()
        .map(|d| (d.region.source.0, d.region.source.1, d.region.width))
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn keys_match(a: &[(f64, f64, f64)], b: &[(f64, f64, f64)], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| {
            (x.0 - y.0).abs() <= tol && (x.1 - y.1).abs() <= tol && (x.2 - y.2).abs() <= tol
        })
}
