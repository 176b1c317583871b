//! Strong connectivity and the spanning algorithm.
//!
//! Seeds start as singleton components. Two components are merged whenever the closure
//! of their union is strongly connected; the loop stops when no pair qualifies. The output
//! is the list of droplets of the final closures, and every merge is kept in a trace.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use petgraph::unionfind::UnionFind;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::droplet::{Droplet, GrowthParams, TOL};
use crate::error::{Error, Result};
use crate::family::{Site, UpdateFamily};
use crate::lattice::{closure_in_plane, Rect, DEFAULT_PAD_CAP};

/// `|a1 - a2| <= 1` and `|a1 - a2| + |b1 - b2| <= 2`.
pub fn strongly_adjacent(u: Site, v: Site) -> bool {
    let da = (u.x - v.x).abs();
    let db = (u.y - v.y).abs();
    da <= 1 && da + db <= 2
}

/// Strongly connected components, each sorted, ordered by least site.
pub fn strong_components(sites: &[Site]) -> Vec<Vec<Site>> {
    let index: HashMap<Site, usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut uf = UnionFind::<usize>::new(sites.len());
    for (i, s) in sites.iter().enumerate() {
        for dx in -1..=1i64 {
            let r = 2 - dx.abs();
            for dy in -r..=r {
                if let Some(&j) = index.get(&s.offset(dx, dy)) {
                    uf.union(i, j);
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<Site>> = HashMap::new();
    for (i, &s) in sites.iter().enumerate() {
        groups.entry(uf.find(i)).or_default().push(s);
    }
    let mut out: Vec<Vec<Site>> = groups.into_values().collect();
    for g in &mut out {
        g.sort();
        g.dedup();
    }
    out.sort();
    out
}

pub fn strongly_connected(sites: &[Site]) -> bool {
    strong_components(sites).len() <= 1
}

/// One component of the spanning algorithm: a leaf seed or the merge of two components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanNode {
    pub id: usize,
    pub children: Option<(usize, usize)>,
    pub seeds: Vec<Site>,
    pub closure: Vec<Site>,
    pub droplet: Droplet,
}

impl SpanNode {
    pub fn height(&self) -> f64 {
        self.droplet.height()
    }
}

/// Merge forest over the initial seeds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpanTrace {
    /// Nodes in creation order: the leaves first, then one node per merge.
    pub nodes: Vec<SpanNode>,
    pub roots: Vec<usize>,
}

impl SpanTrace {
    pub fn node(&self, id: usize) -> &SpanNode {
        &self.nodes[id]
    }

    pub fn merges(&self) -> impl Iterator<Item = &SpanNode> {
        self.nodes.iter().filter(|n| n.children.is_some())
    }

    /// Breadth-first walk of the subtree below `root`.
    pub fn subtree(&self, root: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut queue = VecDeque::from([root]);
        while let Some(id) = queue.pop_front() {
            out.push(id);
            if let Some((a, b)) = self.nodes[id].children {
                queue.push_back(a);
                queue.push_back(b);
            }
        }
        out
    }

    /// The merge forest in Graphviz DOT syntax.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph span {\n  node [shape=box];\n");
        for n in &self.nodes {
            let _ = writeln!(
                s,
                "  n{} [label=\"#{} h={:.3} w={:.3} seeds={}\"];",
                n.id,
                n.id,
                n.height(),
                n.droplet.width(),
                n.seeds.len()
            );
        }
        for n in &self.nodes {
            if let Some((a, b)) = n.children {
                let _ = writeln!(s, "  n{} -> n{};\n  n{} -> n{};", n.id, a, n.id, b);
            }
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanResult {
    pub droplets: Vec<Droplet>,
    pub trace: SpanTrace,
}

struct Engine<'a> {
    family: &'a UpdateFamily,
    params: &'a GrowthParams,
    pad_cap: i64,
    nodes: Vec<SpanNode>,
    boxes: Vec<Rect>,
    eligible: HashMap<(usize, usize), Option<Vec<Site>>>,
}

impl Engine<'_> {
    fn push(
        &mut self,
        children: Option<(usize, usize)>,
        seeds: Vec<Site>,
        closure: Vec<Site>,
    ) -> Result<usize> {
        let id = self.nodes.len();
        let droplet = Droplet::of_sites(self.params, &closure)?;
        self.boxes
            .push(Rect::bounding(&closure).expect("closures are nonempty"));
        self.nodes.push(SpanNode {
            id,
            children,
            seeds,
            closure,
            droplet,
        });
        Ok(id)
    }

    /// Joint closure of two components when it is strongly connected.
    fn joint(&mut self, i: usize, j: usize) -> Result<Option<Vec<Site>>> {
        if let Some(v) = self.eligible.get(&(i, j)) {
            return Ok(v.clone());
        }
        // Far-apart closed sets cannot interact, and their union is not strongly connected.
        let limit = 2.max(2 * self.family.reach());
        let v = if self.boxes[i].gap(&self.boxes[j]) > limit {
            None
        } else {
            let mut union = self.nodes[i].closure.clone();
            union.extend_from_slice(&self.nodes[j].closure);
            let cl = closure_in_plane(&union, self.family, self.pad_cap)?;
            strongly_connected(&cl).then_some(cl)
        };
        self.eligible.insert((i, j), v.clone());
        Ok(v)
    }
}

/// Runs the spanning algorithm with the default closure budget.
pub fn span(seeds: &[Site], family: &UpdateFamily, params: &GrowthParams) -> Result<SpanResult> {
    span_with_cap(seeds, family, params, DEFAULT_PAD_CAP)
}

/// Runs the spanning algorithm, fusing at each step the eligible pair that is least by
/// (least seed of the first, least seed of the second).
pub fn span_with_cap(
    seeds: &[Site],
    family: &UpdateFamily,
    params: &GrowthParams,
    pad_cap: i64,
) -> Result<SpanResult> {
    run(seeds, family, params, pad_cap, MergeOrder::Lexicographic)
}

/// Which eligible pair the spanning algorithm fuses at each step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeOrder {
    /// Least by (least seed of the first, least seed of the second).
    Lexicographic,
    /// Uniformly random, from the given seed.
    Shuffled(u64),
    /// The pair whose merged droplet is lowest; ties go lexicographically.
    LowestFirst,
}

/// The spanning algorithm under a chosen merge order. The final droplets do not depend
/// on the order; the trace does.
pub fn span_ordered(
    seeds: &[Site],
    family: &UpdateFamily,
    params: &GrowthParams,
    order: MergeOrder,
) -> Result<SpanResult> {
    run(seeds, family, params, DEFAULT_PAD_CAP, order)
}

fn run(
    seeds: &[Site],
    family: &UpdateFamily,
    params: &GrowthParams,
    pad_cap: i64,
    order: MergeOrder,
) -> Result<SpanResult> {
    let mut seeds: Vec<Site> = seeds.to_vec();
    seeds.sort();
    seeds.dedup();
    let mut eng = Engine {
        family,
        params,
        pad_cap,
        nodes: Vec::new(),
        boxes: Vec::new(),
        eligible: HashMap::new(),
    };
    let mut active = Vec::with_capacity(seeds.len());
    for &s in &seeds {
        let cl = closure_in_plane(&[s], family, pad_cap)?;
        active.push(eng.push(None, vec![s], cl)?);
    }
    let mut rng = match order {
        MergeOrder::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut heights: HashMap<(usize, usize), f64> = HashMap::new();

    loop {
        let mut pairs: Vec<(usize, usize)> = (0..active.len())
            .flat_map(|x| (x + 1..active.len()).map(move |y| (x, y)))
            .collect();
        if let Some(rng) = rng.as_mut() {
            pairs.shuffle(rng);
        }
        let mut pick: Option<(usize, usize, Vec<Site>, f64)> = None;
        for (x, y) in pairs {
            let (i, j) = (active[x], active[y]);
            let Some(cl) = eng.joint(i, j)? else {
                continue;
            };
            if order != MergeOrder::LowestFirst {
                pick = Some((x, y, cl, 0.0));
                break;
            }
            let h = match heights.get(&(i, j)) {
                Some(&h) => h,
                None => {
                    let h = Droplet::of_sites(params, &cl)?.height();
                    heights.insert((i, j), h);
                    h
                }
            };
            if pick.as_ref().is_none_or(|p| h < p.3 - TOL) {
                pick = Some((x, y, cl, h));
            }
        }
        let Some((x, y, cl, _)) = pick else {
            break;
        };
        let (i, j) = (active[x], active[y]);
        let mut merged = eng.nodes[i].seeds.clone();
        merged.extend_from_slice(&eng.nodes[j].seeds);
        merged.sort();
        let id = eng.push(Some((i, j)), merged, cl)?;
        active.remove(y);
        active.remove(x);
        let pos = active.partition_point(|&a| eng.nodes[a].seeds[0] < eng.nodes[id].seeds[0]);
        active.insert(pos, id);
    }

    let droplets = active.iter().map(|&a| eng.nodes[a].droplet).collect();
    Ok(SpanResult {
        droplets,
        trace: SpanTrace {
            nodes: eng.nodes,
            roots: active,
        },
    })
}

/// Whether `d` is internally spanned by `seeds`: `d` is among the span of `d ∩ seeds`.
pub fn internally_spanned(
    d: &Droplet,
    seeds: &[Site],
    family: &UpdateFamily,
    params: &GrowthParams,
) -> Result<bool> {
    Ok(spanning_root(d, seeds, family, params)?.is_some())
}

fn spanning_root(
    d: &Droplet,
    seeds: &[Site],
    family: &UpdateFamily,
    params: &GrowthParams,
) -> Result<Option<(SpanResult, usize)>> {
    let inside: Vec<Site> = seeds.iter().copied().filter(|&s| d.contains(s)).collect();
    if inside.is_empty() {
        return Ok(None);
    }
    let res = span(&inside, family, params)?;
    let root = res
        .trace
        .roots
        .iter()
        .copied()
        .find(|&r| res.trace.node(r).droplet.same_as(d));
    Ok(root.map(|r| (res, r)))
}

/// An internally spanned droplet inside `d` with height in `[k, 2k]`.
///
/// Searches the merge forest of `d ∩ seeds`: first the subtree of the root that realises
/// `d`, breadth-first, then every other node, keeping only droplets whose sites lie in `d`.
/// If that fails, the same seeds are re-spanned with [`MergeOrder::LowestFirst`].
/// No such droplet need exist for fractional `k`: two seeds at vertical distance 2 span a
/// droplet of height 3 whose only internally spanned sub-droplets have heights 1 and 3.
pub fn extract_subdroplet(
    d: &Droplet,
    seeds: &[Site],
    family: &UpdateFamily,
    params: &GrowthParams,
    k: f64,
) -> Result<Droplet> {
    if !(k >= 1.0 && k <= d.height() + TOL) {
        return Err(Error::Precondition(format!(
            "need 1 <= k <= h(D) = {}, got k = {k}",
            d.height()
        )));
    }
    let Some((res, root)) = spanning_root(d, seeds, family, params)? else {
        return Err(Error::Precondition(
            "droplet is not internally spanned".into(),
        ));
    };
    let in_range = |h: f64| h >= k - TOL && h <= 2.0 * k + TOL;
    let mut order = res.trace.subtree(root);
    let first: HashSet<usize> = order.iter().copied().collect();
    order.extend((0..res.trace.nodes.len()).filter(|id| !first.contains(id)));
    let inside = |n: &SpanNode| n.droplet.sites().iter().all(|&s| d.contains(s));
    let mut found = order
        .into_iter()
        .map(|id| res.trace.node(id))
        .find(|n| in_range(n.height()) && (first.contains(&n.id) || inside(n)))
        .map(|n| n.droplet);
    if found.is_none() {
        let local: Vec<Site> = seeds.iter().copied().filter(|&s| d.contains(s)).collect();
        let low = span_ordered(&local, family, params, MergeOrder::LowestFirst)?;
        found = low
            .trace
            .nodes
            .iter()
            .find(|n| in_range(n.height()) && inside(n))
            .map(|n| n.droplet);
    }
    let Some(found) = found else {
        return Err(Error::InvariantViolation(format!(
            "no internally spanned droplet of height in [{k}, {}] inside a droplet of height {}",
            2.0 * k,
            d.height()
        )));
    };
    if !internally_spanned(&found, seeds, family, params)? {
        return Err(Error::InvariantViolation(format!(
            "extracted droplet of height {} is not internally spanned",
            found.height()
        )));
    }
    Ok(found)
}

/// The two components whose merge first produced a droplet taller than the threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPair {
    pub first: Droplet,
    pub second: Droplet,
    pub first_seeds: Vec<Site>,
    pub second_seeds: Vec<Site>,
    pub merged_height: f64,
    /// Least Chebyshev distance between lattice sites of the two droplets.
    pub distance: i64,
    /// Both heights are at most the threshold.
    pub below_threshold: bool,
    /// `h(D1) + h(D2) >= threshold - 1`.
    pub sum_condition: bool,
}

pub fn critical_pair(
    seeds: &[Site],
    family: &UpdateFamily,
    params: &GrowthParams,
    threshold: f64,
) -> Result<Option<CriticalPair>> {
    let res = span(seeds, family, params)?;
    let Some(node) = res.trace.merges().find(|n| n.height() > threshold) else {
        return Ok(None);
    };
    let (a, b) = node.children.expect("merge nodes have children");
    let (na, nb) = (res.trace.node(a), res.trace.node(b));
    let sa = na.droplet.sites();
    let sb: HashSet<Site> = nb.droplet.sites().into_iter().collect();
    let distance = sa
        .iter()
        .flat_map(|&u| sb.iter().map(move |&v| u.chebyshev(v)))
        .min()
        .unwrap_or(i64::MAX);
    Ok(Some(CriticalPair {
        first: na.droplet,
        second: nb.droplet,
        first_seeds: na.seeds.clone(),
        second_seeds: nb.seeds.clone(),
        merged_height: node.height(),
        distance,
        below_threshold: na.height() <= threshold + TOL && nb.height() <= threshold + TOL,
        sum_condition: na.height() + nb.height() >= threshold - 1.0 - TOL,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn duarte() -> UpdateFamily {
        UpdateFamily::by_name("duarte").unwrap()
    }

    fn gp() -> GrowthParams {
        GrowthParams::new(0.5, 0.1).unwrap()
    }

    fn s(x: i64, y: i64) -> Site {
        Site::new(x, y)
    }

    #[test]
    fn strong_connectivity_examples() {
        assert!(strongly_connected(&[s(0, 0), s(0, 2)]));
        assert!(!strongly_connected(&[s(0, 0), s(2, 0)]));
        assert!(strongly_connected(&[s(0, 0), s(1, 1), s(1, 3)]));
        assert!(!strongly_connected(&[s(0, 0), s(1, 2)]));
    }

    #[test]
    fn span_examples() {
        let r = span(&[s(0, 0), s(0, 2)], &duarte(), &gp()).unwrap();
        assert_eq!(r.droplets.len(), 1);
        assert!((r.droplets[0].height() - 3.0).abs() < 1e-8);
        assert_eq!(
            r.trace.node(r.trace.roots[0]).closure,
            vec![s(0, 0), s(0, 1), s(0, 2)]
        );

        let r = span(&[s(0, 0), s(9, 9)], &duarte(), &gp()).unwrap();
        assert_eq!(r.droplets.len(), 2);
        assert!(r.droplets.iter().all(|d| d.height() == 1.0));
        assert!(r.trace.to_dot().starts_with("digraph span"));
    }

    #[test]
    fn internal_spanning_examples() {
        let seeds = [s(0, 0), s(0, 2), s(7, 7)];
        let d = span(&[s(0, 0), s(0, 2)], &duarte(), &gp())
            .unwrap()
            .droplets[0];
        assert!(internally_spanned(&d, &seeds, &duarte(), &gp()).unwrap());
        assert!(!internally_spanned(&d, &[s(7, 7)], &duarte(), &gp()).unwrap());
    }

    #[test]
    fn extraction_and_pairs() {
        let seeds = [s(0, 0), s(0, 2)];
        let d = span(&seeds, &duarte(), &gp()).unwrap().droplets[0];
        let got = extract_subdroplet(&d, &seeds, &duarte(), &gp(), d.height()).unwrap();
        assert!(got.same_as(&d));
        let got = extract_subdroplet(&d, &seeds, &duarte(), &gp(), 1.0).unwrap();
        assert!(got.height() <= 2.0);
        assert!(extract_subdroplet(&d, &seeds, &duarte(), &gp(), 0.5).is_err());

        assert!(critical_pair(&seeds, &duarte(), &gp(), 10.0)
            .unwrap()
            .is_none());
        let pair = critical_pair(&seeds, &duarte(), &gp(), 2.0)
            .unwrap()
            .unwrap();
        assert!(pair.below_threshold && pair.sum_condition);
        assert_eq!(pair.distance, 2);
    }

    #[test]
    fn fractional_scale_can_have_no_subdroplet() {
        let p = GrowthParams::new(1.0, 0.01).unwrap();
        let seeds = [s(0, 0), s(0, 2)];
        let d = span(&seeds, &duarte(), &p).unwrap().droplets[0];
        assert!((d.height() - 3.0).abs() < 1e-6);
        let err = extract_subdroplet(&d, &seeds, &duarte(), &p, 1.3).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation(_)));
        // The merge that first exceeds k stays below 2k + 1.
        let top = span(&seeds, &duarte(), &p).unwrap().trace;
        let m = top.merges().next().unwrap();
        assert!(m.height() <= 2.0 * 1.3 + 1.0);
    }

    #[test]
    fn merge_orders_agree_on_droplets() {
        let p = GrowthParams::new(1.0, 0.01).unwrap();
        let seeds = [s(0, 0), s(0, 2), s(1, 1), s(3, 1), s(4, 0), s(7, 7)];
        let key = |r: SpanResult| {
            let mut v: Vec<(i64, i64, i64)> = r
                .droplets
                .iter()
                .map(|d| {
                    let q = |x: f64| (x * 1e6).round() as i64;
                    (
                        q(d.region.source.0),
                        q(d.region.source.1),
                        q(d.region.width),
                    )
                })
                .collect();
            v.sort();
            v
        };
        let base = key(span(&seeds, &duarte(), &p).unwrap());
        for order in [
            MergeOrder::LowestFirst,
            MergeOrder::Shuffled(1),
            MergeOrder::Shuffled(2),
        ] {
            assert_eq!(
                key(span_ordered(&seeds, &duarte(), &p, order).unwrap()),
                base
            );
        }
    }
}
