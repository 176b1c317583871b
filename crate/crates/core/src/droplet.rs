//! Duarte regions and droplets.
//!
//! A Duarte region with source `(a, b)` and width `w` is the set of real points with
//! `a <= x <= a + w` and `|y - b| <= f(x - a)`, where `f` is the logarithmic boundary
//! curve fixed by the growth parameters. A droplet is a region read through its lattice
//! points; its height and width always come from the region.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Site;

/// Absolute tolerance for every real membership test.
pub const TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    pub epsilon: f64,
    pub p: f64,
}

impl GrowthParams {
    pub fn new(epsilon: f64, p: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be > 0, got {epsilon}"
            )));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p must lie in (0, 1), got {p}"
            )));
        }
        Ok(GrowthParams { epsilon, p })
    }

    /// `eps^3 p / log(1/p)`, the slope scale inside the logarithm.
    fn c(&self) -> f64 {
        self.epsilon.powi(3) * self.p / (1.0 / self.p).ln()
    }
}

/// `f(x) = log(1 + eps^3 p x / log(1/p)) / (2p)`.
pub fn f_eval(params: &GrowthParams, x: f64) -> f64 {
    (params.c() * x).ln_1p() / (2.0 * params.p)
}

/// Inverse of [`f_eval`]: `log(1/p) (e^{2ph} - 1) / (eps^3 p)`.
pub fn f_inverse(params: &GrowthParams, h: f64) -> f64 {
    (2.0 * params.p * h).exp_m1() / params.c()
}

/// Closed-form derivative of [`f_eval`].
pub fn f_prime(params: &GrowthParams, x: f64) -> f64 {
    params.c() / (2.0 * params.p * (1.0 + params.c() * x))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuarteRegion {
    #[serde(flatten)]
    pub params: GrowthParams,
    pub source: (f64, f64),
    pub width: f64,
}

impl DuarteRegion {
    pub fn new(params: GrowthParams, source: (f64, f64), width: f64) -> Result<Self> {
        if !(width >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "width must be >= 0, got {width}"
            )));
        }
        Ok(DuarteRegion {
            params,
            source,
            width,
        })
    }

    pub fn height(&self) -> f64 {
        2.0 * f_eval(&self.params, self.width) + 1.0
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn half_height_at(&self, x: f64) -> f64 {
        f_eval(&self.params, (x - self.source.0).max(0.0))
    }

    /// The right-hand edge as `(x, y_lo, y_hi)`.
    pub fn right_edge_interval(&self) -> (f64, f64, f64) {
        let h = f_eval(&self.params, self.width);
        (
            self.source.0 + self.width,
            self.source.1 - h,
            self.source.1 + h,
        )
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        let (a, b) = self.source;
        x >= a - TOL && x <= a + self.width + TOL && (y - b).abs() <= self.half_height_at(x) + TOL
    }

    pub fn contains_site(&self, s: Site) -> bool {
        self.contains_point(s.x as f64, s.y as f64)
    }

    /// Lattice points as inclusive `(x, y_lo, y_hi)` columns, left to right.
    pub fn columns(&self) -> Vec<(i64, i64, i64)> {
        let (a, b) = self.source;
        let x0 = (a - TOL).ceil() as i64;
        let x1 = (a + self.width + TOL).floor() as i64;
        (x0..=x1)
            .filter_map(|x| {
                let h = self.half_height_at(x as f64);
                let lo = (b - h - TOL).ceil() as i64;
                let hi = (b + h + TOL).floor() as i64;
                (lo <= hi).then_some((x, lo, hi))
            })
            .collect()
    }

    /// Lattice points in row-major order.
    pub fn sites(&self) -> Vec<Site> {
        let mut out: Vec<Site> = self
            .columns()
            .into_iter()
            .flat_map(|(x, lo, hi)| (lo..=hi).map(move |y| Site::new(x, y)))
            .collect();
        out.sort_by_key(|s| (s.y, s.x));
        out
    }

    /// Parameters agree within `tol`.
    pub fn approx_eq(&self, other: &DuarteRegion, tol: f64) -> bool {
        self.params == other.params
            && (self.source.0 - other.source.0).abs() <= tol
            && (self.source.1 - other.source.1).abs() <= tol
            && (self.width - other.width).abs() <= tol
    }
}

/// A Duarte region together with its lattice points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Droplet {
    pub region: DuarteRegion,
}

impl Droplet {
    /// The droplet of the minimal region containing `sites`.
    pub fn of_sites(params: &GrowthParams, sites: &[Site]) -> Result<Self> {
        let pts: Vec<(f64, f64)> = sites.iter().map(|s| (s.x as f64, s.y as f64)).collect();
        Ok(Droplet {
            region: minimal_region(params, &pts)?,
        })
    }

    pub fn height(&self) -> f64 {
        self.region.height()
    }

    pub fn width(&self) -> f64 {
        self.region.width()
    }

    pub fn sites(&self) -> Vec<Site> {
        self.region.sites()
    }

    pub fn contains(&self, s: Site) -> bool {
        self.region.contains_site(s)
    }

    /// Same droplet after re-canonicalising both sides through [`minimal_region`].
    pub fn same_as(&self, other: &Droplet) -> bool {
        let canon = |d: &Droplet| Droplet::of_sites(&d.region.params, &d.sites()).ok();
        match (canon(self), canon(other)) {
            (Some(a), Some(b)) => a.region.approx_eq(&b.region, TOL),
            (None, None) => true,
            _ => false,
        }
    }
}

/// Interval of feasible sources `b` for width `w` with right edge `right`, if any.
fn feasible_b(params: &GrowthParams, pts: &[(f64, f64)], right: f64, w: f64) -> Option<(f64, f64)> {
    let a = right - w;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for &(x, y) in pts {
        let f = f_eval(params, (x - a).max(0.0));
        lo = lo.max(y - f);
        hi = hi.min(y + f);
    }
    (lo <= hi).then_some((lo, hi))
}

/// The minimal Duarte region containing `points`.
///
/// The right edge sits at the largest x-coordinate. The width is the least value for which
/// some source height `b` fits every point, found by bisection since feasibility is
/// monotone in the width; `b` is the midpoint of the feasible interval.
pub fn minimal_region(params: &GrowthParams, points: &[(f64, f64)]) -> Result<DuarteRegion> {
    if points.is_empty() {
        return Err(Error::Precondition(
            "minimal_region needs at least one point".into(),
        ));
    }
    let right = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let left = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let w_lo = right - left;
    if let Some((lo, hi)) = feasible_b(params, points, right, w_lo) {
        return DuarteRegion::new(*params, (left, 0.5 * (lo + hi)), w_lo);
    }
    let mut lo = w_lo;
    let mut hi = w_lo.max(1.0) * 2.0;
    while feasible_b(params, points, right, hi).is_none() {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InvariantViolation(
                "minimal_region width diverged".into(),
            ));
        }
    }
    for _ in 0..200 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if feasible_b(params, points, right, mid).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (blo, bhi) = feasible_b(params, points, right, hi).expect("upper end stays feasible");
    let w = hi + TOL;
    DuarteRegion::new(*params, (right - w, 0.5 * (blo + bhi)), w)
}

/// Whether `inner` lies inside `outer`, decided from the right edge of `inner`.
pub fn region_contains(outer: &DuarteRegion, inner: &DuarteRegion) -> Result<bool> {
    if outer.params != inner.params {
        return Err(Error::ParamsMismatch);
    }
    let (x, ylo, yhi) = inner.right_edge_interval();
    Ok(inner.source.0 >= outer.source.0 - TOL
        && outer.contains_point(x, ylo)
        && outer.contains_point(x, yhi))
}

/// Result of [`enumerate_droplet_shapes`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeCount {
    pub width: u32,
    pub count: usize,
    /// Number of source columns `a = j / grid` used in the final pass.
    pub grid: usize,
    /// Distinct top boundaries `floor(b + f(x - a))` over the columns `x = 1..=width`.
    pub top_profiles: Vec<Vec<i64>>,
}

type Shape = Vec<(i64, i64, i64)>;

/// Distinct lattice shapes and top profiles met so far.
#[derive(Default)]
struct Seen {
    shapes: HashSet<Shape>,
    tops: BTreeSet<Vec<i64>>,
}

fn shapes_for_a(params: &GrowthParams, a: f64, w: u32, out: &mut Seen) {
    let (top_cols, w) = (w as usize, w as f64);
    let xs: Vec<i64> = ((a.ceil() as i64)..=((a + w).floor() as i64)).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f_eval(params, x as f64 - a)).collect();
    // The shape only changes where b +- f crosses an integer.
    let mut cuts = vec![1.0];
    for &f in &fs {
        for v in [f.rem_euclid(1.0), (-f).rem_euclid(1.0)] {
            if v > 0.0 {
                cuts.push(v);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut probes = cuts.clone();
    let mut prev = 0.0;
    for &c in &cuts {
        probes.push(0.5 * (prev + c));
        prev = c;
    }
    for b in probes {
        let shape: Shape = xs
            .iter()
            .zip(&fs)
            .filter_map(|(&x, &f)| {
                let lo = (b - f).ceil() as i64;
                let hi = (b + f).floor() as i64;
                (lo <= hi).then_some((x, lo, hi))
            })
            .collect();
        out.shapes.insert(shape);
        out.tops.insert(
            fs.iter()
                .take(top_cols)
                .map(|f| (b + f).floor() as i64)
                .collect(),
        );
    }
}

fn shapes_on_grid(params: &GrowthParams, w: u32, k: usize) -> Seen {
    let mut seen = Seen::default();
    for j in 1..=k {
        shapes_for_a(params, j as f64 / k as f64, w, &mut seen);
    }
    seen
}

/// Counts distinct lattice droplets `D* ∩ Z^2` of regions with width `w` and source in
/// `(0, 1] x (0, 1]`.
///
/// For each source abscissa the count over `b` is exact (the shape is a step function of
/// `b` with known breakpoints). Abscissas are sampled on a grid that doubles until two
/// successive counts agree.
pub fn enumerate_droplet_shapes(params: &GrowthParams, w: u32) -> Result<ShapeCount> {
    const MAX_GRID: usize = 1 << 14;
    let mut k = 16;
    let mut prev = shapes_on_grid(params, w, k);
    loop {
        let next_k = 2 * k;
        if next_k > MAX_GRID {
            return Err(Error::RefinementNotConverged { width: w, grid: k });
        }
        let next = shapes_on_grid(params, w, next_k);
        if next.shapes.len() == prev.shapes.len() {
            return Ok(ShapeCount {
                width: w,
                count: next.shapes.len(),
                grid: next_k,
                top_profiles: next.tops.into_iter().collect(),
            });
        }
        prev = next;
        k = next_k;
    }
}

/// Encodes column profiles as subsets of `{0..n}`: column `x` at level `m_x + l`
/// (with `m_x` the lowest value seen in that column) contributes elements for levels
/// `1..=l`, numbered column by column.
pub fn profiles_to_sets(profiles: &[Vec<i64>]) -> (Vec<Vec<usize>>, usize) {
    let cols = profiles.first().map_or(0, Vec::len);
    let mut base = Vec::with_capacity(cols);
    let mut offset = Vec::with_capacity(cols);
    let mut n = 0;
    for x in 0..cols {
        let lo = profiles.iter().map(|p| p[x]).min().unwrap_or(0);
        let hi = profiles.iter().map(|p| p[x]).max().unwrap_or(0);
        base.push(lo);
        offset.push(n);
        n += (hi - lo) as usize;
    }
    let sets = profiles
        .iter()
        .map(|p| {
            (0..cols)
                .flat_map(|x| {
                    let o = offset[x];
                    (0..(p[x] - base[x]) as usize).map(move |l| o + l)
                })
                .collect()
        })
        .collect();
    (sets, n)
}

/// Checks the bi-chain property for subsets of `{0..n}`: every two distinct sets are
/// comparable on some prefix `{0..k}` and on the complementary suffix.
pub fn is_bichain(sets: &[Vec<usize>], n: usize) -> bool {
    let masks: Vec<Vec<bool>> = sets
        .iter()
        .map(|s| {
            let mut m = vec![false; n];
            for &i in s {
                if i < n {
                    m[i] = true;
                }
            }
            m
        })
        .collect();
    for i in 0..masks.len() {
        for j in i + 1..masks.len() {
            let (a, b) = (&masks[i], &masks[j]);
            if a == b {
                continue;
            }
            // pre[k]: a and b comparable on 0..k; suf[k]: comparable on k..n.
            let mut pre = vec![true; n + 1];
            let (mut ab, mut ba) = (true, true);
            for k in 0..n {
                ab &= !a[k] || b[k];
                ba &= !b[k] || a[k];
                pre[k + 1] = ab || ba;
            }
            let mut suf = vec![true; n + 1];
            let (mut ab, mut ba) = (true, true);
            for k in (0..n).rev() {
                ab &= !a[k] || b[k];
                ba &= !b[k] || a[k];
                suf[k] = ab || ba;
            }
            if !(0..=n).any(|k| pre[k] && suf[k]) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gp() -> GrowthParams {
        GrowthParams::new(0.5, 0.1).unwrap()
    }

    #[test]
    fn f_examples() {
        let g = gp();
        assert_eq!(f_eval(&g, 0.0), 0.0);
        assert_eq!(f_inverse(&g, 0.0), 0.0);
        let x = (1.0f64 / 0.1).ln() * ((0.2f64).exp() - 1.0) / (0.125 * 0.1);
        assert!((f_eval(&g, x) - 1.0).abs() < 1e-9);
        assert!((f_inverse(&g, 1.0) - x).abs() < 1e-9 * x);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(GrowthParams::new(0.0, 0.1).is_err());
        assert!(GrowthParams::new(0.5, 1.0).is_err());
        assert!(GrowthParams::new(0.5, 0.0).is_err());
    }

    #[test]
    fn minimal_region_examples() {
        let g = gp();
        let r = minimal_region(&g, &[(0.0, 0.0)]).unwrap();
        assert_eq!((r.source, r.width, r.height()), ((0.0, 0.0), 0.0, 1.0));

        let r = minimal_region(&g, &[(0.0, 0.0), (0.0, 2.0)]).unwrap();
        assert!((r.width - f_inverse(&g, 1.0)).abs() < 1e-8);
        assert!((r.source.1 - 1.0).abs() < 1e-9);
        assert!((r.height() - 3.0).abs() < 1e-8);
        assert!((r.right_edge_interval().0).abs() < 1e-12);

        let r = minimal_region(&g, &[(0.0, 0.0), (4.0, 0.0)]).unwrap();
        assert_eq!((r.source, r.width), ((0.0, 0.0), 4.0));
        assert_eq!(r.height(), 2.0 * f_eval(&g, 4.0) + 1.0);
    }

    #[test]
    fn containment() {
        let g = gp();
        let big = minimal_region(&g, &[(0.0, 0.0), (0.0, 2.0), (3.0, 1.0)]).unwrap();
        let small = minimal_region(&g, &[(0.0, 0.0)]).unwrap();
        assert!(region_contains(&big, &big).unwrap());
        assert!(region_contains(&big, &small).unwrap());
        assert!(!region_contains(&small, &big).unwrap());
        let other =
            DuarteRegion::new(GrowthParams::new(0.3, 0.1).unwrap(), (0.0, 0.0), 0.0).unwrap();
        assert!(matches!(
            region_contains(&big, &other),
            Err(Error::ParamsMismatch)
        ));
    }

    #[test]
    fn json_shape() {
        let r = minimal_region(&gp(), &[(1.0, 2.0)]).unwrap();
        let v = serde_json::to_value(r).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"epsilon": 0.5, "p": 0.1, "source": [1.0, 2.0], "width": 0.0})
        );
    }

    #[test]
    fn bichain_examples() {
        assert!(is_bichain(&[vec![], vec![0], vec![0, 1], vec![0, 1, 2]], 3));
        assert!(is_bichain(&[vec![0], vec![1]], 2));
        assert!(!is_bichain(&[vec![0, 2], vec![1]], 3));
        let all: Vec<Vec<usize>> = (0..8u32)
            .map(|m| (0..3).filter(|i| m >> i & 1 == 1).collect())
            .collect();
        assert!(!is_bichain(&all, 3));
    }

    #[test]
    fn zero_width_shapes() {
        let c = enumerate_droplet_shapes(&gp(), 0).unwrap();
        assert!(c.count <= 2);
    }
}
