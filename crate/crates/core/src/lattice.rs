//! Bitset-backed lattice states and the bootstrap dynamics on them.
//!
//! States live either on the discrete torus `Z_n^2` or inside a finite window of `Z^2`.
//! Sites outside a window are permanently uninfected: they never become infected and
//! never help a rule fire.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Site, UpdateFamily};

/// Hard cap on the number of sites in one state.
pub const MAX_SITES: u64 = 1 << 30;

/// Inclusive axis-parallel rectangle of lattice sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub min: Site,
    pub max: Site,
}

impl Rect {
    pub fn new(min: Site, max: Site) -> Self {
        Rect { min, max }
    }

    /// `R((x0, y0), (x1, y1))`: all sites with `x0 <= x <= x1` and `y0 <= y <= y1`.
    pub fn from_corners(x0: i64, y0: i64, x1: i64, y1: i64) -> Self {
        Rect::new(Site::new(x0, y0), Site::new(x1, y1))
    }

    pub fn is_empty(&self) -> bool {
        self.max.x < self.min.x || self.max.y < self.min.y
    }

    pub fn width(&self) -> i64 {
        (self.max.x - self.min.x + 1).max(0)
    }

    pub fn height(&self) -> i64 {
        (self.max.y - self.min.y + 1).max(0)
    }

    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn contains(&self, s: Site) -> bool {
        s.x >= self.min.x && s.x <= self.max.x && s.y >= self.min.y && s.y <= self.max.y
    }

    /// Smallest rectangle containing both.
    pub fn hull(&self, other: &Rect) -> Rect {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        Rect::from_corners(
            self.min.x.min(other.min.x),
            self.min.y.min(other.min.y),
            self.max.x.max(other.max.x),
            self.max.y.max(other.max.y),
        )
    }

    pub fn expand(&self, pad: i64) -> Rect {
        Rect::from_corners(
            self.min.x - pad,
            self.min.y - pad,
            self.max.x + pad,
            self.max.y + pad,
        )
    }

    /// Right-hand column.
    pub fn right_edge(&self) -> Rect {
        Rect::from_corners(self.max.x, self.min.y, self.max.x, self.max.y)
    }

    pub fn bounding<'a, I: IntoIterator<Item = &'a Site>>(sites: I) -> Option<Rect> {
        let mut it = sites.into_iter();
        let first = *it.next()?;
        let mut r = Rect::new(first, first);
        for s in it {
            r.min.x = r.min.x.min(s.x);
            r.min.y = r.min.y.min(s.y);
            r.max.x = r.max.x.max(s.x);
            r.max.y = r.max.y.max(s.y);
        }
        Some(r)
    }

    /// Sites in row-major order (rows bottom to top, left to right within a row).
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (self.min.y..=self.max.y)
            .flat_map(move |y| (self.min.x..=self.max.x).map(move |x| Site::new(x, y)))
    }

    /// Chebyshev gap between two rectangles (0 when they overlap).
    pub fn gap(&self, other: &Rect) -> i64 {
        let dx = (other.min.x - self.max.x)
            .max(self.min.x - other.max.x)
            .max(0);
        let dy = (other.min.y - self.max.y)
            .max(self.min.y - other.max.y)
            .max(0);
        dx.max(dy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    /// `Z_n^2`, coordinates `0..n` wrapping in both axes.
    Torus { n: usize },
    /// A finite window of `Z^2` with an absorbing, uninfected exterior.
    Window(Rect),
}

impl Geometry {
    fn dims(&self) -> (i64, i64, usize, usize) {
        match *self {
            Geometry::Torus { n } => (0, 0, n, n),
            Geometry::Window(r) => (r.min.x, r.min.y, r.width() as usize, r.height() as usize),
        }
    }

    pub fn site_count(&self) -> u64 {
        let (_, _, w, h) = self.dims();
        w as u64 * h as u64
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Geometry::Torus { n: 0 } => Err(Error::InvalidParameter(
                "torus side must be at least 1".into(),
            )),
            Geometry::Window(r) if r.is_empty() => {
                Err(Error::InvalidParameter("window is empty".into()))
            }
            _ if self.site_count() > MAX_SITES => Err(Error::BudgetExceeded(format!(
                "geometry has {} sites (limit {MAX_SITES})",
                self.site_count()
            ))),
            _ => Ok(()),
        }
    }
}

/// A set of infected sites within a finite geometry.
///
/// Rows are packed into whole 64-bit words, so a row never shares a word with the
/// next one and padding bits are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LatticeState {
    geometry: Geometry,
    x0: i64,
    y0: i64,
    width: usize,
    height: usize,
    stride: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for LatticeState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LatticeState")
            .field("geometry", &self.geometry)
            .field("infected", &self.count())
            .finish()
    }
}

impl LatticeState {
    pub fn empty(geometry: Geometry) -> Result<Self> {
        geometry.validate()?;
        let (x0, y0, width, height) = geometry.dims();
        let stride = width.div_ceil(64);
        Ok(LatticeState {
            geometry,
            x0,
            y0,
            width,
            height,
            stride,
            words: vec![0; stride * height],
        })
    }

    pub fn full(geometry: Geometry) -> Result<Self> {
        let mut s = LatticeState::empty(geometry)?;
        for y in 0..s.height {
            for x in 0..s.width {
                s.set_local(x, y);
            }
        }
        Ok(s)
    }

    /// Builds a state by visiting every site in row-major order.
    pub fn from_fn<F: FnMut(Site) -> bool>(geometry: Geometry, mut infected: F) -> Result<Self> {
        let mut s = LatticeState::empty(geometry)?;
        for y in 0..s.height {
            for x in 0..s.width {
                if infected(Site::new(s.x0 + x as i64, s.y0 + y as i64)) {
                    s.set_local(x, y);
                }
            }
        }
        Ok(s)
    }

    /// Builds a state from sites. Torus coordinates wrap; a window rejects outside sites.
    pub fn from_sites<I: IntoIterator<Item = Site>>(geometry: Geometry, sites: I) -> Result<Self> {
        let mut s = LatticeState::empty(geometry)?;
        for site in sites {
            s.insert(site)?;
        }
        Ok(s)
    }

    /// Returns a copy with extra sites infected.
    pub fn with_sites<I: IntoIterator<Item = Site>>(&self, sites: I) -> Result<Self> {
        let mut s = self.clone();
        for site in sites {
            s.insert(site)?;
        }
        Ok(s)
    }

    pub(crate) fn insert(&mut self, site: Site) -> Result<()> {
        match self.local(site) {
            Some((x, y)) => {
                self.set_local(x, y);
                Ok(())
            }
            None => Err(Error::InvalidParameter(format!(
                "site {site} lies outside {:?}",
                self.geometry
            ))),
        }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    fn local(&self, s: Site) -> Option<(usize, usize)> {
        match self.geometry {
            Geometry::Torus { n } => {
                let n = n as i64;
                Some((s.x.rem_euclid(n) as usize, s.y.rem_euclid(n) as usize))
            }
            Geometry::Window(_) => {
                let x = s.x - self.x0;
                let y = s.y - self.y0;
                if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
                    None
                } else {
                    Some((x as usize, y as usize))
                }
            }
        }
    }

    #[inline]
    fn get_local(&self, x: usize, y: usize) -> bool {
        (self.words[y * self.stride + (x >> 6)] >> (x & 63)) & 1 == 1
    }

    #[inline]
    fn set_local(&mut self, x: usize, y: usize) {
        self.words[y * self.stride + (x >> 6)] |= 1 << (x & 63);
    }

    pub fn contains(&self, site: Site) -> bool {
        self.local(site).is_some_and(|(x, y)| self.get_local(x, y))
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.width * self.height
    }

    /// True when every site of `rect` (in window coordinates) is infected.
    pub fn covers(&self, rect: &Rect) -> bool {
        rect.sites().all(|s| self.contains(s))
    }

    pub fn is_subset(&self, other: &LatticeState) -> bool {
        self.geometry == other.geometry
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    /// Infected sites in row-major order.
    pub fn sites(&self) -> Vec<Site> {
        let mut out = Vec::with_capacity(self.count());
        for y in 0..self.height {
            for wi in 0..self.stride {
                let mut w = self.words[y * self.stride + wi];
                while w != 0 {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    let x = wi * 64 + b;
                    out.push(Site::new(self.x0 + x as i64, self.y0 + y as i64));
                }
            }
        }
        out
    }

    /// Text grid, one row per line, `1` infected and `0` healthy, top row first.
    pub fn to_pbm(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in (0..self.height).rev() {
            for x in 0..self.width {
                out.push(if self.get_local(x, y) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    /// Plain PBM (`P1`) with header.
    pub fn to_pbm_p1(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "P1\n{} {}", self.width, self.height);
        out.push_str(&self.to_pbm());
        out
    }

    /// Bitset whose bit at local `(x, y)` is this state's bit at `(x + dx, y + dy)`.
    fn shifted(&self, dx: i64, dy: i64) -> Vec<u64> {
        let wrap = matches!(self.geometry, Geometry::Torus { .. });
        let mut out = vec![0u64; self.words.len()];
        let h = self.height as i64;
        for y in 0..self.height {
            let sy = y as i64 + dy;
            let sy = if wrap {
                sy.rem_euclid(h)
            } else if sy < 0 || sy >= h {
                continue;
            } else {
                sy
            } as usize;
            let src = &self.words[sy * self.stride..(sy + 1) * self.stride];
            let dst = &mut out[y * self.stride..(y + 1) * self.stride];
            if wrap {
                let w = self.width as i64;
                let k = dx.rem_euclid(w);
                shift_row(src, self.width, k, dst);
                if k != 0 {
                    let mut tmp = vec![0u64; self.stride];
                    shift_row(src, self.width, k - w, &mut tmp);
                    for (d, t) in dst.iter_mut().zip(tmp) {
                        *d |= t;
                    }
                }
            } else {
                shift_row(src, self.width, dx, dst);
            }
        }
        out
    }
}

/// `dst` bit `i` = `src` bit `i + k` when `0 <= i + k < len`, else 0.
fn shift_row(src: &[u64], len: usize, k: i64, dst: &mut [u64]) {
    let n = src.len() as i64;
    let q = k.div_euclid(64);
    let r = k.rem_euclid(64) as u32;
    let word = |j: i64| -> u64 {
        if j < 0 || j >= n {
            0
        } else {
            src[j as usize]
        }
    };
    for (j, d) in dst.iter_mut().enumerate() {
        let j = j as i64 + q;
        *d = if r == 0 {
            word(j)
        } else {
            (word(j) >> r) | (word(j + 1) << (64 - r))
        };
    }
    if len % 64 != 0 {
        if let Some(last) = dst.last_mut() {
            *last &= (1u64 << (len % 64)) - 1;
        }
    }
}

/// One synchronous update: `A_{t+1} = A_t ∪ {x : x + X ⊂ A_t for some rule X}`.
pub fn step(state: &LatticeState, family: &UpdateFamily) -> LatticeState {
    let mut next = state.words.clone();
    for rule in family.rules() {
        let mut acc: Option<Vec<u64>> = None;
        for s in rule.offsets() {
            let sh = state.shifted(s.x, s.y);
            acc = Some(match acc {
                None => sh,
                Some(mut a) => {
                    for (x, y) in a.iter_mut().zip(sh) {
                        *x &= y;
                    }
                    a
                }
            });
        }
        if let Some(a) = acc {
            for (n, v) in next.iter_mut().zip(a) {
                *n |= v;
            }
        }
    }
    LatticeState {
        words: next,
        ..state.clone()
    }
}

/// Precomputed candidate moves for the closure queue: when a site `v` becomes infected,
/// the sites `v - s` (for every offset `s` of every rule) might now be able to fire.
struct RuleTable {
    /// `(rule index, -s)` for every offset `s`.
    candidates: Vec<(usize, i64, i64)>,
    offsets: Vec<Vec<(i64, i64)>>,
}

impl RuleTable {
    fn new(family: &UpdateFamily) -> Self {
        let offsets: Vec<Vec<(i64, i64)>> = family
            .rules()
            .iter()
            .map(|r| r.offsets().iter().map(|s| (s.x, s.y)).collect())
            .collect();
        let candidates = offsets
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(x, y)| (i, -x, -y)))
            .collect();
        RuleTable {
            candidates,
            offsets,
        }
    }
}

/// Least fixed point of [`step`] containing `state`.
///
/// Work-queue propagation: every newly infected site enqueues the handful of sites whose
/// rules it participates in. Sites are processed FIFO starting from the initial infected
/// set in row-major order, so the result and the work done are deterministic.
pub fn closure(state: &LatticeState, family: &UpdateFamily) -> LatticeState {
    let mut out = state.clone();
    closure_in_place(&mut out, family);
    out
}

/// [`closure`] forced through the general work queue, whatever the family.
pub fn closure_queue(state: &LatticeState, family: &UpdateFamily) -> LatticeState {
    let mut out = state.clone();
    queue_closure(&mut out, family);
    out
}

pub(crate) fn closure_in_place(state: &mut LatticeState, family: &UpdateFamily) {
    let table = RuleTable::new(family);
    let sweepable = matches!(state.geometry, Geometry::Window(_))
        && table
            .offsets
            .iter()
            .flatten()
            .all(|&(x, _)| x == -1 || x == 0);
    if sweepable {
        column_sweep(state, &table);
    } else {
        queue_closure(state, family);
    }
}

/// Window closure for families whose offsets all lie in columns -1 and 0. Column `x` then
/// only reads columns `x - 1` and `x`, so columns can be settled left to right.
fn column_sweep(state: &mut LatticeState, table: &RuleTable) {
    let h = state.height as i64;
    // Per rule: row offsets read in column x - 1, then in column x.
    let rules: Vec<(Vec<i64>, Vec<i64>)> = table
        .offsets
        .iter()
        .map(|r| {
            let pick = |c: i64| r.iter().filter(|o| o.0 == c).map(|o| o.1).collect();
            (pick(-1), pick(0))
        })
        .collect();
    // Sites whose rules read `(x, y)`: `y - oy` for every same-column offset.
    let back: Vec<i64> = rules.iter().flat_map(|r| r.1.iter().map(|&y| -y)).collect();
    let at = |col: &[bool], y: i64| y >= 0 && y < h && col[y as usize];
    let fires = |prev: &[bool], cur: &[bool], y: i64| {
        rules
            .iter()
            .any(|(l, c)| l.iter().all(|&o| at(prev, y + o)) && c.iter().all(|&o| at(cur, y + o)))
    };
    let mut prev = vec![false; state.height];
    let mut cur = vec![false; state.height];
    let mut stack: Vec<i64> = Vec::new();
    // One word per row for the current block of 64 columns, so column reads stay in cache.
    let mut block = vec![0u64; state.height];
    for wi in 0..state.stride {
        for (y, b) in block.iter_mut().enumerate() {
            *b = state.words[y * state.stride + wi];
        }
        for bit in 0..64.min(state.width - wi * 64) {
            for (c, b) in cur.iter_mut().zip(&block) {
                *c = b >> bit & 1 == 1;
            }
            for y in 0..h {
                if cur[y as usize] || !fires(&prev, &cur, y) {
                    continue;
                }
                cur[y as usize] = true;
                stack.push(y);
                while let Some(v) = stack.pop() {
                    for &d in &back {
                        let t = v + d;
                        if t >= 0 && t < h && !cur[t as usize] && fires(&prev, &cur, t) {
                            cur[t as usize] = true;
                            stack.push(t);
                        }
                    }
                }
            }
            for (b, &c) in block.iter_mut().zip(&cur) {
                *b |= (c as u64) << bit;
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        for (y, b) in block.iter().enumerate() {
            state.words[y * state.stride + wi] = *b;
        }
    }
}

fn queue_closure(state: &mut LatticeState, family: &UpdateFamily) {
    let table = RuleTable::new(family);
    let w = state.width as i64;
    let h = state.height as i64;
    let torus = matches!(state.geometry, Geometry::Torus { .. });
    let map = move |x: i64, y: i64| -> Option<(usize, usize)> {
        if torus {
            let xx = if x < 0 {
                (x % w + w) % w
            } else if x >= w {
                x % w
            } else {
                x
            };
            let yy = if y < 0 {
                (y % h + h) % h
            } else if y >= h {
                y % h
            } else {
                y
            };
            Some((xx as usize, yy as usize))
        } else if x < 0 || y < 0 || x >= w || y >= h {
            None
        } else {
            Some((x as usize, y as usize))
        }
    };

    let mut queue: VecDeque<(u32, u32)> = VecDeque::new();
    for y in 0..state.height {
        for wi in 0..state.stride {
            let mut word = state.words[y * state.stride + wi];
            while word != 0 {
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                queue.push_back(((wi * 64 + b) as u32, y as u32));
            }
        }
    }

    while let Some((vx, vy)) = queue.pop_front() {
        for &(ri, cx, cy) in &table.candidates {
            let Some((tx, ty)) = map(vx as i64 + cx, vy as i64 + cy) else {
                continue;
            };
            if state.get_local(tx, ty) {
                continue;
            }
            let fires = table.offsets[ri].iter().all(|&(ox, oy)| {
                map(tx as i64 + ox, ty as i64 + oy).is_some_and(|(px, py)| state.get_local(px, py))
            });
            if fires {
                state.set_local(tx, ty);
                queue.push_back((tx as u32, ty as u32));
            }
        }
    }
}

/// True iff the closure of `seeds` on the torus `Z_n^2` is the whole torus.
pub fn percolates(seeds: &[Site], family: &UpdateFamily, n: usize) -> Result<bool> {
    let state = LatticeState::from_sites(Geometry::Torus { n }, seeds.iter().copied())?;
    Ok(closure(&state, family).is_full())
}

/// Default cap on the padding used by [`closure_in_plane`].
pub const DEFAULT_PAD_CAP: i64 = 1 << 14;

/// Closure of a finite set in `Z^2`, computed in a padded window that grows until the
/// infection stays clear of the window edge.
///
/// Fails with [`Error::BudgetExceeded`] when the padding would exceed `pad_cap`, which is
/// what happens for families whose closures of finite sets are infinite.
pub fn closure_in_plane(seeds: &[Site], family: &UpdateFamily, pad_cap: i64) -> Result<Vec<Site>> {
    let Some(bbox) = Rect::bounding(seeds) else {
        return Ok(Vec::new());
    };
    let reach = family.reach().max(1);
    let mut pad = 2 * reach;
    loop {
        let window = bbox.expand(pad);
        let mut state = LatticeState::from_sites(Geometry::Window(window), seeds.iter().copied())?;
        closure_in_place(&mut state, family);
        let sites = state.sites();
        let near_edge = sites.iter().any(|s| {
            s.x - window.min.x < reach
                || window.max.x - s.x < reach
                || s.y - window.min.y < reach
                || window.max.y - s.y < reach
        });
        if !near_edge {
            return Ok(sites);
        }
        pad *= 2;
        if pad > pad_cap {
            return Err(Error::BudgetExceeded(format!(
                "closure kept growing into the pad margin (pad cap {pad_cap})"
            )));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn duarte() -> UpdateFamily {
        UpdateFamily::by_name("duarte").unwrap()
    }

    fn window(r: i64) -> Geometry {
        Geometry::Window(Rect::from_corners(-r, -r, r, r))
    }

    #[test]
    fn step_fills_between_vertical_pair() {
        let s = LatticeState::from_sites(window(3), [Site::new(0, 1), Site::new(0, -1)]).unwrap();
        let t = step(&s, &duarte());
        let mut got = t.sites();
        got.sort();
        assert_eq!(
            got,
            vec![Site::new(0, -1), Site::new(0, 0), Site::new(0, 1)]
        );
    }

    #[test]
    fn empty_and_full_are_fixed() {
        let f = duarte();
        for g in [window(4), Geometry::Torus { n: 7 }] {
            let e = LatticeState::empty(g).unwrap();
            assert!(step(&e, &f).is_empty());
            assert!(closure(&e, &f).is_empty());
            let full = LatticeState::full(g).unwrap();
            assert!(step(&full, &f).is_full());
            assert!(closure(&full, &f).is_full());
        }
    }

    #[test]
    fn closure_examples() {
        let f = duarte();
        let s = LatticeState::from_sites(window(3), [Site::new(0, 0), Site::new(0, 2)]).unwrap();
        let mut got = closure(&s, &f).sites();
        got.sort();
        assert_eq!(got, vec![Site::new(0, 0), Site::new(0, 1), Site::new(0, 2)]);

        let far = LatticeState::from_sites(window(6), [Site::new(0, 0), Site::new(5, 5)]).unwrap();
        assert_eq!(closure(&far, &f), far);
    }

    #[test]
    fn percolation_examples() {
        let f = duarte();
        let all: Vec<Site> = Rect::from_corners(0, 0, 7, 7).sites().collect();
        assert!(percolates(&all, &f, 8).unwrap());
        assert!(!percolates(&[], &f, 8).unwrap());

        // Every second row full, plus one site in each remaining row.
        let mut seeds = Vec::new();
        for y in 0..8 {
            if y % 2 == 0 {
                seeds.extend((0..8).map(|x| Site::new(x, y)));
            } else {
                seeds.push(Site::new(3, y));
            }
        }
        assert!(percolates(&seeds, &f, 8).unwrap());
    }

    #[test]
    fn window_rejects_outside_sites() {
        assert!(LatticeState::from_sites(window(1), [Site::new(5, 0)]).is_err());
        assert!(LatticeState::empty(Geometry::Torus { n: 0 }).is_err());
        // Torus coordinates wrap.
        let t = LatticeState::from_sites(Geometry::Torus { n: 4 }, [Site::new(-1, 5)]).unwrap();
        assert!(t.contains(Site::new(3, 1)));
    }

    #[test]
    fn column_sweep_matches_queue() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let f = duarte();
        for _ in 0..200 {
            let w = Rect::from_corners(-3, 2, rng.random_range(-3..12), rng.random_range(2..14));
            let p = rng.random_range(0.05..0.5);
            let st = LatticeState::from_fn(Geometry::Window(w), |_| rng.random_bool(p)).unwrap();
            assert_eq!(closure(&st, &f), closure_queue(&st, &f));
        }
    }

    #[test]
    fn torus_wraps_rules() {
        // On Z_4^2 a full column 3 plus one seed in column 0 fills column 0 through the wrap.
        let f = duarte();
        let mut seeds: Vec<Site> = (0..4).map(|y| Site::new(3, y)).collect();
        seeds.push(Site::new(0, 2));
        let s = LatticeState::from_sites(Geometry::Torus { n: 4 }, seeds).unwrap();
        let c = closure(&s, &f);
        assert!((0..4).all(|y| c.contains(Site::new(0, y))));
    }

    #[test]
    fn shift_row_wraps_and_truncates() {
        let src = [0b1011u64];
        let mut dst = [0u64];
        shift_row(&src, 4, 1, &mut dst);
        assert_eq!(dst[0], 0b101);
        shift_row(&src, 4, -1, &mut dst);
        assert_eq!(dst[0], 0b0110);
        // Across word boundaries.
        let src = [1u64 << 63, 1];
        let mut dst = [0u64; 2];
        shift_row(&src, 70, 63, &mut dst);
        assert_eq!(dst, [0b11, 0]);
    }

    #[test]
    fn plane_closure_duarte_stays_in_bbox() {
        let seeds = [Site::new(0, 0), Site::new(0, 2), Site::new(1, 1)];
        let got = closure_in_plane(&seeds, &duarte(), DEFAULT_PAD_CAP).unwrap();
        assert_eq!(
            got,
            vec![
                Site::new(0, 0),
                Site::new(1, 0),
                Site::new(0, 1),
                Site::new(1, 1),
                Site::new(0, 2),
                Site::new(1, 2)
            ]
        );
    }

    #[test]
    fn plane_closure_of_supercritical_family_exhausts_budget() {
        let f = UpdateFamily::by_name("r_neighbour(1)").unwrap();
        let err = closure_in_plane(&[Site::ORIGIN], &f, 64).unwrap_err();
        assert!(err.is_budget());
    }

    #[test]
    fn pbm_dump() {
        let s = LatticeState::from_sites(
            Geometry::Window(Rect::from_corners(0, 0, 2, 1)),
            [Site::new(0, 0), Site::new(2, 1)],
        )
        .unwrap();
        assert_eq!(s.to_pbm(), "001\n100\n");
        assert!(s.to_pbm_p1().starts_with("P1\n3 2\n"));
    }
}
