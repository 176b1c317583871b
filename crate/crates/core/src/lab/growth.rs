//! The rectangle-growth route to percolation of the Duarte model, checked stage by stage.
//!
//! Each event pre-infects the set the route assumes is already infected, samples only the
//! fresh part of its window, runs the closure with an absorbing window boundary, and tests
//! the target. Real-valued rectangle dimensions are rounded down.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Site, UpdateFamily};
use crate::lab::stats::Frequency;
use crate::lattice::{closure, Geometry, LatticeState, Rect};
use crate::rng::SiteSampler;
use crate::SCHEMA_VERSION;

/// Default cap on the sites of one event window.
pub const DEFAULT_MAX_SITES: u64 = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    pub epsilon: f64,
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
    pub max_sites: u64,
}

impl GrowthConfig {
    pub fn new(epsilon: f64, p: f64, trials: u64, seed: u64) -> Self {
        GrowthConfig {
            epsilon,
            p,
            trials,
            seed,
            max_sites: DEFAULT_MAX_SITES,
        }
    }
}

/// A rectangle with its real-valued corners and the rounded lattice rectangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedRect {
    pub name: String,
    pub real: [f64; 4],
    pub rect: Rect,
}

/// One event of the construction, ready to simulate.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthEvent {
    pub stage: String,
    pub event: String,
    pub window: Rect,
    pub preinfected: Vec<Rect>,
    pub target: Rect,
    pub bound: f64,
    /// True when the target already lies inside the pre-infected set.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthStageReport {
    pub stage: String,
    pub event: String,
    pub window: Rect,
    pub target: Rect,
    pub frequency: Frequency,
    pub bound: f64,
    /// Standard deviation of a frequency whose true value equals `bound`.
    pub sigma: f64,
    /// `empirical >= bound - 2 sigma`.
    pub passes: bool,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub schema_version: u32,
    pub epsilon_requested: f64,
    pub epsilon: f64,
    pub k: u32,
    pub p: f64,
    pub h: f64,
    pub widths: Vec<f64>,
    pub rectangles: Vec<NamedRect>,
    pub trials: u64,
    pub seed: u64,
    /// Bound `p^{floor(h/2)+1}` as printed for the first column, next to the one used.
    pub r0_printed_bound: f64,
    pub stages: Vec<GrowthStageReport>,
}

impl GrowthReport {
    pub fn all_pass(&self) -> bool {
        self.stages.iter().all(|s| s.passes)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("stage,event,emp,lo,hi,bound\n");
        for r in &self.stages {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.stage, r.event, r.frequency.fraction, r.frequency.lo, r.frequency.hi, r.bound
            ));
        }
        s
    }
}

/// Rectangle geometry of the construction.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthGeometry {
    pub epsilon: f64,
    pub k: u32,
    pub p: f64,
    pub h: f64,
    /// Real widths `w_i = p^{-1-i eps}`, `i = 1..=k`.
    pub w: Vec<f64>,
    /// Cumulative rounded widths `X_0 = 0, X_i = X_{i-1} + floor(w_i)`.
    pub x: Vec<i64>,
    pub r: Vec<Rect>,
    pub r_prime: Vec<Rect>,
    pub r0_hat: Rect,
    pub r1_hat: Rect,
    pub r1_hat_prime: Rect,
    pub r2_hat: Rect,
    pub big: Rect,
    pub rectangles: Vec<NamedRect>,
}

fn fl(v: f64) -> i64 {
    v.floor() as i64
}

impl GrowthGeometry {
    pub fn new(epsilon: f64, p: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1], got {epsilon}"
            )));
        }
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p must lie in (0, 1), got {p}"
            )));
        }
        let k = (1.0 / epsilon - 1e-9).ceil().max(1.0) as u32;
        let eps = 1.0 / k as f64;
        let lp = (1.0 / p).ln();
        let h = eps / p * lp;
        let w: Vec<f64> = (1..=k).map(|i| p.powf(-1.0 - i as f64 * eps)).collect();
        let mut x = vec![0i64];
        for wi in &w {
            x.push(x.last().unwrap() + fl(*wi));
        }
        let top = |i: u32| fl(i as f64 * h);
        let mut names = Vec::new();
        let mut r = vec![Rect::from_corners(0, 0, 0, top(1))];
        let mut r_prime = vec![r[0]];
        names.push(NamedRect {
            name: "R_0".into(),
            real: [0.0, 0.0, 0.0, h],
            rect: r[0],
        });
        let mut xr = 0.0;
        for i in 1..=k as usize {
            let x0 = x[i - 1] + 1;
            let ri = Rect::from_corners(x0, 0, x[i], top(i as u32));
            let rpi = Rect::from_corners(x0, 0, x[i], top(i as u32 + 1));
            let real_x0 = 1.0 + xr;
            xr += w[i - 1];
            names.push(NamedRect {
                name: format!("R_{i}"),
                real: [real_x0, 0.0, xr, i as f64 * h],
                rect: ri,
            });
            names.push(NamedRect {
                name: format!("R_{i}'"),
                real: [real_x0, 0.0, xr, (i + 1) as f64 * h],
                rect: rpi,
            });
            r.push(ri);
            r_prime.push(rpi);
        }
        let w_hat = xr;
        let xk = x[k as usize];
        let h0 = (1.0 + eps) / p * lp;
        let r0_hat = Rect::from_corners(0, 0, xk, fl(h0));
        let w1 = p.powf(-2.0 - eps);
        let h1p = p.powf(-1.0 - eps / 2.0);
        let x1 = xk + fl(w1);
        let r1_hat = Rect::from_corners(xk + 1, 0, x1, fl(h0));
        let r1_hat_prime = Rect::from_corners(xk + 1, 0, x1, fl(h1p));
        let a = p.powi(-5);
        let b = p.powi(-3);
        let r2_hat = Rect::from_corners(x1 + 1, 0, fl(a), fl(h1p));
        let big = Rect::from_corners(0, 0, fl(a), fl(b));
        names.extend([
            NamedRect {
                name: "R0hat".into(),
                real: [0.0, 0.0, w_hat, h0],
                rect: r0_hat,
            },
            NamedRect {
                name: "R1hat".into(),
                real: [w_hat + 1.0, 0.0, w_hat + w1, h0],
                rect: r1_hat,
            },
            NamedRect {
                name: "R1hat_prime".into(),
                real: [w_hat + 1.0, 0.0, w_hat + w1, h1p],
                rect: r1_hat_prime,
            },
            NamedRect {
                name: "R2hat".into(),
                real: [w_hat + w1 + 1.0, 0.0, a, h1p],
                rect: r2_hat,
            },
            NamedRect {
                name: "R".into(),
                real: [0.0, 0.0, a, b],
                rect: big,
            },
        ]);
        Ok(GrowthGeometry {
            epsilon: eps,
            k,
            p,
            h,
            w,
            x,
            r,
            r_prime,
            r0_hat,
            r1_hat,
            r1_hat_prime,
            r2_hat,
            big,
            rectangles: names,
        })
    }

    /// Every event in route order, with its analytic lower bound.
    pub fn events(&self) -> Vec<GrowthEvent> {
        let (p, eps, h) = (self.p, self.epsilon, self.h);
        let lp = (1.0 / p).ln();
        let mut ev = Vec::new();
        let r0 = self.r[0];
        // Every second site of the column, both ends included, suffices.
        let needed = (r0.height() / 2 + 1) as i32;
        ev.push(GrowthEvent {
            stage: "0".into(),
            event: "R0_fill".into(),
            window: r0,
            preinfected: vec![],
            target: r0,
            bound: p.powi(needed),
            degenerate: false,
        });
        for i in 1..=self.k as usize {
            let fi = i as f64;
            let prev_edge = self.r_prime[i - 1].right_edge();
            let ri = self.r[i];
            let rpi = self.r_prime[i];
            let vertical = p.powf((1.0 - fi * eps + eps * eps) * h / 2.0);
            ev.push(GrowthEvent {
                stage: i.to_string(),
                event: "rightward".into(),
                window: prev_edge.hull(&ri),
                preinfected: vec![prev_edge],
                target: ri,
                bound: (1.0 - p.powf(fi * eps)).powf(self.w[i - 1]),
                degenerate: false,
            });
            ev.push(GrowthEvent {
                stage: i.to_string(),
                event: "upward".into(),
                window: rpi,
                preinfected: vec![ri],
                target: rpi.right_edge(),
                bound: vertical,
                degenerate: rpi.height() <= ri.height(),
            });
            ev.push(GrowthEvent {
                stage: i.to_string(),
                event: "step".into(),
                window: prev_edge.hull(&rpi),
                preinfected: vec![prev_edge],
                target: rpi.right_edge(),
                bound: (-2.0 / p).exp() * vertical,
                degenerate: false,
            });
        }
        let h0 = (1.0 + eps) / p * lp;
        let w1 = p.powf(-2.0 - eps);
        let h1p = p.powf(-1.0 - eps / 2.0);
        let w_hat: f64 = self.w.iter().sum();
        let w2 = p.powi(-5) - w_hat - w1;
        let hr = p.powi(-3);
        ev.push(GrowthEvent {
            stage: "hat".into(),
            event: "R0hat".into(),
            window: self.r0_hat,
            preinfected: vec![],
            target: self.r0_hat.right_edge(),
            bound: (-(1.0 + 2.0 * eps) / (4.0 * p) * lp * lp).exp(),
            degenerate: false,
        });
        let e0 = self.r0_hat.right_edge();
        ev.push(GrowthEvent {
            stage: "hat".into(),
            event: "R1hat".into(),
            window: e0.hull(&self.r1_hat),
            preinfected: vec![e0],
            target: self.r1_hat,
            bound: (1.0 - (1.0 - p).powf(h0)).powf(w1),
            degenerate: false,
        });
        ev.push(GrowthEvent {
            stage: "hat".into(),
            event: "R1hat_prime".into(),
            window: self.r1_hat.hull(&self.r1_hat_prime),
            preinfected: vec![self.r1_hat],
            target: self.r1_hat_prime.right_edge(),
            bound: (1.0 - (1.0 - p).powf(w1 / h1p)).powf(h1p / 2.0),
            degenerate: self.r1_hat_prime.height() <= self.r1_hat.height(),
        });
        let e1 = self.r1_hat_prime.right_edge();
        ev.push(GrowthEvent {
            stage: "hat".into(),
            event: "R2hat".into(),
            window: e1.hull(&self.r2_hat),
            preinfected: vec![e1],
            target: self.r2_hat,
            bound: (1.0 - (1.0 - p).powf(h1p)).powf(w2),
            degenerate: false,
        });
        ev.push(GrowthEvent {
            stage: "hat".into(),
            event: "R".into(),
            window: self.big,
            preinfected: vec![self.r2_hat],
            target: self.big.right_edge(),
            bound: (1.0 - (1.0 - p).powf(w2 / hr)).powf(hr / 2.0),
            degenerate: false,
        });
        ev
    }
}

/// Success frequency of one event. Trial `t` of event number `index` reads random stream
/// `(index << 32) | t`.
pub fn run_event(
    event: &GrowthEvent,
    family: &UpdateFamily,
    p: f64,
    trials: u64,
    seed: u64,
    index: u64,
    max_sites: u64,
) -> Result<Frequency> {
    if event.window.area() > max_sites {
        return Err(Error::BudgetExceeded(format!(
            "event {} needs {} sites (limit {max_sites})",
            event.event,
            event.window.area()
        )));
    }
    let geometry = Geometry::Window(event.window);
    let ok = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<bool> {
            let mut rng = SiteSampler::new(seed, (index << 32) | t, p);
            let state = LatticeState::from_fn(geometry, |s| {
                let fresh = rng.next();
                event.preinfected.iter().any(|r| r.contains(s)) || fresh
            })?;
            Ok(closure(&state, family).covers(&event.target))
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&b| b)
        .count() as u64;
    Ok(Frequency::new(ok, trials))
}

/// Runs every event of the construction and compares each frequency with its bound.
pub fn growth_construction(cfg: &GrowthConfig) -> Result<GrowthReport> {
    let geo = GrowthGeometry::new(cfg.epsilon, cfg.p)?;
    let family = UpdateFamily::by_name("duarte")?;
    let events = geo.events();
    if let Some(e) = events.iter().find(|e| e.window.area() > cfg.max_sites) {
        return Err(Error::BudgetExceeded(format!(
            "event {} needs {} sites (limit {})",
            e.event,
            e.window.area(),
            cfg.max_sites
        )));
    }
    let mut stages = Vec::with_capacity(events.len());
    for (i, e) in events.iter().enumerate() {
        let freq = run_event(
            e,
            &family,
            cfg.p,
            cfg.trials,
            cfg.seed,
            i as u64,
            cfg.max_sites,
        )?;
        let sigma = (e.bound * (1.0 - e.bound) / cfg.trials.max(1) as f64).sqrt();
        stages.push(GrowthStageReport {
            stage: e.stage.clone(),
            event: e.event.clone(),
            window: e.window,
            target: e.target,
            frequency: freq,
            bound: e.bound,
            sigma,
            passes: freq.fraction >= e.bound - 2.0 * sigma,
            degenerate: e.degenerate,
        });
    }
    Ok(GrowthReport {
        schema_version: SCHEMA_VERSION,
        epsilon_requested: cfg.epsilon,
        epsilon: geo.epsilon,
        k: geo.k,
        p: cfg.p,
        h: geo.h,
        widths: geo.w.clone(),
        rectangles: geo.rectangles.clone(),
        trials: cfg.trials,
        seed: cfg.seed,
        r0_printed_bound: cfg.p.powf((geo.h / 2.0).floor() + 1.0),
        stages,
    })
}

/// With `rect` fully infected and one extra site two rows above it at column `x0`, the
/// closure in the window `rect` plus two rows contains both new rows from `x0` rightwards.
pub fn two_row_fill_holds(rect: Rect, x0: i64) -> Result<bool> {
    let family = UpdateFamily::by_name("duarte")?;
    let window = Rect::from_corners(rect.min.x, rect.min.y, rect.max.x, rect.max.y + 2);
    let extra = Site::new(x0, rect.max.y + 2);
    let state =
        LatticeState::from_fn(Geometry::Window(window), |s| rect.contains(s) || s == extra)?;
    let cl = closure(&state, &family);
    let rows = Rect::from_corners(x0, rect.max.y + 1, rect.max.x, rect.max.y + 2);
    Ok(cl.covers(&rows))
}

/// With column `x - 1` infected over `[y_lo, y_hi]` and one seed at `(x, y0)`, the closure
/// fills column `x` over the same range.
pub fn column_fill_holds(x: i64, y_lo: i64, y_hi: i64, y0: i64) -> Result<bool> {
    let family = UpdateFamily::by_name("duarte")?;
    let window = Rect::from_corners(x - 1, y_lo, x, y_hi);
    let state = LatticeState::from_fn(Geometry::Window(window), |s| {
        s.x == x - 1 || s == Site::new(x, y0)
    })?;
    Ok(closure(&state, &family).covers(&Rect::from_corners(x, y_lo, x, y_hi)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_at_reference_point() {
        let g = GrowthGeometry::new(0.25, 0.15).unwrap();
        assert_eq!(g.k, 4);
        assert!((g.h - 0.25 / 0.15 * (1.0f64 / 0.15).ln()).abs() < 1e-12);
        assert_eq!(g.r[0], Rect::from_corners(0, 0, 0, 3));
        assert_eq!(g.r[1].min.x, 1);
        assert_eq!(g.r[1].max.x, 10);
        // Consecutive rectangles are adjacent.
        for i in 1..g.r.len() - 1 {
            assert_eq!(g.r[i].max.x + 1, g.r[i + 1].min.x);
        }
        assert_eq!(g.r0_hat.right_edge(), g.r_prime[4].right_edge());
    }

    #[test]
    fn epsilon_is_rounded_to_a_unit_fraction() {
        let g = GrowthGeometry::new(0.3, 0.15).unwrap();
        assert_eq!(g.k, 4);
        assert_eq!(g.epsilon, 0.25);
    }

    #[test]
    fn sanity_path_with_everything_infected() {
        let g = GrowthGeometry::new(0.25, 0.15).unwrap();
        let f = UpdateFamily::by_name("duarte").unwrap();
        for (i, e) in g
            .events()
            .iter()
            .enumerate()
            .filter(|(_, e)| e.window.area() < 200_000)
        {
            let fr = run_event(e, &f, 1.0, 2, 9, i as u64, DEFAULT_MAX_SITES).unwrap();
            assert_eq!(fr.fraction, 1.0, "{}", e.event);
        }
    }

    #[test]
    fn deterministic_mechanisms() {
        let rect = Rect::from_corners(0, 0, 30, 5);
        for x0 in [0, 7, 30] {
            assert!(two_row_fill_holds(rect, x0).unwrap());
        }
        for y0 in [0, 3, 9] {
            assert!(column_fill_holds(4, 0, 9, y0).unwrap());
        }
    }

    #[test]
    fn memory_guard() {
        let mut cfg = GrowthConfig::new(0.25, 0.15, 1, 1);
        cfg.max_sites = 1000;
        assert!(growth_construction(&cfg).unwrap_err().is_budget());
    }
}
