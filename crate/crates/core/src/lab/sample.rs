use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{Site, UpdateFamily};
use crate::lab::stats::Frequency;
use crate::lattice::{closure, Geometry, LatticeState};
use crate::rng::{threshold, trial_rng};
use crate::SCHEMA_VERSION;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub family: UpdateFamily,
    pub n: usize,
    pub p: f64,
    pub trials: u64,
    pub master_seed: u64,
}

impl TrialPlan {
    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "torus side must be >= 2, got {}",
                self.n
            )));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidParameter(format!(
                "p must lie in [0, 1], got {}",
                self.p
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub artifact_version: String,
    /// Seconds since the Unix epoch when the run finished.
    pub timestamp: u64,
    pub plan: TrialPlan,
    pub outcomes: Vec<bool>,
    pub successes: u64,
    pub fraction: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl RunManifest {
    /// Re-runs the plan and reports whether every outcome matches.
    pub fn replays(&self) -> Result<bool> {
        Ok(sample_percolation(&self.plan)?.outcomes == self.outcomes)
    }
}

/// Per-site 32-bit uniforms of one trial, row-major over `Z_n^2`.
pub(crate) fn torus_uniforms(n: usize, master_seed: u64, trial: u64) -> Vec<u32> {
    use rand::RngCore;
    let mut rng = trial_rng(master_seed, trial);
    (0..n * n).map(|_| rng.next_u32()).collect()
}

/// The `p`-random subset of `Z_n^2` used by trial `trial`.
pub fn random_torus_set(n: usize, p: f64, master_seed: u64, trial: u64) -> Vec<Site> {
    let cut = threshold(p);
    torus_uniforms(n, master_seed, trial)
        .into_iter()
        .enumerate()
        .filter(|&(_, u)| (u as u64) < cut)
        .map(|(i, _)| Site::new((i % n) as i64, (i / n) as i64))
        .collect()
}

/// Whether the sites with uniform below `cut` percolate on `Z_n^2`.
pub(crate) fn percolates_at(family: &UpdateFamily, n: usize, uniforms: &[u32], cut: u64) -> bool {
    let mut it = uniforms.iter();
    let state = LatticeState::from_fn(Geometry::Torus { n }, |_| {
        (*it.next().expect("one uniform per site") as u64) < cut
    })
    .expect("torus side validated");
    closure(&state, family).is_full()
}

pub(crate) fn unix_time() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Draws `trials` independent p-random torus sets and records which percolate.
pub fn sample_percolation(plan: &TrialPlan) -> Result<RunManifest> {
    plan.validate()?;
    let cut = threshold(plan.p);
    let outcomes: Vec<bool> = (0..plan.trials)
        .into_par_iter()
        .map(|t| {
            let u = torus_uniforms(plan.n, plan.master_seed, t);
            percolates_at(&plan.family, plan.n, &u, cut)
        })
        .collect();
    let successes = outcomes.iter().filter(|&&o| o).count() as u64;
    let freq = Frequency::new(successes, plan.trials);
    Ok(RunManifest {
        schema_version: SCHEMA_VERSION,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: unix_time(),
        plan: plan.clone(),
        outcomes,
        successes,
        fraction: freq.fraction,
        wilson_lo: freq.lo,
        wilson_hi: freq.hi,
    })
}
