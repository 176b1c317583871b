use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::UpdateFamily;
use crate::lab::sample::{percolates_at, torus_uniforms};
use crate::lab::stats::Frequency;
use crate::rng::threshold;

/// One bisection probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub p: f64,
    pub frequency: Frequency,
    /// Outcome of each coupled trial at this `p`.
    pub outcomes: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcEstimate {
    pub family: String,
    pub n: usize,
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
    pub tolerance: f64,
    pub trials_per_probe: u64,
    pub master_seed: u64,
    /// Probes in the order they were evaluated.
    pub probes: Vec<Probe>,
}

impl PcEstimate {
    pub fn radius(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// Default bracket width: `1 / (4 log n)`.
pub fn default_tolerance(n: usize) -> f64 {
    1.0 / (4.0 * (n as f64).ln())
}

pub const DEFAULT_TRIALS_PER_PROBE: u64 = 200;

fn probe(family: &UpdateFamily, n: usize, p: f64, trials: u64, seed: u64) -> Probe {
    let cut = threshold(p);
    let outcomes: Vec<bool> = (0..trials)
        .into_par_iter()
        .map(|t| percolates_at(family, n, &torus_uniforms(n, seed, t), cut))
        .collect();
    let s = outcomes.iter().filter(|&&o| o).count() as u64;
    Probe {
        p,
        frequency: Frequency::new(s, trials),
        outcomes,
    }
}

/// Checks that every coupled trial percolates on an up-set of the probed `p` values.
pub fn check_coupling(probes: &[Probe]) -> Result<()> {
    let mut order: Vec<&Probe> = probes.iter().collect();
    order.sort_by(|a, b| a.p.total_cmp(&b.p));
    for w in order.windows(2) {
        for (t, (a, b)) in w[0].outcomes.iter().zip(&w[1].outcomes).enumerate() {
            if *a && !*b {
                return Err(Error::InvariantViolation(format!(
                    "trial {t} percolates at p = {} but not at p = {}",
                    w[0].p, w[1].p
                )));
            }
        }
    }
    Ok(())
}

/// Bisection for the `p` at which the percolation frequency on `Z_n^2` reaches 1/2.
///
/// All probes share the per-site uniforms of each trial, so a single trial's outcome is
/// monotone in `p`; this is asserted over the whole probe ladder.
pub fn estimate_pc(
    family: &UpdateFamily,
    n: usize,
    trials_per_probe: u64,
    tolerance: f64,
    master_seed: u64,
) -> Result<PcEstimate> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be > 0, got {tolerance}"
        )));
    }
    if n < 2 || trials_per_probe == 0 {
        return Err(Error::InvalidParameter(
            "need n >= 2 and at least one trial".into(),
        ));
    }
    let mut probes = vec![
        probe(family, n, 0.0, trials_per_probe, master_seed),
        probe(family, n, 1.0, trials_per_probe, master_seed),
    ];
    let (f0, f1) = (probes[0].frequency.fraction, probes[1].frequency.fraction);
    if f0 >= 0.5 || f1 < 0.5 {
        return Err(Error::DegenerateBracket {
            at_zero: f0,
            at_one: f1,
        });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo >= tolerance {
        let mid = 0.5 * (lo + hi);
        let pr = probe(family, n, mid, trials_per_probe, master_seed);
        if pr.frequency.fraction >= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
        probes.push(pr);
    }
    check_coupling(&probes)?;
    Ok(PcEstimate {
        family: family.label().to_string(),
        n,
        p_hat: 0.5 * (lo + hi),
        lo,
        hi,
        tolerance,
        trials_per_probe,
        master_seed,
        probes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub family: String,
    pub n: usize,
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
    pub normalized: f64,
}

/// `p log n / (log log n)^2`.
pub fn normalize(p: f64, n: usize) -> f64 {
    let ln = (n as f64).ln();
    p * ln / (ln.ln() * ln.ln())
}

/// Critical-probability estimates for every family and every `n`, family-major.
pub fn scaling_sweep(
    families: &[UpdateFamily],
    n_list: &[usize],
    trials: u64,
    seed: u64,
    tolerance: Option<f64>,
) -> Result<Vec<SweepRow>> {
    if n_list.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter(
            "n_list must be nondecreasing".into(),
        ));
    }
    let mut rows = Vec::with_capacity(families.len() * n_list.len());
    for f in families {
        for &n in n_list {
            let est = estimate_pc(
                f,
                n,
                trials,
                tolerance.unwrap_or(default_tolerance(n)),
                seed,
            )?;
            rows.push(SweepRow {
                family: f.label().to_string(),
                n,
                p_hat: est.p_hat,
                lo: est.lo,
                hi: est.hi,
                normalized: normalize(est.p_hat, n),
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("family,n,p_hat,lo,hi,normalized\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.family, r.n, r.p_hat, r.lo, r.hi, r.normalized
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_estimate_is_coupled_and_bracketed() {
        let f = UpdateFamily::by_name("duarte").unwrap();
        let e = estimate_pc(&f, 16, 24, 0.05, 3).unwrap();
        assert!(e.lo <= e.p_hat && e.p_hat <= e.hi && e.hi - e.lo < 0.05);
        check_coupling(&e.probes).unwrap();
        assert_eq!(e.probes[0].p, 0.0);
        assert_eq!(e.probes[1].p, 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        let f = UpdateFamily::by_name("duarte").unwrap();
        assert!(estimate_pc(&f, 16, 10, 0.0, 1).is_err());
        assert!(scaling_sweep(&[f], &[32, 16], 10, 1, None).is_err());
    }

    #[test]
    fn csv_header() {
        let rows = vec![SweepRow {
            family: "duarte".into(),
            n: 64,
            p_hat: 0.25,
            lo: 0.2,
            hi: 0.3,
            normalized: normalize(0.25, 64),
        }];
        let csv = sweep_csv(&rows);
        assert!(csv.starts_with("family,n,p_hat,lo,hi,normalized\nduarte,64,0.25,0.2,0.3,"));
    }
}
