use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lab::sample::torus_uniforms;
use crate::lab::stats::Frequency;
use crate::rng::threshold;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineCheck {
    pub n: usize,
    pub p: f64,
    /// Length of the runs that must each meet the random set.
    pub run_length: usize,
    pub frequency: Frequency,
    /// `1 - 2 n^2 (1 - p)^{1/p^3}`.
    pub bound: f64,
}

/// Longest cyclic run of `false` in `row`.
fn longest_gap(row: impl Iterator<Item = bool> + Clone, len: usize) -> usize {
    let hits: Vec<usize> = row
        .enumerate()
        .filter(|(_, b)| *b)
        .map(|(i, _)| i)
        .collect();
    match hits.len() {
        0 => len,
        m => (0..m)
            .map(|j| {
                let next = if j + 1 < m {
                    hits[j + 1]
                } else {
                    hits[0] + len
                };
                next - hits[j] - 1
            })
            .max()
            .unwrap_or(0),
    }
}

/// Frequency with which every horizontal and vertical cyclic run of `ceil(1/p^3)` sites of
/// `Z_n^2` contains a site of a p-random set.
pub fn no_empty_line_check(n: usize, p: f64, seed: u64, trials: u64) -> Result<LineCheck> {
    if n < 1 || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "need n >= 1 and p in [0, 1], got n = {n}, p = {p}"
        )));
    }
    let run = if p == 0.0 {
        n
    } else {
        let r = (1.0 / (p * p * p)).ceil();
        if r >= n as f64 {
            return Err(Error::Precondition(format!(
                "1/p^3 = {r} must be below n = {n}"
            )));
        }
        r as usize
    };
    let cut = threshold(p);
    let ok = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let u = torus_uniforms(n, seed, t);
            let hit = |x: usize, y: usize| (u[y * n + x] as u64) < cut;
            (0..n).all(|y| longest_gap((0..n).map(move |x| hit(x, y)), n) < run)
                && (0..n).all(|x| longest_gap((0..n).map(move |y| hit(x, y)), n) < run)
        })
        .count() as u64;
    let bound = 1.0 - 2.0 * (n * n) as f64 * (1.0 - p).powf(1.0 / (p * p * p));
    Ok(LineCheck {
        n,
        p,
        run_length: run,
        frequency: Frequency::new(ok, trials),
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes() {
        assert_eq!(
            no_empty_line_check(20, 1.0, 1, 5)
                .unwrap()
                .frequency
                .fraction,
            1.0
        );
        assert_eq!(
            no_empty_line_check(20, 0.0, 1, 5)
                .unwrap()
                .frequency
                .fraction,
            0.0
        );
        assert!(no_empty_line_check(20, 0.2, 1, 5).is_err());
    }

    #[test]
    fn cyclic_gaps() {
        let row = [true, false, false, true, false];
        assert_eq!(longest_gap(row.iter().copied(), 5), 2);
        let row = [false, true, false, false, false];
        assert_eq!(longest_gap(row.iter().copied(), 5), 4);
    }

    #[test]
    fn bound_is_reported() {
        let c = no_empty_line_check(200, 0.5, 3, 10).unwrap();
        assert_eq!(c.run_length, 8);
        assert!((c.bound - (1.0 - 80000.0 * 0.5f64.powf(8.0))).abs() < 1e-9);
    }
}
