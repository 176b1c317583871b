use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = Z95 * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if successes >= trials {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// An empirical frequency with its Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub successes: u64,
    pub trials: u64,
    pub fraction: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Frequency {
    pub fn new(successes: u64, trials: u64) -> Self {
        let (lo, hi) = wilson(successes, trials);
        Frequency {
            successes,
            trials,
            fraction: if trials == 0 {
                0.0
            } else {
                successes as f64 / trials as f64
            },
            lo,
            hi,
        }
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // 8 of 10 at 95%: (0.4902, 0.9433) from the closed form.
        let (lo, hi) = wilson(8, 10);
        assert!((lo - 0.490_162).abs() < 1e-5, "{lo}");
        assert!((hi - 0.943_318).abs() < 1e-5, "{hi}");
        let (lo, hi) = wilson(0, 50);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
        let (lo, hi) = wilson(50, 50);
        assert!(lo > 0.9 && hi == 1.0);
    }
}
