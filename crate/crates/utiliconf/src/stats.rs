//! Concentration bounds, sample-size formulas, and the incremental
//! utility/completion estimators the selection procedures share.

use crate::error::{Error, Result};

/// Plain Hoeffding radius √(ln(1/δ)/(2m)) for a [0,1]-valued mean.
pub fn hoeffding_radius(m: usize, delta: f64) -> f64 {
    ((1.0 / delta).ln() / (2.0 * m as f64)).sqrt()
}

/// Confidence radius for arm bounds after m runs at captime κ, sized so
/// that all bounds over all arms, sample counts, and captime doublings
/// hold simultaneously with probability 1 − δ.
pub fn doubling_alpha(n: usize, m: usize, kappa: f64, delta: f64) -> f64 {
    let levels = kappa.log2() + 1.0;
    let count = 11.0 * n as f64 * (m as f64).powi(2) * levels * levels;
    ((count / delta).ln() / (2.0 * m as f64)).sqrt()
}

/// Worst-case suboptimality guarantee after m synchronized runs per arm.
/// Strictly decreasing in m for m ≥ 2.
pub fn theoretical_epsilon(n: usize, m: usize, delta: f64) -> f64 {
    let count = 11.0 * n as f64 * (m as f64).powi(4);
    3.0 * ((count / delta).ln() / (2.0 * m as f64)).sqrt()
}

/// Smallest m whose [`theoretical_epsilon`] is at most `eps`.
pub fn m_for_epsilon(n: usize, delta: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {eps} must be positive"
        )));
    }
    let mut hi: usize = 2;
    while theoretical_epsilon(n, hi, delta) > eps {
        hi = hi.checked_mul(2).ok_or_else(|| {
            Error::InvalidParameter(format!("epsilon {eps} needs more than usize::MAX runs"))
        })?;
    }
    let mut lo: usize = 1;
    // invariant: theoretical_epsilon(hi) <= eps < theoretical_epsilon(lo)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if theoretical_epsilon(n, mid, delta) <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Confidence radius for the runtime-oracle baseline after m uncapped runs.
pub fn oracle_alpha(n: usize, m: usize, delta: f64) -> f64 {
    let count = 4.0 * n as f64 * (m as f64).powi(2);
    ((count / delta).ln() / (2.0 * m as f64)).sqrt()
}

/// Runs per arm the fixed-captime procedure needs for an (ε, δ) guarantee
/// at captime κ; infeasible when u(κ) ≥ ε.
pub fn fixed_captime_sample_size(n: usize, eps: f64, delta: f64, u_kappa: f64) -> Result<usize> {
    if !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need eps > 0 and delta in (0,1), got eps {eps}, delta {delta}"
        )));
    }
    if u_kappa >= eps {
        return Err(Error::Infeasible(format!(
            "captime utility {u_kappa} is not below epsilon {eps}; no sample size suffices"
        )));
    }
    let m = 2.0 * (2.0 * n as f64 / delta).ln() / (eps - u_kappa).powi(2);
    Ok(m.ceil() as usize)
}

/// Two-sided bounds on the uncapped expected utility from capped samples.
///
/// Utilities of κ-capped runs live in [u(κ), 1], so the empirical mean
/// concentrates with radius (1 − u(κ))·α; the unobserved tail is bounded
/// by u(κ) times the (also α-uncertain) incompletion rate. Bounds are not
/// clamped to [0, 1].
pub fn confidence_bounds(u_hat: f64, f_hat: f64, alpha: f64, u_kappa: f64) -> (f64, f64) {
    let lcb = u_hat - alpha - u_kappa * (1.0 - f_hat);
    let ucb = u_hat + (1.0 - u_kappa) * alpha;
    (lcb, ucb)
}

/// Index of the best lower bound, lowest index winning ties.
pub fn incumbent(lcbs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &l) in lcbs.iter().enumerate().skip(1) {
        if l > lcbs[best] {
            best = i;
        }
    }
    best
}

/// Suboptimality certificate from one round's bounds: the gap between the
/// best upper bound in the round set and the incumbent's lower bound.
pub fn anytime_epsilon(bounds: &[(f64, f64)]) -> f64 {
    let lcbs: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    let star = incumbent(&lcbs);
    let max_ucb = bounds.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
    (max_ucb - bounds[star].0).max(0.0)
}

/// Kahan-compensated running mean of capped-run utilities plus the
/// completion rate, rebuilt from scratch whenever the captime changes.
#[derive(Debug, Clone, Default)]
pub struct AlgorithmStats {
    m: usize,
    sum: f64,
    carry: f64,
    completed: usize,
}

impl AlgorithmStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, utility: f64, completed: bool) {
        let y = utility - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
        self.m += 1;
        if completed {
            self.completed += 1;
        }
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Empirical mean utility of the capped runs seen so far.
    pub fn u_hat(&self) -> f64 {
        if self.m == 0 {
            0.0
        } else {
            self.sum / self.m as f64
        }
    }

    /// Fraction of runs that completed strictly before their captime.
    pub fn f_hat(&self) -> f64 {
        if self.m == 0 {
            0.0
        } else {
            self.completed as f64 / self.m as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hoeffding_radius_hand_value() {
        assert_relative_eq!(
            hoeffding_radius(200, 0.05),
            0.08654091913011426,
            epsilon = 1e-15
        );
    }

    #[test]
    fn doubling_alpha_hand_values() {
        assert_relative_eq!(
            doubling_alpha(2, 1, 1.0, 0.1),
            1.6421978483654704,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            doubling_alpha(5, 100_000, 64.0, 0.1),
            0.012889451017455632,
            epsilon = 1e-15
        );
    }

    #[test]
    fn theoretical_epsilon_hand_value_and_monotonicity() {
        assert_relative_eq!(
            theoretical_epsilon(10, 10_000, 0.05),
            0.1415694471178828,
            epsilon = 1e-15
        );
        let mut prev = theoretical_epsilon(10, 2, 0.05);
        for m in 3..2000 {
            let cur = theoretical_epsilon(10, m, 0.05);
            assert!(cur < prev, "not strictly decreasing at m = {m}");
            prev = cur;
        }
    }

    #[test]
    fn m_for_epsilon_is_the_threshold() {
        for (eps, expect) in [(0.1, 20731usize), (0.15, 8501), (0.2, 4495)] {
            let m = m_for_epsilon(5, 0.1, eps).unwrap();
            assert_eq!(m, expect);
            assert!(theoretical_epsilon(5, m, 0.1) <= eps);
            assert!(theoretical_epsilon(5, m - 1, 0.1) > eps);
        }
        assert!(m_for_epsilon(5, 0.1, 0.0).is_err());
    }

    #[test]
    fn fixed_captime_sample_sizes() {
        assert_eq!(fixed_captime_sample_size(10, 0.2, 0.1, 0.1).unwrap(), 1060);
        assert_eq!(fixed_captime_sample_size(5, 0.2, 0.1, 0.1).unwrap(), 922);
        assert!(matches!(
            fixed_captime_sample_size(10, 0.2, 0.1, 0.25),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            fixed_captime_sample_size(10, 0.2, 0.1, 0.2),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn confidence_bounds_formulas() {
        let (lcb, ucb) = confidence_bounds(0.8, 0.75, 0.1, 0.4);
        assert_relative_eq!(lcb, 0.8 - 0.1 - 0.4 * 0.25);
        assert_relative_eq!(ucb, 0.8 + 0.6 * 0.1);
        // bounds are never clamped
        let (lcb, ucb) = confidence_bounds(0.05, 0.0, 0.3, 0.9);
        assert!(lcb < 0.0);
        let (_, ucb2) = confidence_bounds(0.99, 1.0, 0.3, 0.0);
        assert!(ucb2 > 1.0);
        let _ = ucb;
    }

    #[test]
    fn incumbent_breaks_ties_low() {
        assert_eq!(incumbent(&[0.4, 0.9, 0.9, 0.1]), 1);
        assert_eq!(incumbent(&[0.5]), 0);
    }

    #[test]
    fn anytime_epsilon_is_gap_to_best_ucb() {
        // incumbent is arm 0; arm 1's ucb dominates
        let eps = anytime_epsilon(&[(0.6, 0.7), (0.5, 0.9)]);
        assert_relative_eq!(eps, 0.3);
        // never negative
        let eps = anytime_epsilon(&[(0.6, 0.45), (0.1, 0.2)]);
        assert_relative_eq!(eps, 0.0);
    }

    #[test]
    fn stats_mean_matches_hand_value() {
        // utilities 11/12, 3/4, 1/2, 3/8 -> mean 61/96
        let mut s = AlgorithmStats::new();
        for (v, c) in [
            (11.0 / 12.0, true),
            (0.75, true),
            (0.5, true),
            (0.375, false),
        ] {
            s.push(v, c);
        }
        assert_eq!(s.m(), 4);
        assert_relative_eq!(s.u_hat(), 61.0 / 96.0, epsilon = 1e-15);
        assert_relative_eq!(s.f_hat(), 0.75);
    }

    #[test]
    fn kahan_sum_stays_exact_over_many_pushes() {
        let mut s = AlgorithmStats::new();
        for _ in 0..1_000_000 {
            s.push(0.1, true);
        }
        assert!((s.u_hat() - 0.1).abs() < 1e-15);
    }
}
