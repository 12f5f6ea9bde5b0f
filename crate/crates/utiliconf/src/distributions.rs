//! Analytic runtime distributions used as ground truth.
//!
//! Each distribution exposes the right-continuous CDF P(T ≤ t), its strict
//! companion P(T < t), quantiles, inverse-transform sampling, and exact
//! expected utilities under a captime. Completion under a captime κ is
//! strict: a run completes iff t < κ, so all hidden mass is P(T ≥ κ).
//!
//! Expected utilities for the continuous families are computed by adaptive
//! composite Simpson quadrature (relative tolerance 1e-9) with the domain
//! split at utility and distribution knots, decade-chunked when it spans
//! more than two orders of magnitude, and the mass beyond the
//! 1 − 1e-12 quantile added analytically.

use crate::error::{Error, Result};
use crate::utility::UtilityFunction;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Relative tolerance for adaptive quadrature.
const QUAD_REL_TOL: f64 = 1e-9;
/// Mass beyond this quantile is folded into an analytic tail term.
const QUAD_TAIL_MASS: f64 = 1e-12;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / SQRT_2)
}

fn normal_quantile(p: f64) -> f64 {
    -SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p)
}

/// A runtime distribution over t > 0.
#[derive(Debug, Clone, PartialEq)]
pub enum RuntimeDistribution {
    /// Point masses at strictly increasing positive times.
    Discrete { atoms: Vec<(f64, f64)> },
    /// ln T ~ Normal(mu, sigma²).
    LogNormal { mu: f64, sigma: f64 },
    /// P(T > t) = (min_runtime/t)^shape for t ≥ min_runtime.
    Pareto { min_runtime: f64, shape: f64 },
    /// Convex combination of component distributions.
    Mixture {
        components: Vec<(f64, RuntimeDistribution)>,
    },
    /// Agrees with `base` below `cut`; all mass at or above `cut` is moved
    /// to a single atom at `atom` ≥ `cut`.
    TruncatedExtension {
        base: Box<RuntimeDistribution>,
        cut: f64,
        atom: f64,
    },
}

impl RuntimeDistribution {
    /// Point-mass distribution. Times must be finite, positive, strictly
    /// increasing; probabilities positive and summing to 1 within 1e-9.
    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter(
                "discrete distribution needs at least one atom".into(),
            ));
        }
        for &(t, p) in &atoms {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "atom time {t} must be finite and positive"
                )));
            }
            if !p.is_finite() || p <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "atom probability {p} must be finite and positive"
                )));
            }
        }
        for w in atoms.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidParameter(
                    "atom times must be strictly increasing".into(),
                ));
            }
        }
        let total: f64 = atoms.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "atom probabilities sum to {total}, expected 1"
            )));
        }
        let atoms = atoms.into_iter().map(|(t, p)| (t, p / total)).collect();
        Ok(Self::Discrete { atoms })
    }

    /// Log-normal distribution of runtimes.
    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "log-normal mu {mu} must be finite"
            )));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "log-normal sigma {sigma} must be finite and positive"
            )));
        }
        Ok(Self::LogNormal { mu, sigma })
    }

    /// Pareto distribution with scale `min_runtime` and exponent `shape`.
    pub fn pareto(min_runtime: f64, shape: f64) -> Result<Self> {
        if !min_runtime.is_finite() || min_runtime <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "pareto min_runtime {min_runtime} must be finite and positive"
            )));
        }
        if !shape.is_finite() || shape <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "pareto shape {shape} must be finite and positive"
            )));
        }
        Ok(Self::Pareto { min_runtime, shape })
    }

    /// Mixture of distributions. Weights must be positive and sum to 1
    /// within 1e-9.
    pub fn mixture(components: Vec<(f64, RuntimeDistribution)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter(
                "mixture needs at least one component".into(),
            ));
        }
        for &(w, _) in &components {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "mixture weight {w} must be finite and positive"
                )));
            }
        }
        let total: f64 = components.iter().map(|&(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        let components = components
            .into_iter()
            .map(|(w, d)| (w / total, d))
            .collect();
        Ok(Self::Mixture { components })
    }

    /// Extension of `base` that keeps its law below `cut` and concentrates
    /// everything else at `atom`.
    pub fn truncated_extension(base: RuntimeDistribution, cut: f64, atom: f64) -> Result<Self> {
        if !cut.is_finite() || cut <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "truncation cut {cut} must be finite and positive"
            )));
        }
        if !atom.is_finite() || atom < cut {
            return Err(Error::InvalidParameter(format!(
                "extension atom {atom} must be finite and at least the cut {cut}"
            )));
        }
        Ok(Self::TruncatedExtension {
            base: Box::new(base),
            cut,
            atom,
        })
    }

    /// P(T ≤ t).
    pub fn cdf(&self, t: f64) -> f64 {
        if t.is_nan() {
            return f64::NAN;
        }
        match *self {
            Self::Discrete { ref atoms } => atoms
                .iter()
                .take_while(|&&(a, _)| a <= t)
                .map(|&(_, p)| p)
                .sum(),
            Self::LogNormal { mu, sigma } => {
                if t <= 0.0 {
                    0.0
                } else {
                    normal_cdf((t.ln() - mu) / sigma)
                }
            }
            Self::Pareto { min_runtime, shape } => {
                if t <= min_runtime {
                    0.0
                } else {
                    1.0 - (min_runtime / t).powf(shape)
                }
            }
            Self::Mixture { ref components } => {
                components.iter().map(|(w, d)| w * d.cdf(t)).sum()
            }
            Self::TruncatedExtension { ref base, cut, atom } => {
                if t < cut {
                    base.cdf(t)
                } else if t < atom {
                    base.cdf_strict(cut)
                } else {
                    1.0
                }
            }
        }
    }

    /// P(T < t). Differs from [`cdf`](Self::cdf) only at atoms.
    pub fn cdf_strict(&self, t: f64) -> f64 {
        if t.is_nan() {
            return f64::NAN;
        }
        match *self {
            Self::Discrete { ref atoms } => atoms
                .iter()
                .take_while(|&&(a, _)| a < t)
                .map(|&(_, p)| p)
                .sum(),
            Self::LogNormal { .. } | Self::Pareto { .. } => self.cdf(t),
            Self::Mixture { ref components } => {
                components.iter().map(|(w, d)| w * d.cdf_strict(t)).sum()
            }
            Self::TruncatedExtension { ref base, cut, atom } => {
                if t <= cut {
                    base.cdf_strict(t)
                } else if t <= atom {
                    base.cdf_strict(cut)
                } else {
                    1.0
                }
            }
        }
    }

    /// inf{t : P(T ≤ t) ≥ p} for p in [0, 1); errors outside that range.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if p.is_nan() || !(0.0..1.0).contains(&p) {
            return Err(Error::QuantileUndefined(p));
        }
        Ok(match *self {
            Self::Discrete { ref atoms } => {
                let mut acc = 0.0;
                for &(t, q) in atoms {
                    acc += q;
                    if acc >= p {
                        return Ok(t);
                    }
                }
                atoms[atoms.len() - 1].0
            }
            Self::LogNormal { mu, sigma } => {
                if p == 0.0 {
                    0.0
                } else {
                    (mu + sigma * normal_quantile(p)).exp()
                }
            }
            Self::Pareto { min_runtime, shape } => {
                min_runtime * (1.0 - p).powf(-1.0 / shape)
            }
            Self::Mixture { ref components } => {
                let mut lo = f64::INFINITY;
                let mut hi = 0.0f64;
                for (_, d) in components {
                    let q = d.quantile(p)?;
                    lo = lo.min(q);
                    hi = hi.max(q);
                }
                bisect_quantile(|t| self.cdf(t), p, lo, hi)
            }
            Self::TruncatedExtension { ref base, cut, atom } => {
                if p <= base.cdf_strict(cut) {
                    base.quantile(p)?
                } else {
                    atom
                }
            }
        })
    }

    /// Draws one runtime by inverse transform (hierarchically for mixtures).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Mixture { ref components } => {
                let mut pick: f64 = rng.gen();
                for (w, d) in components {
                    if pick < *w {
                        return d.sample(rng);
                    }
                    pick -= w;
                }
                components[components.len() - 1].1.sample(rng)
            }
            Self::TruncatedExtension { ref base, cut, atom } => {
                let t = base.sample(rng);
                if t >= cut {
                    atom
                } else {
                    t
                }
            }
            _ => {
                let p: f64 = rng.gen();
                // p ∈ [0, 1): quantile is defined everywhere we can land.
                self.quantile(p).expect("quantile defined on [0,1)")
            }
        }
    }

    /// Times where the CDF is non-smooth; quadrature splits here.
    pub fn knots(&self) -> Vec<f64> {
        match *self {
            Self::Discrete { ref atoms } => atoms.iter().map(|&(t, _)| t).collect(),
            Self::LogNormal { .. } => Vec::new(),
            Self::Pareto { min_runtime, .. } => vec![min_runtime],
            Self::Mixture { ref components } => {
                let mut ks: Vec<f64> = components.iter().flat_map(|(_, d)| d.knots()).collect();
                ks.sort_by(f64::total_cmp);
                ks.dedup();
                ks
            }
            Self::TruncatedExtension { ref base, cut, atom } => {
                let mut ks: Vec<f64> =
                    base.knots().into_iter().filter(|&k| k < cut).collect();
                ks.push(cut);
                ks.push(atom);
                ks.dedup();
                ks
            }
        }
    }

    /// ∫_[0,b) u dF — the expected utility of mass that completes strictly
    /// before b. `b` may be +∞.
    pub fn partial_expected_utility(&self, u: &UtilityFunction, b: f64) -> Result<f64> {
        if b.is_nan() || b < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "integration bound {b} must be non-negative"
            )));
        }
        if b == 0.0 {
            return Ok(0.0);
        }
        match *self {
            Self::Discrete { ref atoms } => {
                let mut acc = 0.0;
                for &(t, p) in atoms {
                    if t < b {
                        acc += p * u.eval(t)?;
                    }
                }
                Ok(acc)
            }
            Self::LogNormal { mu, sigma } => {
                let t_eff = (mu + sigma * normal_quantile(1.0 - QUAD_TAIL_MASS)).exp();
                let pdf = move |t: f64| {
                    if t <= 0.0 {
                        return 0.0;
                    }
                    let z = (t.ln() - mu) / sigma;
                    (-0.5 * z * z).exp() / (t * sigma * (2.0 * std::f64::consts::PI).sqrt())
                };
                continuous_partial(self, u, &pdf, 0.0, t_eff, b)
            }
            Self::Pareto { min_runtime, shape } => {
                let t_eff = min_runtime * QUAD_TAIL_MASS.powf(-1.0 / shape);
                let pdf = move |t: f64| {
                    if t < min_runtime {
                        0.0
                    } else {
                        shape * (min_runtime / t).powf(shape) / t
                    }
                };
                continuous_partial(self, u, &pdf, min_runtime, t_eff, b)
            }
            Self::Mixture { ref components } => {
                let mut acc = 0.0;
                for (w, d) in components {
                    acc += w * d.partial_expected_utility(u, b)?;
                }
                Ok(acc)
            }
            Self::TruncatedExtension { ref base, cut, atom } => {
                let mut acc = base.partial_expected_utility(u, b.min(cut))?;
                if atom < b {
                    let hidden = 1.0 - base.cdf_strict(cut);
                    acc += hidden * u.eval(atom)?;
                }
                Ok(acc)
            }
        }
    }

    /// u(κ) · P(T ≥ κ): the utility mass a captime κ leaves unresolved.
    pub fn tail_term(&self, u: &UtilityFunction, kappa: f64) -> Result<f64> {
        if kappa.is_nan() || kappa <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "captime {kappa} must be positive"
            )));
        }
        if kappa == f64::INFINITY {
            return Ok(0.0);
        }
        Ok(u.eval(kappa)? * (1.0 - self.cdf_strict(kappa)))
    }

    /// E[u(min(T, κ))] under strict completion, exactly
    /// `partial_expected_utility(u, κ) + tail_term(u, κ)`. κ may be +∞.
    pub fn expected_utility(&self, u: &UtilityFunction, kappa: f64) -> Result<f64> {
        if kappa.is_nan() || kappa <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "captime {kappa} must be positive"
            )));
        }
        Ok(self.partial_expected_utility(u, kappa)? + self.tail_term(u, kappa)?)
    }
}

// Monotone bisection for inf{t : cdf(t) >= p} on [lo, hi].
fn bisect_quantile(cdf: impl Fn(f64) -> f64, p: f64, lo: f64, hi: f64) -> f64 {
    if cdf(lo) >= p {
        return lo;
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// ∫_[lo, min(b, t_eff)] u(t) pdf(t) dt plus, when b exceeds t_eff, the
/// analytic remainder u(t_eff)·P(T ≥ t_eff) (at most 1e-12).
fn continuous_partial(
    dist: &RuntimeDistribution,
    u: &UtilityFunction,
    pdf: &dyn Fn(f64) -> f64,
    lo: f64,
    t_eff: f64,
    b: f64,
) -> Result<f64> {
    let hi = b.min(t_eff);
    if hi <= lo {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = vec![lo, hi];
    for k in u.knots() {
        if k > lo && k < hi {
            cuts.push(k);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let f = |t: f64| u.eval(t).unwrap_or(0.0) * pdf(t);
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        for (a, c) in decade_chunks(w[0], w[1]) {
            acc += adaptive_simpson(&f, a, c)?;
        }
    }
    if b > t_eff {
        acc += u.eval(t_eff)? * (1.0 - dist.cdf(t_eff));
    }
    Ok(acc)
}

// Splits [a, b] into decade-aligned chunks when it spans more than two
// orders of magnitude, so adaptive recursion never faces a 1e20-wide span.
fn decade_chunks(a: f64, b: f64) -> Vec<(f64, f64)> {
    if a <= 0.0 || b / a <= 100.0 {
        return vec![(a, b)];
    }
    let mut chunks = Vec::new();
    let mut start = a;
    let mut edge = 10f64.powf(a.log10().floor() + 1.0);
    while edge < b {
        if edge > start {
            chunks.push((start, edge));
            start = edge;
        }
        edge *= 10.0;
    }
    chunks.push((start, b));
    chunks
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

// Adaptive Simpson with the standard |S2 - S1|/15 error estimate.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    let whole = simpson(f, a, b);
    let tol = QUAD_REL_TOL * whole.abs().max(1e-3);
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> std::result::Result<f64, f64> {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        let err = (left + right - whole).abs();
        if err <= 15.0 * tol || m <= a || m >= b {
            return Ok(left + right + (left + right - whole) / 15.0);
        }
        if depth == 0 {
            return Err(err);
        }
        Ok(recurse(f, a, m, left, tol / 2.0, depth - 1)?
            + recurse(f, m, b, right, tol / 2.0, depth - 1)?)
    }
    recurse(f, a, b, whole, tol, 52)
        .map_err(|err| Error::QuadratureDiverged { lo: a, hi: b, err })
}

/// Serializable description of a runtime distribution (the on-disk JSON
/// schema for synthetic inputs and emitted witnesses).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DistributionSpec {
    Discrete {
        atoms: Vec<AtomSpec>,
    },
    Lognormal {
        mu: f64,
        sigma: f64,
    },
    Pareto {
        min_runtime: f64,
        shape: f64,
    },
    Mixture {
        components: Vec<ComponentSpec>,
    },
    TruncatedExtension {
        base: Box<DistributionSpec>,
        cut: f64,
        atom: f64,
    },
}

/// One point mass in a discrete spec.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AtomSpec {
    pub time: f64,
    pub prob: f64,
}

/// One weighted component in a mixture spec.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ComponentSpec {
    pub weight: f64,
    pub distribution: DistributionSpec,
}

impl DistributionSpec {
    /// Validates and converts into a [`RuntimeDistribution`].
    pub fn build(&self) -> Result<RuntimeDistribution> {
        match self {
            Self::Discrete { atoms } => RuntimeDistribution::discrete(
                atoms.iter().map(|a| (a.time, a.prob)).collect(),
            ),
            Self::Lognormal { mu, sigma } => RuntimeDistribution::log_normal(*mu, *sigma),
            Self::Pareto { min_runtime, shape } => {
                RuntimeDistribution::pareto(*min_runtime, *shape)
            }
            Self::Mixture { components } => RuntimeDistribution::mixture(
                components
                    .iter()
                    .map(|c| Ok((c.weight, c.distribution.build()?)))
                    .collect::<Result<Vec<_>>>()?,
            ),
            Self::TruncatedExtension { base, cut, atom } => {
                RuntimeDistribution::truncated_extension(base.build()?, *cut, *atom)
            }
        }
    }

    /// Inverse of [`build`](Self::build), used when emitting witnesses.
    pub fn from_distribution(d: &RuntimeDistribution) -> Self {
        match d {
            RuntimeDistribution::Discrete { atoms } => Self::Discrete {
                atoms: atoms
                    .iter()
                    .map(|&(time, prob)| AtomSpec { time, prob })
                    .collect(),
            },
            RuntimeDistribution::LogNormal { mu, sigma } => Self::Lognormal {
                mu: *mu,
                sigma: *sigma,
            },
            RuntimeDistribution::Pareto { min_runtime, shape } => Self::Pareto {
                min_runtime: *min_runtime,
                shape: *shape,
            },
            RuntimeDistribution::Mixture { components } => Self::Mixture {
                components: components
                    .iter()
                    .map(|(w, d)| ComponentSpec {
                        weight: *w,
                        distribution: Self::from_distribution(d),
                    })
                    .collect(),
            },
            RuntimeDistribution::TruncatedExtension { base, cut, atom } => {
                Self::TruncatedExtension {
                    base: Box::new(Self::from_distribution(base)),
                    cut: *cut,
                    atom: *atom,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_point() -> RuntimeDistribution {
        RuntimeDistribution::discrete(vec![(10.0, 0.5), (100.0, 0.5)]).unwrap()
    }

    fn uniform60() -> UtilityFunction {
        UtilityFunction::uniform(60.0).unwrap()
    }

    #[test]
    fn discrete_cdf_and_strict_differ_at_atoms() {
        let d = two_point();
        assert_eq!(d.cdf(5.0), 0.0);
        assert_eq!(d.cdf(10.0), 0.5);
        assert_eq!(d.cdf_strict(10.0), 0.0);
        assert_eq!(d.cdf(99.0), 0.5);
        assert_eq!(d.cdf(100.0), 1.0);
        assert_eq!(d.cdf_strict(100.0), 0.5);
        assert_eq!(d.cdf_strict(100.000001), 1.0);
    }

    #[test]
    fn discrete_expected_utility_hand_values() {
        let d = two_point();
        let u = uniform60();
        // 0.5*u(10) + 0.5*u(100) = 0.5*(5/6) + 0 = 5/12
        assert_relative_eq!(
            d.expected_utility(&u, f64::INFINITY).unwrap(),
            5.0 / 12.0
        );
        // kappa = 30: partial = 0.5*u(10) = 5/12; tail = u(30)*0.5 = 0.25
        assert_relative_eq!(d.partial_expected_utility(&u, 30.0).unwrap(), 5.0 / 12.0);
        assert_relative_eq!(d.tail_term(&u, 30.0).unwrap(), 0.25);
        assert_relative_eq!(d.expected_utility(&u, 30.0).unwrap(), 2.0 / 3.0);
        // partial integrates [0, b): the atom at 10 is excluded at b = 10
        assert_eq!(d.partial_expected_utility(&u, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn pareto_cdf_quantile_round_trip() {
        let d = RuntimeDistribution::pareto(1.0, 2.0).unwrap();
        // 1 - (1/2)^2 = 0.75
        assert_relative_eq!(d.cdf(2.0), 0.75);
        assert_relative_eq!(d.quantile(0.75).unwrap(), 2.0);
        assert_eq!(d.cdf(1.0), 0.0);
        assert_relative_eq!(d.quantile(0.0).unwrap(), 1.0);
        assert!(d.quantile(1.0).is_err());
        assert!(d.quantile(-0.1).is_err());
    }

    #[test]
    fn pareto_expected_utility_matches_closed_form() {
        let d = RuntimeDistribution::pareto(1.0, 2.0).unwrap();
        let u = uniform60();
        // ∫_1^60 (1 - t/60)·2t^-3 dt = (1 - 1/3600) - 59/1800 = 3481/3600
        assert_relative_eq!(
            d.expected_utility(&u, f64::INFINITY).unwrap(),
            3481.0 / 3600.0,
            max_relative = 1e-8
        );
        // partial over [0, 2): (1 - 1/4) - (1/30)(1 - 1/2) = 11/15
        assert_relative_eq!(
            d.partial_expected_utility(&u, 2.0).unwrap(),
            11.0 / 15.0,
            max_relative = 1e-8
        );
        // tail at 2: u(2)·(1/4) = 29/120; total 117/120
        assert_relative_eq!(d.tail_term(&u, 2.0).unwrap(), 29.0 / 120.0);
        assert_relative_eq!(
            d.expected_utility(&u, 2.0).unwrap(),
            0.975,
            max_relative = 1e-8
        );
    }

    #[test]
    fn log_normal_quantile_is_exp_mu_at_median() {
        let d = RuntimeDistribution::log_normal(1.0, 0.5).unwrap();
        assert_relative_eq!(d.quantile(0.5).unwrap(), 1.0f64.exp(), max_relative = 1e-12);
        assert_relative_eq!(d.cdf(1.0f64.exp()), 0.5, epsilon = 1e-12);
        assert_eq!(d.cdf(0.0), 0.0);
    }

    #[test]
    fn log_normal_expected_utility_matches_monte_carlo() {
        let d = RuntimeDistribution::log_normal(0.0, 1.0).unwrap();
        let u = UtilityFunction::log_laplace(60.0, 1.0).unwrap();
        let exact = d.expected_utility(&u, f64::INFINITY).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = 200_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..m {
            let v = u.eval(d.sample(&mut rng)).unwrap();
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / m as f64;
        let var = (sum_sq / m as f64 - mean * mean).max(0.0);
        let se = (var / m as f64).sqrt();
        assert!(
            (exact - mean).abs() <= 4.0 * se,
            "quadrature {exact} vs monte carlo {mean} (se {se})"
        );
    }

    #[test]
    fn mixture_is_linear_in_components() {
        let a = RuntimeDistribution::discrete(vec![(10.0, 1.0)]).unwrap();
        let b = RuntimeDistribution::discrete(vec![(100.0, 1.0)]).unwrap();
        let mix = RuntimeDistribution::mixture(vec![(0.5, a.clone()), (0.5, b.clone())]).unwrap();
        let u = uniform60();
        for kappa in [5.0, 30.0, 120.0, f64::INFINITY] {
            let lhs = mix.expected_utility(&u, kappa).unwrap();
            let rhs = 0.5 * a.expected_utility(&u, kappa).unwrap()
                + 0.5 * b.expected_utility(&u, kappa).unwrap();
            assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
        }
        assert_eq!(mix.expected_utility(&u, f64::INFINITY).unwrap(), 5.0 / 12.0);
    }

    #[test]
    fn mixture_quantile_agrees_with_single_component() {
        let inner = RuntimeDistribution::pareto(1.0, 2.0).unwrap();
        let mix = RuntimeDistribution::mixture(vec![(1.0, inner.clone())]).unwrap();
        for p in [0.0, 0.1, 0.5, 0.75, 0.99] {
            assert_relative_eq!(
                mix.quantile(p).unwrap(),
                inner.quantile(p).unwrap(),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn truncated_extension_moves_hidden_mass_to_atom() {
        let te =
            RuntimeDistribution::truncated_extension(two_point(), 30.0, 40.0).unwrap();
        let u = uniform60();
        // below the cut the law is the base law
        assert_eq!(te.cdf(10.0), 0.5);
        assert_eq!(te.cdf(29.9), 0.5);
        // between cut and atom only base mass below the cut is counted
        assert_eq!(te.cdf(35.0), 0.5);
        assert_eq!(te.cdf_strict(40.0), 0.5);
        assert_eq!(te.cdf(40.0), 1.0);
        // E[u] = 0.5*u(10) + 0.5*u(40) = 5/12 + 0.5/3 = 7/12
        assert_relative_eq!(
            te.expected_utility(&u, f64::INFINITY).unwrap(),
            7.0 / 12.0
        );
        // agrees with the base strictly below the cut
        assert_eq!(
            te.partial_expected_utility(&u, 30.0).unwrap(),
            two_point().partial_expected_utility(&u, 30.0).unwrap()
        );
        assert_eq!(te.quantile(0.3).unwrap(), 10.0);
        assert_eq!(te.quantile(0.7).unwrap(), 40.0);
    }

    #[test]
    fn truncated_extension_atom_at_cut() {
        let te =
            RuntimeDistribution::truncated_extension(two_point(), 30.0, 30.0).unwrap();
        assert_eq!(te.cdf(29.0), 0.5);
        assert_eq!(te.cdf(30.0), 1.0);
        assert_eq!(te.cdf_strict(30.0), 0.5);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let d = RuntimeDistribution::mixture(vec![
            (0.6, RuntimeDistribution::log_normal(0.0, 1.0).unwrap()),
            (0.4, RuntimeDistribution::pareto(2.0, 1.5).unwrap()),
        ])
        .unwrap();
        let draw = |seed: u64| -> Vec<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10).map(|_| d.sample(&mut rng)).collect()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    #[test]
    fn capped_expected_utility_decreases_toward_uncapped() {
        let d = two_point();
        let u = uniform60();
        let full = d.expected_utility(&u, f64::INFINITY).unwrap();
        let mut prev = f64::INFINITY;
        for kappa in [5.0, 10.5, 30.0, 99.0, 100.5, 1e6] {
            let v = d.expected_utility(&u, kappa).unwrap();
            assert!(v <= prev + 1e-12, "U(kappa) must be non-increasing");
            assert!(v >= full - 1e-12, "U(kappa) upper-bounds U");
            let tail = d.tail_term(&u, kappa).unwrap();
            assert!(full >= v - tail - 1e-12, "sandwich lower bound");
            prev = v;
        }
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(RuntimeDistribution::discrete(vec![]).is_err());
        assert!(RuntimeDistribution::discrete(vec![(0.0, 1.0)]).is_err());
        assert!(RuntimeDistribution::discrete(vec![(1.0, 0.6), (2.0, 0.5)]).is_err());
        assert!(RuntimeDistribution::discrete(vec![(2.0, 0.5), (1.0, 0.5)]).is_err());
        assert!(RuntimeDistribution::log_normal(f64::NAN, 1.0).is_err());
        assert!(RuntimeDistribution::log_normal(0.0, 0.0).is_err());
        assert!(RuntimeDistribution::pareto(0.0, 1.0).is_err());
        assert!(RuntimeDistribution::pareto(1.0, -1.0).is_err());
        assert!(RuntimeDistribution::mixture(vec![]).is_err());
        let d = RuntimeDistribution::pareto(1.0, 1.0).unwrap();
        assert!(RuntimeDistribution::mixture(vec![(0.7, d.clone())]).is_err());
        assert!(RuntimeDistribution::truncated_extension(d.clone(), 5.0, 4.0).is_err());
        assert!(RuntimeDistribution::truncated_extension(d, 0.0, 1.0).is_err());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let d = RuntimeDistribution::mixture(vec![
            (0.58, RuntimeDistribution::log_normal(-0.16, 0.45).unwrap()),
            (
                0.42,
                RuntimeDistribution::truncated_extension(
                    RuntimeDistribution::pareto(650.0, 0.45).unwrap(),
                    700.0,
                    800.0,
                )
                .unwrap(),
            ),
        ])
        .unwrap();
        let spec = DistributionSpec::from_distribution(&d);
        let json = serde_json::to_string(&spec).unwrap();
        let parsed: DistributionSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed.build().unwrap(), d);
    }

    #[test]
    fn quadrature_handles_wide_pareto_domains() {
        // shape 0.45 puts the 1 - 1e-12 quantile near 1e29; decade chunking
        // must keep adaptive recursion convergent.
        let d = RuntimeDistribution::pareto(650.0, 0.45).unwrap();
        let u = UtilityFunction::log_laplace(60.0, 1.0).unwrap();
        let v = d.expected_utility(&u, f64::INFINITY).unwrap();
        // E[0.5·(60/t)] over t ≥ 650 with E[1/t] = shape/(min·(shape+1))
        let exact = 30.0 * 0.45 / (650.0 * 1.45);
        assert_relative_eq!(v, exact, max_relative = 1e-7);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arb_discrete() -> impl Strategy<Value = RuntimeDistribution> {
        proptest::collection::vec((0.01f64..500.0, 0.05f64..1.0), 1..6).prop_map(|raw| {
            let mut times: Vec<f64> = raw.iter().map(|&(t, _)| t).collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            let weights: Vec<f64> = raw[..times.len()].iter().map(|&(_, w)| w).collect();
            let total: f64 = weights.iter().sum();
            RuntimeDistribution::discrete(
                times
                    .into_iter()
                    .zip(weights.into_iter().map(|w| w / total))
                    .collect(),
            )
            .unwrap()
        })
    }

    fn arb_continuous() -> impl Strategy<Value = RuntimeDistribution> {
        prop_oneof![
            (-2.0f64..3.0, 0.2f64..1.5)
                .prop_map(|(mu, s)| RuntimeDistribution::log_normal(mu, s).unwrap()),
            (0.1f64..100.0, 0.4f64..4.0)
                .prop_map(|(x, a)| RuntimeDistribution::pareto(x, a).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn cdf_is_monotone_and_bounded(d in arb_continuous(), a in 0.0f64..1e4, b in 0.0f64..1e4) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let ca = d.cdf(lo);
            let cb = d.cdf(hi);
            prop_assert!((0.0..=1.0).contains(&ca));
            prop_assert!((0.0..=1.0).contains(&cb));
            prop_assert!(ca <= cb);
            prop_assert!(d.cdf_strict(lo) <= ca);
        }

        #[test]
        fn quantile_inverts_cdf(d in arb_continuous(), p in 0.001f64..0.999) {
            let q = d.quantile(p).unwrap();
            prop_assert!((d.cdf(q) - p).abs() < 1e-9);
        }

        #[test]
        fn samples_live_in_support(d in arb_discrete(), seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = d.sample(&mut rng);
            prop_assert!(d.cdf(t) > 0.0);
            prop_assert!((1.0 - d.cdf_strict(t)) > 0.0);
        }

        #[test]
        fn discrete_sandwich_is_exact(d in arb_discrete(), kappa in 0.01f64..600.0) {
            let u = UtilityFunction::log_laplace(60.0, 1.0).unwrap();
            let capped = d.expected_utility(&u, kappa).unwrap();
            let full = d.expected_utility(&u, f64::INFINITY).unwrap();
            let tail = d.tail_term(&u, kappa).unwrap();
            prop_assert!(full <= capped + 1e-12);
            prop_assert!(full >= capped - tail - 1e-12);
        }

        #[test]
        fn truncated_extension_preserves_law_below_cut(
            d in arb_discrete(),
            cut in 1.0f64..400.0,
            pad in 0.0f64..100.0,
        ) {
            let te = RuntimeDistribution::truncated_extension(d.clone(), cut, cut + pad).unwrap();
            for t in [cut * 0.25, cut * 0.5, cut * 0.99] {
                prop_assert!((te.cdf(t) - d.cdf(t)).abs() < 1e-12);
                prop_assert!((te.cdf_strict(t) - d.cdf_strict(t)).abs() < 1e-12);
            }
            // total mass is conserved
            prop_assert!((te.cdf(cut + pad) - 1.0).abs() < 1e-12);
        }
    }
}
