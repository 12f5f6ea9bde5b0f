//! Captime verification: certifying a winner from truncated views alone.
//!
//! Given each arm's distribution observed only below a per-arm captime,
//! the prover computes two-sided bounds on every arm's uncapped utility
//! and certifies a winner iff no rival's upper bound can overtake the
//! incumbent's lower bound by more than ε. When certification fails, an
//! explicit adversarial pair of extensions witnesses that the hidden mass
//! really can reverse the ranking.

use crate::distributions::{DistributionSpec, RuntimeDistribution};
use crate::error::{Error, Result};
use crate::utility::UtilityFunction;
use serde::Serialize;

/// Float pad absorbing rounding in skeptic comparisons.
const CHECK_PAD: f64 = 1e-7;

/// Bounds on uncapped expected utility from the view below `kappa`:
/// the lower bound is the utility mass that completes, the upper bound
/// adds the tail term. Their difference is exactly the tail term.
pub fn truncated_bounds(
    d: &RuntimeDistribution,
    u: &UtilityFunction,
    kappa: f64,
) -> Result<(f64, f64)> {
    let lb = d.partial_expected_utility(u, kappa)?;
    let ub = lb + d.tail_term(u, kappa)?;
    Ok((lb, ub))
}

/// Outcome of the skeptic's comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SkepticOutcome {
    /// The incumbent's lower bound is within ε of every upper bound.
    Certified { winner: usize },
    /// Some rival's upper bound exceeds the incumbent's lower bound by
    /// more than ε; `gap` is that excess.
    Refuted {
        incumbent: usize,
        challenger: usize,
        gap: f64,
    },
}

/// Checks whether the bounds certify an ε-optimal winner. The incumbent is
/// the arm with the best lower bound (lowest index on ties); the challenger
/// reported on refutation is the rival with the worst violation.
pub fn skeptic_check(bounds: &[(f64, f64)], eps: f64) -> Result<SkepticOutcome> {
    if bounds.is_empty() {
        return Err(Error::InvalidInput("no arms to check".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {eps} must be positive"
        )));
    }
    let mut star = 0;
    for (i, b) in bounds.iter().enumerate().skip(1) {
        if b.0 > bounds[star].0 {
            star = i;
        }
    }
    let mut challenger = None;
    let mut worst = 0.0;
    for (i, b) in bounds.iter().enumerate() {
        // the certificate U_i <= U_star + eps is vacuous for the incumbent
        if i == star {
            continue;
        }
        let gap = b.1 - eps - bounds[star].0;
        if gap > CHECK_PAD && gap > worst {
            worst = gap;
            challenger = Some(i);
        }
    }
    Ok(match challenger {
        None => SkepticOutcome::Certified { winner: star },
        Some(c) => SkepticOutcome::Refuted {
            incumbent: star,
            challenger: c,
            gap: worst,
        },
    })
}

/// Smallest captime whose tail term is at most `c` for this arm.
///
/// The tail u(κ)·P(T ≥ κ) is non-increasing in κ, so the crossing is found
/// by an interval walk for discrete arms (solving through the utility
/// inverse, exact where the crossing is attained) and by monotone
/// bisection returning the upper bracket otherwise. The returned captime
/// always satisfies the constraint; at jump crossings it sits one float
/// step above the infimum.
pub fn sufficient_captime(
    d: &RuntimeDistribution,
    u: &UtilityFunction,
    c: f64,
) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tail budget {c} must be positive"
        )));
    }
    if c >= 1.0 {
        // any positive captime has tail at most 1
        return Ok(1e-9);
    }
    if let RuntimeDistribution::Discrete { atoms } = d {
        return discrete_sufficient_captime(d, atoms, u, c);
    }
    let mut hi = 1.0f64;
    while d.tail_term(u, hi)? > c {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::InvalidParameter(
                "tail budget unreachable at any finite captime".into(),
            ));
        }
    }
    let mut lo = 0.0f64;
    // invariant: tail(hi) <= c, and the infimum lies in (lo, hi]
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if d.tail_term(u, mid)? <= c {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn discrete_sufficient_captime(
    d: &RuntimeDistribution,
    atoms: &[(f64, f64)],
    u: &UtilityFunction,
    c: f64,
) -> Result<f64> {
    let mut prev = 0.0f64;
    let mut survival = 1.0f64;
    for k in 0..=atoms.len() {
        let upper = atoms.get(k).map(|a| a.0).unwrap_or(f64::INFINITY);
        // on (prev, upper] the survival P(T >= κ) is constant
        let attainable = if survival <= 1e-15 {
            0.0
        } else {
            u.eval(upper)? * survival
        };
        if attainable <= c {
            let mut kappa = if survival <= 1e-15 {
                prev
            } else {
                u.inverse((c / survival).min(1.0))?.max(prev)
            };
            if !kappa.is_finite() {
                kappa = prev;
            }
            if kappa <= 0.0 {
                kappa = f64::MIN_POSITIVE;
            }
            // tighten to the first float that really satisfies the budget
            // (jump crossings land one step above the atom)
            let mut steps = 0;
            while d.tail_term(u, kappa)? > c {
                kappa = next_up(kappa);
                steps += 1;
                if steps > 1000 {
                    return Err(Error::InvalidParameter(
                        "captime search failed to stabilize".into(),
                    ));
                }
            }
            return Ok(kappa);
        }
        survival -= atoms[k].1;
        prev = atoms[k].0;
    }
    unreachable!("tail vanishes beyond the last atom");
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        f64::MIN_POSITIVE
    } else {
        f64::from_bits(x.to_bits() + 1)
    }
}

/// Per-arm captimes under which certification of an ε-optimal winner is
/// guaranteed: each arm's tail budget is its exact suboptimality gap plus
/// ε/2.
pub fn sufficient_captimes(
    dists: &[RuntimeDistribution],
    u: &UtilityFunction,
    eps: f64,
) -> Result<Vec<f64>> {
    if dists.is_empty() {
        return Err(Error::InvalidInput("no arms given".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {eps} must be positive"
        )));
    }
    let utilities: Vec<f64> = dists
        .iter()
        .map(|d| d.expected_utility(u, f64::INFINITY))
        .collect::<Result<_>>()?;
    let best = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    dists
        .iter()
        .zip(&utilities)
        .map(|(d, &ui)| sufficient_captime(d, u, (best - ui) + eps / 2.0))
        .collect()
}

/// A pair of extensions proving a refuted configuration really is
/// ambiguous: both agree with their bases below the captimes, yet the
/// challenger's uncapped utility strictly exceeds the incumbent's (by
/// about α/4).
#[derive(Debug, Clone)]
pub struct AdversarialWitness {
    pub distributions: Vec<RuntimeDistribution>,
    pub incumbent_utility: f64,
    pub challenger_utility: f64,
    pub alpha: f64,
}

/// Builds the witness for a refuted pair: the challenger's hidden mass is
/// placed as early as the bounds allow (losing at most α/8 of its upper
/// bound) and the incumbent's as late as needed (keeping at most α/8).
/// Since the bounds are α/2 apart, the witness utilities stay a strict
/// α/4 apart.
pub fn adversarial_extension(
    dists: &[RuntimeDistribution],
    u: &UtilityFunction,
    captimes: &[f64],
    incumbent: usize,
    challenger: usize,
    eps: f64,
) -> Result<AdversarialWitness> {
    if captimes.len() != dists.len() {
        return Err(Error::InvalidInput(format!(
            "{} captimes for {} arms",
            captimes.len(),
            dists.len()
        )));
    }
    let (_, ub_c) = truncated_bounds(&dists[challenger], u, captimes[challenger])?;
    let (lb_i, _) = truncated_bounds(&dists[incumbent], u, captimes[incumbent])?;
    let alpha = 2.0 * (ub_c - lb_i);
    if alpha <= 2.0 * eps {
        return Err(Error::InvalidParameter(
            "adversarial extension requires a refuted pair".into(),
        ));
    }

    let mut extended: Vec<RuntimeDistribution> = dists.to_vec();
    extended[challenger] = extend_early(&dists[challenger], u, captimes[challenger], alpha)?;
    extended[incumbent] = extend_late(&dists[incumbent], u, captimes[incumbent], alpha)?;

    let challenger_utility = extended[challenger].expected_utility(u, f64::INFINITY)?;
    let incumbent_utility = extended[incumbent].expected_utility(u, f64::INFINITY)?;
    Ok(AdversarialWitness {
        distributions: extended,
        incumbent_utility,
        challenger_utility,
        alpha,
    })
}

// Challenger extension: place hidden mass to retain all but alpha/8 of the
// tail term.
fn extend_early(
    d: &RuntimeDistribution,
    u: &UtilityFunction,
    kappa: f64,
    alpha: f64,
) -> Result<RuntimeDistribution> {
    let hidden = 1.0 - d.cdf_strict(kappa);
    if hidden <= 0.0 {
        return Ok(d.clone());
    }
    let tail = d.tail_term(u, kappa)?;
    let atom = if tail <= alpha / 8.0 {
        2.0 * kappa
    } else {
        // tail > alpha/8 makes the target strictly positive
        let target = u.eval(kappa)? - alpha / (8.0 * hidden);
        if target <= 0.0 {
            (2.0 * kappa).max(u.inverse(f64::MIN_POSITIVE)?).min(f64::MAX)
        } else {
            u.inverse(target)?.max(kappa).min(f64::MAX)
        }
    };
    RuntimeDistribution::truncated_extension(d.clone(), kappa, atom)
}

// Incumbent extension: push hidden mass late enough that it contributes at
// most alpha/8.
fn extend_late(
    d: &RuntimeDistribution,
    u: &UtilityFunction,
    kappa: f64,
    alpha: f64,
) -> Result<RuntimeDistribution> {
    let hidden = 1.0 - d.cdf_strict(kappa);
    if hidden <= 0.0 {
        return Ok(d.clone());
    }
    let tail = d.tail_term(u, kappa)?;
    let atom = if tail <= alpha / 8.0 {
        2.0 * kappa
    } else {
        let target = (alpha / (8.0 * hidden)).min(1.0);
        u.inverse(target)?.max(kappa).min(f64::MAX)
    };
    RuntimeDistribution::truncated_extension(d.clone(), kappa, atom)
}

/// Per-arm view the verification report exposes.
#[derive(Debug, Clone, Serialize)]
pub struct ArmVerification {
    pub name: String,
    pub captime: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Serialized adversarial witness.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub distributions: Vec<DistributionSpec>,
    pub incumbent_utility: f64,
    pub challenger_utility: f64,
    pub alpha: f64,
}

/// Full verification outcome.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub epsilon: f64,
    pub arms: Vec<ArmVerification>,
    pub outcome: SkepticOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessReport>,
}

/// Runs the full prover–skeptic exchange. Captimes default to the
/// sufficient ones (under which certification is guaranteed); an explicit
/// override exercises the refutation path, in which case the report
/// carries the adversarial witness.
pub fn run_verification(
    dists: &[RuntimeDistribution],
    names: &[String],
    u: &UtilityFunction,
    eps: f64,
    captimes_override: Option<Vec<f64>>,
) -> Result<VerificationReport> {
    if dists.is_empty() {
        return Err(Error::InvalidInput("no arms given".into()));
    }
    let captimes = match captimes_override {
        Some(k) => {
            if k.len() != dists.len() {
                return Err(Error::InvalidInput(format!(
                    "{} captimes for {} arms",
                    k.len(),
                    dists.len()
                )));
            }
            if let Some(bad) = k.iter().find(|&&x| !(x > 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "captime {bad} must be positive"
                )));
            }
            k
        }
        None => sufficient_captimes(dists, u, eps)?,
    };
    let bounds: Vec<(f64, f64)> = dists
        .iter()
        .zip(&captimes)
        .map(|(d, &k)| truncated_bounds(d, u, k))
        .collect::<Result<_>>()?;
    let outcome = skeptic_check(&bounds, eps)?;
    let witness = match outcome {
        SkepticOutcome::Certified { .. } => None,
        SkepticOutcome::Refuted {
            incumbent,
            challenger,
            ..
        } => {
            let w = adversarial_extension(dists, u, &captimes, incumbent, challenger, eps)?;
            Some(WitnessReport {
                distributions: w
                    .distributions
                    .iter()
                    .map(DistributionSpec::from_distribution)
                    .collect(),
                incumbent_utility: w.incumbent_utility,
                challenger_utility: w.challenger_utility,
                alpha: w.alpha,
            })
        }
    };
    let arms = (0..dists.len())
        .map(|i| ArmVerification {
            name: names
                .get(i)
                .cloned()
                .unwrap_or_else(|| format!("arm{i}")),
            captime: captimes[i],
            lower: bounds[i].0,
            upper: bounds[i].1,
        })
        .collect();
    Ok(VerificationReport {
        epsilon: eps,
        arms,
        outcome,
        witness,
    })
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn arb_arm() -> impl Strategy<Value = RuntimeDistribution> {
        proptest::collection::vec((0.5f64..200.0, 0.05f64..1.0), 1..5).prop_map(|raw| {
            let mut times: Vec<f64> = raw.iter().map(|&(t, _)| t).collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            let ws: Vec<f64> = raw[..times.len()].iter().map(|&(_, w)| w).collect();
            let total: f64 = ws.iter().sum();
            RuntimeDistribution::discrete(
                times
                    .into_iter()
                    .zip(ws.into_iter().map(|w| w / total))
                    .collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn sufficient_captimes_always_certify(
            arms in proptest::collection::vec(arb_arm(), 2..5),
            eps in 0.02f64..0.5,
        ) {
            let u = UtilityFunction::log_laplace(60.0, 1.0).unwrap();
            let caps = sufficient_captimes(&arms, &u, eps).unwrap();
            let bounds: Vec<(f64, f64)> = arms
                .iter()
                .zip(&caps)
                .map(|(d, &k)| truncated_bounds(d, &u, k).unwrap())
                .collect();
            let certified = matches!(
                skeptic_check(&bounds, eps).unwrap(),
                SkepticOutcome::Certified { .. }
            );
            prop_assert!(certified);
        }

        #[test]
        fn captime_budget_is_respected(arm in arb_arm(), c in 0.01f64..0.9) {
            let u = UtilityFunction::log_laplace(60.0, 1.0).unwrap();
            let kappa = sufficient_captime(&arm, &u, c).unwrap();
            prop_assert!(kappa > 0.0);
            prop_assert!(arm.tail_term(&u, kappa).unwrap() <= c + 1e-12);
        }

        #[test]
        fn refutations_always_produce_valid_witnesses(
            arms in proptest::collection::vec(arb_arm(), 2..5),
            eps in 0.02f64..0.2,
            shrink in 0.1f64..0.9,
        ) {
            let u = UtilityFunction::log_laplace(60.0, 1.0).unwrap();
            let caps: Vec<f64> = sufficient_captimes(&arms, &u, eps)
                .unwrap()
                .iter()
                .map(|k| k * shrink)
                .collect();
            let bounds: Vec<(f64, f64)> = arms
                .iter()
                .zip(&caps)
                .map(|(d, &k)| truncated_bounds(d, &u, k).unwrap())
                .collect();
            if let SkepticOutcome::Refuted { incumbent, challenger, .. } =
                skeptic_check(&bounds, eps).unwrap()
            {
                let w = adversarial_extension(&arms, &u, &caps, incumbent, challenger, eps)
                    .unwrap();
                prop_assert!(w.challenger_utility > w.incumbent_utility);
                prop_assert!(
                    w.challenger_utility - w.incumbent_utility >= w.alpha / 4.0 - 1e-9
                );
                // extensions preserve the truncated views
                let wb_c = truncated_bounds(&w.distributions[challenger], &u, caps[challenger])
                    .unwrap();
                prop_assert!((wb_c.0 - bounds[challenger].0).abs() < 1e-9);
                let wb_i = truncated_bounds(&w.distributions[incumbent], &u, caps[incumbent])
                    .unwrap();
                prop_assert!((wb_i.0 - bounds[incumbent].0).abs() < 1e-9);
            }
        }
    }
}
