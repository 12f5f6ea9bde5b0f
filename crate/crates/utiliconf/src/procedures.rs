//! Selection procedures: the adaptive captime-doubling procedure, the
//! fixed-captime baseline, and the runtime-oracle baseline.
//!
//! All three synchronize runs across arms (round m runs instance m on
//! every surviving arm) and report the same [`ProcedureReport`] shape.

use crate::error::{Error, Result};
use crate::execution::Executor;
use crate::stats::{
    anytime_epsilon, confidence_bounds, doubling_alpha, fixed_captime_sample_size,
    hoeffding_radius, incumbent, oracle_alpha, theoretical_epsilon, AlgorithmStats,
};
use crate::utility::UtilityFunction;
use serde::Serialize;

/// Which selection procedure to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcedureKind {
    /// Captime-doubling procedure driven by confidence bounds.
    Adaptive,
    /// Fixed captime, fixed sample size.
    Fixed,
    /// Observes true runtimes and pays for them (unless run free).
    Oracle,
}

impl ProcedureKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "up" => Ok(Self::Adaptive),
            "naive" => Ok(Self::Fixed),
            "oracle" => Ok(Self::Oracle),
            other => Err(Error::InvalidInput(format!(
                "unknown procedure '{other}' (expected up, naive, or oracle)"
            ))),
        }
    }

    /// The token accepted by [`parse`](Self::parse) and used in reports.
    pub fn token(&self) -> &'static str {
        match self {
            Self::Adaptive => "up",
            Self::Fixed => "naive",
            Self::Oracle => "oracle",
        }
    }
}

/// Stopping configuration shared by the round-based procedures.
#[derive(Debug, Clone)]
pub struct StopConfig {
    /// Hard cap on synchronized rounds (clamped to the instance capacity
    /// of a bounded source).
    pub max_m: usize,
    /// Stop once total simulated cost reaches this, checked at round
    /// boundaries.
    pub budget: Option<f64>,
}

impl Default for StopConfig {
    fn default() -> Self {
        StopConfig {
            max_m: 1_000_000,
            budget: None,
        }
    }
}

/// Why a procedure stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    SingleSurvivor,
    MaxRuns,
    Budget,
    FixedSchedule,
}

/// One round of the suboptimality trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundPoint {
    pub m: usize,
    pub eps_hat: f64,
    pub total_cost: f64,
}

/// Per-arm outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmReport {
    pub name: String,
    pub final_cap: f64,
    pub runs: usize,
    pub u_hat: f64,
    pub f_hat: f64,
    pub eliminated_at: Option<usize>,
}

/// A captime doubling, keyed by the round it was decided in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoublingEvent {
    pub m: usize,
    pub algorithm: usize,
    pub new_cap: f64,
}

/// An elimination, keyed by the round it happened in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EliminationEvent {
    pub m: usize,
    pub algorithm: usize,
}

/// Everything a procedure run produces.
#[derive(Debug, Clone, Serialize)]
pub struct ProcedureReport {
    pub procedure: &'static str,
    pub winner: usize,
    pub winner_name: String,
    pub rounds: usize,
    /// Final value of the per-round suboptimality certificate.
    pub eps_hat: f64,
    /// Worst-case guarantee at the final sample count.
    pub theoretical_eps: f64,
    pub total_cost: f64,
    pub termination: Termination,
    pub arms: Vec<ArmReport>,
    pub doublings: Vec<DoublingEvent>,
    pub eliminations: Vec<EliminationEvent>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<RoundPoint>,
}

/// Per-arm, per-round diagnostic surfaced to observers (and the JSONL log).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RoundEvent {
    pub m: usize,
    pub algorithm: usize,
    pub kappa: f64,
    pub u_hat: f64,
    pub f_hat: f64,
    pub alpha: f64,
    pub ucb: f64,
    pub lcb: f64,
    pub eliminated: bool,
    pub doubled: bool,
}

/// Callback receiving one [`RoundEvent`] per surviving arm per round.
pub type Observer<'a> = Option<&'a mut dyn FnMut(&RoundEvent)>;

fn arm_names(exec: &Executor) -> Vec<String> {
    exec.source().names().to_vec()
}

/// Captime-doubling selection. Starts every arm at captime 1, keeps
/// two-sided bounds on uncapped utility, eliminates an arm once its upper
/// bound falls below the incumbent's lower bound, and doubles an arm's
/// captime once its confidence radius is small against the utility mass
/// its captime still hides.
pub fn run_adaptive(
    exec: &mut Executor,
    u: &UtilityFunction,
    delta: f64,
    stop: &StopConfig,
    mut observer: Observer,
) -> Result<ProcedureReport> {
    let n = exec.algorithm_count();
    check_delta(delta)?;
    let max_m = stop.max_m.min(exec.instance_capacity().unwrap_or(usize::MAX));
    if max_m == 0 {
        return Err(Error::InvalidParameter("max_m must be positive".into()));
    }

    let names = arm_names(exec);
    let mut alive = vec![true; n];
    let mut caps = vec![1.0f64; n];
    let mut rebuild = vec![false; n];
    let mut stats: Vec<AlgorithmStats> = vec![AlgorithmStats::new(); n];
    let mut eliminated_at = vec![None; n];
    let mut doublings = Vec::new();
    let mut eliminations = Vec::new();
    let mut trace = Vec::new();

    let mut m = 0;
    let (winner, termination) = loop {
        m += 1;
        // run instance m-1 on every surviving arm, rebuilding statistics
        // after a captime change (capped records were re-executed).
        for i in 0..n {
            if !alive[i] {
                continue;
            }
            let recs = exec.sync_runs(i, m, caps[i])?;
            if rebuild[i] {
                let vals: Vec<(f64, bool)> = recs
                    .iter()
                    .map(|r| Ok((u.eval(r.observed)?, r.completed)))
                    .collect::<Result<_>>()?;
                stats[i].reset();
                for (v, c) in vals {
                    stats[i].push(v, c);
                }
                rebuild[i] = false;
            } else {
                let r = recs[m - 1];
                stats[i].push(u.eval(r.observed)?, r.completed);
            }
        }

        let round_set: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
        let mut alphas = vec![0.0; n];
        let mut bounds = vec![(0.0, 0.0); n];
        let mut u_caps = vec![0.0; n];
        for &i in &round_set {
            alphas[i] = doubling_alpha(n, m, caps[i], delta);
            u_caps[i] = u.eval(caps[i])?;
            bounds[i] = confidence_bounds(stats[i].u_hat(), stats[i].f_hat(), alphas[i], u_caps[i]);
        }
        let lcbs: Vec<f64> = round_set.iter().map(|&i| bounds[i].0).collect();
        let star = round_set[incumbent(&lcbs)];
        let round_bounds: Vec<(f64, f64)> = round_set.iter().map(|&i| bounds[i]).collect();
        let eps_hat = anytime_epsilon(&round_bounds);
        trace.push(RoundPoint {
            m,
            eps_hat,
            total_cost: exec.total_cost(),
        });

        // batch eliminations against the incumbent's lower bound
        let mut dropped = Vec::new();
        for &i in &round_set {
            if i != star && bounds[i].1 < bounds[star].0 {
                alive[i] = false;
                eliminated_at[i] = Some(m);
                dropped.push(i);
                eliminations.push(EliminationEvent { m, algorithm: i });
            }
        }

        let survivors: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();

        // double a surviving arm's captime once its radius is small
        // relative to the utility mass the captime still hides
        let mut doubled = Vec::new();
        if survivors.len() > 1 && m < max_m {
            for &i in &survivors {
                let hidden = u_caps[i] * (1.0 - stats[i].f_hat());
                if 2.0 * alphas[i] <= hidden {
                    caps[i] *= 2.0;
                    rebuild[i] = true;
                    doubled.push(i);
                    doublings.push(DoublingEvent {
                        m,
                        algorithm: i,
                        new_cap: caps[i],
                    });
                }
            }
        }

        if let Some(obs) = observer.as_mut() {
            for &i in &round_set {
                obs(&RoundEvent {
                    m,
                    algorithm: i,
                    kappa: if doubled.contains(&i) { caps[i] / 2.0 } else { caps[i] },
                    u_hat: stats[i].u_hat(),
                    f_hat: stats[i].f_hat(),
                    alpha: alphas[i],
                    ucb: bounds[i].1,
                    lcb: bounds[i].0,
                    eliminated: dropped.contains(&i),
                    doubled: doubled.contains(&i),
                });
            }
        }

        if survivors.len() == 1 {
            break (survivors[0], Termination::SingleSurvivor);
        }
        if let Some(budget) = stop.budget {
            if exec.total_cost() >= budget {
                break (star, Termination::Budget);
            }
        }
        if m >= max_m {
            break (star, Termination::MaxRuns);
        }
    };

    let arms = (0..n)
        .map(|i| ArmReport {
            name: names[i].clone(),
            final_cap: caps[i],
            runs: stats[i].m(),
            u_hat: stats[i].u_hat(),
            f_hat: stats[i].f_hat(),
            eliminated_at: eliminated_at[i],
        })
        .collect();
    Ok(ProcedureReport {
        procedure: ProcedureKind::Adaptive.token(),
        winner,
        winner_name: names[winner].clone(),
        rounds: m,
        eps_hat: trace.last().map(|p| p.eps_hat).unwrap_or(f64::INFINITY),
        theoretical_eps: theoretical_epsilon(n, m, delta),
        total_cost: exec.total_cost(),
        termination,
        arms,
        doublings,
        eliminations,
        trace,
    })
}

/// Fixed-captime selection: runs every arm the number of times the (ε, δ)
/// guarantee demands at captime κ and picks the best empirical mean.
/// Errors as infeasible when u(κ) ≥ ε.
pub fn run_fixed(
    exec: &mut Executor,
    u: &UtilityFunction,
    eps: f64,
    delta: f64,
    kappa: f64,
    mut observer: Observer,
) -> Result<ProcedureReport> {
    let n = exec.algorithm_count();
    check_delta(delta)?;
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "captime {kappa} must be positive"
        )));
    }
    let u_kappa = u.eval(kappa)?;
    let m = fixed_captime_sample_size(n, eps, delta, u_kappa)?;
    let names = arm_names(exec);

    let mut stats: Vec<AlgorithmStats> = vec![AlgorithmStats::new(); n];
    for (i, stat) in stats.iter_mut().enumerate() {
        let recs = exec.sync_runs(i, m, kappa)?;
        let vals: Vec<(f64, bool)> = recs
            .iter()
            .map(|r| Ok((u.eval(r.observed)?, r.completed)))
            .collect::<Result<_>>()?;
        for (v, c) in vals {
            stat.push(v, c);
        }
    }

    let mut winner = 0;
    for i in 1..n {
        if stats[i].u_hat() > stats[winner].u_hat() {
            winner = i;
        }
    }

    let alpha = hoeffding_radius(m, delta / (2.0 * n as f64));
    if let Some(obs) = observer.as_mut() {
        for (i, s) in stats.iter().enumerate() {
            let (lcb, ucb) = confidence_bounds(s.u_hat(), s.f_hat(), alpha, u_kappa);
            obs(&RoundEvent {
                m,
                algorithm: i,
                kappa,
                u_hat: s.u_hat(),
                f_hat: s.f_hat(),
                alpha,
                ucb,
                lcb,
                eliminated: false,
                doubled: false,
            });
        }
    }

    let arms = (0..n)
        .map(|i| ArmReport {
            name: names[i].clone(),
            final_cap: kappa,
            runs: m,
            u_hat: stats[i].u_hat(),
            f_hat: stats[i].f_hat(),
            eliminated_at: None,
        })
        .collect();
    Ok(ProcedureReport {
        procedure: ProcedureKind::Fixed.token(),
        winner,
        winner_name: names[winner].clone(),
        rounds: m,
        eps_hat: eps,
        theoretical_eps: eps,
        total_cost: exec.total_cost(),
        termination: Termination::FixedSchedule,
        arms,
        doublings: Vec::new(),
        eliminations: Vec::new(),
        trace: vec![RoundPoint {
            m,
            eps_hat: eps,
            total_cost: exec.total_cost(),
        }],
    })
}

/// Runtime-oracle baseline: observes true runtimes (paying for them in
/// full unless `free`), keeps plain Hoeffding bounds on the exact
/// utilities, and eliminates arms whose mean falls 2α below the leader.
pub fn run_oracle(
    exec: &mut Executor,
    u: &UtilityFunction,
    delta: f64,
    stop: &StopConfig,
    free: bool,
    mut observer: Observer,
) -> Result<ProcedureReport> {
    let n = exec.algorithm_count();
    check_delta(delta)?;
    let max_m = stop.max_m.min(exec.instance_capacity().unwrap_or(usize::MAX));
    if max_m == 0 {
        return Err(Error::InvalidParameter("max_m must be positive".into()));
    }
    let names = arm_names(exec);

    let mut alive = vec![true; n];
    let mut stats: Vec<AlgorithmStats> = vec![AlgorithmStats::new(); n];
    let mut eliminated_at = vec![None; n];
    let mut eliminations = Vec::new();
    let mut trace = Vec::new();

    let mut m = 0;
    let (winner, termination) = loop {
        m += 1;
        for i in 0..n {
            if alive[i] {
                let t = exec.uncapped_run(i, m - 1, free)?;
                stats[i].push(u.eval(t)?, true);
            }
        }
        let alpha = oracle_alpha(n, m, delta);
        let round_set: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
        let mut star = round_set[0];
        for &i in &round_set {
            if stats[i].u_hat() > stats[star].u_hat() {
                star = i;
            }
        }
        let eps_hat = 2.0 * alpha;
        trace.push(RoundPoint {
            m,
            eps_hat,
            total_cost: exec.total_cost(),
        });

        let mut dropped = Vec::new();
        for &i in &round_set {
            if i != star && stats[i].u_hat() < stats[star].u_hat() - 2.0 * alpha {
                alive[i] = false;
                eliminated_at[i] = Some(m);
                dropped.push(i);
                eliminations.push(EliminationEvent { m, algorithm: i });
            }
        }

        if let Some(obs) = observer.as_mut() {
            for &i in &round_set {
                obs(&RoundEvent {
                    m,
                    algorithm: i,
                    kappa: f64::INFINITY,
                    u_hat: stats[i].u_hat(),
                    f_hat: 1.0,
                    alpha,
                    ucb: stats[i].u_hat() + alpha,
                    lcb: stats[i].u_hat() - alpha,
                    eliminated: dropped.contains(&i),
                    doubled: false,
                });
            }
        }

        let survivors: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
        if survivors.len() == 1 {
            break (survivors[0], Termination::SingleSurvivor);
        }
        if let Some(budget) = stop.budget {
            if exec.total_cost() >= budget {
                break (star, Termination::Budget);
            }
        }
        if m >= max_m {
            break (star, Termination::MaxRuns);
        }
    };

    let arms = (0..n)
        .map(|i| ArmReport {
            name: names[i].clone(),
            final_cap: f64::INFINITY,
            runs: stats[i].m(),
            u_hat: stats[i].u_hat(),
            f_hat: 1.0,
            eliminated_at: eliminated_at[i],
        })
        .collect();
    Ok(ProcedureReport {
        procedure: ProcedureKind::Oracle.token(),
        winner,
        winner_name: names[winner].clone(),
        rounds: m,
        eps_hat: trace.last().map(|p| p.eps_hat).unwrap_or(f64::INFINITY),
        theoretical_eps: 2.0 * oracle_alpha(n, m, delta),
        total_cost: exec.total_cost(),
        termination,
        arms,
        doublings: Vec::new(),
        eliminations,
        trace,
    })
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} must lie in (0, 1)"
        )));
    }
    Ok(())
}
