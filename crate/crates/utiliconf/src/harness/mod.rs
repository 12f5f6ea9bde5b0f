//! Experiment harness: input loading, cost sweeps, correctness estimates,
//! and report emission in CSV, JSON, or SVG.

pub mod svg;

use crate::distributions::{DistributionSpec, RuntimeDistribution};
use crate::error::{Error, Result};
use crate::execution::{Executor, RunSource};
use crate::procedures::{
    run_adaptive, run_fixed, run_oracle, ProcedureKind, ProcedureReport, StopConfig, Termination,
};
use crate::stats::{m_for_epsilon, oracle_alpha};
use crate::utility::UtilityFunction;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One named algorithm in a synthetic input file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub name: String,
    pub distribution: DistributionSpec,
}

/// On-disk description of a synthetic benchmark family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub algorithms: Vec<AlgorithmSpec>,
}

/// Parses a synthetic family from JSON.
pub fn parse_synthetic(json: &str) -> Result<(Vec<String>, Vec<RuntimeDistribution>)> {
    let spec: SyntheticSpec = serde_json::from_str(json)?;
    if spec.algorithms.is_empty() {
        return Err(Error::InvalidInput(
            "synthetic family has no algorithms".into(),
        ));
    }
    let names = spec.algorithms.iter().map(|a| a.name.clone()).collect();
    let dists = spec
        .algorithms
        .iter()
        .map(|a| a.distribution.build())
        .collect::<Result<_>>()?;
    Ok((names, dists))
}

/// The bundled five-arm benchmark family: heavy-tailed mixtures with
/// suboptimality gaps of 0, 0.05, 0.1, 0.2, and 0.4 under the default
/// utility function.
pub fn default_family() -> (Vec<String>, Vec<RuntimeDistribution>) {
    parse_synthetic(include_str!("../../assets/default_family.json"))
        .expect("bundled family parses")
}

/// Required-field schema of every JSON report the CLI can emit.
pub fn report_schema() -> &'static str {
    include_str!("../../assets/report_schema.json")
}

/// Loads a runtime matrix CSV: header `instance,<name>,...`, one row per
/// instance, strictly positive finite runtimes. Returns per-algorithm
/// runtime vectors.
pub fn load_matrix_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 {
        return Err(Error::InvalidInput(
            "matrix needs an instance column and at least one algorithm column".into(),
        ));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (row_idx, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::InvalidInput(format!(
                "row {} has {} fields, expected {}",
                row_idx + 1,
                record.len(),
                headers.len()
            )));
        }
        let instance = record.get(0).unwrap_or("");
        for (col, raw) in record.iter().skip(1).enumerate() {
            let value: f64 = raw.parse().map_err(|_| {
                Error::InvalidInput(format!(
                    "row '{instance}' (line {}), column '{}': '{raw}' is not a number",
                    row_idx + 1,
                    names[col]
                ))
            })?;
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "row '{instance}' (line {}), column '{}': runtime {value} must be \
                     finite and strictly positive",
                    row_idx + 1,
                    names[col]
                )));
            }
            columns[col].push(value);
        }
    }
    if columns[0].is_empty() {
        return Err(Error::InvalidInput("matrix has no instance rows".into()));
    }
    Ok((names, columns))
}

fn synthetic_executor(
    dists: &[RuntimeDistribution],
    names: &[String],
    seed: u64,
) -> Result<Executor> {
    Ok(Executor::new(RunSource::synthetic(
        dists.to_vec(),
        names.to_vec(),
        seed,
        0,
    )?))
}

/// One fixed-captime cost measurement.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CaptimeRow {
    pub kappa: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// NaN (null in JSON) marks an infeasible captime: u(κ) ≥ ε.
    pub total_time: f64,
}

/// Total cost of the fixed-captime procedure over a (κ, ε) grid.
/// Infeasible pairs (u(κ) ≥ ε) yield NaN rows; a grid with no feasible
/// pair at all is an error.
#[allow(clippy::too_many_arguments)]
pub fn sweep_captime(
    dists: &[RuntimeDistribution],
    names: &[String],
    u: &UtilityFunction,
    eps_grid: &[f64],
    delta: f64,
    kappas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<CaptimeRow>> {
    if kappas.is_empty() || eps_grid.is_empty() {
        return Err(Error::InvalidInput(
            "captime and epsilon grids must be non-empty".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let mut rows = Vec::new();
    let mut any_feasible = false;
    for &kappa in kappas {
        for &eps in eps_grid {
            for t in 0..trials {
                let trial_seed = seed.wrapping_add(t as u64);
                let total = {
                    let mut exec = synthetic_executor(dists, names, trial_seed)?;
                    match run_fixed(&mut exec, u, eps, delta, kappa, None) {
                        Ok(rep) => {
                            any_feasible = true;
                            rep.total_cost
                        }
                        Err(Error::Infeasible(_)) => f64::NAN,
                        Err(e) => return Err(e),
                    }
                };
                rows.push(CaptimeRow {
                    kappa,
                    epsilon: eps,
                    seed: trial_seed,
                    total_time: total,
                });
            }
        }
    }
    if !any_feasible {
        return Err(Error::Infeasible(
            "every (captime, epsilon) pair in the grid has u(kappa) >= epsilon".into(),
        ));
    }
    Ok(rows)
}

/// One procedure-cost measurement at a target guarantee.
#[derive(Debug, Clone, Serialize)]
pub struct EpsilonRow {
    pub procedure: String,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    /// NaN (null in JSON) marks an infeasible request.
    pub total_time: f64,
}

// Smallest m at which the oracle's certificate 2·alpha_m reaches eps.
fn oracle_m_for_epsilon(n: usize, delta: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {eps} must be positive"
        )));
    }
    let mut hi: usize = 2;
    while 2.0 * oracle_alpha(n, hi, delta) > eps {
        hi = hi.checked_mul(2).ok_or_else(|| {
            Error::InvalidParameter(format!("epsilon {eps} needs more than usize::MAX runs"))
        })?;
    }
    let mut lo: usize = 1;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if 2.0 * oracle_alpha(n, mid, delta) <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

// Cost at which `report` first guarantees eps via its per-round schedule
// of certificates; the run's final cost if it stopped before reaching it.
fn cost_at_guarantee(report: &ProcedureReport, m_needed: usize) -> f64 {
    if report.termination != Termination::MaxRuns && report.rounds < m_needed {
        return report.total_cost;
    }
    report
        .trace
        .get(m_needed.saturating_sub(1))
        .map(|p| p.total_cost)
        .unwrap_or(report.total_cost)
}

/// Total cost each procedure needs for an (ε, δ) guarantee, across grids
/// of ε and δ. The fixed-captime procedure runs at `kappa_fixed`; the
/// adaptive and oracle procedures run once per (δ, trial) and are read
/// off at each ε's guaranteed sample count.
#[allow(clippy::too_many_arguments)]
pub fn sweep_epsilon(
    dists: &[RuntimeDistribution],
    names: &[String],
    u: &UtilityFunction,
    eps_grid: &[f64],
    delta_grid: &[f64],
    kappa_fixed: f64,
    procedures: &[ProcedureKind],
    trials: usize,
    seed: u64,
    free_oracle: bool,
) -> Result<Vec<EpsilonRow>> {
    if eps_grid.is_empty() || delta_grid.is_empty() || procedures.is_empty() {
        return Err(Error::InvalidInput(
            "epsilon grid, delta grid, and procedures must be non-empty".into(),
        ));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let n = dists.len();
    let eps_min = eps_grid.iter().copied().fold(f64::INFINITY, f64::min);
    let mut rows = Vec::new();
    for &kind in procedures {
        for &delta in delta_grid {
            for t in 0..trials {
                let trial_seed = seed.wrapping_add(t as u64);
                match kind {
                    ProcedureKind::Fixed => {
                        for &eps in eps_grid {
                            let mut exec = synthetic_executor(dists, names, trial_seed)?;
                            let total = match run_fixed(&mut exec, u, eps, delta, kappa_fixed, None)
                            {
                                Ok(rep) => rep.total_cost,
                                Err(Error::Infeasible(_)) => f64::NAN,
                                Err(e) => return Err(e),
                            };
                            rows.push(EpsilonRow {
                                procedure: kind.token().to_string(),
                                epsilon: eps,
                                delta,
                                seed: trial_seed,
                                total_time: total,
                            });
                        }
                    }
                    ProcedureKind::Adaptive => {
                        let max_m = m_for_epsilon(n, delta, eps_min)?;
                        let mut exec = synthetic_executor(dists, names, trial_seed)?;
                        let stop = StopConfig {
                            max_m,
                            budget: None,
                        };
                        let rep = run_adaptive(&mut exec, u, delta, &stop, None)?;
                        for &eps in eps_grid {
                            let m_needed = m_for_epsilon(n, delta, eps)?;
                            rows.push(EpsilonRow {
                                procedure: kind.token().to_string(),
                                epsilon: eps,
                                delta,
                                seed: trial_seed,
                                total_time: cost_at_guarantee(&rep, m_needed),
                            });
                        }
                    }
                    ProcedureKind::Oracle => {
                        let max_m = oracle_m_for_epsilon(n, delta, eps_min)?;
                        let mut exec = synthetic_executor(dists, names, trial_seed)?;
                        let stop = StopConfig {
                            max_m,
                            budget: None,
                        };
                        let rep =
                            run_oracle(&mut exec, u, delta, &stop, free_oracle, None)?;
                        for &eps in eps_grid {
                            let m_needed = oracle_m_for_epsilon(n, delta, eps)?;
                            rows.push(EpsilonRow {
                                procedure: kind.token().to_string(),
                                epsilon: eps,
                                delta,
                                seed: trial_seed,
                                total_time: cost_at_guarantee(&rep, m_needed),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Empirical correctness of a procedure's returned winner.
#[derive(Debug, Clone, Serialize)]
pub struct CorrectnessReport {
    pub procedure: String,
    pub epsilon: f64,
    pub delta: f64,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

/// Wilson 95% score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Runs a procedure `trials` times on fresh synthetic draws and counts how
/// often the returned winner is truly ε-optimal (exact utilities computed
/// by quadrature). The fixed-captime procedure requires `kappa`.
#[allow(clippy::too_many_arguments)]
pub fn montecarlo_correctness(
    dists: &[RuntimeDistribution],
    names: &[String],
    u: &UtilityFunction,
    kind: ProcedureKind,
    eps: f64,
    delta: f64,
    trials: usize,
    seed: u64,
    kappa: Option<f64>,
) -> Result<CorrectnessReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let n = dists.len();
    let utilities: Vec<f64> = dists
        .iter()
        .map(|d| d.expected_utility(u, f64::INFINITY))
        .collect::<Result<_>>()?;
    let best = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut successes = 0;
    for t in 0..trials {
        let trial_seed = seed.wrapping_add(t as u64);
        let mut exec = synthetic_executor(dists, names, trial_seed)?;
        let winner = match kind {
            ProcedureKind::Fixed => {
                let kappa = kappa.ok_or_else(|| {
                    Error::InvalidInput("the fixed-captime procedure needs --captime".into())
                })?;
                run_fixed(&mut exec, u, eps, delta, kappa, None)?.winner
            }
            ProcedureKind::Adaptive => {
                let stop = StopConfig {
                    max_m: m_for_epsilon(n, delta, eps)?,
                    budget: None,
                };
                run_adaptive(&mut exec, u, delta, &stop, None)?.winner
            }
            ProcedureKind::Oracle => {
                let stop = StopConfig {
                    max_m: oracle_m_for_epsilon(n, delta, eps)?,
                    budget: None,
                };
                run_oracle(&mut exec, u, delta, &stop, false, None)?.winner
            }
        };
        if utilities[winner] >= best - eps - 1e-9 {
            successes += 1;
        }
    }
    let (lo, hi) = wilson_interval(successes, trials);
    Ok(CorrectnessReport {
        procedure: kind.token().to_string(),
        epsilon: eps,
        delta,
        trials,
        successes,
        rate: successes as f64 / trials as f64,
        wilson_low: lo,
        wilson_high: hi,
    })
}

/// Output format for emitted reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "svg" => Ok(Self::Svg),
            other => Err(Error::InvalidInput(format!(
                "unknown format '{other}' (expected csv, json, or svg)"
            ))),
        }
    }
}

fn rows_to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv buffer error: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    Ok(format!("{}\n", serde_json::to_string_pretty(value)?))
}

// running per-x accumulator: (x, total, count)
type MeanAccum = Vec<(f64, f64, usize)>;

// Mean of the finite totals grouped by a key, in first-appearance order.
fn grouped_means<K: PartialEq + Clone>(
    items: impl Iterator<Item = (K, f64, f64)>,
) -> Vec<(K, Vec<(f64, f64)>)> {
    let mut groups: Vec<(K, MeanAccum)> = Vec::new();
    for (key, x, y) in items {
        if !y.is_finite() {
            continue;
        }
        let group = match groups.iter_mut().find(|(k, _)| *k == key) {
            Some(g) => &mut g.1,
            None => {
                groups.push((key, Vec::new()));
                &mut groups.last_mut().unwrap().1
            }
        };
        match group.iter_mut().find(|(gx, _, _)| *gx == x) {
            Some(slot) => {
                slot.1 += y;
                slot.2 += 1;
            }
            None => group.push((x, y, 1)),
        }
    }
    groups
        .into_iter()
        .map(|(k, pts)| {
            (
                k,
                pts.into_iter()
                    .map(|(x, sum, cnt)| (x, sum / cnt as f64))
                    .collect(),
            )
        })
        .collect()
}

/// Emits a captime sweep in the chosen format.
pub fn emit_captime(rows: &[CaptimeRow], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => rows_to_csv(rows),
        OutputFormat::Json => to_json_pretty(&rows),
        OutputFormat::Svg => {
            let groups =
                grouped_means(rows.iter().map(|r| (r.epsilon.to_bits(), r.kappa, r.total_time)));
            let series: Vec<svg::Series> = groups
                .into_iter()
                .map(|(eps_bits, mut points)| {
                    points.sort_by(|a, b| a.0.total_cmp(&b.0));
                    svg::Series {
                        label: format!("eps = {}", f64::from_bits(eps_bits)),
                        points,
                    }
                })
                .collect();
            Ok(svg::line_chart(
                "Total configuration time by captime",
                "captime",
                "total time",
                &series,
                true,
            ))
        }
    }
}

/// Emits an epsilon sweep in the chosen format.
pub fn emit_epsilon(rows: &[EpsilonRow], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => rows_to_csv(rows),
        OutputFormat::Json => to_json_pretty(&rows),
        OutputFormat::Svg => {
            let groups = grouped_means(
                rows.iter()
                    .map(|r| ((r.procedure.clone(), r.delta.to_bits()), r.epsilon, r.total_time)),
            );
            let series: Vec<svg::Series> = groups
                .into_iter()
                .map(|((proc_name, delta_bits), mut points)| {
                    points.sort_by(|a, b| a.0.total_cmp(&b.0));
                    svg::Series {
                        label: format!("{proc_name}, delta = {}", f64::from_bits(delta_bits)),
                        points,
                    }
                })
                .collect();
            Ok(svg::line_chart(
                "Total configuration time by guarantee",
                "epsilon",
                "total time",
                &series,
                false,
            ))
        }
    }
}

/// Emits a correctness report in the chosen format.
pub fn emit_correctness(report: &CorrectnessReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => rows_to_csv(std::slice::from_ref(report)),
        OutputFormat::Json => to_json_pretty(report),
        OutputFormat::Svg => Ok(svg::rate_chart(
            &format!(
                "{} correctness, eps = {}, delta = {}",
                report.procedure, report.epsilon, report.delta
            ),
            report.rate,
            report.wilson_low,
            report.wilson_high,
        )),
    }
}

/// Emits a single procedure run in the chosen format (CSV and SVG render
/// the per-round certificate trace).
pub fn emit_run(report: &ProcedureReport, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => rows_to_csv(&report.trace),
        OutputFormat::Json => to_json_pretty(report),
        OutputFormat::Svg => {
            let series = vec![svg::Series {
                label: format!("{} certificate", report.procedure),
                points: report
                    .trace
                    .iter()
                    .map(|p| (p.m as f64, p.eps_hat))
                    .collect(),
            }];
            Ok(svg::line_chart(
                "Suboptimality certificate by round",
                "runs per arm",
                "eps",
                &series,
                false,
            ))
        }
    }
}
