//! Run execution: serving capped runs from a measured matrix or from
//! synthetic ground-truth distributions, with caching and cost accounting.
//!
//! A capped run at captime κ observes min(t, κ) and completes iff t < κ.
//! Completed runs are cached and reused free of charge at any higher
//! captime. A capped (incomplete) run requested again at a higher captime
//! is executed again from scratch and charged in full; it is never served
//! at a captime above the one it was produced with. Captimes for a given
//! (algorithm, instance) pair must never decrease.

use crate::distributions::RuntimeDistribution;
use crate::error::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One executed (or re-executed) capped run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRecord {
    pub algorithm: usize,
    pub instance: usize,
    /// Captime the run was executed under.
    pub cap: f64,
    /// min(t, cap): the runtime actually observed.
    pub observed: f64,
    /// Whether t < cap.
    pub completed: bool,
}

/// Accumulates simulated runtime spent, in the same units as the runtimes.
#[derive(Debug, Default, Clone)]
pub struct CostLedger {
    total: f64,
}

impl CostLedger {
    pub fn charge(&mut self, seconds: f64) {
        self.total += seconds;
    }

    pub fn total(&self) -> f64 {
        self.total
    }
}

/// Where true runtimes come from.
pub enum RunSource {
    /// Measured runtimes: `runtimes[algorithm][instance]`, instance order
    /// already permuted at construction.
    Matrix {
        runtimes: Vec<Vec<f64>>,
        names: Vec<String>,
    },
    /// Ground-truth distributions sampled lazily, one independent stream
    /// per (seed, trial, algorithm, instance).
    Synthetic {
        distributions: Vec<RuntimeDistribution>,
        names: Vec<String>,
        seed: u64,
        trial: u64,
    },
}

// splitmix64 finalizer; decorrelates the per-run stream seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic RNG for one (seed, trial, algorithm, instance) run.
pub fn run_rng(seed: u64, trial: u64, algorithm: u64, instance: u64) -> ChaCha8Rng {
    let combined = mix(seed ^ mix(trial ^ mix(algorithm ^ mix(instance))));
    ChaCha8Rng::seed_from_u64(combined)
}

impl RunSource {
    /// Matrix source with instance order shuffled by `seed` and `trial`
    /// (the same permutation for every algorithm, keeping runs paired).
    pub fn matrix(runtimes: Vec<Vec<f64>>, names: Vec<String>, seed: u64, trial: u64) -> Result<Self> {
        if runtimes.is_empty() {
            return Err(Error::InvalidInput("matrix has no algorithms".into()));
        }
        let width = runtimes[0].len();
        if width == 0 {
            return Err(Error::InvalidInput("matrix has no instances".into()));
        }
        if runtimes.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidInput(
                "matrix rows have inconsistent instance counts".into(),
            ));
        }
        let mut perm: Vec<usize> = (0..width).collect();
        let mut rng = run_rng(seed, trial, u64::MAX, u64::MAX);
        // Fisher-Yates
        for i in (1..width).rev() {
            let j = (rand::Rng::gen::<u64>(&mut rng) % (i as u64 + 1)) as usize;
            perm.swap(i, j);
        }
        let runtimes = runtimes
            .into_iter()
            .map(|row| perm.iter().map(|&j| row[j]).collect())
            .collect();
        Ok(Self::Matrix { runtimes, names })
    }

    pub fn synthetic(
        distributions: Vec<RuntimeDistribution>,
        names: Vec<String>,
        seed: u64,
        trial: u64,
    ) -> Result<Self> {
        if distributions.is_empty() {
            return Err(Error::InvalidInput("no distributions given".into()));
        }
        Ok(Self::Synthetic {
            distributions,
            names,
            seed,
            trial,
        })
    }

    pub fn algorithm_count(&self) -> usize {
        match self {
            Self::Matrix { runtimes, .. } => runtimes.len(),
            Self::Synthetic { distributions, .. } => distributions.len(),
        }
    }

    pub fn names(&self) -> &[String] {
        match self {
            Self::Matrix { names, .. } => names,
            Self::Synthetic { names, .. } => names,
        }
    }

    /// Number of instances available, if bounded.
    pub fn instance_capacity(&self) -> Option<usize> {
        match self {
            Self::Matrix { runtimes, .. } => Some(runtimes[0].len()),
            Self::Synthetic { .. } => None,
        }
    }
}

// Per-algorithm run cache. `capped` holds indices of records that hit their
// captime, the only ones a captime increase must re-execute.
struct ArmCache {
    records: Vec<RunRecord>,
    cap: f64,
    capped: Vec<usize>,
    true_times: Vec<f64>,
}

/// Serves capped runs to the selection procedures.
pub struct Executor {
    source: RunSource,
    arms: Vec<ArmCache>,
    ledger: CostLedger,
}

impl Executor {
    pub fn new(source: RunSource) -> Self {
        let n = source.algorithm_count();
        Executor {
            source,
            arms: (0..n)
                .map(|_| ArmCache {
                    records: Vec::new(),
                    cap: 0.0,
                    capped: Vec::new(),
                    true_times: Vec::new(),
                })
                .collect(),
            ledger: CostLedger::default(),
        }
    }

    pub fn source(&self) -> &RunSource {
        &self.source
    }

    pub fn algorithm_count(&self) -> usize {
        self.source.algorithm_count()
    }

    pub fn instance_capacity(&self) -> Option<usize> {
        self.source.instance_capacity()
    }

    pub fn total_cost(&self) -> f64 {
        self.ledger.total()
    }

    /// Cached records for an arm: one per instance, at the arm's current cap.
    pub fn records(&self, algorithm: usize) -> &[RunRecord] {
        &self.arms[algorithm].records
    }

    fn true_time(&mut self, algorithm: usize, instance: usize) -> Result<f64> {
        if instance < self.arms[algorithm].true_times.len() {
            return Ok(self.arms[algorithm].true_times[instance]);
        }
        match &self.source {
            RunSource::Matrix { runtimes, names } => {
                let row = &runtimes[algorithm];
                if instance >= row.len() {
                    return Err(Error::SourceExhausted {
                        algorithm: names
                            .get(algorithm)
                            .cloned()
                            .unwrap_or_else(|| algorithm.to_string()),
                        instance,
                    });
                }
                Ok(row[instance])
            }
            RunSource::Synthetic {
                distributions,
                seed,
                trial,
                ..
            } => {
                let cache = &mut self.arms[algorithm];
                while cache.true_times.len() <= instance {
                    let j = cache.true_times.len();
                    let mut rng = run_rng(*seed, *trial, algorithm as u64, j as u64);
                    cache
                        .true_times
                        .push(distributions[algorithm].sample(&mut rng));
                }
                Ok(cache.true_times[instance])
            }
        }
    }

    fn execute(&mut self, algorithm: usize, instance: usize, cap: f64) -> Result<RunRecord> {
        let t = self.true_time(algorithm, instance)?;
        let completed = t < cap;
        let observed = if completed { t } else { cap };
        self.ledger.charge(observed);
        Ok(RunRecord {
            algorithm,
            instance,
            cap,
            observed,
            completed,
        })
    }

    /// Ensures instances 0..m of `algorithm` all ran under captime `cap`,
    /// executing (or re-executing) only what the cache cannot serve, and
    /// returns the records. `cap` may be `f64::INFINITY`.
    pub fn sync_runs(&mut self, algorithm: usize, m: usize, cap: f64) -> Result<&[RunRecord]> {
        if !(cap > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "captime {cap} must be positive"
            )));
        }
        let arm_cap = self.arms[algorithm].cap;
        if !self.arms[algorithm].records.is_empty() && cap < arm_cap {
            return Err(Error::CaptimeRegression {
                algorithm: self
                    .source
                    .names()
                    .get(algorithm)
                    .cloned()
                    .unwrap_or_else(|| algorithm.to_string()),
                cached: arm_cap,
                requested: cap,
            });
        }
        if cap > arm_cap {
            // Completed records stay valid (t < old cap ≤ new cap) and are
            // reused free; capped ones are executed again from scratch.
            let capped = std::mem::take(&mut self.arms[algorithm].capped);
            for idx in capped {
                let rec = self.execute(algorithm, idx, cap)?;
                if !rec.completed {
                    self.arms[algorithm].capped.push(idx);
                }
                self.arms[algorithm].records[idx] = rec;
            }
            self.arms[algorithm].cap = cap;
        }
        while self.arms[algorithm].records.len() < m {
            let idx = self.arms[algorithm].records.len();
            let rec = self.execute(algorithm, idx, cap)?;
            if !rec.completed {
                self.arms[algorithm].capped.push(idx);
            }
            self.arms[algorithm].records.push(rec);
        }
        Ok(&self.arms[algorithm].records[..m])
    }

    /// One uncapped run observing the true runtime; charges it in full
    /// unless `free` is set.
    pub fn uncapped_run(&mut self, algorithm: usize, instance: usize, free: bool) -> Result<f64> {
        let t = self.true_time(algorithm, instance)?;
        if !free {
            self.ledger.charge(t);
        }
        Ok(t)
    }
}
