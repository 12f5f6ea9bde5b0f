//! Utility functions over runtime.
//!
//! A utility function maps a runtime t ≥ 0 to a value in [0, 1]. It is 1 at
//! t = 0, non-increasing, and tends to 0 as t grows. Each variant also
//! exposes a generalized inverse, used by the verification procedures to
//! place counterexample mass at a prescribed utility level.

use crate::error::{Error, Result};
use std::path::Path;

/// Piecewise-linear utility given by breakpoints (time, utility).
///
/// Utility is constant 1 before the first breakpoint, linearly interpolated
/// between breakpoints, and 0 beyond the last (a jump when the last utility
/// is positive).
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseTable {
    points: Vec<(f64, f64)>,
}

impl PiecewiseTable {
    /// Builds a table from breakpoints with strictly increasing times,
    /// non-increasing utilities in [0, 1], and first utility exactly 1.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter(
                "utility table needs at least one breakpoint".into(),
            ));
        }
        for &(t, u) in &points {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "table breakpoint time {t} must be finite and non-negative"
                )));
            }
            if !u.is_finite() || !(0.0..=1.0).contains(&u) {
                return Err(Error::InvalidParameter(format!(
                    "table utility {u} must lie in [0, 1]"
                )));
            }
        }
        if points[0].1 != 1.0 {
            return Err(Error::InvalidParameter(
                "first table utility must be 1".into(),
            ));
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidParameter(
                    "table times must be strictly increasing".into(),
                ));
            }
            if w[1].1 > w[0].1 {
                return Err(Error::InvalidParameter(
                    "table utilities must be non-increasing".into(),
                ));
            }
        }
        Ok(Self { points })
    }

    fn eval(&self, t: f64) -> f64 {
        let pts = &self.points;
        if t <= pts[0].0 {
            return 1.0;
        }
        let last = pts[pts.len() - 1];
        if t > last.0 {
            return 0.0;
        }
        // t lies in (pts[0].0, last.0]; find the bracketing segment.
        let hi = pts.partition_point(|&(bt, _)| bt < t);
        let (t0, u0) = pts[hi - 1];
        let (t1, u1) = pts[hi];
        u0 + (u1 - u0) * (t - t0) / (t1 - t0)
    }

    // inf{t : u(t) <= x}; at the terminal jump the infimum is the last
    // breakpoint time even though the value there exceeds x.
    fn inverse(&self, x: f64) -> f64 {
        let pts = &self.points;
        if x >= 1.0 {
            return 0.0;
        }
        for i in 1..pts.len() {
            let (t0, u0) = pts[i - 1];
            let (t1, u1) = pts[i];
            if u1 <= x {
                if u0 == u1 {
                    return t0;
                }
                return t0 + (u0 - x) * (t1 - t0) / (u0 - u1);
            }
        }
        pts[pts.len() - 1].0
    }
}

/// A bounded non-increasing utility over runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilityFunction {
    /// 1 − ½(t/scale)^(1/shape) up to `scale`, then ½(scale/t)^(1/shape).
    /// Utility reaches ½ exactly at t = scale.
    LogLaplace { scale: f64, shape: f64 },
    /// 1 − t/scale up to `scale`, then 0.
    Uniform { scale: f64 },
    /// Piecewise-linear interpolation of explicit breakpoints.
    Table(PiecewiseTable),
}

impl UtilityFunction {
    /// Log-Laplace utility with time constant `scale` and shape `shape`.
    pub fn log_laplace(scale: f64, shape: f64) -> Result<Self> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "log-laplace scale {scale} must be finite and positive"
            )));
        }
        if !shape.is_finite() || shape <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "log-laplace shape {shape} must be finite and positive"
            )));
        }
        Ok(Self::LogLaplace { scale, shape })
    }

    /// Uniform (linear ramp) utility hitting 0 at t = `scale`.
    pub fn uniform(scale: f64) -> Result<Self> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "uniform utility scale {scale} must be finite and positive"
            )));
        }
        Ok(Self::Uniform { scale })
    }

    /// Piecewise-linear utility from explicit breakpoints.
    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        Ok(Self::Table(PiecewiseTable::new(points)?))
    }

    /// Parses a CLI utility spec: `loglaplace:<scale>,<shape>`,
    /// `uniform:<scale>`, or `table:<path.csv>` (two columns: time, utility).
    pub fn from_spec(spec: &str) -> Result<Self> {
        let (kind, rest) = spec.split_once(':').ok_or_else(|| {
            Error::InvalidInput(format!("utility spec `{spec}` missing `:`"))
        })?;
        match kind {
            "loglaplace" => {
                let (a, b) = rest.split_once(',').ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "loglaplace spec `{rest}` needs <scale>,<shape>"
                    ))
                })?;
                let scale = parse_f64(a)?;
                let shape = parse_f64(b)?;
                Self::log_laplace(scale, shape)
            }
            "uniform" => Self::uniform(parse_f64(rest)?),
            "table" => Self::table(read_table_csv(Path::new(rest))?),
            other => Err(Error::InvalidInput(format!(
                "unknown utility kind `{other}` (expected loglaplace, uniform, or table)"
            ))),
        }
    }

    /// Utility of a runtime. Errors on negative or NaN input; +∞ maps to 0.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::InvalidRuntime(t));
        }
        Ok(match *self {
            Self::LogLaplace { scale, shape } => {
                if t == f64::INFINITY {
                    0.0
                } else if t <= scale {
                    1.0 - 0.5 * (t / scale).powf(1.0 / shape)
                } else {
                    0.5 * (scale / t).powf(1.0 / shape)
                }
            }
            Self::Uniform { scale } => {
                if t >= scale {
                    0.0
                } else {
                    1.0 - t / scale
                }
            }
            Self::Table(ref table) => {
                if t == f64::INFINITY {
                    0.0
                } else {
                    table.eval(t)
                }
            }
        })
    }

    /// Generalized inverse inf{t : u(t) ≤ x} for x in [0, 1].
    ///
    /// For the strictly decreasing variants this is the exact inverse;
    /// `inverse(0)` is +∞ when utility never reaches 0 (log-Laplace) and the
    /// first zero otherwise. Errors outside [0, 1].
    pub fn inverse(&self, x: f64) -> Result<f64> {
        if x.is_nan() || !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidParameter(format!(
                "utility inverse argument {x} must lie in [0, 1]"
            )));
        }
        Ok(match *self {
            Self::LogLaplace { scale, shape } => {
                if x == 0.0 {
                    f64::INFINITY
                } else if x >= 0.5 {
                    scale * (2.0 * (1.0 - x)).powf(shape)
                } else {
                    scale * (2.0 * x).powf(-shape)
                }
            }
            Self::Uniform { scale } => {
                if x == 0.0 {
                    scale
                } else {
                    scale * (1.0 - x)
                }
            }
            Self::Table(ref table) => table.inverse(x),
        })
    }

    /// Times where the utility is non-smooth; quadrature splits its domain
    /// here.
    pub fn knots(&self) -> Vec<f64> {
        match *self {
            Self::LogLaplace { scale, .. } | Self::Uniform { scale } => vec![scale],
            Self::Table(ref table) => table.points.iter().map(|&(t, _)| t).collect(),
        }
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidInput(format!("`{s}` is not a number")))
}

fn read_table_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 2 {
            return Err(Error::InvalidInput(format!(
                "utility table row `{}` needs exactly two columns",
                record.iter().collect::<Vec<_>>().join(",")
            )));
        }
        points.push((parse_f64(&record[0])?, parse_f64(&record[1])?));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ll60() -> UtilityFunction {
        UtilityFunction::log_laplace(60.0, 1.0).unwrap()
    }

    #[test]
    fn log_laplace_matches_hand_values() {
        let u = ll60();
        assert_eq!(u.eval(0.0).unwrap(), 1.0);
        // 1 - 0.5*(30/60) = 0.75
        assert_relative_eq!(u.eval(30.0).unwrap(), 0.75);
        assert_relative_eq!(u.eval(60.0).unwrap(), 0.5);
        // 0.5*(60/120) = 0.25
        assert_relative_eq!(u.eval(120.0).unwrap(), 0.25);
        assert_eq!(u.eval(f64::INFINITY).unwrap(), 0.0);
    }

    #[test]
    fn log_laplace_inverse_matches_hand_values() {
        let u = ll60();
        assert_relative_eq!(u.inverse(0.75).unwrap(), 30.0);
        assert_relative_eq!(u.inverse(0.5).unwrap(), 60.0);
        assert_relative_eq!(u.inverse(0.25).unwrap(), 120.0);
        assert_eq!(u.inverse(1.0).unwrap(), 0.0);
        assert_eq!(u.inverse(0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn log_laplace_general_shape() {
        let u = UtilityFunction::log_laplace(60.0, 2.0).unwrap();
        // 1 - 0.5*(15/60)^(1/2) = 1 - 0.5*0.5 = 0.75
        assert_relative_eq!(u.eval(15.0).unwrap(), 0.75);
        // 0.5*(60/240)^(1/2) = 0.25
        assert_relative_eq!(u.eval(240.0).unwrap(), 0.25);
        // 60*(2*(1-0.75))^2 = 60*0.25 = 15
        assert_relative_eq!(u.inverse(0.75).unwrap(), 15.0);
        // 60*(2*0.25)^(-2) = 240
        assert_relative_eq!(u.inverse(0.25).unwrap(), 240.0);
    }

    #[test]
    fn uniform_matches_hand_values() {
        let u = UtilityFunction::uniform(60.0).unwrap();
        assert_eq!(u.eval(0.0).unwrap(), 1.0);
        assert_relative_eq!(u.eval(30.0).unwrap(), 0.5);
        assert_eq!(u.eval(60.0).unwrap(), 0.0);
        assert_eq!(u.eval(100.0).unwrap(), 0.0);
        assert_relative_eq!(u.inverse(0.5).unwrap(), 30.0);
        assert_eq!(u.inverse(1.0).unwrap(), 0.0);
        // utility first reaches 0 at the scale itself
        assert_eq!(u.inverse(0.0).unwrap(), 60.0);
    }

    #[test]
    fn table_interpolates_and_jumps() {
        let u =
            UtilityFunction::table(vec![(0.0, 1.0), (10.0, 0.8), (20.0, 0.2)]).unwrap();
        // linear from (0,1) to (10,0.8)
        assert_relative_eq!(u.eval(5.0).unwrap(), 0.9);
        assert_relative_eq!(u.eval(10.0).unwrap(), 0.8);
        // linear from (10,0.8) to (20,0.2)
        assert_relative_eq!(u.eval(15.0).unwrap(), 0.5);
        assert_relative_eq!(u.eval(20.0).unwrap(), 0.2);
        // jump to zero past the last breakpoint
        assert_eq!(u.eval(20.000001).unwrap(), 0.0);
        assert_relative_eq!(u.inverse(0.9).unwrap(), 5.0);
        assert_relative_eq!(u.inverse(0.5).unwrap(), 15.0);
        assert_relative_eq!(u.inverse(0.2).unwrap(), 20.0);
        // 0.1 is skipped by the jump; infimum sits at the last breakpoint
        assert_relative_eq!(u.inverse(0.1).unwrap(), 20.0);
        assert_relative_eq!(u.inverse(0.0).unwrap(), 20.0);
        assert_eq!(u.inverse(1.0).unwrap(), 0.0);
    }

    #[test]
    fn table_flat_before_first_breakpoint() {
        let u = UtilityFunction::table(vec![(5.0, 1.0), (10.0, 0.0)]).unwrap();
        assert_eq!(u.eval(0.0).unwrap(), 1.0);
        assert_eq!(u.eval(5.0).unwrap(), 1.0);
        assert_relative_eq!(u.eval(7.5).unwrap(), 0.5);
        // inverse of 1 is the infimum of the flat-1 region
        assert_eq!(u.inverse(1.0).unwrap(), 0.0);
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(UtilityFunction::log_laplace(0.0, 1.0).is_err());
        assert!(UtilityFunction::log_laplace(60.0, -1.0).is_err());
        assert!(UtilityFunction::log_laplace(f64::NAN, 1.0).is_err());
        assert!(UtilityFunction::uniform(-5.0).is_err());
        assert!(UtilityFunction::table(vec![]).is_err());
        // first utility must be 1
        assert!(UtilityFunction::table(vec![(0.0, 0.9)]).is_err());
        // times strictly increasing
        assert!(UtilityFunction::table(vec![(0.0, 1.0), (0.0, 0.5)]).is_err());
        // utilities non-increasing
        assert!(UtilityFunction::table(vec![(0.0, 1.0), (1.0, 0.2), (2.0, 0.4)]).is_err());
        // utilities within [0, 1]
        assert!(UtilityFunction::table(vec![(0.0, 1.0), (1.0, 1.2)]).is_err());
    }

    #[test]
    fn eval_rejects_bad_runtimes() {
        let u = ll60();
        assert!(u.eval(-1.0).is_err());
        assert!(u.eval(f64::NAN).is_err());
        assert!(u.inverse(-0.1).is_err());
        assert!(u.inverse(1.1).is_err());
        assert!(u.inverse(f64::NAN).is_err());
    }

    #[test]
    fn spec_strings_parse() {
        assert_eq!(
            UtilityFunction::from_spec("loglaplace:60,1").unwrap(),
            ll60()
        );
        assert_eq!(
            UtilityFunction::from_spec("uniform:60").unwrap(),
            UtilityFunction::uniform(60.0).unwrap()
        );
        assert!(UtilityFunction::from_spec("loglaplace:60").is_err());
        assert!(UtilityFunction::from_spec("ramp:60").is_err());
        assert!(UtilityFunction::from_spec("uniform").is_err());
    }

    #[test]
    fn knots_mark_non_smooth_times() {
        assert_eq!(ll60().knots(), vec![60.0]);
        assert_eq!(
            UtilityFunction::table(vec![(0.0, 1.0), (10.0, 0.8), (20.0, 0.2)])
                .unwrap()
                .knots(),
            vec![0.0, 10.0, 20.0]
        );
    }
}
