//! Oscillator problems `eps^2 (a(t)^2 y')' + f(y) = m(t)` on `[t_begin, t_end]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::FunctionSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorProblem {
    /// Positive coefficient of the highest derivative.
    pub a: FunctionSpec,
    /// Forcing term.
    pub m: FunctionSpec,
    /// Restoring force.
    pub f: FunctionSpec,
    pub t_begin: f64,
    pub t_end: f64,
}

/// Where a violation was observed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Time(f64),
    State(f64),
    Point { t: f64, y: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub location: Option<Location>,
    pub detail: String,
}

/// Outcome of a check; `passed` holds exactly when `violations` is empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn new() -> Self {
        ValidationReport {
            passed: true,
            violations: Vec::new(),
        }
    }

    pub fn push(&mut self, check: &str, location: Option<Location>, detail: impl Into<String>) {
        self.violations.push(Violation {
            check: check.to_string(),
            location,
            detail: detail.into(),
        });
        self.passed = false;
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
        self.passed = self.violations.is_empty();
    }

    pub fn has_check(&self, check: &str) -> bool {
        self.violations.iter().any(|v| v.check == check)
    }
}

impl OscillatorProblem {
    pub fn new(
        a: FunctionSpec,
        m: FunctionSpec,
        f: FunctionSpec,
        t_begin: f64,
        t_end: f64,
    ) -> Self {
        OscillatorProblem {
            a,
            m,
            f,
            t_begin,
            t_end,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t_begin, self.t_end)
    }

    pub fn length(&self) -> f64 {
        self.t_end - self.t_begin
    }

    pub fn contains(&self, t: f64) -> bool {
        let tol = 1e-12 * (1.0 + self.t_begin.abs().max(self.t_end.abs()));
        t >= self.t_begin - tol && t <= self.t_end + tol
    }

    /// Interval ordering plus certified positivity of `a`.
    ///
    /// `a` is sampled on `grid_n` equispaced points. With `L` a bound on
    /// `|a'|` and `h` the spacing, `a(t_k) > L h / 2` at every node proves
    /// `a > 0` on the whole interval.
    pub fn validate(&self, grid_n: usize) -> Result<ValidationReport> {
        if grid_n < 16 {
            return Err(Error::InvalidArgument(format!(
                "validation grid needs >= 16 points, got {grid_n}"
            )));
        }
        let mut report = ValidationReport::new();
        let (tb, te) = self.interval();
        if !tb.is_finite() || !te.is_finite() {
            report.push("interval", None, "non-finite interval bound");
            return Ok(report);
        }
        if tb >= te {
            report.push(
                "interval",
                Some(Location::Time(tb)),
                format!("empty interval: t_begin = {tb} is not below t_end = {te}"),
            );
        }
        let (lo, hi) = (tb.min(te), tb.max(te));
        let h = (hi - lo) / (grid_n - 1) as f64;
        let lipschitz = self.a.derivative_bound(lo, hi);
        let margin = 0.5 * lipschitz * h;
        let mut first_bad = None;
        let mut weakest = (f64::INFINITY, lo);
        for k in 0..grid_n {
            let t = if k + 1 == grid_n {
                hi
            } else {
                lo + k as f64 * h
            };
            let a = self.a.value(t);
            if !a.is_finite() || a <= 0.0 {
                first_bad.get_or_insert((t, a));
            }
            if a < weakest.0 {
                weakest = (a, t);
            }
            for (name, spec) in [("m", &self.m), ("a", &self.a)] {
                let j = spec.jet(t);
                if !j[0].is_finite() || !j[1].is_finite() {
                    report.push(
                        "finite",
                        Some(Location::Time(t)),
                        format!("{name} or its derivative is not finite"),
                    );
                }
            }
        }
        if let Some((t, a)) = first_bad {
            report.push(
                "a-positive",
                Some(Location::Time(t)),
                format!("a non-positive: a({t}) = {a}"),
            );
        } else if weakest.0 <= margin {
            report.push(
                "a-positive",
                Some(Location::Time(weakest.1)),
                format!(
                    "positivity of a not certified: min grid value {} <= Lipschitz margin {margin}",
                    weakest.0
                ),
            );
        }
        Ok(report)
    }
}

/// Names of the builtin instances.
pub const BUILTIN_NAMES: [&str; 3] = ["D0", "D1", "D2"];

/// Builtin instances.
///
/// * `D0`: harmonic, `f(y) = y`, `m = 0`, `a = 1` on `[0, 1]`;
/// * `D1`: double-well ramp, `f(y) = y^3 - y`, `m(t) = -t`, `a = 1` on `[-1, 1]`;
/// * `D2`: `D1` with `a(t) = 1 + t/4`.
pub fn builtin(name: &str) -> Result<OscillatorProblem> {
    let poly = |c: &[f64]| FunctionSpec::polynomial(c).expect("builtin coefficients are valid");
    let problem = match name {
        "D0" => OscillatorProblem::new(poly(&[1.0]), poly(&[0.0]), poly(&[0.0, 1.0]), 0.0, 1.0),
        "D1" => OscillatorProblem::new(
            poly(&[1.0]),
            poly(&[0.0, -1.0]),
            poly(&[0.0, -1.0, 0.0, 1.0]),
            -1.0,
            1.0,
        ),
        "D2" => OscillatorProblem::new(
            poly(&[1.0, 0.25]),
            poly(&[0.0, -1.0]),
            poly(&[0.0, -1.0, 0.0, 1.0]),
            -1.0,
            1.0,
        ),
        other => return Err(Error::UnknownInstance(other.to_string())),
    };
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        for name in BUILTIN_NAMES {
            let p = builtin(name).unwrap();
            let report = p.validate(64).unwrap();
            assert!(report.passed, "{name}: {report:?}");
        }
    }

    #[test]
    fn builtin_values() {
        let d0 = builtin("D0").unwrap();
        assert_eq!(d0.f.d1(3.0), 1.0);
        assert!(d0.m.is_constant() && d0.m.value(0.3) == 0.0);
        let d1 = builtin("D1").unwrap();
        assert_eq!(d1.f.value(0.5), -0.375);
        assert_eq!(d1.m.value(0.5), -0.5);
        let d2 = builtin("D2").unwrap();
        assert_eq!(d2.a.value(-1.0), 0.75);
        assert!(matches!(builtin("D9"), Err(Error::UnknownInstance(_))));
    }

    #[test]
    fn nonpositive_coefficient_is_reported() {
        let mut p = builtin("D1").unwrap();
        p.a = FunctionSpec::polynomial(&[0.0, 1.0]).unwrap();
        let report = p.validate(32).unwrap();
        assert!(!report.passed);
        let v = &report.violations[0];
        assert_eq!(v.check, "a-positive");
        match v.location {
            Some(Location::Time(t)) => assert!(t <= 0.0),
            other => panic!("unexpected location {other:?}"),
        }
    }

    #[test]
    fn empty_interval_is_reported() {
        let mut p = builtin("D0").unwrap();
        p.t_end = p.t_begin;
        let report = p.validate(16).unwrap();
        assert!(report.has_check("interval"));
        assert!(report.violations[0].detail.contains("empty interval"));
        assert!(p.validate(8).is_err());
    }

    #[test]
    fn json_schema() {
        let p = builtin("D2").unwrap();
        let text = p.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys.len(), 5);
        for k in ["a", "m", "f", "t_begin", "t_end"] {
            assert!(keys.contains(&k));
        }
        assert_eq!(v["a"]["kind"], "polynomial");
        assert_eq!(OscillatorProblem::from_json(&text).unwrap(), p);
    }
}
