//! Exactly differentiable scalar functions.
//!
//! A [`FunctionSpec`] is a polynomial, a sum of sines, or both. Values,
//! first and second derivatives and the antiderivative vanishing at zero are
//! all evaluated in closed form.
//!
//! On disk a function is `{"kind": ..., "coefficients": [...]}`:
//!
//! * `polynomial`: ascending powers `c0, c1, ...`;
//! * `trig-sum`: triples `(amplitude, angular frequency, phase)`, each
//!   contributing `amplitude * sin(frequency * x + phase)`;
//! * `sum-of-both`: `n` followed by `n` polynomial coefficients, followed
//!   by trig triples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionKind {
    Polynomial,
    TrigSum,
    SumOfBoth,
}

/// One `amplitude * sin(frequency * x + phase)` term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFunction", into = "RawFunction")]
pub struct FunctionSpec {
    kind: FunctionKind,
    poly: Vec<f64>,
    trig: Vec<TrigTerm>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFunction {
    kind: FunctionKind,
    coefficients: Vec<f64>,
}

impl TryFrom<RawFunction> for FunctionSpec {
    type Error = Error;

    fn try_from(raw: RawFunction) -> Result<Self> {
        FunctionSpec::from_coefficients(raw.kind, &raw.coefficients)
    }
}

impl From<FunctionSpec> for RawFunction {
    fn from(spec: FunctionSpec) -> Self {
        RawFunction {
            kind: spec.kind,
            coefficients: spec.coefficients(),
        }
    }
}

fn triples(values: &[f64]) -> Result<Vec<TrigTerm>> {
    if !values.len().is_multiple_of(3) {
        return Err(Error::InvalidFunction(format!(
            "trig coefficients come in triples, got {} values",
            values.len()
        )));
    }
    Ok(values
        .chunks_exact(3)
        .map(|c| TrigTerm {
            amplitude: c[0],
            frequency: c[1],
            phase: c[2],
        })
        .collect())
}

impl FunctionSpec {
    pub fn polynomial(coefficients: &[f64]) -> Result<Self> {
        Self::from_coefficients(FunctionKind::Polynomial, coefficients)
    }

    pub fn trig_sum(terms: &[TrigTerm]) -> Result<Self> {
        let flat: Vec<f64> = terms
            .iter()
            .flat_map(|t| [t.amplitude, t.frequency, t.phase])
            .collect();
        Self::from_coefficients(FunctionKind::TrigSum, &flat)
    }

    pub fn sum_of_both(poly: &[f64], terms: &[TrigTerm]) -> Result<Self> {
        let mut flat = vec![poly.len() as f64];
        flat.extend_from_slice(poly);
        flat.extend(
            terms
                .iter()
                .flat_map(|t| [t.amplitude, t.frequency, t.phase]),
        );
        Self::from_coefficients(FunctionKind::SumOfBoth, &flat)
    }

    /// Constant function, stored as a one-term polynomial.
    pub fn constant(value: f64) -> Result<Self> {
        Self::polynomial(&[value])
    }

    pub fn from_coefficients(kind: FunctionKind, coefficients: &[f64]) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::InvalidFunction("empty coefficient list".into()));
        }
        if let Some(bad) = coefficients.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidFunction(format!(
                "non-finite coefficient {bad}"
            )));
        }
        let (poly, trig) = match kind {
            FunctionKind::Polynomial => (coefficients.to_vec(), Vec::new()),
            FunctionKind::TrigSum => (Vec::new(), triples(coefficients)?),
            FunctionKind::SumOfBoth => {
                let n = coefficients[0];
                if n < 0.0 || n.fract() != 0.0 || n as usize > coefficients.len() - 1 {
                    return Err(Error::InvalidFunction(format!(
                        "sum-of-both needs a valid polynomial length prefix, got {n}"
                    )));
                }
                let n = n as usize;
                let poly = coefficients[1..=n].to_vec();
                let trig = triples(&coefficients[n + 1..])?;
                if poly.is_empty() && trig.is_empty() {
                    return Err(Error::InvalidFunction("sum-of-both has no terms".into()));
                }
                (poly, trig)
            }
        };
        Ok(FunctionSpec { kind, poly, trig })
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    /// The flat coefficient list in the on-disk layout.
    pub fn coefficients(&self) -> Vec<f64> {
        let trig = self
            .trig
            .iter()
            .flat_map(|t| [t.amplitude, t.frequency, t.phase]);
        match self.kind {
            FunctionKind::Polynomial => self.poly.clone(),
            FunctionKind::TrigSum => trig.collect(),
            FunctionKind::SumOfBoth => std::iter::once(self.poly.len() as f64)
                .chain(self.poly.iter().copied())
                .chain(trig)
                .collect(),
        }
    }

    pub fn poly_coefficients(&self) -> &[f64] {
        &self.poly
    }

    pub fn trig_terms(&self) -> &[TrigTerm] {
        &self.trig
    }

    /// Value and first two derivatives in one pass; may be non-finite.
    #[inline]
    pub fn jet(&self, x: f64) -> [f64; 3] {
        let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for &c in self.poly.iter().rev() {
            d2 = d2 * x + 2.0 * d1;
            d1 = d1 * x + v;
            v = v * x + c;
        }
        for term in &self.trig {
            let (s, c) = (term.frequency * x + term.phase).sin_cos();
            let w = term.frequency;
            v += term.amplitude * s;
            d1 += term.amplitude * w * c;
            d2 -= term.amplitude * w * w * s;
        }
        [v, d1, d2]
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.jet(x)[0]
    }

    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        self.jet(x)[1]
    }

    #[inline]
    pub fn d2(&self, x: f64) -> f64 {
        self.jet(x)[2]
    }

    /// Checked evaluation of the function (order 0) or a derivative.
    pub fn eval(&self, x: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(Error::InvalidArgument(format!(
                "derivative order {order} > 2"
            )));
        }
        if !x.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite argument {x}")));
        }
        let v = self.jet(x)[order as usize];
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::EvaluationOverflow { x, order })
        }
    }

    /// Antiderivative normalised to vanish at zero.
    pub fn antiderivative(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (k, &c) in self.poly.iter().enumerate().rev() {
            acc = acc * x + c / (k as f64 + 1.0);
        }
        acc *= x;
        for term in &self.trig {
            let w = term.frequency;
            acc += if w == 0.0 {
                term.amplitude * term.phase.sin() * x
            } else {
                term.amplitude / w * (term.phase.cos() - (w * x + term.phase).cos())
            };
        }
        acc
    }

    /// Upper bound on `|f'|` over `[lo, hi]`, from the coefficients alone.
    pub fn derivative_bound(&self, lo: f64, hi: f64) -> f64 {
        let r = lo.abs().max(hi.abs());
        let poly: f64 = self
            .poly
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c.abs() * r.powi(k as i32 - 1))
            .sum();
        let trig: f64 = self
            .trig
            .iter()
            .map(|t| (t.amplitude * t.frequency).abs())
            .sum();
        poly + trig
    }

    /// Whether the function is identically constant.
    pub fn is_constant(&self) -> bool {
        self.poly.iter().skip(1).all(|&c| c == 0.0)
            && self
                .trig
                .iter()
                .all(|t| t.amplitude == 0.0 || t.frequency == 0.0)
    }

    /// Largest absolute coefficient, used to scale residual tolerances.
    pub fn magnitude(&self) -> f64 {
        self.poly
            .iter()
            .copied()
            .chain(self.trig.iter().map(|t| t.amplitude))
            .fold(0.0_f64, |m, c| m.max(c.abs()))
    }
}
