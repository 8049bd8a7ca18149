//! JSON wire format for polynomials.
//!
//! ```text
//! {"n": 2, "degree": 4, "mode": "rational",
//!  "terms": [{"exp": [2, 0], "coef": "1/1"}, {"exp": [0, 4], "coef": "-5/6"}]}
//! ```
//!
//! Terms are emitted in graded-lex order and rational coefficients are always
//! reduced and written as `"num/den"`, so serialization of a parsed canonical
//! document reproduces it byte for byte. Float mode uses plain JSON numbers.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use super::{Coefficient, Exponent, FloatPoly, Polynomial, RatPoly};

/// Parser limits for untrusted input.
const MAX_VARS: usize = 4096;
const MAX_DEGREE: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffMode {
    Rational,
    Float,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PolyWireError {
    #[error("malformed json: {0}")]
    Json(String),
    #[error("term {term}: exponent has length {found}, expected {expected}")]
    ExponentLength {
        term: usize,
        expected: usize,
        found: usize,
    },
    #[error("term {term}: bad coefficient: {reason}")]
    Coefficient { term: usize, reason: String },
    #[error("duplicate exponent {0}")]
    DuplicateExponent(String),
    #[error("declared degree {declared} is below the degree {actual} of the terms")]
    DegreeTooSmall { declared: u64, actual: u64 },
    #[error("mode mismatch: expected {expected:?}, document is {found:?}")]
    ModeMismatch { expected: CoeffMode, found: CoeffMode },
    #[error("limit exceeded: {0}")]
    Limit(String),
}

/// Parses `"p/q"` or `"p"` into a reduced rational.
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a, b),
        None => (s, "1"),
    };
    let valid = |t: &str| {
        let digits = t.strip_prefix('-').unwrap_or(t);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !valid(num) || !valid(den) {
        return Err(format!("not a rational literal: {s:?}"));
    }
    let num = BigInt::from_str(num).map_err(|e| e.to_string())?;
    let den = BigInt::from_str(den).map_err(|e| e.to_string())?;
    if den.is_zero() {
        return Err("zero denominator".into());
    }
    Ok(BigRational::new(num, den))
}

fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Coefficient types with a JSON representation.
pub trait WireCoefficient: Coefficient {
    fn to_wire(&self) -> Value;
    fn from_wire(v: &Value) -> Result<Self, String>;
}

impl WireCoefficient for BigRational {
    fn to_wire(&self) -> Value {
        Value::String(format_rational(self))
    }

    fn from_wire(v: &Value) -> Result<Self, String> {
        match v {
            Value::String(s) => parse_rational(s),
            _ => Err("rational coefficients must be strings \"p/q\"".into()),
        }
    }
}

impl WireCoefficient for f64 {
    fn to_wire(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }

    fn from_wire(v: &Value) -> Result<Self, String> {
        match v {
            Value::Number(n) => n.as_f64().ok_or_else(|| "number out of range".into()),
            _ => Err("float coefficients must be JSON numbers".into()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawTerm {
    exp: Vec<u32>,
    coef: Value,
}

#[derive(Serialize, Deserialize)]
struct RawPoly {
    n: usize,
    degree: u64,
    mode: CoeffMode,
    terms: Vec<RawTerm>,
}

impl RawPoly {
    fn validate<C: WireCoefficient>(self) -> Result<Polynomial<C>, PolyWireError> {
        if self.mode != C::MODE {
            return Err(PolyWireError::ModeMismatch {
                expected: C::MODE,
                found: self.mode,
            });
        }
        if self.n > MAX_VARS {
            return Err(PolyWireError::Limit(format!("n = {} > {MAX_VARS}", self.n)));
        }
        if self.degree > MAX_DEGREE {
            return Err(PolyWireError::Limit(format!("degree {} > {MAX_DEGREE}", self.degree)));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut terms = Vec::with_capacity(self.terms.len());
        let mut actual = 0u64;
        for (k, t) in self.terms.into_iter().enumerate() {
            if t.exp.len() != self.n {
                return Err(PolyWireError::ExponentLength {
                    term: k,
                    expected: self.n,
                    found: t.exp.len(),
                });
            }
            let deg: u64 = t.exp.iter().map(|&p| u64::from(p)).sum();
            if deg > MAX_DEGREE {
                return Err(PolyWireError::Limit(format!("term {k} has degree {deg}")));
            }
            let coef = C::from_wire(&t.coef)
                .map_err(|reason| PolyWireError::Coefficient { term: k, reason })?;
            let exp = Exponent::new(t.exp);
            if !seen.insert(exp.clone()) {
                return Err(PolyWireError::DuplicateExponent(format!("{exp:?}")));
            }
            if !coef.is_zero() {
                actual = actual.max(deg);
            }
            terms.push((exp, coef));
        }
        if self.degree < actual {
            return Err(PolyWireError::DegreeTooSmall {
                declared: self.degree,
                actual,
            });
        }
        Ok(Polynomial::from_terms(self.n, terms).with_ambient_degree(self.degree as u32))
    }
}

impl<C: WireCoefficient> Polynomial<C> {
    fn to_raw(&self) -> RawPoly {
        RawPoly {
            n: self.nvars,
            degree: u64::from(self.ambient_degree()),
            mode: C::MODE,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| RawTerm {
                    exp: e.powers().to_vec(),
                    coef: c.to_wire(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_raw()).expect("polynomial serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, PolyWireError> {
        let raw: RawPoly =
            serde_json::from_str(s).map_err(|e| PolyWireError::Json(e.to_string()))?;
        raw.validate()
    }
}

impl<C: WireCoefficient> Serialize for Polynomial<C> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_raw().serialize(s)
    }
}

impl<'de, C: WireCoefficient> Deserialize<'de> for Polynomial<C> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        RawPoly::deserialize(d)?
            .validate()
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// A polynomial document in either coefficient mode.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyPolynomial {
    Rational(RatPoly),
    Float(FloatPoly),
}

impl AnyPolynomial {
    pub fn from_json(s: &str) -> Result<Self, PolyWireError> {
        let raw: RawPoly =
            serde_json::from_str(s).map_err(|e| PolyWireError::Json(e.to_string()))?;
        match raw.mode {
            CoeffMode::Rational => raw.validate().map(AnyPolynomial::Rational),
            CoeffMode::Float => raw.validate().map(AnyPolynomial::Float),
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            AnyPolynomial::Rational(p) => p.to_json(),
            AnyPolynomial::Float(p) => p.to_json(),
        }
    }

    /// Rational view; float coefficients convert exactly.
    pub fn into_rational(self) -> RatPoly {
        match self {
            AnyPolynomial::Rational(p) => p,
            AnyPolynomial::Float(p) => p.to_rational(),
        }
    }
}
