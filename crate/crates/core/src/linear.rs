//! Integer linear expressions over variables, used for term weights.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use crate::terms::VarId;

/// `constant + Σ coeff·x`. Zero coefficients are never stored, so an
/// expression is zero iff `constant == 0 && coeffs.is_empty()`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct LinearExpr {
    constant: i64,
    coeffs: BTreeMap<VarId, i64>,
}

/// Outcome of a positivity check over all groundings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign3 {
    /// `e > 0` for every grounding.
    Positive,
    /// `e ≥ 0` for every grounding, but not always strictly.
    NonNegative,
    /// Some grounding makes `e` negative.
    NotNonNegative,
}

impl LinearExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: i64) -> Self {
        Self {
            constant: c,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn var(v: VarId) -> Self {
        let mut e = Self::zero();
        e.add_var(v, 1);
        e
    }

    pub fn constant_part(&self) -> i64 {
        self.constant
    }

    pub fn coeff(&self, v: VarId) -> i64 {
        self.coeffs.get(&v).copied().unwrap_or(0)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (VarId, i64)> + '_ {
        self.coeffs.iter().map(|(v, c)| (*v, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0 && self.coeffs.is_empty()
    }

    /// True when the expression mentions no variable.
    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add_constant(&mut self, c: i64) {
        self.constant += c;
    }

    pub fn add_var(&mut self, v: VarId, c: i64) {
        if c == 0 {
            return;
        }
        let slot = self.coeffs.entry(v).or_insert(0);
        *slot += c;
        if *slot == 0 {
            self.coeffs.remove(&v);
        }
    }

    /// `self += factor · other`
    pub fn add_scaled(&mut self, other: &LinearExpr, factor: i64) {
        if factor == 0 {
            return;
        }
        self.constant += factor * other.constant;
        for (v, c) in other.coeffs() {
            self.add_var(v, factor * c);
        }
    }

    /// Sign of the expression over every grounding that maps each variable
    /// to a term of weight at least `w0`.
    ///
    /// A negative coefficient admits arbitrarily heavy instances, so only
    /// expressions with non-negative coefficients can be `≳ 0`; for those the
    /// minimum sits at `x = w0` for all variables.
    pub fn sign(&self, w0: i64) -> Sign3 {
        debug_assert!(w0 > 0);
        let mut min = self.constant;
        for (_, c) in self.coeffs() {
            if c < 0 {
                return Sign3::NotNonNegative;
            }
            min += c * w0;
        }
        match min {
            m if m > 0 => Sign3::Positive,
            0 => Sign3::NonNegative,
            _ => Sign3::NotNonNegative,
        }
    }
}

impl Add<&LinearExpr> for &LinearExpr {
    type Output = LinearExpr;
    fn add(self, rhs: &LinearExpr) -> LinearExpr {
        let mut out = self.clone();
        out.add_scaled(rhs, 1);
        out
    }
}

impl Sub<&LinearExpr> for &LinearExpr {
    type Output = LinearExpr;
    fn sub(self, rhs: &LinearExpr) -> LinearExpr {
        let mut out = self.clone();
        out.add_scaled(rhs, -1);
        out
    }
}

impl Neg for &LinearExpr {
    type Output = LinearExpr;
    fn neg(self) -> LinearExpr {
        let mut out = LinearExpr::zero();
        out.add_scaled(self, -1);
        out
    }
}

impl fmt::Display for LinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in self.coeffs() {
            let (sep, mag) = match (first, c < 0) {
                (true, true) => ("-", -c),
                (true, false) => ("", c),
                (false, true) => (" - ", -c),
                (false, false) => (" + ", c),
            };
            if mag == 1 {
                write!(f, "{sep}{v}")?;
            } else {
                write!(f, "{sep}{mag}·{v}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant > 0 {
            write!(f, " + {}", self.constant)
        } else if self.constant < 0 {
            write!(f, " - {}", -self.constant)
        } else {
            Ok(())
        }
    }
}
