//! Product partial order on `R^n`, order intervals and interval-product state spaces.
//!
//! All order tests compare floating-point coordinates exactly. Tolerances belong to
//! convergence checks elsewhere, never to the order itself.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Deref;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OrderError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("vector must have at least one coordinate")]
    Empty,
    #[error("coordinate {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("interval {index} is empty or degenerate")]
    DegenerateInterval { index: usize },
    #[error("order interval requires low <= high")]
    Unordered,
}

macro_rules! real_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
        pub struct $name(Vec<f64>);

        impl $name {
            /// Builds a vector, rejecting empty input and non-finite coordinates.
            pub fn new(coords: Vec<f64>) -> Result<Self, OrderError> {
                if coords.is_empty() {
                    return Err(OrderError::Empty);
                }
                if let Some((index, &value)) =
                    coords.iter().enumerate().find(|(_, c)| !c.is_finite())
                {
                    return Err(OrderError::NonFinite { index, value });
                }
                Ok(Self(coords))
            }

            /// Constant vector `(value, ..., value)` of dimension `dim`.
            pub fn splat(value: f64, dim: usize) -> Result<Self, OrderError> {
                Self::new(vec![value; dim])
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn coords(&self) -> &[f64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            /// Max norm `max_i |x_i|`.
            pub fn norm_inf(&self) -> f64 {
                self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl AsRef<[f64]> for $name {
            fn as_ref(&self) -> &[f64] {
                &self.0
            }
        }

        impl TryFrom<Vec<f64>> for $name {
            type Error = OrderError;
            fn try_from(coords: Vec<f64>) -> Result<Self, OrderError> {
                Self::new(coords)
            }
        }

        impl From<$name> for Vec<f64> {
            fn from(v: $name) -> Vec<f64> {
                v.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "(")?;
                for (i, c) in self.0.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    };
}

real_vector!(
    /// A point of the state space `S`.
    StateVector
);
real_vector!(
    /// A shock realisation, ordered componentwise like states.
    ShockVector
);

fn same_dim(x: &[f64], y: &[f64]) -> Result<(), OrderError> {
    if x.len() == y.len() {
        Ok(())
    } else {
        Err(OrderError::DimensionMismatch { left: x.len(), right: y.len() })
    }
}

/// `x <= y` in the product order.
pub fn leq<V: AsRef<[f64]> + ?Sized>(x: &V, y: &V) -> Result<bool, OrderError> {
    let (x, y) = (x.as_ref(), y.as_ref());
    same_dim(x, y)?;
    Ok(x.iter().zip(y).all(|(a, b)| a <= b))
}

/// `x < y` in the product order: `x <= y` and `x != y`.
pub fn lt_strict<V: AsRef<[f64]> + ?Sized>(x: &V, y: &V) -> Result<bool, OrderError> {
    let (xs, ys) = (x.as_ref(), y.as_ref());
    Ok(leq(xs, ys)? && xs != ys)
}

/// Every coordinate of `x` strictly below the matching coordinate of `y`.
pub fn lt_all<V: AsRef<[f64]> + ?Sized>(x: &V, y: &V) -> Result<bool, OrderError> {
    let (x, y) = (x.as_ref(), y.as_ref());
    same_dim(x, y)?;
    Ok(x.iter().zip(y).all(|(a, b)| a < b))
}

pub fn pointwise_max(x: &StateVector, y: &StateVector) -> Result<StateVector, OrderError> {
    same_dim(x, y)?;
    Ok(StateVector(x.iter().zip(y.iter()).map(|(a, b)| a.max(*b)).collect()))
}

pub fn pointwise_min(x: &StateVector, y: &StateVector) -> Result<StateVector, OrderError> {
    same_dim(x, y)?;
    Ok(StateVector(x.iter().zip(y.iter()).map(|(a, b)| a.min(*b)).collect()))
}

/// `max_i |x_i - y_i|`.
pub fn dist_inf(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// One end of an interval. Unbounded ends are kept explicit rather than encoded as
/// large finite numbers so that membership stays exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "at")]
pub enum Endpoint {
    Unbounded,
    Closed(f64),
    Open(f64),
}

impl Endpoint {
    fn value(self) -> Option<f64> {
        match self {
            Endpoint::Unbounded => None,
            Endpoint::Closed(v) | Endpoint::Open(v) => Some(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: Endpoint,
    pub upper: Endpoint,
}

impl Interval {
    pub fn real_line() -> Self {
        Interval { lower: Endpoint::Unbounded, upper: Endpoint::Unbounded }
    }

    /// `[low, +inf)`
    pub fn at_least(low: f64) -> Self {
        Interval { lower: Endpoint::Closed(low), upper: Endpoint::Unbounded }
    }

    /// `(low, +inf)`
    pub fn above(low: f64) -> Self {
        Interval { lower: Endpoint::Open(low), upper: Endpoint::Unbounded }
    }

    pub fn closed(low: f64, high: f64) -> Self {
        Interval { lower: Endpoint::Closed(low), upper: Endpoint::Closed(high) }
    }

    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        let above = match self.lower {
            Endpoint::Unbounded => true,
            Endpoint::Closed(a) => x >= a,
            Endpoint::Open(a) => x > a,
        };
        let below = match self.upper {
            Endpoint::Unbounded => true,
            Endpoint::Closed(b) => x <= b,
            Endpoint::Open(b) => x < b,
        };
        above && below
    }

    fn is_nondegenerate(&self) -> bool {
        let finite_ok = |e: Endpoint| e.value().is_none_or(f64::is_finite);
        if !finite_ok(self.lower) || !finite_ok(self.upper) {
            return false;
        }
        match (self.lower.value(), self.upper.value()) {
            (Some(a), Some(b)) => a < b,
            _ => true,
        }
    }

    /// Smallest member, when one exists.
    pub fn least(&self) -> Option<f64> {
        match self.lower {
            Endpoint::Closed(a) => Some(a),
            _ => None,
        }
    }

    /// Largest member, when one exists.
    pub fn greatest(&self) -> Option<f64> {
        match self.upper {
            Endpoint::Closed(b) => Some(b),
            _ => None,
        }
    }

    /// Nearest member at or above the lower end (`+inf` handled by caller).
    fn lower_member(&self) -> Option<f64> {
        match self.lower {
            Endpoint::Unbounded => None,
            Endpoint::Closed(a) => Some(a),
            Endpoint::Open(a) => Some(a.next_up()),
        }
    }

    fn upper_member(&self) -> Option<f64> {
        match self.upper {
            Endpoint::Unbounded => None,
            Endpoint::Closed(b) => Some(b),
            Endpoint::Open(b) => Some(b.next_down()),
        }
    }

    /// Clamp into the interval when the violated end is closed; `None` otherwise.
    pub fn clamp(&self, x: f64) -> Option<f64> {
        if self.contains(x) {
            return Some(x);
        }
        match (self.lower, self.upper) {
            (Endpoint::Closed(a), _) if x < a => Some(a),
            (_, Endpoint::Closed(b)) if x > b => Some(b),
            _ => None,
        }
    }
}

/// `S = I_1 x ... x I_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    dims: Vec<Interval>,
}

impl StateSpace {
    pub fn new(dims: Vec<Interval>) -> Result<Self, OrderError> {
        if dims.is_empty() {
            return Err(OrderError::Empty);
        }
        if let Some(index) = dims.iter().position(|d| !d.is_nondegenerate()) {
            return Err(OrderError::DegenerateInterval { index });
        }
        Ok(StateSpace { dims })
    }

    /// `R^n`
    pub fn real(n: usize) -> Result<Self, OrderError> {
        Self::new(vec![Interval::real_line(); n])
    }

    /// `R^n_+ = [0, inf)^n`
    pub fn nonnegative(n: usize) -> Result<Self, OrderError> {
        Self::new(vec![Interval::at_least(0.0); n])
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.dims
    }

    /// Membership respecting open and closed endpoints. Dimension mismatch is `false`.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dims.len() && self.dims.iter().zip(x).all(|(d, &c)| d.contains(c))
    }

    pub fn least_element(&self) -> Option<StateVector> {
        let coords: Option<Vec<f64>> = self.dims.iter().map(Interval::least).collect();
        coords.map(StateVector)
    }

    pub fn greatest_element(&self) -> Option<StateVector> {
        let coords: Option<Vec<f64>> = self.dims.iter().map(Interval::greatest).collect();
        coords.map(StateVector)
    }

    /// Every coordinate bounded on both sides by closed endpoints.
    pub fn is_compact(&self) -> bool {
        self.least_element().is_some() && self.greatest_element().is_some()
    }

    /// Is this `[0, inf)^n`?
    pub fn is_nonnegative_orthant(&self) -> bool {
        self.dims.iter().all(|d| *d == Interval::at_least(0.0))
    }

    /// A closed box inside `S` used for sampling: the members of `S` nearest to
    /// its ends, with unbounded ends replaced by `+-radius` (shifted when the
    /// other end lies beyond it).
    pub fn sampling_box(&self, radius: f64) -> OrderInterval {
        let mut low = Vec::with_capacity(self.dims.len());
        let mut high = Vec::with_capacity(self.dims.len());
        for d in &self.dims {
            let (lo, hi) = match (d.lower_member(), d.upper_member()) {
                (Some(a), Some(b)) => (a, b),
                (Some(a), None) => (a, a.max(0.0) + radius),
                (None, Some(b)) => (b.min(0.0) - radius, b),
                (None, None) => (-radius, radius),
            };
            low.push(lo);
            high.push(hi);
        }
        OrderInterval { low: StateVector(low), high: StateVector(high) }
    }

    /// Clamp each coordinate into its closed bound; `None` if a coordinate violates
    /// an open bound.
    pub fn clamp(&self, x: &[f64]) -> Option<StateVector> {
        let coords: Option<Vec<f64>> = self.dims.iter().zip(x).map(|(d, &c)| d.clamp(c)).collect();
        coords.map(StateVector)
    }
}

/// `[low, high] = { x : low <= x <= high }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderInterval {
    low: StateVector,
    high: StateVector,
}

impl OrderInterval {
    pub fn new(low: StateVector, high: StateVector) -> Result<Self, OrderError> {
        if !leq(&low, &high)? {
            return Err(OrderError::Unordered);
        }
        Ok(OrderInterval { low, high })
    }

    pub fn low(&self) -> &StateVector {
        &self.low
    }

    pub fn high(&self) -> &StateVector {
        &self.high
    }

    pub fn dim(&self) -> usize {
        self.low.dim()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.low.iter().zip(self.high.iter())).all(|(c, (a, b))| a <= c && c <= b)
    }

    /// Strictly positive width in every coordinate.
    pub fn is_nondegenerate(&self) -> bool {
        self.low.iter().zip(self.high.iter()).all(|(a, b)| a < b)
    }

    /// Corners of the box, capped at `2^max_bits` entries (low and high corners first).
    pub fn corners(&self, max_bits: u32) -> Vec<StateVector> {
        let n = self.dim();
        if n as u32 > max_bits {
            return vec![self.low.clone(), self.high.clone()];
        }
        (0u64..(1u64 << n))
            .map(|mask| {
                StateVector((0..n).map(|i| if mask >> i & 1 == 1 { self.high[i] } else { self.low[i] }).collect())
            })
            .collect()
    }
}
