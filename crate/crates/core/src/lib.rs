//! Certifying global stability of monotone Markov chains.
//!
//! A chain `X_{k+1} = w(X_k, V_{k+1})` with `w` increasing in state and shock is
//! globally stable when it is tight and admits an ordered normal pair `(v', v'')`
//! such that `w(., v'')` (or `w(., v')`) has a unique fixed point and every state
//! can be bracketed by points that `w` pushes inward. This crate checks those
//! hypotheses numerically, builds the explicit splitting certificate
//! (`C`, `C*`, the split point, the step count `m` and the probability bound
//! `(p_up p_down)^m`), and validates it by simulation.
//!
//! Modules:
//! - [`order`]: product order, order intervals, interval-product state spaces.
//! - [`model`]: transition maps, shock laws, builtin families and config files.
//! - [`analysis`]: fixed-point iteration, uniqueness probes, contraction and
//!   concavity checks.
//! - [`certificate`]: normal pairs, bounding pairs, splitting certificates, reports.
//! - [`montecarlo`]: simulation, coupling, crossing probabilities, convergence and
//!   tightness diagnostics.

// `!(x > 0.0)` is how parameter checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod certificate;
pub mod model;
pub mod montecarlo;
pub mod order;
pub mod report;
pub mod rng;

pub use model::{TransitionMap, TransitionModel};
pub use order::{ShockVector, StateSpace, StateVector};
pub use rng::Streams;
