//! Numerical toolkit for genus-g KZB connections.
//!
//! The crate builds Riemann theta functions with characteristics and their
//! derivatives, Abel maps and period matrices of elliptic and hyperelliptic
//! curves, the kernel functions entering the connection, and the operators
//! `T_z` acting on `λ`-jets of multi-point sections. It also computes tame
//! symbols on rational and elliptic curves.

pub mod curve;
pub mod error;
pub mod jets;
pub mod kernels;
pub mod operators;
pub mod quadrature;
pub mod series;
pub mod tame;
pub mod theta;

pub use curve::{CurveModel, CurvePoint, CurveSpec, Point};
pub use error::{KzbError, Result};
pub use jets::{jet_arith, Jet, JetError, JetOp};
pub use kernels::{Divisor, Kernels, Moving, TwistVector};
pub use num_complex::Complex64;
pub use operators::{CorrelationForm, KzbConfig};
pub use tame::{MeromorphicFunction, RationalFunction, SymbolValue, ThetaQuotient};
pub use theta::{Characteristic, PeriodMatrix};
