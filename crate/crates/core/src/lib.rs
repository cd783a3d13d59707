//! Simulation and analysis of precision errors in QAOA circuits.
//!
//! The crate is layered bottom-up: [`statevec`] holds the dense linear
//! algebra, [`qaoa`] the ideal and faulty circuits, [`noise`] the error
//! models and Monte Carlo ensembles, [`cumulant`] the toggling-frame
//! cumulant expansion of the averaged error operator, [`bounds`] the
//! error bounds built on top of it, [`problems`] the Grover and Ising-ring
//! benchmarks plus angle digitization, and [`fitting`] the scaling-law fits.

pub mod bounds;
pub mod cumulant;
pub mod error;
pub mod fitting;
pub mod noise;
pub mod problems;
pub mod qaoa;
pub mod statevec;

pub use error::{Error, Result};
pub use statevec::{
    frobenius_distance, matrix_exp, plus_state, spectral_norm, trace_norm, DenseOperator,
    DiagonalObservable, StateVector, C64,
};
pub use bounds::{BoundContext, BoundEntry, BoundReport, Flavor};
pub use cumulant::{CorrelationWeight, CumulantSeries, ObservableSum, ObservableTerm, TogglingFrame};
pub use fitting::{FitModel, FitResult, WindowSpec};
pub use noise::{EnsembleStats, NoiseModel, NoiseRealization};
pub use problems::ProblemKind;
pub use qaoa::{BlockKind, QaoaInstance, Schedule, SubBlock};
