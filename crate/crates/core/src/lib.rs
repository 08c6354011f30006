//! Real-time imputation of missing predictor values for clinical risk models,
//! with Cox survival modelling and validation tooling.

pub mod cli;
pub mod imputation;
pub mod linalg;
pub mod metrics;
pub mod population;
pub mod report;
pub mod seeds;
pub mod service;
pub mod simulation;
pub mod survival;
pub mod synthetic;
