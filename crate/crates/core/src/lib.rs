//! Contactless ward monitoring: RFID tag telemetry to per-minute vitals,
//! three-hour vital-sign forecasts and activity recognition.

pub mod activity;
pub mod cli;
pub mod demo;
pub mod domain;
pub mod error;
pub mod eval;
pub mod forecast;
pub mod ingest;
pub mod kv;
pub mod nn;
pub mod normalize;
pub mod service;
pub mod signal;
pub mod simulator;

pub use error::{Error, Result};
