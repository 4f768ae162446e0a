//! Software twin of a tangible web-layout baseboard.
//!
//! The pipeline runs once per scan:
//! [`matrix`] produces ADC readings, [`decoder`] classifies them into typed
//! corner contacts, [`tracker`] groups corners into brackets, [`narrator`]
//! describes what changed and [`render`] draws the resulting page. The
//! [`session`] module wires these together behind a JSON-lines protocol and
//! a replayable trace format.

pub mod decoder;
pub mod geometry;
pub mod golden;
pub mod matrix;
pub mod narrator;
pub mod render;
pub mod session;
pub mod tracker;
