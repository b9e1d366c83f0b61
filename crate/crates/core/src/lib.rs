//! Cycle-consistent adversarial feature synthesis for zero-shot learning.
//!
//! A forward generator maps class text features (TF-IDF) plus noise to
//! visual features; an inverse generator maps visual features back to text
//! features, and a cycle-consistency loss ties the two together. Unseen
//! classes are recognized by synthesizing visual features from their text
//! and classifying real samples with k-NN against that synthetic bank.

pub mod datamodel;
pub mod error;
pub mod evaluation;
pub mod ndmath;
pub mod networks;
pub mod textfeat;
pub mod training;

pub use error::{Error, Result};
pub use ndmath::{Real, Tensor};
