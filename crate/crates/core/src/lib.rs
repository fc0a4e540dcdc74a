//! Political opinion tracking over news, blogs and tweets.
//!
//! Documents go into a [`store::DocumentStore`]; [`mentions`] finds entity
//! names from the [`kb`], [`disambig`] decides whether tweet mentions refer
//! to the entity, [`sentiment`] labels tweets, and [`indicators`] turns the
//! result into daily buzz and sentiment series. [`pipeline`] runs the
//! stages in order.
//!
//! The numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below fix it to `f64`, which is what the binaries use.

pub mod disambig;
pub mod error;
pub mod features;
pub mod indicators;
pub mod ingest;
pub mod io;
pub mod kb;
pub mod linear;
pub mod mentions;
pub mod model;
pub mod pipeline;
pub mod scalar;
pub mod sentiment;
pub mod store;
pub mod training;
pub mod vocab;

pub use error::{Error, Result};

pub type Vector = features::SparseVector<f64>;
pub type Disambiguator = disambig::DisambigModel<f64>;
pub type SentimentClassifier = sentiment::SentimentModel<f64>;
pub type Resources = sentiment::SentimentResources<f64>;
pub type KalmanFilter = indicators::LocalLevelFilter<f64>;
