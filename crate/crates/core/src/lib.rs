//! Subadditivity of probability divergences on Bayes-nets and Markov random
//! fields: exact f-divergences and Wasserstein distances, local
//! decompositions and gap verification.

pub mod decomposition;
pub mod divergence;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod lab;
pub mod linalg;
pub mod model;
pub mod quad;
pub mod transport;

pub use error::{Error, Result};
