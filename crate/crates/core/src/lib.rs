pub mod error;
pub mod fracpow;
pub mod geometry;
pub mod instance;
pub mod linalg;
pub mod models;
pub mod operator;
pub mod spectral;
pub mod subspace;
pub mod suite;
