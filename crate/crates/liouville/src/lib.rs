pub mod covariance;
pub mod error;
pub mod fft2;
pub mod field;
pub mod gmc;
pub mod io;
pub mod ising;
pub mod kernel;
pub mod lqft;
pub mod multifractal;
pub mod quad;
pub mod rng;
pub mod sphere;
pub mod stats;
pub mod theorems;
