//! Thermal-face emotion analysis.
//!
//! The crate covers the numerical pipeline from raw thermal frames to an
//! emotion decision:
//!
//! - [`imaging`]: PGM/landmark ingestion, bilinear sampling, gradients.
//! - [`klt`]: inverse-compositional KLT tracking and similarity alignment.
//! - [`roi`]: landmark-defined facial regions, masks and normalized patches.
//! - [`spd`]: SPD matrix kernels and five covariance distances.
//! - [`cov`]: fiducial-point covariance signatures and least-distance matching.
//! - [`dne`]: discriminant neighborhood embedding and nearest-neighbor classification.
//! - [`lpq`]: local phase quantization histograms.

pub mod cov;
pub mod dne;
pub mod imaging;
pub mod klt;
pub mod lpq;
pub mod roi;
pub mod spd;
