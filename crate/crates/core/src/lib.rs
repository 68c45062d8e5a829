//! Adaptive spot volatility estimation for high-frequency prices observed
//! under additive microstructure noise.
//!
//! The estimator pre-averages the tick series into regression-type
//! observations `Z`, expands them in the Haar basis, standardizes the detail
//! coefficients by a local empirical standard deviation and applies
//! levelwise SURE block thresholding before synthesizing a piecewise-constant
//! volatility curve on `[0, 1]`.
//!
//! Module map:
//!
//! - [`sim`]: Heston paths, noise, jumps, rounding, MISE scoring
//! - [`preaverage`]: weight functions, block geometry, pre-averaged values
//! - [`wavelet`]: Haar DWT / inverse / curve synthesis
//! - [`threshold`]: heteroscedastic SURE block thresholding and the full estimator
//! - [`jumps`]: scan-statistic and increment tests, repair of pre-averaged values
//! - [`tuning`]: asymptotic MSE, optimal block constant, SNR pilot
//! - [`timescheme`]: tick time vs real time
//! - [`covol`]: bivariate spot covolatility

pub mod covol;
pub mod error;
pub mod jumps;
pub mod numerics;
pub mod preaverage;
pub mod series;
pub mod sim;
pub mod threshold;
pub mod timescheme;
pub mod tuning;
pub mod wavelet;

pub use error::{AsveError, Result};
pub use preaverage::{BlockGeometry, PreAverageFunction, PreAveragedSeries};
pub use series::{CurveSource, TickSeries, VolatilityCurve};
pub use threshold::{asve, AsveConfig, AsveOutput, CRule};
