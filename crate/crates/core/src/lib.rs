//! Low-rank CUR approximation of truncated bivariate Fourier series.
//!
//! A function on `[-pi, pi]^2` is represented by the coefficient matrix of
//! its truncated Fourier series. Coefficients come from a tensor-product
//! quadrature ([`quadrature`]) and are computed lazily and counted by
//! [`CoeffOracle`]. The adaptive builders in [`cur`] only request the
//! rows and columns needed for a `C U R` factorisation.
//!
//! ```
//! use fourier_cur::{algorithm2, make_rule, AdaptiveParams, CoeffOracle, QuadKind};
//!
//! let rule = make_rule(QuadKind::NC, 32).unwrap();
//! let f = |x1: f64, x2: f64| x1.cos() * x2.cos();
//! let mut oracle = CoeffOracle::new(f, 8, 8, rule.clone(), rule).unwrap();
//! let model = algorithm2(&mut oracle, AdaptiveParams::new(1, 1, 1e-5, 10)).unwrap();
//! assert_eq!((model.s1(), model.s2()), (3, 3));
//! ```

pub mod approximant;
pub mod coeff_oracle;
pub mod cur;
pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod testfns;

pub use approximant::{error_grid, eval_cur, eval_truncated, l2_gap, ErrorReport, EvalGrid};
pub use coeff_oracle::{CoeffOracle, FreqIndex, IndexSet};
pub use cur::{
    algorithm1, algorithm2, algorithm_c1, cur_fixed, estimate_orders, index_band, AdaptiveParams,
    CurModel, FixedMode, OrderEstimate, RunStats, StopReason,
};
pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use quadrature::{make_rule, Quad1D, QuadKind};
pub use testfns::{test_function, TestFunction};
