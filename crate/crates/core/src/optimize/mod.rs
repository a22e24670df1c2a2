//! Numerical engines shared by the estimators.

pub mod exchange;
pub mod multistart;
pub mod simplex;

pub use exchange::{exchange_minimize, ExchangeConfig, ExchangeOutcome, ExchangeProblem};
pub use multistart::{
    fd_gradient, mix_seed, multistart_maximize, rng_for, AscentProblem, Certificate, FnProblem,
    MultistartConfig, FD_STEP,
};
pub use simplex::{lp_solve, LpProblem, LpSolution, LpStatus};
