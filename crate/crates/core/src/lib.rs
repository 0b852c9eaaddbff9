//! Exact worst-case rate of constant-stepsize gradient descent for the
//! criterion `‖∇f(x_N)‖² / (f(x_0) − f_*)`, together with closed-form dual
//! certificates for the performance estimation problem and the machinery to
//! verify them.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernel`] evaluates the scalar functions `E_k`, `F_k`, `T_k`, the rate
//!   formulas and the convexity witness `ψ`.
//! * [`stepsize`] locates the optimal stepsize and the surrogate class that
//!   makes an arbitrary stepsize optimal.
//! * [`certificate`] builds the multipliers `(τ, λ)`.
//! * [`pep`] assembles `H̃`, `A`, `B` and the PEP matrix.
//! * [`verifier`] checks dual feasibility and runs the certification pipeline.
//! * [`lab`] simulates gradient descent to probe the bound empirically.
//!
//! Every algebraic routine is generic over [`Scalar`], so the same code runs
//! in binary64 and in exact rational arithmetic ([`Rational`]).

// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod error;
pub mod kernel;
pub mod lab;
pub mod linalg;
pub mod pep;
pub mod report;
pub mod scalar;
pub mod stepsize;
pub mod verifier;


pub use error::{Error, Result};
pub use kernel::{derive_params, eval_e, eval_f, eval_psi, eval_t, rate_bound, ProblemInstance, RateBound, Regime, ScalarParams};
pub use certificate::{build_alpha_beta, build_certificate, interpolation_index_set, AlphaBeta, CertificateBundle, IndexPair};
pub use lab::{empirical_probe, performance_ratio, run_gd, Family, FunctionSpec, ProbeResult, Trajectory};
pub use linalg::Matrix;
pub use pep::{assemble_pep_matrix, build_ab, build_htilde, HSchedule, PepMatrixSet};

pub use scalar::{Rational, Scalar};
pub use verifier::{certify, certify_grid, CertifyConfig, VerificationReport};
pub use stepsize::{optimal_pair_exact, optimal_stepsize, surrogate_class, SolveOptions, SurrogateClass, SurrogateRegime};

