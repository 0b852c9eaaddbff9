//! Scalar functions behind the rate: the geometric sums `E_k`, `F_k`,
//! `T_k`, the derived parameters `ρ = 1 − γL`, `η = 1 − γμ`, `κ = μ/L`,
//! both forms of the worst-case rate, and the convexity witness `ψ`.
//!
//! Conventions: every sum with `k ≤ 0` is empty and evaluates to zero, and
//! `E_k(0)` is `+∞` wherever a rate is being reported.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{min_of, Scalar};

/// `|μ|·γ` below which the μ-branch uses its analytic `μ → 0` limit.
pub const MU_LIMIT_SWITCH: f64 = 1e-12;

/// `|η − 1|` below which `ψ` uses its `η = 1` branch.
pub const PSI_BRANCH_SWITCH: f64 = 1e-10;

/// Relative gap between `E_N(η)` and `E_N(ρ)` reported as balanced.
pub const BALANCE_TOL: f64 = 1e-12;

/// The class `F_{μ,L}`, the horizon `N` and the constant stepsize `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance<T = f64> {
    pub iterations: usize,
    pub mu: T,
    pub smoothness: T,
    pub stepsize: T,
}

impl<T: Scalar> ProblemInstance<T> {
    pub fn new(iterations: usize, mu: T, smoothness: T, stepsize: T) -> Result<Self> {
        let inst = ProblemInstance { iterations, mu, smoothness, stepsize };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        if self.iterations == 0 {
            return Err(Error::InvalidInstance("N must be at least 1".into()));
        }
        if !(self.smoothness > zero) {
            return Err(Error::InvalidInstance(format!("L must be positive, got {:?}", self.smoothness)));
        }
        if !(self.mu < self.smoothness) {
            return Err(Error::InvalidInstance(format!(
                "mu must be below L, got mu = {:?}, L = {:?}",
                self.mu, self.smoothness
            )));
        }
        let gl = self.stepsize.clone() * self.smoothness.clone();
        if !(self.stepsize > zero) || !(gl < T::from_int(2)) {
            return Err(Error::InvalidInstance(format!(
                "stepsize must lie in (0, 2/L), got gamma*L = {:?}",
                gl
            )));
        }
        Ok(())
    }

    /// `γL`, the normalised stepsize.
    pub fn normalized_stepsize(&self) -> T {
        self.stepsize.clone() * self.smoothness.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarParams<T = f64> {
    pub rho: T,
    pub eta: T,
    pub kappa: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `γ < γ*`: the strong-convexity branch determines the rate.
    MuDominated,
    /// `γ > γ*`: the smoothness branch `ρ^{2N}` determines the rate.
    RhoDominated,
    Balanced,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::MuDominated => "mu_dominated",
            Regime::RhoDominated => "rho_dominated",
            Regime::Balanced => "balanced",
        }
    }
}

/// Both forms of the worst-case rate.
///
/// `branch_mu` and `max_value` are only defined for `μ ≥ 0`; the min-form
/// value is defined for every `μ < L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateBound {
    pub branch_mu: Option<f64>,
    pub branch_rho: f64,
    pub max_value: Option<f64>,
    pub min_form: f64,
    pub regime: Regime,
}

/// `E_k(x) = Σ_{j=1}^{2k} x^{-j}`.
pub fn eval_e<T: Scalar>(x: &T, k: i64) -> Result<T> {
    if k <= 0 {
        return Ok(T::zero());
    }
    if x.is_zero() {
        return Err(Error::Domain(format!("E_{k}(0) is unbounded")));
    }
    let m = u32::try_from(2 * k).map_err(|_| Error::Domain(format!("index {k} too large")))?;
    Ok(T::inv_power_sum(x, m))
}

/// `F_k(x) = Σ_{j=1}^{k} x^j`.
pub fn eval_f<T: Scalar>(x: &T, k: i64) -> T {
    if k <= 0 {
        return T::zero();
    }
    T::power_sum(x, u32::try_from(k).unwrap_or(u32::MAX))
}

/// `T_k(ρ, η) = E_k(η) − E_k(ρ)`.
pub fn eval_t<T: Scalar>(rho: &T, eta: &T, k: i64) -> Result<T> {
    if k <= 0 {
        return Ok(T::zero());
    }
    Ok(eval_e(eta, k)? - eval_e(rho, k)?)
}

/// `E_k(x)` with the `x → 0` limit reported as `+∞`.
pub fn eval_e_extended(x: f64, k: i64) -> f64 {
    eval_e(&x, k).unwrap_or(f64::INFINITY)
}

pub fn derive_params<T: Scalar>(inst: &ProblemInstance<T>) -> Result<ScalarParams<T>> {
    inst.validate()?;
    Ok(ScalarParams {
        rho: T::one() - inst.stepsize.clone() * inst.smoothness.clone(),
        eta: T::one() - inst.stepsize.clone() * inst.mu.clone(),
        kappa: inst.mu.clone() / inst.smoothness.clone(),
    })
}

/// Sign of `E_N(η) − E_N(ρ)` with `E_N(0) = +∞`, and both values.
pub(crate) fn regime_of(e_eta: f64, e_rho: f64, tol: f64) -> Regime {
    if e_eta == e_rho {
        return Regime::Balanced;
    }
    let scale = e_eta.abs().max(e_rho.abs());
    if scale.is_finite() && (e_eta - e_rho).abs() <= tol * scale {
        Regime::Balanced
    } else if e_eta < e_rho {
        Regime::MuDominated
    } else {
        Regime::RhoDominated
    }
}

pub fn rate_bound(inst: &ProblemInstance) -> Result<RateBound> {
    let p = derive_params(inst)?;
    let n = inst.iterations as i64;
    let two_n = 2 * inst.iterations as i32;
    let gl = inst.normalized_stepsize();

    let e_eta = eval_e_extended(p.eta, n);
    let e_rho = eval_e_extended(p.rho, n);
    let min_form = min_of(e_eta, e_rho);
    let branch_rho = p.rho.powi(two_n);

    let branch_mu = if inst.mu < 0.0 {
        None
    } else if inst.mu.abs() * inst.stepsize <= MU_LIMIT_SWITCH {
        Some(1.0 / (1.0 + 2.0 * n as f64 * gl))
    } else {
        // κ / ((κ − 1) + η^{−2N}), with η^{−2N} − 1 formed without cancellation
        let excess = if p.eta > 0.5 && p.eta < 1.5 {
            (-(two_n as f64) * (p.eta - 1.0).ln_1p()).exp_m1()
        } else {
            p.eta.powi(-two_n) - 1.0
        };
        Some(p.kappa / (p.kappa + excess))
    };
    let max_value = branch_mu.map(|b| b.max(branch_rho));

    Ok(RateBound {
        branch_mu,
        branch_rho,
        max_value,
        min_form,
        regime: regime_of(e_eta, e_rho, BALANCE_TOL),
    })
}

/// `ψ(t)`, whose convexity on `[0, N]` underwrites non-negativity of `β_k`.
pub fn eval_psi(t: f64, rho: f64, eta: f64, n: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("psi needs eta > 0, got {eta}")));
    }
    let (num, den) = if (eta - 1.0).abs() <= PSI_BRANCH_SWITCH {
        (1.0 + (1.0 - rho) * (n + t), 1.0 + (1.0 - rho) * (n - t))
    } else {
        let a = -(eta - rho);
        let b = 1.0 - rho;
        (a + b * eta.powf(-t - n), a + b * eta.powf(t - n))
    };
    let ratio = num / den;
    if !(ratio > 0.0) || !ratio.is_finite() {
        return Err(Error::Domain(format!("psi({t}) has log argument {num}/{den}")));
    }
    Ok(ratio.ln())
}
