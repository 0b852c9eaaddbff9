//! Closed-form dual multipliers `(τ, λ)` for gradient descent.
//!
//! Only the interpolation inequalities at the pairs
//! `(k, k+1)`, `(k+1, k)`, `(N, k)` for `0 ≤ k < N`, plus `(N, *)`, carry
//! weight. The `(N, *)` inequality enters when the bound is composed and is
//! not stored in the multiplier map.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::kernel::{eval_e, eval_f, eval_t};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IndexPair {
    Pair(usize, usize),
    /// `(i, *)`, pairing iterate `i` with the minimizer.
    Star(usize),
}

impl fmt::Display for IndexPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexPair::Pair(i, j) => write!(f, "({i},{j})"),
            IndexPair::Star(i) => write!(f, "({i},*)"),
        }
    }
}

/// The support of the weighted sum, deduplicated and in canonical order.
pub fn interpolation_index_set(n: usize) -> Vec<IndexPair> {
    let mut pairs = std::collections::BTreeSet::new();
    for k in 0..n {
        pairs.insert(IndexPair::Pair(k, k + 1));
        pairs.insert(IndexPair::Pair(k + 1, k));
        pairs.insert(IndexPair::Pair(n, k));
    }
    pairs.insert(IndexPair::Star(n));
    pairs.into_iter().collect()
}

/// The auxiliary sequences `α_1..α_{N−1}` and `β_1..β_{N−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaBeta<T> {
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateBundle<T> {
    pub iterations: usize,
    pub rho: T,
    pub eta: T,
    pub smoothness: T,
    pub tau: T,
    /// `λ_{i,j}`, keyed by `(i, j)` in row-major order.
    pub lambda: BTreeMap<(usize, usize), T>,
}

impl<T: Scalar> CertificateBundle<T> {
    pub fn get(&self, i: usize, j: usize) -> Result<T> {
        self.lambda
            .get(&(i, j))
            .cloned()
            .ok_or_else(|| Error::MalformedCertificate(format!("missing multiplier lambda({i},{j})")))
    }

    /// `κ = μ/L = (1 − η)/(1 − ρ)`; the stepsize cancels.
    pub fn kappa(&self) -> T {
        (T::one() - self.eta.clone()) / (T::one() - self.rho.clone())
    }

    pub fn min_lambda(&self) -> Option<T> {
        self.lambda.values().cloned().reduce(|a, b| if b < a { b } else { a })
    }

    pub fn to_f64(&self) -> CertificateBundle<f64> {
        CertificateBundle {
            iterations: self.iterations,
            rho: self.rho.to_f64(),
            eta: self.eta.to_f64(),
            smoothness: self.smoothness.to_f64(),
            tau: self.tau.to_f64(),
            lambda: self.lambda.iter().map(|(k, v)| (*k, v.to_f64())).collect(),
        }
    }
}

/// `T_k / F_{N−k}(η)` for `k = 1..N−1`, and zero for `k ≤ 0`.
fn scaled_gaps<T: Scalar>(n: usize, rho: &T, eta: &T) -> Result<Vec<T>> {
    let n = n as i64;
    let mut r = vec![T::zero()];
    for k in 1..n {
        let f = eval_f(eta, n - k);
        if f.is_zero() {
            return Err(Error::Domain(format!("F_{}(eta) vanishes at eta = {:?}", n - k, eta)));
        }
        r.push(eval_t(rho, eta, k)? / f);
    }
    Ok(r)
}

pub fn build_alpha_beta<T: Scalar>(n: usize, rho: &T, eta: &T) -> Result<AlphaBeta<T>> {
    if rho.is_zero() || eta.is_zero() {
        return Err(Error::Domain("rho and eta must be non-zero".into()));
    }
    if rho == eta {
        return Err(Error::Domain("eta = rho makes the multipliers singular".into()));
    }
    let r = scaled_gaps(n, rho, eta)?;
    // r[0] = 0 stands in for both r_0 and r_{−1}, which turns the k = 1 and
    // k = 2 cases into the general one.
    let at = |k: i64| if k <= 0 { T::zero() } else { r[k as usize].clone() };
    let inv_rho = T::one() / rho.clone();
    let ratio = (eta.clone() - rho.clone()) / eta.clone();
    let mut alpha = Vec::with_capacity(n.saturating_sub(1));
    let mut beta = Vec::with_capacity(n.saturating_sub(1));
    for k in 1..n as i64 {
        alpha.push((at(k) - at(k - 1)) - inv_rho.clone() * (at(k - 1) - at(k - 2)));
        beta.push(ratio.clone() * eval_e(rho, k)? - at(k));
    }
    Ok(AlphaBeta { alpha, beta })
}

/// Multipliers for gradient descent with parameters `(ρ, η)` and smoothness
/// `L`. Feasibility is not checked here.
pub fn build_certificate<T: Scalar>(n: usize, rho: &T, eta: &T, smoothness: &T) -> Result<CertificateBundle<T>> {
    if n == 0 {
        return Err(Error::InvalidInstance("N must be at least 1".into()));
    }
    let ab = build_alpha_beta(n, rho, eta)?;
    let r = scaled_gaps(n, rho, eta)?;
    let r_at = |k: i64| if k <= 0 { T::zero() } else { r[k as usize].clone() };
    let nn = n as i64;

    // c = ηρ/(η − ρ); negative on the feasible region
    let c = eta.clone() * rho.clone() / (eta.clone() - rho.clone());
    let mut lambda = BTreeMap::new();
    let mut alpha_prefix = T::zero();
    for k in 1..n {
        let a = ab.alpha[k - 1].clone();
        let b = ab.beta[k - 1].clone();
        alpha_prefix = alpha_prefix + a.clone();
        lambda.insert((k, k - 1), -(c.clone() * b.clone()));
        lambda.insert((n, k - 1), -(c.clone() * a));
        lambda.insert((k - 1, k), T::one() - c.clone() * (alpha_prefix.clone() + b));
    }

    let r_last = r_at(nn - 1);
    let r_prev = r_at(nn - 2);
    let inv_rho = T::one() / rho.clone();
    let last_down = -(rho.clone() * eval_e(rho, nn)?) + c.clone() * (r_last.clone() + inv_rho * (r_last - r_prev));
    let last_up = last_down.clone() + T::one() - c * alpha_prefix;
    lambda.insert((n, n - 1), last_down);
    lambda.insert((n - 1, n), last_up);

    let tau = smoothness.clone() * rho.powi(2 * n as i32);
    Ok(CertificateBundle {
        iterations: n,
        rho: rho.clone(),
        eta: eta.clone(),
        smoothness: smoothness.clone(),
        tau,
        lambda,
    })
}
