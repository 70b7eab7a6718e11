//! Finite-temperature stability certificates for the LogSumExp potential
//! `P(s) = tau log(sum_j exp(s_j / tau))`.
//!
//! For a score vector whose top entry beats all others by a margin `delta`,
//! the potential, its gradient (the softmax), and its Hessian
//! `(diag(p) - p p^T) / tau` are exponentially close to the affine map of
//! the winning coordinate. With `beta = exp(-delta / tau)` the certified
//! quantities are:
//!
//! * value gap `P(s) - max(s) <= tau log(1 + (N-1) beta)`
//! * gradient gap `|p - e_i|_1 <= 2 (N-1) beta`
//! * Hessian norm: the reported bound constant is `(N-1) beta / tau`; the
//!   provable envelope carries an extra factor two (see below)
//! * affine residual `<= (N-1) beta / (2 tau) |s - s'|^2` reported, with the
//!   same factor-two envelope
//!
//! The factor two: `|diag(p) - p p^T|_2` is NOT bounded by
//! `max_k p_k (1 - p_k)` — for `p = (1/2, 1/2)` the norm is `1/2`, twice
//! that quantity. The sharp elementary envelope comes from the trace:
//! `|H|_2 <= tr(H) = 1 - |p|^2 <= (1 - p_i)(1 + p_i) <= 2 (N-1) beta`, tight
//! for `N = 2` where the norm is exactly `2 p_1 p_2`. Reports carry the
//! unscaled constants; assertions in this crate use the provable envelope.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::norm_sq;
use crate::rng::CounterRng;
use crate::scalar::Scalar;
use crate::trop::{lse_add, softmax_masses, Temperature};

/// Largest score count accepted by the dense Hessian path.
pub const MAX_HESSIAN_N: usize = 10_000;

/// Factor by which the provable Hessian/affine envelopes exceed the
/// reported bound constants.
pub const HESSIAN_ENVELOPE_FACTOR: f64 = 2.0;

/// `P(s) = tau log(sum exp(s_j / tau))`, max-shifted.
pub fn lse_potential<S: Scalar>(scores: &[S], tau: S) -> Result<S> {
    let temp = Temperature::finite(tau)?;
    lse_add(scores, temp)
}

/// Softmax of `s / tau`: the gradient of [`lse_potential`]. Components sum
/// to one to within a few ulps (compensated normalizer).
pub fn softmax_gradient<S: Scalar>(scores: &[S], tau: S) -> Result<Vec<S>> {
    Temperature::finite(tau)?;
    if scores.is_empty() {
        return Err(Error::EmptyOperands);
    }
    Ok(softmax_masses(scores, tau))
}

/// Largest eigenvalue of the Hessian `(diag(p) - p p^T) / tau` by symmetric
/// power iteration (relative tolerance 1e-10, 10^4 iteration cap). The
/// matrix is PSD, so the iteration converges to the spectral norm; products
/// are evaluated matrix-free as `H x = (p . x - p <p, x>) / tau`.
pub fn hessian_spectral_norm<S: Scalar>(scores: &[S], tau: S) -> Result<S> {
    Temperature::finite(tau)?;
    if scores.is_empty() {
        return Err(Error::EmptyOperands);
    }
    if scores.len() > MAX_HESSIAN_N {
        return Err(Error::GuardExceeded(format!(
            "hessian limited to N <= {MAX_HESSIAN_N}"
        )));
    }
    let p = softmax_masses(scores, tau);
    let n = p.len();
    if n == 1 {
        return Ok(S::zero());
    }

    // The all-ones vector spans the kernel (rows of diag(p) - p p^T sum to
    // zero), so seed with the mean-centered indicator of the heaviest mass,
    // which always overlaps the top eigenspace.
    let i0 = p
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite masses"))
        .unwrap()
        .0;
    let mean = S::one() / S::from_usize(n).unwrap();
    let mut v: Vec<S> = (0..n)
        .map(|i| if i == i0 { S::one() - mean } else { -mean })
        .collect();
    let vnorm = norm_sq(&v).sqrt();
    for x in v.iter_mut() {
        *x = *x / vnorm;
    }

    // H x = p . (x - <p, x> 1) / tau. Forming x_i - <p,x> directly cancels
    // two O(|x|) quantities when p is concentrated; one refinement step
    // removes the uniform error component (a kernel direction), leaving
    // errors on the scale of the result itself.
    let hx = |x: &[S]| -> Vec<S> {
        let px: S = p.iter().zip(x).map(|(a, b)| *a * *b).sum();
        let r: Vec<S> = x.iter().map(|xi| *xi - px).collect();
        let pr: S = p.iter().zip(&r).map(|(a, b)| *a * *b).sum();
        p.iter()
            .zip(&r)
            .map(|(pi, ri)| *pi * (*ri - pr) / tau)
            .collect()
    };

    let tol = S::c(1e-10);
    let mut lambda = S::zero();
    for _ in 0..10_000 {
        let w = hx(&v);
        let wnorm = norm_sq(&w).sqrt();
        if wnorm <= S::min_positive_value() {
            return Ok(S::zero());
        }
        let next: Vec<S> = w.iter().map(|x| *x / wnorm).collect();
        let rayleigh: S = next
            .iter()
            .zip(hx(&next))
            .map(|(a, b)| *a * b)
            .sum();
        let converged = (rayleigh - lambda).abs() <= tol * rayleigh.abs().max(S::c(1e-300));
        lambda = rayleigh;
        v = next;
        if converged {
            break;
        }
    }
    Ok(lambda.max(S::zero()))
}

/// Certificate of the four stability quantities on one score vector.
///
/// Bounds are reported with the theorem's constants; `hess_bound` and
/// `affine_bound` can be exceeded by at most [`HESSIAN_ENVELOPE_FACTOR`]
/// (see the module documentation). When the margin is non-positive the
/// vector is on or across a tie boundary: `in_stable_region` is false and
/// the bounds are omitted.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport<S: Scalar> {
    pub n: usize,
    pub tau: S,
    /// Measured margin: top score minus second score.
    pub delta: S,
    pub value_gap: S,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_bound: Option<S>,
    pub grad_l1_gap: S,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_bound: Option<S>,
    pub hess_norm: S,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hess_bound: Option<S>,
    pub affine_residual: S,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub affine_bound: Option<S>,
    pub in_stable_region: bool,
    /// Set when `exp(-delta/tau)` underflows to zero and the bounds are
    /// reported as exact zeros.
    pub bound_underflow: bool,
}

/// Measure all four stability quantities of `scores` at temperature `tau`
/// and pair them with their bounds.
///
/// The probe `s'` for the affine check defaults to `s` plus a seeded random
/// direction of norm 0.1, clamped into the stable region
/// `{s' : s'_i >= s'_j + delta}`; pass an explicit probe to override.
pub fn certify<S: Scalar>(
    scores: &[S],
    tau: S,
    probe: Option<&[S]>,
    seed: u64,
) -> Result<StabilityReport<S>> {
    Temperature::finite(tau)?;
    if scores.is_empty() {
        return Err(Error::EmptyOperands);
    }
    let n = scores.len();

    // argmax and measured margin
    let mut top = 0usize;
    for (j, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[top] {
            top = j;
        }
    }
    let mut second = S::neg_infinity();
    for (j, s) in scores.iter().enumerate() {
        if j != top && *s > second {
            second = *s;
        }
    }
    let delta = if n == 1 {
        S::infinity()
    } else {
        scores[top] - second
    };

    // Tail quantities at the top index: e_j = exp((s_j - s_i)/tau) and
    // T = sum_j e_j give P(s) - s_i = tau log(1 + T) and
    // |p - e_i|_1 = 2T/(1 + T). Working on this scale keeps each measured
    // quantity accurate relative to itself; subtracting O(|s|) potentials
    // would drown exponentially small gaps in representation noise.
    let tails = |v: &[S]| -> (Vec<S>, S) {
        let mut es = vec![S::zero(); n];
        let mut t = S::zero();
        for (j, x) in v.iter().enumerate() {
            if j != top {
                let e = ((*x - v[top]) / tau).exp();
                es[j] = e;
                t = t + e;
            }
        }
        (es, t)
    };
    let (es, t) = tails(scores);
    let value_gap = tau * t.ln_1p();
    let grad_l1_gap = S::c(2.0) * t / (S::one() + t);
    let hess_norm = hessian_spectral_norm(scores, tau)?;

    let stable = delta > S::zero();
    let mut report = StabilityReport {
        n,
        tau,
        delta,
        value_gap,
        value_bound: None,
        grad_l1_gap,
        grad_bound: None,
        hess_norm,
        hess_bound: None,
        affine_residual: S::zero(),
        affine_bound: None,
        in_stable_region: false,
        bound_underflow: false,
    };
    if !stable {
        return Ok(report);
    }

    // probe point, clamped into the delta-stable region of the top index
    let probe_vec: Vec<S> = match probe {
        Some(p) => {
            if p.len() != n {
                return Err(Error::LengthMismatch(p.len(), n));
            }
            p.to_vec()
        }
        None => {
            let rng = CounterRng::new(seed);
            let dir: Vec<S> = (0..n).map(|j| S::c(rng.gaussian(0, j as u64))).collect();
            let dn = norm_sq(&dir).sqrt().max(S::min_positive_value());
            let step = S::c(0.1);
            scores
                .iter()
                .zip(&dir)
                .map(|(s, d)| *s + step * *d / dn)
                .collect()
        }
    };
    let mut probe_vec = probe_vec;
    if probe.is_none() {
        // clamp: s'_j <= s'_i - delta for all j != i
        let cap = probe_vec[top] - delta;
        for (j, v) in probe_vec.iter_mut().enumerate() {
            if j != top && *v > cap {
                *v = cap;
            }
        }
    }
    let probe_in_region = probe_vec
        .iter()
        .enumerate()
        .all(|(j, v)| j == top || probe_vec[top] - *v >= delta - S::tie_tol());

    let beta = if delta.is_infinite() {
        S::zero()
    } else {
        (-delta / tau).exp()
    };
    let n1 = S::from_usize(n - 1).unwrap();
    let underflow = beta == S::zero() && !delta.is_infinite();
    report.bound_underflow = underflow;
    report.value_bound = Some(tau * (n1 * beta).ln_1p());
    report.grad_bound = Some(S::c(2.0) * n1 * beta);
    report.hess_bound = Some(n1 * beta / tau);

    let diff: Vec<S> = probe_vec
        .iter()
        .zip(scores)
        .map(|(a, b)| *a - *b)
        .collect();
    let dist_sq = norm_sq(&diff);
    report.affine_residual = if probe_in_region {
        // P(s') - P(s) - <p, s' - s> with the large components cancelled
        // symbolically: the top coordinate contributes
        // diff_top (1 - p_top) = diff_top T/(1+T), the rest stay on the
        // tail scale throughout.
        let (_, t_p) = tails(&probe_vec);
        let one_plus = S::one() + t;
        let mut lin_tail = S::zero();
        for (j, e) in es.iter().enumerate() {
            if j != top {
                lin_tail = lin_tail + *e / one_plus * diff[j];
            }
        }
        (diff[top] * (t / one_plus) + tau * (t_p.ln_1p() - t.ln_1p()) - lin_tail).abs()
    } else {
        let lse_s = lse_potential(scores, tau)?;
        let lse_p = lse_potential(&probe_vec, tau)?;
        let grad = softmax_gradient(scores, tau)?;
        let lin: S = grad.iter().zip(&diff).map(|(g, d)| *g * *d).sum();
        (lse_p - lse_s - lin).abs()
    };
    report.affine_bound = Some(n1 * beta / (S::c(2.0) * tau) * dist_sq);
    report.in_stable_region = probe_in_region;
    Ok(report)
}

/// The provable envelopes for the Hessian norm and affine residual: the
/// reported constants scaled by [`HESSIAN_ENVELOPE_FACTOR`].
pub fn hessian_envelope<S: Scalar>(report: &StabilityReport<S>) -> Option<(S, S)> {
    let f = S::c(HESSIAN_ENVELOPE_FACTOR);
    Some((report.hess_bound? * f, report.affine_bound? * f))
}
