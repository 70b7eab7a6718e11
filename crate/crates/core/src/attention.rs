//! Attention routing geometry: soft and hard (zero-temperature) attention,
//! the power-diagram form of dot-product routing, and log-lifted tropical
//! outputs.
//!
//! Hard routing `argmax_j <q, k_j>` is algebraically the same partition as
//! the power diagram with sites `k_j` and weights `w_j = |k_j|^2`, by the
//! polarization identity `<q, k> = (|q|^2 + |k|^2 - |q - k|^2) / 2`; the two
//! entry points here are kept as independent code paths so that equivalence
//! stays checkable.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, check_finite, dot, norm_sq, sub, Matrix};
use crate::rng::CounterRng;
use crate::scalar::Scalar;
use crate::trop::{lse_add, softmax_masses, Temperature, TropicalPolynomial};

/// Outcome of a routing decision.
///
/// `winner` is the smallest index attaining the optimum; `tie_set` contains
/// every index within the tie tolerance of the optimum; `margin` is the gap
/// between the best and second-best scores (infinite for a single site).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoutingResult<S> {
    pub winner: usize,
    pub tie_set: Vec<usize>,
    pub margin: S,
}

impl<S: Scalar> RoutingResult<S> {
    pub fn is_tie(&self) -> bool {
        self.tie_set.len() > 1
    }

    /// Build from raw scores, maximizing.
    fn from_scores(scores: &[S]) -> Self {
        debug_assert!(!scores.is_empty());
        let mut best = 0usize;
        for (i, s) in scores.iter().enumerate().skip(1) {
            if *s > scores[best] {
                best = i;
            }
        }
        let tol = S::tie_tol();
        let tie_set: Vec<usize> = scores
            .iter()
            .enumerate()
            .filter(|(_, s)| scores[best] - **s <= tol)
            .map(|(i, _)| i)
            .collect();
        let winner = tie_set[0];
        let mut second = S::neg_infinity();
        for (i, s) in scores.iter().enumerate() {
            if i != best && *s > second {
                second = *s;
            }
        }
        let margin = if scores.len() == 1 {
            S::infinity()
        } else {
            scores[best] - second
        };
        RoutingResult {
            winner,
            tie_set,
            margin,
        }
    }
}

/// Zero-temperature routing: winner of `argmax_j <q, k_j>`.
pub fn hard_routing<S: Scalar>(q: &[S], keys: &[Vec<S>]) -> Result<RoutingResult<S>> {
    if keys.is_empty() {
        return Err(Error::EmptyKeys);
    }
    let scores: Vec<S> = keys
        .iter()
        .map(|k| {
            check_dim(k, q.len())?;
            Ok(dot(q, k))
        })
        .collect::<Result<_>>()?;
    Ok(RoutingResult::from_scores(&scores))
}

/// Power-diagram membership: winner of `argmin_j (|q - c_j|^2 - w_j)`.
pub fn power_voronoi_membership<S: Scalar>(
    q: &[S],
    sites: &[Vec<S>],
    weights: &[S],
) -> Result<RoutingResult<S>> {
    if sites.len() != weights.len() {
        return Err(Error::LengthMismatch(sites.len(), weights.len()));
    }
    if sites.is_empty() {
        return Err(Error::EmptyKeys);
    }
    let neg_power: Vec<S> = sites
        .iter()
        .zip(weights)
        .map(|(c, w)| {
            check_dim(c, q.len())?;
            Ok(*w - norm_sq(&sub(q, c)))
        })
        .collect::<Result<_>>()?;
    Ok(RoutingResult::from_scores(&neg_power))
}

/// Key/value data of one attention head, with an optional affine query
/// projection and optional log-lifted value parameterization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HeadDataRaw<S>")]
#[serde(bound(
    serialize = "S: Scalar + Serialize",
    deserialize = "S: Scalar + Deserialize<'de>"
))]
pub struct HeadData<S: Scalar> {
    keys: Vec<Vec<S>>,
    values: Vec<Vec<S>>,
    #[serde(rename = "w_q", skip_serializing_if = "Option::is_none")]
    query_proj: Option<Matrix<S>>,
    #[serde(rename = "q_bias", skip_serializing_if = "Option::is_none")]
    query_bias: Option<Vec<S>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lifted_values: Option<Vec<Vec<S>>>,
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
struct HeadDataRaw<S: Scalar> {
    keys: Vec<Vec<S>>,
    values: Vec<Vec<S>>,
    #[serde(rename = "w_q", default)]
    query_proj: Option<Matrix<S>>,
    #[serde(rename = "q_bias", default)]
    query_bias: Option<Vec<S>>,
    #[serde(default)]
    lifted_values: Option<Vec<Vec<S>>>,
}

impl<S: Scalar> TryFrom<HeadDataRaw<S>> for HeadData<S> {
    type Error = Error;
    fn try_from(raw: HeadDataRaw<S>) -> Result<Self> {
        let mut head = HeadData::new(raw.keys, raw.values)?;
        if let Some(wq) = raw.query_proj {
            head = head.with_query_proj(wq)?;
        }
        if let Some(b) = raw.query_bias {
            head = head.with_query_bias(b)?;
        }
        if let Some(lv) = raw.lifted_values {
            head.set_lifted_values_unchecked(lv)?;
        }
        Ok(head)
    }
}

impl<S: Scalar> HeadData<S> {
    pub fn new(keys: Vec<Vec<S>>, values: Vec<Vec<S>>) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::EmptyKeys);
        }
        if keys.len() != values.len() {
            return Err(Error::LengthMismatch(keys.len(), values.len()));
        }
        let d_k = keys[0].len();
        let d_v = values[0].len();
        for k in &keys {
            check_dim(k, d_k)?;
            check_finite(k)?;
        }
        for v in &values {
            check_dim(v, d_v)?;
            check_finite(v)?;
        }
        Ok(Self {
            keys,
            values,
            query_proj: None,
            query_bias: None,
            lifted_values: None,
        })
    }

    /// Attach a query projection `W_Q` of shape `d_model x d_k` (queries are
    /// projected as `q = W_Q^T x`, the row-vector convention `q = x W_Q`).
    pub fn with_query_proj(mut self, w_q: Matrix<S>) -> Result<Self> {
        if w_q.cols() != self.key_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.key_dim(),
                got: w_q.cols(),
            });
        }
        self.query_proj = Some(w_q);
        Ok(self)
    }

    /// Attach an affine query offset in the projected space, used by
    /// constructions that lift a coordinate to `(x_h, 1)`.
    pub fn with_query_bias(mut self, bias: Vec<S>) -> Result<Self> {
        check_dim(&bias, self.key_dim())?;
        check_finite(&bias)?;
        self.query_bias = Some(bias);
        Ok(self)
    }

    /// Derive log-lifted values from the stored values at a reference
    /// temperature: `v = exp(vt / tau)` inverted as `vt = tau * ln(v)`.
    /// Refuses values that are not strictly positive.
    pub fn lift_values(mut self, tau_ref: S) -> Result<Self> {
        if !(tau_ref.is_finite() && tau_ref > S::zero()) {
            return Err(Error::InvalidTemperature);
        }
        let mut lifted = Vec::with_capacity(self.values.len());
        for v in &self.values {
            if v.iter().any(|x| *x <= S::zero()) {
                return Err(Error::NonpositiveValues);
            }
            lifted.push(v.iter().map(|x| tau_ref * x.ln()).collect());
        }
        self.lifted_values = Some(lifted);
        Ok(self)
    }

    /// Attach explicit lifted values, checking consistency
    /// `v = exp(vt / tau_ref)` against the stored values.
    pub fn with_lifted_values(mut self, lifted: Vec<Vec<S>>, tau_ref: S) -> Result<Self> {
        if !(tau_ref.is_finite() && tau_ref > S::zero()) {
            return Err(Error::InvalidTemperature);
        }
        if lifted.len() != self.values.len() {
            return Err(Error::LengthMismatch(lifted.len(), self.values.len()));
        }
        let tol = S::c(1e-6);
        for (lv, v) in lifted.iter().zip(&self.values) {
            check_dim(lv, self.value_dim())?;
            for (l, x) in lv.iter().zip(v) {
                let recon = (*l / tau_ref).exp();
                if !(recon > S::zero()) || (recon - *x).abs() > tol * x.abs().max(S::one()) {
                    return Err(Error::Invalid(
                        "lifted values inconsistent with values at reference temperature".into(),
                    ));
                }
            }
        }
        self.lifted_values = Some(lifted);
        Ok(self)
    }

    fn set_lifted_values_unchecked(&mut self, lifted: Vec<Vec<S>>) -> Result<()> {
        if lifted.len() != self.values.len() {
            return Err(Error::LengthMismatch(lifted.len(), self.values.len()));
        }
        for lv in &lifted {
            check_dim(lv, self.value_dim())?;
            check_finite(lv)?;
        }
        self.lifted_values = Some(lifted);
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self>
    where
        S: for<'de> Deserialize<'de>,
    {
        serde_json::from_str(s).map_err(|e| Error::Invalid(format!("head JSON: {e}")))
    }

    pub fn n_tokens(&self) -> usize {
        self.keys.len()
    }

    pub fn key_dim(&self) -> usize {
        self.keys[0].len()
    }

    pub fn value_dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn keys(&self) -> &[Vec<S>] {
        &self.keys
    }

    pub fn values(&self) -> &[Vec<S>] {
        &self.values
    }

    pub fn lifted_values(&self) -> Option<&[Vec<S>]> {
        self.lifted_values.as_deref()
    }

    /// Map a model-space vector into the projected query space:
    /// `q = W_Q^T x + b` (identity projection when `W_Q` is absent).
    pub fn project_query(&self, x: &[S]) -> Result<Vec<S>> {
        let mut q = match &self.query_proj {
            Some(w) => w.transpose_matvec(x)?,
            None => {
                check_dim(x, self.key_dim())?;
                x.to_vec()
            }
        };
        if let Some(b) = &self.query_bias {
            for (qq, bb) in q.iter_mut().zip(b) {
                *qq = *qq + *bb;
            }
        }
        Ok(q)
    }

    /// The temperature-indexed value family `exp(vt / tau)` of the lifted
    /// parameterization.
    pub fn values_at_temperature(&self, tau: S) -> Result<Vec<Vec<S>>> {
        let lifted = self
            .lifted_values
            .as_ref()
            .ok_or(Error::MissingLiftedValues)?;
        Ok(lifted
            .iter()
            .map(|lv| lv.iter().map(|l| (*l / tau).exp()).collect())
            .collect())
    }

    fn scores(&self, q: &[S]) -> Result<Vec<S>> {
        check_dim(q, self.key_dim())?;
        Ok(self.keys.iter().map(|k| dot(q, k)).collect())
    }
}

/// Softmax-weighted value average at finite temperature, max-shifted so no
/// overflow occurs. The zero-temperature marker is rejected; use
/// [`hard_routing`] there.
pub fn soft_attention<S: Scalar>(
    q: &[S],
    head: &HeadData<S>,
    temp: &Temperature<S>,
) -> Result<Vec<S>> {
    let tau = temp.tau().ok_or(Error::ZeroTemperatureAttention)?;
    let scores = head.scores(q)?;
    let masses = softmax_masses(&scores, tau);
    let mut out = vec![S::zero(); head.value_dim()];
    for (m, v) in masses.iter().zip(head.values()) {
        for (o, x) in out.iter_mut().zip(v) {
            *o = *o + *m * *x;
        }
    }
    Ok(out)
}

/// Softmax masses over the head's scores; exposed so callers can inspect
/// routing dominance at finite temperature.
pub fn attention_masses<S: Scalar>(
    q: &[S],
    head: &HeadData<S>,
    tau: S,
) -> Result<Vec<S>> {
    let scores = head.scores(q)?;
    Ok(softmax_masses(&scores, tau))
}

/// Zero-temperature log-domain output of channel `c` under the log-lifted
/// value parameterization:
/// `max_j(<q,k_j> + vt_{j,c}) - max_l <q,k_l>`, evaluated through tropical
/// polynomials.
pub fn log_lifted_output<S: Scalar>(q: &[S], head: &HeadData<S>, channel: usize) -> Result<S> {
    let lifted = head.lifted_values().ok_or(Error::MissingLiftedValues)?;
    if channel >= head.value_dim() {
        return Err(Error::Invalid(format!(
            "channel {channel} out of range for value dimension {}",
            head.value_dim()
        )));
    }
    let num = TropicalPolynomial::new(
        head.keys()
            .iter()
            .zip(lifted)
            .map(|(k, lv)| (lv[channel], k.clone()))
            .collect(),
        head.key_dim(),
    )?;
    let den = TropicalPolynomial::new(
        head.keys().iter().map(|k| (S::zero(), k.clone())).collect(),
        head.key_dim(),
    )?;
    let (pn, _) = num.eval(q, Temperature::Zero)?;
    let (pd, _) = den.eval(q, Temperature::Zero)?;
    Ok(pn - pd)
}

/// Finite-temperature log-domain output of channel `c` with the
/// temperature-indexed value family `v = exp(vt / tau)`:
/// `tau * log(numerator / denominator)` of the soft-attention ratio.
pub fn log_domain_output<S: Scalar>(
    q: &[S],
    head: &HeadData<S>,
    channel: usize,
    tau: S,
) -> Result<S> {
    let lifted = head.lifted_values().ok_or(Error::MissingLiftedValues)?;
    let scores = head.scores(q)?;
    let temp = Temperature::finite(tau)?;
    let num_args: Vec<S> = scores
        .iter()
        .zip(lifted)
        .map(|(s, lv)| *s + lv[channel])
        .collect();
    Ok(lse_add(&num_args, temp)? - lse_add(&scores, temp)?)
}

/// Monte Carlo census of nonempty full-dimensional power cells: indices that
/// win at least one strict-margin probe drawn uniformly from `probe_box`.
/// A lower-bound census; cells smaller than the probe resolution may be
/// missed, and tie probes are discarded as boundary hits.
pub fn empty_cell_census<S: Scalar>(
    sites: &[Vec<S>],
    weights: &[S],
    probe_box: &[(S, S)],
    probe_budget: u64,
    seed: u64,
) -> Result<BTreeSet<usize>> {
    const MIN_BUDGET: u64 = 1_000;
    if probe_budget < MIN_BUDGET {
        return Err(Error::ProbeBudget { min: MIN_BUDGET });
    }
    if sites.is_empty() {
        return Err(Error::EmptyKeys);
    }
    let dim = sites[0].len();
    if probe_box.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: probe_box.len(),
        });
    }
    let rng = CounterRng::new(seed);
    let mut nonempty = BTreeSet::new();
    let mut q = vec![S::zero(); dim];
    for i in 0..probe_budget {
        for (a, x) in q.iter_mut().enumerate() {
            let (lo, hi) = probe_box[a];
            *x = S::c(rng.uniform_in(
                i,
                a as u64,
                lo.to_f64().unwrap(),
                hi.to_f64().unwrap(),
            ));
        }
        let r = power_voronoi_membership(&q, sites, weights)?;
        if !r.is_tie() {
            nonempty.insert(r.winner);
        }
    }
    Ok(nonempty)
}

/// The default probe domain `[-4, 4]^dim`.
pub fn default_probe_box<S: Scalar>(dim: usize) -> Vec<(S, S)> {
    vec![(S::c(-4.0), S::c(4.0)); dim]
}

/// Squared-norm weights `w_j = |k_j|^2` that make the power diagram of the
/// keys coincide with dot-product routing.
pub fn key_norm_weights<S: Scalar>(keys: &[Vec<S>]) -> Vec<S> {
    keys.iter().map(|k| norm_sq(k)).collect()
}
