//! Toy transformer blocks, activation/routing signatures, and linear-region
//! censuses.
//!
//! A block maps `x` to `FFN_res(x + MHSA(x))` at zero temperature, where
//! every head hard-routes the (projected) query and contributes its winning
//! value through the output projection, and the feed-forward sublayer is
//! residual: `u + W2 relu(W1 u + b1) + b2`. The discrete choices made along
//! the way (routing winners, ReLU signs) form the sample's signature; the
//! number of distinct signatures over a uniform sample is an empirical lower
//! bound on the number of linear regions.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attention::{attention_masses, hard_routing, soft_attention, HeadData};
use crate::error::{Error, Result};
use crate::linalg::{check_dim, Matrix};
use crate::rng::CounterRng;
use crate::scalar::Scalar;
use crate::trop::Temperature;

/// Two-matrix feed-forward sublayer `u -> W2 relu(W1 u + b1) + b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "S: Scalar + Serialize",
    deserialize = "S: Scalar + Deserialize<'de>"
))]
pub struct FeedForward<S: Scalar> {
    pub w1: Matrix<S>,
    pub b1: Vec<S>,
    pub w2: Matrix<S>,
    pub b2: Vec<S>,
}

impl<S: Scalar> FeedForward<S> {
    pub fn hidden_dim(&self) -> usize {
        self.w1.rows()
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let d_ff = self.w1.rows();
        if self.w1.cols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.w1.cols(),
            });
        }
        check_dim(&self.b1, d_ff)?;
        if self.w2.rows() != dim || self.w2.cols() != d_ff {
            return Err(Error::DimensionMismatch {
                expected: dim * d_ff,
                got: self.w2.rows() * self.w2.cols(),
            });
        }
        check_dim(&self.b2, dim)?;
        Ok(())
    }

    /// All-zero feed-forward of the given width (inert units only).
    pub fn zeros(dim: usize, d_ff: usize) -> Self {
        Self {
            w1: Matrix::zeros(d_ff, dim),
            b1: vec![S::zero(); d_ff],
            w2: Matrix::zeros(dim, d_ff),
            b2: vec![S::zero(); dim],
        }
    }
}

/// One transformer block: heads, output projection, attention residual, FFN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "S: Scalar + Serialize",
    deserialize = "S: Scalar + Deserialize<'de>"
))]
pub struct BlockLayer<S: Scalar> {
    pub heads: Vec<HeadData<S>>,
    /// Maps the concatenated head outputs back to model space; `None` means
    /// identity (requires the concatenation to already have model dimension).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub output_proj: Option<Matrix<S>>,
    /// Whether the attention sublayer adds its input back.
    pub residual: bool,
    pub ffn: FeedForward<S>,
}

/// A stack of identical-shape transformer blocks on `R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockNetworkRaw<S>")]
#[serde(bound(
    serialize = "S: Scalar + Serialize",
    deserialize = "S: Scalar + Deserialize<'de>"
))]
pub struct BlockNetwork<S: Scalar> {
    dim: usize,
    layers: Vec<BlockLayer<S>>,
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
struct BlockNetworkRaw<S: Scalar> {
    dim: usize,
    layers: Vec<BlockLayer<S>>,
}

impl<S: Scalar> TryFrom<BlockNetworkRaw<S>> for BlockNetwork<S> {
    type Error = Error;
    fn try_from(raw: BlockNetworkRaw<S>) -> Result<Self> {
        BlockNetwork::new(raw.dim, raw.layers)
    }
}

impl<S: Scalar> BlockNetwork<S> {
    pub fn new(dim: usize, layers: Vec<BlockLayer<S>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Invalid("network needs at least one layer".into()));
        }
        for layer in &layers {
            if layer.heads.is_empty() {
                return Err(Error::Invalid("layer needs at least one head".into()));
            }
            let concat: usize = layer.heads.iter().map(|h| h.value_dim()).sum();
            match &layer.output_proj {
                Some(w) => {
                    if w.rows() != dim || w.cols() != concat {
                        return Err(Error::DimensionMismatch {
                            expected: dim * concat,
                            got: w.rows() * w.cols(),
                        });
                    }
                }
                None => {
                    if concat != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            got: concat,
                        });
                    }
                }
            }
            layer.ffn.validate(dim)?;
        }
        Ok(Self { dim, layers })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[BlockLayer<S>] {
        &self.layers
    }

    pub fn n_tokens(&self) -> usize {
        self.layers[0].heads[0].n_tokens()
    }

    pub fn heads_per_layer(&self) -> usize {
        self.layers[0].heads.len()
    }

    pub fn ffn_width(&self) -> usize {
        self.layers[0].ffn.hidden_dim()
    }

    pub fn from_json(s: &str) -> Result<Self>
    where
        S: for<'de> Deserialize<'de>,
    {
        serde_json::from_str(s).map_err(|e| Error::Invalid(format!("network JSON: {e}")))
    }

    /// Random Gaussian-weight network. Layer `l` draws from the substream
    /// `l` of `seed`, so a deeper network extends a shallower one with the
    /// same seed layer by layer.
    pub fn random_gaussian(
        dim: usize,
        n_tokens: usize,
        heads: usize,
        value_dim: usize,
        d_ff: usize,
        depth: usize,
        seed: u64,
    ) -> Result<Self> {
        let rng = CounterRng::new(seed);
        let mut layers = Vec::with_capacity(depth);
        for l in 0..depth {
            let lr = rng.derive(l as u64);
            let mut head_list = Vec::with_capacity(heads);
            for h in 0..heads {
                let hr = lr.derive(h as u64);
                let keys: Vec<Vec<S>> = (0..n_tokens)
                    .map(|j| {
                        (0..dim)
                            .map(|a| S::c(hr.gaussian(0, (j * dim + a) as u64)))
                            .collect()
                    })
                    .collect();
                let values: Vec<Vec<S>> = (0..n_tokens)
                    .map(|j| {
                        (0..value_dim)
                            .map(|a| S::c(hr.gaussian(1, (j * value_dim + a) as u64)))
                            .collect()
                    })
                    .collect();
                head_list.push(HeadData::new(keys, values)?);
            }
            let concat = heads * value_dim;
            let wo_scale = 1.0 / (concat as f64).sqrt();
            let output_proj = Matrix::from_rows(
                (0..dim)
                    .map(|r| {
                        (0..concat)
                            .map(|c| S::c(lr.gaussian(2, (r * concat + c) as u64) * wo_scale))
                            .collect()
                    })
                    .collect(),
            )?;
            let w1_scale = 1.0 / (dim as f64).sqrt();
            let w1 = Matrix::from_rows(
                (0..d_ff)
                    .map(|r| {
                        (0..dim)
                            .map(|c| S::c(lr.gaussian(3, (r * dim + c) as u64) * w1_scale))
                            .collect()
                    })
                    .collect(),
            )?;
            let b1: Vec<S> = (0..d_ff).map(|r| S::c(lr.gaussian(4, r as u64))).collect();
            let w2_scale = 1.0 / (d_ff as f64).sqrt();
            let w2 = Matrix::from_rows(
                (0..dim)
                    .map(|r| {
                        (0..d_ff)
                            .map(|c| S::c(lr.gaussian(5, (r * d_ff + c) as u64) * w2_scale))
                            .collect()
                    })
                    .collect(),
            )?;
            let b2 = vec![S::zero(); dim];
            layers.push(BlockLayer {
                heads: head_list,
                output_proj: Some(output_proj),
                residual: true,
                ffn: FeedForward { w1, b1, w2, b2 },
            });
        }
        BlockNetwork::new(dim, layers)
    }
}

/// Discrete choices of one layer: routing winner per head, dominance flag
/// per head (softmax mass above one half; always true at zero temperature),
/// and the ReLU sign pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerSignature {
    pub routing: Vec<u32>,
    pub dominant: Vec<bool>,
    pub ffn_bits: Vec<bool>,
}

/// Per-sample discrete identifier: the concatenation of all layers' routing
/// indices and activation patterns, plus a boundary flag set when any layer
/// produced a routing tie or a pre-activation within tolerance of zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub layers: Vec<LayerSignature>,
    pub boundary: bool,
}

impl Signature {
    /// Compact byte encoding for set membership. Layer shapes are fixed per
    /// network, so the encoding is unambiguous within one census.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for r in &layer.routing {
                out.extend_from_slice(&r.to_le_bytes());
            }
            let mut push_bits = |bits: &[bool]| {
                let mut byte = 0u8;
                for (i, &b) in bits.iter().enumerate() {
                    if b {
                        byte |= 1 << (i % 8);
                    }
                    if i % 8 == 7 {
                        out.push(byte);
                        byte = 0;
                    }
                }
                if !bits.is_empty() && bits.len() % 8 != 0 {
                    out.push(byte);
                }
            };
            push_bits(&layer.dominant);
            push_bits(&layer.ffn_bits);
        }
        out
    }
}

/// One forward pass, recording the signature. At zero temperature heads
/// hard-route (a tie sets the boundary flag and the smallest tied index is
/// used); at finite temperature heads mix values by softmax and the routing
/// index is the dominant-mass index.
pub fn forward<S: Scalar>(
    x: &[S],
    net: &BlockNetwork<S>,
    temp: &Temperature<S>,
) -> Result<(Vec<S>, Signature)> {
    check_dim(x, net.dim())?;
    let tol = S::tie_tol();
    let mut state = x.to_vec();
    let mut layers_sig = Vec::with_capacity(net.depth());
    let mut boundary = false;

    for layer in net.layers() {
        let mut routing = Vec::with_capacity(layer.heads.len());
        let mut dominant = Vec::with_capacity(layer.heads.len());
        let mut concat: Vec<S> = Vec::new();
        for head in &layer.heads {
            let q = head.project_query(&state)?;
            match temp {
                Temperature::Zero => {
                    let r = hard_routing(&q, head.keys())?;
                    if r.is_tie() {
                        boundary = true;
                    }
                    routing.push(r.winner as u32);
                    dominant.push(true);
                    concat.extend_from_slice(&head.values()[r.winner]);
                }
                Temperature::Finite(tau) => {
                    let masses = attention_masses(&q, head, *tau)?;
                    let mut best = 0usize;
                    for (i, m) in masses.iter().enumerate().skip(1) {
                        if *m > masses[best] {
                            best = i;
                        }
                    }
                    let mut second = S::zero();
                    for (i, m) in masses.iter().enumerate() {
                        if i != best && *m > second {
                            second = *m;
                        }
                    }
                    if masses.len() > 1 && masses[best] - second <= tol {
                        boundary = true;
                    }
                    routing.push(best as u32);
                    dominant.push(masses[best] > S::c(0.5));
                    let out = soft_attention(&q, head, temp)?;
                    concat.extend_from_slice(&out);
                }
            }
        }
        let attn = match &layer.output_proj {
            Some(w) => w.matvec(&concat)?,
            None => concat,
        };
        let u: Vec<S> = if layer.residual {
            state.iter().zip(&attn).map(|(a, b)| *a + *b).collect()
        } else {
            attn
        };

        let pre = layer.ffn.w1.matvec(&u)?;
        let mut ffn_bits = Vec::with_capacity(pre.len());
        let mut hidden = Vec::with_capacity(pre.len());
        for (unit, p) in pre.iter().enumerate() {
            let p = *p + layer.ffn.b1[unit];
            let active = p > S::zero();
            ffn_bits.push(active);
            hidden.push(if active { p } else { S::zero() });
            // An all-zero weight row is an inert unit with constant
            // pre-activation, not a boundary.
            if p.abs() <= tol {
                let row = layer.ffn.w1.row(unit);
                if row.iter().any(|x| *x != S::zero()) {
                    boundary = true;
                }
            }
        }
        let lift = layer.ffn.w2.matvec(&hidden)?;
        state = u
            .iter()
            .zip(&lift)
            .zip(&layer.ffn.b2)
            .map(|((uu, ll), bb)| *uu + *ll + *bb)
            .collect();

        layers_sig.push(LayerSignature {
            routing,
            dominant,
            ffn_bits,
        });
    }

    Ok((
        state,
        Signature {
            layers: layers_sig,
            boundary,
        },
    ))
}

/// Result of a Monte Carlo signature census.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "S: Scalar + Serialize"))]
pub struct CensusReport<S: Scalar> {
    pub n_samples: u64,
    pub n_distinct: u64,
    pub n_boundary_discarded: u64,
    pub seed: u64,
    pub domain: Vec<(S, S)>,
}

/// Draw `n` uniform samples from `domain` (sample `i` is a pure function of
/// `(seed, i)`), evaluate zero-temperature signatures, discard boundary
/// hits, and count distinct signatures. Deterministic at any thread count:
/// the sample set is order-independent and merged by set union.
pub fn monte_carlo_census<S: Scalar>(
    net: &BlockNetwork<S>,
    domain: &[(S, S)],
    n: u64,
    seed: u64,
) -> Result<CensusReport<S>> {
    if n == 0 {
        return Err(Error::Invalid("census needs at least one sample".into()));
    }
    if domain.len() != net.dim() {
        return Err(Error::DimensionMismatch {
            expected: net.dim(),
            got: domain.len(),
        });
    }
    let rng = CounterRng::new(seed);
    let box_f64: Vec<(f64, f64)> = domain
        .iter()
        .map(|(lo, hi)| (lo.to_f64().unwrap(), hi.to_f64().unwrap()))
        .collect();

    let (set, n_boundary) = (0..n)
        .into_par_iter()
        .fold(
            || (HashSet::<Vec<u8>>::new(), 0u64),
            |(mut set, mut boundary), i| {
                let x: Vec<S> = box_f64
                    .iter()
                    .enumerate()
                    .map(|(a, (lo, hi))| S::c(rng.uniform_in(i, a as u64, *lo, *hi)))
                    .collect();
                let (_, sig) = forward(&x, net, &Temperature::Zero)
                    .expect("validated network evaluates everywhere");
                if sig.boundary {
                    boundary += 1;
                } else {
                    set.insert(sig.encode());
                }
                (set, boundary)
            },
        )
        .reduce(
            || (HashSet::new(), 0u64),
            |(mut a, ab), (b, bb)| {
                a.extend(b);
                (a, ab + bb)
            },
        );

    Ok(CensusReport {
        n_samples: n,
        n_distinct: set.len() as u64,
        n_boundary_discarded: n_boundary,
        seed,
        domain: domain.to_vec(),
    })
}

/// Space-folding sawtooth with `w` teeth built from exactly `2w` ReLU
/// units: `s(x) = 2w max(0,x) + 4w sum_{m=1}^{2w-1} (-1)^m max(0, x - m/2w)`.
/// On `[0, 1]` it folds the interval onto itself `2w` times with slopes
/// alternating between `+2w` and `-2w`.
pub fn sawtooth<S: Scalar>(x: S, w: u32) -> S {
    assert!(w >= 1);
    let wf = S::from_u32(w).unwrap();
    let two_w = S::c(2.0) * wf;
    let four_w = S::c(4.0) * wf;
    let mut s = two_w * x.max(S::zero());
    for m in 1..(2 * w) {
        let shift = S::from_u32(m).unwrap() / two_w;
        let r = (x - shift).max(S::zero());
        s = if m % 2 == 1 { s - four_w * r } else { s + four_w * r };
    }
    s
}

/// Explicit block stack realizing `(N 2w)^(d L)` linear regions on
/// `[0,1]^d`, with `w = floor(d_ff / 2d)`: per coordinate, parabolically
/// lifted keys make attention route to `N` congruent cells, the residual
/// re-centers the cell, and the FFN folds it back onto `[0,1]` with a
/// `2w`-tooth sawtooth.
pub fn build_lower_bound_net<S: Scalar>(
    n_tokens: u64,
    dim: usize,
    d_ff: usize,
    depth: usize,
) -> Result<BlockNetwork<S>> {
    if n_tokens == 0 || dim == 0 || depth == 0 {
        return Err(Error::Invalid("N, d, L must be positive".into()));
    }
    if d_ff < 2 * dim {
        return Err(Error::FfnTooNarrow);
    }
    let w = (d_ff / (2 * dim)) as u32;
    let n = n_tokens as usize;
    let nf = n_tokens as f64;

    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let mut heads = Vec::with_capacity(dim);
        for h in 0..dim {
            // Parabolic lifting: key_j = (p_j, -p_j^2 / 2) with
            // p_j = (j + 1/2)/N, probed by the lifted query (x_h, 1).
            let keys: Vec<Vec<S>> = (0..n)
                .map(|j| {
                    let p = (j as f64 + 0.5) / nf;
                    vec![S::c(p), S::c(-0.5 * p * p)]
                })
                .collect();
            let values: Vec<Vec<S>> = (0..n)
                .map(|j| vec![S::c(-((j as f64 + 0.5) / nf))])
                .collect();
            let mut w_q = Matrix::zeros(dim, 2);
            w_q.set(h, 0, S::one());
            let head = HeadData::new(keys, values)?
                .with_query_proj(w_q)?
                .with_query_bias(vec![S::zero(), S::one()])?;
            heads.push(head);
        }

        // Per coordinate h the residual stream carries u_h = x_h - p_j in
        // [-1/2N, 1/2N]; the FFN must output s(N u_h + 1/2) - u_h using 2w
        // units. The sawtooth's leading term 2w relu(N u + 1/2) merges with
        // the passthrough -relu(u + 1/2N) into one unit of gain 2wN - 1.
        let (wf, nf2) = (w as f64, nf);
        let mut w1 = Matrix::zeros(d_ff, dim);
        let mut b1 = vec![S::zero(); d_ff];
        let mut w2 = Matrix::zeros(dim, d_ff);
        let b2 = vec![S::c(0.5 / nf2); dim];
        for h in 0..dim {
            let base = h * 2 * w as usize;
            w1.set(base, h, S::one());
            b1[base] = S::c(0.5 / nf2);
            w2.set(h, base, S::c(2.0 * wf * nf2 - 1.0));
            for m in 1..(2 * w) {
                let unit = base + m as usize;
                w1.set(unit, h, S::c(nf2));
                b1[unit] = S::c(0.5 - m as f64 / (2.0 * wf));
                let coeff = if m % 2 == 1 { -4.0 * wf } else { 4.0 * wf };
                w2.set(h, unit, S::c(coeff));
            }
        }

        layers.push(BlockLayer {
            heads,
            output_proj: None,
            residual: true,
            ffn: FeedForward { w1, b1, w2, b2 },
        });
    }
    BlockNetwork::new(dim, layers)
}

/// Exact one-dimensional pieces of a single constructed block:
/// `(lo, hi, a, b)` with `B(x) = a x + b` mapping `[lo, hi]` onto `[0, 1]`.
fn layer_pieces_1d(n_tokens: u64, w: u32) -> Vec<(f64, f64, f64, f64)> {
    let nf = n_tokens as f64;
    let wf = w as f64;
    let mut pieces = Vec::new();
    for j in 0..n_tokens {
        let c = (j as f64 + 0.5) / nf;
        for k in 0..(2 * w) {
            let z_lo = k as f64 / (2.0 * wf);
            let z_hi = (k + 1) as f64 / (2.0 * wf);
            let x_lo = c + (z_lo - 0.5) / nf;
            let x_hi = c + (z_hi - 0.5) / nf;
            // even fold: B = 2w z - k; odd fold: B = -2w z + k + 1,
            // with z = N(x - c) + 1/2.
            let (a, b) = if k % 2 == 0 {
                (2.0 * wf * nf, wf - 2.0 * wf * nf * c - k as f64)
            } else {
                (-2.0 * wf * nf, 2.0 * wf * nf * c + wf + (k + 1) as f64 - 2.0 * wf)
            };
            pieces.push((x_lo, x_hi, a, b));
        }
    }
    pieces
}

/// Exact breakpoint enumeration for the 1D construction composed `depth`
/// times on `[0, 1]`: returns the sorted interior breakpoints. Independent
/// of [`forward`]; works from the closed-form piecewise description.
pub fn breakpoints_1d(n_tokens: u64, w: u32, depth: usize) -> Vec<f64> {
    let pieces = layer_pieces_1d(n_tokens, w);
    let mut level: Vec<f64> = pieces.iter().skip(1).map(|p| p.0).collect();
    let base = level.clone();
    for _ in 1..depth {
        let mut next = base.clone();
        for &(lo, hi, a, b) in &pieces {
            for &t in &level {
                let x = (t - b) / a;
                if x > lo && x < hi {
                    next.push(x);
                }
            }
        }
        next.sort_by(|p, q| p.partial_cmp(q).unwrap());
        next.dedup_by(|p, q| (*p - *q).abs() < 1e-12);
        level = next;
    }
    level
}

/// Exact region count of the constructed network on `[0,1]^d`: the 1D
/// breakpoint count to the power `d` by coordinate separability.
pub fn exact_region_count(n_tokens: u64, dim: usize, d_ff: usize, depth: usize) -> Result<u64> {
    if d_ff < 2 * dim {
        return Err(Error::FfnTooNarrow);
    }
    let w = (d_ff / (2 * dim)) as u32;
    let count_1d = breakpoints_1d(n_tokens, w, depth).len() as u64 + 1;
    count_1d
        .checked_pow((dim) as u32)
        .ok_or_else(|| Error::GuardExceeded("exact region count overflows u64".into()))
}

/// Census against theory for the explicit construction.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "S: Scalar + Serialize"))]
pub struct CensusVsTheory<S: Scalar> {
    pub n_tokens: u64,
    pub dim: usize,
    pub d_ff: usize,
    pub depth: usize,
    pub teeth: u32,
    pub measured: u64,
    /// Exact count from the breakpoint/product oracle, `(N 2w)^(dL)`.
    pub exact: u64,
    /// Theorem-style lower bound `(N^d w^d)^L` as a decimal string.
    pub lower: String,
    /// Upper bound at `H = d` as a decimal string.
    pub upper: String,
    pub report: CensusReport<S>,
}

/// Build the constructed network, census it on `[0,1]^d`, and report the
/// measured count next to the exact count and the two bound formulas.
/// Guarded to exact counts of at most `10^6`.
pub fn census_vs_theory<S: Scalar>(
    n_tokens: u64,
    dim: usize,
    d_ff: usize,
    depth: usize,
    n_samples: u64,
    seed: u64,
) -> Result<CensusVsTheory<S>> {
    if d_ff < 2 * dim {
        return Err(Error::FfnTooNarrow);
    }
    let w = (d_ff / (2 * dim)) as u32;
    let expected = crate::bounds::constructed_region_count(
        n_tokens,
        dim as u64,
        d_ff as u64,
        depth as u64,
    )?;
    if expected > num_bigint::BigUint::from(1_000_000u64) {
        return Err(Error::GuardExceeded(format!(
            "constructed region count {expected} exceeds 10^6"
        )));
    }
    let net = build_lower_bound_net::<S>(n_tokens, dim, d_ff, depth)?;
    let domain: Vec<(S, S)> = vec![(S::zero(), S::one()); dim];
    let report = monte_carlo_census(&net, &domain, n_samples, seed)?;
    let exact = exact_region_count(n_tokens, dim, d_ff, depth)?;
    let lower =
        crate::bounds::region_lower_bound(n_tokens, dim as u64, d_ff as u64, depth as u64)?;
    let upper = crate::bounds::region_upper_bound(
        n_tokens,
        dim as u64,
        dim as u64,
        d_ff as u64,
        depth as u64,
    );
    Ok(CensusVsTheory {
        n_tokens,
        dim,
        d_ff,
        depth,
        teeth: w,
        measured: report.n_distinct,
        exact,
        lower: lower.to_string(),
        upper: upper.to_string(),
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trop::Temperature;

    fn zero_temp() -> Temperature<f64> {
        Temperature::Zero
    }

    #[test]
    fn sawtooth_parity_and_slopes() {
        for w in [1u32, 2, 3, 5] {
            for k in 0..=(2 * w) {
                let x = k as f64 / (2.0 * w as f64);
                let expected = (k % 2) as f64;
                let got = sawtooth(x, w);
                assert!(
                    (got - expected).abs() < 1e-12,
                    "w={w} k={k}: s({x}) = {got}, expected {expected}"
                );
            }
            // finite-difference slopes on open segment midpoints: +-2w
            for k in 0..(2 * w) {
                let mid = (k as f64 + 0.5) / (2.0 * w as f64);
                let h = 1e-7;
                let slope = (sawtooth(mid + h, w) - sawtooth(mid - h, w)) / (2.0 * h);
                let expected = if k % 2 == 0 { 2.0 * w as f64 } else { -2.0 * w as f64 };
                assert!(
                    (slope - expected).abs() < 1e-6,
                    "w={w} k={k}: slope {slope}"
                );
            }
        }
        assert!((sawtooth(0.25f64, 1) - 0.5).abs() < 1e-15);
        assert!((sawtooth(0.5f64, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_network_adds_value_and_bias() {
        // One head, one token, zero FFN weights: y = x + v + b2.
        let head = HeadData::new(vec![vec![0.7, -0.2]], vec![vec![1.0, 2.0]]).unwrap();
        let mut ffn = FeedForward::zeros(2, 3);
        ffn.b2 = vec![0.25, -0.5];
        let net = BlockNetwork::new(
            2,
            vec![BlockLayer {
                heads: vec![head],
                output_proj: None,
                residual: true,
                ffn,
            }],
        )
        .unwrap();
        let (y, sig) = forward(&[3.0, 4.0], &net, &zero_temp()).unwrap();
        assert_eq!(y, vec![3.0 + 1.0 + 0.25, 4.0 + 2.0 - 0.5]);
        assert!(!sig.boundary);
        // constant over inputs
        let (_, sig2) = forward(&[-1.0, 0.0], &net, &zero_temp()).unwrap();
        assert_eq!(sig.encode(), sig2.encode());
    }

    #[test]
    fn constructed_block_matches_hand_trace() {
        // d=1, N=2, w=1 at x=0.3: routed to the first key (cell [0, 0.5)),
        // B(x) = s(2(x - 0.25) + 0.5) = 2 - 4x on (0.25, 0.5).
        let net = build_lower_bound_net::<f64>(2, 1, 2, 1).unwrap();
        let (y, sig) = forward(&[0.3], &net, &zero_temp()).unwrap();
        assert_eq!(sig.layers[0].routing, vec![0]);
        assert!((y[0] - 0.8).abs() < 1e-12, "y = {}", y[0]);
        assert!(!sig.boundary);

        // full piecewise form on a sweep
        for i in 0..200 {
            let x = 0.0025 + i as f64 * 0.005;
            let (y, _) = forward(&[x], &net, &zero_temp()).unwrap();
            let expected = {
                let c = if x < 0.5 { 0.25 } else { 0.75 };
                sawtooth(2.0 * (x - c) + 0.5, 1)
            };
            assert!((y[0] - expected).abs() < 1e-10, "x={x}: {} vs {expected}", y[0]);
        }
    }

    #[test]
    fn constructed_block_voronoi_walls_and_jacobian() {
        // Walls at x = j/N; |J| = 2wN on every open piece.
        let n = 3u64;
        let net = build_lower_bound_net::<f64>(n, 1, 4, 1).unwrap(); // w = 2
        let h = 1e-7;
        for i in 0..100 {
            let x = 0.004 + i as f64 * 0.01;
            let near_break = breakpoints_1d(n, 2, 1)
                .iter()
                .any(|b| (x - b).abs() < 2.0 * h);
            if near_break {
                continue;
            }
            let (yp, _) = forward(&[x + h], &net, &zero_temp()).unwrap();
            let (ym, _) = forward(&[x - h], &net, &zero_temp()).unwrap();
            let slope = (yp[0] - ym[0]) / (2.0 * h);
            assert!(
                (slope.abs() - 12.0).abs() < 1e-4,
                "x={x}: |J| = {}",
                slope.abs()
            );
        }
        // wall locations: exact tie at x = 1/3 flags the boundary
        let (_, sig) = forward(&[1.0 / 3.0], &net, &zero_temp()).unwrap();
        // 1/3 is not exactly representable; accept either a tie flag or a
        // wall-adjacent signature, but the exact rational 0.5 in N=2 ties:
        let net2 = build_lower_bound_net::<f64>(2, 1, 2, 1).unwrap();
        let (_, sig2) = forward(&[0.5], &net2, &zero_temp()).unwrap();
        assert!(sig2.boundary);
        let _ = sig;
    }

    #[test]
    fn jacobian_constant_within_region() {
        let net = BlockNetwork::<f64>::random_gaussian(2, 3, 2, 1, 4, 2, 99).unwrap();
        let x0 = [0.37, -0.81];
        let h = 1e-6;
        let (_, sig0) = forward(&x0, &net, &zero_temp()).unwrap();
        assert!(!sig0.boundary);
        let jac = |x: &[f64; 2]| -> [[f64; 2]; 2] {
            let mut j = [[0.0; 2]; 2];
            for a in 0..2 {
                let mut xp = *x;
                let mut xm = *x;
                xp[a] += h;
                xm[a] -= h;
                let (yp, _) = forward(&xp, &net, &zero_temp()).unwrap();
                let (ym, _) = forward(&xm, &net, &zero_temp()).unwrap();
                for o in 0..2 {
                    j[o][a] = (yp[o] - ym[o]) / (2.0 * h);
                }
            }
            j
        };
        let j0 = jac(&x0);
        let rng = CounterRng::new(5);
        let mut probed = 0;
        for i in 0..10 {
            let x = [
                x0[0] + rng.uniform_in(0, i, -1e-4, 1e-4),
                x0[1] + rng.uniform_in(1, i, -1e-4, 1e-4),
            ];
            let (_, sig) = forward(&x, &net, &zero_temp()).unwrap();
            if sig.encode() != sig0.encode() {
                continue; // crossed a boundary inside the probe ball
            }
            probed += 1;
            let j = jac(&x);
            for o in 0..2 {
                for a in 0..2 {
                    assert!(
                        (j[o][a] - j0[o][a]).abs() < 1e-5,
                        "Jacobian drift {} vs {}",
                        j[o][a],
                        j0[o][a]
                    );
                }
            }
        }
        assert!(probed >= 8);
    }

    #[test]
    fn census_constant_network() {
        let head = HeadData::new(vec![vec![0.1, 0.1]], vec![vec![1.0, -1.0]]).unwrap();
        let net = BlockNetwork::new(
            2,
            vec![BlockLayer {
                heads: vec![head],
                output_proj: None,
                residual: false,
                ffn: FeedForward::zeros(2, 2),
            }],
        )
        .unwrap();
        let report =
            monte_carlo_census(&net, &[(-4.0, 4.0), (-4.0, 4.0)], 10_000, 3).unwrap();
        assert_eq!(report.n_distinct, 1);
        assert_eq!(report.n_boundary_discarded, 0);
    }

    #[test]
    fn census_single_layer_bounded_by_nonempty_cells() {
        // H=1, N=3, FFN disabled: distinct signatures = nonempty cells <= 3.
        let rng = CounterRng::new(17);
        let keys: Vec<Vec<f64>> = (0..3)
            .map(|j| vec![rng.gaussian(0, 2 * j), rng.gaussian(0, 2 * j + 1)])
            .collect();
        let values: Vec<Vec<f64>> = (0..3).map(|j| vec![j as f64, 0.0]).collect();
        let head = HeadData::new(keys.clone(), values).unwrap();
        let net = BlockNetwork::new(
            2,
            vec![BlockLayer {
                heads: vec![head],
                output_proj: None,
                residual: true,
                ffn: FeedForward::zeros(2, 2),
            }],
        )
        .unwrap();
        let domain = [(-4.0, 4.0), (-4.0, 4.0)];
        let report = monte_carlo_census(&net, &domain, 50_000, 5).unwrap();
        let cells = crate::attention::empty_cell_census(
            &keys,
            &crate::attention::key_norm_weights(&keys),
            &domain,
            50_000,
            5,
        )
        .unwrap();
        assert_eq!(report.n_distinct, cells.len() as u64);
        assert!(report.n_distinct <= 3);
    }

    #[test]
    fn census_matches_breakpoint_oracle_small_cases() {
        for (n, d, d_ff, l, expected) in [
            (2u64, 1usize, 2usize, 1usize, 4u64),
            (3, 1, 2, 1, 6),
            (2, 1, 2, 2, 16),
            (2, 2, 4, 1, 16),
        ] {
            let out = census_vs_theory::<f64>(n, d, d_ff, l, 100_000, 1).unwrap();
            assert_eq!(out.exact, expected, "oracle for ({n},{d},{d_ff},{l})");
            assert_eq!(out.measured, expected, "census for ({n},{d},{d_ff},{l})");
        }
    }

    #[test]
    fn breakpoints_match_known_positions() {
        let b = breakpoints_1d(2, 1, 1);
        assert_eq!(b.len(), 3);
        for (got, want) in b.iter().zip([0.25, 0.5, 0.75]) {
            assert!((got - want).abs() < 1e-12);
        }
        let b = breakpoints_1d(3, 1, 1);
        assert_eq!(b.len(), 5);
        for (got, want) in b.iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0, 4.0 / 6.0, 5.0 / 6.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(breakpoints_1d(2, 1, 2).len() + 1, 16);
    }

    #[test]
    fn census_determinism_across_thread_counts() {
        let net = build_lower_bound_net::<f64>(2, 2, 4, 1).unwrap();
        let domain = vec![(0.0, 1.0); 2];
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| monte_carlo_census(&net, &domain, 50_000, 77).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a, b);
    }

    #[test]
    fn census_monotone_in_prefix() {
        let net = BlockNetwork::<f64>::random_gaussian(2, 4, 2, 1, 4, 1, 31).unwrap();
        let domain = vec![(-4.0, 4.0); 2];
        let mut last = 0;
        for n in [1_000u64, 5_000, 20_000] {
            let r = monte_carlo_census(&net, &domain, n, 123).unwrap();
            assert!(r.n_distinct >= last);
            last = r.n_distinct;
        }
    }

    #[test]
    fn constructed_block_is_surjective_on_unit_box() {
        for (n, w) in [(2u64, 1u32), (3, 2)] {
            let d_ff = (2 * w) as usize * 2; // d = 2
            let net = build_lower_bound_net::<f64>(n, 2, d_ff, 1).unwrap();
            let grid = 160;
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            for i in 0..grid {
                for j in 0..grid {
                    let x = [
                        (i as f64 + 0.5) / grid as f64,
                        (j as f64 + 0.5) / grid as f64,
                    ];
                    let (y, _) = forward(&x, &net, &zero_temp()).unwrap();
                    for a in 0..2 {
                        lo[a] = lo[a].min(y[a]);
                        hi[a] = hi[a].max(y[a]);
                    }
                }
            }
            let res = 2.0 * w as f64 * n as f64 / grid as f64;
            for a in 0..2 {
                assert!(lo[a] <= res, "min {} above resolution {res}", lo[a]);
                assert!(hi[a] >= 1.0 - res, "max {} below 1 - {res}", hi[a]);
                assert!(lo[a] >= -1e-9 && hi[a] <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn finite_temperature_forward_records_dominance() {
        let net = build_lower_bound_net::<f64>(2, 1, 2, 1).unwrap();
        let temp = Temperature::finite(1e-3).unwrap();
        let (y, sig) = forward(&[0.3], &net, &temp).unwrap();
        assert_eq!(sig.layers[0].routing, vec![0]);
        assert!(sig.layers[0].dominant[0]);
        let (y0, _) = forward(&[0.3], &net, &zero_temp()).unwrap();
        assert!((y[0] - y0[0]).abs() < 1e-3);
        // at the wall the masses tie: flagged as boundary
        let temp = Temperature::finite(0.5).unwrap();
        let (_, sig) = forward(&[0.5 + 1e-12], &net, &temp).unwrap();
        assert!(sig.boundary);
    }

    #[test]
    fn sandwich_measured_between_bounds() {
        for (n, d, d_ff, l) in [(2u64, 1usize, 2usize, 1usize), (3, 1, 2, 1), (2, 2, 4, 1)] {
            let out = census_vs_theory::<f64>(n, d, d_ff, l, 50_000, 7).unwrap();
            let lower: u64 = out.lower.parse().unwrap();
            let upper: f64 = out.upper.parse().unwrap();
            assert!(out.measured >= lower);
            assert!((out.measured as f64) <= upper);
        }
    }

    #[test]
    fn guard_rejects_huge_exact_counts() {
        assert!(matches!(
            census_vs_theory::<f64>(100, 2, 8, 3, 1_000, 0),
            Err(Error::GuardExceeded(_))
        ));
    }

    #[test]
    fn network_json_roundtrip() {
        let net = build_lower_bound_net::<f64>(2, 1, 2, 1).unwrap();
        let json = serde_json::to_string(&net).unwrap();
        let back = BlockNetwork::<f64>::from_json(&json).unwrap();
        assert_eq!(net, back);
        let (y1, s1) = forward(&[0.3], &net, &zero_temp()).unwrap();
        let (y2, s2) = forward(&[0.3], &back, &zero_temp()).unwrap();
        assert_eq!(y1, y2);
        assert_eq!(s1.encode(), s2.encode());
    }
}
