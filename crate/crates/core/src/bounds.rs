//! Combinatorial complexity bounds: hyperplane-arrangement region counts,
//! Minkowski-sum vertex bounds, and the linear-region bounds they imply for
//! block networks. All formulas are evaluated in exact big-integer
//! arithmetic; the interesting parameter ranges overflow `u64` immediately
//! (e.g. `512 * 513^7`).

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Binomial coefficient `C(n, k)`; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut num = BigUint::one();
    for i in 0..k {
        num *= n - i;
        num /= i + 1; // exact: C(n, i+1) is an integer
    }
    num
}

/// Number of regions an arrangement of `n` hyperplanes in general position
/// induces in `R^d`: `sum_{j=0..d} C(n, j)`.
pub fn zaslavsky_regions(n: u64, d: u64) -> BigUint {
    (0..=d).map(|j| binomial(n, j)).sum()
}

/// Head-count regime of the vertex bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `H <= d`: the closed form `N (1+N)^(H-1)` applies.
    Standard,
    /// `H > d`: the truncated sum `sum_{k<d} C(H-1, k) N^(k+1)` applies.
    Saturated,
}

/// Upper bound on the vertex count of a Minkowski sum of `H` polytopes with
/// at most `N` vertices each in `R^d`.
pub fn minkowski_vertex_upper_bound(n_tokens: u64, heads: u64, dim: u64) -> BigUint {
    assert!(n_tokens >= 1 && heads >= 1 && dim >= 1);
    let n = BigUint::from(n_tokens);
    if heads <= dim {
        // N (1+N)^(H-1)
        let base = &n + 1u32;
        n * base.pow((heads - 1) as u32)
    } else {
        // sum_{k=0..d-1} C(H-1, k) N^(k+1)
        (0..dim)
            .map(|k| binomial(heads - 1, k) * n.pow((k + 1) as u32))
            .sum()
    }
}

/// Vertex bound together with the regime it was computed in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub n_tokens: u64,
    pub n_heads: u64,
    pub dim: u64,
    pub regime: Regime,
    #[serde(serialize_with = "serialize_biguint")]
    pub bound_value: BigUint,
}

fn serialize_biguint<Ser: serde::Serializer>(
    v: &BigUint,
    s: Ser,
) -> std::result::Result<Ser::Ok, Ser::Error> {
    s.serialize_str(&v.to_string())
}

pub fn bound_report(n_tokens: u64, n_heads: u64, dim: u64) -> BoundReport {
    BoundReport {
        n_tokens,
        n_heads,
        dim,
        regime: if n_heads <= dim {
            Regime::Standard
        } else {
            Regime::Saturated
        },
        bound_value: minkowski_vertex_upper_bound(n_tokens, n_heads, dim),
    }
}

/// Per-layer refinement bound on full-dimensional linear regions, raised to
/// the depth: `(V_multi(N,H,d) * R(d_ff, d))^L`, the attention vertex bound
/// times the exact arrangement count for the FFN hyperplanes.
pub fn region_upper_bound(n_tokens: u64, heads: u64, dim: u64, d_ff: u64, depth: u64) -> BigUint {
    let per_layer =
        minkowski_vertex_upper_bound(n_tokens, heads, dim) * zaslavsky_regions(d_ff, dim);
    per_layer.pow(depth as u32)
}

/// Constructive lower bound on linear regions:
/// `(N^d * floor(d_ff / 2d)^d)^L`. Requires `d_ff >= 2d`.
pub fn region_lower_bound(n_tokens: u64, dim: u64, d_ff: u64, depth: u64) -> Result<BigUint> {
    if d_ff < 2 * dim {
        return Err(Error::FfnTooNarrow);
    }
    let w = d_ff / (2 * dim);
    let per_layer = BigUint::from(n_tokens).pow(dim as u32) * BigUint::from(w).pow(dim as u32);
    Ok(per_layer.pow(depth as u32))
}

/// Exact region count realized by the explicit sawtooth construction:
/// `(N * 2w)^(dL)` with `w = floor(d_ff / 2d)`. The displayed lower bound
/// uses the factor `w^d` per layer where the construction realizes `(2w)^d`;
/// both numbers are exposed so callers can report either.
pub fn constructed_region_count(n_tokens: u64, dim: u64, d_ff: u64, depth: u64) -> Result<BigUint> {
    if d_ff < 2 * dim {
        return Err(Error::FfnTooNarrow);
    }
    let w = d_ff / (2 * dim);
    Ok(BigUint::from(n_tokens * 2 * w).pow((dim * depth) as u32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn zaslavsky_worked_examples() {
        assert_eq!(zaslavsky_regions(3, 2), big(7));
        assert_eq!(zaslavsky_regions(0, 5), big(1));
        // Two-layer product of the 7-region arrangement.
        assert_eq!(zaslavsky_regions(3, 2).pow(2), big(49));
        // n <= d saturates at 2^n.
        assert_eq!(zaslavsky_regions(4, 10), big(16));
    }

    #[test]
    fn minkowski_bound_closed_form() {
        assert_eq!(minkowski_vertex_upper_bound(6, 3, 3), big(294)); // 6 * 49
        for n in 1..10 {
            assert_eq!(minkowski_vertex_upper_bound(n, 1, 4), big(n));
        }
        let expected = big(512) * big(513).pow(7);
        assert_eq!(minkowski_vertex_upper_bound(512, 8, 512), expected);
        assert!(expected > big(u64::MAX)); // genuinely needs big integers
    }

    #[test]
    fn minkowski_bound_saturated_regime() {
        // H > d: truncated sum. H=4, d=2, N=3: C(3,0)*3 + C(3,1)*9 = 30.
        assert_eq!(minkowski_vertex_upper_bound(3, 4, 2), big(30));
        let r = bound_report(3, 4, 2);
        assert_eq!(r.regime, Regime::Saturated);
        assert_eq!(bound_report(3, 2, 2).regime, Regime::Standard);
        // At H = d the two formulas agree: sum_{k<d} C(d-1,k) N^{k+1} = N(1+N)^{d-1}.
        let h = 3u64;
        let by_sum: BigUint = (0..h)
            .map(|k| binomial(h - 1, k) * big(5).pow((k + 1) as u32))
            .sum();
        assert_eq!(minkowski_vertex_upper_bound(5, h, h), by_sum);
    }

    #[test]
    fn region_upper_bound_examples() {
        assert_eq!(region_upper_bound(2, 1, 1, 1, 1), big(4)); // 2 * 2
        assert_eq!(region_upper_bound(3, 2, 2, 4, 0), big(1)); // empty network
        // bound(.., L) = bound(.., 1)^L
        let one = region_upper_bound(4, 2, 3, 6, 1);
        assert_eq!(region_upper_bound(4, 2, 3, 6, 3), one.pow(3));
    }

    #[test]
    fn region_lower_bound_examples() {
        assert_eq!(region_lower_bound(2, 1, 2, 1).unwrap(), big(2));
        assert_eq!(region_lower_bound(3, 2, 4, 2).unwrap(), big(81)); // (9*1)^2
        assert_eq!(region_lower_bound(5, 2, 4, 0).unwrap(), big(1));
        assert!(matches!(
            region_lower_bound(2, 2, 3, 1),
            Err(Error::FfnTooNarrow)
        ));
    }

    #[test]
    fn constructed_count_examples() {
        assert_eq!(constructed_region_count(2, 1, 2, 1).unwrap(), big(4));
        assert_eq!(constructed_region_count(3, 1, 2, 1).unwrap(), big(6));
        assert_eq!(constructed_region_count(2, 1, 2, 2).unwrap(), big(16));
        assert_eq!(constructed_region_count(2, 2, 4, 1).unwrap(), big(16));
    }

    #[test]
    fn sandwich_lower_below_upper() {
        for n in 1..6u64 {
            for d in 1..4u64 {
                for dff_mult in 1..4u64 {
                    let d_ff = 2 * d * dff_mult;
                    for l in 0..3u64 {
                        let lo = region_lower_bound(n, d, d_ff, l).unwrap();
                        let hi = region_upper_bound(n, d, d, d_ff, l);
                        assert!(lo <= hi, "N={n} d={d} d_ff={d_ff} L={l}");
                        let built = constructed_region_count(n, d, d_ff, l).unwrap();
                        assert!(lo <= built);
                        assert!(built <= hi, "built {built} > upper {hi} at N={n} d={d} d_ff={d_ff} L={l}");
                    }
                }
            }
        }
    }

    #[test]
    fn binomial_basics() {
        assert_eq!(binomial(10, 3), big(120));
        assert_eq!(binomial(5, 0), big(1));
        assert_eq!(binomial(5, 6), big(0));
        assert_eq!(binomial(52, 26).to_string(), "495918532948104");
    }
}
