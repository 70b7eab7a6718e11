//! Polytopes as canonical extreme-point sets, convex hulls, and Minkowski
//! sums by pairwise-sum enumeration.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hull::extreme_points;
use crate::linalg::{check_dim, check_finite, inf_norm, lex_cmp, sub};
use crate::scalar::Scalar;

/// Hard cap on the ambient dimension of hull computations.
pub const MAX_HULL_DIM: usize = 8;

/// Guard on the number of pointwise sums a Minkowski sum may enumerate.
pub const MINKOWSKI_GUARD: u128 = 10_000_000;

/// Finite vertex set in `R^dim`, canonicalized so that every stored point is
/// an extreme point of the convex hull of the input and the vertex list is
/// sorted lexicographically. `effective_dim` is the dimension of the affine
/// hull (less than `dim` for degenerate inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope<S: Scalar> {
    dim: usize,
    vertices: Vec<Vec<S>>,
    effective_dim: usize,
}

impl<S: Scalar> Polytope<S> {
    /// Extreme points of `conv(points)`, computed by incremental QuickHull
    /// with tolerance-based degeneracy handling. Inputs whose affine hull has
    /// dimension `k < dim` are hulled inside that affine hull.
    pub fn from_points(points: &[Vec<S>], dim: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyOperands);
        }
        if dim == 0 || dim > MAX_HULL_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        for p in points {
            check_dim(p, dim)?;
            check_finite(p)?;
        }
        let deduped = dedup_points(points, dim);
        let out = extreme_points(&deduped, dim)?;
        let mut vertices: Vec<Vec<S>> = out
            .vertex_indices
            .into_iter()
            .map(|i| deduped[i].clone())
            .collect();
        vertices.sort_by(|a, b| lex_cmp(a, b));
        Ok(Self {
            dim,
            vertices,
            effective_dim: out.effective_dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the affine hull of the vertex set.
    pub fn effective_dim(&self) -> usize {
        self.effective_dim
    }

    pub fn vertices(&self) -> &[Vec<S>] {
        &self.vertices
    }

    /// Number of vertices (the `f_0` of the polytope).
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Minkowski sum `P_1 + ... + P_H` by enumerating all pointwise vertex
    /// sums and taking the hull of the result.
    pub fn minkowski_sum(parts: &[Polytope<S>]) -> Result<Polytope<S>> {
        if parts.is_empty() {
            return Err(Error::EmptyOperands);
        }
        let dim = parts[0].dim;
        let mut total: u128 = 1;
        for p in parts {
            if p.dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim,
                });
            }
            total = total.saturating_mul(p.vertex_count() as u128);
        }
        if total > MINKOWSKI_GUARD {
            return Err(Error::SumTooLarge);
        }

        let mut sums: Vec<Vec<S>> = Vec::with_capacity(total as usize);
        let mut odometer = vec![0usize; parts.len()];
        loop {
            let mut s = vec![S::zero(); dim];
            for (part, &vi) in parts.iter().zip(&odometer) {
                for (acc, x) in s.iter_mut().zip(&part.vertices[vi]) {
                    *acc = *acc + *x;
                }
            }
            sums.push(s);
            // advance the odometer
            let mut pos = parts.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                odometer[pos] += 1;
                if odometer[pos] < parts[pos].vertex_count() {
                    break;
                }
                odometer[pos] = 0;
                if pos == 0 {
                    return Polytope::from_points(&sums, dim);
                }
            }
        }
    }
}

impl<S: Scalar + Serialize> Serialize for Polytope<S> {
    fn serialize<T: Serializer>(&self, serializer: T) -> std::result::Result<T::Ok, T::Error> {
        let mut st = serializer.serialize_struct("Polytope", 2)?;
        st.serialize_field("dim", &self.dim)?;
        st.serialize_field("vertices", &self.vertices)?;
        st.end()
    }
}

/// Convex hull of a point set; alias for [`Polytope::from_points`].
pub fn convex_hull<S: Scalar>(points: &[Vec<S>], dim: usize) -> Result<Polytope<S>> {
    Polytope::from_points(points, dim)
}

/// Minkowski sum of a list of polytopes; alias for
/// [`Polytope::minkowski_sum`].
pub fn minkowski_sum<S: Scalar>(parts: &[Polytope<S>]) -> Result<Polytope<S>> {
    Polytope::minkowski_sum(parts)
}

/// Best-effort generator of head polytopes aiming for a vertex-rich
/// Minkowski sum: each part takes `n` points on a trigonometric moment
/// curve (so every point is a vertex) under a seeded random rotation. The
/// product count `n^H` is not always attainable — for as many summands as
/// dimensions the sharp maximum is strictly below it — so callers must not
/// assume the sum reaches it.
pub fn generic_position_parts<S: Scalar>(
    n_tokens: usize,
    heads: usize,
    dim: usize,
    seed: u64,
) -> Result<Vec<Polytope<S>>> {
    if dim == 0 || dim > MAX_HULL_DIM || n_tokens == 0 || heads == 0 {
        return Err(Error::Invalid("need positive N, H and dim <= 8".into()));
    }
    let rng = crate::rng::CounterRng::new(seed);
    let mut parts = Vec::with_capacity(heads);
    for h in 0..heads {
        let rot = random_rotation::<S>(&rng.derive(h as u64), dim);
        let phase = h as f64 / heads as f64 * std::f64::consts::PI;
        let pts: Vec<Vec<S>> = (0..n_tokens)
            .map(|j| {
                let theta = std::f64::consts::TAU * (j as f64 + 0.5 * phase) / n_tokens as f64;
                let raw: Vec<f64> = (0..dim)
                    .map(|a| {
                        let k = (a / 2 + 1) as f64;
                        if a % 2 == 0 {
                            (k * theta + phase).cos()
                        } else {
                            (k * theta + phase).sin()
                        }
                    })
                    .collect();
                (0..dim)
                    .map(|r| {
                        let mut acc = 0.0;
                        for (c, x) in raw.iter().enumerate() {
                            acc += rot[r][c].to_f64().unwrap() * x;
                        }
                        S::c(acc)
                    })
                    .collect()
            })
            .collect();
        parts.push(Polytope::from_points(&pts, dim)?);
    }
    Ok(parts)
}

fn random_rotation<S: Scalar>(rng: &crate::rng::CounterRng, dim: usize) -> Vec<Vec<S>> {
    // Gram-Schmidt on a Gaussian matrix.
    let mut rows: Vec<Vec<f64>> = (0..dim)
        .map(|r| (0..dim).map(|c| rng.gaussian(r as u64, c as u64)).collect())
        .collect();
    for r in 0..dim {
        for prev in 0..r {
            let proj: f64 = rows[r].iter().zip(&rows[prev]).map(|(a, b)| a * b).sum();
            let prev_row = rows[prev].clone();
            for (x, p) in rows[r].iter_mut().zip(&prev_row) {
                *x -= proj * p;
            }
        }
        let len: f64 = rows[r].iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in rows[r].iter_mut() {
            *x /= len;
        }
    }
    rows.into_iter()
        .map(|r| r.into_iter().map(S::c).collect())
        .collect()
}

/// Remove coincident points: two points coincide when their max-norm gap is
/// within `geom_tol` of the bounding-box diameter. The lexicographically
/// first point of a coincidence class is kept.
fn dedup_points<S: Scalar>(points: &[Vec<S>], dim: usize) -> Vec<Vec<S>> {
    let mut lo = points[0].clone();
    let mut hi = points[0].clone();
    for p in points {
        for a in 0..dim {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let diam = crate::linalg::norm(&sub(&hi, &lo));
    if diam <= S::zero() {
        return vec![points[0].clone()];
    }
    let tol = S::geom_tol() * diam;

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]));
    let mut kept: Vec<Vec<S>> = Vec::with_capacity(points.len());
    'outer: for &i in &order {
        let p = &points[i];
        // Points are in lex order, so a coincident earlier point is within
        // `tol` on the first coordinate among the most recently kept ones.
        for q in kept.iter().rev() {
            if p[0] - q[0] > tol {
                break;
            }
            if inf_norm(&sub(p, q)) <= tol {
                continue 'outer;
            }
        }
        kept.push(p.clone());
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm_sq};
    use crate::rng::CounterRng;

    fn gaussian_points(rng: &CounterRng, stream: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..d).map(|a| rng.gaussian(stream, (i * d + a) as u64)).collect())
            .collect()
    }

    /// Caratheodory membership oracle in R^3: `target` lies in conv(others)
    /// iff some 4-point subset contains it with nonnegative barycentric
    /// weights. Exact up to the 4x4 solves; independent of the hull code.
    fn in_hull_caratheodory(target: &[f64], others: &[Vec<f64>]) -> bool {
        fn solve4(mut m: [f64; 16], mut rhs: [f64; 4]) -> Option<[f64; 4]> {
            for col in 0..4 {
                let mut piv = col;
                for r in col + 1..4 {
                    if m[r * 4 + col].abs() > m[piv * 4 + col].abs() {
                        piv = r;
                    }
                }
                if m[piv * 4 + col].abs() < 1e-12 {
                    return None;
                }
                if piv != col {
                    for c in 0..4 {
                        m.swap(piv * 4 + c, col * 4 + c);
                    }
                    rhs.swap(piv, col);
                }
                for r in col + 1..4 {
                    let f = m[r * 4 + col] / m[col * 4 + col];
                    for c in col..4 {
                        m[r * 4 + c] -= f * m[col * 4 + c];
                    }
                    rhs[r] -= f * rhs[col];
                }
            }
            let mut x = [0.0; 4];
            for r in (0..4).rev() {
                let mut acc = rhs[r];
                for c in r + 1..4 {
                    acc -= m[r * 4 + c] * x[c];
                }
                x[r] = acc / m[r * 4 + r];
            }
            Some(x)
        }

        let n = others.len();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for e in c + 1..n {
                        let idx = [a, b, c, e];
                        let mut m = [0.0f64; 16];
                        for (col, &i) in idx.iter().enumerate() {
                            for row in 0..3 {
                                m[row * 4 + col] = others[i][row];
                            }
                            m[12 + col] = 1.0;
                        }
                        let rhs = [target[0], target[1], target[2], 1.0];
                        if let Some(lam) = solve4(m, rhs) {
                            if lam.iter().all(|l| *l >= -1e-9) {
                                return true;
                            }
                        }
                    }
                }
            }
        }
        false
    }

    #[test]
    fn interior_point_dropped_unit_square() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![0.5, 0.5],
        ];
        let p = convex_hull(&pts, 2).unwrap();
        assert_eq!(p.vertex_count(), 4);
        assert_eq!(p.effective_dim(), 2);
    }

    #[test]
    fn gaussian_points_in_4d_at_most_n_vertices() {
        let rng = CounterRng::new(4);
        for case in 0..20 {
            let pts = gaussian_points(&rng.derive(case), 0, 6, 4);
            let p = convex_hull(&pts, 4).unwrap();
            assert!(p.vertex_count() <= 6);
        }
    }

    #[test]
    fn extremeness_matches_separation_oracle() {
        let rng = CounterRng::new(12);
        for case in 0..10 {
            let pts = gaussian_points(&rng.derive(case), 0, 20, 3);
            let hull = convex_hull(&pts, 3).unwrap();
            let hull_set: Vec<&Vec<f64>> = hull.vertices().iter().collect();
            for (i, p) in pts.iter().enumerate() {
                let others: Vec<Vec<f64>> = pts
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, q)| q.clone())
                    .collect();
                let is_extreme_oracle = !in_hull_caratheodory(p, &others);
                let in_hull = hull_set.iter().any(|v| {
                    v.iter().zip(p).all(|(a, b)| (a - b).abs() < 1e-12)
                });
                assert_eq!(
                    in_hull, is_extreme_oracle,
                    "case {case} point {i}: oracle extreme {is_extreme_oracle}, hull {in_hull}"
                );
            }
        }
    }

    #[test]
    fn hull_idempotence() {
        let rng = CounterRng::new(31);
        for case in 0..10 {
            let pts = gaussian_points(&rng.derive(case), 0, 15, 3);
            let h1 = convex_hull(&pts, 3).unwrap();
            let h2 = convex_hull(h1.vertices(), 3).unwrap();
            assert_eq!(h1, h2);
        }
    }

    #[test]
    fn dim_guard() {
        let pts = vec![vec![0.0; 9]];
        assert!(matches!(
            convex_hull(&pts, 9),
            Err(Error::UnsupportedDimension(9))
        ));
    }

    #[test]
    fn orthogonal_segments_sum_to_unit_square() {
        let a = convex_hull(&[vec![0.0, 0.0], vec![1.0, 0.0]], 2).unwrap();
        let b = convex_hull(&[vec![0.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        let sum = minkowski_sum(&[a, b]).unwrap();
        assert_eq!(sum.vertex_count(), 4);
        assert_eq!(
            sum.vertices(),
            &[
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0]
            ]
        );
    }

    #[test]
    fn sum_with_point_translates() {
        let rng = CounterRng::new(8);
        let pts = gaussian_points(&rng, 0, 10, 3);
        let p = convex_hull(&pts, 3).unwrap();
        let t = convex_hull(&[vec![1.0, -2.0, 0.5]], 3).unwrap();
        let sum = minkowski_sum(&[p.clone(), t]).unwrap();
        assert_eq!(sum.vertex_count(), p.vertex_count());
        for (v, w) in sum.vertices().iter().zip(p.vertices()) {
            assert!((v[0] - (w[0] + 1.0)).abs() < 1e-12);
            assert!((v[1] - (w[1] - 2.0)).abs() < 1e-12);
            assert!((v[2] - (w[2] + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_part_sum_is_identity() {
        let rng = CounterRng::new(9);
        let pts = gaussian_points(&rng, 0, 12, 3);
        let p = convex_hull(&pts, 3).unwrap();
        assert_eq!(minkowski_sum(&[p.clone()]).unwrap(), p);
    }

    #[test]
    fn three_parts_match_all_points_oracle() {
        let rng = CounterRng::new(17);
        for case in 0..10 {
            let r = rng.derive(case);
            let parts: Vec<Polytope<f64>> = (0..3)
                .map(|h| {
                    let pts = gaussian_points(&r, h, 6, 3);
                    convex_hull(&pts, 3).unwrap()
                })
                .collect();
            let sum = minkowski_sum(&parts).unwrap();

            // Oracle: enumerate every pointwise sum of the raw vertex sets
            // (no per-part canonical form) and hull once.
            let mut all = Vec::new();
            for a in parts[0].vertices() {
                for b in parts[1].vertices() {
                    for c in parts[2].vertices() {
                        all.push(vec![a[0] + b[0] + c[0], a[1] + b[1] + c[1], a[2] + b[2] + c[2]]);
                    }
                }
            }
            let oracle = convex_hull(&all, 3).unwrap();
            assert_eq!(sum.vertex_count(), oracle.vertex_count());
            assert_eq!(sum, oracle);
            assert!(sum.vertex_count() <= 216);
        }
    }

    #[test]
    fn associativity_up_to_vertex_set() {
        let rng = CounterRng::new(23);
        for case in 0..10 {
            let r = rng.derive(case);
            let parts: Vec<Polytope<f64>> = (0..3)
                .map(|h| convex_hull(&gaussian_points(&r, h, 5, 3), 3).unwrap())
                .collect();
            let flat = minkowski_sum(&parts).unwrap();
            let ab = minkowski_sum(&parts[..2]).unwrap();
            let nested = minkowski_sum(&[ab, parts[2].clone()]).unwrap();
            assert_eq!(flat.vertex_count(), nested.vertex_count());
            for (v, w) in flat.vertices().iter().zip(nested.vertices()) {
                for (a, b) in v.iter().zip(w) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn sum_count_never_exceeds_bound_across_dims() {
        use crate::bounds::minkowski_vertex_upper_bound;
        use num_bigint::BigUint;
        let rng = CounterRng::new(6);
        for d in [2usize, 3, 4] {
            for h in 1u64..=3 {
                for n in 2u64..=7 {
                    // d = 4 runs the full 200 instances with the oracle in
                    // the acceptance suite; keep a lighter smoke load here.
                    let instances = if d == 4 { 50 } else { 200 };
                    let bound = minkowski_vertex_upper_bound(n, h, d as u64);
                    for trial in 0..instances {
                        let r = rng.derive(((d as u64) << 40) | (h << 20) | (n << 10) | trial);
                        let parts: Vec<Polytope<f64>> = (0..h)
                            .map(|hh| {
                                convex_hull(
                                    &gaussian_points(&r.derive(hh), 0, n as usize, d),
                                    d,
                                )
                                .unwrap()
                            })
                            .collect();
                        let f0 = minkowski_sum(&parts).unwrap().vertex_count();
                        assert!(
                            BigUint::from(f0) <= bound,
                            "f0 {f0} above {bound} at d={d} H={h} N={n}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn generic_position_generator_matches_oracle() {
        // The generator aims high but may not reach N^H; the hard claims
        // are oracle equality and the combinatorial bound.
        use crate::bounds::minkowski_vertex_upper_bound;
        use num_bigint::BigUint;
        for (n, h, d) in [(6usize, 3u64, 3usize), (5, 2, 3), (4, 2, 4)] {
            let parts = generic_position_parts::<f64>(n, h as usize, d, 99).unwrap();
            for p in &parts {
                assert_eq!(p.vertex_count(), n, "moment-curve points are all extreme");
            }
            let sum = minkowski_sum(&parts).unwrap();
            let mut all: Vec<Vec<f64>> = vec![vec![0.0; d]];
            for part in &parts {
                let mut next = Vec::new();
                for acc in &all {
                    for v in part.vertices() {
                        next.push(acc.iter().zip(v).map(|(a, b)| a + b).collect());
                    }
                }
                all = next;
            }
            let oracle = convex_hull(&all, d).unwrap();
            assert_eq!(sum, oracle);
            assert!(
                BigUint::from(sum.vertex_count()) <= minkowski_vertex_upper_bound(n as u64, h, d as u64)
            );
            assert!(sum.vertex_count() <= n.pow(h as u32));
        }
    }

    #[test]
    fn guard_rejects_oversized_sums() {
        // 500^3 = 1.25e8 > 1e7. Build fake polytopes via raw vertices on a
        // circle so each part genuinely has 500 vertices.
        let circle: Vec<Vec<f64>> = (0..500)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 500.0;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let p = convex_hull(&circle, 2).unwrap();
        assert_eq!(p.vertex_count(), 500);
        let e = minkowski_sum(&[p.clone(), p.clone(), p]);
        assert!(matches!(e, Err(Error::SumTooLarge)));
    }

    #[test]
    fn json_shape() {
        let p = convex_hull(&[vec![1.0, 0.0], vec![0.0, 1.0]], 2).unwrap();
        let j = serde_json::to_value(&p).unwrap();
        assert_eq!(j["dim"], 2);
        assert_eq!(j["vertices"][0][1], 1.0);
        assert_eq!(j["vertices"][1][0], 1.0);
    }

    #[test]
    fn f32_instantiation_smoke() {
        let pts: Vec<Vec<f32>> = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![0.5, 0.5],
        ];
        let p = convex_hull(&pts, 2).unwrap();
        assert_eq!(p.vertex_count(), 4);
    }
}
