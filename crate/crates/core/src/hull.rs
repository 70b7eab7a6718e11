//! General-dimension incremental QuickHull with strict degeneracy handling.
//!
//! Degeneracy is handled by tolerances rather than joggling, so vertex
//! counts are deterministic: a point counts as outside a facet only when its
//! signed distance exceeds `geom_tol` times the bounding-box diameter, and
//! affinely degenerate inputs are detected up front by a PCA-style rank test
//! (singular values below `rank_tol` relative to the largest are treated as
//! zero) and hulled inside their affine span.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::linalg::{dot, lex_cmp, norm, null_normal, Matrix};
use crate::linalg::jacobi_eigh;
use crate::scalar::Scalar;

pub(crate) struct HullOutput {
    /// Indices of extreme points, into the (deduplicated) input list.
    pub vertex_indices: Vec<usize>,
    /// Dimension of the affine hull of the input.
    pub effective_dim: usize,
}

/// Extreme points of `conv(points)`. Points must be finite, deduplicated,
/// and all of dimension `dim`.
pub(crate) fn extreme_points<S: Scalar>(points: &[Vec<S>], dim: usize) -> Result<HullOutput> {
    if points.is_empty() {
        return Err(Error::EmptyOperands);
    }
    if points.len() == 1 {
        return Ok(HullOutput {
            vertex_indices: vec![0],
            effective_dim: 0,
        });
    }

    // PCA rank detection: singular values of the centered point cloud.
    let n = points.len();
    let mut mean = vec![S::zero(); dim];
    for p in points {
        for (m, x) in mean.iter_mut().zip(p) {
            *m = *m + *x;
        }
    }
    let inv_n = S::one() / S::from_usize(n).unwrap();
    for m in mean.iter_mut() {
        *m = *m * inv_n;
    }
    let mut cov: Matrix<S> = Matrix::zeros(dim, dim);
    for p in points {
        let centered: Vec<S> = p.iter().zip(&mean).map(|(x, m)| *x - *m).collect();
        for i in 0..dim {
            for j in i..dim {
                let v = cov.get(i, j) + centered[i] * centered[j];
                cov.set(i, j, v);
                if i != j {
                    cov.set(j, i, v);
                }
            }
        }
    }
    let (eigvals, eigvecs) = jacobi_eigh(&cov);
    let sigma: Vec<S> = eigvals.iter().map(|l| l.max(S::zero()).sqrt()).collect();
    let sigma_max = sigma[0];
    if sigma_max <= S::zero() {
        return Ok(HullOutput {
            vertex_indices: vec![0],
            effective_dim: 0,
        });
    }
    let rank = sigma
        .iter()
        .take_while(|s| **s >= S::rank_tol() * sigma_max)
        .count();

    let mut coords: Vec<Vec<S>>;
    let mut k = rank;
    if rank == dim {
        coords = points.to_vec();
    } else {
        coords = points
            .iter()
            .map(|p| {
                let centered: Vec<S> = p.iter().zip(&mean).map(|(x, m)| *x - *m).collect();
                (0..rank).map(|r| dot(eigvecs.row(r), &centered)).collect()
            })
            .collect();
    }

    // The PCA threshold is tighter than the facet tolerance, so the greedy
    // simplex search below may still find a smaller affine rank; in that
    // case project onto the basis it found and retry.
    loop {
        match k {
            0 => {
                return Ok(HullOutput {
                    vertex_indices: vec![0],
                    effective_dim: 0,
                })
            }
            1 => {
                let mut lo = 0;
                let mut hi = 0;
                for (i, c) in coords.iter().enumerate() {
                    if c[0] < coords[lo][0] {
                        lo = i;
                    }
                    if c[0] > coords[hi][0] {
                        hi = i;
                    }
                }
                let mut idx = vec![lo, hi];
                idx.sort_unstable();
                idx.dedup();
                return Ok(HullOutput {
                    vertex_indices: idx,
                    effective_dim: 1,
                });
            }
            _ => {}
        }

        let tol = S::geom_tol() * bbox_diameter(&coords);
        match initial_simplex(&coords, k, tol) {
            SimplexSearch::Full(simplex) => {
                let verts = quickhull_core(&coords, k, tol, &simplex)?;
                return Ok(HullOutput {
                    vertex_indices: verts,
                    effective_dim: k,
                });
            }
            SimplexSearch::Deficient { base, basis } => {
                let m = basis.len();
                debug_assert!(m < k);
                let origin = coords[base].clone();
                coords = coords
                    .iter()
                    .map(|p| {
                        let r: Vec<S> = p.iter().zip(&origin).map(|(x, o)| *x - *o).collect();
                        basis.iter().map(|b| dot(b, &r)).collect()
                    })
                    .collect();
                k = m;
            }
        }
    }
}

fn bbox_diameter<S: Scalar>(points: &[Vec<S>]) -> S {
    let dim = points[0].len();
    let mut acc = S::zero();
    for a in 0..dim {
        let mut lo = S::infinity();
        let mut hi = S::neg_infinity();
        for p in points {
            lo = lo.min(p[a]);
            hi = hi.max(p[a]);
        }
        acc = acc + (hi - lo) * (hi - lo);
    }
    acc.sqrt()
}

enum SimplexSearch<S> {
    Full(Vec<usize>),
    Deficient { base: usize, basis: Vec<Vec<S>> },
}

/// Greedy affinely independent point selection: start at the lexicographic
/// minimum, then repeatedly take the point farthest from the current affine
/// span (ties broken toward the lexicographically larger point, which is
/// always extreme among the tied set).
fn initial_simplex<S: Scalar>(coords: &[Vec<S>], k: usize, tol: S) -> SimplexSearch<S> {
    let mut base = 0;
    for (i, p) in coords.iter().enumerate().skip(1) {
        if lex_cmp(p, &coords[base]) == std::cmp::Ordering::Less {
            base = i;
        }
    }
    let mut chosen = vec![base];
    let mut basis: Vec<Vec<S>> = Vec::with_capacity(k);

    for _ in 0..k {
        let mut best: Option<(S, usize)> = None;
        for (i, p) in coords.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let r = residual(p, &coords[base], &basis);
            let d = norm(&r);
            best = match best {
                None => Some((d, i)),
                Some((bd, bi)) => {
                    let take = d > bd
                        || (d == bd && lex_cmp(p, &coords[bi]) == std::cmp::Ordering::Greater);
                    if take {
                        Some((d, i))
                    } else {
                        Some((bd, bi))
                    }
                }
            };
        }
        match best {
            Some((d, i)) if d > tol => {
                let mut r = residual(&coords[i], &coords[base], &basis);
                // Re-orthogonalize once for numerical hygiene.
                r = residual_of(&r, &basis);
                let len = norm(&r);
                for x in r.iter_mut() {
                    *x = *x / len;
                }
                basis.push(r);
                chosen.push(i);
            }
            _ => return SimplexSearch::Deficient { base, basis },
        }
    }
    SimplexSearch::Full(chosen)
}

fn residual<S: Scalar>(p: &[S], origin: &[S], basis: &[Vec<S>]) -> Vec<S> {
    let r: Vec<S> = p.iter().zip(origin).map(|(x, o)| *x - *o).collect();
    residual_of(&r, basis)
}

fn residual_of<S: Scalar>(r: &[S], basis: &[Vec<S>]) -> Vec<S> {
    let mut out = r.to_vec();
    for b in basis {
        let proj = dot(&out, b);
        for (o, bb) in out.iter_mut().zip(b) {
            *o = *o - proj * *bb;
        }
    }
    out
}

struct Facet<S> {
    verts: Vec<usize>,
    normal: Vec<S>,
    offset: S,
    outside: Vec<usize>,
    /// neighbors[i] is the facet across the ridge omitting verts[i].
    neighbors: Vec<usize>,
    alive: bool,
}

impl<S: Scalar> Facet<S> {
    #[inline]
    fn dist(&self, p: &[S]) -> S {
        dot(&self.normal, p) - self.offset
    }
}

fn facet_plane<S: Scalar>(
    coords: &[Vec<S>],
    verts: &[usize],
    interior: &[S],
) -> Result<(Vec<S>, S)> {
    let k = verts.len();
    let base = &coords[verts[0]];
    let edges: Vec<Vec<S>> = verts[1..]
        .iter()
        .map(|&v| coords[v].iter().zip(base).map(|(x, b)| *x - *b).collect())
        .collect();
    let mut normal = null_normal(&edges, k);
    let len = norm(&normal);
    if !(len.is_finite() && len > S::zero()) {
        return Err(Error::Internal("degenerate facet normal"));
    }
    for x in normal.iter_mut() {
        *x = *x / len;
    }
    let mut offset = S::zero();
    for &v in verts {
        offset = offset + dot(&normal, &coords[v]);
    }
    offset = offset / S::from_usize(k).unwrap();
    if dot(&normal, interior) - offset > S::zero() {
        for x in normal.iter_mut() {
            *x = -*x;
        }
        offset = -offset;
    }
    Ok((normal, offset))
}

fn sorted_ridge(verts: &[usize], omit: usize) -> Vec<usize> {
    let mut r: Vec<usize> = verts
        .iter()
        .enumerate()
        .filter(|(p, _)| *p != omit)
        .map(|(_, &v)| v)
        .collect();
    r.sort_unstable();
    r
}

fn quickhull_core<S: Scalar>(
    coords: &[Vec<S>],
    k: usize,
    tol: S,
    simplex: &[usize],
) -> Result<Vec<usize>> {
    debug_assert_eq!(simplex.len(), k + 1);
    let inv = S::one() / S::from_usize(k + 1).unwrap();
    let mut interior = vec![S::zero(); k];
    for &v in simplex {
        for (c, x) in interior.iter_mut().zip(&coords[v]) {
            *c = *c + *x * inv;
        }
    }

    let mut facets: Vec<Facet<S>> = Vec::new();
    for omit in 0..=k {
        let verts: Vec<usize> = simplex
            .iter()
            .enumerate()
            .filter(|(p, _)| *p != omit)
            .map(|(_, &v)| v)
            .collect();
        let (normal, offset) = facet_plane(coords, &verts, &interior)?;
        // Initial neighbor wiring: the ridge omitting verts[p] (which is
        // simplex vertex m) is shared with the facet that omits m.
        let neighbors: Vec<usize> = verts
            .iter()
            .map(|v| simplex.iter().position(|s| s == v).unwrap())
            .collect();
        facets.push(Facet {
            verts,
            normal,
            offset,
            outside: Vec::new(),
            neighbors,
            alive: true,
        });
    }

    let in_simplex: BTreeSet<usize> = simplex.iter().copied().collect();
    for i in 0..coords.len() {
        if in_simplex.contains(&i) {
            continue;
        }
        for f in facets.iter_mut() {
            if f.dist(&coords[i]) > tol {
                f.outside.push(i);
                break;
            }
        }
    }

    let mut worklist: Vec<usize> = (0..facets.len())
        .filter(|&f| !facets[f].outside.is_empty())
        .collect();
    let max_steps = 64 * coords.len() * (k + 1) + 4096;
    let mut steps = 0usize;

    while let Some(fid) = worklist.pop() {
        if !facets[fid].alive || facets[fid].outside.is_empty() {
            continue;
        }
        steps += 1;
        if steps > max_steps {
            return Err(Error::Internal("quickhull failed to terminate"));
        }

        // Furthest outside point; ties toward the lexicographically larger
        // point so exact ties on structured inputs still pick an extreme one.
        let apex = {
            let f = &facets[fid];
            let mut best = f.outside[0];
            let mut best_d = f.dist(&coords[best]);
            for &i in &f.outside[1..] {
                let d = f.dist(&coords[i]);
                if d > best_d
                    || (d == best_d && lex_cmp(&coords[i], &coords[best]) == std::cmp::Ordering::Greater)
                {
                    best = i;
                    best_d = d;
                }
            }
            best
        };
        let apex_point = coords[apex].clone();

        // Visible set by breadth-first search across neighbors.
        let mut visible = vec![fid];
        let mut seen = vec![false; facets.len()];
        seen[fid] = true;
        let mut queue = vec![fid];
        // (visible facet, position of omitted vertex, invisible neighbor)
        let mut horizon: Vec<(usize, usize, usize)> = Vec::new();
        while let Some(g) = queue.pop() {
            for pos in 0..facets[g].neighbors.len() {
                let nb = facets[g].neighbors[pos];
                if seen[nb] {
                    if !facets[nb].alive {
                        return Err(Error::Internal("dead neighbor in hull graph"));
                    }
                    continue;
                }
                if facets[nb].dist(&apex_point) > tol {
                    seen[nb] = true;
                    visible.push(nb);
                    queue.push(nb);
                } else {
                    horizon.push((g, pos, nb));
                }
            }
        }
        // Deduplicate: a ridge appears once per (visible, pos) pair, but the
        // same invisible neighbor may border several visible facets; each
        // (g, pos) is a distinct ridge already. Mark visibles seen only once.
        let mut candidates: Vec<usize> = Vec::new();
        for &g in &visible {
            for &p in &facets[g].outside {
                if p != apex {
                    candidates.push(p);
                }
            }
        }
        candidates.sort_unstable();
        candidates.dedup();

        let mut new_ids: Vec<usize> = Vec::new();
        let mut ridge_map: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
        for &(g, pos, nb) in &horizon {
            let mut verts: Vec<usize> = facets[g]
                .verts
                .iter()
                .enumerate()
                .filter(|(p, _)| *p != pos)
                .map(|(_, &v)| v)
                .collect();
            let ridge_sorted = {
                let mut r = verts.clone();
                r.sort_unstable();
                r
            };
            verts.push(apex);
            let (normal, offset) = facet_plane(coords, &verts, &interior)?;
            let id = facets.len();
            let kk = verts.len();
            let mut neighbors = vec![usize::MAX; kk];
            // The ridge omitting the apex (last position) borders nb.
            neighbors[kk - 1] = nb;
            facets.push(Facet {
                verts,
                normal,
                offset,
                outside: Vec::new(),
                neighbors,
                alive: true,
            });
            // Rewire nb's neighbor slot that used to point at g.
            let nbpos = (0..facets[nb].verts.len())
                .find(|&p| sorted_ridge(&facets[nb].verts, p) == ridge_sorted)
                .ok_or(Error::Internal("horizon ridge not found in neighbor"))?;
            facets[nb].neighbors[nbpos] = id;
            new_ids.push(id);
        }

        // Wire the new facets among themselves: ridges omitting one ridge
        // vertex (and containing the apex) are shared between new facets.
        for &id in &new_ids {
            for pos in 0..k - 1 {
                let key = sorted_ridge(&facets[id].verts, pos);
                match ridge_map.get(&key) {
                    Some(&(other, opos)) => {
                        facets[id].neighbors[pos] = other;
                        facets[other].neighbors[opos] = id;
                    }
                    None => {
                        ridge_map.insert(key, (id, pos));
                    }
                }
            }
        }
        for &id in &new_ids {
            if facets[id].neighbors.iter().any(|&n| n == usize::MAX) {
                return Err(Error::Internal("open ridge after horizon rebuild"));
            }
        }

        for &g in &visible {
            facets[g].alive = false;
            facets[g].outside.clear();
        }
        for p in candidates {
            for &id in &new_ids {
                if facets[id].dist(&coords[p]) > tol {
                    facets[id].outside.push(p);
                    break;
                }
            }
        }
        for &id in &new_ids {
            if !facets[id].outside.is_empty() {
                worklist.push(id);
            }
        }
    }

    let mut verts: BTreeSet<usize> = BTreeSet::new();
    for f in facets.iter().filter(|f| f.alive) {
        verts.extend(f.verts.iter().copied());
    }
    Ok(verts.into_iter().collect())
}
