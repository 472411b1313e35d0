//! Exact samplers: the chain-rule projection DPP sampler and Aldous–Broder.

use rand::Rng;

use crate::error::{Error, Result};
use crate::models::Graph;
use crate::numerics::{Basis, ProjectionKernel};
use crate::scalar::Scalar;

/// Draws one sample of the projection DPP with kernel `K`.
///
/// Items are picked one at a time with probability proportional to the
/// conditional variance `K_ii − K_{i,I} K_I⁻¹ K_{I,i}`, maintained through an
/// incremental Cholesky factor of `K_I`. Costs `O(n r²)`.
pub fn exact_projection_dpp<T: Scalar, R: Rng + ?Sized>(
    k: &ProjectionKernel<T>,
    rng: &mut R,
) -> Result<Basis> {
    let n = k.size();
    let r = k.rank();
    let breakdown = T::from_f64_lossy(-1e-8);
    let mut cond: Vec<T> = (0..n).map(|i| k.get(i, i)).collect();
    let mut factors: Vec<Vec<T>> = Vec::with_capacity(r);
    let mut chosen = Vec::with_capacity(r);
    for _ in 0..r {
        for (i, c) in cond.iter_mut().enumerate() {
            if *c < breakdown {
                return Err(Error::Numerical(format!(
                    "negative conditional mass {c} at item {i}"
                )));
            }
            if *c < T::zero() {
                *c = T::zero();
            }
        }
        let total: f64 = cond.iter().map(|c| c.to_f64_lossy()).sum();
        if !(total > 0.0) {
            return Err(Error::Numerical("no conditional mass left".into()));
        }
        let mut ticket = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, c) in cond.iter().enumerate() {
            let c = c.to_f64_lossy();
            if c <= 0.0 {
                continue;
            }
            pick = Some(i);
            if ticket < c {
                break;
            }
            ticket -= c;
        }
        let pick = pick.expect("positive total mass");
        let pivot = cond[pick].sqrt();
        let v: Vec<T> = (0..n)
            .map(|j| {
                let s = factors
                    .iter()
                    .fold(k.get(j, pick), |acc, f| acc - f[j] * f[pick]);
                s / pivot
            })
            .collect();
        for (c, &vj) in cond.iter_mut().zip(&v) {
            *c -= vj * vj;
        }
        cond[pick] = T::zero();
        factors.push(v);
        chosen.push(pick);
    }
    Ok(Basis::from_indices(chosen))
}

/// Uniform spanning tree by the Aldous–Broder random walk, started at vertex 0.
///
/// Returns the tree as the set of edge indices. Ignores edge weights.
pub fn aldous_broder<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Result<Basis> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let adj = g.adjacency();
    let mut visited = vec![false; g.vertices()];
    let mut remaining = g.vertices() - 1;
    let mut tree = Vec::with_capacity(remaining);
    let mut at = 0;
    visited[at] = true;
    while remaining > 0 {
        let (next, edge) = adj[at][rng.random_range(0..adj[at].len())];
        if !visited[next] {
            visited[next] = true;
            tree.push(edge);
            remaining -= 1;
        }
        at = next;
    }
    Ok(Basis::from_indices(tree))
}
