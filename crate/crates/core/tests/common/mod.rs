//! Brute-force reference computations shared by the integration tests. They
//! deliberately avoid the library's linear algebra.

#![allow(dead_code)]

use zonodpp::models::{incidence_feature_matrix, Graph};
use zonodpp::FeatureMatrix64;

pub const FIG1: [[f64; 4]; 2] = [[1.0, 2.0, 0.0, -1.0], [0.0, 1.0, 2.0, 1.0]];

pub fn fig1() -> FeatureMatrix64 {
    FeatureMatrix64::from_rows(&FIG1).unwrap()
}

pub fn k5() -> FeatureMatrix64 {
    incidence_feature_matrix(&Graph::complete(5).unwrap()).unwrap()
}

pub fn rows_of(a: &FeatureMatrix64) -> Vec<Vec<f64>> {
    (0..a.rank())
        .map(|i| (0..a.len()).map(|j| a.column(j)[i]).collect())
        .collect()
}

/// Determinant by cofactor expansion along the first row.
pub fn laplace_det(m: &[Vec<f64>]) -> f64 {
    let k = m.len();
    if k == 0 {
        return 1.0;
    }
    if k == 1 {
        return m[0][0];
    }
    let mut total = 0.0;
    for j in 0..k {
        if m[0][j] == 0.0 {
            continue;
        }
        let minor: Vec<Vec<f64>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != j)
                    .map(|(_, v)| *v)
                    .collect()
            })
            .collect();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * m[0][j] * laplace_det(&minor);
    }
    total
}

pub fn submatrix(rows: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| cols.iter().map(|&c| r[c]).collect())
        .collect()
}

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// `(basis, probability)` for the law `∝ det²(A_B) Π_B w`.
pub fn brute_law(rows: &[Vec<f64>], weights: Option<&[f64]>) -> Vec<(Vec<usize>, f64)> {
    let r = rows.len();
    let n = rows[0].len();
    let mut out = Vec::new();
    for s in subsets(n, r) {
        let d = laplace_det(&submatrix(rows, &s));
        if d.abs() < 1e-9 {
            continue;
        }
        let w: f64 = weights.map_or(1.0, |w| s.iter().map(|&i| w[i]).product());
        out.push((s, d * d * w));
    }
    let z: f64 = out.iter().map(|(_, w)| w).sum();
    out.into_iter().map(|(s, w)| (s, w / z)).collect()
}

/// Solves `m y = b` by Gauss–Jordan with partial pivoting; `None` if singular.
pub fn gauss_solve(m: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let k = m.len();
    let mut aug: Vec<Vec<f64>> = m
        .iter()
        .zip(b)
        .map(|(r, &v)| {
            let mut r = r.clone();
            r.push(v);
            r
        })
        .collect();
    for col in 0..k {
        let p = (col..k).max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))?;
        if aug[p][col].abs() < 1e-10 {
            return None;
        }
        aug.swap(col, p);
        for i in 0..k {
            if i != col {
                let f = aug[i][col] / aug[col][col];
                for c in col..=k {
                    aug[i][c] -= f * aug[col][c];
                }
            }
        }
    }
    Some((0..k).map(|i| aug[i][k] / aug[i][i]).collect())
}

/// Minimum of `cᵀy` over `{Ay = x, 0 ≤ y ≤ 1}` by enumerating every vertex:
/// each choice of basis and 0/1 values for the remaining coordinates.
/// `None` when infeasible.
pub fn brute_box_lp(rows: &[Vec<f64>], c: &[f64], x: &[f64]) -> Option<f64> {
    let r = rows.len();
    let n = c.len();
    let mut best: Option<f64> = None;
    for b in subsets(n, r) {
        let ab = submatrix(rows, &b);
        let nonbasic: Vec<usize> = (0..n).filter(|j| !b.contains(j)).collect();
        for mask in 0u32..(1 << nonbasic.len()) {
            let mut y = vec![0.0; n];
            for (k, &j) in nonbasic.iter().enumerate() {
                y[j] = f64::from((mask >> k) & 1);
            }
            let rhs: Vec<f64> = (0..r)
                .map(|i| x[i] - nonbasic.iter().map(|&j| rows[i][j] * y[j]).sum::<f64>())
                .collect();
            let Some(yb) = gauss_solve(&ab, &rhs) else {
                continue;
            };
            if yb.iter().any(|&v| !(-1e-9..=1.0 + 1e-9).contains(&v)) {
                continue;
            }
            for (k, &j) in b.iter().enumerate() {
                y[j] = yb[k];
            }
            let obj: f64 = c.iter().zip(&y).map(|(a, b)| a * b).sum();
            best = Some(best.map_or(obj, |v: f64| v.min(obj)));
        }
    }
    best
}

/// Total-variation distance between a frequency table and a brute-force law.
pub fn tv_against(
    freq: &std::collections::HashMap<Vec<usize>, f64>,
    law: &[(Vec<usize>, f64)],
) -> f64 {
    let mut tv = 0.0;
    for (s, p) in law {
        tv += (freq.get(s).copied().unwrap_or(0.0) - p).abs();
    }
    let outside: f64 = freq
        .iter()
        .filter(|(s, _)| !law.iter().any(|(t, _)| t == *s))
        .map(|(_, v)| v)
        .sum();
    0.5 * (tv + outside)
}
