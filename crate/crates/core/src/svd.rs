//! Thin singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! Small dense matrices only; the rotations orthogonalize columns until every
//! pair is orthogonal to machine precision, which gives singular values with
//! high relative accuracy.

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct Svd {
    /// Left singular vectors, one `Vec` of length `m` per singular value.
    pub u: Vec<Vec<f64>>,
    /// Singular values, non-increasing.
    pub s: Vec<f64>,
    /// Right singular vectors, one `Vec` of length `n` per singular value.
    pub v: Vec<Vec<f64>>,
}

/// SVD of a row-major `m × n` matrix; returns `min(m, n)` triplets.
pub fn svd(a: &[Vec<f64>]) -> Svd {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    if m >= n {
        let cols: Vec<Vec<f64>> = (0..n).map(|j| a.iter().map(|r| r[j]).collect()).collect();
        jacobi(cols, m)
    } else {
        let t = jacobi(a.to_vec(), n);
        Svd { u: t.v, s: t.s, v: t.u }
    }
}

/// `cols` are the `k` columns (each of length `len`) of a tall matrix.
fn jacobi(mut cols: Vec<Vec<f64>>, len: usize) -> Svd {
    let k = cols.len();
    let mut v: Vec<Vec<f64>> = (0..k).map(|j| (0..k).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..len {
                    alpha += cols[p][i] * cols[p][i];
                    beta += cols[q][i] * cols[q][i];
                    gamma += cols[p][i] * cols[q][i];
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut triplets: Vec<(f64, Vec<f64>, Vec<f64>)> = cols
        .into_iter()
        .zip(v)
        .map(|(col, vcol)| {
            let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
            let ucol = if norm > 0.0 { col.iter().map(|x| x / norm).collect() } else { col };
            (norm, ucol, vcol)
        })
        .collect();
    triplets.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out = Svd { u: Vec::with_capacity(k), s: Vec::with_capacity(k), v: Vec::with_capacity(k) };
    for (s, u, v) in triplets {
        out.s.push(s);
        out.u.push(u);
        out.v.push(v);
    }
    out
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn reconstruct(d: &Svd, m: usize, n: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; n]; m];
        for k in 0..d.s.len() {
            for i in 0..m {
                for j in 0..n {
                    out[i][j] += d.u[k][i] * d.s[k] * d.v[k][j];
                }
            }
        }
        out
    }

    proptest! {
        #[test]
        fn matches_nalgebra_and_reconstructs(
            m in 1usize..8, n in 1usize..12, seed in prop::collection::vec(-5.0f64..5.0, 96)
        ) {
            let a: Vec<Vec<f64>> = (0..m).map(|i| (0..n).map(|j| seed[(i * n + j) % seed.len()] * (1.0 + i as f64)).collect()).collect();
            let d = svd(&a);
            prop_assert_eq!(d.s.len(), m.min(n));
            let r = reconstruct(&d, m, n);
            for i in 0..m { for j in 0..n { prop_assert!((r[i][j] - a[i][j]).abs() < 1e-10); } }
            let oracle = DMatrix::from_fn(m, n, |i, j| a[i][j]).svd(false, false);
            let mut sv: Vec<f64> = oracle.singular_values.iter().copied().collect();
            sv.sort_by(|x, y| y.total_cmp(x));
            for (x, y) in d.s.iter().zip(&sv) { prop_assert!((x - y).abs() < 1e-9 * (1.0 + y)); }
            for k in 0..d.s.len() {
                if d.s[k] > 1e-8 {
                    let nu: f64 = d.u[k].iter().map(|x| x * x).sum();
                    let nv: f64 = d.v[k].iter().map(|x| x * x).sum();
                    prop_assert!((nu - 1.0).abs() < 1e-10 && (nv - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rank_one() {
        let a = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]];
        let d = svd(&a);
        assert!((d.s[0] - (70.0f64).sqrt()).abs() < 1e-12);
        assert!(d.s[1].abs() < 1e-12);
    }
}
