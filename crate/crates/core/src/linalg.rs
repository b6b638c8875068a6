//! Tiny dense linear algebra for the d x d (d = 2 or 3 in practice)
//! second-moment matrices. Row-major storage.

/// Cholesky factorization of a symmetric positive definite matrix.
///
/// Returns the lower-triangular factor L with A = L L^T, or `None` when a
/// pivot falls below `tol` times the matrix scale (A is not numerically PD).
pub fn cholesky(dim: usize, a: &[f64], tol: f64) -> Option<Vec<f64>> {
    assert_eq!(a.len(), dim * dim);
    let scale = a
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()))
        .max(1.0);
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = a[i * dim + j];
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if s <= tol * scale {
                    return None;
                }
                l[i * dim + i] = s.sqrt();
            } else {
                l[i * dim + j] = s / l[j * dim + j];
            }
        }
    }
    Some(l)
}

/// y = L x for lower-triangular L.
pub fn lower_tri_mul(dim: usize, l: &[f64], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; dim];
    for i in 0..dim {
        let mut s = 0.0;
        for j in 0..=i {
            s += l[i * dim + j] * x[j];
        }
        y[i] = s;
    }
    y
}
