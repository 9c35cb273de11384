//! Small dense helpers used inside per-point loops.

use nalgebra::DMatrix;

/// Determinant of a `k×k` row-major matrix (k ≤ 8) by partial-pivot elimination.
pub(crate) fn det_small(a: &[f64], k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => {
            let mut m = [0.0f64; 64];
            m[..k * k].copy_from_slice(&a[..k * k]);
            let mut det = 1.0;
            for c in 0..k {
                let mut piv = c;
                for r in c + 1..k {
                    if m[r * k + c].abs() > m[piv * k + c].abs() {
                        piv = r;
                    }
                }
                if m[piv * k + c] == 0.0 {
                    return 0.0;
                }
                if piv != c {
                    for j in 0..k {
                        m.swap(c * k + j, piv * k + j);
                    }
                    det = -det;
                }
                let p = m[c * k + c];
                det *= p;
                for r in c + 1..k {
                    let f = m[r * k + c] / p;
                    for j in c..k {
                        m[r * k + j] -= f * m[c * k + j];
                    }
                }
            }
            det
        }
    }
}

/// Orthonormalizes the columns of a row-major `n×k` matrix in place
/// (modified Gram–Schmidt, two passes). Returns false on rank deficiency.
pub(crate) fn orthonormalize_columns(v: &mut [f64], n: usize, k: usize) -> bool {
    for _pass in 0..2 {
        for c in 0..k {
            for prev in 0..c {
                let dot: f64 = (0..n).map(|i| v[i * k + c] * v[i * k + prev]).sum();
                for i in 0..n {
                    v[i * k + c] -= dot * v[i * k + prev];
                }
            }
            let norm: f64 = (0..n).map(|i| v[i * k + c].powi(2)).sum::<f64>().sqrt();
            if !(norm > 1e-300) {
                return false;
            }
            for i in 0..n {
                v[i * k + c] /= norm;
            }
        }
    }
    true
}

/// Largest singular value of a row-major `m×n` matrix.
pub(crate) fn operator_norm(a: &[f64], m: usize, n: usize) -> f64 {
    if m == 0 || n == 0 {
        return 0.0;
    }
    if n == 1 {
        return a.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    // Gram matrix AᵀA (n×n)
    let mut g = [0.0f64; 64];
    let use_stack = n <= 8;
    let mut heap;
    let gram: &mut [f64] = if use_stack {
        &mut g[..n * n]
    } else {
        heap = vec![0.0; n * n];
        &mut heap
    };
    for i in 0..n {
        for j in i..n {
            let s: f64 = (0..m).map(|r| a[r * n + i] * a[r * n + j]).sum();
            gram[i * n + j] = s;
            gram[j * n + i] = s;
        }
    }
    if n == 2 {
        let (p, q, r) = (gram[0], gram[1], gram[3]);
        let tr = 0.5 * (p + r);
        let disc = (0.25 * (p - r) * (p - r) + q * q).sqrt();
        return (tr + disc).max(0.0).sqrt();
    }
    let mat = DMatrix::from_row_slice(n, n, gram);
    let eig = nalgebra::SymmetricEigen::new(mat);
    eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max).sqrt()
}
