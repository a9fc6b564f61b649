//! Dense square solves for the small systems that appear in multi-dimensional steps.

/// Relative pivot threshold: a pivot below this times the max row norm is singular.
pub const SINGULAR_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular;

/// Row-major `n × n` matrix times vector.
pub fn mat_vec(m: &[f64], n: usize, v: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| (0..n).map(|j| m[i * n + j] * v[j]).sum())
        .collect()
}

/// Max absolute row sum.
pub fn inf_norm(m: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|i| m[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `m x = b` by Gaussian elimination with partial pivoting.
pub fn solve(m: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>, Singular> {
    let tol = SINGULAR_RTOL * inf_norm(m, n);
    let mut a = m.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
            .expect("non-empty range");
        let p = a[piv * n + col];
        if p == 0.0 || p.abs() < tol {
            return Err(Singular);
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            x.swap(piv, col);
        }
        for r in col + 1..n {
            let factor = a[r * n + col] / p;
            if factor != 0.0 {
                for k in col..n {
                    a[r * n + k] -= factor * a[col * n + k];
                }
                x[r] -= factor * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let tail: f64 = (col + 1..n).map(|k| a[col * n + k] * x[k]).sum();
        x[col] = (x[col] - tail) / a[col * n + col];
    }
    Ok(x)
}

/// `m^k v`; negative `k` applies `|k|` successive solves.
pub fn mat_pow_vec(m: &[f64], n: usize, k: i32, v: &[f64]) -> Result<Vec<f64>, Singular> {
    let mut out = v.to_vec();
    for _ in 0..k.unsigned_abs() {
        out = if k > 0 { mat_vec(m, n, &out) } else { solve(m, n, &out)? };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn solves_with_pivoting() {
        let m = [0.0, 1.0, 2.0, 3.0];
        let x = solve(&m, 2, &[4.0, 13.0]).unwrap();
        assert_eq!(x, vec![0.5, 4.0]);
    }

    #[test]
    fn singular_detected() {
        assert_eq!(solve(&[1.0, 2.0, 2.0, 4.0], 2, &[1.0, 1.0]), Err(Singular));
        assert_eq!(solve(&[0.0; 4], 2, &[1.0, 1.0]), Err(Singular));
        assert_eq!(solve(&[0.0], 1, &[1.0]), Err(Singular));
    }

    #[test]
    fn zero_power_is_identity() {
        let v = [3.0, -2.0];
        assert_eq!(mat_pow_vec(&[0.0; 4], 2, 0, &v).unwrap(), v.to_vec());
    }

    proptest! {
        #[test]
        fn inverse_round_trip(a in 1.0f64..10.0, b in -1.0f64..1.0, d in 1.0f64..10.0,
                              v0 in -5.0f64..5.0, v1 in -5.0f64..5.0) {
            // Symmetric, diagonally dominant: well conditioned.
            let m = [a + 2.0, b, b, d + 2.0];
            let v = [v0, v1];
            let hv = mat_pow_vec(&m, 2, 1, &v).unwrap();
            let back = mat_pow_vec(&m, 2, -1, &hv).unwrap();
            let scale = v0.abs().max(v1.abs()).max(1e-300);
            for i in 0..2 {
                prop_assert!((back[i] - v[i]).abs() <= 1e-9 * scale);
            }
            let h2 = mat_pow_vec(&m, 2, 2, &v).unwrap();
            let back2 = mat_pow_vec(&m, 2, -2, &h2).unwrap();
            for i in 0..2 {
                prop_assert!((back2[i] - v[i]).abs() <= 1e-9 * scale);
            }
        }
    }
}
