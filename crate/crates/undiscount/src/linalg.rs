//! Solvers for the transient systems `(I - A) v = b` with `A` nonnegative
//! and spectral radius below one.
//!
//! Direct elimination handles systems up to [`DIRECT_LIMIT`] unknowns; larger
//! systems fall back to summing the Neumann series, which converges exactly
//! for the transient kernels this crate produces.

use thiserror::Error;

/// Largest system solved by dense elimination.
pub(crate) const DIRECT_LIMIT: usize = 2000;

const NEUMANN_MAX_SWEEPS: usize = 2_000_000;
const NEUMANN_TOL: f64 = 1e-14;
const NEUMANN_CAP: f64 = 1e150;

#[derive(Debug, Error)]
pub(crate) enum LinalgError {
    #[error("singular system (pivot {pivot:.3e} at column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("iterative solve did not converge within {0} sweeps")]
    NotConverged(usize),
    #[error("iterates diverged; the system is not transient")]
    Diverged,
}

/// Solves `(I - A) v = b` where row `x` of `A` is the sparse row `rows[x]`.
pub(crate) fn solve_i_minus(
    rows: &[&[(usize, f64)]],
    b: &[f64],
) -> Result<Vec<f64>, LinalgError> {
    assert_eq!(rows.len(), b.len(), "system dimension mismatch");
    if rows.len() <= DIRECT_LIMIT {
        solve_direct(rows, b)
    } else {
        solve_neumann(rows, b)
    }
}

/// Dense LU with partial pivoting on the assembled `I - A`.
pub(crate) fn solve_direct(
    rows: &[&[(usize, f64)]],
    b: &[f64],
) -> Result<Vec<f64>, LinalgError> {
    let n = rows.len();
    let mut mat = vec![0.0_f64; n * n];
    let mut scale = 1.0_f64;
    for (x, row) in rows.iter().enumerate() {
        mat[x * n + x] = 1.0;
        for &(target, mass) in row.iter() {
            mat[x * n + target] -= mass;
            scale = scale.max(mass.abs());
        }
    }
    let mut rhs = b.to_vec();
    let pivot_floor = f64::EPSILON * scale * n as f64;

    for col in 0..n {
        let mut best = col;
        let mut best_abs = mat[col * n + col].abs();
        for r in col + 1..n {
            let v = mat[r * n + col].abs();
            if v > best_abs {
                best = r;
                best_abs = v;
            }
        }
        if best_abs <= pivot_floor {
            return Err(LinalgError::Singular { col, pivot: best_abs });
        }
        if best != col {
            for k in 0..n {
                mat.swap(col * n + k, best * n + k);
            }
            rhs.swap(col, best);
        }
        let pivot = mat[col * n + col];
        for r in col + 1..n {
            let factor = mat[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            mat[r * n + col] = 0.0;
            for k in col + 1..n {
                mat[r * n + k] -= factor * mat[col * n + k];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    for col in (0..n).rev() {
        let mut v = rhs[col];
        for k in col + 1..n {
            v -= mat[col * n + k] * rhs[k];
        }
        rhs[col] = v / mat[col * n + col];
    }
    Ok(rhs)
}

/// Sums the Neumann series `Σ_k A^k b` by repeated application.
pub(crate) fn solve_neumann(
    rows: &[&[(usize, f64)]],
    b: &[f64],
) -> Result<Vec<f64>, LinalgError> {
    let n = rows.len();
    let mut v = b.to_vec();
    let mut term = b.to_vec();
    for _ in 0..NEUMANN_MAX_SWEEPS {
        let mut next = vec![0.0_f64; n];
        for (x, row) in rows.iter().enumerate() {
            next[x] = crate::mdp::weighted_row_sum(row, &term, None);
        }
        let term_norm = next.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        let v_norm = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        if !term_norm.is_finite() || term_norm > NEUMANN_CAP {
            return Err(LinalgError::Diverged);
        }
        for x in 0..n {
            v[x] += next[x];
        }
        if term_norm <= NEUMANN_TOL * (1.0 + v_norm) {
            return Ok(v);
        }
        term = next;
    }
    Err(LinalgError::NotConverged(NEUMANN_MAX_SWEEPS))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_solves_fix_a_system() {
        // (I - Q) v = c for the two-state chain with masses 0.5 and 0.4.
        let r0: &[(usize, f64)] = &[(1, 0.5)];
        let r1: &[(usize, f64)] = &[(1, 0.4)];
        let v = solve_direct(&[r0, r1], &[1.0, 2.0]).unwrap();
        assert!((v[0] - 8.0 / 3.0).abs() < 1e-14);
        assert!((v[1] - 10.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn direct_detects_singular() {
        let r0: &[(usize, f64)] = &[(0, 1.0)];
        let err = solve_direct(&[r0], &[1.0]).unwrap_err();
        assert!(matches!(err, LinalgError::Singular { .. }));
    }

    #[test]
    fn neumann_agrees_with_direct() {
        let rows: Vec<&[(usize, f64)]> = vec![
            &[(1, 0.3), (2, 0.4)],
            &[(0, 0.2), (2, 0.5)],
            &[(0, 0.1)],
        ];
        let b = [1.0, 2.0, 3.0];
        let direct = solve_direct(&rows, &b).unwrap();
        let neumann = solve_neumann(&rows, &b).unwrap();
        for (d, n) in direct.iter().zip(neumann.iter()) {
            assert!((d - n).abs() < 1e-10, "direct {d} vs neumann {n}");
        }
    }

    #[test]
    fn neumann_detects_divergence() {
        let r0: &[(usize, f64)] = &[(0, 1.5)];
        let err = solve_neumann(&[r0], &[1.0]).unwrap_err();
        assert!(matches!(err, LinalgError::Diverged));
    }
}
