//! Thomas algorithm for tridiagonal systems.

/// Solves `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]` in place
/// of `rhs`. `sub[0]` and `sup[n-1]` are ignored.
///
/// No pivoting: the matrices assembled by the solvers are strictly
/// diagonally dominant.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64], scratch: &mut Vec<f64>) {
    let n = diag.len();
    debug_assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut denom = diag[0];
    assert!(denom != 0.0, "singular tridiagonal system");
    scratch[0] = sup[0] / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * scratch[i - 1];
        assert!(denom != 0.0, "singular tridiagonal system");
        scratch[i] = sup[i] / denom;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}
