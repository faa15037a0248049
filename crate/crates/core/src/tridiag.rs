use crate::error::{Error, Result};

/// Thomas algorithm for `a[j] x[j-1] + b[j] x[j] + c[j] x[j+1] = d[j]`.
/// `a[0]` and `c[n-1]` are ignored. The solution overwrites `d`; `scratch` holds n values.
pub fn solve(a: &[f64], b: &[f64], c: &[f64], d: &mut [f64], scratch: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let mut beta = b[0];
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::SingularSystem { row: 0 });
    }
    d[0] /= beta;
    for j in 1..n {
        scratch[j] = c[j - 1] / beta;
        beta = b[j] - a[j] * scratch[j];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::SingularSystem { row: j });
        }
        d[j] = (d[j] - a[j] * d[j - 1]) / beta;
    }
    for j in (0..n - 1).rev() {
        d[j] -= scratch[j + 1] * d[j + 1];
    }
    Ok(())
}
