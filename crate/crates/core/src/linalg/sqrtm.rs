use num_complex::Complex64;

use super::schur::complex_schur;
use super::{ensure_finite, to_complex, ComplexMatrix, RealMatrix};
use crate::error::{Error, Result};

/// Principal matrix square root via the complex Schur form (works for
/// non-diagonalizable input).
pub fn sqrtm(a: &RealMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "sqrtm needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    ensure_finite(a, "sqrtm input")?;
    let n = a.nrows();
    let schur = complex_schur(&to_complex(a))?;
    let t = &schur.t;
    let tol = 100.0 * n as f64 * f64::EPSILON * a.norm().max(f64::MIN_POSITIVE);

    let mut r = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        let lambda = t[(i, i)];
        if lambda.im.abs() <= tol && lambda.re <= tol {
            return Err(Error::BranchCut {
                re: lambda.re,
                im: lambda.im,
            });
        }
        r[(i, i)] = lambda.sqrt();
    }
    for j in 1..n {
        for i in (0..j).rev() {
            let mut acc = t[(i, j)];
            for k in i + 1..j {
                acc -= r[(i, k)] * r[(k, j)];
            }
            let d: Complex64 = r[(i, i)] + r[(j, j)];
            r[(i, j)] = acc / d;
        }
    }
    Ok(&schur.z * r * schur.z.adjoint())
}
