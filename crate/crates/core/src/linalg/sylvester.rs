//! Sylvester equation `C1 A + A C2 = C3` by Bartels-Stewart on complex Schur
//! forms of both coefficients.

use num_complex::Complex64;

use super::schur::complex_schur;
use super::{ensure_finite, to_complex, ComplexMatrix, RealMatrix};
use crate::error::{Error, Result};

pub fn sylvester_solve(c1: &RealMatrix, c2: &RealMatrix, c3: &RealMatrix) -> Result<RealMatrix> {
    ensure_finite(c1, "Sylvester C1")?;
    ensure_finite(c2, "Sylvester C2")?;
    ensure_finite(c3, "Sylvester C3")?;
    let x = sylvester_solve_complex(&to_complex(c1), &to_complex(c2), &to_complex(c3))?;
    Ok(x.map(|z| z.re))
}

pub fn sylvester_solve_complex(
    c1: &ComplexMatrix,
    c2: &ComplexMatrix,
    c3: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let (p, q) = (c1.nrows(), c2.nrows());
    if !c1.is_square() || !c2.is_square() || c3.shape() != (p, q) {
        return Err(Error::Dimension(format!(
            "Sylvester shapes C1 {:?}, C2 {:?}, C3 {:?}",
            c1.shape(),
            c2.shape(),
            c3.shape()
        )));
    }
    let s1 = complex_schur(c1)?;
    let s2 = complex_schur(c2)?;
    let (t1, t2) = (&s1.t, &s2.t);

    let scale = fro(c1).max(fro(c2)).max(f64::MIN_POSITIVE);
    let tol = (p.max(q) as f64) * f64::EPSILON * scale;

    // T1 W + W T2 = U1ᴴ C3 U2
    let mut w = s1.z.adjoint() * c3 * &s2.z;
    for j in 0..q {
        for k in 0..j {
            let coef = t2[(k, j)];
            if coef != Complex64::new(0.0, 0.0) {
                for i in 0..p {
                    let wk = w[(i, k)];
                    w[(i, j)] -= wk * coef;
                }
            }
        }
        let shift = t2[(j, j)];
        for i in (0..p).rev() {
            let mut acc = w[(i, j)];
            for l in i + 1..p {
                acc -= t1[(i, l)] * w[(l, j)];
            }
            let d = t1[(i, i)] + shift;
            if d.norm() <= tol {
                return Err(Error::SingularPencil { gap: d.norm(), tol });
            }
            w[(i, j)] = acc / d;
        }
    }
    Ok(&s1.z * w * s2.z.adjoint())
}

fn fro(m: &ComplexMatrix) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}
