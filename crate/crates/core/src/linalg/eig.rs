use std::cmp::Ordering;

use num_complex::Complex64;

use super::schur::complex_schur;
use super::{ensure_finite, to_complex, ComplexMatrix, RealMatrix};
use crate::error::{Error, Result};

/// Eigenvalues with unit-norm eigenvectors in the matching columns.
///
/// Ordered by descending modulus, then descending real part, then descending
/// imaginary part.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<Complex64>,
    pub vectors: ComplexMatrix,
}

pub(crate) fn spectral_order(a: &Complex64, b: &Complex64) -> Ordering {
    b.norm()
        .total_cmp(&a.norm())
        .then(b.re.total_cmp(&a.re))
        .then(b.im.total_cmp(&a.im))
}

pub fn eig(a: &RealMatrix) -> Result<EigenPairs> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "eig needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    ensure_finite(a, "eig input")?;
    let n = a.nrows();
    let schur = complex_schur(&to_complex(a))?;
    let t = &schur.t;
    let tnorm = t.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let small = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE);

    // eigenvectors of the triangular factor by back substitution
    let mut y = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let lambda = t[(j, j)];
        y[(j, j)] = Complex64::new(1.0, 0.0);
        for i in (0..j).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in i + 1..=j {
                acc += t[(i, k)] * y[(k, j)];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < small {
                d = Complex64::new(small, 0.0);
            }
            y[(i, j)] = -acc / d;
        }
    }
    let mut vectors = &schur.z * y;
    for j in 0..n {
        let norm = vectors.column(j).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        vectors.column_mut(j).iter_mut().for_each(|c| *c /= norm);
    }

    let mut values = schur.eigenvalues();
    conjugate_pairs(&mut values, &mut vectors, a.norm());
    for j in 0..n {
        normalize_phase(&mut vectors, j);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| spectral_order(&values[i], &values[j]).then(i.cmp(&j)));
    let values_sorted = order.iter().map(|&i| values[i]).collect();
    let vectors_sorted = ComplexMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(EigenPairs {
        values: values_sorted,
        vectors: vectors_sorted,
    })
}

/// A real matrix has a spectrum closed under conjugation; rounding in the
/// complex Schur form breaks that slightly. Snap near-real eigenvalues to the
/// real axis and make each matched pair exactly conjugate (vectors included).
fn conjugate_pairs(values: &mut [Complex64], vectors: &mut ComplexMatrix, scale: f64) {
    let n = values.len();
    let real_tol = 1e3 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let mut paired = vec![false; n];
    for j in 0..n {
        if values[j].im.abs() <= real_tol {
            values[j].im = 0.0;
            paired[j] = true;
        }
    }
    let mut upper: Vec<usize> = (0..n).filter(|&j| !paired[j] && values[j].im > 0.0).collect();
    upper.sort_by(|&i, &j| values[j].im.total_cmp(&values[i].im).then(i.cmp(&j)));
    for j in upper {
        let target = values[j].conj();
        let partner = (0..n)
            .filter(|&k| !paired[k] && values[k].im < 0.0)
            .min_by(|&k, &l| {
                (values[k] - target)
                    .norm()
                    .total_cmp(&(values[l] - target).norm())
                    .then(k.cmp(&l))
            });
        let Some(k) = partner else { continue };
        let pair_tol = f64::EPSILON.sqrt() * values[j].norm().max(1.0);
        if (values[k] - target).norm() > pair_tol {
            continue;
        }
        let mid = (values[j] + values[k].conj()) * 0.5;
        values[j] = mid;
        values[k] = mid.conj();
        let vj = vectors.column(j).map(|c| c.conj());
        vectors.set_column(k, &vj);
        paired[j] = true;
        paired[k] = true;
    }
}

/// Rotates column `j` so its largest-magnitude entry is real and positive.
fn normalize_phase(vectors: &mut ComplexMatrix, j: usize) {
    let mut best = 0;
    let mut best_norm = -1.0;
    for (i, c) in vectors.column(j).iter().enumerate() {
        // small slack keeps the choice stable between near-equal entries
        if c.norm() > best_norm * (1.0 + 1e-9) {
            best = i;
            best_norm = c.norm();
        }
    }
    let pivot = vectors[(best, j)];
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        vectors.column_mut(j).iter_mut().for_each(|c| *c *= rot);
    }
}
