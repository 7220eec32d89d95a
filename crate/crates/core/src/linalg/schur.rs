//! Complex Schur decomposition `A = Z T Zᴴ` with `T` upper triangular and `Z`
//! unitary: Householder reduction to Hessenberg form followed by single-shift
//! QR sweeps with Wilkinson shifts.

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

#[derive(Debug, Clone)]
pub struct ComplexSchur {
    /// Unitary factor.
    pub z: ComplexMatrix,
    /// Upper triangular factor.
    pub t: ComplexMatrix,
}

impl ComplexSchur {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }
}

pub fn complex_schur(a: &ComplexMatrix) -> Result<ComplexSchur> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "Schur decomposition needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("Schur input".into()));
    }
    let n = a.nrows();
    let mut h = a.clone();
    let mut z = ComplexMatrix::identity(n, n);
    hessenberg(&mut h, &mut z);
    qr_sweeps(&mut h, &mut z)?;
    // clean below the diagonal
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok(ComplexSchur { z, t: h })
}

fn hessenberg(h: &mut ComplexMatrix, z: &mut ComplexMatrix) {
    let n = h.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let len = n - k - 1;
        let x: Vec<Complex64> = (0..len).map(|i| h[(k + 1 + i, k)]).collect();
        let tail: f64 = x[1..].iter().map(|v| v.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let xnorm = (x[0].norm_sqr() + tail).sqrt();
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in v.iter_mut() {
            *c /= vnorm;
        }
        // H <- P H with P = I - 2 v vᴴ acting on rows k+1..n
        for j in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in 0..len {
                dot += v[i].conj() * h[(k + 1 + i, j)];
            }
            for i in 0..len {
                h[(k + 1 + i, j)] -= v[i] * dot * 2.0;
            }
        }
        // H <- H P and Z <- Z P on columns k+1..n
        for m in [&mut *h, &mut *z] {
            for i in 0..n {
                let mut dot = Complex64::new(0.0, 0.0);
                for j in 0..len {
                    dot += m[(i, k + 1 + j)] * v[j];
                }
                for j in 0..len {
                    m[(i, k + 1 + j)] -= dot * v[j].conj() * 2.0;
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Plane rotation `G = [[c, s], [-conj(s), c]]` with `G [a; b] = [r; 0]`.
#[derive(Clone, Copy)]
struct Givens {
    c: f64,
    s: Complex64,
}

impl Givens {
    fn zeroing(a: Complex64, b: Complex64) -> Givens {
        let bn = b.norm();
        if bn == 0.0 {
            return Givens {
                c: 1.0,
                s: Complex64::new(0.0, 0.0),
            };
        }
        let an = a.norm();
        if an == 0.0 {
            return Givens {
                c: 0.0,
                s: b.conj() / bn,
            };
        }
        let norm = an.hypot(bn);
        Givens {
            c: an / norm,
            s: (a / an) * b.conj() / norm,
        }
    }

    /// Rows `p`, `q` over columns `cols`.
    fn apply_left(&self, m: &mut ComplexMatrix, p: usize, q: usize, cols: std::ops::Range<usize>) {
        for j in cols {
            let hp = m[(p, j)];
            let hq = m[(q, j)];
            m[(p, j)] = hp * self.c + self.s * hq;
            m[(q, j)] = -self.s.conj() * hp + hq * self.c;
        }
    }

    /// Columns `p`, `q` over rows `rows`, multiplying by `Gᴴ` on the right.
    fn apply_right(&self, m: &mut ComplexMatrix, p: usize, q: usize, rows: std::ops::Range<usize>) {
        for i in rows {
            let hp = m[(i, p)];
            let hq = m[(i, q)];
            m[(i, p)] = hp * self.c + hq * self.s.conj();
            m[(i, q)] = -hp * self.s + hq * self.c;
        }
    }
}

fn wilkinson_shift(h: &ComplexMatrix, hi: usize) -> Complex64 {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn qr_sweeps(h: &mut ComplexMatrix, z: &mut ComplexMatrix) -> Result<()> {
    let n = h.nrows();
    if n < 2 {
        return Ok(());
    }
    let hnorm = h.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        // locate the start of the unreduced block ending at `hi`
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let mut scale = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if scale == 0.0 {
                scale = hnorm;
            }
            if sub <= eps * scale {
                h[(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            sweeps = 0;
            continue;
        }
        sweeps += 1;
        total += 1;
        if sweeps > MAX_SWEEPS_PER_EIGENVALUE {
            return Err(Error::NoConvergence {
                what: "complex Schur QR iteration",
                iterations: total,
            });
        }
        let shift = if sweeps.is_multiple_of(11) {
            // exceptional shift to break cycles
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h, hi)
        };

        let mut g = Givens::zeroing(h[(lo, lo)] - shift, h[(lo + 1, lo)]);
        g.apply_left(h, lo, lo + 1, lo..n);
        g.apply_right(h, lo, lo + 1, 0..(lo + 3).min(hi + 1));
        g.apply_right(z, lo, lo + 1, 0..n);
        for k in lo + 1..hi {
            g = Givens::zeroing(h[(k, k - 1)], h[(k + 1, k - 1)]);
            g.apply_left(h, k, k + 1, k - 1..n);
            h[(k + 1, k - 1)] = Complex64::new(0.0, 0.0);
            g.apply_right(h, k, k + 1, 0..(k + 3).min(hi + 1));
            g.apply_right(z, k, k + 1, 0..n);
        }
    }
    Ok(())
}
