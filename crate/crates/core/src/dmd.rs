//! POD reduction and the baseline estimators: exact, forward-backward and
//! total-least-squares DMD.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, default_rank_tol, ensure_finite, eig, linsolve_right, pinv_default, sqrtm, svd,
    ComplexMatrix, RealMatrix,
};

/// Paired snapshot matrices: column `j` of `ytilde` is column `j` of `xtilde`
/// advanced by `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotData {
    pub xtilde: RealMatrix,
    pub ytilde: RealMatrix,
    pub dt: f64,
}

impl SnapshotData {
    pub fn new(xtilde: RealMatrix, ytilde: RealMatrix, dt: f64) -> Result<Self> {
        if xtilde.shape() != ytilde.shape() {
            return Err(Error::Dimension(format!(
                "snapshot matrices differ in shape: {:?} vs {:?}",
                xtilde.shape(),
                ytilde.shape()
            )));
        }
        if xtilde.nrows() == 0 || xtilde.ncols() == 0 {
            return Err(Error::InvalidArgument("empty snapshot matrices".into()));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        ensure_finite(&xtilde, "X snapshots")?;
        ensure_finite(&ytilde, "Y snapshots")?;
        Ok(SnapshotData { xtilde, ytilde, dt })
    }

    /// Splits a sequence `z_0 .. z_n` (columns) into the shifted pair.
    pub fn from_sequence(z: &RealMatrix, dt: f64) -> Result<Self> {
        if z.ncols() < 2 {
            return Err(Error::InvalidArgument(
                "a snapshot sequence needs at least two columns".into(),
            ));
        }
        let n = z.ncols() - 1;
        SnapshotData::new(z.columns(0, n).into_owned(), z.columns(1, n).into_owned(), dt)
    }

    pub fn state_dim(&self) -> usize {
        self.xtilde.nrows()
    }

    pub fn n_pairs(&self) -> usize {
        self.xtilde.ncols()
    }

    /// Both matrices multiplied by `c`.
    pub fn scaled(&self, c: f64) -> SnapshotData {
        SnapshotData {
            xtilde: &self.xtilde * c,
            ytilde: &self.ytilde * c,
            dt: self.dt,
        }
    }

    /// Role swap: the backward problem maps `ytilde` to `xtilde`.
    pub fn swapped(&self) -> SnapshotData {
        SnapshotData {
            xtilde: self.ytilde.clone(),
            ytilde: self.xtilde.clone(),
            dt: self.dt,
        }
    }
}

/// Snapshots projected onto the leading `rank` POD modes of `xtilde`.
#[derive(Debug, Clone)]
pub struct ReducedData {
    pub x: RealMatrix,
    pub y: RealMatrix,
    /// POD basis `Ũ_r`, `m × r` with orthonormal columns.
    pub basis: RealMatrix,
    pub sv: DVector<f64>,
    pub rightvecs: RealMatrix,
    pub rank: usize,
    pub dt: f64,
    /// `Ỹ Ṽ_r S̃_r⁻¹`, the lift used for DMD modes.
    pub mode_lift: RealMatrix,
}

impl ReducedData {
    /// Same subspace with the roles of `x` and `y` exchanged.
    pub fn swapped(&self) -> ReducedData {
        ReducedData {
            x: self.y.clone(),
            y: self.x.clone(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankPolicy {
    /// Fail if `r` exceeds the numerical rank.
    Strict,
    /// Lower `r` to the numerical rank and log a warning.
    Truncate,
}

pub fn pod_reduce(data: &SnapshotData, r: usize, policy: RankPolicy) -> Result<ReducedData> {
    let (m, n) = data.xtilde.shape();
    if r == 0 || r > m.min(n) {
        return Err(Error::InvalidArgument(format!(
            "rank {r} outside 1..={} for {m}x{n} snapshots",
            m.min(n)
        )));
    }
    let f = svd(&data.xtilde)?;
    let numerical = f.numerical_rank(default_rank_tol(m, n));
    let rank = if r > numerical {
        match policy {
            RankPolicy::Strict => {
                return Err(Error::RankDeficient {
                    requested: r,
                    numerical,
                })
            }
            RankPolicy::Truncate if numerical > 0 => {
                log::warn!("requested rank {r} exceeds numerical rank {numerical}; truncating");
                numerical
            }
            RankPolicy::Truncate => {
                return Err(Error::RankDeficient {
                    requested: r,
                    numerical,
                })
            }
        }
    } else {
        r
    };
    let basis = f.u.columns(0, rank).into_owned();
    let rightvecs = f.v.columns(0, rank).into_owned();
    let sv = f.s.rows(0, rank).into_owned();
    let x = basis.transpose() * &data.xtilde;
    let y = basis.transpose() * &data.ytilde;
    let mut mode_lift = &data.ytilde * &rightvecs;
    for (j, s) in sv.iter().enumerate() {
        mode_lift.column_mut(j).scale_mut(1.0 / s);
    }
    Ok(ReducedData {
        x,
        y,
        basis,
        sv,
        rightvecs,
        rank,
        dt: data.dt,
        mode_lift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Fbdmd,
    Tlsdmd,
    Cdmd,
    Cdmd2,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Exact,
        Method::Fbdmd,
        Method::Tlsdmd,
        Method::Cdmd,
        Method::Cdmd2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Fbdmd => "fbdmd",
            Method::Tlsdmd => "tlsdmd",
            Method::Cdmd => "cdmd",
            Method::Cdmd2 => "cdmd2",
        }
    }

    pub fn is_admm(self) -> bool {
        matches!(self, Method::Cdmd | Method::Cdmd2)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" | "exactdmd" => Ok(Method::Exact),
            "fb" | "fbdmd" => Ok(Method::Fbdmd),
            "tls" | "tlsdmd" => Ok(Method::Tlsdmd),
            "cdmd" => Ok(Method::Cdmd),
            "cdmd2" => Ok(Method::Cdmd2),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Reduced evolution operator with its spectrum and lifted modes.
#[derive(Debug, Clone)]
pub struct DmdResult {
    pub a: RealMatrix,
    pub eigs_discrete: Vec<Complex64>,
    /// `log(λ) / dt`, principal branch.
    pub eigs_continuous: Vec<Complex64>,
    pub eigenvectors: ComplexMatrix,
    /// Column `j` is `λ_j⁻¹ Ỹ Ṽ_r S̃_r⁻¹ v_j`.
    pub modes: ComplexMatrix,
    pub method: Method,
}

impl DmdResult {
    pub fn from_operator(a: RealMatrix, rd: &ReducedData, method: Method) -> Result<Self> {
        ensure_finite(&a, "evolution matrix")?;
        let pairs = eig(&a)?;
        let eigs_continuous = pairs.values.iter().map(|l| l.ln() / rd.dt).collect();
        let mut modes = linalg::to_complex(&rd.mode_lift) * &pairs.vectors;
        for (j, lambda) in pairs.values.iter().enumerate() {
            // a zero eigenvalue has no well-defined scaling; leave that mode unscaled
            if lambda.norm() > 0.0 {
                let inv = lambda.inv();
                modes.column_mut(j).iter_mut().for_each(|c| *c *= inv);
            }
        }
        Ok(DmdResult {
            a,
            eigs_discrete: pairs.values,
            eigs_continuous,
            eigenvectors: pairs.vectors,
            modes,
            method,
        })
    }

    /// Full-state operator `basis A basisᵀ`.
    pub fn lifted_operator(&self, rd: &ReducedData) -> RealMatrix {
        &rd.basis * &self.a * rd.basis.transpose()
    }
}

/// `Y Ṽ_r S̃_r⁻¹`, the least-squares operator restricted to the POD subspace.
pub fn exact_operator(rd: &ReducedData) -> RealMatrix {
    let mut a = &rd.y * &rd.rightvecs;
    for (j, s) in rd.sv.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    a
}

pub fn exact_dmd(rd: &ReducedData) -> Result<DmdResult> {
    DmdResult::from_operator(exact_operator(rd), rd, Method::Exact)
}

/// Least-squares backward operator `X Y⁺` in the same coordinates.
pub fn exact_backward(rd: &ReducedData) -> Result<RealMatrix> {
    Ok(&rd.x * pinv_default(&rd.y)?)
}

#[derive(Debug, Clone)]
pub struct FbOutput {
    pub result: DmdResult,
    pub forward: RealMatrix,
    pub backward: RealMatrix,
}

/// Forward-backward DMD on already reduced data: `A = (A_f A_b⁻¹)^{1/2}` with
/// both one-sided estimates expressed in the `X̃` POD coordinates.
pub fn fb_dmd_reduced(rd: &ReducedData) -> Result<FbOutput> {
    let ysvd = svd(&rd.y)?;
    let numerical = ysvd.numerical_rank(default_rank_tol(rd.y.nrows(), rd.y.ncols()));
    if numerical < rd.rank {
        return Err(Error::RankDeficient {
            requested: rd.rank,
            numerical,
        });
    }
    let forward = exact_operator(rd);
    let backward = exact_backward(rd)?;
    let product = linsolve_right(&backward, &forward).map_err(|e| e.at_step("backward inverse"))?;
    let root = sqrtm(&product)?;
    let a = root.map(|z| z.re);
    let result = DmdResult::from_operator(a, rd, Method::Fbdmd)?;
    Ok(FbOutput {
        result,
        forward,
        backward,
    })
}

pub fn fb_dmd(data: &SnapshotData, r: usize) -> Result<FbOutput> {
    let rd = pod_reduce(data, r, RankPolicy::Truncate)?;
    fb_dmd_reduced(&rd)
}

/// Top and bottom `r × r` blocks of the leading left singular vectors of
/// the stacked `(X; Y)`.
fn tls_blocks(rd: &ReducedData) -> Result<(RealMatrix, RealMatrix)> {
    let r = rd.rank;
    let n = rd.x.ncols();
    if 2 * r >= n {
        return Err(Error::Precondition(format!(
            "total least squares DMD needs r < n/2, got r={r}, n={n}"
        )));
    }
    let mut stacked = RealMatrix::zeros(2 * r, n);
    stacked.rows_mut(0, r).copy_from(&rd.x);
    stacked.rows_mut(r, r).copy_from(&rd.y);
    let f = svd(&stacked)?;
    let lead = f.u.columns(0, r);
    Ok((lead.rows(0, r).into_owned(), lead.rows(r, r).into_owned()))
}

pub fn tls_operator(rd: &ReducedData) -> Result<RealMatrix> {
    let (top, bottom) = tls_blocks(rd)?;
    linsolve_right(&top, &bottom).map_err(|e| e.at_step("tls top block inverse"))
}

pub fn tls_dmd(rd: &ReducedData) -> Result<DmdResult> {
    DmdResult::from_operator(tls_operator(rd)?, rd, Method::Tlsdmd)
}

/// Role-swapped total least squares estimate `U_tr U_br⁻¹`.
pub fn tls_backward(rd: &ReducedData) -> Result<RealMatrix> {
    let (top, bottom) = tls_blocks(rd)?;
    linsolve_right(&bottom, &top).map_err(|e| e.at_step("tls bottom block inverse"))
}

/// Propagates `x0` with the projected operator: column `k` is
/// `basis A^k basisᵀ x0`, for `k = 0 .. steps-1`.
pub fn reconstruct_trajectory(
    res: &DmdResult,
    rd: &ReducedData,
    x0: &DVector<f64>,
    steps: usize,
) -> Result<RealMatrix> {
    if x0.len() != rd.basis.nrows() {
        return Err(Error::Dimension(format!(
            "initial state has length {}, expected {}",
            x0.len(),
            rd.basis.nrows()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial state".into()));
    }
    let mut out = RealMatrix::zeros(rd.basis.nrows(), steps);
    let mut w = rd.basis.transpose() * x0;
    for k in 0..steps {
        out.set_column(k, &(&rd.basis * &w));
        w = &res.a * w;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::*;
    use approx::assert_relative_eq;

    fn planted(seed: u64, m: usize, n: usize) -> (RealMatrix, SnapshotData) {
        let mut g = rng(seed);
        let a0 = random_matrix(&mut g, m, m) * 0.6 + RealMatrix::identity(m, m);
        let x = random_matrix(&mut g, m, n);
        let y = &a0 * &x;
        (a0, SnapshotData::new(x, y, 0.1).unwrap())
    }

    #[test]
    fn snapshot_validation() {
        let a = RealMatrix::zeros(2, 3);
        assert!(SnapshotData::new(a.clone(), RealMatrix::zeros(3, 2), 1.0).is_err());
        assert!(SnapshotData::new(a.clone(), a.clone(), 0.0).is_err());
        let mut bad = a.clone();
        bad[(0, 0)] = f64::INFINITY;
        assert!(matches!(SnapshotData::new(bad, a, 1.0), Err(Error::NonFinite(_))));
    }

    #[test]
    fn pod_identity_input() {
        let i = RealMatrix::identity(3, 3);
        let data = SnapshotData::new(i.clone(), i.clone(), 1.0).unwrap();
        let rd = pod_reduce(&data, 3, RankPolicy::Strict).unwrap();
        assert_relative_eq!(rd.sv, DVector::from_element(3, 1.0), epsilon = 1e-14);
        // X is orthogonal (a signed permutation up to rotation within the tied subspace)
        assert_relative_eq!(&rd.x * rd.x.transpose(), i, epsilon = 1e-13);
    }

    #[test]
    fn pod_captures_rank_two() {
        let mut g = rng(4);
        let left = random_matrix(&mut g, 6, 2);
        let right = random_matrix(&mut g, 2, 8);
        let x = &left * &right;
        let data = SnapshotData::new(x.clone(), x.clone(), 1.0).unwrap();
        let rd = pod_reduce(&data, 2, RankPolicy::Strict).unwrap();
        assert!((&rd.basis * &rd.x - &x).norm() <= 1e-10);
        assert_relative_eq!(rd.basis.transpose() * &rd.basis, RealMatrix::identity(2, 2), epsilon = 1e-10);
    }

    #[test]
    fn pod_eckart_young() {
        let mut g = rng(5);
        let x = random_matrix(&mut g, 10, 6);
        // oracle: full SVD tail energy
        let full = x.clone().svd(false, false).singular_values;
        let mut tail: Vec<f64> = full.iter().copied().collect();
        tail.sort_by(|a, b| b.total_cmp(a));
        let expected = tail[4..].iter().map(|s| s * s).sum::<f64>().sqrt();
        let data = SnapshotData::new(x.clone(), x.clone(), 1.0).unwrap();
        let rd = pod_reduce(&data, 4, RankPolicy::Strict).unwrap();
        let err = (&rd.basis * &rd.x - &x).norm();
        assert!((err - expected).abs() <= 1e-10 * expected.max(1.0));
    }

    #[test]
    fn pod_rank_policy() {
        let mut g = rng(6);
        let left = random_matrix(&mut g, 5, 2);
        let x = &left * random_matrix(&mut g, 2, 7);
        let data = SnapshotData::new(x.clone(), x, 1.0).unwrap();
        assert!(matches!(
            pod_reduce(&data, 3, RankPolicy::Strict),
            Err(Error::RankDeficient { requested: 3, numerical: 2 })
        ));
        assert_eq!(pod_reduce(&data, 3, RankPolicy::Truncate).unwrap().rank, 2);
        assert!(pod_reduce(&data, 0, RankPolicy::Strict).is_err());
        assert!(pod_reduce(&data, 6, RankPolicy::Strict).is_err());
    }

    #[test]
    fn exact_doubling() {
        let mut g = rng(7);
        let x = random_matrix(&mut g, 3, 6);
        let data = SnapshotData::new(x.clone(), &x * 2.0, 0.5).unwrap();
        let rd = pod_reduce(&data, 3, RankPolicy::Strict).unwrap();
        let res = exact_dmd(&rd).unwrap();
        assert_relative_eq!(res.a, RealMatrix::identity(3, 3) * 2.0, epsilon = 1e-12);
        for l in &res.eigs_discrete {
            assert!((l - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        }
        for l in &res.eigs_continuous {
            assert!((l - Complex64::new(2f64.ln() / 0.5, 0.0)).norm() < 1e-11);
        }
    }

    #[test]
    fn exact_recovers_planted_operator() {
        let (a0, data) = planted(8, 4, 12);
        let rd = pod_reduce(&data, 4, RankPolicy::Strict).unwrap();
        let res = exact_dmd(&rd).unwrap();
        assert!((res.lifted_operator(&rd) - &a0).norm() <= 1e-9);
    }

    #[test]
    fn modes_are_lifted_eigenvectors() {
        let mut g = rng(9);
        let x = random_matrix(&mut g, 8, 10);
        let y = random_matrix(&mut g, 8, 10);
        let data = SnapshotData::new(x, y, 1.0).unwrap();
        let rd = pod_reduce(&data, 4, RankPolicy::Strict).unwrap();
        let res = exact_dmd(&rd).unwrap();
        let a = linalg::to_complex(&res.a);
        let bt = linalg::to_complex(&rd.basis.transpose());
        for (j, l) in res.eigs_discrete.iter().enumerate() {
            let w = &bt * res.modes.column(j) * *l;
            let diff = &a * &w - &w * *l;
            let dn = diff.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            assert!(dn <= 1e-8, "mode {j}: {dn}");
        }
    }

    #[test]
    fn fb_doubling() {
        let mut g = rng(10);
        let x = random_matrix(&mut g, 3, 8);
        let data = SnapshotData::new(x.clone(), &x * 2.0, 1.0).unwrap();
        let out = fb_dmd(&data, 3).unwrap();
        assert_relative_eq!(out.result.a, RealMatrix::identity(3, 3) * 2.0, epsilon = 1e-11);
        assert_relative_eq!(out.backward, RealMatrix::identity(3, 3) * 0.5, epsilon = 1e-12);
    }

    #[test]
    fn fb_matches_exact_when_noiseless() {
        let (_, data) = planted(11, 3, 10);
        let rd = pod_reduce(&data, 3, RankPolicy::Strict).unwrap();
        let ex = exact_dmd(&rd).unwrap();
        let fb = fb_dmd(&data, 3).unwrap();
        for (a, b) in ex.eigs_discrete.iter().zip(&fb.result.eigs_discrete) {
            assert!((a - b).norm() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn tls_recovers_planted_and_identity() {
        let (a0, data) = planted(12, 3, 12);
        let rd = pod_reduce(&data, 3, RankPolicy::Strict).unwrap();
        let res = tls_dmd(&rd).unwrap();
        assert!((res.lifted_operator(&rd) - a0).norm() <= 1e-9);

        let mut g = rng(13);
        let x = random_matrix(&mut g, 3, 9);
        let data = SnapshotData::new(x.clone(), x, 1.0).unwrap();
        let rd = pod_reduce(&data, 3, RankPolicy::Strict).unwrap();
        assert_relative_eq!(tls_dmd(&rd).unwrap().a, RealMatrix::identity(3, 3), epsilon = 1e-12);
    }

    #[test]
    fn tls_precondition() {
        let (_, data) = planted(14, 3, 6);
        let rd = pod_reduce(&data, 3, RankPolicy::Strict).unwrap();
        assert!(matches!(tls_dmd(&rd), Err(Error::Precondition(_))));
    }

    #[test]
    fn tls_orthogonal_invariance() {
        let mut g = rng(15);
        let x = random_matrix(&mut g, 3, 10);
        let y = random_matrix(&mut g, 3, 10);
        let data = SnapshotData::new(x, y, 1.0).unwrap();
        let rd = pod_reduce(&data, 3, RankPolicy::Strict).unwrap();
        let a = tls_operator(&rd).unwrap();
        let q = random_matrix(&mut g, 10, 10).qr().q();
        let rotated = ReducedData {
            x: &rd.x * &q,
            y: &rd.y * &q,
            ..rd.clone()
        };
        let b = tls_operator(&rotated).unwrap();
        assert!((a - b).norm() <= 1e-10);
    }

    #[test]
    fn spectrum_scale_invariance() {
        let mut g = rng(16);
        let x = random_matrix(&mut g, 4, 12);
        let y = random_matrix(&mut g, 4, 12) * 0.3 + &x * 0.9;
        let data = SnapshotData::new(x, y, 1.0).unwrap();
        for c in [-3.0, 0.01, 250.0] {
            let scaled = data.scaled(c);
            let rd0 = pod_reduce(&data, 3, RankPolicy::Strict).unwrap();
            let rd1 = pod_reduce(&scaled, 3, RankPolicy::Strict).unwrap();
            let pairs = [
                (exact_dmd(&rd0).unwrap(), exact_dmd(&rd1).unwrap()),
                (fb_dmd_reduced(&rd0).unwrap().result, fb_dmd_reduced(&rd1).unwrap().result),
                (tls_dmd(&rd0).unwrap(), tls_dmd(&rd1).unwrap()),
            ];
            for (p, q) in pairs {
                for (a, b) in p.eigs_discrete.iter().zip(&q.eigs_discrete) {
                    assert!((a - b).norm() < 1e-10, "c={c}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn trajectory_identity_and_doubling() {
        let mut g = rng(17);
        let x = random_matrix(&mut g, 3, 6);
        let data = SnapshotData::new(x.clone(), x.clone(), 1.0).unwrap();
        let rd = pod_reduce(&data, 2, RankPolicy::Strict).unwrap();
        let mut res = exact_dmd(&rd).unwrap();
        res.a = RealMatrix::identity(2, 2);
        let x0 = DVector::from_vec(vec![0.3, -1.0, 2.0]);
        let path = reconstruct_trajectory(&res, &rd, &x0, 4).unwrap();
        let proj = &rd.basis * (rd.basis.transpose() * &x0);
        for k in 0..4 {
            assert_relative_eq!(path.column(k).into_owned(), proj.clone(), epsilon = 1e-14);
        }

        let data = SnapshotData::new(x.clone(), &x * 2.0, 1.0).unwrap();
        let rd = pod_reduce(&data, 3, RankPolicy::Strict).unwrap();
        let res = exact_dmd(&rd).unwrap();
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let path = reconstruct_trajectory(&res, &rd, &e1, 5).unwrap();
        for k in 0..5 {
            assert_relative_eq!(path.column(k).into_owned(), &e1 * 2f64.powi(k as i32), epsilon = 1e-10);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("optdmd".parse::<Method>().is_err());
    }
}
