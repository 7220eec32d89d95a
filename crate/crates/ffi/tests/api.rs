use std::ffi::{CStr, CString};
use std::ptr;

use cdmd_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cdmd_last_error_message()) }.to_string_lossy().into_owned()
}

fn linear(n: usize, variance: f64) -> *mut CdmdSnapshots {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cdmd_gen_linear_periodic(n, variance, 7, &mut s) }, CdmdStatus::Ok);
    assert!(!s.is_null());
    s
}

#[test]
fn decompose_recovers_unit_circle_spectrum() {
    let s = linear(32, 0.0);
    for method in [
        CdmdMethod::Exact,
        CdmdMethod::Fbdmd,
        CdmdMethod::Tlsdmd,
        CdmdMethod::Cdmd,
        CdmdMethod::Cdmd2,
    ] {
        let mut res = ptr::null_mut();
        let status = unsafe { cdmd_decompose(s, method, 2, ptr::null(), &mut res) };
        assert_eq!(status, CdmdStatus::Ok, "{method:?}: {}", last_error());
        let mut rank = 0;
        assert_eq!(unsafe { cdmd_result_rank(res, &mut rank) }, CdmdStatus::Ok);
        assert_eq!(rank, 2);
        let (mut re, mut im) = ([0.0; 2], [0.0; 2]);
        let st = unsafe { cdmd_result_eigenvalues(res, true, re.as_mut_ptr(), im.as_mut_ptr(), 2) };
        assert_eq!(st, CdmdStatus::Ok);
        assert!(re[0].abs() < 1e-6 && (im[0] - 1.0).abs() < 1e-6, "{method:?}: {re:?} {im:?}");
        assert!(re[1].abs() < 1e-6 && (im[1] + 1.0).abs() < 1e-6, "{method:?}: {re:?} {im:?}");

        let (mut a, mut b) = ([0.0; 4], [0.0; 4]);
        assert_eq!(unsafe { cdmd_result_operator(res, a.as_mut_ptr(), 4) }, CdmdStatus::Ok);
        assert_eq!(unsafe { cdmd_result_backward(res, b.as_mut_ptr(), 4) }, CdmdStatus::Ok);
        // column-major 2×2 product
        let ab = [
            a[0] * b[0] + a[2] * b[1],
            a[1] * b[0] + a[3] * b[1],
            a[0] * b[2] + a[2] * b[3],
            a[1] * b[2] + a[3] * b[3],
        ];
        let err: f64 = [ab[0] - 1.0, ab[1], ab[2], ab[3] - 1.0].iter().map(|v| v * v).sum::<f64>().sqrt();
        let (mut converged, mut iters, mut consistency) = (false, 0usize, 0.0);
        assert_eq!(
            unsafe { cdmd_result_status(res, &mut converged, &mut iters, &mut consistency) },
            CdmdStatus::Ok
        );
        assert!(converged);
        assert!((err - consistency).abs() < 1e-12);
        assert_eq!(iters > 0, matches!(method, CdmdMethod::Cdmd | CdmdMethod::Cdmd2));

        let (mut mre, mut mim) = ([0.0; 4], [0.0; 4]);
        assert_eq!(unsafe { cdmd_result_modes(res, mre.as_mut_ptr(), mim.as_mut_ptr(), 4) }, CdmdStatus::Ok);
        assert!(mim.iter().any(|v| *v != 0.0));
        unsafe { cdmd_result_free(res) };
    }
    unsafe { cdmd_snapshots_free(s) };
}

#[test]
fn snapshots_from_buffers() {
    // z_k = 2^k on a single state: x = [1, 2, 4], y = [2, 4, 8]
    let z = [1.0, 2.0, 4.0, 8.0];
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cdmd_snapshots_from_sequence(1, 4, z.as_ptr(), 0.5, &mut s) }, CdmdStatus::Ok);
    let (mut rows, mut cols, mut dt) = (0, 0, 0.0);
    assert_eq!(unsafe { cdmd_snapshots_shape(s, &mut rows, &mut cols, &mut dt) }, CdmdStatus::Ok);
    assert_eq!((rows, cols, dt), (1, 3, 0.5));
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { cdmd_decompose(s, CdmdMethod::Exact, 1, ptr::null(), &mut res) }, CdmdStatus::Ok);
    let (mut re, mut im) = ([0.0], [0.0]);
    unsafe { cdmd_result_eigenvalues(res, false, re.as_mut_ptr(), im.as_mut_ptr(), 1) };
    assert!((re[0] - 2.0).abs() < 1e-12 && im[0] == 0.0);
    unsafe {
        cdmd_result_free(res);
        cdmd_snapshots_free(s);
    }

    let x = [1.0, 0.0, 0.0, 1.0];
    let y = [2.0, 0.0, 0.0, 3.0];
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cdmd_snapshots_new(2, 2, x.as_ptr(), y.as_ptr(), 1.0, &mut s) }, CdmdStatus::Ok);
    unsafe { cdmd_snapshots_free(s) };
}

#[test]
fn error_codes_and_messages() {
    let mut s = ptr::null_mut();
    let st = unsafe { cdmd_snapshots_new(2, 2, ptr::null(), ptr::null(), 1.0, &mut s) };
    assert_eq!(st, CdmdStatus::NullPointer);
    assert!(last_error().contains("null"));

    let x = [f64::NAN, 0.0];
    let st = unsafe { cdmd_snapshots_new(1, 2, x.as_ptr(), x.as_ptr(), 1.0, &mut s) };
    assert_eq!(st, CdmdStatus::NonFinite);

    let st = unsafe { cdmd_gen_linear_periodic(1, 0.0, 0, &mut s) };
    assert_eq!(st, CdmdStatus::InvalidArgument);

    let snaps = linear(32, 0.0);
    let mut res = ptr::null_mut();
    let mut bad = cdmd_solver_options_default();
    bad.tau = 0.5;
    let st = unsafe { cdmd_decompose(snaps, CdmdMethod::Cdmd, 2, &bad, &mut res) };
    assert_eq!(st, CdmdStatus::InvalidArgument);
    assert!(res.is_null());

    assert_eq!(unsafe { cdmd_decompose(snaps, CdmdMethod::Exact, 2, ptr::null(), &mut res) }, CdmdStatus::Ok);
    assert_eq!(last_error(), "");
    let (mut re, mut im) = ([0.0; 1], [0.0; 1]);
    let st = unsafe { cdmd_result_eigenvalues(res, true, re.as_mut_ptr(), im.as_mut_ptr(), 1) };
    assert_eq!(st, CdmdStatus::BufferTooSmall);
    assert!(last_error().contains("need 2"));

    let missing = CString::new("/nonexistent/dir/snap.csv").unwrap();
    let st = unsafe { cdmd_snapshots_load(missing.as_ptr(), &mut s) };
    assert_eq!(st, CdmdStatus::Io);
    assert!(last_error().contains("/nonexistent/dir/snap.csv"));

    unsafe {
        cdmd_result_free(res);
        cdmd_snapshots_free(snaps);
        cdmd_result_free(ptr::null_mut());
        cdmd_snapshots_free(ptr::null_mut());
    }
}

#[test]
fn iteration_cap_is_reported_not_failed() {
    let snaps = unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(cdmd_gen_sine(16, 0.25, 1, &mut s), CdmdStatus::Ok);
        s
    };
    let mut opts = cdmd_solver_options_default();
    opts.max_iters = 2;
    let mut res = ptr::null_mut();
    assert_eq!(unsafe { cdmd_decompose(snaps, CdmdMethod::Cdmd, 4, &opts, &mut res) }, CdmdStatus::Ok);
    let (mut converged, mut iters, mut consistency) = (true, 0usize, 0.0);
    unsafe { cdmd_result_status(res, &mut converged, &mut iters, &mut consistency) };
    assert!(!converged);
    assert_eq!(iters, 2);
    unsafe {
        cdmd_result_free(res);
        cdmd_snapshots_free(snaps);
    }
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let snaps = linear(8, 0.1);
    for name in ["s.csv", "s.bin"] {
        let path = CString::new(dir.path().join(name).to_str().unwrap()).unwrap();
        assert_eq!(unsafe { cdmd_snapshots_save(snaps, path.as_ptr()) }, CdmdStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(unsafe { cdmd_snapshots_load(path.as_ptr(), &mut back) }, CdmdStatus::Ok);
        let (mut rows, mut cols, mut dt) = (0, 0, 0.0);
        unsafe { cdmd_snapshots_shape(back, &mut rows, &mut cols, &mut dt) };
        assert_eq!((rows, cols), (2, 8));
        unsafe { cdmd_snapshots_free(back) };
    }
    unsafe { cdmd_snapshots_free(snaps) };
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(cdmd_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
