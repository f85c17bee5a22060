//! Closeness assertions for tests and diagnostics.
//!
//! These compare with a *purely relative* tolerance: quantities here are
//! SI values many orders of magnitude below 1 (energies ~1e-28 J), where
//! any default absolute floor would make a comparison pass vacuously.

/// Relative deviation `|a - b| / max(|a|, |b|)`, or 0 when both vanish.
pub fn rel_dev(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Panic unless `a` and `b` agree to relative tolerance `tol`.
#[track_caller]
pub fn assert_rel(a: f64, b: f64, tol: f64) {
    let dev = rel_dev(a, b);
    assert!(
        dev.is_finite() && dev <= tol,
        "values differ: {a:e} vs {b:e} (relative deviation {dev:.3e} > {tol:.1e})"
    );
}

/// Panic unless `|a - b| <= tol`.
#[track_caller]
pub fn assert_abs(a: f64, b: f64, tol: f64) {
    let dev = (a - b).abs();
    assert!(
        dev.is_finite() && dev <= tol,
        "values differ: {a:e} vs {b:e} (|difference| {dev:.3e} > {tol:.1e})"
    );
}
