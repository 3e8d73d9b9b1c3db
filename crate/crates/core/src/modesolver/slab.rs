//! Symmetric three-layer slab, TE polarization.

use std::f64::consts::PI;

/// Effective index of the TE0 mode of a symmetric slab of thickness `t_nm`.
///
/// Bisects the even-mode dispersion relation `tan(κt/2) = γ/κ` with
/// `κ = k₀√(n_core² − n²)` and `γ = k₀√(n² − n_clad²)`, restricted to the
/// first branch `κt/2 < π/2`, to an absolute tolerance of 1e-9 or better.
///
/// Callers must ensure `n_core > n_clad` and positive `t_nm`, `wavelength_nm`.
pub fn solve_slab_te(n_core: f64, n_clad: f64, t_nm: f64, wavelength_nm: f64) -> f64 {
    debug_assert!(n_core > n_clad && t_nm > 0.0 && wavelength_nm > 0.0);
    let k0 = 2.0 * PI / wavelength_nm;
    let residual = |n: f64| {
        let kappa = k0 * (n_core * n_core - n * n).sqrt();
        let gamma = k0 * (n * n - n_clad * n_clad).sqrt();
        (kappa * t_nm / 2.0).tan() - gamma / kappa
    };
    // Lower end of the first tan branch: κt/2 = π/2.
    let kappa_max = PI / t_nm;
    let branch_floor = (n_core * n_core - (kappa_max / k0).powi(2)).max(0.0).sqrt();
    let mut lo = n_clad.max(branch_floor);
    let mut hi = n_core;
    // residual decreases monotonically in n on the branch.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let r = residual(mid);
        if r.is_nan() || r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}
