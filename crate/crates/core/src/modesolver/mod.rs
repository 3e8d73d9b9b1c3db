//! Finite-difference solver for the fundamental quasi-TE mode of a ridge
//! membrane waveguide.
//!
//! The dominant transverse field obeys the scalar Helmholtz eigenproblem
//! `∇²E + k₀² ε(x, y) E = β² E` on a uniform node grid with `E = 0` on the
//! window boundary. Node permittivities are averaged over each node's dual
//! cell. The largest eigenvalue is found by inverse iteration on
//! `σ − A`, where the shift `σ` is the top eigenvalue of the discrete
//! one-dimensional slab through the thickest column. That slab bounds the
//! two-dimensional spectrum from above, so `σ − A` stays positive definite
//! and each inner solve is a preconditioned conjugate-gradient run. The
//! preconditioner is the same operator with the membrane-only permittivity
//! profile, which separates in a sine basis along `x` and tridiagonal
//! solves along `y`.

pub mod dst;
mod slab;

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

pub use slab::solve_slab_te;

use crate::constants::{SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::error::{require_positive, Error, Result};
use crate::geometry::WaveguideCrossSection;
use crate::io::fmt_sig;
use dst::RowDst;

/// Smallest field-free margin around the structure.
pub const MIN_MARGIN_NM: f64 = 2000.0;
/// Coarsest grid spacing accepted.
pub const MAX_SPACING_NM: f64 = 20.0;
pub const MAX_ITERATIONS: usize = 500;
/// Relative eigenvalue change that ends the outer iteration.
pub const EIGEN_TOLERANCE: f64 = 1e-10;
const CG_TOLERANCE: f64 = 1e-11;
const CG_MAX_ITERATIONS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeOptions {
    pub h_nm: f64,
    /// Distance from the structure to the window boundary on every side.
    pub margin_nm: f64,
}

impl ModeOptions {
    pub fn new(h_nm: f64) -> Self {
        ModeOptions {
            h_nm,
            margin_nm: MIN_MARGIN_NM,
        }
    }
}

/// Node grid over the cross-section with dual-cell averaged permittivity.
#[derive(Debug, Clone)]
pub struct CrossSectionGrid {
    pub nx: usize,
    pub ny: usize,
    pub h_nm: f64,
    /// Coordinates of node (0, 0); the ridge is centered on `x = 0`.
    pub x0_nm: f64,
    pub y0_nm: f64,
    pub eps: Vec<f64>,
    /// Fraction of each dual cell occupied by dielectric.
    pub fill: Vec<f64>,
}

fn overlap(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    (b.min(hi) - a.max(lo)).max(0.0)
}

impl CrossSectionGrid {
    pub fn new(xs: &WaveguideCrossSection, opts: &ModeOptions) -> Result<Self> {
        xs.validate()?;
        require_positive("h_nm", opts.h_nm)?;
        if opts.h_nm > MAX_SPACING_NM {
            return Err(Error::invalid(
                "h_nm",
                format!("spacing must be at most {MAX_SPACING_NM} nm"),
            ));
        }
        if !(opts.margin_nm >= MIN_MARGIN_NM) {
            return Err(Error::invalid(
                "margin_nm",
                format!("window must extend at least {MIN_MARGIN_NM} nm beyond the ridge"),
            ));
        }
        let h = opts.h_nm;
        let half_w = xs.width_um * 500.0;
        let t_wg = xs.ridge_thickness_nm;
        let t_mem = xs.membrane_thickness_nm;

        // Whole cells across, so the node set is mirror symmetric about x = 0.
        let cells_x = ((2.0 * (half_w + opts.margin_nm)) / h - 1e-9).ceil() as usize;
        let cells_y = ((t_wg + 2.0 * opts.margin_nm) / h - 1e-9).ceil() as usize;
        let nx = cells_x - 1;
        let ny = cells_y - 1;
        let x0 = -(cells_x as f64) * h / 2.0 + h;
        let y_bottom = t_wg / 2.0 - cells_y as f64 * h / 2.0;
        let y0 = y_bottom + h;

        let ridge_x: Vec<f64> = (0..nx)
            .map(|i| {
                let x = x0 + i as f64 * h;
                overlap(x - h / 2.0, x + h / 2.0, -half_w, half_w) / h
            })
            .collect();
        let contrast = xs.n_core * xs.n_core - xs.n_ambient * xs.n_ambient;
        let mut eps = vec![0.0; nx * ny];
        let mut fill = vec![0.0; nx * ny];
        for j in 0..ny {
            let y = y0 + j as f64 * h;
            let mem = overlap(y - h / 2.0, y + h / 2.0, 0.0, t_mem) / h;
            let ridge = overlap(y - h / 2.0, y + h / 2.0, 0.0, t_wg) / h;
            for i in 0..nx {
                let f = mem + ridge_x[i] * (ridge - mem);
                fill[j * nx + i] = f;
                eps[j * nx + i] = xs.n_ambient * xs.n_ambient + contrast * f;
            }
        }
        Ok(CrossSectionGrid {
            nx,
            ny,
            h_nm: h,
            x0_nm: x0,
            y0_nm: y0,
            eps,
            fill,
        })
    }

    pub fn x_nm(&self, i: usize) -> f64 {
        self.x0_nm + i as f64 * self.h_nm
    }

    pub fn y_nm(&self, j: usize) -> f64 {
        self.y0_nm + j as f64 * self.h_nm
    }
}

/// Power-normalized fundamental mode.
#[derive(Debug, Clone, Serialize)]
pub struct ModeSolution {
    pub wavelength_nm: f64,
    pub n_eff: f64,
    pub h_nm: f64,
    pub nx: usize,
    pub ny: usize,
    pub x0_nm: f64,
    pub y0_nm: f64,
    /// Height of the ridge top surface.
    pub surface_y_nm: f64,
    pub n_ambient: f64,
    /// Shift used for the inverse iteration, as an index.
    pub n_shift: f64,
    pub iterations: usize,
    /// Field amplitude in V/m for 1 mW of guided power, row-major in `y`.
    #[serde(skip)]
    pub field: Vec<f64>,
    #[serde(skip)]
    pub fill: Vec<f64>,
}

impl ModeSolution {
    pub fn x_nm(&self, i: usize) -> f64 {
        self.x0_nm + i as f64 * self.h_nm
    }

    pub fn y_nm(&self, j: usize) -> f64 {
        self.y0_nm + j as f64 * self.h_nm
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.field[j * self.nx + i]
    }

    /// Column index closest to `x = 0`.
    pub fn center_column(&self) -> usize {
        (0..self.nx)
            .min_by(|&a, &b| self.x_nm(a).abs().total_cmp(&self.x_nm(b).abs()))
            .unwrap_or(0)
    }

    /// Guided power in mW from the plane-wave Poynting approximation.
    pub fn power_mw(&self) -> f64 {
        carried_power_w(&self.field, self.n_eff, self.h_nm) * 1e3
    }

    pub fn decay_length_nm(&self) -> Result<f64> {
        evanescent_decay_length(self.n_eff, self.wavelength_nm)
    }

    /// Whether `other` lives on the same node grid.
    pub fn same_grid(&self, other: &ModeSolution) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.h_nm == other.h_nm
            && self.x0_nm == other.x0_nm
            && self.y0_nm == other.y0_nm
    }

    /// CSV with header `x_nm,y_nm,E`, field in V/m at 1 mW.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x_nm", "y_nm", "E"])?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                w.write_record([
                    fmt_sig(self.x_nm(i), 6),
                    fmt_sig(self.y_nm(j), 6),
                    fmt_sig(self.at(i, j), 6),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn carried_power_w(field: &[f64], n_eff: f64, h_nm: f64) -> f64 {
    let area = (h_nm * 1e-9).powi(2);
    let sum_sq: f64 = field.iter().map(|e| e * e).sum();
    0.5 * n_eff * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * sum_sq * area
}

/// Evanescent 1/e field decay length `1/γ`, `γ = k₀√(n_eff² − 1)`, in nm.
pub fn evanescent_decay_length(n_eff: f64, wavelength_nm: f64) -> Result<f64> {
    require_positive("wavelength_nm", wavelength_nm)?;
    if !(n_eff > 1.0) {
        return Err(Error::invalid("n_eff", format!("unguided: n_eff = {n_eff} ≤ 1")));
    }
    let gamma = 2.0 * PI / wavelength_nm * (n_eff * n_eff - 1.0).sqrt();
    Ok(1.0 / gamma)
}

/// Fundamental quasi-TE mode with the minimum window margin.
pub fn solve_mode(xs: &WaveguideCrossSection, wavelength_nm: f64, h_nm: f64) -> Result<ModeSolution> {
    solve_mode_with(xs, wavelength_nm, &ModeOptions::new(h_nm))
}

pub fn solve_mode_with(xs: &WaveguideCrossSection, wavelength_nm: f64, opts: &ModeOptions) -> Result<ModeSolution> {
    require_positive("wavelength_nm", wavelength_nm)?;
    let grid = CrossSectionGrid::new(xs, opts)?;
    let k0 = 2.0 * PI / wavelength_nm;
    let k0sq = k0 * k0;
    let (nx, ny, h) = (grid.nx, grid.ny, grid.h_nm);

    // Equivalent slab: thickest permittivity profile along y.
    let eps_max: Vec<f64> = (0..ny)
        .map(|j| grid.eps[j * nx..(j + 1) * nx].iter().copied().fold(f64::MIN, f64::max))
        .collect();
    let eps_min: Vec<f64> = (0..ny)
        .map(|j| grid.eps[j * nx..(j + 1) * nx].iter().copied().fold(f64::MAX, f64::min))
        .collect();
    let slab_top = tridiagonal_max_eigenvalue(
        &eps_max.iter().map(|e| k0sq * e - 2.0 / (h * h)).collect::<Vec<_>>(),
        1.0 / (h * h),
    );
    let sigma = slab_top * (1.0 + 1e-12) + 1e-18;

    let op = ShiftedOperator {
        nx,
        ny,
        inv_h2: 1.0 / (h * h),
        diag: grid.eps.iter().map(|e| sigma - k0sq * e).collect(),
    };
    let mut precond = SeparablePreconditioner::new(nx, ny, h, &eps_min, sigma, k0sq);

    // Start from the dielectric footprint.
    let mut x: Vec<f64> = grid.fill.iter().map(|f| f + 1e-3).collect();
    normalize(&mut x);
    let mut y = vec![0.0; nx * ny];
    let mut ws = CgWorkspace::new(nx * ny);
    let mut lambda_prev = f64::NAN;
    let mut lambda = f64::NAN;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=MAX_ITERATIONS {
        iterations = it;
        if lambda.is_finite() {
            let scale = 1.0 / (sigma - lambda);
            y.iter_mut().zip(&x).for_each(|(yi, xi)| *yi = xi * scale);
        } else {
            y.iter_mut().for_each(|v| *v = 0.0);
        }
        pcg(&op, &mut precond, &x, &mut y, &mut ws)?;
        // Rayleigh quotient of σ − A at y, using (σ − A) y = x.
        let yx = dot(&y, &x);
        let yy = dot(&y, &y);
        let mu = yx / yy;
        lambda = sigma - mu;
        x.copy_from_slice(&y);
        normalize(&mut x);
        if lambda_prev.is_finite() && ((lambda - lambda_prev) / lambda).abs() < EIGEN_TOLERANCE {
            converged = true;
            break;
        }
        lambda_prev = lambda;
    }
    if !converged {
        return Err(Error::NotConverged {
            solver: "mode solver",
            iterations,
            last_change: ((lambda - lambda_prev) / lambda).abs(),
        });
    }
    let n_eff = lambda.max(0.0).sqrt() / k0;
    if !(n_eff > xs.n_ambient) {
        return Err(Error::NoGuidedMode {
            n_eff,
            n_ambient: xs.n_ambient,
        });
    }

    // Positive lobe, 1 mW carried.
    let peak = x
        .iter()
        .copied()
        .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    let power = carried_power_w(&x, n_eff, h);
    let scale = (1e-3 / power).sqrt() * peak.signum();
    x.iter_mut().for_each(|v| *v *= scale);

    Ok(ModeSolution {
        wavelength_nm,
        n_eff,
        h_nm: h,
        nx,
        ny,
        x0_nm: grid.x0_nm,
        y0_nm: grid.y0_nm,
        surface_y_nm: xs.ridge_thickness_nm,
        n_ambient: xs.n_ambient,
        n_shift: sigma.sqrt() / k0,
        iterations,
        field: x,
        fill: grid.fill,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `diag` and constant off-diagonal `off`, by Sturm-count bisection.
fn tridiagonal_max_eigenvalue(diag: &[f64], off: f64) -> f64 {
    let below = |s: f64| {
        // Number of eigenvalues smaller than s.
        let mut count = 0;
        let mut q = 1.0;
        for (j, &d) in diag.iter().enumerate() {
            q = if j == 0 { d - s } else { d - s - off * off / q };
            if q == 0.0 {
                q = -1e-300;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    let n = diag.len();
    let mut hi = diag.iter().copied().fold(f64::MIN, f64::max) + 2.0 * off.abs();
    let mut lo = diag.iter().copied().fold(f64::MAX, f64::min) - 2.0 * off.abs();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `σ − A`: the negated Dirichlet Laplacian plus a diagonal.
struct ShiftedOperator {
    nx: usize,
    ny: usize,
    inv_h2: f64,
    diag: Vec<f64>,
}

impl ShiftedOperator {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let (nx, ny, c) = (self.nx, self.ny, self.inv_h2);
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let mut nb = 0.0;
                if i > 0 {
                    nb += x[k - 1];
                }
                if i + 1 < nx {
                    nb += x[k + 1];
                }
                if j > 0 {
                    nb += x[k - nx];
                }
                if j + 1 < ny {
                    nb += x[k + nx];
                }
                out[k] = (4.0 * c + self.diag[k]) * x[k] - c * nb;
            }
        }
    }
}

/// Exact inverse of `−Δ + σ − k₀² ε_m(y)` for an x-independent profile.
struct SeparablePreconditioner {
    nx: usize,
    ny: usize,
    dst: RowDst,
    /// Per sine mode along x: Thomas-algorithm coefficients along y.
    c_prime: Vec<f64>,
    inv_pivot: Vec<f64>,
    off: f64,
    transposed: Vec<f64>,
}

impl SeparablePreconditioner {
    fn new(nx: usize, ny: usize, h: f64, eps_profile: &[f64], sigma: f64, k0sq: f64) -> Self {
        let inv_h2 = 1.0 / (h * h);
        let off = -inv_h2;
        let mut c_prime = vec![0.0; nx * ny];
        let mut inv_pivot = vec![0.0; nx * ny];
        for k in 0..nx {
            let s = (PI * (k + 1) as f64 / (2.0 * (nx + 1) as f64)).sin();
            let mu = 4.0 * inv_h2 * s * s;
            let base = k * ny;
            let mut prev_c = 0.0;
            for j in 0..ny {
                let b = 2.0 * inv_h2 + sigma - k0sq * eps_profile[j] + mu;
                let pivot = if j == 0 { b } else { b - off * prev_c };
                inv_pivot[base + j] = 1.0 / pivot;
                prev_c = off / pivot;
                c_prime[base + j] = prev_c;
            }
        }
        SeparablePreconditioner {
            nx,
            ny,
            dst: RowDst::new(nx),
            c_prime,
            inv_pivot,
            off,
            transposed: vec![0.0; nx * ny],
        }
    }

    fn apply(&mut self, r: &[f64], z: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        z.copy_from_slice(r);
        self.dst.forward_rows(z);
        for j in 0..ny {
            for k in 0..nx {
                self.transposed[k * ny + j] = z[j * nx + k];
            }
        }
        for k in 0..nx {
            let base = k * ny;
            let d = &mut self.transposed[base..base + ny];
            let cp = &self.c_prime[base..base + ny];
            let ip = &self.inv_pivot[base..base + ny];
            let mut prev = 0.0;
            for j in 0..ny {
                let v = (d[j] - self.off * prev) * ip[j];
                d[j] = v;
                prev = v;
            }
            for j in (0..ny - 1).rev() {
                d[j] -= cp[j] * d[j + 1];
            }
        }
        for j in 0..ny {
            for k in 0..nx {
                z[j * nx + k] = self.transposed[k * ny + j];
            }
        }
        self.dst.inverse_rows(z);
    }
}

struct CgWorkspace {
    r: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl CgWorkspace {
    fn new(n: usize) -> Self {
        CgWorkspace {
            r: vec![0.0; n],
            z: vec![0.0; n],
            p: vec![0.0; n],
            q: vec![0.0; n],
        }
    }
}

/// Preconditioned conjugate gradients for `op · x = b`, starting from `x`.
fn pcg(
    op: &ShiftedOperator,
    precond: &mut SeparablePreconditioner,
    b: &[f64],
    x: &mut [f64],
    ws: &mut CgWorkspace,
) -> Result<usize> {
    let b_norm = dot(b, b).sqrt();
    op.apply(x, &mut ws.q);
    for i in 0..b.len() {
        ws.r[i] = b[i] - ws.q[i];
    }
    let tol = CG_TOLERANCE * b_norm;
    if dot(&ws.r, &ws.r).sqrt() <= tol {
        return Ok(0);
    }
    precond.apply(&ws.r, &mut ws.z);
    ws.p.copy_from_slice(&ws.z);
    let mut rz = dot(&ws.r, &ws.z);
    for it in 1..=CG_MAX_ITERATIONS {
        op.apply(&ws.p, &mut ws.q);
        let alpha = rz / dot(&ws.p, &ws.q);
        for i in 0..x.len() {
            x[i] += alpha * ws.p[i];
            ws.r[i] -= alpha * ws.q[i];
        }
        let r_norm = dot(&ws.r, &ws.r).sqrt();
        if r_norm <= tol {
            return Ok(it);
        }
        precond.apply(&ws.r, &mut ws.z);
        let rz_new = dot(&ws.r, &ws.z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..x.len() {
            ws.p[i] = ws.z[i] + beta * ws.p[i];
        }
    }
    Err(Error::NotConverged {
        solver: "mode solver inner CG",
        iterations: CG_MAX_ITERATIONS,
        last_change: dot(&ws.r, &ws.r).sqrt() / b_norm,
    })
}
