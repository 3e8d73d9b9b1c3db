//! Steady-state laser heating of a suspended membrane.
//!
//! The membrane is treated as a conducting sheet in the plane of the device:
//! heat absorbed along the waveguide spreads through the sheet to the
//! silicon supports and is radiated from both faces. Each cell of the
//! [`ThermalMask`] is a finite volume; the nonlinear balance is solved by
//! damped Newton iteration with preconditioned conjugate gradients for the
//! symmetric positive definite Jacobian.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::constants::STEFAN_BOLTZMANN;
use crate::error::{require_positive, Error, Result};
use crate::exec::Execution;
use crate::geometry::{
    rasterize_mask, CellKind, DesignFamily, DeviceDesign, MaterialProperties, ThermalMask, WaveguideCrossSection,
};
use crate::io::fmt_sig;
use crate::simplex::{nelder_mead, SimplexOptions};

/// Lower end of the failure-power bracket, in mW.
pub const BRACKET_START_MW: f64 = 10.0;
/// Power above which a device is reported as unbreakable, in mW.
pub const BRACKET_LIMIT_MW: f64 = 1000.0;
/// Bisection stops once the bracket is this narrow, in mW.
pub const FAILURE_POWER_TOL_MW: f64 = 0.1;
/// Consecutive residual increases that count as divergence.
const DIVERGENCE_WINDOW: usize = 50;
const CG_TOLERANCE: f64 = 1e-10;
const CG_MAX_ITERATIONS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalSettings {
    /// Newton iteration stops when no cell moves by more than this, in K.
    pub tol_k: f64,
    pub max_iter: usize,
    /// Fraction of each Newton step applied, in (0, 1].
    pub relax: f64,
}

impl Default for ThermalSettings {
    fn default() -> Self {
        ThermalSettings {
            tol_k: 0.01,
            max_iter: 10_000,
            relax: 1.0,
        }
    }
}

impl ThermalSettings {
    pub fn validate(&self) -> Result<()> {
        require_positive("thermal.tol_k", self.tol_k)?;
        if self.max_iter == 0 {
            return Err(Error::invalid("thermal.max_iter", "must be at least 1"));
        }
        if !(self.relax > 0.0 && self.relax <= 1.0) {
            return Err(Error::invalid("thermal.relax", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Converged temperature over the mask grid.
#[derive(Debug, Clone, Serialize)]
pub struct ThermalField {
    pub nx: usize,
    pub ny: usize,
    pub cell_um: f64,
    pub origin_um: (f64, f64),
    pub power_mw: f64,
    pub t_amb_k: f64,
    /// Largest temperature change of the final Newton step.
    pub residual_k: f64,
    pub iterations: usize,
    pub absorbed_w: f64,
    /// Heat conducted into the silicon supports.
    pub contact_flux_w: f64,
    pub radiated_w: f64,
    /// Temperature per cell in K; holes and contacts sit at ambient.
    #[serde(skip)]
    pub t_k: Vec<f64>,
}

impl ThermalField {
    pub fn center_um(&self, idx: usize) -> (f64, f64) {
        (
            self.origin_um.0 + (idx % self.nx) as f64 * self.cell_um,
            self.origin_um.1 + (idx / self.nx) as f64 * self.cell_um,
        )
    }

    /// Relative mismatch between absorbed and dissipated power.
    pub fn energy_imbalance(&self) -> f64 {
        if self.absorbed_w == 0.0 {
            return 0.0;
        }
        (self.absorbed_w - self.contact_flux_w - self.radiated_w).abs() / self.absorbed_w
    }

    /// CSV with header `x_um,y_um,T_K`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x_um", "y_um", "T_K"])?;
        for (idx, t) in self.t_k.iter().enumerate() {
            let (x, y) = self.center_um(idx);
            w.write_record([fmt_sig(x, 6), fmt_sig(y, 6), fmt_sig(*t, 6)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn peak_temperature(field: &ThermalField) -> f64 {
    field.t_k.iter().copied().fold(field.t_amb_k, f64::max)
}

/// Finite-volume system for one mask and material, independent of power.
#[derive(Debug, Clone)]
pub struct ThermalProblem {
    nx: usize,
    ny: usize,
    cell_um: f64,
    origin_um: (f64, f64),
    t_amb: f64,
    /// Cell index of each unknown.
    cells: Vec<usize>,
    /// Symmetric conductance graph in compressed rows, W/K.
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    g: Vec<f64>,
    /// Conductance to ambient-clamped silicon, W/K.
    g_contact: Vec<f64>,
    /// Two-sided radiation coefficient 2εσA, W/K⁴.
    rad: Vec<f64>,
    /// Heat deposited per watt launched into the waveguide.
    source: Vec<f64>,
}

impl ThermalProblem {
    /// Sheet model of `mask` heated by absorption along its waveguide path.
    pub fn new(mask: &ThermalMask, mat: &MaterialProperties) -> Result<Self> {
        mask.validate()?;
        mat.validate()?;
        let h = mask.cell_um * 1e-6;
        let alpha = mat.alpha_per_m();
        let mut per_cell = vec![0.0; mask.kinds.len()];
        for (n, &idx) in mask.path.iter().enumerate() {
            // Exact power lost over the cell's stretch of waveguide.
            let s0 = n as f64 * h;
            per_cell[idx] = mat.absorbed_fraction * ((-alpha * s0).exp() - (-alpha * (s0 + h)).exp());
        }
        Self::assemble(mask, mat, per_cell)
    }

    /// Same conduction and radiation, with an explicit heat load per cell
    /// in watts at unit power scale.
    pub fn with_source(mask: &ThermalMask, mat: &MaterialProperties, per_cell_w: Vec<f64>) -> Result<Self> {
        if per_cell_w.len() != mask.kinds.len() {
            return Err(Error::invalid("source", "one entry per mask cell required"));
        }
        if per_cell_w.iter().any(|q| !(*q >= 0.0)) {
            return Err(Error::invalid("source", "heat loads must be non-negative"));
        }
        mat.validate()?;
        Self::assemble(mask, mat, per_cell_w)
    }

    fn assemble(mask: &ThermalMask, mat: &MaterialProperties, per_cell: Vec<f64>) -> Result<Self> {
        let n = mask.kinds.len();
        if mask.thickness_nm.len() != n || mask.coverage.len() != n {
            return Err(Error::invalid("mask", "array sizes do not match"));
        }
        let k = mat.k_w_per_mk;
        let h = mask.cell_um * 1e-6;
        let solid = |i: usize| mask.kinds[i].is_solid();
        let touches_contact = |i: usize| mask.neighbours(i).any(|j| mask.kinds[j] == CellKind::SiliconContact);

        // Suspended islands cut off from silicon and unheated stay at
        // ambient; drop them so the system stays definite.
        let mut keep = vec![false; n];
        let mut seen = vec![false; n];
        for start in 0..n {
            if !solid(start) || seen[start] {
                continue;
            }
            let mut component = vec![start];
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(i) = queue.pop_front() {
                for j in mask.neighbours(i) {
                    if solid(j) && !seen[j] {
                        seen[j] = true;
                        component.push(j);
                        queue.push_back(j);
                    }
                }
            }
            let anchored = component.iter().any(|&i| touches_contact(i));
            let heated = component.iter().any(|&i| per_cell[i] > 0.0);
            if heated && !anchored && mat.emissivity == 0.0 {
                return Err(Error::invalid(
                    "mask",
                    "heated region has no path to silicon and cannot radiate",
                ));
            }
            if anchored || heated {
                for i in component {
                    keep[i] = true;
                }
            }
        }

        let mut unknown = vec![usize::MAX; n];
        let mut cells = Vec::new();
        for i in 0..n {
            if keep[i] {
                unknown[i] = cells.len();
                cells.push(i);
            }
        }
        let t_m = |i: usize| mask.thickness_nm[i] * 1e-9;
        let mut row_ptr = vec![0];
        let mut col = Vec::new();
        let mut g = Vec::new();
        let mut g_contact = Vec::with_capacity(cells.len());
        let mut rad = Vec::with_capacity(cells.len());
        let mut source = Vec::with_capacity(cells.len());
        let mut nbrs: Vec<usize> = Vec::with_capacity(4);
        for &i in &cells {
            let mut gc = 0.0;
            nbrs.clear();
            nbrs.extend(mask.neighbours(i));
            nbrs.sort_unstable();
            for &j in &nbrs {
                match mask.kinds[j] {
                    CellKind::SiliconContact => gc += 2.0 * k * t_m(i),
                    _ if keep[j] => {
                        let (a, b) = (t_m(i), t_m(j));
                        col.push(unknown[j]);
                        g.push(k * 2.0 * a * b / (a + b));
                    }
                    _ => {}
                }
            }
            row_ptr.push(col.len());
            g_contact.push(gc);
            rad.push(2.0 * mat.emissivity * STEFAN_BOLTZMANN * mask.coverage[i] * h * h);
            source.push(per_cell[i]);
        }
        Ok(ThermalProblem {
            nx: mask.nx,
            ny: mask.ny,
            cell_um: mask.cell_um,
            origin_um: mask.origin_um,
            t_amb: mat.t_amb_k,
            cells,
            row_ptr,
            col,
            g,
            g_contact,
            rad,
            source,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.cells.len()
    }

    /// Net heat leaving each cell minus the heat deposited in it.
    fn residual(&self, t: &[f64], power_w: f64, out: &mut [f64]) {
        let ta4 = self.t_amb.powi(4);
        for u in 0..t.len() {
            let mut f = self.g_contact[u] * (t[u] - self.t_amb);
            for e in self.row_ptr[u]..self.row_ptr[u + 1] {
                f += self.g[e] * (t[u] - t[self.col[e]]);
            }
            f += self.rad[u] * (t[u].powi(4) - ta4);
            out[u] = f - power_w * self.source[u];
        }
    }

    fn base_diag(&self) -> Vec<f64> {
        (0..self.cells.len())
            .map(|u| self.g_contact[u] + self.g[self.row_ptr[u]..self.row_ptr[u + 1]].iter().sum::<f64>())
            .collect()
    }

    /// Solves at `power_mw`, starting from `guess` (per unknown) if given.
    pub fn solve(
        &self,
        power_mw: f64,
        settings: &ThermalSettings,
        guess: Option<&ThermalField>,
    ) -> Result<ThermalField> {
        settings.validate()?;
        if !(power_mw >= 0.0) || !power_mw.is_finite() {
            return Err(Error::invalid("power_mw", "must be non-negative"));
        }
        let power_w = power_mw * 1e-3;
        let m = self.cells.len();
        let mut t: Vec<f64> = match guess {
            Some(f) if f.t_k.len() == self.nx * self.ny => self.cells.iter().map(|&c| f.t_k[c]).collect(),
            _ => vec![self.t_amb; m],
        };
        let base = self.base_diag();
        let mut f = vec![0.0; m];
        let mut step = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut ws = CgWorkspace::new(m);
        let mut prev_res = f64::INFINITY;
        let mut growth = 0;
        let mut last_update = f64::INFINITY;
        let mut iterations = 0;
        let mut converged = m == 0;
        while !converged && iterations < settings.max_iter {
            iterations += 1;
            self.residual(&t, power_w, &mut f);
            let res = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if res > prev_res {
                growth += 1;
                if growth >= DIVERGENCE_WINDOW {
                    return Err(Error::Diverged {
                        solver: "thermal Newton",
                        iterations,
                    });
                }
            } else {
                growth = 0;
            }
            prev_res = res;
            for u in 0..m {
                diag[u] = base[u] + 4.0 * self.rad[u] * t[u].powi(3);
                f[u] = -f[u];
            }
            step.iter_mut().for_each(|s| *s = 0.0);
            self.pcg(&diag, &f, &mut step, &mut ws)?;
            last_update = 0.0;
            for u in 0..m {
                let next = (t[u] + settings.relax * step[u]).max(self.t_amb);
                last_update = last_update.max((next - t[u]).abs());
                t[u] = next;
            }
            if !last_update.is_finite() {
                return Err(Error::Diverged {
                    solver: "thermal Newton",
                    iterations,
                });
            }
            converged = last_update < settings.tol_k;
        }
        if !converged {
            return Err(Error::NotConverged {
                solver: "thermal Newton",
                iterations,
                last_change: last_update,
            });
        }

        let ta4 = self.t_amb.powi(4);
        let mut field = vec![self.t_amb; self.nx * self.ny];
        let (mut absorbed, mut contact, mut radiated) = (0.0, 0.0, 0.0);
        for (u, &c) in self.cells.iter().enumerate() {
            field[c] = t[u];
            absorbed += power_w * self.source[u];
            contact += self.g_contact[u] * (t[u] - self.t_amb);
            radiated += self.rad[u] * (t[u].powi(4) - ta4);
        }
        Ok(ThermalField {
            nx: self.nx,
            ny: self.ny,
            cell_um: self.cell_um,
            origin_um: self.origin_um,
            power_mw,
            t_amb_k: self.t_amb,
            residual_k: if m == 0 { 0.0 } else { last_update },
            iterations,
            absorbed_w: absorbed,
            contact_flux_w: contact,
            radiated_w: radiated,
            t_k: field,
        })
    }

    fn apply(&self, diag: &[f64], x: &[f64], out: &mut [f64]) {
        for u in 0..x.len() {
            let mut v = diag[u] * x[u];
            for e in self.row_ptr[u]..self.row_ptr[u + 1] {
                v -= self.g[e] * x[self.col[e]];
            }
            out[u] = v;
        }
    }

    /// Conjugate gradients on the Jacobian `L + diag`, preconditioned by
    /// the incomplete Cholesky factor with the matrix's own sparsity.
    fn pcg(&self, diag: &[f64], b: &[f64], x: &mut [f64], ws: &mut CgWorkspace) -> Result<usize> {
        let m = b.len();
        // Pivots of the IC(0) factor; lower neighbours come first in each row.
        for u in 0..m {
            let mut d = diag[u];
            for e in self.row_ptr[u]..self.row_ptr[u + 1] {
                let v = self.col[e];
                if v < u {
                    d -= self.g[e] * self.g[e] / ws.pivot[v];
                }
            }
            ws.pivot[u] = d;
        }
        let precondition = |r: &[f64], z: &mut [f64], pivot: &[f64]| {
            for u in 0..m {
                let mut s = r[u];
                for e in self.row_ptr[u]..self.row_ptr[u + 1] {
                    let v = self.col[e];
                    if v < u {
                        s += self.g[e] * z[v];
                    }
                }
                z[u] = s / pivot[u];
            }
            for u in (0..m).rev() {
                let mut s = 0.0;
                for e in self.row_ptr[u]..self.row_ptr[u + 1] {
                    let v = self.col[e];
                    if v > u {
                        s += self.g[e] * z[v];
                    }
                }
                z[u] += s / pivot[u];
            }
        };

        let b_norm = norm(b);
        if b_norm == 0.0 {
            return Ok(0);
        }
        self.apply(diag, x, &mut ws.q);
        for u in 0..m {
            ws.r[u] = b[u] - ws.q[u];
        }
        let tol = CG_TOLERANCE * b_norm;
        precondition(&ws.r, &mut ws.z, &ws.pivot);
        ws.p.copy_from_slice(&ws.z);
        let mut rz = dot(&ws.r, &ws.z);
        for it in 1..=CG_MAX_ITERATIONS {
            self.apply(diag, &ws.p, &mut ws.q);
            let alpha = rz / dot(&ws.p, &ws.q);
            for u in 0..m {
                x[u] += alpha * ws.p[u];
                ws.r[u] -= alpha * ws.q[u];
            }
            if norm(&ws.r) <= tol {
                return Ok(it);
            }
            precondition(&ws.r, &mut ws.z, &ws.pivot);
            let rz_new = dot(&ws.r, &ws.z);
            let beta = rz_new / rz;
            rz = rz_new;
            for u in 0..m {
                ws.p[u] = ws.z[u] + beta * ws.p[u];
            }
        }
        Err(Error::NotConverged {
            solver: "thermal CG",
            iterations: CG_MAX_ITERATIONS,
            last_change: norm(&ws.r) / b_norm,
        })
    }
}

struct CgWorkspace {
    r: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    pivot: Vec<f64>,
}

impl CgWorkspace {
    fn new(m: usize) -> Self {
        CgWorkspace {
            r: vec![0.0; m],
            z: vec![0.0; m],
            p: vec![0.0; m],
            q: vec![0.0; m],
            pivot: vec![0.0; m],
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn steady_state_temperature(
    mask: &ThermalMask,
    mat: &MaterialProperties,
    power_mw: f64,
    settings: &ThermalSettings,
) -> Result<ThermalField> {
    ThermalProblem::new(mask, mat)?.solve(power_mw, settings, None)
}

/// Waveguide power at which the peak temperature reaches `mat.t_fail_k`.
pub fn failure_power(mask: &ThermalMask, mat: &MaterialProperties, settings: &ThermalSettings) -> Result<f64> {
    let problem = ThermalProblem::new(mask, mat)?;
    failure_power_of(&problem, mat.t_fail_k, settings)
}

fn failure_power_of(problem: &ThermalProblem, t_fail: f64, settings: &ThermalSettings) -> Result<f64> {
    let mut lo = 0.0;
    let mut lo_field: Option<ThermalField> = None;
    let mut hi = BRACKET_START_MW;
    loop {
        let field = problem.solve(hi, settings, lo_field.as_ref())?;
        if peak_temperature(&field) >= t_fail {
            break;
        }
        if hi >= BRACKET_LIMIT_MW {
            return Err(Error::Bracket(format!(
                "peak temperature {:.0} K at {BRACKET_LIMIT_MW} mW is still below {t_fail} K",
                peak_temperature(&field)
            )));
        }
        lo = hi;
        lo_field = Some(field);
        hi = (2.0 * hi).min(BRACKET_LIMIT_MW);
    }
    while hi - lo > FAILURE_POWER_TOL_MW {
        let mid = 0.5 * (lo + hi);
        let field = problem.solve(mid, settings, lo_field.as_ref())?;
        if peak_temperature(&field) >= t_fail {
            hi = mid;
        } else {
            lo = mid;
            lo_field = Some(field);
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FailurePoint {
    pub span_um: f64,
    pub p_fail_mw: f64,
}

/// Design template for failure curves: everything except the span.
#[derive(Debug, Clone, Copy)]
pub struct CurveSetup {
    pub family: DesignFamily,
    pub strip_width_um: f64,
    pub xsection: WaveguideCrossSection,
    pub cell_um: f64,
}

impl CurveSetup {
    pub fn design(&self, span_um: f64) -> DeviceDesign {
        DeviceDesign::new(self.family.with_span(span_um)).with_strip_width(self.strip_width_um)
    }
}

/// Failure power for each span; spans are evaluated concurrently.
pub fn failure_power_curve(
    setup: &CurveSetup,
    spans_um: &[f64],
    mat: &MaterialProperties,
    settings: &ThermalSettings,
    exec: Execution,
) -> Result<Vec<FailurePoint>> {
    if spans_um.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("spans_um", "must be strictly ascending"));
    }
    exec.map(spans_um, |&span| {
        let mask = rasterize_mask(&setup.design(span), &setup.xsection, setup.cell_um)?;
        Ok(FailurePoint {
            span_um: span,
            p_fail_mw: failure_power(&mask, mat, settings)?,
        })
    })
    .into_iter()
    .collect()
}

/// CSV with header `span_um,p_fail_mw`.
pub fn write_curve_csv<W: Write>(points: &[FailurePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["span_um", "p_fail_mw"])?;
    for p in points {
        w.write_record([fmt_sig(p.span_um, 6), fmt_sig(p.p_fail_mw, 6)])?;
    }
    w.flush()?;
    Ok(())
}

/// A measured or simulated peak temperature to fit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CalibrationTarget {
    pub design: DeviceDesign,
    pub power_mw: f64,
    pub peak_k: f64,
}

/// Peak-temperature anchors at 10 mW: 1200 K for the 125 µm infinity hole
/// and 1400 K for the 250 µm / 460 µm needle device.
pub fn reference_targets() -> Vec<CalibrationTarget> {
    vec![
        CalibrationTarget {
            design: DeviceDesign::new(DesignFamily::Infinity.with_span(125.0)),
            power_mw: 10.0,
            peak_k: 1200.0,
        },
        CalibrationTarget {
            design: DeviceDesign::new(DesignFamily::HybridNeedle.with_span(250.0)),
            power_mw: 10.0,
            peak_k: 1400.0,
        },
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub emissivity: f64,
    pub strip_width_um: f64,
    /// Model peak temperature for each target at the fitted parameters.
    pub peaks_k: Vec<f64>,
    pub evaluations: usize,
}

impl Calibration {
    pub fn apply(&self, mat: &MaterialProperties) -> MaterialProperties {
        MaterialProperties {
            emissivity: self.emissivity,
            ..*mat
        }
    }
}

/// Allowed strip widths during calibration, in µm. The strip has to stay
/// narrower than the 100 µm needle-tip taper it widens into.
pub const STRIP_RANGE_UM: (f64, f64) = (2.0, 90.0);

/// Fits emissivity and strip width so the model peaks match `targets`,
/// minimizing the summed squared log ratio of temperature rises.
pub fn calibrate(
    targets: &[CalibrationTarget],
    xsection: &WaveguideCrossSection,
    mat: &MaterialProperties,
    cell_um: f64,
    settings: &ThermalSettings,
) -> Result<Calibration> {
    if targets.is_empty() {
        return Err(Error::invalid("targets", "at least one calibration target is required"));
    }
    for t in targets {
        if !(t.peak_k > mat.t_amb_k) {
            return Err(Error::invalid("peak_k", "target must exceed the ambient temperature"));
        }
    }
    let peaks = |emissivity: f64, strip: f64| -> Result<Vec<f64>> {
        let m = MaterialProperties { emissivity, ..*mat };
        Execution::default()
            .map(targets, |t| {
                let design = t.design.with_strip_width(strip);
                let mask = rasterize_mask(&design, xsection, cell_um)?;
                steady_state_temperature(&mask, &m, t.power_mw, settings).map(|f| peak_temperature(&f))
            })
            .into_iter()
            .collect()
    };
    let objective = |p: &[f64]| {
        let (eps, strip) = (p[0].exp(), p[1].exp());
        if eps > 1.0 || !(STRIP_RANGE_UM.0..=STRIP_RANGE_UM.1).contains(&strip) {
            return f64::INFINITY;
        }
        match peaks(eps, strip) {
            Ok(v) => v
                .iter()
                .zip(targets)
                .map(|(p, t)| ((p - mat.t_amb_k) / (t.peak_k - mat.t_amb_k)).ln().powi(2))
                .sum(),
            Err(_) => f64::INFINITY,
        }
    };
    let start = [mat.emissivity.max(1e-4).ln(), targets[0].design.strip_width_um.ln()];
    let opts = SimplexOptions {
        x_tol: vec![0.01, 0.01],
        f_tol_rel: 0.0,
        max_evals: 200,
    };
    let fit = nelder_mead(objective, &start, &[0.7, 0.5], &opts);
    if !fit.f.is_finite() {
        return Err(Error::NotConverged {
            solver: "thermal calibration",
            iterations: fit.evaluations,
            last_change: f64::INFINITY,
        });
    }
    let (emissivity, strip_width_um) = (fit.x[0].exp(), fit.x[1].exp());
    Ok(Calibration {
        emissivity,
        strip_width_um,
        peaks_k: peaks(emissivity, strip_width_um)?,
        evaluations: fit.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A single row of `n` ridge cells clamped by contacts at both ends.
    pub(crate) fn rod(n: usize, cell_um: f64, thickness_nm: f64) -> ThermalMask {
        let nx = n + 2;
        let mut kinds = vec![CellKind::Ridge; nx];
        kinds[0] = CellKind::SiliconContact;
        kinds[nx - 1] = CellKind::SiliconContact;
        let mut thickness = vec![thickness_nm; nx];
        thickness[0] = 0.0;
        thickness[nx - 1] = 0.0;
        let mut coverage = vec![1.0; nx];
        coverage[0] = 0.0;
        coverage[nx - 1] = 0.0;
        ThermalMask {
            nx,
            ny: 1,
            cell_um,
            origin_um: (0.0, 0.0),
            kinds,
            thickness_nm: thickness,
            coverage,
            path: (1..=n).collect(),
        }
    }

    #[test]
    fn zero_power_stays_ambient() {
        let mask = rod(50, 2.0, 100.0);
        let f =
            steady_state_temperature(&mask, &MaterialProperties::default(), 0.0, &ThermalSettings::default()).unwrap();
        assert!(f.t_k.iter().all(|&t| t == 300.0));
        assert_eq!(peak_temperature(&f), 300.0);
    }

    #[test]
    fn settings_are_checked() {
        let bad = ThermalSettings {
            relax: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ThermalSettings {
            tol_k: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let mask = rod(50, 2.0, 100.0);
        let settings = ThermalSettings {
            max_iter: 1,
            ..Default::default()
        };
        let err = steady_state_temperature(&mask, &MaterialProperties::default(), 5.0, &settings).unwrap_err();
        assert!(err.is_convergence(), "{err}");
    }

    #[test]
    fn unbreakable_device_is_a_bracket_failure() {
        let mask = rod(20, 1.0, 100.0);
        let mat = MaterialProperties {
            k_w_per_mk: 1000.0,
            ..Default::default()
        };
        let err = failure_power(&mask, &mat, &ThermalSettings::default()).unwrap_err();
        assert!(matches!(err, Error::Bracket(_)));
    }
}
