//! Two-color evanescent-field dipole trap for ground-state Cs.
//!
//! A blue-detuned mode (793 nm) repels atoms from the surface and a
//! red-detuned mode (937 nm) attracts them; with the blue field decaying
//! faster, their sum has a minimum a little above the ridge top.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::constants::{
    AtomicLine, ATOMIC_UNIT_POLARIZABILITY, BOLTZMANN, CS_LINES, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY,
};
use crate::error::{require_positive, Error, Result};
use crate::geometry::WaveguideCrossSection;
use crate::io::fmt_sig;
use crate::modesolver::{solve_mode, ModeSolution};

pub const BLUE_WAVELENGTH_NM: f64 = 793.0;
pub const RED_WAVELENGTH_NM: f64 = 937.0;
/// Reference operating point of the two colors.
pub const REFERENCE_BLUE_MW: f64 = 3.27;
pub const REFERENCE_RED_MW: f64 = 2.73;
/// Closest approach to a D line accepted by the far-detuned model.
pub const RESONANCE_EXCLUSION_NM: f64 = 1.0;
/// Grid spacing used when a caller does not choose one.
pub const DEFAULT_H_NM: f64 = 10.0;

/// Blue share of the total power at the reference operating point.
pub fn reference_blue_fraction() -> f64 {
    REFERENCE_BLUE_MW / (REFERENCE_BLUE_MW + REFERENCE_RED_MW)
}

/// Scalar ground-state polarizability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Polarizability {
    pub wavelength_nm: f64,
    /// C·m²/V.
    pub alpha_si: f64,
}

impl Polarizability {
    pub fn atomic_units(&self) -> f64 {
        self.alpha_si / ATOMIC_UNIT_POLARIZABILITY
    }
}

fn angular_frequency(wavelength_nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / (wavelength_nm * 1e-9)
}

fn line_contribution(line: &AtomicLine, omega: f64) -> f64 {
    let w0 = angular_frequency(line.wavelength_nm);
    let gamma = 2.0 * PI * line.linewidth_hz;
    line.weight * 3.0 * PI * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT.powi(3) * gamma / w0.powi(3)
        * (1.0 / (w0 - omega) + 1.0 / (w0 + omega))
}

/// Far-detuned two-line polarizability of the Cs 6S₁/₂ ground state.
pub fn cs_ground_polarizability(wavelength_nm: f64) -> Result<Polarizability> {
    require_positive("wavelength_nm", wavelength_nm)?;
    for line in &CS_LINES {
        if (wavelength_nm - line.wavelength_nm).abs() < RESONANCE_EXCLUSION_NM {
            return Err(Error::invalid(
                "wavelength_nm",
                format!(
                    "{wavelength_nm} nm is within {RESONANCE_EXCLUSION_NM} nm of the Cs {} line",
                    line.name
                ),
            ));
        }
    }
    let omega = angular_frequency(wavelength_nm);
    let alpha_si = CS_LINES.iter().map(|l| line_contribution(l, omega)).sum();
    Ok(Polarizability {
        wavelength_nm,
        alpha_si,
    })
}

/// Potential energy over a mode grid, expressed as U/k_B in µK.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialMap {
    pub nx: usize,
    pub ny: usize,
    pub h_nm: f64,
    pub x0_nm: f64,
    pub y0_nm: f64,
    pub surface_y_nm: f64,
    pub power_mw: f64,
    #[serde(skip)]
    pub u_uk: Vec<f64>,
    /// Dielectric fill per node, zero in vacuum.
    #[serde(skip)]
    pub fill: Vec<f64>,
}

impl PotentialMap {
    pub fn x_nm(&self, i: usize) -> f64 {
        self.x0_nm + i as f64 * self.h_nm
    }

    pub fn y_nm(&self, j: usize) -> f64 {
        self.y0_nm + j as f64 * self.h_nm
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.u_uk[j * self.nx + i]
    }

    fn same_grid(&self, other: &PotentialMap) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.h_nm == other.h_nm
            && self.x0_nm == other.x0_nm
            && self.y0_nm == other.y0_nm
    }

    /// CSV with header `x_nm,y_nm,U_uK`, one row per node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x_nm", "y_nm", "U_uK"])?;
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

/// `U = −¼ α |E|² P` for a mode normalized to 1 mW, in µK.
pub fn dipole_potential(mode: &ModeSolution, power_mw: f64, alpha: &Polarizability) -> Result<PotentialMap> {
    if !(power_mw >= 0.0) || !power_mw.is_finite() {
        return Err(Error::invalid("power_mw", "must be non-negative"));
    }
    if (alpha.wavelength_nm - mode.wavelength_nm).abs() > 1e-6 {
        return Err(Error::invalid(
            "alpha",
            format!(
                "polarizability at {} nm applied to a {} nm mode",
                alpha.wavelength_nm, mode.wavelength_nm
            ),
        ));
    }
    if (mode.power_mw() - 1.0).abs() > 1e-3 {
        return Err(Error::invalid("mode", "field is not normalized to 1 mW"));
    }
    let scale = -0.25 * alpha.alpha_si * power_mw / BOLTZMANN * 1e6;
    Ok(PotentialMap {
        nx: mode.nx,
        ny: mode.ny,
        h_nm: mode.h_nm,
        x0_nm: mode.x0_nm,
        y0_nm: mode.y0_nm,
        surface_y_nm: mode.surface_y_nm,
        power_mw,
        u_uk: mode.field.iter().map(|e| scale * e * e).collect(),
        fill: mode.fill.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrapReport {
    pub p_blue_mw: f64,
    pub p_red_mw: f64,
    pub depth_uk: f64,
    pub u_min_uk: f64,
    /// Trap position relative to the center of the ridge top surface.
    pub min_x_nm: f64,
    pub min_height_nm: f64,
    /// Highest potential between the minimum and the surface along the
    /// vertical line through the minimum.
    pub barrier_uk: f64,
    /// Lowest pass from the minimum to any dielectric surface over the
    /// whole map. Diagnostic only; it does not enter `depth_uk`.
    pub saddle_barrier_uk: f64,
    pub saddle_x_nm: f64,
    pub saddle_height_nm: f64,
    #[serde(skip)]
    pub total: PotentialMap,
}

impl TrapReport {
    /// Flat `key: value` record.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let rows = [
            ("p_blue_mw", self.p_blue_mw),
            ("p_red_mw", self.p_red_mw),
            ("depth_uk", self.depth_uk),
            ("u_min_uk", self.u_min_uk),
            ("min_x_nm", self.min_x_nm),
            ("min_height_nm", self.min_height_nm),
            ("barrier_uk", self.barrier_uk),
            ("saddle_barrier_uk", self.saddle_barrier_uk),
            ("saddle_x_nm", self.saddle_x_nm),
            ("saddle_height_nm", self.saddle_height_nm),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k}: {}", fmt_sig(v, 6));
        }
        s
    }
}

fn center_column(map: &PotentialMap) -> usize {
    (0..map.nx)
        .min_by(|&a, &b| map.x_nm(a).abs().total_cmp(&map.x_nm(b).abs()))
        .unwrap_or(0)
}

pub fn combine_and_characterize(blue: &PotentialMap, red: &PotentialMap) -> Result<TrapReport> {
    if !blue.same_grid(red) {
        return Err(Error::GridMismatch(format!(
            "blue map {}×{} at {} nm vs red map {}×{} at {} nm",
            blue.nx, blue.ny, blue.h_nm, red.nx, red.ny, red.h_nm
        )));
    }
    let mut total = blue.clone();
    total.power_mw = blue.power_mw + red.power_mw;
    total.u_uk.iter_mut().zip(&red.u_uk).for_each(|(a, b)| *a += b);

    let (nx, ny, h) = (total.nx, total.ny, total.h_nm);
    let ic = center_column(&total);
    let first = (0..ny)
        .find(|&j| total.y_nm(j) > total.surface_y_nm && total.fill[j * nx + ic] == 0.0)
        .ok_or_else(|| Error::NoTrap("no vacuum above the surface".into()))?;
    let line: Vec<f64> = (first..ny).map(|j| total.at(ic, j)).collect();
    let (k, &u_node) = line
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty line");
    if k == 0 || k + 1 == line.len() {
        return Err(Error::NoTrap("potential has no minimum above the surface".into()));
    }

    // Parabola through the minimum node and its neighbours.
    let (um, up) = (line[k - 1], line[k + 1]);
    let curv = um - 2.0 * u_node + up;
    let (offset, u_min) = if curv > 0.0 {
        let t = 0.5 * (um - up) / curv;
        (t * h, u_node - 0.125 * (up - um) * (up - um) / curv)
    } else {
        (0.0, u_node)
    };
    let barrier = line[..k].iter().copied().fold(f64::MIN, f64::max);
    let depth = (-u_min).min(barrier - u_min);
    if !(depth > 0.0) {
        return Err(Error::NoTrap(format!("depth {depth:.3e} µK is not positive")));
    }
    let j_min = first + k;
    let (saddle, si, sj) = surface_saddle(&total, ic, j_min);

    Ok(TrapReport {
        p_blue_mw: blue.power_mw,
        p_red_mw: red.power_mw,
        depth_uk: depth,
        u_min_uk: u_min,
        min_x_nm: total.x_nm(ic),
        min_height_nm: total.y_nm(j_min) + offset - total.surface_y_nm,
        barrier_uk: barrier,
        saddle_barrier_uk: saddle,
        saddle_x_nm: total.x_nm(si),
        saddle_height_nm: total.y_nm(sj) - total.surface_y_nm,
        total,
    })
}

#[derive(PartialEq)]
struct Frontier {
    level: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.level.total_cmp(&self.level).then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimax path from the trap node through vacuum to any node touching
/// dielectric. Returns the pass height and where it is reached.
fn surface_saddle(map: &PotentialMap, i0: usize, j0: usize) -> (f64, usize, usize) {
    let (nx, ny) = (map.nx, map.ny);
    let n = nx * ny;
    let start = j0 * nx + i0;
    let mut level = vec![f64::INFINITY; n];
    // Node at which each path's maximum is attained.
    let mut peak_at = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    level[start] = map.u_uk[start];
    peak_at[start] = start;
    heap.push(Frontier {
        level: level[start],
        node: start,
    });
    let neighbours = |k: usize| {
        let (i, j) = (k % nx, k / nx);
        [
            (i > 0).then(|| k - 1),
            (i + 1 < nx).then(|| k + 1),
            (j > 0).then(|| k - nx),
            (j + 1 < ny).then(|| k + nx),
        ]
    };
    while let Some(Frontier { level: lv, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        if neighbours(node).iter().flatten().any(|&m| map.fill[m] > 0.0) {
            let p = peak_at[node];
            return (lv, p % nx, p / nx);
        }
        for m in neighbours(node).into_iter().flatten() {
            if done[m] || map.fill[m] > 0.0 {
                continue;
            }
            let (cand, at) = if map.u_uk[m] > lv {
                (map.u_uk[m], m)
            } else {
                (lv, peak_at[node])
            };
            if cand < level[m] {
                level[m] = cand;
                peak_at[m] = at;
                heap.push(Frontier { level: cand, node: m });
            }
        }
    }
    (f64::INFINITY, i0, j0)
}

/// Both trap colors solved once for a cross-section, for repeated
/// evaluation at different powers.
#[derive(Debug, Clone)]
pub struct TrapModel {
    pub blue_mode: ModeSolution,
    pub red_mode: ModeSolution,
    pub blue_alpha: Polarizability,
    pub red_alpha: Polarizability,
}

impl TrapModel {
    pub fn new(xs: &WaveguideCrossSection, h_nm: f64) -> Result<Self> {
        Self::with_wavelengths(xs, h_nm, BLUE_WAVELENGTH_NM, RED_WAVELENGTH_NM)
    }

    pub fn with_wavelengths(xs: &WaveguideCrossSection, h_nm: f64, blue_nm: f64, red_nm: f64) -> Result<Self> {
        let blue_alpha = cs_ground_polarizability(blue_nm)?;
        let red_alpha = cs_ground_polarizability(red_nm)?;
        if !(blue_alpha.alpha_si < 0.0 && red_alpha.alpha_si > 0.0) {
            return Err(Error::invalid(
                "wavelengths",
                "need a blue-detuned (α < 0) and a red-detuned (α > 0) color",
            ));
        }
        Ok(TrapModel {
            blue_mode: solve_mode(xs, blue_nm, h_nm)?,
            red_mode: solve_mode(xs, red_nm, h_nm)?,
            blue_alpha,
            red_alpha,
        })
    }

    pub fn characterize(&self, p_blue_mw: f64, p_red_mw: f64) -> Result<TrapReport> {
        let blue = dipole_potential(&self.blue_mode, p_blue_mw, &self.blue_alpha)?;
        let red = dipole_potential(&self.red_mode, p_red_mw, &self.red_alpha)?;
        combine_and_characterize(&blue, &red)
    }

    /// Report at a total power split with the given blue fraction.
    pub fn at_total_power(&self, p_total_mw: f64, blue_fraction: f64) -> Result<TrapReport> {
        if !(blue_fraction > 0.0 && blue_fraction < 1.0) {
            return Err(Error::invalid("ratio", "blue fraction must lie in (0, 1)"));
        }
        require_positive("p_total_mw", p_total_mw)?;
        self.characterize(p_total_mw * blue_fraction, p_total_mw * (1.0 - blue_fraction))
    }
}

/// Trap depth in µK for a total power and blue fraction.
pub fn depth_vs_power(xs: &WaveguideCrossSection, p_total_mw: f64, blue_fraction: f64) -> Result<f64> {
    if !(blue_fraction > 0.0 && blue_fraction < 1.0) {
        return Err(Error::invalid("ratio", "blue fraction must lie in (0, 1)"));
    }
    TrapModel::new(xs, DEFAULT_H_NM)?
        .at_total_power(p_total_mw, blue_fraction)
        .map(|r| r.depth_uk)
}
