//! Grid sweeps over the waveguide cross-section and depth-per-mW
//! optimization.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::atomtrap::{reference_blue_fraction, TrapModel, BLUE_WAVELENGTH_NM, RED_WAVELENGTH_NM};
use crate::error::{require_positive, Error, Result};
use crate::exec::Execution;
use crate::geometry::{rasterize_mask, DesignFamily, DeviceDesign, MaterialProperties, WaveguideCrossSection};
use crate::io::fmt_sig;
use crate::simplex::{nelder_mead, SimplexOptions};
use crate::thermal::{failure_power, ThermalSettings};

pub const DEFAULT_POINT_CAP: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Trap depth per mW of total power, µK/mW.
    DepthPerMw,
    /// Trap depth at `power_mw`, µK.
    DepthAtPower,
    /// Failure power of the thermal device, mW.
    PFail,
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "depth_per_mw" => Ok(Objective::DepthPerMw),
            "depth_at_power" => Ok(Objective::DepthAtPower),
            "p_fail" => Ok(Objective::PFail),
            other => Err(Error::invalid("objective", format!("unknown objective `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub w_wg_um: Vec<f64>,
    pub t_wg_nm: Vec<f64>,
    pub t_mem_nm: Vec<f64>,
    pub objective: Objective,
    pub n_core: f64,
    pub n_ambient: f64,
    pub blue_nm: f64,
    pub red_nm: f64,
    /// Share of the total power at the blue wavelength.
    pub blue_fraction: f64,
    /// Total power for `depth_at_power`.
    pub power_mw: f64,
    pub h_nm: f64,
    pub max_points: usize,
    /// Device used by the `p_fail` objective.
    pub family: DesignFamily,
    pub span_um: f64,
    pub strip_width_um: f64,
    pub cell_um: f64,
    pub material: MaterialProperties,
    pub thermal: ThermalSettings,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let xs = WaveguideCrossSection::reference();
        SweepSpec {
            w_wg_um: vec![xs.width_um],
            t_wg_nm: vec![xs.ridge_thickness_nm],
            t_mem_nm: vec![xs.membrane_thickness_nm],
            objective: Objective::DepthPerMw,
            n_core: xs.n_core,
            n_ambient: xs.n_ambient,
            blue_nm: BLUE_WAVELENGTH_NM,
            red_nm: RED_WAVELENGTH_NM,
            blue_fraction: reference_blue_fraction(),
            power_mw: 6.0,
            h_nm: 10.0,
            max_points: DEFAULT_POINT_CAP,
            family: DesignFamily::Infinity,
            span_um: 125.0,
            strip_width_um: crate::geometry::DEFAULT_STRIP_WIDTH_UM,
            cell_um: 5.0,
            material: MaterialProperties::default(),
            thermal: ThermalSettings::default(),
        }
    }
}

impl SweepSpec {
    pub fn points(&self) -> usize {
        self.w_wg_um.len() * self.t_wg_nm.len() * self.t_mem_nm.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [
            ("w_wg_um", &self.w_wg_um),
            ("t_wg_nm", &self.t_wg_nm),
            ("t_mem_nm", &self.t_mem_nm),
        ] {
            if axis.is_empty() {
                return Err(Error::invalid(name, "axis has no values"));
            }
            for &v in axis.iter() {
                require_positive(name, v)?;
            }
        }
        // A membrane value that fits under no ridge can never be evaluated;
        // pairs that clash only with some ridges come back as "invalid" rows.
        let thickest_ridge = self.t_wg_nm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if let Some(t) = self.t_mem_nm.iter().find(|&&t| t >= thickest_ridge) {
            return Err(Error::invalid(
                "t_mem_nm",
                format!("membrane {t} nm is not thinner than any ridge (max {thickest_ridge} nm)"),
            ));
        }
        if !(self.blue_fraction > 0.0 && self.blue_fraction < 1.0) {
            return Err(Error::invalid("blue_fraction", "must lie in (0, 1)"));
        }
        require_positive("power_mw", self.power_mw)?;
        if self.points() > self.max_points {
            return Err(Error::CapExceeded {
                points: self.points(),
                cap: self.max_points,
            });
        }
        Ok(())
    }

    fn xsection(&self, p: &GridPoint) -> Result<WaveguideCrossSection> {
        WaveguideCrossSection::new(p.w_wg_um, p.t_wg_nm, p.t_mem_nm, self.n_core, self.n_ambient)
    }

    /// Objective value and trap height at one cross-section.
    fn evaluate(&self, p: &GridPoint) -> Result<(f64, Option<f64>)> {
        let xs = self.xsection(p)?;
        match self.objective {
            Objective::DepthPerMw | Objective::DepthAtPower => {
                let model = TrapModel::with_wavelengths(&xs, self.h_nm, self.blue_nm, self.red_nm)?;
                let power = match self.objective {
                    Objective::DepthPerMw => 1.0,
                    _ => self.power_mw,
                };
                let r = model.at_total_power(power, self.blue_fraction)?;
                Ok((r.depth_uk, Some(r.min_height_nm)))
            }
            Objective::PFail => {
                let design =
                    DeviceDesign::new(self.family.with_span(self.span_um)).with_strip_width(self.strip_width_um);
                let mask = rasterize_mask(&design, &xs, self.cell_um)?;
                Ok((failure_power(&mask, &self.material, &self.thermal)?, None))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub w_wg_um: f64,
    pub t_wg_nm: f64,
    pub t_mem_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(flatten)]
    pub point: GridPoint,
    pub objective: Option<f64>,
    /// "ok", or the reason the point failed.
    pub status: String,
    pub trap_height_nm: Option<f64>,
}

fn grid(spec: &SweepSpec) -> Vec<GridPoint> {
    let mut pts = Vec::with_capacity(spec.points());
    for &w in &spec.w_wg_um {
        for &t in &spec.t_wg_nm {
            for &m in &spec.t_mem_nm {
                pts.push(GridPoint {
                    w_wg_um: w,
                    t_wg_nm: t,
                    t_mem_nm: m,
                });
            }
        }
    }
    pts
}

fn row(point: GridPoint, outcome: Result<(f64, Option<f64>)>) -> SweepRow {
    match outcome {
        Ok((v, h)) => SweepRow {
            point,
            objective: Some(v),
            status: "ok".into(),
            trap_height_nm: h,
        },
        Err(e) => SweepRow {
            point,
            objective: None,
            status: e.status().into(),
            trap_height_nm: None,
        },
    }
}

/// Evaluates every grid point. Rows come back in lexicographic axis order
/// (width, ridge, membrane) whatever the evaluation order; a failing point
/// records its status and does not stop the sweep.
pub fn grid_sweep(spec: &SweepSpec, exec: Execution) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let pts = grid(spec);
    Ok(exec.map(&pts, |p| row(*p, spec.evaluate(p))))
}

/// CSV with one column per axis, then `objective,status,trap_height_nm`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "w_wg_um",
        "t_wg_nm",
        "t_mem_nm",
        "objective",
        "status",
        "trap_height_nm",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| fmt_sig(x, 6)).unwrap_or_default();
    for r in rows {
        w.write_record([
            fmt_sig(r.point.w_wg_um, 6),
            fmt_sig(r.point.t_wg_nm, 6),
            fmt_sig(r.point.t_mem_nm, 6),
            opt(r.objective),
            r.status.clone(),
            opt(r.trap_height_nm),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Closed search interval per cross-section parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub w_wg_um: (f64, f64),
    pub t_wg_nm: (f64, f64),
    pub t_mem_nm: (f64, f64),
}

impl Bounds {
    fn axes(&self) -> [(f64, f64); 3] {
        [self.w_wg_um, self.t_wg_nm, self.t_mem_nm]
    }

    fn contains(&self, p: &GridPoint) -> bool {
        let v = [p.w_wg_um, p.t_wg_nm, p.t_mem_nm];
        self.axes()
            .iter()
            .zip(v)
            .all(|(&(lo, hi), x)| x >= lo - 1e-12 && x <= hi + 1e-12)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Optimum {
    pub point: GridPoint,
    pub depth_per_mw: f64,
    pub trap_height_nm: Option<f64>,
    /// Best point of the seed grid, before refinement.
    pub grid_best: GridPoint,
    pub grid_best_depth_per_mw: f64,
    pub evaluations: usize,
}

/// Refinement stops once moves fall below these, per axis (µm, nm, nm).
const REFINE_TOLERANCE: [f64; 3] = [0.01, 1.0, 1.0];
const REFINE_MAX_EVALS: usize = 60;

/// Grid search over `seed`, then simplex refinement of depth per mW from
/// the best grid point within `bounds`.
pub fn optimize_depth_per_mw(bounds: &Bounds, seed: &SweepSpec, exec: Execution) -> Result<Optimum> {
    let spec = SweepSpec {
        objective: Objective::DepthPerMw,
        ..seed.clone()
    };
    spec.validate()?;
    for (name, (lo, hi)) in ["w_wg_um", "t_wg_nm", "t_mem_nm"].iter().zip(bounds.axes()) {
        if !(lo <= hi) {
            return Err(Error::invalid(*name, "bound interval is empty"));
        }
    }
    if let Some(p) = grid(&spec).iter().find(|p| !bounds.contains(p)) {
        return Err(Error::invalid(
            "bounds",
            format!("seed point {p:?} lies outside the bounds"),
        ));
    }
    let rows = grid_sweep(&spec, exec)?;
    let best = rows
        .iter()
        .filter_map(|r| r.objective.map(|v| (r, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::Infeasible(rows.len()))?;
    let (start_row, start_val) = (best.0.clone(), best.1);

    // Refine only along axes with room to move, in units of the bound width.
    let axes = bounds.axes();
    let free: Vec<usize> = (0..3).filter(|&d| axes[d].1 > axes[d].0).collect();
    let start = [
        start_row.point.w_wg_um,
        start_row.point.t_wg_nm,
        start_row.point.t_mem_nm,
    ];
    let to_point = |u: &[f64]| {
        let mut v = start;
        for (k, &d) in free.iter().enumerate() {
            v[d] = axes[d].0 + u[k] * (axes[d].1 - axes[d].0);
        }
        GridPoint {
            w_wg_um: v[0],
            t_wg_nm: v[1],
            t_mem_nm: v[2],
        }
    };
    let u0: Vec<f64> = free
        .iter()
        .map(|&d| (start[d] - axes[d].0) / (axes[d].1 - axes[d].0))
        .collect();
    let step: Vec<f64> = u0.iter().map(|&u| if u > 0.5 { -0.1 } else { 0.1 }).collect();
    let x_tol: Vec<f64> = free
        .iter()
        .map(|&d| REFINE_TOLERANCE[d] / (axes[d].1 - axes[d].0))
        .collect();
    let objective = |u: &[f64]| {
        if u.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return f64::INFINITY;
        }
        let p = to_point(u);
        if p.t_mem_nm >= p.t_wg_nm {
            return f64::INFINITY;
        }
        match spec.evaluate(&p) {
            Ok((v, _)) => -v,
            Err(_) => f64::INFINITY,
        }
    };
    let fit = nelder_mead(
        objective,
        &u0,
        &step,
        &SimplexOptions {
            x_tol,
            f_tol_rel: 0.005,
            max_evals: REFINE_MAX_EVALS,
        },
    );

    let (point, value, height) = if -fit.f > start_val {
        let p = to_point(&fit.x);
        let (v, h) = spec.evaluate(&p)?;
        (p, v, h)
    } else {
        (start_row.point, start_val, start_row.trap_height_nm)
    };
    Ok(Optimum {
        point,
        depth_per_mw: value,
        trap_height_nm: height,
        grid_best: start_row.point,
        grid_best_depth_per_mw: start_val,
        evaluations: rows.len() + fit.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thick_membrane_rejected_before_evaluation() {
        let spec = SweepSpec {
            t_wg_nm: vec![75.0],
            t_mem_nm: vec![100.0],
            ..Default::default()
        };
        let err = grid_sweep(&spec, Execution::Sequential).unwrap_err();
        assert!(
            matches!(err, Error::Invalid { ref field, .. } if field == "t_mem_nm"),
            "{err}"
        );
    }

    #[test]
    fn cap_is_enforced() {
        let spec = SweepSpec {
            w_wg_um: vec![1.0, 1.5, 2.0],
            t_wg_nm: vec![100.0, 125.0],
            max_points: 5,
            ..Default::default()
        };
        assert!(matches!(
            grid_sweep(&spec, Execution::Sequential),
            Err(Error::CapExceeded { points: 6, cap: 5 })
        ));
    }

    #[test]
    fn empty_axis_rejected() {
        let spec = SweepSpec {
            w_wg_um: vec![],
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn lexicographic_grid() {
        let spec = SweepSpec {
            w_wg_um: vec![1.0, 2.0],
            t_wg_nm: vec![75.0, 100.0],
            t_mem_nm: vec![25.0, 50.0],
            ..Default::default()
        };
        let g = grid(&spec);
        assert_eq!(g.len(), 8);
        assert_eq!((g[1].w_wg_um, g[1].t_wg_nm, g[1].t_mem_nm), (1.0, 75.0, 50.0));
        assert_eq!((g[2].w_wg_um, g[2].t_wg_nm, g[2].t_mem_nm), (1.0, 100.0, 25.0));
        assert_eq!(g[4].w_wg_um, 2.0);
    }
}
