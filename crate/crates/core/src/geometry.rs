//! Waveguide cross-section, suspended-device plan views, and their
//! rasterization into the masks the thermal solver runs on.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};

/// Ridge waveguide on a thinner suspended membrane.
///
/// The membrane occupies `0 ≤ y ≤ T_MEM` across the whole cross-section; the
/// ridge occupies `|x| ≤ W_WG/2`, `0 ≤ y ≤ T_WG`. The ridge top surface is
/// therefore at `y = T_WG`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveguideCrossSection {
    pub width_um: f64,
    pub ridge_thickness_nm: f64,
    pub membrane_thickness_nm: f64,
    pub n_core: f64,
    pub n_ambient: f64,
}

impl WaveguideCrossSection {
    pub fn new(
        width_um: f64,
        ridge_thickness_nm: f64,
        membrane_thickness_nm: f64,
        n_core: f64,
        n_ambient: f64,
    ) -> Result<Self> {
        let xs = WaveguideCrossSection {
            width_um,
            ridge_thickness_nm,
            membrane_thickness_nm,
            n_core,
            n_ambient,
        };
        xs.validate()?;
        Ok(xs)
    }

    /// Alumina ridge used for the two-color trap: 1.6 µm × 100 nm on a 50 nm
    /// membrane, n = 1.76 in vacuum.
    pub fn reference() -> Self {
        WaveguideCrossSection {
            width_um: 1.6,
            ridge_thickness_nm: 100.0,
            membrane_thickness_nm: 50.0,
            n_core: 1.76,
            n_ambient: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("w_wg_um", self.width_um)?;
        require_positive("t_wg_nm", self.ridge_thickness_nm)?;
        if !(self.membrane_thickness_nm.is_finite() && self.membrane_thickness_nm >= 0.0) {
            return Err(Error::invalid("t_mem_nm", "must be non-negative"));
        }
        if self.membrane_thickness_nm >= self.ridge_thickness_nm {
            return Err(Error::invalid(
                "t_mem_nm",
                format!(
                    "membrane ({} nm) must be thinner than the ridge ({} nm)",
                    self.membrane_thickness_nm, self.ridge_thickness_nm
                ),
            ));
        }
        if !(self.n_ambient >= 1.0) {
            return Err(Error::invalid("n_amb", "must be at least 1"));
        }
        if !(self.n_core > self.n_ambient) {
            return Err(Error::invalid("n_core", "must exceed the ambient index"));
        }
        Ok(())
    }
}

/// Plan-view variant of a suspended device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DeviceVariant {
    /// Strip of membrane carrying the waveguide across one circular hole.
    Straight { span_um: f64 },
    /// Tapered membrane strip between two silicon needle tips.
    HybridNeedle { span_um: f64, gap_um: f64 },
    /// Continuous membrane with two circular holes flanking the waveguide.
    Infinity { hole_diameter_um: f64 },
}

impl DeviceVariant {
    /// Suspended length as defined per design (strip length, tapered-membrane
    /// length, or hole diameter).
    pub fn span_um(&self) -> f64 {
        match *self {
            DeviceVariant::Straight { span_um } => span_um,
            DeviceVariant::HybridNeedle { span_um, .. } => span_um,
            DeviceVariant::Infinity { hole_diameter_um } => hole_diameter_um,
        }
    }

    pub fn family(&self) -> DesignFamily {
        match self {
            DeviceVariant::Straight { .. } => DesignFamily::Straight,
            DeviceVariant::HybridNeedle { .. } => DesignFamily::HybridNeedle,
            DeviceVariant::Infinity { .. } => DesignFamily::Infinity,
        }
    }
}

/// Design variant without its dimensions, used to build span families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignFamily {
    Straight,
    HybridNeedle,
    Infinity,
}

/// Needle gap minus tapered span of both fabricated hybrid-needle devices
/// (460 − 250 and 610 − 400 µm).
pub const NEEDLE_TAPER_ALLOWANCE_UM: f64 = 210.0;

impl DesignFamily {
    /// Variant of this family at the given span. Hybrid needles get
    /// `gap = span + NEEDLE_TAPER_ALLOWANCE_UM`.
    pub fn with_span(self, span_um: f64) -> DeviceVariant {
        match self {
            DesignFamily::Straight => DeviceVariant::Straight { span_um },
            DesignFamily::HybridNeedle => DeviceVariant::HybridNeedle {
                span_um,
                gap_um: span_um + NEEDLE_TAPER_ALLOWANCE_UM,
            },
            DesignFamily::Infinity => DeviceVariant::Infinity {
                hole_diameter_um: span_um,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DesignFamily::Straight => "straight",
            DesignFamily::HybridNeedle => "hybrid_needle",
            DesignFamily::Infinity => "infinity",
        }
    }
}

impl std::str::FromStr for DesignFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "straight" => Ok(DesignFamily::Straight),
            "hybrid_needle" | "needle" => Ok(DesignFamily::HybridNeedle),
            "infinity" => Ok(DesignFamily::Infinity),
            other => Err(Error::invalid(
                "variant",
                format!("unknown design `{other}` (straight, hybrid_needle, infinity)"),
            )),
        }
    }
}

pub const DEFAULT_WINDOW_EDGE_MM: f64 = 6.0;
pub const DEFAULT_STRIP_WIDTH_UM: f64 = 10.0;
pub const DEFAULT_TAPER_WIDTH_UM: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceDesign {
    pub variant: DeviceVariant,
    /// Edge of the square cooling-beam window through the substrate.
    pub window_edge_mm: f64,
    /// Width of the suspended membrane strip flanking the waveguide.
    pub strip_width_um: f64,
    /// Membrane width where the hybrid-needle taper meets a needle tip.
    pub taper_width_um: f64,
}

impl DeviceDesign {
    pub fn new(variant: DeviceVariant) -> Self {
        DeviceDesign {
            variant,
            window_edge_mm: DEFAULT_WINDOW_EDGE_MM,
            strip_width_um: DEFAULT_STRIP_WIDTH_UM,
            taper_width_um: DEFAULT_TAPER_WIDTH_UM,
        }
    }

    pub fn with_strip_width(mut self, strip_width_um: f64) -> Self {
        self.strip_width_um = strip_width_um;
        self
    }

    pub fn span_um(&self) -> f64 {
        self.variant.span_um()
    }

    /// Largest in-plane extent of the suspended feature.
    pub fn feature_extent_um(&self) -> f64 {
        match self.variant {
            DeviceVariant::Straight { span_um } => span_um,
            DeviceVariant::HybridNeedle { gap_um, .. } => gap_um,
            DeviceVariant::Infinity { hole_diameter_um } => 2.0 * hole_diameter_um + self.strip_width_um,
        }
    }

    /// Side of the simulated square, centered on the loading zone.
    pub fn clip_side_um(&self) -> f64 {
        (4.0 * self.span_um()).max(1000.0)
    }
}

/// Returns the design unchanged if every invariant holds, otherwise the first
/// violation with its field name.
pub fn validate_design(design: DeviceDesign) -> Result<DeviceDesign> {
    match design.variant {
        DeviceVariant::Straight { span_um } => require_positive("span_um", span_um)?,
        DeviceVariant::HybridNeedle { span_um, gap_um } => {
            require_positive("span_um", span_um)?;
            require_positive("gap_um", gap_um)?;
            if gap_um <= span_um {
                return Err(Error::invalid(
                    "gap_um",
                    format!("gap must exceed span ({gap_um} ≤ {span_um})"),
                ));
            }
        }
        DeviceVariant::Infinity { hole_diameter_um } => require_positive("hole_diameter_um", hole_diameter_um)?,
    }
    require_positive("window_edge_mm", design.window_edge_mm)?;
    require_positive("strip_width_um", design.strip_width_um)?;
    require_positive("taper_width_um", design.taper_width_um)?;
    if let DeviceVariant::HybridNeedle { .. } = design.variant {
        if design.taper_width_um < design.strip_width_um {
            return Err(Error::invalid(
                "taper_width_um",
                "taper must be at least as wide as the strip",
            ));
        }
    }
    if design.window_edge_mm * 1000.0 < design.feature_extent_um() {
        return Err(Error::invalid(
            "window_edge_mm",
            format!(
                "feature of {} µm exceeds the {} mm window",
                design.feature_extent_um(),
                design.window_edge_mm
            ),
        ));
    }
    Ok(design)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialProperties {
    pub k_w_per_mk: f64,
    pub alpha_db_per_cm: f64,
    pub emissivity: f64,
    pub t_fail_k: f64,
    pub t_amb_k: f64,
    /// Fraction of the propagation loss deposited as heat.
    pub absorbed_fraction: f64,
}

impl Default for MaterialProperties {
    fn default() -> Self {
        MaterialProperties {
            k_w_per_mk: 1.0,
            alpha_db_per_cm: 1.0,
            emissivity: 0.05,
            t_fail_k: 2354.0,
            t_amb_k: 300.0,
            absorbed_fraction: 1.0,
        }
    }
}

impl MaterialProperties {
    pub fn validate(&self) -> Result<()> {
        require_positive("k_w_per_mk", self.k_w_per_mk)?;
        if !(self.alpha_db_per_cm >= 0.0) {
            return Err(Error::invalid("alpha_db_per_cm", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.emissivity) {
            return Err(Error::invalid("emissivity", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.absorbed_fraction) {
            return Err(Error::invalid("absorbed_fraction", "must lie in [0, 1]"));
        }
        require_positive("t_amb_k", self.t_amb_k)?;
        if !(self.t_fail_k > self.t_amb_k) {
            return Err(Error::invalid("t_fail_k", "must exceed the ambient temperature"));
        }
        Ok(())
    }

    /// Power attenuation coefficient in 1/m.
    pub fn alpha_per_m(&self) -> f64 {
        self.alpha_db_per_cm * std::f64::consts::LN_10 / 10.0 * 100.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Hole,
    Membrane,
    Ridge,
    SiliconContact,
}

impl CellKind {
    /// Suspended cells whose temperature is unknown.
    pub fn is_solid(self) -> bool {
        matches!(self, CellKind::Membrane | CellKind::Ridge)
    }
}

/// Plan-view raster of a device, row-major with `x` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalMask {
    pub nx: usize,
    pub ny: usize,
    pub cell_um: f64,
    /// Center of cell (0, 0).
    pub origin_um: (f64, f64),
    pub kinds: Vec<CellKind>,
    /// Sheet thickness per cell; zero on holes and contacts.
    pub thickness_nm: Vec<f64>,
    /// Fraction of the cell area covered by membrane; zero on holes and
    /// contacts.
    pub coverage: Vec<f64>,
    /// Waveguide cells in propagation order.
    pub path: Vec<usize>,
}

impl ThermalMask {
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn center_um(&self, idx: usize) -> (f64, f64) {
        let ix = idx % self.nx;
        let iy = idx / self.nx;
        (
            self.origin_um.0 + ix as f64 * self.cell_um,
            self.origin_um.1 + iy as f64 * self.cell_um,
        )
    }

    pub fn count(&self, kind: CellKind) -> usize {
        self.kinds.iter().filter(|&&k| k == kind).count()
    }

    /// Coverage-weighted suspended membrane area (ridge cells included).
    pub fn membrane_area_um2(&self) -> f64 {
        let cell_area = self.cell_um * self.cell_um;
        self.coverage.iter().sum::<f64>() * cell_area
    }

    /// Area of hole cells whose center satisfies `select`.
    pub fn hole_area_um2(&self, select: impl Fn(f64, f64) -> bool) -> f64 {
        let cell_area = self.cell_um * self.cell_um;
        (0..self.kinds.len())
            .filter(|&i| self.kinds[i] == CellKind::Hole)
            .filter(|&i| {
                let (x, y) = self.center_um(i);
                select(x, y)
            })
            .count() as f64
            * cell_area
    }

    /// Along-path length of the waveguide between the two contact regions.
    pub fn path_length_um(&self) -> f64 {
        self.path.len() as f64 * self.cell_um
    }

    /// Neighbours in +x, −x, +y, −y order (when in bounds).
    pub fn neighbours(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let ix = idx % self.nx;
        let iy = idx / self.nx;
        let nx = self.nx;
        let ny = self.ny;
        [
            (ix + 1 < nx).then(|| idx + 1),
            (ix > 0).then(|| idx - 1),
            (iy + 1 < ny).then(|| idx + nx),
            (iy > 0).then(|| idx - nx),
        ]
        .into_iter()
        .flatten()
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.nx * self.ny;
        if self.kinds.len() != n || self.thickness_nm.len() != n || self.coverage.len() != n {
            return Err(Error::invalid("mask", "array sizes do not match nx × ny"));
        }
        if !self.kinds.contains(&CellKind::SiliconContact) {
            return Err(Error::invalid("mask", "no SiliconContact cells"));
        }
        if self.path.is_empty() {
            return Err(Error::invalid("mask", "empty waveguide path"));
        }
        for w in self.path.windows(2) {
            if self.neighbours(w[0]).all(|nb| nb != w[1]) {
                return Err(Error::invalid("mask", "waveguide path is not contiguous"));
            }
        }
        let touches_contact = |idx: usize| {
            self.neighbours(idx)
                .any(|nb| self.kinds[nb] == CellKind::SiliconContact)
        };
        if !touches_contact(self.path[0]) || !touches_contact(*self.path.last().unwrap()) {
            return Err(Error::invalid(
                "mask",
                "waveguide path does not connect two contact regions",
            ));
        }
        for (i, kind) in self.kinds.iter().enumerate() {
            match kind {
                CellKind::Hole | CellKind::SiliconContact if self.thickness_nm[i] != 0.0 => {
                    return Err(Error::invalid("mask", "hole or contact cell with thickness"))
                }
                CellKind::Membrane | CellKind::Ridge if !(self.thickness_nm[i] > 0.0) => {
                    return Err(Error::invalid("mask", "suspended cell without thickness"))
                }
                _ => {}
            }
        }
        let on_path = self.path.iter().filter(|&&i| self.kinds[i] == CellKind::Ridge).count();
        if on_path != self.path.len() || self.count(CellKind::Ridge) != self.path.len() {
            return Err(Error::invalid("mask", "ridge cells and waveguide path disagree"));
        }
        Ok(())
    }
}

/// Sub-samples per cell edge used for membrane coverage.
const SUPERSAMPLE: usize = 8;

/// Membrane occupancy and silicon support in plan view, in µm about the
/// loading-zone center with the waveguide along `y = 0`.
struct PlanView {
    variant: DeviceVariant,
    strip_half: f64,
    taper_half: f64,
}

impl PlanView {
    fn has_membrane(&self, x: f64, y: f64) -> bool {
        match self.variant {
            DeviceVariant::Straight { span_um } => {
                let r = span_um / 2.0;
                x * x + y * y < r * r && y.abs() < self.strip_half
            }
            DeviceVariant::Infinity { hole_diameter_um } => {
                let r = hole_diameter_um / 2.0;
                let yc = self.strip_half + r;
                let in_upper = x * x + (y - yc) * (y - yc) < r * r;
                let in_lower = x * x + (y + yc) * (y + yc) < r * r;
                !(in_upper || in_lower)
            }
            DeviceVariant::HybridNeedle { span_um, gap_um } => {
                let ax = x.abs();
                if ax > gap_um / 2.0 {
                    return false;
                }
                let half = if ax <= span_um / 2.0 {
                    self.strip_half
                } else {
                    let t = (ax - span_um / 2.0) / ((gap_um - span_um) / 2.0);
                    self.strip_half + (self.taper_half - self.strip_half) * t
                };
                y.abs() < half
            }
        }
    }

    fn is_contact(&self, x: f64, y: f64) -> bool {
        match self.variant {
            // Outside the hole the membrane rests on silicon.
            DeviceVariant::Straight { span_um } => x * x + y * y >= (span_um / 2.0).powi(2),
            DeviceVariant::Infinity { .. } => false,
            DeviceVariant::HybridNeedle { gap_um, .. } => x.abs() > gap_um / 2.0 && y.abs() <= self.taper_half,
        }
    }
}

/// Rasterizes a validated design on a square grid of `cell_um` cells.
///
/// Cell kinds for holes and silicon use cell-center sampling; suspended cells
/// carry the fraction of their area covered by membrane, and the waveguide
/// row lumps the ridge cross-section into its sheet thickness.
pub fn rasterize_mask(design: &DeviceDesign, xsection: &WaveguideCrossSection, cell_um: f64) -> Result<ThermalMask> {
    let design = validate_design(*design)?;
    xsection.validate()?;
    require_positive("cell_um", cell_um)?;
    let span = design.span_um();
    if cell_um > span / 20.0 {
        return Err(Error::invalid(
            "cell_um",
            format!("cell of {cell_um} µm is coarser than span/20 = {} µm", span / 20.0),
        ));
    }
    let clip = design.clip_side_um();
    if clip > design.window_edge_mm * 1000.0 && !matches!(design.variant, DeviceVariant::Straight { .. }) {
        return Err(Error::invalid(
            "window_edge_mm",
            format!("simulated region of {clip} µm exceeds the window"),
        ));
    }

    let mut n = (clip / cell_um).round() as usize;
    if n.is_multiple_of(2) {
        n += 1;
    }
    let half = (n / 2) as f64 * cell_um;
    let plan = PlanView {
        variant: design.variant,
        strip_half: design.strip_width_um / 2.0,
        taper_half: design.taper_width_um / 2.0,
    };
    let t_mem = xsection.membrane_thickness_nm;
    let t_wg = xsection.ridge_thickness_nm;

    let mut kinds = vec![CellKind::Hole; n * n];
    let mut coverage = vec![0.0; n * n];
    let mut thickness = vec![0.0; n * n];
    let sub = cell_um / SUPERSAMPLE as f64;
    for iy in 0..n {
        let yc = -half + iy as f64 * cell_um;
        for ix in 0..n {
            let xc = -half + ix as f64 * cell_um;
            let idx = iy * n + ix;
            let boundary = ix == 0 || iy == 0 || ix == n - 1 || iy == n - 1;
            if plan.is_contact(xc, yc) {
                kinds[idx] = CellKind::SiliconContact;
                continue;
            }
            let mut hits = 0usize;
            for sy in 0..SUPERSAMPLE {
                let y = yc - cell_um / 2.0 + (sy as f64 + 0.5) * sub;
                for sx in 0..SUPERSAMPLE {
                    let x = xc - cell_um / 2.0 + (sx as f64 + 0.5) * sub;
                    if plan.has_membrane(x, y) {
                        hits += 1;
                    }
                }
            }
            if hits == 0 {
                continue;
            }
            if boundary {
                // Membrane reaching the clip boundary is held at ambient.
                kinds[idx] = CellKind::SiliconContact;
                continue;
            }
            let frac = hits as f64 / (SUPERSAMPLE * SUPERSAMPLE) as f64;
            kinds[idx] = CellKind::Membrane;
            coverage[idx] = frac;
            thickness[idx] = t_mem * frac;
        }
    }

    // The waveguide runs along the center row from one contact to the other.
    let row = n / 2;
    let ridge_extra = (t_wg - t_mem) * (xsection.width_um / cell_um);
    let mut path = Vec::new();
    let mut inside = false;
    for ix in 0..n {
        let idx = row * n + ix;
        match kinds[idx] {
            CellKind::SiliconContact if inside => break,
            CellKind::SiliconContact => {}
            CellKind::Membrane => {
                inside = true;
                path.push(idx);
            }
            CellKind::Hole if inside => return Err(Error::invalid("mask", "waveguide crosses an unsupported hole")),
            _ => {}
        }
    }
    for &idx in &path {
        kinds[idx] = CellKind::Ridge;
        thickness[idx] += ridge_extra;
    }

    let mask = ThermalMask {
        nx: n,
        ny: n,
        cell_um,
        origin_um: (-half, -half),
        kinds,
        thickness_nm: thickness,
        coverage,
        path,
    };
    mask.validate()?;
    Ok(mask)
}
