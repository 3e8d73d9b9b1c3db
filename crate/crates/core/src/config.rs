//! JSON run configuration. Every physical key carries its unit in the name
//! and unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::atomtrap::{BLUE_WAVELENGTH_NM, RED_WAVELENGTH_NM, REFERENCE_BLUE_MW, REFERENCE_RED_MW};
use crate::error::{Error, Result};
use crate::geometry::{
    validate_design, DesignFamily, DeviceDesign, DeviceVariant, MaterialProperties, WaveguideCrossSection,
    DEFAULT_STRIP_WIDTH_UM, DEFAULT_TAPER_WIDTH_UM, DEFAULT_WINDOW_EDGE_MM, NEEDLE_TAPER_ALLOWANCE_UM,
};
use crate::sweep::SweepSpec;
use crate::thermal::ThermalSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub variant: DesignFamily,
    pub span_um: f64,
    /// Needle gap; defaults to the span plus the fabricated taper allowance.
    pub gap_um: Option<f64>,
    /// Alias for `span_um` on infinity designs.
    pub hole_diameter_um: Option<f64>,
    pub strip_width_um: f64,
    pub taper_width_um: f64,
    pub window_edge_mm: f64,
    pub w_wg_um: f64,
    pub t_wg_nm: f64,
    pub t_mem_nm: f64,
    pub n_core: f64,
    pub n_ambient: f64,
    pub k_w_per_mk: f64,
    pub alpha_db_per_cm: f64,
    pub emissivity: f64,
    pub t_fail_k: f64,
    pub t_amb_k: f64,
    pub absorbed_fraction: f64,
    pub cell_um: f64,
    pub h_nm: f64,
    pub blue_nm: f64,
    pub red_nm: f64,
    pub p_blue_mw: f64,
    pub p_red_mw: f64,
    pub thermal: ThermalSettings,
    pub sweep: Option<SweepSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let xs = WaveguideCrossSection::reference();
        let mat = MaterialProperties::default();
        RunConfig {
            variant: DesignFamily::Infinity,
            span_um: 125.0,
            gap_um: None,
            hole_diameter_um: None,
            strip_width_um: DEFAULT_STRIP_WIDTH_UM,
            taper_width_um: DEFAULT_TAPER_WIDTH_UM,
            window_edge_mm: DEFAULT_WINDOW_EDGE_MM,
            w_wg_um: xs.width_um,
            t_wg_nm: xs.ridge_thickness_nm,
            t_mem_nm: xs.membrane_thickness_nm,
            n_core: xs.n_core,
            n_ambient: xs.n_ambient,
            k_w_per_mk: mat.k_w_per_mk,
            alpha_db_per_cm: mat.alpha_db_per_cm,
            emissivity: mat.emissivity,
            t_fail_k: mat.t_fail_k,
            t_amb_k: mat.t_amb_k,
            absorbed_fraction: mat.absorbed_fraction,
            cell_um: 5.0,
            h_nm: 10.0,
            blue_nm: BLUE_WAVELENGTH_NM,
            red_nm: RED_WAVELENGTH_NM,
            p_blue_mw: REFERENCE_BLUE_MW,
            p_red_mw: REFERENCE_RED_MW,
            thermal: ThermalSettings::default(),
            sweep: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn xsection(&self) -> Result<WaveguideCrossSection> {
        WaveguideCrossSection::new(self.w_wg_um, self.t_wg_nm, self.t_mem_nm, self.n_core, self.n_ambient)
    }

    pub fn material(&self) -> Result<MaterialProperties> {
        let m = MaterialProperties {
            k_w_per_mk: self.k_w_per_mk,
            alpha_db_per_cm: self.alpha_db_per_cm,
            emissivity: self.emissivity,
            t_fail_k: self.t_fail_k,
            t_amb_k: self.t_amb_k,
            absorbed_fraction: self.absorbed_fraction,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn design(&self) -> Result<DeviceDesign> {
        let span = match (self.variant, self.hole_diameter_um) {
            (DesignFamily::Infinity, Some(d)) => d,
            (_, Some(_)) => {
                return Err(Error::invalid(
                    "hole_diameter_um",
                    "only applies to the infinity variant",
                ))
            }
            (_, None) => self.span_um,
        };
        let variant = match self.variant {
            DesignFamily::HybridNeedle => DeviceVariant::HybridNeedle {
                span_um: span,
                gap_um: self.gap_um.unwrap_or(span + NEEDLE_TAPER_ALLOWANCE_UM),
            },
            _ if self.gap_um.is_some() => {
                return Err(Error::invalid("gap_um", "only applies to the hybrid_needle variant"))
            }
            family => family.with_span(span),
        };
        validate_design(DeviceDesign {
            variant,
            window_edge_mm: self.window_edge_mm,
            strip_width_um: self.strip_width_um,
            taper_width_um: self.taper_width_um,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.xsection()?;
        self.material()?;
        self.design()?;
        self.thermal.validate()?;
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_json(r#"{"span": 125}"#).is_err());
        assert!(RunConfig::from_json(r#"{"thermal": {"tolerance": 1}}"#).is_err());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c = RunConfig::from_json(
            r#"{"variant": "hybrid_needle", "span_um": 250, "gap_um": 460,
                "thermal": {"tol_k": 0.005}}"#,
        )
        .unwrap();
        assert_eq!(c.thermal.tol_k, 0.005);
        assert_eq!(c.thermal.max_iter, 10_000);
        assert_eq!(
            c.design().unwrap().variant,
            DeviceVariant::HybridNeedle {
                span_um: 250.0,
                gap_um: 460.0
            }
        );
        c.validate().unwrap();
    }

    #[test]
    fn round_trips_through_json() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn misplaced_keys_are_errors() {
        let c = RunConfig::from_json(r#"{"variant": "straight", "hole_diameter_um": 100}"#).unwrap();
        assert!(c.design().is_err());
        let c = RunConfig::from_json(r#"{"variant": "infinity", "gap_um": 100}"#).unwrap();
        assert!(c.design().is_err());
        let c = RunConfig::from_json(r#"{"variant": "hybrid_needle", "span_um": 500, "gap_um": 400}"#).unwrap();
        assert!(c.validate().is_err());
    }
}
