//! Transmission of free-standing lossless dielectric films at oblique
//! incidence, by the characteristic-matrix method.

use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilmLayer {
    pub index: f64,
    pub thickness_nm: f64,
}

/// Ordered layers between two identical ambient half-spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct FilmStack {
    pub layers: Vec<FilmLayer>,
    pub ambient_index: f64,
}

impl FilmStack {
    pub fn new(layers: Vec<FilmLayer>) -> Result<Self> {
        let stack = FilmStack {
            layers,
            ambient_index: 1.0,
        };
        stack.validate()?;
        Ok(stack)
    }

    pub fn single(index: f64, thickness_nm: f64) -> Result<Self> {
        Self::new(vec![FilmLayer { index, thickness_nm }])
    }

    /// A zero thickness is accepted and behaves as no film.
    pub fn validate(&self) -> Result<()> {
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.index >= 1.0) || !l.index.is_finite() {
                return Err(Error::invalid(format!("layers[{i}].index"), "must be ≥ 1"));
            }
            if !(l.thickness_nm >= 0.0) || !l.thickness_nm.is_finite() {
                return Err(Error::invalid(
                    format!("layers[{i}].thickness_nm"),
                    "must be non-negative",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    S,
    P,
    /// Unweighted mean of the s and p power transmittances.
    Circular,
}

impl FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s" | "te" => Ok(Polarization::S),
            "p" | "tm" => Ok(Polarization::P),
            "circular" | "c" => Ok(Polarization::Circular),
            other => Err(Error::invalid("pol", format!("unknown polarization {other:?}"))),
        }
    }
}

fn check_angle(theta_deg: f64) -> Result<()> {
    if !(0.0..90.0).contains(&theta_deg) {
        return Err(Error::invalid("theta_deg", "must lie in [0, 90)"));
    }
    Ok(())
}

/// Amplitude transmission and reflection for one linear polarization.
fn amplitudes(stack: &FilmStack, wavelength_nm: f64, theta_deg: f64, p: bool) -> (f64, f64) {
    let n0 = stack.ambient_index;
    let sin0 = n0 * theta_deg.to_radians().sin();
    // Tilted admittance in units of the vacuum admittance.
    let admittance = |n: f64| {
        let cos = (1.0 - (sin0 / n).powi(2)).sqrt();
        if p {
            n / cos
        } else {
            n * cos
        }
    };
    let eta0 = admittance(n0);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut m = [[one, zero], [zero, one]];
    for l in &stack.layers {
        let cos = (1.0 - (sin0 / l.index).powi(2)).sqrt();
        let delta = 2.0 * std::f64::consts::PI * l.index * l.thickness_nm * cos / wavelength_nm;
        let eta = admittance(l.index);
        let (s, c) = delta.sin_cos();
        let layer = [
            [Complex64::new(c, 0.0), Complex64::new(0.0, s / eta)],
            [Complex64::new(0.0, eta * s), Complex64::new(c, 0.0)],
        ];
        m = [
            [
                m[0][0] * layer[0][0] + m[0][1] * layer[1][0],
                m[0][0] * layer[0][1] + m[0][1] * layer[1][1],
            ],
            [
                m[1][0] * layer[0][0] + m[1][1] * layer[1][0],
                m[1][0] * layer[0][1] + m[1][1] * layer[1][1],
            ],
        ];
    }
    let b = m[0][0] + m[0][1] * eta0;
    let c = m[1][0] + m[1][1] * eta0;
    let denom = (b * eta0 + c).norm_sqr();
    let t = 4.0 * eta0 * eta0 / denom;
    let r = (b * eta0 - c).norm_sqr() / denom;
    (t, r)
}

fn evaluate(stack: &FilmStack, wavelength_nm: f64, theta_deg: f64, pol: Polarization) -> Result<(f64, f64)> {
    stack.validate()?;
    crate::error::require_positive("wavelength_nm", wavelength_nm)?;
    check_angle(theta_deg)?;
    Ok(match pol {
        Polarization::S => amplitudes(stack, wavelength_nm, theta_deg, false),
        Polarization::P => amplitudes(stack, wavelength_nm, theta_deg, true),
        Polarization::Circular => {
            let (ts, rs) = amplitudes(stack, wavelength_nm, theta_deg, false);
            let (tp, rp) = amplitudes(stack, wavelength_nm, theta_deg, true);
            (0.5 * (ts + tp), 0.5 * (rs + rp))
        }
    })
}

/// Power transmittance of the stack.
pub fn film_transmittance(stack: &FilmStack, wavelength_nm: f64, theta_deg: f64, pol: Polarization) -> Result<f64> {
    evaluate(stack, wavelength_nm, theta_deg, pol).map(|(t, _)| t)
}

/// Power reflectance, computed independently of the transmittance.
pub fn film_reflectance(stack: &FilmStack, wavelength_nm: f64, theta_deg: f64, pol: Polarization) -> Result<f64> {
    evaluate(stack, wavelength_nm, theta_deg, pol).map(|(_, r)| r)
}

/// Thickness period of the single-film response.
pub fn thickness_period_nm(index: f64, wavelength_nm: f64, theta_deg: f64) -> f64 {
    let s = theta_deg.to_radians().sin();
    wavelength_nm / (index * index - s * s).sqrt()
}

/// Thinnest nonzero free-standing film with unit transmittance.
pub fn find_ar_thickness(index: f64, wavelength_nm: f64, theta_deg: f64) -> Result<f64> {
    if !(index > 1.0) {
        return Err(Error::invalid("n", "must exceed 1"));
    }
    crate::error::require_positive("wavelength_nm", wavelength_nm)?;
    check_angle(theta_deg)?;
    Ok(0.5 * thickness_period_nm(index, wavelength_nm, theta_deg))
}

/// Smallest transmittance a single film of this index reaches, at the
/// quarter-wave thickness.
pub fn minimum_transmittance(index: f64, theta_deg: f64, pol: Polarization) -> f64 {
    let s = theta_deg.to_radians().sin();
    let cos0 = (1.0 - s * s).sqrt();
    let cos1 = (1.0 - (s / index).powi(2)).sqrt();
    let quarter = |p: bool| {
        let (e0, e1) = if p {
            (1.0 / cos0, index / cos1)
        } else {
            (cos0, index * cos1)
        };
        let q = (e1 * e1 - e0 * e0) / (2.0 * e0 * e1);
        1.0 / (1.0 + q * q)
    };
    match pol {
        Polarization::S => quarter(false),
        Polarization::P => quarter(true),
        Polarization::Circular => 0.5 * (quarter(false) + quarter(true)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransmissionRow {
    pub d_nm: f64,
    #[serde(rename = "T_s")]
    pub t_s: f64,
    #[serde(rename = "T_p")]
    pub t_p: f64,
    #[serde(rename = "T_circ")]
    pub t_circ: f64,
}

pub fn membrane_transmission_report(
    index: f64,
    thicknesses_nm: &[f64],
    wavelength_nm: f64,
    theta_deg: f64,
) -> Result<Vec<TransmissionRow>> {
    thicknesses_nm
        .iter()
        .map(|&d| {
            let stack = FilmStack::single(index, d)?;
            let t_s = film_transmittance(&stack, wavelength_nm, theta_deg, Polarization::S)?;
            let t_p = film_transmittance(&stack, wavelength_nm, theta_deg, Polarization::P)?;
            Ok(TransmissionRow {
                d_nm: d,
                t_s,
                t_p,
                t_circ: 0.5 * (t_s + t_p),
            })
        })
        .collect()
}

/// CSV with header `d_nm,T_s,T_p,T_circ`.
pub fn write_report_csv<W: Write>(rows: &[TransmissionRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["d_nm", "T_s", "T_p", "T_circ"])?;
    for r in rows {
        w.write_record([
            crate::io::fmt_sig(r.d_nm, 6),
            crate::io::fmt_sig(r.t_s, 6),
            crate::io::fmt_sig(r.t_p, 6),
            crate::io::fmt_sig(r.t_circ, 6),
        ])?;
    }
    w.flush()?;
    Ok(())
}
