//! Analysis of fiber-coupled power and scattered-light measurements.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};

/// Powers measured at the input and output fibers, in mW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerMeasurement {
    pub p_in_mw: f64,
    pub p_out_mw: f64,
}

impl PowerMeasurement {
    pub fn new(p_in_mw: f64, p_out_mw: f64) -> Result<Self> {
        let m = PowerMeasurement { p_in_mw, p_out_mw };
        m.validate()?;
        if !(p_out_mw <= p_in_mw) {
            return Err(Error::invalid("p_out_mw", "output exceeds input"));
        }
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        require_positive("p_in_mw", self.p_in_mw)?;
        if !(self.p_out_mw >= 0.0) || !self.p_out_mw.is_finite() {
            return Err(Error::invalid("p_out_mw", "must be non-negative"));
        }
        Ok(())
    }

    pub fn transmission(&self) -> f64 {
        self.p_out_mw / self.p_in_mw
    }
}

/// Power inside the waveguide for equal coupling at both facets: the
/// geometric mean of input and output.
pub fn waveguide_power(m: &PowerMeasurement) -> Result<f64> {
    m.validate()?;
    Ok((m.p_in_mw * m.p_out_mw).sqrt())
}

/// Per-facet coupling efficiency once the propagation loss over `length_cm`
/// is removed from the end-to-end transmission.
pub fn facet_coupling(m: &PowerMeasurement, alpha_db_per_cm: f64, length_cm: f64) -> Result<f64> {
    m.validate()?;
    require_positive("length_cm", length_cm)?;
    if !(alpha_db_per_cm >= 0.0) {
        return Err(Error::invalid("alpha_db_per_cm", "must be non-negative"));
    }
    let eta = (m.transmission() * 10f64.powf(alpha_db_per_cm * length_cm / 10.0)).sqrt();
    if eta > 1.0 {
        return Err(Error::invalid(
            "facet_coupling",
            format!("inconsistent inputs: per-facet efficiency {eta:.4} exceeds 1"),
        ));
    }
    Ok(eta)
}

/// Output power implied by a facet efficiency and propagation loss.
pub fn output_power(p_in_mw: f64, eta: f64, alpha_db_per_cm: f64, length_cm: f64) -> f64 {
    p_in_mw * eta * eta * 10f64.powf(-alpha_db_per_cm * length_cm / 10.0)
}

/// Scattered intensity sampled along the waveguide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterTrace {
    pub position_cm: Vec<f64>,
    pub intensity: Vec<f64>,
}

#[derive(Deserialize)]
struct TraceRow {
    position_cm: f64,
    intensity: f64,
}

impl ScatterTrace {
    pub fn new(position_cm: Vec<f64>, intensity: Vec<f64>) -> Result<Self> {
        let t = ScatterTrace { position_cm, intensity };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.position_cm.len() != self.intensity.len() {
            return Err(Error::invalid("trace", "positions and intensities differ in length"));
        }
        if self.position_cm.len() < 3 {
            return Err(Error::invalid("trace", "at least 3 samples required"));
        }
        if self.position_cm.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("position_cm", "must be strictly increasing"));
        }
        if let Some(i) = self.intensity.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid("intensity", format!("sample {i} is not positive")));
        }
        Ok(())
    }

    /// Reads a CSV with header `position_cm,intensity`.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for row in reader.deserialize() {
            let row: TraceRow = row?;
            x.push(row.position_cm);
            y.push(row.intensity);
        }
        Self::new(x, y)
    }

    /// `I(x) = I₀·10^(−α·x/10)·(1 + noise(i))` at `n` evenly spaced points
    /// over `[0, length_cm]`.
    pub fn synthetic<F>(alpha_db_per_cm: f64, length_cm: f64, n: usize, i0: f64, mut noise: F) -> Result<Self>
    where
        F: FnMut(usize) -> f64,
    {
        if n < 3 {
            return Err(Error::invalid("n", "at least 3 samples required"));
        }
        require_positive("length_cm", length_cm)?;
        let x: Vec<f64> = (0..n).map(|i| length_cm * i as f64 / (n - 1) as f64).collect();
        let y = x
            .iter()
            .enumerate()
            .map(|(i, xi)| i0 * 10f64.powf(-alpha_db_per_cm * xi / 10.0) * (1.0 + noise(i)))
            .collect();
        Self::new(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossFit {
    pub alpha_db_per_cm: f64,
    pub std_error_db_per_cm: f64,
    pub samples: usize,
}

/// Ordinary least squares of log10(intensity) against position.
pub fn fit_propagation_loss(trace: &ScatterTrace) -> Result<LossFit> {
    trace.validate()?;
    let n = trace.position_cm.len() as f64;
    let logs: Vec<f64> = trace.intensity.iter().map(|v| v.log10()).collect();
    let mx = trace.position_cm.iter().sum::<f64>() / n;
    let my = logs.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in trace.position_cm.iter().zip(&logs) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > 0.0) {
        return Err(Error::invalid("trace", "degenerate fit: all positions equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = trace
        .position_cm
        .iter()
        .zip(&logs)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let slope_se = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(LossFit {
        alpha_db_per_cm: -10.0 * slope,
        std_error_db_per_cm: 10.0 * slope_se,
        samples: trace.position_cm.len(),
    })
}
