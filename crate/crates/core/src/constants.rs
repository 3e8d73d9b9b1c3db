//! Physical constants (CODATA 2018, SI) and Cs D-line data.

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const STEFAN_BOLTZMANN: f64 = 5.670_374_419e-8;
/// Atomic unit of polarizability, 4πε₀a₀³, in C·m²/V.
pub const ATOMIC_UNIT_POLARIZABILITY: f64 = 1.648_777_274_36e-41;

/// One dipole-allowed line of the Cs ground state.
#[derive(Debug, Clone, Copy)]
pub struct AtomicLine {
    pub name: &'static str,
    /// Vacuum wavelength in nm.
    pub wavelength_nm: f64,
    /// Natural linewidth Γ/2π in Hz.
    pub linewidth_hz: f64,
    /// Fraction of the ground-state oscillator strength carried by the line.
    pub weight: f64,
}

/// Cs 6S₁/₂ → 6P₁/₂ (D1). Steck, "Cesium D Line Data", rev. 2.2.1.
pub const CS_D1: AtomicLine = AtomicLine {
    name: "D1",
    wavelength_nm: 894.592_959_86,
    linewidth_hz: 4.5612e6,
    weight: 1.0 / 3.0,
};

/// Cs 6S₁/₂ → 6P₃/₂ (D2). Steck, "Cesium D Line Data", rev. 2.2.1.
pub const CS_D2: AtomicLine = AtomicLine {
    name: "D2",
    wavelength_nm: 852.347_275_82,
    linewidth_hz: 5.2227e6,
    weight: 2.0 / 3.0,
};

pub const CS_LINES: [AtomicLine; 2] = [CS_D1, CS_D2];
