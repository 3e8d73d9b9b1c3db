use std::sync::OnceLock;

use memtrap::atomtrap::{
    combine_and_characterize, cs_ground_polarizability, depth_vs_power, dipole_potential, reference_blue_fraction,
    TrapModel, REFERENCE_BLUE_MW, REFERENCE_RED_MW,
};
use memtrap::geometry::WaveguideCrossSection;
use memtrap::Error;

fn model() -> &'static TrapModel {
    static MODEL: OnceLock<TrapModel> = OnceLock::new();
    MODEL.get_or_init(|| TrapModel::new(&WaveguideCrossSection::reference(), 10.0).unwrap())
}

/// Oscillator-strength form `(e²/mₑ)·Σ fᵢ/(ωᵢ² − ω²)`, with each fᵢ derived
/// from the line's natural width and excited/ground degeneracy ratio.
fn oracle_alpha(wavelength_nm: f64) -> f64 {
    const C: f64 = 299_792_458.0;
    const EPS0: f64 = 8.854_187_812_8e-12;
    const E: f64 = 1.602_176_634e-19;
    const ME: f64 = 9.109_383_701_5e-31;
    let omega = |l_nm: f64| 2.0 * std::f64::consts::PI * C / (l_nm * 1e-9);
    // (λ nm, Γ/2π Hz, g'/g)
    let lines = [(894.592_959_86, 4.5612e6, 1.0), (852.347_275_82, 5.2227e6, 2.0)];
    let w = omega(wavelength_nm);
    lines
        .iter()
        .map(|&(l, width, g)| {
            let wi = omega(l);
            let gamma = 2.0 * std::f64::consts::PI * width;
            let f = g * gamma * 2.0 * std::f64::consts::PI * EPS0 * ME * C.powi(3) / (E * E * wi * wi);
            E * E / ME * f / (wi * wi - w * w)
        })
        .sum()
}

#[test]
fn polarizability_matches_oscillator_strength_oracle() {
    for l in [700.0, 793.0, 880.0, 937.0, 1064.0] {
        let a = cs_ground_polarizability(l).unwrap().alpha_si;
        let o = oracle_alpha(l);
        assert!(((a - o) / o).abs() < 1e-9, "{l} nm: {a} vs {o}");
    }
    let red = cs_ground_polarizability(937.0).unwrap();
    let blue = cs_ground_polarizability(793.0).unwrap();
    assert!(red.alpha_si > 0.0 && blue.alpha_si < 0.0);
    // Far-detuned Cs magnitudes are a few thousand atomic units here.
    assert!((2000.0..4000.0).contains(&red.atomic_units()));
    assert!((-3000.0..-1000.0).contains(&blue.atomic_units()));
}

#[test]
fn near_resonance_is_rejected() {
    assert!(cs_ground_polarizability(852.5).is_err());
    assert!(cs_ground_polarizability(894.0).is_err());
    assert!(cs_ground_polarizability(0.0).is_err());
}

#[test]
fn potential_follows_the_vacuum_intensity() {
    let m = model();
    let map = dipole_potential(&m.red_mode, 2.0, &m.red_alpha).unwrap();
    let (i, j) = (m.red_mode.center_column(), m.red_mode.ny - 40);
    let e = m.red_mode.at(i, j);
    let intensity = 0.5 * 8.854_187_812_8e-12 * 299_792_458.0 * e * e * 2.0;
    let expected =
        -m.red_alpha.alpha_si * intensity / (2.0 * 8.854_187_812_8e-12 * 299_792_458.0) / 1.380_649e-23 * 1e6;
    assert!((map.at(i, j) - expected).abs() <= 1e-12 * expected.abs());
}

#[test]
fn zero_power_is_zero_potential() {
    let m = model();
    let map = dipole_potential(&m.blue_mode, 0.0, &m.blue_alpha).unwrap();
    assert!(map.u_uk.iter().all(|&u| u == 0.0));
    let red0 = dipole_potential(&m.red_mode, 0.0, &m.red_alpha).unwrap();
    assert!(matches!(combine_and_characterize(&map, &red0), Err(Error::NoTrap(_))));
}

#[test]
fn doubling_power_doubles_the_potential_exactly() {
    let m = model();
    let a = dipole_potential(&m.blue_mode, 1.5, &m.blue_alpha).unwrap();
    let b = dipole_potential(&m.blue_mode, 3.0, &m.blue_alpha).unwrap();
    assert!(a.u_uk.iter().zip(&b.u_uk).all(|(x, y)| 2.0 * x == *y));
}

#[test]
fn red_only_is_not_a_trap() {
    let m = model();
    let red = dipole_potential(&m.red_mode, 2.73, &m.red_alpha).unwrap();
    assert!(red.u_uk.iter().all(|&u| u <= 0.0));
    let blue = dipole_potential(&m.blue_mode, 0.0, &m.blue_alpha).unwrap();
    assert!(matches!(combine_and_characterize(&blue, &red), Err(Error::NoTrap(_))));
}

#[test]
fn mismatched_grids_are_rejected() {
    let m = model();
    let coarse = memtrap::modesolver::solve_mode(&WaveguideCrossSection::reference(), 937.0, 20.0).unwrap();
    let red = dipole_potential(&coarse, 2.73, &m.red_alpha).unwrap();
    let blue = dipole_potential(&m.blue_mode, 3.27, &m.blue_alpha).unwrap();
    assert!(matches!(
        combine_and_characterize(&blue, &red),
        Err(Error::GridMismatch(_))
    ));
    // A polarizability for the other color is refused outright.
    assert!(dipole_potential(&m.blue_mode, 1.0, &m.red_alpha).is_err());
}

#[test]
fn reference_trap_depth_and_height() {
    let r = model().characterize(REFERENCE_BLUE_MW, REFERENCE_RED_MW).unwrap();
    assert!((r.depth_uk - 350.0).abs() <= 0.4 * 350.0, "depth {}", r.depth_uk);
    assert!(
        r.min_height_nm > 0.0 && r.min_height_nm < 300.0,
        "height {}",
        r.min_height_nm
    );
    assert!(r.min_x_nm.abs() <= r.total.h_nm);
    assert!(r.depth_uk <= -r.u_min_uk + 1e-12);
    assert!(r.depth_uk <= r.barrier_uk - r.u_min_uk + 1e-12);
}

#[test]
fn more_blue_pushes_the_trap_outward() {
    let heights: Vec<f64> = [2.5, 3.27, 4.0, 5.0]
        .iter()
        .map(|&pb| model().characterize(pb, REFERENCE_RED_MW).unwrap().min_height_nm)
        .collect();
    assert!(heights.windows(2).all(|w| w[1] > w[0]), "{heights:?}");
}

#[test]
fn depth_scales_linearly_with_total_power() {
    let f = reference_blue_fraction();
    let d6 = model().at_total_power(6.0, f).unwrap().depth_uk;
    let d30 = model().at_total_power(30.0, f).unwrap().depth_uk;
    assert!((d30 / d6 - 5.0).abs() < 1e-9);
    let d20 = model().at_total_power(20.6, f).unwrap().depth_uk;
    assert!((d20 / d6 - 20.6 / 6.0).abs() < 1e-9);
    assert!((d20 - 1200.0).abs() <= 0.4 * 1200.0, "{d20}");
    assert!(model().at_total_power(6.0, 1.0).is_err());
}

#[test]
fn depth_vs_power_agrees_with_the_model() {
    let f = reference_blue_fraction();
    let d = depth_vs_power(&WaveguideCrossSection::reference(), 6.0, f).unwrap();
    assert!((d - model().at_total_power(6.0, f).unwrap().depth_uk).abs() < 1e-9);
    assert!(depth_vs_power(&WaveguideCrossSection::reference(), 6.0, 0.0).is_err());
}

#[test]
fn depth_is_stable_under_grid_refinement() {
    let fine = TrapModel::new(&WaveguideCrossSection::reference(), 5.0).unwrap();
    let a = model()
        .characterize(REFERENCE_BLUE_MW, REFERENCE_RED_MW)
        .unwrap()
        .depth_uk;
    let b = fine.characterize(REFERENCE_BLUE_MW, REFERENCE_RED_MW).unwrap().depth_uk;
    assert!((a - b).abs() / b < 0.05, "{a} vs {b}");
}

#[test]
fn potential_csv_and_record() {
    let r = model().characterize(REFERENCE_BLUE_MW, REFERENCE_RED_MW).unwrap();
    let mut buf = Vec::new();
    r.total.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x_nm,y_nm,U_uK"));
    assert_eq!(lines.count(), r.total.nx * r.total.ny);
    let rec = r.to_record();
    assert!(rec.lines().any(|l| l.starts_with("depth_uk: ")));
    assert!(rec.lines().any(|l| l.starts_with("min_height_nm: ")));
}
