use memtrap::geometry::WaveguideCrossSection;
use memtrap::modesolver::{evanescent_decay_length, solve_mode, solve_mode_with, solve_slab_te, ModeOptions};
use memtrap::Error;

fn reference_mode(wavelength: f64) -> memtrap::modesolver::ModeSolution {
    solve_mode(&WaveguideCrossSection::reference(), wavelength, 10.0).unwrap()
}

#[test]
fn reference_mode_is_guided_below_the_slab() {
    let m = reference_mode(937.0);
    let slab = solve_slab_te(1.76, 1.0, 100.0, 937.0);
    assert!(m.n_eff > 1.0 && m.n_eff < slab, "{} vs slab {}", m.n_eff, slab);
    // Frozen from the prototype solver at the same discretization.
    assert!((m.n_eff - 1.1544).abs() < 5e-4, "{}", m.n_eff);
}

#[test]
fn shorter_wavelength_is_more_confined() {
    assert!(reference_mode(793.0).n_eff > reference_mode(937.0).n_eff);
}

#[test]
fn normalized_to_one_milliwatt() {
    let m = reference_mode(937.0);
    assert!((m.power_mw() - 1.0).abs() < 1e-3);
}

#[test]
fn mirror_symmetric_field() {
    let m = reference_mode(937.0);
    let peak = m.field.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    for j in 0..m.ny {
        for i in 0..m.nx / 2 {
            let d = (m.at(i, j) - m.at(m.nx - 1 - i, j)).abs() / peak;
            assert!(d < 1e-10, "asymmetry {d} at ({i}, {j})");
        }
    }
}

#[test]
fn field_decays_monotonically_above_the_ridge() {
    let m = reference_mode(937.0);
    let decay = m.decay_length_nm().unwrap();
    let ic = m.center_column();
    let start = m.surface_y_nm + 3.0 * decay;
    let column: Vec<f64> = (0..m.ny)
        .filter(|&j| m.y_nm(j) >= start)
        .map(|j| m.at(ic, j).abs())
        .collect();
    assert!(column.len() > 10);
    assert!(column.windows(2).all(|w| w[1] <= w[0]));
    // Sideways too, along the membrane plane beyond the ridge edge.
    let jm = (0..m.ny)
        .min_by(|&a, &b| (m.y_nm(a) - 25.0).abs().total_cmp(&(m.y_nm(b) - 25.0).abs()))
        .unwrap();
    let lateral: Vec<f64> = (0..m.nx)
        .filter(|&i| m.x_nm(i) >= 800.0 + 3.0 * decay)
        .map(|i| m.at(i, jm).abs())
        .collect();
    assert!(lateral.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn wide_ridge_approaches_the_slab() {
    let xs = WaveguideCrossSection::new(20.0, 100.0, 50.0, 1.76, 1.0).unwrap();
    let m = solve_mode(&xs, 937.0, 10.0).unwrap();
    let slab = solve_slab_te(1.76, 1.0, 100.0, 937.0);
    assert!((m.n_eff - slab).abs() < 2e-3, "{} vs {}", m.n_eff, slab);
    assert!(m.n_eff < slab);
}

#[test]
fn second_order_mesh_convergence() {
    let xs = WaveguideCrossSection::reference();
    let n: Vec<f64> = [20.0, 10.0, 5.0]
        .iter()
        .map(|&h| solve_mode(&xs, 937.0, h).unwrap().n_eff)
        .collect();
    let ratio = (n[0] - n[1]) / (n[1] - n[2]);
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}, n_eff {n:?}");
}

#[test]
fn larger_window_leaves_the_mode_unchanged() {
    let xs = WaveguideCrossSection::reference();
    let a = solve_mode(&xs, 937.0, 20.0).unwrap();
    let b = solve_mode_with(
        &xs,
        937.0,
        &ModeOptions {
            h_nm: 20.0,
            margin_nm: 3000.0,
        },
    )
    .unwrap();
    assert!((a.n_eff - b.n_eff).abs() < 1e-5);
}

#[test]
fn weakly_confined_guide_has_no_mode_or_fails_cleanly() {
    // Index contrast so small that the guided field leaks far past the
    // window; the solver may still find a barely guided mode.
    let xs = WaveguideCrossSection::new(0.2, 20.0, 10.0, 1.01, 1.0).unwrap();
    match solve_mode(&xs, 937.0, 20.0) {
        Ok(m) => assert!(m.n_eff > 1.0 && m.n_eff < 1.01),
        Err(e) => assert!(
            matches!(e, Error::NoGuidedMode { .. } | Error::NotConverged { .. }),
            "{e}"
        ),
    }
}

#[test]
fn decay_length_matches_the_mode() {
    let m = reference_mode(937.0);
    let d = evanescent_decay_length(m.n_eff, 937.0).unwrap();
    assert!((d - m.decay_length_nm().unwrap()).abs() < 1e-12);
    assert!(d > 150.0 && d < 300.0, "{d}");
}
