use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use memtrap::atomtrap::TrapModel;
use memtrap::config::RunConfig;
use memtrap::geometry::{rasterize_mask, DesignFamily};
use memtrap::io::{fmt_sig, write_atomic};
use memtrap::modesolver::solve_mode;
use memtrap::powerlab::{fit_propagation_loss, ScatterTrace};
use memtrap::sweep::{grid_sweep, optimize_depth_per_mw, write_sweep_csv, Bounds, SweepSpec};
use memtrap::thermal::{
    calibrate, failure_power_curve, peak_temperature, reference_targets, steady_state_temperature, write_curve_csv,
    CurveSetup,
};
use memtrap::thinfilm::{find_ar_thickness, membrane_transmission_report, write_report_csv};
use memtrap::{Execution, Result};
use sha2::{Digest, Sha256};

use crate::args::{Cli, Command};

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Mode { xs, lambda_nm, csv } => {
            xs.apply(&mut cfg);
            let mode = solve_mode(&cfg.xsection()?, lambda_nm, cfg.h_nm)?;
            if let Some(path) = csv {
                write_atomic(&path, |w| mode.write_csv(w))?;
            }
            print_record(&[
                ("lambda_nm", mode.wavelength_nm),
                ("n_eff", mode.n_eff),
                ("decay_length_nm", mode.decay_length_nm()?),
                ("iterations", mode.iterations as f64),
            ]);
        }
        Command::Film {
            n,
            lambda_nm,
            theta_deg,
            d_nm,
            csv,
        } => {
            let rows = membrane_transmission_report(n.unwrap_or(cfg.n_core), &d_nm, lambda_nm, theta_deg)?;
            emit(csv.as_deref(), |w| write_report_csv(&rows, w))?;
        }
        Command::Trap {
            xs,
            p_blue_mw,
            p_red_mw,
            blue_nm,
            red_nm,
            csv,
        } => {
            xs.apply(&mut cfg);
            cfg.p_blue_mw = p_blue_mw.unwrap_or(cfg.p_blue_mw);
            cfg.p_red_mw = p_red_mw.unwrap_or(cfg.p_red_mw);
            cfg.blue_nm = blue_nm.unwrap_or(cfg.blue_nm);
            cfg.red_nm = red_nm.unwrap_or(cfg.red_nm);
            let model = TrapModel::with_wavelengths(&cfg.xsection()?, cfg.h_nm, cfg.blue_nm, cfg.red_nm)?;
            let report = model.characterize(cfg.p_blue_mw, cfg.p_red_mw)?;
            if let Some(path) = csv {
                write_atomic(&path, |w| report.total.write_csv(w))?;
            }
            print!("{}", report.to_record());
        }
        Command::Thermal {
            design,
            material,
            power_mw,
            csv,
        } => {
            design.apply(&mut cfg);
            material.apply(&mut cfg);
            cfg.validate()?;
            let mask = rasterize_mask(&cfg.design()?, &cfg.xsection()?, cfg.cell_um)?;
            let field = steady_state_temperature(&mask, &cfg.material()?, power_mw, &cfg.thermal)?;
            if let Some(path) = csv {
                write_atomic(&path, |w| field.write_csv(w))?;
            }
            print_record(&[
                ("power_mw", power_mw),
                ("peak_k", peak_temperature(&field)),
                ("iterations", field.iterations as f64),
                ("residual_k", field.residual_k),
                ("absorbed_w", field.absorbed_w),
                ("contact_flux_w", field.contact_flux_w),
                ("radiated_w", field.radiated_w),
                ("energy_imbalance", field.energy_imbalance()),
            ]);
        }
        Command::Failcurve {
            design,
            material,
            spans_um,
            csv,
        } => {
            design.apply(&mut cfg);
            material.apply(&mut cfg);
            cfg.validate()?;
            let setup = CurveSetup {
                family: cfg.variant,
                strip_width_um: cfg.strip_width_um,
                xsection: cfg.xsection()?,
                cell_um: cfg.cell_um,
            };
            let curve = failure_power_curve(&setup, &spans_um, &cfg.material()?, &cfg.thermal, Execution::default())?;
            emit(csv.as_deref(), |w| write_curve_csv(&curve, w))?;
        }
        Command::Fitloss { trace, json } => {
            let fit = fit_propagation_loss(&ScatterTrace::from_csv(File::open(&trace)?)?)?;
            if json {
                println!("{}", serde_json::to_string(&fit)?);
            } else {
                println!("alpha_db_per_cm: {:.3}", fit.alpha_db_per_cm);
                println!("std_error_db_per_cm: {}", fmt_sig(fit.std_error_db_per_cm, 6));
                println!("samples: {}", fit.samples);
            }
        }
        Command::Sweep {
            w_wg_um,
            t_wg_nm,
            t_mem_nm,
            objective,
            h_nm,
            max_points,
            optimize,
            w_bounds_um,
            t_wg_bounds_nm,
            t_mem_bounds_nm,
            csv,
        } => {
            let mut spec = cfg.sweep.clone().unwrap_or_else(|| sweep_from(&cfg));
            if let Some(v) = w_wg_um {
                spec.w_wg_um = v;
            }
            if let Some(v) = t_wg_nm {
                spec.t_wg_nm = v;
            }
            if let Some(v) = t_mem_nm {
                spec.t_mem_nm = v;
            }
            spec.objective = objective.unwrap_or(spec.objective);
            spec.h_nm = h_nm.unwrap_or(spec.h_nm);
            spec.max_points = max_points.unwrap_or(spec.max_points);
            spec.validate()?;
            if optimize {
                let bounds = Bounds {
                    w_wg_um: bound(w_bounds_um, &spec.w_wg_um),
                    t_wg_nm: bound(t_wg_bounds_nm, &spec.t_wg_nm),
                    t_mem_nm: bound(t_mem_bounds_nm, &spec.t_mem_nm),
                };
                if let Some(path) = &csv {
                    let rows = grid_sweep(&spec, Execution::default())?;
                    write_atomic(path, |w| write_sweep_csv(&rows, w))?;
                }
                let opt = optimize_depth_per_mw(&bounds, &spec, Execution::default())?;
                print_record(&[
                    ("w_wg_um", opt.point.w_wg_um),
                    ("t_wg_nm", opt.point.t_wg_nm),
                    ("t_mem_nm", opt.point.t_mem_nm),
                    ("depth_per_mw_uk", opt.depth_per_mw),
                    ("trap_height_nm", opt.trap_height_nm.unwrap_or(f64::NAN)),
                    ("grid_best_w_wg_um", opt.grid_best.w_wg_um),
                    ("grid_best_t_wg_nm", opt.grid_best.t_wg_nm),
                    ("grid_best_t_mem_nm", opt.grid_best.t_mem_nm),
                    ("grid_best_depth_per_mw_uk", opt.grid_best_depth_per_mw),
                    ("evaluations", opt.evaluations as f64),
                ]);
            } else {
                let rows = grid_sweep(&spec, Execution::default())?;
                emit(csv.as_deref(), |w| write_sweep_csv(&rows, w))?;
            }
        }
        Command::Report {
            out_dir,
            no_calibrate,
            spans_um,
            xs,
            material,
            cell_um,
        } => {
            xs.apply(&mut cfg);
            material.apply(&mut cfg);
            cfg.cell_um = cell_um.unwrap_or(cfg.cell_um);
            cfg.validate()?;
            report(&cfg, &out_dir, !no_calibrate, &spans_um)?;
        }
    }
    Ok(())
}

/// Single-point sweep over the configured cross-section.
fn sweep_from(cfg: &RunConfig) -> SweepSpec {
    SweepSpec {
        w_wg_um: vec![cfg.w_wg_um],
        t_wg_nm: vec![cfg.t_wg_nm],
        t_mem_nm: vec![cfg.t_mem_nm],
        n_core: cfg.n_core,
        n_ambient: cfg.n_ambient,
        blue_nm: cfg.blue_nm,
        red_nm: cfg.red_nm,
        blue_fraction: cfg.p_blue_mw / (cfg.p_blue_mw + cfg.p_red_mw),
        h_nm: cfg.h_nm,
        family: cfg.variant,
        span_um: cfg.span_um,
        strip_width_um: cfg.strip_width_um,
        cell_um: cfg.cell_um,
        material: cfg.material().unwrap_or_default(),
        thermal: cfg.thermal,
        ..SweepSpec::default()
    }
}

fn bound(flag: Option<Vec<f64>>, axis: &[f64]) -> (f64, f64) {
    match flag {
        Some(v) => (v[0], v[1]),
        None => (
            axis.iter().copied().fold(f64::INFINITY, f64::min),
            axis.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
    }
}

fn print_record(rows: &[(&str, f64)]) {
    for (k, v) in rows {
        println!("{k}: {}", fmt_sig(*v, 6));
    }
}

/// Writes to `path` atomically, or to stdout when no path is given.
fn emit<F>(path: Option<&Path>, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => write_atomic(p, body),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn report(cfg: &RunConfig, out_dir: &Path, calibrated: bool, spans_um: &[f64]) -> Result<()> {
    let config_json = cfg.to_json();
    let hash = Sha256::digest(config_json.as_bytes());
    let mut s = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(s, "{k}: {v}");
        println!("{k}: {v}");
    };
    line("config_sha256", format!("{hash:x}"));

    let film = membrane_transmission_report(cfg.n_core, &[25.0, 50.0, 75.0], 852.0, 45.0)?;
    write_atomic(&out_dir.join("film.csv"), |w| write_report_csv(&film, w))?;
    for row in &film {
        line(&format!("film_t_circ_{}nm", row.d_nm), fmt_sig(row.t_circ, 6));
    }
    line(
        "film_ar_thickness_nm",
        fmt_sig(find_ar_thickness(cfg.n_core, 852.0, 45.0)?, 6),
    );

    let xs = cfg.xsection()?;
    let trap = TrapModel::with_wavelengths(&xs, cfg.h_nm, cfg.blue_nm, cfg.red_nm)?
        .characterize(cfg.p_blue_mw, cfg.p_red_mw)?;
    write_atomic(&out_dir.join("trap_potential.csv"), |w| trap.total.write_csv(w))?;
    line("trap_depth_uk", fmt_sig(trap.depth_uk, 6));
    line("trap_height_nm", fmt_sig(trap.min_height_nm, 6));

    let base = cfg.material()?;
    let (mat, strip) = if calibrated {
        let cal = calibrate(&reference_targets(), &xs, &base, cfg.cell_um, &cfg.thermal)?;
        line("calibrated_emissivity", fmt_sig(cal.emissivity, 6));
        line("calibrated_strip_width_um", fmt_sig(cal.strip_width_um, 6));
        for (t, p) in reference_targets().iter().zip(&cal.peaks_k) {
            line(
                &format!(
                    "peak_k_{}_{}um_{}mw",
                    t.design.variant.family().name(),
                    t.design.span_um(),
                    t.power_mw
                ),
                fmt_sig(*p, 6),
            );
        }
        (cal.apply(&base), cal.strip_width_um)
    } else {
        (base, cfg.strip_width_um)
    };

    for family in [
        DesignFamily::Straight,
        DesignFamily::HybridNeedle,
        DesignFamily::Infinity,
    ] {
        let setup = CurveSetup {
            family,
            strip_width_um: strip,
            xsection: xs,
            cell_um: cfg.cell_um,
        };
        let curve = failure_power_curve(&setup, spans_um, &mat, &cfg.thermal, Execution::default())?;
        write_atomic(&out_dir.join(format!("failcurve_{}.csv", family.name())), |w| {
            write_curve_csv(&curve, w)
        })?;
        for p in &curve {
            line(
                &format!("p_fail_mw_{}_{}um", family.name(), p.span_um),
                fmt_sig(p.p_fail_mw, 6),
            );
        }
    }

    s.push_str("config:\n");
    s.push_str(&config_json);
    s.push('\n');
    write_atomic(&out_dir.join("summary.txt"), |w| Ok(w.write_all(s.as_bytes())?))?;
    Ok(())
}
