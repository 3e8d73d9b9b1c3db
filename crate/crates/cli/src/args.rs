use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use memtrap::config::RunConfig;
use memtrap::geometry::DesignFamily;
use memtrap::sweep::Objective;

/// Mode, trap, thin-film and thermal models for suspended-membrane
/// waveguide atom traps.
///
/// Values come from built-in defaults, then the `--config` file, then
/// command-line flags; later sources win.
#[derive(Debug, Parser)]
#[command(name = "memtrap", version, arg_required_else_help = true)]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the fundamental quasi-TE mode of the ridge cross-section.
    Mode {
        #[command(flatten)]
        xs: CrossSectionArgs,
        #[arg(long, default_value_t = 937.0)]
        lambda_nm: f64,
        /// Write the field grid (x_nm, y_nm, E) here.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Transmission of a free-standing film for a list of thicknesses.
    Film {
        /// Film refractive index [default: n_core].
        #[arg(long)]
        n: Option<f64>,
        #[arg(long, default_value_t = 852.0)]
        lambda_nm: f64,
        #[arg(long, default_value_t = 45.0)]
        theta_deg: f64,
        #[arg(long, value_delimiter = ',', default_value = "25,50,75")]
        d_nm: Vec<f64>,
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Two-color trap depth and position.
    Trap {
        #[command(flatten)]
        xs: CrossSectionArgs,
        #[arg(long)]
        p_blue_mw: Option<f64>,
        #[arg(long)]
        p_red_mw: Option<f64>,
        #[arg(long)]
        blue_nm: Option<f64>,
        #[arg(long)]
        red_nm: Option<f64>,
        /// Write the total potential grid (x_nm, y_nm, U_uK) here.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Steady-state temperature of one device at one waveguide power.
    Thermal {
        #[command(flatten)]
        design: DesignArgs,
        #[command(flatten)]
        material: MaterialArgs,
        #[arg(long, default_value_t = 10.0)]
        power_mw: f64,
        /// Write the temperature grid (x_um, y_um, T_K) here.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Failure power against span for one design family.
    Failcurve {
        #[command(flatten)]
        design: DesignArgs,
        #[command(flatten)]
        material: MaterialArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        spans_um: Vec<f64>,
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Propagation loss from a scattered-light trace (position_cm,intensity).
    Fitloss {
        trace: PathBuf,
        /// Print JSON instead of key: value lines.
        #[arg(long)]
        json: bool,
    },
    /// Grid sweep over cross-section parameters, optionally refined.
    Sweep {
        #[arg(long, value_delimiter = ',')]
        w_wg_um: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        t_wg_nm: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        t_mem_nm: Option<Vec<f64>>,
        #[arg(long)]
        objective: Option<Objective>,
        #[arg(long)]
        h_nm: Option<f64>,
        #[arg(long)]
        max_points: Option<usize>,
        /// Refine the best grid point for depth per mW within the bounds.
        #[arg(long)]
        optimize: bool,
        /// Width bounds LO,HI for refinement [default: axis range].
        #[arg(long, value_delimiter = ',', num_args = 2)]
        w_bounds_um: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', num_args = 2)]
        t_wg_bounds_nm: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', num_args = 2)]
        t_mem_bounds_nm: Option<Vec<f64>>,
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Film table, reference trap, calibrated peaks and failure curves,
    /// with a summary that records the resolved configuration.
    Report {
        #[arg(long, default_value = "report")]
        out_dir: PathBuf,
        /// Use the configured emissivity and strip width as they are.
        #[arg(long)]
        no_calibrate: bool,
        #[arg(long, value_delimiter = ',', default_value = "125,250,400,500")]
        spans_um: Vec<f64>,
        #[command(flatten)]
        xs: CrossSectionArgs,
        #[command(flatten)]
        material: MaterialArgs,
        #[arg(long)]
        cell_um: Option<f64>,
    },
}

#[derive(Debug, Args)]
pub struct CrossSectionArgs {
    #[arg(long)]
    pub w_wg_um: Option<f64>,
    #[arg(long)]
    pub t_wg_nm: Option<f64>,
    #[arg(long)]
    pub t_mem_nm: Option<f64>,
    #[arg(long)]
    pub n_core: Option<f64>,
    /// Mode-solver grid spacing.
    #[arg(long)]
    pub h_nm: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub variant: Option<DesignFamily>,
    #[arg(long)]
    pub span_um: Option<f64>,
    #[arg(long)]
    pub gap_um: Option<f64>,
    #[arg(long)]
    pub strip_width_um: Option<f64>,
    #[arg(long)]
    pub cell_um: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MaterialArgs {
    #[arg(long)]
    pub k_w_per_mk: Option<f64>,
    #[arg(long)]
    pub alpha_db_per_cm: Option<f64>,
    #[arg(long)]
    pub emissivity: Option<f64>,
    #[arg(long)]
    pub t_fail_k: Option<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl CrossSectionArgs {
    pub fn apply(&self, c: &mut RunConfig) {
        set(&mut c.w_wg_um, self.w_wg_um);
        set(&mut c.t_wg_nm, self.t_wg_nm);
        set(&mut c.t_mem_nm, self.t_mem_nm);
        set(&mut c.n_core, self.n_core);
        set(&mut c.h_nm, self.h_nm);
    }
}

impl DesignArgs {
    pub fn apply(&self, c: &mut RunConfig) {
        set(&mut c.variant, self.variant);
        set(&mut c.span_um, self.span_um);
        if self.span_um.is_some() {
            c.hole_diameter_um = None;
        }
        if self.gap_um.is_some() {
            c.gap_um = self.gap_um;
        }
        set(&mut c.strip_width_um, self.strip_width_um);
        set(&mut c.cell_um, self.cell_um);
    }
}

impl MaterialArgs {
    pub fn apply(&self, c: &mut RunConfig) {
        set(&mut c.k_w_per_mk, self.k_w_per_mk);
        set(&mut c.alpha_db_per_cm, self.alpha_db_per_cm);
        set(&mut c.emissivity, self.emissivity);
        set(&mut c.t_fail_k, self.t_fail_k);
    }
}
