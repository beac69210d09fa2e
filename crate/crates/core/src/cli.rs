//! Batch front-end behind the `hobm` binary.
//!
//! ```text
//! hobm [--config FILE] fk [--preset NAME] --q DEG,DEG,.. [--frames FILE]
//! hobm [--config FILE] torques [--dt S] [--no-hobm] [--out FILE]
//! hobm [--config FILE] ringdown [--viscous V[,V]] [--coulomb C[,C]] [--out FILE]
//! hobm [--config FILE] doe run [--face-centered] [--n-center N] [--out FILE]
//! hobm [--config FILE] doe fit [--design FILE] [--out FILE]
//! hobm [--config FILE] doe limit [--model FILE] [--force N] [--out FILE]
//! ```
//!
//! CSV goes to `--out`, else to `<output.dir>/<default name>` when the
//! config sets `output.dir`, else to stdout (summaries then go to stderr).
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 dimension
//! error, 4 infeasible path, 5 numerical failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigError, ProjectConfig, RingdownStart};
use crate::coupling::{self, CouplingError, Robot, ViolationKind};
use crate::csv_out::{self, CsvError};
use crate::doe::{self, AxialKind, DoeError, RingdownResponder};
use crate::kinematics::KinematicsError;
use crate::oscillation::{self, OscillationError};
use crate::presets;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIMENSION: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "hobm", version, about = "HOBM/LWR coupled dynamics batch runs")]
pub struct Cli {
    /// Project configuration (TOML). Defaults to the built-in scenario.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// End-effector pose of one robot.
    Fk(FkArgs),
    /// Actuator torques of the LWR along the configured sweep.
    Torques(TorquesArgs),
    /// HOBM ringdown after the LWR stops.
    Ringdown(RingdownArgs),
    /// Central-composite experiment on the ringdown peak force.
    #[command(subcommand)]
    Doe(DoeCommand),
}

#[derive(Debug, Args)]
pub struct FkArgs {
    /// Preset robot; defaults to the config's LWR.
    #[arg(long)]
    pub preset: Option<String>,
    /// Comma-separated joint values (deg for revolute, m for prismatic).
    #[arg(long, allow_hyphen_values = true)]
    pub q: String,
    /// Also write every frame's pose to this CSV.
    #[arg(long)]
    pub frames: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TorquesArgs {
    /// Sample step (s); overrides `trajectory.dt_s`.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Ignore the HOBM: total torques equal the LWR's own.
    #[arg(long)]
    pub no_hobm: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RingdownArgs {
    /// Viscous friction per joint (N·m·s/rad): one value or two.
    #[arg(long)]
    pub viscous: Option<String>,
    /// Coulomb friction per joint (N·m): one value or two.
    #[arg(long)]
    pub coulomb: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum DoeCommand {
    /// Generate the design and evaluate the ringdown at every point.
    Run {
        #[arg(long)]
        face_centered: bool,
        #[arg(long)]
        n_center: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the quadratic model to a design CSV (runs the design if omitted).
    Fit {
        #[arg(long)]
        design: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Admissible-acceleration grid under an effort limit.
    Limit {
        /// Model CSV from `doe fit` (fits a fresh one if omitted).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Effort limit (N); overrides `doe.effort_limit_N`.
        #[arg(long)]
        force: Option<f64>,
        #[arg(long, default_value = doe::ACCEL_FACTOR)]
        accel_factor: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, message)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::config(e.to_string())
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        match e {
            CsvError::Doe(d) => d.into(),
            other => Self::config(other.to_string()),
        }
    }
}

impl From<DoeError> for CliError {
    fn from(e: DoeError) -> Self {
        let code = match e {
            DoeError::RankDeficient { .. } | DoeError::Responder { .. } => EXIT_NUMERICAL,
            DoeError::Dimension { .. } => EXIT_DIMENSION,
            _ => EXIT_CONFIG,
        };
        Self::new(code, e.to_string())
    }
}

fn coupling_code(e: &CouplingError) -> i32 {
    match e {
        CouplingError::AtTime { source, .. } => coupling_code(source),
        CouplingError::FixedJointCount { .. } | CouplingError::Kinematics(KinematicsError::DimensionMismatch { .. }) => {
            EXIT_DIMENSION
        }
        CouplingError::Trajectory(_)
        | CouplingError::InvalidTimeStep(_)
        | CouplingError::InvalidPayload(_)
        | CouplingError::UnsupportedHobm => EXIT_CONFIG,
        CouplingError::SingularHobm { .. } | CouplingError::SingularLwr { .. } | CouplingError::Unreachable { .. } => {
            EXIT_INFEASIBLE
        }
        _ => EXIT_NUMERICAL,
    }
}

impl From<CouplingError> for CliError {
    fn from(e: CouplingError) -> Self {
        Self::new(coupling_code(&e), e.to_string())
    }
}

impl From<OscillationError> for CliError {
    fn from(e: OscillationError) -> Self {
        let code = match &e {
            OscillationError::InvalidConfig(_) | OscillationError::InvalidBand(_) => EXIT_CONFIG,
            OscillationError::Coupling(CouplingError::Unreachable { .. }) => EXIT_CONFIG,
            _ => EXIT_NUMERICAL,
        };
        Self::new(code, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::config(e.to_string())
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => ProjectConfig::load(path)?,
        None => ProjectConfig::default(),
    };
    match &cli.command {
        Command::Fk(a) => cmd_fk(&cfg, a, out),
        Command::Torques(a) => cmd_torques(&cfg, a, out, err),
        Command::Ringdown(a) => cmd_ringdown(&cfg, a, out, err),
        Command::Doe(d) => cmd_doe(&cfg, d, out, err),
    }
}

/// Where a command's CSV goes: a file path, or `None` for stdout.
fn output_path(cfg: &ProjectConfig, explicit: &Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
    explicit
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(|d| d.join(default_name)))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::config(format!("{}: {e}", parent.display())))?;
    }
    let f = File::create(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

/// Writes a table to its file (summary to `out`) or to `out` (summary to
/// `err`).
fn emit<F>(
    path: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
    table: F,
    summary: &str,
) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CsvError>,
{
    match path {
        Some(p) => {
            let mut f = create(&p)?;
            table(&mut f)?;
            f.flush()?;
            writeln!(out, "wrote {}", p.display())?;
            out.write_all(summary.as_bytes())?;
        }
        None => {
            table(out)?;
            err.write_all(summary.as_bytes())?;
        }
    }
    Ok(())
}

/// Comma-separated numbers.
pub fn parse_list(text: &str) -> Option<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect()
}

fn parse_pair(text: &str, what: &str) -> Result<[f64; 2], CliError> {
    match parse_list(text).as_deref() {
        Some(&[v]) => Ok([v, v]),
        Some(&[a, b]) => Ok([a, b]),
        _ => Err(CliError::config(format!("--{what} expects one or two numbers, got `{text}`"))),
    }
}

fn cmd_fk(cfg: &ProjectConfig, a: &FkArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let model = match &a.preset {
        Some(name) => presets::by_name(name).ok_or_else(|| CliError::config(format!("unknown preset `{name}`")))?,
        None => cfg.lwr_model()?,
    };
    let chain = model.chain();
    let raw = parse_list(&a.q).ok_or_else(|| CliError::new(EXIT_DIMENSION, format!("malformed joint list `{}`", a.q)))?;
    if raw.len() != chain.dof() {
        return Err(CliError::new(
            EXIT_DIMENSION,
            format!("expected {} joint values, got {}", chain.dof(), raw.len()),
        ));
    }
    let q: Vec<f64> = raw
        .iter()
        .zip(chain.rows())
        .map(|(&v, row)| match row.joint_type {
            crate::JointType::Revolute => v.to_radians(),
            crate::JointType::Prismatic => v,
        })
        .collect();
    let frames = chain
        .forward_kinematics(&q)
        .map_err(|e| CliError::new(EXIT_DIMENSION, e.to_string()))?;
    let ee = frames.last().expect("non-empty chain");
    let p = ee.translation.vector;
    let r = ee.rotation.to_rotation_matrix();
    let (roll, pitch, yaw) = ee.rotation.euler_angles();
    writeln!(out, "position_m {:.9} {:.9} {:.9}", p.x, p.y, p.z)?;
    for i in 0..3 {
        writeln!(out, "rotation_row{} {:.9} {:.9} {:.9}", i + 1, r[(i, 0)], r[(i, 1)], r[(i, 2)])?;
    }
    writeln!(
        out,
        "rpy_deg {:.6} {:.6} {:.6}",
        roll.to_degrees(),
        pitch.to_degrees(),
        yaw.to_degrees()
    )?;
    if let Some(path) = &a.frames {
        let mut f = create(path)?;
        csv_out::write_frames(&mut f, &frames)?;
        f.flush()?;
    }
    Ok(())
}

fn cmd_torques(cfg: &ProjectConfig, a: &TorquesArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let dt = a.dt.unwrap_or(cfg.trajectory.dt_s);
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CliError::config(format!("dt must be positive, got {dt}")));
    }
    let profile = cfg.profile()?;
    let fixed = cfg.fixed_joints();
    let samples = if a.no_hobm {
        coupling::simulate_lwr_only(&cfg.lwr_model()?, &profile, &fixed, dt)?
    } else {
        let sys = cfg.coupled_system()?;
        let report = coupling::check_path_feasible(&sys, &profile, &fixed, dt)?;
        if !report.feasible {
            let mut msg = format!(
                "infeasible path: {} of {} samples violate limits",
                report.violations.len(),
                report.samples
            );
            for v in report.violations.iter().take(10) {
                let robot = match v.robot {
                    Robot::Lwr => "lwr",
                    Robot::Hobm => "hobm",
                };
                let what = match v.kind {
                    ViolationKind::Singular { measure } => format!("singular (measure {measure:.3e})"),
                    ViolationKind::Unreachable { radius } => format!("unreachable (radius {radius:.6} m)"),
                };
                msg.push_str(&format!("\n  t={:.6} s {robot} {what}", v.t));
            }
            if report.violations.len() > 10 {
                msg.push_str(&format!("\n  ... {} more", report.violations.len() - 10));
            }
            return Err(CliError::new(EXIT_INFEASIBLE, msg));
        }
        coupling::simulate_coupled(&sys, &profile, &fixed, dt)?
    };
    let ratios = coupling::peak_ratios(&samples);
    let mut summary = String::from("peak_ratio");
    for (j, r) in ratios.iter().enumerate() {
        summary.push_str(&format!(" j{}={:.6}", j + 1, r));
    }
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    summary.push_str(&format!("\nmax_peak_ratio {max:.6}\n"));
    emit(
        output_path(cfg, &a.out, "torques.csv"),
        out,
        err,
        |w| csv_out::write_torques(w, &samples),
        &summary,
    )
}

fn cmd_ringdown(cfg: &ProjectConfig, a: &RingdownArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mut base = cfg.ringdown_base()?;
    if let Some(v) = &a.viscous {
        base.viscous_friction = parse_pair(v, "viscous")?;
    }
    if let Some(c) = &a.coulomb {
        base.coulomb_friction = parse_pair(c, "coulomb")?;
    }
    base.validate()?;
    let started = match cfg.ringdown.initial {
        RingdownStart::Stop => base.after_stop(&cfg.ringdown.stop.maneuver())?,
        RingdownStart::State => base,
    };
    let samples = oscillation::simulate_ringdown(&started)?;
    let settling = oscillation::settling_time(&samples, cfg.ringdown.settling_band_rad)?;
    let peak = oscillation::peak_force(&samples)?;
    let summary = format!("settling_time_s {settling:.6}\npeak_force_N {peak:.6}\n");
    emit(
        output_path(cfg, &a.out, "ringdown.csv"),
        out,
        err,
        |w| csv_out::write_ringdown(w, &samples),
        &summary,
    )
}

fn responder(cfg: &ProjectConfig) -> Result<RingdownResponder, CliError> {
    let mut base = cfg.ringdown_base()?;
    base.duration = cfg.doe.duration_s;
    base.validate()?;
    Ok(RingdownResponder::new(base, cfg.ringdown.stop.maneuver()))
}

fn design(cfg: &ProjectConfig, axial: AxialKind, n_center: usize) -> Result<doe::CcDesign, CliError> {
    let d = &cfg.doe;
    let factors = doe::ringdown_factors(d.coulomb_friction_nm, d.payload_mass_kg, d.deceleration_mps2, axial)?;
    Ok(doe::ccd_generate(&factors, axial, n_center)?)
}

fn run_default_design(cfg: &ProjectConfig) -> Result<(doe::CcDesign, Vec<f64>), CliError> {
    let design = design(cfg, cfg.doe.axial, cfg.doe.n_center)?;
    let responses = responder(cfg)?.run(&design)?;
    Ok((design, responses))
}

fn fit_default(cfg: &ProjectConfig) -> Result<doe::QuadraticModel, CliError> {
    let (design, responses) = run_default_design(cfg)?;
    Ok(doe::fit_quadratic(&design, &responses)?)
}

fn cmd_doe(cfg: &ProjectConfig, cmd: &DoeCommand, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        DoeCommand::Run {
            face_centered,
            n_center,
            out: path,
        } => {
            let axial = if *face_centered { AxialKind::FaceCentered } else { cfg.doe.axial };
            let design = design(cfg, axial, n_center.unwrap_or(cfg.doe.n_center))?;
            let responses = responder(cfg)?.run(&design)?;
            let summary = format!(
                "points {}\naxial_distance {:.12}\n",
                design.points.len(),
                design.axial_distance
            );
            emit(
                output_path(cfg, path, "design.csv"),
                out,
                err,
                |w| csv_out::write_design(w, &design, Some(&responses), doe::RESPONSE_NAME),
                &summary,
            )
        }
        DoeCommand::Fit { design, out: path } => {
            let model = match design {
                Some(p) => {
                    let f = File::open(p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
                    let t = csv_out::read_design(f)?;
                    doe::fit_points(&t.factors, &t.points, &t.responses)?
                }
                None => fit_default(cfg)?,
            };
            let summary = format!("r_squared {:.12}\nmax_residual {:.6e}\n", model.r_squared, model.max_residual);
            emit(
                output_path(cfg, path, "model.csv"),
                out,
                err,
                |w| csv_out::write_model(w, &model),
                &summary,
            )
        }
        DoeCommand::Limit {
            model,
            force,
            accel_factor,
            out: path,
        } => {
            let limit = force.unwrap_or(cfg.doe.effort_limit_n);
            if !limit.is_finite() {
                return Err(CliError::config("--force must be finite"));
            }
            let model = match model {
                Some(p) => {
                    let f = File::open(p).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?;
                    csv_out::read_model(f)?
                }
                None => fit_default(cfg)?,
            };
            let a = model.factor_index(accel_factor)?;
            if model.k() != 3 {
                return Err(DoeError::SurfaceFactorCount(model.k()).into());
            }
            let n = cfg.doe.grid_points;
            let extent = model.coded_extent;
            // The config's ranges are the design extents of the default
            // factors; other factors span the model's coded extent.
            let grid = |i: usize| {
                let f = &model.factors[i];
                let [lo, hi] = match f.name.as_str() {
                    doe::FRICTION_FACTOR => cfg.doe.coulomb_friction_nm,
                    doe::MASS_FACTOR => cfg.doe.payload_mass_kg,
                    _ => [f.decode(-extent), f.decode(extent)],
                };
                doe::linspace(lo, hi, n)
            };
            let others: Vec<usize> = (0..3).filter(|&i| i != a).collect();
            let surface = doe::acceleration_limit_surface(&model, limit, accel_factor, &grid(others[0]), &grid(others[1]))?;
            let count = |s: &str| surface.cells.iter().flatten().filter(|c| c.status() == s).count();
            let summary = format!(
                "effort_limit_N {limit}\ncells {}\nbounded {}\nunbounded {}\ninfeasible {}\n",
                surface.cells.iter().map(Vec::len).sum::<usize>(),
                count("bounded"),
                count("unbounded"),
                count("infeasible"),
            );
            emit(
                output_path(cfg, path, "limit.csv"),
                out,
                err,
                |w| csv_out::write_limit_grid(w, &surface),
                &summary,
            )
        }
    }
}
