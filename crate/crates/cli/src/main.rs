mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use shilnikov_core::{ParamName, PwlParams, Side, State3};

use config::{ConfigFile, PARAMS_SECTION};

#[derive(Parser, Debug)]
#[command(name = "shilnikov", version, about = "Homoclinic and chaos analysis of a 3D piecewise-linear normal form")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// `key = value` file with a `[params]` section and one section per subcommand
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Named parameter set used for any parameter not given otherwise
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    /// Print the effective configuration and exit
    #[arg(long, global = true)]
    dump_config: bool,
    /// Worker threads for rasters and sweeps
    #[arg(long, global = true, env = "SHILNIKOV_SCAN_JOBS")]
    jobs: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    tau_l: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    sigma_l: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    delta_l: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    tau_r: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    sigma_r: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    delta_r: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    mu: Option<f64>,
}

const GLOBAL_IDS: [&str; 11] = [
    "config",
    "preset",
    "dump_config",
    "jobs",
    "tau_l",
    "sigma_l",
    "delta_l",
    "tau_r",
    "sigma_r",
    "delta_r",
    "mu",
];

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Preset {
    /// Saddle-focus left, flip saddle right, tau_r = 0.58
    Example,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SideArg {
    Left,
    Right,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Left => Side::Left,
            SideArg::Right => Side::Right,
        }
    }
}

/// A point given as `x,y,z`.
#[derive(Clone, Copy, Debug)]
pub struct Point(pub State3);

impl std::str::FromStr for Point {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected three comma-separated numbers, got `{s}`"));
        }
        let mut v = [0.0; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|_| format!("`{p}` is not a number"))?;
        }
        Ok(Point(State3::new(v[0], v[1], v[2])))
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fixed points of both branches and their admissibility
    FixedPoints(ReportArgs),
    /// Eigenvalues, moduli and classification of both sides
    Eigen(ReportArgs),
    /// Homoclinic intersection test for one fixed point
    Detect(DetectArgs),
    /// Sign-change test on the right fixed point's one-dimensional manifold
    NecessaryCondition(ReportArgs),
    /// Continuous return-time model, its envelopes and root bounds
    ReturnTime(ReturnTimeArgs),
    /// Iterates of the map
    Orbit(OrbitArgs),
    /// Continuous-time companion orbit through the integer iterates
    Interpolate(InterpolateArgs),
    /// Lyapunov spectrum along an orbit
    Lyapunov(LyapunovArgs),
    /// One-parameter sweep of orbit samples, exponents and verdicts
    Bifurcation(BifurcationArgs),
    /// Final orbit norm over a planar grid
    Basin(BasinArgs),
    /// One-dimensional stable or unstable manifold of a fixed point
    Manifold(ManifoldArgs),
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetectMode {
    Forward,
    Backward,
    FlipForward,
    FlipBackward,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    #[arg(long, value_enum, default_value_t = DetectMode::Forward)]
    pub mode: DetectMode,
    /// Fixed point to test; chosen from the spectra when omitted
    #[arg(long, value_enum)]
    pub home: Option<SideArg>,
    /// Largest iterate index; derived from the return-time model when omitted
    #[arg(long)]
    pub n_cap: Option<usize>,
    /// Fail instead of following the far-side inverse branch through folds
    #[arg(long)]
    pub strict_preimages: bool,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV of the traced iterates
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReturnTimeArgs {
    /// Side whose affine branch drives the orbit
    #[arg(long, value_enum)]
    pub side: Option<SideArg>,
    /// Border start point `0,y,z`; defaults to the forward detector's P0
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<Point>,
    /// Largest time searched for roots; defaults to the model horizon
    #[arg(long)]
    pub t_max: Option<f64>,
    /// CSV of f and its envelopes
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 20.0)]
    pub csv_t_end: f64,
    #[arg(long, default_value_t = 2001)]
    pub csv_samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OrbitArgs {
    #[arg(long, allow_hyphen_values = true, default_value = "0.3,-0.5,-0.5")]
    pub x0: Point,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// CSV with columns index,x,y,z
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InterpolateArgs {
    #[arg(long, allow_hyphen_values = true, default_value = "0.3,-0.5,-0.5")]
    pub x0: Point,
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LyapunovArgs {
    #[arg(long, allow_hyphen_values = true, default_value = "0.3,-0.5,-0.5")]
    pub x0: Point,
    #[arg(long, default_value_t = 100_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1000)]
    pub transient: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BifurcationArgs {
    #[arg(long, default_value = "tau_r")]
    pub param: ParamName,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.55)]
    pub from: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.65)]
    pub to: f64,
    #[arg(long, default_value_t = 201)]
    pub steps: usize,
    #[arg(long, allow_hyphen_values = true, default_value = "0.3,-0.5,-0.5")]
    pub x0: Point,
    #[arg(long, default_value_t = 1000)]
    pub transient: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = shilnikov_core::analysis::DEFAULT_ESCAPE_RADIUS)]
    pub escape_radius: f64,
    /// Skip the homoclinic verdicts per column
    #[arg(long)]
    pub no_detect: bool,
    /// CSV of orbit samples
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV with one row per swept value
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BasinArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub z: f64,
    #[arg(long, default_value_t = shilnikov_core::analysis::DEFAULT_RESOLUTION)]
    pub resolution: usize,
    #[arg(long, default_value_t = shilnikov_core::analysis::DEFAULT_RASTER_ITERS)]
    pub iters: usize,
    #[arg(long, default_value_t = shilnikov_core::analysis::DEFAULT_CEILING)]
    pub ceiling: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = -1.0)]
    pub x_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    pub x_max: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = -1.0)]
    pub y_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    pub y_max: f64,
    /// Raster file (text header and CSV grid)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ManifoldKind {
    Stable,
    Unstable,
    /// Interpolated orbit of the border point of the one-dimensional direction
    Companion,
}

#[derive(Args, Debug)]
pub struct ManifoldArgs {
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    pub side: SideArg,
    #[arg(long, value_enum, default_value_t = ManifoldKind::Unstable)]
    pub kind: ManifoldKind,
    #[arg(long, default_value_t = 50.0)]
    pub arc_budget: f64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iterates: usize,
    /// Time range of the companion curve
    #[arg(long, default_value_t = 10.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure of a run, with the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(shilnikov_core::Error),
    Io(String),
}

impl Failure {
    fn report(&self) -> (String, u8) {
        match self {
            Failure::Usage(m) => (format!("error: {m}"), 2),
            Failure::Compute(e) => (format!("error[{}]: {e}", diagnostic_name(e)), 1),
            Failure::Io(m) => (format!("error[Io]: {m}"), 1),
        }
    }
}

impl From<shilnikov_core::Error> for Failure {
    fn from(e: shilnikov_core::Error) -> Self {
        Failure::Compute(e)
    }
}

pub fn diagnostic_name(e: &shilnikov_core::Error) -> &'static str {
    use shilnikov_core::Error::*;
    match e {
        InvalidParams(_) => "InvalidParams",
        SingularMatrix => "SingularMatrix",
        DegenerateFixedPoint(_) => "DegenerateFixedPoint",
        UnitEigenvalue => "UnitEigenvalue",
        RepeatedEigenvalue => "RepeatedEigenvalue",
        DegeneratePlane => "DegeneratePlane",
        NoInvariantPlane(_) => "NoInvariantPlane",
        UnresolvableSide => "UnresolvableSide",
        WrongSpectralType(_) => "WrongSpectralType",
        NotOnBorder(_) => "NotOnBorder",
        ParallelToBorder => "ParallelToBorder",
        InadmissibleFixedPoint(_) => "InadmissibleFixedPoint",
        UnexpectedSide { .. } => "UnexpectedSide",
        AmbiguousPreimage(_) => "AmbiguousPreimage",
        OverflowDetected => "OverflowDetected",
        DivergentOrbit(_) => "DivergentOrbit",
    }
}

fn preset_args(preset: Preset) -> Vec<String> {
    let p = match preset {
        Preset::Example => PwlParams::shilnikov_example(),
    };
    ParamName::ALL
        .iter()
        .map(|n| format!("--{}={}", n.as_str().replace('_', "-"), p.get(*n)))
        .collect()
}

/// Index of the subcommand token: the first argument that is neither an
/// option nor the value of a preceding option.
fn subcommand_position(argv: &[OsString], name: &str) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if a == name {
            return Some(i);
        }
        let takes_value = a.starts_with("--") && !a.contains('=') && a != "--dump-config";
        i += if takes_value { 2 } else { 1 };
    }
    None
}

/// Rebuilds the argument list so that preset values come first, then
/// configuration entries, then the user's own flags; later values win.
fn merged_argv(argv: &[OsString], matches: &ArgMatches) -> Result<Vec<OsString>, Failure> {
    let preset = matches.get_one::<Preset>("preset").copied();
    let config = match matches.get_one::<PathBuf>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            Some(ConfigFile::parse(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?)
        }
        None => None,
    };
    if preset.is_none() && config.is_none() {
        return Ok(argv.to_vec());
    }
    let (name, _) = matches.subcommand().expect("subcommand is required");
    let pos = subcommand_position(argv, name)
        .ok_or_else(|| Failure::Usage(format!("cannot locate subcommand `{name}`")))?;
    let mut out: Vec<OsString> = vec![argv[0].clone()];
    if let Some(p) = preset {
        out.extend(preset_args(p).into_iter().map(OsString::from));
    }
    if let Some(c) = &config {
        out.extend(config::to_args(c.section(PARAMS_SECTION)).into_iter().map(OsString::from));
    }
    out.extend_from_slice(&argv[1..=pos]);
    if let Some(c) = &config {
        out.extend(config::to_args(c.section(name)).into_iter().map(OsString::from));
    }
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

fn build_command() -> clap::Command {
    Cli::command()
        .args_override_self(true)
        .mut_subcommands(|s| s.args_override_self(true))
}

fn params_from(g: &GlobalArgs) -> Result<PwlParams, Failure> {
    let vals = [g.tau_l, g.sigma_l, g.delta_l, g.tau_r, g.sigma_r, g.delta_r, g.mu];
    let missing: Vec<&str> = ParamName::ALL
        .iter()
        .zip(vals)
        .filter(|(_, v)| v.is_none())
        .map(|(n, _)| n.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Failure::Usage(format!(
            "missing required parameter(s): {}; give them as flags, in the [params] section of --config, or use --preset example",
            missing.join(", ")
        )));
    }
    let v: Vec<f64> = vals.into_iter().map(|v| v.expect("checked")).collect();
    Ok(PwlParams::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6])?)
}

/// The effective configuration: every parameter and every subcommand
/// setting that has a value, in definition order.
fn dump_config(cmd: &clap::Command, matches: &ArgMatches) -> ConfigFile {
    let raw = |m: &ArgMatches, id: &str| -> Option<String> {
        let vals: Vec<String> = m.get_raw(id)?.map(|v| v.to_string_lossy().into_owned()).collect();
        vals.last().cloned()
    };
    let mut cfg = ConfigFile::default();
    for n in ParamName::ALL {
        if let Some(v) = raw(matches, n.as_str()) {
            cfg.push(PARAMS_SECTION, n.as_str(), &v);
        }
    }
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let sub_cmd = cmd.find_subcommand(name).expect("parsed subcommand exists");
    for arg in sub_cmd.get_arguments() {
        let id = arg.get_id().as_str();
        if GLOBAL_IDS.contains(&id) || id == "help" || id == "version" {
            continue;
        }
        if let Some(v) = raw(sub, id) {
            cfg.push(name, id, &v);
        }
    }
    if !cfg.sections.iter().any(|(s, _)| s == name) {
        cfg.sections.push((name.to_string(), Vec::new()));
    }
    cfg
}

fn run(argv: Vec<OsString>) -> Result<(), Failure> {
    let cmd = build_command();
    let first = match cmd.clone().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => e.exit(),
    };
    let argv = merged_argv(&argv, &first)?;
    let matches = match cmd.clone().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => e.exit(),
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| Failure::Usage(e.to_string()))?;
    let params = params_from(&cli.global)?;
    if cli.global.dump_config {
        print!("{}", dump_config(&cmd, &matches).to_text());
        return Ok(());
    }
    if let Some(jobs) = cli.global.jobs {
        if jobs == 0 {
            return Err(Failure::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot start worker pool: {e}")))?;
    }
    let outputs = commands::execute(&params, &cli.command)?;
    outputs.commit()
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (msg, code) = f.report();
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn subcommand_found_after_valued_options() {
        let argv = os(&["shilnikov", "--tau-l", "detect", "detect", "--mode", "backward"]);
        assert_eq!(subcommand_position(&argv, "detect"), Some(3));
        let argv = os(&["shilnikov", "--dump-config", "--mu=1", "orbit"]);
        assert_eq!(subcommand_position(&argv, "orbit"), Some(3));
    }

    #[test]
    fn point_parsing() {
        let p: Point = "-0.1, 0.2,3".parse().unwrap();
        assert_eq!(p.0, State3::new(-0.1, 0.2, 3.0));
        assert!("1,2".parse::<Point>().is_err());
        assert!("1,a,2".parse::<Point>().is_err());
    }

    #[test]
    fn command_definition_is_consistent() {
        build_command().debug_assert();
    }

    #[test]
    fn every_error_has_a_name() {
        let e = shilnikov_core::Error::UnexpectedSide {
            index: 1,
            expected: Side::Left,
            found: Side::Right,
        };
        assert_eq!(diagnostic_name(&e), "UnexpectedSide");
    }
}
