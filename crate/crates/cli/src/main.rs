use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

#[derive(Parser)]
#[command(
    name = "lieroid",
    version,
    about = "Computations with Lie algebroids in local coordinates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Problem description in JSON.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Name of a built-in example (see `examples list`).
    #[arg(long, value_name = "NAME")]
    pub example: Option<String>,
}

#[derive(Args, Clone)]
pub struct Common {
    #[command(flatten)]
    pub source: Source,
    /// Directory for report and CSV files.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Base point, comma separated. Defaults to the config base point.
    #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
    pub x0: Option<Coords>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PathKind {
    Segment,
    Circle,
    Rectangle,
    Vertical,
}

#[derive(Subcommand)]
enum Command {
    /// Check the anchor, antisymmetry and Jacobi identities.
    Validate(Common),
    /// Levi-Civita coefficients at x0 with compatibility and torsion residuals.
    Lc(Common),
    /// Integrate a geodesic.
    Geodesic {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        y0: Coords,
        #[arg(short = 'T', default_value_t = 1.0)]
        t_end: f64,
        /// Integrate the energy spray instead of the geodesic system.
        #[arg(long)]
        spray: bool,
    },
    /// Parallel transport along a built-in path.
    Transport {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        path: PathKind,
        /// Segment end point.
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        to: Option<Coords>,
        /// Circle radius.
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
        /// Rectangle side lengths.
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        sides: Option<Coords>,
        /// Coordinate plane of circles and rectangles, 1-based.
        #[arg(long, value_parser = parse_axes, default_value = "1,2")]
        axes: (usize, usize),
        /// Fiber value of a vertical path (must lie in the anchor kernel).
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        y0: Option<Coords>,
        /// Initial value of the transported vector; defaults to the first
        /// basis vector.
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        z0: Option<Coords>,
        #[arg(short = 'T', default_value_t = 1.0)]
        t_end: f64,
    },
    /// Sampled holonomy matrices at x0.
    Holonomy(Common),
    /// Decide whether the connection preserves some fiber metric.
    Metrize {
        #[command(flatten)]
        common: Common,
        /// Exit with status 1 unless the verdict is metrizable.
        #[arg(long)]
        expect_metrizable: bool,
    },
    /// Built-in example problems.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
}

#[derive(Subcommand)]
enum ExamplesAction {
    List,
    Show { name: String },
}

/// Comma-separated coordinates; the empty string is the empty vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Coords(pub Vec<f64>);

fn parse_vec(s: &str) -> Result<Coords, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Coords(Vec::new()));
    }
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()
        .map(Coords)
}

fn parse_axes(s: &str) -> Result<(usize, usize), String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [i, j] if i >= 1 && j >= 1 && i != j => Ok((i - 1, j - 1)),
        _ => Err("expected two distinct 1-based axes such as `1,2`".into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate(c) => commands::validate(&c),
        Command::Lc(c) => commands::lc(&c),
        Command::Geodesic {
            common,
            y0,
            t_end,
            spray,
        } => commands::geodesic(&common, &y0.0, t_end, spray),
        Command::Transport {
            common,
            path,
            to,
            radius,
            sides,
            axes,
            y0,
            z0,
            t_end,
        } => commands::transport(
            &common,
            &commands::PathSpec {
                kind: path,
                to: to.map(|c| c.0),
                radius,
                sides: sides.map(|c| c.0),
                axes,
                y0: y0.map(|c| c.0),
                z0: z0.map(|c| c.0),
                t_end,
            },
        ),
        Command::Holonomy(c) => commands::holonomy(&c),
        Command::Metrize {
            common,
            expect_metrizable,
        } => commands::metrize(&common, expect_metrizable),
        Command::Examples { action } => match action {
            ExamplesAction::List => commands::examples_list(),
            ExamplesAction::Show { name } => commands::examples_show(&name),
        },
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
