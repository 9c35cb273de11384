//! `qrlab`: batch runner for the quasiregular-curve experiments.
//!
//! Exit status: 0 when every requested assertion passes, 1 when one fails,
//! 2 for an invalid spec, 3 for I/O errors.

mod commands;
mod error;
mod report;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrlab_core::maps::DistortionKind;

use crate::error::CliError;
use crate::spec::{family_from_flags, parse_point, Command, ExperimentSpec, Point};

#[derive(Parser, Debug)]
#[command(name = "qrlab", version, about = "Numerical experiments on quasiregular curves")]
struct Cli {
    /// JSON experiment spec; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for summary.json and CSV tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid points per axis.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Comass of a covector and randomized exterior-algebra identities.
    Algebra {
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Homotopy-operator residuals and norm ratios on smooth forms.
    Homotopy {
        /// Radius of the ball domain centred at the origin.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        expect_max_residual: Option<f64>,
    },
    /// Degree `deg(f, y, U)` via bump pullbacks.
    Degree {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        y: Option<Point>,
        /// Radius of the ball `U` centred at the origin.
        #[arg(long)]
        u_radius: Option<f64>,
        #[arg(long)]
        bump_radius: Option<f64>,
        #[arg(long)]
        expect_degree: Option<i64>,
    },
    /// Pointwise distortion inequalities and minimal constants.
    Distortion {
        #[command(flatten)]
        map: MapArgs,
        /// qr | qr_value | qr_curve | qr_curve_sigma | qr_curve_value
        #[arg(long)]
        kind: Option<String>,
        /// Distortion constant `K`.
        #[arg(long)]
        distortion_k: Option<f64>,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        y0: Option<Point>,
        #[arg(long)]
        expect_max_k: Option<f64>,
    },
    /// Normalized sequence, limit map and `Φ` for a map into a torus.
    Limits {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        limit_resolution: Option<usize>,
        #[arg(long)]
        distortion_k: Option<f64>,
        /// Doubling constant `D`.
        #[arg(long)]
        doubling: Option<f64>,
    },
    /// Weak reverse Hölder margins and the Gehring probe.
    Estimates {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, value_parser = parse_point)]
        lambdas: Option<Point>,
        #[arg(long)]
        distortion_k: Option<f64>,
        #[arg(long)]
        minimal_sigma: bool,
    },
    /// Covering map of the torus through every stage.
    Demo,
    /// Run the command named in the config file.
    Run,
}

#[derive(Args, Debug, Default)]
struct MapArgs {
    /// Map family name (winding, covering, identity, folding, radial_stretch, ...).
    #[arg(long)]
    family: Option<String>,
    /// Winding number of the winding family.
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    /// QRGF map file sampled on the configured grid.
    #[arg(long)]
    map_file: Option<PathBuf>,
    #[arg(long)]
    torus: bool,
}

impl MapArgs {
    fn apply(&self, spec: &mut ExperimentSpec) -> Result<(), CliError> {
        if let Some(name) = &self.family {
            spec.map = Some(family_from_flags(name, self.k, self.n, self.scale, self.alpha, self.amplitude)?);
        } else if self.k.is_some() || self.n.is_some() || self.scale.is_some() || self.alpha.is_some() || self.amplitude.is_some() {
            return Err(CliError::InvalidSpec("family parameters given without --family".into()));
        }
        if let Some(p) = &self.map_file {
            spec.map_file = Some(p.clone());
            spec.map_torus |= self.torus;
        }
        Ok(())
    }
}

/// Merges the config file and the flags into one spec.
fn resolve(cli: &Cli) -> Result<(Command, ExperimentSpec), CliError> {
    let mut spec = match &cli.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    if cli.resolution.is_some() {
        spec.resolution = cli.resolution;
    }
    if cli.seed.is_some() {
        spec.seed = cli.seed;
    }
    if cli.out.is_some() {
        spec.out = cli.out.clone();
    }
    let command = match &cli.command {
        Cmd::Algebra { samples } => {
            spec.samples = samples.or(spec.samples);
            Command::Algebra
        }
        Cmd::Homotopy { radius, expect_max_residual } => {
            if let Some(r) = radius {
                spec.domain = Some(qrlab_core::Region::ball(&[0.0, 0.0], *r));
            }
            spec.expect.max_residual = expect_max_residual.or(spec.expect.max_residual);
            Command::Homotopy
        }
        Cmd::Degree { map, y, u_radius, bump_radius, expect_degree } => {
            map.apply(&mut spec)?;
            if let Some(p) = y {
                spec.y = Some(p.0.clone());
            }
            if let Some(r) = u_radius {
                let n = spec.map.as_ref().map_or(2, |m| m.source_dim());
                spec.u = Some(qrlab_core::Region::ball(&vec![0.0; n], *r));
            }
            spec.bump_radius = bump_radius.or(spec.bump_radius);
            spec.expect.degree = expect_degree.or(spec.expect.degree);
            Command::Degree
        }
        Cmd::Distortion { map, kind, distortion_k, y0, expect_max_k } => {
            map.apply(&mut spec)?;
            if let Some(kind) = kind {
                let k: DistortionKind = serde_json::from_value(kind.as_str().into())
                    .map_err(|e| CliError::InvalidSpec(format!("--kind: {e}")))?;
                spec.kind = Some(k);
            }
            spec.k = distortion_k.or(spec.k);
            if let Some(p) = y0 {
                spec.y = Some(p.0.clone());
            }
            spec.expect.max_minimal_k = expect_max_k.or(spec.expect.max_minimal_k);
            Command::Distortion
        }
        Cmd::Limits { map, levels, limit_resolution, distortion_k, doubling } => {
            map.apply(&mut spec)?;
            spec.levels = levels.or(spec.levels);
            spec.limit_resolution = limit_resolution.or(spec.limit_resolution);
            spec.k = distortion_k.or(spec.k);
            spec.d = doubling.or(spec.d);
            Command::Limits
        }
        Cmd::Estimates { map, levels, lambdas, distortion_k, minimal_sigma } => {
            map.apply(&mut spec)?;
            spec.levels = levels.or(spec.levels);
            if let Some(p) = lambdas {
                spec.lambdas = Some(p.0.clone());
            }
            spec.k = distortion_k.or(spec.k);
            if *minimal_sigma {
                spec.minimal_sigma = Some(true);
            }
            Command::Estimates
        }
        Cmd::Demo => Command::Demo,
        Cmd::Run => spec.command.ok_or_else(|| CliError::InvalidSpec("`run` needs a config with a command".into()))?,
    };
    if let Some(c) = spec.command {
        if c != command {
            return Err(CliError::InvalidSpec(format!("config is for `{}`, not `{}`", c.name(), command.name())));
        }
    }
    Ok((command, spec))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = resolve(&cli).and_then(|(command, spec)| {
        let seed = spec.seed.unwrap_or(0);
        let report = commands::run(command, &spec, seed)?;
        let summary = report.summary(command.name(), seed);
        if let Some(dir) = &spec.out {
            report.write(dir, &summary)?;
        }
        println!("{}", serde_json::to_string_pretty(&summary).expect("serializable summary"));
        Ok(report.pass())
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("qrlab: assertion failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("qrlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
