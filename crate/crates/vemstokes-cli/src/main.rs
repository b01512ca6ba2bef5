//! Command-line experiment runner: reproduces the eigenvalue tables and the
//! adaptive study, plus ad-hoc mesh/solve/estimate subcommands.

mod runner;
mod spec;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use vemstokes::system::Bc;

#[derive(Parser)]
#[command(name = "vemstokes", version, about = "Polygonal VEM Stokes eigensolver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum BcArg {
    Clamped,
    Mixed,
}

impl From<BcArg> for Bc {
    fn from(b: BcArg) -> Bc {
        match b {
            BcArg::Clamped => Bc::Clamped,
            BcArg::Mixed => Bc::MixedBottomClamped,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a canned experiment and write CSV tables and VTK fields
    Run {
        /// experiment id: 1, 2, 3-sweep, 3-order or 4
        #[arg(long)]
        test: String,
        /// mesh families, e.g. t1,t2,t5
        #[arg(long, value_delimiter = ',')]
        family: Vec<String>,
        /// resolutions
        #[arg(long = "N", value_delimiter = ',')]
        n: Vec<usize>,
        /// stabilization factors
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        #[arg(long, value_enum)]
        bc: Option<BcArg>,
        /// eigenvalues per solve
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        /// include the viscosity inside the jump stress
        #[arg(long, default_value = "on")]
        jump_nu: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a mesh and export it (vtk or plain text, by extension)
    Mesh {
        #[arg(long, default_value = "square")]
        domain: String,
        #[arg(long, default_value = "t1")]
        family: String,
        #[arg(long = "N", default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Assemble and solve one eigenproblem, printing the spectrum
    Solve {
        #[arg(long, default_value = "square")]
        domain: String,
        #[arg(long, default_value = "t1")]
        family: String,
        #[arg(long = "N", default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "clamped")]
        bc: BcArg,
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// spectral shift
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        /// write velocity/pressure fields to this VTK file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve and evaluate the residual error indicator
    Estimate {
        #[arg(long, default_value = "square")]
        domain: String,
        #[arg(long, default_value = "t1")]
        family: String,
        #[arg(long = "N", default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "clamped")]
        bc: BcArg,
        #[arg(long, default_value = "on")]
        jump_nu: String,
        /// write the mesh with per-cell eta^2 to this VTK file
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            test,
            family,
            n,
            alpha,
            bc,
            k,
            seed,
            nu,
            jump_nu,
            out,
        } => runner::run(runner::RunArgs {
            test,
            families: family,
            n,
            alpha,
            bc: bc.map(Into::into),
            k,
            seed,
            nu,
            jump_nu: jump_nu != "off",
            out,
        }),
        Command::Mesh {
            domain,
            family,
            n,
            seed,
            out,
        } => runner::mesh_export(&domain, &family, n, seed, &out),
        Command::Solve {
            domain,
            family,
            n,
            seed,
            nu,
            alpha,
            bc,
            k,
            sigma,
            out,
        } => runner::solve_once(&domain, &family, n, seed, nu, alpha, bc.into(), k, sigma, out),
        Command::Estimate {
            domain,
            family,
            n,
            seed,
            nu,
            alpha,
            bc,
            jump_nu,
            out,
        } => runner::estimate_once(
            &domain,
            &family,
            n,
            seed,
            nu,
            alpha,
            bc.into(),
            jump_nu != "off",
            out,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
