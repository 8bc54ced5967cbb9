use clap::{Args, Parser, Subcommand, ValueEnum};
use dgadapt::io::config::{Mode, RunConfig, SweepKind};
use dgadapt::io::{self, ConvergenceTable};
use dgadapt::{Error, Result};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dgadapt",
    version,
    about = "Time-space adaptive SIPG solver for advection-diffusion-reaction problems"
)]
struct Cli {
    /// Root directory for relative output paths.
    #[arg(long, global = true, env = "DGADAPT_OUTPUT_ROOT")]
    output_root: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adaptive or uniform time stepping with trace and VTK output.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: Option<RunMode>,
    },
    /// Simultaneous uniform refinement in space and time.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Effectivity study over a tolerance sweep.
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        /// Swept tolerances, comma separated.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[arg(long)]
        stol_ratio: Option<f64>,
        /// Uniform h-halvings of the mesh for temporal sweeps.
        #[arg(long)]
        refinements: Option<usize>,
    },
    /// Pressure and velocity of the porous-medium example only.
    Darcy {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RunMode {
    Adaptive,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Spatial,
    Temporal,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long)]
    final_time: Option<f64>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    ttol: Option<f64>,
    #[arg(long)]
    stol_plus: Option<f64>,
    #[arg(long)]
    stol_minus: Option<f64>,
    /// Diffusion parameter of ex1-ex3.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_level: Option<u32>,
    /// Start from the coarse mesh instead of iterating on the first step.
    #[arg(long)]
    no_prepare: bool,
    /// Output directory, relative to the output root.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Write a VTK snapshot every N steps.
    #[arg(long)]
    every: Option<usize>,
    /// Write the initial stiffness matrix in Matrix Market format.
    #[arg(long)]
    dump_matrix: bool,
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.problem {
            c.problem = p.clone();
        }
        c.degree = self.degree.or(c.degree);
        c.tau0 = self.tau0.or(c.tau0);
        c.final_time = self.final_time.or(c.final_time);
        c.nx = self.nx.or(c.nx);
        c.ny = self.ny.or(c.ny);
        c.tolerances.ttol = self.ttol.or(c.tolerances.ttol);
        c.tolerances.stol_plus = self.stol_plus.or(c.tolerances.stol_plus);
        c.tolerances.stol_minus = self.stol_minus.or(c.tolerances.stol_minus);
        c.params.eps = self.eps.or(c.params.eps);
        c.max_level = self.max_level.or(c.max_level);
        c.prepare_mesh &= !self.no_prepare;
        c.output_dir = self.output.clone().or(c.output_dir);
        c.every = self.every.unwrap_or(c.every);
        c.dump_matrix |= self.dump_matrix;
        c.validate()?;
        Ok(c)
    }
}

fn write_table(t: &ConvergenceTable, dir: &Path, name: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    t.write_csv(BufWriter::new(File::create(dir.join(name))?))
}

fn execute(cli: Cli) -> Result<()> {
    let root = cli.output_root.as_deref();
    match cli.command {
        Command::Run { common, mode } => {
            let mut c = common.config()?;
            match mode {
                Some(RunMode::Adaptive) => c.mode = Mode::Adaptive,
                Some(RunMode::Uniform) => c.mode = Mode::Uniform,
                None if matches!(c.mode, Mode::Converge | Mode::Estimate) => {
                    return Err(Error::Config("mode converge/estimate belongs to its own subcommand".into()))
                }
                None => {}
            }
            let dir = c.output_path(root, if c.mode == Mode::Uniform { "uniform" } else { "adaptive" });
            let rep = io::run(&c, &dir)?;
            println!("output: {}", dir.display());
            for (k, v) in rep.summary_entries() {
                println!("{k:>20} = {v}");
            }
            println!("{:>20} = {:.2}", "runtime_s", rep.runtime_s);
        }
        Command::Converge { common, levels } => {
            let mut c = common.config()?;
            c.mode = Mode::Converge;
            c.converge.levels = levels.unwrap_or(c.converge.levels);
            let t = io::converge(&c)?;
            print!("{}", t.render());
            let dir = c.output_path(root, "converge");
            write_table(&t, &dir, "convergence.csv")?;
            println!("output: {}", dir.join("convergence.csv").display());
        }
        Command::Estimate { common, kind, values, stol_ratio, refinements } => {
            let mut c = common.config()?;
            c.mode = Mode::Estimate;
            if let Some(k) = kind {
                c.estimate.kind = match k {
                    Kind::Spatial => SweepKind::Spatial,
                    Kind::Temporal => SweepKind::Temporal,
                };
            }
            c.estimate.values = values.unwrap_or(c.estimate.values);
            c.estimate.stol_ratio = stol_ratio.unwrap_or(c.estimate.stol_ratio);
            c.estimate.refinements = refinements.unwrap_or(c.estimate.refinements);
            c.validate()?;
            let t = io::estimate(&c)?;
            print!("{}", t.render());
            let dir = c.output_path(root, "estimate");
            write_table(&t, &dir, "sweep.csv")?;
            println!("output: {}", dir.join("sweep.csv").display());
        }
        Command::Darcy { common } => {
            let mut c = common.config()?;
            c.problem = "ex4".into();
            let dir = c.output_path(root, "darcy");
            let r = io::darcy(&c, &dir)?;
            println!("cells              {}", r.cells);
            println!("inflow             {:.6e}", r.inflow);
            println!("outflow            {:.6e}", r.outflow);
            println!("flux imbalance     {:.3e}", r.relative_imbalance);
            println!("speed contrast     {:.3}", r.speed_contrast);
            println!("output: {}", dir.join("darcy.vtk").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
