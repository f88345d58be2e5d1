use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use venttsel::geometry::write_polyline;
use venttsel::mesh::io::{write_mesh, write_vtk, PointField};
use venttsel::scenario::{load_config, run_convergence_study, run_property_checks, run_transmission, ScenarioConfig, TransmissionSetup};

#[derive(Parser)]
#[command(name = "venttsel", version, about = "Heat transfer across Koch prefractal interfaces with nonlocal Venttsel' conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the transmission mesh and write it with the prefractal polyline.
    Mesh(Common),
    /// Run the sectored transmission experiment and its symmetric control.
    Transmission(Common),
    /// Spatial and temporal convergence study with acceptance verdicts.
    Converge(Common),
    /// Invariant checks of every module on small instances.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// TOML scenario file; defaults apply to every missing key.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 lets rayon decide.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Overrides `checks.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn prepare(&self) -> Result<ScenarioConfig> {
        rayon::ThreadPoolBuilder::new().num_threads(self.threads).build_global().context("configuring the thread pool")?;
        let mut config = match &self.config {
            Some(path) => load_config(path).with_context(|| format!("loading {}", path.display()))?,
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.checks.seed = seed;
        }
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        config.save(&self.out.join("config.toml"))?;
        Ok(config)
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn finish(dir: &Path, header: &str, body: &str, passed: bool) -> Result<()> {
    let text = format!("{header}\n{body}");
    fs::write(dir.join("summary"), &text)?;
    print!("{text}");
    if !passed {
        bail!("verdicts failed, see {}", dir.join("summary").display());
    }
    Ok(())
}

fn mesh(args: &Common) -> Result<()> {
    let config = args.prepare()?;
    let t0 = Instant::now();
    let setup = TransmissionSetup::<f64>::new(&config)?;
    let tri = &setup.tri;
    write_mesh(tri, create(&args.out, "mesh.txt")?)?;
    write_polyline(&setup.curve, create(&args.out, "curve.txt")?)?;
    let fields: [PointField<'_, f64>; 0] = [];
    write_vtk(tri, &fields, "venttsel mesh", create(&args.out, "mesh.vtk")?)?;
    let body = format!(
        "level={} nodes={} triangles={} h={:.6e} min_diameter={:.6e} max_shape_ratio={:.4} seconds={:.2}\n",
        setup.curve.level,
        tri.num_nodes(),
        tri.num_triangles(),
        tri.h(),
        tri.min_diameter(),
        tri.max_shape_ratio(),
        t0.elapsed().as_secs_f64()
    );
    finish(&args.out, "mesh", &body, true)
}

fn transmission(args: &Common) -> Result<()> {
    let config = args.prepare()?;
    let report = run_transmission::<f64>(&config)?;
    report.write_outputs(&config, &args.out)?;
    let passed = report.north_exceeds_south() && report.control_gap().is_none_or(|g| g <= 0.01);
    finish(&args.out, "transmission", &report.summary(&config), passed)
}

fn converge(args: &Common) -> Result<()> {
    let config = args.prepare()?;
    let t0 = Instant::now();
    let report = run_convergence_study::<f64>(&config.study)?;
    report.write_csvs(&args.out)?;
    let body = format!("{}seconds={:.1}\n", report.summary(), t0.elapsed().as_secs_f64());
    finish(&args.out, "converge", &body, report.passed())
}

fn check(args: &Common) -> Result<()> {
    let config = args.prepare()?;
    let report = run_property_checks(&config, config.checks.seed)?;
    report.write_csv(create(&args.out, "checks.csv")?)?;
    let mut body = format!("seed={} checks={} failed={}\n", config.checks.seed, report.outcomes.len(), report.failures().count());
    for o in report.failures() {
        body += &format!("{o}\n");
    }
    finish(&args.out, "check", &body, report.passed())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Mesh(a) => mesh(&a),
        Command::Transmission(a) => transmission(&a),
        Command::Converge(a) => converge(&a),
        Command::Check(a) => check(&a),
    }
}
