//! The `shellsep` command line: `generate`, `separate`, `evaluate`, `bench` and `fit`.
//!
//! Exit codes: 0 success, 1 usage, 2 I/O or parse failure, 3 validation
//! failure, 4 runtime failure.

use std::collections::HashMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};
use crate::io::{
    apply_setting, parse_ply, read_cloud, read_config, read_report, read_trace_column, write_bench_csv, write_cloud,
    write_json, write_trace_csv, CloudFile, EvaluationReport, RunReport,
};
use crate::metrics::fit_saturation;
use crate::parallel::{bench_serial, benchmark_on_domain, run_parallel_on_domain, ParallelConfig};
use crate::sim::{run_on_domain, Domain, SimConfig};
use crate::synthetic::{
    generate_double_sphere, generate_sharp_corner_box, DoubleSphereSpec, HoleShells, SphereSampling,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "shellsep",
    version,
    about = "Separate the inner shell of double-layered point clouds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a labeled synthetic fixture as PLY.
    Generate(GenerateArgs),
    /// Run the diffusion simulation on a cloud.
    Separate(SeparateArgs),
    /// Score a detected set against labeled ground truth.
    Evaluate(EvaluateArgs),
    /// Time the serial and parallel engines.
    Bench(BenchArgs),
    /// Fit the saturation curve to a trace column.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Sphere,
    OpenSphere,
    CornerBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplingArg {
    Even,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HoleShellsArg {
    Inner,
    Both,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "sphere")]
    pub shape: Shape,
    #[arg(long, default_value_t = 20000)]
    pub n_inner: usize,
    #[arg(long, default_value_t = 20000)]
    pub n_outer: usize,
    #[arg(long, default_value_t = 1.0)]
    pub inner_radius: f64,
    #[arg(long, default_value_t = 1.2)]
    pub outer_radius: f64,
    #[arg(long, default_value_t = 3)]
    pub holes: usize,
    /// Angular radius of each opening, radians.
    #[arg(long, default_value_t = 0.25)]
    pub hole_radius: f64,
    #[arg(long, value_enum, default_value = "both")]
    pub hole_shells: HoleShellsArg,
    #[arg(long, value_enum, default_value = "even")]
    pub sampling: SamplingArg,
    /// Inner box side length.
    #[arg(long, default_value_t = 2.0)]
    pub edge: f64,
    /// Distance between the box walls.
    #[arg(long, default_value_t = 0.2)]
    pub gap: f64,
    /// Points per box shell.
    #[arg(long, default_value_t = 20000)]
    pub n_points: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Simulation parameter overrides; each mirrors a configuration key.
#[derive(Debug, Default, Args)]
pub struct SimArgs {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub r_ball_factor: Option<f64>,
    #[arg(long)]
    pub collision_margin_factor: Option<f64>,
    #[arg(long)]
    pub l_max_factor: Option<f64>,
    #[arg(long)]
    pub p_random_spawn: Option<f64>,
    #[arg(long)]
    pub max_steps_per_ball: Option<u32>,
    #[arg(long)]
    pub max_collisions_per_ball: Option<u32>,
    #[arg(long)]
    pub max_balls: Option<u64>,
    #[arg(long)]
    pub dup_threshold: Option<f64>,
    #[arg(long)]
    pub dup_streak: Option<u32>,
    #[arg(long)]
    pub max_spawn_points: Option<usize>,
    #[arg(long)]
    pub spawn_min_separation_factor: Option<f64>,
    #[arg(long)]
    pub probe_steps: Option<u32>,
    #[arg(long)]
    pub spawn_nn_reject_factor: Option<f64>,
    #[arg(long)]
    pub escape_margin_factor: Option<f64>,
    /// Radians.
    #[arg(long)]
    pub perturb_angle: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub escape_watertight_threshold: Option<u64>,
    /// `x,y,z`
    #[arg(long)]
    pub initial_spawn: Option<String>,
    /// Run exactly `max_balls` balls: disables the duplication-streak stop.
    #[arg(long)]
    pub fixed_budget: bool,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

impl SimArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<ParallelConfig> {
        let (mut sim, mut par) = match &self.config {
            Some(path) => read_config(path)?,
            None => (
                SimConfig::default(),
                ParallelConfig {
                    workers: 1,
                    ..Default::default()
                },
            ),
        };
        let mut set = |key: &str, v: Option<String>| -> Result<()> {
            match v {
                Some(v) => apply_setting(&mut sim, &mut par, key, &v).map_err(Error::InvalidInput),
                None => Ok(()),
            }
        };
        let s = |v: Option<f64>| v.map(|x| x.to_string());
        set("r_ball_factor", s(self.r_ball_factor))?;
        set("collision_margin_factor", s(self.collision_margin_factor))?;
        set("l_max_factor", s(self.l_max_factor))?;
        set("p_random_spawn", s(self.p_random_spawn))?;
        set("max_steps_per_ball", self.max_steps_per_ball.map(|x| x.to_string()))?;
        set(
            "max_collisions_per_ball",
            self.max_collisions_per_ball.map(|x| x.to_string()),
        )?;
        set("max_balls", self.max_balls.map(|x| x.to_string()))?;
        set("dup_threshold", s(self.dup_threshold))?;
        set("dup_streak", self.dup_streak.map(|x| x.to_string()))?;
        set("max_spawn_points", self.max_spawn_points.map(|x| x.to_string()))?;
        set("spawn_min_separation_factor", s(self.spawn_min_separation_factor))?;
        set("probe_steps", self.probe_steps.map(|x| x.to_string()))?;
        set("spawn_nn_reject_factor", s(self.spawn_nn_reject_factor))?;
        set("escape_margin_factor", s(self.escape_margin_factor))?;
        set("perturb_angle", s(self.perturb_angle))?;
        set("seed", self.seed.map(|x| x.to_string()))?;
        set(
            "escape_watertight_threshold",
            self.escape_watertight_threshold.map(|x| x.to_string()),
        )?;
        set("initial_spawn", self.initial_spawn.clone())?;
        set("workers", self.workers.map(|x| x.to_string()))?;
        set("batch_size", self.batch_size.map(|x| x.to_string()))?;
        if self.fixed_budget {
            sim.dup_streak = u32::MAX;
        }
        par.sim = sim;
        par.validate()?;
        Ok(par)
    }
}

#[derive(Debug, Args)]
pub struct SeparateArgs {
    /// Input cloud (`.ply` or XYZ text).
    pub input: PathBuf,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Integer vertex property holding ground-truth labels.
    #[arg(long, default_value = crate::io::DEFAULT_LABEL_PROPERTY)]
    pub label_property: String,
    #[arg(long)]
    pub out_inter: Option<PathBuf>,
    #[arg(long)]
    pub out_report: Option<PathBuf>,
    #[arg(long)]
    pub out_trace: Option<PathBuf>,
    /// Keep every k-th trace row (the last row is always kept).
    #[arg(long, default_value_t = 1)]
    pub trace_every: usize,
    /// Leave `elapsed_seconds` empty so reports are reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Detected points: a PLY subset of the truth cloud, or a JSON run report.
    #[arg(long)]
    pub detected: PathBuf,
    /// Labeled ground-truth PLY.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, default_value = crate::io::DEFAULT_LABEL_PROPERTY)]
    pub label_property: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub input: PathBuf,
    /// Comma-separated worker counts.
    #[arg(long = "worker-counts", value_delimiter = ',', default_values_t = [1usize, 2, 4, 8])]
    pub worker_counts: Vec<usize>,
    /// Skip the serial reference run.
    #[arg(long)]
    pub no_serial: bool,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Trace CSV written by `separate --out-trace`.
    pub trace: PathBuf,
    #[arg(long, default_value = "r_inter")]
    pub column: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::Config { .. } | Error::Io { .. } | Error::Csv(_) | Error::Json(_) => EXIT_IO,
        Error::InvalidInput(_) => EXIT_VALIDATION,
        Error::DegenerateNormal | Error::FitFailure(_) => EXIT_RUNTIME,
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Separate(a) => cmd_separate(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Fit(a) => cmd_fit(&a),
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let cloud = match a.shape {
        Shape::Sphere | Shape::OpenSphere => {
            let mut spec = if a.shape == Shape::Sphere {
                DoubleSphereSpec::closed(a.n_inner, a.n_outer, a.seed)
            } else {
                DoubleSphereSpec::open(a.n_inner, a.n_outer, a.holes, a.hole_radius, a.seed)
            };
            spec.inner_radius = a.inner_radius;
            spec.outer_radius = a.outer_radius;
            spec.sampling = match a.sampling {
                SamplingArg::Even => SphereSampling::Even,
                SamplingArg::Uniform => SphereSampling::Uniform,
            };
            let shells = match a.hole_shells {
                HoleShellsArg::Inner => HoleShells::Inner,
                HoleShellsArg::Both => HoleShells::Both,
            };
            for h in &mut spec.holes {
                h.shells = shells;
            }
            generate_double_sphere(&spec)?
        }
        Shape::CornerBox => generate_sharp_corner_box(a.edge, a.gap, a.n_points, a.seed)?,
    };
    write_cloud(&cloud, None, &a.out)?;
    println!(
        "wrote {}: {} points ({} inter, {} outer), r0 = {:.6}",
        a.out.display(),
        cloud.len(),
        cloud.n_inter(),
        cloud.n_outer(),
        cloud.r0()
    );
    Ok(())
}

fn load(path: &Path, label_property: &str) -> Result<PointCloud> {
    let mut file = CloudFile::new(path);
    file.label_property = Some(label_property.to_string());
    let loaded = read_cloud(&file)?;
    if loaded.duplicates_removed > 0 {
        eprintln!("warning: removed {} duplicate points", loaded.duplicates_removed);
    }
    Ok(loaded.cloud)
}

pub fn cmd_separate(a: &SeparateArgs) -> Result<()> {
    let cloud = load(&a.input, &a.label_property)?;
    let par = a.sim.resolve()?;
    let domain = Domain::new(cloud, par.sim.escape_margin_factor)?;
    let start = Instant::now();
    let result = if par.workers == 1 {
        run_on_domain(&domain, &par.sim)?
    } else {
        run_parallel_on_domain(&domain, &par)?
    };
    let elapsed = start.elapsed().as_secs_f64();
    let report = RunReport::new(
        &domain.cloud,
        &par.sim,
        par.workers,
        &result,
        (!a.no_timing).then_some(elapsed),
    );

    println!(
        "{} points, r0 = {:.6}, {} balls ({:?}), {} escaped, watertight = {}",
        report.n_t, report.r0, report.balls_run, report.termination_reason, report.n_escape, report.watertight
    );
    println!("detected {} points", report.n_detected);
    if let (Some(ri), Some(ro)) = (report.r_inter, report.r_outer) {
        println!("R_inter = {ri:.6}, R_outer = {ro:.6}");
    }
    if let Some(f) = report.fit {
        println!(
            "fit: A0 = {:.6}, tau = {:.3}, rms = {:.3e}",
            f.a0, f.tau, f.residual_rms
        );
    }
    if !a.no_timing {
        println!("elapsed {elapsed:.3} s");
    }

    if let Some(p) = &a.out_inter {
        write_cloud(&domain.cloud, Some(&result.inter_indices), p)?;
    }
    if let Some(p) = &a.out_trace {
        write_trace_csv(&result.trace, a.trace_every, p)?;
    }
    if let Some(p) = &a.out_report {
        write_json(&report, p)?;
    }
    Ok(())
}

/// Map each detected point to the truth index with identical coordinates.
fn match_points(detected: &[Vec3], truth: &PointCloud) -> Result<Vec<usize>> {
    let key = |p: &Vec3| [(p.x + 0.0).to_bits(), (p.y + 0.0).to_bits(), (p.z + 0.0).to_bits()];
    let mut lookup = HashMap::with_capacity(truth.len());
    for (i, p) in truth.points().iter().enumerate() {
        lookup.entry(key(p)).or_insert(i);
    }
    detected
        .iter()
        .map(|p| {
            lookup.get(&key(p)).copied().ok_or_else(|| {
                Error::invalid(format!(
                    "detected point ({}, {}, {}) is not in the truth cloud",
                    p.x, p.y, p.z
                ))
            })
        })
        .collect()
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let truth = load(&a.truth, &a.label_property)?;
    if !truth.is_labeled() {
        return Err(Error::invalid(format!(
            "{} carries no `{}` labels",
            a.truth.display(),
            a.label_property
        )));
    }
    let is_json = a.detected.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let detected = if is_json {
        read_report(&a.detected)?.inter_indices
    } else {
        let text = std::fs::read_to_string(&a.detected).map_err(|e| Error::io(&a.detected, e))?;
        let raw = parse_ply(&text, &a.detected, None)?;
        match_points(&raw.points, &truth)?
    };
    let eval = EvaluationReport::new(&detected, &truth)?;
    println!(
        "R_inter = {:.6} ({}/{}), R_outer = {:.6} ({}/{})",
        eval.r_inter, eval.detected_inter, eval.n_inter, eval.r_outer, eval.detected_outer, eval.n_outer
    );
    if let Some(p) = &a.out {
        write_json(&eval, p)?;
    }
    Ok(())
}

pub fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let cloud = load(&a.input, crate::io::DEFAULT_LABEL_PROPERTY)?;
    let par = a.sim.resolve()?;
    if a.worker_counts.contains(&0) {
        return Err(Error::invalid("worker counts must be >= 1"));
    }
    let domain = Domain::new(cloud, par.sim.escape_margin_factor)?;
    let mut reports = Vec::new();
    if !a.no_serial {
        reports.push(bench_serial(&domain, &par.sim)?);
    }
    reports.extend(benchmark_on_domain(&domain, &a.worker_counts, &par)?);
    println!("implementation,workers,time_s,balls_per_s,r_inter");
    for r in &reports {
        println!(
            "{},{},{:.3},{:.0},{:.4}",
            r.implementation, r.workers, r.elapsed_seconds, r.balls_per_second, r.r_inter
        );
    }
    if let Some(p) = &a.out {
        write_bench_csv(&reports, p)?;
    }
    Ok(())
}

pub fn cmd_fit(a: &FitArgs) -> Result<()> {
    let samples = read_trace_column(&a.trace, &a.column)?;
    let fit = fit_saturation(&samples)?;
    println!(
        "A0 = {:.6}, tau = {:.3}, rms = {:.3e}",
        fit.a0, fit.tau, fit.residual_rms
    );
    if let Some(p) = &a.out {
        write_json(&fit, p)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn missing_out_is_usage_error() {
        assert_eq!(run(["shellsep", "generate", "--shape", "sphere"]), EXIT_USAGE);
        assert_eq!(run(["shellsep", "--help"]), EXIT_OK);
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.cfg");
        std::fs::write(&cfg, "r_ball_factor = 3.0\nseed = 7\n").unwrap();
        let args = SimArgs {
            config: Some(cfg),
            seed: Some(9),
            fixed_budget: true,
            ..Default::default()
        };
        let par = args.resolve().unwrap();
        assert_eq!(
            (par.sim.r_ball_factor, par.sim.seed, par.sim.dup_streak),
            (3.0, 9, u32::MAX)
        );
        assert_eq!(par.workers, 1);
    }

    #[test]
    fn invalid_override_is_validation_error() {
        let args = SimArgs {
            r_ball_factor: Some(-1.0),
            ..Default::default()
        };
        assert_eq!(exit_code(&args.resolve().unwrap_err()), EXIT_VALIDATION);
    }
}
