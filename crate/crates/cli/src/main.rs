//! Command-line front end for the sensing-secure hybrid beamforming library.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use lpi_isac::harness::{
    convergence_experiment, cyclic_experiment, emit_convergence, emit_cyclic, emit_figures,
    emit_spectra, instance, run_experiment, run_scheme, spectra_experiment, ExperimentSpec, Scheme,
    Sweep, SweepAxis, TrialSeeds,
};
use lpi_isac::metrics::{MetricsReport, SpectrumMap};
use lpi_isac::signal_model::Profile;

#[derive(Parser, Debug)]
#[command(
    name = "lpi-isac",
    version,
    about = "Sensing-secure OFDM-ISAC hybrid beamforming experiments"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML experiment file; command-line flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Parameter preset used when no config file is given.
    #[arg(long, global = true, default_value = "desk")]
    profile: Profile,
    /// Scheme(s) to run; repeat or comma-separate.
    #[arg(long, global = true, value_delimiter = ',')]
    scheme: Vec<Scheme>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write per-trial rows.
    #[arg(long, global = true)]
    dump_trials: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Design one instance and report its metrics.
    Solve,
    /// Monte-Carlo sweep over one parameter axis.
    Sweep {
        #[arg(long)]
        axis: SweepAxis,
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_hyphen_values = true
        )]
        values: Vec<f64>,
    },
    /// Space-frequency transmit spectra.
    Spectra,
    /// Ergodic and Monte-Carlo cyclic spectra of the intercepted signal.
    Cyclic,
    /// Residual and constraint traces of one solve.
    Convergence,
    /// Sweep over the relative CSI error variance.
    Robustness {
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0,0.01,0.05,0.1,0.2",
            allow_hyphen_values = true
        )]
        values: Vec<f64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep { .. } => "sweep",
            Command::Spectra => "spectra",
            Command::Cyclic => "cyclic",
            Command::Convergence => "convergence",
            Command::Robustness { .. } => "robustness",
        }
    }

    fn default_schemes(&self) -> Vec<Scheme> {
        match self {
            Command::Solve | Command::Convergence => vec![Scheme::Proposed],
            Command::Robustness { .. } => vec![Scheme::Proposed, Scheme::FdIsac, Scheme::TsHbf],
            _ => Scheme::ALL.to_vec(),
        }
    }
}

fn build_spec(cli: &Cli) -> Result<ExperimentSpec> {
    let c = &cli.common;
    let mut spec = match &c.config {
        Some(path) => {
            ExperimentSpec::load(path).with_context(|| format!("loading {}", path.display()))?
        }
        None => {
            let mut spec = ExperimentSpec::for_profile(c.profile);
            spec.schemes = cli.command.default_schemes();
            spec
        }
    };
    if c.profile == Profile::Paper {
        log::warn!("full-scale profile: expect long runtimes");
    }
    spec.name = cli.command.name().to_string();
    if !c.scheme.is_empty() {
        spec.schemes = c.scheme.clone();
    }
    if let Some(seed) = c.seed {
        spec.seed = seed;
    }
    if let Some(trials) = c.trials {
        spec.trials = trials;
    }
    if let Some(out) = &c.out {
        spec.output_dir = out.clone();
    }
    spec.dump_trials |= c.dump_trials;
    match &cli.command {
        Command::Sweep { axis, values } => {
            spec.sweep = Some(Sweep {
                axis: *axis,
                values: values.clone(),
            })
        }
        Command::Robustness { values } => {
            spec.sweep = Some(Sweep {
                axis: SweepAxis::CsiError,
                values: values.clone(),
            })
        }
        _ => {}
    }
    spec.validate()?;
    Ok(spec)
}

fn solve(spec: &ExperimentSpec, dir: &Path) -> Result<()> {
    let inst = instance(spec, spec.points()[0], TrialSeeds::derive(spec.seed, 0))?;
    for &scheme in &spec.schemes {
        let out = run_scheme(scheme, &inst.scenario, &inst.constraints, &inst.solver)?;
        let report = MetricsReport::evaluate(&out.bf, &inst.scenario, &inst.constraints)?;
        write(dir, &format!("metrics_{scheme}.json"), &report.to_json())?;
        write(dir, &format!("trace_{scheme}.csv"), &out.trace.to_csv())?;
        let map = SpectrumMap::evaluate(
            &out.bf,
            &inst.scenario.system,
            &SpectrumMap::default_angles(),
        );
        write(dir, &format!("spectrum_{scheme}.csv"), &map.to_csv())?;
        println!(
            "{scheme}: SE {:.4} bit/s/Hz, radar SINR {:.3} dB, IML {:.3} dBm, flatness {:.4}, max null {:.3} dBm, iterations {}, restored {}",
            report.se,
            report.radar_sinr_db(),
            report.iml,
            report.p_intercept_inputs.1,
            report.max_null_dbm,
            out.trace.len(),
            out.restored
        );
    }
    Ok(())
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let spec = build_spec(&cli)?;
    let dir = spec.output_dir.clone();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    spec.save(&dir.join("config.toml"))?;
    match &cli.command {
        Command::Solve => solve(&spec, &dir)?,
        Command::Sweep { .. } | Command::Robustness { .. } => {
            let record = run_experiment(&spec)?;
            emit_figures(&record, &dir)?;
            log::info!(
                "{} trials in {:.1} s",
                record.trials.len(),
                record.wall_clock_s
            );
        }
        Command::Spectra => {
            emit_spectra(&spectra_experiment(&spec)?, &dir)?;
        }
        Command::Cyclic => {
            let record = cyclic_experiment(&spec)?;
            for e in &record.entries {
                println!(
                    "{}: flatness R_Xi {:.6}, spectrum {:.6}",
                    e.scheme, e.flatness_r_xi, e.flatness_spectrum
                );
            }
            emit_cyclic(&record, &dir)?;
        }
        Command::Convergence => {
            let scheme = spec.schemes[0];
            let trace = convergence_experiment(&spec, scheme)?;
            if let Some(last) = trace.last() {
                println!(
                    "{scheme}: {} iterations, first all-residual < 1e-5 at {:?}, final max residual {:.3e}",
                    trace.len(),
                    trace.first_below(1e-5),
                    last.max_residual()
                );
            }
            emit_convergence(&trace, &dir)?;
        }
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage_error = e.use_stderr();
            let _ = e.print();
            return if usage_error {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let infeasible = e.chain().any(|c| {
                c.downcast_ref::<lpi_isac::Error>()
                    .is_some_and(|le| le.is_infeasible())
            });
            ExitCode::from(if infeasible { 2 } else { 1 })
        }
    }
}
