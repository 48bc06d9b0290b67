use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hubo_core::anneal::{
    anneal, calibrate_sweep_time, cpu_time_model, SaConfig, SECONDS_PER_SWEEP,
};
use hubo_core::cdsim::{build_cd_program, run_bfdcqo, BfDcqoConfig, DEFAULT_GAMMA};
use hubo_core::harness::{
    approximation_ratio, hardness_screen, run_suite, tt_r, GeneratorConfig, SuiteConfig, Topology,
};
use hubo_core::mip::{linearize, AuxPolicy, IncumbentTrace};
use hubo_core::{brute_force_ground_state, HuboInstance, LayoutPlan, SamplerConfig, SpinConfig};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "hubo",
    version,
    about = "Hardware-structured HUBO generation and solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Heron,
    Patch,
}

#[derive(Clone, Copy, ValueEnum)]
enum Distribution {
    Cauchy,
    Pareto,
    Constant,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Independent,
    Shared,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "patch")]
    topology: TopologyArg,
    #[arg(long, default_value_t = 1)]
    swap_layers: usize,
    #[arg(long, default_value_t = 1)]
    s2q: usize,
    #[arg(long, default_value_t = 2)]
    s3q: usize,
    #[arg(long, value_enum, default_value = "cauchy")]
    dist: Distribution,
    /// Tail exponent of the Pareto sampler, or the value of the constant one.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    truncation: Option<f64>,
}

impl GenArgs {
    fn generator(&self) -> GeneratorConfig {
        let sampler = match self.dist {
            Distribution::Cauchy => SamplerConfig::cauchy(self.truncation),
            Distribution::Pareto => SamplerConfig::symmetric_pareto(self.alpha, self.truncation),
            Distribution::Constant => SamplerConfig::constant(self.alpha),
        };
        GeneratorConfig {
            topology: match self.topology {
                TopologyArg::Heron => Topology::Heron,
                TopologyArg::Patch => Topology::Patch,
            },
            swap_layers: self.swap_layers,
            s2q: self.s2q,
            s3q: self.s3q,
            sampler,
            coloring_seed: None,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance and its layout plan.
    Generate {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        layout_out: Option<PathBuf>,
    },
    /// Simulated annealing.
    SolveSa {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 1000)]
        sweeps: usize,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        zero_temp: bool,
        /// File holding a `0`/`1` bitstring (bit 1 means spin −1).
        #[arg(long)]
        init: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bias-field counterdiabatic optimization on the statevector simulator.
    RunBfdcqo {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        layout: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        iters: usize,
        #[arg(long, default_value_t = 4000)]
        shots: usize,
        #[arg(long, default_value_t = 100)]
        cvar: usize,
        #[arg(long, default_value_t = DEFAULT_GAMMA, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long, default_value_t = 1000)]
        pre_sweeps: usize,
        #[arg(long, default_value_t = 100)]
        pre_runs: usize,
        #[arg(long, default_value_t = 10)]
        post_sweeps: usize,
        #[arg(long)]
        bit_flip: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Writes the circuit, one gate per line.
        #[arg(long)]
        dump_program: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Linearize to a binary MIP in LP format, optionally with a warm start.
    ExportLp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "independent")]
        policy: PolicyArg,
        /// Spin configuration as a `0`/`1` bitstring file.
        #[arg(long, requires = "warm_out")]
        warm_start: Option<PathBuf>,
        #[arg(long)]
        warm_out: Option<PathBuf>,
    },
    /// Time-to-target of an external incumbent trace.
    IngestTrace {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        optimal: f64,
        /// Target ratio; defaults to the ratio of `--energy`.
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        energy: Option<f64>,
    },
    /// Exhaustive ground state.
    BruteForce {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = hubo_core::hubo::BRUTE_FORCE_CAP)]
        cap: usize,
    },
    /// Run a benchmark suite described by a TOML file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// SA success bands against brute force on generated instances.
    Screen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value_t = 1000)]
        sweeps: usize,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit the per-sweep time on this machine.
    Calibrate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000, 10000, 100000])]
        grid: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        runs: usize,
    },
}

fn read_bitstring(path: &Path) -> Result<SpinConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(SpinConfig::from_bitstring(text.trim())?)
}

fn emit(value: serde_json::Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&value)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn load(path: &Path) -> Result<HuboInstance> {
    HuboInstance::read_json(path).with_context(|| format!("loading instance {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            n,
            gen,
            seed,
            out,
            layout_out,
        } => {
            let g = gen.generator();
            let layout = g.layout(n)?;
            let inst = g.instance(&layout, seed)?;
            inst.write_json(&out)?;
            if let Some(p) = layout_out {
                layout.write_json(p)?;
            }
            emit(
                json!({"num_vars": inst.num_vars(), "terms": inst.term_count(), "available_sets": layout.available}),
                None,
            )
        }
        Command::SolveSa {
            instance,
            sweeps,
            runs,
            seed,
            zero_temp,
            init,
            threads,
            out,
        } => {
            let inst = load(&instance)?;
            let initial_state = init.as_deref().map(read_bitstring).transpose()?;
            let clock = Instant::now();
            let res = anneal(
                &inst,
                &SaConfig {
                    n_sweep: sweeps,
                    n_runs: runs,
                    seed,
                    zero_temperature: zero_temp,
                    initial_state,
                    threads,
                    ..SaConfig::default()
                },
            )?;
            let per_run: Vec<_> = res
                .per_run_best
                .iter()
                .map(|r| json!({"energy": r.energy, "bitstring": r.spins.to_bitstring()}))
                .collect();
            emit(
                json!({
                    "best_energy": res.best_energy,
                    "best_bitstring": res.best_spin.to_bitstring(),
                    "per_run": per_run,
                    "modeled_cpu_seconds": cpu_time_model(sweeps as u64, runs as u64, SECONDS_PER_SWEEP),
                    "measured_seconds": clock.elapsed().as_secs_f64(),
                }),
                out.as_deref(),
            )
        }
        Command::RunBfdcqo {
            instance,
            layout,
            iters,
            shots,
            cvar,
            gamma,
            pre_sweeps,
            pre_runs,
            post_sweeps,
            bit_flip,
            seed,
            dump_program,
            out,
        } => {
            let inst = load(&instance)?;
            let plan = layout.as_deref().map(LayoutPlan::read_json).transpose()?;
            let cfg = BfDcqoConfig {
                n_iter: iters,
                n_shots: shots,
                n_cvar: cvar,
                gamma,
                pre_sweeps,
                pre_runs,
                post_sweeps,
                bit_flip,
                seed,
                ..BfDcqoConfig::default()
            };
            if let Some(p) = dump_program {
                let hx = vec![cfg.hx; inst.num_vars()];
                fs::write(
                    p,
                    build_cd_program(&inst, &hx, plan.as_ref(), gamma)?.dump(),
                )?;
            }
            let res = run_bfdcqo(&inst, plan.as_ref(), &cfg)?;
            let iterations: Vec<_> = res
                .iterations
                .iter()
                .map(|it| {
                    json!({
                        "iteration": it.iteration,
                        "best_energy": it.best_energy,
                        "bias_field": it.bias_field,
                        "shot_summary": {
                            "min_energy": it.shot_min_energy,
                            "mean_energy": it.shot_mean_energy,
                            "cvar_mean_energy": it.cvar_mean_energy,
                            "distinct_outcomes": it.distinct_outcomes,
                        },
                    })
                })
                .collect();
            emit(
                json!({
                    "best_energy": res.best_energy,
                    "best_bitstring": res.best_spin.to_bitstring(),
                    "pre_energy": res.pre_energy,
                    "iterations": iterations,
                    "modeled": res.modeled,
                    "measured_seconds": res.measured_seconds,
                    "gate_count": res.gate_count,
                    "layer_count": res.layer_count,
                }),
                out.as_deref(),
            )
        }
        Command::ExportLp {
            instance,
            out,
            policy,
            warm_start,
            warm_out,
        } => {
            let inst = load(&instance)?;
            let policy = match policy {
                PolicyArg::Independent => AuxPolicy::Independent,
                PolicyArg::Shared => AuxPolicy::Shared,
            };
            let model = linearize(&inst, policy);
            model.export_lp(&out)?;
            if let (Some(ws), Some(wo)) = (warm_start, warm_out) {
                model.export_warm_start(&read_bitstring(&ws)?, wo)?;
            }
            emit(
                json!({"variables": model.num_variables(), "constraints": model.num_constraints()}),
                None,
            )
        }
        Command::IngestTrace {
            trace,
            optimal,
            ratio,
            energy,
        } => {
            let t = IncumbentTrace::read(&trace)?;
            let target = match (ratio, energy) {
                (Some(r), _) => r,
                (None, Some(e)) => approximation_ratio(e, optimal)?.value,
                (None, None) => bail!("pass --ratio or --energy"),
            };
            emit(
                json!({
                    "target_ratio": target,
                    "tt_r": tt_r(&t.points, target, optimal)?,
                    "final_objective": t.final_objective(),
                    "proven_optimal": t.proven_optimal,
                }),
                None,
            )
        }
        Command::BruteForce { instance, cap } => {
            let inst = load(&instance)?;
            let (s, e) = brute_force_ground_state(&inst, cap)?;
            emit(json!({"energy": e, "bitstring": s.to_bitstring()}), None)
        }
        Command::Bench { config, out } => {
            let cfg = SuiteConfig::read(&config)
                .with_context(|| format!("reading suite {}", config.display()))?;
            let records = run_suite(&cfg, Some(&out))?;
            log::info!("{} instances written to {}", records.len(), out.display());
            Ok(())
        }
        Command::Screen {
            n,
            instances,
            gen,
            sweeps,
            runs,
            seed,
        } => {
            let sa = SaConfig {
                n_sweep: sweeps,
                n_runs: runs,
                ..SaConfig::default()
            };
            let report = hardness_screen(&gen.generator(), n, instances, seed, &sa)?;
            emit(serde_json::to_value(report)?, None)
        }
        Command::Calibrate {
            instance,
            grid,
            runs,
        } => {
            let inst = load(&instance)?;
            emit(
                serde_json::to_value(calibrate_sweep_time(&inst, &grid, runs)?)?,
                None,
            )
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
