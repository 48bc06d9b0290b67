//! Benchmark bookkeeping: approximation ratios, time-to-target and suites.
//!
//! A suite generates instances from a [`GeneratorConfig`], runs every
//! configured solver on each, fixes the reference optimum `E_GS` (brute
//! force when small enough, else a proven-optimal external trace, else the
//! best energy any solver found) and writes one CSV row per instance and
//! solver. All reported times are modeled with the fixed per-sweep and
//! per-shot constants; wall-clock measurements go to the JSON output only,
//! which keeps the CSV byte-identical across replays.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anneal::{anneal, with_pool, SaConfig, SECONDS_PER_SWEEP};
use crate::cdsim::{run_bfdcqo, BfDcqoConfig, SECONDS_PER_SHOT};
use crate::error::{Error, Result};
use crate::hubo::{brute_force_ground_state, HuboInstance, SpinConfig, BRUTE_FORCE_CAP};
use crate::mip::{linearize, AuxPolicy, IncumbentTrace};
use crate::rng::child_seed;
use crate::sampler::SamplerConfig;
use crate::topology::{generate_layout, instantiate, CouplingMap, LayoutParams, LayoutPlan};

/// `ℛ = E / E_GS`, flagged non-comparable when the signs differ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub value: f64,
    pub comparable: bool,
}

pub fn approximation_ratio(e: f64, e_gs: f64) -> Result<Ratio> {
    if e_gs == 0.0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(Ratio {
        value: e / e_gs,
        comparable: e == 0.0 || e.signum() == e_gs.signum(),
    })
}

/// Earliest time at which the best-so-far energy reaches `ℛ ≥ target`.
pub fn tt_r(trace: &[(f64, f64)], target: f64, e_gs: f64) -> Result<Option<f64>> {
    for &(t, e) in trace {
        if approximation_ratio(e, e_gs)?.value >= target {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// `TT_ℛ(reference) / TT_ℛ(subject)`.
pub fn enhancement_factor(reference: f64, subject: f64) -> f64 {
    reference / subject
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Topology {
    /// The 156-qubit device layout; sizes below 156 take qubits `0..N`.
    Heron,
    /// Parametric lattice; sizes take qubits `0..N`.
    HeavyHex { rows: usize, cols: usize },
    /// Breadth-first heavy-hex patch of exactly `N` qubits.
    #[default]
    Patch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(default)]
    pub topology: Topology,
    #[serde(default = "one")]
    pub swap_layers: usize,
    pub s2q: usize,
    pub s3q: usize,
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub coloring_seed: Option<u64>,
}

fn one() -> usize {
    1
}

impl GeneratorConfig {
    pub fn coupling_map(&self, n: usize) -> Result<CouplingMap> {
        match self.topology {
            Topology::Heron => CouplingMap::heron().prefix(n),
            Topology::HeavyHex { rows, cols } => CouplingMap::heavy_hex(rows, cols)?.prefix(n),
            Topology::Patch => CouplingMap::patch(n),
        }
    }

    pub fn layout(&self, n: usize) -> Result<LayoutPlan> {
        generate_layout(
            &self.coupling_map(n)?,
            LayoutParams {
                swap_layers: self.swap_layers,
                s2q: self.s2q,
                s3q: self.s3q,
                seed: self.coloring_seed,
            },
        )
    }

    pub fn instance(&self, layout: &LayoutPlan, seed: u64) -> Result<HuboInstance> {
        instantiate(layout, self.sampler, seed)
    }
}

/// Seed of instance `index` at size `n` under a master seed.
pub fn instance_seed(master: u64, n: usize, index: usize) -> u64 {
    child_seed(child_seed(master, n as u64), index as u64)
}

/// Ratios at or above `1 − RATIO_EPS` count as optimal.
pub const RATIO_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BandCounts {
    pub r0_99: usize,
    pub r0_995: usize,
    pub r0_999: usize,
    pub r1: usize,
}

impl BandCounts {
    pub fn from_ratios(ratios: &[f64]) -> Self {
        let count = |t: f64| ratios.iter().filter(|&&r| r >= t - RATIO_EPS).count();
        Self {
            r0_99: count(0.99),
            r0_995: count(0.995),
            r0_999: count(0.999),
            r1: count(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessReport {
    pub n: usize,
    pub ratios: Vec<f64>,
    pub bands: BandCounts,
}

/// SA at a fixed budget against the brute-force optimum on `n_instances`
/// generated instances of size `n`.
pub fn hardness_screen(
    generator: &GeneratorConfig,
    n: usize,
    n_instances: usize,
    master_seed: u64,
    sa: &SaConfig,
) -> Result<HardnessReport> {
    if n > BRUTE_FORCE_CAP {
        return Err(Error::Capacity {
            what: "hardness screen oracle",
            size: n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let layout = generator.layout(n)?;
    let ratios = (0..n_instances)
        .into_par_iter()
        .map(|k| {
            let seed = instance_seed(master_seed, n, k);
            let inst = generator.instance(&layout, seed)?;
            let (_, e_gs) = brute_force_ground_state(&inst, BRUTE_FORCE_CAP)?;
            let res = anneal(&inst, &SaConfig { seed, ..sa.clone() })?;
            if e_gs == 0.0 {
                return Ok(if res.best_energy == 0.0 { 1.0 } else { 0.0 });
            }
            Ok(approximation_ratio(res.best_energy, e_gs)?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(HardnessReport {
        n,
        bands: BandCounts::from_ratios(&ratios),
        ratios,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverSpec {
    Sa {
        name: String,
        n_sweep: usize,
        n_runs: usize,
    },
    Bfdcqo {
        name: String,
        #[serde(flatten)]
        config: BfDcqoConfig,
    },
    /// Incumbent traces of an external solver, `<dir>/<instance id>.csv`.
    External { name: String, traces: PathBuf },
}

impl SolverSpec {
    pub fn name(&self) -> &str {
        match self {
            SolverSpec::Sa { name, .. }
            | SolverSpec::Bfdcqo { name, .. }
            | SolverSpec::External { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub seed: u64,
    pub sizes: Vec<usize>,
    #[serde(default = "one")]
    pub instances_per_size: usize,
    pub generator: GeneratorConfig,
    #[serde(default)]
    pub solvers: Vec<SolverSpec>,
    /// Fixed TT_ℛ target; without it the target is the ratio reached by
    /// `subject`.
    #[serde(default)]
    pub target_ratio: Option<f64>,
    #[serde(default)]
    pub subject: Option<String>,
    /// Enhancement factors are `TT_ℛ(reference) / TT_ℛ(subject)`.
    #[serde(default)]
    pub reference: Option<String>,
    #[serde(default = "default_cap")]
    pub brute_force_cap: usize,
    #[serde(default = "yes")]
    pub artifacts: bool,
    #[serde(default)]
    pub threads: usize,
    /// Directory relative paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_name() -> String {
    "suite".into()
}

fn default_cap() -> usize {
    BRUTE_FORCE_CAP
}

fn yes() -> bool {
    true
}

impl SuiteConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml_str(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let names: Vec<&str> = self.solvers.iter().map(SolverSpec::name).collect();
        for (k, n) in names.iter().enumerate() {
            if names[..k].contains(n) {
                return Err(Error::InvalidConfig(format!("duplicate solver name {n:?}")));
            }
        }
        for role in [&self.subject, &self.reference].into_iter().flatten() {
            if !names.contains(&role.as_str()) {
                return Err(Error::InvalidConfig(format!("unknown solver {role:?}")));
            }
        }
        self.generator.sampler.validate()
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimumSource {
    BruteForce,
    External,
    /// Best energy across solvers; not a proven optimum.
    BestKnown,
    Missing,
}

impl OptimumSource {
    fn label(self) -> &'static str {
        match self {
            OptimumSource::BruteForce => "brute_force",
            OptimumSource::External => "external",
            OptimumSource::BestKnown => "best_known",
            OptimumSource::Missing => "missing",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOutcome {
    pub solver: String,
    /// `ok`, `missing` or `error: ...`.
    pub status: String,
    pub best_energy: Option<f64>,
    pub ratio: Option<f64>,
    pub comparable: bool,
    pub n_iter: Option<usize>,
    pub cpu_seconds: Option<f64>,
    pub qpu_seconds: Option<f64>,
    pub total_seconds: Option<f64>,
    pub measured_seconds: Option<f64>,
    pub tt_r: Option<f64>,
    /// Best-so-far `(modeled seconds, energy)`.
    pub trace: Vec<(f64, f64)>,
    #[serde(skip)]
    pub solution: Option<SpinConfig>,
}

impl SolverOutcome {
    fn empty(solver: &str, status: String) -> Self {
        Self {
            solver: solver.to_string(),
            status,
            best_energy: None,
            ratio: None,
            comparable: false,
            n_iter: None,
            cpu_seconds: None,
            qpu_seconds: None,
            total_seconds: None,
            measured_seconds: None,
            tt_r: None,
            trace: Vec::new(),
            solution: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance_id: String,
    pub n: usize,
    pub instance: usize,
    pub seed: u64,
    pub e_gs: Option<f64>,
    pub e_gs_source: OptimumSource,
    pub target_ratio: Option<f64>,
    pub enhancement_factor: Option<f64>,
    pub outcomes: Vec<SolverOutcome>,
}

fn run_solver(
    spec: &SolverSpec,
    inst: &HuboInstance,
    layout: &LayoutPlan,
    seed: u64,
    id: &str,
    cfg: &SuiteConfig,
) -> Result<SolverOutcome> {
    let mut out = SolverOutcome::empty(spec.name(), "ok".into());
    match spec {
        SolverSpec::Sa {
            n_sweep, n_runs, ..
        } => {
            let clock = Instant::now();
            let res = anneal(
                inst,
                &SaConfig {
                    n_sweep: *n_sweep,
                    n_runs: *n_runs,
                    seed,
                    record_trace: true,
                    ..SaConfig::default()
                },
            )?;
            let t = (*n_sweep * *n_runs) as f64 * SECONDS_PER_SWEEP;
            out.measured_seconds = Some(clock.elapsed().as_secs_f64());
            out.trace = res.merged_trace(SECONDS_PER_SWEEP);
            out.best_energy = Some(res.best_energy);
            out.cpu_seconds = Some(t);
            out.qpu_seconds = Some(0.0);
            out.total_seconds = Some(t);
            out.solution = Some(res.best_spin);
        }
        SolverSpec::Bfdcqo { config, .. } => {
            let res = run_bfdcqo(
                inst,
                Some(layout),
                &BfDcqoConfig {
                    seed,
                    ..config.clone()
                },
            )?;
            let pre = (config.pre_sweeps * config.pre_runs) as f64 * SECONDS_PER_SWEEP;
            let round = (config.n_cvar * config.post_sweeps) as f64 * SECONDS_PER_SWEEP
                + config.n_shots as f64 * SECONDS_PER_SHOT;
            let mut best = f64::INFINITY;
            if let Some(e) = res.pre_energy {
                best = e;
                out.trace.push((pre, e));
            }
            for it in &res.iterations {
                if it.best_energy < best {
                    best = it.best_energy;
                    out.trace
                        .push((pre + (it.iteration + 1) as f64 * round, best));
                }
            }
            out.best_energy = Some(res.best_energy);
            out.n_iter = Some(config.n_iter);
            out.cpu_seconds = Some(res.modeled.t_cpu);
            out.qpu_seconds = Some(res.modeled.t_qpu);
            out.total_seconds = Some(res.modeled.total);
            out.measured_seconds = Some(res.measured_seconds);
            out.solution = Some(res.best_spin);
        }
        SolverSpec::External { traces, .. } => {
            let path = cfg.resolve(traces).join(format!("{id}.csv"));
            if !path.exists() {
                return Ok(SolverOutcome::empty(spec.name(), "missing".into()));
            }
            let trace = IncumbentTrace::read(&path)?;
            out.trace = trace.points.clone();
            out.best_energy = trace.final_objective();
            out.total_seconds = trace.points.last().map(|p| p.0);
            if trace.proven_optimal {
                out.status = "ok optimal".into();
            }
        }
    }
    Ok(out)
}

fn run_instance(
    cfg: &SuiteConfig,
    layout: &LayoutPlan,
    n: usize,
    k: usize,
    dir: Option<&Path>,
) -> Result<BenchRecord> {
    let seed = instance_seed(cfg.seed, n, k);
    let id = format!("n{n}_i{k}");
    let inst = cfg.generator.instance(layout, seed)?;

    let mut outcomes: Vec<SolverOutcome> = cfg
        .solvers
        .iter()
        .enumerate()
        .map(|(s, spec)| {
            run_solver(
                spec,
                &inst,
                layout,
                child_seed(seed, s as u64 + 1),
                &id,
                cfg,
            )
            .unwrap_or_else(|e| SolverOutcome::empty(spec.name(), format!("error: {e}")))
        })
        .collect();

    let (e_gs, source) = if n <= cfg.brute_force_cap {
        (
            Some(brute_force_ground_state(&inst, cfg.brute_force_cap)?.1),
            OptimumSource::BruteForce,
        )
    } else if let Some(e) = outcomes
        .iter()
        .find(|o| o.status == "ok optimal")
        .and_then(|o| o.best_energy)
    {
        (Some(e), OptimumSource::External)
    } else {
        match outcomes
            .iter()
            .filter_map(|o| o.best_energy)
            .min_by(f64::total_cmp)
        {
            Some(e) => (Some(e), OptimumSource::BestKnown),
            None => (None, OptimumSource::Missing),
        }
    };

    let ratio_of = |e: f64| e_gs.and_then(|g| approximation_ratio(e, g).ok());
    for o in &mut outcomes {
        if let Some(r) = o.best_energy.and_then(ratio_of) {
            o.ratio = Some(r.value);
            o.comparable = r.comparable;
        }
    }
    let target = cfg.target_ratio.or_else(|| {
        let subject = cfg.subject.as_deref()?;
        outcomes.iter().find(|o| o.solver == subject)?.ratio
    });
    if let (Some(t), Some(g)) = (target, e_gs.filter(|&g| g != 0.0)) {
        for o in &mut outcomes {
            o.tt_r = tt_r(&o.trace, t - RATIO_EPS, g)?;
        }
    }
    let tt_of = |name: &Option<String>| {
        let name = name.as_deref()?;
        outcomes.iter().find(|o| o.solver == name)?.tt_r
    };
    let enhancement = match (tt_of(&cfg.reference), tt_of(&cfg.subject)) {
        (Some(r), Some(s)) if s > 0.0 => Some(enhancement_factor(r, s)),
        _ => None,
    };

    if let Some(dir) = dir {
        let d = dir.join("instances").join(&id);
        std::fs::create_dir_all(&d)?;
        inst.write_json(d.join("instance.json"))?;
        let model = linearize(&inst, AuxPolicy::default());
        model.export_lp(d.join("model.lp"))?;
        let best = outcomes
            .iter()
            .filter(|o| o.solution.is_some())
            .min_by(|a, b| {
                a.best_energy
                    .unwrap_or(f64::INFINITY)
                    .total_cmp(&b.best_energy.unwrap_or(f64::INFINITY))
            });
        if let Some(s) = best.and_then(|o| o.solution.as_ref()) {
            model.export_warm_start(s, d.join("warm_start.txt"))?;
        }
        let traces: Vec<(&str, &[(f64, f64)])> = outcomes
            .iter()
            .map(|o| (o.solver.as_str(), o.trace.as_slice()))
            .collect();
        std::fs::write(
            d.join("traces.json"),
            serde_json::to_string_pretty(&traces)?,
        )?;
    }

    Ok(BenchRecord {
        instance_id: id,
        n,
        instance: k,
        seed,
        e_gs,
        e_gs_source: source,
        target_ratio: target,
        enhancement_factor: enhancement,
        outcomes,
    })
}

/// Runs the suite; with `out_dir`, writes `records.csv`, `records.json`,
/// `timings.csv` and per-instance artifacts there.
pub fn run_suite(cfg: &SuiteConfig, out_dir: Option<&Path>) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let artifacts = out_dir.filter(|_| cfg.artifacts);
    let mut jobs = Vec::new();
    for &n in &cfg.sizes {
        let layout = cfg.generator.layout(n)?;
        if let Some(dir) = artifacts {
            std::fs::create_dir_all(dir.join("layouts"))?;
            layout.write_json(dir.join("layouts").join(format!("n{n}.json")))?;
        }
        for k in 0..cfg.instances_per_size {
            jobs.push((n, k, layout.clone()));
        }
    }
    let records = with_pool(cfg.threads, || {
        jobs.par_iter()
            .map(|(n, k, layout)| run_instance(cfg, layout, *n, *k, artifacts))
            .collect::<Result<Vec<_>>>()
    })??;
    if let Some(dir) = out_dir {
        std::fs::write(dir.join("records.csv"), records_csv(&records))?;
        std::fs::write(
            dir.join("records.json"),
            serde_json::to_string_pretty(&records)?,
        )?;
        std::fs::write(dir.join("timings.csv"), timings_csv(&records))?;
    }
    Ok(records)
}

pub const CSV_HEADER: &str = "instance_id,N,instance,n_iter,optimal_cost,optimal_source,solver,status,energy,ratio,comparable,cpu_time,qpu_time,total_time,target_ratio,tt_r,enhancement_factor";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per instance and solver; deterministic for a fixed suite seed.
pub fn records_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        for o in &r.outcomes {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.instance_id,
                r.n,
                r.instance,
                opt(o.n_iter),
                opt(r.e_gs),
                r.e_gs_source.label(),
                o.solver,
                o.status.replace(',', ";"),
                opt(o.best_energy),
                opt(o.ratio),
                o.comparable,
                opt(o.cpu_seconds),
                opt(o.qpu_seconds),
                opt(o.total_seconds),
                opt(r.target_ratio),
                opt(o.tt_r),
                opt(r.enhancement_factor),
            );
        }
    }
    out
}

/// Measured wall-clock seconds per instance and solver.
pub fn timings_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from("instance_id,solver,measured_seconds\n");
    for r in records {
        for o in &r.outcomes {
            let _ = writeln!(
                out,
                "{},{},{}",
                r.instance_id,
                o.solver,
                opt(o.measured_seconds)
            );
        }
    }
    out
}
