//! Simulated annealing with Metropolis single-spin sweeps.
//!
//! One run: random initial spins, a geometric temperature ladder from
//! `T_init = max_i ΔE_i^max` down to `t_final_ratio · T_init` with one
//! temperature per sweep, and in every sweep each spin visited once in a
//! fresh random order. Independent runs are spread over a thread pool; run
//! `k` always draws from stream `k` of the master seed and results are
//! reduced in run order, so the outcome does not depend on the thread count.

use std::time::Instant;

use log::warn;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hubo::{HuboInstance, Neighborhoods, SpinConfig};
use crate::rng::{self, Rng};

/// Modeled CPU time per sweep (seconds).
pub const SECONDS_PER_SWEEP: f64 = 0.6e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaConfig {
    pub n_sweep: usize,
    pub n_runs: usize,
    pub t_final_ratio: f64,
    pub seed: u64,
    /// Greedy descent: only strictly improving flips are accepted.
    pub zero_temperature: bool,
    /// Start every run here instead of from random spins.
    pub initial_state: Option<SpinConfig>,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
    /// Keep per-run improvement events for time-to-target analysis.
    pub record_trace: bool,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self {
            n_sweep: 1000,
            n_runs: 1,
            t_final_ratio: 0.01,
            seed: 0,
            zero_temperature: false,
            initial_state: None,
            threads: 0,
            record_trace: false,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_sweep == 0 || self.n_runs == 0 {
            return Err(Error::InvalidConfig(
                "n_sweep and n_runs must be at least 1".into(),
            ));
        }
        if !(self.t_final_ratio > 0.0 && self.t_final_ratio <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "t_final_ratio must lie in (0, 1], got {}",
                self.t_final_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunBest {
    pub energy: f64,
    pub spins: SpinConfig,
    /// `(sweeps completed, best energy)` at every improvement, when recorded.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaResult {
    pub best_spin: SpinConfig,
    pub best_energy: f64,
    pub per_run_best: Vec<RunBest>,
    /// Total sweeps over all runs.
    pub sweep_count_executed: usize,
}

impl SaResult {
    /// Best-so-far energy against modeled time, with runs executed back to
    /// back in the time model: a point at sweep `k` is stamped
    /// `k · n_runs · seconds_per_sweep`, matching how the runtime model
    /// charges every run in full.
    pub fn merged_trace(&self, seconds_per_sweep: f64) -> Vec<(f64, f64)> {
        let n_runs = self.per_run_best.len();
        let mut events: Vec<(usize, f64)> = self
            .per_run_best
            .iter()
            .flat_map(|r| r.trace.iter().copied())
            .collect();
        events.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut best = f64::INFINITY;
        for (sweep, e) in events {
            if e < best {
                best = e;
                let t = sweep as f64 * n_runs as f64 * seconds_per_sweep;
                match out.last_mut() {
                    Some(last) if last.0 == t => last.1 = best,
                    _ => out.push((t, best)),
                }
            }
        }
        out
    }
}

/// Upper bound on the energy change of any single flip:
/// `max_i 2(|h_i| + Σ|J| + Σ|K|)` over terms touching `i`.
pub fn initial_temperature(inst: &HuboInstance) -> f64 {
    let nb = Neighborhoods::new(inst);
    (0..inst.num_vars())
        .map(|i| nb.max_flip_bound(i))
        .fold(0.0, f64::max)
}

/// `n_sweep` temperatures with a constant ratio from `t_init` to `t_final`.
pub fn geometric_schedule(t_init: f64, t_final: f64, n_sweep: usize) -> Result<Vec<f64>> {
    if !(t_final > 0.0 && t_init >= t_final) || !t_init.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "schedule needs t_init >= t_final > 0, got ({t_init}, {t_final})"
        )));
    }
    if n_sweep == 0 {
        return Err(Error::InvalidConfig(
            "schedule needs at least one sweep".into(),
        ));
    }
    if n_sweep == 1 {
        return Ok(vec![t_init]);
    }
    let ratio = (t_final / t_init).powf(1.0 / (n_sweep - 1) as f64);
    let mut temps: Vec<f64> = (0..n_sweep)
        .map(|k| t_init * ratio.powi(k as i32))
        .collect();
    temps[n_sweep - 1] = t_final;
    Ok(temps)
}

fn schedule_for(inst: &HuboInstance, cfg: &SaConfig) -> Result<Vec<f64>> {
    let mut t_init = initial_temperature(inst);
    if t_init == 0.0 {
        warn!("all coefficients are zero; using T_init = 1");
        t_init = 1.0;
    }
    geometric_schedule(t_init, cfg.t_final_ratio * t_init, cfg.n_sweep)
}

/// A single Markov chain with incremental energy bookkeeping.
pub struct Chain<'a> {
    nb: &'a Neighborhoods,
    spins: Vec<f64>,
    energy: f64,
    order: Vec<usize>,
    rng: Rng,
    #[cfg(debug_assertions)]
    inst: &'a HuboInstance,
    #[cfg(debug_assertions)]
    accepted_total: u64,
}

impl<'a> Chain<'a> {
    pub fn new(
        inst: &'a HuboInstance,
        nb: &'a Neighborhoods,
        start: &SpinConfig,
        rng: Rng,
    ) -> Self {
        let spins = start.as_f64();
        let energy = inst.energy_f64(&spins);
        Self {
            nb,
            spins,
            energy,
            order: (0..inst.num_vars()).collect(),
            rng,
            #[cfg(debug_assertions)]
            inst,
            #[cfg(debug_assertions)]
            accepted_total: 0,
        }
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn spins(&self) -> SpinConfig {
        SpinConfig::new(self.spins.iter().map(|&s| s as i8).collect()).expect("spins are ±1")
    }

    /// One Metropolis sweep at temperature `t`; returns accepted flips.
    /// `ΔE ≤ 0` is always accepted.
    pub fn sweep(&mut self, t: f64) -> usize {
        self.order.shuffle(&mut self.rng);
        let mut accepted = 0;
        for k in 0..self.order.len() {
            let i = self.order[k];
            let de = self.nb.flip_delta(&self.spins, i);
            if de <= 0.0 || self.rng.random::<f64>() < (-de / t).exp() {
                self.apply(i, de);
                accepted += 1;
            }
        }
        accepted
    }

    /// One greedy sweep: only `ΔE < 0` flips are accepted.
    pub fn sweep_zero_temperature(&mut self) -> usize {
        self.order.shuffle(&mut self.rng);
        let mut accepted = 0;
        for k in 0..self.order.len() {
            let i = self.order[k];
            let de = self.nb.flip_delta(&self.spins, i);
            if de < 0.0 {
                self.apply(i, de);
                accepted += 1;
            }
        }
        accepted
    }

    #[inline]
    fn apply(&mut self, i: usize, de: f64) {
        self.spins[i] = -self.spins[i];
        self.energy += de;
        #[cfg(debug_assertions)]
        {
            self.accepted_total += 1;
            if self.accepted_total.is_multiple_of(4096) {
                let full = self.inst.energy_f64(&self.spins);
                let tol = 1e-9 * full.abs().max(1.0);
                assert!(
                    (full - self.energy).abs() <= tol,
                    "incremental energy {} drifted from {full}",
                    self.energy
                );
            }
        }
    }
}

fn random_spins(n: usize, rng: &mut Rng) -> SpinConfig {
    SpinConfig::new(
        (0..n)
            .map(|_| if rng.random_bool(0.5) { -1 } else { 1 })
            .collect(),
    )
    .expect("±1")
}

fn single_run(
    inst: &HuboInstance,
    nb: &Neighborhoods,
    cfg: &SaConfig,
    temps: &[f64],
    run: usize,
) -> Result<RunBest> {
    let mut r = rng::stream(cfg.seed, run as u64);
    let start = match &cfg.initial_state {
        Some(s) => s.clone(),
        None => random_spins(inst.num_vars(), &mut r),
    };
    let mut chain = Chain::new(inst, nb, &start, r);
    let mut best_energy = chain.energy();
    let mut best = start;
    let mut trace = Vec::new();
    if cfg.record_trace {
        trace.push((0, best_energy));
    }
    for (k, &t) in temps.iter().enumerate() {
        if cfg.zero_temperature {
            chain.sweep_zero_temperature();
        } else {
            chain.sweep(t);
        }
        if chain.energy() < best_energy {
            best_energy = chain.energy();
            best = chain.spins();
            if cfg.record_trace {
                trace.push((k + 1, best_energy));
            }
        }
    }
    let energy = inst.energy(&best)?;
    if let Some(last) = trace.last_mut() {
        last.1 = energy;
    }
    Ok(RunBest {
        energy,
        spins: best,
        trace,
    })
}

pub(crate) fn with_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

pub fn anneal(inst: &HuboInstance, cfg: &SaConfig) -> Result<SaResult> {
    cfg.validate()?;
    if let Some(s) = &cfg.initial_state {
        if s.len() != inst.num_vars() {
            return Err(Error::Dimension {
                expected: inst.num_vars(),
                got: s.len(),
            });
        }
    }
    let nb = Neighborhoods::new(inst);
    let temps = schedule_for(inst, cfg)?;
    let runs = with_pool(cfg.threads, || {
        (0..cfg.n_runs)
            .into_par_iter()
            .map(|run| single_run(inst, &nb, cfg, &temps, run))
            .collect::<Result<Vec<_>>>()
    })??;
    let best = runs
        .iter()
        .enumerate()
        .fold(0, |b, (k, r)| if r.energy < runs[b].energy { k } else { b });
    Ok(SaResult {
        best_spin: runs[best].spins.clone(),
        best_energy: runs[best].energy,
        sweep_count_executed: cfg.n_sweep * cfg.n_runs,
        per_run_best: runs,
    })
}

/// Greedy zero-temperature descent from `start` for at most `n_sweep`
/// sweeps; stops early once a sweep accepts nothing.
pub fn descend(
    inst: &HuboInstance,
    nb: &Neighborhoods,
    start: &SpinConfig,
    n_sweep: usize,
    rng: Rng,
) -> (SpinConfig, f64) {
    let mut chain = Chain::new(inst, nb, start, rng);
    for _ in 0..n_sweep {
        if chain.sweep_zero_temperature() == 0 {
            break;
        }
    }
    let spins = chain.spins();
    let energy = inst.energy_f64(&spins.as_f64());
    (spins, energy)
}

/// Modeled SA wall time: `n_sweep · n_runs · seconds_per_sweep`.
pub fn cpu_time_model(n_sweep: u64, n_runs: u64, seconds_per_sweep: f64) -> f64 {
    n_sweep as f64 * n_runs as f64 * seconds_per_sweep
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope · x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::Dimension {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(Error::Fit("need at least two points".into()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all x values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub seconds_per_sweep: f64,
    pub offset_seconds: f64,
    pub r_squared: f64,
    /// `(n_sweep, mean wall seconds)` per grid point.
    pub points: Vec<(usize, f64)>,
}

/// Times zero-temperature runs across `sweep_grid` and fits
/// `T_avg = T_sweep · n_sweep + T_offset`. The grid must span at least two
/// decades.
pub fn calibrate_sweep_time(
    inst: &HuboInstance,
    sweep_grid: &[usize],
    runs_per_point: usize,
) -> Result<Calibration> {
    let lo = sweep_grid.iter().copied().min().unwrap_or(0);
    let hi = sweep_grid.iter().copied().max().unwrap_or(0);
    if lo == 0 || (hi as f64) < 100.0 * lo as f64 {
        return Err(Error::Fit(format!(
            "sweep grid [{lo}, {hi}] must be positive and span at least two decades"
        )));
    }
    let runs = runs_per_point.max(1);
    let mut points = Vec::with_capacity(sweep_grid.len());
    for (k, &n_sweep) in sweep_grid.iter().enumerate() {
        let cfg = SaConfig {
            n_sweep,
            n_runs: 1,
            zero_temperature: true,
            threads: 1,
            ..SaConfig::default()
        };
        let mut total = 0.0;
        for rep in 0..runs {
            let cfg = SaConfig {
                seed: rng::child_seed(k as u64, rep as u64),
                ..cfg.clone()
            };
            let start = Instant::now();
            std::hint::black_box(anneal(inst, &cfg)?);
            total += start.elapsed().as_secs_f64();
        }
        points.push((n_sweep, total / runs as f64));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = linear_fit(&xs, &ys)?;
    Ok(Calibration {
        seconds_per_sweep: fit.slope,
        offset_seconds: fit.intercept,
        r_squared: fit.r_squared,
        points,
    })
}
