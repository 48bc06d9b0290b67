use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    apply_bit_flip_noise, build_cd_program, cvar_reduce, post_process, prep_angles, sample_shots,
    update_bias, MixerField, StateVector, SIM_CAP,
};
use crate::anneal::{anneal, SaConfig, SECONDS_PER_SWEEP};
use crate::error::{Error, Result};
use crate::hubo::{HuboInstance, SpinConfig};
use crate::rng::child_seed;
use crate::topology::LayoutPlan;

/// Modeled QPU time per shot (seconds).
pub const SECONDS_PER_SHOT: f64 = 1e-4;

/// Effective angle picked by a grid search on 14-qubit patch instances.
pub const DEFAULT_GAMMA: f64 = -0.07;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BfDcqoConfig {
    pub n_iter: usize,
    pub n_shots: usize,
    pub n_cvar: usize,
    pub n_trot: usize,
    pub pre_sweeps: usize,
    pub pre_runs: usize,
    pub post_sweeps: usize,
    pub gamma: f64,
    /// Transverse field, the same on every qubit.
    pub hx: f64,
    /// `±1` in `hb = sign · ⟨s⟩`.
    pub bias_sign: f64,
    pub seed: u64,
    /// Bit-flip probability per qubit per layer.
    pub bit_flip: Option<f64>,
    pub sim_cap: usize,
}

impl Default for BfDcqoConfig {
    fn default() -> Self {
        Self {
            n_iter: 1,
            n_shots: 4000,
            n_cvar: 100,
            n_trot: 1,
            pre_sweeps: 1000,
            pre_runs: 100,
            post_sweeps: 10,
            gamma: DEFAULT_GAMMA,
            hx: -1.0,
            bias_sign: -1.0,
            seed: 0,
            bit_flip: None,
            sim_cap: SIM_CAP,
        }
    }
}

impl BfDcqoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_shots == 0 || self.n_cvar == 0 || self.n_cvar > self.n_shots {
            return bad(format!(
                "need 0 < n_cvar ({}) <= n_shots ({})",
                self.n_cvar, self.n_shots
            ));
        }
        if self.n_trot == 0 {
            return bad("n_trot must be at least 1".into());
        }
        if self.bias_sign.abs() != 1.0 {
            return bad(format!(
                "bias_sign must be +1 or -1, got {}",
                self.bias_sign
            ));
        }
        if !self.gamma.is_finite() || !self.hx.is_finite() {
            return bad("gamma and hx must be finite".into());
        }
        if let Some(p) = self.bit_flip {
            if !(0.0..=0.5).contains(&p) {
                return bad(format!("bit-flip probability {p} outside [0, 0.5]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeConstants {
    pub seconds_per_sweep: f64,
    pub seconds_per_shot: f64,
}

impl Default for RuntimeConstants {
    fn default() -> Self {
        Self {
            seconds_per_sweep: SECONDS_PER_SWEEP,
            seconds_per_shot: SECONDS_PER_SHOT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeModel {
    pub t_cpu: f64,
    pub t_qpu: f64,
    pub total: f64,
}

/// `T_CPU = [pre_sweeps · pre_runs + n_cvar (n_iter + 1) post_sweeps] · t_sweep`,
/// `T_QPU = (n_iter + 1) n_shots · t_shot`.
pub fn runtime_model(cfg: &BfDcqoConfig, k: RuntimeConstants) -> RuntimeModel {
    let rounds = (cfg.n_iter + 1) as f64;
    let sweeps = (cfg.pre_sweeps * cfg.pre_runs) as f64
        + cfg.n_cvar as f64 * rounds * cfg.post_sweeps as f64;
    let t_cpu = sweeps * k.seconds_per_sweep;
    let t_qpu = rounds * cfg.n_shots as f64 * k.seconds_per_shot;
    RuntimeModel {
        t_cpu,
        t_qpu,
        total: t_cpu + t_qpu,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Bias field used to prepare this iteration's state.
    pub bias_field: Vec<f64>,
    /// Best energy found so far, including this iteration.
    pub best_energy: f64,
    pub iteration_best_energy: f64,
    pub shot_min_energy: f64,
    pub shot_mean_energy: f64,
    pub cvar_mean_energy: f64,
    pub distinct_outcomes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfDcqoResult {
    pub best_spin: SpinConfig,
    pub best_energy: f64,
    pub pre_energy: Option<f64>,
    pub iterations: Vec<IterationRecord>,
    pub modeled: RuntimeModel,
    pub measured_seconds: f64,
    pub gate_count: usize,
    pub layer_count: usize,
}

pub fn run_bfdcqo(
    inst: &HuboInstance,
    layout: Option<&LayoutPlan>,
    cfg: &BfDcqoConfig,
) -> Result<BfDcqoResult> {
    cfg.validate()?;
    let n = inst.num_vars();
    if n > cfg.sim_cap {
        return Err(Error::Capacity {
            what: "statevector",
            size: n,
            cap: cfg.sim_cap,
        });
    }
    let clock = Instant::now();
    let mut field = MixerField::uniform(n, cfg.hx);
    let program = build_cd_program(inst, &field.hx, layout, cfg.gamma / cfg.n_trot as f64)?;

    let mut best: Option<(SpinConfig, f64)> = None;
    let mut pre_energy = None;
    if cfg.pre_sweeps > 0 && cfg.pre_runs > 0 {
        let sa = anneal(
            inst,
            &SaConfig {
                n_sweep: cfg.pre_sweeps,
                n_runs: cfg.pre_runs,
                seed: child_seed(cfg.seed, 0),
                ..SaConfig::default()
            },
        )?;
        field.hb = sa
            .best_spin
            .spins()
            .iter()
            .map(|&s| cfg.bias_sign * s as f64)
            .collect();
        pre_energy = Some(sa.best_energy);
        best = Some((sa.best_spin, sa.best_energy));
    }

    let mut iterations = Vec::with_capacity(cfg.n_iter + 1);
    for it in 0..=cfg.n_iter {
        let angles = prep_angles(&field)?;
        let mut sv = StateVector::product_ry(&angles, cfg.sim_cap)?;
        for _ in 0..cfg.n_trot {
            program.apply(&mut sv)?;
        }
        let tag = 1 + 3 * it as u64;
        let mut shots = sample_shots(&sv, &program, inst, cfg.n_shots, child_seed(cfg.seed, tag));
        if let Some(p) = cfg.bit_flip {
            let layers = program.layers.len() * cfg.n_trot;
            shots = apply_bit_flip_noise(&shots, inst, p, layers, child_seed(cfg.seed, tag + 1));
        }
        let reduced = cvar_reduce(&shots, cfg.n_cvar)?;
        let polished = post_process(
            &reduced,
            inst,
            cfg.post_sweeps,
            child_seed(cfg.seed, tag + 2),
        );

        let top = polished
            .iter()
            .min_by(|a, b| a.energy.total_cmp(&b.energy))
            .expect("n_cvar >= 1");
        if best.as_ref().is_none_or(|b| top.energy < b.1) {
            best = Some((top.spins.clone(), top.energy));
        }
        let k = polished.len() as f64;
        iterations.push(IterationRecord {
            iteration: it,
            bias_field: field.hb.clone(),
            best_energy: best.as_ref().map(|b| b.1).unwrap_or(f64::INFINITY),
            iteration_best_energy: top.energy,
            shot_min_energy: shots.min_energy(),
            shot_mean_energy: shots.mean_energy(),
            cvar_mean_energy: reduced.iter().map(|m| m.energy).sum::<f64>() / k,
            distinct_outcomes: shots.outcomes.len(),
        });
        field.hb = update_bias(&polished, cfg.bias_sign)?;
    }

    let (best_spin, best_energy) = best.expect("at least one iteration ran");
    Ok(BfDcqoResult {
        best_spin,
        best_energy,
        pre_energy,
        iterations,
        modeled: runtime_model(cfg, RuntimeConstants::default()),
        measured_seconds: clock.elapsed().as_secs_f64(),
        gate_count: program.gate_count(),
        layer_count: program.layers.len(),
    })
}
