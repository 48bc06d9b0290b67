//! Bias-field digitized counterdiabatic optimization on a statevector.
//!
//! The mixer is `H_m = Σ hx_i X_i + Σ hb_i Z_i`. Each iteration prepares its
//! product ground state, applies one counterdiabatic step, samples shots,
//! keeps the lowest-energy tail (CVaR), polishes it with greedy descent and
//! feeds `hb_i = sign · ⟨s_i⟩` of the polished tail into the next mixer.

mod bfdcqo;
mod program;
mod state;

use std::collections::BTreeMap;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bfdcqo::{
    run_bfdcqo, runtime_model, BfDcqoConfig, BfDcqoResult, IterationRecord, RuntimeConstants,
    RuntimeModel, DEFAULT_GAMMA, SECONDS_PER_SHOT,
};
pub use program::{build_cd_program, layers_are_disjoint, CdProgram, Gate, Layer, LayerKind};
pub use state::{Pauli, StateVector, SIM_CAP};

use crate::anneal::descend;
use crate::error::{Error, Result};
use crate::hubo::{HuboInstance, Neighborhoods, SpinConfig};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixerField {
    pub hx: Vec<f64>,
    pub hb: Vec<f64>,
}

impl MixerField {
    pub fn new(hx: Vec<f64>, hb: Vec<f64>) -> Result<Self> {
        if hx.len() != hb.len() {
            return Err(Error::Dimension {
                expected: hx.len(),
                got: hb.len(),
            });
        }
        Ok(Self { hx, hb })
    }

    pub fn uniform(n: usize, hx: f64) -> Self {
        Self {
            hx: vec![hx; n],
            hb: vec![0.0; n],
        }
    }

    /// `⟨H_m⟩` in its ground state: `−Σ √(hx² + hb²)`.
    pub fn ground_energy(&self) -> f64 {
        -self
            .hx
            .iter()
            .zip(&self.hb)
            .map(|(x, b)| x.hypot(*b))
            .sum::<f64>()
    }
}

/// Per-qubit `θ` with `Ry(θ)|0⟩` the ground state of `hx X + hb Z`, where
/// `Ry(θ) = exp(−iθY/2)`: the Bloch vector `(sin θ, 0, cos θ)` points along
/// `−(hx, 0, hb)`.
pub fn prep_angles(f: &MixerField) -> Result<Vec<f64>> {
    f.hx.iter()
        .zip(&f.hb)
        .enumerate()
        .map(|(q, (&x, &b))| {
            if x == 0.0 && b == 0.0 {
                Err(Error::DegenerateMixer { qubit: q })
            } else {
                Ok((-x).atan2(-b))
            }
        })
        .collect()
}

/// Measured outcomes in logical labels with cached energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSet {
    pub num_qubits: usize,
    /// `(bits, multiplicity)` in increasing bit order; bit `i` is qubit `i`.
    pub outcomes: Vec<(u64, usize)>,
    pub energies: Vec<f64>,
}

impl ShotSet {
    pub fn from_counts(inst: &HuboInstance, counts: BTreeMap<u64, usize>) -> Self {
        let outcomes: Vec<(u64, usize)> = counts.into_iter().filter(|c| c.1 > 0).collect();
        let energies = outcomes.iter().map(|&(b, _)| inst.energy_bits(b)).collect();
        Self {
            num_qubits: inst.num_vars(),
            outcomes,
            energies,
        }
    }

    pub fn total(&self) -> usize {
        self.outcomes.iter().map(|o| o.1).sum()
    }

    pub fn mean_energy(&self) -> f64 {
        let total = self.total() as f64;
        self.outcomes
            .iter()
            .zip(&self.energies)
            .map(|(o, e)| o.1 as f64 * e)
            .sum::<f64>()
            / total
    }

    pub fn min_energy(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Samples `n_shots` outcomes of the program's output state and relabels
/// them to logical qubits.
pub fn sample_shots(
    sv: &StateVector,
    program: &CdProgram,
    inst: &HuboInstance,
    n_shots: usize,
    seed: u64,
) -> ShotSet {
    let mut counts = BTreeMap::new();
    for (phys, c) in sv.sample(n_shots, seed) {
        *counts.entry(program.to_logical(phys)).or_insert(0) += c;
    }
    ShotSet::from_counts(inst, counts)
}

/// Flips each measured bit independently with `p_eff = (1 − (1 − 2p)^L) / 2`,
/// the net flip probability of `L` layers of independent flips with `p`.
pub fn apply_bit_flip_noise(
    shots: &ShotSet,
    inst: &HuboInstance,
    p: f64,
    layers: usize,
    seed: u64,
) -> ShotSet {
    let p_eff = (1.0 - (1.0 - 2.0 * p).powi(layers as i32)) / 2.0;
    let mut r = rng::stream(seed, 0xF1);
    let mut counts = BTreeMap::new();
    for &(bits, mult) in &shots.outcomes {
        for _ in 0..mult {
            let mut b = bits;
            for q in 0..shots.num_qubits {
                if r.random::<f64>() < p_eff {
                    b ^= 1 << q;
                }
            }
            *counts.entry(b).or_insert(0) += 1;
        }
    }
    ShotSet::from_counts(inst, counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub spins: SpinConfig,
    pub energy: f64,
}

/// The `n_cvar` lowest-energy shots, multiplicity expanded, ties broken by
/// the bitstring read from qubit 0.
pub fn cvar_reduce(shots: &ShotSet, n_cvar: usize) -> Result<Vec<Member>> {
    let total = shots.total();
    if n_cvar > total {
        return Err(Error::InvalidConfig(format!(
            "n_cvar {n_cvar} exceeds {total} shots"
        )));
    }
    let mut order: Vec<usize> = (0..shots.outcomes.len()).collect();
    order.sort_by(|&a, &b| {
        shots.energies[a].total_cmp(&shots.energies[b]).then(
            shots.outcomes[a]
                .0
                .reverse_bits()
                .cmp(&shots.outcomes[b].0.reverse_bits()),
        )
    });
    let mut out = Vec::with_capacity(n_cvar);
    for k in order {
        let (bits, mult) = shots.outcomes[k];
        let take = mult.min(n_cvar - out.len());
        let spins = SpinConfig::from_bits(bits, shots.num_qubits);
        out.extend(std::iter::repeat_n(
            Member {
                spins,
                energy: shots.energies[k],
            },
            take,
        ));
        if out.len() == n_cvar {
            break;
        }
    }
    Ok(out)
}

/// `hb_i = sign · mean(s_i)` over the ensemble.
pub fn update_bias(ensemble: &[Member], sign: f64) -> Result<Vec<f64>> {
    let first = ensemble
        .first()
        .ok_or_else(|| Error::InvalidConfig("empty ensemble".into()))?;
    let n = first.spins.len();
    let mut sums = vec![0.0; n];
    for m in ensemble {
        for (acc, &s) in sums.iter_mut().zip(m.spins.spins()) {
            *acc += s as f64;
        }
    }
    let k = ensemble.len() as f64;
    Ok(sums.into_iter().map(|v| sign * v / k).collect())
}

/// Greedy descent from every member, each with its own random stream.
pub fn post_process(
    ensemble: &[Member],
    inst: &HuboInstance,
    n_sweep: usize,
    seed: u64,
) -> Vec<Member> {
    let nb = Neighborhoods::new(inst);
    ensemble
        .par_iter()
        .enumerate()
        .map(|(k, m)| {
            let (spins, energy) =
                descend(inst, &nb, &m.spins, n_sweep, rng::stream(seed, k as u64));
            if energy < m.energy {
                Member { spins, energy }
            } else {
                m.clone()
            }
        })
        .collect()
}
