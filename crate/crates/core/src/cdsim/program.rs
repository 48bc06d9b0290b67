//! First-order counterdiabatic circuits laid out as parallel layers.
//!
//! With every gate written as `exp(−i·angle·P/2)`, one impulse-regime step
//! of the first-order gauge potential becomes
//!
//! ```text
//! Y_i                 angle γ · hx_i · h_i
//! Y_m Z_n, Z_m Y_n    angle γ · J_mn · hx_m, γ · J_mn · hx_n
//! Y_p Z_q Z_r, ...    angle γ · K_pqr · hx_(Y qubit)
//! ```
//!
//! where the shared scalar `γ` absorbs the schedule. Under a layout plan,
//! gates carry physical qubit indices and SWAP layers move logical qubits
//! between interaction layers; [`CdProgram::final_positions`] maps each
//! logical qubit to where it is measured.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::state::{Pauli, StateVector};
use crate::error::{Error, Result};
use crate::hubo::{HuboInstance, Pair, Triple};
use crate::topology::{greedy_sets, LayoutPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    SingleQubit,
    ThreeBody,
    TwoBody,
    Swap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Rotation {
        ops: Vec<(usize, Pauli)>,
        angle: f64,
    },
    Swap(usize, usize),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Rotation { ops, .. } => ops.iter().map(|o| o.0).collect(),
            Gate::Swap(a, b) => vec![*a, *b],
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::Rotation { ops, angle } => {
                let paulis: String = ops.iter().map(|o| o.1.symbol()).collect();
                let qubits: Vec<String> = ops.iter().map(|o| o.0.to_string()).collect();
                write!(f, "{paulis} {} {angle:e}", qubits.join(","))
            }
            Gate::Swap(a, b) => write!(f, "SWAP {a},{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub kind: LayerKind,
    pub gates: Vec<Gate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdProgram {
    pub num_qubits: usize,
    pub layers: Vec<Layer>,
    /// Physical position of every logical qubit after the last layer.
    pub final_positions: Vec<usize>,
}

impl CdProgram {
    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(|l| l.gates.len()).sum()
    }

    pub fn rotations(&self) -> impl Iterator<Item = (&[(usize, Pauli)], f64)> {
        self.layers
            .iter()
            .flat_map(|l| &l.gates)
            .filter_map(|g| match g {
                Gate::Rotation { ops, angle } => Some((ops.as_slice(), *angle)),
                Gate::Swap(..) => None,
            })
    }

    /// Text listing: a `# layer k kind` header per layer, then one gate per
    /// line as `PAULIS q0,q1,.. angle` or `SWAP a,b`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (k, layer) in self.layers.iter().enumerate() {
            let kind = serde_json::to_value(layer.kind).expect("plain enum");
            out.push_str(&format!(
                "# layer {k} {}\n",
                kind.as_str().unwrap_or_default()
            ));
            for g in &layer.gates {
                out.push_str(&format!("{g}\n"));
            }
        }
        out
    }

    /// Runs every layer on `state` in program order.
    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        if state.num_qubits() != self.num_qubits {
            return Err(Error::Dimension {
                expected: self.num_qubits,
                got: state.num_qubits(),
            });
        }
        for g in self.layers.iter().flat_map(|l| &l.gates) {
            match g {
                Gate::Rotation { ops, angle } => state.apply_rotation(ops, *angle)?,
                Gate::Swap(a, b) => state.apply_swap(*a, *b)?,
            }
        }
        Ok(())
    }

    /// Converts a measured physical bit pattern into logical labels.
    pub fn to_logical(&self, physical: u64) -> u64 {
        self.final_positions
            .iter()
            .enumerate()
            .fold(0, |acc, (q, &p)| acc | (physical >> p & 1) << q)
    }
}

fn sorted3(p: usize, q: usize, r: usize) -> Triple {
    let mut k = [p, q, r];
    k.sort_unstable();
    (k[0], k[1], k[2])
}

struct Emitter<'a> {
    inst: &'a HuboInstance,
    hx: &'a [f64],
    gamma: f64,
    layers: Vec<Layer>,
}

impl Emitter<'_> {
    fn single_layer(&mut self, pos: &[usize]) {
        let gates = (0..self.inst.num_vars())
            .map(|i| Gate::Rotation {
                ops: vec![(pos[i], Pauli::Y)],
                angle: self.gamma * self.hx[i] * self.inst.linear()[i],
            })
            .collect();
        self.layers.push(Layer {
            kind: LayerKind::SingleQubit,
            gates,
        });
    }

    /// Three sub-layers (Y on each qubit in turn) for a set of disjoint triples.
    fn triple_layers(&mut self, triples: &[Triple], pos: &[usize]) {
        if triples.is_empty() {
            return;
        }
        for y in 0..3 {
            let gates = triples
                .iter()
                .map(|&(p, q, r)| {
                    let k = self
                        .inst
                        .cubic()
                        .get(&sorted3(p, q, r))
                        .copied()
                        .unwrap_or(0.0);
                    let qs = [p, q, r];
                    let ops = qs
                        .iter()
                        .enumerate()
                        .map(|(slot, &l)| (pos[l], if slot == y { Pauli::Y } else { Pauli::Z }))
                        .collect();
                    Gate::Rotation {
                        ops,
                        angle: self.gamma * k * self.hx[qs[y]],
                    }
                })
                .collect();
            self.layers.push(Layer {
                kind: LayerKind::ThreeBody,
                gates,
            });
        }
    }

    fn pair_layers(&mut self, pairs: &[Pair], pos: &[usize]) {
        if pairs.is_empty() {
            return;
        }
        for y in 0..2 {
            let gates = pairs
                .iter()
                .map(|&(m, n)| {
                    let j = self
                        .inst
                        .quadratic()
                        .get(&(m.min(n), m.max(n)))
                        .copied()
                        .unwrap_or(0.0);
                    let (ym, yn) = if y == 0 {
                        (Pauli::Y, Pauli::Z)
                    } else {
                        (Pauli::Z, Pauli::Y)
                    };
                    Gate::Rotation {
                        ops: vec![(pos[m], ym), (pos[n], yn)],
                        angle: self.gamma * j * self.hx[if y == 0 { m } else { n }],
                    }
                })
                .collect();
            self.layers.push(Layer {
                kind: LayerKind::TwoBody,
                gates,
            });
        }
    }
}

/// Builds the circuit for one Trotter step. With a layout, hyperedges are
/// emitted at the first layer that selects them, in physical labels; every
/// nonzero instance term must be covered. Without one, gates stay in
/// logical labels and are packed greedily into qubit-disjoint layers.
pub fn build_cd_program(
    inst: &HuboInstance,
    hx: &[f64],
    layout: Option<&LayoutPlan>,
    gamma: f64,
) -> Result<CdProgram> {
    let n = inst.num_vars();
    if hx.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: hx.len(),
        });
    }
    let mut em = Emitter {
        inst,
        hx,
        gamma,
        layers: Vec::new(),
    };
    let mut pos: Vec<usize> = (0..n).collect();
    match layout {
        None => {
            em.single_layer(&pos);
            let triples: Vec<Triple> = inst.cubic().keys().copied().collect();
            for set in greedy_sets(&triples, n, |&(p, q, r)| vec![p, q, r]) {
                em.triple_layers(&set, &pos);
            }
            let pairs: Vec<Pair> = inst.quadratic().keys().copied().collect();
            for set in greedy_sets(&pairs, n, |&(a, b)| vec![a, b]) {
                em.pair_layers(&set, &pos);
            }
        }
        Some(plan) => {
            let map = &plan.coupling_map;
            if map.num_qubits() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: map.num_qubits(),
                });
            }
            let mut seen_pairs: BTreeSet<Pair> = BTreeSet::new();
            let mut seen_triples: BTreeSet<Triple> = BTreeSet::new();
            for layer in 0..plan.num_layers() {
                if layer == 0 {
                    em.single_layer(&pos);
                }
                for set in &plan.chosen_three_body[layer] {
                    let mut fresh = Vec::new();
                    for &(p, q, r) in set {
                        if !(map.has_edge(pos[p], pos[q]) && map.has_edge(pos[q], pos[r])) {
                            return Err(Error::Routing(vec![p, q, r]));
                        }
                        if seen_triples.insert(sorted3(p, q, r)) {
                            fresh.push((p, q, r));
                        }
                    }
                    em.triple_layers(&fresh, &pos);
                }
                for set in &plan.chosen_two_body[layer] {
                    let mut fresh = Vec::new();
                    for &(m, k) in set {
                        if !map.has_edge(pos[m], pos[k]) {
                            return Err(Error::Routing(vec![m, k]));
                        }
                        if seen_pairs.insert((m.min(k), m.max(k))) {
                            fresh.push((m, k));
                        }
                    }
                    em.pair_layers(&fresh, &pos);
                }
                if let Some(swaps) = plan.swap_layers.get(layer) {
                    let mut gates = Vec::with_capacity(swaps.len());
                    for &(a, b) in swaps {
                        if !map.has_edge(pos[a], pos[b]) {
                            return Err(Error::Routing(vec![a, b]));
                        }
                        gates.push(Gate::Swap(pos[a], pos[b]));
                        pos.swap(a, b);
                    }
                    em.layers.push(Layer {
                        kind: LayerKind::Swap,
                        gates,
                    });
                }
            }
            if let Some((&(m, k), _)) = inst
                .quadratic()
                .iter()
                .find(|(key, &v)| v != 0.0 && !seen_pairs.contains(key))
            {
                return Err(Error::Routing(vec![m, k]));
            }
            if let Some((&(p, q, r), _)) = inst
                .cubic()
                .iter()
                .find(|(key, &v)| v != 0.0 && !seen_triples.contains(key))
            {
                return Err(Error::Routing(vec![p, q, r]));
            }
        }
    }
    Ok(CdProgram {
        num_qubits: n,
        layers: em.layers,
        final_positions: pos,
    })
}

/// Per-layer disjointness check used by tests and the CLI.
pub fn layers_are_disjoint(p: &CdProgram) -> bool {
    p.layers.iter().all(|l| {
        let mut used = BTreeSet::new();
        l.gates
            .iter()
            .flat_map(Gate::qubits)
            .all(|q| used.insert(q))
    })
}
