//! HUBO instances in spin and binary form.
//!
//! An instance is a cubic polynomial over spins `s_i ∈ {+1, -1}`:
//!
//! ```text
//! E(s) = Σ h_i s_i + Σ J_mn s_m s_n + Σ K_pqr s_p s_q s_r + offset
//! ```
//!
//! Binary variables relate to spins by `x_i = (1 - s_i) / 2`, so `s = +1`
//! is `x = 0` and bit value 1 always means spin −1.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Pair = (usize, usize);
pub type Triple = (usize, usize, usize);

/// Default cap on exhaustive enumeration.
pub const BRUTE_FORCE_CAP: usize = 24;

/// A spin configuration, one `±1` entry per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidInstance(format!(
                "spin value {bad} is not ±1"
            )));
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Decodes the low `n` bits of `bits`; bit `i` set means spin `i` is −1.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        Self(
            (0..n)
                .map(|i| if bits >> i & 1 == 1 { -1 } else { 1 })
                .collect(),
        )
    }

    pub fn to_bits(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &s)| if s < 0 { acc | 1 << i } else { acc })
    }

    /// Parses a bitstring written qubit 0 first, e.g. `"0110"`.
    pub fn from_bitstring(text: &str) -> Result<Self> {
        let spins = text
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(1),
                '1' => Ok(-1),
                other => Err(Error::Parse {
                    line: 1,
                    msg: format!("unexpected character {other:?} in bitstring"),
                }),
            })
            .collect::<Result<Vec<i8>>>()?;
        Ok(Self(spins))
    }

    pub fn to_bitstring(&self) -> String {
        self.0
            .iter()
            .map(|&s| if s < 0 { '1' } else { '0' })
            .collect()
    }

    /// Binary values `x_i = (1 - s_i) / 2`.
    pub fn to_binary(&self) -> Vec<u8> {
        self.0.iter().map(|&s| u8::from(s < 0)).collect()
    }

    pub fn from_binary(x: &[u8]) -> Self {
        Self(x.iter().map(|&b| if b != 0 { -1 } else { 1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| f64::from(s)).collect()
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

/// Where an instance came from. Every field is optional so hand-written
/// instance files stay valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Metadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distribution: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s2q: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s3q: Option<usize>,
    /// Number of SWAP layers in the generating layout.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub swap_layers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topology: Option<String>,
    /// Selected pairs/triples that coincided with an earlier selection and
    /// were accumulated into it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duplicate_pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duplicate_triples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout: Option<serde_json::Value>,
}

/// A cubic spin Hamiltonian with canonical (sorted, distinct) term keys.
#[derive(Debug, Clone, PartialEq)]
pub struct HuboInstance {
    num_vars: usize,
    linear: Vec<f64>,
    quadratic: BTreeMap<Pair, f64>,
    cubic: BTreeMap<Triple, f64>,
    pub offset: f64,
    pub metadata: Metadata,
}

fn sort_pair(i: usize, j: usize) -> Pair {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

fn sort_triple(p: usize, q: usize, r: usize) -> Triple {
    let mut v = [p, q, r];
    v.sort_unstable();
    (v[0], v[1], v[2])
}

impl HuboInstance {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            linear: vec![0.0; num_vars],
            quadratic: BTreeMap::new(),
            cubic: BTreeMap::new(),
            offset: 0.0,
            metadata: Metadata::default(),
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.num_vars {
            return Err(Error::InvalidInstance(format!(
                "index {i} out of range for {} variables",
                self.num_vars
            )));
        }
        Ok(())
    }

    fn check_coefficient(value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::InvalidInstance(format!(
                "non-finite coefficient {value}"
            )));
        }
        Ok(())
    }

    pub fn add_linear(&mut self, i: usize, value: f64) -> Result<()> {
        self.check_index(i)?;
        Self::check_coefficient(value)?;
        self.linear[i] += value;
        Ok(())
    }

    /// Adds `value · s_i s_j`. Repeated keys accumulate.
    pub fn add_quadratic(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        self.check_index(i)?;
        self.check_index(j)?;
        Self::check_coefficient(value)?;
        if i == j {
            return Err(Error::InvalidInstance(format!(
                "pair ({i}, {j}) repeats an index"
            )));
        }
        *self.quadratic.entry(sort_pair(i, j)).or_insert(0.0) += value;
        Ok(())
    }

    /// Adds `value · s_p s_q s_r`. Repeated keys accumulate.
    pub fn add_cubic(&mut self, p: usize, q: usize, r: usize, value: f64) -> Result<()> {
        for i in [p, q, r] {
            self.check_index(i)?;
        }
        Self::check_coefficient(value)?;
        let key = sort_triple(p, q, r);
        if key.0 == key.1 || key.1 == key.2 {
            return Err(Error::InvalidInstance(format!(
                "triple ({p}, {q}, {r}) repeats an index"
            )));
        }
        *self.cubic.entry(key).or_insert(0.0) += value;
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<Pair, f64> {
        &self.quadratic
    }

    pub fn cubic(&self) -> &BTreeMap<Triple, f64> {
        &self.cubic
    }

    /// Number of one-, two- and three-body terms with a stored key.
    pub fn term_count(&self) -> usize {
        self.linear.iter().filter(|&&h| h != 0.0).count() + self.quadratic.len() + self.cubic.len()
    }

    pub fn is_all_zero(&self) -> bool {
        self.linear.iter().all(|&h| h == 0.0)
            && self.quadratic.values().all(|&j| j == 0.0)
            && self.cubic.values().all(|&k| k == 0.0)
    }

    /// Largest absolute coefficient, used for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.linear
            .iter()
            .chain(self.quadratic.values())
            .chain(self.cubic.values())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn check_len(&self, s: &SpinConfig) -> Result<()> {
        if s.len() != self.num_vars {
            return Err(Error::Dimension {
                expected: self.num_vars,
                got: s.len(),
            });
        }
        Ok(())
    }

    pub fn energy(&self, s: &SpinConfig) -> Result<f64> {
        self.check_len(s)?;
        Ok(self.energy_f64(&s.as_f64()))
    }

    /// Energy of a spin vector given as `±1.0` values.
    pub fn energy_f64(&self, s: &[f64]) -> f64 {
        let mut e = self.offset;
        for (h, si) in self.linear.iter().zip(s) {
            e += h * si;
        }
        for (&(m, n), j) in &self.quadratic {
            e += j * s[m] * s[n];
        }
        for (&(p, q, r), k) in &self.cubic {
            e += k * s[p] * s[q] * s[r];
        }
        e
    }

    /// Energy of the configuration encoded by `bits` (bit `i` set ⇔ `s_i = −1`).
    pub fn energy_bits(&self, bits: u64) -> f64 {
        let spin = |i: usize| if bits >> i & 1 == 1 { -1.0 } else { 1.0 };
        let mut e = self.offset;
        for (i, h) in self.linear.iter().enumerate() {
            e += h * spin(i);
        }
        for (&(m, n), j) in &self.quadratic {
            e += j * spin(m) * spin(n);
        }
        for (&(p, q, r), k) in &self.cubic {
            e += k * spin(p) * spin(q) * spin(r);
        }
        e
    }

    /// Energy change from flipping spin `i`.
    pub fn flip_delta(&self, s: &SpinConfig, i: usize) -> Result<f64> {
        self.check_len(s)?;
        self.check_index(i)?;
        let nb = Neighborhoods::new(self);
        Ok(nb.flip_delta(&s.as_f64(), i))
    }

    pub fn to_binary(&self) -> BinaryHubo {
        BinaryHubo::from_spin(self)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceFile::from(self))?)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json_string()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// On-disk instance document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub num_vars: usize,
    #[serde(default)]
    pub linear: Vec<(usize, f64)>,
    #[serde(default)]
    pub quadratic: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub cubic: Vec<(usize, usize, usize, f64)>,
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub metadata: Metadata,
}

impl From<&HuboInstance> for InstanceFile {
    fn from(inst: &HuboInstance) -> Self {
        Self {
            num_vars: inst.num_vars,
            linear: inst
                .linear
                .iter()
                .copied()
                .enumerate()
                .filter(|(_, h)| *h != 0.0)
                .collect(),
            quadratic: inst
                .quadratic
                .iter()
                .map(|(&(m, n), &j)| (m, n, j))
                .collect(),
            cubic: inst
                .cubic
                .iter()
                .map(|(&(p, q, r), &k)| (p, q, r, k))
                .collect(),
            offset: inst.offset,
            metadata: inst.metadata.clone(),
        }
    }
}

impl TryFrom<InstanceFile> for HuboInstance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        if file.num_vars == 0 {
            return Err(Error::InvalidInstance("num_vars must be at least 1".into()));
        }
        let mut inst = HuboInstance::new(file.num_vars);
        for (i, h) in file.linear {
            inst.add_linear(i, h)?;
        }
        for (m, n, j) in file.quadratic {
            inst.add_quadratic(m, n, j)?;
        }
        for (p, q, r, k) in file.cubic {
            inst.add_cubic(p, q, r, k)?;
        }
        HuboInstance::check_coefficient(file.offset)?;
        inst.offset = file.offset;
        inst.metadata = file.metadata;
        Ok(inst)
    }
}

/// Per-variable adjacency in flat arrays, for local-field evaluation in the
/// annealing and enumeration kernels.
#[derive(Debug, Clone)]
pub struct Neighborhoods {
    linear: Vec<f64>,
    pair_start: Vec<u32>,
    pairs: Vec<(u32, f64)>,
    triple_start: Vec<u32>,
    triples: Vec<(u32, u32, f64)>,
}

impl Neighborhoods {
    pub fn new(inst: &HuboInstance) -> Self {
        let n = inst.num_vars;
        let mut pair_lists: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (&(m, n2), &j) in &inst.quadratic {
            pair_lists[m].push((n2 as u32, j));
            pair_lists[n2].push((m as u32, j));
        }
        let mut triple_lists: Vec<Vec<(u32, u32, f64)>> = vec![Vec::new(); n];
        for (&(p, q, r), &k) in &inst.cubic {
            triple_lists[p].push((q as u32, r as u32, k));
            triple_lists[q].push((p as u32, r as u32, k));
            triple_lists[r].push((p as u32, q as u32, k));
        }
        let mut pair_start = Vec::with_capacity(n + 1);
        let mut pairs = Vec::new();
        for list in pair_lists {
            pair_start.push(pairs.len() as u32);
            pairs.extend(list);
        }
        pair_start.push(pairs.len() as u32);
        let mut triple_start = Vec::with_capacity(n + 1);
        let mut triples = Vec::new();
        for list in triple_lists {
            triple_start.push(triples.len() as u32);
            triples.extend(list);
        }
        triple_start.push(triples.len() as u32);
        Self {
            linear: inst.linear.clone(),
            pair_start,
            pairs,
            triple_start,
            triples,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    /// `∂E/∂s_i`: the coefficient multiplying `s_i` given the other spins.
    #[inline]
    pub fn local_field(&self, s: &[f64], i: usize) -> f64 {
        let mut f = self.linear[i];
        let (a, b) = (self.pair_start[i] as usize, self.pair_start[i + 1] as usize);
        for &(n, j) in &self.pairs[a..b] {
            f += j * s[n as usize];
        }
        let (a, b) = (
            self.triple_start[i] as usize,
            self.triple_start[i + 1] as usize,
        );
        for &(q, r, k) in &self.triples[a..b] {
            f += k * s[q as usize] * s[r as usize];
        }
        f
    }

    /// Energy change from flipping spin `i`: `−2 s_i · local_field`.
    #[inline]
    pub fn flip_delta(&self, s: &[f64], i: usize) -> f64 {
        -2.0 * s[i] * self.local_field(s, i)
    }

    /// Upper bound on `|ΔE|` for flipping spin `i` in any configuration.
    pub fn max_flip_bound(&self, i: usize) -> f64 {
        let (a, b) = (self.pair_start[i] as usize, self.pair_start[i + 1] as usize);
        let pairs: f64 = self.pairs[a..b].iter().map(|p| p.1.abs()).sum();
        let (a, b) = (
            self.triple_start[i] as usize,
            self.triple_start[i + 1] as usize,
        );
        let triples: f64 = self.triples[a..b].iter().map(|t| t.2.abs()).sum();
        2.0 * (self.linear[i].abs() + pairs + triples)
    }
}

/// Cubic polynomial over binary variables `x_i ∈ {0, 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryHubo {
    pub num_vars: usize,
    pub linear: Vec<f64>,
    pub quadratic: BTreeMap<Pair, f64>,
    pub cubic: BTreeMap<Triple, f64>,
    pub offset: f64,
}

impl BinaryHubo {
    /// Substitutes `s = 1 − 2x` term by term. Keys whose coefficient cancels
    /// to exactly zero are dropped.
    pub fn from_spin(inst: &HuboInstance) -> Self {
        let mut linear = vec![0.0; inst.num_vars];
        let mut quadratic: BTreeMap<Pair, f64> = BTreeMap::new();
        let mut cubic: BTreeMap<Triple, f64> = BTreeMap::new();
        let mut offset = inst.offset;

        for (i, &h) in inst.linear.iter().enumerate() {
            offset += h;
            linear[i] -= 2.0 * h;
        }
        for (&(m, n), &j) in &inst.quadratic {
            offset += j;
            linear[m] -= 2.0 * j;
            linear[n] -= 2.0 * j;
            *quadratic.entry((m, n)).or_insert(0.0) += 4.0 * j;
        }
        for (&(p, q, r), &k) in &inst.cubic {
            offset += k;
            linear[p] -= 2.0 * k;
            linear[q] -= 2.0 * k;
            linear[r] -= 2.0 * k;
            *quadratic.entry((p, q)).or_insert(0.0) += 4.0 * k;
            *quadratic.entry((p, r)).or_insert(0.0) += 4.0 * k;
            *quadratic.entry((q, r)).or_insert(0.0) += 4.0 * k;
            *cubic.entry((p, q, r)).or_insert(0.0) -= 8.0 * k;
        }
        quadratic.retain(|_, v| *v != 0.0);
        cubic.retain(|_, v| *v != 0.0);
        Self {
            num_vars: inst.num_vars,
            linear,
            quadratic,
            cubic,
            offset,
        }
    }

    /// Substitutes `x = (1 − s) / 2` back into spin form.
    pub fn to_spin(&self) -> HuboInstance {
        let mut inst = HuboInstance::new(self.num_vars);
        let mut offset = self.offset;
        for (i, &t) in self.linear.iter().enumerate() {
            offset += t / 2.0;
            inst.linear[i] -= t / 2.0;
        }
        for (&(i, j), &t) in &self.quadratic {
            let c = t / 4.0;
            offset += c;
            inst.linear[i] -= c;
            inst.linear[j] -= c;
            *inst.quadratic.entry((i, j)).or_insert(0.0) += c;
        }
        for (&(i, j, k), &t) in &self.cubic {
            let c = t / 8.0;
            offset += c;
            inst.linear[i] -= c;
            inst.linear[j] -= c;
            inst.linear[k] -= c;
            *inst.quadratic.entry((i, j)).or_insert(0.0) += c;
            *inst.quadratic.entry((i, k)).or_insert(0.0) += c;
            *inst.quadratic.entry((j, k)).or_insert(0.0) += c;
            *inst.cubic.entry((i, j, k)).or_insert(0.0) -= c;
        }
        inst.offset = offset;
        inst
    }

    /// `F(x)`.
    pub fn evaluate(&self, x: &[u8]) -> Result<f64> {
        if x.len() != self.num_vars {
            return Err(Error::Dimension {
                expected: self.num_vars,
                got: x.len(),
            });
        }
        let xf = |i: usize| f64::from(x[i]);
        let mut f = self.offset;
        for (i, t) in self.linear.iter().enumerate() {
            f += t * xf(i);
        }
        for (&(i, j), t) in &self.quadratic {
            f += t * xf(i) * xf(j);
        }
        for (&(i, j, k), t) in &self.cubic {
            f += t * xf(i) * xf(j) * xf(k);
        }
        Ok(f)
    }
}

/// Key that orders configurations lexicographically by bitstring, bit 0 first.
fn lex_key(bits: u64, n: usize) -> u64 {
    if n == 0 {
        0
    } else {
        bits.reverse_bits() >> (64 - n)
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    energy: f64,
    bits: u64,
}

impl Candidate {
    /// Lower energy wins; near-equal energies fall back to the
    /// lexicographically smaller bitstring.
    fn better_than(&self, other: &Candidate, n: usize, tol: f64) -> bool {
        if self.energy < other.energy - tol {
            true
        } else if self.energy > other.energy + tol {
            false
        } else {
            lex_key(self.bits, n) < lex_key(other.bits, n)
        }
    }
}

/// Exhaustive minimum over all `2^N` configurations.
///
/// Enumeration walks a Gray code inside blocks that run in parallel; block
/// results are reduced in block order, so the answer does not depend on the
/// thread count. Degenerate minima resolve to the lexicographically smallest
/// bitstring (bit 0 first).
pub fn brute_force_ground_state(inst: &HuboInstance, cap: usize) -> Result<(SpinConfig, f64)> {
    let n = inst.num_vars;
    if n > cap || n > 40 {
        return Err(Error::Capacity {
            what: "exhaustive search",
            size: n,
            cap: cap.min(40),
        });
    }
    let nb = Neighborhoods::new(inst);
    let tol = 1e-9 * inst.scale().max(1.0);
    let block_bits = n.saturating_sub(12).min(10);
    let low_bits = n - block_bits;

    let best = (0u64..1 << block_bits)
        .into_par_iter()
        .map(|block| {
            let start = block << low_bits;
            let mut s: Vec<f64> = (0..n)
                .map(|i| if start >> i & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            let mut bits = start;
            let mut energy = inst.energy_f64(&s);
            let mut best = Candidate { energy, bits };
            for g in 1u64..1 << low_bits {
                let i = g.trailing_zeros() as usize;
                energy += nb.flip_delta(&s, i);
                s[i] = -s[i];
                bits ^= 1 << i;
                let cand = Candidate { energy, bits };
                if cand.better_than(&best, n, tol) {
                    best = cand;
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|a, b| if b.better_than(&a, n, tol) { b } else { a })
        .expect("at least one block");

    let spins = SpinConfig::from_bits(best.bits, n);
    let energy = inst.energy(&spins)?;
    Ok((spins, energy))
}
