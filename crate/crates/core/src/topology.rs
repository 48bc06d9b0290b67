//! Device coupling maps and the SWAP-layer instance layout generator.
//!
//! Instances are built the way a fixed-depth circuit would execute them:
//! the coupling map is colored into sets of qubit-disjoint two-body edges and
//! three-body paths, a few of those sets are selected per layer, and between
//! layers the largest two-body set is applied as a SWAP layer, which moves
//! logical qubits and exposes new neighbor relations for the next layer.
//!
//! Coupling maps carry *logical* labels throughout: after a SWAP layer the
//! map is relabeled, so every interaction the generator selects is already
//! expressed in the labels of the original qubits.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hubo::{HuboInstance, Pair};
use crate::rng;
use crate::sampler::SamplerConfig;

/// Three-body path `(end, center, end)` with the two ends in ascending order.
pub type Path3 = (usize, usize, usize);

const HERON_JSON: &str = include_str!("../data/heron_r2.json");

/// Undirected simple graph over qubits `0..num_qubits`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CouplingMapFile", into = "CouplingMapFile")]
pub struct CouplingMap {
    num_qubits: usize,
    edges: BTreeSet<Pair>,
}

#[derive(Serialize, Deserialize)]
struct CouplingMapFile {
    num_qubits: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<CouplingMapFile> for CouplingMap {
    type Error = Error;

    fn try_from(file: CouplingMapFile) -> Result<Self> {
        CouplingMap::new(file.num_qubits, file.edges.iter().map(|e| (e[0], e[1])))
    }
}

impl From<CouplingMap> for CouplingMapFile {
    fn from(map: CouplingMap) -> Self {
        Self {
            num_qubits: map.num_qubits,
            edges: map.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl CouplingMap {
    pub fn new(num_qubits: usize, edges: impl IntoIterator<Item = Pair>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidConfig(format!("self-loop on qubit {a}")));
            }
            if a >= num_qubits || b >= num_qubits {
                return Err(Error::InvalidConfig(format!(
                    "edge ({a}, {b}) out of range for {num_qubits} qubits"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self {
            num_qubits,
            edges: set,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn edges(&self) -> &BTreeSet<Pair> {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_qubits];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_qubits];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// All length-two paths `(p, q, r)` with center `q` and `p < r`.
    pub fn paths3(&self) -> Vec<Path3> {
        let adj = self.adjacency();
        let mut out = Vec::new();
        for (q, nbrs) in adj.iter().enumerate() {
            for (x, &p) in nbrs.iter().enumerate() {
                for &r in &nbrs[x + 1..] {
                    out.push((p, q, r));
                }
            }
        }
        out.sort_unstable_by_key(|&(p, q, r)| {
            let mut k = [p, q, r];
            k.sort_unstable();
            (k, q)
        });
        out
    }

    /// Heavy-hexagonal patch of `rows × cols` hexagonal cells.
    ///
    /// Qubits sit on `rows + 1` horizontal lines; each cell spans five
    /// columns on the two lines it touches and is closed by two bridge qubits.
    /// Bridges of odd cell rows are offset by two columns, so neighboring
    /// rows interlock. Lines only extend as far as their cells, so every
    /// qubit lies on at least one hexagon. Numbering runs line 0, the bridges
    /// below it, line 1, and so on. A single cell is a 12-cycle.
    pub fn heavy_hex(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidConfig(
                "heavy-hex patch needs at least one row and column".into(),
            ));
        }
        let offset = |g: usize| 2 * (g % 2);
        let gap_range = |g: usize| (offset(g), offset(g) + 4 * cols);
        let mut line_ids: Vec<Vec<Option<usize>>> = Vec::with_capacity(rows + 1);
        let mut edges = Vec::new();
        let mut next = 0;
        let width = 4 * cols + 3;
        let mut bridge_ids: Vec<Vec<(usize, usize)>> = Vec::new();
        for line in 0..=rows {
            let mut lo = usize::MAX;
            let mut hi = 0;
            if line > 0 {
                let (a, b) = gap_range(line - 1);
                lo = lo.min(a);
                hi = hi.max(b);
            }
            if line < rows {
                let (a, b) = gap_range(line);
                lo = lo.min(a);
                hi = hi.max(b);
            }
            let mut ids = vec![None; width];
            for (col, id) in ids.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *id = Some(next);
                if col > lo {
                    edges.push((next - 1, next));
                }
                next += 1;
            }
            line_ids.push(ids);
            if line < rows {
                let bridges: Vec<(usize, usize)> = (0..=cols)
                    .map(|k| {
                        let id = next;
                        next += 1;
                        (offset(line) + 4 * k, id)
                    })
                    .collect();
                bridge_ids.push(bridges);
            }
        }
        for (g, bridges) in bridge_ids.iter().enumerate() {
            for &(col, id) in bridges {
                let top = line_ids[g][col].expect("bridge column on upper line");
                let bottom = line_ids[g + 1][col].expect("bridge column on lower line");
                edges.push((top, id));
                edges.push((id, bottom));
            }
        }
        Self::new(next, edges)
    }

    /// The 156-qubit heavy-hex device layout (eight lines of sixteen qubits
    /// joined by seven rows of four bridge qubits).
    pub fn heron() -> Self {
        serde_json::from_str(HERON_JSON).expect("bundled Heron layout is valid")
    }

    /// Connected heavy-hex patch with exactly `n` qubits: the first hexagon
    /// of a larger lattice, grown breadth-first. Relabeled in growth order.
    pub fn patch(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig(
                "patch needs at least one qubit".into(),
            ));
        }
        let mut side = 1;
        let base = loop {
            let lattice = Self::heavy_hex(side, side)?;
            if lattice.num_qubits >= n {
                break lattice;
            }
            side += 1;
        };
        let adj = base.adjacency();
        let cols = side;
        // first cell: columns 0..=4 of lines 0 and 1 plus its two bridges
        let line0_len = 4 * cols + 1;
        let mut first_cell: Vec<usize> = (0..5).collect();
        first_cell.extend([line0_len, line0_len + 1]);
        let line1_start = line0_len + cols + 1;
        first_cell.extend(line1_start..line1_start + 5);
        first_cell.sort_unstable();

        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; base.num_qubits];
        let mut queue = VecDeque::new();
        for &q in &first_cell {
            seen[q] = true;
            queue.push_back(q);
        }
        while let Some(q) = queue.pop_front() {
            order.push(q);
            if order.len() == n {
                break;
            }
            for &nb in &adj[q] {
                if !seen[nb] {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        base.induced(&order)
    }

    /// Subgraph on qubits `0..n`.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.num_qubits {
            return Err(Error::InvalidConfig(format!(
                "prefix of {n} qubits from a {}-qubit map",
                self.num_qubits
            )));
        }
        self.induced(&(0..n).collect::<Vec<_>>())
    }

    /// Subgraph on `qubits`, relabeled so `qubits[k]` becomes `k`.
    pub fn induced(&self, qubits: &[usize]) -> Result<Self> {
        let mut index = vec![usize::MAX; self.num_qubits];
        for (k, &q) in qubits.iter().enumerate() {
            index[q] = k;
        }
        let edges = self
            .edges
            .iter()
            .filter(|&&(a, b)| index[a] != usize::MAX && index[b] != usize::MAX)
            .map(|&(a, b)| (index[a], index[b]));
        Self::new(qubits.len(), edges)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

/// Interaction sets that can run in parallel, largest first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelSets {
    pub two_body: Vec<Vec<Pair>>,
    pub three_body: Vec<Vec<Path3>>,
}

impl ParallelSets {
    pub fn m2(&self) -> usize {
        self.two_body.len()
    }

    pub fn m3(&self) -> usize {
        self.three_body.len()
    }
}

pub(crate) fn greedy_sets<T: Copy>(
    items: &[T],
    num_qubits: usize,
    qubits: impl Fn(&T) -> Vec<usize>,
) -> Vec<Vec<T>> {
    let mut used: Vec<Vec<bool>> = Vec::new();
    let mut sets: Vec<Vec<T>> = Vec::new();
    for item in items {
        let qs = qubits(item);
        let slot = used.iter().position(|u| qs.iter().all(|&q| !u[q]));
        let slot = match slot {
            Some(s) => s,
            None => {
                used.push(vec![false; num_qubits]);
                sets.push(Vec::new());
                sets.len() - 1
            }
        };
        for &q in &qs {
            used[slot][q] = true;
        }
        sets[slot].push(*item);
    }
    // stable: equal sizes keep creation order
    sets.sort_by_key(|s| std::cmp::Reverse(s.len()));
    sets
}

/// Greedy coloring of edges and length-two paths into qubit-disjoint sets.
///
/// Items are visited in sorted order, or in a seeded shuffle of it when
/// `seed` is given; each goes into the first set it does not conflict with.
/// Sets are returned largest first, ties in creation order.
pub fn graph_coloring(map: &CouplingMap, seed: Option<u64>) -> ParallelSets {
    let mut edges: Vec<Pair> = map.edges.iter().copied().collect();
    let mut paths = map.paths3();
    if let Some(seed) = seed {
        edges.shuffle(&mut rng::stream(seed, 2));
        paths.shuffle(&mut rng::stream(seed, 3));
    }
    let n = map.num_qubits;
    ParallelSets {
        two_body: greedy_sets(&edges, n, |&(a, b)| vec![a, b]),
        three_body: greedy_sets(&paths, n, |&(p, q, r)| vec![p, q, r]),
    }
}

/// Relabels the map by exchanging the endpoints of every pair in `swaps`.
pub fn swap_register(map: &CouplingMap, swaps: &[Pair]) -> Result<CouplingMap> {
    let mut perm: Vec<usize> = (0..map.num_qubits).collect();
    let mut touched = vec![false; map.num_qubits];
    for &(a, b) in swaps {
        if !map.has_edge(a, b) {
            return Err(Error::InvalidMatching(format!("({a}, {b}) is not an edge")));
        }
        if touched[a] || touched[b] {
            return Err(Error::InvalidMatching(format!(
                "pair ({a}, {b}) overlaps another pair"
            )));
        }
        touched[a] = true;
        touched[b] = true;
        perm.swap(a, b);
    }
    CouplingMap::new(
        map.num_qubits,
        map.edges.iter().map(|&(a, b)| (perm[a], perm[b])),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutParams {
    /// SWAP layers applied between interaction layers; the layout has
    /// `swap_layers + 1` interaction layers.
    pub swap_layers: usize,
    pub s2q: usize,
    pub s3q: usize,
    /// Seeds the coloring order; `None` colors in sorted order.
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Selected interactions per layer, all in original qubit labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutPlan {
    pub coupling_map: CouplingMap,
    pub params: LayoutParams,
    /// `chosen_two_body[layer][set]` is a list of qubit-disjoint pairs.
    pub chosen_two_body: Vec<Vec<Vec<Pair>>>,
    pub chosen_three_body: Vec<Vec<Vec<Path3>>>,
    /// Pairs exchanged after each layer but the last.
    pub swap_layers: Vec<Vec<Pair>>,
    /// Number of available sets `(M2, M3)` per layer.
    pub available: Vec<(usize, usize)>,
}

impl LayoutPlan {
    pub fn num_layers(&self) -> usize {
        self.chosen_two_body.len()
    }

    pub fn all_pairs(&self) -> impl Iterator<Item = Pair> + '_ {
        self.chosen_two_body.iter().flatten().flatten().copied()
    }

    pub fn all_paths(&self) -> impl Iterator<Item = Path3> + '_ {
        self.chosen_three_body.iter().flatten().flatten().copied()
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

/// Runs the layered selection: per layer, color the current map, keep the
/// `s2q` largest two-body and `s3q` largest three-body sets, then (unless it
/// is the last layer) exchange the qubits of the largest two-body set.
/// Requests above the available number of sets are clamped with a warning.
pub fn generate_layout(c0: &CouplingMap, params: LayoutParams) -> Result<LayoutPlan> {
    let layers = params.swap_layers + 1;
    let mut map = c0.clone();
    let mut plan = LayoutPlan {
        coupling_map: c0.clone(),
        params,
        chosen_two_body: Vec::with_capacity(layers),
        chosen_three_body: Vec::with_capacity(layers),
        swap_layers: Vec::with_capacity(params.swap_layers),
        available: Vec::with_capacity(layers),
    };
    for layer in 0..layers {
        let seed = params.seed.map(|s| rng::child_seed(s, layer as u64));
        let sets = graph_coloring(&map, seed);
        let (m2, m3) = (sets.m2(), sets.m3());
        if params.s2q > m2 || params.s3q > m3 {
            warn!(
                "layer {layer}: requested (S2q, S3q) = ({}, {}) but only ({m2}, {m3}) sets exist; clamping",
                params.s2q, params.s3q
            );
        }
        plan.available.push((m2, m3));
        plan.chosen_two_body
            .push(sets.two_body[..params.s2q.min(m2)].to_vec());
        plan.chosen_three_body
            .push(sets.three_body[..params.s3q.min(m3)].to_vec());
        if layer + 1 < layers {
            let swap = sets.two_body.first().cloned().unwrap_or_default();
            map = swap_register(&map, &swap)?;
            plan.swap_layers.push(swap);
        }
    }
    Ok(plan)
}

/// Samples one coefficient per qubit, per selected pair and per selected
/// path. Order: linear terms by qubit, then pairs, then paths, each in layer
/// and set order. Interactions selected more than once accumulate.
pub fn instantiate(layout: &LayoutPlan, sampler: SamplerConfig, seed: u64) -> Result<HuboInstance> {
    let n = layout.coupling_map.num_qubits();
    let mut draw = sampler.build(seed)?;
    let mut inst = HuboInstance::new(n);
    for i in 0..n {
        inst.add_linear(i, draw.sample())?;
    }
    let mut dup_pairs = 0;
    for (a, b) in layout.all_pairs() {
        if inst.quadratic().contains_key(&(a.min(b), a.max(b))) {
            dup_pairs += 1;
        }
        inst.add_quadratic(a, b, draw.sample())?;
    }
    let mut dup_triples = 0;
    for (p, q, r) in layout.all_paths() {
        let mut key = [p, q, r];
        key.sort_unstable();
        if inst.cubic().contains_key(&(key[0], key[1], key[2])) {
            dup_triples += 1;
        }
        inst.add_cubic(p, q, r, draw.sample())?;
    }
    let md = &mut inst.metadata;
    md.distribution = Some(sampler.kind.name().to_string());
    md.alpha = sampler.kind.alpha();
    md.truncation = sampler.truncation;
    md.seed = Some(seed);
    md.s2q = Some(layout.params.s2q);
    md.s3q = Some(layout.params.s3q);
    md.swap_layers = Some(layout.params.swap_layers);
    md.duplicate_pairs = Some(dup_pairs);
    md.duplicate_triples = Some(dup_triples);
    md.layout = Some(serde_json::to_value(layout)?);
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> CouplingMap {
        CouplingMap::new(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn rejects_self_loops_and_out_of_range() {
        assert!(CouplingMap::new(2, [(1, 1)]).is_err());
        assert!(CouplingMap::new(2, [(0, 2)]).is_err());
    }

    #[test]
    fn single_cell_is_a_twelve_cycle() {
        let m = CouplingMap::heavy_hex(1, 1).unwrap();
        assert_eq!(m.num_qubits(), 12);
        assert_eq!(m.edges().len(), 12);
        assert!(m.degrees().iter().all(|&d| d == 2));
    }

    #[test]
    fn heavy_hex_degree_and_bipartite() {
        for (r, c) in [(1, 2), (2, 2), (3, 4), (7, 3)] {
            let m = CouplingMap::heavy_hex(r, c).unwrap();
            assert!(
                m.degrees().iter().all(|&d| (2..=3).contains(&d)),
                "({r},{c})"
            );
            // two-color by BFS
            let adj = m.adjacency();
            let mut color = vec![u8::MAX; m.num_qubits()];
            color[0] = 0;
            let mut queue = VecDeque::from([0]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if color[w] == u8::MAX {
                        color[w] = 1 - color[v];
                        queue.push_back(w);
                    } else {
                        assert_ne!(color[w], color[v]);
                    }
                }
            }
            // cycle space dimension equals the number of cells
            assert_eq!(m.edges().len() + 1 - m.num_qubits(), r * c);
        }
    }

    #[test]
    fn heron_preset() {
        let m = CouplingMap::heron();
        assert_eq!(m.num_qubits(), 156);
        assert_eq!(m.edges().len(), 176);
        assert!(m.degrees().iter().all(|&d| d <= 3));
    }

    #[test]
    fn patch_sizes() {
        for n in [1, 5, 12, 14, 20, 24] {
            let p = CouplingMap::patch(n).unwrap();
            assert_eq!(p.num_qubits(), n);
            assert!(p.degrees().iter().all(|&d| d <= 3));
        }
        assert_eq!(CouplingMap::patch(12).unwrap().edges().len(), 12);
    }

    #[test]
    fn coloring_of_a_path() {
        let sets = graph_coloring(&path3(), None);
        assert_eq!(sets.two_body, vec![vec![(0, 1)], vec![(1, 2)]]);
        assert_eq!(sets.three_body, vec![vec![(0, 1, 2)]]);
    }

    #[test]
    fn coloring_of_a_single_edge() {
        let sets = graph_coloring(&CouplingMap::new(2, [(0, 1)]).unwrap(), None);
        assert_eq!(sets.two_body, vec![vec![(0, 1)]]);
        assert!(sets.three_body.is_empty());
    }

    #[test]
    fn swap_relabels() {
        let m = swap_register(&path3(), &[(0, 1)]).unwrap();
        assert_eq!(
            m.edges().iter().copied().collect::<Vec<_>>(),
            vec![(0, 1), (0, 2)]
        );
        assert_eq!(swap_register(&path3(), &[]).unwrap(), path3());
    }

    #[test]
    fn swap_rejects_overlaps_and_non_edges() {
        assert!(matches!(
            swap_register(&path3(), &[(0, 1), (1, 2)]),
            Err(Error::InvalidMatching(_))
        ));
        assert!(matches!(
            swap_register(&path3(), &[(0, 2)]),
            Err(Error::InvalidMatching(_))
        ));
    }

    #[test]
    fn empty_selection_layout() {
        let params = LayoutParams {
            swap_layers: 0,
            s2q: 0,
            s3q: 0,
            seed: None,
        };
        let plan = generate_layout(&CouplingMap::heron(), params).unwrap();
        assert!(plan.swap_layers.is_empty());
        assert_eq!(plan.all_pairs().count(), 0);
        assert_eq!(plan.all_paths().count(), 0);
        let inst = instantiate(&plan, SamplerConfig::constant(1.0), 0).unwrap();
        assert_eq!(inst.term_count(), 156);
    }

    #[test]
    fn clamps_oversized_requests() {
        let params = LayoutParams {
            swap_layers: 0,
            s2q: 10,
            s3q: 10,
            seed: None,
        };
        let plan = generate_layout(&path3(), params).unwrap();
        assert_eq!(plan.chosen_two_body[0].len(), 2);
        assert_eq!(plan.chosen_three_body[0].len(), 1);
    }

    #[test]
    fn constant_sampler_gives_unit_coefficients() {
        let params = LayoutParams {
            swap_layers: 0,
            s2q: 1,
            s3q: 1,
            seed: None,
        };
        let plan = generate_layout(&CouplingMap::heavy_hex(1, 1).unwrap(), params).unwrap();
        let inst = instantiate(&plan, SamplerConfig::constant(1.0), 0).unwrap();
        assert!(inst.linear().iter().all(|&h| h == 1.0));
        assert!(inst.quadratic().values().all(|&j| j == 1.0));
        assert!(inst.cubic().values().all(|&k| k == 1.0));
    }

    #[test]
    fn coupling_map_json_round_trip() {
        let m = CouplingMap::heavy_hex(2, 1).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.starts_with(r#"{"num_qubits":"#));
        assert_eq!(serde_json::from_str::<CouplingMap>(&text).unwrap(), m);
        assert!(
            serde_json::from_str::<CouplingMap>(r#"{"num_qubits":2,"edges":[[0,0]]}"#).is_err()
        );
    }
}
