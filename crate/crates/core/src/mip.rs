//! Linearization of binary HUBOs into 0/1 MIPs and solver-file plumbing.
//!
//! A product `y = u·v` of binaries is replaced by a binary `y` with
//! `y ≤ u`, `y ≤ v`, `y ≥ u + v − 1`. Cubic products go in two stages,
//! first the two lowest indices, then the third.
//!
//! Variable names in exported files:
//!
//! | name          | meaning                                   |
//! |---------------|-------------------------------------------|
//! | `x{i}`        | original variable                         |
//! | `a{i}_{j}`    | `x_i x_j`                                 |
//! | `a{i}_{j}_{k}`| `x_i x_j`, private to the cubic `(i,j,k)` |
//! | `b{i}_{j}_{k}`| `x_i x_j x_k`                             |
//!
//! Incumbent traces are CSV `seconds,objective` lines with an optional
//! final line `optimal`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hubo::{BinaryHubo, HuboInstance, Pair, SpinConfig, Triple};

/// How the first stage of a cubic linearization is auxiliarized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxPolicy {
    /// Each cubic term gets its own pair auxiliary: exactly `N + Q + 2C`
    /// variables and `3Q + 6C` constraints.
    #[default]
    Independent,
    /// A cubic term reuses the quadratic auxiliary `a{i}_{j}` of its two
    /// lowest indices, creating it if the pair has no quadratic term.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Original(usize),
    Pair(Pair),
    CubicPair(Triple),
    Triple(Triple),
}

impl VarKind {
    pub fn name(&self) -> String {
        match *self {
            VarKind::Original(i) => format!("x{i}"),
            VarKind::Pair((i, j)) => format!("a{i}_{j}"),
            VarKind::CubicPair((i, j, k)) => format!("a{i}_{j}_{k}"),
            VarKind::Triple((i, j, k)) => format!("b{i}_{j}_{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
}

/// `Σ coef · var (≤|≥) rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn holds(&self, values: &[u8]) -> bool {
        let lhs: f64 = self.terms.iter().map(|&(v, c)| c * values[v] as f64).sum();
        match self.sense {
            Sense::Le => lhs <= self.rhs,
            Sense::Ge => lhs >= self.rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipModel {
    pub policy: AuxPolicy,
    pub num_originals: usize,
    /// Originals first, then auxiliaries in creation order.
    pub variables: Vec<VarKind>,
    /// `(u, v)` for every auxiliary `y = u·v`, indexed like `variables`.
    pub factors: Vec<Option<(usize, usize)>>,
    pub objective: Vec<f64>,
    pub offset: f64,
    pub constraints: Vec<Constraint>,
}

struct Builder {
    model: MipModel,
    pair_index: BTreeMap<Pair, usize>,
}

impl Builder {
    fn product(&mut self, kind: VarKind, u: usize, v: usize) -> usize {
        let y = self.model.variables.len();
        self.model.variables.push(kind);
        self.model.factors.push(Some((u, v)));
        self.model.objective.push(0.0);
        let c = &mut self.model.constraints;
        c.push(Constraint {
            terms: vec![(y, 1.0), (u, -1.0)],
            sense: Sense::Le,
            rhs: 0.0,
        });
        c.push(Constraint {
            terms: vec![(y, 1.0), (v, -1.0)],
            sense: Sense::Le,
            rhs: 0.0,
        });
        c.push(Constraint {
            terms: vec![(y, 1.0), (u, -1.0), (v, -1.0)],
            sense: Sense::Ge,
            rhs: -1.0,
        });
        y
    }

    fn pair(&mut self, (i, j): Pair) -> usize {
        if let Some(&y) = self.pair_index.get(&(i, j)) {
            return y;
        }
        let y = self.product(VarKind::Pair((i, j)), i, j);
        self.pair_index.insert((i, j), y);
        y
    }
}

/// Linearizes the binary form of a spin instance.
pub fn linearize(inst: &HuboInstance, policy: AuxPolicy) -> MipModel {
    linearize_binary(&inst.to_binary(), policy)
}

pub fn linearize_binary(f: &BinaryHubo, policy: AuxPolicy) -> MipModel {
    let n = f.num_vars;
    let mut b = Builder {
        model: MipModel {
            policy,
            num_originals: n,
            variables: (0..n).map(VarKind::Original).collect(),
            factors: vec![None; n],
            objective: f.linear.clone(),
            offset: f.offset,
            constraints: Vec::new(),
        },
        pair_index: BTreeMap::new(),
    };
    for (&key, &c) in &f.quadratic {
        let y = b.pair(key);
        b.model.objective[y] += c;
    }
    for (&(i, j, k), &c) in &f.cubic {
        let a = match policy {
            AuxPolicy::Independent => b.product(VarKind::CubicPair((i, j, k)), i, j),
            AuxPolicy::Shared => b.pair((i, j)),
        };
        let y = b.product(VarKind::Triple((i, j, k)), a, k);
        b.model.objective[y] += c;
    }
    b.model
}

impl MipModel {
    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_auxiliaries(&self) -> usize {
        self.variables.len() - self.num_originals
    }

    pub fn name(&self, v: usize) -> String {
        self.variables[v].name()
    }

    /// Extends an assignment of the originals with the products the
    /// auxiliaries stand for.
    pub fn complete(&self, x: &[u8]) -> Result<Vec<u8>> {
        if x.len() != self.num_originals {
            return Err(Error::Dimension {
                expected: self.num_originals,
                got: x.len(),
            });
        }
        let mut values = x.to_vec();
        values.resize(self.variables.len(), 0);
        for v in self.num_originals..self.variables.len() {
            let (u, w) = self.factors[v].expect("auxiliaries have factors");
            values[v] = values[u] & values[w];
        }
        Ok(values)
    }

    /// Objective at a full assignment (originals and auxiliaries).
    pub fn objective_value(&self, values: &[u8]) -> Result<f64> {
        if values.len() != self.variables.len() {
            return Err(Error::Dimension {
                expected: self.variables.len(),
                got: values.len(),
            });
        }
        Ok(self.offset
            + self
                .objective
                .iter()
                .zip(values)
                .map(|(c, &v)| c * v as f64)
                .sum::<f64>())
    }

    /// Indices of violated constraints.
    pub fn violations(&self, values: &[u8]) -> Vec<usize> {
        (0..self.constraints.len())
            .filter(|&k| !self.constraints[k].holds(values))
            .collect()
    }

    pub fn is_feasible(&self, values: &[u8]) -> bool {
        values.len() == self.variables.len()
            && values.iter().all(|&v| v <= 1)
            && self.violations(values).is_empty()
    }

    /// CPLEX-style LP text.
    pub fn to_lp_string(&self) -> String {
        const PER_LINE: usize = 8;
        let mut out = String::new();
        out.push_str("\\ binary linearization of a cubic HUBO\n");
        out.push_str("Minimize\n obj:");
        let mut terms: Vec<String> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(v, &c)| signed_term(c, &self.name(v)))
            .collect();
        if self.offset != 0.0 || terms.is_empty() {
            terms.push(signed_constant(self.offset));
        }
        for (k, chunk) in terms.chunks(PER_LINE).enumerate() {
            if k > 0 {
                out.push_str("\n     ");
            }
            for t in chunk {
                out.push(' ');
                out.push_str(t);
            }
        }
        out.push_str("\nSubject To\n");
        for (k, c) in self.constraints.iter().enumerate() {
            let _ = write!(out, " c{k}:");
            for &(v, coef) in &c.terms {
                let _ = write!(out, " {}", signed_term(coef, &self.name(v)));
            }
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(out, " {op} {}", c.rhs);
        }
        out.push_str("Binaries\n");
        for chunk in self.variables.chunks(PER_LINE) {
            let names: Vec<String> = chunk.iter().map(VarKind::name).collect();
            let _ = writeln!(out, " {}", names.join(" "));
        }
        out.push_str("End\n");
        out
    }

    pub fn export_lp(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_lp_string())?;
        Ok(())
    }

    /// Full feasible assignment implied by a spin configuration.
    pub fn warm_start_values(&self, s: &SpinConfig) -> Result<Vec<u8>> {
        self.complete(&s.to_binary())
    }

    /// One `name value` line per variable.
    pub fn warm_start_string(&self, s: &SpinConfig) -> Result<String> {
        let values = self.warm_start_values(s)?;
        let mut out = String::new();
        for (v, val) in values.iter().enumerate() {
            let _ = writeln!(out, "{} {val}", self.name(v));
        }
        Ok(out)
    }

    pub fn export_warm_start(&self, s: &SpinConfig, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.warm_start_string(s)?)?;
        Ok(())
    }
}

fn signed_term(c: f64, name: &str) -> String {
    if c < 0.0 {
        format!("- {} {name}", -c)
    } else {
        format!("+ {c} {name}")
    }
}

fn signed_constant(c: f64) -> String {
    if c < 0.0 {
        format!("- {}", -c)
    } else {
        format!("+ {c}")
    }
}

/// Incumbent history of an external exact solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncumbentTrace {
    pub points: Vec<(f64, f64)>,
    pub proven_optimal: bool,
}

impl IncumbentTrace {
    pub fn parse(text: &str) -> Result<Self> {
        let mut points: Vec<(f64, f64)> = Vec::new();
        let mut proven_optimal = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: line_no, msg };
            if proven_optimal {
                return Err(err("content after the `optimal` marker".into()));
            }
            if line.eq_ignore_ascii_case("optimal") {
                proven_optimal = true;
                continue;
            }
            if points.is_empty() && line.eq_ignore_ascii_case("seconds,objective") {
                continue;
            }
            let (t, e) = line
                .split_once(',')
                .ok_or_else(|| err(format!("expected `seconds,objective`, got {line:?}")))?;
            let t: f64 = t
                .trim()
                .parse()
                .map_err(|_| err(format!("bad time {t:?}")))?;
            let e: f64 = e
                .trim()
                .parse()
                .map_err(|_| err(format!("bad objective {e:?}")))?;
            if !t.is_finite() || t < 0.0 || !e.is_finite() {
                return Err(err(format!("non-finite or negative entry {line:?}")));
            }
            if let Some(&(pt, pe)) = points.last() {
                if t <= pt {
                    return Err(err(format!("time {t} does not increase past {pt}")));
                }
                if e > pe {
                    return Err(err(format!("objective {e} rises above {pe}")));
                }
            }
            points.push((t, e));
        }
        Ok(Self {
            points,
            proven_optimal,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.points.last().map(|p| p.1)
    }

    /// Earliest time with objective `≤ e_ref`; `None` if never reached.
    pub fn time_to_reach(&self, e_ref: f64) -> Option<f64> {
        self.points.iter().find(|p| p.1 <= e_ref).map(|p| p.0)
    }
}

pub fn ingest_trace(path: impl AsRef<Path>, e_ref: f64) -> Result<Option<f64>> {
    Ok(IncumbentTrace::read(path)?.time_to_reach(e_ref))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::random_instance;

    fn binary(
        n: usize,
        quadratic: &[(usize, usize, f64)],
        cubic: &[(usize, usize, usize, f64)],
    ) -> BinaryHubo {
        BinaryHubo {
            num_vars: n,
            linear: vec![0.0; n],
            quadratic: quadratic.iter().map(|&(i, j, c)| ((i, j), c)).collect(),
            cubic: cubic.iter().map(|&(i, j, k, c)| ((i, j, k), c)).collect(),
            offset: 0.0,
        }
    }

    #[test]
    fn per_term_counts() {
        let f = binary(
            5,
            &[(0, 1, 1.0), (1, 2, -1.0), (3, 4, 2.0)],
            &[(0, 1, 2, 1.0), (2, 3, 4, -3.0)],
        );
        let m = linearize_binary(&f, AuxPolicy::Independent);
        assert_eq!(m.num_auxiliaries(), 3 + 4);
        assert_eq!(m.num_constraints(), 9 + 12);
        // (0,1) is reused by the first cubic; (2,3) is new
        let s = linearize_binary(&f, AuxPolicy::Shared);
        assert_eq!(s.num_auxiliaries(), 3 + 1 + 2);
        assert_eq!(s.num_constraints(), 3 * (3 + 1 + 2));
    }

    #[test]
    fn linear_only_has_no_auxiliaries() {
        let mut inst = HuboInstance::new(4);
        inst.add_linear(2, 1.0).unwrap();
        let m = linearize(&inst, AuxPolicy::default());
        assert_eq!(m.num_variables(), 4);
        assert_eq!(m.num_constraints(), 0);
    }

    #[test]
    fn exhaustive_equivalence() {
        let inst = random_instance(10, 0.4, 0.15, 3);
        for policy in [AuxPolicy::Independent, AuxPolicy::Shared] {
            let m = linearize(&inst, policy);
            for bits in 0u64..1 << 10 {
                let s = SpinConfig::from_bits(bits, 10);
                let full = m.warm_start_values(&s).unwrap();
                assert!(m.is_feasible(&full));
                let obj = m.objective_value(&full).unwrap();
                assert!((obj - inst.energy(&s).unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn product_constraints_are_tight() {
        let f = binary(3, &[(0, 1, 1.0)], &[(0, 1, 2, 1.0)]);
        let m = linearize_binary(&f, AuxPolicy::Independent);
        let a = m
            .variables
            .iter()
            .position(|v| *v == VarKind::Pair((0, 1)))
            .unwrap();
        let b = m
            .variables
            .iter()
            .position(|v| *v == VarKind::Triple((0, 1, 2)))
            .unwrap();
        for corner in 0u8..8 {
            let x = [corner & 1, corner >> 1 & 1, corner >> 2 & 1];
            let forced = m.complete(&x).unwrap();
            for flip in [a, b] {
                let mut wrong = forced.clone();
                wrong[flip] ^= 1;
                assert!(
                    !m.is_feasible(&wrong),
                    "corner {corner} accepts a wrong product"
                );
            }
            assert_eq!(forced[a], x[0] & x[1]);
            assert_eq!(forced[b], x[0] & x[1] & x[2]);
        }
    }

    #[test]
    fn lp_single_variable() {
        let mut f = binary(1, &[], &[]);
        f.linear[0] = -2.0;
        f.offset = 1.0;
        let lp = linearize_binary(&f, AuxPolicy::default()).to_lp_string();
        assert!(lp.contains("obj: - 2 x0 + 1\n"), "{lp}");
        assert!(lp.contains("Binaries\n x0\n"));
    }

    #[test]
    fn lp_product_rows() {
        let f = binary(2, &[(0, 1, 1.0)], &[]);
        let lp = linearize_binary(&f, AuxPolicy::default()).to_lp_string();
        assert!(lp.contains(" c0: + 1 a0_1 - 1 x0 <= 0\n"), "{lp}");
        assert!(lp.contains(" c1: + 1 a0_1 - 1 x1 <= 0\n"));
        assert!(lp.contains(" c2: + 1 a0_1 - 1 x0 - 1 x1 >= -1\n"));
    }

    #[test]
    fn warm_start_products() {
        let f = binary(3, &[(0, 1, 1.0)], &[]);
        let m = linearize_binary(&f, AuxPolicy::default());
        let text = m.warm_start_string(&SpinConfig::all_up(3)).unwrap();
        assert_eq!(text, "x0 0\nx1 0\nx2 0\na0_1 0\n");
        let s = SpinConfig::from_bitstring("110").unwrap();
        assert!(m.warm_start_string(&s).unwrap().contains("a0_1 1\n"));
    }

    #[test]
    fn trace_parsing() {
        let t = IncumbentTrace::parse("1,-5\n2,-9\n").unwrap();
        assert_eq!(t.time_to_reach(-9.0), Some(2.0));
        assert_eq!(t.time_to_reach(-10.0), None);
        assert!(!t.proven_optimal);
        let t =
            IncumbentTrace::parse("seconds,objective\n0.5,-1\n# note\n1.0,-2\noptimal\n").unwrap();
        assert!(t.proven_optimal);
        assert_eq!(t.final_objective(), Some(-2.0));
        match IncumbentTrace::parse("1,-5\n2;-9\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            IncumbentTrace::parse("2,-5\n1,-6\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            IncumbentTrace::parse("1,-5\n2,-4\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            IncumbentTrace::parse("1,-5\noptimal\n2,-6\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}
