//! Dense statevector with qubit 0 as the least significant index bit.

use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Default cap on simulated qubits.
pub const SIM_CAP: usize = 24;

/// Blocks smaller than this are not worth a rayon task.
const MIN_BLOCK: usize = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn symbol(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(num_qubits: usize, cap: usize) -> Result<Self> {
        if num_qubits > cap {
            return Err(Error::Capacity {
                what: "statevector",
                size: num_qubits,
                cap,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    /// `⊗ Ry(θ_q)|0⟩` with `Ry(θ) = exp(−iθY/2)`.
    pub fn product_ry(angles: &[f64], cap: usize) -> Result<Self> {
        let mut sv = Self::zero(angles.len(), cap)?;
        let factors: Vec<(f64, f64)> = angles
            .iter()
            .map(|t| ((t / 2.0).cos(), (t / 2.0).sin()))
            .collect();
        sv.amps.par_iter_mut().enumerate().for_each(|(b, a)| {
            let mut v = 1.0;
            for (q, &(c, s)) in factors.iter().enumerate() {
                v *= if b >> q & 1 == 1 { s } else { c };
            }
            *a = Complex64::new(v, 0.0);
        });
        Ok(sv)
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len();
        if !n.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "{n} amplitudes is not a power of two"
            )));
        }
        Ok(Self {
            num_qubits: n.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps
            .par_iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.par_iter().map(|a| a.norm_sqr()).collect()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }

    fn check(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(Error::Dimension {
                expected: self.num_qubits,
                got: q,
            });
        }
        Ok(())
    }

    /// Applies `exp(−i·angle·P/2)` for the Pauli string `ops`.
    pub fn apply_rotation(&mut self, ops: &[(usize, Pauli)], angle: f64) -> Result<()> {
        let (mut xmask, mut zmask, mut ny) = (0usize, 0usize, 0u32);
        for &(q, p) in ops {
            self.check(q)?;
            let bit = 1usize << q;
            if (xmask | zmask) & bit != 0 {
                return Err(Error::InvalidConfig(format!(
                    "qubit {q} repeated in a Pauli string"
                )));
            }
            match p {
                Pauli::X => xmask |= bit,
                Pauli::Y => {
                    xmask |= bit;
                    zmask |= bit;
                    ny += 1;
                }
                Pauli::Z => zmask |= bit,
            }
        }
        let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
        // P|b⟩ = i^ny (−1)^{|b ∧ z|} |b ⊕ x⟩
        let iny = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ][(ny % 4) as usize];
        let k = Complex64::new(0.0, -s) * iny;
        let sign = |b: usize| {
            if (b & zmask).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            }
        };

        if xmask == 0 {
            // only Z factors: diagonal phases by parity
            let (even, odd) = (Complex64::new(c, -s), Complex64::new(c, s));
            self.amps
                .par_iter_mut()
                .enumerate()
                .for_each(|(b, a)| *a *= if sign(b) > 0.0 { even } else { odd });
            return Ok(());
        }
        let top = usize::BITS - 1 - xmask.leading_zeros();
        let half = 1usize << top;
        let block = (half << 1).max(MIN_BLOCK).min(self.amps.len());
        self.amps
            .par_chunks_mut(block)
            .enumerate()
            .for_each(|(chunk, amps)| {
                let base = chunk * block;
                for local in 0..amps.len() {
                    if local & half != 0 {
                        continue;
                    }
                    let partner = local ^ xmask;
                    let (b, bp) = (base + local, base + partner);
                    let (u, v) = (amps[local], amps[partner]);
                    amps[local] = u * c + k * sign(bp) * v;
                    amps[partner] = v * c + k * sign(b) * u;
                }
            });
        Ok(())
    }

    pub fn apply_swap(&mut self, a: usize, b: usize) -> Result<()> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Ok(());
        }
        let (lo, hi) = (a.min(b), a.max(b));
        let (mlo, mhi) = (1usize << lo, 1usize << hi);
        let block = (mhi << 1).max(MIN_BLOCK).min(self.amps.len());
        self.amps.par_chunks_mut(block).for_each(|amps| {
            for local in 0..amps.len() {
                if local & mhi != 0 && local & mlo == 0 {
                    amps.swap(local, local ^ mhi ^ mlo);
                }
            }
        });
        Ok(())
    }

    /// Multinomial sampling of `n_shots` computational-basis outcomes.
    /// Returns `(index, count)` in increasing index order.
    pub fn sample(&self, n_shots: usize, seed: u64) -> Vec<(u64, usize)> {
        let mut r = rng::stream(seed, 0x5407);
        let total: f64 = self.amps.iter().map(|a| a.norm_sqr()).sum();
        let mut draws: Vec<f64> = (0..n_shots).map(|_| r.random::<f64>() * total).collect();
        draws.sort_by(f64::total_cmp);
        let mut out: Vec<(u64, usize)> = Vec::new();
        let mut acc = 0.0;
        let mut next = 0;
        let mut last_supported = 0;
        for (b, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            last_supported = b;
            acc += p;
            let start = next;
            while next < draws.len() && draws[next] < acc {
                next += 1;
            }
            if next > start {
                out.push((b as u64, next - start));
            }
            if next == draws.len() {
                break;
            }
        }
        // rounding leftovers go to the last outcome with support
        if next < draws.len() {
            match out.last_mut() {
                Some(e) if e.0 == last_supported as u64 => e.1 += draws.len() - next,
                _ => out.push((last_supported as u64, draws.len() - next)),
            }
        }
        out
    }
}
