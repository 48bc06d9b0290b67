//! Random instances for tests and benchmarks.

use rand::Rng;

use crate::hubo::HuboInstance;
use crate::rng;

/// Every pair is included with probability `pair_prob` and every triple with
/// `triple_prob`; coefficients are uniform in `[-2, 2]`. Intended for small
/// `n` since all triples are enumerated.
pub fn random_instance(n: usize, pair_prob: f64, triple_prob: f64, seed: u64) -> HuboInstance {
    let mut r = rng::stream(seed, 0xD15E);
    let mut inst = HuboInstance::new(n);
    for i in 0..n {
        inst.add_linear(i, r.random_range(-2.0..2.0)).unwrap();
    }
    for i in 0..n {
        for j in i + 1..n {
            if r.random_bool(pair_prob) {
                inst.add_quadratic(i, j, r.random_range(-2.0..2.0)).unwrap();
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if r.random_bool(triple_prob) {
                    inst.add_cubic(i, j, k, r.random_range(-2.0..2.0)).unwrap();
                }
            }
        }
    }
    inst
}

/// Sparse instance with a fixed number of random pairs and triples.
pub fn random_sparse_instance(n: usize, pairs: usize, triples: usize, seed: u64) -> HuboInstance {
    assert!(n >= 3);
    let mut r = rng::stream(seed, 0x5BA5);
    let mut inst = HuboInstance::new(n);
    for i in 0..n {
        inst.add_linear(i, r.random_range(-2.0..2.0)).unwrap();
    }
    for _ in 0..pairs {
        let i = r.random_range(0..n);
        let j = (i + r.random_range(1..n)) % n;
        inst.add_quadratic(i, j, r.random_range(-2.0..2.0)).unwrap();
    }
    for _ in 0..triples {
        let i = r.random_range(0..n);
        let j = (i + r.random_range(1..n)) % n;
        let mut k = r.random_range(0..n);
        while k == i || k == j {
            k = r.random_range(0..n);
        }
        inst.add_cubic(i, j, k, r.random_range(-2.0..2.0)).unwrap();
    }
    inst
}
