//! Acceptance criteria 1 to 10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. A numeric argument runs that criterion only.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hubo_core::anneal::{
    anneal, calibrate_sweep_time, cpu_time_model, linear_fit, SaConfig, SECONDS_PER_SWEEP,
};
use hubo_core::cdsim::{
    build_cd_program, prep_angles, run_bfdcqo, runtime_model, BfDcqoConfig, CdProgram, Gate, Layer,
    LayerKind, MixerField, Pauli, RuntimeConstants, StateVector,
};
use hubo_core::harness::{
    approximation_ratio, enhancement_factor, instance_seed, tt_r, GeneratorConfig, Topology,
};
use hubo_core::mip::{linearize, AuxPolicy, IncumbentTrace};
use hubo_core::rng;
use hubo_core::testing::random_instance;
use hubo_core::{brute_force_ground_state, BinaryHubo, HuboInstance, SamplerConfig, SpinConfig};
use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;
type Criterion = (u8, &'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    if t <= limit {
        Ok(())
    } else {
        Err(format!("took {t:.1?}, limit {limit:?}"))
    }
}

fn generator(topology: Topology, s2q: usize, s3q: usize) -> GeneratorConfig {
    GeneratorConfig {
        topology,
        swap_layers: 1,
        s2q,
        s3q,
        sampler: SamplerConfig::cauchy(Some(7.0)),
        coloring_seed: None,
    }
}

fn exhaustive_equivalence() -> Outcome {
    let start = Instant::now();
    let mut r = rng::stream(1, 0);
    let mut worst: f64 = 0.0;
    let mut assignments = 0usize;
    for k in 0..100u64 {
        let n = r.random_range(1..=12);
        let inst = random_instance(n, 0.5, 0.3, k);
        let binary = BinaryHubo::from_spin(&inst);
        let models = [
            linearize(&inst, AuxPolicy::Independent),
            linearize(&inst, AuxPolicy::Shared),
        ];
        for bits in 0..1u64 << n {
            let s = SpinConfig::from_bits(bits, n);
            let x = s.to_binary();
            let e = inst.energy(&s).map_err(|e| e.to_string())?;
            let f = binary.evaluate(&x).map_err(|e| e.to_string())?;
            worst = worst.max((e - f).abs());
            for m in &models {
                let full = m.complete(&x).map_err(|e| e.to_string())?;
                if !m.is_feasible(&full) {
                    return Err(format!(
                        "instance {k}: forced auxiliaries infeasible at {bits:b}"
                    ));
                }
                worst = worst.max((m.objective_value(&full).map_err(|e| e.to_string())? - e).abs());
            }
            assignments += 1;
        }
    }
    within(Duration::from_secs(60), start)?;
    check(
        worst <= 1e-9,
        format!("{assignments} assignments, max deviation {worst:.2e}"),
    )
}

fn linearization_counts() -> Outcome {
    for k in 0..50u64 {
        let n = 3 + (k as usize % 20);
        let inst = random_instance(n, 0.4, 0.2, 100 + k);
        let b = BinaryHubo::from_spin(&inst);
        let (q, c) = (b.quadratic.len(), b.cubic.len());
        let m = linearize(&inst, AuxPolicy::Independent);
        if m.num_variables() != n + q + 2 * c || m.num_constraints() != 3 * q + 6 * c {
            return Err(format!(
                "instance {k}: {} vars / {} constraints, expected {} / {}",
                m.num_variables(),
                m.num_constraints(),
                n + q + 2 * c,
                3 * q + 6 * c
            ));
        }
    }
    let (m2, m3) = generator(Topology::Heron, 1, 1)
        .layout(156)
        .map_err(|e| e.to_string())?
        .available[0];
    let mut best = (0, 0, 0, 0);
    for s2q in 1..=m2 {
        for s3q in 1..=m3 {
            let g = generator(Topology::Heron, s2q, s3q);
            let layout = g.layout(156).map_err(|e| e.to_string())?;
            let inst = g.instance(&layout, 7).map_err(|e| e.to_string())?;
            let m = linearize(&inst, AuxPolicy::Independent);
            if m.num_variables() > best.0 {
                best = (m.num_variables(), m.num_constraints(), s2q, s3q);
            }
        }
    }
    let (v, c, s2q, s3q) = best;
    let dv = v as f64 / 1500.0 - 1.0;
    let dc = c as f64 / 4000.0 - 1.0;
    check(
        dv.abs() <= 0.15 && dc.abs() <= 0.15,
        format!(
            "Heron grid max at ({s2q},{s3q}): {v} vars ({:+.1}%), {c} constraints ({:+.1}%)",
            dv * 100.0,
            dc * 100.0
        ),
    )
}

fn heron_term_range() -> Outcome {
    let (m2, m3) = generator(Topology::Heron, 1, 1)
        .layout(156)
        .map_err(|e| e.to_string())?
        .available[0];
    let mut counts = Vec::new();
    for s2q in 1..=m2 {
        for s3q in 1..=m3 {
            let g = generator(Topology::Heron, s2q, s3q);
            let layout = g.layout(156).map_err(|e| e.to_string())?;
            counts.push(
                g.instance(&layout, 3)
                    .map_err(|e| e.to_string())?
                    .term_count(),
            );
        }
    }
    let (lo, hi) = (*counts.iter().min().unwrap(), *counts.iter().max().unwrap());
    check(
        (250..=400).contains(&lo) && (700..=900).contains(&hi),
        format!("grid {m2}x{m3}: terms {lo}..{hi}"),
    )
}

fn sa_oracle() -> Outcome {
    let start = Instant::now();
    let g = generator(Topology::Patch, 1, 2);
    let layout = g.layout(16).map_err(|e| e.to_string())?;
    let mut hits = 0;
    let mut mismatched = Vec::new();
    for k in 0..50 {
        let seed = instance_seed(4, 16, k);
        let inst = g.instance(&layout, seed).map_err(|e| e.to_string())?;
        let (_, e_gs) = brute_force_ground_state(&inst, 24).map_err(|e| e.to_string())?;
        let runs: Vec<_> = [1, 4, 8]
            .into_iter()
            .map(|threads| {
                anneal(
                    &inst,
                    &SaConfig {
                        n_sweep: 20000,
                        n_runs: 100,
                        seed,
                        threads,
                        ..SaConfig::default()
                    },
                )
                .map_err(|e| e.to_string())
            })
            .collect::<Result<_, _>>()?;
        if runs.iter().any(|r| *r != runs[0]) {
            mismatched.push(k);
        }
        if (runs[0].best_energy - e_gs).abs() <= 1e-9 * e_gs.abs().max(1.0) {
            hits += 1;
        }
    }
    within(Duration::from_secs(600), start)?;
    check(
        hits * 100 >= 95 * 50 && mismatched.is_empty(),
        format!(
            "optimum found on {hits}/50; results differ across 1/4/8 workers on {mismatched:?}"
        ),
    )
}

fn runtime_regression() -> Outcome {
    let sa = cpu_time_model(100_000, 10, SECONDS_PER_SWEEP);
    let table = runtime_model(
        &BfDcqoConfig {
            n_iter: 1,
            ..BfDcqoConfig::default()
        },
        RuntimeConstants::default(),
    );
    let qpu = runtime_model(
        &BfDcqoConfig {
            n_iter: 2,
            n_shots: 4000,
            ..BfDcqoConfig::default()
        },
        RuntimeConstants::default(),
    );
    check(
        (sa - 6.0).abs() <= 1e-9
            && (table.t_cpu - 0.612).abs() <= 1e-9
            && (qpu.t_qpu - 1.2).abs() <= 1e-9,
        format!(
            "SA {sa} s, T_CPU {} s, T_QPU(n_iter=2) {} s",
            table.t_cpu, qpu.t_qpu
        ),
    )
}

fn pauli_matrix(p: Pauli) -> DMatrix<Complex64> {
    let (o, z, i) = (
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 1.0),
    );
    let v = match p {
        Pauli::X => [z, o, o, z],
        Pauli::Y => [z, -i, i, z],
        Pauli::Z => [o, z, z, -o],
    };
    DMatrix::from_row_slice(2, 2, &v)
}

/// Dense operator of a gate on `n` qubits, qubit 0 least significant.
fn dense_gate(g: &Gate, n: usize) -> DMatrix<Complex64> {
    match g {
        Gate::Rotation { ops, angle } => {
            let mut p = DMatrix::<Complex64>::identity(1, 1);
            for q in (0..n).rev() {
                let f = ops
                    .iter()
                    .find(|o| o.0 == q)
                    .map(|o| pauli_matrix(o.1))
                    .unwrap_or_else(|| DMatrix::identity(2, 2));
                p = p.kronecker(&f);
            }
            (p * Complex64::new(0.0, -angle / 2.0)).exp()
        }
        Gate::Swap(a, b) => {
            let dim = 1usize << n;
            let mut m = DMatrix::<Complex64>::zeros(dim, dim);
            for s in 0..dim {
                let (ba, bb) = (s >> a & 1, s >> b & 1);
                let t = s & !(1 << a) & !(1 << b) | bb << a | ba << b;
                m[(t, s)] = Complex64::new(1.0, 0.0);
            }
            m
        }
    }
}

fn product_state(angles: &[f64]) -> DMatrix<Complex64> {
    let mut v = DMatrix::<Complex64>::identity(1, 1);
    for t in angles.iter().rev() {
        let f = DMatrix::from_column_slice(
            2,
            1,
            &[
                Complex64::new((t / 2.0).cos(), 0.0),
                Complex64::new((t / 2.0).sin(), 0.0),
            ],
        );
        v = v.kronecker(&f);
    }
    v
}

fn simulator_correctness() -> Outcome {
    let start = Instant::now();
    let worst = (0..1000u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(6, k);
            let n = r.random_range(1..=4);
            let inst = random_instance(n, 0.7, 0.7, k);
            let hx: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
            let mut program =
                build_cd_program(&inst, &hx, None, r.random_range(-1.0..1.0)).unwrap();
            if n >= 2 && r.random_bool(0.5) {
                let a = r.random_range(0..n);
                let b = (a + r.random_range(1..n)) % n;
                let at = r.random_range(0..=program.layers.len());
                program.layers.insert(
                    at,
                    Layer {
                        kind: LayerKind::Swap,
                        gates: vec![Gate::Swap(a, b)],
                    },
                );
            }
            let angles: Vec<f64> = (0..n).map(|_| r.random_range(-3.2..3.2)).collect();
            let mut sv = StateVector::product_ry(&angles, 24).unwrap();
            program.apply(&mut sv).unwrap();
            let mut dense = product_state(&angles);
            for g in program.layers.iter().flat_map(|l| &l.gates) {
                dense = dense_gate(g, n) * dense;
            }
            let overlap: Complex64 = sv
                .amplitudes()
                .iter()
                .zip(dense.iter())
                .map(|(a, b)| b.conj() * a)
                .sum();
            1.0 - overlap.norm_sqr()
        })
        .reduce(|| 0.0, f64::max);

    let g = generator(Topology::Patch, 1, 2);
    let layout = g.layout(20).map_err(|e| e.to_string())?;
    let inst = g.instance(&layout, 9).map_err(|e| e.to_string())?;
    let program: CdProgram =
        build_cd_program(&inst, &[-1.0; 20], Some(&layout), 0.3).map_err(|e| e.to_string())?;
    let mut sv = StateVector::product_ry(&[0.7; 20], 24).map_err(|e| e.to_string())?;
    program.apply(&mut sv).map_err(|e| e.to_string())?;
    let drift = (sv.norm() - 1.0).abs();
    within(Duration::from_secs(300), start)?;
    check(
        worst <= 1e-10 && drift <= 1e-10,
        format!("max infidelity {worst:.2e} over 1000 programs; N=20 norm drift {drift:.2e}"),
    )
}

fn state_prep() -> Outcome {
    let mut r = rng::stream(7, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let (x, b) = (r.random_range(-5.0..5.0), r.random_range(-5.0..5.0));
        let theta = prep_angles(&MixerField::new(vec![x], vec![b]).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?[0];
        let eig = Matrix2::new(b, x, x, -b).symmetric_eigen();
        let k = if eig.eigenvalues[0] <= eig.eigenvalues[1] {
            0
        } else {
            1
        };
        let v = eig.eigenvectors.column(k);
        let overlap = v[0] * (theta / 2.0).cos() + v[1] * (theta / 2.0).sin();
        worst = worst.max(1.0 - overlap * overlap);
    }

    let n = 10;
    let hx: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
    let hb: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
    let field = MixerField::new(hx.clone(), hb.clone()).map_err(|e| e.to_string())?;
    let sv = StateVector::product_ry(&prep_angles(&field).map_err(|e| e.to_string())?, 24)
        .map_err(|e| e.to_string())?;
    let a = sv.amplitudes();
    let mut energy = 0.0;
    for q in 0..n {
        for (s, amp) in a.iter().enumerate() {
            let z = if s >> q & 1 == 0 { 1.0 } else { -1.0 };
            energy += hb[q] * z * amp.norm_sqr() + hx[q] * (amp.conj() * a[s ^ 1 << q]).re;
        }
    }
    let expected = -hx.iter().zip(&hb).map(|(x, b)| x.hypot(*b)).sum::<f64>();
    let gap = (energy - expected).abs();
    check(
        worst <= 1e-12 && gap <= 1e-9,
        format!("max single-qubit infidelity {worst:.2e}; N={n} mixer energy error {gap:.2e}"),
    )
}

fn bfdcqo_desk_scale() -> Outcome {
    let start = Instant::now();
    let g = generator(Topology::Patch, 1, 2);
    let layout = g.layout(14).map_err(|e| e.to_string())?;
    let results: Vec<(bool, f64)> = (0..25)
        .map(|k| {
            let seed = instance_seed(8, 14, k);
            let inst: HuboInstance = g.instance(&layout, seed).map_err(|e| e.to_string())?;
            let (_, e_gs) = brute_force_ground_state(&inst, 24).map_err(|e| e.to_string())?;
            let cfg = BfDcqoConfig {
                n_iter: 3,
                n_shots: 4000,
                n_cvar: 100,
                post_sweeps: 10,
                pre_sweeps: 10,
                pre_runs: 1,
                seed,
                ..BfDcqoConfig::default()
            };
            let res = run_bfdcqo(&inst, Some(&layout), &cfg).map_err(|e| e.to_string())?;
            let mut best: Vec<f64> = res.pre_energy.into_iter().collect();
            best.extend(res.iterations.iter().map(|i| i.best_energy));
            let monotone =
                best.windows(2).all(|w| w[1] <= w[0]) && best.last() == Some(&res.best_energy);
            let ratio = approximation_ratio(res.best_energy, e_gs)
                .map_err(|e| e.to_string())?
                .value;
            Ok((monotone, ratio))
        })
        .collect::<Result<_, String>>()?;
    within(Duration::from_secs(900), start)?;
    let monotone = results.iter().filter(|r| r.0).count();
    let good = results.iter().filter(|r| r.1 >= 0.95).count();
    let min_ratio = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    check(
        monotone == 25 && good * 100 >= 80 * 25,
        format!("monotone {monotone}/25, ratio >= 0.95 on {good}/25 (min {min_ratio:.4})"),
    )
}

fn tt_r_bookkeeping() -> Outcome {
    const E_GS: f64 = -472.5398;
    const E_SUBJECT: f64 = -454.0458;
    const TT_SUBJECT: f64 = 0.207;
    const PRINTED_FACTOR: f64 = 84.729;
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/data/n156_i0_incumbents.csv"
    );
    let trace = IncumbentTrace::read(path).map_err(|e| e.to_string())?;
    let target = approximation_ratio(E_SUBJECT, E_GS)
        .map_err(|e| e.to_string())?
        .value;
    let tt = tt_r(&trace.points, target, E_GS).map_err(|e| e.to_string())?;
    let factor = tt.map(|t| enhancement_factor(t, TT_SUBJECT));
    // The printed factor corresponds to an unrounded subject time of
    // 17.5 / 84.729 = 0.20654 s, which rounds to the recorded 0.207 s.
    let implied = 17.5 / PRINTED_FACTOR;
    let consistent = (implied * 1000.0).round() / 1000.0 == TT_SUBJECT;
    check(
        tt == Some(17.5)
            && trace.proven_optimal
            && trace.final_objective() == Some(E_GS)
            && factor == Some(17.5 / TT_SUBJECT)
            && consistent,
        format!(
            "TT_R = {tt:?} s, factor vs 0.207 s = {:.3}, printed {PRINTED_FACTOR} implies {implied:.5} s",
            factor.unwrap_or(f64::NAN)
        ),
    )
}

fn calibration() -> Outcome {
    let xs: Vec<f64> = [100.0, 300.0, 1000.0, 3000.0, 10000.0, 100000.0].to_vec();
    let ys: Vec<f64> = xs.iter().map(|x| 6.25e-6 * x + 3.5e-4).collect();
    let fit = linear_fit(&xs, &ys).map_err(|e| e.to_string())?;
    let slope_err = (fit.slope / 6.25e-6 - 1.0).abs();
    let icpt_err = (fit.intercept / 3.5e-4 - 1.0).abs();

    let g = generator(Topology::Patch, 1, 2);
    let layout = g.layout(80).map_err(|e| e.to_string())?;
    let inst = g.instance(&layout, 10).map_err(|e| e.to_string())?;
    let cal =
        calibrate_sweep_time(&inst, &[100, 1000, 10000, 100000], 3).map_err(|e| e.to_string())?;
    check(
        slope_err <= 1e-9 && icpt_err <= 1e-9 && cal.r_squared >= 0.99,
        format!(
            "synthetic rel. errors {slope_err:.1e}/{icpt_err:.1e}; SA R^2 {:.5}, {:.2e} s/sweep at N=80",
            cal.r_squared, cal.seconds_per_sweep
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (1, "exhaustive equivalence", exhaustive_equivalence),
        (2, "linearization counts", linearization_counts),
        (3, "Heron term range", heron_term_range),
        (4, "SA oracle agreement", sa_oracle),
        (5, "runtime model", runtime_regression),
        (6, "simulator correctness", simulator_correctness),
        (7, "state preparation", state_prep),
        (8, "BF-DCQO desk scale", bfdcqo_desk_scale),
        (9, "TT_R bookkeeping", tt_r_bookkeeping),
        (10, "sweep-time calibration", calibration),
    ];
    let only: Vec<u8> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {id:>2} PASS  {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {d} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
