//! Exit criteria. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any fails.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};
use std::time::Instant;

use num_complex::Complex64;

use qudit::bipartite::{
    classification_table, factorizations, numeric_schmidt_rank, schmidt_forms, split_parameters,
    MeasurementClass,
};
use qudit::crypto::{feed_forward_plan, run_protocol, Eavesdropper, ProtocolConfig};
use qudit::eigensolver::{
    analytic_eigensystem, eigencondition_check, numeric_eigensystem, spectral_equivalence,
};
use qudit::matrix::{kron_vec, outer, vec_max_diff};
use qudit::optics::{
    derived_distribution, eigenvalue_distribution, general_device, outcome_distribution,
    preset_device, reck_decompose,
};
use qudit::random::{
    random_density_matrix, random_pure_state, random_unitary, rng_from_seed, substream,
};
use qudit::tomography::{
    exact_frequencies, measurement_probabilities, reconstruct, simulate_counts, trace_distance,
    DensityMatrix,
};
use qudit::{pauli_matrix, ComplexMatrix, PauliLabel};
use qudit_cli::EigenOutput;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn alpha(d: usize, p: i64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * p as f64 / d as f64)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// The worked d = 6, S_43 eigenbasis: state j has eigenvalue α_6^j.
fn worked_example() -> Vec<(Complex64, Vec<Complex64>)> {
    let s = 1.0 / 3f64.sqrt();
    let a3 = |p: i64| alpha(3, p) * s;
    let z = c(0.0, 0.0);
    let rows = [
        [a3(0), z, a3(0), z, a3(0), z],
        [z, a3(0), z, a3(2), z, a3(1)],
        [a3(0), z, a3(1), z, a3(2), z],
        [z, a3(0), z, a3(0), z, a3(0)],
        [a3(0), z, a3(2), z, a3(1), z],
        [z, a3(0), z, a3(1), z, a3(2)],
    ];
    rows.iter()
        .enumerate()
        .map(|(j, r)| (alpha(6, j as i64), r.to_vec()))
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut out = Vec::new();
    let code = qudit_cli::run(
        ["qudit", "eigen", "--d", "6", "--k", "4", "--l", "3"],
        &mut out,
    );
    let elapsed = start.elapsed().as_secs_f64();
    if code != 0 {
        return (false, format!("exit code {code}"));
    }
    let parsed: EigenOutput = serde_json::from_slice(&out).expect("eigen JSON");
    let mut unmatched: Vec<usize> = (0..parsed.pairs.len()).collect();
    let mut worst: f64 = 0.0;
    for (lambda, v) in worked_example() {
        let hit = unmatched.iter().position(|&i| {
            let p = &parsed.pairs[i];
            vec_max_diff(&p.vector, &v) < 1e-12 && (p.eigenvalue - lambda).norm() < 1e-12
        });
        match hit {
            Some(pos) => {
                let i = unmatched.remove(pos);
                worst = worst.max(vec_max_diff(&parsed.pairs[i].vector, &v));
            }
            None => {
                return (
                    false,
                    format!("no output eigenpair matches eigenvalue {lambda:.6}"),
                )
            }
        }
    }
    (
        unmatched.is_empty() && elapsed < 0.1,
        format!("6/6 eigenpairs matched, max coefficient error {worst:.1e}, {elapsed:.4} s"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for d in 2..=12 {
        for lbl in PauliLabel::all(d).unwrap() {
            count += 1;
            let analytic = analytic_eigensystem(lbl);
            let numeric = numeric_eigensystem(&pauli_matrix(lbl)).unwrap();
            let eq = spectral_equivalence(&analytic, &numeric).unwrap();
            let err = eigencondition_check(lbl, &analytic).unwrap();
            worst = worst.max(err);
            if !eq || err >= 1e-10 {
                failures.push(format!("{lbl}"));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    (
        failures.is_empty() && elapsed < 30.0,
        format!(
            "{count} labels, {} failures, max eigencondition error {worst:.1e}, {elapsed:.2} s",
            failures.len()
        ),
    )
}

fn composite_cases() -> Vec<(usize, usize, PauliLabel)> {
    let mut cases = Vec::new();
    for d in 4..=12 {
        for (d1, d0) in factorizations(d) {
            for lbl in PauliLabel::all(d).unwrap() {
                cases.push((d1, d0, lbl));
            }
        }
    }
    cases
}

fn criterion_3() -> Outcome {
    let cases = composite_cases();
    let bad = cases
        .iter()
        .filter(|&&(d1, d0, lbl)| {
            let p = split_parameters(d1, d0, lbl).unwrap();
            p.big_d1 * p.big_d0 != lbl.d() / lbl.f()
        })
        .count();
    (
        bad == 0,
        format!("{} (d1, d0, k, l) cases, {bad} violations", cases.len()),
    )
}

fn criterion_4() -> Outcome {
    let cases = composite_cases();
    let mut bad = Vec::new();
    for &(d1, d0, lbl) in &cases {
        let analytic = analytic_eigensystem(lbl);
        let forms = schmidt_forms(d1, d0, lbl).unwrap();
        let ranks: BTreeSet<usize> = forms.iter().map(|f| f.rank).collect();
        let svd: BTreeSet<usize> = analytic
            .pairs
            .iter()
            .map(|p| numeric_schmidt_rank(&p.vector, d1, d0, 1e-10).unwrap())
            .collect();
        if ranks.len() != 1 || ranks != svd {
            bad.push(format!("({d1},{d0}) {lbl}"));
        }
    }
    (
        bad.is_empty(),
        format!(
            "{} cases, {} non-uniform or SVD-mismatched {:?}",
            cases.len(),
            bad.len(),
            bad
        ),
    )
}

fn criterion_5() -> Outcome {
    let rows = classification_table(2, 2).unwrap();
    let class = |k: usize, l: usize| rows.iter().find(|r| r.k == k && r.l == l).unwrap().class;
    let joint_expected: BTreeSet<(usize, usize)> = [(1, 1), (1, 3), (3, 1), (2, 2), (3, 3)].into();
    let fixed_expected = [(0, 1), (0, 2), (0, 3), (2, 1), (2, 3)];
    let ff_expected = [(1, 0), (3, 0), (1, 2), (3, 2)];
    let joint: BTreeSet<(usize, usize)> = rows
        .iter()
        .filter(|r| r.class == MeasurementClass::Joint)
        .map(|r| (r.k, r.l))
        .collect();
    let mut problems = Vec::new();
    if joint != joint_expected {
        problems.push(format!("Joint rows {joint:?}"));
    }
    for (k, l) in fixed_expected {
        if class(k, l) != MeasurementClass::SeparableFixed {
            problems.push(format!("S_{k}{l} is {:?}", class(k, l)));
        }
    }
    for (k, l) in ff_expected {
        if class(k, l) != MeasurementClass::SeparableFeedForward {
            problems.push(format!("S_{k}{l} is {:?}", class(k, l)));
        }
    }
    if problems.is_empty() {
        (true, "catalogue matches".into())
    } else {
        (
            false,
            format!(
                "{}; S_22 = σ_x⊗σ_z has product eigenvectors",
                problems.join("; ")
            ),
        )
    }
}

/// Oracle: `⟨j_x|ρ|j_x⟩` with the Fourier vectors written out directly.
fn global_sx(rho: &ComplexMatrix) -> Vec<f64> {
    let d = rho.rows();
    (0..d)
        .map(|j| {
            let v: Vec<Complex64> = (0..d)
                .map(|k| alpha(d, -((k * j) as i64)) / (d as f64).sqrt())
                .collect();
            let rv = rho.mul_vec(&v).unwrap();
            v.iter()
                .zip(&rv)
                .map(|(a, b)| a.conj() * b)
                .sum::<Complex64>()
                .re
        })
        .collect()
}

fn criterion_6() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for d in 4..=12 {
        for (d1, d0) in factorizations(d) {
            let plan = feed_forward_plan(d1, d0).unwrap();
            for seed in 0..50u64 {
                let mut rng = substream(seed, d as u64);
                let rho = if seed % 2 == 0 {
                    random_density_matrix(d, &mut rng)
                } else {
                    let psi = random_pure_state(d, &mut rng);
                    outer(&psi, &psi)
                };
                let ff = plan.exact_distribution(&rho).unwrap();
                let tv = 0.5
                    * ff.iter()
                        .zip(global_sx(&rho))
                        .map(|(a, b)| (a - b).abs())
                        .sum::<f64>();
                worst = worst.max(tv);
                runs += 1;
            }
        }
    }
    (worst < 1e-10, format!("{runs} states, max TV {worst:.1e}"))
}

fn criterion_7() -> Outcome {
    let mut exact_worst: f64 = 0.0;
    for d in [2, 4, 6] {
        for seed in 0..5 {
            let rho =
                DensityMatrix::new(random_density_matrix(d, &mut rng_from_seed(seed))).unwrap();
            let est = reconstruct(&exact_frequencies(&rho)).unwrap();
            exact_worst = exact_worst.max(trace_distance(est.matrix(), rho.matrix()).unwrap());
        }
    }
    let seeds = 20u64;
    let median_at = |n: u64| {
        median(
            (0..seeds)
                .map(|seed| {
                    let rho =
                        DensityMatrix::from_pure(&random_pure_state(4, &mut substream(seed, 0)))
                            .unwrap();
                    let counts =
                        simulate_counts(&rho, n, seed.wrapping_mul(1_000_003).wrapping_add(n));
                    let est = reconstruct(&counts.to_frequencies().unwrap()).unwrap();
                    trace_distance(est.matrix(), rho.matrix()).unwrap()
                })
                .collect(),
        )
    };
    let m5 = median_at(100_000);
    let ladder: Vec<f64> = [10_000, 20_000, 40_000]
        .iter()
        .map(|&n| median_at(n))
        .collect();
    let monotone = ladder.windows(2).all(|w| w[1] < w[0]);
    (
        exact_worst < 1e-9 && m5 < 0.05 && monotone,
        format!(
            "exact max {exact_worst:.1e}; median at 1e5 = {m5:.4}; medians 1e4/2e4/4e4 = {:.4}/{:.4}/{:.4}",
            ladder[0], ladder[1], ladder[2]
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (d1, d0) in [(2, 1), (2, 2), (2, 3)] {
        let d = (d1 * d0) as f64;
        let quiet = run_protocol(&ProtocolConfig {
            rounds: 24_000,
            d1,
            d0,
            seed: 11,
            eavesdropper: Eavesdropper::None,
        })
        .unwrap();
        let eve = run_protocol(&ProtocolConfig {
            rounds: 24_000,
            d1,
            d0,
            seed: 12,
            eavesdropper: Eavesdropper::InterceptResend,
        })
        .unwrap();
        let expected = (d - 1.0) / (2.0 * d);
        let n = eve.sifted_length as f64;
        let sigma = (expected * (1.0 - expected) / n).sqrt();
        let frac = quiet.sifted_length as f64 / quiet.rounds as f64;
        let frac_sigma = (0.25 / quiet.rounds as f64).sqrt();
        let pass = quiet.errors == 0
            && quiet.qber == 0.0
            && eve.sifted_length >= 10_000
            && (eve.qber - expected).abs() <= 3.0 * sigma
            && (frac - 0.5).abs() <= 3.0 * frac_sigma;
        ok &= pass;
        notes.push(format!(
            "d={d}: qber {:.0}/{:.4} (expect {expected:.4}±{:.4}), sifted {:.4}",
            quiet.qber,
            eve.qber,
            3.0 * sigma,
            frac
        ));
    }
    (ok, notes.join("; "))
}

fn pol(kind: char, b: usize) -> Vec<Complex64> {
    let s = FRAC_1_SQRT_2;
    let sign = if b == 0 { 1.0 } else { -1.0 };
    match kind {
        'z' if b == 0 => vec![c(1.0, 0.0), c(0.0, 0.0)],
        'z' => vec![c(0.0, 0.0), c(1.0, 0.0)],
        'x' => vec![c(s, 0.0), c(sign * s, 0.0)],
        _ => vec![c(s, 0.0), c(0.0, sign * s)],
    }
}

fn preset_states(name: &str) -> Vec<Vec<Complex64>> {
    let p = |a: char, b: usize, x: char, y: usize| kron_vec(&pol(a, b), &pol(x, y));
    let gamma = Complex64::from_polar(1.0, FRAC_PI_4);
    match name {
        "sz" => vec![
            p('z', 0, 'z', 0),
            p('z', 0, 'z', 1),
            p('z', 1, 'z', 0),
            p('z', 1, 'z', 1),
        ],
        "s21" => vec![
            p('y', 0, 'z', 1),
            p('y', 0, 'z', 0),
            p('y', 1, 'z', 1),
            p('y', 1, 'z', 0),
        ],
        "sx" => vec![
            p('x', 0, 'x', 0),
            p('x', 1, 'y', 0),
            p('x', 0, 'x', 1),
            p('x', 1, 'y', 1),
        ],
        _ => [(1, -1.0), (0, -1.0), (1, 1.0), (0, 1.0)]
            .iter()
            .map(|&(b, sign)| {
                let first = p('x', 0, 'z', b);
                let second = p('x', 1, 'z', 1 - b);
                first
                    .iter()
                    .zip(&second)
                    .map(|(u, v)| (u + c(0.0, sign) * gamma * v) * FRAC_1_SQRT_2)
                    .collect()
            })
            .collect(),
    }
}

fn criterion_9() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in ["sz", "s21", "sx", "sxsz"] {
        let circ = preset_device(name).unwrap();
        for (j, v) in preset_states(name).iter().enumerate() {
            let p = outcome_distribution(&circ, v).unwrap();
            for (o, q) in p.iter().enumerate() {
                worst = worst.max((q - if o == j { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    let circ = preset_device("sxsz").unwrap();
    let gamma = Complex64::from_polar(1.0, FRAC_PI_4);
    let i = c(0.0, 1.0);
    let mut derived_worst: f64 = 0.0;
    for seed in 0..20 {
        let psi = random_pure_state(4, &mut rng_from_seed(seed));
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        for (k, f) in [(2i32, i.powi(-1)), (3, i.powi(-3))] {
            let lbl = PauliLabel::new(4, k as usize, k as usize).unwrap();
            let got = derived_distribution(&circ, &psi, |m| (m / gamma).powi(k) * f).unwrap();
            let p = measurement_probabilities(lbl, &rho).unwrap().p;
            let pairs: Vec<(Complex64, f64)> = analytic_eigensystem(lbl)
                .pairs
                .iter()
                .map(|e| e.eigenvalue)
                .zip(p)
                .collect();
            let want = eigenvalue_distribution(&pairs);
            if got.len() != want.len()
                || got
                    .iter()
                    .zip(&want)
                    .any(|(a, b)| (a.0 - b.0).norm() > 1e-9)
            {
                return (false, format!("S_{k}{k} eigenvalue sets differ"));
            }
            for (a, b) in got.iter().zip(&want) {
                derived_worst = derived_worst.max((a.1 - b.1).abs());
            }
        }
    }
    (
        worst < 1e-9 && derived_worst < 1e-12,
        format!("max preset deviation {worst:.1e}; S_22/S_33 max deviation {derived_worst:.1e}"),
    )
}

fn criterion_10() -> Outcome {
    let circ = general_device(3, PauliLabel::new(6, 4, 3).unwrap()).unwrap();
    let mut fired = BTreeSet::new();
    let mut worst: f64 = 0.0;
    for (lambda, v) in worked_example() {
        let p = outcome_distribution(&circ, &v).unwrap();
        let (o, q) = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        worst = worst.max((q - 1.0).abs());
        let det = circ.detectors().iter().find(|d| d.outcome == o).unwrap();
        if (det.eigenvalue - lambda).norm() > 1e-9 {
            return (
                false,
                format!("detector {o} reports eigenvalue {:.4}", det.eigenvalue),
            );
        }
        fired.insert(o);
    }
    let mut reck_worst: f64 = 0.0;
    let mut within_bound = true;
    for m in 1..=16 {
        for seed in 0..3 {
            let u = random_unitary(m, &mut substream(seed, m as u64));
            let r = reck_decompose(&u).unwrap();
            within_bound &= r.mixers.len() <= m * (m - 1) / 2;
            reck_worst = reck_worst.max(r.reassemble().max_abs_diff(&u));
        }
    }
    (
        fired.len() == 6 && worst < 1e-9 && reck_worst < 1e-9 && within_bound,
        format!(
            "{} distinct detectors, max deviation {worst:.1e}; Reck max error {reck_worst:.1e} up to 16 modes",
            fired.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("worked d=6 S_43 basis via `eigen`", criterion_1),
        ("analytic vs numeric sweep d=2..12", criterion_2),
        ("structure law D1*D0 = d/f", criterion_3),
        ("uniform Schmidt rank equals SVD rank", criterion_4),
        ("d=4 measurement catalogue", criterion_5),
        ("feed-forward vs global S_x distribution", criterion_6),
        ("tomography round trip and convergence", criterion_7),
        ("key distribution QBER and sifting", criterion_8),
        ("optics presets and S_22/S_33 reuse", criterion_9),
        ("device compiler and Reck decomposition", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (pass, detail) = check();
        if !pass {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {detail}",
            if pass { "PASS" } else { "FAIL" },
            i + 1
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
