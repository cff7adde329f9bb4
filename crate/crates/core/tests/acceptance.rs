//! Acceptance suite. Every criterion prints one PASS/FAIL line.

use ebi_core::elegant::{
    bloch_export, build_family, d_operators, reference_experiment, FamilyBlock, FamilySpec,
};
use ebi_core::linalg::{self, kron, CMatrix};
use ebi_core::optimizer::{seesaw_sweep, SeesawConfig, DEFAULT_RETRIES, SUCCESS_TOL};
use ebi_core::scenario::{
    classical_max_bruteforce, ClassicalStrategy, CorrelationTable, Observable, Scenario,
    QUANTUM_BOUND,
};
use ebi_core::selftest::{
    correlator_prediction, equivalence_check, eve_indistinguishability, junk_split,
    necessary_correlator, reference_correlator, swap_isometry, DEFAULT_THRESHOLD,
};
use ebi_core::structure::{extract_blocks, verify_scenario, DEFAULT_TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SPEC_SEED: u64 = 2024;
const SPEC_COUNT: usize = 50;

fn report(id: u32, title: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id:2} {title}: {detail}");
    assert!(pass, "criterion {id} failed: {detail}");
}

fn random_specs(seed: u64, count: usize) -> Vec<FamilySpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| FamilySpec::random(&mut rng)).collect()
}

fn scramble(s: &Scenario, rng: &mut ChaCha8Rng) -> Scenario {
    let ua = linalg::random_unitary(rng, s.da());
    let ub = linalg::random_unitary(rng, s.db());
    s.local_rotate(&ua, &ub).unwrap()
}

#[test]
fn criterion_01_quantum_bound() {
    let r = reference_experiment();
    let eig = linalg::hermitian_eig(&r.bell_operator()).unwrap();
    let lmax = eig.max_value();
    let expect = 4.0 * 3f64.sqrt();
    let value = r.ebi_value();
    let pass = (lmax - expect).abs() < 1e-9 && (value - expect).abs() < 1e-9;
    report(
        1,
        "reference lambda_max and <phi+|Sigma|phi+> equal 4 sqrt3",
        pass,
        format!("lambda_max {lmax:.15}, value {value:.15}, target {expect:.15}"),
    );
}

#[test]
fn criterion_02_classical_bound() {
    let (best, _) = classical_max_bruteforce();
    let count = ClassicalStrategy::all().count();
    report(
        2,
        "deterministic strategies reach at most 6",
        best == 6 && count == 128,
        format!("max {best} over {count} strategies"),
    );
}

#[test]
fn criterion_03_family_completeness() {
    let target = CorrelationTable::elegant();
    let mut worst_value = 0.0f64;
    let mut worst_table = 0.0f64;
    for spec in random_specs(SPEC_SEED, SPEC_COUNT) {
        let (s, _) = build_family(&spec).unwrap();
        worst_value = worst_value.max((s.ebi_value() - QUANTUM_BOUND).abs());
        worst_table = worst_table.max(s.correlation_table().unwrap().max_abs_diff(&target));
    }
    report(
        3,
        "family members reach 4 sqrt3 with the C/sqrt3 table",
        worst_value < 1e-9 && worst_table < 1e-9,
        format!("{SPEC_COUNT} specs, max |S - 4 sqrt3| {worst_value:.2e}, max table error {worst_table:.2e}"),
    );
}

#[test]
fn criterion_04_extraction_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(SPEC_SEED + 1);
    let mut failures = Vec::new();
    let mut worst_lambda = 0.0f64;
    for (i, spec) in random_specs(SPEC_SEED, SPEC_COUNT).into_iter().enumerate() {
        let (s, _) = build_family(&spec).unwrap();
        for (label, scen) in [("plain", s.clone()), ("scrambled", scramble(&s, &mut rng))] {
            match extract_blocks(&scen, DEFAULT_TOL) {
                Ok(d) => {
                    let same_shape = d.spec.blocks.len() == spec.blocks.len()
                        && d.spec
                            .blocks
                            .iter()
                            .zip(&spec.blocks)
                            .all(|(a, b)| a.n == b.n && a.r == b.r);
                    let dl = d
                        .spec
                        .blocks
                        .iter()
                        .zip(&spec.blocks)
                        .map(|(a, b)| (a.lambda - b.lambda).abs())
                        .fold(0.0, f64::max);
                    worst_lambda = worst_lambda.max(dl);
                    if !same_shape || dl >= 1e-8 {
                        failures.push(format!("spec {i} {label}"));
                    }
                }
                Err(e) => failures.push(format!("spec {i} {label}: {}", e.name())),
            }
        }
    }
    report(
        4,
        "extract_blocks recovers (lambda, n, r) before and after scrambling",
        failures.is_empty(),
        format!(
            "{} extractions, max lambda error {worst_lambda:.2e}, failures {failures:?}",
            2 * SPEC_COUNT
        ),
    );
}

#[test]
fn criterion_05_operator_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let (da, db) = (2 + trial % 3, 2 + (trial / 3) % 3);
        let alice: [Observable; 3] =
            std::array::from_fn(|_| Observable::random(&mut rng, da, 1e-12));
        let bob: [Observable; 4] = std::array::from_fn(|_| Observable::random(&mut rng, db, 1e-12));
        let sigma = ebi_core::scenario::bell_operator(&alice, &bob);
        let d = d_operators(&alice);
        let (ia, ib) = (CMatrix::identity(da), CMatrix::identity(db));
        let mut lhs = CMatrix::zeros(da * db, da * db);
        for (dl, bl) in d.d.iter().zip(&bob) {
            let diff = &kron(dl, &ib) - &kron(&ia, bl.matrix());
            lhs = &lhs + &(&diff * &diff);
        }
        let rhs = &CMatrix::identity(da * db).scale_re(8.0) - &sigma.scale_re(2.0 / 3f64.sqrt());
        worst = worst.max((&lhs - &rhs).frobenius_norm());
    }
    report(
        5,
        "sum_l (D_l x I - I x B_l)^2 = 8 I - (2/sqrt3) Sigma",
        worst < 1e-8,
        format!("50 random involution sets, max Frobenius residual {worst:.2e}"),
    );
}

#[test]
fn criterion_06_correlator_oracle() {
    let mut worst_oracle = 0.0f64;
    let mut ok_split = true;
    let mut counts = (0, 0);
    let reference = reference_correlator();
    for spec in random_specs(SPEC_SEED, SPEC_COUNT) {
        let (s, _) = build_family(&spec).unwrap();
        let c = necessary_correlator(&s);
        worst_oracle = worst_oracle.max((c - correlator_prediction(&spec)).norm());
        if spec.is_untransposed() {
            counts.0 += 1;
            ok_split &= (c - reference).norm() < 1e-9;
        } else {
            counts.1 += 1;
            let gap = 4.0 * spec.lambda_min().powi(2) / 3f64.sqrt();
            ok_split &= (c - reference).norm() >= gap - 1e-9;
        }
    }
    report(
        6,
        "discriminating correlator matches its closed form",
        worst_oracle < 1e-9 && ok_split && counts.0 > 0 && counts.1 > 0,
        format!(
            "max oracle error {worst_oracle:.2e}; {} all-r=n specs, {} others, separation holds: {ok_split}",
            counts.0, counts.1
        ),
    );
}

#[test]
fn criterion_07_non_self_testing_witness() {
    let block = |lambda, n, r| FamilyBlock { lambda, n, r };
    let transposed = FamilySpec::new(vec![block(0.5, 2, 1)]).unwrap();
    let untransposed = FamilySpec::new(vec![block(std::f64::consts::FRAC_1_SQRT_2, 1, 1)]).unwrap();
    let r = reference_experiment();
    let (t, _) = build_family(&transposed).unwrap();
    let table_diff = t
        .correlation_table()
        .unwrap()
        .max_abs_diff(&r.correlation_table().unwrap());
    let bad = equivalence_check(&swap_isometry(&t).unwrap(), DEFAULT_THRESHOLD).product_residual;
    let (u, _) = build_family(&untransposed).unwrap();
    let good = equivalence_check(&swap_isometry(&u).unwrap(), DEFAULT_THRESHOLD).product_residual;
    report(
        7,
        "same statistics, inequivalent under the SWAP isometry",
        table_diff < 1e-9 && bad > 1e-2 && good < 1e-8,
        format!("table diff {table_diff:.2e}, residual with r<n {bad:.3e}, residual with r=n {good:.2e}"),
    );
}

#[test]
fn criterion_08_eve_indistinguishability() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut specs = Vec::new();
    while specs.len() < 10 {
        let s = FamilySpec::random(&mut rng);
        if s.is_mixed_signature() {
            specs.push(s);
        }
    }
    let mut worst_distance = 0.0f64;
    let mut ranks_ok = true;
    for spec in &specs {
        let (s, _) = build_family(spec).unwrap();
        let out = swap_isometry(&s).unwrap();
        let split = junk_split(&out, &extract_blocks(&s, DEFAULT_TOL).unwrap());
        let both = split.chi1.norm() > 1e-8 && split.chi2.norm() > 1e-8;
        for e in eve_indistinguishability(&out).unwrap() {
            worst_distance = worst_distance.max(e.trace_distance);
            if both {
                ranks_ok &= e.schmidt_rank == [2, 2];
            }
        }
    }
    report(
        8,
        "Eve's conditional states coincide; junk entangled with reference",
        worst_distance < 1e-8 && ranks_ok,
        format!("10 mixed specs, max trace distance {worst_distance:.2e}, Schmidt rank 2 everywhere: {ranks_ok}"),
    );
}

#[test]
fn criterion_09_seesaw_recovery() {
    let cfg = SeesawConfig::new(2, 2, 0);
    let slots = seesaw_sweep(&cfg, 100, DEFAULT_RETRIES);
    let first_try = slots.iter().filter(|s| s.attempts[0].is_success()).count();
    let tried: usize = slots.iter().map(|s| s.attempts.len()).sum();
    let mut successes = 0;
    let mut verified = 0;
    let mut signatures = [0usize; 2];
    let mut max_iters = 0;
    for slot in &slots {
        let r = slot.result();
        if (r.value - QUANTUM_BOUND).abs() >= SUCCESS_TOL || r.iterations > 500 {
            continue;
        }
        successes += 1;
        max_iters = max_iters.max(r.iterations);
        let (rep, d) = verify_scenario(&r.scenario, DEFAULT_TOL);
        if let (true, Some(d)) = (rep.passed, d) {
            verified += 1;
            if d.spec.blocks.len() == 1 && d.spec.blocks[0].n == 1 {
                signatures[d.spec.blocks[0].r] += 1;
            }
        }
    }
    report(
        9,
        "seesaw reaches 4 sqrt3 and both signatures appear",
        successes >= 90 && verified == successes && signatures[0] > 0 && signatures[1] > 0,
        format!(
            "{successes}/100 runs within {SUCCESS_TOL:.0e} ({first_try} on the first seed, {tried} seeds tried), \
             {verified} verified, max {max_iters} sweeps, r1=0: {}, r1=1: {}",
            signatures[0], signatures[1]
        ),
    );
}

#[test]
fn criterion_10_bloch_geometry() {
    let points = bloch_export(&reference_experiment()).unwrap();
    let (alice, bob): (Vec<_>, Vec<_>) = points.iter().partition(|p| p.label.starts_with('A'));
    let mut axes_ok = alice.len() == 6;
    for p in &alice {
        let nonzero = p.vector.iter().filter(|x| x.abs() > 1e-12).count();
        let unit = p.vector.iter().any(|x| (x.abs() - 1.0).abs() < 1e-12);
        axes_ok &= nonzero == 1 && unit;
    }
    let k = 1.0 / 3f64.sqrt();
    let mut cube_ok = bob.len() == 8;
    let mut corners = Vec::new();
    for p in &bob {
        cube_ok &= p.vector.iter().all(|x| (x.abs() - k).abs() < 1e-12);
        corners.push(p.vector.map(|x| x.signum() as i8));
    }
    corners.sort();
    corners.dedup();
    cube_ok &= corners.len() == 8;
    let mut worst_sic = 0.0f64;
    for sign in ['+', '-'] {
        let tet: Vec<_> = bob.iter().filter(|p| p.label.ends_with(sign)).collect();
        for i in 0..tet.len() {
            for j in i + 1..tet.len() {
                worst_sic = worst_sic.max((tet[i].dot(tet[j]) + 1.0 / 3.0).abs());
            }
        }
    }
    report(
        10,
        "octahedron, cube and two SIC tetrahedra",
        axes_ok && cube_ok && worst_sic < 1e-9,
        format!("axes ok {axes_ok}, cube ok {cube_ok}, max |overlap + 1/3| {worst_sic:.2e}"),
    );
}
