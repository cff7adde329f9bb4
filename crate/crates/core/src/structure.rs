//! Structural analysis of maximal violators.
//!
//! Given any scenario reaching `S = 4 sqrt(3)`, this module checks that the
//! observables preserve the eigenspaces of the marginals, that Alice's
//! observables anticommute on each eigenspace, and then extracts canonical
//! bases in which
//!
//! * Alice's observables are `Z`, `X`, `+-Y` on every qubit pair,
//! * Bob's observables are the transposed D-operators of Alice's, and
//! * the state is `sum_i lambda_i sum_p (|0 0> + |1 1>)`,
//!
//! recovering the classification data `(lambda_i, n_i, r_i)`.

use serde::Serialize;

use crate::elegant::{
    d_operator_matrices, qubit_matrices, CanonicalLayout, CanonicalPair, FamilyBlock, FamilySpec,
};
use crate::error::{EbiError, Result};
use crate::linalg::{self, kron, pauli_x, pauli_y, pauli_z, CMatrix, CVector, Side, I, ONE, ZERO};
use crate::scenario::{local_apply, Scenario, QUANTUM_BOUND};

/// Default tolerance for every structural check.
pub const DEFAULT_TOL: f64 = 1e-7;

/// Marginal eigenvalues below this belong to the kernel.
pub const KERNEL_CUTOFF: f64 = 1e-10;

/// One named residual compared against a threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            threshold,
            passed: residual < threshold,
        }
    }
}

/// A list of checks produced by one verification step.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CheckReport {
    pub checks: Vec<Check>,
}

impl CheckReport {
    pub fn push(&mut self, name: impl Into<String>, residual: f64, threshold: f64) {
        self.checks.push(Check::new(name, residual, threshold));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    fn into_result(self) -> Result<Self> {
        match self.first_failure() {
            Some(c) => Err(EbiError::CheckFailed {
                check: c.name.clone(),
                residual: c.residual,
            }),
            None => Ok(self),
        }
    }
}

/// A group of (numerically) degenerate eigenvalues of a marginal state.
#[derive(Debug, Clone)]
pub struct EigenCluster {
    /// Mean eigenvalue, i.e. `lambda^2` for a Schmidt block.
    pub weight: f64,
    /// Orthonormal basis of the eigenspace, as columns.
    pub basis: CMatrix,
    pub is_kernel: bool,
}

impl EigenCluster {
    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn projector(&self) -> CMatrix {
        &self.basis * &self.basis.adjoint()
    }
}

/// Clusters the spectrum of a density operator, largest eigenvalues first.
///
/// A new cluster starts when the gap to the previous eigenvalue exceeds
/// `max(1e-8, 1e-6 * largest)`. The cluster with mean below
/// [`KERNEL_CUTOFF`], if any, is flagged as the kernel and comes last.
pub fn eigen_clusters(rho: &CMatrix) -> Result<Vec<EigenCluster>> {
    let eig = linalg::hermitian_eig(&rho.hermitian_part())?;
    let n = eig.values.len();
    if n == 0 {
        return Ok(vec![]);
    }
    let largest = eig.values[n - 1];
    let gap = f64::max(1e-8, 1e-6 * largest);
    let mut groups: Vec<Vec<usize>> = vec![vec![n - 1]];
    for j in (0..n - 1).rev() {
        if eig.values[j + 1] - eig.values[j] > gap {
            groups.push(vec![j]);
        } else {
            groups.last_mut().expect("nonempty").push(j);
        }
    }
    let mut clusters = Vec::with_capacity(groups.len());
    for g in groups {
        let weight = g.iter().map(|&j| eig.values[j]).sum::<f64>() / g.len() as f64;
        let cols: Vec<CVector> = g.iter().map(|&j| eig.vector(j)).collect();
        clusters.push(EigenCluster {
            weight,
            basis: CMatrix::from_columns(&cols)?,
            is_kernel: weight < KERNEL_CUTOFF,
        });
    }
    Ok(clusters)
}

pub fn marginal_clusters(s: &Scenario, side: Side) -> Result<Vec<EigenCluster>> {
    let rho = linalg::reduced_state(s.state(), s.da(), s.db(), side)?;
    eigen_clusters(&rho)
}

/// `|S - 4 sqrt(3)| < tol`.
pub fn check_maximal(s: &Scenario, tol: f64) -> bool {
    (s.ebi_value() - QUANTUM_BOUND).abs() < tol
}

fn require_maximal(s: &Scenario, tol: f64) -> Result<()> {
    let value = s.ebi_value();
    let deficit = (value - QUANTUM_BOUND).abs();
    if deficit < tol {
        Ok(())
    } else {
        Err(EbiError::NotMaximal { value, deficit })
    }
}

/// Restriction `W^dagger M W` of an operator to the span of `W`'s columns.
fn restrict(m: &CMatrix, w: &CMatrix) -> CMatrix {
    m.compress(w)
}

/// Leakage `max |(I - P) M P|` of each observable (and each D-operator on
/// Alice's side) out of each marginal eigenspace.
pub fn check_support_preservation(s: &Scenario, tol: f64) -> Result<CheckReport> {
    require_maximal(s, tol)?;
    let mut report = CheckReport::default();
    let d_ops = d_operator_matrices(&[
        s.alice()[0].matrix().clone(),
        s.alice()[1].matrix().clone(),
        s.alice()[2].matrix().clone(),
    ]);
    let sides = [(Side::A, "A", s.da()), (Side::B, "B", s.db())];
    for (side, party, dim) in sides {
        let clusters = marginal_clusters(s, side)?;
        let mut ops: Vec<(String, &CMatrix)> = match side {
            Side::A => s
                .alice()
                .iter()
                .enumerate()
                .map(|(k, o)| (format!("A{}", k + 1), o.matrix()))
                .collect(),
            Side::B => s
                .bob()
                .iter()
                .enumerate()
                .map(|(l, o)| (format!("B{}", l + 1), o.matrix()))
                .collect(),
        };
        if side == Side::A {
            ops.extend(
                d_ops
                    .iter()
                    .enumerate()
                    .map(|(l, d)| (format!("D{}", l + 1), d)),
            );
        }
        let id = CMatrix::identity(dim);
        for (i, cl) in clusters.iter().enumerate() {
            let p = cl.projector();
            let q = &id - &p;
            for (label, m) in &ops {
                let leak = (&(&q * *m) * &p).max_abs();
                report.push(format!("support.{party}.cluster{i}.{label}"), leak, tol);
            }
        }
    }
    Ok(report)
}

/// Anticommutators `{A_k, A_l}` (k < l) and `D_l^2 - I` on each non-kernel
/// eigenspace of Alice's marginal.
pub fn check_anticommutation(s: &Scenario, tol: f64) -> Result<CheckReport> {
    require_maximal(s, tol)?;
    let mut report = CheckReport::default();
    let clusters = marginal_clusters(s, Side::A)?;
    for (i, cl) in clusters.iter().enumerate().filter(|(_, c)| !c.is_kernel) {
        let a: [CMatrix; 3] = std::array::from_fn(|k| restrict(s.alice()[k].matrix(), &cl.basis));
        for (k, res) in anticommutator_residuals(&a) {
            report.push(format!("anticommutation.cluster{i}.{k}"), res, tol);
        }
        for (l, d) in d_operator_matrices(&a).iter().enumerate() {
            report.push(
                format!("d_involution.cluster{i}.D{}", l + 1),
                d.involution_residual(),
                tol,
            );
        }
    }
    Ok(report)
}

/// `max |{A_k, A_l}|` for the pairs (1,2), (1,3), (2,3), without any
/// maximality precondition.
pub fn anticommutator_residuals(a: &[CMatrix; 3]) -> Vec<(String, f64)> {
    let mut out = Vec::with_capacity(3);
    for k in 0..3 {
        for l in (k + 1)..3 {
            out.push((
                format!("A{}A{}", k + 1, l + 1),
                a[k].anticommutator(&a[l]).max_abs(),
            ));
        }
    }
    out
}

/// Canonical bases recovered from a maximal violator.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub spec: FamilySpec,
    /// Columns: canonical `|0_A^{ip}>, |1_A^{ip}>` ordered by `(i, p, bit)`,
    /// followed by a basis of the kernel of Alice's marginal.
    pub alice_basis: CMatrix,
    /// Same layout on Bob's side.
    pub bob_basis: CMatrix,
    pub layout: CanonicalLayout,
    pub residuals: CheckReport,
}

impl BlockDecomposition {
    /// Canonical Alice vector `|bit_A^{j}>` of pair `j` (global pair index).
    pub fn alice_vector(&self, pair: usize, bit: usize) -> CVector {
        self.alice_basis.column(2 * pair + bit)
    }

    pub fn bob_vector(&self, pair: usize, bit: usize) -> CVector {
        self.bob_basis.column(2 * pair + bit)
    }
}

struct ClusterBlocks {
    /// `d_a x d_i`, canonical Alice vectors of this cluster.
    alice: CMatrix,
    bob: Vec<CVector>,
    signs: Vec<i8>,
}

/// Recovers the block structure of a maximal violator.
pub fn extract_blocks(s: &Scenario, tol: f64) -> Result<BlockDecomposition> {
    require_maximal(s, tol)?;
    check_support_preservation(s, tol)?.into_result()?;
    check_anticommutation(s, tol)?.into_result()?;

    let mut residuals = CheckReport::default();
    let clusters_a = marginal_clusters(s, Side::A)?;
    let clusters_b = marginal_clusters(s, Side::B)?;

    let mut blocks = Vec::new();
    let mut pairs = Vec::new();
    let mut alice_cols: Vec<CVector> = Vec::new();
    let mut bob_cols: Vec<CVector> = Vec::new();
    for (i, cl) in clusters_a.iter().filter(|c| !c.is_kernel).enumerate() {
        let extracted = extract_cluster(s, cl, i, tol, &mut residuals)?;
        let n = extracted.signs.len();
        let r = extracted.signs.iter().filter(|&&w| w > 0).count();
        let lambda = cl.weight.sqrt();
        for (p, &y_sign) in extracted.signs.iter().enumerate() {
            pairs.push(CanonicalPair {
                block: i,
                pair: p,
                y_sign,
                lambda,
            });
        }
        blocks.push(FamilyBlock { lambda, n, r });
        alice_cols.extend(extracted.alice.columns());
        bob_cols.extend(extracted.bob);
    }
    for cl in clusters_a.iter().filter(|c| c.is_kernel) {
        alice_cols.extend(cl.basis.columns());
    }
    for cl in clusters_b.iter().filter(|c| c.is_kernel) {
        bob_cols.extend(cl.basis.columns());
    }
    let alice_basis = CMatrix::from_columns(&alice_cols)?;
    let bob_basis = CMatrix::from_columns(&bob_cols)?;
    if alice_basis.cols() != s.da() || bob_basis.cols() != s.db() {
        return Err(EbiError::CheckFailed {
            check: "basis_completeness".into(),
            residual: f64::INFINITY,
        });
    }
    residuals.push("alice_basis_unitary", alice_basis.unitarity_residual(), tol);
    residuals.push("bob_basis_unitary", bob_basis.unitarity_residual(), tol);

    // Weights are cluster means; renormalize away the kernel's leftover mass.
    let total: f64 = blocks
        .iter()
        .map(|b| 2.0 * b.n as f64 * b.lambda * b.lambda)
        .sum();
    let scale = total.sqrt();
    for b in &mut blocks {
        b.lambda /= scale;
    }
    for p in &mut pairs {
        p.lambda /= scale;
    }
    let spec = FamilySpec::new(blocks)?;
    let decomposition = BlockDecomposition {
        spec,
        alice_basis,
        bob_basis,
        layout: CanonicalLayout { pairs },
        residuals,
    };
    decomposition.residuals.clone().into_result()?;
    Ok(decomposition)
}

fn extract_cluster(
    s: &Scenario,
    cl: &EigenCluster,
    block: usize,
    tol: f64,
    residuals: &mut CheckReport,
) -> Result<ClusterBlocks> {
    let w = &cl.basis;
    let a: [CMatrix; 3] = std::array::from_fn(|k| restrict(s.alice()[k].matrix(), w));
    let d = cl.dim();

    // (1) The +1 and -1 eigenspaces of A_1 must have equal dimension.
    let eig1 = linalg::hermitian_eig(&a[0])?;
    let plus: Vec<usize> = (0..d).filter(|&j| eig1.values[j] > 0.0).collect();
    if 2 * plus.len() != d {
        return Err(EbiError::UnequalEigenspaceSplit {
            block,
            plus: plus.len(),
            minus: d - plus.len(),
        });
    }
    let n = d / 2;

    // (2) Pair each +1 eigenvector e_p with f_p = A_2 e_p.
    let e: Vec<CVector> = plus.iter().rev().map(|&j| eig1.vector(j)).collect();
    let f: Vec<CVector> = e.iter().map(|v| a[1].apply(v)).collect();
    let paired = interleave(&e, &f)?;
    let id_n = CMatrix::identity(n);
    let a1p = restrict(&a[0], &paired);
    let a2p = restrict(&a[1], &paired);
    residuals.push(
        format!("block{block}.A1_is_Z"),
        (&a1p - &kron(&id_n, &pauli_z())).max_abs(),
        tol,
    );
    residuals.push(
        format!("block{block}.A2_is_X"),
        (&a2p - &kron(&id_n, &pauli_x())).max_abs(),
        tol,
    );

    // (3) A_3 = Omega (x) Y with Omega Hermitian.
    let a3p = restrict(&a[2], &paired);
    let mut omega = CMatrix::zeros(n, n);
    for p1 in 0..n {
        for p2 in 0..n {
            omega[(p1, p2)] = I * a3p[(2 * p1, 2 * p2 + 1)];
        }
    }
    let omega = omega.hermitian_part();
    let non_y = (&a3p - &kron(&omega, &pauli_y())).max_abs();
    if non_y >= tol {
        return Err(EbiError::NonYBlock {
            block,
            residual: non_y,
        });
    }
    residuals.push(format!("block{block}.A3_is_OmegaY"), non_y, tol);

    // (4) Diagonalize Omega; +1 eigenvalues first.
    let eig_omega = linalg::hermitian_eig(&omega)?;
    let order: Vec<usize> = (0..n).rev().collect();
    let mut signs = Vec::with_capacity(n);
    let mut omega_dev = 0.0f64;
    let mut u_cols = Vec::with_capacity(n);
    for &j in &order {
        let w_j = eig_omega.values[j];
        let sign: i8 = if w_j > 0.0 { 1 } else { -1 };
        omega_dev = omega_dev.max((w_j - f64::from(sign)).abs());
        signs.push(sign);
        u_cols.push(fix_phase(&eig_omega.vector(j)));
    }
    if omega_dev >= tol {
        return Err(EbiError::NonYBlock {
            block,
            residual: omega_dev,
        });
    }
    residuals.push(format!("block{block}.Omega_eigenvalues"), omega_dev, tol);

    // (5) Rotate the pairs: e'_q = sum_p U[p][q] e_p, f'_q = A_2 e'_q.
    let mut e_rot = Vec::with_capacity(n);
    let mut f_rot = Vec::with_capacity(n);
    for u in &u_cols {
        let mut v = CVector::zeros(d);
        for (p, ep) in e.iter().enumerate() {
            v = &v + &ep.scale(u[p]);
        }
        f_rot.push(a[1].apply(&v));
        e_rot.push(v);
    }
    let canonical_local = interleave(&e_rot, &f_rot)?;
    let alice = w * &canonical_local;

    let target: Vec<[CMatrix; 3]> = signs.iter().map(|&sg| qubit_matrices(sg).0).collect();
    let mut alice_dev = 0.0f64;
    for (k, ak) in a.iter().enumerate() {
        let got = restrict(ak, &canonical_local);
        let want = block_diag(&target.iter().map(|t| t[k].clone()).collect::<Vec<_>>());
        alice_dev = alice_dev.max((&got - &want).max_abs());
    }
    residuals.push(format!("block{block}.alice_canonical"), alice_dev, tol);

    // (6) Bob's canonical vectors |s_B> = (<s_A| (x) I) psi / lambda.
    let mut bob = Vec::with_capacity(d);
    for col in 0..d {
        let s_a = alice.column(col);
        let v = contract_alice(s.state(), s.da(), s.db(), &s_a);
        let norm = v.norm();
        bob.push(v.scale(ONE / norm));
    }
    let bob_mat = CMatrix::from_columns(&bob)?;
    let d_alice = d_operator_matrices(&[
        restrict(s.alice()[0].matrix(), &alice),
        restrict(s.alice()[1].matrix(), &alice),
        restrict(s.alice()[2].matrix(), &alice),
    ]);
    let bob_target: Vec<[CMatrix; 4]> = signs.iter().map(|&sg| qubit_matrices(sg).1).collect();
    let mut transpose_dev = 0.0f64;
    for (l, bl) in s.bob().iter().enumerate() {
        let got = restrict(bl.matrix(), &bob_mat);
        let via_transpose = (&got - &d_alice[l].transpose()).max_abs();
        let want = block_diag(&bob_target.iter().map(|t| t[l].clone()).collect::<Vec<_>>());
        let via_formula = (&got - &want).max_abs();
        transpose_dev = transpose_dev.max(via_transpose).max(via_formula);
    }
    if transpose_dev >= tol {
        return Err(EbiError::TransposeMismatch {
            block,
            residual: transpose_dev,
        });
    }
    residuals.push(format!("block{block}.bob_transpose"), transpose_dev, tol);

    Ok(ClusterBlocks { alice, bob, signs })
}

/// Columns `(e_1, f_1, e_2, f_2, ...)`.
fn interleave(e: &[CVector], f: &[CVector]) -> Result<CMatrix> {
    let cols: Vec<CVector> = e
        .iter()
        .zip(f)
        .flat_map(|(a, b)| [a.clone(), b.clone()])
        .collect();
    CMatrix::from_columns(&cols)
}

/// Makes the first significant component real and positive.
fn fix_phase(v: &CVector) -> CVector {
    let max = v.max_abs();
    match v.entries().iter().find(|z| z.norm() > 1e-6 * max) {
        Some(z) => v.scale(z.conj() / z.norm()),
        None => v.clone(),
    }
}

fn block_diag(blocks: &[CMatrix]) -> CMatrix {
    let n: usize = blocks.iter().map(CMatrix::rows).sum();
    let mut out = CMatrix::zeros(n, n);
    let mut off = 0;
    for b in blocks {
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                out[(off + i, off + j)] = b[(i, j)];
            }
        }
        off += b.rows();
    }
    out
}

/// `(<a| (x) I) psi`.
fn contract_alice(psi: &CVector, da: usize, db: usize, a: &CVector) -> CVector {
    let mut out = vec![ZERO; db];
    for (ia, ca) in a.entries().iter().enumerate().take(da) {
        let ca = ca.conj();
        for (ib, o) in out.iter_mut().enumerate() {
            *o += ca * psi[ia * db + ib];
        }
    }
    CVector::from_vec(out)
}

/// `|psi - sum_i lambda_i sum_p (|0 0> + |1 1>)|` with the state expressed in
/// the canonical bases.
pub fn verify_state_form(s: &Scenario, d: &BlockDecomposition, _tol: f64) -> f64 {
    let canonical = local_apply(
        s.state(),
        s.da(),
        s.db(),
        &d.alice_basis.adjoint(),
        &d.bob_basis.adjoint(),
    );
    let mut target = CVector::zeros(s.da() * s.db());
    for (j, pair) in d.layout.pairs.iter().enumerate() {
        for bit in 0..2 {
            let idx = 2 * j + bit;
            target[idx * s.db() + idx] = ONE * pair.lambda;
        }
    }
    (&canonical - &target).norm()
}

/// Full verification pipeline output.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub ebi_value: f64,
    pub checks: Vec<Check>,
    pub spec: Option<FamilySpec>,
    pub error: Option<String>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Runs maximality, support preservation, anticommutation, extraction and
/// the state-form check, collecting every residual.
pub fn verify_scenario(s: &Scenario, tol: f64) -> (VerificationReport, Option<BlockDecomposition>) {
    let mut checks = vec![Check::new(
        "maximal",
        (s.ebi_value() - QUANTUM_BOUND).abs(),
        tol,
    )];
    let outcome = (|| -> Result<BlockDecomposition> {
        require_maximal(s, tol)?;
        let support = check_support_preservation(s, tol)?;
        checks.extend(support.checks.iter().cloned());
        support.into_result()?;
        let anti = check_anticommutation(s, tol)?;
        checks.extend(anti.checks.iter().cloned());
        anti.into_result()?;
        let d = extract_blocks(s, tol)?;
        checks.extend(d.residuals.checks.iter().cloned());
        let state_res = verify_state_form(s, &d, tol);
        let c = Check::new("state_form", state_res, tol);
        let ok = c.passed;
        checks.push(c);
        if !ok {
            return Err(EbiError::CheckFailed {
                check: "state_form".into(),
                residual: state_res,
            });
        }
        Ok(d)
    })();
    let ebi_value = s.ebi_value();
    match outcome {
        Ok(d) => (
            VerificationReport {
                ebi_value,
                checks,
                spec: Some(d.spec.clone()),
                error: None,
                passed: true,
            },
            Some(d),
        ),
        Err(e) => (
            VerificationReport {
                ebi_value,
                checks,
                spec: None,
                error: Some(e.name().to_string()),
                passed: false,
            },
            None,
        ),
    }
}

/// Like [`verify_scenario`] but surfacing the first failure as an error.
pub fn verify_strict(s: &Scenario, tol: f64) -> Result<BlockDecomposition> {
    require_maximal(s, tol)?;
    let d = extract_blocks(s, tol)?;
    let res = verify_state_form(s, &d, tol);
    if res >= tol {
        return Err(EbiError::CheckFailed {
            check: "state_form".into(),
            residual: res,
        });
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elegant::{build_family, reference_experiment};
    use crate::scenario::{classical_max_bruteforce, Observable};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(blocks: &[(f64, usize, usize)]) -> FamilySpec {
        FamilySpec::new(
            blocks
                .iter()
                .map(|&(lambda, n, r)| FamilyBlock { lambda, n, r })
                .collect(),
        )
        .unwrap()
    }

    fn scramble(s: &Scenario, seed: u64) -> Scenario {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ua = linalg::random_unitary(&mut rng, s.da());
        let ub = linalg::random_unitary(&mut rng, s.db());
        s.local_rotate(&ua, &ub).unwrap()
    }

    #[test]
    fn maximality_examples() {
        assert!(check_maximal(&reference_experiment(), 1e-9));
        let (_, strat) = classical_max_bruteforce();
        assert!(!check_maximal(&strat.to_scenario(), 1e-9));
        let z = Observable::new(pauli_z()).unwrap();
        let degenerate = reference_experiment().with_alice(2, z).unwrap();
        assert!(!check_maximal(&degenerate, 1e-9));
        assert!(matches!(
            check_anticommutation(&degenerate, 1e-7),
            Err(EbiError::NotMaximal { .. })
        ));
        let a = degenerate.alice();
        let res = anticommutator_residuals(&[
            a[0].matrix().clone(),
            a[1].matrix().clone(),
            a[2].matrix().clone(),
        ]);
        // {Z, Z} = 2 I
        assert!((res[1].1 - 2.0).abs() < 1e-15);
    }

    #[test]
    fn reference_support_is_a_single_cluster() {
        let s = reference_experiment();
        let clusters = marginal_clusters(&s, Side::A).unwrap();
        assert_eq!(clusters.len(), 1);
        let rep = check_support_preservation(&s, 1e-9).unwrap();
        assert!(rep.max_residual() < 1e-15);
        let anti = check_anticommutation(&s, 1e-9).unwrap();
        assert!(anti.max_residual() < 1e-15);
    }

    #[test]
    fn two_lambda_family_has_two_clusters() {
        let (fam, _) = build_family(&spec(&[
            ((3.0f64 / 8.0).sqrt(), 1, 1),
            ((1.0f64 / 8.0).sqrt(), 1, 0),
        ]))
        .unwrap();
        let clusters = marginal_clusters(&fam, Side::A).unwrap();
        assert_eq!(clusters.iter().filter(|c| !c.is_kernel).count(), 2);
        let rep = check_support_preservation(&fam, 1e-9).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }

    #[test]
    fn two_pair_block_anticommutes() {
        let (fam, _) = build_family(&spec(&[(0.5, 2, 1)])).unwrap();
        assert!(check_anticommutation(&fam, 1e-7).unwrap().max_residual() < 1e-12);
    }

    #[test]
    fn extraction_of_single_pairs() {
        let d = extract_blocks(&reference_experiment(), DEFAULT_TOL).unwrap();
        assert_eq!(d.spec.blocks.len(), 1);
        assert_eq!((d.spec.blocks[0].n, d.spec.blocks[0].r), (1, 1));
        assert!((d.spec.blocks[0].lambda - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(verify_state_form(&reference_experiment(), &d, DEFAULT_TOL) < 1e-12);

        let (fam, _) = build_family(&spec(&[(std::f64::consts::FRAC_1_SQRT_2, 1, 0)])).unwrap();
        let d = extract_blocks(&fam, DEFAULT_TOL).unwrap();
        assert_eq!(d.spec.blocks[0].r, 0);
    }

    #[test]
    fn extraction_survives_local_scrambling() {
        let sp = spec(&[
            ((3.0f64 / 8.0).sqrt(), 1, 1),
            ((1.0f64 / 16.0).sqrt(), 2, 1),
        ]);
        let (fam, _) = build_family(&sp).unwrap();
        for seed in 0..5 {
            let rotated = scramble(&fam, seed);
            let d = extract_blocks(&rotated, DEFAULT_TOL).unwrap();
            assert_eq!(d.spec.blocks.len(), 2);
            for (got, want) in d.spec.blocks.iter().zip(&sp.blocks) {
                assert_eq!((got.n, got.r), (want.n, want.r));
                assert!((got.lambda - want.lambda).abs() < 1e-8);
            }
            assert!(verify_state_form(&rotated, &d, DEFAULT_TOL) < 1e-8);
        }
    }

    #[test]
    fn extraction_with_kernel() {
        // Embed a qubit reference experiment into a qutrit on each side.
        let s = reference_experiment();
        let embed = |m: &CMatrix| {
            let mut big = CMatrix::identity(3);
            for i in 0..2 {
                for j in 0..2 {
                    big[(i, j)] = m[(i, j)];
                }
            }
            Observable::new(big).unwrap()
        };
        let alice = std::array::from_fn(|k| embed(s.alice()[k].matrix()));
        let bob = std::array::from_fn(|l| embed(s.bob()[l].matrix()));
        let mut psi = CVector::zeros(9);
        psi[0] = ONE * std::f64::consts::FRAC_1_SQRT_2;
        psi[4] = ONE * std::f64::consts::FRAC_1_SQRT_2;
        let big = Scenario::new(3, 3, psi, alice, bob).unwrap();
        let rotated = scramble(&big, 42);
        let d = extract_blocks(&rotated, DEFAULT_TOL).unwrap();
        assert_eq!(d.spec.dim(), 2);
        assert!(d.alice_basis.unitarity_residual() < 1e-8);
        assert!(d.bob_basis.unitarity_residual() < 1e-8);
        assert!(verify_state_form(&rotated, &d, DEFAULT_TOL) < 1e-8);
    }

    #[test]
    fn d_operators_do_not_couple_clusters() {
        let (fam, _) = build_family(&spec(&[(0.6, 1, 1), ((0.14f64).sqrt(), 1, 0)])).unwrap();
        let rotated = scramble(&fam, 3);
        let clusters = marginal_clusters(&rotated, Side::A).unwrap();
        let d = crate::elegant::d_operators(rotated.alice());
        for dl in &d.d {
            let cross = restrict_pair(dl, &clusters[0].basis, &clusters[1].basis);
            assert!(cross < 1e-8);
        }
    }

    fn restrict_pair(m: &CMatrix, u: &CMatrix, v: &CMatrix) -> f64 {
        (&(&u.adjoint() * m) * v).max_abs()
    }

    #[test]
    fn verify_pipeline_reports_not_maximal() {
        let (_, strat) = classical_max_bruteforce();
        let (rep, d) = verify_scenario(&strat.to_scenario(), DEFAULT_TOL);
        assert!(d.is_none());
        assert!(!rep.passed);
        assert_eq!(rep.error.as_deref(), Some("NotMaximal"));
        assert_eq!(rep.checks[0].name, "maximal");
    }

    #[test]
    fn eigen_clusters_gap_rule() {
        let rho = CMatrix::from_diag(&[ONE * 0.3, ONE * (0.3 + 5e-9), ONE * 0.2, ONE * 0.2, ZERO]);
        let cl = eigen_clusters(&rho).unwrap();
        assert_eq!(
            cl.iter().map(EigenCluster::dim).collect::<Vec<_>>(),
            vec![2, 2, 1]
        );
        assert!(cl[2].is_kernel && !cl[0].is_kernel);
    }
}
