//! The 3x4 dichotomic bipartite scenario and the elegant Bell functional.
//!
//! Alice holds three observables and Bob four; all of them are Hermitian
//! involutions. Observable indices in this module are zero-based, so the
//! correlator usually written `E_11` is `correlator(0, 0)`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EbiError, Result};
use crate::linalg::{self, kron, CMatrix, CVector, ONE, ZERO};

/// Sign pattern of the functional, `S = sum_kl C[k][l] E_kl`.
pub const EBI_COEFFS: [[i8; 4]; 3] = [[1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]];

/// Largest value of `S` attainable by local deterministic strategies.
pub const CLASSICAL_BOUND: f64 = 6.0;

/// Largest quantum value of `S`, `4 sqrt(3)`.
pub const QUANTUM_BOUND: f64 = 6.928_203_230_275_509;

pub const OBSERVABLE_TOL: f64 = 1e-9;
pub const NORM_TOL: f64 = 1e-10;
pub const IMAG_TOL: f64 = 1e-9;

/// Measurement outcome of a dichotomic observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Outcome::Plus => '+',
            Outcome::Minus => '-',
        }
    }
}

/// A +-1 valued projective measurement, stored as a Hermitian involution.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
}

impl Observable {
    /// Validates Hermiticity and `M^2 = I` to within [`OBSERVABLE_TOL`].
    /// The stored matrix is the exact Hermitian part of the input.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(EbiError::InvalidObservable(format!(
                "{}x{} matrix is not square",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm = matrix.hermitian_residual();
        if herm > OBSERVABLE_TOL {
            return Err(EbiError::InvalidObservable(format!(
                "Hermiticity residual {herm:.3e}"
            )));
        }
        let matrix = matrix.hermitian_part();
        let inv = matrix.involution_residual();
        if inv > OBSERVABLE_TOL {
            return Err(EbiError::InvalidObservable(format!(
                "involution residual {inv:.3e}"
            )));
        }
        Ok(Self { matrix })
    }

    /// Random involution: spectral sign of a random Hermitian matrix.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize, zero_tol: f64) -> Self {
        let h = linalg::random_hermitian(rng, dim);
        let s = linalg::sign_operator(&h, zero_tol).expect("hermitian by construction");
        Self::new(s.matrix).expect("sign operator is an involution")
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Outcome projector `(I +- M) / 2`.
    pub fn projector(&self, outcome: Outcome) -> CMatrix {
        let id = CMatrix::identity(self.dim());
        match outcome {
            Outcome::Plus => (&id + &self.matrix).scale_re(0.5),
            Outcome::Minus => (&id - &self.matrix).scale_re(0.5),
        }
    }

    pub fn conjugate_by(&self, u: &CMatrix) -> Result<Self> {
        Self::new(self.matrix.conjugate_by(u))
    }
}

/// Pure bipartite state with three observables for Alice and four for Bob.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    da: usize,
    db: usize,
    state: CVector,
    alice: [Observable; 3],
    bob: [Observable; 4],
}

impl Scenario {
    pub fn new(
        da: usize,
        db: usize,
        state: CVector,
        alice: [Observable; 3],
        bob: [Observable; 4],
    ) -> Result<Self> {
        if state.dim() != da * db {
            return Err(EbiError::DimensionMismatch(format!(
                "state of dimension {} for a {}x{} scenario",
                state.dim(),
                da,
                db
            )));
        }
        if let Some(a) = alice.iter().find(|a| a.dim() != da) {
            return Err(EbiError::DimensionMismatch(format!(
                "Alice observable of dimension {} in a scenario with dA = {}",
                a.dim(),
                da
            )));
        }
        if let Some(b) = bob.iter().find(|b| b.dim() != db) {
            return Err(EbiError::DimensionMismatch(format!(
                "Bob observable of dimension {} in a scenario with dB = {}",
                b.dim(),
                db
            )));
        }
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(EbiError::NotNormalized(norm));
        }
        Ok(Self {
            da,
            db,
            state,
            alice,
            bob,
        })
    }

    pub fn da(&self) -> usize {
        self.da
    }

    pub fn db(&self) -> usize {
        self.db
    }

    pub fn state(&self) -> &CVector {
        &self.state
    }

    pub fn alice(&self) -> &[Observable; 3] {
        &self.alice
    }

    pub fn bob(&self) -> &[Observable; 4] {
        &self.bob
    }

    pub fn with_state(&self, state: CVector) -> Result<Self> {
        Self::new(
            self.da,
            self.db,
            state,
            self.alice.clone(),
            self.bob.clone(),
        )
    }

    pub fn with_alice(&self, k: usize, obs: Observable) -> Result<Self> {
        let mut alice = self.alice.clone();
        alice[k] = obs;
        Self::new(
            self.da,
            self.db,
            self.state.clone(),
            alice,
            self.bob.clone(),
        )
    }

    pub fn with_bob(&self, l: usize, obs: Observable) -> Result<Self> {
        let mut bob = self.bob.clone();
        bob[l] = obs;
        Self::new(
            self.da,
            self.db,
            self.state.clone(),
            self.alice.clone(),
            bob,
        )
    }

    /// Applies local unitaries: observables `M -> U M U^dagger`, state
    /// `psi -> (U_A (x) U_B) psi`.
    pub fn local_rotate(&self, ua: &CMatrix, ub: &CMatrix) -> Result<Self> {
        if ua.rows() != self.da || ub.rows() != self.db {
            return Err(EbiError::DimensionMismatch("local unitary size".into()));
        }
        let alice = [
            self.alice[0].conjugate_by(ua)?,
            self.alice[1].conjugate_by(ua)?,
            self.alice[2].conjugate_by(ua)?,
        ];
        let bob = [
            self.bob[0].conjugate_by(ub)?,
            self.bob[1].conjugate_by(ub)?,
            self.bob[2].conjugate_by(ub)?,
            self.bob[3].conjugate_by(ub)?,
        ];
        let state = local_apply(&self.state, self.da, self.db, ua, ub);
        Self::new(self.da, self.db, state, alice, bob)
    }

    /// `<psi| A_k (x) B_l |psi>` before discarding the imaginary part.
    pub fn raw_correlator(&self, k: usize, l: usize) -> Complex64 {
        local_expectation(
            &self.state,
            self.da,
            self.db,
            self.alice[k].matrix(),
            self.bob[l].matrix(),
        )
    }

    /// `E_kl = Re <psi| A_k (x) B_l |psi>` (zero-based indices).
    pub fn correlator(&self, k: usize, l: usize) -> Result<f64> {
        let z = self.raw_correlator(k, l);
        if z.im.abs() > IMAG_TOL {
            return Err(EbiError::ComplexCorrelator(z.im));
        }
        Ok(z.re)
    }

    pub fn correlation_table(&self) -> Result<CorrelationTable> {
        let mut e = [[0.0; 4]; 3];
        for (k, row) in e.iter_mut().enumerate() {
            for (l, x) in row.iter_mut().enumerate() {
                *x = self.correlator(k, l)?;
            }
        }
        Ok(CorrelationTable { e })
    }

    /// `S = sum_kl C[k][l] E_kl`.
    pub fn ebi_value(&self) -> f64 {
        let mut s = 0.0;
        for (k, row) in EBI_COEFFS.iter().enumerate() {
            for (l, &c) in row.iter().enumerate() {
                s += f64::from(c) * self.raw_correlator(k, l).re;
            }
        }
        s
    }

    pub fn bell_operator(&self) -> CMatrix {
        bell_operator(&self.alice, &self.bob)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ScenarioJson {
            d_a: self.da,
            d_b: self.db,
            state: self.state.entries().iter().map(|z| [z.re, z.im]).collect(),
            alice: self
                .alice
                .iter()
                .map(|o| matrix_to_json(o.matrix()))
                .collect(),
            bob: self
                .bob
                .iter()
                .map(|o| matrix_to_json(o.matrix()))
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioJson = serde_json::from_str(text)?;
        if file.alice.len() != 3 || file.bob.len() != 4 {
            return Err(EbiError::Format(format!(
                "expected 3 Alice and 4 Bob observables, found {} and {}",
                file.alice.len(),
                file.bob.len()
            )));
        }
        let state = CVector::new(
            file.state
                .iter()
                .map(|p| Complex64::new(p[0], p[1]))
                .collect(),
        )?;
        let obs = |m: &JsonMatrix| -> Result<Observable> { Observable::new(matrix_from_json(m)?) };
        let alice = [
            obs(&file.alice[0])?,
            obs(&file.alice[1])?,
            obs(&file.alice[2])?,
        ];
        let bob = [
            obs(&file.bob[0])?,
            obs(&file.bob[1])?,
            obs(&file.bob[2])?,
            obs(&file.bob[3])?,
        ];
        Self::new(file.d_a, file.d_b, state, alice, bob)
    }
}

type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Serialize, Deserialize)]
struct ScenarioJson {
    #[serde(rename = "dA")]
    d_a: usize,
    #[serde(rename = "dB")]
    d_b: usize,
    state: Vec<[f64; 2]>,
    alice: Vec<JsonMatrix>,
    bob: Vec<JsonMatrix>,
}

fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

fn matrix_from_json(rows: &JsonMatrix) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(EbiError::Format("ragged matrix rows".into()));
    }
    CMatrix::new(
        n,
        m,
        rows.iter()
            .flat_map(|r| r.iter().map(|p| Complex64::new(p[0], p[1])))
            .collect(),
    )
}

/// `(U_A (x) U_B) psi` without forming the Kronecker product.
pub fn local_apply(psi: &CVector, da: usize, db: usize, ua: &CMatrix, ub: &CMatrix) -> CVector {
    let m = psi
        .reshape(da, db)
        .expect("state dimension checked by caller");
    let out = &(ua * &m) * &ub.transpose();
    CVector::from_vec(out.data().to_vec())
}

/// `<psi| A (x) B |psi>` computed as `tr(M^dagger A M B^T)`.
pub fn local_expectation(
    psi: &CVector,
    da: usize,
    db: usize,
    a: &CMatrix,
    b: &CMatrix,
) -> Complex64 {
    let phi = local_apply(psi, da, db, a, b);
    psi.inner(&phi)
}

/// The 3x4 table of correlators `E_kl`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationTable {
    pub e: [[f64; 4]; 3],
}

impl CorrelationTable {
    /// The table `C / sqrt(3)` produced by every maximal violator.
    pub fn elegant() -> Self {
        let s = 1.0 / 3f64.sqrt();
        let mut e = [[0.0; 4]; 3];
        for (k, row) in e.iter_mut().enumerate() {
            for (l, x) in row.iter_mut().enumerate() {
                *x = f64::from(EBI_COEFFS[k][l]) * s;
            }
        }
        Self { e }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.e
            .iter()
            .flatten()
            .zip(other.e.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn ebi_value(&self) -> f64 {
        let mut s = 0.0;
        for (k, row) in EBI_COEFFS.iter().enumerate() {
            for (l, &c) in row.iter().enumerate() {
                s += f64::from(c) * self.e[k][l];
            }
        }
        s
    }
}

/// `Sigma = sum_kl C[k][l] A_k (x) B_l`.
pub fn bell_operator(alice: &[Observable; 3], bob: &[Observable; 4]) -> CMatrix {
    let da = alice[0].dim();
    let db = bob[0].dim();
    let mut sigma = CMatrix::zeros(da * db, da * db);
    for (l, b) in bob.iter().enumerate() {
        // sum_k C[k][l] A_k, then one Kronecker product per column of C.
        let mut f = CMatrix::zeros(da, da);
        for (k, a) in alice.iter().enumerate() {
            f = &f + &a.matrix().scale_re(f64::from(EBI_COEFFS[k][l]));
        }
        sigma = &sigma + &kron(&f, b.matrix());
    }
    sigma.hermitian_part()
}

/// A deterministic local strategy: outcomes `a_1..a_3, b_1..b_4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassicalStrategy {
    pub alice: [i8; 3],
    pub bob: [i8; 4],
}

impl ClassicalStrategy {
    pub fn value(&self) -> i32 {
        let mut s = 0i32;
        for (k, row) in EBI_COEFFS.iter().enumerate() {
            for (l, &c) in row.iter().enumerate() {
                s += i32::from(c) * i32::from(self.alice[k]) * i32::from(self.bob[l]);
            }
        }
        s
    }

    pub fn negated(&self) -> Self {
        Self {
            alice: self.alice.map(|x| -x),
            bob: self.bob.map(|x| -x),
        }
    }

    /// Embeds the strategy as a product scenario on two qubits: the state is
    /// `|0>|0>` and each observable is `+-Z`.
    pub fn to_scenario(&self) -> Scenario {
        let z = |s: i8| {
            let s = f64::from(s);
            Observable::new(CMatrix::from_diag(&[ONE * s, -ONE * s])).expect("diagonal +-1")
        };
        let state = CVector::from_vec(vec![ONE, ZERO, ZERO, ZERO]);
        Scenario::new(2, 2, state, self.alice.map(z), self.bob.map(z))
            .expect("valid product scenario")
    }

    /// All 2^7 deterministic strategies.
    pub fn all() -> impl Iterator<Item = ClassicalStrategy> {
        (0u8..128).map(|bits| {
            let sign = |i: u8| if bits >> i & 1 == 1 { -1 } else { 1 };
            ClassicalStrategy {
                alice: [sign(0), sign(1), sign(2)],
                bob: [sign(3), sign(4), sign(5), sign(6)],
            }
        })
    }
}

/// Maximum of `S` over the 128 deterministic strategies and one maximizer.
pub fn classical_max_bruteforce() -> (i32, ClassicalStrategy) {
    ClassicalStrategy::all()
        .map(|s| (s.value(), s))
        .fold(
            None,
            |best: Option<(i32, ClassicalStrategy)>, cand| match best {
                Some(b) if b.0 >= cand.0 => Some(b),
                _ => Some(cand),
            },
        )
        .expect("nonempty enumeration")
}

pub fn classical_min_bruteforce() -> i32 {
    ClassicalStrategy::all()
        .map(|s| s.value())
        .min()
        .expect("nonempty enumeration")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, pauli_y, pauli_z, random_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_scenario(rng: &mut ChaCha8Rng, da: usize, db: usize) -> Scenario {
        let alice = std::array::from_fn(|_| Observable::random(rng, da, 1e-12));
        let bob = std::array::from_fn(|_| Observable::random(rng, db, 1e-12));
        Scenario::new(da, db, random_state(rng, da * db), alice, bob).unwrap()
    }

    #[test]
    fn coefficient_rows_sum_to_zero_and_are_orthogonal() {
        for row in EBI_COEFFS {
            assert_eq!(row.iter().map(|&x| i32::from(x)).sum::<i32>(), 0);
        }
        for (i, ri) in EBI_COEFFS.iter().enumerate() {
            for (j, rj) in EBI_COEFFS.iter().enumerate() {
                let dot: i32 = ri
                    .iter()
                    .zip(rj)
                    .map(|(&x, &y)| i32::from(x) * i32::from(y))
                    .sum();
                assert_eq!(dot, if i == j { 4 } else { 0 });
            }
        }
    }

    #[test]
    fn observable_rejects_non_involutions() {
        assert!(Observable::new(pauli_z().scale_re(2.0)).is_err());
        assert!(Observable::new(CMatrix::zeros(2, 3)).is_err());
        let mut m = pauli_x();
        m[(0, 1)] = Complex64::new(1.0, 0.5);
        assert!(Observable::new(m).is_err());
        assert!(Observable::new(pauli_y()).is_ok());
    }

    #[test]
    fn projectors_sum_to_identity() {
        let o = Observable::new(pauli_y()).unwrap();
        let sum = &o.projector(Outcome::Plus) + &o.projector(Outcome::Minus);
        assert!((&sum - &CMatrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn product_state_correlator() {
        let z = Observable::new(pauli_z()).unwrap();
        let s = Scenario::new(
            2,
            2,
            CVector::basis(4, 0),
            [z.clone(), z.clone(), z.clone()],
            [z.clone(), z.clone(), z.clone(), z],
        )
        .unwrap();
        assert_eq!(s.correlator(0, 0).unwrap(), 1.0);
        // All-Z observables: each coefficient row sums to zero.
        assert!(s.bell_operator().max_abs() < 1e-15);
    }

    #[test]
    fn scenario_rejects_bad_input() {
        let z = Observable::new(pauli_z()).unwrap();
        let obs3 = || [z.clone(), z.clone(), z.clone()];
        let obs4 = || [z.clone(), z.clone(), z.clone(), z.clone()];
        let unnormalized = CVector::from_real(&[1.0, 1.0, 0.0, 0.0]);
        assert!(matches!(
            Scenario::new(2, 2, unnormalized, obs3(), obs4()),
            Err(EbiError::NotNormalized(_))
        ));
        assert!(matches!(
            Scenario::new(2, 3, CVector::basis(6, 0), obs3(), obs4()),
            Err(EbiError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn classical_bound_is_six() {
        let (best, argmax) = classical_max_bruteforce();
        assert_eq!(best, 6);
        assert_eq!(argmax.value(), 6);
        assert_eq!(argmax.negated().value(), 6);
        assert_eq!(classical_min_bruteforce(), -6);
        assert_eq!(ClassicalStrategy::all().count(), 128);
    }

    #[test]
    fn classical_scenario_reproduces_strategy_value() {
        for strat in ClassicalStrategy::all() {
            let s = strat.to_scenario();
            assert!((s.ebi_value() - f64::from(strat.value())).abs() < 1e-12);
            assert!(s.ebi_value().abs() <= CLASSICAL_BOUND);
        }
    }

    #[test]
    fn bell_operator_consistency_on_random_scenarios() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..100 {
            let (da, db) = [(2, 2), (2, 3), (3, 2), (4, 4)][trial % 4];
            let s = random_scenario(&mut rng, da, db);
            let sigma = s.bell_operator();
            assert!(sigma.hermitian_residual() < 1e-10);
            let expect = sigma.expectation(s.state());
            assert!(expect.im.abs() < 1e-9);
            assert!((expect.re - s.ebi_value()).abs() < 1e-9);
            let lmax = linalg::hermitian_eig(&sigma).unwrap().max_value();
            assert!(s.ebi_value() <= lmax + 1e-9);
            assert!(lmax <= 12.0 + 1e-9);
            let table = s.correlation_table().unwrap();
            assert!((table.ebi_value() - s.ebi_value()).abs() < 1e-12);
            assert!(table.e.iter().flatten().all(|x| x.abs() <= 1.0 + 1e-9));
        }
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_scenario(&mut rng, 2, 3);
        let text = s.to_json().unwrap();
        let back = Scenario::from_json(&text).unwrap();
        assert_eq!(back.to_json().unwrap(), text);
        assert_eq!(back.state(), s.state());
    }

    #[test]
    fn json_rejects_wrong_observable_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = random_scenario(&mut rng, 2, 2);
        let mut v: serde_json::Value = serde_json::from_str(&s.to_json().unwrap()).unwrap();
        v["bob"].as_array_mut().unwrap().pop();
        assert!(matches!(
            Scenario::from_json(&v.to_string()),
            Err(EbiError::Format(_))
        ));
    }
}
