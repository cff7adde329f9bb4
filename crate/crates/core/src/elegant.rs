//! Constructions: the two-qubit reference strategy, the full family of
//! maximal violators, the D-operators, and Bloch-sphere export.
//!
//! A family member is described by blocks `(lambda_i, n_i, r_i)`: the state
//! has Schmidt coefficient `lambda_i` with multiplicity `2 n_i`, the block
//! splits into `n_i` qubit pairs, and the first `r_i` of those pairs carry
//! `A_3 = +Y` while the remaining ones carry `A_3 = -Y`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EbiError, Result};
use crate::linalg::{self, pauli_x, pauli_y, pauli_z, CMatrix, CVector};
use crate::scenario::{Observable, Scenario, EBI_COEFFS};

pub const SPEC_NORM_TOL: f64 = 1e-10;

/// One Schmidt-coefficient block of a family member.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyBlock {
    pub lambda: f64,
    pub n: usize,
    pub r: usize,
}

/// Classification data of a maximal violator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub blocks: Vec<FamilyBlock>,
}

impl FamilySpec {
    /// Validates and wraps the blocks.
    pub fn new(blocks: Vec<FamilyBlock>) -> Result<Self> {
        let spec = Self { blocks };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(EbiError::SpecInvalid(
                "empty: at least one block is required".into(),
            ));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if !(b.lambda.is_finite() && b.lambda > 0.0) {
                return Err(EbiError::SpecInvalid(format!(
                    "positivity: block {i} has lambda = {}",
                    b.lambda
                )));
            }
            if b.n == 0 {
                return Err(EbiError::SpecInvalid(format!(
                    "multiplicity: block {i} has n = 0"
                )));
            }
            if b.r > b.n {
                return Err(EbiError::SpecInvalid(format!(
                    "signature: block {i} has r = {} > n = {}",
                    b.r, b.n
                )));
            }
        }
        if let Some(i) = self
            .blocks
            .windows(2)
            .position(|w| w[1].lambda >= w[0].lambda)
        {
            return Err(EbiError::SpecInvalid(format!(
                "ordering: lambdas must be strictly decreasing (blocks {i} and {})",
                i + 1
            )));
        }
        let total = self.norm_sqr();
        if (total - 1.0).abs() > SPEC_NORM_TOL {
            return Err(EbiError::SpecInvalid(format!(
                "normalization: sum 2 n lambda^2 = {total}"
            )));
        }
        Ok(())
    }

    /// `sum_i 2 n_i lambda_i^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| 2.0 * b.n as f64 * b.lambda * b.lambda)
            .sum()
    }

    /// Local dimension `sum_i 2 n_i` on either side.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| 2 * b.n).sum()
    }

    /// True iff every pair carries `+Y`.
    pub fn is_untransposed(&self) -> bool {
        self.blocks.iter().all(|b| b.r == b.n)
    }

    /// True iff both `+Y` and `-Y` pairs occur.
    pub fn is_mixed_signature(&self) -> bool {
        self.blocks.iter().any(|b| b.r > 0) && self.blocks.iter().any(|b| b.r < b.n)
    }

    pub fn lambda_min(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.lambda)
            .fold(f64::INFINITY, f64::min)
    }

    /// Random spec: 1 to 3 blocks, `n_i` in {1, 2}, `r_i` uniform in
    /// `0..=n_i`, lambdas separated by at least 10% relative gap.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let m = rng.random_range(1..=3usize);
        let weights = loop {
            let mut w: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
            w.sort_by(|a, b| b.total_cmp(a));
            if w.windows(2).all(|p| p[0] > 1.1 * p[1]) {
                break w;
            }
        };
        let ns: Vec<usize> = (0..m).map(|_| rng.random_range(1..=2usize)).collect();
        let total: f64 = weights
            .iter()
            .zip(&ns)
            .map(|(w, &n)| 2.0 * n as f64 * w * w)
            .sum();
        let scale = total.sqrt();
        let blocks = weights
            .iter()
            .zip(&ns)
            .map(|(w, &n)| FamilyBlock {
                lambda: w / scale,
                n,
                r: rng.random_range(0..=n),
            })
            .collect();
        Self::new(blocks).expect("normalized by construction")
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Position of one qubit pair inside a canonical family basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalPair {
    pub block: usize,
    pub pair: usize,
    /// +1 for an `A_3 = Y` pair, -1 for `A_3 = -Y`.
    pub y_sign: i8,
    pub lambda: f64,
}

/// Pair layout of a canonical family scenario. Pair `j` occupies basis
/// vectors `2j` (`|0>`) and `2j + 1` (`|1>`) on both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalLayout {
    pub pairs: Vec<CanonicalPair>,
}

impl CanonicalLayout {
    pub fn from_spec(spec: &FamilySpec) -> Self {
        let mut pairs = Vec::new();
        for (i, b) in spec.blocks.iter().enumerate() {
            for p in 0..b.n {
                pairs.push(CanonicalPair {
                    block: i,
                    pair: p,
                    y_sign: if p < b.r { 1 } else { -1 },
                    lambda: b.lambda,
                });
            }
        }
        Self { pairs }
    }

    pub fn dim(&self) -> usize {
        2 * self.pairs.len()
    }
}

/// The qubit strategy: `|phi+>`, Alice `(Z, X, Y)`, Bob the cube diagonals.
pub fn reference_experiment() -> Scenario {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let state = CVector::from_real(&[s, 0.0, 0.0, s]);
    let (alice, bob) = qubit_observables(1);
    Scenario::new(2, 2, state, alice, bob).expect("reference experiment is valid")
}

/// Two-qubit observables for a pair with the given `A_3` sign. Bob's
/// observables are the transposes of the D-operators of Alice's.
pub(crate) fn qubit_matrices(y_sign: i8) -> ([CMatrix; 3], [CMatrix; 4]) {
    let alice = [pauli_z(), pauli_x(), pauli_y().scale_re(f64::from(y_sign))];
    let d = d_operator_matrices(&alice);
    let bob = [
        d[0].transpose(),
        d[1].transpose(),
        d[2].transpose(),
        d[3].transpose(),
    ];
    (alice, bob)
}

fn qubit_observables(y_sign: i8) -> ([Observable; 3], [Observable; 4]) {
    let (a, b) = qubit_matrices(y_sign);
    let obs = |m: CMatrix| Observable::new(m).expect("qubit involution");
    (a.map(obs), b.map(obs))
}

/// Canonical member of the maximal-violator family for `spec`.
///
/// Blocks appear in order of decreasing lambda, and inside a block the `+Y`
/// pairs precede the `-Y` pairs.
pub fn build_family(spec: &FamilySpec) -> Result<(Scenario, CanonicalLayout)> {
    spec.validate()?;
    let layout = CanonicalLayout::from_spec(spec);
    let d = layout.dim();
    let mut alice = [
        CMatrix::zeros(d, d),
        CMatrix::zeros(d, d),
        CMatrix::zeros(d, d),
    ];
    let mut bob = [
        CMatrix::zeros(d, d),
        CMatrix::zeros(d, d),
        CMatrix::zeros(d, d),
        CMatrix::zeros(d, d),
    ];
    let mut state = CVector::zeros(d * d);
    for (j, pair) in layout.pairs.iter().enumerate() {
        let (a, b) = qubit_matrices(pair.y_sign);
        for (full, blk) in alice.iter_mut().zip(&a) {
            place_block(full, blk, 2 * j);
        }
        for (full, blk) in bob.iter_mut().zip(&b) {
            place_block(full, blk, 2 * j);
        }
        for bit in 0..2 {
            let idx = 2 * j + bit;
            state[idx * d + idx] = Complex64::new(pair.lambda, 0.0);
        }
    }
    let obs = |m: CMatrix| Observable::new(m);
    let [a1, a2, a3] = alice;
    let [b1, b2, b3, b4] = bob;
    let scenario = Scenario::new(
        d,
        d,
        state,
        [obs(a1)?, obs(a2)?, obs(a3)?],
        [obs(b1)?, obs(b2)?, obs(b3)?, obs(b4)?],
    )?;
    Ok((scenario, layout))
}

fn place_block(full: &mut CMatrix, block: &CMatrix, offset: usize) {
    for i in 0..block.rows() {
        for j in 0..block.cols() {
            full[(offset + i, offset + j)] = block[(i, j)];
        }
    }
}

/// `D_l = (1/sqrt 3) sum_k C[k][l] A_k`, as raw Hermitian matrices.
#[derive(Debug, Clone)]
pub struct DOperators {
    pub d: [CMatrix; 4],
}

impl DOperators {
    /// Largest `max |D_l^2 - I|` over the four operators.
    pub fn involution_residual(&self) -> f64 {
        self.d
            .iter()
            .map(CMatrix::involution_residual)
            .fold(0.0, f64::max)
    }

    pub fn are_involutions(&self, tol: f64) -> bool {
        self.involution_residual() < tol
    }
}

pub fn d_operators(alice: &[Observable; 3]) -> DOperators {
    let m = [
        alice[0].matrix().clone(),
        alice[1].matrix().clone(),
        alice[2].matrix().clone(),
    ];
    DOperators {
        d: d_operator_matrices(&m),
    }
}

pub(crate) fn d_operator_matrices(alice: &[CMatrix; 3]) -> [CMatrix; 4] {
    let norm = 1.0 / 3f64.sqrt();
    std::array::from_fn(|l| {
        let mut acc = CMatrix::zeros(alice[0].rows(), alice[0].cols());
        for (k, a) in alice.iter().enumerate() {
            acc = &acc + &a.scale_re(f64::from(EBI_COEFFS[k][l]));
        }
        acc.scale_re(norm)
    })
}

/// Labeled point on the Bloch sphere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlochPoint {
    pub label: String,
    pub vector: [f64; 3],
}

impl BlochPoint {
    pub fn dot(&self, other: &Self) -> f64 {
        self.vector
            .iter()
            .zip(&other.vector)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Bloch vector `(<X>, <Y>, <Z>)` of a qubit state.
pub fn bloch_vector(v: &CVector) -> [f64; 3] {
    [
        pauli_x().expectation(v).re,
        pauli_y().expectation(v).re,
        pauli_z().expectation(v).re,
    ]
}

/// Eigenstates of every observable of a qubit-qubit scenario, labeled
/// `A1+`, `A1-`, ..., `B4-`.
pub fn bloch_export(s: &Scenario) -> Result<Vec<BlochPoint>> {
    if s.da() != 2 || s.db() != 2 {
        return Err(EbiError::UnsupportedDimension(format!(
            "Bloch export needs qubits, got dA = {}, dB = {}",
            s.da(),
            s.db()
        )));
    }
    let mut points = Vec::with_capacity(14);
    let parties: [(&str, &[Observable]); 2] = [("A", s.alice()), ("B", s.bob())];
    for (party, observables) in parties {
        for (k, obs) in observables.iter().enumerate() {
            let eig = linalg::hermitian_eig(obs.matrix())?;
            if eig.values[0] > 0.0 || eig.values[1] < 0.0 {
                return Err(EbiError::InvalidObservable(format!(
                    "{party}{} is proportional to the identity",
                    k + 1
                )));
            }
            points.push(BlochPoint {
                label: format!("{party}{}+", k + 1),
                vector: bloch_vector(&eig.vector(1)),
            });
            points.push(BlochPoint {
                label: format!("{party}{}-", k + 1),
                vector: bloch_vector(&eig.vector(0)),
            });
        }
    }
    Ok(points)
}

/// CSV with header `label,x,y,z` and six decimals.
pub fn bloch_csv(points: &[BlochPoint]) -> String {
    let clean = |x: f64| if x.abs() < 5e-7 { 0.0 } else { x };
    let mut out = String::from("label,x,y,z\n");
    for p in points {
        let [x, y, z] = p.vector.map(clean);
        writeln!(out, "{},{x:.6},{y:.6},{z:.6}", p.label).expect("writing to a String");
    }
    out
}
