//! SWAP-isometry self-test.
//!
//! The isometry is built from the black-box observables only: Alice's
//! `A_1`, `A_2`, and on Bob's side `Z_B = (sqrt3/2)(B_1 + B_2)` and
//! `X_B = (sqrt3/2)(B_1 + B_3)`. Each party gets one ancilla qubit and the
//! circuit `H; controlled-Z-like; H; controlled-X-like` swaps the qubit
//! structure of the strategy into the ancillas.
//!
//! Outputs live on `(H_A (x) H_B) (x) (H_a (x) H_b)`: the junk index comes
//! first and the reference index `2 bit_a + bit_b` last.

use num_complex::Complex64;
use serde::Serialize;

use crate::elegant::{reference_experiment, FamilySpec};
use crate::error::{EbiError, Result};
use crate::linalg::{self, CMatrix, CVector, I, ONE};
use crate::scenario::{local_apply, local_expectation, Outcome, Scenario};
use crate::structure::{self, BlockDecomposition};

/// `Z_B` and `X_B` must square to the identity within this.
pub const BOB_INVOLUTION_TOL: f64 = 1e-7;

/// Default product-residual threshold separating equivalent from
/// inequivalent strategies.
pub const DEFAULT_THRESHOLD: f64 = 1e-6;

/// Singular values of a normalized bipartite vector above this count toward
/// its Schmidt rank.
pub const RANK_CUTOFF: f64 = 1e-8;

/// `<psi| (A_2 A_3) (x) (B_1 + B_2) |psi>`.
pub fn necessary_correlator(s: &Scenario) -> Complex64 {
    let a = s.alice();
    let b = s.bob();
    let left = a[1].matrix() * a[2].matrix();
    let right = b[0].matrix() + b[1].matrix();
    local_expectation(s.state(), s.da(), s.db(), &left, &right)
}

/// Value of [`necessary_correlator`] for the reference strategy, `2i/sqrt3`.
pub fn reference_correlator() -> Complex64 {
    I * (2.0 / 3f64.sqrt())
}

/// Closed form `(2i/sqrt3) sum_i lambda_i^2 (4 r_i - 2 n_i)` of the
/// discriminating correlator on a family member.
pub fn correlator_prediction(spec: &FamilySpec) -> Complex64 {
    let sum: f64 = spec
        .blocks
        .iter()
        .map(|b| b.lambda * b.lambda * (4.0 * b.r as f64 - 2.0 * b.n as f64))
        .sum();
    reference_correlator() * sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ancilla {
    Alice,
    Bob,
}

/// The local isometry `Phi = Phi_A (x) Phi_B` as a gate sequence.
#[derive(Debug, Clone)]
pub struct SwapIsometry {
    da: usize,
    db: usize,
    a1: CMatrix,
    a2: CMatrix,
    zb: CMatrix,
    xb: CMatrix,
}

impl SwapIsometry {
    pub fn new(s: &Scenario) -> Result<Self> {
        let b = s.bob();
        let k = 3f64.sqrt() / 2.0;
        let zb = (b[0].matrix() + b[1].matrix()).scale_re(k);
        let xb = (b[0].matrix() + b[2].matrix()).scale_re(k);
        for (label, m) in [("Z_B", &zb), ("X_B", &xb)] {
            let res = m.involution_residual();
            if res > BOB_INVOLUTION_TOL {
                return Err(EbiError::NotInvolution(format!(
                    "{label} = (sqrt3/2)(B1 + B{}) has |M^2 - I| = {res:.3e}",
                    if label == "Z_B" { 2 } else { 3 }
                )));
            }
        }
        Ok(Self {
            da: s.da(),
            db: s.db(),
            a1: s.alice()[0].matrix().clone(),
            a2: s.alice()[1].matrix().clone(),
            zb,
            xb,
        })
    }

    /// Dimension of the junk register `H_A (x) H_B`.
    pub fn junk_dim(&self) -> usize {
        self.da * self.db
    }

    /// Applies the circuit to `v` in `H_A (x) H_B` with both ancillas in `|0>`.
    pub fn apply(&self, v: &CVector) -> CVector {
        assert_eq!(v.dim(), self.junk_dim(), "isometry input dimension");
        let mut state = CVector::zeros(4 * self.junk_dim());
        for (j, z) in v.entries().iter().enumerate() {
            state[4 * j] = *z;
        }
        self.hadamard(&mut state, Ancilla::Alice);
        self.hadamard(&mut state, Ancilla::Bob);
        self.controlled(&mut state, Ancilla::Alice, &self.a1);
        self.controlled(&mut state, Ancilla::Bob, &self.zb);
        self.hadamard(&mut state, Ancilla::Alice);
        self.hadamard(&mut state, Ancilla::Bob);
        self.controlled(&mut state, Ancilla::Alice, &self.a2);
        self.controlled(&mut state, Ancilla::Bob, &self.xb);
        state
    }

    fn index(&self, ia: usize, ib: usize, bit_a: usize, bit_b: usize) -> usize {
        4 * (ia * self.db + ib) + 2 * bit_a + bit_b
    }

    fn hadamard(&self, state: &mut CVector, anc: Ancilla) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..self.junk_dim() {
            for other in 0..2 {
                let (i0, i1) = match anc {
                    Ancilla::Alice => (4 * j + other, 4 * j + 2 + other),
                    Ancilla::Bob => (4 * j + 2 * other, 4 * j + 2 * other + 1),
                };
                let (x0, x1) = (state[i0], state[i1]);
                state[i0] = (x0 + x1) * h;
                state[i1] = (x0 - x1) * h;
            }
        }
    }

    /// Applies `u` to the party register wherever that party's ancilla is `|1>`.
    fn controlled(&self, state: &mut CVector, anc: Ancilla, u: &CMatrix) {
        match anc {
            Ancilla::Alice => {
                for ib in 0..self.db {
                    for bit_b in 0..2 {
                        let idx: Vec<usize> = (0..self.da)
                            .map(|ia| self.index(ia, ib, 1, bit_b))
                            .collect();
                        apply_on(state, &idx, u);
                    }
                }
            }
            Ancilla::Bob => {
                for ia in 0..self.da {
                    for bit_a in 0..2 {
                        let idx: Vec<usize> = (0..self.db)
                            .map(|ib| self.index(ia, ib, bit_a, 1))
                            .collect();
                        apply_on(state, &idx, u);
                    }
                }
            }
        }
    }
}

fn apply_on(state: &mut CVector, idx: &[usize], u: &CMatrix) {
    let sub: Vec<Complex64> = idx.iter().map(|&i| state[i]).collect();
    for (row, &i) in idx.iter().enumerate() {
        state[i] = (0..sub.len()).map(|col| u[(row, col)] * sub[col]).sum();
    }
}

/// Label of one projector cell `Pi^{A_k}_s Pi^{B_l}_t` (zero-based k, l).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub k: usize,
    pub l: usize,
    pub s: Outcome,
    pub t: Outcome,
}

impl Cell {
    /// All 48 cells in `(k, l, s, t)` order with `+` before `-`.
    pub fn all() -> Vec<Cell> {
        let mut v = Vec::with_capacity(48);
        for k in 0..3 {
            for l in 0..4 {
                for s in Outcome::BOTH {
                    for t in Outcome::BOTH {
                        v.push(Cell { k, l, s, t });
                    }
                }
            }
        }
        v
    }
}

/// `Phi(Pi^{A_k}_s Pi^{B_l}_t |psi>)` for every cell.
#[derive(Debug, Clone)]
pub struct IsometryOutput {
    pub da: usize,
    pub db: usize,
    pub cells: Vec<(Cell, CVector)>,
    /// `Phi(|psi>)` without projectors.
    pub unprojected: CVector,
}

impl IsometryOutput {
    pub fn get(&self, cell: Cell) -> &CVector {
        &self
            .cells
            .iter()
            .find(|(c, _)| *c == cell)
            .expect("all 48 cells are present")
            .1
    }

    pub fn junk_dim(&self) -> usize {
        self.da * self.db
    }

    /// `max_{k,l} |sum_{s,t} |v|^2 - 1|`.
    pub fn completeness_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..3 {
            for l in 0..4 {
                let total: f64 = self
                    .cells
                    .iter()
                    .filter(|(c, _)| c.k == k && c.l == l)
                    .map(|(_, v)| v.norm_sqr())
                    .sum();
                worst = worst.max((total - 1.0).abs());
            }
        }
        worst
    }
}

pub fn swap_isometry(s: &Scenario) -> Result<IsometryOutput> {
    let phi = SwapIsometry::new(s)?;
    let cells = Cell::all()
        .into_iter()
        .map(|cell| {
            let pa = s.alice()[cell.k].projector(cell.s);
            let pb = s.bob()[cell.l].projector(cell.t);
            let v = local_apply(s.state(), s.da(), s.db(), &pa, &pb);
            (cell, phi.apply(&v))
        })
        .collect();
    Ok(IsometryOutput {
        da: s.da(),
        db: s.db(),
        cells,
        unprojected: phi.apply(s.state()),
    })
}

/// `Pi^{a_k}_s Pi^{b_l}_t |phi+>` in the reference strategy.
pub fn reference_target(cell: Cell) -> CVector {
    let r = reference_experiment();
    let pa = r.alice()[cell.k].projector(cell.s);
    let pb = r.bob()[cell.l].projector(cell.t);
    local_apply(r.state(), 2, 2, &pa, &pb)
}

/// Target of the transposed branch: `Pi^{a_k}_{s'} Pi^{b_{5-l}}_{-t} |phi+>`
/// with `s' = s` for `k = 1, 2` and `s' = -s` for `k = 3`.
pub fn flipped_target(cell: Cell) -> CVector {
    let s = if cell.k == 2 {
        cell.s.flipped()
    } else {
        cell.s
    };
    reference_target(Cell {
        k: cell.k,
        l: 3 - cell.l,
        s,
        t: cell.t.flipped(),
    })
}

/// `chi (x) w` with `w` on the 4-dimensional reference register.
fn junk_times(chi: &CVector, w: &CVector) -> CVector {
    chi.kron(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Equivalent,
    Inequivalent,
}

/// Outcome of comparing the isometry outputs with `chi (x) reference`.
#[derive(Debug, Clone)]
pub struct Equivalence {
    pub junk: CVector,
    pub product_residual: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Fits a single junk vector on the best-conditioned cell and reports the
/// worst cell residual `|v - chi (x) w|`.
pub fn equivalence_check(out: &IsometryOutput, threshold: f64) -> Equivalence {
    let targets: Vec<(Cell, CVector)> = Cell::all()
        .into_iter()
        .map(|c| (c, reference_target(c)))
        .collect();
    let (best_cell, best_w) = targets
        .iter()
        .fold(None::<&(Cell, CVector)>, |acc, cand| match acc {
            Some(a) if a.1.norm_sqr() >= cand.1.norm_sqr() - 1e-15 => Some(a),
            _ => Some(cand),
        })
        .expect("48 cells");
    let v = out.get(*best_cell);
    let m = v
        .reshape(out.junk_dim(), 4)
        .expect("junk x reference layout");
    // Least squares for min |M - chi w^T|: chi = M conj(w) / |w|^2.
    let chi = m.apply(&best_w.conj()).scale(ONE / best_w.norm_sqr());
    let product_residual = targets
        .iter()
        .map(|(c, w)| (out.get(*c) - &junk_times(&chi, w)).norm())
        .fold(0.0, f64::max);
    let verdict = if product_residual < threshold {
        Verdict::Equivalent
    } else {
        Verdict::Inequivalent
    };
    Equivalence {
        junk: chi,
        product_residual,
        threshold,
        verdict,
    }
}

/// Junk split into the untransposed (`chi_1`) and transposed (`chi_2`) parts.
#[derive(Debug, Clone)]
pub struct JunkSplit {
    pub chi1: CVector,
    pub chi2: CVector,
    /// `max |v - chi_1 (x) w - chi_2 (x) w_flipped|` over all cells.
    pub reconstruction_residual: f64,
}

/// `chi_1 = sqrt2 sum_{+Y pairs} lambda |0_A 0_B>`, `chi_2` likewise over the
/// `-Y` pairs, in the canonical bases of `d`.
pub fn junk_split(out: &IsometryOutput, d: &BlockDecomposition) -> JunkSplit {
    let n = out.junk_dim();
    let mut chi1 = CVector::zeros(n);
    let mut chi2 = CVector::zeros(n);
    for (j, pair) in d.layout.pairs.iter().enumerate() {
        let v = d
            .alice_vector(j, 0)
            .kron(&d.bob_vector(j, 0))
            .scale(ONE * (2f64.sqrt() * pair.lambda));
        if pair.y_sign > 0 {
            chi1 = &chi1 + &v;
        } else {
            chi2 = &chi2 + &v;
        }
    }
    let reconstruction_residual = out
        .cells
        .iter()
        .map(|(c, v)| {
            let predicted =
                &junk_times(&chi1, &reference_target(*c)) + &junk_times(&chi2, &flipped_target(*c));
            (v - &predicted).norm()
        })
        .fold(0.0, f64::max);
    JunkSplit {
        chi1,
        chi2,
        reconstruction_residual,
    }
}

/// What Eve, holding the junk register, sees after one measurement.
#[derive(Debug, Clone, Serialize)]
pub struct EveReport {
    pub measurement: String,
    /// Trace distance between the junk states conditioned on `+` and `-`.
    pub trace_distance: f64,
    pub probabilities: [f64; 2],
    /// Schmidt rank across junk | reference, for outcomes `+` and `-`.
    pub schmidt_rank: [usize; 2],
    /// Entanglement entropy (nats) across junk | reference.
    pub entropy: [f64; 2],
}

/// For `A_3` and each `B_l`: are the outcome-conditioned junk states equal,
/// and is the junk entangled with the reference register?
pub fn eve_indistinguishability(out: &IsometryOutput) -> Result<Vec<EveReport>> {
    let n = out.junk_dim();
    let mut reports = Vec::with_capacity(5);
    // Single-party projections are marginals of the joint cells: sum Bob's
    // outcomes on `B_1` for `A_3`, and Alice's on `A_1` for each `B_l`.
    let branch = |m: usize, o: Outcome| -> CVector {
        let cell = |other: Outcome| match m {
            0 => Cell {
                k: 2,
                l: 0,
                s: o,
                t: other,
            },
            l => Cell {
                k: 0,
                l: l - 1,
                s: other,
                t: o,
            },
        };
        out.get(cell(Outcome::Plus)) + out.get(cell(Outcome::Minus))
    };
    for m in 0..5 {
        let label = if m == 0 {
            "A3".to_string()
        } else {
            format!("B{m}")
        };
        let mut states = Vec::with_capacity(2);
        let mut probabilities = [0.0; 2];
        let mut schmidt_rank = [0; 2];
        let mut entropy = [0.0; 2];
        for (i, outcome) in Outcome::BOTH.into_iter().enumerate() {
            let v = branch(m, outcome);
            probabilities[i] = v.norm_sqr();
            let v = v.normalized();
            let sch = linalg::schmidt_with_cutoff(&v, n, 4, RANK_CUTOFF)?;
            schmidt_rank[i] = sch.rank();
            entropy[i] = sch.entropy();
            let m = v.reshape(n, 4)?;
            states.push(&m * &m.adjoint());
        }
        reports.push(EveReport {
            measurement: label,
            trace_distance: linalg::trace_distance(&states[0], &states[1])?,
            probabilities,
            schmidt_rank,
            entropy,
        });
    }
    Ok(reports)
}

/// Norms of the two junk branches plus the decomposition residual.
#[derive(Debug, Clone, Serialize)]
pub struct JunkSplitSummary {
    pub chi1_norm_sq: f64,
    pub chi2_norm_sq: f64,
    pub reconstruction_residual: f64,
}

/// Complete self-test of one scenario.
#[derive(Debug, Clone, Serialize)]
pub struct SelfTestReport {
    pub correlator: [f64; 2],
    pub reference_correlator: [f64; 2],
    pub product_residual: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub junk_norm: f64,
    #[serde(skip)]
    pub junk: CVector,
    pub recovered_spec: Option<FamilySpec>,
    pub correlator_prediction: Option<[f64; 2]>,
    pub junk_split: Option<JunkSplitSummary>,
    /// True when the outputs match the junk-split form, i.e. equivalence up
    /// to transposing some of the qubit pairs.
    pub transposition_equivalent: Option<bool>,
    pub eve: Vec<EveReport>,
}

impl SelfTestReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// Isometry, equivalence test, discriminating correlator, junk split (when
/// the structure extraction succeeds) and Eve's view.
pub fn run_selftest(s: &Scenario, threshold: f64, structure_tol: f64) -> Result<SelfTestReport> {
    let out = swap_isometry(s)?;
    let eq = equivalence_check(&out, threshold);
    let correlator = necessary_correlator(s);
    let decomposition = structure::extract_blocks(s, structure_tol).ok();
    let split = decomposition.as_ref().map(|d| junk_split(&out, d));
    let eve = eve_indistinguishability(&out)?;
    Ok(SelfTestReport {
        correlator: pair(correlator),
        reference_correlator: pair(reference_correlator()),
        product_residual: eq.product_residual,
        threshold,
        verdict: eq.verdict,
        junk_norm: eq.junk.norm(),
        junk: eq.junk,
        recovered_spec: decomposition.as_ref().map(|d| d.spec.clone()),
        correlator_prediction: decomposition
            .as_ref()
            .map(|d| pair(correlator_prediction(&d.spec))),
        transposition_equivalent: split
            .as_ref()
            .map(|j| j.reconstruction_residual < threshold),
        junk_split: split.map(|j| JunkSplitSummary {
            chi1_norm_sq: j.chi1.norm_sqr(),
            chi2_norm_sq: j.chi2.norm_sqr(),
            reconstruction_residual: j.reconstruction_residual,
        }),
        eve,
    })
}
