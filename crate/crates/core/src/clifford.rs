//! Construction and verification of the skew-orthogonal, mutually
//! anticommuting integer matrix families that define an H-type group,
//! together with the Hurwitz-Radon admissibility test.
//!
//! All arithmetic in this module is exact: matrix entries are `i64` values in
//! `{-1, 0, +1}` and every axiom is checked with zero tolerance.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense integer matrix, row-major.
pub type IntMatrix = Vec<Vec<i64>>;

#[derive(Debug, Error)]
pub enum CliffordError {
    #[error("pair (m={m}, n={n}) is not admissible: requires n < rho(m) = {rho}")]
    NotAdmissible { m: usize, n: usize, rho: usize },
    #[error("m = {m} is not a multiple of the minimal module dimension d({n}) = {min_dim}")]
    DimensionMismatch { m: usize, n: usize, min_dim: usize },
    #[error("matrix entries must be exact integers in {{-1, 0, +1}}; found {found}")]
    InvalidEntry { found: i64 },
    #[error("structure file failed verification: {0}")]
    Verification(String),
    #[error("malformed structure document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An H-type structure: dimensions `(m, n)` and the `n` generator matrices.
///
/// Invariants (checked by [`verify_structure`]): each `U^(i)` is an `m x m`
/// skew-symmetric orthogonal sign matrix, the family is mutually
/// anticommuting, and `n < rho(m)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HTypeStructure {
    #[serde(default = "default_format_version")]
    pub format_version: u32,
    pub m: usize,
    pub n: usize,
    #[serde(rename = "U")]
    pub u: Vec<IntMatrix>,
}

fn default_format_version() -> u32 {
    STRUCTURE_FORMAT_VERSION
}

pub const STRUCTURE_FORMAT_VERSION: u32 = 1;

impl HTypeStructure {
    /// Degenerate structure with an empty center (`n = 0`).
    ///
    /// The homogeneous norm of such a structure reduces to the Euclidean norm
    /// of the horizontal part and the diffusion it drives is a plain Brownian
    /// motion on `R^m`; used to calibrate estimators against known
    /// eigenvalues.
    pub fn euclidean(m: usize) -> Self {
        HTypeStructure {
            format_version: STRUCTURE_FORMAT_VERSION,
            m,
            n: 0,
            u: Vec::new(),
        }
    }

    pub fn is_euclidean(&self) -> bool {
        self.n == 0
    }

    /// Serializes to the structure JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("structure serializes")
    }

    /// Parses a structure document and re-runs full verification, rejecting
    /// any file whose matrices fail an axiom.
    pub fn from_json(text: &str) -> Result<Self, CliffordError> {
        let s: HTypeStructure = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliffordError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliffordError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<(), CliffordError> {
        if self.u.len() != self.n {
            return Err(CliffordError::Verification(format!(
                "expected {} matrices, found {}",
                self.n,
                self.u.len()
            )));
        }
        for mat in &self.u {
            if mat.len() != self.m || mat.iter().any(|row| row.len() != self.m) {
                return Err(CliffordError::Verification(format!(
                    "matrices must be {m} x {m}",
                    m = self.m
                )));
            }
            for row in mat {
                for &e in row {
                    if !(-1..=1).contains(&e) {
                        return Err(CliffordError::InvalidEntry { found: e });
                    }
                }
            }
        }
        let report = verify_structure(self);
        if !report.pass() {
            return Err(CliffordError::Verification(report.to_string()));
        }
        Ok(())
    }
}

/// Classical Hurwitz-Radon function: with `m = odd * 2^(4p+q)`, `0 <= q <= 3`,
/// returns `2^q + 8p`.
pub fn hurwitz_radon(m: usize) -> usize {
    assert!(m >= 1, "hurwitz_radon requires m >= 1");
    let v = m.trailing_zeros() as usize;
    let (p, q) = (v / 4, v % 4);
    (1 << q) + 8 * p
}

/// Smallest `m` such that `n < hurwitz_radon(m)`.
pub fn min_rep_dimension(n: usize) -> usize {
    assert!(n >= 1, "min_rep_dimension requires n >= 1");
    let mut m = 1usize;
    loop {
        if n < hurwitz_radon(m) {
            return m;
        }
        m = m
            .checked_mul(2)
            .expect("minimal module dimension overflows usize");
    }
}

/// Admissibility of `(m, n)`: an H-type algebra with these layer dimensions
/// exists iff `n < rho(m)`.
pub fn admissible(m: usize, n: usize) -> bool {
    n < hurwitz_radon(m)
}

// ---------------------------------------------------------------------------
// Exact matrix helpers
// ---------------------------------------------------------------------------

pub(crate) fn identity(m: usize) -> IntMatrix {
    (0..m)
        .map(|i| (0..m).map(|j| i64::from(i == j)).collect())
        .collect()
}

pub(crate) fn transpose(a: &IntMatrix) -> IntMatrix {
    let m = a.len();
    (0..m).map(|i| (0..m).map(|j| a[j][i]).collect()).collect()
}

pub(crate) fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let m = a.len();
    let mut out = vec![vec![0i64; m]; m];
    for i in 0..m {
        for k in 0..m {
            let aik = a[i][k];
            if aik == 0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn mat_add(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect())
        .collect()
}

fn is_zero(a: &IntMatrix) -> bool {
    a.iter().all(|row| row.iter().all(|&e| e == 0))
}

fn kron(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let (p, q) = (a.len(), b.len());
    let mut out = vec![vec![0i64; p * q]; p * q];
    for i in 0..p {
        for j in 0..p {
            if a[i][j] == 0 {
                continue;
            }
            for s in 0..q {
                for t in 0..q {
                    out[i * q + s][j * q + t] = a[i][j] * b[s][t];
                }
            }
        }
    }
    out
}

fn block_diag(blocks: &[&IntMatrix]) -> IntMatrix {
    let m: usize = blocks.iter().map(|b| b.len()).sum();
    let mut out = vec![vec![0i64; m]; m];
    let mut off = 0;
    for b in blocks {
        for (i, row) in b.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                out[off + i][off + j] = e;
            }
        }
        off += b.len();
    }
    out
}

fn rot2() -> IntMatrix {
    vec![vec![0, -1], vec![1, 0]]
}

fn diag2() -> IntMatrix {
    vec![vec![1, 0], vec![0, -1]]
}

// ---------------------------------------------------------------------------
// Quaternion / octonion left multiplications (exact)
// ---------------------------------------------------------------------------

/// Hamilton product of integer quaternions in the basis (1, i, j, k).
fn quat_mul(a: [i64; 4], b: [i64; 4]) -> [i64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

fn quat_conj(a: [i64; 4]) -> [i64; 4] {
    [a[0], -a[1], -a[2], -a[3]]
}

/// Cayley-Dickson product of integer octonions represented as quaternion
/// pairs: `(a, b)(c, d) = (ac - d*b, da + bc*)`.
fn oct_mul(x: [i64; 8], y: [i64; 8]) -> [i64; 8] {
    let (a, b) = ([x[0], x[1], x[2], x[3]], [x[4], x[5], x[6], x[7]]);
    let (c, d) = ([y[0], y[1], y[2], y[3]], [y[4], y[5], y[6], y[7]]);
    let lo = sub4(quat_mul(a, c), quat_mul(quat_conj(d), b));
    let hi = add4(quat_mul(d, a), quat_mul(b, quat_conj(c)));
    [lo[0], lo[1], lo[2], lo[3], hi[0], hi[1], hi[2], hi[3]]
}

fn add4(a: [i64; 4], b: [i64; 4]) -> [i64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn sub4(a: [i64; 4], b: [i64; 4]) -> [i64; 4] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

/// Matrix of left multiplication by the `k`-th imaginary quaternion unit.
fn quat_left_mult(k: usize) -> IntMatrix {
    let mut unit = [0i64; 4];
    unit[k] = 1;
    let mut out = vec![vec![0i64; 4]; 4];
    for (col, mat_col) in (0..4).map(|b| {
        let mut e = [0i64; 4];
        e[b] = 1;
        (b, quat_mul(unit, e))
    }) {
        for row in 0..4 {
            out[row][col] = mat_col[row];
        }
    }
    out
}

/// Matrix of left multiplication by the `k`-th imaginary octonion unit.
fn oct_left_mult(k: usize) -> IntMatrix {
    let mut unit = [0i64; 8];
    unit[k] = 1;
    let mut out = vec![vec![0i64; 8]; 8];
    for col in 0..8 {
        let mut e = [0i64; 8];
        e[col] = 1;
        let prod = oct_mul(unit, e);
        for row in 0..8 {
            out[row][col] = prod[row];
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Generator construction
// ---------------------------------------------------------------------------

/// Mutually anticommuting skew-orthogonal family of `8` sign matrices on
/// `R^16`, used both as the `n0 = 8` base family and as the period-8 lift
/// ingredient.
fn family_16() -> Vec<IntMatrix> {
    let mut fam = vec![kron(&rot2(), &identity(8))];
    for k in 1..8 {
        fam.push(kron(&diag2(), &oct_left_mult(k)));
    }
    fam
}

/// Base family of `n0` generators on `R^(d(n0))` for `1 <= n0 <= 8`.
fn base_family(n0: usize) -> Vec<IntMatrix> {
    match n0 {
        1 => vec![rot2()],
        2 | 3 => (1..=n0).map(quat_left_mult).collect(),
        4..=7 => (1..=n0).map(oct_left_mult).collect(),
        8 => family_16(),
        _ => unreachable!("base family only defined for 1..=8"),
    }
}

/// Family of `n` generators on the minimal module `R^(d(n))`, built from the
/// base families by the period-8 lift `A -> {A_i (x) Omega} + {I (x) F_j}`,
/// where `F_1..F_8` act on `R^16` and `Omega = F_1 F_2 ... F_8`.
fn minimal_family(n: usize) -> Vec<IntMatrix> {
    let n0 = if n.is_multiple_of(8) { 8 } else { n % 8 };
    let mut fam = base_family(n0);
    let steps = (n - n0) / 8;
    if steps == 0 {
        return fam;
    }
    let f16 = family_16();
    let omega = f16
        .iter()
        .skip(1)
        .fold(f16[0].clone(), |acc, f| mat_mul(&acc, f));
    for _ in 0..steps {
        let p = fam[0].len();
        let mut lifted: Vec<IntMatrix> = fam.iter().map(|a| kron(a, &omega)).collect();
        let eye = identity(p);
        lifted.extend(f16.iter().map(|f| kron(&eye, f)));
        fam = lifted;
    }
    fam
}

/// Builds the canonical generator family for an admissible pair `(m, n)`.
///
/// `m` must be a multiple of the minimal module dimension `d(n)`; the minimal
/// family is block-diagonalized `m / d(n)` times. The construction is
/// deterministic, and `(2, 1)` yields exactly `U = [[0, -1], [1, 0]]`, the
/// sign convention under which the group law reproduces the standard
/// symplectic form on `R^2`.
pub fn build_generators(m: usize, n: usize) -> Result<HTypeStructure, CliffordError> {
    if n == 0 {
        return Ok(HTypeStructure::euclidean(m));
    }
    if !admissible(m, n) {
        return Err(CliffordError::NotAdmissible {
            m,
            n,
            rho: hurwitz_radon(m),
        });
    }
    let d = min_rep_dimension(n);
    if !m.is_multiple_of(d) {
        return Err(CliffordError::DimensionMismatch { m, n, min_dim: d });
    }
    let copies = m / d;
    let minimal = minimal_family(n);
    let u = minimal
        .into_iter()
        .map(|gen| {
            let blocks: Vec<&IntMatrix> = vec![&gen; copies];
            block_diag(&blocks)
        })
        .collect();
    Ok(HTypeStructure {
        format_version: STRUCTURE_FORMAT_VERSION,
        m,
        n,
        u,
    })
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Axiom-by-axiom verification report; see [`verify_structure`].
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub skew_symmetric: bool,
    pub orthogonal: bool,
    pub anticommute: bool,
    pub admissible: bool,
    /// Exact spot-check of `<U^(i) x, U^(j) x> = 0` on sampled integer vectors.
    pub pointwise_orthogonal: bool,
    pub failures: Vec<String>,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.skew_symmetric
            && self.orthogonal
            && self.anticommute
            && self.admissible
            && self.pointwise_orthogonal
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pass() {
            write!(f, "all axioms hold")
        } else {
            write!(f, "{}", self.failures.join("; "))
        }
    }
}

/// Checks every structure axiom in exact integer arithmetic: skew-symmetry,
/// orthogonality, pairwise anticommutation, Hurwitz-Radon admissibility, and
/// a seeded spot-check that `U^(i) x` and `U^(j) x` are orthogonal for
/// sampled integer vectors `x`.
pub fn verify_structure(s: &HTypeStructure) -> VerificationReport {
    let mut report = VerificationReport {
        skew_symmetric: true,
        orthogonal: true,
        anticommute: true,
        admissible: admissible(s.m, if s.n == 0 { 1 } else { s.n }) || s.n == 0,
        pointwise_orthogonal: true,
        failures: Vec::new(),
    };
    if s.n > 0 && !admissible(s.m, s.n) {
        report.admissible = false;
        report.failures.push(format!(
            "(m, n) = ({}, {}) violates n < rho(m) = {}",
            s.m,
            s.n,
            hurwitz_radon(s.m)
        ));
    }
    let eye = identity(s.m);
    for (i, u) in s.u.iter().enumerate() {
        if u.len() != s.m || u.iter().any(|r| r.len() != s.m) {
            report.skew_symmetric = false;
            report.orthogonal = false;
            report
                .failures
                .push(format!("U^({}) is not {m} x {m}", i + 1, m = s.m));
            continue;
        }
        if !is_zero(&mat_add(u, &transpose(u))) {
            report.skew_symmetric = false;
            report
                .failures
                .push(format!("U^({}) is not skew-symmetric", i + 1));
        }
        if mat_mul(u, &transpose(u)) != eye {
            report.orthogonal = false;
            report
                .failures
                .push(format!("U^({}) is not orthogonal", i + 1));
        }
    }
    for i in 0..s.u.len() {
        for j in (i + 1)..s.u.len() {
            let anti = mat_add(&mat_mul(&s.u[i], &s.u[j]), &mat_mul(&s.u[j], &s.u[i]));
            if !is_zero(&anti) {
                report.anticommute = false;
                report.failures.push(format!(
                    "U^({}) and U^({}) do not anticommute",
                    i + 1,
                    j + 1
                ));
            }
        }
    }
    // Spot-check of pointwise orthogonality on deterministic pseudo-random
    // integer vectors with entries in [-10, 10].
    if report.skew_symmetric && report.orthogonal {
        let mut state = 0x243F_6A88_85A3_08D3u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) % 21) as i64 - 10
        };
        'outer: for _ in 0..32 {
            let x: Vec<i64> = (0..s.m).map(|_| next()).collect();
            let images: Vec<Vec<i64>> = s
                .u
                .iter()
                .map(|u| {
                    (0..s.m)
                        .map(|r| (0..s.m).map(|c| u[r][c] * x[c]).sum())
                        .collect()
                })
                .collect();
            for i in 0..images.len() {
                for j in (i + 1)..images.len() {
                    let dot: i64 = images[i].iter().zip(&images[j]).map(|(a, b)| a * b).sum();
                    if dot != 0 {
                        report.pointwise_orthogonal = false;
                        report.failures.push(format!(
                            "<U^({}) x, U^({}) x> = {dot} != 0 for a sampled x",
                            i + 1,
                            j + 1
                        ));
                        break 'outer;
                    }
                }
            }
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hurwitz_radon_small_and_table_values() {
        assert_eq!(hurwitz_radon(1), 1);
        assert_eq!(hurwitz_radon(2), 2);
        assert_eq!(hurwitz_radon(4), 4);
        assert_eq!(hurwitz_radon(8), 8);
        assert_eq!(hurwitz_radon(16), 9);
        assert_eq!(hurwitz_radon(32), 10);
        assert_eq!(hurwitz_radon(64), 12);
        assert_eq!(hurwitz_radon(128), 16);
    }

    #[test]
    fn hurwitz_radon_depends_only_on_two_adic_valuation() {
        for m in 1usize..400 {
            let v = m.trailing_zeros();
            assert_eq!(hurwitz_radon(m), hurwitz_radon(1 << v), "m = {m}");
        }
    }

    #[test]
    fn min_rep_dimension_pattern() {
        assert_eq!(min_rep_dimension(1), 2);
        assert_eq!(min_rep_dimension(3), 4);
        assert_eq!(min_rep_dimension(8), 16);
        let expected = [2usize, 4, 4, 8, 8, 8, 8, 16];
        for (i, &d) in expected.iter().enumerate() {
            assert_eq!(min_rep_dimension(i + 1), d);
        }
        for n in 1..=8 {
            assert_eq!(min_rep_dimension(n + 8), 16 * min_rep_dimension(n));
        }
    }

    #[test]
    fn admissible_examples() {
        assert!(admissible(2, 1));
        assert!(!admissible(2, 2));
        assert!(admissible(8, 7));
    }

    #[test]
    fn admissibility_implies_minimal_dimension_divides() {
        for m in 1usize..=256 {
            for n in 1usize..=12 {
                if admissible(m, n) {
                    assert_eq!(m % min_rep_dimension(n), 0, "(m, n) = ({m}, {n})");
                }
            }
        }
    }

    #[test]
    fn heisenberg_generator_is_pinned() {
        let s = build_generators(2, 1).unwrap();
        assert_eq!(s.u, vec![vec![vec![0, -1], vec![1, 0]]]);
    }

    #[test]
    fn quaternionic_structure_verifies_exactly() {
        let s = build_generators(4, 3).unwrap();
        assert_eq!(s.u.len(), 3);
        assert!(verify_structure(&s).pass());
    }

    #[test]
    fn inadmissible_pair_is_rejected() {
        match build_generators(2, 2) {
            Err(CliffordError::NotAdmissible { rho: 2, .. }) => {}
            other => panic!("expected NotAdmissible, got {other:?}"),
        }
    }

    #[test]
    fn construction_is_deterministic() {
        for &(m, n) in &[(2usize, 1usize), (4, 3), (8, 5), (16, 8), (6, 1)] {
            let a = build_generators(m, n).unwrap();
            let b = build_generators(m, n).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn block_diagonal_copies_verify() {
        for &(m, n) in &[(6usize, 1usize), (8, 1), (8, 3), (12, 2)] {
            let s = build_generators(m, n).unwrap();
            assert!(verify_structure(&s).pass(), "({m}, {n})");
        }
    }

    #[test]
    fn period_eight_lift_verifies() {
        // n = 9 requires the Bott-periodicity lift onto R^32.
        let s = build_generators(32, 9).unwrap();
        assert_eq!(s.m, 32);
        assert!(verify_structure(&s).pass());
    }

    #[test]
    fn identity_candidate_fails_skew_symmetry() {
        let s = HTypeStructure {
            format_version: 1,
            m: 2,
            n: 1,
            u: vec![identity(2)],
        };
        let report = verify_structure(&s);
        assert!(!report.skew_symmetric);
        assert!(!report.pass());
    }

    #[test]
    fn duplicated_generator_fails_anticommutation() {
        let base = build_generators(4, 1).unwrap();
        let s = HTypeStructure {
            format_version: 1,
            m: 4,
            n: 2,
            u: vec![base.u[0].clone(), base.u[0].clone()],
        };
        let report = verify_structure(&s);
        assert!(!report.anticommute);
        assert!(report.skew_symmetric && report.orthogonal);
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let s = build_generators(4, 2).unwrap();
        let text = s.to_json();
        let back = HTypeStructure::from_json(&text).unwrap();
        assert_eq!(s, back);

        let bad = r#"{"m": 2, "n": 1, "U": [[[1, 0], [0, 1]]]}"#;
        assert!(HTypeStructure::from_json(bad).is_err());
    }

    #[test]
    fn pointwise_orthogonality_exact_on_integer_vectors() {
        let s = build_generators(8, 5).unwrap();
        // Deterministic integer vectors with entries in [-10, 10].
        let mut state = 12345u64;
        for _ in 0..200 {
            let x: Vec<i64> = (0..s.m)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(99);
                    ((state >> 33) % 21) as i64 - 10
                })
                .collect();
            let imgs: Vec<Vec<i64>> = s
                .u
                .iter()
                .map(|u| {
                    (0..s.m)
                        .map(|r| (0..s.m).map(|c| u[r][c] * x[c]).sum())
                        .collect()
                })
                .collect();
            for i in 0..imgs.len() {
                for j in (i + 1)..imgs.len() {
                    let dot: i64 = imgs[i].iter().zip(&imgs[j]).map(|(a, b)| a * b).sum();
                    assert_eq!(dot, 0);
                }
            }
        }
    }

    #[test]
    fn euclidean_structure_is_degenerate_and_valid() {
        let s = HTypeStructure::euclidean(3);
        assert!(s.is_euclidean());
        assert!(verify_structure(&s).pass());
    }
}
