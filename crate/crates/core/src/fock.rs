//! Fock-space density matrices, diagonal slices and the two dissipators the
//! structured solver is built from.
//!
//! All Fock indices are zero-based: level `n` is the state with `n` photons and
//! a truncation `dim = N` keeps levels `0..N`. Amplitudes above `N - 1` are
//! treated as exactly zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{falling_factorial, hermitian_eigenvalues, hermiticity_defect, trace, CMatrix, C64, ZERO};

/// Default Fock truncation (levels 0..=7).
pub const DEFAULT_DIM: usize = 8;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-8;
pub const PSD_TOL: f64 = 1e-8;
/// Largest conjugate-diagonal mismatch tolerated when reassembling.
pub const CONJUGATE_TOL: f64 = 1e-8;

/// A validated density matrix over the truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    entries: CMatrix,
}

impl FockDensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_trace_tolerance(entries, TRACE_TOL)
    }

    /// Like [`new`](Self::new) but accepts a trace within `trace_tol` of one,
    /// which is how solver outputs are admitted.
    pub fn with_trace_tolerance(entries: CMatrix, trace_tol: f64) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "expected a nonempty square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let defect = hermiticity_defect(&entries);
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
        }
        let tr = trace(&entries).re;
        if (tr - 1.0).abs() > trace_tol {
            return Err(Error::InvalidState(format!("trace {tr} deviates from 1")));
        }
        let min_eig = hermitian_eigenvalues(&entries)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { entries })
    }

    /// Wraps a matrix without validation. Used on solver hot paths where the
    /// invariants hold by construction.
    pub fn from_matrix_unchecked(entries: CMatrix) -> Self {
        Self { entries }
    }

    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        Self::new(&v * v.adjoint())
    }

    pub fn fock(dim: usize, level: usize) -> Result<Self> {
        if level >= dim {
            return Err(Error::OutOfRange {
                what: "Fock level",
                value: level as i64,
                allowed: format!("0..{dim}"),
            });
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(level, level)] = C64::new(1.0, 0.0);
        Ok(Self { entries: m })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        trace(&self.entries).re
    }

    /// `Tr(self · other)`, the overlap fidelity used throughout.
    pub fn overlap(&self, other: &FockDensityMatrix) -> f64 {
        crate::linalg::trace_product(&self.entries, &other.entries).re
    }
}

/// The `m`-th diagonal of a square matrix: `values[k] = ρ[r0 + k, c0 + k]`
/// with `(r0, c0) = (0, m)` for `m ≥ 0` and `(-m, 0)` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalVector {
    pub offset: i64,
    pub values: Vec<C64>,
}

impl DiagonalVector {
    pub fn new(offset: i64, values: Vec<C64>) -> Self {
        Self { offset, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Starting `(row, col)` of this diagonal.
    pub fn origin(&self) -> (usize, usize) {
        if self.offset >= 0 {
            (0, self.offset as usize)
        } else {
            ((-self.offset) as usize, 0)
        }
    }

    /// The mirror diagonal at `-offset` holding conjugated values.
    pub fn conjugate_mirror(&self) -> Self {
        Self {
            offset: -self.offset,
            values: self.values.iter().map(|z| z.conj()).collect(),
        }
    }
}

fn check_offset(m: i64, dim: usize) -> Result<()> {
    if m.unsigned_abs() as usize >= dim {
        return Err(Error::OutOfRange {
            what: "diagonal offset",
            value: m,
            allowed: format!("|m| < {dim}"),
        });
    }
    Ok(())
}

pub fn extract_diagonal_matrix(rho: &CMatrix, m: i64) -> Result<DiagonalVector> {
    let n = rho.nrows();
    check_offset(m, n)?;
    let len = n - m.unsigned_abs() as usize;
    let mut d = DiagonalVector::new(m, Vec::with_capacity(len));
    let (r0, c0) = d.origin();
    d.values.extend((0..len).map(|k| rho[(r0 + k, c0 + k)]));
    Ok(d)
}

pub fn extract_diagonal(rho: &FockDensityMatrix, m: i64) -> Result<DiagonalVector> {
    extract_diagonal_matrix(rho.matrix(), m)
}

/// All `2N - 1` diagonals ordered by offset from `-(N-1)` to `N-1`.
pub fn extract_all(rho: &CMatrix) -> Vec<DiagonalVector> {
    let n = rho.nrows() as i64;
    (-(n - 1)..n)
        .map(|m| extract_diagonal_matrix(rho, m).expect("offset in range"))
        .collect()
}

/// Reassembles a matrix from exactly one diagonal per offset. Conjugate
/// diagonals are averaged; a mismatch above [`CONJUGATE_TOL`] is an error.
pub fn assemble_matrix(diags: &[DiagonalVector], dim: usize) -> Result<CMatrix> {
    if dim == 0 {
        return Err(Error::Structural("dimension must be positive".into()));
    }
    let span = 2 * dim - 1;
    let mut slots: Vec<Option<&DiagonalVector>> = vec![None; span];
    for d in diags {
        check_offset(d.offset, dim)?;
        let expected = dim - d.offset.unsigned_abs() as usize;
        if d.len() != expected {
            return Err(Error::Structural(format!(
                "diagonal {} has length {}, expected {expected}",
                d.offset,
                d.len()
            )));
        }
        let slot = (d.offset + dim as i64 - 1) as usize;
        if slots[slot].replace(d).is_some() {
            return Err(Error::Structural(format!("duplicate diagonal offset {}", d.offset)));
        }
    }
    if let Some(missing) = slots.iter().position(Option::is_none) {
        return Err(Error::Structural(format!(
            "missing diagonal offset {}",
            missing as i64 - (dim as i64 - 1)
        )));
    }

    let mut out = CMatrix::zeros(dim, dim);
    for m in 0..dim as i64 {
        let upper = slots[(m + dim as i64 - 1) as usize].unwrap();
        let lower = slots[(-m + dim as i64 - 1) as usize].unwrap();
        for (k, (u, l)) in upper.values.iter().zip(&lower.values).enumerate() {
            let mismatch = (u - l.conj()).norm();
            if mismatch > CONJUGATE_TOL {
                return Err(Error::Structural(format!(
                    "diagonals ±{m} are not conjugate at position {k} (mismatch {mismatch:e})"
                )));
            }
            let sym = (u + l.conj()) * 0.5;
            let (i, j) = (k, k + m as usize);
            out[(i, j)] = sym;
            out[(j, i)] = sym.conj();
        }
    }
    Ok(out)
}

pub fn assemble_from_diagonals(diags: &[DiagonalVector], dim: usize) -> Result<FockDensityMatrix> {
    assemble_matrix(diags, dim).map(FockDensityMatrix::from_matrix_unchecked)
}

/// Linear engineered jump operator `L_o = Σ_n d_n |n⟩⟨n-1|`, `n = 1..N-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorLadder {
    dim: usize,
    coeffs: Vec<f64>,
    big_lambda: f64,
}

impl ProjectorLadder {
    /// `coeffs[n - 1]` is the amplitude of `|n⟩⟨n-1|`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Argument("ladder coefficients must be finite".into()));
        }
        let big_lambda = coeffs.iter().map(|d| d * d).sum();
        Ok(Self {
            dim: coeffs.len() + 1,
            coeffs,
            big_lambda,
        })
    }

    /// Builds a ladder from `(n, d_n)` pairs on `dim` levels.
    pub fn from_terms(dim: usize, terms: &[(usize, f64)]) -> Result<Self> {
        let mut coeffs = vec![0.0; dim.saturating_sub(1)];
        for &(n, d) in terms {
            if n == 0 || n >= dim {
                return Err(Error::OutOfRange {
                    what: "ladder target level",
                    value: n as i64,
                    allowed: format!("1..{dim}"),
                });
            }
            coeffs[n - 1] = d;
        }
        Self::new(coeffs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `Λ = Σ d_n²`.
    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    /// `λ_k`, the amplitude of `|k+1⟩⟨k|`; zero outside the ladder.
    pub fn raising(&self, k: i64) -> f64 {
        if k < 0 {
            return 0.0;
        }
        self.coeffs.get(k as usize).copied().unwrap_or(0.0)
    }

    /// Same ladder with `Λ = 1`.
    pub fn normalized(&self) -> Result<Self> {
        self.ensure_usable()?;
        let s = self.big_lambda.sqrt();
        Self::new(self.coeffs.iter().map(|d| d / s).collect())
    }

    pub fn ensure_usable(&self) -> Result<()> {
        if self.big_lambda > 0.0 {
            Ok(())
        } else {
            Err(Error::DegenerateLadder(self.big_lambda))
        }
    }

    /// `L_eng = L_o / √Λ` as a dense matrix.
    pub fn engineered_operator(&self) -> Result<CMatrix> {
        self.ensure_usable()?;
        let s = self.big_lambda.sqrt();
        let mut l = CMatrix::zeros(self.dim, self.dim);
        for (k, d) in self.coeffs.iter().enumerate() {
            l[(k + 1, k)] = C64::new(d / s, 0.0);
        }
        Ok(l)
    }
}

/// `D[aⁿ]ρ` element-wise, with `D[X]ρ = 2XρX† − X†Xρ − ρX†X`.
pub fn apply_lindblad_an_matrix(rho: &CMatrix, n: usize) -> Result<CMatrix> {
    let dim = rho.nrows();
    if n == 0 || n >= dim {
        return Err(Error::OutOfRange {
            what: "loss order",
            value: n as i64,
            allowed: format!("1..{dim}"),
        });
    }
    let a: Vec<f64> = (0..dim + n).map(|k| falling_factorial(k, n)).collect();
    let mut out = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut v = -(a[i] + a[j]) * rho[(i, j)];
            if i + n < dim && j + n < dim {
                v += 2.0 * (a[i + n] * a[j + n]).sqrt() * rho[(i + n, j + n)];
            }
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

pub fn apply_lindblad_an(rho: &FockDensityMatrix, n: usize) -> Result<CMatrix> {
    apply_lindblad_an_matrix(rho.matrix(), n)
}

/// `D[L_eng]ρ` element-wise with `L_eng = L_o/√Λ`.
pub fn apply_lindblad_eng_matrix(rho: &CMatrix, ladder: &ProjectorLadder) -> Result<CMatrix> {
    ladder.ensure_usable()?;
    let dim = rho.nrows();
    if ladder.dim() != dim {
        return Err(Error::Structural(format!(
            "ladder spans {} levels, state has {dim}",
            ladder.dim()
        )));
    }
    let inv = 1.0 / ladder.big_lambda();
    let mut out = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let (li, lj) = (ladder.raising(i as i64), ladder.raising(j as i64));
            let mut v = -(li * li + lj * lj) * rho[(i, j)];
            if i > 0 && j > 0 {
                let gain = ladder.raising(i as i64 - 1) * ladder.raising(j as i64 - 1);
                v += 2.0 * gain * rho[(i - 1, j - 1)];
            }
            out[(i, j)] = v * inv;
        }
    }
    Ok(out)
}

pub fn apply_lindblad_eng(rho: &FockDensityMatrix, ladder: &ProjectorLadder) -> Result<CMatrix> {
    apply_lindblad_eng_matrix(rho.matrix(), ladder)
}

/// Explicit `2XρX† − X†Xρ − ρX†X`, the product-form dissipator.
pub fn dissipator_product(x: &CMatrix, rho: &CMatrix) -> CMatrix {
    let xd = x.adjoint();
    let xdx = &xd * x;
    (x * rho * &xd) * C64::new(2.0, 0.0) - &xdx * rho - rho * &xdx
}

pub fn zero_matrix(dim: usize) -> CMatrix {
    CMatrix::from_element(dim, dim, ZERO)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{annihilation, max_abs_diff, ONE};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn half_identity() -> FockDensityMatrix {
        FockDensityMatrix::new(CMatrix::identity(2, 2) * c(0.5)).unwrap()
    }

    #[test]
    fn extract_examples() {
        let rho = half_identity();
        assert_eq!(extract_diagonal(&rho, 0).unwrap().values, vec![c(0.5), c(0.5)]);
        assert_eq!(extract_diagonal(&rho, 1).unwrap().values, vec![c(0.0)]);
        let plus = FockDensityMatrix::pure(&[c(0.5f64.sqrt()), c(0.5f64.sqrt())]).unwrap();
        let d = extract_diagonal(&plus, -1).unwrap();
        assert!((d.values[0] - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn extract_rejects_out_of_range() {
        assert!(matches!(
            extract_diagonal(&half_identity(), 2),
            Err(Error::OutOfRange { .. })
        ));
        assert!(extract_diagonal(&half_identity(), -2).is_err());
    }

    #[test]
    fn assemble_single_population() {
        let diags = vec![
            DiagonalVector::new(-1, vec![ZERO]),
            DiagonalVector::new(0, vec![ONE, ZERO]),
            DiagonalVector::new(1, vec![ZERO]),
        ];
        let rho = assemble_from_diagonals(&diags, 2).unwrap();
        assert_eq!(rho, FockDensityMatrix::fock(2, 0).unwrap());
    }

    #[test]
    fn assemble_flags_conjugate_mismatch() {
        let diags = vec![
            DiagonalVector::new(-1, vec![c(0.25)]),
            DiagonalVector::new(0, vec![c(0.5), c(0.5)]),
            DiagonalVector::new(1, vec![c(0.251)]),
        ];
        assert!(matches!(assemble_from_diagonals(&diags, 2), Err(Error::Structural(_))));
    }

    #[test]
    fn assemble_rejects_missing_and_duplicate() {
        let missing = vec![
            DiagonalVector::new(0, vec![c(0.5), c(0.5)]),
            DiagonalVector::new(1, vec![ZERO]),
        ];
        assert!(assemble_from_diagonals(&missing, 2).is_err());
        let dup = vec![
            DiagonalVector::new(-1, vec![ZERO]),
            DiagonalVector::new(0, vec![c(0.5), c(0.5)]),
            DiagonalVector::new(0, vec![c(0.5), c(0.5)]),
            DiagonalVector::new(1, vec![ZERO]),
        ];
        assert!(assemble_from_diagonals(&dup, 2).is_err());
    }

    #[test]
    fn single_photon_decay_of_one() {
        let rho = FockDensityMatrix::fock(2, 1).unwrap();
        let d = apply_lindblad_an(&rho, 1).unwrap();
        assert_eq!(d[(0, 0)], c(2.0));
        assert_eq!(d[(1, 1)], c(-2.0));
        assert_eq!(d[(0, 1)], ZERO);
    }

    #[test]
    fn vacuum_is_dark() {
        let rho = FockDensityMatrix::fock(8, 0).unwrap();
        for n in 1..8 {
            assert!(apply_lindblad_an(&rho, n).unwrap().iter().all(|z| *z == ZERO));
        }
    }

    #[test]
    fn two_photon_coherence_matches_product_form() {
        // ρ = |4⟩⟨7| (not a state; the formula is linear).
        let mut rho = CMatrix::zeros(8, 8);
        rho[(4, 7)] = ONE;
        let d = apply_lindblad_an_matrix(&rho, 2).unwrap();
        assert!((d[(2, 5)] - c(2.0 * (12.0f64 * 42.0).sqrt())).norm() < 1e-12);
        assert!((d[(4, 7)] - c(-54.0)).norm() < 1e-12);
        let a = annihilation(8);
        let oracle = dissipator_product(&(&a * &a), &rho);
        assert!(max_abs_diff(&d, &oracle) < 1e-12);
    }

    #[test]
    fn engineered_pump_from_vacuum() {
        let ladder = ProjectorLadder::new(vec![1.0]).unwrap();
        let rho = FockDensityMatrix::fock(2, 0).unwrap();
        let d = apply_lindblad_eng(&rho, &ladder).unwrap();
        assert_eq!(d[(1, 1)], c(2.0));
        assert_eq!(d[(0, 0)], c(-2.0));
        let oracle = dissipator_product(&ladder.engineered_operator().unwrap(), rho.matrix());
        assert!(max_abs_diff(&d, &oracle) < 1e-15);

        let top = FockDensityMatrix::fock(2, 1).unwrap();
        assert!(apply_lindblad_eng(&top, &ladder).unwrap().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn grl_pump_moves_three_to_four() {
        let ladder = ProjectorLadder::from_terms(8, &[(3, 0.5), (4, 0.5), (6, 0.5), (7, 0.5)]).unwrap();
        let rho = FockDensityMatrix::fock(8, 3).unwrap();
        let d = apply_lindblad_eng(&rho, &ladder).unwrap();
        let oracle = dissipator_product(&ladder.engineered_operator().unwrap(), rho.matrix());
        assert!(max_abs_diff(&d, &oracle) < 1e-14);
        assert!(d[(4, 4)].re > 0.0);
        assert!(d[(3, 3)].re < 0.0);
        assert!((d[(4, 4)].re + d[(3, 3)].re).abs() < 1e-14);
    }

    #[test]
    fn degenerate_ladder_is_rejected() {
        let ladder = ProjectorLadder::new(vec![0.0; 7]).unwrap();
        let rho = FockDensityMatrix::fock(8, 0).unwrap();
        assert!(matches!(
            apply_lindblad_eng(&rho, &ladder),
            Err(Error::DegenerateLadder(_))
        ));
    }

    #[test]
    fn loss_order_range() {
        let rho = FockDensityMatrix::fock(4, 1).unwrap();
        assert!(apply_lindblad_an(&rho, 0).is_err());
        assert!(apply_lindblad_an(&rho, 4).is_err());
    }

    #[test]
    fn construction_validates() {
        let mut m = CMatrix::identity(2, 2) * c(0.5);
        m[(0, 1)] = c(0.1);
        assert!(FockDensityMatrix::new(m.clone()).is_err());
        m[(1, 0)] = c(0.1);
        assert!(FockDensityMatrix::new(m).is_ok());
        let neg = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.5), c(-0.5)]));
        assert!(FockDensityMatrix::new(neg).is_err());
        assert!(FockDensityMatrix::new(CMatrix::identity(2, 2)).is_err());
    }
}
