//! Structured solver for the cavity-only master equation
//! `dρ/dτ = Σ_n (η_n/2) D[aⁿ]ρ + (λ/2) D[L_eng]ρ`.
//!
//! Each diagonal `ρ^(m)` evolves under its own small real generator, so the
//! full problem splits into `N` independent linear systems (`m ≥ 0`; the
//! negative offsets follow by conjugation). Each system is diagonalized once
//! and any number of time points then cost a matrix-vector product.

use std::sync::OnceLock;

use nalgebra::linalg::Schur;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{DiagonalVector, FockDensityMatrix, ProjectorLadder};
use crate::linalg::{expm_real, falling_factorial, one_norm, CMatrix, RMatrix, C64, ZERO};
use crate::params::LossChannelSet;

/// Eigenvector condition number above which the matrix exponential is used
/// instead of the eigendecomposition.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Below this truncation the diagonals are solved sequentially; thread
/// dispatch costs more than the work.
const PARALLEL_MIN_DIM: usize = 16;

#[derive(Debug, Clone)]
enum Propagator {
    Spectral {
        eigenvalues: Vec<C64>,
        vectors: CMatrix,
        inverse: CMatrix,
    },
    Exponential,
}

/// The generator `M^(m)` of one diagonal, acting on
/// `[ρ_{0,m}, ρ_{1,1+m}, …, ρ_{N-1-m,N-1}]`.
#[derive(Debug)]
pub struct DiagonalGenerator {
    offset: i64,
    matrix: RMatrix,
    propagator: OnceLock<Propagator>,
}

impl Clone for DiagonalGenerator {
    fn clone(&self) -> Self {
        let propagator = OnceLock::new();
        if let Some(p) = self.propagator.get() {
            let _ = propagator.set(p.clone());
        }
        Self {
            offset: self.offset,
            matrix: self.matrix.clone(),
            propagator,
        }
    }
}

/// Builds `M^(m)` for the given loss channels and engineered ladder.
///
/// `lambda` is the rate of the engineered dissipator in units of `γ_a`, i.e.
/// the equation reads `(λ/2) D[L_eng]`. A ladder is required iff `λ > 0`.
pub fn build_diagonal_generator(
    dim: usize,
    m: i64,
    channels: &LossChannelSet,
    ladder: Option<&ProjectorLadder>,
    lambda: f64,
) -> Result<DiagonalGenerator> {
    if m.unsigned_abs() as usize >= dim {
        return Err(Error::OutOfRange {
            what: "diagonal offset",
            value: m,
            allowed: format!("|m| < {dim}"),
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!(
            "λ must be finite and non-negative, got {lambda}"
        )));
    }
    channels.validate()?;
    let ladder = match (ladder, lambda > 0.0) {
        (None, true) => {
            return Err(Error::Config("an engineered ladder is required when λ > 0".into()));
        }
        (Some(l), true) => {
            l.ensure_usable()?;
            if l.dim() != dim {
                return Err(Error::Structural(format!(
                    "ladder spans {} levels, solver uses {dim}",
                    l.dim()
                )));
            }
            Some(l)
        }
        (_, false) => None,
    };

    // Only m ≥ 0 is ever built: the generator of −m is the same matrix.
    let shift = m.unsigned_abs() as usize;
    let len = dim - shift;
    let mut mat = RMatrix::zeros(len, len);

    for (n, eta) in channels.iter() {
        for a in 0..len {
            let (i, j) = (a, a + shift);
            mat[(a, a)] -= 0.5 * eta * (falling_factorial(i, n) + falling_factorial(j, n));
            if a + n < len {
                mat[(a, a + n)] += eta * (falling_factorial(i + n, n) * falling_factorial(j + n, n)).sqrt();
            }
        }
    }

    if let Some(l) = ladder {
        let scale = lambda / l.big_lambda();
        for a in 0..len {
            let (i, j) = (a as i64, (a + shift) as i64);
            let (li, lj) = (l.raising(i), l.raising(j));
            mat[(a, a)] -= 0.5 * scale * (li * li + lj * lj);
            if a > 0 {
                mat[(a, a - 1)] += scale * l.raising(i - 1) * l.raising(j - 1);
            }
        }
    }

    Ok(DiagonalGenerator {
        offset: m,
        matrix: mat,
        propagator: OnceLock::new(),
    })
}

impl DiagonalGenerator {
    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    fn propagator(&self) -> &Propagator {
        self.propagator.get_or_init(|| decompose(&self.matrix))
    }

    /// Forces the eigendecomposition now rather than at first use.
    pub fn prepare(&self) {
        let _ = self.propagator();
    }

    /// True when the eigenbasis was too ill-conditioned and evolution goes
    /// through the matrix exponential.
    pub fn uses_fallback(&self) -> bool {
        matches!(self.propagator(), Propagator::Exponential)
    }

    /// Eigenvalues of `M^(m)`. Computed from the Schur form even when the
    /// exponential fallback is active.
    pub fn eigenvalues(&self) -> Vec<C64> {
        match self.propagator() {
            Propagator::Spectral { eigenvalues, .. } => eigenvalues.clone(),
            Propagator::Exponential => schur_eigenvalues(&self.matrix),
        }
    }

    /// `exp(M τ) x` for a vector of coefficients on this diagonal.
    fn apply(&self, x: &[C64], tau: f64) -> Vec<C64> {
        match self.propagator() {
            Propagator::Spectral {
                eigenvalues,
                vectors,
                inverse,
            } => {
                let c = inverse * nalgebra::DVector::from_column_slice(x);
                spectral_combine(eigenvalues, vectors, c.as_slice(), tau)
            }
            Propagator::Exponential => exponential_apply(&self.matrix, x, tau),
        }
    }

    /// Like [`apply`] over a time grid, reusing the modal coefficients.
    fn apply_series(&self, x: &[C64], taus: &[f64]) -> Vec<Vec<C64>> {
        match self.propagator() {
            Propagator::Spectral {
                eigenvalues,
                vectors,
                inverse,
            } => {
                let c = inverse * nalgebra::DVector::from_column_slice(x);
                taus.iter()
                    .map(|&t| spectral_combine(eigenvalues, vectors, c.as_slice(), t))
                    .collect()
            }
            Propagator::Exponential => taus.iter().map(|&t| exponential_apply(&self.matrix, x, t)).collect(),
        }
    }
}

fn spectral_combine(w: &[C64], v: &CMatrix, c: &[C64], tau: f64) -> Vec<C64> {
    let n = v.nrows();
    let weights: Vec<C64> = w.iter().zip(c).map(|(wl, cl)| (wl * tau).exp() * cl).collect();
    (0..n)
        .map(|r| {
            let mut acc = ZERO;
            for (l, wt) in weights.iter().enumerate() {
                acc += v[(r, l)] * wt;
            }
            acc
        })
        .collect()
}

fn exponential_apply(m: &RMatrix, x: &[C64], tau: f64) -> Vec<C64> {
    let e = expm_real(&(m * tau));
    let n = e.nrows();
    (0..n)
        .map(|r| (0..n).fold(ZERO, |acc, k| acc + x[k] * e[(r, k)]))
        .collect()
}

fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

fn schur_eigenvalues(m: &RMatrix) -> Vec<C64> {
    let (_, t) = Schur::new(to_complex(m)).unpack();
    t.diagonal().iter().copied().collect()
}

/// Complex Schur form `M = Q T Q†`, then eigenvectors of the triangular `T`
/// by back-substitution.
fn decompose(m: &RMatrix) -> Propagator {
    let n = m.nrows();
    if n == 0 {
        return Propagator::Exponential;
    }
    let (q, t) = Schur::new(to_complex(m)).unpack();
    let w: Vec<C64> = t.diagonal().iter().copied().collect();

    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        y[(k, k)] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let mut s = ZERO;
            for l in j + 1..=k {
                s += t[(j, l)] * y[(l, k)];
            }
            y[(j, k)] = -s / (t[(j, j)] - w[k]);
        }
    }
    let mut v = q * y;
    for mut col in v.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 && norm.is_finite() {
            col /= C64::new(norm, 0.0);
        }
    }

    if v.iter().any(|z| !z.is_finite()) {
        return Propagator::Exponential;
    }
    let Some(inverse) = v.clone().try_inverse() else {
        return Propagator::Exponential;
    };
    if inverse.iter().any(|z| !z.is_finite()) {
        return Propagator::Exponential;
    }
    let cond = one_norm(&v) * one_norm(&inverse);
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Propagator::Exponential;
    }
    Propagator::Spectral {
        eigenvalues: w,
        vectors: v,
        inverse,
    }
}

/// Evolves one diagonal for dimensionless time `tau`.
pub fn solve_diagonal(gen: &DiagonalGenerator, initial: &DiagonalVector, tau: f64) -> Result<DiagonalVector> {
    if initial.offset.unsigned_abs() != gen.offset.unsigned_abs() || initial.len() != gen.len() {
        return Err(Error::Structural(format!(
            "diagonal {} (length {}) does not match generator {} (length {})",
            initial.offset,
            initial.len(),
            gen.offset,
            gen.len()
        )));
    }
    check_tau(tau)?;
    if initial.offset < 0 {
        // Negative offsets evolve as the conjugate of their mirror.
        let mirrored = initial.conjugate_mirror();
        let out = gen.apply(&mirrored.values, tau);
        return Ok(DiagonalVector::new(
            initial.offset,
            out.into_iter().map(|z| z.conj()).collect(),
        ));
    }
    Ok(DiagonalVector::new(initial.offset, gen.apply(&initial.values, tau)))
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "evolution time must be finite and non-negative, got {tau}"
        )))
    }
}

/// All `N` non-negative diagonal generators of one configuration, with their
/// decompositions cached.
#[derive(Debug, Clone)]
pub struct AnalyticSolver {
    dim: usize,
    generators: Vec<DiagonalGenerator>,
}

impl AnalyticSolver {
    pub fn new(dim: usize, channels: &LossChannelSet, ladder: Option<&ProjectorLadder>, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("Fock dimension must be positive".into()));
        }
        if channels.max_order() >= dim {
            return Err(Error::OutOfRange {
                what: "loss order",
                value: channels.max_order() as i64,
                allowed: format!("1..{dim}"),
            });
        }
        let generators = (0..dim as i64)
            .map(|m| build_diagonal_generator(dim, m, channels, ladder, lambda))
            .collect::<Result<Vec<_>>>()?;
        let solver = Self { dim, generators };
        if dim >= PARALLEL_MIN_DIM {
            solver.generators.par_iter().for_each(DiagonalGenerator::prepare);
        } else {
            solver.generators.iter().for_each(DiagonalGenerator::prepare);
        }
        Ok(solver)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator(&self, m: usize) -> &DiagonalGenerator {
        &self.generators[m]
    }

    pub fn generators(&self) -> &[DiagonalGenerator] {
        &self.generators
    }

    /// Largest real part over every eigenvalue of every diagonal.
    pub fn max_eigen_real(&self) -> f64 {
        self.generators
            .iter()
            .flat_map(|g| g.eigenvalues())
            .map(|w| w.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Number of diagonals that fell back to the matrix exponential.
    pub fn fallback_count(&self) -> usize {
        self.generators.iter().filter(|g| g.uses_fallback()).count()
    }

    fn check_state(&self, rho: &CMatrix) -> Result<()> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::Structural(format!(
                "state is {}x{}, solver expects {}",
                rho.nrows(),
                rho.ncols(),
                self.dim
            )));
        }
        Ok(())
    }

    fn upper_diagonal(rho: &CMatrix, m: usize) -> Vec<C64> {
        (0..rho.nrows() - m).map(|a| rho[(a, a + m)]).collect()
    }

    fn write_diagonal(out: &mut CMatrix, m: usize, values: &[C64]) {
        for (a, &z) in values.iter().enumerate() {
            out[(a, a + m)] = z;
            if m > 0 {
                out[(a + m, a)] = z.conj();
            } else {
                // Populations are real; drop round-off imaginary parts.
                out[(a, a)] = C64::new(z.re, 0.0);
            }
        }
    }

    /// Evolves a raw matrix; the caller is responsible for it being a state.
    pub fn evolve_matrix(&self, rho: &CMatrix, tau: f64) -> Result<CMatrix> {
        self.check_state(rho)?;
        check_tau(tau)?;
        let solve = |m: usize| self.generators[m].apply(&Self::upper_diagonal(rho, m), tau);
        let diags: Vec<Vec<C64>> = if self.dim >= PARALLEL_MIN_DIM {
            (0..self.dim).into_par_iter().map(solve).collect()
        } else {
            (0..self.dim).map(solve).collect()
        };
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (m, d) in diags.iter().enumerate() {
            Self::write_diagonal(&mut out, m, d);
        }
        Ok(out)
    }

    pub fn evolve(&self, rho: &FockDensityMatrix, tau: f64) -> Result<FockDensityMatrix> {
        self.evolve_matrix(rho.matrix(), tau)
            .map(FockDensityMatrix::from_matrix_unchecked)
    }

    /// One state per grid point; `taus` must be nondecreasing.
    pub fn evolve_series_matrix(&self, rho: &CMatrix, taus: &[f64]) -> Result<Vec<CMatrix>> {
        self.check_state(rho)?;
        check_grid(taus)?;
        let solve = |m: usize| self.generators[m].apply_series(&Self::upper_diagonal(rho, m), taus);
        let per_diag: Vec<Vec<Vec<C64>>> = if self.dim >= PARALLEL_MIN_DIM {
            (0..self.dim).into_par_iter().map(solve).collect()
        } else {
            (0..self.dim).map(solve).collect()
        };
        let mut out = vec![CMatrix::zeros(self.dim, self.dim); taus.len()];
        for (m, series) in per_diag.iter().enumerate() {
            for (k, d) in series.iter().enumerate() {
                Self::write_diagonal(&mut out[k], m, d);
            }
        }
        Ok(out)
    }

    pub fn evolve_series(&self, rho: &FockDensityMatrix, taus: &[f64]) -> Result<Vec<FockDensityMatrix>> {
        Ok(self
            .evolve_series_matrix(rho.matrix(), taus)?
            .into_iter()
            .map(FockDensityMatrix::from_matrix_unchecked)
            .collect())
    }
}

fn check_grid(taus: &[f64]) -> Result<()> {
    for &t in taus {
        check_tau(t)?;
    }
    if taus.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Argument("time grid must be nondecreasing".into()));
    }
    Ok(())
}

/// Evolves `rho0` for `tau` under `channels` and `(λ/2) D[L_eng]`.
pub fn evolve(
    rho0: &FockDensityMatrix,
    channels: &LossChannelSet,
    ladder: Option<&ProjectorLadder>,
    lambda: f64,
    tau: f64,
) -> Result<FockDensityMatrix> {
    AnalyticSolver::new(rho0.dim(), channels, ladder, lambda)?.evolve(rho0, tau)
}

/// [`evolve`] over a nondecreasing grid, sharing one decomposition.
pub fn evolve_series(
    rho0: &FockDensityMatrix,
    channels: &LossChannelSet,
    ladder: Option<&ProjectorLadder>,
    lambda: f64,
    taus: &[f64],
) -> Result<Vec<FockDensityMatrix>> {
    check_grid(taus)?;
    AnalyticSolver::new(rho0.dim(), channels, ladder, lambda)?.evolve_series(rho0, taus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::extract_diagonal;
    use crate::linalg::max_abs_diff;

    fn real(m: &RMatrix) -> Vec<f64> {
        m.as_slice().to_vec()
    }

    #[test]
    fn free_decay_generator_two_levels() {
        let g = build_diagonal_generator(2, 0, &LossChannelSet::single_photon(), None, 0.0).unwrap();
        assert_eq!(g.matrix(), &RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, -1.0]));
        let g = build_diagonal_generator(2, 1, &LossChannelSet::single_photon(), None, 0.0).unwrap();
        assert_eq!(real(g.matrix()), vec![-0.5]);
    }

    #[test]
    fn pumped_generator_two_levels() {
        let ladder = ProjectorLadder::new(vec![1.0]).unwrap();
        let g = build_diagonal_generator(2, 0, &LossChannelSet::single_photon(), Some(&ladder), 100.0).unwrap();
        assert_eq!(g.matrix(), &RMatrix::from_row_slice(2, 2, &[-100.0, 1.0, 100.0, -1.0]));
    }

    #[test]
    fn ladder_required_with_positive_lambda() {
        let r = build_diagonal_generator(4, 0, &LossChannelSet::single_photon(), None, 1.0);
        assert!(matches!(r, Err(Error::Config(_))));
    }

    #[test]
    fn zero_time_is_identity() {
        let g = build_diagonal_generator(3, 0, &LossChannelSet::single_photon(), None, 0.0).unwrap();
        let d = DiagonalVector::new(0, vec![C64::new(0.2, 0.0), C64::new(0.3, 0.0), C64::new(0.5, 0.0)]);
        let out = solve_diagonal(&g, &d, 0.0).unwrap();
        for (a, b) in out.values.iter().zip(&d.values) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn two_level_free_decay() {
        let g = build_diagonal_generator(2, 0, &LossChannelSet::single_photon(), None, 0.0).unwrap();
        let d = DiagonalVector::new(0, vec![ZERO, C64::new(1.0, 0.0)]);
        let out = solve_diagonal(&g, &d, 0.6).unwrap();
        let e = (-0.6f64).exp();
        assert!((out.values[0].re - (1.0 - e)).abs() < 1e-12);
        assert!((out.values[1].re - e).abs() < 1e-12);
    }

    #[test]
    fn offset_mismatch_is_structural() {
        let g = build_diagonal_generator(3, 1, &LossChannelSet::single_photon(), None, 0.0).unwrap();
        let d = DiagonalVector::new(0, vec![ZERO; 3]);
        assert!(matches!(solve_diagonal(&g, &d, 0.1), Err(Error::Structural(_))));
    }

    #[test]
    fn negative_offset_is_conjugate_of_positive() {
        let g = build_diagonal_generator(3, 1, &LossChannelSet::single_photon(), None, 0.0).unwrap();
        let up = DiagonalVector::new(1, vec![C64::new(0.1, 0.2), C64::new(0.05, -0.1)]);
        let down = up.conjugate_mirror();
        let a = solve_diagonal(&g, &up, 0.7).unwrap();
        let b = solve_diagonal(&g, &down, 0.7).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y.conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn vacuum_is_fixed() {
        let rho = FockDensityMatrix::fock(8, 0).unwrap();
        let ladder = ProjectorLadder::from_terms(8, &[(3, 1.0), (4, 1.0), (6, 1.0), (7, 1.0)]).unwrap();
        let out = evolve(&rho, &LossChannelSet::with_double_photon(0.05), Some(&ladder), 1e4, 2.0).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-9);
    }

    #[test]
    fn fock_one_decays() {
        let rho = FockDensityMatrix::fock(8, 1).unwrap();
        let out = evolve(&rho, &LossChannelSet::single_photon(), None, 0.0, 1.0).unwrap();
        let e = (-1.0f64).exp();
        assert!((out.matrix()[(0, 0)].re - (1.0 - e)).abs() < 1e-12);
        assert!((out.matrix()[(1, 1)].re - e).abs() < 1e-12);
    }

    #[test]
    fn series_matches_single_calls() {
        let ladder = ProjectorLadder::from_terms(8, &[(3, 1.0), (4, 1.0), (6, 1.0), (7, 1.0)]).unwrap();
        let s = 0.5f64.sqrt();
        let mut amp = vec![ZERO; 8];
        amp[4] = C64::new(s, 0.0);
        amp[7] = C64::new(0.0, s);
        let rho = FockDensityMatrix::pure(&amp).unwrap();
        let ch = LossChannelSet::with_double_photon(0.012);
        let solver = AnalyticSolver::new(8, &ch, Some(&ladder), 1e4).unwrap();
        let taus: Vec<f64> = (1..=70).map(|k| 0.06 * k as f64).collect();
        let series = solver.evolve_series(&rho, &taus).unwrap();
        for (t, s) in taus.iter().zip(&series) {
            let single = solver.evolve(&rho, *t).unwrap();
            assert!(max_abs_diff(single.matrix(), s.matrix()) < 1e-12);
        }
        assert!(solver.evolve_series(&rho, &[0.3, 0.1]).is_err());
        let same = solver.evolve_series(&rho, &[0.3, 0.3]).unwrap();
        assert_eq!(same[0], same[1]);
        let zero = solver.evolve_series(&rho, &[0.0]).unwrap();
        assert!(max_abs_diff(zero[0].matrix(), rho.matrix()) < 1e-12);
    }

    #[test]
    fn grl_generator_is_dissipative() {
        let ladder = ProjectorLadder::from_terms(8, &[(3, 1.0), (4, 1.0), (6, 1.0), (7, 1.0)]).unwrap();
        let solver = AnalyticSolver::new(8, &LossChannelSet::with_double_photon(0.08), Some(&ladder), 1e4).unwrap();
        assert!(solver.max_eigen_real() <= 1e-9);
    }

    #[test]
    fn fallback_agrees_with_spectral_path() {
        let ladder = ProjectorLadder::from_terms(8, &[(3, 1.0), (4, 1.0), (6, 1.0), (7, 1.0)]).unwrap();
        let gen =
            build_diagonal_generator(8, 3, &LossChannelSet::with_double_photon(0.012), Some(&ladder), 1e4).unwrap();
        let x: Vec<C64> = (0..5).map(|k| C64::new(0.1 * k as f64, -0.05)).collect();
        let spectral = gen.apply(&x, 0.6);
        let direct = exponential_apply(gen.matrix(), &x, 0.6);
        for (a, b) in spectral.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn defective_generator_uses_exponential() {
        // A Jordan block has a single eigenvector.
        let m = RMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        let gen = DiagonalGenerator {
            offset: 0,
            matrix: m,
            propagator: OnceLock::new(),
        };
        assert!(gen.uses_fallback());
        let out = gen.apply(&[ZERO, C64::new(1.0, 0.0)], 1.0);
        assert!((out[0].re - (-1.0f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn extract_then_solve_matches_evolve() {
        let ladder = ProjectorLadder::from_terms(8, &[(2, 0.3), (5, 0.9)]).unwrap();
        let ch = LossChannelSet::with_double_photon(0.04);
        let s = 0.5f64.sqrt();
        let mut amp = vec![ZERO; 8];
        amp[1] = C64::new(s, 0.0);
        amp[5] = C64::new(s, 0.0);
        let rho = FockDensityMatrix::pure(&amp).unwrap();
        let full = evolve(&rho, &ch, Some(&ladder), 100.0, 0.4).unwrap();
        let gen = build_diagonal_generator(8, 4, &ch, Some(&ladder), 100.0).unwrap();
        let d = solve_diagonal(&gen, &extract_diagonal(&rho, 4).unwrap(), 0.4).unwrap();
        let want = extract_diagonal(&full, 4).unwrap();
        for (a, b) in d.values.iter().zip(&want.values) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
