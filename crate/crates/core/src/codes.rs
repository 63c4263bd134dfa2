//! Logical codewords, recovery operators and static code analysis.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticSolver;
use crate::error::{Error, Result};
use crate::fock::{FockDensityMatrix, ProjectorLadder, DEFAULT_DIM};
use crate::linalg::{annihilation, CMatrix, C64, ZERO};
use crate::params::LossChannelSet;

const ORTHONORMAL_TOL: f64 = 1e-10;
const KL_TOL: f64 = 1e-10;

/// Two orthonormal logical states over the truncated Fock basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codeword {
    zero_logical: Vec<C64>,
    one_logical: Vec<C64>,
}

impl Codeword {
    pub fn new(zero_logical: Vec<C64>, one_logical: Vec<C64>) -> Result<Self> {
        if zero_logical.len() != one_logical.len() || zero_logical.is_empty() {
            return Err(Error::DegenerateCode(format!(
                "logical vectors have lengths {} and {}",
                zero_logical.len(),
                one_logical.len()
            )));
        }
        let n0 = norm(&zero_logical);
        let n1 = norm(&one_logical);
        if (n0 - 1.0).abs() > ORTHONORMAL_TOL || (n1 - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::DegenerateCode(format!("logical norms are {n0} and {n1}")));
        }
        let overlap = inner(&zero_logical, &one_logical).norm();
        if overlap > ORTHONORMAL_TOL {
            return Err(Error::DegenerateCode(format!("logical states overlap by {overlap:e}")));
        }
        Ok(Self {
            zero_logical,
            one_logical,
        })
    }

    /// Normalizes both vectors before validating orthogonality.
    pub fn normalized(zero: Vec<C64>, one: Vec<C64>) -> Result<Self> {
        let (n0, n1) = (norm(&zero), norm(&one));
        if n0 == 0.0 || n1 == 0.0 {
            return Err(Error::DegenerateCode("a logical vector is zero".into()));
        }
        Self::new(
            zero.into_iter().map(|z| z / n0).collect(),
            one.into_iter().map(|z| z / n1).collect(),
        )
    }

    /// `|0_L⟩` and `|1_L⟩` from real `(level, amplitude)` pairs.
    pub fn from_terms(dim: usize, zero: &[(usize, f64)], one: &[(usize, f64)]) -> Result<Self> {
        let build = |terms: &[(usize, f64)]| -> Result<Vec<C64>> {
            let mut v = vec![ZERO; dim];
            for &(n, c) in terms {
                if n >= dim {
                    return Err(Error::OutOfRange {
                        what: "Fock level",
                        value: n as i64,
                        allowed: format!("0..{dim}"),
                    });
                }
                v[n] = C64::new(c, 0.0);
            }
            Ok(v)
        };
        Self::new(build(zero)?, build(one)?)
    }

    pub fn dim(&self) -> usize {
        self.zero_logical.len()
    }

    pub fn zero_logical(&self) -> &[C64] {
        &self.zero_logical
    }

    pub fn one_logical(&self) -> &[C64] {
        &self.one_logical
    }

    /// `cos(θ/2)|0_L⟩ + e^{iφ} sin(θ/2)|1_L⟩`.
    pub fn bloch_vector(&self, theta: f64, phi: f64) -> Vec<C64> {
        let a = C64::new((theta / 2.0).cos(), 0.0);
        let b = C64::from_polar((theta / 2.0).sin(), phi);
        self.zero_logical
            .iter()
            .zip(&self.one_logical)
            .map(|(z, o)| a * z + b * o)
            .collect()
    }

    pub fn bloch_state(&self, theta: f64, phi: f64) -> FockDensityMatrix {
        pure_unchecked(&self.bloch_vector(theta, phi))
    }

    /// Same logical states embedded in a larger truncation.
    pub fn padded(&self, dim: usize) -> Result<Self> {
        if dim < self.dim() {
            return Err(Error::Argument(format!(
                "cannot shrink a {}-level code to {dim}",
                self.dim()
            )));
        }
        let pad = |v: &[C64]| {
            let mut out = v.to_vec();
            out.resize(dim, ZERO);
            out
        };
        Ok(Self {
            zero_logical: pad(&self.zero_logical),
            one_logical: pad(&self.one_logical),
        })
    }

    /// `n̄`, the average of `⟨a†a⟩` over the two logical states.
    pub fn mean_photon(&self) -> f64 {
        let n = |v: &[C64]| v.iter().enumerate().map(|(k, z)| k as f64 * z.norm_sqr()).sum::<f64>();
        0.5 * (n(&self.zero_logical) + n(&self.one_logical))
    }
}

pub(crate) fn pure_unchecked(v: &[C64]) -> FockDensityMatrix {
    let v = nalgebra::DVector::from_column_slice(v);
    FockDensityMatrix::from_matrix_unchecked(&v * v.adjoint())
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// The engineered recovery operator of a code.
///
/// Linear ladders are what the structured solver handles. Codes whose
/// natural recovery is not of that form carry the general operator, which
/// only the dense solver accepts.
#[derive(Debug, Clone, PartialEq)]
pub enum Recovery {
    Ladder(ProjectorLadder),
    Operator(CMatrix),
}

impl Recovery {
    pub fn dim(&self) -> usize {
        match self {
            Recovery::Ladder(l) => l.dim(),
            Recovery::Operator(m) => m.nrows(),
        }
    }

    pub fn ladder(&self) -> Option<&ProjectorLadder> {
        match self {
            Recovery::Ladder(l) => Some(l),
            Recovery::Operator(_) => None,
        }
    }

    /// The operator scaled to unit Frobenius norm, i.e. `L_eng`.
    pub fn engineered_operator(&self) -> Result<CMatrix> {
        match self {
            Recovery::Ladder(l) => l.engineered_operator(),
            Recovery::Operator(m) => {
                let f = m.iter().map(|z| z.norm_sqr()).sum::<f64>();
                if f <= 0.0 {
                    return Err(Error::DegenerateLadder(f));
                }
                Ok(m / C64::new(f.sqrt(), 0.0))
            }
        }
    }

    /// Largest Fock-index shift among the nonzero entries.
    pub fn jump_distance(&self) -> usize {
        match self {
            Recovery::Ladder(l) => usize::from(l.coeffs().iter().any(|&d| d != 0.0)),
            Recovery::Operator(m) => max_gap(m),
        }
    }
}

fn max_gap(m: &CMatrix) -> usize {
    let mut gap = 0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)].norm() > KL_TOL {
                gap = gap.max(i.abs_diff(j));
            }
        }
    }
    gap
}

/// `|0_L⟩⟨E₀| + |1_L⟩⟨E₁|` with `E_i ∝ a|i_L⟩`: maps each single-loss error
/// state straight back to its logical origin.
pub fn projection_recovery(code: &Codeword) -> Result<CMatrix> {
    let a = annihilation(code.dim());
    let err = |v: &[C64]| -> Result<nalgebra::DVector<C64>> {
        let e = &a * nalgebra::DVector::from_column_slice(v);
        let n = e.norm();
        if n <= KL_TOL {
            return Err(Error::DegenerateCode("a logical state is annihilated by a".into()));
        }
        Ok(e / C64::new(n, 0.0))
    };
    let e0 = err(code.zero_logical())?;
    let e1 = err(code.one_logical())?;
    let z = nalgebra::DVector::from_column_slice(code.zero_logical());
    let o = nalgebra::DVector::from_column_slice(code.one_logical());
    Ok(&z * e0.adjoint() + &o * e1.adjoint())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeName {
    Grl,
    Rl,
    Binomial,
    T4c,
    Breakeven,
}

impl CodeName {
    pub const ALL: [CodeName; 5] = [
        CodeName::Grl,
        CodeName::Rl,
        CodeName::Binomial,
        CodeName::T4c,
        CodeName::Breakeven,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CodeName::Grl => "grl",
            CodeName::Rl => "rl",
            CodeName::Binomial => "binomial",
            CodeName::T4c => "t4c",
            CodeName::Breakeven => "breakeven",
        }
    }
}

impl fmt::Display for CodeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodeName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CodeName::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Argument(format!(
                    "unknown code '{s}' (expected grl, rl, binomial, t4c or breakeven)"
                ))
            })
    }
}

/// A benchmark code with its recovery.
#[derive(Debug, Clone)]
pub struct NamedCode {
    pub name: CodeName,
    pub code: Codeword,
    /// Present when the recovery is a linear ladder.
    pub ladder: Option<ProjectorLadder>,
    pub recovery: Option<Recovery>,
}

/// The five benchmark codes on the default 8-level truncation.
///
/// GRL and RL recover through linear ladders. Binomial and T4C use the
/// projection recovery, which the structured solver cannot represent.
pub fn named_code(name: CodeName) -> NamedCode {
    named_code_dim(name, DEFAULT_DIM).expect("benchmark codes fit in eight levels")
}

pub fn named_code_dim(name: CodeName, dim: usize) -> Result<NamedCode> {
    let code = match name {
        CodeName::Grl => Codeword::from_terms(dim, &[(4, 1.0)], &[(7, 1.0)])?,
        CodeName::Rl => Codeword::from_terms(dim, &[(2, 1.0)], &[(4, 1.0)])?,
        CodeName::Binomial => {
            let h = 0.5f64.sqrt();
            Codeword::from_terms(dim, &[(0, h), (4, h)], &[(2, 1.0)])?
        }
        CodeName::T4c => Codeword::from_terms(
            dim,
            &[(1, 0.35f64.sqrt()), (5, 0.65f64.sqrt())],
            &[(3, 0.9f64.sqrt()), (7, 0.1f64.sqrt())],
        )?,
        CodeName::Breakeven => Codeword::from_terms(dim, &[(0, 1.0)], &[(1, 1.0)])?,
    };
    let ladder = match name {
        CodeName::Grl => Some(ProjectorLadder::from_terms(
            dim,
            &[(3, 0.5), (4, 0.5), (6, 0.5), (7, 0.5)],
        )?),
        CodeName::Rl => Some(ProjectorLadder::from_terms(dim, &[(2, 1.0), (4, 1.0)])?.normalized()?),
        _ => None,
    };
    let recovery = match (name, &ladder) {
        (CodeName::Breakeven, _) => None,
        (_, Some(l)) => Some(Recovery::Ladder(l.clone())),
        (_, None) => Some(Recovery::Operator(projection_recovery(&code)?)),
    };
    Ok(NamedCode {
        name,
        code,
        ladder,
        recovery,
    })
}

fn check_open_interval(v: &[f64], what: &str) -> Result<()> {
    if let Some(x) = v.iter().find(|x| !(x.is_finite() && x.abs() < 1.0)) {
        return Err(Error::Argument(format!("{what} entries must lie in (-1, 1), got {x}")));
    }
    Ok(())
}

/// Splits an action vector by sign: positive entries build `|0_L⟩`, negative
/// entries build `|1_L⟩`.
pub fn codeword_from_action(c: &[f64]) -> Result<Codeword> {
    check_open_interval(c, "codeword action")?;
    let zero: Vec<C64> = c.iter().map(|&x| C64::new(x.max(0.0), 0.0)).collect();
    let one: Vec<C64> = c.iter().map(|&x| C64::new((-x).max(0.0), 0.0)).collect();
    if norm(&zero) == 0.0 || norm(&one) == 0.0 {
        return Err(Error::DegenerateCode(
            "codeword action needs at least one positive and one negative entry".into(),
        ));
    }
    Codeword::normalized(zero, one)
}

/// `|d[k]|` becomes the amplitude of `|k+1⟩⟨k|`.
pub fn ladder_from_action(d: &[f64]) -> Result<ProjectorLadder> {
    let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() {
        return Err(Error::Argument("ladder action must be finite".into()));
    }
    if norm <= 1e-9 {
        return Err(Error::DegenerateLadder(norm * norm));
    }
    ProjectorLadder::new(d.iter().map(|x| x.abs()).collect())
}

/// Errors considered by the Knill–Laflamme check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorOp {
    I,
    A,
    A2,
}

impl ErrorOp {
    fn power(self) -> usize {
        match self {
            ErrorOp::I => 0,
            ErrorOp::A => 1,
            ErrorOp::A2 => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ErrorOp::I => "I",
            ErrorOp::A => "a",
            ErrorOp::A2 => "a^2",
        }
    }
}

impl FromStr for ErrorOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "i" => Ok(ErrorOp::I),
            "a" => Ok(ErrorOp::A),
            "a2" | "a^2" | "a²" => Ok(ErrorOp::A2),
            _ => Err(Error::Argument(format!("unknown error operator '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlipViolation {
    pub pair: (ErrorOp, ErrorOp),
    /// `|⟨0_L|L_i† L_j|1_L⟩|`
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DephasingViolation {
    pub pair: (ErrorOp, ErrorOp),
    /// `⟨1_L|L_i† L_j|1_L⟩ − ⟨0_L|L_i† L_j|0_L⟩`; the modulus when complex.
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KLReport {
    pub error_set: Vec<ErrorOp>,
    pub flip_violations: Vec<FlipViolation>,
    pub dephasing_violations: Vec<DephasingViolation>,
}

impl KLReport {
    pub fn satisfied(&self) -> bool {
        self.flip_violations.is_empty() && self.dephasing_violations.is_empty()
    }

    pub fn dephasing(&self, i: ErrorOp, j: ErrorOp) -> Option<f64> {
        self.dephasing_violations
            .iter()
            .find(|v| v.pair == (i, j))
            .map(|v| v.difference)
    }

    pub fn flip(&self, i: ErrorOp, j: ErrorOp) -> Option<f64> {
        self.flip_violations
            .iter()
            .find(|v| v.pair == (i, j))
            .map(|v| v.magnitude)
    }
}

/// Evaluates `⟨0_L|L_i†L_j|1_L⟩` and the diagonal difference for every
/// ordered pair drawn from `error_set`.
pub fn kl_check(code: &Codeword, error_set: &[ErrorOp]) -> KLReport {
    let dim = code.dim();
    let a = annihilation(dim);
    let op = |e: ErrorOp| (0..e.power()).fold(CMatrix::identity(dim, dim), |acc, _| &a * acc);
    let z = nalgebra::DVector::from_column_slice(code.zero_logical());
    let o = nalgebra::DVector::from_column_slice(code.one_logical());
    let elem = |l: &nalgebra::DVector<C64>, m: &CMatrix, r: &nalgebra::DVector<C64>| (l.adjoint() * m * r)[(0, 0)];

    let mut report = KLReport {
        error_set: error_set.to_vec(),
        flip_violations: Vec::new(),
        dephasing_violations: Vec::new(),
    };
    for &ei in error_set {
        for &ej in error_set {
            let m = op(ei).adjoint() * op(ej);
            let flip = elem(&z, &m, &o).norm();
            if flip > KL_TOL {
                report.flip_violations.push(FlipViolation {
                    pair: (ei, ej),
                    magnitude: flip,
                });
            }
            let diff = elem(&o, &m, &o) - elem(&z, &m, &z);
            if diff.norm() > KL_TOL {
                let difference = if diff.im.abs() <= KL_TOL { diff.re } else { diff.norm() };
                report.dephasing_violations.push(DephasingViolation {
                    pair: (ei, ej),
                    difference,
                });
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodeAnalysis {
    pub mean_photon: f64,
    /// Largest Fock shift of the recovery operator.
    pub jump_distance: usize,
    /// Largest Fock gap any logical Pauli operator has to bridge.
    pub gate_distance: usize,
    /// Error states reached by one and two photon losses, with their Fock
    /// support and residue modulo three.
    pub mod3_syndrome_spaces: Vec<String>,
}

/// `d`, `d_g` and `n̄` of a code.
///
/// `d_g` is the largest index gap among the nonzero matrix elements of
/// `σ_x = |0_L⟩⟨1_L| + h.c.`, `σ_y` and `σ_z = |0_L⟩⟨0_L| − |1_L⟩⟨1_L|`.
pub fn hamiltonian_distances(code: &Codeword, recovery: Option<&Recovery>) -> CodeAnalysis {
    let z = nalgebra::DVector::from_column_slice(code.zero_logical());
    let o = nalgebra::DVector::from_column_slice(code.one_logical());
    let cross = &z * o.adjoint();
    let sx = &cross + cross.adjoint();
    let sy = (&cross - cross.adjoint()) * C64::new(0.0, -1.0);
    let sz = &z * z.adjoint() - &o * o.adjoint();
    let gate_distance = [sx, sy, sz].iter().map(max_gap).max().unwrap_or(0);

    let a = annihilation(code.dim());
    let mut spaces = Vec::new();
    for (label, v) in [("0", &z), ("1", &o)] {
        let mut e = v.clone();
        for k in 1..=2 {
            e = &a * e;
            let support: Vec<usize> = (0..e.len()).filter(|&n| e[n].norm() > KL_TOL).collect();
            if support.is_empty() {
                continue;
            }
            let residues: Vec<String> = support.iter().map(|n| (n % 3).to_string()).collect();
            let levels: Vec<String> = support.iter().map(|n| format!("|{n}>")).collect();
            spaces.push(format!(
                "{label}_e{k}: {} (mod 3: {})",
                levels.join("+"),
                residues.join(",")
            ));
        }
    }

    CodeAnalysis {
        mean_photon: code.mean_photon(),
        jump_distance: recovery.map_or(0, Recovery::jump_distance),
        gate_distance,
        mod3_syndrome_spaces: spaces,
    }
}

/// Fit of the GRL coherence decay `ρ₄₇(τ) ≈ ρ₄₇(0) e^{-u τ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtectionFit {
    pub eta: f64,
    pub lambda: f64,
    pub u: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub residual: f64,
}

/// Engineered rate at which the protecting factor is calibrated.
pub const CALIBRATION_LAMBDA: f64 = 1e4;

/// Fits `u` from the structured solver's evolution of `ρ₄₇` for the GRL code
/// over `τ ∈ [t_start, t_end]`, where the initial transient has died out.
pub fn fit_protecting_factor(eta: f64, lambda: f64, t_start: f64, t_end: f64, points: usize) -> Result<ProtectionFit> {
    if points < 2 || t_end <= t_start || t_start < 0.0 {
        return Err(Error::Argument(
            "fit window needs two or more points with t_end > t_start ≥ 0".into(),
        ));
    }
    let grl = named_code(CodeName::Grl);
    let ladder = grl.ladder.expect("GRL has a ladder");
    let solver = AnalyticSolver::new(
        DEFAULT_DIM,
        &LossChannelSet::with_double_photon(eta),
        Some(&ladder),
        lambda,
    )?;
    let plus = grl.code.bloch_state(std::f64::consts::FRAC_PI_2, 0.0);
    let c0 = plus.matrix()[(4, 7)];
    let taus: Vec<f64> = (0..points)
        .map(|k| t_start + (t_end - t_start) * k as f64 / (points - 1) as f64)
        .collect();
    let states = solver.evolve_series(&plus, &taus)?;
    let ys: Vec<f64> = states.iter().map(|s| (s.matrix()[(4, 7)] / c0).norm().ln()).collect();
    let (slope, intercept) = linear_fit(&taus, &ys);
    let residual = (taus
        .iter()
        .zip(&ys)
        .map(|(t, y)| (y - (slope * t + intercept)).powi(2))
        .sum::<f64>()
        / points as f64)
        .sqrt();
    Ok(ProtectionFit {
        eta,
        lambda,
        u: -slope,
        residual,
    })
}

/// Calibrated protecting factor at the default fit window.
pub fn calibrated_u(eta: f64) -> Result<ProtectionFit> {
    fit_protecting_factor(eta, CALIBRATION_LAMBDA, 1.0, 4.2, 33)
}

/// Least-squares `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `F̄(τ) = 2/3 + e^{-uτ}/3` for the GRL code.
pub fn grl_closed_form(tau: f64, eta: f64, u_override: Option<f64>) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::Argument(format!("τ must be non-negative, got {tau}")));
    }
    if !(0.0..=0.08).contains(&eta) {
        return Err(Error::OutOfRange {
            what: "eta (x1000)",
            value: (eta * 1000.0).round() as i64,
            allowed: "0..=80".into(),
        });
    }
    let u = match u_override {
        Some(u) => u,
        None => calibrated_u(eta)?.u,
    };
    Ok(2.0 / 3.0 + (-u * tau).exp() / 3.0)
}

/// `L_o ∝ |4⟩⟨3| + |7⟩⟨6| + ξ(|3⟩⟨2| + |6⟩⟨5|)`, normalized.
pub fn xi_family(xi: f64) -> Result<ProjectorLadder> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::Argument(format!("ξ must be positive, got {xi}")));
    }
    ProjectorLadder::from_terms(DEFAULT_DIM, &[(3, xi), (4, 1.0), (6, xi), (7, 1.0)])?.normalized()
}
