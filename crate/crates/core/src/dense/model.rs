//! Lindblad generators assembled from sparse operators.

use std::fmt;
use std::sync::Arc;

use nalgebra_sparse::ops::serial::spmm_csr_dense;
use nalgebra_sparse::ops::Op;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, I};

pub type SparseOp = CsrMatrix<C64>;

/// Drops exact zeros.
pub fn sparse(m: &CMatrix) -> SparseOp {
    let mut coo = CooMatrix::new(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != C64::new(0.0, 0.0) {
                coo.push(i, j, v);
            }
        }
    }
    CsrMatrix::from(&coo)
}

/// A scalar that may depend on time.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Varying(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Coefficient {
    pub fn varying(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Coefficient::Varying(Arc::new(f))
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Varying(f) => f(t),
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Varying(_) => f.write_str("Varying(..)"),
        }
    }
}

#[derive(Debug, Clone)]
struct Collapse {
    rate: Coefficient,
    op: SparseOp,
}

#[derive(Debug, Clone)]
struct HamiltonianTerm {
    coef: Coefficient,
    op: SparseOp,
}

/// `dρ/dt = −i[H(t), ρ] + Σ_k (γ_k(t)/2)(2X_kρX_k† − X_k†X_kρ − ρX_k†X_k)`.
///
/// Constant terms are folded into one non-Hermitian operator
/// `K = −iH − ½Σγ X†X`, so each evaluation costs `Kρ + (Kρ)† + Σγ XρX†`
/// plus one product per time-dependent term.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    dim: usize,
    constant_k: CMatrix,
    constant_k_sparse: Option<SparseOp>,
    varying_h: Vec<HamiltonianTerm>,
    varying_decay: Vec<HamiltonianTerm>,
    collapses: Vec<Collapse>,
}

impl LindbladModel {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            constant_k: CMatrix::zeros(dim, dim),
            constant_k_sparse: None,
            varying_h: Vec::new(),
            varying_decay: Vec::new(),
            collapses: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check(&self, m: &CMatrix, what: &str) -> Result<()> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::Structural(format!(
                "{what} is {}x{}, model dimension is {}",
                m.nrows(),
                m.ncols(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Adds `coef(t) · h` to the Hamiltonian.
    pub fn add_hamiltonian(&mut self, coef: Coefficient, h: &CMatrix) -> Result<&mut Self> {
        self.check(h, "Hamiltonian term")?;
        match coef {
            Coefficient::Constant(c) => {
                self.constant_k += h * (-I * c);
                self.constant_k_sparse = None;
            }
            c => self.varying_h.push(HamiltonianTerm { coef: c, op: sparse(h) }),
        }
        Ok(self)
    }

    /// Adds `(rate(t)/2) D[x]`.
    pub fn add_collapse(&mut self, rate: Coefficient, x: &CMatrix) -> Result<&mut Self> {
        self.check(x, "collapse operator")?;
        let xdx = x.adjoint() * x;
        match &rate {
            Coefficient::Constant(g) => {
                if *g == 0.0 {
                    return Ok(self);
                }
                self.constant_k -= &xdx * C64::new(0.5 * g, 0.0);
                self.constant_k_sparse = None;
            }
            Coefficient::Varying(_) => self.varying_decay.push(HamiltonianTerm {
                coef: rate.clone(),
                op: sparse(&xdx),
            }),
        }
        self.collapses.push(Collapse { rate, op: sparse(x) });
        Ok(self)
    }

    /// Finalizes the sparse form of the constant part.
    pub fn build(mut self) -> Self {
        self.constant_k_sparse = Some(sparse(&self.constant_k));
        self
    }

    pub fn scratch(&self) -> Scratch {
        Scratch {
            b: CMatrix::zeros(self.dim, self.dim),
            y: CMatrix::zeros(self.dim, self.dim),
            y_adj: CMatrix::zeros(self.dim, self.dim),
        }
    }

    /// Writes `dρ/dt` at time `t` into `out`. Assumes `ρ` Hermitian.
    pub fn rhs_into(&self, t: f64, rho: &CMatrix, out: &mut CMatrix, s: &mut Scratch) {
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        match &self.constant_k_sparse {
            Some(k) => spmm_csr_dense(zero, &mut s.b, one, Op::NoOp(k), Op::NoOp(rho)),
            None => s.b.gemm(one, &self.constant_k, rho, zero),
        }
        for term in &self.varying_h {
            let c = term.coef.at(t);
            if c != 0.0 {
                spmm_csr_dense(one, &mut s.b, -I * c, Op::NoOp(&term.op), Op::NoOp(rho));
            }
        }
        for term in &self.varying_decay {
            let g = term.coef.at(t);
            if g != 0.0 {
                spmm_csr_dense(
                    one,
                    &mut s.b,
                    C64::new(-0.5 * g, 0.0),
                    Op::NoOp(&term.op),
                    Op::NoOp(rho),
                );
            }
        }
        out.copy_from(&s.b);
        *out += s.b.adjoint();
        for c in &self.collapses {
            let g = c.rate.at(t);
            if g == 0.0 {
                continue;
            }
            // XρX† = X (Xρ)† for Hermitian ρ.
            spmm_csr_dense(zero, &mut s.y, one, Op::NoOp(&c.op), Op::NoOp(rho));
            s.y.adjoint_to(&mut s.y_adj);
            spmm_csr_dense(one, &mut *out, C64::new(g, 0.0), Op::NoOp(&c.op), Op::NoOp(&s.y_adj));
        }
    }

    pub fn rhs(&self, t: f64, rho: &CMatrix) -> Result<CMatrix> {
        self.check(rho, "state")?;
        let mut out = CMatrix::zeros(self.dim, self.dim);
        let mut s = self.scratch();
        self.rhs_into(t, rho, &mut out, &mut s);
        Ok(out)
    }
}

/// Work buffers for [`LindbladModel::rhs_into`].
#[derive(Debug, Clone)]
pub struct Scratch {
    b: CMatrix,
    y: CMatrix,
    y_adj: CMatrix,
}

/// One-shot `dρ/dt` for a constant Hamiltonian and `(rate, X)` collapses.
pub fn lindblad_rhs(rho: &CMatrix, hamiltonian: &CMatrix, collapses: &[(f64, CMatrix)]) -> Result<CMatrix> {
    let mut m = LindbladModel::new(rho.nrows());
    m.add_hamiltonian(Coefficient::Constant(1.0), hamiltonian)?;
    for (g, x) in collapses {
        m.add_collapse(Coefficient::Constant(*g), x)?;
    }
    m.build().rhs(0.0, rho)
}
