//! Dense complex operator algebra on the composite atom⊗Fock space.
//!
//! Conventions fixed here and relied on everywhere else:
//!
//! * tensor factor ordering is atom ⊗ Fock, atom leftmost, so the composite
//!   basis index is `atom_index * fock_dim + fock_index`;
//! * density matrices are vectorised by column stacking,
//!   `vec(M)[c*d + r] = M[r, c]`, under which `vec(AMB) = (Bᵀ ⊗ A) vec(M)`;
//! * a dissipative channel of rate γ contributes
//!   `γ (2 Ā⊗A − I⊗A†A − (A†A)ᵀ⊗I)` to the Liouvillian, i.e. the dissipator
//!   is `D[A]ρ = 2AρA† − {A†A, ρ}` with no ½ prefactor.

use ndarray::prelude::*;
use ndarray_linalg::{error::LinalgError, Factorize, OperationNorm, Solve};
use num_complex::Complex64;

use crate::error::CoreError;
use crate::Result;

pub type C64 = Complex64;

pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Composite Hilbert space: a small atomic factor times a truncated Fock
/// ladder. The four-level artificial atom uses `atom_dim = 4`; the
/// single-mode Kerr reference model uses `atom_dim = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertSpace {
    atom_dim: usize,
    fock_dim: usize,
}

impl HilbertSpace {
    /// Four atomic levels tensored with `fock_dim` photon-number states.
    pub fn new(fock_dim: usize) -> Result<Self> {
        Self::with_atom_dim(4, fock_dim)
    }

    /// Fock ladder only (no atomic factor).
    pub fn single_mode(fock_dim: usize) -> Result<Self> {
        Self::with_atom_dim(1, fock_dim)
    }

    fn with_atom_dim(atom_dim: usize, fock_dim: usize) -> Result<Self> {
        if fock_dim < 2 {
            return Err(CoreError::InvalidParameter(format!(
                "fock_dim must be at least 2, got {fock_dim}"
            )));
        }
        Ok(Self { atom_dim, fock_dim })
    }

    pub fn atom_dim(&self) -> usize {
        self.atom_dim
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn total_dim(&self) -> usize {
        self.atom_dim * self.fock_dim
    }

    /// Composite basis index of |atom⟩⊗|n⟩.
    pub fn index(&self, atom: usize, n: usize) -> usize {
        debug_assert!(atom < self.atom_dim && n < self.fock_dim);
        atom * self.fock_dim + n
    }
}

/// Dense operator tagged with the space it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub space: HilbertSpace,
    pub matrix: Array2<C64>,
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: Array2<C64>) -> Result<Self> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(CoreError::DimensionMismatch(format!(
                "operator is {}x{}, space dimension is {}",
                matrix.nrows(),
                matrix.ncols(),
                d
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        Self { space, matrix: Array2::zeros((d, d)) }
    }

    pub fn identity(space: HilbertSpace) -> Self {
        let d = space.total_dim();
        Self { space, matrix: Array2::eye(d) }
    }

    pub fn dagger(&self) -> Self {
        Self { space: self.space, matrix: dagger(&self.matrix) }
    }

    /// ⟨O⟩ = Tr(O ρ).
    pub fn expectation(&self, rho: &Array2<C64>) -> C64 {
        trace_of_product(&self.matrix, rho)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let diff = &self.matrix - &dagger(&self.matrix);
        diff.iter().all(|z| z.norm() <= tol)
    }
}

macro_rules! op_binop {
    ($trait:ident, $method:ident, $expr:expr) => {
        impl std::ops::$trait<&Operator> for &Operator {
            type Output = Operator;
            fn $method(self, rhs: &Operator) -> Operator {
                assert_eq!(self.space, rhs.space, "operator spaces differ");
                Operator { space: self.space, matrix: $expr(&self.matrix, &rhs.matrix) }
            }
        }
    };
}

op_binop!(Add, add, |a: &Array2<C64>, b: &Array2<C64>| a + b);
op_binop!(Sub, sub, |a: &Array2<C64>, b: &Array2<C64>| a - b);
op_binop!(Mul, mul, |a: &Array2<C64>, b: &Array2<C64>| a.dot(b));

impl std::ops::Mul<&Operator> for C64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator { space: rhs.space, matrix: rhs.matrix.mapv(|z| self * z) }
    }
}

/// Superoperator acting on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct SuperOperator {
    pub space: HilbertSpace,
    pub matrix: Array2<C64>,
}

impl SuperOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Conjugate transpose.
pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    let mut out = Array2::zeros((m.ncols(), m.nrows()));
    for ((r, c), z) in m.indexed_iter() {
        out[[c, r]] = z.conj();
    }
    out
}

/// Tr(A·B) without forming the product.
pub fn trace_of_product(a: &Array2<C64>, b: &Array2<C64>) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[[r, k]] * b[[k, r]];
        }
    }
    acc
}

pub fn trace(m: &Array2<C64>) -> C64 {
    m.diag().sum()
}

/// Truncated annihilation operator on the bare Fock ladder: a|n⟩ = √n |n−1⟩.
pub fn fock_ladder(fock_dim: usize) -> Array2<C64> {
    let mut a = Array2::zeros((fock_dim, fock_dim));
    for n in 1..fock_dim {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// I_atom ⊗ a on the composite space.
pub fn fock_annihilation(space: HilbertSpace) -> Operator {
    let a = fock_ladder(space.fock_dim());
    let eye = Array2::eye(space.atom_dim());
    Operator { space, matrix: kron(&eye, &a) }
}

/// I_atom ⊗ a†a.
pub fn fock_number(space: HilbertSpace) -> Operator {
    let a = fock_ladder(space.fock_dim());
    let n = dagger(&a).dot(&a);
    let eye = Array2::eye(space.atom_dim());
    Operator { space, matrix: kron(&eye, &n) }
}

/// Atomic transition operator σᵢⱼ = |i⟩⟨j| ⊗ I_Fock, levels indexed 1..=4.
pub fn atomic_sigma(space: HilbertSpace, i: usize, j: usize) -> Result<Operator> {
    let d = space.atom_dim();
    if i < 1 || i > d {
        return Err(CoreError::LevelIndex(i));
    }
    if j < 1 || j > d {
        return Err(CoreError::LevelIndex(j));
    }
    let mut s = Array2::zeros((d, d));
    s[[i - 1, j - 1]] = ONE;
    let eye = Array2::eye(space.fock_dim());
    Ok(Operator { space, matrix: kron(&s, &eye) })
}

/// Kronecker product, left factor outermost.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    add_kron_into(&mut out, ONE, a, b);
    out
}

/// dst += alpha · (a ⊗ b), writing block-wise to avoid temporaries.
fn add_kron_into(dst: &mut Array2<C64>, alpha: C64, a: &Array2<C64>, b: &Array2<C64>) {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    debug_assert_eq!(dst.dim(), (ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let w = alpha * a[[i, j]];
            if w.norm_sqr() == 0.0 {
                continue;
            }
            let mut block = dst.slice_mut(s![i * rb..(i + 1) * rb, j * cb..(j + 1) * cb]);
            block.scaled_add(w, b);
        }
    }
}

/// Build a full-space operator from per-factor matrices (atom ⊗ Fock).
pub fn tensor(space: HilbertSpace, atom_part: &Array2<C64>, fock_part: &Array2<C64>) -> Result<Operator> {
    if atom_part.nrows() != space.atom_dim() || atom_part.ncols() != space.atom_dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "atom factor is {}x{}, expected dim {}",
            atom_part.nrows(),
            atom_part.ncols(),
            space.atom_dim()
        )));
    }
    if fock_part.nrows() != space.fock_dim() || fock_part.ncols() != space.fock_dim() {
        return Err(CoreError::DimensionMismatch(format!(
            "Fock factor is {}x{}, expected dim {}",
            fock_part.nrows(),
            fock_part.ncols(),
            space.fock_dim()
        )));
    }
    Ok(Operator { space, matrix: kron(atom_part, fock_part) })
}

/// Column-stacking vectorisation, vec(M)[c*d + r] = M[r, c].
pub fn vectorize(m: &Array2<C64>) -> Array1<C64> {
    let d = m.nrows();
    let mut v = Array1::zeros(d * d);
    for c in 0..d {
        for r in 0..d {
            v[c * d + r] = m[[r, c]];
        }
    }
    v
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &ArrayView1<C64>, d: usize) -> Array2<C64> {
    debug_assert_eq!(v.len(), d * d);
    let mut m = Array2::zeros((d, d));
    for c in 0..d {
        for r in 0..d {
            m[[r, c]] = v[c * d + r];
        }
    }
    m
}

/// vec(I_d): the left null functional of every trace-preserving generator,
/// since Tr(M) = vec(I)·vec(M).
pub fn vectorized_identity(d: usize) -> Array1<C64> {
    let mut v = Array1::zeros(d * d);
    for c in 0..d {
        v[c * d + c] = ONE;
    }
    v
}

/// Trace of a vectorised matrix.
pub fn trace_of_vec(v: &ArrayView1<C64>, d: usize) -> C64 {
    (0..d).map(|c| v[c * d + c]).sum()
}

/// Liouvillian matrix L with vec(ρ̇) = L·vec(ρ) for
/// ρ̇ = −i[H, ρ] + Σ_c γ_c (2 A_c ρ A_c† − {A_c†A_c, ρ}).
pub fn liouvillian(h: &Array2<C64>, channels: &[(f64, Array2<C64>)]) -> Result<Array2<C64>> {
    let d = h.nrows();
    if h.ncols() != d {
        return Err(CoreError::DimensionMismatch("Hamiltonian must be square".into()));
    }
    let eye = Array2::eye(d);
    let mut l: Array2<C64> = Array2::zeros((d * d, d * d));

    // coherent part: −i (I⊗H − Hᵀ⊗I)
    add_kron_into(&mut l, -I, &eye, h);
    add_kron_into(&mut l, I, &h.t().to_owned(), &eye);

    for (rate, a) in channels {
        if *rate < 0.0 {
            return Err(CoreError::NegativeRate(*rate));
        }
        if a.nrows() != d || a.ncols() != d {
            return Err(CoreError::DimensionMismatch(format!(
                "collapse operator is {}x{}, expected {d}x{d}",
                a.nrows(),
                a.ncols()
            )));
        }
        if *rate == 0.0 {
            continue;
        }
        let g = C64::new(*rate, 0.0);
        let adag_a = dagger(a).dot(a);
        add_kron_into(&mut l, 2.0 * g, &a.mapv(|z| z.conj()), a);
        add_kron_into(&mut l, -g, &eye, &adag_a);
        add_kron_into(&mut l, -g, &adag_a.t().to_owned(), &eye);
    }
    Ok(l)
}

/// Typed wrapper over [`liouvillian`]; all operators must share a space.
pub fn liouvillian_matrix(h: &Operator, channels: &[(f64, Operator)]) -> Result<SuperOperator> {
    for (_, c) in channels {
        if c.space != h.space {
            return Err(CoreError::DimensionMismatch(
                "collapse operator space differs from the Hamiltonian's".into(),
            ));
        }
    }
    let raw: Vec<(f64, Array2<C64>)> =
        channels.iter().map(|(g, c)| (*g, c.matrix.clone())).collect();
    Ok(SuperOperator { space: h.space, matrix: liouvillian(&h.matrix, &raw)? })
}

/// Default relative residual bound for direct solves.
pub const SOLVE_RTOL: f64 = 1e-10;

/// Solve M x = b by LU with one step of iterative refinement; fails if the
/// verified residual exceeds `rtol·‖b‖`.
pub fn solve_linear(m: &Array2<C64>, b: &Array1<C64>, rtol: f64) -> Result<Array1<C64>> {
    let lu = m.factorize().map_err(lift_singular)?;
    let mut x = lu.solve(b).map_err(lift_singular)?;
    // one refinement pass: r = b − Mx, x += M⁻¹r
    let r = b - &m.dot(&x);
    if let Ok(dx) = lu.solve(&r) {
        x += &dx;
    }
    let residual = norm2(&(b - &m.dot(&x)));
    let scale = norm2(b).max(f64::MIN_POSITIVE);
    if residual > rtol * scale {
        return Err(CoreError::SingularSystem { residual: residual / scale, tol: rtol });
    }
    Ok(x)
}

fn lift_singular(e: LinalgError) -> CoreError {
    match e {
        LinalgError::Lapack(_) => CoreError::SingularSystem { residual: f64::INFINITY, tol: SOLVE_RTOL },
        other => CoreError::Linalg(other),
    }
}

pub fn norm2(v: &Array1<C64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

// Padé scaling-and-squaring matrix exponential (Higham 2005). Coefficient
// tables and switching thresholds are the standard double-precision values.
const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

fn pade_coeffs(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0],
        9 => &[
            17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0,
            110880.0, 3960.0, 90.0, 1.0,
        ],
        13 => &[
            64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
            129060195264000.0, 10559470521600.0, 670442572800.0, 33522128640.0, 1323241920.0,
            40840800.0, 960960.0, 16380.0, 182.0, 1.0,
        ],
        _ => unreachable!(),
    }
}

/// Matrix exponential e^A.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(CoreError::DimensionMismatch("expm needs a square matrix".into()));
    }
    let norm = a.opnorm_one()?;

    for &(m, theta) in &THETA[..4] {
        if norm <= theta {
            return pade_apply(a, m, 0);
        }
    }
    let theta13 = THETA[4].1;
    let s = if norm > theta13 { (norm / theta13).log2().ceil() as i32 } else { 0 };
    pade_apply(a, 13, s.max(0) as u32)
}

fn pade_apply(a: &Array2<C64>, m: usize, squarings: u32) -> Result<Array2<C64>> {
    let d = a.nrows();
    let scale = C64::new(0.5f64.powi(squarings as i32), 0.0);
    let a = a.mapv(|z| z * scale);
    let b = pade_coeffs(m);
    let eye: Array2<C64> = Array2::eye(d);
    let a2 = a.dot(&a);

    let (u, v) = if m == 13 {
        let a4 = a2.dot(&a2);
        let a6 = a2.dot(&a4);
        let u_hi = a6.dot(&(&a6 * b[13] + &a4 * b[11] + &a2 * b[9]));
        let u_lo = &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &eye * b[1];
        let u = a.dot(&(u_hi + u_lo));
        let v_hi = a6.dot(&(&a6 * b[12] + &a4 * b[10] + &a2 * b[8]));
        let v = v_hi + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &eye * b[0];
        (u, v)
    } else {
        // U = A Σ b[2k+1] A^{2k},  V = Σ b[2k] A^{2k}
        let mut pow: Array2<C64> = eye.clone();
        let mut u_sum: Array2<C64> = &eye * b[1];
        let mut v_sum: Array2<C64> = &eye * b[0];
        for k in 1..=(m / 2) {
            pow = pow.dot(&a2);
            u_sum = u_sum + &pow * b[2 * k + 1];
            if 2 * k <= m {
                v_sum = v_sum + &pow * b[2 * k];
            }
        }
        (a.dot(&u_sum), v_sum)
    };

    // (V − U) F = (V + U), solved column by column on one factorisation
    let lhs = &v - &u;
    let rhs = &v + &u;
    let lu = lhs.factorize()?;
    let mut f = Array2::zeros((d, d));
    for c in 0..d {
        let col = lu.solve(&rhs.column(c).to_owned())?;
        f.column_mut(c).assign(&col);
    }
    for _ in 0..squarings {
        f = f.dot(&f);
    }
    Ok(f)
}
