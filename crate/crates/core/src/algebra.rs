//! Dense complex operator algebra.
//!
//! Matrices are stored densely; indices are `(row, column)`. Composite
//! spaces order their factors with the first subsystem as the most
//! significant digit, so `kron(a, b)` acts with `a` on subsystem 0.
//!
//! Superoperators act on column-stacked vectors: entry `(r, c)` of a
//! `D x D` matrix sits at position `c * D + r`. Under this convention
//! `vec(A X B) = (B^T ⊗ A) vec(X)`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Numerical thresholds shared by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Target bound on `‖L(ρ)‖` for a solved steady state.
    pub residual: f64,
    /// Residual above which the nullspace solve is rejected outright.
    pub failure_residual: f64,
    /// Singular-value ratio below which a generator counts as degenerate.
    pub degeneracy: f64,
    /// Allowed negative eigenvalue slack for density matrices.
    pub positivity: f64,
    /// Allowed trace of a right-hand side handed to the traceless solver,
    /// relative to `max(1, ‖rhs‖)`.
    pub traceless: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-10,
            failure_residual: 1e-9,
            degeneracy: 1e-9,
            positivity: 1e-10,
            traceless: 1e-10,
        }
    }
}

/// A square dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    data: DMatrix<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self { data: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self { data: DMatrix::identity(dim, dim) }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        Self { data: DMatrix::from_fn(dim, dim, f) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |r, c| if r == c { diag[r].into() } else { ZERO })
    }

    /// Builds a matrix from row-major rows; every row must have as many
    /// entries as there are rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::DimensionMismatch { left: 0, right: 1 });
        }
        if let Some(bad) = rows.iter().find(|row| row.len() != dim) {
            return Err(Error::DimensionMismatch { left: dim, right: bad.len() });
        }
        Ok(Self::from_fn(dim, |r, c| rows[r][c]))
    }

    pub fn from_nalgebra(data: DMatrix<C64>) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(Error::DimensionMismatch { left: data.nrows(), right: data.ncols() });
        }
        Ok(Self { data })
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[(row, col)] = value;
    }

    /// Row-major copy of the entries.
    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim())
            .map(|r| (0..self.dim()).map(|c| self.data[(r, c)]).collect())
            .collect()
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn adjoint(&self) -> Self {
        Self { data: self.data.adjoint() }
    }

    pub fn transpose(&self) -> Self {
        Self { data: self.data.transpose() }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { data: &self.data * factor }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(factor.into())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    /// Frobenius distance `‖self − other‖_F`.
    pub fn distance(&self, other: &Self) -> f64 {
        (&self.data - &other.data).norm()
    }

    /// Hilbert–Schmidt inner product `tr(self† other)`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.data.dotc(&other.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_part(&self) -> Self {
        Self { data: (&self.data + self.data.adjoint()) * C64::from(0.5) }
    }

    /// Frobenius norm of `(A − A†)/2`.
    pub fn anti_hermitian_norm(&self) -> f64 {
        ((&self.data - self.data.adjoint()) * C64::from(0.5)).norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let dim = self.dim();
        (0..dim).all(|r| (r..dim).all(|c| (self.data[(r, c)] - self.data[(c, r)].conj()).norm() <= tol))
    }

    pub fn is_unit_trace(&self, tol: f64) -> bool {
        (self.trace() - ONE).norm() <= tol
    }

    /// Hermitian with no eigenvalue below `-tol`.
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        self.is_hermitian(tol.max(1e-12)) && self.hermitian_eigenvalues().iter().all(|&ev| ev >= -tol)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.hermitian_part().data);
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let dim = self.dim();
        (0..dim).all(|r| (0..dim).all(|c| r == c || self.data[(r, c)].norm() <= tol))
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { data: &self.data + &rhs.data }
    }
}

impl Add for ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { data: self.data + rhs.data }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        self.data += &rhs.data;
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { data: &self.data - &rhs.data }
    }
}

impl Sub for ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { data: self.data - rhs.data }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { data: &self.data * &rhs.data }
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix { data: self.data * rhs.data }
    }
}

impl Mul<C64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: C64) -> ComplexMatrix {
        self.scale(rhs)
    }
}

impl Mul<f64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: f64) -> ComplexMatrix {
        self.scale_real(rhs)
    }
}

impl Mul<f64> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: f64) -> ComplexMatrix {
        ComplexMatrix { data: self.data * C64::from(rhs) }
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix { data: -self.data }
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix { data: a.data.kronecker(&b.data) }
}

/// Kronecker product of a sequence of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// `ab − ba`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_same_dim(a.dim(), b.dim())?;
    Ok(&(a * b) - &(b * a))
}

fn check_same_dim(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left, right })
    }
}

fn check_dims(dims: &[usize], dim: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) || dims.iter().product::<usize>() != dim {
        return Err(Error::InconsistentDims { dims: dims.to_vec(), dim });
    }
    Ok(())
}

/// Mixed-radix digits of `index`, most significant first.
fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
}

fn compose(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Traces out the subsystems listed in `trace_out`, keeping the rest in
/// their original order.
pub fn partial_trace(rho: &ComplexMatrix, dims: &[usize], trace_out: &[usize]) -> Result<ComplexMatrix> {
    check_dims(dims, rho.dim())?;
    if let Some(&index) = trace_out.iter().find(|&&i| i >= dims.len()) {
        return Err(Error::IndexOutOfRange { index, count: dims.len() });
    }
    let keep: Vec<usize> = (0..dims.len()).filter(|i| !trace_out.contains(i)).collect();
    let kept_dims: Vec<usize> = keep.iter().map(|&i| dims[i]).collect();
    let reduced_dim: usize = kept_dims.iter().product();

    let mut out = ComplexMatrix::zeros(reduced_dim);
    let n = dims.len();
    let (mut rd, mut cd) = (vec![0; n], vec![0; n]);
    let (mut rk, mut ck) = (vec![0; keep.len()], vec![0; keep.len()]);
    for c in 0..rho.dim() {
        digits(c, dims, &mut cd);
        for r in 0..rho.dim() {
            digits(r, dims, &mut rd);
            if trace_out.iter().any(|&i| rd[i] != cd[i]) {
                continue;
            }
            for (slot, &i) in keep.iter().enumerate() {
                rk[slot] = rd[i];
                ck[slot] = cd[i];
            }
            let (rr, cc) = (compose(&rk, &kept_dims), compose(&ck, &kept_dims));
            out.data[(rr, cc)] += rho.data[(r, c)];
        }
    }
    Ok(out)
}

/// Inverse of tracing out one subsystem: places `factor` at `position`
/// and `rest` on the remaining subsystems. `dims` describes the full space.
pub fn insert_factor(
    rest: &ComplexMatrix,
    factor: &ComplexMatrix,
    position: usize,
    dims: &[usize],
) -> Result<ComplexMatrix> {
    if position >= dims.len() {
        return Err(Error::IndexOutOfRange { index: position, count: dims.len() });
    }
    check_same_dim(factor.dim(), dims[position])?;
    let rest_dims: Vec<usize> = dims
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != position)
        .map(|(_, &d)| d)
        .collect();
    let full: usize = dims.iter().product();
    let rest_dim: usize = rest_dims.iter().product();
    check_same_dim(rest.dim(), rest_dim)?;

    let n = dims.len();
    let (mut rd, mut cd) = (vec![0; n], vec![0; n]);
    let (mut rr, mut cr) = (vec![0; n - 1], vec![0; n - 1]);
    Ok(ComplexMatrix::from_fn(full, |r, c| {
        digits(r, dims, &mut rd);
        digits(c, dims, &mut cd);
        for (slot, i) in (0..n).filter(|&i| i != position).enumerate() {
            rr[slot] = rd[i];
            cr[slot] = cd[i];
        }
        let inner = rest.data[(compose(&rr, &rest_dims), compose(&cr, &rest_dims))];
        factor.data[(rd[position], cd[position])] * inner
    }))
}

/// Column-stacking vectorization.
pub fn vectorize(m: &ComplexMatrix) -> DVector<C64> {
    // nalgebra storage is column-major, which is exactly column stacking.
    DVector::from_column_slice(m.data.as_slice())
}

pub fn devectorize(v: &DVector<C64>) -> Result<ComplexMatrix> {
    let len = v.len();
    let dim = (len as f64).sqrt().round() as usize;
    if dim == 0 || dim * dim != len {
        return Err(Error::NotSquareLength(len));
    }
    Ok(ComplexMatrix { data: DMatrix::from_column_slice(dim, dim, v.as_slice()) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Vectorization {
    ColumnStacking,
}

/// A linear map on `D x D` matrices, stored as a `D² x D²` matrix acting
/// on column-stacked vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: DMatrix<C64>,
}

impl Superoperator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, matrix: DMatrix::zeros(dim * dim, dim * dim) }
    }

    pub fn from_matrix(dim: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let n = dim * dim;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { left: n, right: matrix.nrows() });
        }
        Ok(Self { dim, matrix })
    }

    /// Tabulates an arbitrary linear map by applying it to each matrix unit.
    pub fn from_map(dim: usize, mut map: impl FnMut(&ComplexMatrix) -> ComplexMatrix) -> Self {
        let n = dim * dim;
        let mut matrix = DMatrix::zeros(n, n);
        let mut unit = ComplexMatrix::zeros(dim);
        for col in 0..n {
            let (r, c) = (col % dim, col / dim);
            unit.data[(r, c)] = ONE;
            let image = map(&unit);
            matrix.column_mut(col).copy_from_slice(image.data.as_slice());
            unit.data[(r, c)] = ZERO;
        }
        Self { dim, matrix }
    }

    /// `X ↦ a X b`.
    pub fn sandwich(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Self> {
        check_same_dim(a.dim(), b.dim())?;
        Ok(Self { dim: a.dim(), matrix: b.data.transpose().kronecker(&a.data) })
    }

    /// `ρ ↦ −i[h, ρ]`.
    pub fn hamiltonian(h: &ComplexMatrix) -> Self {
        let dim = h.dim();
        let id = DMatrix::<C64>::identity(dim, dim);
        let left = id.kronecker(&h.data);
        let right = h.data.transpose().kronecker(&id);
        Self { dim, matrix: (left - right) * (-I) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn convention(&self) -> Vectorization {
        Vectorization::ColumnStacking
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn apply(&self, m: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(m.dim(), self.dim, "superoperator applied to a matrix of the wrong dimension");
        let v = &self.matrix * vectorize(m);
        ComplexMatrix { data: DMatrix::from_column_slice(self.dim, self.dim, v.as_slice()) }
    }

    pub fn apply_vector(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.matrix * v
    }

    /// Maximum absolute row sum; bounds the spectral radius.
    pub fn inf_norm(&self) -> f64 {
        self.matrix
            .row_iter()
            .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Row vector `t` with `t · vec(X) = tr X`.
    fn trace_functional(dim: usize) -> impl Iterator<Item = usize> {
        (0..dim).map(move |j| j * dim + j)
    }
}

impl Add for &Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &Superoperator) -> Superoperator {
        assert_eq!(self.dim, rhs.dim);
        Superoperator { dim: self.dim, matrix: &self.matrix + &rhs.matrix }
    }
}

impl AddAssign<&Superoperator> for Superoperator {
    fn add_assign(&mut self, rhs: &Superoperator) {
        assert_eq!(self.dim, rhs.dim);
        self.matrix += &rhs.matrix;
    }
}

/// Square system whose first equation (the `(0,0)` entry of `L(X)`) is
/// replaced by the trace functional. Because every generator here is trace
/// preserving, that equation is implied by the remaining diagonal ones.
fn bordered(l: &Superoperator) -> DMatrix<C64> {
    let mut m = l.matrix.clone();
    m.row_mut(0).fill(ZERO);
    for idx in Superoperator::trace_functional(l.dim) {
        m[(0, idx)] = ONE;
    }
    m
}

fn sorted_singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(f64::total_cmp);
    sv
}

/// Result of a linear solve followed by Hermitian symmetrization.
#[derive(Debug, Clone, PartialEq)]
pub struct Symmetrized {
    pub matrix: ComplexMatrix,
    /// Frobenius norm of the anti-Hermitian part that was dropped.
    pub discarded: f64,
}

impl Symmetrized {
    fn from_raw(raw: ComplexMatrix) -> Self {
        let discarded = raw.anti_hermitian_norm();
        Self { matrix: raw.hermitian_part(), discarded }
    }
}

/// Factorized solver for `L(σ) = rhs` with `tr σ = 0`.
///
/// The factorization is reused across right-hand sides, which is what the
/// perturbative recurrence needs.
pub struct TracelessSolver {
    dim: usize,
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    margin: f64,
    tol: Tolerances,
}

impl TracelessSolver {
    pub fn new(l: &Superoperator, tol: &Tolerances) -> Result<Self> {
        let m = bordered(l);
        let sv = sorted_singular_values(&m);
        let margin = sv[0] / sv[sv.len() - 1];
        if !(margin >= tol.degeneracy) {
            return Err(Error::SingularOnSubspace { margin });
        }
        Ok(Self { dim: l.dim, lu: m.lu(), margin, tol: *tol })
    }

    /// Ratio of smallest to largest singular value of the bordered system.
    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn solve(&self, rhs: &ComplexMatrix) -> Result<Symmetrized> {
        check_same_dim(self.dim, rhs.dim())?;
        let trace = rhs.trace().norm();
        if trace > self.tol.traceless * rhs.frobenius_norm().max(1.0) {
            return Err(Error::NonTracelessRhs { trace });
        }
        let mut b = vectorize(rhs);
        b[0] = ZERO;
        let x = self
            .lu
            .solve(&b)
            .ok_or(Error::SingularOnSubspace { margin: 0.0 })?;
        Ok(Symmetrized::from_raw(devectorize(&x)?))
    }
}

pub fn solve_on_traceless_subspace(
    l: &Superoperator,
    rhs: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<Symmetrized> {
    TracelessSolver::new(l, tol)?.solve(rhs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullspaceSolution {
    pub rho: ComplexMatrix,
    /// `‖L(ρ)‖_F` after symmetrization.
    pub residual: f64,
    /// Second-smallest over largest singular value of `L`.
    pub degeneracy_margin: f64,
    pub discarded: f64,
}

/// Unit-trace kernel element of `L`.
pub fn nullspace_density_matrix(l: &Superoperator, tol: &Tolerances) -> Result<NullspaceSolution> {
    let sv = sorted_singular_values(&l.matrix);
    let degeneracy_margin = if sv.len() > 1 { sv[1] / sv[sv.len() - 1] } else { 1.0 };
    if sv.len() > 1 && !(degeneracy_margin >= tol.degeneracy) {
        return Err(Error::DegenerateSteadyState { margin: degeneracy_margin });
    }

    let m = bordered(l);
    let mut b = DVector::zeros(l.dim * l.dim);
    b[0] = ONE;
    let x = m.lu().solve(&b).ok_or(Error::NoSteadyState { residual: f64::INFINITY })?;
    let Symmetrized { matrix: rho, discarded } = Symmetrized::from_raw(devectorize(&x)?);
    let residual = l.apply(&rho).frobenius_norm();
    if !(residual <= tol.failure_residual) {
        return Err(Error::NoSteadyState { residual });
    }
    Ok(NullspaceSolution { rho, residual, degeneracy_margin, discarded })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    fn sigma_plus() -> ComplexMatrix {
        ComplexMatrix::from_fn(2, |r, c| if (r, c) == (0, 1) { ONE } else { ZERO })
    }

    #[test]
    fn kron_identities() {
        assert_eq!(kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)), ComplexMatrix::identity(4));
        assert_eq!(
            kron(&sigma_z(), &ComplexMatrix::identity(2)),
            ComplexMatrix::from_real_diagonal(&[1.0, 1.0, -1.0, -1.0])
        );
    }

    #[test]
    fn kron_raising_lowering_single_entry() {
        // σ⁺ ⊗ σ⁻ = |0⟩⟨1| ⊗ |1⟩⟨0| = |01⟩⟨10|, i.e. row 1, column 2.
        let k = kron(&sigma_plus(), &sigma_plus().adjoint());
        for r in 0..4 {
            for col in 0..4 {
                let expected = if (r, col) == (1, 2) { ONE } else { ZERO };
                assert_eq!(k.get(r, col), expected);
            }
        }
    }

    #[test]
    fn commutator_pauli() {
        let z = sigma_z();
        let p = sigma_plus();
        assert_eq!(commutator(&z, &z).unwrap(), ComplexMatrix::zeros(2));
        assert_eq!(commutator(&z, &p).unwrap(), p.scale_real(2.0));
        assert!(matches!(
            commutator(&z, &ComplexMatrix::identity(4)),
            Err(Error::DimensionMismatch { left: 2, right: 4 })
        ));
    }

    #[test]
    fn partial_trace_examples() {
        let t1 = ComplexMatrix::from_real_diagonal(&[0.3, 0.7]);
        let t2 = ComplexMatrix::from_real_diagonal(&[0.1, 0.9]);
        let prod = kron(&t1, &t2);
        assert!(partial_trace(&prod, &[2, 2], &[0]).unwrap().distance(&t2) < 1e-15);
        assert!(partial_trace(&prod, &[2, 2], &[1]).unwrap().distance(&t1) < 1e-15);

        let mixed = ComplexMatrix::identity(4).scale_real(0.25);
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(partial_trace(&mixed, &[2, 2], &[1]).unwrap().distance(&half) < 1e-15);

        let full = partial_trace(&prod, &[2, 2], &[0, 1]).unwrap();
        assert_eq!(full.dim(), 1);
        assert!((full.get(0, 0) - ONE).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_errors() {
        let m = ComplexMatrix::identity(4);
        assert!(matches!(partial_trace(&m, &[2, 3], &[0]), Err(Error::InconsistentDims { .. })));
        assert!(matches!(
            partial_trace(&m, &[2, 2], &[2]),
            Err(Error::IndexOutOfRange { index: 2, count: 2 })
        ));
    }

    #[test]
    fn insert_factor_inverts_partial_trace_of_products() {
        let a = ComplexMatrix::from_fn(2, |r, col| c(r as f64 + 1.0, col as f64));
        let b = ComplexMatrix::from_fn(3, |r, col| c((r * col) as f64, 1.0));
        let rebuilt = insert_factor(&b, &a, 0, &[2, 3]).unwrap();
        assert!(rebuilt.distance(&kron(&a, &b)) < 1e-14);
        let rebuilt = insert_factor(&a, &b, 1, &[2, 3]).unwrap();
        assert!(rebuilt.distance(&kron(&a, &b)) < 1e-14);
    }

    #[test]
    fn vectorization_is_column_stacking() {
        let v = vectorize(&ComplexMatrix::identity(2));
        assert_eq!(v.as_slice(), &[ONE, ZERO, ZERO, ONE]);
        let m = ComplexMatrix::from_rows(&[vec![c(1., 0.), c(2., 0.)], vec![c(3., 0.), c(4., 0.)]]).unwrap();
        let v = vectorize(&m);
        assert_eq!(v.as_slice(), &[c(1., 0.), c(3., 0.), c(2., 0.), c(4., 0.)]);
        assert_eq!(devectorize(&v).unwrap(), m);
        assert!(matches!(devectorize(&DVector::zeros(5)), Err(Error::NotSquareLength(5))));
    }

    #[test]
    fn sandwich_matches_direct_product() {
        let a = ComplexMatrix::from_fn(3, |r, col| c(r as f64 - col as f64, 0.5 * r as f64));
        let b = ComplexMatrix::from_fn(3, |r, col| c(0.1 * col as f64, r as f64 + col as f64));
        let x = ComplexMatrix::from_fn(3, |r, col| c((r + 2 * col) as f64, -1.0));
        let s = Superoperator::sandwich(&a, &b).unwrap();
        assert!(s.apply(&x).distance(&(&(&a * &x) * &b)) < 1e-12);
    }

    #[test]
    fn traceless_solver_zero_rhs_and_bad_trace() {
        let h = ComplexMatrix::from_real_diagonal(&[0.5, -0.5]);
        let tau = ComplexMatrix::from_real_diagonal(&[0.3, 0.7]);
        let l = &Superoperator::hamiltonian(&h)
            + &Superoperator::from_map(2, |x| &tau.scale(x.trace()) - x);
        let solver = TracelessSolver::new(&l, &Tolerances::default()).unwrap();
        let zero = solver.solve(&ComplexMatrix::zeros(2)).unwrap();
        assert_eq!(zero.matrix.frobenius_norm(), 0.0);
        assert!(matches!(
            solver.solve(&ComplexMatrix::identity(2)),
            Err(Error::NonTracelessRhs { .. })
        ));
    }

    #[test]
    fn singular_and_degenerate_generators_are_rejected() {
        // Pure Hamiltonian dynamics has every diagonal state stationary.
        let l = Superoperator::hamiltonian(&ComplexMatrix::from_real_diagonal(&[1.0, -1.0]));
        let tol = Tolerances::default();
        assert!(matches!(TracelessSolver::new(&l, &tol), Err(Error::SingularOnSubspace { .. })));
        assert!(matches!(
            nullspace_density_matrix(&l, &tol),
            Err(Error::DegenerateSteadyState { .. })
        ));
    }

    #[test]
    fn psd_predicate() {
        assert!(ComplexMatrix::from_real_diagonal(&[0.2, 0.8]).is_positive_semidefinite(1e-12));
        assert!(!ComplexMatrix::from_real_diagonal(&[1.2, -0.2]).is_positive_semidefinite(1e-12));
        let not_herm = ComplexMatrix::from_fn(2, |r, col| if r < col { ONE } else { ZERO });
        assert!(!not_herm.is_hermitian(1e-12));
    }
}
