//! Dense complex linear algebra for small multipartite systems.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Subsystem index ordering is
//! lexicographic with the first subsystem most significant, so for dims
//! `[dA, dB]` the basis vector `|i>|k>` has index `i * dB + k`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Hermiticity tolerance accepted by the eigensolver.
pub const EIG_HERMITIAN_TOL: f64 = 1e-10;
/// Trace and positivity tolerance for density states.
pub const STATE_TOL: f64 = 1e-10;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(d: usize) -> CMatrix {
    CMatrix::zeros(d, d)
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    let d = values.len();
    let mut m = zeros(d);
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = c(v);
    }
    m
}

/// Pauli matrix: 0 = identity, 1 = x, 2 = y, 3 = z.
pub fn pauli(k: usize) -> CMatrix {
    match k {
        0 => identity(2),
        1 => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        2 => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        3 => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("pauli index {k} out of range"),
    }
}

pub fn ket(d: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(d);
    v[i] = ONE;
    v
}

/// `|psi><psi|` for an arbitrary (not necessarily normalized) vector.
pub fn projector(psi: &CVector) -> CMatrix {
    psi * psi.adjoint()
}

/// `|i><j|` in dimension `d`.
pub fn unit(d: usize, i: usize, j: usize) -> CMatrix {
    let mut m = zeros(d);
    m[(i, j)] = ONE;
    m
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a * b - b * a))
}

#[derive(Debug, Clone)]
pub struct HermEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `values`.
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    /// `sum_k f(lambda_k) |v_k><v_k|`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let w = c(f(self.values[k]));
            for i in 0..n {
                scaled[(i, k)] *= w;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

fn check_square(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    check_square(m)?;
    let defect = hermiticity_defect(m);
    if defect > EIG_HERMITIAN_TOL * (1.0 + max_abs(m)) || !defect.is_finite() {
        return Err(Error::NonHermitian(defect));
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix (Householder tridiagonalization
/// followed by implicit QR), eigenvalues sorted descending.
pub fn herm_eig(m: &CMatrix) -> Result<HermEig> {
    check_hermitian(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(HermEig { values: vec![], vectors: zeros(0) });
    }
    let eig = SymmetricEigen::try_new(hermitize(m), EIG_EPS, EIG_MAX_ITER)
        .ok_or_else(|| Error::NonHermitian(f64::NAN))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermEig { values, vectors })
}

/// Eigenvalues only, sorted descending.
pub fn herm_eigvals(m: &CMatrix) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    if m.nrows() == 0 {
        return Ok(vec![]);
    }
    let eig = SymmetricEigen::try_new(hermitize(m), EIG_EPS, EIG_MAX_ITER)
        .ok_or_else(|| Error::NonHermitian(f64::NAN))?;
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

pub fn min_eigval(m: &CMatrix) -> Result<f64> {
    Ok(herm_eigvals(m)?.last().copied().unwrap_or(0.0))
}

/// Schatten 1-norm of a Hermitian matrix.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    Ok(herm_eigvals(m)?.iter().map(|x| x.abs()).sum())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_all(factors: &[CMatrix]) -> CMatrix {
    factors
        .iter()
        .fold(identity(1), |acc, f| kron(&acc, f))
}

fn check_dims(m: &CMatrix, dims: &[usize]) -> Result<usize> {
    check_square(m)?;
    let total: usize = dims.iter().product();
    if dims.is_empty() || total != m.nrows() || dims.contains(&0) {
        return Err(Error::DimMismatch(format!(
            "dims {dims:?} do not factor a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(total)
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Full indices for every (kept, traced) multi-index pair.
fn index_table(dims: &[usize], keep: &[usize]) -> (usize, usize, Vec<usize>) {
    let st = strides(dims);
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let dk: usize = keep.iter().map(|&k| dims[k]).product();
    let dr: usize = traced.iter().map(|&k| dims[k]).product();
    let offsets = |subs: &[usize], count: usize| -> Vec<usize> {
        (0..count)
            .map(|mut idx| {
                let mut off = 0;
                for &s in subs.iter().rev() {
                    off += (idx % dims[s]) * st[s];
                    idx /= dims[s];
                }
                off
            })
            .collect()
    };
    let ko = offsets(keep, dk);
    let ro = offsets(&traced, dr);
    let mut table = Vec::with_capacity(dk * dr);
    for &k in &ko {
        for &r in &ro {
            table.push(k + r);
        }
    }
    (dk, dr, table)
}

fn check_subsystems(dims: &[usize], subs: &[usize]) -> Result<()> {
    for (i, &s) in subs.iter().enumerate() {
        if s >= dims.len() || subs[..i].contains(&s) {
            return Err(Error::DimMismatch(format!(
                "invalid subsystem list {subs:?} for dims {dims:?}"
            )));
        }
    }
    Ok(())
}

/// Reduced operator on the subsystems listed in `keep` (in the given order).
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    check_dims(m, dims)?;
    check_subsystems(dims, keep)?;
    let (dk, dr, table) = index_table(dims, keep);
    let mut out = zeros(dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = ZERO;
            for r in 0..dr {
                acc += m[(table[a * dr + r], table[b * dr + r])];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Transpose of the indices belonging to one subsystem.
pub fn partial_transpose(m: &CMatrix, dims: &[usize], subsystem: usize) -> Result<CMatrix> {
    let n = check_dims(m, dims)?;
    check_subsystems(dims, &[subsystem])?;
    let stride = strides(dims)[subsystem];
    let d = dims[subsystem];
    let mut out = zeros(n);
    for i in 0..n {
        let di = (i / stride) % d;
        for j in 0..n {
            let dj = (j / stride) % d;
            let ii = i - di * stride + dj * stride;
            let jj = j - dj * stride + di * stride;
            out[(ii, jj)] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Reorders tensor factors: new factor `q` is old factor `perm[q]`.
pub fn permute_subsystems(m: &CMatrix, dims: &[usize], perm: &[usize]) -> Result<CMatrix> {
    let n = check_dims(m, dims)?;
    if perm.len() != dims.len() {
        return Err(Error::DimMismatch(format!("permutation {perm:?} for dims {dims:?}")));
    }
    check_subsystems(dims, perm)?;
    let map = permutation_map(dims, perm);
    let mut out = zeros(n);
    for i in 0..n {
        for j in 0..n {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Old flat index to new flat index under a subsystem permutation.
fn permutation_map(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let old_st = strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let new_st = strides(&new_dims);
    let n: usize = dims.iter().product();
    (0..n)
        .map(|i| {
            perm.iter()
                .enumerate()
                .map(|(q, &p)| ((i / old_st[p]) % dims[p]) * new_st[q])
                .sum()
        })
        .collect()
}

pub fn permute_vector(v: &CVector, dims: &[usize], perm: &[usize]) -> CVector {
    let map = permutation_map(dims, perm);
    let mut out = CVector::zeros(v.len());
    for (i, &j) in map.iter().enumerate() {
        out[j] = v[i];
    }
    out
}

/// A density operator together with its subsystem dimensions.
#[derive(Debug, Clone)]
pub struct DensityState {
    matrix: CMatrix,
    dims: Vec<usize>,
}

impl DensityState {
    /// Validates trace, Hermiticity and positivity within [`STATE_TOL`].
    pub fn new(matrix: CMatrix, dims: &[usize]) -> Result<Self> {
        check_dims(&matrix, dims)?;
        let defect = hermiticity_defect(&matrix);
        if defect > STATE_TOL {
            return Err(Error::NotAState(format!("hermiticity defect {defect:.3e}")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::NotAState(format!("trace {tr}")));
        }
        let lmin = min_eigval(&matrix)?;
        if lmin < -STATE_TOL {
            return Err(Error::NotAState(format!("minimum eigenvalue {lmin:.3e}")));
        }
        Ok(Self { matrix: hermitize(&matrix), dims: dims.to_vec() })
    }

    /// Skips validation; the caller guarantees the state is physical.
    pub fn new_unchecked(matrix: CMatrix, dims: &[usize]) -> Self {
        debug_assert_eq!(matrix.nrows(), dims.iter().product::<usize>());
        Self { matrix, dims: dims.to_vec() }
    }

    pub fn from_ket(psi: &CVector, dims: &[usize]) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::NotAState("zero vector".into()));
        }
        let v = psi.unscale(norm);
        let m = projector(&v);
        check_dims(&m, dims)?;
        Ok(Self { matrix: m, dims: dims.to_vec() })
    }

    pub fn maximally_mixed(dims: &[usize]) -> Self {
        let d: usize = dims.iter().product();
        Self { matrix: identity(d).unscale(d as f64), dims: dims.to_vec() }
    }

    /// `(|00> + |11>)/sqrt(2)` on two qubits.
    pub fn phi_plus() -> Self {
        let mut v = CVector::zeros(4);
        v[0] = c(std::f64::consts::FRAC_1_SQRT_2);
        v[3] = c(std::f64::consts::FRAC_1_SQRT_2);
        Self { matrix: projector(&v), dims: vec![2, 2] }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn reduced(&self, keep: &[usize]) -> Result<DensityState> {
        let m = partial_trace(&self.matrix, &self.dims, keep)?;
        let dims: Vec<usize> = keep.iter().map(|&k| self.dims[k]).collect();
        Ok(Self { matrix: m, dims })
    }

    pub fn purity(&self) -> f64 {
        trace_product(&self.matrix, &self.matrix).re
    }
}

/// Hermitian operator basis `{e_i}` with `e_0 = 1` and
/// `Tr(e_i e_j) = delta_ij * prod(dims)`.
///
/// Local factors are the identity followed by generalized Gell-Mann matrices
/// (symmetric and antisymmetric pairs in order of `(j, k)`, then the diagonal
/// ones), scaled to `Tr(chi_k chi_l) = d delta_kl`. For a qubit this is
/// `1, sigma_x, sigma_y, sigma_z`. Products run lexicographically with the first
/// subsystem most significant.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    dims: Vec<usize>,
    elements: Vec<CMatrix>,
}

impl OperatorBasis {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::DimMismatch(format!("invalid dims {dims:?}")));
        }
        let mut elements = vec![identity(1)];
        for &d in dims {
            let local = local_basis(d);
            elements = elements
                .iter()
                .flat_map(|e| local.iter().map(move |chi| kron(e, chi)))
                .collect();
        }
        Ok(Self { dims: dims.to_vec(), elements })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &CMatrix {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }
}

/// Identity plus generalized Gell-Mann matrices normalized to trace `d`.
pub fn local_basis(d: usize) -> Vec<CMatrix> {
    let mut out = vec![identity(d)];
    let s = (d as f64 / 2.0).sqrt();
    for j in 0..d {
        for k in (j + 1)..d {
            let mut sym = zeros(d);
            sym[(j, k)] = c(s);
            sym[(k, j)] = c(s);
            out.push(sym);
            let mut asym = zeros(d);
            asym[(j, k)] = -I * s;
            asym[(k, j)] = I * s;
            out.push(asym);
        }
    }
    for l in 1..d {
        let norm = (d as f64 / (l * (l + 1)) as f64).sqrt();
        let mut diag = zeros(d);
        for m in 0..l {
            diag[(m, m)] = c(norm);
        }
        diag[(l, l)] = c(-(l as f64) * norm);
        out.push(diag);
    }
    out
}

/// Coordinates `a_i = Tr(rho e_i) / prod(dims)`.
pub fn coords(rho: &DensityState, basis: &OperatorBasis) -> Result<Vec<f64>> {
    operator_coords(rho.matrix(), basis)
}

pub fn operator_coords(m: &CMatrix, basis: &OperatorBasis) -> Result<Vec<f64>> {
    if m.nrows() != basis.dim() {
        return Err(Error::DimMismatch(format!(
            "operator of dim {} against basis of dim {}",
            m.nrows(),
            basis.dim()
        )));
    }
    let norm = basis.dim() as f64;
    Ok(basis
        .elements()
        .iter()
        .map(|e| trace_product(m, e).re / norm)
        .collect())
}

pub fn operator_from_coords(a: &[f64], basis: &OperatorBasis) -> Result<CMatrix> {
    if a.len() != basis.len() {
        return Err(Error::DimMismatch(format!(
            "{} coordinates for a basis of {} elements",
            a.len(),
            basis.len()
        )));
    }
    let mut m = zeros(basis.dim());
    for (ai, e) in a.iter().zip(basis.elements()) {
        if *ai != 0.0 {
            m += e.scale(*ai);
        }
    }
    Ok(m)
}

/// Inverse of [`coords`]; fails with `NotAState` when the result is not a state.
pub fn from_coords(a: &[f64], basis: &OperatorBasis) -> Result<DensityState> {
    let m = operator_from_coords(a, basis)?;
    DensityState::new(m, basis.dims())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
        let mut m = zeros(n);
        for i in 0..n {
            m[(i, i)] = c(rng.random_range(-1.0..1.0));
            for j in (i + 1)..n {
                let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn eig_diagonal_and_pauli() {
        let e = herm_eig(&real_diag(&[1.0, 3.0])).unwrap();
        assert_eq!(e.values, vec![3.0, 1.0]);
        assert_abs_diff_eq!(e.vectors[(1, 0)].norm(), 1.0, epsilon = 1e-14);
        let e = herm_eig(&pauli(1)).unwrap();
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], -1.0, epsilon = 1e-14);
        let e = herm_eig(DensityState::phi_plus().matrix()).unwrap();
        for (v, want) in e.values.iter().zip([1.0, 0.0, 0.0, 0.0]) {
            assert_abs_diff_eq!(*v, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut m = pauli(1);
        m[(0, 1)] = c(2.0);
        assert!(matches!(herm_eig(&m), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn eig_reconstruction_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let n = 1 + trial % 16;
            let m = random_hermitian(&mut rng, n);
            let e = herm_eig(&m).unwrap();
            let scale = max_abs(&m);
            for w in e.values.windows(2) {
                assert!(w[0] >= w[1]);
            }
            let recon = e.apply_fn(|x| x);
            assert!(max_abs(&(recon - &m)) <= 1e-9 * (1.0 + scale));
            for k in 0..n {
                let v = e.vector(k);
                let r = &m * &v - v.scale(e.values[k]);
                assert!(r.norm() <= 1e-9 * (1.0 + scale));
            }
            let gram = e.vectors.adjoint() * &e.vectors;
            assert!(max_abs(&(gram - identity(n))) < 1e-12);
        }
    }

    #[test]
    fn trace_norm_examples() {
        assert_abs_diff_eq!(trace_norm(&pauli(3)).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn kron_index_convention() {
        let a = CMatrix::from_fn(2, 2, |i, j| c((i * 2 + j + 1) as f64));
        let b = CMatrix::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64));
        let k = kron(&a, &b);
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..3 {
                    for q in 0..3 {
                        assert_eq!(k[(i * 3 + p, j * 3 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let phi = DensityState::phi_plus();
        let r = partial_trace(phi.matrix(), &[2, 2], &[1]).unwrap();
        assert!(max_abs(&(r - identity(2).unscale(2.0))) < 1e-15);
        assert!(matches!(
            partial_trace(phi.matrix(), &[2, 3], &[0]),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn partial_trace_of_product_three_parties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(&mut rng, 2);
        let b = random_hermitian(&mut rng, 3);
        let cc = random_hermitian(&mut rng, 2);
        let m = kron_all(&[a.clone(), b.clone(), cc.clone()]);
        let r = partial_trace(&m, &[2, 3, 2], &[0, 2]).unwrap();
        let want = kron(&a, &cc) * b.trace();
        assert!(max_abs(&(r - want)) < 1e-12);
        let r = partial_trace(&m, &[2, 3, 2], &[2, 0]).unwrap();
        let want = kron(&cc, &a) * b.trace();
        assert!(max_abs(&(r - want)) < 1e-12);
    }

    #[test]
    fn partial_transpose_of_bell_state() {
        let phi = DensityState::phi_plus();
        let pt = partial_transpose(phi.matrix(), &[2, 2], 0).unwrap();
        let v = herm_eigvals(&pt).unwrap();
        let want = [0.5, 0.5, 0.5, -0.5];
        for (x, y) in v.iter().zip(want) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-14);
        }
        let back = partial_transpose(&pt, &[2, 2], 0).unwrap();
        assert_eq!(&back, phi.matrix());
    }

    #[test]
    fn permute_swaps_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_hermitian(&mut rng, 2);
        let b = random_hermitian(&mut rng, 3);
        let p = permute_subsystems(&kron(&a, &b), &[2, 3], &[1, 0]).unwrap();
        assert!(max_abs(&(p - kron(&b, &a))) < 1e-15);
    }

    #[test]
    fn two_qubit_basis_table() {
        let basis = OperatorBasis::new(&[2, 2]).unwrap();
        assert_eq!(basis.len(), 16);
        for i in 0..4 {
            for j in 0..4 {
                let want = kron(&pauli(i), &pauli(j));
                assert_eq!(basis.element(4 * i + j), &want);
            }
        }
    }

    #[test]
    fn basis_orthogonality_qutrit_mix() {
        let basis = OperatorBasis::new(&[3, 2]).unwrap();
        assert_eq!(basis.len(), 36);
        assert_eq!(basis.element(0), &identity(6));
        for i in 0..basis.len() {
            assert!(hermiticity_defect(basis.element(i)) < 1e-15);
            for j in 0..basis.len() {
                let t = trace_product(basis.element(i), basis.element(j));
                let want = if i == j { 6.0 } else { 0.0 };
                assert_abs_diff_eq!(t.re, want, epsilon = 1e-12);
                assert_abs_diff_eq!(t.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn coords_of_mixed_state_and_errors() {
        let basis = OperatorBasis::new(&[2, 2]).unwrap();
        let a = coords(&DensityState::maximally_mixed(&[2, 2]), &basis).unwrap();
        assert_abs_diff_eq!(a[0], 0.25, epsilon = 1e-15);
        assert!(a[1..].iter().all(|x| x.abs() < 1e-15));
        let mut bad = vec![0.0; 16];
        bad[0] = 0.25;
        bad[3] = 0.5;
        assert!(matches!(from_coords(&bad, &basis), Err(Error::NotAState(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn trace_norm_triangle_and_unitary_invariance(seed in any::<u64>(), n in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_hermitian(&mut rng, n);
            let b = random_hermitian(&mut rng, n);
            let na = trace_norm(&a).unwrap();
            let nb = trace_norm(&b).unwrap();
            prop_assert!(trace_norm(&(&a + &b)).unwrap() <= na + nb + 1e-12);
            let u = herm_eig(&random_hermitian(&mut rng, n)).unwrap().vectors;
            let rotated = &u * &a * u.adjoint();
            prop_assert!((trace_norm(&rotated).unwrap() - na).abs() < 1e-10);
        }

        #[test]
        fn partial_trace_of_kron(seed in any::<u64>(), da in 1usize..5, db in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_hermitian(&mut rng, da);
            let b = random_hermitian(&mut rng, db);
            let r = partial_trace(&kron(&a, &b), &[da, db], &[0]).unwrap();
            prop_assert!(max_abs(&(r - a.clone() * b.trace())) < 1e-12);
        }

        #[test]
        fn partial_transpose_involutive(seed in any::<u64>(), sub in 0usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_hermitian(&mut rng, 12);
            let dims = [2, 3, 2];
            let once = partial_transpose(&m, &dims, sub).unwrap();
            prop_assert_eq!(partial_transpose(&once, &dims, sub).unwrap(), m);
        }

        #[test]
        fn coords_round_trip(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_hermitian(&mut rng, 6);
            let rho = (&h * h.adjoint()) + identity(6) * c(0.1);
            let rho = rho.unscale(rho.trace().re);
            let state = DensityState::new(rho.clone(), &[3, 2]).unwrap();
            let basis = OperatorBasis::new(&[3, 2]).unwrap();
            let a = coords(&state, &basis).unwrap();
            prop_assert!((a[0] - 1.0 / 6.0).abs() < 1e-14);
            let back = from_coords(&a, &basis).unwrap();
            prop_assert!(max_abs(&(back.matrix() - rho)) < 1e-12);
        }
    }
}
