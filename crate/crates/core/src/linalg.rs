//! Dense complex matrices sized for a few qubits.
//!
//! Everything here is square and row-major. The basis convention is fixed
//! across the crate: `|0> = (1, 0)^T` with `sigma_z |0> = +|0>`, so the
//! first eigenvalue of `hbar * omega * sigma_z / 2` is `+hbar * omega / 2`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Default grouping tolerance for nearly equal eigenvalues, relative to the
/// spectral scale `max(range, max |lambda|)`.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;

/// Relative tolerance used when a Hermitian input is required.
pub const HERMITIAN_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 64;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row slices. Panics if the rows are ragged.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let dim = rows.len();
        Self::from_fn(dim, |i, j| {
            assert_eq!(rows[i].len(), dim, "ragged row {i}");
            rows[i][j]
        })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Rank-one projector `|v><v|` (not normalized).
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Tr[self * other]` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        Self::from_fn(n * m, |i, j| self[(i / m, j / m)] * other[(i % m, j % m)])
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    /// Largest entry of `self - self^dagger`, relative to the largest entry.
    pub fn hermiticity_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev / scale
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = &self.adjoint() * self;
        (&prod - &Self::identity(self.dim)).max_abs() <= tol
    }

    /// Smallest eigenvalue at least `-tol`. Non-Hermitian input is never PSD.
    pub fn is_psd(&self, tol: f64) -> bool {
        match eigenvalues_hermitian(self) {
            Ok(ev) => ev.last().is_none_or(|&m| m >= -tol),
            Err(_) => false,
        }
    }

    pub fn trace_one(&self, tol: f64) -> bool {
        (self.trace() - C64::new(1.0, 0.0)).norm() <= tol
    }

    /// Hermitian part `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_re(-1.0)
    }
}

pub mod pauli {
    use super::{ComplexMatrix, C64};

    const O: C64 = C64::new(0.0, 0.0);
    const L: C64 = C64::new(1.0, 0.0);
    const I: C64 = C64::new(0.0, 1.0);

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[&[O, L], &[L, O]])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[&[O, -I], &[I, O]])
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[&[L, O], &[O, -L]])
    }

    /// Raising operator `|0><1|`.
    pub fn plus() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[&[O, L], &[O, O]])
    }

    /// Lowering operator `|1><0|`.
    pub fn minus() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[&[O, O], &[L, O]])
    }
}

/// Kronecker product, dimension `dim(a) * dim(b)`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Factor of a bipartite `S ⊗ A` space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    S,
    A,
}

/// Reduced matrix on `keep`, for a matrix on a `d_s * d_a` dimensional space
/// with index `s * d_a + a`.
pub fn partial_trace(
    m: &ComplexMatrix,
    keep: Subsystem,
    dims: (usize, usize),
) -> Result<ComplexMatrix> {
    let (ds, da) = dims;
    if ds * da != m.dim() || ds == 0 || da == 0 {
        return Err(Error::DimensionMismatch {
            expected: ds * da,
            found: m.dim(),
        });
    }
    let out = match keep {
        Subsystem::S => ComplexMatrix::from_fn(ds, |i, j| {
            (0..da).map(|a| m[(i * da + a, j * da + a)]).sum()
        }),
        Subsystem::A => ComplexMatrix::from_fn(da, |i, j| {
            (0..ds).map(|s| m[(s * da + i, s * da + j)]).sum()
        }),
    };
    Ok(out)
}

/// Grouped spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Distinct eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Orthogonal projectors onto the matching eigenspaces.
    pub projectors: Vec<ComplexMatrix>,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `sum_k lambda_k P_k`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let dim = self.projectors[0].dim();
        self.eigenvalues
            .iter()
            .zip(&self.projectors)
            .fold(ComplexMatrix::zeros(dim), |acc, (&l, p)| &acc + &p.scale_re(l))
    }

    /// `sum_k f(lambda_k) P_k`.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let dim = self.projectors[0].dim();
        self.eigenvalues
            .iter()
            .zip(&self.projectors)
            .fold(ComplexMatrix::zeros(dim), |acc, (&l, p)| &acc + &p.scale(f(l)))
    }
}

/// Raw eigenpairs from cyclic complex Jacobi rotations, unsorted.
fn jacobi_eigen(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return (vec![0.0; n], v);
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-17 * norm {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = C64::from_polar(1.0, -apq.arg());
                let zeta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Rotation restricted to the (p, q) plane.
                let wpp = C64::new(c, 0.0);
                let wpq = C64::new(s, 0.0);
                let wqp = phase * (-s);
                let wqq = phase * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * wpp + akq * wqp;
                    a[(k, q)] = akp * wpq + akq * wqq;
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * wpp + vkq * wqp;
                    v[(k, q)] = vkp * wpq + vkq * wqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = wpp.conj() * apk + wqp.conj() * aqk;
                    a[(q, k)] = wpq.conj() * apk + wqq.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
            }
        }
    }
    ((0..n).map(|i| a[(i, i)].re).collect(), v)
}

fn require_hermitian(m: &ComplexMatrix) -> Result<()> {
    let deviation = m.hermiticity_defect();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Eigenvalues of a Hermitian matrix, descending, with multiplicity.
pub fn eigenvalues_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>> {
    require_hermitian(m)?;
    let (mut ev, _) = jacobi_eigen(m);
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// Spectral decomposition with eigenvalues closer than
/// `degeneracy_tol * max(range, max |lambda|)` merged into one projector.
pub fn eig_hermitian(m: &ComplexMatrix, degeneracy_tol: f64) -> Result<SpectralDecomposition> {
    require_hermitian(m)?;
    let n = m.dim();
    let (ev, vecs) = jacobi_eigen(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| ev[j].total_cmp(&ev[i]));

    let hi = ev[order[0]];
    let lo = ev[order[n - 1]];
    let scale = (hi - lo).max(hi.abs()).max(lo.abs());
    let threshold = degeneracy_tol * scale;

    let column = |k: usize| -> Vec<C64> { (0..n).map(|i| vecs[(i, k)]).collect() };

    let mut eigenvalues = Vec::new();
    let mut projectors: Vec<ComplexMatrix> = Vec::new();
    let mut members: Vec<f64> = Vec::new();
    for &k in &order {
        let lambda = ev[k];
        let proj = ComplexMatrix::outer(&column(k));
        match members.first() {
            Some(&head) if (head - lambda).abs() <= threshold => {
                members.push(lambda);
                let last = projectors.last_mut().expect("group has a projector");
                *last = &*last + &proj;
                *eigenvalues.last_mut().expect("group has an eigenvalue") =
                    members.iter().sum::<f64>() / members.len() as f64;
            }
            _ => {
                members = vec![lambda];
                eigenvalues.push(lambda);
                projectors.push(proj);
            }
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        projectors,
    })
}

/// `exp(-i h t / hbar)` through the spectral decomposition of `h`.
pub fn unitary_from_hamiltonian(h: &ComplexMatrix, t: f64, hbar: f64) -> Result<ComplexMatrix> {
    let spec = eig_hermitian(h, DEFAULT_DEGENERACY_TOL)?;
    Ok(spec.map(|e| C64::from_polar(1.0, -e * t / hbar)))
}

/// Frobenius norm of `ab - ba`.
pub fn commutator_norm(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    a.check_same_dim(b)?;
    Ok(a.commutator(b).frobenius_norm())
}

/// `(1/2) sum |eig(a - b)|` for Hermitian `a`, `b`.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    a.check_same_dim(b)?;
    require_hermitian(a)?;
    require_hermitian(b)?;
    // The difference of nearly equal inputs is checked through its operands:
    // relative to its own tiny entries it can look far from Hermitian.
    let (ev, _) = jacobi_eigen(&(a - b));
    Ok(0.5 * ev.iter().map(|x| x.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn tensor_of_identities_and_sigma_z() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor(&i2, &i2), ComplexMatrix::identity(4));
        let zz = tensor(&pauli::z(), &i2);
        assert_eq!(zz, ComplexMatrix::from_real_diag(&[1.0, 1.0, -1.0, -1.0]));
    }

    #[test]
    fn tensor_trace_is_multiplicative() {
        let a = ComplexMatrix::from_rows(&[&[c(0.3, 0.0), c(0.1, 0.2)], &[c(0.1, -0.2), c(0.7, 0.0)]]);
        let b = ComplexMatrix::from_real_diag(&[0.6, 0.4]);
        assert!((tensor(&a, &b).trace() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_and_mixed() {
        let rs = ComplexMatrix::from_rows(&[&[c(0.25, 0.0), c(0.2, 0.1)], &[c(0.2, -0.1), c(0.75, 0.0)]]);
        let ra = ComplexMatrix::from_rows(&[&[c(0.4, 0.0), c(0.3, 0.0)], &[c(0.3, 0.0), c(0.6, 0.0)]]);
        let joint = tensor(&rs, &ra);
        let back = partial_trace(&joint, Subsystem::S, (2, 2)).unwrap();
        assert!((&back - &rs).max_abs() < 1e-15);
        let back_a = partial_trace(&joint, Subsystem::A, (2, 2)).unwrap();
        assert!((&back_a - &ra).max_abs() < 1e-15);

        let mixed = ComplexMatrix::identity(4).scale_re(0.25);
        let red = partial_trace(&mixed, Subsystem::A, (2, 2)).unwrap();
        assert!((&red - &ComplexMatrix::identity(2).scale_re(0.5)).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = ComplexMatrix::identity(4);
        assert!(matches!(
            partial_trace(&m, Subsystem::S, (2, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn eig_sigma_z_and_identity() {
        let d = eig_hermitian(&pauli::z(), DEFAULT_DEGENERACY_TOL).unwrap();
        assert_eq!(d.eigenvalues.len(), 2);
        assert!((d.eigenvalues[0] - 1.0).abs() < 1e-15);
        assert!((d.eigenvalues[1] + 1.0).abs() < 1e-15);
        assert!((&d.projectors[0] - &ComplexMatrix::from_real_diag(&[1.0, 0.0])).max_abs() < 1e-15);
        assert!((&d.projectors[1] - &ComplexMatrix::from_real_diag(&[0.0, 1.0])).max_abs() < 1e-15);

        let id = eig_hermitian(&ComplexMatrix::identity(2), DEFAULT_DEGENERACY_TOL).unwrap();
        assert_eq!(id.eigenvalues, vec![1.0]);
        assert!((&id.projectors[0] - &ComplexMatrix::identity(2)).max_abs() < 1e-15);
    }

    #[test]
    fn eig_groups_resonant_free_hamiltonian() {
        let w = 1.3;
        let hs = pauli::z().scale_re(w / 2.0);
        let i2 = ComplexMatrix::identity(2);
        let h0 = &tensor(&hs, &i2) + &tensor(&i2, &hs);
        let d = eig_hermitian(&h0, DEFAULT_DEGENERACY_TOL).unwrap();
        assert_eq!(d.eigenvalues.len(), 3);
        assert!((d.eigenvalues[0] - w).abs() < 1e-14);
        assert!(d.eigenvalues[1].abs() < 1e-14);
        assert!((d.eigenvalues[2] + w).abs() < 1e-14);
        assert!((d.projectors[1].trace().re - 2.0).abs() < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        assert!(matches!(
            eig_hermitian(&pauli::plus(), DEFAULT_DEGENERACY_TOL),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn unitary_special_cases() {
        let h = pauli::z().scale_re(0.5 * 2.0);
        let u0 = unitary_from_hamiltonian(&h, 0.0, 1.0).unwrap();
        assert!((&u0 - &ComplexMatrix::identity(2)).max_abs() < 1e-15);
        // hbar*omega*sigma_z/2 over a full period gives -I.
        let omega = 2.0;
        let h = pauli::z().scale_re(omega / 2.0);
        let u = unitary_from_hamiltonian(&h, 2.0 * PI / omega, 1.0).unwrap();
        assert!((&u + &ComplexMatrix::identity(2)).max_abs() < 1e-14);
    }

    #[test]
    fn commutator_norm_pauli() {
        assert_eq!(commutator_norm(&pauli::z(), &pauli::z()).unwrap(), 0.0);
        let n = commutator_norm(&pauli::x(), &pauli::y()).unwrap();
        assert!((n - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!(commutator_norm(&pauli::x(), &ComplexMatrix::identity(4)).is_err());
    }

    #[test]
    fn trace_distance_cases() {
        let p0 = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        let p1 = ComplexMatrix::from_real_diag(&[0.0, 1.0]);
        assert!(trace_distance(&p0, &p0).unwrap().abs() < 1e-15);
        assert!((trace_distance(&p0, &p1).unwrap() - 1.0).abs() < 1e-15);
        assert!(trace_distance(&p0, &ComplexMatrix::identity(4)).is_err());
    }

    #[test]
    fn predicates() {
        let rho = ComplexMatrix::from_rows(&[&[c(0.5, 0.0), c(0.5, 0.0)], &[c(0.5, 0.0), c(0.5, 0.0)]]);
        assert!(rho.is_hermitian(1e-12));
        assert!(rho.is_psd(1e-12));
        assert!(rho.trace_one(1e-12));
        assert!(pauli::y().is_unitary(1e-15));
        assert!(!pauli::z().is_psd(1e-12));
        assert!(!pauli::plus().is_hermitian(1e-12));
    }
}
