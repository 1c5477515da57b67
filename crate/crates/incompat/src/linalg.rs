//! Dense complex matrices and the handful of spectral tools the rest of the
//! crate needs.
//!
//! Tensor factors are ordered with subsystem 0 as the slowest-varying index,
//! so `kron(a, b)[(i1, i2), (j1, j2)] = a[i1, j1] * b[i2, j2]` with the flat
//! index `i1 * dim(b) + i2`. Factor indices in the partial operations are
//! zero-based.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64 as C64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Absolute entrywise tolerance for "is Hermitian" checks on inputs.
pub const HERMITIAN_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 80;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from a row-major entry vector of length `dim²`.
    pub fn from_vec(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::Dimension("ragged rows".into()));
            }
            data.extend(r.iter().map(|&x| C64::new(x, 0.0)));
        }
        Ok(Self { dim, data })
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn real_diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// `|u⟩⟨v|`
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(
            u.len(),
            v.len(),
            "outer product of vectors of unequal length"
        );
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    /// `|v⟩⟨v|`
    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    /// Matrix unit `|i⟩⟨j|`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m[(i, j)] = ONE;
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &CMatrix) {
        assert_eq!(self.dim, other.dim, "axpy on matrices of unequal size");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn axpy_c(&mut self, s: C64, other: &CMatrix) {
        assert_eq!(self.dim, other.dim, "axpy on matrices of unequal size");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn matmul(&self, other: &CMatrix) -> Self {
        assert_eq!(self.dim, other.dim, "matmul on matrices of unequal size");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            let row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, b) in row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    /// `u · self · u†`
    pub fn conjugate_by(&self, u: &CMatrix) -> Self {
        u.matmul(self).matmul(&u.adjoint())
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Real part of the Hilbert–Schmidt inner product, `Re tr(self† other)`.
    pub fn inner(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// Full Hilbert–Schmidt inner product `tr(self† other)`.
    pub fn hs(&self, other: &CMatrix) -> C64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "comparing matrices of unequal size");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `(A + A†)/2`
    pub fn hermitian_part(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// Applies a real function to the spectrum of a Hermitian matrix.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Ok(hermitian_eig(self)?.rebuild(f))
    }

    /// Square root of a PSD matrix (negative eigenvalues clipped).
    pub fn sqrt_psd(&self) -> Result<Self> {
        self.map_spectrum(|x| x.max(0.0).sqrt())
    }

    pub(crate) fn check_hermitian(&self) -> Result<()> {
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            Err(Error::NotHermitian(dev))
        } else {
            Ok(())
        }
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "adding matrices of unequal size");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "subtracting matrices of unequal size");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Mul<f64> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: f64) -> CMatrix {
        self.scale(rhs)
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale(-1.0)
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&CMatrix> for CMatrix {
    fn sub_assign(&mut self, rhs: &CMatrix) {
        self.axpy(-1.0, rhs);
    }
}

/// Serialized as a list of rows, each a list of `[re, im]` pairs.
impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim)
            .map(|i| self.row(i).iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let dim = rows.len();
        if dim == 0 {
            return Err(D::Error::custom("empty matrix"));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(D::Error::custom(format!(
                    "row {i} has {} entries, expected {dim}",
                    r.len()
                )));
            }
            data.extend(r.iter().map(|&[re, im]| C64::new(re, im)));
        }
        Ok(CMatrix { dim, data })
    }
}

/// Kronecker product, second factor fastest-varying.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (na, nb) = (a.dim, b.dim);
    let n = na * nb;
    let mut out = CMatrix::zeros(n);
    for i1 in 0..na {
        for j1 in 0..na {
            let x = a[(i1, j1)];
            if x == ZERO {
                continue;
            }
            for i2 in 0..nb {
                for j2 in 0..nb {
                    out[(i1 * nb + i2, j1 * nb + j2)] = x * b[(i2, j2)];
                }
            }
        }
    }
    out
}

pub fn kron_all(factors: &[&CMatrix]) -> CMatrix {
    let mut acc = CMatrix::identity(1);
    for f in factors {
        acc = kron(&acc, f);
    }
    acc
}

/// The unnormalised maximally entangled operator `Σ_{m,n} |mm⟩⟨nn|` on `C^d ⊗ C^d`.
pub fn omega(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d * d);
    for a in 0..d {
        for b in 0..d {
            m[(a * d + a, b * d + b)] = ONE;
        }
    }
    m
}

/// The flip operator on `C^d ⊗ C^d`.
pub fn swap(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d * d);
    for a in 0..d {
        for b in 0..d {
            m[(b * d + a, a * d + b)] = ONE;
        }
    }
    m
}

/// Per flat index: its position within the kept factors and within the rest.
struct Split {
    kept: Vec<usize>,
    rest: Vec<usize>,
    kept_dim: usize,
    rest_dim: usize,
}

fn check_dims(total: usize, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || prod != total {
        return Err(Error::Dimension(format!(
            "factor dims {dims:?} do not multiply to {total}"
        )));
    }
    Ok(())
}

fn split_indices(dims: &[usize], keep: &[usize]) -> Result<Split> {
    for &k in keep {
        if k >= dims.len() {
            return Err(Error::Dimension(format!(
                "factor {k} out of range for {} factors",
                dims.len()
            )));
        }
    }
    let total: usize = dims.iter().product();
    let mut kept = vec![0; total];
    let mut rest = vec![0; total];
    let mut digits = vec![0usize; dims.len()];
    for idx in 0..total {
        let mut r = idx;
        for f in (0..dims.len()).rev() {
            digits[f] = r % dims[f];
            r /= dims[f];
        }
        let (mut ki, mut ri) = (0, 0);
        for f in 0..dims.len() {
            if keep.contains(&f) {
                ki = ki * dims[f] + digits[f];
            } else {
                ri = ri * dims[f] + digits[f];
            }
        }
        kept[idx] = ki;
        rest[idx] = ri;
    }
    let kept_dim = (0..dims.len())
        .filter(|f| keep.contains(f))
        .map(|f| dims[f])
        .product();
    let rest_dim = total / kept_dim;
    Ok(Split {
        kept,
        rest,
        kept_dim,
        rest_dim,
    })
}

/// Traces out every factor not listed in `keep`. Kept factors stay in their
/// original relative order.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    check_dims(m.dim, dims)?;
    if keep.is_empty() {
        return Err(Error::Dimension(
            "partial trace must keep at least one factor".into(),
        ));
    }
    let s = split_indices(dims, keep)?;
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); s.rest_dim];
    for idx in 0..m.dim {
        groups[s.rest[idx]].push(idx);
    }
    let mut out = CMatrix::zeros(s.kept_dim);
    for g in &groups {
        for &r in g {
            for &c in g {
                out[(s.kept[r], s.kept[c])] += m[(r, c)];
            }
        }
    }
    Ok(out)
}

/// Transposes the listed factors, leaving the others untouched.
pub fn partial_transpose(m: &CMatrix, dims: &[usize], systems: &[usize]) -> Result<CMatrix> {
    check_dims(m.dim, dims)?;
    let s = split_indices(dims, systems)?;
    // flat index = interleave(kept part, rest part); rebuild from the two parts
    let mut compose = vec![vec![0usize; s.rest_dim]; s.kept_dim];
    for idx in 0..m.dim {
        compose[s.kept[idx]][s.rest[idx]] = idx;
    }
    let n = m.dim;
    let mut out = CMatrix::zeros(n);
    for r in 0..n {
        for c in 0..n {
            let r2 = compose[s.kept[c]][s.rest[r]];
            let c2 = compose[s.kept[r]][s.rest[c]];
            out[(r2, c2)] = m[(r, c)];
        }
    }
    Ok(out)
}

/// `x` acting on the listed factors tensored with the identity on the rest.
pub fn embed(x: &CMatrix, dims: &[usize], factors: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    let s = split_indices(dims, factors)?;
    if x.dim != s.kept_dim {
        return Err(Error::Dimension(format!(
            "operator of size {} does not fit factors {factors:?}",
            x.dim
        )));
    }
    let mut out = CMatrix::zeros(total);
    for r in 0..total {
        for c in 0..total {
            if s.rest[r] == s.rest[c] {
                out[(r, c)] = x[(s.kept[r], s.kept[c])];
            }
        }
    }
    Ok(out)
}

/// Reorders tensor factors: factor `i` of the result is factor `perm[i]` of `m`.
pub fn permute_factors(m: &CMatrix, dims: &[usize], perm: &[usize]) -> Result<CMatrix> {
    check_dims(m.dim, dims)?;
    let k = dims.len();
    let mut seen = vec![false; k];
    if perm.len() != k
        || perm
            .iter()
            .any(|&p| p >= k || std::mem::replace(&mut seen[p], true))
    {
        return Err(Error::Dimension(format!(
            "{perm:?} is not a permutation of {k} factors"
        )));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let n = m.dim;
    let mut map = vec![0usize; n];
    let mut digits = vec![0usize; k];
    for (old, slot) in map.iter_mut().enumerate() {
        let mut r = old;
        for f in (0..k).rev() {
            digits[f] = r % dims[f];
            r /= dims[f];
        }
        let mut new = 0;
        for i in 0..k {
            new = new * new_dims[i] + digits[perm[i]];
        }
        *slot = new;
    }
    let mut out = CMatrix::zeros(n);
    for r in 0..n {
        for c in 0..n {
            out[(map[r], map[c])] = m[(r, c)];
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct EigDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub eigenvectors: CMatrix,
}

impl EigDecomposition {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k)
    }

    /// `V f(Λ) V†`
    pub fn rebuild(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.eigenvectors.dim;
        let mut out = CMatrix::zeros(n);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            if w != 0.0 {
                add_rank_one(&mut out, &self.eigenvectors, k, w);
            }
        }
        out
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.rebuild(|x| x)
    }
}

fn add_rank_one(out: &mut CMatrix, vecs: &CMatrix, k: usize, w: f64) {
    let n = vecs.dim;
    let v = vecs.column(k);
    for i in 0..n {
        let vi = v[i] * w;
        for j in 0..n {
            out.data[i * n + j] += vi * v[j].conj();
        }
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Eigenvalues come back ascending; each eigenvector is rephased so that its
/// first non-negligible component is real and positive.
pub fn hermitian_eig(m: &CMatrix) -> Result<EigDecomposition> {
    m.check_hermitian()?;
    Ok(jacobi(m, None))
}

/// Same as [`hermitian_eig`] but seeded with an approximate eigenbasis, which
/// makes Jacobi converge in one or two sweeps when the input changed little.
/// The Hermitian part of `m` is used without checking.
pub fn hermitian_eig_warm(m: &CMatrix, basis: &CMatrix) -> EigDecomposition {
    jacobi(m, Some(basis))
}

pub(crate) fn eig_unchecked(m: &CMatrix) -> EigDecomposition {
    jacobi(m, None)
}

fn jacobi(m: &CMatrix, warm: Option<&CMatrix>) -> EigDecomposition {
    let n = m.dim;
    let herm = m.hermitian_part();
    let (mut a, mut v) = match warm {
        Some(b) => (
            b.adjoint().matmul(&herm).matmul(b).hermitian_part().data,
            b.data.clone(),
        ),
        None => (herm.data, CMatrix::identity(n).data),
    };
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale > 0.0 && n > 1 {
        let stop = f64::EPSILON * scale;
        let skip = 1e-3 * stop / n as f64;
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
                .map(|(p, q)| a[p * n + q].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= stop {
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, n, p, q, skip);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i].re).collect();
    let mut vecs = CMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        let lead = (0..n)
            .map(|i| v[i * n + src])
            .find(|z| z.norm() > 1e-12)
            .unwrap_or(ONE);
        let phase = lead.conj() / lead.norm();
        for i in 0..n {
            vecs.data[i * n + col] = v[i * n + src] * phase;
        }
    }
    EigDecomposition {
        eigenvalues,
        eigenvectors: vecs,
    }
}

/// One complex Jacobi rotation annihilating `a[p,q]`.
#[inline]
fn rotate(a: &mut [C64], v: &mut [C64], n: usize, p: usize, q: usize, skip: f64) {
    let apq = a[p * n + q];
    let abs = apq.norm();
    if abs <= skip {
        return;
    }
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let ph = (apq / abs).conj();
    let theta = (aqq - app) / (2.0 * abs);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // G = diag(1, ph)·R with R = [[c, s], [-s, c]]
    let (gpp, gpq, gqp, gqq) = (C64::new(c, 0.0), C64::new(s, 0.0), ph * (-s), ph * c);
    for k in 0..n {
        let (x, y) = (a[k * n + p], a[k * n + q]);
        a[k * n + p] = x * gpp + y * gqp;
        a[k * n + q] = x * gpq + y * gqq;
    }
    for k in 0..n {
        let (x, y) = (a[p * n + k], a[q * n + k]);
        a[p * n + k] = gpp.conj() * x + gqp.conj() * y;
        a[q * n + k] = gpq.conj() * x + gqq.conj() * y;
    }
    a[p * n + q] = ZERO;
    a[q * n + p] = ZERO;
    a[p * n + p] = C64::new(app - t * abs, 0.0);
    a[q * n + q] = C64::new(aqq + t * abs, 0.0);
    for k in 0..n {
        let (x, y) = (v[k * n + p], v[k * n + q]);
        v[k * n + p] = x * gpp + y * gqp;
        v[k * n + q] = x * gpq + y * gqq;
    }
}

/// Frobenius-nearest positive semidefinite matrix.
pub fn psd_project(m: &CMatrix) -> Result<CMatrix> {
    m.check_hermitian()?;
    Ok(clip_negative(m, &eig_unchecked(m)))
}

/// Rebuilds from whichever side of the spectrum has fewer terms.
pub(crate) fn clip_negative(m: &CMatrix, e: &EigDecomposition) -> CMatrix {
    let n = e.eigenvalues.len();
    let negatives = e.eigenvalues.iter().filter(|&&x| x < 0.0).count();
    if negatives * 2 <= n {
        let mut out = m.hermitian_part();
        for (k, &lam) in e.eigenvalues.iter().enumerate() {
            if lam < 0.0 {
                add_rank_one(&mut out, &e.eigenvectors, k, -lam);
            }
        }
        out
    } else {
        e.rebuild(|x| x.max(0.0))
    }
}

pub fn min_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.eigenvalues[0])
}

pub fn max_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(*hermitian_eig(m)?
        .eigenvalues
        .last()
        .expect("non-empty spectrum"))
}
