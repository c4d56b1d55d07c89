//! Dense complex linear algebra for the small operators used throughout the
//! crate (dimension at most 16 for exponentials).
//!
//! Storage is row-major. Hermitian eigendecompositions are delegated to
//! `nalgebra`; everything else, including the Padé exponential, lives here.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default tolerance for algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-10;
/// Default tolerance for unitarity checks.
pub const UNITARITY_TOL: f64 = 1e-12;
/// Largest dimension accepted by [`mat_exp`].
pub const MAX_EXP_DIM: usize = 16;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Unit-modulus phase factor `e^{i x}`.
#[inline]
pub fn cis(x: f64) -> C64 {
    C64::from_polar(1.0, x)
}

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[C64]>>(rows: &[R]) -> Self {
        let r = rows.len();
        let cols = rows.first().map_or(0, |row| row.as_ref().len());
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            let row = row.as_ref();
            assert_eq!(row.len(), cols, "ragged rows");
            data.extend_from_slice(row);
        }
        CMatrix {
            rows: r,
            cols,
            data,
        }
    }

    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let complex: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.as_ref().iter().map(|&x| cr(x)).collect())
            .collect();
        Self::from_rows(&complex)
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| cr(x)).collect();
        Self::from_diag(&d)
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                m[(i, j)] = ui * vj.conj();
            }
        }
        m
    }

    /// Projector `|u><u|`.
    pub fn projector(u: &[C64]) -> Self {
        Self::outer(u, u)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diag().into_iter().sum()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &CMatrix) -> CMatrix {
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `A·B − B·A`.
    pub fn commutator(&self, other: &CMatrix) -> CMatrix {
        &(self * other) - &(other * self)
    }

    /// `A·B + B·A`.
    pub fn anticommutator(&self, other: &CMatrix) -> CMatrix {
        &(self * other) + &(other * self)
    }

    /// `Tr(A† B)`, the Hilbert–Schmidt inner product.
    pub fn inner(&self, other: &CMatrix) -> C64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && (self - &self.adjoint()).max_abs() <= tol
    }

    /// `‖U†U − I‖_F ≤ tol`.
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square()
            && (&(&self.adjoint() * self) - &CMatrix::identity(self.rows)).frobenius_norm() <= tol
    }

    /// Returns `(A + A†)/2`.
    pub fn hermitian_part(&self) -> CMatrix {
        (self + &self.adjoint()).scale_re(0.5)
    }

    /// Restriction to the rows and columns listed in `idx`, in that order.
    pub fn select(&self, idx: &[usize]) -> CMatrix {
        let mut m = Self::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }

    /// Embeds `self` into an `n x n` identity at positions `idx`.
    pub fn embed(&self, n: usize, idx: &[usize]) -> CMatrix {
        let mut m = Self::identity(n);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m[(i, j)] = self[(a, b)];
            }
        }
        m
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Solves `self · X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if !self.is_square() || rhs.rows != self.rows {
            return Err(Error::Dimension(format!(
                "cannot solve {}x{} system with {}x{} right-hand side",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let n = self.rows;
        let m = rhs.cols;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for k in 0..n {
            let (piv, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].norm()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pmax == 0.0 {
                return Err(Error::Argument("singular matrix in solve".into()));
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                for j in 0..m {
                    b.swap(k * m + j, piv * m + j);
                }
            }
            let inv = ONE / a[k * n + k];
            for i in (k + 1)..n {
                let f = a[i * n + k] * inv;
                if f == ZERO {
                    continue;
                }
                for j in k..n {
                    let t = a[k * n + j];
                    a[i * n + j] -= f * t;
                }
                for j in 0..m {
                    let t = b[k * m + j];
                    b[i * m + j] -= f * t;
                }
            }
        }
        for k in (0..n).rev() {
            let inv = ONE / a[k * n + k];
            for j in 0..m {
                let mut s = b[k * m + j];
                for l in (k + 1)..n {
                    s -= a[k * n + l] * b[l * m + j];
                }
                b[k * m + j] = s * inv;
            }
        }
        CMatrix::from_vec(n, m, b)
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }

    /// Column-stacking vectorization, `vec(A)`.
    pub fn vectorize(&self) -> Vec<C64> {
        let mut v = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self[(i, j)]);
            }
        }
        v
    }

    /// Inverse of [`CMatrix::vectorize`] for a square matrix.
    pub fn unvectorize(v: &[C64], n: usize) -> CMatrix {
        assert_eq!(v.len(), n * n);
        let mut m = Self::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                m[(i, j)] = v[j * n + i];
            }
        }
        m
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Mul<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    /// Panics on mismatched shapes; use [`CMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &'a CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        self.mul_unchecked(rhs)
    }
}

impl<'a> Add<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &'a CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a CMatrix> for &'a CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &'a CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.map(|z| -z)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of two state vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.539398330063230e-1,
    9.504178996162932e-1,
    2.097847961257068,
    5.371920351148152,
];

/// `exp(scale · A)` by Padé scaling and squaring (Higham 2005).
pub fn mat_exp(a: &CMatrix, scale: C64) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "mat_exp needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    if a.rows > MAX_EXP_DIM {
        return Err(Error::Dimension(format!(
            "mat_exp supports dimension <= {MAX_EXP_DIM}, got {}",
            a.rows
        )));
    }
    let n = a.rows;
    let x = a.scale(scale);
    let norm = x.norm_1();
    if norm == 0.0 {
        return Ok(CMatrix::identity(n));
    }
    let id = CMatrix::identity(n);
    let x2 = &x * &x;

    let low: [&[f64]; 4] = [&PADE3, &PADE5, &PADE7, &PADE9];
    for (m, coeffs) in low.iter().enumerate() {
        if norm <= THETA[m] {
            // powers x^0, x^2, x^4, ...
            let mut u = id.scale_re(coeffs[1]);
            let mut v = id.scale_re(coeffs[0]);
            let mut p = id.clone();
            for k in 1..coeffs.len() / 2 {
                p = &p * &x2;
                u = &u + &p.scale_re(coeffs[2 * k + 1]);
                v = &v + &p.scale_re(coeffs[2 * k]);
            }
            let u = &x * &u;
            return (&v - &u).solve(&(&v + &u));
        }
    }

    let s = (norm / THETA[4]).log2().ceil().max(0.0) as i32;
    let x = x.scale_re(0.5f64.powi(s));
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let b = &PADE13;
    let u_inner = &(&x6.scale_re(b[13]) + &x4.scale_re(b[11])) + &x2.scale_re(b[9]);
    let u_inner = &x6 * &u_inner;
    let u_inner = &(&(&u_inner + &x6.scale_re(b[7])) + &x4.scale_re(b[5]))
        + &(&x2.scale_re(b[3]) + &id.scale_re(b[1]));
    let u = &x * &u_inner;
    let v_inner = &(&x6.scale_re(b[12]) + &x4.scale_re(b[10])) + &x2.scale_re(b[8]);
    let v_inner = &x6 * &v_inner;
    let v = &(&(&v_inner + &x6.scale_re(b[6])) + &x4.scale_re(b[4]))
        + &(&x2.scale_re(b[2]) + &id.scale_re(b[0]));
    let mut r = (&v - &u).solve(&(&v + &u))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues in ascending order
/// and the matching orthonormal eigenvectors as columns.
pub fn eigh(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !h.is_square() {
        return Err(Error::Dimension(format!(
            "eigh needs a square matrix, got {}x{}",
            h.rows, h.cols
        )));
    }
    let n = h.rows;
    let eig = h.hermitian_part().to_nalgebra().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            vecs[(row, col)] = eig.eigenvectors[(row, k)];
        }
    }
    Ok((values, vecs))
}

/// Hermitian eigenvalues in ascending order.
pub fn eigvalsh(h: &CMatrix) -> Result<Vec<f64>> {
    Ok(eigh(h)?.0)
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_fn(h: &CMatrix, f: impl Fn(f64) -> C64) -> Result<CMatrix> {
    let (vals, vecs) = eigh(h)?;
    let d: Vec<C64> = vals.into_iter().map(f).collect();
    Ok(&(&vecs * &CMatrix::from_diag(&d)) * &vecs.adjoint())
}

/// `exp(−i t H)` for Hermitian `H` through its eigendecomposition.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> Result<CMatrix> {
    hermitian_fn(h, |e| cis(-e * t))
}

/// Closed-form `exp(−i t H)` for a 2×2 Hermitian `H`.
pub fn expm_hermitian_2x2(h: &CMatrix, t: f64) -> CMatrix {
    debug_assert!(h.rows == 2 && h.cols == 2);
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let off = h[(0, 1)];
    let mean = 0.5 * (a + d);
    let hz = 0.5 * (a - d);
    let hx = off.re;
    let hy = -off.im;
    let r = (hx * hx + hy * hy + hz * hz).sqrt();
    let (cs, sn) = ((r * t).cos(), (r * t).sin());
    let g = cis(-mean * t);
    // exp(-i t (h·σ)) = cos(rt) I − i sin(rt) (h·σ)/r
    let k = if r > 0.0 { sn / r } else { t };
    let m00 = c(cs, -k * hz);
    let m11 = c(cs, k * hz);
    let m01 = c(0.0, -k) * c(hx, -hy);
    let m10 = c(0.0, -k) * c(hx, hy);
    CMatrix::from_rows(&[[g * m00, g * m01], [g * m10, g * m11]])
}

/// Principal square root of a positive semidefinite matrix (negative
/// eigenvalues are clipped to zero).
pub fn sqrtm_psd(a: &CMatrix) -> Result<CMatrix> {
    hermitian_fn(a, |e| cr(e.max(0.0).sqrt()))
}

/// Pauli matrices in the ordered basis (|0>, |1>) with σ_z|0> = +|0>.
pub mod pauli {
    use super::*;

    pub fn id() -> CMatrix {
        CMatrix::identity(2)
    }

    pub fn x() -> CMatrix {
        CMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_rows(&[[ZERO, -I], [I, ZERO]])
    }

    pub fn z() -> CMatrix {
        CMatrix::from_real_rows(&[[1.0, 0.0], [0.0, -1.0]])
    }

    /// `[I, X, Y, Z]`.
    pub fn basis() -> [CMatrix; 4] {
        [id(), x(), y(), z()]
    }

    pub const LABELS: [char; 4] = ['I', 'X', 'Y', 'Z'];

    /// Tensor product of Paulis named by a label such as `"XZ"`.
    pub fn from_label(label: &str) -> Option<CMatrix> {
        let mut out = CMatrix::identity(1);
        for ch in label.chars() {
            let p = match ch {
                'I' => id(),
                'X' => x(),
                'Y' => y(),
                'Z' => z(),
                _ => return None,
            };
            out = kron(&out, &p);
        }
        Some(out)
    }

    /// All n-qubit Pauli labels in lexicographic I < X < Y < Z order.
    pub fn labels(n: usize) -> Vec<String> {
        let mut out = vec![String::new()];
        for _ in 0..n {
            out = out
                .iter()
                .flat_map(|prefix| LABELS.iter().map(move |ch| format!("{prefix}{ch}")))
                .collect();
        }
        out
    }
}

/// Average gate fidelity `(|Tr M|² + Tr M†M) / (d(d+1))` with
/// `M = U_tgt† U_sim`; tolerates a non-unitary (leaky) `u_sim` block.
pub fn average_gate_fidelity(u_sim: &CMatrix, u_tgt: &CMatrix) -> f64 {
    let d = u_tgt.rows() as f64;
    let m = &u_tgt.adjoint() * u_sim;
    let tr = m.trace().norm_sqr();
    let mm = m.frobenius_norm().powi(2);
    ((tr + mm) / (d * (d + 1.0))).clamp(0.0, 1.0)
}

/// Spin-1 operators in the ordered basis (m = +1, 0, −1).
pub mod spin1 {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn sz() -> CMatrix {
        CMatrix::from_real_diag(&[1.0, 0.0, -1.0])
    }

    pub fn sz2() -> CMatrix {
        CMatrix::from_real_diag(&[1.0, 0.0, 1.0])
    }

    pub fn sx() -> CMatrix {
        let s = FRAC_1_SQRT_2;
        CMatrix::from_real_rows(&[[0.0, s, 0.0], [s, 0.0, s], [0.0, s, 0.0]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        // small LCG keeps the test free of RNG dependencies
        let mut state = seed;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = c(next(), next());
            }
        }
        m.hermitian_part()
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = CMatrix::zeros(3, 3);
        assert_eq!(mat_exp(&z, c(0.7, -2.0)).unwrap(), CMatrix::identity(3));
    }

    #[test]
    fn half_period_sigma_x() {
        let u = mat_exp(&pauli::x(), c(0.0, -PI / 2.0)).unwrap();
        let expected = pauli::x().scale(-I);
        assert!((&u - &expected).frobenius_norm() < 1e-14);
    }

    #[test]
    fn pade_matches_eigendecomposition_oracle() {
        let h = random_hermitian(4, 7);
        let t = 0.37;
        let pade = mat_exp(&h, c(0.0, -t)).unwrap();
        // oracle: diagonalize, exponentiate eigenvalues, rotate back
        let (vals, vecs) = eigh(&h).unwrap();
        let d: Vec<C64> = vals.iter().map(|&e| cis(-e * t)).collect();
        let oracle = &(&vecs * &CMatrix::from_diag(&d)) * &vecs.adjoint();
        assert!((&pade - &oracle).frobenius_norm() < 1e-10);
        assert!(pade.is_unitary(1e-12));
    }

    #[test]
    fn pade_handles_large_norm_via_squaring() {
        let h = random_hermitian(6, 11).scale_re(40.0);
        let u = mat_exp(&h, c(0.0, -1.3)).unwrap();
        let oracle = expm_hermitian(&h, 1.3).unwrap();
        assert!((&u - &oracle).frobenius_norm() < 1e-10);
        assert!(u.is_unitary(1e-12));
    }

    #[test]
    fn closed_form_2x2_matches_pade() {
        let h = random_hermitian(2, 3).scale_re(5.0);
        let a = expm_hermitian_2x2(&h, 0.21);
        let b = mat_exp(&h, c(0.0, -0.21)).unwrap();
        assert!((&a - &b).frobenius_norm() < 1e-13);
        let zero = expm_hermitian_2x2(&CMatrix::zeros(2, 2), 1.0);
        assert_eq!(zero, CMatrix::identity(2));
    }

    #[test]
    fn non_square_is_rejected() {
        let m = CMatrix::zeros(2, 3);
        assert!(matches!(mat_exp(&m, ONE), Err(Error::Dimension(_))));
        assert!(matches!(
            mat_exp(&CMatrix::identity(17), ONE),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn kron_examples() {
        assert_eq!(kron(&pauli::id(), &pauli::id()), CMatrix::identity(4));
        assert_eq!(
            kron(&pauli::z(), &pauli::id()),
            CMatrix::from_real_diag(&[1.0, 1.0, -1.0, -1.0])
        );
        let spec = eigvalsh(&kron(&spin1::sz(), &CMatrix::identity(3))).unwrap();
        let expected = [-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        for (a, b) in spec.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_recovers_rhs() {
        let a = &random_hermitian(5, 2) + &CMatrix::identity(5).scale_re(3.0);
        let b = random_hermitian(5, 9);
        let x = a.solve(&b).unwrap();
        assert!((&(&a * &x) - &b).frobenius_norm() < 1e-12);
    }

    #[test]
    fn vectorize_round_trip() {
        let a = random_hermitian(3, 5);
        assert_eq!(CMatrix::unvectorize(&a.vectorize(), 3), a);
    }
}
