//! Dense matrices over a [`FieldSpec`], row-vector convention (`y = x H`).

use std::fmt;
use std::hash::{Hash, Hasher};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FieldSpec;

/// A dense row-major matrix whose entries are packed field-element indices.
#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl Hash for Mat {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rows.hash(state);
        self.cols.hash(state);
        self.data.hash(state);
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat{}x{}[", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Matrix literal used by config files: entries are field-element indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixLiteral {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<u32>>,
}

impl MatrixLiteral {
    pub fn build(&self, field: &FieldSpec) -> Result<Mat> {
        if self.data.len() != self.rows || self.data.iter().any(|r| r.len() != self.cols) {
            return Err(Error::shape(format!(
                "matrix literal declares {}x{} but data does not match",
                self.rows, self.cols
            )));
        }
        Mat::new(
            field.clone(),
            self.rows,
            self.cols,
            self.data.iter().flatten().copied().collect(),
        )
    }
}

impl From<&Mat> for MatrixLiteral {
    fn from(m: &Mat) -> Self {
        MatrixLiteral {
            rows: m.rows,
            cols: m.cols,
            data: (0..m.rows).map(|i| m.row(i).to_vec()).collect(),
        }
    }
}

/// Reduced row-echelon form together with rank and pivot columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Rref {
    pub rref: Mat,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

/// Outcome of a linear solve.
#[derive(Debug, Clone, PartialEq)]
pub enum Solution {
    Unique(Mat),
    Multiple,
    Inconsistent,
}

impl Mat {
    pub fn new(field: FieldSpec, rows: usize, cols: usize, data: Vec<u32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(&bad) = data.iter().find(|&&v| !field.contains(v)) {
            return Err(Error::InvalidField(format!(
                "entry {bad} is not an element of GF({})",
                field.q()
            )));
        }
        Ok(Mat {
            field,
            rows,
            cols,
            data,
        })
    }

    pub fn from_rows(field: &FieldSpec, rows: &[Vec<u32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("ragged rows"));
        }
        Mat::new(
            field.clone(),
            rows.len(),
            cols,
            rows.iter().flatten().copied().collect(),
        )
    }

    pub fn zeros(field: &FieldSpec, rows: usize, cols: usize) -> Self {
        Mat {
            field: field.clone(),
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: &FieldSpec, n: usize) -> Self {
        let mut m = Mat::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub(crate) fn from_raw(field: &FieldSpec, rows: usize, cols: usize, data: Vec<u32>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Mat {
            field: field.clone(),
            rows,
            cols,
            data,
        }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        debug_assert!(self.field.contains(v));
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<u32> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut data = vec![0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        Mat::from_raw(&self.field, self.cols, self.rows, data)
    }

    fn check_field(&self, other: &Mat) -> Result<()> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(Error::FieldMismatch)
        }
    }

    pub fn mul(&self, other: &Mat) -> Result<Mat> {
        self.check_field(other)?;
        if self.cols != other.rows {
            return Err(Error::shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let f = &self.field;
        let n = other.cols;
        let mut data = vec![0u32; self.rows * n];
        for i in 0..self.rows {
            let out = &mut data[i * n..(i + 1) * n];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let brow = other.row(l);
                if a == 1 {
                    for (o, &b) in out.iter_mut().zip(brow) {
                        *o = f.add(*o, b);
                    }
                } else {
                    for (o, &b) in out.iter_mut().zip(brow) {
                        *o = f.add(*o, f.mul(a, b));
                    }
                }
            }
        }
        Ok(Mat::from_raw(f, self.rows, n, data))
    }

    fn zip_with(&self, other: &Mat, op: impl Fn(u32, u32) -> u32) -> Result<Mat> {
        self.check_field(other)?;
        if self.shape() != other.shape() {
            return Err(Error::shape(format!(
                "shape mismatch {:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(Mat::from_raw(&self.field, self.rows, self.cols, data))
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        self.zip_with(other, |a, b| self.field.add(a, b))
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        self.zip_with(other, |a, b| self.field.sub(a, b))
    }

    pub fn scale(&self, c: u32) -> Mat {
        let data = self.data.iter().map(|&a| self.field.mul(c, a)).collect();
        Mat::from_raw(&self.field, self.rows, self.cols, data)
    }

    /// `[self | other]`.
    pub fn hstack(&self, other: &Mat) -> Result<Mat> {
        self.check_field(other)?;
        if self.rows != other.rows {
            return Err(Error::shape("hstack needs equal row counts"));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Mat::from_raw(&self.field, self.rows, cols, data))
    }

    /// `[self; other]`.
    pub fn vstack(&self, other: &Mat) -> Result<Mat> {
        self.check_field(other)?;
        if self.cols != other.cols {
            return Err(Error::shape("vstack needs equal column counts"));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Mat::from_raw(&self.field, self.rows + other.rows, self.cols, data))
    }

    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Mat {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for i in rows.clone() {
            data.extend_from_slice(&self.row(i)[cols.clone()]);
        }
        Mat::from_raw(&self.field, rows.len(), cols.len(), data)
    }

    pub fn select_columns(&self, cols: &[usize]) -> Mat {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            data.extend(cols.iter().map(|&j| self.get(i, j)));
        }
        Mat::from_raw(&self.field, self.rows, cols.len(), data)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Mat {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Mat::from_raw(&self.field, rows.len(), self.cols, data)
    }

    /// Reduced row-echelon form. Pivots are the first nonzero entry in the
    /// lowest unprocessed column, so the result is deterministic.
    pub fn rref(&self) -> Rref {
        let f = &self.field;
        let mut m = self.clone();
        let cols = m.cols;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| m.get(i, c) != 0) else {
                continue;
            };
            if p != r {
                for j in 0..cols {
                    m.data.swap(p * cols + j, r * cols + j);
                }
            }
            let inv = f.inv(m.get(r, c)).expect("pivot is nonzero");
            if inv != 1 {
                for j in c..cols {
                    let v = m.get(r, j);
                    m.set(r, j, f.mul(inv, v));
                }
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let factor = m.get(i, c);
                if factor == 0 {
                    continue;
                }
                for j in c..cols {
                    let v = f.sub(m.get(i, j), f.mul(factor, m.get(r, j)));
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        Rref {
            rref: m,
            rank: r,
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        if self.field.q() == 2 {
            return BitMatrix::from_mat(self).rank();
        }
        self.rref().rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.rows.min(self.cols)
    }

    pub fn inverse(&self) -> Result<Mat> {
        if self.rows != self.cols {
            return Err(Error::shape("inverse of a non-square matrix"));
        }
        let n = self.rows;
        let aug = self.hstack(&Mat::identity(&self.field, n))?;
        let red = aug.rref();
        if red.pivots.len() < n || red.pivots[n - 1] >= n {
            return Err(Error::NotFullRank);
        }
        Ok(red.rref.submatrix(0..n, n..2 * n))
    }
}

/// Block-diagonal matrix `diag(blocks...)`.
pub fn block_diag(blocks: &[Mat]) -> Result<Mat> {
    let field = blocks
        .first()
        .ok_or_else(|| Error::shape("block_diag of no blocks"))?
        .field()
        .clone();
    if blocks.iter().any(|b| *b.field() != field) {
        return Err(Error::FieldMismatch);
    }
    let rows: usize = blocks.iter().map(Mat::rows).sum();
    let cols: usize = blocks.iter().map(Mat::cols).sum();
    let mut out = Mat::zeros(&field, rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                out.set(r0 + i, c0 + j, b.get(i, j));
            }
        }
        r0 += b.rows();
        c0 += b.cols();
    }
    Ok(out)
}

/// `rref_rank` in tuple form.
pub fn rref_rank(m: &Mat) -> (Mat, usize, Vec<usize>) {
    let r = m.rref();
    (r.rref, r.rank, r.pivots)
}

/// Solves `x · a = y` (row-vector convention, `a` is r×c, `y` is k×c).
pub fn solve_left(a: &Mat, y: &Mat) -> Result<Solution> {
    a.check_field(y)?;
    if a.cols != y.cols {
        return Err(Error::shape(format!(
            "x·a = y needs a.cols == y.cols ({} vs {})",
            a.cols, y.cols
        )));
    }
    let sol = solve_right(&a.transpose(), &y.transpose())?;
    Ok(match sol {
        Solution::Unique(x) => Solution::Unique(x.transpose()),
        other => other,
    })
}

/// Solves `a · x = y` where each row of `a` and `y` is one stacked equation.
pub fn solve_linear(a: &Mat, y: &Mat) -> Result<Solution> {
    if a.rows != y.rows {
        return Err(Error::shape(format!(
            "stacked system needs a.rows == y.rows ({} vs {})",
            a.rows, y.rows
        )));
    }
    solve_right(a, y)
}

fn solve_right(a: &Mat, y: &Mat) -> Result<Solution> {
    a.check_field(y)?;
    if a.rows != y.rows {
        return Err(Error::shape("a.rows != y.rows"));
    }
    let n = a.cols;
    let red = a.hstack(y)?.rref();
    if red.pivots.iter().any(|&p| p >= n) {
        return Ok(Solution::Inconsistent);
    }
    if red.rank < n {
        return Ok(Solution::Multiple);
    }
    let x = red.rref.submatrix(0..n, n..n + y.cols);
    debug_assert_eq!(a.mul(&x).as_ref(), Ok(y));
    Ok(Solution::Unique(x))
}

/// The unique `C` with `a = b · C`, for `b` of full column rank.
pub fn quotient(a: &Mat, b: &Mat) -> Result<Mat> {
    a.check_field(b)?;
    if a.rows != b.rows {
        return Err(Error::shape("quotient needs equal row counts"));
    }
    if b.rank() < b.cols {
        return Err(Error::NotFullRank);
    }
    match solve_right(b, a)? {
        Solution::Unique(c) => Ok(c),
        Solution::Inconsistent => Err(Error::NotInSpan),
        Solution::Multiple => Err(Error::NotFullRank),
    }
}

/// `m = b · d` with `b` of full column rank and `d` of full row rank.
/// `d` is the nonzero part of the RREF of `m`, so it is canonical.
pub fn full_rank_decompose(m: &Mat) -> (Mat, Mat) {
    let red = m.rref();
    let d = red.rref.submatrix(0..red.rank, 0..m.cols);
    let b = m.select_columns(&red.pivots);
    (b, d)
}

/// Extends the columns of a full-column-rank `b` (t×r) to an invertible t×t
/// matrix by appending standard basis vectors.
fn complete_basis(b: &Mat) -> Mat {
    let t = b.rows;
    let mut cur = b.clone();
    for e in 0..t {
        if cur.cols == t {
            break;
        }
        let mut unit = Mat::zeros(&b.field, t, 1);
        unit.set(e, 0, 1);
        let cand = cur.hstack(&unit).expect("same rows");
        if cand.rank() == cand.cols {
            cur = cand;
        }
    }
    cur
}

/// An invertible `Φ` with `Φ · x = x2`, which exists exactly when the two
/// matrices have the same row space.
pub fn find_row_space_transform(x: &Mat, x2: &Mat) -> Result<Option<Mat>> {
    x.check_field(x2)?;
    if x.shape() != x2.shape() {
        return Err(Error::shape("find_row_space_transform needs equal shapes"));
    }
    let (b1, d1) = full_rank_decompose(x);
    let (b2, d2) = full_rank_decompose(x2);
    if d1 != d2 {
        return Ok(None);
    }
    let full1 = complete_basis(&b1);
    let full2 = complete_basis(&b2);
    let phi = full2.mul(&full1.inverse()?)?;
    debug_assert_eq!(phi.mul(x).as_ref(), Ok(x2));
    Ok(Some(phi))
}

/// A subspace of `F^t`, stored by its canonical RREF basis (rows).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    basis: Mat,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace(dim {} in F^{}: {:?})", self.dim(), self.ambient_dim(), self.basis)
    }
}

impl Subspace {
    /// Row space of `m`.
    pub fn row_space(m: &Mat) -> Subspace {
        let red = m.rref();
        Subspace {
            basis: red.rref.submatrix(0..red.rank, 0..m.cols),
        }
    }

    /// Column space of `m`, i.e. the row space of its transpose.
    pub fn column_space(m: &Mat) -> Subspace {
        Subspace::row_space(&m.transpose())
    }

    pub fn zero(field: &FieldSpec, t: usize) -> Subspace {
        Subspace {
            basis: Mat::zeros(field, 0, t),
        }
    }

    pub fn full(field: &FieldSpec, t: usize) -> Subspace {
        Subspace {
            basis: Mat::identity(field, t),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.cols
    }

    pub fn dim(&self) -> usize {
        self.basis.rows
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn field(&self) -> &FieldSpec {
        &self.basis.field
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        Ok(Subspace::row_space(&self.basis.vstack(&other.basis)?))
    }

    pub fn is_subspace_of(&self, other: &Subspace) -> bool {
        match self.sum(other) {
            Ok(s) => s.dim() == other.dim(),
            Err(_) => false,
        }
    }

    pub fn contains_vector(&self, v: &[u32]) -> bool {
        let m = Mat::from_raw(&self.basis.field, 1, v.len(), v.to_vec());
        Subspace::row_space(&m).is_subspace_of(self)
    }

    /// Image of the subspace under `v ↦ v · a` (row vectors).
    pub fn image(&self, a: &Mat) -> Result<Subspace> {
        Ok(Subspace::row_space(&self.basis.mul(a)?))
    }

    /// All `r`-dimensional subspaces of `F^t`, in a deterministic order
    /// (pivot sets lexicographically, then free entries).
    pub fn enumerate(field: &FieldSpec, t: usize, r: usize) -> Vec<Subspace> {
        let mut out = Vec::new();
        if r > t {
            return out;
        }
        let q = field.q() as u64;
        for pivots in combinations(t, r) {
            // Free positions: row i, column j > pivots[i], j not a pivot.
            let mut free = Vec::new();
            for (i, &p) in pivots.iter().enumerate() {
                for j in p + 1..t {
                    if !pivots.contains(&j) {
                        free.push((i, j));
                    }
                }
            }
            let total = q.pow(free.len() as u32);
            for mut code in 0..total {
                let mut m = Mat::zeros(field, r, t);
                for (i, &p) in pivots.iter().enumerate() {
                    m.set(i, p, 1);
                }
                for &(i, j) in &free {
                    m.set(i, j, (code % q) as u32);
                    code /= q;
                }
                out.push(Subspace { basis: m });
            }
        }
        out
    }

    /// All subspaces of `F^t` of every dimension up to `max_dim`.
    pub fn enumerate_up_to(field: &FieldSpec, t: usize, max_dim: usize) -> Vec<Subspace> {
        (0..=max_dim.min(t))
            .flat_map(|r| Subspace::enumerate(field, t, r))
            .collect()
    }
}

/// All size-`r` subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if r > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    loop {
        out.push(idx.clone());
        let mut i = r;
        while i > 0 && idx[i - 1] == n - r + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Every matrix in `F^{rows×cols}`, in index order. Guarded by `limit`.
pub fn all_matrices(field: &FieldSpec, rows: usize, cols: usize, limit: u64) -> Result<Vec<Mat>> {
    let q = field.q() as u64;
    let n = rows * cols;
    let total = q
        .checked_pow(n as u32)
        .filter(|&t| t <= limit)
        .ok_or_else(|| Error::TooLarge(format!("q^{n} matrices of shape {rows}x{cols}")))?;
    Ok((0..total).map(|i| matrix_from_index(field, rows, cols, i)).collect())
}

/// The matrix whose row-major entries are the base-q digits of `index`.
pub fn matrix_from_index(field: &FieldSpec, rows: usize, cols: usize, mut index: u64) -> Mat {
    let q = field.q() as u64;
    let data = (0..rows * cols)
        .map(|_| {
            let v = (index % q) as u32;
            index /= q;
            v
        })
        .collect();
    Mat::from_raw(field, rows, cols, data)
}

/// Inverse of [`matrix_from_index`].
pub fn matrix_index(m: &Mat) -> u64 {
    let q = m.field.q() as u64;
    m.data.iter().rev().fold(0u64, |acc, &v| acc * q + v as u64)
}

/// Sampling law for [`sample_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    PurelyRandom,
    FullRank,
    RankExact(usize),
}

pub fn random_element<R: Rng + ?Sized>(field: &FieldSpec, rng: &mut R) -> u32 {
    rng.gen_range(0..field.q())
}

fn random_data<R: Rng + ?Sized>(field: &FieldSpec, n: usize, rng: &mut R) -> Vec<u32> {
    if field.q() == 2 {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let word = rng.next_u64();
            let take = (n - out.len()).min(64);
            out.extend((0..take).map(|b| ((word >> b) & 1) as u32));
        }
        out
    } else {
        (0..n).map(|_| random_element(field, rng)).collect()
    }
}

/// Draws a matrix from the requested law. Full-rank matrices are drawn by
/// rejection (acceptance probability is at least 0.288); rank-`r` matrices
/// as `B · C` with `B`, `C` uniform full rank, which is uniform because each
/// rank-`r` matrix has exactly `|GL(r)|` such factorizations.
pub fn sample_matrix<R: Rng + ?Sized>(
    field: &FieldSpec,
    rows: usize,
    cols: usize,
    kind: MatrixKind,
    rng: &mut R,
) -> Result<Mat> {
    match kind {
        MatrixKind::PurelyRandom => Ok(Mat::from_raw(
            field,
            rows,
            cols,
            random_data(field, rows * cols, rng),
        )),
        MatrixKind::FullRank => loop {
            let m = Mat::from_raw(field, rows, cols, random_data(field, rows * cols, rng));
            if m.is_full_rank() {
                return Ok(m);
            }
        },
        MatrixKind::RankExact(r) => {
            if r > rows.min(cols) {
                return Err(Error::Rank { rank: r, rows, cols });
            }
            if r == 0 {
                return Ok(Mat::zeros(field, rows, cols));
            }
            let b = sample_matrix(field, rows, r, MatrixKind::FullRank, rng)?;
            let c = sample_matrix(field, r, cols, MatrixKind::FullRank, rng)?;
            b.mul(&c)
        }
    }
}

/// GF(2) matrix with rows packed into 64-bit words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(64).max(1);
        BitMatrix {
            rows,
            cols,
            words,
            bits: vec![0; rows * words],
        }
    }

    pub fn from_mat(m: &Mat) -> Self {
        debug_assert_eq!(m.field.q(), 2);
        let mut b = BitMatrix::zeros(m.rows, m.cols);
        for i in 0..m.rows {
            for j in 0..m.cols {
                if m.get(i, j) != 0 {
                    b.set(i, j, true);
                }
            }
        }
        b
    }

    pub fn to_mat(&self, field: &FieldSpec) -> Mat {
        let data = (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| self.get(i, j) as u32))
            .collect();
        Mat::from_raw(field, self.rows, self.cols, data)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.bits[i * self.words + j / 64] >> (j % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let w = &mut self.bits[i * self.words + j / 64];
        if v {
            *w |= 1 << (j % 64);
        } else {
            *w &= !(1 << (j % 64));
        }
    }

    pub fn rank(&self) -> usize {
        let mut m = self.bits.clone();
        let w = self.words;
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let (word, bit) = (c / 64, 1u64 << (c % 64));
            let Some(p) = (r..self.rows).find(|&i| m[i * w + word] & bit != 0) else {
                continue;
            };
            if p != r {
                for k in 0..w {
                    m.swap(p * w + k, r * w + k);
                }
            }
            for i in r + 1..self.rows {
                if m[i * w + word] & bit != 0 {
                    for k in word..w {
                        m[i * w + k] ^= m[r * w + k];
                    }
                }
            }
            r += 1;
        }
        r
    }
}

/// Result of inserting one equation into an [`IncrementalBasis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Insert {
    /// The coefficient vector was independent; rank grew by one.
    Independent,
    /// Dependent and consistent with earlier equations.
    Redundant,
    /// Dependent, but the payload contradicts earlier equations.
    Inconsistent,
}

enum Rows {
    Packed { words: usize, rows: Vec<Vec<u64>> },
    Generic(Vec<Vec<u32>>),
}

/// Online Gaussian elimination over equations `<v, x> = w`, where `v` has
/// length `dim` and the payload `w` has length `payload`. The unknown `x`
/// stacks one column per payload coordinate. Rows are kept fully reduced,
/// so once the rank reaches `dim` the solution is read off directly.
pub struct IncrementalBasis {
    field: FieldSpec,
    dim: usize,
    payload: usize,
    pivots: Vec<usize>,
    rows: Rows,
}

impl IncrementalBasis {
    pub fn new(field: &FieldSpec, dim: usize, payload: usize) -> Self {
        let rows = if field.q() == 2 {
            Rows::Packed {
                words: (dim + payload).div_ceil(64).max(1),
                rows: Vec::new(),
            }
        } else {
            Rows::Generic(Vec::new())
        };
        IncrementalBasis {
            field: field.clone(),
            dim,
            payload,
            pivots: Vec::new(),
            rows,
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_complete(&self) -> bool {
        self.rank() == self.dim
    }

    pub fn insert(&mut self, v: &[u32], w: &[u32]) -> Result<Insert> {
        if v.len() != self.dim || w.len() != self.payload {
            return Err(Error::shape("equation length does not match the basis"));
        }
        let f = &self.field;
        let dim = self.dim;
        match &mut self.rows {
            Rows::Packed { words, rows } => {
                let mut row = vec![0u64; *words];
                for (j, &x) in v.iter().chain(w).enumerate() {
                    if x & 1 == 1 {
                        row[j / 64] |= 1 << (j % 64);
                    }
                }
                for (existing, &p) in rows.iter().zip(&self.pivots) {
                    if (row[p / 64] >> (p % 64)) & 1 == 1 {
                        for (a, b) in row.iter_mut().zip(existing) {
                            *a ^= b;
                        }
                    }
                }
                let pivot = (0..dim).find(|&j| (row[j / 64] >> (j % 64)) & 1 == 1);
                let Some(p) = pivot else {
                    let nonzero = (dim..dim + self.payload).any(|j| (row[j / 64] >> (j % 64)) & 1 == 1);
                    return Ok(if nonzero { Insert::Inconsistent } else { Insert::Redundant });
                };
                for existing in rows.iter_mut() {
                    if (existing[p / 64] >> (p % 64)) & 1 == 1 {
                        for (a, b) in existing.iter_mut().zip(&row) {
                            *a ^= b;
                        }
                    }
                }
                rows.push(row);
                self.pivots.push(p);
            }
            Rows::Generic(rows) => {
                let mut row: Vec<u32> = v.iter().chain(w).copied().collect();
                for (existing, &p) in rows.iter().zip(&self.pivots) {
                    let c = row[p];
                    if c != 0 {
                        for (a, &b) in row.iter_mut().zip(existing) {
                            *a = f.sub(*a, f.mul(c, b));
                        }
                    }
                }
                let Some(p) = (0..dim).find(|&j| row[j] != 0) else {
                    let nonzero = row[dim..].iter().any(|&x| x != 0);
                    return Ok(if nonzero { Insert::Inconsistent } else { Insert::Redundant });
                };
                let inv = f.inv(row[p])?;
                for a in row.iter_mut() {
                    *a = f.mul(inv, *a);
                }
                for existing in rows.iter_mut() {
                    let c = existing[p];
                    if c != 0 {
                        for (a, &b) in existing.iter_mut().zip(&row) {
                            *a = f.sub(*a, f.mul(c, b));
                        }
                    }
                }
                rows.push(row);
                self.pivots.push(p);
            }
        }
        Ok(Insert::Independent)
    }

    /// The unique `x` (dim × payload) once the rank equals `dim`.
    pub fn solution(&self) -> Option<Mat> {
        if !self.is_complete() {
            return None;
        }
        let mut x = Mat::zeros(&self.field, self.dim, self.payload);
        match &self.rows {
            Rows::Packed { rows, .. } => {
                for (row, &p) in rows.iter().zip(&self.pivots) {
                    for j in 0..self.payload {
                        let b = self.dim + j;
                        x.set(p, j, ((row[b / 64] >> (b % 64)) & 1) as u32);
                    }
                }
            }
            Rows::Generic(rows) => {
                for (row, &p) in rows.iter().zip(&self.pivots) {
                    for j in 0..self.payload {
                        x.set(p, j, row[self.dim + j]);
                    }
                }
            }
        }
        Some(x)
    }
}

/// Serialized as a list of rows of element indices.
impl Serialize for Mat {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}
