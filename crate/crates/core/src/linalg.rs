//! Dense matrices over a [`Field`] with elimination based rank, kernel,
//! solve and inverse.
//!
//! Pivoting is deterministic. Exact fields take the first nonzero entry of a
//! column (lowest row index); float fields take the entry of largest modulus,
//! ties resolved towards the lowest row index, and treat entries below
//! `tol * max|a_ij|` as zero.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::scalar::{max_modulus, Field};

/// Default relative rank tolerance for float fields.
pub const DEFAULT_TAU_RANK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<K> {
    rows: usize,
    cols: usize,
    data: Vec<K>,
}

impl<K: Field> Matrix<K> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![K::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = K::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<K>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row.iter().cloned());
        }
        Matrix { rows: r, cols: c, data }
    }

    /// Builds a `rows x cols.len()` matrix from column vectors.
    pub fn from_cols(rows: usize, cols: &[Vec<K>]) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length mismatch");
            for (i, x) in col.iter().enumerate() {
                m[(i, j)] = x.clone();
            }
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> K) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> Vec<K> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn col(&self, j: usize) -> Vec<K> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<K>> {
        (0..self.cols).map(|j| self.col(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Field::is_zero)
    }

    pub fn max_modulus(&self) -> f64 {
        max_modulus(&self.data)
    }

    pub fn entries(&self) -> &[K] {
        &self.data
    }

    pub fn mul(&self, other: &Matrix<K>) -> Matrix<K> {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = &self[(i, l)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(l, j)];
                    if b.is_zero() {
                        continue;
                    }
                    out[(i, j)] = out[(i, j)].clone() + a.clone() * b.clone();
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[K]) -> Vec<K> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| {
                let mut s = K::zero();
                for (j, x) in v.iter().enumerate() {
                    let a = &self[(i, j)];
                    if !a.is_zero() && !x.is_zero() {
                        s = s + a.clone() * x.clone();
                    }
                }
                s
            })
            .collect()
    }

    pub fn add(&self, other: &Matrix<K>) -> Matrix<K> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix<K>) -> Matrix<K> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a.clone() - b.clone()).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: &K) -> Matrix<K> {
        let data = self.data.iter().map(|a| a.clone() * s.clone()).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn map<E: Field>(&self, f: impl Fn(&K) -> E) -> Matrix<E> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    /// Horizontal concatenation.
    pub fn hcat(&self, other: &Matrix<K>) -> Matrix<K> {
        assert_eq!(self.rows, other.rows);
        Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                other[(i, j - self.cols)].clone()
            }
        })
    }

    pub fn select_cols(&self, idx: &[usize]) -> Matrix<K> {
        Self::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])].clone())
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix<K> {
        Self::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)].clone())
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix<K> {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    pub fn to_approx(&self) -> Matrix<K::Approx> {
        self.map(Field::approx)
    }
}

impl<K> Index<(usize, usize)> for Matrix<K> {
    type Output = K;
    fn index(&self, (i, j): (usize, usize)) -> &K {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<K> IndexMut<(usize, usize)> for Matrix<K> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut K {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Reduced row echelon form with pivot bookkeeping.
#[derive(Clone, Debug)]
pub struct Rref<K> {
    pub reduced: Matrix<K>,
    pub pivots: Vec<usize>,
    /// Smallest accepted pivot relative to the matrix scale (float fields).
    pub smallest_pivot: Option<f64>,
    /// Largest rejected candidate relative to the matrix scale (float fields).
    pub largest_rejected: Option<f64>,
}

impl<K> Rref<K> {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

fn pick_pivot<K: Field>(m: &Matrix<K>, col: usize, from: usize, thresh: f64) -> (Option<usize>, f64) {
    if K::EXACT {
        return ((from..m.rows()).find(|&i| !m[(i, col)].is_zero()), 0.0);
    }
    let mut best: Option<(usize, f64)> = None;
    for i in from..m.rows() {
        let a = m[(i, col)].modulus();
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    match best {
        Some((i, a)) if a > thresh => (Some(i), a),
        Some((_, a)) => (None, a),
        None => (None, 0.0),
    }
}

/// Row reduces `a`; entries below `tol * max|a|` count as zero for floats.
pub fn rref<K: Field>(a: &Matrix<K>, tol: f64) -> Rref<K> {
    let mut m = a.clone();
    let scale = a.max_modulus();
    let thresh = tol * scale;
    let mut pivots = Vec::new();
    let mut smallest: Option<f64> = None;
    let mut rejected: Option<f64> = None;
    let mut r = 0;
    for c in 0..m.cols() {
        if r == m.rows() {
            break;
        }
        let (p, mag) = pick_pivot(&m, c, r, thresh);
        let Some(p) = p else {
            if !K::EXACT && scale > 0.0 {
                let rel = mag / scale;
                rejected = Some(rejected.map_or(rel, |x: f64| x.max(rel)));
            }
            for i in r..m.rows() {
                m[(i, c)] = K::zero();
            }
            continue;
        };
        if !K::EXACT && scale > 0.0 {
            let rel = mag / scale;
            smallest = Some(smallest.map_or(rel, |x: f64| x.min(rel)));
        }
        if p != r {
            for j in 0..m.cols() {
                let t = m[(p, j)].clone();
                m[(p, j)] = m[(r, j)].clone();
                m[(r, j)] = t;
            }
        }
        let inv = K::one() / m[(r, c)].clone();
        for j in c..m.cols() {
            m[(r, j)] = m[(r, j)].clone() * inv.clone();
        }
        m[(r, c)] = K::one();
        for i in 0..m.rows() {
            if i == r {
                continue;
            }
            let f = m[(i, c)].clone();
            if f.is_zero() {
                continue;
            }
            for j in c..m.cols() {
                let v = m[(r, j)].clone();
                if !v.is_zero() {
                    m[(i, j)] = m[(i, j)].clone() - f.clone() * v;
                }
            }
            m[(i, c)] = K::zero();
        }
        pivots.push(c);
        r += 1;
    }
    Rref { reduced: m, pivots, smallest_pivot: smallest, largest_rejected: rejected }
}

pub fn rank<K: Field>(a: &Matrix<K>, tol: f64) -> usize {
    rref(a, tol).rank()
}

/// Basis of the null space, one vector per free column in increasing order.
pub fn kernel<K: Field>(a: &Matrix<K>, tol: f64) -> Vec<Vec<K>> {
    let r = rref(a, tol);
    let n = a.cols();
    let mut is_pivot = vec![false; n];
    for &p in &r.pivots {
        is_pivot[p] = true;
    }
    let mut basis = Vec::new();
    for free in (0..n).filter(|&j| !is_pivot[j]) {
        let mut v = vec![K::zero(); n];
        v[free] = K::one();
        for (row, &p) in r.pivots.iter().enumerate() {
            v[p] = -r.reduced[(row, free)].clone();
        }
        basis.push(v);
    }
    basis
}

/// Unique solution of `a x = b`, or `None` when `a` has deficient column rank
/// or the system is inconsistent.
pub fn solve<K: Field>(a: &Matrix<K>, b: &[K], tol: f64) -> Option<Vec<K>> {
    assert_eq!(a.rows(), b.len(), "solve dimension mismatch");
    let bm = Matrix::from_cols(b.len(), &[b.to_vec()]);
    let x = solve_many(a, &bm, tol)?;
    Some(x.col(0))
}

/// Unique solution of `a X = B` for several right-hand sides.
pub fn solve_many<K: Field>(a: &Matrix<K>, b: &Matrix<K>, tol: f64) -> Option<Matrix<K>> {
    assert_eq!(a.rows(), b.rows(), "solve dimension mismatch");
    let n = a.cols();
    // Decide the rank on `a` alone so the right-hand side cannot mask a
    // deficient pivot through scaling.
    let ra = rref(a, tol);
    if ra.rank() < n {
        return None;
    }
    let aug = a.hcat(b);
    let mut m = aug;
    let scale = a.max_modulus();
    let thresh = tol * scale;
    let mut r = 0;
    for c in 0..n {
        let (p, _) = pick_pivot(&m, c, r, thresh);
        let p = p?;
        if p != r {
            for j in 0..m.cols() {
                let t = m[(p, j)].clone();
                m[(p, j)] = m[(r, j)].clone();
                m[(r, j)] = t;
            }
        }
        let inv = K::one() / m[(r, c)].clone();
        for j in c..m.cols() {
            m[(r, j)] = m[(r, j)].clone() * inv.clone();
        }
        for i in 0..m.rows() {
            if i == r {
                continue;
            }
            let f = m[(i, c)].clone();
            if f.is_zero() {
                continue;
            }
            for j in c..m.cols() {
                let v = m[(r, j)].clone();
                if !v.is_zero() {
                    m[(i, j)] = m[(i, j)].clone() - f.clone() * v;
                }
            }
        }
        r += 1;
    }
    let bscale = b.max_modulus().max(scale);
    for i in n..m.rows() {
        for j in n..m.cols() {
            if !m[(i, j)].negligible(bscale, tol.max(1e-12) * 1e3) {
                return None;
            }
        }
    }
    Some(m.block(0, n, n, b.cols()))
}

pub fn inverse<K: Field>(a: &Matrix<K>, tol: f64) -> Option<Matrix<K>> {
    if a.rows() != a.cols() {
        return None;
    }
    solve_many(a, &Matrix::identity(a.rows()), tol)
}

/// Determinant by elimination.
pub fn det<K: Field>(a: &Matrix<K>) -> K {
    assert_eq!(a.rows(), a.cols(), "determinant of a non-square matrix");
    let n = a.rows();
    let mut m = a.clone();
    let mut d = K::one();
    for c in 0..n {
        let (p, _) = pick_pivot(&m, c, c, 0.0);
        let Some(p) = p else {
            return K::zero();
        };
        if p != c {
            for j in 0..n {
                let t = m[(p, j)].clone();
                m[(p, j)] = m[(c, j)].clone();
                m[(c, j)] = t;
            }
            d = -d;
        }
        let piv = m[(c, c)].clone();
        d = d * piv.clone();
        for i in c + 1..n {
            let f = m[(i, c)].clone() / piv.clone();
            if f.is_zero() {
                continue;
            }
            for j in c..n {
                m[(i, j)] = m[(i, j)].clone() - f.clone() * m[(c, j)].clone();
            }
        }
    }
    d
}

/// Incrementally grown echelon basis used for greedy independence tests.
#[derive(Clone, Debug)]
pub struct Echelon<K> {
    dim: usize,
    rows: Vec<(usize, Vec<K>)>,
    tol: f64,
}

impl<K: Field> Echelon<K> {
    pub fn new(dim: usize, tol: f64) -> Self {
        Echelon { dim, rows: Vec::new(), tol }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Reduces `v` against the stored rows.
    pub fn reduce(&self, v: &[K]) -> Vec<K> {
        let mut w = v.to_vec();
        for (p, row) in &self.rows {
            let f = w[*p].clone();
            if f.is_zero() {
                continue;
            }
            for (x, r) in w.iter_mut().zip(row) {
                if !r.is_zero() {
                    *x = x.clone() - f.clone() * r.clone();
                }
            }
        }
        w
    }

    /// Inserts `v` if it is independent of the stored rows; returns whether
    /// it was accepted.
    pub fn insert(&mut self, v: &[K]) -> bool {
        let scale = max_modulus(v);
        let w = self.reduce(v);
        let Some(p) = leading_index(&w, scale, self.tol) else {
            return false;
        };
        let inv = K::one() / w[p].clone();
        let mut w: Vec<K> = w.into_iter().map(|x| x * inv.clone()).collect();
        for x in w.iter_mut() {
            if !K::EXACT && x.modulus() <= self.tol * 1e-3 {
                *x = K::zero();
            }
        }
        w[p] = K::one();
        self.rows.push((p, w));
        true
    }
}

/// Pivot position of a vector: the first nonzero entry for exact fields, the
/// largest non-negligible entry for float fields.
pub fn leading_index<K: Field>(v: &[K], scale: f64, tol: f64) -> Option<usize> {
    if K::EXACT {
        return v.iter().position(|x| !x.is_zero());
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, x) in v.iter().enumerate() {
        let a = x.modulus();
        if a > tol * scale && best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    best.map(|(i, _)| i)
}
