//! Truncated power series in one variable with scalar, vector and matrix
//! coefficients.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, DEFAULT_TAU_RANK};
use crate::poly::{Poly, PolyMap};
use crate::scalar::{max_modulus, Field};

/// Result of a valuation query on a truncated series.
#[derive(Clone, Debug, PartialEq)]
pub enum Valuation<V> {
    /// First nonzero coefficient sits at `order`.
    At { order: usize, leading: V },
    /// All stored coefficients vanish; the valuation is at least this value.
    AtLeast(usize),
}

impl<V> Valuation<V> {
    pub fn order(&self) -> Option<usize> {
        match self {
            Valuation::At { order, .. } => Some(*order),
            Valuation::AtLeast(_) => None,
        }
    }

    /// Lower bound on the valuation: the order itself or the `AtLeast` value.
    pub fn lower_bound(&self) -> usize {
        match self {
            Valuation::At { order, .. } => *order,
            Valuation::AtLeast(t) => *t,
        }
    }
}

/// Product of two scalar series truncated at order `t`.
pub fn scalar_mul<K: Field>(a: &[K], b: &[K], t: usize) -> Vec<K> {
    let mut out = vec![K::zero(); t + 1];
    for (i, x) in a.iter().enumerate().take(t + 1) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(t + 1 - i) {
            if !y.is_zero() {
                out[i + j] = out[i + j].clone() + x.clone() * y.clone();
            }
        }
    }
    out
}

/// Valuation of a scalar series.
pub fn scalar_valuation<K: Field>(a: &[K], tol: f64) -> Valuation<K> {
    let scale = max_modulus(a);
    match a.iter().position(|x| !x.negligible(scale, tol)) {
        Some(order) => Valuation::At { order, leading: a[order].clone() },
        None => Valuation::AtLeast(a.len()),
    }
}

/// Horner evaluation of a scalar series.
pub fn scalar_eval<K: Field>(a: &[K], x: &K) -> K {
    let mut acc = K::zero();
    for c in a.iter().rev() {
        acc = acc * x.clone() + c.clone();
    }
    acc
}

/// Truncated series with vector coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct VecSeries<K> {
    dim: usize,
    coeffs: Vec<Vec<K>>,
}

impl<K: Field> VecSeries<K> {
    pub fn new(dim: usize, coeffs: Vec<Vec<K>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        for c in &coeffs {
            if c.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.len() });
            }
        }
        Ok(VecSeries { dim, coeffs })
    }

    pub fn zeros(dim: usize, t: usize) -> Self {
        VecSeries { dim, coeffs: vec![vec![K::zero(); dim]; t + 1] }
    }

    /// Series of a polynomial vector in one variable.
    pub fn from_scalar_series(series: &[Vec<K>], t: usize) -> Self {
        let dim = series.len();
        let mut out = Self::zeros(dim, t);
        for (r, s) in series.iter().enumerate() {
            for (j, c) in s.iter().enumerate().take(t + 1) {
                out.coeffs[j][r] = c.clone();
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Truncation order `T`; coefficients `0..=T` are stored.
    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Vec<K>] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> Vec<K> {
        self.coeffs.get(j).cloned().unwrap_or_else(|| vec![K::zero(); self.dim])
    }

    pub fn coeff_mut(&mut self, j: usize) -> &mut Vec<K> {
        &mut self.coeffs[j]
    }

    /// Component `r` as a scalar series.
    pub fn component(&self, r: usize) -> Vec<K> {
        self.coeffs.iter().map(|c| c[r].clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(Field::is_zero))
    }

    pub fn max_modulus(&self) -> f64 {
        self.coeffs.iter().map(|c| max_modulus(c)).fold(0.0, f64::max)
    }

    pub fn valuation(&self, tol: f64) -> Valuation<Vec<K>> {
        let scale = self.max_modulus();
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.iter().any(|x| !x.negligible(scale, tol)) {
                return Valuation::At { order: j, leading: c.clone() };
            }
        }
        Valuation::AtLeast(self.coeffs.len())
    }

    pub fn eval(&self, x: &K) -> Vec<K> {
        let mut acc = vec![K::zero(); self.dim];
        for c in self.coeffs.iter().rev() {
            for (a, ci) in acc.iter_mut().zip(c) {
                *a = a.clone() * x.clone() + ci.clone();
            }
        }
        acc
    }

    pub fn truncate(&self, t: usize) -> Self {
        let mut out = Self::zeros(self.dim, t);
        for (j, c) in self.coeffs.iter().enumerate().take(t + 1) {
            out.coeffs[j] = c.clone();
        }
        out
    }

    /// Drops the first `q` coefficients (division by `eps^q`).
    pub fn shift_down(&self, q: usize) -> Self {
        let coeffs: Vec<Vec<K>> = self.coeffs.iter().skip(q).cloned().collect();
        if coeffs.is_empty() {
            return Self::zeros(self.dim, 0);
        }
        VecSeries { dim: self.dim, coeffs }
    }

    pub fn scale(&self, s: &K) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c.iter().map(|x| x.clone() * s.clone()).collect()).collect();
        VecSeries { dim: self.dim, coeffs }
    }

    /// Sum truncated at the smaller truncation order.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let t = self.truncation().min(other.truncation());
        let coeffs = (0..=t)
            .map(|j| self.coeffs[j].iter().zip(&other.coeffs[j]).map(|(a, b)| a.clone() + b.clone()).collect())
            .collect();
        VecSeries { dim: self.dim, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-K::one()))
    }

    /// Formal derivative in the series variable.
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zeros(self.dim, 0);
        }
        let coeffs = (1..self.coeffs.len())
            .map(|j| self.coeffs[j].iter().map(|x| x.clone() * K::from_i64(j as i64)).collect())
            .collect();
        VecSeries { dim: self.dim, coeffs }
    }

    pub fn map<E: Field>(&self, f: impl Fn(&K) -> E) -> VecSeries<E> {
        VecSeries { dim: self.dim, coeffs: self.coeffs.iter().map(|c| c.iter().map(&f).collect()).collect() }
    }

    pub fn to_approx(&self) -> VecSeries<K::Approx> {
        self.map(Field::approx)
    }

    /// Components as polynomials in the single variable at index `var` of
    /// `nvars` variables.
    pub fn to_polys(&self, nvars: usize, var: usize) -> Vec<Poly<K>> {
        (0..self.dim)
            .map(|r| {
                let mut p = Poly::zero(nvars);
                for (j, c) in self.coeffs.iter().enumerate() {
                    let mut e = vec![0; nvars];
                    e[var] = j as u32;
                    p.add_term(e, c[r].clone());
                }
                p
            })
            .collect()
    }
}

/// Truncated series with matrix coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MatSeries<K> {
    rows: usize,
    cols: usize,
    coeffs: Vec<Matrix<K>>,
}

impl<K: Field> MatSeries<K> {
    pub fn new(rows: usize, cols: usize, coeffs: Vec<Matrix<K>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        for c in &coeffs {
            if c.rows() != rows {
                return Err(Error::DimensionMismatch { expected: rows, found: c.rows() });
            }
            if c.cols() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: c.cols() });
            }
        }
        Ok(MatSeries { rows, cols, coeffs })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Matrix<K>] {
        &self.coeffs
    }

    /// Coefficient `j`, zero beyond the truncation.
    pub fn coeff(&self, j: usize) -> Matrix<K> {
        self.coeffs.get(j).cloned().unwrap_or_else(|| Matrix::zeros(self.rows, self.cols))
    }

    pub fn max_modulus(&self) -> f64 {
        self.coeffs.iter().map(Matrix::max_modulus).fold(0.0, f64::max)
    }

    pub fn valuation(&self, tol: f64) -> Valuation<Matrix<K>> {
        let scale = self.max_modulus();
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.entries().iter().any(|x| !x.negligible(scale, tol)) {
                return Valuation::At { order: j, leading: c.clone() };
            }
        }
        Valuation::AtLeast(self.coeffs.len())
    }

    pub fn eval(&self, x: &K) -> Matrix<K> {
        let mut acc = Matrix::zeros(self.rows, self.cols);
        for c in self.coeffs.iter().rev() {
            acc = acc.scale(x).add(c);
        }
        acc
    }

    pub fn truncate(&self, t: usize) -> Self {
        let coeffs = (0..=t).map(|j| self.coeff(j)).collect();
        MatSeries { rows: self.rows, cols: self.cols, coeffs }
    }

    pub fn scale(&self, s: &K) -> Self {
        MatSeries { rows: self.rows, cols: self.cols, coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect() }
    }

    /// `L(eps) v(eps)` truncated at the smaller truncation order.
    pub fn mul_vec_series(&self, v: &VecSeries<K>) -> VecSeries<K> {
        assert_eq!(self.cols, v.dim());
        let t = self.truncation().min(v.truncation());
        let mut out: VecSeries<K> = VecSeries::zeros(self.rows, t);
        for (i, m) in self.coeffs.iter().enumerate().take(t + 1) {
            if m.is_zero() {
                continue;
            }
            for j in 0..=(t - i) {
                let c = &v.coeffs()[j];
                if c.iter().all(Field::is_zero) {
                    continue;
                }
                let p = m.mul_vec(c);
                let slot = out.coeff_mut(i + j);
                for (a, b) in slot.iter_mut().zip(p) {
                    *a = a.clone() + b;
                }
            }
        }
        out
    }

    /// `L(eps) P(eps)` for a matrix series `P`, truncated.
    pub fn mul(&self, other: &MatSeries<K>) -> MatSeries<K> {
        assert_eq!(self.cols, other.rows);
        let t = self.truncation().min(other.truncation());
        let mut coeffs = vec![Matrix::zeros(self.rows, other.cols); t + 1];
        for i in 0..=t {
            for j in 0..=(t - i) {
                if self.coeffs[i].is_zero() || other.coeffs[j].is_zero() {
                    continue;
                }
                coeffs[i + j] = coeffs[i + j].add(&self.coeffs[i].mul(&other.coeffs[j]));
            }
        }
        MatSeries { rows: self.rows, cols: other.cols, coeffs }
    }

    /// Columns selected from every coefficient.
    pub fn select_cols(&self, idx: &[usize]) -> Self {
        MatSeries {
            rows: self.rows,
            cols: idx.len(),
            coeffs: self.coeffs.iter().map(|c| c.select_cols(idx)).collect(),
        }
    }

    /// `L(eps) B` for a constant matrix `B`.
    pub fn mul_const(&self, b: &Matrix<K>) -> Self {
        MatSeries { rows: self.rows, cols: b.cols(), coeffs: self.coeffs.iter().map(|c| c.mul(b)).collect() }
    }

    /// Entry `(i, j)` as a scalar series.
    pub fn entry(&self, i: usize, j: usize) -> Vec<K> {
        self.coeffs.iter().map(|c| c[(i, j)].clone()).collect()
    }

    pub fn to_approx(&self) -> MatSeries<K::Approx> {
        MatSeries { rows: self.rows, cols: self.cols, coeffs: self.coeffs.iter().map(Matrix::to_approx).collect() }
    }
}

/// A truncated curve `z(eps)` with `z(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveSeries<K>(VecSeries<K>);

impl<K: Field> CurveSeries<K> {
    pub fn new(series: VecSeries<K>) -> Result<Self> {
        if series.coeffs()[0].iter().any(|x| !x.negligible(1.0, DEFAULT_TAU_RANK * 1e-3)) {
            return Err(Error::CurveNotCentered);
        }
        let mut s = series;
        s.coeff_mut(0).iter_mut().for_each(|x| *x = K::zero());
        Ok(CurveSeries(s))
    }

    pub fn from_coeffs(dim: usize, coeffs: Vec<Vec<K>>) -> Result<Self> {
        Self::new(VecSeries::new(dim, coeffs)?)
    }

    pub fn series(&self) -> &VecSeries<K> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn truncation(&self) -> usize {
        self.0.truncation()
    }

    /// Index of the first nonzero coefficient.
    pub fn leading_index(&self) -> Option<usize> {
        self.0.coeffs().iter().position(|c| c.iter().any(|x| !x.is_zero()))
    }

    pub fn leading_coeff(&self) -> Option<Vec<K>> {
        self.leading_index().map(|l| self.0.coeff(l))
    }

    pub fn eval(&self, x: &K) -> Vec<K> {
        self.0.eval(x)
    }

    /// Components as polynomials in variable `var` of `nvars`.
    pub fn to_polys(&self, nvars: usize, var: usize) -> Vec<Poly<K>> {
        self.0.to_polys(nvars, var)
    }

    pub fn to_approx(&self) -> CurveSeries<K::Approx> {
        CurveSeries(self.0.to_approx())
    }

    /// Highest order through which `G[z]` (for a map whose non-constant
    /// monomials have degree at least `d1`) is determined by the stored
    /// coefficients.
    pub fn determined_through(&self, d1: Option<u32>) -> usize {
        let Some(d1) = d1 else {
            return usize::MAX;
        };
        let t = self.truncation();
        let l = self.leading_index().unwrap_or(t + 1);
        t.saturating_add((d1.saturating_sub(1) as usize).saturating_mul(l))
    }
}

/// Scalar series of each polynomial evaluated along `arg`, truncated at `t`.
pub fn compose_polys<K: Field>(polys: &[Poly<K>], arg: &VecSeries<K>, t: usize) -> Vec<Vec<K>> {
    let nv = arg.dim();
    let comps: Vec<Vec<K>> = (0..nv).map(|i| arg.component(i)).collect();
    let mut cache: Vec<Vec<Vec<K>>> = (0..nv).map(|_| Vec::new()).collect();
    let mut out = Vec::with_capacity(polys.len());
    for p in polys {
        assert_eq!(p.nvars(), nv, "composition arity mismatch");
        let mut acc = vec![K::zero(); t + 1];
        for (e, c) in p.terms() {
            let mut term = vec![K::zero(); t + 1];
            term[0] = c.clone();
            for (i, &a) in e.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let pw = &mut cache[i];
                if pw.is_empty() {
                    let mut one = vec![K::zero(); t + 1];
                    one[0] = K::one();
                    pw.push(one);
                }
                while pw.len() <= a as usize {
                    let next = scalar_mul(&pw[pw.len() - 1], &comps[i], t);
                    pw.push(next);
                }
                term = scalar_mul(&term, &pw[a as usize], t);
            }
            for (x, y) in acc.iter_mut().zip(term) {
                *x = x.clone() + y;
            }
        }
        out.push(acc);
    }
    out
}

/// Composition of a polynomial map with a vector series, without any
/// determinacy check.
pub fn compose_series<K: Field>(g: &PolyMap<K>, arg: &VecSeries<K>, t: usize) -> VecSeries<K> {
    let comps = compose_polys(g.components(), arg, t);
    VecSeries::from_scalar_series(&comps, t)
}

/// Taylor coefficients of `G[z(eps)]` through `eps^t`.
pub fn compose_map_with_curve<K: Field>(g: &PolyMap<K>, z: &CurveSeries<K>, t: usize) -> Result<VecSeries<K>> {
    if z.dim() != g.n_in() {
        return Err(Error::DimensionMismatch { expected: g.n_in(), found: z.dim() });
    }
    let determined = z.determined_through(g.min_nonconstant_degree());
    if t > determined {
        return Err(Error::InsufficientTruncation { requested: t, determined });
    }
    Ok(compose_series(g, z.series(), t))
}

/// Highest truncation for which [`linearize_along_curve`] is determined.
pub fn linearization_determined_through<K: Field>(g: &PolyMap<K>, z: &CurveSeries<K>) -> usize {
    let d1 = g.jacobian_polys().iter().flatten().filter_map(Poly::min_nonconstant_degree).min();
    z.determined_through(d1)
}

/// Highest truncation for which [`compose_map_with_curve`] is determined.
pub fn composition_determined_through<K: Field>(g: &PolyMap<K>, z: &CurveSeries<K>) -> usize {
    z.determined_through(g.min_nonconstant_degree())
}

/// Coefficients of `L(eps) = G'[z(eps)]` through `eps^t`.
pub fn linearize_along_curve<K: Field>(g: &PolyMap<K>, z: &CurveSeries<K>, t: usize) -> Result<MatSeries<K>> {
    if z.dim() != g.n_in() {
        return Err(Error::DimensionMismatch { expected: g.n_in(), found: z.dim() });
    }
    let determined = linearization_determined_through(g, z);
    if t > determined {
        return Err(Error::InsufficientTruncation { requested: t, determined });
    }
    let jp = g.jacobian_polys();
    let m = g.m_out();
    let n = g.n_in();
    let flat: Vec<Poly<K>> = jp.into_iter().flatten().collect();
    let series = compose_polys(&flat, z.series(), t);
    let coeffs = (0..=t).map(|j| Matrix::from_fn(m, n, |r, c| series[r * n + c][j].clone())).collect();
    MatSeries::new(m, n, coeffs)
}
