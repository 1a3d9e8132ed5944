//! Sparse multivariate polynomials and polynomial maps.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Field;

/// A polynomial in `nvars` variables stored as a map from exponent tuples to
/// nonzero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<K> {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, K>,
}

impl<K: Field> Poly<K> {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: K) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(e, K::one())
    }

    pub fn monomial(exps: Vec<u32>, c: K) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(exps, c);
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, merging
    /// duplicates and dropping zeros.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, K)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch { expected: nvars, found: e.len() });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &K)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exps: &[u32]) -> K {
        self.terms.get(exps).cloned().unwrap_or_else(K::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `c * x^exps` in place.
    pub fn add_term(&mut self, exps: Vec<u32>, c: K) {
        debug_assert_eq!(exps.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(v) => {
                let s = v.clone() + c;
                if s.is_zero() {
                    self.terms.remove(&exps);
                } else {
                    *v = s;
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Smallest total degree of a stored monomial.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).min()
    }

    /// Smallest total degree among non-constant monomials.
    pub fn min_nonconstant_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).filter(|&d| d > 0).min()
    }

    pub fn has_degree(&self, d: u32) -> bool {
        self.terms.keys().any(|e| e.iter().sum::<u32>() == d)
    }

    /// Largest exponent of variable `i`.
    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.keys().map(|e| e[i]).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Poly<K>) -> Poly<K> {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly<K>) -> Poly<K> {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly<K> {
        self.scale(&-K::one())
    }

    pub fn scale(&self, s: &K) -> Poly<K> {
        let mut out = Self::zero(self.nvars);
        if s.is_zero() {
            return out;
        }
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c.clone() * s.clone());
        }
        out
    }

    pub fn mul(&self, other: &Poly<K>) -> Poly<K> {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca.clone() * cb.clone());
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly<K> {
        let mut acc = Self::constant(self.nvars, K::one());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn eval(&self, x: &[K]) -> K {
        debug_assert_eq!(x.len(), self.nvars);
        let mut powers: Vec<Vec<K>> = Vec::with_capacity(self.nvars);
        for (i, xi) in x.iter().enumerate() {
            let d = self.degree_in(i) as usize;
            let mut pw = Vec::with_capacity(d + 1);
            pw.push(K::one());
            for j in 1..=d {
                let prev: K = pw[j - 1].clone();
                pw.push(prev * xi.clone());
            }
            powers.push(pw);
        }
        let mut s = K::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &a) in e.iter().enumerate() {
                if a > 0 {
                    t = t * powers[i][a as usize].clone();
                }
            }
            s = s + t;
        }
        s
    }

    /// Partial derivative with respect to variable `i`.
    pub fn partial(&self, i: usize) -> Poly<K> {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, c.clone() * K::from_i64(i64::from(e[i])));
        }
        out
    }

    /// Directional derivative `sum_j d_j * dP/dx_j`.
    pub fn directional(&self, d: &[K]) -> Poly<K> {
        let mut out = Self::zero(self.nvars);
        for (j, dj) in d.iter().enumerate() {
            if dj.is_zero() {
                continue;
            }
            out = out.add(&self.partial(j).scale(dj));
        }
        out
    }

    /// Keeps only the monomials of total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> Poly<K> {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e.iter().sum::<u32>() == d {
                out.add_term(e.clone(), c.clone());
            }
        }
        out
    }

    pub fn map_coeffs<E: Field>(&self, f: impl Fn(&K) -> E) -> Poly<E> {
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    pub fn to_approx(&self) -> Poly<K::Approx> {
        self.map_coeffs(Field::approx)
    }

    /// Substitutes `args[i]` for variable `i`; the result lives in the
    /// variables of the arguments.
    pub fn substitute(&self, args: &[Poly<K>]) -> Poly<K> {
        assert_eq!(args.len(), self.nvars, "substitution arity mismatch");
        let nv = args.first().map_or(0, |a| a.nvars);
        let mut cache: Vec<Vec<Poly<K>>> = (0..self.nvars).map(|_| Vec::new()).collect();
        let mut out = Poly::zero(nv);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(nv, c.clone());
            for (i, &a) in e.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let pw = &mut cache[i];
                if pw.is_empty() {
                    pw.push(Poly::constant(nv, K::one()));
                }
                while pw.len() <= a as usize {
                    let next = pw[pw.len() - 1].mul(&args[i]);
                    pw.push(next);
                }
                t = t.mul(&pw[a as usize]);
            }
            out = out.add(&t);
        }
        out
    }

    /// Collects coefficients by the power of variable `v`: entry `j` is the
    /// polynomial multiplying `x_v^j` (with `x_v` removed from its monomials).
    pub fn collect_by(&self, v: usize) -> Vec<Poly<K>> {
        let d = self.degree_in(v) as usize;
        let mut out: Vec<Poly<K>> = (0..=d).map(|_| Poly::zero(self.nvars)).collect();
        if self.is_zero() {
            return Vec::new();
        }
        for (e, c) in &self.terms {
            let j = e[v] as usize;
            let mut e2 = e.clone();
            e2[v] = 0;
            out[j].add_term(e2, c.clone());
        }
        out
    }
}

/// A polynomial map `K^n -> K^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMap<K> {
    n_in: usize,
    components: Vec<Poly<K>>,
}

impl<K: Field> PolyMap<K> {
    pub fn new(n_in: usize, components: Vec<Poly<K>>) -> Result<Self> {
        for c in &components {
            if c.nvars() != n_in {
                return Err(Error::DimensionMismatch { expected: n_in, found: c.nvars() });
            }
        }
        Ok(PolyMap { n_in, components })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn m_out(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Poly<K>] {
        &self.components
    }

    pub fn is_complex(&self) -> bool {
        K::COMPLEX
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Poly::is_zero)
    }

    fn check_dim(&self, x: &[K]) -> Result<()> {
        if x.len() != self.n_in {
            return Err(Error::DimensionMismatch { expected: self.n_in, found: x.len() });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[K]) -> Result<Vec<K>> {
        self.check_dim(x)?;
        Ok(self.components.iter().map(|p| p.eval(x)).collect())
    }

    /// Symbolic Jacobian: entry `[r][j]` is `dG_r/dx_j`.
    pub fn jacobian_polys(&self) -> Vec<Vec<Poly<K>>> {
        self.components.iter().map(|p| (0..self.n_in).map(|j| p.partial(j)).collect()).collect()
    }

    pub fn jacobian(&self, x: &[K]) -> Result<Matrix<K>> {
        self.check_dim(x)?;
        let jp = self.jacobian_polys();
        Ok(Matrix::from_fn(self.m_out(), self.n_in, |r, j| jp[r][j].eval(x)))
    }

    /// Raw symmetric derivative tensor `D^order G[x](d_1, ..., d_order)`.
    pub fn deriv_apply(&self, order: usize, x: &[K], dirs: &[Vec<K>]) -> Result<Vec<K>> {
        self.check_dim(x)?;
        if dirs.len() != order {
            return Err(Error::DimensionMismatch { expected: order, found: dirs.len() });
        }
        for d in dirs {
            self.check_dim(d)?;
        }
        let mut polys = self.components.clone();
        for d in dirs {
            polys = polys.iter().map(|p| p.directional(d)).collect();
        }
        Ok(polys.iter().map(|p| p.eval(x)).collect())
    }

    /// Minimal total degree over all stored monomials.
    pub fn ord(&self) -> Result<u32> {
        self.components.iter().filter_map(Poly::min_degree).min().ok_or(Error::ZeroMap)
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().filter_map(Poly::degree).max().unwrap_or(0)
    }

    pub fn min_nonconstant_degree(&self) -> Option<u32> {
        self.components.iter().filter_map(Poly::min_nonconstant_degree).min()
    }

    /// True if some component has a monomial of total degree `d`.
    pub fn has_degree(&self, d: u32) -> bool {
        self.components.iter().any(|p| p.has_degree(d))
    }

    /// `G + alpha * sum_tau M_tau`, each `M_tau` homogeneous of degree `tau`.
    pub fn perturb(&self, alpha: &K, tensors: &[(u32, PolyMap<K>)]) -> Result<PolyMap<K>> {
        let mut comps = self.components.clone();
        for (tau, m) in tensors {
            if m.n_in != self.n_in {
                return Err(Error::DimensionMismatch { expected: self.n_in, found: m.n_in });
            }
            if m.m_out() != self.m_out() {
                return Err(Error::DimensionMismatch { expected: self.m_out(), found: m.m_out() });
            }
            for p in &m.components {
                if p.terms().any(|(e, _)| e.iter().sum::<u32>() != *tau) {
                    return Err(Error::NotHomogeneous { order: *tau });
                }
            }
            for (c, p) in comps.iter_mut().zip(&m.components) {
                *c = c.add(&p.scale(alpha));
            }
        }
        PolyMap::new(self.n_in, comps)
    }

    /// Composition with polynomial arguments.
    pub fn substitute(&self, args: &[Poly<K>]) -> Result<PolyMap<K>> {
        if args.len() != self.n_in {
            return Err(Error::DimensionMismatch { expected: self.n_in, found: args.len() });
        }
        let nv = args.first().map_or(0, Poly::nvars);
        PolyMap::new(nv, self.components.iter().map(|p| p.substitute(args)).collect())
    }

    pub fn map_coeffs<E: Field>(&self, f: impl Fn(&K) -> E + Copy) -> PolyMap<E> {
        PolyMap { n_in: self.n_in, components: self.components.iter().map(|p| p.map_coeffs(f)).collect() }
    }

    pub fn to_approx(&self) -> PolyMap<K::Approx> {
        self.map_coeffs(Field::approx)
    }
}

/// A derivative tensor of a map at a point.
#[derive(Clone, Debug)]
pub struct DerivTensorHandle<'a, K> {
    pub map: &'a PolyMap<K>,
    pub order: usize,
    pub point: Vec<K>,
}

impl<'a, K: Field> DerivTensorHandle<'a, K> {
    pub fn new(map: &'a PolyMap<K>, order: usize, point: Vec<K>) -> Self {
        DerivTensorHandle { map, order, point }
    }

    pub fn apply(&self, dirs: &[Vec<K>]) -> Result<Vec<K>> {
        self.map.deriv_apply(self.order, &self.point, dirs)
    }
}
