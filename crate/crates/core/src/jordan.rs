//! Jordan chains of a matrix family `L(eps)`, its order of surjectivity and
//! the associated cone decomposition.
//!
//! A chain of order `i` is a polynomial curve `b(eps) = b_0 + ... + eps^i b_i`
//! with `L(eps) b(eps) = eps^i lambda + O(eps^(i+1))`. The achievable
//! `lambda` span the filtration `W_0 ⊆ W_1 ⊆ ...`; the family is
//! `k`-surjective for the first `k` with `W_k = K^m`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{inverse, kernel, leading_index, rank, Echelon, Matrix};
use crate::scalar::{max_modulus, Field};
use crate::series::{MatSeries, VecSeries};

/// A chain `(b_0, ..., b_order)` together with its leading coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain<K> {
    pub order: usize,
    pub elements: Vec<Vec<K>>,
    /// Order-`order` coefficient of `L(eps) b(eps)` after reduction against
    /// previously accepted chains.
    pub leading: Vec<K>,
    /// Position of the normalizing entry of `leading`.
    pub pivot: usize,
}

impl<K: Field> Chain<K> {
    pub fn root(&self) -> &[K] {
        &self.elements[0]
    }

    pub fn pivot_value(&self) -> K {
        self.leading[self.pivot].clone()
    }
}

/// Margins of the float rank decisions made at one order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RankMargin {
    pub smallest_accepted: Option<f64>,
    pub largest_rejected: Option<f64>,
}

/// Leading-coefficient filtration of `L(eps)` up to some order.
#[derive(Clone, Debug, PartialEq)]
pub struct LeadingFiltration<K> {
    pub m: usize,
    pub n: usize,
    /// `dims[j] = dim W_j`.
    pub dims: Vec<usize>,
    /// Basis of `W_j` for every computed order.
    pub bases: Vec<Vec<Vec<K>>>,
    /// Chains accepted at each order, one per new direction of `W_j`.
    pub chains: Vec<Vec<Chain<K>>>,
    pub margins: Vec<RankMargin>,
}

impl<K: Field> LeadingFiltration<K> {
    pub fn levels(&self) -> usize {
        self.dims.len()
    }

    pub fn is_full(&self) -> bool {
        self.dims.last().is_some_and(|&d| d == self.m)
    }

    /// First order with `W_j = K^m`.
    pub fn surjective_at(&self) -> Option<usize> {
        self.dims.iter().position(|&d| d == self.m)
    }
}

/// Outcome of the surjectivity-order search.
#[derive(Clone, Debug, PartialEq)]
pub enum SurjectivityOrder {
    Surjective(usize),
    NotKSurjective(NotSurjective),
}

impl SurjectivityOrder {
    pub fn k(&self) -> Option<usize> {
        match self {
            SurjectivityOrder::Surjective(k) => Some(*k),
            SurjectivityOrder::NotKSurjective(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NotSurjective {
    /// The filtration stopped growing below `K^m`; `generic_rank` is the rank
    /// of the truncated family at a generic parameter.
    Stabilized { dims: Vec<usize>, generic_rank: usize },
    /// Still growing when the search bound was hit.
    Exhausted { max_k: usize, dims: Vec<usize> },
}

/// Block-Toeplitz constraint for chains of order `level`: rows enforce the
/// vanishing of orders `0..level`, unknowns are `(b_0, ..., b_cols-1)`.
fn constraint<K: Field>(l: &MatSeries<K>, level: usize, blocks: usize) -> Matrix<K> {
    let (m, n) = (l.rows(), l.cols());
    let mut c = Matrix::zeros(m * level, n * blocks);
    for row in 0..level {
        for t in 0..blocks.min(row + 1) {
            let lc = l.coeff(row - t);
            for i in 0..m {
                for j in 0..n {
                    c[(row * m + i, t * n + j)] = lc[(i, j)].clone();
                }
            }
        }
    }
    c
}

/// Chains of order `level` (vanishing through `level - 1`) as kernel basis.
fn candidate_chains<K: Field>(l: &MatSeries<K>, level: usize, tol: f64) -> Vec<Vec<Vec<K>>> {
    let n = l.cols();
    let basis = if level == 0 {
        (0..n)
            .map(|j| {
                let mut v = vec![K::zero(); n];
                v[j] = K::one();
                v
            })
            .collect()
    } else {
        kernel(&constraint(l, level, level + 1), tol)
    };
    basis.into_iter().map(|a| a.chunks(n).map(<[K]>::to_vec).collect()).collect()
}

/// Order-`level` coefficient of `L(eps) b(eps)`.
fn leading_of<K: Field>(l: &MatSeries<K>, chain: &[Vec<K>], level: usize) -> Vec<K> {
    let mut out = vec![K::zero(); l.rows()];
    for (t, b) in chain.iter().enumerate().take(level + 1) {
        let p = l.coeff(level - t).mul_vec(b);
        for (o, x) in out.iter_mut().zip(p) {
            *o = o.clone() + x;
        }
    }
    out
}

fn axpy<K: Field>(y: &mut [K], a: &K, x: &[K]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        if !xi.is_zero() {
            *yi = yi.clone() - a.clone() * xi.clone();
        }
    }
}

/// Computes the filtration `W_0 ⊆ ... ⊆ W_j` for `j` up to `max_k`, stopping
/// early once `W_j = K^m`.
pub fn leading_filtration<K: Field>(l: &MatSeries<K>, max_k: usize, tol: f64) -> LeadingFiltration<K> {
    let (m, n) = (l.rows(), l.cols());
    let max_k = max_k.min(l.truncation());
    let lscale = l.max_modulus().max(f64::MIN_POSITIVE);
    let mut accepted: Vec<Chain<K>> = Vec::new();
    let mut dims = Vec::new();
    let mut bases = Vec::new();
    let mut chains = Vec::new();
    let mut margins = Vec::new();
    for level in 0..=max_k {
        let mut new_chains: Vec<Chain<K>> = Vec::new();
        let mut margin = RankMargin::default();
        if accepted.len() < m {
            for mut cand in candidate_chains(l, level, tol) {
                let amax = cand.iter().map(|b| max_modulus(b)).fold(0.0, f64::max);
                let scale = lscale * amax.max(f64::MIN_POSITIVE);
                let mut lambda = leading_of(l, &cand, level);
                for e in accepted.iter().chain(new_chains.iter()) {
                    let coef = lambda[e.pivot].clone() / e.pivot_value();
                    if coef.is_zero() {
                        continue;
                    }
                    axpy(&mut lambda, &coef, &e.leading);
                    let shift = level - e.order;
                    for (t, b) in e.elements.iter().enumerate() {
                        if t + shift > level {
                            break;
                        }
                        axpy(&mut cand[t + shift], &coef, b);
                    }
                }
                let rel = max_modulus(&lambda) / scale;
                match leading_index(&lambda, scale, tol) {
                    Some(pivot) => {
                        if !K::EXACT {
                            margin.smallest_accepted = Some(margin.smallest_accepted.map_or(rel, |x: f64| x.min(rel)));
                        }
                        new_chains.push(Chain { order: level, elements: cand, leading: lambda, pivot });
                        if accepted.len() + new_chains.len() == m {
                            break;
                        }
                    }
                    None => {
                        if !K::EXACT {
                            margin.largest_rejected = Some(margin.largest_rejected.map_or(rel, |x: f64| x.max(rel)));
                        }
                    }
                }
            }
        }
        accepted.extend(new_chains.iter().cloned());
        dims.push(accepted.len());
        bases.push(accepted.iter().map(|c| c.leading.clone()).collect());
        chains.push(new_chains);
        margins.push(margin);
        if accepted.len() == m {
            break;
        }
    }
    LeadingFiltration { m, n, dims, bases, chains, margins }
}

/// Rank of the truncated family at a generic parameter value.
pub fn generic_rank<K: Field>(l: &MatSeries<K>, tol: f64) -> usize {
    let m = l.rows().min(l.cols());
    let points = l.rows() * l.truncation() + 2;
    let mut best = 0;
    for j in 0..points {
        let eps = K::from_ratio(j as i64 + 1, points as i64 + 1);
        best = best.max(rank(&l.eval(&eps), tol));
        if best == m {
            break;
        }
    }
    best
}

/// Order of surjectivity of `L(eps)`, searched up to `max_k`.
pub fn surjectivity_order<K: Field>(l: &MatSeries<K>, max_k: usize, tol: f64) -> SurjectivityOrder {
    let f = leading_filtration(l, max_k, tol);
    surjectivity_from_filtration(l, &f, max_k, tol)
}

pub fn surjectivity_from_filtration<K: Field>(
    l: &MatSeries<K>,
    f: &LeadingFiltration<K>,
    max_k: usize,
    tol: f64,
) -> SurjectivityOrder {
    if let Some(k) = f.surjective_at() {
        return SurjectivityOrder::Surjective(k);
    }
    let gr = generic_rank(l, tol);
    if gr < l.rows() {
        SurjectivityOrder::NotKSurjective(NotSurjective::Stabilized { dims: f.dims.clone(), generic_rank: gr })
    } else {
        SurjectivityOrder::NotKSurjective(NotSurjective::Exhausted {
            max_k: max_k.min(l.truncation()),
            dims: f.dims.clone(),
        })
    }
}

/// Smallest valuation among the nonzero maximal minors of `L(eps)`, or
/// `None` when every minor vanishes through the truncation. The order of
/// surjectivity never exceeds this value.
pub fn minimal_minor_valuation<K: Field>(l: &MatSeries<K>, tol: f64) -> Option<usize> {
    let (m, n) = (l.rows(), l.cols());
    if m > n {
        return None;
    }
    let t = l.truncation();
    let mut best: Option<usize> = None;
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        let det = crate::topology::series_det(&l.select_cols(&idx), t);
        if let crate::series::Valuation::At { order, .. } = crate::series::scalar_valuation(&det, tol) {
            best = Some(best.map_or(order, |b: usize| b.min(order)));
        }
        if !next_combination(&mut idx, n) {
            return best;
        }
    }
}

/// Advances `idx` to the next increasing `idx.len()`-subset of `0..n`.
pub(crate) fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let m = idx.len();
    let mut i = m;
    while i > 0 {
        i -= 1;
        if idx[i] < n - m + i {
            idx[i] += 1;
            for j in i + 1..m {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Direct-sum decomposition attached to a `k`-surjective family.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeDecomposition<K> {
    pub k: usize,
    pub n: usize,
    pub m: usize,
    /// Bases of `N_1^c, ..., N_{k+1}^c` as `n x d_i` matrices.
    pub nc_bases: Vec<Matrix<K>>,
    /// Basis of `N_{k+1}` as an `n x (n - m)` matrix.
    pub kernel_basis: Matrix<K>,
    /// Bases of `R_1, ..., R_{k+1}` as `m x d_i` matrices.
    pub r_bases: Vec<Matrix<K>>,
    /// Matrices of `S_i: N_i^c -> R_i` in the chosen bases.
    pub s_ops: Vec<Matrix<K>>,
    /// Coefficients `phi_1, ..., phi_k` of `p_k(eps) = I + sum eps^j phi_j`.
    pub phi: Vec<Matrix<K>>,
    /// Projections onto `R_i` along the other summands.
    pub projections: Vec<Matrix<K>>,
    /// Normalized chain of every domain basis column.
    pub chains: Vec<Vec<Vec<K>>>,
    pub tol: f64,
}

impl<K: Field> ConeDecomposition<K> {
    pub fn block_dims(&self) -> Vec<usize> {
        self.nc_bases.iter().map(Matrix::cols).collect()
    }

    /// Start offsets of the blocks in concatenated cone coordinates.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.k + 2);
        let mut acc = 0;
        for d in self.block_dims() {
            off.push(acc);
            acc += d;
        }
        off.push(acc);
        off
    }

    /// Block index (0-based, block `i` is `N_{i+1}^c`) of a cone coordinate.
    pub fn block_of(&self, coord: usize) -> usize {
        let off = self.block_offsets();
        (0..=self.k).rev().find(|&b| coord >= off[b]).unwrap_or(0)
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.cols()
    }

    /// `[N_1^c | ... | N_{k+1}^c]`.
    pub fn complement_basis(&self) -> Matrix<K> {
        let mut out = Matrix::zeros(self.n, 0);
        for b in &self.nc_bases {
            out = out.hcat(b);
        }
        out
    }

    /// `[N_1^c | ... | N_{k+1}^c | N_{k+1}]`.
    pub fn domain_basis(&self) -> Matrix<K> {
        self.complement_basis().hcat(&self.kernel_basis)
    }

    /// `[R_1 | ... | R_{k+1}]`.
    pub fn range_basis(&self) -> Matrix<K> {
        let mut out = Matrix::zeros(self.m, 0);
        for b in &self.r_bases {
            out = out.hcat(b);
        }
        out
    }

    /// Block operator `(S_1 ... S_{k+1})` from cone coordinates to `K^m`.
    pub fn s_tilde(&self) -> Matrix<K> {
        let dims = self.block_dims();
        let total: usize = dims.iter().sum();
        let mut bd = Matrix::zeros(total, total);
        let mut off = 0;
        for (s, d) in self.s_ops.iter().zip(&dims) {
            for i in 0..*d {
                for j in 0..*d {
                    bd[(off + i, off + j)] = s[(i, j)].clone();
                }
            }
            off += d;
        }
        self.range_basis().mul(&bd)
    }

    /// `p_k(eps)` as a matrix series of degree `k`.
    pub fn p_series(&self) -> MatSeries<K> {
        let mut coeffs = Vec::with_capacity(self.k + 1);
        coeffs.push(Matrix::identity(self.n));
        coeffs.extend(self.phi.iter().cloned());
        MatSeries::new(self.n, self.n, coeffs).expect("consistent dimensions")
    }

    pub fn p_eval(&self, eps: &K) -> Matrix<K> {
        self.p_series().eval(eps)
    }

    /// Maps the leading data `bbar` to a curve `b(eps)` of degree at most
    /// `2k` with `L(eps) b(eps) = eps^k bbar + O(eps^(k+1))`.
    pub fn surjectivity_witness(&self, bbar: &[K]) -> Result<VecSeries<K>> {
        if bbar.len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, found: bbar.len() });
        }
        let k = self.k;
        let rinv = inverse(&self.range_basis(), self.tol)
            .ok_or_else(|| Error::DecompositionViolation("range basis is singular".into()))?;
        let y = rinv.mul_vec(bbar);
        let off = self.block_offsets();
        let mut u: VecSeries<K> = VecSeries::zeros(self.n, k);
        for (i, (nc, s)) in self.nc_bases.iter().zip(&self.s_ops).enumerate() {
            if nc.cols() == 0 {
                continue;
            }
            let yi = y[off[i]..off[i + 1]].to_vec();
            let sinv = inverse(s, self.tol)
                .ok_or_else(|| Error::DecompositionViolation(format!("S_{} is singular", i + 1)))?;
            let ni = sinv.mul_vec(&yi);
            let v = nc.mul_vec(&ni);
            // block i (N_{i+1}^c) carries eps^(k - i)
            let slot = u.coeff_mut(k - i);
            for (a, b) in slot.iter_mut().zip(v) {
                *a = a.clone() + b;
            }
        }
        let p = self.p_series();
        let mut out: VecSeries<K> = VecSeries::zeros(self.n, 2 * k);
        for (j, pj) in p.coeffs().iter().enumerate() {
            for (t, ut) in u.coeffs().iter().enumerate() {
                let v = pj.mul_vec(ut);
                let slot = out.coeff_mut(j + t);
                for (a, b) in slot.iter_mut().zip(v) {
                    *a = a.clone() + b;
                }
            }
        }
        Ok(out)
    }

    /// Re-checks every structural invariant directly from `L(eps)`.
    pub fn verify(&self, l: &MatSeries<K>) -> Result<()> {
        let (n, m, k) = (self.n, self.m, self.k);
        let tol = self.tol;
        let ctol = if K::EXACT { 0.0 } else { tol.max(1e-12) * 1e3 };
        let fail = |s: alloc::string::String| Err(Error::DecompositionViolation(s));
        if l.rows() != m || l.cols() != n {
            return fail(format!("family is {}x{}, decomposition {}x{}", l.rows(), l.cols(), m, n));
        }
        if self.nc_bases.len() != k + 1 || self.r_bases.len() != k + 1 || self.s_ops.len() != k + 1 {
            return fail(format!("expected {} blocks", k + 1));
        }
        if self.phi.len() != k || self.projections.len() != k + 1 {
            return fail("wrong number of p_k coefficients or projections".into());
        }
        let d = self.domain_basis();
        if d.cols() != n || rank(&d, tol) != n {
            return fail("domain summands do not form a direct sum of K^n".into());
        }
        let r = self.range_basis();
        if r.cols() != m || rank(&r, tol) != m {
            return fail("range summands do not form a direct sum of K^m".into());
        }
        for (i, (s, nc)) in self.s_ops.iter().zip(&self.nc_bases).enumerate() {
            if s.rows() != nc.cols() || s.cols() != nc.cols() || self.r_bases[i].cols() != nc.cols() {
                return fail(format!("S_{} has the wrong shape", i + 1));
            }
            if rank(s, tol) != s.rows() {
                return fail(format!("S_{} is not invertible", i + 1));
            }
        }
        let close = |a: &Matrix<K>, b: &Matrix<K>| {
            let diff = a.sub(b);
            let scale = a.max_modulus().max(b.max_modulus()).max(1.0);
            diff.entries().iter().all(|x| x.negligible(scale, ctol))
        };
        let mut sum = Matrix::zeros(m, m);
        for (i, p) in self.projections.iter().enumerate() {
            if !close(&p.mul(p), p) {
                return fail(format!("P_{} is not idempotent", i + 1));
            }
            for (j, q) in self.projections.iter().enumerate() {
                if i != j && !close(&p.mul(q), &Matrix::zeros(m, m)) {
                    return fail(format!("P_{} P_{} is not zero", i + 1, j + 1));
                }
            }
            if !close(&p.mul(&self.r_bases[i]), &self.r_bases[i]) {
                return fail(format!("P_{} does not fix R_{}", i + 1, i + 1));
            }
            sum = sum.add(p);
        }
        if !close(&sum, &Matrix::identity(m)) {
            return fail("projections do not sum to the identity".into());
        }
        let dinv = inverse(&d, tol).ok_or_else(|| Error::DecompositionViolation("domain basis singular".into()))?;
        let off = self.block_offsets();
        for (jm1, phi) in self.phi.iter().enumerate() {
            let j = jm1 + 1;
            // phi_j must land in N_1^c + ... + N_{k+1-j}^c
            let allowed_end = off[k + 1 - j];
            let coords = dinv.mul(&phi.mul(&d));
            let scale = coords.max_modulus().max(1.0);
            for row in allowed_end..n {
                for col in 0..n {
                    if !coords[(row, col)].negligible(scale, ctol) {
                        return fail(format!("phi_{} leaves the admissible range", j));
                    }
                }
            }
        }
        let p = self.p_series();
        let t = l.truncation();
        let lscale = l.max_modulus().max(1.0);
        for (i, nc) in self.nc_bases.iter().enumerate() {
            if i > t {
                return fail(format!("truncation {} too small to check order {}", t, i));
            }
            for c in 0..nc.cols() {
                let v = nc.col(c);
                let pv = VecSeries::new(n, p.coeffs().iter().map(|pj| pj.mul_vec(&v)).collect())?;
                let res = l.truncate(i).mul_vec_series(&pv.truncate(i));
                let target = self.r_bases[i].mul_vec(&self.s_ops[i].col(c));
                for ord in 0..=i {
                    let mut cf = res.coeff(ord);
                    if ord == i {
                        for (a, b) in cf.iter_mut().zip(&target) {
                            *a = a.clone() - b.clone();
                        }
                    }
                    if cf.iter().any(|x| !x.negligible(lscale, ctol)) {
                        return fail(format!("chain residual of N_{}^c column {} nonzero at order {}", i + 1, c, ord));
                    }
                }
            }
        }
        if k > t {
            return fail(format!("truncation {} too small to check order {}", t, k));
        }
        for c in 0..self.kernel_basis.cols() {
            let v = self.kernel_basis.col(c);
            let pv = VecSeries::new(n, p.coeffs().iter().map(|pj| pj.mul_vec(&v)).collect())?;
            let res = l.truncate(k).mul_vec_series(&pv.truncate(k));
            for ord in 0..=k {
                if res.coeff(ord).iter().any(|x| !x.negligible(lscale, ctol)) {
                    return fail(format!("kernel column {} has residual at order {}", c, ord));
                }
            }
        }
        Ok(())
    }
}

/// Builds the cone decomposition of a `k`-surjective family.
pub fn cone_decomposition<K: Field>(l: &MatSeries<K>, k: usize, tol: f64) -> Result<ConeDecomposition<K>> {
    let (m, n) = (l.rows(), l.cols());
    if l.truncation() < 2 * k + 1 {
        return Err(Error::InsufficientTruncation { requested: 2 * k + 1, determined: l.truncation() });
    }
    let filt = leading_filtration(l, k, tol);
    if filt.surjective_at() != Some(k) {
        return Err(Error::InconsistentK { claimed: k, detail: format!("filtration dimensions {:?}", filt.dims) });
    }
    // chains rooted in N_{k+1}: vanishing through order k
    let mut roots = Echelon::new(n, tol);
    let mut kernel_chains: Vec<Vec<Vec<K>>> = Vec::new();
    for cand in candidate_chains(l, k + 1, tol) {
        let mut cand = cand;
        cand.truncate(k + 1);
        if roots.insert(&cand[0]) {
            kernel_chains.push(cand);
        }
    }
    if kernel_chains.len() + m != n {
        return Err(Error::InconsistentK {
            claimed: k,
            detail: format!("kernel part has dimension {} instead of {}", kernel_chains.len(), n - m),
        });
    }
    // domain columns in block order; (level, raw chain)
    let mut cols: Vec<(usize, Vec<Vec<K>>)> = Vec::with_capacity(n);
    for level in 0..=k {
        for c in &filt.chains[level] {
            cols.push((level, c.elements.clone()));
        }
    }
    let nc_count = cols.len();
    for ch in &kernel_chains {
        cols.push((k, ch.clone()));
    }
    let d = Matrix::from_cols(n, &cols.iter().map(|(_, ch)| ch[0].clone()).collect::<Vec<_>>());
    let dinv = inverse(&d, tol)
        .ok_or_else(|| Error::InconsistentK { claimed: k, detail: "chain roots are dependent".into() })?;
    // block index (1-based N^c block, k+2 for the kernel part) of each column
    let block: Vec<usize> = cols.iter().enumerate().map(|(i, (lv, _))| if i < nc_count { lv + 1 } else { k + 2 }).collect();

    // normalize chains so that phi_j lands in N_1^c + ... + N_{k+1-j}^c
    let raw: Vec<Vec<Vec<K>>> = cols.iter().map(|(_, ch)| ch.clone()).collect();
    let mut normalized = raw.clone();
    for (idx, (level, _)) in cols.iter().enumerate() {
        let level = *level;
        for j in 1..=level {
            let coords = dinv.mul_vec(&normalized[idx][j]);
            for (c2, coef) in coords.iter().enumerate() {
                if block[c2] < k + 2 - j || coef.is_zero() {
                    continue;
                }
                for t in 0..=(level - j) {
                    let src = raw[c2][t].clone();
                    axpy(&mut normalized[idx][j + t], coef, &src);
                }
            }
        }
    }

    let phi: Vec<Matrix<K>> = (1..=k)
        .map(|j| {
            let imgs: Vec<Vec<K>> = cols
                .iter()
                .enumerate()
                .map(|(idx, (level, _))| if j <= *level { normalized[idx][j].clone() } else { vec![K::zero(); n] })
                .collect();
            Matrix::from_cols(n, &imgs).mul(&dinv)
        })
        .collect();

    let mut nc_bases = Vec::with_capacity(k + 1);
    let mut r_bases = Vec::with_capacity(k + 1);
    let mut s_ops = Vec::with_capacity(k + 1);
    for level in 0..=k {
        let chs = &filt.chains[level];
        let roots: Vec<Vec<K>> = chs.iter().map(|c| c.elements[0].clone()).collect();
        let rcols: Vec<Vec<K>> = chs
            .iter()
            .map(|c| {
                let v = c.pivot_value();
                c.leading.iter().map(|x| x.clone() / v.clone()).collect()
            })
            .collect();
        let mut s = Matrix::zeros(chs.len(), chs.len());
        for (i, c) in chs.iter().enumerate() {
            s[(i, i)] = c.pivot_value();
        }
        nc_bases.push(Matrix::from_cols(n, &roots));
        r_bases.push(Matrix::from_cols(m, &rcols));
        s_ops.push(s);
    }
    let kernel_basis = Matrix::from_cols(n, &kernel_chains.iter().map(|c| c[0].clone()).collect::<Vec<_>>());
    let mut rmat = Matrix::zeros(m, 0);
    for b in &r_bases {
        rmat = rmat.hcat(b);
    }
    let rinv = inverse(&rmat, tol)
        .ok_or_else(|| Error::InconsistentK { claimed: k, detail: "range directions are dependent".into() })?;
    let mut projections = Vec::with_capacity(k + 1);
    let mut off = 0;
    for b in &r_bases {
        let mut e = Matrix::zeros(m, m);
        for i in off..off + b.cols() {
            e[(i, i)] = K::one();
        }
        projections.push(rmat.mul(&e).mul(&rinv));
        off += b.cols();
    }
    let dec = ConeDecomposition {
        k,
        n,
        m,
        nc_bases,
        kernel_basis,
        r_bases,
        s_ops,
        phi,
        projections,
        chains: normalized,
        tol,
    };
    dec.verify(l).map_err(|e| Error::InconsistentK { claimed: k, detail: format!("{e}") })?;
    Ok(dec)
}

/// Free-function form of [`ConeDecomposition::surjectivity_witness`].
pub fn surjectivity_witness<K: Field>(d: &ConeDecomposition<K>, bbar: &[K]) -> Result<VecSeries<K>> {
    d.surjectivity_witness(bbar)
}
