//! Transversal determinants, half-cone degree signs, the Milnor-number
//! formula and the classical Newton condition.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly::PolyMap;
use crate::scalar::Field;
use crate::series::{
    compose_map_with_curve, linearize_along_curve, scalar_mul, scalar_valuation, CurveSeries, MatSeries, Valuation,
};

/// Determinant of a square matrix series, truncated at order `t`.
pub fn series_det<K: Field>(l: &MatSeries<K>, t: usize) -> Vec<K> {
    assert_eq!(l.rows(), l.cols(), "determinant of a non-square family");
    let m = l.rows();
    let entries: Vec<Vec<Vec<K>>> = (0..m).map(|i| (0..m).map(|j| l.entry(i, j)).collect()).collect();
    let rows: Vec<usize> = (0..m).collect();
    let cols: Vec<usize> = (0..m).collect();
    det_rec(&entries, &rows, &cols, t)
}

fn det_rec<K: Field>(e: &[Vec<Vec<K>>], rows: &[usize], cols: &[usize], t: usize) -> Vec<K> {
    if rows.is_empty() {
        let mut one = vec![K::zero(); t + 1];
        one[0] = K::one();
        return one;
    }
    let r = rows[0];
    let mut acc = vec![K::zero(); t + 1];
    for (pos, &c) in cols.iter().enumerate() {
        let a = &e[r][c];
        if a.iter().all(Field::is_zero) {
            continue;
        }
        let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let minor = det_rec(e, &rows[1..], &sub_cols, t);
        let prod = scalar_mul(a, &minor, t);
        for (x, y) in acc.iter_mut().zip(prod) {
            *x = if pos % 2 == 0 { x.clone() + y } else { x.clone() - y };
        }
    }
    acc
}

/// `det(L(eps) B) = eps^chi r(eps)` with `r(0) != 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransversalDeterminant<K> {
    pub chi: usize,
    /// Unit part `r(eps)`, truncated at `T - chi`.
    pub r: Vec<K>,
    /// Full determinant series through `T`.
    pub det: Vec<K>,
    /// Transversal basis used, `n x m`.
    pub basis: Matrix<K>,
}

impl<K: Field> TransversalDeterminant<K> {
    pub fn r0(&self) -> K {
        self.r[0].clone()
    }
}

/// Default transversal: drop the coordinate where the leading curve
/// coefficient is largest, then the highest remaining indices until `m`
/// coordinates are left. Returns the kept unit vectors as columns.
pub fn default_transversal<K: Field>(z: &CurveSeries<K>, m: usize) -> Matrix<K> {
    let n = z.dim();
    let mut keep: Vec<bool> = vec![true; n];
    let mut to_drop = n.saturating_sub(m);
    if to_drop > 0 {
        if let Some(zl) = z.leading_coeff() {
            let mut best = 0;
            for (i, x) in zl.iter().enumerate() {
                if x.modulus() > zl[best].modulus() {
                    best = i;
                }
            }
            keep[best] = false;
            to_drop -= 1;
        }
    }
    for i in (0..n).rev() {
        if to_drop == 0 {
            break;
        }
        if keep[i] {
            keep[i] = false;
            to_drop -= 1;
        }
    }
    let cols: Vec<Vec<K>> = (0..n)
        .filter(|&i| keep[i])
        .map(|i| {
            let mut v = vec![K::zero(); n];
            v[i] = K::one();
            v
        })
        .collect();
    Matrix::from_cols(n, &cols)
}

/// Determinant of the linearization restricted to a transversal.
pub fn transversal_determinant<K: Field>(
    g: &PolyMap<K>,
    z: &CurveSeries<K>,
    basis: &Matrix<K>,
    t: usize,
    tol: f64,
) -> Result<TransversalDeterminant<K>> {
    if basis.rows() != g.n_in() {
        return Err(Error::DimensionMismatch { expected: g.n_in(), found: basis.rows() });
    }
    if basis.cols() != g.m_out() {
        return Err(Error::DimensionMismatch { expected: g.m_out(), found: basis.cols() });
    }
    let l = linearize_along_curve(g, z, t)?;
    let det = series_det(&l.mul_const(basis), t);
    match scalar_valuation(&det, tol) {
        Valuation::At { order, .. } => Ok(TransversalDeterminant {
            chi: order,
            r: det[order..].to_vec(),
            det,
            basis: basis.clone(),
        }),
        Valuation::AtLeast(_) => Err(Error::DegenerateThroughT { t }),
    }
}

/// Signs of the topological degree on the two half cones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreeSigns {
    Signs { positive: i8, negative: i8 },
    /// Degree signs are only defined over the reals.
    Undefined,
}

pub fn half_cone_degree<K: Field>(td: &TransversalDeterminant<K>) -> DegreeSigns {
    match td.r0().real_sign() {
        Some(s) if s != 0 => {
            let neg = if td.chi % 2 == 1 { -s } else { s };
            DegreeSigns::Signs { positive: s, negative: neg }
        }
        _ => DegreeSigns::Undefined,
    }
}

/// `mu = k_1 + ... + k_tau - ord(G) + 1`.
pub fn milnor_number(k_values: &[usize], ord_g: u32) -> Result<u64> {
    let sum: i64 = k_values.iter().map(|&k| k as i64).sum();
    let mu = sum - i64::from(ord_g) + 1;
    if mu <= 0 {
        return Err(Error::NonPositive { value: mu });
    }
    Ok(mu as u64)
}

/// Comparison of the approximation order with the classical requirement
/// `q >= 2 chi + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassicalNewtonVerdict {
    /// Approximation order, `None` when `G[z]` vanishes through `T`.
    pub q: Option<usize>,
    pub required: usize,
    pub holds: bool,
}

pub fn classical_newton_check<K: Field>(
    g: &PolyMap<K>,
    z: &CurveSeries<K>,
    td: &TransversalDeterminant<K>,
    t: usize,
    tol: f64,
) -> Result<ClassicalNewtonVerdict> {
    let s = compose_map_with_curve(g, z, t)?;
    let q = s.valuation(tol).order();
    let required = 2 * td.chi + 1;
    let holds = q.is_none_or(|q| q >= required);
    Ok(ClassicalNewtonVerdict { q, required, holds })
}
