#![allow(dead_code)]

use kcone_core::series::{linearize_along_curve, MatSeries};
use kcone_core::{CurveSeries, Field, Matrix, Poly, PolyMap, Rational};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

pub fn q(n: i64) -> Rational {
    <Rational as Field>::from_i64(n)
}

pub fn qr(n: i64, d: i64) -> Rational {
    <Rational as Field>::from_ratio(n, d)
}

pub fn exact(x: f64) -> Rational {
    <Rational as Field>::from_f64(x)
}

/// `-x y^3 + x^5 + alpha y^5`.
pub fn example_map(alpha: Rational) -> PolyMap<Rational> {
    let p = Poly::from_terms(2, vec![(vec![1, 3], q(-1)), (vec![5, 0], q(1)), (vec![0, 5], alpha)]).unwrap();
    PolyMap::new(2, vec![p]).unwrap()
}

pub fn example() -> PolyMap<Rational> {
    example_map(q(1))
}

pub fn curve_from(dim: usize, terms: &[(usize, Vec<Rational>)], t: usize) -> CurveSeries<Rational> {
    let mut c = vec![vec![q(0); dim]; t + 1];
    for (j, v) in terms {
        c[*j] = v.clone();
    }
    CurveSeries::from_coeffs(dim, c).unwrap()
}

/// `(0, eps)`.
pub fn y_axis(t: usize) -> CurveSeries<Rational> {
    curve_from(2, &[(1, vec![q(0), q(1)])], t)
}

/// `(eps^3, eps^4)`.
pub fn x_curve(t: usize) -> CurveSeries<Rational> {
    curve_from(2, &[(3, vec![q(1), q(0)]), (4, vec![q(0), q(1)])], t)
}

pub fn map_from(n: usize, comps: &[&[(&[u32], i64)]]) -> PolyMap<Rational> {
    let polys = comps
        .iter()
        .map(|c| Poly::from_terms(n, c.iter().map(|(e, v)| (e.to_vec(), q(*v)))).unwrap())
        .collect();
    PolyMap::new(n, polys).unwrap()
}

/// Rank of an integer matrix by fraction-free (Bareiss) elimination.
pub fn bareiss_rank(mut a: Vec<Vec<BigInt>>) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        for i in r + 1..rows {
            for j in c + 1..cols {
                a[i][j] = (&a[r][c] * &a[i][j] - &a[i][c] * &a[r][j]) / &prev;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Clears denominators row by row.
pub fn integer_rows(rows: &[Vec<Rational>]) -> Vec<Vec<BigInt>> {
    rows.iter()
        .map(|row| {
            let mut l = BigInt::one();
            for x in row {
                let d = x.denom().abs();
                l = num_integer::Integer::lcm(&l, &d);
            }
            row.iter().map(|x| (x * Rational::from_integer(l.clone())).to_integer()).collect()
        })
        .collect()
}

/// Order-`j` lower block-triangular Toeplitz matrix of a matrix series.
pub fn block_toeplitz(l: &MatSeries<Rational>, j: usize) -> Vec<Vec<Rational>> {
    let (m, n) = (l.rows(), l.cols());
    let mut out = vec![vec![q(0); n * (j + 1)]; m * (j + 1)];
    for br in 0..=j {
        for bc in 0..=br {
            let c = l.coeff(br - bc);
            for i in 0..m {
                for t in 0..n {
                    out[br * m + i][bc * n + t] = c[(i, t)].clone();
                }
            }
        }
    }
    out
}

/// Smallest `j <= max_j` at which the order-`j` block row adds full rank `m`.
pub fn toeplitz_order(l: &MatSeries<Rational>, max_j: usize) -> Option<usize> {
    let m = l.rows();
    let mut prev = 0;
    for j in 0..=max_j {
        let r = bareiss_rank(integer_rows(&block_toeplitz(l, j)));
        if r - prev == m {
            return Some(j);
        }
        prev = r;
    }
    None
}

fn monomials_below(d: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for total in 0..d {
        for a in 0..=total {
            out.push((a, total - a));
        }
    }
    out
}

/// `dim K[x,y] / (J + m^d)` with `J` the ideal of the partial derivatives.
pub fn local_algebra_dim(g: &Poly<Rational>, d: u32) -> usize {
    let basis = monomials_below(d);
    let index = |a: u32, b: u32| basis.iter().position(|&m| m == (a, b));
    let partials = [g.partial(0), g.partial(1)];
    let mut rows = Vec::new();
    for p in &partials {
        for &(a, b) in &basis {
            let mut row = vec![q(0); basis.len()];
            for (e, c) in p.terms() {
                if let Some(i) = index(e[0] + a, e[1] + b) {
                    row[i] = row[i].clone() + c.clone();
                }
            }
            rows.push(row);
        }
    }
    basis.len() - bareiss_rank(integer_rows(&rows))
}

/// Local Milnor number by stabilization of `dim K[x,y] / (J + m^d)`.
pub fn milnor_oracle(g: &Poly<Rational>) -> usize {
    let mut last = usize::MAX;
    for d in 2..40 {
        let v = local_algebra_dim(g, d);
        if v == last {
            return v;
        }
        last = v;
    }
    panic!("local algebra did not stabilize");
}

pub fn matrix_series(coeffs: Vec<Vec<Vec<i64>>>) -> MatSeries<Rational> {
    let mats = coeffs
        .into_iter()
        .map(|rows| Matrix::from_rows(&rows.into_iter().map(|r| r.into_iter().map(q).collect()).collect::<Vec<_>>()))
        .collect::<Vec<_>>();
    let (r, c) = (mats[0].rows(), mats[0].cols());
    MatSeries::new(r, c, mats).unwrap()
}

pub fn linearization(g: &PolyMap<Rational>, z: &CurveSeries<Rational>, t: usize) -> MatSeries<Rational> {
    linearize_along_curve(g, z, t).unwrap()
}
