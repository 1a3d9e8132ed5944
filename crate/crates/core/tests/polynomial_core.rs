mod common;

use common::{example, map_from, q, qr};
use kcone_core::{Error, Field, Poly, PolyMap, Rational};
use proptest::prelude::*;

#[test]
fn eval_example_points() {
    let g = example();
    assert_eq!(g.eval(&[q(0), qr(1, 2)]).unwrap(), vec![qr(1, 32)]);
    assert_eq!(g.eval(&[q(2), q(1)]).unwrap(), vec![q(31)]);
    assert_eq!(g.eval(&[q(0), q(0)]).unwrap(), vec![q(0)]);
    let gf = g.to_approx();
    assert_eq!(gf.eval(&[0.0, 0.5]).unwrap(), vec![0.03125]);
}

#[test]
fn eval_rejects_wrong_dimension() {
    let g = example();
    assert!(matches!(g.eval(&[q(1)]), Err(Error::DimensionMismatch { expected: 2, found: 1 })));
}

#[test]
fn jacobian_along_example_curves() {
    let g = example();
    let e = qr(1, 3);
    let j = g.jacobian(&[q(0), e.clone()]).unwrap();
    assert_eq!(j.row(0), vec![-e.pow(3), q(5) * e.pow(4)]);
    let j = g.jacobian(&[e.pow(3), e.pow(4)]).unwrap();
    assert_eq!(j.row(0), vec![q(4) * e.pow(12), e.pow(11) * (q(-3) + q(5) * e.pow(5))]);
    let c = map_from(2, &[&[(&[0, 0], 7)]]);
    assert!(c.jacobian(&[q(1), q(2)]).unwrap().is_zero());
}

#[test]
fn derivative_tensor_examples() {
    let g = example();
    let o = vec![q(0), q(0)];
    assert_eq!(g.deriv_apply(2, &o, &[vec![q(1), q(0)], vec![q(1), q(0)]]).unwrap(), vec![q(0)]);
    let x2y = map_from(2, &[&[(&[2, 1], 1)]]);
    let d = x2y.deriv_apply(3, &o, &[vec![q(1), q(0)], vec![q(1), q(0)], vec![q(0), q(1)]]).unwrap();
    assert_eq!(d, vec![q(2)]);
    let x = vec![q(2), qr(-1, 3)];
    let dir = vec![q(5), q(7)];
    let once = g.deriv_apply(1, &x, std::slice::from_ref(&dir)).unwrap();
    assert_eq!(once, g.jacobian(&x).unwrap().mul_vec(&dir));
}

#[test]
fn handle_matches_deriv_apply() {
    let g = example();
    let x = vec![q(1), q(2)];
    let h = kcone_core::DerivTensorHandle::new(&g, 2, x.clone());
    let dirs = vec![vec![q(1), q(3)], vec![q(-2), q(1)]];
    assert_eq!(h.apply(&dirs).unwrap(), g.deriv_apply(2, &x, &dirs).unwrap());
}

#[test]
fn ord_examples() {
    assert_eq!(example().ord().unwrap(), 4);
    assert_eq!(map_from(2, &[&[(&[1, 0], 1), (&[0, 1], -2)]]).ord().unwrap(), 1);
    assert_eq!(map_from(2, &[&[(&[2, 0], 1), (&[0, 3], -1)]]).ord().unwrap(), 2);
    let zero = PolyMap::<Rational>::new(2, vec![Poly::zero(2)]).unwrap();
    assert!(matches!(zero.ord(), Err(Error::ZeroMap)));
}

#[test]
fn perturb_examples() {
    let g = example();
    assert_eq!(g.perturb(&q(0), &[(5, map_from(2, &[&[(&[0, 5], 1)]]))]).unwrap(), g);
    let y5 = map_from(2, &[&[(&[0, 5], 1)]]);
    let p = g.perturb(&qr(1, 1000), &[(5, y5)]).unwrap();
    assert_eq!(p.components()[0].coeff(&[0, 5]), qr(1001, 1000));
    let zero = PolyMap::new(2, vec![Poly::zero(2)]).unwrap();
    assert_eq!(g.perturb(&q(3), &[(4, zero)]).unwrap(), g);
    let bad = map_from(2, &[&[(&[0, 4], 1)]]);
    assert!(matches!(g.perturb(&q(1), &[(5, bad)]), Err(Error::NotHomogeneous { order: 5 })));
}

#[test]
fn polymap_normalizes_monomials() {
    let p = Poly::from_terms(2, vec![(vec![1, 1], q(2)), (vec![1, 1], q(-2)), (vec![0, 2], q(1))]).unwrap();
    assert_eq!(p.num_terms(), 1);
    assert!(Poly::from_terms(2, vec![(vec![1], q(1))]).is_err());
}

fn small_poly_map() -> impl Strategy<Value = PolyMap<Rational>> {
    let term = (prop::collection::vec(0u32..4, 3), -5i64..=5);
    prop::collection::vec(prop::collection::vec(term, 1..6), 2).prop_map(|comps| {
        let polys = comps
            .into_iter()
            .map(|ts| Poly::from_terms(3, ts.into_iter().map(|(e, c)| (e, q(c)))).unwrap())
            .collect();
        PolyMap::new(3, polys).unwrap()
    })
}

fn small_vec() -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-4i64..=4, 1i64..=3), 3).prop_map(|v| v.into_iter().map(|(a, b)| qr(a, b)).collect())
}

fn factorial(n: usize) -> Rational {
    (1..=n as i64).fold(q(1), |a, b| a * q(b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derivative_tensor_is_symmetric(g in small_poly_map(), x in small_vec(), d1 in small_vec(), d2 in small_vec(), d3 in small_vec(), d4 in small_vec()) {
        let dirs = [d1, d2, d3, d4];
        for order in 2..=4 {
            let fwd: Vec<_> = dirs[..order].to_vec();
            let mut rev = fwd.clone();
            rev.reverse();
            let mut rot = fwd.clone();
            rot.rotate_left(1);
            let a = g.deriv_apply(order, &x, &fwd).unwrap();
            prop_assert_eq!(&a, &g.deriv_apply(order, &x, &rev).unwrap());
            prop_assert_eq!(&a, &g.deriv_apply(order, &x, &rot).unwrap());
        }
    }

    #[test]
    fn derivative_tensor_is_multilinear(g in small_poly_map(), x in small_vec(), a in small_vec(), b in small_vec(), c in small_vec(), s in -3i64..=3) {
        let comb: Vec<Rational> = a.iter().zip(&b).map(|(u, v)| u.clone() * q(s) + v.clone()).collect();
        let lhs = g.deriv_apply(2, &x, &[comb, c.clone()]).unwrap();
        let ga = g.deriv_apply(2, &x, &[a, c.clone()]).unwrap();
        let gb = g.deriv_apply(2, &x, &[b, c]).unwrap();
        let rhs: Vec<Rational> = ga.into_iter().zip(gb).map(|(u, v)| u * q(s) + v).collect();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn taylor_expansion_is_exact(g in small_poly_map(), x in small_vec(), b in small_vec()) {
        let xb: Vec<Rational> = x.iter().zip(&b).map(|(u, v)| u.clone() + v.clone()).collect();
        let lhs = g.eval(&xb).unwrap();
        let mut rhs = vec![q(0); g.m_out()];
        for j in 0..=g.degree() as usize {
            let t = if j == 0 { g.eval(&x).unwrap() } else { g.deriv_apply(j, &x, &vec![b.clone(); j]).unwrap() };
            for (r, v) in rhs.iter_mut().zip(t) {
                *r = r.clone() + v / factorial(j);
            }
        }
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn float_tensor_symmetry(g in small_poly_map(), x in small_vec(), d1 in small_vec(), d2 in small_vec(), d3 in small_vec()) {
        let gf = g.to_approx();
        let xf: Vec<f64> = x.iter().map(Field::approx).collect();
        let ds: Vec<Vec<f64>> = [d1, d2, d3].iter().map(|d| d.iter().map(Field::approx).collect()).collect();
        let a = gf.deriv_apply(3, &xf, &ds).unwrap();
        let b = gf.deriv_apply(3, &xf, &[ds[2].clone(), ds[0].clone(), ds[1].clone()]).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-12 * u.abs().max(v.abs()).max(1.0));
        }
    }

    #[test]
    fn jacobian_matches_central_differences(g in small_poly_map(), x in small_vec(), d in small_vec()) {
        let gf = g.to_approx();
        let xf: Vec<f64> = x.iter().map(Field::approx).collect();
        let df: Vec<f64> = d.iter().map(Field::approx).collect();
        let exact = gf.jacobian(&xf).unwrap().mul_vec(&df);
        let err = |h: f64| {
            let p: Vec<f64> = xf.iter().zip(&df).map(|(a, b)| a + h * b).collect();
            let m: Vec<f64> = xf.iter().zip(&df).map(|(a, b)| a - h * b).collect();
            let fp = gf.eval(&p).unwrap();
            let fm = gf.eval(&m).unwrap();
            fp.iter().zip(&fm).zip(&exact).map(|((a, b), e)| ((a - b) / (2.0 * h) - e).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(1e-3), err(1e-4));
        let scale = exact.iter().map(|v| v.abs()).fold(1.0, f64::max);
        prop_assert!(e1 <= 1e-3 * scale * 100.0);
        let fx = gf.eval(&xf).unwrap().iter().map(|v| v.abs()).fold(1.0, f64::max);
        let rounding = f64::EPSILON * fx / 1e-4;
        if e2 > 1e3 * rounding {
            prop_assert!((e1 / e2).log10() >= 1.9, "observed order {}", (e1 / e2).log10());
        }
    }
}
