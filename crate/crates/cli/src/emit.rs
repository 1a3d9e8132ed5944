//! JSON encoding of scalars, vectors, matrices and series.

use kcone_core::{ComplexRational, Field, MatSeries, Matrix, Rational, VecSeries, C64};
use serde_json::Value;

/// Scalars that can be written to a report. Exact values become strings,
/// floats become JSON numbers, complex floats `[re, im]` pairs.
pub trait Scalar: Field {
    fn emit(&self) -> Value;
    fn emit_approx(a: &Self::Approx) -> Value;
}

pub fn float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(x.to_string()))
}

fn complex_text(re: &Rational, im: &Rational) -> String {
    let zero = Rational::from_integer(0.into());
    if *im == zero {
        re.to_string()
    } else if *re == zero {
        format!("{im}i")
    } else if *im < zero {
        format!("{re}-{}i", -im.clone())
    } else {
        format!("{re}+{im}i")
    }
}

fn pair(c: &C64) -> Value {
    Value::Array(vec![float(c.re), float(c.im)])
}

impl Scalar for Rational {
    fn emit(&self) -> Value {
        Value::String(self.to_string())
    }

    fn emit_approx(a: &f64) -> Value {
        float(*a)
    }
}

impl Scalar for f64 {
    fn emit(&self) -> Value {
        float(*self)
    }

    fn emit_approx(a: &f64) -> Value {
        float(*a)
    }
}

impl Scalar for ComplexRational {
    fn emit(&self) -> Value {
        Value::String(complex_text(&self.re, &self.im))
    }

    fn emit_approx(a: &C64) -> Value {
        pair(a)
    }
}

impl Scalar for C64 {
    fn emit(&self) -> Value {
        pair(self)
    }

    fn emit_approx(a: &C64) -> Value {
        pair(a)
    }
}

pub fn vector<K: Scalar>(v: &[K]) -> Value {
    Value::Array(v.iter().map(Scalar::emit).collect())
}

pub fn approx_vector<K: Scalar>(v: &[K::Approx]) -> Value {
    Value::Array(v.iter().map(K::emit_approx).collect())
}

/// Row-major nested arrays.
pub fn matrix<K: Scalar>(m: &Matrix<K>) -> Value {
    Value::Array((0..m.rows()).map(|i| vector(&m.row(i))).collect())
}

/// A basis matrix as its list of column vectors.
pub fn columns<K: Scalar>(m: &Matrix<K>) -> Value {
    Value::Array(m.columns().iter().map(|c| vector(c)).collect())
}

pub fn vec_series<K: Scalar>(s: &VecSeries<K>) -> Value {
    Value::Array(s.coeffs().iter().map(|c| vector(c)).collect())
}

pub fn mat_series<K: Scalar>(s: &MatSeries<K>) -> Value {
    Value::Array(s.coeffs().iter().map(matrix).collect())
}
