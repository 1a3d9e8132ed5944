//! Problem files: a polynomial map, a curve and optional analysis settings.

use kcone_core::{CurveSeries, Field, Matrix, Poly, PolyMap, Rational};
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A scalar literal: a JSON number or a string such as `"3/4"`, `"1.5e-3"`
/// or `"1/2-3i"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lit {
    Text(String),
    Number(serde_json::Number),
}

impl Lit {
    pub fn text(&self) -> String {
        match self {
            Lit::Text(s) => s.clone(),
            Lit::Number(n) => n.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Real,
    Complex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coeff: Lit,
    pub exps: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub truncation: usize,
    /// Coefficient vectors of `eps^0, eps^1, ...`; missing orders are zero.
    pub coefficients: Vec<Vec<Lit>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub newton_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_rank: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<GridSpec>,
    /// Columns of the transversal basis used by `degree`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transversal: Option<Vec<Vec<Lit>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub field: FieldKind,
    pub variables: Vec<String>,
    /// One monomial list per output component.
    pub equations: Vec<Vec<Term>>,
    pub curve: CurveSpec,
    #[serde(default)]
    pub options: Options,
}

/// The map, curve and transversal of a problem file over a concrete field.
#[derive(Clone, Debug)]
pub struct Problem<K: Field> {
    pub map: PolyMap<K>,
    pub curve: CurveSeries<K>,
    pub transversal: Option<Matrix<K>>,
}

fn parse_int(s: &str) -> Option<BigInt> {
    let s = s.strip_prefix('+').unwrap_or(s);
    if s.is_empty() || s.starts_with('+') {
        return None;
    }
    s.parse().ok()
}

/// Parses `p`, `p/q` or a decimal with optional exponent, exactly.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let (p, q) = (parse_int(p.trim())?, parse_int(q.trim())?);
        if q == BigInt::from(0) {
            return None;
        }
        return Some(Rational::new(p, q));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let mut value = Rational::from_integer(format!("{int}{frac}").parse::<BigInt>().ok()?);
    let scale = exp - frac.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    value = if scale >= 0 { value * ten.pow(scale) } else { value / ten.pow(-scale) };
    Some(if neg { -value } else { value })
}

/// Parses a real literal or a complex one of the form `a+bi`, `a-bi`, `bi`.
pub fn parse_complex(s: &str) -> Option<(Rational, Rational)> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = s.strip_suffix('i') else {
        return Some((parse_rational(&s)?, Rational::from_integer(0.into())));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (parse_rational(&body[..i])?, &body[i..]),
        None => (Rational::from_integer(0.into()), body),
    };
    let im = match im {
        "" | "+" => Rational::from_integer(1.into()),
        "-" => Rational::from_integer((-1).into()),
        other => parse_rational(other)?,
    };
    Some((re, im))
}

fn scalar<K: Field>(lit: &Lit, what: &str) -> Result<K, CliError> {
    let text = lit.text();
    let (re, im) = parse_complex(&text).ok_or_else(|| CliError::Input(format!("{what}: cannot parse `{text}`")))?;
    K::from_rational_parts(&re, &im)
        .ok_or_else(|| CliError::Input(format!("{what}: `{text}` is not a real number")))
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let p: ProblemFile = serde_json::from_str(text).map_err(|e| CliError::Input(format!("problem file: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.variables.len()
    }

    pub fn m(&self) -> usize {
        self.equations.len()
    }

    fn validate(&self) -> Result<(), CliError> {
        let n = self.n();
        let input = |msg: String| Err(CliError::Input(msg));
        if n == 0 {
            return input("at least one variable is required".into());
        }
        let mut names = self.variables.clone();
        names.sort();
        names.dedup();
        if names.len() != n || self.variables.iter().any(String::is_empty) {
            return input("variable names must be unique and non-empty".into());
        }
        if self.equations.is_empty() {
            return input("at least one equation is required".into());
        }
        for (i, eq) in self.equations.iter().enumerate() {
            if let Some(t) = eq.iter().find(|t| t.exps.len() != n) {
                return input(format!("equation {i}: exponent list {:?} has length {}, expected {n}", t.exps, t.exps.len()));
            }
        }
        let c = &self.curve;
        if c.coefficients.len() > c.truncation + 1 {
            return input(format!("curve has {} coefficients but truncation {}", c.coefficients.len(), c.truncation));
        }
        if let Some(v) = c.coefficients.iter().find(|v| v.len() != n) {
            return input(format!("curve coefficient has length {}, expected {n}", v.len()));
        }
        if let Some(t) = &self.options.transversal {
            if t.iter().any(|col| col.len() != n) {
                return input(format!("transversal columns must have length {n}"));
            }
        }
        if let Some(g) = &self.options.eps_grid {
            if !(g.min > 0.0 && g.max >= g.min && g.points >= 1) {
                return input("eps_grid needs 0 < min <= max and points >= 1".into());
            }
        }
        Ok(())
    }

    /// Builds the map and curve over `K`.
    pub fn build<K: Field>(&self) -> Result<Problem<K>, CliError> {
        let n = self.n();
        let mut polys = Vec::with_capacity(self.m());
        for (i, eq) in self.equations.iter().enumerate() {
            let mut terms = Vec::with_capacity(eq.len());
            for t in eq {
                terms.push((t.exps.clone(), scalar::<K>(&t.coeff, &format!("equation {i}"))?));
            }
            polys.push(Poly::from_terms(n, terms).map_err(|e| CliError::Input(format!("equation {i}: {e}")))?);
        }
        let map = PolyMap::new(n, polys).map_err(|e| CliError::Input(e.to_string()))?;
        let mut coeffs = Vec::with_capacity(self.curve.truncation + 1);
        for (j, v) in self.curve.coefficients.iter().enumerate() {
            let row = v.iter().map(|x| scalar::<K>(x, &format!("curve coefficient {j}"))).collect::<Result<Vec<_>, _>>()?;
            coeffs.push(row);
        }
        coeffs.resize(self.curve.truncation + 1, vec![K::zero(); n]);
        let curve = CurveSeries::from_coeffs(n, coeffs).map_err(|e| CliError::Input(format!("curve: {e}")))?;
        let transversal = match &self.options.transversal {
            Some(cols) => {
                let cols = cols
                    .iter()
                    .map(|c| c.iter().map(|x| scalar::<K>(x, "transversal")).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()?;
                Some(Matrix::from_cols(n, &cols))
            }
            None => None,
        };
        Ok(Problem { map, curve, transversal })
    }
}
