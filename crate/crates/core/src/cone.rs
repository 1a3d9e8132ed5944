//! Blow-up of a polynomial map inside the cone around a curve.
//!
//! With `u = eps^k n_1 + ... + eps n_k + n_{k+1}^c + n_{k+1}` the Ansatz
//! `z(eps) + eps^(k-s) p_k(eps) u` turns `G` into
//! `G[z(eps)] + eps^(2k-s) H_lin(eps, n^c, n_{k+1})`, where `H_lin` is an
//! exact polynomial whose value at `eps = 0` is the split block system.
//! Adding `eps^-(2k-s) G[z(eps)]` gives the full blown-up residual `H`.
//!
//! Variables of the blown-up polynomials are ordered
//! `(eps, c_1, ..., c_m, w_1, ..., w_{n-m})`, where `c` are coordinates in the
//! concatenated bases of `N_1^c, ..., N_{k+1}^c` and `w` in `N_{k+1}`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::jordan::ConeDecomposition;
use crate::linalg::{inverse, solve, Matrix};
use crate::newton::{damped_newton, NewtonConfig};
use crate::poly::{Poly, PolyMap};
use crate::scalar::{norm, Field};
use crate::series::{compose_map_with_curve, compose_polys, CurveSeries, Valuation, VecSeries};

/// Signed geometric sample grid `±min * r^j`, `j = 0..points`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for EpsGrid {
    fn default() -> Self {
        EpsGrid { min: 1e-4, max: 0.2, points: 45 }
    }
}

impl EpsGrid {
    /// Increasing magnitudes from `min` to `max`.
    pub fn magnitudes(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![self.min],
            p => {
                let ratio = libm::pow(self.max / self.min, 1.0 / (p as f64 - 1.0));
                let mut out = Vec::with_capacity(p);
                let mut x = self.min;
                for j in 0..p {
                    out.push(if j + 1 == p { self.max } else { x });
                    x *= ratio;
                }
                out
            }
        }
    }

    /// Positive samples outward, then negative samples outward.
    pub fn signed(&self) -> Vec<f64> {
        let mags = self.magnitudes();
        mags.iter().copied().chain(mags.iter().map(|x| -x)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeConfig {
    /// Smallness threshold of the gate.
    pub eta: f64,
    pub newton: NewtonConfig,
    pub tau_rank: f64,
    /// Radius of admissible cone coordinates.
    pub cone_radius: f64,
    pub grid: EpsGrid,
}

impl Default for ConeConfig {
    fn default() -> Self {
        ConeConfig {
            eta: 0.1,
            newton: NewtonConfig::default(),
            tau_rank: crate::linalg::DEFAULT_TAU_RANK,
            cone_radius: 0.5,
            grid: EpsGrid::default(),
        }
    }
}

/// `G[z(eps)] = eps^q bbar(eps)`, or vanishing through the truncation.
#[derive(Clone, Debug, PartialEq)]
pub enum ApproximationOrder<K> {
    Order { q: usize, bbar: VecSeries<K> },
    ExactThroughT { t: usize },
}

impl<K: Field> ApproximationOrder<K> {
    pub fn q(&self) -> Option<usize> {
        match self {
            ApproximationOrder::Order { q, .. } => Some(*q),
            ApproximationOrder::ExactThroughT { .. } => None,
        }
    }

    /// True if `q >= order` (always true when exact through `T`).
    pub fn at_least(&self, order: usize) -> bool {
        self.q().is_none_or(|q| q >= order)
    }
}

pub fn approximation_order<K: Field>(
    g: &PolyMap<K>,
    z: &CurveSeries<K>,
    t: usize,
    tol: f64,
) -> Result<ApproximationOrder<K>> {
    let s = compose_map_with_curve(g, z, t)?;
    Ok(approximation_from_series(&s, tol))
}

pub fn approximation_from_series<K: Field>(s: &VecSeries<K>, tol: f64) -> ApproximationOrder<K> {
    match s.valuation(tol) {
        Valuation::At { order, .. } => ApproximationOrder::Order { q: order, bbar: s.shift_down(order) },
        Valuation::AtLeast(_) => ApproximationOrder::ExactThroughT { t: s.truncation() },
    }
}

/// The blown-up residual as polynomials in `(eps, c, w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlownUpSystem<E> {
    pub m: usize,
    pub nk: usize,
    /// `eps^-(2k-s) (G[Ansatz] - G[z(eps)])`.
    pub h_lin: PolyMap<E>,
    /// `h_lin + eps^-(2k-s) G[z(eps)]`, when the curve residual allows it.
    pub h_full: Option<PolyMap<E>>,
    /// Derivatives of `h_lin` (and of `h_full`) with respect to `c`.
    pub jac_c: Vec<Vec<Poly<E>>>,
    pub s_tilde: Matrix<E>,
}

impl<E: Field> BlownUpSystem<E> {
    fn point(&self, eps: &E, c: &[E], w: &[E]) -> Vec<E> {
        let mut x = Vec::with_capacity(1 + self.m + self.nk);
        x.push(eps.clone());
        x.extend(c.iter().cloned());
        x.extend(w.iter().cloned());
        x
    }

    pub fn lin(&self, eps: &E, c: &[E], w: &[E]) -> Vec<E> {
        let x = self.point(eps, c, w);
        self.h_lin.components().iter().map(|p| p.eval(&x)).collect()
    }

    pub fn full(&self, eps: &E, c: &[E], w: &[E]) -> Option<Vec<E>> {
        let x = self.point(eps, c, w);
        self.h_full.as_ref().map(|h| h.components().iter().map(|p| p.eval(&x)).collect())
    }

    pub fn jac(&self, eps: &E, c: &[E], w: &[E]) -> Matrix<E> {
        let x = self.point(eps, c, w);
        Matrix::from_fn(self.m, self.m, |i, j| self.jac_c[i][j].eval(&x))
    }

    /// Sum of the moduli of all monomial contributions at a point; used to
    /// bound the rounding error of a float evaluation.
    pub fn magnitude(&self, eps: &E, c: &[E], w: &[E], full: bool) -> f64 {
        let x = self.point(eps, c, w);
        let h = if full { self.h_full.as_ref().unwrap_or(&self.h_lin) } else { &self.h_lin };
        let mut total = 0.0;
        for p in h.components() {
            for (e, coef) in p.terms() {
                let mut t = coef.modulus();
                for (xi, &a) in x.iter().zip(e) {
                    t *= libm::pow(xi.modulus(), f64::from(a));
                }
                total += t;
            }
        }
        total
    }

    fn map<F: Field>(&self, f: impl Fn(&E) -> F + Copy) -> BlownUpSystem<F> {
        BlownUpSystem {
            m: self.m,
            nk: self.nk,
            h_lin: self.h_lin.map_coeffs(f),
            h_full: self.h_full.as_ref().map(|h| h.map_coeffs(f)),
            jac_c: self.jac_c.iter().map(|r| r.iter().map(|p| p.map_coeffs(f)).collect()).collect(),
            s_tilde: self.s_tilde.map(f),
        }
    }
}

/// Corollary routes that can be gated and solved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Route {
    /// Full absorption of the curve residual into the linear part.
    Corollary1,
    /// Small projected residual, last block solved by Newton.
    Corollary2Small,
    /// Curvature vanishing on the top complement, closed-form solution.
    Corollary2Curvature,
    /// Shift one, last two blocks solved jointly.
    Corollary3,
    /// Shift `i` with vanishing derivatives of orders `2..=i+1`.
    Corollary4(usize),
}

impl Route {
    pub fn shift(&self) -> usize {
        match self {
            Route::Corollary1 | Route::Corollary2Small | Route::Corollary2Curvature => 0,
            Route::Corollary3 => 1,
            Route::Corollary4(i) => *i,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Route::Corollary1 => "corollary-1".into(),
            Route::Corollary2Small => "corollary-2i".into(),
            Route::Corollary2Curvature => "corollary-2ii".into(),
            Route::Corollary3 => "corollary-3".into(),
            Route::Corollary4(i) => format!("corollary-4(i={i})"),
        }
    }

    /// Inverse of [`Route::name`].
    pub fn parse(s: &str) -> Option<Route> {
        match s {
            "corollary-1" => Some(Route::Corollary1),
            "corollary-2i" => Some(Route::Corollary2Small),
            "corollary-2ii" => Some(Route::Corollary2Curvature),
            "corollary-3" => Some(Route::Corollary3),
            _ => {
                let rest = s.strip_prefix("corollary-4(i=")?.strip_suffix(')')?;
                rest.parse().ok().map(Route::Corollary4)
            }
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateCondition {
    pub name: String,
    pub passed: bool,
    /// Measured quantity, when the condition is a numeric comparison.
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouteVerdict {
    pub route: Route,
    pub passed: bool,
    pub conditions: Vec<GateCondition>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateReport<K> {
    pub k: usize,
    pub frame_shift: usize,
    /// Approximation order, `None` when `G[z]` vanishes through `T`.
    pub q: Option<usize>,
    pub bbar: Option<VecSeries<K>>,
    pub eta: f64,
    pub verdicts: Vec<RouteVerdict>,
    /// No zero of `G` in the unshifted cone (`q <= 2k - 1`).
    pub no_zero_in_cone: bool,
}

impl<K: Field> GateReport<K> {
    pub fn verdict(&self, route: Route) -> Option<&RouteVerdict> {
        self.verdicts.iter().find(|v| v.route == route)
    }

    pub fn passed(&self, route: Route) -> bool {
        self.verdict(route).is_some_and(|v| v.passed)
    }

    /// First passing route for a given shift.
    pub fn accepted_for_shift(&self, shift: usize) -> Option<Route> {
        let order: Vec<Route> = match shift {
            0 => vec![Route::Corollary1, Route::Corollary2Small, Route::Corollary2Curvature],
            1 => vec![Route::Corollary3, Route::Corollary4(1)],
            s => vec![Route::Corollary4(s)],
        };
        order.into_iter().find(|r| self.passed(*r))
    }

    /// Passing route for the frame shift.
    pub fn selected(&self) -> Option<Route> {
        self.accepted_for_shift(self.frame_shift)
    }

    /// Smallest shift with a passing route.
    pub fn preferred(&self) -> Option<Route> {
        (0..self.k.max(1)).find_map(|s| self.accepted_for_shift(s))
    }
}

/// Solution of the `eps = 0` blown-up system.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSolution<K: Field> {
    pub route: Route,
    pub w: Vec<K>,
    pub c: Vec<K::Approx>,
    /// Exact solution, when one was found in an exact field.
    pub c_exact: Option<Vec<K>>,
    pub residual: f64,
    pub iterations: usize,
}

impl<K: Field> ZeroSolution<K> {
    pub fn c_in_field(&self) -> Vec<K> {
        self.c_exact.clone().unwrap_or_else(|| self.c.iter().map(K::from_approx).collect())
    }
}

/// One continuation sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample<K: Field> {
    pub eps: f64,
    pub c: Vec<K::Approx>,
    pub newton_residual: f64,
    /// Reconstructed point `z` in the field of the frame.
    pub z: Vec<K>,
    pub g_norm: f64,
    /// Local constant of the residual bound.
    pub lipschitz: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemainderSolution<K: Field> {
    pub route: Route,
    pub shift: usize,
    pub zero: ZeroSolution<K>,
    pub samples: Vec<Sample<K>>,
    /// Solution branch at the given `n_{k+1}` as a truncated series.
    pub refined: VecSeries<K>,
    pub refined_exact: bool,
    /// Cone coordinates of the refined branch.
    pub c_series: VecSeries<K>,
    pub max_newton_residual: f64,
    pub max_lipschitz: f64,
    pub all_within_bound: bool,
}

/// The blow-up of `G` around `z` for a given shift.
#[derive(Clone, Debug)]
pub struct BlowUpFrame<K: Field> {
    pub map: PolyMap<K>,
    pub curve: CurveSeries<K>,
    pub decomposition: ConeDecomposition<K>,
    pub shift: usize,
    pub truncation: usize,
    /// `2k - shift`.
    pub scale_order: usize,
    /// Coordinates of the Ansatz as polynomials in `(eps, c, w)`.
    pub ansatz: Vec<Poly<K>>,
    /// `G[z(eps)]` through the truncation.
    pub residual_series: VecSeries<K>,
    pub approximation: ApproximationOrder<K>,
    pub tol: f64,
    system: Option<BlownUpSystem<K>>,
    approx_system: Option<BlownUpSystem<K::Approx>>,
    violation: Option<Error>,
}

fn eps_power<K: Field>(nv: usize, j: usize) -> Poly<K> {
    let mut e = vec![0; nv];
    e[0] = j as u32;
    Poly::monomial(e, K::one())
}

/// Divides by `eps^r`; reports the lowest surviving order below `r`.
fn divide_eps<K: Field>(p: &Poly<K>, r: usize, tol: f64) -> core::result::Result<Poly<K>, usize> {
    let scale = p.terms().map(|(_, c)| c.modulus()).fold(0.0, f64::max);
    let mut out = Poly::zero(p.nvars());
    let mut low: Option<usize> = None;
    for (e, c) in p.terms() {
        let d = e[0] as usize;
        if d < r {
            if !c.negligible(scale, tol) {
                low = Some(low.map_or(d, |x: usize| x.min(d)));
            }
            continue;
        }
        let mut e2 = e.clone();
        e2[0] -= r as u32;
        out.add_term(e2, c.clone());
    }
    match low {
        Some(d) => Err(d),
        None => Ok(out),
    }
}

impl<K: Field> BlowUpFrame<K> {
    pub fn new(
        map: &PolyMap<K>,
        curve: &CurveSeries<K>,
        decomposition: &ConeDecomposition<K>,
        shift: usize,
        truncation: usize,
        tol: f64,
    ) -> Result<Self> {
        let d = decomposition;
        let k = d.k;
        let (n, m) = (d.n, d.m);
        if map.n_in() != n || map.m_out() != m || curve.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: map.n_in() });
        }
        if (k == 0 && shift != 0) || (k > 0 && shift > k - 1) {
            return Err(Error::InvalidShift { shift, k });
        }
        let r = 2 * k - shift;
        let residual_series = compose_map_with_curve(map, curve, truncation)?;
        let approximation = approximation_from_series(&residual_series, tol);
        let nv = n + 1;
        let nk = n - m;

        // u = sum_i eps^(k+1-i) N_i^c c_i + N_{k+1} w
        let basis = d.domain_basis();
        let offsets = d.block_offsets();
        let mut coef_polys: Vec<Poly<K>> = Vec::with_capacity(n);
        for col in 0..n {
            if col < m {
                let block = d.block_of(col);
                let e_pow = k - block;
                coef_polys.push(eps_power::<K>(nv, e_pow).mul(&Poly::var(nv, 1 + col)));
            } else {
                coef_polys.push(Poly::var(nv, 1 + col));
            }
        }
        debug_assert_eq!(offsets[k + 1], m);
        let u: Vec<Poly<K>> = (0..n)
            .map(|row| {
                let mut p = Poly::zero(nv);
                for (col, cp) in coef_polys.iter().enumerate() {
                    let b = &basis[(row, col)];
                    if !b.is_zero() {
                        p = p.add(&cp.scale(b));
                    }
                }
                p
            })
            .collect();
        // p_k(eps) u
        let mut pu = u.clone();
        for (jm1, phi) in d.phi.iter().enumerate() {
            let ej = eps_power::<K>(nv, jm1 + 1);
            for (row, slot) in pu.iter_mut().enumerate() {
                let mut acc = Poly::zero(nv);
                for (s, us) in u.iter().enumerate() {
                    let f = &phi[(row, s)];
                    if !f.is_zero() {
                        acc = acc.add(&us.scale(f));
                    }
                }
                if !acc.is_zero() {
                    *slot = slot.add(&acc.mul(&ej));
                }
            }
        }
        let zpolys = curve.to_polys(nv, 0);
        let lift = eps_power::<K>(nv, k - shift);
        let ansatz: Vec<Poly<K>> = zpolys.iter().zip(&pu).map(|(zp, p)| zp.add(&p.mul(&lift))).collect();

        let full = map.substitute(&ansatz)?;
        let base = map.substitute(&zpolys)?;
        let mut violation = None;
        let mut h_lin = Vec::with_capacity(m);
        for (pf, pb) in full.components().iter().zip(base.components()) {
            match divide_eps(&pf.sub(pb), r, tol) {
                Ok(h) => h_lin.push(h),
                Err(order) => {
                    violation = Some(Error::ShiftOrderViolation { order, expected: r });
                    break;
                }
            }
        }
        let system = if violation.is_none() {
            let h_full: Option<Vec<Poly<K>>> = base
                .components()
                .iter()
                .zip(&h_lin)
                .map(|(pb, hl)| divide_eps(pb, r, tol).ok().map(|b| hl.add(&b)))
                .collect();
            let h_lin = PolyMap::new(nv, h_lin)?;
            let h_full = match h_full {
                Some(h) => Some(PolyMap::new(nv, h)?),
                None => None,
            };
            let jac_c: Vec<Vec<Poly<K>>> =
                h_lin.components().iter().map(|p| (0..m).map(|j| p.partial(1 + j)).collect()).collect();
            Some(BlownUpSystem { m, nk, h_lin, h_full, jac_c, s_tilde: d.s_tilde() })
        } else {
            None
        };
        let approx_system = system.as_ref().map(|s| s.map(Field::approx));
        Ok(BlowUpFrame {
            map: map.clone(),
            curve: curve.clone(),
            decomposition: d.clone(),
            shift,
            truncation,
            scale_order: r,
            ansatz,
            residual_series,
            approximation,
            tol,
            system,
            approx_system,
            violation,
        })
    }

    pub fn k(&self) -> usize {
        self.decomposition.k
    }

    pub fn system(&self) -> Result<&BlownUpSystem<K>> {
        match (&self.system, &self.violation) {
            (Some(s), _) => Ok(s),
            (None, Some(e)) => Err(e.clone()),
            (None, None) => Err(Error::ShiftOrderViolation { order: 0, expected: self.scale_order }),
        }
    }

    pub fn approx_system(&self) -> Result<&BlownUpSystem<K::Approx>> {
        self.system()?;
        Ok(self.approx_system.as_ref().expect("approximate system accompanies the exact one"))
    }

    /// Error that prevents the `eps -> 0` limit, if any.
    pub fn violation(&self) -> Option<&Error> {
        self.violation.as_ref()
    }

    fn require_full(&self) -> Result<()> {
        let sys = self.system()?;
        if sys.h_full.is_none() {
            return Err(Error::InsufficientApproximation { q: self.approximation.q(), needed: self.scale_order });
        }
        Ok(())
    }

    /// Point of the cone for the given coordinates, exact in the field.
    pub fn reconstruct(&self, eps: &K, c: &[K], w: &[K]) -> Result<Vec<K>> {
        let d = &self.decomposition;
        if c.len() != d.m {
            return Err(Error::DimensionMismatch { expected: d.m, found: c.len() });
        }
        if w.len() != d.n - d.m {
            return Err(Error::DimensionMismatch { expected: d.n - d.m, found: w.len() });
        }
        let mut x = Vec::with_capacity(d.n + 1);
        x.push(eps.clone());
        x.extend(c.iter().cloned());
        x.extend(w.iter().cloned());
        Ok(self.ansatz.iter().map(|p| p.eval(&x)).collect())
    }

    /// `eps^-(2k-s) G[Ansatz]`; at `eps = 0` the limit system.
    pub fn blownup_residual(&self, eps: &K, c: &[K], w: &[K]) -> Result<Vec<K>> {
        if eps.is_zero() {
            self.require_full()?;
            let sys = self.system()?;
            if c.len() != sys.m || w.len() != sys.nk {
                return Err(Error::DimensionMismatch { expected: sys.m + sys.nk, found: c.len() + w.len() });
            }
            return Ok(sys.full(eps, c, w).expect("checked above"));
        }
        let z = self.reconstruct(eps, c, w)?;
        let g = self.map.eval(&z)?;
        let scale = eps.pow(self.scale_order as u32);
        Ok(g.into_iter().map(|x| x / scale.clone()).collect())
    }

    fn g_scale(&self) -> f64 {
        self.map.components().iter().flat_map(|p| p.terms().map(|(_, c)| c.modulus())).fold(0.0, f64::max)
    }

    /// True if `D^2 G[0](u, v) = 0` for all basis pairs of the columns.
    fn curvature_vanishes(&self, basis: &Matrix<K>) -> bool {
        let n = self.decomposition.n;
        let zero = vec![K::zero(); n];
        let cols = basis.columns();
        let scale = self.g_scale().max(1.0);
        for i in 0..cols.len() {
            for j in i..cols.len() {
                let v = self
                    .map
                    .deriv_apply(2, &zero, &[cols[i].clone(), cols[j].clone()])
                    .expect("dimensions checked at construction");
                if v.iter().any(|x| !x.negligible(scale, self.tol)) {
                    return false;
                }
            }
        }
        true
    }

    /// Coefficient `order` of `G[z(eps)]`, i.e. `bbar(0)` reindexed at `order`.
    fn reindexed_bbar0(&self, order: usize) -> Vec<K> {
        self.residual_series.coeff(order)
    }

    fn projected_norm(&self, blocks: &[usize], v: &[K]) -> f64 {
        let d = &self.decomposition;
        let mut p = Matrix::zeros(d.m, d.m);
        for &b in blocks {
            p = p.add(&d.projections[b]);
        }
        norm(&p.mul_vec(v))
    }

    /// Evaluates the hypotheses of every route.
    pub fn gate(&self, eta: f64) -> GateReport<K> {
        let k = self.k();
        let d = &self.decomposition;
        let q = self.approximation.q();
        let q_at_least = |r: usize| self.approximation.at_least(r);
        let mut verdicts = Vec::new();
        let cond = |name: &str, passed: bool, value: Option<f64>| GateCondition { name: name.into(), passed, value };
        let limit_cond = |shift: usize| {
            (shift == self.shift).then(|| cond("blown-up limit exists", self.violation.is_none(), None))
        };

        let b2k = self.reindexed_bbar0(2 * k);
        {
            let nb = norm(&b2k);
            let mut cs = vec![cond("q >= 2k", q_at_least(2 * k), q.map(|q| q as f64)), cond("|bbar(0)| <= eta", nb <= eta, Some(nb))];
            cs.extend(limit_cond(0));
            verdicts.push(RouteVerdict { route: Route::Corollary1, passed: cs.iter().all(|c| c.passed), conditions: cs });
        }
        {
            let nb = self.projected_norm(&[k], &b2k);
            let mut cs = vec![
                cond("k >= 1", k >= 1, None),
                cond("q >= 2k", q_at_least(2 * k), q.map(|q| q as f64)),
                cond("|P_{k+1} bbar(0)| <= eta", nb <= eta, Some(nb)),
            ];
            cs.extend(limit_cond(0));
            verdicts.push(RouteVerdict { route: Route::Corollary2Small, passed: cs.iter().all(|c| c.passed), conditions: cs });
        }
        {
            let van = self.curvature_vanishes(&d.nc_bases[k]);
            let mut cs = vec![
                cond("k >= 1", k >= 1, None),
                cond("q >= 2k", q_at_least(2 * k), q.map(|q| q as f64)),
                cond("B0 vanishes on N_{k+1}^c", van, None),
            ];
            cs.extend(limit_cond(0));
            verdicts.push(RouteVerdict {
                route: Route::Corollary2Curvature,
                passed: cs.iter().all(|c| c.passed),
                conditions: cs,
            });
        }
        {
            let r = (2 * k).saturating_sub(1);
            let b = self.reindexed_bbar0(r);
            let nb = if k >= 1 { self.projected_norm(&[k - 1, k], &b) } else { norm(&b) };
            let van = self.curvature_vanishes(&d.nc_bases[k].hcat(&d.kernel_basis));
            let mut cs = vec![
                cond("k >= 3", k >= 3, None),
                cond("q >= 2k-1", q_at_least(r), q.map(|q| q as f64)),
                cond("|(P_k + P_{k+1}) bbar(0)| <= eta", nb <= eta, Some(nb)),
                cond("B0 vanishes on N_{k+1}^c + N_{k+1}", van, None),
            ];
            cs.extend(limit_cond(1));
            verdicts.push(RouteVerdict { route: Route::Corollary3, passed: cs.iter().all(|c| c.passed), conditions: cs });
        }
        for i in 1..k {
            let r = 2 * k - i;
            let b = self.reindexed_bbar0(r);
            let nb = self.projected_norm(&[k], &b);
            let deriv = (2..=(i as u32 + 1)).all(|deg| !self.map.has_degree(deg));
            let mut cs = vec![
                cond("derivatives of orders 2..i+1 vanish at 0", deriv, None),
                cond("q >= 2k-i", q_at_least(r), q.map(|q| q as f64)),
                cond("|P_{k+1} bbar(0)| <= eta", nb <= eta, Some(nb)),
            ];
            cs.extend(limit_cond(i));
            verdicts.push(RouteVerdict { route: Route::Corollary4(i), passed: cs.iter().all(|c| c.passed), conditions: cs });
        }
        let no_zero_in_cone = self.shift == 0 && k >= 1 && q.is_some_and(|q| q < 2 * k);
        let bbar = match &self.approximation {
            ApproximationOrder::Order { bbar, .. } => Some(bbar.clone()),
            ApproximationOrder::ExactThroughT { .. } => None,
        };
        GateReport { k, frame_shift: self.shift, q, bbar, eta, verdicts, no_zero_in_cone }
    }

    fn check_route(&self, route: Route) -> Result<()> {
        if route.shift() != self.shift {
            return Err(Error::RouteShiftMismatch { route: route.name(), needed: route.shift(), shift: self.shift });
        }
        Ok(())
    }

    /// Solves the `eps = 0` blown-up system for the cone coordinates.
    pub fn solve_at_zero(&self, route: Route, w: &[K], cfg: &ConeConfig) -> Result<ZeroSolution<K>> {
        self.check_route(route)?;
        self.require_full()?;
        let d = &self.decomposition;
        if w.len() != d.n - d.m {
            return Err(Error::DimensionMismatch { expected: d.n - d.m, found: w.len() });
        }
        let nw = norm(w);
        if nw > cfg.cone_radius {
            return Err(Error::OutOfCone { norm: nw, radius: cfg.cone_radius });
        }
        let k = d.k;
        let nl_blocks: Vec<usize> = match route {
            Route::Corollary1 => (0..=k).collect(),
            Route::Corollary3 => vec![k - 1, k],
            _ => vec![k],
        };
        let sys = self.system()?;
        let asys = self.approx_system()?;
        let rmat = d.range_basis();
        let rinv = inverse(&rmat, self.tol).ok_or_else(|| Error::DecompositionViolation("range basis singular".into()))?;
        let zero = K::zero();

        if route == Route::Corollary2Curvature {
            let c = self.curvature_closed_form(w, &rinv)?;
            let res = sys.full(&zero, &c, w).expect("checked");
            let r = norm(&res);
            if K::EXACT && res.iter().all(Field::is_zero) || r <= cfg.newton.tol {
                return Ok(ZeroSolution {
                    route,
                    w: w.to_vec(),
                    c: c.iter().map(Field::approx).collect(),
                    c_exact: K::EXACT.then(|| c.clone()),
                    residual: r,
                    iterations: 0,
                });
            }
            let wa: Vec<K::Approx> = w.iter().map(Field::approx).collect();
            let out = polish(asys, &wa, c.iter().map(Field::approx).collect(), cfg)?;
            return Ok(ZeroSolution { route, w: w.to_vec(), c: out.0, c_exact: None, residual: out.1, iterations: out.2 });
        }

        if K::EXACT {
            if let Some(c) = block_solve_exact(sys, &rinv, d, &nl_blocks, w, self.tol) {
                let res = sys.full(&zero, &c, w).expect("checked");
                if res.iter().all(Field::is_zero) {
                    return Ok(ZeroSolution {
                        route,
                        w: w.to_vec(),
                        c: c.iter().map(Field::approx).collect(),
                        c_exact: Some(c),
                        residual: 0.0,
                        iterations: 1,
                    });
                }
            }
        }
        let wa: Vec<K::Approx> = w.iter().map(Field::approx).collect();
        let rinv_a = rinv.to_approx();
        let (c, its) = block_solve_float(asys, &rinv_a, d, &nl_blocks, &wa, cfg)?;
        let (c, r, its2) = polish(asys, &wa, c, cfg)?;
        Ok(ZeroSolution { route, w: w.to_vec(), c, c_exact: None, residual: r, iterations: its + its2 })
    }

    /// `n_{k+1}^c = -(S_{k+1} + 2 P_{k+1} B0(n_{k+1}, .))^-1 P_{k+1}(B0 n_{k+1}^2 + bbar(0))`
    /// followed by back-substitution into the lower blocks.
    fn curvature_closed_form(&self, w: &[K], rinv: &Matrix<K>) -> Result<Vec<K>> {
        let d = &self.decomposition;
        let k = d.k;
        let n = d.n;
        let off = d.block_offsets();
        let half = K::from_ratio(1, 2);
        let origin = vec![K::zero(); n];
        let nk1 = d.kernel_basis.mul_vec(w);
        let b0 = self.reindexed_bbar0(2 * k);
        let hess = |a: &[K], b: &[K]| -> Vec<K> {
            self.map.deriv_apply(2, &origin, &[a.to_vec(), b.to_vec()]).expect("dimensions checked")
        };
        let ncb = &d.nc_bases[k];
        let dk = ncb.cols();
        let top = off[k]..off[k + 1];
        let mut a = Matrix::zeros(dk, dk);
        for t in 0..dk {
            let col = rinv.mul_vec(&hess(&nk1, &ncb.col(t)));
            for (i, row) in top.clone().enumerate() {
                a[(i, t)] = d.s_ops[k][(i, t)].clone() + col[row].clone();
            }
        }
        let quad: Vec<K> = hess(&nk1, &nk1).into_iter().zip(&b0).map(|(x, b)| x * half.clone() + b.clone()).collect();
        let rq = rinv.mul_vec(&quad);
        let rhs: Vec<K> = top.clone().map(|i| -rq[i].clone()).collect();
        let ck = solve(&a, &rhs, self.tol).ok_or(Error::SingularJacobian { condition: f64::INFINITY })?;
        let mut c = vec![K::zero(); d.m];
        for (i, row) in top.clone().enumerate() {
            c[row] = ck[i].clone();
        }
        let u: Vec<K> = ncb.mul_vec(&ck).into_iter().zip(&nk1).map(|(a, b)| a + b.clone()).collect();
        let quad2: Vec<K> = hess(&u, &u).into_iter().zip(&b0).map(|(x, b)| x * half.clone() + b.clone()).collect();
        let y = rinv.mul_vec(&quad2);
        for b in 0..k {
            if off[b] == off[b + 1] {
                continue;
            }
            let yb: Vec<K> = (off[b]..off[b + 1]).map(|i| -y[i].clone()).collect();
            let cb = solve(&d.s_ops[b], &yb, self.tol).ok_or(Error::SingularJacobian { condition: f64::INFINITY })?;
            for (i, row) in (off[b]..off[b + 1]).enumerate() {
                c[row] = cb[i].clone();
            }
        }
        Ok(c)
    }

    /// Marches the blown-up solution along the signed grid and expands the
    /// refined branch as a power series.
    pub fn continue_in_epsilon(&self, route: Route, w: &[K], cfg: &ConeConfig) -> Result<RemainderSolution<K>> {
        let zero = self.solve_at_zero(route, w, cfg)?;
        let asys = self.approx_system()?;
        let wa: Vec<K::Approx> = w.iter().map(Field::approx).collect();
        let mags = cfg.grid.magnitudes();
        let mut samples = Vec::with_capacity(2 * mags.len());
        let r = self.scale_order;
        for sign in [1.0, -1.0] {
            let mut hist: Vec<(f64, Vec<K::Approx>)> = vec![(0.0, zero.c.clone())];
            for &mag in &mags {
                let eps = sign * mag;
                let pred = predict(&hist, eps);
                let ea = <K::Approx as Field>::from_f64(eps);
                let out = damped_newton(
                    |c| asys.full(&ea, c, &wa).expect("checked"),
                    |c| asys.jac(&ea, c, &wa),
                    pred,
                    &cfg.newton,
                )
                .map_err(|_| Error::ContinuationBreakdown {
                    eps,
                    last_good: (hist.len() > 1).then(|| hist[hist.len() - 1].0),
                })?;
                let ek = K::from_f64(eps);
                let ck: Vec<K> = out.x.iter().map(K::from_approx).collect();
                let z = self.reconstruct(&ek, &ck, w)?;
                let g = self.map.eval(&z)?;
                let g_norm = norm(&g);
                let rounding = 64.0 * f64::EPSILON * asys.magnitude(&ea, &out.x, &wa, true);
                let lipschitz = 1.0 + rounding / cfg.newton.tol;
                let scale = libm::pow(eps.abs(), r as f64);
                let mut bound = lipschitz * scale * cfg.newton.tol;
                if !K::EXACT {
                    bound += 64.0 * f64::EPSILON * self.g_magnitude(&z);
                }
                samples.push(Sample {
                    eps,
                    c: out.x.clone(),
                    newton_residual: out.residual,
                    z,
                    g_norm,
                    lipschitz,
                    bound,
                });
                hist.push((eps, out.x));
            }
        }
        let (c_series, refined, refined_exact) = self.refined_branch(&zero, w)?;
        let max_newton_residual = samples.iter().map(|s| s.newton_residual).fold(0.0, f64::max);
        let max_lipschitz = samples.iter().map(|s| s.lipschitz).fold(1.0, f64::max);
        let all_within_bound = samples.iter().all(|s| s.g_norm <= s.bound && s.newton_residual <= cfg.newton.tol);
        Ok(RemainderSolution {
            route,
            shift: self.shift,
            zero,
            samples,
            refined,
            refined_exact,
            c_series,
            max_newton_residual,
            max_lipschitz,
            all_within_bound,
        })
    }

    fn g_magnitude(&self, z: &[K]) -> f64 {
        let mut total = 0.0;
        for p in self.map.components() {
            for (e, c) in p.terms() {
                let mut t = c.modulus();
                for (x, &a) in z.iter().zip(e) {
                    t *= libm::pow(x.modulus(), f64::from(a));
                }
                total += t;
            }
        }
        total
    }

    /// Cone coordinates truncation for series solutions.
    fn coordinate_truncation(&self) -> usize {
        self.truncation.saturating_sub(self.k() - self.shift)
    }

    fn refined_branch(&self, zero: &ZeroSolution<K>, w: &[K]) -> Result<(VecSeries<K>, VecSeries<K>, bool)> {
        let tc = self.coordinate_truncation();
        let nk = w.len();
        if let Some(c0) = &zero.c_exact {
            let sys = self.system()?;
            let wser = VecSeries::new(nk, vec![w.to_vec()])?;
            let c = series_solve(sys, None, true, &wser, c0, tc, self.tol)?;
            let z = compose_ansatz(&self.ansatz, &c, &wser, self.truncation);
            return Ok((c, z, true));
        }
        let asys = self.approx_system()?;
        let wa: Vec<K::Approx> = w.iter().map(Field::approx).collect();
        let wser = VecSeries::new(nk, vec![wa])?;
        let c = series_solve(asys, None, true, &wser, &zero.c, tc, self.tol)?;
        let ansatz_a: Vec<Poly<K::Approx>> = self.ansatz.iter().map(Poly::to_approx).collect();
        let z = compose_ansatz(&ansatz_a, &c, &wser, self.truncation);
        Ok((c.map(K::from_approx), z.map(K::from_approx), false))
    }

    /// Solves `H_lin(eps, c, w) = S phi` for `c = psi^c(eps, phi, w)`.
    pub fn psi_c(&self, eps: &K, phi: &[K], w: &[K], cfg: &ConeConfig) -> Result<Vec<K::Approx>> {
        let asys = self.approx_system()?;
        let d = &self.decomposition;
        if phi.len() != d.m {
            return Err(Error::DimensionMismatch { expected: d.m, found: phi.len() });
        }
        if w.len() != d.n - d.m {
            return Err(Error::DimensionMismatch { expected: d.n - d.m, found: w.len() });
        }
        for v in [phi, w] {
            let nv = norm(v);
            if nv > cfg.cone_radius {
                return Err(Error::OutOfCone { norm: nv, radius: cfg.cone_radius });
            }
        }
        let ea = eps.approx();
        let pa: Vec<K::Approx> = phi.iter().map(Field::approx).collect();
        let wa: Vec<K::Approx> = w.iter().map(Field::approx).collect();
        let target = asys.s_tilde.mul_vec(&pa);
        let out = damped_newton(
            |c| asys.lin(&ea, c, &wa).into_iter().zip(&target).map(|(h, t)| h - t.clone()).collect(),
            |c| asys.jac(&ea, c, &wa),
            pa.clone(),
            &cfg.newton,
        )?;
        Ok(out.x)
    }

    /// Point of the level set through `phi` at `eps`.
    pub fn level_set_point(&self, eps: &K, phi: &[K], w: &[K], cfg: &ConeConfig) -> Result<Vec<K>> {
        let psi = self.psi_c(eps, phi, w, cfg)?;
        let ck: Vec<K> = psi.iter().map(K::from_approx).collect();
        self.reconstruct(eps, &ck, w)
    }

    /// Level coordinate `phi` with `G[level_set_point] = target`.
    pub fn level_phi_for_value(&self, eps: &K, target: &[K], cfg: &ConeConfig) -> Result<Vec<K>> {
        let d = &self.decomposition;
        if target.len() != d.m {
            return Err(Error::DimensionMismatch { expected: d.m, found: target.len() });
        }
        if eps.is_zero() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let zc = self.curve.eval(eps);
        let gz = self.map.eval(&zc)?;
        let diff: Vec<K> = target.iter().zip(gz).map(|(t, g)| t.clone() - g).collect();
        let scale = eps.pow(self.scale_order as u32);
        let rhs: Vec<K> = diff.into_iter().map(|x| x / scale.clone()).collect();
        let phi = solve(&d.s_tilde(), &rhs, self.tol).ok_or(Error::SingularJacobian { condition: f64::INFINITY })?;
        let nphi = norm(&phi);
        if nphi > cfg.cone_radius {
            return Err(Error::OutOfCone { norm: nphi, radius: cfg.cone_radius });
        }
        Ok(phi)
    }

    /// Curve inside the cone for coordinate paths `phi(eps)`, `w(eps)`:
    /// `z(eps) + eps^(k-s) p_k(eps) (psi^c(eps, phi(eps), w(eps)) + w(eps))`.
    pub fn in_cone_curve(&self, phi: &VecSeries<K>, w: &VecSeries<K>, cfg: &ConeConfig) -> Result<(VecSeries<K>, bool)> {
        let sys = self.system()?;
        let tc = self.coordinate_truncation();
        let phi0 = phi.coeff(0);
        let w0 = w.coeff(0);
        if K::EXACT {
            // one exact Newton step from phi(0); exact when the limit system is affine in c
            let target = sys.s_tilde.mul_vec(&phi0);
            let zero = K::zero();
            let f0: Vec<K> = sys.lin(&zero, &phi0, &w0).into_iter().zip(&target).map(|(h, t)| h - t.clone()).collect();
            if let Some(dx) = solve(&sys.jac(&zero, &phi0, &w0), &f0, self.tol) {
                let c0: Vec<K> = phi0.iter().zip(dx).map(|(a, b)| a.clone() - b).collect();
                let f1: Vec<K> = sys.lin(&zero, &c0, &w0).into_iter().zip(&target).map(|(h, t)| h - t.clone()).collect();
                if f1.iter().all(Field::is_zero) {
                    let c = series_solve(sys, Some(phi), false, w, &c0, tc, self.tol)?;
                    return Ok((compose_ansatz(&self.ansatz, &c, w, self.truncation), true));
                }
            }
        }
        let asys = self.approx_system()?;
        let c0 = self.psi_c(&K::zero(), &phi0, &w0, cfg)?;
        let pa = phi.to_approx();
        let wa = w.to_approx();
        let c = series_solve(asys, Some(&pa), false, &wa, &c0, tc, self.tol)?;
        let ansatz_a: Vec<Poly<K::Approx>> = self.ansatz.iter().map(Poly::to_approx).collect();
        Ok((compose_ansatz(&ansatz_a, &c, &wa, self.truncation).map(K::from_approx), false))
    }
}

fn predict<F: Field>(hist: &[(f64, Vec<F>)], eps: f64) -> Vec<F> {
    let n = hist.len();
    if n < 2 {
        return hist[n - 1].1.clone();
    }
    let (e1, c1) = &hist[n - 1];
    let (e0, c0) = &hist[n - 2];
    let t = F::from_f64((eps - e1) / (e1 - e0));
    c1.iter().zip(c0).map(|(a, b)| a.clone() + t.clone() * (a.clone() - b.clone())).collect()
}

fn polish<F: Field>(sys: &BlownUpSystem<F>, w: &[F], c: Vec<F>, cfg: &ConeConfig) -> Result<(Vec<F>, f64, usize)> {
    let zero = F::zero();
    let out = damped_newton(|x| sys.full(&zero, x, w).expect("checked"), |x| sys.jac(&zero, x, w), c, &cfg.newton)?;
    Ok((out.x, out.residual, out.iterations))
}

fn block_indices(d_off: &[usize], blocks: &[usize]) -> Vec<usize> {
    blocks.iter().flat_map(|&b| d_off[b]..d_off[b + 1]).collect()
}

/// One exact Newton step on the nonlinear blocks from zero, then exact
/// back-substitution into the remaining blocks.
fn block_solve_exact<K: Field>(
    sys: &BlownUpSystem<K>,
    rinv: &Matrix<K>,
    d: &ConeDecomposition<K>,
    nl: &[usize],
    w: &[K],
    tol: f64,
) -> Option<Vec<K>> {
    let off = d.block_offsets();
    let idx = block_indices(&off, nl);
    let zero = K::zero();
    let mut c = vec![K::zero(); d.m];
    let y = |c: &[K]| rinv.mul_vec(&sys.full(&zero, c, w).expect("checked"));
    if !idx.is_empty() {
        let y0 = y(&c);
        let j = rinv.mul(&sys.jac(&zero, &c, w)).select_rows(&idx).select_cols(&idx);
        let rhs: Vec<K> = idx.iter().map(|&i| -y0[i].clone()).collect();
        let dx = solve(&j, &rhs, tol)?;
        for (p, &i) in idx.iter().enumerate() {
            c[i] = dx[p].clone();
        }
        let y1 = y(&c);
        if idx.iter().any(|&i| !y1[i].is_zero()) {
            return None;
        }
    }
    back_substitute(&mut c, &y, d, nl, tol);
    Some(c)
}

fn back_substitute<K: Field>(
    c: &mut [K],
    y: &dyn Fn(&[K]) -> Vec<K>,
    d: &ConeDecomposition<K>,
    nl: &[usize],
    tol: f64,
) {
    let off = d.block_offsets();
    let k = d.k;
    for _pass in 0..=k {
        let mut changed = false;
        for b in (0..=k).rev() {
            if nl.contains(&b) || off[b] == off[b + 1] {
                continue;
            }
            let yv = y(c);
            let yb: Vec<K> = (off[b]..off[b + 1]).map(|i| yv[i].clone()).collect();
            if yb.iter().all(|x| x.negligible(1.0, 1e-15)) {
                continue;
            }
            let s = d.s_ops[b].map(|x| x.clone());
            let s = if K::EXACT { s } else { s.map(|x| K::from_f64(x.real_f64())) };
            if let Some(dx) = solve(&s, &yb, tol) {
                for (p, i) in (off[b]..off[b + 1]).enumerate() {
                    c[i] = c[i].clone() - dx[p].clone();
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

fn block_solve_float<K: Field>(
    sys: &BlownUpSystem<K::Approx>,
    rinv: &Matrix<K::Approx>,
    d: &ConeDecomposition<K>,
    nl: &[usize],
    w: &[K::Approx],
    cfg: &ConeConfig,
) -> Result<(Vec<K::Approx>, usize)> {
    type A<K> = <K as Field>::Approx;
    let off = d.block_offsets();
    let idx = block_indices(&off, nl);
    let zero = A::<K>::zero();
    let m = d.m;
    let embed = |x: &[A<K>]| {
        let mut c = vec![A::<K>::zero(); m];
        for (p, &i) in idx.iter().enumerate() {
            c[i] = x[p].clone();
        }
        c
    };
    let y = |c: &[A<K>]| rinv.mul_vec(&sys.full(&zero, c, w).expect("checked"));
    let out = damped_newton(
        |x| {
            let yv = y(&embed(x));
            idx.iter().map(|&i| yv[i].clone()).collect()
        },
        |x| rinv.mul(&sys.jac(&zero, &embed(x), w)).select_rows(&idx).select_cols(&idx),
        vec![A::<K>::zero(); idx.len()],
        &cfg.newton,
    )?;
    let mut c = embed(&out.x);
    let da: ConeDecomposition<A<K>> = approx_decomposition(d);
    back_substitute(&mut c, &y, &da, nl, 1e-14);
    Ok((c, out.iterations))
}

/// Float copy of a decomposition.
pub fn approx_decomposition<K: Field>(d: &ConeDecomposition<K>) -> ConeDecomposition<K::Approx> {
    ConeDecomposition {
        k: d.k,
        n: d.n,
        m: d.m,
        nc_bases: d.nc_bases.iter().map(Matrix::to_approx).collect(),
        kernel_basis: d.kernel_basis.to_approx(),
        r_bases: d.r_bases.iter().map(Matrix::to_approx).collect(),
        s_ops: d.s_ops.iter().map(Matrix::to_approx).collect(),
        phi: d.phi.iter().map(Matrix::to_approx).collect(),
        projections: d.projections.iter().map(Matrix::to_approx).collect(),
        chains: d.chains.iter().map(|ch| ch.iter().map(|v| v.iter().map(Field::approx).collect()).collect()).collect(),
        tol: d.tol,
    }
}

fn arg_series<E: Field>(c: &VecSeries<E>, w: &VecSeries<E>, t: usize) -> VecSeries<E> {
    let m = c.dim();
    let nk = w.dim();
    let mut coeffs = Vec::with_capacity(t + 1);
    for j in 0..=t {
        let mut v = Vec::with_capacity(1 + m + nk);
        v.push(if j == 1 { E::one() } else { E::zero() });
        v.extend(c.coeff(j));
        v.extend(w.coeff(j));
        coeffs.push(v);
    }
    VecSeries::new(1 + m + nk, coeffs).expect("consistent dimensions")
}

fn compose_ansatz<E: Field>(ansatz: &[Poly<E>], c: &VecSeries<E>, w: &VecSeries<E>, t: usize) -> VecSeries<E> {
    let arg = arg_series(c, w, t);
    VecSeries::from_scalar_series(&compose_polys(ansatz, &arg, t), t)
}

/// Power-series solution `c(eps)` of `H(eps, c(eps), w(eps)) = S phi(eps)`
/// (`H` full or linear part) starting from a root `c0` at `eps = 0`.
fn series_solve<E: Field>(
    sys: &BlownUpSystem<E>,
    phi: Option<&VecSeries<E>>,
    full: bool,
    w: &VecSeries<E>,
    c0: &[E],
    tc: usize,
    tol: f64,
) -> Result<VecSeries<E>> {
    let zero = E::zero();
    let w0 = w.coeff(0);
    let j0 = sys.jac(&zero, c0, &w0);
    let j0inv = inverse(&j0, tol.min(1e-12)).ok_or_else(|| Error::SingularJacobian {
        condition: crate::newton::condition_estimate(&j0),
    })?;
    let h = if full { sys.h_full.as_ref().ok_or(Error::InsufficientApproximation { q: None, needed: 0 })? } else { &sys.h_lin };
    let target: Option<VecSeries<E>> = phi.map(|p| {
        let coeffs = (0..=tc).map(|j| sys.s_tilde.mul_vec(&p.coeff(j))).collect();
        VecSeries::new(sys.m, coeffs).expect("consistent dimensions")
    });
    let mut c = VecSeries::new(sys.m, {
        let mut v = vec![vec![E::zero(); sys.m]; tc + 1];
        v[0] = c0.to_vec();
        v
    })?;
    for _ in 0..=tc + 1 {
        let arg = arg_series(&c, w, tc);
        let mut res = VecSeries::from_scalar_series(&compose_polys(h.components(), &arg, tc), tc);
        if let Some(t) = &target {
            res = res.sub(t);
        }
        let scale = res.max_modulus();
        if res.coeffs().iter().all(|v| v.iter().all(|x| x.negligible(1.0, 1e-300))) || (!E::EXACT && scale <= 1e-300) {
            break;
        }
        for j in 0..=tc {
            let r = res.coeff(j);
            if r.iter().all(Field::is_zero) {
                continue;
            }
            let dx = j0inv.mul_vec(&r);
            let slot = c.coeff_mut(j);
            for (a, b) in slot.iter_mut().zip(dx) {
                *a = a.clone() - b;
            }
        }
    }
    Ok(c)
}
