//! End-to-end analysis of a map along a curve, perturbation experiments and
//! the in-cone homogeneity probe.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cone::{approximation_order, ApproximationOrder, BlowUpFrame, ConeConfig, GateReport, Route};
use crate::error::{Error, Result};
use crate::jordan::{
    cone_decomposition, leading_filtration, minimal_minor_valuation, surjectivity_from_filtration,
    ConeDecomposition, LeadingFiltration, NotSurjective, SurjectivityOrder,
};
use crate::poly::PolyMap;
use crate::scalar::Field;
use crate::series::{
    composition_determined_through, linearization_determined_through, linearize_along_curve, CurveSeries,
    MatSeries, VecSeries,
};

/// Initial truncation before `k` is known.
pub const INITIAL_TRUNCATION: usize = 8;
/// Upper bound on the working truncation for maps with bounded degree curves.
pub const MAX_TRUNCATION: usize = 96;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisOptions {
    /// Search bound for `k`; by default the smallest nonzero maximal minor
    /// valuation, capped by the truncation.
    pub max_k: Option<usize>,
    pub tau_rank: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { max_k: None, tau_rank: crate::linalg::DEFAULT_TAU_RANK }
    }
}

#[derive(Clone, Debug)]
pub struct Analysis<K: Field> {
    /// Final working truncation.
    pub truncation: usize,
    pub linearization: MatSeries<K>,
    pub filtration: LeadingFiltration<K>,
    pub order: SurjectivityOrder,
    pub max_k: usize,
    pub decomposition: Option<ConeDecomposition<K>>,
    pub approximation: ApproximationOrder<K>,
    /// Truncation at which `approximation` was computed.
    pub approximation_truncation: usize,
}

impl<K: Field> Analysis<K> {
    pub fn k(&self) -> Option<usize> {
        self.order.k()
    }

    pub fn decomposition(&self) -> Result<&ConeDecomposition<K>> {
        self.decomposition.as_ref().ok_or(Error::NotKSurjective { max_k: self.max_k })
    }

    /// Blow-up frame at the given shift over the final truncation.
    pub fn frame(&self, g: &PolyMap<K>, z: &CurveSeries<K>, shift: usize) -> Result<BlowUpFrame<K>> {
        BlowUpFrame::new(g, z, self.decomposition()?, shift, self.truncation, self.filtration_tol())
    }

    fn filtration_tol(&self) -> f64 {
        self.decomposition.as_ref().map_or(crate::linalg::DEFAULT_TAU_RANK, |d| d.tol)
    }
}

fn order_at<K: Field>(
    l: &MatSeries<K>,
    max_k: Option<usize>,
    tol: f64,
) -> (LeadingFiltration<K>, SurjectivityOrder, usize) {
    let t = l.truncation();
    let bound = match max_k {
        Some(b) => b.min(t),
        None => minimal_minor_valuation(l, tol).map_or(t, |v| v.min(t)),
    };
    let f = leading_filtration(l, bound, tol);
    let o = surjectivity_from_filtration(l, &f, bound, tol);
    (f, o, bound)
}

/// Surjectivity order, decomposition and approximation order of `G` along `z`.
///
/// The truncation starts at [`INITIAL_TRUNCATION`] and doubles while the
/// order is undecided, then settles at `max(2k + 4, q + 2)`.
pub fn analyze<K: Field>(g: &PolyMap<K>, z: &CurveSeries<K>, opts: &AnalysisOptions) -> Result<Analysis<K>> {
    if z.dim() != g.n_in() {
        return Err(Error::DimensionMismatch { expected: g.n_in(), found: z.dim() });
    }
    if g.is_zero() {
        return Err(Error::ZeroMap);
    }
    let tol = opts.tau_rank;
    let det_l = linearization_determined_through(g, z).min(MAX_TRUNCATION);
    let det_c = composition_determined_through(g, z).min(MAX_TRUNCATION);
    let mut t = INITIAL_TRUNCATION.min(det_l);
    let (mut l, mut filtration, mut order, mut max_k);
    loop {
        l = linearize_along_curve(g, z, t)?;
        (filtration, order, max_k) = order_at(&l, opts.max_k, tol);
        let capped = opts.max_k.is_some_and(|b| b <= t)
            && matches!(order, SurjectivityOrder::NotKSurjective(NotSurjective::Exhausted { .. }));
        if order.k().is_none() && !capped && t < det_l {
            t = (2 * t).min(det_l);
            continue;
        }
        break;
    }
    let Some(k) = order.k() else {
        let approximation_truncation = t.min(det_c);
        let approximation = approximation_order(g, z, approximation_truncation, tol)?;
        return Ok(Analysis {
            truncation: t,
            linearization: l,
            filtration,
            order,
            max_k,
            decomposition: None,
            approximation,
            approximation_truncation,
        });
    };
    let probe_t = (2 * k + 4).max(t).min(det_c);
    let probe = approximation_order(g, z, probe_t, tol)?;
    let wanted = match probe.q() {
        Some(q) => (2 * k + 4).max(q + 2),
        None => 2 * k + 4,
    };
    let t_final = wanted.min(det_l).min(det_c);
    if t_final < 2 * k + 1 {
        return Err(Error::InsufficientTruncation { requested: 2 * k + 1, determined: t_final });
    }
    let l = linearize_along_curve(g, z, t_final)?;
    let (filtration, order, _) = order_at(&l, Some(max_k.max(k)), tol);
    if order.k() != Some(k) {
        return Err(Error::InconsistentK { claimed: k, detail: format!("recomputed {:?} at T={t_final}", order.k()) });
    }
    let decomposition = cone_decomposition(&l, k, tol)?;
    let approximation = approximation_order(g, z, t_final, tol)?;
    Ok(Analysis {
        truncation: t_final,
        linearization: l,
        filtration,
        order,
        max_k,
        decomposition: Some(decomposition),
        approximation,
        approximation_truncation: t_final,
    })
}

/// Perturbation of the map, the curve, or both.
#[derive(Clone, Debug, PartialEq)]
pub enum PerturbationSpec<K> {
    /// `G + alpha * sum M_tau z^tau` with homogeneous tensors of degrees `>= order`.
    Map { order: u32, tensors: Vec<(u32, PolyMap<K>)> },
    /// `z + alpha * sum eps^j b_j` for `j >= order`.
    Curve { order: usize, terms: Vec<(usize, Vec<K>)> },
    /// Order-`2k` perturbations of both map and curve.
    Joint { tensor: PolyMap<K>, curve_term: Vec<K>, curve_order: usize },
}

#[derive(Clone, Debug)]
pub struct PerturbationReport<K: Field> {
    pub k_before: Option<usize>,
    pub k_after: Option<usize>,
    /// Lower bound `i` of the semicontinuity contract.
    pub lower: usize,
    pub gate_before: Option<GateReport<K>>,
    pub gate_after: Option<GateReport<K>>,
    pub contract_holds: bool,
    pub violations: Vec<String>,
}

fn shift_zero_gate<K: Field>(g: &PolyMap<K>, z: &CurveSeries<K>, a: &Analysis<K>, eta: f64) -> Option<GateReport<K>> {
    a.decomposition.as_ref()?;
    a.frame(g, z, 0).ok().map(|f| f.gate(eta))
}

/// Recomputes `k` and the unshifted gate after perturbing the data.
pub fn perturbation_experiment<K: Field>(
    g: &PolyMap<K>,
    z: &CurveSeries<K>,
    spec: &PerturbationSpec<K>,
    alpha: &K,
    opts: &AnalysisOptions,
    cone: &ConeConfig,
) -> Result<PerturbationReport<K>> {
    let before = analyze(g, z, opts)?;
    let gate_before = shift_zero_gate(g, z, &before, cone.eta);
    let (g2, z2, lower) = match spec {
        PerturbationSpec::Map { order, tensors } => {
            if let Some((deg, _)) = tensors.iter().find(|(d, _)| d < order) {
                return Err(Error::NotHomogeneous { order: *deg });
            }
            (g.perturb(alpha, tensors)?, z.clone(), order.saturating_sub(1) as usize)
        }
        PerturbationSpec::Curve { order, terms } => (g.clone(), perturb_curve(z, alpha, terms, *order)?, *order),
        PerturbationSpec::Joint { tensor, curve_term, curve_order } => {
            let deg = tensor.degree();
            let g2 = g.perturb(alpha, &[(deg, tensor.clone())])?;
            let z2 = perturb_curve(z, alpha, &[(*curve_order, curve_term.clone())], *curve_order)?;
            (g2, z2, 0)
        }
    };
    let after = analyze(&g2, &z2, opts)?;
    let gate_after = shift_zero_gate(&g2, &z2, &after, cone.eta);
    let (kb, ka) = (before.k(), after.k());
    let mut violations = Vec::new();
    if alpha.is_zero() {
        if ka != kb {
            violations.push(format!("alpha = 0 changed k from {kb:?} to {ka:?}"));
        }
    } else if !matches!(spec, PerturbationSpec::Joint { .. }) {
        match (kb, ka) {
            (Some(b), Some(a)) => {
                if a < lower || a > b {
                    violations.push(format!("k_after = {a} outside [{lower}, {b}]"));
                }
            }
            (Some(b), None) => violations.push(format!("surjectivity lost (k_before = {b})")),
            _ => {}
        }
    }
    if let PerturbationSpec::Joint { .. } = spec {
        let passed_before = gate_before.as_ref().is_some_and(|g| g.passed(Route::Corollary1));
        let passed_after = gate_after.as_ref().is_some_and(|g| g.passed(Route::Corollary1));
        if passed_before && !passed_after {
            violations.push("approximation gate lost".into());
        }
        if ka != kb {
            violations.push(format!("k changed from {kb:?} to {ka:?}"));
        }
    }
    Ok(PerturbationReport {
        k_before: kb,
        k_after: ka,
        lower,
        gate_before,
        gate_after,
        contract_holds: violations.is_empty(),
        violations,
    })
}

fn perturb_curve<K: Field>(
    z: &CurveSeries<K>,
    alpha: &K,
    terms: &[(usize, Vec<K>)],
    order: usize,
) -> Result<CurveSeries<K>> {
    let mut coeffs = z.series().coeffs().to_vec();
    for (j, b) in terms {
        if *j < order.max(1) {
            return Err(Error::CurveNotCentered);
        }
        if b.len() != z.dim() {
            return Err(Error::DimensionMismatch { expected: z.dim(), found: b.len() });
        }
        if *j >= coeffs.len() {
            coeffs.resize(j + 1, vec![K::zero(); z.dim()]);
        }
        for (c, x) in coeffs[*j].iter_mut().zip(b) {
            *c = c.clone() + alpha.clone() * x.clone();
        }
    }
    CurveSeries::from_coeffs(z.dim(), coeffs)
}

/// Orders recomputed along curves inside the cone of a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneityReport {
    pub k: usize,
    pub orders: Vec<Option<usize>>,
    pub approximation_orders: Vec<Option<usize>>,
    pub all_equal_k: bool,
    /// Whether every curve keeps `q >= 2k`, when the center has it.
    pub approximation_preserved: Option<bool>,
}

/// Builds in-cone curves for the given `(phi(eps), n_{k+1}(eps))` paths and
/// recomputes the surjectivity and approximation orders along each.
pub fn cone_curve_homogeneity_check<K: Field>(
    frame: &BlowUpFrame<K>,
    paths: &[(VecSeries<K>, VecSeries<K>)],
    opts: &AnalysisOptions,
    cone: &ConeConfig,
) -> Result<HomogeneityReport> {
    let k = frame.k();
    let center_ok = frame.approximation.at_least(2 * k);
    let mut orders = Vec::with_capacity(paths.len());
    let mut approximation_orders = Vec::with_capacity(paths.len());
    for (phi, w) in paths {
        let (zc, _) = frame.in_cone_curve(phi, w, cone)?;
        let curve = CurveSeries::new(zc)?;
        let a = analyze(&frame.map, &curve, opts)?;
        orders.push(a.k());
        approximation_orders.push(a.approximation.q().or(Some(a.approximation_truncation + 1)));
    }
    let all_equal_k = orders.iter().all(|o| *o == Some(k));
    let approximation_preserved =
        center_ok.then(|| approximation_orders.iter().all(|q| q.is_some_and(|q| q >= 2 * k)));
    Ok(HomogeneityReport { k, orders, approximation_orders, all_equal_k, approximation_preserved })
}
