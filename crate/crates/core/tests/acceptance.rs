mod common;

use std::time::{Duration, Instant};

use common::{curve_from, example, example_map, exact, linearization, map_from, matrix_series, milnor_oracle, q, qr, toeplitz_order, x_curve, y_axis};
use kcone_core::analysis::{analyze, perturbation_experiment, Analysis, AnalysisOptions, PerturbationSpec};
use kcone_core::cone::{ApproximationOrder, BlowUpFrame, ConeConfig, Route};
use kcone_core::jordan::surjectivity_order;
use kcone_core::scalar::norm;
use kcone_core::series::MatSeries;
use kcone_core::topology::{
    classical_newton_check, default_transversal, half_cone_degree, milnor_number, transversal_determinant, DegreeSigns,
};
use kcone_core::{CurveSeries, Poly, PolyMap, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("{e:?}")
}

fn opts() -> AnalysisOptions {
    AnalysisOptions::default()
}

fn cfg() -> ConeConfig {
    ConeConfig::default()
}

fn bbar_of(a: &ApproximationOrder<Rational>) -> Result<(usize, Vec<Vec<Rational>>), String> {
    match a {
        ApproximationOrder::Order { q, bbar } => Ok((*q, bbar.coeffs().to_vec())),
        other => Err(format!("unexpected approximation {other:?}")),
    }
}

fn bbar_is_one(coeffs: &[Vec<Rational>]) -> bool {
    coeffs.iter().enumerate().all(|(j, c)| c == &vec![if j == 0 { q(1) } else { q(0) }])
}

fn row(l: &MatSeries<Rational>, j: usize) -> Vec<Rational> {
    l.coeff(j).row(0)
}

fn fmt_row(r: &[Rational]) -> String {
    let parts: Vec<String> = r.iter().map(ToString::to_string).collect();
    format!("[{}]", parts.join(", "))
}

fn criterion_1() -> (Outcome, Option<String>) {
    let start = Instant::now();
    let run = || -> Result<(Analysis<Rational>, Duration), String> {
        let a = analyze(&example(), &y_axis(12), &opts()).map_err(err)?;
        Ok((a, start.elapsed()))
    };
    let (a, elapsed) = match run() {
        Ok(v) => v,
        Err(e) => return (Err(e), None),
    };
    let check = || -> Outcome {
        let l = &a.linearization;
        ensure(row(l, 3) == vec![q(-1), q(0)], format!("L3 = {}", fmt_row(&row(l, 3))))?;
        ensure(a.k() == Some(3), format!("k = {:?}", a.k()))?;
        let d = a.decomposition().map_err(err)?;
        ensure(d.kernel_basis.columns() == vec![vec![q(0), q(1)]], "N4 is not span{(0,1)}")?;
        let (qv, bbar) = bbar_of(&a.approximation)?;
        ensure(qv == 5 && bbar_is_one(&bbar), format!("q = {qv}"))?;
        ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
        Ok(format!("L3 = [-1, 0], k = 3, N4 = span{{(0,1)}}, q = 5, bbar = 1 ({elapsed:.2?})"))
    };
    let nonzero: Vec<String> = (0..=a.truncation)
        .filter(|&j| j != 3 && !a.linearization.coeff(j).is_zero())
        .map(|j| format!("L{j} = {}", fmt_row(&row(&a.linearization, j))))
        .collect();
    let clause = if nonzero.is_empty() {
        None
    } else {
        Some(format!("other coefficients are not all zero through T = {}: {}", a.truncation, nonzero.join(", ")))
    };
    (check(), clause)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let a = analyze(&example(), &x_curve(24), &opts()).map_err(err)?;
    let elapsed = start.elapsed();
    let l = &a.linearization;
    ensure(row(l, 11) == vec![q(0), q(-3)], "L11")?;
    ensure(row(l, 12) == vec![q(4), q(0)], "L12")?;
    ensure(row(l, 16) == vec![q(0), q(5)], "L16")?;
    ensure(a.k() == Some(11), format!("k = {:?}", a.k()))?;
    let (qv, bbar) = bbar_of(&a.approximation)?;
    ensure(qv == 20 && bbar_is_one(&bbar), format!("q = {qv}"))?;
    ensure(elapsed < Duration::from_secs(5), format!("took {elapsed:?}"))?;
    Ok(format!("L11 = [0, -3], L12 = [4, 0], L16 = [0, 5], k = 11, q = 20, bbar = 1 ({elapsed:.2?})"))
}

fn frame(g: &PolyMap<Rational>, z: &CurveSeries<Rational>, shift: usize) -> Result<BlowUpFrame<Rational>, String> {
    analyze(g, z, &opts()).map_err(err)?.frame(g, z, shift).map_err(err)
}

fn criterion_3() -> Outcome {
    let r1 = frame(&example(), &y_axis(12), 2)?.gate(0.1);
    ensure(!r1.passed(Route::Corollary1), "curve 1: corollary 1 accepted")?;
    ensure(r1.passed(Route::Corollary4(2)), "curve 1: corollary 4 (i=2) rejected")?;
    let r2 = frame(&example(), &x_curve(30), 2)?.gate(0.1);
    let v = r2.verdict(Route::Corollary4(2)).ok_or("curve 2: no verdict")?;
    let small_failed = v.conditions.iter().any(|c| c.name.starts_with("|P") && !c.passed);
    ensure(!v.passed && small_failed, "curve 2: smallness gate not rejected")?;
    let r3 = frame(&example_map(qr(1, 100)), &x_curve(30), 2)?.gate(0.1);
    ensure(r3.passed(Route::Corollary4(2)), "curve 2, alpha = 0.01: rejected")?;
    Ok("curve 1: cor 1 rejected, cor 4(i=2) accepted; curve 2: smallness rejected; alpha = 0.01: accepted".into())
}

fn signed_samples(count: usize) -> Vec<f64> {
    let half = count / 2;
    (0..half)
        .flat_map(|j| {
            let mag = 10f64.powf(-3.0 + 2.0 * j as f64 / (half - 1) as f64);
            [mag, -mag]
        })
        .collect()
}

fn criterion_4() -> Outcome {
    let f = frame(&example_map(qr(1, 100)), &x_curve(30), 2)?;
    let sol = f.continue_in_epsilon(Route::Corollary4(2), &[q(0)], &cfg()).map_err(err)?;
    let seed = f.curve.series();
    for j in 0..=8 {
        ensure(sol.refined.coeff(j) == seed.coeff(j), format!("coefficient {j} differs"))?;
    }
    let mut worst = 0.0f64;
    for e in signed_samples(20) {
        let z = sol.refined.eval(&exact(e));
        worst = worst.max(norm(&f.map.eval(&z).map_err(err)?));
    }
    ensure(worst <= 1e-10, format!("max |G[z]| = {worst:e}"))?;
    Ok(format!("coefficients 0..8 match, max |G[z]| = {worst:.1e} over 20 samples"))
}

fn criterion_5() -> Outcome {
    for (z, t, qv, req) in [(y_axis(12), 10, 5, 7), (x_curve(24), 24, 20, 23)] {
        let td = transversal_determinant(&example(), &z, &default_transversal(&z, 1), t, 0.0).map_err(err)?;
        let v = classical_newton_check(&example(), &z, &td, t, 0.0).map_err(err)?;
        ensure(v.q == Some(qv) && v.required == req && !v.holds, format!("{v:?}"))?;
    }
    Ok("fails with (5, 7) and (20, 23)".into())
}

fn criterion_6() -> Outcome {
    for (z, t, chi, r0) in [(y_axis(12), 10, 3, -1), (x_curve(24), 20, 11, -3)] {
        let td = transversal_determinant(&example(), &z, &default_transversal(&z, 1), t, 0.0).map_err(err)?;
        ensure(td.chi == chi && td.r0() == q(r0), format!("chi = {}, r(0) = {}", td.chi, td.r0()))?;
        ensure(
            half_cone_degree(&td) == DegreeSigns::Signs { positive: -1, negative: 1 },
            format!("{:?}", half_cone_degree(&td)),
        )?;
    }
    Ok("(-, +) for both curves, chi = 3 / 11, r(0) = -1 / -3".into())
}

fn criterion_7() -> Outcome {
    let mu = milnor_number(&[3, 11], 4).map_err(err)?;
    ensure(mu == 11 && milnor_oracle(&example().components()[0]) == 11, "example")?;
    let node = map_from(2, &[&[(&[2, 0], 1), (&[0, 2], -1)]]);
    let ks: Vec<usize> = [vec![q(1), q(1)], vec![q(1), q(-1)]]
        .into_iter()
        .map(|d| {
            let z = curve_from(2, &[(1, d)], 6);
            surjectivity_order(&linearization(&node, &z, 4), 4, 0.0).k().unwrap_or(usize::MAX)
        })
        .collect();
    let mu_node = milnor_number(&ks, 2).map_err(err)?;
    ensure(mu_node == 1 && milnor_oracle(&node.components()[0]) == 1, format!("node: {mu_node}"))?;
    let cusp = map_from(2, &[&[(&[2, 0], 1), (&[0, 3], -1)]]);
    let z = curve_from(2, &[(2, vec![q(0), q(1)]), (3, vec![q(1), q(0)])], 12);
    let k = surjectivity_order(&linearization(&cusp, &z, 8), 8, 0.0).k().ok_or("cusp order undetermined")?;
    ensure(k == 3, format!("cusp k = {k}"))?;
    let mu_cusp = milnor_number(&[k], 2).map_err(err)?;
    ensure(mu_cusp == 2 && milnor_oracle(&cusp.components()[0]) == 2, format!("cusp: {mu_cusp}"))?;
    Ok("mu = 11, node mu = 1, cusp mu = 2 (k = 3), all matching the local algebra dimension".into())
}

fn linearization_check(f: &BlowUpFrame<Rational>, seed: u64) -> Result<f64, String> {
    let c = cfg();
    let r = f.scale_order as i32;
    let s = f.decomposition.s_tilde();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for e in signed_samples(50) {
        let ee = exact(e);
        let phi: Vec<Rational> = (0..s.cols()).map(|_| exact(rng.gen_range(-0.1..0.1))).collect();
        let w: Vec<Rational> = (0..f.decomposition.kernel_basis.cols()).map(|_| exact(rng.gen_range(-0.1..0.1))).collect();
        let pt = f.level_set_point(&ee, &phi, &w, &c).map_err(err)?;
        let g_pt = f.map.eval(&pt).map_err(err)?;
        let g_z = f.map.eval(&f.curve.eval(&ee)).map_err(err)?;
        let diff: Vec<Rational> = g_pt
            .into_iter()
            .zip(g_z)
            .zip(s.mul_vec(&phi))
            .map(|((a, b), sp)| a - b - ee.pow(r) * sp)
            .collect();
        let ratio = norm(&diff) / e.abs().powi(r);
        worst = worst.max(ratio);
    }
    ensure(worst <= 10.0 * 1e-12, format!("scaled residual {worst:e}"))?;
    let h = 1e-5;
    let w0: Vec<Rational> = vec![q(0); f.decomposition.kernel_basis.cols()];
    let eval = |phi: f64, w: f64| -> Result<f64, String> {
        let mut wv = w0.clone();
        if let Some(x) = wv.first_mut() {
            *x = exact(w);
        }
        Ok(f.psi_c(&q(0), &[exact(phi)], &wv, &c).map_err(err)?[0])
    };
    let d_phi = (eval(h, 0.0)? - eval(-h, 0.0)?) / (2.0 * h);
    let d_w = (eval(0.0, h)? - eval(0.0, -h)?) / (2.0 * h);
    ensure((d_phi - 1.0).abs() <= 1e-6 && d_w.abs() <= 1e-6, format!("jacobian ({d_phi}, {d_w})"))?;
    Ok(worst)
}

fn criterion_8() -> Outcome {
    let a = linearization_check(&frame(&example(), &y_axis(12), 2)?, 1)?;
    let b = linearization_check(&frame(&example(), &x_curve(30), 2)?, 2)?;
    Ok(format!("max scaled residuals {a:.1e} and {b:.1e}; near-identity jacobian within 1e-6"))
}

fn low_rank(rng: &mut ChaCha8Rng, r: usize) -> Vec<Vec<i64>> {
    let u: Vec<Vec<i64>> = (0..3).map(|_| (0..r).map(|_| rng.gen_range(-2..=2)).collect()).collect();
    let v: Vec<Vec<i64>> = (0..r).map(|_| (0..3).map(|_| rng.gen_range(-2..=2)).collect()).collect();
    (0..3).map(|i| (0..3).map(|j| (0..r).map(|t| u[i][t] * v[t][j]).sum()).collect()).collect()
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let count = 60;
    for i in 0..count {
        let coeffs = (0..=6)
            .map(|j| {
                let r = if j < 3 { rng.gen_range(0..=2) } else { rng.gen_range(0..=3) };
                low_rank(&mut rng, r)
            })
            .collect();
        let l = matrix_series(coeffs);
        let ours = surjectivity_order(&l, 6, 0.0).k();
        let oracle = toeplitz_order(&l, 6);
        ensure(ours == oracle, format!("family {i}: {ours:?} vs {oracle:?}"))?;
    }
    Ok(format!("{count} random 3x3 families agree with the block-Toeplitz oracle"))
}

fn random_tensor(rng: &mut ChaCha8Rng, deg: u32) -> Result<PolyMap<Rational>, String> {
    let terms: Vec<(Vec<u32>, Rational)> = (0..=deg)
        .filter_map(|a| {
            let c = rng.gen_range(-3i64..=3);
            (c != 0).then(|| (vec![a, deg - a], q(c)))
        })
        .collect();
    PolyMap::new(2, vec![Poly::from_terms(2, terms).map_err(err)?]).map_err(err)
}

fn criterion_10() -> Outcome {
    let g = example();
    let z = y_axis(12);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let alphas = [qr(1, 1000), q(0)];
    let run = |spec: &PerturbationSpec<Rational>, center: &CurveSeries<Rational>| -> Result<(), String> {
        for a in &alphas {
            let r = perturbation_experiment(&g, center, spec, a, &opts(), &cfg()).map_err(err)?;
            ensure(r.contract_holds, format!("{:?}", r.violations))?;
        }
        Ok(())
    };
    for _ in 0..20 {
        let i = rng.gen_range(0..=3u32);
        let tensors = (i + 1..=5).map(|d| Ok((d, random_tensor(&mut rng, d)?))).collect::<Result<_, String>>()?;
        run(&PerturbationSpec::Map { order: i + 1, tensors }, &z).map_err(|e| format!("clause (i): {e}"))?;
    }
    for _ in 0..20 {
        let i = rng.gen_range(1..=3usize);
        let terms = (i..=4).map(|j| (j, vec![q(rng.gen_range(-3..=3)), q(rng.gen_range(-3..=3))])).collect();
        run(&PerturbationSpec::Curve { order: i, terms }, &z).map_err(|e| format!("clause (ii): {e}"))?;
    }
    let f = frame(&g, &z, 2)?;
    let sol = f.continue_in_epsilon(Route::Corollary4(2), &[q(0)], &cfg()).map_err(err)?;
    let center = CurveSeries::new(sol.refined).map_err(err)?;
    let k = analyze(&g, &center, &opts()).map_err(err)?.k().ok_or("center order undetermined")?;
    for _ in 0..20 {
        let spec = PerturbationSpec::Joint {
            tensor: random_tensor(&mut rng, 2 * k as u32)?,
            curve_term: vec![q(rng.gen_range(-3..=3)), q(rng.gen_range(-3..=3))],
            curve_order: 2 * k,
        };
        for a in &alphas {
            let r = perturbation_experiment(&g, &center, &spec, a, &opts(), &cfg()).map_err(err)?;
            ensure(r.contract_holds, format!("clause (iii): {:?}", r.violations))?;
            let kept = r.gate_after.as_ref().is_some_and(|g| g.passed(Route::Corollary1));
            ensure(kept, "clause (iii): gate lost")?;
        }
    }
    Ok("20 experiments per clause at alpha = 1e-3 and 0; clause (iii) keeps the gate".into())
}

fn main() {
    let start = Instant::now();
    let mut failed = Vec::new();
    let mut report = |n: usize, outcome: Outcome| match outcome {
        Ok(detail) => println!("criterion {n}: PASS - {detail}"),
        Err(detail) => {
            println!("criterion {n}: FAIL - {detail}");
            failed.push(n);
        }
    };
    let (c1, clause) = criterion_1();
    report(
        1,
        match (c1, clause) {
            (Ok(detail), None) => Ok(detail),
            (Ok(detail), Some(c)) => Err(format!("{detail}; {c}")),
            (Err(e), _) => Err(e),
        },
    );
    report(2, criterion_2());
    report(3, criterion_3());
    report(4, criterion_4());
    report(5, criterion_5());
    report(6, criterion_6());
    report(7, criterion_7());
    report(8, criterion_8());
    report(9, criterion_9());
    report(10, criterion_10());
    println!("acceptance: {} of 10 passed, failed: {:?} ({:.1?})", 10 - failed.len(), failed, start.elapsed());
}
