//! One line per acceptance criterion; exits nonzero if any criterion fails.

use std::time::Instant;

use loophole_core::bell::{bundled, verify_threshold, BellInequality, Verdict};
use loophole_core::detect::{
    apply_detection_map, compare_tables, extend_inputs, mixture_statistics, n_guess_success_scaling,
    simulate_protocol, solve_params_for_eta, strategy_statistics, strategy_threshold, Efficiency, MixtureComponent,
    StrategyKind, StrategyParams,
};
use loophole_core::lp::{local_weight, local_weight_with, Solver};
use loophole_core::rational::{fmt_rational, rat, Rational};
use loophole_core::threshold::{default_eps, point_threshold, ThresholdOptions};
use loophole_core::vertices::{enumerate_binary_extremals, generalized_pr_box, is_vertex, GFunction};
use loophole_core::{convex_combine, Distribution, Scenario};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CAP: u128 = 1 << 20;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn mapped(p: &Distribution, eta: &Rational) -> Distribution {
    apply_detection_map(p, &Efficiency::new(eta.clone()).unwrap()).unwrap()
}

fn pr_thresholds() -> Check {
    let rows = [(2, 2, rat(2, 3)), (2, 3, rat(2, 3)), (2, 4, rat(2, 3)), (3, 3, rat(4, 7)), (3, 4, rat(5, 9)), (4, 4, rat(1, 2))];
    let mut notes = Vec::new();
    for (ma, mb, eta) in rows {
        let pr = generalized_pr_box(ma, mb).unwrap();
        let at = mapped(&pr, &eta);
        let local = local_weight_with(&at, Solver::Auto).map_err(|e| e.to_string())?;
        ensure(local.is_local(), format!("({ma},{mb}) w = {} at {}", fmt_rational(&local.w), fmt_rational(&eta)))?;
        ensure(local.residual.iter().all(Zero::is_zero), format!("({ma},{mb}) decomposition leaves a residual"))?;
        let above_eta = &eta + rat(1, 1000);
        let above = mapped(&pr, &above_eta);
        let nonlocal = local_weight_with(&above, Solver::Auto).map_err(|e| e.to_string())?;
        ensure(nonlocal.w < Rational::one(), format!("({ma},{mb}) local at {}", fmt_rational(&above_eta)))?;
        let b = BellInequality::from_dual(above.scenario(), nonlocal.dual.clone()).unwrap();
        ensure(b.evaluate(&above).unwrap() == nonlocal.w, "dual value differs from w")?;
        ensure(b.local_bound(CAP).unwrap() >= Rational::one(), "dual is not a Bell inequality")?;
        notes.push(format!("({ma},{mb}) {}", fmt_rational(&eta)));
    }
    Ok(notes.join(", "))
}

fn strategy_formulas() -> Check {
    for ma in 2..=10usize {
        for mb in 2..=10usize {
            let (a, b) = (ma as i64, mb as i64);
            let got = strategy_threshold(StrategyKind::SingleGuess, ma, mb);
            ensure(got == Some(rat(a + b - 2, a * b - 1)), format!("single-guess ({ma},{mb}) gave {got:?}"))?;
        }
    }
    for m in 3..=10usize {
        let got = strategy_threshold(StrategyKind::TwoGuess, m, m);
        ensure(got == Some(rat(4, m as i64 + 4)), format!("two-guess ({m},{m}) gave {got:?}"))?;
    }
    for (m, v) in [(3, rat(4, 7)), (4, rat(1, 2)), (5, rat(4, 9))] {
        ensure(strategy_threshold(StrategyKind::TwoGuess, m, m) == Some(v), format!("two-guess ({m},{m})"))?;
    }
    Ok("single-guess on 2..=10 squared, two-guess m = 3..=10".into())
}

fn strategy_consistency() -> Check {
    for m in 2..=5usize {
        let eta = rat(4, m as i64 + 4);
        let params = solve_params_for_eta(StrategyKind::TwoGuess, m, m, &eta).ok_or(format!("no parameters for m = {m}"))?;
        let pr = generalized_pr_box(m, m).unwrap();
        let stats = strategy_statistics(StrategyKind::TwoGuess, &pr, &params).map_err(|e| e.to_string())?;
        ensure(stats == mapped(&pr, &eta), format!("m = {m} differs from the detection map"))?;
    }
    Ok("two-guess = D_eta exactly for m = 2..=5".into())
}

fn mixing() -> Check {
    let pr = generalized_pr_box(3, 4).unwrap();
    let components = [
        MixtureComponent { weight: rat(1, 5), kind: StrategyKind::SingleGuess, alpha: Rational::one() },
        MixtureComponent { weight: rat(4, 5), kind: StrategyKind::TwoGuess, alpha: Rational::one() },
    ];
    let mix = mixture_statistics(&pr, &components, &rat(2, 27)).map_err(|e| e.to_string())?;
    ensure(mix == mapped(&pr, &rat(5, 9)), "mixture differs from D_{5/9}")?;
    Ok("(3,4) mixture = D_{5/9}".into())
}

fn appendix() -> Check {
    let cases = [("appendix_b1", 2, 2, rat(2, 3)), ("appendix_b2", 3, 3, rat(4, 7)), ("appendix_b3", 4, 4, rat(1, 2)), ("appendix_b4", 3, 4, rat(5, 9))];
    let mut notes = Vec::new();
    for (name, ma, mb, eta) in cases {
        let s = bundled(name).map_err(|e| e.to_string())?;
        let proof = verify_threshold(&s, &generalized_pr_box(ma, mb).unwrap(), &eta, CAP).map_err(|e| e.to_string())?;
        ensure(proof.local_bound == Rational::one(), format!("{name} local bound {}", fmt_rational(&proof.local_bound)))?;
        ensure(proof.value_at_eta_star == Rational::one(), format!("{name} v(eta*) != 1"))?;
        ensure(proof.verdict == Verdict::Pass, format!("{name}: {}", proof.reason))?;
        let [c0, c1, c2] = [&proof.polynomial[0], &proof.polynomial[1], &proof.polynomial[2]];
        notes.push(format!("{name} v = {} + {}e + {}e^2", fmt_rational(c0), fmt_rational(c1), fmt_rational(c2)));
    }
    Ok(notes.join("; "))
}

fn dual_soundness() -> Check {
    let s = Scenario::binary(2, 2).unwrap();
    let pr = generalized_pr_box(2, 2).unwrap();
    let uniform = Distribution::uniform(s);
    let vertices: Vec<Distribution> = loophole_core::vertices::local_deterministic_vertices(s).collect();
    ensure(vertices.len() == 16, "expected 16 deterministic vertices")?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let lambda = rat(rng.random_range(501..=1000), 1000);
        let q = convex_combine(&[(lambda.clone(), pr.clone()), (Rational::one() - &lambda, uniform.clone())]).unwrap();
        let r = local_weight(&q).map_err(|e| e.to_string())?;
        ensure(r.w < Rational::one(), format!("weight-{} mixture is local", fmt_rational(&lambda)))?;
        ensure(q.dot(&r.dual) == r.w, "b.q != w")?;
        let min = vertices.iter().map(|d| d.dot(&r.dual)).min().unwrap();
        ensure(min >= Rational::one(), format!("min b.d = {}", fmt_rational(&min)))?;
    }
    Ok("100 PR/uniform mixtures".into())
}

fn monte_carlo() -> Check {
    let pr = generalized_pr_box(2, 2).unwrap();
    let params = StrategyParams::new(rat(1, 2), rat(1, 9)).unwrap();
    let sim = simulate_protocol(StrategyKind::TwoGuess, &pr, &params, 1_000_000, 7).map_err(|e| e.to_string())?;
    let exact = strategy_statistics(StrategyKind::TwoGuess, &pr, &params).unwrap();
    let cmp = compare_tables(&sim, &exact).map_err(|e| e.to_string())?;
    ensure(cmp.max_tv < 5e-3, format!("TV {:.2e}", cmp.max_tv))?;
    ensure(cmp.max_z < 5.0, format!("max deviation {:.2} standard errors", cmp.max_z))?;
    Ok(format!("TV {:.2e}, max |z| {:.2}", cmp.max_tv, cmp.max_z))
}

fn input_extension() -> Check {
    let pr = generalized_pr_box(2, 2).unwrap();
    let extended = extend_inputs(&pr, 3).map_err(|e| e.to_string())?;
    let r = point_threshold(&extended, &ThresholdOptions::candidate(rat(2, 3), default_eps())).map_err(|e| e.to_string())?;
    ensure(r.candidate.as_ref().is_some_and(|c| c.certified), "extended PR not certified at 2/3")?;
    let (ma, mb) = (3usize, 5usize);
    ensure(mb > ma.next_power_of_two(), "bad sample scenario")?;
    for code in 0..(1u64 << (ma * mb)) {
        let g = GFunction::from_code(ma, mb, code).unwrap();
        ensure(!g.equivalent_columns().is_empty(), format!("G code {code} has no equivalent column pair"))?;
    }
    Ok(format!("certified at 2/3; all {} G on (3,5) repeat a column", 1u64 << 15))
}

fn enumeration() -> Check {
    let s = Scenario::binary(2, 2).unwrap();
    let ext = enumerate_binary_extremals(s, CAP).map_err(|e| e.to_string())?;
    ensure(ext.len() == 8, format!("{} nonlocal vertices", ext.len()))?;
    for p in &ext {
        ensure(local_weight(p).unwrap().w.is_zero(), "nonzero local weight")?;
        ensure(is_vertex(p), "not a vertex")?;
    }
    let total = ext.len() as u128 + s.deterministic_count();
    ensure(total == 24, format!("{total} vertices in total"))?;
    Ok("8 nonlocal + 16 local = 24".into())
}

fn scaling() -> Check {
    for ma in 3..=12usize {
        let values: Vec<Rational> = (1..=ma).map(|n| n_guess_success_scaling(n, ma).unwrap()).collect();
        let max = values.iter().max().unwrap();
        let argmax: Vec<usize> = (1..=ma).filter(|n| values[n - 1] == *max).collect();
        ensure(argmax == vec![1, 2], format!("mA = {ma}: maximum at {argmax:?}"))?;
    }
    Ok("maximum at n in {1,2} for mA = 3..=12".into())
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("PR-box thresholds with exact certificates", pr_thresholds),
        ("strategy threshold formulas", strategy_formulas),
        ("two-guess statistics equal the detection map", strategy_consistency),
        ("(3,4) strategy mixture", mixing),
        ("bundled inequalities appendix_b1 to appendix_b4", appendix),
        ("dual certificate soundness", dual_soundness),
        ("Monte Carlo fidelity", monte_carlo),
        ("input extension invariance", input_extension),
        ("enumeration sanity", enumeration),
        ("n-guess scaling", scaling),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} ({detail}) [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name}: {why} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
