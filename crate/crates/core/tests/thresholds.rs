use loophole_core::detect::extend_inputs;
use loophole_core::rational::{rat, Rational};
use loophole_core::threshold::{default_eps, point_threshold, scenario_threshold, ThresholdOptions};
use loophole_core::lp::local_weight;
use loophole_core::vertices::{
    block_extremal, enumerate_binary_extremals, generalized_pr_box, is_vertex, orbit_representatives, BlockSpec,
    GFunction,
};
use loophole_core::Scenario;

fn assert_monotone_trace(r: &loophole_core::threshold::ThresholdResult) {
    let max_local = r.trace.iter().filter(|s| s.is_local()).map(|s| s.eta.clone()).max().unwrap();
    let min_nonlocal = r.trace.iter().filter(|s| !s.is_local()).map(|s| s.eta.clone()).min();
    if let Some(n) = min_nonlocal {
        assert!(max_local < n);
    }
}

#[test]
fn two_two_vertices_reach_two_thirds() {
    let points = enumerate_binary_extremals(Scenario::binary(2, 2).unwrap(), 1 << 20).unwrap();
    assert_eq!(points.len(), 8);
    let opts = ThresholdOptions::candidate(rat(2, 3), default_eps());
    let r = scenario_threshold(&points, &opts).unwrap();
    for p in &r.points {
        assert!(p.candidate.as_ref().unwrap().certified);
        assert_monotone_trace(p);
    }
    assert!(r.lower >= rat(2, 3));
    assert!(r.upper <= rat(2, 3) + default_eps());
}

#[test]
fn three_three_extremals_reach_four_sevenths() {
    let points = enumerate_binary_extremals(Scenario::binary(3, 3).unwrap(), 1 << 20).unwrap();
    let gs: Vec<GFunction> = points.iter().map(|p| GFunction::from_distribution(p).unwrap()).collect();
    let orbits = orbit_representatives(&gs);
    assert_eq!(orbits.iter().map(|(_, n)| n).sum::<usize>(), points.len());
    let reps: Vec<_> = orbits.iter().map(|(g, _)| g.to_distribution()).collect();
    let opts = ThresholdOptions::candidate(rat(4, 7), default_eps());
    let r = scenario_threshold(&reps, &opts).unwrap();
    let four_sevenths = rat(4, 7);
    assert!(r.lower >= four_sevenths);
    assert!(r.upper <= &four_sevenths + default_eps());
    let best = &r.points[r.argmin];
    assert!(best.candidate.as_ref().unwrap().certified);
    assert_eq!(orbits[r.argmin].0, GFunction::generalized_pr(3, 3).unwrap().canonical());
    for p in &r.points {
        assert!(p.lower >= four_sevenths);
        assert_monotone_trace(p);
    }
}

#[test]
fn block_extremals_with_deterministic_inputs_stay_above() {
    let s = Scenario::binary(3, 3).unwrap();
    let opts = ThresholdOptions { gap: rat(1, 64), ..ThresholdOptions::candidate(rat(4, 7), default_eps()) };
    for (g, h) in [(0, 1), (1, 0), (1, 1)] {
        let rows = 3 - 1 - h;
        let cols = 3 - 1 - g;
        for code in 0..(1u32 << (rows * cols)) {
            let core: Vec<Vec<bool>> =
                (0..rows).map(|i| (0..cols).map(|j| (code >> (i * cols + j)) & 1 == 1).collect()).collect();
            let p = block_extremal(s, &BlockSpec { g, h, core }).unwrap();
            if !is_vertex(&p) || local_weight(&p).unwrap().is_local() {
                continue;
            }
            let r = point_threshold(&p, &opts).unwrap();
            assert!(r.candidate.unwrap().local_at_eta);
            assert!(r.lower >= rat(4, 7));
        }
    }
}

#[test]
fn input_extension_keeps_bracket() {
    let pr = generalized_pr_box(2, 2).unwrap();
    let base = point_threshold(&pr, &ThresholdOptions::default()).unwrap();
    for mb in [3, 4] {
        let e = extend_inputs(&pr, mb).unwrap();
        let r = point_threshold(&e, &ThresholdOptions::default()).unwrap();
        assert_eq!((r.lower, r.upper), (base.lower.clone(), base.upper.clone()));
    }
    let e = extend_inputs(&pr, 3).unwrap();
    let r = point_threshold(&e, &ThresholdOptions::candidate(rat(2, 3), default_eps())).unwrap();
    assert!(r.candidate.unwrap().certified);
}

#[test]
fn three_four_row_with_candidate() {
    let pr = generalized_pr_box(3, 4).unwrap();
    let r = point_threshold(&pr, &ThresholdOptions::candidate(rat(5, 9), default_eps())).unwrap();
    assert!(r.candidate.as_ref().unwrap().certified);
    let c = &r.certificate_nonlocal.unwrap();
    assert!(c.w < Rational::from_integer(1.into()));
}
