mod common;

use common::{classify_literal, edge_fixture, fixture_params, uniform_ball};
use hpv_core::geometry::Point;
use hpv_core::ppp::SliceSource;
use hpv_core::pseudopath::{
    audit_bounded_intersections, audit_cert_ball, certificate, classify_in, count_good_pseudopaths,
    estimate_good_counts, good_count_bound, EdgeType, PseudoEdgeParams, DEFAULT_TUPLE_BUDGET,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn slot(t: Option<EdgeType>) -> usize {
    match t {
        Some(EdgeType::I) => 0,
        Some(EdgeType::II) => 1,
        Some(EdgeType::III) => 2,
        Some(EdgeType::IV) => 3,
        None => 4,
    }
}

#[test]
fn classifier_matches_clause_oracle_and_certificates_suffice() {
    let p = fixture_params();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut hist = [0usize; 5];
    for case in 0..1000 {
        let f = edge_fixture(&mut rng, &p);
        let got = classify_in(f.prev.as_ref(), &f.u, &f.v, &f.z, &p).unwrap();
        let mut want = classify_literal(f.prev.as_ref(), &f.u, &f.v, &f.z, &p, 2000);
        if got != want {
            want = classify_literal(f.prev.as_ref(), &f.u, &f.v, &f.z, &p, 400_000);
        }
        assert_eq!(got, want, "case {case}");
        let cert = certificate(&f.u, &f.v, &p).unwrap();
        let inside: Vec<Point> = f.z.iter().filter(|x| cert.contains(x)).copied().collect();
        let reduced = classify_in(f.prev.as_ref(), &f.u, &f.v, &inside, &p).unwrap();
        assert_eq!(reduced, got, "case {case}: certificate not sufficient");
        hist[slot(got)] += 1;
    }
    assert!(hist.iter().all(|&c| c >= 20), "{hist:?}");
}

/// Enumerates ordered black tuples and classifies each edge literally.
fn literal_counts(pts: &[Point], black: &[bool], k: usize, p: &PseudoEdgeParams) -> Vec<u64> {
    let blacks: Vec<Point> = pts
        .iter()
        .zip(black)
        .filter(|(_, &b)| b)
        .map(|(x, _)| *x)
        .collect();
    let mut counts = vec![0u64; k];
    let mut stack: Vec<Vec<Point>> = vec![vec![Point::ORIGIN]];
    while let Some(path) = stack.pop() {
        if path.len() > k {
            continue;
        }
        for v in &blacks {
            if path.contains(v) {
                continue;
            }
            let n = path.len();
            let prev = (n >= 2).then(|| path[n - 2]);
            if classify_literal(prev.as_ref(), &path[n - 1], v, pts, p, 20_000) == Some(EdgeType::I)
            {
                counts[n - 1] += 1;
                let mut next = path.clone();
                next.push(*v);
                stack.push(next);
            }
        }
    }
    counts
}

#[test]
fn good_counts_match_tuple_enumeration() {
    let p = PseudoEdgeParams::new(2.5, 0.8, 0.8, 0.6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut total = 0;
    for case in 0..60 {
        let pts = uniform_ball(&mut rng, 14, 5.0);
        let black: Vec<bool> = pts.iter().map(|_| rng.random::<f64>() < 0.6).collect();
        let mut src = SliceSource {
            points: &pts,
            black: &black,
        };
        let got = count_good_pseudopaths(&mut src, 3, &p, DEFAULT_TUPLE_BUDGET).unwrap();
        assert_eq!(got, literal_counts(&pts, &black, 3, &p), "case {case}");
        total += got[0];
    }
    assert!(total > 30, "{total}");
}

#[test]
fn first_generation_respects_bound() {
    let lambda: f64 = 0.05;
    let eps = 0.5;
    let p = (1.0 - eps) * PI / 3.0 * lambda;
    let params = PseudoEdgeParams::for_lambda(lambda, 2.0, 6.0, 0.2).unwrap();
    let g = estimate_good_counts(lambda, p, &params, 1, 3, 400).unwrap();
    let bound = good_count_bound(eps, params.w2, 1);
    assert!(
        g[0].mean <= bound + 3.0 * g[0].std_error,
        "{:?} vs {bound}",
        g[0]
    );
}

#[test]
fn good_counts_decay_with_length() {
    let lambda: f64 = 0.1;
    let p = 0.5 * PI / 3.0 * lambda;
    let params = PseudoEdgeParams::for_lambda(lambda, 2.0, 4.0, 0.2).unwrap();
    let g = estimate_good_counts(lambda, p, &params, 3, 5, 200).unwrap();
    assert!(g[1].mean < g[0].mean && g[2].mean < g[1].mean, "{g:?}");
}

#[test]
fn junction_and_intersection_audits() {
    let params = PseudoEdgeParams::new(8.0, 1.0, 1.0, 0.5).unwrap();
    let a = audit_cert_ball(&params, 0.5, 3, 200, 2000, 1).unwrap();
    assert!(a.qualifying > 50);
    // Overlaps stay near the junction, well inside the edge length.
    assert!(a.h_emp < params.r - params.w1, "{a:?}");
    let b = audit_bounded_intersections(&params, 12, 2000, 2).unwrap();
    assert_eq!(b.violations, 0, "{b:?}");
}
