use meshshape::fem::{self, RhsField};
use meshshape::linalg;
use meshshape::mesh::{
    edge_length, is_admissible, make_disc_mesh, regularized_distance, signed_area, uniform_refine, ConnectivityComplex,
    Mesh, SmoothingParam, VertexConfig,
};
use meshshape::metrics::{sherman_morrison, ElasticityParams, LocalMetric, MetricSpec};
use meshshape::penalty::{grad_phi, phi, phi_terms, quality_reciprocal, theta, PenaltyParams};
use meshshape::{Covector, TangentVector};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = [f64; 2]> {
    (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y)| [x, y])
}

/// Positively oriented, not too flat triangles.
fn triangle() -> impl Strategy<Value = [[f64; 2]; 3]> {
    (point(), point(), point())
        .prop_map(|(a, b, c)| {
            let area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
            if area < 0.0 {
                [a, c, b]
            } else {
                [a, b, c]
            }
        })
        .prop_filter("degenerate", |p| {
            let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]));
            area > 1e-3
        })
}

fn single(p: [[f64; 2]; 3]) -> (ConnectivityComplex, VertexConfig) {
    (
        ConnectivityComplex::new(vec![[0, 1, 2]], 3).unwrap(),
        VertexConfig::new(p.to_vec()).unwrap(),
    )
}

/// disc:`rings` with every vertex moved by at most `amp / rings` (keeps the
/// mesh admissible for amp < 0.25).
fn jittered_disc(rings: usize, amp: f64) -> impl Strategy<Value = Mesh> {
    let n = make_disc_mesh(rings).coords.num_vertices();
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n).prop_map(move |offsets| {
        let mut m = make_disc_mesh(rings);
        let h = amp / rings as f64;
        for (i, (dx, dy)) in offsets.into_iter().enumerate() {
            let p = m.coords.point(i);
            m.coords.set_point(i, [p[0] + h * dx, p[1] + h * dy]);
        }
        m
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weitzenboeck_bound(p in triangle()) {
        let (_, q) = single(p);
        prop_assert!(quality_reciprocal(&q, &[0, 1, 2]).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn isoperimetric_inequality(p in triangle()) {
        let (_, q) = single(p);
        let t = [0, 1, 2];
        let perimeter: f64 = (0..3).map(|l| edge_length(&q, &t, l)).sum();
        prop_assert!(signed_area(&q, &t) <= perimeter * perimeter / (12.0 * 3f64.sqrt()) * (1.0 + 1e-12));
    }

    #[test]
    fn heights_are_twice_area_over_base(p in triangle()) {
        let (_, q) = single(p);
        let t = [0, 1, 2];
        for l in 0..3 {
            let h = meshshape::mesh::height(&q, &t, l).unwrap();
            prop_assert!((h * edge_length(&q, &t, l) - 2.0 * signed_area(&q, &t)).abs() < 1e-9);
        }
    }

    #[test]
    fn regularized_distance_bounds(v in point(), a in point(), b in point(), mu in 0.01..1.0f64) {
        prop_assume!(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() > 1e-3);
        let mu = SmoothingParam::new(mu).unwrap();
        let q = VertexConfig::new(vec![v, a, b]).unwrap();
        let d = regularized_distance(&q, 0, [1, 2], mu).unwrap();
        prop_assert!(d >= 0.0);
        // Bounded by the 1-norm-like distance |eta| + (xi)_- + (xi - L)_+.
        let e = [b[0] - a[0], b[1] - a[1]];
        let l = (e[0] * e[0] + e[1] * e[1]).sqrt();
        let w = [v[0] - a[0], v[1] - a[1]];
        let xi = (w[0] * e[0] + w[1] * e[1]) / l;
        let eta = (e[0] * w[1] - e[1] * w[0]) / l;
        prop_assert!(d <= eta.abs() + (-xi).max(0.0) + (xi - l).max(0.0) + 1e-12);
    }

    #[test]
    fn penalty_is_rigid_motion_invariant(m in jittered_disc(2, 0.2), angle in -3.1..3.1f64, sx in -5.0..5.0f64, sy in -5.0..5.0f64) {
        let params = PenaltyParams::new([1.0, 0.5, 0.3, 0.1]);
        let qref = make_disc_mesh(2).coords;
        let base = phi(&m.coords, &qref, &m.complex, &params).unwrap();
        let moved = phi(&m.coords.rigid_motion(angle, [sx, sy]), &qref.rigid_motion(angle, [sx, sy]), &m.complex, &params).unwrap();
        prop_assert!((base - moved).abs() <= 1e-10 * base.abs().max(1.0));
    }

    #[test]
    fn quality_and_area_terms_survive_refinement(m in jittered_disc(2, 0.2)) {
        let params = PenaltyParams::new([1.0, 0.5, 0.0, 0.0]);
        let r = uniform_refine(&m.complex, &m.coords).unwrap();
        let a = phi_terms(&m.coords, &m.coords, &m.complex, &params).unwrap();
        let b = phi_terms(&r.coords, &r.coords, &r.complex, &params).unwrap();
        prop_assert!((a.quality - b.quality).abs() < 1e-12 * a.quality);
        prop_assert!((a.area - b.area).abs() < 1e-12 * a.area);
    }

    #[test]
    fn grad_phi_matches_central_differences(m in jittered_disc(2, 0.2)) {
        let params = PenaltyParams::new([1.0, 0.5, 0.2, 0.1]);
        let qref = make_disc_mesh(2).coords;
        let g = grad_phi(&m.coords, &qref, &m.complex, &params).unwrap();
        let base = m.coords.to_vec();
        let h = 1e-6;
        let mut err: f64 = 0.0;
        for k in 0..base.len() {
            let mut p = base.clone();
            let mut q = base.clone();
            p[k] += h;
            q[k] -= h;
            let fp = phi(&VertexConfig::from_vec(&p).unwrap(), &qref, &m.complex, &params).unwrap();
            let fq = phi(&VertexConfig::from_vec(&q).unwrap(), &qref, &m.complex, &params).unwrap();
            err = err.max((g[k] - (fp - fq) / (2.0 * h)).abs());
        }
        prop_assert!(err <= 1e-6 * max_abs(&g).max(1.0), "{err}");
    }

    #[test]
    fn theta_is_at_least_one(m in jittered_disc(3, 0.2)) {
        prop_assert!(theta(&m.coords, &m.complex).unwrap() >= 1.0);
        prop_assert!(is_admissible(&m.complex, &m.coords, true));
    }

    #[test]
    fn metrics_are_spd_and_inverted_exactly(m in jittered_disc(2, 0.2), seed in 0u64..1000) {
        let n = 2 * m.coords.num_vertices();
        let vec_of = |s: u64| -> Vec<f64> { (0..n).map(|i| ((i as f64 + 1.0) * (s as f64 + 0.5) * 0.7548).sin()).collect() };
        let specs = [
            MetricSpec::Euclidean,
            MetricSpec::Elasticity(ElasticityParams::default()),
            MetricSpec::complete(PenaltyParams::metric_preset(), make_disc_mesh(2).coords).unwrap(),
        ];
        for spec in &specs {
            let g = spec.at(&m.coords, &m.complex).unwrap();
            let v = TangentVector(vec_of(seed));
            let w = TangentVector(vec_of(seed + 17));
            let (gv, gw) = (g.apply(&v), g.apply(&w));
            prop_assert!((gv.apply(&w) - gw.apply(&v)).abs() <= 1e-12 * gv.norm().max(1.0) * w.norm());
            prop_assert!(gv.apply(&v) > 0.0);
            let d = Covector(vec_of(seed + 3));
            let x = g.to_gradient(&d);
            let back = g.apply(&x);
            let res: Vec<f64> = back.iter().zip(d.iter()).map(|(a, b)| a - b).collect();
            prop_assert!(linalg::norm(&res) <= 1e-10 * d.norm());
            prop_assert!(d.apply(&x) > 0.0);
            if let LocalMetric::Complete { g } = &g {
                let sm = sherman_morrison(g, &d);
                prop_assert!(x.iter().zip(&sm).all(|(a, b)| (a - b).abs() <= 1e-12));
            }
        }
    }

    #[test]
    fn stiffness_is_symmetric_with_zero_row_sums(m in jittered_disc(3, 0.2)) {
        let sys = fem::assemble(&m.coords, &m.complex, &RhsField::Model).unwrap();
        prop_assert!(sys.stiffness.is_symmetric(1e-14));
        prop_assert!(sys.stiffness.row_sums().iter().all(|s| s.abs() < 1e-12));
    }

    #[test]
    fn objective_is_translation_invariant_for_constant_rhs(m in jittered_disc(2, 0.2), sx in -3.0..3.0f64, sy in -3.0..3.0f64) {
        let rhs = RhsField::Constant(1.0);
        let a = fem::reduced_objective(&m.coords, &m.complex, &rhs).unwrap();
        let b = fem::reduced_objective(&m.coords.rigid_motion(0.0, [sx, sy]), &m.complex, &rhs).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}
