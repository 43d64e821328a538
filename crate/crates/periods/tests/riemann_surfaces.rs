use num_complex::Complex64;
use xns_periods::poly::BiPoly;
use xns_periods::riemann::{self, Path, PeriodMatrix};
use xns_periods::{elliptic_lattices, lattice_membership};

const BITS: u32 = 256;
const TOL: f64 = 1e-12;

fn check_memberships(pm: &PeriodMatrix, lattice_rows: &[usize]) {
    let ell = elliptic_lattices().unwrap();
    for (r, &e) in lattice_rows.iter().enumerate() {
        for (j, v) in pm.omega[r].iter().enumerate() {
            let m = lattice_membership(*v, ell[e]);
            assert!(m.rel_error < 1e-5, "{} row {r} column {j}: {:?}", pm.curve, m);
        }
    }
}

fn check_topology(pm: &PeriodMatrix, g: usize) {
    let m = &pm.monodromy;
    assert_eq!(m.genus, g);
    assert!(m.transitive);
    assert!(m.relation_holds, "loop product differs from the circle at infinity");
    assert_eq!(pm.intersection.len(), 2 * g);
    assert!(
        pm.homology_consistent(1e-10),
        "J det {} first {:e} second {:?}",
        pm.intersection_det,
        pm.riemann_first,
        pm.riemann_second
    );
    for c in &pm.cycles {
        assert!(m.is_closed(c), "open cycle {}", c.word);
    }
    for a in &pm.cycles {
        for b in &pm.cycles {
            assert_eq!(m.intersection(a, b), -m.intersection(b, a));
        }
    }
    assert!(pm.condition.is_finite());
}

#[test]
fn xns_model_matches_expanded_form() {
    let expected = BiPoly::from_terms(&[
        (16, 12, 0),
        (1936, 10, 0),
        (48, 8, 2),
        (63888, 8, 0),
        (161051, 6, 0),
        (48, 4, 4),
        (29282, 4, 2),
        (-605, 2, 4),
        (16, 0, 6),
    ]);
    let f = riemann::plane_model_xns().f;
    assert_eq!(f.sub(&expected).deg_z(), 0);
    assert!(f.sub(&expected).c.iter().all(|p| p.is_zero()));
    assert_eq!(f.deg_z(), 6);
}

#[test]
fn xns_model_vanishes_on_series_point() {
    let f = riemann::plane_model_xns().f;
    let r = riemann::series_check(&f, 60).unwrap();
    assert!(r.all_pass(), "{r}");
    assert!(riemann::series_check(&riemann::xns_cleared(), 60).unwrap().all_pass());
    let bad = f.add(&BiPoly::constant(1));
    let r = riemann::series_check(&bad, 60).unwrap();
    assert!(!r.all_pass());
}

#[test]
fn fiber_count_matches_z_degree() {
    let c = riemann::plane_model_xns();
    let t = Complex64::new(0.37, 0.21);
    let z = riemann::fiber_at(&c, t);
    assert_eq!(z.len(), 6);
    for w in z {
        let (v, dv) = c.f.eval_c64(t, w);
        assert!(v.norm() < 1e-9 * dv.norm().max(1.0));
    }
}

#[test]
fn null_homotopic_loop_integrates_to_zero() {
    let c = riemann::plane_model_xns();
    let center = Complex64::new(3.0, 0.5);
    let path = Path::Circle { center, radius: 0.3, start: 0.0 };
    let z0 = riemann::fiber_at(&c, center + 0.3);
    let (z1, ints) = riemann::integrate(&c, &path, &z0, TOL).unwrap();
    for (a, b) in z0.iter().zip(&z1) {
        assert!((a - b).norm() < 1e-10);
    }
    for row in ints {
        for v in row {
            assert!(v.norm() < 1e-10, "{v}");
        }
    }
}

#[test]
fn genus2_periods() {
    let pm = riemann::omega_genus2(BITS, TOL).unwrap();
    check_topology(&pm, 2);
    assert_eq!(pm.omega.len(), 2);
    assert_eq!(pm.omega[0].len(), 4);
    check_memberships(&pm, &[0, 3]);
}

#[test]
fn xns_periods() {
    let pm = riemann::omega_ns(BITS, TOL).unwrap();
    check_topology(&pm, 4);
    assert_eq!(pm.monodromy.degree, 6);
    check_memberships(&pm, &[0, 1, 2, 3]);
}

#[test]
fn periods_stable_under_tighter_quadrature() {
    let c = riemann::plane_model_xns();
    let d = riemann::stability(&c, BITS, 1e-10).unwrap();
    assert!(d < 1e-9, "{d:e}");
}

#[test]
fn audit_dump_lists_branch_points_and_words() {
    let pm = riemann::omega_genus2(BITS, TOL).unwrap();
    let v: serde_json::Value = serde_json::to_value(&pm).unwrap();
    assert_eq!(v["monodromy"]["loops"].as_array().unwrap().len(), 6);
    assert!(v["cycles"][0]["word"].is_string());
}
