use std::sync::Arc;

use proptest::prelude::*;

use superclose::forms::assemble_matrix;
use superclose::linalg::dot;
use superclose::mesh::{build_uniform_interval, build_uniform_square, classify_pair, perturb_node_nearest};
use superclose::norms::{cross_mesh_norm, fe_norm};
use superclose::space::build_space;
use superclose::study::{
    reference_tables, run_perturbed_form_study, run_projection_study, run_regularity_study, Perturbation,
};
use superclose::{BilinearFormSpec, Delta, FeFunction, NormSpec};

fn perturbed_bound_holds(dim: usize, n: usize, degree: usize, delta: f64, v: &[f64], w: &[f64]) -> bool {
    let mesh = Arc::new(if dim == 1 {
        build_uniform_interval(n).unwrap()
    } else {
        build_uniform_square(n).unwrap()
    });
    let space = build_space(mesh, degree, true).unwrap();
    let base = BilinearFormSpec::Stiffness;
    let plus = BilinearFormSpec::mass_perturbed(base.clone(), Delta::Finite(delta));
    let a = assemble_matrix(&space, &base).unwrap();
    let ap = assemble_matrix(&space, &plus).unwrap();
    let m = space.n_free();
    let (v, w) = (&v[..m], &w[..m]);
    let diff = dot(v, &ap.matrix.matvec(w)) - dot(v, &a.matrix.matvec(w));
    let fv = FeFunction::from_free(space.clone(), v).unwrap();
    let fw = FeFunction::from_free(space.clone(), w).unwrap();
    let bound = space.mesh().h().powf(delta) * fe_norm(&fv, &NormSpec::l2()).unwrap() * fe_norm(&fw, &NormSpec::l2()).unwrap();
    diff.abs() <= bound * (1.0 + 1e-10) + 1e-14
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn perturbed_form_difference_is_bounded(
        dim in 1usize..=2,
        degree in 1usize..=2,
        n in 2usize..=6,
        delta in 0.0f64..3.0,
        v in prop::collection::vec(-1.0f64..1.0, 256),
        w in prop::collection::vec(-1.0f64..1.0, 256),
    ) {
        prop_assert!(perturbed_bound_holds(dim, n, degree, delta, &v, &w));
    }

    #[test]
    fn cross_mesh_triangle_inequality(
        n in 4usize..=8,
        degree in 1usize..=2,
        frac in -0.4f64..0.4,
        a in prop::collection::vec(-1.0f64..1.0, 256),
        b in prop::collection::vec(-1.0f64..1.0, 256),
    ) {
        let u = Arc::new(build_uniform_square(n).unwrap());
        let h = 2f64.sqrt() / n as f64;
        let p = Arc::new(perturb_node_nearest(&u, [0.5, 0.5], [frac * h, 0.0]).unwrap());
        let pair = classify_pair(p.clone(), u.clone(), 2.0).unwrap();
        let sp = build_space(p, degree, true).unwrap();
        let su = build_space(u, degree, true).unwrap();
        let f = FeFunction::from_free(sp.clone(), &a[..sp.n_free()]).unwrap();
        let g = FeFunction::from_free(su.clone(), &b[..su.n_free()]).unwrap();
        let zero = FeFunction::zero(su);
        for spec in [NormSpec::l2(), NormSpec::h1()] {
            let d = cross_mesh_norm(&f, &g, &pair, &spec).unwrap();
            let via_zero = cross_mesh_norm(&f, &zero, &pair, &spec).unwrap() + fe_norm(&g, &spec).unwrap();
            prop_assert!(d <= via_zero * (1.0 + 1e-12));
        }
    }
}

#[test]
fn studies_are_deterministic() {
    for id in [2, 5] {
        let cfg = &reference_tables(id).unwrap()[0].config;
        let a = run_projection_study(cfg).unwrap();
        let b = run_projection_study(cfg).unwrap();
        assert_eq!(a.rows, b.rows);
    }
}

#[test]
fn shipped_tables_meet_predicted_orders() {
    for id in 1..=6 {
        for t in reference_tables(id).unwrap() {
            let r = run_projection_study(&t.config).unwrap();
            for j in 0..r.norms.len() {
                let fin = r.final_order(j).unwrap();
                let pred = r.predicted[j].unwrap();
                assert!(
                    fin >= pred - 0.1 && fin <= pred + 0.15,
                    "{} {}: final order {fin} against predicted {pred}",
                    t.name,
                    r.norms[j]
                );
            }
        }
    }
}

#[test]
fn naive_bound_holds_on_one_dimensional_tables() {
    for id in 1..=3 {
        for t in reference_tables(id).unwrap() {
            let mut cfg = t.config.clone();
            cfg.naive_bound = true;
            cfg.levels = 4;
            let r = run_projection_study(&cfg).unwrap();
            assert!(superclose::study::naive_bound_holds(&r), "{}", t.name);
        }
    }
}

#[test]
fn identical_forms_on_identical_meshes_vanish() {
    let r = run_perturbed_form_study(1, Delta::Infinite, 3, Perturbation::None).unwrap();
    for row in &r.rows {
        assert!(row.norm_values.iter().all(|v| *v < 1e-10), "{:?}", row.norm_values);
    }
}

#[test]
fn zero_delta_prediction() {
    let r = run_perturbed_form_study(1, Delta::Finite(0.0), 2, Perturbation::None).unwrap();
    let j = r.norm_index(&NormSpec::h1()).unwrap();
    assert_eq!(r.predicted[j], Some(2.0));
}

#[test]
fn regularity_orders_approach_limits_for_large_p() {
    let r = run_regularity_study(100.0, 6).unwrap();
    let l2 = r.final_order(r.norm_index(&NormSpec::l2()).unwrap()).unwrap();
    let h1 = r.final_order(r.norm_index(&NormSpec::h1()).unwrap()).unwrap();
    assert!((l2 - 2.49).abs() < 0.05, "{l2}");
    assert!((h1 - 1.49).abs() < 0.05, "{h1}");
}
