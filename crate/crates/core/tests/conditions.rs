use mincheck_core::catalog::instantiate;
use mincheck_core::conditions::{
    check_cylinder, check_sphere, check_torus, recover_constants, run_check, Branch, CheckError,
    CheckKind, Tolerances, Verdict,
};
use mincheck_core::geometry::{FrameSplit, Split};
use mincheck_core::parse;
use mincheck_core::report::{generate_samples, SamplePlan};

fn samples(spec: &mincheck_core::ImmersionSpec, seed: u64) -> Vec<Vec<f64>> {
    let plan = SamplePlan {
        seed,
        ..SamplePlan::default()
    };
    generate_samples(&plan, &spec.domain_box).unwrap()
}

fn p(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[test]
fn clifford_torus_eigenvalue() {
    let inst = instantiate("clifford_torus", &[]).unwrap();
    let r = check_sphere(&inst.spec, &samples(&inst.spec, 0), Tolerances::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Satisfied);
    assert!((r.recovered["c"] - 1.0).abs() < 1e-12);
    assert!((r.recovered["eigen"] - 2.0).abs() < 1e-12);
    assert!(r.residual_max <= 1e-10);
}

#[test]
fn plane_has_no_sphere_constant() {
    let inst = instantiate("plane", &[]).unwrap();
    let r = check_sphere(&inst.spec, &samples(&inst.spec, 0), Tolerances::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Violated);
    assert_eq!(r.recovered["c"], 0.0);
    assert!(!r.notes.is_empty());
}

#[test]
fn latitude_circle_off_the_sphere_condition() {
    let inst = instantiate("latitude_circle", &p(&[("z0", 0.5)])).unwrap();
    let r = check_sphere(&inst.spec, &samples(&inst.spec, 0), Tolerances::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Violated);
    assert!(r.residual_max >= 0.3, "{}", r.residual_max);

    let frame = inst.frame.as_ref().unwrap();
    let r = check_cylinder(
        &inst.spec,
        frame,
        &samples(&inst.spec, 0),
        Tolerances::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Satisfied);
    assert!((r.recovered["r2"] - 0.75).abs() < 1e-12);
    assert!((r.recovered["c"] - 1.0 / 0.75).abs() < 1e-12);
}

#[test]
fn example34_cylinder_constants() {
    let inst = instantiate("example34", &p(&[("n", 2.0), ("a", 1.5f64.sqrt())])).unwrap();
    let b = inst.spec.param("b").unwrap();
    assert!((b * b - 0.75).abs() < 1e-12);
    let frame = inst.frame.as_ref().unwrap();
    let r = check_cylinder(
        &inst.spec,
        frame,
        &samples(&inst.spec, 4),
        Tolerances::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Satisfied);
    assert!((r.recovered["c"] - 1.0).abs() < 1e-8);
    assert!((r.recovered["r2"] - 1.0).abs() < 1e-12);
    assert!(r.spread["r2"] <= 1e-10);
    let s = &r.observed["flat_t2"];
    assert!((s.mean - 0.5).abs() < 1e-12 && s.spread < 1e-12);
    assert!(r.residual_max <= 1e-8);
}

#[test]
fn right_cylinder_and_helix() {
    for id in ["right_cylinder", "helix_graph"] {
        let inst = instantiate(id, &[]).unwrap();
        let frame = inst.frame.as_ref().unwrap();
        let r = check_cylinder(
            &inst.spec,
            frame,
            &samples(&inst.spec, 2),
            Tolerances::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Satisfied, "{id}");
        assert!((r.recovered["c"] - 1.0).abs() < 1e-12, "{id}");
        assert!((r.observed["flat_t2"].mean - 1.0).abs() < 1e-12, "{id}");
    }
}

#[test]
fn wavy_cylinder_curve_is_rejected() {
    let inst = instantiate("cylinder_wave", &[]).unwrap();
    let frame = inst.frame.as_ref().unwrap();
    let r = check_cylinder(
        &inst.spec,
        frame,
        &samples(&inst.spec, 2),
        Tolerances::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Violated);
}

#[test]
fn product_of_circles_takes_sphere_branch() {
    let inst = instantiate("product_circles", &[]).unwrap();
    let frame = inst.frame.as_ref().unwrap();
    let r = check_torus(
        &inst.spec,
        frame,
        &samples(&inst.spec, 0),
        Tolerances::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Satisfied);
    assert_eq!(r.branch, Some(Branch::SphereMinimal));
    assert!((r.observed["first_block_t2"].mean - 1.0).abs() < 1e-12);
    assert!((r.observed["n1_norm2"].mean - 1.0).abs() < 1e-12);
}

#[test]
fn diagonal_circle_block_sums() {
    let inst = instantiate("diagonal_circle", &[]).unwrap();
    let frame = inst.frame.as_ref().unwrap();
    let r = check_torus(
        &inst.spec,
        frame,
        &samples(&inst.spec, 0),
        Tolerances::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Satisfied);
    assert_eq!(r.branch, Some(Branch::SphereMinimal));
    assert!((r.observed["first_block_t2"].mean - 0.5).abs() < 1e-12);
    assert!((r.observed["second_block_t2"].mean - 0.5).abs() < 1e-12);
}

#[test]
fn scaled_product_fails_and_unit_product_passes() {
    for (r2, verdict) in [(1.5, Verdict::Violated), (1.0, Verdict::Satisfied)] {
        let inst = instantiate("scaled_product", &p(&[("r2", r2)])).unwrap();
        let frame = inst.frame.as_ref().unwrap();
        let r = check_torus(
            &inst.spec,
            frame,
            &samples(&inst.spec, 0),
            Tolerances::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, verdict, "r2 = {r2}");
        assert_eq!(r.branch, Some(Branch::SphereMinimal));
        if verdict == Verdict::Violated {
            assert!(r.residual_max >= 0.3);
        }
    }
}

#[test]
fn geodesic_on_product_takes_product_branch() {
    let inst = instantiate("torus_geodesic", &[]).unwrap();
    let frame = inst.frame.as_ref().unwrap();
    let r = check_torus(
        &inst.spec,
        frame,
        &samples(&inst.spec, 0),
        Tolerances::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Satisfied);
    assert_eq!(r.branch, Some(Branch::ProductMinimal));
    assert!((r.recovered["r2"] - 1.0).abs() < 1e-12);
    assert!((r.recovered["s2"] - 1.0).abs() < 1e-12);
}

#[test]
fn torus_off_the_product_sphere_is_degenerate() {
    let inst = instantiate("clifford_torus", &[]).unwrap();
    let frame = inst.frame.as_ref().unwrap();
    let r = check_torus(
        &inst.spec,
        frame,
        &samples(&inst.spec, 0),
        Tolerances::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Degenerate);
}

#[test]
fn constant_recovery() {
    let est = recover_constants(&[1.0, 1.0, 1.0], 1e-8);
    assert_eq!((est.mean, est.spread, est.is_constant), (1.0, 0.0, true));
    let est = recover_constants(&[1.0, 2.0, 3.0], 1e-8);
    assert_eq!(est.mean, 2.0);
    assert!((est.spread - 1.0).abs() < 1e-15);
    assert!(!est.is_constant);
}

#[test]
fn catalog_expectations_hold() {
    let variants: &[(&str, &[(&str, f64)])] = &[
        ("plane", &[]),
        ("round_sphere", &[]),
        ("circle", &[]),
        ("circle", &[("a", 2.5)]),
        ("latitude_circle", &[]),
        ("latitude_circle", &[("z0", 0.0)]),
        ("latitude_circle", &[("z0", -0.8)]),
        ("clifford_torus", &[]),
        ("example34", &[]),
        ("example34", &[("n", 3.0), ("a", 1.6)]),
        ("right_cylinder", &[]),
        ("helix_graph", &[]),
        ("helix_graph", &[("slope", -1.0)]),
        ("cylinder_wave", &[]),
        ("cylinder_wave", &[("amp", 0.0)]),
        ("product_circles", &[]),
        ("diagonal_circle", &[]),
        ("scaled_product", &[]),
        ("scaled_product", &[("r2", 1.0)]),
        ("torus_geodesic", &[]),
        ("torus_geodesic", &[("q", 3.0)]),
    ];
    for (id, params) in variants {
        let inst = instantiate(id, &p(params)).unwrap();
        let pts = samples(&inst.spec, 13);
        for (kind, want) in &inst.expected {
            let r = run_check(
                *kind,
                &inst.spec,
                inst.frame.as_ref(),
                &pts,
                Tolerances::default(),
            )
            .unwrap();
            assert_eq!(r.verdict, want.verdict, "{id} {params:?} {kind}");
            if want.branch.is_some() {
                assert_eq!(r.branch, want.branch, "{id} {params:?} {kind}");
            }
            for (name, value) in &want.constants {
                let got = r.recovered[*name];
                assert!(
                    (got - value).abs() <= 1e-8,
                    "{id} {kind} {name}: {got} vs {value}"
                );
            }
        }
    }
}

#[test]
fn misuse_is_reported() {
    let inst = instantiate("right_cylinder", &[]).unwrap();
    let pts = samples(&inst.spec, 0);
    let tol = Tolerances::default();
    assert!(matches!(
        run_check(CheckKind::Cylinder, &inst.spec, None, &pts, tol),
        Err(CheckError::MissingFrame(CheckKind::Cylinder))
    ));
    let torus = FrameSplit::standard(Split::Torus { n: 1, k: 1 }).unwrap();
    assert!(run_check(CheckKind::Cylinder, &inst.spec, Some(&torus), &pts, tol).is_err());
    assert!(matches!(
        check_sphere(&inst.spec, &pts[..1], tol),
        Err(CheckError::TooFewSamples(1))
    ));
}

#[test]
fn singular_points_propagate() {
    let spec = parse("dim 2 -> 3; F = (x1, x2^3, 0); box x1 in [0,1], x2 in [-1,1]").unwrap();
    let pts = vec![vec![0.5, 0.5], vec![0.5, 0.0]];
    assert!(matches!(
        check_sphere(&spec, &pts, Tolerances::default()),
        Err(CheckError::Geometry(_))
    ));
}
