use std::process::{Command, ExitCode};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use mincheck_core::catalog::{self, instantiate, solve_b, ENTRIES};
use mincheck_core::conditions::{
    check_cylinder, check_sphere, check_torus, run_check, Branch, CheckKind, ConditionResult,
    Tolerances, Verdict,
};
use mincheck_core::geometry::{geometry_at, FrameSplit};
use mincheck_core::report::{generate_samples, SamplePlan};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn plan(seed: u64, count: usize) -> SamplePlan {
    SamplePlan {
        seed,
        count,
        ..SamplePlan::default()
    }
}

fn samples_for(inst: &catalog::Instance, seed: u64, count: usize) -> Vec<Vec<f64>> {
    generate_samples(&plan(seed, count), &inst.spec.domain_box).expect("catalog boxes are valid")
}

fn params(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn example34_reproduction() -> Outcome {
    let cases = [(2, 1.2), (2, 1.5), (2, 2.0), (3, 2.2), (3, 2.5), (3, 3.0)];
    let mut worst_t = 0.0f64;
    for (n, a2) in cases {
        let a: f64 = f64::sqrt(a2);
        let b = solve_b(n, a).map_err(|e| e.to_string())?;
        let inst = instantiate("example34", &params(&[("n", n as f64), ("a", a)]))
            .map_err(|e| e.to_string())?;
        let frame = inst.frame.as_ref().ok_or("example34 has no frame")?;
        let samples = samples_for(&inst, 11, 200);
        let r = check_cylinder(&inst.spec, frame, &samples, Tolerances::default())
            .map_err(|e| e.to_string())?;
        let c = r.recovered["c"];
        ensure(r.verdict == Verdict::Satisfied, || {
            format!("n={n} a²={a2}: {}", r.verdict)
        })?;
        ensure(r.residual_max <= 1e-8, || {
            format!("n={n} a²={a2}: residual {}", r.residual_max)
        })?;
        ensure((c - 1.0).abs() <= 1e-8, || {
            format!("n={n} a²={a2}: c = {c}")
        })?;

        let nf = n as f64;
        let eq9 = nf * b * b / (a * a + nf * b * b);
        let eq10 = nf - a * a;
        let last = frame.ambient_dim() - 1;
        for p in &samples {
            let g = geometry_at(&inst.spec, p).map_err(|e| e.to_string())?;
            let t2 = g.tangent_projection_norms(frame)[last];
            let dev = (t2 - eq9).abs().max((t2 - eq10).abs());
            worst_t = worst_t.max(dev);
            ensure(dev <= 1e-9, || {
                format!("n={n} a²={a2}: ‖T‖² = {t2}, expected {eq9} and {eq10}")
            })?;
        }
    }
    Ok(format!(
        "6 cases Satisfied, c = 1, max ‖T‖² deviation {worst_t:.1e}"
    ))
}

fn classical_sphere() -> Outcome {
    let tol = Tolerances {
        check: 1e-9,
        constant: 1e-9,
    };
    let mut parts = Vec::new();
    for id in ["clifford_torus", "round_sphere"] {
        let inst = instantiate(id, &[]).map_err(|e| e.to_string())?;
        let r = check_sphere(&inst.spec, &samples_for(&inst, 3, 200), tol)
            .map_err(|e| e.to_string())?;
        let c = r.recovered["c"];
        ensure(inst.spec.domain_dim == 2, || {
            format!("{id}: m = {}", inst.spec.domain_dim)
        })?;
        ensure(r.verdict == Verdict::Satisfied, || {
            format!("{id}: {}", r.verdict)
        })?;
        ensure((c - 1.0).abs() <= 1e-9, || format!("{id}: c = {c}"))?;
        ensure(r.residual_max <= 1e-9, || {
            format!("{id}: residual {}", r.residual_max)
        })?;
        parts.push(format!("{id} c-1 = {:.1e}", c - 1.0));
    }
    Ok(parts.join(", "))
}

fn torus_theorem() -> Outcome {
    let tol = Tolerances::default();
    for id in ["product_circles", "diagonal_circle"] {
        let inst = instantiate(id, &[]).map_err(|e| e.to_string())?;
        let frame = inst.frame.as_ref().ok_or("missing frame")?;
        let r = check_torus(&inst.spec, frame, &samples_for(&inst, 5, 200), tol)
            .map_err(|e| e.to_string())?;
        ensure(r.verdict == Verdict::Satisfied, || {
            format!("{id}: {}", r.verdict)
        })?;
        ensure(r.branch == Some(Branch::SphereMinimal), || {
            format!("{id}: branch {:?}", r.branch)
        })?;
    }
    let inst = instantiate("scaled_product", &params(&[("r2", 1.5)])).map_err(|e| e.to_string())?;
    let frame = inst.frame.as_ref().ok_or("missing frame")?;
    let r = check_torus(&inst.spec, frame, &samples_for(&inst, 5, 200), tol)
        .map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::Violated, || {
        format!("scaled_product: {}", r.verdict)
    })?;
    ensure(r.residual_max >= 0.3, || {
        format!("scaled_product residual {} < 0.3", r.residual_max)
    })?;
    Ok(format!(
        "both SphereMinimal; scaled_product Violated, residual {:.3}",
        r.residual_max
    ))
}

fn proof_identities() -> Outcome {
    let mut checked = 0;
    for e in ENTRIES {
        let inst = instantiate(e.id, &[]).map_err(|err| err.to_string())?;
        let m = inst.spec.domain_dim as f64;
        let dim = inst.spec.ambient_dim;
        let eye = DMatrix::identity(dim, dim);
        let flat_frame = inst.frame.as_ref().filter(|_| {
            inst.expected
                .get(&CheckKind::Cylinder)
                .is_some_and(|x| x.verdict == Verdict::Satisfied)
        });
        let mut pp = Vec::new();
        for p in samples_for(&inst, 21, 100) {
            let g = geometry_at(&inst.spec, &p).map_err(|err| format!("{}: {err}", e.id))?;
            let f = &g.position;
            let lap_norm2 = g.laplacian(&g.norm_squared_jet());
            let rhs = 2.0 * (g.laplace_f.dot(f) + m);
            let rel = (lap_norm2 - rhs).abs() / lap_norm2.abs().max(1.0);
            ensure(rel <= 1e-8, || format!("{}: Δ‖F‖² mismatch {rel:e}", e.id))?;

            let sum: f64 = g.tangent_projection_norms_in(&eye).iter().sum();
            ensure((sum - m).abs() <= 1e-10, || {
                format!("{}: Σ‖T‖² = {sum}", e.id)
            })?;

            if let Some(frame) = flat_frame {
                let t = g.tangent_projection_norms(frame);
                let flat = frame.second_block();
                let s: f64 = t[flat.clone()].iter().sum();
                let rel8 = (lap_norm2 - 2.0 * s).abs() / lap_norm2.abs().max(1.0);
                ensure(rel8 <= 1e-8, || {
                    format!("{}: flat Δ‖F‖² mismatch {rel8:e}", e.id)
                })?;
                let mut proj = f.clone();
                for j in flat {
                    let v = frame.vector(j);
                    proj -= &v * f.dot(&v);
                }
                pp.push(proj.norm_squared());
            }
        }
        if !pp.is_empty() {
            let spread = catalog_spread(&pp);
            ensure(spread <= 1e-10, || {
                format!("{}: ⟨P,P⟩ spread {spread:e}", e.id)
            })?;
        }
        checked += 1;
    }
    Ok(format!("{checked} entries, 100 points each"))
}

fn catalog_spread(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn differentiation() -> Outcome {
    const H: f64 = 1e-5;
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    for e in ENTRIES {
        let inst = instantiate(e.id, &[]).map_err(|err| err.to_string())?;
        let spec = &inst.spec;
        let m = spec.domain_dim;
        let eval = |p: &[f64]| spec.eval_values(p).expect("sample inside the chart");
        for p in samples_for(&inst, 31, 50) {
            let jets = spec.eval_chart(&p).map_err(|err| err.to_string())?;
            let shifted = |moves: &[(usize, f64)]| {
                let mut q = p.clone();
                for &(i, d) in moves {
                    q[i] += d;
                }
                eval(&q)
            };
            for i in 0..m {
                let (fp, fm) = (shifted(&[(i, H)]), shifted(&[(i, -H)]));
                for (c, jet) in jets.iter().enumerate() {
                    let fd = (fp[c] - fm[c]) / (2.0 * H);
                    let rel = (jet.grad()[i] - fd).abs() / fd.abs().max(1.0);
                    worst_g = worst_g.max(rel);
                    ensure(rel <= 1e-6, || format!("{}: ∂{i}F{c} off by {rel:e}", e.id))?;
                }
                for j in 0..m {
                    let fpp = shifted(&[(i, H), (j, H)]);
                    let fpm = shifted(&[(i, H), (j, -H)]);
                    let fmp = shifted(&[(i, -H), (j, H)]);
                    let fmm = shifted(&[(i, -H), (j, -H)]);
                    for (c, jet) in jets.iter().enumerate() {
                        let fd = (fpp[c] - fpm[c] - fmp[c] + fmm[c]) / (4.0 * H * H);
                        let rel = (jet.hess(i, j) - fd).abs() / fd.abs().max(1.0);
                        worst_h = worst_h.max(rel);
                        ensure(rel <= 1e-4, || {
                            format!("{}: ∂{i}∂{j}F{c} off by {rel:e}", e.id)
                        })?;
                    }
                }
            }
        }
    }
    Ok(format!("gradient {worst_g:.1e}, Hessian {worst_h:.1e}"))
}

fn negative_controls() -> Outcome {
    let tol = Tolerances::default();
    let lat = instantiate("latitude_circle", &params(&[("z0", 0.5)])).map_err(|e| e.to_string())?;
    let r = check_sphere(&lat.spec, &samples_for(&lat, 1, 200), tol).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::Violated, || {
        format!("latitude: {}", r.verdict)
    })?;
    ensure(r.residual_max >= 0.1, || {
        format!("latitude residual {}", r.residual_max)
    })?;
    let plane = instantiate("plane", &[]).map_err(|e| e.to_string())?;
    let rp =
        check_sphere(&plane.spec, &samples_for(&plane, 1, 200), tol).map_err(|e| e.to_string())?;
    ensure(rp.verdict == Verdict::Violated, || {
        format!("plane: {}", rp.verdict)
    })?;
    Ok(format!(
        "latitude residual {:.3}, plane c = {}",
        r.residual_max, rp.recovered["c"]
    ))
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("mincheck-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for run in 0..2 {
        let path = dir.join(format!("run{run}.json"));
        let status = Command::new(env!("CARGO_BIN_EXE_mincheck"))
            .args([
                "check",
                "cylinder",
                "--catalog",
                "example34",
                "--param",
                "n=2",
                "--param",
                "a=1.224745",
                "--samples",
                "200",
                "--seed",
                "7",
                "--report",
            ])
            .arg(&path)
            .env("RAYON_NUM_THREADS", if run == 0 { "1" } else { "4" })
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.code() == Some(0), || {
            format!("run {run} exited with {status}")
        })?;
        reports.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    let _ = std::fs::remove_dir_all(&dir);
    ensure(reports[0] == reports[1], || "reports differ".into())?;
    Ok(format!(
        "{} identical bytes (1 vs 4 threads)",
        reports[0].len()
    ))
}

fn random_rotation(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g: DMatrix<f64> = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix column signs so the factorization is unique
    let signs = DVector::from_fn(dim, |i, _| r[(i, i)].signum());
    DMatrix::from_fn(dim, dim, |i, j| q[(i, j)] * signs[j])
}

fn equivariance() -> Outcome {
    let cases = [
        ("clifford_torus", CheckKind::Sphere),
        ("latitude_circle", CheckKind::Sphere),
        ("example34", CheckKind::Cylinder),
        ("latitude_circle", CheckKind::Cylinder),
        ("helix_graph", CheckKind::Cylinder),
        ("product_circles", CheckKind::Torus),
        ("scaled_product", CheckKind::Torus),
        ("torus_geodesic", CheckKind::Torus),
    ];
    let tol = Tolerances::default();
    let mut worst = 0.0f64;
    for (id, kind) in cases {
        let inst = instantiate(id, &[]).map_err(|e| e.to_string())?;
        let q = random_rotation(inst.spec.ambient_dim, 8);
        let q_rows: Vec<Vec<f64>> = q.row_iter().map(|r| r.iter().copied().collect()).collect();
        let rotated = inst.spec.transformed(&q_rows).map_err(|e| e.to_string())?;
        let frame = inst.frame.as_ref();
        let rotated_frame: Option<FrameSplit> = frame
            .map(|f| f.rotated(&q))
            .transpose()
            .map_err(|e| e.to_string())?;
        let samples = samples_for(&inst, 9, 200);
        let run = |spec, frame| -> Result<ConditionResult, String> {
            run_check(kind, spec, frame, &samples, tol).map_err(|e| e.to_string())
        };
        let a = run(&inst.spec, frame)?;
        let b = run(&rotated, rotated_frame.as_ref())?;
        let mut diffs = vec![
            (a.residual_max - b.residual_max).abs(),
            (a.residual_rms - b.residual_rms).abs(),
        ];
        for (name, v) in &a.identities {
            diffs.push((v - b.identities.get(name).copied().unwrap_or(f64::NAN)).abs());
        }
        let d = diffs.iter().copied().fold(0.0, f64::max);
        worst = worst.max(d);
        ensure(d <= 1e-10 && diffs.iter().all(|x| !x.is_nan()), || {
            format!("{id} {kind}: residual moved by {d:e}")
        })?;
        ensure(a.verdict == b.verdict, || {
            format!("{id} {kind}: verdict changed")
        })?;
    }
    Ok(format!("{} cases, max change {worst:.1e}", cases.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 example34 reproduction", example34_reproduction),
        ("2 classical sphere condition", classical_sphere),
        ("3 product of spheres, both branches", torus_theorem),
        ("4 internal identities on the catalog", proof_identities),
        ("5 jets against finite differences", differentiation),
        ("6 negative controls", negative_controls),
        ("7 byte-identical reports", determinism),
        ("8 rotation equivariance", equivariance),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
