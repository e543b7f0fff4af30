use finsler_core::metric::{Builtin, Domain, FinslerStructure, TangentSample};
use finsler_core::sampling::random_samples;
use finsler_core::tensor::{
    curvature_report, derived_metric_diagnostics, derived_metric_from_ricci, einstein_check, flag_curvature,
    fundamental_matrix, ricci, ricci_parallel_check,
    riemann_curvature, scalar_curvature_residual, spray, spray_coefficients,
};
use finsler_core::tolerance::Tolerances;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn site(x: &[f64], y: &[f64]) -> TangentSample {
    TangentSample::new(x.to_vec(), y.to_vec()).unwrap()
}

fn builtin(b: Builtin) -> FinslerStructure {
    FinslerStructure::builtin(b).unwrap()
}

// Central-difference Hessian of F²/2 in y.
fn fd_fundamental(f: &FinslerStructure, x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
    let n = y.len();
    let h = 1e-4;
    let l = |y: &[f64]| 0.5 * f.eval_f64(x, y).powi(2);
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                let mut yy = y.to_vec();
                yy[i] += si * h;
                yy[j] += sj * h;
                acc += w * l(&yy);
            }
            g[i][j] = acc / (4.0 * h * h);
        }
    }
    g
}

#[test]
fn fundamental_tensor_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for b in [Builtin::FunkBall(3), Builtin::FlatRanders(vec![0.3, -0.2]), Builtin::HyperbolicPoincare(2)] {
        let f = builtin(b);
        for s in random_samples(&f, 5, &mut rng) {
            let g = fundamental_matrix(&f, &s).unwrap();
            let fd = fd_fundamental(&f, &s.x, &s.y);
            for i in 0..s.x.len() {
                for j in 0..s.x.len() {
                    assert!((g[(i, j)] - fd[i][j]).abs() < 1e-5 * (1.0 + fd[i][j].abs()), "{g} vs {fd:?}");
                }
            }
        }
    }
}

#[test]
fn spray_matches_finite_difference_euler_lagrange() {
    // G^i = ¼ g^{il} (y^k ∂_k ∂_{y^l} F² − ∂_l F²), all derivatives by central differences
    let f = FinslerStructure::randers(
        &[vec!["1 + x1^2".into(), "0.1*x2".into()], vec!["0.1*x2".into(), "2 + sin(x1)".into()]],
        &["0.2*x2".into(), "0.1*cos(x1)".into()],
        Domain::Whole,
        "test",
    )
    .unwrap();
    let x = [0.3, -0.4];
    let y = [0.7, 0.5];
    let h = 1e-4;
    let f2 = |x: &[f64], y: &[f64]| f.eval_f64(x, y).powi(2);
    let mut rhs = [0.0; 2];
    for l in 0..2 {
        let dyl = |x: &[f64]| {
            let mut yp = y;
            let mut ym = y;
            yp[l] += h;
            ym[l] -= h;
            (f2(x, &yp) - f2(x, &ym)) / (2.0 * h)
        };
        let xp: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + h * b).collect();
        let xm: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - h * b).collect();
        let mixed = (dyl(&xp) - dyl(&xm)) / (2.0 * h);
        let mut xpl = x;
        let mut xml = x;
        xpl[l] += h;
        xml[l] -= h;
        rhs[l] = mixed - (f2(&xpl, &y) - f2(&xml, &y)) / (2.0 * h);
    }
    let g = fundamental_matrix(&f, &site(&x, &y)).unwrap();
    let expected = g.try_inverse().unwrap() * DVector::from_column_slice(&rhs) * 0.25;
    let got = spray_coefficients(&f, &x, &y);
    for i in 0..2 {
        assert!((got[i] - expected[i]).abs() < 1e-6, "{got:?} vs {expected}");
    }
}

#[test]
fn hyperbolic_flag_curvature_is_minus_one() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [2, 3] {
        let f = builtin(Builtin::HyperbolicPoincare(n));
        for s in random_samples(&f, 8, &mut rng) {
            let u = finsler_core::sampling::transverse(&s.y, &mut rng);
            let k = flag_curvature(&f, &s, &u, &tol).unwrap();
            assert!((k + 1.0).abs() < 1e-9, "K = {k}");
            let ric = ricci(&f, &s).unwrap();
            assert!((ric.scalar + (n as f64 - 1.0)).abs() < 1e-9);
            let g = fundamental_matrix(&f, &s).unwrap();
            assert!((ric.tensor + g * (n as f64 - 1.0)).amax() < 1e-8);
        }
    }
}

#[test]
fn conformal_metric_gaussian_curvature() {
    // a = e^{2σ} δ with σ = 0.3 x1² + 0.2 x2 has K = −e^{−2σ} Δσ = −0.6 e^{−2σ}
    let e = "exp(0.6*x1^2 + 0.4*x2)".to_string();
    let f = FinslerStructure::riemannian(&[vec![e.clone(), "0".into()], vec!["0".into(), e]], Domain::Whole, "conf")
        .unwrap();
    let tol = Tolerances::default();
    for (x, y) in [([0.2, 0.1], [1.0, 0.3]), ([-0.7, 0.5], [-0.2, 1.0]), ([1.1, -0.9], [0.4, 0.4])] {
        let s = site(&x, &y);
        let sigma = 0.3 * x[0] * x[0] + 0.2 * x[1];
        let k = flag_curvature(&f, &s, &[y[1], -y[0]], &tol).unwrap();
        let expected = -0.6 * (-2.0 * sigma).exp();
        assert!((k - expected).abs() < 1e-9, "{k} vs {expected}");
        // in two dimensions Ric = K
        assert!((ricci(&f, &s).unwrap().scalar - expected).abs() < 1e-9);
    }
}

#[test]
fn funk_has_constant_curvature_minus_quarter() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [2, 3] {
        let f = builtin(Builtin::FunkBall(n));
        for s in random_samples(&f, 6, &mut rng) {
            // spray of the Funk metric: G = ½ F y
            let sp = spray(&f, &s).unwrap();
            let fv = f.eval_f64(&s.x, &s.y);
            for i in 0..n {
                assert!((sp.coefficients[i] - 0.5 * fv * s.y[i]).abs() < 1e-10);
            }
            assert!(scalar_curvature_residual(&f, &s, -0.25).unwrap() < 1e-8);
            let u = finsler_core::sampling::transverse(&s.y, &mut rng);
            assert!((flag_curvature(&f, &s, &u, &tol).unwrap() + 0.25).abs() < 1e-8);
            assert!((ricci(&f, &s).unwrap().scalar + 0.25 * (n as f64 - 1.0)).abs() < 1e-8);
        }
    }
}

#[test]
fn flat_randers_is_flat() {
    let f = builtin(Builtin::FlatRanders(vec![0.5, 0.0]));
    let s = site(&[0.2, 0.4], &[1.0, -2.0]);
    assert!(riemann_curvature(&f, &s).unwrap().amax() < 1e-12);
    assert!(spray(&f, &s).unwrap().coefficients.amax() < 1e-14);
}

#[test]
fn hyperbolic_ricci_is_einstein_and_parallel() {
    let tol = Tolerances::default();
    let f = builtin(Builtin::HyperbolicPoincare(3));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let samples = random_samples(&f, 12, &mut rng);
    let rep = einstein_check(&f, &samples, &tol).unwrap();
    assert!(rep.is_einstein && rep.negative_definite);
    assert!((rep.c_estimate - 2f64.sqrt()).abs() < 1e-8);
    let par = ricci_parallel_check(&f, &samples[..4], &tol).unwrap();
    assert!(par.parallel, "{par:?}");
}

#[test]
fn funk_ricci_is_not_berwald_parallel() {
    let tol = Tolerances::default();
    let f = builtin(Builtin::FunkBall(2));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let samples = random_samples(&f, 3, &mut rng);
    let par = ricci_parallel_check(&f, &samples, &tol).unwrap();
    assert!(!par.parallel && par.max_residual > 1e-3, "{par:?}");
}

#[test]
fn report_classifies_definiteness() {
    let tol = Tolerances::default();
    let f = builtin(Builtin::HyperbolicPoincare(2));
    let rep = curvature_report(&f, &site(&[0.1, 0.1], &[1.0, 0.0]), Some(&[0.0, 1.0]), &tol).unwrap();
    assert_eq!(rep.flags, vec!["ric_negative_definite".to_string()]);
    assert!((rep.flag.unwrap() + 1.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flag_curvature_depends_only_on_the_plane(
        alpha in -2.0f64..2.0, beta in prop_oneof![-2.0f64..-0.2, 0.2f64..2.0],
        a in -0.5f64..0.5, b in -0.5f64..0.5,
    ) {
        let tol = Tolerances::default();
        let f = FinslerStructure::riemannian(
            &[vec!["1 + x1^2".into(), "0.2*x1*x2".into()], vec!["0.2*x1*x2".into(), "2 + x2^2".into()]],
            Domain::Whole,
            "p",
        ).unwrap();
        let s = site(&[a, b], &[1.0, 0.4]);
        let u = [0.3, 1.0];
        let k0 = flag_curvature(&f, &s, &u, &tol).unwrap();
        let u2 = [beta * u[0] + alpha * s.y[0], beta * u[1] + alpha * s.y[1]];
        let k1 = flag_curvature(&f, &s, &u2, &tol).unwrap();
        prop_assert!((k0 - k1).abs() < 1e-9 * (1.0 + k0.abs()));
    }

    #[test]
    fn ricci_contraction_equals_trace(a in -0.4f64..0.4, b in -0.4f64..0.4, t in 0.0f64..6.28) {
        let f = builtin(Builtin::FunkBall(2));
        let s = site(&[a, b], &[t.cos(), t.sin()]);
        let ric = ricci(&f, &s).unwrap();
        let y = DVector::from_column_slice(&s.y);
        let trace = riemann_curvature(&f, &s).unwrap().trace();
        prop_assert!((y.dot(&(&ric.tensor * &y)) - trace).abs() < 1e-8);
    }
}

fn perturbed_hyperbolic() -> FinslerStructure {
    let c = "4/(1 - x1^2 - x2^2)^2";
    FinslerStructure::riemannian(
        &[vec![format!("(1 + 0.3*x2^2)*{c}"), "0".into()], vec!["0".into(), c.to_string()]],
        Domain::UnitBall,
        "perturbed",
    )
    .unwrap()
}

fn magnetic_randers() -> FinslerStructure {
    let id = vec![vec!["1".to_string(), "0".into()], vec!["0".into(), "1".into()]];
    FinslerStructure::randers(&id, &["-0.3*x2".into(), "0.3*x1".into()], Domain::UnitBall, "magnetic").unwrap()
}

fn unit(n: usize, k: usize, h: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[k] = h;
    e
}

fn shift(v: &[f64], d: &[f64], t: f64) -> Vec<f64> {
    v.iter().zip(d).map(|(a, b)| a + t * b).collect()
}

// R^i_k assembled from central differences of the spray coefficients.
fn fd_riemann(f: &FinslerStructure, x: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let (h1, h2) = (1e-5, 1e-4);
    let g = |x: &[f64], y: &[f64]| spray_coefficients(f, x, y);
    let g0 = g(x, y);
    let mut dx = vec![vec![0.0; n]; n]; // dx[k][i] = ∂_k G^i
    let mut dy = vec![vec![0.0; n]; n];
    for k in 0..n {
        let e = unit(n, k, 1.0);
        let (gp, gm) = (g(&shift(x, &e, h1), y), g(&shift(x, &e, -h1), y));
        let (hp, hm) = (g(x, &shift(y, &e, h1)), g(x, &shift(y, &e, -h1)));
        for i in 0..n {
            dx[k][i] = (gp[i] - gm[i]) / (2.0 * h1);
            dy[k][i] = (hp[i] - hm[i]) / (2.0 * h1);
        }
    }
    let mut r = vec![vec![0.0; n]; n];
    for k in 0..n {
        let ek = unit(n, k, 1.0);
        // y^j ∂_{x^j} ∂_{y^k} G^i
        let mut mixed = vec![0.0; n];
        for (sx, sy, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
            let v = g(&shift(x, y, sx * h2), &shift(y, &ek, sy * h2));
            for i in 0..n {
                mixed[i] += w * v[i] / (4.0 * h2 * h2);
            }
        }
        for j in 0..n {
            let ej = unit(n, j, 1.0);
            let mut yy = vec![0.0; n];
            for (sj, sk, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                let v = g(x, &shift(&shift(y, &ej, sj * h2), &ek, sk * h2));
                for i in 0..n {
                    yy[i] += w * v[i] / (4.0 * h2 * h2);
                }
            }
            for i in 0..n {
                r[i][k] += 2.0 * g0[j] * yy[i] - dy[j][i] * dy[k][j];
            }
        }
        for i in 0..n {
            r[i][k] += 2.0 * dx[k][i] - mixed[i];
        }
    }
    r
}

#[test]
fn riemann_and_ricci_match_finite_differences() {
    let zoo = vec![
        builtin(Builtin::Euclidean(2)),
        builtin(Builtin::HyperbolicPoincare(2)),
        builtin(Builtin::HyperbolicPoincare(3)),
        builtin(Builtin::FunkBall(2)),
        builtin(Builtin::FlatRanders(vec![0.5, 0.0])),
        magnetic_randers(),
        perturbed_hyperbolic(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for f in &zoo {
        for s in random_samples(f, 5, &mut rng) {
            let r = riemann_curvature(f, &s).unwrap();
            let oracle = fd_riemann(f, &s.x, &s.y);
            let scale = r.amax().max(1.0);
            let n = s.x.len();
            for i in 0..n {
                for k in 0..n {
                    assert!((r[(i, k)] - oracle[i][k]).abs() <= 1e-5 * scale, "{} R[{i}][{k}]", f.label());
                }
            }
            // Ric_ij as the central-difference y-Hessian of ½R^k_k
            let ric = ricci(f, &s).unwrap().tensor;
            let h = 1e-4;
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                        let y = shift(&shift(&s.y, &unit(n, i, 1.0), si * h), &unit(n, j, 1.0), sj * h);
                        acc += w * 0.5 * finsler_core::tensor::ricci_quadratic(f, &s.x, &y);
                    }
                    let fd = acc / (4.0 * h * h);
                    assert!((ric[(i, j)] - fd).abs() <= 1e-5 * ric.amax().max(1.0), "{} Ric[{i}][{j}]", f.label());
                }
            }
        }
    }
}

#[test]
fn riemannian_spray_is_christoffel_contraction() {
    // conformal factor e^{2σ}, σ = ln(2/(1−|x|²)): γ^i_jk = δ^i_j σ_k + δ^i_k σ_j − δ_jk σ_i
    let f = builtin(Builtin::HyperbolicPoincare(3));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for s in random_samples(&f, 10, &mut rng) {
        let r2: f64 = s.x.iter().map(|v| v * v).sum();
        let sigma: Vec<f64> = s.x.iter().map(|v| 2.0 * v / (1.0 - r2)).collect();
        let sy: f64 = sigma.iter().zip(&s.y).map(|(a, b)| a * b).sum();
        let yy: f64 = s.y.iter().map(|v| v * v).sum();
        let sp = spray(&f, &s).unwrap();
        for i in 0..3 {
            let gi = sy * s.y[i] - 0.5 * yy * sigma[i];
            assert!((sp.coefficients[i] - gi).abs() < 1e-10 * (1.0 + gi.abs()));
            for j in 0..3 {
                for k in 0..3 {
                    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    let gamma = d(i, j) * sigma[k] + d(i, k) * sigma[j] - d(j, k) * sigma[i];
                    assert!((sp.berwald[i][(j, k)] - gamma).abs() < 1e-9 * (1.0 + gamma.abs()));
                }
            }
        }
    }
}

#[test]
fn spray_structure_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for f in [builtin(Builtin::FunkBall(3)), magnetic_randers(), perturbed_hyperbolic()] {
        for s in random_samples(&f, 10, &mut rng) {
            let sp = spray(&f, &s).unwrap();
            let y = DVector::from_column_slice(&s.y);
            let euler = &sp.connection * &y - &sp.coefficients * 2.0;
            assert!(euler.amax() <= 1e-8 * sp.coefficients.amax().max(1.0), "{}", f.label());
            for b in &sp.berwald {
                assert!((b - b.transpose()).amax() <= 1e-10 * b.amax().max(1.0));
            }
        }
    }
}

#[test]
fn homogeneity_ladder() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for f in [builtin(Builtin::FunkBall(2)), builtin(Builtin::HyperbolicPoincare(3)), magnetic_randers()] {
        for s in random_samples(&f, 10, &mut rng) {
            for lambda in [0.5, 2.0, 7.3] {
                let t = site(&s.x, &s.y.iter().map(|v| v * lambda).collect::<Vec<_>>());
                let (a, b) = (spray(&f, &s).unwrap(), spray(&f, &t).unwrap());
                let rel = |p: f64, q: f64| (p - q) / q.abs().max(1.0);
                let check = |x: &[f64], y: &[f64], deg: i32, what: &str| {
                    for (p, q) in x.iter().zip(y) {
                        assert!(rel(*p, q * lambda.powi(deg)).abs() <= 1e-7, "{} {what} λ={lambda}", f.label());
                    }
                };
                check(b.coefficients.as_slice(), a.coefficients.as_slice(), 2, "G");
                check(b.connection.as_slice(), a.connection.as_slice(), 1, "N");
                for (p, q) in b.berwald.iter().zip(&a.berwald) {
                    check(p.as_slice(), q.as_slice(), 0, "Γ");
                }
                let (ra, rb) = (riemann_curvature(&f, &s).unwrap(), riemann_curvature(&f, &t).unwrap());
                check(rb.as_slice(), ra.as_slice(), 2, "R");
                let (ca, cb) = (ricci(&f, &s).unwrap(), ricci(&f, &t).unwrap());
                check(&[cb.scalar], &[ca.scalar], 0, "Ric");
            }
        }
    }
}

#[test]
fn ricci_scalar_times_f_squared_is_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for f in [builtin(Builtin::FunkBall(3)), perturbed_hyperbolic(), magnetic_randers()] {
        for s in random_samples(&f, 10, &mut rng) {
            let ric = ricci(&f, &s).unwrap();
            let trace = riemann_curvature(&f, &s).unwrap().trace();
            let ff = f.eval_f64(&s.x, &s.y).powi(2);
            assert!((ric.scalar * ff - trace).abs() <= 1e-8 * trace.abs().max(1.0));
            assert!((&ric.tensor - ric.tensor.transpose()).amax() <= 1e-9 * ric.tensor.amax().max(1.0));
        }
    }
}

#[test]
fn perturbed_metric_is_neither_einstein_nor_parallel() {
    let f = perturbed_hyperbolic();
    let samples = f.probe_samples(None);
    let e = einstein_check(&f, &samples, &Tolerances::default()).unwrap();
    assert!(!e.is_einstein && e.max_residual > 1e-5, "{}", e.max_residual);
    let p = ricci_parallel_check(&f, &samples, &Tolerances::default()).unwrap();
    assert!(!p.parallel && p.max_residual > 1e-3, "{}", p.max_residual);
}

#[test]
fn ricci_derived_metric_of_hyperbolic_space() {
    for (n, scale) in [(2usize, 1.0f64), (3, 2f64.sqrt())] {
        let f = builtin(Builtin::HyperbolicPoincare(n));
        let hat = derived_metric_from_ricci(&f).unwrap();
        let probes: Vec<_> = f.probe_samples(Some(1)).into_iter().take(10).collect();
        assert_eq!(probes.len(), 10);
        for s in &probes {
            let (a, b) = (f.eval_f64(&s.x, &s.y), hat.eval_f64(&s.x, &s.y));
            assert!((b - scale * a).abs() <= 1e-6 * a, "n={n}: {b} vs {}", scale * a);
        }
        let d = derived_metric_diagnostics(&f, &hat, &probes).unwrap();
        assert!(d.metric_residual <= 1e-6 && d.spray_residual <= 1e-6 && d.definition_residual <= 1e-6, "{d:?}");
    }
    let flat = builtin(Builtin::Euclidean(2));
    assert!(derived_metric_from_ricci(&flat).is_err());
}

#[test]
fn constant_curvature_ricci_tensor_on_coordinate_axes() {
    // axis-aligned sites make off-diagonal entries vanish while their derivatives do not
    for n in [2, 3] {
        let f = builtin(Builtin::FunkBall(n));
        for s in f.probe_samples(None) {
            let ric = ricci(&f, &s).unwrap().tensor;
            let g = fundamental_matrix(&f, &s).unwrap();
            let expected = g * (-0.25 * (n as f64 - 1.0));
            assert!((&ric - &expected).amax() <= 1e-8 * expected.amax(), "x={:?} y={:?}", s.x, s.y);
        }
    }
}
