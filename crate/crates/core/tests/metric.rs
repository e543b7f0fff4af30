use finsler_core::error::FinslerError;
use finsler_core::expr::Expr;
use finsler_core::metric::{reversibility_check, Builtin, Domain, FinslerStructure, TangentSample};
use finsler_core::sampling::random_samples;
use finsler_core::tensor::fundamental_matrix;
use finsler_core::tolerance::Tolerances;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn zoo() -> Vec<FinslerStructure> {
    [
        Builtin::Euclidean(2),
        Builtin::Euclidean(4),
        Builtin::HyperbolicPoincare(2),
        Builtin::HyperbolicPoincare(3),
        Builtin::FunkBall(2),
        Builtin::FunkBall(3),
        Builtin::FlatRanders(vec![0.5, 0.0]),
        Builtin::FlatRanders(vec![0.2, -0.3, 0.4]),
    ]
    .into_iter()
    .map(|b| FinslerStructure::builtin(b).unwrap())
    .collect()
}

fn conformal() -> Vec<Vec<String>> {
    let c = "4/(1-x1^2-x2^2)^2".to_string();
    vec![vec![c.clone(), "0".into()], vec!["0".into(), c]]
}

#[test]
fn builtins_are_positively_homogeneous() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for f in zoo() {
        for s in random_samples(&f, 100, &mut rng) {
            let base = f.eval_f64(&s.x, &s.y);
            assert!(base > 0.0);
            for lambda in [0.5, 2.0, 7.3] {
                let y: Vec<f64> = s.y.iter().map(|v| v * lambda).collect();
                let res = (f.eval_f64(&s.x, &y) - lambda * base).abs();
                assert!(res <= 1e-10 * lambda * base, "{} λ={lambda}", f.label());
            }
        }
    }
}

#[test]
fn builtins_are_strongly_convex_at_probes() {
    for f in zoo() {
        for s in f.probe_samples(None) {
            let g = fundamental_matrix(&f, &s).unwrap();
            assert!(g.symmetric_eigenvalues().min() > 1e-10, "{}", f.label());
        }
        f.validate(&Tolerances::default()).unwrap();
    }
}

#[test]
fn expression_metric_values() {
    let f = FinslerStructure::riemannian(&conformal(), Domain::UnitBall, "disc").unwrap();
    assert!((f.eval_f64(&[0.0, 0.0], &[1.0, 0.0]) - 2.0).abs() < 1e-15);
    let h = FinslerStructure::builtin(Builtin::HyperbolicPoincare(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for s in random_samples(&f, 10, &mut rng) {
        let a = f.eval_f64(&s.x, &s.y);
        let twice: Vec<f64> = s.y.iter().map(|v| 2.0 * v).collect();
        assert!((f.eval_f64(&s.x, &twice) - 2.0 * a).abs() < 1e-12 * a);
        assert!((h.eval_f64(&s.x, &s.y) - a).abs() < 1e-12 * a);
    }
}

#[test]
fn randers_construction() {
    let id = vec![vec!["1".to_string(), "0".into()], vec!["0".into(), "1".into()]];
    let f = FinslerStructure::randers(&id, &["0.5".into(), "0".into()], Domain::Whole, "r").unwrap();
    assert!((f.eval_f64(&[0.7, -2.0], &[1.0, 0.0]) - 1.5).abs() < 1e-15);
    assert!((f.eval_f64(&[0.7, -2.0], &[-1.0, 0.0]) - 0.5).abs() < 1e-15);
    let e = FinslerStructure::randers(&id, &["0".into(), "0".into()], Domain::Whole, "r0").unwrap();
    let s = random_samples(&e, 20, &mut ChaCha8Rng::seed_from_u64(3));
    assert!(reversibility_check(&e, &s, &Tolerances::default()).unwrap().reversible);
    let err = FinslerStructure::randers(&id, &["1.1".into(), "0".into()], Domain::Whole, "bad").unwrap_err();
    assert!(matches!(err, FinslerError::RandersNorm { .. }), "{err}");
    assert!(err.to_string().contains("< 1"), "{err}");
}

#[test]
fn reversibility_values() {
    let tol = Tolerances::default();
    let r = FinslerStructure::builtin(Builtin::FlatRanders(vec![0.5, 0.0])).unwrap();
    let s = [TangentSample::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap()];
    let rep = reversibility_check(&r, &s, &tol).unwrap();
    assert!((rep.max_asymmetry - 2.0 / 3.0).abs() < 1e-15 && !rep.reversible);

    let funk = FinslerStructure::builtin(Builtin::FunkBall(2)).unwrap();
    assert!((funk.eval_f64(&[0.0, 0.0], &[0.6, 0.8]) - 1.0).abs() < 1e-15);
    let off = [TangentSample::new(vec![0.3, 0.0], vec![1.0, 0.0]).unwrap()];
    let rep = reversibility_check(&funk, &off, &tol).unwrap();
    // F = 1.3/0.91 forward, 0.7/0.91 backward
    assert!((rep.max_asymmetry - 0.6 / 1.3).abs() < 1e-12 && !rep.reversible);

    for b in [Builtin::Euclidean(2), Builtin::HyperbolicPoincare(2), Builtin::HyperbolicPoincare(3)] {
        let f = FinslerStructure::builtin(b).unwrap();
        let s = random_samples(&f, 50, &mut ChaCha8Rng::seed_from_u64(4));
        let rep = reversibility_check(&f, &s, &tol).unwrap();
        assert!(rep.max_asymmetry <= 1e-12 && rep.reversible, "{}", f.label());
    }
}

#[test]
fn samples_outside_the_domain_are_rejected() {
    let funk = FinslerStructure::builtin(Builtin::FunkBall(2)).unwrap();
    let s = [TangentSample::new(vec![1.2, 0.0], vec![1.0, 0.0]).unwrap()];
    assert!(reversibility_check(&funk, &s, &Tolerances::default()).is_err());
}

#[test]
fn syntax_errors_carry_a_position() {
    let err = Expr::parse("1 + * x1").unwrap_err();
    assert_eq!(err.offset, 4, "{err}");
    assert!(Expr::parse("sqrt(x1").is_err());
    assert!(Expr::parse("foo(x1)").is_err());
    let e = Expr::parse(" x1 ^ 2 - -x2*3 ").unwrap();
    assert_eq!(e.eval(&[3.0, 1.0]), 12.0);
}
