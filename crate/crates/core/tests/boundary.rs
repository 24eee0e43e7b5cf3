use tricrit_core::curves::{trace_boundary, BoundaryKind, CURVE_TOL};
use tricrit_core::phase::{classify, PhaseLabel, DEFAULT_CLASSIFY_TOL};
use tricrit_core::potential::EffectivePotential;
use tricrit_core::ModelParams;

#[test]
fn traced_points_reclassify() {
    let pts = trace_boundary(1.0, -3.8, -2.6, 0.2).unwrap();
    for p in &pts {
        let ep = EffectivePotential::with_tol(ModelParams::cubic(p.g, p.nu), CURVE_TOL).unwrap();
        let label = classify(&ep, DEFAULT_CLASSIFY_TOL).unwrap().label;
        let want = match p.kind {
            BoundaryKind::SecondOrder => PhaseLabel::SecondOrderCurve,
            BoundaryKind::FirstOrder => PhaseLabel::FirstOrderCurve,
            BoundaryKind::Tricritical => PhaseLabel::Tricritical,
            k => panic!("unexpected kind {k} at g = {}", p.g),
        };
        assert_eq!(label, want, "g = {}, nu = {}", p.g, p.nu);
    }
}

#[test]
fn boundary_is_monotone_and_step_independent() {
    let coarse = trace_boundary(1.0, -4.0, -2.5, 0.1).unwrap();
    let fine = trace_boundary(1.0, -4.0, -2.5, 0.05).unwrap();
    assert!(coarse.windows(2).all(|w| w[0].g < w[1].g && w[0].nu > w[1].nu));
    for p in coarse.iter().filter(|p| p.kind != BoundaryKind::Tricritical) {
        let q = fine.iter().find(|q| (q.g - p.g).abs() < 1e-9).expect("shared abscissa");
        assert!((p.nu - q.nu).abs() < 1e-9, "g = {}: {} vs {}", p.g, p.nu, q.nu);
    }
}

#[test]
fn dense_side_lies_below_the_boundary() {
    for p in trace_boundary(1.0, -4.2, -2.8, 0.35).unwrap() {
        let below = EffectivePotential::from_params(ModelParams::cubic(p.g, p.nu - 0.02)).unwrap();
        let above = EffectivePotential::from_params(ModelParams::cubic(p.g, p.nu + 0.02)).unwrap();
        assert_eq!(
            classify(&below, DEFAULT_CLASSIFY_TOL).unwrap().label,
            PhaseLabel::Dense,
            "g = {}",
            p.g
        );
        assert_eq!(
            classify(&above, DEFAULT_CLASSIFY_TOL).unwrap().label,
            PhaseLabel::Dilute,
            "g = {}",
            p.g
        );
    }
}
