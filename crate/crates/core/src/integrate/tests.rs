use super::*;
use crate::brownian::{BrownianSpec, Quadrature};
use crate::division::{cousin_cylinder, Division};
use crate::domain::TaggedCell;
use crate::gauge::{CylinderGauge, Components, LRule};
use crate::integrate::registry::{Factor, IntegrandSpec};

fn unit() -> DomainSpec {
    DomainSpec::Interval(Cell1D::new(0.0, 1.0).unwrap())
}

fn on(a: f64, b: f64) -> DomainSpec {
    DomainSpec::Interval(Cell1D::new(a, b).unwrap())
}

fn poly(coeffs: &[f64]) -> IntegrandSpec {
    IntegrandSpec::Poly {
        coeffs: coeffs.to_vec(),
        axis: None,
    }
}

fn run(h: &IntegrandSpec, dom: &DomainSpec, tol: f64) -> IntegralResult {
    let sched = GaugeSchedule::new(h.default_gauge(dom, tol).unwrap());
    integrate(h, dom, &sched, tol, 40).unwrap()
}

#[test]
fn riemann_sum_of_length_is_total_length() {
    let d = crate::division::cousin_1d(&Gauge1D::constant(0.3, 2.0), Cell1D::new(0.0, 1.0).unwrap()).unwrap();
    let s = riemann_sum(&IntegrandSpec::Length, &d).unwrap();
    assert!((s - 1.0).abs() < 1e-15);
}

#[test]
fn right_tagged_quarters() {
    let items = (0..4)
        .map(|k| {
            let (a, b) = (k as f64 / 4.0, (k + 1) as f64 / 4.0);
            TaggedCell::new(
                PointT::from_coords([("x", b)]),
                Cell::from_edges([("x", Cell1D::new(a, b).unwrap())]),
            )
        })
        .collect();
    let d = Division {
        domain: unit(),
        items,
    };
    assert!((riemann_sum(&poly(&[0.0, 1.0]), &d).unwrap() - 0.625).abs() < 1e-15);
}

#[test]
fn brownian_g_over_a_one_time_division_sums_to_one() {
    let spec = BrownianSpec::new(1, vec![1.0]).unwrap();
    let g = Gauge::Cylinder(CylinderGauge {
        l: LRule::constant(["t1"]),
        components: Components::uniform(Gauge1D::constant(0.4, 2.5)),
        l_bound: Some(["t1".to_string()].into_iter().collect()),
    });
    let d = cousin_cylinder(&g, &spec.domain()).unwrap();
    let h = IntegrandSpec::BrownianG {
        spec,
        quadrature: Quadrature::default(),
    };
    assert!((riemann_sum(&h, &d).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn non_finite_terms_are_reported() {
    let d = crate::division::cousin_1d(&Gauge1D::constant(0.3, 2.0), Cell1D::new(0.0, 1.0).unwrap()).unwrap();
    let h = FnCell(|t: &PointT, _: &Cell, _: &DomainSpec| {
        if t.get(&AxisLabel::from("x")).to_f64() > 0.5 {
            f64::NAN
        } else {
            1.0
        }
    });
    match riemann_sum(&h, &d) {
        Err(IntegrateError::NonFinite { value, tag, .. }) => {
            assert!(value.is_nan());
            assert!(tag.get(&AxisLabel::from("x")).to_f64() > 0.5);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn identity_integrates_to_one_half() {
    let r = run(&poly(&[0.0, 1.0]), &unit(), 1e-6);
    assert!(r.converged);
    assert!((r.estimate - 0.5).abs() < 1e-6, "{r:?}");
}

#[test]
fn dirichlet_integrates_to_zero() {
    let h = IntegrandSpec::Dirichlet {
        max_denominator: 64,
        axis: None,
    };
    let r = run(&h, &unit(), 1e-9);
    assert!(r.converged);
    assert!(r.estimate.abs() < 1e-9, "{r:?}");
}

#[test]
fn inverse_sqrt_integrates_to_one() {
    let r = run(&IntegrandSpec::InvSqrt { axis: None }, &unit(), 1e-3);
    assert!(r.converged);
    assert!((r.estimate - 1.0).abs() < 1e-3, "{r:?}");
}

#[test]
fn additive_over_adjacent_intervals() {
    let tol = 1e-6;
    for h in [poly(&[1.0, -2.0, 3.0]), IntegrandSpec::InvSqrt { axis: None }] {
        let tol = if matches!(h, IntegrandSpec::InvSqrt { .. }) { 1e-3 } else { tol };
        let whole = run(&h, &unit(), tol).estimate;
        let parts = run(&h, &on(0.0, 0.5), tol).estimate + run(&h, &on(0.5, 1.0), tol).estimate;
        assert!((whole - parts).abs() < 2.0 * tol, "{whole} vs {parts}");
    }
}

#[test]
fn linear_in_a_scale_factor() {
    let tol = 1e-6;
    let base = poly(&[0.5, 0.0, 1.0]);
    let s = IntegrandSpec::Scaled {
        factor: -3.0,
        inner: Box::new(base.clone()),
    };
    let a = run(&base, &unit(), tol).estimate;
    let b = run(&s, &unit(), tol).estimate;
    assert!((b + 3.0 * a).abs() < 3.0 * tol);
}

#[test]
fn gauss_mass_over_the_line() {
    let h = IntegrandSpec::GaussMass {
        variance: 2.0,
        axis: None,
    };
    let r = run(&h, &DomainSpec::Interval(Cell1D::line()), 1e-9);
    assert!((r.estimate - 1.0).abs() < 1e-12);
}

fn xy2() -> IntegrandSpec {
    IntegrandSpec::Separable {
        factors: vec![
            Factor {
                axis: "x1".into(),
                f: poly(&[0.0, 1.0]),
            },
            Factor {
                axis: "x2".into(),
                f: poly(&[0.0, 0.0, 1.0]),
            },
        ],
    }
}

#[test]
fn box_and_slice_agree() {
    let tol = 1e-5;
    let dom = DomainSpec::unit_cube(2);
    let h = xy2();
    let g = h.default_gauge(&dom, tol).unwrap();
    let a = integrate(&h, &dom, &GaugeSchedule::new(g.clone()).with_construction(Construction::Box), tol, 40).unwrap();
    let b = integrate(
        &h,
        &dom,
        &GaugeSchedule::new(g).with_construction(Construction::Slice { order: None }),
        tol,
        40,
    )
    .unwrap();
    assert!(a.converged && b.converged);
    assert!((a.estimate - b.estimate).abs() < 2.0 * tol);
    assert!((a.estimate - 1.0 / 6.0).abs() < 2.0 * tol, "{}", a.estimate);
}

#[test]
fn fubini_for_a_product() {
    let dom = DomainSpec::unit_cube(2);
    let x = poly(&[0.0, 1.0]);
    let g = Gauge1D::constant(0.25, 2.0);
    let r = fubini_product(&x, &x, &dom, (&g, &g), 1e-7, 40).unwrap();
    assert!((r.iterated - r.direct).abs() < 5e-6);
    assert!((r.direct - 0.25).abs() < 5e-6);
}

#[test]
fn fubini_rejects_other_domains() {
    let g = Gauge1D::constant(0.25, 2.0);
    let x = poly(&[0.0, 1.0]);
    assert!(fubini_product(&x, &x, &unit(), (&g, &g), 1e-6, 10).is_err());
}

#[test]
fn refine_reports_budget_and_bad_tolerance() {
    let r = refine(1e-9, 10, |k| {
        if k < 2 {
            Ok((k as f64, 10))
        } else {
            Err(IntegrateError::Division(DivisionError::TooManyCells(10)))
        }
    })
    .unwrap();
    assert!(!r.converged);
    assert_eq!(r.rounds.len(), 2);
    assert!(r.stop_reason.unwrap().contains("budget"));
    assert!(matches!(refine(0.0, 3, |_| Ok((0.0, 1))), Err(IntegrateError::InvalidTolerance(_))));
    let first = refine(1e-9, 3, |_| Err(IntegrateError::Division(DivisionError::TooManyCells(1))));
    assert!(first.is_err());
}

#[test]
fn refine_exhausts_rounds() {
    let r = refine(1e-3, 3, |k| Ok((k as f64, 1))).unwrap();
    assert!(!r.converged);
    assert_eq!(r.refinement_depth, 3);
    assert_eq!(r.rounds[3].delta_prev, Some(1.0));
}

#[test]
fn brownian_g_integrates_to_one_on_the_cylinder() {
    let spec = BrownianSpec::new(1, vec![0.5, 1.0]).unwrap();
    let h = IntegrandSpec::BrownianG {
        spec: spec.clone(),
        quadrature: Quadrature::default(),
    };
    let dom = spec.domain();
    let r = integrate(&h, &dom, &GaugeSchedule::new(h.default_gauge(&dom, 1e-6).unwrap()), 1e-6, 1).unwrap();
    assert!((r.estimate - 1.0).abs() < 1e-9);
}

#[test]
fn integrand_specs_round_trip() {
    let h = IntegrandSpec::Scaled {
        factor: 2.0,
        inner: Box::new(xy2()),
    };
    let s = serde_json::to_string(&h).unwrap();
    let back: IntegrandSpec = serde_json::from_str(&s).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), s);
    let parsed: IntegrandSpec = serde_json::from_str(r#"{"name":"dirichlet"}"#).unwrap();
    assert!(matches!(parsed, IntegrandSpec::Dirichlet { max_denominator: 64, axis: None }));
}
