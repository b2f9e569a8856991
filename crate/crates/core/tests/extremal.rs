use nalgebra::{DMatrix, DVector};
use sasaki_core::extremal::jet::Jet;
use sasaki_core::extremal::profile::BasicFunction;
use sasaki_core::extremal::{
    deformed_structure, energy, energy_fd, profile_csv, run_flow, sigma_coordinate, BasicProfile, FlowConfig, Reduced,
};
use sasaki_core::curvature::FdOptions;
use sasaki_core::{graph_chart, random_sphere_point, QuadratureSpec, SpherePoint, Weight};

fn w12() -> Weight {
    Weight::new(vec![1.0, 2.0]).unwrap()
}

/// `f(sigma) = sigma^2 + 0.3 sigma^3`.
struct Cubic;

impl BasicFunction for Cubic {
    fn jet(&self, sigma: f64) -> Jet {
        let s = Jet::variable(sigma);
        s * s + s * s * s * 0.3
    }
}

/// `div grad f` of the ambient metric field in a graph chart, by nested
/// central differences.
fn metric_laplacian(
    metric: impl Fn(&SpherePoint) -> DMatrix<f64>,
    f: impl Fn(&SpherePoint) -> f64,
    p: &SpherePoint,
    h: f64,
) -> f64 {
    let chart = graph_chart(p).unwrap();
    let m = chart.dim();
    let point = |u: &DVector<f64>| chart.at(u.clone()).to_point().unwrap();
    let chart_metric = |u: &DVector<f64>| {
        let c = chart.at(u.clone());
        let jac = c.jacobian().unwrap();
        jac.transpose() * metric(&c.to_point().unwrap()) * jac
    };
    let grad = |u: &DVector<f64>| {
        DVector::from_fn(m, |j, _| {
            let mut up = u.clone();
            up[j] += h;
            let mut dn = u.clone();
            dn[j] -= h;
            (f(&point(&up)) - f(&point(&dn))) / (2.0 * h)
        })
    };
    let flux = |u: &DVector<f64>| {
        let g = chart_metric(u);
        let vol = g.determinant().sqrt();
        g.try_inverse().unwrap() * grad(u) * vol
    };
    let mut div = 0.0;
    for i in 0..m {
        let mut up = chart.u.clone();
        up[i] += h;
        let mut dn = chart.u.clone();
        dn[i] -= h;
        div += (flux(&up)[i] - flux(&dn)[i]) / (2.0 * h);
    }
    div / chart_metric(&chart.u).determinant().sqrt()
}

#[test]
fn basic_laplacian_is_the_metric_laplacian() {
    let w = w12();
    let red = Reduced::new(&w).unwrap();
    for phi in [BasicProfile::zero(8), BasicProfile::new(vec![0.04, -0.01]).unwrap()] {
        for seed in 0..3 {
            let p = random_sphere_point(1, 200 + seed).unwrap();
            let sigma = sigma_coordinate(&w, &p).unwrap();
            let fd = metric_laplacian(
                |q| deformed_structure(&w, &phi, q).unwrap().frame.g,
                |q| Cubic.value(sigma_coordinate(&w, q).unwrap()),
                &p,
                2e-3,
            );
            // The reduced Laplacian is the positive one, `-div grad`.
            let reduced = red.geometry(&phi, sigma).laplacian(Cubic.jet(sigma)).value();
            assert!((fd + reduced).abs() < 1e-4 * reduced.abs().max(1.0), "{fd} {reduced}");
        }
    }
}

#[test]
fn baseline_is_a_local_minimum_along_random_directions() {
    let w = w12();
    let spec = QuadratureSpec::default();
    let e0 = energy(&w, &BasicProfile::zero(8), &spec).unwrap();
    let dirs = [
        BasicProfile::new(vec![0.7, -0.3, 0.2, 0.1]).unwrap(),
        BasicProfile::new(vec![-0.2, 0.5, 0.0, -0.1, 0.05]).unwrap(),
        BasicProfile::single(8, 6, 0.01).unwrap(),
    ];
    for dir in &dirs {
        for t in [-1e-2, -5e-3, -1e-3, 1e-3, 5e-3, 1e-2] {
            let e = energy(&w, &BasicProfile::zero(8).axpy(t, dir), &spec).unwrap();
            assert!(e - e0 >= -1e-6, "{t} {}", e - e0);
        }
    }
}

#[test]
fn curvature_energy_agrees_with_the_reduced_energy() {
    let w = w12();
    let phi = BasicProfile::new(vec![0.03, 0.01]).unwrap();
    let spec = QuadratureSpec::gauss(24);
    let exact = energy(&w, &phi, &QuadratureSpec::default()).unwrap();
    let fd = energy_fd(&w, &phi, &spec, FdOptions { h: 2e-3, richardson: true }).unwrap();
    assert!((fd - exact).abs() < 1e-3 * exact, "{fd} {exact}");
}

#[test]
fn flow_is_deterministic_and_serialises() {
    let w = w12();
    let phi0 = BasicProfile::single(8, 1, 0.05).unwrap();
    let cfg = FlowConfig::default();
    let a = serde_json::to_string(&run_flow(&w, &phi0, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_flow(&w, &phi0, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    for key in ["energies", "grad_norms", "final", "iterations", "converged", "extremal_residual"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn inadmissible_start_is_rejected() {
    let w = w12();
    let wild = BasicProfile::single(8, 4, 2.0).unwrap();
    assert!(run_flow(&w, &wild, &FlowConfig::default()).is_err());
    assert!(profile_csv(&w, &wild, 10).is_err());
}
