use std::f64::consts::PI;

use nondiv::coeff::Preset;
use nondiv::elliptic::GridFunction;
use nondiv::grid::{build_domain, ShapeSpec};
use nondiv::operator::{assemble, DiscreteOperator, Scheme};
use nondiv::semigroup::{
    eigen_reference, evolve, evolve_backward_euler, laplacian_eigenvalue, yosida_evolve_with,
    EvolutionMethod,
};

fn heat(h: f64) -> (DiscreteOperator, GridFunction) {
    let grid = build_domain(&ShapeSpec::unit_square(), h).unwrap();
    let op = assemble(
        &grid,
        &Preset::Heat.sample(&grid).unwrap(),
        Scheme::UpwindFirstOrder,
    )
    .unwrap();
    let u0 = GridFunction::sample(&grid, |x, y| (PI * x).sin() * (PI * y).sin()).unwrap();
    (op, u0)
}

fn sup_diff(a: &GridFunction, b: &[f64]) -> f64 {
    a.values()
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn yosida_matches_its_closed_form_on_an_eigenmode() {
    let h = 1.0 / 16.0;
    let (op, u0) = heat(h);
    let lam = laplacian_eigenvalue(h, 1, 1);
    for n in [16u32, 256] {
        let nf = n as f64;
        let factor = (-0.1 * nf * lam / (nf + lam)).exp();
        let expect: Vec<f64> = u0.values().iter().map(|v| v * factor).collect();
        for dense in [true, false] {
            let y = yosida_evolve_with(&op, &u0, 0.1, n, dense).unwrap();
            let tol = if dense { 1e-13 } else { 1e-8 };
            assert!(sup_diff(&y, &expect) < tol, "n={n} dense={dense}");
        }
    }
}

#[test]
fn methods_agree_with_the_eigen_reference() {
    let h = 1.0 / 16.0;
    let (op, u0) = heat(h);
    let t = 0.1;
    let exact: Vec<f64> = u0
        .values()
        .iter()
        .map(|v| v * (-laplacian_eigenvalue(h, 1, 1) * t).exp())
        .collect();
    let eig = eigen_reference(&op, &u0, t).unwrap();
    assert!(sup_diff(&eig, &exact) < 1e-12);
    let be = evolve(&op, &u0, t, "be:1024".parse::<EvolutionMethod>().unwrap()).unwrap();
    assert!(sup_diff(&be, &exact) < 1e-3);
    let y = evolve(&op, &u0, t, EvolutionMethod::Yosida { n: 4096 }).unwrap();
    assert!(sup_diff(&y, &exact) < 2e-3);
}

#[test]
fn backward_euler_composes() {
    let (op, u0) = heat(1.0 / 8.0);
    let whole = evolve_backward_euler(&op, &u0, 0.5, 10).unwrap();
    let half = evolve_backward_euler(&op, &u0, 0.25, 5).unwrap();
    let twice = evolve_backward_euler(&op, &half, 0.25, 5).unwrap();
    assert!(sup_diff(&whole, twice.values()) < 1e-14);
}
