mod common;

use std::f64::consts::PI;

use biharm::minimizer::*;
use biharm::problem::{el_residual, Normalization, ProblemData};
use biharm::torus::{refined_power_integral, SpectralField};
use biharm::Error;
use common::{geom1, random_field, rel};
use proptest::prelude::*;

fn bundled(m: usize) -> ProblemData {
    ProblemData::from_expressions(&geom1(m), "0.2", "-1", "cos(2*pi*x1) - 0.25").unwrap()
}

/// Brute-force minimum of `||u''||^2 - a_c ||u'||^2 - ||u||^2` over
/// `u = a + b cos + c sin`
/// rescaled to `int |u|^q = k`. Translations rotate `(b, c)`, so `c = 0`
/// loses nothing and the search runs over `u = cos t + sin t cos(2 pi x)`:
/// a fine sweep in `t`, then successive local refinement, with a
/// 2048-point quadrature of its own.
fn three_mode_oracle(a_c: f64, q: f64, k: f64) -> f64 {
    let n = 2048;
    let cs: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).cos()).collect();
    let w2 = (2.0 * PI).powi(2);
    let w4 = w2 * w2;
    let value = |t: f64| {
        let (a, b) = (t.cos(), t.sin());
        let mass = cs.iter().map(|c| (a + b * c).abs().powf(q)).sum::<f64>() / n as f64;
        let s = (k / mass).powf(1.0 / q);
        s * s * (0.5 * (w4 - a_c * w2 - 1.0) * b * b - a * a)
    };
    let (mut lo, mut hi) = (0.0, PI);
    let mut best = (f64::INFINITY, 0.0);
    for _ in 0..6 {
        let steps = 200;
        for i in 0..=steps {
            let t = lo + (hi - lo) * i as f64 / steps as f64;
            let v = value(t);
            if v < best.0 {
                best = (v, t);
            }
        }
        let w = (hi - lo) / steps as f64;
        lo = best.1 - 2.0 * w;
        hi = best.1 + 2.0 * w;
    }
    best.0
}

#[test]
fn pure_bilaplacian_matches_brute_force() {
    let g = geom1(64);
    let p = ProblemData::from_expressions(&g, "0", "-1", "0").unwrap();
    let opts = SolverOptions::default();
    for (q, k) in [(2.5, 1.0), (3.0, 4.0), (6.0, 0.5)] {
        let (m, _) = mu_multistart(&p, q, k, &opts).unwrap();
        // constants win: mu = -k^{2/q}
        assert!(rel(m.mu, -k.powf(2.0 / q)) < 1e-10);
        assert!(rel(m.mu, three_mode_oracle(0.0, q, k)) < 1e-4);
    }
}

#[test]
fn strong_gradient_term_matches_brute_force() {
    // a (2 pi)^2 = (2 pi)^4 + 1 makes the first mode twice as cheap as the
    // constant per unit L2 mass, so the minimizer mixes both
    let w2 = (2.0 * PI).powi(2);
    let a_c = w2 + 1.0 / w2;
    let p = ProblemData::from_expressions(&geom1(64), &format!("{a_c:?}"), "-1", "0").unwrap();
    let opts = SolverOptions::default();
    for (q, k) in [(2.5, 1.0), (4.0, 2.0)] {
        let (m, _) = mu_multistart(&p, q, k, &opts).unwrap();
        let oracle = three_mode_oracle(a_c, q, k);
        assert!(m.mu < -k.powf(2.0 / q) * (1.0 + 1e-3));
        // the full space can only do better than three modes, and the
        // harmonics it adds are expensive
        assert!(m.mu <= oracle * (1.0 - 1e-12), "{} vs {oracle}", m.mu);
        assert!(rel(m.mu, oracle) < 1e-3, "q {q} k {k}: {} vs {oracle}", m.mu);
    }
}

#[test]
fn minimizers_lie_on_the_sphere_and_satisfy_the_equation() {
    let p = bundled(64);
    let opts = SolverOptions::default();
    for &k in &[0.5, 50.0, 5e3] {
        let (m, _) = mu_multistart(&p, 2.5, k, &opts).unwrap();
        assert!(m.converged);
        assert!(rel(refined_power_integral(&m.v, 2.5), k) < 1e-12);
        let r = el_residual(&m.v, &p, 2.5, m.lambda, Normalization::Variational).unwrap();
        assert!(rel(r, m.residual) < 1e-6 || r < 1e-12);
        assert!(m.residual <= 1e-6 * (1.0 + m.mu.abs()), "k {k}: {}", m.residual);
    }
}

#[test]
fn sphere_minimization_rejects_bad_input() {
    let p = bundled(32);
    let u = random_field(p.geometry(), 3, 2.0);
    let opts = SolverOptions::default();
    assert!(matches!(minimize_on_sphere(&p, 2.5, 0.0, &u, &opts), Err(Error::InvalidArgument(_))));
    let z = SpectralField::zeros(p.geometry());
    assert!(matches!(minimize_on_sphere(&p, 2.5, 1.0, &z, &opts), Err(Error::InvalidArgument(_))));
    let other = random_field(&geom1(64), 3, 2.0);
    assert!(matches!(minimize_on_sphere(&p, 2.5, 1.0, &other, &opts), Err(Error::GeometryMismatch)));
}

#[test]
fn multistart_is_deterministic() {
    let p = bundled(64);
    let opts = SolverOptions::default();
    let (a, wa) = mu_multistart(&p, 2.5, 300.0, &opts).unwrap();
    let (b, wb) = mu_multistart(&p, 2.5, 300.0, &opts).unwrap();
    assert_eq!(a.mu.to_bits(), b.mu.to_bits());
    assert_eq!(wa, wb);
    assert_eq!(a.v.samples(), b.v.samples());
}

#[test]
fn seeds_are_the_documented_shapes() {
    let p = bundled(64);
    let names: Vec<String> = seed_fields(&p, 7, 3).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names.len(), 8);
    assert_eq!(names[0], "constant");
    assert!(names.iter().filter(|n| n.starts_with("random")).count() == 3);
}

#[test]
fn small_mass_curve_is_below_the_constant_bound() {
    // mu <= F(k^{1/q}) = k^{2/q} int h - k int f, negative for small k
    let p = bundled(64);
    let curve = trace_mu_curve(&p, 2.5, 1e-3, 1e2, 8, &SolverOptions::default()).unwrap();
    for pt in &curve.points {
        let bound = pt.k.powf(0.8) * p.int_h() - pt.k * p.int_f();
        assert!(pt.mu <= bound + 1e-12 * bound.abs());
        assert!(pt.mu < 0.0);
    }
    assert_eq!(curve.minimizers.len(), 8);
    assert!(trace_mu_curve(&p, 2.5, 1.0, 0.5, 8, &SolverOptions::default()).is_err());
}

#[test]
fn geometric_grid_endpoints() {
    let g = geometric_grid(1e-2, 1e4, 7);
    assert_eq!(g[0], 1e-2);
    assert_eq!(g[6], 1e4);
    for w in g.windows(2) {
        assert!(rel(w[1] / w[0], 10.0) < 1e-12);
    }
}

#[test]
fn first_solution_of_the_bundled_example() {
    let p = bundled(128);
    let q = 2.5;
    let l_q = 53496.336672958314;
    let r = first_solution(&p, q, l_q, None, &FirstSolutionOptions::default()).unwrap();
    assert!(r.converged);
    assert!(r.energy < 0.0);
    // F = (q/2 - 1) int f |v|^q < 0 forces int f |v|^q < 0
    assert!(r.int_f_v_q < 0.0);
    assert!(r.identity_gap_rel < 1e-6);
    assert!(r.mass_v < l_q);
    assert!(r.mass_u <= (q / 2.0).powf(q / (q - 2.0)) * l_q + 1e-8);
    assert!(r.residual <= 1e-6 * (1.0 + r.energy.abs()));
    assert!(!r.degenerate);
    let u_from_v = r.v.scale((q / 2.0).powf(1.0 / (q - 2.0)));
    assert_eq!(u_from_v.samples(), r.u.samples());
}

#[test]
fn first_solution_rejects_bad_radii() {
    let p = bundled(32);
    for l in [-1.0, 0.0, f64::NAN] {
        assert!(matches!(
            first_solution(&p, 2.5, l, None, &FirstSolutionOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
    }
}

#[test]
fn degenerate_nonlinearity_is_flagged() {
    let p = ProblemData::from_expressions(&geom1(32), "0", "-1", "0").unwrap();
    let opts = FirstSolutionOptions {
        degenerate_radius: 2.0,
        ..FirstSolutionOptions::default()
    };
    let r = first_solution(&p, 2.5, f64::INFINITY, None, &opts).unwrap();
    assert!(r.degenerate);
    // the constant of mass 2 minimizes -||u||^2 on the ball
    assert!(rel(r.energy, -(2f64.powf(0.8))) < 1e-8);
    let c = r.v.mean();
    assert!(r.v.samples().iter().all(|&v| rel(v, c) < 1e-6));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rescaling_hits_the_mass(seed in 0u64..1000, k in 1e-6f64..1e6, q in 2.1f64..6.0) {
        let g = geom1(32);
        let u = random_field(&g, seed, 2.0);
        let v = rescale_to_mass(&u, q, k).unwrap();
        prop_assert!(rel(refined_power_integral(&v, q), k) < 1e-12);
    }

    #[test]
    fn subspace_projection_is_idempotent(seed in 0u64..1000) {
        let g = geom1(32);
        let basis: Vec<SpectralField> = (0..3).map(|i| random_field(&g, seed * 10 + i, 2.0)).collect();
        let s = Subspace::new(&basis).unwrap();
        let u = random_field(&g, seed + 77, 2.0);
        let p1 = s.project(&u);
        let p2 = s.project(&p1);
        let d = p1.sub(&p2).unwrap();
        prop_assert!(biharm::torus::l2_norm(&d) <= 1e-12 * biharm::torus::l2_norm(&p1).max(1.0));
        prop_assert_eq!(s.dim(), 3);
    }
}
