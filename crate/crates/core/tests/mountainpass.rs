mod common;

use std::f64::consts::PI;

use biharm::minimizer::Subspace;
use biharm::mountainpass::*;
use biharm::problem::{eval_f, ProblemData};
use biharm::torus::{Complex64, SpectralField};
use biharm::Error;
use common::{geom1, rel};

fn synthetic(k: f64) -> f64 {
    -(k - 1.0) * (k - 1.0) + 0.5
}

#[test]
fn zeros_of_a_parabola() {
    for log_scale in [false, true] {
        let ks: Vec<f64> = (0..25).map(|i| 0.05 + 0.1 * i as f64).collect();
        let mus: Vec<f64> = ks.iter().map(|&k| synthetic(k)).collect();
        let opts = ZeroOptions {
            log_scale,
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            ..ZeroOptions::default()
        };
        let z = find_mu_zeros(&ks, &mus, &mut |k| Ok(synthetic(k)), &opts).unwrap();
        let r = 0.5f64.sqrt();
        assert!(rel(z.l1, 1.0 - r) < 1e-8, "{}", z.l1);
        assert!(rel(z.l2, 1.0 + r) < 1e-8, "{}", z.l2);
        assert!((z.l_o - 1.0).abs() < 1e-4);
        assert!(rel(z.mu_l_o, 0.5) < 1e-8);
        assert!(z.mu_left < 0.0 && z.mu_right < 0.0);
        assert!(z.k_left < z.l1 && z.k_right > z.l2);
    }
}

#[test]
fn zeros_need_an_enclosed_hump() {
    let ks = [1.0, 2.0, 3.0, 4.0];
    let mut never = |_k: f64| -> biharm::Result<f64> { panic!("no refinement expected") };
    let opts = ZeroOptions::default();
    assert!(matches!(
        find_mu_zeros(&ks, &[-1.0, -2.0, -3.0, -4.0], &mut never, &opts),
        Err(Error::ShapeNotFound(_))
    ));
    assert!(matches!(
        find_mu_zeros(&ks, &[-1.0, 1.0, 2.0, 3.0], &mut never, &opts),
        Err(Error::ShapeNotFound(_))
    ));
    assert!(matches!(
        find_mu_zeros(&[1.0, 1.0, 2.0], &[-1.0, 1.0, -1.0], &mut never, &opts),
        Err(Error::InvalidArgument(_))
    ));
}

/// `a = 0`, `h = -1`, `f = cos(2 pi x) - 1/4`, `q = 4`, restricted to
/// `u = r (cos t + sin t cos(2 pi x))`. Then
/// `F = r^2 Q(t) - r^4 N(t)` with `Q = -cos^2 t + sin^2 t ((2 pi)^4 - 1) / 2`.
struct Toy {
    thetas: Vec<f64>,
    quad: Vec<f64>,
    nonlin: Vec<f64>,
}

impl Toy {
    fn new(n_theta: usize) -> Self {
        let xs: Vec<f64> = (0..512).map(|i| i as f64 / 512.0).collect();
        let w4 = (2.0 * PI).powi(4);
        let thetas: Vec<f64> = (0..n_theta).map(|i| 2.0 * PI * i as f64 / n_theta as f64).collect();
        let quad = thetas
            .iter()
            .map(|t| -t.cos().powi(2) + t.sin().powi(2) * (w4 - 1.0) / 2.0)
            .collect();
        let nonlin = thetas
            .iter()
            .map(|t| {
                xs.iter()
                    .map(|x| {
                        let c = (2.0 * PI * x).cos();
                        (c - 0.25) * (t.cos() + t.sin() * c).powi(4)
                    })
                    .sum::<f64>()
                    / 512.0
            })
            .collect();
        Toy { thetas, quad, nonlin }
    }

    fn energy(&self, i: usize, r: f64) -> f64 {
        r * r * self.quad[i] - r.powi(4) * self.nonlin[i]
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Lowest level `c` at which `{F <= c}` on the polar grid connects the two
/// given cells.
fn sublevel_saddle(toy: &Toy, radii: &[f64], a: (usize, usize), b: (usize, usize)) -> f64 {
    let (nt, nr) = (toy.thetas.len(), radii.len());
    let id = |i: usize, j: usize| i * nr + j;
    let mut cells: Vec<(f64, usize, usize)> = Vec::with_capacity(nt * nr);
    for i in 0..nt {
        for (j, &r) in radii.iter().enumerate() {
            cells.push((toy.energy(i, r), i, j));
        }
    }
    cells.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut parent: Vec<usize> = (0..nt * nr).collect();
    let mut active = vec![false; nt * nr];
    for (e, i, j) in cells {
        active[id(i, j)] = true;
        let mut nbrs = vec![(((i + 1) % nt), j), (((i + nt - 1) % nt), j)];
        if j > 0 {
            nbrs.push((i, j - 1));
        }
        if j + 1 < nr {
            nbrs.push((i, j + 1));
        }
        for (ii, jj) in nbrs {
            if active[id(ii, jj)] {
                let (p, q) = (find(&mut parent, id(i, j)), find(&mut parent, id(ii, jj)));
                parent[p] = q;
            }
        }
        if active[id(a.0, a.1)] && active[id(b.0, b.1)] {
            let (p, q) = (find(&mut parent, id(a.0, a.1)), find(&mut parent, id(b.0, b.1)));
            if p == q {
                return e;
            }
        }
    }
    f64::INFINITY
}

#[test]
fn two_mode_mountain_pass_matches_sublevel_oracle() {
    let m = 32;
    let g = geom1(m);
    let p = ProblemData::from_expressions(&g, "0", "-1", "cos(2*pi*x1) - 0.25").unwrap();
    let q = 4.0;
    let toy = Toy::new(1440);
    // the far endpoint sits beyond the zero of F along the steepest direction
    let (i_far, _) = toy
        .nonlin
        .iter()
        .zip(&toy.quad)
        .enumerate()
        .filter(|(_, (n, _))| **n > 0.0)
        .map(|(i, (n, qd))| (i, qd / n))
        .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
        .unwrap();
    let r_zero = (toy.quad[i_far] / toy.nonlin[i_far]).sqrt();
    let r_far = 1.5 * r_zero;
    let r_near = 0.5;
    let n_r = 3000;
    let (lo, hi) = (0.05f64.ln(), (3.0 * r_far).ln());
    let mut radii: Vec<f64> = (0..n_r).map(|j| (lo + (hi - lo) * j as f64 / (n_r - 1) as f64).exp()).collect();
    // put both endpoints on the grid
    let j_near = radii.iter().position(|&r| r >= r_near).unwrap();
    radii[j_near] = r_near;
    let j_far = radii.iter().position(|&r| r >= r_far).unwrap();
    radii[j_far] = r_far;
    let oracle = sublevel_saddle(&toy, &radii, (0, j_near), (i_far, j_far));
    assert!(oracle.is_finite() && oracle > 0.0);

    let mode = |t: f64, r: f64| {
        let mut c = vec![Complex64::new(0.0, 0.0); m];
        c[0] = Complex64::new(r * t.cos(), 0.0);
        c[1] = Complex64::new(0.5 * r * t.sin(), 0.0);
        c[m - 1] = c[1];
        SpectralField::from_coeffs(&g, c).unwrap()
    };
    let u1 = mode(0.0, r_near);
    let u2 = mode(toy.thetas[i_far], r_far);
    assert!(rel(eval_f(&u2, &p, q).unwrap(), toy.energy(i_far, r_far)) < 1e-10);
    let sub = Subspace::new(&[SpectralField::constant(&g, 1.0), mode(PI / 2.0, 1.0)]).unwrap();
    let res = mountain_pass_in(&p, q, &u1, &u2, &MountainPassOptions::default(), Some(&sub)).unwrap();
    assert!(rel(res.nu, oracle) < 1e-3, "{} vs {oracle}", res.nu);
    assert!(res.path_max >= res.nu * (1.0 - 1e-6));
    assert!(res.report.identity_gap_rel < 1e-6);
    // each accepted deformation lowers the maximum
    assert!(res.max_history.windows(2).all(|w| w[1] <= w[0]));
    // the endpoints never move
    let last = res.profile.iter().map(|r| r.node).max().unwrap();
    let (e0, e1) = (res.profile[0].energy, res.profile[last].energy);
    assert!(rel(e0, eval_f(&u1, &p, q).unwrap()) < 1e-10);
    assert!(rel(e1, eval_f(&u2, &p, q).unwrap()) < 1e-10);
    for row in &res.profile {
        if row.node == 0 {
            assert_eq!(row.energy, e0);
        } else if row.node == last {
            assert_eq!(row.energy, e1);
        }
    }
}

#[test]
fn mountain_pass_rejects_degenerate_paths() {
    let g = geom1(32);
    let p = ProblemData::from_expressions(&g, "0", "-1", "cos(2*pi*x1) - 0.25").unwrap();
    let u = SpectralField::constant(&g, 0.5);
    let opts = MountainPassOptions {
        segments: 1,
        ..MountainPassOptions::default()
    };
    assert!(matches!(mountain_pass(&p, 4.0, &u, &u, &opts), Err(Error::InvalidArgument(_))));
    // identical endpoints leave nothing to climb
    assert!(matches!(
        mountain_pass(&p, 4.0, &u, &u, &MountainPassOptions::default()),
        Err(Error::Collapse { .. })
    ));
}
