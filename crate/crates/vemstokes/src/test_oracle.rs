//! Independent dense-quadrature assembly of the local projector
//! systems, used as the oracle side of the unit tests. Edge integrals use
//! composite Simpson, cell integrals a high-order tensor rule on the
//! centroid fan, and the normal trace is reconstructed by solving its
//! endpoint/mean conditions directly.

use crate::geometry::{Polygon, Vec2};
use crate::local::{mixed_to_phi, ElementGeometry, ProjectorFix};
use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector6};


    

    pub fn simpson_edge(a: Vec2, b: Vec2, f: &dyn Fn(Vec2) -> f64, panels: usize) -> f64 {
        let len = a.dist(b);
        let m = 2 * panels;
        let mut acc = f(a) + f(b);
        for i in 1..m {
            let t = i as f64 / m as f64;
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + (b - a) * t);
        }
        acc * len / (3.0 * m as f64)
    }

    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(n);
        for i in 1..=n {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    }

    fn legendre(n: usize, x: f64) -> (f64, f64) {
        let (mut p0, mut p1) = (1.0, x);
        for k in 2..=n {
            let k = k as f64;
            let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        (p1, dp)
    }

    /// Centroid-fan integral with a 12x12 Gauss tensor rule per triangle
    /// through the collapsed-square map (exact far beyond the needs here).
    pub fn cell_integral(poly: &Polygon, f: &dyn Fn(Vec2) -> f64) -> f64 {
        let gl: Vec<(f64, f64)> = gauss_legendre(12)
            .into_iter()
            .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .collect();
        let c = poly.centroid();
        let mut acc = 0.0;
        for i in 0..poly.num_vertices() {
            let (a, b) = poly.edge(i);
            let two_area = (a - c).cross(b - c);
            for &(xi, wx) in &gl {
                for &(eta, wy) in &gl {
                    let p = c + ((a - c) * (1.0 - eta) + (b - c) * eta) * xi;
                    acc += wx * wy * two_area * xi * f(p);
                }
            }
        }
        acc
    }

    /// Normal-trace quadratic from its endpoint values and mean, by solving
    /// the 3x3 coefficient system.
    fn trace_fn(geo: &ElementGeometry, dofs: &[f64], i: usize) -> impl Fn(f64) -> Vec2 {
        let n = geo.layout.n;
        let (a, b) = geo.poly.edge(i);
        let t = (b - a) / a.dist(b);
        let outward = Vec2::new(t.y, -t.x);
        let va = Vec2::new(dofs[2 * i], dofs[2 * i + 1]);
        let k = (i + 1) % n;
        let vb = Vec2::new(dofs[2 * k], dofs[2 * k + 1]);
        let mu = geo.layout.sigma[i] * dofs[geo.layout.edge_dof(i)];
        let m = Matrix3::new(
            1.0, 0.0, 0.0, //
            1.0, 1.0, 1.0, //
            1.0, 0.5, 1.0 / 3.0,
        );
        let rhs = nalgebra::Vector3::new(va.dot(outward), vb.dot(outward), mu);
        let c = m.lu().solve(&rhs).expect("trace system");
        let (ga, gb) = (va.dot(t), vb.dot(t));
        move |s: f64| {
            let nv = c[0] + c[1] * s + c[2] * s * s;
            let tv = ga * (1.0 - s) + gb * s;
            outward * nv + t * tv
        }
    }

    const PANELS: usize = 400;

    pub fn build_d(geo: &ElementGeometry) -> DMatrix<f64> {
        let n = geo.layout.n;
        let mut d = DMatrix::zeros(3 * n, 6);
        for k in 0..n {
            let p = geo.poly.vertices()[k];
            for j in 0..6 {
                let v = geo.basis.eval_vector(j, p);
                d[(2 * k, j)] = v.x;
                d[(2 * k + 1, j)] = v.y;
            }
        }
        for i in 0..n {
            let (a, b) = geo.poly.edge(i);
            let len = a.dist(b);
            let ng = geo.poly.outward_normal(i) * geo.layout.sigma[i];
            for j in 0..6 {
                let f = |p: Vec2| geo.basis.eval_vector(j, p).dot(ng);
                d[(geo.layout.edge_dof(i), j)] = simpson_edge(a, b, &f, PANELS) / len;
            }
        }
        d
    }

    pub fn build_pi(geo: &ElementGeometry, nu: f64) -> DMatrix<f64> {
        build_pi_fixed(geo, nu, ProjectorFix::default())
    }

    pub fn build_pi_fixed(geo: &ElementGeometry, nu: f64, fix: ProjectorFix) -> DMatrix<f64> {
        let n = geo.layout.n;
        let perimeter = geo.poly.perimeter();
        let mut lhs = Matrix6::zeros();
        for j in 0..6 {
            match fix {
                ProjectorFix::BoundaryMean => {
                    let fx = |p: Vec2| geo.basis.eval_vector(j, p).x;
                    let fy = |p: Vec2| geo.basis.eval_vector(j, p).y;
                    for i in 0..n {
                        let (a, b) = geo.poly.edge(i);
                        lhs[(0, j)] += simpson_edge(a, b, &fx, PANELS) / perimeter;
                        lhs[(1, j)] += simpson_edge(a, b, &fy, PANELS) / perimeter;
                    }
                }
                ProjectorFix::VertexAverage => {
                    for k in 0..n {
                        let v = geo.basis.eval_vector(j, geo.poly.vertices()[k]);
                        lhs[(0, j)] += v.x / n as f64;
                        lhs[(1, j)] += v.y / n as f64;
                    }
                }
            }
        }
        for i in 2..6 {
            for j in 0..6 {
                let gi = geo.basis.vector_grad(i);
                let gj = geo.basis.vector_grad(j);
                let mut frob = 0.0;
                for r in 0..2 {
                    for c in 0..2 {
                        frob += gi[r][c] * gj[r][c];
                    }
                }
                lhs[(i, j)] = nu * cell_integral(&geo.poly, &|_| 1.0) * frob;
            }
        }
        let lu = lhs.lu();

        let mut pi = DMatrix::zeros(6, 3 * n);
        for dof in 0..3 * n {
            let mut e = vec![0.0; 3 * n];
            e[dof] = 1.0;
            let mut rhs = Vector6::zeros();
            if fix == ProjectorFix::VertexAverage {
                for k in 0..n {
                    rhs[0] += e[2 * k] / n as f64;
                    rhs[1] += e[2 * k + 1] / n as f64;
                }
            }
            for i in 0..n {
                let (a, b) = geo.poly.edge(i);
                let len = a.dist(b);
                let nrm = geo.poly.outward_normal(i);
                let tr = trace_fn(geo, &e, i);
                let param = move |p: Vec2| (p - a).dot(b - a) / (len * len);
                if fix == ProjectorFix::BoundaryMean {
                    rhs[0] += simpson_edge(a, b, &|p| tr(param(p)).x, PANELS) / perimeter;
                    rhs[1] += simpson_edge(a, b, &|p| tr(param(p)).y, PANELS) / perimeter;
                }
                for row in 2..6 {
                    let g = geo.basis.vector_grad(row);
                    let f = |p: Vec2| {
                        let v = tr(param(p));
                        let gn = Vec2::new(
                            g[0][0] * nrm.x + g[0][1] * nrm.y,
                            g[1][0] * nrm.x + g[1][1] * nrm.y,
                        );
                        nu * gn.dot(v)
                    };
                    rhs[row] += simpson_edge(a, b, &f, PANELS);
                }
            }
            let col = lu.solve(&rhs).expect("oracle projector solve");
            pi.set_column(dof, &DVector::from_iterator(6, col.iter().copied()));
        }
        pi
    }

    pub fn build_pi0(geo: &ElementGeometry) -> DMatrix<f64> {
        let n = geo.layout.n;
        let pi = build_pi(geo, 1.0);
        let area = cell_integral(&geo.poly, &|_| 1.0);
        let h = geo.basis.h;
        let p2_exp: [(u32, u32); 5] = [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

        let mut mass = Matrix6::zeros();
        for i in 0..6 {
            for j in 0..6 {
                mass[(i, j)] = cell_integral(&geo.poly, &|p| {
                    geo.basis.eval_vector(i, p).dot(geo.basis.eval_vector(j, p))
                });
            }
        }
        let c = mixed_to_phi(h);

        let mut pi0 = DMatrix::zeros(6, 3 * n);
        for dof in 0..3 * n {
            let mut e = vec![0.0; 3 * n];
            e[dof] = 1.0;
            // dense flux for the constant divergence
            let mut flux = 0.0;
            for i in 0..n {
                let (a, b) = geo.poly.edge(i);
                let len = a.dist(b);
                let nrm = geo.poly.outward_normal(i);
                let tr = trace_fn(geo, &e, i);
                flux += simpson_edge(
                    a,
                    b,
                    &|p| tr((p - a).dot(b - a) / (len * len)).dot(nrm),
                    PANELS,
                );
            }
            let div = flux / area;
            let mut t = Vector6::zeros();
            for (k, &(ea, eb)) in p2_exp.iter().enumerate() {
                let mut boundary = 0.0;
                for i in 0..n {
                    let (a, b) = geo.poly.edge(i);
                    let len = a.dist(b);
                    let nrm = geo.poly.outward_normal(i);
                    let tr = trace_fn(geo, &e, i);
                    boundary += simpson_edge(
                        a,
                        b,
                        &|p| {
                            tr((p - a).dot(b - a) / (len * len)).dot(nrm)
                                * geo.basis.eval(ea, eb, p)
                        },
                        PANELS,
                    );
                }
                let cell_moment = cell_integral(&geo.poly, &|p| geo.basis.eval(ea, eb, p));
                t[k] = -div * cell_moment + boundary;
            }
            // rotational part through the enhancement identity
            let s_pi = pi.column(dof);
            t[5] = cell_integral(&geo.poly, &|p| {
                let mut v = Vec2::default();
                for j in 0..6 {
                    v = v + geo.basis.eval_vector(j, p) * s_pi[j];
                }
                let q = geo.basis.local(p);
                v.dot(Vec2::new(-q.y / h, q.x / h))
            });
            let b = c.lu().solve(&t).expect("oracle mixed solve");
            let s = mass.lu().solve(&b).expect("oracle mass solve");
            pi0.set_column(dof, &DVector::from_iterator(6, s.iter().copied()));
        }
        pi0
    }

    pub fn stiffness(geo: &ElementGeometry, nu: f64, alpha: f64) -> DMatrix<f64> {
        let n = geo.layout.n;
        let pi = build_pi(geo, nu);
        let d = build_d(geo);
        let mut g = Matrix6::zeros();
        for i in 0..6 {
            for j in 0..6 {
                let gi = geo.basis.vector_grad(i);
                let gj = geo.basis.vector_grad(j);
                g[(i, j)] = nu
                    * cell_integral(&geo.poly, &|_| 1.0)
                    * (0..2)
                        .flat_map(|r| (0..2).map(move |c| (r, c)))
                        .map(|(r, c)| gi[r][c] * gj[r][c])
                        .sum::<f64>();
            }
        }
        let identity = DMatrix::identity(3 * n, 3 * n);
        let rem = &identity - &d * &pi;
        pi.transpose() * g * &pi + rem.transpose() * &rem * (alpha * nu)
    }

