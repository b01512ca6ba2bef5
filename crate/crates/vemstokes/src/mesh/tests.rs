use super::*;
use approx::assert_relative_eq;

#[test]
fn t1_square_counts() {
    let m = generate(Domain::Square, Family::T1, 4, 0).unwrap();
    assert_eq!(m.num_cells(), 16);
    assert_eq!(m.num_vertices(), 25);
    assert_eq!(m.num_edges(), 40);
    m.validate().unwrap();
}

#[test]
fn t1_lshape_counts() {
    let m = generate(Domain::LShape, Family::T1, 4, 0).unwrap();
    assert_eq!(m.num_cells(), 48);
    m.validate().unwrap();
    assert_relative_eq!(m.total_area(), 3.0, max_relative = 1e-13);
}

#[test]
fn t2_square_is_conforming() {
    let m = generate(Domain::Square, Family::T2, 8, 42).unwrap();
    assert_eq!(m.num_cells(), 64);
    m.validate().unwrap();
    for c in 0..m.num_cells() {
        assert!(m.cell_polygon(c).unwrap().area() > 0.0);
    }
    assert_relative_eq!(m.total_area(), 4.0, max_relative = 1e-10);
}

#[test]
fn t3_distinct_from_t2() {
    let t2 = generate(Domain::Square, Family::T2, 4, 7).unwrap();
    let t3 = generate(Domain::Square, Family::T3, 4, 7).unwrap();
    t3.validate().unwrap();
    // different seed streams and relaxation, so geometries differ
    assert!(t2.points()[0].dist(t3.points()[0]) > 1e-12);
}

#[test]
fn t4_hexagons() {
    let m = generate(Domain::Square, Family::T4, 4, 0).unwrap();
    assert_eq!(m.num_cells(), 32);
    m.validate().unwrap();
    assert_relative_eq!(m.total_area(), 4.0, max_relative = 1e-12);
    // every cell is a nonconvex hexagon with a positive kernel (star-shaped)
    let q = m.quality();
    assert!(q.min_kernel_ratio > 0.0);
    for c in 0..m.num_cells() {
        assert_eq!(m.cell_vertices(c).len(), 6);
    }
}

#[test]
fn t5_fixes_boundary() {
    let m = generate(Domain::UnitSquare, Family::T5, 8, 0).unwrap();
    m.validate().unwrap();
    assert_relative_eq!(m.total_area(), 1.0, max_relative = 1e-12);
    for e in m.edges() {
        if e.cells[1] == NO_CELL {
            let p = e.midpoint;
            let on = p.x.abs() < 1e-13
                || (p.x - 1.0).abs() < 1e-13
                || p.y.abs() < 1e-13
                || (p.y - 1.0).abs() < 1e-13;
            assert!(on, "boundary edge midpoint {p:?} off the unit square");
        }
    }
}

#[test]
fn disk_voronoi() {
    let m = generate(Domain::Disk, Family::T2, 8, 3).unwrap();
    m.validate().unwrap();
    // chord polygon area slightly below pi
    let a = m.total_area();
    assert!(a < std::f64::consts::PI && a > 0.95 * std::f64::consts::PI, "area {a}");
    for e in m.edges() {
        if e.cells[1] == NO_CELL {
            for &v in &e.verts {
                assert!(m.point(v).norm() <= 1.0 + 1e-12);
            }
        }
    }
}

#[test]
fn unsupported_combination_rejected() {
    assert!(generate(Domain::LShape, Family::T2, 4, 1).is_err());
    assert!(generate(Domain::Disk, Family::T1, 4, 1).is_err());
}

#[test]
fn generate_is_deterministic() {
    let a = generate(Domain::Square, Family::T2, 6, 11).unwrap();
    let b = generate(Domain::Square, Family::T2, 6, 11).unwrap();
    assert_eq!(a.num_vertices(), b.num_vertices());
    for (p, q) in a.points().iter().zip(b.points()) {
        assert_eq!(p.x.to_bits(), q.x.to_bits());
        assert_eq!(p.y.to_bits(), q.y.to_bits());
    }
}

#[test]
fn boundary_edges_on_square_boundary() {
    for family in [Family::T1, Family::T2, Family::T4, Family::T5] {
        let m = generate(Domain::Square, family, 5, 9).unwrap();
        for e in m.edges() {
            if e.cells[1] == NO_CELL {
                let p = e.midpoint;
                let on = (p.x.abs() - 1.0).abs() < 1e-13 || (p.y.abs() - 1.0).abs() < 1e-13;
                assert!(on, "{family:?}: boundary midpoint {p:?} off the boundary");
            }
        }
    }
}

#[test]
fn refine_single_interior_square() {
    let m = generate(Domain::Square, Family::T1, 4, 0).unwrap();
    // pick the cell whose centroid is closest to the origin-adjacent interior
    let target = (0..m.num_cells())
        .find(|&c| {
            let p = m.cell_polygon(c).unwrap().centroid();
            (p.x - (-0.25)).abs() < 1e-9 && (p.y - (-0.25)).abs() < 1e-9
        })
        .unwrap();
    let r = refine(&m, &[target]).unwrap();
    r.validate().unwrap();
    assert_eq!(r.num_cells(), m.num_cells() + 3); // one square -> 4 quads
    let mut quads = 0;
    let mut pentagons = 0;
    for c in 0..r.num_cells() {
        match r.cell_vertices(c).len() {
            4 => quads += 1,
            5 => pentagons += 1,
            k => panic!("unexpected {k}-gon"),
        }
    }
    assert_eq!(pentagons, 4); // the four neighbours gained a midpoint vertex
    assert_eq!(quads, r.num_cells() - 4);
    assert_relative_eq!(r.total_area(), m.total_area(), max_relative = 1e-12);
}

#[test]
fn refine_all_matches_finer_grid() {
    let m = generate(Domain::Square, Family::T1, 4, 0).unwrap();
    let all: Vec<usize> = (0..m.num_cells()).collect();
    let r = refine(&m, &all).unwrap();
    r.validate().unwrap();
    let fine = generate(Domain::Square, Family::T1, 8, 0).unwrap();
    assert_eq!(r.num_cells(), fine.num_cells());
    assert_eq!(r.num_vertices(), fine.num_vertices());
    let key = |mesh: &PolyMesh| {
        let mut ks: Vec<(i64, i64)> = (0..mesh.num_cells())
            .map(|c| {
                let p = mesh.cell_polygon(c).unwrap().centroid();
                ((p.x * 1e9).round() as i64, (p.y * 1e9).round() as i64)
            })
            .collect();
        ks.sort_unstable();
        ks
    };
    assert_eq!(key(&r), key(&fine));
}

#[test]
fn refine_triangle_gives_three_quads() {
    let m = PolyMesh::from_cells(
        vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
        vec![vec![0, 1, 2]],
    )
    .unwrap();
    let r = refine(&m, &[0]).unwrap();
    r.validate().unwrap();
    assert_eq!(r.num_cells(), 3);
    for c in 0..3 {
        assert_eq!(r.cell_vertices(c).len(), 4);
    }
    assert_relative_eq!(r.total_area(), 0.5, max_relative = 1e-14);
}

#[test]
fn refine_conserves_area_on_voronoi() {
    let m = generate(Domain::Square, Family::T2, 6, 4).unwrap();
    let marked: Vec<usize> = (0..m.num_cells()).step_by(3).collect();
    let r = refine(&m, &marked).unwrap();
    r.validate().unwrap();
    assert_relative_eq!(r.total_area(), m.total_area(), max_relative = 1e-12);
}

#[test]
fn refine_inherits_boundary_tags() {
    let m = generate(Domain::UnitSquare, Family::T1, 3, 0).unwrap();
    let tagged = m.retag_boundary(|mid| {
        if mid.y.abs() < 1e-12 {
            BoundaryTag::Dirichlet
        } else {
            BoundaryTag::Neumann
        }
    });
    let all: Vec<usize> = (0..tagged.num_cells()).collect();
    let r = refine(&tagged, &all).unwrap();
    for (i, e) in r.edges().iter().enumerate() {
        if e.cells[1] == NO_CELL {
            let expect = if e.midpoint.y.abs() < 1e-12 {
                BoundaryTag::Dirichlet
            } else {
                BoundaryTag::Neumann
            };
            assert_eq!(r.tag(i as u32), expect);
        }
    }
}

#[test]
fn quality_report_t1() {
    let m = generate(Domain::Square, Family::T1, 3, 0).unwrap();
    let q = m.quality();
    assert_relative_eq!(q.min_kernel_ratio, 0.5 / 2.0_f64.sqrt(), max_relative = 1e-8);
    assert!(q.min_spacing_ratio > 0.0 && q.min_spacing_ratio <= 1.0);
}

#[test]
fn sigma_sign_convention() {
    let m = generate(Domain::Square, Family::T1, 3, 0).unwrap();
    for (i, e) in m.edges().iter().enumerate() {
        assert_eq!(m.sigma(e.cells[0] as usize, i as u32), 1.0);
        if e.cells[1] != NO_CELL {
            assert_eq!(m.sigma(e.cells[1] as usize, i as u32), -1.0);
            assert!(e.cells[0] < e.cells[1]);
        }
    }
}

#[test]
fn split_into_triangles_conforms() {
    let m = generate(Domain::LShape, Family::T1, 3, 0).unwrap();
    let t = m.split_into_triangles().unwrap();
    t.validate().unwrap();
    assert_eq!(t.num_cells(), 2 * m.num_cells());
    assert_relative_eq!(t.total_area(), m.total_area(), max_relative = 1e-12);
}
