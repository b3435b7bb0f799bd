//! Property suites for the module invariants.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3};
use proptest::prelude::*;

use stressline::fea::{
    principal_decomposition, principal_of, solve_elasticity, BoundaryConditions, Material, StressTensorField, SymTensor,
};
use stressline::meshcore::io::{format_obj, parse_obj};
use stressline::meshcore::{build_operators, shapes, Selector, TetMesh, TriMesh, Vec3};
use stressline::metrics::{
    field_alignment, spacing_samples, trajectory_alignment, CompareOptions, SlicingVariant, SpacingOptions,
};
use stressline::numerics::{solve_regularized_ls, solve_spd, SolveOptions, SparseMatrix};
use stressline::slicing::{extract_slices, geodesic_heat, HeatOptions, Slice, SliceOptions};
use stressline::stressflow::{
    classify_critical, classify_principal, extrapolate_uncritical, project_orthogonal, rectify, Thresholds,
};
use stressline::trajopt::{
    chain_greedy, generate_layer, smooth_resample, travel_length, LayerToolpath, PathKind, Polyline, SmoothOptions,
    TrajOptions,
};

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig::with_cases(n)
}

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn sym_tensor() -> impl Strategy<Value = SymTensor> {
    prop::array::uniform6(-100.0..100.0f64).prop_map(SymTensor)
}

fn rotation() -> impl Strategy<Value = Rotation3<f64>> {
    (vec3(1.0), 0.0..2.0 * PI).prop_map(|(axis, angle)| {
        let axis = if axis.norm() < 1e-3 {
            Vec3::z()
        } else {
            axis.normalize()
        };
        Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
    })
}

/// Planar grid lifted by a smooth bump, so the surface is curved.
fn bumpy_grid(n: usize, amp: f64) -> TriMesh {
    let g = shapes::planar_grid(1.0, 1.0, n, n);
    let v = g
        .vertices
        .iter()
        .map(|p| Vec3::new(p.x, p.y, amp * (PI * p.x).sin() * (PI * p.y).sin()))
        .collect();
    TriMesh::new(v, g.faces).unwrap()
}

// meshcore

proptest! {
    #![proptest_config(cases(32))]

    #[test]
    fn gradient_annihilates_constants_and_reproduces_linear(
        c in -10.0..10.0f64, a in vec3(5.0), n in 2usize..8, rot in rotation()
    ) {
        let g = shapes::planar_grid(2.0, 1.0, n, n);
        let m = TriMesh::new(g.vertices.iter().map(|p| rot * p).collect(), g.faces).unwrap();
        let (grad, _) = build_operators(&m).unwrap();
        let ones = vec![c; m.vertices.len()];
        for gc in grad.apply(&m.faces, &ones) {
            prop_assert_eq!(gc, Vec3::zeros());
        }
        // the assembled matrix sums the same entries in another order
        for r in grad.matrix.mul_vec(&ones) {
            prop_assert!(r.abs() <= 1e-12 * c.abs() * grad.matrix.inf_norm());
        }
        let vals: Vec<f64> = m.vertices.iter().map(|p| a.dot(p) + c).collect();
        for (f, gf) in grad.apply(&m.faces, &vals).iter().enumerate() {
            let nrm = m.face_normal(f);
            let exact = a - nrm * a.dot(&nrm);
            prop_assert!((gf - exact).norm() <= 1e-10 * a.norm().max(1.0), "{gf:?} vs {exact:?}");
        }
    }

    #[test]
    fn laplacian_symmetric_and_positive_semidefinite(
        amp in 0.0..0.5f64, n in 2usize..7, x in prop::collection::vec(-1.0..1.0f64, 64)
    ) {
        let m = bumpy_grid(n, amp);
        let (_, ops) = build_operators(&m).unwrap();
        prop_assert!(ops.laplacian.is_symmetric());
        let xs = &x[..m.vertices.len().min(x.len())];
        let mut v = xs.to_vec();
        v.resize(m.vertices.len(), 0.25);
        let lx = ops.laplacian.mul_vec(&v);
        let q: f64 = v.iter().zip(&lx).map(|(a, b)| a * b).sum();
        prop_assert!(q >= -1e-12 * ops.laplacian.inf_norm(), "x.Lx = {q}");
        for s in ops.laplacian.row_sums() {
            prop_assert!(s.abs() <= 1e-10 * ops.laplacian.inf_norm());
        }
        prop_assert!(ops.mass.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn obj_resave_is_a_fixed_point(amp in 0.0..0.5f64, n in 1usize..6, s in 0.1..10.0f64) {
        let m = bumpy_grid(n, amp);
        let m = TriMesh::new(m.vertices.iter().map(|p| p * s).collect(), m.faces).unwrap();
        let first = format_obj(&parse_obj(&format_obj(&m)).unwrap());
        let second = format_obj(&parse_obj(&first).unwrap());
        prop_assert_eq!(first, second);
    }
}

// numerics

fn random_spd(n: usize, seed: &[f64]) -> SparseMatrix {
    // banded Bᵀ B plus a diagonal shift
    let mut trip = Vec::new();
    for i in 0..n {
        for k in 0..3 {
            let j = (i + k * 7) % n;
            trip.push((i, j, seed[(i * 3 + k) % seed.len()]));
        }
    }
    let b = SparseMatrix::from_triplets(n, n, &trip).unwrap();
    b.gram().add_diagonal(0.1)
}

proptest! {
    #![proptest_config(cases(100))]

    #[test]
    fn cg_meets_its_residual_contract(
        n in 1usize..200, seed in prop::collection::vec(-1.0..1.0f64, 1..50),
        rhs in prop::collection::vec(-1.0..1.0f64, 200)
    ) {
        let a = random_spd(n, &seed);
        let b = &rhs[..n];
        let opts = SolveOptions::with_tol(1e-10);
        let x = solve_spd(&a, b, &opts).unwrap();
        let ax = a.mul_vec(&x);
        let res: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        // the stopping test uses the recursive residual; allow round-off drift
        prop_assert!(res <= 10.0 * opts.tol * bn.max(f64::MIN_POSITIVE), "{res} vs {bn}");
    }
}

proptest! {
    #![proptest_config(cases(16))]

    #[test]
    fn regularized_ls_beats_perturbations(
        rows in 3usize..30, cols in 2usize..15, seed in prop::collection::vec(-1.0..1.0f64, 100),
        eps in 1e-6..1e-1f64, pert in prop::collection::vec(-1.0..1.0f64, 1000 * 15)
    ) {
        let trip: Vec<_> = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .enumerate()
            .filter(|(k, _)| k % 3 != 1)
            .map(|(k, (r, c))| (r, c, seed[k % seed.len()]))
            .collect();
        let g = SparseMatrix::from_triplets(rows, cols, &trip).unwrap();
        let t: Vec<f64> = (0..rows).map(|r| seed[(r * 7 + 3) % seed.len()]).collect();
        let phi = solve_regularized_ls(&g, &t, eps, &SolveOptions::with_tol(1e-13)).unwrap();
        let obj = |p: &[f64]| {
            let gp = g.mul_vec(p);
            gp.iter().zip(&t).map(|(a, b)| (a - b).powi(2)).sum::<f64>() + eps * p.iter().map(|v| v * v).sum::<f64>()
        };
        let best = obj(&phi);
        for k in 0..1000 {
            let scale = 10f64.powi(-(k as i32 % 6));
            let q: Vec<f64> = phi.iter().enumerate().map(|(i, v)| v + scale * pert[k * 15 + i]).collect();
            prop_assert!(best <= obj(&q) + 1e-12 * best.max(1.0));
        }
    }
}

// fea

/// 3×3×3 box with interior nodes moved by a smooth jitter.
fn jittered_box(amp: f64, phase: f64) -> TetMesh {
    let m = shapes::grid_box(Vec3::zeros(), Vec3::repeat(3.0), [3, 3, 3]);
    m.map_vertices(|p| {
        let inside = (0..3).all(|k| p[k] > 1e-9 && p[k] < 3.0 - 1e-9);
        if inside {
            p + Vec3::new((p.y + phase).sin(), (p.z + 2.0 * phase).cos(), (p.x - phase).sin()) * amp
        } else {
            *p
        }
    })
    .unwrap()
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn constant_strain_patch_reproduced(
        strain in prop::array::uniform6(-1e-2..1e-2f64), shift in vec3(1.0),
        amp in 0.0..0.2f64, phase in 0.0..PI
    ) {
        let m = jittered_box(amp, phase);
        let e = SymTensor(strain).to_matrix();
        let exact = |p: &Vec3| e * p + shift;
        let boundary = m.boundary_nodes();
        let mut bc = BoundaryConditions::default();
        for (v, p) in m.vertices.iter().enumerate() {
            if boundary[v] {
                let u = exact(p);
                for k in 0..3 {
                    bc.prescribe(v, k, u[k]);
                }
            }
        }
        let sol = solve_elasticity(&m, &Material::default(), &bc, &SolveOptions::with_tol(1e-14)).unwrap();
        for (p, u) in m.vertices.iter().zip(&sol.displacements) {
            prop_assert!((u - exact(p)).norm() <= 1e-9, "{u:?} vs {:?}", exact(p));
        }
        let s0 = sol.element_stress[0];
        let scale = s0.0.iter().fold(1e-12f64, |a, c| a.max(c.abs()));
        for s in &sol.element_stress {
            for k in 0..6 {
                prop_assert!((s.0[k] - s0.0[k]).abs() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn stress_invariant_under_translation(shift in vec3(100.0), f in vec3(100.0)) {
        let m = shapes::grid_box(Vec3::zeros(), Vec3::new(4.0, 1.0, 1.0), [4, 1, 1]);
        let moved = m.map_vertices(|p| p + shift).unwrap();
        let solve = |mesh: &TetMesh| {
            let mut bc = BoundaryConditions::default();
            for v in (Selector::Extreme { axis: 0, max: false }).nodes(mesh) {
                bc.fix(v, [true; 3]);
            }
            let faces = Selector::Extreme { axis: 0, max: true }.faces(mesh);
            bc.distribute_force(mesh, &faces, f).unwrap();
            solve_elasticity(mesh, &Material::default(), &bc, &SolveOptions::with_tol(1e-13)).unwrap().stress
        };
        let (a, b) = (solve(&m), solve(&moved));
        let scale = a.tensors.iter().flat_map(|t| t.0).fold(1e-12f64, |x, c| x.max(c.abs()));
        for (s, t) in a.tensors.iter().zip(&b.tensors) {
            for k in 0..6 {
                prop_assert!((s.0[k] - t.0[k]).abs() <= 1e-8 * scale);
            }
        }
    }

    #[test]
    fn principal_decomposition_is_idempotent(t in sym_tensor()) {
        let p = principal_of(&t);
        let q = principal_of(&p.reconstruct());
        let scale = p.values[0].abs().max(1e-12);
        for k in 0..3 {
            prop_assert!((p.values[k] - q.values[k]).abs() <= 1e-9 * scale);
        }
        prop_assert!(p.values[0].abs() >= p.values[1].abs() && p.values[1].abs() >= p.values[2].abs());
        for i in 0..3 {
            prop_assert!((p.directions[i].norm() - 1.0).abs() <= 1e-10);
            for j in i + 1..3 {
                prop_assert!(p.directions[i].dot(&p.directions[j]).abs() <= 1e-8);
            }
        }
    }
}

// slicing

proptest! {
    #![proptest_config(cases(12))]

    #[test]
    fn distance_invariant_under_rotation(rot in rotation(), shift in vec3(10.0)) {
        let m = shapes::grid_box(Vec3::zeros(), Vec3::new(2.0, 1.0, 1.0), [6, 3, 3]);
        let moved = m.map_vertices(|p| rot * p + shift).unwrap();
        let src = Selector::Extreme { axis: 2, max: false }.nodes(&m);
        let a = geodesic_heat(&m, &src, &HeatOptions::default()).unwrap();
        let b = geodesic_heat(&moved, &src, &HeatOptions::default()).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn enlarging_the_source_never_increases_distance(extra in 1usize..6) {
        let m = shapes::grid_box(Vec3::zeros(), Vec3::new(2.0, 1.0, 1.0), [6, 3, 3]);
        let base = Selector::Extreme { axis: 2, max: false }.nodes(&m);
        let side = Selector::Extreme { axis: 0, max: false }.nodes(&m);
        let mut bigger = base.clone();
        bigger.extend(side.iter().take(extra * 3).copied());
        bigger.sort_unstable();
        bigger.dedup();
        let a = geodesic_heat(&m, &base, &HeatOptions::default()).unwrap();
        let b = geodesic_heat(&m, &bigger, &HeatOptions::default()).unwrap();
        // exact for true distances; the heat method is not a monotone
        // scheme, and its increases stay below one mean edge length
        let h = m.mean_edge_length();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!(*y <= *x + h, "{y} > {x} + {h}");
        }
    }

    #[test]
    fn consecutive_slices_differ_by_layer_height(h in 0.05..0.5f64) {
        let m = shapes::grid_box(Vec3::zeros(), Vec3::new(2.0, 1.0, 1.0), [4, 2, 3]);
        let phi: Vec<f64> = m.vertices.iter().map(|p| p.z + 0.1 * p.x).collect();
        let stress = StressTensorField { tensors: vec![SymTensor::diagonal([1.0, 0.0, 0.0]); m.vertices.len()] };
        let opts = SliceOptions { layer_height: h, ..SliceOptions::default() };
        let slices = extract_slices(&m, &phi, &stress, &opts).unwrap();
        prop_assert!(!slices.is_empty());
        for (k, s) in slices.iter().enumerate() {
            prop_assert!((s.iso - s.layer as f64 * h).abs() <= 1e-9);
            if k > 0 {
                prop_assert_eq!(s.layer, slices[k - 1].layer + 1);
            }
            for o in &s.origins {
                prop_assert!((o.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
    }
}

// stressflow

/// Curved slice carrying a smoothly rotating uniaxial stress plus a weak
/// random-sign transverse part.
fn stressed_slice(amp: f64, twist: f64, scale: f64) -> Slice {
    let m = bumpy_grid(8, amp);
    let tensors = m
        .vertices
        .iter()
        .map(|p| {
            let a = twist * p.x;
            let d = Vec3::new(a.cos(), a.sin(), 0.0);
            let e = Vec3::new(-a.sin(), a.cos(), 0.0);
            let t: Matrix3<f64> = d * d.transpose() * 100.0 + e * e.transpose() * (10.0 * p.y - 5.0);
            SymTensor::from_matrix(&(t * scale))
        })
        .collect();
    Slice::from_surface(m, tensors, 0, 0.0).unwrap()
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn preprocessed_flow_is_unit_and_tangent(amp in 0.0..0.4f64, twist in -1.0..1.0f64) {
        let s = stressed_slice(amp, twist, 1.0);
        let max = s.principal.iter().map(|p| p.values[0].abs()).fold(0.0, f64::max);
        let rect = rectify(&project_orthogonal(&s)).unwrap();
        let mask = classify_critical(&s, &Thresholds::default(), max).unwrap();
        let (f, _) = extrapolate_uncritical(&s, &rect, &mask, &SolveOptions::default()).unwrap();
        for (v, n) in f.vectors.iter().zip(&s.normals) {
            prop_assert!((v.norm() - 1.0).abs() <= 1e-8);
            prop_assert!(v.dot(n).abs() <= 1e-6);
        }
    }

    #[test]
    fn raising_thresholds_never_adds_critical(
        ts in prop::collection::vec(sym_tensor(), 1..60),
        a in 1.01..10.0f64, da in 0.0..5.0f64, s in 0.01..0.9f64, ds in 0.0..0.09f64
    ) {
        let p: Vec<_> = ts.iter().map(principal_of).collect();
        let max = p.iter().map(|q| q.values[0].abs()).fold(0.0, f64::max);
        let lo = classify_principal(&p, &Thresholds { theta_a: a, theta_s: s }, max).unwrap();
        let hi = classify_principal(&p, &Thresholds { theta_a: a + da, theta_s: s + ds }, max).unwrap();
        for (l, h) in lo.critical.iter().zip(&hi.critical) {
            prop_assert!(!h || *l);
        }
        for (c, q) in lo.critical.iter().zip(&p) {
            prop_assert!(!c || q.values[0] != 0.0);
        }
    }

    #[test]
    fn stress_scaling_leaves_flow_unchanged(amp in 0.0..0.4f64, twist in -1.0..1.0f64, k in 0.01..100.0f64) {
        let run = |s: &Slice| {
            let max = s.principal.iter().map(|p| p.values[0].abs()).fold(0.0, f64::max);
            let proj = project_orthogonal(s);
            let rect = rectify(&proj).unwrap();
            let mask = classify_critical(s, &Thresholds::default(), max).unwrap();
            let (f, _) = extrapolate_uncritical(s, &rect, &mask, &SolveOptions::with_tol(1e-13)).unwrap();
            (proj, rect, mask.critical, f)
        };
        let a = run(&stressed_slice(amp, twist, 1.0));
        let b = run(&stressed_slice(amp, twist, k));
        prop_assert_eq!(&a.2, &b.2);
        for (x, y) in [(&a.0, &b.0), (&a.1, &b.1), (&a.3, &b.3)] {
            prop_assert_eq!(&x.valid, &y.valid);
            for (u, v) in x.vectors.iter().zip(&y.vectors) {
                prop_assert!((u - v).norm() <= 1e-8, "{u:?} vs {v:?}");
            }
        }
    }
}

// trajopt

fn polyline(points: Vec<Vec3>, kind: PathKind) -> Polyline {
    let n = vec![Vec3::z(); points.len()];
    Polyline::new(points, n, false, kind)
}

proptest! {
    #![proptest_config(cases(48))]

    #[test]
    fn smoothing_respects_the_deviation_bound(
        pts in prop::collection::vec((0.0..0.5f64, -0.3..0.3f64), 4..40), dev in 0.02..0.2f64
    ) {
        let mut x = 0.0;
        let points: Vec<Vec3> = pts.iter().map(|(dx, y)| { x += 0.05 + dx; Vec3::new(x, *y, 0.0) }).collect();
        let line = polyline(points, PathKind::Infill);
        let opts = SmoothOptions { max_deviation: dev, ..SmoothOptions::default() };
        let out = smooth_resample(&line, &opts);
        let segs = line.segments();
        for p in &out.points {
            let d = segs
                .iter()
                .map(|(a, b)| {
                    let ab = b - a;
                    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                    (a + ab * t - p).norm()
                })
                .fold(f64::INFINITY, f64::min);
            prop_assert!(d <= dev + 1e-9, "{d} > {dev}");
        }
        for w in out.points.windows(2) {
            prop_assert!((w[1] - w[0]).norm() > 1e-6);
        }
    }
}

proptest! {
    #![proptest_config(cases(100))]

    #[test]
    fn greedy_chaining_never_travels_more_than_identity(
        segs in prop::collection::vec((vec3(10.0), vec3(10.0)), 1..25)
    ) {
        let lines: Vec<Polyline> = segs.iter().map(|(a, b)| polyline(vec![*a, *b], PathKind::Infill)).collect();
        let start = Some(lines[0].start());
        let greedy = chain_greedy(start, &lines);
        prop_assert_eq!(greedy.len(), lines.len());
        prop_assert!(travel_length(start, &greedy) <= travel_length(start, &lines) + 1e-9);
    }
}

proptest! {
    #![proptest_config(cases(8))]

    #[test]
    fn infill_follows_analytic_stress(twist in -0.6..0.6f64, amp in 0.0..0.2f64) {
        let surface = bumpy_grid(24, amp);
        let surface = TriMesh::new(surface.vertices.iter().map(|p| p * 10.0).collect(), surface.faces).unwrap();
        let dir = |p: &Vec3| {
            let a = twist * p.x / 10.0;
            Vec3::new(a.cos(), a.sin(), 0.0)
        };
        let tensors = surface
            .vertices
            .iter()
            .map(|p| SymTensor::from_matrix(&(dir(p) * dir(p).transpose() * 100.0)))
            .collect();
        let s = Slice::from_surface(surface, tensors, 0, 0.0).unwrap();
        let rect = rectify(&project_orthogonal(&s)).unwrap();
        let mask = classify_critical(&s, &Thresholds::default(), 100.0).unwrap();
        let (f, _) = extrapolate_uncritical(&s, &rect, &mask, &SolveOptions::default()).unwrap();
        let layer = generate_layer(&s, &f, &TrajOptions::default()).unwrap();
        let mut n = 0;
        for line in layer.infill() {
            for i in 0..line.len() {
                let d = dir(&line.points[i]);
                let nrm = line.normals[i];
                let t = d - nrm * d.dot(&nrm);
                prop_assert!(t.normalize().dot(&line.tangent(i)).abs() >= 0.95);
                n += 1;
            }
        }
        prop_assert!(n > 100);
    }
}

// metrics

/// Parallel lines with staggered ends, so no sample sits on the boundary
/// of the end-clamp test.
fn straight_lines(count: usize, gap: f64, len: f64) -> LayerToolpath {
    let elements: Vec<Polyline> = (0..count)
        .map(|k| {
            let (x0, l) = (0.13 * (k % 3) as f64, len + 0.37 * (k % 2) as f64);
            let pts = (0..=20)
                .map(|i| Vec3::new(x0 + l * i as f64 / 20.0, k as f64 * gap, 0.0))
                .collect();
            let mut p = polyline(pts, PathKind::Infill);
            p.iso_index = Some((0, k));
            p
        })
        .collect();
    LayerToolpath {
        layer: 0,
        iso: 0.0,
        print_length: 0.0,
        travel_length: 0.0,
        elements,
    }
}

fn reversed(layer: &LayerToolpath) -> LayerToolpath {
    let mut l = layer.clone();
    for e in &mut l.elements {
        *e = e.reversed();
    }
    l
}

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn beta_invariant_under_scaling_and_reversal(
        angle in 0.0..PI, k in 0.01..1000.0f64, wobble in prop::collection::vec(-0.2..0.2f64, 21)
    ) {
        let m = shapes::grid_box(Vec3::new(-1.0, -1.0, -1.0), Vec3::new(11.0, 5.0, 1.0), [6, 3, 1]);
        let d = Vec3::new(angle.cos(), angle.sin(), 0.0);
        let stress = StressTensorField {
            tensors: m
                .vertices
                .iter()
                .map(|p| SymTensor::from_matrix(&(d * d.transpose() * (50.0 + 10.0 * p.y))))
                .collect(),
        };
        let mut layer = straight_lines(4, 1.0, 10.0);
        for e in &mut layer.elements {
            for (p, w) in e.points.iter_mut().zip(&wobble) {
                p.y += w;
            }
        }
        let crit = |s: &StressTensorField| {
            let p = principal_decomposition(s);
            classify_principal(&p.entries, &Thresholds::default(), p.max_abs_sigma1()).unwrap().critical
        };
        let scaled = StressTensorField { tensors: stress.tensors.iter().map(|t| t.scaled(k)).collect() };
        let a = trajectory_alignment(std::slice::from_ref(&layer), &m, &stress, &crit(&stress)).unwrap();
        let b = trajectory_alignment(&[layer.clone()], &m, &scaled, &crit(&scaled)).unwrap();
        let c = trajectory_alignment(&[reversed(&layer)], &m, &stress, &crit(&stress)).unwrap();
        prop_assert!((a.mean - b.mean).abs() <= 1e-9);
        prop_assert!((a.mean - c.mean).abs() <= 1e-9);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a.mean));
    }

    #[test]
    fn gamma_invariant_under_stress_scaling(k in 0.01..1000.0f64, tilt in -0.5..0.5f64) {
        let m = shapes::grid_box(Vec3::zeros(), Vec3::new(3.0, 1.0, 2.0), [6, 2, 4]);
        let d = Vec3::new(tilt.sin(), 0.0, tilt.cos());
        let stress = StressTensorField {
            tensors: m.vertices.iter().map(|p| SymTensor::from_matrix(&(d * d.transpose() * (1.0 + p.x)))).collect(),
        };
        let scaled = StressTensorField { tensors: stress.tensors.iter().map(|t| t.scaled(k)).collect() };
        let phi: Vec<f64> = m.vertices.iter().map(|p| p.x).collect();
        let opts = CompareOptions { slice: SliceOptions { layer_height: 0.25, ..SliceOptions::default() }, ..CompareOptions::default() };
        let a = field_alignment(&m, &stress, &phi, SlicingVariant::PlanarX, &opts).unwrap();
        let b = field_alignment(&m, &scaled, &phi, SlicingVariant::PlanarX, &opts).unwrap();
        prop_assert!((a.mean - b.mean).abs() <= 1e-9);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a.mean));
    }

    #[test]
    fn spacing_invariant_under_rigid_motion(rot in rotation(), shift in vec3(50.0), gap in 0.2..1.0f64) {
        let layer = straight_lines(5, gap, 4.0);
        let mut moved = layer.clone();
        for e in &mut moved.elements {
            for p in &mut e.points {
                *p = rot * *p + shift;
            }
        }
        let opts = SpacingOptions::default();
        let a = spacing_samples(&layer, 0.4, &opts).unwrap();
        let b = spacing_samples(&moved, 0.4, &opts).unwrap();
        prop_assert_eq!(a.len(), b.len());
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64]| { let m = mean(v); v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64 };
        prop_assert!((mean(&a) - mean(&b)).abs() <= 1e-9);
        prop_assert!((var(&a) - var(&b)).abs() <= 1e-9);
        prop_assert!((mean(&a) - gap / 0.4).abs() <= 1e-9);
    }
}
