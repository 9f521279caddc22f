use std::sync::Arc;

use nalgebra::SymmetricEigen;
use ndr_core::geometry::CellShape;
use ndr_core::kernel::{assemble_matrix, breather_r0, cell_self_energy, SQUARE_LOG_CONSTANT};
use ndr_core::prelude::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn upper() -> impl Strategy<Value = Complex64> {
    (-3.0..3.0f64, 0.01..3.0f64).prop_map(|(x, y)| c(x, y))
}

fn min_eigenvalue(a: &nalgebra::DMatrix<f64>) -> f64 {
    SymmetricEigen::new(a.clone()).eigenvalues.min()
}

proptest! {
    #[test]
    fn soliton_kernel_symmetric_and_positive(z in upper(), w in upper()) {
        prop_assume!((z - w).norm() > 1e-9);
        let k = kernel_value(KernelKind::NlsSoliton, z, w).unwrap();
        prop_assert!(k > 0.0);
        prop_assert!((k - kernel_value(KernelKind::NlsSoliton, w, z).unwrap()).abs() <= 1e-14 * k.abs().max(1.0));
    }

    #[test]
    fn breather_kernel_symmetric(z in upper(), w in upper(), delta in 0.01..1.0f64) {
        prop_assume!((z - w).norm() > 1e-9);
        prop_assume!(z.re.abs() > 1e-3 && w.re.abs() > 1e-3);
        let kind = KernelKind::NlsBreather { delta0: delta };
        let a = kernel_value(kind, z, w).unwrap();
        let b = kernel_value(kind, w, z).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn kdv_kernel_is_soliton_on_the_axis(x in 0.01..5.0f64, y in 0.01..5.0f64) {
        prop_assume!((x - y).abs() > 1e-9);
        let kdv = kernel_value(KernelKind::Kdv, c(x, 0.0), c(y, 0.0)).unwrap();
        let nls = kernel_value(KernelKind::NlsSoliton, c(0.0, x), c(0.0, y)).unwrap();
        prop_assert!(kdv > 0.0);
        prop_assert!((kdv - nls).abs() <= 1e-14 * kdv.max(1.0));
    }

    #[test]
    fn r0_branch_properties(z in upper(), delta in 0.05..2.0f64) {
        prop_assume!(z.re.abs() > 1e-6 || z.im > delta);
        let r = breather_r0(z, delta).unwrap();
        prop_assert!((r * r - (z * z + delta * delta)).norm() <= 1e-12 * (z.norm_sqr() + delta * delta));
        prop_assert!((breather_r0(z.conj(), delta).unwrap() - r.conj()).norm() <= 1e-12 * r.norm());
        // the branch follows z: they lie in the same half-plane
        prop_assert!((r * z.conj()).re > 0.0);
    }

    #[test]
    fn density_rhs_nonnegative(z in upper(), x in 0.0..10.0f64) {
        prop_assert!(rhs_value(&RhsKind::NlsDensity, z).unwrap() >= 0.0);
        prop_assert!(rhs_value(&RhsKind::KdvDensity, c(x, 0.0)).unwrap() >= 0.0);
    }

    #[test]
    fn assembled_matrix_symmetric_psd(
        x0 in -1.0..1.0f64, y0 in 0.05..1.0f64,
        x1 in -1.0..1.0f64, y1 in 0.05..2.0f64,
        n in 10usize..60,
    ) {
        let (a, b) = (c(x0, y0), c(x1, y1));
        prop_assume!((b - a).norm() > 0.1);
        let spec = SupportSpec::segment(a, b);
        let q = discretize_contour(&spec, n as f64 / spec.total_measure()).unwrap();
        let m = assemble_matrix(Exec::default(), &q, KernelKind::NlsSoliton).unwrap();
        let scale = m.amax();
        prop_assert!((&m - m.transpose()).amax() <= 1e-12 * scale);
        prop_assert!(min_eigenvalue(&m) >= -1e-10 * scale);
    }
}

#[test]
fn off_diagonal_entries_are_weighted_kernel() {
    let spec = SupportSpec::semicircle(c(0.0, 0.0), 1.0);
    let q = discretize_contour(&spec, 10.0).unwrap();
    let a = assemble_matrix(Exec::Sequential, &q, KernelKind::NlsSoliton).unwrap();
    for i in 0..q.len() {
        for j in 0..q.len() {
            if i != j {
                let k = kernel_value(KernelKind::NlsSoliton, q.nodes[i], q.nodes[j]).unwrap();
                assert!((a[(i, j)] - q.weights[i] * q.weights[j] * k).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn kdv_and_soliton_matrices_coincide() {
    let kdv_spec = SupportSpec::real_interval(0.1, 1.0);
    let nls_spec = SupportSpec::segment(c(0.0, 0.1), c(0.0, 1.0));
    let qk = discretize_contour(&kdv_spec, 80.0).unwrap();
    let qn = discretize_contour(&nls_spec, 80.0).unwrap();
    assert_eq!(qk.len(), qn.len());
    let ak = assemble_matrix(Exec::default(), &qk, KernelKind::Kdv).unwrap();
    let an = assemble_matrix(Exec::default(), &qn, KernelKind::NlsSoliton).unwrap();
    assert!((&ak - &an).amax() <= 1e-14 * an.amax());
}

#[test]
fn breather_matrix_tends_to_soliton_quadratically() {
    let spec = SupportSpec::segment(c(0.2, 0.5), c(0.2, 1.5));
    let q = discretize_contour(&spec, 40.0).unwrap();
    let soliton = assemble_matrix(Exec::default(), &q, KernelKind::NlsSoliton).unwrap();
    let gap = |d: f64| {
        let b = assemble_matrix(Exec::default(), &q, KernelKind::NlsBreather { delta0: d }).unwrap();
        (&b - &soliton).amax()
    };
    let (g1, g2) = (gap(1e-2), gap(1e-3));
    assert!(g2 < 1e-5);
    let order = (g1 / g2).log10();
    assert!((order - 2.0).abs() < 0.1, "order {order}");
}

#[test]
fn breather_kernel_small_delta_value() {
    let b = kernel_value(KernelKind::NlsBreather { delta0: 1e-6 }, c(0.0, 1.0), c(0.0, 2.0)).unwrap();
    assert!((b - 3f64.ln()).abs() < 1e-4);
}

#[test]
fn breather_density_matches_direct_root() {
    // R₀(i) = i sqrt(1 - δ²) for δ < 1
    let direct = (Complex64::new(-1.0, 0.0) + 0.36).sqrt();
    let v = rhs_value(&RhsKind::BreatherDensity { delta0: 0.6 }, c(0.0, 1.0)).unwrap();
    assert!((v - direct.im.abs()).abs() < 1e-15);
    assert!((v - 0.8).abs() < 1e-15);
}

/// `∫∫_{[0,ℓ]²} -log|x - y|` reduced to `2∫₀^ℓ (ℓ - t)(-log t) dt`, with
/// `t = s²` removing the singularity, by composite Simpson.
fn panel_energy_1d(len: f64) -> f64 {
    let n = 20_000;
    let top = len.sqrt();
    let h = top / n as f64;
    let f = |s: f64| if s == 0.0 { 0.0 } else { 2.0 * (len - s * s) * (-2.0 * s.ln()) * 2.0 * s };
    let mut sum = f(0.0) + f(top);
    for k in 1..n {
        sum += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

/// Brute-force double midpoint sum with the inner grid shifted by half a
/// cell so points never coincide.
fn panel_energy_2d(len: f64, n: usize) -> f64 {
    let h = len / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let x = (i as f64 + 0.5) * h;
        for j in 0..=n {
            let y = (j as f64) * h;
            let wy = if j == 0 || j == n { 0.5 } else { 1.0 };
            total += -wy * (x - y).abs().ln();
        }
    }
    total * h * h
}

#[test]
fn panel_self_energy_against_quadrature() {
    for len in [0.01, 0.1, 0.5, 2.0] {
        let closed = cell_self_energy(CellShape::Panel, len);
        let oracle = panel_energy_1d(len);
        assert!((closed - oracle).abs() <= 1e-8 * closed.abs().max(len * len), "len {len}: {closed} vs {oracle}");
        let brute = panel_energy_2d(len, 2000);
        assert!((closed - brute).abs() <= 1e-3 * closed.abs(), "len {len}: {closed} vs brute {brute}");
    }
}

#[test]
fn diagonal_entry_of_single_node() {
    let q = Quadrature::from_panels(vec![c(0.0, 1.0)], vec![0.1], ndr_core::geometry::Domain::UpperHalfPlane).unwrap();
    let a = assemble_matrix(Exec::Sequential, &q, KernelKind::NlsSoliton).unwrap();
    let expected = 0.01 * (2f64.ln() + 1.5 - 0.1f64.ln());
    assert!((a[(0, 0)] - expected).abs() < 1e-15);
    assert!((a[(0, 0)] - 0.0449573).abs() < 1e-7);
}

/// Minus the mean log-distance of two uniform points in the unit square,
/// as a product midpoint rule over the difference vector, whose density is
/// `(1 - |a|)(1 - |b|)` on `[-1, 1]²`.
fn square_constant_product(n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let a = (i as f64 + 0.5) * h;
        for j in 0..n {
            let b = (j as f64 + 0.5) * h;
            total += (1.0 - a) * (1.0 - b) * (-0.5 * (a * a + b * b).ln());
        }
    }
    4.0 * total * h * h
}

#[test]
fn square_constant_against_oracles() {
    let product = square_constant_product(2000);
    assert!((product - SQUARE_LOG_CONSTANT).abs() < 1e-5, "{product} vs {SQUARE_LOG_CONSTANT}");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let samples = 400_000;
    let mut sum = 0.0;
    for _ in 0..samples {
        let d = c(rng.random::<f64>() - rng.random::<f64>(), rng.random::<f64>() - rng.random::<f64>());
        sum -= d.norm().ln();
    }
    let mc = sum / samples as f64;
    assert!((mc - SQUARE_LOG_CONSTANT).abs() < 5e-3, "{mc}");

    // square of area w has side sqrt(w); the energy scales as w²
    for w in [1e-4, 1e-2, 1.0] {
        let side = f64::sqrt(w);
        let direct = side.powi(4) * (SQUARE_LOG_CONSTANT - side.ln());
        assert!((cell_self_energy(CellShape::Square, w) - direct).abs() <= 1e-15 * direct.abs().max(1e-300) + 1e-300);
    }
}

#[test]
fn energy_matches_double_sum() {
    let spec = SupportSpec::segment(c(0.3, 0.2), c(-0.4, 1.7));
    let q = Arc::new(discretize_contour(&spec, 20.0).unwrap());
    let form = assemble_form(Arc::clone(&q), KernelKind::NlsSoliton, RhsKind::NlsDensity, &SigmaSpec::Constant { value: 0.5 }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u: Vec<f64> = (0..q.len()).map(|_| rng.random::<f64>()).collect();
    let mut j = 0.0;
    for a in 0..q.len() {
        for b in 0..q.len() {
            let entry = if a == b {
                ndr_core::kernel::diagonal_entry(KernelKind::NlsSoliton, &q, a).unwrap()
            } else {
                q.weights[a] * q.weights[b] * kernel_value(KernelKind::NlsSoliton, q.nodes[a], q.nodes[b]).unwrap()
            };
            j += u[a] * u[b] * entry;
        }
        j += 0.5 * q.weights[a] * u[a] * u[a];
        j -= 2.0 * q.nodes[a].im * q.weights[a] * u[a];
    }
    assert!((form.energy(&u) - j).abs() <= 1e-12 * j.abs());
    assert!(form.s.iter().zip(&q.weights).all(|(s, w)| (s - 0.5 * w).abs() < 1e-16));
}

#[test]
fn assembly_policies_agree_bitwise() {
    let spec = SupportSpec::semicircle(c(0.0, 0.0), 1.0);
    let q = discretize_contour(&spec, 60.0).unwrap();
    for kind in [KernelKind::NlsSoliton, KernelKind::NlsBreather { delta0: 0.3 }] {
        let s = assemble_matrix(Exec::Sequential, &q, kind).unwrap();
        let p = assemble_matrix(Exec::Parallel, &q, kind).unwrap();
        assert_eq!(s, p);
    }
}

#[test]
fn potentials_of_point_mass() {
    let q = Arc::new(Quadrature::from_panels(vec![c(0.0, 1.0)], vec![1.0], ndr_core::geometry::Domain::UpperHalfPlane).unwrap());
    let m = DiscreteMeasure::new(q, vec![1.0], false, 0.0);
    let g = green_potential_at(&m, KernelKind::NlsSoliton, c(0.0, 2.0)).unwrap();
    assert!((g.value - 3f64.ln()).abs() < 1e-15);
    for x in [-2.0, 0.0, 0.7] {
        let g = green_potential_at(&m, KernelKind::NlsSoliton, c(x, 0.0)).unwrap();
        assert!(g.value.abs() < 1e-15);
    }
    let near = green_potential_at(&m, KernelKind::NlsSoliton, c(0.0, 1e-9)).unwrap();
    assert!(near.value.abs() < 1e-8);
}

/// Potential at `iy0` of the box density restricted to `[i(1 - ε), i]`,
/// with `y = 1 - t²` taming the endpoint singularity.
fn box_tip_potential(y0: f64, eps: f64) -> f64 {
    let n = 4000;
    let top = eps.sqrt();
    let h = top / n as f64;
    let f = |t: f64| {
        let y = 1.0 - t * t;
        // density y/(π sqrt(1 - y²)) times dy = 2t dt
        let weight = 2.0 * y / (std::f64::consts::PI * (1.0 + y).sqrt());
        ((y0 + y) / (y - y0)).abs().ln() * weight
    };
    let mut sum = f(0.0) + f(top);
    for k in 1..n {
        sum += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

#[test]
fn box_measure_potential_is_height() {
    let eps = 1e-3;
    let spec = SupportSpec::segment(c(0.0, eps), c(0.0, 1.0 - eps));
    let q = Arc::new(discretize_contour(&spec, 400.0 / spec.total_measure()).unwrap());
    let u: Vec<f64> = q.nodes.iter().map(|z| box_condensate(1.0, *z).unwrap()).collect();
    let m = DiscreteMeasure::new(q, u, false, 0.0);
    let g = green_potential_at(&m, KernelKind::NlsSoliton, c(0.0, 0.5)).unwrap().value;
    // the cut-off tip carries mass sqrt(2ε)/π, worth about 0.016 here
    let tip = box_tip_potential(0.5, eps);
    assert!(tip > 0.015 && tip < 0.017, "{tip}");
    assert!((g - 0.5).abs() < 2e-2, "{g}");
    assert!((g + tip - 0.5).abs() < 2e-3, "{g} + {tip}");
    let above = green_potential_at(&m, KernelKind::NlsSoliton, c(0.0, 1.5)).unwrap();
    assert!(above.value < 1.5);
}

#[test]
fn kernel_errors() {
    assert!(matches!(
        kernel_value(KernelKind::NlsSoliton, c(0.0, 1.0), c(0.0, 1.0)),
        Err(NdrError::KernelSingular)
    ));
    assert!(kernel_value(KernelKind::NlsSoliton, c(0.0, -1.0), c(0.0, 1.0)).is_err());
    assert!(breather_r0(c(0.0, 0.3), 0.5).is_err());
    assert!(SigmaSpec::Constant { value: -1.0 }
        .values(&discretize_contour(&SupportSpec::segment(c(0.0, 1.0), c(0.0, 2.0)), 5.0).unwrap())
        .is_err());
}
