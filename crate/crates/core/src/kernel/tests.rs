use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};

use crate::alpha::AlphaParams;
use crate::grid::{GridSpec, ScalarField};
use crate::kernel::{contour_normalization, RhsEvaluator, RhsMethod};
use crate::spectral::{apply_fractional_laplacian, forward, inverse};

fn tau() -> f64 {
    2.0 * std::f64::consts::PI
}

fn methods() -> [RhsMethod; 3] {
    [
        RhsMethod::DirectQuadrature { cutoff_cells: 1 },
        RhsMethod::SplitSpectral { quad_refinement: 3 },
        RhsMethod::SeriesTruncated { n_max: 8 },
    ]
}

fn rel_l2(a: &ScalarField, b: &ScalarField) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..a.values.len() {
        num += (a.values[i] - b.values[i]).powi(2);
        den += b.values[i].powi(2);
    }
    (num / den.max(1e-300)).sqrt()
}

fn band_limited_field(grid: GridSpec, amp: f64, kmax: i64, seed: u64) -> ScalarField {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut f = ScalarField::zeros(grid);
    for n2 in -kmax..=kmax {
        for n1 in -kmax..=kmax {
            if n1 == 0 && n2 == 0 {
                continue;
            }
            let a: f64 = rng.gen_range(-1.0..1.0);
            let ph: f64 = rng.gen_range(0.0..tau());
            for iy in 0..grid.ny {
                for ix in 0..grid.nx {
                    let (x, y) = grid.point(ix, iy);
                    let k1 = tau() * n1 as f64 / grid.lx;
                    let k2 = tau() * n2 as f64 / grid.ly;
                    f.values[iy * grid.nx + ix] += a * (k1 * x + k2 * y + ph).cos();
                }
            }
        }
    }
    let m = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    f.scale(amp / m)
}

#[test]
fn zero_and_constant_fields_give_zero_rhs() {
    let g = GridSpec::square(32, tau()).unwrap();
    let alpha = AlphaParams::new(0.25).unwrap();
    for m in methods() {
        let ev = RhsEvaluator::new(g, alpha, m).unwrap();
        let z = ev.rhs(&ScalarField::zeros(g)).unwrap();
        assert!(z.values.iter().all(|v| v.abs() < 1e-14));
        let c = ev.rhs(&ScalarField::constant(g, 0.7)).unwrap();
        let worst = c.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-12, "constant field rhs {worst} for {:?}", m);
    }
}

#[test]
fn linearization_single_mode_all_methods() {
    // f = eps cos(x1): RHS ~ -|1|^{1+alpha} f to high relative accuracy
    let g = GridSpec::square(64, tau()).unwrap();
    for &alpha in &[0.0, 0.25, 0.45] {
        let ap = AlphaParams::new(alpha).unwrap();
        let f = ScalarField::from_fn(g, |x, _| 1e-6 * x.cos());
        let target = f.scale(-1.0);
        for m in methods() {
            let ev = RhsEvaluator::new(g, ap, m).unwrap();
            let r = ev.rhs(&f).unwrap();
            let err = rel_l2(&r, &target);
            assert!(
                err < 1e-3,
                "linearization error {err} for {:?} at alpha {alpha}",
                m
            );
        }
    }
}

#[test]
fn linearization_higher_mode_direct() {
    // mode (2,1): exercises the defect correction away from |k| = 1
    let g = GridSpec::square(64, tau()).unwrap();
    let ap = AlphaParams::new(0.25).unwrap();
    let f = ScalarField::from_fn(g, |x, y| 1e-6 * (2.0 * x + y).cos());
    let spec = forward(&f).unwrap();
    let lam = apply_fractional_laplacian(&spec, 1.25).unwrap();
    let target = inverse(&lam).scale(-1.0);
    let ev = RhsEvaluator::new(g, ap, RhsMethod::DirectQuadrature { cutoff_cells: 1 }).unwrap();
    let r = ev.rhs(&f).unwrap();
    assert!(rel_l2(&r, &target) < 1e-3);
}

#[test]
fn split_nonlinear_part_is_higher_order() {
    // single tiny mode: N_alpha part <= 1e-9 of the linear part in L2
    let g = GridSpec::square(64, tau()).unwrap();
    let ap = AlphaParams::new(0.25).unwrap();
    let ev = RhsEvaluator::new(g, ap, RhsMethod::SplitSpectral { quad_refinement: 3 }).unwrap();
    let f = ScalarField::from_fn(g, |x, _| 1e-6 * x.cos());
    let r = ev.rhs(&f).unwrap();
    let lin = f.scale(-1.0);
    let nl = r.axpy(-1.0, &lin); // r - lin
    assert!(nl.l2_norm() / lin.l2_norm() < 1e-9);
}

#[test]
fn cross_method_agreement_amplitude_01() {
    let g = GridSpec::square(64, tau()).unwrap();
    let ap = AlphaParams::new(0.25).unwrap();
    let f = band_limited_field(g, 0.1, 3, 42);
    let outs: Vec<ScalarField> = methods()
        .iter()
        .map(|&m| RhsEvaluator::new(g, ap, m).unwrap().rhs(&f).unwrap())
        .collect();
    let scale = outs[1].l2_norm();
    for i in 0..3 {
        for j in (i + 1)..3 {
            let mut num = 0.0;
            for k in 0..outs[i].values.len() {
                num += (outs[i].values[k] - outs[j].values[k]).powi(2);
            }
            let d = (num.sqrt() * outs[i].grid.cell_area().sqrt()) / scale;
            assert!(d < 1e-4, "methods {i} vs {j} differ by {d:.3e}");
        }
    }
}

#[test]
fn series_tail_decreases_with_n_max() {
    let g = GridSpec::square(64, tau()).unwrap();
    let ap = AlphaParams::new(0.25).unwrap();
    let f = band_limited_field(g, 0.3, 2, 7);
    let split = RhsEvaluator::new(g, ap, RhsMethod::SplitSpectral { quad_refinement: 3 })
        .unwrap()
        .rhs(&f)
        .unwrap();
    let mut prev = f64::INFINITY;
    for n_max in [1usize, 2, 4, 8] {
        let r = RhsEvaluator::new(g, ap, RhsMethod::SeriesTruncated { n_max })
            .unwrap()
            .rhs(&f)
            .unwrap();
        let d = rel_l2(&r, &split);
        assert!(d < prev, "series error not decreasing at n_max {n_max}: {d}");
        prev = d;
    }
    assert!(prev < 1e-6, "series with n_max=8 too far from split: {prev}");
}

#[test]
fn series_small_amplitude_matches_split_tightly() {
    let g = GridSpec::square(64, tau()).unwrap();
    let ap = AlphaParams::new(0.25).unwrap();
    let f = band_limited_field(g, 1e-3, 2, 3);
    let split = RhsEvaluator::new(g, ap, RhsMethod::SplitSpectral { quad_refinement: 3 })
        .unwrap()
        .rhs(&f)
        .unwrap();
    let ser = RhsEvaluator::new(g, ap, RhsMethod::SeriesTruncated { n_max: 1 })
        .unwrap()
        .rhs(&f)
        .unwrap();
    assert!(rel_l2(&ser, &split) < 1e-9);
}

#[test]
fn series_refuses_steep_slopes() {
    let g = GridSpec::square(64, tau()).unwrap();
    let ap = AlphaParams::new(0.1).unwrap();
    let f = ScalarField::from_fn(g, |x, _| 1.2 * x.sin());
    let ev = RhsEvaluator::new(g, ap, RhsMethod::SeriesTruncated { n_max: 4 }).unwrap();
    assert!(ev.rhs(&f).is_err());
}

#[test]
fn odd_symmetry_all_methods() {
    let g = GridSpec::square(32, tau()).unwrap();
    let ap = AlphaParams::new(0.45).unwrap();
    let f = band_limited_field(g, 0.2, 3, 11);
    let neg = f.scale(-1.0);
    for m in methods() {
        let ev = RhsEvaluator::new(g, ap, m).unwrap();
        let r = ev.rhs(&f).unwrap();
        let rn = ev.rhs(&neg).unwrap();
        let mut worst = 0.0f64;
        for i in 0..r.values.len() {
            worst = worst.max((r.values[i] + rn.values[i]).abs());
        }
        let scale = r.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst / scale < 1e-12, "odd symmetry broken for {:?}: {worst}", m);
    }
}

#[test]
fn translation_equivariance() {
    let g = GridSpec::square(32, tau()).unwrap();
    let ap = AlphaParams::new(0.25).unwrap();
    let f = band_limited_field(g, 0.2, 3, 5);
    for m in methods() {
        let ev = RhsEvaluator::new(g, ap, m).unwrap();
        let r_shift = ev.rhs(&f.shifted(5, -3)).unwrap();
        let shift_r = ev.rhs(&f).unwrap().shifted(5, -3);
        let d = rel_l2(&r_shift, &shift_r);
        assert!(d < 1e-11, "equivariance broken for {:?}: {d}", m);
    }
}

#[test]
fn mean_preservation() {
    let g = GridSpec::square(64, tau()).unwrap();
    let ap = AlphaParams::new(0.25).unwrap();
    let f = band_limited_field(g, 0.1, 3, 13);
    let l2 = f.l2_norm();
    for m in methods() {
        let ev = RhsEvaluator::new(g, ap, m).unwrap();
        let r = ev.rhs(&f).unwrap();
        let mean = r.values.iter().sum::<f64>() / r.values.len() as f64;
        assert!(
            mean.abs() <= 1e-8 * l2,
            "mean {mean} vs l2 {l2} for {:?}",
            m
        );
    }
}

#[test]
fn linearization_residual_quadratic_in_amplitude() {
    // ||rhs(f) + Lambda^{1+a} f|| / ||Lambda^{1+a} f|| = O(a^2)
    let g = GridSpec::square(64, tau()).unwrap();
    let ap = AlphaParams::new(0.25).unwrap();
    let ev = RhsEvaluator::new(g, ap, RhsMethod::SplitSpectral { quad_refinement: 3 }).unwrap();
    let base = band_limited_field(g, 1.0, 2, 21);
    let mut ratios = Vec::new();
    for &amp in &[1e-2, 1e-3, 1e-4] {
        let f = base.scale(amp);
        let spec = forward(&f).unwrap();
        let lam = inverse(&apply_fractional_laplacian(&spec, 1.25).unwrap());
        let r = ev.rhs(&f).unwrap();
        let resid = r.axpy(1.0, &lam); // rhs + Lambda f
        ratios.push(resid.l2_norm() / lam.l2_norm());
    }
    // slope of log ratio vs log amp ~ 2
    let slope1 = (ratios[0] / ratios[1]).log10();
    let slope2 = (ratios[1] / ratios[2]).log10();
    assert!((slope1 - 2.0).abs() < 0.3, "slope1 {slope1}");
    assert!((slope2 - 2.0).abs() < 0.3, "slope2 {slope2}");
}

#[test]
fn normalization_constant_values() {
    assert_relative_eq!(
        contour_normalization(0.0),
        1.0 / tau(),
        max_relative = 1e-12
    );
    // frozen from the Gamma formula
    assert_relative_eq!(
        contour_normalization(0.25),
        0.143_174_486_570_410_9,
        max_relative = 1e-10
    );
    assert_relative_eq!(
        contour_normalization(0.45),
        0.121_170_323_907_968_1,
        max_relative = 1e-10
    );
}

#[test]
fn determinism_across_calls() {
    let g = GridSpec::square(32, tau()).unwrap();
    let ap = AlphaParams::new(0.3).unwrap();
    let f = band_limited_field(g, 0.15, 3, 99);
    let ev = RhsEvaluator::new(g, ap, RhsMethod::SplitSpectral { quad_refinement: 3 }).unwrap();
    let a = ev.rhs(&f).unwrap();
    let b = ev.rhs(&f).unwrap();
    assert_eq!(a.values, b.values);
}
