use nalgebra::Matrix3;
use proptest::prelude::*;

use shilnikov_core::homoclinic::border_touch;
use shilnikov_core::interpolation::{real_part, DiagonalPower, Interpolator};
use shilnikov_core::recursion::{matrix_power, orbit_point, GeomSumState};
use shilnikov_core::return_time::{descartes_bound, envelopes, first_root, ExpPolynomial, ReturnTimeModel};
use shilnikov_core::spectral::{invariant_plane, Stability};
use shilnikov_core::{eigen3, PwlParams, Side, SideParams, SpectralData, State3};

fn side_params() -> impl Strategy<Value = SideParams> {
    (-2.0..2.0f64, -2.0..2.0f64, prop_oneof![-1.5..-0.05f64, 0.05..1.5f64])
        .prop_map(|(t, s, d)| SideParams::new(t, s, d))
        .prop_filter("distinct roots", |sp| eigen3(sp.tau, sp.sigma, sp.delta).is_ok())
}

fn state() -> impl Strategy<Value = State3> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y, z)| State3::new(x, y, z))
}

/// Real eigenvalue `l` with complex pair `r e^{+-i th}`.
fn saddle_focus(l: f64, r: f64, th: f64) -> SideParams {
    SideParams::new(l + 2.0 * r * th.cos(), 2.0 * l * r * th.cos() + r * r, l * r * r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn recursion_matches_products(sp in side_params(), n in 0usize..40) {
        let a = sp.companion();
        let mut prod = Matrix3::identity();
        for _ in 0..n {
            prod *= a;
        }
        let m = matrix_power(&sp, n).unwrap();
        prop_assert!((m - prod).amax() <= 1e-9 * prod.amax().max(1.0));
    }

    #[test]
    fn geometric_sum_recursion(sp in side_params(), n in 1usize..30) {
        let a = sp.companion();
        let mut s = GeomSumState::default();
        let mut direct = Matrix3::zeros();
        let mut pow = Matrix3::identity();
        for _ in 0..n {
            s = s.advance(&a);
            direct += pow;
            pow *= a;
        }
        prop_assert!((s.sum - direct).amax() <= 1e-9 * direct.amax().max(1.0));
    }

    #[test]
    fn orbit_point_matches_branch_steps(sp in side_params(), p0 in state(), mu in -1.0..1.0f64, n in 0usize..30) {
        let p = PwlParams::new(sp.tau, sp.sigma, sp.delta, 1.0, -0.25, 0.3, mu).unwrap();
        let mut q = p0;
        for _ in 0..n {
            q = p.apply_branch(Side::Left, &q);
        }
        let r = orbit_point(&p, Side::Left, &p0, n).unwrap();
        prop_assert!((r - q).amax() <= 1e-9 * q.amax().max(1.0));
    }

    #[test]
    fn eigenpairs_satisfy_the_matrix(sp in side_params()) {
        let spec = SpectralData::of_side(&sp).unwrap();
        let a = sp.companion().map(|v| num_complex::Complex64::new(v, 0.0));
        for i in 0..3 {
            let v = spec.eigenvectors[i];
            let res = a * v - v * spec.eigenvalues[i];
            prop_assert!(res.iter().all(|c| c.norm() < 1e-8 * (1.0 + spec.eigenvalues[i].norm())));
        }
    }

    #[test]
    fn fractional_semigroup(sp in side_params(), s in 0.0..2.0f64, t in 0.0..2.0f64) {
        let spec = SpectralData::of_side(&sp).unwrap();
        let dp = DiagonalPower::new(spec).unwrap();
        let lhs = dp.matrix_power_t(s) * dp.matrix_power_t(t);
        let rhs = dp.matrix_power_t(s + t);
        let scale = rhs.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let err = (lhs - rhs).iter().map(|c| c.norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-9 * scale);
    }

    #[test]
    fn interpolation_hits_next_iterate(l in side_params(), r in side_params(), x0 in state()) {
        let p = PwlParams::new(l.tau, l.sigma, l.delta, r.tau, r.sigma, r.delta, 1.0).unwrap();
        prop_assume!(l.unit_gap().abs() > 1e-3 && r.unit_gap().abs() > 1e-3);
        let Ok(interp) = Interpolator::new(&p) else { return Ok(()) };
        let Ok(at) = interp.companion_orbit(&x0, 1.0) else { return Ok(()) };
        let next = p.step(&x0);
        prop_assert!((real_part(&at) - next).amax() <= 1e-8 * next.amax().max(1.0));
    }

    #[test]
    fn root_count_bounded_by_sign_changes(
        a1 in prop_oneof![-5.0..-0.05f64, 0.05..5.0f64],
        a2 in prop_oneof![-5.0..-0.05f64, 0.05..5.0f64],
        a3 in prop_oneof![-5.0..-0.05f64, 0.05..5.0f64],
        k1 in 1.05..3.0f64,
        k2 in 0.1..0.95f64,
    ) {
        let g = ExpPolynomial::new(a1, a2, a3, k1, k2).unwrap();
        let b = descartes_bound(&g);
        let mut roots = 0;
        let mut t = 1e-9;
        while let Some(r) = first_root(|s| g.eval(s), t, 30.0, 2e-3) {
            roots += 1;
            t = r + 1e-7;
        }
        prop_assert!(roots <= b.sign_changes);
        prop_assert!(b.t_lower <= b.t_upper.max(0.0) + 1e-12);
    }

    #[test]
    fn envelopes_contain_f(
        l in 1.05..2.0f64, r in 0.2..0.95f64, th in 0.1..3.0f64,
        y in -2.0..2.0f64, z in -2.0..2.0f64,
    ) {
        let left = SideParams::new(1.0, -0.25, 0.3);
        let right = saddle_focus(l, r, th);
        let p = PwlParams::new(left.tau, left.sigma, left.delta, right.tau, right.sigma, right.delta, 1.0).unwrap();
        prop_assume!(right.unit_gap().abs() > 1e-3);
        let model = ReturnTimeModel::build(&p, Side::Right, &State3::new(0.0, y, z)).unwrap();
        prop_assert!(model.eval(0.0).abs() < 1e-9 * (1.0 + y.abs() + z.abs()));
        let form = model.saddle_focus().unwrap();
        let (fp, fm) = envelopes(form).unwrap();
        for k in 0..200 {
            let t = 0.1 * k as f64;
            let f = model.eval(t);
            let slack = 1e-12 * (1.0 + fp.eval(t).abs());
            prop_assert!(fm.eval(t) <= f + slack && f <= fp.eval(t) + slack);
            prop_assert!((form.eval(t) - f).abs() <= 1e-9 * (1.0 + f.abs()));
        }
    }

    #[test]
    fn return_model_tracks_orbit(l in 1.05..1.6f64, r in 0.2..0.95f64, th in 0.1..3.0f64, y in -2.0..2.0f64, z in -2.0..2.0f64) {
        let right = saddle_focus(l, r, th);
        prop_assume!(right.unit_gap().abs() > 1e-3);
        let p = PwlParams::new(1.0, -0.25, 0.3, right.tau, right.sigma, right.delta, 1.0).unwrap();
        let x0 = State3::new(0.0, y, z);
        let model = ReturnTimeModel::build(&p, Side::Right, &x0).unwrap();
        for n in 1..10 {
            let q = orbit_point(&p, Side::Right, &x0, n).unwrap();
            prop_assert!((model.eval(n as f64) - q.x).abs() <= 1e-8 * (1.0 + q.x.abs()));
        }
    }

    #[test]
    fn stable_plane_is_invariant(l in 1.05..2.0f64, r in 0.2..0.95f64, th in 0.1..3.0f64, a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let sp = saddle_focus(l, r, th);
        prop_assume!(sp.unit_gap().abs() > 1e-3);
        let spec = SpectralData::of_side(&sp).unwrap();
        let base = State3::new(0.3, -0.2, 0.5);
        let plane = invariant_plane(&spec, &base, Stability::Stable).unwrap();
        let v = spec.eigenvectors[1];
        let d = v.map(|c| c.re) * a + v.map(|c| c.im) * b;
        // the linear part maps the plane's direction space into itself
        let image = sp.companion() * d;
        prop_assert!(plane.normal.dot(&image).abs() <= 1e-9 * (1.0 + image.norm()));
    }

    #[test]
    fn border_touch_on_eigenline(l in 1.05..2.0f64, r in 0.2..0.95f64, th in 0.1..3.0f64) {
        let sp = saddle_focus(l, r, th);
        prop_assume!(sp.unit_gap().abs() > 1e-3);
        let p = PwlParams::new(sp.tau, sp.sigma, sp.delta, 0.5, 0.1, -0.5, 1.0).unwrap();
        let fp = p.fixed_point(Side::Left).unwrap();
        let spec = SpectralData::of_side(&sp).unwrap();
        let v = spec.real_eigenvector(0);
        let p0 = border_touch(&fp, &v).unwrap();
        prop_assert_eq!(p0.x, 0.0);
        prop_assert!((p0 - fp.location).cross(&v).norm() <= 1e-9 * (1.0 + p0.norm()));
    }
}
