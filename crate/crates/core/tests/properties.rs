use proptest::prelude::*;
use sfslab_core::propagation::{make_exp_reversed, phi, phi0, propagate_convolution};
use sfslab_core::slowlight::{build_pit, kk_transfer, polarized_propagate, propagate_spectral};
use sfslab_core::{Complex64, ExpReversedSpec, FreqGrid, PitSpec, PulseEnvelope, ResonantMedium, TimeGrid};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 100,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn convolution_is_passive(alpha_l in 0.0..10.0_f64, fwhm in 0.05..2.0_f64, centre in -2.0..2.0_f64) {
        let m = ResonantMedium::new(alpha_l, 1.0).unwrap();
        let grid = TimeGrid::anchored(-12.0, 20.0, 0.01).unwrap();
        let input = PulseEnvelope::gaussian(grid, centre, fwhm).unwrap();
        let out = propagate_convolution(&m, &input).unwrap();
        prop_assert!(out.energy() <= input.energy() * (1.0 + 1e-9), "{} > {}", out.energy(), input.energy());
    }

    #[test]
    fn spectral_pit_is_passive(bg in 0.5..100.0_f64, hole in 5.0..40.0_f64, soft in 0.0..1.0_f64, det in -5.0..5.0_f64) {
        let spec = PitSpec { background_alpha_l: bg, hole_fwhm: hole, edge_softness: soft * hole, length_m: 0.02 };
        let fgrid = FreqGrid::centered(200.0, 0.05).unwrap();
        let tf = match build_pit(&spec, &fgrid) {
            Ok(p) => kk_transfer(&p).unwrap(),
            // edge narrower than eight grid steps
            Err(_) => return Ok(()),
        };
        let grid = TimeGrid::anchored(-3.0, 6.0, 0.01).unwrap();
        let input = PulseEnvelope::gaussian(grid, 0.0, 0.3).unwrap();
        let out = propagate_spectral(&tf, &input, det).unwrap();
        prop_assert!(out.energy() <= input.energy() * (1.0 + 1e-9));
    }

    #[test]
    fn output_vanishes_before_the_input_starts(alpha_l in 0.1..10.0_f64, t_on in -3.0..3.0_f64) {
        let m = ResonantMedium::new(alpha_l, 1.0).unwrap();
        let grid = TimeGrid::anchored(-5.0, 10.0, 0.01).unwrap();
        let input = PulseEnvelope::from_fn(grid, |t| {
            let s = t - t_on;
            Complex64::new(if s >= 0.0 { s * (-s).exp() } else { 0.0 }, 0.0)
        }).unwrap();
        let out = propagate_convolution(&m, &input).unwrap();
        for (i, z) in out.samples().iter().enumerate() {
            if grid.t(i) < t_on {
                prop_assert!(z.norm() <= 1e-12, "t = {}: {}", grid.t(i), z.norm());
            }
        }
    }

    #[test]
    fn exp_reversed_input_has_unit_energy(t in 0.01..10.0_f64) {
        let spec = ExpReversedSpec::new(t).unwrap();
        let grid = TimeGrid::anchored(-12.0 * t, t, t / 1000.0).unwrap();
        let e = make_exp_reversed(&spec, &grid).unwrap().energy();
        prop_assert!((e - 1.0).abs() < 1e-6, "{e}");
    }

    #[test]
    fn phi_at_origin_matches_closed_form(alpha_l in 0.0..50.0_f64, t in 0.01..5.0_f64, t2 in 0.1..5.0_f64) {
        let m = ResonantMedium::new(alpha_l, t2).unwrap();
        let spec = ExpReversedSpec::new(t).unwrap();
        let numeric = phi(&m, &spec, 0.0).unwrap();
        let closed = phi0(&m, &spec);
        prop_assert!((numeric - closed).abs() <= 1e-8 * closed.abs().max(1e-300) + 1e-15, "{numeric} vs {closed}");
    }
}

#[test]
fn polarization_split_at_measured_angles() {
    let grid = TimeGrid::anchored(-10.0, 10.0, 0.02).unwrap();
    let input = PulseEnvelope::gaussian(grid, 0.0, 1.0).unwrap();
    let tf = sfslab_core::TransferFunction::identity(FreqGrid::centered(30.0, 0.01).unwrap());
    let e = input.energy();
    for deg in [0.0_f64, 20.0, 45.0, 65.0, 90.0] {
        let th = deg.to_radians();
        let r = polarized_propagate(&tf, &input, th).unwrap();
        assert!((r.energy_parallel - e * th.cos().powi(2)).abs() < 1e-9, "{deg}");
        assert!((r.energy_perpendicular - e * th.sin().powi(2)).abs() < 1e-9, "{deg}");
    }
}
