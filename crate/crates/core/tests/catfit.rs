use nmspdc::catfit::{fit_fidelity, fit_squeezed_cat, fit_squeezed_cat_with, FitOptions};
use nmspdc::evolution::{tau_opt, EvolutionMode};
use nmspdc::measurement::prepare;
use nmspdc::states::{phase_rotate, FockVector, SqueezedCatParams, DEFAULT_TAIL_EPS};

fn collapsed(beta: f64, m: usize) -> FockVector {
    prepare(
        beta,
        tau_opt(beta),
        m,
        EvolutionMode::Full,
        DEFAULT_TAIL_EPS,
    )
    .unwrap()
    .signal
    .unwrap()
}

#[test]
fn optimum_does_not_depend_on_grid_density() {
    let signal = collapsed(5.0, 0);
    let fits: Vec<_> = [(11, 8), (31, 24), (61, 48)]
        .into_iter()
        .map(|(r_points, phase_points)| {
            fit_squeezed_cat_with(
                &signal,
                &FitOptions {
                    r_points,
                    phase_points,
                    ..FitOptions::default()
                },
            )
            .unwrap()
        })
        .collect();
    for f in &fits[1..] {
        assert!(
            (f.params.beta - fits[0].params.beta).abs() < 1e-6,
            "{f:?} vs {:?}",
            fits[0]
        );
        assert!((f.params.r - fits[0].params.r).abs() < 1e-6);
        assert!((f.fidelity - fits[0].fidelity).abs() < 1e-12);
    }
}

#[test]
fn fitted_point_is_a_local_maximum() {
    let signal = collapsed(4.0, 2);
    let fit = fit_squeezed_cat(&signal).unwrap();
    let h = 10.0 * 1e-6;
    for (db, dr, dp) in [
        (h, 0.0, 0.0),
        (-h, 0.0, 0.0),
        (0.0, h, 0.0),
        (0.0, -h, 0.0),
        (0.0, 0.0, h),
        (0.0, 0.0, -h),
        (h, -h, h),
    ] {
        let p = SqueezedCatParams::new(fit.params.beta + db, fit.params.r + dr);
        let f = fit_fidelity(&signal, p, fit.phase + dp).unwrap();
        assert!(
            f <= fit.fidelity + 1e-9,
            "({db}, {dr}, {dp}) improves {} -> {f}",
            fit.fidelity
        );
    }
}

#[test]
fn global_rotation_only_moves_the_phase() {
    let signal = collapsed(4.0, 0);
    let base = fit_squeezed_cat(&signal).unwrap();
    let turned = fit_squeezed_cat(&phase_rotate(&signal, 0.3)).unwrap();
    assert!((base.params.beta - turned.params.beta).abs() < 1e-5);
    assert!((base.params.r - turned.params.r).abs() < 1e-5);
    assert!((base.fidelity - turned.fidelity).abs() < 1e-10);
    let shift = (turned.phase - base.phase - 0.3).rem_euclid(std::f64::consts::PI);
    assert!(
        shift.min(std::f64::consts::PI - shift) < 1e-5,
        "{} vs {}",
        base.phase,
        turned.phase
    );
}

#[test]
fn zero_photon_state_is_real_after_quarter_turn() {
    for beta in [8.0, 10.0] {
        let s = phase_rotate(&collapsed(beta, 0), -std::f64::consts::FRAC_PI_4)
            .with_fixed_global_phase();
        let worst = s
            .amplitudes()
            .iter()
            .map(|a| a.im.abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "beta {beta}: max |Im| = {worst:e}");
    }
}
