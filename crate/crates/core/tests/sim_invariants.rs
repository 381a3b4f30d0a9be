use cascade_core::fig1;
use cascade_core::heat::simulate_heat_observer;
use cascade_core::sim::Trajectory;

fn run(dx: f64, t_end: f64, u: impl Fn(f64) -> f64) -> Trajectory {
    let p = fig1::plant(fig1::MU).unwrap();
    let d = fig1::design(&p, fig1::GAIN_QUADRATURE).unwrap();
    let dt = fig1::DT * (dx / fig1::DX).powi(2);
    let cfg = fig1::sim_config(dt, dx, t_end);
    let init = fig1::initial((1.0 / dx).round() as usize).unwrap();
    simulate_heat_observer(&p, &d, u, &init, &cfg, &[t_end]).unwrap()
}

#[test]
fn identical_configs_are_bit_identical() {
    let a = run(fig1::DX, 0.5, |t| t.sin());
    let b = run(fig1::DX, 0.5, |t| t.sin());
    assert_eq!(a.times, b.times);
    for ((na, va), (nb, vb)) in a.series.iter().zip(&b.series) {
        assert_eq!(na, nb);
        assert!(va.iter().zip(vb).all(|(x, y)| x.to_bits() == y.to_bits()), "{na}");
    }
    assert_eq!(a.snapshots, b.snapshots);
}

#[test]
fn halving_dx_changes_final_errors_by_at_most_five_percent() {
    let coarse = run(fig1::DX, fig1::T_END, |_| 0.0);
    let fine = run(fig1::DX / 2.0, fig1::T_END, |_| 0.0);
    for name in ["err_sensor_2norm", "err_pde_L2norm", "err_combined"] {
        let (c, f) = (coarse.last(name).unwrap(), fine.last(name).unwrap());
        assert!((c - f).abs() <= 0.05 * c.abs(), "{name}: {c} vs {f}");
    }
}

#[test]
fn heat_error_is_input_invariant() {
    let a = run(fig1::DX, 1.0, |_| 0.0);
    let b = run(fig1::DX, 1.0, |t| 2.0 * (3.0 * t).cos());
    for name in ["err_sensor_2norm", "err_pde_L2norm", "err_combined"] {
        let gap = a
            .series(name)
            .unwrap()
            .iter()
            .zip(b.series(name).unwrap())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(gap <= 1e-9, "{name}: {gap:.3e}");
    }
}
