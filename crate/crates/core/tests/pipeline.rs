use std::fs;

use vdp_terminal::adaptation::{worst_case_control, AdaptationConfig, EpochStatus};
use vdp_terminal::integrator::EventKind;
use vdp_terminal::io::{read_run_dir, trajectory_file_name, METRICS_FILE};
use vdp_terminal::manifold::ManifoldParams;
use vdp_terminal::metrics::Metrics;
use vdp_terminal::plot::{
    parse_paths, portrait_frame, render_phase_portrait, View, MANIFOLD_STROKE,
};
use vdp_terminal::runner::{render_run_dir, run_scenario, write_run_dir};
use vdp_terminal::scenario::{
    validate_scenario, BoundsConfig, CartesianInitial, InitialCondition, ScenarioConfig, Segment,
};
use vdp_terminal::sweep::{sweep, CellOutcome, Grid};
use vdp_terminal::Error;

fn dist_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt()
}

#[test]
fn mu_by_b1_sweep() {
    let base = validate_scenario(&ScenarioConfig::reference_unbounded()).unwrap();
    let grid: Grid = "mu=0.05,0.1,0.2;b1=1.0,1.5".parse().unwrap();
    let cells = sweep(&base, &grid);
    assert_eq!(cells.len(), 6);
    for (i, cell) in cells.iter().enumerate() {
        assert_eq!(cell.row.cell, i);
        let b1 = cell.row.params["b1"];
        assert_eq!(b1, [1.0, 1.5][i % 2]);
        assert_eq!(cell.row.params["mu"], [0.05, 0.1, 0.2][i / 2]);
        let CellOutcome::Ok { metrics } = &cell.row.outcome else {
            panic!("cell {i} rejected")
        };
        // the larger ripple puts the r0 = 1 start on the far side of the control pole
        let expected = if b1 == 1.0 { 4 } else { 3 };
        assert_eq!(metrics.aggregate.converged, expected, "cell {i}");
        for t in &metrics.trajectories {
            if !t.converged {
                assert_eq!(t.initial.r, 1.0);
                assert!(t.failure.as_deref().unwrap().contains("degenerate"));
            }
        }
    }
}

#[test]
fn one_point_grid_matches_single_run() {
    let mut cfg = ScenarioConfig::reference_unbounded();
    cfg.integrator.t_end = 30.0;
    let base = validate_scenario(&cfg).unwrap();
    let grid: Grid = "mu=0.1".parse().unwrap();
    let cells = sweep(&base, &grid);
    let CellOutcome::Ok { metrics } = &cells[0].row.outcome else {
        panic!()
    };
    assert_eq!(metrics, &run_scenario(&base).metrics);
}

#[test]
fn converged_tail_is_drawn_on_the_overlay() {
    let mut cfg = ScenarioConfig::reference_unbounded();
    cfg.initial_conditions = vec![
        InitialCondition::polar(6.0, 0.0),
        InitialCondition::polar(2.0, 0.0),
    ];
    let s = validate_scenario(&cfg).unwrap();
    let out = run_scenario(&s);
    assert!(out.metrics.aggregate.all_converged);
    let trajs: Vec<_> = out
        .runs
        .iter()
        .map(|r| r.trajectory.samples.clone())
        .collect();
    let b = ManifoldParams::new(4.0, 1.5);
    let svg = render_phase_portrait(&trajs, &[b], View::Cartesian);
    let overlay = &parse_paths(&svg, "manifold")[0];
    let drawn = parse_paths(&svg, "trajectory");
    assert_eq!(drawn.len(), 2);
    for path in &drawn {
        let tail = &path[path.len() - path.len() / 10..];
        for &p in tail {
            let d = overlay
                .windows(2)
                .map(|w| dist_to_segment(p, w[0], w[1]))
                .fold(f64::INFINITY, f64::min);
            assert!(
                d <= MANIFOLD_STROKE,
                "tail point {p:?} is {d} px from the overlay"
            );
        }
    }
    // the start marker sits at the first sample
    let frame = portrait_frame(&trajs, &[b], View::Cartesian);
    let (px, py) = frame.to_px(6.0, 0.0);
    assert!(svg.contains(&format!(r#"cx="{px:.2}" cy="{py:.2}""#)));
}

#[test]
fn run_directory_is_consistent() {
    let mut cfg = ScenarioConfig::reference();
    cfg.initial_conditions = vec![
        InitialCondition::polar(6.0, 0.0),
        InitialCondition::Cartesian(CartesianInitial { x: 0.0, y: 5.0 }),
    ];
    cfg.integrator.t_end = 40.0;
    let s = validate_scenario(&cfg).unwrap();
    let out = run_scenario(&s);
    let dir = tempfile::tempdir().unwrap();
    write_run_dir(dir.path(), &s, &out).unwrap();

    for name in [
        "scenario.json",
        "metrics.json",
        "portrait_polar.svg",
        "portrait_cartesian.svg",
        "control_vs_theta.svg",
        &trajectory_file_name(0),
        &trajectory_file_name(1),
    ] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }

    let contents = read_run_dir(dir.path()).unwrap();
    assert_eq!(
        validate_scenario(&contents.config).unwrap().to_config(),
        s.to_config()
    );
    let metrics: Metrics =
        serde_json::from_str(&fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap()).unwrap();
    assert_eq!(metrics.defaults.eps_conv, 1e-2);
    assert!(
        metrics.aggregate.clamp_count > 0,
        "reference bounds must bind"
    );

    for (k, rows) in contents.trajectories.iter().enumerate() {
        let m = &metrics.trajectories[k];
        let max_u = rows.iter().map(|r| r.u_applied.abs()).fold(0.0, f64::max);
        assert_eq!(max_u, m.max_abs_u);
        let onsets = rows
            .iter()
            .enumerate()
            .filter(|(i, r)| r.clamped && (*i == 0 || !rows[i - 1].clamped))
            .count();
        assert_eq!(onsets, m.clamp_count);
        assert_eq!(rows, &out.runs[k].trajectory.samples);
        for r in rows {
            assert!(r.u_applied.abs() <= 2.0);
        }
    }
    assert_eq!(
        contents.trajectories[1][0].theta,
        std::f64::consts::FRAC_PI_2
    );

    // re-rendering from disk reproduces the figures
    let before = fs::read(dir.path().join("portrait_polar.svg")).unwrap();
    render_run_dir(dir.path()).unwrap();
    assert_eq!(
        fs::read(dir.path().join("portrait_polar.svg")).unwrap(),
        before
    );
}

#[test]
fn render_of_missing_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        render_run_dir(&dir.path().join("nope")),
        Err(Error::Io(_))
    ));
}

/// A manifold switch the bounds can absorb once the gain is reduced.
#[test]
fn adaptation_rescales_gain_after_switch() {
    let cfg = ScenarioConfig {
        initial_conditions: vec![InitialCondition::polar(4.0, 0.0)],
        a_nominal: vdp_terminal::control::ChiParams::new(2.0, 1.0),
        schedule: vec![
            Segment {
                t_start: 0.0,
                b0: 4.0,
                b1: 0.5,
                mu: 0.0,
            },
            Segment {
                t_start: 30.0,
                b0: 4.0,
                b1: 1.0,
                mu: 0.0,
            },
        ],
        bounds: Some(BoundsConfig {
            u_min: -0.5,
            u_max: 2.0,
        }),
        integrator: vdp_terminal::integrator::IntegratorConfig {
            t_end: 60.0,
            ..Default::default()
        },
        adaptation: Some(AdaptationConfig::default()),
        seed: 3,
        sets: Default::default(),
    };
    let s = validate_scenario(&cfg).unwrap();
    let out = run_scenario(&s);
    let run = &out.runs[0];
    assert!(run.failure.is_none(), "{:?}", run.failure);
    let state = run.adaptation.as_ref().unwrap();

    let before = state.epoch_log.iter().filter(|e| e.t >= 10.0 && e.t < 30.0);
    for e in before {
        assert!(
            matches!(e.status, EpochStatus::Adjusted { scale, .. } if scale == 1.0),
            "{e:?}"
        );
    }
    let epoch = state.epoch_log.iter().find(|e| e.t == 30.0).unwrap();
    let EpochStatus::Adjusted {
        scale, u_lo, u_hi, ..
    } = epoch.status
    else {
        panic!("{epoch:?}")
    };
    assert!(scale > 0.0 && scale < 1.0, "{scale}");
    assert!((-0.5..=2.0).contains(&u_lo) && (-0.5..=2.0).contains(&u_hi));
    assert!((epoch.a_current.a1 - 2.0 * scale).abs() < 1e-12);

    // certificate with the true parameters
    let region = AdaptationConfig::default().region();
    let (lo, hi) = worst_case_control(
        &epoch.a_current,
        &ManifoldParams::new(4.0, 1.0),
        0.0,
        &region,
    )
    .unwrap();
    assert!(lo >= -0.5 && hi <= 2.0, "[{lo}, {hi}]");

    let late_clamps = run
        .trajectory
        .events
        .iter()
        .filter(|e| e.t > 30.0 && e.kind == EventKind::ClampOnset)
        .count();
    assert_eq!(late_clamps, 0);
    assert!(run
        .trajectory
        .samples
        .iter()
        .filter(|x| x.t > 30.0)
        .all(|x| x.a1 == epoch.a_current.a1 && !x.clamped));
    assert!(out.metrics.trajectories[0].converged);
}
