//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS]`/`[FAIL]` line (visible with `cargo test --test acceptance --
//! --nocapture`).

use std::time::Instant;

use isac_edge::beamform::{
    build_ccp_sdp, grid_oracle, solve_beamforming, zf_oracle, BeamformStatus,
};
use isac_edge::channels::{build_channels, SceneGeometry};
use isac_edge::model::{ComplexVector, ErrorModelParams, SystemConfig};
use isac_edge::pipeline::{isac_gain_analytic, sweep, CompareMode, Regime, SweepParam, SweepSpec};
use isac_edge::scenario::Scenario;
use isac_edge::sdp;
use isac_edge::timealloc::{solve_time_allocation, sweep_allocation_surface, RateProfile};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn report(ok: bool, name: &str, detail: &str) {
    println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn scenario_path() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/two_target.json").to_string()
}

fn bundled_scenario() -> Scenario {
    Scenario::from_path(std::path::Path::new(&scenario_path())).expect("bundled scenario")
}

fn base_config(n: usize, m: usize) -> SystemConfig {
    SystemConfig {
        num_antennas: n,
        num_tasks: m,
        max_power_w: 1.0,
        noise_power_w: 1e-12,
        clutter_power_w: 1e-10,
        bandwidth_hz: 5e6,
        sample_volume_bits: 1e6,
        total_time_s: 200.0,
        sensing_time_per_sample_s: 0.1,
        sensing_thresholds: vec![1.0; m],
        error_params: vec![ErrorModelParams { a: 2.0, b: 0.5 }; m],
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> ComplexVector {
    let v = ComplexVector::new(
        (0..n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect(),
    )
    .unwrap();
    v.scale_re(1.0 / v.norm_sq().sqrt())
}

/// Criterion 1: rank-1 exactness of the lifted beamforming solution over 200
/// randomized feasible scenes, N in {2, 4, 8}, within 60 s.
#[test]
fn criterion_1_rank1_exactness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_defect = 0.0f64;
    let mut solved = 0usize;

    for trial in 0..200 {
        let n = [2usize, 4, 8][trial % 3];
        let mut cfg = base_config(n, 1);
        let geometry = SceneGeometry {
            antenna_spacing_m: 0.15,
            carrier_wavelength_m: 0.3,
            fading_exponent: 2.5,
            server_distance_m: 100.0 + 400.0 * rng.gen::<f64>(),
            target_distances_m: vec![10.0 + 50.0 * rng.gen::<f64>()],
            server_angle_rad: (rng.gen::<f64>() - 0.5) * 2.0 * 60f64.to_radians(),
            target_angles_rad: vec![(rng.gen::<f64>() - 0.5) * 2.0 * 75f64.to_radians()],
            reference_gain: isac_edge::scenario::default_reference_gain(),
            echo_gain_scale: 10.0 + 90.0 * rng.gen::<f64>(),
        };
        let channels = build_channels(&geometry, &cfg, trial as u64).unwrap();
        // Threshold at a random fraction of the full-power echo strength
        // keeps every instance feasible with margin.
        let fraction = 0.02 + 0.68 * rng.gen::<f64>();
        let eta = fraction * cfg.max_power_w * channels.g[0].norm_sq()
            / (cfg.noise_power_w + cfg.clutter_power_w);
        cfg.sensing_thresholds = vec![eta];

        let out = solve_beamforming(&channels.h, &channels.g[0], eta, &cfg).unwrap();
        assert_eq!(
            out.status,
            BeamformStatus::Optimal,
            "trial {trial} not optimal"
        );
        worst_defect = worst_defect.max(out.rank1_defect);
        solved += 1;
    }

    let elapsed = started.elapsed().as_secs_f64();
    report(
        worst_defect <= 1e-6 && solved == 200 && elapsed <= 60.0,
        "criterion 1 (rank-1 exactness)",
        &format!(
            "{solved} scenarios, worst second-eigenvalue ratio {worst_defect:.3e}, {elapsed:.1} s"
        ),
    );
}

/// Criterion 2: solver vs oracles. Zero-forcing-applicable instances (echo
/// orthogonal to the uplink, where the closed form is the optimum) agree to
/// 1e-5 relative; general instances agree with the 64^3 + refinement grid
/// search to 1e-2; the closed form is a lower bound wherever defined.
#[test]
fn criterion_2_oracle_equivalence() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(777);

    let mut worst_zf = 0.0f64;
    for trial in 0..60 {
        let n = [2usize, 4, 8][trial % 3];
        let mut cfg = base_config(n, 1);
        cfg.noise_power_w = 10f64.powf(-1.0 - 3.0 * rng.gen::<f64>());
        cfg.clutter_power_w = 2.0 * cfg.noise_power_w;
        let h = random_unit(&mut rng, n);
        let raw = random_unit(&mut rng, n);
        let along = h.dot_h(&raw);
        let g = raw.sub(&h.scale(along / h.norm_sq()));
        let fraction = 0.02 + 0.83 * rng.gen::<f64>();
        let eta =
            fraction * cfg.max_power_w * g.norm_sq() / (cfg.noise_power_w + cfg.clutter_power_w);

        let out = solve_beamforming(&h, &g, eta, &cfg).unwrap();
        assert_eq!(out.status, BeamformStatus::Optimal, "zf trial {trial}");
        let (zf, feasible) = zf_oracle(&h, &g, eta, &cfg).unwrap();
        assert!(feasible, "zf trial {trial} oracle infeasible");
        worst_zf = worst_zf.max((out.sinr_com - zf).abs() / zf);
    }

    let mut worst_grid = 0.0f64;
    for trial in 0..16 {
        let n = [2usize, 3, 4, 8][trial % 4];
        let mut cfg = base_config(n, 1);
        cfg.noise_power_w = 10f64.powf(-1.0 - 2.0 * rng.gen::<f64>());
        cfg.clutter_power_w = 0.5 * cfg.noise_power_w;
        let h = random_unit(&mut rng, n);
        let g = random_unit(&mut rng, n).scale_re(0.5 + rng.gen::<f64>());
        let fraction = 0.05 + 0.75 * rng.gen::<f64>();
        let eta =
            fraction * cfg.max_power_w * g.norm_sq() / (cfg.noise_power_w + cfg.clutter_power_w);

        let out = solve_beamforming(&h, &g, eta, &cfg).unwrap();
        assert_eq!(out.status, BeamformStatus::Optimal, "grid trial {trial}");
        let grid = grid_oracle(&h, &g, eta, &cfg, 64).unwrap();
        worst_grid = worst_grid.max((out.sinr_com - grid).abs() / grid.abs().max(1e-300));
        // The closed form never beats the true optimum.
        if let Ok((zf, true)) = zf_oracle(&h, &g, eta, &cfg) {
            assert!(
                out.sinr_com >= zf * (1.0 - 1e-6),
                "grid trial {trial}: optimum {} below closed-form bound {zf}",
                out.sinr_com
            );
        }
    }

    let elapsed = started.elapsed().as_secs_f64();
    report(
        worst_zf <= 1e-5 && worst_grid <= 1e-2 && elapsed <= 300.0,
        "criterion 2 (oracle equivalence)",
        &format!(
            "60 orthogonal instances worst rel {worst_zf:.3e} (<=1e-5), 16 general instances worst rel {worst_grid:.3e} (<=1e-2), {elapsed:.1} s"
        ),
    );
}

/// Criterion 3: allocator optimality against exhaustive simplex grids for
/// M = 1, 2, 3; exact budget use and error equalization.
#[test]
fn criterion_3_time_allocation_optimality() {
    // M = 1: the whole budget goes to the single task.
    let mut cfg1 = base_config(4, 1);
    cfg1.error_params = vec![ErrorModelParams {
        a: 2.5845,
        b: 0.5317,
    }];
    let profile1 = RateProfile::from_sinrs(&[50.0], &cfg1).unwrap();
    let alloc1 = solve_time_allocation(&profile1, &cfg1).unwrap();
    let m1_ok = (alloc1.tau_s[0] - 200.0).abs() <= 1e-8 * 200.0;

    // M = 2: 10^4-point line over the simplex.
    let mut cfg2 = base_config(4, 2);
    cfg2.error_params = vec![
        ErrorModelParams { a: 1.0, b: 0.5 },
        ErrorModelParams { a: 2.0, b: 1.0 },
    ];
    let profile2 = RateProfile::from_sinrs(&[31.6, 31.6], &cfg2).unwrap();
    let alloc2 = solve_time_allocation(&profile2, &cfg2).unwrap();
    let rate2: Vec<f64> = profile2.rates().iter().map(|r| r.effective()).collect();
    let objective2 = |tau1: f64| -> f64 {
        let e1 = 1.0 * (rate2[0] * tau1).powf(-0.5);
        let e2 = 2.0 * (rate2[1] * (200.0 - tau1)).powf(-1.0);
        e1.max(e2)
    };
    let points = 10_000usize;
    let (mut best2, mut best2_idx) = (f64::INFINITY, 0);
    for i in 1..points {
        let v = objective2(200.0 * i as f64 / points as f64);
        if v < best2 {
            best2 = v;
            best2_idx = i;
        }
    }
    let cell2 = {
        let lo = objective2(200.0 * (best2_idx.saturating_sub(1).max(1)) as f64 / points as f64);
        let hi = objective2(200.0 * (best2_idx + 1).min(points - 1) as f64 / points as f64);
        (lo - best2).abs().max((hi - best2).abs())
    };
    let m2_gap = best2 - alloc2.mu_star;
    let m2_ok = m2_gap >= -1e-12 * best2 && m2_gap <= cell2 + 1e-12 * best2;

    // M = 3: 400x400 grid over the 2-simplex.
    let mut cfg3 = base_config(4, 3);
    cfg3.error_params = vec![
        ErrorModelParams { a: 1.0, b: 0.5 },
        ErrorModelParams { a: 2.0, b: 1.0 },
        ErrorModelParams { a: 1.5, b: 0.8 },
    ];
    let profile3 = RateProfile::from_sinrs(&[10.0, 31.6, 100.0], &cfg3).unwrap();
    let alloc3 = solve_time_allocation(&profile3, &cfg3).unwrap();
    let rate3: Vec<f64> = profile3.rates().iter().map(|r| r.effective()).collect();
    let objective3 = |tau1: f64, tau2: f64| -> f64 {
        let tau3 = 200.0 - tau1 - tau2;
        let e1 = 1.0 * (rate3[0] * tau1).powf(-0.5);
        let e2 = 2.0 * (rate3[1] * tau2).powf(-1.0);
        let e3 = 1.5 * (rate3[2] * tau3).powf(-0.8);
        e1.max(e2).max(e3)
    };
    let side = 400usize;
    let step3 = 200.0 / side as f64;
    let (mut best3, mut best3_at) = (f64::INFINITY, (0usize, 0usize));
    for i in 1..side {
        for j in 1..(side - i) {
            let v = objective3(step3 * i as f64, step3 * j as f64);
            if v < best3 {
                best3 = v;
                best3_at = (i, j);
            }
        }
    }
    let mut cell3 = 0.0f64;
    for di in -1i64..=1 {
        for dj in -1i64..=1 {
            let i = (best3_at.0 as i64 + di).clamp(1, side as i64 - 1) as usize;
            let j = (best3_at.1 as i64 + dj).clamp(1, side as i64 - 1) as usize;
            if i + j < side {
                cell3 = cell3.max((objective3(step3 * i as f64, step3 * j as f64) - best3).abs());
            }
        }
    }
    let m3_gap = best3 - alloc3.mu_star;
    let m3_ok = m3_gap >= -1e-12 * best3 && m3_gap <= cell3 + 1e-12 * best3;

    // Budget exhaustion and error equalization on every solved case.
    let mut side_ok = true;
    for (cfg, profile, alloc) in [
        (&cfg1, &profile1, &alloc1),
        (&cfg2, &profile2, &alloc2),
        (&cfg3, &profile3, &alloc3),
    ] {
        let total: f64 = alloc.tau_s.iter().sum();
        side_ok &= (total - cfg.total_time_s).abs() <= 1e-8 * cfg.total_time_s;
        for (m, tau) in alloc.tau_s.iter().enumerate() {
            let v = profile.rates()[m].effective() * tau;
            let err = cfg.error_params[m].a * v.powf(-cfg.error_params[m].b);
            side_ok &= (err - alloc.mu_star).abs() <= 1e-6 * alloc.mu_star;
        }
    }

    report(
        m1_ok && m2_ok && m3_ok && side_ok,
        "criterion 3 (time-allocation optimality)",
        &format!(
            "M=1 exact, M=2 grid gap {m2_gap:.3e} <= cell {cell2:.3e}, M=3 grid gap {m3_gap:.3e} <= cell {cell3:.3e}, budgets and equalization hold"
        ),
    );
}

/// Criterion 4: measured matched-sample gain equals the closed form to 0.01
/// across a sensing-bound sweep, and the analytic evaluator returns exactly
/// 0.5 at x = 1.
#[test]
fn criterion_4_gain_formula() {
    let scenario = bundled_scenario();
    let (cfg, channels) = scenario.build().unwrap();
    let grid: Vec<f64> = (0..12).map(|i| 0.05 * 1.3f64.powi(i)).collect();
    let spec = SweepSpec {
        param: SweepParam::SensingTime,
        grid: grid.clone(),
        mode: CompareMode::EqualSamples,
    };
    let rows = sweep(&cfg, &channels, &spec).unwrap();
    let mut worst = 0.0f64;
    let mut all_sensing = true;
    for row in &rows {
        all_sensing &= row.regime == Regime::SensingDominant;
        worst = worst.max((row.gain_measured - row.gain_analytic).abs());
    }

    // x = t_S B log2(1 + P||h||^2/sigma^2) / D = 1 exactly: B = D and a 0 dB
    // uplink make the rate 1 bit/s/Hz.
    let mut unit = base_config(1, 1);
    unit.bandwidth_hz = 2e6;
    unit.sample_volume_bits = 2e6;
    unit.noise_power_w = 1.0;
    unit.sensing_time_per_sample_s = 1.0;
    let h = ComplexVector::from_re_im(&[(1.0, 0.0)]);
    let gain_at_one = isac_gain_analytic(&unit, &h);

    report(
        all_sensing && worst <= 0.01 && gain_at_one == 0.5,
        "criterion 4 (gain formula)",
        &format!(
            "{} sensing-bound points, worst |measured-analytic| {worst:.3e} (<=0.01), gain(x=1) = {gain_at_one}",
            rows.len()
        ),
    );
}

/// Criterion 5: gain-vs-t_S curve shape on the bundled scene: negative at
/// the smallest t_S, one zero crossing, interior peak then decay, analytic
/// agreement within 1% on sensing-dominant points, and lower sensing-
/// dominant gain with doubled bandwidth.
#[test]
fn criterion_5_gain_curve_reproduction() {
    let scenario = bundled_scenario();
    let (cfg, channels) = scenario.build().unwrap();
    let grid: Vec<f64> = (0..25)
        .map(|i| 10f64.powf(-3.0 + 3.0 * i as f64 / 24.0))
        .collect();
    let spec = SweepSpec {
        param: SweepParam::SensingTime,
        grid: grid.clone(),
        mode: CompareMode::EqualSamples,
    };
    let rows = sweep(&cfg, &channels, &spec).unwrap();
    let gains: Vec<f64> = rows.iter().map(|r| r.gain_measured).collect();

    let starts_negative = gains[0] < 0.0;
    let crossings = gains
        .windows(2)
        .filter(|w| (w[0] < 0.0) != (w[1] < 0.0))
        .count();
    let peak = gains
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    let interior_peak = peak > 0 && peak < gains.len() - 1;
    let decays_after_peak = gains[peak..].windows(2).all(|w| w[1] <= w[0] + 1e-9);

    let mut analytic_ok = true;
    for row in rows.iter().filter(|r| r.regime == Regime::SensingDominant) {
        analytic_ok &=
            (row.gain_measured - row.gain_analytic).abs() <= 0.01 * row.gain_analytic.abs();
    }

    let mut doubled_cfg = cfg.clone();
    doubled_cfg.bandwidth_hz *= 2.0;
    let rows_2b = sweep(&doubled_cfg, &channels, &spec).unwrap();
    let mut bandwidth_ok = true;
    for (a, b) in rows.iter().zip(&rows_2b) {
        if a.regime == Regime::SensingDominant {
            // Doubling B keeps sensing dominance (the comm limit only rises)
            // and must lower the gain there.
            bandwidth_ok &= b.regime == Regime::SensingDominant;
            bandwidth_ok &= b.gain_measured < a.gain_measured;
        }
    }

    report(
        starts_negative && crossings == 1 && interior_peak && decays_after_peak && analytic_ok && bandwidth_ok,
        "criterion 5 (gain curve shape)",
        &format!(
            "gain({:.0e}) = {:.3}, crossings = {crossings}, peak at index {peak}/{} = {:.3}, sensing-dominant points match analysis to 1%, doubled bandwidth lowers gain",
            grid[0],
            gains[0],
            gains.len() - 1,
            gains[peak]
        ),
    );
}

/// Criterion 6: allocation surface trends over the shared-SINR two-task
/// scene, 200 s budget: tau_1 nondecreasing in t_S, nonincreasing in SINR,
/// and the pair always exhausts the budget.
#[test]
fn criterion_6_allocation_surface_trends() {
    let mut cfg = base_config(4, 2);
    cfg.total_time_s = 200.0;
    cfg.error_params = vec![
        ErrorModelParams { a: 2.0, b: 1.0 },
        ErrorModelParams { a: 1.0, b: 0.5 },
    ];
    let sinr_db: Vec<f64> = (0..7).map(|i| 5.0 * i as f64).collect();
    let t_s: Vec<f64> = (0..7)
        .map(|i| 0.01 * 10f64.powf(2.0 * i as f64 / 6.0))
        .collect();
    let rows = sweep_allocation_surface(&cfg, &sinr_db, &t_s).unwrap();

    let mut budget_ok = true;
    for row in &rows {
        budget_ok &= (row.tau_1 + row.tau_2 - 200.0).abs() <= 1e-8 * 200.0;
    }
    let mut ts_monotone = true;
    for s in 0..sinr_db.len() {
        for t in 1..t_s.len() {
            let prev = &rows[s * t_s.len() + t - 1];
            let cur = &rows[s * t_s.len() + t];
            ts_monotone &= cur.tau_1 >= prev.tau_1 - 1e-9 * 200.0;
        }
    }
    let mut sinr_monotone = true;
    for t in 0..t_s.len() {
        for s in 1..sinr_db.len() {
            let prev = &rows[(s - 1) * t_s.len() + t];
            let cur = &rows[s * t_s.len() + t];
            sinr_monotone &= cur.tau_1 <= prev.tau_1 + 1e-9 * 200.0;
        }
    }

    report(
        budget_ok && ts_monotone && sinr_monotone,
        "criterion 6 (allocation surface trends)",
        &format!(
            "{} grid points: tau_1 nondecreasing in t_S, nonincreasing in SINR, tau_1 + tau_2 = 200 s everywhere",
            rows.len()
        ),
    );
}

/// Criterion 7: the analytic SDP instances solve to a 1e-8 duality gap and
/// the unreachable-threshold beamforming instance reports infeasible.
#[test]
fn criterion_7_sdp_unit_suite() {
    use nalgebra::DMatrix;
    let tol = sdp::ToleranceSet::default();

    // maximize tr(F diag(2,1)), tr(F) <= 1: optimum 2 on the top
    // eigendirection.
    let mut p1 = sdp::SdpProblem::new();
    let f1 = p1.add_psd_block("F", 2);
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        Complex64::new(2.0, 0.0),
        Complex64::new(1.0, 0.0),
    ]));
    p1.set_objective(
        sdp::Sense::Maximize,
        sdp::LinearExpr::new().with_block(f1, diag),
    );
    p1.add_constraint(
        sdp::LinearExpr::new().with_block(f1, DMatrix::identity(2, 2)),
        sdp::ConstraintSense::LessEq,
        1.0,
    );
    let s1 = sdp::solve(&p1, &tol).unwrap();
    let first_ok = s1.status == sdp::SdpStatus::Optimal
        && s1.duality_gap <= 1e-8
        && (s1.objective_value - 2.0).abs() <= 1e-6;

    // maximize tr(F), tr(F) <= 0: optimum 0 at F = 0.
    let mut p2 = sdp::SdpProblem::new();
    let f2 = p2.add_psd_block("F", 2);
    p2.set_objective(
        sdp::Sense::Maximize,
        sdp::LinearExpr::new().with_block(f2, DMatrix::identity(2, 2)),
    );
    p2.add_constraint(
        sdp::LinearExpr::new().with_block(f2, DMatrix::identity(2, 2)),
        sdp::ConstraintSense::LessEq,
        0.0,
    );
    let s2 = sdp::solve(&p2, &tol).unwrap();
    let second_ok = s2.status == sdp::SdpStatus::Optimal
        && s2.duality_gap <= 1e-8
        && s2.objective_value.abs() <= 1e-7;

    // eta (sigma^2 + c) > P ||g||^2: infeasible lifted problem.
    let cfg = base_config(2, 1);
    let h = ComplexVector::from_re_im(&[(1.0, 0.0), (0.0, 0.0)]);
    let g = ComplexVector::from_re_im(&[(0.0, 0.0), (1e-5, 0.0)]);
    let eta = 2.0 * cfg.max_power_w * g.norm_sq() / (cfg.noise_power_w + cfg.clutter_power_w);
    let problem = build_ccp_sdp(&h, &g, eta, &cfg).unwrap();
    let s3 = sdp::solve(&problem, &tol).unwrap();
    let infeasible_ok = s3.status == sdp::SdpStatus::Infeasible;

    report(
        first_ok && second_ok && infeasible_ok,
        "criterion 7 (SDP unit suite)",
        &format!(
            "analytic optima gaps {:.2e} / {:.2e} (<=1e-8), unreachable threshold reported {:?}",
            s1.duality_gap, s2.duality_gap, s3.status
        ),
    );
}

/// Criterion 8: solving the bundled scenario twice yields byte-identical
/// JSON reports.
#[test]
fn criterion_8_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.json");
    let out_b = dir.path().join("b.json");
    for out in [&out_a, &out_b] {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_isac-edge"))
            .args(["solve", &scenario_path(), "--out", out.to_str().unwrap()])
            .status()
            .expect("binary runs");
        assert!(status.success(), "solve exited with {status:?}");
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    report(
        !a.is_empty() && a == b,
        "criterion 8 (determinism)",
        &format!("two runs produced identical {}-byte reports", a.len()),
    );
}
