//! One runner per experiment kind. Each returns the artifacts to persist.

use std::f64::consts::PI;

use conflow::flow::{charge_e, charge_q, charges, flow_rhs_into, flow_rhs_reference, hamiltonian};
use conflow::genfunc::{
    appendix_divisibility_exact, appendix_sums, appendix_sums_brute, master_sum, master_sum_brute, rhs_via_contour,
};
use conflow::integrator::{conservation_drift, integrate, IntegratorConfig};
use conflow::interaction::{interaction_coefficient, quadrature_coefficient};
use conflow::stationary::{
    blaschke_state, decimated_state, family_a0, family_omega0, family_pm, kappa, one_mode, pm_charges, residual,
    Branch, StationaryState,
};
use conflow::subspace::{evolve_subspace, lift, oscillation_of, subspace_charges, y_rate, SubspaceState};
use conflow::szego::{evolve_szego, single_pole_solution, single_pole_omega, SzegoPoleState};
use conflow::wave::{evolve_averaged, validate_averaging};
use conflow::{Complex64, ModeSpectrum};
use log::{info, warn};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{BranchName, Experiment, Initial, RunConfig};
use crate::error::CliError;
use crate::output::{Artifacts, ChargeTable, Check, Series, Summary};

/// Number of samples per known period when no interval is configured.
const SAMPLES_PER_PERIOD: f64 = 64.0;

fn integrator(cfg: &RunConfig, default_dt: f64) -> IntegratorConfig {
    let mut ic = IntegratorConfig {
        rel_tol: cfg.tolerances.rel,
        abs_tol: cfg.tolerances.abs,
        ..IntegratorConfig::default()
    };
    if let Some(h) = cfg.tolerances.max_step {
        ic.max_step = h;
    }
    ic.sample_interval(cfg.sample_interval.unwrap_or(default_dt))
}

fn default_dt(cfg: &RunConfig) -> f64 {
    (cfg.t_end.abs() / 100.0).max(1e-3)
}

pub fn random_state(modes: usize, norm: f64, seed: u64) -> ModeSpectrum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<Complex64> = (0..modes)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let total = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = if total > 0.0 { norm / total } else { 0.0 };
    ModeSpectrum::new(v.into_iter().map(|z| z * scale).collect()).expect("finite amplitudes")
}

fn stationary_of(initial: &Initial, n: usize) -> Result<Option<StationaryState>, CliError> {
    let st = match initial {
        Initial::OneMode { mode, c } => one_mode(n, *mode, c.value())?,
        Initial::FamilyA0 { c, p } => family_a0(c.value(), p.value(), n)?,
        Initial::FamilyOmega0 { c, p } => family_omega0(c.value(), p.value(), n)?,
        Initial::FamilyPm { c, p, branch } => family_pm(c.value(), p.value(), branch_of(*branch), n)?,
        Initial::Blaschke { c, zeros } => {
            let z: Vec<Complex64> = zeros.iter().map(|v| v.value()).collect();
            blaschke_state(c.value(), &z, n)?
        }
        Initial::Decimated { c, p, period } => decimated_state(c.value(), p.value(), *period, n)?,
        _ => return Ok(None),
    };
    Ok(Some(st))
}

fn branch_of(b: BranchName) -> Branch {
    match b {
        BranchName::Plus => Branch::Plus,
        BranchName::Minus => Branch::Minus,
    }
}

/// Mode-space data for the conformal flow.
fn flow_state(initial: &Initial, n: usize) -> Result<ModeSpectrum, CliError> {
    if let Some(st) = stationary_of(initial, n)? {
        return Ok(st.amplitudes);
    }
    match initial {
        Initial::Amplitudes { values } => {
            let v: Vec<Complex64> = values.iter().map(|c| c.value()).collect();
            if v.len() > n {
                return Err(CliError::Domain(format!("{} amplitudes exceed the truncation {n}", v.len())));
            }
            Ok(ModeSpectrum::new(v)?.resized(n))
        }
        Initial::Random { modes, norm, seed } => {
            if *modes > n {
                return Err(CliError::Domain(format!("{modes} random modes exceed the truncation {n}")));
            }
            if !(*norm >= 0.0 && norm.is_finite()) {
                return Err(CliError::Domain("random norm must be nonnegative".into()));
            }
            Ok(random_state(*modes, *norm, *seed).resized(n))
        }
        Initial::Subspace { b, a, p } => Ok(lift(&SubspaceState::new(b.value(), a.value(), p.value())?, n)?),
        other => Err(CliError::Domain(format!("initial data {other:?} is not conformal-flow data"))),
    }
}

pub fn run(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    info!("running {} experiment", cfg.experiment.name());
    match cfg.experiment {
        Experiment::Evolve => evolve(cfg),
        Experiment::Subspace => subspace(cfg),
        Experiment::Stationary => stationary(cfg),
        Experiment::Szego => szego(cfg),
        Experiment::Validate => validate(cfg),
        Experiment::Sums => sums(cfg),
    }
}

fn initial(cfg: &RunConfig) -> Result<&Initial, CliError> {
    cfg.initial
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [initial] table".into()))
}

fn drift_checks(summary: &mut Summary, drifts: &[(&'static str, f64)], criterion: Option<u32>) {
    for (name, d) in drifts {
        summary.metric(&format!("drift_{name}"), d);
        summary.check(Check::at_most(criterion, &format!("drift {name}"), *d, 1e-9));
    }
}

fn evolve(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let state0 = flow_state(initial(cfg)?, cfg.truncation)?;
    let ic = integrator(cfg, default_dt(cfg));
    let traj = integrate(flow_rhs_into, &state0, cfg.t_end, &ic, charges)?;
    let mut summary = Summary::new("evolve");
    drift_checks(&mut summary, &conservation_drift(&traj), Some(2));
    let c0 = charges(&state0);
    summary.metric("Q", c0.q);
    summary.metric("E", c0.e);
    summary.metric("H", c0.h);
    summary.metric("samples", traj.len());
    let table = ChargeTable {
        columns: vec!["Q", "E", "H"],
        rows: traj.times.iter().zip(&traj.charge_log).map(|(t, c)| (*t, vec![c.q, c.e, c.h])).collect(),
    };
    Ok(Artifacts {
        series: Some(Series {
            times: traj.times,
            states: traj.states,
        }),
        charges: Some(table),
        extra: Vec::new(),
        summary,
    })
}

/// Upward crossings of `level` by a sampled curve, refined on the cubic Hermite interpolant.
fn upward_crossings(times: &[f64], y: &[f64], dy: &[f64], level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..times.len() {
        if !(y[i - 1] < level && y[i] >= level) {
            continue;
        }
        let (t0, t1) = (times[i - 1], times[i]);
        let h = t1 - t0;
        let herm = |s: f64| {
            let (s2, s3) = (s * s, s * s * s);
            (2.0 * s3 - 3.0 * s2 + 1.0) * y[i - 1]
                + (s3 - 2.0 * s2 + s) * h * dy[i - 1]
                + (-2.0 * s3 + 3.0 * s2) * y[i]
                + (s3 - s2) * h * dy[i]
                - level
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if herm(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(t0 + 0.5 * (lo + hi) * h);
    }
    out
}

fn subspace(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let (b, a, p) = match initial(cfg)? {
        Initial::Subspace { b, a, p } => (b.value(), a.value(), p.value()),
        other => return Err(CliError::Domain(format!("subspace experiment needs subspace data, got {other:?}"))),
    };
    let s0 = SubspaceState::new(b, a, p)?;
    let osc = oscillation_of(&s0)?;
    let dt = if osc.is_stationary() { default_dt(cfg) } else { osc.period() / SAMPLES_PER_PERIOD };
    let ic = integrator(cfg, dt);
    let traj = evolve_subspace(&s0, cfg.t_end, &ic)?;

    let mut summary = Summary::new("subspace");
    let drifts = conservation_drift(&traj);
    for (name, d) in &drifts {
        summary.metric(&format!("drift_{name}"), d);
    }
    let s_drift = drifts.iter().find(|(k, _)| *k == "S").map_or(0.0, |d| d.1);
    summary.check(Check::at_most(Some(3), "drift S", s_drift, 1e-9));

    let y_err = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| (s.y() - osc.y(*t)).abs() / osc.y(*t).abs().max(1e-300))
        .fold(0.0, f64::max);
    summary.check(Check::at_most(Some(3), "y vs closed form (relative)", y_err, 1e-6));

    // H = Q² − 2S² against the mode-space Hamiltonian, on a window wide enough for the tail
    let rho_max = osc.y_plus / (1.0 + osc.y_plus);
    let wide = if rho_max > 0.0 {
        ((46.0 / -rho_max.ln()).ceil() as usize + 64).clamp(64, 8192)
    } else {
        64
    };
    let ch0 = subspace_charges(&s0)?;
    let h_err = (hamiltonian(&lift(&s0, wide)?) - (ch0.q * ch0.q - 2.0 * ch0.s * ch0.s)).abs() / ch0.h.abs().max(1e-300);
    summary.check(Check::at_most(Some(3), "H = Q^2 - 2S^2", h_err, 1e-9));

    summary.metric("omega", osc.omega);
    summary.metric("period_closed_form", osc.period());
    summary.metric("y_center", osc.center);
    summary.metric("y_amplitude", osc.amplitude);
    summary.metric("y_minus", osc.y_minus);
    summary.metric("y_plus", osc.y_plus);
    summary.metric("cascade_ratio", osc.cascade_ratio());
    summary.metric("Q", ch0.q);
    summary.metric("E", ch0.e);
    summary.metric("S", ch0.s);
    summary.metric("H", ch0.h);
    summary.check(Check::at_most(Some(4), "cascade ratio", osc.cascade_ratio(), 16.0));

    if !osc.is_stationary() {
        let ys: Vec<f64> = traj.states.iter().map(|s| s.y()).collect();
        let dys: Vec<f64> = traj.states.iter().map(y_rate).collect();
        let ups = upward_crossings(&traj.times, &ys, &dys, osc.center);
        if ups.len() >= 2 {
            let measured = (ups[ups.len() - 1] - ups[0]) / (ups.len() - 1) as f64;
            let err = (measured - osc.period()).abs() / osc.period();
            summary.metric("period_measured", measured);
            summary.check(Check::at_most(Some(3), "period vs 2 pi / Omega (relative)", err, 1e-6));
        } else {
            warn!("run too short to measure the period; extend t_end past two periods");
            summary.metric("period_measured", serde_json::Value::Null);
        }
    }

    let mut series = Series::default();
    let mut table = ChargeTable {
        columns: vec!["Q", "E", "H", "S"],
        rows: Vec::new(),
    };
    for ((t, s), c) in traj.times.iter().zip(&traj.states).zip(&traj.charge_log) {
        series.times.push(*t);
        series.states.push(lift(s, cfg.truncation)?);
        table.rows.push((*t, vec![c.q, c.e, c.h, c.s]));
    }
    let yrows = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| vec![*t, s.y(), osc.y(*t)])
        .collect();
    Ok(Artifacts {
        series: Some(series),
        charges: Some(table),
        extra: vec![("y.csv".into(), vec!["t".into(), "y".into(), "y_closed_form".into()], yrows)],
        summary,
    })
}

fn stationary(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let init = initial(cfg)?;
    let st = stationary_of(init, cfg.truncation)?
        .ok_or_else(|| CliError::Domain(format!("initial data {init:?} is not a stationary family")))?;
    let mut summary = Summary::new("stationary");
    let r = residual(&st);
    let allowance = st.tolerance(1e-10);
    summary.metric("lambda", st.lambda);
    summary.metric("omega", st.omega);
    summary.metric("residual", r);
    summary.metric("tail_bound", st.tail);
    let q = charge_q(&st.amplitudes);
    let e = charge_e(&st.amplitudes);
    summary.metric("Q", q);
    summary.metric("E", e);
    summary.metric("H", hamiltonian(&st.amplitudes));
    summary.check(Check::at_most(Some(5), "residual", r, allowance));
    if let Some(z) = st.zeros {
        let err = (st.lambda - q / (z as f64 + 1.0)).abs() / st.lambda.abs().max(1e-300);
        summary.metric("zeros", z);
        summary.check(Check::at_most(Some(5), "lambda = Q/(zeros+1)", err, 1e-8));
    }
    if let Initial::FamilyPm { c, p, branch } = init {
        let k = kappa(p.value().norm())?;
        let (qp, ep) = pm_charges(c.value(), p.value().norm(), branch_of(*branch))?;
        summary.metric("kappa", k);
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1e-300);
        summary.check(Check::at_most(Some(5), "Q = (6/7)(lambda+omega)", rel(q, qp), 1e-10));
        summary.check(Check::at_most(Some(5), "E = 6 omega", rel(e, ep), 1e-10));
    }

    let mut series = Series::default();
    let mut table = ChargeTable {
        columns: vec!["Q", "E", "H"],
        rows: Vec::new(),
    };
    if cfg.t_end != 0.0 {
        let ic = integrator(cfg, default_dt(cfg));
        let traj = integrate(flow_rhs_into, &st.amplitudes, cfg.t_end, &ic, charges)?;
        let mut modulus: f64 = 0.0;
        let mut phase: f64 = 0.0;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            for (x, y) in s.iter().zip(st.amplitudes.iter()) {
                modulus = modulus.max((x.norm() - y.norm()).abs());
            }
            phase = phase.max(s.max_distance(&st.at(*t)));
        }
        summary.metric("modulus_drift", modulus);
        summary.metric("rotation_error", phase);
        summary.check(Check::at_most(None, "modulus drift", modulus, 1e-8));
        for ((t, s), c) in traj.times.iter().zip(traj.states).zip(&traj.charge_log) {
            series.times.push(*t);
            series.states.push(s);
            table.rows.push((*t, vec![c.q, c.e, c.h]));
        }
    } else {
        let c = charges(&st.amplitudes);
        series.times.push(0.0);
        series.states.push(st.amplitudes.clone());
        table.rows.push((0.0, vec![c.q, c.e, c.h]));
    }
    Ok(Artifacts {
        series: Some(series),
        charges: Some(table),
        extra: Vec::new(),
        summary,
    })
}

fn szego(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let init = initial(cfg)?;
    let n = cfg.truncation;
    let pole = match init {
        Initial::SzegoPole { a, b, p } => Some((*a, *b, *p)),
        Initial::TwoMode { epsilon } => Some((1.0, 2.0 * epsilon, 0.0)),
        _ => None,
    };
    let state0 = match pole {
        Some((a, b, p)) => SzegoPoleState::real(a, b, p)?.lift(n),
        None => flow_state(init, n)?,
    };
    let ic = integrator(cfg, default_dt(cfg));
    let traj = evolve_szego(&state0, cfg.t_end, &ic)?;
    let mut summary = Summary::new("szego");
    drift_checks(&mut summary, &conservation_drift(&traj), Some(6));
    if let Some((a, b, p)) = pole {
        let mut err: f64 = 0.0;
        let mut p_max: f64 = 0.0;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let exact = single_pole_solution(a, b, p, *t)?;
            err = err.max(s.max_distance(&exact.lift(n)));
            p_max = p_max.max(exact.p.norm());
        }
        let tail = p_max.powi(n as i32);
        if tail > 1e-8 {
            warn!("|p| reaches {p_max:.4}; truncation {n} leaves a tail of {tail:.1e}");
        }
        summary.metric("omega", single_pole_omega(a, b, p)?);
        summary.metric("sup_p_sampled", p_max);
        summary.metric("closed_form_error", err);
        summary.check(Check::at_most(Some(6), "single pole vs closed form", err, 1e-7));
    }
    let c0 = traj.charge_log[0];
    summary.metric("M", c0.m);
    summary.metric("P", c0.p);
    summary.metric("H", c0.h);
    let table = ChargeTable {
        columns: vec!["M", "P", "H"],
        rows: traj.times.iter().zip(&traj.charge_log).map(|(t, c)| (*t, vec![c.m, c.p, c.h])).collect(),
    };
    Ok(Artifacts {
        series: Some(Series {
            times: traj.times,
            states: traj.states,
        }),
        charges: Some(table),
        extra: Vec::new(),
        summary,
    })
}

fn validate(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let alpha0 = match &cfg.initial {
        Some(init) => flow_state(init, cfg.truncation)?,
        None => ModeSpectrum::from_real(&[1.0, 1.0]).resized(cfg.truncation),
    };
    let vp = &cfg.validate;
    let ic = integrator(cfg, 1.0);
    let mut summary = Summary::new("validate");
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for &eps in &vp.epsilons {
        let r = validate_averaging(&alpha0, eps, vp.horizon_factor, cfg.truncation, vp.samples, &ic)?;
        info!("eps = {eps}: error {:.3e}", r.error);
        rows.push(vec![eps, r.error, r.scaled_error, r.error / eps.powi(3)]);
        errors.push((eps, r.error));
    }
    summary.metric("errors", &rows);
    for w in errors.windows(2) {
        let (e1, r1) = w[0];
        let (e2, r2) = w[1];
        let ratio = r2 / r1;
        summary.metric(&format!("ratio_{e2}_over_{e1}"), ratio);
        summary.metric(&format!("order_{e2}_over_{e1}"), ratio.ln() / (e2 / e1).ln());
        if (e2 / e1 - 0.5).abs() < 1e-12 {
            summary.check(Check::within(Some(7), &format!("err({e2})/err({e1})"), ratio, Some(0.15), Some(0.4)));
        }
    }

    // time map: the averaged system at τ equals the flow at −(3/2)τ
    let tau_end = 2.0;
    let steps = 8.0;
    let slow = evolve_averaged(&alpha0, tau_end, &ic.clone().sample_interval(tau_end / steps))?;
    let flow = integrate(flow_rhs_into, &alpha0, -1.5 * tau_end, &ic.clone().sample_interval(1.5 * tau_end / steps), |_| ())?;
    let map_err = if slow.len() == flow.states.len() {
        slow.iter().zip(&flow.states).map(|((_, a), b)| a.max_distance(b)).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    summary.metric("time_map_error", map_err);
    summary.check(Check::at_most(Some(7), "time map t_flow = -(3/2) tau", map_err, 1e-8));
    Ok(Artifacts {
        series: None,
        charges: None,
        extra: vec![(
            "scaling.csv".into(),
            vec!["epsilon".into(), "error".into(), "error_over_eps2".into(), "error_over_eps3".into()],
            rows,
        )],
        summary,
    })
}

fn sums(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let sp = &cfg.sums;
    let mut summary = Summary::new("sums");

    let mut tensor_err: f64 = 0.0;
    let mut selection = true;
    for j in 0..=12 {
        for k in 0..=12 {
            for l in 0..=12 {
                for n in 0..=12 {
                    let s = interaction_coefficient(j, k, l, n);
                    tensor_err = tensor_err.max((s as f64 - quadrature_coefficient(j, k, l, n)).abs());
                    if j + k == l + n {
                        selection &= s == (j.min(k).min(l).min(n) + 1) as u64;
                    }
                }
                selection &= interaction_coefficient(j, k, l, j + k + l + 2) == 0;
            }
        }
    }
    summary.metric("tensor_error", tensor_err);
    summary.check(Check::at_most(Some(1), "closed-form S vs quadrature", tensor_err, 1e-8));
    summary.check(Check::flag(Some(1), "resonant min+1 and n=j+k+l+2 selection", selection));

    let mut rng = ChaCha8Rng::seed_from_u64(sp.seed);
    let mut worst: f64 = 0.0;
    let cascade_states = 1000;
    for _ in 0..cascade_states {
        let s = SubspaceState::new(
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            Complex64::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..2.0 * PI)),
        )?;
        worst = worst.max(oscillation_of(&s)?.cascade_ratio());
    }
    summary.metric("cascade_states", cascade_states);
    summary.check(Check::at_most(Some(4), "max cascade ratio", worst, 16.0));

    let mut contour: f64 = 0.0;
    for _ in 0..sp.contour_states {
        let norm = rng.gen_range(0.2..1.0);
        let s = random_state(8, norm, rng.gen());
        contour = contour.max(rhs_via_contour(&s, 64, 0.8)?.max_distance(&flow_rhs_reference(&s)));
    }
    summary.check(Check::at_most(Some(8), "contour vs direct RHS", contour, 1e-9));

    let mut master: f64 = 0.0;
    for i in 1..=9 {
        for j in 1..=9 {
            let (r, th) = (Complex64::new(i as f64 / 10.0, 0.0), Complex64::new(j as f64 / 10.0, 0.0));
            for n in 0..=10 {
                let x = master_sum(r, th, n)?;
                let y = master_sum_brute(r, th, n)?;
                master = master.max((x - y).norm() / y.norm().max(1.0));
            }
        }
    }
    summary.check(Check::at_most(Some(8), "master sum vs brute force", master, 1e-11));

    let mut appendix: f64 = 0.0;
    for i in 1..=9 {
        let rho = i as f64 / 10.0;
        for n in 0..=10 {
            let x = appendix_sums(n, rho)?;
            let y = appendix_sums_brute(n, rho)?;
            for (u, v) in x.iter().zip(&y) {
                appendix = appendix.max((u - v).abs() / v.abs().max(1.0));
            }
        }
    }
    summary.check(Check::at_most(Some(8), "appendix sums vs brute force", appendix, 1e-11));

    let divisible = [Ratio::new(1, 3), Ratio::new(2, 5), Ratio::new(7, 9)]
        .into_iter()
        .all(|r| appendix_divisibility_exact(r, sp.n_max).iter().all(|b| *b));
    summary.metric("divisibility_n_max", sp.n_max);
    summary.check(Check::flag(Some(8), "(n+1)-divisibility", divisible));
    Ok(Artifacts {
        series: None,
        charges: None,
        extra: Vec::new(),
        summary,
    })
}
