//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use mhd_couette::audit::{freq_ratio_reports, keymnu_report_nu_range, lossy_elliptic_report, weights_check_report};
use mhd_couette::config::RunConfig;
use mhd_couette::diagnostics::{coercivity_check, evaluate, CoercivityCheck};
use mhd_couette::grid::{mode_table, Grid, SpectralField, DEFAULT_DEALIAS, DEFAULT_LY};
use mhd_couette::harness::run_simulation;
use mhd_couette::linear::{integrate_mode, verify_prop_keylin_tol, ModeState};
use mhd_couette::scan::{decay_scan, growth_scan};
use mhd_couette::solver::{poisson_bracket, poisson_bracket_moving, MhdState, Solver};
use mhd_couette::symbols::jap;
use mhd_couette::{Frequency, Params};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Coercivity checks gathered from every run made here, for criterion 10.
static CHECKS: Mutex<Vec<CoercivityCheck>> = Mutex::new(Vec::new());

fn keep_checks(c: &[CoercivityCheck]) {
    CHECKS.lock().unwrap().extend_from_slice(c);
}

fn random_field(g: Grid, rng: &mut ChaCha8Rng, kmax: i64, nmax: i64, amp: f64) -> SpectralField {
    let mut f = SpectralField::zeros(g);
    for (k, n) in g.retained() {
        if k < 0 || (k == 0 && n <= 0) || k > kmax || n.abs() > nmax {
            continue;
        }
        let v = Complex64::new(rng.random_range(-amp..amp), rng.random_range(-amp..amp));
        f.set_real_mode(k, n, v).unwrap();
    }
    f
}

fn criterion_1() -> Outcome {
    let p = Params::new(0.0, 0.0, 0.0);
    let init = ModeState::new(Frequency::new(1, 0.0), 0.0, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    let traj = integrate_mode(init, &p, 50.0, 1e-10).unwrap();
    let j = traj.last().state.j_hat;
    let err = (j - Complex64::new(2501.0, 0.0)).norm() / 2501.0;
    outcome(err < 1e-6, format!("J(50) = {:.9}, relative error {err:.2e}", j.re))
}

fn criterion_2() -> Outcome {
    let mut cases = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for beta in [0.6, 1.0, 2.0] {
        for nu in [1e-3, 1e-5] {
            for _ in 0..50 {
                let k = rng.random_range(1..=8i64) * if rng.random_bool(0.5) { 1 } else { -1 };
                let eta = rng.random_range(-64.0..64.0);
                let o = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let j = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                cases.push((beta, nu, k, eta, o, j));
            }
        }
    }
    let results: Vec<(bool, f64, String)> = cases
        .par_iter()
        .map(|&(beta, nu, k, eta, o, j)| {
            let p = Params::new(nu, nu, beta);
            if p.validate(false).is_err() {
                return (false, f64::NAN, format!("parameters out of range: beta={beta} nu={nu}"));
            }
            let init = ModeState::new(Frequency::new(k, eta), 0.0, o, j);
            let res = integrate_mode(init, &p, 5.0 / p.nu_third(), 1e-10)
                .and_then(|traj| verify_prop_keylin_tol(&traj, &p, 1e-3));
            match res {
                Ok(r) => (true, r.energy_ratio_max, String::new()),
                Err(e) => (false, f64::NAN, format!("beta={beta} nu={nu} k={k} eta={eta}: {e}")),
            }
        })
        .collect();
    let failures: Vec<&String> = results.iter().filter(|r| !r.0).map(|r| &r.2).collect();
    let worst = results.iter().map(|r| r.1).filter(|v| v.is_finite()).fold(0.0, f64::max);
    match failures.first() {
        None => outcome(true, format!("{} modes, worst energy ratio {worst:.6}", results.len())),
        Some(first) => outcome(false, format!("{} of {} modes failed; first: {first}", failures.len(), results.len())),
    }
}

fn criterion_3() -> Outcome {
    let n = 100_000;
    let mut reports = vec![keymnu_report_nu_range(n, 3)];
    reports.extend(freq_ratio_reports(n, 3));
    reports.push(lossy_elliptic_report(n, 3));
    let mut parts = Vec::new();
    let mut pass = true;
    for r in &reports {
        // the sqrt(2) variant is a diagnostic, not one of the required inequalities
        let required = r.audit_name != "freq_ratio_pkp_sqrt2";
        if required && !r.passed() {
            pass = false;
        }
        parts.push(format!(
            "{}: {} violations (min slack {:.2e} at k={}, eta={:.4}, t={:.4})",
            r.audit_name, r.violations, r.min_slack, r.argmin_k, r.argmin_eta, r.argmin_t
        ));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_4() -> Outcome {
    let r = weights_check_report(1000, 4, 1e-8);
    let worst = r.detail.clone();
    outcome(
        r.passed(),
        format!("{} tuples, min slack {:.3e} (1 - err/1e-8) {worst}", r.samples, r.min_slack),
    )
}

fn criterion_5() -> Outcome {
    let base = RunConfig::new(Params::new(1e-4, 1e-4, 2.0));
    match growth_scan(&[1e-4, 1e-5, 1e-6], &base) {
        Ok(res) => {
            let f = res.fit.unwrap();
            outcome(
                (f.slope + 1.0 / 3.0).abs() <= 0.1,
                format!(
                    "A = {:.3?}, slope {:.4} (CI {:.4} .. {:.4})",
                    res.responses, f.slope, f.ci_low, f.ci_high
                ),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn criterion_6() -> Outcome {
    let base = RunConfig::new(Params::new(1e-3, 1e-3, 2.0));
    let nus = [1e-3, 1e-4, 1e-5];
    match decay_scan(&nus, &base) {
        Ok(res) => {
            let f = res.fit.unwrap();
            let floor_ok = nus.iter().zip(&res.responses).all(|(nu, r)| *r >= 0.01 * nu.cbrt());
            outcome(
                (f.slope - 1.0 / 3.0).abs() <= 0.1 && floor_ok,
                format!(
                    "rates {:.4?}, slope {:.4} (CI {:.4} .. {:.4}), all rates >= nu^(1/3)/100: {floor_ok}",
                    res.responses, f.slope, f.ci_low, f.ci_high
                ),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn damping_constant(n: usize) -> Result<f64, String> {
    let mut c = RunConfig::new(Params::new(1e-3, 1e-3, 1.0));
    c.grid = Grid::square(n).map_err(|e| e.to_string())?;
    c.eps = 1e-6;
    c.t_end = Some(5.0 / c.params.nu_third());
    c.ledger_stride = 2;
    let out = run_simulation(&c).map_err(|e| e.to_string())?;
    keep_checks(&out.coercivity);
    Ok(out
        .ledger
        .rows
        .iter()
        .map(|r| jap(r.t) * r.u2_neq_l2.hypot(r.b2_neq_l2) / c.eps)
        .fold(0.0, f64::max))
}

fn criterion_7() -> Outcome {
    match (damping_constant(64), damping_constant(128)) {
        (Ok(a), Ok(b)) => {
            let change = (a - b).abs() / b;
            outcome(
                b.is_finite() && change < 0.05,
                format!("C_fit = {a:.6e} at 64^2, {b:.6e} at 128^2, change {:.3}%", 100.0 * change),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, e),
    }
}

fn criterion_8() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    // (a) cancellation identity
    let g = Grid::new(64, 64, DEFAULT_LY, DEFAULT_DEALIAS).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let f = random_field(g, &mut rng, 20, 20, 1.0);
        let h = random_field(g, &mut rng, 20, 20, 1.0);
        let t = rng.random_range(0.0..10.0);
        let a = poisson_bracket_moving(&f, &h, t);
        let b = poisson_bracket(&f, &h);
        let scale = b.as_slice().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let diff = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(diff / scale);
    }
    let ok = worst < 1e-12;
    pass &= ok;
    parts.push(format!("(a) cancellation max rel diff {worst:.2e}"));

    // (b) fourth-order self-convergence on a smooth nonlinear run
    let g = Grid::new(32, 32, 2.0 * PI, DEFAULT_DEALIAS).unwrap();
    let p = Params::new(1e-2, 1e-2, 1.0);
    let mut st = MhdState::zeros(g, 0.0);
    st.omega = random_field(g, &mut rng, 3, 3, 0.3);
    st.j = random_field(g, &mut rng, 3, 3, 0.3);
    st.omega.set(0, 0, Complex64::new(0.0, 0.0)).unwrap();
    st.j.set(0, 0, Complex64::new(0.0, 0.0)).unwrap();
    let run = |dt: f64| {
        let mut solver = Solver::new(g, p);
        let mut s = st.clone();
        let steps = (1.0 / dt).round() as usize;
        for _ in 0..steps {
            s = solver.step(&s, dt).unwrap();
        }
        s
    };
    let dist = |a: &MhdState, b: &MhdState| {
        a.omega
            .as_slice()
            .iter()
            .zip(b.omega.as_slice())
            .chain(a.j.as_slice().iter().zip(b.j.as_slice()))
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let (s1, s2, s3) = (run(0.04), run(0.02), run(0.01));
    let ratio = dist(&s1, &s2) / dist(&s2, &s3);
    let ok = (ratio - 16.0).abs() <= 3.0;
    pass &= ok;
    parts.push(format!("(b) dt-halving error ratio {ratio:.2}"));

    // (c) enstrophy drift of the truncated Euler limit
    let g = Grid::square(256).unwrap();
    let p = Params::new(0.0, 0.0, 0.0);
    let mut c = RunConfig::new(p);
    c.grid = g;
    c.allow_out_of_theory = true;
    c.t_end = Some(10.0);
    c.ledger_stride = 1000;
    let mut st = MhdState::zeros(g, 0.0);
    // order-one vorticity that cascades to the band edge within the window
    st.omega = random_field(g, &mut rng, 4, 32, 0.02);
    st.omega.set(0, 0, Complex64::new(0.0, 0.0)).unwrap();
    let z0 = st.omega.l2_norm_sqr();
    // H^N grows by orders of magnitude through the cascade; this run checks
    // conservation only, so no blowup ceiling
    c.eps = st.hn_norm(p.n);
    c.blowup_factor = f64::INFINITY;
    let out = mhd_couette::harness::run_from_state(&c, st).unwrap();
    let drift = (out.final_state.omega.l2_norm_sqr() - z0).abs() / z0;
    let ok = drift < 1e-6 && (out.final_state.time - 10.0).abs() < 1e-9;
    pass &= ok;
    parts.push(format!(
        "(c) enstrophy drift {drift:.2e} over {} steps to t={}",
        out.steps, out.final_state.time
    ));

    // (d) small-amplitude nonlinear run against per-mode trajectories
    let g = Grid::new(32, 32, DEFAULT_LY, DEFAULT_DEALIAS).unwrap();
    let p = Params::new(1e-3, 1e-3, 1.0);
    let mut st = MhdState::zeros(g, 0.0);
    // decayed modes sit many orders below the rest, so quadratic leakage is
    // only negligible for them at a truly tiny amplitude
    let scale = 1e-30;
    st.omega = random_field(g, &mut rng, 3, 10, scale);
    st.j = random_field(g, &mut rng, 3, 10, scale);
    st.omega.set(0, 0, Complex64::new(0.0, 0.0)).unwrap();
    st.j.set(0, 0, Complex64::new(0.0, 0.0)).unwrap();
    let mut solver = Solver::new(g, p);
    let mut s = st.clone();
    let dt = 0.01;
    for _ in 0..2000 {
        s = solver.step(&s, dt).unwrap();
    }
    let t_end = s.time;
    let table = mode_table(&g);
    let errs: Vec<f64> = table
        .par_iter()
        .filter(|m| st.omega.as_slice()[m.idx] != Complex64::new(0.0, 0.0) || st.j.as_slice()[m.idx] != Complex64::new(0.0, 0.0))
        .map(|m| {
            let init = ModeState::new(m.frequency(), 0.0, st.omega.as_slice()[m.idx], st.j.as_slice()[m.idx]);
            let r = integrate_mode(init, &p, t_end, 1e-12).unwrap().last().state;
            let want = r.omega_hat.norm().hypot(r.j_hat.norm());
            let d = (s.omega.as_slice()[m.idx] - r.omega_hat).norm().hypot((s.j.as_slice()[m.idx] - r.j_hat).norm());
            (want, d)
        })
        .map(|(want, d)| if want > 0.0 { d / want } else { d })
        .collect();
    let worst = errs.iter().copied().fold(0.0, f64::max);
    let ok = worst < 1e-6;
    pass &= ok;
    parts.push(format!("(d) {} modes, max relative deviation at t={t_end:.0}: {worst:.2e}", errs.len()));
    outcome(pass, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let nu: f64 = 1e-3;
    let mut c = RunConfig::new(Params::new(nu, nu, 1.0));
    c.grid = Grid::square(128).unwrap();
    let mut verdicts = Vec::new();
    for eps in [0.1 * nu.powf(2.0 / 3.0), 10.0] {
        c.eps = eps;
        match run_simulation(&c) {
            Ok(out) => {
                keep_checks(&out.coercivity);
                verdicts.push((eps, out.verdict));
            }
            Err(e) => return outcome(false, format!("eps={eps}: {e}")),
        }
    }
    let pass = verdicts[0].1.is_stable() && !verdicts[1].1.is_stable();
    outcome(
        pass,
        format!(
            "eps={:.1e}: {}; eps={}: {}",
            verdicts[0].0, verdicts[0].1, verdicts[1].0, verdicts[1].1
        ),
    )
}

fn criterion_10() -> Outcome {
    // random states at random times on top of every ledger row recorded above
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let g = Grid::new(32, 32, DEFAULT_LY, DEFAULT_DEALIAS).unwrap();
    let mut checks = CHECKS.lock().unwrap().clone();
    for _ in 0..100 {
        let beta = rng.random_range(0.55..4.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let p = Params::new(1e-3, 1e-3, beta);
        let mut st = MhdState::zeros(g, rng.random_range(0.0..200.0));
        st.omega = random_field(g, &mut rng, 10, 10, 1.0);
        st.j = random_field(g, &mut rng, 10, 10, 1.0);
        checks.push(coercivity_check(&evaluate(&st, &p), &p));
    }
    let bad = checks.iter().filter(|c| !c.holds).count();
    let tightest = checks
        .iter()
        .filter(|c| c.upper > c.lower)
        .map(|c| ((c.e_sym - c.lower) / (c.upper - c.lower)).min((c.upper - c.e_sym) / (c.upper - c.lower)))
        .fold(f64::INFINITY, f64::min);
    outcome(
        bad == 0,
        format!("{} snapshots, {bad} outside the band, closest relative distance to an edge {tightest:.3e}", checks.len()),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("zero-coupling exact solution", criterion_1),
        ("monotone symmetric energy", criterion_2),
        ("inequality audits", criterion_3),
        ("weight closed forms", criterion_4),
        ("transient-growth scaling", criterion_5),
        ("enhanced-dissipation scaling", criterion_6),
        ("inviscid damping", criterion_7),
        ("nonlinear solver correctness", criterion_8),
        ("threshold behaviour", criterion_9),
        ("coercivity", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let o = f();
        let status = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {status} [{name}] ({:.1}s) {}",
            i + 1,
            clock.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
