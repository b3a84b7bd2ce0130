//! End-to-end acceptance checks. Runs every criterion, prints one
//! `criterion N: PASS|FAIL` line each, and exits nonzero if any failed.
//!
//! Companion checks that share a root cause with a criterion print
//! `companion <name>: PASS|FAIL` and count toward the exit status too.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::DMatrix;
use slse_bench::config::{ExperimentConfig, SolverKind};
use slse_bench::experiment::{estimate_pe, pe_limit, run_experiment, TrialSummary};
use slse_bench::output::render_csv;
use slse_core::dense::{fwht_normalized, matvec, norm2, qr_thin, sub_vec, Matrix};
use slse_core::model::{gen_model, ols_solve_xy};
use slse_core::precond::build_hessian_sketch;
use slse_core::schedule::{
    a1_lower_bound, a_lower_bound, a_lower_bound_real, doubling_sizes, flop_budget, ARule, RatioOrientation,
};
use slse_core::sketch::{build_srht_plan, countsketch_apply, embedding_epsilon, srht_apply, SketchKind};
use slse_core::solver::{mihs_full_run, mihs_step, slse_frs_run, MomentumParams, SolverConfig, SolverState, StopRule};
use slse_core::Rng;

/// Outcome of one check: pass flag and a one-line detail.
type Check = (bool, String);

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn orthonormal(n: usize, d: usize, rng: &mut Rng) -> Matrix {
    let g = Matrix::from_fn(n, d, |_, _| rng.gaussian());
    qr_thin(&g).unwrap().0
}

fn per_solver(trials: &[TrialSummary], s: SolverKind) -> Vec<&TrialSummary> {
    trials.iter().filter(|t| t.solver == s).collect()
}

fn ols_precision() -> Check {
    let cfg = ExperimentConfig::default();
    let clock = Instant::now();
    let out = run_experiment(&cfg).unwrap();
    let secs = clock.elapsed().as_secs_f64();
    let slse = per_solver(&out.summary.trials, SolverKind::SlseFrs);
    let ok = slse.iter().filter(|t| t.final_pred_error <= 3.0 * t.ols_error).count();
    let worst = slse.iter().map(|t| t.final_pred_error / t.ols_error).fold(0.0, f64::max);
    (
        ok >= 9 && secs <= 60.0,
        format!("{ok}/10 trials with final error <= 3x OLS (worst ratio {worst:.3}), {secs:.1} s"),
    )
}

fn efficiency_ordering() -> Check {
    let out = run_experiment(&ExperimentConfig::default()).unwrap();
    let t = &out.summary.trials;
    let (s, m, p) = (
        per_solver(t, SolverKind::SlseFrs),
        per_solver(t, SolverKind::MIhs),
        per_solver(t, SolverKind::Pcg),
    );
    let mut ordered = 0;
    let mut ratio_ok = 0;
    let mut ratios = Vec::new();
    for i in 0..s.len() {
        let f = |x: &TrialSummary| x.flops_to_target.map_or(f64::INFINITY, |v| v as f64);
        let (fs, fm, fp) = (f(s[i]), f(m[i]), f(p[i]));
        if fs < fm && fs < fp {
            ordered += 1;
        }
        let r = fm / fs;
        if r >= 1.3 {
            ratio_ok += 1;
        }
        ratios.push(r);
    }
    (
        ordered == s.len() && ratio_ok >= 8,
        format!(
            "ordering held in {ordered}/{} trials, M-IHS/SLSE-FRS flop ratio >= 1.3 in {ratio_ok}/10 (ratios {:.2?})",
            s.len(),
            ratios
        ),
    )
}

fn pe_limit_check() -> Check {
    let (n, d, m) = (1 << 12, 1 << 6, 1 << 11);
    let clock = Instant::now();
    let pe = estimate_pe(n, d, m, SketchKind::Srht, 200, 0).unwrap();
    let secs = clock.elapsed().as_secs_f64();
    let limit = pe_limit(n, d, m);
    let rel = (pe / limit - 1.0).abs();
    (
        rel <= 0.15 && secs <= 120.0,
        format!("estimate {pe:.4} vs limit {limit:.4} (rel. dev. {rel:.3}), {secs:.1} s"),
    )
}

fn subproblem_contraction() -> Check {
    let (n, d, m) = (1 << 13, 1 << 5, 1 << 10);
    let params = MomentumParams::theorem();
    let mut ratios = Vec::new();
    let mut diverged = 0;
    for s in 0..20 {
        let rng = Rng::new(4000 + s);
        let model = gen_model(n, d, 1e4, 1e-8, &rng.fork("model")).unwrap();
        let (a, b) = srht_apply(m, &model.x, &model.y, &rng.fork("subproblem")).unwrap();
        let h = build_hessian_sketch(&model.x, 6 * d, &rng).unwrap();
        let exact = ols_solve_xy(&a, &b).unwrap();
        let err = |beta: &[f64]| norm2(&matvec(&a, &sub_vec(beta, &exact)).unwrap());
        let mut st = SolverState::new(vec![0.0; d]);
        let mut prev = err(&st.beta);
        for t in 0..25 {
            if mihs_step(&mut st, &h, &a, &b, params).is_err() {
                diverged += 1;
                ratios.extend(std::iter::repeat_n(f64::INFINITY, 25 - t.max(5)));
                break;
            }
            let e = err(&st.beta);
            if t >= 5 {
                ratios.push(e / prev);
            }
            prev = e;
        }
    }
    let med = median(ratios);
    (
        med <= 0.45,
        format!("median per-step ratio {med:.4} over 20 seeds ({diverged} diverged)"),
    )
}

fn sylvester(n: usize) -> Vec<Vec<f64>> {
    let mut h = vec![vec![1.0]];
    while h.len() < n {
        let k = h.len();
        let mut next = vec![vec![0.0; 2 * k]; 2 * k];
        for i in 0..k {
            for j in 0..k {
                next[i][j] = h[i][j];
                next[i][j + k] = h[i][j];
                next[i + k][j] = h[i][j];
                next[i + k][j + k] = -h[i][j];
            }
        }
        h = next;
    }
    h
}

fn fwht_oracle() -> Check {
    let mut rng = Rng::new(55);
    let mut worst = 0.0f64;
    for k in 0..=10 {
        let n = 1usize << k;
        let h = sylvester(n);
        let scale = 1.0 / (n as f64).sqrt();
        for _ in 0..5 {
            let x: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
            let want: Vec<f64> = h.iter().map(|row| scale * row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()).collect();
            let got = fwht_normalized(&x).unwrap();
            worst = worst.max(norm2(&sub_vec(&got, &want)) / norm2(&want));
        }
    }
    let mut worst_norm = 0.0f64;
    for _ in 0..10_000 {
        let n = 1usize << rng.below(11);
        let x: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
        let y = fwht_normalized(&x).unwrap();
        worst_norm = worst_norm.max((norm2(&y) / norm2(&x) - 1.0).abs());
    }
    (
        worst <= 1e-12 && worst_norm <= 1e-12,
        format!("max relative error {worst:.2e} over lengths 1..=1024, max norm deviation {worst_norm:.2e} over 10^4 vectors"),
    )
}

fn flop_exactness() -> Check {
    let n = 1 << 12;
    let mut mismatches = Vec::new();
    for &d in &[4usize, 8, 16] {
        for &m in &[128usize, 256, 512] {
            let rng = Rng::new((d * 1000 + m) as u64);
            let model = gen_model(n, d, 10.0, 1e-8, &rng.fork("model")).unwrap();
            let h = build_hessian_sketch(&model.x, 6 * d, &rng).unwrap();
            let sizes = vec![m, 2 * m];
            let a = vec![2, 3];
            let plan = build_srht_plan(n, &sizes, &rng.fork("plan")).unwrap();
            let cfg = SolverConfig {
                a_rule: ARule::List(a.clone()),
                t_max: 10,
                stop: StopRule::Fixed,
                ..SolverConfig::practical(d, 6 * d)
            };
            let out = slse_frs_run(&model, &plan, &h, &cfg).unwrap();
            let want = flop_budget(n, d, &sizes, &a, 5).total();
            let got = out.records.last().unwrap().cum_flops;
            if got != want {
                mismatches.push(format!("(d={d}, m={m}): {got} != {want}"));
            }
        }
    }
    (
        mismatches.is_empty(),
        if mismatches.is_empty() {
            "counters equal closed-form budgets on all 9 (d, m) configurations".into()
        } else {
            mismatches.join("; ")
        },
    )
}

fn schedule_bounds() -> Check {
    let g = RatioOrientation::Growing;
    let mut notes = Vec::new();
    let hand = [
        ("equal sizes, omega 1/2", a_lower_bound(2, &[1 << 20, 1 << 20], 1, 0.5, g).unwrap(), 2),
        ("ratio sqrt2, omega 2^-4", a_lower_bound(2, &[1 << 20, 1 << 21], 1, 1.0 / 16.0, g).unwrap(), 4),
        ("a1 (1, 1)", a1_lower_bound(1.0, 1.0), 1),
        ("a1 (27, 1)", a1_lower_bound(27.0, 1.0), 3),
        ("a1 (2.4, 2^-4)", a1_lower_bound(2.4, 1.0 / 16.0), 4),
    ];
    let hand_ok = hand.iter().all(|(_, got, want)| got == want);
    if !hand_ok {
        notes.push(format!("hand values {:?}", hand));
    }
    let sweep = [1.0 / 16.0, 1.0 / 8.0, 0.25, 0.5, 1.0];
    let mut mono_ok = true;
    for dexp in 0..=6 {
        let d = 1usize << dexp;
        for k in 1..=8 {
            let m1 = (8 * d).next_power_of_two();
            let np = m1 << k;
            let sizes = doubling_sizes(np, d, 8).unwrap();
            assert_eq!(sizes.len(), k);
            for &w in &sweep {
                let a: Vec<usize> = (2..=k).map(|i| a_lower_bound(i, &sizes, d, w, g).unwrap()).collect();
                if a.windows(2).any(|p| p[0] > p[1]) {
                    mono_ok = false;
                    notes.push(format!("d={d} K={k} omega={w}: {a:?}"));
                }
            }
        }
    }
    let sizes = doubling_sizes(1 << 14, 1 << 6, 8).unwrap();
    let real: Vec<f64> = sweep.iter().map(|&w| a_lower_bound_real(2, &sizes, 1 << 6, w, g).unwrap()).collect();
    let ceiled: Vec<usize> = sweep.iter().map(|&w| a_lower_bound(2, &sizes, 1 << 6, w, g).unwrap()).collect();
    let sweep_ok = real.windows(2).all(|p| p[0] > p[1])
        && ceiled.windows(2).all(|p| p[0] >= p[1])
        && (3.0..=4.0).contains(&real[0])
        && (3..=4).contains(&ceiled[0]);
    (
        hand_ok && mono_ok && sweep_ok,
        format!(
            "hand values {}, monotone for K <= 8: {mono_ok}, sweep bounds {:.3?} -> {ceiled:?}{}",
            if hand_ok { "ok" } else { "wrong" },
            real,
            if notes.is_empty() { String::new() } else { format!(" [{}]", notes.join("; ")) }
        ),
    )
}

fn embedding_quality() -> Check {
    let (n, d) = (1 << 12, 16);
    let zeros = vec![0.0; n];
    let (mut es, mut ec) = (Vec::new(), Vec::new());
    for s in 0..50 {
        let mut rng = Rng::new(s);
        let u = orthonormal(n, d, &mut rng);
        let (su, _) = srht_apply(6 * d, &u, &zeros, &rng.fork("srht")).unwrap();
        let (cu, _) = countsketch_apply(6 * d, &u, &zeros, &rng.fork("countsketch")).unwrap();
        es.push(embedding_epsilon(&u, &su).unwrap());
        ec.push(embedding_epsilon(&u, &cu).unwrap());
    }
    let (ms, mc) = (median(es), median(ec));
    (
        ms <= 0.5 && mc >= ms,
        format!("median epsilon at m = 6d: srht {ms:.4} (need <= 0.5), countsketch {mc:.4} (need >= srht)"),
    )
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let paths = [dir.path().join("first.csv"), dir.path().join("second.csv")];
    let mut bytes = Vec::new();
    for p in &paths {
        let args = ["slse-bench", "run", "--no-wall-clock", "--out-csv", p.to_str().unwrap()];
        let code = slse_bench::cli::main_with(args, &mut std::io::sink(), &mut std::io::stderr());
        assert_eq!(code, 0);
        bytes.push(std::fs::read(p).unwrap());
    }
    let cfg = ExperimentConfig {
        wall_clock: false,
        ..Default::default()
    };
    let again = render_csv(&run_experiment(&cfg).unwrap().records).unwrap();
    (
        bytes[0] == bytes[1] && bytes[0] == again,
        format!("{} bytes, two CLI runs and one library run identical: {}", bytes[0].len(), bytes[0] == bytes[1] && bytes[0] == again),
    )
}

fn preconditioned_spectrum() -> Check {
    let (n, d) = (1 << 10, 8);
    let mut eps = Vec::new();
    for s in 0..50 {
        let mut rng = Rng::new(900 + s);
        let x = Matrix::from_fn(n, d, |_, _| rng.gaussian());
        let h = build_hessian_sketch(&x, 6 * d, &rng).unwrap();
        let r = DMatrix::from_column_slice(d, d, h.r_factor().as_slice());
        let rinv = r.try_inverse().unwrap();
        let xa = DMatrix::from_column_slice(n, d, x.as_slice());
        let m = rinv.transpose() * xa.transpose() * &xa * &rinv;
        eps.push(m.symmetric_eigen().eigenvalues.iter().map(|l| (l - 1.0).abs()).fold(0.0, f64::max));
    }
    let med = median(eps);
    (med <= 0.5, format!("median eigenvalue spread of the preconditioned Gram at r = 6d: {med:.3} (need <= 0.5)"))
}

fn stage_two_contraction() -> Check {
    let (n, d) = (1 << 13, 1 << 5);
    let limit = (2.0f64 / 3.0).ln();
    let mut ok = 0;
    let mut slopes = Vec::new();
    for s in 0..20 {
        let rng = Rng::new(7000 + s);
        let model = gen_model(n, d, 1e4, 0.0, &rng.fork("model")).unwrap();
        let h = build_hessian_sketch(&model.x, 6 * d, &rng).unwrap();
        let cfg = SolverConfig {
            params: MomentumParams::theorem(),
            a_rule: ARule::List(Vec::new()),
            t_max: 30,
            stop: StopRule::Fixed,
            reset_momentum: true,
        };
        let Ok(out) = mihs_full_run(&model, &h, &cfg) else {
            slopes.push(f64::INFINITY);
            continue;
        };
        let floor = out.records[0].pred_error * 1e-24;
        let pts: Vec<(f64, f64)> = out
            .records
            .iter()
            .filter(|r| r.pred_error > floor)
            .map(|r| (r.iter as f64, r.pred_error.ln()))
            .collect();
        let k = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
        let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let var: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = cov / var;
        if slope <= limit {
            ok += 1;
        }
        slopes.push(slope);
    }
    (
        ok >= 16,
        format!("log-error slope <= ln(2/3) in {ok}/20 runs (median slope {:.3})", median(slopes)),
    )
}

fn main() {
    let checks: Vec<(&str, fn() -> Check)> = vec![
        ("criterion 1", ols_precision),
        ("criterion 2", efficiency_ordering),
        ("criterion 3", pe_limit_check),
        ("criterion 4", subproblem_contraction),
        ("criterion 5", fwht_oracle),
        ("criterion 6", flop_exactness),
        ("criterion 7", schedule_bounds),
        ("criterion 8", embedding_quality),
        ("criterion 9", determinism),
        ("companion preconditioned spectrum", preconditioned_spectrum),
        ("companion stage-2 contraction", stage_two_contraction),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if !ok {
            failed += 1;
        }
        println!("{name}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
