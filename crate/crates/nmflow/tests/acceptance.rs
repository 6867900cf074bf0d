//! Landmark checks, one PASS/FAIL line per criterion.
//!
//! `NMFLOW_ACCEPT_QUICK=1` replaces the 2·10⁴-sample random-state scan with
//! the reduced 2·10³-sample gate.

use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use nmflow::channels::{self, KrausChannel, QubitDynamics, RateChannel, RateSpec};
use nmflow::correlations::{self, Ensemble, Measure};
use nmflow::divisibility::{self, DivisibilityLabel};
use nmflow::mepovm::{self, SeeSawOptions};
use nmflow::qmat::{self, CMatrix, DensityState};
use nmflow::witness::{self, Grid, Trajectory};

struct Outcome {
    pass: bool,
    detail: String,
}

fn timed(budget: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    if elapsed > budget {
        out.pass = false;
        out.detail.push_str(&format!("; over budget {budget:?}"));
    }
    out.detail.push_str(&format!(" [{elapsed:.2?}]"));
    out
}

fn random_state(dims: &[usize], rank: usize, rng: &mut impl Rng) -> DensityState {
    let d: usize = dims.iter().product();
    let g = CMatrix::from_fn(d, rank, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityState::new(qmat::hermitize(&m.unscale(tr)), dims).unwrap()
}

fn random_channel(d: usize, k: usize, rng: &mut impl Rng) -> KrausChannel {
    let g = CMatrix::from_fn(d * k, d, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let q = g.qr().q();
    let ops = (0..k).map(|j| q.view((j * d, 0), (d, d)).into_owned()).collect();
    KrausChannel::new(ops).unwrap()
}

fn adjoint_apply(ch: &KrausChannel, x: &CMatrix) -> CMatrix {
    let mut out = qmat::zeros(x.nrows());
    for k in ch.ops() {
        out += k.adjoint() * x * k;
    }
    out
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let up = f(lo) > 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == up {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn physicality() -> Outcome {
    let start = Instant::now();
    let t = divisibility::physicality_threshold(0.4).unwrap();
    let elapsed = start.elapsed();
    Outcome {
        pass: (t - 0.7686).abs() <= 1e-3 && elapsed < Duration::from_millis(1),
        detail: format!("T(2/5) = {t:.6}, target 0.7686 ± 1e-3, {elapsed:.2?} (< 1 ms)"),
    }
}

fn eb_time() -> Outcome {
    timed(Duration::from_secs(1), || {
        let t = witness::find_t_eb(&RateChannel::quasi_eternal(0.4, 2.0), 1e-8, 10.0).unwrap();
        Outcome { pass: (1.46..=1.48).contains(&t), detail: format!("t_EB = {t:.6}, target [1.46, 1.48]") }
    })
}

fn gadc_window() -> Outcome {
    timed(Duration::from_secs(1), || {
        let (a, b) = witness::gadc_first_window();
        Outcome {
            pass: (a - 0.13437).abs() <= 5e-4 && (b - 0.31416).abs() <= 5e-4,
            detail: format!("T1- = ({a:.6}, {b:.6}), target (0.13437, 0.31416) ± 5e-4"),
        }
    })
}

fn mi_landmark() -> Outcome {
    timed(Duration::from_secs(5), || {
        let ch = RateChannel::quasi_eternal(0.4, 1.0);
        let grid = Grid::new(6.0, 0.01).unwrap().points();
        let traj = Trajectory::new(DensityState::phi_plus(), &ch, 1, &[0], grid).unwrap();
        let r = witness::scan_backflow(Measure::MutualInformation, &traj).unwrap();
        match r.onsets.first() {
            Some(&t) => Outcome {
                pass: (t - 2.741).abs() <= 0.005,
                detail: format!("MI onset = {t:.5}, target 2.741 ± 0.005"),
            },
            None => Outcome { pass: false, detail: "no MI increase found".into() },
        }
    })
}

fn dpz_sign_change() -> Outcome {
    timed(Duration::from_secs(1), || {
        let ch = RateChannel::quasi_eternal(0.4, 1.0);
        let dpz = |t: f64| ch.probs_derivative(t)[3];
        let grid = Grid::span(0.05, 4.0, 0.01).unwrap().points();
        let bracket = grid.windows(2).find(|w| (dpz(w[0]) > 0.0) != (dpz(w[1]) > 0.0));
        match bracket {
            Some(w) => {
                let t = bisect(dpz, w[0], w[1], 1e-10);
                Outcome {
                    pass: (t - 1.3254).abs() <= 1e-3,
                    detail: format!("dp_z/dt root = {t:.6}, target 1.3254 ± 1e-3"),
                }
            }
            None => Outcome { pass: false, detail: "no sign change of dp_z/dt".into() },
        }
    })
}

fn random_scan(count: usize, bound: f64, budget: Duration) -> Outcome {
    timed(budget, || {
        let ch = RateChannel::quasi_eternal(0.4, 1.0);
        let samples = witness::sample_pure(&[2, 2], count, 2404).unwrap();
        let grid = Grid::new(4.0, 0.01).unwrap();
        match witness::min_t_nm_scan(&ch, &samples, &grid).unwrap() {
            Some(m) => Outcome {
                pass: m.onset <= bound,
                detail: format!("{count} samples: min onset = {:.4} (sample {}), target <= {bound}", m.onset, m.index),
            },
            None => Outcome { pass: false, detail: format!("{count} samples: no onset found") },
        }
    })
}

fn eternal_control() -> Outcome {
    timed(Duration::from_secs(120), || {
        let ch = RateChannel::eternal();
        let samples = witness::sample_pure(&[2, 2], 1000, 17).unwrap();
        let grid = Grid::new(6.0, 0.01).unwrap();
        let m = witness::min_t_nm_scan_with_margin(&ch, &samples, &grid, 1e-9).unwrap();
        Outcome {
            pass: m.is_none(),
            detail: match m {
                None => "10^3 samples, margin 1e-9: no MI increase".into(),
                Some(m) => format!("increase at t = {:.4} for sample {}", m.onset, m.index),
            },
        }
    })
}

fn covers(outer: &[(f64, f64)], inner: &[(f64, f64)], slack: f64) -> bool {
    inner.iter().all(|&(a, b)| outer.iter().any(|&(c, d)| c <= a + slack && d >= b - slack))
}

fn gadc_eps_scan() -> Outcome {
    timed(Duration::from_secs(60), || {
        let (lo, hi) = witness::gadc_first_window();
        let step = 1e-3;
        let grid = Grid::new(0.33, step).unwrap();
        let eps = [1e-3, 1e-4, 1e-5];
        let scans = witness::gadc_epsilon_scan(&eps, &grid).unwrap();
        let mut pass = true;
        let mut parts = Vec::new();
        for s in &scans {
            let nonempty = !s.intervals.is_empty();
            let inside = s.intervals.iter().all(|&(a, b)| a > lo && b < hi);
            pass &= nonempty && inside && !s.precision_loss;
            let span: Vec<String> = s.intervals.iter().map(|(a, b)| format!("[{a:.3}, {b:.3}]")).collect();
            parts.push(format!("eps {:.0e}: {}", s.eps, span.join(" ")));
        }
        for w in scans.windows(2) {
            pass &= covers(&w[1].intervals, &w[0].intervals, step);
        }
        Outcome { pass, detail: format!("{}; nested as eps decreases, inside ({lo:.5}, {hi:.5})", parts.join(", ")) }
    })
}

fn hessian_forms() -> Outcome {
    timed(Duration::from_secs(60), || {
        let mut rng = ChaCha8Rng::seed_from_u64(909);
        let mut worst: f64 = 0.0;
        let mut pass = true;
        for _ in 0..50 {
            let g: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..2.0));
            let a12 = rng.random_range(-0.24..0.24);
            let num = witness::mi_rate_hessian_eigs(witness::coordinate_decay(g), a12).unwrap();
            let mut closed = witness::hessian_eigs_closed(g[0], g[1], g[2], a12).unwrap().to_vec();
            closed.extend([0.0; 6]);
            closed.sort_by(f64::total_cmp);
            let scale = closed.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            for (x, y) in num.iter().zip(&closed) {
                let err = (x - y).abs() / y.abs().max(1e-3 * scale);
                worst = worst.max(err);
                pass &= err <= 1e-3;
            }
        }
        Outcome { pass, detail: format!("50 draws, worst relative deviation {worst:.2e}, target 1e-3") }
    })
}

fn probe_backflow() -> Outcome {
    timed(Duration::from_secs(120), || {
        let probe = mepovm::build_probe(0.4, 2.0, 3.0, 0.2).unwrap();
        let c2_at = |t: f64| mepovm::c2(&probe.state_at(t).unwrap(), &[0]).unwrap();
        let step = 1e-2;
        let before: Vec<f64> = Grid::new(2.0, step).unwrap().points().into_iter().map(c2_at).collect();
        let after: Vec<f64> = Grid::span(3.0 + step, 4.0, step).unwrap().points().into_iter().map(c2_at).collect();
        let rise = before.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let min_gain = after.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let at_tau = c2_at(3.0);
        let pass = rise <= 1e-9 && min_gain > 0.0 && (at_tau - 0.1).abs() <= 1e-7;
        Outcome {
            pass,
            detail: format!(
                "largest step on [0, t0] {rise:.2e} (<= 1e-9 noise), smallest step on (tau, tau+1] {min_gain:.2e} (> 0), C2(tau) = {at_tau:.10} vs 0.1"
            ),
        }
    })
}

fn pg_counterexample() -> Outcome {
    let (p1, p2, p3) = (0.4, 0.15, 0.45);
    let half = qmat::identity(2).unscale(2.0);
    let zero = qmat::unit(2, 0, 0);
    let one = qmat::unit(2, 1, 1);
    let projective = Ensemble::new(vec![p1, p2, p3], vec![half.clone(), zero.clone(), one.clone()]).unwrap();
    let r = p2 / p1;
    let moved = half.scale(1.0 - r) + zero.scale(r);
    let transformed = Ensemble::new(vec![p1, p2, p3], vec![moved, half, one]).unwrap();
    let a = correlations::guessing_commuting(&projective).unwrap().value;
    let b = correlations::guessing_commuting(&transformed).unwrap().value;
    let (wa, wb) = (p1 / 2.0 + p3, p1 / 2.0 + p2 / 2.0 + p3);
    Outcome {
        pass: (a - 0.65).abs() < 1e-12 && (b - 0.725).abs() < 1e-12 && (a - wa).abs() < 1e-12 && (b - wb).abs() < 1e-12,
        detail: format!("P_g = {a:.12} (p1/2 + p3 = {wa}), transformed P_g = {b:.12} (p1/2 + p2/2 + p3 = {wb})"),
    }
}

fn data_processing(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for k in 0..200 {
        let dims = if k % 2 == 0 { [2usize, 2] } else { [2, 3] };
        let rho = random_state(&dims, 1 + k % 4, rng);
        let target = k % 3 % 2;
        let ch = random_channel(dims[target], 1 + k % 3, rng);
        let after = channels::apply(&ch, &rho, target).unwrap();
        let mi = |s: &DensityState| correlations::mutual_information(s, &[0]).unwrap();
        let neg = |s: &DensityState| correlations::negativity(s, &[0]).unwrap();
        if mi(&after) > mi(&rho) + 1e-10 || neg(&after) > neg(&rho) + 1e-10 {
            return Err(format!("data processing violated in case {k}"));
        }
    }
    Ok(())
}

fn c2_monotonicity(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let opts = SeeSawOptions { restarts: 4, ..SeeSawOptions::default() };
    for k in 0..200 {
        let dims = if k % 2 == 0 { [2usize, 2] } else { [2, 6] };
        let rho = random_state(&dims, 1 + k % 3, rng);
        let target = if k % 4 < 2 { 0 } else { 1 };
        let ch = random_channel(dims[target], 1 + k % 3, rng);
        let after = channels::apply(&ch, &rho, target).unwrap();
        let post = mepovm::c2_measured(&after, &[0], &opts).unwrap();
        let start = if target == 0 { adjoint_apply(&ch, &post.povm.x()) } else { post.povm.x() };
        let pre = mepovm::c2_with_starts(&rho, &[0], &[start], &opts).unwrap();
        if post.value > pre.value + 1e-6 {
            return Err(format!("C2 increased in case {k}: {} > {}", post.value, pre.value));
        }
    }
    Ok(())
}

fn me_construction(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for k in 0..500 {
        let d = 2 + k % 5;
        let rho = random_state(&[d], 1 + k % d, rng);
        let m = mepovm::construct_me_povm(rho.matrix()).map_err(|e| format!("marginal {k}: {e}"))?;
        let sum: CMatrix = m.povm().effects().iter().fold(qmat::zeros(d), |acc, e| acc + e);
        let psd = m.povm().effects().iter().all(|e| qmat::min_eigval(e).unwrap() >= -1e-10);
        if !psd || qmat::max_abs(&(sum - qmat::identity(d))) > 1e-10 || m.me_defect() > 1e-9 {
            return Err(format!("invalid ME-POVM for marginal {k}"));
        }
    }
    Ok(())
}

fn count_bounds() -> Result<(), String> {
    for ((da, db), want) in [((2, 2), 3.0), ((2, 6), 6.0), ((8, 2), 8.0)] {
        let got = mepovm::povm_count_bound(da, db).unwrap();
        if (got - want).abs() > 1e-12 {
            return Err(format!("bound ({da}, {db}) = {got}, want {want}"));
        }
    }
    Ok(())
}

fn interior_state(rng: &mut ChaCha8Rng) -> DensityState {
    let r = random_state(&[2, 2], 4, rng);
    let m = r.matrix().scale(0.9) + qmat::identity(4).scale(0.025);
    DensityState::new(m, &[2, 2]).unwrap()
}

/// Under a rate-`g` propagator the MI derivative has the sign of `-g`.
fn rate_sign_law(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let h = 1e-6;
    for (name, make) in [
        ("dephasing", RateChannel::dephasing as fn(RateSpec) -> RateChannel),
        ("depolarizing", RateChannel::depolarizing as fn(RateSpec) -> RateChannel),
    ] {
        for k in 0..100 {
            let g = if k % 2 == 0 { 0.7 } else { -0.7 };
            let v = make(RateSpec::Constant(g)).intermediate(0.0, h).unwrap();
            let rho = interior_state(rng);
            let before = correlations::mutual_information(&rho, &[0]).unwrap();
            let after = correlations::mutual_information(&channels::apply(&v, &rho, 1).unwrap(), &[0]).unwrap();
            let rate = (after - before) / h;
            if rate.abs() > 1e-9 && rate.signum() != -f64::signum(g) {
                return Err(format!("{name}: dI/dt = {rate:.3e} with rate {g}"));
            }
        }
    }
    Ok(())
}

fn interval_laws() -> Result<(), String> {
    let pi = std::f64::consts::PI;
    let deph = RateChannel::dephasing(RateSpec::func(f64::cos));
    let cls = divisibility::classify_intervals(&deph, 10.0, 0.05).map_err(|e| e.to_string())?;
    if !cls.diagnostics.is_empty() {
        return Err(format!("dephasing diagnostics {:?}", cls.diagnostics));
    }
    for iv in &cls.intervals {
        let mid = 0.5 * (iv.t_start + iv.t_end);
        let want = if mid.cos() >= 0.0 { DivisibilityLabel::CPDivisible } else { DivisibilityLabel::NotP };
        if iv.label != want || (iv.t_start > 0.0 && ((iv.t_start / pi - 0.5).round() - (iv.t_start / pi - 0.5)).abs() > 1e-6) {
            return Err(format!("dephasing interval {iv:?}"));
        }
    }
    // depolarization: every short propagator is either CP or not P
    let depol = RateChannel::depolarizing(RateSpec::func(|t| 0.3 * t.cos()));
    for t in Grid::new(10.0, 0.05).unwrap().points() {
        if (t.cos()).abs() < 1e-3 {
            continue;
        }
        let v = depol.intermediate(t, t + 1e-4).unwrap();
        let (cp, _) = divisibility::is_cp(&v, 1e-13).map_err(|e| e.to_string())?;
        let p = divisibility::is_p_qubit(&v, 1e-13);
        if cp != (t.cos() > 0.0) || p != cp {
            return Err(format!("depolarizing propagator at t = {t}: cp {cp}, p {p}"));
        }
    }
    Ok(())
}

fn choi_sign_law() -> Result<(), String> {
    let ch = RateChannel::dephasing(RateSpec::func(|t| t.cos() + 0.2 * (3.0 * t).sin()));
    let delta = 1e-6;
    for t in Grid::new(8.0, 0.037).unwrap().points() {
        let gamma = ch.single_rate(t).unwrap();
        if gamma.abs() < 1e-3 {
            continue;
        }
        let v = ch.intermediate(t, t + delta).unwrap();
        let vals = qmat::herm_eigvals(&channels::choi(&v)).unwrap();
        let moving = vals[1..].iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if moving.signum() != gamma.signum() {
            return Err(format!("t = {t}: Choi eigenvalue {moving:.3e}, rate {gamma:.3e}"));
        }
    }
    Ok(())
}

fn property_suites() -> Outcome {
    timed(Duration::from_secs(600), || {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let suites: Vec<(&str, Result<(), String>)> = vec![
            ("data processing (MI, negativity)", data_processing(&mut rng)),
            ("C2 monotonicity, 200 channels", c2_monotonicity(&mut rng)),
            ("ME-POVM construction, 500 marginals", me_construction(&mut rng)),
            ("outcome-count bounds", count_bounds()),
            ("dI/dt sign law", rate_sign_law(&mut rng)),
            ("CP / not-P interval law", interval_laws()),
            ("Choi eigenvalue sign law", choi_sign_law()),
        ];
        let failed: Vec<String> =
            suites.iter().filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e}"))).collect();
        Outcome {
            pass: failed.is_empty(),
            detail: if failed.is_empty() {
                let names: Vec<&str> = suites.iter().map(|(n, _)| *n).collect();
                names.join("; ")
            } else {
                failed.join("; ")
            },
        }
    })
}

fn main() {
    let quick = std::env::var("NMFLOW_ACCEPT_QUICK").is_ok_and(|v| v == "1");
    let mut criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome>)> = vec![
        ("physicality threshold", Box::new(physicality)),
        ("entanglement-breaking time", Box::new(eb_time)),
        ("GADC first non-CP interval", Box::new(gadc_window)),
        ("MI landmark, Bell probe", Box::new(mi_landmark)),
        ("dp_z/dt sign change", Box::new(dpz_sign_change)),
    ];
    if quick {
        criteria.push(("random-state scan (reduced)", Box::new(|| random_scan(2_000, 2.55, Duration::from_secs(60)))));
    } else {
        criteria.push(("random-state scan", Box::new(|| random_scan(20_000, 2.43, Duration::from_secs(600)))));
    }
    criteria.extend([
        ("eternal model control", Box::new(eternal_control) as Box<dyn FnOnce() -> Outcome>),
        ("GADC epsilon scan", Box::new(gadc_eps_scan)),
        ("Hessian closed forms", Box::new(hessian_forms)),
        ("probe backflow", Box::new(probe_backflow)),
        ("P_g counterexample", Box::new(pg_counterexample)),
        ("property suites", Box::new(property_suites)),
    ]);
    let mut failures = 0;
    for (k, (name, run)) in criteria.into_iter().enumerate() {
        let out = run();
        if !out.pass {
            failures += 1;
        }
        println!("{} {:>2} {name}: {}", if out.pass { "PASS" } else { "FAIL" }, k + 1, out.detail);
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
