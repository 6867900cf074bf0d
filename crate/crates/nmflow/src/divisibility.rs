//! CP- and P-divisibility tests for qubit dynamical maps.

use serde::{Deserialize, Serialize};

use crate::channels::{self, AffineQubitMap, LinearMap, QubitDynamics, RateChannel};
use crate::error::{Error, Result};
use crate::qmat::{self, DensityState};

/// Bisection tolerance for interval boundaries.
pub const BOUNDARY_TOL: f64 = 1e-6;
const FIB_POINTS: usize = 4096;

/// Complete positivity via the Choi matrix; returns the verdict and the
/// minimum Choi eigenvalue.
pub fn is_cp(map: &dyn LinearMap, tol: f64) -> Result<(bool, f64)> {
    let lmin = qmat::min_eigval(&qmat::hermitize(&channels::choi(map)))?;
    Ok((lmin >= -tol, lmin))
}

/// Minimum over pure inputs of the smallest output eigenvalue, found from a
/// Fibonacci grid on the Bloch sphere refined by Nelder-Mead.
pub fn min_output_eigenvalue(map: &AffineQubitMap) -> f64 {
    let f = |x: &[f64; 2]| {
        let n = [x[0].sin() * x[1].cos(), x[0].sin() * x[1].sin(), x[0].cos()];
        let r = map.bloch(n);
        0.5 * (1.0 - (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt())
    };
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut grid: Vec<([f64; 2], f64)> = (0..FIB_POINTS)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / FIB_POINTS as f64;
            let x = [z.acos(), golden * k as f64];
            (x, f(&x))
        })
        .collect();
    grid.sort_by(|a, b| a.1.total_cmp(&b.1));
    grid.iter()
        .take(4)
        .map(|(x, _)| nelder_mead(&f, *x, 0.05, 1e-14, 400))
        .fold(grid[0].1, f64::min)
}

/// Positivity of an affine qubit map on all states.
pub fn is_p_qubit(map: &AffineQubitMap, tol: f64) -> bool {
    if map.is_unital() {
        return map.lambda.iter().all(|l| l.abs() <= 1.0 + tol);
    }
    min_output_eigenvalue(map) >= -tol
}

fn nelder_mead(f: &dyn Fn(&[f64; 2]) -> f64, x0: [f64; 2], step: f64, ftol: f64, iters: usize) -> f64 {
    let mut simplex = [x0, [x0[0] + step, x0[1]], [x0[0], x0[1] + step]];
    let mut vals = simplex.map(|x| f(&x));
    for _ in 0..iters {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        simplex = idx.map(|k| simplex[k]);
        vals = idx.map(|k| vals[k]);
        if (vals[2] - vals[0]).abs() < ftol {
            break;
        }
        let centroid = [0.5 * (simplex[0][0] + simplex[1][0]), 0.5 * (simplex[0][1] + simplex[1][1])];
        let along = |s: f64| {
            [
                centroid[0] + s * (simplex[2][0] - centroid[0]),
                centroid[1] + s * (simplex[2][1] - centroid[1]),
            ]
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[2] = xe;
                vals[2] = fe;
            } else {
                simplex[2] = xr;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            simplex[2] = xr;
            vals[2] = fr;
        } else {
            let xc = along(0.5);
            let fc = f(&xc);
            if fc < vals[2] {
                simplex[2] = xc;
                vals[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        0.5 * (simplex[0][0] + simplex[k][0]),
                        0.5 * (simplex[0][1] + simplex[k][1]),
                    ];
                    vals[k] = f(&simplex[k]);
                }
            }
        }
    }
    vals.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Smallest `t0` keeping the quasi-eternal model physical:
/// `T(alpha) = ln(2^{1/alpha} - 1) / 2`.
pub fn physicality_threshold(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    Ok(0.5 * ((1.0 / alpha) * std::f64::consts::LN_2).exp_m1().ln())
}

/// `[B_xyz, B_yzx, B_zxy]` with `B_ijk = 1 + A_ij - A_jk - A_ki`.
pub fn cptp_conditions(ch: &RateChannel, t: f64) -> [f64; 3] {
    let [axy, axz, ayz] = ch.a_all(t);
    [1.0 + axy - ayz - axz, 1.0 + ayz - axz - axy, 1.0 + axz - axy - ayz]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateDivisibility {
    /// All pairwise rate sums non-negative.
    pub p: bool,
    /// All rates non-negative.
    pub cp: bool,
}

pub fn divisibility_rates(gamma: [f64; 3]) -> RateDivisibility {
    let [x, y, z] = gamma;
    RateDivisibility {
        p: x + y >= 0.0 && y + z >= 0.0 && x + z >= 0.0,
        cp: x >= 0.0 && y >= 0.0 && z >= 0.0,
    }
}

/// Rivas-Huelga-Plenio rate
/// `g(t) = (||(1 ⊗ V_{t+dt,t})(phi+)||_1 - 1) / dt`.
pub fn rhp_g(family: &dyn QubitDynamics, t: f64, dt: f64) -> Result<f64> {
    let v = family.intermediate(t, t + dt)?;
    let out = channels::apply(&v, &DensityState::phi_plus(), 1)?;
    Ok((qmat::trace_norm(&qmat::hermitize(out.matrix()))? - 1.0) / dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DivisibilityLabel {
    CPDivisible,
    PNotCP,
    NotP,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalClass {
    pub t_start: f64,
    pub t_end: f64,
    pub label: DivisibilityLabel,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub intervals: Vec<IntervalClass>,
    pub diagnostics: Vec<String>,
}

fn bisect_sign(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let flo = f(lo) >= 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if (f(mid) >= 0.0) == flo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Splits `[0, t_max]` into maximal intervals on which a single-parameter
/// family is CP-divisible or not P-divisible.
///
/// Boundaries are sign changes of the rate, located on a grid of `step` and
/// refined by bisection. Each interval is cross-checked against the Choi and
/// positivity tests of a short propagator at its midpoint; a `PNotCP` verdict
/// or a disagreement is reported in `diagnostics`.
pub fn classify_intervals(family: &dyn QubitDynamics, t_max: f64, step: f64) -> Result<Classification> {
    if !(step > 0.0) || !(t_max > 0.0) {
        return Err(Error::InvalidArgument("t_max and step must be positive".into()));
    }
    let rate = |t: f64| family.single_rate(t);
    if rate(0.0).is_none() {
        return Err(Error::InvalidArgument("family is not single-parameter".into()));
    }
    let gamma = |t: f64| rate(t).unwrap_or(f64::NAN);
    let n = (t_max / step).ceil() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| (k as f64 * step).min(t_max)).collect();
    let mut bounds = vec![0.0];
    for w in grid.windows(2) {
        if (gamma(w[0]) >= 0.0) != (gamma(w[1]) >= 0.0) {
            bounds.push(bisect_sign(&gamma, w[0], w[1], BOUNDARY_TOL));
        }
    }
    bounds.push(t_max);

    let mut out = Classification::default();
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let label = if gamma(mid) >= 0.0 { DivisibilityLabel::CPDivisible } else { DivisibilityLabel::NotP };
        let dt = (1e-3 * (b - a)).min(1e-3);
        let v = family.intermediate(mid, mid + dt)?;
        let (cp, lmin) = is_cp(&v, 1e-13)?;
        let p = is_p_qubit(&v, 1e-13);
        let checked = match (cp, p) {
            (true, _) => DivisibilityLabel::CPDivisible,
            (false, true) => DivisibilityLabel::PNotCP,
            (false, false) => DivisibilityLabel::NotP,
        };
        if checked == DivisibilityLabel::PNotCP {
            out.diagnostics.push(format!(
                "P but not CP on [{a:.6}, {b:.6}] (min Choi eigenvalue {lmin:.3e})"
            ));
        } else if checked != label {
            out.diagnostics.push(format!(
                "rate sign and propagator test disagree on [{a:.6}, {b:.6}]"
            ));
        }
        match out.intervals.last_mut() {
            Some(last) if last.label == label => last.t_end = b,
            _ => out.intervals.push(IntervalClass { t_start: a, t_end: b, label }),
        }
    }
    Ok(out)
}
