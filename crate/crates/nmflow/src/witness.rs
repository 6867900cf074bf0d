//! Time scans for correlation backflow, entanglement-breaking times, random
//! initial states, and the perturbative analysis of `dI/dt` around
//! stationary states.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{self, Gadc, QubitDynamics};
use crate::correlations::{self, Measure};
use crate::error::{Error, Result};
use crate::mepovm;
use crate::qmat::{self, CMatrix, CVector, DensityState};
use num_complex::Complex64 as C64;

/// Forward differences above this count as an increase.
pub const BACKFLOW_MARGIN: f64 = 1e-10;
/// Resolution of onset bisection.
pub const ONSET_TOL: f64 = 1e-4;
/// Half-width of the central difference used while refining an onset.
const REFINE_DELTA: f64 = 1e-5;
/// Negativity below this counts as zero.
pub const NEGATIVITY_ZERO: f64 = 1e-12;
/// Eigenvalues closer than this are treated as exactly degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Non-degenerate eigenvalue gaps below this are rejected.
pub const CROSSING_GAP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    #[serde(default)]
    pub t_min: f64,
    pub t_max: f64,
    pub step: f64,
}

impl Grid {
    pub fn new(t_max: f64, step: f64) -> Result<Self> {
        Self::span(0.0, t_max, step)
    }

    pub fn span(t_min: f64, t_max: f64, step: f64) -> Result<Self> {
        let g = Self { t_min, t_max, step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.t_max > self.t_min) || !self.t_min.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid [{}, {}] with step {}",
                self.t_min, self.t_max, self.step
            )));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.t_max - self.t_min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.t_min + k as f64 * self.step).collect()
    }
}

/// `rho(t) = (1 ⊗ Lambda_t)(rho(0))` with the qubit map on `subsystem`,
/// correlations measured across `side_a` versus the rest.
pub struct Trajectory<'a> {
    initial: DensityState,
    channel: &'a dyn QubitDynamics,
    subsystem: usize,
    side_a: Vec<usize>,
    grid: Vec<f64>,
}

impl<'a> Trajectory<'a> {
    pub fn new(
        initial: DensityState,
        channel: &'a dyn QubitDynamics,
        subsystem: usize,
        side_a: &[usize],
        grid: Vec<f64>,
    ) -> Result<Self> {
        if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
        }
        if initial.dims().get(subsystem) != Some(&2) {
            return Err(Error::DimMismatch(format!(
                "subsystem {subsystem} of {:?} is not a qubit",
                initial.dims()
            )));
        }
        Ok(Self { initial, channel, subsystem, side_a: side_a.to_vec(), grid })
    }

    pub fn initial(&self) -> &DensityState {
        &self.initial
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn side_a(&self) -> &[usize] {
        &self.side_a
    }

    pub fn state_at(&self, t: f64) -> Result<DensityState> {
        let map = self.channel.map_at(t)?;
        channels::apply(&map, &self.initial, self.subsystem)
    }

    pub fn measure_at(&self, measure: Measure, t: f64) -> Result<f64> {
        evaluate(measure, &self.state_at(t)?, &self.side_a)
    }
}

pub fn evaluate(measure: Measure, rho: &DensityState, side_a: &[usize]) -> Result<f64> {
    match measure {
        Measure::MutualInformation => correlations::mutual_information(rho, side_a),
        Measure::Negativity => correlations::negativity(rho, side_a),
        Measure::C2 => mepovm::c2(rho, side_a),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BackflowReport {
    pub measure: Measure,
    /// Refined start of each increase interval.
    pub onsets: Vec<f64>,
    /// Grid intervals over which every forward difference exceeds the margin.
    pub intervals: Vec<(f64, f64)>,
    /// Largest forward difference quotient on the grid.
    pub max_derivative: f64,
    pub values: Vec<f64>,
}

impl BackflowReport {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// Maximal runs of grid steps where `values[k+1] - values[k] > margin`.
pub fn increase_runs(grid: &[f64], values: &[f64], margin: f64) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for k in 0..values.len().saturating_sub(1) {
        let up = values[k + 1] - values[k] > margin;
        match (up, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                runs.push((s, k));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, grid.len() - 1));
    }
    runs
}

/// Bisects `[lo, hi]` for the first point where `rising` holds, assuming it
/// fails at `lo`. Returns `hi` unchanged if no point in `[lo, hi]` is found.
fn bisect_onset(lo: f64, hi: f64, rising: &dyn Fn(f64) -> Result<bool>) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    if rising(lo)? {
        return Ok(lo);
    }
    if !rising(hi)? {
        let mid = 0.5 * (lo + hi);
        if !rising(mid)? {
            return Ok(hi);
        }
        hi = mid;
    }
    while hi - lo > ONSET_TOL {
        let mid = 0.5 * (lo + hi);
        if rising(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Refines the onset of a run starting at grid index `k` with the central
/// difference of `f`, the margin rescaled to the refinement width.
fn refine_onset(f: &dyn Fn(f64) -> Result<f64>, grid: &[f64], k: usize, margin: f64) -> Result<f64> {
    if k == 0 {
        return Ok(grid[0]);
    }
    let step = grid[k] - grid[k - 1];
    let threshold = margin * 2.0 * REFINE_DELTA / step;
    let rising = |t: f64| -> Result<bool> {
        Ok(f(t + REFINE_DELTA)? - f(t - REFINE_DELTA)? > threshold)
    };
    let hi = grid.get(k + 1).copied().unwrap_or(grid[k]);
    bisect_onset(grid[k - 1], hi, &rising)
}

pub fn scan_backflow(measure: Measure, traj: &Trajectory) -> Result<BackflowReport> {
    scan_backflow_with_margin(measure, traj, BACKFLOW_MARGIN)
}

pub fn scan_backflow_with_margin(measure: Measure, traj: &Trajectory, margin: f64) -> Result<BackflowReport> {
    let grid = traj.grid();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&t| traj.measure_at(measure, t))
        .collect::<Result<_>>()?;
    let runs = increase_runs(grid, &values, margin);
    let f = |t: f64| traj.measure_at(measure, t);
    let mut onsets = Vec::with_capacity(runs.len());
    for &(s, _) in &runs {
        onsets.push(refine_onset(&f, grid, s, margin)?);
    }
    let max_derivative = grid
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| (v[1] - v[0]) / (t[1] - t[0]))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(BackflowReport {
        measure,
        onsets,
        intervals: runs.iter().map(|&(s, e)| (grid[s], grid[e])).collect(),
        max_derivative,
        values,
    })
}

fn phi_plus_trajectory_negativity(ch: &dyn QubitDynamics, t: f64) -> Result<f64> {
    let map = ch.map_at(t)?;
    let rho = channels::apply(&map, &DensityState::phi_plus(), 1)?;
    correlations::negativity(&rho, &[0])
}

/// First time at which the negativity of `(1 ⊗ Lambda_t)(phi+)` vanishes.
pub fn find_t_eb(ch: &dyn QubitDynamics, tol: f64, t_max: f64) -> Result<f64> {
    const SCAN_STEP: f64 = 1e-2;
    let zero = |t: f64| -> Result<bool> { Ok(phi_plus_trajectory_negativity(ch, t)? <= NEGATIVITY_ZERO) };
    let mut prev = 0.0;
    if zero(prev)? {
        return Ok(0.0);
    }
    let mut t = SCAN_STEP;
    while t <= t_max + 1e-12 {
        if zero(t)? {
            let (mut lo, mut hi) = (prev, t);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if zero(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev = t;
        t += SCAN_STEP;
    }
    Err(Error::NeverBreaking(t_max))
}

/// Pure states with i.i.d. complex Gaussian amplitudes, normalized.
pub fn sample_pure(dims: &[usize], count: usize, seed: u64) -> Result<Vec<DensityState>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let d: usize = dims.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let psi = CVector::from_fn(d, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
            DensityState::from_ket(&psi, dims)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ScanMin {
    pub onset: f64,
    pub index: usize,
    pub state: DensityState,
}

/// Earliest MI-increase onset over two-qubit `samples` (ancilla first,
/// channel on the second qubit). Samples are abandoned once they can no
/// longer beat the running minimum.
pub fn min_t_nm_scan(ch: &dyn QubitDynamics, samples: &[DensityState], grid: &Grid) -> Result<Option<ScanMin>> {
    min_t_nm_scan_with_margin(ch, samples, grid, BACKFLOW_MARGIN)
}

pub fn min_t_nm_scan_with_margin(
    ch: &dyn QubitDynamics,
    samples: &[DensityState],
    grid: &Grid,
    margin: f64,
) -> Result<Option<ScanMin>> {
    grid.validate()?;
    let points = grid.points();
    let superops: Vec<CMatrix> = points
        .iter()
        .map(|&t| Ok(channels::superoperator(&ch.map_at(t)?)))
        .collect::<Result<_>>()?;
    let best = AtomicU64::new(f64::INFINITY.to_bits());
    let lower_best = |v: f64| {
        let mut cur = best.load(Ordering::Relaxed);
        while v < f64::from_bits(cur) {
            match best.compare_exchange_weak(cur, v.to_bits(), Ordering::Relaxed, Ordering::Relaxed) {
                Ok(_) => break,
                Err(x) => cur = x,
            }
        }
    };
    let found: Vec<Option<(f64, usize)>> = samples
        .par_iter()
        .enumerate()
        .map(|(idx, rho)| -> Result<Option<(f64, usize)>> {
            if rho.dims() != [2, 2] {
                return Err(Error::DimMismatch(format!("expected two qubits, got {:?}", rho.dims())));
            }
            let mi_at = |k: usize| -> Result<f64> {
                let m = channels::apply_superoperator(&superops[k], rho.matrix(), &[2, 2], 1)?;
                correlations::mutual_information(&DensityState::new_unchecked(m, &[2, 2]), &[0])
            };
            let mut prev = mi_at(0)?;
            for k in 0..points.len() - 1 {
                if points[k] - grid.step > f64::from_bits(best.load(Ordering::Relaxed)) {
                    return Ok(None);
                }
                let next = mi_at(k + 1)?;
                if next - prev > margin {
                    let exact = |t: f64| -> Result<f64> {
                        let map = ch.map_at(t)?;
                        correlations::mutual_information(&channels::apply(&map, rho, 1)?, &[0])
                    };
                    let onset = refine_onset(&exact, &points, k, margin)?;
                    lower_best(onset);
                    return Ok(Some((onset, idx)));
                }
                prev = next;
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    let min = found
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(min.map(|(onset, index)| ScanMin { onset, index, state: samples[index].clone() }))
}

/// `sqrt(1 - eps^2)|00> + eps|11>` on `S ⊗ A`.
pub fn psi_minus(eps: f64) -> Result<DensityState> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps = {eps}")));
    }
    let mut v = CVector::zeros(4);
    v[0] = qmat::c((1.0 - eps * eps).sqrt());
    v[3] = qmat::c(eps);
    DensityState::from_ket(&v, &[2, 2])
}

/// First interval where `gamma_-` of the GADC is negative.
pub fn gadc_first_window() -> (f64, f64) {
    let g = |t: f64| Gadc::rates(t).0;
    let root = |mut lo: f64, mut hi: f64| {
        let up = g(lo) < 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (g(mid) < 0.0) == up {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    // gamma_- > 0 at 0.1, < 0 at 0.2 and > 0 again just after pi/10
    (root(0.1, 0.2), root(0.2, 0.33))
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonScan {
    pub eps: f64,
    /// Increase intervals of `I(t) / I(0.1)` on the grid.
    pub intervals: Vec<(f64, f64)>,
    /// MI fell below `1e3` machine epsilon somewhere on the grid.
    pub precision_loss: bool,
    pub normalized: Vec<f64>,
}

/// MI backflow of `psi_minus(eps)` under the GADC, normalized by `I(0.1)`.
pub fn gadc_epsilon_scan(eps_list: &[f64], grid: &Grid) -> Result<Vec<EpsilonScan>> {
    grid.validate()?;
    let points = grid.points();
    let maps: Vec<CMatrix> = points
        .iter()
        .map(|&t| Ok(channels::superoperator(&Gadc.map_at(t)?)))
        .collect::<Result<_>>()?;
    let reference = channels::superoperator(&Gadc.map_at(0.1)?);
    eps_list
        .iter()
        .map(|&eps| {
            let rho = psi_minus(eps)?;
            let mi = |t: &CMatrix| -> Result<f64> {
                let m = channels::apply_superoperator(t, rho.matrix(), &[2, 2], 0)?;
                correlations::mutual_information(&DensityState::new_unchecked(m, &[2, 2]), &[0])
            };
            let raw: Vec<f64> = maps.par_iter().map(mi).collect::<Result<_>>()?;
            let precision_loss = raw.iter().any(|&v| v < 1e3 * f64::EPSILON);
            let norm = mi(&reference)?;
            if norm < 1e3 * f64::EPSILON {
                return Ok(EpsilonScan { eps, intervals: vec![], precision_loss: true, normalized: raw });
            }
            let normalized: Vec<f64> = raw.iter().map(|v| v / norm).collect();
            let intervals = increase_runs(&points, &normalized, BACKFLOW_MARGIN)
                .into_iter()
                .map(|(s, e)| (points[s], points[e]))
                .collect();
            Ok(EpsilonScan { eps, intervals, precision_loss, normalized })
        })
        .collect()
}

/// `dI/dt` of `psi_minus(eps)` with the GADC on the first qubit.
///
/// The evolved state is an X state; its populations and the 00/11 coherence
/// are written in closed form so that the eigenvalues of order `s eps^2`
/// near the zeros of `s(t)` keep full relative precision.
pub fn gadc_mi_rate(t: f64, eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) || !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("need t >= 0 and eps in [0, 1), got {t}, {eps}")));
    }
    let (e2, q2) = (eps * eps, 1.0 - eps * eps);
    let (r, s) = (Gadc::r(t), Gadc::s(t));
    let u = 1.0 - r;
    let (du, ds) = (r, -5.0 * (10.0 * t).sin());
    // |1> -> |0> with probability u s, |0> -> |1> with probability u (1 - s)
    let a = q2 * (1.0 - u * (1.0 - s));
    let b = e2 * (1.0 - u * s);
    let c = eps * q2.sqrt() * r.sqrt();
    let p01 = e2 * u * s;
    let p10 = q2 * u * (1.0 - s);
    let da = q2 * (u * ds - du * (1.0 - s));
    let db = -e2 * (du * s + u * ds);
    let dc = -0.5 * c;

    let half = 0.5 * (a - b);
    let hi = 0.5 * (a + b) + half.hypot(c);
    let lo = q2 * e2 * u * u * s * (1.0 - s) / hi;
    let gap = hi - lo;
    // hi - a = b - lo = c^2 / (hi - b), free of cancellation
    let shift = c * c / (hi - b);
    let (lh, ll) = (hi.ln(), if lo > 0.0 { lo.ln() } else { 0.0 });
    let (s0, s1) = (a + p01, p10 + b);
    let ln_pos = |x: f64| if x > 0.0 { x.ln() } else { 0.0 };
    // entries of ln rho - ln rho_S (x) 1 on the X pattern
    let d_aa = ((shift - p01) / s0).ln_1p() + (ll - lh) * shift / gap;
    let d_bb = ll - s1.ln() + (lh - ll) * shift / gap;
    let d_ab = (lh - ll) * c / gap;
    let d_01 = ln_pos(p01) - s0.ln();
    let d_10 = if p10 > 0.0 { -(b / p10).ln_1p() } else { 0.0 };
    // Tr(rho' (ln rho - ln rho_S (x) 1)); the ancilla marginal is constant
    let rate = da * d_aa
        + db * d_bb
        + 2.0 * dc * d_ab
        + (du * s + u * ds) * e2 * d_01
        + (du * (1.0 - s) - u * ds) * q2 * d_10;
    Ok(rate)
}

/// Least-squares fit of `dI/dt = (alpha + beta ln eps) eps^2` over `eps`.
pub fn gadc_rate_series(t: f64, eps: &[f64]) -> Result<(f64, f64)> {
    if eps.len() < 2 {
        return Err(Error::InvalidArgument("need at least two eps values".into()));
    }
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .map(|&e| Ok((e.ln(), gadc_mi_rate(t, e)? / (e * e))))
        .collect::<Result<_>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("eps values must differ".into()));
    }
    let beta = sxy / sxx;
    Ok((my - beta * mx, beta))
}

/// A function of the spectrum, symmetric under permutations.
pub trait SpectralFn: Sync {
    fn value(&self, lambda: &[f64]) -> f64;
    fn grad(&self, lambda: &[f64]) -> Vec<f64>;
    fn hess(&self, lambda: &[f64]) -> DMatrix<f64>;
}

/// `f(lambda) = sum_k g(lambda_k)`.
#[derive(Clone, Copy)]
pub struct Separable {
    pub g: fn(f64) -> f64,
    pub dg: fn(f64) -> f64,
    pub d2g: fn(f64) -> f64,
}

impl Separable {
    /// `-sum lambda ln lambda`.
    pub fn entropy() -> Self {
        Self { g: |x| -x * x.ln(), dg: |x| -x.ln() - 1.0, d2g: |x| -1.0 / x }
    }

    pub fn trace() -> Self {
        Self { g: |x| x, dg: |_| 1.0, d2g: |_| 0.0 }
    }

    pub fn sum_squares() -> Self {
        Self { g: |x| x * x, dg: |x| 2.0 * x, d2g: |_| 2.0 }
    }
}

impl SpectralFn for Separable {
    fn value(&self, lambda: &[f64]) -> f64 {
        lambda.iter().map(|&x| (self.g)(x)).sum()
    }

    fn grad(&self, lambda: &[f64]) -> Vec<f64> {
        lambda.iter().map(|&x| (self.dg)(x)).collect()
    }

    fn hess(&self, lambda: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            lambda.len(),
            lambda.iter().map(|&x| (self.d2g)(x)),
        ))
    }
}

/// Second derivatives `d^2 A / da_i da_j` of a parametrized family.
pub type SecondDerivative<'a> = &'a dyn Fn(usize, usize) -> CMatrix;

/// Gradient and Hessian of `f(A(a))` at a point from the eigen-decomposition
/// of `A` and the supplied derivatives of the family.
pub fn spectral_derivs(
    f: &dyn SpectralFn,
    a: &CMatrix,
    first: &[CMatrix],
    second: Option<SecondDerivative>,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eig = qmat::herm_eig(a)?;
    let lam = &eig.values;
    let n = lam.len();
    let p = first.len();
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (lam[i] - lam[j]).abs();
            if gap > DEGENERACY_TOL && gap < CROSSING_GAP {
                return Err(Error::CrossingTooClose(gap));
            }
        }
    }
    let u = &eig.vectors;
    let rotated: Vec<CMatrix> = first.iter().map(|d| u.adjoint() * d * u).collect();
    let df = f.grad(lam);
    let d2f = f.hess(lam);
    let h: Vec<Vec<f64>> = rotated.iter().map(|b| (0..n).map(|k| b[(k, k)].re).collect()).collect();
    let grad: Vec<f64> = h.iter().map(|hi| hi.iter().zip(&df).map(|(x, y)| x * y).sum()).collect();
    let mut hess = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let (bi, bj) = (&rotated[i], &rotated[j]);
            let mut acc = 0.0;
            for k in 0..n {
                for l in 0..n {
                    acc += d2f[(k, l)] * h[i][k] * h[j][l];
                }
            }
            if let Some(sec) = second {
                let bij = u.adjoint() * sec(i, j) * u;
                for k in 0..n {
                    acc += df[k] * bij[(k, k)].re;
                }
            }
            for k in 0..n {
                for l in (k + 1)..n {
                    let alpha = 2.0 * (bi[(k, l)] * bj[(l, k)]).re;
                    if (lam[k] - lam[l]).abs() <= DEGENERACY_TOL {
                        acc += alpha * d2f[(k, k)];
                    } else {
                        acc += alpha * (df[k] - df[l]) / (lam[k] - lam[l]);
                    }
                }
            }
            hess[(i, j)] = acc;
            hess[(j, i)] = acc;
        }
    }
    Ok((grad, hess))
}

/// The nine non-trivial Hessian eigenvalues of `dI/dt` at
/// `1/4 + a12 sigma_z ⊗ 1`, in the order `32 k (16a^2+1)/(16a^2-1)` for the
/// pairs `(yz, xz, xy)` followed by `-8 k atanh(4a)/a` twice per pair.
pub fn hessian_eigs_closed(gx: f64, gy: f64, gz: f64, a12: f64) -> Result<[f64; 9]> {
    if !(a12.abs() < 0.25) {
        return Err(Error::BoundaryState(a12));
    }
    let s = 16.0 * a12 * a12;
    let ratio = (s + 1.0) / (s - 1.0);
    let at = if a12 == 0.0 { 4.0 } else { (4.0 * a12).atanh() / a12 };
    let pairs = [gy + gz, gx + gz, gx + gy];
    let mut out = [0.0; 9];
    for (k, &pk) in pairs.iter().enumerate() {
        out[k] = 32.0 * pk * ratio;
        out[3 + 2 * k] = -8.0 * pk * at;
        out[4 + 2 * k] = -8.0 * pk * at;
    }
    Ok(out)
}

/// Decay rates of the coordinates of `chi ⊗ sigma_{x,y,z}`,
/// `a_1' = -(gamma_y + gamma_z) a_1` and cyclic, as used by the closed forms.
pub fn coordinate_decay(gamma: [f64; 3]) -> [f64; 3] {
    [gamma[1] + gamma[2], gamma[0] + gamma[2], gamma[0] + gamma[1]]
}

fn pauli_product(i: usize) -> CMatrix {
    qmat::kron(&qmat::pauli(i / 4), &qmat::pauli(i % 4))
}

/// Hessian of `dI/dt` in the coordinates `a_i = Tr(rho e_i) / 4`,
/// `e_{4m+n} = sigma_m ⊗ sigma_n` (`i = 1..15`), at the stationary state
/// `1/4 + a12 sigma_z ⊗ 1`, with coordinate decay rates `kappa`.
pub fn mi_rate_hessian(kappa: [f64; 3], a12: f64) -> Result<DMatrix<f64>> {
    if !(a12.abs() < 0.25) {
        return Err(Error::BoundaryState(a12));
    }
    let ent = Separable::entropy();
    let rho0 = qmat::identity(4).unscale(4.0) + pauli_product(12).scale(a12);
    let rho_a = qmat::partial_trace(&rho0, &[2, 2], &[0])?;
    let rho_s = qmat::partial_trace(&rho0, &[2, 2], &[1])?;
    let e: Vec<CMatrix> = (1..16).map(pauli_product).collect();
    let da: Vec<CMatrix> = e.iter().map(|x| qmat::partial_trace(x, &[2, 2], &[0])).collect::<Result<_>>()?;
    let ds: Vec<CMatrix> = e.iter().map(|x| qmat::partial_trace(x, &[2, 2], &[1])).collect::<Result<_>>()?;
    let (_, h_ab) = spectral_derivs(&ent, &rho0, &e, None)?;
    let (_, h_a) = spectral_derivs(&ent, &rho_a, &da, None)?;
    let (_, h_s) = spectral_derivs(&ent, &rho_s, &ds, None)?;
    let hess_i = h_a + h_s - h_ab;
    // d a_i / dt = g_i a_i; the gradient term drops out since g a0 = 0
    let g = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        15,
        (1..16).map(|i| if i % 4 == 0 { 0.0 } else { -kappa[i % 4 - 1] }),
    ));
    Ok(&hess_i * &g + &g * &hess_i)
}

/// Eigenvalues of [`mi_rate_hessian`], ascending.
pub fn mi_rate_hessian_eigs(kappa: [f64; 3], a12: f64) -> Result<Vec<f64>> {
    let h = mi_rate_hessian(kappa, a12)?;
    let mut v: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `d lambda / ds` for `lambda = |(a1, a2, a3)|` in the zero eigenspace.
pub fn zero_space_lambda_deriv(a: [f64; 3], gx: f64, gy: f64, gz: f64) -> Result<f64> {
    let norm = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let k = coordinate_decay([gx, gy, gz]);
    Ok(-(a[0] * a[0] * k[0] + a[1] * a[1] * k[1] + a[2] * a[2] * k[2]) / norm)
}

/// `(|0><0| ⊗ (p phi + (1-p)/2) + |1><1| ⊗ (p phi_perp + (1-p)/2)) / 2`.
pub fn unital_witness_state(phi: &CVector, p: f64) -> Result<DensityState> {
    if phi.len() != 2 {
        return Err(Error::DimMismatch("phi must be a qubit state".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p = {p}")));
    }
    let norm = phi.norm();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let v = phi.unscale(norm);
    let perp = CVector::from_vec(vec![-v[1].conj(), v[0].conj()]);
    let mix = qmat::identity(2).scale((1.0 - p) / 2.0);
    let s0 = qmat::projector(&v).scale(p) + &mix;
    let s1 = qmat::projector(&perp).scale(p) + &mix;
    let m = (qmat::kron(&qmat::unit(2, 0, 0), &s0) + qmat::kron(&qmat::unit(2, 1, 1), &s1)).unscale(2.0);
    DensityState::new(m, &[2, 2])
}

/// Closed form of the mutual information of the unital witness state after a
/// map that sends `phi` to eigenvalues `(1 + e, -e)`.
pub fn unital_witness_mi(p: f64, e: f64) -> f64 {
    let a = (1.0 + p) / 2.0 + p * e;
    let b = (1.0 - p) / 2.0 - p * e;
    let xlx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    xlx(a) + xlx(b) + std::f64::consts::LN_2
}
