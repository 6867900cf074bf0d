//! Entropic and distinguishability measures. Logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::channels::RateChannel;
use crate::error::{Error, Result};
use crate::qmat::{self, CMatrix, DensityState};

/// Eigenvalues below this contribute nothing to the entropy.
pub const ENTROPY_FLOOR: f64 = 1e-14;
/// Commutator tolerance for the commuting-ensemble solver.
pub const COMMUTE_TOL: f64 = 1e-9;
const CQ_TOL: f64 = 1e-10;
const DP_FLOOR: f64 = 1e-13;

pub fn spectrum_entropy(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|&&x| x > ENTROPY_FLOOR)
        .map(|&x| -x * x.ln())
        .sum()
}

pub fn matrix_entropy(m: &CMatrix) -> Result<f64> {
    Ok(spectrum_entropy(&qmat::herm_eigvals(m)?))
}

/// Von Neumann entropy.
pub fn entropy(rho: &DensityState) -> Result<f64> {
    matrix_entropy(rho.matrix())
}

fn complement(n: usize, side: &[usize]) -> Vec<usize> {
    (0..n).filter(|k| !side.contains(k)).collect()
}

fn check_split(rho: &DensityState, side_a: &[usize]) -> Result<Vec<usize>> {
    let n = rho.dims().len();
    if side_a.is_empty() || side_a.iter().any(|&k| k >= n) {
        return Err(Error::DimMismatch(format!(
            "split {side_a:?} for dims {:?}",
            rho.dims()
        )));
    }
    let b = complement(n, side_a);
    if b.is_empty() {
        return Err(Error::DimMismatch("split leaves side B empty".into()));
    }
    Ok(b)
}

/// `I(A:B) = S(A) + S(B) - S(AB)` with `A` the listed subsystems.
pub fn mutual_information(rho: &DensityState, side_a: &[usize]) -> Result<f64> {
    let side_b = check_split(rho, side_a)?;
    let sa = entropy(&rho.reduced(side_a)?)?;
    let sb = entropy(&rho.reduced(&side_b)?)?;
    Ok(sa + sb - entropy(rho)?)
}

/// `(||rho^{T_A}||_1 - 1) / 2`.
pub fn negativity(rho: &DensityState, side_a: &[usize]) -> Result<f64> {
    check_split(rho, side_a)?;
    let mut m = rho.matrix().clone();
    for &k in side_a {
        m = qmat::partial_transpose(&m, rho.dims(), k)?;
    }
    Ok(0.5 * (qmat::trace_norm(&m)? - 1.0))
}

pub fn trace_distance(rho: &DensityState, sigma: &DensityState) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch("states of different dimension".into()));
    }
    Ok(0.5 * qmat::trace_norm(&(rho.matrix() - sigma.matrix()))?)
}

/// Helstrom success probability `(1 + ||p1 rho1 - p2 rho2||_1) / 2`.
pub fn guessing_two_weighted(p1: f64, rho1: &CMatrix, p2: f64, rho2: &CMatrix) -> Result<f64> {
    if rho1.nrows() != rho2.nrows() {
        return Err(Error::DimMismatch("states of different dimension".into()));
    }
    Ok(0.5 * (1.0 + qmat::trace_norm(&(rho1.scale(p1) - rho2.scale(p2)))?))
}

/// Equiprobable pair: `(2 + ||rho1 - rho2||_1) / 4`.
pub fn guessing_two(rho1: &DensityState, rho2: &DensityState) -> Result<f64> {
    guessing_two_weighted(0.5, rho1.matrix(), 0.5, rho2.matrix())
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub probs: Vec<f64>,
    pub states: Vec<CMatrix>,
}

impl Ensemble {
    pub fn new(probs: Vec<f64>, states: Vec<CMatrix>) -> Result<Self> {
        if probs.len() != states.len() || probs.is_empty() {
            return Err(Error::DimMismatch("one probability per state".into()));
        }
        let d = states[0].nrows();
        if states.iter().any(|s| s.nrows() != d || s.ncols() != d) {
            return Err(Error::DimMismatch("states of different dimension".into()));
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!("probabilities {probs:?}")));
        }
        Ok(Self { probs, states })
    }

    pub fn dim(&self) -> usize {
        self.states[0].nrows()
    }
}

#[derive(Debug, Clone)]
pub struct CommutingGuess {
    pub value: f64,
    /// Dual certificate `K >= p_i rho_i` with `Tr K = value`.
    pub certificate: CMatrix,
}

/// Optimal guessing probability of a pairwise-commuting ensemble,
/// `sum_j max_i p_i lambda_ij` in a common eigenbasis.
pub fn guessing_commuting(ens: &Ensemble) -> Result<CommutingGuess> {
    let n = ens.states.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max(qmat::commutator_norm(&ens.states[i], &ens.states[j]));
        }
    }
    if worst > COMMUTE_TOL {
        return Err(Error::NonCommuting(worst));
    }
    // a generic combination separates every joint eigenspace
    let mut mix = qmat::zeros(ens.dim());
    for (k, s) in ens.states.iter().enumerate() {
        mix += s.scale(1.0 + k as f64 * std::f64::consts::SQRT_2);
    }
    let basis = qmat::herm_eig(&mix)?.vectors;
    let d = ens.dim();
    let mut best = vec![0.0; d];
    for j in 0..d {
        let u = basis.column(j);
        best[j] = ens
            .probs
            .iter()
            .zip(&ens.states)
            .map(|(p, s)| p * (u.adjoint() * s * u)[(0, 0)].re)
            .fold(f64::NEG_INFINITY, f64::max);
    }
    let certificate = &basis * qmat::real_diag(&best) * basis.adjoint();
    Ok(CommutingGuess { value: best.iter().sum(), certificate })
}

/// `Tr K` if `K - p_i rho_i >= -tol` for every member, `None` otherwise.
pub fn verify_certificate(ens: &Ensemble, k: &CMatrix, tol: f64) -> Result<Option<f64>> {
    for (p, s) in ens.probs.iter().zip(&ens.states) {
        if qmat::min_eigval(&(k - s.scale(*p)))? < -tol {
            return Ok(None);
        }
    }
    Ok(Some(k.trace().re))
}

/// Guessing probability of the classical register for a classical-quantum
/// state on `[d_C, d_Q]`.
pub fn singlet_fraction_cq(rho: &DensityState) -> Result<f64> {
    let dims = rho.dims();
    if dims.len() != 2 {
        return Err(Error::DimMismatch(format!("expected two subsystems, got {dims:?}")));
    }
    let (dc, dq) = (dims[0], dims[1]);
    let m = rho.matrix();
    let mut off: f64 = 0.0;
    for a in 0..dc {
        for b in 0..dc {
            if a == b {
                continue;
            }
            for i in 0..dq {
                for j in 0..dq {
                    off = off.max(m[(a * dq + i, b * dq + j)].norm());
                }
            }
        }
    }
    if off > CQ_TOL {
        return Err(Error::NotClassicalQuantum(off));
    }
    let mut probs = Vec::new();
    let mut states = Vec::new();
    for a in 0..dc {
        let block = m.view((a * dq, a * dq), (dq, dq)).into_owned();
        let p = block.trace().re;
        if p > 0.0 {
            probs.push(p);
            states.push(block.unscale(p));
        }
    }
    match probs.len() {
        0 => Err(Error::NotAState("empty classical register".into())),
        1 => Ok(1.0),
        2 => guessing_two_weighted(probs[0], &states[0], probs[1], &states[1]),
        _ => {
            let total: f64 = probs.iter().sum();
            let probs = probs.iter().map(|p| p / total).collect();
            Ok(guessing_commuting(&Ensemble::new(probs, states)?)?.value)
        }
    }
}

/// Mutual information of `(1 ⊗ Lambda_t)(phi+)`, `2 ln 2 - H(p)`.
pub fn bell_mi(ch: &RateChannel, t: f64) -> Result<f64> {
    let p = ch.probs(t)?;
    Ok(2.0 * std::f64::consts::LN_2 - spectrum_entropy(&p))
}

/// `dI/dt = sum_{k != 0} (dp_k/dt) ln(p_k / p_0)` for the evolved Bell state.
pub fn bell_mi_derivative(ch: &RateChannel, t: f64) -> Result<f64> {
    let p = ch.probs(t)?;
    let dp = ch.probs_derivative(t);
    if p[0] <= 0.0 {
        return Err(Error::DegenerateLog { index: 0, value: p[0] });
    }
    let mut acc = 0.0;
    for k in 1..4 {
        // identically vanishing weights (e.g. p_z of the eternal model)
        if dp[k].abs() <= DP_FLOOR {
            continue;
        }
        if p[k] <= 0.0 {
            return Err(Error::DegenerateLog { index: k, value: p[k] });
        }
        acc += dp[k] * (p[k] / p[0]).ln();
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    MutualInformation,
    Negativity,
    /// `max(C_A^(2), C_B^(2))`, evaluated by `mepovm`.
    C2,
}

impl Measure {
    pub fn name(&self) -> &'static str {
        match self {
            Measure::MutualInformation => "mutual_information",
            Measure::Negativity => "negativity",
            Measure::C2 => "c2",
        }
    }
}
