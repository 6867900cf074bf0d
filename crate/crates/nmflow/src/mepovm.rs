//! Maximally entropic two-outcome measurements and the correlation
//! measures `C_A^(2)`, `C_B^(2)`, `C^(2)`.
//!
//! A two-outcome POVM is parametrized by `X = P_1 - P_2`, so that
//! `-1 <= X <= 1` and the ME condition reads `Tr(rho_A X) = 0`. The measure
//! is `C_A^(2) = ||Tr_A(rho (X ⊗ 1))||_1 / 2` maximized over such `X`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channels::{self, QubitDynamics, RateChannel};
use crate::divisibility;
use crate::error::{Error, Result};
use crate::qmat::{self, CMatrix, DensityState, ZERO};
use num_complex::Complex64 as C64;

/// PSD slack for POVM effects.
pub const EFFECT_TOL: f64 = 1e-10;
/// Tolerance on the equal-probability condition.
pub const ME_TOL: f64 = 1e-9;
/// Purity above which the measured marginal counts as pure.
const PURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Povm {
    effects: Vec<CMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = effects.first() else {
            return Err(Error::InvalidArgument("POVM without effects".into()));
        };
        let d = first.nrows();
        let mut total = qmat::zeros(d);
        for e in &effects {
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::DimMismatch("effects of different dimension".into()));
            }
            let lmin = qmat::min_eigval(e)?;
            if lmin < -EFFECT_TOL {
                return Err(Error::InvalidArgument(format!("effect eigenvalue {lmin:.3e}")));
            }
            total += e;
        }
        let defect = qmat::max_abs(&(total - qmat::identity(d)));
        if defect > EFFECT_TOL {
            return Err(Error::InvalidArgument(format!("completeness defect {defect:.3e}")));
        }
        Ok(Self { effects })
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    pub fn probabilities(&self, rho: &CMatrix) -> Vec<f64> {
        self.effects.iter().map(|e| qmat::trace_product(rho, e).re).collect()
    }
}

/// Two-outcome POVM with uniform outcome distribution on `reference`.
#[derive(Debug, Clone)]
pub struct MePovm2 {
    povm: Povm,
    reference: CMatrix,
}

impl MePovm2 {
    pub fn new(p1: CMatrix, reference: &CMatrix) -> Result<Self> {
        let d = p1.nrows();
        let p2 = qmat::identity(d) - &p1;
        let povm = Povm::new(vec![p1, p2])?;
        let probs = povm.probabilities(reference);
        if (probs[0] - 0.5).abs() > ME_TOL {
            return Err(Error::InvalidArgument(format!(
                "outcome probabilities {probs:?} are not uniform"
            )));
        }
        Ok(Self { povm, reference: reference.clone() })
    }

    /// From `X = P_1 - P_2`.
    pub fn from_x(x: &CMatrix, reference: &CMatrix) -> Result<Self> {
        let d = x.nrows();
        Self::new((qmat::identity(d) + x).unscale(2.0), reference)
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn p1(&self) -> &CMatrix {
        &self.povm.effects[0]
    }

    pub fn p2(&self) -> &CMatrix {
        &self.povm.effects[1]
    }

    pub fn x(&self) -> CMatrix {
        self.p1() - self.p2()
    }

    pub fn reference(&self) -> &CMatrix {
        &self.reference
    }

    /// `|Tr(rho P_1) - 1/2|`.
    pub fn me_defect(&self) -> f64 {
        (qmat::trace_product(&self.reference, self.p1()).re - 0.5).abs()
    }
}

/// Two-outcome ME-POVM diagonal in the eigenbasis of `rho_a`: fill
/// eigenvectors in descending order into `P_1` until half the weight is
/// reached, splitting the crossing one with weight `omega`.
pub fn construct_me_povm(rho_a: &CMatrix) -> Result<MePovm2> {
    let eig = qmat::herm_eig(rho_a)?;
    let d = eig.values.len();
    let mut weights = vec![0.0; d];
    let mut below = 0.0;
    for (k, &pi) in eig.values.iter().enumerate() {
        let pi = pi.max(0.0);
        if below + pi > 0.5 {
            weights[k] = (0.5 - below) / pi;
            break;
        }
        weights[k] = 1.0;
        below += pi;
    }
    let p1 = &eig.vectors * qmat::real_diag(&weights) * eig.vectors.adjoint();
    MePovm2::new(qmat::hermitize(&p1), rho_a)
}

/// Closed form on probe states, `||rho' - rho''||_1 / 4`.
pub fn c2_closed_probe(rho1: &DensityState, rho2: &DensityState) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimMismatch("probe pair of different dimension".into()));
    }
    Ok(0.25 * qmat::trace_norm(&(rho1.matrix() - rho2.matrix()))?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum C2Diagnostic {
    /// Measured marginal is pure; every ME-POVM leaves identical conditional states.
    PureMarginal,
    /// A restart hit the iteration cap before the gain fell below tolerance.
    IterationLimit { restart: usize, gain: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct SeeSawOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop once one sweep gains less than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SeeSawOptions {
    fn default() -> Self {
        Self { restarts: 16, max_iter: 2000, tol: 1e-10, seed: 0x5EE5A3 }
    }
}

#[derive(Debug, Clone)]
pub struct C2Result {
    pub value: f64,
    pub povm: MePovm2,
    pub diagnostics: Vec<C2Diagnostic>,
}

/// The state regrouped as `[d_measured, d_other]`.
#[derive(Debug, Clone)]
pub struct Bipartite {
    rho: CMatrix,
    da: usize,
    db: usize,
}

impl Bipartite {
    /// `measured` lists the subsystems on the measured side.
    pub fn new(rho: &DensityState, measured: &[usize]) -> Result<Self> {
        let n = rho.dims().len();
        if measured.is_empty() || measured.iter().any(|&k| k >= n) {
            return Err(Error::DimMismatch(format!("split {measured:?} for dims {:?}", rho.dims())));
        }
        let rest: Vec<usize> = (0..n).filter(|k| !measured.contains(k)).collect();
        if rest.is_empty() {
            return Err(Error::DimMismatch("split leaves the other side empty".into()));
        }
        let perm: Vec<usize> = measured.iter().chain(&rest).copied().collect();
        let m = qmat::permute_subsystems(rho.matrix(), rho.dims(), &perm)?;
        let da = measured.iter().map(|&k| rho.dims()[k]).product();
        let db = rest.iter().map(|&k| rho.dims()[k]).product();
        Ok(Self { rho: m, da, db })
    }

    pub fn measured_dim(&self) -> usize {
        self.da
    }

    pub fn other_dim(&self) -> usize {
        self.db
    }

    pub fn marginal_measured(&self) -> CMatrix {
        self.conditional_dual(&qmat::identity(self.db))
    }

    /// `Tr_A(rho (X ⊗ 1))`.
    pub fn conditional(&self, x: &CMatrix) -> CMatrix {
        let (da, db) = (self.da, self.db);
        let mut out = qmat::zeros(db);
        for a in 0..da {
            for a2 in 0..da {
                let w = x[(a2, a)];
                if w == ZERO {
                    continue;
                }
                for b in 0..db {
                    for b2 in 0..db {
                        out[(b, b2)] += self.rho[(a * db + b, a2 * db + b2)] * w;
                    }
                }
            }
        }
        out
    }

    /// `Tr_B(rho (1 ⊗ Y))`.
    pub fn conditional_dual(&self, y: &CMatrix) -> CMatrix {
        let (da, db) = (self.da, self.db);
        let mut out = qmat::zeros(da);
        for a in 0..da {
            for a2 in 0..da {
                let mut acc = ZERO;
                for b in 0..db {
                    for b2 in 0..db {
                        acc += self.rho[(a * db + b, a2 * db + b2)] * y[(b2, b)];
                    }
                }
                out[(a, a2)] = acc;
            }
        }
        out
    }

    /// `||Tr_A(rho (X ⊗ 1))||_1 / 2` for a feasible `X`.
    pub fn value(&self, x: &CMatrix) -> Result<f64> {
        Ok(0.5 * qmat::trace_norm(&qmat::hermitize(&self.conditional(x)))?)
    }
}

fn sign_of(m: &CMatrix) -> Result<CMatrix> {
    let eig = qmat::herm_eig(&qmat::hermitize(m))?;
    let scale = eig.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let floor = 1e-14 * scale;
    Ok(eig.apply_fn(|v| if v > floor { 1.0 } else if v < -floor { -1.0 } else { 0.0 }))
}

/// `argmax Tr(X M)` over `-1 <= X <= 1`, `Tr(rho_a X) = 0`, via the
/// multiplier `mu` in `X = sign(M - mu rho_a)`.
pub fn best_response(m: &CMatrix, rho_a: &CMatrix) -> Result<CMatrix> {
    let f = |mu: f64| -> Result<(CMatrix, f64)> {
        let x = sign_of(&(m - rho_a.scale(mu)))?;
        let tr = qmat::trace_product(rho_a, &x).re;
        Ok((x, tr))
    };
    let scale = qmat::max_abs(m).max(1e-300);
    let (mut lo, mut hi) = (-scale, scale);
    let (mut x_lo, mut f_lo) = f(lo)?;
    while f_lo < 0.0 {
        lo *= 2.0;
        (x_lo, f_lo) = f(lo)?;
        if lo < -1e300 {
            return Err(Error::InvalidArgument("multiplier bracket diverged".into()));
        }
    }
    let (mut x_hi, mut f_hi) = f(hi)?;
    while f_hi > 0.0 {
        hi *= 2.0;
        (x_hi, f_hi) = f(hi)?;
        if hi > 1e300 {
            return Err(Error::InvalidArgument("multiplier bracket diverged".into()));
        }
    }
    for _ in 0..200 {
        if f_lo == 0.0 {
            return Ok(x_lo);
        }
        if f_hi == 0.0 {
            return Ok(x_hi);
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (x_mid, f_mid) = f(mid)?;
        if f_mid >= 0.0 {
            (lo, x_lo, f_lo) = (mid, x_mid, f_mid);
        } else {
            (hi, x_hi, f_hi) = (mid, x_mid, f_mid);
        }
    }
    if f_lo == 0.0 {
        return Ok(x_lo);
    }
    let theta = -f_hi / (f_lo - f_hi);
    Ok(x_lo.scale(theta) + x_hi.scale(1.0 - theta))
}

fn random_hermitian(d: usize, rng: &mut impl Rng) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    qmat::hermitize(&g)
}

/// A random feasible ME-POVM for `rho_a` (best response to a random
/// Hermitian direction).
pub fn random_me_povm(rho_a: &CMatrix, rng: &mut impl Rng) -> Result<MePovm2> {
    let m = random_hermitian(rho_a.nrows(), rng);
    MePovm2::from_x(&best_response(&m, rho_a)?, rho_a)
}

struct Run {
    value: f64,
    x: CMatrix,
    capped: Option<f64>,
}

fn see_saw(bp: &Bipartite, rho_a: &CMatrix, start: CMatrix, opts: &SeeSawOptions) -> Result<Run> {
    let mut x = start;
    let mut value = bp.value(&x)?;
    for _ in 0..opts.max_iter {
        let y = sign_of(&bp.conditional(&x))?;
        let next = best_response(&bp.conditional_dual(&y), rho_a)?;
        let next_value = bp.value(&next)?;
        let gain = next_value - value;
        if gain > 0.0 {
            x = next;
            value = next_value;
        }
        if gain < opts.tol {
            return Ok(Run { value, x, capped: None });
        }
    }
    let y = sign_of(&bp.conditional(&x))?;
    let gain = bp.value(&best_response(&bp.conditional_dual(&y), rho_a)?)? - value;
    Ok(Run { value, x, capped: Some(gain) })
}

/// See-saw from explicit starting points plus `opts.restarts` random ones.
pub fn c2_with_starts(
    rho: &DensityState,
    measured: &[usize],
    starts: &[CMatrix],
    opts: &SeeSawOptions,
) -> Result<C2Result> {
    let bp = Bipartite::new(rho, measured)?;
    let rho_a = qmat::hermitize(&bp.marginal_measured());
    let purity = qmat::trace_product(&rho_a, &rho_a).re;
    let me_start = construct_me_povm(&rho_a)?;
    if purity > 1.0 - PURE_TOL {
        let value = bp.value(&me_start.x())?;
        return Ok(C2Result { value, povm: me_start, diagnostics: vec![C2Diagnostic::PureMarginal] });
    }
    let mut inits: Vec<CMatrix> = vec![me_start.x()];
    for s in starts {
        if s.nrows() != bp.da {
            return Err(Error::DimMismatch("starting point has the wrong dimension".into()));
        }
        inits.push(s.clone());
    }
    for k in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(k as u64);
        let m = random_hermitian(bp.da, &mut rng);
        inits.push(best_response(&m, &rho_a)?);
    }
    let runs: Vec<Result<Run>> =
        inits.into_par_iter().map(|x0| see_saw(&bp, &rho_a, x0, opts)).collect();
    let mut best: Option<Run> = None;
    let mut diagnostics = Vec::new();
    for (k, run) in runs.into_iter().enumerate() {
        let run = run?;
        if let Some(gain) = run.capped {
            diagnostics.push(C2Diagnostic::IterationLimit { restart: k, gain });
        }
        // earliest restart wins ties
        if best.as_ref().is_none_or(|b| run.value > b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least the constructed start runs");
    let povm = MePovm2::from_x(&best.x, &rho_a)?;
    Ok(C2Result { value: best.value, povm, diagnostics })
}

/// `C^(2)` with the ME-POVM on the subsystems in `measured`.
pub fn c2_measured(rho: &DensityState, measured: &[usize], opts: &SeeSawOptions) -> Result<C2Result> {
    c2_with_starts(rho, measured, &[], opts)
}

/// `C_A^(2)`: Alice (the subsystems in `side_a`) measures.
pub fn c2_a(rho: &DensityState, side_a: &[usize]) -> Result<C2Result> {
    c2_measured(rho, side_a, &SeeSawOptions::default())
}

/// `C_B^(2)`: the complement of `side_a` measures.
pub fn c2_b(rho: &DensityState, side_a: &[usize]) -> Result<C2Result> {
    let n = rho.dims().len();
    let side_b: Vec<usize> = (0..n).filter(|k| !side_a.contains(k)).collect();
    c2_measured(rho, &side_b, &SeeSawOptions::default())
}

/// `max(C_A^(2), C_B^(2))`.
pub fn c2(rho: &DensityState, side_a: &[usize]) -> Result<f64> {
    Ok(c2_a(rho, side_a)?.value.max(c2_b(rho, side_a)?.value))
}

/// Sufficient number of ME-POVM outcomes,
/// `min_{z in [1/2, 1]} max(d_A / z, d_B (3z - 1) / z)`.
pub fn povm_count_bound(da: usize, db: usize) -> Result<f64> {
    if da < 2 || db < 2 {
        return Err(Error::InvalidArgument(format!("dimensions ({da}, {db}) must be >= 2")));
    }
    let (a, b) = (da as f64, db as f64);
    Ok(if 2.0 * a <= b {
        b
    } else if a >= 2.0 * b {
        a
    } else {
        3.0 * a * b / (a + b)
    })
}

/// Classical-quantum probe `(|0><0| ⊗ rho'(t) + |1><1| ⊗ rho'')/2` on
/// `A(2) ⊗ A'(3) ⊗ S(2)` for the quasi-eternal family with
/// `lambda_xy(t) = (e^{-t} cosh(t - t0) / cosh t0)^{alpha/2}`, `lambda_z = e^{-alpha t}`.
#[derive(Debug, Clone)]
pub struct ProbeState {
    pub alpha: f64,
    pub t0: f64,
    pub tau: f64,
    pub p: f64,
    channel: RateChannel,
    rho_prime: DensityState,
    rho_second: DensityState,
    state: DensityState,
}

/// Embeds a qubit operator on the levels `{0, 1}` of a qutrit.
fn embed_qutrit(m: &CMatrix) -> CMatrix {
    let mut out = qmat::zeros(3);
    out.view_mut((0, 0), (2, 2)).copy_from(m);
    out
}

fn probe_pair_coefficients(cxy: f64, cz: f64) -> CMatrix {
    let sx = embed_qutrit(&qmat::pauli(1));
    let sy = embed_qutrit(&qmat::pauli(2));
    let sz = embed_qutrit(&qmat::pauli(3));
    let low = embed_qutrit(&qmat::identity(2));
    (qmat::kron(&low, &qmat::identity(2))
        + (qmat::kron(&sx, &qmat::pauli(1)) - qmat::kron(&sy, &qmat::pauli(2))).scale(cxy)
        + qmat::kron(&sz, &qmat::pauli(3)).scale(cz))
    .unscale(4.0)
}

fn cq_state(rho1: &CMatrix, rho2: &CMatrix) -> CMatrix {
    (qmat::kron(&qmat::unit(2, 0, 0), rho1) + qmat::kron(&qmat::unit(2, 1, 1), rho2)).unscale(2.0)
}

pub fn build_probe(alpha: f64, t0: f64, tau: f64, p: f64) -> Result<ProbeState> {
    if !(alpha > 0.0) || !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha}, p = {p}")));
    }
    if tau <= t0 {
        return Err(Error::NotYetNonMarkovian { tau, t0 });
    }
    let threshold = divisibility::physicality_threshold(0.5 * alpha)?;
    if t0 < threshold {
        return Err(Error::Unphysical(format!("t0 = {t0} below the threshold {threshold}")));
    }
    let bound = (-alpha * tau).exp();
    if p >= bound {
        return Err(Error::UnphysicalProbe { p, bound });
    }
    let channel = RateChannel::quasi_eternal(0.5 * alpha, t0);
    let [lx, _, lz] = channel.lambdas(tau);
    let rho_prime = DensityState::new(probe_pair_coefficients(p / lx, p / lz), &[3, 2])?;
    let low = embed_qutrit(&qmat::identity(2)).scale(0.5 * (1.0 - p)) + qmat::unit(3, 2, 2).scale(p);
    let rho_second = DensityState::new(qmat::kron(&low, &qmat::identity(2).unscale(2.0)), &[3, 2])?;
    let state = DensityState::new(cq_state(rho_prime.matrix(), rho_second.matrix()), &[2, 3, 2])?;
    Ok(ProbeState { alpha, t0, tau, p, channel, rho_prime, rho_second, state })
}

impl ProbeState {
    pub fn channel(&self) -> &RateChannel {
        &self.channel
    }

    /// `rho_AB(0)`.
    pub fn initial(&self) -> &DensityState {
        &self.state
    }

    /// `(rho'_B(0), rho''_B(0))`.
    pub fn pair(&self) -> (&DensityState, &DensityState) {
        (&self.rho_prime, &self.rho_second)
    }

    /// `(rho'_B(t), rho''_B(t))` under `1 ⊗ Lambda_t` on `S`.
    pub fn pair_at(&self, t: f64) -> Result<(DensityState, DensityState)> {
        let map = self.channel.map_at(t)?;
        Ok((channels::apply(&map, &self.rho_prime, 1)?, channels::apply(&map, &self.rho_second, 1)?))
    }

    /// `rho_AB(t)`.
    pub fn state_at(&self, t: f64) -> Result<DensityState> {
        let map = self.channel.map_at(t)?;
        channels::apply(&map, &self.state, 2)
    }

    /// `||rho'(t) - rho''(t)||_1 / 4`.
    pub fn c2_closed(&self, t: f64) -> Result<f64> {
        let (a, b) = self.pair_at(t)?;
        c2_closed_probe(&a, &b)
    }

    /// `rho'_B(tau)` as written down before inverting the dynamics.
    pub fn target_at_tau(&self) -> CMatrix {
        probe_pair_coefficients(self.p, self.p)
    }
}
