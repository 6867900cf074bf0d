//! Qubit dynamical maps: random-unitary (Pauli) rate channels, the generalized
//! amplitude-damping family and single-parameter amplitude damping.
//!
//! Every family here produces maps that are diagonal in the Pauli basis up to
//! a translation along the Bloch vector, which is captured by
//! [`AffineQubitMap`].
//!
//! Pauli rates are those of the generator
//! `L_t(rho) = sum_k gamma_k(t) (sigma_k rho sigma_k - rho)`, so that
//! `A_ij(t) = exp(-2 int_0^t (gamma_i + gamma_j))`, the map scales
//! `sigma_x` by `lambda_x = A_yz` (and cyclic), and the Pauli weights are
//! `p_0 = (1 + A_xy + A_xz + A_yz)/4` etc.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{self, c, CMatrix, DensityState, OperatorBasis, ZERO};

/// Tolerance for the adaptive Simpson integrator.
pub const INTEGRAL_TOL: f64 = 1e-10;
/// Completeness tolerance for Kraus decompositions.
pub const KRAUS_TOL: f64 = 1e-10;
/// Smallest acceptable negative Pauli weight.
pub const PROB_TOL: f64 = 1e-8;

/// Stable `ln cosh x`.
pub fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// A time-dependent scalar.
#[derive(Clone)]
pub struct TimeFn(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl TimeFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn call(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

impl fmt::Debug for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TimeFn(..)")
    }
}

/// A rate (or any scalar profile) as a function of time.
#[derive(Debug, Clone)]
pub enum RateSpec {
    Constant(f64),
    /// `-(alpha/2) tanh(t - t0)`.
    QuasiEternalZ { alpha: f64, t0: f64 },
    /// Piecewise-linear interpolation of `(t, value)` samples, held constant
    /// outside the sampled range.
    Tabulated(Vec<(f64, f64)>),
    Func(TimeFn),
    Scaled(f64, Box<RateSpec>),
}

impl RateSpec {
    pub fn func(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Func(TimeFn::new(f))
    }

    pub fn tabulated(mut samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidArgument("tabulated profile needs finite samples".into()));
        }
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self::Tabulated(samples))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Constant(v) => *v,
            Self::QuasiEternalZ { alpha, t0 } => -0.5 * alpha * (t - t0).tanh(),
            Self::Tabulated(s) => interpolate(s, t),
            Self::Func(f) => f.call(t),
            Self::Scaled(k, r) => k * r.eval(t),
        }
    }

    /// Time derivative; analytic where available, central difference otherwise.
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Self::Constant(_) => 0.0,
            Self::QuasiEternalZ { alpha, t0 } => {
                let ch = (t - t0).cosh();
                -0.5 * alpha / (ch * ch)
            }
            Self::Tabulated(s) => {
                if s.len() < 2 || t < s[0].0 || t > s[s.len() - 1].0 {
                    return 0.0;
                }
                let k = segment(s, t);
                (s[k + 1].1 - s[k].1) / (s[k + 1].0 - s[k].0)
            }
            Self::Func(f) => {
                let h = 1e-6 * (1.0 + t.abs());
                (f.call(t + h) - f.call(t - h)) / (2.0 * h)
            }
            Self::Scaled(k, r) => k * r.derivative(t),
        }
    }

    /// `int_a^b rate(u) du`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match self {
            Self::Constant(v) => v * (b - a),
            Self::QuasiEternalZ { alpha, t0 } => 0.5 * alpha * (ln_cosh(a - t0) - ln_cosh(b - t0)),
            Self::Tabulated(s) => {
                let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
                let mut knots = vec![lo];
                knots.extend(s.iter().map(|p| p.0).filter(|&t| t > lo && t < hi));
                knots.push(hi);
                let f = |u: f64| interpolate(s, u);
                sign * knots
                    .windows(2)
                    .map(|w| adaptive_simpson(&f, w[0], w[1], INTEGRAL_TOL))
                    .sum::<f64>()
            }
            Self::Func(fun) => {
                let f = |u: f64| fun.call(u);
                let panels = 16;
                let h = (b - a) / panels as f64;
                (0..panels)
                    .map(|k| {
                        let lo = a + k as f64 * h;
                        adaptive_simpson(&f, lo, lo + h, INTEGRAL_TOL / panels as f64)
                    })
                    .sum()
            }
            Self::Scaled(k, r) => k * r.integral(a, b),
        }
    }
}

fn segment(s: &[(f64, f64)], t: f64) -> usize {
    match s.binary_search_by(|p| p.0.total_cmp(&t)) {
        Ok(k) => k.min(s.len() - 2),
        Err(k) => k.saturating_sub(1).min(s.len() - 2),
    }
}

fn interpolate(s: &[(f64, f64)], t: f64) -> f64 {
    if s.len() == 1 || t <= s[0].0 {
        return s[0].1;
    }
    if t >= s[s.len() - 1].0 {
        return s[s.len() - 1].1;
    }
    let k = segment(s, t);
    let (t0, v0) = s[k];
    let (t1, v1) = s[k + 1];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// A linear map on operators of a `dim`-dimensional system.
pub trait LinearMap: Sync {
    fn dim(&self) -> usize;
    fn apply_op(&self, x: &CMatrix) -> CMatrix;
}

/// Matrix `T` with `map(|a><b|) = sum_{cd} T[(c d), (a b)] |c><d|`.
pub fn superoperator(map: &dyn LinearMap) -> CMatrix {
    let d = map.dim();
    let mut t = qmat::zeros(d * d);
    for a in 0..d {
        for b in 0..d {
            let img = map.apply_op(&qmat::unit(d, a, b));
            for cc in 0..d {
                for dd in 0..d {
                    t[(cc * d + dd, a * d + b)] = img[(cc, dd)];
                }
            }
        }
    }
    t
}

/// `(1 ⊗ .. ⊗ map ⊗ .. ⊗ 1)(m)` with the map acting on `subsystem`.
pub fn apply_on_subsystem(
    map: &dyn LinearMap,
    m: &CMatrix,
    dims: &[usize],
    subsystem: usize,
) -> Result<CMatrix> {
    let n: usize = dims.iter().product();
    if subsystem >= dims.len() || dims[subsystem] != map.dim() || m.nrows() != n {
        return Err(Error::DimMismatch(format!(
            "map of dim {} on subsystem {subsystem} of {dims:?}",
            map.dim()
        )));
    }
    apply_superoperator(&superoperator(map), m, dims, subsystem)
}

/// [`apply_on_subsystem`] with a precomputed [`superoperator`].
pub fn apply_superoperator(t: &CMatrix, m: &CMatrix, dims: &[usize], subsystem: usize) -> Result<CMatrix> {
    let n: usize = dims.iter().product();
    if subsystem >= dims.len() || dims[subsystem].pow(2) != t.nrows() || m.nrows() != n {
        return Err(Error::DimMismatch(format!(
            "superoperator of size {} on subsystem {subsystem} of {dims:?}",
            t.nrows()
        )));
    }
    let d = dims[subsystem];
    let stride: usize = dims[subsystem + 1..].iter().product();
    let mut out = qmat::zeros(n);
    for i in 0..n {
        let a = (i / stride) % d;
        let ibase = i - a * stride;
        for j in 0..n {
            let x = m[(i, j)];
            if x == ZERO {
                continue;
            }
            let b = (j / stride) % d;
            let jbase = j - b * stride;
            for cc in 0..d {
                for dd in 0..d {
                    let w = t[(cc * d + dd, a * d + b)];
                    if w != ZERO {
                        out[(ibase + cc * stride, jbase + dd * stride)] += w * x;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Applies a map to one subsystem of a state, leaving the others untouched.
pub fn apply(map: &dyn LinearMap, rho: &DensityState, subsystem: usize) -> Result<DensityState> {
    let m = apply_on_subsystem(map, rho.matrix(), rho.dims(), subsystem)?;
    Ok(DensityState::new_unchecked(m, rho.dims()))
}

/// A map extended by identities on the remaining subsystems.
pub struct Extended<'a> {
    pub map: &'a dyn LinearMap,
    pub dims: Vec<usize>,
    pub subsystem: usize,
}

impl LinearMap for Extended<'_> {
    fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    fn apply_op(&self, x: &CMatrix) -> CMatrix {
        apply_on_subsystem(self.map, x, &self.dims, self.subsystem)
            .expect("extended map dimensions are fixed at construction")
    }
}

/// Unnormalized Choi matrix `sum_ab |a><b| ⊗ map(|a><b|)`.
pub fn choi(map: &dyn LinearMap) -> CMatrix {
    let d = map.dim();
    let mut out = qmat::zeros(d * d);
    for a in 0..d {
        for b in 0..d {
            let img = map.apply_op(&qmat::unit(d, a, b));
            for cc in 0..d {
                for dd in 0..d {
                    out[(a * d + cc, b * d + dd)] = img[(cc, dd)];
                }
            }
        }
    }
    out
}

/// Transfer matrix `V_ij = Tr(e_i map(e_j)) / prod(dims)` in an operator basis.
pub fn transfer(map: &dyn LinearMap, basis: &OperatorBasis) -> Result<Vec<Vec<f64>>> {
    if map.dim() != basis.dim() {
        return Err(Error::DimMismatch(format!(
            "map of dim {} against basis of dim {}",
            map.dim(),
            basis.dim()
        )));
    }
    let norm = basis.dim() as f64;
    let images: Vec<CMatrix> = basis.elements().iter().map(|e| map.apply_op(e)).collect();
    Ok(basis
        .elements()
        .iter()
        .map(|ei| {
            images
                .iter()
                .map(|img| qmat::trace_product(ei, img).re / norm)
                .collect()
        })
        .collect())
}

/// Kraus-form channel.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let d = ops.first().map(|k| k.nrows()).unwrap_or(0);
        if d == 0 || ops.iter().any(|k| k.nrows() != d || k.ncols() != d) {
            return Err(Error::DimMismatch("Kraus operators must share a square shape".into()));
        }
        let sum = ops.iter().fold(qmat::zeros(d), |acc, k| acc + k.adjoint() * k);
        let defect = qmat::max_abs(&(sum - qmat::identity(d)));
        if defect > KRAUS_TOL {
            return Err(Error::Unphysical(format!("Kraus completeness defect {defect:.3e}")));
        }
        Ok(Self { ops })
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }
}

impl LinearMap for KrausChannel {
    fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    fn apply_op(&self, x: &CMatrix) -> CMatrix {
        self.ops
            .iter()
            .fold(qmat::zeros(x.nrows()), |acc, k| acc + k * x * k.adjoint())
    }
}

/// Qubit map `1 -> 1 + t.sigma`, `sigma_i -> lambda_i sigma_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineQubitMap {
    pub lambda: [f64; 3],
    pub translation: [f64; 3],
}

impl AffineQubitMap {
    pub fn identity() -> Self {
        Self { lambda: [1.0; 3], translation: [0.0; 3] }
    }

    pub fn unital(lambda: [f64; 3]) -> Self {
        Self { lambda, translation: [0.0; 3] }
    }

    pub fn is_unital(&self) -> bool {
        self.translation == [0.0; 3]
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &AffineQubitMap) -> Self {
        let mut lambda = [0.0; 3];
        let mut translation = [0.0; 3];
        for i in 0..3 {
            lambda[i] = self.lambda[i] * first.lambda[i];
            translation[i] = self.translation[i] + self.lambda[i] * first.translation[i];
        }
        Self { lambda, translation }
    }

    /// Inverse as a linear map on operators; fails when some `lambda_i = 0`.
    pub fn inverse(&self, t: f64) -> Result<Self> {
        if self.lambda.iter().any(|l| *l == 0.0 || !l.is_finite()) {
            return Err(Error::SingularMap(t));
        }
        let mut lambda = [0.0; 3];
        let mut translation = [0.0; 3];
        for i in 0..3 {
            lambda[i] = 1.0 / self.lambda[i];
            translation[i] = -self.translation[i] / self.lambda[i];
        }
        Ok(Self { lambda, translation })
    }

    /// Output Bloch vector for input Bloch vector `r`.
    pub fn bloch(&self, r: [f64; 3]) -> [f64; 3] {
        [
            self.translation[0] + self.lambda[0] * r[0],
            self.translation[1] + self.lambda[1] * r[1],
            self.translation[2] + self.lambda[2] * r[2],
        ]
    }
}

impl LinearMap for AffineQubitMap {
    fn dim(&self) -> usize {
        2
    }

    fn apply_op(&self, x: &CMatrix) -> CMatrix {
        let x0 = 0.5 * (x[(0, 0)] + x[(1, 1)]);
        let xs = [
            0.5 * (x[(0, 1)] + x[(1, 0)]),
            0.5 * qmat::I * (x[(0, 1)] - x[(1, 0)]),
            0.5 * (x[(0, 0)] - x[(1, 1)]),
        ];
        let mut out = qmat::identity(2) * x0;
        for k in 0..3 {
            let coef = x0 * self.translation[k] + xs[k] * self.lambda[k];
            out += qmat::pauli(k + 1) * coef;
        }
        out
    }
}

/// A family of qubit dynamical maps `Lambda_t` with propagators
/// `V_{s,t} = Lambda_s ∘ Lambda_t^{-1}`.
pub trait QubitDynamics: Send + Sync {
    fn map_at(&self, t: f64) -> Result<AffineQubitMap>;

    fn intermediate(&self, t: f64, s: f64) -> Result<AffineQubitMap> {
        if t > s {
            return Err(Error::BadInterval { t, s });
        }
        let inv = self.map_at(t)?.inverse(t)?;
        Ok(self.map_at(s)?.compose(&inv))
    }

    /// Rate of a single-parameter family (dephasing, amplitude damping).
    fn single_rate(&self, _t: f64) -> Option<f64> {
        None
    }
}

const AXES: [&str; 3] = ["x", "y", "z"];

/// Random-unitary qubit channel with Pauli rates `(gamma_x, gamma_y, gamma_z)`.
#[derive(Debug, Clone)]
pub struct RateChannel {
    pub rates: [RateSpec; 3],
}

impl RateChannel {
    pub fn new(gx: RateSpec, gy: RateSpec, gz: RateSpec) -> Self {
        Self { rates: [gx, gy, gz] }
    }

    pub fn constant(g: [f64; 3]) -> Self {
        Self::new(RateSpec::Constant(g[0]), RateSpec::Constant(g[1]), RateSpec::Constant(g[2]))
    }

    /// `gamma_x = gamma_y = alpha/2`, `gamma_z = -(alpha/2) tanh(t - t0)`.
    pub fn quasi_eternal(alpha: f64, t0: f64) -> Self {
        Self::new(
            RateSpec::Constant(0.5 * alpha),
            RateSpec::Constant(0.5 * alpha),
            RateSpec::QuasiEternalZ { alpha, t0 },
        )
    }

    pub fn eternal() -> Self {
        Self::quasi_eternal(1.0, 0.0)
    }

    /// Pure dephasing: `sigma_x, sigma_y` decay as `exp(-int gamma)`, i.e.
    /// `gamma_z = gamma / 2`.
    pub fn dephasing(gamma: RateSpec) -> Self {
        Self::new(
            RateSpec::Constant(0.0),
            RateSpec::Constant(0.0),
            RateSpec::Scaled(0.5, Box::new(gamma)),
        )
    }

    /// `gamma_x = gamma_y = gamma_z = gamma`, so `lambda = exp(-4 int gamma)`.
    pub fn depolarizing(gamma: RateSpec) -> Self {
        Self::new(gamma.clone(), gamma.clone(), gamma)
    }

    fn is_dephasing(&self) -> bool {
        matches!(self.rates[0], RateSpec::Constant(x) if x == 0.0)
            && matches!(self.rates[1], RateSpec::Constant(y) if y == 0.0)
    }

    pub fn rates_at(&self, t: f64) -> [f64; 3] {
        [self.rates[0].eval(t), self.rates[1].eval(t), self.rates[2].eval(t)]
    }

    fn pair_integral(&self, i: usize, j: usize, a: f64, b: f64) -> f64 {
        self.rates[i].integral(a, b) + self.rates[j].integral(a, b)
    }

    /// `A_ij(t) = exp(-2 int_0^t (gamma_i + gamma_j))`, axes `0 = x, 1 = y, 2 = z`.
    pub fn a_ij(&self, i: usize, j: usize, t: f64) -> Result<f64> {
        if i > 2 || j > 2 || i == j {
            return Err(Error::BadAxis(i, j));
        }
        Ok((-2.0 * self.pair_integral(i, j, 0.0, t)).exp())
    }

    /// `(A_xy, A_xz, A_yz)`.
    pub fn a_all(&self, t: f64) -> [f64; 3] {
        let ix = self.rates[0].integral(0.0, t);
        let iy = self.rates[1].integral(0.0, t);
        let iz = self.rates[2].integral(0.0, t);
        [
            (-2.0 * (ix + iy)).exp(),
            (-2.0 * (ix + iz)).exp(),
            (-2.0 * (iy + iz)).exp(),
        ]
    }

    /// `lambda_x = A_yz`, `lambda_y = A_zx`, `lambda_z = A_xy`.
    pub fn lambdas(&self, t: f64) -> [f64; 3] {
        let [axy, axz, ayz] = self.a_all(t);
        [ayz, axz, axy]
    }

    /// Pauli weights `(p_0, p_x, p_y, p_z)` of `Lambda_t`.
    pub fn probs(&self, t: f64) -> Result<[f64; 4]> {
        let [axy, axz, ayz] = self.a_all(t);
        let p = [
            0.25 * (1.0 + axy + axz + ayz),
            0.25 * (1.0 - axy - axz + ayz),
            0.25 * (1.0 - axy + axz - ayz),
            0.25 * (1.0 + axy - axz - ayz),
        ];
        if let Some(k) = p.iter().position(|&x| x < -PROB_TOL) {
            return Err(Error::Unphysical(format!("p_{k} = {:.3e} at t = {t}", p[k])));
        }
        Ok(p)
    }

    /// `d p_k / dt` from `dA_ij/dt = -2 (gamma_i + gamma_j) A_ij`.
    pub fn probs_derivative(&self, t: f64) -> [f64; 4] {
        let [axy, axz, ayz] = self.a_all(t);
        let [gx, gy, gz] = self.rates_at(t);
        let dxy = -2.0 * (gx + gy) * axy;
        let dxz = -2.0 * (gx + gz) * axz;
        let dyz = -2.0 * (gy + gz) * ayz;
        [
            0.25 * (dxy + dxz + dyz),
            0.25 * (-dxy - dxz + dyz),
            0.25 * (-dxy + dxz - dyz),
            0.25 * (dxy - dxz - dyz),
        ]
    }

    pub fn axis_name(i: usize) -> &'static str {
        AXES[i]
    }
}

impl QubitDynamics for RateChannel {
    fn map_at(&self, t: f64) -> Result<AffineQubitMap> {
        Ok(AffineQubitMap::unital(self.lambdas(t)))
    }

    /// `V(sigma_x) = exp(-2 int_t^s (gamma_y + gamma_z)) sigma_x` and cyclic.
    fn intermediate(&self, t: f64, s: f64) -> Result<AffineQubitMap> {
        if t > s {
            return Err(Error::BadInterval { t, s });
        }
        Ok(AffineQubitMap::unital([
            (-2.0 * self.pair_integral(1, 2, t, s)).exp(),
            (-2.0 * self.pair_integral(0, 2, t, s)).exp(),
            (-2.0 * self.pair_integral(0, 1, t, s)).exp(),
        ]))
    }

    /// Dephasing rate `gamma = 2 gamma_z` when `gamma_x = gamma_y = 0`.
    fn single_rate(&self, t: f64) -> Option<f64> {
        self.is_dephasing().then(|| 2.0 * self.rates[2].eval(t))
    }
}

/// Generalized amplitude damping with `s(t) = cos^2(5t)`, `r(t) = e^{-t}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Gadc;

impl Gadc {
    pub fn s(t: f64) -> f64 {
        (5.0 * t).cos().powi(2)
    }

    pub fn r(t: f64) -> f64 {
        (-t).exp()
    }

    /// `(gamma_-, gamma_+)`, rates of the jumps `|0><1|` and `|1><0|`.
    pub fn rates(t: f64) -> (f64, f64) {
        let mix = 5.0 * (1.0 - (-t).exp()) * (10.0 * t).sin();
        ((5.0 * t).cos().powi(2) - mix, (5.0 * t).sin().powi(2) + mix)
    }

    pub fn kraus(t: f64) -> KrausChannel {
        let s = Self::s(t);
        let r = Self::r(t);
        let a = s.sqrt();
        let b = (1.0 - s).sqrt();
        let sr = r.sqrt();
        let sq = (1.0 - r).sqrt();
        let m = |v: [f64; 4]| CMatrix::from_row_slice(2, 2, &[c(v[0]), c(v[1]), c(v[2]), c(v[3])]);
        KrausChannel {
            ops: vec![
                m([a, 0.0, 0.0, a * sr]),
                m([0.0, a * sq, 0.0, 0.0]),
                m([b * sr, 0.0, 0.0, b]),
                m([0.0, 0.0, b * sq, 0.0]),
            ],
        }
    }
}

pub fn gadc_kraus(t: f64) -> KrausChannel {
    Gadc::kraus(t)
}

pub fn gadc_rates(t: f64) -> (f64, f64) {
    Gadc::rates(t)
}

impl QubitDynamics for Gadc {
    fn map_at(&self, t: f64) -> Result<AffineQubitMap> {
        let s = Self::s(t);
        let r = Self::r(t);
        Ok(AffineQubitMap {
            lambda: [r.sqrt(), r.sqrt(), r],
            translation: [0.0, 0.0, (1.0 - r) * (2.0 * s - 1.0)],
        })
    }
}

/// `sigma_{x,y} -> G sigma_{x,y}`, `sigma_z -> G^2 sigma_z`,
/// `1 -> 1 + (2p - 1)(1 - G^2) sigma_z`.
pub fn amp_damp_map(g: f64, p: f64) -> AffineQubitMap {
    AffineQubitMap {
        lambda: [g, g, g * g],
        translation: [0.0, 0.0, (2.0 * p - 1.0) * (1.0 - g * g)],
    }
}

/// Amplitude damping with fixed asymptotic population `p` and profile `G(t)`.
#[derive(Debug, Clone)]
pub struct AmpDamp {
    pub p: f64,
    pub g: RateSpec,
}

impl AmpDamp {
    pub fn new(p: f64, g: RateSpec) -> Self {
        Self { p, g }
    }

    /// `gamma(t) = -(2/G) dG/dt`.
    pub fn gamma(&self, t: f64) -> f64 {
        -2.0 * self.g.derivative(t) / self.g.eval(t)
    }
}

pub fn amp_damp_gamma(ch: &AmpDamp, t: f64) -> f64 {
    ch.gamma(t)
}

impl QubitDynamics for AmpDamp {
    fn map_at(&self, t: f64) -> Result<AffineQubitMap> {
        Ok(amp_damp_map(self.g.eval(t), self.p))
    }

    fn intermediate(&self, t: f64, s: f64) -> Result<AffineQubitMap> {
        if t > s {
            return Err(Error::BadInterval { t, s });
        }
        let gt = self.g.eval(t);
        let gs = self.g.eval(s);
        if gt == 0.0 {
            if gs != 0.0 {
                return Err(Error::SingularMap(t));
            }
            return Ok(amp_damp_map(0.0, self.p));
        }
        Ok(amp_damp_map(gs / gt, self.p))
    }

    fn single_rate(&self, t: f64) -> Option<f64> {
        Some(self.gamma(t))
    }
}

/// JSON description of a dynamical family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ChannelSpec {
    QuasiEternal { alpha: f64, t0: f64 },
    Gadc,
    Dephasing { gamma: Vec<(f64, f64)> },
    AmpDamp {
        p: f64,
        #[serde(rename = "G")]
        g: Vec<(f64, f64)>,
    },
}

/// A constructed family, keeping the concrete type where callers need it.
#[derive(Debug, Clone)]
pub enum Channel {
    Rate(RateChannel),
    Gadc(Gadc),
    AmpDamp(AmpDamp),
}

impl Channel {
    pub fn from_spec(spec: &ChannelSpec) -> Result<Self> {
        Ok(match spec {
            ChannelSpec::QuasiEternal { alpha, t0 } => {
                Self::Rate(RateChannel::quasi_eternal(*alpha, *t0))
            }
            ChannelSpec::Gadc => Self::Gadc(Gadc),
            ChannelSpec::Dephasing { gamma } => {
                Self::Rate(RateChannel::dephasing(RateSpec::tabulated(gamma.clone())?))
            }
            ChannelSpec::AmpDamp { p, g } => {
                Self::AmpDamp(AmpDamp::new(*p, RateSpec::tabulated(g.clone())?))
            }
        })
    }

    pub fn as_rate(&self) -> Option<&RateChannel> {
        match self {
            Self::Rate(r) => Some(r),
            _ => None,
        }
    }
}

impl QubitDynamics for Channel {
    fn map_at(&self, t: f64) -> Result<AffineQubitMap> {
        match self {
            Self::Rate(x) => x.map_at(t),
            Self::Gadc(x) => x.map_at(t),
            Self::AmpDamp(x) => x.map_at(t),
        }
    }

    fn intermediate(&self, t: f64, s: f64) -> Result<AffineQubitMap> {
        match self {
            Self::Rate(x) => x.intermediate(t, s),
            Self::Gadc(x) => x.intermediate(t, s),
            Self::AmpDamp(x) => x.intermediate(t, s),
        }
    }

    fn single_rate(&self, t: f64) -> Option<f64> {
        match self {
            Self::Rate(x) => x.single_rate(t),
            Self::Gadc(x) => x.single_rate(t),
            Self::AmpDamp(x) => x.single_rate(t),
        }
    }
}
