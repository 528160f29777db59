//! Polynomial iterative refinement of an approximate inverse factor.
//!
//! Given `S` and a starting guess `Z₀` with factorization error
//! `δ₀ = I − Z₀* S Z₀` of norm below one, the order-`m` refinement
//! `Z_{i+1} = Z_i Σ_{k=0}^m b_k δ_i^k` contracts the error as
//! `δ_{i+1} = Σ_{k=m+1}^{2m+1} c_k δ_i^k`.
//!
//! Two engines are provided. [`RegularRefiner`] recomputes `δ` from
//! scratch every step. [`LocalRefiner`] updates `δ` from the previous
//! step using only products with the correction `M_i`, which is what keeps
//! the work localized near a cut.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{add_scaled, multiply, multiply_hermitian, GeneralMatrix, HermMatrix, NormKind, SPECTRAL_TOL};
use crate::scalar::Scalar;

/// Coefficients `b_0..b_{2m+1}` of the refinement polynomial and the error
/// reduction coefficients `c_{m+1}..c_{2m+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RefineCoefficients {
    m: usize,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl RefineCoefficients {
    pub fn order(&self) -> usize {
        self.m
    }

    /// `b_k` for `0 <= k <= 2m+1`.
    pub fn b(&self, k: usize) -> f64 {
        self.b[k]
    }

    /// `c_k` for `m+1 <= k <= 2m+1`.
    pub fn c(&self, k: usize) -> f64 {
        assert!(k > self.m && k <= 2 * self.m + 1, "c_{k} undefined for m = {}", self.m);
        self.c[k - self.m - 1]
    }

    /// `b_0..b_m`, the coefficients actually used by the refinement.
    pub fn polynomial(&self) -> &[f64] {
        &self.b[..=self.m]
    }

    /// `(c_{m+1}, .., c_{2m+1})`.
    pub fn reduction(&self) -> &[f64] {
        &self.c
    }

    /// `Σ c_k λ^k`: the new error eigenvalue for an old error eigenvalue `λ`.
    pub fn reduce(&self, lambda: f64) -> f64 {
        self.c
            .iter()
            .enumerate()
            .map(|(p, &c)| c * lambda.powi((self.m + 1 + p) as i32))
            .sum()
    }
}

/// Refinement coefficients of order `m >= 1`.
pub fn coefficients(m: usize) -> Result<RefineCoefficients> {
    if m < 1 {
        return Err(Error::InvalidArgument("refinement order must be at least 1".into()));
    }
    let top = 2 * m + 1;
    let mut b = vec![1.0];
    for k in 1..=top {
        // multiply first: every b_k is dyadic, so this stays exact
        b.push(b[k - 1] * (2 * k - 1) as f64 / (2 * k) as f64);
    }
    let c = (m + 1..=top)
        .map(|k| {
            let plus: f64 = (0..=k - m - 1).map(|j| 2.0 * b[j] * b[k - j]).sum();
            let minus: f64 = if k >= m + 2 {
                (0..=k - m - 2).map(|j| 2.0 * b[j] * b[k - j - 1]).sum()
            } else {
                0.0
            };
            plus - minus
        })
        .collect();
    Ok(RefineCoefficients { m, b, c })
}

/// When to stop iterating.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop once `‖δ‖ <= ε`, `0 < ε < 1`.
    Threshold(f64),
    /// Stop as soon as `‖δ_{i+1}‖ > ‖δ_i‖^{m+1}`, i.e. when the observed
    /// reduction falls behind the theoretical order.
    Parameterless,
}

/// Storage of the factorization error in the localized engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaStorage {
    /// Upper triangle only; non-Hermitian perturbations cannot build up.
    Hermitian,
    /// Full storage; rounding may make `δ` slightly non-Hermitian.
    General,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub m: usize,
    pub norm: NormKind,
    pub stop: StopRule,
    pub delta_storage: DeltaStorage,
    /// Drop threshold applied to every product and sum.
    pub threshold: f64,
    /// Hard iteration cap.
    pub max_iter: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            m: 1,
            norm: NormKind::Frobenius,
            stop: StopRule::Parameterless,
            delta_storage: DeltaStorage::Hermitian,
            threshold: 0.0,
            max_iter: 100,
        }
    }
}

impl RefineOptions {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::InvalidArgument("refinement order must be at least 1".into()));
        }
        if let StopRule::Threshold(eps) = self.stop {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::InvalidArgument(format!("stopping tolerance {eps} not in (0, 1)")));
            }
        }
        if self.threshold < 0.0 || self.threshold.is_nan() {
            return Err(Error::NegativeThreshold(self.threshold));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCause {
    Epsilon,
    Stagnation,
    MaxIter,
}

/// Record of one refinement run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineTrace {
    pub m: usize,
    pub norm_kind: NormKind,
    pub iterations: usize,
    /// `‖δ_0‖, .., ‖δ_k‖`.
    pub delta_norms: Vec<f64>,
    pub stop_cause: StopCause,
    pub nnz_delta: Vec<usize>,
    /// Nonzeros of the update `M_i = Z_{i+1} − Z_i` of each iteration.
    #[serde(rename = "nnz_M")]
    pub nnz_m: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop,
}

/// Stopping rule applied to two consecutive error norms.
pub fn stopping_check(norm_prev: f64, norm_next: f64, m: usize, rule: StopRule) -> Decision {
    let stop = match rule {
        StopRule::Threshold(eps) => norm_next <= eps,
        StopRule::Parameterless => norm_next > norm_prev.powi(m as i32 + 1),
    };
    if stop {
        Decision::Stop
    } else {
        Decision::Continue
    }
}

/// Worst-case number of iterations to reach `‖δ‖ < ε` from `‖δ₀‖`:
/// `⌈ log(log ε / log ‖δ₀‖) / log(m+1) ⌉`.
pub fn iteration_bound(delta0_norm: f64, eps: f64, m: usize) -> Result<usize> {
    if !(delta0_norm > 0.0 && delta0_norm < 1.0) {
        return Err(Error::InvalidArgument(format!("initial error norm {delta0_norm} not in (0, 1)")));
    }
    if !(eps > 0.0 && eps < delta0_norm) {
        return Err(Error::InvalidArgument(format!("tolerance {eps} not in (0, {delta0_norm})")));
    }
    if m < 1 {
        return Err(Error::InvalidArgument("refinement order must be at least 1".into()));
    }
    let k = (eps.ln() / delta0_norm.ln()).ln() / ((m + 1) as f64).ln();
    // absorb rounding when the ratio is an exact power of m+1
    Ok((k - 1e-12).ceil().max(0.0) as usize)
}

/// `Σ_{k=lo}^{m} b_k δ^k` by Horner's rule, for `lo ∈ {0, 1}`.
fn polynomial<T: Scalar>(delta: &GeneralMatrix<T>, b: &[f64], lo: usize, threshold: f64) -> Result<GeneralMatrix<T>> {
    let m = b.len() - 1;
    let n = delta.rows();
    let eye = GeneralMatrix::identity(n);
    // r = Σ_{k=lo}^{m} b_k δ^{k-lo}
    let mut r = delta.scale(T::from_real(b[m]));
    r = if m > lo {
        add_scaled(&r.truncate(threshold)?, &eye, T::from_real(b[m - 1]))?
    } else {
        // m == lo == 1: r should be the constant b_1
        eye.scale(T::from_real(b[m]))
    };
    if m >= lo + 2 {
        for k in (lo..=m - 2).rev() {
            r = add_scaled(&multiply(delta, &r, threshold)?, &eye, T::from_real(b[k]))?;
        }
    }
    if lo == 1 {
        r = multiply(delta, &r, threshold)?;
    }
    r.truncate(threshold)
}

/// `I − Z* S Z`, computed as the Hermitian product `Z* (S Z)`.
pub fn factorization_error<T: Scalar>(s: &GeneralMatrix<T>, z: &GeneralMatrix<T>, threshold: f64) -> Result<HermMatrix<T>> {
    if s.rows() != z.rows() || !s.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "S is {}x{}, Z is {}x{}",
            s.rows(),
            s.cols(),
            z.rows(),
            z.cols()
        )));
    }
    let sz = multiply(s, z, threshold)?;
    let zsz = multiply_hermitian(&z.adjoint(), &sz, threshold)?;
    HermMatrix::identity(z.cols())
        .add_scaled(&zsz, -1.0)?
        .with_drop_threshold(threshold)
}

/// `I − Z* (S Z)` as a general product, without enforcing symmetry.
pub fn factorization_error_general<T: Scalar>(
    s: &GeneralMatrix<T>,
    z: &GeneralMatrix<T>,
    threshold: f64,
) -> Result<GeneralMatrix<T>> {
    let sz = multiply(s, z, threshold)?;
    let zsz = multiply(&z.adjoint(), &sz, threshold)?;
    add_scaled(&GeneralMatrix::identity(z.cols()), &zsz, -T::one())?.truncate(threshold)
}

/// One refinement engine: a state `(Z_i, δ_i)` advanced by [`step`](Self::step).
pub trait Refiner<T: Scalar> {
    fn z(&self) -> &GeneralMatrix<T>;
    fn delta_norm(&self, kind: NormKind) -> f64;
    /// Spectral-norm bound used to refuse non-convergent starts.
    fn refusal_norm(&self) -> f64;
    fn nnz_delta(&self) -> usize;
    /// Advance one iteration; returns the update `M_i = Z_{i+1} − Z_i`.
    fn step(&mut self) -> Result<GeneralMatrix<T>>;
}

fn herm_refusal_norm<T: Scalar>(d: &HermMatrix<T>) -> f64 {
    let f = d.frobenius_norm();
    if f < 1.0 {
        return f;
    }
    let e = d.spectral_estimate(SPECTRAL_TOL);
    if e.converged {
        e.value
    } else {
        f
    }
}

/// Regular refinement: `δ_{i+1} = I − Z_{i+1}* S Z_{i+1}` recomputed each step.
pub struct RegularRefiner<T: Scalar = f64> {
    s: GeneralMatrix<T>,
    coeffs: RefineCoefficients,
    threshold: f64,
    z: GeneralMatrix<T>,
    delta: HermMatrix<T>,
}

impl<T: Scalar> RegularRefiner<T> {
    pub fn new(s: &HermMatrix<T>, z0: GeneralMatrix<T>, coeffs: RefineCoefficients, threshold: f64) -> Result<Self> {
        let s = s.to_general();
        let delta = factorization_error(&s, &z0, threshold)?;
        Ok(Self {
            s,
            coeffs,
            threshold,
            z: z0,
            delta,
        })
    }

    pub fn delta(&self) -> &HermMatrix<T> {
        &self.delta
    }
}

impl<T: Scalar> Refiner<T> for RegularRefiner<T> {
    fn z(&self) -> &GeneralMatrix<T> {
        &self.z
    }

    fn delta_norm(&self, kind: NormKind) -> f64 {
        self.delta.norm(kind)
    }

    fn refusal_norm(&self) -> f64 {
        herm_refusal_norm(&self.delta)
    }

    fn nnz_delta(&self) -> usize {
        self.delta.nnz()
    }

    fn step(&mut self) -> Result<GeneralMatrix<T>> {
        let p = polynomial(&self.delta.to_general(), self.coeffs.polynomial(), 0, self.threshold)?;
        let z_next = multiply(&self.z, &p, self.threshold)?;
        self.delta = factorization_error(&self.s, &z_next, self.threshold)?;
        let update = add_scaled(&z_next, &self.z, -T::one())?;
        self.z = z_next;
        Ok(update)
    }
}

enum Delta<T: Scalar> {
    Hermitian(HermMatrix<T>),
    General(GeneralMatrix<T>),
}

/// Localized refinement:
/// `M_i = Z_i Σ_{k=1}^m b_k δ_i^k`, `Z_{i+1} = Z_i + M_i`,
/// `δ_{i+1} = δ_i − Z_{i+1}* (S M_i) − (M_i* S) Z_i` with `M_i* S = (S M_i)*`.
pub struct LocalRefiner<T: Scalar = f64> {
    s: GeneralMatrix<T>,
    coeffs: RefineCoefficients,
    threshold: f64,
    z: GeneralMatrix<T>,
    delta: Delta<T>,
}

impl<T: Scalar> LocalRefiner<T> {
    pub fn new(
        s: &HermMatrix<T>,
        z0: GeneralMatrix<T>,
        delta0: &GeneralMatrix<T>,
        storage: DeltaStorage,
        coeffs: RefineCoefficients,
        threshold: f64,
    ) -> Result<Self> {
        let n = s.n();
        if z0.rows() != n || z0.cols() != n || delta0.rows() != n || delta0.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "S is {n}x{n}, Z0 is {}x{}, delta0 is {}x{}",
                z0.rows(),
                z0.cols(),
                delta0.rows(),
                delta0.cols()
            )));
        }
        let delta = match storage {
            DeltaStorage::Hermitian => Delta::Hermitian(HermMatrix::from_upper(delta0)?.with_drop_threshold(threshold)?),
            DeltaStorage::General => Delta::General(delta0.truncate(threshold)?),
        };
        Ok(Self {
            s: s.to_general(),
            coeffs,
            threshold,
            z: z0,
            delta,
        })
    }

    /// The tracked error `δ_i` in full storage.
    pub fn delta(&self) -> GeneralMatrix<T> {
        match &self.delta {
            Delta::Hermitian(h) => h.to_general(),
            Delta::General(g) => g.clone(),
        }
    }
}

impl<T: Scalar> Refiner<T> for LocalRefiner<T> {
    fn z(&self) -> &GeneralMatrix<T> {
        &self.z
    }

    fn delta_norm(&self, kind: NormKind) -> f64 {
        match &self.delta {
            Delta::Hermitian(h) => h.norm(kind),
            Delta::General(g) => match kind {
                NormKind::Frobenius => g.frobenius_norm(),
                NormKind::Spectral => g.spectral_estimate(SPECTRAL_TOL).value,
            },
        }
    }

    fn refusal_norm(&self) -> f64 {
        match &self.delta {
            Delta::Hermitian(h) => herm_refusal_norm(h),
            Delta::General(g) => {
                let f = g.frobenius_norm();
                if f < 1.0 {
                    return f;
                }
                let e = g.spectral_estimate(SPECTRAL_TOL);
                if e.converged {
                    e.value
                } else {
                    f
                }
            }
        }
    }

    fn nnz_delta(&self) -> usize {
        match &self.delta {
            Delta::Hermitian(h) => h.nnz(),
            Delta::General(g) => g.nnz(),
        }
    }

    fn step(&mut self) -> Result<GeneralMatrix<T>> {
        let th = self.threshold;
        let full = self.delta();
        let q = polynomial(&full, self.coeffs.polynomial(), 1, th)?;
        let m = multiply(&self.z, &q, th)?;
        let z_next = add_scaled(&self.z, &m, T::one())?;
        let sm = multiply(&self.s, &m, th)?;
        let sm_adj = sm.adjoint();
        self.delta = match &self.delta {
            Delta::Hermitian(h) => {
                // each product is projected onto its upper triangle; the
                // projection is linear and the sum is Hermitian
                let a = multiply_hermitian(&z_next.adjoint(), &sm, th)?;
                let b = multiply_hermitian(&sm_adj, &self.z, th)?;
                Delta::Hermitian(h.add_scaled(&a, -1.0)?.add_scaled(&b, -1.0)?)
            }
            Delta::General(g) => {
                let a = multiply(&z_next.adjoint(), &sm, th)?;
                let b = multiply(&sm_adj, &self.z, th)?;
                Delta::General(add_scaled(&add_scaled(g, &a, -T::one())?, &b, -T::one())?)
            }
        };
        self.z = z_next;
        Ok(m)
    }
}

/// Drive a refiner with the stopping rule of `opts`.
pub fn run<T: Scalar, R: Refiner<T>>(mut r: R, opts: &RefineOptions) -> Result<(GeneralMatrix<T>, RefineTrace)> {
    opts.validate()?;
    let n0 = r.delta_norm(opts.norm);
    let mut trace = RefineTrace {
        m: opts.m,
        norm_kind: opts.norm,
        iterations: 0,
        delta_norms: vec![n0],
        stop_cause: StopCause::Epsilon,
        nnz_delta: vec![r.nnz_delta()],
        nnz_m: Vec::new(),
    };
    if !n0.is_finite() {
        return Err(Error::NonFinite);
    }
    let done_at_start = match opts.stop {
        StopRule::Threshold(eps) => n0 <= eps,
        StopRule::Parameterless => n0 == 0.0,
    };
    if done_at_start {
        return Ok((r.z().clone(), trace));
    }
    let bound = r.refusal_norm();
    if bound >= 1.0 {
        return Err(Error::RefinementRefused(bound));
    }
    let mut prev = n0;
    loop {
        if trace.iterations >= opts.max_iter {
            trace.stop_cause = StopCause::MaxIter;
            return match opts.stop {
                StopRule::Threshold(_) => Err(Error::NotConverged(Box::new(trace))),
                StopRule::Parameterless => Ok((r.z().clone(), trace)),
            };
        }
        let update = r.step()?;
        let next = r.delta_norm(opts.norm);
        trace.iterations += 1;
        trace.delta_norms.push(next);
        trace.nnz_delta.push(r.nnz_delta());
        trace.nnz_m.push(update.nnz());
        if !next.is_finite() {
            return Err(Error::NonFinite);
        }
        if stopping_check(prev, next, opts.m, opts.stop) == Decision::Stop {
            trace.stop_cause = match opts.stop {
                StopRule::Threshold(_) => StopCause::Epsilon,
                StopRule::Parameterless => StopCause::Stagnation,
            };
            return Ok((r.z().clone(), trace));
        }
        if next == 0.0 {
            trace.stop_cause = StopCause::Epsilon;
            return Ok((r.z().clone(), trace));
        }
        prev = next;
    }
}

/// Regular iterative refinement from `z0`.
pub fn iter_refine<T: Scalar>(
    s: &HermMatrix<T>,
    z0: &GeneralMatrix<T>,
    opts: &RefineOptions,
) -> Result<(GeneralMatrix<T>, RefineTrace)> {
    opts.validate()?;
    let r = RegularRefiner::new(s, z0.truncate(opts.threshold)?, coefficients(opts.m)?, opts.threshold)?;
    run(r, opts)
}

/// Localized iterative refinement from `z0` with caller-supplied `δ₀`.
pub fn local_refine<T: Scalar>(
    s: &HermMatrix<T>,
    z0: &GeneralMatrix<T>,
    delta0: &GeneralMatrix<T>,
    opts: &RefineOptions,
) -> Result<(GeneralMatrix<T>, RefineTrace)> {
    opts.validate()?;
    let r = LocalRefiner::new(
        s,
        z0.truncate(opts.threshold)?,
        delta0,
        opts.delta_storage,
        coefficients(opts.m)?,
        opts.threshold,
    )?;
    run(r, opts)
}

/// One step of `Z_{i+1} = (3/2) Z_i − (1/2) Z_i³ S`.
///
/// Equivalent to the second order refinement in exact arithmetic but
/// numerically unstable unless `S` is very well conditioned; kept for the
/// stability experiment.
pub fn unstable_step<T: Scalar>(s: &HermMatrix<T>, z: &GeneralMatrix<T>) -> Result<GeneralMatrix<T>> {
    if z.rows() != s.n() || z.cols() != s.n() {
        return Err(Error::DimensionMismatch(format!(
            "S is {0}x{0}, Z is {1}x{2}",
            s.n(),
            z.rows(),
            z.cols()
        )));
    }
    let z2 = multiply(z, z, 0.0)?;
    let z3 = multiply(&z2, z, 0.0)?;
    let z3s = multiply(&z3, &s.to_general(), 0.0)?;
    add_scaled(&z.scale(T::from_real(1.5)), &z3s, T::from_real(-0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> HermMatrix {
        HermMatrix::from_row_major(2, &[1.0, 0.25, 0.25, 1.0]).unwrap()
    }

    #[test]
    fn low_order_coefficients() {
        let c1 = coefficients(1).unwrap();
        assert_eq!(c1.polynomial(), &[1.0, 0.5]);
        assert_eq!(c1.reduction(), &[0.75, 0.25]);
        let c2 = coefficients(2).unwrap();
        assert_eq!(c2.polynomial(), &[1.0, 0.5, 0.375]);
        assert_eq!(c2.reduction(), &[5.0 / 8.0, 15.0 / 64.0, 9.0 / 64.0]);
        for m in 1..=8 {
            let c = coefficients(m).unwrap();
            assert!((c.reduce(1.0) - 1.0).abs() < 1e-14);
        }
        assert!(coefficients(0).is_err());
    }

    #[test]
    fn stopping_rules() {
        assert_eq!(stopping_check(0.5, 0.26, 1, StopRule::Parameterless), Decision::Stop);
        assert_eq!(stopping_check(0.5, 0.21875, 1, StopRule::Parameterless), Decision::Continue);
        assert_eq!(stopping_check(0.3, 1e-12, 1, StopRule::Threshold(1e-10)), Decision::Stop);
        assert_eq!(stopping_check(0.3, 1e-9, 1, StopRule::Threshold(1e-10)), Decision::Continue);
    }

    #[test]
    fn iteration_bounds() {
        assert_eq!(iteration_bound(0.5, 1e-10, 1).unwrap(), 6);
        assert_eq!(iteration_bound(0.5, 1e-10, 2).unwrap(), 4);
        for m in 1..4 {
            let d = 0.3f64;
            assert_eq!(iteration_bound(d, d.powi(m as i32 + 1), m).unwrap(), 1);
        }
        assert!(iteration_bound(1.0, 1e-10, 1).is_err());
        assert!(iteration_bound(0.5, 0.6, 1).is_err());
        assert!(iteration_bound(0.5, 1e-10, 0).is_err());
    }

    #[test]
    fn identity_needs_no_iterations() {
        let (z, t) = iter_refine(&HermMatrix::<f64>::identity(3), &GeneralMatrix::identity(3), &RefineOptions::default()).unwrap();
        assert_eq!(t.iterations, 0);
        assert_eq!(t.delta_norms, vec![0.0]);
        assert_eq!(z, GeneralMatrix::identity(3));
    }

    #[test]
    fn one_regular_step_on_toy() {
        let opts = RefineOptions {
            stop: StopRule::Threshold(0.06),
            norm: NormKind::Spectral,
            ..Default::default()
        };
        let (z, t) = iter_refine(&toy(), &GeneralMatrix::identity(2), &opts).unwrap();
        assert_eq!(t.iterations, 1);
        assert_eq!(z.to_row_major(), vec![1.0, -0.125, -0.125, 1.0]);
        assert!((t.delta_norms[0] - 0.25).abs() < 1e-12);
        assert!((t.delta_norms[1] - 0.05078125).abs() < 1e-12);
    }

    #[test]
    fn one_local_step_on_toy() {
        let delta0 = GeneralMatrix::from_row_major(2, 2, &[0.0, -0.25, -0.25, 0.0]);
        let mut r = LocalRefiner::new(
            &toy(),
            GeneralMatrix::identity(2),
            &delta0,
            DeltaStorage::Hermitian,
            coefficients(1).unwrap(),
            0.0,
        )
        .unwrap();
        let m = r.step().unwrap();
        assert_eq!(m.to_row_major(), vec![0.0, -0.125, -0.125, 0.0]);
        assert_eq!(r.delta().to_row_major(), vec![0.046875, -0.00390625, -0.00390625, 0.046875]);
        let exact = factorization_error(&toy().to_general(), r.z(), 0.0).unwrap();
        assert_eq!(exact.to_general().to_row_major(), r.delta().to_row_major());
    }

    #[test]
    fn block_diagonal_start_is_returned_unchanged() {
        let s = HermMatrix::from_triplets(2, [(0, 0, 4.0), (1, 1, 9.0)]);
        let z0 = GeneralMatrix::from_triplets(2, 2, [(0, 0, 0.5), (1, 1, 1.0 / 3.0)]);
        let (z, t) = local_refine(&s, &z0, &GeneralMatrix::zeros(2, 2), &RefineOptions::default()).unwrap();
        assert_eq!(t.iterations, 0);
        assert_eq!(z, z0);
    }

    #[test]
    fn refuses_large_initial_error() {
        let s = HermMatrix::from_triplets(2, [(0, 0, 4.0), (1, 1, 4.0)]);
        let r = iter_refine(&s, &GeneralMatrix::identity(2), &RefineOptions::default());
        assert!(matches!(r, Err(Error::RefinementRefused(_))));
    }

    #[test]
    fn threshold_mode_cap_is_an_error() {
        let opts = RefineOptions {
            stop: StopRule::Threshold(1e-300),
            max_iter: 2,
            ..Default::default()
        };
        let r = iter_refine(&toy(), &GeneralMatrix::identity(2), &opts);
        assert!(matches!(r, Err(Error::NotConverged(t)) if t.iterations == 2));
    }

    #[test]
    fn unstable_fixed_points() {
        let i = GeneralMatrix::<f64>::identity(2);
        assert_eq!(unstable_step(&HermMatrix::identity(2), &i).unwrap(), i);
        let s = HermMatrix::from_triplets(1, [(0, 0, 4.0)]);
        let z = GeneralMatrix::from_triplets(1, 1, [(0, 0, 0.5)]);
        assert_eq!(unstable_step(&s, &z).unwrap().get(0, 0), 0.5);
        assert!(unstable_step(&s, &GeneralMatrix::identity(2)).is_err());
    }

    #[test]
    fn higher_order_polynomial_matches_direct_sum() {
        let d = GeneralMatrix::from_row_major(2, 2, &[0.1, -0.2, -0.2, 0.05]);
        for m in 1..=4 {
            let c = coefficients(m).unwrap();
            let b = c.polynomial();
            let mut direct = GeneralMatrix::zeros(2, 2);
            let mut pow = GeneralMatrix::identity(2);
            for (k, &bk) in b.iter().enumerate() {
                if k >= 1 {
                    direct = add_scaled(&direct, &pow, bk).unwrap();
                }
                pow = multiply(&pow, &d, 0.0).unwrap();
            }
            let q = polynomial(&d, b, 1, 0.0).unwrap();
            let p = polynomial(&d, b, 0, 0.0).unwrap();
            for (x, y) in q.to_row_major().iter().zip(direct.to_row_major()) {
                assert!((x - y).abs() < 1e-15);
            }
            let p_minus_q = add_scaled(&p, &q, -1.0).unwrap();
            for (x, y) in p_minus_q.to_row_major().iter().zip([1.0, 0.0, 0.0, 1.0]) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }
}
