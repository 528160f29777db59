//! Decay and scaling analysis: magnitude against distance and against
//! distance to a cut, entry counts above a threshold, least-squares
//! scaling fits and the Wilson-matrix stability experiment.
//!
//! All CSV writers print floats with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{extract_corrections, FactorResult};
use crate::geometry::{CutDistanceVector, IndexGeometry};
use crate::matrix::dense::dense_inverse_sqrt;
use crate::matrix::market::fmt_f64;
use crate::matrix::{add_scaled, GeneralMatrix, HermMatrix, SPECTRAL_TOL};
use crate::refine::{coefficients, factorization_error, factorization_error_general, unstable_step, DeltaStorage, LocalRefiner, Refiner, RegularRefiner};
use crate::scalar::Scalar;
use crate::systems::wilson_matrix;

/// Magnitudes below this are raised to it in CSV exports.
pub const EXPORT_FLOOR: f64 = 1e-30;

/// Read access to the stored entries of a matrix.
pub trait Entries {
    fn dim(&self) -> usize;
    /// Stored entries `(i, j, |a_ij|)`; a Hermitian pair appears once.
    fn stored(&self) -> Vec<(usize, usize, f64)>;
    /// Logical entries with magnitude above `tau`; a Hermitian pair counts twice.
    fn count_above(&self, tau: f64) -> usize;
}

impl<T: Scalar> Entries for GeneralMatrix<T> {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn stored(&self) -> Vec<(usize, usize, f64)> {
        self.iter().map(|(i, j, v)| (i, j, v.magnitude())).collect()
    }

    fn count_above(&self, tau: f64) -> usize {
        self.iter().filter(|(_, _, v)| v.magnitude() > tau).count()
    }
}

impl<T: Scalar> Entries for HermMatrix<T> {
    fn dim(&self) -> usize {
        self.n()
    }

    fn stored(&self) -> Vec<(usize, usize, f64)> {
        self.iter_upper().map(|(i, j, v)| (i, j, v.magnitude())).collect()
    }

    fn count_above(&self, tau: f64) -> usize {
        self.iter_upper()
            .filter(|(_, _, v)| v.magnitude() > tau)
            .map(|(i, j, _)| if i == j { 1 } else { 2 })
            .sum()
    }
}

/// `(distance, magnitude)` samples, one per stored entry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecayProfile {
    pub samples: Vec<(f64, f64)>,
}

/// Least-squares fit `ln y = intercept + slope · x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogLinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

impl DecayProfile {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest magnitude in each unit-width bin `[r, r+1)`, for nonempty bins.
    pub fn binned_max(&self) -> Vec<(f64, f64)> {
        let top = self.samples.iter().fold(0.0f64, |m, &(d, _)| m.max(d));
        let mut bins = vec![f64::NAN; top.floor() as usize + 1];
        for &(d, v) in &self.samples {
            let b = &mut bins[d.floor() as usize];
            if b.is_nan() || v > *b {
                *b = v;
            }
        }
        bins.into_iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .map(|(r, v)| (r as f64, v))
            .collect()
    }

    /// Log-linear fit of the binned maxima with bin start in `[lo, hi]`.
    /// Bins whose maximum is zero are skipped.
    pub fn envelope_fit(&self, lo: f64, hi: f64) -> Result<LogLinearFit> {
        let pts: Vec<(f64, f64)> = self
            .binned_max()
            .into_iter()
            .filter(|&(r, v)| r >= lo && r <= hi && v > 0.0)
            .map(|(r, v)| (r, v.ln()))
            .collect();
        log_linear(&pts)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("distance,magnitude\n");
        for &(d, v) in &self.samples {
            writeln!(s, "{},{}", fmt_f64(d), fmt_f64(v.max(EXPORT_FLOOR))).expect("string write");
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn log_linear(pts: &[(f64, f64)]) -> Result<LogLinearFit> {
    if pts.len() < 2 {
        return Err(Error::DegenerateDesign);
    }
    let x = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.0));
    let y = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.1));
    let (coef, r2, _) = least_squares(&[DVector::repeat(pts.len(), 1.0), x], &y)?;
    Ok(LogLinearFit {
        slope: coef[1],
        intercept: coef[0],
        r2,
        points: pts.len(),
    })
}

/// Least squares over the given basis columns.
/// Returns coefficients, centered R² and the residual sum of squares.
fn least_squares(columns: &[DVector<f64>], y: &DVector<f64>) -> Result<(Vec<f64>, f64, f64)> {
    let rows = y.len();
    if rows < columns.len() {
        return Err(Error::DegenerateDesign);
    }
    let a = DMatrix::from_columns(columns);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 || svd.singular_values.min() <= smax * 1e-12 {
        return Err(Error::DegenerateDesign);
    }
    let coef = svd.solve(y, 0.0).map_err(|_| Error::DegenerateDesign)?;
    let resid = y - &a * &coef;
    let rss = resid.norm_squared();
    let mean = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if tss > 0.0 {
        1.0 - rss / tss
    } else if rss <= f64::EPSILON * y.norm_squared() {
        1.0
    } else {
        0.0
    };
    Ok((coef.iter().copied().collect(), r2, rss))
}

/// `(d(i, j), |a_ij|)` for every stored entry.
pub fn decay_vs_distance(a: &impl Entries, g: &IndexGeometry) -> Result<DecayProfile> {
    if a.dim() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} indices, geometry has {}",
            a.dim(),
            g.n()
        )));
    }
    Ok(DecayProfile {
        samples: a.stored().into_iter().map(|(i, j, v)| (g.distance(i, j), v)).collect(),
    })
}

/// `(max(d_cut(i), d_cut(j)), |a_ij|)` for every stored entry whose row and
/// column both belong to the split.
pub fn decay_vs_cut(a: &impl Entries, cut: &CutDistanceVector) -> Result<DecayProfile> {
    let n = a.dim();
    let mut d = vec![None; n];
    for &(i, v) in &cut.values {
        *d.get_mut(i).ok_or_else(|| {
            Error::DimensionMismatch(format!("cut distance for index {i}, matrix has {n} indices"))
        })? = Some(v);
    }
    Ok(DecayProfile {
        samples: a
            .stored()
            .into_iter()
            .filter_map(|(i, j, v)| Some((d[i]?.max(d[j]?), v)))
            .collect(),
    })
}

/// Number of logical entries with magnitude above `tau`.
pub fn count_entries_above(a: &impl Entries, tau: f64) -> Result<usize> {
    if tau.is_nan() || tau < 0.0 {
        return Err(Error::NegativeThreshold(tau));
    }
    Ok(a.count_above(tau))
}

/// Basis for a scaling fit in the system size `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingModel {
    /// `c₀`
    Constant,
    /// `c₀ + c₁ √n`
    Sqrt,
    /// `c₀ + c₁ n^{1/3} + c₂ n^{2/3}`
    TwoThirds,
    /// `c₀ + c₁ n`
    Linear,
}

impl ScalingModel {
    pub const ALL: [ScalingModel; 4] = [Self::Constant, Self::Sqrt, Self::TwoThirds, Self::Linear];

    fn basis(self, n: f64) -> Vec<f64> {
        match self {
            Self::Constant => vec![1.0],
            Self::Sqrt => vec![1.0, n.sqrt()],
            Self::TwoThirds => vec![1.0, n.cbrt(), n.cbrt().powi(2)],
            Self::Linear => vec![1.0, n],
        }
    }

    pub fn eval(self, coefficients: &[f64], n: f64) -> f64 {
        self.basis(n).iter().zip(coefficients).map(|(b, c)| b * c).sum()
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::Sqrt => "sqrt",
            Self::TwoThirds => "two_thirds",
            Self::Linear => "linear",
        }
    }
}

impl std::str::FromStr for ScalingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scaling model `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: ScalingModel,
    pub coefficients: Vec<f64>,
    /// `1 − RSS/TSS`; for constant data, 1 if the fit is exact and 0 otherwise.
    pub r2: f64,
    /// Residual sum of squares.
    pub rss: f64,
}

/// `(n, count)` pairs for one threshold.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries {
    pub threshold: f64,
    pub points: Vec<(usize, usize)>,
}

impl ScalingSeries {
    pub fn fit(&self, model: ScalingModel) -> Result<ScalingFit> {
        let pts: Vec<(f64, f64)> = self.points.iter().map(|&(n, c)| (n as f64, c as f64)).collect();
        scaling_fit(&pts, model)
    }
}

/// Least-squares fit of `count` against `n` in the basis of `model`.
pub fn scaling_fit(points: &[(f64, f64)], model: ScalingModel) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "scaling fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let p = model.basis(1.0).len();
    let columns: Vec<DVector<f64>> = (0..p)
        .map(|k| DVector::from_iterator(points.len(), points.iter().map(|&(n, _)| model.basis(n)[k])))
        .collect();
    let y = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let (coefficients, r2, rss) = least_squares(&columns, &y)?;
    Ok(ScalingFit {
        model,
        coefficients,
        r2,
        rss,
    })
}

/// `n,count,threshold` rows for several series.
pub fn scaling_csv(series: &[ScalingSeries]) -> String {
    let mut s = String::from("n,count,threshold\n");
    for ser in series {
        for &(n, c) in &ser.points {
            writeln!(s, "{n},{c},{}", fmt_f64(ser.threshold)).expect("string write");
        }
    }
    s
}

/// Parse the output of [`scaling_csv`], grouping rows by threshold.
pub fn parse_scaling_csv(text: &str, origin: &Path) -> Result<Vec<ScalingSeries>> {
    let mut out: Vec<ScalingSeries> = Vec::new();
    for (ln, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::Parse {
            path: origin.to_path_buf(),
            line: ln + 1,
            msg: msg.into(),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(bad("expected `n,count,threshold`"));
        }
        let n: usize = f[0].trim().parse().map_err(|_| bad("bad n"))?;
        let c: usize = f[1].trim().parse().map_err(|_| bad("bad count"))?;
        let t: f64 = f[2].trim().parse().map_err(|_| bad("bad threshold"))?;
        match out.iter_mut().find(|s| s.threshold == t) {
            Some(s) => s.points.push((n, c)),
            None => out.push(ScalingSeries {
                threshold: t,
                points: vec![(n, c)],
            }),
        }
    }
    Ok(out)
}

/// Frobenius distance between `Σ_l K_l` and `Z` of a captured run.
pub fn correction_identity_error<T: Scalar>(run: &FactorResult<T>) -> Result<f64> {
    let k = extract_corrections(run)?;
    Ok(add_scaled(&k.sum(), &run.z, -T::one())?.frobenius_norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StabilityVariant {
    /// `Z ← 3/2 Z − 1/2 Z³ S`
    Unstable,
    /// refinement with `δ` recomputed from `Z`
    Regular,
    /// localized refinement, Hermitian `δ` storage
    LocalSymm,
    /// localized refinement, general `δ` storage
    LocalUnsymm,
}

impl StabilityVariant {
    pub const ALL: [StabilityVariant; 4] = [Self::Unstable, Self::Regular, Self::LocalSymm, Self::LocalUnsymm];

    pub fn name(self) -> &'static str {
        match self {
            Self::Unstable => "unstable",
            Self::Regular => "regular",
            Self::LocalSymm => "local-symm",
            Self::LocalUnsymm => "local-unsymm",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub iter: usize,
    pub variant: StabilityVariant,
    /// `‖Z_i − S^{-1/2}‖₂`, a drift diagnostic.
    pub deviation: f64,
    /// `‖I − Z_i* S Z_i‖_F`, recomputed from `Z_i`.
    pub facterror: f64,
}

/// Rows for iterations `0..=iters` of every variant, grouped by variant.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
}

impl StabilityReport {
    pub fn series(&self, v: StabilityVariant) -> impl Iterator<Item = &StabilityRow> + '_ {
        self.rows.iter().filter(move |r| r.variant == v)
    }

    pub fn final_row(&self, v: StabilityVariant) -> Option<&StabilityRow> {
        self.series(v).last()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,variant,deviation,facterror\n");
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{}",
                r.iter,
                r.variant.name(),
                fmt_f64(r.deviation),
                fmt_f64(r.facterror)
            )
            .expect("string write");
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Iterate every variant `iters` times on the Wilson matrix starting from
/// `Z₀ = S^{-1/2}` and record drift and factorization error.
pub fn stability_experiment(iters: usize) -> Result<StabilityReport> {
    stability_experiment_on(&wilson_matrix(), iters)
}

/// [`stability_experiment`] for any Hermitian positive definite `s`.
pub fn stability_experiment_on(s: &HermMatrix, iters: usize) -> Result<StabilityReport> {
    if iters < 1 {
        return Err(Error::InvalidArgument("stability experiment needs at least one iteration".into()));
    }
    let root = dense_inverse_sqrt(s)?.to_general();
    let sg = s.to_general();
    let measure = |z: &GeneralMatrix| -> Result<(f64, f64)> {
        if z.iter().any(|(_, _, v)| !v.is_finite()) {
            return Ok((f64::INFINITY, f64::INFINITY));
        }
        let deviation = add_scaled(z, &root, -1.0)?.spectral_estimate(SPECTRAL_TOL).value;
        let facterror = factorization_error(&sg, z, 0.0)?.frobenius_norm();
        let clean = |x: f64| if x.is_finite() { x } else { f64::INFINITY };
        Ok((clean(deviation), clean(facterror)))
    };
    let c = coefficients(1)?;
    let mut rows = Vec::with_capacity(4 * (iters + 1));
    for variant in StabilityVariant::ALL {
        let mut push = |iter: usize, z: &GeneralMatrix| -> Result<()> {
            let (deviation, facterror) = measure(z)?;
            rows.push(StabilityRow {
                iter,
                variant,
                deviation,
                facterror,
            });
            Ok(())
        };
        match variant {
            StabilityVariant::Unstable => {
                let mut z = root.clone();
                push(0, &z)?;
                for i in 1..=iters {
                    z = unstable_step(s, &z)?;
                    push(i, &z)?;
                }
            }
            StabilityVariant::Regular => {
                let mut r = RegularRefiner::new(s, root.clone(), c.clone(), 0.0)?;
                push(0, r.z())?;
                for i in 1..=iters {
                    r.step()?;
                    push(i, r.z())?;
                }
            }
            StabilityVariant::LocalSymm | StabilityVariant::LocalUnsymm => {
                let storage = if variant == StabilityVariant::LocalSymm {
                    DeltaStorage::Hermitian
                } else {
                    DeltaStorage::General
                };
                // plain double precision product; its rounding is not symmetric
                let delta0 = factorization_error_general(&sg, &root, 0.0)?;
                let mut r = LocalRefiner::new(s, root.clone(), &delta0, storage, c.clone(), 0.0)?;
                push(0, r.z())?;
                for i in 1..=iters {
                    r.step()?;
                    push(i, r.z())?;
                }
            }
        }
    }
    Ok(StabilityReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::cut_distance;
    use crate::systems::{build_lattice, LatticeSpec};

    #[test]
    fn identity_profile() {
        let g = IndexGeometry::line((0..5).map(f64::from)).unwrap();
        let p = decay_vs_distance(&HermMatrix::<f64>::identity(5), &g).unwrap();
        assert_eq!(p.samples, vec![(0.0, 1.0); 5]);
        assert!(decay_vs_distance(&HermMatrix::<f64>::identity(4), &g).is_err());
    }

    #[test]
    fn lattice_profile_counts_pairs_once() {
        let d = build_lattice(&LatticeSpec::cube(1, 3, 1.0, 0.25)).unwrap();
        let mut p = decay_vs_distance(&d.matrix, &d.geometry).unwrap().samples;
        p.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(p, vec![(0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (1.0, 0.25), (1.0, 0.25)]);
    }

    #[test]
    fn cut_profile_of_initial_error() {
        let g = IndexGeometry::line([0.0, 1.0]).unwrap();
        let cut = cut_distance(&g, &[0], &[1]).unwrap();
        let d0 = GeneralMatrix::from_row_major(2, 2, &[0.0, -0.25, -0.25, 0.0]);
        let p = decay_vs_cut(&d0, &cut).unwrap();
        assert_eq!(p.samples, vec![(1.0, 0.25), (1.0, 0.25)]);
        assert!(decay_vs_cut(&GeneralMatrix::<f64>::zeros(2, 2), &cut).unwrap().is_empty());
        assert!(decay_vs_cut(&GeneralMatrix::<f64>::zeros(1, 1), &cut).is_err());
        let wider = GeneralMatrix::from_row_major(3, 3, &[0.0, -0.25, 0.5, -0.25, 0.0, 0.5, 0.5, 0.5, 1.0]);
        assert_eq!(decay_vs_cut(&wider, &cut).unwrap().samples, vec![(1.0, 0.25), (1.0, 0.25)]);
    }

    #[test]
    fn counts() {
        assert_eq!(count_entries_above(&HermMatrix::<f64>::identity(7), 0.5).unwrap(), 7);
        assert_eq!(count_entries_above(&GeneralMatrix::<f64>::identity(7), 0.5).unwrap(), 7);
        let d = build_lattice(&LatticeSpec::table_1d()).unwrap();
        assert_eq!(count_entries_above(&d.matrix, 0.1).unwrap(), 512 + 2 * 511);
        assert_eq!(count_entries_above(&d.matrix, 1.0).unwrap(), 0);
        assert_eq!(
            count_entries_above(&d.matrix.to_general().truncate(0.3).unwrap(), 0.0).unwrap(),
            count_entries_above(&d.matrix, 0.3).unwrap()
        );
        assert!(count_entries_above(&d.matrix, -1.0).is_err());
    }

    #[test]
    fn binning() {
        let p = DecayProfile {
            samples: vec![(0.0, 1.0), (0.5, 2.0), (2.9, 0.1), (2.1, 0.3)],
        };
        assert_eq!(p.binned_max(), vec![(0.0, 2.0), (2.0, 0.3)]);
    }

    #[test]
    fn exact_envelope() {
        let p = DecayProfile {
            samples: (0..20).map(|r| (r as f64, 3.0 * (-0.7 * r as f64).exp())).collect(),
        };
        let f = p.envelope_fit(0.0, 100.0).unwrap();
        assert!((f.slope + 0.7).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_is_exact() {
        let pts: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0].iter().map(|&n| (n, 3.0 * n)).collect();
        let f = scaling_fit(&pts, ScalingModel::Linear).unwrap();
        assert!(f.coefficients[0].abs() < 1e-10);
        assert!((f.coefficients[1] - 3.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_fit_of_constant_data() {
        let pts = [(8.0, 5.0), (16.0, 5.0), (32.0, 5.0)];
        let f = scaling_fit(&pts, ScalingModel::Constant).unwrap();
        assert_eq!(f.coefficients, vec![5.0]);
        assert_eq!(f.rss, 0.0);
        assert_eq!(f.r2, 1.0);
    }

    #[test]
    fn two_thirds_data_prefers_two_thirds_basis() {
        let pts: Vec<(f64, f64)> = [8.0, 64.0, 512.0, 4096.0, 32768.0]
            .iter()
            .map(|&n: &f64| (n, 4.0 + 2.5 * n.powf(2.0 / 3.0)))
            .collect();
        let t = scaling_fit(&pts, ScalingModel::TwoThirds).unwrap();
        let s = scaling_fit(&pts, ScalingModel::Sqrt).unwrap();
        assert!(t.r2 > 0.999);
        assert!(s.rss > t.rss);
        assert!(s.r2 < t.r2);
    }

    #[test]
    fn degenerate_designs() {
        assert!(matches!(
            scaling_fit(&[(4.0, 1.0), (4.0, 2.0), (4.0, 3.0)], ScalingModel::Linear),
            Err(Error::DegenerateDesign)
        ));
        assert!(scaling_fit(&[(4.0, 1.0), (8.0, 2.0)], ScalingModel::Linear).is_err());
        assert!(matches!(
            scaling_fit(&[(1.0, 1.0), (8.0, 2.0), (27.0, 2.0)], ScalingModel::TwoThirds).map(|f| f.rss < 1e-20),
            Ok(true)
        ));
    }

    #[test]
    fn scaling_csv_round_trip() {
        let s = vec![
            ScalingSeries {
                threshold: 1e-6,
                points: vec![(8, 64), (16, 200)],
            },
            ScalingSeries {
                threshold: 1e-8,
                points: vec![(8, 64)],
            },
        ];
        let text = scaling_csv(&s);
        assert!(text.starts_with("n,count,threshold\n8,64,"));
        assert_eq!(parse_scaling_csv(&text, Path::new("x")).unwrap(), s);
    }

    #[test]
    fn stability_rows() {
        let r = stability_experiment(3).unwrap();
        assert_eq!(r.rows.len(), 16);
        for v in StabilityVariant::ALL {
            let first = r.series(v).next().unwrap();
            assert_eq!(first.iter, 0);
            assert!(first.facterror < 1e-10);
        }
        assert!(stability_experiment(0).is_err());
        assert!(r.to_csv().starts_with("iter,variant,deviation,facterror\n0,unstable,"));
    }

    #[test]
    fn export_floor() {
        let p = DecayProfile {
            samples: vec![(1.0, 1e-40)],
        };
        let csv = p.to_csv();
        let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(row, vec![1.0, EXPORT_FLOOR]);
    }
}
