//! Central-composite designs, full quadratic response surfaces, and the
//! admissible-acceleration surface under an effort limit.
//!
//! Factors are coded so that a factor's `low`/`high` map to -1/+1. The
//! design's axial points sit at `±axial_distance` in coded units, which may
//! lie outside `[low, high]`; [`FactorSpec::spanning`] builds a factor whose
//! full design (axial points included) spans a given physical interval.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::oscillation::{self, OscillationError, RingdownConfig, StopManeuver};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DoeError {
    #[error("factor {name}: low ({low}) must be below high ({high})")]
    InvalidFactor { name: String, low: f64, high: f64 },
    #[error("a central-composite design needs at least 2 factors, got {0}")]
    TooFewFactors(usize),
    #[error("a central-composite design needs at least one centre point")]
    NoCenterPoints,
    #[error("{responses} responses for {points} design points")]
    SizeMismatch { points: usize, responses: usize },
    #[error("quadratic basis has {terms} terms but rank {rank} from {points} points")]
    RankDeficient { terms: usize, rank: usize, points: usize },
    #[error("responder failed at design point {index}: {message}")]
    Responder { index: usize, message: String },
    #[error("factor `{0}` is not part of the model")]
    MissingFactor(String),
    #[error("the acceleration surface needs exactly 3 factors, got {0}")]
    SurfaceFactorCount(usize),
    #[error("point has {actual} coordinates, model has {expected} factors")]
    Dimension { expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorSpec {
    pub name: String,
    pub low: f64,
    pub high: f64,
}

impl FactorSpec {
    pub fn new(name: impl Into<String>, low: f64, high: f64) -> Result<Self, DoeError> {
        let name = name.into();
        if !(low < high) || !low.is_finite() || !high.is_finite() {
            return Err(DoeError::InvalidFactor { name, low, high });
        }
        Ok(Self { name, low, high })
    }

    /// Factor whose axial points at `±axial` land on `min`/`max`.
    pub fn spanning(name: impl Into<String>, min: f64, max: f64, axial: f64) -> Result<Self, DoeError> {
        let name = name.into();
        if !(min < max) || !(axial >= 1.0) {
            return Err(DoeError::InvalidFactor { name, low: min, high: max });
        }
        let center = 0.5 * (min + max);
        let half = 0.5 * (max - min) / axial;
        Self::new(name, center - half, center + half)
    }

    fn center(&self) -> f64 {
        0.5 * (self.low + self.high)
    }

    fn half_range(&self) -> f64 {
        0.5 * (self.high - self.low)
    }

    pub fn code(&self, physical: f64) -> f64 {
        (physical - self.center()) / self.half_range()
    }

    pub fn decode(&self, coded: f64) -> f64 {
        self.center() + coded * self.half_range()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxialKind {
    /// Axial distance `(2^k)^(1/4)`.
    #[default]
    Rotatable,
    /// Axial points on the faces of the factorial cube.
    FaceCentered,
}

impl AxialKind {
    pub fn distance(self, k: usize) -> f64 {
        match self {
            AxialKind::Rotatable => (2f64.powi(k as i32)).powf(0.25),
            AxialKind::FaceCentered => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Factorial,
    Axial,
    Center,
}

impl PointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PointKind::Factorial => "factorial",
            PointKind::Axial => "axial",
            PointKind::Center => "center",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcDesign {
    pub factors: Vec<FactorSpec>,
    pub axial_distance: f64,
    pub n_center: usize,
    /// Coded points: factorial (standard order), axial, then centre.
    pub points: Vec<Vec<f64>>,
}

impl CcDesign {
    pub fn k(&self) -> usize {
        self.factors.len()
    }

    pub fn point_kind(&self, index: usize) -> PointKind {
        let k = self.k();
        let factorial = 1usize << k;
        if index < factorial {
            PointKind::Factorial
        } else if index < factorial + 2 * k {
            PointKind::Axial
        } else {
            PointKind::Center
        }
    }

    pub fn decode(&self, coded: &[f64]) -> Vec<f64> {
        self.factors.iter().zip(coded).map(|(f, &c)| f.decode(c)).collect()
    }

    pub fn physical_points(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| self.decode(p)).collect()
    }
}

/// Builds a central-composite design over `factors`.
pub fn ccd_generate(factors: &[FactorSpec], axial: AxialKind, n_center: usize) -> Result<CcDesign, DoeError> {
    let k = factors.len();
    if k < 2 {
        return Err(DoeError::TooFewFactors(k));
    }
    if n_center == 0 {
        return Err(DoeError::NoCenterPoints);
    }
    let alpha = axial.distance(k);
    let mut points = Vec::with_capacity((1 << k) + 2 * k + n_center);
    // Standard (Yates) order: the first factor alternates fastest.
    for run in 0..(1usize << k) {
        points.push((0..k).map(|j| if run >> j & 1 == 1 { 1.0 } else { -1.0 }).collect());
    }
    for j in 0..k {
        for sign in [-1.0, 1.0] {
            let mut p = vec![0.0; k];
            p[j] = sign * alpha;
            points.push(p);
        }
    }
    points.extend(std::iter::repeat_n(vec![0.0; k], n_center));
    Ok(CcDesign {
        factors: factors.to_vec(),
        axial_distance: alpha,
        n_center,
        points,
    })
}

/// Evaluates `responder` at every coded design point, in parallel. The
/// result is ordered by design index.
pub fn run_experiments<F, E>(design: &CcDesign, responder: F) -> Result<Vec<f64>, DoeError>
where
    F: Fn(&[f64]) -> Result<f64, E> + Sync,
    E: std::fmt::Display,
{
    design
        .points
        .par_iter()
        .enumerate()
        .map(|(index, p)| {
            responder(p).map_err(|e| DoeError::Responder {
                index,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Number of terms of a full quadratic in `k` factors.
pub fn quadratic_terms(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Basis row `[1, x_1..x_k, x_i x_j (i<j), x_1^2..x_k^2]`.
pub fn quadratic_basis(x: &[f64]) -> Vec<f64> {
    let k = x.len();
    let mut row = Vec::with_capacity(quadratic_terms(k));
    row.push(1.0);
    row.extend_from_slice(x);
    for i in 0..k {
        for j in (i + 1)..k {
            row.push(x[i] * x[j]);
        }
    }
    row.extend(x.iter().map(|v| v * v));
    row
}

/// Term labels in basis order, e.g. `x1`, `x1*x2`, `x1^2`.
pub fn term_names(k: usize) -> Vec<String> {
    let mut names = vec!["intercept".to_string()];
    names.extend((1..=k).map(|i| format!("x{i}")));
    for i in 1..=k {
        for j in (i + 1)..=k {
            names.push(format!("x{i}*x{j}"));
        }
    }
    names.extend((1..=k).map(|i| format!("x{i}^2")));
    names
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticModel {
    pub factors: Vec<FactorSpec>,
    /// Coefficients in [`quadratic_basis`] order.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
    pub max_residual: f64,
    /// Largest `|coded|` coordinate covered by the fitted design.
    pub coded_extent: f64,
}

/// Value of a model at a point, with a flag for points outside the design.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub extrapolated: bool,
}

impl QuadraticModel {
    pub fn k(&self) -> usize {
        self.factors.len()
    }

    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn linear(&self, i: usize) -> f64 {
        self.coefficients[1 + i]
    }

    pub fn interaction(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let k = self.k();
        // Offset of pair (i, j), i < j, in row-major upper-triangle order.
        let offset = i * (2 * k - i - 1) / 2 + (j - i - 1);
        self.coefficients[1 + k + offset]
    }

    pub fn pure_quadratic(&self, i: usize) -> f64 {
        let k = self.k();
        self.coefficients[1 + k + k * (k - 1) / 2 + i]
    }

    pub fn predict_coded(&self, coded: &[f64]) -> f64 {
        quadratic_basis(coded).iter().zip(&self.coefficients).map(|(b, c)| b * c).sum()
    }

    pub fn factor_index(&self, name: &str) -> Result<usize, DoeError> {
        self.factors
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| DoeError::MissingFactor(name.to_string()))
    }

    pub fn code(&self, physical: &[f64]) -> Vec<f64> {
        self.factors.iter().zip(physical).map(|(f, &x)| f.code(x)).collect()
    }
}

/// Least-squares fit of the full quadratic to `responses`.
pub fn fit_quadratic(design: &CcDesign, responses: &[f64]) -> Result<QuadraticModel, DoeError> {
    fit_points(&design.factors, &design.points, responses)
}

/// As [`fit_quadratic`] for arbitrary coded points.
pub fn fit_points(factors: &[FactorSpec], points: &[Vec<f64>], responses: &[f64]) -> Result<QuadraticModel, DoeError> {
    let k = factors.len();
    let terms = quadratic_terms(k);
    if points.len() != responses.len() {
        return Err(DoeError::SizeMismatch {
            points: points.len(),
            responses: responses.len(),
        });
    }
    if let Some(p) = points.iter().find(|p| p.len() != k) {
        return Err(DoeError::Dimension {
            expected: k,
            actual: p.len(),
        });
    }
    let n = points.len();
    if n < terms {
        return Err(DoeError::RankDeficient { terms, rank: n, points: n });
    }
    let x = DMatrix::from_fn(n, terms, |r, c| quadratic_basis(&points[r])[c]);
    let y = DVector::from_column_slice(responses);

    let svd = x.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let cutoff = s_max * (n.max(terms) as f64) * f64::EPSILON * 16.0;
    let rank = svd.rank(cutoff);
    if rank < terms {
        return Err(DoeError::RankDeficient { terms, rank, points: n });
    }
    let beta = svd.solve(&y, cutoff).expect("U and V were computed");

    let fitted = &x * &beta;
    let residuals = &y - &fitted;
    let max_residual = residuals.amax();
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res = residuals.norm_squared();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let coded_extent = points.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));

    Ok(QuadraticModel {
        factors: factors.to_vec(),
        coefficients: beta.iter().copied().collect(),
        r_squared,
        max_residual,
        coded_extent,
    })
}

/// Evaluates the model at a physical point.
pub fn predict(model: &QuadraticModel, physical_point: &[f64]) -> Result<Prediction, DoeError> {
    if physical_point.len() != model.k() {
        return Err(DoeError::Dimension {
            expected: model.k(),
            actual: physical_point.len(),
        });
    }
    let coded = model.code(physical_point);
    let extrapolated = coded.iter().any(|c| c.abs() > model.coded_extent * (1.0 + 1e-12));
    Ok(Prediction {
        value: model.predict_coded(&coded),
        extrapolated,
    })
}

/// Admissible acceleration in one cell of the limit surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AccelLimit {
    /// Largest acceleration keeping the effort within the limit.
    Bounded(f64),
    /// The limit holds over the whole range; carries the range top.
    Unbounded(f64),
    /// The effort exceeds the limit already at the lowest acceleration.
    Infeasible,
}

impl AccelLimit {
    pub fn value(&self) -> Option<f64> {
        match *self {
            AccelLimit::Bounded(a) | AccelLimit::Unbounded(a) => Some(a),
            AccelLimit::Infeasible => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            AccelLimit::Bounded(_) => "bounded",
            AccelLimit::Unbounded(_) => "unbounded",
            AccelLimit::Infeasible => "infeasible",
        }
    }

    /// Total order: infeasible below every admissible value.
    pub fn rank(&self) -> f64 {
        self.value().unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSurface {
    pub effort_limit: f64,
    pub friction_factor: String,
    pub mass_factor: String,
    pub accel_factor: String,
    pub friction_grid: Vec<f64>,
    pub mass_grid: Vec<f64>,
    /// Physical acceleration range searched.
    pub accel_range: (f64, f64),
    /// `cells[i][j]` for `friction_grid[i]`, `mass_grid[j]`.
    pub cells: Vec<Vec<AccelLimit>>,
}

/// Largest `x` in `[lo, hi]` with `c2 x^2 + c1 x + c0 <= 0` on all of
/// `[lo, x]`.
pub fn admissible_upper_bound(c2: f64, c1: f64, c0: f64, lo: f64, hi: f64) -> AccelLimit {
    let g = |x: f64| (c2 * x + c1) * x + c0;
    let dg = |x: f64| 2.0 * c2 * x + c1;
    if g(lo) > 0.0 {
        return AccelLimit::Infeasible;
    }
    let mut roots: Vec<f64> = Vec::with_capacity(2);
    if c2 == 0.0 {
        if c1 != 0.0 {
            roots.push(-c0 / c1);
        }
    } else {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc >= 0.0 {
            // Cancellation-free pair.
            let sign = if c1 >= 0.0 { 1.0 } else { -1.0 };
            let q = -0.5 * (c1 + sign * disc.sqrt());
            if q != 0.0 {
                roots.push(q / c2);
                roots.push(c0 / q);
            } else {
                roots.push(-c1 / (2.0 * c2));
            }
        }
    }
    roots.retain(|r| r.is_finite() && *r > lo && *r <= hi);
    roots.sort_by(|a, b| a.total_cmp(b));
    for r in roots {
        let slope = dg(r);
        let leaves = slope > 0.0 || (slope == 0.0 && c2 > 0.0);
        if leaves {
            return AccelLimit::Bounded(r);
        }
    }
    AccelLimit::Unbounded(hi)
}

/// For each (friction, mass) cell, the largest acceleration over the
/// design's coded range whose predicted effort stays within `effort_limit`.
///
/// The model must have exactly three factors; `accel_factor` names the
/// acceleration one, and the remaining two (in model order) are the
/// friction and mass axes.
pub fn acceleration_limit_surface(
    model: &QuadraticModel,
    effort_limit: f64,
    accel_factor: &str,
    friction_grid: &[f64],
    mass_grid: &[f64],
) -> Result<LimitSurface, DoeError> {
    if model.k() != 3 {
        return Err(DoeError::SurfaceFactorCount(model.k()));
    }
    let a = model.factor_index(accel_factor)?;
    let others: Vec<usize> = (0..3).filter(|&i| i != a).collect();
    let (fi, mi) = (others[0], others[1]);
    let extent = model.coded_extent;
    let accel = &model.factors[a];

    let cells = friction_grid
        .iter()
        .map(|&friction| {
            mass_grid
                .iter()
                .map(|&mass| {
                    let mut coded = [0.0; 3];
                    coded[fi] = model.factors[fi].code(friction);
                    coded[mi] = model.factors[mi].code(mass);
                    // Collect the quadratic in the coded acceleration x:
                    // g(x) = c2 x^2 + c1 x + c0 - limit.
                    let c2 = model.pure_quadratic(a);
                    let c1 = model.linear(a)
                        + model.interaction(a, fi) * coded[fi]
                        + model.interaction(a, mi) * coded[mi];
                    coded[a] = 0.0;
                    let c0 = model.predict_coded(&coded) - effort_limit;
                    match admissible_upper_bound(c2, c1, c0, -extent, extent) {
                        AccelLimit::Bounded(x) => AccelLimit::Bounded(accel.decode(x)),
                        AccelLimit::Unbounded(x) => AccelLimit::Unbounded(accel.decode(x)),
                        AccelLimit::Infeasible => AccelLimit::Infeasible,
                    }
                })
                .collect()
        })
        .collect();

    Ok(LimitSurface {
        effort_limit,
        friction_factor: model.factors[fi].name.clone(),
        mass_factor: model.factors[mi].name.clone(),
        accel_factor: accel.name.clone(),
        friction_grid: friction_grid.to_vec(),
        mass_grid: mass_grid.to_vec(),
        accel_range: (accel.decode(-extent), accel.decode(extent)),
        cells,
    })
}

/// Factor names of the default ringdown experiment, in design order.
pub const FRICTION_FACTOR: &str = "coulomb_friction_Nm";
pub const MASS_FACTOR: &str = "payload_mass_kg";
pub const ACCEL_FACTOR: &str = "deceleration_mps2";
/// Response column of the default ringdown experiment.
pub const RESPONSE_NAME: &str = "peak_force_N";

/// Friction, payload mass and deceleration factors whose design (axial
/// points included) spans the given physical intervals.
pub fn ringdown_factors(
    friction: [f64; 2],
    mass: [f64; 2],
    deceleration: [f64; 2],
    axial: AxialKind,
) -> Result<Vec<FactorSpec>, DoeError> {
    let alpha = axial.distance(3);
    Ok(vec![
        FactorSpec::spanning(FRICTION_FACTOR, friction[0], friction[1], alpha)?,
        FactorSpec::spanning(MASS_FACTOR, mass[0], mass[1], alpha)?,
        FactorSpec::spanning(ACCEL_FACTOR, deceleration[0], deceleration[1], alpha)?,
    ])
}

/// Peak cable force after a stop, as a function of (Coulomb friction on
/// both joints, payload mass, braking deceleration).
///
/// The deceleration enters through the braking phase: the arm follows the
/// payload as it brakes from `maneuver.speed`, and the arm state when the
/// payload comes to rest starts the ringdown.
#[derive(Debug, Clone)]
pub struct RingdownResponder {
    pub base: RingdownConfig,
    pub maneuver: StopManeuver,
}

impl RingdownResponder {
    pub fn new(base: RingdownConfig, maneuver: StopManeuver) -> Self {
        Self { base, maneuver }
    }

    /// Response at a physical `[friction, mass, deceleration]` point.
    pub fn response(&self, physical: &[f64]) -> Result<f64, OscillationError> {
        let [friction, mass, deceleration] = physical else {
            return Err(OscillationError::InvalidConfig(format!(
                "expected 3 factor values, got {}",
                physical.len()
            )));
        };
        // Axial points decoded onto a zero bound can land a rounding error
        // below it.
        let friction = if *friction < 0.0 && *friction > -1e-9 { 0.0 } else { *friction };
        let mut cfg = self.base.clone();
        cfg.coulomb_friction = [friction; 2];
        cfg.payload_mass = *mass;
        let maneuver = StopManeuver {
            deceleration: *deceleration,
            ..self.maneuver
        };
        let samples = oscillation::simulate_ringdown(&cfg.after_stop(&maneuver)?)?;
        oscillation::peak_force(&samples)
    }

    /// Responses at every point of `design`, in design order.
    pub fn run(&self, design: &CcDesign) -> Result<Vec<f64>, DoeError> {
        run_experiments(design, |coded| self.response(&design.decode(coded)))
    }
}

/// `n` evenly spaced values over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
