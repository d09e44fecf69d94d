use nalgebra::{DMatrix, DVector, Vector3};

use super::layout::locate;
use super::mapping::falling;
use super::SplineError;

/// One polynomial piece; row `k` of `coefficients` holds `a_0..a_N` of
/// dimension `k` in local time `[0, duration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSegment {
    coefficients: DMatrix<f64>,
    duration: f64,
}

impl PolynomialSegment {
    pub fn new(coefficients: DMatrix<f64>, duration: f64) -> Result<Self, SplineError> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(SplineError::DegenerateSegment(duration));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(SplineError::Shape("non-finite coefficient".into()));
        }
        if coefficients.ncols() == 0 {
            return Err(SplineError::Shape("no coefficients".into()));
        }
        Ok(Self {
            coefficients,
            duration,
        })
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn order(&self) -> usize {
        self.coefficients.ncols() - 1
    }

    pub fn dims(&self) -> usize {
        self.coefficients.nrows()
    }

    /// Derivative `k` at local time `t` (Horner on the differentiated
    /// coefficients).
    pub fn evaluate_local(&self, t: f64, k: usize, out: &mut [f64]) {
        let n = self.order();
        for (dim, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            if k <= n {
                for i in (k..=n).rev() {
                    acc = acc * t + falling(i, k) * self.coefficients[(dim, i)];
                }
            }
            *o = acc;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSpline {
    segments: Vec<PolynomialSegment>,
    durations: Vec<f64>,
}

impl PolynomialSpline {
    pub fn new(segments: Vec<PolynomialSegment>) -> Result<Self, SplineError> {
        let first = segments.first().ok_or(SplineError::Empty)?;
        let (dims, order) = (first.dims(), first.order());
        if segments
            .iter()
            .any(|s| s.dims() != dims || s.order() != order)
        {
            return Err(SplineError::Shape("segments differ in shape".into()));
        }
        let durations = segments.iter().map(|s| s.duration).collect();
        Ok(Self {
            segments,
            durations,
        })
    }

    pub fn segments(&self) -> &[PolynomialSegment] {
        &self.segments
    }

    pub fn dims(&self) -> usize {
        self.segments[0].dims()
    }

    pub fn order(&self) -> usize {
        self.segments[0].order()
    }

    pub fn duration(&self) -> f64 {
        self.durations.iter().sum()
    }

    /// Derivative `k` at time `t`. At a junction the later segment is used.
    pub fn evaluate(&self, t: f64, k: usize) -> Result<DVector<f64>, SplineError> {
        let (s, local) = locate(&self.durations, t)?;
        let mut out = DVector::zeros(self.dims());
        self.segments[s].evaluate_local(local, k, out.as_mut_slice());
        Ok(out)
    }

    /// [`evaluate`](Self::evaluate) for three-dimensional splines.
    pub fn evaluate3(&self, t: f64, k: usize) -> Result<Vector3<f64>, SplineError> {
        if self.dims() != 3 {
            return Err(SplineError::Shape(format!(
                "spline has {} dimensions",
                self.dims()
            )));
        }
        let (s, local) = locate(&self.durations, t)?;
        let mut out = [0.0; 3];
        self.segments[s].evaluate_local(local, k, &mut out);
        Ok(Vector3::from(out))
    }

    pub fn position(&self, t: f64) -> Vector3<f64> {
        self.evaluate3(t.clamp(0.0, self.duration()), 0)
            .expect("3-D spline")
    }

    pub fn velocity(&self, t: f64) -> Vector3<f64> {
        self.evaluate3(t.clamp(0.0, self.duration()), 1)
            .expect("3-D spline")
    }

    pub fn acceleration(&self, t: f64) -> Vector3<f64> {
        self.evaluate3(t.clamp(0.0, self.duration()), 2)
            .expect("3-D spline")
    }
}
