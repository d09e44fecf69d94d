use std::io::Write;

use serde::{Deserialize, Serialize};

use super::PolynomialSpline;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentExport {
    pub duration: f64,
    /// One coefficient list `a_0..a_N` per dimension.
    pub coefficients: Vec<Vec<f64>>,
}

/// Structured-text form of a spline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineExport {
    pub order: usize,
    pub dims: usize,
    pub segments: Vec<SegmentExport>,
}

impl From<&PolynomialSpline> for SplineExport {
    fn from(s: &PolynomialSpline) -> Self {
        Self {
            order: s.order(),
            dims: s.dims(),
            segments: s
                .segments()
                .iter()
                .map(|seg| SegmentExport {
                    duration: seg.duration(),
                    coefficients: seg
                        .coefficients()
                        .row_iter()
                        .map(|r| r.iter().copied().collect())
                        .collect(),
                })
                .collect(),
        }
    }
}

impl PolynomialSpline {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SplineExport::from(self)).expect("spline serializes")
    }

    /// Writes `t,x,y,z,vx,vy,vz` rows sampled every `dt` seconds, including
    /// the final instant.
    pub fn write_samples_csv<W: Write>(&self, w: W, dt: f64) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "x", "y", "z", "vx", "vy", "vz"])?;
        let total = self.duration();
        let n = (total / dt).ceil() as usize;
        for i in 0..=n {
            let t = (i as f64 * dt).min(total);
            let p = self.position(t);
            let v = self.velocity(t);
            out.serialize((t, p.x, p.y, p.z, v.x, v.y, v.z))?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly_spline::PolynomialSegment;
    use nalgebra::DMatrix;

    #[test]
    fn json_and_csv() {
        let c = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 1.0, 0.0, 2.0, 0.5]);
        let s = PolynomialSpline::new(vec![PolynomialSegment::new(c, 2.0).unwrap()]).unwrap();
        let e: SplineExport = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(e.segments[0].coefficients[2], vec![2.0, 0.5]);
        let mut buf = Vec::new();
        s.write_samples_csv(&mut buf, 0.5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().last().unwrap().starts_with("2.0,2.0,1.0,3.0"));
    }
}
