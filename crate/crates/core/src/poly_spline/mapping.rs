use nalgebra::{DMatrix, RowDVector};

use super::SplineError;

/// Coefficient-to-endpoint-derivative mapping of one segment and its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct Mapping {
    pub a: DMatrix<f64>,
    pub a_inv: DMatrix<f64>,
}

/// Falling factorial `i! / (i - k)!`.
#[inline]
pub(crate) fn falling(i: usize, k: usize) -> f64 {
    ((i - k + 1)..=i).map(|x| x as f64).product()
}

/// Row vector `r` with `r · a = f^(k)(t)` for coefficients `a` of an
/// order-`order` polynomial.
pub fn derivative_row(order: usize, t: f64, k: usize) -> RowDVector<f64> {
    let mut row = RowDVector::zeros(order + 1);
    let mut pow = 1.0;
    for i in k..=order {
        row[i] = falling(i, k) * pow;
        pow *= t;
    }
    row
}

fn check_order(order: usize) -> Result<(), SplineError> {
    if order.is_multiple_of(2) {
        Err(SplineError::EvenOrder(order))
    } else {
        Ok(())
    }
}

/// Exact rational `num / den`, kept reduced with `den > 0`.
#[derive(Clone, Copy)]
struct Ratio(i128, i128);

impl Ratio {
    fn new(num: i128, den: i128) -> Self {
        let g = gcd(num.abs(), den.abs()).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Ratio(s * num / g, s * den / g)
    }
    fn sub_mul(self, a: Ratio, b: Ratio) -> Ratio {
        // self - a * b
        let (n, d) = (a.0 * b.0, a.1 * b.1);
        let g = gcd(n.abs(), d).max(1);
        let (n, d) = (n / g, d / g);
        Ratio::new(self.0 * d - n * self.1, self.1 * d)
    }
    fn div(self, o: Ratio) -> Ratio {
        Ratio::new(self.0 * o.1, self.1 * o.0)
    }
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Mapping for a unit-duration segment. Its entries are integers, so the
/// inverse is computed exactly by rational Gauss-Jordan elimination and
/// rounded once.
fn unit_mapping(order: usize) -> Mapping {
    let n = order + 1;
    let h = n / 2;
    let mut a = DMatrix::zeros(n, n);
    for k in 0..h {
        a.set_row(k, &derivative_row(order, 0.0, k));
        a.set_row(h + k, &derivative_row(order, 1.0, k));
    }
    let mut m: Vec<Vec<Ratio>> = (0..n)
        .map(|r| {
            (0..2 * n)
                .map(|c| {
                    if c < n {
                        Ratio::new(a[(r, c)] as i128, 1)
                    } else {
                        Ratio::new((c - n == r) as i128, 1)
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| m[r][col].0 != 0)
            .expect("unit mapping is invertible");
        m.swap(col, pivot);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v = v.div(p);
        }
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != col && row[col].0 != 0 {
                let f = row[col];
                for (x, &v) in row.iter_mut().zip(&pivot_row) {
                    *x = x.sub_mul(f, v);
                }
            }
        }
    }
    let a_inv = DMatrix::from_fn(n, n, |r, c| {
        let q = m[r][n + c];
        q.0 as f64 / q.1 as f64
    });
    Mapping { a, a_inv }
}

/// Builds `A` (coefficients to stacked start and end derivatives of orders
/// `0..=(order - 1) / 2`) and its inverse for a segment of `duration`.
///
/// Both are assembled from the unit-duration mapping by diagonal scaling,
/// `A = diag(T^-k) A1 diag(T^j)`, which avoids inverting a matrix with
/// entries spanning many orders of magnitude.
pub fn build_mapping(order: usize, duration: f64) -> Result<Mapping, SplineError> {
    check_order(order)?;
    if !(duration > 1e-9) || !duration.is_finite() {
        return Err(SplineError::DegenerateSegment(duration));
    }
    let unit = unit_mapping(order);
    let n = order + 1;
    let h = n / 2;
    let tk: Vec<f64> = (0..n).map(|r| duration.powi((r % h) as i32)).collect();
    let tj: Vec<f64> = (0..n).map(|j| duration.powi(j as i32)).collect();
    let a = DMatrix::from_fn(n, n, |r, c| unit.a[(r, c)] * tj[c] / tk[r]);
    let a_inv = DMatrix::from_fn(n, n, |r, c| unit.a_inv[(r, c)] * tk[c] / tj[r]);
    Ok(Mapping { a, a_inv })
}

/// Unit-duration inverse mapping, shared by the cost and sampling code.
pub(crate) fn unit_inverse(order: usize) -> Result<DMatrix<f64>, SplineError> {
    check_order(order)?;
    Ok(unit_mapping(order).a_inv)
}
