//! Homography type and the Hartley-normalized Direct Linear Transform.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::RegistrationError;

/// Source point (reference image) and destination point (original image).
pub type PointPair = ([f64; 2], [f64; 2]);

/// 3×3 projective transform from reference to original pixel coordinates.
///
/// Stored with `h[2][2] == 1`, or with unit Frobenius norm when that entry
/// vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: Matrix3<f64>,
}

fn normalize(m: Matrix3<f64>) -> Option<Matrix3<f64>> {
    let norm = m.norm();
    if !norm.is_finite() || norm == 0.0 {
        return None;
    }
    let h22 = m[(2, 2)];
    if h22.abs() > 1e-12 * norm {
        Some(m / h22)
    } else {
        let mut out = m / norm;
        // fix the sign so the normalized form is unique
        if let Some(first) = out.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                out = -out;
            }
        }
        Some(out)
    }
}

impl Homography {
    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self {
            m: Matrix3::new(1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0),
        }
    }

    /// Normalizes `m`; fails when it is singular or not finite.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, RegistrationError> {
        let m = normalize(m).ok_or(RegistrationError::SingularHomography)?;
        let unit = m / m.norm();
        if unit.determinant().abs() < 1e-12 {
            return Err(RegistrationError::SingularHomography);
        }
        Ok(Self { m })
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self, RegistrationError> {
        Self::from_matrix(Matrix3::from_fn(|r, c| rows[r][c]))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = &self.m;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    /// Maps a point; `None` when it lands on the line at infinity.
    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> Option<[f64; 2]> {
        let p = self.m * Vector3::new(x, y, 1.0);
        if p[2].abs() < 1e-12 {
            return None;
        }
        Some([p[0] / p[2], p[1] / p[2]])
    }

    pub fn inverse(&self) -> Result<Self, RegistrationError> {
        let inv = self
            .m
            .try_inverse()
            .ok_or(RegistrationError::SingularHomography)?;
        Self::from_matrix(inv)
    }

    pub fn compose(&self, other: &Homography) -> Result<Self, RegistrationError> {
        Self::from_matrix(self.m * other.m)
    }

    /// Euclidean distance between `apply(src)` and `dst`; infinite when undefined.
    pub fn transfer_error(&self, src: [f64; 2], dst: [f64; 2]) -> f64 {
        match self.apply(src[0], src[1]) {
            Some(p) => ((p[0] - dst[0]).powi(2) + (p[1] - dst[1]).powi(2)).sqrt(),
            None => f64::INFINITY,
        }
    }
}

impl Serialize for Homography {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Homography {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = <[[f64; 3]; 3]>::deserialize(d)?;
        Homography::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

/// Translate the centroid to the origin and scale mean distance to √2.
fn hartley(points: impl Iterator<Item = [f64; 2]> + Clone) -> Option<Matrix3<f64>> {
    let n = points.clone().count() as f64;
    let (sx, sy) = points
        .clone()
        .fold((0.0, 0.0), |(ax, ay), p| (ax + p[0], ay + p[1]));
    let (cx, cy) = (sx / n, sy / n);
    let mean = points
        .map(|p| ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if !mean.is_finite() || mean <= 1e-12 {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean;
    Some(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn transform(t: &Matrix3<f64>, p: [f64; 2]) -> [f64; 2] {
    [
        t[(0, 0)] * p[0] + t[(0, 2)],
        t[(1, 1)] * p[1] + t[(1, 2)],
    ]
}

/// True when three of the four points are (nearly) collinear.
pub(crate) fn has_collinear_triple(points: &[[f64; 2]]) -> bool {
    let n = points.len();
    let scale = points
        .iter()
        .flat_map(|p| points.iter().map(move |q| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return true;
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (points[i], points[j], points[k]);
                let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                if cross.abs() <= 1e-6 * scale {
                    return true;
                }
            }
        }
    }
    false
}

/// Least-squares homography from ≥ 4 correspondences (exact for 4).
pub fn estimate_homography_dlt(pairs: &[PointPair]) -> Result<Homography, RegistrationError> {
    let n = pairs.len();
    if n < 4 {
        return Err(RegistrationError::InsufficientPoints { needed: 4, got: n });
    }
    if pairs
        .iter()
        .any(|(s, d)| !(s[0].is_finite() && s[1].is_finite() && d[0].is_finite() && d[1].is_finite()))
    {
        return Err(RegistrationError::Degenerate("non-finite coordinate".into()));
    }
    if n == 4 {
        let src: Vec<_> = pairs.iter().map(|p| p.0).collect();
        let dst: Vec<_> = pairs.iter().map(|p| p.1).collect();
        if has_collinear_triple(&src) || has_collinear_triple(&dst) {
            return Err(RegistrationError::Degenerate(
                "three of four points are collinear".into(),
            ));
        }
    }
    let degenerate = || RegistrationError::Degenerate("points are coincident".into());
    let t_src = hartley(pairs.iter().map(|p| p.0)).ok_or_else(degenerate)?;
    let t_dst = hartley(pairs.iter().map(|p| p.1)).ok_or_else(degenerate)?;

    // Pad to at least 9 rows so the SVD exposes the full right null space.
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in pairs.iter().enumerate() {
        let [sx, sy] = transform(&t_src, *s);
        let [dx, dy] = transform(&t_dst, *d);
        let r = 2 * i;
        a[(r, 0)] = sx;
        a[(r, 1)] = sy;
        a[(r, 2)] = 1.0;
        a[(r, 6)] = -dx * sx;
        a[(r, 7)] = -dx * sy;
        a[(r, 8)] = -dx;
        a[(r + 1, 3)] = sx;
        a[(r + 1, 4)] = sy;
        a[(r + 1, 5)] = 1.0;
        a[(r + 1, 6)] = -dy * sx;
        a[(r + 1, 7)] = -dy * sy;
        a[(r + 1, 8)] = -dy;
    }
    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| RegistrationError::Degenerate("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let smallest = order[0];
    let runner_up = svd.singular_values[order[1]];
    let largest = svd.singular_values[order[order.len() - 1]];
    if runner_up <= 1e-10 * largest {
        return Err(RegistrationError::Degenerate(
            "correspondences do not determine a unique homography".into(),
        ));
    }
    let h = v_t.row(smallest);
    let h_norm = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let t_dst_inv = t_dst.try_inverse().ok_or_else(degenerate)?;
    Homography::from_matrix(t_dst_inv * h_norm * t_src).map_err(|_| {
        RegistrationError::Degenerate("estimated homography is singular".into())
    })
}
