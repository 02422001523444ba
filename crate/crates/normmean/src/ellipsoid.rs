use nalgebra::{DMatrix, DVector};

/// Outcome of one separation query inside the ellipsoid method.
pub enum Query {
    /// The point is in the target set.
    Accept,
    /// Halfspace <a, x> <= b known to contain the target set, violated by
    /// the query point.
    Cut { normal: DVector<f64>, offset: f64 },
}

/// Central-cut ellipsoid search: starting from a ball, repeatedly asks the
/// oracle and cuts until a point is accepted or the ellipsoid volume rules
/// out a ball of radius `min_radius`.
///
/// Dimension one degenerates to interval bisection.
pub fn ellipsoid_search<F>(
    center: DVector<f64>,
    radius: f64,
    min_radius: f64,
    mut oracle: F,
) -> Option<DVector<f64>>
where
    F: FnMut(&DVector<f64>) -> Query,
{
    let d = center.len();
    if d == 1 {
        let mut lo = center[0] - radius;
        let mut hi = center[0] + radius;
        loop {
            let mid = 0.5 * (lo + hi);
            let x = DVector::from_vec(vec![mid]);
            match oracle(&x) {
                Query::Accept => return Some(x),
                Query::Cut { normal, .. } => {
                    if normal[0] > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
            }
            if hi - lo < min_radius.max(1e-14) {
                return None;
            }
        }
    }

    let df = d as f64;
    let mut c = center;
    let mut p = DMatrix::<f64>::identity(d, d) * (radius * radius);
    // Volume bound: stop when det(P)^{1/2} < min_radius^d.
    let log_det_floor = 2.0 * df * min_radius.max(1e-14).ln();
    loop {
        match oracle(&c) {
            Query::Accept => return Some(c),
            Query::Cut { normal, .. } => {
                let a = normal;
                let pa = &p * &a;
                let apa = a.dot(&pa);
                if apa <= 0.0 || !apa.is_finite() {
                    return None;
                }
                let sq = apa.sqrt();
                let step = &pa / ((df + 1.0) * sq);
                c -= &step;
                let factor = df * df / (df * df - 1.0);
                let outer = &pa * pa.transpose() * (2.0 / ((df + 1.0) * apa));
                p = (&p - outer) * factor;
                // Keep the shape matrix symmetric against drift.
                let pt = p.transpose();
                p = (&p + pt) * 0.5;

                let det = p.determinant();
                if !(det > 0.0) || det.ln() < log_det_floor {
                    return None;
                }
            }
        }
    }
}
