use crate::error::{Error, Result};
use faer::linalg::solvers::Solve;
use faer::Mat;

const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &Mat<f64>) -> f64 {
    (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with the [13/13] Padé approximant.
pub fn expm(a: &Mat<f64>) -> Result<Mat<f64>> {
    let n = a.nrows();
    let nrm = norm1(a);
    if !nrm.is_finite() {
        return Err(Error::numerical("expm: non-finite matrix"));
    }
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    if s > 60 {
        return Err(Error::numerical(format!("expm: norm {nrm:.3e} too large")));
    }
    let scale = 0.5f64.powi(s);
    let a1 = Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let id = Mat::<f64>::identity(n, n);
    let a2 = &a1 * &a1;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &B13;
    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| {
        Mat::<f64>::from_fn(n, n, |i, j| c6 * a6[(i, j)] + c4 * a4[(i, j)] + c2 * a2[(i, j)] + c0 * id[(i, j)])
    };
    let u_inner = &a6 * lin(b[13], b[11], b[9], 0.0) + lin(b[7], b[5], b[3], b[1]);
    let u = &a1 * &u_inner;
    let v = &a6 * lin(b[12], b[10], b[8], 0.0) + lin(b[6], b[4], b[2], b[0]);
    let p = &v + &u;
    let q = &v - &u;
    let lu = q.partial_piv_lu();
    let mut r = lu.solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    if r.col_iter().any(|c| c.iter().any(|x| !x.is_finite())) {
        return Err(Error::numerical("expm: overflow"));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_rotation() {
        let a = Mat::<f64>::from_fn(3, 3, |i, j| if i == j { -(i as f64) * 7.0 } else { 0.0 });
        let e = expm(&a).unwrap();
        for i in 0..3 {
            let x = (-(i as f64) * 7.0).exp();
            assert!((e[(i, i)] - x).abs() < 1e-13 * x.max(1e-300) + 1e-300);
        }
        // exp of [[0, θ], [−θ, 0]] is a rotation.
        let th = 10.0;
        let r = Mat::<f64>::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => th,
            (1, 0) => -th,
            _ => 0.0,
        });
        let e = expm(&r).unwrap();
        assert!((e[(0, 0)] - th.cos()).abs() < 1e-12);
        assert!((e[(0, 1)] - th.sin()).abs() < 1e-12);
    }

    #[test]
    fn zero_is_identity() {
        let e = expm(&Mat::<f64>::zeros(4, 4)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((e[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }
}
