/// Gauss–Legendre nodes and weights on `[0, 1]`, exact for polynomials of
/// degree `2n − 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// Tensor Gauss rule on `[x0, x1] × [y0, y1]` as `(x, y, weight)`.
pub fn tensor_rule(x: [f64; 2], y: [f64; 2], n: [usize; 2]) -> Vec<(f64, f64, f64)> {
    let (gx, wx) = gauss_legendre(n[0]);
    let (gy, wy) = gauss_legendre(n[1]);
    let (hx, hy) = (x[1] - x[0], y[1] - y[0]);
    let mut out = Vec::with_capacity(n[0] * n[1]);
    for (yy, wyy) in gy.iter().zip(&wy) {
        for (xx, wxx) in gx.iter().zip(&wx) {
            out.push((x[0] + hx * xx, y[0] + hy * yy, hx * hy * wxx * wyy));
        }
    }
    out
}
