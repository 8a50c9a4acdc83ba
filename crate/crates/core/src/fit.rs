//! Small numerical helpers: least-squares polynomial fits, three-point
//! extrapolation, interpolation and cumulative quadrature.

/// Least-squares line `y ≈ a x + b`. Returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let a = sxy / sxx;
    Some((a, my - a * mx))
}

/// Least-squares parabola `y ≈ a x² + b x + c`. Returns `(a, b, c)`.
///
/// Abscissae are centered and scaled before forming the normal equations.
pub fn quadratic_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let scale = x.iter().map(|v| (v - mx).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (xi, yi) in x.iter().zip(y) {
        let z = (xi - mx) / scale;
        let basis = [z * z, z, 1.0];
        for r in 0..3 {
            rhs[r] += basis[r] * yi;
            for c in 0..3 {
                m[r][c] += basis[r] * basis[c];
            }
        }
    }
    let [p, q, r] = solve3(m, rhs)?;
    // y = p z² + q z + r with z = (x - mx)/scale
    let a = p / (scale * scale);
    let b = q / scale - 2.0 * p * mx / (scale * scale);
    let c = r - q * mx / scale + p * mx * mx / (scale * scale);
    Some((a, b, c))
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    Some(x)
}

/// Limit of a sequence from three terms assuming geometric convergence of the
/// differences (Aitken's Δ²). Falls back to the last term when the
/// differences do not contract.
pub fn aitken(y1: f64, y2: f64, y3: f64) -> f64 {
    let d1 = y2 - y1;
    let d2 = y3 - y2;
    let denom = d2 - d1;
    if denom == 0.0 || d1 == 0.0 || (d2 / d1).abs() >= 1.0 || d2 / d1 < 0.0 {
        return y3;
    }
    y3 - d2 * d2 / denom
}

/// Piecewise-linear interpolation of `y(x)` for increasing `x`; `None`
/// outside `[x₀, x_last]`.
pub fn interp(x: &[f64], y: &[f64], at: f64) -> Option<f64> {
    let n = x.len();
    if n == 0 || at < x[0] || at > x[n - 1] || !at.is_finite() {
        return None;
    }
    let k = x.partition_point(|&v| v <= at);
    if k == 0 {
        return Some(y[0]);
    }
    if k >= n {
        return Some(y[n - 1]);
    }
    let (x0, x1) = (x[k - 1], x[k]);
    let w = if x1 > x0 { (at - x0) / (x1 - x0) } else { 0.0 };
    Some(y[k - 1] + w * (y[k] - y[k - 1]))
}

/// Cumulative trapezoidal integral of uniformly spaced samples.
pub fn cumulative_trapezoid(f: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in f.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Cumulative trapezoidal integral against arbitrary increasing abscissae.
pub fn cumulative_trapezoid_nonuniform(x: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..f.len() {
        acc += 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
        out.push(acc);
    }
    out
}
