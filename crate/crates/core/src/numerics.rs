//! Small numerical kernels shared by the solvers: tridiagonal solves,
//! composite quadrature and least-squares line fits.

/// Pre-factored tridiagonal system `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// The factorization is the Thomas algorithm without pivoting, so the matrix
/// must be diagonally dominant (every operator assembled in this crate is an
/// M-matrix of the form `I - dt * L`).
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    inv_pivot: Vec<f64>,
    upper_scaled: Vec<f64>,
}

impl Tridiagonal {
    pub fn factor(lower: &[f64], diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        assert!(n > 0 && lower.len() == n && upper.len() == n);
        let mut inv_pivot = vec![0.0; n];
        let mut upper_scaled = vec![0.0; n];
        let mut pivot = diag[0];
        inv_pivot[0] = 1.0 / pivot;
        upper_scaled[0] = upper[0] * inv_pivot[0];
        for i in 1..n {
            pivot = diag[i] - lower[i] * upper_scaled[i - 1];
            inv_pivot[i] = 1.0 / pivot;
            upper_scaled[i] = upper[i] * inv_pivot[i];
        }
        Self {
            lower: lower.to_vec(),
            inv_pivot,
            upper_scaled,
        }
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Solves in place on a strided view: element `k` lives at `data[offset + k * stride]`.
    pub fn solve_strided(&self, data: &mut [f64], offset: usize, stride: usize) {
        let n = self.len();
        let at = |k: usize| offset + k * stride;
        data[at(0)] *= self.inv_pivot[0];
        for k in 1..n {
            let prev = data[at(k - 1)];
            data[at(k)] = (data[at(k)] - self.lower[k] * prev) * self.inv_pivot[k];
        }
        for k in (0..n - 1).rev() {
            let next = data[at(k + 1)];
            data[at(k)] -= self.upper_scaled[k] * next;
        }
    }

    pub fn solve(&self, rhs: &mut [f64]) {
        self.solve_strided(rhs, 0, 1);
    }

    /// Solves `width` independent systems at once; unknown `k` of system `m`
    /// lives at `data[k * width + m]`.
    pub fn solve_batched(&self, data: &mut [f64], width: usize) {
        let n = self.len();
        debug_assert_eq!(data.len(), n * width);
        for v in &mut data[..width] {
            *v *= self.inv_pivot[0];
        }
        for k in 1..n {
            let (head, tail) = data.split_at_mut(k * width);
            let prev = &head[(k - 1) * width..];
            let (l, p) = (self.lower[k], self.inv_pivot[k]);
            for (v, q) in tail[..width].iter_mut().zip(prev) {
                *v = (*v - l * q) * p;
            }
        }
        for k in (0..n - 1).rev() {
            let (head, tail) = data.split_at_mut((k + 1) * width);
            let next = &tail[..width];
            let u = self.upper_scaled[k];
            for (v, q) in head[k * width..].iter_mut().zip(next) {
                *v -= u * q;
            }
        }
    }
}

/// Composite Simpson rule with `nodes` (odd, >= 3) equally spaced nodes on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, nodes: usize) -> f64 {
    let n = if nodes % 2 == 0 { nodes + 1 } else { nodes.max(3) };
    let h = (b - a) / (n - 1) as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n - 1 {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Ordinary least-squares line `y = intercept + slope * x` with the standard
/// error of the slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let sse: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Fit of `log y = log C + p log x`; returns `(p, C)`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.iter().chain(ys).any(|v| *v <= 0.0 || !v.is_finite()) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    fit_line(&lx, &ly).map(|f| (f.slope, f.intercept.exp()))
}

/// Shifts a uniformly sampled sequence by `shift` samples (positive moves the
/// content toward lower indices) with linear interpolation; samples taken
/// beyond either end repeat the end values.
pub fn shift_linear(src: &[f64], shift: f64, dst: &mut [f64]) {
    let n = src.len();
    let last = (n - 1) as f64;
    for (j, out) in dst.iter_mut().enumerate() {
        let x = (j as f64 + shift).clamp(0.0, last);
        let k = (x.floor() as usize).min(n - 2);
        let t = x - k as f64;
        *out = src[k] * (1.0 - t) + src[k + 1] * t;
    }
}
