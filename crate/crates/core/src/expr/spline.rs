/// Natural cubic spline through `(x_k, y_k)` on a uniform or non-uniform
/// strictly increasing grid.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    /// Returns `None` for fewer than two knots or a non-increasing grid.
    pub fn natural(xs: Vec<f64>, ys: Vec<f64>) -> Option<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n || xs.windows(2).any(|w| w[1] <= w[0]) {
            return None;
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior equations
            // h_{i-1} m_{i-1} + 2(h_{i-1}+h_i) m_i + h_i m_{i+1} = 6 (d_i - d_{i-1})
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let d0 = (ys[i] - ys[i - 1]) / h0;
                let d1 = (ys[i + 1] - ys[i]) / h1;
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * (d1 - d0);
            }
            for i in 1..k {
                let lower = xs[i + 1] - xs[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
            }
        }
        Some(CubicSpline { xs, ys, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Value of the `order`-th derivative at `x`; `None` outside the knots.
    pub fn eval(&self, x: f64, order: u8) -> Option<f64> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&x) {
            return None;
        }
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p => (p - 1).min(self.xs.len() - 2),
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        let (y0, y1, m0, m1) = (self.ys[i], self.ys[i + 1], self.m[i], self.m[i + 1]);
        let v = match order {
            0 => a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0,
            1 => (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0,
            2 => a * m0 + b * m1,
            3 => (m1 - m0) / h,
            _ => 0.0,
        };
        Some(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubic_free_of_curvature_at_ends() {
        // a line is reproduced exactly by a natural spline
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let s = CubicSpline::natural(xs, ys).unwrap();
        for x in [0.0, 0.45, 1.7, 2.6] {
            assert!((s.eval(x, 0).unwrap() - (2.0 * x - 1.0)).abs() < 1e-13);
            assert!((s.eval(x, 1).unwrap() - 2.0).abs() < 1e-12);
            assert!(s.eval(x, 2).unwrap().abs() < 1e-12);
        }
        assert!(s.eval(3.0, 0).is_none());
    }

    #[test]
    fn interior_accuracy_on_sine() {
        let h = 1e-2;
        let xs: Vec<f64> = (0..=314).map(|i| i as f64 * h).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let s = CubicSpline::natural(xs, ys).unwrap();
        for x in [0.5, 1.234, 2.0] {
            assert!((s.eval(x, 0).unwrap() - f64::sin(x)).abs() < 1e-8);
            assert!((s.eval(x, 1).unwrap() - f64::cos(x)).abs() < 1e-5);
            assert!((s.eval(x, 2).unwrap() + f64::sin(x)).abs() < 1e-4);
        }
    }
}
