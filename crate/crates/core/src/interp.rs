//! Shape-preserving piecewise-cubic Hermite interpolation.

use crate::error::{Error, Result};

/// Cubic Hermite interpolant whose node slopes come from five-point Lagrange
/// differentiation, limited (Fritsch-Carlson) so monotone data stay monotone.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

/// Derivative at `nodes[at]` of the Lagrange polynomial through `(nodes, values)`.
fn lagrange_slope(nodes: &[f64], values: &[f64], at: usize) -> f64 {
    let xa = nodes[at];
    let mut total = 0.0;
    for (j, (&xj, &yj)) in nodes.iter().zip(values).enumerate() {
        let w = if j == at {
            nodes
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != at)
                .map(|(_, &xm)| 1.0 / (xa - xm))
                .sum::<f64>()
        } else {
            let num: f64 = nodes
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != at && m != j)
                .map(|(_, &xm)| xa - xm)
                .product();
            let den: f64 = nodes
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != j)
                .map(|(_, &xm)| xj - xm)
                .product();
            num / den
        };
        total += w * yj;
    }
    total
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidArgument(format!(
                "need at least two nodes with matching values, got {} and {}",
                n,
                y.len()
            )));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "nodes must be finite and strictly increasing".into(),
            ));
        }
        let width = 5.min(n);
        let mut d: Vec<f64> = (0..n)
            .map(|i| {
                let start = i.saturating_sub(width / 2).min(n - width);
                let r = start..start + width;
                lagrange_slope(&x[r.clone()], &y[r], i - start)
            })
            .collect();

        let secant: Vec<f64> = x
            .windows(2)
            .zip(y.windows(2))
            .map(|(xs, ys)| (ys[1] - ys[0]) / (xs[1] - xs[0]))
            .collect();
        for (k, &s) in secant.iter().enumerate() {
            if s == 0.0 {
                d[k] = 0.0;
                d[k + 1] = 0.0;
                continue;
            }
            for i in [k, k + 1] {
                if d[i] * s < 0.0 {
                    d[i] = 0.0;
                }
            }
            let (a, b) = (d[k] / s, d[k + 1] / s);
            let r = a.hypot(b);
            if r > 3.0 {
                d[k] = 3.0 * a / r * s;
                d[k + 1] = 3.0 * b / r * s;
            }
        }
        Ok(Self { x, y, d })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn segment(&self, t: f64) -> usize {
        self.x
            .partition_point(|&xi| xi <= t)
            .clamp(1, self.x.len() - 1)
            - 1
    }

    /// Value and derivative at `t`; `None` outside the node range.
    pub fn eval_with_derivative(&self, t: f64) -> Option<(f64, f64)> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return None;
        }
        let k = self.segment(t);
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let (y0, y1, d0, d1) = (self.y[k], self.y[k + 1], self.d[k] * h, self.d[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * d1;
        let deriv = ((6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * d0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * d1)
            / h;
        Some((value, deriv))
    }

    pub fn eval(&self, t: f64) -> Option<f64> {
        self.eval_with_derivative(t).map(|v| v.0)
    }

    /// The `t` with `eval(t) = target` for monotone data; `None` if `target` lies
    /// outside the sampled values.
    pub fn solve(&self, target: f64) -> Option<f64> {
        let increasing = self.y[self.y.len() - 1] >= self.y[0];
        let key = |v: f64| if increasing { v } else { -v };
        let goal = key(target);
        let first = key(self.y[0]);
        let last = key(self.y[self.y.len() - 1]);
        if !(goal >= first && goal <= last) {
            return None;
        }
        let k = self
            .y
            .partition_point(|&v| key(v) < goal)
            .clamp(1, self.y.len() - 1)
            - 1;
        let (mut lo, mut hi) = (self.x[k], self.x[k + 1]);
        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (v, dv) = self.eval_with_derivative(t)?;
            let r = key(v) - goal;
            if r == 0.0 {
                return Some(t);
            }
            if r < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let newton = t - (v - target) / dv;
            let next = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - t).abs() <= 4.0 * f64::EPSILON * (1.0 + t.abs()) {
                return Some(next);
            }
            t = next;
        }
        Some(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubics_away_from_limiter() {
        let x: Vec<f64> = (0..12).map(|i| i as f64 * 0.3).collect();
        let f = |t: f64| 1.0 + 2.0 * t + 0.1 * t * t * t;
        let y: Vec<f64> = x.iter().map(|&t| f(t)).collect();
        let c = MonotoneCubic::new(x, y).unwrap();
        for t in [0.05, 0.77, 1.5, 3.2] {
            assert!((c.eval(t).unwrap() - f(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn fourth_order_on_smooth_data() {
        let err = |n: usize| {
            let x: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
            let y: Vec<f64> = x.iter().map(|t| t.exp()).collect();
            let c = MonotoneCubic::new(x, y).unwrap();
            (0..1000)
                .map(|i| {
                    let t = i as f64 / 999.0;
                    (c.eval(t).unwrap() - t.exp()).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(10), err(20));
        assert!(e1 / e2 > 12.0, "{e1} {e2}");
    }

    #[test]
    fn monotone_data_stay_monotone() {
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let y = vec![0.0, 0.01, 0.02, 5.0, 5.01, 5.02];
        let c = MonotoneCubic::new(x, y).unwrap();
        let mut prev = c.eval(0.0).unwrap();
        for i in 1..=500 {
            let v = c.eval(i as f64 * 0.01).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn solve_inverts_eval() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| -(t * t) - t).collect();
        let c = MonotoneCubic::new(x, y).unwrap();
        let t = c.solve(-50.0).unwrap();
        assert!((c.eval(t).unwrap() + 50.0).abs() < 1e-10);
        assert!(c.solve(1.0).is_none());
        assert!(c.eval(19.5).is_none());
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(MonotoneCubic::new(vec![0.0], vec![1.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(MonotoneCubic::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }
}
