use super::expr::UnivariateFn;

/// Polynomial ramp of class C^m: 0 for t ≤ a, 1 for t ≥ b, and on [a, b] the
/// normalized integral of the bump s^m (1 − s)^m with s = (t − a)/(b − a).
#[derive(Debug, Clone)]
pub struct SmoothStep {
    name: String,
    m: usize,
    a: f64,
    b: f64,
    // monomial coefficients of the ramp in s, lowest degree first
    poly: Vec<f64>,
}

impl SmoothStep {
    pub fn new(name: impl Into<String>, m: usize, a: f64, b: f64) -> Self {
        assert!(b > a, "ramp interval must be nondegenerate");
        SmoothStep {
            name: name.into(),
            m,
            a,
            b,
            poly: ramp_polynomial(m),
        }
    }

    /// The unit ramp on [0, 1].
    pub fn unit(name: impl Into<String>, m: usize) -> Self {
        Self::new(name, m, 0.0, 1.0)
    }

    pub fn order(&self) -> usize {
        self.m
    }

    /// Maximum of the derivative, attained at the midpoint.
    pub fn max_slope(&self) -> f64 {
        let d = differentiate(&self.poly);
        horner(&d, 0.5) / (self.b - self.a)
    }
}

/// Coefficients of ∫_0^s u^m (1−u)^m du, scaled to reach 1 at s = 1.
pub fn ramp_polynomial(m: usize) -> Vec<f64> {
    let mut bump = vec![0.0; 2 * m + 1];
    let mut binom = 1.0;
    for i in 0..=m {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        bump[m + i] = sign * binom;
        binom = binom * (m - i) as f64 / (i + 1) as f64;
    }
    let mut poly = vec![0.0; 2 * m + 2];
    for (d, c) in bump.iter().enumerate() {
        poly[d + 1] = c / (d + 1) as f64;
    }
    let total: f64 = poly.iter().sum();
    poly.iter_mut().for_each(|c| *c /= total);
    poly
}

fn horner(p: &[f64], s: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

fn differentiate(p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().skip(1).map(|(d, c)| c * d as f64).collect()
}

impl UnivariateFn for SmoothStep {
    fn name(&self) -> &str {
        &self.name
    }

    fn smoothness(&self) -> usize {
        self.m
    }

    fn taylor_coeffs(&self, t: f64, order: usize) -> Vec<f64> {
        let mut out = vec![0.0; order + 1];
        if t <= self.a {
            return out;
        }
        if t >= self.b {
            out[0] = 1.0;
            return out;
        }
        let w = self.b - self.a;
        let s = (t - self.a) / w;
        // Taylor shift by repeated synthetic division: after pass j the
        // j-th entry of q is the coefficient of u^j in p(s + u)
        let mut q: smallvec::SmallVec<[f64; 16]> = self.poly.iter().copied().collect();
        let deg = q.len() - 1;
        let mut scale = 1.0;
        for (j, slot) in out.iter_mut().enumerate() {
            if j > deg {
                break;
            }
            for i in (j..deg).rev() {
                q[i] += s * q[i + 1];
            }
            if j > 0 {
                scale *= w;
            }
            *slot = q[j] / scale;
        }
        out
    }

    fn eval(&self, t: f64) -> f64 {
        if t <= self.a {
            0.0
        } else if t >= self.b {
            1.0
        } else {
            horner(&self.poly, (t - self.a) / (self.b - self.a))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_bump_ramp() {
        // m = 1: 3s^2 - 2s^3
        let p = ramp_polynomial(1);
        let expect = [0.0, 0.0, 3.0, -2.0];
        for (a, b) in p.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        let s = SmoothStep::unit("s", 3);
        assert!((s.max_slope() - 35.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn endpoints_and_symmetry() {
        let s = SmoothStep::new("s", 3, 0.2, 0.6);
        assert_eq!(s.eval(0.2), 0.0);
        assert_eq!(s.eval(0.6), 1.0);
        for k in 0..50 {
            let t = 0.2 + 0.4 * k as f64 / 49.0;
            let mirror = 0.8 - t;
            assert!((s.eval(t) + s.eval(mirror) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn derivatives_vanish_at_the_joints() {
        let s = SmoothStep::unit("s", 3);
        for t in [1e-9, 1.0 - 1e-9] {
            let c = s.taylor_coeffs(t, 3);
            for v in &c[1..] {
                assert!(v.abs() < 1e-6, "{c:?}");
            }
        }
    }
}
