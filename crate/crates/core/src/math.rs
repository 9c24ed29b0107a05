//! Thin wrappers over `libm` so the rest of the crate reads like std code.

pub use core::f64::consts::{PI, TAU};

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}
#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}
#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

/// Euclidean remainder into `[0, m)`.
#[inline]
pub fn wrap(x: f64, m: f64) -> f64 {
    let r = x - m * floor(x / m);
    if r >= m {
        0.0
    } else {
        r
    }
}

/// Neumaier-compensated sum.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = s + v;
        c += if s.abs() >= v.abs() { (s - t) + v } else { (v - t) + s };
        s = t;
    }
    s + c
}

#[inline]
pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm(a: [f64; 3]) -> f64 {
    sqrt(dot(a, a))
}

#[inline]
pub fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(s: f64, a: [f64; 3]) -> [f64; 3] {
    [s * a[0], s * a[1], s * a[2]]
}

/// Smooth compactly supported bump with value 1 at the origin.
#[inline]
pub fn bump(u: f64) -> f64 {
    if u.abs() < 1.0 {
        exp(1.0 - 1.0 / (1.0 - u * u))
    } else {
        0.0
    }
}

/// Bump value together with its first two derivatives.
pub fn bump_d2(u: f64) -> (f64, f64, f64) {
    if u.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let w = 1.0 - u * u;
    let b = exp(1.0 - 1.0 / w);
    // b' = b q with q = -2u / w², q' = -2/w² - 8u²/w³
    let q = -2.0 * u / (w * w);
    let dq = -2.0 / (w * w) - 8.0 * u * u / (w * w * w);
    (b, b * q, b * (q * q + dq))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivatives_match_differences() {
        for &u in &[-0.9, -0.5, -0.1, 0.0, 0.3, 0.77] {
            let e = 1e-5;
            let (b, d1, d2) = bump_d2(u);
            assert!((b - bump(u)).abs() < 1e-15);
            let fd1 = (bump(u + e) - bump(u - e)) / (2.0 * e);
            let fd2 = (bump(u + e) - 2.0 * b + bump(u - e)) / (e * e);
            assert!((d1 - fd1).abs() < 1e-6 * (1.0 + d1.abs()), "{u}");
            assert!((d2 - fd2).abs() < 1e-3 * (1.0 + d2.abs()), "{u}");
        }
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(0.0), 1.0);
    }

    #[test]
    fn wrap_is_in_range() {
        assert_eq!(wrap(-0.5, 2.0), 1.5);
        assert_eq!(wrap(4.0, 2.0), 0.0);
        assert!(wrap(-1e-18, 2.0) < 2.0);
    }
}
