//! Bessel functions of the first kind.

/// `J_n(x)` for integer order `n >= 0` and any real `x`.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    if x < 0.0 {
        let v = puruspe::Jn(n, -x);
        if n.is_multiple_of(2) {
            v
        } else {
            -v
        }
    } else {
        puruspe::Jn(n, x)
    }
}
