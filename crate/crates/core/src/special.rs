//! Exponential-integral helpers used by the Ewald real-space sums.

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E1(x) = ∫_x^∞ e^{-s}/s ds` for `x > 0`.
pub fn exp_int_e1(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= 1.0 {
        -EULER_GAMMA - x.ln() + ein(x)
    } else {
        // Modified Lentz evaluation of the continued fraction.
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Entire function `Ein(x) = ∫_0^x (1 - e^{-s})/s ds = E1(x) + ln x + γ`.
pub fn ein(x: f64) -> f64 {
    if x <= 2.0 {
        let mut term = x;
        let mut sum = x;
        let mut k = 1.0;
        loop {
            k += 1.0;
            term *= -x / k;
            let add = term / k;
            sum += add;
            if add.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        exp_int_e1(x) + x.ln() + EULER_GAMMA
    }
}

/// `(1 - e^{-u}) / u`, continuous at `u = 0`.
pub fn one_minus_exp_over(u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        -(-u).exp_m1() / u
    }
}

/// Derivative of [`one_minus_exp_over`] with respect to `u`.
pub fn one_minus_exp_over_deriv(u: f64) -> f64 {
    if u < 0.1 {
        // sum_{k>=1} k (-u)^{k-1} (-1) / (k+1)!
        let mut sum = 0.0;
        let mut pow = 1.0; // (-u)^{k-1}
        let mut fact = 2.0; // (k+1)!
        for k in 1..20 {
            let kf = k as f64;
            sum -= kf * pow / fact;
            pow *= -u;
            fact *= kf + 2.0;
        }
        sum
    } else {
        ((-u).exp() * u + (-u).exp_m1()) / (u * u)
    }
}
