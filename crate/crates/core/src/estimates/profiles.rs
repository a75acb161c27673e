//! One-variable profiles ψ composed with a distance-like function in the
//! barriers. Each carries closed-form first and second derivatives.

use serde::Serialize;

use crate::quadrature;

pub trait Profile {
    fn value(&self, t: f64) -> f64;
    fn d1(&self, t: f64) -> f64;
    fn d2(&self, t: f64) -> f64;
}

/// ψ(t) = t.
pub struct Identity;

impl Profile for Identity {
    fn value(&self, t: f64) -> f64 {
        t
    }
    fn d1(&self, _: f64) -> f64 {
        1.0
    }
    fn d2(&self, _: f64) -> f64 {
        0.0
    }
}

/// ψ ≡ 0.
pub struct Zero;

impl Profile for Zero {
    fn value(&self, _: f64) -> f64 {
        0.0
    }
    fn d1(&self, _: f64) -> f64 {
        0.0
    }
    fn d2(&self, _: f64) -> f64 {
        0.0
    }
}

/// Height barrier φ(t) = (e^{μδ}/μ)(1 − e^{−μt}); φ(t) = t in the limit μ → 0.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HeightProfile {
    pub mu: f64,
    pub delta: f64,
}

impl Profile for HeightProfile {
    fn value(&self, t: f64) -> f64 {
        if self.mu == 0.0 {
            return t;
        }
        (self.mu * self.delta).exp() * -(-self.mu * t).exp_m1() / self.mu
    }
    fn d1(&self, t: f64) -> f64 {
        (self.mu * (self.delta - t)).exp()
    }
    fn d2(&self, t: f64) -> f64 {
        -self.mu * self.d1(t)
    }
}

/// Boundary gradient barrier ψ(t) = log(1 + kt)/ν, so νψ′² + ψ″ = 0.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LogProfile {
    pub nu: f64,
    pub k: f64,
}

impl Profile for LogProfile {
    fn value(&self, t: f64) -> f64 {
        (self.k * t).ln_1p() / self.nu
    }
    fn d1(&self, t: f64) -> f64 {
        self.k / (self.nu * (1.0 + self.k * t))
    }
    fn d2(&self, t: f64) -> f64 {
        let q = 1.0 + self.k * t;
        -self.k * self.k / (self.nu * q * q)
    }
}

/// φ(t) = √(2/ν)((a − ε)^{1/2} − (t − ε)^{1/2}) on (ε, a], so νφ′³ + φ″ = 0
/// and φ′(ε) = −∞.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SqrtProfile {
    pub nu: f64,
    pub a: f64,
    pub eps: f64,
}

impl Profile for SqrtProfile {
    fn value(&self, t: f64) -> f64 {
        (2.0 / self.nu).sqrt() * ((self.a - self.eps).sqrt() - (t - self.eps).sqrt())
    }
    fn d1(&self, t: f64) -> f64 {
        -1.0 / (2.0 * self.nu * (t - self.eps)).sqrt()
    }
    fn d2(&self, t: f64) -> f64 {
        0.25 * (2.0 / self.nu).sqrt() * (t - self.eps).powf(-1.5)
    }
}

/// ψ(t) = √(2/(n−1)) ∫_t^δ (log(r/a))^{−1/2} dr on [a, δ], with a held as
/// ln a. Substituting r = a e^{v²} gives the closed form
/// ψ(t) = 2√(2/(n−1)) (δ F(√log(δ/a)) − t F(√log(t/a))), F Dawson's integral.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LogRootProfile {
    pub n: usize,
    pub ln_a: f64,
    pub delta: f64,
}

impl LogRootProfile {
    fn c(&self) -> f64 {
        (2.0 / (self.n as f64 - 1.0)).sqrt()
    }

    /// log(t/a), exact even when a underflows.
    pub fn log_ratio(&self, t: f64) -> f64 {
        t.ln() - self.ln_a
    }

    /// ψ(a).
    pub fn at_a(&self) -> f64 {
        2.0 * self.c() * self.delta * dawson(self.log_ratio(self.delta).max(0.0).sqrt())
    }
}

impl Profile for LogRootProfile {
    fn value(&self, t: f64) -> f64 {
        let l = self.log_ratio(t).max(0.0);
        self.at_a() - 2.0 * self.c() * t * dawson(l.sqrt())
    }
    fn d1(&self, t: f64) -> f64 {
        -self.c() / self.log_ratio(t).sqrt()
    }
    fn d2(&self, t: f64) -> f64 {
        0.5 * self.c() * self.log_ratio(t).powf(-1.5) / t
    }
}

/// Dawson's integral F(x) = e^{−x²} ∫_0^x e^{v²} dv, by adaptive
/// Gauss–Kronrod quadrature of the bounded integrand e^{(v−x)(v+x)}.
pub fn dawson(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    if x < 0.0 {
        return -dawson(-x);
    }
    // for large x the integrand lives in a layer of width ~1/x below v = x
    let lo = (x - 40.0 / x).max(0.0);
    quadrature::integrate(|v| ((v - x) * (v + x)).exp(), lo, x, 1e-14, 400).value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dawson_reference_values() {
        // scipy.special.dawsn
        assert!((dawson(1.0) - 0.538_079_506_912_768_4).abs() < 1e-13);
        assert!((dawson(0.5) - 0.424_436_383_502_022_3).abs() < 1e-13);
        assert!((dawson(10.0) - 0.050_253_847_187_598_54).abs() < 1e-13);
        assert!((dawson(56.0) - 0.008_929_995_670_522_71).abs() < 1e-13);
        assert_eq!(dawson(0.0), 0.0);
    }

    #[test]
    fn log_root_profile_matches_direct_quadrature() {
        let p = LogRootProfile {
            n: 2,
            ln_a: 0.1f64.ln(),
            delta: 2.0,
        };
        for t in [0.1, 0.15, 0.5, 1.3] {
            // substitute r = a + s² to remove the endpoint singularity
            let a = 0.1;
            let f = |s: f64| {
                let r = a + s * s;
                if s == 0.0 {
                    return 2.0 * a.sqrt();
                }
                2.0 * s / (r / a).ln().sqrt()
            };
            let direct = 2f64.sqrt() * quadrature::integrate(f, (t - a).sqrt(), (2.0 - a).sqrt(), 1e-13, 500).value;
            assert!((p.value(t) - direct).abs() < 1e-10, "t = {t}: {} vs {direct}", p.value(t));
        }
        assert!(p.value(2.0).abs() < 1e-14);
    }
}
