//! The three probability laws for the event "the P_k2 element is at least as
//! accurate as the P_k1 element" as functions of the mesh size `h`, plus the
//! densities behind the generalized Beta prime law.
//!
//! Every law depends on `h` only through `h / h*` raised to `delta = k2 - k1`.

use crate::error::{domain, Error, Result};
use crate::quad;
use crate::special::{ln_beta_unchecked, reg_inc_beta};

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be finite and positive, got {v}")))
    }
}

fn check_delta(delta: u32) -> Result<()> {
    if delta >= 1 {
        Ok(())
    } else {
        Err(domain("delta = k2 - k1 must be at least 1"))
    }
}

/// Degenerate law: certainty below `h*`, impossibility above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStep {
    h_star: f64,
}

/// Outcome of the two-step law. The point `h = h*` is excluded from the law
/// and reported as its own case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    One,
    Zero,
    AtThreshold,
}

impl StepOutcome {
    pub fn value(self) -> Option<f64> {
        match self {
            StepOutcome::One => Some(1.0),
            StepOutcome::Zero => Some(0.0),
            StepOutcome::AtThreshold => None,
        }
    }
}

impl TwoStep {
    pub fn new(h_star: f64) -> Result<Self> {
        check_positive("h*", h_star)?;
        Ok(Self { h_star })
    }

    pub fn h_star(&self) -> f64 {
        self.h_star
    }

    pub fn outcome(&self, h: f64) -> Result<StepOutcome> {
        check_positive("mesh size h", h)?;
        Ok(if h < self.h_star {
            StepOutcome::One
        } else if h > self.h_star {
            StepOutcome::Zero
        } else {
            StepOutcome::AtThreshold
        })
    }
}

/// Law obtained from independent uniform errors on `[0, beta_k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sigmoid {
    h_star: f64,
    delta: u32,
}

impl Sigmoid {
    pub fn new(h_star: f64, delta: u32) -> Result<Self> {
        check_positive("h*", h_star)?;
        check_delta(delta)?;
        Ok(Self { h_star, delta })
    }

    pub fn h_star(&self) -> f64 {
        self.h_star
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    /// `1 - (h/h*)^δ / 2` up to `h*`, `(h*/h)^δ / 2` beyond it.
    pub fn probability(&self, h: f64) -> Result<f64> {
        check_positive("mesh size h", h)?;
        Ok(self.probability_unchecked(h))
    }

    fn probability_unchecked(&self, h: f64) -> f64 {
        let d = self.delta as i32;
        if h <= self.h_star {
            1.0 - 0.5 * (h / self.h_star).powi(d)
        } else {
            0.5 * (self.h_star / h).powi(d)
        }
    }
}

/// Generalized Beta prime law with shapes `p`, `q`, exponent `delta` and
/// scale `h*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedBetaPrime {
    p: f64,
    q: f64,
    delta: u32,
    h_star: f64,
}

impl GeneralizedBetaPrime {
    pub fn new(p: f64, q: f64, delta: u32, h_star: f64) -> Result<Self> {
        check_positive("p", p)?;
        check_positive("q", q)?;
        check_delta(delta)?;
        check_positive("h*", h_star)?;
        Ok(Self { p, q, delta, h_star })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    pub fn h_star(&self) -> f64 {
        self.h_star
    }

    /// `Prob{H >= h} = I_w(p, q)` with `w = 1 / (1 + (h/h*)^δ)`.
    pub fn probability(&self, h: f64) -> Result<f64> {
        check_positive("mesh size h", h)?;
        let ratio = (h / self.h_star).powi(self.delta as i32);
        if ratio.is_infinite() {
            return Ok(0.0);
        }
        // For tiny ratios 1/(1+r) rounds to 1; go through the complement so the
        // tail keeps its precision.
        if ratio < 1.0 {
            let w_complement = ratio / (1.0 + ratio);
            Ok(1.0 - reg_inc_beta(w_complement, self.q, self.p)?)
        } else {
            reg_inc_beta(1.0 / (1.0 + ratio), self.p, self.q)
        }
    }

    /// `Prob{H < h} = 1 - probability(h)`, accurate where the probability
    /// rounds to 1.
    pub fn cdf(&self, h: f64) -> Result<f64> {
        check_positive("mesh size h", h)?;
        let ratio = (h / self.h_star).powi(self.delta as i32);
        if ratio.is_infinite() {
            return Ok(1.0);
        }
        if ratio < 1.0 {
            reg_inc_beta(ratio / (1.0 + ratio), self.q, self.p)
        } else {
            Ok(1.0 - reg_inc_beta(1.0 / (1.0 + ratio), self.p, self.q)?)
        }
    }

    /// Density `f_H(s)` of the generalized Beta prime variable `H`.
    pub fn density(&self, s: f64) -> Result<f64> {
        check_positive("s", s)?;
        Ok(self.density_unchecked(s))
    }

    fn density_unchecked(&self, s: f64) -> f64 {
        let d = self.delta as f64;
        let r = s / self.h_star;
        let ln_r = r.ln();
        let ln_rd = d * ln_r;
        // ln(1 + r^δ) without overflow for large r
        let ln_one_plus = if ln_rd > 0.0 { ln_rd + (-ln_rd).exp().ln_1p() } else { ln_rd.exp().ln_1p() };
        let ln_f = -ln_beta_unchecked(self.p, self.q) + (d / self.h_star).ln() + (self.q * d - 1.0) * ln_r
            - (self.p + self.q) * ln_one_plus;
        ln_f.exp()
    }

    /// `∫_h^∞ f_H` by adaptive quadrature. A cross-check of [`Self::probability`],
    /// evaluated in `y = ln(s/h*)` where the integrand decays exponentially.
    pub fn survival_by_quadrature(&self, h: f64, tol: f64) -> Result<f64> {
        check_positive("mesh size h", h)?;
        let y0 = (h / self.h_star).ln();
        let r = quad::integrate_to_infinity(|y| self.log_scale_integrand(y), y0, tol)?;
        Ok(r.value)
    }

    /// `∫_0^h f_H` by adaptive quadrature.
    pub fn cdf_by_quadrature(&self, h: f64, tol: f64) -> Result<f64> {
        check_positive("mesh size h", h)?;
        let y0 = (h / self.h_star).ln();
        let r = quad::integrate_from_neg_infinity(|y| self.log_scale_integrand(y), y0, tol)?;
        Ok(r.value)
    }

    /// `f_H(s) ds` written in `y = ln(s / h*)`.
    fn log_scale_integrand(&self, y: f64) -> f64 {
        let s = self.h_star * y.exp();
        if s == 0.0 || !s.is_finite() {
            return 0.0;
        }
        self.density_unchecked(s) * s
    }
}

/// Parameters of any of the three laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawParams {
    TwoStep(TwoStep),
    Sigmoid(Sigmoid),
    GeneralizedBetaPrime(GeneralizedBetaPrime),
}

impl LawParams {
    pub fn h_star(&self) -> f64 {
        match self {
            LawParams::TwoStep(l) => l.h_star(),
            LawParams::Sigmoid(l) => l.h_star(),
            LawParams::GeneralizedBetaPrime(l) => l.h_star(),
        }
    }

    /// `P_{k1,k2}(h)`. The two-step law at its threshold yields
    /// [`Error::AtThreshold`].
    pub fn probability(&self, h: f64) -> Result<f64> {
        match self {
            LawParams::TwoStep(l) => l.outcome(h)?.value().ok_or(Error::AtThreshold(h)),
            LawParams::Sigmoid(l) => l.probability(h),
            LawParams::GeneralizedBetaPrime(l) => l.probability(h),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LawParams::TwoStep(_) => "twostep",
            LawParams::Sigmoid(_) => "sigmoid",
            LawParams::GeneralizedBetaPrime(_) => "gbp",
        }
    }
}

impl From<TwoStep> for LawParams {
    fn from(l: TwoStep) -> Self {
        LawParams::TwoStep(l)
    }
}

impl From<Sigmoid> for LawParams {
    fn from(l: Sigmoid) -> Self {
        LawParams::Sigmoid(l)
    }
}

impl From<GeneralizedBetaPrime> for LawParams {
    fn from(l: GeneralizedBetaPrime) -> Self {
        LawParams::GeneralizedBetaPrime(l)
    }
}

/// The two error bounds `(beta_k1, beta_k2)` at a fixed mesh size. The
/// difference of the two errors lives on `[-beta_lo, beta_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPair {
    pub(crate) beta_lo: f64,
    pub(crate) beta_hi: f64,
}

impl BetaPair {
    pub fn new(beta_lo: f64, beta_hi: f64) -> Result<Self> {
        check_positive("beta_lo", beta_lo)?;
        check_positive("beta_hi", beta_hi)?;
        Ok(Self { beta_lo, beta_hi })
    }

    /// Pair with `beta_lo / beta_hi = (h*/h)^δ`, normalized so the larger
    /// bound is 1.
    pub fn from_ratio(h_star: f64, delta: u32, h: f64) -> Result<Self> {
        check_positive("h*", h_star)?;
        check_positive("mesh size h", h)?;
        check_delta(delta)?;
        let ratio = (h_star / h).powi(delta as i32);
        if ratio >= 1.0 {
            Self::new(1.0, 1.0 / ratio)
        } else {
            Self::new(ratio, 1.0)
        }
    }

    pub fn beta_lo(&self) -> f64 {
        self.beta_lo
    }

    pub fn beta_hi(&self) -> f64 {
        self.beta_hi
    }
}

/// Density of `Z = -beta_lo + (beta_lo + beta_hi) X`, `X ~ Beta(p, q)`; zero
/// outside `[-beta_lo, beta_hi]`.
pub fn density_z(pair: BetaPair, p: f64, q: f64, z: f64) -> Result<f64> {
    check_positive("p", p)?;
    check_positive("q", q)?;
    let BetaPair { beta_lo, beta_hi } = pair;
    if !(-beta_lo..=beta_hi).contains(&z) {
        return Ok(0.0);
    }
    let ln_norm = -ln_beta_unchecked(p, q) + (p - 1.0) * beta_lo.ln() + (q - 1.0) * beta_hi.ln()
        - (p + q - 1.0) * (beta_lo + beta_hi).ln();
    let left = 1.0 + z / beta_lo;
    let right = 1.0 - z / beta_hi;
    Ok(ln_norm.exp() * left.powf(p - 1.0) * right.powf(q - 1.0))
}

/// `F_Z(0) = I_{beta_lo / (beta_lo + beta_hi)}(p, q)`.
pub fn cdf_z_at_zero(pair: BetaPair, p: f64, q: f64) -> Result<f64> {
    reg_inc_beta(pair.beta_lo / (pair.beta_lo + pair.beta_hi), p, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gbp(p: f64, q: f64, delta: u32, h_star: f64) -> GeneralizedBetaPrime {
        GeneralizedBetaPrime::new(p, q, delta, h_star).unwrap()
    }

    #[test]
    fn two_step_outcomes() {
        let l = TwoStep::new(0.1).unwrap();
        assert_eq!(l.outcome(0.05).unwrap(), StepOutcome::One);
        assert_eq!(l.outcome(0.2).unwrap(), StepOutcome::Zero);
        assert_eq!(l.outcome(0.1).unwrap(), StepOutcome::AtThreshold);
        assert_eq!(LawParams::from(l).probability(0.1), Err(Error::AtThreshold(0.1)));
        assert!(l.outcome(0.0).is_err());
    }

    #[test]
    fn sigmoid_branches() {
        let l = Sigmoid::new(0.4, 2).unwrap();
        assert_eq!(l.probability(0.4).unwrap(), 0.5);
        assert!((l.probability(0.2).unwrap() - 0.875).abs() < 1e-15);
        assert!((l.probability(0.8).unwrap() - 0.125).abs() < 1e-15);
        assert!(Sigmoid::new(0.4, 0).is_err());
    }

    #[test]
    fn gbp_reference_values() {
        for p in [0.3, 1.0, 2.5, 7.0] {
            let v = gbp(p, p, 3, 0.2).probability(0.2).unwrap();
            assert!((v - 0.5).abs() < 1e-12, "p = q = {p}: {v}");
        }
        // p = q = 1 is the log-logistic survival function
        assert!((gbp(1.0, 1.0, 2, 0.1).probability(0.2).unwrap() - 0.2).abs() < 1e-14);
        assert!((gbp(2.0, 3.0, 1, 0.3).probability(0.3).unwrap() - 0.6875).abs() < 1e-13);
    }

    #[test]
    fn gbp_log_logistic_reduction_everywhere() {
        let l = gbp(1.0, 1.0, 3, 0.05);
        for i in -30..=30 {
            let h = 0.05 * 10f64.powf(i as f64 / 10.0);
            let want = 1.0 / (1.0 + (h / 0.05).powi(3));
            assert!((l.probability(h).unwrap() - want).abs() < 1e-13);
        }
    }

    #[test]
    fn density_h_reference_values() {
        let l = gbp(1.0, 1.0, 1, 1.0);
        assert!((l.density(1.0).unwrap() - 0.25).abs() < 1e-14);
        assert!((l.density(1e-12).unwrap() - 1.0).abs() < 1e-10);
        assert!(l.density(0.0).is_err());
    }

    #[test]
    fn density_h_normalizes() {
        for (p, q, d, hs) in [(1.0, 1.0, 1, 1.0), (2.0, 5.0, 2, 0.08), (0.7, 3.0, 3, 0.3)] {
            let l = gbp(p, q, d, hs);
            let y = |y: f64| l.log_scale_integrand(y);
            let total = quad::integrate_to_infinity(y, 0.0, 1e-11).unwrap().value
                + quad::integrate_from_neg_infinity(y, 0.0, 1e-11).unwrap().value;
            assert!((total - 1.0).abs() < 1e-6, "({p},{q},{d},{hs}) -> {total}");
        }
    }

    #[test]
    fn density_z_reference_values() {
        let pair = BetaPair::new(0.7, 1.9).unwrap();
        for z in [-0.7, -0.2, 0.0, 1.0, 1.9] {
            assert!((density_z(pair, 1.0, 1.0, z).unwrap() - 1.0 / 2.6).abs() < 1e-14);
        }
        let unit = BetaPair::new(1.0, 1.0).unwrap();
        assert!((density_z(unit, 2.0, 2.0, 0.0).unwrap() - 0.75).abs() < 1e-14);
        assert_eq!(density_z(unit, 2.0, 2.0, 1.1).unwrap(), 0.0);
        assert_eq!(density_z(unit, 2.0, 2.0, -1.1).unwrap(), 0.0);
    }

    #[test]
    fn density_z_normalizes() {
        for (lo, hi, p, q) in [(1.0, 3.0, 2.0, 3.0), (0.2, 0.05, 1.5, 4.0), (2.0, 2.0, 1.0, 1.0)] {
            let pair = BetaPair::new(lo, hi).unwrap();
            let r = quad::integrate(|z| density_z(pair, p, q, z).unwrap(), -lo, hi, 1e-10).unwrap();
            assert!((r.value - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn cdf_z_reference_values() {
        let sym = BetaPair::new(0.3, 0.3).unwrap();
        assert!((cdf_z_at_zero(sym, 2.2, 2.2).unwrap() - 0.5).abs() < 1e-13);
        let pair = BetaPair::new(1.0, 3.0).unwrap();
        assert!((cdf_z_at_zero(pair, 1.0, 1.0).unwrap() - 0.25).abs() < 1e-14);
        assert!((cdf_z_at_zero(pair, 2.0, 3.0).unwrap() - 0.261_718_75).abs() < 1e-13);
    }

    #[test]
    fn beta_pair_from_ratio() {
        let pair = BetaPair::from_ratio(0.1, 2, 0.2).unwrap();
        assert!((pair.beta_lo() / pair.beta_hi() - 0.25).abs() < 1e-15);
        let pair = BetaPair::from_ratio(0.1, 2, 0.05).unwrap();
        assert!((pair.beta_lo() / pair.beta_hi() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn gbp_cdf_keeps_the_saturated_tail() {
        let l = gbp(3.0, 5.0, 3, 0.1);
        for &h in &[1e-4, 1e-3, 0.05, 0.1, 0.3, 10.0] {
            let cdf = l.cdf(h).unwrap();
            let oracle = l.cdf_by_quadrature(h, 1e-14).unwrap();
            assert!(((cdf - oracle) / oracle).abs() < 1e-8, "h = {h}: {cdf} vs {oracle}");
            assert!((cdf + l.probability(h).unwrap() - 1.0).abs() < 1e-15);
        }
        // the probability itself has rounded to 1 here
        assert_eq!(l.probability(1e-4).unwrap(), 1.0);
        assert!(l.cdf(1e-4).unwrap() > 0.0);
    }

    #[test]
    fn gbp_extreme_mesh_sizes() {
        let l = gbp(3.0, 2.0, 2, 0.1);
        assert!(l.probability(1e-300).unwrap() > 1.0 - 1e-15);
        assert!(l.probability(1e300).unwrap() < 1e-15);
        assert!(l.probability(-1.0).is_err());
    }
}
