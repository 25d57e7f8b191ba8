//! Error-bound constants behind the two finite element estimates.
//!
//! For a degree-k Lagrange element the H¹ error is bounded by
//! `beta_k(h) = C_k h^k |u|_{k+1}`. The constants are unknown in practice, so
//! this type only exists for simulations that posit them; the fitting path
//! treats `h*` as a free parameter instead.

use crate::error::{domain, Result};
use crate::laws::BetaPair;

/// Which of the two competing elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Element {
    Lower,
    Higher,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundModel {
    k1: u32,
    k2: u32,
    c_k1: f64,
    c_k2: f64,
    s_k1: f64,
    s_k2: f64,
}

impl BoundModel {
    /// `c_*` are the interpolation constants, `s_*` the semi-norms
    /// `|u|_{k+1}` of the exact solution.
    pub fn new(k1: u32, k2: u32, c_k1: f64, c_k2: f64, s_k1: f64, s_k2: f64) -> Result<Self> {
        if k1 < 1 || k2 <= k1 {
            return Err(domain(format!("degrees must satisfy 1 <= k1 < k2, got k1 = {k1}, k2 = {k2}")));
        }
        for (name, v) in [("c_k1", c_k1), ("c_k2", c_k2), ("s_k1", s_k1), ("s_k2", s_k2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(domain(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(Self { k1, k2, c_k1, c_k2, s_k1, s_k2 })
    }

    pub fn k1(&self) -> u32 {
        self.k1
    }

    pub fn k2(&self) -> u32 {
        self.k2
    }

    /// `k2 - k1`, the exponent shared by every law.
    pub fn delta(&self) -> u32 {
        self.k2 - self.k1
    }

    /// The error bound `C_k h^k |u|_{k+1}` of the selected element.
    pub fn beta_k(&self, which: Element, h: f64) -> Result<f64> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(domain(format!("mesh size must be finite and positive, got {h}")));
        }
        let (c, k, s) = match which {
            Element::Lower => (self.c_k1, self.k1, self.s_k1),
            Element::Higher => (self.c_k2, self.k2, self.s_k2),
        };
        Ok(c * h.powi(k as i32) * s)
    }

    /// Both bounds at mesh size `h`.
    pub fn beta_pair(&self, h: f64) -> Result<BetaPair> {
        BetaPair::new(self.beta_k(Element::Lower, h)?, self.beta_k(Element::Higher, h)?)
    }

    /// Critical mesh size where the two bounds coincide:
    /// `((C_k1 |u|_{k1+1}) / (C_k2 |u|_{k2+1}))^(1/(k2-k1))`.
    pub fn h_star(&self) -> f64 {
        let ratio = (self.c_k1 * self.s_k1) / (self.c_k2 * self.s_k2);
        ratio.powf(1.0 / self.delta() as f64)
    }
}
