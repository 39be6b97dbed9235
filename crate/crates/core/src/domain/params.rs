use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Caveats attached to parameter triples that are accepted but sit outside
/// the fully classified regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamWarning {
    /// k = n: the inequality holds but there are no translation directions,
    /// and the eigenvalue classification is only established for k ≤ n−1.
    NoTranslationAxes,
    /// k = 2: the weighted singular mass standing assumption (k ≥ 3) fails.
    SingularWeightOutsideStandingAssumption,
}

/// Dimension `n`, exponent `p` and weight dimension `k` of the inequality,
/// with the derived critical exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct Params {
    n: usize,
    p: f64,
    k: usize,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    n: usize,
    p: f64,
    k: usize,
    #[serde(default, skip_deserializing)]
    p_star: f64,
    #[serde(default, skip_deserializing)]
    p1_star: f64,
    #[serde(default, skip_deserializing)]
    m: usize,
}

impl TryFrom<RawParams> for Params {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        Params::new(raw.n, raw.p, raw.k)
    }
}

impl From<Params> for RawParams {
    fn from(p: Params) -> Self {
        RawParams {
            n: p.n,
            p: p.p,
            k: p.k,
            p_star: p.p_star(),
            p1_star: p.p1_star(),
            m: p.m(),
        }
    }
}

impl Params {
    /// Validates `n ≥ 4`, `1 < p < n` and `2 ≤ k ≤ n`.
    ///
    /// The endpoints `k = 2` and `k = n` are accepted but carry a
    /// [`ParamWarning`]; everything else in the crate assumes `3 ≤ k ≤ n−1`.
    pub fn new(n: usize, p: f64, k: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidParams(format!("n = {n} must be at least 4")));
        }
        if !(p.is_finite() && p > 1.0 && p < n as f64) {
            return Err(Error::InvalidParams(format!("p = {p} must satisfy 1 < p < n = {n}")));
        }
        if k < 2 || k > n {
            return Err(Error::InvalidParams(format!("k = {k} must satisfy 2 ≤ k ≤ n = {n}")));
        }
        Ok(Params { n, p, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of translation (z) directions, `n − k`.
    pub fn m(&self) -> usize {
        self.n - self.k
    }

    /// Sobolev exponent `np/(n−p)`.
    pub fn p_star(&self) -> f64 {
        let n = self.n as f64;
        n * self.p / (n - self.p)
    }

    /// Weighted critical exponent `p(n−1)/(n−p)`.
    pub fn p1_star(&self) -> f64 {
        let n = self.n as f64;
        self.p * (n - 1.0) / (n - self.p)
    }

    /// Stability exponent `max{2, p}`.
    pub fn stability_exponent(&self) -> f64 {
        self.p.max(2.0)
    }

    /// Decay exponent `e = (n−p)/(2(p−1))` of the extremal profile `W^{−e}`.
    pub fn profile_exponent(&self) -> f64 {
        (self.n as f64 - self.p) / (2.0 * (self.p - 1.0))
    }

    /// Dilation weight `(n−p)/p`: `u_σ(x) = σ^{−(n−p)/p} u(x/σ)` preserves both norms.
    pub fn dilation_exponent(&self) -> f64 {
        (self.n as f64 - self.p) / self.p
    }

    pub fn warnings(&self) -> Vec<ParamWarning> {
        let mut out = Vec::new();
        if self.k == self.n {
            out.push(ParamWarning::NoTranslationAxes);
        }
        if self.k < 3 {
            out.push(ParamWarning::SingularWeightOutsideStandingAssumption);
        }
        out
    }

    /// True when `3 ≤ k ≤ n−1`, the regime where the eigenvalue classification applies.
    pub fn in_standing_regime(&self) -> bool {
        self.warnings().is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponents_default_triple() {
        let p = Params::new(4, 2.0, 3).unwrap();
        assert_eq!(p.p_star(), 4.0);
        assert_eq!(p.p1_star(), 3.0);
        assert_eq!(p.m(), 1);
        assert_eq!(p.profile_exponent(), 1.0);
        assert!(p.in_standing_regime());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(Params::new(3, 2.0, 2).is_err());
        assert!(Params::new(4, 1.0, 3).is_err());
        assert!(Params::new(4, 4.0, 3).is_err());
        assert!(Params::new(4, f64::NAN, 3).is_err());
        assert!(Params::new(4, 2.0, 1).is_err());
        assert!(Params::new(4, 2.0, 5).is_err());
    }

    #[test]
    fn endpoint_warnings() {
        let full = Params::new(4, 2.0, 4).unwrap();
        assert_eq!(full.m(), 0);
        assert_eq!(full.warnings(), vec![ParamWarning::NoTranslationAxes]);
        let low = Params::new(5, 2.0, 2).unwrap();
        assert_eq!(low.warnings(), vec![ParamWarning::SingularWeightOutsideStandingAssumption]);
    }

    #[test]
    fn serde_round_trip_validates() {
        let p = Params::new(5, 2.5, 3).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("p1_star"));
        let back: Params = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<Params>(r#"{"n":4,"p":5.0,"k":3}"#).is_err());
    }
}
