//! Predicted superconvergence orders and observed convergence orders.

use std::fmt;

use crate::error::{invalid, Result};

/// Exponent of the `h^δ` bound on the difference between the two bilinear
/// forms. `Infinite` encodes identical forms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Delta {
    Finite(f64),
    Infinite,
}

impl Delta {
    pub fn is_infinite(self) -> bool {
        matches!(self, Delta::Infinite)
    }

    /// `h^δ`, zero when the forms coincide.
    pub fn weight(self, h: f64) -> f64 {
        match self {
            Delta::Finite(d) => h.powf(d),
            Delta::Infinite => 0.0,
        }
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delta::Finite(d) => write!(f, "{d}"),
            Delta::Infinite => write!(f, "inf"),
        }
    }
}

/// Parameters entering the predicted orders.
#[derive(Clone, Debug, PartialEq)]
pub struct RateInputs {
    /// The meshes coincide except on a region of measure `O(h^gamma)`.
    pub gamma: f64,
    /// Integrability of the exact solution's derivatives; may be `f64::INFINITY`.
    pub eta: f64,
    pub delta: Delta,
    pub mu: usize,
    pub nu: usize,
    /// Order of the Sobolev space the forms are coercive on.
    pub s: usize,
    /// Polynomial degree plus one.
    pub r: usize,
    /// Whether the baseline estimates carry a `log(1/h)` factor. Recorded only.
    pub log_factor: bool,
    /// Integrability `q` of the second argument in the form-difference bound, when known.
    pub q: Option<f64>,
}

impl RateInputs {
    /// Identical forms (`δ = ∞`) with the given geometry parameters.
    pub fn same_forms(gamma: f64, eta: f64, s: usize, r: usize) -> Self {
        RateInputs {
            gamma,
            eta,
            delta: Delta::Infinite,
            mu: 0,
            nu: 0,
            s,
            r,
            log_factor: false,
            q: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) {
            return invalid(format!("gamma must be >= 0, got {}", self.gamma));
        }
        if !(self.eta >= 2.0) {
            return invalid(format!("eta must lie in [2, inf], got {}", self.eta));
        }
        if let Delta::Finite(d) = self.delta {
            if !(d >= 0.0) {
                return invalid(format!("delta must be >= 0, got {d}"));
            }
        }
        if self.s > 1 {
            return invalid(format!("s must be 0 or 1, got {}", self.s));
        }
        if self.mu > self.s || self.nu > self.s {
            return invalid(format!(
                "mu and nu must not exceed s = {} (got mu = {}, nu = {})",
                self.s, self.mu, self.nu
            ));
        }
        if self.r <= self.s {
            return invalid(format!("r must exceed s (r = {}, s = {})", self.r, self.s));
        }
        if let Some(q) = self.q {
            if !(q >= 1.0 && q <= self.eta) {
                return invalid(format!("q must lie in [1, eta], got {q}"));
            }
        }
        Ok(())
    }

    /// Restriction on `q` guaranteeing `H²(Ω) ⊂ W^{ν,q}(Ω)` in dimension `d`.
    pub fn check_q_embedding(&self, d: usize) -> Result<()> {
        let Some(q) = self.q else { return Ok(()) };
        let threshold = 4 - 2 * self.nu as i64;
        let d = d as i64;
        if d == threshold && !q.is_finite() {
            return invalid(format!("q must be finite when d = 4 - 2*nu = {d}"));
        }
        if d > threshold {
            let bound = 2.0 * d as f64 / (d - threshold) as f64;
            if q > bound {
                return invalid(format!("q must satisfy q <= 2d/(d-4+2nu) = {bound}, got {q}"));
            }
        }
        Ok(())
    }

    fn geometric_term(&self) -> f64 {
        let inv_eta = if self.eta.is_infinite() { 0.0 } else { 1.0 / self.eta };
        self.gamma * (0.5 - inv_eta)
    }
}

/// Superconvergence order of the `H^s` difference:
/// `σ = min{γ(1/2 − 1/η), (δ + 2s − μ − ν)/2}`.
pub fn predicted_sigma(inputs: &RateInputs) -> Result<f64> {
    inputs.validate()?;
    let geometric = inputs.geometric_term();
    Ok(match inputs.delta {
        Delta::Infinite => geometric,
        Delta::Finite(d) => {
            let form = (d + 2.0 * inputs.s as f64 - inputs.mu as f64 - inputs.nu as f64) / 2.0;
            geometric.min(form)
        }
    })
}

/// Superconvergence order of the `L²` difference of elliptic projections:
/// `σ′ = min{γ(1/2 − 1/η), (δ + 2 − μ − ν)/2, δ − μ}`.
pub fn predicted_sigma_prime(inputs: &RateInputs) -> Result<f64> {
    inputs.validate()?;
    if inputs.s != 1 {
        return invalid(format!("sigma' is defined for s = 1 only, got s = {}", inputs.s));
    }
    let geometric = inputs.geometric_term();
    Ok(match inputs.delta {
        Delta::Infinite => geometric,
        Delta::Finite(d) => {
            let form = (d + 2.0 - inputs.mu as f64 - inputs.nu as f64) / 2.0;
            geometric.min(form).min(d - inputs.mu as f64)
        }
    })
}

/// Predicted convergence order of `‖r_h⁺u − r_h u‖` in the `H^m` norm (`m ∈ {0, 1}`).
/// Uses `r − m + σ` for `m = s`, and `r + σ′` for the `L²` norm under an `s = 1` form.
pub fn predicted_order(inputs: &RateInputs, norm_order: usize) -> Result<f64> {
    let r = inputs.r as f64;
    if norm_order == inputs.s {
        return Ok(r - inputs.s as f64 + predicted_sigma(inputs)?);
    }
    if norm_order == 0 && inputs.s == 1 {
        return Ok(r + predicted_sigma_prime(inputs)?);
    }
    invalid(format!(
        "no prediction for the H^{norm_order} norm under an s = {} form",
        inputs.s
    ))
}

/// Orders `log(v_{i-1}/v_i) / log(h_{i-1}/h_i)` between consecutive levels.
pub fn observed_orders(hs: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    if hs.len() != values.len() || hs.len() < 2 {
        return invalid("need at least two (h, value) pairs of equal length");
    }
    if hs.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid("mesh sizes must be strictly decreasing");
    }
    if let Some(v) = values.iter().find(|&&v| !(v > 0.0)) {
        return invalid(format!("norm values must be positive, got {v}"));
    }
    Ok(hs
        .windows(2)
        .zip(values.windows(2))
        .map(|(h, v)| (v[0] / v[1]).ln() / (h[0] / h[1]).ln())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const INF: f64 = f64::INFINITY;

    #[test]
    fn sigma_examples() {
        let one_d = RateInputs::same_forms(1.0, INF, 0, 2);
        assert_eq!(predicted_sigma(&one_d).unwrap(), 0.5);
        assert_eq!(predicted_order(&one_d, 0).unwrap(), 2.5);
        let two_d = RateInputs::same_forms(2.0, INF, 0, 2);
        assert_eq!(predicted_order(&two_d, 0).unwrap(), 3.0);
        assert_eq!(predicted_sigma(&RateInputs::same_forms(0.0, INF, 0, 2)).unwrap(), 0.0);
        assert_eq!(predicted_sigma(&RateInputs::same_forms(5.0, 2.0, 1, 2)).unwrap(), 0.0);
        let quarter = RateInputs::same_forms(1.0, 4.0, 1, 2);
        assert_eq!(predicted_sigma(&quarter).unwrap(), 0.25);
    }

    #[test]
    fn sigma_prime_examples() {
        let e = RateInputs::same_forms(1.0, INF, 1, 2);
        assert_eq!(predicted_sigma_prime(&e).unwrap(), 0.5);
        assert_eq!(predicted_order(&e, 1).unwrap(), 1.5);
        assert_eq!(predicted_order(&e, 0).unwrap(), 2.5);
        let e2 = RateInputs::same_forms(2.0, INF, 1, 2);
        assert_eq!(predicted_order(&e2, 1).unwrap(), 2.0);
        assert_eq!(predicted_order(&e2, 0).unwrap(), 3.0);
        let mut d = RateInputs::same_forms(1e6, INF, 1, 2);
        d.delta = Delta::Finite(1.0);
        d.mu = 1;
        assert_eq!(predicted_sigma_prime(&d).unwrap(), 0.0);
        assert!(predicted_sigma_prime(&RateInputs::same_forms(1.0, INF, 0, 2)).is_err());
    }

    #[test]
    fn validation() {
        let mut bad = RateInputs::same_forms(1.0, INF, 0, 2);
        bad.mu = 1;
        assert!(bad.validate().is_err());
        assert!(RateInputs::same_forms(1.0, 1.5, 0, 2).validate().is_err());
        assert!(RateInputs::same_forms(1.0, INF, 1, 1).validate().is_err());
        let mut q = RateInputs::same_forms(1.0, INF, 1, 2);
        q.nu = 1;
        q.q = Some(INF);
        assert!(q.check_q_embedding(2).is_err());
        assert!(q.check_q_embedding(1).is_ok());
        q.q = Some(7.0);
        assert!(q.check_q_embedding(3).is_err());
        q.q = Some(6.0);
        assert!(q.check_q_embedding(3).is_ok());
    }

    #[test]
    fn observed_order_examples() {
        let hs = [1.0 / 8.0, 1.0 / 16.0];
        let o = observed_orders(&hs, &[3.2150e-03, 5.6505e-04]).unwrap();
        assert!((o[0] - 2.5084).abs() < 5e-5);
        let o = observed_orders(&hs, &[1.2843e-04, 1.0676e-05]).unwrap();
        assert!((o[0] - 3.5886).abs() < 2e-4);
        assert_eq!(observed_orders(&hs, &[2.0, 2.0]).unwrap(), vec![0.0]);
        assert!(observed_orders(&hs, &[1.0, 0.0]).is_err());
        assert!(observed_orders(&[0.1, 0.2], &[1.0, 2.0]).is_err());
        assert!(observed_orders(&[0.1], &[1.0]).is_err());
    }

    fn inputs() -> impl Strategy<Value = RateInputs> {
        (
            0.0..3.0f64,
            prop_oneof![Just(INF), 2.0..50.0f64],
            prop_oneof![Just(Delta::Infinite), (0.0..4.0f64).prop_map(Delta::Finite)],
            0usize..=1,
            0usize..=1,
            2usize..5,
        )
            .prop_map(|(gamma, eta, delta, mu, nu, r)| RateInputs {
                gamma,
                eta,
                delta,
                mu,
                nu,
                s: 1,
                r,
                log_factor: false,
                q: None,
            })
    }

    proptest! {
        #[test]
        fn sigma_prime_never_exceeds_sigma(i in inputs()) {
            prop_assert!(predicted_sigma_prime(&i).unwrap() <= predicted_sigma(&i).unwrap());
        }

        #[test]
        fn sigma_monotone(i in inputs(), dg in 0.0..1.0f64, dd in 0.0..1.0f64) {
            let base = predicted_sigma(&i).unwrap();
            let mut more = i.clone();
            more.gamma += dg;
            more.delta = match i.delta { Delta::Finite(d) => Delta::Finite(d + dd), Delta::Infinite => Delta::Infinite };
            more.eta = if i.eta.is_finite() { i.eta + dd } else { INF };
            prop_assert!(predicted_sigma(&more).unwrap() >= base);
        }

        #[test]
        fn orders_scale_invariant(v0 in 1e-8..1.0f64, v1 in 1e-8..1.0f64, c in 1e-3..1e3f64) {
            let hs = [0.1, 0.05];
            let a = observed_orders(&hs, &[v0, v1]).unwrap();
            let b = observed_orders(&hs, &[c * v0, c * v1]).unwrap();
            prop_assert!((a[0] - b[0]).abs() < 1e-9);
        }
    }
}
