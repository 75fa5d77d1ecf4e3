//! Margin-based loss functions and the label-symmetry checker.
//!
//! A margin loss maps the margin `α = f(x)·(2y−1)` (pointwise) or
//! `α = (f(x₁)−f(x₂))·(2y₁₂−1)` (pairwise) to a nonnegative value. A loss is
//! *label-symmetric* when `ℓ(α) + ℓ(−α) = c` for some constant `c` and all
//! `α ≠ 0`; label-symmetric losses keep the preference order between scoring
//! functions intact under class-conditional label noise, which is what makes
//! them worth distinguishing here.
//!
//! Two of the kinds only satisfy the symmetry identity on a bounded margin
//! domain: `Hinge` on `[−1, 1]` (constant 2) and `AbsoluteError` on margins
//! induced by scores in `[0, 1]` (constant 1). Each kind therefore declares a
//! validity domain, and [`check_label_symmetry`] refuses probes outside it.

use crate::error::{Error, Result};

/// The margin-loss kinds supported by the crate.
///
/// Canonical string names (used in CLI flags and CSV headers):
/// `zero_one`, `hinge`, `l1`, `logistic`, `exponential`,
/// `symmetrized_logistic`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// `𝟙(α < 0)`; label-symmetric with constant 1.
    ZeroOne,
    /// `max(0, 1−α)`; label-symmetric with constant 2 on `[−1, 1]`.
    Hinge,
    /// `|1−α|/2`, the absolute-error loss `|y − s|` for scores `s ∈ [0, 1]`
    /// rewritten over the centered margin `α = (2s−1)(2y−1)`;
    /// label-symmetric with constant 1 on `[−1, 1]`.
    AbsoluteError,
    /// `log(1 + e^{−α})`; not label-symmetric.
    Logistic,
    /// `e^{−α}`; not label-symmetric.
    Exponential,
    /// `1 − σ(α)`; bounded, non-convex, label-symmetric with constant 1.
    SymmetrizedLogistic,
}

/// How a margin loss is applied when computing risks and gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossMode {
    /// One margin per document: `α = f(x)(2y−1)`.
    Pointwise,
    /// One margin per mixed-label document pair within a query.
    Pairwise,
}

impl LossMode {
    pub fn name(self) -> &'static str {
        match self {
            LossMode::Pointwise => "pointwise",
            LossMode::Pairwise => "pairwise",
        }
    }
}

impl std::str::FromStr for LossMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pointwise" => Ok(LossMode::Pointwise),
            "pairwise" => Ok(LossMode::Pairwise),
            other => Err(Error::invalid(format!(
                "unknown loss mode '{other}' (expected 'pointwise' or 'pairwise')"
            ))),
        }
    }
}

/// Threshold beyond which `softplus` switches to its linear asymptote.
const SOFTPLUS_LINEAR_CUTOFF: f64 = 30.0;

/// `log(1 + e^x)` without overflow for large `|x|`.
fn softplus(x: f64) -> f64 {
    if x > SOFTPLUS_LINEAR_CUTOFF {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Numerically stable logistic sigmoid.
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LossKind {
    pub const ALL: [LossKind; 6] = [
        LossKind::ZeroOne,
        LossKind::Hinge,
        LossKind::AbsoluteError,
        LossKind::Logistic,
        LossKind::Exponential,
        LossKind::SymmetrizedLogistic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::ZeroOne => "zero_one",
            LossKind::Hinge => "hinge",
            LossKind::AbsoluteError => "l1",
            LossKind::Logistic => "logistic",
            LossKind::Exponential => "exponential",
            LossKind::SymmetrizedLogistic => "symmetrized_logistic",
        }
    }

    /// Whether derivative queries are supported away from kinks without a
    /// subgradient convention. `ZeroOne` and `AbsoluteError` are the
    /// nondifferentiable kinds; `Hinge` counts as differentiable with the
    /// subgradient 0 at its single kink `α = 1`.
    pub fn differentiable(self) -> bool {
        !matches!(self, LossKind::ZeroOne | LossKind::AbsoluteError)
    }

    /// The constant `c` in `ℓ(α)+ℓ(−α) = c`, for the label-symmetric kinds,
    /// valid on [`margin_domain`](Self::margin_domain).
    pub fn symmetry_constant(self) -> Option<f64> {
        match self {
            LossKind::ZeroOne | LossKind::SymmetrizedLogistic => Some(1.0),
            LossKind::Hinge => Some(2.0),
            LossKind::AbsoluteError => Some(1.0),
            LossKind::Logistic | LossKind::Exponential => None,
        }
    }

    /// Closed margin interval on which the loss's declared properties
    /// (symmetry constant in particular) hold.
    pub fn margin_domain(self) -> (f64, f64) {
        match self {
            LossKind::Hinge | LossKind::AbsoluteError => (-1.0, 1.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Evaluates the loss at margin `alpha`.
    ///
    /// Stable for `|alpha|` up to 700. Non-finite margins are rejected.
    pub fn eval(self, alpha: f64) -> Result<f64> {
        if !alpha.is_finite() {
            return Err(Error::invalid(format!("non-finite margin {alpha}")));
        }
        Ok(self.value(alpha))
    }

    /// Unchecked evaluation; callers must have validated finiteness.
    pub(crate) fn value(self, alpha: f64) -> f64 {
        match self {
            LossKind::ZeroOne => {
                if alpha < 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            LossKind::Hinge => (1.0 - alpha).max(0.0),
            LossKind::AbsoluteError => (1.0 - alpha).abs() / 2.0,
            LossKind::Logistic => softplus(-alpha),
            LossKind::Exponential => (-alpha).exp(),
            // Evaluated as σ(−α) with the α<0 branch expressed as an exact
            // complement, so eval(α) + eval(−α) == 1 holds bit-for-bit.
            LossKind::SymmetrizedLogistic => {
                if alpha >= 0.0 {
                    let t = (-alpha).exp();
                    t / (1.0 + t)
                } else {
                    1.0 - LossKind::SymmetrizedLogistic.value(-alpha)
                }
            }
        }
    }

    /// `dℓ/dα`. At kinks the subgradient convention applies: `Hinge` and
    /// `AbsoluteError` both return 0 at their kink `α = 1`. Derivatives of
    /// `ZeroOne` are unsupported.
    pub fn derivative(self, alpha: f64) -> Result<f64> {
        if !alpha.is_finite() {
            return Err(Error::invalid(format!("non-finite margin {alpha}")));
        }
        match self {
            LossKind::ZeroOne => Err(Error::Unsupported(
                "derivative of the zero-one loss".into(),
            )),
            LossKind::Hinge => Ok(if alpha < 1.0 { -1.0 } else { 0.0 }),
            LossKind::AbsoluteError => Ok(match alpha.partial_cmp(&1.0).unwrap() {
                std::cmp::Ordering::Less => -0.5,
                std::cmp::Ordering::Equal => 0.0,
                std::cmp::Ordering::Greater => 0.5,
            }),
            LossKind::Logistic => Ok(-sigmoid(-alpha)),
            LossKind::Exponential => Ok(-(-alpha).exp()),
            LossKind::SymmetrizedLogistic => Ok(-sigmoid(alpha) * sigmoid(-alpha)),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown loss kind '{s}'")))
    }
}

/// Result of probing `ℓ(α)+ℓ(−α)` for constancy.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub symmetric: bool,
    /// Mean of the probed sums; present only when `symmetric`.
    pub constant: Option<f64>,
    /// Largest deviation of any probed sum from the first probe's sum.
    pub max_deviation: f64,
}

/// Probes `s(α) = ℓ(α) + ℓ(−α)` at every point in `probe_points` and reports
/// whether the sums agree within `tol` of the first probe's sum.
///
/// Probes must be nonzero, finite, and inside the loss's margin domain.
pub fn check_label_symmetry(
    kind: LossKind,
    probe_points: &[f64],
    tol: f64,
) -> Result<SymmetryReport> {
    if probe_points.is_empty() {
        return Err(Error::invalid("empty probe set"));
    }
    let (lo, hi) = kind.margin_domain();
    let mut sums = Vec::with_capacity(probe_points.len());
    for &p in probe_points {
        if !p.is_finite() || p == 0.0 {
            return Err(Error::invalid(format!(
                "probe points must be finite and nonzero, got {p}"
            )));
        }
        if p < lo || p > hi {
            return Err(Error::invalid(format!(
                "probe {p} outside the validity domain [{lo}, {hi}] of {kind}"
            )));
        }
        sums.push(kind.eval(p)? + kind.eval(-p)?);
    }
    let reference = sums[0];
    let max_deviation = sums
        .iter()
        .map(|s| (s - reference).abs())
        .fold(0.0, f64::max);
    let symmetric = max_deviation <= tol;
    let constant = symmetric.then(|| sums.iter().sum::<f64>() / sums.len() as f64);
    Ok(SymmetryReport {
        symmetric,
        constant,
        max_deviation,
    })
}

/// Margin of a document pair: `(score_i − score_j)·(2y_ij − 1)` with
/// `y_ij = (y_i − y_j + 1)/2`. Pairs with equal labels are ties and carry no
/// pairwise risk, so they yield `None`.
pub fn pairwise_margin(score_i: f64, score_j: f64, y_i: u8, y_j: u8) -> Result<Option<f64>> {
    if !score_i.is_finite() || !score_j.is_finite() {
        return Err(Error::invalid(format!(
            "non-finite scores ({score_i}, {score_j})"
        )));
    }
    if y_i > 1 || y_j > 1 {
        return Err(Error::invalid(format!(
            "labels must be binary, got ({y_i}, {y_j})"
        )));
    }
    if y_i == y_j {
        return Ok(None);
    }
    let sign = if y_i > y_j { 1.0 } else { -1.0 };
    Ok(Some((score_i - score_j) * sign))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DIFFERENTIABLE: [LossKind; 4] = [
        LossKind::Hinge,
        LossKind::Logistic,
        LossKind::Exponential,
        LossKind::SymmetrizedLogistic,
    ];

    #[test]
    fn eval_matches_hand_values() {
        assert_eq!(LossKind::SymmetrizedLogistic.eval(0.0).unwrap(), 0.5);
        assert_eq!(LossKind::ZeroOne.eval(-0.3).unwrap(), 1.0);
        assert_eq!(LossKind::ZeroOne.eval(0.3).unwrap(), 0.0);
        // log(1 + e^{∓1}), six decimals.
        assert!((LossKind::Logistic.eval(1.0).unwrap() - 0.313262).abs() < 5e-7);
        assert!((LossKind::Logistic.eval(-1.0).unwrap() - 1.313262).abs() < 5e-7);
        assert_eq!(LossKind::Hinge.eval(2.0).unwrap(), 0.0);
        assert_eq!(LossKind::Hinge.eval(-1.0).unwrap(), 2.0);
        assert_eq!(LossKind::AbsoluteError.eval(1.0).unwrap(), 0.0);
        assert_eq!(LossKind::AbsoluteError.eval(-1.0).unwrap(), 1.0);
    }

    #[test]
    fn eval_is_stable_at_large_margins() {
        for kind in LossKind::ALL {
            for alpha in [-700.0, 700.0] {
                let v = kind.eval(alpha).unwrap();
                assert!(v.is_finite(), "{kind} overflowed at {alpha}: {v}");
                assert!(v >= 0.0);
            }
        }
        // The logistic loss is linear in −α far out.
        assert!((LossKind::Logistic.eval(-700.0).unwrap() - 700.0).abs() < 1e-9);
    }

    #[test]
    fn eval_rejects_non_finite_margins() {
        for bad in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
            assert!(LossKind::Hinge.eval(bad).is_err());
            assert!(LossKind::Hinge.derivative(bad).is_err());
        }
    }

    #[test]
    fn derivative_matches_hand_values() {
        assert_eq!(
            LossKind::SymmetrizedLogistic.derivative(0.0).unwrap(),
            -0.25
        );
        assert_eq!(LossKind::Exponential.derivative(0.0).unwrap(), -1.0);
        assert_eq!(LossKind::Hinge.derivative(2.0).unwrap(), 0.0);
        // Subgradient convention at the kinks.
        assert_eq!(LossKind::Hinge.derivative(1.0).unwrap(), 0.0);
        assert_eq!(LossKind::AbsoluteError.derivative(1.0).unwrap(), 0.0);
    }

    #[test]
    fn zero_one_derivative_is_unsupported() {
        assert!(matches!(
            LossKind::ZeroOne.derivative(0.5),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn symmetry_checker_matches_declared_constants() {
        let wide = [0.1, -0.1, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 5.0, -5.0];
        let bounded = [0.1, -0.1, 0.5, -0.5, 1.0, -1.0];

        let r = check_label_symmetry(LossKind::ZeroOne, &wide, 1e-9).unwrap();
        assert!(r.symmetric);
        assert_eq!(r.constant, Some(1.0));

        let r = check_label_symmetry(LossKind::SymmetrizedLogistic, &wide, 1e-9).unwrap();
        assert!(r.symmetric);
        assert_eq!(r.constant, Some(1.0));

        let r = check_label_symmetry(LossKind::Hinge, &bounded, 1e-9).unwrap();
        assert!(r.symmetric);
        assert_eq!(r.constant, Some(2.0));

        let r = check_label_symmetry(LossKind::AbsoluteError, &bounded, 1e-9).unwrap();
        assert!(r.symmetric);
        assert_eq!(r.constant, Some(1.0));

        for kind in [LossKind::Logistic, LossKind::Exponential] {
            let r = check_label_symmetry(kind, &wide, 1e-9).unwrap();
            assert!(!r.symmetric, "{kind} should not be label-symmetric");
            assert_eq!(r.constant, None);
        }
    }

    #[test]
    fn logistic_symmetry_deviation_on_two_probes() {
        // s(1) = log(1+e⁻¹)+log(1+e) ≈ 1.6265, s(3) ≈ 3.0972.
        let r = check_label_symmetry(LossKind::Logistic, &[1.0, 3.0], 1e-9).unwrap();
        assert!(!r.symmetric);
        assert!((r.max_deviation - 1.4706513281110385).abs() < 1e-12);
    }

    #[test]
    fn symmetry_checker_rejects_bad_probes() {
        assert!(check_label_symmetry(LossKind::ZeroOne, &[], 1e-9).is_err());
        assert!(check_label_symmetry(LossKind::ZeroOne, &[0.0], 1e-9).is_err());
        // Outside the hinge domain [−1, 1].
        assert!(check_label_symmetry(LossKind::Hinge, &[2.0], 1e-9).is_err());
        assert!(check_label_symmetry(LossKind::AbsoluteError, &[-1.5], 1e-9).is_err());
    }

    #[test]
    fn names_round_trip() {
        for kind in LossKind::ALL {
            assert_eq!(kind.name().parse::<LossKind>().unwrap(), kind);
        }
        assert!("soft_hinge".parse::<LossKind>().is_err());
    }

    #[test]
    fn pairwise_margin_examples() {
        assert_eq!(pairwise_margin(0.9, 0.1, 1, 0).unwrap(), Some(0.8));
        // Sign flips with the labels.
        let m = pairwise_margin(0.9, 0.1, 0, 1).unwrap().unwrap();
        assert!((m - -0.8).abs() < 1e-15);
        assert_eq!(pairwise_margin(0.9, 0.1, 1, 1).unwrap(), None);
        assert_eq!(pairwise_margin(0.9, 0.1, 0, 0).unwrap(), None);
        assert!(pairwise_margin(f64::NAN, 0.1, 1, 0).is_err());
        assert!(pairwise_margin(0.9, 0.1, 2, 0).is_err());
    }

    #[test]
    fn finite_differences_agree_with_derivatives() {
        let mut rng = crate::seeding::derive_rng(7, &[99]);
        let h = 1e-6;
        for kind in DIFFERENTIABLE {
            let mut checked = 0;
            while checked < 100 {
                let alpha: f64 = rand::Rng::gen_range(&mut rng, -10.0..10.0);
                // Stay away from the hinge kink.
                if kind == LossKind::Hinge && (alpha - 1.0).abs() < 1e-3 {
                    continue;
                }
                let d = kind.derivative(alpha).unwrap();
                let fd =
                    (kind.eval(alpha + h).unwrap() - kind.eval(alpha - h).unwrap()) / (2.0 * h);
                let tol = 1e-5 * d.abs().max(1.0);
                assert!(
                    (d - fd).abs() <= tol,
                    "{kind} at {alpha}: derivative {d} vs fd {fd}"
                );
                checked += 1;
            }
        }
    }

    proptest! {
        #[test]
        fn losses_are_nonnegative(alpha in -700.0f64..700.0) {
            for kind in LossKind::ALL {
                prop_assert!(kind.eval(alpha).unwrap() >= 0.0);
            }
        }

        #[test]
        fn symmetrized_logistic_complement_is_exact(alpha in -700.0f64..700.0) {
            let sum = LossKind::SymmetrizedLogistic.eval(alpha).unwrap()
                + LossKind::SymmetrizedLogistic.eval(-alpha).unwrap();
            prop_assert_eq!(sum, 1.0);
        }

        #[test]
        fn monotone_kinds_are_nonincreasing(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for kind in [
                LossKind::Hinge,
                LossKind::Logistic,
                LossKind::Exponential,
                LossKind::SymmetrizedLogistic,
            ] {
                prop_assert!(kind.eval(lo).unwrap() >= kind.eval(hi).unwrap());
            }
        }
    }
}
