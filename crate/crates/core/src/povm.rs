//! Positive operator-valued measures: validation, ε-normalization,
//! direct-sum lifting and generators.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::TOL;
use crate::error::{validation, Error, Result};
use crate::linalg::{operator_norm, CMatrix, HermitianMatrix, C64};

/// A list of PSD effects on `C^dim` summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    effects: Vec<HermitianMatrix>,
}

impl Povm {
    /// Validates at the default POVM tolerance.
    pub fn new(effects: Vec<HermitianMatrix>) -> Result<Self> {
        let check = is_povm(&effects, TOL.povm)?;
        if !check.valid {
            return Err(validation(format!("not a POVM: {check}")));
        }
        Ok(Self { dim: effects[0].dim(), effects })
    }

    pub(crate) fn from_unchecked(effects: Vec<HermitianMatrix>) -> Self {
        Self { dim: effects[0].dim(), effects }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of outcomes.
    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[HermitianMatrix] {
        &self.effects
    }

    pub fn effect(&self, i: usize) -> &HermitianMatrix {
        &self.effects[i]
    }

    /// Projective measurement onto computational basis states, outcome `a`
    /// receiving the basis vectors `i` with `labels[i] == a`.
    pub fn from_labels(labels: &[usize], outcomes: usize) -> Result<Self> {
        if labels.iter().any(|&a| a >= outcomes) {
            return Err(validation("label out of range"));
        }
        let effects = (0..outcomes)
            .map(|a| HermitianMatrix::diag(&labels.iter().map(|&l| if l == a { 1.0 } else { 0.0 }).collect::<Vec<_>>()))
            .collect();
        Ok(Self::from_unchecked(effects))
    }

    /// Compression of every effect to the leading `dim` coordinates.
    pub fn compress(&self, dim: usize) -> Vec<HermitianMatrix> {
        self.effects.iter().map(|e| e.compress(0..dim)).collect()
    }

    /// Effect-wise direct sum with another POVM of the same length.
    pub fn direct_sum(&self, other: &Povm) -> Result<Povm> {
        if self.len() != other.len() {
            return Err(validation("direct sum of POVMs with different outcome counts"));
        }
        Ok(Self::from_unchecked(self.effects.iter().zip(&other.effects).map(|(a, b)| a.direct_sum(b)).collect()))
    }

    /// `U A_i U^*` for every effect.
    pub fn conjugate_by(&self, u: &CMatrix) -> Povm {
        Self::from_unchecked(self.effects.iter().map(|e| e.conjugate_by(u)).collect())
    }
}

/// Which POVM condition failed.
#[derive(Debug, Clone, PartialEq)]
pub enum PovmViolation {
    NotPositive { index: usize, min_eigenvalue: f64 },
    SumNotIdentity { deviation: f64 },
}

/// Outcome of [`is_povm`] with per-condition diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmCheck {
    pub valid: bool,
    pub min_eigenvalues: Vec<f64>,
    /// `‖Σ effects − I‖` in operator norm.
    pub sum_deviation: f64,
    pub violations: Vec<PovmViolation>,
}

impl fmt::Display for PovmCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid {
            return write!(f, "valid POVM (sum deviation {:.3e})", self.sum_deviation);
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| match v {
                PovmViolation::NotPositive { index, min_eigenvalue } => {
                    format!("effect {index} not positive (min eigenvalue {min_eigenvalue:.3e})")
                }
                PovmViolation::SumNotIdentity { deviation } => {
                    format!("effects do not sum to identity (‖Σ−I‖ = {deviation:.3e})")
                }
            })
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

fn check_dims(effects: &[HermitianMatrix]) -> Result<usize> {
    let Some(first) = effects.first() else {
        return Err(validation("POVM needs at least one effect"));
    };
    let d = first.dim();
    if let Some((i, e)) = effects.iter().enumerate().find(|(_, e)| e.dim() != d) {
        return Err(validation(format!("effect {i} has dimension {} but effect 0 has {d}", e.dim())));
    }
    Ok(d)
}

fn deviation_from_identity(effects: &[HermitianMatrix]) -> (HermitianMatrix, f64) {
    let sum = HermitianMatrix::sum(effects).expect("nonempty");
    let d = sum.dim();
    let dev = operator_norm(&sum.sub(&HermitianMatrix::identity(d)));
    (sum, dev)
}

/// Checks positivity of every effect and `‖Σ − I‖ ≤ tol`.
pub fn is_povm(effects: &[HermitianMatrix], tol: f64) -> Result<PovmCheck> {
    check_dims(effects)?;
    let min_eigenvalues: Vec<f64> = effects.iter().map(HermitianMatrix::min_eigenvalue).collect();
    let (_, sum_deviation) = deviation_from_identity(effects);
    let mut violations: Vec<PovmViolation> = min_eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l < -tol)
        .map(|(index, &min_eigenvalue)| PovmViolation::NotPositive { index, min_eigenvalue })
        .collect();
    if sum_deviation > tol {
        violations.push(PovmViolation::SumNotIdentity { deviation: sum_deviation });
    }
    Ok(PovmCheck { valid: violations.is_empty(), min_eigenvalues, sum_deviation, violations })
}

/// Turns an almost-POVM into a POVM.
///
/// Requires PSD effects with `‖Σ A_i − I‖ < ε/2` and returns `B` with
/// `‖A_i − B_i‖ < ε`. If `Σ A_i ≤ I` the deficit `I − Σ A_i` is added to the
/// last effect. Otherwise every effect is first scaled by `1/(1 + ε/2)`, which
/// forces the sum below the identity, and then the deficit is added to the
/// last effect. Inputs that already sum to the identity are returned as is.
pub fn normalize_to_povm(effects: &[HermitianMatrix], eps: f64) -> Result<Povm> {
    check_dims(effects)?;
    if !(eps > 0.0) {
        return Err(Error::Contract(format!("ε must be positive, got {eps}")));
    }
    for (i, e) in effects.iter().enumerate() {
        let l = e.min_eigenvalue();
        if l < -TOL.povm {
            return Err(Error::Contract(format!("effect {i} is not positive (min eigenvalue {l:.3e})")));
        }
    }
    let (sum, dev) = deviation_from_identity(effects);
    if dev >= eps / 2.0 {
        return Err(Error::Contract(format!("‖Σ A_i − I‖ = {dev:.6e} is not below ε/2 = {:.6e}", eps / 2.0)));
    }
    if dev <= 1e-12 {
        return Ok(Povm::from_unchecked(effects.to_vec()));
    }

    let d = sum.dim();
    let (mut out, sum) = if sum.max_eigenvalue() <= 1.0 {
        (effects.to_vec(), sum)
    } else {
        let s = 1.0 / (1.0 + eps / 2.0);
        (effects.iter().map(|e| e.scale(s)).collect(), sum.scale(s))
    };
    let deficit = HermitianMatrix::identity(d).sub(&sum);
    out.last_mut().expect("nonempty").add_scaled(1.0, &deficit);
    Ok(Povm::from_unchecked(out))
}

/// Lifts a POVM on `C^d` to `C^d ⊕ C^extra`: effect `i` becomes
/// `A_i ⊕ I/n`, so compressing back to the first block returns `A_i`.
pub fn lift_povm_direct_sum(p: &Povm, extra_dim: usize) -> Result<Povm> {
    if extra_dim == 0 {
        return Err(validation("extra dimension must be at least 1"));
    }
    let fill = HermitianMatrix::scalar(extra_dim, 1.0 / p.len() as f64);
    Ok(Povm::from_unchecked(p.effects.iter().map(|e| e.direct_sum(&fill)).collect()))
}

/// `{I/n, ..., I/n}` on `C^d`.
pub fn uniform_povm(d: usize, n: usize) -> Povm {
    assert!(d > 0 && n > 0, "uniform POVM needs positive dimension and outcome count");
    Povm::from_unchecked(vec![HermitianMatrix::scalar(d, 1.0 / n as f64); n])
}

pub(crate) fn random_ginibre(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let cols: Vec<Vec<C64>> = (0..d)
        .map(|_| {
            (0..d)
                .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
                .collect()
        })
        .collect();
    CMatrix::from_columns(&cols)
}

/// `G G^*` for a complex Gaussian `G`.
pub(crate) fn random_psd(d: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    HermitianMatrix::identity(d).conjugate_by(&random_ginibre(d, rng))
}

/// Random POVM, deterministic in `seed`: `B_i = S^{-1/2} G_i G_i^* S^{-1/2}`
/// with `S = Σ G_i G_i^*`.
pub fn random_povm(d: usize, n: usize, seed: u64) -> Povm {
    assert!(d > 0 && n > 0, "random POVM needs positive dimension and outcome count");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_povm_from(d, n, &mut rng)
}

pub(crate) fn random_povm_from(d: usize, n: usize, rng: &mut ChaCha8Rng) -> Povm {
    loop {
        let raw: Vec<HermitianMatrix> = (0..n).map(|_| random_psd(d, rng)).collect();
        let s = HermitianMatrix::sum(&raw).expect("n >= 1");
        if s.min_eigenvalue() <= 1e-10 * s.max_eigenvalue().max(1.0) {
            continue;
        }
        let s_inv_half = s.psd_power(-0.5, 0.0);
        let mut effects: Vec<HermitianMatrix> = raw.iter().map(|g| g.sandwich(&s_inv_half)).collect();
        // absorb rounding so the sum is the identity to machine precision
        let sum = HermitianMatrix::sum(&effects).expect("n >= 1");
        let fix = HermitianMatrix::identity(d).sub(&sum);
        effects.last_mut().expect("n >= 1").add_scaled(1.0, &fix);
        return Povm::from_unchecked(effects);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn is_povm_examples() {
        let third = HermitianMatrix::scalar(2, 1.0 / 3.0);
        assert!(is_povm(&[third.clone(), third.clone(), third], 1e-9).unwrap().valid);

        let proj = [HermitianMatrix::diag(&[1.0, 0.0]), HermitianMatrix::diag(&[0.0, 1.0])];
        assert!(is_povm(&proj, 1e-9).unwrap().valid);

        let over = HermitianMatrix::scalar(2, 0.6);
        let check = is_povm(&[over.clone(), over], 1e-9).unwrap();
        assert!(!check.valid);
        assert!(matches!(check.violations[..], [PovmViolation::SumNotIdentity { deviation }] if (deviation - 0.2).abs() < 1e-12));

        let neg = [HermitianMatrix::diag(&[1.5, 0.0]), HermitianMatrix::diag(&[-0.5, 1.0])];
        let check = is_povm(&neg, 1e-9).unwrap();
        assert_eq!(check.violations, vec![PovmViolation::NotPositive { index: 1, min_eigenvalue: -0.5 }]);

        assert!(is_povm(&[HermitianMatrix::identity(2), HermitianMatrix::identity(3)], 1e-9).is_err());
        assert!(is_povm(&[], 1e-9).is_err());
    }

    #[test]
    fn normalize_fills_last_effect_when_sum_is_below_identity() {
        let a = HermitianMatrix::scalar(2, 0.49);
        let b = normalize_to_povm(&[a.clone(), a], 0.1).unwrap();
        assert!(b.effect(0).max_abs_diff(&HermitianMatrix::scalar(2, 0.49)) < 1e-15);
        assert!(b.effect(1).max_abs_diff(&HermitianMatrix::scalar(2, 0.51)) < 1e-15);
    }

    #[test]
    fn normalize_scales_then_fills_when_sum_exceeds_identity() {
        let b = normalize_to_povm(&[HermitianMatrix::scalar(3, 1.02)], 0.1).unwrap();
        assert!(b.effect(0).max_abs_diff(&HermitianMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn normalize_is_identity_on_exact_povms() {
        let p = random_povm(3, 4, 9);
        let q = normalize_to_povm(p.effects(), 0.05).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn normalize_rejects_violated_precondition() {
        let a = HermitianMatrix::scalar(2, 0.45);
        let err = normalize_to_povm(&[a.clone(), a], 0.1).unwrap_err();
        match err {
            Error::Contract(msg) => assert!(msg.contains("1.0000") && msg.contains("5.0000"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
        let neg = [HermitianMatrix::diag(&[-0.1, 0.5]), HermitianMatrix::diag(&[1.1, 0.5])];
        assert!(matches!(normalize_to_povm(&neg, 0.5), Err(Error::Contract(_))));
    }

    #[test]
    fn lift_examples() {
        let lifted = lift_povm_direct_sum(&uniform_povm(2, 1), 3).unwrap();
        assert_eq!(lifted.effects(), &[HermitianMatrix::identity(5)]);

        let proj = Povm::new(vec![HermitianMatrix::diag(&[1.0, 0.0]), HermitianMatrix::diag(&[0.0, 1.0])]).unwrap();
        let lifted = lift_povm_direct_sum(&proj, 1).unwrap();
        assert_eq!(lifted.effect(0), &HermitianMatrix::diag(&[1.0, 0.0, 0.5]));
        assert_eq!(lifted.effect(1), &HermitianMatrix::diag(&[0.0, 1.0, 0.5]));

        let p = random_povm(3, 3, 2);
        let lifted = lift_povm_direct_sum(&p, 2).unwrap();
        assert_eq!(lifted.compress(3), p.effects());
        assert!(is_povm(lifted.effects(), 1e-9).unwrap().valid);
        assert!(lift_povm_direct_sum(&p, 0).is_err());
    }

    #[test]
    fn uniform_examples() {
        assert_eq!(uniform_povm(2, 2).effects(), &[HermitianMatrix::scalar(2, 0.5), HermitianMatrix::scalar(2, 0.5)]);
        assert_eq!(uniform_povm(1, 3).effects(), &vec![HermitianMatrix::scalar(1, 1.0 / 3.0); 3][..]);
        assert!(is_povm(uniform_povm(4, 5).effects(), 1e-9).unwrap().valid);
    }

    #[test]
    fn random_examples() {
        for (d, n, seed) in [(1, 1, 0), (2, 3, 1), (4, 2, 2), (3, 5, 3)] {
            let p = random_povm(d, n, seed);
            assert!(is_povm(p.effects(), 1e-9).unwrap().valid, "{d} {n} {seed}");
            assert_eq!(p, random_povm(d, n, seed));
        }
        let single = random_povm(3, 1, 11);
        assert!(single.effect(0).max_abs_diff(&HermitianMatrix::identity(3)) < 1e-12);
        assert_ne!(random_povm(2, 2, 0), random_povm(2, 2, 1));
    }
}
