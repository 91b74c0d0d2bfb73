//! SINRs, achievable rates and the secrecy objective of a candidate design.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelSet;
use crate::error::{invalid, Result};
use crate::numerics::{ComplexMatrix, ComplexVector, C64, ONE};

/// IRS phase configuration.
///
/// Stores the physical phase shifts `θ_n` (reflection matrix
/// `Φ = diag(e^{jθ_n})`). The optimization vector `v` is the column vector
/// with `v^H = [e^{jθ_1}, ..., e^{jθ_N}]`, so `h_r^H Φ H_ar = v^H diag(h_r^H) H_ar`,
/// and the extended vector is `ṽ = [v; 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectVector {
    pub phases: Vec<f64>,
}

impl ReflectVector {
    pub fn from_phases(phases: Vec<f64>) -> Self {
        Self { phases }
    }

    pub fn zero_phases(n: usize) -> Self {
        Self {
            phases: vec![0.0; n],
        }
    }

    /// Builds the configuration whose vector `v` has entry phases `angles`.
    pub fn from_vector_angles(angles: impl IntoIterator<Item = f64>) -> Self {
        Self {
            phases: angles.into_iter().map(|a| -a).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn v(&self) -> ComplexVector {
        ComplexVector::from_iterator(
            self.len(),
            self.phases.iter().map(|t| C64::from_polar(1.0, -t)),
        )
    }

    /// `ṽ = [v; 1]`.
    pub fn extended(&self) -> ComplexVector {
        let n = self.len();
        ComplexVector::from_fn(n + 1, |i, _| {
            if i < n {
                C64::from_polar(1.0, -self.phases[i])
            } else {
                ONE
            }
        })
    }

    /// Reflection coefficients `e^{jθ_n}` (the diagonal of Φ).
    pub fn reflection_coefficients(&self) -> ComplexVector {
        ComplexVector::from_iterator(
            self.len(),
            self.phases.iter().map(|t| C64::from_polar(1.0, *t)),
        )
    }
}

/// Extended vector that switches the reflected path off: `[0, ..., 0, 1]`.
pub fn direct_only_extended(n: usize) -> ComplexVector {
    ComplexVector::from_fn(n + 1, |i, _| if i == n { ONE } else { C64::new(0.0, 0.0) })
}

/// Beamforming vector `f1` and jamming (artificial-noise) vector `f2`.
#[derive(Clone, Debug, PartialEq)]
pub struct TxSolution {
    pub f1: ComplexVector,
    pub f2: ComplexVector,
}

impl TxSolution {
    pub fn zeros(m: usize) -> Self {
        Self {
            f1: ComplexVector::zeros(m),
            f2: ComplexVector::zeros(m),
        }
    }

    pub fn power(&self) -> f64 {
        self.f1.norm_squared() + self.f2.norm_squared()
    }

    /// Scales both vectors down if the total power exceeds `p_max`.
    pub fn clamp_power(mut self, p_max: f64) -> Self {
        let p = self.power();
        if p > p_max && p > 0.0 {
            let s = C64::new((p_max / p).sqrt(), 0.0);
            self.f1 *= s;
            self.f2 *= s;
        }
        self
    }
}

/// `γ0 |ṽ^H H f1|^2 / (γ0 |ṽ^H H f2|^2 + 1)`.
pub fn sinr(
    composite: &ComplexMatrix,
    f1: &ComplexVector,
    f2: &ComplexVector,
    v_ext: &ComplexVector,
    gamma0: f64,
) -> f64 {
    let eff = composite.tr_mul(&v_ext.conjugate()); // H^T conj(ṽ) = conj(H^H ṽ)
    let s = eff.dot(f1).norm_sqr();
    let j = eff.dot(f2).norm_sqr();
    gamma0 * s / (gamma0 * j + 1.0)
}

pub fn rate_bits(sinr: f64) -> f64 {
    sinr.ln_1p() / std::f64::consts::LN_2
}

#[derive(Clone, Debug, PartialEq)]
pub struct SecrecyValue {
    /// `log2(1+γ_b) - max_k log2(1+γ_e_k)`.
    pub raw: f64,
    /// `max(raw, 0)`.
    pub clamped: f64,
    pub sinr_bob: f64,
    pub sinr_eves: Vec<f64>,
}

pub fn secrecy_from_extended(
    channels: &ChannelSet,
    tx: &TxSolution,
    v_ext: &ComplexVector,
    gamma0: f64,
) -> SecrecyValue {
    let sinr_bob = sinr(&channels.composite_b, &tx.f1, &tx.f2, v_ext, gamma0);
    let sinr_eves: Vec<f64> = channels
        .composite_e
        .iter()
        .map(|h| sinr(h, &tx.f1, &tx.f2, v_ext, gamma0))
        .collect();
    let worst = sinr_eves.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw = rate_bits(sinr_bob) - rate_bits(worst);
    SecrecyValue {
        raw,
        clamped: raw.max(0.0),
        sinr_bob,
        sinr_eves,
    }
}

/// Secrecy objective of `(f1, f2, v)`.
pub fn secrecy_objective(
    channels: &ChannelSet,
    tx: &TxSolution,
    refl: &ReflectVector,
    gamma0: f64,
) -> Result<SecrecyValue> {
    check_dims(channels, tx, refl.len() + 1)?;
    Ok(secrecy_from_extended(
        channels,
        tx,
        &refl.extended(),
        gamma0,
    ))
}

pub(crate) fn check_dims(channels: &ChannelSet, tx: &TxSolution, ext_len: usize) -> Result<()> {
    if tx.f1.len() != channels.m() || tx.f2.len() != channels.m() {
        return invalid(format!(
            "transmit vectors must have M = {} entries",
            channels.m()
        ));
    }
    if ext_len != channels.n() + 1 {
        return invalid(format!(
            "reflect vector must have N = {} entries",
            channels.n()
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{cn_matrix, cn_vector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_set(m: usize, n: usize, k: usize, rng: &mut ChaCha8Rng) -> ChannelSet {
        ChannelSet::from_parts(
            cn_matrix(n, m, rng),
            cn_vector(m, rng),
            (0..k).map(|_| cn_vector(m, rng)).collect(),
            cn_vector(n, rng),
            (0..k).map(|_| cn_vector(n, rng)).collect(),
        )
        .unwrap()
    }

    fn scalar_composite(g: f64) -> ComplexMatrix {
        // N = 1 with a zero reflected path; only the direct entry matters.
        ComplexMatrix::from_row_slice(2, 1, &[C64::new(0.0, 0.0), C64::new(g, 0.0)])
    }

    #[test]
    fn sinr_examples() {
        let v = ComplexVector::from_element(2, ONE);
        let h = scalar_composite(2.0);
        let f1 = ComplexVector::from_element(1, ONE);
        let zero = ComplexVector::zeros(1);
        assert!((sinr(&h, &f1, &zero, &v, 1.0) - 4.0).abs() < 1e-15);
        let f2 = ComplexVector::from_element(1, C64::new(0.5, 0.0));
        assert!((sinr(&h, &f1, &f2, &v, 1.0) - 2.0).abs() < 1e-15);
        assert_eq!(sinr(&h, &zero, &f2, &v, 1.0), 0.0);
    }

    #[test]
    fn identical_channels_give_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let base = random_set(3, 4, 1, &mut rng);
        let same = ChannelSet::from_parts(
            base.h_ar.clone(),
            base.h_ab.clone(),
            vec![base.h_ab.clone()],
            base.h_rb.clone(),
            vec![base.h_rb.clone()],
        )
        .unwrap();
        let tx = TxSolution {
            f1: cn_vector(3, &mut rng),
            f2: ComplexVector::zeros(3),
        };
        let val = secrecy_objective(&same, &tx, &ReflectVector::zero_phases(4), 10.0).unwrap();
        assert!(val.raw.abs() < 1e-12);
    }

    #[test]
    fn log_difference_example() {
        // γ_b = 3 and γ_e = 1 give log2(4) - log2(2) = 1.
        assert!((rate_bits(3.0) - rate_bits(1.0) - 1.0).abs() < 1e-15);
        let h_b = scalar_composite(3f64.sqrt());
        let h_e = scalar_composite(1.0);
        let set = ChannelSet {
            h_ar: ComplexMatrix::zeros(1, 1),
            h_ab: ComplexVector::zeros(1),
            h_ae: vec![ComplexVector::zeros(1)],
            h_rb: ComplexVector::zeros(1),
            h_re: vec![ComplexVector::zeros(1)],
            composite_b: h_b,
            composite_e: vec![h_e],
        };
        let tx = TxSolution {
            f1: ComplexVector::from_element(1, ONE),
            f2: ComplexVector::zeros(1),
        };
        let val = secrecy_objective(&set, &tx, &ReflectVector::zero_phases(1), 1.0).unwrap();
        assert!((val.raw - 1.0).abs() < 1e-14);
        assert!((val.clamped - 1.0).abs() < 1e-14);
    }

    #[test]
    fn matches_signal_model_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let (m, n, k) = (3, 5, 2);
            let set = random_set(m, n, k, &mut rng);
            let tx = TxSolution {
                f1: cn_vector(m, &mut rng),
                f2: cn_vector(m, &mut rng),
            };
            let refl =
                ReflectVector::from_phases((0..n).map(|_| rng.random_range(0.0..6.3)).collect());
            let gamma0 = 2.5;
            let phi = ComplexMatrix::from_diagonal(&refl.reflection_coefficients());
            let direct_sinr = |h_a: &ComplexVector, h_r: &ComplexVector| {
                let row = h_a.adjoint() + h_r.adjoint() * &phi * &set.h_ar;
                let s = (&row * &tx.f1)[(0, 0)].norm_sqr();
                let j = (&row * &tx.f2)[(0, 0)].norm_sqr();
                gamma0 * s / (gamma0 * j + 1.0)
            };
            let rb = (1.0 + direct_sinr(&set.h_ab, &set.h_rb)).log2();
            let re = (0..k)
                .map(|i| (1.0 + direct_sinr(&set.h_ae[i], &set.h_re[i])).log2())
                .fold(f64::NEG_INFINITY, f64::max);
            let val = secrecy_objective(&set, &tx, &refl, gamma0).unwrap();
            assert!((val.raw - (rb - re)).abs() < 1e-10);
            assert_eq!(val.clamped, val.raw.max(0.0));
        }
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = random_set(2, 3, 1, &mut rng);
        let tx = TxSolution::zeros(3);
        assert!(secrecy_objective(&set, &tx, &ReflectVector::zero_phases(3), 1.0).is_err());
        assert!(secrecy_objective(
            &set,
            &TxSolution::zeros(2),
            &ReflectVector::zero_phases(2),
            1.0
        )
        .is_err());
    }

    #[test]
    fn extended_vector_layout() {
        let r = ReflectVector::from_phases(vec![0.3, -1.2]);
        let e = r.extended();
        assert_eq!(e.len(), 3);
        assert_eq!(e[2], ONE);
        for n in 0..2 {
            assert!((e[n].norm() - 1.0).abs() < 1e-15);
            assert!((e[n] - C64::from_polar(1.0, -r.phases[n])).norm() < 1e-15);
        }
        let back = ReflectVector::from_vector_angles(e.iter().take(2).map(|z| z.arg()));
        assert!((back.phases[0] - 0.3).abs() < 1e-15 && (back.phases[1] + 1.2).abs() < 1e-15);
        let d = direct_only_extended(2);
        assert_eq!(d.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn global_rotation_of_extended_vector(seed in any::<u64>(), rot in 0.0f64..6.3) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let set = random_set(3, 4, 2, &mut rng);
                let tx = TxSolution { f1: cn_vector(3, &mut rng), f2: cn_vector(3, &mut rng) };
                let v = ReflectVector::from_phases((0..4).map(|_| rng.random_range(0.0..6.3)).collect()).extended();
                let rotated = &v * C64::from_polar(1.0, rot);
                for h in std::iter::once(&set.composite_b).chain(&set.composite_e) {
                    let a = sinr(h, &tx.f1, &tx.f2, &v, 3.0);
                    let b = sinr(h, &tx.f1, &tx.f2, &rotated, 3.0);
                    prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
                }
            }

            #[test]
            fn scaling_signal_increases_all_sinrs(seed in any::<u64>(), alpha in 1.01f64..10.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let set = random_set(3, 4, 2, &mut rng);
                let tx = TxSolution { f1: cn_vector(3, &mut rng), f2: cn_vector(3, &mut rng) };
                let scaled = TxSolution { f1: &tx.f1 * C64::new(alpha, 0.0), f2: tx.f2.clone() };
                let v = ReflectVector::zero_phases(4);
                let a = secrecy_objective(&set, &tx, &v, 2.0).unwrap();
                let b = secrecy_objective(&set, &scaled, &v, 2.0).unwrap();
                prop_assert!(b.sinr_bob > a.sinr_bob);
                for (x, y) in a.sinr_eves.iter().zip(&b.sinr_eves) {
                    prop_assert!(y > x);
                }
            }

            #[test]
            fn common_phase_of_each_beam_is_irrelevant(seed in any::<u64>(), p1 in 0.0f64..6.3, p2 in 0.0f64..6.3) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let set = random_set(3, 4, 2, &mut rng);
                let tx = TxSolution { f1: cn_vector(3, &mut rng), f2: cn_vector(3, &mut rng) };
                let rot = TxSolution {
                    f1: &tx.f1 * C64::from_polar(1.0, p1),
                    f2: &tx.f2 * C64::from_polar(1.0, p2),
                };
                let v = ReflectVector::from_phases(vec![0.1, 0.2, 0.3, 0.4]);
                let a = secrecy_objective(&set, &tx, &v, 2.0).unwrap().raw;
                let b = secrecy_objective(&set, &rot, &v, 2.0).unwrap().raw;
                prop_assert!((a - b).abs() <= 1e-10);
            }
        }
    }
}
