//! Nested-lattice Wyner-Ziv codec for the source `Y = X + Z₁` with decoder
//! side information `S = X + Z₂`.
//!
//! The encoder sends the coset of `Q_q(α₁Y + U)` in the coarse lattice; the
//! decoder computes `α₁·((I − U − α₁α₂S) mod Λ) + α₂S`. With `α₂` the
//! linear-estimation weight and `α₁` the source-coding weight, the residual
//! on non-wrapped blocks is `−(1−α₁²)·R − α₁·E_q` where
//! `R = (1−α₂)X − α₂Z₂ + Z₁` and `E_q` is the fine quantization error.

use crate::dither::{gaussian_at, DitherSource};
use crate::error::CodecError;
use crate::exec::map_indexed;
use crate::lattice::{Lattice, LatticeKind};
use crate::nested::NestedPair;
use crate::scalar::{dot, norm_sq, Moments, Scalar};

/// Absolute tolerance of the per-sample residual identity.
pub const IDENTITY_TOL: f64 = 1e-9;

fn positive(name: &'static str, value: f64) -> Result<f64, CodecError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CodecError::NonPositive { name, value })
    }
}

/// MMSE coefficients `(α₁, α₂)`:
/// `α₁ = √(1 − D/(N1 + P·N2/(P+N2)))`, `α₂ = P/(P+N2)`.
pub fn mmse_coefficients(p: f64, n1: f64, n2: f64, d: f64) -> Result<(f64, f64), CodecError> {
    let p = positive("P", p)?;
    let n1 = positive("N1", n1)?;
    let n2 = positive("N2", n2)?;
    let d = positive("D", d)?;
    let bound = n1 + p * n2 / (p + n2);
    if d > bound {
        return Err(CodecError::DistortionOutOfRange { d, bound });
    }
    Ok(((1.0 - d / bound).max(0.0).sqrt(), p / (p + n2)))
}

/// One `(P, N1, N2, D)` instance together with the lattice design.
#[derive(Clone, Debug, PartialEq)]
pub struct WzConfig {
    pub p: f64,
    pub n1: f64,
    pub n2: f64,
    pub d: f64,
    pub dim: usize,
    /// Coarse second-moment margin: the coarse lattice has
    /// `σ² = k²D ≥ gamma·σ²_resid`.
    pub gamma: f64,
    pub lattice: LatticeKind,
    k: u64,
    alpha1: f64,
    alpha2: f64,
}

impl WzConfig {
    pub fn new(p: f64, n1: f64, n2: f64, d: f64, dim: usize) -> Result<Self, CodecError> {
        let (alpha1, alpha2) = mmse_coefficients(p, n1, n2, d)?;
        let mut cfg = Self {
            p,
            n1,
            n2,
            d,
            dim,
            gamma: 1.0,
            lattice: LatticeKind::Cubic,
            k: 2,
            alpha1,
            alpha2,
        };
        cfg.k = cfg.derived_nesting();
        Ok(cfg)
    }

    /// Inflate the coarse lattice so its second moment is at least
    /// `gamma·σ²_resid`.
    pub fn with_margin(mut self, gamma: f64) -> Result<Self, CodecError> {
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(CodecError::InvalidMargin(gamma));
        }
        self.gamma = gamma;
        self.k = self.derived_nesting();
        Ok(self)
    }

    /// Override the derived nesting factor.
    pub fn with_nesting(mut self, k: u64) -> Self {
        self.k = k;
        self
    }

    pub fn with_lattice(mut self, kind: LatticeKind) -> Self {
        self.lattice = kind;
        self
    }

    // Smallest integer k >= 2 with k²·D >= gamma·σ²_resid.
    fn derived_nesting(&self) -> u64 {
        let ratio = (self.gamma * self.residual_variance() / self.d).sqrt();
        ((ratio - 1e-9).ceil() as u64).max(2)
    }

    /// `σ²_resid = N1 + P·N2/(P+N2)`.
    pub fn residual_variance(&self) -> f64 {
        self.n1 + self.p * self.n2 / (self.p + self.n2)
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn nesting_factor(&self) -> u64 {
        self.k
    }

    /// Realized coarse second moment `k²·D`.
    pub fn coarse_second_moment(&self) -> f64 {
        (self.k * self.k) as f64 * self.d
    }

    /// Quantization pair with fine `σ² = D` and coarse `σ² = k²·D`.
    pub fn build_pair<T: Scalar>(&self) -> Result<NestedPair<T>, CodecError> {
        let base: Lattice<T> = self.lattice.build(self.dim)?;
        let fine = base.scale_to_second_moment(T::lit(self.d))?;
        Ok(NestedPair::new(fine, self.k)?)
    }

    pub fn codec<T: Scalar>(&self) -> Result<WzCodec<T>, CodecError> {
        WzCodec::new(self.clone(), self.build_pair()?)
    }
}

/// Encoder output: the coset point and its integer index.
#[derive(Clone, Debug, PartialEq)]
pub struct WzEncoded<T> {
    pub point: Vec<T>,
    pub index: u128,
    /// Fine quantization error `(α₁Y + U) mod Λ_q`.
    pub quant_error: Vec<T>,
}

/// Ground-truth record of one encode/decode pass.
#[derive(Clone, Debug, PartialEq)]
pub struct WzTrace<T> {
    pub source: Vec<T>,
    pub side_info: Vec<T>,
    pub dither: Vec<T>,
    pub quant_error: Vec<T>,
    pub coset_point: Vec<T>,
    pub index: u128,
    pub reconstruction: Vec<T>,
    /// `(1−α₂)X − α₂Z₂ + Z₁`.
    pub residual: Vec<T>,
    pub wrapped: bool,
}

impl<T: Scalar> WzTrace<T> {
    /// Largest deviation from `Ŷ − Y = −(1−α₁²)·R − α₁·E_q`.
    pub fn identity_error(&self, alpha1: f64) -> f64 {
        let a1 = T::lit(alpha1);
        let c = T::one() - a1 * a1;
        self.reconstruction
            .iter()
            .zip(&self.source)
            .zip(self.residual.iter().zip(&self.quant_error))
            .map(|((&yh, &y), (&r, &e))| ((yh - y) - (-c * r - a1 * e)).abs().as_f64())
            .fold(0.0, f64::max)
    }
}

/// Wyner-Ziv encoder/decoder over a validated nested pair.
#[derive(Clone, Debug)]
pub struct WzCodec<T: Scalar> {
    cfg: WzConfig,
    pair: NestedPair<T>,
    alpha1: T,
    alpha2: T,
}

impl<T: Scalar> WzCodec<T> {
    /// Checks the pair has fine `σ² = D` and coarse `σ² ≥ σ²_resid`.
    pub fn new(cfg: WzConfig, pair: NestedPair<T>) -> Result<Self, CodecError> {
        if pair.dim() != cfg.dim {
            return Err(CodecError::MisScaledPair(format!(
                "pair dimension {} differs from configured {}",
                pair.dim(),
                cfg.dim
            )));
        }
        let fine = pair.fine().second_moment().as_f64();
        let tol = 1e-9_f64.max(T::epsilon().as_f64() * 16.0);
        if (fine - cfg.d).abs() > tol * cfg.d {
            return Err(CodecError::MisScaledPair(format!(
                "fine second moment {fine} differs from D = {}",
                cfg.d
            )));
        }
        let coarse = pair.coarse().second_moment().as_f64();
        let resid = cfg.residual_variance();
        if coarse < resid * (1.0 - tol) {
            return Err(CodecError::MisScaledPair(format!(
                "coarse second moment {coarse} below N1 + P*N2/(P+N2) = {resid}"
            )));
        }
        Ok(Self {
            alpha1: T::lit(cfg.alpha1),
            alpha2: T::lit(cfg.alpha2),
            cfg,
            pair,
        })
    }

    pub fn config(&self) -> &WzConfig {
        &self.cfg
    }

    pub fn pair(&self) -> &NestedPair<T> {
        &self.pair
    }

    fn check_len(&self, v: &[T]) -> Result<(), CodecError> {
        if v.len() != self.cfg.dim {
            return Err(crate::error::LatticeError::DimensionMismatch {
                expected: self.cfg.dim,
                got: v.len(),
            }
            .into());
        }
        Ok(())
    }

    /// `I = Q_q(α₁y + u) mod Λ`.
    pub fn encode(&self, y: &[T], u: &[T]) -> Result<WzEncoded<T>, CodecError> {
        self.check_len(y)?;
        self.check_len(u)?;
        let v: Vec<T> = y.iter().zip(u).map(|(&a, &b)| self.alpha1 * a + b).collect();
        let q = self.pair.fine().quantize(&v)?;
        let quant_error: Vec<T> = v.iter().zip(&q).map(|(&a, &b)| a - b).collect();
        let point = self.pair.coarse().modulo(&q)?;
        let index = self.pair.coset_index(&point)?;
        Ok(WzEncoded {
            point,
            index,
            quant_error,
        })
    }

    /// Coset point for a received index.
    pub fn point_of_index(&self, index: u128) -> Result<Vec<T>, CodecError> {
        Ok(self.pair.codeword_of_index(index)?)
    }

    /// `ŷ = α₁·((I − u − α₁α₂s) mod Λ) + α₂s`.
    pub fn decode(&self, coset_point: &[T], u: &[T], s: &[T]) -> Result<Vec<T>, CodecError> {
        self.check_len(coset_point)?;
        self.check_len(u)?;
        self.check_len(s)?;
        let scale = self.alpha1 * self.alpha2;
        let v: Vec<T> = coset_point
            .iter()
            .zip(u)
            .zip(s)
            .map(|((&i, &ui), &si)| i - ui - scale * si)
            .collect();
        let m = self.pair.coarse().modulo(&v)?;
        Ok(m.iter()
            .zip(s)
            .map(|(&mi, &si)| self.alpha1 * mi + self.alpha2 * si)
            .collect())
    }

    /// `(1−α₂)x − α₂z₂ + z₁`.
    pub fn residual(&self, x: &[T], z1: &[T], z2: &[T]) -> Vec<T> {
        let one_minus = T::one() - self.alpha2;
        x.iter()
            .zip(z1)
            .zip(z2)
            .map(|((&xi, &a), &b)| one_minus * xi - self.alpha2 * b + a)
            .collect()
    }

    /// Whether the coarse modulo at the decoder alters
    /// `α₁((1−α₂)x − α₂z₂ + z₁) − e_q`.
    pub fn detect_wrap(&self, x: &[T], z1: &[T], z2: &[T], u: &[T]) -> Result<bool, CodecError> {
        self.check_len(x)?;
        self.check_len(z1)?;
        self.check_len(z2)?;
        let y: Vec<T> = x.iter().zip(z1).map(|(&a, &b)| a + b).collect();
        let enc = self.encode(&y, u)?;
        self.wrap_term_wraps(&self.residual(x, z1, z2), &enc.quant_error)
    }

    fn wrap_term_wraps(&self, residual: &[T], quant_error: &[T]) -> Result<bool, CodecError> {
        let term: Vec<T> = residual
            .iter()
            .zip(quant_error)
            .map(|(&r, &e)| self.alpha1 * r - e)
            .collect();
        Ok(!self.pair.coarse().in_voronoi(&term)?)
    }

    /// Full encode, index transport and decode with ground truth attached.
    pub fn trace(&self, x: &[T], z1: &[T], z2: &[T], u: &[T]) -> Result<WzTrace<T>, CodecError> {
        self.check_len(x)?;
        self.check_len(z1)?;
        self.check_len(z2)?;
        let y: Vec<T> = x.iter().zip(z1).map(|(&a, &b)| a + b).collect();
        let s: Vec<T> = x.iter().zip(z2).map(|(&a, &b)| a + b).collect();
        let enc = self.encode(&y, u)?;
        let received = self.point_of_index(enc.index)?;
        let reconstruction = self.decode(&received, u, &s)?;
        let residual = self.residual(x, z1, z2);
        let wrapped = self.wrap_term_wraps(&residual, &enc.quant_error)?;
        Ok(WzTrace {
            source: y,
            side_info: s,
            dither: u.to_vec(),
            quant_error: enc.quant_error,
            coset_point: enc.point,
            index: enc.index,
            reconstruction,
            residual,
            wrapped,
        })
    }
}

/// Aggregate statistics of a Wyner-Ziv Monte Carlo run.
#[derive(Clone, Debug, PartialEq)]
pub struct WzReport {
    pub config: WzConfig,
    pub trials: u64,
    pub seed: u64,
    pub rate_bits: f64,
    /// `½log₂(σ²_resid/D)`.
    pub ideal_rate: f64,
    pub wraps: u64,
    pub wrap_rate: f64,
    /// `(1/n)E‖Ŷ−Y‖²` over all trials.
    pub distortion: f64,
    /// Same, over non-wrapped trials only.
    pub distortion_no_wrap: f64,
    pub distortion_no_wrap_se: f64,
    /// Empirical `(1/n)E‖R‖²` over non-wrapped trials.
    pub sigma2_resid_hat: f64,
    /// Empirical `(1/n)E‖E_q‖²` over non-wrapped trials.
    pub sigma2_eq_hat: f64,
    /// `(1−α₁²)²·σ̂²_resid + α₁²·σ̂²(E_q)`.
    pub moment_formula: f64,
    /// Mean and standard error of the per-trial gap between the distortion
    /// and the moment formula (the cross term `2α₁(1−α₁²)⟨R, E_q⟩/n`).
    pub moment_gap: f64,
    pub moment_gap_se: f64,
    /// Fraction of non-wrapped trials meeting the residual identity.
    pub identity_pass_rate: f64,
    pub max_identity_error: f64,
}

struct TrialStats {
    wrapped: bool,
    distortion: f64,
    resid_sq: f64,
    eq_sq: f64,
    cross: f64,
    identity_error: f64,
}

fn run_trial<T: Scalar>(codec: &WzCodec<T>, seed: u64, t: u64) -> Result<TrialStats, CodecError> {
    let cfg = codec.config();
    let n = cfg.dim;
    let x: Vec<T> = gaussian_at(seed, "X", t, n, cfg.p);
    let z1: Vec<T> = gaussian_at(seed, "Z1", t, n, cfg.n1);
    let z2: Vec<T> = gaussian_at(seed, "Z2", t, n, cfg.n2);
    let u = DitherSource::at(seed, "U", t).next(codec.pair().fine())?;
    let tr = codec.trace(&x, &z1, &z2, &u)?;
    let nf = n as f64;
    let err: Vec<T> = tr.reconstruction.iter().zip(&tr.source).map(|(&a, &b)| a - b).collect();
    Ok(TrialStats {
        wrapped: tr.wrapped,
        distortion: norm_sq(&err).as_f64() / nf,
        resid_sq: norm_sq(&tr.residual).as_f64() / nf,
        eq_sq: norm_sq(&tr.quant_error).as_f64() / nf,
        cross: dot(&tr.residual, &tr.quant_error).as_f64() / nf,
        identity_error: if tr.wrapped { 0.0 } else { tr.identity_error(cfg.alpha1) },
    })
}

/// Monte Carlo run of the codec on i.i.d. Gaussian `X, Z₁, Z₂`.
///
/// Trial `t` draws from streams `X`, `Z1`, `Z2`, `U` at counter `t`, so the
/// report does not depend on `workers`.
pub fn wz_simulate<T: Scalar>(
    cfg: &WzConfig,
    trials: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<WzReport, CodecError> {
    if trials == 0 {
        return Err(CodecError::NoTrials);
    }
    let codec: WzCodec<T> = cfg.codec()?;
    let stats = map_indexed(trials, workers, |t| run_trial(&codec, seed, t))?;

    let a1 = cfg.alpha1;
    let c = (1.0 - a1 * a1) * (1.0 - a1 * a1);
    let tol = IDENTITY_TOL.max(T::epsilon().as_f64() * 1e4);
    let mut all = Moments::default();
    let mut clean = Moments::default();
    let mut resid = Moments::default();
    let mut eq = Moments::default();
    let mut gap = Moments::default();
    let mut wraps = 0u64;
    let mut passes = 0u64;
    let mut max_identity_error = 0.0f64;
    for s in &stats {
        all.push(s.distortion);
        if s.wrapped {
            wraps += 1;
            continue;
        }
        clean.push(s.distortion);
        resid.push(s.resid_sq);
        eq.push(s.eq_sq);
        gap.push(2.0 * a1 * (1.0 - a1 * a1) * s.cross);
        max_identity_error = max_identity_error.max(s.identity_error);
        if s.identity_error <= tol {
            passes += 1;
        }
    }
    let kept = clean.count();
    Ok(WzReport {
        config: cfg.clone(),
        trials,
        seed,
        rate_bits: (cfg.nesting_factor() as f64).log2(),
        ideal_rate: 0.5 * (cfg.residual_variance() / cfg.d).log2(),
        wraps,
        wrap_rate: wraps as f64 / trials as f64,
        distortion: all.mean(),
        distortion_no_wrap: clean.mean(),
        distortion_no_wrap_se: clean.std_err(),
        sigma2_resid_hat: resid.mean(),
        sigma2_eq_hat: eq.mean(),
        moment_formula: c * resid.mean() + a1 * a1 * eq.mean(),
        moment_gap: gap.mean(),
        moment_gap_se: gap.std_err(),
        identity_pass_rate: if kept == 0 {
            f64::NAN
        } else {
            passes as f64 / kept as f64
        },
        max_identity_error,
    })
}

/// Empirical correlation coefficient between the side information `X+Z₂`
/// and `(1−α₂)X − α₂Z₂ + Z₁` over `trials` scalar draws.
pub fn side_info_correlation(p: f64, n1: f64, n2: f64, trials: u64, seed: u64) -> Result<f64, CodecError> {
    let p = positive("P", p)?;
    let n1 = positive("N1", n1)?;
    let n2 = positive("N2", n2)?;
    if trials < 2 {
        return Err(CodecError::NoTrials);
    }
    let a2 = p / (p + n2);
    const CHUNK: u64 = 4096;
    let chunks = trials.div_ceil(CHUNK);
    let parts = map_indexed(chunks, None, |c| {
        let len = CHUNK.min(trials - c * CHUNK) as usize;
        let x: Vec<f64> = gaussian_at(seed, "corr-X", c, len, p);
        let z1: Vec<f64> = gaussian_at(seed, "corr-Z1", c, len, n1);
        let z2: Vec<f64> = gaussian_at(seed, "corr-Z2", c, len, n2);
        let mut acc = [0.0f64; 5];
        for i in 0..len {
            let s = x[i] + z2[i];
            let r = (1.0 - a2) * x[i] - a2 * z2[i] + z1[i];
            acc[0] += s;
            acc[1] += r;
            acc[2] += s * s;
            acc[3] += r * r;
            acc[4] += s * r;
        }
        Ok::<_, CodecError>(acc)
    })?;
    let mut tot = [crate::scalar::CompensatedSum::default(); 5];
    for part in &parts {
        for (t, v) in tot.iter_mut().zip(part) {
            t.add(*v);
        }
    }
    let n = trials as f64;
    let [ms, mr, ss, rr, sr] = tot.map(|t| t.value() / n);
    let cov = sr - ms * mr;
    Ok(cov / ((ss - ms * ms) * (rr - mr * mr)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cfg() -> WzConfig {
        WzConfig::new(1.0, 1.0, 1.0, 0.5, 8).unwrap().with_margin(2.0).unwrap()
    }

    #[test]
    fn coefficients() {
        let (a1, a2) = mmse_coefficients(1.0, 1.0, 1.0, 0.5).unwrap();
        assert!((a1 - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((a1 - 0.816_496_580_927_726).abs() < 1e-12);
        assert_eq!(a2, 0.5);
        let (a1, _) = mmse_coefficients(1.0, 1.0, 1.0, 1.5).unwrap();
        assert_eq!(a1, 0.0);
        let (a1, a2) = mmse_coefficients(1.0, 2.0, 1e-12, 0.5).unwrap();
        assert!((a2 - 1.0).abs() < 1e-11);
        assert!((a1 - (1.0f64 - 0.25).sqrt()).abs() < 1e-11);
    }

    #[test]
    fn coefficient_range_errors() {
        match mmse_coefficients(1.0, 1.0, 1.0, 1.6) {
            Err(CodecError::DistortionOutOfRange { bound, .. }) => assert_eq!(bound, 1.5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            mmse_coefficients(1.0, 1.0, 1.0, -1.0),
            Err(CodecError::NonPositive { name: "D", .. })
        ));
    }

    #[test]
    fn nesting_factor_from_margin() {
        let base = WzConfig::new(1.0, 1.0, 1.0, 0.5, 8).unwrap();
        let ks: Vec<u64> = [1.0, 1.5, 2.0, 3.0, 4.0]
            .iter()
            .map(|&g| base.clone().with_margin(g).unwrap().nesting_factor())
            .collect();
        assert_eq!(ks, vec![2, 3, 3, 3, 4]);
        assert!(base.clone().with_margin(0.5).is_err());
    }

    #[test]
    fn origin_encodes_to_origin() {
        let codec: WzCodec<f64> = unit_cfg().codec().unwrap();
        let zero = vec![0.0; 8];
        let enc = codec.encode(&zero, &zero).unwrap();
        assert_eq!(enc.point, zero);
        assert_eq!(enc.index, 0);
    }

    #[test]
    fn scalar_hand_computed_instance() {
        // n = 1, D = 0.5: fine step s = √6, k = 3, coarse step 3√6.
        let cfg = WzConfig::new(1.0, 1.0, 1.0, 0.5, 1).unwrap().with_margin(2.0).unwrap();
        let codec: WzCodec<f64> = cfg.codec().unwrap();
        let s = 6f64.sqrt();
        let a1 = (2.0f64 / 3.0).sqrt();
        let y = 4.0;
        let u = 0.3;
        // α1·y + u = 3.566 → round(3.566/2.449) = 1 → fine point √6, already in coarse cell.
        let enc = codec.encode(&[y], &[u]).unwrap();
        assert!((enc.point[0] - s).abs() < 1e-12);
        assert!((enc.quant_error[0] - (a1 * y + u - s)).abs() < 1e-12);
        assert_eq!(enc.index, 1);
        // y = 9: α1·y + u = 7.648 → 3 fine steps → 3√6 ≡ 0 mod 3√6.
        let enc = codec.encode(&[9.0], &[u]).unwrap();
        assert!(enc.point[0].abs() < 1e-12);
    }

    #[test]
    fn two_forms_of_coset_point_agree() {
        let codec: WzCodec<f64> = unit_cfg().codec().unwrap();
        for t in 0..10_000u64 {
            let y: Vec<f64> = gaussian_at(3, "y", t, 8, 2.0);
            let u = DitherSource::at(3, "u", t).next(codec.pair().fine()).unwrap();
            let enc = codec.encode(&y, &u).unwrap();
            let alt: Vec<f64> = y
                .iter()
                .zip(&u)
                .zip(&enc.quant_error)
                .map(|((&a, &b), &e)| codec.alpha1 * a + b - e)
                .collect();
            let alt = codec.pair().coarse().modulo(&alt).unwrap();
            for (a, b) in alt.iter().zip(&enc.point) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_rate_decodes_to_side_estimate() {
        let cfg = WzConfig::new(1.0, 1.0, 1.0, 1.5, 4).unwrap();
        let codec: WzCodec<f64> = cfg.codec().unwrap();
        let s = vec![0.7, -1.2, 0.1, 2.0];
        let u = DitherSource::at(1, "U", 0).next(codec.pair().fine()).unwrap();
        let enc = codec.encode(&[3.0, 1.0, -2.0, 0.5], &u).unwrap();
        let yh = codec.decode(&enc.point, &u, &s).unwrap();
        for (a, b) in yh.iter().zip(&s) {
            assert!((a - 0.5 * b).abs() < 1e-15);
        }
    }

    #[test]
    fn near_noiseless_reconstruction() {
        let cfg = WzConfig::new(1.0, 1e-8, 1e-8, 1e-9, 4)
            .unwrap()
            .with_margin(4.0)
            .unwrap();
        let codec: WzCodec<f64> = cfg.codec().unwrap();
        let x = vec![0.4, -1.1, 0.9, 0.2];
        let zero = vec![0.0; 4];
        let u = DitherSource::at(2, "U", 0).next(codec.pair().fine()).unwrap();
        let tr = codec.trace(&x, &zero, &zero, &u).unwrap();
        assert!(!tr.wrapped);
        for (a, b) in tr.reconstruction.iter().zip(&x) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn identity_on_clean_trials() {
        let codec: WzCodec<f64> = unit_cfg().codec().unwrap();
        let mut clean = 0;
        for t in 0..2000u64 {
            let x: Vec<f64> = gaussian_at(8, "X", t, 8, 1.0);
            let z1: Vec<f64> = gaussian_at(8, "Z1", t, 8, 1.0);
            let z2: Vec<f64> = gaussian_at(8, "Z2", t, 8, 1.0);
            let u = DitherSource::at(8, "U", t).next(codec.pair().fine()).unwrap();
            let tr = codec.trace(&x, &z1, &z2, &u).unwrap();
            assert_eq!(tr.wrapped, codec.detect_wrap(&x, &z1, &z2, &u).unwrap());
            if !tr.wrapped {
                clean += 1;
                assert!(tr.identity_error(codec.config().alpha1()) < IDENTITY_TOL);
            }
        }
        assert!(clean > 1900);
    }

    #[test]
    fn wrap_detection_extremes() {
        let codec: WzCodec<f64> = unit_cfg().codec().unwrap();
        let zero = vec![0.0; 8];
        assert!(!codec.detect_wrap(&zero, &zero, &zero, &zero).unwrap());
        let big = vec![100.0; 8];
        assert!(codec.detect_wrap(&zero, &big, &zero, &zero).unwrap());
    }

    #[test]
    fn mis_scaled_pair_rejected() {
        let cfg = unit_cfg();
        let wrong_fine = NestedPair::new(Lattice::<f64>::integer(8).unwrap(), 3).unwrap();
        assert!(matches!(
            WzCodec::new(cfg.clone(), wrong_fine),
            Err(CodecError::MisScaledPair(_))
        ));
        let fine = Lattice::<f64>::integer(8).unwrap().scale_to_second_moment(0.5).unwrap();
        let k2 = NestedPair::new(fine.clone(), 2).unwrap();
        assert!(WzCodec::new(cfg.clone(), k2).is_ok());
        let cfg_tight = WzConfig::new(1.0, 3.0, 1.0, 0.5, 8).unwrap();
        assert!(matches!(
            WzCodec::new(cfg_tight, NestedPair::new(fine, 2).unwrap()),
            Err(CodecError::MisScaledPair(_))
        ));
    }

    #[test]
    fn simulation_is_deterministic() {
        let cfg = unit_cfg();
        let a = wz_simulate::<f64>(&cfg, 500, 42, Some(1)).unwrap();
        let b = wz_simulate::<f64>(&cfg, 500, 42, Some(3)).unwrap();
        assert_eq!(a, b);
        let c = wz_simulate::<f64>(&cfg, 500, 43, Some(1)).unwrap();
        assert_ne!(a.distortion, c.distortion);
    }

    #[test]
    fn generator_lattice_codec() {
        let cfg = WzConfig::new(1.0, 1.0, 1.0, 0.5, 8)
            .unwrap()
            .with_margin(2.0)
            .unwrap()
            .with_lattice(LatticeKind::E8);
        let rep = wz_simulate::<f64>(&cfg, 400, 5, None).unwrap();
        assert_eq!(rep.identity_pass_rate, 1.0);
        assert!(rep.wrap_rate < 0.05);
    }

    #[test]
    fn f32_codec_runs() {
        let rep = wz_simulate::<f32>(&unit_cfg(), 300, 1, None).unwrap();
        assert!(rep.identity_pass_rate > 0.99);
        assert!((rep.distortion_no_wrap - 0.5).abs() < 0.1);
    }
}
