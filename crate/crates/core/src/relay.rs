//! Block-Markov lattice compress-and-forward over the three-node Gaussian
//! relay channel `Y2 = X1 + Z2`, `Y3 = X1 + X2 + Z3`.
//!
//! In block `j` the source sends message `w(j)`; the relay forwards the
//! compression index `i(j−1)` of its previous observation and compresses
//! `Y2(j)` with the Wyner-Ziv quantizer at `α₁ = 1`. The destination first
//! decodes the relay codeword treating `X1 + Z3` as noise, strips `X2(j)`,
//! rebuilds `Ŷ2(j−1)` from the index and its own cleaned observation of
//! block `j−1`, and finally decodes `w(j−1)` from the MMSE combination of
//! both observations.

use sha2::{Digest, Sha256};

use crate::dither::{derive_seed, gaussian_at, stream_rng, DitherSource};
use crate::error::CodecError;
use crate::exec::map_indexed;
use crate::lattice::{Lattice, LatticeKind};
use crate::nested::NestedPair;
use crate::rates;
use crate::scalar::{norm_sq, Moments, Scalar};

/// What the destination does after a failed relay-codeword decode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PropagationMode {
    /// The wrong index corrupts the reconstruction and the cleaned side
    /// information of later blocks.
    #[default]
    Chained,
    /// Errors are counted, then a genie restores the true relay codeword so
    /// each block is evaluated in isolation.
    GenieReset,
}

impl PropagationMode {
    pub fn name(self) -> &'static str {
        match self {
            PropagationMode::Chained => "chained",
            PropagationMode::GenieReset => "genie",
        }
    }
}

impl std::str::FromStr for PropagationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chained" => Ok(PropagationMode::Chained),
            "genie" | "genie-reset" => Ok(PropagationMode::GenieReset),
            other => Err(format!("unknown mode '{other}' (expected chained or genie)")),
        }
    }
}

/// Relay channel instance and codebook design.
#[derive(Clone, Debug, PartialEq)]
pub struct CfConfig {
    pub p1: f64,
    pub p2: f64,
    pub n2: f64,
    pub n3: f64,
    /// Second moment of the compression quantizer.
    pub d: f64,
    pub dim: usize,
    /// Messages per run; each run spans `blocks + 1` channel blocks.
    pub blocks: usize,
    pub k1: u64,
    pub k2: u64,
    pub kq: u64,
    pub seed: u64,
    pub mode: PropagationMode,
    pub lattice: LatticeKind,
}

impl Default for CfConfig {
    fn default() -> Self {
        Self {
            p1: 1.0,
            p2: 1.0,
            n2: 1.0,
            n3: 1.0,
            d: 1.0,
            dim: 8,
            blocks: 50,
            k1: 2,
            k2: 2,
            kq: 2,
            seed: 42,
            mode: PropagationMode::Chained,
            lattice: LatticeKind::Cubic,
        }
    }
}

/// Outcome of [`CfConfig::validate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CfValidation {
    /// The ideal compression rate exceeds the ideal relay-link rate, i.e.
    /// `½log₂(1 + (N2 + P1N3/(P1+N3))/D) > ½log₂(1 + P2/(P1+N3))`.
    pub ideal_rate_infeasible: bool,
}

impl CfConfig {
    /// `α₂ = P1/(P1+N3)`.
    pub fn alpha2(&self) -> f64 {
        self.p1 / (self.p1 + self.n3)
    }

    /// Target coarse second moment of the compression pair,
    /// `N2 + P1·N3/(P1+N3) + D`.
    pub fn compression_target(&self) -> f64 {
        self.n2 + self.p1 * self.n3 / (self.p1 + self.n3) + self.d
    }

    /// Message rate `R = log₂k1`.
    pub fn rate(&self) -> f64 {
        (self.k1 as f64).log2()
    }

    /// Relay codebook rate `R′ = log₂k2`.
    pub fn rate_prime(&self) -> f64 {
        (self.k2 as f64).log2()
    }

    /// Compression rate `R̂ = log₂kq`.
    pub fn rate_hat(&self) -> f64 {
        (self.kq as f64).log2()
    }

    /// `R·B/(B+1)`.
    pub fn effective_rate(&self) -> f64 {
        self.rate() * self.blocks as f64 / (self.blocks as f64 + 1.0)
    }

    pub fn validate(&self) -> Result<CfValidation, CodecError> {
        for (name, v) in [
            ("P1", self.p1),
            ("P2", self.p2),
            ("N2", self.n2),
            ("N3", self.n3),
            ("D", self.d),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CodecError::NonPositive { name, value: v });
            }
        }
        if self.blocks < 2 {
            return Err(CodecError::TooFewBlocks(self.blocks));
        }
        for k in [self.k1, self.k2, self.kq] {
            if k < 2 {
                return Err(crate::error::LatticeError::NestingFactorTooSmall(k).into());
            }
        }
        if self.kq > self.k2 {
            return Err(CodecError::CompressionRateTooHigh {
                kq: self.kq,
                k2: self.k2,
            });
        }
        let coarse = (self.kq * self.kq) as f64 * self.d;
        let target = self.compression_target();
        if coarse < target * (1.0 - 1e-12) {
            return Err(CodecError::MisScaledPair(format!(
                "compression coarse second moment kq²·D = {coarse} below N2 + P1*N3/(P1+N3) + D = {target}"
            )));
        }
        let r_hat = rates::compression_rate(self.p1, self.n2, self.n3, self.d).unwrap_or(f64::INFINITY);
        let r_prime = rates::relay_rate_rprime(self.p1, self.p2, self.n3).unwrap_or(0.0);
        Ok(CfValidation {
            ideal_rate_infeasible: r_hat > r_prime,
        })
    }

    /// Build the three codebooks and decoder coefficients.
    pub fn codebooks<T: Scalar>(&self) -> Result<CfCodebooks<T>, CodecError> {
        self.validate()?;
        let base: Lattice<T> = self.lattice.build(self.dim)?;
        let c1 = NestedPair::new(
            base.scale_to_second_moment(T::lit(self.p1 / (self.k1 * self.k1) as f64))?,
            self.k1,
        )?;
        let c2 = NestedPair::new(
            base.scale_to_second_moment(T::lit(self.p2 / (self.k2 * self.k2) as f64))?,
            self.k2,
        )?;
        let cq = NestedPair::new(base.scale_to_second_moment(T::lit(self.d))?, self.kq)?;
        Ok(CfCodebooks {
            c1,
            c2,
            cq,
            alpha2: T::lit(self.alpha2()),
            beta: T::lit(relay_decode_scale(self.p1, self.p2, self.n3)),
            combiner: Combiner::new(self.p1, self.n2, self.n3, self.d),
        })
    }
}

/// MMSE scale for decoding the relay codeword with `X1 + Z3` as noise:
/// `β = P2/(P2 + P1 + N3)`.
pub fn relay_decode_scale(p1: f64, p2: f64, n3: f64) -> f64 {
    p2 / (p2 + p1 + n3)
}

/// Coherent combination of the direct observation (noise `N3`) and the
/// reconstructed relay observation (noise `N2 + D`), normalised to unit
/// signal gain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Combiner<T> {
    pub w_direct: T,
    pub w_relay: T,
    /// `1/N_eff = 1/N3 + 1/(N2+D)`.
    pub n_eff: T,
    /// `P1/(P1 + N_eff)`.
    pub alpha_c: T,
}

impl<T: Scalar> Combiner<T> {
    pub fn new(p1: f64, n2: f64, n3: f64, d: f64) -> Self {
        let a = 1.0 / n3;
        let b = 1.0 / (n2 + d);
        let n_eff = 1.0 / (a + b);
        Self {
            w_direct: T::lit(a * n_eff),
            w_relay: T::lit(b * n_eff),
            n_eff: T::lit(n_eff),
            alpha_c: T::lit(p1 / (p1 + n_eff)),
        }
    }

    /// Variance of the combined noise when the relay path carries
    /// `N2 + d_actual` instead of the design value.
    pub fn residual_variance(&self, n2: f64, n3: f64, d_actual: f64) -> f64 {
        let (a, b) = (self.w_direct.as_f64(), self.w_relay.as_f64());
        a * a * n3 + b * b * (n2 + d_actual)
    }

    pub fn combine(&self, y3_clean: &[T], y2_hat: &[T]) -> Vec<T> {
        y3_clean
            .iter()
            .zip(y2_hat)
            .map(|(&a, &b)| self.w_direct * a + self.w_relay * b)
            .collect()
    }
}

/// Codebooks `C1`, `C2`, `Cq` and the decoder coefficients of one instance.
#[derive(Clone, Debug)]
pub struct CfCodebooks<T: Scalar> {
    pub c1: NestedPair<T>,
    pub c2: NestedPair<T>,
    pub cq: NestedPair<T>,
    pub alpha2: T,
    pub beta: T,
    pub combiner: Combiner<T>,
}

fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// Dithered codeword `(t1 + u1) mod Λ1` for message `w`; `u1` is uniform
/// over the coarse cell, so `X1` is uniform there whatever `w` is.
pub fn tx_encode<T: Scalar>(c1: &NestedPair<T>, w: u128, u1: &[T]) -> Result<Vec<T>, CodecError> {
    if w >= c1.codebook_size() {
        return Err(CodecError::MessageOutOfRange {
            w,
            size: c1.codebook_size(),
        });
    }
    let t1 = c1.codeword_of_index(w)?;
    Ok(c1.coarse().modulo(&add(&t1, u1))?)
}

/// Relay quantizer output.
#[derive(Clone, Debug, PartialEq)]
pub struct Compressed<T> {
    pub point: Vec<T>,
    pub index: u128,
    /// `(y2 + uq) mod Λq`.
    pub quant_error: Vec<T>,
}

/// `I = Q_q(y2 + uq) mod Λ`, with no source-side scaling.
pub fn relay_compress<T: Scalar>(cq: &NestedPair<T>, y2: &[T], uq: &[T]) -> Result<Compressed<T>, CodecError> {
    let v = add(y2, uq);
    let q = cq.fine().quantize(&v)?;
    let point = cq.coarse().modulo(&q)?;
    let index = cq.coset_index(&point)?;
    Ok(Compressed {
        quant_error: sub(&v, &q),
        point,
        index,
    })
}

/// `(t2 + u2) mod Λ2` where `t2` carries compression index `i` through the
/// identity embedding.
pub fn relay_encode<T: Scalar>(c2: &NestedPair<T>, i: u128, u2: &[T]) -> Result<Vec<T>, CodecError> {
    if i >= c2.codebook_size() {
        return Err(CodecError::RelayIndexOutOfRange {
            index: i,
            size: c2.codebook_size(),
        });
    }
    let t2 = c2.codeword_of_index(i)?;
    Ok(c2.coarse().modulo(&add(&t2, u2))?)
}

/// `t̂2 = Q_c2(β·y3 − u2) mod Λ2`; returns the codeword and its index.
pub fn dest_decode_relay<T: Scalar>(
    c2: &NestedPair<T>,
    y3: &[T],
    u2: &[T],
    beta: T,
) -> Result<(Vec<T>, u128), CodecError> {
    decode_codeword(c2, y3, u2, beta)
}

fn decode_codeword<T: Scalar>(pair: &NestedPair<T>, y: &[T], u: &[T], scale: T) -> Result<(Vec<T>, u128), CodecError> {
    let v: Vec<T> = y.iter().zip(u).map(|(&a, &b)| scale * a - b).collect();
    let q = pair.fine().quantize(&v)?;
    let t = pair.coarse().modulo(&q)?;
    let idx = pair.coset_index(&t)?;
    Ok((t, idx))
}

/// `Ŷ2 = ((I − uq − α₂·y3′) mod Λ) + α₂·y3′`, equal to `X1 + Z2 − E_q`
/// when nothing wraps.
pub fn dest_reconstruct<T: Scalar>(
    cq: &NestedPair<T>,
    coset_point: &[T],
    uq: &[T],
    y3_prev_clean: &[T],
    alpha2: T,
) -> Result<Vec<T>, CodecError> {
    let v: Vec<T> = coset_point
        .iter()
        .zip(uq)
        .zip(y3_prev_clean)
        .map(|((&i, &u), &s)| i - u - alpha2 * s)
        .collect();
    let m = cq.coarse().modulo(&v)?;
    Ok(m.iter().zip(y3_prev_clean).map(|(&a, &s)| a + alpha2 * s).collect())
}

/// Combine both observations and decode the message; returns the message
/// index and the combined observation.
pub fn dest_combine_decode<T: Scalar>(
    c1: &NestedPair<T>,
    y3_clean: &[T],
    y2_hat: &[T],
    u1: &[T],
    combiner: &Combiner<T>,
) -> Result<(u128, Vec<T>), CodecError> {
    let y = combiner.combine(y3_clean, y2_hat);
    let (_, w) = decode_codeword(c1, &y, u1, combiner.alpha_c)?;
    Ok((w, y))
}

/// Counters and moments from one block-Markov run.
#[derive(Clone, Debug, Default)]
pub struct CfRunStats {
    pub messages: u64,
    pub msg_errors: u64,
    pub t2_decodes: u64,
    pub t2_errors: u64,
    pub compressions: u64,
    pub wraps: u64,
    pub power1: Moments,
    pub power2: Moments,
    pub eq_moment: Moments,
    /// Per-coordinate squared residual `(y_comb − X1)²` on blocks with no
    /// wrap and correct relay decodes.
    pub comb_residual: Moments,
    pub hash: [u8; 32],
}

struct PrevBlock<T> {
    w: u128,
    x1: Vec<T>,
    u1: Vec<T>,
    uq: Vec<T>,
    y3_clean: Vec<T>,
    wrapped: bool,
    clean_ok: bool,
}

/// One run of `blocks + 1` channel blocks carrying `blocks` messages.
pub fn simulate_cf_run<T: Scalar>(
    cfg: &CfConfig,
    books: &CfCodebooks<T>,
    run_seed: u64,
) -> Result<CfRunStats, CodecError> {
    use rand::Rng;

    let n = cfg.dim;
    let nf = n as f64;
    let genie = cfg.mode == PropagationMode::GenieReset;
    let mut st = CfRunStats::default();
    let mut hasher = Sha256::new();
    let mut relay_index: u128 = 0;
    let mut prev: Option<PrevBlock<T>> = None;

    for j in 1..=cfg.blocks as u64 + 1 {
        let carries_message = j <= cfg.blocks as u64;
        let w = if carries_message {
            stream_rng(run_seed, "W", j).random_range(0..books.c1.codebook_size())
        } else {
            0
        };
        let u1 = DitherSource::at(run_seed, "U1", j).next(books.c1.coarse())?;
        let u2 = DitherSource::at(run_seed, "U2", j).next(books.c2.coarse())?;
        let uq = DitherSource::at(run_seed, "Uq", j).next(books.cq.fine())?;
        let z2: Vec<T> = gaussian_at(run_seed, "Z2", j, n, cfg.n2);
        let z3: Vec<T> = gaussian_at(run_seed, "Z3", j, n, cfg.n3);

        let x1 = tx_encode(&books.c1, w, &u1)?;
        let x2 = relay_encode(&books.c2, relay_index, &u2)?;
        st.power1.push(norm_sq(&x1).as_f64() / nf);
        st.power2.push(norm_sq(&x2).as_f64() / nf);
        let y2 = add(&x1, &z2);
        let y3 = add(&add(&x1, &x2), &z3);

        // Destination: relay codeword of block j carries i(j−1); i(0) = 0 is known.
        let (used_index, t2_ok) = if j == 1 {
            (relay_index, true)
        } else {
            let (_, idx) = dest_decode_relay(&books.c2, &y3, &u2, books.beta)?;
            st.t2_decodes += 1;
            let ok = idx == relay_index;
            if !ok {
                st.t2_errors += 1;
            }
            (if genie { relay_index } else { idx }, ok)
        };
        let x2_hat = if used_index == relay_index {
            x2.clone()
        } else {
            relay_encode(&books.c2, used_index.min(books.c2.codebook_size() - 1), &u2)?
        };
        let y3_clean = sub(&y3, &x2_hat);

        let mut decoded = u128::MAX;
        if let Some(p) = prev.take() {
            // Î(j−1) from the decoded relay index; the identity embedding
            // maps it back to a compression index when it fits.
            let i_hat = used_index;
            let y2_hat = if i_hat < books.cq.codebook_size() {
                let point = books.cq.codeword_of_index(i_hat)?;
                dest_reconstruct(&books.cq, &point, &p.uq, &p.y3_clean, books.alpha2)?
            } else {
                p.y3_clean.clone()
            };
            let (w_hat, y_comb) = dest_combine_decode(&books.c1, &p.y3_clean, &y2_hat, &p.u1, &books.combiner)?;
            decoded = w_hat;
            st.messages += 1;
            if w_hat != p.w {
                st.msg_errors += 1;
            }
            if !p.wrapped && p.clean_ok && t2_ok {
                for (&a, &b) in y_comb.iter().zip(&p.x1) {
                    let r = (a - b).as_f64();
                    st.comb_residual.push(r * r);
                }
            }
        }

        let mut wrapped = false;
        if carries_message {
            let comp = relay_compress(&books.cq, &y2, &uq)?;
            st.compressions += 1;
            st.eq_moment.push(norm_sq(&comp.quant_error).as_f64() / nf);
            // (1−α₂)X1 − α₂Z3 + Z2 − E_q must stay inside the coarse cell.
            let a2 = books.alpha2;
            let term: Vec<T> = x1
                .iter()
                .zip(&z3)
                .zip(z2.iter().zip(&comp.quant_error))
                .map(|((&x, &zz3), (&zz2, &e))| (T::one() - a2) * x - a2 * zz3 + zz2 - e)
                .collect();
            wrapped = !books.cq.coarse().in_voronoi(&term)?;
            if wrapped {
                st.wraps += 1;
            }
            relay_index = comp.index;
            prev = Some(PrevBlock {
                w,
                x1: x1.clone(),
                u1,
                uq,
                y3_clean,
                wrapped,
                clean_ok: t2_ok,
            });
        }

        hasher.update(j.to_le_bytes());
        hasher.update(w.to_le_bytes());
        hasher.update(decoded.to_le_bytes());
        hasher.update([t2_ok as u8, wrapped as u8]);
    }
    st.hash = hasher.finalize().into();
    Ok(st)
}

/// Aggregate over independent runs.
#[derive(Clone, Debug, PartialEq)]
pub struct CfReport {
    pub config: CfConfig,
    pub runs: u64,
    pub validation: CfValidation,
    pub r_eff: f64,
    pub t2_err: f64,
    pub wrap_rate: f64,
    pub msg_err: f64,
    pub msg_errors: u64,
    pub messages: u64,
    pub power1: f64,
    pub power2: f64,
    pub power1_se: f64,
    pub power2_se: f64,
    pub power_samples: u64,
    /// Measured second moment of the compression error.
    pub eq_second_moment: f64,
    /// Per-coordinate variance of `y_comb − X1` on clean blocks.
    pub comb_residual_var: f64,
    pub comb_residual_se: f64,
    /// Predicted variance of `y_comb − X1` with the measured `E_q` moment.
    pub comb_residual_pred: f64,
    pub n_eff: f64,
    /// Hex SHA-256 over every run's decoded sequence.
    pub hash: String,
}

/// Run `runs` independent block-Markov simulations; run `r` derives its
/// streams from `(cfg.seed, r)`, so the report is independent of `workers`.
pub fn simulate_cf<T: Scalar>(cfg: &CfConfig, runs: u64, workers: Option<usize>) -> Result<CfReport, CodecError> {
    if runs == 0 {
        return Err(CodecError::NoTrials);
    }
    let validation = cfg.validate()?;
    let books: CfCodebooks<T> = cfg.codebooks()?;
    let per_run = map_indexed(runs, workers, |r| {
        simulate_cf_run(cfg, &books, derive_seed(cfg.seed, "cf-run", r))
    })?;

    let mut tot = CfRunStats::default();
    let mut hasher = Sha256::new();
    for s in &per_run {
        tot.messages += s.messages;
        tot.msg_errors += s.msg_errors;
        tot.t2_decodes += s.t2_decodes;
        tot.t2_errors += s.t2_errors;
        tot.compressions += s.compressions;
        tot.wraps += s.wraps;
        hasher.update(s.hash);
    }
    let merge = |f: fn(&CfRunStats) -> &Moments| {
        let mut m = Moments::default();
        for s in &per_run {
            m = m.merge(f(s));
        }
        m
    };
    let power1 = merge(|s| &s.power1);
    let power2 = merge(|s| &s.power2);
    let eq = merge(|s| &s.eq_moment);
    let comb = merge(|s| &s.comb_residual);
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(CfReport {
        config: cfg.clone(),
        runs,
        validation,
        r_eff: cfg.effective_rate(),
        t2_err: ratio(tot.t2_errors, tot.t2_decodes),
        wrap_rate: ratio(tot.wraps, tot.compressions),
        msg_err: ratio(tot.msg_errors, tot.messages),
        msg_errors: tot.msg_errors,
        messages: tot.messages,
        power1: power1.mean(),
        power2: power2.mean(),
        power1_se: power1.std_err(),
        power2_se: power2.std_err(),
        power_samples: power1.count(),
        eq_second_moment: eq.mean(),
        comb_residual_var: comb.mean(),
        comb_residual_se: comb.std_err(),
        comb_residual_pred: books.combiner.residual_variance(cfg.n2, cfg.n3, eq.mean()),
        n_eff: books.combiner.n_eff.as_f64(),
        hash: hex::encode(hasher.finalize()),
    })
}
