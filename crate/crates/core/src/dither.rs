//! Counter-addressed random streams, dithers and Gaussian noise.
//!
//! Every random vector in the crate is drawn from a generator keyed by
//! `(master seed, stream tag, counter)`. The key is hashed with SHA-256 into
//! a ChaCha seed, so any draw can be reproduced in isolation and results do
//! not depend on the order in which trials are executed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::LatticeError;
use crate::lattice::{Basis, Lattice};
use crate::scalar::{norm_sq, Moments, Scalar};

/// Generator for the `(seed, stream, counter)` key.
pub fn stream_rng(seed: u64, stream: &str, counter: u64) -> ChaCha12Rng {
    let mut h = Sha256::new();
    h.update(b"latcf-stream-v1");
    h.update(seed.to_le_bytes());
    h.update((stream.len() as u64).to_le_bytes());
    h.update(stream.as_bytes());
    h.update(counter.to_le_bytes());
    let digest: [u8; 32] = h.finalize().into();
    ChaCha12Rng::from_seed(digest)
}

/// Derive a child seed, e.g. one per Monte Carlo run.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    stream_rng(seed, tag, index).random()
}

/// Named dither stream shared by an encoder and its decoder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DitherSource {
    pub seed: u64,
    pub stream: String,
    pub counter: u64,
}

impl DitherSource {
    pub fn new(seed: u64, stream: impl Into<String>) -> Self {
        Self {
            seed,
            stream: stream.into(),
            counter: 0,
        }
    }

    pub fn at(seed: u64, stream: impl Into<String>, counter: u64) -> Self {
        Self {
            seed,
            stream: stream.into(),
            counter,
        }
    }

    /// Draw the dither for the current counter and advance.
    pub fn next<T: Scalar>(&mut self, lat: &Lattice<T>) -> Result<Vec<T>, LatticeError> {
        let v = sample_dither_at(lat, self.seed, &self.stream, self.counter)?;
        self.counter += 1;
        Ok(v)
    }

    /// Draw the dither for `counter` without touching the state.
    pub fn peek<T: Scalar>(&self, lat: &Lattice<T>, counter: u64) -> Result<Vec<T>, LatticeError> {
        sample_dither_at(lat, self.seed, &self.stream, counter)
    }
}

/// Uniform draw over the Voronoi cell of `lat`; advances `src`.
pub fn sample_dither<T: Scalar>(lat: &Lattice<T>, src: &mut DitherSource) -> Result<Vec<T>, LatticeError> {
    src.next(lat)
}

fn sample_dither_at<T: Scalar>(
    lat: &Lattice<T>,
    seed: u64,
    stream: &str,
    counter: u64,
) -> Result<Vec<T>, LatticeError> {
    let mut rng = stream_rng(seed, stream, counter);
    uniform_voronoi(lat, &mut rng)
}

/// Uniform over the fundamental parallelepiped, reduced mod Λ.
pub fn uniform_voronoi<T: Scalar, R: Rng + ?Sized>(lat: &Lattice<T>, rng: &mut R) -> Result<Vec<T>, LatticeError> {
    let n = lat.dim();
    match lat.basis() {
        // The centred cube is already the Voronoi cell.
        Basis::ScaledInteger { scale } => Ok((0..n)
            .map(|_| *scale * (T::lit(rng.random::<f64>()) - T::lit(0.5)))
            .collect()),
        Basis::Generator(_) => {
            let a: Vec<T> = (0..n).map(|_| T::lit(rng.random::<f64>())).collect();
            lat.modulo(&lat.point(&a))
        }
    }
}

/// I.i.d. zero-mean Gaussian vector with the given per-coordinate variance.
pub fn gaussian_vector<T: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize, variance: f64) -> Vec<T> {
    let sd = variance.sqrt();
    (0..n)
        .map(|_| T::lit(sd * rng.sample::<f64, _>(StandardNormal)))
        .collect()
}

/// Gaussian vector for the `(seed, stream, counter)` key.
pub fn gaussian_at<T: Scalar>(seed: u64, stream: &str, counter: u64, n: usize, variance: f64) -> Vec<T> {
    gaussian_vector(&mut stream_rng(seed, stream, counter), n, variance)
}

/// Monte Carlo second-moment estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub std_err: f64,
    /// Closed form, when the lattice has one.
    pub exact: Option<f64>,
}

/// Estimate `σ²(Λ)` as the mean of `‖U‖²/n` over `trials` dithers.
pub fn second_moment<T: Scalar>(
    lat: &Lattice<T>,
    trials: usize,
    src: &mut DitherSource,
) -> Result<MomentEstimate, LatticeError> {
    let trials = trials.max(1);
    let n = lat.dim() as f64;
    let mut m = Moments::default();
    for _ in 0..trials {
        let u = src.next(lat)?;
        m.push(norm_sq(&u).as_f64() / n);
    }
    let exact = match lat.basis() {
        Basis::ScaledInteger { .. } => Some(lat.second_moment().as_f64()),
        Basis::Generator(_) if lat.is_moment_exact() => Some(lat.second_moment().as_f64()),
        Basis::Generator(_) => None,
    };
    Ok(MomentEstimate {
        estimate: m.mean(),
        std_err: if trials > 1 { m.std_err() } else { f64::NAN },
        exact,
    })
}
