//! Finite-dimensional lattices with exact nearest-point quantization.
//!
//! Two descriptions are supported: the scaled integer lattice `s·Zⁿ`, whose
//! quantizer is coordinatewise rounding, and an arbitrary full-rank generator
//! matrix whose quantizer is a Schnorr-Euchner closest-point enumeration.
//! Generator rows are the basis vectors, so lattice points are `zᵀG` for
//! integer row vectors `z`.

use std::sync::Arc;

use crate::dither::DitherSource;
use crate::error::LatticeError;
use crate::scalar::{norm_sq, Scalar};

/// Node budget used by the closest-point search unless overridden.
pub const DEFAULT_SEARCH_BUDGET: usize = 1 << 22;

/// Dither draws used to estimate the second moment of a lattice loaded from an
/// arbitrary generator matrix.
pub const GENERATOR_MOMENT_TRIALS: usize = 50_000;

/// Stream seed for the second-moment estimate of generator lattices.
const GENERATOR_MOMENT_SEED: u64 = 0x6c61_7463_665f_6d6f;

/// How the lattice points are described.
#[derive(Clone, Debug)]
pub enum Basis<T: Scalar> {
    /// `scale · Zⁿ`.
    ScaledInteger { scale: T },
    /// Rows of a full-rank `n × n` generator matrix.
    Generator(Arc<GeneratorBasis<T>>),
}

/// Generator matrix plus the QR factorization of its transpose used by the
/// closest-point search.
#[derive(Clone, Debug)]
pub struct GeneratorBasis<T: Scalar> {
    dim: usize,
    rows: Vec<T>,
    // Orthonormal factor, column j at q[i * n + j].
    q: Vec<T>,
    // Upper triangular, positive diagonal.
    r: Vec<T>,
}

impl<T: Scalar> GeneratorBasis<T> {
    fn new(dim: usize, rows: Vec<T>) -> Result<Self, LatticeError> {
        if dim == 0 {
            return Err(LatticeError::ZeroDimension);
        }
        if rows.len() != dim * dim {
            return Err(LatticeError::MalformedGenerator {
                expected: dim * dim,
                got: rows.len(),
            });
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(LatticeError::Singular);
        }
        let n = dim;
        // Column j of B = Gᵀ is basis row j. Modified Gram-Schmidt on the columns.
        let mut q = vec![T::zero(); n * n];
        let mut r = vec![T::zero(); n * n];
        let mut v: Vec<Vec<T>> = (0..n).map(|j| rows[j * n..(j + 1) * n].to_vec()).collect();
        let largest = rows.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        let tiny = T::epsilon() * T::lit(1e3) * largest;
        for j in 0..n {
            for i in 0..j {
                let rij = (0..n).fold(T::zero(), |acc, t| acc + q[t * n + i] * v[j][t]);
                r[i * n + j] = rij;
                for t in 0..n {
                    v[j][t] = v[j][t] - rij * q[t * n + i];
                }
            }
            let rjj = norm_sq(&v[j]).sqrt();
            // Also rejects NaN.
            if rjj.partial_cmp(&tiny) != Some(std::cmp::Ordering::Greater) {
                return Err(LatticeError::Singular);
            }
            r[j * n + j] = rjj;
            for t in 0..n {
                q[t * n + j] = v[j][t] / rjj;
            }
        }
        Ok(Self { dim, rows, q, r })
    }

    fn scaled(&self, c: T) -> Self {
        Self {
            dim: self.dim,
            rows: self.rows.iter().map(|&x| x * c).collect(),
            q: self.q.clone(),
            r: self.r.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn rows(&self) -> &[T] {
        &self.rows
    }

    fn abs_det(&self) -> T {
        (0..self.dim).fold(T::one(), |acc, j| acc * self.r[j * self.dim + j])
    }

    fn point(&self, coords: &[T]) -> Vec<T> {
        let n = self.dim;
        let mut p = vec![T::zero(); n];
        for (i, &z) in coords.iter().enumerate() {
            if z == T::zero() {
                continue;
            }
            for (pt, &g) in p.iter_mut().zip(&self.rows[i * n..(i + 1) * n]) {
                *pt = *pt + z * g;
            }
        }
        p
    }

    /// Real coordinates of `x` in the basis (solves `zᵀG = x`).
    fn coordinates(&self, x: &[T]) -> Vec<T> {
        let n = self.dim;
        let y = self.rotate(x);
        let mut z = vec![T::zero(); n];
        for k in (0..n).rev() {
            let row = &self.r[k * n + k + 1..(k + 1) * n];
            let s = row.iter().zip(&z[k + 1..]).fold(y[k], |s, (&r, &zj)| s - r * zj);
            z[k] = s / self.r[k * n + k];
        }
        z
    }

    // Qᵀ x
    fn rotate(&self, x: &[T]) -> Vec<T> {
        let n = self.dim;
        (0..n)
            .map(|j| (0..n).fold(T::zero(), |acc, i| acc + self.q[i * n + j] * x[i]))
            .collect()
    }

    fn closest(&self, x: &[T], budget: usize) -> Result<Vec<T>, LatticeError> {
        let mut search = Search {
            basis: self,
            target: self.rotate(x),
            coords: vec![T::zero(); self.dim],
            best_dist: T::infinity(),
            best_coords: vec![T::zero(); self.dim],
            best_point: Vec::new(),
            nodes: 0,
            budget,
        };
        search.descend(self.dim - 1, T::zero())?;
        Ok(search.best_coords)
    }
}

struct Search<'a, T: Scalar> {
    basis: &'a GeneratorBasis<T>,
    target: Vec<T>,
    coords: Vec<T>,
    best_dist: T,
    best_coords: Vec<T>,
    best_point: Vec<T>,
    nodes: usize,
    budget: usize,
}

impl<T: Scalar> Search<'_, T> {
    fn tie_tol(&self) -> T {
        if self.best_dist.is_finite() {
            T::epsilon() * T::lit(256.0) * self.best_dist
        } else {
            T::zero()
        }
    }

    fn descend(&mut self, level: usize, partial: T) -> Result<(), LatticeError> {
        let n = self.basis.dim;
        let r = &self.basis.r;
        let mut s = self.target[level];
        for j in level + 1..n {
            s = s - r[level * n + j] * self.coords[j];
        }
        let rkk = r[level * n + level];
        let center = s / rkk;
        let first = center.round_half_even();
        let dir = if center >= first { T::one() } else { -T::one() };
        // Zigzag around the center in order of non-decreasing |center - z|.
        let mut offset = T::zero();
        let mut candidate = first;
        loop {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(LatticeError::SearchBudgetExceeded { budget: self.budget });
            }
            let diff = rkk * (center - candidate);
            let dist = partial + diff * diff;
            if dist > self.best_dist + self.tie_tol() {
                return Ok(());
            }
            self.coords[level] = candidate;
            if level == 0 {
                self.leaf(dist);
            } else {
                self.descend(level - 1, dist)?;
            }
            candidate = if offset <= T::zero() {
                offset = -offset + T::one();
                first + dir * offset
            } else {
                offset = -offset;
                first + dir * offset
            };
        }
    }

    fn leaf(&mut self, dist: T) {
        let tol = self.tie_tol();
        if dist < self.best_dist - tol {
            self.best_dist = dist;
            self.best_coords.copy_from_slice(&self.coords);
            self.best_point.clear();
            return;
        }
        // Exact tie: keep the lexicographically smallest point.
        if self.best_point.is_empty() {
            self.best_point = self.basis.point(&self.best_coords);
        }
        let point = self.basis.point(&self.coords);
        let smaller = point
            .iter()
            .zip(&self.best_point)
            .find(|(a, b)| a != b)
            .is_some_and(|(a, b)| a < b);
        if smaller {
            self.best_dist = self.best_dist.min(dist);
            self.best_coords.copy_from_slice(&self.coords);
            self.best_point = point;
        }
    }
}

/// An `n`-dimensional lattice with cached volume and second moment.
#[derive(Clone, Debug)]
pub struct Lattice<T: Scalar> {
    dim: usize,
    basis: Basis<T>,
    volume: T,
    second_moment: T,
    moment_exact: bool,
    search_budget: usize,
}

/// Named lattice families available to the simulators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LatticeKind {
    /// Scaled `Zⁿ`, any dimension.
    #[default]
    Cubic,
    /// Checkerboard lattice D4, dimension 4.
    D4,
    /// Gosset lattice E8, dimension 8.
    E8,
}

impl LatticeKind {
    /// Unscaled lattice of this family in dimension `n`.
    pub fn build<T: Scalar>(self, n: usize) -> Result<Lattice<T>, LatticeError> {
        match self {
            LatticeKind::Cubic => Lattice::integer(n),
            LatticeKind::D4 if n == 4 => Lattice::d4(),
            LatticeKind::D4 => Err(LatticeError::UnsupportedDimension {
                kind: "D4",
                required: 4,
                got: n,
            }),
            LatticeKind::E8 if n == 8 => Lattice::e8(),
            LatticeKind::E8 => Err(LatticeError::UnsupportedDimension {
                kind: "E8",
                required: 8,
                got: n,
            }),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Cubic => "cubic",
            LatticeKind::D4 => "d4",
            LatticeKind::E8 => "e8",
        }
    }
}

impl std::str::FromStr for LatticeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cubic" | "z" | "zn" => Ok(LatticeKind::Cubic),
            "d4" => Ok(LatticeKind::D4),
            "e8" => Ok(LatticeKind::E8),
            other => Err(format!("unknown lattice kind '{other}' (expected cubic, d4 or e8)")),
        }
    }
}

impl<T: Scalar> Lattice<T> {
    /// `scale · Zⁿ`.
    pub fn cubic(dim: usize, scale: T) -> Result<Self, LatticeError> {
        if dim == 0 {
            return Err(LatticeError::ZeroDimension);
        }
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(LatticeError::InvalidScale(scale.as_f64()));
        }
        Ok(Self {
            dim,
            basis: Basis::ScaledInteger { scale },
            volume: scale.powi(dim as i32),
            second_moment: scale * scale / T::lit(12.0),
            moment_exact: true,
            search_budget: DEFAULT_SEARCH_BUDGET,
        })
    }

    /// `Zⁿ`.
    pub fn integer(dim: usize) -> Result<Self, LatticeError> {
        Self::cubic(dim, T::one())
    }

    /// Lattice spanned by the rows of `rows` (row-major `dim × dim`) with a
    /// known second moment.
    pub fn from_generator_with_moment(dim: usize, rows: Vec<T>, second_moment: T) -> Result<Self, LatticeError> {
        if !(second_moment > T::zero() && second_moment.is_finite()) {
            return Err(LatticeError::InvalidSecondMoment(second_moment.as_f64()));
        }
        let g = GeneratorBasis::new(dim, rows)?;
        Ok(Self {
            dim,
            volume: g.abs_det(),
            basis: Basis::Generator(Arc::new(g)),
            second_moment,
            moment_exact: true,
            search_budget: DEFAULT_SEARCH_BUDGET,
        })
    }

    /// Lattice spanned by the rows of `rows`; the second moment is estimated
    /// from [`GENERATOR_MOMENT_TRIALS`] dither draws on a fixed stream.
    pub fn from_generator(dim: usize, rows: Vec<T>) -> Result<Self, LatticeError> {
        let g = GeneratorBasis::new(dim, rows)?;
        let mut lat = Self {
            dim,
            volume: g.abs_det(),
            basis: Basis::Generator(Arc::new(g)),
            second_moment: T::nan(),
            moment_exact: false,
            search_budget: DEFAULT_SEARCH_BUDGET,
        };
        let mut src = DitherSource::new(GENERATOR_MOMENT_SEED, "generator-moment");
        let est = crate::dither::second_moment(&lat, GENERATOR_MOMENT_TRIALS, &mut src)?;
        lat.second_moment = T::lit(est.estimate);
        Ok(lat)
    }

    /// Parse a whitespace-separated square matrix, one basis vector per line.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse_generator(text: &str) -> Result<Self, LatticeError> {
        let mut rows: Vec<Vec<T>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map(T::lit)
                        .map_err(|_| LatticeError::Parse(format!("line {}: bad number '{tok}'", lineno + 1)))
                })
                .collect::<Result<Vec<T>, _>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 {
            return Err(LatticeError::Parse("no rows".into()));
        }
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(LatticeError::Parse(format!(
                "row {} has {} entries, expected {n}",
                i + 1,
                r.len()
            )));
        }
        Self::from_generator(n, rows.concat())
    }

    /// The checkerboard lattice D4 (volume 2, second moment 13/120).
    pub fn d4() -> Result<Self, LatticeError> {
        #[rustfmt::skip]
        let rows = [
             2.0,  0.0,  0.0, 0.0,
            -1.0,  1.0,  0.0, 0.0,
             0.0, -1.0,  1.0, 0.0,
             0.0,  0.0, -1.0, 1.0,
        ];
        Self::from_generator_with_moment(4, rows.iter().map(|&x| T::lit(x)).collect(), T::lit(13.0 / 120.0))
    }

    /// The Gosset lattice E8 (volume 1, second moment 929/12960).
    pub fn e8() -> Result<Self, LatticeError> {
        #[rustfmt::skip]
        let rows = [
             2.0,  0.0,  0.0,  0.0,  0.0,  0.0,  0.0, 0.0,
            -1.0,  1.0,  0.0,  0.0,  0.0,  0.0,  0.0, 0.0,
             0.0, -1.0,  1.0,  0.0,  0.0,  0.0,  0.0, 0.0,
             0.0,  0.0, -1.0,  1.0,  0.0,  0.0,  0.0, 0.0,
             0.0,  0.0,  0.0, -1.0,  1.0,  0.0,  0.0, 0.0,
             0.0,  0.0,  0.0,  0.0, -1.0,  1.0,  0.0, 0.0,
             0.0,  0.0,  0.0,  0.0,  0.0, -1.0,  1.0, 0.0,
             0.5,  0.5,  0.5,  0.5,  0.5,  0.5,  0.5, 0.5,
        ];
        Self::from_generator_with_moment(8, rows.iter().map(|&x| T::lit(x)).collect(), T::lit(929.0 / 12960.0))
    }

    pub fn with_search_budget(mut self, budget: usize) -> Self {
        self.search_budget = budget;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &Basis<T> {
        &self.basis
    }

    /// Volume of the Voronoi cell, `|det G|`.
    pub fn volume(&self) -> T {
        self.volume
    }

    /// Per-dimension second moment of the uniform distribution on the
    /// Voronoi cell.
    pub fn second_moment(&self) -> T {
        self.second_moment
    }

    /// Whether [`Self::second_moment`] is a closed form rather than an estimate.
    pub fn is_moment_exact(&self) -> bool {
        self.moment_exact
    }

    /// Generator rows, row-major.
    pub fn generator_rows(&self) -> Vec<T> {
        match &self.basis {
            Basis::ScaledInteger { scale } => {
                let n = self.dim;
                let mut g = vec![T::zero(); n * n];
                for i in 0..n {
                    g[i * n + i] = *scale;
                }
                g
            }
            Basis::Generator(g) => g.rows.clone(),
        }
    }

    /// The lattice `c·Λ`.
    pub fn scaled(&self, c: T) -> Result<Self, LatticeError> {
        if !(c > T::zero() && c.is_finite()) {
            return Err(LatticeError::InvalidScale(c.as_f64()));
        }
        let basis = match &self.basis {
            Basis::ScaledInteger { scale } => {
                return Ok(Self::cubic(self.dim, *scale * c)?.with_search_budget(self.search_budget))
            }
            Basis::Generator(g) => Basis::Generator(Arc::new(g.scaled(c))),
        };
        Ok(Self {
            dim: self.dim,
            basis,
            volume: self.volume * c.powi(self.dim as i32),
            second_moment: self.second_moment * c * c,
            moment_exact: self.moment_exact,
            search_budget: self.search_budget,
        })
    }

    /// Rescale so the second moment equals `target`.
    pub fn scale_to_second_moment(&self, target: T) -> Result<Self, LatticeError> {
        if !(target > T::zero() && target.is_finite()) {
            return Err(LatticeError::InvalidSecondMoment(target.as_f64()));
        }
        if target == self.second_moment {
            return Ok(self.clone());
        }
        if let Basis::ScaledInteger { .. } = self.basis {
            return Ok(Self::cubic(self.dim, (T::lit(12.0) * target).sqrt())?.with_search_budget(self.search_budget));
        }
        self.scaled((target / self.second_moment).sqrt())
    }

    fn check_dim(&self, x: &[T]) -> Result<(), LatticeError> {
        if x.len() != self.dim {
            return Err(LatticeError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Integer coordinates (stored as scalars) of the nearest lattice point.
    pub fn quantize_coords(&self, x: &[T]) -> Result<Vec<T>, LatticeError> {
        self.check_dim(x)?;
        match &self.basis {
            Basis::ScaledInteger { scale } => {
                Ok(x.iter().map(|&v| (v / *scale).round_half_even() + T::zero()).collect())
            }
            Basis::Generator(g) => g.closest(x, self.search_budget),
        }
    }

    /// Nearest lattice point `Q_Λ(x)`.
    ///
    /// Ties go to the even integer per coordinate for `s·Zⁿ`, and to the
    /// lexicographically smallest point for generator lattices.
    pub fn quantize(&self, x: &[T]) -> Result<Vec<T>, LatticeError> {
        let z = self.quantize_coords(x)?;
        Ok(self.point(&z))
    }

    /// `x mod Λ = x − Q_Λ(x)`.
    pub fn modulo(&self, x: &[T]) -> Result<Vec<T>, LatticeError> {
        let q = self.quantize(x)?;
        Ok(x.iter().zip(&q).map(|(&a, &b)| a - b).collect())
    }

    /// Lattice point with the given integer coordinates.
    pub fn point(&self, coords: &[T]) -> Vec<T> {
        match &self.basis {
            Basis::ScaledInteger { scale } => coords.iter().map(|&z| z * *scale + T::zero()).collect(),
            Basis::Generator(g) => g.point(coords),
        }
    }

    /// Real coordinates of `x` in the generator basis.
    pub fn coordinates(&self, x: &[T]) -> Result<Vec<T>, LatticeError> {
        self.check_dim(x)?;
        Ok(match &self.basis {
            Basis::ScaledInteger { scale } => x.iter().map(|&v| v / *scale).collect(),
            Basis::Generator(g) => g.coordinates(x),
        })
    }

    /// Whether `x` lies in the (closed) Voronoi cell, i.e. quantizes to 0.
    pub fn in_voronoi(&self, x: &[T]) -> Result<bool, LatticeError> {
        Ok(self.quantize_coords(x)?.iter().all(|&z| z == T::zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(lat: &Lattice<f64>, x: &[f64], radius: i64) -> (f64, Vec<f64>) {
        let n = lat.dim();
        let mut best = (f64::INFINITY, vec![]);
        let width = (2 * radius + 1) as usize;
        for idx in 0..width.pow(n as u32) {
            let mut rem = idx;
            let z: Vec<f64> = (0..n)
                .map(|_| {
                    let d = (rem % width) as i64 - radius;
                    rem /= width;
                    d as f64
                })
                .collect();
            let p = lat.point(&z);
            let d: f64 = x.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best.0 {
                best = (d, p);
            }
        }
        best
    }

    #[test]
    fn integer_rounding() {
        let z = Lattice::<f64>::integer(1).unwrap();
        assert_eq!(z.quantize(&[2.7]).unwrap(), vec![3.0]);
        assert_eq!(z.quantize(&[0.5]).unwrap(), vec![0.0]);
        let m = z.modulo(&[2.7]).unwrap();
        assert!((m[0] + 0.3).abs() < 1e-15);
    }

    #[test]
    fn scaled_integer_examples() {
        let two = Lattice::<f64>::cubic(2, 2.0).unwrap();
        assert_eq!(two.quantize(&[1.2, -0.9]).unwrap(), vec![2.0, 0.0]);
        let four = Lattice::<f64>::cubic(1, 4.0).unwrap();
        assert_eq!(four.modulo(&[9.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn two_z_squared_matches_exhaustive_search() {
        let two = Lattice::<f64>::cubic(2, 2.0).unwrap();
        let (_, p) = brute_force(&two, &[1.2, -0.9], 3);
        assert_eq!(p, two.quantize(&[1.2, -0.9]).unwrap());
    }

    #[test]
    fn origin_is_fixed() {
        for lat in [
            Lattice::<f64>::integer(3).unwrap(),
            Lattice::d4().unwrap(),
            Lattice::e8().unwrap(),
        ] {
            let zero = vec![0.0; lat.dim()];
            assert_eq!(lat.quantize(&zero).unwrap(), zero);
            assert_eq!(lat.modulo(&zero).unwrap(), zero);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let lat = Lattice::<f64>::integer(3).unwrap();
        assert_eq!(
            lat.quantize(&[1.0, 2.0]),
            Err(LatticeError::DimensionMismatch { expected: 3, got: 2 })
        );
    }

    #[test]
    fn tiny_budget_fails_loudly() {
        let lat = Lattice::<f64>::e8().unwrap().with_search_budget(3);
        let x = [0.3, -0.2, 0.7, 0.1, 0.45, -0.6, 0.2, 0.05];
        assert_eq!(lat.quantize(&x), Err(LatticeError::SearchBudgetExceeded { budget: 3 }));
    }

    #[test]
    fn singular_generator_rejected() {
        let rows = vec![1.0, 2.0, 2.0, 4.0];
        assert!(matches!(
            Lattice::<f64>::from_generator_with_moment(2, rows, 1.0),
            Err(LatticeError::Singular)
        ));
    }

    #[test]
    fn volumes() {
        assert_eq!(Lattice::<f64>::cubic(3, 2.0).unwrap().volume(), 8.0);
        assert!((Lattice::<f64>::d4().unwrap().volume() - 2.0).abs() < 1e-12);
        assert!((Lattice::<f64>::e8().unwrap().volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scale_to_second_moment_examples() {
        let z = Lattice::<f64>::integer(1).unwrap();
        let s = z.scale_to_second_moment(1.0).unwrap();
        match s.basis() {
            Basis::ScaledInteger { scale } => assert!((scale - 12f64.sqrt()).abs() < 1e-14),
            _ => unreachable!(),
        }
        let t = z.scale_to_second_moment(1.0 / 3.0).unwrap();
        match t.basis() {
            Basis::ScaledInteger { scale } => assert!((scale - 2.0).abs() < 1e-14),
            _ => unreachable!(),
        }
        let same = z.scale_to_second_moment(z.second_moment()).unwrap();
        assert_eq!(same.generator_rows(), z.generator_rows());
        assert!(z.scale_to_second_moment(-1.0).is_err());
        assert!(z.scale_to_second_moment(0.0).is_err());

        let e8 = Lattice::<f64>::e8().unwrap().scale_to_second_moment(2.5).unwrap();
        assert!((e8.second_moment() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn cubic_moment_closed_form() {
        assert_eq!(Lattice::<f64>::integer(4).unwrap().second_moment(), 1.0 / 12.0);
        assert_eq!(Lattice::<f64>::cubic(4, 2.0).unwrap().second_moment(), 4.0 / 12.0);
    }

    #[test]
    fn parse_generator_file() {
        let text = "# hexagonal\n1 0\n0.5 0.8660254037844386\n";
        let lat = Lattice::<f64>::parse_generator(text).unwrap();
        assert_eq!(lat.dim(), 2);
        assert!((lat.volume() - 0.8660254037844386).abs() < 1e-12);
        // A2 has second moment G·V^(2/n) with G = 5/(36√3).
        let expected = 5.0 / (36.0 * 3f64.sqrt()) * lat.volume();
        assert!((lat.second_moment() - expected).abs() / expected < 0.02);
        assert!(!lat.is_moment_exact());

        assert!(Lattice::<f64>::parse_generator("1 0\n0\n").is_err());
        assert!(Lattice::<f64>::parse_generator("1 x\n0 1\n").is_err());
        assert!(Lattice::<f64>::parse_generator("").is_err());
    }

    #[test]
    fn d4_hole_tie_breaks_lexicographically() {
        // (1,0,0,0) is a deep hole of D4, equidistant from 0, (2,0,0,0)
        // and (1,±1,0,0), (1,0,±1,0), (1,0,0,±1).
        let d4 = Lattice::<f64>::d4().unwrap();
        let q = d4.quantize(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(q, vec![0.0; 4]);
        // Odd-sum point: the eight unit neighbours are all equidistant.
        let q = d4.quantize(&[2.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(q, vec![1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn generator_search_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..200 {
            let n = 1 + trial % 4;
            let rows: Vec<f64> = (0..n * n)
                .map(|i| if i % (n + 1) == 0 { 1.5 } else { 0.0 } + rng.random_range(-0.6..0.6))
                .collect();
            let Ok(lat) = Lattice::from_generator_with_moment(n, rows, 1.0) else {
                continue;
            };
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let q = lat.quantize(&x).unwrap();
            let dq: f64 = x.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
            let (db, _) = brute_force(&lat, &x, 6);
            assert!(dq <= db + 1e-9, "n={n} search {dq} vs exhaustive {db}");
        }
    }
}
