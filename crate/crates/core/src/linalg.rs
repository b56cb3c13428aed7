//! Dense complex linear algebra on small state spaces.
//!
//! Everything here is sized for brute-force verification: states and
//! operators are stored densely, tensor products are materialized, and the
//! largest eigenvalue of a Hermitian PSD operator is found by power iteration
//! with a cyclic Jacobi diagonalization as an independent cross-check.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type ComplexScalar = Complex64;

/// Default cap on the dimension of a tensored state vector.
pub const DEFAULT_STATE_CAP: usize = 1 << 20;
/// Default cap on the dimension of a dense operator (dim² entries are stored).
pub const DEFAULT_OPERATOR_CAP: usize = 1 << 12;

/// Hermiticity tolerance used for the operator flag.
pub const HERMITIAN_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_state_dim: usize,
    pub max_operator_dim: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_state_dim: DEFAULT_STATE_CAP,
            max_operator_dim: DEFAULT_OPERATOR_CAP,
        }
    }
}

fn checked_product(dims: impl Iterator<Item = usize>, cap: usize) -> Result<usize> {
    let mut total: u128 = 1;
    for d in dims {
        total = total.saturating_mul(d as u128);
    }
    if total > cap as u128 {
        return Err(Error::DimensionCap { dim: total, cap });
    }
    Ok(total as usize)
}

fn ensure_finite(values: &[Complex64]) -> Result<()> {
    if values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain("non-finite amplitude".into()))
    }
}

/// A vector in C^dim. Not necessarily normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Domain("state vector must have dim >= 1".into()));
        }
        ensure_finite(&amps)?;
        Ok(StateVector { amps })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Computational basis vector |index⟩.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(
            index < dim,
            "basis index {index} out of range for dim {dim}"
        );
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        StateVector { amps }
    }

    /// Uniformly random unit vector (complex Gaussian entries, normalized).
    pub fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        loop {
            let amps: Vec<Complex64> = (0..dim)
                .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
                .collect();
            let v = StateVector { amps };
            if v.norm() > 1e-6 {
                return v.normalized().expect("nonzero norm");
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        StateVector {
            amps: self.amps.iter().map(|z| z * factor).collect(),
        }
    }

    /// ⟨self|other⟩, conjugate-linear in `self`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn add(&self, other: &StateVector) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(StateVector {
            amps: self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &StateVector) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(StateVector {
            amps: self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; u1 in (0, 1].
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// A dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    dim: usize,
    entries: Vec<Complex64>,
    hermitian: bool,
}

impl DenseOperator {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("operator must have dim >= 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::LengthMismatch {
                what: "operator entries",
                expected: dim * dim,
                found: entries.len(),
            });
        }
        ensure_finite(&entries)?;
        let mut op = DenseOperator {
            dim,
            entries,
            hermitian: false,
        };
        op.hermitian = op.max_asymmetry() <= HERMITIAN_TOL;
        Ok(op)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut entries = Vec::with_capacity(dim * dim);
        for j in 0..dim {
            for k in 0..dim {
                entries.push(f(j, k));
            }
        }
        Self::new(dim, entries)
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let dim = values.len();
        let mut entries = vec![ZERO; dim * dim];
        for (i, &v) in values.iter().enumerate() {
            entries[i * dim + i] = Complex64::new(v, 0.0);
        }
        DenseOperator {
            dim,
            entries,
            hermitian: true,
        }
    }

    /// |v⟩⟨v|
    pub fn projector(v: &StateVector) -> Self {
        let dim = v.dim();
        let a = v.amps();
        let mut entries = Vec::with_capacity(dim * dim);
        for j in 0..dim {
            for k in 0..dim {
                entries.push(a[j] * a[k].conj());
            }
        }
        DenseOperator {
            dim,
            entries,
            hermitian: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.entries[row * self.dim..(row + 1) * self.dim]
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in j..n {
                let d = (self.entries[j * n + k] - self.entries[k * n + j].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entries[i * self.dim + i]).sum()
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        same_dim(self.dim, v.dim())?;
        Ok(StateVector {
            amps: self.apply_raw(v.amps()),
        })
    }

    fn apply_raw(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.entries
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &DenseOperator) -> Result<Self> {
        same_dim(self.dim, other.dim)?;
        Ok(DenseOperator {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        DenseOperator {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
            hermitian: self.hermitian,
        }
    }

    pub fn mul(&self, other: &DenseOperator) -> Result<Self> {
        same_dim(self.dim, other.dim)?;
        let n = self.dim;
        let mut entries = vec![ZERO; n * n];
        for j in 0..n {
            for m in 0..n {
                let a = self.entries[j * n + m];
                if a == ZERO {
                    continue;
                }
                for k in 0..n {
                    entries[j * n + k] += a * other.entries[m * n + k];
                }
            }
        }
        Self::new(n, entries)
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut entries = vec![ZERO; n * n];
        for j in 0..n {
            for k in 0..n {
                entries[k * n + j] = self.entries[j * n + k].conj();
            }
        }
        DenseOperator {
            dim: n,
            entries,
            hermitian: self.hermitian,
        }
    }

    /// U†U = I within `tol` (max entrywise deviation).
    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = self.adjoint().mul(self).expect("square");
        let n = self.dim;
        (0..n).all(|j| {
            (0..n).all(|k| {
                let target = if j == k { ONE } else { ZERO };
                (prod.entries[j * n + k] - target).norm() <= tol
            })
        })
    }
}

/// Kronecker product of the parts, leftmost part most significant.
pub fn tensor_state(parts: &[StateVector], limits: &Limits) -> Result<StateVector> {
    if parts.is_empty() {
        return Err(Error::Domain("tensor product of zero states".into()));
    }
    checked_product(parts.iter().map(StateVector::dim), limits.max_state_dim)?;
    let mut amps = vec![ONE];
    for part in parts {
        let mut next = Vec::with_capacity(amps.len() * part.dim());
        for a in &amps {
            next.extend(part.amps().iter().map(|b| a * b));
        }
        amps = next;
    }
    Ok(StateVector { amps })
}

/// Kronecker product of square operators. The Hermitian flag is the
/// conjunction of the parts' flags.
pub fn tensor_operator(parts: &[DenseOperator], limits: &Limits) -> Result<DenseOperator> {
    if parts.is_empty() {
        return Err(Error::Domain("tensor product of zero operators".into()));
    }
    checked_product(
        parts.iter().map(DenseOperator::dim),
        limits.max_operator_dim,
    )?;
    let mut acc = DenseOperator {
        dim: 1,
        entries: vec![ONE],
        hermitian: true,
    };
    for part in parts {
        let (n, m) = (acc.dim, part.dim);
        let dim = n * m;
        let mut entries = vec![ZERO; dim * dim];
        for i1 in 0..n {
            for j1 in 0..n {
                let a = acc.entries[i1 * n + j1];
                if a == ZERO {
                    continue;
                }
                for i2 in 0..m {
                    let row = (i1 * m + i2) * dim + j1 * m;
                    for j2 in 0..m {
                        entries[row + j2] = a * part.entries[i2 * m + j2];
                    }
                }
            }
        }
        acc = DenseOperator {
            dim,
            entries,
            hermitian: acc.hermitian && part.hermitian,
        };
    }
    Ok(acc)
}

/// Imaginary parts of expectations at or below this are rounding noise.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;
const NORMALIZED_TOL: f64 = 1e-9;

/// ⟨Ψ|op|Ψ⟩ for a unit state and a Hermitian operator.
pub fn expectation(state: &StateVector, op: &DenseOperator) -> Result<f64> {
    same_dim(op.dim(), state.dim())?;
    if !op.is_hermitian() {
        return Err(Error::NotHermitian(op.max_asymmetry()));
    }
    if !state.is_normalized(NORMALIZED_TOL) {
        return Err(Error::NotNormalized(state.norm()));
    }
    let value = state.inner(&op.apply(state)?);
    if value.im.abs() > IMAG_RESIDUE_TOL {
        return Err(Error::ImaginaryResidue(value.im.abs()));
    }
    Ok(value.re)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenConfig {
    /// Relative tolerance on the largest eigenvalue.
    pub tol: f64,
    pub max_iters: usize,
    /// Seed for the power-iteration start vector.
    pub seed: u64,
    /// Operators up to this dimension are cross-checked by Jacobi.
    pub jacobi_max_dim: usize,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            tol: 1e-10,
            max_iters: 100_000,
            seed: 0x5eed,
            jacobi_max_dim: 512,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenMethod {
    PowerIteration,
    Jacobi,
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    pub value: f64,
    pub witness: StateVector,
    pub method: EigenMethod,
    pub iterations: usize,
    /// Jacobi's largest eigenvalue, when the cross-check ran.
    pub jacobi_value: Option<f64>,
}

fn hermitian_psd_precondition(op: &DenseOperator) -> Result<()> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian(op.max_asymmetry()));
    }
    Ok(())
}

/// Plain power iteration from a seeded random start.
pub fn power_iteration(op: &DenseOperator, cfg: &EigenConfig) -> Result<EigenResult> {
    hermitian_psd_precondition(op)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut v = StateVector::random_unit(op.dim(), &mut rng).into_amps();
    let mut best = 0.0;
    for it in 1..=cfg.max_iters {
        let w = op.apply_raw(&v);
        let rho: f64 = v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        best = rho;
        let w_norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if w_norm == 0.0 {
            // op annihilates v; for PSD op with random start this means op = 0
            return Ok(EigenResult {
                value: 0.0,
                witness: StateVector { amps: v },
                method: EigenMethod::PowerIteration,
                iterations: it,
                jacobi_value: None,
            });
        }
        let residual = v
            .iter()
            .zip(&w)
            .map(|(a, b)| (b - a * rho).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if residual <= cfg.tol * rho.abs().max(f64::MIN_POSITIVE) {
            return Ok(EigenResult {
                value: rho,
                witness: StateVector { amps: v },
                method: EigenMethod::PowerIteration,
                iterations: it,
                jacobi_value: None,
            });
        }
        let inv = 1.0 / w_norm;
        v = w.into_iter().map(|z| z * inv).collect();
    }
    Err(Error::NotConverged {
        iterations: cfg.max_iters,
        value: best,
        witness: Box::new(StateVector { amps: v }),
    })
}

/// Full eigendecomposition of a Hermitian operator by cyclic complex Jacobi
/// rotations. Returns eigenvalues in descending order with matching
/// unit eigenvectors.
pub fn jacobi_eigen(op: &DenseOperator) -> Result<(Vec<f64>, Vec<StateVector>)> {
    hermitian_psd_precondition(op)?;
    let n = op.dim();
    let mut a = op.entries.clone();
    let mut v = DenseOperator::identity(n).entries;
    let frob: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let threshold = 1e-15 * frob.max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|j| (0..n).filter(move |&k| k != j).map(move |k| (j, k)))
            .map(|(j, k)| a[j * n + k].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[p * n + q];
                let mag = b.norm();
                if mag <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = b / mag;
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // U = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
                let u00 = Complex64::new(c, 0.0);
                let u01 = Complex64::new(s, 0.0);
                let u10 = -phase.conj() * s;
                let u11 = phase.conj() * c;
                for k in 0..n {
                    let (x, y) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = x * u00 + y * u10;
                    a[k * n + q] = x * u01 + y * u11;
                }
                for k in 0..n {
                    let (x, y) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = u00.conj() * x + u10.conj() * y;
                    a[q * n + k] = u01.conj() * x + u11.conj() * y;
                }
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;
                for k in 0..n {
                    let (x, y) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = x * u00 + y * u10;
                    v[k * n + q] = x * u01 + y * u11;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y * n + y].re.total_cmp(&a[x * n + x].re));
    let values = order.iter().map(|&i| a[i * n + i].re).collect();
    let vectors = order
        .iter()
        .map(|&i| StateVector {
            amps: (0..n).map(|k| v[k * n + i]).collect(),
        })
        .collect();
    Ok((values, vectors))
}

/// Largest eigenvalue of a Hermitian PSD operator with a unit witness.
///
/// Power iteration is the primary route. For `dim <= cfg.jacobi_max_dim` the
/// result is cross-checked against Jacobi, which also serves as the
/// fallback when power iteration stalls or undershoots.
pub fn lambda_max(op: &DenseOperator, cfg: &EigenConfig) -> Result<EigenResult> {
    hermitian_psd_precondition(op)?;
    let small = op.dim() <= cfg.jacobi_max_dim;
    let power = power_iteration(op, cfg);
    if !small {
        return power;
    }
    let (values, vectors) = jacobi_eigen(op)?;
    let jacobi_top = values[0];
    match power {
        Ok(mut res) => {
            let slack = cfg.tol * jacobi_top.abs().max(1.0);
            res.jacobi_value = Some(jacobi_top);
            if jacobi_top > res.value + slack {
                res.value = jacobi_top;
                res.witness = vectors.into_iter().next().expect("dim >= 1");
                res.method = EigenMethod::Jacobi;
            }
            Ok(res)
        }
        Err(Error::NotConverged { iterations, .. }) => Ok(EigenResult {
            value: jacobi_top,
            witness: vectors.into_iter().next().expect("dim >= 1"),
            method: EigenMethod::Jacobi,
            iterations,
            jacobi_value: Some(jacobi_top),
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn tensor_state_examples() {
        let lim = Limits::default();
        let v = StateVector::from_real(&[0.6, 0.8]).unwrap();
        assert_eq!(tensor_state(std::slice::from_ref(&v), &lim).unwrap(), v);

        let e0 = StateVector::basis(2, 0);
        let e1 = StateVector::basis(2, 1);
        let t = tensor_state(&[e0, e1], &lim).unwrap();
        assert_eq!(t, StateVector::from_real(&[0.0, 1.0, 0.0, 0.0]).unwrap());

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_real(&[h, h]).unwrap();
        let t = tensor_state(&[plus.clone(), plus.clone(), plus], &lim).unwrap();
        assert_eq!(t.dim(), 8);
        for z in t.amps() {
            assert!((z.re - 2f64.powf(-1.5)).abs() < 1e-12 && z.im == 0.0);
        }
    }

    #[test]
    fn tensor_state_respects_cap() {
        let lim = Limits {
            max_state_dim: 8,
            max_operator_dim: 8,
        };
        let e = StateVector::basis(2, 0);
        assert!(tensor_state(&vec![e.clone(); 3], &lim).is_ok());
        assert!(matches!(
            tensor_state(&vec![e; 4], &lim),
            Err(Error::DimensionCap { dim: 16, cap: 8 })
        ));
    }

    #[test]
    fn tensor_operator_examples() {
        let lim = Limits::default();
        let i2 = DenseOperator::identity(2);
        assert_eq!(
            tensor_operator(&[i2.clone(), i2], &lim).unwrap(),
            DenseOperator::identity(4)
        );

        let d = DenseOperator::diagonal(&[1.0, 0.5]);
        let dd = tensor_operator(&[d.clone(), d], &lim).unwrap();
        assert_eq!(dd, DenseOperator::diagonal(&[1.0, 0.5, 0.5, 0.25]));

        let a =
            DenseOperator::from_fn(2, |j, k| Complex64::new((j * 2 + k + 1) as f64, 0.5)).unwrap();
        let b = DenseOperator::from_fn(3, |j, k| Complex64::new((j * 3 + k) as f64, -1.0)).unwrap();
        let ab = tensor_operator(&[a.clone(), b.clone()], &lim).unwrap();
        assert_eq!(ab.dim(), 6);
        assert_eq!(ab.get(0, 5), a.get(0, 1) * b.get(0, 2));
        assert!(!ab.is_hermitian());
    }

    #[test]
    fn expectation_examples() {
        let d = DenseOperator::diagonal(&[1.0, 0.5]);
        let v = StateVector::random_unit(2, &mut ChaCha8Rng::seed_from_u64(3));
        assert!((expectation(&v, &DenseOperator::identity(2)).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(expectation(&StateVector::basis(2, 0), &d).unwrap(), 1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_real(&[h, h]).unwrap();
        assert!((expectation(&plus, &d).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn expectation_errors() {
        let v = StateVector::basis(2, 0);
        let skew = DenseOperator::new(2, vec![c(1.0), c(1.0), c(0.0), c(1.0)]).unwrap();
        assert!(matches!(
            expectation(&v, &skew),
            Err(Error::NotHermitian(_))
        ));
        assert!(matches!(
            expectation(&v, &DenseOperator::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        let long = StateVector::from_real(&[1.0, 1.0]).unwrap();
        assert!(matches!(
            expectation(&long, &DenseOperator::identity(2)),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn lambda_max_examples() {
        let cfg = EigenConfig::default();
        let r = lambda_max(&DenseOperator::identity(8).scaled(1.5), &cfg).unwrap();
        assert!((r.value - 1.5).abs() < 1e-10);

        let r = lambda_max(&DenseOperator::diagonal(&[1.0, 0.5, 0.25]), &cfg).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
        assert!((r.witness.amps()[0].norm() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn lambda_max_zero_operator() {
        let zero = DenseOperator::diagonal(&[0.0; 4]);
        let r = lambda_max(&zero, &EigenConfig::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn power_iteration_reports_best_iterate_on_stall() {
        // Two nearly equal top eigenvalues and a tiny iteration budget.
        let op = DenseOperator::diagonal(&[1.0, 0.999_999, 0.1]);
        let cfg = EigenConfig {
            max_iters: 3,
            ..EigenConfig::default()
        };
        match power_iteration(&op, &cfg) {
            Err(Error::NotConverged {
                iterations,
                value,
                witness,
            }) => {
                assert_eq!(iterations, 3);
                assert!(value > 0.1 && value <= 1.0);
                assert_eq!(witness.dim(), 3);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
        // lambda_max falls back to Jacobi at this size.
        let r = lambda_max(&op, &cfg).unwrap();
        assert_eq!(r.method, EigenMethod::Jacobi);
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_handles_complex_hermitian() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1.
        let op = DenseOperator::new(
            2,
            vec![
                c(2.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
                c(2.0),
            ],
        )
        .unwrap();
        let (vals, vecs) = jacobi_eigen(&op).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
        let av = op.apply(&vecs[0]).unwrap();
        let resid = av.sub(&vecs[0].scaled(c(3.0))).unwrap().norm();
        assert!(resid < 1e-12);
    }

    #[test]
    fn unitary_check() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let had = DenseOperator::new(2, vec![c(h), c(h), c(h), c(-h)]).unwrap();
        assert!(had.is_unitary(1e-12));
        assert!(!DenseOperator::diagonal(&[1.0, 0.5]).is_unitary(1e-6));
    }
}
