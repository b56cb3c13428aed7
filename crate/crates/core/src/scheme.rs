//! Particle encodings: q states in C^D grouped into l orthonormal bases.
//!
//! Letter `e` is the state |i;j⟩ of basis `i` with `e = i·D + j`. The
//! per-particle acceptance operator is π(e) = (1 − 1/l)·I + (1/l)|e⟩⟨e| and the
//! acceptance operator of a codeword is the tensor product of its letters' π.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{tensor_operator, tensor_state, DenseOperator, Limits, StateVector};
use crate::report::fmt_sig;

/// Tolerance for unit norm and in-basis orthogonality of particle states.
pub const STATE_TOL: f64 = 1e-12;
/// Tolerance for generator unitarity.
pub const UNITARY_TOL: f64 = 1e-10;
/// Two states are phase-equivalent when |⟨u|v⟩| is within this of 1.
pub const PHASE_TOL: f64 = 1e-9;
/// Largest alphabet for which β is enumerated over all triples.
pub const MAX_ALPHABET: usize = 64;

/// A codeword E = (e₁, …, e_N) over the alphabet [0, q).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Codeword(Vec<usize>);

impl Codeword {
    pub fn new(symbols: Vec<usize>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Domain("codeword must have length N > 0".into()));
        }
        Ok(Codeword(symbols))
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Codeword> for Vec<usize> {
    fn from(cw: Codeword) -> Self {
        cw.0
    }
}

/// Position of a letter inside the basis family: `basis` is i, `index` is j.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisLabel {
    pub basis: usize,
    pub index: usize,
}

#[derive(Clone, Debug)]
pub struct EncodingScheme {
    q: usize,
    dim: usize,
    l: usize,
    states: Vec<StateVector>,
    gram: Vec<Complex64>,
    beta_bar: f64,
    beta: f64,
    generators: Option<Vec<DenseOperator>>,
}

/// Validates the particle states and computes β̄ and β exhaustively.
pub fn build_scheme(
    states: Vec<StateVector>,
    l: usize,
    generators: Option<Vec<DenseOperator>>,
) -> Result<EncodingScheme> {
    let q = states.len();
    if l == 0 {
        return Err(Error::Scheme("l must be at least 1".into()));
    }
    let dim = states.first().map(StateVector::dim).unwrap_or(0);
    if dim < 2 {
        return Err(Error::Scheme(format!(
            "particle dimension D = {dim} must be at least 2"
        )));
    }
    if q != l * dim {
        return Err(Error::Scheme(format!(
            "q = l·D violated: {q} states, l = {l}, D = {dim}"
        )));
    }
    if q > MAX_ALPHABET {
        return Err(Error::Scheme(format!(
            "alphabet q = {q} exceeds {MAX_ALPHABET}"
        )));
    }
    for (e, s) in states.iter().enumerate() {
        if s.dim() != dim {
            return Err(Error::Scheme(format!(
                "state {e} has dimension {}, expected D = {dim}",
                s.dim()
            )));
        }
        if !s.is_normalized(STATE_TOL) {
            return Err(Error::Scheme(format!(
                "state {e} is not unit-norm (norm {})",
                s.norm()
            )));
        }
    }
    let mut gram = vec![Complex64::new(0.0, 0.0); q * q];
    for a in 0..q {
        for b in 0..q {
            gram[a * q + b] = states[a].inner(&states[b]);
        }
    }
    for i in 0..l {
        for j in 0..dim {
            for k in (j + 1)..dim {
                let overlap = gram[(i * dim + j) * q + i * dim + k].norm();
                if overlap > STATE_TOL {
                    return Err(Error::Scheme(format!(
                        "basis {i} is not orthonormal: |⟨{i};{j}|{i};{k}⟩| = {overlap:e}"
                    )));
                }
            }
        }
    }
    let beta_bar = (0..q)
        .flat_map(|a| (0..q).filter(move |&b| b != a).map(move |b| (a, b)))
        .map(|(a, b)| gram[a * q + b].norm())
        .fold(0.0, f64::max);
    if beta_bar >= 1.0 - STATE_TOL {
        return Err(Error::Scheme(format!(
            "beta_bar = {beta_bar} is not below 1 (duplicate states up to phase)"
        )));
    }
    // β = max over triples not all equal of |⟨e|π(e'')|e'⟩|, where
    // ⟨e|π(e'')|e'⟩ = (1 − 1/l)⟨e|e'⟩ + (1/l)⟨e|e''⟩⟨e''|e'⟩.
    let w_id = 1.0 - 1.0 / l as f64;
    let w_proj = 1.0 / l as f64;
    let mut beta = 0.0f64;
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                if a == b && b == c {
                    continue;
                }
                let v = gram[a * q + b] * w_id + gram[a * q + c] * gram[c * q + b] * w_proj;
                beta = beta.max(v.norm());
            }
        }
    }
    let beta = snap_dyadic(beta);
    if beta >= 1.0 {
        return Err(Error::Scheme(format!("beta = {beta} is not below 1")));
    }
    if let Some(gens) = &generators {
        for (g_idx, g) in gens.iter().enumerate() {
            if g.dim() != dim {
                return Err(Error::Scheme(format!(
                    "generator {g_idx} has dimension {}, expected {dim}",
                    g.dim()
                )));
            }
        }
    }
    Ok(EncodingScheme {
        q,
        dim,
        l,
        states,
        gram,
        beta_bar,
        beta,
        generators,
    })
}

/// Rounds away last-bit noise when `x` sits within 1e-14 of a multiple of 2⁻⁴⁰.
fn snap_dyadic(x: f64) -> f64 {
    let grid = 2f64.powi(40);
    let r = (x * grid).round() / grid;
    if (x - r).abs() < 1e-14 {
        r
    } else {
        x
    }
}

/// The four BB84 polarization states: M(0) = {|0⟩, |1⟩}, M(1) = {|+⟩, |−⟩}
/// with |3⟩ = (−1, 1)/√2.
pub fn bb84_scheme() -> EncodingScheme {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let states = [[1.0, 0.0], [0.0, 1.0], [h, h], [-h, h]]
        .iter()
        .map(|s| StateVector::from_real(s).expect("finite"))
        .collect();
    build_scheme(states, 2, Some(vec![hadamard()])).expect("BB84 states are valid")
}

/// Six-state encoding: the Z, X and Y eigenbases of a qubit (l = 3).
pub fn six_state_scheme() -> EncodingScheme {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let states = vec![
        vec![c(1.0, 0.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(1.0, 0.0)],
        vec![c(h, 0.0), c(h, 0.0)],
        vec![c(-h, 0.0), c(h, 0.0)],
        vec![c(h, 0.0), c(0.0, h)],
        vec![c(h, 0.0), c(0.0, -h)],
    ]
    .into_iter()
    .map(|s| StateVector::new(s).expect("finite"))
    .collect();
    build_scheme(states, 3, None).expect("six-state encoding is valid")
}

/// A single orthonormal basis of C^D (l = 1).
pub fn computational_scheme(dim: usize) -> Result<EncodingScheme> {
    let states = (0..dim).map(|j| StateVector::basis(dim, j)).collect();
    build_scheme(states, 1, Some(vec![DenseOperator::identity(dim)]))
}

pub fn hadamard() -> DenseOperator {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = |x: f64| Complex64::new(x, 0.0);
    DenseOperator::new(2, vec![c(h), c(h), c(h), c(-h)]).expect("finite")
}

impl EncodingScheme {
    pub fn q(&self) -> usize {
        self.q
    }

    /// Particle dimension D.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of bases l.
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn beta_bar(&self) -> f64 {
        self.beta_bar
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn generators(&self) -> Option<&[DenseOperator]> {
        self.generators.as_deref()
    }

    pub fn state(&self, e: usize) -> Result<&StateVector> {
        self.states.get(e).ok_or(Error::SymbolOutOfRange {
            symbol: e,
            q: self.q,
        })
    }

    /// ⟨e|e'⟩
    pub fn overlap(&self, e: usize, e_prime: usize) -> Complex64 {
        self.gram[e * self.q + e_prime]
    }

    pub fn basis_of(&self, e: usize) -> Result<BasisLabel> {
        self.check_symbol(e)?;
        Ok(BasisLabel {
            basis: e / self.dim,
            index: e % self.dim,
        })
    }

    pub fn letter(&self, label: BasisLabel) -> usize {
        label.basis * self.dim + label.index
    }

    /// Weight of the identity term in π(e): 1 − 1/l.
    pub fn miss_weight(&self) -> f64 {
        1.0 - 1.0 / self.l as f64
    }

    fn check_symbol(&self, e: usize) -> Result<()> {
        if e < self.q {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange {
                symbol: e,
                q: self.q,
            })
        }
    }

    fn check_codeword(&self, cw: &Codeword) -> Result<()> {
        cw.symbols().iter().try_for_each(|&e| self.check_symbol(e))
    }

    /// π(e) = (1 − 1/l)·I_D + (1/l)|e⟩⟨e|
    pub fn pi(&self, e: usize) -> Result<DenseOperator> {
        self.check_symbol(e)?;
        let w = self.miss_weight();
        if self.l == 1 {
            return Ok(DenseOperator::projector(&self.states[e]));
        }
        DenseOperator::identity(self.dim)
            .scaled(w)
            .add(&DenseOperator::projector(&self.states[e]).scaled(1.0 / self.l as f64))
    }

    /// |Ψ_E⟩ = |e₁⟩ ⊗ … ⊗ |e_N⟩
    pub fn commitment_state(&self, cw: &Codeword, limits: &Limits) -> Result<StateVector> {
        self.check_codeword(cw)?;
        let parts: Vec<StateVector> = cw
            .symbols()
            .iter()
            .map(|&e| self.states[e].clone())
            .collect();
        tensor_state(&parts, limits)
    }

    /// P_E = π(e₁) ⊗ … ⊗ π(e_N)
    pub fn acceptance_operator(&self, cw: &Codeword, limits: &Limits) -> Result<DenseOperator> {
        self.check_codeword(cw)?;
        let parts = cw
            .symbols()
            .iter()
            .map(|&e| self.pi(e))
            .collect::<Result<Vec<_>>>()?;
        tensor_operator(&parts, limits)
    }

    /// Letters of the shifted codeword: each (i, j) becomes (i, (j + Δj) mod D).
    pub fn shifted_codeword(&self, cw: &Codeword, delta: &[usize]) -> Result<Codeword> {
        if delta.len() != cw.len() {
            return Err(Error::LengthMismatch {
                what: "shift ΔJ",
                expected: cw.len(),
                found: delta.len(),
            });
        }
        self.check_codeword(cw)?;
        let symbols = cw
            .symbols()
            .iter()
            .zip(delta)
            .map(|(&e, &dj)| {
                if dj >= self.dim {
                    return Err(Error::Domain(format!(
                        "shift {dj} not in [0, {})",
                        self.dim
                    )));
                }
                let BasisLabel { basis, index } = self.basis_of(e)?;
                Ok(self.letter(BasisLabel {
                    basis,
                    index: (index + dj) % self.dim,
                }))
            })
            .collect::<Result<Vec<_>>>()?;
        Codeword::new(symbols)
    }

    /// |Ψ_E;ΔJ⟩, an eigenvector of P_E with eigenvalue (1 − 1/l)^HW(ΔJ).
    pub fn shifted_state(
        &self,
        cw: &Codeword,
        delta: &[usize],
        limits: &Limits,
    ) -> Result<StateVector> {
        let shifted = self.shifted_codeword(cw, delta)?;
        self.commitment_state(&shifted, limits)
    }

    /// Checks that every generator maps each basis onto some basis, with
    /// vectors identified up to a global phase.
    pub fn check_group_symmetry(&self) -> Result<SymmetryReport> {
        let gens = self
            .generators
            .as_ref()
            .ok_or_else(|| Error::Scheme("no group generators supplied".into()))?;
        let mut permutations = Vec::with_capacity(gens.len());
        for (g_idx, g) in gens.iter().enumerate() {
            if !g.is_unitary(UNITARY_TOL) {
                return Err(Error::Scheme(format!("generator {g_idx} is not unitary")));
            }
            let mut perm = Vec::with_capacity(self.l);
            for i in 0..self.l {
                let images = (0..self.dim)
                    .map(|j| g.apply(&self.states[i * self.dim + j]))
                    .collect::<Result<Vec<_>>>()?;
                match (0..self.l).find(|&target| self.basis_matches(&images, target)) {
                    Some(target) => perm.push(target),
                    None => {
                        return Ok(SymmetryReport {
                            permutations,
                            violation: Some(SymmetryViolation {
                                generator: g_idx,
                                basis: i,
                            }),
                        })
                    }
                }
            }
            permutations.push(perm);
        }
        Ok(SymmetryReport {
            permutations,
            violation: None,
        })
    }

    fn basis_matches(&self, images: &[StateVector], target: usize) -> bool {
        let mut used = vec![false; self.dim];
        images.iter().all(|img| {
            let hit = (0..self.dim).find(|&j| {
                !used[j]
                    && (img.inner(&self.states[target * self.dim + j]).norm() - 1.0).abs()
                        <= PHASE_TOL
            });
            match hit {
                Some(j) => {
                    used[j] = true;
                    true
                }
                None => false,
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryViolation {
    pub generator: usize,
    /// Basis whose image matches no basis.
    pub basis: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryReport {
    /// Induced basis permutation per generator that passed.
    pub permutations: Vec<Vec<usize>>,
    pub violation: Option<SymmetryViolation>,
}

impl SymmetryReport {
    pub fn is_symmetric(&self) -> bool {
        self.violation.is_none()
    }
}

/// Reads the plain-text scheme definition:
///
/// ```text
/// scheme q=4 D=2 l=2
/// 0: 1,0 0,0
/// 1: 0,0 1,0
/// ```
pub fn parse_scheme_file(text: &str) -> Result<EncodingScheme> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty scheme file"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("scheme") {
        return Err(Error::parse(
            hline,
            "expected header `scheme q=<int> D=<int> l=<int>`",
        ));
    }
    let (mut q, mut dim, mut l) = (None, None, None);
    for f in fields {
        let (k, v) = f
            .split_once('=')
            .ok_or_else(|| Error::parse(hline, format!("malformed field `{f}`")))?;
        let v: usize = v
            .parse()
            .map_err(|_| Error::parse(hline, format!("`{k}` is not an integer")))?;
        match k {
            "q" => q = Some(v),
            "D" => dim = Some(v),
            "l" => l = Some(v),
            _ => return Err(Error::parse(hline, format!("unknown header key `{k}`"))),
        }
    }
    let (q, dim, l) = match (q, dim, l) {
        (Some(q), Some(d), Some(l)) => (q, d, l),
        _ => return Err(Error::parse(hline, "header must define q, D and l")),
    };
    let mut states: Vec<Option<StateVector>> = vec![None; q];
    for (ln, line) in lines {
        let (idx, rest) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(ln, "expected `e: re,im ...`"))?;
        let e: usize = idx
            .trim()
            .parse()
            .map_err(|_| Error::parse(ln, "state index is not an integer"))?;
        if e >= q {
            return Err(Error::parse(
                ln,
                format!("state index {e} not below q = {q}"),
            ));
        }
        let amps = rest
            .split_whitespace()
            .map(|pair| {
                let (re, im) = pair
                    .split_once(',')
                    .ok_or_else(|| Error::parse(ln, format!("expected `re,im`, found `{pair}`")))?;
                let re: f64 = re
                    .parse()
                    .map_err(|_| Error::parse(ln, format!("bad number `{re}`")))?;
                let im: f64 = im
                    .parse()
                    .map_err(|_| Error::parse(ln, format!("bad number `{im}`")))?;
                Ok(Complex64::new(re, im))
            })
            .collect::<Result<Vec<_>>>()?;
        if amps.len() != dim {
            return Err(Error::parse(
                ln,
                format!("expected {dim} entries, found {}", amps.len()),
            ));
        }
        if states[e].is_some() {
            return Err(Error::parse(ln, format!("state {e} defined twice")));
        }
        states[e] = Some(StateVector::new(amps).map_err(|err| Error::parse(ln, err.to_string()))?);
    }
    let states = states
        .into_iter()
        .enumerate()
        .map(|(e, s)| s.ok_or_else(|| Error::Scheme(format!("state {e} missing"))))
        .collect::<Result<Vec<_>>>()?;
    build_scheme(states, l, None)
}

pub fn write_scheme_file(scheme: &EncodingScheme) -> String {
    let mut out = format!("scheme q={} D={} l={}\n", scheme.q, scheme.dim, scheme.l);
    for (e, s) in scheme.states.iter().enumerate() {
        let _ = write!(out, "{e}:");
        for z in s.amps() {
            let _ = write!(out, " {},{}", fmt_sig(z.re, 17), fmt_sig(z.im, 17));
        }
        out.push('\n');
    }
    out
}
