//! Cheating Alice: brute-force optimal cheat value λ_max(Q), exact and
//! simulated acceptance of concrete strategies, and audits of the overlap
//! and eigenvalue structure the binding argument relies on.

use std::collections::HashSet;

use num_complex::Complex64;
use rand::Rng;

use crate::bounds::{binding_bound_exact, binding_bound_simple, epsilons_full, Bound};
use crate::codes::QaryCode;
use crate::engine::{commit_phase, verify_open, ChannelModel, Purpose, RandomSource, SentState};
use crate::error::{Error, Result};
use crate::linalg::{lambda_max, DenseOperator, EigenConfig, EigenMethod, Limits, StateVector};
use crate::report::{fmt_report, Table};
use crate::scheme::{Codeword, EncodingScheme};

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const OVERLAP_TOL: f64 = 1e-10;

fn check_strings(code: &QaryCode, strings: &[Vec<usize>]) -> Result<()> {
    if strings.is_empty() {
        return Err(Error::Strategy("at least one string is required".into()));
    }
    let mut seen = HashSet::new();
    for s in strings {
        if s.len() != code.dimension() {
            return Err(Error::LengthMismatch {
                what: "message",
                expected: code.dimension(),
                found: s.len(),
            });
        }
        if !seen.insert(s) {
            return Err(Error::Strategy(format!(
                "duplicate string {}",
                fmt_string(s)
            )));
        }
    }
    Ok(())
}

/// Symbols joined by ':'.
pub fn fmt_string(s: &[usize]) -> String {
    s.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(":")
}

/// Q = Σᵢ P_{E(Aᵢ)}
pub fn build_q(
    scheme: &EncodingScheme,
    code: &QaryCode,
    strings: &[Vec<usize>],
    limits: &Limits,
) -> Result<DenseOperator> {
    check_strings(code, strings)?;
    let mut q: Option<DenseOperator> = None;
    for s in strings {
        let p = scheme.acceptance_operator(&code.encode(s)?, limits)?;
        q = Some(match q {
            None => p,
            Some(acc) => acc.add(&p)?,
        });
    }
    Ok(q.expect("nonempty"))
}

#[derive(Clone, Debug)]
pub struct CheatValue {
    pub value: f64,
    pub witness: StateVector,
    pub method: EigenMethod,
}

pub fn optimal_cheat_value(q: &DenseOperator, cfg: &EigenConfig) -> Result<CheatValue> {
    let r = lambda_max(q, cfg)?;
    Ok(CheatValue {
        value: r.value,
        witness: r.witness,
        method: r.method,
    })
}

/// Applies `parts[0] ⊗ … ⊗ parts[n-1]` to `psi` one factor at a time.
pub fn apply_product(parts: &[DenseOperator], psi: &StateVector) -> Result<StateVector> {
    let total: usize = parts.iter().map(DenseOperator::dim).product();
    if total != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: total,
            found: psi.dim(),
        });
    }
    let mut cur = psi.amps().to_vec();
    let mut next = vec![Complex64::new(0.0, 0.0); total];
    let mut stride = total;
    for op in parts {
        let d = op.dim();
        stride /= d;
        let block = d * stride;
        for base in (0..total).step_by(block) {
            for inner in 0..stride {
                for a in 0..d {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for b in 0..d {
                        acc += op.get(a, b) * cur[base + b * stride + inner];
                    }
                    next[base + a * stride + inner] = acc;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    StateVector::new(cur)
}

fn pi_factors(scheme: &EncodingScheme, cw: &Codeword) -> Result<Vec<DenseOperator>> {
    cw.symbols().iter().map(|&e| scheme.pi(e)).collect()
}

/// What a cheater sends, in a form suitable for exact evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum CheatState {
    Product(Vec<StateVector>),
    Pure(StateVector),
    /// Weighted product states.
    Mixture(Vec<(f64, Vec<StateVector>)>),
}

fn product_acceptance(
    scheme: &EncodingScheme,
    parts: &[StateVector],
    cw: &Codeword,
) -> Result<f64> {
    if parts.len() != cw.len() {
        return Err(Error::LengthMismatch {
            what: "sent particles",
            expected: cw.len(),
            found: parts.len(),
        });
    }
    let w = scheme.miss_weight();
    let mut acc = 1.0;
    for (psi, &e) in parts.iter().zip(cw.symbols()) {
        if psi.dim() != scheme.dim() {
            return Err(Error::DimensionMismatch {
                expected: scheme.dim(),
                found: psi.dim(),
            });
        }
        let letter = scheme.state(e)?;
        if letter == psi {
            // |e⟩ is an exact eigenvector of π(e) with eigenvalue 1
            continue;
        }
        acc *= w * psi.norm_sqr() + letter.inner(psi).norm_sqr() / scheme.l() as f64;
    }
    Ok(acc)
}

/// Tr ρ P_{E(opened)}
pub fn exact_acceptance(
    scheme: &EncodingScheme,
    code: &QaryCode,
    sent: &CheatState,
    opened: &[usize],
) -> Result<f64> {
    let cw = code.encode(opened)?;
    match sent {
        CheatState::Product(parts) => product_acceptance(scheme, parts, &cw),
        CheatState::Pure(psi) => {
            let applied = apply_product(&pi_factors(scheme, &cw)?, psi)?;
            Ok(psi.inner(&applied).re)
        }
        CheatState::Mixture(items) => items
            .iter()
            .map(|(w, parts)| product_acceptance(scheme, parts, &cw).map(|a| w * a))
            .sum(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CheatKind {
    /// Commit honestly to one string, then open another.
    WrongCommitment {
        committed: Vec<usize>,
    },
    Superposition {
        strings: Vec<Vec<usize>>,
        amplitudes: Vec<Complex64>,
    },
    Mixture {
        strings: Vec<Vec<usize>>,
        weights: Vec<f64>,
    },
    Custom(StateVector),
}

#[derive(Clone, Debug, PartialEq)]
pub enum OpenRule {
    Fixed(Vec<usize>),
    /// Open the first listed string that the transcript accepts.
    BestOf(Vec<Vec<usize>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheatStrategy {
    pub id: String,
    pub kind: CheatKind,
    pub open: OpenRule,
}

const WEIGHT_TOL: f64 = 1e-9;

impl CheatStrategy {
    pub fn honest(message: Vec<usize>) -> Self {
        CheatStrategy {
            id: "honest".into(),
            kind: CheatKind::WrongCommitment {
                committed: message.clone(),
            },
            open: OpenRule::Fixed(message),
        }
    }

    /// Strings whose acceptance enters the binding sum.
    pub fn opened_strings(&self) -> Vec<Vec<usize>> {
        match &self.open {
            OpenRule::Fixed(s) => vec![s.clone()],
            OpenRule::BestOf(list) => list.clone(),
        }
    }

    pub fn validate(&self, code: &QaryCode) -> Result<()> {
        check_strings(code, &self.opened_strings())?;
        match &self.kind {
            CheatKind::WrongCommitment { committed } => {
                check_strings(code, std::slice::from_ref(committed))
            }
            CheatKind::Superposition {
                strings,
                amplitudes,
            } => {
                check_strings(code, strings)?;
                if amplitudes.len() != strings.len() {
                    return Err(Error::Strategy(
                        "one amplitude per string is required".into(),
                    ));
                }
                let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
                if (norm - 1.0).abs() > WEIGHT_TOL {
                    return Err(Error::Strategy(format!(
                        "amplitudes have squared norm {norm}, expected 1"
                    )));
                }
                Ok(())
            }
            CheatKind::Mixture { strings, weights } => {
                check_strings(code, strings)?;
                if weights.len() != strings.len() || weights.iter().any(|&w| w.is_nan() || w < 0.0)
                {
                    return Err(Error::Strategy(
                        "one nonnegative weight per string is required".into(),
                    ));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > WEIGHT_TOL {
                    return Err(Error::Strategy(format!(
                        "weights sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
            CheatKind::Custom(psi) => {
                if !psi.is_normalized(crate::engine::SENT_NORM_TOL) {
                    return Err(Error::NotNormalized(psi.norm()));
                }
                Ok(())
            }
        }
    }

    /// The sent state for exact evaluation.
    pub fn cheat_state(
        &self,
        scheme: &EncodingScheme,
        code: &QaryCode,
        limits: &Limits,
    ) -> Result<CheatState> {
        self.validate(code)?;
        let product = |s: &[usize]| -> Result<Vec<StateVector>> {
            code.encode(s)?
                .symbols()
                .iter()
                .map(|&e| scheme.state(e).cloned())
                .collect()
        };
        Ok(match &self.kind {
            CheatKind::WrongCommitment { committed } => CheatState::Product(product(committed)?),
            CheatKind::Superposition {
                strings,
                amplitudes,
            } => {
                let dim = (scheme.dim() as u128).pow(code.len() as u32);
                if dim > limits.max_state_dim as u128 {
                    return Err(Error::DimensionCap {
                        dim,
                        cap: limits.max_state_dim,
                    });
                }
                let mut acc = StateVector::new(vec![Complex64::new(0.0, 0.0); dim as usize])?;
                for (s, a) in strings.iter().zip(amplitudes) {
                    let psi = scheme.commitment_state(&code.encode(s)?, limits)?;
                    acc = acc.add(&psi.scaled(*a))?;
                }
                if acc.norm() < 1e-12 {
                    return Err(Error::Strategy(
                        "superposition cancels to the zero vector".into(),
                    ));
                }
                CheatState::Pure(acc.normalized()?)
            }
            CheatKind::Mixture { strings, weights } => CheatState::Mixture(
                strings
                    .iter()
                    .zip(weights)
                    .map(|(s, &w)| Ok((w, product(s)?)))
                    .collect::<Result<_>>()?,
            ),
            CheatKind::Custom(psi) => {
                let dim = (scheme.dim() as u128).pow(code.len() as u32);
                if psi.dim() as u128 != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim as usize,
                        found: psi.dim(),
                    });
                }
                CheatState::Pure(psi.clone())
            }
        })
    }
}

fn sample_component<R: Rng>(weights: &[(f64, Vec<StateVector>)], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, (w, _)) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|(w, _)| *w > 0.0).unwrap_or(0)
}

/// Bounds at the α that gives the smallest applicable exact bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundContext {
    pub alpha: Option<u64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub simple: Bound,
    pub exact: Bound,
}

impl BoundContext {
    pub fn applicable(&self) -> bool {
        self.simple.is_applicable() || self.exact.is_applicable()
    }

    /// The tightest applicable bound.
    pub fn best(&self) -> Option<f64> {
        match (self.simple.value(), self.exact.value()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }
}

pub fn bounds_at(
    scheme: &EncodingScheme,
    code: &QaryCode,
    r: usize,
    alpha: u64,
) -> Result<BoundContext> {
    let (eps1, eps2) = epsilons_full(
        scheme.beta(),
        code.distance() as u64,
        alpha,
        scheme.l() as u64,
        code.len() as u64,
        scheme.dim() as u64,
    )?;
    Ok(BoundContext {
        alpha: Some(alpha),
        eps1: Some(eps1),
        eps2: Some(eps2),
        simple: binding_bound_simple(r as f64, eps1, eps2),
        exact: binding_bound_exact(r as f64, eps1, eps2),
    })
}

pub fn best_bounds(scheme: &EncodingScheme, code: &QaryCode, r: usize) -> Result<BoundContext> {
    let mut best = BoundContext {
        alpha: None,
        eps1: None,
        eps2: None,
        simple: Bound::NotApplicable("no alpha with 0 < alpha < d"),
        exact: Bound::NotApplicable("no alpha with 0 < alpha < d"),
    };
    for alpha in 1..code.distance() as u64 {
        let ctx = bounds_at(scheme, code, r, alpha)?;
        let better = match (ctx.best(), best.best()) {
            (Some(a), Some(b)) => a < b,
            (Some(_), None) => true,
            (None, _) => best.alpha.is_none(),
        };
        if better {
            best = ctx;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug)]
pub struct BindingAudit {
    pub strings: Vec<Vec<usize>>,
    pub lambda_max: f64,
    pub witness: StateVector,
    pub method: EigenMethod,
    /// Acceptance of each string by the optimal cheating state.
    pub per_string: Vec<f64>,
    pub bounds: BoundContext,
}

impl BindingAudit {
    pub fn r(&self) -> usize {
        self.strings.len()
    }

    /// An applicable bound exceeding r says nothing.
    pub fn bound_vacuous(&self) -> bool {
        self.bounds.best().is_none_or(|b| b >= self.r() as f64)
    }

    /// λ_max above an applicable bound.
    pub fn violated(&self) -> bool {
        self.bounds
            .best()
            .is_some_and(|b| self.lambda_max > b + 1e-9)
    }

    pub fn verdict(&self) -> &'static str {
        if self.violated() {
            "violation"
        } else if !self.bounds.applicable() {
            "bound not applicable"
        } else if self.bound_vacuous() {
            "bound vacuous"
        } else {
            "pass"
        }
    }
}

/// Brute-force binding check. With `alpha = None` the bound is taken at the
/// α giving the tightest value.
pub fn binding_audit(
    scheme: &EncodingScheme,
    code: &QaryCode,
    strings: &[Vec<usize>],
    alpha: Option<u64>,
    cfg: &EigenConfig,
    limits: &Limits,
) -> Result<BindingAudit> {
    let q = build_q(scheme, code, strings, limits)?;
    let best = optimal_cheat_value(&q, cfg)?;
    let witness = CheatState::Pure(best.witness.clone());
    let per_string = strings
        .iter()
        .map(|s| exact_acceptance(scheme, code, &witness, s))
        .collect::<Result<_>>()?;
    let bounds = match alpha {
        Some(a) => bounds_at(scheme, code, strings.len(), a)?,
        None => best_bounds(scheme, code, strings.len())?,
    };
    Ok(BindingAudit {
        strings: strings.to_vec(),
        lambda_max: best.value,
        witness: best.witness,
        method: best.method,
        per_string,
        bounds,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalityAudit {
    pub alpha: u64,
    /// max |⟨Ψ_{E(A)}|Ψ_{E(A′)}⟩| over distinct strings, against β̄^d.
    pub pair_max: f64,
    pub pair_bound: f64,
    /// max overlap of shifted states with HW < α across distinct strings,
    /// against β̄^{d−α} and against the guaranteed β̄^{max(d−2α+2, 0)}.
    pub shifted_max: f64,
    pub shifted_bound: f64,
    pub shifted_guaranteed_bound: f64,
    pub shifted_pairs: u64,
    pub exhaustive: bool,
    /// Same maxima for the operator-mediated constant β, reported alongside.
    pub beta_bound: f64,
}

impl OrthogonalityAudit {
    pub fn pairs_ok(&self) -> bool {
        self.pair_max <= self.pair_bound + OVERLAP_TOL
    }

    pub fn shifted_ok(&self) -> bool {
        self.shifted_max <= self.shifted_bound + OVERLAP_TOL
    }

    pub fn shifted_guaranteed_ok(&self) -> bool {
        self.shifted_max <= self.shifted_guaranteed_bound + OVERLAP_TOL
    }
}

fn product_overlap(scheme: &EncodingScheme, a: &[usize], b: &[usize]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| scheme.overlap(x, y).norm())
        .product()
}

/// All shifts ΔJ ∈ [0,D)^N with HW(ΔJ) < alpha.
fn low_weight_shifts(n: usize, dim: usize, alpha: u64) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    fn rec(
        pos: usize,
        weight: u64,
        alpha: u64,
        dim: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        rec(pos + 1, weight, alpha, dim, cur, out);
        if weight + 1 < alpha {
            for v in 1..dim {
                cur[pos] = v;
                rec(pos + 1, weight + 1, alpha, dim, cur, out);
            }
            cur[pos] = 0;
        }
    }
    if alpha > 0 {
        rec(0, 0, alpha, dim, &mut cur, &mut out);
    }
    out
}

fn random_shift<R: Rng>(n: usize, dim: usize, max_weight: u64, rng: &mut R) -> Vec<usize> {
    let w = rng.gen_range(0..=max_weight.min(n as u64)) as usize;
    let mut delta = vec![0; n];
    let positions = rand::seq::index::sample(rng, n, w);
    for p in positions {
        delta[p] = rng.gen_range(1..dim);
    }
    delta
}

/// Exhaustive below this many shifted pairs, sampled above.
pub const EXHAUSTIVE_PAIR_LIMIT: u64 = 2_000_000;

pub fn orthogonality_audit(
    scheme: &EncodingScheme,
    code: &QaryCode,
    strings: &[Vec<usize>],
    alpha: u64,
    samples: u64,
    seed: u64,
) -> Result<OrthogonalityAudit> {
    check_strings(code, strings)?;
    let d = code.distance() as u64;
    if alpha == 0 || alpha >= d {
        return Err(Error::Domain(format!(
            "need 0 < alpha < d, got alpha = {alpha}, d = {d}"
        )));
    }
    let cws: Vec<Codeword> = strings
        .iter()
        .map(|s| code.encode(s))
        .collect::<Result<_>>()?;
    let bb = scheme.beta_bar();
    let mut pair_max: f64 = 0.0;
    for i in 0..cws.len() {
        for j in (i + 1)..cws.len() {
            pair_max = pair_max.max(product_overlap(scheme, cws[i].symbols(), cws[j].symbols()));
        }
    }
    let (n, dim) = (code.len(), scheme.dim());
    let shifts_count = crate::bounds::f_alpha(n as u64, dim as u64, alpha);
    let pair_count = cws.len() as u64 * (cws.len() as u64 - 1) / 2;
    let exhaustive = num_traits::ToPrimitive::to_u64(&(&shifts_count * &shifts_count))
        .is_some_and(|c| c.saturating_mul(pair_count) <= EXHAUSTIVE_PAIR_LIMIT);
    let mut shifted_max: f64 = 0.0;
    let mut shifted_pairs = 0u64;
    if exhaustive {
        let shifts = low_weight_shifts(n, dim, alpha);
        let shifted: Vec<Vec<Codeword>> = cws
            .iter()
            .map(|cw| {
                shifts
                    .iter()
                    .map(|dj| scheme.shifted_codeword(cw, dj))
                    .collect()
            })
            .collect::<Result<_>>()?;
        for i in 0..cws.len() {
            for j in (i + 1)..cws.len() {
                for a in &shifted[i] {
                    for b in &shifted[j] {
                        shifted_max =
                            shifted_max.max(product_overlap(scheme, a.symbols(), b.symbols()));
                        shifted_pairs += 1;
                    }
                }
            }
        }
    } else if cws.len() > 1 {
        let mut rng = RandomSource::new(seed).stream(Purpose::Strategy);
        for _ in 0..samples {
            let i = rng.gen_range(0..cws.len());
            let j = (i + rng.gen_range(1..cws.len())) % cws.len();
            let a = scheme.shifted_codeword(&cws[i], &random_shift(n, dim, alpha - 1, &mut rng))?;
            let b = scheme.shifted_codeword(&cws[j], &random_shift(n, dim, alpha - 1, &mut rng))?;
            shifted_max = shifted_max.max(product_overlap(scheme, a.symbols(), b.symbols()));
            shifted_pairs += 1;
        }
    }
    let guaranteed_exp = (d as i64 - 2 * alpha as i64 + 2).max(0) as i32;
    Ok(OrthogonalityAudit {
        alpha,
        pair_max,
        pair_bound: bb.powi(d as i32),
        shifted_max,
        shifted_bound: bb.powi((d - alpha) as i32),
        shifted_guaranteed_bound: bb.powi(guaranteed_exp),
        shifted_pairs,
        exhaustive,
        beta_bound: scheme.beta().powi((d - alpha) as i32),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftSelection {
    Exhaustive,
    Sampled { count: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenAudit {
    pub tested: u64,
    pub max_residual: f64,
    pub exhaustive: bool,
    /// Largest `‖P_E Φ‖ / ‖Φ‖` over random Φ on shifts of weight ≥ α,
    /// with the limit (1 − 1/l)^α.
    pub decay: Option<(u64, f64, f64)>,
}

impl EigenAudit {
    pub fn residual_ok(&self) -> bool {
        self.max_residual <= RESIDUAL_TOL
    }

    pub fn decay_ok(&self) -> bool {
        self.decay
            .is_none_or(|(_, ratio, limit)| ratio <= limit * (1.0 + 1e-12) + 1e-12)
    }
}

fn all_shifts(n: usize, dim: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = dim.pow(n as u32);
    (0..total).map(move |mut x| {
        let mut v = vec![0; n];
        for slot in v.iter_mut().rev() {
            *slot = x % dim;
            x /= dim;
        }
        v
    })
}

/// Exhaustive audits apply up to this length; longer codes are sampled.
pub const EXHAUSTIVE_EIGEN_MAX_N: usize = 4;

/// Residuals `‖P_E|Ψ_E;ΔJ⟩ − (1−1/l)^{HW}|Ψ_E;ΔJ⟩‖`, plus the heavy-shift norm
/// check when `decay = Some((alpha, samples, seed))`.
pub fn eigenstructure_audit(
    scheme: &EncodingScheme,
    code: &QaryCode,
    message: &[usize],
    selection: ShiftSelection,
    decay: Option<(u64, u64, u64)>,
    limits: &Limits,
) -> Result<EigenAudit> {
    let cw = code.encode(message)?;
    let (n, dim) = (code.len(), scheme.dim());
    let factors = pi_factors(scheme, &cw)?;
    let w = scheme.miss_weight();
    let shifts: Vec<Vec<usize>> = match selection {
        ShiftSelection::Exhaustive => {
            if (dim as u128).pow(n as u32) > limits.max_state_dim as u128 {
                return Err(Error::DimensionCap {
                    dim: (dim as u128).pow(n as u32),
                    cap: limits.max_state_dim,
                });
            }
            all_shifts(n, dim).collect()
        }
        ShiftSelection::Sampled { count, seed } => {
            let mut rng = RandomSource::new(seed).stream(Purpose::Strategy);
            (0..count)
                .map(|_| random_shift(n, dim, n as u64, &mut rng))
                .collect()
        }
    };
    let mut max_residual: f64 = 0.0;
    for dj in &shifts {
        let psi = scheme.shifted_state(&cw, dj, limits)?;
        let hw = dj.iter().filter(|&&x| x != 0).count() as i32;
        let expected = psi.scaled(Complex64::new(w.powi(hw), 0.0));
        let residual = apply_product(&factors, &psi)?.sub(&expected)?.norm();
        max_residual = max_residual.max(residual);
    }
    let decay = match decay {
        None => None,
        Some((alpha, samples, seed)) => {
            let heavy: Vec<StateVector> = all_shifts(n, dim)
                .filter(|dj| dj.iter().filter(|&&x| x != 0).count() as u64 >= alpha)
                .map(|dj| scheme.shifted_state(&cw, &dj, limits))
                .collect::<Result<_>>()?;
            let limit = w.powi(alpha as i32);
            let mut rng = RandomSource::new(seed).stream(Purpose::Strategy);
            let mut worst: f64 = 0.0;
            if !heavy.is_empty() {
                for _ in 0..samples {
                    let mut phi = vec![Complex64::new(0.0, 0.0); heavy[0].dim()];
                    for basis_state in &heavy {
                        let c = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                        for (out, x) in phi.iter_mut().zip(basis_state.amps()) {
                            *out += c * x;
                        }
                    }
                    let phi = StateVector::new(phi)?;
                    let ratio = apply_product(&factors, &phi)?.norm() / phi.norm();
                    worst = worst.max(ratio);
                }
            }
            Some((alpha, worst, limit))
        }
    };
    Ok(EigenAudit {
        tested: shifts.len() as u64,
        max_residual,
        exhaustive: selection == ShiftSelection::Exhaustive,
        decay,
    })
}

#[derive(Clone, Debug)]
pub struct CheatReport {
    pub strategy: String,
    pub strings: Vec<Vec<usize>>,
    pub exact: Vec<f64>,
    pub hits: Vec<u64>,
    /// Sessions in which the opening rule found an accepted string.
    pub opened_hits: u64,
    pub trials: u64,
    /// Standard error of the per-session sum of acceptance indicators.
    pub sum_std_error: f64,
    pub lambda_max: Option<f64>,
    pub bounds: BoundContext,
}

impl CheatReport {
    pub fn empirical(&self) -> Vec<f64> {
        self.hits
            .iter()
            .map(|&h| h as f64 / self.trials as f64)
            .collect()
    }

    pub fn sum_exact(&self) -> f64 {
        self.exact.iter().sum()
    }

    pub fn sum_empirical(&self) -> f64 {
        self.empirical().iter().sum()
    }

    /// Every per-string rate and the sum lie within `k` standard errors of
    /// their exact values. Only meaningful on a noiseless channel.
    pub fn consistent(&self, k: f64) -> bool {
        let n = self.trials as f64;
        let per_string = self.exact.iter().zip(self.empirical()).all(|(&p, e)| {
            let sigma = (p * (1.0 - p) / n).sqrt();
            (e - p).abs() <= k * sigma + 1e-12
        });
        per_string
            && (self.sum_empirical() - self.sum_exact()).abs() <= k * self.sum_std_error + 1e-12
    }
}

/// Monte Carlo campaign: every session draws its own streams from
/// `RandomSource::new(seed).session(i)`, and each opened string is checked
/// against the same measurement record.
#[allow(clippy::too_many_arguments)]
pub fn run_cheat(
    strategy: &CheatStrategy,
    scheme: &EncodingScheme,
    code: &QaryCode,
    channel: &ChannelModel,
    t: u64,
    trials: u64,
    seed: u64,
    limits: &Limits,
) -> Result<CheatReport> {
    if trials == 0 {
        return Err(Error::Strategy("trials must be at least 1".into()));
    }
    let state = strategy.cheat_state(scheme, code, limits)?;
    let strings = strategy.opened_strings();
    let exact = strings
        .iter()
        .map(|s| exact_acceptance(scheme, code, &state, s))
        .collect::<Result<Vec<_>>>()?;
    let master = RandomSource::new(seed);
    let mut hits = vec![0u64; strings.len()];
    let mut opened_hits = 0;
    let (mut sum_x, mut sum_x2) = (0.0f64, 0.0f64);
    for i in 0..trials {
        let src = master.session(i);
        let sent = match &state {
            CheatState::Product(parts) => SentState::Product(parts.clone()),
            CheatState::Pure(psi) => SentState::Entangled {
                n: code.len(),
                state: psi.clone(),
            },
            CheatState::Mixture(items) => {
                let pick = sample_component(items, &mut src.stream(Purpose::Strategy));
                SentState::Product(items[pick].1.clone())
            }
        };
        let mut streams = src.session_streams();
        let (bases, outcomes) = commit_phase(scheme, &sent, channel, &mut streams, limits)?;
        let mut accepted = 0u64;
        for (h, s) in hits.iter_mut().zip(&strings) {
            if verify_open(scheme, code, s, &bases, &outcomes, t)?.0 {
                *h += 1;
                accepted += 1;
            }
        }
        opened_hits += (accepted > 0) as u64;
        sum_x += accepted as f64;
        sum_x2 += (accepted * accepted) as f64;
    }
    let n = trials as f64;
    let mean = sum_x / n;
    let var = (sum_x2 / n - mean * mean).max(0.0);
    let lambda = if strings.len() > 1
        && (scheme.dim() as u128).pow(code.len() as u32) <= limits.max_operator_dim as u128
    {
        Some(
            optimal_cheat_value(
                &build_q(scheme, code, &strings, limits)?,
                &EigenConfig::default(),
            )?
            .value,
        )
    } else if strings.len() == 1 {
        Some(1.0)
    } else {
        None
    };
    Ok(CheatReport {
        strategy: strategy.id.clone(),
        strings: strings.clone(),
        exact,
        hits,
        opened_hits,
        trials,
        sum_std_error: (var / n).sqrt(),
        lambda_max: lambda,
        bounds: best_bounds(scheme, code, strings.len())?,
    })
}

pub const AUDIT_COLUMNS: [&str; 11] = [
    "strategy",
    "string",
    "exact_acc",
    "empirical_acc",
    "trials",
    "sum_exact",
    "sum_empirical",
    "lambda_max",
    "bound_simple",
    "bound_exact",
    "bound_applicable",
];

pub fn audit_table(reports: &[CheatReport]) -> Table {
    let mut table = Table::new(&AUDIT_COLUMNS);
    for r in reports {
        let empirical = r.empirical();
        for (i, s) in r.strings.iter().enumerate() {
            table.push(vec![
                r.strategy.clone(),
                fmt_string(s),
                fmt_report(r.exact[i]),
                fmt_report(empirical[i]),
                r.trials.to_string(),
                fmt_report(r.sum_exact()),
                fmt_report(r.sum_empirical()),
                r.lambda_max.map(fmt_report).unwrap_or_else(|| "NA".into()),
                r.bounds.simple.to_cell(),
                r.bounds.exact.to_cell(),
                r.bounds.applicable().to_string(),
            ]);
        }
    }
    table
}
