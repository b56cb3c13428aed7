//! Closed-form binding and concealing bounds, and a feasibility planner.
//!
//! All logarithms and entropies are base 2.
//!
//! * `F_α(N) = Σ_{i<α} C(N,i)(D−1)^i` counts shifts of Hamming weight below α.
//! * `ε₁ = β^{d−α}·F_α(N)`, `ε₂ = (1 − 1/l)^α`.
//! * simple binding bound `1 + 4rε₂ + 4r²ε₁`, valid when `rε₁ ≤ ½`.
//! * exact binding bound `rε₂ + (√(c₁² + c₃c₂²) + c₁)/(2c₃)` with
//!   `c₁ = 1 + r²ε₁ − rε₂(1 − rε₁)`, `c₂ = 2rε₂(1 + rε₁)`, `c₃ = 1 − rε₁`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::codes::{gv_rate, DistanceStatus, QaryCode};
use crate::error::{Error, Result};
use crate::report::{fmt_report, Table};
use crate::scheme::EncodingScheme;

/// Binary entropy H₂(x).
pub fn h2(x: f64) -> f64 {
    let xlogx = |v: f64| if v <= 0.0 { 0.0 } else { v * v.log2() };
    -xlogx(x) - xlogx(1.0 - x)
}

/// F_α(N) in exact integer arithmetic.
pub fn f_alpha(n: u64, dim: u64, alpha: u64) -> BigUint {
    let mut total = BigUint::zero();
    let mut binom = BigUint::one();
    let mut power = BigUint::one();
    let base = BigUint::from(dim.saturating_sub(1));
    for i in 0..alpha {
        if i > n {
            break;
        }
        total += &binom * &power;
        binom = binom * BigUint::from(n - i) / BigUint::from(i + 1);
        power *= &base;
    }
    total
}

/// log₂ of a positive big integer, accurate to f64 precision.
pub fn log2_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit head");
    top.log2() + shift as f64
}

fn f_alpha_bound_domain(n: u64, dim: u64, alpha: u64) -> Result<()> {
    // N − α + 1 > N/D, plus α < N (at α = N the estimate degenerates).
    if dim < 2 {
        return Err(Error::Domain(format!("D = {dim} must be at least 2")));
    }
    let lhs = (n + 1).saturating_sub(alpha) as u128 * dim as u128;
    if alpha >= n || lhs <= n as u128 {
        return Err(Error::Domain(format!(
            "F_alpha estimate needs alpha < N and N - alpha + 1 > N/D (N = {n}, D = {dim}, alpha = {alpha})"
        )));
    }
    Ok(())
}

/// log₂ of `(D−1)^α · 2^{N·H₂(α/N)}`.
pub fn f_alpha_bound_log2(n: u64, dim: u64, alpha: u64) -> Result<f64> {
    f_alpha_bound_domain(n, dim, alpha)?;
    let nf = n as f64;
    Ok(alpha as f64 * ((dim - 1) as f64).log2() + nf * h2(alpha as f64 / nf))
}

/// `(D−1)^α · 2^{N·H₂(α/N)}`, an upper bound on F_α(N).
pub fn f_alpha_bound(n: u64, dim: u64, alpha: u64) -> Result<f64> {
    Ok(f_alpha_bound_log2(n, dim, alpha)?.exp2())
}

/// Returns `(β^{d−α}, (1 − 1/l)^α)`.
pub fn epsilons(beta: f64, d: u64, alpha: u64, l: u64) -> Result<(f64, f64)> {
    if alpha == 0 || alpha >= d {
        return Err(Error::Domain(format!(
            "need 0 < alpha < d, got alpha = {alpha}, d = {d}"
        )));
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Domain(format!("beta = {beta} not in [0, 1)")));
    }
    if l == 0 {
        return Err(Error::Domain("l must be at least 1".into()));
    }
    let eps2 = (1.0 - 1.0 / l as f64).powi(alpha as i32);
    Ok((beta.powi((d - alpha) as i32), eps2))
}

/// Returns `(ε₁, ε₂)`. ε₁ is assembled in the log domain so the big
/// integer F_α(N) never overflows.
pub fn epsilons_full(
    beta: f64,
    d: u64,
    alpha: u64,
    l: u64,
    n: u64,
    dim: u64,
) -> Result<(f64, f64)> {
    let (_, eps2) = epsilons(beta, d, alpha, l)?;
    if beta == 0.0 {
        return Ok((0.0, eps2));
    }
    let log_eps1 = (d - alpha) as f64 * beta.log2() + log2_big(&f_alpha(n, dim, alpha));
    Ok((log_eps1.exp2(), eps2))
}

/// A bound value, or the reason its derivation does not apply.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    Value(f64),
    NotApplicable(&'static str),
}

impl Bound {
    pub fn value(self) -> Option<f64> {
        match self {
            Bound::Value(v) => Some(v),
            Bound::NotApplicable(_) => None,
        }
    }

    pub fn is_applicable(self) -> bool {
        matches!(self, Bound::Value(_))
    }

    pub fn to_cell(self) -> String {
        match self {
            Bound::Value(v) => fmt_report(v),
            Bound::NotApplicable(_) => "NA".into(),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Value(v) => f.write_str(&fmt_report(*v)),
            Bound::NotApplicable(why) => write!(f, "not applicable ({why})"),
        }
    }
}

pub fn binding_bound_simple(r: f64, eps1: f64, eps2: f64) -> Bound {
    if r * eps1 > 0.5 {
        return Bound::NotApplicable("r*eps1 > 1/2");
    }
    Bound::Value(1.0 + 4.0 * r * eps2 + 4.0 * r * r * eps1)
}

/// The three coefficients `(c₁, c₂, c₃)` of the maximized ratio.
pub fn binding_coefficients(r: f64, eps1: f64, eps2: f64) -> (f64, f64, f64) {
    let c1 = 1.0 + r * r * eps1 - r * eps2 * (1.0 - r * eps1);
    let c2 = 2.0 * r * eps2 * (1.0 + r * eps1);
    let c3 = 1.0 - r * eps1;
    (c1, c2, c3)
}

pub fn binding_bound_exact(r: f64, eps1: f64, eps2: f64) -> Bound {
    let (c1, c2, c3) = binding_coefficients(r, eps1, eps2);
    if c3 <= 0.0 {
        return Bound::NotApplicable("c3 <= 0 (r*eps1 >= 1)");
    }
    if c1 <= 0.0 {
        return Bound::NotApplicable("c1 <= 0");
    }
    Bound::Value(r * eps2 + ((c1 * c1 + c3 * c2 * c2).sqrt() + c1) / (2.0 * c3))
}

const LOG_SLACK: f64 = 1e-12;

/// Smallest α ≥ 1 with `(1 − 1/l)^α ≤ 2⁻⁶·ε/r`.
pub fn alpha_for_target(l: u64, r: f64, eps_target: f64) -> Result<u64> {
    if l < 2 {
        return Err(Error::Domain(
            "alpha is undefined for l = 1 (eps2 = 0 for every alpha)".into(),
        ));
    }
    if !(r > 0.0 && eps_target > 0.0) {
        return Err(Error::Domain("r and eps must be positive".into()));
    }
    let base = 1.0 - 1.0 / l as f64;
    let target = eps_target / r / 64.0;
    let estimate = (target.ln() / base.ln()).ceil().max(1.0) as u64;
    let ok = |a: u64| base.powi(a as i32) <= target * (1.0 + LOG_SLACK);
    let mut alpha = estimate;
    while !ok(alpha) {
        alpha += 1;
    }
    while alpha > 1 && ok(alpha - 1) {
        alpha -= 1;
    }
    Ok(alpha)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThirdTerm {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// Code-existence inequality
/// `N·H₂(α/N) + d·log₂β ≤ log₂(ε·β^α / (8r²(D−1)^α))`.
pub fn thirdterm_holds(
    n: u64,
    d: u64,
    alpha: u64,
    beta: f64,
    r: f64,
    eps_target: f64,
    dim: u64,
) -> Result<ThirdTerm> {
    f_alpha_bound_domain(n, dim, alpha)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Domain(format!("beta = {beta} not in (0, 1)")));
    }
    if !(r > 0.0 && eps_target > 0.0) {
        return Err(Error::Domain("r and eps must be positive".into()));
    }
    let lb = beta.log2();
    let lhs = n as f64 * h2(alpha as f64 / n as f64) + d as f64 * lb;
    let rhs = eps_target.log2() + alpha as f64 * lb
        - 3.0
        - 2.0 * r.log2()
        - alpha as f64 * ((dim - 1) as f64).log2();
    Ok(ThirdTerm {
        holds: lhs <= rhs,
        lhs,
        rhs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Concealing {
    /// Holevo cap on accessible bits, N·log₂D.
    pub m_bound: f64,
    /// Bit content of A, k·log₂q.
    pub message_bits: f64,
    /// ⌈k·log₂q⌉
    pub message_bits_ceil: f64,
    pub ratio: f64,
    pub ratio_ceil: f64,
}

impl Concealing {
    pub fn is_concealing(&self) -> bool {
        self.ratio < 1.0
    }
}

pub fn concealing_bound(n: u64, dim: u64, k: u64, q: u64) -> Result<Concealing> {
    if n == 0 || dim < 2 || k == 0 || q < 2 {
        return Err(Error::Domain(
            "concealing bound needs N, k >= 1 and D, q >= 2".into(),
        ));
    }
    let m_bound = n as f64 * (dim as f64).log2();
    let message_bits = k as f64 * (q as f64).log2();
    let message_bits_ceil = message_bits.ceil();
    Ok(Concealing {
        m_bound,
        message_bits,
        message_bits_ceil,
        ratio: m_bound / message_bits,
        ratio_ceil: m_bound / message_bits_ceil,
    })
}

/// The scheme numbers the bounds depend on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeConstants {
    pub q: u64,
    pub dim: u64,
    pub l: u64,
    pub beta: f64,
    pub beta_bar: f64,
}

impl From<&EncodingScheme> for SchemeConstants {
    fn from(s: &EncodingScheme) -> Self {
        SchemeConstants {
            q: s.q() as u64,
            dim: s.dim() as u64,
            l: s.l() as u64,
            beta: s.beta(),
            beta_bar: s.beta_bar(),
        }
    }
}

/// One (N, k, d) code offered to the planner.
#[derive(Clone, Debug, PartialEq)]
pub struct CodeCandidate {
    pub family: String,
    pub n: u64,
    pub k: u64,
    pub d: u64,
    pub d_status: DistanceStatus,
}

impl CodeCandidate {
    pub fn from_code(code: &QaryCode) -> Self {
        CodeCandidate {
            family: code.kind().to_string(),
            n: code.len() as u64,
            k: code.dimension() as u64,
            d: code.distance() as u64,
            d_status: code.distance_status(),
        }
    }
}

/// A family of codes the planner may pick from.
#[derive(Clone, Debug, PartialEq)]
pub enum CodeFamily {
    Repetition {
        lengths: Vec<u64>,
    },
    /// Codes guaranteed by the Gilbert–Varshamov bound: d = ⌈δN⌉,
    /// k = ⌊N·(1 − H_q(δ))⌋.
    GilbertVarshamov {
        delta: f64,
        lengths: Vec<u64>,
    },
    /// MDS codes with d = N − k + 1 and k = ⌈rate·N⌉, N ≤ q.
    ReedSolomon {
        rate: f64,
        lengths: Vec<u64>,
    },
    Explicit(Vec<CodeCandidate>),
}

impl CodeFamily {
    pub fn candidates(&self, q: u64) -> Result<Vec<CodeCandidate>> {
        match self {
            CodeFamily::Repetition { lengths } => Ok(lengths
                .iter()
                .map(|&n| CodeCandidate {
                    family: "repetition".into(),
                    n,
                    k: 1,
                    d: n,
                    d_status: DistanceStatus::Exact,
                })
                .collect()),
            CodeFamily::GilbertVarshamov { delta, lengths } => {
                let rate = gv_rate(q as usize, *delta)?;
                lengths
                    .iter()
                    .map(|&n| {
                        let k = (n as f64 * rate).floor() as u64;
                        let d = (delta * n as f64).ceil() as u64;
                        if k == 0 || d == 0 {
                            return Err(Error::Domain(format!("GV family degenerate at N = {n}")));
                        }
                        Ok(CodeCandidate {
                            family: "gv".into(),
                            n,
                            k,
                            d,
                            d_status: DistanceStatus::DeclaredOnly,
                        })
                    })
                    .collect()
            }
            CodeFamily::ReedSolomon { rate, lengths } => lengths
                .iter()
                .filter(|&&n| n <= q)
                .map(|&n| {
                    let k = ((rate * n as f64).ceil() as u64).clamp(1, n);
                    Ok(CodeCandidate {
                        family: "rs".into(),
                        n,
                        k,
                        d: n - k + 1,
                        d_status: DistanceStatus::CertifiedLowerBound,
                    })
                })
                .collect(),
            CodeFamily::Explicit(list) => Ok(list.clone()),
        }
    }
}

/// Every number the planner derives for one candidate code.
#[derive(Clone, Debug, PartialEq)]
pub struct SecurityPlan {
    pub r: f64,
    pub eps_target: f64,
    pub alpha: u64,
    pub scheme: SchemeConstants,
    pub code: CodeCandidate,
    pub eps1: Option<f64>,
    pub eps2: f64,
    pub bound_simple: Bound,
    pub bound_exact: Bound,
    pub thirdterm: Option<ThirdTerm>,
    pub concealing: Concealing,
    pub feasible: bool,
    pub reasons: Vec<String>,
}

impl SecurityPlan {
    pub fn ratio_m_over_n(&self) -> f64 {
        self.concealing.ratio
    }
}

/// Evaluates one candidate. Failed preconditions become reasons, never errors.
pub fn evaluate_candidate(
    r: f64,
    eps_target: f64,
    scheme: SchemeConstants,
    code: CodeCandidate,
) -> Result<SecurityPlan> {
    let vacuous = eps_target >= r;
    let alpha = if vacuous || scheme.l < 2 {
        1
    } else {
        alpha_for_target(scheme.l, r, eps_target)?
    };
    let concealing = concealing_bound(code.n, scheme.dim, code.k, scheme.q)?;
    let mut reasons = Vec::new();
    let mut eps1 = None;
    let eps2 = (1.0 - 1.0 / scheme.l as f64).powi(alpha as i32);
    let (mut bound_simple, mut bound_exact) = (
        Bound::NotApplicable("alpha >= d"),
        Bound::NotApplicable("alpha >= d"),
    );
    if alpha >= code.d {
        reasons.push(format!("alpha = {alpha} is not below d = {}", code.d));
    } else {
        let (e1, _) = epsilons_full(scheme.beta, code.d, alpha, scheme.l, code.n, scheme.dim)?;
        eps1 = Some(e1);
        bound_simple = binding_bound_simple(r, e1, eps2);
        bound_exact = binding_bound_exact(r, e1, eps2);
    }
    let thirdterm = if scheme.beta > 0.0 {
        match thirdterm_holds(
            code.n,
            code.d,
            alpha,
            scheme.beta,
            r,
            eps_target,
            scheme.dim,
        ) {
            Ok(t) => Some(t),
            Err(e) => {
                reasons.push(e.to_string());
                None
            }
        }
    } else {
        None
    };
    let binding_ok = if vacuous {
        reasons.push(format!("vacuous target: eps = {eps_target} >= r = {r}"));
        alpha < code.d
    } else if alpha >= code.d {
        false
    } else if scheme.beta == 0.0 {
        // orthogonal encodings: eps1 = 0 and only the alpha rule matters
        true
    } else {
        match thirdterm {
            Some(t) if t.holds => true,
            Some(t) => {
                reasons.push(format!(
                    "third-term inequality fails: lhs {} > rhs {}",
                    fmt_report(t.lhs),
                    fmt_report(t.rhs)
                ));
                false
            }
            None => false,
        }
    };
    if !concealing.is_concealing() {
        reasons.push(format!(
            "not concealing: m/n = {}",
            fmt_report(concealing.ratio)
        ));
    }
    let feasible = binding_ok && concealing.is_concealing();
    Ok(SecurityPlan {
        r,
        eps_target,
        alpha,
        scheme,
        code,
        eps1,
        eps2,
        bound_simple,
        bound_exact,
        thirdterm,
        concealing,
        feasible,
        reasons,
    })
}

#[derive(Clone, Debug)]
pub struct PlanOutcome {
    /// The smallest feasible candidate, or the closest infeasible one.
    pub chosen: SecurityPlan,
    pub candidates: Vec<SecurityPlan>,
}

fn candidate_order(a: &SecurityPlan, b: &SecurityPlan) -> Ordering {
    b.feasible
        .cmp(&a.feasible)
        .then(a.code.n.cmp(&b.code.n))
        .then(a.alpha.cmp(&b.alpha))
        .then(a.code.family.cmp(&b.code.family))
}

/// Picks the smallest-N feasible candidate over all offered families.
/// Ties go to smaller α, then the lexicographically smaller family name.
pub fn plan(
    r: f64,
    eps_target: f64,
    scheme: SchemeConstants,
    families: &[CodeFamily],
) -> Result<PlanOutcome> {
    let mut candidates = Vec::new();
    for fam in families {
        for c in fam.candidates(scheme.q)? {
            candidates.push(evaluate_candidate(r, eps_target, scheme, c)?);
        }
    }
    if candidates.is_empty() {
        return Err(Error::Domain("empty code search space".into()));
    }
    candidates.sort_by(candidate_order);
    let chosen = if candidates[0].feasible {
        candidates[0].clone()
    } else {
        // closest miss: alpha < d first, then smallest inequality gap
        let gap = |p: &SecurityPlan| p.thirdterm.map(|t| t.lhs - t.rhs).unwrap_or(f64::INFINITY);
        candidates
            .iter()
            .min_by(|a, b| {
                (a.alpha >= a.code.d)
                    .cmp(&(b.alpha >= b.code.d))
                    .then(gap(a).total_cmp(&gap(b)))
                    .then(candidate_order(a, b))
            })
            .expect("nonempty")
            .clone()
    };
    Ok(PlanOutcome { chosen, candidates })
}

pub const PLAN_COLUMNS: [&str; 18] = [
    "q",
    "D",
    "l",
    "r",
    "eps_target",
    "alpha",
    "N",
    "k",
    "d",
    "beta",
    "eps1",
    "eps2",
    "bound_simple",
    "bound_exact",
    "m_bound",
    "ratio",
    "feasible",
    "reason",
];

/// One row per plan, ordered feasible first, then by N.
pub fn plan_table(plans: &[SecurityPlan]) -> Table {
    let mut sorted: Vec<&SecurityPlan> = plans.iter().collect();
    sorted.sort_by(|a, b| candidate_order(a, b));
    let mut table = Table::new(&PLAN_COLUMNS);
    for p in sorted {
        table.push(vec![
            p.scheme.q.to_string(),
            p.scheme.dim.to_string(),
            p.scheme.l.to_string(),
            fmt_report(p.r),
            fmt_report(p.eps_target),
            p.alpha.to_string(),
            p.code.n.to_string(),
            p.code.k.to_string(),
            p.code.d.to_string(),
            fmt_report(p.scheme.beta),
            p.eps1.map(fmt_report).unwrap_or_else(|| "NA".into()),
            fmt_report(p.eps2),
            p.bound_simple.to_cell(),
            p.bound_exact.to_cell(),
            fmt_report(p.concealing.m_bound),
            fmt_report(p.concealing.ratio),
            p.feasible.to_string(),
            p.reasons.join("; "),
        ]);
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    const BB84: SchemeConstants = SchemeConstants {
        q: 4,
        dim: 2,
        l: 2,
        beta: 0.75,
        beta_bar: std::f64::consts::FRAC_1_SQRT_2,
    };

    fn naive_f_alpha(n: u64, dim: u64, alpha: u64) -> u128 {
        // direct count of D-ary strings of length N with fewer than alpha nonzeros
        let total = dim.pow(n as u32);
        (0..total)
            .filter(|&x| {
                let mut x = x;
                let mut w = 0;
                for _ in 0..n {
                    if x % dim != 0 {
                        w += 1;
                    }
                    x /= dim;
                }
                w < alpha
            })
            .count() as u128
    }

    #[test]
    fn f_alpha_examples() {
        assert_eq!(f_alpha(7, 3, 1), BigUint::from(1u32));
        assert_eq!(f_alpha(10, 2, 2), BigUint::from(11u32));
        assert_eq!(f_alpha(5, 2, 3), BigUint::from(16u32));
        assert_eq!(f_alpha(4, 2, 0), BigUint::zero());
        for (n, dim, a) in [(6, 2, 3), (5, 3, 4), (4, 4, 5), (3, 2, 4)] {
            assert_eq!(
                f_alpha(n, dim, a).to_u128().unwrap(),
                naive_f_alpha(n, dim, a)
            );
        }
    }

    #[test]
    fn f_alpha_large_is_exact() {
        let v = f_alpha(100_000, 2, 26);
        assert!(v.bits() > 300);
        let bound = f_alpha_bound_log2(100_000, 2, 26).unwrap();
        assert!(bound.is_finite() && bound > log2_big(&v));
    }

    #[test]
    fn f_alpha_bound_examples() {
        let b = f_alpha_bound(100, 2, 5).unwrap();
        assert!(f_alpha(100, 2, 5).to_f64().unwrap() < b);
        let b1 = f_alpha_bound(10, 3, 1).unwrap();
        assert!(b1 > 1.0);
        assert!((b1 - 2.0 * (10.0 * h2(0.1)).exp2()).abs() < 1e-9);
        assert!(f_alpha_bound(10, 2, 6).is_err());
        assert!(f_alpha_bound(2, 3, 2).is_err());
    }

    #[test]
    fn epsilon_examples() {
        let (e1, e2) = epsilons_full(0.75, 3, 1, 2, 3, 2).unwrap();
        assert!((e1 - 0.5625).abs() < 1e-15 && e2 == 0.5);
        let (_, e2) = epsilons(0.75, 5, 3, 1).unwrap();
        assert_eq!(e2, 0.0);
        let (e1, _) = epsilons_full(1e-9, 10, 9, 2, 10, 2).unwrap();
        assert!((e1 - 1013e-9).abs() < 1e-18);
        let (e1, _) = epsilons_full(1e-12, 20, 19, 2, 20, 2).unwrap();
        assert!(e1 < 1e-5);
        assert!(epsilons(0.75, 3, 3, 2).is_err());
        assert!(epsilons(0.75, 3, 0, 2).is_err());
    }

    #[test]
    fn simple_bound_examples() {
        assert_eq!(binding_bound_simple(5.0, 0.0, 0.0), Bound::Value(1.0));
        let e = 2f64.powi(-10);
        let v = binding_bound_simple(2.0, e, e).value().unwrap();
        assert!((v - (1.0 + 24.0 * e)).abs() < 1e-15);
        assert!(binding_bound_simple(2.0, 0.25, 0.0).is_applicable());
        assert!(!binding_bound_simple(2.0, 0.3, 0.0).is_applicable());
    }

    #[test]
    fn exact_bound_matches_grid_maximization() {
        assert_eq!(binding_bound_exact(7.0, 0.0, 0.0), Bound::Value(1.0));
        for &(r, e1, e2) in &[(2.0, 1e-6, 1e-6), (3.0, 0.05, 0.1), (10.0, 0.01, 0.02)] {
            let got = binding_bound_exact(r, e1, e2).value().unwrap();
            // brute-force maximum of rε₂ + (c₁ + c₂S)/(c₃ + S²) over S ≥ 0
            let (c1, c2, c3) = binding_coefficients(r, e1, e2);
            let best = (0..200_000)
                .map(|i| i as f64 * 1e-4)
                .map(|s| r * e2 + (c1 + c2 * s) / (c3 + s * s))
                .fold(f64::MIN, f64::max);
            assert!(
                got >= best - 1e-12 && got - best < 1e-7,
                "r={r}: {got} vs {best}"
            );
        }
        let v = binding_bound_exact(2.0, 1e-6, 1e-6).value().unwrap();
        assert!((v - (1.0 + 6e-6)).abs() < 1e-9);
        assert!(!binding_bound_exact(2.0, 0.5, 0.0).is_applicable());
        assert!(!binding_bound_exact(2.0, 0.0, 1.0).is_applicable());
    }

    #[test]
    fn exact_bound_monotone_in_eps1() {
        let mut prev = 0.0;
        for i in 0..100 {
            let v = binding_bound_exact(4.0, i as f64 * 1e-3, 0.01)
                .value()
                .unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_for_target(2, 1024.0, 2f64.powi(-10)).unwrap(), 26);
        assert_eq!(alpha_for_target(2, 1.0, 2f64.powi(-6)).unwrap(), 12);
        assert!(alpha_for_target(3, 1.0, 2f64.powi(-6)).unwrap() > 12);
        assert!(alpha_for_target(1, 1.0, 0.1).is_err());
    }

    #[test]
    fn thirdterm_examples() {
        let t = thirdterm_holds(100_000, 1000, 26, 0.75, 1024.0, 2f64.powi(-10), 2).unwrap();
        assert!(t.holds);
        assert!((t.lhs - -67.893).abs() < 1e-2, "{}", t.lhs);
        assert!((t.rhs - -43.791).abs() < 1e-2, "{}", t.rhs);
        let t0 = thirdterm_holds(100_000, 0, 26, 0.75, 1024.0, 2f64.powi(-10), 2).unwrap();
        assert!(!t0.holds && t0.lhs > t0.rhs);
        let mut seen_hold = false;
        for d in (0..3000).step_by(50) {
            let h = thirdterm_holds(100_000, d, 26, 0.75, 1024.0, 2f64.powi(-10), 2)
                .unwrap()
                .holds;
            assert!(!(seen_hold && !h), "holds must be monotone in d");
            seen_hold |= h;
        }
    }

    #[test]
    fn concealing_examples() {
        let c = concealing_bound(100_000, 2, 95_000, 4).unwrap();
        assert_eq!(c.m_bound, 100_000.0);
        assert!(c.ratio < 0.53 && (c.ratio - 0.526_315_789_473_684_2).abs() < 1e-15);
        let c = concealing_bound(1000, 2, 1000, 4).unwrap();
        assert_eq!(c.ratio, 0.5);
        let c = concealing_bound(10, 2, 5, 4).unwrap();
        assert!(!c.is_concealing());
        let c = concealing_bound(10, 2, 3, 5).unwrap();
        assert_eq!(c.message_bits_ceil, 7.0);
    }

    #[test]
    fn plan_reproduces_gv_example() {
        let fam = CodeFamily::GilbertVarshamov {
            delta: 0.01,
            lengths: vec![1_000, 10_000, 100_000],
        };
        let out = plan(1024.0, 2f64.powi(-10), BB84, &[fam]).unwrap();
        let p = &out.chosen;
        assert!(p.feasible, "{:?}", p.reasons);
        assert_eq!(p.code.n, 100_000);
        assert_eq!(p.alpha, 26);
        assert!(p.code.k as f64 / p.code.n as f64 >= 0.95);
        assert!(p.bound_simple.value().unwrap() <= 1.0 + p.eps_target);
        assert!(p.ratio_m_over_n() < 0.53);
        assert_eq!(out.candidates.len(), 3);
    }

    #[test]
    fn plan_small_repetition_is_infeasible() {
        let fam = CodeFamily::Repetition {
            lengths: (2..=64).collect(),
        };
        let out = plan(2.0, 0.5, BB84, &[fam]).unwrap();
        assert!(out.candidates.iter().all(|p| !p.feasible));
        assert!(!out.chosen.feasible);
        assert!(
            out.chosen.reasons.iter().any(|r| r.contains("third-term")),
            "{:?}",
            out.chosen.reasons
        );
    }

    #[test]
    fn plan_vacuous_target() {
        let cand = |n, k, d| CodeCandidate {
            family: "explicit".into(),
            n,
            k,
            d,
            d_status: DistanceStatus::Exact,
        };
        let fam = CodeFamily::Explicit(vec![cand(4, 3, 1), cand(4, 3, 2), cand(8, 6, 2)]);
        let out = plan(2.0, 2.0, BB84, &[fam]).unwrap();
        assert!(out.chosen.feasible);
        assert_eq!(out.chosen.alpha, 1);
        assert_eq!((out.chosen.code.n, out.chosen.code.d), (4, 2));
    }

    #[test]
    fn repetition_never_conceals() {
        let fam = CodeFamily::Repetition {
            lengths: vec![1_000, 100_000],
        };
        let out = plan(1024.0, 2f64.powi(-10), BB84, &[fam]).unwrap();
        assert!(out.candidates.iter().all(|p| !p.feasible));
        assert!(out
            .chosen
            .reasons
            .iter()
            .any(|r| r.contains("not concealing")));
    }

    #[test]
    fn plan_rejects_empty_space() {
        assert!(plan(2.0, 0.1, BB84, &[]).is_err());
    }

    #[test]
    fn plan_table_sorting() {
        let fam = CodeFamily::GilbertVarshamov {
            delta: 0.01,
            lengths: vec![100_000, 1_000, 10_000],
        };
        let out = plan(1024.0, 2f64.powi(-10), BB84, &[fam]).unwrap();
        let table = plan_table(&out.candidates);
        assert_eq!(table.rows.len(), 3);
        assert_eq!(table.rows[0][6], "100000");
        assert_eq!(table.rows[0][16], "true");
        assert_eq!(table.rows[1][6], "1000");
        assert_eq!(table.rows[2][6], "10000");
    }
}
