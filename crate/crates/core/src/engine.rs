//! Protocol simulation: commit (prepare, choose bases, measure on receipt)
//! and open (reveal, count correct-basis mismatches, compare with t).

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codes::{CodeKind, QaryCode};
use crate::error::{Error, Result};
use crate::linalg::{Limits, StateVector};
use crate::report::fmt_sig;
use crate::scheme::{Codeword, EncodingScheme};

/// Norm tolerance for states handed to the measurement routines.
pub const SENT_NORM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelModel {
    pub p_loss: f64,
    pub p_depol: f64,
}

impl ChannelModel {
    pub fn new(p_loss: f64, p_depol: f64) -> Result<Self> {
        for (name, p) in [("p_loss", p_loss), ("p_depol", p_depol)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Domain(format!("{name} = {p} not in [0, 1]")));
            }
        }
        Ok(ChannelModel { p_loss, p_depol })
    }

    pub fn noiseless() -> Self {
        ChannelModel {
            p_loss: 0.0,
            p_depol: 0.0,
        }
    }

    /// Probability that a detected, correctly-based honest particle fails:
    /// (1/l)·p_depol·(D−1)/D.
    pub fn honest_failure_rate(&self, l: usize, dim: usize) -> f64 {
        self.p_depol * (dim - 1) as f64 / dim as f64 / l as f64
    }
}

/// Suggested threshold ⌈N·f + 3σ⌉ with f the honest per-particle failure
/// rate and σ the binomial standard deviation. Losses never add failures.
pub fn suggest_threshold(n: usize, l: usize, dim: usize, channel: &ChannelModel) -> u64 {
    let f = channel.honest_failure_rate(l, dim);
    let nf = n as f64;
    let sigma = (nf * f * (1.0 - f)).sqrt();
    (nf * f + 3.0 * sigma - 1e-9).ceil().max(0.0) as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Purpose {
    Bases = 0,
    Born = 1,
    Loss = 2,
    Depol = 3,
    Strategy = 4,
}

/// Seeded ChaCha8 source. Sessions get derived seeds; each purpose within
/// a session reads its own ChaCha stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomSource {
    seed: u64,
}

impl RandomSource {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64) -> Self {
        RandomSource { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Source for session `index` of a campaign.
    pub fn session(&self, index: u64) -> RandomSource {
        RandomSource {
            seed: splitmix64(self.seed ^ splitmix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15))),
        }
    }

    pub fn stream(&self, purpose: Purpose) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(purpose as u64);
        rng
    }

    pub fn session_streams(&self) -> SessionStreams {
        SessionStreams {
            bases: self.stream(Purpose::Bases),
            born: self.stream(Purpose::Born),
            loss: self.stream(Purpose::Loss),
            depol: self.stream(Purpose::Depol),
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub struct SessionStreams {
    pub bases: ChaCha8Rng,
    pub born: ChaCha8Rng,
    pub loss: ChaCha8Rng,
    pub depol: ChaCha8Rng,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Detected(usize),
    Lost,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Detected(j) => write!(f, "{j}"),
            Outcome::Lost => f.write_str("L"),
        }
    }
}

pub fn choose_bases<R: Rng + ?Sized>(n: usize, l: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..l.max(1))).collect()
}

fn check_basis(scheme: &EncodingScheme, basis: usize) -> Result<()> {
    if basis >= scheme.l() {
        return Err(Error::Domain(format!(
            "basis {basis} not in [0, {})",
            scheme.l()
        )));
    }
    Ok(())
}

/// Born probabilities of the D outcomes when measuring `psi` in M(basis).
pub fn born_probabilities(
    scheme: &EncodingScheme,
    psi: &StateVector,
    basis: usize,
) -> Result<Vec<f64>> {
    check_basis(scheme, basis)?;
    if psi.dim() != scheme.dim() {
        return Err(Error::DimensionMismatch {
            expected: scheme.dim(),
            found: psi.dim(),
        });
    }
    if !psi.is_normalized(SENT_NORM_TOL) {
        return Err(Error::NotNormalized(psi.norm()));
    }
    Ok((0..scheme.dim())
        .map(|j| {
            scheme.states()[basis * scheme.dim() + j]
                .inner(psi)
                .norm_sqr()
        })
        .collect())
}

fn sample_index(probs: &[f64], u: f64) -> usize {
    let total: f64 = probs.iter().sum();
    let mut acc = 0.0;
    for (j, p) in probs.iter().enumerate() {
        acc += p / total;
        if u < acc {
            return j;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Loss, depolarization and the uniform replacement are drawn every time
/// so that each stream advances by a fixed amount per particle.
fn channel_outcome(
    born: usize,
    dim: usize,
    channel: &ChannelModel,
    streams: &mut SessionStreams,
) -> Outcome {
    let lost = streams.loss.gen::<f64>() < channel.p_loss;
    let flip = streams.depol.gen::<f64>() < channel.p_depol;
    let replacement = streams.depol.gen_range(0..dim);
    if lost {
        Outcome::Lost
    } else if flip {
        Outcome::Detected(replacement)
    } else {
        Outcome::Detected(born)
    }
}

pub fn measure_particle(
    scheme: &EncodingScheme,
    sent: &StateVector,
    basis: usize,
    channel: &ChannelModel,
    streams: &mut SessionStreams,
) -> Result<Outcome> {
    let probs = born_probabilities(scheme, sent, basis)?;
    let born = sample_index(&probs, streams.born.gen::<f64>());
    Ok(channel_outcome(born, scheme.dim(), channel, streams))
}

/// What Alice puts on the channel.
#[derive(Clone, Debug, PartialEq)]
pub enum SentState {
    Product(Vec<StateVector>),
    /// A joint state of N particles; the first particle is the most
    /// significant tensor factor.
    Entangled {
        n: usize,
        state: StateVector,
    },
}

impl SentState {
    pub fn len(&self) -> usize {
        match self {
            SentState::Product(parts) => parts.len(),
            SentState::Entangled { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn honest(scheme: &EncodingScheme, cw: &Codeword) -> Result<Self> {
        Ok(SentState::Product(
            cw.symbols()
                .iter()
                .map(|&e| scheme.state(e).cloned())
                .collect::<Result<_>>()?,
        ))
    }
}

/// Measures the leading particle of `psi` (dimension D·rest) in M(basis),
/// returning the Born outcome and the normalized post-measurement state.
fn measure_leading(
    scheme: &EncodingScheme,
    psi: &StateVector,
    basis: usize,
    u: f64,
) -> Result<(usize, Option<StateVector>)> {
    let dim = scheme.dim();
    let rest = psi.dim() / dim;
    let amps = psi.amps();
    let mut branches = Vec::with_capacity(dim);
    let mut probs = Vec::with_capacity(dim);
    for j in 0..dim {
        let v = scheme.states()[basis * dim + j].amps();
        let mut phi = vec![Complex64::new(0.0, 0.0); rest];
        for (a, va) in v.iter().enumerate() {
            let c = va.conj();
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (out, x) in phi.iter_mut().zip(&amps[a * rest..(a + 1) * rest]) {
                *out += c * x;
            }
        }
        probs.push(phi.iter().map(|z| z.norm_sqr()).sum::<f64>());
        branches.push(phi);
    }
    let j = sample_index(&probs, u);
    if rest == 1 {
        return Ok((j, None));
    }
    let phi = StateVector::new(std::mem::take(&mut branches[j]))?;
    Ok((j, Some(phi.normalized()?)))
}

/// Commit phase on Bob's side: choose S, measure each particle on arrival.
pub fn commit_phase(
    scheme: &EncodingScheme,
    sent: &SentState,
    channel: &ChannelModel,
    streams: &mut SessionStreams,
    limits: &Limits,
) -> Result<(Vec<usize>, Vec<Outcome>)> {
    let n = sent.len();
    let bases = choose_bases(n, scheme.l(), &mut streams.bases);
    let mut outcomes = Vec::with_capacity(n);
    match sent {
        SentState::Product(parts) => {
            for (psi, &b) in parts.iter().zip(&bases) {
                outcomes.push(measure_particle(scheme, psi, b, channel, streams)?);
            }
        }
        SentState::Entangled { n, state } => {
            let expected = (scheme.dim() as u128).pow(*n as u32);
            if expected > limits.max_state_dim as u128 {
                return Err(Error::DimensionCap {
                    dim: expected,
                    cap: limits.max_state_dim,
                });
            }
            if state.dim() as u128 != expected {
                return Err(Error::DimensionMismatch {
                    expected: expected as usize,
                    found: state.dim(),
                });
            }
            if !state.is_normalized(SENT_NORM_TOL) {
                return Err(Error::NotNormalized(state.norm()));
            }
            // A lost particle is still collapsed: tracing it out leaves the
            // same reduced state as measuring it and forgetting the result.
            let mut current = Some(state.clone());
            for &b in &bases {
                let psi = current
                    .take()
                    .expect("state remains while particles remain");
                let (born, next) = measure_leading(scheme, &psi, b, streams.born.gen::<f64>())?;
                outcomes.push(channel_outcome(born, scheme.dim(), channel, streams));
                current = next;
            }
        }
    }
    Ok((bases, outcomes))
}

/// Mismatch count y over correct-basis detections. Lost particles pass.
pub fn count_failures(
    scheme: &EncodingScheme,
    cw: &Codeword,
    bases: &[usize],
    outcomes: &[Outcome],
) -> Result<usize> {
    let n = cw.len();
    if bases.len() != n {
        return Err(Error::LengthMismatch {
            what: "basis string",
            expected: n,
            found: bases.len(),
        });
    }
    if outcomes.len() != n {
        return Err(Error::LengthMismatch {
            what: "outcome list",
            expected: n,
            found: outcomes.len(),
        });
    }
    let mut y = 0;
    for ((&e, &s), out) in cw.symbols().iter().zip(bases).zip(outcomes) {
        let label = scheme.basis_of(e)?;
        if let Outcome::Detected(j) = out {
            if label.basis == s && *j != label.index {
                y += 1;
            }
        }
    }
    Ok(y)
}

/// Open phase: re-encode A and count failures. Returns `(accept, y)`.
pub fn verify_open(
    scheme: &EncodingScheme,
    code: &QaryCode,
    message: &[usize],
    bases: &[usize],
    outcomes: &[Outcome],
    t: u64,
) -> Result<(bool, usize)> {
    let cw = code.encode(message)?;
    let y = count_failures(scheme, &cw, bases, outcomes)?;
    Ok((y as u64 <= t, y))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RoleMode {
    Honest,
    Cheat(String),
}

impl fmt::Display for RoleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RoleMode::Honest => f.write_str("honest"),
            RoleMode::Cheat(id) => write!(f, "cheat:{id}"),
        }
    }
}

impl FromStr for RoleMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.split_once(':') {
            None if s == "honest" => Ok(RoleMode::Honest),
            Some(("cheat", id)) if !id.is_empty() && !id.contains(char::is_whitespace) => {
                Ok(RoleMode::Cheat(id.to_string()))
            }
            _ => Err(format!("unknown mode '{s}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionTranscript {
    pub q: usize,
    pub dim: usize,
    pub l: usize,
    pub beta: f64,
    pub code_kind: CodeKind,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub seed: u64,
    pub t: u64,
    pub mode: RoleMode,
    pub message: Vec<usize>,
    pub codeword: Vec<usize>,
    pub bases: Vec<usize>,
    pub outcomes: Vec<Outcome>,
    pub y: usize,
    pub accept: bool,
}

/// What Alice does in a session.
#[derive(Clone, Debug, PartialEq)]
pub enum SessionInput {
    Honest(Vec<usize>),
    /// Send `sent`, then open the first candidate (lowest index) that the
    /// realized transcript accepts, or the first candidate if none does.
    Cheat {
        strategy: String,
        sent: SentState,
        candidates: Vec<Vec<usize>>,
    },
}

pub fn run_session(
    scheme: &EncodingScheme,
    code: &QaryCode,
    input: &SessionInput,
    channel: &ChannelModel,
    t: u64,
    seed: u64,
    limits: &Limits,
) -> Result<SessionTranscript> {
    if code.q() != scheme.q() {
        return Err(Error::Domain(format!(
            "code alphabet q = {} differs from scheme alphabet q = {}",
            code.q(),
            scheme.q()
        )));
    }
    let mut streams = RandomSource::new(seed).session_streams();
    let (mode, sent, candidates) = match input {
        SessionInput::Honest(a) => {
            let cw = code.encode(a)?;
            (
                RoleMode::Honest,
                SentState::honest(scheme, &cw)?,
                vec![a.clone()],
            )
        }
        SessionInput::Cheat {
            strategy,
            sent,
            candidates,
        } => {
            if candidates.is_empty() {
                return Err(Error::Strategy("no string to open".into()));
            }
            (
                RoleMode::Cheat(strategy.clone()),
                sent.clone(),
                candidates.clone(),
            )
        }
    };
    if sent.len() != code.len() {
        return Err(Error::LengthMismatch {
            what: "sent particles",
            expected: code.len(),
            found: sent.len(),
        });
    }
    let (bases, outcomes) = commit_phase(scheme, &sent, channel, &mut streams, limits)?;
    let mut opened = None;
    for a in &candidates {
        let (accept, y) = verify_open(scheme, code, a, &bases, &outcomes, t)?;
        if opened.is_none() {
            opened = Some((a.clone(), accept, y));
        }
        if accept {
            opened = Some((a.clone(), accept, y));
            break;
        }
    }
    let (message, accept, y) = opened.expect("at least one candidate");
    let codeword = code.encode(&message)?.symbols().to_vec();
    Ok(SessionTranscript {
        q: scheme.q(),
        dim: scheme.dim(),
        l: scheme.l(),
        beta: scheme.beta(),
        code_kind: code.kind(),
        n: code.len(),
        k: code.dimension(),
        d: code.distance(),
        seed,
        t,
        mode,
        message,
        codeword,
        bases,
        outcomes,
        y,
        accept,
    })
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn write_transcript(t: &SessionTranscript) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "QBSC/1");
    let _ = writeln!(
        out,
        "scheme q={} D={} l={} beta={}",
        t.q,
        t.dim,
        t.l,
        fmt_sig(t.beta, 17)
    );
    let _ = writeln!(
        out,
        "code kind={} N={} k={} d={}",
        t.code_kind, t.n, t.k, t.d
    );
    let _ = writeln!(out, "session seed={} t={} mode={}", t.seed, t.t, t.mode);
    let _ = writeln!(out, "A {}", join(&t.message));
    let _ = writeln!(out, "E {}", join(&t.codeword));
    let _ = writeln!(out, "S {}", join(&t.bases));
    let _ = writeln!(out, "OUT {}", join(&t.outcomes));
    let _ = writeln!(out, "y={}", t.y);
    let _ = writeln!(out, "accept={}", t.accept);
    out
}

struct Fields<'a> {
    line: usize,
    map: Vec<(&'a str, &'a str)>,
}

impl<'a> Fields<'a> {
    fn parse(line: usize, text: &'a str, head: &str) -> Result<Self> {
        let mut parts = text.split(' ');
        if parts.next() != Some(head) {
            return Err(Error::parse(line, format!("expected '{head}' record")));
        }
        let map = parts
            .map(|p| {
                p.split_once('=')
                    .ok_or_else(|| Error::parse(line, format!("expected key=value, got '{p}'")))
            })
            .collect::<Result<_>>()?;
        Ok(Fields { line, map })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self
            .map
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::parse(self.line, format!("missing '{key}='")))?;
        raw.parse()
            .map_err(|e: T::Err| Error::parse(self.line, format!("bad value for {key}: {e}")))
    }
}

fn parse_list<T: FromStr>(line: usize, text: &str, head: &str) -> Result<Vec<T>> {
    let rest = text
        .strip_prefix(head)
        .filter(|r| r.is_empty() || r.starts_with(' '))
        .ok_or_else(|| Error::parse(line, format!("expected '{head}' record")))?;
    rest.split_whitespace()
        .map(|tok| {
            tok.parse()
                .map_err(|_| Error::parse(line, format!("bad token '{tok}'")))
        })
        .collect()
}

fn parse_scalar<T: FromStr>(line: usize, text: &str, key: &str) -> Result<T> {
    text.strip_prefix(key)
        .and_then(|v| v.strip_prefix('='))
        .ok_or_else(|| Error::parse(line, format!("expected '{key}='")))?
        .parse()
        .map_err(|_| Error::parse(line, format!("bad value for {key}")))
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "L" {
            Ok(Outcome::Lost)
        } else {
            s.parse()
                .map(Outcome::Detected)
                .map_err(|_| format!("bad outcome '{s}'"))
        }
    }
}

/// Parses and validates a transcript. The mismatch count is recomputed from
/// E, S and OUT using the letter convention e = i·D + j.
pub fn parse_transcript(text: &str) -> Result<SessionTranscript> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != 10 {
        return Err(Error::parse(
            lines.len().min(10) + 1,
            format!("expected 10 lines, found {}", lines.len()),
        ));
    }
    if lines[0] != "QBSC/1" {
        return Err(Error::parse(1, "missing QBSC/1 header"));
    }
    let scheme = Fields::parse(2, lines[1], "scheme")?;
    let code = Fields::parse(3, lines[2], "code")?;
    let session = Fields::parse(4, lines[3], "session")?;
    let t = SessionTranscript {
        q: scheme.get("q")?,
        dim: scheme.get("D")?,
        l: scheme.get("l")?,
        beta: scheme.get("beta")?,
        code_kind: code.get("kind")?,
        n: code.get("N")?,
        k: code.get("k")?,
        d: code.get("d")?,
        seed: session.get("seed")?,
        t: session.get("t")?,
        mode: session.get("mode")?,
        message: parse_list(5, lines[4], "A")?,
        codeword: parse_list(6, lines[5], "E")?,
        bases: parse_list(7, lines[6], "S")?,
        outcomes: parse_list(8, lines[7], "OUT")?,
        y: parse_scalar(9, lines[8], "y")?,
        accept: parse_scalar(10, lines[9], "accept")?,
    };
    validate_transcript(&t)?;
    Ok(t)
}

pub fn validate_transcript(t: &SessionTranscript) -> Result<()> {
    let bad = |msg: String| Err(Error::Transcript(msg));
    if t.dim < 2 || t.l == 0 || t.q != t.l * t.dim {
        return bad(format!(
            "scheme sizes q={} D={} l={} are inconsistent",
            t.q, t.dim, t.l
        ));
    }
    if t.message.len() != t.k {
        return bad(format!("A has {} symbols, k = {}", t.message.len(), t.k));
    }
    for (what, len) in [
        ("E", t.codeword.len()),
        ("S", t.bases.len()),
        ("OUT", t.outcomes.len()),
    ] {
        if len != t.n {
            return bad(format!("{what} has {len} entries, N = {}", t.n));
        }
    }
    if let Some(e) = t.message.iter().chain(&t.codeword).find(|&&e| e >= t.q) {
        return bad(format!("symbol {e} out of range [0, {})", t.q));
    }
    if let Some(s) = t.bases.iter().find(|&&s| s >= t.l) {
        return bad(format!("basis {s} out of range [0, {})", t.l));
    }
    let mut y = 0;
    for ((&e, &s), out) in t.codeword.iter().zip(&t.bases).zip(&t.outcomes) {
        match *out {
            Outcome::Detected(j) if j >= t.dim => {
                return bad(format!("outcome {j} out of range [0, {})", t.dim))
            }
            Outcome::Detected(j) if s == e / t.dim && j != e % t.dim => y += 1,
            _ => {}
        }
    }
    if y != t.y {
        return bad(format!("y={} but the outcomes give {y}", t.y));
    }
    if t.accept != (t.y as u64 <= t.t) {
        return bad(format!(
            "accept={} contradicts y={} and t={}",
            t.accept, t.y, t.t
        ));
    }
    Ok(())
}

/// Runs `trials` honest sessions; session i uses `RandomSource::new(seed).session(i)`.
pub fn honest_campaign(
    scheme: &EncodingScheme,
    code: &QaryCode,
    message: &[usize],
    channel: &ChannelModel,
    t: u64,
    seed: u64,
    trials: u64,
) -> Result<Vec<SessionTranscript>> {
    let master = RandomSource::new(seed);
    let input = SessionInput::Honest(message.to_vec());
    (0..trials)
        .map(|i| {
            run_session(
                scheme,
                code,
                &input,
                channel,
                t,
                master.session(i).seed(),
                &Limits::default(),
            )
        })
        .collect()
}
