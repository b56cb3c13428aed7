//! q-ary classical codes used to stretch a message A into a codeword E(A).

mod field;

pub use field::{field_make, prime_power, FieldTables, MAX_FIELD_ORDER};

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scheme::Codeword;

/// Default enumeration budget for exact minimum distance (q^k messages).
pub const DEFAULT_DISTANCE_BUDGET: u64 = 1 << 20;
const SAMPLE_SEED: u64 = 0xd157;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CodeKind {
    Repetition,
    ReedSolomon,
    RandomLinear,
    External,
}

impl CodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CodeKind::Repetition => "repetition",
            CodeKind::ReedSolomon => "rs",
            CodeKind::RandomLinear => "random-linear",
            CodeKind::External => "external",
        }
    }
}

impl fmt::Display for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "repetition" | "rep" => Ok(CodeKind::Repetition),
            "rs" | "reed-solomon" => Ok(CodeKind::ReedSolomon),
            "random-linear" | "rl" => Ok(CodeKind::RandomLinear),
            "external" => Ok(CodeKind::External),
            other => Err(Error::Code(format!("unknown code kind `{other}`"))),
        }
    }
}

/// How much the recorded minimum distance is worth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DistanceStatus {
    /// Confirmed by full enumeration (or true by construction).
    Exact,
    /// A proven lower bound that was not enumerated.
    CertifiedLowerBound,
    /// Asserted or sampled; no guarantee.
    DeclaredOnly,
}

impl DistanceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DistanceStatus::Exact => "exact",
            DistanceStatus::CertifiedLowerBound => "certified-lower-bound",
            DistanceStatus::DeclaredOnly => "declared-only",
        }
    }
}

impl fmt::Display for DistanceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistanceStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(DistanceStatus::Exact),
            "certified-lower-bound" => Ok(DistanceStatus::CertifiedLowerBound),
            "declared-only" => Ok(DistanceStatus::DeclaredOnly),
            other => Err(Error::Code(format!("unknown d_status `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Encoder {
    /// a ↦ (a, …, a); valid for any alphabet size.
    Repeat,
    /// m ↦ m·G over GF(q).
    Linear {
        field: FieldTables,
        generator: Vec<Vec<usize>>,
    },
    /// Parameters only; cannot encode.
    Opaque,
}

/// A q-ary (N, k, d) code. `k` is the message length in symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QaryCode {
    kind: CodeKind,
    q: usize,
    n: usize,
    k: usize,
    d: usize,
    d_status: DistanceStatus,
    encoder: Encoder,
}

fn check_params(q: usize, n: usize, k: usize) -> Result<()> {
    if q < 2 {
        return Err(Error::Code(format!(
            "alphabet size q = {q} must be at least 2"
        )));
    }
    if k == 0 {
        return Err(Error::Code(
            "dimension k = 0 (zero code) is not allowed".into(),
        ));
    }
    if n == 0 || k > n {
        return Err(Error::Code(format!(
            "need 1 <= k <= N, got k = {k}, N = {n}"
        )));
    }
    Ok(())
}

impl QaryCode {
    pub fn repetition(q: usize, n: usize) -> Result<Self> {
        check_params(q, n, 1)?;
        Ok(QaryCode {
            kind: CodeKind::Repetition,
            q,
            n,
            k: 1,
            d: n,
            d_status: DistanceStatus::Exact,
            encoder: Encoder::Repeat,
        })
    }

    /// Evaluation code: message (a₀, …, a_{k−1}) are polynomial coefficients,
    /// evaluated at the field elements labelled 0, …, N−1.
    pub fn reed_solomon(q: usize, n: usize, k: usize) -> Result<Self> {
        Self::reed_solomon_with_budget(q, n, k, DEFAULT_DISTANCE_BUDGET)
    }

    pub fn reed_solomon_with_budget(q: usize, n: usize, k: usize, budget: u64) -> Result<Self> {
        check_params(q, n, k)?;
        if n > q {
            return Err(Error::Code(format!(
                "Reed-Solomon needs N <= q, got N = {n}, q = {q}"
            )));
        }
        let field = field_make(q)?;
        let generator = (0..k)
            .map(|i| (0..n).map(|x| field.pow(x, i)).collect())
            .collect();
        let mut code = QaryCode {
            kind: CodeKind::ReedSolomon,
            q,
            n,
            k,
            d: n - k + 1,
            d_status: DistanceStatus::CertifiedLowerBound,
            encoder: Encoder::Linear { field, generator },
        };
        let (d, status) = code.min_distance(budget);
        if status == DistanceStatus::Exact {
            if d != n - k + 1 {
                return Err(Error::Code(format!("Reed-Solomon distance {d} != N-k+1")));
            }
            code.d_status = DistanceStatus::Exact;
        }
        Ok(code)
    }

    /// Uniformly random full-rank generator drawn from a seeded stream.
    pub fn random_linear(q: usize, n: usize, k: usize, seed: u64) -> Result<Self> {
        check_params(q, n, k)?;
        let field = field_make(q)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let generator = loop {
            let g: Vec<Vec<usize>> = (0..k)
                .map(|_| (0..n).map(|_| rng.gen_range(0..q)).collect())
                .collect();
            if rank(&field, &g) == k {
                break g;
            }
        };
        Self::linear(CodeKind::RandomLinear, field, generator)
    }

    /// A linear code from an explicit generator; d is measured.
    pub fn from_generator(q: usize, generator: Vec<Vec<usize>>) -> Result<Self> {
        let field = field_make(q)?;
        Self::linear(CodeKind::External, field, generator)
    }

    fn linear(kind: CodeKind, field: FieldTables, generator: Vec<Vec<usize>>) -> Result<Self> {
        let q = field.q();
        let k = generator.len();
        let n = generator.first().map(Vec::len).unwrap_or(0);
        check_params(q, n, k)?;
        for row in &generator {
            if row.len() != n {
                return Err(Error::Code("generator rows have unequal length".into()));
            }
            if let Some(&s) = row.iter().find(|&&s| s >= q) {
                return Err(Error::SymbolOutOfRange { symbol: s, q });
            }
        }
        if rank(&field, &generator) != k {
            return Err(Error::Code("generator does not have full rank".into()));
        }
        let mut code = QaryCode {
            kind,
            q,
            n,
            k,
            d: 1,
            d_status: DistanceStatus::DeclaredOnly,
            encoder: Encoder::Linear { field, generator },
        };
        let (d, status) = code.min_distance(DEFAULT_DISTANCE_BUDGET);
        code.d = d;
        code.d_status = status;
        Ok(code)
    }

    /// Parameters only, for existence-level planning.
    pub fn external(q: usize, n: usize, k: usize, d: usize) -> Result<Self> {
        check_params(q, n, k)?;
        if d == 0 || d > n {
            return Err(Error::Code(format!("need 1 <= d <= N, got d = {d}")));
        }
        Ok(QaryCode {
            kind: CodeKind::External,
            q,
            n,
            k,
            d,
            d_status: DistanceStatus::DeclaredOnly,
            encoder: Encoder::Opaque,
        })
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Block length N.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Message length k.
    pub fn dimension(&self) -> usize {
        self.k
    }

    pub fn distance(&self) -> usize {
        self.d
    }

    pub fn distance_status(&self) -> DistanceStatus {
        self.d_status
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.encoder, Encoder::Linear { .. })
    }

    pub fn field(&self) -> Option<&FieldTables> {
        match &self.encoder {
            Encoder::Linear { field, .. } => Some(field),
            _ => None,
        }
    }

    pub fn generator(&self) -> Option<&[Vec<usize>]> {
        match &self.encoder {
            Encoder::Linear { generator, .. } => Some(generator),
            _ => None,
        }
    }

    pub fn encode(&self, message: &[usize]) -> Result<Codeword> {
        if message.len() != self.k {
            return Err(Error::LengthMismatch {
                what: "message",
                expected: self.k,
                found: message.len(),
            });
        }
        if let Some(&s) = message.iter().find(|&&s| s >= self.q) {
            return Err(Error::SymbolOutOfRange {
                symbol: s,
                q: self.q,
            });
        }
        match &self.encoder {
            Encoder::Repeat => Codeword::new(vec![message[0]; self.n]),
            Encoder::Linear { field, generator } => {
                Codeword::new(encode_linear(field, generator, message))
            }
            Encoder::Opaque => Err(Error::Code("external code has no encoder".into())),
        }
    }

    /// Minimum nonzero codeword weight by full enumeration when q^k fits the
    /// budget. Otherwise the smallest weight seen in `budget` seeded samples,
    /// flagged declared-only.
    pub fn min_distance(&self, budget: u64) -> (usize, DistanceStatus) {
        let (field, generator) = match &self.encoder {
            Encoder::Repeat => return (self.n, DistanceStatus::Exact),
            Encoder::Opaque => return (self.d, self.d_status),
            Encoder::Linear { field, generator } => (field, generator),
        };
        let total = (self.q as u128).checked_pow(self.k as u32);
        let exact = matches!(total, Some(t) if t <= budget as u128);
        if exact {
            let mut best = self.n;
            let mut msg = vec![0usize; self.k];
            while increment(&mut msg, self.q) {
                let w = encode_linear(field, generator, &msg)
                    .iter()
                    .filter(|&&s| s != 0)
                    .count();
                best = best.min(w);
            }
            (best, DistanceStatus::Exact)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
            let mut best = self.n;
            let mut drawn = 0;
            while drawn < budget {
                let msg: Vec<usize> = (0..self.k).map(|_| rng.gen_range(0..self.q)).collect();
                if msg.iter().all(|&s| s == 0) {
                    continue;
                }
                drawn += 1;
                let w = encode_linear(field, generator, &msg)
                    .iter()
                    .filter(|&&s| s != 0)
                    .count();
                best = best.min(w);
            }
            (best, DistanceStatus::DeclaredOnly)
        }
    }

    /// Every message in lexicographic order (symbol 0 most significant).
    pub fn messages(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let mut next = Some(vec![0usize; self.k]);
        std::iter::from_fn(move || {
            let cur = next.take()?;
            let mut succ = cur.clone();
            if increment(&mut succ, self.q) {
                next = Some(succ);
            }
            Some(cur)
        })
    }
}

/// Advances a little-endian-by-last-position counter; false on wrap to zero.
fn increment(msg: &mut [usize], q: usize) -> bool {
    for s in msg.iter_mut().rev() {
        *s += 1;
        if *s < q {
            return true;
        }
        *s = 0;
    }
    false
}

fn encode_linear(field: &FieldTables, generator: &[Vec<usize>], message: &[usize]) -> Vec<usize> {
    let n = generator[0].len();
    let mut out = vec![0usize; n];
    for (&m, row) in message.iter().zip(generator) {
        if m == 0 {
            continue;
        }
        for (o, &g) in out.iter_mut().zip(row) {
            *o = field.add(*o, field.mul(m, g));
        }
    }
    out
}

fn rank(field: &FieldTables, rows: &[Vec<usize>]) -> usize {
    let mut m: Vec<Vec<usize>> = rows.to_vec();
    let ncols = m.first().map(Vec::len).unwrap_or(0);
    let mut r = 0;
    for col in 0..ncols {
        let Some(pivot) = (r..m.len()).find(|&i| m[i][col] != 0) else {
            continue;
        };
        m.swap(r, pivot);
        let inv = field.inv(m[r][col]).expect("nonzero pivot");
        let pivot_row: Vec<usize> = m[r].iter().map(|&x| field.mul(x, inv)).collect();
        for (i, row) in m.iter_mut().enumerate() {
            if i != r && row[col] != 0 {
                let factor = row[col];
                for (x, &p) in row.iter_mut().zip(&pivot_row) {
                    *x = field.sub(*x, field.mul(factor, p));
                }
            }
        }
        m[r] = pivot_row;
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// q-ary entropy H_q(δ) = δ·log_q(q−1) − δ·log_q δ − (1−δ)·log_q(1−δ).
pub fn q_ary_entropy(q: usize, delta: f64) -> f64 {
    let lq = (q as f64).ln();
    let xlogx = |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() };
    (delta * ((q - 1) as f64).ln() - xlogx(delta) - xlogx(1.0 - delta)) / lq
}

/// Gilbert–Varshamov achievable rate 1 − H_q(δ) for 0 < δ ≤ 1 − 1/q.
pub fn gv_rate(q: usize, delta: f64) -> Result<f64> {
    if q < 2 {
        return Err(Error::Domain(format!("q = {q} must be at least 2")));
    }
    let top = 1.0 - 1.0 / q as f64;
    if !(delta > 0.0 && delta <= top) {
        return Err(Error::Domain(format!(
            "relative distance {delta} not in (0, {top}]"
        )));
    }
    Ok(1.0 - q_ary_entropy(q, delta))
}

/// Header-plus-generator text form of a code.
pub fn write_code_file(code: &QaryCode) -> String {
    let status = match code.d_status {
        DistanceStatus::Exact => DistanceStatus::Exact,
        DistanceStatus::CertifiedLowerBound | DistanceStatus::DeclaredOnly => {
            DistanceStatus::DeclaredOnly
        }
    };
    let mut out = format!(
        "code kind={} q={} N={} k={} d={} d_status={}\n",
        code.kind, code.q, code.n, code.k, code.d, status
    );
    let rows: Vec<Vec<usize>> = match &code.encoder {
        Encoder::Repeat => vec![vec![1; code.n]],
        Encoder::Linear { generator, .. } => generator.clone(),
        Encoder::Opaque => Vec::new(),
    };
    for row in rows {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

pub fn parse_code_file(text: &str) -> Result<QaryCode> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty code file"))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("code") {
        return Err(Error::parse(hline, "expected header starting with `code`"));
    }
    let mut kind = None;
    let mut status = None;
    let (mut q, mut n, mut k, mut d) = (None, None, None, None);
    for f in fields {
        let (key, v) = f
            .split_once('=')
            .ok_or_else(|| Error::parse(hline, format!("malformed field `{f}`")))?;
        let int = || {
            v.parse::<usize>()
                .map_err(|_| Error::parse(hline, format!("`{key}` is not an integer")))
        };
        match key {
            "kind" => {
                kind = Some(
                    v.parse::<CodeKind>()
                        .map_err(|e| Error::parse(hline, e.to_string()))?,
                )
            }
            "d_status" => {
                status = Some(
                    v.parse::<DistanceStatus>()
                        .map_err(|e| Error::parse(hline, e.to_string()))?,
                )
            }
            "q" => q = Some(int()?),
            "N" => n = Some(int()?),
            "k" => k = Some(int()?),
            "d" => d = Some(int()?),
            _ => return Err(Error::parse(hline, format!("unknown header key `{key}`"))),
        }
    }
    let (Some(kind), Some(q), Some(n), Some(k), Some(d), Some(status)) = (kind, q, n, k, d, status)
    else {
        return Err(Error::parse(
            hline,
            "header must define kind, q, N, k, d and d_status",
        ));
    };
    let mut generator = Vec::new();
    for (ln, line) in lines {
        let row = line
            .split_whitespace()
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| Error::parse(ln, format!("bad symbol `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != n {
            return Err(Error::parse(
                ln,
                format!("generator row has {} symbols, expected N = {n}", row.len()),
            ));
        }
        generator.push(row);
    }
    let code = match kind {
        CodeKind::Repetition => {
            if generator.iter().flatten().any(|&s| s != 1) || generator.len() > 1 {
                return Err(Error::Code(
                    "repetition generator must be a single row of ones".into(),
                ));
            }
            QaryCode::repetition(q, n)?
        }
        CodeKind::External if generator.is_empty() => {
            let mut c = QaryCode::external(q, n, k, d)?;
            c.d_status = match status {
                DistanceStatus::Exact => DistanceStatus::DeclaredOnly,
                s => s,
            };
            return Ok(c);
        }
        _ => {
            if generator.len() != k {
                return Err(Error::Code(format!(
                    "expected k = {k} generator rows, found {}",
                    generator.len()
                )));
            }
            let field = field_make(q)?;
            let mut c = QaryCode::linear(kind, field, generator)?;
            if c.d_status != DistanceStatus::Exact {
                // unverifiable: keep the declared value, never promote it
                c.d = d;
                c.d_status = DistanceStatus::DeclaredOnly;
            }
            c
        }
    };
    if code.k != k || code.n != n || code.q != q {
        return Err(Error::Code(
            "header parameters disagree with the generator".into(),
        ));
    }
    if status == DistanceStatus::Exact && code.d_status == DistanceStatus::Exact && code.d != d {
        return Err(Error::Code(format!(
            "declared exact distance d = {d} but enumeration gives {}",
            code.d
        )));
    }
    Ok(code)
}
