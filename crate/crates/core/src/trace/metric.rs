//! The prefix ultrametric `d(a, b) = 2^-k`, `k` the first index where `a` and `b` differ.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use super::{TraceError, TracePrefix};
use crate::exec::Exec;

/// A value in `{0} ∪ {2^-k : k >= 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Dyadic {
    Zero,
    /// `2^-k`
    Pow(u32),
}

impl Dyadic {
    pub const ONE: Dyadic = Dyadic::Pow(0);

    pub fn to_f64(self) -> f64 {
        match self {
            Dyadic::Zero => 0.0,
            Dyadic::Pow(k) => 2f64.powi(-(k as i32)),
        }
    }

    pub fn as_ratio(self) -> Ratio<u128> {
        match self {
            Dyadic::Zero => Ratio::from_integer(0),
            Dyadic::Pow(k) => Ratio::new(1, 1u128 << k.min(127)),
        }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Dyadic::Zero, Dyadic::Zero) => Ordering::Equal,
            (Dyadic::Zero, _) => Ordering::Less,
            (_, Dyadic::Zero) => Ordering::Greater,
            (Dyadic::Pow(a), Dyadic::Pow(b)) => b.cmp(a),
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dyadic::Zero => f.write_str("0"),
            Dyadic::Pow(0) => f.write_str("1"),
            Dyadic::Pow(k) => write!(f, "2^-{k}"),
        }
    }
}

/// Distance between two observed prefixes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum UltraDistance {
    /// The prefixes differ within their shared length.
    Exact(Dyadic),
    /// No difference observed within the shared length `n`; the true distance is at
    /// most `2^-n`.
    AtMost(Dyadic),
}

impl UltraDistance {
    pub fn exact(self) -> Option<Dyadic> {
        match self {
            UltraDistance::Exact(d) => Some(d),
            UltraDistance::AtMost(_) => None,
        }
    }

    /// The value, or the bound when inexact.
    pub fn upper(self) -> Dyadic {
        match self {
            UltraDistance::Exact(d) | UltraDistance::AtMost(d) => d,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, UltraDistance::Exact(_))
    }
}

impl fmt::Display for UltraDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UltraDistance::Exact(d) => write!(f, "{d}"),
            UltraDistance::AtMost(d) => write!(f, "<= {d}"),
        }
    }
}

pub fn first_difference<S: PartialEq>(a: &[S], b: &[S]) -> Option<usize> {
    a.iter().zip(b).position(|(x, y)| x != y)
}

/// Distance between two prefixes.
///
/// The same prefix object compared with itself is at exact distance zero; any two
/// distinct objects that agree on their shared length only get the bound `2^-n`.
pub fn ultra_distance<S: PartialEq, L>(
    a: &TracePrefix<S, L>,
    b: &TracePrefix<S, L>,
) -> UltraDistance {
    if std::ptr::eq(a, b) {
        return UltraDistance::Exact(Dyadic::Zero);
    }
    match first_difference(a.states(), b.states()) {
        Some(k) => UltraDistance::Exact(Dyadic::Pow(k as u32)),
        None => UltraDistance::AtMost(Dyadic::Pow(a.len().min(b.len()) as u32)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxiomViolation {
    pub triple: (usize, usize, usize),
    pub distances: (Dyadic, Dyadic, Dyadic),
    pub axiom: &'static str,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub triples: usize,
    pub checked: usize,
    /// Triples with at least one inexact pairwise distance.
    pub skipped: usize,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_triple(
    ix: (usize, usize, usize),
    xy: Dyadic,
    yz: Dyadic,
    xz: Dyadic,
    out: &mut Vec<AxiomViolation>,
) {
    let tri = xy <= yz.max(xz) && yz <= xy.max(xz) && xz <= xy.max(yz);
    if !tri {
        out.push(AxiomViolation {
            triple: ix,
            distances: (xy, yz, xz),
            axiom: "strong-triangle",
        });
    }
    let mut d = [xy, yz, xz];
    d.sort();
    if d[1] != d[2] {
        out.push(AxiomViolation {
            triple: ix,
            distances: (xy, yz, xz),
            axiom: "isosceles",
        });
    }
}

/// Checks symmetry, the strong triangle inequality and the isosceles property over
/// every triple of `samples` whose pairwise distances are exact.
pub fn check_ultrametric_axioms<S: PartialEq + Sync, L: Sync>(
    samples: &[TracePrefix<S, L>],
    exec: Exec,
) -> AxiomReport {
    let n = samples.len();
    let dist = |i: usize, j: usize| -> (UltraDistance, bool) {
        let a = ultra_distance(&samples[i], &samples[j]);
        let b = ultra_distance(&samples[j], &samples[i]);
        (a, a == b)
    };
    let rows = exec.map_range(n, |i| {
        let mut r = AxiomReport::default();
        for j in i + 1..n {
            for k in j + 1..n {
                r.triples += 1;
                let (xy, s1) = dist(i, j);
                let (yz, s2) = dist(j, k);
                let (xz, s3) = dist(i, k);
                if !(s1 && s2 && s3) {
                    r.violations.push(AxiomViolation {
                        triple: (i, j, k),
                        distances: (xy.upper(), yz.upper(), xz.upper()),
                        axiom: "symmetry",
                    });
                }
                match (xy.exact(), yz.exact(), xz.exact()) {
                    (Some(a), Some(b), Some(c)) => {
                        r.checked += 1;
                        check_triple((i, j, k), a, b, c, &mut r.violations);
                    }
                    _ => r.skipped += 1,
                }
            }
        }
        r
    });
    rows.into_iter().fold(AxiomReport::default(), |mut acc, r| {
        acc.triples += r.triples;
        acc.checked += r.checked;
        acc.skipped += r.skipped;
        acc.violations.extend(r.violations);
        acc
    })
}

/// `max(0, floor(-log2 r))`, computed exactly.
pub fn head_length_for_radius(radius: Ratio<u64>) -> Result<usize, TraceError> {
    let (p, q) = (u128::from(*radius.numer()), u128::from(*radius.denom()));
    if p == 0 {
        return Err(TraceError::NonPositiveRadius);
    }
    // Largest n with p * 2^n <= q, i.e. 2^-n >= r.
    let mut n = 0usize;
    while n < 64 && (p << (n + 1)) <= q {
        n += 1;
    }
    Ok(n)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BallMembers {
    pub head_length: usize,
    /// Indices of candidates sharing the first `head_length` states with the center.
    pub members: Vec<usize>,
    /// Candidates (or a center) too short to decide.
    pub undecided: Vec<usize>,
}

/// Members of the ball around `center`: candidates that share the center's first
/// `n = floor(-log2 r)` states.
pub fn ball_members<S: PartialEq, L>(
    center: &TracePrefix<S, L>,
    radius: Ratio<u64>,
    candidates: &[TracePrefix<S, L>],
) -> Result<BallMembers, TraceError> {
    let n = head_length_for_radius(radius)?;
    let mut out = BallMembers {
        head_length: n,
        ..Default::default()
    };
    if center.len() < n {
        out.undecided = (0..candidates.len()).collect();
        return Ok(out);
    }
    let head = &center.states()[..n];
    for (i, c) in candidates.iter().enumerate() {
        if c.len() < n {
            out.undecided.push(i);
        } else if &c.states()[..n] == head {
            out.members.push(i);
        }
    }
    Ok(out)
}
