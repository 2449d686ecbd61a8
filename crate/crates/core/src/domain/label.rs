use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Name of one axis of a product domain, e.g. `x`, `t3` or the structured `t2.s1`.
///
/// Labels order segment by segment (segments split on `.`), and within a segment runs of
/// digits compare numerically, so `t2 < t10`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AxisLabel(String);

impl AxisLabel {
    pub fn new(s: impl Into<String>) -> Self {
        AxisLabel(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn segments(&self) -> impl Iterator<Item = &str> {
        self.0.split('.')
    }

    /// `prefix.rest` for a non-empty `rest`, `prefix` otherwise.
    pub fn join(prefix: &str, rest: &str) -> Self {
        if rest.is_empty() {
            AxisLabel(prefix.to_string())
        } else if prefix.is_empty() {
            AxisLabel(rest.to_string())
        } else {
            AxisLabel(format!("{prefix}.{rest}"))
        }
    }

    /// First segment and the remainder (empty when there is a single segment).
    pub fn split_first(&self) -> (&str, &str) {
        match self.0.split_once('.') {
            Some((a, b)) => (a, b),
            None => (&self.0, ""),
        }
    }
}

impl fmt::Display for AxisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AxisLabel {
    fn from(s: &str) -> Self {
        AxisLabel(s.to_string())
    }
}

impl From<String> for AxisLabel {
    fn from(s: String) -> Self {
        AxisLabel(s)
    }
}

impl PartialOrd for AxisLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AxisLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.segments();
        let mut b = other.segments();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(x), Some(y)) => match natural_cmp(x, y) {
                    Ordering::Equal => continue,
                    o => return o,
                },
            }
        }
    }
}

fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut a, mut b) = (a.as_bytes(), b.as_bytes());
    while !a.is_empty() && !b.is_empty() {
        if a[0].is_ascii_digit() && b[0].is_ascii_digit() {
            let na = a.iter().take_while(|c| c.is_ascii_digit()).count();
            let nb = b.iter().take_while(|c| c.is_ascii_digit()).count();
            let da = trim_zeros(&a[..na]);
            let db = trim_zeros(&b[..nb]);
            let o = da.len().cmp(&db.len()).then_with(|| da.cmp(db)).then(na.cmp(&nb));
            if o != Ordering::Equal {
                return o;
            }
            a = &a[na..];
            b = &b[nb..];
        } else {
            match a[0].cmp(&b[0]) {
                Ordering::Equal => {
                    a = &a[1..];
                    b = &b[1..];
                }
                o => return o,
            }
        }
    }
    a.len().cmp(&b.len())
}

fn trim_zeros(d: &[u8]) -> &[u8] {
    let k = d.iter().take_while(|&&c| c == b'0').count();
    &d[k..]
}
