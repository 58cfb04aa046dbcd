//! Inner-model components and their linear mixtures.
//!
//! A component assigns each node an unnormalised weight computed from the
//! current graph; normalising over the choice set gives a probability.
//! A [`ModelSpec`] is a convex combination of components.

pub(crate) mod probability;
mod weights;

use std::fmt;
use std::str::FromStr;

pub use probability::{component_weight, edge_probability, node_probability, EdgeMode, Exclusion, ResolvedSpec};
pub use weights::{pfp_weight, WeightSums};

use crate::error::{Error, Result};

/// Tolerance on the sum of mixture weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    /// Uniform over the choice set.
    Null,
    /// Proportional to degree (preferential attachment).
    Degree,
    /// Proportional to the number of triangles containing the node.
    Triangle,
    /// Uniform over degree-1 nodes.
    Singleton,
    /// Uniform over degree-2 nodes.
    Doubleton,
    /// Uniform over nodes chosen in the last `window` selections.
    Recent(usize),
    /// Positive-feedback preference, weight `d^(1 + delta * log10 d)`.
    Pfp(f64),
}

impl Component {
    /// Identity used to reject duplicate terms (parameters compared bitwise).
    pub fn key(&self) -> (u8, u64) {
        match *self {
            Component::Null => (0, 0),
            Component::Degree => (1, 0),
            Component::Triangle => (2, 0),
            Component::Singleton => (3, 0),
            Component::Doubleton => (4, 0),
            Component::Recent(w) => (5, w as u64),
            Component::Pfp(d) => (6, (d + 0.0).to_bits()),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Component::Null => "null",
            Component::Degree => "degree",
            Component::Triangle => "triangle",
            Component::Singleton => "singleton",
            Component::Doubleton => "doubleton",
            Component::Recent(_) => "recent",
            Component::Pfp(_) => "pfp",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Component::Recent(0) => {
                Err(Error::SpecParse { input: self.to_string(), reason: "recent window must be at least 1".into() })
            }
            Component::Pfp(d) if !d.is_finite() => {
                Err(Error::SpecParse { input: self.to_string(), reason: "pfp delta must be finite".into() })
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Recent(w) => write!(f, "recent({w})"),
            Component::Pfp(d) => write!(f, "pfp({d})"),
            other => f.write_str(other.family()),
        }
    }
}

impl FromStr for Component {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = |reason: &str| Error::SpecParse { input: s.clone(), reason: reason.into() };
        let lower = s.to_ascii_lowercase();
        let (name, arg) = match lower.find('(') {
            Some(open) => {
                if !lower.ends_with(')') {
                    return Err(bad("missing `)`"));
                }
                (&lower[..open], Some(&lower[open + 1..lower.len() - 1]))
            }
            None => (lower.as_str(), None),
        };
        let c = match (name, arg) {
            ("null" | "random", None) => Component::Null,
            ("degree", None) => Component::Degree,
            ("triangle", None) => Component::Triangle,
            ("singleton", None) => Component::Singleton,
            ("doubleton", None) => Component::Doubleton,
            ("recent", Some(a)) => Component::Recent(a.parse().map_err(|_| bad("recent window must be an integer"))?),
            ("pfp", Some(a)) => Component::Pfp(a.parse().map_err(|_| bad("pfp delta must be a number"))?),
            ("recent" | "pfp", None) => return Err(bad("missing parameter")),
            (_, Some(_)) if matches!(name, "null" | "degree" | "triangle" | "singleton" | "doubleton") => {
                return Err(bad("component takes no parameter"))
            }
            _ => return Err(bad("unknown component")),
        };
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub beta: f64,
    pub component: Component,
}

/// Convex combination `sum beta_i * component_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    terms: Vec<Term>,
}

impl ModelSpec {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        let spec = ModelSpec { terms };
        spec.validate()?;
        Ok(spec)
    }

    pub fn pure(component: Component) -> Self {
        ModelSpec { terms: vec![Term { beta: 1.0, component }] }
    }

    pub fn null() -> Self {
        Self::pure(Component::Null)
    }

    /// Builds a spec from `(beta, component)` pairs.
    pub fn mixture(terms: impl IntoIterator<Item = (f64, Component)>) -> Result<Self> {
        Self::new(terms.into_iter().map(|(beta, component)| Term { beta, component }).collect())
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn components(&self) -> impl Iterator<Item = &Component> {
        self.terms.iter().map(|t| &t.component)
    }

    pub fn validate(&self) -> Result<()> {
        validate_spec(self)
    }

    /// Free parameters: `terms - 1` mixture weights plus one per PFP exponent,
    /// plus one per recency window when `count_windows` is set.
    pub fn free_parameters(&self, count_windows: bool) -> usize {
        let nonlinear = self
            .terms
            .iter()
            .filter(|t| match t.component {
                Component::Pfp(_) => true,
                Component::Recent(_) => count_windows,
                _ => false,
            })
            .count();
        self.terms.len() - 1 + nonlinear
    }
}

pub fn validate_spec(spec: &ModelSpec) -> Result<()> {
    if spec.terms.is_empty() {
        return Err(Error::BadWeights("no terms".into()));
    }
    let mut sum = 0.0;
    for (i, t) in spec.terms.iter().enumerate() {
        if !(0.0..=1.0).contains(&t.beta) {
            return Err(Error::BadWeights(format!("weight {} of {} outside [0, 1]", t.beta, t.component)));
        }
        t.component.validate()?;
        if spec.terms[..i].iter().any(|u| u.component.key() == t.component.key()) {
            return Err(Error::DuplicateComponent(t.component.to_string()));
        }
        sum += t.beta;
    }
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(Error::BadWeights(format!("weights sum to {sum}, not 1")));
    }
    Ok(())
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let [t] = self.terms.as_slice() {
            if t.beta == 1.0 {
                return t.component.fmt(f);
            }
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}*{}", t.beta, t.component)?;
        }
        Ok(())
    }
}

/// Splits on top-level `+`, leaving exponents such as `1e+2` intact.
fn split_terms(s: &str) -> Vec<&str> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, &c) in bytes.iter().enumerate() {
        match c {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'+' if depth == 0 => {
                let exponent = i >= 2 && matches!(bytes[i - 1], b'e' | b'E') && bytes[i - 2].is_ascii_digit();
                if !exponent {
                    out.push(&s[start..i]);
                    start = i + 1;
                }
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// Parses `0.5*degree + 0.4*pfp(0.05) + 0.1*singleton`; a term without
    /// a weight has weight 1.
    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::SpecParse { input: s.into(), reason: "empty spec".into() });
        }
        let mut terms = Vec::new();
        for part in split_terms(&compact) {
            let (beta, comp) = match part.split_once('*') {
                Some((w, c)) => {
                    let beta = w
                        .parse::<f64>()
                        .map_err(|_| Error::SpecParse { input: s.into(), reason: format!("bad weight `{w}`") })?;
                    (beta, c)
                }
                None => (1.0, part),
            };
            terms.push(Term { beta, component: comp.parse()? });
        }
        ModelSpec::new(terms)
    }
}
