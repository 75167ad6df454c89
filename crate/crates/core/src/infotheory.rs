//! Information content and point-wise mutual information, in bits.
//!
//! All quantities are computed from context counts so that the identities
//! `PMI(c;g) = IC(g)` (g generalizes c) and `PMI(c;t) = IC(c)` (t specializes
//! or is a synonym of c) hold bit for bit: both sides reduce to the log of the
//! same correctly rounded ratio of two integers.

use std::fmt;
use std::ops::Div;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::ProbabilitySource;
use crate::term::CanonicalTerm;

/// Tolerance used when comparing information quantities.
pub const EPSILON: f64 = 1e-9;

/// An amount of information in bits. May be `+inf` (unseen term) or `-inf`
/// (no observed co-occurrence).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bits(pub f64);

impl Bits {
    pub const ZERO: Bits = Bits(0.0);
    pub const INFINITY: Bits = Bits(f64::INFINITY);
    pub const NEG_INFINITY: Bits = Bits(f64::NEG_INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    /// `Some(value)` when finite.
    pub fn finite(self) -> Option<f64> {
        self.0.is_finite().then_some(self.0)
    }

    /// `self >= threshold`, tolerating rounding noise of [`EPSILON`].
    pub fn reaches(self, threshold: Bits) -> bool {
        self.0 + EPSILON >= threshold.0
    }
}

impl Div<f64> for Bits {
    type Output = Bits;

    fn div(self, rhs: f64) -> Bits {
        Bits(self.0 / rhs)
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} bits", self.0)
    }
}

/// IC of a term. Terms the corpus never saw carry no finite value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InformationContent {
    Seen(Bits),
    Unseen,
}

impl InformationContent {
    /// The value in bits; `+inf` when unseen.
    pub fn bits(self) -> Bits {
        match self {
            InformationContent::Seen(b) => b,
            InformationContent::Unseen => Bits::INFINITY,
        }
    }

    pub fn is_unseen(self) -> bool {
        matches!(self, InformationContent::Unseen)
    }
}

/// The protected entity never occurs in the reference corpus, so its
/// information content is undefined and no guarantee can be computed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("protected entity `{0}` does not occur in the reference corpus")]
pub struct EntityNotInCorpus(pub CanonicalTerm);

// log2(num / den) with both factors formed exactly in integers
fn log2_ratio(num: u128, den: u128) -> f64 {
    (num as f64 / den as f64).log2()
}

/// `-log2 p(t)`.
pub fn information_content<P>(source: &P, term: &CanonicalTerm) -> InformationContent
where
    P: ProbabilitySource + ?Sized,
{
    let count = source.joint_count(&[term]);
    if count == 0 {
        return InformationContent::Unseen;
    }
    let n = source.total_contexts();
    InformationContent::Seen(Bits(log2_ratio(u128::from(n), u128::from(count))))
}

fn entity_ic<P>(source: &P, entity: &CanonicalTerm) -> Result<(u64, Bits), EntityNotInCorpus>
where
    P: ProbabilitySource + ?Sized,
{
    match information_content(source, entity) {
        InformationContent::Seen(bits) => Ok((source.joint_count(&[entity]), bits)),
        InformationContent::Unseen => Err(EntityNotInCorpus(entity.clone())),
    }
}

/// `log2 p(c,t) / (p(c) p(t))`. `-inf` when `c` and `t` never co-occur.
pub fn pmi<P>(source: &P, entity: &CanonicalTerm, term: &CanonicalTerm) -> Result<Bits, EntityNotInCorpus>
where
    P: ProbabilitySource + ?Sized,
{
    pmi_group(source, entity, &[term])
}

/// `log2 p(c,t1..tn) / (p(c) p(t1..tn))`, order-insensitive.
///
/// The result is clamped to `IC(c)`; exceeding it is impossible under
/// per-context set counting, so a clamp means the source is inconsistent
/// and is logged.
pub fn pmi_group<P>(
    source: &P,
    entity: &CanonicalTerm,
    group: &[&CanonicalTerm],
) -> Result<Bits, EntityNotInCorpus>
where
    P: ProbabilitySource + ?Sized,
{
    let (entity_count, ic) = entity_ic(source, entity)?;
    debug_assert!(!group.is_empty());

    let mut with_entity: Vec<&CanonicalTerm> = Vec::with_capacity(group.len() + 1);
    with_entity.push(entity);
    with_entity.extend_from_slice(group);
    let joint = source.joint_count(&with_entity);
    if joint == 0 {
        return Ok(Bits::NEG_INFINITY);
    }
    let group_count = source.joint_count(group);
    let n = source.total_contexts();

    let raw = log2_ratio(
        u128::from(joint) * u128::from(n),
        u128::from(entity_count) * u128::from(group_count),
    );
    if raw > ic.0 + EPSILON {
        log::warn!(
            "PMI({entity}; {}) = {raw} exceeds IC({entity}) = {}; clamping (inconsistent probability source)",
            group.iter().map(|t| t.as_str()).collect::<Vec<_>>().join(", "),
            ic.0
        );
        return Ok(ic);
    }
    Ok(Bits(raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::tests::{f8, t};

    fn close(a: Bits, b: f64) -> bool {
        (a.0 - b).abs() < 1e-9
    }

    #[test]
    fn ic_values() {
        let (_, _, index) = f8();
        assert_eq!(information_content(&index, &t("aids")), InformationContent::Seen(Bits(1.0)));
        assert!(close(information_content(&index, &t("disease")).bits(), (8.0f64 / 6.0).log2()));
        let unseen = information_content(&index, &t("unknown"));
        assert!(unseen.is_unseen());
        assert_eq!(unseen.bits(), Bits::INFINITY);
    }

    #[test]
    fn certain_term_has_zero_ic() {
        let (tax, vocab, _) = f8();
        let docs: Vec<_> = ["fever a", "fever b"]
            .iter()
            .map(|s| crate::Document::new("d", *s, &vocab, crate::ContextUnit::Document))
            .collect();
        let index = crate::build_index(&docs, crate::ContextUnit::Document, &tax).unwrap();
        assert_eq!(information_content(&index, &t("fever")), InformationContent::Seen(Bits(0.0)));
    }

    #[test]
    fn pmi_examples() {
        let (_, _, index) = f8();
        let aids = t("aids");
        assert_eq!(pmi(&index, &aids, &t("hiv")).unwrap(), Bits(1.0));
        let disease = pmi(&index, &aids, &t("disease")).unwrap();
        assert!(close(disease, 0.415_037_499_278_843_8));
        assert_eq!(disease, information_content(&index, &t("disease")).bits());
        assert_eq!(pmi(&index, &aids, &t("agent")).unwrap(), Bits(0.0));
        assert!(close(pmi(&index, &aids, &t("transfusion")).unwrap(), (4.0f64 / 3.0).log2()));
        assert_eq!(pmi(&index, &aids, &t("unknown")).unwrap(), Bits::NEG_INFINITY);
    }

    #[test]
    fn unseen_entity_is_an_error() {
        let (_, _, index) = f8();
        let err = pmi(&index, &t("cancer"), &t("fever")).unwrap_err();
        assert_eq!(err, EntityNotInCorpus(t("cancer")));
    }

    #[test]
    fn group_pmi_examples() {
        let (_, _, index) = f8();
        let aids = t("aids");
        let (tr, fe, ag) = (t("transfusion"), t("fever"), t("agent"));
        assert_eq!(pmi_group(&index, &aids, &[&tr, &fe]).unwrap(), Bits(1.0));
        assert_eq!(pmi_group(&index, &aids, &[&fe, &tr]).unwrap(), Bits(1.0));
        assert_eq!(pmi_group(&index, &aids, &[&tr, &ag]).unwrap(), Bits::NEG_INFINITY);
        assert_eq!(
            pmi_group(&index, &aids, &[&tr]).unwrap(),
            pmi(&index, &aids, &tr).unwrap()
        );
    }

    /// A source whose joint counts violate set semantics.
    struct Inconsistent;

    impl ProbabilitySource for Inconsistent {
        fn total_contexts(&self) -> u64 {
            10
        }
        fn joint_count(&self, terms: &[&CanonicalTerm]) -> u64 {
            match terms.len() {
                1 if terms[0].as_str() == "c" => 5,
                1 => 1,
                _ => 4,
            }
        }
    }

    #[test]
    fn clamps_to_entity_ic() {
        let c = t("c");
        let ic = information_content(&Inconsistent, &c).bits();
        assert_eq!(pmi(&Inconsistent, &c, &t("x")).unwrap(), ic);
    }

    #[test]
    fn reaches_tolerates_rounding() {
        assert!(Bits(1.0 - 1e-12).reaches(Bits(1.0)));
        assert!(!Bits(0.999).reaches(Bits(1.0)));
        assert!(Bits::INFINITY.reaches(Bits(3.0)));
        assert!(!Bits::NEG_INFINITY.reaches(Bits(0.0)));
    }
}
