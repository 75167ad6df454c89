//! Binary index format (all integers little-endian):
//!
//! ```text
//! "CSIDX"            5 bytes magic
//! version            u32
//! total contexts     u64
//! taxonomy hash      32 bytes
//! counting unit      u8 (0 sentence, 1 paragraph, 2 document)
//! term count         u32
//! terms              term count x (u32 length + UTF-8 bytes), sorted
//! postings           term count x (u32 length + LEB128 deltas), same order
//! checksum           32 bytes SHA-256 of everything above
//! ```
//!
//! The first delta of a posting list is the absolute id of its first context.

use std::collections::HashMap;

use sha2::{Digest, Sha256};

use super::{CorpusIndex, IndexError};
use crate::taxonomy::Fingerprint;
use crate::term::CanonicalTerm;
use crate::text::ContextUnit;

const MAGIC: &[u8; 5] = b"CSIDX";
pub const FORMAT_VERSION: u32 = 1;
const CHECKSUM_LEN: usize = 32;

fn unit_code(unit: ContextUnit) -> u8 {
    match unit {
        ContextUnit::Sentence => 0,
        ContextUnit::Paragraph => 1,
        ContextUnit::Document => 2,
    }
}

fn put_varint(out: &mut Vec<u8>, mut v: u32) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

pub(super) fn encode(index: &CorpusIndex) -> Vec<u8> {
    let terms = index.terms();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&index.total_contexts.to_le_bytes());
    out.extend_from_slice(&index.taxonomy_fingerprint.0);
    out.push(unit_code(index.counting_unit));
    out.extend_from_slice(&(terms.len() as u32).to_le_bytes());
    for term in &terms {
        let bytes = term.as_str().as_bytes();
        out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
        out.extend_from_slice(bytes);
    }
    for term in &terms {
        let ids = index.postings(term);
        out.extend_from_slice(&(ids.len() as u32).to_le_bytes());
        let mut prev = 0;
        for &id in ids {
            put_varint(&mut out, id - prev);
            prev = id;
        }
    }
    let checksum = Sha256::digest(&out);
    out.extend_from_slice(&checksum);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        if self.bytes.len() - self.pos < n {
            return Err(IndexError::Truncated);
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, IndexError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn varint(&mut self) -> Result<u32, IndexError> {
        let mut value: u64 = 0;
        for shift in (0..35).step_by(7) {
            let byte = self.u8()?;
            value |= u64::from(byte & 0x7f) << shift;
            if byte & 0x80 == 0 {
                return u32::try_from(value)
                    .map_err(|_| IndexError::Corrupt("posting delta overflows u32".into()));
            }
        }
        Err(IndexError::Corrupt("posting delta too long".into()))
    }
}

pub(super) fn decode(bytes: &[u8]) -> Result<CorpusIndex, IndexError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(IndexError::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(IndexError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let total = r.u64()?;
    let fingerprint = Fingerprint(r.take(32)?.try_into().unwrap());
    let unit = match r.u8()? {
        0 => ContextUnit::Sentence,
        1 => ContextUnit::Paragraph,
        2 => ContextUnit::Document,
        other => return Err(IndexError::Corrupt(format!("unknown counting unit {other}"))),
    };
    let term_count = r.u32()? as usize;
    let mut terms = Vec::with_capacity(term_count.min(1 << 20));
    for _ in 0..term_count {
        let len = r.u32()? as usize;
        let raw = r.take(len)?;
        let s = std::str::from_utf8(raw)
            .map_err(|_| IndexError::Corrupt("term is not UTF-8".into()))?;
        let term = CanonicalTerm::new(s)
            .filter(|t| t.as_str() == s)
            .ok_or_else(|| IndexError::Corrupt(format!("term `{s}` is not canonical")))?;
        terms.push(term);
    }
    let mut postings = HashMap::with_capacity(terms.len());
    for term in terms {
        let len = r.u32()? as usize;
        let mut ids = Vec::with_capacity(len.min(1 << 20));
        let mut prev: u64 = 0;
        for i in 0..len {
            let delta = u64::from(r.varint()?);
            if i > 0 && delta == 0 {
                return Err(IndexError::Corrupt(format!("postings of `{term}` not strictly increasing")));
            }
            let id = prev + delta;
            if id >= total {
                return Err(IndexError::Corrupt(format!("context id {id} out of range")));
            }
            ids.push(id as u32);
            prev = id;
        }
        if postings.insert(term.clone(), ids).is_some() {
            return Err(IndexError::Corrupt(format!("duplicate term `{term}`")));
        }
    }
    let body_len = r.pos;
    let stored = r.take(CHECKSUM_LEN)?;
    if r.pos != bytes.len() || Sha256::digest(&bytes[..body_len]).as_slice() != stored {
        return Err(IndexError::ChecksumMismatch);
    }
    if total == 0 {
        return Err(IndexError::Corrupt("zero contexts".into()));
    }
    Ok(CorpusIndex::from_parts(total, postings, unit, fingerprint))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::tests::{f8, t};
    use crate::index::ProbabilitySource;

    #[test]
    fn round_trip_preserves_subset_probabilities() {
        let (tax, _, index) = f8();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f8.csidx");
        index.save(&path).unwrap();
        let loaded = CorpusIndex::load(&path, &tax).unwrap();
        assert_eq!(loaded, index);

        let mut vocab: Vec<CanonicalTerm> = index.terms().into_iter().cloned().collect();
        vocab.push(t("unknown"));
        for a in &vocab {
            for b in &vocab {
                for c in &vocab {
                    for set in [vec![a], vec![a, b], vec![a, b, c]] {
                        assert_eq!(loaded.probability(&set), index.probability(&set));
                    }
                }
            }
        }
    }

    #[test]
    fn every_truncation_is_detected() {
        let (_, _, index) = f8();
        let bytes = index.to_bytes();
        for len in MAGIC.len()..bytes.len() {
            let err = CorpusIndex::from_bytes(&bytes[..len]).unwrap_err();
            assert!(matches!(err, IndexError::Truncated), "len {len}: {err}");
        }
    }

    #[test]
    fn flipped_byte_fails_checksum() {
        let (_, _, index) = f8();
        let mut bytes = index.to_bytes();
        let n = bytes.len();
        bytes[n - 40] ^= 0x01;
        // either the structure or the checksum catches it
        assert!(CorpusIndex::from_bytes(&bytes).is_err());
        let mut bytes = index.to_bytes();
        bytes[n - 1] ^= 0xff;
        assert!(matches!(CorpusIndex::from_bytes(&bytes), Err(IndexError::ChecksumMismatch)));
        let mut bytes = index.to_bytes();
        bytes.push(0);
        assert!(matches!(CorpusIndex::from_bytes(&bytes), Err(IndexError::ChecksumMismatch)));
    }

    #[test]
    fn version_and_magic_are_checked() {
        let (_, _, index) = f8();
        let mut bytes = index.to_bytes();
        bytes[5..9].copy_from_slice(&99u32.to_le_bytes());
        assert!(matches!(
            CorpusIndex::from_bytes(&bytes),
            Err(IndexError::VersionMismatch { found: 99, expected: 1 })
        ));
        let mut bytes = index.to_bytes();
        bytes[0] = b'X';
        assert!(matches!(CorpusIndex::from_bytes(&bytes), Err(IndexError::BadMagic)));
    }

    #[test]
    fn wrong_taxonomy_is_rejected_on_load() {
        let (_, _, index) = f8();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f8.csidx");
        index.save(&path).unwrap();
        let other = crate::Taxonomy::parse("ISA aids | disease").unwrap();
        assert!(matches!(
            CorpusIndex::load(&path, &other),
            Err(IndexError::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn varint_boundaries() {
        for v in [0u32, 1, 127, 128, 16_383, 16_384, u32::MAX] {
            let mut buf = Vec::new();
            put_varint(&mut buf, v);
            let mut r = Reader { bytes: &buf, pos: 0 };
            assert_eq!(r.varint().unwrap(), v);
            assert_eq!(r.pos, buf.len());
        }
    }
}
