//! Broker-published metadata records, their binary layout, and signing.
//!
//! Binary layout: each field is a little-endian `u32` byte length followed by
//! the field bytes, in this order:
//!
//! | field              | bytes                                  |
//! |--------------------|----------------------------------------|
//! | publisher_identity | 32                                     |
//! | publish_time       | 16 (`u64` slot index, `f64` slot length) |
//! | sensor_type        | 4 (`u32`)                              |
//! | multicast_address  | 8 (`u64`)                              |
//! | raw_hash           | 32                                     |
//! | result_hash        | 32                                     |
//! | meta_hash          | 32                                     |
//! | signature          | variable                               |
//!
//! `meta_hash` is the digest of the first six encoded fields.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::Content;
use crate::error::{Result, SpadError};
use crate::model::{Cav, CavId, SensorType, TimeSlot};

pub type Hash32 = [u8; 32];

/// A fixed-length collision-resistant digest.
pub trait Digest32 {
    fn digest(&self, data: &[u8]) -> Hash32;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sha256Digest;

impl Digest32 for Sha256Digest {
    fn digest(&self, data: &[u8]) -> Hash32 {
        Sha256::digest(data).into()
    }
}

/// Signs and verifies metadata records.
pub trait Signer {
    fn sign(&self, identity: &Hash32, meta_hash: &Hash32) -> Vec<u8>;
    fn verify(&self, meta: &Metadata) -> bool;
}

/// Deterministic stand-in for a signature scheme: the stamp is the digest of
/// the publisher identity followed by the metadata hash.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockSigner;

impl Signer for MockSigner {
    fn sign(&self, identity: &Hash32, meta_hash: &Hash32) -> Vec<u8> {
        let mut buf = Vec::with_capacity(64);
        buf.extend_from_slice(identity);
        buf.extend_from_slice(meta_hash);
        Sha256Digest.digest(&buf).to_vec()
    }

    fn verify(&self, meta: &Metadata) -> bool {
        meta.compute_meta_hash(&Sha256Digest) == meta.meta_hash
            && self.sign(&meta.publisher_identity, &meta.meta_hash) == meta.signature
    }
}

/// Public-key identifier for a vehicle.
pub fn identity_of(id: CavId) -> Hash32 {
    let mut buf = b"spad-identity".to_vec();
    buf.extend_from_slice(&id.to_le_bytes());
    Sha256Digest.digest(&buf)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub publisher_identity: Hash32,
    pub publish_time: TimeSlot,
    pub sensor_type: SensorType,
    pub multicast_address: u64,
    pub raw_hash: Hash32,
    pub result_hash: Hash32,
    pub meta_hash: Hash32,
    pub signature: Vec<u8>,
}

fn put(out: &mut Vec<u8>, field: &[u8]) {
    out.extend_from_slice(&(field.len() as u32).to_le_bytes());
    out.extend_from_slice(field);
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn field(&mut self, name: &str) -> Result<&'a [u8]> {
        let bad = || SpadError::Domain(format!("metadata truncated at field {name}"));
        let len_bytes = self.buf.get(self.pos..self.pos + 4).ok_or_else(bad)?;
        let len = u32::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
        let start = self.pos + 4;
        let body = self.buf.get(start..start + len).ok_or_else(bad)?;
        self.pos = start + len;
        Ok(body)
    }

    fn fixed<const N: usize>(&mut self, name: &str) -> Result<[u8; N]> {
        let f = self.field(name)?;
        f.try_into()
            .map_err(|_| SpadError::Domain(format!("metadata field {name} has length {} not {N}", f.len())))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl Metadata {
    fn encode_unhashed(&self, out: &mut Vec<u8>) {
        put(out, &self.publisher_identity);
        let mut t = [0u8; 16];
        t[..8].copy_from_slice(&self.publish_time.index.to_le_bytes());
        t[8..].copy_from_slice(&self.publish_time.slot_length_s.to_le_bytes());
        put(out, &t);
        put(out, &self.sensor_type.to_le_bytes());
        put(out, &self.multicast_address.to_le_bytes());
        put(out, &self.raw_hash);
        put(out, &self.result_hash);
    }

    pub fn compute_meta_hash(&self, digest: &dyn Digest32) -> Hash32 {
        let mut buf = Vec::with_capacity(160);
        self.encode_unhashed(&mut buf);
        digest.digest(&buf)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(220 + self.signature.len());
        self.encode_unhashed(&mut out);
        put(&mut out, &self.meta_hash);
        put(&mut out, &self.signature);
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        let publisher_identity = r.fixed::<32>("publisher_identity")?;
        let t = r.fixed::<16>("publish_time")?;
        let index = u64::from_le_bytes(t[..8].try_into().unwrap());
        let slot_length_s = f64::from_le_bytes(t[8..].try_into().unwrap());
        let publish_time = TimeSlot::new(index, slot_length_s)?;
        let sensor_type = u32::from_le_bytes(r.fixed::<4>("sensor_type")?);
        let multicast_address = u64::from_le_bytes(r.fixed::<8>("multicast_address")?);
        let raw_hash = r.fixed::<32>("raw_hash")?;
        let result_hash = r.fixed::<32>("result_hash")?;
        let meta_hash = r.fixed::<32>("meta_hash")?;
        let signature = r.field("signature")?.to_vec();
        if r.pos != buf.len() {
            return Err(SpadError::Domain(format!("{} trailing bytes after metadata", buf.len() - r.pos)));
        }
        Ok(Self {
            publisher_identity,
            publish_time,
            sensor_type,
            multicast_address,
            raw_hash,
            result_hash,
            meta_hash,
            signature,
        })
    }

    /// Encoded size in bytes; what the broker buffer accounts for.
    pub fn encoded_len(&self) -> u64 {
        (8 * 4 + 32 * 4 + 16 + 4 + 8 + self.signature.len()) as u64
    }

    /// Human-readable dump, one field per line.
    pub fn to_text(&self) -> String {
        format!(
            "publisher_identity = {}\npublish_time = {} ({} s)\nsensor_type = {}\nmulticast_address = {:#018x}\nraw_hash = {}\nresult_hash = {}\nmeta_hash = {}\nsignature = {}\n",
            hex(&self.publisher_identity),
            self.publish_time.index,
            self.publish_time.slot_length_s,
            self.sensor_type,
            self.multicast_address,
            hex(&self.raw_hash),
            hex(&self.result_hash),
            hex(&self.meta_hash),
            hex(&self.signature),
        )
    }
}

/// Compact descriptor hashed in place of a synthetic payload buffer.
fn payload_stand_in(content: &Content, part: u8) -> Vec<u8> {
    let size = if part == 1 { content.raw_size_bytes } else { content.result_size_bytes };
    let mut buf = Vec::with_capacity(26);
    buf.extend_from_slice(&content.id.to_le_bytes());
    buf.push(part);
    buf.extend_from_slice(&size.to_le_bytes());
    buf.push(content.ground_truth_honest as u8);
    buf.extend_from_slice(&content.publisher_id.to_le_bytes());
    buf
}

pub fn build_metadata(
    content: &Content,
    publisher: &Cav,
    slot: TimeSlot,
    multicast_address: u64,
    signer: &dyn Signer,
) -> Metadata {
    build_metadata_with_payloads(
        content,
        publisher,
        slot,
        multicast_address,
        &payload_stand_in(content, 1),
        &payload_stand_in(content, 2),
        signer,
    )
}

pub fn build_metadata_with_payloads(
    content: &Content,
    publisher: &Cav,
    slot: TimeSlot,
    multicast_address: u64,
    raw_payload: &[u8],
    result_payload: &[u8],
    signer: &dyn Signer,
) -> Metadata {
    let d = Sha256Digest;
    let mut meta = Metadata {
        publisher_identity: identity_of(publisher.id),
        publish_time: slot,
        sensor_type: content.sensor_type,
        multicast_address,
        raw_hash: d.digest(raw_payload),
        result_hash: d.digest(result_payload),
        meta_hash: [0; 32],
        signature: Vec::new(),
    };
    meta.meta_hash = meta.compute_meta_hash(&d);
    meta.signature = signer.sign(&meta.publisher_identity, &meta.meta_hash);
    meta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BehaviorProfile;
    use std::collections::BTreeMap;

    fn publisher() -> Cav {
        Cav {
            id: 9,
            role_index: 0,
            behavior_profile: BehaviorProfile::Legitimate,
            sensing_capacity: BTreeMap::from([(2, 0.5)]),
            processing_capacity: 0.5,
            cache_capacity_bytes: 0,
        }
    }

    fn sample() -> Metadata {
        let c = Content { id: 4, sensor_type: 2, raw_size_bytes: 300_000, result_size_bytes: 5_000, ..Default::default() };
        build_metadata(&c, &publisher(), TimeSlot::new(12, 0.1).unwrap(), 0xE000_0001, &MockSigner)
    }

    #[test]
    fn deterministic_meta_hash() {
        assert_eq!(sample().meta_hash, sample().meta_hash);
    }

    #[test]
    fn payload_byte_flip_changes_raw_hash() {
        let c = Content::default();
        let slot = TimeSlot::new(0, 0.1).unwrap();
        let mut raw = vec![7u8; 64];
        let a = build_metadata_with_payloads(&c, &publisher(), slot, 1, &raw, b"r", &MockSigner);
        raw[17] ^= 1;
        let b = build_metadata_with_payloads(&c, &publisher(), slot, 1, &raw, b"r", &MockSigner);
        assert_ne!(a.raw_hash, b.raw_hash);
        assert_eq!(a.result_hash, b.result_hash);
    }

    #[test]
    fn honesty_flag_changes_payload_hash() {
        let slot = TimeSlot::new(0, 0.1).unwrap();
        let honest = Content::default();
        let forged = Content { ground_truth_honest: false, ..Content::default() };
        let a = build_metadata(&honest, &publisher(), slot, 1, &MockSigner);
        let b = build_metadata(&forged, &publisher(), slot, 1, &MockSigner);
        assert_ne!(a.raw_hash, b.raw_hash);
    }

    #[test]
    fn mock_signer_round_trip_and_tamper() {
        let m = sample();
        assert!(MockSigner.verify(&m));
        let mut t = m.clone();
        t.meta_hash[0] ^= 0xff;
        assert!(!MockSigner.verify(&t));
        let mut t = m.clone();
        t.sensor_type += 1;
        assert!(!MockSigner.verify(&t));
    }

    #[test]
    fn binary_round_trip() {
        let m = sample();
        let bytes = m.encode();
        assert_eq!(bytes.len() as u64, m.encoded_len());
        assert_eq!(Metadata::decode(&bytes).unwrap(), m);
        assert!(Metadata::decode(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn meta_hash_covers_leading_fields_only() {
        let m = sample();
        let bytes = m.encode();
        // six length-prefixed fields: 4+32, 4+16, 4+4, 4+8, 4+32, 4+32
        let prefix = 36 + 20 + 8 + 12 + 36 + 36;
        assert_eq!(Sha256Digest.digest(&bytes[..prefix]), m.meta_hash);
    }

    #[test]
    fn text_dump_lists_fields() {
        let t = sample().to_text();
        assert!(t.contains("publish_time = 12"));
        assert!(t.contains("multicast_address = 0x00000000e0000001"));
        assert_eq!(t.lines().count(), 8);
    }
}
