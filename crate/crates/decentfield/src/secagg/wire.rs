use super::field::FieldElement;
use super::protocol::MaskedVector;
use super::Error;

pub const MAGIC: [u8; 4] = *b"DCNF";

/// Payload tag of a masked message.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskedKind {
    Weights = 1,
    Grads = 2,
    Scalar = 3,
}

impl MaskedKind {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            1 => Some(Self::Weights),
            2 => Some(Self::Grads),
            3 => Some(Self::Scalar),
            _ => None,
        }
    }
}

/// Wire encoding: magic `DCNF`, u8 msg_type, u32 round, u32 sender, u64 d,
/// then `d` little-endian u64 field elements.
pub fn encode_masked(kind: MaskedKind, mv: &MaskedVector) -> Vec<u8> {
    let mut out = Vec::with_capacity(21 + mv.elems.len() * 8);
    out.extend_from_slice(&MAGIC);
    out.push(kind as u8);
    out.extend_from_slice(&mv.round.to_le_bytes());
    out.extend_from_slice(&mv.sender.to_le_bytes());
    out.extend_from_slice(&(mv.elems.len() as u64).to_le_bytes());
    for e in &mv.elems {
        out.extend_from_slice(&e.value().to_le_bytes());
    }
    out
}

pub fn decode_masked(bytes: &[u8]) -> Result<(MaskedKind, MaskedVector), Error> {
    let bad = |what: &str| Error::MalformedMessage(what.to_string());
    if bytes.len() < 21 {
        return Err(bad("short header"));
    }
    if bytes[0..4] != MAGIC {
        return Err(bad("bad magic"));
    }
    let kind = MaskedKind::from_byte(bytes[4]).ok_or_else(|| bad("unknown msg_type"))?;
    let round = u32::from_le_bytes(bytes[5..9].try_into().unwrap());
    let sender = u32::from_le_bytes(bytes[9..13].try_into().unwrap());
    let d = u64::from_le_bytes(bytes[13..21].try_into().unwrap()) as usize;
    if bytes.len() != 21 + d * 8 {
        return Err(bad("payload length disagrees with header"));
    }
    let mut elems = Vec::with_capacity(d);
    for i in 0..d {
        let v = u64::from_le_bytes(bytes[21 + i * 8..29 + i * 8].try_into().unwrap());
        if v >= super::field::MODULUS {
            return Err(bad("non-canonical field element"));
        }
        elems.push(FieldElement::from_canonical(v));
    }
    Ok((kind, MaskedVector { elems, round, sender }))
}
