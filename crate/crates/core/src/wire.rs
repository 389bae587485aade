//! Byte layout of control and hello packets.
//!
//! ```text
//! offset  size  block
//!      0    24  header: destination u32, source u32, packet number u32,
//!               packet length u32, 8 reserved zero bytes
//!     24    12  scope attribute (zero-filled)
//!     36    12  diffusion type attribute (zero-filled)
//!     48    12  control type attribute: byte 0 = 1 (control) or 2 (hello)
//!     60    12  control fixed part: restart u8, sender node u16,
//!               sender energy u32 (mJ), tree count u16, dlmt count u16, pad u8
//!     72     *  tree entries then dlmt entries, ascending initiator:
//!               initiator u16, path length u8, path length x (node u16, energy u32)
//! ```
//!
//! Hello packets carry `sender u16, root u16` right after the 60-byte envelope.
//! All integers are big-endian. Cached energies are not sent; the decoder
//! recomputes them.

use thiserror::Error;

use crate::model::{BrList, DlmtSelection, Eid, Energy, ModelError, NodeId, TreeTable};
use crate::protocol::{ControlMessage, HelloMessage};

pub const HEADER_LEN: usize = 24;
pub const ATTRIBUTE_LEN: usize = 12;
pub const ENVELOPE_LEN: usize = HEADER_LEN + 3 * ATTRIBUTE_LEN;
pub const CONTROL_FIXED_LEN: usize = 12;
pub const HELLO_BODY_LEN: usize = 4;
pub const HELLO_LEN: usize = ENVELOPE_LEN + HELLO_BODY_LEN;
pub const EID_LEN: usize = 6;
pub const ENTRY_PREFIX_LEN: usize = 3;

pub const CONTROL_TYPE_CONTROL: u8 = 1;
pub const CONTROL_TYPE_HELLO: u8 = 2;

pub const BROADCAST_DESTINATION: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("branch for initiator {initiator} has {len} Eids, more than 255")]
    PathTooLong { initiator: NodeId, len: usize },
    #[error("table holds {0} entries, more than 65535")]
    TooManyEntries(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("buffer truncated: needed {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("packet length field says {declared}, buffer holds {actual}")]
    LengthMismatch { declared: u32, actual: usize },
    #[error("control type {found} where {expected} was expected")]
    WrongType { expected: u8, found: u8 },
    #[error("integrity check failed: {0}")]
    Integrity(String),
}

impl From<ModelError> for DecodeError {
    fn from(e: ModelError) -> Self {
        DecodeError::Integrity(e.to_string())
    }
}

/// Header fields the caller chooses; source id and length are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeaderFields {
    pub destination: u32,
    pub packet_number: u32,
}

impl Default for HeaderFields {
    fn default() -> Self {
        HeaderFields {
            destination: BROADCAST_DESTINATION,
            packet_number: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketHeader {
    pub destination_id: u32,
    pub source_id: u32,
    pub packet_number: u32,
    pub packet_length: u32,
}

fn put_u16(buf: &mut Vec<u8>, v: u16) {
    buf.extend_from_slice(&v.to_be_bytes());
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_be_bytes());
}

fn put_envelope(buf: &mut Vec<u8>, header: HeaderFields, source: NodeId, control_type: u8) {
    put_u32(buf, header.destination);
    put_u32(buf, u32::from(source.0));
    put_u32(buf, header.packet_number);
    put_u32(buf, 0); // patched once the length is known
    buf.extend_from_slice(&[0; 8]);
    buf.extend_from_slice(&[0; ATTRIBUTE_LEN]); // scope
    buf.extend_from_slice(&[0; ATTRIBUTE_LEN]); // diffusion type
    let mut ct = [0u8; ATTRIBUTE_LEN];
    ct[0] = control_type;
    buf.extend_from_slice(&ct);
}

fn patch_length(buf: &mut [u8]) {
    let len = buf.len() as u32;
    buf[12..16].copy_from_slice(&len.to_be_bytes());
}

fn put_entries(buf: &mut Vec<u8>, table: &TreeTable) {
    // BTreeMap iteration is already ascending by initiator.
    for br in table.entries() {
        put_u16(buf, br.initiator().0);
        buf.push(br.len() as u8);
        for eid in br.path() {
            put_u16(buf, eid.node.0);
            put_u32(buf, eid.energy.millijoules());
        }
    }
}

fn check_table(table: &TreeTable) -> Result<u16, EncodeError> {
    for br in table.entries() {
        if br.len() > usize::from(u8::MAX) {
            return Err(EncodeError::PathTooLong {
                initiator: br.initiator(),
                len: br.len(),
            });
        }
    }
    u16::try_from(table.len()).map_err(|_| EncodeError::TooManyEntries(table.len()))
}

fn table_len(table: &TreeTable) -> usize {
    table
        .entries()
        .map(|br| ENTRY_PREFIX_LEN + EID_LEN * br.len())
        .sum()
}

/// Size in bytes of `msg` once encoded.
pub fn control_len(msg: &ControlMessage) -> usize {
    ENVELOPE_LEN + CONTROL_FIXED_LEN + table_len(&msg.tree) + table_len(msg.dlmt.tree())
}

pub fn encode_control(msg: &ControlMessage, header: HeaderFields) -> Result<Vec<u8>, EncodeError> {
    let tree_count = check_table(&msg.tree)?;
    let dlmt_count = check_table(msg.dlmt.tree())?;
    let mut buf = Vec::with_capacity(control_len(msg));
    put_envelope(&mut buf, header, msg.sender.node, CONTROL_TYPE_CONTROL);
    buf.push(u8::from(msg.restart));
    put_u16(&mut buf, msg.sender.node.0);
    put_u32(&mut buf, msg.sender.energy.millijoules());
    put_u16(&mut buf, tree_count);
    put_u16(&mut buf, dlmt_count);
    buf.push(0);
    put_entries(&mut buf, &msg.tree);
    put_entries(&mut buf, msg.dlmt.tree());
    patch_length(&mut buf);
    Ok(buf)
}

pub fn encode_hello(hello: &HelloMessage, header: HeaderFields) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HELLO_LEN);
    put_envelope(&mut buf, header, hello.sender, CONTROL_TYPE_HELLO);
    put_u16(&mut buf, hello.sender.0);
    put_u16(&mut buf, hello.root.0);
    patch_length(&mut buf);
    buf
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        let end = self.pos + n;
        if end > self.buf.len() {
            return Err(DecodeError::Truncated {
                needed: end,
                have: self.buf.len(),
            });
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, DecodeError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, DecodeError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, DecodeError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn eid(&mut self) -> Result<Eid, DecodeError> {
        let node = NodeId(self.u16()?);
        let energy = Energy::from_millijoules(self.u32()?);
        Ok(Eid::new(node, energy))
    }
}

fn read_envelope(buf: &[u8], expected_type: u8) -> Result<PacketHeader, DecodeError> {
    if buf.len() < ENVELOPE_LEN {
        return Err(DecodeError::Truncated {
            needed: ENVELOPE_LEN,
            have: buf.len(),
        });
    }
    let found = buf[HEADER_LEN + 2 * ATTRIBUTE_LEN];
    if found != expected_type {
        return Err(DecodeError::WrongType {
            expected: expected_type,
            found,
        });
    }
    let mut r = Reader { buf, pos: 0 };
    let header = PacketHeader {
        destination_id: r.u32()?,
        source_id: r.u32()?,
        packet_number: r.u32()?,
        packet_length: r.u32()?,
    };
    if header.packet_length as usize != buf.len() {
        return Err(DecodeError::LengthMismatch {
            declared: header.packet_length,
            actual: buf.len(),
        });
    }
    Ok(header)
}

fn read_table(r: &mut Reader<'_>, count: u16) -> Result<TreeTable, DecodeError> {
    let mut branches = Vec::with_capacity(usize::from(count));
    let mut owner = None;
    let mut last_key: Option<NodeId> = None;
    for _ in 0..count {
        let key = NodeId(r.u16()?);
        if last_key.is_some_and(|k| k >= key) {
            return Err(DecodeError::Integrity(format!(
                "entries not in ascending initiator order at {key}"
            )));
        }
        last_key = Some(key);
        let len = usize::from(r.u8()?);
        let path = (0..len).map(|_| r.eid()).collect::<Result<Vec<_>, _>>()?;
        let br = BrList::new(path)?;
        if br.initiator() != key {
            return Err(ModelError::KeyMismatch {
                key,
                initiator: br.initiator(),
            }
            .into());
        }
        match owner {
            None => owner = Some(br.holder()),
            Some(o) if o != br.holder() => {
                return Err(DecodeError::Integrity(format!(
                    "entries end at both {o} and {}",
                    br.holder()
                )))
            }
            Some(_) => {}
        }
        branches.push(br);
    }
    let owner = owner.ok_or_else(|| DecodeError::Integrity("empty table".into()))?;
    Ok(TreeTable::from_entries(owner, branches)?)
}

pub fn decode_control(buf: &[u8]) -> Result<(PacketHeader, ControlMessage), DecodeError> {
    let header = read_envelope(buf, CONTROL_TYPE_CONTROL)?;
    let mut r = Reader {
        buf,
        pos: ENVELOPE_LEN,
    };
    let restart = match r.u8()? {
        0 => false,
        1 => true,
        v => return Err(DecodeError::Integrity(format!("restart byte {v}"))),
    };
    let sender = r.eid()?;
    let tree_count = r.u16()?;
    let dlmt_count = r.u16()?;
    r.u8()?;
    let tree = read_table(&mut r, tree_count)?;
    let dlmt_tree = read_table(&mut r, dlmt_count)?;
    if r.pos != buf.len() {
        return Err(DecodeError::Integrity(format!(
            "{} trailing bytes",
            buf.len() - r.pos
        )));
    }
    if tree.owner_eid() != sender {
        return Err(DecodeError::Integrity(format!(
            "tree owner {} does not match sender {}",
            tree.owner_eid(),
            sender
        )));
    }
    if header.source_id != u32::from(sender.node.0) {
        return Err(DecodeError::Integrity(format!(
            "header source {} does not match sender {}",
            header.source_id, sender.node
        )));
    }
    let msg = ControlMessage {
        sender,
        restart,
        tree,
        dlmt: DlmtSelection::from_tree(dlmt_tree),
    };
    Ok((header, msg))
}

pub fn decode_hello(buf: &[u8]) -> Result<(PacketHeader, HelloMessage), DecodeError> {
    let header = read_envelope(buf, CONTROL_TYPE_HELLO)?;
    let mut r = Reader {
        buf,
        pos: ENVELOPE_LEN,
    };
    let hello = HelloMessage {
        sender: NodeId(r.u16()?),
        root: NodeId(r.u16()?),
    };
    if r.pos != buf.len() {
        return Err(DecodeError::Integrity("trailing bytes after hello".into()));
    }
    Ok((header, hello))
}
