//! `.mtb` binary encoding.
//!
//! Layout, all fixed-width fields little-endian:
//!
//! ```text
//! magic      4 bytes  "MTBD"
//! version    u16      1
//! vars       u16      variable count (<= 64)
//! order      vars x u8, variable at each level, top first
//! nodes      u32      node count (>= 1)
//! node*      children before parents; the last node is the root
//! ```
//!
//! Each node is a tag byte followed by LEB128 varints:
//!
//! | tag | payload                                                   |
//! |-----|-----------------------------------------------------------|
//! | 0   | no-input terminal                                         |
//! | 1   | single input `k`                                          |
//! | 2   | set: `len`, first member, then `member[i] - member[i-1] - 1` |
//! | 3   | decision: `var`, `pos - low_pos`, `pos - high_pos`        |
//!
//! The encoding of a reduced diagram is canonical, and the decoder rejects
//! anything that is not: repeated nodes, equal children, unreachable nodes,
//! order violations and trailing bytes are all format errors.

use rustc_hash::FxHashMap;

use super::{DiagramError, Manager, Node, NodeHandle, TerminalLabel, VariableOrder, MAX_VARS};

pub const MAGIC: [u8; 4] = *b"MTBD";
pub const VERSION: u16 = 1;

const TAG_NO_INPUT: u8 = 0;
const TAG_INPUT: u8 = 1;
const TAG_SET: u8 = 2;
const TAG_DECISION: u8 = 3;

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

pub(super) fn encode(m: &Manager, root: NodeHandle) -> Vec<u8> {
    let topo = m.topological(root);
    let mut out = Vec::with_capacity(12 + m.var_count() + topo.len() * 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.var_count() as u16).to_le_bytes());
    out.extend_from_slice(m.order().levels());
    out.extend_from_slice(&(topo.len() as u32).to_le_bytes());

    let mut pos: FxHashMap<NodeHandle, u64> = FxHashMap::default();
    for (i, &h) in topo.iter().enumerate() {
        let i = i as u64;
        match m.node(h) {
            Node::Terminal(TerminalLabel::NoInput) => out.push(TAG_NO_INPUT),
            Node::Terminal(TerminalLabel::Input(k)) => {
                out.push(TAG_INPUT);
                put_varint(&mut out, u64::from(*k));
            }
            Node::Terminal(TerminalLabel::Set(s)) => {
                out.push(TAG_SET);
                put_varint(&mut out, s.len() as u64);
                put_varint(&mut out, u64::from(s[0]));
                for w in s.windows(2) {
                    put_varint(&mut out, u64::from(w[1] - w[0] - 1));
                }
            }
            Node::Decision { var, low, high } => {
                out.push(TAG_DECISION);
                put_varint(&mut out, u64::from(*var));
                put_varint(&mut out, i - pos[low]);
                put_varint(&mut out, i - pos[high]);
            }
        }
        pos.insert(h, i);
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DiagramError> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| fmt_err("unexpected end of input"))?;
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn byte(&mut self) -> Result<u8, DiagramError> {
        Ok(self.take(1)?[0])
    }

    fn varint(&mut self) -> Result<u64, DiagramError> {
        let mut v: u64 = 0;
        for shift in (0..64).step_by(7) {
            let b = self.byte()?;
            let chunk = u64::from(b & 0x7f);
            if shift == 63 && chunk > 1 {
                return Err(fmt_err("varint overflow"));
            }
            v |= chunk << shift;
            if b & 0x80 == 0 {
                if b == 0 && shift > 0 {
                    return Err(fmt_err("non-minimal varint"));
                }
                return Ok(v);
            }
        }
        Err(fmt_err("varint overflow"))
    }

    fn u32_value(&mut self) -> Result<u32, DiagramError> {
        u32::try_from(self.varint()?).map_err(|_| fmt_err("value exceeds 32 bits"))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.at
    }
}

fn fmt_err(msg: impl Into<String>) -> DiagramError {
    DiagramError::Format(msg.into())
}

/// Decodes an `.mtb` byte sequence into a fresh manager.
pub fn decode(bytes: &[u8]) -> Result<(Manager, NodeHandle), DiagramError> {
    let mut r = Reader { buf: bytes, at: 0 };
    if r.take(4)? != MAGIC {
        return Err(fmt_err("bad magic"));
    }
    let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
    if version != VERSION {
        return Err(fmt_err(format!("unsupported version {version}")));
    }
    let vars = u16::from_le_bytes(r.take(2)?.try_into().unwrap()) as usize;
    if vars > MAX_VARS {
        return Err(fmt_err(format!("{vars} variables exceeds {MAX_VARS}")));
    }
    let order = VariableOrder::from_levels(r.take(vars)?.to_vec())
        .map_err(|e| fmt_err(e.to_string()))?;
    let count = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
    if count == 0 {
        return Err(fmt_err("empty diagram"));
    }
    if count > r.remaining() {
        return Err(fmt_err("node count exceeds input length"));
    }

    let mut m = Manager::new(order);
    let mut handles: Vec<NodeHandle> = Vec::with_capacity(count);
    for i in 0..count {
        let tag = r.byte()?;
        let h = match tag {
            TAG_NO_INPUT => m.mk_terminal(TerminalLabel::NoInput),
            TAG_INPUT => {
                let k = r.u32_value()?;
                m.mk_terminal(TerminalLabel::Input(k))
            }
            TAG_SET => {
                let len = r.varint()?;
                if len < 2 {
                    return Err(fmt_err("set label needs at least two members"));
                }
                if len > r.remaining() as u64 {
                    return Err(fmt_err("set length exceeds input length"));
                }
                let mut members = Vec::with_capacity(len as usize);
                let mut cur = u64::from(r.u32_value()?);
                members.push(cur as u32);
                for _ in 1..len {
                    cur = cur
                        .checked_add(r.varint()?)
                        .and_then(|c| c.checked_add(1))
                        .filter(|&c| c <= u64::from(u32::MAX))
                        .ok_or_else(|| fmt_err("set member exceeds 32 bits"))?;
                    members.push(cur as u32);
                }
                m.mk_terminal(TerminalLabel::Set(members.into_boxed_slice()))
            }
            TAG_DECISION => {
                let var = r.varint()?;
                if var >= vars as u64 {
                    return Err(fmt_err(format!("variable {var} out of range")));
                }
                let mut child = || -> Result<NodeHandle, DiagramError> {
                    let d = r.varint()?;
                    if d == 0 || d > i as u64 {
                        return Err(fmt_err("child reference out of range"));
                    }
                    Ok(handles[i - d as usize])
                };
                let low = child()?;
                let high = child()?;
                if low == high {
                    return Err(fmt_err("decision node with equal children"));
                }
                m.mk_node(var as u8, low, high)
                    .map_err(|e| fmt_err(e.to_string()))?
            }
            t => return Err(fmt_err(format!("unknown node tag {t}"))),
        };
        if h.index() != i {
            return Err(fmt_err("duplicate node"));
        }
        handles.push(h);
    }
    if r.remaining() != 0 {
        return Err(fmt_err("trailing bytes"));
    }
    let root = handles[count - 1];
    if m.node_count(root) != count {
        return Err(fmt_err("unreachable nodes"));
    }
    Ok((m, root))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Manager, NodeHandle) {
        let mut m = Manager::new(VariableOrder::from_levels(vec![1, 0]).unwrap());
        let a = m.mk_terminal(TerminalLabel::set([1, 5, 200]).unwrap());
        let b = m.mk_terminal(TerminalLabel::Input(300));
        let nc = m.no_input();
        let n = m.mk_node(0, a, b).unwrap();
        let root = m.mk_node(1, n, nc).unwrap();
        (m, root)
    }

    #[test]
    fn round_trip() {
        let (m, root) = sample();
        let bytes = m.serialize(root);
        let (m2, r2) = decode(&bytes).unwrap();
        assert_eq!(m2.order(), m.order());
        assert_eq!(m2.serialize(r2), bytes);
        for code in 0..4 {
            assert_eq!(m.eval(root, code), m2.eval(r2, code));
        }
    }

    #[test]
    fn exact_layout_of_single_terminal() {
        let mut m = Manager::with_vars(0);
        let t = m.mk_terminal(TerminalLabel::Input(130));
        assert_eq!(
            m.serialize(t),
            vec![b'M', b'T', b'B', b'D', 1, 0, 0, 0, 1, 0, 0, 0, 1, 0x82, 0x01]
        );
    }

    #[test]
    fn rejects_malformed() {
        let (m, root) = sample();
        let good = m.serialize(root);
        assert!(decode(&good[..good.len() - 1]).is_err());
        let mut extra = good.clone();
        extra.push(0);
        assert!(decode(&extra).is_err());
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(decode(&bad_magic).is_err());
        assert!(decode(&[]).is_err());
    }

    #[test]
    fn rejects_duplicate_and_redundant_nodes() {
        // Two identical terminals.
        let mut dup = Vec::new();
        dup.extend_from_slice(&MAGIC);
        dup.extend_from_slice(&VERSION.to_le_bytes());
        dup.extend_from_slice(&1u16.to_le_bytes());
        dup.push(0);
        dup.extend_from_slice(&3u32.to_le_bytes());
        dup.extend_from_slice(&[TAG_INPUT, 4, TAG_INPUT, 4, TAG_DECISION, 0, 2, 1]);
        assert!(matches!(decode(&dup), Err(DiagramError::Format(_))));

        let mut same = Vec::new();
        same.extend_from_slice(&MAGIC);
        same.extend_from_slice(&VERSION.to_le_bytes());
        same.extend_from_slice(&1u16.to_le_bytes());
        same.push(0);
        same.extend_from_slice(&2u32.to_le_bytes());
        same.extend_from_slice(&[TAG_INPUT, 4, TAG_DECISION, 0, 1, 1]);
        assert!(matches!(decode(&same), Err(DiagramError::Format(_))));
    }

    #[test]
    fn adding_a_node_grows_the_encoding() {
        let mut m = Manager::with_vars(3);
        let a = m.mk_terminal(TerminalLabel::Input(1));
        let b = m.mk_terminal(TerminalLabel::Input(2));
        let n = m.mk_node(2, a, b).unwrap();
        let before = m.serialized_len(n);
        let c = m.mk_terminal(TerminalLabel::Input(3));
        let grown = m.mk_node(1, n, c).unwrap();
        assert!(m.serialized_len(grown) > before);
        let top = m.mk_node(0, grown, n).unwrap();
        assert!(m.serialized_len(top) > m.serialized_len(grown));
    }
}
