//! Canonical preorder tree encoding:
//!
//! ```text
//! leaf            := 0x00 u16:len label-bytes      (label as authority/name)
//! threshold gate  := 0x01 u16:k u16:n child*n
//! additive gate   := 0x02 u16:n child*n
//! ```

use super::{AccessTree, Gate, GateKind, Node, PolicyError};
use crate::wire::{Reader, WireError, Writer};

const TAG_LEAF: u8 = 0x00;
const TAG_THRESHOLD: u8 = 0x01;
const TAG_ADDITIVE: u8 = 0x02;
const MAX_DEPTH: usize = 64;

impl From<WireError> for PolicyError {
    fn from(_: WireError) -> Self {
        PolicyError::Malformed("truncated tree")
    }
}

impl AccessTree {
    pub fn encode(&self, w: &mut Writer) {
        fn node(n: &Node, w: &mut Writer) {
            match n {
                Node::Leaf(l) => {
                    let s = l.to_string();
                    w.u8(TAG_LEAF).u16(s.len() as u16).raw(s.as_bytes());
                }
                Node::Gate(g) => {
                    match g.kind() {
                        GateKind::Threshold => w.u8(TAG_THRESHOLD).u16(g.threshold() as u16),
                        GateKind::Additive => w.u8(TAG_ADDITIVE),
                    };
                    w.u16(g.children().len() as u16);
                    g.children().iter().for_each(|c| node(c, w));
                }
            }
        }
        node(self.root(), w);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w);
        w.into_bytes()
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<AccessTree, PolicyError> {
        fn node(r: &mut Reader<'_>, depth: usize) -> Result<Node, PolicyError> {
            if depth > MAX_DEPTH {
                return Err(PolicyError::Malformed("tree too deep"));
            }
            match r.u8()? {
                TAG_LEAF => {
                    let len = r.u16()? as usize;
                    let raw = std::str::from_utf8(r.raw(len)?).map_err(|_| PolicyError::Malformed("label utf-8"))?;
                    Ok(Node::Leaf(raw.parse()?))
                }
                TAG_THRESHOLD => {
                    let k = r.u16()? as usize;
                    let children = children(r, depth)?;
                    Node::threshold(k, children)
                }
                TAG_ADDITIVE => {
                    let children = children(r, depth)?;
                    if children.is_empty() {
                        return Err(PolicyError::EmptyGate);
                    }
                    Ok(Node::Gate(Gate::additive(children)))
                }
                _ => Err(PolicyError::Malformed("unknown node tag")),
            }
        }
        fn children(r: &mut Reader<'_>, depth: usize) -> Result<Vec<Node>, PolicyError> {
            let n = r.u16()? as usize;
            // Every child takes at least 3 bytes.
            if n.saturating_mul(3) > r.remaining() {
                return Err(PolicyError::Malformed("truncated tree"));
            }
            (0..n).map(|_| node(r, depth + 1)).collect()
        }
        node(r, 0).map(AccessTree::new)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<AccessTree, PolicyError> {
        let mut r = Reader::new(bytes);
        let tree = AccessTree::decode(&mut r)?;
        r.finish().map_err(|_| PolicyError::Malformed("trailing bytes after tree"))?;
        Ok(tree)
    }
}
