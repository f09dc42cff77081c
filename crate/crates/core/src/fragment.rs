//! Code fragments: small binary trees over Boolean operators whose leaves
//! reference input attributes (`D0`, `D1`, ...).
//!
//! A fragment is immutable once built. It caches its leaf count and its
//! canonical key, the text form in which the children of every commutative
//! operator are sorted. Canonicalization is purely structural: no
//! associativity, De Morgan or truth-table merging is attempted.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use fnv::FnvHasher;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryOp {
    And,
    Or,
    Nand,
    Xor,
}

impl BinaryOp {
    pub fn apply(self, a: bool, b: bool) -> bool {
        match self {
            BinaryOp::And => a && b,
            BinaryOp::Or => a || b,
            BinaryOp::Nand => !(a && b),
            BinaryOp::Xor => a ^ b,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::And => "AND",
            BinaryOp::Or => "OR",
            BinaryOp::Nand => "NAND",
            BinaryOp::Xor => "XOR",
        }
    }
}

/// The full operator menu used when growing new fragments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Not,
    Binary(BinaryOp),
}

impl Operator {
    pub const ALL: [Operator; 5] = [
        Operator::Binary(BinaryOp::And),
        Operator::Binary(BinaryOp::Or),
        Operator::Not,
        Operator::Binary(BinaryOp::Nand),
        Operator::Binary(BinaryOp::Xor),
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf(usize),
    Not(Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

impl Node {
    fn eval(&self, input: &[bool]) -> bool {
        match self {
            Node::Leaf(k) => input[*k],
            Node::Not(c) => !c.eval(input),
            Node::Binary(op, a, b) => op.apply(a.eval(input), b.eval(input)),
        }
    }

    fn leaves(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Not(c) => c.leaves(),
            Node::Binary(_, a, b) => a.leaves() + b.leaves(),
        }
    }

    fn max_leaf(&self) -> usize {
        match self {
            Node::Leaf(k) => *k,
            Node::Not(c) => c.max_leaf(),
            Node::Binary(_, a, b) => a.max_leaf().max(b.max_leaf()),
        }
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            Node::Leaf(k) => {
                if !out.contains(k) {
                    out.push(*k);
                }
            }
            Node::Not(c) => c.collect_leaves(out),
            Node::Binary(_, a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    /// Evaluates 64 rows at once; `columns[i]` holds the bits of leaf `leaves[i]`.
    fn eval_word(&self, leaves: &[usize], columns: &[u64]) -> u64 {
        match self {
            Node::Leaf(k) => columns[leaves.iter().position(|l| l == k).expect("collected leaf")],
            Node::Not(c) => !c.eval_word(leaves, columns),
            Node::Binary(op, a, b) => {
                let (x, y) = (a.eval_word(leaves, columns), b.eval_word(leaves, columns));
                match op {
                    BinaryOp::And => x & y,
                    BinaryOp::Or => x | y,
                    BinaryOp::Nand => !(x & y),
                    BinaryOp::Xor => x ^ y,
                }
            }
        }
    }

    fn write_text(&self, out: &mut String) {
        match self {
            Node::Leaf(k) => {
                out.push('D');
                out.push_str(&k.to_string());
            }
            Node::Not(c) => {
                out.push_str("NOT(");
                c.write_text(out);
                out.push(')');
            }
            Node::Binary(op, a, b) => {
                out.push_str(op.name());
                out.push('(');
                a.write_text(out);
                out.push(',');
                b.write_text(out);
                out.push(')');
            }
        }
    }

    /// Returns the canonical form together with its text.
    fn canonical(&self) -> (Node, String) {
        match self {
            Node::Leaf(k) => (Node::Leaf(*k), format!("D{k}")),
            Node::Not(c) => {
                let (node, text) = c.canonical();
                (Node::Not(Box::new(node)), format!("NOT({text})"))
            }
            Node::Binary(op, a, b) => {
                let (mut na, mut ta) = a.canonical();
                let (mut nb, mut tb) = b.canonical();
                if ta > tb {
                    std::mem::swap(&mut na, &mut nb);
                    std::mem::swap(&mut ta, &mut tb);
                }
                let text = format!("{}({ta},{tb})", op.name());
                (Node::Binary(*op, Box::new(na), Box::new(nb)), text)
            }
        }
    }
}

/// Canonical identity of a fragment: the canonical text plus a cached
/// 64-bit FNV fingerprint used for fast inequality checks.
#[derive(Clone)]
pub struct CfKey {
    fingerprint: u64,
    text: Arc<str>,
}

impl CfKey {
    fn new(text: String) -> Self {
        let mut hasher = FnvHasher::default();
        hasher.write(text.as_bytes());
        CfKey {
            fingerprint: hasher.finish(),
            text: text.into(),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
}

impl PartialEq for CfKey {
    fn eq(&self, other: &Self) -> bool {
        self.fingerprint == other.fingerprint
            && (Arc::ptr_eq(&self.text, &other.text) || self.text == other.text)
    }
}

impl Eq for CfKey {}

impl Hash for CfKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.fingerprint);
    }
}

impl PartialOrd for CfKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CfKey {
    fn cmp(&self, other: &Self) -> Ordering {
        if self == other {
            Ordering::Equal
        } else {
            self.text.cmp(&other.text)
        }
    }
}

impl fmt::Debug for CfKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CfKey({})", self.text)
    }
}

impl fmt::Display for CfKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Clone)]
pub struct CodeFragment {
    root: Node,
    leaves: usize,
    max_leaf: usize,
    key: CfKey,
}

/// Shared handle; fragments are immutable and shared between rules and tasks.
pub type Cf = Arc<CodeFragment>;

// bit r of INNER_COLUMNS[i] is bit i of row r
const INNER_COLUMNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

impl CodeFragment {
    pub fn new(root: Node) -> Self {
        let (_, text) = root.canonical();
        CodeFragment {
            leaves: root.leaves(),
            max_leaf: root.max_leaf(),
            key: CfKey::new(text),
            root,
        }
    }

    pub fn leaf(index: usize) -> Self {
        Self::new(Node::Leaf(index))
    }

    pub fn not(child: &CodeFragment) -> Self {
        Self::new(Node::Not(Box::new(child.root.clone())))
    }

    pub fn binary(op: BinaryOp, a: &CodeFragment, b: &CodeFragment) -> Self {
        Self::new(Node::Binary(
            op,
            Box::new(a.root.clone()),
            Box::new(b.root.clone()),
        ))
    }

    pub fn apply(op: Operator, a: &CodeFragment, b: &CodeFragment) -> Self {
        match op {
            Operator::Not => Self::not(a),
            Operator::Binary(op) => Self::binary(op, a, b),
        }
    }

    /// Logical negation that unwraps an outer `NOT` instead of stacking a
    /// second one.
    pub fn negated(&self) -> Self {
        match &self.root {
            Node::Not(child) => Self::new((**child).clone()),
            _ => Self::not(self),
        }
    }

    /// The same fragment with commutative children reordered into
    /// canonical order, so that `render` equals the canonical key.
    pub fn canonicalized(&self) -> Self {
        let (root, _) = self.root.canonical();
        CodeFragment {
            root,
            leaves: self.leaves,
            max_leaf: self.max_leaf,
            key: self.key.clone(),
        }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Number of leaves.
    pub fn complexity(&self) -> usize {
        self.leaves
    }

    pub fn max_leaf(&self) -> usize {
        self.max_leaf
    }

    pub fn key(&self) -> &CfKey {
        &self.key
    }

    pub fn is_base(&self) -> bool {
        matches!(self.root, Node::Leaf(_))
    }

    /// Input indices referenced by the fragment, in first-seen order.
    pub fn distinct_leaves(&self) -> Vec<usize> {
        let mut leaves = Vec::new();
        self.root.collect_leaves(&mut leaves);
        leaves
    }

    /// True when the fragment has the same value on every input, e.g.
    /// `XOR(D3,NOT(D3))`. Decided from the full truth table over the
    /// distinct leaves, so this is only cheap for small fragments.
    pub fn is_constant(&self) -> bool {
        let leaves = self.distinct_leaves();
        let n = leaves.len();
        // the low six leaves vary inside a word, the rest across words
        let inner = n.min(6);
        let rows_mask = if inner == 6 { u64::MAX } else { (1u64 << (1 << inner)) - 1 };
        let mut columns = vec![0u64; n];
        let mut seen = None;
        for word in 0..1u64 << (n - inner) {
            for (i, col) in columns.iter_mut().enumerate() {
                *col = if i < inner {
                    INNER_COLUMNS[i]
                } else if word >> (i - inner) & 1 == 1 {
                    u64::MAX
                } else {
                    0
                };
            }
            let value = self.root.eval_word(&leaves, &columns) & rows_mask;
            let uniform = match value {
                0 => false,
                v if v == rows_mask => true,
                _ => return false,
            };
            if *seen.get_or_insert(uniform) != uniform {
                return false;
            }
        }
        true
    }

    /// Checked evaluation.
    pub fn evaluate(&self, input: &[bool]) -> Result<bool> {
        if self.max_leaf >= input.len() {
            return Err(Error::LeafOutOfRange {
                index: self.max_leaf,
                arity: input.len(),
            });
        }
        Ok(self.root.eval(input))
    }

    /// Unchecked evaluation for the learning loop; the caller has already
    /// validated leaf indices against the input arity.
    #[inline]
    pub fn eval(&self, input: &[bool]) -> bool {
        self.root.eval(input)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.root.write_text(&mut out);
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut parser = Parser {
            src: text.as_bytes(),
            pos: 0,
        };
        let node = parser.node()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(parser.error("trailing input"));
        }
        Ok(Self::new(node))
    }
}

impl PartialEq for CodeFragment {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl Eq for CodeFragment {}

impl fmt::Debug for CodeFragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CodeFragment({})", self.render())
    }
}

impl fmt::Display for CodeFragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl std::str::FromStr for CodeFragment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, byte: u8) -> Result<()> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", byte as char)))
        }
    }

    fn ident(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        // ASCII alphanumerics only, so this slice is valid UTF-8.
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn node(&mut self) -> Result<Node> {
        self.skip_ws();
        let start = self.pos;
        let ident = self.ident().to_string();
        if ident.is_empty() {
            return Err(self.error("expected operator or leaf"));
        }
        if let Some(digits) = ident.strip_prefix('D') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                return digits.parse().map(Node::Leaf).map_err(|_| Error::Parse {
                    pos: start,
                    msg: format!("bad leaf index '{ident}'"),
                });
            }
        }
        let op = match ident.as_str() {
            "NOT" => None,
            "AND" => Some(BinaryOp::And),
            "OR" => Some(BinaryOp::Or),
            "NAND" => Some(BinaryOp::Nand),
            "XOR" => Some(BinaryOp::Xor),
            _ => {
                return Err(Error::Parse {
                    pos: start,
                    msg: format!("unknown operator '{ident}'"),
                })
            }
        };
        self.expect(b'(')?;
        let first = self.node()?;
        let node = match op {
            None => Node::Not(Box::new(first)),
            Some(op) => {
                self.expect(b',')?;
                let second = self.node()?;
                Node::Binary(op, Box::new(first), Box::new(second))
            }
        };
        self.expect(b')')?;
        Ok(node)
    }
}
