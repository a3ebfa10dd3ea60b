//! A SMARTS subset for substructure queries.
//!
//! Supported: organic and bracket element symbols, `#n`, `a`, `A`, `*`,
//! `H<n>`, `D<n>`, `R` / `R0`, charges, the logical operators `!`, `&`, `,`,
//! `;`, branches, ring closures and the bond primitives `- = # : ~ @`.
//! Recursive SMARTS, component grouping, stereo and the remaining
//! primitives are rejected with [`PatternError::Unsupported`].

use std::fmt;

use thiserror::Error;

use crate::element::Element;
use crate::mol::{cyclic_atoms, cyclic_bonds, BondOrder, MoleculeGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("empty pattern")]
    Empty,
    #[error("unsupported construct '{construct}' at position {position}")]
    Unsupported { construct: String, position: usize },
    #[error("syntax error at position {position}: {message}")]
    Syntax { message: String, position: usize },
    #[error("unknown element '{symbol}' at position {position}")]
    UnknownElement { symbol: String, position: usize },
    #[error("pattern is not connected")]
    Disconnected,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomPrimitive {
    /// `aromatic: None` for `#n`, which matches either form.
    Element {
        element: Element,
        aromatic: Option<bool>,
    },
    Any,
    Aromatic,
    Aliphatic,
    Charge(i8),
    InRing(bool),
    Degree(u8),
    HydrogenCount(u8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomExpr {
    Primitive(AtomPrimitive),
    Not(Box<AtomExpr>),
    And(Vec<AtomExpr>),
    Or(Vec<AtomExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondPrimitive {
    Single,
    Double,
    Triple,
    Aromatic,
    Ring,
    Any,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BondExpr {
    Primitive(BondPrimitive),
    Not(Box<BondExpr>),
    And(Vec<BondExpr>),
    Or(Vec<BondExpr>),
}

impl BondExpr {
    /// The implicit bond between two pattern atoms: single or aromatic.
    pub fn implicit() -> BondExpr {
        BondExpr::Or(vec![
            BondExpr::Primitive(BondPrimitive::Single),
            BondExpr::Primitive(BondPrimitive::Aromatic),
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternAtom {
    pub expr: AtomExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternBond {
    pub endpoints: (usize, usize),
    pub expr: BondExpr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub atoms: Vec<PatternAtom>,
    pub bonds: Vec<PatternBond>,
    pub source: String,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

/// Per-molecule properties consulted by pattern predicates.
#[derive(Debug, Clone)]
pub struct MolContext<'a> {
    pub mol: &'a MoleculeGraph,
    pub adjacency: Vec<Vec<(usize, usize)>>,
    pub in_ring: Vec<bool>,
    pub ring_bond: Vec<bool>,
}

impl<'a> MolContext<'a> {
    pub fn new(mol: &'a MoleculeGraph) -> Self {
        MolContext {
            mol,
            adjacency: mol.adjacency(),
            in_ring: cyclic_atoms(mol),
            ring_bond: cyclic_bonds(mol),
        }
    }
}

impl AtomPrimitive {
    fn matches(&self, ctx: &MolContext<'_>, i: usize) -> bool {
        let atom = &ctx.mol.atoms[i];
        match *self {
            AtomPrimitive::Element { element, aromatic } => {
                atom.element == element && aromatic.is_none_or(|ar| ar == atom.aromatic)
            }
            AtomPrimitive::Any => true,
            AtomPrimitive::Aromatic => atom.aromatic,
            AtomPrimitive::Aliphatic => !atom.aromatic,
            AtomPrimitive::Charge(c) => atom.formal_charge == c,
            AtomPrimitive::InRing(r) => ctx.in_ring[i] == r,
            AtomPrimitive::Degree(d) => ctx.adjacency[i].len() == d as usize,
            AtomPrimitive::HydrogenCount(h) => atom.hydrogen_count() == h,
        }
    }
}

impl AtomExpr {
    pub fn matches(&self, ctx: &MolContext<'_>, i: usize) -> bool {
        match self {
            AtomExpr::Primitive(p) => p.matches(ctx, i),
            AtomExpr::Not(e) => !e.matches(ctx, i),
            AtomExpr::And(es) => es.iter().all(|e| e.matches(ctx, i)),
            AtomExpr::Or(es) => es.iter().any(|e| e.matches(ctx, i)),
        }
    }
}

impl BondExpr {
    pub fn matches(&self, ctx: &MolContext<'_>, b: usize) -> bool {
        match self {
            BondExpr::Primitive(p) => {
                let order = ctx.mol.bonds[b].order;
                match p {
                    BondPrimitive::Single => order == BondOrder::Single,
                    BondPrimitive::Double => order == BondOrder::Double,
                    BondPrimitive::Triple => order == BondOrder::Triple,
                    BondPrimitive::Aromatic => order == BondOrder::Aromatic,
                    BondPrimitive::Ring => ctx.ring_bond[b],
                    BondPrimitive::Any => true,
                }
            }
            BondExpr::Not(e) => !e.matches(ctx, b),
            BondExpr::And(es) => es.iter().all(|e| e.matches(ctx, b)),
            BondExpr::Or(es) => es.iter().any(|e| e.matches(ctx, b)),
        }
    }
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

fn unsupported<T>(construct: &str, position: usize) -> Result<T, PatternError> {
    Err(PatternError::Unsupported {
        construct: construct.to_string(),
        position,
    })
}

fn syntax<T>(message: &str, position: usize) -> Result<T, PatternError> {
    Err(PatternError::Syntax {
        message: message.to_string(),
        position,
    })
}

/// Binary operator precedence levels inside an expression, lowest first.
const OPS: [u8; 3] = *b";,&";

/// Generic precedence-climbing parser shared by atom and bond expressions.
fn parse_levels<E, P>(
    p: &mut Parser<'_>,
    level: usize,
    end: usize,
    primitive: &mut P,
    and: fn(Vec<E>) -> E,
    or: fn(Vec<E>) -> E,
    not: fn(E) -> E,
) -> Result<E, PatternError>
where
    P: FnMut(&mut Parser<'_>, usize) -> Result<E, PatternError>,
{
    if level == OPS.len() {
        // unary level with implicit conjunction of adjacent terms
        let mut terms = Vec::new();
        loop {
            if p.pos >= end || OPS.contains(&p.text[p.pos]) {
                break;
            }
            let mut negations = 0;
            while p.pos < end && p.text[p.pos] == b'!' {
                negations += 1;
                p.pos += 1;
            }
            if p.pos >= end || OPS.contains(&p.text[p.pos]) {
                return syntax("operator without operand", p.pos);
            }
            let mut e = primitive(p, end)?;
            for _ in 0..negations {
                e = not(e);
            }
            terms.push(e);
        }
        return match terms.len() {
            0 => syntax("empty expression", p.pos),
            1 => Ok(terms.pop().unwrap()),
            _ => Ok(and(terms)),
        };
    }
    let op = OPS[level];
    let mut parts = vec![parse_levels(p, level + 1, end, primitive, and, or, not)?];
    while p.pos < end && p.text[p.pos] == op {
        p.pos += 1;
        parts.push(parse_levels(p, level + 1, end, primitive, and, or, not)?);
    }
    Ok(if parts.len() == 1 {
        parts.pop().unwrap()
    } else if op == b',' {
        or(parts)
    } else {
        and(parts)
    })
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn digits(&mut self, end: usize) -> Option<u32> {
        let start = self.pos;
        while self.pos < end && self.text[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        (self.pos > start).then(|| {
            std::str::from_utf8(&self.text[start..self.pos])
                .unwrap()
                .parse()
                .unwrap_or(u32::MAX)
        })
    }

    fn atom_primitive(&mut self, end: usize) -> Result<AtomExpr, PatternError> {
        use AtomPrimitive as P;
        let start = self.pos;
        let c = self.text[self.pos];
        let prim = |p: P| Ok(AtomExpr::Primitive(p));
        match c {
            b'*' => {
                self.pos += 1;
                prim(P::Any)
            }
            b'a' if self.text.get(self.pos + 1) != Some(&b's') => {
                self.pos += 1;
                prim(P::Aromatic)
            }
            b'A' if !self.text.get(self.pos + 1).is_some_and(|&n| {
                n.is_ascii_lowercase() && Element::from_symbol(&format!("A{}", n as char)).is_some()
            }) =>
            {
                self.pos += 1;
                prim(P::Aliphatic)
            }
            b'#' => {
                self.pos += 1;
                let Some(z) = self.digits(end) else {
                    return syntax("'#' needs an atomic number", start);
                };
                match Element::from_atomic_number(z) {
                    Some(element) => prim(P::Element {
                        element,
                        aromatic: None,
                    }),
                    None => Err(PatternError::UnknownElement {
                        symbol: format!("#{z}"),
                        position: start,
                    }),
                }
            }
            b'D' => {
                self.pos += 1;
                let d = self.digits(end).unwrap_or(1);
                prim(P::Degree(d.min(255) as u8))
            }
            b'H' => {
                self.pos += 1;
                let h = self.digits(end).unwrap_or(1);
                prim(P::HydrogenCount(h.min(255) as u8))
            }
            b'R' => {
                self.pos += 1;
                match self.digits(end) {
                    None => prim(P::InRing(true)),
                    Some(0) => prim(P::InRing(false)),
                    Some(_) => unsupported("R<n> ring count", start),
                }
            }
            b'+' | b'-' => {
                self.pos += 1;
                let unit: i32 = if c == b'+' { 1 } else { -1 };
                let charge = match self.digits(end) {
                    Some(v) => unit * v as i32,
                    None => {
                        let mut v = unit;
                        while self.pos < end && self.text[self.pos] == c {
                            v += unit;
                            self.pos += 1;
                        }
                        v
                    }
                };
                prim(P::Charge(charge.clamp(-128, 127) as i8))
            }
            b'$' => unsupported("recursive SMARTS $(...)", start),
            b'@' => unsupported("chirality", start),
            b'X' => unsupported("X connectivity", start),
            b'x' => unsupported("x ring connectivity", start),
            b'v' => unsupported("v valence", start),
            b'r' => unsupported("r ring size", start),
            b'^' => unsupported("hybridisation", start),
            b':' => unsupported("atom map", start),
            b'0'..=b'9' => unsupported("isotope", start),
            b'c' | b'n' | b'o' | b'p' | b's' | b'b' => {
                let two = self.text.get(self.pos..self.pos + 2);
                let (sym, len) = match two {
                    Some(b"se") => ("Se", 2),
                    _ => (
                        match c {
                            b'c' => "C",
                            b'n' => "N",
                            b'o' => "O",
                            b'p' => "P",
                            b's' => "S",
                            _ => "B",
                        },
                        1,
                    ),
                };
                self.pos += len;
                prim(P::Element {
                    element: Element::from_symbol(sym).unwrap(),
                    aromatic: Some(true),
                })
            }
            b'a' => {
                // "as": aromatic arsenic
                self.pos += 2;
                prim(P::Element {
                    element: Element::from_symbol("As").unwrap(),
                    aromatic: Some(true),
                })
            }
            _ if c.is_ascii_uppercase() => {
                let two = self
                    .text
                    .get(self.pos + 1)
                    .filter(|n| n.is_ascii_lowercase() && self.pos + 1 < end)
                    .and_then(|&n| Element::from_symbol(&format!("{}{}", c as char, n as char)));
                let (element, len) = match two {
                    Some(e) => (e, 2),
                    None => match Element::from_symbol(&(c as char).to_string()) {
                        Some(e) => (e, 1),
                        None => {
                            return Err(PatternError::UnknownElement {
                                symbol: (c as char).to_string(),
                                position: start,
                            })
                        }
                    },
                };
                self.pos += len;
                prim(P::Element {
                    element,
                    aromatic: Some(false),
                })
            }
            _ => syntax(&format!("unexpected '{}'", c as char), start),
        }
    }

    fn bond_primitive(&mut self, _end: usize) -> Result<BondExpr, PatternError> {
        use BondPrimitive as B;
        let start = self.pos;
        let c = self.text[self.pos];
        self.pos += 1;
        let p = match c {
            b'-' => B::Single,
            b'=' => B::Double,
            b'#' => B::Triple,
            b':' => B::Aromatic,
            b'~' => B::Any,
            b'@' => B::Ring,
            b'/' | b'\\' => return unsupported("directional bond", start),
            b'$' => return unsupported("quadruple bond", start),
            _ => return syntax(&format!("unexpected '{}' in bond", c as char), start),
        };
        Ok(BondExpr::Primitive(p))
    }

    fn bracket_expr(&mut self) -> Result<AtomExpr, PatternError> {
        let open = self.pos;
        self.pos += 1;
        let Some(rel) = self.text[self.pos..].iter().position(|&c| c == b']') else {
            return syntax("unclosed '['", open);
        };
        let end = self.pos + rel;
        let body = &self.text[self.pos..end];
        if body.windows(2).any(|w| w == b"$(") {
            let at = self.pos + body.windows(2).position(|w| w == b"$(").unwrap();
            return unsupported("recursive SMARTS $(...)", at);
        }
        if body.contains(&b'[') {
            return syntax("nested '['", open);
        }
        // a lone H is the hydrogen element, not an H-count
        if body == b"H" {
            self.pos = end + 1;
            return Ok(AtomExpr::Primitive(AtomPrimitive::Element {
                element: Element::H,
                aromatic: Some(false),
            }));
        }
        let e = parse_levels(
            self,
            0,
            end,
            &mut |p: &mut Parser<'_>, end| p.atom_primitive(end),
            AtomExpr::And,
            AtomExpr::Or,
            |e| AtomExpr::Not(Box::new(e)),
        )?;
        if self.pos != end {
            return syntax("trailing characters in bracket atom", self.pos);
        }
        self.pos = end + 1;
        Ok(e)
    }

    fn organic_atom(&mut self) -> Result<AtomExpr, PatternError> {
        let start = self.pos;
        let rest = &self.text[self.pos..];
        let (sym, aromatic, len): (&str, Option<bool>, usize) = match rest {
            [b'C', b'l', ..] => ("Cl", Some(false), 2),
            [b'B', b'r', ..] => ("Br", Some(false), 2),
            [b'B', ..] => ("B", Some(false), 1),
            [b'C', ..] => ("C", Some(false), 1),
            [b'N', ..] => ("N", Some(false), 1),
            [b'O', ..] => ("O", Some(false), 1),
            [b'P', ..] => ("P", Some(false), 1),
            [b'S', ..] => ("S", Some(false), 1),
            [b'F', ..] => ("F", Some(false), 1),
            [b'I', ..] => ("I", Some(false), 1),
            [b'b', ..] => ("B", Some(true), 1),
            [b'c', ..] => ("C", Some(true), 1),
            [b'n', ..] => ("N", Some(true), 1),
            [b'o', ..] => ("O", Some(true), 1),
            [b'p', ..] => ("P", Some(true), 1),
            [b's', ..] => ("S", Some(true), 1),
            [b'*', ..] => ("*", None, 1),
            [b'a', ..] => ("a", None, 1),
            [b'A', ..] => ("A", None, 1),
            _ => {
                return Err(PatternError::UnknownElement {
                    symbol: (rest[0] as char).to_string(),
                    position: start,
                })
            }
        };
        self.pos += len;
        Ok(AtomExpr::Primitive(match sym {
            "*" => AtomPrimitive::Any,
            "a" => AtomPrimitive::Aromatic,
            "A" => AtomPrimitive::Aliphatic,
            _ => AtomPrimitive::Element {
                element: Element::from_symbol(sym).unwrap(),
                aromatic,
            },
        }))
    }

    fn bond_expr(&mut self) -> Result<Option<BondExpr>, PatternError> {
        const BOND_CHARS: &[u8] = b"-=#:~@!&,;/\\$";
        let start = self.pos;
        let mut end = start;
        while end < self.text.len() && BOND_CHARS.contains(&self.text[end]) {
            // "$(" starts a recursive atom, never a bond
            if self.text[end] == b'$' && self.text.get(end + 1) == Some(&b'(') {
                break;
            }
            end += 1;
        }
        if end == start {
            return Ok(None);
        }
        let e = parse_levels(
            self,
            0,
            end,
            &mut |p: &mut Parser<'_>, end| p.bond_primitive(end),
            BondExpr::And,
            BondExpr::Or,
            |e| BondExpr::Not(Box::new(e)),
        )?;
        if self.pos != end {
            return syntax("malformed bond expression", self.pos);
        }
        Ok(Some(e))
    }
}

struct RingOpen {
    atom: usize,
    bond: Option<BondExpr>,
    position: usize,
}

/// Parses a pattern written in the supported SMARTS subset.
pub fn parse_pattern(text: &str) -> Result<Pattern, PatternError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(PatternError::Empty);
    }
    let mut p = Parser {
        text: trimmed.as_bytes(),
        pos: 0,
    };
    let mut atoms: Vec<PatternAtom> = Vec::new();
    let mut bonds: Vec<PatternBond> = Vec::new();
    let mut current: Option<usize> = None;
    let mut branches: Vec<usize> = Vec::new();
    let mut rings: std::collections::BTreeMap<u32, RingOpen> = Default::default();

    let add_bond = |bonds: &mut Vec<PatternBond>, a: usize, b: usize, expr: BondExpr, pos| {
        if a == b || bonds.iter().any(|x| x.endpoints == (a.min(b), a.max(b))) {
            return syntax("duplicate bond", pos);
        }
        bonds.push(PatternBond {
            endpoints: (a.min(b), a.max(b)),
            expr,
        });
        Ok(())
    };

    while let Some(c) = p.peek() {
        let start = p.pos;
        if c == b'$' && p.text.get(start + 1) == Some(&b'(') {
            return unsupported("recursive SMARTS $(...)", start);
        }
        let bond = p.bond_expr()?;
        let Some(c) = p.peek() else {
            return syntax("bond without a following atom", start);
        };
        match c {
            b'(' => {
                if bond.is_some() || current.is_none() {
                    return syntax("misplaced '('", p.pos);
                }
                branches.push(current.unwrap());
                p.pos += 1;
            }
            b')' => {
                if bond.is_some() {
                    return syntax("bond without a following atom", start);
                }
                let Some(a) = branches.pop() else {
                    return syntax("unbalanced ')'", p.pos);
                };
                current = Some(a);
                p.pos += 1;
            }
            b'.' => return unsupported("component-level '.'", p.pos),
            b'0'..=b'9' | b'%' => {
                let Some(atom) = current else {
                    return syntax("ring closure without an atom", p.pos);
                };
                let position = p.pos;
                let label = if c == b'%' {
                    p.pos += 1;
                    match p.text.get(p.pos..p.pos + 2) {
                        Some(d) if d.iter().all(u8::is_ascii_digit) => {
                            p.pos += 2;
                            u32::from(d[0] - b'0') * 10 + u32::from(d[1] - b'0')
                        }
                        _ => return syntax("'%' needs two digits", position),
                    }
                } else {
                    p.pos += 1;
                    u32::from(c - b'0')
                };
                match rings.remove(&label) {
                    None => {
                        rings.insert(
                            label,
                            RingOpen {
                                atom,
                                bond,
                                position,
                            },
                        );
                    }
                    Some(open) => {
                        let expr = open.bond.or(bond).unwrap_or_else(BondExpr::implicit);
                        add_bond(&mut bonds, open.atom, atom, expr, position)?;
                    }
                }
            }
            b'[' => {
                let expr = p.bracket_expr()?;
                atoms.push(PatternAtom { expr });
                let idx = atoms.len() - 1;
                match current {
                    Some(prev) => add_bond(
                        &mut bonds,
                        prev,
                        idx,
                        bond.unwrap_or_else(BondExpr::implicit),
                        start,
                    )?,
                    None if bond.is_some() => {
                        return syntax("bond without a preceding atom", start)
                    }
                    None => {}
                }
                current = Some(idx);
            }
            _ if c.is_ascii_alphabetic() || c == b'*' => {
                let expr = p.organic_atom()?;
                atoms.push(PatternAtom { expr });
                let idx = atoms.len() - 1;
                match current {
                    Some(prev) => add_bond(
                        &mut bonds,
                        prev,
                        idx,
                        bond.unwrap_or_else(BondExpr::implicit),
                        start,
                    )?,
                    None if bond.is_some() => {
                        return syntax("bond without a preceding atom", start)
                    }
                    None => {}
                }
                current = Some(idx);
            }
            b']' => return syntax("unbalanced ']'", p.pos),
            _ => return syntax(&format!("unexpected '{}'", c as char), p.pos),
        }
    }
    if !branches.is_empty() {
        return syntax("unbalanced '('", trimmed.len());
    }
    if let Some((_, open)) = rings.iter().next() {
        return syntax("unmatched ring closure", open.position);
    }
    if atoms.is_empty() {
        return Err(PatternError::Empty);
    }
    // connectivity
    let mut seen = vec![false; atoms.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for b in &bonds {
            let (x, y) = b.endpoints;
            let v = if x == u {
                y
            } else if y == u {
                x
            } else {
                continue;
            };
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(PatternError::Disconnected);
    }
    Ok(Pattern {
        atoms,
        bonds,
        source: trimmed.to_string(),
    })
}
