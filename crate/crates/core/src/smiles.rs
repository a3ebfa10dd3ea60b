//! SMILES reading and writing.
//!
//! Covers the organic subset, bracket atoms (isotope ignored, charge and
//! hydrogen count kept), branches, ring closures `1`-`9` and `%nn`, and the
//! bond symbols `- = # :`. Stereo markers (`/ \ @`) are accepted and dropped.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::element::Element;
use crate::mol::{Atom, Bond, BondOrder, MoleculeGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("empty SMILES")]
    Empty,
    #[error("unmatched ring closure {label} opened at position {position}")]
    UnmatchedRingClosure { label: u32, position: usize },
    #[error("unbalanced bracket at position {position}")]
    UnbalancedBracket { position: usize },
    #[error("unbalanced parenthesis at position {position}")]
    UnbalancedParenthesis { position: usize },
    #[error("unknown element '{symbol}' at position {position}")]
    UnknownElement { symbol: String, position: usize },
    #[error("bond at position {position} does not join two atoms")]
    DanglingBond { position: usize },
    #[error("bond at position {position} duplicates an existing bond or loops onto one atom")]
    DuplicateBond { position: usize },
    #[error("ring closure {label} at position {position} has conflicting bond symbols")]
    ConflictingRingBond { label: u32, position: usize },
    #[error("unexpected character '{ch}' at position {position}")]
    UnexpectedCharacter { ch: char, position: usize },
    #[error("unsupported construct '{construct}' at position {position}")]
    Unsupported { construct: String, position: usize },
}

impl SmilesError {
    /// Stable short name of the error category, used in diagnostics files.
    pub fn category(&self) -> &'static str {
        match self {
            SmilesError::Empty => "empty",
            SmilesError::UnmatchedRingClosure { .. } => "unmatched-ring-closure",
            SmilesError::UnbalancedBracket { .. } => "unbalanced-bracket",
            SmilesError::UnbalancedParenthesis { .. } => "unbalanced-parenthesis",
            SmilesError::UnknownElement { .. } => "unknown-element",
            SmilesError::DanglingBond { .. } => "dangling-bond",
            SmilesError::DuplicateBond { .. } => "duplicate-bond",
            SmilesError::ConflictingRingBond { .. } => "conflicting-ring-bond",
            SmilesError::UnexpectedCharacter { .. } => "unexpected-character",
            SmilesError::Unsupported { .. } => "unsupported",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSymbol {
    Single,
    Double,
    Triple,
    Aromatic,
    /// `/` or `\`: a single bond carrying stereo information we discard.
    Directional,
}

impl BondSymbol {
    fn order(self) -> BondOrder {
        match self {
            BondSymbol::Single | BondSymbol::Directional => BondOrder::Single,
            BondSymbol::Double => BondOrder::Double,
            BondSymbol::Triple => BondOrder::Triple,
            BondSymbol::Aromatic => BondOrder::Aromatic,
        }
    }
}

struct RingOpening {
    atom: usize,
    bond: Option<BondSymbol>,
    position: usize,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// (a, b) with a < b, for duplicate detection
    pairs: std::collections::HashSet<(usize, usize)>,
    rings: BTreeMap<u32, RingOpening>,
}

/// Parses a SMILES string into a molecular graph with atoms and bonds in
/// left-to-right order. Ring closure bonds are numbered where the closing
/// digit appears.
pub fn parse_smiles(text: &str) -> Result<MoleculeGraph, SmilesError> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(SmilesError::Empty);
    }
    let mut p = Parser {
        text: trimmed.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        pairs: Default::default(),
        rings: BTreeMap::new(),
    };
    p.run()?;
    let mut m = MoleculeGraph {
        atoms: p.atoms,
        bonds: p.bonds,
        rings: Vec::new(),
        source_smiles: trimmed.to_string(),
    };
    assign_implicit_hydrogens(&mut m);
    Ok(m)
}

fn assign_implicit_hydrogens(m: &mut MoleculeGraph) {
    let mut valence = vec![0u8; m.atoms.len()];
    for b in &m.bonds {
        let c = b.order.valence_contribution();
        valence[b.endpoints.0] += c;
        valence[b.endpoints.1] += c;
    }
    for (atom, used) in m.atoms.iter_mut().zip(valence) {
        if atom.explicit_h.is_some() {
            continue;
        }
        let valences = atom.element.default_valences();
        atom.implicit_h = if atom.aromatic {
            // one extra bond to the delocalised system; only the lowest valence applies
            let used = used + 1;
            valences.first().map_or(0, |&v| v.saturating_sub(used))
        } else {
            valences
                .iter()
                .find(|&&v| v >= used)
                .map_or(0, |&v| v - used)
        };
    }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        let mut current: Option<usize> = None;
        let mut branches: Vec<(usize, usize)> = Vec::new(); // (atom, '(' position)
        let mut pending: Option<(BondSymbol, usize)> = None;

        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                b'(' => {
                    let Some(atom) = current else {
                        return Err(SmilesError::UnexpectedCharacter {
                            ch: '(',
                            position: start,
                        });
                    };
                    if pending.is_some() {
                        return Err(SmilesError::DanglingBond { position: start });
                    }
                    branches.push((atom, start));
                    self.pos += 1;
                }
                b')' => {
                    if pending.is_some() {
                        return Err(SmilesError::DanglingBond { position: start });
                    }
                    let Some((atom, _)) = branches.pop() else {
                        return Err(SmilesError::UnbalancedParenthesis { position: start });
                    };
                    current = Some(atom);
                    self.pos += 1;
                }
                b'.' => {
                    if let Some((_, p)) = pending {
                        return Err(SmilesError::DanglingBond { position: p });
                    }
                    if !branches.is_empty() {
                        return Err(SmilesError::Unsupported {
                            construct: "dot inside branch".into(),
                            position: start,
                        });
                    }
                    current = None;
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if pending.is_some() || current.is_none() {
                        return Err(SmilesError::DanglingBond { position: start });
                    }
                    let sym = match c {
                        b'-' => BondSymbol::Single,
                        b'=' => BondSymbol::Double,
                        b'#' => BondSymbol::Triple,
                        b':' => BondSymbol::Aromatic,
                        _ => BondSymbol::Directional,
                    };
                    pending = Some((sym, start));
                    self.pos += 1;
                }
                b'$' => {
                    return Err(SmilesError::Unsupported {
                        construct: "quadruple bond".into(),
                        position: start,
                    })
                }
                b'0'..=b'9' | b'%' => {
                    let Some(atom) = current else {
                        return Err(SmilesError::UnexpectedCharacter {
                            ch: c as char,
                            position: start,
                        });
                    };
                    let label = self.ring_label()?;
                    let bond = pending.take().map(|(s, _)| s);
                    self.ring_closure(atom, label, bond, start)?;
                }
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.attach(atom, current, pending.take(), start)?;
                    current = Some(atom);
                }
                b']' => return Err(SmilesError::UnbalancedBracket { position: start }),
                b'*' => {
                    return Err(SmilesError::Unsupported {
                        construct: "wildcard atom".into(),
                        position: start,
                    })
                }
                _ if c.is_ascii_alphabetic() => {
                    let atom = self.organic_atom()?;
                    self.attach(atom, current, pending.take(), start)?;
                    current = Some(atom);
                }
                _ => {
                    return Err(SmilesError::UnexpectedCharacter {
                        ch: c as char,
                        position: start,
                    })
                }
            }
        }

        if let Some((_, p)) = pending {
            return Err(SmilesError::DanglingBond { position: p });
        }
        if let Some(&(_, p)) = branches.last() {
            return Err(SmilesError::UnbalancedParenthesis { position: p });
        }
        if let Some((&label, open)) = self.rings.iter().next() {
            return Err(SmilesError::UnmatchedRingClosure {
                label,
                position: open.position,
            });
        }
        Ok(())
    }

    fn attach(
        &mut self,
        atom: usize,
        prev: Option<usize>,
        pending: Option<(BondSymbol, usize)>,
        position: usize,
    ) -> Result<(), SmilesError> {
        match prev {
            Some(prev) => {
                let order = self.resolve_order(prev, atom, pending.map(|(s, _)| s));
                self.add_bond(prev, atom, order, position)
            }
            None => match pending {
                Some((_, p)) => Err(SmilesError::DanglingBond { position: p }),
                None => Ok(()),
            },
        }
    }

    fn resolve_order(&self, a: usize, b: usize, sym: Option<BondSymbol>) -> BondOrder {
        match sym {
            Some(s) => s.order(),
            None if self.atoms[a].aromatic && self.atoms[b].aromatic => BondOrder::Aromatic,
            None => BondOrder::Single,
        }
    }

    fn add_bond(
        &mut self,
        a: usize,
        b: usize,
        order: BondOrder,
        position: usize,
    ) -> Result<(), SmilesError> {
        let key = (a.min(b), a.max(b));
        if a == b || !self.pairs.insert(key) {
            return Err(SmilesError::DuplicateBond { position });
        }
        self.bonds.push(Bond {
            endpoints: key,
            order,
            index: self.bonds.len(),
        });
        Ok(())
    }

    fn ring_label(&mut self) -> Result<u32, SmilesError> {
        let start = self.pos;
        if self.peek() == Some(b'%') {
            self.pos += 1;
            let digits = self.text.get(self.pos..self.pos + 2);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 2;
                    Ok(u32::from(d[0] - b'0') * 10 + u32::from(d[1] - b'0'))
                }
                _ => Err(SmilesError::UnexpectedCharacter {
                    ch: '%',
                    position: start,
                }),
            }
        } else {
            let d = self.text[self.pos];
            self.pos += 1;
            Ok(u32::from(d - b'0'))
        }
    }

    fn ring_closure(
        &mut self,
        atom: usize,
        label: u32,
        bond: Option<BondSymbol>,
        position: usize,
    ) -> Result<(), SmilesError> {
        match self.rings.remove(&label) {
            None => {
                self.rings.insert(
                    label,
                    RingOpening {
                        atom,
                        bond,
                        position,
                    },
                );
                Ok(())
            }
            Some(open) => {
                let sym = match (open.bond, bond) {
                    (Some(x), Some(y)) if x.order() != y.order() => {
                        return Err(SmilesError::ConflictingRingBond { label, position })
                    }
                    (x, y) => x.or(y),
                };
                let order = self.resolve_order(open.atom, atom, sym);
                self.add_bond(open.atom, atom, order, position)
            }
        }
    }

    fn push_atom(&mut self, element: Element, aromatic: bool, charge: i8, h: Option<u8>) -> usize {
        let index = self.atoms.len();
        self.atoms.push(Atom {
            element,
            formal_charge: charge,
            aromatic,
            explicit_h: h,
            implicit_h: 0,
            index,
        });
        index
    }

    fn organic_atom(&mut self) -> Result<usize, SmilesError> {
        let start = self.pos;
        let rest = &self.text[self.pos..];
        let (symbol, aromatic, len) = match rest {
            [b'C', b'l', ..] => ("Cl", false, 2),
            [b'B', b'r', ..] => ("Br", false, 2),
            [b'B', ..] => ("B", false, 1),
            [b'C', ..] => ("C", false, 1),
            [b'N', ..] => ("N", false, 1),
            [b'O', ..] => ("O", false, 1),
            [b'P', ..] => ("P", false, 1),
            [b'S', ..] => ("S", false, 1),
            [b'F', ..] => ("F", false, 1),
            [b'I', ..] => ("I", false, 1),
            [b'b', ..] => ("B", true, 1),
            [b'c', ..] => ("C", true, 1),
            [b'n', ..] => ("N", true, 1),
            [b'o', ..] => ("O", true, 1),
            [b'p', ..] => ("P", true, 1),
            [b's', ..] => ("S", true, 1),
            _ => {
                let end = rest
                    .iter()
                    .take(2)
                    .take_while(|c| c.is_ascii_alphabetic())
                    .count()
                    .max(1);
                return Err(SmilesError::UnknownElement {
                    symbol: String::from_utf8_lossy(&rest[..end]).into_owned(),
                    position: start,
                });
            }
        };
        self.pos += len;
        let element = Element::from_symbol(symbol).expect("organic subset symbol");
        Ok(self.push_atom(element, aromatic, 0, None))
    }

    fn bracket_atom(&mut self) -> Result<usize, SmilesError> {
        let open = self.pos;
        let Some(close_rel) = self.text[open..].iter().position(|&c| c == b']') else {
            return Err(SmilesError::UnbalancedBracket { position: open });
        };
        let close = open + close_rel;
        if let Some(inner) = self.text[open + 1..close].iter().position(|&c| c == b'[') {
            return Err(SmilesError::UnbalancedBracket {
                position: open + 1 + inner,
            });
        }
        let body = &self.text[open + 1..close];
        let mut i = 0;
        let at = |i: usize| body.get(i).copied();

        // isotope, ignored
        while at(i).is_some_and(|c| c.is_ascii_digit()) {
            i += 1;
        }

        let sym_pos = open + 1 + i;
        let (element, aromatic) = match at(i) {
            Some(b'*') => {
                return Err(SmilesError::Unsupported {
                    construct: "wildcard atom".into(),
                    position: sym_pos,
                })
            }
            Some(c) if c.is_ascii_lowercase() => {
                // aromatic symbols: two-letter forms first
                let two = body.get(i..i + 2);
                let (sym, len) = match two {
                    Some(b"se") => ("Se", 2),
                    Some(b"as") => ("As", 2),
                    Some(b"te") => ("Te", 2),
                    _ => match c {
                        b'b' => ("B", 1),
                        b'c' => ("C", 1),
                        b'n' => ("N", 1),
                        b'o' => ("O", 1),
                        b'p' => ("P", 1),
                        b's' => ("S", 1),
                        _ => {
                            return Err(SmilesError::UnknownElement {
                                symbol: (c as char).to_string(),
                                position: sym_pos,
                            })
                        }
                    },
                };
                i += len;
                (Element::from_symbol(sym).expect("aromatic symbol"), true)
            }
            Some(c) if c.is_ascii_uppercase() => {
                let two = at(i + 1)
                    .filter(u8::is_ascii_lowercase)
                    .map(|l| format!("{}{}", c as char, l as char));
                match two.as_deref().and_then(Element::from_symbol) {
                    Some(e) => {
                        i += 2;
                        (e, false)
                    }
                    None => {
                        let one = (c as char).to_string();
                        match Element::from_symbol(&one) {
                            Some(e) => {
                                i += 1;
                                (e, false)
                            }
                            None => {
                                return Err(SmilesError::UnknownElement {
                                    symbol: two.unwrap_or(one),
                                    position: sym_pos,
                                })
                            }
                        }
                    }
                }
            }
            _ => {
                return Err(SmilesError::UnknownElement {
                    symbol: String::from_utf8_lossy(body).into_owned(),
                    position: sym_pos,
                })
            }
        };

        // chirality, discarded
        if at(i) == Some(b'@') {
            i += 1;
            if at(i) == Some(b'@') {
                i += 1;
            } else if let Some(tag) = body.get(i..i + 2) {
                if [b"TH", b"AL", b"SP", b"TB", b"OH"]
                    .iter()
                    .any(|t| t == &tag)
                {
                    i += 2;
                    while at(i).is_some_and(|c| c.is_ascii_digit()) {
                        i += 1;
                    }
                }
            }
        }

        let mut h = 0u8;
        if at(i) == Some(b'H') {
            i += 1;
            h = 1;
            if let Some(d) = at(i).filter(u8::is_ascii_digit) {
                h = d - b'0';
                i += 1;
            }
        }

        let mut charge: i8 = 0;
        if let Some(sign @ (b'+' | b'-')) = at(i) {
            let unit: i8 = if sign == b'+' { 1 } else { -1 };
            i += 1;
            if at(i).is_some_and(|c| c.is_ascii_digit()) {
                let mut v: i8 = 0;
                while let Some(d) = at(i).filter(u8::is_ascii_digit) {
                    v = v.saturating_mul(10).saturating_add((d - b'0') as i8);
                    i += 1;
                }
                charge = unit * v;
            } else {
                charge = unit;
                while at(i) == Some(sign) {
                    charge += unit;
                    i += 1;
                }
            }
        }

        // atom class, ignored
        if at(i) == Some(b':') {
            i += 1;
            while at(i).is_some_and(|c| c.is_ascii_digit()) {
                i += 1;
            }
        }

        if i != body.len() {
            return Err(SmilesError::UnexpectedCharacter {
                ch: body[i] as char,
                position: open + 1 + i,
            });
        }
        self.pos = close + 1;
        Ok(self.push_atom(element, aromatic, charge, Some(h)))
    }
}

/// Writes a SMILES string for `m`. Every atom is emitted as a bracket atom
/// and every bond symbol is explicit, so the output reparses to a graph with
/// identical atom labels, bond orders and hydrogen counts.
pub fn write_smiles(m: &MoleculeGraph) -> String {
    let n = m.atoms.len();
    let adj = m.adjacency();
    let mut visited = vec![false; n];
    let mut out = String::new();

    // first pass: DFS tree, collect ring closure bonds
    let mut order = Vec::with_capacity(n);
    let mut parent_bond = vec![usize::MAX; n];
    let mut tree_bond = vec![false; m.bonds.len()];
    for root in 0..n {
        if visited[root] {
            continue;
        }
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            if visited[u] {
                continue;
            }
            visited[u] = true;
            order.push(u);
            if parent_bond[u] != usize::MAX {
                tree_bond[parent_bond[u]] = true;
            }
            for &(v, b) in adj[u].iter().rev() {
                if !visited[v] {
                    parent_bond[v] = b;
                    stack.push(v);
                }
            }
        }
    }
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &u in &order {
        if parent_bond[u] != usize::MAX && tree_bond[parent_bond[u]] {
            let p = m.bonds[parent_bond[u]].other(u);
            children[p].push((u, parent_bond[u]));
        }
    }
    let mut closures_at: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n]; // (bond, label)
    let mut label = 0usize;
    let pos_of = {
        let mut p = vec![0; n];
        for (i, &u) in order.iter().enumerate() {
            p[u] = i;
        }
        p
    };
    for b in &m.bonds {
        if !tree_bond[b.index] {
            label += 1;
            let (u, v) = b.endpoints;
            let (first, second) = if pos_of[u] < pos_of[v] {
                (u, v)
            } else {
                (v, u)
            };
            closures_at[first].push((b.index, label));
            closures_at[second].push((b.index, label));
        }
    }

    fn bond_char(order: BondOrder) -> char {
        match order {
            BondOrder::Single => '-',
            BondOrder::Double => '=',
            BondOrder::Triple => '#',
            BondOrder::Aromatic => ':',
        }
    }

    fn emit(
        m: &MoleculeGraph,
        u: usize,
        children: &[Vec<(usize, usize)>],
        closures_at: &[Vec<(usize, usize)>],
        out: &mut String,
    ) {
        let a = &m.atoms[u];
        let sym = if a.aromatic {
            a.element.symbol().to_ascii_lowercase()
        } else {
            a.element.symbol().to_string()
        };
        out.push('[');
        out.push_str(&sym);
        let h = a.hydrogen_count();
        if h > 0 {
            out.push('H');
            if h > 1 {
                let _ = write!(out, "{h}");
            }
        }
        match a.formal_charge {
            0 => {}
            1 => out.push('+'),
            -1 => out.push('-'),
            c if c > 0 => {
                let _ = write!(out, "+{c}");
            }
            c => {
                let _ = write!(out, "-{}", -c);
            }
        }
        out.push(']');
        for &(b, label) in &closures_at[u] {
            out.push(bond_char(m.bonds[b].order));
            if label < 10 {
                let _ = write!(out, "{label}");
            } else {
                let _ = write!(out, "%{label:02}");
            }
        }
        let kids = &children[u];
        for (i, &(v, b)) in kids.iter().enumerate() {
            let last = i + 1 == kids.len();
            if !last {
                out.push('(');
            }
            out.push(bond_char(m.bonds[b].order));
            emit(m, v, children, closures_at, out);
            if !last {
                out.push(')');
            }
        }
    }

    let mut first = true;
    for &u in &order {
        if parent_bond[u] == usize::MAX || !tree_bond[parent_bond[u]] {
            if !first {
                out.push('.');
            }
            first = false;
            emit(m, u, &children, &closures_at, &mut out);
        }
    }
    out
}
