//! Line-oriented proof file format.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::{Edge, PreProof, ProofNode, Renaming, Rule};
use crate::address::{parse_address, Address, Occurrence};
use crate::formula::parse_formula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofParseError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{line}:{column}: unknown node '{name}'")]
    UnknownNode { line: usize, column: usize, name: String },
    #[error("{line}:{column}: duplicate node id '{name}'")]
    DuplicateNode { line: usize, column: usize, name: String },
}

impl ProofParseError {
    pub fn position(&self) -> (usize, usize) {
        match self {
            ProofParseError::Syntax { line, column, .. }
            | ProofParseError::UnknownNode { line, column, .. }
            | ProofParseError::DuplicateNode { line, column, .. } => (*line, *column),
        }
    }
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ProofParseError {
    ProofParseError::Syntax { line, column, message: message.into() }
}

enum PremRef {
    Tree(String, usize),
    Back(String, usize, Renaming),
}

struct RawNode {
    name: String,
    line: usize,
    seq: Option<Vec<Occurrence>>,
    rule: Option<Rule>,
    prems: Vec<(usize, PremRef)>,
}

/// Columns are 1-based character offsets into the original line.
fn col_of(line: &str, part: &str) -> usize {
    let off = part.as_ptr() as usize - line.as_ptr() as usize;
    line[..off].chars().count() + 1
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '-')
}

pub fn parse_proof(src: &str) -> Result<PreProof, ProofParseError> {
    let mut name: Option<String> = None;
    let mut nodes: Vec<RawNode> = Vec::new();
    let mut root: Option<(String, usize, usize)> = None;
    let mut seen: HashMap<String, usize> = HashMap::new();

    for (lno, full) in src.lines().enumerate() {
        let lno = lno + 1;
        let line = match full.find('#') {
            Some(k) => &full[..k],
            None => full,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (kw, rest) = match trimmed.find(char::is_whitespace) {
            Some(k) => (&trimmed[..k], trimmed[k..].trim()),
            None => (trimmed, ""),
        };
        let rest_col = if rest.is_empty() { col_of(full, trimmed) + kw.len() } else { col_of(full, rest) };
        match kw {
            "proof" => {
                if name.is_some() {
                    return Err(syntax(lno, col_of(full, trimmed), "second 'proof' header"));
                }
                if !is_ident(rest) {
                    return Err(syntax(lno, rest_col, "expected a proof name"));
                }
                name = Some(rest.to_string());
            }
            "node" => {
                if !is_ident(rest) {
                    return Err(syntax(lno, rest_col, "expected a node id"));
                }
                if seen.contains_key(rest) {
                    return Err(ProofParseError::DuplicateNode { line: lno, column: rest_col, name: rest.to_string() });
                }
                seen.insert(rest.to_string(), nodes.len());
                nodes.push(RawNode { name: rest.to_string(), line: lno, seq: None, rule: None, prems: Vec::new() });
            }
            "seq" | "rule" | "prem" => {
                let node = match nodes.last_mut() {
                    Some(n) => n,
                    None => return Err(syntax(lno, col_of(full, trimmed), format!("'{kw}' outside a node"))),
                };
                match kw {
                    "seq" => {
                        if node.seq.is_some() {
                            return Err(syntax(lno, col_of(full, trimmed), "second 'seq' line"));
                        }
                        node.seq = Some(parse_seq(full, rest, lno)?);
                    }
                    "rule" => {
                        if node.rule.is_some() {
                            return Err(syntax(lno, col_of(full, trimmed), "second 'rule' line"));
                        }
                        node.rule = Some(parse_rule(full, rest, lno)?);
                    }
                    _ => {
                        let p = parse_prem(full, rest, lno)?;
                        node.prems.push((lno, p));
                    }
                }
            }
            "root" => {
                if root.is_some() {
                    return Err(syntax(lno, col_of(full, trimmed), "second 'root' line"));
                }
                if !is_ident(rest) {
                    return Err(syntax(lno, rest_col, "expected a node id"));
                }
                root = Some((rest.to_string(), lno, rest_col));
            }
            other => return Err(syntax(lno, col_of(full, trimmed), format!("unknown keyword '{other}'"))),
        }
    }

    let last_line = src.lines().count().max(1);
    let name = name.ok_or_else(|| syntax(1, 1, "missing 'proof NAME' header"))?;
    let (root_name, rl, rc) = root.ok_or_else(|| syntax(last_line, 1, "missing 'root' line"))?;
    let root = *seen
        .get(&root_name)
        .ok_or(ProofParseError::UnknownNode { line: rl, column: rc, name: root_name.clone() })?;

    let mut out = Vec::with_capacity(nodes.len());
    for raw in nodes {
        let conclusion = raw.seq.ok_or_else(|| syntax(raw.line, 1, format!("node '{}' has no 'seq' line", raw.name)))?;
        let rule = raw.rule.ok_or_else(|| syntax(raw.line, 1, format!("node '{}' has no 'rule' line", raw.name)))?;
        let mut premises = Vec::new();
        for (lno, p) in raw.prems {
            let (target, col, ren) = match p {
                PremRef::Tree(t, c) => (t, c, None),
                PremRef::Back(t, c, r) => (t, c, Some(r)),
            };
            let id = *seen
                .get(&target)
                .ok_or(ProofParseError::UnknownNode { line: lno, column: col, name: target.clone() })?;
            premises.push(match ren {
                None => Edge::Tree(id),
                Some(r) => Edge::Back(id, r),
            });
        }
        out.push(ProofNode { name: raw.name, conclusion, rule, premises });
    }
    Ok(PreProof { name, nodes: out, root })
}

fn parse_occurrence(full: &str, item: &str, lno: usize) -> Result<Occurrence, ProofParseError> {
    let item_t = item.trim();
    let at = item_t
        .rfind('@')
        .ok_or_else(|| syntax(lno, col_of(full, item_t), "expected 'FORMULA @ ADDRESS'"))?;
    let (fpart, apart) = (&item_t[..at], &item_t[at + 1..]);
    let formula =
        parse_formula(fpart).map_err(|e| syntax(lno, col_of(full, fpart) + e.column - 1, e.message))?;
    if !formula.is_closed() {
        return Err(syntax(lno, col_of(full, fpart), "formula has a free variable"));
    }
    let address = parse_addr(full, apart, lno)?;
    Ok(Occurrence::new(formula, address))
}

fn parse_addr(full: &str, part: &str, lno: usize) -> Result<Address, ProofParseError> {
    let t = part.trim();
    if t.is_empty() {
        return Err(syntax(lno, col_of(full, part), "expected an address"));
    }
    parse_address(t).map_err(|e| syntax(lno, col_of(full, t) + e.column - 1, e.message))
}

fn parse_seq(full: &str, rest: &str, lno: usize) -> Result<Vec<Occurrence>, ProofParseError> {
    if rest.is_empty() {
        return Ok(Vec::new());
    }
    rest.split(',').map(|item| parse_occurrence(full, item, lno)).collect()
}

fn inside<'a>(full: &str, s: &'a str, lno: usize) -> Result<&'a str, ProofParseError> {
    let s = s.trim();
    if !s.starts_with('(') || !s.ends_with(')') {
        return Err(syntax(lno, col_of(full, s), "expected parenthesised arguments"));
    }
    Ok(&s[1..s.len() - 1])
}

fn parse_rule(full: &str, rest: &str, lno: usize) -> Result<Rule, ProofParseError> {
    if rest == "open" {
        return Ok(Rule::Open);
    }
    if let Some(args) = rest.strip_prefix("ax") {
        let body = inside(full, args, lno)?;
        let mut parts = body.split(',');
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(syntax(lno, col_of(full, body), "ax takes two addresses")),
        };
        return Ok(Rule::Ax(parse_addr(full, a, lno)?, parse_addr(full, b, lno)?));
    }
    if let Some(args) = rest.strip_prefix("cut") {
        let body = inside(full, args, lno)?;
        let occ = parse_occurrence(full, body, lno)?;
        if !occ.address.is_atomic() || occ.address.dual {
            return Err(syntax(lno, col_of(full, body), "cut address must be a positive atomic address"));
        }
        return Ok(Rule::Cut(occ.formula, occ.address));
    }
    let at = rest
        .find('@')
        .ok_or_else(|| syntax(lno, col_of(full, rest), format!("unknown rule '{rest}'")))?;
    let kw = rest[..at].trim();
    let addr = parse_addr(full, &rest[at + 1..], lno)?;
    Ok(match kw {
        "tensor" => Rule::Tensor(addr),
        "par" => Rule::Par(addr),
        "one" => Rule::One(addr),
        "bot" => Rule::Bot(addr),
        "mu" => Rule::Mu(addr),
        "nu" => Rule::Nu(addr),
        "with" => Rule::With(addr),
        "plus1" => Rule::Plus(addr, 1),
        "plus2" => Rule::Plus(addr, 2),
        "top" => Rule::Top(addr),
        _ => return Err(syntax(lno, col_of(full, rest), format!("unknown rule '{kw}'"))),
    })
}

fn parse_prem(full: &str, rest: &str, lno: usize) -> Result<PremRef, ProofParseError> {
    if let Some(args) = rest.strip_prefix("back") {
        let body = inside(full, args, lno)?;
        let (target, ren) = match body.find(';') {
            Some(k) => (&body[..k], &body[k + 1..]),
            None => (body, ""),
        };
        let t = target.trim();
        if !is_ident(t) {
            return Err(syntax(lno, col_of(full, target), "expected a node id"));
        }
        let mut map = BTreeMap::new();
        for pair in ren.split(',') {
            if pair.trim().is_empty() {
                continue;
            }
            let arrow = pair
                .find("->")
                .ok_or_else(|| syntax(lno, col_of(full, pair.trim()), "expected 'a->b'"))?;
            let from = parse_addr(full, &pair[..arrow], lno)?;
            let to = parse_addr(full, &pair[arrow + 2..], lno)?;
            let key = if from.is_atomic() && from.dual { from.dual() } else { from.clone() };
            if map.contains_key(&key) {
                return Err(syntax(lno, col_of(full, pair.trim()), format!("address '{from}' renamed twice")));
            }
            let mut r = Renaming(BTreeMap::new());
            r.insert(from, to);
            map.extend(r.0);
        }
        return Ok(PremRef::Back(t.to_string(), col_of(full, t), Renaming(map)));
    }
    if !is_ident(rest) {
        return Err(syntax(lno, col_of(full, rest), "expected a node id or back(...)"));
    }
    Ok(PremRef::Tree(rest.to_string(), col_of(full, rest)))
}

pub fn serialize_proof(p: &PreProof) -> String {
    let mut s = format!("proof {}\n", p.name);
    for n in &p.nodes {
        s.push_str(&format!("\nnode {}\n", n.name));
        let seq: Vec<String> = n.conclusion.iter().map(|o| o.to_string()).collect();
        if seq.is_empty() {
            s.push_str("  seq\n");
        } else {
            s.push_str(&format!("  seq  {}\n", seq.join(" , ")));
        }
        s.push_str(&format!("  rule {}\n", n.rule));
        for e in &n.premises {
            match e {
                Edge::Tree(t) => s.push_str(&format!("  prem {}\n", p.nodes[*t].name)),
                Edge::Back(t, r) => {
                    let pairs: Vec<String> = r.0.iter().map(|(k, v)| format!("{k}->{v}")).collect();
                    if pairs.is_empty() {
                        s.push_str(&format!("  prem back({})\n", p.nodes[*t].name));
                    } else {
                        s.push_str(&format!("  prem back({}; {})\n", p.nodes[*t].name, pairs.join(", ")));
                    }
                }
            }
        }
    }
    s.push_str(&format!("\nroot {}\n", p.nodes[p.root].name));
    s
}
