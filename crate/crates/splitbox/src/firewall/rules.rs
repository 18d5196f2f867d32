//! Rule DSL, the patterns behind it, and the compiler down to policy
//! chains.
//!
//! One rule per line:
//!
//! ```text
//! allow|drop src=<pat> dst=<pat> proto=<u8|*> sport=<u16|*> dport=<u16|*>
//! ```
//!
//! `<pat>` is `*`, a dotted quad with `*` octets (`127.*.*.32`), a prefix
//! `a.b.c.d/k` with k ∈ {0, 8, 16, 24, 32}, or an inclusive range
//! `a.b.c.d-e.f.g.h`. A range is accepted only when it is a
//! power-of-two-sized block starting on a multiple of its size — exactly
//! the ranges a fixed-bit pattern can express. Everything else about a
//! header is either pinned to one value or left free; that restriction is
//! what lets every rule become one tri-state match.
//!
//! Compilation is first-match: rules in file order become a chain, ALLOW
//! rules keep the header (identity action), DROP rules overwrite all of it
//! with zeros, and a packet no rule matches falls off the end allowed.

use std::fmt;

use crate::nfmodel::{build_chain, BitString, ModelError, PolicyTree, TriStateString};

use super::header::{FiveTuple, HEADER_BITS};

/// What a matching rule does with the packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Allow,
    Drop,
}

/// A 32-bit value/mask pattern over an address. Mask bits select the
/// positions that must equal `value`; `value` never has a bit outside the
/// mask. Stars and prefixes both land here.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IpPattern {
    value: u32,
    mask: u32,
}

impl IpPattern {
    pub const ANY: IpPattern = IpPattern { value: 0, mask: 0 };

    pub fn new(value: u32, mask: u32) -> Self {
        IpPattern {
            value: value & mask,
            mask,
        }
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    /// True when `ip` agrees with the pattern on every masked bit.
    pub fn matches(&self, ip: u32) -> bool {
        (ip ^ self.value) & self.mask == 0
    }

    pub fn fixed_bits(&self) -> u32 {
        self.mask.count_ones()
    }
}

/// One parsed rule. The structured fields are the source of truth; the
/// tri-state matcher is derived from them on demand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirewallRule {
    pub verdict: Verdict,
    pub src: IpPattern,
    pub dst: IpPattern,
    /// `None` means any protocol.
    pub protocol: Option<u8>,
    pub src_port: Option<u16>,
    pub dst_port: Option<u16>,
    /// 1-based line in the source text, for diagnostics.
    pub line: usize,
}

impl FirewallRule {
    /// The rule as one 104-bit tri-state pattern, fixed exactly where the
    /// rule pins a bit.
    pub fn matcher(&self) -> TriStateString {
        let fixed = FiveTuple {
            src_ip: self.src.mask(),
            dst_ip: self.dst.mask(),
            protocol: if self.protocol.is_some() { 0xff } else { 0 },
            src_port: if self.src_port.is_some() { 0xffff } else { 0 },
            dst_port: if self.dst_port.is_some() { 0xffff } else { 0 },
        };
        let values = FiveTuple {
            src_ip: self.src.value(),
            dst_ip: self.dst.value(),
            protocol: self.protocol.unwrap_or(0),
            src_port: self.src_port.unwrap_or(0),
            dst_port: self.dst_port.unwrap_or(0),
        };
        TriStateString::from_parts(
            BitString::from_bytes(&fixed.to_bytes(), HEADER_BITS).unwrap(),
            BitString::from_bytes(&values.to_bytes(), HEADER_BITS).unwrap(),
        )
        .unwrap()
    }

    /// The action the rule applies when it matches: leave the header alone,
    /// or blank every bit of it.
    pub fn action(&self) -> TriStateString {
        match self.verdict {
            Verdict::Allow => TriStateString::wildcard(HEADER_BITS),
            Verdict::Drop => TriStateString::from_parts(
                BitString::from_bytes(&[0xff; 13], HEADER_BITS).unwrap(),
                BitString::zeros(HEADER_BITS),
            )
            .unwrap(),
        }
    }

    /// How many header bits the rule pins.
    pub fn fixed_bits(&self) -> u32 {
        self.src.fixed_bits()
            + self.dst.fixed_bits()
            + if self.protocol.is_some() { 8 } else { 0 }
            + if self.src_port.is_some() { 16 } else { 0 }
            + if self.dst_port.is_some() { 16 } else { 0 }
    }
}

impl fmt::Display for FirewallRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn pat(p: &IpPattern) -> String {
            if p.mask() == 0 {
                return "*".into();
            }
            let v = p.value().to_be_bytes();
            let m = p.mask().to_be_bytes();
            (0..4)
                .map(|i| match m[i] {
                    0 => "*".to_string(),
                    0xff => v[i].to_string(),
                    _ => format!("{}&{:02x}", v[i], m[i]),
                })
                .collect::<Vec<_>>()
                .join(".")
        }
        fn num<T: fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map_or("*".into(), |x| x.to_string())
        }
        write!(
            f,
            "{} src={} dst={} proto={} sport={} dport={}",
            match self.verdict {
                Verdict::Allow => "allow",
                Verdict::Drop => "drop",
            },
            pat(&self.src),
            pat(&self.dst),
            num(&self.protocol),
            num(&self.src_port),
            num(&self.dst_port),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(
        "line {line}: {field} range {lo}-{hi} is not a power-of-two block; \
         only aligned 2^k-sized ranges have a fixed-bit pattern"
    )]
    InexpressibleRange {
        line: usize,
        field: &'static str,
        lo: String,
        hi: String,
    },
    #[error("rule tree: {0}")]
    Model(#[from] ModelError),
}

fn syntax(line: usize, msg: impl Into<String>) -> RuleError {
    RuleError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn parse_octet(s: &str, line: usize) -> Result<u8, RuleError> {
    s.parse::<u8>()
        .map_err(|_| syntax(line, format!("bad address octet {s:?}")))
}

/// A dotted quad, stars allowed per octet when `stars` is set.
fn parse_quad(s: &str, line: usize, stars: bool) -> Result<IpPattern, RuleError> {
    let parts: Vec<&str> = s.split('.').collect();
    if parts.len() != 4 {
        return Err(syntax(line, format!("address {s:?} is not a dotted quad")));
    }
    let mut value = 0u32;
    let mut mask = 0u32;
    for (i, part) in parts.iter().enumerate() {
        let shift = 24 - 8 * i;
        if *part == "*" {
            if !stars {
                return Err(syntax(line, format!("{s:?}: no wildcard octets here")));
            }
            continue;
        }
        value |= u32::from(parse_octet(part, line)?) << shift;
        mask |= 0xffu32 << shift;
    }
    Ok(IpPattern::new(value, mask))
}

fn parse_ip_pattern(s: &str, line: usize, field: &'static str) -> Result<IpPattern, RuleError> {
    if s == "*" {
        return Ok(IpPattern::ANY);
    }
    if let Some((quad, k)) = s.split_once('/') {
        let base = parse_quad(quad, line, false)?;
        let k: u32 = k
            .parse()
            .map_err(|_| syntax(line, format!("bad prefix length {k:?}")))?;
        if !matches!(k, 0 | 8 | 16 | 24 | 32) {
            return Err(syntax(
                line,
                format!("prefix /{k} not supported; use /0, /8, /16, /24 or /32"),
            ));
        }
        let mask = if k == 0 { 0 } else { u32::MAX << (32 - k) };
        return Ok(IpPattern::new(base.value(), mask));
    }
    if let Some((lo, hi)) = s.split_once('-') {
        let lo = parse_quad(lo, line, false)?.value();
        let hi = parse_quad(hi, line, false)?.value();
        if lo > hi {
            return Err(syntax(line, format!("range {s:?} runs backwards")));
        }
        // Expressible iff the block is 2^k long and starts on a 2^k line:
        // then lo and hi agree on exactly the bits above k.
        let span = u64::from(hi) - u64::from(lo) + 1;
        if !span.is_power_of_two() || u64::from(lo) % span != 0 {
            return Err(RuleError::InexpressibleRange {
                line,
                field,
                lo: quad_text(lo),
                hi: quad_text(hi),
            });
        }
        let mask = !((span - 1) as u32);
        return Ok(IpPattern::new(lo, mask));
    }
    parse_quad(s, line, true)
}

fn quad_text(ip: u32) -> String {
    let b = ip.to_be_bytes();
    format!("{}.{}.{}.{}", b[0], b[1], b[2], b[3])
}

fn parse_num<T: std::str::FromStr>(
    s: &str,
    line: usize,
    what: &str,
) -> Result<Option<T>, RuleError> {
    if s == "*" {
        return Ok(None);
    }
    s.parse::<T>()
        .map(Some)
        .map_err(|_| syntax(line, format!("bad {what} {s:?}")))
}

/// Parses the whole DSL text. `#` starts a comment; blank lines are
/// skipped. Every surviving line must be a complete rule with its five
/// fields in order.
pub fn parse_rules(text: &str) -> Result<Vec<FirewallRule>, RuleError> {
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tokens = body.split_whitespace();
        let verdict = match tokens.next() {
            Some("allow") => Verdict::Allow,
            Some("drop") => Verdict::Drop,
            Some(other) => {
                return Err(syntax(line, format!("expected allow or drop, got {other:?}")))
            }
            None => unreachable!("blank lines were skipped"),
        };
        let mut field = |key: &'static str| -> Result<String, RuleError> {
            match tokens.next() {
                Some(tok) => match tok.split_once('=') {
                    Some((k, v)) if k == key => Ok(v.to_string()),
                    _ => Err(syntax(line, format!("expected {key}=..., got {tok:?}"))),
                },
                None => Err(syntax(line, format!("missing {key}=..."))),
            }
        };
        let src = parse_ip_pattern(&field("src")?, line, "src")?;
        let dst = parse_ip_pattern(&field("dst")?, line, "dst")?;
        let protocol = parse_num::<u8>(&field("proto")?, line, "protocol")?;
        let src_port = parse_num::<u16>(&field("sport")?, line, "source port")?;
        let dst_port = parse_num::<u16>(&field("dport")?, line, "destination port")?;
        if let Some(extra) = tokens.next() {
            return Err(syntax(line, format!("trailing {extra:?}")));
        }
        rules.push(FirewallRule {
            verdict,
            src,
            dst,
            protocol,
            src_port,
            dst_port,
            line,
        });
    }
    Ok(rules)
}

/// Compiles rules, in order, into a first-match chain. The fall-through
/// leaf allows, so an empty ruleset forwards everything untouched.
pub fn compile_rules(rules: &[FirewallRule]) -> Result<PolicyTree, RuleError> {
    let policies: Vec<(TriStateString, TriStateString)> = rules
        .iter()
        .map(|r| (r.matcher(), r.action()))
        .collect();
    Ok(build_chain(HEADER_BITS, &policies)?)
}
