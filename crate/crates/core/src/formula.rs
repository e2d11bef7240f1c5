//! Formula AST, concrete syntax, and the primitive-value-formula fragment.
//!
//! The core language has five node kinds: atoms, negation, conjunction, the
//! per-agent knowledge operator, and "eventually". Everything else (`|`, `->`,
//! `[]`, `E`, `decide`) is sugar that expands at construction time, so the
//! evaluator only ever sees core nodes.
//!
//! Concrete syntax (whitespace-insensitive):
//!
//! ```text
//! formula := "init(" nat "," nat ")" | "choose(" nat "," nat ")" | "decide(" nat "," nat ")"
//!          | "!" formula | "K" nat formula | "E" formula | "<>" formula | "[]" formula
//!          | "(" formula ")" | formula "&" formula | formula "|" formula | formula "->" formula
//! ```
//!
//! Unary operators bind tightest, then `&`, then `|`, then right-associative `->`.

use std::collections::BTreeMap;
use std::fmt;

use crate::model::{AgentId, Atom, Value};

/// AST of the knowledge/temporal language, in core form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Atom),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Know(AgentId, Box<Formula>),
    Eventually(Box<Formula>),
}

impl Formula {
    pub fn init(agent: u32, value: u32) -> Formula {
        Formula::Atom(Atom::Init(AgentId::new(agent), Value::new(value)))
    }

    pub fn choose(agent: u32, value: u32) -> Formula {
        Formula::Atom(Atom::Choose(AgentId::new(agent), Value::new(value)))
    }

    #[allow(clippy::should_implement_trait)] // constructor family: Formula::not(f), Formula::and(a, b), ...
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn know(agent: AgentId, f: Formula) -> Formula {
        Formula::Know(agent, Box::new(f))
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::Eventually(Box::new(f))
    }

    /// `a | b` as `!(!a & !b)`.
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    /// `a -> b` as `!(a & !b)`.
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(a, Formula::not(b)))
    }

    /// `[] f` as `!<>!f`.
    pub fn always(f: Formula) -> Formula {
        Formula::not(Formula::eventually(Formula::not(f)))
    }

    /// Mutual knowledge `E f`: every one of the `n` agents knows `f`.
    pub fn mutual(n_agents: u32, f: Formula) -> Formula {
        conj((1..=n_agents).map(|a| Formula::know(AgentId::new(a), f.clone())))
            .expect("at least one agent")
    }

    /// `decide(a,v)`: the agent chooses `v` from now on, i.e. `[] choose(a,v)`.
    pub fn decide(agent: AgentId, value: Value) -> Formula {
        Formula::always(Formula::Atom(Atom::Choose(agent, value)))
    }

    /// All atoms of the formula, in syntactic order.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        self.walk(&mut |f| {
            if let Formula::Atom(a) = f {
                out.push(*a);
            }
        });
        out
    }

    fn walk(&self, visit: &mut impl FnMut(&Formula)) {
        visit(self);
        match self {
            Formula::Atom(_) => {}
            Formula::Not(f) | Formula::Know(_, f) | Formula::Eventually(f) => f.walk(visit),
            Formula::And(a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
        }
    }
}

/// Left-associated conjunction of the given formulas; `None` when empty.
pub fn conj(items: impl IntoIterator<Item = Formula>) -> Option<Formula> {
    items.into_iter().reduce(Formula::and)
}

/// Left-associated disjunction of the given formulas; `None` when empty.
pub fn disj(items: impl IntoIterator<Item = Formula>) -> Option<Formula> {
    items.into_iter().reduce(Formula::or)
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", print(self))
    }
}

/// Prints core-form concrete syntax such that `parse(print(f))` rebuilds `f`.
pub fn print(f: &Formula) -> String {
    let mut out = String::new();
    print_into(f, false, &mut out);
    out
}

// `tight` is set where an `And` child must be parenthesized to survive the
// round trip: under a unary operator or on the right of another `&`.
fn print_into(f: &Formula, tight: bool, out: &mut String) {
    match f {
        Formula::Atom(a) => out.push_str(&a.to_string()),
        Formula::Not(inner) => {
            out.push_str("! ");
            print_into(inner, true, out);
        }
        Formula::Know(agent, inner) => {
            out.push_str(&format!("K {agent} "));
            print_into(inner, true, out);
        }
        Formula::Eventually(inner) => {
            out.push_str("<> ");
            print_into(inner, true, out);
        }
        Formula::And(l, r) => {
            if tight {
                out.push('(');
            }
            print_into(l, false, out);
            out.push_str(" & ");
            print_into(r, true, out);
            if tight {
                out.push(')');
            }
        }
    }
}

/// Syntax error with 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Nat(u32),
    LParen,
    RParen,
    Comma,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Diamond,
    BoxOp,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "'{s}'"),
            Token::Nat(n) => write!(f, "'{n}'"),
            Token::LParen => write!(f, "'('"),
            Token::RParen => write!(f, "')'"),
            Token::Comma => write!(f, "','"),
            Token::Bang => write!(f, "'!'"),
            Token::Amp => write!(f, "'&'"),
            Token::Pipe => write!(f, "'|'"),
            Token::Arrow => write!(f, "'->'"),
            Token::Diamond => write!(f, "'<>'"),
            Token::BoxOp => write!(f, "'[]'"),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, col: self.col, message: message.into() }
    }

    fn bump(&mut self) -> u8 {
        let c = self.src[self.pos];
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn tokens(mut self) -> Result<Vec<(Token, u32, u32)>, ParseError> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let (line, col) = (self.line, self.col);
            let c = self.src[self.pos];
            match c {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    self.bump();
                }
                b'(' => {
                    self.bump();
                    out.push((Token::LParen, line, col));
                }
                b')' => {
                    self.bump();
                    out.push((Token::RParen, line, col));
                }
                b',' => {
                    self.bump();
                    out.push((Token::Comma, line, col));
                }
                b'!' => {
                    self.bump();
                    out.push((Token::Bang, line, col));
                }
                b'&' => {
                    self.bump();
                    out.push((Token::Amp, line, col));
                }
                b'|' => {
                    self.bump();
                    out.push((Token::Pipe, line, col));
                }
                b'-' => {
                    self.bump();
                    if self.pos < self.src.len() && self.src[self.pos] == b'>' {
                        self.bump();
                        out.push((Token::Arrow, line, col));
                    } else {
                        return Err(ParseError { line, col, message: "expected '->'".into() });
                    }
                }
                b'<' => {
                    self.bump();
                    if self.pos < self.src.len() && self.src[self.pos] == b'>' {
                        self.bump();
                        out.push((Token::Diamond, line, col));
                    } else {
                        return Err(ParseError { line, col, message: "expected '<>'".into() });
                    }
                }
                b'[' => {
                    self.bump();
                    if self.pos < self.src.len() && self.src[self.pos] == b']' {
                        self.bump();
                        out.push((Token::BoxOp, line, col));
                    } else {
                        return Err(ParseError { line, col, message: "expected '[]'".into() });
                    }
                }
                b'0'..=b'9' => {
                    let mut n: u64 = 0;
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        n = n * 10 + (self.bump() - b'0') as u64;
                        if n > u32::MAX as u64 {
                            return Err(ParseError { line, col, message: "number too large".into() });
                        }
                    }
                    out.push((Token::Nat(n as u32), line, col));
                }
                c if c.is_ascii_alphabetic() => {
                    let mut s = String::new();
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
                        s.push(self.bump() as char);
                    }
                    out.push((Token::Ident(s), line, col));
                }
                other => {
                    return Err(self.error(format!("unexpected character '{}'", other as char)));
                }
            }
        }
        Ok(out)
    }
}

struct Parser {
    tokens: Vec<(Token, u32, u32)>,
    pos: usize,
    n_agents: u32,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(t, _, _)| t)
    }

    fn here(&self) -> (u32, u32) {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|&(_, l, c)| (l, c))
            .unwrap_or((1, 1))
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError { line, col, message: message.into() }
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(t, _, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Token) -> Result<(), ParseError> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => {
                self.pos -= 1;
                Err(self.error(format!("expected {want}, found {t}")))
            }
            None => Err(self.error(format!("expected {want}, found end of input"))),
        }
    }

    fn nat(&mut self) -> Result<u32, ParseError> {
        match self.next() {
            Some(Token::Nat(n)) => Ok(n),
            Some(t) => {
                self.pos -= 1;
                Err(self.error(format!("expected a number, found {t}")))
            }
            None => Err(self.error("expected a number, found end of input")),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Token::Arrow) {
            self.next();
            let rhs = self.formula()?; // right-associative
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.conjunction()?;
        while self.peek() == Some(&Token::Pipe) {
            self.next();
            let rhs = self.conjunction()?;
            f = Formula::or(f, rhs);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.peek() == Some(&Token::Amp) {
            self.next();
            let rhs = self.unary()?;
            f = Formula::and(f, rhs);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Some(Token::Bang) => {
                self.next();
                Ok(Formula::not(self.unary()?))
            }
            Some(Token::Diamond) => {
                self.next();
                Ok(Formula::eventually(self.unary()?))
            }
            Some(Token::BoxOp) => {
                self.next();
                Ok(Formula::always(self.unary()?))
            }
            Some(Token::Ident(id)) if id == "K" => {
                self.next();
                let agent = self.nat()?;
                if agent == 0 {
                    return Err(self.error("agent indices start at 1"));
                }
                Ok(Formula::know(AgentId::new(agent), self.unary()?))
            }
            Some(Token::Ident(id)) if id == "E" => {
                self.next();
                Ok(Formula::mutual(self.n_agents, self.unary()?))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.next() {
            Some(Token::LParen) => {
                let f = self.formula()?;
                self.expect(Token::RParen)?;
                Ok(f)
            }
            Some(Token::Ident(id)) if id == "init" || id == "choose" || id == "decide" => {
                self.expect(Token::LParen)?;
                let agent = self.nat()?;
                if agent == 0 {
                    return Err(self.error("agent indices start at 1"));
                }
                self.expect(Token::Comma)?;
                let value = self.nat()?;
                self.expect(Token::RParen)?;
                let (a, v) = (AgentId::new(agent), Value::new(value));
                Ok(match id.as_str() {
                    "init" => Formula::Atom(Atom::Init(a, v)),
                    "choose" => Formula::Atom(Atom::Choose(a, v)),
                    _ => Formula::decide(a, v),
                })
            }
            Some(t) => {
                self.pos -= 1;
                Err(self.error(format!("expected a formula, found {t}")))
            }
            None => Err(self.error("expected a formula, found end of input")),
        }
    }
}

/// Parses concrete syntax into a core-form AST. The agent count is needed to
/// expand the `E` operator; atom indices are validated later, against the
/// scenario the formula is evaluated in.
pub fn parse(text: &str, n_agents: u32) -> Result<Formula, ParseError> {
    let tokens = Lexer::new(text).tokens()?;
    let mut parser = Parser { tokens, pos: 0, n_agents };
    let f = parser.formula()?;
    if let Some(t) = parser.peek() {
        return Err(parser.error(format!("unexpected {t} after formula")));
    }
    Ok(f)
}

/// Canonical representative of a primitive value formula: a nonempty partial
/// assignment of agents to initial values, stored sorted by agent index so
/// each permutation class has exactly one representative.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrimitiveValueFormula(BTreeMap<AgentId, Value>);

impl PrimitiveValueFormula {
    /// `None` when the assignment is empty (the fragment excludes it).
    pub fn new(assignment: BTreeMap<AgentId, Value>) -> Option<Self> {
        if assignment.is_empty() {
            None
        } else {
            Some(PrimitiveValueFormula(assignment))
        }
    }

    pub fn singleton(agent: AgentId, value: Value) -> Self {
        PrimitiveValueFormula(BTreeMap::from([(agent, value)]))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, u32)>) -> Option<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(a, v)| (AgentId::new(a), Value::new(v)))
                .collect(),
        )
    }

    pub fn assignment(&self) -> &BTreeMap<AgentId, Value> {
        &self.0
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.0.keys().copied()
    }

    /// The multiset of values mentioned, in agent order.
    pub fn values(&self) -> impl Iterator<Item = Value> + '_ {
        self.0.values().copied()
    }

    pub fn value_of(&self, agent: AgentId) -> Option<Value> {
        self.0.get(&agent).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Implication order on the fragment: a conjunction of more atoms implies
    /// a conjunction of fewer. True iff `other`'s assignment is a sub-map.
    pub fn implies(&self, other: &PrimitiveValueFormula) -> bool {
        other.0.iter().all(|(a, v)| self.0.get(a) == Some(v))
    }

    /// The formula as a conjunction of `init` atoms in canonical agent order.
    pub fn to_formula(&self) -> Formula {
        conj(self.0.iter().map(|(&a, &v)| Formula::Atom(Atom::Init(a, v))))
            .expect("primitive value formulas are nonempty")
    }
}

impl fmt::Display for PrimitiveValueFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (a, v) in &self.0 {
            if !first {
                write!(f, " & ")?;
            }
            first = false;
            write!(f, "init({a},{v})")?;
        }
        Ok(())
    }
}

/// Shorthand used across the checker: `self implies other`.
pub fn pvf_implies(phi: &PrimitiveValueFormula, psi: &PrimitiveValueFormula) -> bool {
    phi.implies(psi)
}

/// All `(k+1)^n - 1` canonical primitive value formulas over `n` agents and
/// `k` values: each agent is absent or mapped to one value, not all absent.
pub fn enumerate_phi(n_agents: u32, k_values: u32) -> Vec<PrimitiveValueFormula> {
    assert!(n_agents >= 1 && k_values >= 1);
    let base = (k_values + 1) as u128;
    let total = base
        .checked_pow(n_agents)
        .expect("phi enumeration overflow");
    assert!(total <= 4_000_000, "phi enumeration too large: {total}");
    let mut out = Vec::with_capacity(total as usize - 1);
    for code in 1..total {
        let mut rest = code;
        let mut map = BTreeMap::new();
        for agent in 1..=n_agents {
            let digit = (rest % base) as u32;
            rest /= base;
            if digit > 0 {
                map.insert(AgentId::new(agent), Value::new(digit - 1));
            }
        }
        out.push(PrimitiveValueFormula(map));
    }
    out
}
