//! Textual `.bip` syntax for architecture diagrams.
//!
//! ```text
//! diagram     ::= "diagram" ident "{" component* motif* "}"
//! component   ::= "component" ident "[" card "]" "{"
//!                   "ports" "{" idents "}"
//!                   ("events" "{" idents "}")?
//!                   ("guards" "{" idents "}")?
//!                   "states" "{" (ident "*"?),+ "}"
//!                   "transitions" "{" transition* "}"
//!                 "}"
//! transition  ::= ident? ":" ident "->" ident ("[" guard "]")?
//! motif       ::= "motif" ident "{" end (";" end)* "}"
//! end         ::= ident "." ident card ":" card ("trigger" | "synchron")?
//! card        ::= integer | ident
//! guard       ::= guard "|" guard | guard "&" guard | "!" guard | "(" guard ")" | ident
//! ```
//!
//! `//` starts a comment running to the end of the line. A transition without
//! a leading label is internal; a label declared under `events` makes it
//! spontaneous, any other label makes it enforceable. Keywords are reserved.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::model::{
    ArchitectureDiagram, CardExpr, ComponentType, ConnectorMotif, GuardExpr, MotifEnd, PortTypeRef, Span,
    StateDecl, Transition, TransitionKind, Typing,
};

const KEYWORDS: &[&str] = &[
    "diagram",
    "component",
    "ports",
    "events",
    "guards",
    "states",
    "transitions",
    "motif",
    "trigger",
    "synchron",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: expected {expected}, found {found}")]
pub struct ParseError {
    pub span: Span,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GuardParseError {
    #[error(transparent)]
    Syntax(#[from] ParseError),
    #[error("{span}: UNDECLARED_GUARD: guard `{name}` is not declared")]
    UndeclaredGuard { name: String, span: Span },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u64),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) if KEYWORDS.contains(&s.as_str()) => write!(f, "keyword '{s}'"),
            Tok::Ident(s) => write!(f, "identifier '{s}'"),
            Tok::Int(v) => write!(f, "integer {v}"),
            Tok::Sym(s) => write!(f, "'{s}'"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

const SYMBOLS: &[&str] = &["->", "{", "}", "[", "]", "(", ")", ":", ";", ",", ".", "*", "!", "&", "|"];

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[begin..i].iter().collect();
            col += (i - begin) as u32;
            out.push(Token { tok: Tok::Ident(word), span: Span::new(start.0, start.1, line, col) });
            continue;
        }
        if c.is_ascii_digit() {
            let begin = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[begin..i].iter().collect();
            col += (i - begin) as u32;
            let span = Span::new(start.0, start.1, line, col);
            let value = digits.parse::<u64>().map_err(|_| ParseError {
                span,
                expected: "an integer that fits in 64 bits".into(),
                found: format!("'{digits}'"),
            })?;
            out.push(Token { tok: Tok::Int(value), span });
            continue;
        }
        let sym = SYMBOLS.iter().find(|s| s.chars().enumerate().all(|(k, sc)| chars.get(i + k) == Some(&sc)));
        match sym {
            Some(s) => {
                let n = s.chars().count();
                i += n;
                col += n as u32;
                out.push(Token { tok: Tok::Sym(s), span: Span::new(start.0, start.1, line, col) });
            }
            None => {
                return Err(ParseError {
                    span: Span::new(line, col, line, col + 1),
                    expected: "a token".into(),
                    found: format!("character {c:?}"),
                })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(line, col, line, col) });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Parser { tokens, pos: 0 }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn error<T>(&self, expected: impl Into<String>) -> PResult<T> {
        let t = self.peek();
        Err(ParseError { span: t.span, expected: expected.into(), found: t.tok.to_string() })
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(x) if *x == s)
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(x) if x == kw)
    }

    fn at_ident(&self) -> bool {
        matches!(&self.peek().tok, Tok::Ident(x) if !KEYWORDS.contains(&x.as_str()))
    }

    fn expect_sym(&mut self, s: &'static str) -> PResult<Span> {
        if self.at_sym(s) {
            Ok(self.bump().span)
        } else {
            self.error(format!("'{s}'"))
        }
    }

    fn expect_keyword(&mut self, kw: &'static str) -> PResult<Span> {
        if self.at_keyword(kw) {
            Ok(self.bump().span)
        } else {
            self.error(format!("'{kw}'"))
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        if self.at_ident() {
            let t = self.bump();
            match t.tok {
                Tok::Ident(s) => Ok((s, t.span)),
                _ => unreachable!(),
            }
        } else {
            self.error("identifier")
        }
    }

    fn card(&mut self) -> PResult<CardExpr> {
        match self.peek().tok.clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(CardExpr::Literal(v))
            }
            Tok::Ident(_) if self.at_ident() => Ok(CardExpr::Param(self.ident()?.0)),
            _ => self.error("integer or parameter name"),
        }
    }

    fn ident_list(&mut self) -> PResult<Vec<(String, Span)>> {
        self.expect_sym("{")?;
        let mut out = Vec::new();
        if !self.at_sym("}") {
            out.push(self.ident()?);
            while self.at_sym(",") {
                self.bump();
                out.push(self.ident()?);
            }
        }
        self.expect_sym("}")?;
        Ok(out)
    }

    fn diagram(&mut self) -> PResult<ArchitectureDiagram> {
        self.expect_keyword("diagram")?;
        let (name, span) = self.ident()?;
        self.expect_sym("{")?;
        let mut d = ArchitectureDiagram::new(name);
        d.span = span;
        while self.at_keyword("component") {
            d.component_types.push(self.component()?);
        }
        while self.at_keyword("motif") {
            d.motifs.push(self.motif()?);
        }
        if !self.at_sym("}") {
            return if d.motifs.is_empty() {
                self.error("'component', 'motif' or '}'")
            } else {
                self.error("'motif' or '}'")
            };
        }
        self.bump();
        if self.peek().tok != Tok::Eof {
            return self.error("end of input");
        }
        Ok(d)
    }

    fn component(&mut self) -> PResult<ComponentType> {
        self.expect_keyword("component")?;
        let (name, span) = self.ident()?;
        self.expect_sym("[")?;
        let card = self.card()?;
        self.expect_sym("]")?;
        self.expect_sym("{")?;
        let mut ct = ComponentType::new(name, card);
        ct.span = span;

        self.expect_keyword("ports")?;
        ct.ports = self.ident_list()?.into_iter().map(|(s, _)| s).collect();
        if self.at_keyword("events") {
            self.bump();
            ct.events = self.ident_list()?.into_iter().map(|(s, _)| s).collect();
        }
        if self.at_keyword("guards") {
            self.bump();
            ct.guards = self.ident_list()?.into_iter().map(|(s, _)| s).collect();
        }

        self.expect_keyword("states")?;
        self.expect_sym("{")?;
        loop {
            let (name, span) = self.ident()?;
            let initial = self.at_sym("*");
            let span = if initial { span.to(self.bump().span) } else { span };
            ct.states.push(StateDecl { name, initial, span });
            if self.at_sym(",") {
                self.bump();
            } else {
                break;
            }
        }
        self.expect_sym("}")?;

        self.expect_keyword("transitions")?;
        self.expect_sym("{")?;
        while !self.at_sym("}") {
            let t = self.transition(&ct.events)?;
            ct.transitions.push(t);
        }
        self.bump();
        self.expect_sym("}")?;
        Ok(ct)
    }

    fn transition(&mut self, events: &BTreeSet<String>) -> PResult<Transition> {
        let start = self.peek().span;
        let (kind, label) = if self.at_sym(":") {
            (TransitionKind::Internal, String::new())
        } else if self.at_ident() {
            let (label, _) = self.ident()?;
            if events.contains(&label) {
                (TransitionKind::Spontaneous, label)
            } else {
                (TransitionKind::Enforceable, label)
            }
        } else {
            return self.error("transition label, ':' or '}'");
        };
        self.expect_sym(":")?;
        let (source, _) = self.ident()?;
        self.expect_sym("->")?;
        let (destination, _) = self.ident()?;
        let guard = if self.at_sym("[") {
            self.bump();
            let g = self.guard_or()?;
            self.expect_sym("]")?;
            Some(g)
        } else {
            None
        };
        Ok(Transition { kind, label, source, destination, guard, span: start.to(self.prev_span()) })
    }

    fn guard_or(&mut self) -> PResult<GuardExpr> {
        let mut lhs = self.guard_and()?;
        while self.at_sym("|") {
            self.bump();
            lhs = GuardExpr::or(lhs, self.guard_and()?);
        }
        Ok(lhs)
    }

    fn guard_and(&mut self) -> PResult<GuardExpr> {
        let mut lhs = self.guard_unary()?;
        while self.at_sym("&") {
            self.bump();
            lhs = GuardExpr::and(lhs, self.guard_unary()?);
        }
        Ok(lhs)
    }

    fn guard_unary(&mut self) -> PResult<GuardExpr> {
        if self.at_sym("!") {
            self.bump();
            return Ok(GuardExpr::not(self.guard_unary()?));
        }
        if self.at_sym("(") {
            self.bump();
            let e = self.guard_or()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        if self.at_ident() {
            return Ok(GuardExpr::Atom(self.ident()?.0));
        }
        self.error("guard name, '!' or '('")
    }

    fn motif(&mut self) -> PResult<ConnectorMotif> {
        self.expect_keyword("motif")?;
        let (name, span) = self.ident()?;
        self.expect_sym("{")?;
        let mut m = ConnectorMotif::new(name, Vec::new());
        m.span = span;
        m.ends.push(self.motif_end()?);
        while self.at_sym(";") {
            self.bump();
            m.ends.push(self.motif_end()?);
        }
        self.expect_sym("}")?;
        Ok(m)
    }

    fn motif_end(&mut self) -> PResult<MotifEnd> {
        let (ty, start) = self.ident()?;
        self.expect_sym(".")?;
        let (port, _) = self.ident()?;
        let multiplicity = self.card()?;
        self.expect_sym(":")?;
        let degree = self.card()?;
        let typing = if self.at_keyword("trigger") {
            self.bump();
            Typing::Trigger
        } else if self.at_keyword("synchron") {
            self.bump();
            Typing::Synchron
        } else {
            Typing::Synchron
        };
        let mut end = MotifEnd::new(PortTypeRef::new(ty, port), multiplicity, degree, typing);
        end.span = start.to(self.prev_span());
        Ok(end)
    }
}

/// Parse a complete `.bip` model. On failure no partial model is returned.
pub fn parse_model(text: &str) -> Result<ArchitectureDiagram, Vec<ParseError>> {
    let tokens = lex(text).map_err(|e| vec![e])?;
    let mut p = Parser::new(tokens);
    p.diagram().map_err(|e| vec![e])
}

/// Parse raw bytes, rejecting invalid UTF-8 with a positioned error.
pub fn parse_model_bytes(bytes: &[u8]) -> Result<ArchitectureDiagram, Vec<ParseError>> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_model(text),
        Err(e) => {
            let valid = std::str::from_utf8(&bytes[..e.valid_up_to()]).unwrap_or_default();
            let line = valid.matches('\n').count() as u32 + 1;
            let col = valid.rsplit('\n').next().map_or(0, |l| l.chars().count()) as u32 + 1;
            Err(vec![ParseError {
                span: Span::new(line, col, line, col + 1),
                expected: "UTF-8 text".into(),
                found: "an invalid byte sequence".into(),
            }])
        }
    }
}

/// Parse a standalone guard expression and check its atoms against the
/// declared guard names.
pub fn parse_guard_expr(text: &str, declared: &BTreeSet<String>) -> Result<GuardExpr, GuardParseError> {
    let tokens = lex(text)?;
    let mut p = Parser::new(tokens);
    let expr = p.guard_or()?;
    if p.peek().tok != Tok::Eof {
        return Err(p.error::<()>("'&', '|' or end of input").unwrap_err().into());
    }
    // Atom spans are not tracked individually; report the whole expression.
    let whole = Span::new(1, 1, p.peek().span.end_line, p.peek().span.end_col);
    if let Some(bad) = expr.atoms().into_iter().find(|a| !declared.contains(*a)) {
        return Err(GuardParseError::UndeclaredGuard { name: bad.to_string(), span: whole });
    }
    Ok(expr)
}

fn join<'a>(items: impl IntoIterator<Item = &'a String>) -> String {
    items.into_iter().map(String::as_str).collect::<Vec<_>>().join(", ")
}

/// Canonical text for a diagram. Identifier sets are sorted; component types,
/// states, transitions and motifs keep their declaration order.
pub fn serialize_model(d: &ArchitectureDiagram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "diagram {} {{", d.name);
    for (i, ct) in d.component_types.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "  component {} [{}] {{", ct.name, ct.cardinality);
        let _ = writeln!(out, "    ports {{ {} }}", join(&ct.ports));
        if !ct.events.is_empty() {
            let _ = writeln!(out, "    events {{ {} }}", join(&ct.events));
        }
        if !ct.guards.is_empty() {
            let _ = writeln!(out, "    guards {{ {} }}", join(&ct.guards));
        }
        let states: Vec<String> = ct
            .states
            .iter()
            .map(|s| if s.initial { format!("{}*", s.name) } else { s.name.clone() })
            .collect();
        let _ = writeln!(out, "    states {{ {} }}", states.join(", "));
        if ct.transitions.is_empty() {
            out.push_str("    transitions { }\n");
        } else {
            out.push_str("    transitions {\n");
            for t in &ct.transitions {
                out.push_str("      ");
                if t.kind != TransitionKind::Internal {
                    out.push_str(&t.label);
                    out.push(' ');
                }
                let _ = write!(out, ": {} -> {}", t.source, t.destination);
                if let Some(g) = &t.guard {
                    let _ = write!(out, " [{g}]");
                }
                out.push('\n');
            }
            out.push_str("    }\n");
        }
        out.push_str("  }\n");
    }
    for m in &d.motifs {
        out.push('\n');
        let _ = writeln!(out, "  motif {} {{", m.name);
        for (i, e) in m.ends.iter().enumerate() {
            let sep = if i + 1 < m.ends.len() { ";" } else { "" };
            let _ = writeln!(out, "    {} {}:{} {}{sep}", e.port, e.multiplicity, e.degree, e.typing);
        }
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empty_input() {
        let errs = parse_model("").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].expected, "'diagram'");
        assert_eq!(errs[0].found, "end of input");
    }

    #[test]
    fn guard_negation() {
        let g = parse_guard_expr("!finished", &set(&["finished"])).unwrap();
        assert_eq!(g, GuardExpr::not(GuardExpr::atom("finished")));
        let g = parse_guard_expr("finished", &set(&["finished"])).unwrap();
        assert_eq!(g, GuardExpr::atom("finished"));
    }

    #[test]
    fn guard_precedence() {
        let g = parse_guard_expr("a & (b | !c)", &set(&["a", "b", "c"])).unwrap();
        assert_eq!(
            g,
            GuardExpr::and(
                GuardExpr::atom("a"),
                GuardExpr::or(GuardExpr::atom("b"), GuardExpr::not(GuardExpr::atom("c")))
            )
        );
        let g = parse_guard_expr("a | b & !c | d", &set(&["a", "b", "c", "d"])).unwrap();
        assert_eq!(
            g,
            GuardExpr::or(
                GuardExpr::or(
                    GuardExpr::atom("a"),
                    GuardExpr::and(GuardExpr::atom("b"), GuardExpr::not(GuardExpr::atom("c")))
                ),
                GuardExpr::atom("d")
            )
        );
    }

    #[test]
    fn guard_errors() {
        assert!(matches!(
            parse_guard_expr("a & g", &set(&["a"])),
            Err(GuardParseError::UndeclaredGuard { name, .. }) if name == "g"
        ));
        assert!(matches!(parse_guard_expr("a &", &set(&["a"])), Err(GuardParseError::Syntax(_))));
        assert!(matches!(parse_guard_expr("(a", &set(&["a"])), Err(GuardParseError::Syntax(_))));
        assert!(matches!(parse_guard_expr("a b", &set(&["a", "b"])), Err(GuardParseError::Syntax(_))));
    }

    #[test]
    fn guard_printing_round_trips() {
        let declared = set(&["a", "b", "c"]);
        for text in ["a & (b & c)", "!(a | b)", "a | b & c", "(a | b) & c", "!!a", "a & b & c"] {
            let g = parse_guard_expr(text, &declared).unwrap();
            let again = parse_guard_expr(&g.to_string(), &declared).unwrap();
            assert_eq!(g, again, "{text} -> {g}");
        }
    }

    #[test]
    fn transition_kinds_and_spans() {
        let src = "diagram D {\r\n  component R [n] {\r\n    ports { on }\r\n    events { end }\r\n    guards { g }\r\n    states { a*, b }\r\n    transitions {\r\n      on : a -> b\r\n      end : b -> a [!g]\r\n      : b -> a [g]\r\n    }\r\n  }\r\n  motif m { R.on 1:1 }\r\n}\r\n";
        let d = parse_model(src).unwrap();
        let ct = &d.component_types[0];
        let kinds: Vec<_> = ct.transitions.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![TransitionKind::Enforceable, TransitionKind::Spontaneous, TransitionKind::Internal]
        );
        assert_eq!(ct.transitions[2].label, "");
        assert_eq!(ct.transitions[1].span.start_line, 9);
        assert_eq!(ct.transitions[1].span.start_col, 7);
        assert_eq!(d.motifs[0].ends[0].typing, Typing::Synchron);
        assert_eq!(ct.initial_state(), Some("a"));
    }

    #[test]
    fn syntax_error_location() {
        let src = "diagram D {\n  component R [n] {\n    ports { on\n    states { a* }";
        let errs = parse_model(src).unwrap_err();
        assert_eq!(errs[0].span.start_line, 4);
        assert_eq!(errs[0].expected, "'}'");
        assert_eq!(errs[0].found, "keyword 'states'");
    }

    #[test]
    fn keywords_are_reserved() {
        let errs = parse_model("diagram motif { }").unwrap_err();
        assert_eq!(errs[0].expected, "identifier");
        assert_eq!(errs[0].found, "keyword 'motif'");
    }

    #[test]
    fn unknown_character() {
        let errs = parse_model("diagram D { # }").unwrap_err();
        assert_eq!(errs[0].span.start_col, 13);
    }

    #[test]
    fn invalid_utf8() {
        let errs = parse_model_bytes(b"diagram D {\n \xff }").unwrap_err();
        assert_eq!(errs[0].span.start_line, 2);
        assert_eq!(errs[0].span.start_col, 2);
    }

    #[test]
    fn integer_overflow() {
        let errs = parse_model("diagram D { component C [99999999999999999999999] {").unwrap_err();
        assert!(errs[0].expected.contains("64 bits"));
    }
}
