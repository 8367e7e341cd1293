//! Symbol expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := ['-'] atom
//! atom   := number
//!         | 'k' '[' digit ']'                  (1-based lattice coordinate)
//!         | 'Lambda'                           (the configured weight at k)
//!         | 'expi' '(' int (',' int)* ')'      (e^{2 pi i c.x})
//!         | ('sin' | 'cos') '(' expr ')'
//!         | 'pow' '(' expr ',' number ')'
//!         | '(' expr ')'
//! ```
//!
//! Every error carries a 1-based line and column.

use std::fmt;

use mellip_core::weights::WeightFunction;
use mellip_core::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

fn err<T>(line: u32, col: u32, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, col, message: message.into() })
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: ExprKind,
    pub line: u32,
    pub col: u32,
}

/// Structural equality (positions ignored), so print/parse round trips can
/// be compared.
impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Number(f64),
    /// 1-based lattice coordinate `k[i]`.
    Coord(usize),
    Lambda,
    /// `expi(c_1, ..., c_n) = e^{2 pi i c . x}`.
    ExpI(Vec<i64>),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Pow(Box<Node>, f64),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    fn step(c: char, line: &mut u32, col: &mut u32) {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    }

    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0usize;
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                step(c, &mut line, &mut col);
                i += 1;
            }
            '+' | '-' | '*' | '/' | '(' | ')' | '[' | ']' | ',' => {
                let tok = match c {
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '*' => Tok::Star,
                    '/' => Tok::Slash,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    _ => Tok::Comma,
                };
                out.push(Spanned { tok, line: tline, col: tcol });
                step(c, &mut line, &mut col);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    i += 1;
                    if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                        i += 1;
                    }
                    if i >= chars.len() || !chars[i].is_ascii_digit() {
                        return err(tline, tcol, "malformed number: empty exponent");
                    }
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let lexeme: String = chars[start..i].iter().collect();
                let value: f64 = match lexeme.parse() {
                    Ok(v) => v,
                    Err(_) => return err(tline, tcol, format!("malformed number '{lexeme}'")),
                };
                // A digit or dot immediately following (e.g. "1.2.3") is malformed.
                if i < chars.len() && (chars[i] == '.' || chars[i].is_ascii_alphabetic()) {
                    return err(tline, tcol, format!("malformed number starting at '{lexeme}'"));
                }
                for ch in lexeme.chars() {
                    step(ch, &mut line, &mut col);
                }
                out.push(Spanned { tok: Tok::Number(value), line: tline, col: tcol });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let ident: String = chars[start..i].iter().collect();
                for ch in ident.chars() {
                    step(ch, &mut line, &mut col);
                }
                out.push(Spanned { tok: Tok::Ident(ident), line: tline, col: tcol });
            }
            other => return err(tline, tcol, format!("unexpected character '{other}'")),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end_line: u32,
    end_col: u32,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (u32, u32) {
        self.peek().map(|s| (s.line, s.col)).unwrap_or((self.end_line, self.end_col))
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Spanned, ParseError> {
        let (line, col) = self.here();
        match self.bump() {
            Some(s) if s.tok == tok => Ok(s),
            Some(s) => err(s.line, s.col, format!("expected {what}, found {:?}", s.tok)),
            None => err(line, col, format!("expected {what}, found end of input")),
        }
    }

    fn parse_expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.parse_term()?;
        while let Some(s) = self.peek() {
            let op = match s.tok {
                Tok::Plus => ExprKind::Add as fn(Box<Node>, Box<Node>) -> ExprKind,
                Tok::Minus => ExprKind::Sub,
                _ => break,
            };
            let s = self.bump().expect("peeked");
            let rhs = self.parse_term()?;
            lhs = Node { kind: op(Box::new(lhs), Box::new(rhs)), line: s.line, col: s.col };
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.parse_factor()?;
        while let Some(s) = self.peek() {
            let op = match s.tok {
                Tok::Star => ExprKind::Mul as fn(Box<Node>, Box<Node>) -> ExprKind,
                Tok::Slash => ExprKind::Div,
                _ => break,
            };
            let s = self.bump().expect("peeked");
            let rhs = self.parse_factor()?;
            lhs = Node { kind: op(Box::new(lhs), Box::new(rhs)), line: s.line, col: s.col };
        }
        Ok(lhs)
    }

    fn parse_factor(&mut self) -> Result<Node, ParseError> {
        if matches!(self.peek().map(|s| &s.tok), Some(Tok::Minus)) {
            let s = self.bump().expect("peeked");
            let inner = self.parse_factor()?;
            return Ok(Node { kind: ExprKind::Neg(Box::new(inner)), line: s.line, col: s.col });
        }
        self.parse_atom()
    }

    fn parse_signed_int(&mut self) -> Result<i64, ParseError> {
        let negative = if matches!(self.peek().map(|s| &s.tok), Some(Tok::Minus)) {
            self.bump();
            true
        } else {
            false
        };
        let (line, col) = self.here();
        match self.bump() {
            Some(Spanned { tok: Tok::Number(v), line, col }) => {
                if v.fract() != 0.0 {
                    return err(line, col, format!("expected an integer, found {v}"));
                }
                Ok(if negative { -(v as i64) } else { v as i64 })
            }
            Some(s) => err(s.line, s.col, format!("expected an integer, found {:?}", s.tok)),
            None => err(line, col, "expected an integer, found end of input"),
        }
    }

    fn parse_signed_number(&mut self) -> Result<f64, ParseError> {
        let negative = if matches!(self.peek().map(|s| &s.tok), Some(Tok::Minus)) {
            self.bump();
            true
        } else {
            false
        };
        let (line, col) = self.here();
        match self.bump() {
            Some(Spanned { tok: Tok::Number(v), .. }) => Ok(if negative { -v } else { v }),
            Some(s) => err(s.line, s.col, format!("expected a number, found {:?}", s.tok)),
            None => err(line, col, "expected a number, found end of input"),
        }
    }

    fn parse_atom(&mut self) -> Result<Node, ParseError> {
        let (line, col) = self.here();
        let s = match self.bump() {
            Some(s) => s,
            None => return err(line, col, "expected an expression, found end of input"),
        };
        let node = |kind| Node { kind, line: s.line, col: s.col };
        match &s.tok {
            Tok::Number(v) => Ok(node(ExprKind::Number(*v))),
            Tok::LParen => {
                let inner = self.parse_expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "k" => {
                    self.expect(Tok::LBracket, "'['")?;
                    let (iline, icol) = self.here();
                    let idx = match self.bump() {
                        Some(Spanned { tok: Tok::Number(v), line, col }) => {
                            if v.fract() != 0.0 || !(0.0..=9.0).contains(&v) {
                                return err(line, col, "coordinate index must be a single digit");
                            }
                            v as usize
                        }
                        _ => return err(iline, icol, "coordinate index must be a single digit"),
                    };
                    self.expect(Tok::RBracket, "']'")?;
                    Ok(node(ExprKind::Coord(idx)))
                }
                "Lambda" => Ok(node(ExprKind::Lambda)),
                "expi" => {
                    self.expect(Tok::LParen, "'('")?;
                    let mut coeffs = vec![self.parse_signed_int()?];
                    while matches!(self.peek().map(|t| &t.tok), Some(Tok::Comma)) {
                        self.bump();
                        coeffs.push(self.parse_signed_int()?);
                    }
                    self.expect(Tok::RParen, "')'")?;
                    Ok(node(ExprKind::ExpI(coeffs)))
                }
                "sin" | "cos" => {
                    self.expect(Tok::LParen, "'('")?;
                    let inner = self.parse_expr()?;
                    self.expect(Tok::RParen, "')'")?;
                    if name == "sin" {
                        Ok(node(ExprKind::Sin(Box::new(inner))))
                    } else {
                        Ok(node(ExprKind::Cos(Box::new(inner))))
                    }
                }
                "pow" => {
                    self.expect(Tok::LParen, "'('")?;
                    let base = self.parse_expr()?;
                    self.expect(Tok::Comma, "','")?;
                    let exponent = self.parse_signed_number()?;
                    self.expect(Tok::RParen, "')'")?;
                    Ok(node(ExprKind::Pow(Box::new(base), exponent)))
                }
                other => err(s.line, s.col, format!("unknown identifier '{other}'")),
            },
            other => err(s.line, s.col, format!("expected an expression, found {other:?}")),
        }
    }
}

pub fn parse(text: &str) -> Result<Node, ParseError> {
    let toks = lex(text)?;
    let (end_line, end_col) = text.lines().enumerate().last().map_or((1, 1), |(i, l)| {
        (i as u32 + 1, l.chars().count() as u32 + 1)
    });
    let mut p = Parser { toks, pos: 0, end_line, end_col };
    let node = p.parse_expr()?;
    if let Some(s) = p.peek() {
        return err(s.line, s.col, format!("trailing input from {:?}", s.tok));
    }
    Ok(node)
}

/// Check the parts of an expression that depend on the lattice dimension.
pub fn validate(node: &Node, dim: usize) -> Result<(), ParseError> {
    match &node.kind {
        ExprKind::Coord(i) => {
            if *i < 1 || *i > dim {
                return err(
                    node.line,
                    node.col,
                    format!("coordinate index {i} out of range for dimension {dim}"),
                );
            }
            Ok(())
        }
        ExprKind::ExpI(coeffs) => {
            if coeffs.len() != dim {
                return err(
                    node.line,
                    node.col,
                    format!("expi takes {dim} coefficients here, got {}", coeffs.len()),
                );
            }
            Ok(())
        }
        ExprKind::Number(_) | ExprKind::Lambda => Ok(()),
        ExprKind::Sin(a) | ExprKind::Cos(a) | ExprKind::Neg(a) | ExprKind::Pow(a, _) => {
            validate(a, dim)
        }
        ExprKind::Add(a, b) | ExprKind::Sub(a, b) | ExprKind::Mul(a, b) | ExprKind::Div(a, b) => {
            validate(a, dim)?;
            validate(b, dim)
        }
    }
}

/// Evaluation failure at a specific grid point.
#[derive(Debug, Clone)]
pub struct EvalError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for EvalError {}

pub fn eval(
    node: &Node,
    k: &[i64],
    x: &[f64],
    weight: &WeightFunction<f64>,
) -> Result<C64, EvalError> {
    let re = |v: f64| C64::new(v, 0.0);
    match &node.kind {
        ExprKind::Number(v) => Ok(re(*v)),
        ExprKind::Coord(i) => Ok(re(k[i - 1] as f64)),
        ExprKind::Lambda => Ok(re(weight.eval(k))),
        ExprKind::ExpI(coeffs) => {
            let t: f64 = coeffs.iter().zip(x).map(|(&c, &xi)| c as f64 * xi).sum();
            Ok(mellip_core::scalar::unit_phase(t))
        }
        ExprKind::Sin(a) => Ok(eval(a, k, x, weight)?.sin()),
        ExprKind::Cos(a) => Ok(eval(a, k, x, weight)?.cos()),
        ExprKind::Pow(a, p) => Ok(eval(a, k, x, weight)?.powf(*p)),
        ExprKind::Neg(a) => Ok(-eval(a, k, x, weight)?),
        ExprKind::Add(a, b) => Ok(eval(a, k, x, weight)? + eval(b, k, x, weight)?),
        ExprKind::Sub(a, b) => Ok(eval(a, k, x, weight)? - eval(b, k, x, weight)?),
        ExprKind::Mul(a, b) => Ok(eval(a, k, x, weight)? * eval(b, k, x, weight)?),
        ExprKind::Div(a, b) => {
            let num = eval(a, k, x, weight)?;
            let den = eval(b, k, x, weight)?;
            if den.norm() == 0.0 {
                return Err(EvalError {
                    line: node.line,
                    col: node.col,
                    message: format!("division by zero at k = {k:?}"),
                });
            }
            Ok(num / den)
        }
    }
}

fn precedence(kind: &ExprKind) -> u8 {
    match kind {
        ExprKind::Add(..) | ExprKind::Sub(..) => 1,
        ExprKind::Mul(..) | ExprKind::Div(..) => 2,
        ExprKind::Neg(..) => 3,
        _ => 4,
    }
}

fn fmt_node(node: &Node, f: &mut fmt::Formatter<'_>, parent: u8, right: bool) -> fmt::Result {
    let mine = precedence(&node.kind);
    let needs_parens = mine < parent || (mine == parent && right && parent <= 2);
    if needs_parens {
        write!(f, "(")?;
    }
    match &node.kind {
        ExprKind::Number(v) => write!(f, "{v}")?,
        ExprKind::Coord(i) => write!(f, "k[{i}]")?,
        ExprKind::Lambda => write!(f, "Lambda")?,
        ExprKind::ExpI(coeffs) => {
            write!(f, "expi(")?;
            for (i, c) in coeffs.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")?;
        }
        ExprKind::Sin(a) => write!(f, "sin({a})")?,
        ExprKind::Cos(a) => write!(f, "cos({a})")?,
        ExprKind::Pow(a, p) => write!(f, "pow({a}, {p})")?,
        ExprKind::Neg(a) => {
            write!(f, "-")?;
            fmt_node(a, f, 3, false)?;
        }
        ExprKind::Add(a, b) => {
            fmt_node(a, f, 1, false)?;
            write!(f, " + ")?;
            fmt_node(b, f, 1, true)?;
        }
        ExprKind::Sub(a, b) => {
            fmt_node(a, f, 1, false)?;
            write!(f, " - ")?;
            fmt_node(b, f, 1, true)?;
        }
        ExprKind::Mul(a, b) => {
            fmt_node(a, f, 2, false)?;
            write!(f, "*")?;
            fmt_node(b, f, 2, true)?;
        }
        ExprKind::Div(a, b) => {
            fmt_node(a, f, 2, false)?;
            write!(f, "/")?;
            fmt_node(b, f, 2, true)?;
        }
    }
    if needs_parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(self, f, 0, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse_ok(text: &str) -> Node {
        parse(text).unwrap_or_else(|e| panic!("{text}: {e}"))
    }

    #[test]
    fn parses_the_running_examples() {
        let n = parse_ok("Lambda + 0.5*expi(1)");
        assert!(matches!(n.kind, ExprKind::Add(..)));
        let n = parse_ok("pow(Lambda, -1) * expi(-1)");
        assert!(matches!(n.kind, ExprKind::Mul(..)));
        let n = parse_ok("(Lambda + 0.5*expi(1))/Lambda");
        assert!(matches!(n.kind, ExprKind::Div(..)));
    }

    #[test]
    fn coordinate_out_of_range_is_reported_with_position() {
        let n = parse_ok("k[3]");
        let e = validate(&n, 2).unwrap_err();
        assert!(e.message.contains("out of range"));
        assert_eq!((e.line, e.col), (1, 1));
    }

    #[test]
    fn arity_mismatch_is_reported() {
        let n = parse_ok("expi(1)");
        assert!(validate(&n, 1).is_ok());
        let e = validate(&n, 2).unwrap_err();
        assert!(e.message.contains("coefficients"));
    }

    #[test]
    fn unknown_identifier_and_malformed_number() {
        let e = parse("Lambda + frob(2)").unwrap_err();
        assert!(e.message.contains("unknown identifier 'frob'"));
        assert_eq!(e.line, 1);
        assert_eq!(e.col, 10);

        let e = parse("1.2.3").unwrap_err();
        assert!(e.message.contains("malformed number"));

        let e = parse("2e").unwrap_err();
        assert!(e.message.contains("malformed number"), "{e}");
    }

    #[test]
    fn errors_carry_multi_line_positions() {
        let e = parse("Lambda +\n  bogus").unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
    }

    #[test]
    fn evaluates_against_weight_and_grid() {
        let w = WeightFunction::<f64>::standard(1, 1.0).unwrap();
        let n = parse_ok("Lambda + 0.5*expi(1)");
        let v = eval(&n, &[1], &[0.0], &w).unwrap();
        assert!((v - C64::new(2f64.sqrt() + 0.5, 0.0)).norm() < 1e-14);
        let v = eval(&n, &[0], &[0.25], &w).unwrap();
        assert!((v - C64::new(1.0, 0.5)).norm() < 1e-14);

        let n = parse_ok("pow(Lambda, -2)");
        let v = eval(&n, &[2], &[0.0], &w).unwrap();
        assert!((v.re - 0.2).abs() < 1e-14);

        let n = parse_ok("1/(Lambda - Lambda)");
        let e = eval(&n, &[1], &[0.0], &w).unwrap_err();
        assert!(e.message.contains("division by zero"));
    }

    #[test]
    fn print_parse_round_trip_on_fixed_samples() {
        for text in [
            "Lambda + 0.5*expi(1)",
            "pow(Lambda, -1) * expi(-1)",
            "(1 + k[1])*(2 - Lambda)",
            "1 - 2 - 3",
            "1 - (2 - 3)",
            "2/(3*Lambda)",
            "-Lambda + sin(cos(k[1]))",
            "pow(Lambda + 1, 0.5)",
        ] {
            let once = parse_ok(text);
            let twice = parse_ok(&once.to_string());
            assert_eq!(once, twice, "text: {text} printed: {once}");
        }
    }

    fn arb_expr() -> impl Strategy<Value = Node> {
        let leaf = prop_oneof![
            (0u8..100).prop_map(|v| Node {
                kind: ExprKind::Number(v as f64 / 4.0),
                line: 0,
                col: 0
            }),
            (1usize..3).prop_map(|i| Node { kind: ExprKind::Coord(i), line: 0, col: 0 }),
            Just(Node { kind: ExprKind::Lambda, line: 0, col: 0 }),
            proptest::collection::vec(-3i64..4, 1..3).prop_map(|c| Node {
                kind: ExprKind::ExpI(c),
                line: 0,
                col: 0
            }),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Node {
                    kind: ExprKind::Add(Box::new(a), Box::new(b)),
                    line: 0,
                    col: 0
                }),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Node {
                    kind: ExprKind::Sub(Box::new(a), Box::new(b)),
                    line: 0,
                    col: 0
                }),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Node {
                    kind: ExprKind::Mul(Box::new(a), Box::new(b)),
                    line: 0,
                    col: 0
                }),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Node {
                    kind: ExprKind::Div(Box::new(a), Box::new(b)),
                    line: 0,
                    col: 0
                }),
                inner.clone().prop_map(|a| Node {
                    kind: ExprKind::Neg(Box::new(a)),
                    line: 0,
                    col: 0
                }),
                inner.clone().prop_map(|a| Node {
                    kind: ExprKind::Sin(Box::new(a)),
                    line: 0,
                    col: 0
                }),
                (inner, -2i8..3).prop_map(|(a, p)| Node {
                    kind: ExprKind::Pow(Box::new(a), p as f64 / 2.0),
                    line: 0,
                    col: 0
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip_is_stable(node in arb_expr()) {
            let printed = node.to_string();
            let reparsed = parse(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
            prop_assert_eq!(&reparsed, &node, "printed: {}", printed);
            let reprinted = reparsed.to_string();
            prop_assert_eq!(printed, reprinted);
        }
    }
}
