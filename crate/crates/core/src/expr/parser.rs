use super::{BinOp, ExprNode, Func};

/// Parse failure with the byte offset where it was detected.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character {ch:?} at byte {offset}")]
    UnexpectedChar { ch: char, offset: usize },
    #[error("unexpected {found} at byte {offset}")]
    UnexpectedToken { found: String, offset: usize },
    #[error("unexpected end of input at byte {offset}")]
    UnexpectedEnd { offset: usize },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("malformed number at byte {offset}")]
    InvalidNumber { offset: usize },
}

impl ParseError {
    /// Byte offset into the source, when the error has one.
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Empty => None,
            ParseError::UnexpectedChar { offset, .. }
            | ParseError::UnexpectedToken { offset, .. }
            | ParseError::UnexpectedEnd { offset }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::InvalidNumber { offset } => Some(*offset),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("operator `{c}`"),
            Tok::LParen => "`(`".to_string(),
            Tok::RParen => "`)`".to_string(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((Tok::Op(b as char), i));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // exponent only when digits follow, so `2e` stays an error rather than a number
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|_| ParseError::InvalidNumber { offset: start })?;
                out.push((Tok::Num(value), start));
            }
            b if b.is_ascii_alphabetic() || b == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('\u{fffd}');
                return Err(ParseError::UnexpectedChar { ch, offset: i });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(_, o)| *o)
    }

    fn unexpected(&self) -> ParseError {
        match self.toks.get(self.pos) {
            Some((tok, offset)) => ParseError::UnexpectedToken {
                found: tok.describe(),
                offset: *offset,
            },
            None => ParseError::UnexpectedEnd { offset: self.end },
        }
    }

    fn expr(&mut self) -> Result<ExprNode, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op('+')) => BinOp::Add,
                Some(Tok::Op('-')) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = ExprNode::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<ExprNode, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op('*')) => BinOp::Mul,
                Some(Tok::Op('/')) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = ExprNode::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<ExprNode, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(ExprNode::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<ExprNode, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(ExprNode::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ExprNode, ParseError> {
        let offset = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(ExprNode::Const(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(Tok::LParen) = self.peek() {
                    let func = Func::from_name(&name)
                        .ok_or(ParseError::UnknownFunction { name, offset })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(ExprNode::call(func, arg));
                }
                Ok(match name.as_str() {
                    "pi" => ExprNode::Const(std::f64::consts::PI),
                    "e" => ExprNode::Const(std::f64::consts::E),
                    _ => ExprNode::Var(name),
                })
            }
            _ => Err(self.unexpected()),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected()),
        }
    }
}

/// Parses an expression string into its tree.
pub fn parse(source: &str) -> Result<ExprNode, ParseError> {
    let toks = lex(source)?;
    if toks.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser {
        toks,
        pos: 0,
        end: source.len(),
    };
    let node = parser.expr()?;
    if parser.pos < parser.toks.len() {
        return Err(parser.unexpected());
    }
    Ok(node)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ExprNode as E;

    fn c(v: f64) -> E {
        E::Const(v)
    }

    #[test]
    fn zero_literal() {
        assert_eq!(parse("0").unwrap(), c(0.0));
    }

    #[test]
    fn example_plant_nonlinearity_tree() {
        let got = parse("-0.5*(sin(x1)+x2)").unwrap();
        let want = E::binary(
            BinOp::Mul,
            E::Neg(Box::new(c(0.5))),
            E::binary(BinOp::Add, E::call(Func::Sin, E::var("x1")), E::var("x2")),
        );
        assert_eq!(got, want);
    }

    #[test]
    fn whitespace_insensitive() {
        assert_eq!(
            parse(" 3 +\tcos( x2 )\n").unwrap(),
            parse("3+cos(x2)").unwrap()
        );
    }

    #[test]
    fn power_is_right_associative() {
        let got = parse("2^3^2").unwrap();
        let want = E::binary(BinOp::Pow, c(2.0), E::binary(BinOp::Pow, c(3.0), c(2.0)));
        assert_eq!(got, want);
    }

    #[test]
    fn power_binds_tighter_than_negation() {
        assert_eq!(
            parse("-2^2").unwrap(),
            E::Neg(Box::new(E::binary(BinOp::Pow, c(2.0), c(2.0))))
        );
        assert_eq!(
            parse("2^-1").unwrap(),
            E::binary(BinOp::Pow, c(2.0), E::Neg(Box::new(c(1.0))))
        );
    }

    #[test]
    fn scientific_numbers_and_constants() {
        assert_eq!(parse("1.5e-3").unwrap(), c(1.5e-3));
        assert_eq!(parse(".25").unwrap(), c(0.25));
        assert_eq!(parse("2E+2").unwrap(), c(200.0));
        assert_eq!(parse("pi").unwrap(), c(std::f64::consts::PI));
        assert_eq!(parse("e").unwrap(), c(std::f64::consts::E));
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(parse(""), Err(ParseError::Empty));
        assert_eq!(parse("   "), Err(ParseError::Empty));
    }

    #[test]
    fn unknown_function_reports_offset() {
        let err = parse("1 + foo(x)").unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownFunction {
                name: "foo".into(),
                offset: 4
            }
        );
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert_eq!(parse("(x1 + 2").unwrap_err().offset(), Some(7));
        assert_eq!(parse("x1 + * 2").unwrap_err().offset(), Some(5));
        assert_eq!(parse("x1 $ 2").unwrap_err().offset(), Some(3));
        assert_eq!(parse("2 x").unwrap_err().offset(), Some(2));
        assert_eq!(parse("sin x").unwrap_err().offset(), Some(4));
    }

    #[test]
    fn dangling_exponent_marker_is_not_a_number() {
        // `2e` lexes as `2` followed by the identifier `e`
        assert!(parse("2e").is_err());
    }
}
