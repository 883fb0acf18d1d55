//! Parser for the canonical expression text form.
//!
//! Grammar (no whitespace):
//!
//! ```text
//! expression := "0" | term ("+" term)*
//! term       := [number "*"] factor ("*" factor)*
//! factor     := "x" | "x^" integer | "sin(x)" | "cos(x)" | "tan(x)"
//!             | "log(x)" | "exp(x)"
//! number     := ["-"] digits ["." digits] [("e"|"E") ["+"|"-"] digits]
//! ```
//!
//! `parse(format(e))` reproduces `e` structurally: factor order inside a term
//! is preserved, a missing coefficient parses as 1, and the bare string `0`
//! is the empty expression.

use super::{BaseFeature, ExprError, Expression, Term};

pub fn parse_expression(text: &str) -> Result<Expression, ExprError> {
    let trimmed = text.trim();
    if trimmed == "0" {
        return Ok(Expression::default());
    }
    let mut p = Parser {
        bytes: trimmed.as_bytes(),
        pos: 0,
    };
    let expr = p.expression()?;
    if p.pos != p.bytes.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> ExprError {
        ExprError::Parse {
            position: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_str(&mut self, s: &str) -> Result<(), ExprError> {
        if self.bytes[self.pos..].starts_with(s.as_bytes()) {
            self.pos += s.len();
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`")))
        }
    }

    fn expression(&mut self) -> Result<Expression, ExprError> {
        let mut terms = vec![self.term()?];
        while self.eat(b'+') {
            terms.push(self.term()?);
        }
        Ok(Expression::new(terms))
    }

    fn term(&mut self) -> Result<Term, ExprError> {
        let coefficient = match self.peek() {
            Some(b) if b.is_ascii_digit() || b == b'-' => {
                let c = self.number()?;
                self.expect_str("*")?;
                c
            }
            _ => 1.0,
        };
        let mut factors = vec![self.factor()?];
        while self.eat(b'*') {
            factors.push(self.factor()?);
        }
        Ok(Term {
            coefficient,
            factors,
        })
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        let start = self.pos;
        self.eat(b'-');
        let digits_start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(self.error("expected digits"));
        }
        if self.eat(b'.') {
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if self.peek() == Some(b'e') || self.peek() == Some(b'E') {
            // Only an exponent if followed by a well-formed integer;
            // otherwise leave it for factor parsing (`exp(x)` starts with e).
            let mark = self.pos;
            self.pos += 1;
            let _ = self.eat(b'+') || self.eat(b'-');
            let exp_start = self.pos;
            while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == exp_start {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii slice");
        text.parse::<f64>().map_err(|e| ExprError::Parse {
            position: start,
            message: format!("bad number `{text}`: {e}"),
        })
    }

    fn factor(&mut self) -> Result<BaseFeature, ExprError> {
        match self.peek() {
            Some(b'x') => {
                self.pos += 1;
                if self.eat(b'^') {
                    let start = self.pos;
                    while self.peek().is_some_and(|b| b.is_ascii_digit()) {
                        self.pos += 1;
                    }
                    if self.pos == start {
                        return Err(self.error("expected an integer exponent after `^`"));
                    }
                    let text =
                        std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii slice");
                    let k: u32 = text.parse().map_err(|e| ExprError::Parse {
                        position: start,
                        message: format!("bad exponent `{text}`: {e}"),
                    })?;
                    if k == 0 {
                        return Err(ExprError::Parse {
                            position: start,
                            message: "exponent must be at least 1".to_string(),
                        });
                    }
                    Ok(BaseFeature::XPow(k))
                } else {
                    Ok(BaseFeature::XPow(1))
                }
            }
            Some(b's') => self.expect_str("sin(x)").map(|_| BaseFeature::Sin),
            Some(b'c') => self.expect_str("cos(x)").map(|_| BaseFeature::Cos),
            Some(b't') => self.expect_str("tan(x)").map(|_| BaseFeature::Tan),
            Some(b'l') => self.expect_str("log(x)").map(|_| BaseFeature::Log),
            Some(b'e') => self.expect_str("exp(x)").map(|_| BaseFeature::Exp),
            _ => Err(self.error("expected a factor")),
        }
    }
}
