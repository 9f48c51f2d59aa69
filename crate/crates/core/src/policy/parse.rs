//! Policy grammar:
//!
//! ```text
//! expr  := term (("AND" | "OR") term)*          one operator kind per group
//! term  := attr | "(" expr ")" | "THRESHOLD" "(" int ";" expr ("," expr)* ")"
//! attr  := authority "/" name
//! ```

use super::{AccessTree, AttributeLabel, Node, PolicyError};

pub fn parse_policy(text: &str) -> Result<AccessTree, PolicyError> {
    let mut p = Parser { src: text, pos: 0 };
    let root = p.expr()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(AccessTree::new(root))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    And,
    Or,
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

fn word_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '(' | ')' | ',' | ';')
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> PolicyError {
        PolicyError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn expect(&mut self, c: char) -> Result<(), PolicyError> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }

    /// Next bare word without consuming it.
    fn peek_word(&mut self) -> &'a str {
        self.skip_ws();
        let rest = self.rest();
        let end = rest.find(|c: char| !word_char(c)).unwrap_or(rest.len());
        &rest[..end]
    }

    fn operator(&mut self) -> Option<Op> {
        let op = match self.peek_word() {
            "AND" => Op::And,
            "OR" => Op::Or,
            _ => return None,
        };
        self.pos += if op == Op::And { 3 } else { 2 };
        Some(op)
    }

    fn expr(&mut self) -> Result<Node, PolicyError> {
        let first = self.term()?;
        let mut children = vec![first];
        let mut op = None;
        loop {
            let at = self.pos;
            match self.operator() {
                None => break,
                Some(next) => {
                    if op.is_some_and(|o| o != next) {
                        self.pos = at;
                        self.skip_ws();
                        return Err(self.err("mixed AND/OR in one group; add parentheses"));
                    }
                    op = Some(next);
                    children.push(self.term()?);
                }
            }
        }
        match op {
            None => Ok(children.pop().expect("one term")),
            Some(Op::And) => Node::and(children),
            Some(Op::Or) => Node::or(children),
        }
    }

    fn term(&mut self) -> Result<Node, PolicyError> {
        match self.peek() {
            None => Err(self.err("unexpected end of policy")),
            Some('(') => {
                self.pos += 1;
                if self.peek() == Some(')') {
                    return Err(PolicyError::EmptyGate);
                }
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Some(_) => {
                let start = self.pos;
                let word = self.peek_word();
                match word {
                    "" => Err(self.err("expected attribute or '('")),
                    "AND" | "OR" => Err(self.err(format!("unexpected operator {word}"))),
                    "THRESHOLD" => {
                        self.pos += word.len();
                        self.threshold()
                    }
                    _ => {
                        let label: AttributeLabel = word.parse().map_err(|_| PolicyError::Syntax {
                            pos: start,
                            msg: format!("invalid attribute {word:?}; expected authority/name"),
                        })?;
                        self.pos += word.len();
                        Ok(Node::leaf(label))
                    }
                }
            }
        }
    }

    fn threshold(&mut self) -> Result<Node, PolicyError> {
        self.expect('(')?;
        let digits = self.peek_word();
        let k: usize = digits.parse().map_err(|_| self.err(format!("expected threshold integer, found {digits:?}")))?;
        self.pos += digits.len();
        self.expect(';')?;
        if self.peek() == Some(')') {
            return Err(PolicyError::EmptyGate);
        }
        let mut children = vec![self.expr()?];
        while self.peek() == Some(',') {
            self.pos += 1;
            children.push(self.expr()?);
        }
        self.expect(')')?;
        Node::threshold(k, children)
    }
}
