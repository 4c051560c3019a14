//! Risk properties over network inputs and output counts.
//!
//! Properties live in the Boolean/count domain: output atoms compare the
//! popcount of an output neuron against a constant, input atoms pin an input
//! bit. The text grammar uses 1-based indices, matching the usual
//! `out_1, out_2, ...` notation:
//!
//! ```text
//! property := or ( "->" property )?
//! or       := and ( "||" and )*
//! and      := unary ( "&&" unary )*
//! unary    := "!" unary | "(" property ")" | atom
//! atom     := "out" "[" int "]" (">="|"<="|"=="|">"|"<") int
//!           | "in" "[" int "]" "==" (0|1)
//! ```

use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PropertyError {
    #[error("parse error at byte {at}: {msg}")]
    Parse { at: usize, msg: String },
    #[error("output index {0} out of range (model has {1} outputs)")]
    OutputIndex(usize, usize),
    #[error("input index {0} out of range (model has {1} inputs)")]
    InputIndex(usize, usize),
}

/// Comparison relation of an output-count atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Ge,
    Le,
    Eq,
    Gt,
    Lt,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Le => "<=",
            Relation::Eq => "==",
            Relation::Gt => ">",
            Relation::Lt => "<",
        }
    }

    pub fn holds(self, value: u32, bound: u32) -> bool {
        match self {
            Relation::Ge => value >= bound,
            Relation::Le => value <= bound,
            Relation::Eq => value == bound,
            Relation::Gt => value > bound,
            Relation::Lt => value < bound,
        }
    }
}

/// Property AST. Indices are 0-based here; the text format is 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Property {
    OutputAtom {
        index: usize,
        relation: Relation,
        bound: u32,
    },
    InputAtom {
        index: usize,
        bit: bool,
    },
    Not(Box<Property>),
    And(Box<Property>, Box<Property>),
    Or(Box<Property>, Box<Property>),
    Implies(Box<Property>, Box<Property>),
}

impl Property {
    pub fn output_atom(index: usize, relation: Relation, bound: u32) -> Property {
        Property::OutputAtom {
            index,
            relation,
            bound,
        }
    }

    pub fn input_atom(index: usize, bit: bool) -> Property {
        Property::InputAtom { index, bit }
    }

    pub fn not(p: Property) -> Property {
        Property::Not(Box::new(p))
    }

    pub fn and(a: Property, b: Property) -> Property {
        Property::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Property, b: Property) -> Property {
        Property::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Property, b: Property) -> Property {
        Property::Implies(Box::new(a), Box::new(b))
    }

    /// Conjunction of all given properties; `true`-like empty input is not
    /// allowed (callers always have at least one conjunct).
    pub fn all(mut parts: Vec<Property>) -> Property {
        let mut acc = parts.pop().expect("at least one conjunct");
        while let Some(p) = parts.pop() {
            acc = Property::and(p, acc);
        }
        acc
    }

    /// Check index bounds against a model shape.
    pub fn validate(&self, input_dim: usize, output_dim: usize) -> Result<(), PropertyError> {
        match self {
            Property::OutputAtom { index, .. } => {
                if *index >= output_dim {
                    return Err(PropertyError::OutputIndex(*index + 1, output_dim));
                }
            }
            Property::InputAtom { index, .. } => {
                if *index >= input_dim {
                    return Err(PropertyError::InputIndex(*index + 1, input_dim));
                }
            }
            Property::Not(a) => a.validate(input_dim, output_dim)?,
            Property::And(a, b) | Property::Or(a, b) | Property::Implies(a, b) => {
                a.validate(input_dim, output_dim)?;
                b.validate(input_dim, output_dim)?;
            }
        }
        Ok(())
    }
}

/// Reference semantics; the oracle the circuit property module is tested
/// against and counterexamples are replayed through.
pub fn eval_property(
    property: &Property,
    input_bits: &[bool],
    output_counts: &[u32],
) -> Result<bool, PropertyError> {
    property.validate(input_bits.len(), output_counts.len())?;
    Ok(eval_unchecked(property, input_bits, output_counts))
}

fn eval_unchecked(property: &Property, inputs: &[bool], outputs: &[u32]) -> bool {
    match property {
        Property::OutputAtom {
            index,
            relation,
            bound,
        } => relation.holds(outputs[*index], *bound),
        Property::InputAtom { index, bit } => inputs[*index] == *bit,
        Property::Not(a) => !eval_unchecked(a, inputs, outputs),
        Property::And(a, b) => {
            eval_unchecked(a, inputs, outputs) && eval_unchecked(b, inputs, outputs)
        }
        Property::Or(a, b) => {
            eval_unchecked(a, inputs, outputs) || eval_unchecked(b, inputs, outputs)
        }
        Property::Implies(a, b) => {
            !eval_unchecked(a, inputs, outputs) || eval_unchecked(b, inputs, outputs)
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl Property {
    // Precedence: -> is 1 (right assoc), || is 2, && is 3, ! is 4.
    fn prec(&self) -> u8 {
        match self {
            Property::Implies(..) => 1,
            Property::Or(..) => 2,
            Property::And(..) => 3,
            Property::Not(..) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.prec();
        if prec < min {
            write!(f, "(")?;
        }
        match self {
            Property::OutputAtom {
                index,
                relation,
                bound,
            } => write!(f, "out[{}] {} {}", index + 1, relation.symbol(), bound)?,
            Property::InputAtom { index, bit } => {
                write!(f, "in[{}] == {}", index + 1, *bit as u8)?
            }
            Property::Not(a) => {
                write!(f, "!")?;
                a.fmt_prec(f, 5)?;
            }
            Property::And(a, b) => {
                a.fmt_prec(f, 3)?;
                write!(f, " && ")?;
                b.fmt_prec(f, 4)?;
            }
            Property::Or(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, " || ")?;
                b.fmt_prec(f, 3)?;
            }
            Property::Implies(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, " -> ")?;
                b.fmt_prec(f, 1)?;
            }
        }
        if prec < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

pub fn parse_property(text: &str) -> Result<Property, PropertyError> {
    let mut parser = Parser {
        bytes: text.as_bytes(),
        pos: 0,
    };
    let property = parser.implication()?;
    parser.skip_ws();
    if parser.pos != parser.bytes.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(property)
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: &str) -> PropertyError {
        PropertyError::Parse {
            at: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.bytes[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), PropertyError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{token}`")))
        }
    }

    fn number(&mut self) -> Result<u32, PropertyError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a number"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .unwrap()
            .parse()
            .map_err(|_| self.error("number out of range"))
    }

    fn implication(&mut self) -> Result<Property, PropertyError> {
        let lhs = self.disjunction()?;
        if self.eat("->") {
            let rhs = self.implication()?;
            return Ok(Property::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Property, PropertyError> {
        let mut lhs = self.conjunction()?;
        while self.eat("||") {
            let rhs = self.conjunction()?;
            lhs = Property::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Property, PropertyError> {
        let mut lhs = self.unary()?;
        while self.eat("&&") {
            let rhs = self.unary()?;
            lhs = Property::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Property, PropertyError> {
        if self.eat("!") {
            return Ok(Property::not(self.unary()?));
        }
        if self.eat("(") {
            let inner = self.implication()?;
            self.expect(")")?;
            return Ok(inner);
        }
        self.atom()
    }

    fn index(&mut self) -> Result<usize, PropertyError> {
        self.expect("[")?;
        let raw = self.number()?;
        self.expect("]")?;
        if raw == 0 {
            return Err(self.error("indices are 1-based"));
        }
        Ok(raw as usize - 1)
    }

    fn atom(&mut self) -> Result<Property, PropertyError> {
        if self.eat("out") {
            let index = self.index()?;
            // Longest symbols first so `>` does not shadow `>=`.
            let relation = if self.eat(">=") {
                Relation::Ge
            } else if self.eat("<=") {
                Relation::Le
            } else if self.eat("==") {
                Relation::Eq
            } else if self.eat(">") {
                Relation::Gt
            } else if self.eat("<") {
                Relation::Lt
            } else {
                return Err(self.error("expected a comparison operator"));
            };
            let bound = self.number()?;
            return Ok(Property::output_atom(index, relation, bound));
        }
        if self.eat("in") {
            let index = self.index()?;
            self.expect("==")?;
            let bit = match self.number()? {
                0 => false,
                1 => true,
                _ => return Err(self.error("input bit must be 0 or 1")),
            };
            return Ok(Property::input_atom(index, bit));
        }
        Err(self.error("expected an atom, `!` or `(`"))
    }
}
