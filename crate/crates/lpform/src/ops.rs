//! Arithmetic and comparison operators shared by every stage of the
//! pipeline. All arithmetic is signed 64-bit two's complement with
//! wrapping on overflow; division and modulo truncate toward zero.

use std::fmt;

use crate::fault::Fault;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    /// Unary negation.
    Neg,
}

impl ArithOp {
    pub fn arity(self) -> usize {
        match self {
            ArithOp::Neg => 1,
            _ => 2,
        }
    }

    /// The name used for the primitive in LP form and pseudo-assembly text.
    pub fn name(self) -> &'static str {
        match self {
            ArithOp::Add => "add",
            ArithOp::Sub => "sub",
            ArithOp::Mul => "mul",
            ArithOp::Div => "div",
            ArithOp::Mod => "mod",
            ArithOp::Neg => "negate",
        }
    }

    pub fn from_name(name: &str) -> Option<ArithOp> {
        Some(match name {
            "add" => ArithOp::Add,
            "sub" => ArithOp::Sub,
            "mul" => ArithOp::Mul,
            "div" => ArithOp::Div,
            "mod" => ArithOp::Mod,
            "negate" => ArithOp::Neg,
            _ => return None,
        })
    }

    /// The infix symbol used in three-address code text.
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Mod => "mod",
            ArithOp::Neg => "-",
        }
    }

    pub fn eval2(self, a: i64, b: i64) -> Result<i64, Fault> {
        Ok(match self {
            ArithOp::Add => a.wrapping_add(b),
            ArithOp::Sub => a.wrapping_sub(b),
            ArithOp::Mul => a.wrapping_mul(b),
            ArithOp::Div => {
                if b == 0 {
                    return Err(Fault::DivisionByZero);
                }
                a.wrapping_div(b)
            }
            ArithOp::Mod => {
                if b == 0 {
                    return Err(Fault::DivisionByZero);
                }
                a.wrapping_rem(b)
            }
            ArithOp::Neg => panic!("eval2 on unary operator"),
        })
    }

    pub fn eval1(self, a: i64) -> i64 {
        match self {
            ArithOp::Neg => a.wrapping_neg(),
            _ => panic!("eval1 on binary operator"),
        }
    }
}

impl fmt::Display for ArithOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<CmpOp> {
        Some(match s {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            "=" | "==" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            _ => return None,
        })
    }

    /// The comparison that holds exactly when `self` does not.
    pub fn complement(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Ge => CmpOp::Lt,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
        }
    }

    /// Signed comparison.
    pub fn eval(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// True for the distinguished state-threading variables introduced by the
/// translator (`st`, `st0`, `st1`, ...). These thread side-effect ordering
/// only and are not part of a function's source-level interface.
pub fn is_state_var(name: &str) -> bool {
    match name.strip_prefix("st") {
        Some(rest) => rest.chars().all(|c| c.is_ascii_digit()),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_involutive() {
        for c in [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne] {
            assert_eq!(c.complement().complement(), c);
            for a in -3..=3 {
                for b in -3..=3 {
                    assert_ne!(c.eval(a, b), c.complement().eval(a, b));
                }
            }
        }
    }

    #[test]
    fn truncating_division() {
        assert_eq!(ArithOp::Div.eval2(7, -2).unwrap(), -3);
        assert_eq!(ArithOp::Mod.eval2(3, -4).unwrap(), 3);
        assert_eq!(ArithOp::Mod.eval2(-7, 3).unwrap(), -1);
        assert!(ArithOp::Mod.eval2(1, 0).is_err());
    }

    #[test]
    fn state_var_names() {
        assert!(is_state_var("st"));
        assert!(is_state_var("st12"));
        assert!(!is_state_var("str"));
        assert!(!is_state_var("s"));
        assert!(!is_state_var("state"));
    }
}
