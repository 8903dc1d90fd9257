use super::{CircuitDesc, Condition, ControlSpec, GateDesc, GateKind, Operand, RegisterKind};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Sym(&'static str),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

const SYMBOLS: [&str; 9] = ["==", ">=", "[", "]", "(", ")", ",", ";", "!"];

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (line, column) = (ln + 1, i + 1);
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                out.push(Token {
                    tok: Tok::Ident(word),
                    line,
                    column,
                });
            } else if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' {
                let start = i;
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push(Token {
                    tok: Tok::Number(chars[start..i].iter().collect()),
                    line,
                    column,
                });
            } else {
                let rest: String = chars[i..].iter().take(2).collect();
                let sym = SYMBOLS
                    .iter()
                    .find(|s| rest.starts_with(**s))
                    .ok_or_else(|| Error::Parse {
                        line,
                        column,
                        message: format!("unexpected character `{c}`"),
                    })?;
                out.push(Token {
                    tok: Tok::Sym(sym),
                    line,
                    column,
                });
                i += sym.len();
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map_or(self.end, |t| (t.line, t.column))
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        let (line, column) = self.here();
        Err(Error::Parse {
            line,
            column,
            message: message.into(),
        })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<()> {
        if self.peek() == Some(&Tok::Sym(s)) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected `{s}`"))
        }
    }

    fn eat_sym(&mut self, s: &'static str) -> bool {
        if self.peek() == Some(&Tok::Sym(s)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.error("expected a name"),
        }
    }

    fn name(&mut self) -> Result<String> {
        if let Some(Tok::Ident(s)) = self.peek() {
            if super::KEYWORDS.contains(&s.as_str()) {
                return self.error(format!("`{s}` is a reserved word"));
            }
        }
        self.ident()
    }

    fn integer(&mut self) -> Result<usize> {
        match self.peek() {
            Some(Tok::Number(s)) => match s.parse::<usize>() {
                Ok(n) => {
                    self.pos += 1;
                    Ok(n)
                }
                Err(_) => self.error(format!("expected a non-negative integer, found `{s}`")),
            },
            _ => self.error("expected an integer"),
        }
    }

    fn number(&mut self) -> Result<f64> {
        match self.peek() {
            Some(Tok::Number(s)) => match s.parse::<f64>() {
                Ok(x) if x.is_finite() => {
                    self.pos += 1;
                    Ok(x)
                }
                _ => self.error(format!("invalid number `{s}`")),
            },
            _ => self.error("expected a number"),
        }
    }

    fn operand(&mut self) -> Result<Operand> {
        let register = self.name()?;
        let index = if self.eat_sym("[") {
            let i = self.integer()?;
            self.expect_sym("]")?;
            Some(i)
        } else {
            None
        };
        Ok(Operand { register, index })
    }

    fn control(&mut self) -> Result<ControlSpec> {
        if self.eat_sym("!") {
            let operand = self.operand()?;
            return Ok(ControlSpec {
                operand,
                condition: Condition::Zero,
            });
        }
        let operand = self.operand()?;
        let condition = if self.eat_sym("==") {
            if self.integer()? != 0 {
                return self.error("counter controls are `==0` or `>=1`");
            }
            Condition::CounterZero
        } else if self.eat_sym(">=") {
            if self.integer()? != 1 {
                return self.error("counter controls are `==0` or `>=1`");
            }
            Condition::CounterPositive
        } else {
            Condition::One
        };
        Ok(ControlSpec { operand, condition })
    }

    fn params(&mut self, n: usize) -> Result<Vec<f64>> {
        self.expect_sym("(")?;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                self.expect_sym(",")?;
            }
            out.push(self.number()?);
        }
        self.expect_sym(")")?;
        Ok(out)
    }

    fn kind(&mut self) -> Result<GateKind> {
        let word = self.ident()?;
        Ok(match word.as_str() {
            "h" => GateKind::H,
            "x" => GateKind::X,
            "z" => GateKind::Z,
            "cnot" => GateKind::Cnot,
            "ry" => GateKind::Ry(self.params(1)?[0]),
            "u2" => {
                let p = self.params(4)?;
                GateKind::U2([p[0], p[1], p[2], p[3]])
            }
            "inc_mod" => GateKind::IncMod,
            "zero_check" => GateKind::ZeroCheck,
            "reflect0" => GateKind::Reflect0,
            "call" => {
                let name = self.name()?;
                let dagger = self.peek() == Some(&Tok::Ident("dagger".into()));
                if dagger {
                    self.pos += 1;
                }
                GateKind::Call { name, dagger }
            }
            other => {
                self.pos -= 1;
                return self.error(format!("unknown gate `{other}`"));
            }
        })
    }
}

/// Parses circuit text; errors carry the line and column of the offending token.
pub fn parse(text: &str) -> Result<CircuitDesc> {
    let toks = lex(text)?;
    let end = (text.lines().count().max(1), text.lines().last().map_or(1, |l| l.len() + 1));
    let mut p = Parser { toks, pos: 0, end };
    let mut c = CircuitDesc::new();
    while p.peek().is_some() {
        let at = p.here();
        let relocate = |e: Error| match e {
            Error::Parse { .. } => e,
            other => Error::Parse {
                line: at.0,
                column: at.1,
                message: other.to_string(),
            },
        };
        match p.next() {
            Some(Tok::Ident(kw)) if kw == "qreg" || kw == "counter" => {
                let name = p.name()?;
                p.expect_sym("[")?;
                let n = p.integer()?;
                p.expect_sym("]")?;
                p.expect_sym(";")?;
                let kind = if kw == "qreg" {
                    RegisterKind::Qubits(n)
                } else {
                    RegisterKind::Counter(n)
                };
                c.declare(&name, kind).map_err(relocate)?;
            }
            Some(Tok::Ident(kw)) if kw == "gate" => {
                let kind = p.kind()?;
                let mut targets = vec![p.operand()?];
                while p.eat_sym(",") {
                    targets.push(p.operand()?);
                }
                let mut controls = Vec::new();
                if p.peek() == Some(&Tok::Ident("ctrl".into())) {
                    p.pos += 1;
                    controls.push(p.control()?);
                    while p.eat_sym(",") {
                        controls.push(p.control()?);
                    }
                }
                p.expect_sym(";")?;
                c.push(GateDesc {
                    kind,
                    targets,
                    controls,
                })
                .map_err(relocate)?;
            }
            _ => {
                p.pos -= 1;
                return p.error("expected `qreg`, `counter` or `gate`");
            }
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_gate_program() {
        let c = parse("qreg a[1]; gate x a[0];").unwrap();
        assert_eq!(c.registers().len(), 1);
        assert_eq!(c.gates().len(), 1);
        assert_eq!(c.gates()[0].kind, GateKind::X);
    }

    #[test]
    fn empty_gate_list() {
        let c = parse("# nothing but a register\nqreg a[2];\n").unwrap();
        assert!(c.gates().is_empty());
        assert!(parse("").unwrap().registers().is_empty());
    }

    #[test]
    fn full_syntax_round_trips() {
        let text = "\
qreg a[2];
qreg w[1];
counter b[8];
gate h a[0];
gate ry(-0.25) a[1];
gate u2(0.1, 2.5, -3, 1e-3) w[0] ctrl !a[1];
gate cnot a[0], w[0];
gate inc_mod b ctrl !a[0];
gate zero_check b, w[0];
gate reflect0 a ctrl b>=1;
gate call V dagger a, w ctrl b==0;
gate call V a, w;
";
        let c = parse(text).unwrap();
        assert_eq!(c.gates().len(), 9);
        assert_eq!(parse(&c.serialize()).unwrap(), c);
        assert_eq!(c.call_counts("V"), (1, 1));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("qreg a[1];\ngate x b[0];").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, column: 1, .. }), "{e:?}");
        let e = parse("qreg a[1];\ngate x a[0]").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e:?}");
        let e = parse("qreg a[1]; gate frob a[0];").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, column: 17, .. }), "{e:?}");
        let e = parse("counter b[4]; gate h b;").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        let e = parse("counter b[4]; qreg a[1]; gate x a[0] ctrl b>=2;").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        let e = parse("qreg gate[1];").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        let e = parse("qreg a[1]; gate x a[0]; @").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, column: 25, .. }), "{e:?}");
    }
}
