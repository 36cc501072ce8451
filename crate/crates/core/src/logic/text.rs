//! Textual syntax: `pred(c1,c2)` facts with lowercase constants, uppercase
//! variables, `!pred(...)` negated literals and comma-separated
//! conjunctions (`true` for the empty one).

use super::{ArgMode, Atom, Conjunction, GroundAtom, Literal, ModeDecl, ParseError, State, Symbol, Term};

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor { src, pos: 0 }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, want: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(want) {
            self.pos += want.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, want: char) -> Result<(), String> {
        if self.eat(want) {
            Ok(())
        } else {
            Err(format!("expected `{want}` at offset {} in `{}`", self.pos, self.src))
        }
    }

    fn ident(&mut self) -> Result<&'a str, String> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        if self.pos == start {
            return Err(format!("expected identifier at offset {start} in `{}`", self.src));
        }
        Ok(&self.src[start..self.pos])
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos == self.src.len()
    }

    fn finish(&mut self) -> Result<(), String> {
        if self.at_end() {
            Ok(())
        } else {
            Err(format!("trailing input at offset {} in `{}`", self.pos, self.src))
        }
    }
}

fn is_var_name(name: &str) -> bool {
    name.chars()
        .next()
        .is_some_and(|c| c.is_uppercase() || c == '_')
}

fn term(name: &str) -> Term {
    if is_var_name(name) {
        Term::var(name)
    } else {
        Term::constant(name)
    }
}

fn atom(cur: &mut Cursor<'_>) -> Result<Atom, String> {
    let pred = cur.ident()?;
    let mut args = Vec::new();
    if cur.eat('(') {
        if !cur.eat(')') {
            loop {
                args.push(term(cur.ident()?));
                if cur.eat(')') {
                    break;
                }
                cur.expect(',')?;
            }
        }
    }
    Ok(Atom::new(pred, args))
}

fn literal(cur: &mut Cursor<'_>) -> Result<Literal, String> {
    let negated = cur.eat('!');
    Ok(Literal {
        atom: atom(cur)?,
        negated,
    })
}

fn err(line: usize, message: String) -> ParseError {
    ParseError { line, message }
}

pub fn parse_atom(src: &str) -> Result<Atom, ParseError> {
    let mut cur = Cursor::new(src);
    let a = atom(&mut cur).map_err(|m| err(1, m))?;
    cur.finish().map_err(|m| err(1, m))?;
    Ok(a)
}

pub fn parse_ground_atom(src: &str) -> Result<GroundAtom, ParseError> {
    parse_atom(src)?
        .to_ground()
        .ok_or_else(|| err(1, format!("`{src}` is not ground")))
}

pub fn parse_literal(src: &str) -> Result<Literal, ParseError> {
    let mut cur = Cursor::new(src);
    let l = literal(&mut cur).map_err(|m| err(1, m))?;
    cur.finish().map_err(|m| err(1, m))?;
    Ok(l)
}

pub fn parse_conjunction(src: &str) -> Result<Conjunction, ParseError> {
    if src.trim() == "true" {
        return Ok(Conjunction::default());
    }
    let mut cur = Cursor::new(src);
    let mut literals = vec![literal(&mut cur).map_err(|m| err(1, m))?];
    while !cur.at_end() {
        cur.expect(',').map_err(|m| err(1, m))?;
        literals.push(literal(&mut cur).map_err(|m| err(1, m))?);
    }
    Ok(Conjunction::new(literals))
}

/// One ground fact per line; blank lines and `#` comments are skipped.
pub fn parse_state(src: &str) -> Result<State, ParseError> {
    let mut state = State::new();
    for (i, line) in src.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fact = parse_ground_atom(line).map_err(|e| err(i + 1, e.message))?;
        state.insert(fact);
    }
    Ok(state)
}

/// `pred(+type,-type,#type)`: input, output and constant arguments.
pub fn parse_mode(src: &str) -> Result<ModeDecl, ParseError> {
    let mut cur = Cursor::new(src);
    let inner = |cur: &mut Cursor<'_>| -> Result<ModeDecl, String> {
        let pred = cur.ident()?;
        let mut args = Vec::new();
        if cur.eat('(') && !cur.eat(')') {
            loop {
                cur.skip_ws();
                let kind = cur.peek().ok_or("unexpected end of mode")?;
                cur.pos += kind.len_utf8();
                let ty = Symbol::intern(cur.ident()?);
                args.push(match kind {
                    '+' => ArgMode::Input(ty),
                    '-' => ArgMode::Output(ty),
                    '#' => ArgMode::Const(ty),
                    other => return Err(format!("unknown mode marker `{other}`")),
                });
                if cur.eat(')') {
                    break;
                }
                cur.expect(',')?;
            }
        }
        cur.finish()?;
        Ok(ModeDecl {
            pred: Symbol::intern(pred),
            args,
        })
    };
    inner(&mut cur).map_err(|m| err(1, m))
}
