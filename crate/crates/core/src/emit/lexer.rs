//! Line tokenizer shared by both script dialects.

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Word(String),
    Number(f64),
    Str(String),
    Punct(char),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    /// 1-based character column.
    pub column: usize,
    /// Source text, used to reject fractional integers.
    pub raw: String,
}

fn is_word_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

/// Splits one line into tokens, dropping whitespace and any `#` comment.
pub fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, expected: &str| ParseError {
        line: line_no,
        column: col,
        expected: expected.to_string(),
    };
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c == ' ' || c == '\t' || c == '\r' {
            i += 1;
        } else if c == '#' {
            break;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(err(chars.len() + 1, "closing `\"`")),
                    Some('"') => break,
                    Some('\\') => {
                        match chars.get(i + 1) {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            _ => return Err(err(i + 2, "escape `\\\"`, `\\\\` or `\\n`")),
                        }
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            let raw: String = chars[column - 1..i].iter().collect();
            out.push(Token {
                tok: Tok::Str(s),
                column,
                raw,
            });
        } else if c.is_ascii_digit()
            || ((c == '-' || c == '+' || c == '.')
                && chars
                    .get(i + 1)
                    .is_some_and(|d| d.is_ascii_digit() || *d == '.'))
        {
            let start = i;
            if c == '-' || c == '+' {
                i += 1;
            }
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if chars.get(i) == Some(&'.') {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if matches!(chars.get(i), Some('e') | Some('E')) {
                let mut j = i + 1;
                if matches!(chars.get(j), Some('-') | Some('+')) {
                    j += 1;
                }
                if chars.get(j).is_some_and(|d| d.is_ascii_digit()) {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let raw: String = chars[start..i].iter().collect();
            let value: f64 = raw.parse().map_err(|_| err(column, "number"))?;
            if chars.get(i).is_some_and(|d| is_word_char(*d) || *d == '.') {
                return Err(err(i + 1, "separator after number"));
            }
            out.push(Token {
                tok: Tok::Number(value),
                column,
                raw,
            });
        } else if is_word_start(c) {
            let start = i;
            while i < chars.len() && is_word_char(chars[i]) {
                i += 1;
            }
            let raw: String = chars[start..i].iter().collect();
            out.push(Token {
                tok: Tok::Word(raw.clone()),
                column,
                raw,
            });
        } else if matches!(c, '(' | ')' | ',' | '=') {
            out.push(Token {
                tok: Tok::Punct(c),
                column,
                raw: c.to_string(),
            });
            i += 1;
        } else {
            return Err(err(column, "keyword, number or string"));
        }
    }
    Ok(out)
}

/// Sequential reader over one line's tokens that produces positioned
/// `ParseError`s.
pub struct Cursor<'a> {
    tokens: &'a [Token],
    pos: usize,
    line: usize,
    end_column: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(tokens: &'a [Token], line: usize, line_len: usize) -> Self {
        Self {
            tokens,
            pos: 0,
            line,
            end_column: line_len + 1,
        }
    }

    pub fn error(&self, expected: impl Into<String>) -> ParseError {
        let column = self
            .tokens
            .get(self.pos)
            .map_or(self.end_column, |t| t.column);
        ParseError {
            line: self.line,
            column,
            expected: expected.into(),
        }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn next_if(&mut self, pred: impl FnOnce(&Tok) -> bool) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos)?;
        if pred(&t.tok) {
            self.pos += 1;
            Some(t)
        } else {
            None
        }
    }

    pub fn word(&mut self, w: &str) -> Result<(), ParseError> {
        self.next_if(|t| matches!(t, Tok::Word(x) if x == w))
            .map(|_| ())
            .ok_or_else(|| self.error(format!("`{w}`")))
    }

    /// Consumes one of `options`, returning its index.
    pub fn one_of(&mut self, options: &[&str]) -> Result<usize, ParseError> {
        if let Some(Tok::Word(x)) = self.peek() {
            if let Some(i) = options.iter().position(|o| o == x) {
                self.pos += 1;
                return Ok(i);
            }
        }
        let list: Vec<String> = options.iter().map(|o| format!("`{o}`")).collect();
        Err(self.error(format!("one of {}", list.join(", "))))
    }

    pub fn punct(&mut self, c: char) -> Result<(), ParseError> {
        self.next_if(|t| *t == Tok::Punct(c))
            .map(|_| ())
            .ok_or_else(|| self.error(format!("`{c}`")))
    }

    pub fn number(&mut self) -> Result<f64, ParseError> {
        match self.next_if(|t| matches!(t, Tok::Number(_))) {
            Some(Token {
                tok: Tok::Number(n),
                ..
            }) => Ok(*n),
            _ => Err(self.error("number")),
        }
    }

    pub fn integer(&mut self) -> Result<i64, ParseError> {
        let err = self.error("integer");
        match self.next_if(|t| matches!(t, Tok::Number(_))) {
            Some(t) => {
                let digits = t.raw.trim_start_matches(['+', '-']);
                if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
                    return Err(err);
                }
                t.raw.trim_start_matches('+').parse().map_err(|_| err)
            }
            None => Err(err),
        }
    }

    pub fn string(&mut self) -> Result<String, ParseError> {
        match self.next_if(|t| matches!(t, Tok::Str(_))) {
            Some(Token {
                tok: Tok::Str(s), ..
            }) => Ok(s.clone()),
            _ => Err(self.error("quoted string")),
        }
    }

    /// `name = ` prefix of a keyword argument.
    pub fn key(&mut self, name: &str) -> Result<(), ParseError> {
        self.word(name)?;
        self.punct('=')
    }

    pub fn end(&self) -> Result<(), ParseError> {
        if self.pos == self.tokens.len() {
            Ok(())
        } else {
            Err(self.error("end of line"))
        }
    }
}

/// Quotes `s`, escaping `"`, `\` and newlines.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
