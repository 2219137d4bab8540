use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Number(f64),
    Ident(String),
    /// `[...]` contents; measure names or qualified column names.
    Bracket(String),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Number(n) => format!("number {n}"),
            Tok::Ident(s) => format!("identifier {s}"),
            Tok::Bracket(s) => format!("[{s}]"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Eof => "end of input".into(),
            other => format!("'{}'", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Eq => "=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            _ => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    /// Byte offsets into the source.
    pub start: usize,
    pub end: usize,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let single = |t: Tok| (t, start + 1);
        let (tok, end) = match c {
            b'(' => single(Tok::LParen),
            b')' => single(Tok::RParen),
            b'{' => single(Tok::LBrace),
            b'}' => single(Tok::RBrace),
            b',' => single(Tok::Comma),
            b'+' => single(Tok::Plus),
            b'-' => single(Tok::Minus),
            b'*' => single(Tok::Star),
            b'/' => single(Tok::Slash),
            b'=' => single(Tok::Eq),
            b'<' if bytes.get(i + 1) == Some(&b'=') => (Tok::Le, i + 2),
            b'<' => single(Tok::Lt),
            b'>' if bytes.get(i + 1) == Some(&b'=') => (Tok::Ge, i + 2),
            b'>' => single(Tok::Gt),
            b'[' => {
                let close = src[i + 1..].find(']').ok_or_else(|| ParseError::Syntax {
                    position: i,
                    expected: vec!["']'".into()],
                    found: "end of input".into(),
                })?;
                let name = &src[i + 1..i + 1 + close];
                if name.trim().is_empty() || name.contains('[') {
                    return Err(ParseError::Syntax {
                        position: i + 1,
                        expected: vec!["name".into()],
                        found: format!("{name:?}"),
                    });
                }
                (Tok::Bracket(name.to_string()), i + close + 2)
            }
            b'"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match src[j..].find('"') {
                        None => {
                            return Err(ParseError::Syntax {
                                position: i,
                                expected: vec!["closing '\"'".into()],
                                found: "end of input".into(),
                            })
                        }
                        Some(k) => {
                            s.push_str(&src[j..j + k]);
                            j += k + 1;
                            if bytes.get(j) == Some(&b'"') {
                                s.push('"');
                                j += 1;
                            } else {
                                break;
                            }
                        }
                    }
                }
                (Tok::Str(s), j)
            }
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'.' {
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text = &src[i..j];
                let n: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    position: i,
                    expected: vec!["number".into()],
                    found: format!("{text:?}"),
                })?;
                (Tok::Number(n), j)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                (Tok::Ident(src[i..j].to_string()), j)
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    position: i,
                    expected: vec!["expression".into()],
                    found: format!("character {ch:?}"),
                });
            }
        };
        out.push(Token { tok, start, end });
        i = end;
    }
    out.push(Token { tok: Tok::Eof, start: src.len(), end: src.len() });
    Ok(out)
}
