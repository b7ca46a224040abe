use super::SqlError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum LexKind {
    Ident(String),
    Number(String),
    /// Quoted string with its unescaped content and the quote character used.
    Str { content: String, quote: char },
    Punct(&'static str),
    Other(char),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Lexeme {
    pub kind: LexKind,
    pub offset: usize,
    pub end: usize,
}

impl Lexeme {
    pub fn describe(&self) -> String {
        match &self.kind {
            LexKind::Ident(s) | LexKind::Number(s) => s.clone(),
            LexKind::Str { content, quote } => format!("{quote}{content}{quote}"),
            LexKind::Punct(p) => (*p).to_string(),
            LexKind::Other(c) => c.to_string(),
        }
    }
}

const PUNCT: &[&str] = &[
    "<=", ">=", "!=", "<>", ",", "(", ")", ".", "*", "=", "<", ">", "-", "+", ";", "/",
];

pub(crate) fn lex(text: &str) -> Result<Vec<Lexeme>, SqlError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = text[i..].chars().next().expect("char boundary");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        let start = i;
        if c == '"' || c == '\'' {
            let (content, next) = lex_quoted(text, i, c)?;
            i = next;
            out.push(Lexeme { kind: LexKind::Str { content, quote: c }, offset: start, end: i });
        } else if c.is_ascii_digit() {
            i = scan_number(bytes, i);
            out.push(Lexeme { kind: LexKind::Number(text[start..i].to_string()), offset: start, end: i });
        } else if c.is_alphabetic() || c == '_' {
            while i < bytes.len() {
                let d = text[i..].chars().next().expect("char boundary");
                if d.is_alphanumeric() || d == '_' {
                    i += d.len_utf8();
                } else {
                    break;
                }
            }
            out.push(Lexeme { kind: LexKind::Ident(text[start..i].to_string()), offset: start, end: i });
        } else if let Some(p) = PUNCT.iter().find(|p| text[i..].starts_with(**p)) {
            i += p.len();
            out.push(Lexeme { kind: LexKind::Punct(p), offset: start, end: i });
        } else {
            i += c.len_utf8();
            out.push(Lexeme { kind: LexKind::Other(c), offset: start, end: i });
        }
    }
    Ok(out)
}

/// A doubled quote character inside a literal stands for one quote.
fn lex_quoted(text: &str, start: usize, quote: char) -> Result<(String, usize), SqlError> {
    let mut content = String::new();
    let mut chars = text[start + 1..].char_indices().peekable();
    while let Some((j, ch)) = chars.next() {
        if ch == quote {
            if matches!(chars.peek(), Some((_, next)) if *next == quote) {
                chars.next();
                content.push(quote);
                continue;
            }
            return Ok((content, start + 1 + j + 1));
        }
        content.push(ch);
    }
    Err(SqlError::UnterminatedLiteral { offset: start })
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
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
    i
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubled_quote_escapes() {
        let lx = lex(r#"'it''s' "a""b""#).unwrap();
        assert_eq!(lx[0].kind, LexKind::Str { content: "it's".into(), quote: '\'' });
        assert_eq!(lx[1].kind, LexKind::Str { content: "a\"b".into(), quote: '"' });
    }

    #[test]
    fn numbers_keep_fraction_and_exponent() {
        let lx = lex("3.25 1e5 7.").unwrap();
        assert_eq!(lx[0].kind, LexKind::Number("3.25".into()));
        assert_eq!(lx[1].kind, LexKind::Number("1e5".into()));
        assert_eq!(lx[2].kind, LexKind::Number("7".into()));
        assert_eq!(lx[3].kind, LexKind::Punct("."));
    }

    #[test]
    fn unterminated_reports_opening_offset() {
        assert_eq!(lex("a = \"abc").unwrap_err(), SqlError::UnterminatedLiteral { offset: 4 });
    }

    #[test]
    fn two_char_operators_win() {
        let kinds: Vec<_> = lex("a<=b<>c").unwrap().into_iter().map(|l| l.kind).collect();
        assert_eq!(kinds[1], LexKind::Punct("<="));
        assert_eq!(kinds[3], LexKind::Punct("<>"));
    }
}
