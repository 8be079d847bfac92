use super::ast::Span;
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    /// Decimal integer literal, kept as text until the parser sizes it.
    Number(String),
    /// `0x`-prefixed literal (digits only, prefix stripped).
    Hex(String),
    Str(String),
    /// Punctuation and operators, including ones the dialect rejects.
    Punct(&'static str),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Hex(h) => format!("hex literal `0x{h}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

// Longest first so that multi-character operators win.
const PUNCTS: &[&str] = &[
    "=>", "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "**", "<<", ">>", "{", "}", "(", ")",
    "[", "]", ";", ",", ".", "=", "<", ">", "!", "+", "-", "*", "/", "%", "&", "|", "^", "~", "?", ":",
];

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    rest: &'a str,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor {
            chars: src.chars().peekable(),
            rest: src,
            line: 1,
            column: 1,
        }
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.column)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        self.rest = &self.rest[c.len_utf8()..];
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor::new(src);
    let mut out = Vec::new();
    loop {
        skip_trivia(&mut cur)?;
        let span = cur.span();
        let Some(c) = cur.peek() else {
            out.push(Token { tok: Tok::Eof, span });
            return Ok(out);
        };
        let tok = if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let mut word = String::new();
            while let Some(c) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' || c == '$' {
                    word.push(c);
                    cur.bump();
                } else {
                    break;
                }
            }
            Tok::Ident(word)
        } else if c.is_ascii_digit() {
            lex_number(&mut cur, span)?
        } else if c == '"' || c == '\'' {
            lex_string(&mut cur, span)?
        } else if let Some(p) = PUNCTS.iter().find(|p| cur.rest.starts_with(**p)) {
            for _ in 0..p.len() {
                cur.bump();
            }
            Tok::Punct(p)
        } else {
            return Err(ParseError::syntax(
                span,
                "a token",
                format!("unexpected character `{c}`"),
            ));
        };
        out.push(Token { tok, span });
    }
}

fn skip_trivia(cur: &mut Cursor<'_>) -> Result<(), ParseError> {
    loop {
        match cur.peek() {
            Some(c) if c.is_whitespace() => {
                cur.bump();
            }
            Some('/') if cur.rest.starts_with("//") => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            }
            Some('/') if cur.rest.starts_with("/*") => {
                let start = cur.span();
                cur.bump();
                cur.bump();
                loop {
                    if cur.rest.starts_with("*/") {
                        cur.bump();
                        cur.bump();
                        break;
                    }
                    if cur.bump().is_none() {
                        return Err(ParseError::syntax(
                            start,
                            "`*/`",
                            "unterminated block comment".to_string(),
                        ));
                    }
                }
            }
            _ => return Ok(()),
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>, span: Span) -> Result<Tok, ParseError> {
    if cur.rest.starts_with("0x") || cur.rest.starts_with("0X") {
        cur.bump();
        cur.bump();
        let mut digits = String::new();
        while let Some(c) = cur.peek() {
            if c.is_ascii_hexdigit() {
                digits.push(c.to_ascii_lowercase());
                cur.bump();
            } else {
                break;
            }
        }
        if digits.is_empty() {
            return Err(ParseError::syntax(span, "hex digits", "empty hex literal".to_string()));
        }
        return Ok(Tok::Hex(digits));
    }
    let mut digits = String::new();
    while let Some(c) = cur.peek() {
        if c.is_ascii_digit() {
            digits.push(c);
            cur.bump();
        } else {
            break;
        }
    }
    Ok(Tok::Number(digits))
}

fn lex_string(cur: &mut Cursor<'_>, span: Span) -> Result<Tok, ParseError> {
    let quote = cur.bump().expect("caller peeked a quote");
    let mut value = String::new();
    loop {
        match cur.bump() {
            None | Some('\n') => {
                return Err(ParseError::syntax(
                    span,
                    "closing quote",
                    "unterminated string literal".to_string(),
                ))
            }
            Some(c) if c == quote => return Ok(Tok::Str(value)),
            Some('\\') => {
                let esc = cur.bump();
                value.push(match esc {
                    Some('n') => '\n',
                    Some('t') => '\t',
                    Some('r') => '\r',
                    Some('0') => '\0',
                    Some(c @ ('\\' | '"' | '\'')) => c,
                    other => {
                        return Err(ParseError::unsupported(
                            span,
                            format!("string escape `\\{}`", other.unwrap_or(' ')),
                        ))
                    }
                });
            }
            Some(c) => value.push(c),
        }
    }
}
