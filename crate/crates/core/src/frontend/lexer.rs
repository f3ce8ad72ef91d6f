use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{FrontendError, Pos};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

// Longest first so that `<=` wins over `<`.
const PUNCTS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<=",
    ">=", "==", "!=", "&&", "||", "<<", ">>", "+", "-", "*", "/", "%", "<", ">", "=", "!", "(",
    ")", "{", "}", "[", "]", ";", ",", "&", "|", "^", "~", "?", ":", ".",
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, FrontendError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        ($n:expr) => {{
            for _ in 0..$n {
                if bytes[i] == b'\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < bytes.len() {
        let c = bytes[i];
        let pos = Pos { line, col };
        if c.is_ascii_whitespace() {
            bump!(1);
        } else if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                bump!(1);
            }
        } else if src[i..].starts_with("/*") {
            match src[i + 2..].find("*/") {
                Some(end) => bump!(end + 4),
                None => {
                    return Err(FrontendError::Syntax { pos, message: "unterminated comment".into() })
                }
            }
        } else if c == b'#' {
            return Err(FrontendError::Unsupported { pos, construct: "preprocessor directive" });
        } else if c == b'"' || c == b'\'' {
            return Err(FrontendError::Unsupported { pos, construct: "string or character literal" });
        } else if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.') {
                bump!(1);
            }
            out.push(Token { tok: Tok::Int(parse_int(&src[start..i], pos)?), pos });
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                bump!(1);
            }
            out.push(Token { tok: Tok::Ident(src[start..i].to_string()), pos });
        } else if let Some(p) = PUNCTS.iter().find(|p| src[i..].starts_with(**p)) {
            bump!(p.len());
            out.push(Token { tok: Tok::Punct(p), pos });
        } else {
            return Err(FrontendError::Syntax {
                pos,
                message: alloc::format!("unexpected character `{}`", src[i..].chars().next().unwrap()),
            });
        }
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}

fn parse_int(text: &str, pos: Pos) -> Result<i64, FrontendError> {
    let digits = text.trim_end_matches(['u', 'U', 'l', 'L']);
    if digits.contains('.') || digits.contains(['e', 'E']) && !digits.starts_with("0x") {
        return Err(FrontendError::Unsupported { pos, construct: "floating-point literal" });
    }
    let parsed = if let Some(hex) = digits.strip_prefix("0x").or_else(|| digits.strip_prefix("0X")) {
        i64::from_str_radix(hex, 16).ok()
    } else if digits.len() > 1 && digits.starts_with('0') {
        i64::from_str_radix(&digits[1..], 8).ok()
    } else {
        digits.parse::<i64>().ok()
    };
    parsed.ok_or_else(|| FrontendError::Syntax {
        pos,
        message: alloc::format!("invalid integer literal `{text}`"),
    })
}
