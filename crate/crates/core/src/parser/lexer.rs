use super::{ParseError, Pos};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Int(i64),
    Str(String),
    Ident(String),
    Kw(Kw),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kw {
    Let,
    In,
    Val,
    Mixin,
    Fun,
    If,
    Then,
    Else,
    True,
    False,
    Close,
    Rename,
    Hide,
    Freeze,
    Order,
    Trigger,
    Mod,
}

impl Kw {
    fn from_word(word: &str) -> Option<Kw> {
        Some(match word {
            "let" => Kw::Let,
            "in" => Kw::In,
            "val" => Kw::Val,
            "mixin" => Kw::Mixin,
            "fun" => Kw::Fun,
            "if" => Kw::If,
            "then" => Kw::Then,
            "else" => Kw::Else,
            "true" => Kw::True,
            "false" => Kw::False,
            "close" => Kw::Close,
            "rename" => Kw::Rename,
            "hide" => Kw::Hide,
            "freeze" => Kw::Freeze,
            "order" => Kw::Order,
            "trigger" => Kw::Trigger,
            "mod" => Kw::Mod,
            _ => return None,
        })
    }
}

const SYMBOLS: [&str; 28] = [
    "|->", "->", "<-", "<=", ">=", "<>", ":=", "&&", "||", "(", ")", "[", "]", "{", "}", ",",
    ";", ".", ":", "=", "<", ">", "+", "-", "*", "/", "^", "!",
];

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let (mut line, mut col) = (1usize, 1usize);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            let mut depth = 0;
            loop {
                if i >= chars.len() {
                    return Err(ParseError::syntax(pos, "unterminated comment"));
                }
                if chars[i] == '(' && chars.get(i + 1) == Some(&'*') {
                    depth += 1;
                    bump!();
                    bump!();
                } else if chars[i] == '*' && chars.get(i + 1) == Some(&')') {
                    depth -= 1;
                    bump!();
                    bump!();
                    if depth == 0 {
                        break;
                    }
                } else {
                    bump!();
                }
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let n = text
                .parse()
                .map_err(|_| ParseError::syntax(pos, format!("integer literal {text} out of range")))?;
            out.push((Tok::Int(n), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
            {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match Kw::from_word(&word) {
                Some(kw) => Tok::Kw(kw),
                None => Tok::Ident(word),
            };
            out.push((tok, pos));
            continue;
        }
        if c == '"' {
            bump!();
            let mut text = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(ParseError::syntax(pos, "unterminated string")),
                    Some('"') => {
                        bump!();
                        break;
                    }
                    Some('\\') => {
                        bump!();
                        let esc = match chars.get(i) {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('"') => '"',
                            Some('\\') => '\\',
                            _ => return Err(ParseError::syntax(pos, "bad escape in string")),
                        };
                        text.push(esc);
                        bump!();
                    }
                    Some(&ch) => {
                        text.push(ch);
                        bump!();
                    }
                }
            }
            out.push((Tok::Str(text), pos));
            continue;
        }
        // Unicode spellings used in the literature.
        match c {
            '↦' | '→' => {
                bump!();
                out.push((Tok::Sym("->"), pos));
                continue;
            }
            '←' => {
                bump!();
                out.push((Tok::Sym("<-"), pos));
                continue;
            }
            _ => {}
        }
        let rest: String = chars[i..(i + 3).min(chars.len())].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(sym) => {
                for _ in 0..sym.chars().count() {
                    bump!();
                }
                let sym = if *sym == "|->" { "->" } else { sym };
                out.push((Tok::Sym(sym), pos));
            }
            None => return Err(ParseError::syntax(pos, format!("unexpected character {c:?}"))),
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}
