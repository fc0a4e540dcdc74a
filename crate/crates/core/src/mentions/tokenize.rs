/// Emoticons kept as single tokens. Longest entries first so that `:-)`
/// wins over `:-`.
pub const EMOTICONS: &[&str] = &[
    "^_^", ":-)", ":-(", ":-D", ":-d", ":-P", ":-p", ":-/", ":-*", ";-)", ":'(", "-_-", ":)",
    ":(", ":D", ":d", ":P", ":p", ";)", ";D", ";d", ":/", ":O", ":o", ":|", ":*", ":]", ":[",
    "=)", "=(", "<3", "^^",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

/// Tokens of a string together with the string they were cut from.
#[derive(Debug, Clone)]
pub struct TokenizedText<'a> {
    original: &'a str,
    tokens: Vec<Token<'a>>,
}

impl<'a> TokenizedText<'a> {
    pub fn original(&self) -> &'a str {
        self.original
    }

    pub fn tokens(&self) -> &[Token<'a>] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> Vec<&'a str> {
        self.tokens.iter().map(|t| t.text).collect()
    }

    /// Lowercased owned token strings.
    pub fn terms(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.to_lowercase()).collect()
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || ('\u{0300}'..='\u{036F}').contains(&c)
}

fn emoticon_at(text: &str, at: usize) -> Option<usize> {
    let prev_ok = text[..at]
        .chars()
        .next_back()
        .is_none_or(|p| p.is_whitespace() || is_word_char(p));
    if !prev_ok {
        return None;
    }
    let rest = &text[at..];
    EMOTICONS.iter().find_map(|e| {
        let tail = rest.strip_prefix(e)?;
        let next_ok = tail
            .chars()
            .next()
            .is_none_or(|n| n.is_whitespace() || matches!(n, '.' | ',' | '!' | '?'));
        next_ok.then_some(e.len())
    })
}

/// Splits text into maximal letter/digit runs and listed emoticons. All
/// other characters delimit tokens and are dropped.
pub fn tokenize(text: &str) -> TokenizedText<'_> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if is_word_char(c) {
            let mut end = i + c.len_utf8();
            chars.next();
            while let Some(&(j, d)) = chars.peek() {
                if !is_word_char(d) {
                    break;
                }
                end = j + d.len_utf8();
                chars.next();
            }
            tokens.push(Token { text: &text[i..end], start: i, end });
        } else if let Some(len) = emoticon_at(text, i) {
            tokens.push(Token { text: &text[i..i + len], start: i, end: i + len });
            while chars.peek().is_some_and(|&(j, _)| j < i + len) {
                chars.next();
            }
        } else {
            chars.next();
        }
    }
    TokenizedText { original: text, tokens }
}
