use crate::mentions::tokenize;

pub const URL_TOKEN: &str = "URL";
pub const USER_TOKEN: &str = "USER";

fn is_handle_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_url(lower: &str) -> bool {
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

/// Collapses runs of more than three identical characters to three.
fn collapse_runs(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut prev = None;
    let mut run = 0;
    for c in s.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run <= 3 {
            out.push(c);
        }
    }
    out
}

fn push_plain(text: &str, out: &mut Vec<String>) {
    let lowered = collapse_runs(&text.to_lowercase());
    out.extend(tokenize(&lowered).texts().into_iter().map(str::to_string));
}

/// Tweet normalization: URLs become `URL`, @handles become `USER`, the `#`
/// of hashtags is dropped, text is lowercased, character runs longer than
/// three are cut to three, then the text is tokenized.
pub fn normalize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        if chunk == URL_TOKEN || chunk == USER_TOKEN {
            out.push(chunk.to_string());
            continue;
        }
        if is_url(&chunk.to_lowercase()) {
            out.push(URL_TOKEN.to_string());
            continue;
        }
        let mut rest = chunk;
        while let Some(after_at) = rest.strip_prefix('@') {
            let handle_len: usize = after_at
                .chars()
                .take_while(|&c| is_handle_char(c))
                .map(char::len_utf8)
                .sum();
            if handle_len == 0 {
                break;
            }
            out.push(USER_TOKEN.to_string());
            rest = &after_at[handle_len..];
        }
        push_plain(rest.trim_start_matches('#'), &mut out);
    }
    out
}
