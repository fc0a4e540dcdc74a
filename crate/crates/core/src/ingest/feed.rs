//! RSS 2.0 and Atom parsing.

use chrono::{DateTime, Utc};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{timestamp, Document, Source};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedItem {
    pub title: String,
    pub link: String,
    pub published: Option<DateTime<Utc>>,
    pub summary: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Rss,
    Atom,
}

impl Kind {
    fn item_tag(self) -> &'static [u8] {
        match self {
            Kind::Rss => b"item",
            Kind::Atom => b"entry",
        }
    }
}

#[derive(Default)]
struct Partial {
    title: String,
    link: Option<String>,
    published: Option<DateTime<Utc>>,
    summary: Option<String>,
    /// Atom `<content>` is used only when there is no `<summary>`.
    content: Option<String>,
}

impl Partial {
    fn finish(self) -> Option<FeedItem> {
        let link = self.link.filter(|l| !l.trim().is_empty())?;
        let summary = self
            .summary
            .or(self.content)
            .map(|s| strip_markup(&s))
            .filter(|s| !s.is_empty());
        let title = strip_markup(&self.title);
        if title.is_empty() && summary.is_none() {
            return None;
        }
        Some(FeedItem { title, link: link.trim().to_string(), published: self.published, summary })
    }
}

/// Drops anything between `<` and `>` and collapses whitespace. Feed
/// descriptions routinely carry escaped HTML.
fn strip_markup(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_tag = false;
    for c in s.chars() {
        match c {
            '<' => {
                in_tag = true;
                out.push(' ');
            }
            '>' if in_tag => in_tag = false,
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn parse_date(kind: Kind, s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    let parsed = match kind {
        Kind::Rss => DateTime::parse_from_rfc2822(s).or_else(|_| DateTime::parse_from_rfc3339(s)),
        Kind::Atom => DateTime::parse_from_rfc3339(s),
    };
    parsed.ok().map(|d| timestamp::truncate(d.with_timezone(&Utc)))
}

fn xml_err(offset: u64, message: impl ToString) -> Error {
    Error::Xml { offset, message: message.to_string() }
}

fn atom_link(e: &BytesStart) -> Option<String> {
    let mut href = None;
    let mut rel = None;
    for attr in e.attributes().flatten() {
        let value = attr.unescape_value().ok()?.into_owned();
        match attr.key.local_name().as_ref() {
            b"href" => href = Some(value),
            b"rel" => rel = Some(value),
            _ => {}
        }
    }
    match rel.as_deref() {
        None | Some("alternate") => href,
        _ => None,
    }
}

/// Parses an RSS 2.0 or Atom document. Unknown elements are ignored and
/// items without a link are dropped.
pub fn parse_feed(xml: &[u8]) -> Result<Vec<FeedItem>> {
    let mut reader = Reader::from_reader(xml);
    let mut kind = None;
    let mut stack: Vec<Vec<u8>> = Vec::new();
    // depth of the open item element within `stack`
    let mut item: Option<(usize, Partial)> = None;
    let mut text = String::new();
    let mut items = Vec::new();

    loop {
        let event = reader
            .read_event()
            .map_err(|e| xml_err(reader.error_position(), e))?;
        match event {
            Event::Start(e) => {
                let name = e.local_name().as_ref().to_vec();
                if stack.is_empty() {
                    if kind.is_some() {
                        return Err(xml_err(reader.buffer_position(), "multiple root elements"));
                    }
                    kind = Some(match name.as_slice() {
                        b"rss" => Kind::Rss,
                        b"feed" => Kind::Atom,
                        other => {
                            return Err(Error::FeedFormat(format!(
                                "root element `{}`",
                                String::from_utf8_lossy(other)
                            )))
                        }
                    });
                }
                let k = kind.expect("root seen");
                if item.is_none() && name == k.item_tag() {
                    item = Some((stack.len(), Partial::default()));
                } else if let (Some((depth, partial)), Kind::Atom, b"link") = (&mut item, k, name.as_slice()) {
                    if stack.len() == *depth + 1 && partial.link.is_none() {
                        partial.link = atom_link(&e);
                    }
                }
                if item.as_ref().is_some_and(|(depth, _)| stack.len() == depth + 1) {
                    text.clear();
                }
                stack.push(name);
            }
            Event::Empty(e) => {
                if stack.is_empty() {
                    return Err(Error::FeedFormat(format!(
                        "root element `{}` is empty",
                        String::from_utf8_lossy(e.local_name().as_ref())
                    )));
                }
                if let (Some((depth, partial)), Some(Kind::Atom)) = (&mut item, kind) {
                    if e.local_name().as_ref() == b"link" && stack.len() == *depth + 1 && partial.link.is_none() {
                        partial.link = atom_link(&e);
                    }
                }
            }
            Event::Text(t) => {
                if stack.is_empty() {
                    if !t.iter().all(u8::is_ascii_whitespace) {
                        return Err(xml_err(reader.buffer_position(), "text outside the root element"));
                    }
                    continue;
                }
                let decoded = std::str::from_utf8(&t).map_err(|e| xml_err(reader.buffer_position(), e))?;
                match quick_xml::escape::unescape(decoded) {
                    Ok(s) => text.push_str(&s),
                    Err(_) => text.push_str(decoded),
                }
            }
            Event::CData(c) => {
                let decoded = c.decode().map_err(|e| xml_err(reader.buffer_position(), e))?;
                text.push_str(&decoded);
            }
            Event::End(e) => {
                let name = stack
                    .pop()
                    .ok_or_else(|| xml_err(reader.buffer_position(), "unexpected closing tag"))?;
                debug_assert_eq!(name.as_slice(), e.local_name().as_ref());
                let k = kind.expect("root seen");
                let Some((depth, partial)) = &mut item else { continue };
                if stack.len() == *depth {
                    let (_, done) = item.take().expect("item open");
                    items.extend(done.finish());
                } else if stack.len() == *depth + 1 {
                    let value = std::mem::take(&mut text);
                    match (k, name.as_slice()) {
                        (_, b"title") => partial.title = value,
                        (Kind::Rss, b"link") => partial.link = Some(value),
                        (Kind::Rss, b"description") | (Kind::Atom, b"summary") => partial.summary = Some(value),
                        (Kind::Atom, b"content") => partial.content = Some(value),
                        (Kind::Rss, b"pubDate") | (Kind::Atom, b"published") => {
                            partial.published = parse_date(k, &value).or(partial.published)
                        }
                        (Kind::Atom, b"updated") if partial.published.is_none() => {
                            partial.published = parse_date(k, &value)
                        }
                        _ => {}
                    }
                }
            }
            Event::Eof => break,
            Event::Decl(_) | Event::PI(_) | Event::Comment(_) | Event::DocType(_) => {}
        }
    }

    if !stack.is_empty() {
        let open = String::from_utf8_lossy(stack.last().expect("non-empty")).into_owned();
        return Err(xml_err(reader.buffer_position(), format!("unclosed element `{open}`")));
    }
    if kind.is_none() {
        return Err(xml_err(reader.buffer_position(), "no root element"));
    }
    Ok(items)
}

/// Document id for a feed link: the first 16 bytes of its SHA-256, in hex.
pub fn link_id(link: &str) -> String {
    let digest = Sha256::digest(link.trim().as_bytes());
    hex::encode(&digest[..16])
}

/// `now` is used when the item carries no publication date.
pub fn feed_item_to_document(item: &FeedItem, source: Source, now: DateTime<Utc>) -> Document {
    let text = match (item.title.is_empty(), &item.summary) {
        (false, Some(s)) => format!("{}\n\n{}", item.title, s),
        (true, Some(s)) => s.clone(),
        (_, None) => item.title.clone(),
    };
    let mut doc = Document::new(
        link_id(&item.link),
        source,
        item.published.unwrap_or_else(|| timestamp::truncate(now)),
        text,
    );
    doc.url = Some(item.link.clone());
    doc
}
