//! Markup stripping for documentation pages.
//!
//! Produces paragraph-separated plain text (blank line between blocks),
//! keeps `<pre>` content inside ``` fences so the segmenter can drop it, and
//! collects link targets in document order.

/// Elements whose content is never text.
const SKIP: &[&str] = &[
    "script", "style", "nav", "header", "footer", "head", "noscript", "svg", "template", "iframe",
    "aside", "form", "button", "select",
];
const BLOCK: &[&str] = &[
    "p", "div", "section", "article", "main", "h1", "h2", "h3", "h4", "h5", "h6", "li", "ul",
    "ol", "dl", "dt", "dd", "table", "tr", "td", "th", "blockquote", "br", "hr", "body", "figure",
    "figcaption", "caption", "details", "summary",
];

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExtractedPage {
    pub text: String,
    pub links: Vec<String>,
}

pub fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('&') {
        out.push_str(&rest[..i]);
        rest = &rest[i..];
        let end = rest[1..].find(|c: char| c == ';' || c == '&' || c.is_whitespace()).map(|e| e + 1);
        let decoded = match end {
            Some(e) if rest.as_bytes()[e] == b';' => {
                let name = &rest[1..e];
                let ch = match name {
                    "amp" => Some('&'),
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "quot" => Some('"'),
                    "apos" | "#39" => Some('\''),
                    "nbsp" => Some(' '),
                    "ndash" => Some('-'),
                    "mdash" => Some('-'),
                    "hellip" => Some('.'),
                    "copy" => Some('©'),
                    _ => name.strip_prefix('#').and_then(|n| {
                        let code = match n.strip_prefix(['x', 'X']) {
                            Some(hex) => u32::from_str_radix(hex, 16).ok(),
                            None => n.parse().ok(),
                        };
                        code.and_then(char::from_u32)
                    }),
                };
                ch.map(|c| (c, e + 1))
            }
            _ => None,
        };
        match decoded {
            Some((c, len)) => {
                out.push(c);
                rest = &rest[len..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

struct Tag<'a> {
    name: String,
    closing: bool,
    attrs: &'a str,
}

fn parse_tag(inner: &str) -> Tag<'_> {
    let inner = inner.trim();
    let (closing, inner) = match inner.strip_prefix('/') {
        Some(r) => (true, r.trim_start()),
        None => (false, inner),
    };
    let end = inner
        .find(|c: char| c.is_whitespace() || c == '/')
        .unwrap_or(inner.len());
    Tag {
        name: inner[..end].to_ascii_lowercase(),
        closing,
        attrs: &inner[end..],
    }
}

fn attr_value(attrs: &str, name: &str) -> Option<String> {
    let lower = attrs.to_ascii_lowercase();
    let mut from = 0;
    while let Some(pos) = lower[from..].find(name) {
        let start = from + pos;
        from = start + name.len();
        let before_ok = start == 0 || lower.as_bytes()[start - 1].is_ascii_whitespace();
        let rest = attrs[from..].trim_start();
        if !before_ok || !rest.starts_with('=') {
            continue;
        }
        let rest = rest[1..].trim_start();
        let value = match rest.chars().next() {
            Some(q @ ('"' | '\'')) => rest[1..].split(q).next().unwrap_or(""),
            _ => rest.split(|c: char| c.is_whitespace() || c == '>').next().unwrap_or(""),
        };
        return Some(decode_entities(value));
    }
    None
}

/// Strips markup from an HTML document. Non-HTML input is returned with
/// whitespace normalized per line.
pub fn extract(html: &str) -> ExtractedPage {
    let mut page = ExtractedPage::default();
    let mut out = String::new();
    let mut pre_depth = 0usize;
    let mut rest = html;
    let push_text = |out: &mut String, text: &str, pre: bool| {
        let decoded = decode_entities(text);
        if pre {
            out.push_str(&decoded);
            return;
        }
        for (i, word) in decoded.split_whitespace().enumerate() {
            let sep = i > 0 || decoded.starts_with(char::is_whitespace);
            if sep && !(out.is_empty() || out.ends_with([' ', '\n'])) {
                out.push(' ');
            }
            out.push_str(word);
        }
        if decoded.ends_with(char::is_whitespace) && !out.ends_with([' ', '\n']) && !out.is_empty() {
            out.push(' ');
        }
    };
    while !rest.is_empty() {
        let Some(lt) = rest.find('<') else {
            push_text(&mut out, rest, pre_depth > 0);
            break;
        };
        push_text(&mut out, &rest[..lt], pre_depth > 0);
        rest = &rest[lt..];
        if let Some(r) = rest.strip_prefix("<!--") {
            rest = r.find("-->").map(|e| &r[e + 3..]).unwrap_or("");
            continue;
        }
        let after = &rest[1..];
        if !(after.starts_with(['!', '?']) || after.trim_start_matches('/').starts_with(|c: char| c.is_ascii_alphabetic())) {
            // A stray `<` in text.
            let spaced = after.starts_with(char::is_whitespace);
            push_text(&mut out, if spaced { "< " } else { "<" }, pre_depth > 0);
            rest = after;
            continue;
        }
        let Some(gt) = rest.find('>') else {
            push_text(&mut out, rest, pre_depth > 0);
            break;
        };
        let inner = &rest[1..gt];
        rest = &rest[gt + 1..];
        if inner.starts_with('!') || inner.starts_with('?') {
            continue;
        }
        let tag = parse_tag(inner);
        if !tag.closing && SKIP.contains(&tag.name.as_str()) && !inner.trim_end().ends_with('/') {
            let close = format!("</{}", tag.name);
            let lower = rest.to_ascii_lowercase();
            rest = match lower.find(&close) {
                Some(i) => {
                    let after = &rest[i..];
                    after.find('>').map(|e| &after[e + 1..]).unwrap_or("")
                }
                None => "",
            };
            out.push_str("\n\n");
            continue;
        }
        match (tag.name.as_str(), tag.closing) {
            ("pre", false) => {
                pre_depth += 1;
                out.push_str("\n\n```\n");
            }
            ("pre", true) => {
                pre_depth = pre_depth.saturating_sub(1);
                if !out.ends_with('\n') {
                    out.push('\n');
                }
                out.push_str("```\n\n");
            }
            ("a", false) => {
                if let Some(href) = attr_value(tag.attrs, "href") {
                    if !href.is_empty() {
                        page.links.push(href);
                    }
                }
            }
            (name, _) if BLOCK.contains(&name) && pre_depth == 0 => out.push_str("\n\n"),
            _ => {}
        }
    }
    page.text = tidy(&out);
    page
}

/// Trims lines and collapses runs of blank lines to one.
fn tidy(text: &str) -> String {
    let mut lines: Vec<&str> = Vec::new();
    let mut in_fence = false;
    for raw in text.lines() {
        let line = if in_fence { raw.trim_end() } else { raw.trim() };
        if line.trim() == "```" {
            in_fence = !in_fence;
        }
        if line.is_empty() && lines.last().is_none_or(|l| l.is_empty()) {
            continue;
        }
        lines.push(line);
    }
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_markup_and_boilerplate() {
        let html = r#"<html><head><title>T</title><script>var x = "<p>";</script></head>
<body><nav><a href="/skip">Menu</a></nav>
<h1>Linear&nbsp;models</h1><p>Ridge regression adds an <b>L2</b> penalty.</p>
<p>See <a href="ridge.html#x">Ridge</a> &amp; <a href='lasso.html'>Lasso</a>.</p>
<pre>from sklearn import linear_model
  reg = linear_model.Ridge()</pre>
<footer>Copyright</footer></body></html>"#;
        let page = extract(html);
        assert_eq!(
            page.text,
            "Linear models\n\nRidge regression adds an L2 penalty.\n\nSee Ridge & Lasso.\n\n```\nfrom sklearn import linear_model\n  reg = linear_model.Ridge()\n```"
        );
        assert_eq!(page.links, vec!["ridge.html#x", "lasso.html"]);
    }

    #[test]
    fn entities() {
        assert_eq!(decode_entities("a &lt;b&gt; &#65;&#x42; &bogus; & c"), "a <b> AB &bogus; & c");
    }

    #[test]
    fn plain_text_passes_through() {
        assert_eq!(extract("just text\n\nmore").text, "just text more");
        assert_eq!(extract("").text, "");
    }

    #[test]
    fn comments_and_stray_brackets() {
        assert_eq!(extract("<p>a <!-- <p>hidden</p> --> b < c</p>").text, "a b < c");
    }
}
