use scraper::{ElementRef, Html, Node};

use super::CorpusError;

const SKIP_TAGS: &[&str] = &[
    "script", "style", "noscript", "nav", "header", "footer", "aside", "form", "svg", "iframe",
    "template", "button", "head", "select", "canvas", "object",
];

const BLOCK_TAGS: &[&str] = &[
    "address", "article", "blockquote", "body", "br", "dd", "details", "div", "dl", "dt",
    "figcaption", "figure", "h1", "h2", "h3", "h4", "h5", "h6", "hr", "html", "li", "main", "ol",
    "p", "pre", "section", "summary", "table", "tbody", "td", "th", "thead", "tr", "ul",
];

// Class fragments used by common site chrome (breadcrumbs, cookie banners,
// feedback widgets, skip links) that is not part of the page content.
const SKIP_CLASS_FRAGMENTS: &[&str] = &["breadcrumb", "cookie", "skip-link", "govuk-related", "feedback"];

fn skipped(el: &ElementRef<'_>) -> bool {
    let v = el.value();
    if SKIP_TAGS.contains(&v.name()) {
        return true;
    }
    if v.attr("hidden").is_some() || v.attr("aria-hidden") == Some("true") {
        return true;
    }
    if matches!(v.attr("role"), Some("navigation" | "banner" | "contentinfo")) {
        return true;
    }
    v.attr("class").is_some_and(|c| {
        let c = c.to_ascii_lowercase();
        SKIP_CLASS_FRAGMENTS.iter().any(|f| c.contains(f))
    })
}

struct Paragraphs {
    done: Vec<String>,
    current: String,
}

impl Paragraphs {
    fn flush(&mut self) {
        let collapsed = self.current.split_whitespace().collect::<Vec<_>>().join(" ");
        if !collapsed.is_empty() {
            self.done.push(collapsed);
        }
        self.current.clear();
    }
}

fn walk(el: ElementRef<'_>, acc: &mut Paragraphs) {
    if skipped(&el) {
        return;
    }
    let block = BLOCK_TAGS.contains(&el.value().name());
    if block {
        acc.flush();
    }
    for child in el.children() {
        match child.value() {
            Node::Text(t) => {
                acc.current.push_str(t);
            }
            Node::Element(_) => {
                if let Some(child_el) = ElementRef::wrap(child) {
                    walk(child_el, acc);
                }
            }
            _ => {}
        }
    }
    if block {
        acc.flush();
    }
}

/// Reduce an HTML page to newline-separated plaintext paragraphs.
///
/// Scripts, styles and navigation chrome are dropped, block-level elements
/// become paragraph breaks and runs of whitespace collapse to one space.
pub fn clean_html(raw_html: &str) -> Result<String, CorpusError> {
    if raw_html.trim().is_empty() {
        return Err(CorpusError::NoText);
    }
    let html = Html::parse_document(raw_html);
    let mut acc = Paragraphs {
        done: Vec::new(),
        current: String::new(),
    };
    walk(html.root_element(), &mut acc);
    acc.flush();
    let text = acc.done.join("\n");
    // A literal "<" followed by a letter would read as markup downstream.
    let text = escape_tag_openers(&text);
    if text.is_empty() {
        return Err(CorpusError::NoText);
    }
    Ok(text)
}

fn escape_tag_openers(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        out.push(c);
        if c == '<' && chars.peek().is_some_and(|n| n.is_ascii_alphabetic() || *n == '/') {
            out.push(' ');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::document::contains_markup;

    #[test]
    fn single_paragraph() {
        assert_eq!(
            clean_html("<html><body><p>Hello</p></body></html>").unwrap(),
            "Hello"
        );
    }

    #[test]
    fn script_stripped() {
        assert_eq!(
            clean_html("<p>A</p><script>x()</script><p>B</p>").unwrap(),
            "A\nB"
        );
    }

    #[test]
    fn navigation_and_whitespace() {
        let html = r#"<body><nav><a href="/">Home</a></nav>
            <div class="govuk-breadcrumbs">Benefits</div>
            <h1>  Universal   Credit </h1><p>You may be <b>able</b> to get it.</p>
            <ul><li>one</li><li>two</li></ul><footer>Crown copyright</footer></body>"#;
        assert_eq!(
            clean_html(html).unwrap(),
            "Universal Credit\nYou may be able to get it.\none\ntwo"
        );
    }

    #[test]
    fn entities_decoded_without_reintroducing_markup() {
        let out = clean_html("<p>&lt;b&gt;bold&lt;/b&gt; &amp; more</p>").unwrap();
        assert!(!contains_markup(&out), "{out}");
        assert!(out.contains("& more"));
    }

    #[test]
    fn empty_result_is_error() {
        assert!(matches!(
            clean_html("<script>only()</script>"),
            Err(CorpusError::NoText)
        ));
        assert!(matches!(clean_html(""), Err(CorpusError::NoText)));
    }
}
