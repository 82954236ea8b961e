/// Character span `[start, end)` into a document body.
pub type Span = (usize, usize);

/// Paragraphs as trimmed character spans; paragraphs are separated by one
/// or more whitespace-only lines.
pub fn paragraphs(body: &str) -> Vec<Span> {
    let chars: Vec<char> = body.chars().collect();
    let mut out = Vec::new();
    let mut current: Option<Span> = None;
    let mut line_start = 0;
    while line_start < chars.len() {
        let line_end = chars[line_start..]
            .iter()
            .position(|c| *c == '\n')
            .map_or(chars.len(), |i| line_start + i);
        let line = &chars[line_start..line_end];
        match line.iter().position(|c| !c.is_whitespace()) {
            None => {
                if let Some(p) = current.take() {
                    out.push(p);
                }
            }
            Some(first) => {
                let last = line
                    .iter()
                    .rposition(|c| !c.is_whitespace())
                    .expect("non-blank");
                let end = line_start + last + 1;
                current = Some(match current {
                    Some((s, _)) => (s, end),
                    None => (line_start + first, end),
                });
            }
        }
        line_start = line_end + 1;
    }
    out.extend(current);
    out
}

/// Splits `body` into chunk spans. Whole paragraphs are packed greedily
/// while the span stays within `max_chars`; a paragraph longer than that is
/// cut into `max_chars` windows that overlap by `overlap_chars`.
pub fn chunk_spans(body: &str, max_chars: usize, overlap_chars: usize) -> Vec<Span> {
    assert!(
        max_chars > overlap_chars,
        "max_chars must exceed overlap_chars"
    );
    let mut out = Vec::new();
    let mut group: Option<Span> = None;
    for (ps, pe) in paragraphs(body) {
        if pe - ps > max_chars {
            out.extend(group.take());
            let mut start = ps;
            loop {
                let end = (start + max_chars).min(pe);
                out.push((start, end));
                if end == pe {
                    break;
                }
                start = end - overlap_chars;
            }
            continue;
        }
        group = match group {
            Some((gs, _)) if pe - gs <= max_chars => Some((gs, pe)),
            Some(g) => {
                out.push(g);
                Some((ps, pe))
            }
            None => Some((ps, pe)),
        };
    }
    out.extend(group);
    out
}

pub fn span_text(body: &str, (start, end): Span) -> String {
    body.chars().skip(start).take(end - start).collect()
}
