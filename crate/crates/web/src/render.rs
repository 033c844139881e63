//! Flat SVG rendering of a design document, enough to see what a critique
//! points at.

use std::fmt::Write;

use critiq_core::model::Bounds;
use critiq_core::{Color, DesignDocument, DesignNode};

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

fn paint(c: &Color) -> String {
    let [r, g, b, _] = c.to_rgba8();
    if c.is_opaque() {
        format!("fill=\"#{r:02X}{g:02X}{b:02X}\"")
    } else {
        format!(
            "fill=\"#{r:02X}{g:02X}{b:02X}\" fill-opacity=\"{:.3}\"",
            c.a
        )
    }
}

fn extent(doc: &DesignDocument) -> Bounds {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for f in &doc.frames {
        x0 = x0.min(f.bounds.x);
        y0 = y0.min(f.bounds.y);
        x1 = x1.max(f.bounds.x + f.bounds.w);
        y1 = y1.max(f.bounds.y + f.bounds.h);
    }
    if doc.frames.is_empty() {
        return Bounds::new(0.0, 0.0, 1.0, 1.0);
    }
    Bounds::new(x0, y0, (x1 - x0).max(1.0), (y1 - y0).max(1.0))
}

fn draw(node: &DesignNode, out: &mut String) {
    let b = &node.bounds;
    match &node.text {
        Some(style) => {
            let fill = node
                .fills
                .last()
                .map(paint)
                .unwrap_or_else(|| "fill=\"#000000\"".into());
            let weight = style.font_weight;
            let _ = write!(
                out,
                "<text data-node=\"{id}\" x=\"{x}\" y=\"{y}\" font-size=\"{size}\" font-weight=\"{weight}\" font-family=\"{family}, sans-serif\" {fill}>{text}</text>",
                id = escape(&node.id),
                x = b.x,
                y = b.y + style.font_size,
                size = style.font_size,
                family = escape(&style.font_family),
                text = escape(&style.characters),
            );
        }
        None => {
            for fill in &node.fills {
                let _ = write!(
                    out,
                    "<rect data-node=\"{}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" {}/>",
                    escape(&node.id),
                    b.x,
                    b.y,
                    b.w,
                    b.h,
                    paint(fill)
                );
            }
        }
    }
    for child in &node.children {
        draw(child, out);
    }
}

fn find<'a>(nodes: &'a [DesignNode], id: &str) -> Option<&'a DesignNode> {
    nodes.iter().find_map(|n| {
        if n.id == id {
            Some(n)
        } else {
            find(&n.children, id)
        }
    })
}

/// Renders every frame, outlining `highlight` when it names a node.
pub fn render_svg(doc: &DesignDocument, highlight: Option<&str>) -> String {
    let view = extent(doc);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\" width=\"{}\" height=\"{}\">",
        view.x, view.y, view.w, view.h, view.w, view.h
    );
    for frame in &doc.frames {
        draw(frame, &mut out);
    }
    if let Some(node) = highlight.and_then(|id| find(&doc.frames, id)) {
        let b = &node.bounds;
        let _ = write!(
            out,
            "<rect class=\"highlight\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#E11D48\" stroke-width=\"3\" stroke-dasharray=\"6 3\"/>",
            b.x - 3.0,
            b.y - 3.0,
            b.w + 6.0,
            b.h + 6.0
        );
    }
    out.push_str("</svg>");
    out
}
