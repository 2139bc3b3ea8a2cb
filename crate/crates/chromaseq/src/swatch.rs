//! Static HTML rendering of predicted colors: one table row per name with
//! its hex code and a cell painted in that color. The page embeds its own
//! styling and references no external assets.

use crate::data::{format_hex, Rgb};

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// Self-contained swatch page for (name, color) pairs, in input order.
pub fn render_swatch_html(entries: &[(String, Rgb)]) -> String {
    let mut rows = String::new();
    for (name, rgb) in entries {
        let hex = format_hex(*rgb);
        rows.push_str(&format!(
            "    <tr><td>{}</td><td><code>{}</code></td>\
             <td class=\"swatch\" style=\"background:{}\"></td></tr>\n",
            escape_html(name),
            hex,
            hex
        ));
    }
    format!(
        "<!DOCTYPE html>\n\
         <html lang=\"en\">\n\
         <head>\n\
         <meta charset=\"utf-8\">\n\
         <title>color swatches</title>\n\
         <style>\n\
         body {{ font-family: sans-serif; margin: 2rem; }}\n\
         table {{ border-collapse: collapse; }}\n\
         td {{ border: 1px solid #ccc; padding: 0.4rem 0.8rem; }}\n\
         td.swatch {{ min-width: 6rem; }}\n\
         </style>\n\
         </head>\n\
         <body>\n\
         <table>\n\
         <thead><tr><th>name</th><th>hex</th><th>color</th></tr></thead>\n\
         <tbody>\n{}  </tbody>\n\
         </table>\n\
         </body>\n\
         </html>\n",
        rows
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_per_entry() {
        let entries = vec![
            ("red".to_string(), [255, 0, 0]),
            ("sea green".to_string(), [46, 139, 87]),
            ("navy".to_string(), [0, 0, 128]),
            ("gold".to_string(), [255, 215, 0]),
        ];
        let html = render_swatch_html(&entries);
        assert_eq!(html.matches("<tr><td>").count(), 4);
        assert!(html.contains("#2E8B57"));
        assert!(html.contains("sea green"));
    }

    #[test]
    fn hex_strings_are_uppercase_six_digit() {
        let entries = vec![
            ("a".to_string(), [1, 2, 3]),
            ("b".to_string(), [255, 255, 255]),
        ];
        let html = render_swatch_html(&entries);
        for piece in html.split('#').skip(1) {
            let hex: String = piece.chars().take_while(|c| c.is_ascii_alphanumeric()).collect();
            if hex.len() == 6 {
                assert!(hex.chars().all(|c| c.is_ascii_digit() || c.is_ascii_uppercase()));
            }
        }
        assert!(html.contains("#010203"));
    }

    #[test]
    fn names_are_html_escaped() {
        let entries = vec![("<script>\"x\"&'y'".to_string(), [0, 0, 0])];
        let html = render_swatch_html(&entries);
        assert!(!html.contains("<script>"));
        assert!(html.contains("&lt;script&gt;"));
        assert!(html.contains("&quot;x&quot;"));
        assert!(html.contains("&amp;"));
    }

    #[test]
    fn page_references_no_external_assets() {
        let html = render_swatch_html(&[("red".to_string(), [255, 0, 0])]);
        for marker in ["http://", "https://", "src=", "link rel", "@import"] {
            assert!(!html.contains(marker), "found external marker {}", marker);
        }
    }
}
