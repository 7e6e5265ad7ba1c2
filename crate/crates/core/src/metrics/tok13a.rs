//! The mteval-v13a tokenization used for BLEU: punctuation splitting with
//! digit-aware period/comma/dash handling.

use std::sync::OnceLock;

use regex::Regex;

struct Rules {
    punct: Regex,
    period_before: Regex,
    period_after: Regex,
    digit_dash: Regex,
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| Rules {
        // language-dependent part, assuming Western punctuation
        punct: Regex::new(r"([\{-\~\[-` -\&\(-\+\:-\@/])").unwrap(),
        // split period and comma unless preceded by a digit
        period_before: Regex::new(r"([^0-9])([\.,])").unwrap(),
        // split period and comma unless followed by a digit
        period_after: Regex::new(r"([\.,])([^0-9])").unwrap(),
        // split dash when preceded by a digit
        digit_dash: Regex::new(r"([0-9])(-)").unwrap(),
    })
}

pub fn tokenize_13a(line: &str) -> Vec<String> {
    let mut s = line.replace("<skipped>", "");
    s = s.replace("-\n", "");
    s = s.replace('\n', " ");
    if s.contains('&') {
        s = s.replace("&quot;", "\"");
        s = s.replace("&amp;", "&");
        s = s.replace("&lt;", "<");
        s = s.replace("&gt;", ">");
    }
    let r = rules();
    let s = format!(" {s} ");
    let s = r.punct.replace_all(&s, " ${1} ");
    let s = r.period_before.replace_all(&s, "${1} ${2} ");
    let s = r.period_after.replace_all(&s, " ${1} ${2}");
    let s = r.digit_dash.replace_all(&s, "${1} ${2} ");
    s.split_whitespace().map(|t| t.to_string()).collect()
}
