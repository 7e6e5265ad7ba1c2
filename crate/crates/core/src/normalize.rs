//! Text normalization: invisible-character removal followed by canonical
//! rewriting of ambiguous Khmer encodings.
//!
//! The two steps are order-sensitive: rewrite patterns do not account for
//! invisible characters, so [`Normalizer::normalize`] always removes those
//! first and only then applies the rule table.

use std::collections::HashMap;
use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::chars;

#[derive(Debug, Error)]
pub enum NormalizeError {
    #[error("malformed rule table: {0}")]
    MalformedRuleTable(String),
    #[error("invalid invisible set (line {line}): {msg}")]
    MalformedInvisibleSet { line: usize, msg: String },
}

/// The 29 non-printing/format/variation codepoints removed by default.
const DEFAULT_INVISIBLE: [u32; 29] = [
    0x00AD, 0x17B4, 0x17B5, 0x180B, 0x180C, 0x180D, 0x180E, 0x200B, 0x200C, 0x200D, 0x200E,
    0x200F, 0x202A, 0x202B, 0x202C, 0x202D, 0x2060, 0x2061, 0x2063, 0x206E, 0xFE0E, 0xFE0F,
    0xFEFF, 0xE0062, 0xE0065, 0xE0067, 0xE006E, 0xE007F, 0xE01D3,
];

/// Set of codepoints stripped by `remove_invisible`.
#[derive(Debug, Clone)]
pub struct InvisibleSet {
    codepoints: HashSet<char>,
}

impl Default for InvisibleSet {
    fn default() -> Self {
        let codepoints = DEFAULT_INVISIBLE
            .iter()
            .map(|&cp| char::from_u32(cp).expect("valid scalar"))
            .collect();
        InvisibleSet { codepoints }
    }
}

impl InvisibleSet {
    pub fn from_codepoints(cps: impl IntoIterator<Item = char>) -> Result<Self, NormalizeError> {
        let codepoints: HashSet<char> = cps.into_iter().collect();
        for &c in &codepoints {
            if !Self::admissible(c) {
                return Err(NormalizeError::MalformedInvisibleSet {
                    line: 0,
                    msg: format!("U+{:04X} is a printable letter, digit, or space", c as u32),
                });
            }
        }
        Ok(InvisibleSet { codepoints })
    }

    /// Parse the `U+XXXX`-per-line file format. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, NormalizeError> {
        let mut cps = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let hex = line.strip_prefix("U+").ok_or(NormalizeError::MalformedInvisibleSet {
                line: idx + 1,
                msg: format!("expected U+XXXX, got {line:?}"),
            })?;
            let cp = u32::from_str_radix(hex, 16).ok().and_then(char::from_u32).ok_or(
                NormalizeError::MalformedInvisibleSet {
                    line: idx + 1,
                    msg: format!("not a Unicode scalar value: {line:?}"),
                },
            )?;
            cps.push(cp);
        }
        Self::from_codepoints(cps).map_err(|e| match e {
            NormalizeError::MalformedInvisibleSet { msg, .. } => {
                NormalizeError::MalformedInvisibleSet { line: 0, msg }
            }
            other => other,
        })
    }

    pub fn to_file_string(&self) -> String {
        let mut cps: Vec<u32> = self.codepoints.iter().map(|&c| c as u32).collect();
        cps.sort_unstable();
        let mut out = String::new();
        for cp in cps {
            let _ = writeln!(out, "U+{cp:04X}");
        }
        out
    }

    pub fn contains(&self, c: char) -> bool {
        self.codepoints.contains(&c)
    }

    pub fn len(&self) -> usize {
        self.codepoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codepoints.is_empty()
    }

    // Members must be non-printing: never a Khmer letter/mark, a digit,
    // or U+0020. (U+17B4/U+17B5 are invisible inherent vowels, admissible.)
    fn admissible(c: char) -> bool {
        !(c == ' '
            || chars::is_khmer_base(c)
            || chars::is_khmer_vowel(c)
            || chars::is_khmer_shifter(c)
            || chars::is_khmer_final_sign(c)
            || chars::is_khmer_sign_punct(c)
            || c == chars::KHMER_COENG
            || chars::is_digit(c)
            || c.is_alphanumeric())
    }
}

/// Remove every codepoint of `set` from `text`, preserving the order of the
/// rest. Total and idempotent.
pub fn remove_invisible(text: &str, set: &InvisibleSet) -> String {
    text.chars().filter(|&c| !set.contains(c)).collect()
}

/// One canonicalization rule: `pattern` rewrites to `replacement`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub rule_id: String,
    pub pattern: Vec<char>,
    pub replacement: Vec<char>,
}

impl RewriteRule {
    pub fn new(
        rule_id: impl Into<String>,
        pattern: &[char],
        replacement: &[char],
    ) -> Result<Self, NormalizeError> {
        let rule_id = rule_id.into();
        if pattern.is_empty() {
            return Err(NormalizeError::MalformedRuleTable(format!(
                "rule {rule_id}: empty pattern"
            )));
        }
        if pattern == replacement {
            return Err(NormalizeError::MalformedRuleTable(format!(
                "rule {rule_id}: pattern equals replacement"
            )));
        }
        Ok(RewriteRule {
            rule_id,
            pattern: pattern.to_vec(),
            replacement: replacement.to_vec(),
        })
    }
}

/// Ordered rewrite rules applied to a fixpoint.
///
/// Per pass the text is scanned left to right; at each position the longest
/// matching pattern fires (ties broken by table order) and scanning resumes
/// after the replacement. Passes repeat until one makes no change. Loading
/// verifies that every rule's replacement itself normalizes to a fixpoint
/// within a bounded number of passes, which rejects cyclic or growing tables.
#[derive(Debug, Clone)]
pub struct RuleTable {
    pub version: String,
    rules: Vec<RewriteRule>,
    // first pattern char -> rule indices, longest pattern first, then table order
    index: HashMap<char, Vec<usize>>,
}

const LOAD_CHECK_MAX_PASSES: usize = 64;

impl RuleTable {
    pub fn new(version: impl Into<String>, rules: Vec<RewriteRule>) -> Result<Self, NormalizeError> {
        let mut index: HashMap<char, Vec<usize>> = HashMap::new();
        for (i, rule) in rules.iter().enumerate() {
            index.entry(rule.pattern[0]).or_default().push(i);
        }
        for bucket in index.values_mut() {
            bucket.sort_by(|&a, &b| {
                rules[b]
                    .pattern
                    .len()
                    .cmp(&rules[a].pattern.len())
                    .then(a.cmp(&b))
            });
        }
        let table = RuleTable {
            version: version.into(),
            rules,
            index,
        };
        table.check_fixpoint()?;
        Ok(table)
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    /// Default Khmer canonicalization rules: composed-vowel equivalences,
    /// in-cluster reordering to the canonical order
    /// coeng < register shifter < dependent vowel < final sign (coeng-ro last
    /// among coengs), and duplicate-mark removal.
    ///
    /// The table is an artifact default; replace it wholesale by loading a
    /// rule file if an authoritative rule set is available.
    pub fn default_khmer() -> Self {
        let mut rules = Vec::new();
        let mut add = |id: String, pat: &[char], rep: &[char]| {
            rules.push(RewriteRule::new(id, pat, rep).expect("default rule is well-formed"));
        };

        // Composed vowels typed as two-codepoint sequences.
        add("compose-oe".into(), &['\u{17C1}', '\u{17B8}'], &['\u{17BE}']);
        add("compose-au".into(), &['\u{17C1}', '\u{17B6}'], &['\u{17C4}']);

        let coeng = chars::KHMER_COENG;
        let consonants: Vec<char> = ('\u{1780}'..='\u{17A2}').collect();
        let vowels: Vec<char> = ('\u{17B6}'..='\u{17C5}').collect();
        let shifters = ['\u{17C9}', '\u{17CA}'];
        let signs = [
            '\u{17C6}', '\u{17C7}', '\u{17C8}', '\u{17CB}', '\u{17CD}', '\u{17CE}', '\u{17CF}',
            '\u{17D0}', '\u{17DD}',
        ];
        let ro = '\u{179A}';

        for &s in &shifters {
            for &c in &consonants {
                add(
                    format!("order-shifter-coeng-{:04X}-{:04X}", s as u32, c as u32),
                    &[s, coeng, c],
                    &[coeng, c, s],
                );
            }
        }
        for &v in &vowels {
            for &c in &consonants {
                add(
                    format!("order-vowel-coeng-{:04X}-{:04X}", v as u32, c as u32),
                    &[v, coeng, c],
                    &[coeng, c, v],
                );
            }
        }
        for &f in &signs {
            for &c in &consonants {
                add(
                    format!("order-sign-coeng-{:04X}-{:04X}", f as u32, c as u32),
                    &[f, coeng, c],
                    &[coeng, c, f],
                );
            }
        }
        for &v in &vowels {
            for &s in &shifters {
                add(
                    format!("order-vowel-shifter-{:04X}-{:04X}", v as u32, s as u32),
                    &[v, s],
                    &[s, v],
                );
            }
        }
        for &f in &signs {
            for &s in &shifters {
                add(
                    format!("order-sign-shifter-{:04X}-{:04X}", f as u32, s as u32),
                    &[f, s],
                    &[s, f],
                );
            }
        }
        for &f in &signs {
            for &v in &vowels {
                add(
                    format!("order-sign-vowel-{:04X}-{:04X}", f as u32, v as u32),
                    &[f, v],
                    &[v, f],
                );
            }
        }
        for &c in &consonants {
            if c != ro {
                add(
                    format!("coeng-ro-last-{:04X}", c as u32),
                    &[coeng, ro, coeng, c],
                    &[coeng, c, coeng, ro],
                );
            }
        }
        for &v in &vowels {
            add(format!("dedup-vowel-{:04X}", v as u32), &[v, v], &[v]);
        }
        for &s in &shifters {
            add(format!("dedup-shifter-{:04X}", s as u32), &[s, s], &[s]);
        }
        for &f in &signs {
            add(format!("dedup-sign-{:04X}", f as u32), &[f, f], &[f]);
        }
        add("dedup-coeng".into(), &[coeng, coeng], &[coeng]);

        RuleTable::new("khm-default-1", rules).expect("default table passes the fixpoint check")
    }

    /// Parse the `rule_id<TAB>pattern-hex<TAB>replacement-hex` format, where
    /// a hex list is space-separated scalar values (e.g. `17C1 17B8`).
    /// `#` starts a comment; `# version: <v>` sets the table version.
    pub fn parse(text: &str) -> Result<Self, NormalizeError> {
        let mut version = String::from("unversioned");
        let mut rules = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.trim().strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("version:") {
                    version = v.trim().to_string();
                }
                continue;
            }
            let mut fields = line.split('\t');
            let (id, pat, rep) = match (fields.next(), fields.next(), fields.next()) {
                (Some(id), Some(pat), Some(rep)) => (id, pat, rep),
                _ => {
                    return Err(NormalizeError::MalformedRuleTable(format!(
                        "line {}: expected 3 tab-separated fields",
                        idx + 1
                    )))
                }
            };
            let parse_hex_list = |s: &str| -> Result<Vec<char>, NormalizeError> {
                s.split_whitespace()
                    .map(|h| {
                        u32::from_str_radix(h, 16).ok().and_then(char::from_u32).ok_or_else(|| {
                            NormalizeError::MalformedRuleTable(format!(
                                "line {}: bad codepoint {h:?}",
                                idx + 1
                            ))
                        })
                    })
                    .collect()
            };
            rules.push(RewriteRule::new(id, &parse_hex_list(pat)?, &parse_hex_list(rep)?)?);
        }
        RuleTable::new(version, rules)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# version: {}", self.version);
        for rule in &self.rules {
            let hex = |cs: &[char]| {
                cs.iter()
                    .map(|&c| format!("{:04X}", c as u32))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let _ = writeln!(out, "{}\t{}\t{}", rule.rule_id, hex(&rule.pattern), hex(&rule.replacement));
        }
        out
    }

    /// Longest matching rule at `pos`, ties broken by table order.
    fn match_at(&self, text: &[char], pos: usize) -> Option<&RewriteRule> {
        let bucket = self.index.get(&text[pos])?;
        for &i in bucket {
            let rule = &self.rules[i];
            let end = pos + rule.pattern.len();
            if end <= text.len() && text[pos..end] == rule.pattern[..] {
                return Some(rule);
            }
        }
        None
    }

    fn apply_pass(&self, text: &[char]) -> (Vec<char>, bool) {
        let mut out = Vec::with_capacity(text.len());
        let mut changed = false;
        let mut i = 0;
        while i < text.len() {
            match self.match_at(text, i) {
                Some(rule) => {
                    out.extend_from_slice(&rule.replacement);
                    i += rule.pattern.len();
                    changed = true;
                }
                None => {
                    out.push(text[i]);
                    i += 1;
                }
            }
        }
        (out, changed)
    }

    fn apply_to_fixpoint(&self, text: &str, max_passes: usize) -> Option<String> {
        let mut cur: Vec<char> = text.chars().collect();
        for _ in 0..max_passes {
            let (next, changed) = self.apply_pass(&cur);
            cur = next;
            if !changed {
                return Some(cur.into_iter().collect());
            }
        }
        None
    }

    fn check_fixpoint(&self) -> Result<(), NormalizeError> {
        for rule in &self.rules {
            let replacement: String = rule.replacement.iter().collect();
            if self.apply_to_fixpoint(&replacement, LOAD_CHECK_MAX_PASSES).is_none() {
                return Err(NormalizeError::MalformedRuleTable(format!(
                    "rule {}: replacement does not reach a fixpoint",
                    rule.rule_id
                )));
            }
        }
        Ok(())
    }
}

/// Rewrite `text` to the table's fixpoint. Expects invisible characters to
/// have been removed already (see [`Normalizer::normalize`]).
pub fn normalize_encoding(text: &str, table: &RuleTable) -> String {
    // Every loaded table passed the replacement fixpoint check; pass count on
    // real input is bounded by the in-cluster reorder depth.
    let cap = text.chars().count() + 16;
    table
        .apply_to_fixpoint(text, cap)
        .expect("rule table failed to stabilize on input; table violates its load-time contract")
}

/// The two normalization stages in their mandatory order.
#[derive(Debug, Clone)]
pub struct Normalizer {
    pub invisible: InvisibleSet,
    pub rules: RuleTable,
}

impl Default for Normalizer {
    fn default() -> Self {
        Normalizer {
            invisible: InvisibleSet::default(),
            rules: RuleTable::default_khmer(),
        }
    }
}

impl Normalizer {
    pub fn new(invisible: InvisibleSet, rules: RuleTable) -> Self {
        Normalizer { invisible, rules }
    }

    /// `normalize_encoding(remove_invisible(text))`; idempotent.
    pub fn normalize(&self, text: &str) -> String {
        normalize_encoding(&remove_invisible(text, &self.invisible), &self.rules)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_set_has_29_members() {
        let set = InvisibleSet::default();
        assert_eq!(set.len(), 29);
        for cp in [0x200Bu32, 0xFEFF, 0x00AD, 0x17B4, 0x17B5] {
            assert!(set.contains(char::from_u32(cp).unwrap()), "missing U+{cp:04X}");
        }
    }

    #[test]
    fn set_rejects_printables() {
        assert!(InvisibleSet::from_codepoints(['ក']).is_err());
        assert!(InvisibleSet::from_codepoints([' ']).is_err());
        assert!(InvisibleSet::from_codepoints(['5']).is_err());
        assert!(InvisibleSet::from_codepoints(['\u{200B}']).is_ok());
    }

    #[test]
    fn remove_invisible_examples() {
        let set = InvisibleSet::default();
        assert_eq!(remove_invisible("ក\u{200B}ម", &set), "កម");
        assert_eq!(remove_invisible("", &set), "");
        let once = remove_invisible("a\u{FEFF}b\u{200D}", &set);
        assert_eq!(remove_invisible(&once, &set), once);
    }

    #[test]
    fn invisible_set_file_round_trip() {
        let set = InvisibleSet::default();
        let text = set.to_file_string();
        let parsed = InvisibleSet::parse(&text).unwrap();
        assert_eq!(parsed.len(), 29);
        assert_eq!(parsed.to_file_string(), text);
    }

    #[test]
    fn figure_rule_fires_after_base_consonant() {
        let table = RuleTable::default_khmer();
        assert_eq!(normalize_encoding("ក\u{17C1}\u{17B8}", &table), "ក\u{17BE}");
        assert_eq!(normalize_encoding("ម\u{17C1}\u{17B6}ន", &table), "ម\u{17C4}ន");
    }

    #[test]
    fn ascii_untouched() {
        let table = RuleTable::default_khmer();
        let text = "plain ASCII text, nothing Khmer 123.";
        assert_eq!(normalize_encoding(text, &table), text);
    }

    #[test]
    fn reorder_rules_sort_cluster() {
        let table = RuleTable::default_khmer();
        // vowel typed before coeng: ka + aa + coeng + ro -> ka + coeng + ro + aa
        let messy = "ក\u{17B6}\u{17D2}រ";
        assert_eq!(normalize_encoding(messy, &table), "ក\u{17D2}រ\u{17B6}");
        // shifter after vowel swaps back
        let messy2 = "ប\u{17B7}\u{17C9}";
        assert_eq!(normalize_encoding(messy2, &table), "ប\u{17C9}\u{17B7}");
    }

    #[test]
    fn dedup_rules() {
        let table = RuleTable::default_khmer();
        assert_eq!(normalize_encoding("ក\u{17B6}\u{17B6}", &table), "ក\u{17B6}");
    }

    #[test]
    fn cyclic_table_rejected() {
        let r1 = RewriteRule::new("ab", &['a', 'b'], &['b', 'a']).unwrap();
        let r2 = RewriteRule::new("ba", &['b', 'a'], &['a', 'b']).unwrap();
        let err = RuleTable::new("cyclic", vec![r1, r2]).unwrap_err();
        assert!(matches!(err, NormalizeError::MalformedRuleTable(_)));
    }

    #[test]
    fn growing_table_rejected() {
        let r = RewriteRule::new("grow", &['a'], &['a', 'a']).unwrap();
        assert!(RuleTable::new("grow", vec![r]).is_err());
    }

    #[test]
    fn rule_table_file_round_trip() {
        let table = RuleTable::default_khmer();
        let text = table.to_file_string();
        let parsed = RuleTable::parse(&text).unwrap();
        assert_eq!(parsed.version, table.version);
        assert_eq!(parsed.rules(), table.rules());
    }

    #[test]
    fn mandated_order_heals_split_pattern() {
        let norm = Normalizer::default();
        // U+200B splits the compose-oe pattern; rm_inv first lets it fire.
        let text = "ក\u{17C1}\u{200B}\u{17B8}";
        assert_eq!(norm.normalize(text), "ក\u{17BE}");
        // reversed order leaves the pair uncomposed
        let wrong = remove_invisible(&normalize_encoding(text, &norm.rules), &norm.invisible);
        assert_eq!(wrong, "ក\u{17C1}\u{17B8}");
        assert_ne!(wrong, norm.normalize(text));
    }

    #[test]
    fn normalize_idempotent_on_samples() {
        let norm = Normalizer::default();
        for s in ["", "កម្ពុជា", "ក\u{17C1}\u{17B8}x", "hello ។ ខ្មែរ\u{200B}"] {
            let once = norm.normalize(s);
            assert_eq!(norm.normalize(&once), once);
        }
    }
}
