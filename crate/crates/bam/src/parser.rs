//! Parser for model documents and formula expressions.
//!
//! The grammar is line oriented: a preamble of time-frame sentences, an
//! optional `Categories:` block of titled outlines, then one or more
//! `Report:` sections holding formula lines. Blank lines are ignored and
//! lines whose first non-space character is `#` are comments.
//!
//! The parser is tolerant of notation variance that does not change meaning:
//! keyword casing, trailing sentence periods, Unicode dashes for minus,
//! `×`/`÷` for `*`/`/`, outline bullets, CRLF line endings, and thousands
//! separators inside numbers.

use std::sync::LazyLock;

use regex::Regex;

use crate::ast::{
    BinOp, CategoryHierarchy, CategoryNode, Expr, FormulaDef, ModelDocument, ReportDef, TimeFrame,
    TimeUnit,
};
use crate::ident::{collapse_ws, ident_key};

/// Errors produced while parsing model text. Each carries the 1-based line
/// number of the offending line where one exists.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("missing time frame: {}", missing.join(", "))]
    MissingTimeFrame { missing: Vec<String> },
    #[error("line {line}: malformed time frame sentence: {reason}")]
    MalformedTimeFrame { line: usize, reason: String },
    #[error("line {line}: malformed category line: {reason}")]
    MalformedCategoryLine { line: usize, reason: String },
    #[error("line {line}: malformed formula: {reason}")]
    MalformedFormula { line: usize, reason: String },
    #[error("line {line}: duplicate hierarchy title '{title}'")]
    DuplicateHierarchyTitle { line: usize, title: String },
    #[error("line {line}: duplicate report name '{name}'")]
    DuplicateReportName { line: usize, name: String },
    #[error("line {line}: unrecognized line: {content}")]
    UnrecognizedLine { line: usize, content: String },
}

static RE_REPORT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^report\s*:\s*(.*?)\s*$").unwrap());
static RE_CATEGORIES: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^categories\s*:?\s*$").unwrap());
static RE_BREAKDOWN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^breakdown\s+by\s+(.+?)\s*\.?\s*$").unwrap());
static RE_TITLE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(.+?)\s*=\s*$").unwrap());
static RE_OUTLINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d+(?:\.\d+)*)\.?\s+(.+?)\s*$").unwrap());
static RE_BULLET: LazyLock<Regex> =
    LazyLock::new(|| Regex::new("^[-\u{2013}\u{2014}\u{2022}*]\\s+").unwrap());
static RE_EACH: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^each\s+period\s+is\s+(.+?)\s*\.?\s*$").unwrap());
static RE_UNIT_TAIL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^(?:one|a|1)\s+(year|quarter|month)s?$").unwrap());
static RE_COUNT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^the\s+number\s+of\s+periods\s+is\s+(.+?)\s*\.?\s*$").unwrap());
static RE_START: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^the\s+first\s+period\s+starts\s+(?:in|on)\s+(.+?)\s*\.?\s*$").unwrap()
});

/// Parse a complete model document.
pub fn parse_model(text: &str) -> Result<ModelDocument, ParseError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut tf = TimeFrameBuilder::default();
    let mut hierarchies: Vec<CategoryHierarchy> = Vec::new();
    let mut reports: Vec<ReportDef> = Vec::new();
    let mut section = Section::Preamble;
    let mut open_hierarchy: Option<HierarchyBuilder> = None;
    let mut last_line = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }

        if let Some(c) = RE_REPORT.captures(line) {
            let name = collapse_ws(&c[1]);
            if name.is_empty() {
                return Err(ParseError::UnrecognizedLine {
                    line: line_no,
                    content: line.to_string(),
                });
            }
            if let Some(h) = open_hierarchy.take() {
                hierarchies.push(h.finish(line_no)?);
            }
            if reports.iter().any(|r| ident_key(&r.name) == ident_key(&name)) {
                return Err(ParseError::DuplicateReportName { line: line_no, name });
            }
            reports.push(ReportDef { name, breakdown: Vec::new(), formulas: Vec::new() });
            section = Section::Report;
            continue;
        }

        match section {
            Section::Preamble => {
                if RE_CATEGORIES.is_match(line) {
                    section = Section::Categories;
                } else if !tf.try_line(line, line_no)? {
                    return Err(ParseError::UnrecognizedLine {
                        line: line_no,
                        content: line.to_string(),
                    });
                }
            }
            Section::Categories => {
                let stripped = RE_BULLET.replace(line, "");
                if let Some(c) = RE_OUTLINE.captures(&stripped) {
                    let depth = c[1].split('.').count();
                    let name = collapse_ws(&c[2]);
                    if name.contains('=') {
                        return Err(ParseError::MalformedCategoryLine {
                            line: line_no,
                            reason: format!("category name '{name}' contains '='"),
                        });
                    }
                    match open_hierarchy.as_mut() {
                        Some(h) => h.insert(depth, name, line_no)?,
                        None => {
                            return Err(ParseError::MalformedCategoryLine {
                                line: line_no,
                                reason: "outline entry appears before any 'Title =' line".into(),
                            })
                        }
                    }
                } else if let Some(c) = RE_TITLE.captures(line) {
                    let title = collapse_ws(&c[1]);
                    if let Some(h) = open_hierarchy.take() {
                        hierarchies.push(h.finish(line_no)?);
                    }
                    if hierarchies.iter().any(|h| ident_key(&h.title) == ident_key(&title)) {
                        return Err(ParseError::DuplicateHierarchyTitle { line: line_no, title });
                    }
                    open_hierarchy = Some(HierarchyBuilder::new(title, line_no));
                } else {
                    return Err(ParseError::MalformedCategoryLine {
                        line: line_no,
                        reason: "expected 'Title =' or a numbered outline entry".into(),
                    });
                }
            }
            Section::Report => {
                let report = reports.last_mut().expect("a report is open in this section");
                if let Some(c) = RE_BREAKDOWN.captures(line) {
                    if !report.breakdown.is_empty() {
                        return Err(ParseError::UnrecognizedLine {
                            line: line_no,
                            content: line.to_string(),
                        });
                    }
                    for part in c[1].split(',') {
                        let title = collapse_ws(part);
                        if title.is_empty() {
                            return Err(ParseError::MalformedCategoryLine {
                                line: line_no,
                                reason: "empty hierarchy title in breakdown list".into(),
                            });
                        }
                        report.breakdown.push(title);
                    }
                } else if line.contains('=') {
                    report.formulas.push(parse_formula_line(line, line_no)?);
                } else {
                    return Err(ParseError::UnrecognizedLine {
                        line: line_no,
                        content: line.to_string(),
                    });
                }
            }
        }
    }

    if let Some(h) = open_hierarchy.take() {
        hierarchies.push(h.finish(last_line)?);
    }
    let time_frame = tf.finish()?;
    Ok(ModelDocument { time_frame, hierarchies, reports })
}

/// Parse a standalone formula expression such as `Turnover - Cost of Sales`.
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    parse_expr_str(text).map_err(|reason| ParseError::MalformedFormula { line: 1, reason })
}

enum Section {
    Preamble,
    Categories,
    Report,
}

#[derive(Default)]
struct TimeFrameBuilder {
    unit: Option<(TimeUnit, usize)>,
    count: Option<(u32, usize)>,
    start: Option<(i32, usize)>,
}

impl TimeFrameBuilder {
    /// Returns true if the line was a time-frame sentence (consumed).
    fn try_line(&mut self, line: &str, line_no: usize) -> Result<bool, ParseError> {
        if let Some(c) = RE_EACH.captures(line) {
            let tail = &c[1];
            let unit = match RE_UNIT_TAIL.captures(tail) {
                Some(u) => match u[1].to_lowercase().as_str() {
                    "year" => TimeUnit::Year,
                    "quarter" => TimeUnit::Quarter,
                    _ => TimeUnit::Month,
                },
                None => {
                    return Err(ParseError::MalformedTimeFrame {
                        line: line_no,
                        reason: format!("unrecognized period length '{tail}'"),
                    })
                }
            };
            set_field(&mut self.unit, unit, line_no, "period length")?;
            return Ok(true);
        }
        if let Some(c) = RE_COUNT.captures(line) {
            let tail = c[1].trim();
            let n: u32 = tail.parse().map_err(|_| ParseError::MalformedTimeFrame {
                line: line_no,
                reason: format!("period count must be a positive integer, got '{tail}'"),
            })?;
            if n == 0 {
                return Err(ParseError::MalformedTimeFrame {
                    line: line_no,
                    reason: "there must be at least one period".into(),
                });
            }
            set_field(&mut self.count, n, line_no, "period count")?;
            return Ok(true);
        }
        if let Some(c) = RE_START.captures(line) {
            let tail = c[1].trim();
            let year: i32 = tail.parse().map_err(|_| ParseError::MalformedTimeFrame {
                line: line_no,
                reason: format!("expected a calendar year, got '{tail}'"),
            })?;
            set_field(&mut self.start, year, line_no, "start year")?;
            return Ok(true);
        }
        Ok(false)
    }

    fn finish(self) -> Result<TimeFrame, ParseError> {
        let mut missing = Vec::new();
        if self.unit.is_none() {
            missing.push("period length".to_string());
        }
        if self.count.is_none() {
            missing.push("period count".to_string());
        }
        if self.start.is_none() {
            missing.push("start year".to_string());
        }
        if !missing.is_empty() {
            return Err(ParseError::MissingTimeFrame { missing });
        }
        Ok(TimeFrame {
            unit: self.unit.unwrap().0,
            period_count: self.count.unwrap().0,
            start_year: self.start.unwrap().0,
        })
    }
}

fn set_field<T: PartialEq + Copy>(
    slot: &mut Option<(T, usize)>,
    value: T,
    line_no: usize,
    what: &str,
) -> Result<(), ParseError> {
    match slot {
        Some((old, old_line)) if *old != value => Err(ParseError::MalformedTimeFrame {
            line: line_no,
            reason: format!("{what} conflicts with line {old_line}"),
        }),
        _ => {
            *slot = Some((value, line_no));
            Ok(())
        }
    }
}

struct HierarchyBuilder {
    title: String,
    title_line: usize,
    roots: Vec<CategoryNode>,
    open: Vec<CategoryNode>,
}

impl HierarchyBuilder {
    fn new(title: String, title_line: usize) -> Self {
        HierarchyBuilder { title, title_line, roots: Vec::new(), open: Vec::new() }
    }

    fn insert(&mut self, depth: usize, name: String, line_no: usize) -> Result<(), ParseError> {
        if depth > self.open.len() + 1 {
            return Err(ParseError::MalformedCategoryLine {
                line: line_no,
                reason: format!(
                    "outline depth jumps to {depth} (previous entry was at depth {})",
                    self.open.len()
                ),
            });
        }
        while self.open.len() >= depth {
            self.close_one(line_no)?;
        }
        self.open.push(CategoryNode { name, children: Vec::new() });
        Ok(())
    }

    fn close_one(&mut self, line_no: usize) -> Result<(), ParseError> {
        let node = self.open.pop().expect("close_one called with an open node");
        let siblings = match self.open.last_mut() {
            Some(parent) => &mut parent.children,
            None => &mut self.roots,
        };
        if siblings.iter().any(|s| ident_key(&s.name) == ident_key(&node.name)) {
            return Err(ParseError::MalformedCategoryLine {
                line: line_no,
                reason: format!("duplicate category '{}' under the same parent", node.name),
            });
        }
        siblings.push(node);
        Ok(())
    }

    fn finish(mut self, line_no: usize) -> Result<CategoryHierarchy, ParseError> {
        while !self.open.is_empty() {
            self.close_one(line_no)?;
        }
        if self.roots.is_empty() {
            return Err(ParseError::MalformedCategoryLine {
                line: self.title_line,
                reason: format!("hierarchy '{}' has no categories", self.title),
            });
        }
        Ok(CategoryHierarchy { title: self.title, roots: self.roots })
    }
}

fn parse_formula_line(line: &str, line_no: usize) -> Result<FormulaDef, ParseError> {
    let (lhs, rhs) = line.split_once('=').expect("caller checked for '='");
    let err = |reason: String| ParseError::MalformedFormula { line: line_no, reason };
    let target_toks = lex_expr(lhs).map_err(&err)?;
    if target_toks.is_empty() {
        return Err(err("missing formula target before '='".into()));
    }
    let mut words = Vec::new();
    for tok in &target_toks {
        match tok {
            Tok::Word(w) => words.push(w.as_str()),
            _ => return Err(err("formula target must be a plain name".into())),
        }
    }
    let target = words.join(" ");
    let mut rhs = rhs.trim();
    if let Some(stripped) = rhs.strip_suffix('.') {
        rhs = stripped.trim_end();
    }
    if rhs.is_empty() {
        return Err(err("empty right-hand side".into()));
    }
    let body = parse_expr_str(rhs).map_err(&err)?;
    Ok(FormulaDef { target, body, line: line_no })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Num(f64),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Num(n) => format!("number {n}"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
        }
    }
}

fn lex_expr(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '-' | '\u{2013}' | '\u{2014}' | '\u{2212}' => {
                toks.push(Tok::Minus);
                i += 1;
            }
            '*' | '\u{d7}' => {
                toks.push(Tok::Star);
                i += 1;
            }
            '/' | '\u{f7}' => {
                toks.push(Tok::Slash);
                i += 1;
            }
            '(' => {
                toks.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            c if is_word_char(c) || (c == '.' && next_is_digit(&chars, i)) => {
                let starts_numeric = c.is_ascii_digit() || c == '.';
                let mut raw = String::new();
                while i < chars.len() {
                    let ch = chars[i];
                    if is_word_char(ch) {
                        raw.push(ch);
                    } else if starts_numeric
                        && (ch == '.' || ch == ',')
                        && next_is_digit(&chars, i)
                    {
                        raw.push(ch);
                    } else {
                        break;
                    }
                    i += 1;
                }
                if starts_numeric {
                    let stripped: String = raw.chars().filter(|&ch| ch != ',').collect();
                    if let Ok(v) = stripped.parse::<f64>() {
                        toks.push(Tok::Num(v));
                    } else if raw.contains('.') || raw.contains(',') {
                        return Err(format!("malformed number '{raw}'"));
                    } else {
                        toks.push(Tok::Word(raw));
                    }
                } else {
                    toks.push(Tok::Word(raw));
                }
            }
            other => return Err(format!("unexpected character '{other}'")),
        }
    }
    Ok(toks)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn next_is_digit(chars: &[char], i: usize) -> bool {
    chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())
}

struct ExprParser {
    toks: Vec<Tok>,
    pos: usize,
}

pub(crate) fn parse_expr_str(src: &str) -> Result<Expr, String> {
    let toks = lex_expr(src)?;
    if toks.is_empty() {
        return Err("empty expression".into());
    }
    let mut p = ExprParser { toks, pos: 0 };
    let expr = p.expr()?;
    match p.peek() {
        Some(tok) => Err(format!("expected an operator, found {}", tok.describe())),
        None => Ok(expr),
    }
}

impl ExprParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn advance(&mut self) -> Tok {
        let tok = self.toks[self.pos].clone();
        self.pos += 1;
        tok
    }

    fn expr(&mut self) -> Result<Expr, String> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, String> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, String> {
        match self.peek() {
            None => Err("expected a value, found end of expression".into()),
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        Ok(Expr::Paren(Box::new(inner)))
                    }
                    Some(tok) => Err(format!("expected ')', found {}", tok.describe())),
                    None => Err("missing closing ')'".into()),
                }
            }
            Some(Tok::RParen) => Err("unexpected ')'".into()),
            Some(Tok::Num(_)) => {
                let Tok::Num(v) = self.advance() else { unreachable!() };
                Ok(Expr::Number(v))
            }
            Some(Tok::Word(_)) => {
                let mut words = Vec::new();
                while let Some(Tok::Word(w)) = self.peek() {
                    words.push(w.clone());
                    self.pos += 1;
                }
                Ok(Expr::Variable(words.join(" ")))
            }
            Some(Tok::Plus) | Some(Tok::Minus) => {
                let negative = matches!(self.advance(), Tok::Minus);
                match self.peek() {
                    Some(Tok::Num(_)) => {
                        let Tok::Num(v) = self.advance() else { unreachable!() };
                        Ok(Expr::Number(if negative { -v } else { v }))
                    }
                    _ => Err("a sign must be followed by a number".into()),
                }
            }
            Some(tok) => Err(format!("expected a value, found {}", tok.describe())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "Each period is one year.\n\
                         The number of periods is 3.\n\
                         The first period starts in 2005.\n\
                         \n\
                         Report: Summary\n\
                         \n\
                         Profit = Turnover - Costs\n";

    #[test]
    fn parses_minimal_document() {
        let doc = parse_model(SMALL).unwrap();
        assert_eq!(doc.time_frame, TimeFrame { unit: TimeUnit::Year, period_count: 3, start_year: 2005 });
        assert!(doc.hierarchies.is_empty());
        assert_eq!(doc.reports.len(), 1);
        assert_eq!(doc.reports[0].name, "Summary");
        assert_eq!(doc.reports[0].formulas.len(), 1);
        assert_eq!(doc.reports[0].formulas[0].target, "Profit");
    }

    #[test]
    fn keywords_are_case_insensitive_and_periods_optional() {
        let text = "EACH PERIOD IS ONE YEAR\n\
                    the number of periods is 2\n\
                    The First Period Starts On 1999\n\
                    REPORT: x\n\
                    A = B\n";
        let doc = parse_model(text).unwrap();
        assert_eq!(doc.time_frame.start_year, 1999);
        assert_eq!(doc.time_frame.period_count, 2);
    }

    #[test]
    fn categories_block_with_bullets_and_depth() {
        let text = "Each period is one year.\n\
                    The number of periods is 1.\n\
                    The first period starts in 2005.\n\
                    Categories:\n\
                    Markets =\n\
                    - 1 North America\n\
                    \u{2013} 1.1 Canada\n\
                      - 1.2 United States\n\
                    2 European Union\n\
                    2.1 United Kingdom\n\
                    2.2 France\n\
                    Report: R\n\
                    A = B\n";
        let doc = parse_model(text).unwrap();
        let h = &doc.hierarchies[0];
        assert_eq!(h.title, "Markets");
        assert_eq!(h.roots.len(), 2);
        assert_eq!(h.roots[0].name, "North America");
        assert_eq!(h.roots[0].children[0].name, "Canada");
        assert_eq!(h.roots[1].children[1].name, "France");
        assert_eq!(h.leaf_paths().len(), 4);
    }

    #[test]
    fn outline_depth_jump_is_an_error() {
        let text = "Each period is one year.\n\
                    The number of periods is 1.\n\
                    The first period starts in 2005.\n\
                    Categories:\n\
                    Markets =\n\
                    1 North America\n\
                    1.1.1 Toronto\n";
        let err = parse_model(text).unwrap_err();
        assert!(matches!(err, ParseError::MalformedCategoryLine { line: 7, .. }), "{err}");
    }

    #[test]
    fn duplicate_hierarchy_title_rejected() {
        let text = "Each period is one year.\n\
                    The number of periods is 1.\n\
                    The first period starts in 2005.\n\
                    Categories:\n\
                    Markets =\n\
                    1 A\n\
                    markets =\n\
                    1 B\n";
        let err = parse_model(text).unwrap_err();
        assert!(matches!(err, ParseError::DuplicateHierarchyTitle { line: 7, .. }), "{err}");
    }

    #[test]
    fn missing_time_frame_reported() {
        let err = parse_model("Report: X\nA = B\n").unwrap_err();
        match err {
            ParseError::MissingTimeFrame { missing } => assert_eq!(missing.len(), 3),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn conflicting_restatement_rejected() {
        let text = "Each period is one year.\n\
                    The number of periods is 3.\n\
                    The number of periods is 4.\n";
        let err = parse_model(text).unwrap_err();
        assert!(matches!(err, ParseError::MalformedTimeFrame { line: 3, .. }), "{err}");
    }

    #[test]
    fn unrecognized_preamble_line_carries_content() {
        let text = "Each period is one year.\nOnce upon a time.\n";
        let err = parse_model(text).unwrap_err();
        match err {
            ParseError::UnrecognizedLine { line, content } => {
                assert_eq!(line, 2);
                assert_eq!(content, "Once upon a time.");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unicode_dashes_and_signs_in_formulas() {
        let e = parse_expression("Gross Profit \u{2013} Selling Costs").unwrap();
        assert_eq!(e.to_string(), "Gross Profit - Selling Costs");
        let e = parse_expression("A \u{d7} B \u{f7} C").unwrap();
        assert_eq!(e.to_string(), "A * B / C");
    }

    #[test]
    fn numbers_with_thousands_separators_and_decimals() {
        assert_eq!(parse_expression("1,234.5").unwrap(), Expr::Number(1234.5));
        assert_eq!(parse_expression("-12").unwrap(), Expr::Number(-12.0));
        assert_eq!(parse_expression("+0.25").unwrap(), Expr::Number(0.25));
    }

    #[test]
    fn words_with_digits_join_identifiers() {
        let e = parse_expression("Tier1 Revenue + C38").unwrap();
        match &e {
            Expr::Binary { op: BinOp::Add, lhs, rhs } => {
                assert_eq!(**lhs, Expr::Variable("Tier1 Revenue".into()));
                assert_eq!(**rhs, Expr::Variable("C38".into()));
            }
            other => panic!("unexpected shape {other:?}"),
        }
    }

    #[test]
    fn pure_numbers_never_join_identifiers() {
        let err = parse_expression("C 38").unwrap_err();
        assert!(err.to_string().contains("expected an operator"), "{err}");
    }

    #[test]
    fn precedence_and_parens() {
        let e = parse_expression("A + B * C").unwrap();
        assert_eq!(e.to_string(), "A + B * C");
        match e {
            Expr::Binary { op: BinOp::Add, rhs, .. } => {
                assert!(matches!(*rhs, Expr::Binary { op: BinOp::Mul, .. }));
            }
            other => panic!("unexpected shape {other:?}"),
        }
        let e = parse_expression("(A + B) * C").unwrap();
        assert!(matches!(e, Expr::Binary { op: BinOp::Mul, .. }));
    }

    #[test]
    fn left_associativity() {
        let e = parse_expression("A - B - C").unwrap();
        match e {
            Expr::Binary { op: BinOp::Sub, lhs, rhs } => {
                assert!(matches!(*lhs, Expr::Binary { op: BinOp::Sub, .. }));
                assert_eq!(*rhs, Expr::Variable("C".into()));
            }
            other => panic!("unexpected shape {other:?}"),
        }
    }

    #[test]
    fn malformed_expressions_are_rejected() {
        for bad in ["", "Turnover +", "* A", "(A + B", "A + B)", "()", "- X", "A = B", "1.2.3"] {
            assert!(parse_expression(bad).is_err(), "expected error for {bad:?}");
        }
    }

    #[test]
    fn formula_target_must_be_a_name() {
        let text = "Each period is one year.\n\
                    The number of periods is 1.\n\
                    The first period starts in 2005.\n\
                    Report: R\n\
                    2 = A\n";
        let err = parse_model(text).unwrap_err();
        assert!(matches!(err, ParseError::MalformedFormula { line: 5, .. }), "{err}");
    }

    #[test]
    fn trailing_sentence_period_after_formula_tolerated() {
        let text = "Each period is one year.\n\
                    The number of periods is 1.\n\
                    The first period starts in 2005.\n\
                    Report: R\n\
                    Profit = Turnover - Costs.\n";
        let doc = parse_model(text).unwrap();
        assert_eq!(doc.reports[0].formulas[0].body.to_string(), "Turnover - Costs");
    }

    #[test]
    fn comments_and_crlf_are_transparent() {
        let text = "Each period is one year.\r\n\
                    # a comment\r\n\
                    The number of periods is 2.\r\n\
                    The first period starts in 2005.\r\n\
                    Report: R\r\n\
                    # formulas below\r\n\
                    A = B + C\r\n";
        let doc = parse_model(text).unwrap();
        assert_eq!(doc.reports[0].formulas.len(), 1);
    }

    #[test]
    fn duplicate_sibling_category_rejected() {
        let text = "Each period is one year.\n\
                    The number of periods is 1.\n\
                    The first period starts in 2005.\n\
                    Categories:\n\
                    Markets =\n\
                    1 France\n\
                    2 France\n";
        let err = parse_model(text).unwrap_err();
        assert!(matches!(err, ParseError::MalformedCategoryLine { .. }), "{err}");
    }

    #[test]
    fn start_year_must_be_bare() {
        let text = "Each period is one year.\n\
                    The number of periods is 1.\n\
                    The first period starts in March 2005.\n";
        let err = parse_model(text).unwrap_err();
        assert!(matches!(err, ParseError::MalformedTimeFrame { line: 3, .. }), "{err}");
    }
}
