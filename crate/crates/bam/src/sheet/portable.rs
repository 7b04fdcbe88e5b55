//! Canonical text rendering of a workbook.
//!
//! The portable format is a deterministic, line-oriented dump of everything
//! a spreadsheet backend would need: styles, defined names with their
//! regions, and every styled cell with its content. It diffs cleanly and is
//! easy to inspect in review, which makes it the reference output for tests.

use std::fmt::Write as _;

use super::{validate, CellContent, SheetError, Value, WorkbookModel};

/// Render the workbook into the canonical text form. The workbook is
/// validated first so the output always describes a well-formed book.
pub fn render_portable(workbook: &WorkbookModel) -> Result<String, SheetError> {
    validate(workbook)?;
    let mut out = String::new();
    out.push_str("bamwb 1\n");
    let _ = writeln!(out, "label_column_width {}", workbook.label_column_width);

    for (idx, style) in workbook.styles.iter().enumerate() {
        let _ = write!(out, "style {idx} locked={}", style.locked);
        if let Some(fill) = &style.fill {
            let _ = write!(out, " fill={fill}");
        }
        if let Some(format) = &style.number_format {
            let _ = write!(out, " format={}", quote(format));
        }
        out.push('\n');
    }

    let mut names: Vec<_> = workbook.names.iter().collect();
    names.sort_by(|a, b| a.name.cmp(&b.name));
    for name in names {
        let _ = writeln!(
            out,
            "name {} sheet={} row={} cols={}..{}",
            quote(&name.name),
            name.sheet,
            name.row,
            name.col_first,
            name.col_last
        );
    }

    for (idx, sheet) in workbook.sheets.iter().enumerate() {
        let _ = writeln!(out, "sheet {idx} {} protected={}", quote(&sheet.name), sheet.protected);
        for (row_idx, row) in sheet.rows.iter().enumerate() {
            if row.cells.is_empty() && row.outline == 0 && row.binding.is_none() {
                continue;
            }
            let _ = write!(out, "row {row_idx} outline={}", row.outline);
            if let Some(binding) = &row.binding {
                let _ = write!(out, " var={} cat={}", quote(&binding.variable), quote(&binding.category));
            }
            out.push('\n');
            for (col, cell) in &row.cells {
                let _ = write!(out, "cell {col} style={}", cell.style);
                match &cell.content {
                    CellContent::Empty => out.push_str(" empty"),
                    CellContent::Text(text) => {
                        let _ = write!(out, " text={}", quote(text));
                    }
                    CellContent::Number(v) => {
                        let _ = write!(out, " number={v}");
                    }
                    CellContent::Formula { expr, cached } => {
                        let _ = write!(out, " formula={}", quote(&expr.to_string()));
                        match cached {
                            Some(Value::Num(v)) => {
                                let _ = write!(out, " cached={v}");
                            }
                            Some(Value::Undefined) => out.push_str(" cached=undefined"),
                            None => {}
                        }
                    }
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}

/// Double-quoted string with backslash escapes for quotes, backslashes and
/// line breaks.
fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::RollupMode;
    use crate::grid::expand;
    use crate::model::analyze;
    use crate::parser::parse_model;
    use crate::sheet::{build_workbook, StyleConfig};

    fn sample() -> WorkbookModel {
        let text = "Each period is one year.\n\
                    The number of periods is 2.\n\
                    The first period starts in 2005.\n\
                    Categories:\n\
                    Markets =\n\
                    1 North\n\
                    2 South\n\
                    Report: Results\n\
                    Breakdown by Markets\n\
                    Profit = Turnover - Costs\n";
        let model = analyze(parse_model(text).unwrap()).unwrap();
        let grid = expand(&model);
        build_workbook(&model, &grid, &StyleConfig::default(), RollupMode::default()).unwrap()
    }

    #[test]
    fn output_is_versioned_and_deterministic() {
        let wb = sample();
        let a = render_portable(&wb).unwrap();
        let b = render_portable(&wb).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("bamwb 1\n"));
        assert!(a.contains("label_column_width 34"));
    }

    #[test]
    fn names_are_sorted() {
        let wb = sample();
        let text = render_portable(&wb).unwrap();
        let names: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("name "))
            .collect();
        assert_eq!(names.len(), wb.names.len());
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn cells_carry_styles_and_formulas() {
        let wb = sample();
        let text = render_portable(&wb).unwrap();
        assert!(text.contains("style 1 locked=false fill=FFF2CC format=\"#,##0\""));
        assert!(text.contains(" empty"));
        assert!(text.contains("formula=\"Turnover__North - Costs__North\""));
        assert!(text.contains("var=\"Profit\" cat=\"All Markets\""));
    }

    #[test]
    fn quoting_escapes_specials() {
        assert_eq!(quote("plain"), "\"plain\"");
        assert_eq!(quote("a\"b"), "\"a\\\"b\"");
        assert_eq!(quote("a\\b"), "\"a\\\\b\"");
        assert_eq!(quote("a\nb"), "\"a\\nb\"");
    }

    #[test]
    fn invalid_workbooks_do_not_render() {
        let mut wb = sample();
        wb.names[0].name = "A1".into();
        assert!(render_portable(&wb).is_err());
    }
}
