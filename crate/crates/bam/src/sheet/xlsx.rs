//! .xlsx rendering.
//!
//! Writes the minimal set of OOXML parts: content types, package
//! relationships, the workbook (sheet list, defined names, a full-recalc
//! flag), a style part derived from the style table, and one worksheet part
//! per sheet. Formulas are emitted verbatim since they already use defined
//! names only; evaluated results ride along as cached values so the file
//! shows numbers even before a spreadsheet engine recalculates. Zip entries
//! use a fixed timestamp, so rendering is byte deterministic.

use std::io::{Cursor, Write};

use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, ZipWriter};

use super::{validate, CellContent, CellStyle, SheetError, Value, WorkbookModel};

const MAIN_NS: &str = "http://schemas.openxmlformats.org/spreadsheetml/2006/main";
const REL_NS: &str = "http://schemas.openxmlformats.org/officeDocument/2006/relationships";

/// Render the workbook as an .xlsx byte stream.
pub fn render_xlsx(workbook: &WorkbookModel) -> Result<Vec<u8>, SheetError> {
    validate(workbook)?;
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(zip::DateTime::default());

    let put = |zip: &mut ZipWriter<Cursor<Vec<u8>>>, path: &str, body: String| {
        zip.start_file(path, options)
            .and_then(|()| zip.write_all(body.as_bytes()).map_err(Into::into))
            .map_err(|e| SheetError::RenderFailed { reason: e.to_string() })
    };

    put(&mut zip, "[Content_Types].xml", content_types(workbook))?;
    put(&mut zip, "_rels/.rels", package_rels())?;
    put(&mut zip, "xl/workbook.xml", workbook_xml(workbook))?;
    put(&mut zip, "xl/_rels/workbook.xml.rels", workbook_rels(workbook))?;
    put(&mut zip, "xl/styles.xml", styles_xml(&workbook.styles))?;
    for (idx, _) in workbook.sheets.iter().enumerate() {
        put(
            &mut zip,
            &format!("xl/worksheets/sheet{}.xml", idx + 1),
            worksheet_xml(workbook, idx),
        )?;
    }

    zip.finish()
        .map(|cursor| cursor.into_inner())
        .map_err(|e| SheetError::RenderFailed { reason: e.to_string() })
}

fn content_types(workbook: &WorkbookModel) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n\
         <Types xmlns=\"http://schemas.openxmlformats.org/package/2006/content-types\">\
         <Default Extension=\"rels\" ContentType=\"application/vnd.openxmlformats-package.relationships+xml\"/>\
         <Default Extension=\"xml\" ContentType=\"application/xml\"/>\
         <Override PartName=\"/xl/workbook.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml\"/>\
         <Override PartName=\"/xl/styles.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.styles+xml\"/>",
    );
    for idx in 0..workbook.sheets.len() {
        out.push_str(&format!(
            "<Override PartName=\"/xl/worksheets/sheet{}.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml\"/>",
            idx + 1
        ));
    }
    out.push_str("</Types>");
    out
}

fn package_rels() -> String {
    "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n\
     <Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">\
     <Relationship Id=\"rId1\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument\" Target=\"xl/workbook.xml\"/>\
     </Relationships>"
        .to_string()
}

fn workbook_xml(workbook: &WorkbookModel) -> String {
    let mut out = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n\
         <workbook xmlns=\"{MAIN_NS}\" xmlns:r=\"{REL_NS}\"><sheets>"
    );
    for (idx, sheet) in workbook.sheets.iter().enumerate() {
        out.push_str(&format!(
            "<sheet name=\"{}\" sheetId=\"{}\" r:id=\"rId{}\"/>",
            esc_attr(&sheet.name),
            idx + 1,
            idx + 1
        ));
    }
    out.push_str("</sheets><definedNames>");
    let mut names: Vec<_> = workbook.names.iter().collect();
    names.sort_by(|a, b| a.name.cmp(&b.name));
    for name in names {
        let sheet = &workbook.sheets[name.sheet].name;
        let reference = format!(
            "'{}'!${}${}:${}${}",
            sheet.replace('\'', "''"),
            col_letters(name.col_first),
            name.row + 1,
            col_letters(name.col_last),
            name.row + 1
        );
        out.push_str(&format!(
            "<definedName name=\"{}\">{}</definedName>",
            esc_attr(&name.name),
            esc_text(&reference)
        ));
    }
    out.push_str("</definedNames><calcPr calcId=\"0\" fullCalcOnLoad=\"1\"/></workbook>");
    out
}

fn workbook_rels(workbook: &WorkbookModel) -> String {
    let mut out = String::from(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n\
         <Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">",
    );
    for idx in 0..workbook.sheets.len() {
        out.push_str(&format!(
            "<Relationship Id=\"rId{}\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/worksheet\" Target=\"worksheets/sheet{}.xml\"/>",
            idx + 1,
            idx + 1
        ));
    }
    out.push_str(&format!(
        "<Relationship Id=\"rId{}\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/styles\" Target=\"styles.xml\"/>",
        workbook.sheets.len() + 1
    ));
    out.push_str("</Relationships>");
    out
}

/// Number format ids built into the format; anything else becomes a custom
/// format from 164 up.
fn builtin_numfmt(format: &str) -> Option<usize> {
    match format {
        "General" => Some(0),
        "0" => Some(1),
        "0.00" => Some(2),
        "#,##0" => Some(3),
        "#,##0.00" => Some(4),
        _ => None,
    }
}

fn styles_xml(styles: &[CellStyle]) -> String {
    // Custom number formats, deduplicated, in first-use order.
    let mut custom: Vec<&str> = Vec::new();
    let mut numfmt_ids = Vec::with_capacity(styles.len());
    for style in styles {
        let id = match &style.number_format {
            None => 0,
            Some(f) => builtin_numfmt(f).unwrap_or_else(|| {
                match custom.iter().position(|c| *c == f.as_str()) {
                    Some(pos) => 164 + pos,
                    None => {
                        custom.push(f);
                        164 + custom.len() - 1
                    }
                }
            }),
        };
        numfmt_ids.push(id);
    }

    // Fills 0 and 1 are required defaults; customs follow, deduplicated.
    let mut fills: Vec<&str> = Vec::new();
    let fill_ids: Vec<usize> = styles
        .iter()
        .map(|s| match &s.fill {
            None => 0,
            Some(f) => match fills.iter().position(|c| c == f) {
                Some(pos) => 2 + pos,
                None => {
                    fills.push(f);
                    2 + fills.len() - 1
                }
            },
        })
        .collect();

    let mut out = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n\
         <styleSheet xmlns=\"{MAIN_NS}\">"
    );
    if !custom.is_empty() {
        out.push_str(&format!("<numFmts count=\"{}\">", custom.len()));
        for (pos, format) in custom.iter().enumerate() {
            out.push_str(&format!(
                "<numFmt numFmtId=\"{}\" formatCode=\"{}\"/>",
                164 + pos,
                esc_attr(format)
            ));
        }
        out.push_str("</numFmts>");
    }
    out.push_str(
        "<fonts count=\"1\"><font><sz val=\"11\"/><name val=\"Calibri\"/></font></fonts>",
    );
    out.push_str(&format!("<fills count=\"{}\">", 2 + fills.len()));
    out.push_str("<fill><patternFill patternType=\"none\"/></fill>");
    out.push_str("<fill><patternFill patternType=\"gray125\"/></fill>");
    for fill in &fills {
        out.push_str(&format!(
            "<fill><patternFill patternType=\"solid\"><fgColor rgb=\"FF{}\"/></patternFill></fill>",
            esc_attr(fill)
        ));
    }
    out.push_str("</fills>");
    out.push_str(
        "<borders count=\"1\"><border><left/><right/><top/><bottom/><diagonal/></border></borders>",
    );
    out.push_str(
        "<cellStyleXfs count=\"1\"><xf numFmtId=\"0\" fontId=\"0\" fillId=\"0\" borderId=\"0\"/></cellStyleXfs>",
    );
    out.push_str(&format!("<cellXfs count=\"{}\">", styles.len() + 1));
    out.push_str("<xf numFmtId=\"0\" fontId=\"0\" fillId=\"0\" borderId=\"0\" xfId=\"0\"/>");
    for (idx, style) in styles.iter().enumerate() {
        out.push_str(&format!(
            "<xf numFmtId=\"{}\" fontId=\"0\" fillId=\"{}\" borderId=\"0\" xfId=\"0\"",
            numfmt_ids[idx], fill_ids[idx]
        ));
        if numfmt_ids[idx] != 0 {
            out.push_str(" applyNumberFormat=\"1\"");
        }
        if fill_ids[idx] != 0 {
            out.push_str(" applyFill=\"1\"");
        }
        if !style.locked {
            out.push_str(" applyProtection=\"1\"><protection locked=\"0\"/></xf>");
        } else {
            out.push_str("/>");
        }
    }
    out.push_str("</cellXfs></styleSheet>");
    out
}

fn worksheet_xml(workbook: &WorkbookModel, sheet_idx: usize) -> String {
    let sheet = &workbook.sheets[sheet_idx];
    let mut out = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n\
         <worksheet xmlns=\"{MAIN_NS}\"><sheetPr><outlinePr summaryBelow=\"1\"/></sheetPr>"
    );
    out.push_str(&format!(
        "<cols><col min=\"1\" max=\"1\" width=\"{}\" customWidth=\"1\"/></cols>",
        workbook.label_column_width
    ));
    out.push_str("<sheetData>");
    for (row_idx, row) in sheet.rows.iter().enumerate() {
        if row.cells.is_empty() {
            continue;
        }
        out.push_str(&format!("<row r=\"{}\"", row_idx + 1));
        if row.outline > 0 {
            out.push_str(&format!(" outlineLevel=\"{}\"", row.outline));
        }
        out.push('>');
        for (col, cell) in &row.cells {
            let reference = format!("{}{}", col_letters(*col), row_idx + 1);
            // cellXfs index 0 is the bare default; model styles start at 1.
            let s = cell.style + 1;
            match &cell.content {
                CellContent::Empty => {
                    out.push_str(&format!("<c r=\"{reference}\" s=\"{s}\"/>"));
                }
                CellContent::Text(text) => {
                    out.push_str(&format!(
                        "<c r=\"{reference}\" s=\"{s}\" t=\"inlineStr\"><is><t{}>{}</t></is></c>",
                        preserve_space(text),
                        esc_text(text)
                    ));
                }
                CellContent::Number(v) => {
                    out.push_str(&format!("<c r=\"{reference}\" s=\"{s}\"><v>{v}</v></c>"));
                }
                CellContent::Formula { expr, cached } => {
                    let formula = esc_text(&expr.to_string());
                    match cached {
                        Some(Value::Num(v)) => out.push_str(&format!(
                            "<c r=\"{reference}\" s=\"{s}\"><f>{formula}</f><v>{v}</v></c>"
                        )),
                        Some(Value::Undefined) => out.push_str(&format!(
                            "<c r=\"{reference}\" s=\"{s}\" t=\"e\"><f>{formula}</f><v>#DIV/0!</v></c>"
                        )),
                        None => out.push_str(&format!(
                            "<c r=\"{reference}\" s=\"{s}\"><f>{formula}</f></c>"
                        )),
                    }
                }
            }
        }
        out.push_str("</row>");
    }
    out.push_str("</sheetData>");
    if sheet.protected {
        out.push_str("<sheetProtection sheet=\"1\" objects=\"1\" scenarios=\"1\"/>");
    }
    out.push_str("</worksheet>");
    out
}

fn preserve_space(text: &str) -> &'static str {
    if text.starts_with(' ') || text.ends_with(' ') {
        " xml:space=\"preserve\""
    } else {
        ""
    }
}

/// 0-based column index to letters: 0 -> A, 1 -> B, 26 -> AA.
pub fn col_letters(col: usize) -> String {
    let mut n = col + 1;
    let mut out = Vec::new();
    while n > 0 {
        let rem = (n - 1) % 26;
        out.push(b'A' + rem as u8);
        n = (n - 1) / 26;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

fn esc_text(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn esc_attr(s: &str) -> String {
    esc_text(s).replace('"', "&quot;")
}
