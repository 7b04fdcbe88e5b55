//! End-to-end pipeline over the bundled example model: parse, analyze,
//! expand, evaluate, build a workbook, render both backends, and cross-check
//! the generated formulas with an independent interpreter.

mod common;

use std::io::Read as _;

use bam::eval::{cube_to_csv, evaluate, EvalOptions, RollupMode, Value};
use bam::grid::expand;
use bam::sheet::portable::render_portable;
use bam::sheet::xlsx::render_xlsx;
use bam::sheet::{
    attach_computed, build_workbook, seed_inputs, validate, CellContent, StyleConfig, STYLE_INPUT,
    STYLE_RATIO,
};

#[test]
fn fixture_pipeline_both_backends_and_rollup_modes() {
    let model = common::sample_model();
    let grid = expand(&model);
    let inputs = common::uk_inputs(&model, &grid.space);
    let style = StyleConfig::default();

    for rollup in [RollupMode::Recompute, RollupMode::Sum] {
        let options = EvalOptions { rollup, strict: false };
        let result = evaluate(&model, &grid.space, &inputs, options).expect("evaluates");
        // Data covers one of four leaf markets; the rest default to zero.
        assert_eq!(result.warnings.len(), 14 * 3);

        let mut workbook = build_workbook(&model, &grid, &style, rollup).expect("builds");
        seed_inputs(&mut workbook, &model, &grid.space, &inputs).expect("seeds");
        attach_computed(&mut workbook, &model, &grid.space, &result.cube).expect("attaches");
        validate(&workbook).expect("workbook validates");

        // The spreadsheet formula graph reproduces evaluation bit for bit.
        let checked = common::assert_workbook_matches_cube(&workbook, &model, &grid.space, &result.cube);
        // 23 variables x 7 category slices x 3 periods, each row compared
        // once per sheet it appears on (duplicated rows mirror the owner).
        assert!(checked >= 23 * 7 * 3, "compared {checked} cells");

        let portable = render_portable(&workbook).expect("portable renders");
        assert!(portable.starts_with("bamwb 1\n"));
        let xlsx = render_xlsx(&workbook).expect("xlsx renders");
        assert_eq!(&xlsx[..2], b"PK");
    }
}

#[test]
fn fixture_workbook_structure() {
    let model = common::sample_model();
    let grid = expand(&model);
    let style = StyleConfig::default();
    let workbook = build_workbook(&model, &grid, &style, RollupMode::default()).expect("builds");

    let sheet_names: Vec<&str> = workbook.sheets.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(sheet_names, ["Assumptions", "Profit And Loss", "Liquidity Analysis"]);

    // One defined name per variable and category slice.
    assert_eq!(workbook.names.len(), 23 * 7);

    // Header rows: a title row, the period row (years as numbers for a
    // yearly frame), and a zero-based period index row.
    let period_row = &workbook.sheets[0].rows[1];
    let number_at = |row: &bam::sheet::Row, col: usize| match &row.cell(col).unwrap().content {
        CellContent::Number(v) => *v,
        other => panic!("expected number header, got {other:?}"),
    };
    assert_eq!(
        (number_at(period_row, 1), number_at(period_row, 2), number_at(period_row, 3)),
        (2005.0, 2006.0, 2007.0)
    );
    let index_row = &workbook.sheets[0].rows[2];
    assert_eq!(
        (number_at(index_row, 1), number_at(index_row, 2), number_at(index_row, 3)),
        (0.0, 1.0, 2.0)
    );

    // Inputs live on the assumptions sheet as unlocked leaf cells.
    let assumptions = &workbook.sheets[0];
    let mut unlocked = 0usize;
    for row in &assumptions.rows {
        for (_, cell) in &row.cells {
            if cell.style == STYLE_INPUT {
                assert!(!workbook.styles[cell.style].locked);
                unlocked += 1;
            }
        }
    }
    // 14 inputs x 4 leaf markets x 3 periods.
    assert_eq!(unlocked, 14 * 4 * 3);

    // Division formulas pick up the ratio format; additive ones do not.
    let ratio_vars = |sheet: &bam::sheet::Sheet| -> Vec<String> {
        sheet
            .rows
            .iter()
            .filter(|r| r.cells.iter().any(|(_, c)| c.style == STYLE_RATIO))
            .filter_map(|r| r.binding.as_ref().map(|b| b.variable.clone()))
            .collect()
    };
    let mut liquidity_ratios = ratio_vars(&workbook.sheets[2]);
    liquidity_ratios.sort();
    liquidity_ratios.dedup();
    assert_eq!(liquidity_ratios, ["Cash Ratio", "Current Ratio", "Operating Cash Flow Ratio"]);
    assert!(ratio_vars(&workbook.sheets[1]).is_empty());
}

#[test]
fn fixture_xlsx_written_to_disk_reopens_with_expected_parts() {
    let model = common::sample_model();
    let grid = expand(&model);
    let inputs = common::uk_inputs(&model, &grid.space);
    let result =
        evaluate(&model, &grid.space, &inputs, EvalOptions::default()).expect("evaluates");
    let style = StyleConfig::default();
    let mut workbook =
        build_workbook(&model, &grid, &style, RollupMode::default()).expect("builds");
    seed_inputs(&mut workbook, &model, &grid.space, &inputs).expect("seeds");
    attach_computed(&mut workbook, &model, &grid.space, &result.cube).expect("attaches");
    let bytes = render_xlsx(&workbook).expect("renders");

    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("sample.xlsx");
    std::fs::write(&path, &bytes).expect("writes");
    let reread = std::fs::read(&path).expect("rereads");
    assert_eq!(bytes, reread);

    let file = std::fs::File::open(&path).expect("opens");
    let mut archive = zip::ZipArchive::new(file).expect("zip parses");
    let mut parts: Vec<String> = archive.file_names().map(String::from).collect();
    parts.sort();
    assert_eq!(
        parts,
        [
            "[Content_Types].xml",
            "_rels/.rels",
            "xl/_rels/workbook.xml.rels",
            "xl/styles.xml",
            "xl/workbook.xml",
            "xl/worksheets/sheet1.xml",
            "xl/worksheets/sheet2.xml",
            "xl/worksheets/sheet3.xml",
        ]
    );

    // Worksheets declare protection; the workbook declares its names.
    let mut sheet1 = String::new();
    archive.by_name("xl/worksheets/sheet1.xml").unwrap().read_to_string(&mut sheet1).unwrap();
    assert!(sheet1.contains("<sheetProtection"));
    let mut wb_xml = String::new();
    archive.by_name("xl/workbook.xml").unwrap().read_to_string(&mut wb_xml).unwrap();
    assert_eq!(wb_xml.matches("<definedName ").count(), 23 * 7);
    assert!(wb_xml.contains("'Profit And Loss'!$B$"));
}

#[test]
fn fixture_eval_csv_round_trip_contains_displayed_slice() {
    let model = common::sample_model();
    let grid = expand(&model);
    let inputs = common::uk_inputs(&model, &grid.space);
    let result =
        evaluate(&model, &grid.space, &inputs, EvalOptions::default()).expect("evaluates");
    let csv = cube_to_csv(&model, &grid.space, &result.cube);
    assert!(csv.starts_with("variable,category,period,value\n"));
    // The UK leaf slice of Gross Profit in 2005 appears with its exact value.
    assert!(csv.contains("Gross Profit,European Union;United Kingdom,2005,24419"));

    // The cube reports numbers for every instance and period (inputs default
    // to zero; only division can make cells undefined).
    let undefined = grid
        .space
        .var_instances
        .iter()
        .flatten()
        .flat_map(|&inst| (0..grid.space.period_count).map(move |p| (inst, p)))
        .filter(|&(inst, p)| result.cube.get(inst, p) == Some(Value::Undefined))
        .count();
    // France (and other no-data markets) divide zero by zero in the ratio
    // lines; those surface as undefined rather than panicking.
    assert!(undefined > 0);
}
