//! Shared integration-test helpers.
//!
//! The centerpiece is an independent interpreter for generated workbooks: it
//! recomputes every cell from the defined-name graph alone, the way a
//! spreadsheet engine would, and never touches the library's evaluator. The
//! two routes are compared bit for bit. There is also a scanner proving that
//! formulas contain no cell-address tokens.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;

use bam::ast::BinOp;
use bam::eval::{load_inputs, Value, ValueCube};
use bam::grid::InstanceSpace;
use bam::model::{analyze, SemanticModel};
use bam::parser::parse_model;
use bam::sheet::{CellContent, NamedExpr, WorkbookModel};

/// Interpreter value domain, deliberately separate from the library's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IValue {
    Num(f64),
    Undef,
}

fn apply(op: BinOp, lhs: IValue, rhs: IValue) -> IValue {
    let (IValue::Num(a), IValue::Num(b)) = (lhs, rhs) else {
        return IValue::Undef;
    };
    match op {
        BinOp::Add => IValue::Num(a + b),
        BinOp::Sub => IValue::Num(a - b),
        BinOp::Mul => IValue::Num(a * b),
        BinOp::Div => {
            if b == 0.0 {
                IValue::Undef
            } else {
                IValue::Num(a / b)
            }
        }
    }
}

/// Evaluates workbook cells from names and formulas only. Cached formula
/// results are ignored; empty cells count as zero, like a blank input cell
/// in a spreadsheet.
pub struct Interpreter<'a> {
    workbook: &'a WorkbookModel,
    names: HashMap<&'a str, (usize, usize, usize, usize)>,
    memo: HashMap<(usize, usize, usize), IValue>,
    in_progress: HashSet<(usize, usize, usize)>,
}

impl<'a> Interpreter<'a> {
    pub fn new(workbook: &'a WorkbookModel) -> Self {
        let names = workbook
            .names
            .iter()
            .map(|n| (n.name.as_str(), (n.sheet, n.row, n.col_first, n.col_last)))
            .collect();
        Interpreter { workbook, names, memo: HashMap::new(), in_progress: HashSet::new() }
    }

    pub fn cell_value(&mut self, sheet: usize, row: usize, col: usize) -> IValue {
        let key = (sheet, row, col);
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }
        assert!(self.in_progress.insert(key), "formula cycle through cell {key:?}");
        let content = self.workbook.sheets[sheet].rows[row]
            .cell(col)
            .map(|c| c.content.clone());
        let value = match content {
            None | Some(CellContent::Empty) => IValue::Num(0.0),
            Some(CellContent::Number(v)) => IValue::Num(v),
            Some(CellContent::Text(t)) => panic!("formula referenced text cell {key:?} ({t})"),
            Some(CellContent::Formula { expr, .. }) => self.eval(&expr, col),
        };
        self.in_progress.remove(&key);
        self.memo.insert(key, value);
        value
    }

    /// Implicit intersection: a name inside a formula resolves to the named
    /// row's cell in the formula's own column.
    fn eval(&mut self, expr: &NamedExpr, col: usize) -> IValue {
        match expr {
            NamedExpr::Name(name) => {
                let (sheet, row, first, last) =
                    *self.names.get(name.as_str()).unwrap_or_else(|| panic!("unknown name {name}"));
                assert!(
                    (first..=last).contains(&col),
                    "name {name} does not cover column {col}"
                );
                self.cell_value(sheet, row, col)
            }
            NamedExpr::Number(v) => IValue::Num(*v),
            NamedExpr::Binary { op, lhs, rhs } => {
                let l = self.eval(lhs, col);
                let r = self.eval(rhs, col);
                apply(*op, l, r)
            }
            NamedExpr::Paren(inner) => self.eval(inner, col),
        }
    }
}

/// Recompute every bound row through the interpreter and require bit-exact
/// agreement with the evaluated cube. The workbook must have been seeded
/// with the same inputs the cube was evaluated from.
pub fn assert_workbook_matches_cube(
    workbook: &WorkbookModel,
    model: &SemanticModel,
    space: &InstanceSpace,
    cube: &ValueCube,
) -> usize {
    let mut interp = Interpreter::new(workbook);
    let mut checked = 0usize;
    for (sheet_idx, sheet) in workbook.sheets.iter().enumerate() {
        for (row_idx, row) in sheet.rows.iter().enumerate() {
            let Some(binding) = &row.binding else { continue };
            let var = model.lookup(&binding.variable).expect("bound variable exists");
            let coord = space
                .coord_by_text(var, &binding.category)
                .expect("bound category exists");
            let inst = space.instance(var, coord).expect("bound instance exists");
            for p in 0..space.period_count {
                let got = interp.cell_value(sheet_idx, row_idx, 1 + p);
                let want = cube.get(inst, p).expect("evaluation fills every instance");
                let agree = match (got, want) {
                    (IValue::Num(g), Value::Num(w)) => g.to_bits() == w.to_bits(),
                    (IValue::Undef, Value::Undefined) => true,
                    _ => false,
                };
                assert!(
                    agree,
                    "{}[{}] period {p}: interpreter {got:?} vs evaluator {want:?}",
                    binding.variable, binding.category
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 0, "no bound rows were compared");
    checked
}

/// Formula strings from a portable render, unescaped.
pub fn portable_formulas(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let Some(pos) = line.find(" formula=\"") else { continue };
        let rest = &line[pos + " formula=\"".len()..];
        let mut formula = String::new();
        let mut chars = rest.chars();
        while let Some(c) = chars.next() {
            match c {
                '"' => break,
                '\\' => match chars.next() {
                    Some('n') => formula.push('\n'),
                    Some('r') => formula.push('\r'),
                    Some(other) => formula.push(other),
                    None => break,
                },
                _ => formula.push(c),
            }
        }
        out.push(formula);
    }
    out
}

/// Formula strings from the worksheet parts of an .xlsx archive.
pub fn xlsx_formulas(bytes: &[u8]) -> Vec<String> {
    let mut archive = zip::ZipArchive::new(std::io::Cursor::new(bytes)).expect("zip opens");
    let re = regex::Regex::new("<f>(.*?)</f>").unwrap();
    let names: Vec<String> = archive.file_names().map(String::from).collect();
    let mut out = Vec::new();
    for name in names {
        if !name.starts_with("xl/worksheets/") {
            continue;
        }
        let mut xml = String::new();
        std::io::Read::read_to_string(&mut archive.by_name(&name).unwrap(), &mut xml).unwrap();
        for cap in re.captures_iter(&xml) {
            let formula = cap[1]
                .replace("&lt;", "<")
                .replace("&gt;", ">")
                .replace("&amp;", "&");
            out.push(formula);
        }
    }
    out
}

/// Tokens in a formula that look like cell addresses (A1 or R1C1 style).
pub fn address_tokens(formula: &str) -> Vec<String> {
    let token_re = regex::Regex::new(r"[A-Za-z0-9_$]+").unwrap();
    let a1 = regex::Regex::new(r"^\$?[A-Za-z]{1,3}\$?[0-9]{1,7}$").unwrap();
    let r1c1 = regex::Regex::new(r"^[Rr](\[?-?[0-9]+\]?)?[Cc](\[?-?[0-9]+\]?)?$").unwrap();
    token_re
        .find_iter(formula)
        .map(|m| m.as_str().to_string())
        .filter(|t| a1.is_match(t) || r1c1.is_match(t))
        .collect()
}

/// Look up one evaluated cell by variable name, category text and period.
pub fn cube_cell(
    model: &SemanticModel,
    space: &InstanceSpace,
    cube: &ValueCube,
    var: &str,
    category: &str,
    period: usize,
) -> Value {
    let v = model.lookup(var).unwrap_or_else(|| panic!("unknown variable {var}"));
    let c = space
        .coord_by_text(v, category)
        .unwrap_or_else(|| panic!("unknown category {category} for {var}"));
    let inst = space.instance(v, c).expect("instance exists");
    cube.get(inst, period).expect("cell evaluated")
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name))
        .unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

/// The example model, parsed and analyzed.
pub fn sample_model() -> SemanticModel {
    analyze(parse_model(&fixture("sample.bam")).expect("sample parses")).expect("sample analyzes")
}

/// The example model's input data.
pub fn uk_inputs(model: &SemanticModel, space: &InstanceSpace) -> ValueCube {
    load_inputs(fixture("uk.csv").as_bytes(), model, space).expect("fixture data loads")
}
