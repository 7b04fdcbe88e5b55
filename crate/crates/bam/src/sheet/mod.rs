//! Spreadsheet generation.
//!
//! The builder turns an expanded model into a backend-neutral
//! [`WorkbookModel`]: an assumptions sheet holding every input cell and one
//! sheet per report holding its calculated rows. Every variable row is
//! covered by a defined name, and every generated formula is written purely
//! over those names; no cell addresses ever appear. Appearance and
//! protection come from an external [`StyleConfig`], with calculated cells
//! locked and input cells unlocked and filled.
//!
//! Renderers: [`portable::render_portable`] (a canonical text format) and
//! [`xlsx::render_xlsx`] (a .xlsx file).

pub mod names;
pub mod portable;
pub mod xlsx;

use std::collections::HashMap;
use std::fmt;

use crate::ast::{BinOp, Expr, TimeUnit};
use crate::eval::{RollupMode, Value, ValueCube};
use crate::grid::{CoordId, InstanceGrid, InstanceSpace, LayoutRow, RowKind, Selector};
use crate::model::{SemanticModel, VarKind};

use names::NameRegistry;

/// Workbook appearance and protection settings, independent of any model.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleConfig {
    /// Fill for editable input cells, as RRGGBB hex.
    pub input_fill: String,
    /// Whether calculated and roll-up cells are locked under protection.
    pub locked_calculated: bool,
    /// Number format for ordinary value cells.
    pub number_format: String,
    /// Number format for ratio cells (formulas whose top operator is `/`).
    pub ratio_format: String,
    /// Name of the sheet holding input sections.
    pub assumptions_sheet: String,
    /// Width of the label column.
    pub label_column_width: f64,
}

impl Default for StyleConfig {
    fn default() -> Self {
        StyleConfig {
            input_fill: "FFF2CC".into(),
            locked_calculated: true,
            number_format: "#,##0".into(),
            ratio_format: "0.00".into(),
            assumptions_sheet: "Assumptions".into(),
            label_column_width: 34.0,
        }
    }
}

/// Errors in a style configuration file.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StyleError {
    #[error("line {line}: expected 'key = value', got '{content}'")]
    BadLine { line: usize, content: String },
    #[error("line {line}: unknown style key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for '{key}': {reason}")]
    BadValue { line: usize, key: String, reason: String },
}

impl StyleConfig {
    /// Parse `key = value` lines; `#` comments and blank lines are ignored.
    /// Unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<StyleConfig, StyleError> {
        let mut config = StyleConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(StyleError::BadLine { line: line_no, content: line.to_string() });
            };
            let (key, value) = (key.trim(), value.trim());
            let bad = |reason: &str| StyleError::BadValue {
                line: line_no,
                key: key.to_string(),
                reason: reason.to_string(),
            };
            match key {
                "input_fill" => {
                    if value.len() != 6 || !value.bytes().all(|b| b.is_ascii_hexdigit()) {
                        return Err(bad("expected six hex digits (RRGGBB)"));
                    }
                    config.input_fill = value.to_ascii_uppercase();
                }
                "locked_calculated" => {
                    config.locked_calculated = match value {
                        "true" => true,
                        "false" => false,
                        _ => return Err(bad("expected 'true' or 'false'")),
                    };
                }
                "number_format" => config.number_format = value.to_string(),
                "ratio_format" => config.ratio_format = value.to_string(),
                "assumptions_sheet" => {
                    if value.is_empty() {
                        return Err(bad("sheet name must not be empty"));
                    }
                    config.assumptions_sheet = value.to_string();
                }
                "label_column_width" => {
                    config.label_column_width = value
                        .parse::<f64>()
                        .ok()
                        .filter(|w| w.is_finite() && *w > 0.0)
                        .ok_or_else(|| bad("expected a positive number"))?;
                }
                _ => return Err(StyleError::UnknownKey { line: line_no, key: key.to_string() }),
            }
        }
        Ok(config)
    }
}

/// A cell style: protection, optional fill, optional number format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellStyle {
    pub locked: bool,
    /// RRGGBB fill, if any.
    pub fill: Option<String>,
    pub number_format: Option<String>,
}

/// Formula expression over defined names only.
#[derive(Debug, Clone, PartialEq)]
pub enum NamedExpr {
    Name(String),
    Number(f64),
    Binary { op: BinOp, lhs: Box<NamedExpr>, rhs: Box<NamedExpr> },
    Paren(Box<NamedExpr>),
}

impl NamedExpr {
    pub fn for_each_name<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            NamedExpr::Name(n) => f(n),
            NamedExpr::Number(_) => {}
            NamedExpr::Binary { lhs, rhs, .. } => {
                lhs.for_each_name(f);
                rhs.for_each_name(f);
            }
            NamedExpr::Paren(inner) => inner.for_each_name(f),
        }
    }

    fn bare_binary_precedence(&self) -> Option<u8> {
        match self {
            NamedExpr::Binary { op, .. } => Some(op.precedence()),
            _ => None,
        }
    }
}

impl fmt::Display for NamedExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedExpr::Name(n) => f.write_str(n),
            NamedExpr::Number(v) => write!(f, "{v}"),
            NamedExpr::Binary { op, lhs, rhs } => {
                // Same parenthesization rules as the model expressions:
                // spreadsheet arithmetic is left associative too.
                let lhs_parens = lhs.bare_binary_precedence().is_some_and(|p| p < op.precedence());
                let rhs_parens = rhs.bare_binary_precedence().is_some_and(|p| p <= op.precedence());
                if lhs_parens {
                    write!(f, "({lhs})")?;
                } else {
                    write!(f, "{lhs}")?;
                }
                write!(f, " {} ", op.symbol())?;
                if rhs_parens {
                    write!(f, "({rhs})")
                } else {
                    write!(f, "{rhs}")
                }
            }
            NamedExpr::Paren(inner) => write!(f, "({inner})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellContent {
    /// Styled but empty (an input cell awaiting data).
    Empty,
    Text(String),
    Number(f64),
    Formula { expr: NamedExpr, cached: Option<Value> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub content: CellContent,
    /// Index into [`WorkbookModel::styles`].
    pub style: usize,
}

/// Ties a sheet row back to the variable instance it displays.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowBinding {
    pub variable: String,
    /// Canonical coordinate text; empty for no breakdown.
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Row {
    pub outline: u8,
    pub binding: Option<RowBinding>,
    /// (column, cell) pairs in ascending column order; column 0 is labels.
    pub cells: Vec<(usize, Cell)>,
}

impl Row {
    pub fn cell(&self, col: usize) -> Option<&Cell> {
        self.cells.iter().find(|(c, _)| *c == col).map(|(_, cell)| cell)
    }

    fn cell_mut(&mut self, col: usize) -> Option<&mut Cell> {
        self.cells.iter_mut().find(|(c, _)| *c == col).map(|(_, cell)| cell)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sheet {
    pub name: String,
    pub protected: bool,
    pub rows: Vec<Row>,
}

/// A workbook-scoped name covering one variable row region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefinedName {
    pub name: String,
    pub sheet: usize,
    pub row: usize,
    pub col_first: usize,
    pub col_last: usize,
}

/// Backend-neutral workbook: sheets, styles and defined names.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkbookModel {
    pub sheets: Vec<Sheet>,
    pub names: Vec<DefinedName>,
    pub styles: Vec<CellStyle>,
    pub label_column_width: f64,
}

/// Workbook construction and validation errors.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SheetError {
    #[error("invalid defined name '{name}': {reason}")]
    InvalidName { name: String, reason: String },
    #[error("duplicate defined name '{name}'")]
    DuplicateName { name: String },
    #[error("formula on sheet '{sheet}' references unknown name '{name}'")]
    UnknownNameInFormula { sheet: String, name: String },
    #[error("invalid workbook: {reason}")]
    InvalidWorkbook { reason: String },
    #[error("workbook rendering failed: {reason}")]
    RenderFailed { reason: String },
}

/// Style index of header and label cells.
pub const STYLE_LABEL: usize = 0;
/// Style index of editable input cells.
pub const STYLE_INPUT: usize = 1;
/// Style index of calculated number cells.
pub const STYLE_NUMBER: usize = 2;
/// Style index of calculated ratio cells.
pub const STYLE_RATIO: usize = 3;

/// Planned sheet content; one plan row becomes one sheet row.
enum PlanRow {
    Blank,
    Label { text: String, outline: u8 },
    VarRow { var: usize, coord: CoordId, outline: u8 },
}

struct SheetPlan {
    name: String,
    rows: Vec<PlanRow>,
}

/// Rows of fixed header at the top of every sheet.
const HEADER_ROWS: usize = 3;
/// Outline levels deeper than this flatten out (spreadsheet grouping limit).
const MAX_OUTLINE: u8 = 7;

/// Build the workbook for an expanded model. Cell formulas follow the given
/// roll-up mode so that a spreadsheet engine reproduces evaluation exactly.
pub fn build_workbook(
    model: &SemanticModel,
    grid: &InstanceGrid,
    style: &StyleConfig,
    rollup: RollupMode,
) -> Result<WorkbookModel, SheetError> {
    let space = &grid.space;
    let plans = plan_sheets(model, grid, style);

    // First pass: claim a defined name for the first row of every
    // (variable, coordinate) pair. Later rows of the same pair mirror it.
    let mut registry = NameRegistry::default();
    let mut names: Vec<DefinedName> = Vec::new();
    let mut owner: HashMap<(usize, CoordId), usize> = HashMap::new();
    let periods = space.period_count;
    for (sheet_idx, plan) in plans.iter().enumerate() {
        for (plan_idx, row) in plan.rows.iter().enumerate() {
            if let PlanRow::VarRow { var, coord, .. } = row {
                if owner.contains_key(&(*var, *coord)) {
                    continue;
                }
                let mut parts: Vec<&str> = vec![&model.variables[*var].name];
                let segments = coord_name_segments(model, space, *coord);
                parts.extend(segments.iter().map(String::as_str));
                let name = registry.claim(names::mangle(&parts));
                owner.insert((*var, *coord), names.len());
                names.push(DefinedName {
                    name,
                    sheet: sheet_idx,
                    row: HEADER_ROWS + plan_idx,
                    col_first: 1,
                    col_last: periods,
                });
            }
        }
    }

    // Second pass: emit cells, resolving every reference through the names.
    let mut sheets = Vec::with_capacity(plans.len());
    for (sheet_idx, plan) in plans.iter().enumerate() {
        let mut rows = header_rows(model, space);
        for (plan_idx, planned) in plan.rows.iter().enumerate() {
            let row_idx = HEADER_ROWS + plan_idx;
            let row = match planned {
                PlanRow::Blank => Row::default(),
                PlanRow::Label { text, outline } => Row {
                    outline: (*outline).min(MAX_OUTLINE),
                    binding: None,
                    cells: vec![(0, label_cell(text.clone()))],
                },
                PlanRow::VarRow { var, coord, outline } => {
                    let name_idx = owner[&(*var, *coord)];
                    let is_owner = names[name_idx].sheet == sheet_idx
                        && names[name_idx].row == row_idx;
                    build_var_row(
                        model, space, *var, *coord, *outline, is_owner, name_idx, &owner, &names,
                        rollup,
                    )
                }
            };
            rows.push(row);
        }
        sheets.push(Sheet { name: plan.name.clone(), protected: true, rows });
    }

    let styles = vec![
        CellStyle { locked: true, fill: None, number_format: None },
        CellStyle {
            locked: false,
            fill: Some(style.input_fill.clone()),
            number_format: Some(style.number_format.clone()),
        },
        CellStyle {
            locked: style.locked_calculated,
            fill: None,
            number_format: Some(style.number_format.clone()),
        },
        CellStyle {
            locked: style.locked_calculated,
            fill: None,
            number_format: Some(style.ratio_format.clone()),
        },
    ];

    let workbook = WorkbookModel {
        sheets,
        names,
        styles,
        label_column_width: style.label_column_width,
    };
    validate(&workbook)?;
    Ok(workbook)
}

fn label_cell(text: String) -> Cell {
    Cell { content: CellContent::Text(text), style: STYLE_LABEL }
}

fn header_rows(model: &SemanticModel, space: &InstanceSpace) -> Vec<Row> {
    let tf = &model.document.time_frame;
    let mut label_row = Row {
        outline: 0,
        binding: None,
        cells: vec![(0, label_cell("Period".into()))],
    };
    let mut index_row = Row {
        outline: 0,
        binding: None,
        cells: vec![(0, label_cell("Index".into()))],
    };
    for p in 0..space.period_count {
        let cell = if tf.unit == TimeUnit::Year {
            Cell { content: CellContent::Number((tf.start_year + p as i32) as f64), style: STYLE_LABEL }
        } else {
            label_cell(tf.period_label(p))
        };
        label_row.cells.push((1 + p, cell));
        index_row.cells.push((
            1 + p,
            Cell { content: CellContent::Number(p as f64), style: STYLE_LABEL },
        ));
    }
    vec![
        Row { outline: 0, binding: None, cells: vec![(1, label_cell("Years".into()))] },
        label_row,
        index_row,
    ]
}

#[allow(clippy::too_many_arguments)]
fn build_var_row(
    model: &SemanticModel,
    space: &InstanceSpace,
    var: usize,
    coord: CoordId,
    outline: u8,
    is_owner: bool,
    name_idx: usize,
    owner: &HashMap<(usize, CoordId), usize>,
    names: &[DefinedName],
    rollup: RollupMode,
) -> Row {
    let info = &model.variables[var];
    let inst = space.instance(var, coord).expect("planned rows have instances");
    let leaf = space.fold_children[inst].is_none();
    let style = if info.kind == VarKind::Input && leaf {
        STYLE_INPUT
    } else if is_ratio(model, var) {
        STYLE_RATIO
    } else {
        STYLE_NUMBER
    };
    let mut cells = vec![(0, label_cell(info.name.clone()))];
    for p in 0..space.period_count {
        let content = if !is_owner {
            CellContent::Formula {
                expr: NamedExpr::Name(names[name_idx].name.clone()),
                cached: None,
            }
        } else {
            match (&info.kind, &space.fold_children[inst]) {
                (VarKind::Input, None) => CellContent::Empty,
                (VarKind::Input, Some(children)) => fold_formula(space, children, owner, names),
                (VarKind::Calculated, None) => formula_at(model, var, coord, owner, names),
                (VarKind::Calculated, Some(children)) => match rollup {
                    RollupMode::Sum => fold_formula(space, children, owner, names),
                    RollupMode::Recompute => formula_at(model, var, coord, owner, names),
                },
            }
        };
        cells.push((1 + p, Cell { content, style }));
    }
    Row {
        outline: outline.min(MAX_OUTLINE),
        binding: Some(RowBinding {
            variable: info.name.clone(),
            category: space.coord_texts[coord].clone(),
        }),
        cells,
    }
}

/// `Name1 + Name2 + ...` over the child slices, left folded like evaluation.
fn fold_formula(
    space: &InstanceSpace,
    children: &[usize],
    owner: &HashMap<(usize, CoordId), usize>,
    names: &[DefinedName],
) -> CellContent {
    let mut iter = children.iter().map(|&child| {
        let instance = space.instances[child];
        let idx = owner[&(instance.var, instance.coord)];
        NamedExpr::Name(names[idx].name.clone())
    });
    let first = iter.next().expect("roll-ups have at least one child");
    let expr = iter.fold(first, |acc, name| NamedExpr::Binary {
        op: BinOp::Add,
        lhs: Box::new(acc),
        rhs: Box::new(name),
    });
    CellContent::Formula { expr, cached: None }
}

fn formula_at(
    model: &SemanticModel,
    var: usize,
    coord: CoordId,
    owner: &HashMap<(usize, CoordId), usize>,
    names: &[DefinedName],
) -> CellContent {
    let body = &model.variables[var].formula.as_ref().expect("calculated").body;
    CellContent::Formula { expr: to_named(body, model, coord, owner, names), cached: None }
}

fn to_named(
    expr: &Expr,
    model: &SemanticModel,
    coord: CoordId,
    owner: &HashMap<(usize, CoordId), usize>,
    names: &[DefinedName],
) -> NamedExpr {
    match expr {
        Expr::Variable(name) => {
            let var = model.lookup(name).expect("analysis interned every reference");
            let idx = owner[&(var, coord)];
            NamedExpr::Name(names[idx].name.clone())
        }
        Expr::Number(v) => NamedExpr::Number(*v),
        Expr::Binary { op, lhs, rhs } => NamedExpr::Binary {
            op: *op,
            lhs: Box::new(to_named(lhs, model, coord, owner, names)),
            rhs: Box::new(to_named(rhs, model, coord, owner, names)),
        },
        Expr::Paren(inner) => NamedExpr::Paren(Box::new(to_named(inner, model, coord, owner, names))),
    }
}

/// Ratio variables (top-level division) take the ratio number format.
fn is_ratio(model: &SemanticModel, var: usize) -> bool {
    let Some(formula) = &model.variables[var].formula else { return false };
    let mut body = &formula.body;
    while let Expr::Paren(inner) = body {
        body = inner;
    }
    matches!(body, Expr::Binary { op: BinOp::Div, .. })
}

/// Name segments contributed by a coordinate, e.g. `European Union`,
/// `United Kingdom` or `All Markets`.
fn coord_name_segments(
    model: &SemanticModel,
    space: &InstanceSpace,
    coord: CoordId,
) -> Vec<String> {
    let mut segments = Vec::new();
    for (h_idx, sel) in &space.coords[coord].dims {
        let title = &model.document.hierarchies[*h_idx].title;
        match sel {
            Selector::Leaf { path } => segments.extend(path.iter().cloned()),
            Selector::Rollup { path } => {
                segments.extend(path.iter().cloned());
                segments.push(format!("All {title}"));
            }
            Selector::All => segments.push(format!("All {title}")),
        }
    }
    segments
}

fn plan_sheets(model: &SemanticModel, grid: &InstanceGrid, style: &StyleConfig) -> Vec<SheetPlan> {
    let mut sheet_names = names::NameRegistry::default();
    let mut claim_sheet = |base: &str| claim_sheet_name(&mut sheet_names, base);

    let mut plans = Vec::new();

    // Assumptions sheet: inputs grouped by breakdown signature.
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for (r, dims) in model.report_dims.iter().enumerate() {
        match groups.iter_mut().find(|(sig, _)| sig == dims) {
            Some((_, reports)) => reports.push(r),
            None => groups.push((dims.clone(), vec![r])),
        }
    }
    let mut rows = Vec::new();
    for (sig, reports) in &groups {
        let group_inputs: Vec<usize> = model
            .variables
            .iter()
            .enumerate()
            .filter(|(_, v)| {
                v.kind == VarKind::Input && v.reports.iter().any(|r| reports.contains(r))
            })
            .map(|(id, _)| id)
            .collect();
        if group_inputs.is_empty() {
            continue;
        }
        if !rows.is_empty() {
            rows.push(PlanRow::Blank);
        }
        let title = if sig.is_empty() {
            "General".to_string()
        } else {
            let titles: Vec<&str> = sig
                .iter()
                .map(|&h| model.document.hierarchies[h].title.as_str())
                .collect();
            format!("By {}", titles.join(", "))
        };
        rows.push(PlanRow::Label { text: title, outline: 0 });
        let layout = &grid.layouts[reports[0]];
        plan_layout_rows(&mut rows, layout.rows.as_slice(), &group_inputs, grid);
    }
    plans.push(SheetPlan { name: claim_sheet(&style.assumptions_sheet), rows });

    // One sheet per report with every calculated variable appearing in it.
    for (r, report) in model.document.reports.iter().enumerate() {
        let mut vars: Vec<usize> = Vec::new();
        for formula in &report.formulas {
            let id = model.lookup(&formula.target).expect("targets are interned");
            if !vars.contains(&id) {
                vars.push(id);
            }
        }
        for (id, v) in model.variables.iter().enumerate() {
            if v.kind == VarKind::Calculated && v.reports.contains(&r) && !vars.contains(&id) {
                vars.push(id);
            }
        }
        let mut rows = Vec::new();
        plan_layout_rows(&mut rows, grid.layouts[r].rows.as_slice(), &vars, grid);
        plans.push(SheetPlan { name: claim_sheet(&report.name), rows });
    }
    plans
}

/// Translate layout rows into plan rows, inserting one row per variable
/// under each slice.
fn plan_layout_rows(
    rows: &mut Vec<PlanRow>,
    layout: &[LayoutRow],
    vars: &[usize],
    grid: &InstanceGrid,
) {
    for row in layout {
        match &row.kind {
            RowKind::Header => {
                rows.push(PlanRow::Label { text: row.label.clone(), outline: row.outline });
            }
            RowKind::Slice(coord) => {
                let var_outline = if row.label.is_empty() {
                    row.outline
                } else {
                    rows.push(PlanRow::Label { text: row.label.clone(), outline: row.outline });
                    row.outline.saturating_add(1)
                };
                for &var in vars {
                    if grid.space.instance(var, *coord).is_some() {
                        rows.push(PlanRow::VarRow { var, coord: *coord, outline: var_outline });
                    }
                }
            }
        }
    }
}

/// Sheet names: strip characters spreadsheets reject, cap the length, and
/// make the result unique.
fn claim_sheet_name(registry: &mut NameRegistry, base: &str) -> String {
    let cleaned: String = base
        .chars()
        .map(|c| if matches!(c, '[' | ']' | ':' | '*' | '?' | '/' | '\\') { ' ' } else { c })
        .collect();
    let mut cleaned = crate::ident::collapse_ws(&cleaned);
    if cleaned.is_empty() {
        cleaned = "Sheet".to_string();
    }
    cleaned.truncate(28);
    let claimed = registry.claim(names::mangle(&[&cleaned]));
    // The registry works on mangled keys; recover a readable suffix.
    match claimed.rfind("_v") {
        Some(pos) if claimed[pos + 2..].bytes().all(|b| b.is_ascii_digit()) => {
            format!("{} {}", cleaned, &claimed[pos + 2..])
        }
        _ => cleaned,
    }
}

/// Check every structural invariant renderers rely on.
pub fn validate(workbook: &WorkbookModel) -> Result<(), SheetError> {
    if workbook.sheets.is_empty() {
        return Err(SheetError::InvalidWorkbook { reason: "workbook has no sheets".into() });
    }
    let mut seen_sheets = std::collections::HashSet::new();
    for sheet in &workbook.sheets {
        if sheet.name.is_empty() || sheet.name.len() > 31 {
            return Err(SheetError::InvalidWorkbook {
                reason: format!("bad sheet name '{}'", sheet.name),
            });
        }
        if sheet.name.contains(['[', ']', ':', '*', '?', '/', '\\']) {
            return Err(SheetError::InvalidWorkbook {
                reason: format!("sheet name '{}' contains reserved characters", sheet.name),
            });
        }
        if !seen_sheets.insert(sheet.name.to_lowercase()) {
            return Err(SheetError::InvalidWorkbook {
                reason: format!("duplicate sheet name '{}'", sheet.name),
            });
        }
    }

    let mut seen = std::collections::HashSet::new();
    for defined in &workbook.names {
        let name = defined.name.as_str();
        let mut chars = name.chars();
        let head_ok = chars.next().is_some_and(|c| c.is_alphabetic() || c == '_');
        if !head_ok || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
            return Err(SheetError::InvalidName {
                name: name.to_string(),
                reason: "must start with a letter or '_' and use only alphanumerics and '_'".into(),
            });
        }
        if names::is_reserved_name(name) {
            return Err(SheetError::InvalidName {
                name: name.to_string(),
                reason: "reads as a cell reference".into(),
            });
        }
        if !seen.insert(name.to_lowercase()) {
            return Err(SheetError::DuplicateName { name: name.to_string() });
        }
        let sheet = workbook.sheets.get(defined.sheet).ok_or_else(|| SheetError::InvalidWorkbook {
            reason: format!("name '{name}' points at a missing sheet"),
        })?;
        if defined.row >= sheet.rows.len() || defined.col_first > defined.col_last {
            return Err(SheetError::InvalidWorkbook {
                reason: format!("name '{name}' covers an invalid region"),
            });
        }
    }

    let known: std::collections::HashSet<&str> =
        workbook.names.iter().map(|n| n.name.as_str()).collect();
    for sheet in &workbook.sheets {
        for row in &sheet.rows {
            for (_, cell) in &row.cells {
                if cell.style >= workbook.styles.len() {
                    return Err(SheetError::InvalidWorkbook {
                        reason: format!("cell on sheet '{}' uses a missing style", sheet.name),
                    });
                }
                if let CellContent::Formula { expr, .. } = &cell.content {
                    let mut missing = None;
                    expr.for_each_name(&mut |n| {
                        if missing.is_none() && !known.contains(n) {
                            missing = Some(n.to_string());
                        }
                    });
                    if let Some(name) = missing {
                        return Err(SheetError::UnknownNameInFormula {
                            sheet: sheet.name.clone(),
                            name,
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Write input values into their (unlocked) cells.
pub fn seed_inputs(
    workbook: &mut WorkbookModel,
    model: &SemanticModel,
    space: &InstanceSpace,
    inputs: &ValueCube,
) -> Result<(), SheetError> {
    for_each_bound_row(workbook, model, space, |row, var, inst| {
        if model.variables[var].kind != VarKind::Input || space.fold_children[inst].is_some() {
            return;
        }
        for p in 0..space.period_count {
            if let Some(Value::Num(v)) = inputs.get(inst, p) {
                if let Some(cell) = row.cell_mut(1 + p) {
                    cell.content = CellContent::Number(v);
                }
            }
        }
    })
}

/// Attach evaluated values to formula cells as cached results.
pub fn attach_computed(
    workbook: &mut WorkbookModel,
    model: &SemanticModel,
    space: &InstanceSpace,
    cube: &ValueCube,
) -> Result<(), SheetError> {
    for_each_bound_row(workbook, model, space, |row, _, inst| {
        for p in 0..space.period_count {
            let value = cube.get(inst, p);
            if let Some(Cell { content: CellContent::Formula { cached, .. }, .. }) =
                row.cell_mut(1 + p)
            {
                *cached = value;
            }
        }
    })
}

fn for_each_bound_row(
    workbook: &mut WorkbookModel,
    model: &SemanticModel,
    space: &InstanceSpace,
    mut f: impl FnMut(&mut Row, usize, usize),
) -> Result<(), SheetError> {
    for sheet in &mut workbook.sheets {
        for row in &mut sheet.rows {
            let Some(binding) = row.binding.clone() else { continue };
            let var = model.lookup(&binding.variable).ok_or_else(|| SheetError::InvalidWorkbook {
                reason: format!("row bound to unknown variable '{}'", binding.variable),
            })?;
            let coord = space.coord_by_text(var, &binding.category).ok_or_else(|| {
                SheetError::InvalidWorkbook {
                    reason: format!(
                        "row bound to unknown category '{}' for '{}'",
                        binding.category, binding.variable
                    ),
                }
            })?;
            let inst = space.instance(var, coord).expect("coord_by_text checked the instance");
            f(row, var, inst);
        }
    }
    Ok(())
}
