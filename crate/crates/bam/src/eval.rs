//! Numeric evaluation of the expanded model, independent of any spreadsheet.
//!
//! Values live in a dense cube indexed by (instance, period). Inputs are
//! loaded from CSV; calculated instances are filled in dependency order, one
//! period column at a time. Period columns are independent, so they are
//! evaluated in parallel when the `parallel` feature is enabled;
//! [`evaluate_sequential`] is always available and bit-identical.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;

use crate::ast::Expr;
use crate::grid::{InstanceId, InstanceSpace};
use crate::ident::ident_key;
use crate::model::{SemanticModel, VarKind};

/// A model value: a number, or undefined (division by zero propagates).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Num(f64),
    Undefined,
}

impl Value {
    pub fn num(self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(v),
            Value::Undefined => None,
        }
    }

    fn add(self, rhs: Value) -> Value {
        self.zip(rhs, |a, b| Value::Num(a + b))
    }

    fn apply(self, op: crate::ast::BinOp, rhs: Value) -> Value {
        use crate::ast::BinOp::*;
        self.zip(rhs, |a, b| match op {
            Add => Value::Num(a + b),
            Sub => Value::Num(a - b),
            Mul => Value::Num(a * b),
            Div => {
                if b == 0.0 {
                    Value::Undefined
                } else {
                    Value::Num(a / b)
                }
            }
        })
    }

    fn zip(self, rhs: Value, f: impl FnOnce(f64, f64) -> Value) -> Value {
        match (self, rhs) {
            (Value::Num(a), Value::Num(b)) => f(a, b),
            _ => Value::Undefined,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Undefined => f.write_str("undefined"),
        }
    }
}

/// How roll-up slices of calculated variables get their values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RollupMode {
    /// Apply the formula to the operands' own roll-up values.
    #[default]
    Recompute,
    /// Sum the child slices, like inputs.
    Sum,
}

impl RollupMode {
    pub fn word(self) -> &'static str {
        match self {
            RollupMode::Recompute => "recompute",
            RollupMode::Sum => "sum",
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub rollup: RollupMode,
    /// Fail instead of producing undefined values.
    pub strict: bool,
}

/// Dense (instance x period) store. Cells are optional so the same type
/// holds sparse input data and fully evaluated results.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueCube {
    pub instance_count: usize,
    pub period_count: usize,
    values: Vec<Option<Value>>,
}

impl ValueCube {
    pub fn empty(space: &InstanceSpace) -> Self {
        ValueCube {
            instance_count: space.len(),
            period_count: space.period_count,
            values: vec![None; space.len() * space.period_count],
        }
    }

    pub fn get(&self, inst: InstanceId, period: usize) -> Option<Value> {
        self.values[period * self.instance_count + inst]
    }

    pub fn set(&mut self, inst: InstanceId, period: usize, value: Value) {
        self.values[period * self.instance_count + inst] = Some(value);
    }
}

/// Errors in CSV data.
#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("bad CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("first row must be exactly 'variable,category,period,value', got '{found}'")]
    MissingHeader { found: String },
    #[error("data row {row}: unknown variable '{variable}'")]
    UnknownVariable { row: usize, variable: String },
    #[error("data row {row}: '{variable}' is calculated; data may only target inputs")]
    NotAnInput { row: usize, variable: String },
    #[error("data row {row}: unknown category '{category}' for variable '{variable}'")]
    UnknownCategory { row: usize, variable: String, category: String },
    #[error("data row {row}: '{category}' is a roll-up; data may only target leaf categories")]
    DataOnRollup { row: usize, category: String },
    #[error("data row {row}: unknown period '{period}'")]
    UnknownPeriod { row: usize, period: String },
    #[error("data row {row}: bad value '{value}'")]
    BadValue { row: usize, value: String },
    #[error("data row {row}: duplicate cell for '{variable}' [{category}] period '{period}'")]
    DuplicateCell { row: usize, variable: String, category: String, period: String },
}

pub(crate) enum LoadMode {
    /// Leaf input cells only; empty values are errors.
    Inputs,
    /// Any instance, including roll-ups and calculated variables; empty
    /// values mean "undefined".
    Observed,
}

pub const CSV_HEADER: [&str; 4] = ["variable", "category", "period", "value"];

/// Load input data. Schema: `variable,category,period,value` with the
/// category as canonical coordinate text (empty for no breakdown) and the
/// period as a label or 0-based index.
pub fn load_inputs<R: Read>(
    reader: R,
    model: &SemanticModel,
    space: &InstanceSpace,
) -> Result<ValueCube, DataError> {
    load_csv(reader, model, space, LoadMode::Inputs)
}

pub(crate) fn load_csv<R: Read>(
    reader: R,
    model: &SemanticModel,
    space: &InstanceSpace,
    mode: LoadMode,
) -> Result<ValueCube, DataError> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    {
        let headers = csv_reader.headers()?;
        let fields: Vec<&str> = headers.iter().map(str::trim).collect();
        if fields != CSV_HEADER {
            return Err(DataError::MissingHeader { found: fields.join(",") });
        }
    }
    let mut cube = ValueCube::empty(space);
    for (i, record) in csv_reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let field = |n: usize| record.get(n).unwrap_or("").trim().to_string();
        let (variable, category, period, value) = (field(0), field(1), field(2), field(3));

        let var = model
            .lookup(&variable)
            .ok_or_else(|| DataError::UnknownVariable { row, variable: variable.clone() })?;
        if matches!(mode, LoadMode::Inputs) && model.variables[var].kind == VarKind::Calculated {
            return Err(DataError::NotAnInput { row, variable });
        }
        let coord = space.coord_by_text(var, &category).ok_or_else(|| {
            DataError::UnknownCategory { row, variable: variable.clone(), category: category.clone() }
        })?;
        if matches!(mode, LoadMode::Inputs) && !space.is_leaf_coord(coord) {
            return Err(DataError::DataOnRollup { row, category });
        }
        let inst = space.instance(var, coord).expect("coord_by_text checked the instance");
        let p = resolve_period(model, space, &period)
            .ok_or_else(|| DataError::UnknownPeriod { row, period: period.clone() })?;
        let parsed = if value.is_empty() {
            match mode {
                LoadMode::Inputs => return Err(DataError::BadValue { row, value }),
                LoadMode::Observed => Value::Undefined,
            }
        } else {
            Value::Num(value.parse::<f64>().map_err(|_| DataError::BadValue {
                row,
                value: value.clone(),
            })?)
        };
        if cube.get(inst, p).is_some() {
            return Err(DataError::DuplicateCell { row, variable, category, period });
        }
        cube.set(inst, p, parsed);
    }
    Ok(cube)
}

/// Resolve a period given as a label ("2005", "Q1 2005") or a 0-based index.
fn resolve_period(model: &SemanticModel, space: &InstanceSpace, text: &str) -> Option<usize> {
    let tf = &model.document.time_frame;
    let key = ident_key(text);
    for p in 0..space.period_count {
        if ident_key(&tf.period_label(p)) == key {
            return Some(p);
        }
    }
    match text.parse::<usize>() {
        Ok(p) if p < space.period_count => Some(p),
        _ => None,
    }
}

/// Evaluation failure. Only produced in strict mode.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("undefined value for '{variable}' [{category}] in period {period}")]
    Undefined { variable: String, category: String, period: String },
}

#[derive(Debug, Clone)]
pub struct EvalResult {
    pub cube: ValueCube,
    /// Human-readable notes about inputs that defaulted to zero.
    pub warnings: Vec<String>,
}

/// Evaluate every instance over every period. Parallel over periods when the
/// `parallel` feature is enabled; results are bit-identical either way.
#[cfg(feature = "parallel")]
pub fn evaluate(
    model: &SemanticModel,
    space: &InstanceSpace,
    inputs: &ValueCube,
    options: EvalOptions,
) -> Result<EvalResult, EvalError> {
    use rayon::prelude::*;
    let columns: Vec<(Vec<Option<Value>>, Vec<InstanceId>)> = (0..space.period_count)
        .into_par_iter()
        .map(|p| eval_period(model, space, inputs, options.rollup, p))
        .collect();
    assemble(model, space, columns, options)
}

#[cfg(not(feature = "parallel"))]
pub fn evaluate(
    model: &SemanticModel,
    space: &InstanceSpace,
    inputs: &ValueCube,
    options: EvalOptions,
) -> Result<EvalResult, EvalError> {
    evaluate_sequential(model, space, inputs, options)
}

/// Single-threaded reference evaluation; always available.
pub fn evaluate_sequential(
    model: &SemanticModel,
    space: &InstanceSpace,
    inputs: &ValueCube,
    options: EvalOptions,
) -> Result<EvalResult, EvalError> {
    let columns: Vec<(Vec<Option<Value>>, Vec<InstanceId>)> = (0..space.period_count)
        .map(|p| eval_period(model, space, inputs, options.rollup, p))
        .collect();
    assemble(model, space, columns, options)
}

fn assemble(
    model: &SemanticModel,
    space: &InstanceSpace,
    columns: Vec<(Vec<Option<Value>>, Vec<InstanceId>)>,
    options: EvalOptions,
) -> Result<EvalResult, EvalError> {
    let mut cube = ValueCube::empty(space);
    let mut defaulted: BTreeMap<InstanceId, Vec<usize>> = BTreeMap::new();
    for (p, (column, missing)) in columns.into_iter().enumerate() {
        for (inst, value) in column.into_iter().enumerate() {
            if let Some(v) = value {
                cube.set(inst, p, v);
            }
        }
        for inst in missing {
            defaulted.entry(inst).or_default().push(p);
        }
    }
    let tf = &model.document.time_frame;
    let warnings = defaulted
        .into_iter()
        .map(|(inst, periods)| {
            let instance = &space.instances[inst];
            let var = &model.variables[instance.var];
            let labels: Vec<String> = periods.iter().map(|&p| tf.period_label(p)).collect();
            let at = describe_coord(space, instance.coord);
            format!(
                "input '{}'{at} has no data; defaulted to 0 for {}",
                var.name,
                labels.join(", ")
            )
        })
        .collect();

    if options.strict {
        for (var, ids) in space.var_instances.iter().enumerate() {
            for &inst in ids {
                for p in 0..space.period_count {
                    if cube.get(inst, p) == Some(Value::Undefined) {
                        return Err(EvalError::Undefined {
                            variable: model.variables[var].name.clone(),
                            category: space.coord_texts[space.instances[inst].coord].clone(),
                            period: tf.period_label(p),
                        });
                    }
                }
            }
        }
    }
    Ok(EvalResult { cube, warnings })
}

fn describe_coord(space: &InstanceSpace, coord: crate::grid::CoordId) -> String {
    let text = &space.coord_texts[coord];
    if text.is_empty() {
        String::new()
    } else {
        format!(" [{text}]")
    }
}

/// Evaluate one period column. Returns the column plus the leaf input
/// instances that had no data and defaulted to zero.
fn eval_period(
    model: &SemanticModel,
    space: &InstanceSpace,
    inputs: &ValueCube,
    rollup: RollupMode,
    p: usize,
) -> (Vec<Option<Value>>, Vec<InstanceId>) {
    let mut out: Vec<Option<Value>> = vec![None; space.len()];
    let mut missing = Vec::new();
    for &var in &model.topo_order {
        let info = &model.variables[var];
        for &inst in &space.var_instances[var] {
            let value = match (&info.kind, &space.fold_children[inst]) {
                (VarKind::Input, None) => match inputs.get(inst, p) {
                    Some(v) => v,
                    None => {
                        missing.push(inst);
                        Value::Num(0.0)
                    }
                },
                (VarKind::Input, Some(children)) => fold_sum(children, &out),
                (VarKind::Calculated, None) => {
                    eval_expr(expr_of(info), space.instances[inst].coord, model, space, &out)
                }
                (VarKind::Calculated, Some(children)) => match rollup {
                    RollupMode::Sum => fold_sum(children, &out),
                    RollupMode::Recompute => {
                        eval_expr(expr_of(info), space.instances[inst].coord, model, space, &out)
                    }
                },
            };
            out[inst] = Some(value);
        }
    }
    (out, missing)
}

fn expr_of(info: &crate::model::Variable) -> &Expr {
    &info.formula.as_ref().expect("calculated variables have a formula").body
}

/// Left fold over child slice values, mirroring the generated formula chains.
fn fold_sum(children: &[InstanceId], out: &[Option<Value>]) -> Value {
    let mut iter = children.iter();
    let first = *iter.next().expect("roll-ups have at least one child");
    let mut acc = out[first].expect("children are evaluated before their roll-up");
    for &child in iter {
        acc = acc.add(out[child].expect("children are evaluated before their roll-up"));
    }
    acc
}

fn eval_expr(
    expr: &Expr,
    coord: crate::grid::CoordId,
    model: &SemanticModel,
    space: &InstanceSpace,
    out: &[Option<Value>],
) -> Value {
    match expr {
        Expr::Variable(name) => {
            let var = model.lookup(name).expect("analysis interned every reference");
            let inst = space.instance(var, coord).expect("operands share the target's coordinate");
            out[inst].expect("dependencies are evaluated first")
        }
        Expr::Number(v) => Value::Num(*v),
        Expr::Binary { op, lhs, rhs } => {
            let l = eval_expr(lhs, coord, model, space, out);
            let r = eval_expr(rhs, coord, model, space, out);
            l.apply(*op, r)
        }
        Expr::Paren(inner) => eval_expr(inner, coord, model, space, out),
    }
}

/// Serialize a cube in the input CSV schema, instances in declaration order.
/// Cells that hold no value are skipped; undefined values get an empty field.
pub fn cube_to_csv(model: &SemanticModel, space: &InstanceSpace, cube: &ValueCube) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER).expect("writing to memory");
    let tf = &model.document.time_frame;
    for (var, ids) in space.var_instances.iter().enumerate() {
        for &inst in ids {
            for p in 0..space.period_count {
                let Some(value) = cube.get(inst, p) else { continue };
                let text = match value {
                    Value::Num(v) => v.to_string(),
                    Value::Undefined => String::new(),
                };
                writer
                    .write_record([
                        model.variables[var].name.as_str(),
                        space.coord_texts[space.instances[inst].coord].as_str(),
                        tf.period_label(p).as_str(),
                        text.as_str(),
                    ])
                    .expect("writing to memory");
            }
        }
    }
    String::from_utf8(writer.into_inner().expect("writing to memory")).expect("CSV is UTF-8")
}

/// One observed cell that differs from the evaluated model.
#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub variable: String,
    pub category: String,
    pub period: String,
    pub expected: Value,
    pub observed: Value,
    /// Absolute difference; infinite when one side is undefined.
    pub difference: f64,
}

/// Outcome of comparing observed values against the evaluated model.
#[derive(Debug, Clone, PartialEq)]
pub struct MismatchReport {
    pub mismatches: Vec<Mismatch>,
    /// Observed cells that were compared.
    pub compared: usize,
    /// Model cells with no observed counterpart.
    pub missing: usize,
}

impl MismatchReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty()
    }
}

impl fmt::Display for MismatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.mismatches {
            let at = if m.category.is_empty() { String::new() } else { format!(" [{}]", m.category) };
            let diff = if m.difference.is_finite() {
                format!("{}", m.difference)
            } else {
                "undefined".to_string()
            };
            writeln!(
                f,
                "{}{} {}: expected {}, observed {} (difference {})",
                m.variable, at, m.period, m.expected, m.observed, diff
            )?;
        }
        write!(
            f,
            "{} mismatches ({} values compared, {} model values missing from observed data)",
            self.mismatches.len(),
            self.compared,
            self.missing
        )
    }
}

/// Evaluate the model and compare it against observed values. A cell counts
/// as a mismatch when the absolute difference exceeds the tolerance; an
/// undefined side matches only another undefined side.
pub fn verify_against<R: Read>(
    model: &SemanticModel,
    space: &InstanceSpace,
    inputs: &ValueCube,
    observed: R,
    tolerance: f64,
    rollup: RollupMode,
) -> Result<MismatchReport, DataError> {
    let observed = load_csv(observed, model, space, LoadMode::Observed)?;
    let options = EvalOptions { rollup, strict: false };
    let result = evaluate(model, space, inputs, options).expect("non-strict evaluation cannot fail");
    let tf = &model.document.time_frame;
    let mut report =
        MismatchReport { mismatches: Vec::new(), compared: 0, missing: 0 };
    for (var, ids) in space.var_instances.iter().enumerate() {
        for &inst in ids {
            for p in 0..space.period_count {
                let Some(obs) = observed.get(inst, p) else {
                    report.missing += 1;
                    continue;
                };
                report.compared += 1;
                let exp = result.cube.get(inst, p).expect("evaluation fills every cell");
                let difference = match (exp, obs) {
                    (Value::Num(a), Value::Num(b)) => (a - b).abs(),
                    (Value::Undefined, Value::Undefined) => 0.0,
                    _ => f64::INFINITY,
                };
                if difference > tolerance {
                    report.mismatches.push(Mismatch {
                        variable: model.variables[var].name.clone(),
                        category: space.coord_texts[space.instances[inst].coord].clone(),
                        period: tf.period_label(p),
                        expected: exp,
                        observed: obs,
                        difference,
                    });
                }
            }
        }
    }
    Ok(report)
}
