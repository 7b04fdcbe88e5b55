//! Audit tools: dependency trees, a formula census, sensitivity ranking and
//! a self-describing documentation export.
//!
//! These work on the analyzed model (and, for sensitivity, on evaluated
//! data), so every question about a generated spreadsheet can be answered
//! from the model itself instead of by chasing cell references.

use std::collections::HashSet;
use std::fmt;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::eval::{evaluate_sequential, EvalOptions, RollupMode, Value, ValueCube};
use crate::grid::InstanceSpace;
use crate::model::{SemanticModel, VarKind};

/// Audit query errors.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AuditError {
    #[error("unknown variable '{name}'")]
    UnknownVariable { name: String },
    #[error("'{name}' is an input, not a calculated variable")]
    TargetNotCalculated { name: String },
    #[error("unknown category '{category}' for variable '{name}'")]
    UnknownCategory { name: String, category: String },
    #[error("period {period} is out of range; the model has {count} periods")]
    PeriodOutOfRange { period: usize, count: usize },
    #[error("the base value of '{name}' is undefined; sensitivity is meaningless")]
    UndefinedBase { name: String },
}

/// One node of a dependency tree.
#[derive(Debug, Clone, PartialEq)]
pub enum DepNode {
    Input { name: String },
    Calculated { name: String, children: Vec<DepNode> },
    /// A calculated variable already expanded earlier in the same tree.
    Repeated { name: String },
}

impl DepNode {
    fn label(&self) -> String {
        match self {
            DepNode::Input { name } => format!("{name} [input]"),
            DepNode::Calculated { name, .. } => name.clone(),
            DepNode::Repeated { name } => format!("{name} (shown above)"),
        }
    }
}

/// Expand the full dependency tree under a variable. Each calculated
/// variable is expanded once; later occurrences become [`DepNode::Repeated`].
pub fn dependency_tree(model: &SemanticModel, name: &str) -> Result<DepNode, AuditError> {
    let var = model
        .lookup(name)
        .ok_or_else(|| AuditError::UnknownVariable { name: name.to_string() })?;
    let mut expanded = HashSet::new();
    Ok(build_node(model, var, &mut expanded))
}

fn build_node(model: &SemanticModel, var: usize, expanded: &mut HashSet<usize>) -> DepNode {
    let info = &model.variables[var];
    match info.kind {
        VarKind::Input => DepNode::Input { name: info.name.clone() },
        VarKind::Calculated => {
            if !expanded.insert(var) {
                return DepNode::Repeated { name: info.name.clone() };
            }
            let children =
                info.deps.iter().map(|&dep| build_node(model, dep, expanded)).collect();
            DepNode::Calculated { name: info.name.clone(), children }
        }
    }
}

/// Render a dependency tree with box-drawing connectors.
pub fn render_tree(root: &DepNode) -> String {
    let mut out = String::new();
    write_node(root, "", "", &mut out);
    out
}

fn write_node(node: &DepNode, line_prefix: &str, child_prefix: &str, out: &mut String) {
    out.push_str(line_prefix);
    out.push_str(&node.label());
    out.push('\n');
    if let DepNode::Calculated { children, .. } = node {
        for (idx, child) in children.iter().enumerate() {
            let last = idx + 1 == children.len();
            let connector = if last { "└── " } else { "├── " };
            let continuation = if last { "    " } else { "│   " };
            write_node(
                child,
                &format!("{child_prefix}{connector}"),
                &format!("{child_prefix}{continuation}"),
                out,
            );
        }
    }
}

/// One census line: a calculated variable, its formula, where it is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusEntry {
    pub target: String,
    /// Canonical `Target = body` text.
    pub formula: String,
    /// Names of the reports defining the formula.
    pub reports: Vec<String>,
}

/// Every calculated variable exactly once, sorted by name.
pub fn formula_census(model: &SemanticModel) -> Vec<CensusEntry> {
    let mut entries: Vec<CensusEntry> = model
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Calculated)
        .map(|v| {
            let body = &v.formula.as_ref().expect("calculated variables have formulas").body;
            CensusEntry {
                target: v.name.clone(),
                formula: format!("{} = {}", v.name, body),
                reports: v
                    .defined_in
                    .iter()
                    .map(|&r| model.document.reports[r].name.clone())
                    .collect(),
            }
        })
        .collect();
    entries.sort_by(|a, b| crate::ident::ident_key(&a.target).cmp(&crate::ident::ident_key(&b.target)));
    entries
}

/// Census as text, one formula per line with its defining reports.
pub fn render_census(entries: &[CensusEntry]) -> String {
    let mut out = String::new();
    for entry in entries {
        out.push_str(&entry.formula);
        out.push_str("  (");
        out.push_str(&entry.reports.join(", "));
        out.push_str(")\n");
    }
    out
}

/// Sensitivity of one input: how much the target moves when the input is
/// nudged.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityEntry {
    pub input: String,
    /// Absolute change of the target value under the nudge.
    pub delta: f64,
}

/// Ranked sensitivities of a target value to each input it depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub target: String,
    pub category: String,
    pub period: String,
    pub base: f64,
    pub entries: Vec<SensitivityEntry>,
}

impl fmt::Display for SensitivityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sensitivity of {}", self.target)?;
        if !self.category.is_empty() {
            write!(f, " [{}]", self.category)?;
        }
        writeln!(f, " in {} (base value {})", self.period, trim_num(self.base))?;
        let width = self.entries.iter().map(|e| e.input.len()).max().unwrap_or(0);
        for (rank, entry) in self.entries.iter().enumerate() {
            writeln!(
                f,
                "{:>3}. {:<width$}  delta {}",
                rank + 1,
                entry.input,
                trim_num(entry.delta),
            )?;
        }
        Ok(())
    }
}

/// Fixed-precision number without trailing zeros.
fn trim_num(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Rank the inputs a target depends on by how strongly they move it.
///
/// Every provided leaf value of one input is nudged at once: nonzero values
/// by one percent, zeros by an absolute one. The entry's delta is the
/// absolute change of the target at the given category and period; a nudge
/// that makes the target undefined ranks as infinite. `category` defaults to
/// the most aggregated slice of the target.
pub fn sensitivity_rank(
    model: &SemanticModel,
    space: &InstanceSpace,
    inputs: &ValueCube,
    target: &str,
    category: Option<&str>,
    period: usize,
    rollup: RollupMode,
) -> Result<SensitivityReport, AuditError> {
    let var = model
        .lookup(target)
        .ok_or_else(|| AuditError::UnknownVariable { name: target.to_string() })?;
    let info = &model.variables[var];
    if info.kind != VarKind::Calculated {
        return Err(AuditError::TargetNotCalculated { name: info.name.clone() });
    }
    if period >= space.period_count {
        return Err(AuditError::PeriodOutOfRange {
            period,
            count: space.period_count,
        });
    }
    let coord = match category {
        Some(text) => space.coord_by_text(var, text).ok_or_else(|| AuditError::UnknownCategory {
            name: info.name.clone(),
            category: text.to_string(),
        })?,
        None => {
            let last = *space.var_instances[var].last().expect("every variable has instances");
            space.instances[last].coord
        }
    };
    let inst = space.instance(var, coord).expect("coordinate came from this variable");

    let options = EvalOptions { rollup, strict: false };
    let evaluate_cube = |cube: &ValueCube| -> Value {
        let result = evaluate_sequential(model, space, cube, options)
            .expect("non-strict evaluation cannot fail");
        result.cube.get(inst, period).unwrap_or(Value::Undefined)
    };
    let base = match evaluate_cube(inputs) {
        Value::Num(v) => v,
        Value::Undefined => {
            return Err(AuditError::UndefinedBase { name: info.name.clone() })
        }
    };

    // Transitive input dependencies of the target.
    let mut stack = vec![var];
    let mut visited = HashSet::new();
    let mut dep_inputs = Vec::new();
    while let Some(v) = stack.pop() {
        if !visited.insert(v) {
            continue;
        }
        match model.variables[v].kind {
            VarKind::Input => dep_inputs.push(v),
            VarKind::Calculated => stack.extend(model.variables[v].deps.iter().copied()),
        }
    }
    dep_inputs.sort();

    let nudge = |input: usize| -> SensitivityEntry {
        let mut cube = inputs.clone();
        for &leaf in &space.var_instances[input] {
            if space.fold_children[leaf].is_some() {
                continue;
            }
            for p in 0..space.period_count {
                match cube.get(leaf, p) {
                    Some(Value::Num(v)) if v != 0.0 => cube.set(leaf, p, Value::Num(v * 1.01)),
                    Some(Value::Num(_)) => cube.set(leaf, p, Value::Num(1.0)),
                    _ => {}
                }
            }
        }
        let delta = match evaluate_cube(&cube) {
            Value::Num(v) => (v - base).abs(),
            Value::Undefined => f64::INFINITY,
        };
        SensitivityEntry { input: model.variables[input].name.clone(), delta }
    };

    #[cfg(feature = "parallel")]
    let mut entries: Vec<SensitivityEntry> = dep_inputs.par_iter().map(|&i| nudge(i)).collect();
    #[cfg(not(feature = "parallel"))]
    let mut entries: Vec<SensitivityEntry> = dep_inputs.iter().map(|&i| nudge(i)).collect();

    entries.sort_by(|a, b| {
        b.delta
            .total_cmp(&a.delta)
            .then_with(|| crate::ident::ident_key(&a.input).cmp(&crate::ident::ident_key(&b.input)))
    });

    Ok(SensitivityReport {
        target: info.name.clone(),
        category: space.coord_texts[coord].clone(),
        period: model.document.time_frame.period_label(period),
        base,
        entries,
    })
}

/// Export the model as a single self-describing document: the canonical
/// model text followed by commented classification, dependency and ordering
/// tables. The output parses back into the same model.
pub fn export_docs(model: &SemanticModel) -> String {
    use std::fmt::Write as _;
    let mut out = model.document.to_text();
    out.push_str("\n#\n");
    let _ = writeln!(out, "# {}", model.summary());
    out.push_str("#\n# Variable classification\n");
    for v in &model.variables {
        match v.kind {
            VarKind::Input => {
                let _ = writeln!(out, "#   {}: input", v.name);
            }
            VarKind::Calculated => {
                let reports: Vec<&str> = v
                    .defined_in
                    .iter()
                    .map(|&r| model.document.reports[r].name.as_str())
                    .collect();
                let _ = writeln!(out, "#   {}: calculated in {}", v.name, reports.join(", "));
            }
        }
    }
    out.push_str("#\n# Dependencies\n");
    for v in &model.variables {
        if v.kind == VarKind::Calculated {
            let deps: Vec<&str> =
                v.deps.iter().map(|&d| model.variables[d].name.as_str()).collect();
            let _ = writeln!(out, "#   {} <- {}", v.name, deps.join(", "));
        }
    }
    out.push_str("#\n# Evaluation order\n");
    let mut line = String::from("#   ");
    let order = model
        .topo_order
        .iter()
        .filter(|&&v| model.variables[v].kind == VarKind::Calculated);
    for (idx, &v) in order.enumerate() {
        let name = model.variables[v].name.as_str();
        if idx > 0 {
            line.push_str(", ");
        }
        if line.len() + name.len() > 76 {
            out.push_str(line.trim_end());
            out.push('\n');
            line = String::from("#   ");
        }
        line.push_str(name);
    }
    out.push_str(line.trim_end());
    out.push('\n');
    out
}
