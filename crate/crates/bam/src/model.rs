//! Semantic analysis: variable classification, the dependency graph and a
//! deterministic evaluation order.
//!
//! A variable is an input exactly when it never appears as a formula target.
//! A calculated variable has exactly one effective definition; repeating a
//! structurally identical definition (possibly in another report) merges into
//! it, while a structurally different one is an error.

use std::collections::HashMap;

use crate::ast::{FormulaDef, ModelDocument};
use crate::ident::ident_key;

/// Whether a variable gets its values from data or from a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Input,
    Calculated,
}

/// One variable of the model, input or calculated.
#[derive(Debug, Clone)]
pub struct Variable {
    /// First-seen spelling, used for display.
    pub name: String,
    /// Normalized lookup key.
    pub key: String,
    pub kind: VarKind,
    /// Defining formula for calculated variables.
    pub formula: Option<FormulaDef>,
    /// Report indices where this variable is a formula target.
    pub defined_in: Vec<usize>,
    /// Report indices where this variable appears at all.
    pub reports: Vec<usize>,
    /// Variables referenced by the defining formula, in first-use order.
    pub deps: Vec<usize>,
}

/// Analysis errors.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalyzeError {
    #[error("conflicting definitions of '{variable}' (lines {first_line} and {second_line})")]
    ConflictingDefinition { variable: String, first_line: usize, second_line: usize },
    #[error("cyclic dependency: {}", cycle.join(" -> "))]
    CyclicDependency { cycle: Vec<String> },
    #[error("report '{report}' breaks down by unknown hierarchy '{title}'")]
    UnknownBreakdownTitle { report: String, title: String },
}

/// The analyzed model: document plus variable table, dependency order and
/// resolved report breakdowns.
#[derive(Debug, Clone)]
pub struct SemanticModel {
    pub document: ModelDocument,
    pub variables: Vec<Variable>,
    /// All variables, dependencies before dependents.
    pub topo_order: Vec<usize>,
    /// Per report, the hierarchy indices its breakdown titles resolve to.
    pub report_dims: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
}

impl SemanticModel {
    /// Look a variable up by any spelling of its name.
    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.index.get(&ident_key(name)).copied()
    }

    pub fn input_count(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Input).count()
    }

    pub fn calculated_count(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Calculated).count()
    }

    /// One-line shape summary, e.g. `2 hierarchies, 2 reports, 14 inputs, 9 calculated`.
    pub fn summary(&self) -> String {
        format!(
            "{} hierarchies, {} reports, {} inputs, {} calculated",
            self.document.hierarchies.len(),
            self.document.reports.len(),
            self.input_count(),
            self.calculated_count()
        )
    }
}

/// Analyze a parsed document into a semantic model.
pub fn analyze(document: ModelDocument) -> Result<SemanticModel, AnalyzeError> {
    let mut report_dims = Vec::with_capacity(document.reports.len());
    for report in &document.reports {
        let mut dims = Vec::new();
        for title in &report.breakdown {
            let key = ident_key(title);
            let idx = document
                .hierarchies
                .iter()
                .position(|h| ident_key(&h.title) == key)
                .ok_or_else(|| AnalyzeError::UnknownBreakdownTitle {
                    report: report.name.clone(),
                    title: title.clone(),
                })?;
            dims.push(idx);
        }
        report_dims.push(dims);
    }

    let mut variables: Vec<Variable> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut intern = |variables: &mut Vec<Variable>, name: &str| -> usize {
        let key = ident_key(name);
        if let Some(&id) = index.get(&key) {
            return id;
        }
        let id = variables.len();
        variables.push(Variable {
            name: crate::ident::collapse_ws(name),
            key: key.clone(),
            kind: VarKind::Input,
            formula: None,
            defined_in: Vec::new(),
            reports: Vec::new(),
            deps: Vec::new(),
        });
        index.insert(key, id);
        id
    };

    for (r, report) in document.reports.iter().enumerate() {
        for formula in &report.formulas {
            let target = intern(&mut variables, &formula.target);
            match &variables[target].formula {
                Some(existing) if *existing == *formula => {
                    if !variables[target].defined_in.contains(&r) {
                        variables[target].defined_in.push(r);
                    }
                }
                Some(existing) => {
                    return Err(AnalyzeError::ConflictingDefinition {
                        variable: variables[target].name.clone(),
                        first_line: existing.line,
                        second_line: formula.line,
                    });
                }
                None => {
                    variables[target].kind = VarKind::Calculated;
                    variables[target].formula = Some(formula.clone());
                    variables[target].defined_in.push(r);
                    let mut deps = Vec::new();
                    for name in formula.body.variables() {
                        let dep = intern(&mut variables, name);
                        if !deps.contains(&dep) {
                            deps.push(dep);
                        }
                    }
                    variables[target].deps = deps;
                }
            }
            let mark = |variables: &mut Vec<Variable>, id: usize| {
                if !variables[id].reports.contains(&r) {
                    variables[id].reports.push(r);
                }
            };
            mark(&mut variables, target);
            let dep_ids: Vec<usize> = variables[target].deps.clone();
            for dep in dep_ids {
                mark(&mut variables, dep);
            }
        }
    }

    let topo_order = toposort(&variables)?;

    // Computing a variable somewhere means computing everything it depends
    // on there too, so report membership closes over the dependency graph.
    // Reverse topological order visits dependents before their dependencies,
    // making one pass transitive.
    for &id in topo_order.iter().rev() {
        let reports = variables[id].reports.clone();
        for dep in variables[id].deps.clone() {
            for &r in &reports {
                if !variables[dep].reports.contains(&r) {
                    variables[dep].reports.push(r);
                }
            }
        }
    }
    for variable in &mut variables {
        variable.reports.sort_unstable();
    }

    Ok(SemanticModel { document, variables, topo_order, report_dims, index })
}

/// Depth-first postorder: returns every variable with dependencies first.
fn toposort(variables: &[Variable]) -> Result<Vec<usize>, AnalyzeError> {
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Unvisited,
        Visiting,
        Done,
    }
    let mut state = vec![State::Unvisited; variables.len()];
    let mut order = Vec::with_capacity(variables.len());
    let mut stack = Vec::new();

    fn visit(
        id: usize,
        variables: &[Variable],
        state: &mut [State],
        order: &mut Vec<usize>,
        stack: &mut Vec<usize>,
    ) -> Result<(), AnalyzeError> {
        match state[id] {
            State::Done => return Ok(()),
            State::Visiting => {
                let from = stack.iter().position(|&v| v == id).unwrap_or(0);
                let mut cycle: Vec<String> =
                    stack[from..].iter().map(|&v| variables[v].name.clone()).collect();
                cycle.push(variables[id].name.clone());
                return Err(AnalyzeError::CyclicDependency { cycle });
            }
            State::Unvisited => {}
        }
        state[id] = State::Visiting;
        stack.push(id);
        for &dep in &variables[id].deps {
            visit(dep, variables, state, order, stack)?;
        }
        stack.pop();
        state[id] = State::Done;
        order.push(id);
        Ok(())
    }

    for id in 0..variables.len() {
        visit(id, variables, &mut state, &mut order, &mut stack)?;
    }
    Ok(order)
}
