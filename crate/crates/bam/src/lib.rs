//! Toolkit for plain-language business models.
//!
//! A model is written as ordinary text: a time frame, optional category
//! hierarchies, and reports whose lines are `Target = expression` formulas.
//! This crate parses that text, classifies variables, expands formulas over
//! categories and periods, evaluates the result numerically, generates
//! spreadsheets that use only named references, and provides audit views
//! (dependency trees, a formula census, sensitivity ranking, documentation
//! export).
//!
//! The pipeline, end to end:
//!
//! ```
//! use bam::{parse_model, analyze, expand, eval, sheet};
//!
//! let text = "Each period is one year.\n\
//!             The number of periods is 2.\n\
//!             The first period starts in 2005.\n\
//!             Report: Summary\n\
//!             Profit = Turnover - Costs\n";
//! let document = parse_model(text).unwrap();
//! let model = analyze(document).unwrap();
//! let grid = expand(&model);
//! let inputs = eval::ValueCube::empty(&grid.space);
//! let result = eval::evaluate(&model, &grid.space, &inputs, Default::default()).unwrap();
//! let style = sheet::StyleConfig::default();
//! let workbook = sheet::build_workbook(&model, &grid, &style, Default::default()).unwrap();
//! assert!(!workbook.names.is_empty());
//! # let _ = result;
//! ```

pub mod ast;
pub mod audit;
pub mod eval;
pub mod grid;
pub mod ident;
pub mod model;
pub mod parser;
pub mod sheet;
pub mod synth;

pub use ast::{BinOp, CategoryHierarchy, CategoryNode, Expr, FormulaDef, ModelDocument, ReportDef, TimeFrame, TimeUnit};
pub use eval::{evaluate, evaluate_sequential, EvalOptions, RollupMode, Value, ValueCube};
pub use grid::{expand, InstanceGrid, InstanceSpace};
pub use model::{analyze, AnalyzeError, SemanticModel, VarKind, Variable};
pub use parser::{parse_expression, parse_model, ParseError};
