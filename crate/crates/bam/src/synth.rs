//! Deterministic random model and data generation for tests and benches.
//!
//! Everything is driven by a seed, so a failing case reproduces exactly.
//! [`FormulaShape::SumsOnly`] keeps formulas linear with integer data, which
//! makes summed and recomputed roll-ups agree bit for bit; [`FormulaShape::Mixed`]
//! exercises the full grammar.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ast::{
    CategoryHierarchy, CategoryNode, Expr, FormulaDef, ModelDocument, ReportDef, TimeFrame,
    TimeUnit,
};
use crate::eval::{Value, ValueCube};
use crate::grid::InstanceSpace;
use crate::ident::ident_key;
use crate::model::{SemanticModel, VarKind};

/// What generated formulas may contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulaShape {
    /// Only `+` and `-` over variables: linear, so roll-up modes agree.
    SumsOnly,
    /// All four operators, parentheses and literals.
    Mixed,
}

/// Knobs for the generator.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub shape: FormulaShape,
    pub periods: u32,
    /// Number of category hierarchies (0 to 2 is sensible).
    pub hierarchy_count: usize,
    pub inputs: usize,
    pub calcs: usize,
    pub reports: usize,
}

impl SynthConfig {
    /// A small model for property tests.
    pub fn small() -> Self {
        SynthConfig {
            shape: FormulaShape::Mixed,
            periods: 3,
            hierarchy_count: 1,
            inputs: 6,
            calcs: 5,
            reports: 2,
        }
    }

    /// A model big enough that evaluation time is measurable.
    pub fn bench() -> Self {
        SynthConfig {
            shape: FormulaShape::Mixed,
            periods: 40,
            hierarchy_count: 2,
            inputs: 30,
            calcs: 60,
            reports: 3,
        }
    }
}

const ADJECTIVES: &[&str] = &[
    "Net", "Gross", "Core", "Total", "Other", "Fixed", "Direct", "Deferred", "Retained",
    "Working",
];
const NOUNS: &[&str] = &[
    "Revenue", "Costs", "Margin", "Assets", "Liabilities", "Income", "Expenses", "Cash",
    "Inventory", "Receivables", "Payables", "Capital", "Sales", "Fees", "Royalties", "Overheads",
];
/// Names that stress identifier handling downstream (reserved-looking,
/// digit-bearing) while staying grammatical.
const SPICY: &[&str] = &["C38", "Tier1 Revenue", "Q4 Adjustment", "XFD1048576 Reserve"];
const NODE_NAMES: &[&str] = &[
    "North", "South", "East", "West", "Online", "Retail", "Standard", "Advanced", "Premium",
    "Budget", "R&D", "EMEA", "APAC", "Americas", "Wholesale", "Direct Sales",
];
const TITLES: &[&str] = &["Markets", "Products", "Regions", "Channels"];
const REPORT_NAMES: &[&str] = &["Profit And Loss", "Liquidity", "Cash Flow", "Operations", "Summary"];

/// Hands out names that are unique under identifier normalization.
#[derive(Default)]
struct NamePool {
    used: std::collections::HashSet<String>,
}

impl NamePool {
    fn claim(&mut self, base: &str) -> String {
        let mut candidate = base.to_string();
        let mut n = 2;
        while !self.used.insert(ident_key(&candidate)) {
            // A bare trailing number would not lex as part of an identifier,
            // so the suffix leads with a letter.
            candidate = format!("{base} V{n}");
            n += 1;
        }
        candidate
    }
}

/// Generate a random but well-formed model document.
pub fn synth_model(seed: u64, config: &SynthConfig) -> ModelDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vars = NamePool::default();

    let unit = match rng.random_range(0..5) {
        0 => TimeUnit::Quarter,
        1 => TimeUnit::Month,
        _ => TimeUnit::Year,
    };
    let time_frame = TimeFrame {
        unit,
        period_count: config.periods,
        start_year: 2000 + rng.random_range(0..30),
    };

    let mut hierarchies = Vec::new();
    let mut node_pool = NamePool::default();
    for h in 0..config.hierarchy_count.min(TITLES.len()) {
        hierarchies.push(gen_hierarchy(&mut rng, TITLES[h], &mut node_pool));
    }

    // Input names first so formulas can draw on them.
    let input_names: Vec<String> = (0..config.inputs.max(1))
        .map(|_| {
            let base = if rng.random_bool(0.12) {
                SPICY[rng.random_range(0..SPICY.len())].to_string()
            } else {
                format!(
                    "{} {}",
                    ADJECTIVES[rng.random_range(0..ADJECTIVES.len())],
                    NOUNS[rng.random_range(0..NOUNS.len())]
                )
            };
            vars.claim(&base)
        })
        .collect();
    let calc_names: Vec<String> = (0..config.calcs.max(1))
        .map(|_| {
            let base = format!(
                "{} {} Result",
                ADJECTIVES[rng.random_range(0..ADJECTIVES.len())],
                NOUNS[rng.random_range(0..NOUNS.len())]
            );
            vars.claim(&base)
        })
        .collect();

    let report_count = config.reports.clamp(1, REPORT_NAMES.len());
    let mut report_pool = NamePool::default();
    let mut reports: Vec<ReportDef> = (0..report_count)
        .map(|r| {
            let breakdown = gen_breakdown(&mut rng, &hierarchies);
            ReportDef {
                name: report_pool.claim(REPORT_NAMES[r % REPORT_NAMES.len()]),
                breakdown,
                formulas: Vec::new(),
            }
        })
        .collect();

    // Define each calculated variable once; operands come from inputs and
    // from calculated variables defined earlier, so there are no cycles but
    // there are cross-report references.
    for (idx, name) in calc_names.iter().enumerate() {
        let report = rng.random_range(0..reports.len());
        let body = gen_expr(&mut rng, config.shape, &input_names, &calc_names[..idx]);
        reports[report].formulas.push(FormulaDef {
            target: name.clone(),
            body,
            line: 0,
        });
    }

    // Occasionally show a formula in a second report as well; the identical
    // re-definition merges and the extra row mirrors the original.
    if reports.len() > 1 && rng.random_bool(0.4) {
        let from = rng.random_range(0..reports.len());
        if let Some(formula) = reports[from].formulas.first().cloned() {
            let to = (from + 1) % reports.len();
            reports[to].formulas.push(formula);
        }
    }

    ModelDocument { time_frame, hierarchies, reports }
}

fn gen_hierarchy(rng: &mut ChaCha8Rng, title: &str, pool: &mut NamePool) -> CategoryHierarchy {
    let mut roots = Vec::new();
    for _ in 0..rng.random_range(2..=3) {
        let name = pool.claim(NODE_NAMES[rng.random_range(0..NODE_NAMES.len())]);
        let mut children = Vec::new();
        if rng.random_bool(0.6) {
            for _ in 0..rng.random_range(2..=3) {
                let child = pool.claim(NODE_NAMES[rng.random_range(0..NODE_NAMES.len())]);
                let grandchildren = if rng.random_bool(0.2) {
                    vec![
                        CategoryNode {
                            name: pool.claim(NODE_NAMES[rng.random_range(0..NODE_NAMES.len())]),
                            children: Vec::new(),
                        },
                        CategoryNode {
                            name: pool.claim(NODE_NAMES[rng.random_range(0..NODE_NAMES.len())]),
                            children: Vec::new(),
                        },
                    ]
                } else {
                    Vec::new()
                };
                children.push(CategoryNode { name: child, children: grandchildren });
            }
        }
        roots.push(CategoryNode { name, children });
    }
    CategoryHierarchy { title: title.to_string(), roots }
}

fn gen_breakdown(rng: &mut ChaCha8Rng, hierarchies: &[CategoryHierarchy]) -> Vec<String> {
    if hierarchies.is_empty() {
        return Vec::new();
    }
    let max_dims = hierarchies.len().min(2);
    let dims = rng.random_range(0..=max_dims);
    let mut picks: Vec<usize> = Vec::new();
    while picks.len() < dims {
        let h = rng.random_range(0..hierarchies.len());
        if !picks.contains(&h) {
            picks.push(h);
        }
    }
    picks.iter().map(|&h| hierarchies[h].title.clone()).collect()
}

fn gen_expr(
    rng: &mut ChaCha8Rng,
    shape: FormulaShape,
    inputs: &[String],
    earlier_calcs: &[String],
) -> Expr {
    let mut pick_var = |rng: &mut ChaCha8Rng| -> Expr {
        let use_calc = !earlier_calcs.is_empty() && rng.random_bool(0.35);
        let name = if use_calc {
            earlier_calcs[rng.random_range(0..earlier_calcs.len())].clone()
        } else {
            inputs[rng.random_range(0..inputs.len())].clone()
        };
        Expr::Variable(name)
    };
    match shape {
        FormulaShape::SumsOnly => {
            let mut expr = pick_var(rng);
            for _ in 0..rng.random_range(1..=3) {
                let op = if rng.random_bool(0.7) {
                    crate::ast::BinOp::Add
                } else {
                    crate::ast::BinOp::Sub
                };
                expr = Expr::Binary {
                    op,
                    lhs: Box::new(expr),
                    rhs: Box::new(pick_var(rng)),
                };
            }
            expr
        }
        FormulaShape::Mixed => gen_mixed(rng, &mut pick_var, 0),
    }
}

fn gen_mixed(
    rng: &mut ChaCha8Rng,
    pick_var: &mut impl FnMut(&mut ChaCha8Rng) -> Expr,
    depth: usize,
) -> Expr {
    if depth >= 2 || rng.random_bool(0.35) {
        return if rng.random_bool(0.75) {
            pick_var(rng)
        } else {
            Expr::Number(rng.random_range(1..=50) as f64)
        };
    }
    let op = match rng.random_range(0..8) {
        0 | 1 | 2 => crate::ast::BinOp::Add,
        3 | 4 => crate::ast::BinOp::Sub,
        5 | 6 => crate::ast::BinOp::Mul,
        _ => crate::ast::BinOp::Div,
    };
    let lhs = if depth == 0 { pick_var(rng) } else { gen_mixed(rng, pick_var, depth + 1) };
    let rhs = gen_mixed(rng, pick_var, depth + 1);
    let expr = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
    if rng.random_bool(0.25) {
        Expr::Paren(Box::new(expr))
    } else {
        expr
    }
}

/// Generate integer input data over the leaf instances of a model's inputs.
/// `gap_probability` leaves cells empty to exercise the default-to-zero
/// path.
pub fn synth_inputs(
    model: &SemanticModel,
    space: &InstanceSpace,
    seed: u64,
    gap_probability: f64,
) -> ValueCube {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cube = ValueCube::empty(space);
    for (var, info) in model.variables.iter().enumerate() {
        if info.kind != VarKind::Input {
            continue;
        }
        for &inst in &space.var_instances[var] {
            if space.fold_children[inst].is_some() {
                continue;
            }
            for p in 0..space.period_count {
                if rng.random_bool(gap_probability) {
                    continue;
                }
                cube.set(inst, p, Value::Num(rng.random_range(1..=2000) as f64));
            }
        }
    }
    cube
}
