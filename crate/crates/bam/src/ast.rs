//! Syntax tree for model documents: time frame, category hierarchies,
//! reports and formulas, plus the canonical text printer.

use std::fmt;

use crate::ident::ident_key;

/// Length of one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeUnit {
    Year,
    Quarter,
    Month,
}

impl TimeUnit {
    /// Singular word used in the canonical sentence form.
    pub fn word(self) -> &'static str {
        match self {
            TimeUnit::Year => "year",
            TimeUnit::Quarter => "quarter",
            TimeUnit::Month => "month",
        }
    }
}

const MONTHS: [&str; 12] = [
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];

/// The model's time axis: a unit, a period count and a starting year.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeFrame {
    pub unit: TimeUnit,
    pub period_count: u32,
    pub start_year: i32,
}

impl TimeFrame {
    /// Human label for the 0-based period index, e.g. "2005", "Q2 2005", "Mar 2005".
    pub fn period_label(&self, period: usize) -> String {
        let p = period as i32;
        match self.unit {
            TimeUnit::Year => (self.start_year + p).to_string(),
            TimeUnit::Quarter => format!("Q{} {}", p.rem_euclid(4) + 1, self.start_year + p.div_euclid(4)),
            TimeUnit::Month => format!(
                "{} {}",
                MONTHS[p.rem_euclid(12) as usize],
                self.start_year + p.div_euclid(12)
            ),
        }
    }
}

/// A named tree of categories, e.g. markets or product lines.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryHierarchy {
    pub title: String,
    pub roots: Vec<CategoryNode>,
}

impl CategoryHierarchy {
    /// Look up a node by its path of names (normalized comparison).
    pub fn node_at<'a>(&'a self, path: &[String]) -> Option<&'a CategoryNode> {
        let mut nodes = &self.roots;
        let mut found = None;
        for seg in path {
            let key = ident_key(seg);
            found = nodes.iter().find(|n| ident_key(&n.name) == key)?.into();
            nodes = &found.unwrap().children;
        }
        found
    }

    /// All leaf paths in declaration order.
    pub fn leaf_paths(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        fn walk(nodes: &[CategoryNode], prefix: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
            for node in nodes {
                prefix.push(node.name.clone());
                if node.children.is_empty() {
                    out.push(prefix.clone());
                } else {
                    walk(&node.children, prefix, out);
                }
                prefix.pop();
            }
        }
        walk(&self.roots, &mut Vec::new(), &mut out);
        out
    }
}

/// One node of a category hierarchy. Leaves carry data; internal nodes roll up.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryNode {
    pub name: String,
    pub children: Vec<CategoryNode>,
}

impl CategoryNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A report: a name, the hierarchies it breaks down by, and its formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportDef {
    pub name: String,
    /// Hierarchy titles as written on the breakdown line.
    pub breakdown: Vec<String>,
    pub formulas: Vec<FormulaDef>,
}

/// A single `Target = expression` line.
#[derive(Debug, Clone)]
pub struct FormulaDef {
    pub target: String,
    pub body: Expr,
    /// 1-based line in the source document; not part of structural equality.
    pub line: usize,
}

impl PartialEq for FormulaDef {
    fn eq(&self, other: &Self) -> bool {
        ident_key(&self.target) == ident_key(&other.target) && self.body == other.body
    }
}

/// Binary arithmetic operators, in the usual two precedence levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    /// 1 for additive, 2 for multiplicative operators.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

/// Formula expression. Variable references keep their written spelling;
/// equality compares them through the normalized key and looks through
/// grouping parentheses, which are kept only so display stays faithful.
#[derive(Debug, Clone)]
pub enum Expr {
    Variable(String),
    Number(f64),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Paren(Box<Expr>),
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (self.strip_parens(), other.strip_parens()) {
            (Expr::Variable(a), Expr::Variable(b)) => ident_key(a) == ident_key(b),
            (Expr::Number(a), Expr::Number(b)) => a == b,
            (
                Expr::Binary { op: oa, lhs: la, rhs: ra },
                Expr::Binary { op: ob, lhs: lb, rhs: rb },
            ) => oa == ob && la == lb && ra == rb,
            _ => false,
        }
    }
}

impl Expr {
    /// Visit every variable reference, left to right.
    pub fn for_each_variable<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            Expr::Variable(name) => f(name),
            Expr::Number(_) => {}
            Expr::Binary { lhs, rhs, .. } => {
                lhs.for_each_variable(f);
                rhs.for_each_variable(f);
            }
            Expr::Paren(inner) => inner.for_each_variable(f),
        }
    }

    /// Variable references in first-appearance order, deduplicated by key.
    pub fn variables(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        let mut out = Vec::new();
        self.for_each_variable(&mut |name| {
            let key = ident_key(name);
            if !seen.contains(&key) {
                seen.push(key);
                out.push(name);
            }
        });
        out
    }

    /// The expression under any grouping parentheses.
    pub fn strip_parens(&self) -> &Expr {
        let mut expr = self;
        while let Expr::Paren(inner) = expr {
            expr = inner;
        }
        expr
    }

    fn bare_binary_precedence(&self) -> Option<u8> {
        match self {
            Expr::Binary { op, .. } => Some(op.precedence()),
            _ => None,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Variable(name) => f.write_str(name),
            Expr::Number(n) => write!(f, "{n}"),
            Expr::Binary { op, lhs, rhs } => {
                // Reparsing is left associative, so a bare binary operand
                // needs parentheses when it binds looser than this operator,
                // and on the right also when it binds equally.
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
            Expr::Paren(inner) => write!(f, "({inner})"),
        }
    }
}

/// A complete parsed model document.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub time_frame: TimeFrame,
    pub hierarchies: Vec<CategoryHierarchy>,
    pub reports: Vec<ReportDef>,
}

impl ModelDocument {
    /// Canonical text form. Parsing the result yields a structurally equal
    /// document: spellings are preserved, while keyword casing, outline
    /// numbers, spacing and dash characters are normalized.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let tf = &self.time_frame;
        out.push_str(&format!("Each period is one {}.\n", tf.unit.word()));
        out.push_str(&format!("The number of periods is {}.\n", tf.period_count));
        out.push_str(&format!("The first period starts in {}.\n", tf.start_year));
        if !self.hierarchies.is_empty() {
            out.push_str("\nCategories:\n");
            for hierarchy in &self.hierarchies {
                out.push_str(&format!("\n{} =\n", hierarchy.title));
                print_nodes(&hierarchy.roots, &mut Vec::new(), &mut out);
            }
        }
        for report in &self.reports {
            out.push_str(&format!("\nReport: {}\n", report.name));
            if !report.breakdown.is_empty() {
                out.push_str(&format!("Breakdown by {}\n", report.breakdown.join(", ")));
            }
            out.push('\n');
            for formula in &report.formulas {
                out.push_str(&format!("{} = {}\n", formula.target, formula.body));
            }
        }
        out
    }
}

fn print_nodes(nodes: &[CategoryNode], number: &mut Vec<usize>, out: &mut String) {
    for (i, node) in nodes.iter().enumerate() {
        number.push(i + 1);
        let label: Vec<String> = number.iter().map(|n| n.to_string()).collect();
        let indent = "  ".repeat(number.len() - 1);
        out.push_str(&format!("{indent}{} {}\n", label.join("."), node.name));
        print_nodes(&node.children, number, out);
        number.pop();
    }
}
