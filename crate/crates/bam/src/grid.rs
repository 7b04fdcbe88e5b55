//! Expansion of the analyzed model over category hierarchies.
//!
//! Every report breakdown produces a fixed set of category slices: one per
//! leaf, one roll-up per internal node, and one grand roll-up per hierarchy.
//! With several hierarchies the slice set is the full product of the per-
//! hierarchy sets, laid out depth first. A variable instantiated at a slice
//! is an instance; instances are the unit the evaluator and the spreadsheet
//! generator both work on, so the two stay aligned by construction.

use std::collections::HashMap;

use crate::ast::CategoryHierarchy;
use crate::ident::ident_key;
use crate::model::SemanticModel;

pub type CoordId = usize;
pub type InstanceId = usize;

/// Position along one breakdown dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Selector {
    /// A single leaf category, identified by its path of names.
    Leaf { path: Vec<String> },
    /// Roll-up over the subtree of an internal node.
    Rollup { path: Vec<String> },
    /// Grand roll-up over the whole hierarchy.
    All,
}

/// A category coordinate: one selector per breakdown dimension.
/// An empty coordinate denotes a report with no breakdown.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coord {
    /// (hierarchy index, selector) pairs in breakdown order.
    pub dims: Vec<(usize, Selector)>,
}

/// One variable pinned to one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Instance {
    pub var: usize,
    pub coord: CoordId,
}

/// Row of a report layout: either a grouping header or a category slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowKind {
    Header,
    Slice(CoordId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutRow {
    pub label: String,
    pub outline: u8,
    pub kind: RowKind,
}

/// The ordered category rows of one report.
#[derive(Debug, Clone)]
pub struct ReportLayout {
    pub report: usize,
    pub rows: Vec<LayoutRow>,
    /// Slice coordinates in row order; children precede their roll-up.
    pub slices: Vec<CoordId>,
}

/// All coordinates and variable instances of the expanded model.
#[derive(Debug, Clone)]
pub struct InstanceSpace {
    pub coords: Vec<Coord>,
    /// Canonical text per coordinate, e.g. `European Union;United Kingdom`
    /// or `North America, All Markets`. Empty for the no-breakdown coordinate.
    pub coord_texts: Vec<String>,
    pub instances: Vec<Instance>,
    /// Per variable, its instance ids; children precede their roll-up.
    pub var_instances: Vec<Vec<InstanceId>>,
    /// Per instance, the child instances a roll-up folds over
    /// (None for all-leaf coordinates).
    pub fold_children: Vec<Option<Vec<InstanceId>>>,
    pub period_count: usize,
    instance_index: HashMap<(usize, CoordId), InstanceId>,
    text_index: HashMap<String, Vec<CoordId>>,
}

impl InstanceSpace {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Instance of a variable at a coordinate, if it exists.
    pub fn instance(&self, var: usize, coord: CoordId) -> Option<InstanceId> {
        self.instance_index.get(&(var, coord)).copied()
    }

    /// Resolve a coordinate text for a given variable. Matching is
    /// case-insensitive and requires the variable to have an instance there.
    pub fn coord_by_text(&self, var: usize, text: &str) -> Option<CoordId> {
        let key = ident_key(text);
        self.text_index
            .get(&key)?
            .iter()
            .copied()
            .find(|&c| self.instance_index.contains_key(&(var, c)))
    }

    /// True when the coordinate consists solely of leaf selectors.
    pub fn is_leaf_coord(&self, coord: CoordId) -> bool {
        self.coords[coord].dims.iter().all(|(_, s)| matches!(s, Selector::Leaf { .. }))
    }
}

/// The expanded model: per-report layouts plus the shared instance space.
#[derive(Debug, Clone)]
pub struct InstanceGrid {
    pub layouts: Vec<ReportLayout>,
    pub space: InstanceSpace,
}

/// Expand the analyzed model over its category hierarchies.
pub fn expand(model: &SemanticModel) -> InstanceGrid {
    let mut builder = SpaceBuilder::default();
    let mut layouts = Vec::with_capacity(model.document.reports.len());
    for (r, dims) in model.report_dims.iter().enumerate() {
        layouts.push(build_layout(model, r, dims, &mut builder));
    }

    let hierarchies = &model.document.hierarchies;
    let mut space = InstanceSpace {
        coord_texts: builder.coords.iter().map(|c| coord_text(c, hierarchies)).collect(),
        coords: builder.coords,
        instances: Vec::new(),
        var_instances: Vec::new(),
        fold_children: Vec::new(),
        period_count: model.document.time_frame.period_count as usize,
        instance_index: HashMap::new(),
        text_index: HashMap::new(),
    };
    for (cid, text) in space.coord_texts.iter().enumerate() {
        space.text_index.entry(ident_key(text)).or_default().push(cid);
    }

    for (var, info) in model.variables.iter().enumerate() {
        let mut coords: Vec<CoordId> = Vec::new();
        for &r in &info.reports {
            for &cid in &layouts[r].slices {
                if !coords.contains(&cid) {
                    coords.push(cid);
                }
            }
        }
        if info.reports.is_empty() {
            // Referenced nowhere and defined nowhere cannot happen; variables
            // only exist through formulas. Defensive: give it no instances.
        }
        let mut ids = Vec::with_capacity(coords.len());
        for cid in coords {
            let id = space.instances.len();
            space.instances.push(Instance { var, coord: cid });
            space.instance_index.insert((var, cid), id);
            ids.push(id);
        }
        space.var_instances.push(ids);
    }

    space.fold_children = space
        .instances
        .iter()
        .map(|inst| {
            child_coords(&space.coords[inst.coord], hierarchies).map(|children| {
                children
                    .iter()
                    .map(|child| {
                        let cid = *builder
                            .coord_index
                            .get(child)
                            .expect("child coordinate was enumerated with its parent");
                        space
                            .instance(inst.var, cid)
                            .expect("child instance exists in every report the parent is in")
                    })
                    .collect()
            })
        })
        .collect();

    InstanceGrid { layouts, space }
}

#[derive(Default)]
struct SpaceBuilder {
    coords: Vec<Coord>,
    coord_index: HashMap<Coord, CoordId>,
}

impl SpaceBuilder {
    fn intern(&mut self, coord: Coord) -> CoordId {
        if let Some(&id) = self.coord_index.get(&coord) {
            return id;
        }
        let id = self.coords.len();
        self.coord_index.insert(coord.clone(), id);
        self.coords.push(coord);
        id
    }
}

fn build_layout(
    model: &SemanticModel,
    report: usize,
    dims: &[usize],
    builder: &mut SpaceBuilder,
) -> ReportLayout {
    let mut rows = Vec::new();
    let mut slices = Vec::new();
    if dims.is_empty() {
        let cid = builder.intern(Coord { dims: Vec::new() });
        rows.push(LayoutRow { label: String::new(), outline: 0, kind: RowKind::Slice(cid) });
        slices.push(cid);
        return ReportLayout { report, rows, slices };
    }
    let mut prefix = Vec::new();
    walk_dim(model, dims, 0, 0, &mut prefix, builder, &mut rows, &mut slices);
    ReportLayout { report, rows, slices }
}

fn walk_dim(
    model: &SemanticModel,
    dims: &[usize],
    d: usize,
    outline: u8,
    prefix: &mut Vec<(usize, Selector)>,
    builder: &mut SpaceBuilder,
    rows: &mut Vec<LayoutRow>,
    slices: &mut Vec<CoordId>,
) {
    let h_idx = dims[d];
    let h = &model.document.hierarchies[h_idx];
    let mut path = Vec::new();
    walk_nodes(model, dims, d, h_idx, &h.roots, &mut path, outline, prefix, builder, rows, slices);
    let label = format!("All {}", h.title);
    emit(model, dims, d, Selector::All, label, outline, prefix, builder, rows, slices);
}

#[allow(clippy::too_many_arguments)]
fn walk_nodes(
    model: &SemanticModel,
    dims: &[usize],
    d: usize,
    h_idx: usize,
    nodes: &[crate::ast::CategoryNode],
    path: &mut Vec<String>,
    outline: u8,
    prefix: &mut Vec<(usize, Selector)>,
    builder: &mut SpaceBuilder,
    rows: &mut Vec<LayoutRow>,
    slices: &mut Vec<CoordId>,
) {
    let title = model.document.hierarchies[h_idx].title.clone();
    for node in nodes {
        path.push(node.name.clone());
        if node.is_leaf() {
            let sel = Selector::Leaf { path: path.clone() };
            emit(model, dims, d, sel, node.name.clone(), outline, prefix, builder, rows, slices);
        } else {
            rows.push(LayoutRow { label: node.name.clone(), outline, kind: RowKind::Header });
            walk_nodes(
                model,
                dims,
                d,
                h_idx,
                &node.children,
                path,
                outline.saturating_add(1),
                prefix,
                builder,
                rows,
                slices,
            );
            let sel = Selector::Rollup { path: path.clone() };
            let label = format!("{}, All {}", node.name, title);
            emit(model, dims, d, sel, label, outline, prefix, builder, rows, slices);
        }
        path.pop();
    }
}

#[allow(clippy::too_many_arguments)]
fn emit(
    model: &SemanticModel,
    dims: &[usize],
    d: usize,
    sel: Selector,
    label: String,
    outline: u8,
    prefix: &mut Vec<(usize, Selector)>,
    builder: &mut SpaceBuilder,
    rows: &mut Vec<LayoutRow>,
    slices: &mut Vec<CoordId>,
) {
    prefix.push((dims[d], sel));
    if d + 1 == dims.len() {
        let cid = builder.intern(Coord { dims: prefix.clone() });
        rows.push(LayoutRow { label, outline, kind: RowKind::Slice(cid) });
        slices.push(cid);
    } else {
        rows.push(LayoutRow { label, outline, kind: RowKind::Header });
        walk_dim(model, dims, d + 1, outline.saturating_add(1), prefix, builder, rows, slices);
    }
    prefix.pop();
}

/// Canonical display text for a coordinate.
fn coord_text(coord: &Coord, hierarchies: &[CategoryHierarchy]) -> String {
    let parts: Vec<String> = coord
        .dims
        .iter()
        .map(|(h_idx, sel)| {
            let title = &hierarchies[*h_idx].title;
            match sel {
                Selector::Leaf { path } => path.join(";"),
                Selector::Rollup { path } => format!("{}, All {}", path.join(";"), title),
                Selector::All => format!("All {title}"),
            }
        })
        .collect();
    parts.join(";")
}

/// The coordinates a roll-up folds over: the first non-leaf dimension is
/// replaced by its children. Returns None for all-leaf coordinates.
fn child_coords(coord: &Coord, hierarchies: &[CategoryHierarchy]) -> Option<Vec<Coord>> {
    for (d, (h_idx, sel)) in coord.dims.iter().enumerate() {
        let h = &hierarchies[*h_idx];
        let children = match sel {
            Selector::Leaf { .. } => continue,
            Selector::Rollup { path } => {
                let node = h.node_at(path).expect("roll-up path resolves in its hierarchy");
                node.children
                    .iter()
                    .map(|c| {
                        let mut p = path.clone();
                        p.push(c.name.clone());
                        if c.is_leaf() {
                            Selector::Leaf { path: p }
                        } else {
                            Selector::Rollup { path: p }
                        }
                    })
                    .collect::<Vec<_>>()
            }
            Selector::All => h
                .roots
                .iter()
                .map(|c| {
                    let p = vec![c.name.clone()];
                    if c.is_leaf() {
                        Selector::Leaf { path: p }
                    } else {
                        Selector::Rollup { path: p }
                    }
                })
                .collect(),
        };
        let coords = children
            .into_iter()
            .map(|child_sel| {
                let mut dims = coord.dims.clone();
                dims[d].1 = child_sel;
                Coord { dims }
            })
            .collect();
        return Some(coords);
    }
    None
}
