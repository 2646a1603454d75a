use std::collections::BTreeSet;

use crate::error::Result;
use crate::hierarchy::{ConceptTree, HierarchySet, TreeKind};
use crate::value::{ConceptSet, Value};

use super::{GeneralizedRelation, GeneralizedTuple};

fn related(a: &Value, b: &Value) -> bool {
    if a == b {
        return true;
    }
    let (x, y) = (a.concept_names(), b.concept_names());
    x.is_superset(&y) || y.is_superset(&x)
}

/// At most one attribute where the cells are neither equal nor nested.
fn mergeable(a: &GeneralizedTuple, b: &GeneralizedTuple) -> bool {
    a.cells
        .iter()
        .zip(&b.cells)
        .filter(|(x, y)| !related(x, y))
        .count()
        <= 1
}

fn merge(a: &GeneralizedTuple, b: &GeneralizedTuple) -> GeneralizedTuple {
    let cells = a
        .cells
        .iter()
        .zip(&b.cells)
        .map(|(x, y)| {
            if x == y {
                x.clone()
            } else {
                Value::from_names(x.concept_names().union(&y.concept_names()))
            }
        })
        .collect();
    GeneralizedTuple {
        cells,
        vote: a.vote + b.vote,
    }
}

/// The parent concept when `set` is exactly its full child set.
fn promotion(tree: &ConceptTree, set: &ConceptSet) -> Option<String> {
    let first = set.iter().next()?;
    let parent = tree.parent_of(first).ok()??;
    let children = tree.children_of(parent).ok()?;
    (&children == set.as_btree()).then(|| parent.to_owned())
}

/// Unions tuples that differ on a single attribute into set-valued cells,
/// then replaces any set covering all children of a concept by that
/// concept. Repeats both rewrites until nothing changes. Votes are summed.
pub fn simplify(grel: &GeneralizedRelation, trees: &HierarchySet) -> Result<GeneralizedRelation> {
    let column_trees: Vec<&ConceptTree> = grel
        .attributes()
        .iter()
        .map(|a| trees.require(&a.name))
        .collect::<Result<_>>()?;
    let mut tuples = grel.tuples().to_vec();
    loop {
        let mut changed = false;
        loop {
            tuples.sort_by(|a, b| a.cells.cmp(&b.cells));
            let pair = (0..tuples.len()).find_map(|i| {
                (i + 1..tuples.len())
                    .find(|&j| mergeable(&tuples[i], &tuples[j]))
                    .map(|j| (i, j))
            });
            let Some((i, j)) = pair else { break };
            let merged = merge(&tuples[i], &tuples[j]);
            tuples.remove(j);
            tuples[i] = merged;
            changed = true;
        }
        for t in &mut tuples {
            for (cell, tree) in t.cells.iter_mut().zip(&column_trees) {
                if let Value::Set(set) = cell {
                    if let Some(parent) = promotion(tree, set) {
                        *cell = Value::Text(parent);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(grel.with_tuples(tuples))
}

fn cell_leaves(tree: &ConceptTree, cell: &Value) -> Result<BTreeSet<String>> {
    match cell {
        Value::Number(d) => Ok(BTreeSet::from([d.to_string()])),
        other => {
            let mut out = BTreeSet::new();
            for name in other.concept_names().iter() {
                // Raw numbers merged into a set are their own leaves.
                if tree.kind() == TreeKind::NumericRange && tree.node(name).is_none() {
                    out.insert(name.to_owned());
                } else {
                    out.extend(tree.leaves_under(name)?);
                }
            }
            Ok(out)
        }
    }
}

/// Every combination of finest concepts covered by the relation's tuples.
pub fn expand_leaf_tuples(
    grel: &GeneralizedRelation,
    trees: &HierarchySet,
) -> Result<BTreeSet<Vec<String>>> {
    let column_trees: Vec<&ConceptTree> = grel
        .attributes()
        .iter()
        .map(|a| trees.require(&a.name))
        .collect::<Result<_>>()?;
    let mut out = BTreeSet::new();
    for t in grel.tuples() {
        let mut partial: Vec<Vec<String>> = vec![Vec::new()];
        for (cell, tree) in t.cells.iter().zip(&column_trees) {
            let leaves = cell_leaves(tree, cell)?;
            partial = partial
                .into_iter()
                .flat_map(|p| {
                    leaves.iter().map(move |l| {
                        let mut q = p.clone();
                        q.push(l.clone());
                        q
                    })
                })
                .collect();
        }
        out.extend(partial);
    }
    Ok(out)
}
