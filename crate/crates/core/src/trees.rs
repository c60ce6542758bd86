//! LW-trees and the order conditions they encode.
//!
//! Vertices are meagre (a right-hand-side derivative), fat (an application
//! of the linear operator) or square (a time derivative of a stage
//! operator). A fat vertex has at most one child; a square vertex has
//! exactly one child, itself square or fat. A maximal run of `p` square
//! vertices ending in a fat vertex is written `θp[...]` where the bracket
//! holds the fat vertex's child.
//!
//! Bracket notation: `[ ]_.` meagre leaf, `[ ]_o` fat leaf,
//! `[c1, c2]_.` meagre vertex with children, `[c]_o` fat vertex with one
//! child, `θ2[ ]` two squares over a fat leaf.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::tableau::{MethodType, Tableau};
use crate::{Error, Result};

/// Declared in rank order; the derived `Ord` is the canonical colour rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Color {
    Meagre,
    Fat,
    Square,
}

/// A rooted LW-tree in canonical form.
///
/// Ordering compares colour rank, then vertex count, then the sorted child
/// lists lexicographically (field order drives the derive).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LwTree {
    color: Color,
    order: usize,
    children: Vec<LwTree>,
}

impl LwTree {
    pub fn meagre(mut children: Vec<LwTree>) -> Self {
        children.sort();
        let order = 1 + children.iter().map(|c| c.order).sum::<usize>();
        LwTree {
            color: Color::Meagre,
            order,
            children,
        }
    }

    pub fn meagre_leaf() -> Self {
        Self::meagre(Vec::new())
    }

    pub fn fat(child: Option<LwTree>) -> Self {
        let children: Vec<_> = child.into_iter().collect();
        let order = 1 + children.iter().map(|c| c.order).sum::<usize>();
        LwTree {
            color: Color::Fat,
            order,
            children,
        }
    }

    pub fn fat_leaf() -> Self {
        Self::fat(None)
    }

    pub fn square(child: LwTree) -> Result<Self> {
        if child.color == Color::Meagre {
            return Err(Error::invalid(
                "a square vertex needs a square or fat child",
            ));
        }
        Ok(LwTree {
            color: Color::Square,
            order: 1 + child.order,
            children: vec![child],
        })
    }

    /// `p ≥ 1` squares over a fat vertex with an optional child.
    pub fn theta(p: usize, child: Option<LwTree>) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("a square chain has at least one square"));
        }
        let mut t = Self::fat(child);
        for _ in 0..p {
            t = Self::square(t)?;
        }
        Ok(t)
    }

    pub fn color(&self) -> Color {
        self.color
    }

    /// Vertex count `ρ`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn children(&self) -> &[LwTree] {
        &self.children
    }

    pub fn is_meagre_only(&self) -> bool {
        self.color == Color::Meagre && self.children.iter().all(LwTree::is_meagre_only)
    }

    /// For a square root: the chain length `p` and the fat vertex's child.
    fn theta_parts(&self) -> Option<(usize, Option<&LwTree>)> {
        if self.color != Color::Square {
            return None;
        }
        let mut p = 0;
        let mut t = self;
        while t.color == Color::Square {
            p += 1;
            t = &t.children[0];
        }
        Some((p, t.children.first()))
    }

    /// True if some fat leaf has a parent that is not square (a fat root
    /// leaf counts).
    pub fn has_unshielded_fat_leaf(&self) -> bool {
        fn below(t: &LwTree) -> bool {
            t.children.iter().any(|c| {
                (c.color == Color::Fat && c.children.is_empty() && t.color != Color::Square)
                    || below(c)
            })
        }
        (self.color == Color::Fat && self.children.is_empty()) || below(self)
    }

    pub fn in_family(&self, family: Family) -> bool {
        match family {
            Family::T => self.is_meagre_only(),
            Family::LW1 => true,
            Family::LW2 | Family::LW3 => self.color != Color::Square,
        }
    }
}

impl fmt::Display for LwTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some((p, child)) = self.theta_parts() {
            write!(f, "θ{p}[")?;
            match child {
                Some(c) => write!(f, "{c}")?,
                None => f.write_str(" ")?,
            }
            return f.write_str("]");
        }
        f.write_str("[")?;
        if self.children.is_empty() {
            f.write_str(" ")?;
        }
        for (k, c) in self.children.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(match self.color {
            Color::Meagre => "]_.",
            _ => "]_o",
        })
    }
}

struct Parser<'a> {
    rest: core::iter::Peekable<core::str::Chars<'a>>,
}

impl Parser<'_> {
    fn expect(&mut self, want: char) -> Result<()> {
        match self.rest.next() {
            Some(c) if c == want => Ok(()),
            other => Err(Error::invalid(alloc::format!(
                "tree syntax: expected '{want}', found {other:?}"
            ))),
        }
    }

    fn skip_spaces(&mut self) {
        while self.rest.peek() == Some(&' ') {
            self.rest.next();
        }
    }

    /// Either an empty slot `" "` followed by `]` (returns `None`), or a tree.
    fn optional_tree(&mut self) -> Result<Option<LwTree>> {
        self.skip_spaces();
        if self.rest.peek() == Some(&']') {
            return Ok(None);
        }
        self.tree().map(Some)
    }

    fn tree(&mut self) -> Result<LwTree> {
        self.skip_spaces();
        match self.rest.next() {
            Some('θ') => {
                let mut digits = String::new();
                while let Some(c) = self.rest.peek().filter(|c| c.is_ascii_digit()) {
                    digits.push(*c);
                    self.rest.next();
                }
                let p: usize = digits
                    .parse()
                    .map_err(|_| Error::invalid("tree syntax: θ needs a count"))?;
                self.expect('[')?;
                let child = self.optional_tree()?;
                self.skip_spaces();
                self.expect(']')?;
                LwTree::theta(p, child)
            }
            Some('[') => {
                let mut children = Vec::new();
                if let Some(first) = self.optional_tree()? {
                    children.push(first);
                    loop {
                        self.skip_spaces();
                        if self.rest.peek() != Some(&',') {
                            break;
                        }
                        self.rest.next();
                        children.push(self.tree()?);
                    }
                }
                self.skip_spaces();
                self.expect(']')?;
                self.expect('_')?;
                match self.rest.next() {
                    Some('.') => Ok(LwTree::meagre(children)),
                    Some('o') if children.len() <= 1 => Ok(LwTree::fat(children.pop())),
                    Some('o') => Err(Error::invalid(
                        "tree syntax: fat vertex with several children",
                    )),
                    other => Err(Error::invalid(alloc::format!(
                        "tree syntax: unknown vertex colour {other:?}"
                    ))),
                }
            }
            other => Err(Error::invalid(alloc::format!(
                "tree syntax: unexpected {other:?}"
            ))),
        }
    }
}

impl FromStr for LwTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            rest: s.trim().chars().peekable(),
        };
        let t = p.tree()?;
        p.skip_spaces();
        if p.rest.next().is_some() {
            return Err(Error::invalid("tree syntax: trailing input"));
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Classical Butcher trees (meagre vertices only).
    T,
    LW1,
    /// `LW1` without square roots.
    LW2,
    /// Same tree set as `LW2`.
    LW3,
}

impl Family {
    pub fn for_method(m: MethodType) -> Family {
        match m {
            MethodType::Type1 => Family::LW1,
            MethodType::Type2 => Family::LW2,
            MethodType::Type3 => Family::LW3,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::T => "T",
            Family::LW1 => "LW1",
            Family::LW2 => "LW2",
            Family::LW3 => "LW3",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "T" => Ok(Family::T),
            "LW1" => Ok(Family::LW1),
            "LW2" => Ok(Family::LW2),
            "LW3" => Ok(Family::LW3),
            _ => Err(Error::invalid(alloc::format!("unknown tree family '{s}'"))),
        }
    }
}

/// Largest order [`enumerate`] accepts.
pub const MAX_ORDER: usize = 6;

/// All LW1 trees of exactly `n` vertices, given those of smaller order.
fn lw1_of_order(n: usize, smaller: &[Vec<LwTree>]) -> Vec<LwTree> {
    let mut out = BTreeSet::new();
    if n == 1 {
        out.insert(LwTree::meagre_leaf());
        out.insert(LwTree::fat_leaf());
        return out.into_iter().collect();
    }
    for child in &smaller[n - 1] {
        out.insert(LwTree::fat(Some(child.clone())));
        if child.color != Color::Meagre {
            out.insert(LwTree::square(child.clone()).expect("child checked"));
        }
    }
    // Meagre roots: non-decreasing child sequences with orders summing to n - 1.
    let pool: Vec<&LwTree> = {
        let mut v: Vec<&LwTree> = smaller[1..n].iter().flatten().collect();
        v.sort();
        v
    };
    let mut stack: Vec<usize> = Vec::new();
    fn extend(
        pool: &[&LwTree],
        start: usize,
        remaining: usize,
        stack: &mut Vec<usize>,
        out: &mut BTreeSet<LwTree>,
    ) {
        if remaining == 0 {
            out.insert(LwTree::meagre(
                stack.iter().map(|&k| pool[k].clone()).collect(),
            ));
            return;
        }
        for k in start..pool.len() {
            if pool[k].order <= remaining {
                stack.push(k);
                extend(pool, k, remaining - pool[k].order, stack, out);
                stack.pop();
            }
        }
    }
    extend(&pool, 0, n - 1, &mut stack, &mut out);
    out.into_iter().collect()
}

/// Every tree of `family` with `ρ ≤ max_order`, sorted by order and then
/// canonically within each order.
pub fn enumerate(family: Family, max_order: usize) -> Result<Vec<LwTree>> {
    if !(1..=MAX_ORDER).contains(&max_order) {
        return Err(Error::invalid(alloc::format!(
            "max_order must lie in 1..={MAX_ORDER}"
        )));
    }
    let mut by_order: Vec<Vec<LwTree>> = vec![Vec::new()];
    for n in 1..=max_order {
        let next = lw1_of_order(n, &by_order);
        by_order.push(next);
    }
    Ok(by_order
        .into_iter()
        .flatten()
        .filter(|t| t.in_family(family))
        .collect())
}

/// Butcher density `γ(τ) = ρ(τ) Π γ(children)`; meagre-only trees.
pub fn density(tree: &LwTree) -> Result<u64> {
    if !tree.is_meagre_only() {
        return Err(Error::NotAMeagreTree);
    }
    Ok(tree.order as u64
        * tree
            .children
            .iter()
            .map(|c| density(c).expect("meagre subtree"))
            .product::<u64>())
}

/// Right-hand side of the order condition: `1/γ(τ)` for meagre-only trees,
/// zero otherwise.
pub fn target(tree: &LwTree) -> f64 {
    match density(tree) {
        Ok(d) => 1.0 / d as f64,
        Err(_) => 0.0,
    }
}

fn powi(x: f64, p: usize) -> f64 {
    (0..p).fold(1.0, |acc, _| acc * x)
}

/// Stage weights `w_j` of `tree` when it hangs below a vertex at stage `j`.
fn inner(tb: &Tableau, tree: &LwTree, method: MethodType) -> Vec<f64> {
    let s = tb.stages();
    if let Some((p, child)) = tree.theta_parts() {
        let u = below(tb, child, method);
        return (0..s)
            .map(|j| match method {
                MethodType::Type1 => (0..=j)
                    .map(|k| tb.gamma(j, k) * powi(tb.gamma(k, k), p) * u[k])
                    .sum(),
                MethodType::Type2 => powi(tb.gamma(j, j), p + 1) * u[j],
                MethodType::Type3 => {
                    powi(tb.gamma(j, j), p) * (0..=j).map(|k| tb.gamma(j, k) * u[k]).sum::<f64>()
                }
            })
            .collect();
    }
    let w = node_product(tb, tree, method);
    (0..s)
        .map(|j| match tree.color {
            Color::Meagre => (0..j).map(|k| tb.a(j, k) * w[k]).sum(),
            _ => (0..=j).map(|k| tb.gamma(j, k) * w[k]).sum(),
        })
        .collect()
}

fn below(tb: &Tableau, child: Option<&LwTree>, method: MethodType) -> Vec<f64> {
    match child {
        Some(c) => inner(tb, c, method),
        None => vec![1.0; tb.stages()],
    }
}

/// `Π_children inner(child)` evaluated stage by stage.
fn node_product(tb: &Tableau, tree: &LwTree, method: MethodType) -> Vec<f64> {
    let mut w = vec![1.0; tb.stages()];
    for c in &tree.children {
        for (wj, cj) in w.iter_mut().zip(inner(tb, c, method)) {
            *wj *= cj;
        }
    }
    w
}

/// The weight sum `Σ_j Φ_j(τ)` a tableau contributes for `tree` under the
/// given method type.
pub fn phi_sum(tb: &Tableau, tree: &LwTree, method: MethodType) -> Result<f64> {
    let family = Family::for_method(method);
    if !tree.in_family(family) {
        return Err(Error::FamilyMismatch { family, method });
    }
    let dot = |weights: &[f64], w: &[f64]| weights.iter().zip(w).map(|(x, y)| x * y).sum();
    Ok(match tree.theta_parts() {
        Some((p, child)) => {
            let u = below(tb, child, method);
            (0..tb.stages())
                .map(|j| tb.g()[j] * powi(tb.gamma(j, j), p) * u[j])
                .sum()
        }
        None => {
            let w = node_product(tb, tree, method);
            match tree.color {
                Color::Meagre => dot(tb.b(), &w),
                _ => dot(tb.g(), &w),
            }
        }
    })
}

/// Printed order of the 23 LW1 trees with at most three vertices; entry
/// `k - 1` is `τk`.
pub const INDEXED_TREES: [&str; 23] = [
    "[ ]_.",
    "[ ]_o",
    "[[ ]_.]_.",
    "[[ ]_o]_.",
    "[[ ]_.]_o",
    "[[ ]_o]_o",
    "θ1[ ]",
    "[[ ]_., [ ]_.]_.",
    "[[ ]_., [ ]_o]_.",
    "[[ ]_o, [ ]_o]_.",
    "[[[ ]_.]_.]_.",
    "[[[ ]_o]_.]_.",
    "[[[ ]_o]_o]_.",
    "[[[ ]_.]_o]_.",
    "[[[ ]_.]_o]_o",
    "[[[ ]_.]_.]_o",
    "[[[ ]_o]_.]_o",
    "[[[ ]_o]_o]_o",
    "θ2[ ]",
    "[θ1[ ]]_o",
    "θ1[[ ]_o]",
    "θ1[[ ]_.]",
    "[θ1[ ]]_.",
];

/// `τk` for `k` in `1..=23`.
pub fn indexed_tree(k: usize) -> Option<LwTree> {
    let s = INDEXED_TREES.get(k.checked_sub(1)?)?;
    Some(s.parse().expect("index table parses"))
}

/// Index `k` with `tree = τk`, if the tree has at most three vertices.
pub fn tree_index(tree: &LwTree) -> Option<usize> {
    if tree.order > 3 {
        return None;
    }
    let rendered = alloc::format!("{tree}");
    INDEXED_TREES
        .iter()
        .position(|s| *s == rendered)
        .map(|k| k + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderConditionRow {
    pub tree: LwTree,
    /// Canonical `τk` index (trees up to order three).
    pub tree_index: Option<usize>,
    /// Label printed next to the condition in the reduced listings, where
    /// it differs from `tree_index`.
    pub listing_label: Option<usize>,
    pub target: f64,
    pub phi: f64,
    pub residual: f64,
}

impl OrderConditionRow {
    fn evaluate(tb: &Tableau, tree: LwTree, method: MethodType) -> Result<Self> {
        let phi = phi_sum(tb, &tree, method)?;
        let target = target(&tree);
        let tree_index = tree_index(&tree);
        Ok(OrderConditionRow {
            tree_index,
            listing_label: tree_index,
            target,
            phi,
            residual: phi - target,
            tree,
        })
    }

    pub fn label(&self) -> String {
        match self.listing_label {
            Some(k) => alloc::format!("τ{k}"),
            None => String::from("-"),
        }
    }
}

/// Order conditions are accepted when every residual is within this bound.
pub const RESIDUAL_TOL: f64 = 1e-10;

pub fn all_hold(rows: &[OrderConditionRow]) -> bool {
    rows.iter().all(|r| r.residual.abs() <= RESIDUAL_TOL)
}

pub fn max_residual(rows: &[OrderConditionRow]) -> f64 {
    rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max)
}

/// One row per tree of the method's family with `ρ ≤ p`.
pub fn verify_order(tb: &Tableau, method: MethodType, p: usize) -> Result<Vec<OrderConditionRow>> {
    enumerate(Family::for_method(method), p)?
        .into_iter()
        .map(|t| OrderConditionRow::evaluate(tb, t, method))
        .collect()
}

/// A condition of the reduced sets: canonical `τ` index and printed label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReducedCondition {
    pub tree_index: usize,
    pub listing_label: usize,
}

const fn same(k: usize) -> ReducedCondition {
    ReducedCondition {
        tree_index: k,
        listing_label: k,
    }
}

/// The nine type-1 conditions left after the diagonal and row-sum choices.
pub const REDUCED_TYPE1: [ReducedCondition; 9] = [
    same(1),
    same(3),
    same(5),
    same(8),
    same(11),
    same(14),
    same(15),
    same(16),
    same(22),
];

/// The ten type-2 conditions. The last two are printed as τ18 and τ19 but
/// depict the trees indexed τ20 and τ23 here.
pub const REDUCED_TYPE2: [ReducedCondition; 10] = [
    same(1),
    same(3),
    same(5),
    same(8),
    same(11),
    same(14),
    same(15),
    same(16),
    ReducedCondition {
        tree_index: 20,
        listing_label: 18,
    },
    ReducedCondition {
        tree_index: 23,
        listing_label: 19,
    },
];

pub fn reduced_conditions(method: MethodType) -> Result<&'static [ReducedCondition]> {
    match method {
        MethodType::Type1 => Ok(&REDUCED_TYPE1),
        MethodType::Type2 => Ok(&REDUCED_TYPE2),
        MethodType::Type3 => Err(Error::invalid("no reduced condition set for type 3")),
    }
}

/// Evaluates the reduced set of `method` against `tb`.
pub fn verify_reduced(tb: &Tableau, method: MethodType) -> Result<Vec<OrderConditionRow>> {
    reduced_conditions(method)?
        .iter()
        .map(|rc| {
            let tree = indexed_tree(rc.tree_index).expect("indices are within the table");
            let mut row = OrderConditionRow::evaluate(tb, tree, method)?;
            row.listing_label = Some(rc.listing_label);
            Ok(row)
        })
        .collect()
}
