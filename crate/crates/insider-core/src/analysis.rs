//! Fault-tree analysis over the bound safety model.
//!
//! [`flatten`] turns the component-structured failure logic into one
//! classical fault tree per out failure port by substituting definitions
//! through failure connections. In failure ports without an incoming
//! connection are failures entering the system boundary; they stay in the
//! tree as leaves alongside basic events. On the flattened tree,
//! [`minimal_cut_sets`] runs bottom-up set algebra and
//! [`top_event_probability`] evaluates the exact probability by Shannon
//! decomposition. Everything is exact and capped in size; there are no
//! sampling or approximation paths.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::ident::QualifiedName;
use crate::safety::{BooleanExpr, SafetyAnalysisModel};
use crate::system::Direction;

/// Hard ceiling on distinct leaves for cut-set and probability
/// computation.
pub const MAX_LEAVES: usize = 24;

/// A Boolean expression whose leaves are qualified basic events or
/// boundary in ports.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum FaultExpr {
    Leaf(QualifiedName),
    And(Vec<FaultExpr>),
    Or(Vec<FaultExpr>),
    Not(Box<FaultExpr>),
}

impl FaultExpr {
    pub fn leaf(q: QualifiedName) -> Self {
        FaultExpr::Leaf(q)
    }

    /// Distinct leaves, sorted.
    pub fn leaves(&self) -> BTreeSet<QualifiedName> {
        let mut out = BTreeSet::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut BTreeSet<QualifiedName>) {
        match self {
            FaultExpr::Leaf(q) => {
                out.insert(q.clone());
            }
            FaultExpr::And(args) | FaultExpr::Or(args) => {
                for a in args {
                    a.collect_leaves(out);
                }
            }
            FaultExpr::Not(a) => a.collect_leaves(out),
        }
    }

    pub fn is_negation_free(&self) -> bool {
        match self {
            FaultExpr::Leaf(_) => true,
            FaultExpr::And(args) | FaultExpr::Or(args) => {
                args.iter().all(|a| a.is_negation_free())
            }
            FaultExpr::Not(_) => false,
        }
    }

    /// Evaluates under a total assignment of the leaves.
    pub fn eval(&self, assignment: &BTreeMap<QualifiedName, bool>) -> Option<bool> {
        match self {
            FaultExpr::Leaf(q) => assignment.get(q).copied(),
            FaultExpr::And(args) => {
                let mut acc = true;
                for a in args {
                    acc &= a.eval(assignment)?;
                }
                Some(acc)
            }
            FaultExpr::Or(args) => {
                let mut acc = false;
                for a in args {
                    acc |= a.eval(assignment)?;
                }
                Some(acc)
            }
            FaultExpr::Not(a) => Some(!a.eval(assignment)?),
        }
    }

    /// Three-valued evaluation under a partial assignment: short-circuits
    /// where the known values already decide the result.
    fn eval_partial(&self, assignment: &BTreeMap<QualifiedName, bool>) -> Option<bool> {
        match self {
            FaultExpr::Leaf(q) => assignment.get(q).copied(),
            FaultExpr::And(args) => {
                let mut all_known_true = true;
                for a in args {
                    match a.eval_partial(assignment) {
                        Some(false) => return Some(false),
                        Some(true) => {}
                        None => all_known_true = false,
                    }
                }
                if all_known_true {
                    Some(true)
                } else {
                    None
                }
            }
            FaultExpr::Or(args) => {
                let mut all_known_false = true;
                for a in args {
                    match a.eval_partial(assignment) {
                        Some(true) => return Some(true),
                        Some(false) => {}
                        None => all_known_false = false,
                    }
                }
                if all_known_false {
                    Some(false)
                } else {
                    None
                }
            }
            FaultExpr::Not(a) => a.eval_partial(assignment).map(|v| !v),
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parenthesize: bool) -> fmt::Result {
        match self {
            FaultExpr::Leaf(q) => write!(f, "{q}"),
            FaultExpr::And(args) => {
                if parenthesize {
                    f.write_str("(")?;
                }
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" & ")?;
                    }
                    a.fmt_prec(f, true)?;
                }
                if parenthesize {
                    f.write_str(")")?;
                }
                Ok(())
            }
            FaultExpr::Or(args) => {
                if parenthesize {
                    f.write_str("(")?;
                }
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" | ")?;
                    }
                    a.fmt_prec(f, true)?;
                }
                if parenthesize {
                    f.write_str(")")?;
                }
                Ok(())
            }
            FaultExpr::Not(a) => {
                f.write_str("!")?;
                a.fmt_prec(f, true)
            }
        }
    }
}

impl fmt::Display for FaultExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, false)
    }
}

/// What a leaf of the flattened tree stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LeafKind {
    /// A basic event of some component.
    Event,
    /// An in failure port with no incoming failure connection: failure
    /// entering at the system boundary.
    BoundaryInput,
}

impl fmt::Display for LeafKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LeafKind::Event => "event",
            LeafKind::BoundaryInput => "boundary input",
        })
    }
}

/// A classical fault tree for one top-level out failure port.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultTree {
    top: QualifiedName,
    expr: FaultExpr,
    leaf_kinds: BTreeMap<QualifiedName, LeafKind>,
}

impl FaultTree {
    /// Assembles a tree, requiring `leaf_kinds` to cover exactly the
    /// leaves of `expr`.
    pub fn new(
        top: QualifiedName,
        expr: FaultExpr,
        leaf_kinds: BTreeMap<QualifiedName, LeafKind>,
    ) -> Result<FaultTree, AnalysisError> {
        let leaves = expr.leaves();
        if !leaves.iter().eq(leaf_kinds.keys()) {
            return Err(AnalysisError::MalformedTree {
                detail: String::from("leaf kinds do not match the expression's leaves"),
            });
        }
        Ok(FaultTree {
            top,
            expr,
            leaf_kinds,
        })
    }

    pub fn top(&self) -> &QualifiedName {
        &self.top
    }

    pub fn expr(&self) -> &FaultExpr {
        &self.expr
    }

    pub fn leaf_kinds(&self) -> &BTreeMap<QualifiedName, LeafKind> {
        &self.leaf_kinds
    }

    /// Distinct leaves, sorted.
    pub fn leaves(&self) -> Vec<QualifiedName> {
        self.leaf_kinds.keys().cloned().collect()
    }
}

/// A minimal set of leaves whose joint occurrence triggers the top event.
pub type CutSet = BTreeSet<QualifiedName>;

/// Analysis failures.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisError {
    UnknownPort(QualifiedName),
    /// The requested top element exists but is not an out failure port.
    NotAnOutPort(QualifiedName),
    CyclicPropagation { cycle: Vec<QualifiedName> },
    /// An out failure port reachable from the top has no definition.
    UndefinedOutportExpression(QualifiedName),
    /// Cut-set analysis requires a tree without negation.
    NonCoherentTree,
    TooLarge { leaves: usize, limit: usize },
    MissingProbability(QualifiedName),
    InvalidProbability { leaf: QualifiedName, value: f64 },
    MalformedTree { detail: String },
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::UnknownPort(q) => write!(f, "unknown failure port {q}"),
            AnalysisError::NotAnOutPort(q) => {
                write!(f, "{q} is not an out failure port")
            }
            AnalysisError::CyclicPropagation { cycle } => {
                write!(f, "failure propagation is cyclic: ")?;
                for (i, q) in cycle.iter().enumerate() {
                    if i > 0 {
                        write!(f, " -> ")?;
                    }
                    write!(f, "{q}")?;
                }
                Ok(())
            }
            AnalysisError::UndefinedOutportExpression(q) => {
                write!(f, "out failure port {q} has no definition")
            }
            AnalysisError::NonCoherentTree => {
                write!(f, "tree contains negation; cut sets are only defined for coherent trees")
            }
            AnalysisError::TooLarge { leaves, limit } => {
                write!(f, "tree has {leaves} leaves, exact analysis is capped at {limit}")
            }
            AnalysisError::MissingProbability(q) => {
                write!(f, "no probability given for leaf {q}")
            }
            AnalysisError::InvalidProbability { leaf, value } => {
                write!(f, "probability {value} for leaf {leaf} is outside [0, 1]")
            }
            AnalysisError::MalformedTree { detail } => write!(f, "malformed fault tree: {detail}"),
        }
    }
}

impl core::error::Error for AnalysisError {}

/// Substitutes failure logic through the propagation structure, producing
/// the classical fault tree for `top`.
pub fn flatten(sam: &SafetyAnalysisModel, top: &QualifiedName) -> Result<FaultTree, AnalysisError> {
    let (_, port) = sam
        .failure_port(top)
        .ok_or_else(|| AnalysisError::UnknownPort(top.clone()))?;
    if port.direction != Direction::Out {
        return Err(AnalysisError::NotAnOutPort(top.clone()));
    }
    let mut leaf_kinds = BTreeMap::new();
    let mut visiting = Vec::new();
    let expr = expand_out(sam, top, &mut visiting, &mut leaf_kinds)?;
    Ok(FaultTree {
        top: top.clone(),
        expr,
        leaf_kinds,
    })
}

fn expand_out(
    sam: &SafetyAnalysisModel,
    out: &QualifiedName,
    visiting: &mut Vec<QualifiedName>,
    leaf_kinds: &mut BTreeMap<QualifiedName, LeafKind>,
) -> Result<FaultExpr, AnalysisError> {
    if let Some(pos) = visiting.iter().position(|q| q == out) {
        let mut cycle: Vec<QualifiedName> = visiting[pos..].to_vec();
        cycle.push(out.clone());
        return Err(AnalysisError::CyclicPropagation { cycle });
    }
    let component = sam
        .component(out.component())
        .expect("expand_out is called on resolved ports");
    let definition = component
        .definition(out.element())
        .ok_or_else(|| AnalysisError::UndefinedOutportExpression(out.clone()))?;
    visiting.push(out.clone());
    let expr = substitute(sam, component.name.as_str(), definition, visiting, leaf_kinds)?;
    visiting.pop();
    Ok(expr)
}

fn substitute(
    sam: &SafetyAnalysisModel,
    component: &str,
    expr: &BooleanExpr,
    visiting: &mut Vec<QualifiedName>,
    leaf_kinds: &mut BTreeMap<QualifiedName, LeafKind>,
) -> Result<FaultExpr, AnalysisError> {
    match expr {
        BooleanExpr::Event(n) => {
            let q = QualifiedName::new(component, n).expect("validated model names");
            leaf_kinds.insert(q.clone(), LeafKind::Event);
            Ok(FaultExpr::Leaf(q))
        }
        BooleanExpr::InPort(n) => {
            let q = QualifiedName::new(component, n).expect("validated model names");
            match sam.incoming_failure_connection(&q) {
                Some(con) => {
                    let source = con.source.clone();
                    expand_out(sam, &source, visiting, leaf_kinds)
                }
                None => {
                    leaf_kinds.insert(q.clone(), LeafKind::BoundaryInput);
                    Ok(FaultExpr::Leaf(q))
                }
            }
        }
        BooleanExpr::And(args) => Ok(FaultExpr::And(
            args.iter()
                .map(|a| substitute(sam, component, a, visiting, leaf_kinds))
                .collect::<Result<_, _>>()?,
        )),
        BooleanExpr::Or(args) => Ok(FaultExpr::Or(
            args.iter()
                .map(|a| substitute(sam, component, a, visiting, leaf_kinds))
                .collect::<Result<_, _>>()?,
        )),
        BooleanExpr::Not(a) => Ok(FaultExpr::Not(Box::new(substitute(
            sam, component, a, visiting, leaf_kinds,
        )?))),
    }
}

/// Exactly the minimal sets of leaves that trigger the top event, by
/// bottom-up set-family algebra with minimization.
pub fn minimal_cut_sets(ft: &FaultTree) -> Result<BTreeSet<CutSet>, AnalysisError> {
    if !ft.expr.is_negation_free() {
        return Err(AnalysisError::NonCoherentTree);
    }
    let n = ft.leaf_kinds.len();
    if n > MAX_LEAVES {
        return Err(AnalysisError::TooLarge {
            leaves: n,
            limit: MAX_LEAVES,
        });
    }
    let result = cut_set_family(&ft.expr);
    #[cfg(debug_assertions)]
    if n <= 16 {
        debug_assert_eq!(
            result,
            enumerate_minimal_cut_sets(ft),
            "set algebra and exhaustive enumeration disagree"
        );
    }
    Ok(result)
}

fn cut_set_family(expr: &FaultExpr) -> BTreeSet<CutSet> {
    match expr {
        FaultExpr::Leaf(q) => {
            let mut s = BTreeSet::new();
            s.insert([q.clone()].into_iter().collect());
            s
        }
        FaultExpr::Or(args) => {
            let mut family: BTreeSet<CutSet> = BTreeSet::new();
            for a in args {
                family.extend(cut_set_family(a));
            }
            minimize(family)
        }
        FaultExpr::And(args) => {
            let mut family: BTreeSet<CutSet> = [CutSet::new()].into_iter().collect();
            for a in args {
                let rhs = cut_set_family(a);
                let mut product = BTreeSet::new();
                for left in &family {
                    for right in &rhs {
                        let mut merged = left.clone();
                        merged.extend(right.iter().cloned());
                        product.insert(merged);
                    }
                }
                family = minimize(product);
            }
            family
        }
        FaultExpr::Not(_) => unreachable!("negation rejected before cut-set computation"),
    }
}

fn minimize(family: BTreeSet<CutSet>) -> BTreeSet<CutSet> {
    family
        .iter()
        .filter(|s| {
            !family
                .iter()
                .any(|other| other.len() < s.len() && other.is_subset(s))
        })
        .cloned()
        .collect()
}

/// Brute-force reference: tries every leaf subset. Only used to
/// cross-check the algebraic path on small trees.
#[cfg(debug_assertions)]
fn enumerate_minimal_cut_sets(ft: &FaultTree) -> BTreeSet<CutSet> {
    let leaves = ft.leaves();
    let n = leaves.len();
    let triggers = |mask: u32| -> bool {
        let assignment: BTreeMap<QualifiedName, bool> = leaves
            .iter()
            .enumerate()
            .map(|(i, q)| (q.clone(), mask & (1 << i) != 0))
            .collect();
        ft.expr.eval(&assignment).expect("assignment is total")
    };
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << n) {
        if !triggers(mask) {
            continue;
        }
        let minimal = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .all(|i| !triggers(mask & !(1 << i)));
        if minimal {
            out.insert(
                leaves
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, q)| q.clone())
                    .collect(),
            );
        }
    }
    out
}

/// Exact top-event probability under leaf independence, by Shannon
/// decomposition with short-circuit partial evaluation. Negation is
/// allowed here.
pub fn top_event_probability(
    ft: &FaultTree,
    probs: &BTreeMap<QualifiedName, f64>,
) -> Result<f64, AnalysisError> {
    let leaves = ft.leaves();
    if leaves.len() > MAX_LEAVES {
        return Err(AnalysisError::TooLarge {
            leaves: leaves.len(),
            limit: MAX_LEAVES,
        });
    }
    for leaf in &leaves {
        match probs.get(leaf) {
            None => return Err(AnalysisError::MissingProbability(leaf.clone())),
            Some(p) if !(0.0..=1.0).contains(p) => {
                return Err(AnalysisError::InvalidProbability {
                    leaf: leaf.clone(),
                    value: *p,
                })
            }
            Some(_) => {}
        }
    }
    let mut assignment = BTreeMap::new();
    Ok(shannon(&ft.expr, &leaves, 0, &mut assignment, probs))
}

fn shannon(
    expr: &FaultExpr,
    leaves: &[QualifiedName],
    next: usize,
    assignment: &mut BTreeMap<QualifiedName, bool>,
    probs: &BTreeMap<QualifiedName, f64>,
) -> f64 {
    match expr.eval_partial(assignment) {
        Some(true) => return 1.0,
        Some(false) => return 0.0,
        None => {}
    }
    debug_assert!(next < leaves.len(), "undecided expression must have an unset leaf");
    let leaf = &leaves[next];
    let p = probs[leaf];
    assignment.insert(leaf.clone(), true);
    let on = shannon(expr, leaves, next + 1, assignment, probs);
    assignment.insert(leaf.clone(), false);
    let off = shannon(expr, leaves, next + 1, assignment, probs);
    assignment.remove(leaf);
    p * on + (1.0 - p) * off
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;
    use alloc::string::ToString;
    use alloc::vec;

    fn q(s: &str) -> QualifiedName {
        QualifiedName::parse(s).unwrap()
    }

    /// Independent reference: evaluate the safety model by message
    /// passing, one port at a time, instead of flattening.
    fn propagation_eval(
        sam: &SafetyAnalysisModel,
        top: &QualifiedName,
        assignment: &BTreeMap<QualifiedName, bool>,
    ) -> bool {
        fn value_of(
            sam: &SafetyAnalysisModel,
            q: &QualifiedName,
            assignment: &BTreeMap<QualifiedName, bool>,
        ) -> bool {
            if let Some(v) = assignment.get(q) {
                return *v;
            }
            let c = sam.component(q.component()).unwrap();
            if let Some(fp) = c.failure_port(q.element()) {
                if fp.direction == Direction::In {
                    let con = sam.incoming_failure_connection(q).expect("bound in port");
                    return value_of(sam, &con.source, assignment);
                }
                let def = c.definition(q.element()).expect("defined out port");
                let local: BTreeMap<String, bool> = def
                    .references()
                    .iter()
                    .map(|r| {
                        let qn = QualifiedName::new(&c.name, r.name()).unwrap();
                        (r.name().to_string(), value_of(sam, &qn, assignment))
                    })
                    .collect();
                return def.eval(&local).unwrap();
            }
            unreachable!("assignment covers events and boundary ports");
        }
        value_of(sam, top, assignment)
    }

    #[test]
    fn flattens_the_sample_tops() {
        let sam = samples::pipeline_safety();
        let j = flatten(&sam, &q("c3.j")).unwrap();
        assert_eq!(j.expr().to_string(), "(c1.a | c1.x) & c3.z");
        assert_eq!(j.leaf_kinds().get(&q("c1.a")), Some(&LeafKind::BoundaryInput));
        assert_eq!(j.leaf_kinds().get(&q("c1.x")), Some(&LeafKind::Event));
        assert_eq!(j.leaf_kinds().get(&q("c3.z")), Some(&LeafKind::Event));

        let h = flatten(&sam, &q("c2.h")).unwrap();
        assert_eq!(h.expr().to_string(), "(c1.a & c1.w) | c2.y");

        let i = flatten(&sam, &q("c2.i")).unwrap();
        assert_eq!(i.expr().to_string(), "c1.a");

        let c = flatten(&sam, &q("c1.c")).unwrap();
        assert_eq!(c.expr().to_string(), "c1.a");
    }

    #[test]
    fn flattening_agrees_with_message_propagation_on_all_assignments() {
        let sam = samples::pipeline_safety();
        let leaves = [q("c1.a"), q("c1.w"), q("c1.x"), q("c2.y"), q("c3.z")];
        for top in ["c3.j", "c2.h", "c2.i", "c1.b", "c1.c", "c1.d"] {
            let top = q(top);
            let ft = flatten(&sam, &top).unwrap();
            for mask in 0u32..(1 << leaves.len()) {
                let assignment: BTreeMap<QualifiedName, bool> = leaves
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.clone(), mask & (1 << i) != 0))
                    .collect();
                assert_eq!(
                    ft.expr().eval(&assignment).unwrap(),
                    propagation_eval(&sam, &top, &assignment),
                    "mismatch for top {top} under mask {mask:05b}"
                );
            }
        }
    }

    #[test]
    fn flatten_rejects_bad_tops() {
        let sam = samples::pipeline_safety();
        assert_eq!(
            flatten(&sam, &q("c9.x")),
            Err(AnalysisError::UnknownPort(q("c9.x")))
        );
        assert_eq!(
            flatten(&sam, &q("c1.a")),
            Err(AnalysisError::NotAnOutPort(q("c1.a")))
        );
    }

    #[test]
    fn flatten_reports_undefined_logic_and_cycles() {
        let mut comps = samples::pipeline_safety().components().to_vec();
        for c in &mut comps {
            if c.name == "c1" {
                c.definitions.insert("d".into(), None);
            }
        }
        let sam = SafetyAnalysisModel::build(
            comps,
            samples::pipeline_safety().failure_connections().to_vec(),
        )
        .unwrap();
        assert_eq!(
            flatten(&sam, &q("c3.j")),
            Err(AnalysisError::UndefinedOutportExpression(q("c1.d")))
        );

        use crate::safety::{FailureConnection, FailurePort, SamComponent};
        let mut a = SamComponent::new("a");
        a.failure_ports = vec![
            FailurePort::new("i", Direction::In, q("a.p")),
            FailurePort::new("o", Direction::Out, q("a.r")),
        ];
        a.definitions
            .insert("o".into(), Some(BooleanExpr::in_port("i")));
        let mut b = SamComponent::new("b");
        b.failure_ports = vec![
            FailurePort::new("i", Direction::In, q("b.p")),
            FailurePort::new("o", Direction::Out, q("b.r")),
        ];
        b.definitions
            .insert("o".into(), Some(BooleanExpr::in_port("i")));
        let looped = SafetyAnalysisModel::build(
            vec![a, b],
            vec![
                FailureConnection::new("f1", q("a.o"), q("b.i")),
                FailureConnection::new("f2", q("b.o"), q("a.i")),
            ],
        )
        .unwrap();
        assert!(matches!(
            flatten(&looped, &q("a.o")),
            Err(AnalysisError::CyclicPropagation { .. })
        ));
    }

    fn cut(names: &[&str]) -> CutSet {
        names.iter().map(|n| q(n)).collect()
    }

    #[test]
    fn minimal_cut_sets_of_the_sample() {
        let sam = samples::pipeline_safety();
        let j = minimal_cut_sets(&flatten(&sam, &q("c3.j")).unwrap()).unwrap();
        assert_eq!(
            j,
            [cut(&["c1.a", "c3.z"]), cut(&["c1.x", "c3.z"])]
                .into_iter()
                .collect()
        );
        let h = minimal_cut_sets(&flatten(&sam, &q("c2.h")).unwrap()).unwrap();
        assert_eq!(
            h,
            [cut(&["c2.y"]), cut(&["c1.a", "c1.w"])]
                .into_iter()
                .collect()
        );
        let single = minimal_cut_sets(&flatten(&sam, &q("c2.i")).unwrap()).unwrap();
        assert_eq!(single, [cut(&["c1.a"])].into_iter().collect());
    }

    #[test]
    fn cut_sets_are_sound_and_minimal() {
        let sam = samples::pipeline_safety();
        for top in ["c3.j", "c2.h", "c1.b", "c1.d"] {
            let ft = flatten(&sam, &q(top)).unwrap();
            let all_leaves = ft.leaves();
            for cs in minimal_cut_sets(&ft).unwrap() {
                let mut assignment: BTreeMap<QualifiedName, bool> =
                    all_leaves.iter().map(|l| (l.clone(), false)).collect();
                for l in &cs {
                    assignment.insert(l.clone(), true);
                }
                assert_eq!(ft.expr().eval(&assignment), Some(true));
                for dropped in &cs {
                    assignment.insert(dropped.clone(), false);
                    assert_eq!(ft.expr().eval(&assignment), Some(false));
                    assignment.insert(dropped.clone(), true);
                }
            }
        }
    }

    #[test]
    fn negation_is_rejected_for_cut_sets_but_not_probability() {
        let expr = FaultExpr::Not(Box::new(FaultExpr::Leaf(q("c.e"))));
        let kinds = [(q("c.e"), LeafKind::Event)].into_iter().collect();
        let ft = FaultTree::new(q("c.top"), expr, kinds).unwrap();
        assert_eq!(minimal_cut_sets(&ft), Err(AnalysisError::NonCoherentTree));
        let probs = [(q("c.e"), 0.1)].into_iter().collect();
        let p = top_event_probability(&ft, &probs).unwrap();
        assert!((p - 0.9).abs() < 1e-12);
    }

    #[test]
    fn probability_of_the_sample_top() {
        let sam = samples::pipeline_safety();
        let ft = flatten(&sam, &q("c3.j")).unwrap();
        let probs: BTreeMap<QualifiedName, f64> =
            [(q("c1.a"), 0.1), (q("c1.x"), 0.2), (q("c3.z"), 0.5)]
                .into_iter()
                .collect();
        let p = top_event_probability(&ft, &probs).unwrap();
        assert!((p - 0.14).abs() < 1e-12, "got {p}");
    }

    #[test]
    fn probability_edge_cases() {
        let sam = samples::pipeline_safety();
        let ft = flatten(&sam, &q("c3.j")).unwrap();
        let zeros: BTreeMap<QualifiedName, f64> = ft.leaves().into_iter().map(|l| (l, 0.0)).collect();
        assert_eq!(top_event_probability(&ft, &zeros).unwrap(), 0.0);
        let ones: BTreeMap<QualifiedName, f64> = ft.leaves().into_iter().map(|l| (l, 1.0)).collect();
        assert_eq!(top_event_probability(&ft, &ones).unwrap(), 1.0);

        let single = flatten(&sam, &q("c2.i")).unwrap();
        let p = top_event_probability(&single, &[(q("c1.a"), 0.37)].into_iter().collect()).unwrap();
        assert!((p - 0.37).abs() < 1e-12);

        assert_eq!(
            top_event_probability(&ft, &BTreeMap::new()),
            Err(AnalysisError::MissingProbability(q("c1.a")))
        );
        let bad = [(q("c1.a"), 1.5), (q("c1.x"), 0.2), (q("c3.z"), 0.5)]
            .into_iter()
            .collect();
        assert!(matches!(
            top_event_probability(&ft, &bad),
            Err(AnalysisError::InvalidProbability { .. })
        ));
    }

    #[test]
    fn probability_agrees_with_exhaustive_enumeration() {
        let sam = samples::pipeline_safety();
        for top in ["c3.j", "c2.h", "c1.b", "c1.d"] {
            let ft = flatten(&sam, &q(top)).unwrap();
            let leaves = ft.leaves();
            let probs: BTreeMap<QualifiedName, f64> = leaves
                .iter()
                .enumerate()
                .map(|(i, l)| (l.clone(), 0.05 + 0.13 * i as f64))
                .collect();
            let mut expected = 0.0;
            for mask in 0u32..(1 << leaves.len()) {
                let assignment: BTreeMap<QualifiedName, bool> = leaves
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (l.clone(), mask & (1 << i) != 0))
                    .collect();
                if ft.expr().eval(&assignment).unwrap() {
                    let weight: f64 = leaves
                        .iter()
                        .enumerate()
                        .map(|(i, l)| {
                            if mask & (1 << i) != 0 {
                                probs[l]
                            } else {
                                1.0 - probs[l]
                            }
                        })
                        .product();
                    expected += weight;
                }
            }
            let got = top_event_probability(&ft, &probs).unwrap();
            assert!(
                (got - expected).abs() < 1e-12,
                "top {top}: got {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn size_cap_is_enforced() {
        let leaves: Vec<QualifiedName> = (0..MAX_LEAVES + 1)
            .map(|i| q(&alloc::format!("c.e{i:02}")))
            .collect();
        let expr = FaultExpr::Or(leaves.iter().cloned().map(FaultExpr::Leaf).collect());
        let kinds = leaves.iter().map(|l| (l.clone(), LeafKind::Event)).collect();
        let ft = FaultTree::new(q("c.top"), expr, kinds).unwrap();
        assert!(matches!(
            minimal_cut_sets(&ft),
            Err(AnalysisError::TooLarge { .. })
        ));
        let probs = leaves.iter().map(|l| (l.clone(), 0.1)).collect();
        assert!(matches!(
            top_event_probability(&ft, &probs),
            Err(AnalysisError::TooLarge { .. })
        ));
    }
}
