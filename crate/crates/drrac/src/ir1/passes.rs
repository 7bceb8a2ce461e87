//! Platform-independent IR1 transformations: dependency analysis, constant
//! folding and propagation, dead code elimination, and loop-to-vector
//! conversion.

use std::collections::{BTreeMap, BTreeSet};

use crate::expr::{Affine, Expr};

use super::{
    classify_dependency, AccessPattern, Cadfg, ComputeOp, DepClass, EdgeKind, Hazard, RegionKind,
    Strength, VertexId, VertexKind,
};

/// Classify every recorded dependency edge. Fake edges are deleted; weak
/// edges whose write stream revisits an address are conservatively
/// downgraded to strong (the one-cycle offset rule is only sound for
/// injective write streams). Symbolic patterns are strong.
pub fn analyze_dependencies(g: &mut Cadfg) {
    for id in g.edge_ids() {
        let (src, dst, hazard) = match &g.edge(id).kind {
            EdgeKind::Dependency { hazard, .. } => (g.edge(id).src, g.edge(id).dst, *hazard),
            _ => continue,
        };
        let pred = g.pattern_of(src);
        let succ = g.pattern_of(dst);
        let class = match (pred, succ) {
            (Some(p), Some(s)) => {
                let pw = matches!(g.vertex(src).kind, VertexKind::Write { .. });
                let sw = matches!(g.vertex(dst).kind, VertexKind::Write { .. });
                let mut class = classify_dependency(
                    &AccessPattern { fn_: p, write: pw },
                    &AccessPattern { fn_: s, write: sw },
                );
                if class == DepClass::Weak {
                    let writes_injective = match hazard {
                        Hazard::Raw => p.is_injective(),
                        Hazard::War => s.is_injective(),
                        Hazard::Waw => p.is_injective() && s.is_injective(),
                    };
                    if !writes_injective {
                        class = DepClass::Strong;
                    }
                }
                class
            }
            _ => DepClass::Strong,
        };
        match class {
            DepClass::Fake => g.remove_edge(id),
            DepClass::Weak => set_strength(g, id, Strength::Weak),
            DepClass::Strong => set_strength(g, id, Strength::Strong),
        }
    }
}

fn set_strength(g: &mut Cadfg, id: usize, s: Strength) {
    let edge = g.edges[id].as_mut().expect("edge deleted");
    if let EdgeKind::Dependency { strength, .. } = &mut edge.kind {
        *strength = s;
    }
}

fn wrap_op(op: ComputeOp, a: i16, b: i16, count: u32) -> Option<i16> {
    Some(match op {
        ComputeOp::Add => a.wrapping_add(b),
        ComputeOp::Sub => a.wrapping_sub(b),
        ComputeOp::Mul => a.wrapping_mul(b),
        ComputeOp::Mac => {
            let mut acc: i16 = 0;
            for _ in 0..count {
                acc = acc.wrapping_add(a.wrapping_mul(b));
            }
            acc
        }
        // comparisons set a flag, not a value
        ComputeOp::Cmp(_) => return None,
    })
}

/// Fold constant subtrees: address/constraint expressions, and compute
/// vertices whose operands are all constants. Runs to a fixpoint.
pub fn fold_constants(g: &mut Cadfg) {
    loop {
        let mut changed = false;
        // expression-level folding
        let ids: Vec<VertexId> = g.vertices().map(|v| v.id).collect();
        for id in ids.clone() {
            let v = g.vertex_mut(id);
            match &mut v.kind {
                VertexKind::Address { agu } => {
                    let folded = agu.base.fold();
                    if folded != agu.base {
                        agu.base = folded;
                        changed = true;
                    }
                }
                VertexKind::Constraint { expr, .. } => {
                    let folded = expr.fold();
                    if folded != *expr {
                        *expr = folded;
                        changed = true;
                    }
                }
                _ => {}
            }
        }
        // graph-level folding of constant computes
        for id in ids {
            let (op, count) = match &g.vertex(id).kind {
                VertexKind::Compute { op, count } => (*op, *count),
                _ => continue,
            };
            let mut operands: Vec<(u8, VertexId)> = g
                .in_edges(id)
                .filter_map(|e| match e.kind {
                    EdgeKind::Data { operand } => Some((operand, e.src)),
                    _ => None,
                })
                .collect();
            operands.sort_by_key(|(o, _)| *o);
            let vals: Option<Vec<i16>> = operands
                .iter()
                .map(|(_, src)| match g.vertex(*src).kind {
                    VertexKind::Const { val } => Some(val as i16),
                    _ => None,
                })
                .collect();
            let Some(vals) = vals else { continue };
            if vals.len() != 2 {
                continue;
            }
            let Some(result) = wrap_op(op, vals[0], vals[1], count) else {
                continue;
            };
            // replace the compute with a constant; operand edges disappear
            let in_ids: Vec<usize> = g.in_edges(id).map(|e| e.id).collect();
            for e in in_ids {
                g.remove_edge(e);
            }
            g.vertex_mut(id).kind = VertexKind::Const {
                val: result as i64,
            };
            changed = true;
        }
        if !changed {
            return;
        }
    }
}

/// Substitute known constants into consumers: constant constraint values
/// move into their target address field (removing the constraint vertex),
/// and reads of never-written constant scalars become constants. Includes
/// internal folding so substitution chains resolve in one call.
pub fn propagate_constants(g: &mut Cadfg) {
    loop {
        fold_constants(g);
        let mut changed = false;

        // constant constraints fold into the address field
        let ids: Vec<VertexId> = g.vertices().map(|v| v.id).collect();
        for id in ids.clone() {
            let (expr, target) = match &g.vertex(id).kind {
                VertexKind::Constraint { expr, target } => (expr.clone(), *target),
                _ => continue,
            };
            if let Some(c) = expr.as_const() {
                if let VertexKind::Address { agu } = &mut g.vertex_mut(target).kind {
                    agu.base = Expr::Const(c);
                }
                g.remove_vertex(id);
                changed = true;
            }
        }

        // reads of constant, never-written scalars
        let written: BTreeSet<String> = g
            .vertices()
            .filter_map(|v| match &v.kind {
                VertexKind::Write { var } => Some(var.clone()),
                _ => None,
            })
            .collect();
        for id in ids {
            let var = match g.try_vertex(id).map(|v| &v.kind) {
                Some(VertexKind::Read { var }) => var.clone(),
                _ => continue,
            };
            if written.contains(&var) {
                continue;
            }
            let Some(val) = g.const_inits.get(&var).copied() else {
                continue;
            };
            if let Some(addr) = g.address_of(id) {
                g.remove_vertex(addr);
            }
            g.vertex_mut(id).kind = VertexKind::Const { val: val as i64 };
            changed = true;
        }
        if !changed {
            return;
        }
    }
}

/// Remove vertices that cannot reach any write of an output variable.
/// Memory flow is followed through recorded RAW edges; control vertices
/// stay alive while their regions contain live work.
pub fn eliminate_dead_code(g: &mut Cadfg) {
    let mut live: BTreeSet<VertexId> = BTreeSet::new();
    let mut work: Vec<VertexId> = g
        .vertices()
        .filter(|v| match &v.kind {
            VertexKind::Write { var } => g.outputs.contains(var),
            _ => false,
        })
        .map(|v| v.id)
        .collect();
    while let Some(id) = work.pop() {
        if !live.insert(id) {
            continue;
        }
        for e in g.in_edges(id) {
            match e.kind {
                EdgeKind::Data { .. } | EdgeKind::AddressStream => work.push(e.src),
                EdgeKind::Dependency { hazard: Hazard::Raw, .. }
                    if matches!(g.vertex(id).kind, VertexKind::Read { .. }) =>
                {
                    work.push(e.src)
                }
                _ => {}
            }
        }
        for region in g.region_path(g.vertex(id).region) {
            match g.regions[region].kind {
                RegionKind::LoopBody(owner)
                | RegionKind::Then(owner)
                | RegionKind::Else(owner) => work.push(owner),
                RegionKind::Top => {}
            }
        }
    }
    let dead: Vec<VertexId> = g
        .vertices()
        .filter(|v| !live.contains(&v.id))
        .map(|v| v.id)
        .collect();
    for id in dead {
        g.remove_vertex(id);
    }
    // regions whose owner vanished hold nothing anymore
    for r in 0..g.regions.len() {
        let owner = match g.regions[r].kind {
            RegionKind::LoopBody(v) | RegionKind::Then(v) | RegionKind::Else(v) => Some(v),
            RegionKind::Top => None,
        };
        if let Some(v) = owner {
            if g.try_vertex(v).is_none() {
                g.regions[r].alive = false;
            }
        }
    }
}

fn expr_from_affine(a: &Affine) -> Expr {
    let mut acc = Expr::Const(a.base);
    for (iter, coeff) in &a.coeffs {
        let term = if *coeff == 1 {
            Expr::Iter(*iter)
        } else {
            Expr::mul(Expr::Const(*coeff), Expr::Iter(*iter))
        };
        acc = if matches!(acc, Expr::Const(0)) {
            term
        } else {
            Expr::add(acc, term)
        };
    }
    acc.fold()
}

/// Replace innermost loops whose body is a single elementwise assignment
/// (affine in the loop iterator, one address level) with a vector
/// operation: the iterator is absorbed into the outer level of each
/// address function and the loop vertex disappears. Non-matching loops are
/// left untouched. Runs until no loop matches.
pub fn loop_to_vector(g: &mut Cadfg) {
    'outer: loop {
        let candidates: Vec<usize> = g
            .regions
            .iter()
            .filter(|r| {
                r.alive
                    && matches!(r.kind, RegionKind::LoopBody(_))
                    && g.child_regions(r.id).is_empty()
            })
            .map(|r| r.id)
            .collect();
        for region in candidates {
            if try_vectorize(g, region) {
                continue 'outer;
            }
        }
        return;
    }
}

fn try_vectorize(g: &mut Cadfg, region: usize) -> bool {
    let RegionKind::LoopBody(loop_vid) = g.regions[region].kind else {
        return false;
    };
    let verts = g.region_verts(region);
    if verts.is_empty() {
        return false;
    }
    let mut stmts: BTreeSet<usize> = BTreeSet::new();
    let mut writes = 0;
    for &id in &verts {
        let v = g.vertex(id);
        stmts.insert(v.stmt);
        match &v.kind {
            VertexKind::Write { .. } => writes += 1,
            VertexKind::Read { .. }
            | VertexKind::Const { .. }
            | VertexKind::Constraint { .. } => {}
            VertexKind::Compute { op, .. } => {
                if matches!(op, ComputeOp::Mac | ComputeOp::Cmp(_)) {
                    return false;
                }
            }
            VertexKind::Address { agu } => {
                if agu.level2.is_some() || agu.base.affine().is_none() {
                    return false;
                }
            }
            VertexKind::Loop { .. } | VertexKind::Branch => return false,
        }
    }
    if stmts.len() != 1 || writes != 1 {
        return false;
    }
    let count = match &g.vertex(loop_vid).kind {
        VertexKind::Loop { count, .. } => *count,
        _ => return false,
    };

    // absorb the iterator into the outer address level
    for &id in &verts {
        let kind = g.vertex(id).kind.clone();
        match kind {
            VertexKind::Address { agu } => {
                let aff = agu.base.affine().expect("checked affine");
                let coeff = aff.coeff(loop_vid);
                let mut rest = aff.clone();
                rest.coeffs.remove(&loop_vid);
                let new_base = expr_from_affine(&rest);
                let now_const = new_base.is_const();
                if let VertexKind::Address { agu } = &mut g.vertex_mut(id).kind {
                    agu.base = new_base.clone();
                    agu.level2 = Some((coeff, count));
                }
                // the constraint follows the base
                let constraint: Vec<VertexId> = g
                    .vertices()
                    .filter(|v| matches!(&v.kind, VertexKind::Constraint { target, .. } if *target == id))
                    .map(|v| v.id)
                    .collect();
                for c in constraint {
                    if now_const {
                        g.remove_vertex(c);
                    } else if let VertexKind::Constraint { expr, .. } = &mut g.vertex_mut(c).kind {
                        *expr = new_base.clone();
                    }
                }
            }
            VertexKind::Compute { .. } => {
                if let VertexKind::Compute { count: c, .. } = &mut g.vertex_mut(id).kind {
                    *c *= count;
                }
            }
            _ => {}
        }
    }
    let parent = g.regions[region].parent;
    for &id in &verts {
        if g.try_vertex(id).is_some() {
            g.vertex_mut(id).region = parent;
        }
    }
    g.remove_vertex(loop_vid);
    g.regions[region].alive = false;
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_pragmas, parse_program};
    use crate::ir1::build_cadfg;

    fn build(src: &str) -> Cadfg {
        let ast = parse_program(src).unwrap();
        let pragmas = parse_pragmas(src).unwrap();
        build_cadfg(&ast, &pragmas)
    }

    fn counts(g: &Cadfg) -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for v in g.vertices() {
            *m.entry(v.kind.name()).or_insert(0) += 1;
        }
        m
    }

    const HEADER: &str = "%!bind A rf(0,0)@0\n%!bind B rf(0,0)@8\n%!bind C rf(0,0)@16\n%!out A\n\
                          B = input(8);\nC = input(8);\nA = zeros(8);\n";

    #[test]
    fn loop_to_vector_matches_direct_form() {
        let mut looped = build(&format!(
            "{HEADER}for i = 1:8\n  A(i) = B(i) + C(i);\nend\n"
        ));
        loop_to_vector(&mut looped);
        let direct = build(&format!("{HEADER}A(1:8) = B(1:8) + C(1:8);\n"));
        // same vertex inventory after conversion
        let mut lc = counts(&looped);
        lc.remove("CONSTRAINT");
        assert_eq!(lc, counts(&direct));
        // and the composed patterns generate identical streams
        let looped_streams: Vec<Vec<i64>> = looped
            .vertices()
            .filter_map(|v| match &v.kind {
                VertexKind::Address { agu } => Some(agu.resolved().unwrap().stream()),
                _ => None,
            })
            .collect();
        let direct_streams: Vec<Vec<i64>> = direct
            .vertices()
            .filter_map(|v| match &v.kind {
                VertexKind::Address { agu } => Some(agu.resolved().unwrap().stream()),
                _ => None,
            })
            .collect();
        assert_eq!(looped_streams, direct_streams);
        assert!(looped.check_well_formed().is_ok());
    }

    #[test]
    fn strided_loop_composes_levels() {
        let src = "%!bind A rf(0,0)@0\n%!bind B rf(0,0)@16\n%!out A\n\
                   B = input(4);\nA = zeros(8);\nfor i = 1:4\n  A(2*i) = B(i);\nend\n";
        let mut g = build(src);
        loop_to_vector(&mut g);
        assert!(!g.vertices().any(|v| matches!(v.kind, VertexKind::Loop { .. })));
        let streams: Vec<Vec<i64>> = g
            .vertices()
            .filter_map(|v| match &v.kind {
                VertexKind::Address { agu } => Some(agu.resolved().unwrap().stream()),
                _ => None,
            })
            .collect();
        // A(2i) for i in 1..=4 is addresses 1,3,5,7; B(i) is 16..=19
        assert!(streams.contains(&vec![1, 3, 5, 7]));
        assert!(streams.contains(&vec![16, 17, 18, 19]));
    }

    #[test]
    fn loop_with_branch_is_untouched() {
        let src = "%!bind A rf(0,0)@0\n%!bind t rf(0,0)@9\n%!out A\n\
                   t = input();\nA = zeros(8);\n\
                   for i = 1:8\n  if t == 0\n    A(i) = 1;\n  end\nend\n";
        let mut g = build(src);
        let before = counts(&g);
        loop_to_vector(&mut g);
        assert_eq!(before, counts(&g));
    }

    #[test]
    fn analyze_classifies_and_removes_fake() {
        // A(1:4) disjoint from A(5:8): fake; identical A(1:8) pair: weak
        let src = "%!bind A rf(0,0)@0\n%!bind B rf(0,0)@8\n%!bind C rf(0,0)@16\n%!bind D rf(0,0)@24\n%!out C\n%!out D\n\
                   B = input(8);\nA = zeros(8);\nC = zeros(4);\nD = zeros(8);\n\
                   A(1:4) = B(1:4) + 0;\nC(1:4) = A(5:8) * 1;\nD(1:8) = A(1:8) - 0;\n";
        let mut g = build(src);
        analyze_dependencies(&mut g);
        let strengths: Vec<(Hazard, Strength)> = g
            .edges()
            .filter_map(|e| match e.kind {
                EdgeKind::Dependency { hazard, strength } => Some((hazard, strength)),
                _ => None,
            })
            .collect();
        // W A(1:4) -> R A(5:8) was fake (removed); W A(1:4) -> R A(1:8) strong
        assert_eq!(strengths, vec![(Hazard::Raw, Strength::Strong)]);
    }

    #[test]
    fn identical_pattern_chain_is_weak() {
        let src = "%!bind A rf(0,0)@0\n%!bind B rf(0,0)@8\n%!bind C rf(0,0)@16\n%!out C\n\
                   B = input(8);\nA = zeros(8);\nC = zeros(8);\n\
                   A(1:8) = B(1:8) + 1;\nC(1:8) = A(1:8) * 2;\n";
        let mut g = build(src);
        analyze_dependencies(&mut g);
        let weak = g
            .edges()
            .filter(|e| {
                matches!(
                    e.kind,
                    EdgeKind::Dependency {
                        strength: Strength::Weak,
                        ..
                    }
                )
            })
            .count();
        assert_eq!(weak, 1);
    }

    #[test]
    fn fold_simplifies_constraint_exprs() {
        let src = "%!bind A rf(0,0)@0\n%!bind B rf(0,0)@32\n%!out A\n\
                   B = input(16);\nA = zeros(16);\n\
                   for i = 1:4\n  A((2+3)*i - 4) = B(i);\nend\n";
        let mut g = build(src);
        fold_constants(&mut g);
        // (2+3)*i-4 with i = 1+idx folds to an affine form with a folded
        // constant; no Add(Const,Const) subtrees remain
        for v in g.vertices() {
            if let VertexKind::Constraint { expr, .. } = &v.kind {
                assert_eq!(expr, &expr.fold());
            }
        }
    }

    #[test]
    fn propagate_absorbs_const_scalar_reads() {
        let src = "%!bind A rf(0,0)@0\n%!bind B rf(0,0)@8\n%!bind k rf(0,0)@16\n%!out A\n\
                   B = input(8);\nA = zeros(8);\nk = 3;\n\
                   A(1:8) = B(1:8) * k;\n";
        let mut g = build(src);
        propagate_constants(&mut g);
        let reads_of_k = g
            .vertices()
            .filter(|v| matches!(&v.kind, VertexKind::Read { var } if var == "k"))
            .count();
        assert_eq!(reads_of_k, 0);
        assert!(g
            .vertices()
            .any(|v| matches!(v.kind, VertexKind::Const { val: 3 })));
    }

    #[test]
    fn dce_removes_unread_temp() {
        let src = "%!bind A rf(0,0)@0\n%!bind B rf(0,0)@8\n%!bind T rf(0,0)@16\n%!out A\n\
                   B = input(8);\nA = zeros(8);\nT = zeros(8);\n\
                   T(1:8) = B(1:8) * 7;\nA(1:8) = B(1:8) + 1;\n";
        let mut g = build(src);
        analyze_dependencies(&mut g);
        eliminate_dead_code(&mut g);
        assert!(!g
            .vertices()
            .any(|v| matches!(&v.kind, VertexKind::Write { var } if var == "T")));
        assert!(g.check_well_formed().is_ok());
    }

    #[test]
    fn passes_reach_fixpoint_in_one_round() {
        let src = "%!bind A rf(0,0)@0\n%!bind B rf(0,0)@32\n%!bind T rf(0,0)@50\n%!out A\n\
                   B = input(16);\nA = zeros(16);\nT = zeros(4);\n\
                   T(1:4) = B(1:4) * 0;\nfor i = 1:4\n  A((1+1)*i) = B(i) + (2 - 2);\nend\n";
        let run = |g: &mut Cadfg| {
            fold_constants(g);
            propagate_constants(g);
            eliminate_dead_code(g);
        };
        let mut once = build(src);
        run(&mut once);
        let mut twice = once.clone();
        run(&mut twice);
        assert_eq!(once.dump(), twice.dump());
    }
}
