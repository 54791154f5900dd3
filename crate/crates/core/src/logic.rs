//! Propositional and first-order interaction logic.
//!
//! A PIL formula denotes the interactions whose induced valuation satisfies
//! it. FOIL adds typed quantification over component instances; instantiating
//! a closed FOIL formula against instance counts yields PIL. Require/Accept
//! rules expand into FOIL.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::model::{InstanceId, Interaction, PortInstance, PortTypeRef};

/// Default cap on the port universe for subset enumeration.
pub const DEFAULT_UNIVERSE_BOUND: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("port instance {0} is outside the port universe")]
    UnknownPort(PortInstance),
    #[error("component variable `{0}` is not bound by any quantifier")]
    UnboundVariable(String),
    #[error("port universe has {size} ports, above the enumeration bound of {bound}")]
    Capacity { size: usize, bound: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pil {
    True,
    Var(PortInstance),
    Not(Box<Pil>),
    Or(Box<Pil>, Box<Pil>),
}

impl Pil {
    pub fn var(p: PortInstance) -> Pil {
        Pil::Var(p)
    }

    pub fn falsity() -> Pil {
        Pil::Not(Box::new(Pil::True))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Pil) -> Pil {
        Pil::Not(Box::new(f))
    }

    pub fn or(a: Pil, b: Pil) -> Pil {
        Pil::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: Pil, b: Pil) -> Pil {
        Pil::not(Pil::or(Pil::not(a), Pil::not(b)))
    }

    pub fn implies(a: Pil, b: Pil) -> Pil {
        Pil::or(Pil::not(a), b)
    }

    /// Empty disjunction is false.
    pub fn any(items: impl IntoIterator<Item = Pil>) -> Pil {
        items.into_iter().reduce(Pil::or).unwrap_or_else(Pil::falsity)
    }

    /// Empty conjunction is true.
    pub fn all(items: impl IntoIterator<Item = Pil>) -> Pil {
        items.into_iter().reduce(Pil::and).unwrap_or(Pil::True)
    }

    /// A product term: the listed ports present and every other universe port absent.
    pub fn monomial(present: &BTreeSet<PortInstance>, universe: &BTreeSet<PortInstance>) -> Pil {
        Pil::all(universe.iter().map(|p| {
            if present.contains(p) {
                Pil::var(p.clone())
            } else {
                Pil::not(Pil::var(p.clone()))
            }
        }))
    }

    pub fn vars(&self) -> BTreeSet<&PortInstance> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a PortInstance>) {
        match self {
            Pil::True => {}
            Pil::Var(p) => {
                out.insert(p);
            }
            Pil::Not(f) => f.collect_vars(out),
            Pil::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    fn eval_unchecked(&self, a: &BTreeSet<PortInstance>) -> bool {
        match self {
            Pil::True => true,
            Pil::Var(p) => a.contains(p),
            Pil::Not(f) => !f.eval_unchecked(a),
            Pil::Or(x, y) => x.eval_unchecked(a) || y.eval_unchecked(a),
        }
    }
}

impl fmt::Display for Pil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pil::True => f.write_str("true"),
            Pil::Var(p) => write!(f, "{p}"),
            Pil::Not(x) => write!(f, "!{x}"),
            Pil::Or(a, b) => write!(f, "({a} | {b})"),
        }
    }
}

/// Evaluate `phi` under the valuation induced by `a`. Both the formula's
/// variables and the interaction must lie inside `universe`.
pub fn eval_pil(phi: &Pil, a: &Interaction, universe: &BTreeSet<PortInstance>) -> Result<bool, LogicError> {
    if let Some(p) = a.iter().find(|p| !universe.contains(*p)) {
        return Err(LogicError::UnknownPort(p.clone()));
    }
    if let Some(p) = phi.vars().into_iter().find(|p| !universe.contains(*p)) {
        return Err(LogicError::UnknownPort(p.clone()));
    }
    Ok(phi.eval_unchecked(a.ports()))
}

/// PIL over universe indices, evaluated against a bitmask.
enum Compiled {
    True,
    Var(u32),
    Not(Box<Compiled>),
    Or(Box<Compiled>, Box<Compiled>),
}

impl Compiled {
    fn new(phi: &Pil, index: &BTreeMap<&PortInstance, u32>) -> Result<Compiled, LogicError> {
        Ok(match phi {
            Pil::True => Compiled::True,
            Pil::Var(p) => Compiled::Var(*index.get(p).ok_or_else(|| LogicError::UnknownPort(p.clone()))?),
            Pil::Not(f) => Compiled::Not(Box::new(Compiled::new(f, index)?)),
            Pil::Or(a, b) => Compiled::Or(Box::new(Compiled::new(a, index)?), Box::new(Compiled::new(b, index)?)),
        })
    }

    fn eval(&self, mask: u64) -> bool {
        match self {
            Compiled::True => true,
            Compiled::Var(i) => mask >> i & 1 == 1,
            Compiled::Not(f) => !f.eval(mask),
            Compiled::Or(a, b) => a.eval(mask) || b.eval(mask),
        }
    }
}

/// All non-empty subsets of `universe` satisfying `phi`.
pub fn satisfying_interactions(
    phi: &Pil,
    universe: &BTreeSet<PortInstance>,
    bound: usize,
) -> Result<BTreeSet<Interaction>, LogicError> {
    let bound = bound.min(63);
    if universe.len() > bound {
        return Err(LogicError::Capacity { size: universe.len(), bound });
    }
    let ports: Vec<&PortInstance> = universe.iter().collect();
    let index: BTreeMap<&PortInstance, u32> = ports.iter().enumerate().map(|(i, p)| (*p, i as u32)).collect();
    let compiled = Compiled::new(phi, &index)?;

    let mut out = BTreeSet::new();
    for mask in 1u64..(1u64 << ports.len()) {
        if compiled.eval(mask) {
            let set = (0..ports.len()).filter(|i| mask >> i & 1 == 1).map(|i| ports[i].clone()).collect();
            out.extend(Interaction::new(set));
        }
    }
    Ok(out)
}

/// Atom of a variable predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PredAtom {
    Eq(String, String),
    Ne(String, String),
}

/// Conjunction of (in)equalities between component variables; empty is true.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct VarPredicate(pub Vec<PredAtom>);

impl VarPredicate {
    pub fn truth() -> Self {
        VarPredicate(Vec::new())
    }

    pub fn distinct_from<'a>(var: &str, others: impl IntoIterator<Item = &'a str>) -> Self {
        VarPredicate(others.into_iter().map(|o| PredAtom::Ne(var.to_string(), o.to_string())).collect())
    }

    fn holds(&self, env: &BTreeMap<String, InstanceId>) -> Result<bool, LogicError> {
        let lookup = |v: &String| env.get(v).ok_or_else(|| LogicError::UnboundVariable(v.clone()));
        for atom in &self.0 {
            let ok = match atom {
                PredAtom::Eq(a, b) => lookup(a)? == lookup(b)?,
                PredAtom::Ne(a, b) => lookup(a)? != lookup(b)?,
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Foil {
    True,
    /// Port term `var.port`; the component type comes from the binding quantifier.
    Port { var: String, port: String },
    Not(Box<Foil>),
    Or(Box<Foil>, Box<Foil>),
    Exists { var: String, component_type: String, pred: VarPredicate, body: Box<Foil> },
}

impl Foil {
    pub fn port(var: impl Into<String>, port: impl Into<String>) -> Foil {
        Foil::Port { var: var.into(), port: port.into() }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Foil) -> Foil {
        Foil::Not(Box::new(f))
    }

    pub fn or(a: Foil, b: Foil) -> Foil {
        Foil::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: Foil, b: Foil) -> Foil {
        Foil::not(Foil::or(Foil::not(a), Foil::not(b)))
    }

    pub fn implies(a: Foil, b: Foil) -> Foil {
        Foil::or(Foil::not(a), b)
    }

    pub fn any(items: impl IntoIterator<Item = Foil>) -> Foil {
        items.into_iter().reduce(Foil::or).unwrap_or_else(|| Foil::not(Foil::True))
    }

    pub fn all(items: impl IntoIterator<Item = Foil>) -> Foil {
        items.into_iter().reduce(Foil::and).unwrap_or(Foil::True)
    }

    pub fn exists(var: impl Into<String>, ty: impl Into<String>, pred: VarPredicate, body: Foil) -> Foil {
        Foil::Exists { var: var.into(), component_type: ty.into(), pred, body: Box::new(body) }
    }

    /// `∀c:T(Pr).Φ` encoded as `¬∃c:T(Pr).¬Φ`.
    pub fn forall(var: impl Into<String>, ty: impl Into<String>, pred: VarPredicate, body: Foil) -> Foil {
        Foil::not(Foil::exists(var, ty, pred, Foil::not(body)))
    }
}

/// Replace each quantifier by the disjunction over matching instances.
/// `instances` maps component type to instance count; absent types have none.
pub fn instantiate_foil(phi: &Foil, instances: &BTreeMap<String, u32>) -> Result<Pil, LogicError> {
    instantiate_in(phi, instances, &mut BTreeMap::new())
}

fn instantiate_in(
    phi: &Foil,
    instances: &BTreeMap<String, u32>,
    env: &mut BTreeMap<String, InstanceId>,
) -> Result<Pil, LogicError> {
    Ok(match phi {
        Foil::True => Pil::True,
        Foil::Port { var, port } => {
            let id = env.get(var).ok_or_else(|| LogicError::UnboundVariable(var.clone()))?;
            Pil::var(id.port(port.clone()))
        }
        Foil::Not(f) => Pil::not(instantiate_in(f, instances, env)?),
        Foil::Or(a, b) => Pil::or(instantiate_in(a, instances, env)?, instantiate_in(b, instances, env)?),
        Foil::Exists { var, component_type, pred, body } => {
            let count = instances.get(component_type).copied().unwrap_or(0);
            let shadowed = env.remove(var);
            let mut branches = Vec::new();
            for index in 1..=count {
                env.insert(var.clone(), InstanceId::new(component_type.clone(), index));
                if pred.holds(env)? {
                    branches.push(instantiate_in(body, instances, env)?);
                }
            }
            env.remove(var);
            if let Some(prev) = shadowed {
                env.insert(var.clone(), prev);
            }
            Pil::any(branches)
        }
    })
}

/// One alternative of a Require rule.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RequireOption {
    /// No requirement.
    Dash,
    /// Sorted multiset: each port type appears as often as its exact instance count.
    Ports(Vec<PortTypeRef>),
}

impl RequireOption {
    pub fn ports(items: impl IntoIterator<Item = PortTypeRef>) -> RequireOption {
        let mut v: Vec<PortTypeRef> = items.into_iter().collect();
        v.sort();
        if v.is_empty() {
            RequireOption::Dash
        } else {
            RequireOption::Ports(v)
        }
    }

    /// Multiplicity of each port type in the option.
    pub fn counts(&self) -> BTreeMap<&PortTypeRef, usize> {
        let mut out = BTreeMap::new();
        if let RequireOption::Ports(v) = self {
            for p in v {
                *out.entry(p).or_insert(0) += 1;
            }
        }
        out
    }
}

impl fmt::Display for RequireOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RequireOption::Dash => f.write_str("-"),
            RequireOption::Ports(v) => {
                let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
                f.write_str(&parts.join(" "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RequireRule {
    pub effect: PortTypeRef,
    pub options: Vec<RequireOption>,
}

/// Empty `accepted` is the dash: nothing else may join.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AcceptRule {
    pub effect: PortTypeRef,
    pub accepted: BTreeSet<PortTypeRef>,
}

const EFFECT_VAR: &str = "c";

/// Exactly `k` instances carry `q`. The effect instance is not counted when
/// `q` is the effect's own port type.
fn exactly(q: &PortTypeRef, k: usize, own: bool, tag: usize) -> Foil {
    let xs: Vec<String> = (1..=k).map(|i| format!("x{tag}_{i}")).collect();
    let y = format!("y{tag}");

    let mut excluded: Vec<&str> = xs.iter().map(String::as_str).collect();
    if own {
        excluded.push(EFFECT_VAR);
    }
    let none_else = Foil::forall(
        y.clone(),
        q.component_type.clone(),
        VarPredicate::distinct_from(&y, excluded),
        Foil::not(Foil::port(y.clone(), q.port.clone())),
    );
    let carried = Foil::all(xs.iter().map(|x| Foil::port(x.clone(), q.port.clone())));
    let mut body = Foil::and(carried, none_else);

    for i in (0..k).rev() {
        let mut others: Vec<&str> = xs[..i].iter().map(String::as_str).collect();
        if own {
            others.push(EFFECT_VAR);
        }
        body = Foil::exists(xs[i].clone(), q.component_type.clone(), VarPredicate::distinct_from(&xs[i], others), body);
    }
    body
}

/// `∀c:T. (c.p ⇒ ∨ options)`, each option a conjunction of exact counts.
pub fn expand_require(rule: &RequireRule) -> Foil {
    let effect = &rule.effect;
    let mut tag = 0;
    let options = rule.options.iter().map(|opt| match opt {
        RequireOption::Dash => Foil::True,
        RequireOption::Ports(_) => Foil::all(opt.counts().into_iter().map(|(q, k)| {
            tag += 1;
            exactly(q, k, q == effect, tag)
        })),
    });
    let body = Foil::any(options.collect::<Vec<_>>());
    Foil::forall(
        EFFECT_VAR,
        effect.component_type.clone(),
        VarPredicate::truth(),
        Foil::implies(Foil::port(EFFECT_VAR, effect.port.clone()), body),
    )
}

/// `∀c:T. (c.p ⇒ ∧_{r ∉ accepted} ∀d:T_r. ¬d.r)` over the port types of
/// `port_types`; for `r` equal to the effect the effect instance itself is exempt.
pub fn expand_accept(rule: &AcceptRule, port_types: &BTreeSet<PortTypeRef>) -> Foil {
    let effect = &rule.effect;
    let exclusions = port_types.iter().filter(|r| !rule.accepted.contains(*r)).map(|r| {
        let pred = if r == effect { VarPredicate::distinct_from("d", [EFFECT_VAR]) } else { VarPredicate::truth() };
        Foil::forall("d", r.component_type.clone(), pred, Foil::not(Foil::port("d", r.port.clone())))
    });
    Foil::forall(
        EFFECT_VAR,
        effect.component_type.clone(),
        VarPredicate::truth(),
        Foil::implies(Foil::port(EFFECT_VAR, effect.port.clone()), Foil::all(exclusions.collect::<Vec<_>>())),
    )
}

/// Interactions over `universe` allowed by the conjunction of all rules.
pub fn allowed_interactions(
    requires: &[RequireRule],
    accepts: &[AcceptRule],
    instances: &BTreeMap<String, u32>,
    universe: &BTreeSet<PortInstance>,
    bound: usize,
) -> Result<BTreeSet<Interaction>, LogicError> {
    let port_types: BTreeSet<PortTypeRef> = universe.iter().map(PortInstance::port_type).collect();
    let mut conjuncts = Vec::new();
    for r in requires {
        conjuncts.push(instantiate_foil(&expand_require(r), instances)?);
    }
    for a in accepts {
        conjuncts.push(instantiate_foil(&expand_accept(a, &port_types), instances)?);
    }
    satisfying_interactions(&Pil::all(conjuncts), universe, bound)
}

/// Every port instance of the given port types under the instance counts.
pub fn port_universe<'a>(
    port_types: impl IntoIterator<Item = &'a PortTypeRef>,
    instances: &BTreeMap<String, u32>,
) -> BTreeSet<PortInstance> {
    let mut out = BTreeSet::new();
    for pt in port_types {
        for i in 1..=instances.get(&pt.component_type).copied().unwrap_or(0) {
            out.insert(PortInstance::new(pt.component_type.clone(), i, pt.port.clone()));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pi(t: &str, i: u32, p: &str) -> PortInstance {
        PortInstance::new(t, i, p)
    }

    fn inter(ports: &[PortInstance]) -> Interaction {
        ports.iter().cloned().collect()
    }

    fn star_ports() -> (PortInstance, Vec<PortInstance>) {
        (pi("C", 1, "p"), (1..=3).map(|i| pi("S", i, "q")).collect())
    }

    fn star_pil() -> (Pil, BTreeSet<PortInstance>) {
        let (p, qs) = star_ports();
        let universe: BTreeSet<_> = std::iter::once(p.clone()).chain(qs.iter().cloned()).collect();
        let phi = Pil::any(qs.iter().map(|q| Pil::monomial(&[p.clone(), q.clone()].into(), &universe)));
        (phi, universe)
    }

    fn counts(pairs: &[(&str, u32)]) -> BTreeMap<String, u32> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn star_pil_evaluation() {
        let (phi, universe) = star_pil();
        let (p, qs) = star_ports();
        assert!(eval_pil(&phi, &inter(&[p.clone(), qs[0].clone()]), &universe).unwrap());
        assert!(!eval_pil(&phi, &inter(&[p.clone(), qs[0].clone(), qs[1].clone()]), &universe).unwrap());
        assert!(eval_pil(&Pil::True, &inter(&[qs[2].clone()]), &universe).unwrap());
        assert!(matches!(
            eval_pil(&phi, &inter(&[pi("X", 1, "z")]), &universe),
            Err(LogicError::UnknownPort(_))
        ));
    }

    #[test]
    fn star_satisfying_set() {
        let (phi, universe) = star_pil();
        let (p, qs) = star_ports();
        let got = satisfying_interactions(&phi, &universe, DEFAULT_UNIVERSE_BOUND).unwrap();
        let want: BTreeSet<_> = qs.iter().map(|q| inter(&[p.clone(), q.clone()])).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn small_satisfying_sets() {
        let (x, y) = (pi("A", 1, "x"), pi("A", 1, "y"));
        let universe: BTreeSet<_> = [x.clone(), y.clone()].into();
        let all = satisfying_interactions(&Pil::True, &universe, 20).unwrap();
        assert_eq!(all.len(), 3);
        let only_x = Pil::and(Pil::var(x.clone()), Pil::not(Pil::var(y.clone())));
        let got = satisfying_interactions(&only_x, &universe, 20).unwrap();
        assert_eq!(got, [inter(&[x])].into());
        assert_eq!(
            satisfying_interactions(&Pil::True, &universe, 1),
            Err(LogicError::Capacity { size: 2, bound: 1 })
        );
    }

    #[test]
    fn star_foil_instantiation() {
        // ∃c:C. ∀s:S. (c.p ∧ s.q) ∨ ... restricted to one S at a time:
        // ∃c:C. ∃s:S. (c.p ∧ s.q ∧ ∀t:S(t≠s). ¬t.q)
        let phi = Foil::exists(
            "c",
            "C",
            VarPredicate::truth(),
            Foil::exists(
                "s",
                "S",
                VarPredicate::truth(),
                Foil::all([
                    Foil::port("c", "p"),
                    Foil::port("s", "q"),
                    Foil::forall("t", "S", VarPredicate::distinct_from("t", ["s"]), Foil::not(Foil::port("t", "q"))),
                ]),
            ),
        );
        let inst = counts(&[("C", 1), ("S", 2)]);
        let pil = instantiate_foil(&phi, &inst).unwrap();
        let universe = port_universe(&[PortTypeRef::new("C", "p"), PortTypeRef::new("S", "q")], &inst);
        let got = satisfying_interactions(&pil, &universe, 20).unwrap();
        let want: BTreeSet<_> =
            [inter(&[pi("C", 1, "p"), pi("S", 1, "q")]), inter(&[pi("C", 1, "p"), pi("S", 2, "q")])].into();
        assert_eq!(got, want);
    }

    #[test]
    fn empty_and_unsatisfiable_quantifiers() {
        let phi = Foil::exists("c", "T", VarPredicate::truth(), Foil::True);
        assert_eq!(instantiate_foil(&phi, &counts(&[("T", 0)])).unwrap(), Pil::falsity());
        let never = VarPredicate(vec![PredAtom::Ne("c".into(), "c".into())]);
        let phi = Foil::exists("c", "T", never, Foil::True);
        for n in 0..4 {
            let pil = instantiate_foil(&phi, &counts(&[("T", n)])).unwrap();
            let universe: BTreeSet<_> = [pi("T", 1, "p")].into();
            assert!(!eval_pil(&pil, &inter(&[pi("T", 1, "p")]), &universe).unwrap());
        }
        let open = Foil::port("c", "p");
        assert_eq!(instantiate_foil(&open, &BTreeMap::new()), Err(LogicError::UnboundVariable("c".into())));
    }

    fn star_rules() -> (Vec<RequireRule>, Vec<AcceptRule>) {
        let (cp, sq) = (PortTypeRef::new("C", "p"), PortTypeRef::new("S", "q"));
        (
            vec![
                RequireRule { effect: sq.clone(), options: vec![RequireOption::ports([cp.clone()])] },
                RequireRule { effect: cp.clone(), options: vec![RequireOption::ports([sq.clone()])] },
            ],
            vec![
                AcceptRule { effect: sq.clone(), accepted: [cp.clone()].into() },
                AcceptRule { effect: cp, accepted: [sq].into() },
            ],
        )
    }

    #[test]
    fn star_macros() {
        let (req, acc) = star_rules();
        let inst = counts(&[("C", 1), ("S", 3)]);
        let universe = port_universe(&[PortTypeRef::new("C", "p"), PortTypeRef::new("S", "q")], &inst);
        let got = allowed_interactions(&req, &acc, &inst, &universe, 20).unwrap();
        let want: BTreeSet<_> = (1..=3).map(|i| inter(&[pi("C", 1, "p"), pi("S", i, "q")])).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn trigger_pair_macros() {
        let (p, q) = (PortTypeRef::new("T1", "p"), PortTypeRef::new("T2", "q"));
        let req = vec![
            RequireRule { effect: q.clone(), options: vec![RequireOption::Dash] },
            RequireRule {
                effect: p.clone(),
                options: vec![RequireOption::ports([q.clone()]), RequireOption::ports([q.clone(), q.clone()])],
            },
        ];
        let acc = vec![
            AcceptRule { effect: q.clone(), accepted: [p.clone(), q.clone()].into() },
            AcceptRule { effect: p.clone(), accepted: [q.clone()].into() },
        ];
        let inst = counts(&[("T1", 1), ("T2", 2)]);
        let universe = port_universe(&[p, q], &inst);
        let got = allowed_interactions(&req, &acc, &inst, &universe, 20).unwrap();
        let (p1, q1, q2) = (pi("T1", 1, "p"), pi("T2", 1, "q"), pi("T2", 2, "q"));
        let want: BTreeSet<_> = [
            inter(std::slice::from_ref(&q1)),
            inter(std::slice::from_ref(&q2)),
            inter(&[q1.clone(), q2.clone()]),
            inter(&[p1.clone(), q1.clone()]),
            inter(&[p1.clone(), q2.clone()]),
            inter(&[p1, q1, q2]),
        ]
        .into();
        assert_eq!(got, want);
    }

    #[test]
    fn empty_rules_allow_every_subset() {
        let universe: BTreeSet<_> = [pi("A", 1, "x")].into();
        let got = allowed_interactions(&[], &[], &counts(&[("A", 1)]), &universe, 20).unwrap();
        assert_eq!(got, [inter(&[pi("A", 1, "x")])].into());
    }

    #[test]
    fn accept_rejects_unlisted_ports() {
        let (p, q, r) = (PortTypeRef::new("T1", "p"), PortTypeRef::new("T2", "q"), PortTypeRef::new("T2", "r"));
        let types: BTreeSet<_> = [p.clone(), q.clone(), r.clone()].into();
        let rule = AcceptRule { effect: p.clone(), accepted: [q].into() };
        let inst = counts(&[("T1", 1), ("T2", 1)]);
        let pil = instantiate_foil(&expand_accept(&rule, &types), &inst).unwrap();
        let universe = port_universe(&types, &inst);
        let with_r = inter(&[pi("T1", 1, "p"), pi("T2", 1, "r")]);
        let with_q = inter(&[pi("T1", 1, "p"), pi("T2", 1, "q")]);
        assert!(!eval_pil(&pil, &with_r, &universe).unwrap());
        assert!(eval_pil(&pil, &with_q, &universe).unwrap());

        let everything = AcceptRule { effect: p, accepted: types.clone() };
        let pil = instantiate_foil(&expand_accept(&everything, &types), &inst).unwrap();
        assert_eq!(satisfying_interactions(&pil, &universe, 20).unwrap().len(), 7);
    }

    #[test]
    fn dash_rules_isolate_singleton() {
        let off = PortTypeRef::new("Route", "off");
        let types: BTreeSet<_> = [off.clone(), PortTypeRef::new("Route", "on")].into();
        let inst = counts(&[("Route", 2)]);
        let universe = port_universe(&types, &inst);
        let req = [RequireRule { effect: off.clone(), options: vec![RequireOption::Dash] }];
        let acc = [AcceptRule { effect: off, accepted: BTreeSet::new() }];
        let got = allowed_interactions(&req, &acc, &inst, &universe, 20).unwrap();
        for a in got.iter().filter(|a| a.iter().any(|p| p.port == "off")) {
            assert_eq!(a.len(), 1, "{a}");
        }
        assert!(got.contains(&inter(&[pi("Route", 1, "off")])));
    }

    fn binom(n: u64, k: u64) -> u64 {
        if k > n {
            return 0;
        }
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn require_is_exactly_k() {
        let (p, q) = (PortTypeRef::new("A", "p"), PortTypeRef::new("B", "q"));
        for n in 1..=5u32 {
            for k in 1..=3usize {
                let req = [RequireRule { effect: p.clone(), options: vec![RequireOption::ports(vec![q.clone(); k])] }];
                let acc = [AcceptRule { effect: p.clone(), accepted: [q.clone()].into() }];
                let inst = counts(&[("A", 1), ("B", n)]);
                let universe = port_universe(&[p.clone(), q.clone()], &inst);
                let got = allowed_interactions(&req, &acc, &inst, &universe, 20).unwrap();
                let with_p: Vec<_> = got.iter().filter(|a| a.contains(&pi("A", 1, "p"))).collect();
                assert!(with_p.iter().all(|a| a.len() == k + 1));
                assert_eq!(with_p.len() as u64, binom(n as u64, k as u64), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn own_port_requirement_counts_effect() {
        // p Require p: exactly two p-instances in total.
        let p = PortTypeRef::new("A", "p");
        let req = [RequireRule { effect: p.clone(), options: vec![RequireOption::ports([p.clone()])] }];
        let acc = [AcceptRule { effect: p.clone(), accepted: [p.clone()].into() }];
        let inst = counts(&[("A", 3)]);
        let universe = port_universe(&[p], &inst);
        let got = allowed_interactions(&req, &acc, &inst, &universe, 20).unwrap();
        assert_eq!(got.len(), 3);
        assert!(got.iter().all(|a| a.len() == 2));
    }

    fn arb_pil(vars: Vec<PortInstance>) -> impl Strategy<Value = Pil> {
        let leaf = prop_oneof![Just(Pil::True), proptest::sample::select(vars).prop_map(Pil::Var)];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Pil::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Pil::or(a, b)),
                (inner.clone(), inner).prop_map(|(a, b)| Pil::and(a, b)),
            ]
        })
    }

    fn six_ports() -> Vec<PortInstance> {
        (1..=6).map(|i| pi("T", i, "p")).collect()
    }

    proptest! {
        #[test]
        fn conjunction_intersects(a in arb_pil(six_ports()), b in arb_pil(six_ports())) {
            let universe: BTreeSet<_> = six_ports().into_iter().collect();
            let both = satisfying_interactions(&Pil::and(a.clone(), b.clone()), &universe, 20).unwrap();
            let sa = satisfying_interactions(&a, &universe, 20).unwrap();
            let sb = satisfying_interactions(&b, &universe, 20).unwrap();
            prop_assert_eq!(both, sa.intersection(&sb).cloned().collect::<BTreeSet<_>>());
        }

        #[test]
        fn variable_reads_membership(mask in 1u8..64, which in 0usize..6) {
            let ports = six_ports();
            let universe: BTreeSet<_> = ports.iter().cloned().collect();
            let a: Interaction = (0..6).filter(|i| mask >> i & 1 == 1).map(|i| ports[i].clone()).collect();
            let holds = eval_pil(&Pil::var(ports[which].clone()), &a, &universe).unwrap();
            prop_assert_eq!(holds, a.contains(&ports[which]));
        }
    }

    #[test]
    fn forall_is_conjunction_over_instances() {
        // Body mentions the bound variable and a free-standing port of another type.
        let body = Foil::or(Foil::port("c", "p"), Foil::not(Foil::port("o", "r")));
        for n in 0..=3u32 {
            let inst = counts(&[("T", n), ("O", 1)]);
            let phi = Foil::exists("o", "O", VarPredicate::truth(), Foil::forall("c", "T", VarPredicate::truth(), body.clone()));
            let got = instantiate_foil(&phi, &inst).unwrap();
            let r = pi("O", 1, "r");
            let want = Pil::all((1..=n).map(|i| Pil::or(Pil::var(pi("T", i, "p")), Pil::not(Pil::var(r.clone())))));
            let mut universe: BTreeSet<_> = (1..=n).map(|i| pi("T", i, "p")).collect();
            universe.insert(r);
            assert_eq!(
                satisfying_interactions(&got, &universe, 20).unwrap(),
                satisfying_interactions(&want, &universe, 20).unwrap(),
                "n={n}"
            );
        }
    }
}
