//! Domain types shared by the whole toolchain.
//!
//! A model is an [`ArchitectureDiagram`]: a list of component types, each
//! carrying its labelled transition system, plus a list of connector motifs
//! relating their port types. Instance-level types ([`PortInstance`],
//! [`Interaction`], [`Connector`], [`Configuration`]) describe what a diagram
//! denotes once its cardinality parameters are bound.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub mod validate;

pub use validate::{
    has_errors, validate_behavior, validate_diagram, validate_model, IssueCode, Location, Segment, Severity,
    ValidationIssue,
};

/// Position of an element in its source text. Lines and columns are 1-based.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Span {
    pub fn new(start_line: u32, start_col: u32, end_line: u32, end_col: u32) -> Self {
        Span { start_line, start_col, end_line, end_col }
    }

    /// Smallest span covering both `self` and `other`.
    pub fn to(self, other: Span) -> Span {
        Span {
            start_line: self.start_line,
            start_col: self.start_col,
            end_line: other.end_line,
            end_col: other.end_col,
        }
    }

    pub fn is_unknown(&self) -> bool {
        self.start_line == 0
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start_line, self.start_col)
    }
}

/// Port type `T.p`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PortTypeRef {
    pub component_type: String,
    pub port: String,
}

impl PortTypeRef {
    pub fn new(component_type: impl Into<String>, port: impl Into<String>) -> Self {
        PortTypeRef { component_type: component_type.into(), port: port.into() }
    }
}

impl fmt::Display for PortTypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.component_type, self.port)
    }
}

/// Cardinality, multiplicity or degree: a literal or a bare parameter name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CardExpr {
    Literal(u64),
    Param(String),
}

impl CardExpr {
    pub fn param(name: impl Into<String>) -> Self {
        CardExpr::Param(name.into())
    }

    /// Evaluate under a binding; `Err` carries the unbound parameter name.
    pub fn eval(&self, binding: &BTreeMap<String, u64>) -> Result<u64, String> {
        match self {
            CardExpr::Literal(v) => Ok(*v),
            CardExpr::Param(name) => binding.get(name).copied().ok_or_else(|| name.clone()),
        }
    }
}

impl fmt::Display for CardExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CardExpr::Literal(v) => write!(f, "{v}"),
            CardExpr::Param(p) => f.write_str(p),
        }
    }
}

/// Port typing inside a connector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Typing {
    #[default]
    Synchron,
    Trigger,
}

impl Typing {
    pub fn as_str(self) -> &'static str {
        match self {
            Typing::Synchron => "synchron",
            Typing::Trigger => "trigger",
        }
    }
}

impl fmt::Display for Typing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Boolean expression over guard names.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GuardExpr {
    Atom(String),
    Not(Box<GuardExpr>),
    And(Box<GuardExpr>, Box<GuardExpr>),
    Or(Box<GuardExpr>, Box<GuardExpr>),
}

impl GuardExpr {
    pub fn atom(name: impl Into<String>) -> Self {
        GuardExpr::Atom(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: GuardExpr) -> Self {
        GuardExpr::Not(Box::new(e))
    }

    pub fn and(a: GuardExpr, b: GuardExpr) -> Self {
        GuardExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: GuardExpr, b: GuardExpr) -> Self {
        GuardExpr::Or(Box::new(a), Box::new(b))
    }

    /// Evaluate with unknown guards reading as `false`.
    pub fn eval(&self, valuation: &BTreeMap<String, bool>) -> bool {
        match self {
            GuardExpr::Atom(g) => valuation.get(g).copied().unwrap_or(false),
            GuardExpr::Not(e) => !e.eval(valuation),
            GuardExpr::And(a, b) => a.eval(valuation) && b.eval(valuation),
            GuardExpr::Or(a, b) => a.eval(valuation) || b.eval(valuation),
        }
    }

    /// Guard names referenced by the expression, in order of appearance.
    pub fn atoms(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            GuardExpr::Atom(g) => out.push(g),
            GuardExpr::Not(e) => e.collect_atoms(out),
            GuardExpr::And(a, b) | GuardExpr::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            GuardExpr::Or(..) => 1,
            GuardExpr::And(..) => 2,
            GuardExpr::Not(_) => 3,
            GuardExpr::Atom(_) => 4,
        }
    }

    fn fmt_child(&self, child: &GuardExpr, right: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Binary operators are left-associative, so an equal-precedence right
        // child needs parentheses to survive a round trip.
        let needs_parens = child.precedence() < self.precedence()
            || (right && child.precedence() == self.precedence());
        if needs_parens {
            write!(f, "({child})")
        } else {
            write!(f, "{child}")
        }
    }
}

impl fmt::Display for GuardExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GuardExpr::Atom(g) => f.write_str(g),
            GuardExpr::Not(e) => {
                f.write_str("!")?;
                self.fmt_child(e, false, f)
            }
            GuardExpr::And(a, b) => {
                self.fmt_child(a, false, f)?;
                f.write_str(" & ")?;
                self.fmt_child(b, true, f)
            }
            GuardExpr::Or(a, b) => {
                self.fmt_child(a, false, f)?;
                f.write_str(" | ")?;
                self.fmt_child(b, true, f)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionKind {
    Enforceable,
    Spontaneous,
    Internal,
}

impl TransitionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TransitionKind::Enforceable => "enforceable",
            TransitionKind::Spontaneous => "spontaneous",
            TransitionKind::Internal => "internal",
        }
    }
}

/// LTS transition. Internal transitions have an empty label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub kind: TransitionKind,
    pub label: String,
    pub source: String,
    pub destination: String,
    pub guard: Option<GuardExpr>,
    pub span: Span,
}

impl Transition {
    pub fn new(
        kind: TransitionKind,
        label: impl Into<String>,
        source: impl Into<String>,
        destination: impl Into<String>,
    ) -> Self {
        let label = match kind {
            TransitionKind::Internal => String::new(),
            _ => label.into(),
        };
        Transition {
            kind,
            label,
            source: source.into(),
            destination: destination.into(),
            guard: None,
            span: Span::default(),
        }
    }

    pub fn with_guard(mut self, guard: GuardExpr) -> Self {
        self.guard = Some(guard);
        self
    }

    pub fn guard_holds(&self, valuation: &BTreeMap<String, bool>) -> bool {
        self.guard.as_ref().is_none_or(|g| g.eval(valuation))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDecl {
    pub name: String,
    pub initial: bool,
    pub span: Span,
}

/// A component type together with its behaviour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentType {
    pub name: String,
    pub cardinality: CardExpr,
    pub ports: BTreeSet<String>,
    pub events: BTreeSet<String>,
    pub guards: BTreeSet<String>,
    /// Declaration order; exactly one should be marked initial.
    pub states: Vec<StateDecl>,
    pub transitions: Vec<Transition>,
    pub span: Span,
}

impl ComponentType {
    pub fn new(name: impl Into<String>, cardinality: CardExpr) -> Self {
        ComponentType {
            name: name.into(),
            cardinality,
            ports: BTreeSet::new(),
            events: BTreeSet::new(),
            guards: BTreeSet::new(),
            states: Vec::new(),
            transitions: Vec::new(),
            span: Span::default(),
        }
    }

    pub fn with_ports<I, S>(mut self, ports: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.ports.extend(ports.into_iter().map(Into::into));
        self
    }

    pub fn with_events<I, S>(mut self, events: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.events.extend(events.into_iter().map(Into::into));
        self
    }

    pub fn with_guards<I, S>(mut self, guards: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.guards.extend(guards.into_iter().map(Into::into));
        self
    }

    pub fn with_state(mut self, name: impl Into<String>, initial: bool) -> Self {
        self.states.push(StateDecl { name: name.into(), initial, span: Span::default() });
        self
    }

    pub fn with_transition(mut self, t: Transition) -> Self {
        self.transitions.push(t);
        self
    }

    /// The initial state, if exactly one is declared.
    pub fn initial_state(&self) -> Option<&str> {
        let mut initials = self.states.iter().filter(|s| s.initial);
        match (initials.next(), initials.next()) {
            (Some(s), None) => Some(&s.name),
            _ => None,
        }
    }

    pub fn has_state(&self, name: &str) -> bool {
        self.states.iter().any(|s| s.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifEnd {
    pub port: PortTypeRef,
    pub multiplicity: CardExpr,
    pub degree: CardExpr,
    pub typing: Typing,
    pub span: Span,
}

impl MotifEnd {
    pub fn new(port: PortTypeRef, multiplicity: CardExpr, degree: CardExpr, typing: Typing) -> Self {
        MotifEnd { port, multiplicity, degree, typing, span: Span::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectorMotif {
    pub name: String,
    pub ends: Vec<MotifEnd>,
    pub span: Span,
}

impl ConnectorMotif {
    pub fn new(name: impl Into<String>, ends: Vec<MotifEnd>) -> Self {
        ConnectorMotif { name: name.into(), ends, span: Span::default() }
    }

    pub fn has_trigger(&self) -> bool {
        self.ends.iter().any(|e| e.typing == Typing::Trigger)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchitectureDiagram {
    pub name: String,
    pub component_types: Vec<ComponentType>,
    pub motifs: Vec<ConnectorMotif>,
    pub span: Span,
}

impl ArchitectureDiagram {
    pub fn new(name: impl Into<String>) -> Self {
        ArchitectureDiagram {
            name: name.into(),
            component_types: Vec::new(),
            motifs: Vec::new(),
            span: Span::default(),
        }
    }

    pub fn component_type(&self, name: &str) -> Option<&ComponentType> {
        self.component_types.iter().find(|c| c.name == name)
    }

    pub fn motif(&self, name: &str) -> Option<&ConnectorMotif> {
        self.motifs.iter().find(|m| m.name == name)
    }

    /// Every parameter name appearing in a cardinality, multiplicity or degree.
    pub fn parameters(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut push = |e: &CardExpr| {
            if let CardExpr::Param(p) = e {
                out.insert(p.clone());
            }
        };
        for ct in &self.component_types {
            push(&ct.cardinality);
        }
        for m in &self.motifs {
            for end in &m.ends {
                push(&end.multiplicity);
                push(&end.degree);
            }
        }
        out
    }

    /// Port types appearing in at least one motif.
    pub fn motif_port_types(&self) -> BTreeSet<PortTypeRef> {
        self.motifs.iter().flat_map(|m| m.ends.iter().map(|e| e.port.clone())).collect()
    }

    /// Copy of the diagram with every span reset, for structural comparison.
    pub fn without_spans(&self) -> ArchitectureDiagram {
        let mut d = self.clone();
        d.span = Span::default();
        for ct in &mut d.component_types {
            ct.span = Span::default();
            for s in &mut ct.states {
                s.span = Span::default();
            }
            for t in &mut ct.transitions {
                t.span = Span::default();
            }
        }
        for m in &mut d.motifs {
            m.span = Span::default();
            for e in &mut m.ends {
                e.span = Span::default();
            }
        }
        d
    }
}

/// A component instance `T[i]`, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceId {
    pub component_type: String,
    pub index: u32,
}

impl InstanceId {
    pub fn new(component_type: impl Into<String>, index: u32) -> Self {
        InstanceId { component_type: component_type.into(), index }
    }

    pub fn port(&self, port: impl Into<String>) -> PortInstance {
        PortInstance { component_type: self.component_type.clone(), index: self.index, port: port.into() }
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.component_type, self.index)
    }
}

impl std::str::FromStr for InstanceId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("malformed instance `{s}`, expected `Type[index]`");
        let (ty, rest) = s.split_once('[').ok_or_else(bad)?;
        let idx = rest.strip_suffix(']').ok_or_else(bad)?;
        let index: u32 = idx.parse().map_err(|_| bad())?;
        if ty.is_empty() || index == 0 {
            return Err(bad());
        }
        Ok(InstanceId::new(ty, index))
    }
}

impl Serialize for InstanceId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InstanceId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Port instance `T[i].p`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortInstance {
    pub component_type: String,
    pub index: u32,
    pub port: String,
}

impl PortInstance {
    pub fn new(component_type: impl Into<String>, index: u32, port: impl Into<String>) -> Self {
        PortInstance { component_type: component_type.into(), index, port: port.into() }
    }

    pub fn instance(&self) -> InstanceId {
        InstanceId::new(self.component_type.clone(), self.index)
    }

    pub fn port_type(&self) -> PortTypeRef {
        PortTypeRef::new(self.component_type.clone(), self.port.clone())
    }
}

impl fmt::Display for PortInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}].{}", self.component_type, self.index, self.port)
    }
}

/// A non-empty set of port instances firing together.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interaction(BTreeSet<PortInstance>);

impl Interaction {
    /// `None` for an empty set.
    pub fn new(ports: BTreeSet<PortInstance>) -> Option<Self> {
        if ports.is_empty() {
            None
        } else {
            Some(Interaction(ports))
        }
    }

    pub fn ports(&self) -> &BTreeSet<PortInstance> {
        &self.0
    }

    pub fn contains(&self, p: &PortInstance) -> bool {
        self.0.contains(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = &PortInstance> {
        self.0.iter()
    }

    pub fn is_subset(&self, other: &BTreeSet<PortInstance>) -> bool {
        self.0.is_subset(other)
    }
}

impl FromIterator<PortInstance> for Interaction {
    /// Panics on an empty iterator.
    fn from_iter<I: IntoIterator<Item = PortInstance>>(iter: I) -> Self {
        Interaction::new(iter.into_iter().collect()).expect("interaction must be non-empty")
    }
}

impl fmt::Display for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("}")
    }
}

/// Flat connector: port instances with their typings, each at most once.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Connector {
    pub ends: BTreeMap<PortInstance, Typing>,
}

impl Connector {
    pub fn new() -> Self {
        Connector::default()
    }

    /// Returns `false` if the port instance was already present.
    pub fn insert(&mut self, port: PortInstance, typing: Typing) -> bool {
        if self.ends.contains_key(&port) {
            return false;
        }
        self.ends.insert(port, typing);
        true
    }

    pub fn ports(&self) -> impl Iterator<Item = &PortInstance> {
        self.ends.keys()
    }

    pub fn contains(&self, p: &PortInstance) -> bool {
        self.ends.contains_key(p)
    }
}

impl FromIterator<(PortInstance, Typing)> for Connector {
    fn from_iter<I: IntoIterator<Item = (PortInstance, Typing)>>(iter: I) -> Self {
        Connector { ends: iter.into_iter().collect() }
    }
}

impl fmt::Display for Connector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (i, (p, t)) in self.ends.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{p}")?;
            if *t == Typing::Trigger {
                f.write_str("'")?;
            }
        }
        f.write_str(">")
    }
}

/// Connectors originating from one motif.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MotifGroup {
    pub motif: String,
    pub connectors: BTreeSet<Connector>,
}

/// A set of connectors, partitioned by originating motif.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub groups: Vec<MotifGroup>,
}

impl Configuration {
    pub fn single(motif: impl Into<String>, connectors: BTreeSet<Connector>) -> Self {
        Configuration { groups: vec![MotifGroup { motif: motif.into(), connectors }] }
    }

    pub fn group(&self, motif: &str) -> Option<&MotifGroup> {
        self.groups.iter().find(|g| g.motif == motif)
    }

    pub fn connectors(&self) -> impl Iterator<Item = &Connector> {
        self.groups.iter().flat_map(|g| g.connectors.iter())
    }

    pub fn connector_count(&self) -> usize {
        self.groups.iter().map(|g| g.connectors.len()).sum()
    }
}
