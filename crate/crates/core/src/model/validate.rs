//! Structural checks on behaviours and diagrams.
//!
//! Validation never stops at the first problem: every violated rule yields one
//! [`ValidationIssue`], and the returned list is sorted by [`Location`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{ArchitectureDiagram, CardExpr, ComponentType, Span, TransitionKind, Typing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// The closed set of validation codes. One code per rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IssueCode {
    /// No state is marked initial.
    NoInitialState,
    /// More than one state is marked initial.
    MultipleInitialStates,
    /// A state name is declared twice.
    DuplicateState,
    /// The component type declares no port.
    EmptyPorts,
    /// A name is both a port and a spontaneous event.
    LabelClash,
    /// A transition endpoint is not a declared state.
    UndeclaredState,
    /// A transition label does not match its kind's namespace.
    UndeclaredLabel,
    /// A guard expression mentions an undeclared guard.
    UndeclaredGuard,
    /// A literal cardinality, multiplicity or degree is zero.
    NonPositiveLiteral,
    /// Two component types share a name.
    DuplicateComponentType,
    /// Two motifs share a name.
    DuplicateMotif,
    /// A motif has no ends.
    EmptyMotif,
    /// A motif end names an undeclared component type or port.
    DanglingPortRef,
    /// A motif lists the same port type twice.
    DuplicateMotifEnd,
    /// A trigger end has a literal multiplicity above one (warning).
    TriggerMultiplicity,
}

impl IssueCode {
    pub const ALL: [IssueCode; 15] = [
        IssueCode::NoInitialState,
        IssueCode::MultipleInitialStates,
        IssueCode::DuplicateState,
        IssueCode::EmptyPorts,
        IssueCode::LabelClash,
        IssueCode::UndeclaredState,
        IssueCode::UndeclaredLabel,
        IssueCode::UndeclaredGuard,
        IssueCode::NonPositiveLiteral,
        IssueCode::DuplicateComponentType,
        IssueCode::DuplicateMotif,
        IssueCode::EmptyMotif,
        IssueCode::DanglingPortRef,
        IssueCode::DuplicateMotifEnd,
        IssueCode::TriggerMultiplicity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::NoInitialState => "NO_INITIAL_STATE",
            IssueCode::MultipleInitialStates => "MULTIPLE_INITIAL_STATES",
            IssueCode::DuplicateState => "DUPLICATE_STATE",
            IssueCode::EmptyPorts => "EMPTY_PORTS",
            IssueCode::LabelClash => "LABEL_CLASH",
            IssueCode::UndeclaredState => "UNDECLARED_STATE",
            IssueCode::UndeclaredLabel => "UNDECLARED_LABEL",
            IssueCode::UndeclaredGuard => "UNDECLARED_GUARD",
            IssueCode::NonPositiveLiteral => "NON_POSITIVE_LITERAL",
            IssueCode::DuplicateComponentType => "DUPLICATE_COMPONENT_TYPE",
            IssueCode::DuplicateMotif => "DUPLICATE_MOTIF",
            IssueCode::EmptyMotif => "EMPTY_MOTIF",
            IssueCode::DanglingPortRef => "DANGLING_PORT_REF",
            IssueCode::DuplicateMotifEnd => "DUPLICATE_MOTIF_END",
            IssueCode::TriggerMultiplicity => "TRIGGER_MULTIPLICITY",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            IssueCode::TriggerMultiplicity => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Segment {
    Component(String),
    Cardinality,
    Ports,
    State(String),
    /// 1-based declaration index.
    Transition(usize),
    Motif(String),
    /// 1-based declaration index.
    End(usize),
    Multiplicity,
    Degree,
}

/// Path from the diagram root to the offending element.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location(pub Vec<Segment>);

impl Location {
    fn child(&self, seg: Segment) -> Location {
        let mut v = self.0.clone();
        v.push(seg);
        Location(v)
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            match seg {
                Segment::Component(c) => write!(f, "component {c}")?,
                Segment::Cardinality => f.write_str("cardinality")?,
                Segment::Ports => f.write_str("ports")?,
                Segment::State(s) => write!(f, "state {s}")?,
                Segment::Transition(i) => write!(f, "transition #{i}")?,
                Segment::Motif(m) => write!(f, "motif {m}")?,
                Segment::End(i) => write!(f, "end #{i}")?,
                Segment::Multiplicity => f.write_str("multiplicity")?,
                Segment::Degree => f.write_str("degree")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub code: IssueCode,
    pub message: String,
    pub location: Location,
    pub span: Span,
}

impl ValidationIssue {
    fn new(code: IssueCode, message: String, location: Location, span: Span) -> Self {
        ValidationIssue { severity: code.severity(), code, message, location, span }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]: {} (at {})", self.severity, self.code, self.message, self.location)
    }
}

fn sorted(mut issues: Vec<ValidationIssue>) -> Vec<ValidationIssue> {
    issues.sort_by(|a, b| {
        (&a.location, a.code, &a.message).cmp(&(&b.location, b.code, &b.message))
    });
    issues
}

/// Check a component type's behaviour.
pub fn validate_behavior(ct: &ComponentType) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let root = Location(vec![Segment::Component(ct.name.clone())]);

    if let CardExpr::Literal(0) = ct.cardinality {
        issues.push(ValidationIssue::new(
            IssueCode::NonPositiveLiteral,
            format!("cardinality of `{}` must be positive", ct.name),
            root.child(Segment::Cardinality),
            ct.span,
        ));
    }

    let initials: Vec<_> = ct.states.iter().filter(|s| s.initial).collect();
    match initials.len() {
        0 => issues.push(ValidationIssue::new(
            IssueCode::NoInitialState,
            format!("component type `{}` has no initial state", ct.name),
            root.clone(),
            ct.span,
        )),
        1 => {}
        n => issues.push(ValidationIssue::new(
            IssueCode::MultipleInitialStates,
            format!(
                "component type `{}` has {n} initial states ({}), expected exactly one",
                ct.name,
                initials.iter().map(|s| s.name.as_str()).collect::<Vec<_>>().join(", ")
            ),
            root.clone(),
            initials[1].span,
        )),
    }

    let mut seen = BTreeSet::new();
    for s in &ct.states {
        if !seen.insert(s.name.as_str()) {
            issues.push(ValidationIssue::new(
                IssueCode::DuplicateState,
                format!("state `{}` declared more than once", s.name),
                root.child(Segment::State(s.name.clone())),
                s.span,
            ));
        }
    }

    if ct.ports.is_empty() {
        issues.push(ValidationIssue::new(
            IssueCode::EmptyPorts,
            format!("component type `{}` declares no ports", ct.name),
            root.child(Segment::Ports),
            ct.span,
        ));
    }

    for clash in ct.ports.intersection(&ct.events) {
        issues.push(ValidationIssue::new(
            IssueCode::LabelClash,
            format!("`{clash}` is declared both as a port and as an event"),
            root.child(Segment::Ports),
            ct.span,
        ));
    }

    for (i, t) in ct.transitions.iter().enumerate() {
        let loc = root.child(Segment::Transition(i + 1));
        for endpoint in [&t.source, &t.destination] {
            if !ct.has_state(endpoint) {
                issues.push(ValidationIssue::new(
                    IssueCode::UndeclaredState,
                    format!("transition refers to undeclared state `{endpoint}`"),
                    loc.clone(),
                    t.span,
                ));
            }
        }
        let label_ok = match t.kind {
            TransitionKind::Enforceable => ct.ports.contains(&t.label),
            TransitionKind::Spontaneous => ct.events.contains(&t.label),
            TransitionKind::Internal => t.label.is_empty(),
        };
        if !label_ok {
            issues.push(ValidationIssue::new(
                IssueCode::UndeclaredLabel,
                match t.kind {
                    TransitionKind::Enforceable => format!("`{}` is not a declared port", t.label),
                    TransitionKind::Spontaneous => format!("`{}` is not a declared event", t.label),
                    TransitionKind::Internal => "internal transitions carry no label".to_string(),
                },
                loc.clone(),
                t.span,
            ));
        }
        if let Some(g) = &t.guard {
            let mut reported = BTreeSet::new();
            for atom in g.atoms() {
                if !ct.guards.contains(atom) && reported.insert(atom) {
                    issues.push(ValidationIssue::new(
                        IssueCode::UndeclaredGuard,
                        format!("guard `{atom}` is not declared"),
                        loc.clone(),
                        t.span,
                    ));
                }
            }
        }
    }

    sorted(issues)
}

/// Check the diagram-level structure: names, motif ends and literals.
/// Behaviours are checked by [`validate_behavior`].
pub fn validate_diagram(d: &ArchitectureDiagram) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();

    let mut types = BTreeMap::new();
    for ct in &d.component_types {
        if types.insert(ct.name.as_str(), ct).is_some() {
            issues.push(ValidationIssue::new(
                IssueCode::DuplicateComponentType,
                format!("component type `{}` declared more than once", ct.name),
                Location(vec![Segment::Component(ct.name.clone())]),
                ct.span,
            ));
        }
    }

    let mut motif_names = BTreeSet::new();
    for m in &d.motifs {
        let root = Location(vec![Segment::Motif(m.name.clone())]);
        if !motif_names.insert(m.name.as_str()) {
            issues.push(ValidationIssue::new(
                IssueCode::DuplicateMotif,
                format!("motif `{}` declared more than once", m.name),
                root.clone(),
                m.span,
            ));
        }
        if m.ends.is_empty() {
            issues.push(ValidationIssue::new(
                IssueCode::EmptyMotif,
                format!("motif `{}` has no ends", m.name),
                root.clone(),
                m.span,
            ));
        }
        let mut seen = BTreeSet::new();
        for (i, end) in m.ends.iter().enumerate() {
            let loc = root.child(Segment::End(i + 1));
            match types.get(end.port.component_type.as_str()) {
                None => issues.push(ValidationIssue::new(
                    IssueCode::DanglingPortRef,
                    format!("`{}` refers to undeclared component type `{}`", end.port, end.port.component_type),
                    loc.clone(),
                    end.span,
                )),
                Some(ct) if !ct.ports.contains(&end.port.port) => issues.push(ValidationIssue::new(
                    IssueCode::DanglingPortRef,
                    format!("`{}` is not a port of `{}`", end.port.port, ct.name),
                    loc.clone(),
                    end.span,
                )),
                Some(_) => {}
            }
            if !seen.insert(&end.port) {
                issues.push(ValidationIssue::new(
                    IssueCode::DuplicateMotifEnd,
                    format!("port type `{}` appears more than once in motif `{}`", end.port, m.name),
                    loc.clone(),
                    end.span,
                ));
            }
            for (seg, expr, what) in [
                (Segment::Multiplicity, &end.multiplicity, "multiplicity"),
                (Segment::Degree, &end.degree, "degree"),
            ] {
                if let CardExpr::Literal(0) = expr {
                    issues.push(ValidationIssue::new(
                        IssueCode::NonPositiveLiteral,
                        format!("{what} of `{}` must be positive", end.port),
                        loc.child(seg),
                        end.span,
                    ));
                }
            }
            if end.typing == Typing::Trigger {
                if let CardExpr::Literal(m) = end.multiplicity {
                    if m > 1 {
                        issues.push(ValidationIssue::new(
                            IssueCode::TriggerMultiplicity,
                            format!(
                                "trigger `{}` has multiplicity {m}; Require/Accept macros are exact only when it equals the cardinality",
                                end.port
                            ),
                            loc.child(Segment::Multiplicity),
                            end.span,
                        ));
                    }
                }
            }
        }
    }

    sorted(issues)
}

/// All behaviour and diagram issues of a model, sorted by location.
pub fn validate_model(d: &ArchitectureDiagram) -> Vec<ValidationIssue> {
    let mut issues = validate_diagram(d);
    for ct in &d.component_types {
        issues.extend(validate_behavior(ct));
    }
    sorted(issues)
}

pub fn has_errors(issues: &[ValidationIssue]) -> bool {
    issues.iter().any(ValidationIssue::is_error)
}
