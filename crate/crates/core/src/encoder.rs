//! Encoding of diagrams into Require/Accept macros, and the text, XML and
//! behavior-JSON emitters.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::diagram::{Binding, DiagramError};
use crate::logic::{AcceptRule, RequireOption, RequireRule};
use crate::model::{ArchitectureDiagram, CardExpr, ComponentType, PortTypeRef, Typing};

/// One Require rule and one Accept rule per port type attached to a motif.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MacroSpec {
    /// Sorted by effect.
    pub requires: Vec<RequireRule>,
    /// Sorted by effect.
    pub accepts: Vec<AcceptRule>,
}

impl MacroSpec {
    pub fn require(&self, effect: &PortTypeRef) -> Option<&RequireRule> {
        self.requires.iter().find(|r| &r.effect == effect)
    }

    pub fn accept(&self, effect: &PortTypeRef) -> Option<&AcceptRule> {
        self.accepts.iter().find(|r| &r.effect == effect)
    }
}

/// Encode with literal multiplicities only; a parameterized multiplicity is
/// reported as unbound.
pub fn encode_macros(d: &ArchitectureDiagram) -> Result<MacroSpec, DiagramError> {
    encode_macros_with(d, &Binding::new())
}

/// Encode, reading parameterized multiplicities from `b`. Cardinalities and
/// degrees are never consulted.
pub fn encode_macros_with(d: &ArchitectureDiagram, b: &Binding) -> Result<MacroSpec, DiagramError> {
    let mut requires: BTreeMap<PortTypeRef, Vec<RequireOption>> = BTreeMap::new();
    let mut accepts: BTreeMap<PortTypeRef, BTreeSet<PortTypeRef>> = BTreeMap::new();
    let multiplicity = |c: &CardExpr| c.eval(&b.0).map_err(|name| DiagramError::Unbound(vec![name]));

    for motif in &d.motifs {
        let ends: Vec<(PortTypeRef, u64, Typing)> = motif
            .ends
            .iter()
            .map(|e| Ok((e.port.clone(), multiplicity(&e.multiplicity)?, e.typing)))
            .collect::<Result<_, DiagramError>>()?;
        let triggers: Vec<&(PortTypeRef, u64, Typing)> = ends.iter().filter(|e| e.2 == Typing::Trigger).collect();

        for (p, m_p, t_p) in &ends {
            let options = requires.entry(p.clone()).or_default();
            let accepted = accepts.entry(p.clone()).or_default();
            let mut add = |opt: RequireOption| {
                if !options.contains(&opt) {
                    options.push(opt);
                }
            };

            if *m_p > 1 {
                accepted.extend(ends.iter().map(|e| e.0.clone()));
            } else {
                accepted.extend(ends.iter().filter(|e| &e.0 != p).map(|e| e.0.clone()));
            }

            if *t_p == Typing::Trigger {
                add(RequireOption::Dash);
            } else if ends.len() > 1 && !triggers.is_empty() {
                // A synchron end joins any connector fired by one of the
                // triggers, which may bring 1..=m_q of its instances.
                for (q, m_q, _) in &triggers {
                    for k in 1..=*m_q {
                        add(RequireOption::ports(vec![q.clone(); k as usize]));
                    }
                }
            } else {
                let mut option = Vec::new();
                for (q, m_q, _) in ends.iter().filter(|e| &e.0 != p) {
                    option.extend(std::iter::repeat_n(q.clone(), *m_q as usize));
                }
                option.extend(std::iter::repeat_n(p.clone(), m_p.saturating_sub(1) as usize));
                add(RequireOption::ports(option));
            }
        }
    }

    Ok(MacroSpec {
        requires: requires.into_iter().map(|(effect, options)| RequireRule { effect, options }).collect(),
        accepts: accepts.into_iter().map(|(effect, accepted)| AcceptRule { effect, accepted }).collect(),
    })
}

/// One line per rule, Require before Accept, ordered by effect.
pub fn emit_macros_text(m: &MacroSpec) -> String {
    let mut out = String::new();
    let effects: BTreeSet<&PortTypeRef> =
        m.requires.iter().map(|r| &r.effect).chain(m.accepts.iter().map(|a| &a.effect)).collect();
    for effect in effects {
        if let Some(r) = m.require(effect) {
            let options: Vec<String> = r.options.iter().map(ToString::to_string).collect();
            let rhs = if options.is_empty() { "-".to_string() } else { options.join(" ; ") };
            let _ = writeln!(out, "{effect} Require {rhs}");
        }
        if let Some(a) = m.accept(effect) {
            let rhs = if a.accepted.is_empty() {
                "-".to_string()
            } else {
                a.accepted.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
            };
            let _ = writeln!(out, "{effect} Accept {rhs}");
        }
    }
    out
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn port_element(out: &mut String, tag: &str, p: &PortTypeRef, indent: usize) {
    let _ = writeln!(
        out,
        "{:indent$}<{tag} id=\"{}\" specType=\"{}\"/>",
        "",
        escape(&p.port),
        escape(&p.component_type)
    );
}

fn causes_block<'a>(out: &mut String, ports: impl IntoIterator<Item = &'a PortTypeRef>) {
    out.push_str("    <causes>\n");
    for p in ports {
        port_element(out, "port", p, 6);
    }
    out.push_str("    </causes>\n");
}

/// XML glue: per effect a `<require>` with one `<causes>` per option, then an
/// `<accept>` with a single `<causes>`. Dashes are empty `<causes>` blocks.
pub fn emit_xml(m: &MacroSpec) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<glue>\n");
    let effects: BTreeSet<&PortTypeRef> =
        m.requires.iter().map(|r| &r.effect).chain(m.accepts.iter().map(|a| &a.effect)).collect();
    for effect in effects {
        if let Some(r) = m.require(effect) {
            out.push_str("  <require>\n");
            port_element(&mut out, "effect", effect, 4);
            if r.options.is_empty() {
                causes_block(&mut out, []);
            }
            for opt in &r.options {
                match opt {
                    RequireOption::Dash => causes_block(&mut out, []),
                    RequireOption::Ports(ports) => causes_block(&mut out, ports),
                }
            }
            out.push_str("  </require>\n");
        }
        if let Some(a) = m.accept(effect) {
            out.push_str("  <accept>\n");
            port_element(&mut out, "effect", effect, 4);
            causes_block(&mut out, &a.accepted);
            out.push_str("  </accept>\n");
        }
    }
    out.push_str("</glue>\n");
    out
}

fn behavior_value(ct: &ComponentType) -> Value {
    let cardinality = match &ct.cardinality {
        CardExpr::Literal(v) => json!(v),
        CardExpr::Param(p) => json!(p),
    };
    let transitions: Vec<Value> = ct
        .transitions
        .iter()
        .map(|t| {
            json!({
                "kind": t.kind.as_str(),
                "label": t.label,
                "source": t.source,
                "target": t.destination,
                "guard": t.guard.as_ref().map(ToString::to_string),
            })
        })
        .collect();
    json!({
        "name": ct.name,
        "cardinality": cardinality,
        "initial": ct.initial_state(),
        "states": ct.states.iter().map(|s| s.name.as_str()).collect::<Vec<_>>(),
        "ports": ct.ports,
        "events": ct.events,
        "guards": ct.guards,
        "transitions": transitions,
    })
}

/// JSON array describing each component type's behavior, keys sorted.
pub fn export_behavior_json(cts: &[ComponentType]) -> String {
    let value = Value::Array(cts.iter().map(behavior_value).collect());
    let mut s = serde_json::to_string_pretty(&value).expect("JSON values always serialize");
    s.push('\n');
    s
}
