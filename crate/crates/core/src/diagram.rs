//! Diagram instantiation: matching factors, the uniqueness conditions,
//! brute-force configuration enumeration and conformance checking.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use thiserror::Error;

use crate::connector::motif_connector_interactions;
use crate::model::{
    ArchitectureDiagram, CardExpr, Configuration, Connector, ConnectorMotif, Interaction, MotifEnd, MotifGroup,
    PortInstance, PortTypeRef, Typing,
};

/// Default cap on search nodes visited by [`enumerate_configurations`].
pub const DEFAULT_MAX_NODES: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("unbound parameters: {}", .0.join(", "))]
    Unbound(Vec<String>),
    #[error("motif `{motif}` references unknown port type {port}")]
    UnknownPortType { motif: String, port: PortTypeRef },
    #[error("motif `{motif}`: multiplicity of {port} is zero")]
    ZeroMultiplicity { motif: String, port: PortTypeRef },
    #[error("configuration search exceeded {limit} nodes")]
    Capacity { limit: u64 },
    #[error("motif `{motif}` does not define a unique configuration")]
    NotEncodable { motif: String },
    #[error("motif `{0}` is not declared")]
    UnknownMotif(String),
}

/// Values for the cardinality parameters of a diagram.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Binding(pub BTreeMap<String, u64>);

impl Binding {
    pub fn new() -> Self {
        Binding::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: u64) -> Self {
        self.0.insert(name.into(), value);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: u64) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<u64> {
        self.0.get(name).copied()
    }

    /// Parameters of `d` without a value, sorted.
    pub fn missing(&self, d: &ArchitectureDiagram) -> Vec<String> {
        d.parameters().into_iter().filter(|p| !self.0.contains_key(p)).collect()
    }

    pub fn check_complete(&self, d: &ArchitectureDiagram) -> Result<(), DiagramError> {
        let missing = self.missing(d);
        if missing.is_empty() {
            Ok(())
        } else {
            Err(DiagramError::Unbound(missing))
        }
    }

    fn eval(&self, c: &CardExpr) -> Result<u64, DiagramError> {
        c.eval(&self.0).map_err(|name| DiagramError::Unbound(vec![name]))
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={v}")).collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for Binding {
    type Err = String;

    /// Whitespace- or comma-separated `name=value` pairs.
    fn from_str(s: &str) -> Result<Self, String> {
        let mut b = Binding::new();
        for item in s.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| format!("expected name=value, got `{item}`"))?;
            let v: u64 = v.trim().parse().map_err(|_| format!("`{v}` is not a non-negative integer"))?;
            b.set(k.trim(), v);
        }
        Ok(b)
    }
}

/// A motif end with every cardinality evaluated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedEnd {
    pub port: PortTypeRef,
    pub n: u64,
    pub m: u64,
    pub d: u64,
    pub typing: Typing,
}

pub fn resolve_end(
    diagram: &ArchitectureDiagram,
    motif: &ConnectorMotif,
    end: &MotifEnd,
    b: &Binding,
) -> Result<ResolvedEnd, DiagramError> {
    let ct = diagram
        .component_type(&end.port.component_type)
        .filter(|ct| ct.ports.contains(&end.port.port))
        .ok_or_else(|| DiagramError::UnknownPortType { motif: motif.name.clone(), port: end.port.clone() })?;
    Ok(ResolvedEnd {
        port: end.port.clone(),
        n: b.eval(&ct.cardinality)?,
        m: b.eval(&end.multiplicity)?,
        d: b.eval(&end.degree)?,
        typing: end.typing,
    })
}

pub fn resolve_motif(
    diagram: &ArchitectureDiagram,
    motif: &ConnectorMotif,
    b: &Binding,
) -> Result<Vec<ResolvedEnd>, DiagramError> {
    motif.ends.iter().map(|e| resolve_end(diagram, motif, e, b)).collect()
}

/// Instance count per component type.
pub fn instance_counts(d: &ArchitectureDiagram, b: &Binding) -> Result<BTreeMap<String, u32>, DiagramError> {
    d.component_types
        .iter()
        .map(|ct| {
            let n = b.eval(&ct.cardinality)?;
            let n = u32::try_from(n).map_err(|_| DiagramError::Capacity { limit: u32::MAX as u64 })?;
            Ok((ct.name.clone(), n))
        })
        .collect()
}

/// Port instances of every port type attached to some motif.
pub fn motif_universe(d: &ArchitectureDiagram, b: &Binding) -> Result<BTreeSet<PortInstance>, DiagramError> {
    let counts = instance_counts(d, b)?;
    Ok(crate::logic::port_universe(&d.motif_port_types(), &counts))
}

fn binom(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// `s_p = n_p · d_p / m_p`, exact.
pub fn matching_factor(
    diagram: &ArchitectureDiagram,
    motif: &ConnectorMotif,
    end: &MotifEnd,
    b: &Binding,
) -> Result<Ratio<u64>, DiagramError> {
    let r = resolve_end(diagram, motif, end, b)?;
    factor_of(&r).ok_or_else(|| DiagramError::ZeroMultiplicity { motif: motif.name.clone(), port: r.port })
}

fn factor_of(r: &ResolvedEnd) -> Option<Ratio<u64>> {
    (r.m > 0).then(|| Ratio::new(r.n * r.d, r.m))
}

/// `∏ C(n_q, m_q)`; `None` on overflow.
fn product_of_binomials(ends: &[ResolvedEnd]) -> Option<u128> {
    ends.iter().try_fold(1u128, |acc, e| acc.checked_mul(binom(e.n, e.m)?))
}

/// Number of distinct connectors the motif can form, saturating at `u128::MAX`.
pub fn max_connectors(diagram: &ArchitectureDiagram, motif: &ConnectorMotif, b: &Binding) -> Result<u128, DiagramError> {
    let ends = resolve_motif(diagram, motif, b)?;
    Ok(product_of_binomials(&ends).unwrap_or(u128::MAX))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndReport {
    pub port: PortTypeRef,
    pub typing: Typing,
    pub n: u64,
    pub m: u64,
    pub d: u64,
    /// `None` when the multiplicity is zero.
    pub s: Option<Ratio<u64>>,
    pub max_connectors: u128,
    /// `m ≤ n`
    pub condition1: bool,
    /// `s = ∏ C(n_q, m_q)`
    pub condition2: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifReport {
    pub motif: String,
    pub ends: Vec<EndReport>,
    /// Whether the Require/Accept encoding denotes exactly the connector
    /// semantics. Fails for motifs with a trigger and an end with `1 < m < n`:
    /// exact counts cannot bound a port type the options leave unmentioned.
    pub macro_exact: bool,
}

impl MotifReport {
    pub fn unique(&self) -> bool {
        self.ends.iter().all(|e| e.condition1 && e.condition2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodabilityReport {
    pub motifs: Vec<MotifReport>,
    pub overall: bool,
}

impl EncodabilityReport {
    pub fn macro_exact(&self) -> bool {
        self.motifs.iter().all(|m| m.macro_exact)
    }
}

pub fn check_motif(diagram: &ArchitectureDiagram, motif: &ConnectorMotif, b: &Binding) -> Result<MotifReport, DiagramError> {
    let ends = resolve_motif(diagram, motif, b)?;
    let max = product_of_binomials(&ends).unwrap_or(u128::MAX);
    let reports: Vec<EndReport> = ends
        .iter()
        .map(|e| {
            let s = factor_of(e);
            EndReport {
                port: e.port.clone(),
                typing: e.typing,
                n: e.n,
                m: e.m,
                d: e.d,
                s,
                max_connectors: max,
                condition1: e.m <= e.n,
                condition2: s.is_some_and(|s| s.is_integer() && *s.numer() as u128 == max),
            }
        })
        .collect();
    let triggered = ends.iter().any(|e| e.typing == Typing::Trigger);
    let macro_exact = !(triggered && ends.iter().any(|e| 1 < e.m && e.m < e.n));
    Ok(MotifReport { motif: motif.name.clone(), ends: reports, macro_exact })
}

/// The uniqueness conditions for every motif end.
pub fn check_encodable(d: &ArchitectureDiagram, b: &Binding) -> Result<EncodabilityReport, DiagramError> {
    let motifs = d.motifs.iter().map(|m| check_motif(d, m, b)).collect::<Result<Vec<_>, _>>()?;
    let overall = motifs.iter().all(MotifReport::unique);
    Ok(EncodabilityReport { motifs, overall })
}

fn combinations(n: u32, k: u32) -> Vec<Vec<u32>> {
    fn go(start: u32, n: u32, k: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() as u32 == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            if n - i + 1 < k - cur.len() as u32 {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        go(1, n, k, &mut Vec::new(), &mut out);
    }
    out
}

/// Every connector the motif can form, sorted. Fails once more than
/// `cap` connectors would be produced.
fn all_connectors(ends: &[ResolvedEnd], cap: u64) -> Result<Vec<Connector>, DiagramError> {
    let total = product_of_binomials(ends).unwrap_or(u128::MAX);
    if total > cap as u128 {
        return Err(DiagramError::Capacity { limit: cap });
    }
    let mut out = vec![Connector::new()];
    for e in ends {
        let n = u32::try_from(e.n).map_err(|_| DiagramError::Capacity { limit: cap })?;
        let m = u32::try_from(e.m).map_err(|_| DiagramError::Capacity { limit: cap })?;
        let subsets = combinations(n, m);
        out = out
            .iter()
            .flat_map(|k| {
                subsets.iter().map(move |subset| {
                    let mut k = k.clone();
                    for &i in subset {
                        k.insert(PortInstance::new(e.port.component_type.clone(), i, e.port.port.clone()), e.typing);
                    }
                    k
                })
            })
            .collect();
    }
    out.sort();
    Ok(out)
}

/// Result of a bounded enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enumeration {
    pub configurations: Vec<Configuration>,
    pub truncated: bool,
    pub nodes: u64,
}

struct Search<'a> {
    candidates: &'a [Connector],
    /// Degree-counter slots touched by each candidate.
    slots: Vec<Vec<usize>>,
    need: Vec<u64>,
    used: Vec<u64>,
    /// Candidates not yet decided that touch each slot.
    avail: Vec<u64>,
    chosen: Vec<usize>,
    out: Vec<BTreeSet<Connector>>,
    limit: usize,
    truncated: bool,
    nodes: u64,
    max_nodes: u64,
}

impl Search<'_> {
    fn run(&mut self, i: usize) -> Result<(), DiagramError> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(DiagramError::Capacity { limit: self.max_nodes });
        }
        if self.out.len() >= self.limit {
            self.truncated = true;
            return Ok(());
        }
        if i == self.candidates.len() {
            if !self.chosen.is_empty() && self.used == self.need {
                self.out.push(self.chosen.iter().map(|&c| self.candidates[c].clone()).collect());
            }
            return Ok(());
        }
        for &s in &self.slots[i] {
            self.avail[s] -= 1;
        }
        if self.slots[i].iter().all(|&s| self.used[s] < self.need[s]) {
            for &s in &self.slots[i] {
                self.used[s] += 1;
            }
            self.chosen.push(i);
            if self.feasible(i) {
                self.run(i + 1)?;
            }
            self.chosen.pop();
            for &s in &self.slots[i] {
                self.used[s] -= 1;
            }
        }
        if self.feasible(i) {
            self.run(i + 1)?;
        }
        for &s in &self.slots[i] {
            self.avail[s] += 1;
        }
        Ok(())
    }

    /// Every slot of the decided candidates can still reach its degree.
    fn feasible(&self, i: usize) -> bool {
        self.slots[i].iter().all(|&s| self.used[s] + self.avail[s] >= self.need[s])
            && (i + 1 < self.candidates.len() || self.used == self.need)
    }
}

/// Conforming configurations of one motif in lexicographic order of their
/// sorted connector lists, at most `limit` of them. The empty set is never a
/// configuration.
pub fn enumerate_configurations(
    diagram: &ArchitectureDiagram,
    motif: &ConnectorMotif,
    b: &Binding,
    limit: usize,
    max_nodes: u64,
) -> Result<Enumeration, DiagramError> {
    let ends = resolve_motif(diagram, motif, b)?;
    if let Some(e) = ends.iter().find(|e| e.m == 0) {
        return Err(DiagramError::ZeroMultiplicity { motif: motif.name.clone(), port: e.port.clone() });
    }
    let candidates = all_connectors(&ends, max_nodes)?;

    let mut slot_of = BTreeMap::new();
    let mut need = Vec::new();
    for e in &ends {
        for i in 1..=e.n {
            slot_of.insert((e.port.clone(), i as u32), need.len());
            need.push(e.d);
        }
    }
    let slots: Vec<Vec<usize>> = candidates
        .iter()
        .map(|k| k.ports().map(|p| slot_of[&(p.port_type(), p.index)]).collect())
        .collect();
    let mut avail = vec![0u64; need.len()];
    for ss in &slots {
        for &s in ss {
            avail[s] += 1;
        }
    }
    if need.iter().zip(&avail).any(|(n, a)| a < n) {
        return Ok(Enumeration { configurations: Vec::new(), truncated: false, nodes: 0 });
    }

    let mut search = Search {
        candidates: &candidates,
        slots,
        used: vec![0; need.len()],
        need,
        avail,
        chosen: Vec::new(),
        out: Vec::new(),
        limit: limit.max(1),
        truncated: false,
        nodes: 0,
        max_nodes,
    };
    search.run(0)?;
    let configurations = search.out.into_iter().map(|cs| Configuration::single(motif.name.clone(), cs)).collect();
    Ok(Enumeration { configurations, truncated: search.truncated, nodes: search.nodes })
}

/// Configurations of the whole diagram: the product of per-motif results.
pub fn enumerate_diagram(
    d: &ArchitectureDiagram,
    b: &Binding,
    limit: usize,
    max_nodes: u64,
) -> Result<Enumeration, DiagramError> {
    let mut acc = vec![Configuration::default()];
    let (mut truncated, mut nodes) = (false, 0);
    for motif in &d.motifs {
        let e = enumerate_configurations(d, motif, b, limit, max_nodes)?;
        truncated |= e.truncated;
        nodes += e.nodes;
        let mut next = Vec::new();
        'outer: for base in &acc {
            for c in &e.configurations {
                if next.len() >= limit.max(1) {
                    truncated = true;
                    break 'outer;
                }
                let mut merged = base.clone();
                merged.groups.extend(c.groups.iter().cloned());
                next.push(merged);
            }
        }
        acc = next;
    }
    if d.motifs.is_empty() {
        acc.clear();
    }
    Ok(Enumeration { configurations: acc, truncated, nodes })
}

/// The configuration made of every possible connector; only defined when
/// the motif satisfies the uniqueness conditions.
pub fn unique_configuration(
    diagram: &ArchitectureDiagram,
    motif: &ConnectorMotif,
    b: &Binding,
) -> Result<Configuration, DiagramError> {
    if !check_motif(diagram, motif, b)?.unique() {
        return Err(DiagramError::NotEncodable { motif: motif.name.clone() });
    }
    let ends = resolve_motif(diagram, motif, b)?;
    let all = all_connectors(&ends, DEFAULT_MAX_NODES)?;
    Ok(Configuration::single(motif.name.clone(), all.into_iter().collect()))
}

/// Whether `gamma` has one group per motif, each meeting the per-connector
/// multiplicity and typing condition and the per-instance degree condition.
pub fn conforms(gamma: &Configuration, d: &ArchitectureDiagram, b: &Binding) -> bool {
    if gamma.connector_count() == 0 || gamma.groups.len() != d.motifs.len() {
        return false;
    }
    d.motifs.iter().all(|motif| {
        let Some(group) = gamma.group(&motif.name) else { return false };
        let Ok(ends) = resolve_motif(d, motif, b) else { return false };
        group_conforms(group, &ends)
    })
}

fn group_conforms(group: &MotifGroup, ends: &[ResolvedEnd]) -> bool {
    let by_port: BTreeMap<&PortTypeRef, &ResolvedEnd> = ends.iter().map(|e| (&e.port, e)).collect();
    let mut degree: BTreeMap<&PortInstance, u64> = BTreeMap::new();
    for k in &group.connectors {
        let mut per_type: BTreeMap<PortTypeRef, u64> = BTreeMap::new();
        for (p, t) in &k.ends {
            let Some(e) = by_port.get(&p.port_type()) else { return false };
            if *t != e.typing || p.index == 0 || p.index as u64 > e.n {
                return false;
            }
            *per_type.entry(p.port_type()).or_default() += 1;
            *degree.entry(p).or_default() += 1;
        }
        if ends.iter().any(|e| per_type.get(&e.port).copied().unwrap_or(0) != e.m) {
            return false;
        }
    }
    ends.iter().all(|e| {
        (1..=e.n).all(|i| {
            let p = PortInstance::new(e.port.component_type.clone(), i as u32, e.port.port.clone());
            degree.get(&p).copied().unwrap_or(0) == e.d
        })
    })
}

/// Interactions of the unique configuration of every motif.
pub fn diagram_interactions(d: &ArchitectureDiagram, b: &Binding) -> Result<BTreeSet<Interaction>, DiagramError> {
    let mut out = BTreeSet::new();
    for motif in &d.motifs {
        for k in unique_configuration(d, motif, b)?.connectors() {
            out.extend(motif_connector_interactions(k));
        }
    }
    Ok(out)
}

/// For connectors of one port type: whenever some connector holds `p_i` but
/// not `p_j`, another holds `p_j` but not `p_i`.
pub fn exchange_property_holds(gamma: &Configuration) -> bool {
    let ports: BTreeSet<&PortInstance> = gamma.connectors().flat_map(|k| k.ports()).collect();
    for pi in &ports {
        for pj in ports.iter().filter(|pj| pj.port_type() == pi.port_type() && pj != &pi) {
            let forward = gamma.connectors().any(|k| k.contains(pi) && !k.contains(pj));
            let backward = gamma.connectors().any(|k| k.contains(pj) && !k.contains(pi));
            if forward && !backward {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ComponentType;

    fn two_port(n1: u64, m_p: u64, d_p: u64, n2: u64, m_q: u64, d_q: u64, t_q: Typing) -> ArchitectureDiagram {
        let mut d = ArchitectureDiagram::new("D");
        d.component_types.push(ComponentType::new("T1", CardExpr::Literal(n1)).with_ports(["p"]).with_state("s", true));
        d.component_types.push(ComponentType::new("T2", CardExpr::Literal(n2)).with_ports(["q"]).with_state("s", true));
        d.motifs.push(ConnectorMotif::new(
            "m",
            vec![
                MotifEnd::new(PortTypeRef::new("T1", "p"), CardExpr::Literal(m_p), CardExpr::Literal(d_p), Typing::Synchron),
                MotifEnd::new(PortTypeRef::new("T2", "q"), CardExpr::Literal(m_q), CardExpr::Literal(d_q), t_q),
            ],
        ));
        d
    }

    fn pq(i: u32, j: u32) -> Connector {
        [
            (PortInstance::new("T1", i, "p"), Typing::Synchron),
            (PortInstance::new("T2", j, "q"), Typing::Synchron),
        ]
        .into_iter()
        .collect()
    }

    fn enumerate(d: &ArchitectureDiagram) -> Vec<Configuration> {
        enumerate_configurations(d, &d.motifs[0], &Binding::new(), 100, DEFAULT_MAX_NODES).unwrap().configurations
    }

    #[test]
    fn matching_two_configurations() {
        let d = two_port(2, 1, 1, 2, 1, 1, Typing::Synchron);
        let got = enumerate(&d);
        let want = vec![
            Configuration::single("m", [pq(1, 1), pq(2, 2)].into()),
            Configuration::single("m", [pq(1, 2), pq(2, 1)].into()),
        ];
        assert_eq!(got, want);
        let report = check_encodable(&d, &Binding::new()).unwrap();
        assert!(!report.overall);
        assert_eq!(report.motifs[0].ends[0].s, Some(Ratio::from_integer(2)));
        assert_eq!(report.motifs[0].ends[0].max_connectors, 4);
    }

    #[test]
    fn complete_one_configuration() {
        let d = two_port(2, 1, 2, 2, 1, 2, Typing::Synchron);
        let got = enumerate(&d);
        let gamma = Configuration::single("m", [pq(1, 1), pq(1, 2), pq(2, 1), pq(2, 2)].into());
        assert_eq!(got, vec![gamma.clone()]);
        assert!(check_encodable(&d, &Binding::new()).unwrap().overall);
        assert_eq!(unique_configuration(&d, &d.motifs[0], &Binding::new()).unwrap(), gamma);
        assert!(conforms(&gamma, &d, &Binding::new()));

        let matching_gamma = Configuration::single("m", [pq(1, 1), pq(2, 2)].into());
        assert!(!conforms(&matching_gamma, &d, &Binding::new()));
    }

    #[test]
    fn mismatched_factors_have_no_configuration() {
        let d = two_port(2, 1, 1, 3, 1, 1, Typing::Synchron);
        assert!(enumerate(&d).is_empty());
    }

    #[test]
    fn matching_factors_and_maximum() {
        let d = two_port(2, 1, 2, 2, 1, 2, Typing::Synchron);
        let m = &d.motifs[0];
        assert_eq!(matching_factor(&d, m, &m.ends[0], &Binding::new()).unwrap(), Ratio::from_integer(4));
        assert_eq!(max_connectors(&d, m, &Binding::new()).unwrap(), 4);
        let d = two_port(3, 3, 1, 2, 3, 1, Typing::Synchron);
        assert_eq!(max_connectors(&d, &d.motifs[0], &Binding::new()).unwrap(), 0);
        assert_eq!(matching_factor(&d, &d.motifs[0], &d.motifs[0].ends[0], &Binding::new()).unwrap(), Ratio::from_integer(1));
        let d = two_port(2, 3, 1, 2, 1, 1, Typing::Synchron);
        assert_eq!(matching_factor(&d, &d.motifs[0], &d.motifs[0].ends[0], &Binding::new()).unwrap(), Ratio::new(2, 3));
    }

    #[test]
    fn pair_binding_gives_single_connector() {
        let d = two_port(1, 1, 1, 2, 2, 1, Typing::Trigger);
        assert!(check_encodable(&d, &Binding::new()).unwrap().overall);
        let k: Connector = [
            (PortInstance::new("T1", 1, "p"), Typing::Synchron),
            (PortInstance::new("T2", 1, "q"), Typing::Trigger),
            (PortInstance::new("T2", 2, "q"), Typing::Trigger),
        ]
        .into_iter()
        .collect();
        let gamma = Configuration::single("m", [k].into());
        assert_eq!(enumerate(&d), vec![gamma.clone()]);
        assert!(conforms(&gamma, &d, &Binding::new()));
        assert_eq!(diagram_interactions(&d, &Binding::new()).unwrap().len(), 6);
    }

    #[test]
    fn truncation_and_capacity() {
        let d = two_port(3, 1, 1, 3, 1, 1, Typing::Synchron);
        let full = enumerate_configurations(&d, &d.motifs[0], &Binding::new(), 100, DEFAULT_MAX_NODES).unwrap();
        assert_eq!(full.configurations.len(), 6);
        assert!(!full.truncated);
        let cut = enumerate_configurations(&d, &d.motifs[0], &Binding::new(), 2, DEFAULT_MAX_NODES).unwrap();
        assert_eq!(cut.configurations, full.configurations[..2].to_vec());
        assert!(cut.truncated);
        assert_eq!(
            enumerate_configurations(&d, &d.motifs[0], &Binding::new(), 100, 5),
            Err(DiagramError::Capacity { limit: 5 })
        );
    }

    #[test]
    fn unbound_parameters_are_listed() {
        let mut d = two_port(1, 1, 1, 1, 1, 1, Typing::Synchron);
        d.component_types[0].cardinality = CardExpr::param("n");
        d.motifs[0].ends[1].degree = CardExpr::param("k");
        assert_eq!(Binding::new().check_complete(&d), Err(DiagramError::Unbound(vec!["k".into(), "n".into()])));
        assert_eq!("n=2, k=1".parse::<Binding>().unwrap(), Binding::new().with("n", 2).with("k", 1));
        assert!("n".parse::<Binding>().is_err());
    }

    #[test]
    fn enumeration_is_self_consistent() {
        for n in 1..=3 {
            for m in 1..=n {
                for dd in 1..=3 {
                    let d = two_port(n, m, dd, 3, 1, 1, Typing::Synchron);
                    for gamma in enumerate(&d) {
                        assert!(conforms(&gamma, &d, &Binding::new()));
                        assert!(exchange_property_holds(&gamma));
                    }
                }
            }
        }
    }
}
