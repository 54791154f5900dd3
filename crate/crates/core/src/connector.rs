//! Interaction semantics of flat and hierarchical connectors.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{Connector, Interaction, PortInstance, Typing};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConnectorError {
    #[error("port instance {0} appears more than once in the connector")]
    DuplicatePort(PortInstance),
    #[error("connector node has no children")]
    Empty,
    #[error("connector node has {0} children; at most 63 are supported")]
    TooManyArms(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Leaf(PortInstance),
    Inner(Vec<ConnectorNode>),
}

/// A typed arm of a connector. The root itself carries no typing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectorNode {
    pub typing: Typing,
    pub payload: Payload,
}

impl ConnectorNode {
    pub fn leaf(port: PortInstance, typing: Typing) -> Self {
        ConnectorNode { typing, payload: Payload::Leaf(port) }
    }

    pub fn inner(children: Vec<ConnectorNode>, typing: Typing) -> Self {
        ConnectorNode { typing, payload: Payload::Inner(children) }
    }

    fn leaves<'a>(&'a self, out: &mut Vec<&'a PortInstance>) {
        match &self.payload {
            Payload::Leaf(p) => out.push(p),
            Payload::Inner(cs) => cs.iter().for_each(|c| c.leaves(out)),
        }
    }
}

type PortSet = BTreeSet<PortInstance>;

fn node_set(node: &ConnectorNode) -> Result<BTreeSet<PortSet>, ConnectorError> {
    match &node.payload {
        Payload::Leaf(p) => Ok([[p.clone()].into()].into()),
        Payload::Inner(cs) => children_set(cs),
    }
}

fn children_set(children: &[ConnectorNode]) -> Result<BTreeSet<PortSet>, ConnectorError> {
    if children.is_empty() {
        return Err(ConnectorError::Empty);
    }
    if children.len() > 63 {
        return Err(ConnectorError::TooManyArms(children.len()));
    }
    let subs = children.iter().map(node_set).collect::<Result<Vec<_>, _>>()?;
    let triggers: Vec<bool> = children.iter().map(|c| c.typing == Typing::Trigger).collect();

    let mut out = BTreeSet::new();
    if !triggers.contains(&true) {
        product(&subs, &(0..subs.len()).collect::<Vec<_>>(), &mut out);
    } else {
        for mask in 1u64..(1u64 << subs.len()) {
            let chosen: Vec<usize> = (0..subs.len()).filter(|i| mask >> i & 1 == 1).collect();
            if chosen.iter().any(|&i| triggers[i]) {
                product(&subs, &chosen, &mut out);
            }
        }
    }
    Ok(out)
}

/// Unions formed by picking one sub-interaction from each chosen child.
fn product(subs: &[BTreeSet<PortSet>], chosen: &[usize], out: &mut BTreeSet<PortSet>) {
    let mut acc: Vec<PortSet> = vec![PortSet::new()];
    for &i in chosen {
        acc = acc
            .iter()
            .flat_map(|base| subs[i].iter().map(move |s| base.union(s).cloned().collect()))
            .collect();
    }
    out.extend(acc);
}

/// Interactions of the connector whose root has the given children.
pub fn interaction_set(root: &[ConnectorNode]) -> Result<BTreeSet<Interaction>, ConnectorError> {
    let mut seen = BTreeSet::new();
    let mut leaves = Vec::new();
    root.iter().for_each(|c| c.leaves(&mut leaves));
    for p in leaves {
        if !seen.insert(p) {
            return Err(ConnectorError::DuplicatePort(p.clone()));
        }
    }
    Ok(children_set(root)?.into_iter().filter_map(Interaction::new).collect())
}

/// Interactions of a flat connector: a depth-one tree over its ends.
pub fn motif_connector_interactions(k: &Connector) -> BTreeSet<Interaction> {
    let children: Vec<ConnectorNode> = k.ends.iter().map(|(p, t)| ConnectorNode::leaf(p.clone(), *t)).collect();
    if children.is_empty() {
        return BTreeSet::new();
    }
    interaction_set(&children).expect("flat connector ports are distinct")
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: Typing = Typing::Synchron;
    const T: Typing = Typing::Trigger;

    fn port(name: &str) -> PortInstance {
        PortInstance::new("X", 1, name)
    }

    fn leaf(name: &str, t: Typing) -> ConnectorNode {
        ConnectorNode::leaf(port(name), t)
    }

    fn sets(items: &[&[&str]]) -> BTreeSet<Interaction> {
        items.iter().map(|ps| ps.iter().map(|p| port(p)).collect()).collect()
    }

    #[test]
    fn rendezvous() {
        let got = interaction_set(&[leaf("s", S), leaf("r1", S), leaf("r2", S)]).unwrap();
        assert_eq!(got, sets(&[&["s", "r1", "r2"]]));
    }

    #[test]
    fn broadcast() {
        let got = interaction_set(&[leaf("s", T), leaf("r1", S), leaf("r2", S)]).unwrap();
        assert_eq!(got, sets(&[&["s"], &["s", "r1"], &["s", "r2"], &["s", "r1", "r2"]]));
    }

    #[test]
    fn hierarchical() {
        let pair = |t| ConnectorNode::inner(vec![leaf("r1", S), leaf("r2", S)], t);
        let got = interaction_set(&[leaf("s", S), pair(T)]).unwrap();
        assert_eq!(got, sets(&[&["r1", "r2"], &["s", "r1", "r2"]]));

        let got = interaction_set(&[leaf("s", T), pair(S)]).unwrap();
        assert_eq!(got, sets(&[&["s"], &["s", "r1", "r2"]]));

        let inner = ConnectorNode::inner(vec![leaf("r1", T), leaf("r2", S)], S);
        let got = interaction_set(&[leaf("s", T), inner]).unwrap();
        assert_eq!(got, sets(&[&["s"], &["s", "r1"], &["s", "r1", "r2"]]));
    }

    #[test]
    fn duplicate_leaf() {
        let err = interaction_set(&[leaf("s", S), ConnectorNode::inner(vec![leaf("s", T)], S)]).unwrap_err();
        assert_eq!(err, ConnectorError::DuplicatePort(port("s")));
    }

    #[test]
    fn flat_connectors() {
        let k: Connector = [(port("p"), S), (port("q"), S)].into_iter().collect();
        assert_eq!(motif_connector_interactions(&k), sets(&[&["p", "q"]]));
        let k: Connector = [(port("p"), T)].into_iter().collect();
        assert_eq!(motif_connector_interactions(&k), sets(&[&["p"]]));
    }

    fn flat(typings: &[Typing]) -> Vec<ConnectorNode> {
        typings.iter().enumerate().map(|(i, t)| leaf(&format!("p{i}"), *t)).collect()
    }

    #[test]
    fn flat_count_formula() {
        for k in 1..=6usize {
            for mask in 0u32..(1 << k) {
                let typings: Vec<Typing> = (0..k).map(|i| if mask >> i & 1 == 1 { T } else { S }).collect();
                let t = mask.count_ones();
                let got = interaction_set(&flat(&typings)).unwrap();
                let want = if t == 0 { 1 } else { ((1usize << t) - 1) << (k as u32 - t) };
                assert_eq!(got.len(), want, "k={k} typings={typings:?}");
                let leaves: BTreeSet<_> = (0..k).map(|i| port(&format!("p{i}"))).collect();
                assert!(got.iter().all(|a| a.is_subset(&leaves)));
            }
        }
    }

    #[test]
    fn retyping_as_trigger_is_monotone() {
        for k in 1..=5usize {
            for mask in 0u32..(1 << k) {
                let typings: Vec<Typing> = (0..k).map(|i| if mask >> i & 1 == 1 { T } else { S }).collect();
                let before = interaction_set(&flat(&typings)).unwrap();
                for i in (0..k).filter(|i| typings[*i] == S) {
                    let mut more = typings.clone();
                    more[i] = T;
                    let after = interaction_set(&flat(&more)).unwrap();
                    assert!(before.is_subset(&after));
                }
            }
        }
    }
}
