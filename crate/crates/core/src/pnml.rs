//! PNML ingestion for nets and rules.
//!
//! The accepted subset: a `pnml` root holding either one `net` or one
//! `rule`. Nets contain `place`, `transition` and `arc` elements,
//! optionally below `page` wrappers; graphical annotations are ignored.
//! Element ids must be non-negative integers and unique per net section.
//!
//! ```xml
//! <place id="3">
//!   <name><text>A</text></name>
//!   <initialMarking><text>1</text></initialMarking>
//!   <capacity><text>omega</text></capacity>
//! </place>
//! <arc id="8" source="4" target="5"><inscription><text>2</text></inscription></arc>
//! ```
//!
//! Capacities default to omega; the value 2147483647 is read as omega.
//! Arc multiplicity comes from the `inscription` weight or from repeating
//! the arc.
//!
//! A rule document carries three net sections and the interface mapping:
//!
//! ```xml
//! <rule name="r1">
//!   <lhs><net>...</net></lhs>
//!   <k><net>...</net></k>
//!   <rhs><net>...</net></rhs>
//!   <correspondence k="100" lhs="17" rhs="17"/>
//! </rule>
//! ```
//!
//! Every element of `k` needs exactly one correspondence row; `k` must be
//! a subnet of both sides through those rows. Elements of `lhs` and `rhs`
//! are identified (preserved) when a row links them; the interface net is
//! discarded after validation. An `rhs`-only element may not reuse an
//! unrelated `lhs` id.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use roxmltree::{Document, Node};
use thiserror::Error;

use crate::net::{Capacity, Marking, PetriNet, Place, PlaceId, Transition, TransitionId};
use crate::rules::{Rule, RuleError};

#[derive(Debug, Error)]
pub enum PnmlError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed XML: {0}")]
    Xml(#[from] roxmltree::Error),
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
    #[error("net is not well-formed: {0:?}")]
    Net(Vec<crate::net::Violation>),
    #[error(transparent)]
    Rule(#[from] RuleError),
}

fn invalid(node: &Node, doc: &Document, message: impl Into<String>) -> PnmlError {
    let pos = doc.text_pos_at(node.range().start);
    PnmlError::Invalid {
        location: format!("line {} column {}", pos.row, pos.col),
        message: message.into(),
    }
}

fn is_elem(node: &Node, name: &str) -> bool {
    node.is_element() && node.tag_name().name() == name
}

fn child_elem<'a, 'input>(node: &Node<'a, 'input>, name: &str) -> Option<Node<'a, 'input>> {
    node.children().find(|c| is_elem(c, name))
}

/// `<name><text>..</text></name>`-style annotation text.
fn annotation_text(node: &Node, name: &str) -> Option<String> {
    let wrapper = child_elem(node, name)?;
    let text = child_elem(&wrapper, "text")
        .and_then(|t| t.text())
        .or_else(|| wrapper.text())
        .unwrap_or("");
    Some(text.trim().to_string())
}

fn id_attr(node: &Node, doc: &Document, attr: &str) -> Result<u64, PnmlError> {
    let raw = node
        .attribute(attr)
        .ok_or_else(|| invalid(node, doc, format!("missing {attr} attribute")))?;
    raw.parse::<u64>().map_err(|_| {
        invalid(node, doc, format!("{attr}=\"{raw}\" is not a non-negative integer id"))
    })
}

/// Elements of a net section in document order, looking through `page`
/// wrappers.
fn net_elements<'a, 'input>(net: &Node<'a, 'input>, name: &'static str) -> Vec<Node<'a, 'input>> {
    let mut out = Vec::new();
    fn walk<'a, 'input>(node: &Node<'a, 'input>, name: &str, out: &mut Vec<Node<'a, 'input>>) {
        for child in node.children() {
            if is_elem(&child, name) {
                out.push(child);
            } else if is_elem(&child, "page") {
                walk(&child, name, out);
            }
        }
    }
    walk(net, name, &mut out);
    out
}

fn parse_net_node(net_node: &Node, doc: &Document) -> Result<PetriNet, PnmlError> {
    let mut seen_ids: BTreeSet<u64> = BTreeSet::new();
    let mut places = Vec::new();
    let mut marking = Marking::empty();

    for node in net_elements(net_node, "place") {
        let id = id_attr(&node, doc, "id")?;
        if !seen_ids.insert(id) {
            return Err(invalid(&node, doc, format!("duplicate id {id}")));
        }
        let label = annotation_text(&node, "name").unwrap_or_default();
        let capacity = match annotation_text(&node, "capacity") {
            None => Capacity::Omega,
            Some(text) if text == "omega" => Capacity::Omega,
            Some(text) => {
                let value: u64 = text.parse().map_err(|_| {
                    invalid(&node, doc, format!("capacity \"{text}\" is not a number or omega"))
                })?;
                if value == 0 {
                    return Err(invalid(&node, doc, "capacity must be at least 1"));
                }
                Capacity::from_rendering(value)
            }
        };
        if let Some(text) = annotation_text(&node, "initialMarking") {
            let tokens: u64 = text.parse().map_err(|_| {
                invalid(&node, doc, format!("initialMarking \"{text}\" is not a number"))
            })?;
            marking.insert(PlaceId(id), tokens);
        }
        places.push(Place::new(id, label, capacity));
    }

    let mut transitions = Vec::new();
    for node in net_elements(net_node, "transition") {
        let id = id_attr(&node, doc, "id")?;
        if !seen_ids.insert(id) {
            return Err(invalid(&node, doc, format!("duplicate id {id}")));
        }
        let label = annotation_text(&node, "name").unwrap_or_default();
        transitions.push(Transition::new(id, label));
    }

    let place_ids: BTreeSet<u64> = places.iter().map(|p| p.id.0).collect();
    let transition_ids: BTreeSet<u64> = transitions.iter().map(|t| t.id.0).collect();
    let mut pre: BTreeMap<TransitionId, Marking> = BTreeMap::new();
    let mut post: BTreeMap<TransitionId, Marking> = BTreeMap::new();

    for node in net_elements(net_node, "arc") {
        if let Some(id) = node.attribute("id") {
            let id: u64 = id.parse().map_err(|_| {
                invalid(&node, doc, format!("id=\"{id}\" is not a non-negative integer id"))
            })?;
            if !seen_ids.insert(id) {
                return Err(invalid(&node, doc, format!("duplicate id {id}")));
            }
        }
        let source = id_attr(&node, doc, "source")?;
        let target = id_attr(&node, doc, "target")?;
        let weight = match annotation_text(&node, "inscription") {
            None => 1,
            Some(text) => {
                let w: u64 = text.parse().map_err(|_| {
                    invalid(&node, doc, format!("inscription \"{text}\" is not a number"))
                })?;
                if w == 0 {
                    return Err(invalid(&node, doc, "arc weight must be at least 1"));
                }
                w
            }
        };
        match (
            place_ids.contains(&source),
            transition_ids.contains(&source),
            place_ids.contains(&target),
            transition_ids.contains(&target),
        ) {
            (true, _, _, true) => {
                let row = pre.entry(TransitionId(target)).or_default();
                row.insert(PlaceId(source), weight);
            }
            (_, true, true, _) => {
                let row = post.entry(TransitionId(source)).or_default();
                row.insert(PlaceId(target), weight);
            }
            (true, _, true, _) => {
                return Err(invalid(&node, doc, "arc connects two places"));
            }
            (_, true, _, true) => {
                return Err(invalid(&node, doc, "arc connects two transitions"));
            }
            _ => {
                return Err(invalid(
                    &node,
                    doc,
                    format!("arc references unknown element ({source} -> {target})"),
                ));
            }
        }
    }

    PetriNet::new(
        places,
        transitions,
        pre.into_iter().collect(),
        post.into_iter().collect(),
        marking,
    )
    .map_err(PnmlError::Net)
}

/// Parse a PNML document holding a single net.
pub fn parse_net(xml: &str) -> Result<PetriNet, PnmlError> {
    let doc = Document::parse(xml)?;
    let root = doc.root_element();
    let net_node = if is_elem(&root, "net") {
        root
    } else {
        child_elem(&root, "net")
            .ok_or_else(|| invalid(&root, &doc, "document contains no net"))?
    };
    parse_net_node(&net_node, &doc)
}

pub fn parse_net_file(path: impl AsRef<Path>) -> Result<PetriNet, PnmlError> {
    let path = path.as_ref();
    let xml = std::fs::read_to_string(path).map_err(|source| PnmlError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_net(&xml)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum ElementKind {
    Place,
    Transition,
}

struct Correspondence {
    k: u64,
    lhs: u64,
    rhs: u64,
    kind: ElementKind,
}

fn element_kind(net: &PetriNet, id: u64) -> Option<ElementKind> {
    if net.place(PlaceId(id)).is_some() {
        Some(ElementKind::Place)
    } else if net.transition(TransitionId(id)).is_some() {
        Some(ElementKind::Transition)
    } else {
        None
    }
}

/// Parse a PNML rule document into a rule over shared rule-local ids.
pub fn parse_rule(xml: &str) -> Result<Rule, PnmlError> {
    let doc = Document::parse(xml)?;
    let root = doc.root_element();
    let rule_node = if is_elem(&root, "rule") {
        root
    } else {
        child_elem(&root, "rule")
            .ok_or_else(|| invalid(&root, &doc, "document contains no rule"))?
    };
    let name = rule_node
        .attribute("name")
        .or_else(|| rule_node.attribute("id"))
        .ok_or_else(|| invalid(&rule_node, &doc, "rule needs a name or id attribute"))?
        .to_string();

    let section = |tag: &str| -> Result<PetriNet, PnmlError> {
        let wrapper = child_elem(&rule_node, tag)
            .ok_or_else(|| invalid(&rule_node, &doc, format!("rule is missing the {tag} net")))?;
        let net_node = child_elem(&wrapper, "net")
            .ok_or_else(|| invalid(&wrapper, &doc, format!("{tag} holds no net")))?;
        parse_net_node(&net_node, &doc)
    };
    let lhs = section("lhs")?;
    let interface = section("k")?;
    let rhs = section("rhs")?;

    let mut correspondences = Vec::new();
    for node in rule_node.children().filter(|c| is_elem(c, "correspondence")) {
        let k = id_attr(&node, &doc, "k")?;
        let lhs_id = id_attr(&node, &doc, "lhs")?;
        let rhs_id = id_attr(&node, &doc, "rhs")?;
        let kind = element_kind(&interface, k)
            .ok_or_else(|| invalid(&node, &doc, format!("k id {k} is not in the interface net")))?;
        if element_kind(&lhs, lhs_id) != Some(kind) {
            return Err(invalid(
                &node,
                &doc,
                format!("lhs id {lhs_id} is missing or of the wrong kind"),
            ));
        }
        if element_kind(&rhs, rhs_id) != Some(kind) {
            return Err(invalid(
                &node,
                &doc,
                format!("rhs id {rhs_id} is missing or of the wrong kind"),
            ));
        }
        correspondences.push(Correspondence { k, lhs: lhs_id, rhs: rhs_id, kind });
    }

    validate_interface(&rule_node, &doc, &lhs, &interface, &rhs, &correspondences)?;

    // Rename rhs ids into the rule-local (= lhs) id space.
    let place_rename: BTreeMap<u64, u64> = correspondences
        .iter()
        .filter(|c| c.kind == ElementKind::Place)
        .map(|c| (c.rhs, c.lhs))
        .collect();
    let transition_rename: BTreeMap<u64, u64> = correspondences
        .iter()
        .filter(|c| c.kind == ElementKind::Transition)
        .map(|c| (c.rhs, c.lhs))
        .collect();

    // An unrelated rhs element may not collide with an lhs id of the same
    // kind: the shared-id encoding would silently preserve it.
    for p in rhs.places() {
        if !place_rename.contains_key(&p.id.0) && lhs.place(p.id).is_some() {
            return Err(invalid(
                &rule_node,
                &doc,
                format!("rhs place {} reuses an lhs id without a correspondence", p.id.0),
            ));
        }
    }
    for t in rhs.transitions() {
        if !transition_rename.contains_key(&t.id.0) && lhs.transition(t.id).is_some() {
            return Err(invalid(
                &rule_node,
                &doc,
                format!("rhs transition {} reuses an lhs id without a correspondence", t.id.0),
            ));
        }
    }

    let map_place =
        |p: PlaceId| PlaceId(place_rename.get(&p.0).copied().unwrap_or(p.0));
    let map_transition =
        |t: TransitionId| TransitionId(transition_rename.get(&t.0).copied().unwrap_or(t.0));
    let places: Vec<Place> = rhs
        .places()
        .map(|p| Place { id: map_place(p.id), label: p.label.clone(), capacity: p.capacity })
        .collect();
    let transitions: Vec<Transition> = rhs
        .transitions()
        .map(|t| Transition { id: map_transition(t.id), label: t.label.clone() })
        .collect();
    let pre = rhs
        .transitions()
        .map(|t| (map_transition(t.id), rhs.pre(t.id).map_places(map_place)))
        .collect();
    let post = rhs
        .transitions()
        .map(|t| (map_transition(t.id), rhs.post(t.id).map_places(map_place)))
        .collect();
    let marking = rhs.marking().map_places(map_place);
    let renamed_rhs =
        PetriNet::new(places, transitions, pre, post, marking).map_err(PnmlError::Net)?;

    Ok(Rule::new(name, lhs, renamed_rhs)?)
}

/// The interface must be a subnet of both sides through the
/// correspondence rows, which also have to cover it completely.
fn validate_interface(
    rule_node: &Node,
    doc: &Document,
    lhs: &PetriNet,
    interface: &PetriNet,
    rhs: &PetriNet,
    correspondences: &[Correspondence],
) -> Result<(), PnmlError> {
    let err = |message: String| invalid(rule_node, doc, message);

    let mut seen_k = BTreeSet::new();
    let mut seen_lhs = BTreeSet::new();
    let mut seen_rhs = BTreeSet::new();
    for c in correspondences {
        if !seen_k.insert((c.kind, c.k)) {
            return Err(err(format!("interface id {} has two correspondence rows", c.k)));
        }
        if !seen_lhs.insert((c.kind, c.lhs)) || !seen_rhs.insert((c.kind, c.rhs)) {
            return Err(err("correspondence rows must be injective per side".to_string()));
        }
    }
    let covered = interface
        .places()
        .map(|p| (ElementKind::Place, p.id.0))
        .chain(interface.transitions().map(|t| (ElementKind::Transition, t.id.0)))
        .all(|key| seen_k.contains(&key));
    if !covered {
        return Err(err("every interface element needs a correspondence row".to_string()));
    }

    let to_lhs_place: BTreeMap<u64, u64> = correspondences
        .iter()
        .filter(|c| c.kind == ElementKind::Place)
        .map(|c| (c.k, c.lhs))
        .collect();
    let to_rhs_place: BTreeMap<u64, u64> = correspondences
        .iter()
        .filter(|c| c.kind == ElementKind::Place)
        .map(|c| (c.k, c.rhs))
        .collect();

    for (side_name, side, to_place) in
        [("lhs", lhs, &to_lhs_place), ("rhs", rhs, &to_rhs_place)]
    {
        for c in correspondences {
            let side_id = if side_name == "lhs" { c.lhs } else { c.rhs };
            match c.kind {
                ElementKind::Place => {
                    let k_place = interface.place(PlaceId(c.k)).expect("kind checked");
                    let s_place = side.place(PlaceId(side_id)).expect("kind checked");
                    if k_place.label != s_place.label || k_place.capacity != s_place.capacity {
                        return Err(err(format!(
                            "interface place {} differs from {side_name} place {side_id}",
                            c.k
                        )));
                    }
                }
                ElementKind::Transition => {
                    let k_t = interface.transition(TransitionId(c.k)).expect("kind checked");
                    let s_t = side.transition(TransitionId(side_id)).expect("kind checked");
                    if k_t.label != s_t.label {
                        return Err(err(format!(
                            "interface transition {} differs from {side_name} transition {side_id}",
                            c.k
                        )));
                    }
                    let map_row = |row: &Marking| -> Result<Marking, PnmlError> {
                        let mut out = Marking::empty();
                        for (p, w) in row.iter() {
                            let mapped = to_place.get(&p.0).ok_or_else(|| {
                                err(format!(
                                    "interface transition {} touches place {} outside the interface",
                                    c.k, p.0
                                ))
                            })?;
                            out.insert(PlaceId(*mapped), w);
                        }
                        Ok(out)
                    };
                    let k_pre = map_row(interface.pre(TransitionId(c.k)))?;
                    let k_post = map_row(interface.post(TransitionId(c.k)))?;
                    if &k_pre != side.pre(TransitionId(side_id))
                        || &k_post != side.post(TransitionId(side_id))
                    {
                        return Err(err(format!(
                            "interface is not a subnet of {side_name}: transition {} arcs differ",
                            c.k
                        )));
                    }
                }
            }
        }
        let mapped_marking = {
            let mut ok = true;
            let mut out = Marking::empty();
            for (p, c) in interface.marking().iter() {
                match to_place.get(&p.0) {
                    Some(mapped) => out.insert(PlaceId(*mapped), c),
                    None => ok = false,
                }
            }
            if !ok {
                return Err(err("interface marking uses an unmapped place".to_string()));
            }
            out
        };
        if !mapped_marking.leq(side.marking()) {
            return Err(err(format!(
                "interface marking is not contained in the {side_name} marking"
            )));
        }
    }
    Ok(())
}

pub fn parse_rule_file(path: impl AsRef<Path>) -> Result<Rule, PnmlError> {
    let path = path.as_ref();
    let xml = std::fs::read_to_string(path).map_err(|source| PnmlError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_rule(&xml)
}
