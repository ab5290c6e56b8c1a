//! Emission of Maude-style module text for converted nets, rules and
//! verdicts. Terms are rendered in ascending id order so output is
//! byte-stable; the unbounded capacity is rendered as 2147483647.

use std::fmt::Write as _;

use crate::ltl::{Lasso, Verdict};
use crate::net::{Marking, PetriNet, Place};
use crate::rules::{IdPool, Rule};
use crate::state::{ActionLabel, Configuration};

fn place_term(place: &Place) -> String {
    format!("p(\"{}\" | {} | {})", place.label, place.id.0, place.capacity.rendering())
}

fn transition_term(label: &str, id: u64) -> String {
    format!("t(\"{label}\" | {id})")
}

fn places_multiset(net: &PetriNet, marking: &Marking, separator: &str) -> String {
    let mut parts = Vec::new();
    for (p, count) in marking.iter() {
        let place = net.place(p).expect("marking references known places");
        for _ in 0..count {
            parts.push(place_term(place));
        }
    }
    parts.join(separator)
}

/// The `net(places{..}, transitions{..}, pre{..}, post{..}, marking{..})`
/// term of a net, on a single line.
pub fn net_term(net: &PetriNet) -> String {
    let places = if net.place_count() == 0 {
        "places{emptyPlace}".to_string()
    } else {
        let inner: Vec<String> = net.places().map(place_term).collect();
        format!("places{{ {} }}", inner.join(" , "))
    };

    let transitions = if net.transition_count() == 0 {
        "transitions{emptyTransition}".to_string()
    } else {
        let inner: Vec<String> =
            net.transitions().map(|t| transition_term(&t.label, t.id.0)).collect();
        format!("transitions{{ {} }}", inner.join(" : "))
    };

    let mapping = |pre: bool| -> String {
        let keyword = if pre { "pre" } else { "post" };
        if net.transition_count() == 0 {
            return format!("{keyword}{{emptyMappingTuple}}");
        }
        let rows: Vec<String> = net
            .transitions()
            .map(|t| {
                let row = if pre { net.pre(t.id) } else { net.post(t.id) };
                let targets = if row.is_empty() {
                    "emptyPlace".to_string()
                } else {
                    places_multiset(net, row, " , ")
                };
                format!("({} --> {})", transition_term(&t.label, t.id.0), targets)
            })
            .collect();
        format!("{keyword}{{ {} }}", rows.join(" , "))
    };

    let marking = if net.marking().is_empty() {
        "marking{emptyMarking}".to_string()
    } else {
        format!("marking{{ {} }}", places_multiset(net, net.marking(), " ; "))
    };

    format!("net({places}, {transitions}, {}, {}, {marking})", mapping(true), mapping(false))
}

/// The `rule(l(net(..)) , r(net(..)))` term of a rule.
pub fn rule_term(rule: &Rule) -> String {
    format!("rule(l({}) , r({}))", net_term(rule.lhs()), net_term(rule.rhs()))
}

fn rules_term(rules: &[Rule]) -> String {
    if rules.is_empty() {
        "emptyRule".to_string()
    } else {
        rules.iter().map(rule_term).collect::<Vec<_>>().join(" | ")
    }
}

/// Identifier pools use the nested-parenthesis list syntax:
/// `26,(27,(28))`, `emptyIDSet` when empty.
fn pool_term(pool: &IdPool) -> String {
    let ids: Vec<u64> = pool.ids().collect();
    match ids.split_first() {
        None => "emptyIDSet".to_string(),
        Some((first, rest)) => {
            let mut out = first.to_string();
            for id in rest {
                out.push_str(&format!(",({id}"));
            }
            out.push_str(&")".repeat(rest.len()));
            out
        }
    }
}

/// One-line configuration term:
/// `net(..) rules maxID stepSize aidPlace{..} aidTransition{..}`.
pub fn configuration_term(config: &Configuration) -> String {
    format!(
        "{} {} {} {} aidPlace{{{}}} aidTransition{{{}}}",
        net_term(config.net()),
        rules_term(config.rules()),
        config.max_id(),
        config.step_size(),
        pool_term(config.place_pool()),
        pool_term(config.transition_pool()),
    )
}

/// The four emitted module texts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaudeModules {
    pub rpn: String,
    pub rules: String,
    pub prop: String,
    pub net: String,
}

/// Static sorts and operators shared by every conversion.
fn rpn_module() -> String {
    r#"*** Reconfigurable Petri nets: sorts and operators.

fmod RPN is
  protecting STRING .
  protecting INT .

  sorts Net Places Transitions Pre Post MappingTuple Markings .

  subsort Places < Markings .

  op emptyPlace : -> Places .
  op emptyTransition : -> Transitions .
  op emptyMappingTuple : -> MappingTuple .
  op emptyMarking : -> Markings .

  op _,_ : Places Places -> Places [ctor assoc comm id: emptyPlace] .
  op _+_ : Places Places -> Places [ctor assoc comm id: emptyPlace] .
  op _:_ : Transitions Transitions -> Transitions [ctor assoc comm id: emptyTransition] .
  op _,_ : MappingTuple MappingTuple -> MappingTuple [ctor assoc comm id: emptyMappingTuple] .
  op _;_ : Markings Markings -> Markings [ctor assoc comm id: emptyMarking] .

  *** READING: Pname | ID | Cap
  op p(_|_|_) : String Int Int -> Places .
  op t(_|_) : String Int -> Transitions .
  op (_-->_) : Transitions Places -> MappingTuple .

  op places{_} : Places -> Places .
  op transitions{_} : Transitions -> Transitions .
  op pre{_} : MappingTuple -> Pre .
  op post{_} : MappingTuple -> Post .
  op marking{_} : Markings -> Markings .

  *** Petrinet-tuple
  op net : Places Transitions Pre Post Markings -> Net .

  *** capacity test over the post-set of a transition
  op _ <=? _ : Markings Places -> Bool .
  op _ leeqth _ with _ : Places Places Int -> Bool .

  *** dangling-condition helpers
  op contains(_ | _) : Places Places -> Bool .
  op equalMarking(_ =?= _) : Places Places -> Bool .
  op emptyNeighbourForPlace(_, _, _) : Places Pre Post -> Bool .

  *** rule R = (l_net, r_net)
  sort Rule .
  sorts LeftHandSide RightHandSide .
  op emptyRule : -> Rule .
  op _|_ : Rule Rule -> Rule [ctor assoc comm id: emptyRule] .
  op l : Net -> LeftHandSide .
  op r : Net -> RightHandSide .
  op rule : LeftHandSide RightHandSide -> Rule .

  *** identifier pools
  sorts IDPoolPlace IDPoolTransition .
  op emptyIDSet : -> Int .
  op aidPlace{_} : Int -> IDPoolPlace .
  op aidTransition{_} : Int -> IDPoolTransition .
  op fill(_|_|_|_) : Int Int Int Int -> Int .
  op getAid(_|_|_) : Int Int Int -> Int .
  op removeFirstElement(_|_|_) : Int Int Int -> Int .
  op addOldID(_|_) : Int Int -> Int .
  op correctMaxID(_|_|_) : Int Int Int -> Int .

  *** READING: NET SET<RULE> MAXID STEP_SIZE PID TID
  sort Configuration .
  op ______ : Net Rule Int Int IDPoolPlace IDPoolTransition -> Configuration .
endfm

mod RPN-FIRE is
  protecting RPN .

  var P : Places .
  var T TRest : Transitions .
  var PreValue PostValue M : Markings .
  var MTupleRest1 MTupleRest2 : MappingTuple .
  var Rules : Rule .
  var I : Int .

  crl [fire] :
       net(P,
           transitions{T : TRest},
           pre{(T --> PreValue), MTupleRest1},
           post{(T --> PostValue), MTupleRest2},
           marking{PreValue ; M})
       Rules
       I
       =>
       net(P,
           transitions{T : TRest},
           pre{(T --> PreValue), MTupleRest1},
           post{(T --> PostValue), MTupleRest2},
           calc(((PreValue ; M) minus PreValue) plus PostValue))
       Rules
       I
       if calc(((PreValue ; M) minus PreValue) plus PostValue) <=? PostValue .
endm
"#
    .to_string()
}

/// LTL proposition declarations; rule applicability is evaluated for
/// every loaded rule by the checker.
fn prop_module() -> String {
    r#"*** LTL propositions over configurations.

mod PROP is
  protecting RPN .
  including SATISFACTION .

  subsort Configuration < State .

  op reachable : Markings -> Prop .
  op t-enabled : -> Prop .
  op enabled : -> Prop .

  var P : Places .
  var T : Transitions .
  var T1 : Transitions .
  var Pre : Pre .
  var Post : Post .
  var PreValue M MRest : Markings .
  var MappingTuple : MappingTuple .
  var Rules : Rule .
  var MaxID StepSize : Int .
  var aidP : IDPoolPlace .
  var aidT : IDPoolTransition .
  var C : Configuration .
  var Prop : Prop .

  eq net(P , T , Pre , Post ,
          marking{ M ; MRest } )
          Rules MaxID StepSize aidP aidT
      |= reachable(M) = true .

  eq net(P , T ,
          pre{ (T1 --> PreValue) , MappingTuple } ,
          Post ,
          marking{ PreValue ; MRest } )
          Rules MaxID StepSize aidP aidT
      |= t-enabled = true .

  eq net(P , T ,
          pre{ (T1 --> PreValue) , MappingTuple } ,
          Post ,
          marking{ PreValue ; MRest } )
          Rules MaxID StepSize aidP aidT
      |= enabled = true .

  *** enabled also covers the application of any loaded rule; the
  *** checker evaluates rule applicability with full gluing checks.

  eq C |= Prop = false [owise] .
endm
"#
    .to_string()
}

fn rules_module(config: &Configuration) -> String {
    let mut out = String::from("*** Transformation rules.\n\nmod RULES is\n  protecting RPN .\n\n");
    out.push_str("  op ruleSet : -> Rule .\n");
    let _ = writeln!(out, "  eq ruleSet =\n    {} .", rules_term(config.rules()));
    out.push_str("endm\n");
    out
}

fn net_module(config: &Configuration) -> String {
    let mut out = String::from(
        "*** Initial configuration.\n\nmod NET is\n  protecting RULES .\n  protecting PROP .\n\n",
    );
    out.push_str("  op initial : -> Configuration .\n");
    let _ = writeln!(
        out,
        "  eq initial =\n    {}\n    {}\n    {}\n    {}\n    aidPlace{{{}}}\n    aidTransition{{{}}} .",
        net_term(config.net()),
        rules_term(config.rules()),
        config.max_id(),
        config.step_size(),
        pool_term(config.place_pool()),
        pool_term(config.transition_pool()),
    );
    out.push_str("endm\n");
    out
}

/// Render the four module files for a configuration.
pub fn emit_modules(config: &Configuration) -> MaudeModules {
    MaudeModules {
        rpn: rpn_module(),
        rules: rules_module(config),
        prop: prop_module(),
        net: net_module(config),
    }
}

fn step_label(action: &Option<ActionLabel>) -> String {
    match action {
        Some(ActionLabel::Fire(_)) => "'fire".to_string(),
        Some(ActionLabel::Rule { name, .. }) => format!("'{name}"),
        None => "deadlock".to_string(),
    }
}

fn transition_list(steps: &[crate::ltl::Step]) -> String {
    if steps.is_empty() {
        return "nil".to_string();
    }
    steps
        .iter()
        .map(|step| format!("{{{},{}}}", configuration_term(&step.config), step_label(&step.action)))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Counterexample text in the `counterexample(prefix, cycle)` shape; a
/// holding verdict renders as `result Bool: true`.
pub fn render_verdict(verdict: &Verdict) -> String {
    match verdict {
        Verdict::Holds => "result Bool: true\n".to_string(),
        Verdict::Violated(lasso) => render_counterexample(lasso),
    }
}

pub fn render_counterexample(lasso: &Lasso) -> String {
    format!(
        "result ModelCheckResult: counterexample(\n{},\n{})\n",
        transition_list(&lasso.prefix),
        transition_list(&lasso.cycle)
    )
}
