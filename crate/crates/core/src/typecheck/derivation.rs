//! Derivation trees over the declarative typing and subtyping rules.

use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use super::env::{StoreTyping, TypeEnv};
use crate::parser::{pretty_defs, pretty_term, pretty_type};
use crate::syntax::{Def, Term, TypeExpr};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum Rule {
    // Typing.
    Var,
    Loc,
    #[serde(rename = "All-I")]
    AllI,
    #[serde(rename = "All-E")]
    AllE,
    #[serde(rename = "{}-I")]
    ObjI,
    #[serde(rename = "{}-E")]
    ObjE,
    Let,
    #[serde(rename = "Rec-I")]
    RecI,
    #[serde(rename = "Rec-E")]
    RecE,
    #[serde(rename = "&-I")]
    AndI,
    Sub,
    #[serde(rename = "Fld-I")]
    FldI,
    #[serde(rename = "Typ-I")]
    TypI,
    #[serde(rename = "AndDef-I")]
    AndDefI,
    #[serde(rename = "Ref-I")]
    RefI,
    #[serde(rename = "Ref-E")]
    RefE,
    Asgn,
    // Subtyping.
    Top,
    Bot,
    Refl,
    Trans,
    #[serde(rename = "And1-<:")]
    And1,
    #[serde(rename = "And2-<:")]
    And2,
    #[serde(rename = "<:-And")]
    SubAnd,
    #[serde(rename = "<:-Sel")]
    SubSel,
    #[serde(rename = "Sel-<:")]
    SelSub,
    #[serde(rename = "Fld-<:-Fld")]
    FldFld,
    #[serde(rename = "Typ-<:-Typ")]
    TypTyp,
    #[serde(rename = "All-<:-All")]
    AllAll,
    #[serde(rename = "Ref-Sub")]
    RefSub,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::Var => "Var",
            Rule::Loc => "Loc",
            Rule::AllI => "All-I",
            Rule::AllE => "All-E",
            Rule::ObjI => "{}-I",
            Rule::ObjE => "{}-E",
            Rule::Let => "Let",
            Rule::RecI => "Rec-I",
            Rule::RecE => "Rec-E",
            Rule::AndI => "&-I",
            Rule::Sub => "Sub",
            Rule::FldI => "Fld-I",
            Rule::TypI => "Typ-I",
            Rule::AndDefI => "AndDef-I",
            Rule::RefI => "Ref-I",
            Rule::RefE => "Ref-E",
            Rule::Asgn => "Asgn",
            Rule::Top => "Top",
            Rule::Bot => "Bot",
            Rule::Refl => "Refl",
            Rule::Trans => "Trans",
            Rule::And1 => "And1-<:",
            Rule::And2 => "And2-<:",
            Rule::SubAnd => "<:-And",
            Rule::SubSel => "<:-Sel",
            Rule::SelSub => "Sel-<:",
            Rule::FldFld => "Fld-<:-Fld",
            Rule::TypTyp => "Typ-<:-Typ",
            Rule::AllAll => "All-<:-All",
            Rule::RefSub => "Ref-Sub",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Judgment {
    /// `env, sigma |- term : ty`
    Typed {
        env: TypeEnv,
        sigma: StoreTyping,
        term: Term,
        ty: TypeExpr,
    },
    /// `env, sigma |- defs : ty`
    Defs {
        env: TypeEnv,
        sigma: StoreTyping,
        defs: Def,
        ty: TypeExpr,
    },
    /// `env, sigma |- lower <: upper`
    Sub {
        env: TypeEnv,
        sigma: StoreTyping,
        lower: TypeExpr,
        upper: TypeExpr,
    },
}

impl Judgment {
    pub fn env(&self) -> &TypeEnv {
        match self {
            Judgment::Typed { env, .. }
            | Judgment::Defs { env, .. }
            | Judgment::Sub { env, .. } => env,
        }
    }

    pub fn sigma(&self) -> &StoreTyping {
        match self {
            Judgment::Typed { sigma, .. }
            | Judgment::Defs { sigma, .. }
            | Judgment::Sub { sigma, .. } => sigma,
        }
    }

    /// The judgment without its contexts.
    pub fn body(&self) -> String {
        match self {
            Judgment::Typed { term, ty, .. } => {
                format!("{} : {}", pretty_term(term), pretty_type(ty))
            }
            Judgment::Defs { defs, ty, .. } => {
                format!("{} : {}", pretty_defs(defs), pretty_type(ty))
            }
            Judgment::Sub { lower, upper, .. } => {
                format!("{} <: {}", pretty_type(lower), pretty_type(upper))
            }
        }
    }
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.env())?;
        if !self.sigma().is_empty() {
            write!(f, "; {}", self.sigma())?;
        }
        write!(f, " |- {}", self.body())
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Derivation {
    pub rule: Rule,
    pub conclusion: Judgment,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub fn new(rule: Rule, conclusion: Judgment, premises: Vec<Derivation>) -> Derivation {
        Derivation {
            rule,
            conclusion,
            premises,
        }
    }

    /// Number of rule instances in the tree.
    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self
            .premises
            .iter()
            .map(Derivation::depth)
            .max()
            .unwrap_or(0)
    }

    /// Every node, parents before children.
    pub fn nodes(&self) -> Vec<&Derivation> {
        let mut out = vec![self];
        let mut i = 0;
        while i < out.len() {
            let n = out[i];
            out.extend(n.premises.iter());
            i += 1;
        }
        out
    }

    /// The type assigned by a typing judgment, or `None` for subtyping.
    pub fn ty(&self) -> Option<&TypeExpr> {
        match &self.conclusion {
            Judgment::Typed { ty, .. } | Judgment::Defs { ty, .. } => Some(ty),
            Judgment::Sub { .. } => None,
        }
    }

    /// Indented text rendering. Contexts are printed at the root and
    /// wherever a rule extends them.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.render(&mut out, 0, None);
        out
    }

    fn render(&self, out: &mut String, depth: usize, parent: Option<&TypeEnv>) {
        let env = self.conclusion.env();
        let _ = write!(out, "{:indent$}[{}] ", "", self.rule, indent = depth * 2);
        match parent {
            Some(p) if p == env => {}
            Some(p) if p.len() < env.len() => {
                let added: Vec<String> = env.bindings()[p.len()..]
                    .iter()
                    .map(|(x, t)| format!("{x}: {}", pretty_type(t)))
                    .collect();
                let _ = write!(out, "..., {} |- ", added.join(", "));
            }
            _ => {
                let _ = write!(out, "{env}");
                if !self.conclusion.sigma().is_empty() {
                    let _ = write!(out, "; {}", self.conclusion.sigma());
                }
                out.push_str(" |- ");
            }
        }
        out.push_str(&self.conclusion.body());
        out.push('\n');
        for p in &self.premises {
            p.render(out, depth + 1, Some(env));
        }
    }
}
