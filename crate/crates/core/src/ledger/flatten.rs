//! Single-chain inheritance resolution.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::contract::{ConstructorDef, ContractDef, MemberKind, SourceUnit};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FlattenError {
    #[error("contract `{0}` not found in source unit")]
    UnknownContract(String),
    #[error("contract `{contract}` inherits from unresolved base `{base}`")]
    UnresolvedBase { contract: String, base: String },
    #[error("unsupported construct: contract `{0}` has more than one base contract")]
    MultipleInheritance(String),
    #[error("inheritance cycle through `{0}`")]
    Cycle(String),
    #[error("`{name}` is declared as a {base_kind} in `{base}` and as a {derived_kind} in `{derived}`")]
    MemberConflict {
        name: String,
        base: String,
        base_kind: MemberKind,
        derived: String,
        derived_kind: MemberKind,
    },
    #[error("`{function}` in `{contract}` applies unknown modifier `{modifier}`")]
    UnknownModifier {
        contract: String,
        function: String,
        modifier: String,
    },
}

/// A contract with its inheritance chain merged into one member set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatContract {
    /// Merged members. `bases` is empty; `constructor` is the most derived one.
    pub def: ContractDef,
    /// Contract names from the root base to the contract itself.
    pub linearization: Vec<String>,
    /// Declared constructors, root base first, tagged with their contract.
    pub constructors: Vec<(String, ConstructorDef)>,
}

impl FlatContract {
    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn is_base(&self, name: &str) -> bool {
        self.linearization.len() > 1
            && self.linearization[..self.linearization.len() - 1]
                .iter()
                .any(|n| n == name)
    }

    pub fn constructor_of(&self, contract: &str) -> Option<&ConstructorDef> {
        self.constructors.iter().find(|(n, _)| n == contract).map(|(_, c)| c)
    }
}

pub fn flatten(unit: &SourceUnit, name: &str) -> Result<FlatContract, FlattenError> {
    let mut chain: Vec<&ContractDef> = Vec::new();
    let mut cur = unit
        .contract(name)
        .ok_or_else(|| FlattenError::UnknownContract(name.to_string()))?;
    loop {
        if chain.iter().any(|c| c.name == cur.name) {
            return Err(FlattenError::Cycle(cur.name.clone()));
        }
        chain.push(cur);
        match cur.bases.as_slice() {
            [] => break,
            [base] => {
                cur = unit.contract(base).ok_or_else(|| FlattenError::UnresolvedBase {
                    contract: cur.name.clone(),
                    base: base.clone(),
                })?;
            }
            _ => return Err(FlattenError::MultipleInheritance(cur.name.clone())),
        }
    }
    chain.reverse();

    let mut merged = ContractDef::new(name);
    merged.span = chain.last().expect("chain contains the contract").span;
    let mut owner: BTreeMap<String, (String, MemberKind)> = BTreeMap::new();
    let mut constructors = Vec::new();

    for c in &chain {
        for (kind, member) in c.member_names() {
            if let Some((base, base_kind)) = owner.get(member) {
                if *base_kind != kind {
                    return Err(FlattenError::MemberConflict {
                        name: member.to_string(),
                        base: base.clone(),
                        base_kind: *base_kind,
                        derived: c.name.clone(),
                        derived_kind: kind,
                    });
                }
            }
            owner.insert(member.to_string(), (c.name.clone(), kind));
        }
        for v in &c.state_vars {
            match merged.state_vars.iter_mut().find(|x| x.name == v.name) {
                Some(slot) => *slot = v.clone(),
                None => merged.state_vars.push(v.clone()),
            }
        }
        for f in &c.functions {
            match merged.functions.iter_mut().find(|x| x.name == f.name) {
                Some(slot) => *slot = f.clone(),
                None => merged.functions.push(f.clone()),
            }
        }
        for m in &c.modifiers {
            match merged.modifiers.iter_mut().find(|x| x.name == m.name) {
                Some(slot) => *slot = m.clone(),
                None => merged.modifiers.push(m.clone()),
            }
        }
        if let Some(ctor) = &c.constructor {
            constructors.push((c.name.clone(), ctor.clone()));
        }
    }
    merged.constructor = chain.last().and_then(|c| c.constructor.clone());
    let linearization: Vec<String> = chain.iter().map(|c| c.name.clone()).collect();

    let base_names = &linearization[..linearization.len() - 1];
    let check = |function: &str, invs: &[crate::contract::ModifierInvocation]| {
        for inv in invs {
            let known = merged.modifier(&inv.name).is_some() || base_names.contains(&inv.name);
            if !known {
                return Err(FlattenError::UnknownModifier {
                    contract: name.to_string(),
                    function: function.to_string(),
                    modifier: inv.name.clone(),
                });
            }
        }
        Ok(())
    };
    for f in &merged.functions {
        check(&f.name, &f.modifiers)?;
    }
    for (owner, ctor) in &constructors {
        check(owner, &ctor.modifiers)?;
    }

    Ok(FlatContract {
        def: merged,
        linearization,
        constructors,
    })
}
