//! Applies the smart-contract design patterns to user contracts.
//!
//! Weaving inserts a base contract in front of the target, makes the target
//! inherit from it and attaches the pattern's guard modifier to the chosen
//! function. Everything else in the target is left untouched.

pub(crate) mod build;
mod templates;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contract::{function_signature, ContractDef, SourceUnit, TypeName};
use crate::types::{Address, Bytes32};
pub use templates::{DYNAMIC_BINDING, EMBEDDED_PERMISSION, MULTIPLE_AUTHORITIES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pattern {
    MultipleAuthorities,
    DynamicBinding,
    EmbeddedPermission,
}

impl Pattern {
    pub fn base_contract(self) -> &'static str {
        match self {
            Pattern::MultipleAuthorities => MULTIPLE_AUTHORITIES,
            Pattern::DynamicBinding => DYNAMIC_BINDING,
            Pattern::EmbeddedPermission => EMBEDDED_PERMISSION,
        }
    }

    pub fn modifier(self) -> &'static str {
        match self {
            Pattern::MultipleAuthorities => "isEnoughAgreement",
            Pattern::DynamicBinding => "verify",
            Pattern::EmbeddedPermission => "permission",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::MultipleAuthorities => "multiple-authorities",
            Pattern::DynamicBinding => "dynamic-binding",
            Pattern::EmbeddedPermission => "embedded-permission",
        })
    }
}

impl FromStr for Pattern {
    type Err = WeaveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multiple-authorities" => Ok(Pattern::MultipleAuthorities),
            "dynamic-binding" => Ok(Pattern::DynamicBinding),
            "embedded-permission" => Ok(Pattern::EmbeddedPermission),
            other => Err(WeaveError::UnknownPattern(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "kebab-case")]
pub enum PatternParams {
    MultipleAuthorities { authorities: Vec<Address>, threshold: u64 },
    DynamicBinding { secret_hash: Bytes32 },
    EmbeddedPermission { authorized: Vec<Address> },
}

impl PatternParams {
    pub fn pattern(&self) -> Pattern {
        match self {
            PatternParams::MultipleAuthorities { .. } => Pattern::MultipleAuthorities,
            PatternParams::DynamicBinding { .. } => Pattern::DynamicBinding,
            PatternParams::EmbeddedPermission { .. } => Pattern::EmbeddedPermission,
        }
    }
}

/// A weave request; as JSON, `{"pattern": ..., "contract": ..., "function": ..., <params>}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeaveRequest {
    pub contract: String,
    pub function: String,
    #[serde(flatten)]
    pub params: PatternParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeaveReport {
    pub pattern: Pattern,
    pub base_contract: String,
    pub injected: Vec<String>,
    pub modified: Vec<String>,
    pub warnings: Vec<String>,
    /// For dynamic binding: the hash to bind at runtime via `initial`.
    pub secret_hash: Option<Bytes32>,
}

#[derive(Debug, Clone)]
pub struct WeaveResult {
    pub unit: SourceUnit,
    pub report: WeaveReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeaveError {
    #[error("unknown pattern `{0}` (expected multiple-authorities, dynamic-binding or embedded-permission)")]
    UnknownPattern(String),
    #[error("contract `{0}` not found")]
    UnknownContract(String),
    #[error("function `{function}` not found in contract `{contract}`")]
    UnknownFunction { contract: String, function: String },
    #[error("threshold {threshold} must be between 1 and the number of authorities ({authorities})")]
    Threshold { threshold: u64, authorities: usize },
    #[error("the authority list is empty")]
    EmptyAuthorities,
    #[error("address {0} appears more than once")]
    DuplicateAddress(Address),
    #[error("function `{function}` already carries modifier `{modifier}`")]
    AlreadyWoven { function: String, modifier: String },
    #[error("a contract named `{0}` already exists in the source unit")]
    BaseExists(String),
    #[error("`{name}` in `{contract}` collides with a member of the `{base}` template")]
    NameCollision {
        name: String,
        contract: String,
        base: String,
    },
    #[error("function `{0}` already has a parameter named `key`")]
    KeyCollision(String),
    #[error("contract `{0}` already defines a constructor")]
    ConstructorExists(String),
    #[error("contract `{contract}` inherits from `{base}`, which is not in the source unit")]
    UnresolvedBase { contract: String, base: String },
}

/// Applies the requested pattern to a copy of `unit`.
pub fn weave(unit: &SourceUnit, req: &WeaveRequest) -> Result<WeaveResult, WeaveError> {
    let pattern = req.params.pattern();
    let target = unit
        .contract(&req.contract)
        .ok_or_else(|| WeaveError::UnknownContract(req.contract.clone()))?;
    let function = target
        .function(&req.function)
        .ok_or_else(|| WeaveError::UnknownFunction {
            contract: req.contract.clone(),
            function: req.function.clone(),
        })?;
    if function.has_modifier(pattern.modifier()) {
        return Err(WeaveError::AlreadyWoven {
            function: req.function.clone(),
            modifier: pattern.modifier().to_string(),
        });
    }

    let mut warnings = Vec::new();
    let mut secret_hash = None;
    let mut base = match &req.params {
        PatternParams::MultipleAuthorities { authorities, threshold } => {
            check_addresses(authorities)?;
            if *threshold < 1 || *threshold as usize > authorities.len() {
                return Err(WeaveError::Threshold {
                    threshold: *threshold,
                    authorities: authorities.len(),
                });
            }
            templates::multiple_authorities(authorities, *threshold as u128)
        }
        PatternParams::DynamicBinding { secret_hash: hash } => {
            if function.params.iter().any(|p| p.name == "key") {
                return Err(WeaveError::KeyCollision(req.function.clone()));
            }
            if hash.is_zero() {
                warnings.push("secret hash is all zeros".to_string());
            }
            secret_hash = Some(*hash);
            templates::dynamic_binding()
        }
        PatternParams::EmbeddedPermission { authorized } => {
            check_addresses(authorized)?;
            if target.constructor.is_some() {
                return Err(WeaveError::ConstructorExists(req.contract.clone()));
            }
            if authorized.iter().any(Address::is_zero) {
                warnings.push("authorized list contains the zero address, which no caller can use".to_string());
            }
            templates::embedded_permission()
        }
    };

    if unit.contract(&base.name).is_some() {
        return Err(WeaveError::BaseExists(base.name));
    }
    check_collisions(unit, target, &base)?;

    let mut out = unit.clone();
    let pos = out
        .contracts
        .iter()
        .position(|c| c.name == req.contract)
        .expect("target exists");
    let target = &mut out.contracts[pos];
    // An existing base moves up one level: the target inherits the pattern
    // base, which in turn inherits what the target did.
    base.bases = std::mem::replace(&mut target.bases, vec![base.name.clone()]);

    let mut injected = vec![format!("contract {}", base.name)];
    injected.extend(base.member_names().iter().map(|(k, n)| format!("{k} {n}")));
    if base.constructor.is_some() {
        injected.push(format!("constructor {}", base.name));
    }

    let function = target.function_mut(&req.function).expect("function exists");
    match &req.params {
        PatternParams::DynamicBinding { .. } => {
            function.params.push(build::param(TypeName::string(), "key"));
            function
                .modifiers
                .push(build::invocation("verify", vec![build::ident("key")]));
        }
        _ => function
            .modifiers
            .push(build::invocation(pattern.modifier(), Vec::new())),
    }
    let mut modified = vec![function_signature(function)];
    if let PatternParams::EmbeddedPermission { authorized } = &req.params {
        target.constructor = Some(templates::permission_constructor(authorized));
        modified.push(format!("function {}()", target.name));
    }

    out.contracts.insert(pos, base.clone());
    Ok(WeaveResult {
        unit: out,
        report: WeaveReport {
            pattern,
            base_contract: base.name,
            injected,
            modified,
            warnings,
            secret_hash,
        },
    })
}

pub fn weave_multiple_authorities(
    unit: &SourceUnit,
    contract: &str,
    function: &str,
    authorities: Vec<Address>,
    threshold: u64,
) -> Result<WeaveResult, WeaveError> {
    weave(
        unit,
        &WeaveRequest {
            contract: contract.to_string(),
            function: function.to_string(),
            params: PatternParams::MultipleAuthorities { authorities, threshold },
        },
    )
}

pub fn weave_dynamic_binding(
    unit: &SourceUnit,
    contract: &str,
    function: &str,
    secret_hash: Bytes32,
) -> Result<WeaveResult, WeaveError> {
    weave(
        unit,
        &WeaveRequest {
            contract: contract.to_string(),
            function: function.to_string(),
            params: PatternParams::DynamicBinding { secret_hash },
        },
    )
}

pub fn weave_embedded_permission(
    unit: &SourceUnit,
    contract: &str,
    function: &str,
    authorized: Vec<Address>,
) -> Result<WeaveResult, WeaveError> {
    weave(
        unit,
        &WeaveRequest {
            contract: contract.to_string(),
            function: function.to_string(),
            params: PatternParams::EmbeddedPermission { authorized },
        },
    )
}

fn check_addresses(addresses: &[Address]) -> Result<(), WeaveError> {
    if addresses.is_empty() {
        return Err(WeaveError::EmptyAuthorities);
    }
    let mut seen = BTreeSet::new();
    for a in addresses {
        if !seen.insert(a) {
            return Err(WeaveError::DuplicateAddress(*a));
        }
    }
    Ok(())
}

/// Rejects targets whose own or inherited members reuse a template name,
/// since shadowing would silently change the pattern's behaviour.
fn check_collisions(unit: &SourceUnit, target: &ContractDef, base: &ContractDef) -> Result<(), WeaveError> {
    let reserved: BTreeSet<&str> = base.member_names().into_iter().map(|(_, n)| n).collect();
    let mut cur = Some(target);
    let mut visited = BTreeSet::new();
    while let Some(c) = cur {
        if !visited.insert(c.name.as_str()) {
            break;
        }
        if let Some((_, name)) = c.member_names().into_iter().find(|(_, n)| reserved.contains(n)) {
            return Err(WeaveError::NameCollision {
                name: name.to_string(),
                contract: c.name.clone(),
                base: base.name.clone(),
            });
        }
        cur = match c.bases.first() {
            Some(b) => Some(unit.contract(b).ok_or_else(|| WeaveError::UnresolvedBase {
                contract: c.name.clone(),
                base: b.clone(),
            })?),
            None => None,
        };
    }
    Ok(())
}

#[cfg(test)]
mod tests;
