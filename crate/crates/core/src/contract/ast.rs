//! Syntax tree for the contract dialect.
//!
//! Every node carries a [`Span`]. Spans are positional metadata only: they
//! compare equal regardless of position, so the derived `PartialEq` on the
//! tree is structural equality modulo layout.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::types::{Address, Bytes32};

/// A 1-based source position.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub column: u32,
}

impl Span {
    pub fn new(line: u32, column: u32) -> Self {
        Span { line, column }
    }
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementaryType {
    Uint,
    Bool,
    Address,
    String,
    Bytes32,
}

impl ElementaryType {
    pub fn keyword(self) -> &'static str {
        match self {
            ElementaryType::Uint => "uint",
            ElementaryType::Bool => "bool",
            ElementaryType::Address => "address",
            ElementaryType::String => "string",
            ElementaryType::Bytes32 => "bytes32",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "uint" | "uint256" => ElementaryType::Uint,
            "bool" => ElementaryType::Bool,
            "address" => ElementaryType::Address,
            "string" => ElementaryType::String,
            "bytes32" => ElementaryType::Bytes32,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TypeName {
    Elementary(ElementaryType),
    /// Dynamic array of an elementary type.
    Array(ElementaryType),
    Mapping {
        key: ElementaryType,
        value: Box<TypeName>,
    },
}

impl TypeName {
    pub fn uint() -> Self {
        TypeName::Elementary(ElementaryType::Uint)
    }
    pub fn bool() -> Self {
        TypeName::Elementary(ElementaryType::Bool)
    }
    pub fn address() -> Self {
        TypeName::Elementary(ElementaryType::Address)
    }
    pub fn string() -> Self {
        TypeName::Elementary(ElementaryType::String)
    }
    pub fn bytes32() -> Self {
        TypeName::Elementary(ElementaryType::Bytes32)
    }
}

impl fmt::Display for TypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeName::Elementary(e) => f.write_str(e.keyword()),
            TypeName::Array(e) => write!(f, "{}[]", e.keyword()),
            TypeName::Mapping { key, value } => write!(f, "mapping({} => {})", key.keyword(), value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceUnit {
    pub contracts: Vec<ContractDef>,
}

impl SourceUnit {
    pub fn contract(&self, name: &str) -> Option<&ContractDef> {
        self.contracts.iter().find(|c| c.name == name)
    }

    pub fn contract_mut(&mut self, name: &str) -> Option<&mut ContractDef> {
        self.contracts.iter_mut().find(|c| c.name == name)
    }

    /// Every identifier that occurs anywhere in the unit: declarations,
    /// references, member names and callee names.
    pub fn identifiers(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for c in &self.contracts {
            c.collect_identifiers(&mut out);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractDef {
    pub name: String,
    pub bases: Vec<String>,
    pub state_vars: Vec<VarDecl>,
    pub constructor: Option<ConstructorDef>,
    pub functions: Vec<FunctionDef>,
    pub modifiers: Vec<ModifierDef>,
    pub span: Span,
}

impl ContractDef {
    pub fn new(name: impl Into<String>) -> Self {
        ContractDef {
            name: name.into(),
            bases: Vec::new(),
            state_vars: Vec::new(),
            constructor: None,
            functions: Vec::new(),
            modifiers: Vec::new(),
            span: Span::default(),
        }
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_mut(&mut self, name: &str) -> Option<&mut FunctionDef> {
        self.functions.iter_mut().find(|f| f.name == name)
    }

    pub fn modifier(&self, name: &str) -> Option<&ModifierDef> {
        self.modifiers.iter().find(|m| m.name == name)
    }

    pub fn state_var(&self, name: &str) -> Option<&VarDecl> {
        self.state_vars.iter().find(|v| v.name == name)
    }

    /// Names of all members, tagged by kind, in declaration order.
    pub fn member_names(&self) -> Vec<(MemberKind, &str)> {
        let mut out = Vec::new();
        out.extend(self.state_vars.iter().map(|v| (MemberKind::StateVar, v.name.as_str())));
        out.extend(self.functions.iter().map(|f| (MemberKind::Function, f.name.as_str())));
        out.extend(self.modifiers.iter().map(|m| (MemberKind::Modifier, m.name.as_str())));
        out
    }

    fn collect_identifiers(&self, out: &mut BTreeSet<String>) {
        out.insert(self.name.clone());
        out.extend(self.bases.iter().cloned());
        for v in &self.state_vars {
            v.collect_identifiers(out);
        }
        if let Some(ctor) = &self.constructor {
            collect_params(&ctor.params, out);
            collect_invocations(&ctor.modifiers, out);
            collect_block(&ctor.body, out);
        }
        for f in &self.functions {
            out.insert(f.name.clone());
            collect_params(&f.params, out);
            collect_invocations(&f.modifiers, out);
            out.extend(f.returns.iter().filter_map(|r| r.name.clone()));
            collect_block(&f.body, out);
        }
        for m in &self.modifiers {
            out.insert(m.name.clone());
            collect_params(&m.params, out);
            collect_block(&m.body, out);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MemberKind {
    StateVar,
    Function,
    Modifier,
}

impl fmt::Display for MemberKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemberKind::StateVar => "state variable",
            MemberKind::Function => "function",
            MemberKind::Modifier => "modifier",
        })
    }
}

/// State variable or local variable declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub ty: TypeName,
    pub name: String,
    pub init: Option<Expr>,
    pub span: Span,
}

impl VarDecl {
    fn collect_identifiers(&self, out: &mut BTreeSet<String>) {
        out.insert(self.name.clone());
        if let Some(init) = &self.init {
            init.collect_identifiers(out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub ty: TypeName,
    pub name: String,
    pub span: Span,
}

/// A declared return value; the name is optional.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReturnParam {
    pub ty: TypeName,
    pub name: Option<String>,
    pub span: Span,
}

/// A modifier (or base constructor) invocation in a function header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModifierInvocation {
    pub name: String,
    pub args: Vec<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Param>,
    pub modifiers: Vec<ModifierInvocation>,
    pub is_constant: bool,
    pub is_internal: bool,
    pub returns: Vec<ReturnParam>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

impl FunctionDef {
    pub fn has_modifier(&self, name: &str) -> bool {
        self.modifiers.iter().any(|m| m.name == name)
    }
}

/// Constructor, whether written old-style (a function named after the
/// contract) or with the `constructor` keyword.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructorDef {
    pub params: Vec<Param>,
    pub modifiers: Vec<ModifierInvocation>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModifierDef {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    VarDecl(VarDecl),
    Assign {
        target: Expr,
        value: Expr,
    },
    /// `x++`
    Increment(Expr),
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Option<Vec<Stmt>>,
    },
    /// `for (uint counter = start; counter < bound; counter++) body`
    For {
        counter: String,
        start: Expr,
        bound: Expr,
        body: Vec<Stmt>,
    },
    Return(Vec<Expr>),
    Expr(Expr),
    /// The modifier placeholder `_;`.
    Placeholder,
    Break,
}

impl Stmt {
    pub fn new(kind: StmtKind) -> Self {
        Stmt {
            kind,
            span: Span::default(),
        }
    }

    /// Number of placeholder statements at any depth.
    pub fn placeholder_count(&self) -> usize {
        match &self.kind {
            StmtKind::Placeholder => 1,
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => count_placeholders(then_branch) + else_branch.as_deref().map(count_placeholders).unwrap_or(0),
            StmtKind::For { body, .. } => count_placeholders(body),
            _ => 0,
        }
    }
}

pub fn count_placeholders(body: &[Stmt]) -> usize {
    body.iter().map(Stmt::placeholder_count).sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    Ident(String),
    Literal(Literal),
    Member {
        base: Box<Expr>,
        member: String,
    },
    Index {
        base: Box<Expr>,
        index: Box<Expr>,
    },
    /// `array.push(value)`
    Push {
        array: Box<Expr>,
        value: Box<Expr>,
    },
    /// Call of a contract function, a base constructor, or the `sha256` builtin.
    Call {
        callee: String,
        args: Vec<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Uint(u128),
    Bool(bool),
    Str(String),
    Address(Address),
    Bytes32(Bytes32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::And => "&&",
        }
    }
}

impl Expr {
    pub fn new(kind: ExprKind) -> Self {
        Expr {
            kind,
            span: Span::default(),
        }
    }

    fn collect_identifiers(&self, out: &mut BTreeSet<String>) {
        match &self.kind {
            ExprKind::Ident(name) => {
                out.insert(name.clone());
            }
            ExprKind::Literal(_) => {}
            ExprKind::Member { base, member } => {
                base.collect_identifiers(out);
                out.insert(member.clone());
            }
            ExprKind::Index { base, index } => {
                base.collect_identifiers(out);
                index.collect_identifiers(out);
            }
            ExprKind::Push { array, value } => {
                array.collect_identifiers(out);
                value.collect_identifiers(out);
            }
            ExprKind::Call { callee, args } => {
                out.insert(callee.clone());
                args.iter().for_each(|a| a.collect_identifiers(out));
            }
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.collect_identifiers(out);
                rhs.collect_identifiers(out);
            }
        }
    }
}

fn collect_params(params: &[Param], out: &mut BTreeSet<String>) {
    out.extend(params.iter().map(|p| p.name.clone()));
}

fn collect_invocations(invs: &[ModifierInvocation], out: &mut BTreeSet<String>) {
    for inv in invs {
        out.insert(inv.name.clone());
        inv.args.iter().for_each(|a| a.collect_identifiers(out));
    }
}

fn collect_block(body: &[Stmt], out: &mut BTreeSet<String>) {
    for stmt in body {
        match &stmt.kind {
            StmtKind::VarDecl(v) => v.collect_identifiers(out),
            StmtKind::Assign { target, value } => {
                target.collect_identifiers(out);
                value.collect_identifiers(out);
            }
            StmtKind::Increment(e) | StmtKind::Expr(e) => e.collect_identifiers(out),
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                cond.collect_identifiers(out);
                collect_block(then_branch, out);
                if let Some(e) = else_branch {
                    collect_block(e, out);
                }
            }
            StmtKind::For {
                counter,
                start,
                bound,
                body,
            } => {
                out.insert(counter.clone());
                start.collect_identifiers(out);
                bound.collect_identifiers(out);
                collect_block(body, out);
            }
            StmtKind::Return(values) => values.iter().for_each(|v| v.collect_identifiers(out)),
            StmtKind::Placeholder | StmtKind::Break => {}
        }
    }
}
