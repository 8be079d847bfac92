//! Tree-walking interpreter over flattened contracts.
//!
//! Modifiers wrap the function body: executing a placeholder runs the next
//! modifier in the list, or the body itself after the last one. When a
//! modifier finishes without reaching its placeholder the body never runs
//! and the caller reports the call as skipped.

use std::collections::{BTreeMap, BTreeSet};

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::flatten::FlatContract;
use super::value::Value;
use super::Storage;
use crate::contract::{
    BinaryOp, ConstructorDef, ElementaryType, Expr, ExprKind, FunctionDef, Literal, ModifierInvocation, Param,
    ReturnParam, Stmt, StmtKind, TypeName,
};
use crate::types::{Address, Bytes32};

/// Maximum body executions of a single loop.
pub const LOOP_ITERATION_CAP: usize = 10_000;
const CALL_DEPTH_CAP: usize = 64;

/// A runtime failure. The enclosing transaction is rejected and its state
/// changes discarded.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Fault {
    #[error("loop exceeded {LOOP_ITERATION_CAP} iterations")]
    IterationCap,
    #[error("call depth exceeded {CALL_DEPTH_CAP}")]
    CallDepth,
    #[error("index {index} out of bounds for array of length {len}")]
    OutOfBounds { index: u128, len: usize },
    #[error("integer overflow")]
    Overflow,
    #[error("type mismatch: {0}")]
    Type(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("unknown modifier `{0}`")]
    UnknownModifier(String),
    #[error("`{name}` expects {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("variable `{0}` declared twice in the same scope")]
    Redeclared(String),
    #[error("placeholder executed outside a modifier")]
    StrayPlaceholder,
    #[error("expression is not assignable")]
    NotAssignable,
    #[error("`{0}` yields no value")]
    NoValue(String),
    #[error("constructor of `{0}` invoked outside construction or more than once")]
    BaseConstructor(String),
    #[error("base constructor of `{0}` requires arguments but is never invoked")]
    MissingBaseArguments(String),
}

enum Flow {
    Next,
    Return(Vec<Value>),
    Break,
}

#[derive(Default)]
struct Frame {
    scopes: Vec<BTreeMap<String, Value>>,
}

impl Frame {
    fn bind(owner: &str, params: &[Param], args: Vec<Value>) -> Result<Frame, Fault> {
        if params.len() != args.len() {
            return Err(Fault::Arity {
                name: owner.to_string(),
                expected: params.len(),
                got: args.len(),
            });
        }
        let mut scope = BTreeMap::new();
        for (p, v) in params.iter().zip(args) {
            if !v.conforms_to(&p.ty) {
                return Err(Fault::Type(format!(
                    "parameter `{}` of `{owner}` is {}, got {}",
                    p.name,
                    p.ty,
                    v.type_name()
                )));
            }
            scope.insert(p.name.clone(), v);
        }
        Ok(Frame { scopes: vec![scope] })
    }

    fn declare(&mut self, name: &str, value: Value) -> Result<(), Fault> {
        let scope = self.scopes.last_mut().expect("frame has a scope");
        if scope.contains_key(name) {
            return Err(Fault::Redeclared(name.to_string()));
        }
        scope.insert(name.to_string(), value);
        Ok(())
    }

    fn find(&self, name: &str) -> Option<usize> {
        (0..self.scopes.len())
            .rev()
            .find(|i| self.scopes[*i].contains_key(name))
    }

    fn get(&self, name: &str) -> Option<&Value> {
        self.find(name).and_then(|i| self.scopes[i].get(name))
    }
}

#[derive(Clone, Copy)]
struct Callable<'a> {
    name: &'a str,
    params: &'a [Param],
    modifiers: &'a [ModifierInvocation],
    returns: &'a [ReturnParam],
    body: &'a [Stmt],
    is_constructor: bool,
}

impl<'a> Callable<'a> {
    fn function(f: &'a FunctionDef) -> Self {
        Callable {
            name: &f.name,
            params: &f.params,
            modifiers: &f.modifiers,
            returns: &f.returns,
            body: &f.body,
            is_constructor: false,
        }
    }

    fn constructor(owner: &'a str, c: &'a ConstructorDef) -> Self {
        Callable {
            name: owner,
            params: &c.params,
            modifiers: &c.modifiers,
            returns: &[],
            body: &c.body,
            is_constructor: true,
        }
    }
}

struct Chain<'a> {
    callable: Callable<'a>,
    frame: Frame,
    result: Option<Vec<Value>>,
    body_ran: bool,
}

struct Pending<'p, 'a> {
    chain: &'p mut Chain<'a>,
    next: usize,
}

enum Root {
    Local(usize, String),
    State(String),
}

struct Place {
    root: Root,
    keys: Vec<Value>,
}

/// Result of running a function: its return values and whether the body
/// (as opposed to only its modifiers) executed.
pub(crate) struct Invocation {
    pub returns: Vec<Value>,
    pub body_ran: bool,
}

pub(crate) struct Machine<'a> {
    contract: &'a FlatContract,
    pub storage: Storage,
    sender: Address,
    depth: usize,
    constructing: bool,
    constructed: BTreeSet<String>,
}

impl<'a> Machine<'a> {
    pub fn new(contract: &'a FlatContract, storage: Storage, sender: Address) -> Self {
        Machine {
            contract,
            storage,
            sender,
            depth: 0,
            constructing: false,
            constructed: BTreeSet::new(),
        }
    }

    /// Initializes storage and runs the constructor chain.
    pub fn construct(&mut self, args: Vec<Value>) -> Result<(), Fault> {
        let contract = self.contract;
        self.constructing = true;
        let mut empty = Frame {
            scopes: vec![BTreeMap::new()],
        };
        for v in &contract.def.state_vars {
            let value = match &v.init {
                Some(init) => self.eval(init, &mut empty)?,
                None => Value::default_for(&v.ty),
            };
            ensure_conforms(&value, &v.ty, &v.name)?;
            self.storage.insert(v.name.clone(), value);
        }

        let explicit = explicitly_invoked_bases(contract);
        let own = contract.name();
        for (owner, ctor) in &contract.constructors {
            if owner == own || explicit.contains(owner) {
                continue;
            }
            if !ctor.params.is_empty() {
                return Err(Fault::MissingBaseArguments(owner.clone()));
            }
            self.run_base_constructor(owner, Vec::new())?;
        }
        match contract.constructor_of(own) {
            Some(ctor) => {
                self.constructed.insert(own.to_string());
                self.invoke(Callable::constructor(own, ctor), args)?;
            }
            None if !args.is_empty() => {
                return Err(Fault::Arity {
                    name: own.to_string(),
                    expected: 0,
                    got: args.len(),
                })
            }
            None => {}
        }
        self.constructing = false;
        Ok(())
    }

    pub fn call_function(&mut self, f: &'a FunctionDef, args: Vec<Value>) -> Result<Invocation, Fault> {
        self.invoke(Callable::function(f), args)
    }

    fn run_base_constructor(&mut self, base: &str, args: Vec<Value>) -> Result<(), Fault> {
        let contract = self.contract;
        if !self.constructing || !contract.is_base(base) || !self.constructed.insert(base.to_string()) {
            return Err(Fault::BaseConstructor(base.to_string()));
        }
        match contract.constructors.iter().find(|(n, _)| n == base) {
            Some((owner, ctor)) => {
                self.invoke(Callable::constructor(owner, ctor), args)?;
            }
            None if !args.is_empty() => {
                return Err(Fault::Arity {
                    name: base.to_string(),
                    expected: 0,
                    got: args.len(),
                })
            }
            None => {}
        }
        Ok(())
    }

    fn invoke(&mut self, callable: Callable<'a>, args: Vec<Value>) -> Result<Invocation, Fault> {
        if self.depth >= CALL_DEPTH_CAP {
            return Err(Fault::CallDepth);
        }
        self.depth += 1;
        let mut frame = Frame::bind(callable.name, callable.params, args)?;
        for r in callable.returns {
            if let Some(name) = &r.name {
                frame.declare(name, Value::default_for(&r.ty))?;
            }
        }
        let mut chain = Chain {
            callable,
            frame,
            result: None,
            body_ran: false,
        };
        let run = self.run_chain(&mut chain, 0);
        self.depth -= 1;
        run?;

        let returns = match chain.result {
            Some(values) => values,
            None => callable.returns.iter().map(|r| Value::default_for(&r.ty)).collect(),
        };
        if returns.len() != callable.returns.len() {
            return Err(Fault::Type(format!(
                "`{}` returns {} value(s), declared {}",
                callable.name,
                returns.len(),
                callable.returns.len()
            )));
        }
        for (v, r) in returns.iter().zip(callable.returns) {
            ensure_conforms(v, &r.ty, callable.name)?;
        }
        Ok(Invocation {
            returns,
            body_ran: chain.body_ran,
        })
    }

    fn run_chain(&mut self, chain: &mut Chain<'a>, idx: usize) -> Result<(), Fault> {
        let callable = chain.callable;
        if idx == callable.modifiers.len() {
            chain.body_ran = true;
            let flow = self.exec_block(callable.body, &mut chain.frame, None)?;
            chain.result = Some(match flow {
                Flow::Return(values) => values,
                Flow::Next | Flow::Break => callable
                    .returns
                    .iter()
                    .map(|r| match &r.name {
                        Some(name) => chain
                            .frame
                            .get(name)
                            .cloned()
                            .unwrap_or_else(|| Value::default_for(&r.ty)),
                        None => Value::default_for(&r.ty),
                    })
                    .collect(),
            });
            return Ok(());
        }
        let inv = &callable.modifiers[idx];
        let args = inv
            .args
            .iter()
            .map(|a| self.eval(a, &mut chain.frame))
            .collect::<Result<Vec<_>, _>>()?;
        if callable.is_constructor && self.contract.is_base(&inv.name) {
            self.run_base_constructor(&inv.name, args)?;
            return self.run_chain(chain, idx + 1);
        }
        let contract = self.contract;
        let def = contract
            .def
            .modifier(&inv.name)
            .ok_or_else(|| Fault::UnknownModifier(inv.name.clone()))?;
        let mut frame = Frame::bind(&def.name, &def.params, args)?;
        let mut pending = Pending { chain, next: idx + 1 };
        self.exec_block(&def.body, &mut frame, Some(&mut pending))?;
        Ok(())
    }

    fn exec_block(
        &mut self,
        stmts: &'a [Stmt],
        frame: &mut Frame,
        mut pending: Option<&mut Pending<'_, 'a>>,
    ) -> Result<Flow, Fault> {
        frame.scopes.push(BTreeMap::new());
        let mut result = Ok(Flow::Next);
        for stmt in stmts {
            match self.exec_stmt(stmt, frame, pending.as_deref_mut()) {
                Ok(Flow::Next) => {}
                other => {
                    result = other;
                    break;
                }
            }
        }
        frame.scopes.pop();
        result
    }

    fn exec_stmt(
        &mut self,
        stmt: &'a Stmt,
        frame: &mut Frame,
        pending: Option<&mut Pending<'_, 'a>>,
    ) -> Result<Flow, Fault> {
        match &stmt.kind {
            StmtKind::VarDecl(v) => {
                let value = match &v.init {
                    Some(init) => self.eval(init, frame)?,
                    None => Value::default_for(&v.ty),
                };
                ensure_conforms(&value, &v.ty, &v.name)?;
                frame.declare(&v.name, value)?;
            }
            StmtKind::Assign { target, value } => {
                let value = self.eval(value, frame)?;
                let place = self.place(target, frame)?;
                let slot = self.slot_mut(&place, frame)?;
                store(slot, value)?;
            }
            StmtKind::Increment(target) => {
                let place = self.place(target, frame)?;
                let slot = self.slot_mut(&place, frame)?;
                let v = slot
                    .as_uint()
                    .ok_or_else(|| Fault::Type("`++` on a non-integer".into()))?;
                *slot = Value::Uint(v.checked_add(1).ok_or(Fault::Overflow)?);
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let cond = self.eval_bool(cond, frame)?;
                if cond {
                    return self.exec_block(then_branch, frame, pending);
                } else if let Some(else_branch) = else_branch {
                    return self.exec_block(else_branch, frame, pending);
                }
            }
            StmtKind::For {
                counter,
                start,
                bound,
                body,
            } => return self.exec_for(counter, start, bound, body, frame, pending),
            StmtKind::Return(values) => {
                let values = values
                    .iter()
                    .map(|v| self.eval(v, frame))
                    .collect::<Result<Vec<_>, _>>()?;
                return Ok(Flow::Return(values));
            }
            StmtKind::Expr(e) => match &e.kind {
                ExprKind::Call { callee, args } => {
                    self.eval_call(callee, args, frame)?;
                }
                ExprKind::Push { array, value } => {
                    let value = self.eval(value, frame)?;
                    let place = self.place(array, frame)?;
                    match self.slot_mut(&place, frame)? {
                        Value::Array { elem, items } => {
                            ensure_conforms(&value, &TypeName::Elementary(*elem), "push")?;
                            items.push(value);
                        }
                        other => return Err(Fault::Type(format!("push on {}", other.type_name()))),
                    }
                }
                _ => {
                    self.eval(e, frame)?;
                }
            },
            StmtKind::Placeholder => match pending {
                Some(p) => self.run_chain(p.chain, p.next)?,
                None => return Err(Fault::StrayPlaceholder),
            },
            StmtKind::Break => return Ok(Flow::Break),
        }
        Ok(Flow::Next)
    }

    fn exec_for(
        &mut self,
        counter: &str,
        start: &Expr,
        bound: &Expr,
        body: &'a [Stmt],
        frame: &mut Frame,
        mut pending: Option<&mut Pending<'_, 'a>>,
    ) -> Result<Flow, Fault> {
        let start = self.eval_uint(start, frame)?;
        frame.scopes.push(BTreeMap::new());
        let result = (|| {
            frame.declare(counter, Value::Uint(start))?;
            let mut iterations = 0usize;
            loop {
                let i = frame
                    .get(counter)
                    .and_then(Value::as_uint)
                    .ok_or_else(|| Fault::Type("loop counter is not an integer".into()))?;
                let limit = self.eval_uint(bound, frame)?;
                if i >= limit {
                    return Ok(Flow::Next);
                }
                iterations += 1;
                if iterations > LOOP_ITERATION_CAP {
                    return Err(Fault::IterationCap);
                }
                match self.exec_block(body, frame, pending.as_deref_mut())? {
                    Flow::Break => return Ok(Flow::Next),
                    Flow::Return(v) => return Ok(Flow::Return(v)),
                    Flow::Next => {}
                }
                let idx = frame.find(counter).expect("counter declared");
                let slot = frame.scopes[idx].get_mut(counter).expect("counter declared");
                let v = slot.as_uint().ok_or(Fault::Overflow)?;
                *slot = Value::Uint(v.checked_add(1).ok_or(Fault::Overflow)?);
            }
        })();
        frame.scopes.pop();
        result
    }

    fn eval_bool(&mut self, e: &Expr, frame: &mut Frame) -> Result<bool, Fault> {
        let v = self.eval(e, frame)?;
        v.as_bool()
            .ok_or_else(|| Fault::Type(format!("expected bool condition, got {}", v.type_name())))
    }

    fn eval_uint(&mut self, e: &Expr, frame: &mut Frame) -> Result<u128, Fault> {
        let v = self.eval(e, frame)?;
        v.as_uint()
            .ok_or_else(|| Fault::Type(format!("expected uint, got {}", v.type_name())))
    }

    fn eval(&mut self, e: &Expr, frame: &mut Frame) -> Result<Value, Fault> {
        match &e.kind {
            ExprKind::Literal(lit) => Ok(match lit {
                Literal::Uint(v) => Value::Uint(*v),
                Literal::Bool(v) => Value::Bool(*v),
                Literal::Str(v) => Value::String(v.clone()),
                Literal::Address(v) => Value::Address(*v),
                Literal::Bytes32(v) => Value::Bytes32(*v),
            }),
            ExprKind::Ident(_) | ExprKind::Index { .. } => {
                let place = self.place(e, frame)?;
                self.read(&place, frame)
            }
            ExprKind::Member { base, member } => {
                if let ExprKind::Ident(root) = &base.kind {
                    if root == "msg" && frame.get("msg").is_none() {
                        return match member.as_str() {
                            "sender" => Ok(Value::Address(self.sender)),
                            other => Err(Fault::UnknownIdentifier(format!("msg.{other}"))),
                        };
                    }
                }
                let target = self.eval(base, frame)?;
                match (member.as_str(), &target) {
                    ("length", Value::Array { items, .. }) => Ok(Value::Uint(items.len() as u128)),
                    _ => Err(Fault::Type(format!("no member `{member}` on {}", target.type_name()))),
                }
            }
            ExprKind::Push { .. } => Err(Fault::NoValue("push".into())),
            ExprKind::Call { callee, args } => {
                let mut values = self.eval_call(callee, args, frame)?;
                match values.len() {
                    1 => Ok(values.remove(0)),
                    0 => Err(Fault::NoValue(callee.clone())),
                    n => Err(Fault::Type(format!(
                        "`{callee}` returns {n} values where one is expected"
                    ))),
                }
            }
            ExprKind::Binary { op, lhs, rhs } => self.eval_binary(*op, lhs, rhs, frame),
        }
    }

    fn eval_binary(&mut self, op: BinaryOp, lhs: &Expr, rhs: &Expr, frame: &mut Frame) -> Result<Value, Fault> {
        if op == BinaryOp::And {
            if !self.eval_bool(lhs, frame)? {
                return Ok(Value::Bool(false));
            }
            return Ok(Value::Bool(self.eval_bool(rhs, frame)?));
        }
        let l = self.eval(lhs, frame)?;
        let r = self.eval(rhs, frame)?;
        let mismatch = || {
            Fault::Type(format!(
                "cannot apply `{}` to {} and {}",
                op.symbol(),
                l.type_name(),
                r.type_name()
            ))
        };
        match op {
            BinaryOp::Eq | BinaryOp::Ne => {
                if l.type_name() != r.type_name() || l.as_key().is_none() {
                    return Err(mismatch());
                }
                Ok(Value::Bool((l == r) == (op == BinaryOp::Eq)))
            }
            _ => {
                let (Some(a), Some(b)) = (l.as_uint(), r.as_uint()) else {
                    return Err(mismatch());
                };
                Ok(Value::Bool(match op {
                    BinaryOp::Lt => a < b,
                    BinaryOp::Le => a <= b,
                    BinaryOp::Gt => a > b,
                    BinaryOp::Ge => a >= b,
                    _ => unreachable!("handled above"),
                }))
            }
        }
    }

    fn eval_call(&mut self, callee: &str, args: &[Expr], frame: &mut Frame) -> Result<Vec<Value>, Fault> {
        let values = args
            .iter()
            .map(|a| self.eval(a, frame))
            .collect::<Result<Vec<_>, _>>()?;
        let contract = self.contract;
        if let Some(f) = contract.def.function(callee) {
            return Ok(self.invoke(Callable::function(f), values)?.returns);
        }
        if callee == "sha256" {
            return sha256_builtin(values).map(|v| vec![v]);
        }
        if contract.is_base(callee) {
            self.run_base_constructor(callee, values)?;
            return Ok(Vec::new());
        }
        Err(Fault::UnknownFunction(callee.to_string()))
    }

    fn place(&mut self, e: &Expr, frame: &mut Frame) -> Result<Place, Fault> {
        match &e.kind {
            ExprKind::Ident(name) => {
                if let Some(i) = frame.find(name) {
                    Ok(Place {
                        root: Root::Local(i, name.clone()),
                        keys: Vec::new(),
                    })
                } else if self.storage.contains_key(name) {
                    Ok(Place {
                        root: Root::State(name.clone()),
                        keys: Vec::new(),
                    })
                } else {
                    Err(Fault::UnknownIdentifier(name.clone()))
                }
            }
            ExprKind::Index { base, index } => {
                let mut place = self.place(base, frame)?;
                let key = self.eval(index, frame)?;
                place.keys.push(key);
                Ok(place)
            }
            _ => Err(Fault::NotAssignable),
        }
    }

    fn read(&self, place: &Place, frame: &Frame) -> Result<Value, Fault> {
        let mut cur = match &place.root {
            Root::Local(i, name) => &frame.scopes[*i][name],
            Root::State(name) => &self.storage[name],
        };
        for key in &place.keys {
            match cur {
                Value::Array { items, .. } => {
                    let i = array_index(key, items.len())?;
                    cur = &items[i];
                }
                Value::Mapping {
                    key: kt,
                    value,
                    entries,
                } => {
                    let k = mapping_key(key, *kt)?;
                    match entries.get(&k) {
                        Some(v) => cur = v,
                        None => return Ok(Value::default_for(value)),
                    }
                }
                other => return Err(Fault::Type(format!("cannot index {}", other.type_name()))),
            }
        }
        Ok(cur.clone())
    }

    fn slot_mut<'s>(&'s mut self, place: &Place, frame: &'s mut Frame) -> Result<&'s mut Value, Fault> {
        let mut cur = match &place.root {
            Root::Local(i, name) => frame.scopes[*i].get_mut(name).expect("resolved local"),
            Root::State(name) => self.storage.get_mut(name).expect("resolved state"),
        };
        for key in &place.keys {
            cur = match cur {
                Value::Array { items, .. } => {
                    let i = array_index(key, items.len())?;
                    &mut items[i]
                }
                Value::Mapping {
                    key: kt,
                    value,
                    entries,
                } => {
                    let k = mapping_key(key, *kt)?;
                    entries.entry(k).or_insert_with(|| Value::default_for(value))
                }
                other => return Err(Fault::Type(format!("cannot index {}", other.type_name()))),
            };
        }
        Ok(cur)
    }
}

fn store(slot: &mut Value, value: Value) -> Result<(), Fault> {
    let ty = slot.type_name();
    ensure_conforms(&value, &ty, "assignment")?;
    *slot = value;
    Ok(())
}

fn ensure_conforms(value: &Value, ty: &TypeName, what: &str) -> Result<(), Fault> {
    if value.conforms_to(ty) {
        Ok(())
    } else {
        Err(Fault::Type(format!("{what}: expected {ty}, got {}", value.type_name())))
    }
}

fn array_index(key: &Value, len: usize) -> Result<usize, Fault> {
    let index = key
        .as_uint()
        .ok_or_else(|| Fault::Type(format!("array index must be uint, got {}", key.type_name())))?;
    if index >= len as u128 {
        return Err(Fault::OutOfBounds { index, len });
    }
    Ok(index as usize)
}

fn mapping_key(key: &Value, expected: ElementaryType) -> Result<super::value::MapKey, Fault> {
    match key.as_key() {
        Some(k) if k.elementary_type() == expected => Ok(k),
        _ => Err(Fault::Type(format!(
            "mapping key must be {}, got {}",
            expected.keyword(),
            key.type_name()
        ))),
    }
}

/// `sha256` over the packed encoding of a single scalar; strings hash their
/// UTF-8 bytes.
fn sha256_builtin(mut args: Vec<Value>) -> Result<Value, Fault> {
    if args.len() != 1 {
        return Err(Fault::Arity {
            name: "sha256".into(),
            expected: 1,
            got: args.len(),
        });
    }
    let bytes: Vec<u8> = match args.remove(0) {
        Value::String(s) => s.into_bytes(),
        Value::Bytes32(b) => b.0.to_vec(),
        Value::Address(a) => a.0.to_vec(),
        Value::Uint(v) => {
            let mut word = [0u8; 32];
            word[16..].copy_from_slice(&v.to_be_bytes());
            word.to_vec()
        }
        Value::Bool(b) => vec![b as u8],
        other => return Err(Fault::Type(format!("sha256 of {}", other.type_name()))),
    };
    Ok(Value::Bytes32(Bytes32(Sha256::digest(&bytes).into())))
}

fn explicitly_invoked_bases(contract: &FlatContract) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (_, ctor) in &contract.constructors {
        for inv in &ctor.modifiers {
            if contract.is_base(&inv.name) {
                out.insert(inv.name.clone());
            }
        }
        collect_base_calls(&ctor.body, contract, &mut out);
    }
    out
}

fn collect_base_calls(body: &[Stmt], contract: &FlatContract, out: &mut BTreeSet<String>) {
    for stmt in body {
        match &stmt.kind {
            StmtKind::Expr(Expr {
                kind: ExprKind::Call { callee, .. },
                ..
            }) if contract.is_base(callee) => {
                out.insert(callee.clone());
            }
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                collect_base_calls(then_branch, contract, out);
                if let Some(e) = else_branch {
                    collect_base_calls(e, contract, out);
                }
            }
            StmtKind::For { body, .. } => collect_base_calls(body, contract, out),
            _ => {}
        }
    }
}
