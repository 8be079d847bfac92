use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::types::{Address, Bytes32};

/// Words with a meaning in the wider contract language that the dialect
/// deliberately does not support.
const UNSUPPORTED_WORDS: &[&str] = &[
    "pragma",
    "import",
    "library",
    "interface",
    "struct",
    "enum",
    "event",
    "emit",
    "using",
    "public",
    "external",
    "private",
    "view",
    "pure",
    "payable",
    "memory",
    "storage",
    "calldata",
    "while",
    "do",
    "continue",
    "throw",
    "assembly",
    "delete",
    "new",
    "revert",
    "require",
    "assert",
    "selfdestruct",
    "suicide",
    "this",
    "super",
    "var",
    "int",
    "bytes",
    "byte",
    "fixed",
    "ufixed",
    "abstract",
    "override",
    "virtual",
    "try",
    "catch",
    "unchecked",
    "anonymous",
    "indexed",
];

const RESERVED: &[&str] = &[
    "contract",
    "is",
    "function",
    "modifier",
    "constructor",
    "returns",
    "return",
    "if",
    "else",
    "for",
    "break",
    "constant",
    "internal",
    "mapping",
    "true",
    "false",
    "uint",
    "uint256",
    "bool",
    "address",
    "string",
    "bytes32",
];

pub(crate) fn is_reserved_word(word: &str) -> bool {
    RESERVED.contains(&word) || UNSUPPORTED_WORDS.contains(&word) || unsupported_sized_type(word)
}

fn unsupported_sized_type(word: &str) -> bool {
    let sized = |prefix: &str| {
        word.strip_prefix(prefix)
            .map(|rest| !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit()))
            .unwrap_or(false)
    };
    (sized("uint") && word != "uint256") || sized("int") || (sized("bytes") && word != "bytes32")
}

pub(crate) fn parse_unit(src: &str) -> Result<SourceUnit, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut unit = SourceUnit::default();
    while !p.at_eof() {
        unit.contracts.push(p.contract()?);
    }
    Ok(unit)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let idx = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error_here(&self, expected: &str) -> ParseError {
        if let Tok::Ident(word) = self.peek() {
            if UNSUPPORTED_WORDS.contains(&word.as_str()) || unsupported_sized_type(word) {
                return ParseError::unsupported(self.span(), format!("`{word}`"));
            }
        }
        ParseError::syntax(self.span(), expected, self.peek().describe())
    }

    fn expect_punct(&mut self, p: &str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error_here(&format!("`{p}`")))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Tok::Ident(w) if !is_reserved_word(w) => {
                let w = w.clone();
                self.advance();
                Ok(w)
            }
            _ => Err(self.error_here(&format!("identifier ({what})"))),
        }
    }

    fn contract(&mut self) -> PResult<ContractDef> {
        let span = self.span();
        if !self.is_word("contract") {
            return Err(self.error_here("`contract`"));
        }
        self.advance();
        let name = self.ident("contract name")?;
        let mut contract = ContractDef::new(name);
        contract.span = span;
        if self.eat_word("is") {
            loop {
                contract.bases.push(self.ident("base contract name")?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct("{")?;
        while !self.eat_punct("}") {
            if self.at_eof() {
                return Err(self.error_here("`}`"));
            }
            self.member(&mut contract)?;
        }
        Ok(contract)
    }

    fn member(&mut self, contract: &mut ContractDef) -> PResult<()> {
        let span = self.span();
        if self.is_word("function") {
            self.advance();
            let name = self.ident("function name")?;
            let header = self.callable_header()?;
            let body = self.block()?;
            if name == contract.name {
                if !header.returns.is_empty() || header.is_constant || header.is_internal {
                    return Err(ParseError::unsupported(
                        span,
                        "constructor with `returns`, `constant` or `internal`".to_string(),
                    ));
                }
                return set_constructor(
                    contract,
                    ConstructorDef {
                        params: header.params,
                        modifiers: header.modifiers,
                        body,
                        span,
                    },
                );
            }
            contract.functions.push(FunctionDef {
                name,
                params: header.params,
                modifiers: header.modifiers,
                is_constant: header.is_constant,
                is_internal: header.is_internal,
                returns: header.returns,
                body,
                span,
            });
        } else if self.is_word("constructor") {
            self.advance();
            let header = self.callable_header()?;
            if !header.returns.is_empty() || header.is_constant || header.is_internal {
                return Err(ParseError::unsupported(
                    span,
                    "constructor with `returns`, `constant` or `internal`".to_string(),
                ));
            }
            let body = self.block()?;
            set_constructor(
                contract,
                ConstructorDef {
                    params: header.params,
                    modifiers: header.modifiers,
                    body,
                    span,
                },
            )?;
        } else if self.is_word("modifier") {
            self.advance();
            let name = self.ident("modifier name")?;
            let params = if self.is_punct("(") { self.params()? } else { Vec::new() };
            let body = self.block()?;
            contract.modifiers.push(ModifierDef {
                name,
                params,
                body,
                span,
            });
        } else if self.at_type() {
            let decl = self.var_decl()?;
            contract.state_vars.push(decl);
        } else {
            return Err(self.error_here("member declaration"));
        }
        Ok(())
    }

    fn callable_header(&mut self) -> PResult<Header> {
        let params = self.params()?;
        let mut header = Header {
            params,
            ..Header::default()
        };
        loop {
            let span = self.span();
            match self.peek().clone() {
                Tok::Ident(w) if w == "internal" => {
                    self.advance();
                    header.is_internal = true;
                }
                Tok::Ident(w) if w == "constant" => {
                    self.advance();
                    header.is_constant = true;
                }
                Tok::Ident(w) if w == "returns" => {
                    self.advance();
                    header.returns = self.return_params()?;
                    break;
                }
                Tok::Ident(w) if !is_reserved_word(&w) => {
                    self.advance();
                    let args = if self.is_punct("(") { self.args()? } else { Vec::new() };
                    header.modifiers.push(ModifierInvocation { name: w, args, span });
                }
                Tok::Punct("{") => break,
                Tok::Punct(";") => {
                    return Err(ParseError::unsupported(
                        span,
                        "function declaration without a body".to_string(),
                    ))
                }
                _ => return Err(self.error_here("`{`")),
            }
        }
        Ok(header)
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut out = Vec::new();
        if self.eat_punct(")") {
            return Ok(out);
        }
        loop {
            let span = self.span();
            let ty = self.type_name()?;
            let name = self.ident("parameter name")?;
            out.push(Param { ty, name, span });
            if self.eat_punct(")") {
                return Ok(out);
            }
            self.expect_punct(",")?;
        }
    }

    fn return_params(&mut self) -> PResult<Vec<ReturnParam>> {
        self.expect_punct("(")?;
        let mut out = Vec::new();
        if self.eat_punct(")") {
            return Ok(out);
        }
        loop {
            let span = self.span();
            let ty = self.type_name()?;
            let name = match self.peek() {
                Tok::Ident(w) if !is_reserved_word(w) => Some(self.ident("return name")?),
                _ => None,
            };
            out.push(ReturnParam { ty, name, span });
            if self.eat_punct(")") {
                return Ok(out);
            }
            self.expect_punct(",")?;
        }
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_punct("(")?;
        let mut out = Vec::new();
        if self.eat_punct(")") {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat_punct(")") {
                return Ok(out);
            }
            self.expect_punct(",")?;
        }
    }

    fn at_type(&self) -> bool {
        match self.peek() {
            Tok::Ident(w) => w == "mapping" || ElementaryType::from_keyword(w).is_some(),
            _ => false,
        }
    }

    fn elementary(&mut self) -> PResult<ElementaryType> {
        if let Tok::Ident(w) = self.peek() {
            if let Some(e) = ElementaryType::from_keyword(w) {
                self.advance();
                return Ok(e);
            }
        }
        Err(self.error_here("elementary type"))
    }

    fn type_name(&mut self) -> PResult<TypeName> {
        let span = self.span();
        if self.eat_word("mapping") {
            self.expect_punct("(")?;
            let key = self.elementary()?;
            self.expect_punct("=>")?;
            let value = self.type_name()?;
            self.expect_punct(")")?;
            if self.is_punct("[") {
                return Err(ParseError::unsupported(span, "array of mappings".to_string()));
            }
            return Ok(TypeName::Mapping {
                key,
                value: Box::new(value),
            });
        }
        let elem = self.elementary()?;
        if self.is_punct("[") {
            let bracket = self.span();
            self.advance();
            if !self.eat_punct("]") {
                return Err(ParseError::unsupported(bracket, "fixed-size array".to_string()));
            }
            if self.is_punct("[") {
                return Err(ParseError::unsupported(
                    self.span(),
                    "multi-dimensional array".to_string(),
                ));
            }
            return Ok(TypeName::Array(elem));
        }
        Ok(TypeName::Elementary(elem))
    }

    fn var_decl(&mut self) -> PResult<VarDecl> {
        let span = self.span();
        let ty = self.type_name()?;
        let name = self.ident("variable name")?;
        let init = if self.eat_punct("=") { Some(self.expr()?) } else { None };
        self.expect_punct(";")?;
        Ok(VarDecl { ty, name, init, span })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        while !self.eat_punct("}") {
            if self.at_eof() {
                return Err(self.error_here("`}`"));
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    /// Body of an `if`/`else`/`for`: a braced block or a single statement.
    fn branch(&mut self) -> PResult<Vec<Stmt>> {
        if self.is_punct("{") {
            self.block()
        } else {
            Ok(vec![self.stmt()?])
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Ident(w) if w == "_" && matches!(self.peek_at(1), Tok::Punct(";")) => {
                self.advance();
                self.advance();
                StmtKind::Placeholder
            }
            Tok::Ident(w) if w == "if" => {
                self.advance();
                self.expect_punct("(")?;
                let cond = self.expr()?;
                self.expect_punct(")")?;
                let then_branch = self.branch()?;
                let else_branch = if self.eat_word("else") {
                    Some(self.branch()?)
                } else {
                    None
                };
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                }
            }
            Tok::Ident(w) if w == "for" => self.for_loop()?,
            Tok::Ident(w) if w == "return" => {
                self.advance();
                StmtKind::Return(self.return_values()?)
            }
            Tok::Ident(w) if w == "break" => {
                self.advance();
                self.expect_punct(";")?;
                StmtKind::Break
            }
            Tok::Punct("{") => return Err(ParseError::unsupported(span, "nested block statement".to_string())),
            _ if self.at_type() => StmtKind::VarDecl(self.var_decl()?),
            _ => {
                let target = self.expr()?;
                if self.eat_punct("=") {
                    check_lvalue(&target)?;
                    let value = self.expr()?;
                    self.expect_punct(";")?;
                    StmtKind::Assign { target, value }
                } else if self.eat_punct("++") {
                    check_lvalue(&target)?;
                    self.expect_punct(";")?;
                    StmtKind::Increment(target)
                } else if let Tok::Punct(op @ ("--" | "+=" | "-=" | "*=" | "/=")) = self.peek() {
                    return Err(ParseError::unsupported(self.span(), format!("operator `{op}`")));
                } else {
                    if !matches!(target.kind, ExprKind::Call { .. } | ExprKind::Push { .. }) {
                        return Err(ParseError::syntax(
                            target.span,
                            "assignment, increment or call statement",
                            "bare expression".to_string(),
                        ));
                    }
                    self.expect_punct(";")?;
                    StmtKind::Expr(target)
                }
            }
        };
        Ok(Stmt { kind, span })
    }

    fn for_loop(&mut self) -> PResult<StmtKind> {
        let span = self.span();
        let shape = || {
            ParseError::unsupported(
                span,
                "for loop outside the `for (uint i = start; i < bound; i++)` form".to_string(),
            )
        };
        self.advance();
        self.expect_punct("(")?;
        if !self.eat_word("uint") && !self.eat_word("uint256") {
            return Err(shape());
        }
        let counter = self.ident("loop counter")?;
        self.expect_punct("=")?;
        let start = self.expr()?;
        self.expect_punct(";")?;
        let cond = self.expr()?;
        let bound = match cond.kind {
            ExprKind::Binary {
                op: BinaryOp::Lt,
                lhs,
                rhs,
            } if matches!(&lhs.kind, ExprKind::Ident(n) if *n == counter) => *rhs,
            _ => return Err(shape()),
        };
        self.expect_punct(";")?;
        match self.peek() {
            Tok::Ident(n) if *n == counter => {
                self.advance();
            }
            _ => return Err(shape()),
        }
        if !self.eat_punct("++") {
            return Err(shape());
        }
        self.expect_punct(")")?;
        let body = self.branch()?;
        Ok(StmtKind::For {
            counter,
            start,
            bound,
            body,
        })
    }

    fn return_values(&mut self) -> PResult<Vec<Expr>> {
        if self.eat_punct(";") {
            return Ok(Vec::new());
        }
        if self.is_punct("(") {
            let save = self.pos;
            if let Ok(values) = self.args() {
                if values.len() > 1 && self.eat_punct(";") {
                    return Ok(values);
                }
            }
            self.pos = save;
        }
        let mut values = vec![self.expr()?];
        while self.eat_punct(",") {
            values.push(self.expr()?);
        }
        self.expect_punct(";")?;
        Ok(values)
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.comparison()?;
        loop {
            let span = lhs.span;
            if self.eat_punct("&&") {
                let rhs = self.comparison()?;
                lhs = Expr {
                    kind: ExprKind::Binary {
                        op: BinaryOp::And,
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                    },
                    span,
                };
            } else if self.is_punct("||") {
                return Err(ParseError::unsupported(self.span(), "operator `||`".to_string()));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let mut lhs = self.postfix()?;
        loop {
            let span = self.span();
            let op = match self.peek() {
                Tok::Punct("==") => BinaryOp::Eq,
                Tok::Punct("!=") => BinaryOp::Ne,
                Tok::Punct("<") => BinaryOp::Lt,
                Tok::Punct("<=") => BinaryOp::Le,
                Tok::Punct(">") => BinaryOp::Gt,
                Tok::Punct(">=") => BinaryOp::Ge,
                Tok::Punct(op @ ("+" | "-" | "*" | "/" | "%" | "**" | "&" | "|" | "^" | "<<" | ">>" | "?")) => {
                    return Err(ParseError::unsupported(span, format!("operator `{op}`")));
                }
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.postfix()?;
            lhs = Expr {
                span: lhs.span,
                kind: ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
            };
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut base = self.primary()?;
        loop {
            let span = base.span;
            if self.eat_punct(".") {
                let member_span = self.span();
                let member = match self.peek() {
                    Tok::Ident(w) => w.clone(),
                    _ => return Err(self.error_here("member name")),
                };
                self.advance();
                if self.is_punct("(") {
                    if member != "push" {
                        return Err(ParseError::unsupported(
                            member_span,
                            format!("method call `.{member}()`"),
                        ));
                    }
                    let mut args = self.args()?;
                    if args.len() != 1 {
                        return Err(ParseError::syntax(
                            member_span,
                            "exactly one argument to `push`",
                            format!("{} arguments", args.len()),
                        ));
                    }
                    base = Expr {
                        kind: ExprKind::Push {
                            array: Box::new(base),
                            value: Box::new(args.remove(0)),
                        },
                        span,
                    };
                } else {
                    base = Expr {
                        span,
                        kind: ExprKind::Member {
                            base: Box::new(base),
                            member,
                        },
                    };
                }
            } else if self.eat_punct("[") {
                let index = self.expr()?;
                self.expect_punct("]")?;
                base = Expr {
                    span,
                    kind: ExprKind::Index {
                        base: Box::new(base),
                        index: Box::new(index),
                    },
                };
            } else {
                return Ok(base);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Ident(w) if w == "true" || w == "false" => {
                self.advance();
                ExprKind::Literal(Literal::Bool(w == "true"))
            }
            Tok::Ident(w) if ElementaryType::from_keyword(&w).is_some() => {
                return Err(ParseError::unsupported(span, format!("type conversion `{w}(...)`")));
            }
            Tok::Ident(w) if !is_reserved_word(&w) => {
                self.advance();
                if self.is_punct("(") {
                    let args = self.args()?;
                    ExprKind::Call { callee: w, args }
                } else {
                    ExprKind::Ident(w)
                }
            }
            Tok::Number(digits) => {
                self.advance();
                let v: u128 = digits
                    .parse()
                    .map_err(|_| ParseError::unsupported(span, "integer literal wider than 128 bits".to_string()))?;
                if let Tok::Ident(unit) = self.peek() {
                    if !is_reserved_word(unit) {
                        return Err(ParseError::unsupported(self.span(), format!("literal unit `{unit}`")));
                    }
                }
                ExprKind::Literal(Literal::Uint(v))
            }
            Tok::Hex(digits) => {
                self.advance();
                let text = format!("0x{digits}");
                let lit = match digits.len() {
                    40 => Literal::Address(text.parse::<Address>().expect("40 hex digits")),
                    64 => Literal::Bytes32(text.parse::<Bytes32>().expect("64 hex digits")),
                    n if n <= 32 => Literal::Uint(u128::from_str_radix(&digits, 16).expect("at most 32 hex digits")),
                    _ => {
                        return Err(ParseError::unsupported(
                            span,
                            format!("hex literal of {} digits", digits.len()),
                        ))
                    }
                };
                ExprKind::Literal(lit)
            }
            Tok::Str(s) => {
                self.advance();
                ExprKind::Literal(Literal::Str(s))
            }
            Tok::Punct("(") => {
                self.advance();
                let inner = self.expr()?;
                if self.is_punct(",") {
                    return Err(ParseError::unsupported(
                        self.span(),
                        "tuple expression outside `return`".to_string(),
                    ));
                }
                self.expect_punct(")")?;
                return Ok(inner);
            }
            Tok::Punct(op @ ("!" | "-" | "~" | "++" | "--" | "[")) => {
                return Err(ParseError::unsupported(span, format!("prefix operator `{op}`")));
            }
            _ => return Err(self.error_here("expression")),
        };
        Ok(Expr { kind, span })
    }
}

fn check_lvalue(e: &Expr) -> PResult<()> {
    match &e.kind {
        ExprKind::Ident(_) => Ok(()),
        ExprKind::Index { base, .. } => check_lvalue(base),
        _ => Err(ParseError::syntax(
            e.span,
            "assignable expression",
            "non-assignable expression".to_string(),
        )),
    }
}

fn set_constructor(contract: &mut ContractDef, ctor: ConstructorDef) -> PResult<()> {
    if contract.constructor.is_some() {
        return Err(ParseError::invalid(
            ctor.span,
            format!("contract `{}` declares more than one constructor", contract.name),
        ));
    }
    contract.constructor = Some(ctor);
    Ok(())
}

#[derive(Default)]
struct Header {
    params: Vec<Param>,
    modifiers: Vec<ModifierInvocation>,
    is_constant: bool,
    is_internal: bool,
    returns: Vec<ReturnParam>,
}
