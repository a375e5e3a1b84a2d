//! Many-sorted signatures, finite structures, terms and valuations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("undeclared sort {sort:?} used by {user}")]
    UndeclaredSort { sort: String, user: String },
    #[error("table of {function} has no row for ({})", .args.join(", "))]
    NonTotalTable { function: String, args: Vec<String> },
    #[error("value {value:?} is not in carrier {sort:?}")]
    ValueOutsideCarrier { value: String, sort: String },
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("ill-sorted term at {path:?}: expected {expected}, found {found}")]
    IllSorted {
        path: Vec<usize>,
        expected: String,
        found: String,
    },
    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),
    #[error("unbound variable {0:?}")]
    UnboundVariable(String),
    #[error("constant {value:?} lies in several carriers: {}", .sorts.join(", "))]
    AmbiguousConstant { value: String, sorts: Vec<String> },
    #[error("symbol {0:?} is declared both as variable and function")]
    SymbolClash(String),
}

/// Argument sorts and result sort of a function symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionDecl {
    pub args: Vec<String>,
    pub result: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Signature {
    sorts: BTreeSet<String>,
    functions: BTreeMap<String, FunctionDecl>,
    variables: BTreeMap<String, String>,
}

impl Signature {
    pub fn new(
        sorts: BTreeSet<String>,
        functions: BTreeMap<String, FunctionDecl>,
        variables: BTreeMap<String, String>,
    ) -> Result<Self, AlgebraError> {
        let check = |sort: &String, user: &str| {
            if sorts.contains(sort) {
                Ok(())
            } else {
                Err(AlgebraError::UndeclaredSort {
                    sort: sort.clone(),
                    user: user.to_string(),
                })
            }
        };
        for (name, decl) in &functions {
            for s in decl.args.iter().chain(std::iter::once(&decl.result)) {
                check(s, name)?;
            }
        }
        for (name, sort) in &variables {
            check(sort, name)?;
            if functions.contains_key(name) {
                return Err(AlgebraError::SymbolClash(name.clone()));
            }
        }
        Ok(Signature {
            sorts,
            functions,
            variables,
        })
    }

    pub fn sorts(&self) -> &BTreeSet<String> {
        &self.sorts
    }

    pub fn functions(&self) -> &BTreeMap<String, FunctionDecl> {
        &self.functions
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.get(name)
    }

    pub fn variables(&self) -> &BTreeMap<String, String> {
        &self.variables
    }

    pub fn variable_sort(&self, name: &str) -> Option<&str> {
        self.variables.get(name).map(String::as_str)
    }

    /// Declares (or re-declares with the same sort) a variable.
    pub fn declare_variable(&mut self, name: &str, sort: &str) -> Result<(), AlgebraError> {
        if !self.sorts.contains(sort) {
            return Err(AlgebraError::UndeclaredSort {
                sort: sort.to_string(),
                user: name.to_string(),
            });
        }
        if self.functions.contains_key(name) {
            return Err(AlgebraError::SymbolClash(name.to_string()));
        }
        match self.variables.get(name) {
            Some(s) if s != sort => Err(AlgebraError::IllSorted {
                path: vec![],
                expected: s.clone(),
                found: sort.to_string(),
            }),
            _ => {
                self.variables.insert(name.to_string(), sort.to_string());
                Ok(())
            }
        }
    }

    /// Variables declared for `sort`, in name order.
    pub fn variables_of<'a>(&'a self, sort: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.variables
            .iter()
            .filter(move |(_, s)| s.as_str() == sort)
            .map(|(v, _)| v.as_str())
    }
}

/// A signature with finite carriers and total function tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    signature: Signature,
    carriers: BTreeMap<String, BTreeSet<String>>,
    tables: BTreeMap<String, BTreeMap<Vec<String>, String>>,
    note: Option<String>,
}

impl Structure {
    pub fn new(
        signature: Signature,
        carriers: BTreeMap<String, BTreeSet<String>>,
        tables: BTreeMap<String, BTreeMap<Vec<String>, String>>,
    ) -> Result<Self, AlgebraError> {
        for sort in carriers.keys() {
            if !signature.sorts.contains(sort) {
                return Err(AlgebraError::UndeclaredSort {
                    sort: sort.clone(),
                    user: "carriers".into(),
                });
            }
        }
        let empty = BTreeSet::new();
        let carrier = |s: &str| carriers.get(s).unwrap_or(&empty);
        for (name, decl) in &signature.functions {
            let table = tables.get(name);
            for args in product(decl.args.iter().map(|s| carrier(s))) {
                match table.and_then(|t| t.get(&args)) {
                    None => {
                        return Err(AlgebraError::NonTotalTable {
                            function: name.clone(),
                            args,
                        })
                    }
                    Some(v) if !carrier(&decl.result).contains(v) => {
                        return Err(AlgebraError::ValueOutsideCarrier {
                            value: v.clone(),
                            sort: decl.result.clone(),
                        })
                    }
                    Some(_) => {}
                }
            }
            for args in table.into_iter().flat_map(|t| t.keys()) {
                if args.len() != decl.args.len() {
                    return Err(AlgebraError::ParseError(format!(
                        "row of {name} has {} arguments, expected {}",
                        args.len(),
                        decl.args.len()
                    )));
                }
                for (a, s) in args.iter().zip(&decl.args) {
                    if !carrier(s).contains(a) {
                        return Err(AlgebraError::ValueOutsideCarrier {
                            value: a.clone(),
                            sort: s.clone(),
                        });
                    }
                }
            }
        }
        if let Some(f) = tables.keys().find(|f| !signature.functions.contains_key(*f)) {
            return Err(AlgebraError::UnknownSymbol(f.clone()));
        }
        let mut carriers = carriers;
        for s in &signature.sorts {
            carriers.entry(s.clone()).or_default();
        }
        Ok(Structure {
            signature,
            carriers,
            tables,
            note: None,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn carrier(&self, sort: &str) -> Option<&BTreeSet<String>> {
        self.carriers.get(sort)
    }

    pub fn carriers(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.carriers
    }

    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    /// Sorts whose carrier contains `value`.
    pub fn sorts_containing(&self, value: &str) -> Vec<&str> {
        self.carriers
            .iter()
            .filter(|(_, c)| c.contains(value))
            .map(|(s, _)| s.as_str())
            .collect()
    }

    /// The unique sort containing `value`.
    pub fn sort_of_value(&self, value: &str) -> Result<&str, AlgebraError> {
        match self.sorts_containing(value).as_slice() {
            [] => Err(AlgebraError::UnknownSymbol(value.to_string())),
            [s] => Ok(s),
            many => Err(AlgebraError::AmbiguousConstant {
                value: value.to_string(),
                sorts: many.iter().map(|s| s.to_string()).collect(),
            }),
        }
    }

    pub fn apply(&self, function: &str, args: &[String]) -> Result<&str, AlgebraError> {
        let table = self
            .tables
            .get(function)
            .ok_or_else(|| AlgebraError::UnknownSymbol(function.to_string()))?;
        table
            .get(args)
            .map(String::as_str)
            .ok_or_else(|| AlgebraError::NonTotalTable {
                function: function.to_string(),
                args: args.to_vec(),
            })
    }

    pub fn declare_variable(&mut self, name: &str, sort: &str) -> Result<(), AlgebraError> {
        self.signature.declare_variable(name, sort)
    }

    /// Sort of a well-sorted term.
    pub fn sort_of(&self, t: &Term) -> Result<Sort, AlgebraError> {
        self.sort_at(t, &mut Vec::new())
    }

    fn sort_at(&self, t: &Term, path: &mut Vec<usize>) -> Result<Sort, AlgebraError> {
        match t {
            Term::Var(v) => self
                .signature
                .variable_sort(v)
                .map(Sort::named)
                .ok_or_else(|| AlgebraError::UnknownSymbol(v.clone())),
            Term::Const(c) => self.sort_of_value(c).map(Sort::named),
            Term::App(f, args) => {
                let decl = self
                    .signature
                    .function(f)
                    .ok_or_else(|| AlgebraError::UnknownSymbol(f.clone()))?;
                if decl.args.len() != args.len() {
                    return Err(AlgebraError::IllSorted {
                        path: path.clone(),
                        expected: format!("{} arguments", decl.args.len()),
                        found: format!("{} arguments", args.len()),
                    });
                }
                for (i, (a, expected)) in args.iter().zip(&decl.args).enumerate() {
                    path.push(i);
                    let found = self.sort_at(a, path)?;
                    if found != Sort::named(expected) {
                        return Err(AlgebraError::IllSorted {
                            path: path.clone(),
                            expected: expected.clone(),
                            found: found.to_string(),
                        });
                    }
                    path.pop();
                }
                Ok(Sort::named(&decl.result))
            }
            Term::Tuple(ts) => {
                let mut sorts = Vec::with_capacity(ts.len());
                for (i, a) in ts.iter().enumerate() {
                    path.push(i);
                    sorts.push(self.sort_at(a, path)?);
                    path.pop();
                }
                Ok(Sort::Tuple(sorts))
            }
        }
    }

    /// Checks that every bound variable's value lies in its sort's carrier.
    pub fn check_valuation(&self, beta: &Valuation) -> Result<(), AlgebraError> {
        for (v, value) in beta {
            let sort = self
                .signature
                .variable_sort(v)
                .ok_or_else(|| AlgebraError::UnknownSymbol(v.clone()))?;
            if !self.carriers[sort].contains(value) {
                return Err(AlgebraError::ValueOutsideCarrier {
                    value: value.clone(),
                    sort: sort.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&StructureDoc::from(self)).expect("structure serializes")
    }
}

/// Parses a structure file.
pub fn parse_structure(input: impl Read) -> Result<Structure, AlgebraError> {
    let doc: StructureDoc =
        serde_json::from_reader(input).map_err(|e| AlgebraError::ParseError(e.to_string()))?;
    Structure::try_from(doc)
}

fn product<'a>(sets: impl Iterator<Item = &'a BTreeSet<String>>) -> Vec<Vec<String>> {
    let mut acc = vec![Vec::new()];
    for set in sets {
        acc = acc
            .into_iter()
            .flat_map(|prefix| {
                set.iter().map(move |v| {
                    let mut row = prefix.clone();
                    row.push(v.clone());
                    row
                })
            })
            .collect();
    }
    acc
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    sorts: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    functions: BTreeMap<String, FunctionDoc>,
    #[serde(default)]
    variables: BTreeMap<String, String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionDoc {
    args: Vec<String>,
    result: String,
    table: TableDoc,
}

/// Unary tables are objects `{arg: result}`; other arities are rows
/// `[[arg1, ..., argk, result], ...]`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum TableDoc {
    Unary(BTreeMap<String, String>),
    Rows(Vec<Vec<String>>),
}

impl TryFrom<StructureDoc> for Structure {
    type Error = AlgebraError;

    fn try_from(doc: StructureDoc) -> Result<Self, AlgebraError> {
        let mut carriers = BTreeMap::new();
        for (sort, values) in doc.sorts {
            let set: BTreeSet<String> = values.iter().cloned().collect();
            if set.len() != values.len() {
                return Err(AlgebraError::ParseError(format!(
                    "carrier {sort:?} lists a value twice"
                )));
            }
            carriers.insert(sort, set);
        }
        let mut functions = BTreeMap::new();
        let mut tables = BTreeMap::new();
        for (name, f) in doc.functions {
            let mut table = BTreeMap::new();
            let rows: Vec<(Vec<String>, String)> = match f.table {
                TableDoc::Unary(map) if f.args.len() == 1 => {
                    map.into_iter().map(|(a, r)| (vec![a], r)).collect()
                }
                TableDoc::Unary(map) if map.is_empty() => Vec::new(),
                TableDoc::Unary(_) => {
                    return Err(AlgebraError::ParseError(format!(
                        "table of {name} must be a list of rows"
                    )))
                }
                TableDoc::Rows(rows) => rows
                    .into_iter()
                    .map(|mut row| {
                        let r = row.pop().ok_or_else(|| {
                            AlgebraError::ParseError(format!("empty row in table of {name}"))
                        })?;
                        Ok((row, r))
                    })
                    .collect::<Result<_, AlgebraError>>()?,
            };
            for (args, result) in rows {
                if table.insert(args, result).is_some() {
                    return Err(AlgebraError::ParseError(format!(
                        "table of {name} has a duplicate row"
                    )));
                }
            }
            functions.insert(
                name.clone(),
                FunctionDecl {
                    args: f.args,
                    result: f.result,
                },
            );
            tables.insert(name, table);
        }
        let signature = Signature::new(carriers.keys().cloned().collect(), functions, doc.variables)?;
        let mut s = Structure::new(signature, carriers, tables)?;
        s.note = doc.note;
        Ok(s)
    }
}

impl From<&Structure> for StructureDoc {
    fn from(s: &Structure) -> Self {
        let functions = s
            .signature
            .functions
            .iter()
            .map(|(name, decl)| {
                let table = &s.tables[name];
                let table = if decl.args.len() == 1 {
                    TableDoc::Unary(
                        table
                            .iter()
                            .map(|(a, r)| (a[0].clone(), r.clone()))
                            .collect(),
                    )
                } else {
                    TableDoc::Rows(
                        table
                            .iter()
                            .map(|(a, r)| a.iter().chain(std::iter::once(r)).cloned().collect())
                            .collect(),
                    )
                };
                let doc = FunctionDoc {
                    args: decl.args.clone(),
                    result: decl.result.clone(),
                    table,
                };
                (name.clone(), doc)
            })
            .collect();
        StructureDoc {
            note: s.note.clone(),
            sorts: s
                .carriers
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().cloned().collect()))
                .collect(),
            functions,
            variables: s.signature.variables.clone(),
        }
    }
}

impl Serialize for Structure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        StructureDoc::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Structure {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = StructureDoc::deserialize(deserializer)?;
        Structure::try_from(doc).map_err(serde::de::Error::custom)
    }
}

/// A sort or a tuple of sorts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Named(String),
    Tuple(Vec<Sort>),
}

impl Sort {
    pub fn named(s: impl Into<String>) -> Self {
        Sort::Named(s.into())
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Named(s) => f.write_str(s),
            Sort::Tuple(ss) => {
                f.write_str("(")?;
                for (i, s) in ss.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" × ")?;
                    }
                    write!(f, "{s}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Variables, quoted constants, applications `f(t1,...,tk)` and tuples.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
    App(String, Vec<Term>),
    Tuple(Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(value: impl Into<String>) -> Self {
        Term::Const(value.into())
    }

    pub fn app(f: impl Into<String>, args: Vec<Term>) -> Self {
        Term::App(f.into(), args)
    }

    pub fn parse(text: &str) -> Result<Term, AlgebraError> {
        let mut p = Parser {
            chars: text.char_indices().peekable(),
            text,
        };
        let t = p.term()?;
        p.skip_ws();
        match p.chars.peek() {
            None => Ok(t),
            Some(&(i, c)) => Err(AlgebraError::ParseError(format!(
                "unexpected {c:?} at offset {i} in {text:?}"
            ))),
        }
    }

    /// Variables in order of first occurrence.
    pub fn variables(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Term::Var(v) => {
                if !out.contains(&v.as_str()) {
                    out.push(v);
                }
            }
            Term::Const(_) => {}
            Term::App(_, ts) | Term::Tuple(ts) => ts.iter().for_each(|t| t.collect_vars(out)),
        }
    }

    /// Components of a tuple, or the term itself as a 1-component list.
    pub fn components(&self) -> &[Term] {
        match self {
            Term::Tuple(ts) => ts,
            other => std::slice::from_ref(other),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        if c == '"' || c == '\\' {
            f.write_str("\\")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str("\"")
}

fn write_list(f: &mut fmt::Formatter<'_>, ts: &[Term]) -> fmt::Result {
    for (i, t) in ts.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => write_quoted(f, c),
            Term::App(name, args) => {
                write!(f, "{name}(")?;
                write_list(f, args)?;
                f.write_str(")")
            }
            Term::Tuple(ts) => {
                f.write_str("(")?;
                write_list(f, ts)?;
                if ts.len() == 1 {
                    f.write_str(",")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl std::str::FromStr for Term {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Term::parse(s)
    }
}

impl Serialize for Term {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Term::parse(&s).map_err(serde::de::Error::custom)
    }
}

struct Parser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    text: &'a str,
}

impl Parser<'_> {
    fn err(&mut self, what: &str) -> AlgebraError {
        let at = match self.chars.peek() {
            Some(&(i, c)) => format!("{c:?} at offset {i}"),
            None => "end of input".to_string(),
        };
        AlgebraError::ParseError(format!("expected {what}, found {at} in {:?}", self.text))
    }

    fn skip_ws(&mut self) {
        while self.chars.next_if(|(_, c)| c.is_whitespace()).is_some() {}
    }

    fn eat(&mut self, want: char) -> bool {
        self.skip_ws();
        self.chars.next_if(|&(_, c)| c == want).is_some()
    }

    fn term(&mut self) -> Result<Term, AlgebraError> {
        self.skip_ws();
        match self.chars.peek().map(|&(_, c)| c) {
            Some('"') => self.quoted().map(Term::Const),
            Some('(') => {
                self.chars.next();
                let (items, trailing) = self.list(')')?;
                if items.len() == 1 && !trailing {
                    return Err(AlgebraError::ParseError(format!(
                        "one-element tuple needs a trailing comma in {:?}",
                        self.text
                    )));
                }
                Ok(Term::Tuple(items))
            }
            Some(c) if is_ident_start(c) => {
                let mut name = String::new();
                while let Some((_, c)) = self.chars.next_if(|&(_, c)| is_ident_char(c)) {
                    name.push(c);
                }
                if self.eat('(') {
                    let (args, trailing) = self.list(')')?;
                    if trailing {
                        return Err(self.err("argument"));
                    }
                    Ok(Term::App(name, args))
                } else {
                    Ok(Term::Var(name))
                }
            }
            _ => Err(self.err("term")),
        }
    }

    /// Comma-separated terms up to `close`; reports a trailing comma.
    fn list(&mut self, close: char) -> Result<(Vec<Term>, bool), AlgebraError> {
        let mut items = Vec::new();
        if self.eat(close) {
            return Ok((items, false));
        }
        loop {
            items.push(self.term()?);
            if self.eat(close) {
                return Ok((items, false));
            }
            if !self.eat(',') {
                return Err(self.err("',' or closing parenthesis"));
            }
            if self.eat(close) {
                return Ok((items, true));
            }
        }
    }

    fn quoted(&mut self) -> Result<String, AlgebraError> {
        self.chars.next();
        let mut out = String::new();
        loop {
            match self.chars.next() {
                Some((_, '"')) => return Ok(out),
                Some((_, '\\')) => match self.chars.next() {
                    Some((_, c)) => out.push(c),
                    None => return Err(self.err("escaped character")),
                },
                Some((_, c)) => out.push(c),
                None => return Err(self.err("closing quote")),
            }
        }
    }
}

/// Assignment of carrier values to variables.
pub type Valuation = BTreeMap<String, String>;

/// Result of evaluating a term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Atom(String),
    Tuple(Vec<Value>),
}

impl Value {
    pub fn atom(v: impl Into<String>) -> Self {
        Value::Atom(v.into())
    }

    pub fn tuple<S: Into<String>>(vs: impl IntoIterator<Item = S>) -> Self {
        Value::Tuple(vs.into_iter().map(|v| Value::Atom(v.into())).collect())
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Value::Atom(a) => Some(a),
            Value::Tuple(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(a) => f.write_str(a),
            Value::Tuple(vs) => {
                f.write_str("(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Evaluates `t` in `s` under `beta`.
pub fn eval(t: &Term, s: &Structure, beta: &Valuation) -> Result<Value, AlgebraError> {
    s.sort_of(t)?;
    eval_unchecked(t, s, beta)
}

fn eval_unchecked(t: &Term, s: &Structure, beta: &Valuation) -> Result<Value, AlgebraError> {
    match t {
        Term::Var(v) => {
            let value = beta
                .get(v)
                .ok_or_else(|| AlgebraError::UnboundVariable(v.clone()))?;
            let sort = s.signature.variable_sort(v).expect("sort checked");
            if !s.carriers[sort].contains(value) {
                return Err(AlgebraError::ValueOutsideCarrier {
                    value: value.clone(),
                    sort: sort.to_string(),
                });
            }
            Ok(Value::Atom(value.clone()))
        }
        Term::Const(c) => Ok(Value::Atom(c.clone())),
        Term::App(f, args) => {
            let args = args
                .iter()
                .map(|a| match eval_unchecked(a, s, beta)? {
                    Value::Atom(v) => Ok(v),
                    Value::Tuple(_) => unreachable!("well-sorted arguments are atomic"),
                })
                .collect::<Result<Vec<_>, _>>()?;
            s.apply(f, &args).map(Value::atom)
        }
        Term::Tuple(ts) => ts
            .iter()
            .map(|t| eval_unchecked(t, s, beta))
            .collect::<Result<_, _>>()
            .map(Value::Tuple),
    }
}
