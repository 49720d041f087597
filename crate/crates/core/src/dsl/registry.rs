//! Token registry: the finite set of DSL functions (with bound lambdas) that
//! programs are built from.
//!
//! A registry is data. Each line of a registry file reads
//! `id<TAB>name<TAB>argTypes<TAB>retType`, where the name determines the
//! semantics (`MAP(*2)`, `FILTER(even)`, `ZIPWITH(max)`, ...) and the declared
//! types must agree with it. Ids are dense and start at zero.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::value::{saturate, ValueType};
use super::DslError;

const DEFAULT_REGISTRY: &str = include_str!("../../data/deepcoder.tsv");

/// Index of a token in its registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u16);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for TokenId {
    fn from(i: usize) -> Self {
        TokenId(i as u16)
    }
}

/// Element-wise function used by `MAP`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapFn {
    Add(i32),
    Mul(i32),
    /// Truncating division by a non-zero literal.
    Div(i32),
    Square,
}

impl MapFn {
    pub fn apply(self, x: i32) -> i32 {
        let x = x as i64;
        saturate(match self {
            MapFn::Add(k) => x + k as i64,
            MapFn::Mul(k) => x * k as i64,
            MapFn::Div(k) => x / k as i64,
            MapFn::Square => x * x,
        })
    }

    fn parse(s: &str) -> Result<Self, DslError> {
        let bad = || DslError::Parse(format!("unknown map lambda `{s}`"));
        let literal = |t: &str| -> Result<i32, DslError> {
            let t = t.trim();
            let t = t
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .unwrap_or(t);
            t.parse::<i32>().map_err(|_| bad())
        };
        if let Some(rest) = s.strip_prefix("**") {
            return if rest.trim() == "2" { Ok(MapFn::Square) } else { Err(bad()) };
        }
        if let Some(rest) = s.strip_prefix('*') {
            return Ok(MapFn::Mul(literal(rest)?));
        }
        if let Some(rest) = s.strip_prefix('/') {
            let k = literal(rest)?;
            return if k == 0 { Err(bad()) } else { Ok(MapFn::Div(k)) };
        }
        if let Some(rest) = s.strip_prefix('+') {
            return Ok(MapFn::Add(literal(rest)?));
        }
        if let Some(rest) = s.strip_prefix('-') {
            return Ok(MapFn::Add(-literal(rest)?));
        }
        Err(bad())
    }
}

/// Predicate used by `FILTER` and `COUNT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predicate {
    Positive,
    Negative,
    Even,
    Odd,
}

impl Predicate {
    pub fn test(self, x: i32) -> bool {
        match self {
            Predicate::Positive => x > 0,
            Predicate::Negative => x < 0,
            Predicate::Even => x % 2 == 0,
            Predicate::Odd => x % 2 != 0,
        }
    }

    fn parse(s: &str) -> Result<Self, DslError> {
        match s {
            ">0" => Ok(Predicate::Positive),
            "<0" => Ok(Predicate::Negative),
            "even" | "%2==0" => Ok(Predicate::Even),
            "odd" | "%2==1" => Ok(Predicate::Odd),
            _ => Err(DslError::Parse(format!("unknown predicate `{s}`"))),
        }
    }
}

/// Binary operator used by `ZIPWITH` and `SCANL1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Min,
    Max,
}

impl BinOp {
    pub fn apply(self, a: i32, b: i32) -> i32 {
        match self {
            BinOp::Add => a.saturating_add(b),
            BinOp::Sub => a.saturating_sub(b),
            BinOp::Mul => a.saturating_mul(b),
            BinOp::Min => a.min(b),
            BinOp::Max => a.max(b),
        }
    }

    fn parse(s: &str) -> Result<Self, DslError> {
        match s {
            "+" => Ok(BinOp::Add),
            "-" => Ok(BinOp::Sub),
            "*" => Ok(BinOp::Mul),
            "min" | "MIN" => Ok(BinOp::Min),
            "max" | "MAX" => Ok(BinOp::Max),
            _ => Err(DslError::Parse(format!("unknown binary operator `{s}`"))),
        }
    }
}

/// Where `TAKE`/`DROP`/`ACCESS` get their index from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexArg {
    /// Bound by dataflow like any other INT argument.
    Dataflow,
    /// A literal baked into the token, e.g. `DROP(2)`.
    Literal(i32),
}

/// Which base function (and bound lambda) a token denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Semantic {
    Head,
    Last,
    Take(IndexArg),
    Drop(IndexArg),
    Access(IndexArg),
    Minimum,
    Maximum,
    Reverse,
    Sort,
    Sum,
    Map(MapFn),
    Filter(Predicate),
    Count(Predicate),
    ZipWith(BinOp),
    Scanl1(BinOp),
}

impl Semantic {
    pub fn arg_types(self) -> &'static [ValueType] {
        use ValueType::*;
        match self {
            Semantic::Take(IndexArg::Dataflow)
            | Semantic::Drop(IndexArg::Dataflow)
            | Semantic::Access(IndexArg::Dataflow) => &[Int, List],
            Semantic::ZipWith(_) => &[List, List],
            _ => &[List],
        }
    }

    pub fn return_type(self) -> ValueType {
        match self {
            Semantic::Head
            | Semantic::Last
            | Semantic::Access(_)
            | Semantic::Minimum
            | Semantic::Maximum
            | Semantic::Sum
            | Semantic::Count(_) => ValueType::Int,
            _ => ValueType::List,
        }
    }

    /// Derives the semantics from a display name such as `MAP(*2)` or `DROP(2)`.
    pub fn from_name(name: &str) -> Result<Self, DslError> {
        let name = name.trim();
        let (base, arg) = match name.find('(') {
            Some(open) => {
                let inner = name[open + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| DslError::Parse(format!("unbalanced token name `{name}`")))?;
                (&name[..open], Some(inner.trim()))
            }
            None => (name, None),
        };
        let index_arg = |arg: Option<&str>| -> Result<IndexArg, DslError> {
            match arg {
                None => Ok(IndexArg::Dataflow),
                Some(a) => a
                    .parse::<i32>()
                    .map(IndexArg::Literal)
                    .map_err(|_| DslError::Parse(format!("bad literal in `{name}`"))),
            }
        };
        let lambda = arg.ok_or_else(|| DslError::Parse(format!("`{name}` needs a lambda")));
        let plain = |s: Semantic| {
            if arg.is_some() {
                Err(DslError::Parse(format!("`{base}` takes no lambda")))
            } else {
                Ok(s)
            }
        };
        match base.trim().to_ascii_uppercase().as_str() {
            "HEAD" => plain(Semantic::Head),
            "LAST" => plain(Semantic::Last),
            "MINIMUM" => plain(Semantic::Minimum),
            "MAXIMUM" => plain(Semantic::Maximum),
            "REVERSE" => plain(Semantic::Reverse),
            "SORT" => plain(Semantic::Sort),
            "SUM" => plain(Semantic::Sum),
            "TAKE" => Ok(Semantic::Take(index_arg(arg)?)),
            "DROP" => Ok(Semantic::Drop(index_arg(arg)?)),
            "ACCESS" => Ok(Semantic::Access(index_arg(arg)?)),
            "MAP" => Ok(Semantic::Map(MapFn::parse(lambda?)?)),
            "FILTER" => Ok(Semantic::Filter(Predicate::parse(lambda?)?)),
            "COUNT" => Ok(Semantic::Count(Predicate::parse(lambda?)?)),
            "ZIPWITH" => Ok(Semantic::ZipWith(BinOp::parse(lambda?)?)),
            "SCANL1" => Ok(Semantic::Scanl1(BinOp::parse(lambda?)?)),
            _ => Err(DslError::Parse(format!("unknown function `{base}`"))),
        }
    }
}

/// One registry entry.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSpec {
    pub id: TokenId,
    pub name: String,
    pub arg_types: Vec<ValueType>,
    pub ret_type: ValueType,
    pub semantic: Semantic,
}

impl TokenSpec {
    pub fn arity(&self) -> usize {
        self.arg_types.len()
    }
}

/// Immutable token table. Cheap to share across threads by reference.
#[derive(Debug, Clone)]
pub struct Registry {
    tokens: Vec<TokenSpec>,
    by_name: HashMap<String, TokenId>,
    hash: u64,
}

impl Registry {
    /// The 38-token list-manipulation registry.
    pub fn deepcoder() -> Self {
        Self::parse(DEFAULT_REGISTRY).expect("built-in registry is well formed")
    }

    pub fn load(path: &Path) -> Result<Self, DslError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DslError::Registry(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, DslError> {
        let mut tokens = Vec::new();
        let mut by_name = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| DslError::Registry(format!("line {}: {msg}", lineno + 1));
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(err(format!("expected 4 tab-separated fields, got {}", fields.len())));
            }
            let id: usize = fields[0]
                .trim()
                .parse()
                .map_err(|_| err(format!("bad id `{}`", fields[0])))?;
            if id != tokens.len() {
                return Err(err(format!("ids must be dense; expected {}, got {id}", tokens.len())));
            }
            let name = fields[1].trim().to_string();
            let semantic = Semantic::from_name(&name).map_err(|e| err(e.to_string()))?;
            let arg_types = fields[2]
                .split(',')
                .map(str::parse)
                .collect::<Result<Vec<ValueType>, _>>()
                .map_err(|e| err(e.to_string()))?;
            let ret_type: ValueType = fields[3].parse().map_err(|e: DslError| err(e.to_string()))?;
            if arg_types != semantic.arg_types() || ret_type != semantic.return_type() {
                return Err(err(format!("declared types of `{name}` disagree with its semantics")));
            }
            if by_name.insert(name.clone(), TokenId::from(id)).is_some() {
                return Err(err(format!("duplicate token `{name}`")));
            }
            tokens.push(TokenSpec { id: TokenId::from(id), name, arg_types, ret_type, semantic });
        }
        if tokens.len() < 2 {
            return Err(DslError::Registry("a registry needs at least two tokens".into()));
        }
        if tokens.len() > u16::MAX as usize {
            return Err(DslError::Registry("too many tokens".into()));
        }
        Ok(Registry { tokens, by_name, hash: fnv1a64(text.as_bytes()) })
    }

    /// Returns a copy with extra tokens appended (ids continue densely).
    pub fn extended<S: AsRef<str>>(&self, names: &[S]) -> Result<Self, DslError> {
        let text = self.to_file_string()
            + &names
                .iter()
                .enumerate()
                .map(|(i, name)| {
                    let semantic = Semantic::from_name(name.as_ref())?;
                    Ok(format_line(self.len() + i, name.as_ref(), semantic))
                })
                .collect::<Result<String, DslError>>()?;
        Self::parse(&text)
    }

    /// Restricts the registry to the named tokens, renumbering ids densely.
    pub fn subset<S: AsRef<str>>(&self, names: &[S]) -> Result<Self, DslError> {
        let mut text = String::new();
        for (i, name) in names.iter().enumerate() {
            let id = self.id_of(name.as_ref())?;
            text += &format_line(i, &self.tokens[id.index()].name, self.tokens[id.index()].semantic);
        }
        Self::parse(&text)
    }

    /// Serializes back into the registry file format.
    pub fn to_file_string(&self) -> String {
        self.tokens
            .iter()
            .map(|t| format_line(t.id.index(), &t.name, t.semantic))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, id: TokenId) -> Option<&TokenSpec> {
        self.tokens.get(id.index())
    }

    pub fn token(&self, id: TokenId) -> &TokenSpec {
        &self.tokens[id.index()]
    }

    pub fn tokens(&self) -> &[TokenSpec] {
        &self.tokens
    }

    pub fn ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        (0..self.tokens.len()).map(TokenId::from)
    }

    pub fn id_of(&self, name: &str) -> Result<TokenId, DslError> {
        self.by_name
            .get(name.trim())
            .copied()
            .ok_or_else(|| DslError::UnknownToken(name.trim().to_string()))
    }

    /// 64-bit FNV-1a of the registry file bytes this registry was parsed from.
    pub fn hash(&self) -> u64 {
        self.hash
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::deepcoder()
    }
}

impl fmt::Display for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_file_string())
    }
}

fn format_line(id: usize, name: &str, semantic: Semantic) -> String {
    let args: Vec<String> = semantic.arg_types().iter().map(|t| t.to_string()).collect();
    format!("{id}\t{name}\t{}\t{}\n", args.join(","), semantic.return_type())
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}
