use std::fmt;

use serde::{Deserialize, Serialize};

use super::registry::{Registry, TokenId};
use super::DslError;

/// A straight-line program: one token per statement.
///
/// The same id sequence doubles as the gene of the genetic search.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Program(Vec<TokenId>);

impl Program {
    pub fn new(tokens: Vec<TokenId>) -> Self {
        Program(tokens)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(ids: I) -> Self {
        Program(ids.into_iter().map(TokenId::from).collect())
    }

    /// Parses a comma-separated list of token names, e.g.
    /// `FILTER(>0),MAP(*2),SORT,REVERSE`.
    pub fn parse(text: &str, registry: &Registry) -> Result<Self, DslError> {
        let mut tokens = Vec::new();
        let mut depth = 0i32;
        let mut start = 0;
        for (i, c) in text.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                ',' if depth == 0 => {
                    tokens.push(registry.id_of(&text[start..i])?);
                    start = i + 1;
                }
                _ => {}
            }
        }
        if depth != 0 {
            return Err(DslError::Parse(format!("unbalanced parentheses in `{text}`")));
        }
        if !text[start..].trim().is_empty() || !tokens.is_empty() {
            tokens.push(registry.id_of(&text[start..])?);
        }
        if tokens.is_empty() {
            return Err(DslError::EmptyProgram);
        }
        Ok(Program(tokens))
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.0
    }

    pub fn tokens_mut(&mut self) -> &mut [TokenId] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Copy of this program with statement `pos` replaced by `token`.
    pub fn with_token(&self, pos: usize, token: TokenId) -> Program {
        let mut tokens = self.0.clone();
        tokens[pos] = token;
        Program(tokens)
    }

    /// Fails on empty programs and ids outside the registry.
    pub fn validate(&self, registry: &Registry) -> Result<(), DslError> {
        if self.0.is_empty() {
            return Err(DslError::EmptyProgram);
        }
        match self.0.iter().find(|t| t.index() >= registry.len()) {
            Some(bad) => Err(DslError::InvalidToken { id: bad.0, size: registry.len() }),
            None => Ok(()),
        }
    }

    /// Renders the program with the registry's token names.
    pub fn display<'a>(&'a self, registry: &'a Registry) -> ProgramDisplay<'a> {
        ProgramDisplay { program: self, registry }
    }
}

impl From<Vec<TokenId>> for Program {
    fn from(tokens: Vec<TokenId>) -> Self {
        Program(tokens)
    }
}

pub struct ProgramDisplay<'a> {
    program: &'a Program,
    registry: &'a Registry,
}

impl fmt::Display for ProgramDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.program.tokens().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match self.registry.get(*t) {
                Some(spec) => f.write_str(&spec.name)?,
                None => write!(f, "#{}", t.0)?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let reg = Registry::deepcoder();
        let p = Program::parse("FILTER(>0),MAP(*2), SORT ,REVERSE", &reg).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.display(&reg).to_string(), "FILTER(>0),MAP(*2),SORT,REVERSE");
        let q = Program::parse("MAP(*(-1)),ZIPWITH(min)", &reg).unwrap();
        assert_eq!(q.display(&reg).to_string(), "MAP(*(-1)),ZIPWITH(min)");
    }

    #[test]
    fn parse_errors() {
        let reg = Registry::deepcoder();
        assert!(matches!(Program::parse("", &reg), Err(DslError::EmptyProgram)));
        assert!(matches!(Program::parse("SORT,FROB", &reg), Err(DslError::UnknownToken(_))));
        assert!(Program::parse("MAP(*2", &reg).is_err());
        assert!(Program::parse("SORT,", &reg).is_err());
    }

    #[test]
    fn validate_ids() {
        let reg = Registry::deepcoder();
        assert!(Program::from_indices([0, 37]).validate(&reg).is_ok());
        assert!(matches!(
            Program::from_indices([38]).validate(&reg),
            Err(DslError::InvalidToken { id: 38, size: 38 })
        ));
    }
}
