use std::collections::HashMap;
use std::fmt;

use super::KernelError;

/// Interned constant or variable symbol.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sym(u32);

impl Sym {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Constant,
    /// A variable together with its (global) typecode.
    Variable(Sym),
}

/// Symbol table holding the disjoint sets of constants and variables and the
/// global type function on variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolTable {
    names: Vec<String>,
    kinds: Vec<SymbolKind>,
    index: HashMap<String, Sym>,
}

fn valid_token(name: &str) -> bool {
    !name.is_empty() && !name.contains('$') && name.chars().all(|c| c.is_ascii_graphic())
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, name: &str, kind: SymbolKind) -> Result<Sym, KernelError> {
        if !valid_token(name) {
            return Err(KernelError::BadToken(name.to_string()));
        }
        if self.index.contains_key(name) {
            return Err(KernelError::DuplicateSymbol(name.to_string()));
        }
        let sym = Sym(self.names.len() as u32);
        self.names.push(name.to_string());
        self.kinds.push(kind);
        self.index.insert(name.to_string(), sym);
        Ok(sym)
    }

    pub fn add_constant(&mut self, name: &str) -> Result<Sym, KernelError> {
        self.intern(name, SymbolKind::Constant)
    }

    pub fn add_variable(&mut self, name: &str, typecode: Sym) -> Result<Sym, KernelError> {
        if !self.is_constant(typecode) {
            return Err(KernelError::NotAConstant(self.name(typecode).to_string()));
        }
        self.intern(name, SymbolKind::Variable(typecode))
    }

    pub fn lookup(&self, name: &str) -> Option<Sym> {
        self.index.get(name).copied()
    }

    pub fn name(&self, sym: Sym) -> &str {
        &self.names[sym.index()]
    }

    pub fn kind(&self, sym: Sym) -> SymbolKind {
        self.kinds[sym.index()]
    }

    pub fn is_constant(&self, sym: Sym) -> bool {
        matches!(self.kinds.get(sym.index()), Some(SymbolKind::Constant))
    }

    pub fn is_variable(&self, sym: Sym) -> bool {
        matches!(self.kinds.get(sym.index()), Some(SymbolKind::Variable(_)))
    }

    /// Typecode of a variable, `None` for constants.
    pub fn type_of(&self, sym: Sym) -> Option<Sym> {
        match self.kinds[sym.index()] {
            SymbolKind::Variable(tc) => Some(tc),
            SymbolKind::Constant => None,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// All symbols in declaration order.
    pub fn iter(&self) -> impl Iterator<Item = Sym> + '_ {
        (0..self.names.len() as u32).map(Sym)
    }

    pub fn constants(&self) -> impl Iterator<Item = Sym> + '_ {
        self.iter().filter(|&s| self.is_constant(s))
    }

    pub fn variables(&self) -> impl Iterator<Item = Sym> + '_ {
        self.iter().filter(|&s| self.is_variable(s))
    }

    pub fn display(&self, sym: Sym) -> impl fmt::Display + '_ {
        self.name(sym)
    }
}
