//! Ordered typing contexts with innermost-wins lookup.

/// One context entry: a term variable with its type, or a type variable with
/// its universe level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CtxEntry<T> {
    Term(String, T),
    TyVar(String, u32),
}

/// An ordered context. Shadowing is permitted; lookup returns the innermost
/// binding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypingContext<T> {
    entries: Vec<CtxEntry<T>>,
}

impl<T> Default for TypingContext<T> {
    fn default() -> Self {
        TypingContext { entries: Vec::new() }
    }
}

impl<T> TypingContext<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_term(&mut self, name: impl Into<String>, ty: T) {
        self.entries.push(CtxEntry::Term(name.into(), ty));
    }

    pub fn push_ty_var(&mut self, name: impl Into<String>, level: u32) {
        self.entries.push(CtxEntry::TyVar(name.into(), level));
    }

    pub fn pop(&mut self) {
        self.entries.pop();
    }

    pub fn lookup_term(&self, name: &str) -> Option<&T> {
        self.entries.iter().rev().find_map(|e| match e {
            CtxEntry::Term(n, t) if n == name => Some(t),
            _ => None,
        })
    }

    pub fn lookup_ty_var(&self, name: &str) -> Option<u32> {
        self.entries.iter().rev().find_map(|e| match e {
            CtxEntry::TyVar(n, l) if n == name => Some(*l),
            _ => None,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[CtxEntry<T>] {
        &self.entries
    }

    pub fn term_names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().filter_map(|e| match e {
            CtxEntry::Term(n, _) => Some(n.as_str()),
            _ => None,
        })
    }
}

impl<T: std::fmt::Display> TypingContext<T> {
    /// Rendering used in derivation trees: `.` for the empty context.
    pub fn render(&self) -> String {
        if self.entries.is_empty() {
            return ".".into();
        }
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|e| match e {
                CtxEntry::Term(n, t) => format!("{n} : {t}"),
                CtxEntry::TyVar(n, l) => format!("{n} : Type {l}"),
            })
            .collect();
        parts.join(", ")
    }
}
