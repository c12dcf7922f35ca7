//! Derivation trees for typing and sorting judgments, rendered as indented
//! text with one judgment per line and the rule name in brackets.

/// A node in a derivation tree. `term` is absent for pure sorting judgments
/// (`ty :: Type j`); `sort` is absent where no sort applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub rule: String,
    pub ctx: String,
    pub term: Option<String>,
    pub ty: String,
    pub sort: Option<u32>,
    pub children: Vec<Derivation>,
}

impl Derivation {
    pub fn judgment(&self) -> String {
        let mut s = format!("{} |- ", self.ctx);
        if let Some(t) = &self.term {
            s.push_str(t);
            s.push_str(" : ");
        }
        s.push_str(&self.ty);
        if let Some(l) = self.sort {
            s.push_str(&format!(" :: Type {l}"));
        }
        s
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(0, &mut out);
        out
    }

    fn render_into(&self, depth: usize, out: &mut String) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        out.push_str(&self.judgment());
        out.push_str(&format!("  [{}]", self.rule));
        out.push('\n');
        for c in &self.children {
            c.render_into(depth + 1, out);
        }
    }

    /// Preorder iterator over all nodes.
    pub fn preorder(&self) -> Vec<&Derivation> {
        let mut out = vec![self];
        let mut stack: Vec<&Derivation> = self.children.iter().rev().collect();
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(n.children.iter().rev());
        }
        out
    }
}
