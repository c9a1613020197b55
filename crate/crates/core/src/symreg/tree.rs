//! Derivation trees over the controller grammar:
//!
//! ```text
//! strt  ::= const + expr | const * expr | const + const * expr
//! expr  ::= lin | pol | 0.5 sgn(lin) + 0.5 + expr | 0.5 sgn(pol) + 0.5 + expr
//! lin   ::= const * x1 + ... + const * xn
//! pol   ::= pol + pol | const * mon
//! mon   ::= var | var * mon
//! var   ::= x1 | ... | xn
//! const ::= real, initially uniform in [-1, 1]
//! ```

use std::fmt::{self, Write as _};

use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Symbol {
    Strt,
    Expr,
    Lin,
    Pol,
    Mon,
    Var,
    Const,
}

impl Symbol {
    /// Height of the shallowest complete derivation from this symbol.
    pub fn min_height(self) -> usize {
        match self {
            Symbol::Const | Symbol::Var => 1,
            Symbol::Mon | Symbol::Lin => 2,
            Symbol::Pol | Symbol::Expr => 3,
            Symbol::Strt => 4,
        }
    }

    fn rule_count(self, vars: usize) -> usize {
        match self {
            Symbol::Strt => 3,
            Symbol::Expr => 4,
            Symbol::Lin | Symbol::Const => 1,
            Symbol::Pol | Symbol::Mon => 2,
            Symbol::Var => vars,
        }
    }

    /// Right-hand-side nonterminals of `rule`.
    fn rhs(self, rule: usize, vars: usize) -> Vec<Symbol> {
        use Symbol::*;
        match (self, rule) {
            (Strt, 0) | (Strt, 1) => vec![Const, Expr],
            (Strt, _) => vec![Const, Const, Expr],
            (Expr, 0) => vec![Lin],
            (Expr, 1) => vec![Pol],
            (Expr, 2) => vec![Lin, Expr],
            (Expr, _) => vec![Pol, Expr],
            (Lin, _) => vec![Const; vars],
            (Pol, 0) => vec![Pol, Pol],
            (Pol, _) => vec![Const, Mon],
            (Mon, 0) => vec![Var],
            (Mon, _) => vec![Var, Mon],
            (Var, _) | (Const, _) => vec![],
        }
    }

    fn rule_min_height(self, rule: usize, vars: usize) -> usize {
        1 + self
            .rhs(rule, vars)
            .iter()
            .map(|s| s.min_height())
            .max()
            .unwrap_or(0)
    }
}

/// One derivation step. `rule` is the production index, or the variable
/// index for [`Symbol::Var`]; `value` is used by [`Symbol::Const`] only.
#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub symbol: Symbol,
    pub rule: usize,
    pub value: f64,
    pub children: Vec<Node>,
}

impl Node {
    /// Random derivation of `symbol` no taller than `budget`, choosing
    /// uniformly among the productions that fit.
    pub fn grow<R: Rng + ?Sized>(symbol: Symbol, budget: usize, vars: usize, rng: &mut R) -> Node {
        assert!(budget >= symbol.min_height(), "budget below the minimum height of {symbol:?}");
        if symbol == Symbol::Const {
            return Node::constant(rng.random_range(-1.0..=1.0));
        }
        let fits: Vec<usize> = (0..symbol.rule_count(vars))
            .filter(|&r| symbol.rule_min_height(r, vars) <= budget)
            .collect();
        let rule = fits[rng.random_range(0..fits.len())];
        let children = symbol
            .rhs(rule, vars)
            .into_iter()
            .map(|s| Node::grow(s, budget - 1, vars, rng))
            .collect();
        Node {
            symbol,
            rule,
            value: 0.0,
            children,
        }
    }

    pub fn constant(value: f64) -> Node {
        Node {
            symbol: Symbol::Const,
            rule: 0,
            value,
            children: Vec::new(),
        }
    }

    pub fn height(&self) -> usize {
        1 + self.children.iter().map(Node::height).max().unwrap_or(0)
    }

    /// Whether this subtree is a complete derivation of its symbol over
    /// `vars` variables.
    pub fn is_derivation(&self, vars: usize) -> bool {
        if self.rule >= self.symbol.rule_count(vars) {
            return false;
        }
        let rhs = self.symbol.rhs(self.rule, vars);
        rhs.len() == self.children.len()
            && rhs.iter().zip(&self.children).all(|(s, c)| c.symbol == *s && c.is_derivation(vars))
            && (self.symbol != Symbol::Const || self.value.is_finite())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let c = &self.children;
        match (self.symbol, self.rule) {
            (Symbol::Const, _) => self.value,
            (Symbol::Var, i) => x[i],
            (Symbol::Strt, 0) => c[0].eval(x) + c[1].eval(x),
            (Symbol::Strt, 1) => c[0].eval(x) * c[1].eval(x),
            (Symbol::Strt, _) => c[0].eval(x) + c[1].eval(x) * c[2].eval(x),
            (Symbol::Expr, 0) | (Symbol::Expr, 1) => c[0].eval(x),
            (Symbol::Expr, _) => 0.5 * sgn(c[0].eval(x)) + 0.5 + c[1].eval(x),
            (Symbol::Lin, _) => c
                .iter()
                .zip(x)
                .map(|(k, xi)| k.value * xi)
                .reduce(|a, b| a + b)
                .unwrap_or(0.0),
            (Symbol::Pol, 0) => c[0].eval(x) + c[1].eval(x),
            (Symbol::Pol, _) => c[0].eval(x) * c[1].eval(x),
            (Symbol::Mon, 0) => c[0].eval(x),
            (Symbol::Mon, _) => c[0].eval(x) * c[1].eval(x),
        }
    }

    /// Constants in depth-first order.
    pub fn constants(&self, out: &mut Vec<f64>) {
        if self.symbol == Symbol::Const {
            out.push(self.value);
        }
        for c in &self.children {
            c.constants(out);
        }
    }

    /// Overwrites the constants in depth-first order; returns how many were
    /// consumed.
    pub fn set_constants(&mut self, values: &[f64]) -> usize {
        if self.symbol == Symbol::Const {
            self.value = values[0];
            return 1;
        }
        let mut used = 0;
        for c in &mut self.children {
            used += c.set_constants(&values[used..]);
        }
        used
    }

    /// Every subtree as (path from the root, symbol, depth of its root).
    pub fn positions(&self) -> Vec<(Vec<usize>, Symbol, usize)> {
        fn walk(n: &Node, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, Symbol, usize)>) {
            out.push((path.clone(), n.symbol, path.len() + 1));
            for (i, c) in n.children.iter().enumerate() {
                path.push(i);
                walk(c, path, out);
                path.pop();
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn at(&self, path: &[usize]) -> &Node {
        path.iter().fold(self, |n, &i| &n.children[i])
    }

    pub fn at_mut(&mut self, path: &[usize]) -> &mut Node {
        path.iter().fold(self, |n, &i| &mut n.children[i])
    }

    fn write(&self, f: &mut String) {
        let c = &self.children;
        match (self.symbol, self.rule) {
            (Symbol::Const, _) => write!(f, "{}", self.value).unwrap(),
            (Symbol::Var, i) => write!(f, "x{}", i + 1).unwrap(),
            (Symbol::Strt, 0) | (Symbol::Pol, 0) => self.binary(f, " + ", &c[0], &c[1]),
            (Symbol::Strt, 1) | (Symbol::Pol, _) | (Symbol::Mon, 1..) => self.binary(f, " * ", &c[0], &c[1]),
            (Symbol::Strt, _) => {
                f.push('(');
                c[0].write(f);
                f.push_str(" + ");
                self.binary(f, " * ", &c[1], &c[2]);
                f.push(')');
            }
            (Symbol::Expr, 0) | (Symbol::Expr, 1) | (Symbol::Mon, 0) => c[0].write(f),
            (Symbol::Expr, _) => {
                f.push_str("(0.5 * sgn(");
                c[0].write(f);
                f.push_str(") + 0.5 + ");
                c[1].write(f);
                f.push(')');
            }
            (Symbol::Lin, _) => {
                f.push('(');
                for (i, k) in c.iter().enumerate() {
                    if i > 0 {
                        f.push_str(" + ");
                    }
                    write!(f, "{} * x{}", k.value, i + 1).unwrap();
                }
                f.push(')');
            }
        }
    }

    fn binary(&self, f: &mut String, op: &str, a: &Node, b: &Node) {
        f.push('(');
        a.write(f);
        f.push_str(op);
        b.write(f);
        f.push(')');
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write(&mut s);
        f.write_str(&s)
    }
}

/// Signum with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else if x.is_nan() {
        f64::NAN
    } else {
        0.0
    }
}

/// One expression per input dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Genotype {
    pub trees: Vec<Node>,
    pub vars: usize,
}

impl Genotype {
    pub fn random<R: Rng + ?Sized>(outputs: usize, vars: usize, max_depth: usize, rng: &mut R) -> Self {
        Genotype {
            trees: (0..outputs).map(|_| Node::grow(Symbol::Strt, max_depth, vars, rng)).collect(),
            vars,
        }
    }

    pub fn eval(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.trees.iter().map(|t| t.eval(x)));
    }

    pub fn height(&self) -> usize {
        self.trees.iter().map(Node::height).max().unwrap_or(0)
    }

    pub fn is_valid(&self, max_depth: usize) -> bool {
        self.trees
            .iter()
            .all(|t| t.symbol == Symbol::Strt && t.is_derivation(self.vars) && t.height() <= max_depth)
    }

    pub fn constants(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for t in &self.trees {
            t.constants(&mut out);
        }
        out
    }

    pub fn set_constants(&mut self, values: &[f64]) {
        let mut used = 0;
        for t in &mut self.trees {
            used += t.set_constants(&values[used..]);
        }
        debug_assert_eq!(used, values.len());
    }

    /// Swaps a random pair of same-symbol subtrees between the two
    /// genotypes, keeping both within `max_depth`. Returns whether a swap
    /// happened.
    pub fn crossover<R: Rng + ?Sized>(&mut self, other: &mut Genotype, max_depth: usize, rng: &mut R) -> bool {
        let k = rng.random_range(0..self.trees.len());
        let (a, b) = (&self.trees[k], &other.trees[k]);
        let pa: Vec<_> = a.positions().into_iter().filter(|p| !p.0.is_empty()).collect();
        let pb: Vec<_> = b.positions().into_iter().filter(|p| !p.0.is_empty()).collect();
        let hb: Vec<usize> = pb.iter().map(|p| b.at(&p.0).height()).collect();
        let mut pairs = Vec::new();
        for (i, (path_a, sym_a, depth_a)) in pa.iter().enumerate() {
            let ha = a.at(path_a).height();
            for (j, (_, sym_b, depth_b)) in pb.iter().enumerate() {
                if sym_a == sym_b && depth_a - 1 + hb[j] <= max_depth && depth_b - 1 + ha <= max_depth {
                    pairs.push((i, j));
                }
            }
        }
        if pairs.is_empty() {
            return false;
        }
        let (i, j) = pairs[rng.random_range(0..pairs.len())];
        std::mem::swap(self.trees[k].at_mut(&pa[i].0), other.trees[k].at_mut(&pb[j].0));
        true
    }

    /// Regrows a random subtree within `max_depth`.
    pub fn mutate<R: Rng + ?Sized>(&mut self, max_depth: usize, rng: &mut R) {
        let vars = self.vars;
        let k = rng.random_range(0..self.trees.len());
        let positions = self.trees[k].positions();
        let (path, symbol, depth) = &positions[rng.random_range(0..positions.len())];
        *self.trees[k].at_mut(path) = Node::grow(*symbol, max_depth + 1 - depth, vars, rng);
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.trees.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}
