//! One-step operational semantics.
//!
//! A running configuration `⟨Q, σ⟩` stores its remaining program `Q` as a
//! stack of statement frames; the top frame is never a block, blocks are
//! flattened when pushed. The extra flag `finished_head` encodes the
//! intermediate configuration `⟨↓; Q, σ⟩` that sits between a statement
//! finishing and its continuation starting. Successful termination with
//! an empty continuation is the distinct configuration [`Configuration::Term`].

mod expr;
mod int;

use std::fmt;

use num_traits::{One, Zero};
use smallvec::SmallVec;
use thiserror::Error;

pub use expr::{eval_arith, eval_bool, ArithExpr, BoolExpr, VarTable};
pub use int::Int;

use crate::frontend::{Objective, Program, Property, Stmt, StmtKind};
use crate::parametric::{Polynomial, RationalFunction};
use crate::Rational;

/// Ranges wider than this are rejected by `unif`.
pub const MAX_UNIFORM_WIDTH: u64 = 1 << 20;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SemanticsError {
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("unif({lo}, {hi}): empty range")]
    EmptyRange { lo: Int, hi: Int },
    #[error("unif({lo}, {hi}): range wider than {MAX_UNIFORM_WIDTH}")]
    RangeTooWide { lo: Int, hi: Int },
    #[error("post-expectation is negative ({0}) in a terminal state")]
    NegativeReward(Int),
}

pub type NodeId = u32;

/// Total map from declared variables to integers, in declaration order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Valuation(Box<[Int]>);

impl Valuation {
    pub fn new(values: Vec<Int>) -> Self {
        Valuation(values.into_boxed_slice())
    }

    pub fn as_slice(&self) -> &[Int] {
        &self.0
    }

    pub fn get(&self, i: usize) -> &Int {
        &self.0[i]
    }

    pub fn with(&self, i: usize, v: Int) -> Valuation {
        let mut out = self.0.clone();
        out[i] = v;
        Valuation(out)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

pub type Frames = SmallVec<[NodeId; 8]>;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RunState {
    /// Remaining statements, innermost (next to execute) last.
    pub frames: Frames,
    /// `true` for `⟨↓; Q, σ⟩`.
    pub finished_head: bool,
    pub vals: Valuation,
}

/// A state of the operational MDP.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Configuration {
    Run(RunState),
    /// `⟨↓, σ⟩`
    Term(Valuation),
    Bad,
    Sink,
}

impl Configuration {
    pub fn valuation(&self) -> Option<&Valuation> {
        match self {
            Configuration::Run(r) => Some(&r.vals),
            Configuration::Term(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    None,
    Left,
    Right,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::None => "none",
            Action::Left => "left",
            Action::Right => "right",
        })
    }
}

/// Symbolic transition weight; resolve with [`CompiledProgram::weight`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Weight {
    One,
    /// Entry of the program's weight table (`g` or `1 - g` of a choice).
    Table(u32),
    /// `1 / n` of an `n`-way uniform assignment.
    Uniform(u64),
}

pub type Distribution = SmallVec<[(Weight, Configuration); 2]>;

/// Enabled actions of a configuration with their successor distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub choices: SmallVec<[(Action, Distribution); 1]>,
}

impl StepResult {
    fn single(weight: Weight, target: Configuration) -> Self {
        let mut dist = Distribution::new();
        dist.push((weight, target));
        Self::dist(dist)
    }

    fn dist(dist: Distribution) -> Self {
        let mut choices = SmallVec::new();
        choices.push((Action::None, dist));
        StepResult { choices }
    }

    pub fn is_nondeterministic(&self) -> bool {
        self.choices.len() > 1
    }
}

#[derive(Clone, Debug)]
pub enum Node {
    Skip,
    Abort,
    Assign(usize, ArithExpr),
    Uniform(usize, ArithExpr, ArithExpr),
    Block(Vec<NodeId>),
    If(BoolExpr, NodeId, NodeId),
    Prob {
        left: NodeId,
        right: NodeId,
        weight: u32,
        complement: u32,
    },
    Nondet(NodeId, NodeId),
    While(BoolExpr, NodeId),
    Observe(BoolExpr),
}

/// What a terminal state is worth for the active property.
#[derive(Clone, Debug)]
pub enum RewardFn {
    /// Post-expectation `f(σ)`.
    Expectation(ArithExpr),
    /// `[σ ⊨ G]`, turning a probability query into an expectation query.
    Indicator(BoolExpr),
}

impl RewardFn {
    pub fn for_property(property: &Property, vars: &VarTable) -> Result<Self, SemanticsError> {
        Ok(match &property.objective {
            Objective::Probability(g) => RewardFn::Indicator(BoolExpr::compile(g, vars)?),
            Objective::Expectation(e) => RewardFn::Expectation(ArithExpr::compile(e, vars)?),
        })
    }

    pub fn eval(&self, sigma: &Valuation) -> Result<Rational, SemanticsError> {
        match self {
            RewardFn::Indicator(g) => Ok(if eval_bool(g, sigma) {
                Rational::one()
            } else {
                Rational::zero()
            }),
            RewardFn::Expectation(e) => {
                let v = eval_arith(e, sigma);
                if v.is_negative() {
                    return Err(SemanticsError::NegativeReward(v));
                }
                Ok(Rational::from_integer(v.to_big()))
            }
        }
    }
}

/// A validated program lowered to an arena of statement nodes.
#[derive(Clone, Debug)]
pub struct CompiledProgram {
    source: Program,
    vars: VarTable,
    nodes: Vec<Node>,
    root: NodeId,
    initial: Valuation,
    weights: Vec<Polynomial>,
    has_nondet: bool,
}

impl CompiledProgram {
    pub fn new(program: &Program) -> Result<Self, SemanticsError> {
        let vars = VarTable::new(program.decls.iter().map(|d| d.name.clone()));
        let initial = Valuation::new(
            program
                .decls
                .iter()
                .map(|d| Int::from_big(d.init.clone()))
                .collect(),
        );
        let mut c = CompiledProgram {
            source: program.clone(),
            vars,
            nodes: Vec::new(),
            root: 0,
            initial,
            weights: Vec::new(),
            has_nondet: false,
        };
        c.root = c.lower(&program.body)?;
        Ok(c)
    }

    fn lower(&mut self, s: &Stmt) -> Result<NodeId, SemanticsError> {
        let id = self.nodes.len() as NodeId;
        self.nodes.push(Node::Skip);
        let node = match &s.kind {
            StmtKind::Skip => Node::Skip,
            StmtKind::Abort => Node::Abort,
            StmtKind::Assign { var, expr } => {
                Node::Assign(self.vars.lookup(var)?, ArithExpr::compile(expr, &self.vars)?)
            }
            StmtKind::Uniform { var, lo, hi } => Node::Uniform(
                self.vars.lookup(var)?,
                ArithExpr::compile(lo, &self.vars)?,
                ArithExpr::compile(hi, &self.vars)?,
            ),
            StmtKind::Block(stmts) if stmts.is_empty() => Node::Skip,
            StmtKind::Block(stmts) if stmts.len() == 1 => {
                self.nodes.pop();
                return self.lower(&stmts[0]);
            }
            StmtKind::Block(stmts) => {
                let mut ids = Vec::with_capacity(stmts.len());
                for st in stmts {
                    ids.push(self.lower(st)?);
                }
                Node::Block(ids)
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = BoolExpr::compile(cond, &self.vars)?;
                let t = self.lower(then_branch)?;
                let e = self.lower(else_branch)?;
                Node::If(c, t, e)
            }
            StmtKind::Prob {
                left,
                weight,
                right,
            } => {
                let w = self.weights.len() as u32;
                self.weights.push(weight.clone());
                self.weights.push(&Polynomial::one() - weight);
                let l = self.lower(left)?;
                let r = self.lower(right)?;
                Node::Prob {
                    left: l,
                    right: r,
                    weight: w,
                    complement: w + 1,
                }
            }
            StmtKind::Nondet { left, right } => {
                self.has_nondet = true;
                let l = self.lower(left)?;
                let r = self.lower(right)?;
                Node::Nondet(l, r)
            }
            StmtKind::While { cond, body } => {
                let c = BoolExpr::compile(cond, &self.vars)?;
                let b = self.lower(body)?;
                Node::While(c, b)
            }
            StmtKind::Observe(cond) => Node::Observe(BoolExpr::compile(cond, &self.vars)?),
        };
        self.nodes[id as usize] = node;
        Ok(id)
    }

    pub fn program(&self) -> &Program {
        &self.source
    }

    pub fn vars(&self) -> &VarTable {
        &self.vars
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn initial_valuation(&self) -> &Valuation {
        &self.initial
    }

    pub fn is_parametric(&self) -> bool {
        !self.source.params.is_empty()
    }

    /// Whether the program text contains a nondeterministic choice.
    pub fn has_nondeterminism(&self) -> bool {
        self.has_nondet
    }

    pub fn weight_table(&self) -> &[Polynomial] {
        &self.weights
    }

    pub fn weight(&self, w: Weight) -> RationalFunction {
        match w {
            Weight::One => RationalFunction::one(),
            Weight::Table(i) => RationalFunction::from_poly(self.weights[i as usize].clone()),
            Weight::Uniform(n) => {
                RationalFunction::constant(Rational::new(1.into(), (n as i64).into()))
            }
        }
    }

    /// Pushes `node` onto a frame stack, flattening blocks.
    pub fn push_frames(&self, frames: &mut Frames, node: NodeId) {
        match &self.nodes[node as usize] {
            Node::Block(children) => {
                for &c in children.iter().rev() {
                    self.push_frames(frames, c);
                }
            }
            _ => frames.push(node),
        }
    }

    /// `⟨P, σ_I⟩`
    pub fn initial_configuration(&self) -> Configuration {
        let mut frames = Frames::new();
        self.push_frames(&mut frames, self.root);
        Configuration::Run(RunState {
            frames,
            finished_head: false,
            vals: self.initial.clone(),
        })
    }

    /// Configuration reached when the top frame finishes with valuation `vals`.
    fn finished(rest: &[NodeId], vals: Valuation) -> Configuration {
        if rest.is_empty() {
            Configuration::Term(vals)
        } else {
            Configuration::Run(RunState {
                frames: Frames::from_slice(rest),
                finished_head: true,
                vals,
            })
        }
    }

    fn replace_top(&self, rest: &[NodeId], node: NodeId, vals: &Valuation) -> Configuration {
        let mut frames = Frames::from_slice(rest);
        self.push_frames(&mut frames, node);
        Configuration::Run(RunState {
            frames,
            finished_head: false,
            vals: vals.clone(),
        })
    }

    /// All SOS successors of `c`.
    pub fn step(&self, c: &Configuration) -> Result<StepResult, SemanticsError> {
        let run = match c {
            Configuration::Run(r) => r,
            Configuration::Term(_) | Configuration::Bad | Configuration::Sink => {
                return Ok(StepResult::single(Weight::One, Configuration::Sink))
            }
        };
        let sigma = &run.vals;
        if run.finished_head {
            // ⟨↓; Q, σ⟩ → ⟨Q, σ⟩
            return Ok(StepResult::single(
                Weight::One,
                Configuration::Run(RunState {
                    frames: run.frames.clone(),
                    finished_head: false,
                    vals: sigma.clone(),
                }),
            ));
        }
        let (&top, rest) = run.frames.split_last().expect("running state has frames");
        Ok(match &self.nodes[top as usize] {
            Node::Skip => StepResult::single(Weight::One, Self::finished(rest, sigma.clone())),
            Node::Abort => StepResult::single(Weight::One, c.clone()),
            Node::Assign(x, e) => {
                let v = eval_arith(e, sigma);
                StepResult::single(Weight::One, Self::finished(rest, sigma.with(*x, v)))
            }
            Node::Observe(g) => {
                if eval_bool(g, sigma) {
                    StepResult::single(Weight::One, Self::finished(rest, sigma.clone()))
                } else {
                    StepResult::single(Weight::One, Configuration::Bad)
                }
            }
            Node::If(g, t, e) => {
                let branch = if eval_bool(g, sigma) { *t } else { *e };
                StepResult::single(Weight::One, self.replace_top(rest, branch, sigma))
            }
            Node::While(g, body) => {
                if eval_bool(g, sigma) {
                    let mut frames = Frames::from_slice(rest);
                    frames.push(top);
                    self.push_frames(&mut frames, *body);
                    StepResult::single(
                        Weight::One,
                        Configuration::Run(RunState {
                            frames,
                            finished_head: false,
                            vals: sigma.clone(),
                        }),
                    )
                } else {
                    StepResult::single(Weight::One, Self::finished(rest, sigma.clone()))
                }
            }
            Node::Prob {
                left,
                right,
                weight,
                complement,
            } => {
                let mut dist = Distribution::new();
                dist.push((Weight::Table(*weight), self.replace_top(rest, *left, sigma)));
                dist.push((Weight::Table(*complement), self.replace_top(rest, *right, sigma)));
                StepResult::dist(dist)
            }
            Node::Nondet(l, r) => {
                let mut choices = SmallVec::new();
                let mut dl = Distribution::new();
                dl.push((Weight::One, self.replace_top(rest, *l, sigma)));
                let mut dr = Distribution::new();
                dr.push((Weight::One, self.replace_top(rest, *r, sigma)));
                choices.push((Action::Left, dl));
                choices.push((Action::Right, dr));
                StepResult { choices }
            }
            Node::Uniform(x, lo, hi) => {
                let lo_v = eval_arith(lo, sigma);
                let hi_v = eval_arith(hi, sigma);
                if lo_v > hi_v {
                    return Err(SemanticsError::EmptyRange { lo: lo_v, hi: hi_v });
                }
                let width = hi_v.sub(&lo_v).add(&Int::Small(1));
                let n = match width.to_i64() {
                    Some(n) if (n as u64) <= MAX_UNIFORM_WIDTH => n as u64,
                    _ => return Err(SemanticsError::RangeTooWide { lo: lo_v, hi: hi_v }),
                };
                let mut dist = Distribution::with_capacity(n as usize);
                let mut v = lo_v;
                for _ in 0..n {
                    dist.push((Weight::Uniform(n), Self::finished(rest, sigma.with(*x, v.clone()))));
                    v = v.add(&Int::Small(1));
                }
                StepResult::dist(dist)
            }
            Node::Block(_) => unreachable!("blocks are flattened when pushed"),
        })
    }

    /// `rew(c)`: the reward function value at a terminal configuration, zero elsewhere.
    pub fn reward(&self, c: &Configuration, f: &RewardFn) -> Result<Rational, SemanticsError> {
        match c {
            Configuration::Term(sigma) => f.eval(sigma),
            _ => Ok(Rational::zero()),
        }
    }

    /// Human-readable rendering used in dumps and diagnostics.
    pub fn describe(&self, c: &Configuration) -> String {
        let vals = |v: &Valuation| {
            self.vars
                .names()
                .iter()
                .zip(v.as_slice())
                .map(|(n, x)| format!("{}={}", n, x))
                .collect::<Vec<_>>()
                .join(",")
        };
        match c {
            Configuration::Run(r) => format!(
                "<{}{:?}, {}>",
                if r.finished_head { "done;" } else { "" },
                r.frames.as_slice(),
                vals(&r.vals)
            ),
            Configuration::Term(v) => format!("<term, {}>", vals(v)),
            Configuration::Bad => "<bad>".to_string(),
            Configuration::Sink => "<sink>".to_string(),
        }
    }
}
