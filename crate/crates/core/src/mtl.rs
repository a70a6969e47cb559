//! Metric temporal logic over sampled traces.
//!
//! Concrete syntax:
//!
//! ```text
//! formula  := unary ('&' unary)*
//! unary    := '!' unary | ('G' | 'F') interval unary | '(' formula ')' | atom
//! interval := '[' point ',' point ']'
//! point    := label '.ts' | label '.te' | number
//! atom     := ident [ '(' term (',' term)* ')' ]
//! ```
//!
//! `G` is "always", `F` is "eventually". `&` is left-associative and `!`
//! binds tightest. Interval endpoints name an action's start (`ts`) or end
//! (`te`), or give seconds directly. Intervals are closed.
//!
//! Evaluation is over discrete samples: `G[l,u] φ` holds iff φ holds at
//! every sample with `l <= t <= u`, `F[l,u] φ` iff φ holds at some such
//! sample. Intervals are absolute, so a temporal subformula has the same
//! value at every instant; connectives are evaluated pointwise.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{is_ident_char, is_ident_start, Atom};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Start,
    End,
}

/// One end of an interval before grounding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimePoint {
    Action { action: String, endpoint: Endpoint },
    Seconds(f64),
}

impl TimePoint {
    pub fn start(action: &str) -> Self {
        TimePoint::Action {
            action: action.to_string(),
            endpoint: Endpoint::Start,
        }
    }

    pub fn end(action: &str) -> Self {
        TimePoint::Action {
            action: action.to_string(),
            endpoint: Endpoint::End,
        }
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimePoint::Action { action, endpoint } => {
                let e = match endpoint {
                    Endpoint::Start => "ts",
                    Endpoint::End => "te",
                };
                write!(f, "{action}.{e}")
            }
            TimePoint::Seconds(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolicInterval {
    pub lo: TimePoint,
    pub hi: TimePoint,
}

impl fmt::Display for SymbolicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// A grounded closed interval in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeInterval {
    pub lo: f64,
    pub hi: f64,
}

impl TimeInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        TimeInterval { lo, hi }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    pub fn length(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }
}

/// Millisecond precision, matching exported outcome documents.
impl fmt::Display for TimeInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.3},{:.3}]", self.lo, self.hi)
    }
}

/// MTL formula tree, generic over the interval representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula<I = SymbolicInterval> {
    Atom(Atom),
    Not(Box<Formula<I>>),
    And(Box<Formula<I>>, Box<Formula<I>>),
    Always(I, Box<Formula<I>>),
    Eventually(I, Box<Formula<I>>),
}

pub type GroundFormula = Formula<TimeInterval>;

impl<I> Formula<I> {
    pub fn atom(a: Atom) -> Self {
        Formula::Atom(a)
    }

    pub fn not(f: Self) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Self, r: Self) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn always(i: I, f: Self) -> Self {
        Formula::Always(i, Box::new(f))
    }

    pub fn eventually(i: I, f: Self) -> Self {
        Formula::Eventually(i, Box::new(f))
    }

    /// Rebuilds the tree with every interval mapped by `g`.
    pub fn try_map_intervals<J, E>(
        &self,
        g: &mut impl FnMut(&I) -> std::result::Result<J, E>,
    ) -> std::result::Result<Formula<J>, E> {
        Ok(match self {
            Formula::Atom(a) => Formula::Atom(a.clone()),
            Formula::Not(f) => Formula::Not(Box::new(f.try_map_intervals(g)?)),
            Formula::And(l, r) => Formula::And(
                Box::new(l.try_map_intervals(g)?),
                Box::new(r.try_map_intervals(g)?),
            ),
            Formula::Always(i, f) => Formula::Always(g(i)?, Box::new(f.try_map_intervals(g)?)),
            Formula::Eventually(i, f) => {
                Formula::Eventually(g(i)?, Box::new(f.try_map_intervals(g)?))
            }
        })
    }

    pub fn map_atoms(&self, g: &impl Fn(&Atom) -> Atom) -> Formula<I>
    where
        I: Clone,
    {
        match self {
            Formula::Atom(a) => Formula::Atom(g(a)),
            Formula::Not(f) => Formula::not(f.map_atoms(g)),
            Formula::And(l, r) => Formula::and(l.map_atoms(g), r.map_atoms(g)),
            Formula::Always(i, f) => Formula::always(i.clone(), f.map_atoms(g)),
            Formula::Eventually(i, f) => Formula::eventually(i.clone(), f.map_atoms(g)),
        }
    }

    fn visit_atoms<'a>(&'a self, out: &mut BTreeSet<&'a Atom>) {
        match self {
            Formula::Atom(a) => {
                out.insert(a);
            }
            Formula::Not(f) | Formula::Always(_, f) | Formula::Eventually(_, f) => {
                f.visit_atoms(out)
            }
            Formula::And(l, r) => {
                l.visit_atoms(out);
                r.visit_atoms(out);
            }
        }
    }

    /// Splits top-level conjunctions into their conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Formula<I>> {
        match self {
            Formula::And(l, r) => {
                let mut v = l.conjuncts();
                v.extend(r.conjuncts());
                v
            }
            other => vec![other],
        }
    }

    /// Every temporal operator with its interval and body, pre-order.
    pub fn temporal_nodes(&self) -> Vec<(&I, &Formula<I>, bool)> {
        let mut out = Vec::new();
        self.collect_temporal(&mut out);
        out
    }

    fn collect_temporal<'a>(&'a self, out: &mut Vec<(&'a I, &'a Formula<I>, bool)>) {
        match self {
            Formula::Atom(_) => {}
            Formula::Not(f) => f.collect_temporal(out),
            Formula::And(l, r) => {
                l.collect_temporal(out);
                r.collect_temporal(out);
            }
            Formula::Always(i, f) => {
                out.push((i, f, false));
                f.collect_temporal(out);
            }
            Formula::Eventually(i, f) => {
                out.push((i, f, true));
                f.collect_temporal(out);
            }
        }
    }
}

/// The set of atoms appearing anywhere in `f`.
pub fn extract_propositions<I>(f: &Formula<I>) -> BTreeSet<Atom> {
    let mut set = BTreeSet::new();
    f.visit_atoms(&mut set);
    set.into_iter().cloned().collect()
}

/// Intervals of every eventually node, in document order, duplicates kept.
pub fn extract_eoi_intervals<I: Clone>(f: &Formula<I>) -> Vec<I> {
    f.temporal_nodes()
        .into_iter()
        .filter(|(_, _, ev)| *ev)
        .map(|(i, _, _)| i.clone())
        .collect()
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

impl<I: fmt::Display> fmt::Display for Formula<I> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(inner) => match **inner {
                Formula::And(..) => write!(f, "!({inner})"),
                _ => write!(f, "!{inner}"),
            },
            Formula::And(l, r) => {
                write!(f, "{l} & ")?;
                match **r {
                    Formula::And(..) => write!(f, "({r})"),
                    _ => write!(f, "{r}"),
                }
            }
            Formula::Always(i, inner) => write!(f, "G{i}({inner})"),
            Formula::Eventually(i, inner) => write!(f, "F{i}({inner})"),
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, at: usize, message: impl Into<String>) -> Error {
        let before = &self.src[..at.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Error::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_raw() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek_raw(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.peek_raw()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(d) if d == c => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(d) => Err(self.error(self.pos, format!("expected `{c}`, found `{d}`"))),
            None => Err(self.error(self.pos, format!("expected `{c}`, found end of input"))),
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        match self.peek_raw() {
            Some(c) if is_ident_start(c) => {}
            Some(c) => return Err(self.error(start, format!("unexpected `{c}`"))),
            None => return Err(self.error(start, "unexpected end of input")),
        }
        while let Some(c) = self.peek_raw() {
            if is_ident_char(c) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn term(&mut self) -> Result<String> {
        self.skip_ws();
        if self.peek_raw() == Some('?') {
            self.pos += 1;
            Ok(format!("?{}", self.ident()?))
        } else {
            self.ident()
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while self.peek() == Some('&') {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek() {
            Some('!') => {
                self.pos += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some('(') => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(')')?;
                Ok(f)
            }
            Some(_) => {
                let name = self.ident()?;
                if (name == "G" || name == "F") && self.peek() == Some('[') {
                    let interval = self.interval()?;
                    let body = self.unary()?;
                    return Ok(if name == "G" {
                        Formula::always(interval, body)
                    } else {
                        Formula::eventually(interval, body)
                    });
                }
                let mut args = Vec::new();
                if self.peek() == Some('(') {
                    self.pos += 1;
                    loop {
                        args.push(self.term()?);
                        match self.peek() {
                            Some(',') => self.pos += 1,
                            Some(')') => {
                                self.pos += 1;
                                break;
                            }
                            _ => return Err(self.error(self.pos, "expected `,` or `)` in atom")),
                        }
                    }
                }
                Ok(Formula::Atom(Atom {
                    predicate: name,
                    args,
                }))
            }
            None => Err(self.error(self.pos, "unexpected end of input")),
        }
    }

    fn interval(&mut self) -> Result<SymbolicInterval> {
        self.expect('[')?;
        let lo = self.point()?;
        self.expect(',')?;
        let hi = self.point()?;
        self.expect(']')?;
        Ok(SymbolicInterval { lo, hi })
    }

    fn point(&mut self) -> Result<TimePoint> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' => {
                let start = self.pos;
                while let Some(c) = self.peek_raw() {
                    if c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '-' | '+') {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let text = &self.src[start..self.pos];
                let v: f64 = text
                    .parse()
                    .map_err(|_| self.error(start, format!("malformed number `{text}`")))?;
                Ok(TimePoint::Seconds(v))
            }
            _ => {
                let action = self.ident()?;
                self.expect('.')?;
                let at = self.pos;
                let which = self.ident()?;
                let endpoint = match which.as_str() {
                    "ts" => Endpoint::Start,
                    "te" => Endpoint::End,
                    other => {
                        return Err(self.error(at, format!("expected `ts` or `te`, found `{other}`")))
                    }
                };
                Ok(TimePoint::Action { action, endpoint })
            }
        }
    }
}

/// Parses the concrete syntax described in the module docs.
pub fn parse_mtl(text: &str) -> Result<Formula> {
    if text.trim().is_empty() {
        return Err(Error::Syntax {
            line: 1,
            column: 1,
            message: "empty formula".into(),
        });
    }
    let mut p = Parser { src: text, pos: 0 };
    let f = p.formula()?;
    if let Some(c) = p.peek() {
        return Err(p.error(p.pos, format!("unexpected trailing `{c}`")));
    }
    Ok(f)
}

/// Parses and checks every action label against `labels`.
pub fn parse_mtl_with_labels(text: &str, labels: &[&str]) -> Result<Formula> {
    let f = parse_mtl(text)?;
    f.try_map_intervals(&mut |i: &SymbolicInterval| {
        for p in [&i.lo, &i.hi] {
            if let TimePoint::Action { action, .. } = p {
                if !labels.contains(&action.as_str()) {
                    return Err(Error::UnknownActionLabel(action.clone()));
                }
            }
        }
        Ok(i.clone())
    })?;
    Ok(f)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Kleene three-valued truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Truth::True
        } else {
            Truth::False
        }
    }

    pub fn not(self) -> Self {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }

    pub fn and(self, other: Self) -> Self {
        match (self, other) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        }
    }

    pub fn or(self, other: Self) -> Self {
        self.not().and(other.not()).not()
    }
}

/// A temporal operator whose interval contained no samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VacuityWarning {
    pub interval: TimeInterval,
    pub eventually: bool,
}

/// Evaluates ground formulas over a time-ordered sample sequence, with atom
/// values supplied by `lookup(sample_index, atom)`.
pub struct Evaluator<'a, L> {
    times: &'a [f64],
    lookup: L,
    warnings: Vec<VacuityWarning>,
}

impl<'a, L> Evaluator<'a, L>
where
    L: FnMut(usize, &Atom) -> Result<Truth>,
{
    pub fn new(times: &'a [f64], lookup: L) -> Self {
        Evaluator {
            times,
            lookup,
            warnings: Vec::new(),
        }
    }

    pub fn warnings(&self) -> &[VacuityWarning] {
        &self.warnings
    }

    pub fn into_warnings(self) -> Vec<VacuityWarning> {
        self.warnings
    }

    pub fn samples_in(&self, i: &TimeInterval) -> std::ops::Range<usize> {
        let lo = self.times.partition_point(|t| *t < i.lo);
        let hi = self.times.partition_point(|t| *t <= i.hi);
        lo..hi.max(lo)
    }

    /// Value of `f` at sample `j`.
    pub fn eval(&mut self, f: &GroundFormula, j: usize) -> Result<Truth> {
        Ok(match f {
            Formula::Atom(a) => (self.lookup)(j, a)?,
            Formula::Not(inner) => self.eval(inner, j)?.not(),
            Formula::And(l, r) => {
                let lv = self.eval(l, j)?;
                let rv = self.eval(r, j)?;
                lv.and(rv)
            }
            Formula::Always(i, inner) => {
                let range = self.samples_in(i);
                if range.is_empty() {
                    self.warn(*i, false);
                }
                let mut acc = Truth::True;
                for k in range {
                    acc = acc.and(self.eval(inner, k)?);
                }
                acc
            }
            Formula::Eventually(i, inner) => {
                let range = self.samples_in(i);
                if range.is_empty() {
                    self.warn(*i, true);
                }
                let mut acc = Truth::False;
                for k in range {
                    acc = acc.or(self.eval(inner, k)?);
                }
                acc
            }
        })
    }

    fn warn(&mut self, interval: TimeInterval, eventually: bool) {
        let w = VacuityWarning {
            interval,
            eventually,
        };
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
        }
    }
}

/// One sample of a two-valued trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub values: BTreeMap<Atom, bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceVerdict {
    pub value: bool,
    pub warnings: Vec<VacuityWarning>,
}

/// Evaluates `f` as a closed assertion over `trace` (at its first sample).
pub fn evaluate_trace(f: &GroundFormula, trace: &[TraceSample]) -> Result<TraceVerdict> {
    if trace.is_empty() {
        return Err(Error::validation("cannot evaluate a formula over an empty trace"));
    }
    if trace.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(Error::validation("trace timestamps must be strictly increasing"));
    }
    let times: Vec<f64> = trace.iter().map(|s| s.t).collect();
    let mut ev = Evaluator::new(&times, |j, a: &Atom| {
        trace[j]
            .values
            .get(a)
            .map(|b| Truth::from_bool(*b))
            .ok_or_else(|| Error::IncompleteTrace {
                atom: a.to_string(),
                t: trace[j].t,
            })
    });
    let v = ev.eval(f, 0)?;
    Ok(TraceVerdict {
        value: v == Truth::True,
        warnings: ev.into_warnings(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(s: &str) -> Atom {
        s.parse().unwrap()
    }

    fn ti(lo: f64, hi: f64) -> TimeInterval {
        TimeInterval::new(lo, hi)
    }

    fn trace(name: &str, vals: &[bool]) -> Vec<TraceSample> {
        vals.iter()
            .enumerate()
            .map(|(i, v)| TraceSample {
                t: i as f64,
                values: BTreeMap::from([(atom(name), *v)]),
            })
            .collect()
    }

    #[test]
    fn parses_always_over_action_span() {
        let f = parse_mtl("G[a1.ts,a2.te](open)").unwrap();
        assert_eq!(
            f,
            Formula::always(
                SymbolicInterval {
                    lo: TimePoint::start("a1"),
                    hi: TimePoint::end("a2"),
                },
                Formula::atom(atom("open"))
            )
        );
    }

    #[test]
    fn parses_slip_formula() {
        let f = parse_mtl("F[a4.ts,a4.te](obj_on_table & !open & !hold)").unwrap();
        let Formula::Eventually(_, body) = &f else { panic!("{f:?}") };
        // ((obj_on_table & !open) & !hold)
        let Formula::And(l, r) = &**body else { panic!() };
        assert!(matches!(**l, Formula::And(..)));
        assert!(matches!(**r, Formula::Not(_)));
        let props: Vec<String> = extract_propositions(&f).iter().map(|a| a.to_string()).collect();
        assert_eq!(props, ["hold", "obj_on_table", "open"]);
        assert_eq!(extract_eoi_intervals(&f).len(), 1);
    }

    #[test]
    fn negation_binds_tightest() {
        let f = parse_mtl("!open & hold").unwrap();
        assert_eq!(
            f,
            Formula::and(Formula::not(Formula::atom(atom("open"))), Formula::atom(atom("hold")))
        );
    }

    #[test]
    fn syntax_errors_report_position() {
        match parse_mtl("G[a1.ts,a2.te](open &)") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (1, 22)),
            other => panic!("{other:?}"),
        }
        match parse_mtl("open &\n  G[a1.tx,a2.te](x)") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 8)),
            other => panic!("{other:?}"),
        }
        assert!(parse_mtl("   ").is_err());
        assert!(parse_mtl("a b").is_err());
        assert!(matches!(
            parse_mtl_with_labels("G[a1.ts,a9.te](x)", &["a1", "a2"]),
            Err(Error::UnknownActionLabel(l)) if l == "a9"
        ));
    }

    #[test]
    fn propositions_deduplicate() {
        let f = parse_mtl("G[a1.ts,a1.te](x) & F[a2.ts,a2.te](x)").unwrap();
        assert_eq!(extract_propositions(&f).len(), 1);
    }

    #[test]
    fn eoi_intervals_in_document_order() {
        assert!(extract_eoi_intervals(&parse_mtl("G[a1.ts,a5.te](hold)").unwrap()).is_empty());
        let f = parse_mtl("F[a1.ts,a1.te](x) & F[a2.ts,a2.te](y)").unwrap();
        let ivs = extract_eoi_intervals(&f);
        assert_eq!(ivs.len(), 2);
        assert_eq!(ivs[0].lo, TimePoint::start("a1"));
        assert_eq!(ivs[1].lo, TimePoint::start("a2"));
    }

    #[test]
    fn always_and_eventually_on_small_traces() {
        let g = Formula::always(ti(0.0, 2.0), Formula::atom(atom("open")));
        assert!(evaluate_trace(&g, &trace("open", &[true, true, true])).unwrap().value);
        let slip = Formula::eventually(ti(0.0, 2.0), Formula::atom(atom("slip")));
        assert!(evaluate_trace(&slip, &trace("slip", &[false, true, false])).unwrap().value);
        let x = Formula::atom(atom("x"));
        let g = Formula::always(ti(0.0, 2.0), x.clone());
        let dual = Formula::not(Formula::eventually(ti(0.0, 2.0), Formula::not(x)));
        let tr = trace("x", &[true, false, true]);
        assert!(!evaluate_trace(&g, &tr).unwrap().value);
        assert!(!evaluate_trace(&dual, &tr).unwrap().value);
    }

    #[test]
    fn vacuous_intervals_warn() {
        let tr = trace("x", &[false, false]);
        let g = Formula::always(ti(5.0, 6.0), Formula::atom(atom("x")));
        let v = evaluate_trace(&g, &tr).unwrap();
        assert!(v.value);
        assert_eq!(v.warnings.len(), 1);
        let f = Formula::eventually(ti(5.0, 6.0), Formula::atom(atom("x")));
        let v = evaluate_trace(&f, &tr).unwrap();
        assert!(!v.value);
        assert!(v.warnings[0].eventually);
    }

    #[test]
    fn incomplete_and_unordered_traces_fail() {
        let g = Formula::always(ti(0.0, 2.0), Formula::atom(atom("y")));
        assert!(matches!(
            evaluate_trace(&g, &trace("x", &[true])),
            Err(Error::IncompleteTrace { .. })
        ));
        let mut tr = trace("y", &[true, true]);
        tr[1].t = 0.0;
        assert!(evaluate_trace(&g, &tr).is_err());
    }

    #[test]
    fn closed_interval_endpoints() {
        let tr = trace("x", &[false, true, false]);
        let f = Formula::eventually(ti(1.0, 1.0), Formula::atom(atom("x")));
        assert!(evaluate_trace(&f, &tr).unwrap().value);
    }

    #[test]
    fn kleene_tables() {
        use Truth::*;
        assert_eq!(Unknown.and(False), False);
        assert_eq!(Unknown.and(True), Unknown);
        assert_eq!(Unknown.or(True), True);
        assert_eq!(Unknown.not(), Unknown);
    }
}
