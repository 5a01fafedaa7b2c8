//! Text form of a space: `(2x2x2)-+(1x3)-`, `R3^4`, `(1/2x1/2)`.
//!
//! ```text
//! spec   := term ('+' term)*
//! term   := '(' weight ('x' weight)* ')' parity? | 'R3^' integer
//! weight := integer | integer '/2'
//! parity := '+' | '-'
//! ```
//!
//! Whitespace is ignored. A `+` straight after `)` is read as a parity unless
//! the next character opens another term.

use crate::cg::Weight;
use crate::error::{Error, ParseError, Result};
use crate::group::{Group, Parity};
use crate::scheme::{SpaceSpec, Term};

const MAX_WEIGHT: u64 = 100_000;
const MAX_SHORTHAND_RANK: u64 = 40;

pub fn parse_space_spec(text: &str, group: Group) -> Result<SpaceSpec> {
    parse_space_spec_with_warnings(text, group).map(|(s, _)| s)
}

/// Also returns warnings, e.g. for parity marks that the group ignores.
pub fn parse_space_spec_with_warnings(text: &str, group: Group) -> Result<(SpaceSpec, Vec<String>)> {
    let mut p = Parser::new(text);
    let mut terms = Vec::new();
    let mut warnings = Vec::new();
    loop {
        let (term, mark) = p.term(group)?;
        if let Some(at) = mark {
            if !group.has_parity() {
                warnings.push(format!("parity mark at byte {at} ignored for {group}"));
            }
        }
        terms.push(term);
        match p.peek() {
            None => break,
            Some(b'+') => {
                p.bump();
            }
            Some(c) => return Err(p.error(format!("expected '+' or end of input, found '{}'", c as char))),
        }
    }
    let mut dim: u64 = 0;
    for t in &terms {
        let d = t
            .factors
            .iter()
            .try_fold(1u64, |acc, w| acc.checked_mul(w.dim() as u64))
            .and_then(|d| dim.checked_add(d));
        dim = match d {
            Some(d) if d <= usize::MAX as u64 => d,
            _ => return Err(Error::Domain("space dimension overflows".into())),
        };
    }
    Ok((SpaceSpec::new(group, terms)?, warnings))
}

/// Canonical text: no shorthand, explicit parity for O(3) only.
pub fn render_space_spec(spec: &SpaceSpec) -> String {
    let parity = spec.group().has_parity();
    spec.terms()
        .iter()
        .map(|t| {
            let ws: Vec<String> = t.factors.iter().map(Weight::to_string).collect();
            if parity {
                format!("({}){}", ws.join("x"), t.parity)
            } else {
                format!("({})", ws.join("x"))
            }
        })
        .collect::<Vec<_>>()
        .join("+")
}

struct Parser {
    /// Non-whitespace bytes with their offsets in the original text.
    chars: Vec<(usize, u8)>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn new(text: &str) -> Self {
        let chars: Vec<(usize, u8)> = text
            .bytes()
            .enumerate()
            .filter(|(_, b)| !b.is_ascii_whitespace())
            .collect();
        Parser {
            chars,
            pos: 0,
            len: text.len(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn peek_at(&self, k: usize) -> Option<u8> {
        self.chars.get(self.pos + k).map(|c| c.1)
    }

    fn offset(&self) -> usize {
        self.chars.get(self.pos).map_or(self.len, |c| c.0)
    }

    fn bump(&mut self) {
        self.pos += 1;
    }

    fn error(&self, message: impl Into<String>) -> Error {
        ParseError {
            offset: self.offset(),
            message: message.into(),
        }
        .into()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        match self.peek() {
            Some(x) if x == c => {
                self.bump();
                Ok(())
            }
            Some(x) if x.is_ascii() => Err(self.error(format!("expected '{}', found '{}'", c as char, x as char))),
            Some(_) => Err(self.error("non-ASCII input")),
            None => Err(self.error(format!("expected '{}', found end of input", c as char))),
        }
    }

    fn integer(&mut self, max: u64) -> Result<u64> {
        let start = self.offset();
        let mut v: u64 = 0;
        let mut any = false;
        while let Some(c @ b'0'..=b'9') = self.peek() {
            v = v.saturating_mul(10).saturating_add(u64::from(c - b'0'));
            any = true;
            self.bump();
        }
        if !any {
            return Err(self.error("expected an integer"));
        }
        if v > max {
            return Err(ParseError {
                offset: start,
                message: format!("integer exceeds {max}"),
            }
            .into());
        }
        Ok(v)
    }

    fn weight(&mut self, group: Group) -> Result<Weight> {
        let start = self.offset();
        let n = self.integer(MAX_WEIGHT)?;
        let doubled = if self.peek() == Some(b'/') {
            self.bump();
            let at = self.offset();
            if self.integer(u64::MAX)? != 2 {
                return Err(ParseError {
                    offset: at,
                    message: "only '/2' denominators are allowed".into(),
                }
                .into());
            }
            n
        } else {
            2 * n
        };
        let w = Weight::from_doubled(doubled as u32);
        if !w.is_integer() && !group.allows_half_integer() {
            return Err(Error::Domain(format!(
                "half-integer weight {w} at byte {start} is not a {group} representation"
            )));
        }
        Ok(w)
    }

    /// The term and, if present, the offset of its parity mark.
    fn term(&mut self, group: Group) -> Result<(Term, Option<usize>)> {
        match self.peek() {
            Some(b'R') => {
                self.bump();
                self.expect(b'3')?;
                self.expect(b'^')?;
                let at = self.offset();
                let n = self.integer(MAX_SHORTHAND_RANK)?;
                if n == 0 {
                    return Err(ParseError {
                        offset: at,
                        message: "shorthand rank must be at least 1".into(),
                    }
                    .into());
                }
                let n = n as usize;
                Ok((Term::new(vec![Weight::integer(1); n], Parity::of_rank(n)), None))
            }
            Some(b'(') => {
                self.bump();
                let mut factors = vec![self.weight(group)?];
                while self.peek() == Some(b'x') {
                    self.bump();
                    factors.push(self.weight(group)?);
                }
                self.expect(b')')?;
                let at = self.offset();
                let parity = match (self.peek(), self.peek_at(1)) {
                    (Some(b'-'), _) => Some(Parity::Odd),
                    (Some(b'+'), None) => Some(Parity::Even),
                    (Some(b'+'), Some(next)) if next != b'(' && next != b'R' => Some(Parity::Even),
                    _ => None,
                };
                if parity.is_some() {
                    self.bump();
                }
                let mark = parity.map(|_| at);
                Ok((Term::new(factors, parity.unwrap_or(Parity::Odd)), mark))
            }
            Some(c) if c.is_ascii() => Err(self.error(format!("expected '(' or 'R3^', found '{}'", c as char))),
            Some(_) => Err(self.error("non-ASCII input")),
            None => Err(self.error("expected a term, found end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(l: u32) -> Weight {
        Weight::integer(l)
    }

    #[test]
    fn worked_example() {
        let s = parse_space_spec("(2x2x2)-+(1x3)-", Group::O3).unwrap();
        assert_eq!(s.terms().len(), 2);
        assert_eq!(s.terms()[0], Term::new(vec![w(2); 3], Parity::Odd));
        assert_eq!(s.terms()[1], Term::new(vec![w(1), w(3)], Parity::Odd));
        assert_eq!(s.terms().iter().map(Term::dim).collect::<Vec<_>>(), vec![125, 21]);
        assert_eq!(render_space_spec(&s), "(2x2x2)-+(1x3)-");
    }

    #[test]
    fn shorthand() {
        let s = parse_space_spec("R3^4", Group::O3).unwrap();
        assert_eq!(s.terms(), &[Term::new(vec![w(1); 4], Parity::Even)]);
        assert_eq!(s.dim(), 81);
        assert_eq!(render_space_spec(&s), "(1x1x1x1)+");
        assert_eq!(
            parse_space_spec("R3^3", Group::O3).unwrap().terms()[0].parity,
            Parity::Odd
        );
        assert!(parse_space_spec("R3^0", Group::O3).is_err());
        assert!(parse_space_spec("R4^2", Group::O3).is_err());
    }

    #[test]
    fn half_integers() {
        let s = parse_space_spec("(1/2x1/2)", Group::SU2).unwrap();
        assert_eq!(s.dim(), 4);
        assert_eq!(render_space_spec(&s), "(1/2x1/2)");
        assert!(matches!(parse_space_spec("(1/2)", Group::O3), Err(Error::Domain(_))));
        assert!(matches!(parse_space_spec("(3/2)", Group::SO3), Err(Error::Domain(_))));
        assert!(matches!(parse_space_spec("(1/3)", Group::SU2), Err(Error::Parse(_))));
        // An even numerator is just an integer weight.
        assert_eq!(
            parse_space_spec("(4/2)-", Group::O3).unwrap().terms()[0].factors,
            vec![w(2)]
        );
    }

    #[test]
    fn default_and_explicit_parity() {
        let s = parse_space_spec("(5)", Group::O3).unwrap();
        assert_eq!(s.terms()[0].parity, Parity::Odd);
        assert_eq!(render_space_spec(&s), "(5)-");
        let s = parse_space_spec("(5)+", Group::O3).unwrap();
        assert_eq!(s.terms()[0].parity, Parity::Even);
        let s = parse_space_spec("(1)++(2)-+(3)", Group::O3).unwrap();
        let ps: Vec<Parity> = s.terms().iter().map(|t| t.parity).collect();
        assert_eq!(ps, vec![Parity::Even, Parity::Odd, Parity::Odd]);
        let s = parse_space_spec("(1)+(2)+R3^2", Group::O3).unwrap();
        assert_eq!(s.terms().len(), 3);
        assert_eq!(s.terms()[0].parity, Parity::Odd);
    }

    #[test]
    fn parity_warning_under_su2() {
        let (s, warn) = parse_space_spec_with_warnings("(1/2)-+(1)", Group::SU2).unwrap();
        assert_eq!(warn.len(), 1);
        assert_eq!(s.terms()[0].parity, Parity::Even);
        assert_eq!(render_space_spec(&s), "(1/2)+(1)");
        let (_, warn) = parse_space_spec_with_warnings("(1)-", Group::O3).unwrap();
        assert!(warn.is_empty());
    }

    #[test]
    fn whitespace_and_offsets() {
        let s = parse_space_spec(" ( 2 x 2 ) - + ( 1 ) ", Group::O3).unwrap();
        assert_eq!(render_space_spec(&s), "(2x2)-+(1)-");
        let err = |t: &str| match parse_space_spec(t, Group::O3) {
            Err(Error::Parse(e)) => e.offset,
            other => panic!("{t}: {other:?}"),
        };
        assert_eq!(err("(1x)"), 3);
        assert_eq!(err("  (1x y)"), 6);
        assert_eq!(err("(1"), 2);
        assert_eq!(err("(1)*"), 3);
        assert_eq!(err(""), 0);
        assert_eq!(err("(1)-+"), 5);
        assert_eq!(err("(é)"), 1);
    }

    #[test]
    fn limits() {
        assert!(parse_space_spec("(99999999999999999999999)", Group::O3).is_err());
        assert!(parse_space_spec("R3^41", Group::O3).is_err());
        assert!(parse_space_spec("R3^40+R3^40+R3^40", Group::O3).is_err() || usize::BITS > 64);
    }

    fn arb_spec() -> impl Strategy<Value = SpaceSpec> {
        let group = prop_oneof![Just(Group::O3), Just(Group::SO3), Just(Group::SU2)];
        group.prop_flat_map(|g| {
            let weight = (0u32..12).prop_map(move |d| {
                if g.allows_half_integer() {
                    Weight::from_doubled(d)
                } else {
                    Weight::integer(d / 2)
                }
            });
            let term = (prop::collection::vec(weight, 1..5), any::<bool>())
                .prop_map(|(f, odd)| Term::new(f, if odd { Parity::Odd } else { Parity::Even }));
            prop::collection::vec(term, 1..4).prop_map(move |ts| SpaceSpec::new(g, ts).unwrap())
        })
    }

    proptest! {
        #[test]
        fn round_trip(s in arb_spec()) {
            let text = render_space_spec(&s);
            let back = parse_space_spec(&text, s.group()).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(render_space_spec(&back), text);
        }

        #[test]
        fn mutations_never_panic(s in arb_spec(), at in any::<prop::sample::Index>(), byte in any::<u8>(), del in any::<bool>()) {
            let mut bytes = render_space_spec(&s).into_bytes();
            let i = at.index(bytes.len());
            if del { bytes.remove(i); } else { bytes[i] = byte; }
            let text = String::from_utf8_lossy(&bytes).into_owned();
            match parse_space_spec(&text, s.group()) {
                Ok(t) => {
                    let again = parse_space_spec(&render_space_spec(&t), s.group()).unwrap();
                    prop_assert_eq!(again, t);
                }
                Err(Error::Parse(e)) => prop_assert!(e.offset <= text.len()),
                Err(Error::Domain(_)) | Err(Error::Argument(_)) => {}
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}
