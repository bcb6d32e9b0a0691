//! Words over a generator alphabet, group presentations and free-group arithmetic.
//!
//! Generators are single lowercase ASCII letters; the uppercase letter denotes the
//! inverse, so `A = a⁻¹`. The empty word is written `1`.

use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Maximum number of generators (one per lowercase ASCII letter).
pub const MAX_GENERATORS: usize = 26;

/// A signed generator, packed as `2 * generator + inverted`.
///
/// The packing makes the derived `Ord` agree with the letter order
/// `a < A < b < B < ...` used for shortlex normal forms.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(u8);

impl Letter {
    pub fn new(generator: usize, inverted: bool) -> Letter {
        debug_assert!(generator < MAX_GENERATORS);
        Letter((generator as u8) << 1 | inverted as u8)
    }

    /// Letter from its packed index `2 * generator + inverted`.
    pub fn from_index(index: usize) -> Letter {
        debug_assert!(index < 2 * MAX_GENERATORS);
        Letter(index as u8)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn generator(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub fn inverse(self) -> Letter {
        Letter(self.0 ^ 1)
    }

    pub fn to_char(self, alphabet: &Alphabet) -> char {
        let c = alphabet.names[self.generator()];
        if self.is_inverse() {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = (b'a' + self.generator() as u8) as char;
        if self.is_inverse() {
            write!(f, "{}", c.to_ascii_uppercase())
        } else {
            write!(f, "{}", c)
        }
    }
}

/// Ordered list of generator names.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    names: Vec<char>,
}

impl Alphabet {
    /// Alphabet from generator names. Names must be distinct lowercase ASCII letters.
    pub fn new(names: Vec<char>) -> Result<Alphabet, ParseError> {
        if names.len() > MAX_GENERATORS {
            return Err(ParseError::TooManyGenerators(names.len()));
        }
        for (i, &c) in names.iter().enumerate() {
            if !c.is_ascii_lowercase() {
                return Err(ParseError::Syntax {
                    line: 0,
                    column: 0,
                    message: format!("generator name '{c}' is not a lowercase ASCII letter"),
                });
            }
            if names[..i].contains(&c) {
                return Err(ParseError::DuplicateGenerator {
                    line: 0,
                    column: 0,
                    name: c,
                });
            }
        }
        Ok(Alphabet { names })
    }

    /// The first `n` letters `a, b, c, ...`.
    pub fn standard(n: usize) -> Alphabet {
        assert!(n <= MAX_GENERATORS, "at most {MAX_GENERATORS} generators");
        Alphabet {
            names: (0..n).map(|i| (b'a' + i as u8) as char).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Number of letters including inverses.
    pub fn letter_count(&self) -> usize {
        2 * self.names.len()
    }

    pub fn names(&self) -> &[char] {
        &self.names
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.letter_count()).map(Letter::from_index)
    }

    pub fn letter(&self, c: char) -> Option<Letter> {
        let lower = c.to_ascii_lowercase();
        let g = self.names.iter().position(|&n| n == lower)?;
        Some(Letter::new(g, c.is_ascii_uppercase()))
    }

    /// Letter order string, e.g. `aAbB`.
    pub fn order_string(&self) -> String {
        self.letters().map(|l| l.to_char(self)).collect()
    }

    /// Parse a word in letter notation; `1` denotes the empty word.
    pub fn parse_word(&self, text: &str) -> Result<Word, ParseError> {
        parse_word_at(self, text.trim(), 1, 1)
    }

    /// Parse a word written with powers and parentheses, such as
    /// `(ab)(AB)^3(aBA^2)^3`. Exponents may be negative. The result is the
    /// literal expansion, not freely reduced.
    pub fn parse_expression(&self, text: &str) -> Result<Word, ParseError> {
        let chars: Vec<char> = text.chars().collect();
        let mut pos = 0;
        let w = expression(self, &chars, &mut pos, 0)?;
        if pos < chars.len() {
            return Err(syntax(pos, format!("unexpected '{}'", chars[pos])));
        }
        Ok(w)
    }
}

fn syntax(pos: usize, message: String) -> ParseError {
    ParseError::Syntax {
        line: 1,
        column: pos + 1,
        message,
    }
}

fn expression(a: &Alphabet, s: &[char], pos: &mut usize, depth: usize) -> Result<Word, ParseError> {
    let mut out = Vec::new();
    loop {
        while *pos < s.len() && s[*pos].is_whitespace() {
            *pos += 1;
        }
        let Some(&c) = s.get(*pos) else { break };
        let atom = match c {
            '(' => {
                *pos += 1;
                let inner = expression(a, s, pos, depth + 1)?;
                if s.get(*pos) != Some(&')') {
                    return Err(syntax(*pos, "expected ')'".into()));
                }
                *pos += 1;
                inner
            }
            ')' if depth > 0 => break,
            '1' => {
                *pos += 1;
                Word::empty()
            }
            c if c.is_ascii_alphabetic() => {
                let l = a.letter(c).ok_or(ParseError::UnknownLetter {
                    line: 1,
                    column: *pos + 1,
                    letter: c,
                })?;
                *pos += 1;
                Word(vec![l])
            }
            c => return Err(syntax(*pos, format!("unexpected '{c}'"))),
        };
        let atom = if s.get(*pos) == Some(&'^') {
            *pos += 1;
            let start = *pos;
            if s.get(*pos) == Some(&'-') {
                *pos += 1;
            }
            while *pos < s.len() && s[*pos].is_ascii_digit() {
                *pos += 1;
            }
            let e: i64 = s[start..*pos]
                .iter()
                .collect::<String>()
                .parse()
                .map_err(|_| syntax(start, "expected an integer exponent".into()))?;
            if e.unsigned_abs() > 1_000_000 {
                return Err(syntax(start, "exponent too large".into()));
            }
            let base = if e < 0 { atom.invert() } else { atom };
            base.pow(e.unsigned_abs() as usize)
        } else {
            atom
        };
        out.extend_from_slice(atom.letters());
    }
    Ok(Word(out))
}

/// A sequence of letters. Not necessarily freely reduced.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Word {
        Word(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation without reduction.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Free product `self · other`, freely reduced (assuming both inputs are).
    pub fn mul(&self, other: &Word) -> Word {
        self.concat(other).free_reduce()
    }

    pub fn pow(&self, k: usize) -> Word {
        let mut v = Vec::with_capacity(self.len() * k);
        for _ in 0..k {
            v.extend_from_slice(&self.0);
        }
        Word(v)
    }

    pub fn is_freely_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1].inverse())
    }

    pub fn free_reduce(&self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.len());
        for &l in &self.0 {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn invert(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    /// Free reduction followed by cancellation of inverse first/last pairs.
    pub fn cyclic_reduce(&self) -> Word {
        let w = self.free_reduce();
        let v = w.0;
        let (mut i, mut j) = (0, v.len());
        while j - i >= 2 && v[i] == v[j - 1].inverse() {
            i += 1;
            j -= 1;
        }
        Word(v[i..j].to_vec())
    }

    /// Exponent sum of each generator.
    pub fn exponent_sums(&self, generators: usize) -> Vec<i64> {
        let mut sums = vec![0; generators];
        for l in &self.0 {
            sums[l.generator()] += if l.is_inverse() { -1 } else { 1 };
        }
        sums
    }

    pub fn render(&self, alphabet: &Alphabet) -> String {
        if self.0.is_empty() {
            return "1".to_string();
        }
        self.0.iter().map(|l| l.to_char(alphabet)).collect()
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for l in &self.0 {
            write!(f, "{l:?}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: duplicate generator '{name}'")]
    DuplicateGenerator { line: usize, column: usize, name: char },
    #[error("line {line}, column {column}: letter '{letter}' is not in the alphabet")]
    UnknownLetter { line: usize, column: usize, letter: char },
    #[error("missing `gens:` line")]
    MissingGens,
    #[error("{0} generators given, at most 26 are supported")]
    TooManyGenerators(usize),
}

fn parse_word_at(alphabet: &Alphabet, token: &str, line: usize, column: usize) -> Result<Word, ParseError> {
    if token == "1" {
        return Ok(Word::empty());
    }
    if token.is_empty() {
        return Err(ParseError::Syntax {
            line,
            column,
            message: "empty word (write `1` for the identity)".into(),
        });
    }
    let mut letters = Vec::with_capacity(token.len());
    for (k, c) in token.chars().enumerate() {
        if !c.is_ascii_alphabetic() {
            return Err(ParseError::Syntax {
                line,
                column: column + k,
                message: format!("unexpected character '{c}'"),
            });
        }
        match alphabet.letter(c) {
            Some(l) => letters.push(l),
            None => {
                return Err(ParseError::UnknownLetter {
                    line,
                    column: column + k,
                    letter: c,
                })
            }
        }
    }
    Ok(Word(letters))
}

/// A finitely presented group: generators and freely+cyclically reduced relators.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Presentation {
    alphabet: Alphabet,
    relators: Vec<Word>,
}

impl Presentation {
    /// Normalizes relators: free and cyclic reduction, empty relators dropped.
    pub fn new(alphabet: Alphabet, relators: Vec<Word>) -> Presentation {
        let relators = relators
            .iter()
            .map(Word::cyclic_reduce)
            .filter(|w| !w.is_empty())
            .collect();
        Presentation { alphabet, relators }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn relators(&self) -> &[Word] {
        &self.relators
    }

    pub fn generator_count(&self) -> usize {
        self.alphabet.len()
    }

    /// Same generators with extra relators appended.
    pub fn with_relators(&self, extra: &[Word]) -> Presentation {
        let mut rels = self.relators.clone();
        rels.extend(extra.iter().cloned());
        Presentation::new(self.alphabet.clone(), rels)
    }

    pub fn parse_word(&self, text: &str) -> Result<Word, ParseError> {
        self.alphabet.parse_word(text)
    }

    pub fn render_word(&self, w: &Word) -> String {
        w.render(&self.alphabet)
    }

    /// Canonical text form; `parse_presentation(p.render()) == p`.
    pub fn render(&self) -> String {
        let mut s = String::from("gens:");
        for c in self.alphabet.names() {
            s.push(' ');
            s.push(*c);
        }
        s.push('\n');
        for r in &self.relators {
            s.push_str("rel: ");
            s.push_str(&r.render(&self.alphabet));
            s.push('\n');
        }
        s
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self.alphabet.names().iter().map(|c| c.to_string()).collect();
        let rels: Vec<String> = self.relators.iter().map(|r| r.render(&self.alphabet)).collect();
        write!(f, "< {} | {} >", gens.join(", "), rels.join(", "))
    }
}

/// Parse the line-oriented presentation format:
///
/// ```text
/// # Weeks manifold
/// gens: a b
/// rel: bababAbbA
/// rel: ababaBaaB
/// ```
pub fn parse_presentation(text: &str) -> Result<Presentation, ParseError> {
    let mut alphabet: Option<Alphabet> = None;
    let mut relators = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let indent = raw.len() - raw.trim_start().len();
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("gens:") {
            if alphabet.is_some() {
                return Err(ParseError::Syntax {
                    line: line_no,
                    column: indent + 1,
                    message: "second `gens:` line".into(),
                });
            }
            let mut names = Vec::new();
            for (col, tok) in tokens(rest, indent + 5) {
                let mut chars = tok.chars();
                let c = chars.next().unwrap();
                if chars.next().is_some() || !c.is_ascii_lowercase() {
                    return Err(ParseError::Syntax {
                        line: line_no,
                        column: col,
                        message: format!("generator '{tok}' must be a single lowercase ASCII letter"),
                    });
                }
                if names.contains(&c) {
                    return Err(ParseError::DuplicateGenerator {
                        line: line_no,
                        column: col,
                        name: c,
                    });
                }
                names.push(c);
            }
            if names.len() > MAX_GENERATORS {
                return Err(ParseError::TooManyGenerators(names.len()));
            }
            alphabet = Some(Alphabet { names });
        } else if let Some(rest) = line.strip_prefix("rel:") {
            let alpha = alphabet.as_ref().ok_or(ParseError::Syntax {
                line: line_no,
                column: indent + 1,
                message: "`rel:` before `gens:`".into(),
            })?;
            let toks: Vec<(usize, &str)> = tokens(rest, indent + 4).collect();
            match toks.as_slice() {
                [(col, tok)] => relators.push(parse_word_at(alpha, tok, line_no, *col)?),
                [] => {
                    return Err(ParseError::Syntax {
                        line: line_no,
                        column: indent + line.len() + 1,
                        message: "missing relator word".into(),
                    })
                }
                [_, (col, _), ..] => {
                    return Err(ParseError::Syntax {
                        line: line_no,
                        column: *col,
                        message: "one relator per `rel:` line".into(),
                    })
                }
            }
        } else {
            return Err(ParseError::Syntax {
                line: line_no,
                column: indent + 1,
                message: "expected `gens:`, `rel:` or a `#` comment".into(),
            });
        }
    }
    let alphabet = alphabet.ok_or(ParseError::MissingGens)?;
    Ok(Presentation::new(alphabet, relators))
}

/// Whitespace-separated tokens with their 1-based column, given the column
/// at which `s` starts (0-based offset of `s` within the line).
fn tokens(s: &str, offset: usize) -> impl Iterator<Item = (usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        if c.is_whitespace() {
            if let Some(st) = start.take() {
                out.push((offset + st + 1, &s[st..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(st) = start {
        out.push((offset + st + 1, &s[st..]));
    }
    out.into_iter()
}

/// A map sending each generator to a word over a target alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorMap {
    images: Vec<Word>,
}

impl GeneratorMap {
    pub fn new(images: Vec<Word>) -> GeneratorMap {
        GeneratorMap { images }
    }

    pub fn identity(generators: usize) -> GeneratorMap {
        GeneratorMap {
            images: (0..generators).map(|g| Word(vec![Letter::new(g, false)])).collect(),
        }
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    /// Letterwise substitution followed by free reduction.
    pub fn apply(&self, w: &Word) -> Word {
        let mut v = Vec::new();
        for l in w.letters() {
            let img = &self.images[l.generator()];
            if l.is_inverse() {
                v.extend(img.0.iter().rev().map(|x| x.inverse()));
            } else {
                v.extend_from_slice(&img.0);
            }
        }
        Word(v).free_reduce()
    }
}

/// One factor `u · r^sign · u⁻¹` of a product of relator conjugates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjugateFactor {
    pub conjugator: Word,
    pub relator: usize,
    pub inverted: bool,
}

/// True iff `target` freely equals the product of the given relator conjugates.
///
/// This is a rewriting-free identity check: it proves `target = 1` in the group.
pub fn verify_conjugate_product(target: &Word, factors: &[ConjugateFactor], p: &Presentation) -> bool {
    let mut product = Word::empty();
    for f in factors {
        let Some(r) = p.relators.get(f.relator) else {
            return false;
        };
        let r = if f.inverted { r.invert() } else { r.clone() };
        let term = f.conjugator.concat(&r).concat(&f.conjugator.invert());
        product = product.concat(&term).free_reduce();
    }
    product == target.free_reduce()
}
