//! Whitehead automorphisms over the right-angled Artin group of a tree:
//! validity, enumeration, application to words with canonical normal forms,
//! and the projection onto the deep partial conjugations.

use std::fmt;

use serde::Serialize;

use crate::error::AutError;
use crate::tree::{BoundaryProfile, LabeledTree};

/// A generator or its inverse: a vertex label with a sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    vertex: u16,
    negative: bool,
}

impl Letter {
    pub fn positive(vertex: usize) -> Self {
        Letter {
            vertex: vertex as u16,
            negative: false,
        }
    }

    pub fn negative(vertex: usize) -> Self {
        Letter {
            vertex: vertex as u16,
            negative: true,
        }
    }

    pub fn vertex(self) -> usize {
        self.vertex as usize
    }

    pub fn is_positive(self) -> bool {
        !self.negative
    }

    pub fn inverse(self) -> Self {
        Letter {
            vertex: self.vertex,
            negative: !self.negative,
        }
    }

    /// Dense index `2 * (vertex - 1) + sign`, used for letter-set bitmasks.
    pub fn index(self) -> usize {
        (self.vertex as usize - 1) * 2 + self.negative as usize
    }

    pub fn from_index(index: usize) -> Self {
        Letter {
            vertex: (index / 2 + 1) as u16,
            negative: index % 2 == 1,
        }
    }

    /// Parses `"+3"` / `"-3"` (a bare number means positive).
    pub fn parse(text: &str) -> Option<Self> {
        let (neg, digits) = match text.as_bytes().first()? {
            b'+' => (false, &text[1..]),
            b'-' => (true, &text[1..]),
            _ => (false, text),
        };
        let vertex: usize = digits.parse().ok()?;
        if vertex == 0 {
            return None;
        }
        Some(Letter {
            vertex: vertex as u16,
            negative: neg,
        })
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.negative { "-" } else { "+" }, self.vertex)
    }
}

impl Serialize for Letter {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// A word in the group generators. Normal forms are freely reduced and
/// shortlex-minimal under swaps of adjacent commuting letters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn generator(vertex: usize) -> Self {
        Word(vec![Letter::positive(vertex)])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn concat(&self, other: &Word) -> Self {
        let mut letters = self.0.clone();
        letters.extend_from_slice(&other.0);
        Word(letters)
    }
}

fn commute(tree: &LabeledTree, x: Letter, y: Letter) -> bool {
    x.vertex == y.vertex || tree.adjacent(x.vertex(), y.vertex())
}

fn free_reduce(letters: &mut Vec<Letter>) {
    let mut stack: Vec<Letter> = Vec::with_capacity(letters.len());
    for &l in letters.iter() {
        if stack.last() == Some(&l.inverse()) {
            stack.pop();
        } else {
            stack.push(l);
        }
    }
    *letters = stack;
}

/// Canonical representative: the lexicographically least geodesic.
///
/// First every cancellable pair is removed: `x ... x^-1` drops out whenever
/// all letters in between commute with `x` (adjacent inverse pairs are the
/// special case). A word with no such pair is geodesic, and any two
/// geodesics of one element differ by swaps of adjacent commuting letters
/// only; the least linearization of that class is then read off greedily by
/// always extracting the smallest letter whose whole remaining prefix
/// commutes with it. Note that purely local lowering swaps are not enough:
/// a letter may need to hop leftward across a blocked pair, so the
/// extraction looks past adjacency.
pub fn normal_form(tree: &LabeledTree, word: &Word) -> Word {
    let mut letters = word.0.clone();
    free_reduce(&mut letters);
    // long-range cancellation to a geodesic
    'scan: loop {
        for i in 0..letters.len() {
            let x = letters[i];
            for j in i + 1..letters.len() {
                if letters[j] == x.inverse() {
                    letters.remove(j);
                    letters.remove(i);
                    continue 'scan;
                }
                if !commute(tree, x, letters[j]) {
                    break;
                }
            }
        }
        break;
    }
    // least-available-letter extraction
    let mut out = Vec::with_capacity(letters.len());
    while !letters.is_empty() {
        let mut best = 0;
        for i in 1..letters.len() {
            if letters[i] < letters[best]
                && (0..i).all(|k| commute(tree, letters[i], letters[k]))
            {
                best = i;
            }
        }
        out.push(letters.remove(best));
    }
    Word(out)
}

/// A type (2) Whitehead automorphism, stored canonically: a letter set `A`
/// containing `a` but not `a^-1`, with any pairs `{c, c^-1}` for `c` in
/// `lk(a)` stripped (they act trivially).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Whitehead2 {
    a: Letter,
    mask: u64,
}

fn mask_of(letters: &[Letter]) -> u64 {
    letters.iter().fold(0u64, |m, l| m | 1 << l.index())
}

fn mask_contains(mask: u64, l: Letter) -> bool {
    mask & (1 << l.index()) != 0
}

impl Whitehead2 {
    /// Validity test from the characterization of type (2) automorphisms:
    /// the doubly-included vertices away from `lk(a)` must form a union of
    /// connected components of the tree minus `st(a)`, and every singly
    /// included letter must be dominated by `a` in the vertex order.
    ///
    /// `MalformedPair` signals `a not in A` or `a^-1 in A`; the returned
    /// bool is the two-condition test itself.
    pub fn is_valid(tree: &LabeledTree, letters: &[Letter], a: Letter) -> Result<bool, AutError> {
        let n = tree.node_count();
        if a.vertex() > n || a.vertex() == 0 {
            return Err(AutError::BadLabel {
                label: a.vertex(),
                n,
            });
        }
        for l in letters {
            if l.vertex() > n || l.vertex() == 0 {
                return Err(AutError::BadLabel {
                    label: l.vertex(),
                    n,
                });
            }
        }
        let mask = mask_of(letters);
        if !mask_contains(mask, a) || mask_contains(mask, a.inverse()) {
            return Err(AutError::MalformedPair);
        }
        Ok(Self::conditions_hold(tree, a, mask))
    }

    fn conditions_hold(tree: &LabeledTree, a: Letter, mask: u64) -> bool {
        let va = a.vertex();
        let n = tree.node_count();
        // condition 1: doubly included vertices off lk(a) fill whole components
        let mut doubled = vec![false; n + 1];
        for v in 1..=n {
            if v == va {
                continue;
            }
            let pos = mask_contains(mask, Letter::positive(v));
            let neg = mask_contains(mask, Letter::negative(v));
            if pos && neg {
                doubled[v] = !tree.adjacent(v, va);
            }
        }
        for comp in tree.components_without_star(va) {
            let inside = comp.iter().filter(|&&v| doubled[v]).count();
            if inside != 0 && inside != comp.len() {
                return false;
            }
            for &v in &comp {
                doubled[v] = false;
            }
        }
        if doubled.iter().any(|&d| d) {
            return false;
        }
        // condition 2: singly included letters are dominated by a
        for idx in 0..2 * n {
            let l = Letter::from_index(idx);
            let single = mask_contains(mask, l) && !mask_contains(mask, l.inverse());
            if single && l != a && !tree.leq(l.vertex(), va).expect("labels checked") {
                return false;
            }
        }
        true
    }

    /// Validates and canonicalizes `(A, a)`.
    pub fn new(tree: &LabeledTree, letters: &[Letter], a: Letter) -> Result<Self, AutError> {
        if !Self::is_valid(tree, letters, a)? {
            return Err(AutError::InvalidPair);
        }
        let mut mask = mask_of(letters);
        for &v in tree.link(a.vertex()) {
            let pos = Letter::positive(v);
            let neg = Letter::negative(v);
            if mask_contains(mask, pos) && mask_contains(mask, neg) {
                mask &= !(1 << pos.index());
                mask &= !(1 << neg.index());
            }
        }
        Ok(Whitehead2 { a, mask })
    }

    fn from_parts_unchecked(a: Letter, mask: u64) -> Self {
        Whitehead2 { a, mask }
    }

    pub fn acting_letter(&self) -> Letter {
        self.a
    }

    pub fn contains(&self, l: Letter) -> bool {
        mask_contains(self.mask, l)
    }

    /// The letter set in ascending order.
    pub fn letters(&self, n: usize) -> Vec<Letter> {
        (0..2 * n)
            .map(Letter::from_index)
            .filter(|&l| mask_contains(self.mask, l))
            .collect()
    }

    /// Vertices whose both signs lie in `A` (the conjugated part).
    pub fn conjugated_vertices(&self, n: usize) -> Vec<usize> {
        (1..=n)
            .filter(|&v| {
                mask_contains(self.mask, Letter::positive(v))
                    && mask_contains(self.mask, Letter::negative(v))
            })
            .collect()
    }

    /// Letters in `A` without their inverse, excluding `a` itself (the
    /// dominated, transvection-like part).
    pub fn dominated_letters(&self, n: usize) -> Vec<Letter> {
        (0..2 * n)
            .map(Letter::from_index)
            .filter(|&l| {
                l != self.a
                    && mask_contains(self.mask, l)
                    && !mask_contains(self.mask, l.inverse())
            })
            .collect()
    }

    pub fn is_identity_map(&self) -> bool {
        self.mask == 1 << self.a.index()
    }

    /// The group inverse `(A - a + a^-1, a^-1)`.
    pub fn inverse(&self) -> Self {
        let mut mask = self.mask;
        mask &= !(1 << self.a.index());
        mask |= 1 << self.a.inverse().index();
        Whitehead2 {
            a: self.a.inverse(),
            mask,
        }
    }

    fn apply_letter(&self, out: &mut Vec<Letter>, c: Letter) {
        if c.vertex == self.a.vertex {
            out.push(c);
            return;
        }
        let in_a = mask_contains(self.mask, c);
        let inv_in_a = mask_contains(self.mask, c.inverse());
        match (in_a, inv_in_a) {
            (false, false) => out.push(c),
            (true, false) => {
                out.push(c);
                out.push(self.a);
            }
            (false, true) => {
                out.push(self.a.inverse());
                out.push(c);
            }
            (true, true) => {
                out.push(self.a.inverse());
                out.push(c);
                out.push(self.a);
            }
        }
    }

    /// Serialization shape used by the debugging dumps:
    /// `{"a": "+3", "A": ["+3", "+1", "-1"]}`.
    pub fn describe(&self, n: usize) -> Whitehead2Dump {
        Whitehead2Dump {
            a: self.a,
            set: self.letters(n),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Whitehead2Dump {
    pub a: Letter,
    #[serde(rename = "A")]
    pub set: Vec<Letter>,
}

/// A type (1) Whitehead automorphism: a permutation of the letters that
/// commutes with inversion and induces a graph automorphism.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Whitehead1 {
    images: Vec<Letter>,
}

impl Whitehead1 {
    /// Builds from a vertex permutation (`map[v]`, 1-based) plus a sign
    /// flip set; rejects maps that do not preserve adjacency.
    pub fn new(tree: &LabeledTree, map: &[usize], flips: &[bool]) -> Result<Self, AutError> {
        let n = tree.node_count();
        assert_eq!(map.len(), n + 1, "vertex map must be 1-based of length n+1");
        assert_eq!(flips.len(), n + 1, "flip set must be 1-based of length n+1");
        let mut seen = vec![false; n + 1];
        for v in 1..=n {
            let w = map[v];
            if w == 0 || w > n {
                return Err(AutError::BadLabel { label: w, n });
            }
            if seen[w] {
                return Err(AutError::InvalidPair);
            }
            seen[w] = true;
        }
        for &(u, v) in tree.edges() {
            if !tree.adjacent(map[u], map[v]) {
                return Err(AutError::InvalidPair);
            }
        }
        let mut images = vec![Letter::positive(1); 2 * n];
        for v in 1..=n {
            let img = if flips[v] {
                Letter::negative(map[v])
            } else {
                Letter::positive(map[v])
            };
            images[Letter::positive(v).index()] = img;
            images[Letter::negative(v).index()] = img.inverse();
        }
        Ok(Whitehead1 { images })
    }

    pub fn identity(tree: &LabeledTree) -> Self {
        let n = tree.node_count();
        let map: Vec<usize> = (0..=n).collect();
        Self::new(tree, &map, &vec![false; n + 1]).expect("identity is graphic")
    }

    /// The transposition of two vertices, as a letter permutation.
    pub fn transposition(tree: &LabeledTree, u: usize, v: usize) -> Result<Self, AutError> {
        let n = tree.node_count();
        let mut map: Vec<usize> = (0..=n).collect();
        map.swap(u, v);
        Self::new(tree, &map, &vec![false; n + 1])
    }

    /// The inversion about one vertex.
    pub fn inversion(tree: &LabeledTree, v: usize) -> Result<Self, AutError> {
        let n = tree.node_count();
        let map: Vec<usize> = (0..=n).collect();
        let mut flips = vec![false; n + 1];
        flips[v] = true;
        Self::new(tree, &map, &flips)
    }

    pub fn apply_letter(&self, l: Letter) -> Letter {
        self.images[l.index()]
    }

    pub fn image_vertex(&self, v: usize) -> usize {
        self.images[Letter::positive(v).index()].vertex()
    }

    pub fn inverse(&self) -> Self {
        let mut images = vec![Letter::positive(1); self.images.len()];
        for (i, &img) in self.images.iter().enumerate() {
            images[img.index()] = Letter::from_index(i);
        }
        Whitehead1 { images }
    }

    /// Membership in the signed class-preserving sort: every thin vertex is
    /// fixed with positive sign, every vertex of a larger `~`-class stays in
    /// its class, and vertices outside the classes are fixed (sign flips are
    /// allowed only on non-thin vertices).
    pub fn is_sym1_element(&self, tree: &LabeledTree) -> bool {
        let n = tree.node_count();
        let classes = tree.sim_classes();
        let mut class_of = vec![usize::MAX; n + 1];
        for (i, class) in classes.iter().enumerate() {
            for &v in class {
                class_of[v] = i;
            }
        }
        for v in 1..=n {
            let img = self.images[Letter::positive(v).index()];
            if class_of[v] == usize::MAX {
                // thin vertex: fixed, no inversion
                if img != Letter::positive(v) {
                    return false;
                }
            } else if class_of[img.vertex()] != class_of[v] {
                return false;
            }
        }
        true
    }

    /// A purely graphic automorphism (no sign flips anywhere).
    pub fn is_graphic(&self) -> bool {
        self.images
            .iter()
            .enumerate()
            .all(|(i, img)| img.negative == (i % 2 == 1))
    }

    /// Image of a letter set under the permutation.
    pub fn map_whitehead2(&self, tree: &LabeledTree, w: &Whitehead2) -> Whitehead2 {
        let n = tree.node_count();
        let letters: Vec<Letter> = w
            .letters(n)
            .into_iter()
            .map(|l| self.apply_letter(l))
            .collect();
        Whitehead2::new(tree, &letters, self.apply_letter(w.a))
            .expect("image of a valid pair under a graph symmetry is valid")
    }
}

/// Either kind of Whitehead automorphism.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum WhiteheadAuto {
    Type1(Whitehead1),
    Type2(Whitehead2),
}

impl WhiteheadAuto {
    pub fn inverse(&self) -> Self {
        match self {
            WhiteheadAuto::Type1(s) => WhiteheadAuto::Type1(s.inverse()),
            WhiteheadAuto::Type2(w) => WhiteheadAuto::Type2(w.inverse()),
        }
    }

    fn apply_raw(&self, word: &Word) -> Word {
        match self {
            WhiteheadAuto::Type1(s) => {
                Word(word.0.iter().map(|&l| s.apply_letter(l)).collect())
            }
            WhiteheadAuto::Type2(w) => {
                let mut out = Vec::with_capacity(word.0.len() * 3);
                for &l in &word.0 {
                    w.apply_letter(&mut out, l);
                }
                Word(out)
            }
        }
    }
}

/// Image of a word under one automorphism, in normal form.
pub fn apply(tree: &LabeledTree, auto: &WhiteheadAuto, word: &Word) -> Word {
    normal_form(tree, &auto.apply_raw(word))
}

/// A formal product of Whitehead automorphisms with exponents `+-1`,
/// applied rightmost first.
pub type AutWord = [(WhiteheadAuto, i32)];

pub fn apply_expr(tree: &LabeledTree, expr: &AutWord, word: &Word) -> Word {
    let mut current = word.clone();
    for (auto, exp) in expr.iter().rev() {
        let image = match exp {
            1 => auto.apply_raw(&current),
            -1 => auto.inverse().apply_raw(&current),
            _ => panic!("exponents other than +-1 are not used"),
        };
        current = normal_form(tree, &image);
    }
    current
}

/// Whether two automorphism words define the same automorphism: identical
/// normal-form images on every generator.
pub fn aut_equal(tree: &LabeledTree, lhs: &AutWord, rhs: &AutWord) -> bool {
    (1..=tree.node_count()).all(|v| {
        let w = Word::generator(v);
        apply_expr(tree, lhs, &w) == apply_expr(tree, rhs, &w)
    })
}

/// Default cap on the number of generated type (2) automorphisms.
pub const DEFAULT_GENERATOR_BUDGET: usize = 2_000_000;

/// Every canonical valid pair `(A, a)` over the tree: for each acting letter,
/// the conjugated part runs over unions of components of the tree minus
/// `st(a)` and the dominated part over sign choices for the dominated
/// vertices not already conjugated. The identity pair is excluded.
pub fn enumerate_type2(
    tree: &LabeledTree,
    budget: usize,
) -> Result<Vec<Whitehead2>, AutError> {
    let n = tree.node_count();
    assert!(n >= 2, "automorphism enumeration needs n >= 2");
    assert!(n <= 32, "letter bitmask supports n <= 32");
    let mut out = Vec::new();
    for va in 1..=n {
        let comps = tree.components_without_star(va);
        let dominated: Vec<usize> = (1..=n)
            .filter(|&u| u != va && tree.leq(u, va).expect("labels in range"))
            .collect();
        for sign in [false, true] {
            let a = if sign {
                Letter::negative(va)
            } else {
                Letter::positive(va)
            };
            let a_bit = 1u64 << a.index();
            for comp_choice in 0..(1u64 << comps.len()) {
                let mut conj_mask = 0u64;
                let mut conj_verts = 0u64;
                for (i, comp) in comps.iter().enumerate() {
                    if comp_choice & (1 << i) != 0 {
                        for &v in comp {
                            conj_mask |= 1 << Letter::positive(v).index();
                            conj_mask |= 1 << Letter::negative(v).index();
                            conj_verts |= 1 << v;
                        }
                    }
                }
                let avail: Vec<usize> = dominated
                    .iter()
                    .copied()
                    .filter(|&u| conj_verts & (1 << u) == 0)
                    .collect();
                let assignments = 3u64.pow(avail.len() as u32);
                for code in 0..assignments {
                    let mut mask = a_bit | conj_mask;
                    let mut c = code;
                    for &u in &avail {
                        match c % 3 {
                            0 => {}
                            1 => mask |= 1 << Letter::positive(u).index(),
                            2 => mask |= 1 << Letter::negative(u).index(),
                            _ => unreachable!(),
                        }
                        c /= 3;
                    }
                    if mask == a_bit {
                        continue; // identity map
                    }
                    out.push(Whitehead2::from_parts_unchecked(a, mask));
                    if out.len() > budget {
                        return Err(AutError::TooLarge { n, budget });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The named generator families realized in Whitehead form.
pub struct NamedGenerators {
    /// `(b, a, auto)` sending `b` to `ba`, one per ordered pair with `b <= a`.
    pub transvections: Vec<(usize, usize, Whitehead2)>,
    /// `(a, component, auto)` conjugating one component of the tree minus
    /// `st(a)` by `a`.
    pub partial_conjugations: Vec<(usize, Vec<usize>, Whitehead2)>,
    /// Inversions about non-thin vertices.
    pub inversions: Vec<(usize, Whitehead1)>,
}

pub fn named_generators(tree: &LabeledTree) -> NamedGenerators {
    let n = tree.node_count();
    let mut transvections = Vec::new();
    let mut partial_conjugations = Vec::new();
    let mut inversions = Vec::new();
    for a in 1..=n {
        for b in 1..=n {
            if a != b && tree.leq(b, a).expect("labels in range") {
                let auto = Whitehead2::new(
                    tree,
                    &[Letter::positive(a), Letter::positive(b)],
                    Letter::positive(a),
                )
                .expect("dominated pair is a transvection");
                transvections.push((b, a, auto));
            }
        }
        for comp in tree.components_without_star(a) {
            let mut letters = vec![Letter::positive(a)];
            for &v in &comp {
                letters.push(Letter::positive(v));
                letters.push(Letter::negative(v));
            }
            let auto = Whitehead2::new(tree, &letters, Letter::positive(a))
                .expect("component conjugation is valid");
            partial_conjugations.push((a, comp, auto));
        }
        if !tree.is_thin(a).expect("labels in range") {
            inversions.push((
                a,
                Whitehead1::inversion(tree, a).expect("inversion is graphic"),
            ));
        }
    }
    NamedGenerators {
        transvections,
        partial_conjugations,
        inversions,
    }
}

/// One generator of the signed class-preserving type (1) sort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sym1GenKind {
    /// Swap of two consecutive leaves of one `~`-class.
    Transposition { class: usize, u: usize, v: usize },
    /// Sign flip at one non-thin vertex.
    Inversion { vertex: usize },
}

#[derive(Debug, Clone)]
pub struct Sym1Gen {
    pub kind: Sym1GenKind,
    pub auto: Whitehead1,
}

/// Generators of the signed class-preserving sort: adjacent transpositions
/// within each leaf `~`-class plus one inversion per class member.
pub fn sym1_generators(tree: &LabeledTree) -> Vec<Sym1Gen> {
    let mut out = Vec::new();
    for (ci, class) in tree.sim_classes().iter().enumerate() {
        for w in class.windows(2) {
            out.push(Sym1Gen {
                kind: Sym1GenKind::Transposition {
                    class: ci,
                    u: w[0],
                    v: w[1],
                },
                auto: Whitehead1::transposition(tree, w[0], w[1])
                    .expect("class leaves are symmetric"),
            });
        }
        for &v in class {
            out.push(Sym1Gen {
                kind: Sym1GenKind::Inversion { vertex: v },
                auto: Whitehead1::inversion(tree, v).expect("inversion is graphic"),
            });
        }
    }
    out
}

/// The basis of deep partial conjugations: one coordinate per pair
/// `(deep vertex a, component of the tree minus st(a))`. Its size equals
/// the invariant `upsilon`.
pub struct OmegaBasis {
    items: Vec<(usize, Vec<usize>)>,
}

impl OmegaBasis {
    pub fn new(tree: &LabeledTree, profile: &BoundaryProfile) -> Self {
        let mut items = Vec::new();
        for &v in profile.deep() {
            for comp in tree.components_without_star(v) {
                items.push((v, comp));
            }
        }
        OmegaBasis { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[(usize, Vec<usize>)] {
        &self.items
    }

    fn index_of(&self, vertex: usize, member: usize) -> Option<usize> {
        self.items
            .iter()
            .position(|(v, comp)| *v == vertex && comp.binary_search(&member).is_ok())
    }

    /// The deep conjugation `c_{Y,a}` as a Whitehead pair.
    pub fn conjugation(&self, tree: &LabeledTree, index: usize) -> Whitehead2 {
        let (a, comp) = &self.items[index];
        let mut letters = vec![Letter::positive(*a)];
        for &v in comp {
            letters.push(Letter::positive(v));
            letters.push(Letter::negative(v));
        }
        Whitehead2::new(tree, &letters, Letter::positive(*a))
            .expect("deep conjugation is valid")
    }
}

/// The projection of a type (2) pair onto the deep conjugation coordinates.
///
/// Pairs whose acting vertex is within distance 2 of a leaf map to zero.
/// For a deep acting vertex the dominated part is necessarily empty (no
/// vertex is dominated by a deep one), so the pair decomposes into deep
/// conjugations, one per conjugated component; a negative acting letter
/// contributes the opposite sign through its inverse pair.
pub fn phi_type2(
    tree: &LabeledTree,
    profile: &BoundaryProfile,
    omega: &OmegaBasis,
    w: &Whitehead2,
) -> Vec<i64> {
    let mut coords = vec![0i64; omega.len()];
    let (pair, sign) = if w.acting_letter().is_positive() {
        (w.clone(), 1i64)
    } else {
        (w.inverse(), -1i64)
    };
    let va = pair.acting_letter().vertex();
    if profile.dist(va) <= 2 {
        return coords;
    }
    let n = tree.node_count();
    assert!(
        pair.dominated_letters(n).is_empty(),
        "a deep vertex dominates nothing, so the pair must be pure conjugation"
    );
    let mut conjugated = pair.conjugated_vertices(n);
    while let Some(&member) = conjugated.first() {
        let idx = omega
            .index_of(va, member)
            .expect("conjugated component of a deep vertex is in the basis");
        coords[idx] += sign;
        let comp = &omega.items()[idx].1;
        conjugated.retain(|v| comp.binary_search(v).is_err());
    }
    coords
}

/// Projection of any Whitehead automorphism; the type (1) sort maps to zero.
pub fn phi(
    tree: &LabeledTree,
    profile: &BoundaryProfile,
    omega: &OmegaBasis,
    auto: &WhiteheadAuto,
) -> Vec<i64> {
    match auto {
        WhiteheadAuto::Type1(_) => vec![0; omega.len()],
        WhiteheadAuto::Type2(w) => phi_type2(tree, profile, omega, w),
    }
}
