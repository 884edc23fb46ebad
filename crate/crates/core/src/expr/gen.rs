//! Interned generators: the indivisible symbols that monomials are built from.
//!
//! A generator is the independent variable `x`, a jet variable `u_n`, a named
//! parameter, an application of a formal function `f^(d)(arg)`, an exponential
//! `exp(m)`, a numeric surd base, or a registered factor polynomial (a sum that
//! appears with a negative or fractional exponent).
//!
//! Generators are interned in a process-wide table guarded by a lock and are
//! never freed. The category of a generator is encoded in the high bits of its
//! id so the hot paths never need the lock to ask "is this a factor?".

use std::sync::Arc;

use num_bigint::BigInt;
use once_cell::sync::Lazy;
use parking_lot::RwLock;
use rustc_hash::FxHashMap;

use super::poly::Poly;
use super::Expr;

/// Highest jet order the kernel can represent at all. The working bound used
/// by the jet calculus is configurable below this value.
pub const JET_HARD_LIMIT: u32 = 64;

const TAG_SHIFT: u32 = 24;
const INDEX_MASK: u32 = (1 << TAG_SHIFT) - 1;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GenId(u32);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
#[repr(u8)]
pub enum GenTag {
    X = 0,
    Jet = 1,
    Param = 2,
    Func = 3,
    Exp = 4,
    Surd = 5,
    Factor = 6,
}

const TAGS: [GenTag; 7] = [
    GenTag::X,
    GenTag::Jet,
    GenTag::Param,
    GenTag::Func,
    GenTag::Exp,
    GenTag::Surd,
    GenTag::Factor,
];

impl GenId {
    fn new(tag: GenTag, index: usize) -> Self {
        GenId(((tag as u32) << TAG_SHIFT) | index as u32)
    }

    pub fn tag(self) -> GenTag {
        TAGS[(self.0 >> TAG_SHIFT) as usize]
    }

    fn index(self) -> usize {
        (self.0 & INDEX_MASK) as usize
    }

    pub fn x() -> Self {
        GenId::new(GenTag::X, 0)
    }

    pub fn jet(n: u32) -> Self {
        assert!(n <= JET_HARD_LIMIT, "jet order {n} exceeds hard limit {JET_HARD_LIMIT}");
        GenId::new(GenTag::Jet, n as usize)
    }

    /// Jet order if this is a bare jet variable.
    pub fn jet_index(self) -> Option<u32> {
        (self.tag() == GenTag::Jet).then_some(self.index() as u32)
    }

    /// Factors and surds are the generators whose integer exponent parts are
    /// folded back into the polynomial structure.
    pub fn is_folded(self) -> bool {
        matches!(self.tag(), GenTag::Factor | GenTag::Surd)
    }

    pub fn is_factor(self) -> bool {
        self.tag() == GenTag::Factor
    }

    pub fn info(self) -> &'static GenInfo {
        match self.tag() {
            GenTag::X => BASE.0,
            GenTag::Jet => BASE.1[self.index()],
            _ => INTERNER.read().by_tag[self.tag() as usize][self.index()],
        }
    }

    pub fn kind(self) -> &'static GenKind {
        &self.info().kind
    }

    /// Whether `self` is `z` or (transitively) contains `z`.
    pub fn depends_on(self, z: GenId) -> bool {
        self == z || self.info().closure.binary_search(&z).is_ok()
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum GenKind {
    X,
    Jet(u32),
    Param(Arc<str>),
    /// `name^(order)(arg)`; the argument never contains another formal function.
    Func { name: Arc<str>, order: u32, arg: Expr },
    /// `exp(m)` for a monomial `m` with unit coefficient (or `1`).
    Exp(Expr),
    /// Positive integer without perfect-power factors, used with exponents in (0, 1).
    Surd(BigInt),
    /// Primitive multi-term polynomial over non-folded generators.
    Factor(Poly),
}

pub struct GenInfo {
    pub id: GenId,
    pub kind: GenKind,
    /// Generators occurring directly inside this one.
    pub support: Vec<GenId>,
    /// All generators reachable from this one, sorted, excluding itself.
    pub closure: Vec<GenId>,
    /// Largest jet order occurring anywhere inside (itself included).
    pub jet_order: Option<u32>,
    pub has_x: bool,
    /// Deterministic, registration-independent key used for printing order.
    pub sort_key: String,
}

struct Interner {
    by_tag: [Vec<&'static GenInfo>; 7],
    map: FxHashMap<&'static GenKind, GenId>,
    factors: Vec<GenId>,
}

static BASE: Lazy<(&'static GenInfo, Vec<&'static GenInfo>)> = Lazy::new(|| {
    let x: &'static GenInfo = Box::leak(Box::new(GenInfo {
        id: GenId::new(GenTag::X, 0),
        kind: GenKind::X,
        support: vec![],
        closure: vec![],
        jet_order: None,
        has_x: true,
        sort_key: "1".into(),
    }));
    let jets = (0..=JET_HARD_LIMIT)
        .map(|n| {
            &*Box::leak(Box::new(GenInfo {
                id: GenId::new(GenTag::Jet, n as usize),
                kind: GenKind::Jet(n),
                support: vec![],
                closure: vec![],
                jet_order: Some(n),
                has_x: false,
                sort_key: format!("2{n:03}"),
            }))
        })
        .collect();
    (x, jets)
});

static INTERNER: Lazy<RwLock<Interner>> = Lazy::new(|| {
    RwLock::new(Interner {
        by_tag: Default::default(),
        map: FxHashMap::default(),
        factors: Vec::new(),
    })
});

fn tag_of(kind: &GenKind) -> GenTag {
    match kind {
        GenKind::X => GenTag::X,
        GenKind::Jet(_) => GenTag::Jet,
        GenKind::Param(_) => GenTag::Param,
        GenKind::Func { .. } => GenTag::Func,
        GenKind::Exp(_) => GenTag::Exp,
        GenKind::Surd(_) => GenTag::Surd,
        GenKind::Factor(_) => GenTag::Factor,
    }
}

/// Interns a generator and returns its id.
pub fn intern(kind: GenKind) -> GenId {
    match kind {
        GenKind::X => return GenId::x(),
        GenKind::Jet(n) => return GenId::jet(n),
        _ => {}
    }
    if let Some(id) = INTERNER.read().map.get(&kind) {
        return *id;
    }
    let support: Vec<GenId> = match &kind {
        GenKind::Func { arg, .. } | GenKind::Exp(arg) => arg.gens(),
        GenKind::Factor(p) => p.gens(),
        _ => vec![],
    };
    let mut closure: Vec<GenId> = Vec::new();
    let mut jet_order: Option<u32> = None;
    let mut has_x = false;
    for g in &support {
        let info = g.info();
        closure.push(*g);
        closure.extend_from_slice(&info.closure);
        jet_order = jet_order.max(info.jet_order);
        has_x |= info.has_x;
    }
    closure.sort_unstable();
    closure.dedup();
    let sort_key = super::tree::gen_sort_key(&kind);
    let tag = tag_of(&kind);

    let mut guard = INTERNER.write();
    if let Some(id) = guard.map.get(&kind) {
        return *id;
    }
    let id = GenId::new(tag, guard.by_tag[tag as usize].len());
    let info: &'static GenInfo = Box::leak(Box::new(GenInfo {
        id,
        kind,
        support,
        closure,
        jet_order,
        has_x,
        sort_key,
    }));
    guard.by_tag[tag as usize].push(info);
    guard.map.insert(&info.kind, id);
    if tag == GenTag::Factor {
        guard.factors.push(id);
    }
    id
}

/// Looks up an already interned generator without creating it.
pub fn lookup(kind: &GenKind) -> Option<GenId> {
    match kind {
        GenKind::X => Some(GenId::x()),
        GenKind::Jet(n) => Some(GenId::jet(*n)),
        _ => INTERNER.read().map.get(kind).copied(),
    }
}

/// Snapshot of all registered factor generators.
pub fn registered_factors() -> Vec<GenId> {
    INTERNER.read().factors.clone()
}

pub fn param_id(name: &str) -> GenId {
    intern(GenKind::Param(Arc::from(name)))
}
