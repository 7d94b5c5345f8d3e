//! Text instance files.
//!
//! ```text
//! altproj-instance v1
//! [spec]
//! kind = random
//! d = 8
//! dims = 4 4 4
//! seed = 7
//! [end]
//! ```
//!
//! An optional `[bases]` section between `[spec]` and `[end]` stores
//! orthonormal bases explicitly: a line `subspace = <index> <d> <rank>`
//! followed by `d` rows of `rank` complex entries written as `re im` pairs.
//! Floats are written with 17 significant digits so files round-trip bit for
//! bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::fmt17;
use crate::linalg::{CMat, C64};
use crate::models::{self, AngleRule, BlockAlignedModel};
use crate::subspace::Subspace;

pub const HEADER: &str = "altproj-instance v1";

#[derive(Clone, Debug, PartialEq)]
pub enum InstanceKind {
    Random { d: usize, dims: Vec<usize>, seed: u64 },
    TwoLines { theta: f64 },
    BlockAligned { blocks: usize, rule: AngleRule },
    /// component `i` is `random_instance(d, components[i], seed + i)`
    ConvexCombination {
        d: usize,
        seed: u64,
        weights: Vec<f64>,
        components: Vec<Vec<usize>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    pub bases: Option<Vec<CMat>>,
}

/// A built instance.
#[derive(Clone, Debug)]
pub enum Instance {
    Family(Vec<Subspace>),
    Combination { families: Vec<Vec<Subspace>>, weights: Vec<f64> },
}

fn perr<T>(line: Option<usize>, field: &str, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        field: field.to_string(),
        message: message.into(),
    })
}

impl InstanceSpec {
    pub fn new(kind: InstanceKind) -> Self {
        Self { kind, bases: None }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            InstanceKind::Random { .. } => "random",
            InstanceKind::TwoLines { .. } => "two_lines",
            InstanceKind::BlockAligned { .. } => "block_aligned",
            InstanceKind::ConvexCombination { .. } => "convex_combination",
        }
    }

    pub fn block_model(&self) -> Option<Result<BlockAlignedModel>> {
        match &self.kind {
            InstanceKind::BlockAligned { blocks, rule } => Some(models::block_aligned(*blocks, rule.clone())),
            _ => None,
        }
    }

    fn generate(&self) -> Result<Vec<Vec<Subspace>>> {
        Ok(match &self.kind {
            InstanceKind::Random { d, dims, seed } => vec![models::random_instance(*d, dims, *seed)?],
            InstanceKind::TwoLines { theta } => {
                let (a, b) = models::two_lines(*theta)?;
                vec![vec![a, b]]
            }
            InstanceKind::BlockAligned { blocks, rule } => {
                let (a, b) = models::block_aligned(*blocks, rule.clone())?.subspaces();
                vec![vec![a, b]]
            }
            InstanceKind::ConvexCombination {
                d, seed, components, ..
            } => components
                .iter()
                .enumerate()
                .map(|(i, dims)| models::random_instance(*d, dims, seed.wrapping_add(i as u64)))
                .collect::<Result<_>>()?,
        })
    }

    fn family_sizes(&self) -> Vec<usize> {
        match &self.kind {
            InstanceKind::Random { dims, .. } => vec![dims.len()],
            InstanceKind::TwoLines { .. } | InstanceKind::BlockAligned { .. } => vec![2],
            InstanceKind::ConvexCombination { components, .. } => components.iter().map(Vec::len).collect(),
        }
    }

    /// Build the subspaces, from stored bases when present.
    pub fn build(&self) -> Result<Instance> {
        let families = match &self.bases {
            None => self.generate()?,
            Some(bases) => {
                let sizes = self.family_sizes();
                let total: usize = sizes.iter().sum();
                if bases.len() != total {
                    return perr(None, "bases", format!("expected {total} subspaces, found {}", bases.len()));
                }
                let mut it = bases.iter();
                let mut fams = Vec::new();
                for size in sizes {
                    let fam = (0..size)
                        .map(|_| Subspace::from_orthonormal(it.next().expect("counted").clone()))
                        .collect::<Result<Vec<_>>>()?;
                    fams.push(fam);
                }
                fams
            }
        };
        Ok(match &self.kind {
            InstanceKind::ConvexCombination { weights, .. } => Instance::Combination {
                families,
                weights: weights.clone(),
            },
            _ => Instance::Family(families.into_iter().next().expect("one family")),
        })
    }

    /// Copy of the spec with every basis stored explicitly.
    pub fn materialize(&self) -> Result<Self> {
        let bases = self
            .generate()?
            .into_iter()
            .flatten()
            .map(|s| s.basis().clone())
            .collect();
        Ok(Self {
            kind: self.kind.clone(),
            bases: Some(bases),
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{HEADER}\n[spec]\nkind = {}\n", self.kind_name());
        let join_u = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let join_f = |v: &[f64]| v.iter().map(|&x| fmt17(x)).collect::<Vec<_>>().join(" ");
        match &self.kind {
            InstanceKind::Random { d, dims, seed } => {
                let _ = writeln!(out, "d = {d}\ndims = {}\nseed = {seed}", join_u(dims));
            }
            InstanceKind::TwoLines { theta } => {
                let _ = writeln!(out, "theta = {}", fmt17(*theta));
            }
            InstanceKind::BlockAligned { blocks, rule } => {
                let _ = writeln!(out, "blocks = {blocks}");
                match rule {
                    AngleRule::InverseK => out.push_str("rule = inv_k\n"),
                    AngleRule::InverseSqrtK => out.push_str("rule = inv_sqrt_k\n"),
                    AngleRule::Custom(a) => {
                        let _ = writeln!(out, "rule = custom\nangles = {}", join_f(a));
                    }
                }
            }
            InstanceKind::ConvexCombination {
                d,
                seed,
                weights,
                components,
            } => {
                let _ = writeln!(out, "d = {d}\nseed = {seed}\nweights = {}", join_f(weights));
                for comp in components {
                    let _ = writeln!(out, "component = {}", join_u(comp));
                }
            }
        }
        if let Some(bases) = &self.bases {
            out.push_str("[bases]\n");
            for (i, b) in bases.iter().enumerate() {
                let _ = writeln!(out, "subspace = {i} {} {}", b.nrows(), b.ncols());
                for r in 0..b.nrows() {
                    let row: Vec<String> = (0..b.ncols())
                        .map(|j| format!("{} {}", fmt17(b[(r, j)].re), fmt17(b[(r, j)].im)))
                        .collect();
                    out.push_str(&row.join(" "));
                    out.push('\n');
                }
            }
        }
        out.push_str("[end]\n");
        out
    }
}

struct Entry<'a> {
    line: usize,
    key: &'a str,
    value: &'a str,
}

struct Fields<'a> {
    entries: Vec<Entry<'a>>,
    used: Vec<bool>,
}

impl<'a> Fields<'a> {
    fn take(&mut self, key: &str) -> Option<&Entry<'a>> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some(&self.entries[i])
    }

    fn required(&mut self, key: &str) -> Result<&Entry<'a>> {
        match self.take(key) {
            Some(e) => Ok(e),
            None => perr(None, key, "missing required field"),
        }
    }

    fn finish(&self) -> Result<()> {
        match self.entries.iter().zip(&self.used).find(|(_, u)| !**u) {
            Some((e, _)) => perr(Some(e.line), e.key, "unknown field for this kind"),
            None => Ok(()),
        }
    }
}

fn parse_one<T: std::str::FromStr>(e: &Entry) -> Result<T> {
    match e.value.parse() {
        Ok(v) => Ok(v),
        Err(_) => perr(Some(e.line), e.key, format!("cannot parse `{}`", e.value)),
    }
}

fn parse_list<T: std::str::FromStr>(e: &Entry) -> Result<Vec<T>> {
    e.value
        .split_whitespace()
        .map(|tok| match tok.parse() {
            Ok(v) => Ok(v),
            Err(_) => perr(Some(e.line), e.key, format!("cannot parse `{tok}`")),
        })
        .collect()
}

pub fn parse_instance_str(text: &str) -> Result<InstanceSpec> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut it = lines.into_iter().peekable();
    match it.next() {
        Some((_, h)) if h == HEADER => {}
        Some((n, h)) => return perr(Some(n), "header", format!("expected `{HEADER}`, found `{h}`")),
        None => return perr(None, "header", "empty file"),
    }
    match it.next() {
        Some((_, "[spec]")) => {}
        Some((n, l)) => return perr(Some(n), "section", format!("expected `[spec]`, found `{l}`")),
        None => return perr(None, "section", "missing section [spec]"),
    }
    let mut entries = Vec::new();
    while let Some(&(n, l)) = it.peek() {
        if l.starts_with('[') {
            break;
        }
        it.next();
        let Some((k, v)) = l.split_once('=') else {
            return perr(Some(n), "spec", format!("expected `key = value`, found `{l}`"));
        };
        let key = k.trim();
        if key != "component" && entries.iter().any(|e: &Entry| e.key == key) {
            return perr(Some(n), key, "duplicate field");
        }
        entries.push(Entry {
            line: n,
            key,
            value: v.trim(),
        });
    }
    let used = vec![false; entries.len()];
    let mut f = Fields { entries, used };
    let kind_entry = f.required("kind")?;
    let (kind_line, kind_name) = (kind_entry.line, kind_entry.value);
    let kind = match kind_name {
        "random" => {
            let d = parse_one(f.required("d")?)?;
            let dims = parse_list(f.required("dims")?)?;
            let seed = parse_one(f.required("seed")?)?;
            InstanceKind::Random { d, dims, seed }
        }
        "two_lines" => InstanceKind::TwoLines {
            theta: parse_one(f.required("theta")?)?,
        },
        "block_aligned" => {
            let blocks = parse_one(f.required("blocks")?)?;
            let rule_entry = f.required("rule")?;
            let (rule_line, rule_name) = (rule_entry.line, rule_entry.value);
            let rule = match rule_name {
                "inv_k" => AngleRule::InverseK,
                "inv_sqrt_k" => AngleRule::InverseSqrtK,
                "custom" => AngleRule::Custom(parse_list(f.required("angles")?)?),
                other => return perr(Some(rule_line), "rule", format!("unknown angle rule `{other}`")),
            };
            InstanceKind::BlockAligned { blocks, rule }
        }
        "convex_combination" => {
            let d = parse_one(f.required("d")?)?;
            let seed = parse_one(f.required("seed")?)?;
            let weights = parse_list(f.required("weights")?)?;
            let mut components = Vec::new();
            for i in 0..f.entries.len() {
                if f.entries[i].key == "component" {
                    f.used[i] = true;
                    components.push(parse_list(&f.entries[i])?);
                }
            }
            if components.is_empty() {
                return perr(None, "component", "missing required field");
            }
            InstanceKind::ConvexCombination {
                d,
                seed,
                weights,
                components,
            }
        }
        other => return perr(Some(kind_line), "kind", format!("unknown kind `{other}`")),
    };
    f.finish()?;

    let mut bases = None;
    match it.next() {
        Some((_, "[end]")) => {}
        Some((_, "[bases]")) => {
            let mut list = Vec::new();
            loop {
                match it.next() {
                    Some((_, "[end]")) => break,
                    Some((n, l)) => {
                        let Some(("subspace", v)) = l.split_once('=').map(|(k, v)| (k.trim(), v.trim())) else {
                            return perr(Some(n), "subspace", format!("expected `subspace = i d r`, found `{l}`"));
                        };
                        let e = Entry {
                            line: n,
                            key: "subspace",
                            value: v,
                        };
                        let head: Vec<usize> = parse_list(&e)?;
                        if head.len() != 3 || head[0] != list.len() {
                            return perr(Some(n), "subspace", "expected `subspace = <next index> <d> <rank>`");
                        }
                        let (d, r) = (head[1], head[2]);
                        let mut m = CMat::zeros(d, r);
                        for row in 0..d {
                            let Some((rn, rl)) = it.next() else {
                                return perr(None, "bases", format!("missing section [end] (subspace {} truncated)", head[0]));
                            };
                            let re = Entry {
                                line: rn,
                                key: "bases",
                                value: rl,
                            };
                            let vals: Vec<f64> = parse_list(&re)?;
                            if vals.len() != 2 * r {
                                return perr(Some(rn), "bases", format!("expected {} numbers, found {}", 2 * r, vals.len()));
                            }
                            for j in 0..r {
                                m[(row, j)] = C64::new(vals[2 * j], vals[2 * j + 1]);
                            }
                        }
                        list.push(m);
                    }
                    None => return perr(None, "section", "missing section [end]"),
                }
            }
            bases = Some(list);
        }
        Some((n, l)) => return perr(Some(n), "section", format!("expected `[bases]` or `[end]`, found `{l}`")),
        None => return perr(None, "section", "missing section [end]"),
    }
    if let Some((n, l)) = it.next() {
        return perr(Some(n), "section", format!("content after [end]: `{l}`"));
    }
    Ok(InstanceSpec { kind, bases })
}

pub fn parse_instance(path: &Path) -> Result<InstanceSpec> {
    match std::fs::read_to_string(path) {
        Ok(text) => parse_instance_str(&text),
        Err(e) => perr(None, "path", format!("{}: {e}", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    fn tokens(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    fn roundtrip(spec: &InstanceSpec) {
        let text = spec.to_text();
        let back = parse_instance_str(&text).unwrap();
        assert_eq!(&back, spec);
        assert_eq!(tokens(&back.to_text()), tokens(&text));
    }

    #[test]
    fn roundtrips_every_kind() {
        roundtrip(&InstanceSpec::new(InstanceKind::TwoLines { theta: FRAC_PI_3 }));
        roundtrip(&InstanceSpec::new(InstanceKind::Random {
            d: 6,
            dims: vec![3, 4],
            seed: 11,
        }));
        roundtrip(&InstanceSpec::new(InstanceKind::BlockAligned {
            blocks: 3,
            rule: AngleRule::Custom(vec![0.7, 0.1 + 0.2, 1e-7]),
        }));
        roundtrip(&InstanceSpec::new(InstanceKind::BlockAligned {
            blocks: 40,
            rule: AngleRule::InverseSqrtK,
        }));
        roundtrip(&InstanceSpec::new(InstanceKind::ConvexCombination {
            d: 5,
            seed: 2,
            weights: vec![0.25, 0.75],
            components: vec![vec![2, 3], vec![4, 4, 1]],
        }));
    }

    #[test]
    fn materialized_roundtrip_is_bit_exact() {
        let spec = InstanceSpec::new(InstanceKind::Random {
            d: 5,
            dims: vec![2, 3, 4],
            seed: 5,
        })
        .materialize()
        .unwrap();
        roundtrip(&spec);
        let (Instance::Family(a), Instance::Family(b)) = (spec.build().unwrap(), InstanceSpec::new(spec.kind.clone()).build().unwrap()) else {
            panic!("family expected");
        };
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.basis(), y.basis());
        }
    }

    #[test]
    fn whitespace_and_comments_are_ignored() {
        let text = "  altproj-instance v1\n\n[spec]  # section\nkind=two_lines\n  theta =   1.0471975511965979e0\n[end]\n";
        let spec = parse_instance_str(text).unwrap();
        assert_eq!(spec.kind, InstanceKind::TwoLines { theta: FRAC_PI_3 });
    }

    fn parse_err(text: &str) -> (Option<usize>, String, String) {
        match parse_instance_str(text) {
            Err(Error::Parse { line, field, message }) => (line, field, message),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_field_and_line() {
        let (line, field, _) = parse_err("altproj-instance v2\n[spec]\nkind = two_lines\ntheta = 1\n[end]\n");
        assert_eq!((line, field.as_str()), (Some(1), "header"));
        let (line, field, _) = parse_err("altproj-instance v1\n[spec]\nkind = triangle\n[end]\n");
        assert_eq!((line, field.as_str()), (Some(3), "kind"));
        let (line, field, _) = parse_err("altproj-instance v1\n[spec]\nkind = two_lines\ntheta = one\n[end]\n");
        assert_eq!((line, field.as_str()), (Some(4), "theta"));
        let (line, field, _) = parse_err("altproj-instance v1\n[spec]\nkind = two_lines\ntheta = 1\ncolor = red\n[end]\n");
        assert_eq!((line, field.as_str()), (Some(5), "color"));
        let (_, field, _) = parse_err("altproj-instance v1\n[spec]\nkind = random\nd = 3\nseed = 1\n[end]\n");
        assert_eq!(field, "dims");
    }

    #[test]
    fn truncated_file_names_missing_section() {
        let (_, _, msg) = parse_err("altproj-instance v1\n[spec]\nkind = two_lines\ntheta = 1\n");
        assert!(msg.contains("[end]"), "{msg}");
        let (_, _, msg) = parse_err("altproj-instance v1\n");
        assert!(msg.contains("[spec]"), "{msg}");
        let full = InstanceSpec::new(InstanceKind::TwoLines { theta: 1.0 }).materialize().unwrap().to_text();
        let cut: String = full.lines().take(7).map(|l| format!("{l}\n")).collect();
        let (_, _, msg) = parse_err(&cut);
        assert!(msg.contains("[end]"), "{msg}");
    }

    #[test]
    fn combination_builds_components() {
        let spec = InstanceSpec::new(InstanceKind::ConvexCombination {
            d: 4,
            seed: 1,
            weights: vec![0.5, 0.5],
            components: vec![vec![2, 2], vec![3, 1, 2]],
        });
        match spec.build().unwrap() {
            Instance::Combination { families, weights } => {
                assert_eq!(families.len(), 2);
                assert_eq!(families[1].len(), 3);
                assert_eq!(weights, vec![0.5, 0.5]);
            }
            Instance::Family(_) => panic!("combination expected"),
        }
    }
}
