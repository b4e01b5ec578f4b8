//! Plain-text model files.
//!
//! ```text
//! epiexplain-model v1
//! kind forest | ecpi
//! features NC,GA,MU,...
//! arities 3,5,5,...
//! # forest
//! seed <u64>
//! trees <count>
//! tree <index> <node count>
//! split <feature> <threshold> <left> <right>
//! leaf <positives> <total>
//! # ecpi
//! prior <f64>
//! smoothing <f64>
//! weight <feature> <code> <f64>      (one line per observed literal)
//! end
//! ```
//!
//! Reals are written in Rust's shortest round-trip form, so a model read
//! back from disk predicts bit-identically.

use std::io::{BufRead, Write};

use super::{EcpiModel, ForestModel, Model, Node, Tree};
use crate::error::{Error, Result};

pub const FORMAT_HEADER: &str = "epiexplain-model v1";

pub fn write_model(model: &Model, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{FORMAT_HEADER}")?;
    writeln!(out, "kind {}", model.kind())?;
    match model {
        Model::Forest(m) => {
            write_schema(&mut out, &m.names, &m.arities)?;
            writeln!(out, "seed {}", m.seed)?;
            writeln!(out, "trees {}", m.trees.len())?;
            for (i, tree) in m.trees.iter().enumerate() {
                writeln!(out, "tree {} {}", i, tree.nodes.len())?;
                for node in &tree.nodes {
                    match *node {
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => writeln!(out, "split {feature} {threshold} {left} {right}")?,
                        Node::Leaf { positives, total } => {
                            writeln!(out, "leaf {positives} {total}")?
                        }
                    }
                }
            }
        }
        Model::Ecpi(m) => {
            write_schema(&mut out, &m.names, &m.arities)?;
            writeln!(out, "prior {}", m.prior)?;
            writeln!(out, "smoothing {}", m.smoothing)?;
            for (f, codes) in m.weights.iter().enumerate() {
                for (code, w) in codes.iter().enumerate() {
                    if let Some(w) = w {
                        writeln!(out, "weight {f} {code} {w}")?;
                    }
                }
            }
        }
    }
    writeln!(out, "end")
}

fn write_schema(out: &mut impl Write, names: &[String], arities: &[u8]) -> std::io::Result<()> {
    writeln!(out, "features {}", names.join(","))?;
    let arities: Vec<String> = arities.iter().map(u8::to_string).collect();
    writeln!(out, "arities {}", arities.join(","))
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn fail<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(Error::ModelFormat {
            line: self.number,
            reason: reason.into(),
        })
    }

    /// Next line split on whitespace, with the leading keyword checked.
    fn expect(&mut self, keyword: &str) -> Result<Vec<String>> {
        self.number += 1;
        let line = match self.inner.next() {
            Some(Ok(line)) => line,
            Some(Err(e)) => return self.fail(format!("read error: {e}")),
            None => return self.fail(format!("unexpected end of file, expected {keyword:?}")),
        };
        let mut parts = line.split_whitespace().map(str::to_string);
        match parts.next() {
            Some(k) if k == keyword => Ok(parts.collect()),
            other => self.fail(format!("expected {keyword:?}, found {other:?}")),
        }
    }

    fn parse<T: std::str::FromStr>(&self, field: &str, what: &str) -> Result<T> {
        field
            .parse()
            .or_else(|_| self.fail(format!("invalid {what}: {field:?}")))
    }

    fn single<T: std::str::FromStr>(&mut self, keyword: &str) -> Result<T> {
        let fields = self.expect(keyword)?;
        if fields.len() != 1 {
            return self.fail(format!("{keyword} takes exactly one value"));
        }
        self.parse(&fields[0], keyword)
    }

    fn fields<T: std::str::FromStr, const N: usize>(&mut self, keyword: &str) -> Result<[T; N]> {
        let fields = self.expect(keyword)?;
        if fields.len() != N {
            return self.fail(format!(
                "{keyword} takes {N} values, found {}",
                fields.len()
            ));
        }
        let mut parsed = Vec::with_capacity(N);
        for f in &fields {
            parsed.push(self.parse::<T>(f, keyword)?);
        }
        Ok(parsed
            .try_into()
            .unwrap_or_else(|_| unreachable!("length checked above")))
    }
}

pub fn read_model(input: impl BufRead) -> Result<Model> {
    let mut lines = Lines {
        inner: input.lines(),
        number: 0,
    };
    lines.number += 1;
    match lines.inner.next() {
        Some(Ok(h)) if h.trim_end() == FORMAT_HEADER => {}
        _ => return lines.fail(format!("missing header {FORMAT_HEADER:?}")),
    }
    let kind: String = lines.single("kind")?;
    let names: Vec<String> = lines
        .single::<String>("features")?
        .split(',')
        .map(str::to_string)
        .collect();
    let arity_field: String = lines.single("arities")?;
    let mut arities = Vec::new();
    for a in arity_field.split(',') {
        arities.push(lines.parse::<u8>(a, "arity")?);
    }
    if arities.len() != names.len() {
        return lines.fail("feature and arity counts differ");
    }

    let model = match kind.as_str() {
        "forest" => {
            let seed: u64 = lines.single("seed")?;
            let count: usize = lines.single("trees")?;
            let mut trees = Vec::with_capacity(count);
            for i in 0..count {
                let [index, node_count] = lines.fields::<usize, 2>("tree")?;
                if index != i {
                    return lines.fail(format!("expected tree {i}, found {index}"));
                }
                let mut nodes = Vec::with_capacity(node_count);
                for _ in 0..node_count {
                    lines.number += 1;
                    let line = match lines.inner.next() {
                        Some(Ok(line)) => line,
                        _ => return lines.fail("truncated tree"),
                    };
                    let parts: Vec<&str> = line.split_whitespace().collect();
                    let node = match parts.as_slice() {
                        ["split", f, t, l, r] => {
                            let feature: usize = lines.parse(f, "feature")?;
                            if feature >= arities.len() {
                                return lines.fail("split feature out of range");
                            }
                            Node::Split {
                                feature,
                                threshold: lines.parse(t, "threshold")?,
                                left: lines.parse(l, "child")?,
                                right: lines.parse(r, "child")?,
                            }
                        }
                        ["leaf", p, t] => Node::Leaf {
                            positives: lines.parse(p, "count")?,
                            total: lines.parse(t, "count")?,
                        },
                        _ => return lines.fail(format!("malformed node {line:?}")),
                    };
                    nodes.push(node);
                }
                let in_range = |c: usize| c < nodes.len();
                let well_formed = !nodes.is_empty()
                    && nodes.iter().enumerate().all(|(i, n)| match *n {
                        // children are always stored after their parent
                        Node::Split { left, right, .. } => {
                            in_range(left) && in_range(right) && left > i && right > i
                        }
                        Node::Leaf { .. } => true,
                    });
                if !well_formed {
                    return lines.fail(format!("tree {i} has dangling child indices"));
                }
                trees.push(Tree { nodes });
            }
            if trees.is_empty() {
                return lines.fail("forest has no trees");
            }
            Model::Forest(ForestModel::from_parts(names, arities, trees, seed))
        }
        "ecpi" => {
            let prior: f64 = lines.single("prior")?;
            let smoothing: f64 = lines.single("smoothing")?;
            let mut weights: Vec<Vec<Option<f64>>> =
                arities.iter().map(|&a| vec![None; a as usize]).collect();
            loop {
                lines.number += 1;
                let line = match lines.inner.next() {
                    Some(Ok(line)) => line,
                    _ => return lines.fail("missing \"end\""),
                };
                let parts: Vec<&str> = line.split_whitespace().collect();
                match parts.as_slice() {
                    ["end"] => break,
                    ["weight", f, c, w] => {
                        let f: usize = lines.parse(f, "feature")?;
                        let c: usize = lines.parse(c, "code")?;
                        let w: f64 = lines.parse(w, "weight")?;
                        match weights.get_mut(f).and_then(|ws| ws.get_mut(c)) {
                            Some(slot) => *slot = Some(w),
                            None => return lines.fail("weight literal out of range"),
                        }
                    }
                    _ => return lines.fail(format!("malformed weight line {line:?}")),
                }
            }
            return Ok(Model::Ecpi(EcpiModel::from_parts(
                names, arities, prior, smoothing, weights,
            )?));
        }
        other => return lines.fail(format!("unknown model kind {other:?}")),
    };
    lines.expect("end")?;
    Ok(model)
}
