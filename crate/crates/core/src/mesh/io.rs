//! Plain-text mesh format (see `docs/mesh-format.md`).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{facet_key, PolyMesh};
use crate::error::{Error, Result};

pub fn write_mesh(mesh: &PolyMesh, path: &Path) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

pub fn mesh_to_string(mesh: &PolyMesh) -> String {
    let dim = mesh.dim();
    let mut s = String::new();
    writeln!(s, "{} {} {}", dim, mesh.vertices().len(), mesh.n_elements()).unwrap();
    for v in mesh.vertices() {
        let coords: Vec<String> = v[..dim].iter().map(|x| format!("{x:?}")).collect();
        writeln!(s, "{}", coords.join(" ")).unwrap();
    }
    for e in mesh.elements() {
        let mut line = vec![e.vertices.len().to_string()];
        line.extend(e.vertices.iter().map(|v| v.to_string()));
        if e.sub_simplices.len() == 1 && e.vertices.len() == dim + 1 {
            line.push("0".into());
            // keep the simplex vertex order
            line[1..=dim + 1]
                .iter_mut()
                .zip(&e.sub_simplices[0])
                .for_each(|(slot, v)| *slot = v.to_string());
        } else {
            line.push(e.sub_simplices.len().to_string());
            line.extend(e.sub_simplices.iter().flatten().map(|v| v.to_string()));
        }
        writeln!(s, "{}", line.join(" ")).unwrap();
    }
    let tagged: Vec<_> = mesh.boundary_faces().collect();
    writeln!(s, "boundary {}", tagged.len()).unwrap();
    for (_, f) in tagged {
        let ids: Vec<String> = f.vertices.iter().map(|v| v.to_string()).collect();
        writeln!(s, "{} {}", ids.join(" "), f.tag().unwrap()).unwrap();
    }
    s
}

struct Tokens<'a> {
    lines: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
                .filter(|(_, l)| !l.is_empty()),
        );
        Tokens { lines: it.peekable() }
    }

    fn line(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        self.lines
            .next()
            .map(|(n, l)| (n, l.split_whitespace().collect()))
            .ok_or_else(|| Error::Mesh(format!("unexpected end of file, expected {what}")))
    }
}

fn parse<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::Mesh(format!("line {line}: cannot parse `{tok}`")))
}

pub fn read_mesh(path: &Path) -> Result<PolyMesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn parse_mesh(text: &str) -> Result<PolyMesh> {
    let mut tokens = Tokens::new(text);
    let (ln, header) = tokens.line("header")?;
    if header.len() != 3 {
        return Err(Error::Mesh(format!("line {ln}: header must be `dim n_vertices n_elements`")));
    }
    let dim: usize = parse(header[0], ln)?;
    let nv: usize = parse(header[1], ln)?;
    let ne: usize = parse(header[2], ln)?;
    if dim != 2 && dim != 3 {
        return Err(Error::Mesh(format!("line {ln}: dimension must be 2 or 3")));
    }
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, t) = tokens.line("vertex")?;
        if t.len() != dim {
            return Err(Error::Mesh(format!("line {ln}: expected {dim} coordinates")));
        }
        let mut p = [0.0; 3];
        for k in 0..dim {
            p[k] = parse(t[k], ln)?;
        }
        vertices.push(p);
    }
    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, t) = tokens.line("element")?;
        let ids: Vec<usize> = t.iter().map(|x| parse(x, ln)).collect::<Result<_>>()?;
        let n_vert = *ids.first().ok_or_else(|| Error::Mesh(format!("line {ln}: empty element")))?;
        let n_sub = *ids
            .get(1 + n_vert)
            .ok_or_else(|| Error::Mesh(format!("line {ln}: missing sub-simplex count")))?;
        let rest = &ids[2 + n_vert..];
        let simplices = if n_sub == 0 {
            if n_vert != dim + 1 || !rest.is_empty() {
                return Err(Error::Mesh(format!(
                    "line {ln}: element without sub-simplices must be a {dim}-simplex"
                )));
            }
            vec![ids[1..=n_vert].to_vec()]
        } else {
            if rest.len() != n_sub * (dim + 1) {
                return Err(Error::Mesh(format!(
                    "line {ln}: expected {} sub-simplex indices, found {}",
                    n_sub * (dim + 1),
                    rest.len()
                )));
            }
            rest.chunks(dim + 1).map(|c| c.to_vec()).collect()
        };
        elements.push(simplices);
    }
    let mut tags = HashMap::new();
    if let Ok((ln, t)) = tokens.line("boundary section") {
        if t.len() != 2 || t[0] != "boundary" {
            return Err(Error::Mesh(format!("line {ln}: expected `boundary <count>`")));
        }
        let n: usize = parse(t[1], ln)?;
        for _ in 0..n {
            let (ln, t) = tokens.line("boundary facet")?;
            if t.len() != dim + 1 {
                return Err(Error::Mesh(format!("line {ln}: expected {dim} vertex ids and a tag")));
            }
            let ids: Vec<usize> = t[..dim].iter().map(|x| parse(x, ln)).collect::<Result<_>>()?;
            tags.insert(facet_key(&ids), parse::<u32>(t[dim], ln)?);
        }
    }
    PolyMesh::from_simplices(dim, vertices, elements, |facet, _| {
        tags.get(&facet_key(facet)).copied().unwrap_or(0)
    })
}
