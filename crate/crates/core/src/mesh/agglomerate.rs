use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{facet_key, FaceNeighbors, PolyMesh};
use crate::error::{Error, Result};

fn adjacency(mesh: &PolyMesh) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); mesh.n_elements()];
    for (_, face) in mesh.interior_faces() {
        if let FaceNeighbors::Interior { owner, neighbor } = face.neighbors {
            adj[owner].push(neighbor);
            adj[neighbor].push(owner);
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

fn bfs_update(adj: &[Vec<usize>], source: usize, dist: &mut [usize]) {
    let mut queue = VecDeque::from([source]);
    dist[source] = 0;
    while let Some(e) = queue.pop_front() {
        for &nb in &adj[e] {
            if dist[nb] > dist[e] + 1 {
                dist[nb] = dist[e] + 1;
                queue.push_back(nb);
            }
        }
    }
}

/// Greedy graph partition: farthest-point seeding on the face-adjacency graph,
/// then simultaneous breadth-first growth where the currently smallest part
/// claims the next element. Returns the part id of every element.
fn partition(adj: &[Vec<usize>], n_parts: usize, seed: u64) -> Vec<usize> {
    let n = adj.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seeds = vec![rng.gen_range(0..n)];
    let mut dist = vec![usize::MAX; n];
    bfs_update(adj, seeds[0], &mut dist);
    while seeds.len() < n_parts {
        // farthest element from all seeds; lowest index on ties
        let (next, _) = dist
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(&a.0)))
            .expect("non-empty mesh");
        seeds.push(next);
        bfs_update(adj, next, &mut dist);
    }

    const UNASSIGNED: usize = usize::MAX;
    let mut part = vec![UNASSIGNED; n];
    let mut sizes = vec![1usize; n_parts];
    let mut frontier: Vec<VecDeque<usize>> = Vec::with_capacity(n_parts);
    for (p, &s) in seeds.iter().enumerate() {
        part[s] = p;
        frontier.push(adj[s].iter().copied().collect());
    }
    let mut remaining = n - n_parts;
    while remaining > 0 {
        let grow = (0..n_parts)
            .filter(|&p| !frontier[p].is_empty())
            .min_by_key(|&p| (sizes[p], p))
            .expect("connected mesh always has a growable part");
        while let Some(e) = frontier[grow].pop_front() {
            if part[e] == UNASSIGNED {
                part[e] = grow;
                sizes[grow] += 1;
                remaining -= 1;
                frontier[grow].extend(adj[e].iter().copied().filter(|&nb| part[nb] == UNASSIGNED));
                break;
            }
        }
    }
    part
}

fn is_connected(adj: &[Vec<usize>], members: &[usize], part: &[usize], id: usize) -> bool {
    let mut seen = HashMap::new();
    let mut queue = VecDeque::from([members[0]]);
    seen.insert(members[0], ());
    while let Some(e) = queue.pop_front() {
        for &nb in &adj[e] {
            if part[nb] == id && seen.insert(nb, ()).is_none() {
                queue.push_back(nb);
            }
        }
    }
    seen.len() == members.len()
}

/// Agglomerates a simplicial mesh into `n_parts` face-connected polytopic
/// elements. The input simplices become the sub-simplex tessellation of the
/// agglomerates and boundary tags are inherited facet by facet.
pub fn agglomerate_mesh(mesh: &PolyMesh, n_parts: usize, seed: u64) -> Result<PolyMesh> {
    if !mesh.is_simplicial() {
        return Err(Error::Mesh("agglomeration input must be simplicial".into()));
    }
    if n_parts == 0 || n_parts > mesh.n_elements() {
        return Err(Error::Mesh(format!(
            "cannot split {} elements into {n_parts} parts",
            mesh.n_elements()
        )));
    }
    let adj = adjacency(mesh);
    {
        let mut dist = vec![usize::MAX; adj.len()];
        bfs_update(&adj, 0, &mut dist);
        if dist.contains(&usize::MAX) {
            return Err(Error::Mesh("input mesh is not face-connected".into()));
        }
    }
    let raw = partition(&adj, n_parts, seed);

    // Number parts by their smallest input element.
    let mut first = vec![usize::MAX; n_parts];
    for (e, &p) in raw.iter().enumerate() {
        first[p] = first[p].min(e);
    }
    let mut order: Vec<usize> = (0..n_parts).collect();
    order.sort_by_key(|&p| first[p]);
    let mut relabel = vec![0; n_parts];
    for (new, &old) in order.iter().enumerate() {
        relabel[old] = new;
    }
    let part: Vec<usize> = raw.iter().map(|&p| relabel[p]).collect();

    let mut members = vec![Vec::new(); n_parts];
    for (e, &p) in part.iter().enumerate() {
        members[p].push(e);
    }
    let mut element_simplices = Vec::with_capacity(n_parts);
    for (p, m) in members.iter().enumerate() {
        if m.is_empty() {
            return Err(Error::Mesh(format!("part {p} is empty")));
        }
        if !is_connected(&adj, m, &part, p) {
            return Err(Error::Mesh(format!("part {p} is not face-connected")));
        }
        let measure: f64 = m.iter().map(|&e| mesh.elements()[e].measure).sum();
        if measure <= 0.0 {
            return Err(Error::Mesh(format!("part {p} has zero measure")));
        }
        element_simplices.push(
            m.iter()
                .map(|&e| mesh.elements()[e].sub_simplices[0].clone())
                .collect(),
        );
    }

    let tags: HashMap<Vec<usize>, u32> = mesh
        .boundary_faces()
        .map(|(_, f)| (facet_key(&f.vertices), f.tag().expect("boundary")))
        .collect();
    PolyMesh::from_simplices(
        mesh.dim(),
        mesh.vertices().to_vec(),
        element_simplices,
        |facet, _| tags.get(&facet_key(facet)).copied().unwrap_or(0),
    )
}
