use std::collections::HashMap;

use super::{Element, Mesh};

/// Newest-vertex bisection of the marked elements plus conforming closure.
pub fn bisect(mesh: &Mesh, marked: &[usize]) -> Mesh {
    bisect_with_parents(mesh, marked).0
}

/// Like [`bisect`], also returning for every new element the index of the old element it came from.
pub fn bisect_with_parents(mesh: &Mesh, marked: &[usize]) -> (Mesh, Vec<usize>) {
    let mut edge_marked = vec![false; mesh.n_edges()];
    let mut stack = Vec::new();
    let mark = |e: usize, edge_marked: &mut Vec<bool>, stack: &mut Vec<usize>| {
        if !edge_marked[e] {
            edge_marked[e] = true;
            let (k1, k2) = mesh.edges[e].elements;
            stack.push(k1);
            if let Some(k2) = k2 {
                stack.push(k2);
            }
        }
    };
    for &k in marked {
        let r = mesh.elements[k].refinement_edge as usize;
        mark(mesh.element_edges[k][r], &mut edge_marked, &mut stack);
    }
    // Closure: an element with any marked edge must also have its refinement edge marked.
    while let Some(k) = stack.pop() {
        let r = mesh.elements[k].refinement_edge as usize;
        let ref_edge = mesh.element_edges[k][r];
        if !edge_marked[ref_edge] && mesh.element_edges[k].iter().any(|&e| edge_marked[e]) {
            mark(ref_edge, &mut edge_marked, &mut stack);
        }
    }
    refine_marked_edges(mesh, &edge_marked)
}

/// Two bisection rounds for every element: each triangle is replaced by four children.
pub fn uniform_refine(mesh: &Mesh) -> Mesh {
    uniform_refine_with_parents(mesh).0
}

pub fn uniform_refine_with_parents(mesh: &Mesh) -> (Mesh, Vec<usize>) {
    refine_marked_edges(mesh, &vec![true; mesh.n_edges()])
}

fn refine_marked_edges(mesh: &Mesh, edge_marked: &[bool]) -> (Mesh, Vec<usize>) {
    let mut vertices = mesh.vertices.clone();
    let mut midpoints: HashMap<(usize, usize), Option<usize>> = HashMap::new();
    for (e, edge) in mesh.edges.iter().enumerate() {
        if edge_marked[e] {
            midpoints.insert((edge.endpoints[0], edge.endpoints[1]), None);
        }
    }

    let mut elements = Vec::with_capacity(mesh.n_elements() + 2 * midpoints.len());
    let mut parents = Vec::with_capacity(elements.capacity());
    let mut work = Vec::new();
    for (k, &el) in mesh.elements.iter().enumerate() {
        work.push(el);
        while let Some(el) = work.pop() {
            let r = el.refinement_edge as usize;
            let c = el.v[r];
            let (a, b) = el.edge_vertices(r);
            let key = (a.min(b), a.max(b));
            let Some(slot) = midpoints.get_mut(&key) else {
                elements.push(el);
                parents.push(k);
                continue;
            };
            let m = *slot.get_or_insert_with(|| {
                let (pa, pb) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                vertices.len() - 1
            });
            let generation = el.generation + 1;
            // Pushed in reverse so the child at `a` is emitted first.
            work.push(Element { v: [m, b, c], refinement_edge: 0, generation });
            work.push(Element { v: [a, m, c], refinement_edge: 1, generation });
        }
    }
    let refined = Mesh::from_parts(mesh.problem, vertices, elements).expect("bisection preserves validity");
    (refined, parents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{initial_mesh, Problem};

    #[test]
    fn empty_marking_is_identity() {
        let m = initial_mesh(Problem::Uc);
        let r = bisect(&m, &[]);
        assert_eq!(r.vertices, m.vertices);
        assert_eq!(r.elements, m.elements);
    }

    #[test]
    fn bisect_all_initial_uc() {
        let m = initial_mesh(Problem::Uc);
        let r = bisect(&m, &[0, 1, 2, 3]);
        assert_eq!((r.n_elements(), r.n_vertices()), (8, 9));
        r.check_conforming().unwrap();
    }

    #[test]
    fn single_initial_uc_bisection_needs_no_closure() {
        // The initial refinement edges are boundary edges, so no neighbour is affected.
        let m = initial_mesh(Problem::Uc);
        let r = bisect(&m, &[0]);
        assert_eq!((r.n_elements(), r.n_vertices()), (5, 6));
        r.check_conforming().unwrap();
    }

    #[test]
    fn closure_bisects_neighbour_across_refinement_edge() {
        let m = bisect(&initial_mesh(Problem::Uc), &[0, 1, 2, 3]);
        // Element 0 now has refinement edge on the spoke from (0,0), shared with another child.
        let r = m.elements[0].refinement_edge as usize;
        let e = m.element_edges[0][r];
        assert!(m.edges[e].elements.1.is_some());
        let refined = bisect(&m, &[0]);
        refined.check_conforming().unwrap();
        assert!(refined.n_elements() >= 10);
        let (k1, k2) = m.edges[e].elements;
        let neighbour = if k1 == 0 { k2.unwrap() } else { k1 };
        let (_, parents) = bisect_with_parents(&m, &[0]);
        assert!(parents.iter().filter(|&&p| p == neighbour).count() >= 2);
    }

    #[test]
    fn uniform_counts() {
        let uc = initial_mesh(Problem::Uc);
        let r1 = uniform_refine(&uc);
        assert_eq!(r1.n_elements(), 16);
        assert_eq!(uniform_refine(&r1).n_elements(), 64);
        assert_eq!(uniform_refine(&initial_mesh(Problem::Cauchy)).n_elements(), 32);
        let (r, parents) = uniform_refine_with_parents(&r1);
        r.check_conforming().unwrap();
        for k in 0..r1.n_elements() {
            assert_eq!(parents.iter().filter(|&&p| p == k).count(), 4);
        }
    }
}
