use std::collections::{BTreeSet, VecDeque};

use super::topology::Topology;

/// Hop distances to `dst` avoiding `blocked` nodes; `usize::MAX` marks unreachable nodes.
fn distances_avoiding(topo: &Topology, dst: usize, blocked: &[bool]) -> Vec<usize> {
    let mut dist = vec![usize::MAX; topo.len()];
    if blocked[dst] {
        return dist;
    }
    dist[dst] = 0;
    let mut queue = VecDeque::from([dst]);
    while let Some(u) = queue.pop_front() {
        for &v in topo.neighbors(u) {
            if !blocked[v] && dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Minimum-hop, then lexicographically smallest, path from `from` to `dst` that avoids
/// `blocked` nodes and leaves `from` through none of `banned_first`.
fn spur_path(topo: &Topology, from: usize, dst: usize, blocked: &mut [bool], banned_first: &[usize]) -> Option<Vec<usize>> {
    blocked[from] = true;
    let dist = distances_avoiding(topo, dst, blocked);
    blocked[from] = false;
    let first = topo
        .neighbors(from)
        .iter()
        .copied()
        .filter(|v| dist[*v] != usize::MAX && !banned_first.contains(v))
        .min_by_key(|&v| (dist[v], v))?;
    let mut path = vec![from, first];
    let mut cur = first;
    while cur != dst {
        // Neighbor lists are sorted, so the first match is the smallest id.
        cur = *topo.neighbors(cur).iter().find(|&&v| dist[v] == dist[cur] - 1)?;
        path.push(cur);
    }
    Some(path)
}

/// Up to `k` loop-free paths from `src` to `dst`, shortest first by hop count, equal-length
/// paths in lexicographic order of their node ids.
///
/// Yen's deviation scheme under the total order (hop count, node sequence): every spur
/// search returns the least path in that order, and the order is preserved by a common
/// prefix, so the accepted paths come out exactly sorted.
pub fn k_shortest_paths(topo: &Topology, src: usize, dst: usize, k: usize) -> Vec<Vec<usize>> {
    let n = topo.len();
    if k == 0 || src >= n || dst >= n || src == dst {
        return Vec::new();
    }
    let mut blocked = vec![false; n];
    let Some(first) = spur_path(topo, src, dst, &mut blocked, &[]) else {
        return Vec::new();
    };
    let mut accepted = vec![first];
    let mut pending: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
    while accepted.len() < k {
        let prev = accepted.last().expect("nonempty").clone();
        for i in 0..prev.len() - 1 {
            let root = &prev[..=i];
            let banned: Vec<usize> =
                accepted.iter().filter(|p| p.len() > i + 1 && &p[..=i] == root).map(|p| p[i + 1]).collect();
            for &r in &root[..i] {
                blocked[r] = true;
            }
            let spur = spur_path(topo, prev[i], dst, &mut blocked, &banned);
            for &r in &root[..i] {
                blocked[r] = false;
            }
            if let Some(spur) = spur {
                let mut full = root[..i].to_vec();
                full.extend(spur);
                if !accepted.contains(&full) {
                    pending.insert((full.len(), full));
                }
            }
        }
        match pending.pop_first() {
            Some((_, p)) => accepted.push(p),
            None => break,
        }
    }
    accepted
}

/// Minimum-hop path with the smallest node sequence among ties.
pub fn shortest_path(topo: &Topology, src: usize, dst: usize) -> Option<Vec<usize>> {
    k_shortest_paths(topo, src, dst, 1).pop()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::topology::{NetNode, NodeKind};

    fn graph(n: usize, links: &[(usize, usize)]) -> Topology {
        let nodes = vec![NetNode { x: 0.0, y: 0.0, kind: NodeKind::Relay }; n];
        Topology::new(nodes, links, 1.0).unwrap()
    }

    #[test]
    fn line_has_one_path() {
        let t = graph(3, &[(0, 1), (1, 2)]);
        assert_eq!(k_shortest_paths(&t, 0, 2, 4), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn diamond_tie_break_is_lexicographic() {
        // A=0, B=1, C=2, D=3
        let t = graph(4, &[(0, 2), (0, 1), (1, 3), (2, 3)]);
        assert_eq!(k_shortest_paths(&t, 0, 3, 2), vec![vec![0, 1, 3], vec![0, 2, 3]]);
        assert_eq!(shortest_path(&t, 0, 3), Some(vec![0, 1, 3]));
    }

    #[test]
    fn longer_paths_follow_shorter() {
        let t = graph(5, &[(0, 1), (1, 4), (0, 2), (2, 3), (3, 4)]);
        assert_eq!(k_shortest_paths(&t, 0, 4, 5), vec![vec![0, 1, 4], vec![0, 2, 3, 4]]);
    }

    #[test]
    fn unreachable_gives_nothing() {
        let t = graph(4, &[(0, 1), (2, 3)]);
        assert!(k_shortest_paths(&t, 0, 3, 4).is_empty());
        assert!(k_shortest_paths(&t, 1, 1, 4).is_empty());
    }
}
