use super::{DomainDiscretization, GeometryError, KdTree, NodeFilter};

/// Assigns each node selected by `for_which` a stencil of its `n` closest nodes
/// among those selected by `search_among`.
///
/// Stencils are ordered by increasing distance with the node itself first;
/// equidistant candidates are ordered by ascending index.
pub fn find_closest_stencils<const D: usize>(
    domain: &mut DomainDiscretization<D>,
    n: usize,
    for_which: &NodeFilter,
    search_among: &NodeFilter,
) -> Result<(), GeometryError> {
    if n == 0 {
        return Err(GeometryError::EmptyStencil);
    }
    let targets = for_which.select(domain);
    let candidates = search_among.select(domain);
    for &i in &targets {
        if candidates.binary_search(&i).is_err() {
            return Err(GeometryError::NotInSearchSet { node: i });
        }
        if n > candidates.len() {
            return Err(GeometryError::NotEnoughCandidates {
                node: i,
                requested: n,
                available: candidates.len(),
            });
        }
    }
    let tree = KdTree::with_ids(candidates.iter().map(|&i| (*domain.pos(i), i)).collect());
    for &i in &targets {
        let mut stencil = Vec::with_capacity(n);
        stencil.push(i);
        stencil.extend(
            tree.knn(domain.pos(i), n)
                .into_iter()
                .map(|(j, _)| j)
                .filter(|&j| j != i)
                .take(n - 1),
        );
        domain.set_stencil_unchecked(i, stencil);
    }
    Ok(())
}

/// Like [`find_closest_stencils`], but targets need not belong to the search
/// set: each selected node gets itself followed by its `n - 1` closest
/// candidates. Useful for boundary nodes whose stencils should only reach
/// into the interior.
pub fn find_closest_stencils_from<const D: usize>(
    domain: &mut DomainDiscretization<D>,
    n: usize,
    for_which: &NodeFilter,
    search_among: &NodeFilter,
) -> Result<(), GeometryError> {
    if n == 0 {
        return Err(GeometryError::EmptyStencil);
    }
    let targets = for_which.select(domain);
    let candidates = search_among.select(domain);
    for &i in &targets {
        let available = candidates.len() + usize::from(candidates.binary_search(&i).is_err());
        if n > available {
            return Err(GeometryError::NotEnoughCandidates {
                node: i,
                requested: n,
                available,
            });
        }
    }
    let tree = KdTree::with_ids(candidates.iter().map(|&i| (*domain.pos(i), i)).collect());
    for &i in &targets {
        let mut stencil = Vec::with_capacity(n);
        stencil.push(i);
        // one extra neighbor in case `i` is itself a candidate
        let k = n.min(candidates.len());
        stencil.extend(
            tree.knn(domain.pos(i), k)
                .into_iter()
                .map(|(j, _)| j)
                .filter(|&j| j != i)
                .take(n - 1),
        );
        domain.set_stencil_unchecked(i, stencil);
    }
    Ok(())
}
