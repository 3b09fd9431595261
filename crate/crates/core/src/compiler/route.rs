use crate::arch::{within, Architecture, Site, SiteSet};

/// Swaps that bring a gate's operands pairwise within range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Gathering {
    /// Site pairs to swap, in order.
    pub swaps: Vec<(Site, Site)>,
    /// Operand sites after the swaps, in operand order.
    pub sites: Vec<Site>,
    pub expansions: usize,
}

/// Moves operands towards the last one (the anchor) until every pair is
/// within `range`.
///
/// Each operand in turn is walked along the shortest interaction path to
/// the nearest site within range of every operand already settled. Settled
/// sites are never crossed; `forbidden` sites are never entered. Returns
/// `Err(site)` with the operand that could not be brought in.
pub(crate) fn gather(
    arch: &Architecture,
    operands: &[Site],
    range: f64,
    forbidden: &SiteSet,
) -> Result<Gathering, Site> {
    let mut sites = operands.to_vec();
    let mut swaps = Vec::new();
    let mut expansions = 0;
    let Some((&anchor, rest)) = operands.split_last() else {
        return Ok(Gathering {
            swaps,
            sites,
            expansions,
        });
    };
    let mut settled = vec![anchor];
    for i in 0..rest.len() {
        let cur = sites[i];
        if settled.iter().all(|&s| within(cur, s, range)) {
            settled.push(cur);
            continue;
        }
        let mut blocked = forbidden.clone();
        for &s in &settled {
            blocked.insert(s);
        }
        let search = arch
            .shortest_path_to(cur, range, &blocked, |s| {
                !settled.contains(&s) && settled.iter().all(|&t| within(s, t, range))
            })
            .ok_or(cur)?;
        expansions += search.expansions;
        for hop in search.path.windows(2) {
            let (from, to) = (hop[0], hop[1]);
            swaps.push((from, to));
            // an operand still waiting its turn may be displaced backwards
            for s in sites[i + 1..rest.len()].iter_mut() {
                if *s == to {
                    *s = from;
                }
            }
        }
        let end = *search.path.last().unwrap();
        sites[i] = end;
        settled.push(end);
    }
    Ok(Gathering {
        swaps,
        sites,
        expansions,
    })
}
