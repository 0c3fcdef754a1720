//! Stack-distance reference model for LRU, kept independent of [`super::CacheState`].

use std::collections::HashMap;

use super::CacheGeometry;

/// Counts LRU hits for `accesses` by per-set stack distance: an access hits
/// iff fewer than `ways` distinct lines of its set were touched since the
/// previous access to the same line.
pub fn lru_reference_hits(accesses: &[u64], geometry: &CacheGeometry) -> u64 {
    let shift = geometry.line_size.trailing_zeros();
    let mut stacks: HashMap<u64, Vec<u64>> = HashMap::new();
    let mut hits = 0;
    for &addr in accesses {
        let line = addr >> shift;
        let set = line % geometry.sets as u64;
        let stack = stacks.entry(set).or_default();
        if let Some(depth) = stack.iter().position(|&l| l == line) {
            if depth < geometry.ways {
                hits += 1;
            }
            stack.remove(depth);
        }
        stack.insert(0, line);
    }
    hits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repeat_reference_hits() {
        let g = CacheGeometry::new(4, 2, 64).unwrap();
        assert_eq!(lru_reference_hits(&[0x40, 0x40], &g), 1);
        assert_eq!(lru_reference_hits(&[0x40, 0x44], &g), 1);
    }

    #[test]
    fn second_pass_fits_fully_associative() {
        let g = CacheGeometry::new(1, 16, 64).unwrap();
        let pass: Vec<u64> = (0..16).map(|i| i * 64).collect();
        let twice: Vec<u64> = pass.iter().chain(pass.iter()).copied().collect();
        assert_eq!(lru_reference_hits(&twice, &g), 16);
    }

    #[test]
    fn distance_beyond_ways_misses() {
        let g = CacheGeometry::new(1, 2, 64).unwrap();
        // A B C A: distance of second A is 3 > 2
        assert_eq!(lru_reference_hits(&[0, 64, 128, 0], &g), 0);
    }
}
