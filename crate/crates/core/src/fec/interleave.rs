//! Byte block interleaver: written row by row into `depth` rows, read
//! column by column. A ragged last row is skipped on read.

fn order(n: usize, depth: usize) -> impl Iterator<Item = usize> {
    let depth = depth.max(1);
    let cols = n.div_ceil(depth);
    (0..cols).flat_map(move |c| (0..depth).map(move |r| r * cols + c)).filter(move |&i| i < n)
}

pub fn interleave(data: &[u8], depth: usize) -> Vec<u8> {
    order(data.len(), depth).map(|i| data[i]).collect()
}

pub fn deinterleave(data: &[u8], depth: usize) -> Vec<u8> {
    let mut out = vec![0u8; data.len()];
    for (src, dst) in order(data.len(), depth).enumerate() {
        out[dst] = data[src];
    }
    out
}
